//! Within-topic belief iteration `b(t+1) = W b(t)` and its limit objects.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{max_abs_diff, range, Real};
use crate::stochastic::{has_positive_column, RowStochasticMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationOptions<T> {
    /// Stop once the max-abs belief change of one round drops below this.
    pub tol: T,
    pub max_rounds: usize,
    /// A belief range below this counts as consensus.
    pub consensus_tol: T,
    /// Any `|belief|` above this flags divergence.
    pub overflow_bound: T,
}

impl<T: Real> Default for IterationOptions<T> {
    fn default() -> Self {
        IterationOptions {
            tol: T::default_iteration_tolerance(),
            max_rounds: 100_000,
            consensus_tol: T::default_consensus_tolerance(),
            overflow_bound: T::lit(1e12),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitResult<T> {
    pub beliefs: Vec<T>,
    pub converged: bool,
    pub rounds_used: usize,
    pub is_consensus: bool,
    pub consensus_value: Option<T>,
    pub diverged: bool,
}

impl<T: Real> LimitResult<T> {
    pub(crate) fn finish(beliefs: Vec<T>, converged: bool, rounds_used: usize, opts: &IterationOptions<T>) -> Self {
        let is_consensus = !beliefs.is_empty() && range(&beliefs) < opts.consensus_tol;
        let consensus_value = is_consensus.then(|| {
            beliefs.iter().copied().sum::<T>() / T::lit(beliefs.len() as f64)
        });
        LimitResult { beliefs, converged, rounds_used, is_consensus, consensus_value, diverged: false }
    }

    pub(crate) fn diverged(beliefs: Vec<T>, rounds_used: usize) -> Self {
        LimitResult {
            beliefs,
            converged: false,
            rounds_used,
            is_consensus: false,
            consensus_value: None,
            diverged: true,
        }
    }
}

/// Left fixed vector of an update matrix, signed in the opposition model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceVector<T> {
    pub s: Vec<T>,
}

impl<T: Real> InfluenceVector<T> {
    /// `⟨s, b0⟩`, the consensus value reached from `b0`.
    pub fn consensus_of(&self, b0: &[T]) -> T {
        self.s.iter().zip(b0).map(|(a, b)| *a * *b).sum()
    }
}

pub fn step<T: Real>(w: &RowStochasticMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    w.as_matrix().mul_vec(b)
}

/// Iterates any square matrix, reporting divergence in the result instead of failing.
///
/// `observer` sees round 0 and every later round.
pub fn iterate_linear<T: Real>(
    m: &Matrix<T>,
    b0: &[T],
    opts: &IterationOptions<T>,
    mut observer: impl FnMut(usize, &[T]),
) -> Result<LimitResult<T>> {
    if opts.tol <= T::zero() {
        return Err(Error::InvalidParameter("iteration tolerance must be positive".into()));
    }
    if b0.len() != m.cols() {
        return Err(Error::DimensionMismatch { expected: m.cols(), got: b0.len() });
    }
    let mut b = b0.to_vec();
    observer(0, &b);
    for t in 1..=opts.max_rounds {
        let next = m.mul_vec(&b)?;
        if next.iter().any(|x| !x.is_finite() || x.abs() > opts.overflow_bound) {
            return Ok(LimitResult::diverged(b, t));
        }
        let change = max_abs_diff(&next, &b);
        b = next;
        observer(t, &b);
        if change < opts.tol {
            return Ok(LimitResult::finish(b, true, t, opts));
        }
    }
    Ok(LimitResult::finish(b, false, opts.max_rounds, opts))
}

pub fn iterate_to_limit<T: Real>(
    w: &RowStochasticMatrix<T>,
    b0: &[T],
    opts: &IterationOptions<T>,
) -> Result<LimitResult<T>> {
    let res = iterate_linear(w.as_matrix(), b0, opts, |_, _| {})?;
    if res.diverged {
        return Err(Error::Diverged { rounds: res.rounds_used, bound: opts.overflow_bound.to_f64_lossy() });
    }
    Ok(res)
}

/// Social influence `s = Wᵀ s`, `Σ s = 1`, for a consensus-inducing `W`.
pub fn social_influence<T: Real>(w: &RowStochasticMatrix<T>) -> Result<InfluenceVector<T>> {
    if has_positive_column(w, None).is_none() {
        return Err(Error::NoConsensus);
    }
    left_fixed_vector(w.as_matrix())
}

/// Normalized left fixed vector by power iteration, with a dense-solve fallback.
pub(crate) fn left_fixed_vector<T: Real>(m: &Matrix<T>) -> Result<InfluenceVector<T>> {
    let n = m.rows();
    let tol = T::stochastic_tolerance();
    let mut s = vec![T::one() / T::lit(n as f64); n];
    for _ in 0..20_000 {
        let next = m.vec_mul(&s)?;
        let resid = max_abs_diff(&next, &s);
        s = next;
        if resid < tol {
            let total: T = s.iter().copied().sum();
            s.iter_mut().for_each(|x| *x = *x / total);
            return Ok(InfluenceVector { s });
        }
    }
    // (Mᵀ − I) s = 0 with the last equation replaced by Σ s = 1
    let mut a = m.transpose().sub(&Matrix::identity(n))?;
    for j in 0..n {
        a[(n - 1, j)] = T::one();
    }
    let mut rhs = vec![T::zero(); n];
    rhs[n - 1] = T::one();
    Ok(InfluenceVector { s: a.solve(&rhs)? })
}

pub fn step_self_weight<T: Real>(w: &RowStochasticMatrix<T>, b: &[T], lambda: T) -> Result<Vec<T>> {
    if !(lambda > T::zero() && lambda <= T::one()) {
        return Err(Error::BadLambda(lambda.to_f64_lossy()));
    }
    let wb = step(w, b)?;
    Ok(b.iter().zip(&wb).map(|(&x, &y)| (T::one() - lambda) * x + lambda * y).collect())
}

/// Self-weight schedule `λ_t` for rounds `t = 0, 1, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LambdaSchedule {
    Constant { lambda: f64 },
    /// `λ_t = 1/(t+1)`.
    Harmonic,
    /// `λ_t = ratio^t`; its sum is finite, so no agreement with `λ ≡ 1` is implied.
    Geometric { ratio: f64 },
}

impl LambdaSchedule {
    pub fn lambda(&self, t: usize) -> f64 {
        match *self {
            LambdaSchedule::Constant { lambda } => lambda,
            LambdaSchedule::Harmonic => 1.0 / (t as f64 + 1.0),
            LambdaSchedule::Geometric { ratio } => ratio.powi(t.min(i32::MAX as usize) as i32),
        }
    }

    pub fn has_divergent_sum(&self) -> bool {
        !matches!(self, LambdaSchedule::Geometric { ratio } if *ratio < 1.0)
    }
}

/// Iterates `((1−λ_t) I + λ_t W) b`.
///
/// Stops on the fixed-point residual `max|W b − b| < tol`, not on the step
/// size: with a vanishing `λ_t` the step shrinks long before the beliefs settle.
pub fn iterate_self_weight<T: Real>(
    w: &RowStochasticMatrix<T>,
    b0: &[T],
    schedule: &LambdaSchedule,
    opts: &IterationOptions<T>,
    mut observer: impl FnMut(usize, &[T]),
) -> Result<LimitResult<T>> {
    if b0.len() != w.n() {
        return Err(Error::DimensionMismatch { expected: w.n(), got: b0.len() });
    }
    let mut b = b0.to_vec();
    observer(0, &b);
    for t in 0..opts.max_rounds {
        let wb = step(w, &b)?;
        let resid = max_abs_diff(&wb, &b);
        if resid < opts.tol {
            return Ok(LimitResult::finish(b, true, t, opts));
        }
        let lambda_f = schedule.lambda(t);
        let lambda = T::lit(lambda_f);
        if lambda_f >= 0.0 && lambda == T::zero() {
            // a finite-sum schedule that has died out: beliefs are frozen
            return Ok(LimitResult::finish(b, false, t, opts));
        }
        if !(lambda > T::zero() && lambda <= T::one()) {
            return Err(Error::BadLambda(lambda_f));
        }
        for (x, y) in b.iter_mut().zip(&wb) {
            *x = *x + lambda * (*y - *x);
        }
        observer(t + 1, &b);
    }
    Ok(LimitResult::finish(b, false, opts.max_rounds, opts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn absorbing() -> RowStochasticMatrix<f64> {
        RowStochasticMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap()
    }

    #[test]
    fn step_examples() {
        let id = RowStochasticMatrix::identity(2);
        assert_eq!(step(&id, &[3.0, 7.0]).unwrap(), vec![3.0, 7.0]);
        let u = RowStochasticMatrix::uniform(2);
        assert_eq!(step(&u, &[0.0, 1.0]).unwrap(), vec![0.5, 0.5]);
        let (mu, z) = (0.3, 0.9);
        assert_eq!(step(&absorbing(), &[mu, z]).unwrap(), vec![mu, 0.5 * mu + 0.5 * z]);
        assert!(matches!(step(&id, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn limit_examples() {
        let opts = IterationOptions::default();
        let r = iterate_to_limit(&absorbing(), &[0.3, 0.9], &opts).unwrap();
        assert!(r.converged && r.is_consensus);
        assert!((r.consensus_value.unwrap() - 0.3).abs() < 1e-9);

        let u = RowStochasticMatrix::uniform(4);
        let b0 = [1.0, 2.0, 4.0, 9.0];
        let r = iterate_to_limit(&u, &b0, &opts).unwrap();
        assert!(r.is_consensus);
        assert!((r.consensus_value.unwrap() - 4.0).abs() < 1e-12);
        // one step already produces the mean
        assert!(step(&u, &b0).unwrap().iter().all(|x| (x - 4.0).abs() < 1e-12));

        let id = RowStochasticMatrix::identity(3);
        let r = iterate_to_limit(&id, &[1.0, 2.0, 3.0], &opts).unwrap();
        assert!(r.converged && !r.is_consensus);
        assert_eq!(r.beliefs, vec![1.0, 2.0, 3.0]);
        assert!(r.consensus_value.is_none());
    }

    #[test]
    fn diverging_matrix_flagged() {
        let m = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let opts = IterationOptions { overflow_bound: 1e6, ..Default::default() };
        let r = iterate_linear(&m, &[1.0, 1.0], &opts, |_, _| {}).unwrap();
        assert!(r.diverged && !r.converged);
    }

    #[test]
    fn influence_examples() {
        let u: RowStochasticMatrix<f64> = RowStochasticMatrix::uniform(5);
        let s = social_influence(&u).unwrap();
        assert!(s.s.iter().all(|x| (x - 0.2).abs() < 1e-12));

        let s = social_influence(&absorbing()).unwrap();
        assert!((s.s[0] - 1.0).abs() < 1e-12 && s.s[1].abs() < 1e-12);
        // cross-check against a high power of W
        let p = absorbing().pow(200);
        assert!((p.get(1, 0) - s.s[0]).abs() < 1e-12);

        let id: RowStochasticMatrix<f64> = RowStochasticMatrix::identity(3);
        assert_eq!(social_influence(&id), Err(Error::NoConsensus));
    }

    #[test]
    fn form_a_influence_uniform() {
        let n = 4;
        let alpha = 0.1;
        let beta = 1.0 - 3.0 * alpha;
        let m: Matrix<f64> = Matrix::from_fn(n, n, |i, j| if i == j { beta } else { alpha });
        let w = RowStochasticMatrix::new(m).unwrap();
        let s = social_influence(&w).unwrap();
        assert!(s.s.iter().all(|x| (x - 0.25).abs() < 1e-12));
    }

    #[test]
    fn fallback_solve_matches_power_iteration() {
        let m: Matrix<f64> = Matrix::from_rows(&[vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3], vec![0.0, 0.4, 0.6]]).unwrap();
        let s = left_fixed_vector(&m).unwrap();
        let mut a = m.transpose().sub(&Matrix::identity(3)).unwrap();
        for j in 0..3 {
            a[(2, j)] = 1.0;
        }
        let direct = a.solve(&[0.0, 0.0, 1.0]).unwrap();
        for (x, y) in s.s.iter().zip(&direct) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn self_weight_examples() {
        let w = absorbing();
        let b = [0.3, 0.9];
        assert_eq!(step_self_weight(&w, &b, 1.0).unwrap(), step(&w, &b).unwrap());
        let tiny = step_self_weight(&w, &b, 1e-12).unwrap();
        assert!((tiny[1] - 0.9).abs() < 1e-11);
        assert_eq!(step_self_weight(&w, &b, 0.0), Err(Error::BadLambda(0.0)));
        assert_eq!(step_self_weight(&w, &b, 1.5), Err(Error::BadLambda(1.5)));

        // agent 1 obeys x ← x − λ_t (x − 0.3)/2, so x_t − 0.3 = 0.6 ∏ (1 − 1/(2(s+1))),
        // which decays like t^(−1/2)
        let opts = IterationOptions { tol: 1e-3, max_rounds: 10_000_000, consensus_tol: 1e-2, ..Default::default() };
        let r = iterate_self_weight(&w, &b, &LambdaSchedule::Harmonic, &opts, |_, _| {}).unwrap();
        assert!(r.converged);
        let gap: f64 = (0..r.rounds_used).map(|s| 1.0 - 0.5 / (s as f64 + 1.0)).product::<f64>() * 0.6;
        assert!((r.beliefs[1] - 0.3 - gap).abs() < 1e-9);
        assert!((r.beliefs[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn geometric_schedule_freezes() {
        let w = RowStochasticMatrix::uniform(2);
        let opts = IterationOptions { max_rounds: 100_000, ..Default::default() };
        let sched = LambdaSchedule::Geometric { ratio: 0.1 };
        assert!(!sched.has_divergent_sum());
        let r = iterate_self_weight(&w, &[0.0, 1.0], &sched, &opts, |_, _| {}).unwrap();
        // first step has λ_0 = 1 and the uniform matrix averages at once
        assert!(r.is_consensus);
        let w = absorbing();
        let r = iterate_self_weight(&w, &[0.0, 1.0], &sched, &opts, |_, _| {}).unwrap();
        assert!(!r.converged);
        assert!(r.beliefs[1] > 0.1);
    }
}
