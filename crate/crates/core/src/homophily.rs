//! Homophily: within a topic, agents also raise trust in others whose current
//! beliefs are close to their own.

use serde::{Deserialize, Serialize};

use crate::degroot::{IterationOptions, LimitResult};
use crate::error::{Error, Result};
use crate::scalar::{max_abs_diff, Real};
use crate::stochastic::{normalize_rows, RowStochasticMatrix};
use crate::trust::{adjust_weights, TFunction, Tau, TrustPolicy, WeightMemory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomophilyParams {
    pub eta_h: f64,
    pub delta_h: f64,
    pub eta_t: f64,
    pub delta_t: f64,
    #[serde(default)]
    pub tau: Tau,
    #[serde(default)]
    pub t_function: TFunction,
    #[serde(default = "default_tol")]
    pub belief_tol: f64,
    #[serde(default = "default_tol")]
    pub weight_tol: f64,
    #[serde(default = "default_rounds")]
    pub max_rounds: usize,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_rounds() -> usize {
    10_000
}

impl HomophilyParams {
    pub fn new(eta_h: f64, delta_h: f64, eta_t: f64, delta_t: f64) -> Self {
        HomophilyParams {
            eta_h,
            delta_h,
            eta_t,
            delta_t,
            tau: Tau::InitialBeliefs,
            t_function: TFunction::ConstantOne,
            belief_tol: default_tol(),
            weight_tol: default_tol(),
            max_rounds: default_rounds(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_h > 0.0) {
            return Err(Error::InvalidParameter(format!("delta_h must be positive, got {}", self.delta_h)));
        }
        if !(self.eta_h >= 0.0 && self.eta_t >= 0.0) {
            return Err(Error::InvalidParameter("eta_h and eta_t must be nonnegative".into()));
        }
        if !(self.belief_tol > 0.0 && self.weight_tol > 0.0) {
            return Err(Error::InvalidParameter("inner tolerances must be positive".into()));
        }
        self.truth_policy().validate()
    }

    pub fn truth_policy(&self) -> TrustPolicy {
        TrustPolicy {
            eta: self.eta_t,
            delta: self.delta_t,
            tau: self.tau,
            t_function: self.t_function,
            memory: WeightMemory::Renormalized,
        }
    }
}

/// Adds `δ_H` to every `W_ij` with `|b_j − b_i| < η_H` (the diagonal always), then normalizes.
pub fn homophily_adjust<T: Real>(
    w: &RowStochasticMatrix<T>,
    b: &[T],
    params: &HomophilyParams,
) -> Result<RowStochasticMatrix<T>> {
    let n = w.n();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    let (eta, inc) = (T::lit(params.eta_h), T::lit(params.delta_h));
    let mut raw = w.as_matrix().clone();
    for i in 0..n {
        let bi = b[i];
        let row = raw.row_mut(i);
        for (j, x) in row.iter_mut().enumerate() {
            if j == i || (b[j] - bi).abs() < eta {
                *x = *x + inc;
            }
        }
    }
    normalize_rows(&raw)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRunResult<T> {
    /// Beliefs at every recorded round, starting with round 0.
    pub trace: Vec<Vec<T>>,
    pub limit: LimitResult<T>,
    /// Weights at the last round, the estimate of `lim_t W(t)`.
    pub w_limit: RowStochasticMatrix<T>,
    pub beliefs_converged: bool,
    pub weights_converged: bool,
    pub clusters: Vec<Vec<usize>>,
}

impl<T: Real> TopicRunResult<T> {
    pub fn converged(&self) -> bool {
        self.beliefs_converged && self.weights_converged
    }
}

/// One topic: each round adjusts weights from `b(t)` and then sets `b(t+1) = W(t) b(t)`.
///
/// Runs until both beliefs and weights settle or the round cap is hit.
pub fn run_topic_homophily<T: Real>(
    w0: &RowStochasticMatrix<T>,
    b0: &[T],
    params: &HomophilyParams,
) -> Result<TopicRunResult<T>> {
    let mut trace = Vec::new();
    let mut res = run_topic_homophily_with(w0, b0, params, |_, b| trace.push(b.to_vec()))?;
    res.trace = trace;
    Ok(res)
}

/// As [`run_topic_homophily`] but streams rounds to `observer` instead of storing them.
pub fn run_topic_homophily_with<T: Real>(
    w0: &RowStochasticMatrix<T>,
    b0: &[T],
    params: &HomophilyParams,
    mut observer: impl FnMut(usize, &[T]),
) -> Result<TopicRunResult<T>> {
    params.validate()?;
    if b0.len() != w0.n() {
        return Err(Error::DimensionMismatch { expected: w0.n(), got: b0.len() });
    }
    let (btol, wtol) = (T::lit(params.belief_tol), T::lit(params.weight_tol));
    let mut w = w0.clone();
    let mut b = b0.to_vec();
    observer(0, &b);
    let mut rounds = 0;
    let (mut bconv, mut wconv) = (false, false);
    while rounds < params.max_rounds {
        let w_next = homophily_adjust(&w, &b, params)?;
        let b_next = w_next.as_matrix().mul_vec(&b)?;
        let db = max_abs_diff(&b_next, &b);
        let dw = w_next.max_abs_diff(&w);
        w = w_next;
        b = b_next;
        rounds += 1;
        observer(rounds, &b);
        bconv = db < btol;
        wconv = dw < wtol;
        if bconv && wconv {
            break;
        }
    }
    let opts = IterationOptions::<T>::default();
    let limit = LimitResult::finish(b, bconv && wconv, rounds, &opts);
    let clusters = cluster_detect(&limit.beliefs, T::lit(params.eta_h).max(T::min_positive_value()));
    Ok(TopicRunResult {
        trace: Vec::new(),
        limit,
        w_limit: w,
        beliefs_converged: bconv,
        weights_converged: wconv,
        clusters,
    })
}

/// Truth-based increments on the limiting weights of the previous topic.
pub fn truth_adjust_between_topics<T: Real>(
    w_limit: &RowStochasticMatrix<T>,
    members: &[usize],
    params: &HomophilyParams,
) -> Result<RowStochasticMatrix<T>> {
    adjust_weights(w_limit, members, &params.truth_policy())
}

/// Sorts beliefs and splits wherever neighbors are at least `gap` apart.
pub fn cluster_detect<T: Real>(beliefs: &[T], gap: T) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..beliefs.len()).collect();
    idx.sort_by(|&a, &b| beliefs[a].partial_cmp(&beliefs[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (pos, &i) in idx.iter().enumerate() {
        if pos == 0 || beliefs[i] - beliefs[idx[pos - 1]] >= gap {
            out.push(vec![i]);
        } else if let Some(last) = out.last_mut() {
            last.push(i);
        }
    }
    for c in &mut out {
        c.sort_unstable();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn params(delta_h: f64) -> HomophilyParams {
        HomophilyParams::new(0.2, delta_h, 0.2, 0.1)
    }

    fn w2(delta_t: f64) -> RowStochasticMatrix<f64> {
        let mut m = Matrix::identity(4);
        for i in 1..4 {
            m[(i, 0)] = delta_t;
        }
        m[(0, 0)] = 1.0 + delta_t;
        normalize_rows(&m).unwrap()
    }

    #[test]
    fn adjust_examples() {
        let w: RowStochasticMatrix<f64> = RowStochasticMatrix::identity(3);
        let p = params(0.5);
        let all = homophily_adjust(&w, &[1.0, 1.0, 1.0], &p).unwrap();
        let expect = normalize_rows(&Matrix::from_fn(3, 3, |i, j| if i == j { 1.5 } else { 0.5 })).unwrap();
        assert!(all.max_abs_diff(&expect) < 1e-15);
        let none = homophily_adjust(&w, &[0.0, 1.0, 2.0], &p).unwrap();
        assert!(none.max_abs_diff(&w) < 1e-15);

        let w = w2(0.1);
        let a = homophily_adjust(&w, &[1.0, 1.0, 0.0, 0.0], &p).unwrap();
        // oracle: increments only inside {0,1} and {2,3}
        let mut raw = w.as_matrix().clone();
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (2, 3), (3, 2), (3, 3)] {
            raw[(i, j)] += 0.5;
        }
        assert!(a.max_abs_diff(&normalize_rows(&raw).unwrap()) < 1e-15);
    }

    #[test]
    fn hom_example_regimes() {
        let b0 = [1.0, 1.0, 0.0, 0.0];
        let weak = run_topic_homophily(&w2(0.1), &b0, &params(0.001)).unwrap();
        assert!(weak.converged());
        assert_eq!(weak.clusters.len(), 1);
        assert!(weak.limit.is_consensus);

        let strong = run_topic_homophily(&w2(0.1), &b0, &params(0.5)).unwrap();
        assert!(strong.converged());
        assert_eq!(strong.clusters, vec![vec![2, 3], vec![0, 1]]);
        for w in strong.trace.iter() {
            assert!((w[0] - w[1]).abs() < 1e-15);
            assert!((w[2] - w[3]).abs() < 1e-15);
        }
    }

    #[test]
    fn single_agent_fixed_point() {
        let w: RowStochasticMatrix<f64> = RowStochasticMatrix::identity(1);
        let r = run_topic_homophily(&w, &[0.7], &params(0.3)).unwrap();
        assert_eq!(r.limit.beliefs, vec![0.7]);
        assert!(r.converged());
    }

    #[test]
    fn truth_adjustment() {
        let w = w2(0.1);
        let p = HomophilyParams { delta_t: 100.0, ..params(0.1) };
        assert_eq!(truth_adjust_between_topics(&w, &[], &p).unwrap(), w);
        let id: RowStochasticMatrix<f64> = RowStochasticMatrix::identity(3);
        let a = truth_adjust_between_topics(&id, &[1], &p).unwrap();
        assert!((a.get(0, 1) - 100.0 / 101.0).abs() < 1e-15);
        let z = HomophilyParams { t_function: TFunction::ZeroAtN, ..p };
        assert_eq!(truth_adjust_between_topics(&id, &[0, 1, 2], &z).unwrap(), id);
    }

    #[test]
    fn clusters() {
        assert_eq!(cluster_detect(&[0.3, 0.3, 0.3], 0.1), vec![vec![0, 1, 2]]);
        assert_eq!(cluster_detect(&[0.0, 0.0, 1.0, 1.0], 0.5), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(cluster_detect(&[1.0, 0.0, 0.55, 0.3], 0.5), vec![vec![0, 1, 2, 3]]);
        assert_eq!(cluster_detect(&[1.0, 0.0, 0.55, 0.3], 0.4), vec![vec![1, 2, 3], vec![0]]);
        assert!(cluster_detect::<f64>(&[], 0.5).is_empty());
    }

    #[test]
    fn rejects_zero_delta_h() {
        let w: RowStochasticMatrix<f64> = RowStochasticMatrix::identity(2);
        assert!(run_topic_homophily(&w, &[0.0, 1.0], &params(0.0)).is_err());
    }
}
