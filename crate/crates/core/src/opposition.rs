//! Two opposing groups: followers within a group, soft opposition `x ↦ −x` across.

use serde::{Deserialize, Serialize};

use crate::degroot::{iterate_linear, IterationOptions, LimitResult};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::stochastic::RowStochasticMatrix;
use crate::trust::TrustPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// Group membership of every agent. Links within a group follow, links across oppose.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OppositionStructure {
    pub sides: Vec<Side>,
}

impl OppositionStructure {
    /// First `n1` agents in group A, the next `n2` in group B.
    pub fn split(n1: usize, n2: usize) -> Self {
        let mut sides = vec![Side::A; n1];
        sides.extend(std::iter::repeat_n(Side::B, n2));
        OppositionStructure { sides }
    }

    pub fn n(&self) -> usize {
        self.sides.len()
    }

    pub fn sign<T: Real>(&self, i: usize) -> T {
        match self.sides[i] {
            Side::A => T::one(),
            Side::B => -T::one(),
        }
    }

    pub fn same_side(&self, i: usize, j: usize) -> bool {
        self.sides[i] == self.sides[j]
    }
}

/// Uniform block weights: `a` within A, `b` from A to B, `c` from B to A, `d` within B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OppositionParams {
    pub n1: usize,
    pub n2: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl OppositionParams {
    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::InvalidParameter("both groups need at least one member".into()));
        }
        if [self.a, self.b, self.c, self.d].iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidParameter("block weights must be nonnegative".into()));
        }
        let ra = self.n1 as f64 * self.a + self.n2 as f64 * self.b;
        let rb = self.n1 as f64 * self.c + self.n2 as f64 * self.d;
        if (ra - 1.0).abs() > 1e-12 || (rb - 1.0).abs() > 1e-12 {
            return Err(Error::NotStochastic(format!("block rows sum to {ra} and {rb}")));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn structure(&self) -> OppositionStructure {
        OppositionStructure::split(self.n1, self.n2)
    }

    pub fn weight_matrix<T: Real>(&self) -> Result<RowStochasticMatrix<T>> {
        self.validate()?;
        let n1 = self.n1;
        let m = Matrix::from_fn(self.n(), self.n(), |i, j| {
            T::lit(match (i < n1, j < n1) {
                (true, true) => self.a,
                (true, false) => self.b,
                (false, true) => self.c,
                (false, false) => self.d,
            })
        });
        RowStochasticMatrix::new(m)
    }
}

/// `A_ij = W_ij` within a group and `−W_ij` across.
#[allow(non_snake_case)]
pub fn build_A<T: Real>(w: &RowStochasticMatrix<T>, f: &OppositionStructure) -> Result<Matrix<T>> {
    if f.n() != w.n() {
        return Err(Error::DimensionMismatch { expected: w.n(), got: f.n() });
    }
    let m = w.as_matrix();
    Ok(Matrix::from_fn(w.n(), w.n(), |i, j| if f.same_side(i, j) { m[(i, j)] } else { -m[(i, j)] }))
}

/// Eigenvalues on or outside the unit circle other than a single simple 1.
pub fn spectral_violations<T: Real>(a: &Matrix<T>) -> Result<Vec<(f64, f64)>> {
    let ev = a.eigenvalues()?;
    let tol = 1e-9;
    let mut offending: Vec<(f64, f64)> =
        ev.into_iter().filter(|(re, im)| re.hypot(*im) >= 1.0 - tol).collect();
    if let Some(pos) = offending.iter().position(|(re, im)| (re - 1.0).abs() < tol && im.abs() < tol) {
        offending.remove(pos);
    } else if offending.is_empty() {
        // no unit eigenvalue at all; report the spectral radius holder
        let ev = a.eigenvalues()?;
        let top = ev.into_iter().fold((0.0, 0.0), |m: (f64, f64), z| if z.0.hypot(z.1) > m.0.hypot(m.1) { z } else { m });
        return Ok(vec![top]);
    }
    Ok(offending)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationResult<T> {
    /// Signed influence with `Σ|s_i| = 1`, positive on group A.
    pub s: Vec<T>,
    /// Mean influence of a group A member.
    pub x: T,
    /// Mean influence of a group B member.
    pub y: T,
    /// `Σ s_i = n1·x + n2·y`.
    pub coefficient: T,
    pub limit_a: T,
    pub limit_b: T,
    /// Direct iteration of `A` from `b0`.
    pub iterated: LimitResult<T>,
}

/// Signed left fixed vector of `A` under the unit condition `Σ sign_i s_i = 1`.
pub fn signed_influence<T: Real>(a: &Matrix<T>, f: &OppositionStructure) -> Result<Vec<T>> {
    let n = a.rows();
    let mut sys = a.transpose().sub(&Matrix::identity(n))?;
    for j in 0..n {
        sys[(n - 1, j)] = f.sign(j);
    }
    let mut rhs = vec![T::zero(); n];
    rhs[n - 1] = T::one();
    sys.solve(&rhs)
}

pub fn polarization_limit<T: Real>(
    a: &Matrix<T>,
    f: &OppositionStructure,
    b0: &[T],
    opts: &IterationOptions<T>,
) -> Result<PolarizationResult<T>> {
    let offending = spectral_violations(a)?;
    if !offending.is_empty() {
        return Err(Error::SpectralConditionFailed { offending });
    }
    let s = signed_influence(a, f)?;
    let (mut sa, mut na, mut sb, mut nb) = (T::zero(), 0usize, T::zero(), 0usize);
    for (i, &v) in s.iter().enumerate() {
        match f.sides[i] {
            Side::A => {
                sa = sa + v;
                na += 1;
            }
            Side::B => {
                sb = sb + v;
                nb += 1;
            }
        }
    }
    let mean = |sum: T, k: usize| if k == 0 { T::zero() } else { sum / T::lit(k as f64) };
    let p: T = s.iter().zip(b0).map(|(x, y)| *x * *y).sum();
    let iterated = iterate_linear(a, b0, opts, |_, _| {})?;
    Ok(PolarizationResult {
        x: mean(sa, na),
        y: mean(sb, nb),
        coefficient: sa + sb,
        limit_a: p,
        limit_b: -p,
        s,
        iterated,
    })
}

/// `y = b/(n2(d−b)−1)` and `x = (1+n2 y)a − n2 c y`.
pub fn closed_form_xy(p: &OppositionParams) -> Result<(f64, f64)> {
    let n2 = p.n2 as f64;
    let den = n2 * (p.d - p.b) - 1.0;
    if den.abs() < 1e-15 {
        return Err(Error::DegenerateDenominator);
    }
    let y = p.b / den;
    let x = (1.0 + n2 * y) * p.a - n2 * p.c * y;
    Ok((x, y))
}

/// Trust increments restricted to same-group truthful agents.
///
/// Cross-group weights never move; the within-group part of each row is
/// rescaled to keep its original total.
pub fn adjust_weights_grouped<T: Real>(
    w: &RowStochasticMatrix<T>,
    members: &[usize],
    policy: &TrustPolicy,
    f: &OppositionStructure,
) -> Result<RowStochasticMatrix<T>> {
    let n = w.n();
    if f.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.n() });
    }
    let inc = policy.increment(members.len(), n);
    if members.is_empty() || inc == 0.0 {
        return Ok(w.clone());
    }
    let inc = T::lit(inc);
    let mut raw = w.as_matrix().clone();
    for i in 0..n {
        let row = raw.row_mut(i);
        for &j in members {
            if f.same_side(i, j) {
                row[j] = row[j] + inc;
            }
        }
    }
    grouped_renormalize(&raw, w, f)
}

/// Copies cross-group weights from `reference` and scales the within-group
/// part of each `raw` row to the within-group total of `reference`.
pub fn grouped_renormalize<T: Real>(
    raw: &Matrix<T>,
    reference: &RowStochasticMatrix<T>,
    f: &OppositionStructure,
) -> Result<RowStochasticMatrix<T>> {
    let n = reference.n();
    if raw.rows() != n || f.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: raw.rows() });
    }
    let mut out = raw.clone();
    for i in 0..n {
        let target: T = (0..n).filter(|&j| f.same_side(i, j)).map(|j| reference.get(i, j)).sum();
        let have: T = (0..n).filter(|&j| f.same_side(i, j)).map(|j| raw[(i, j)]).sum();
        let scale = if have > T::zero() { target / have } else { T::zero() };
        let row = out.row_mut(i);
        for (j, x) in row.iter_mut().enumerate() {
            *x = if f.same_side(i, j) { *x * scale } else { reference.get(i, j) };
        }
    }
    RowStochasticMatrix::new(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub predicted: Vec<(f64, f64)>,
    pub numeric: Vec<(f64, f64)>,
    pub q: f64,
    /// Largest distance between matched predicted and numeric eigenvalues.
    pub max_error: f64,
    pub q_on_unit_circle: bool,
}

/// For a single member in group A, `A` has eigenvalues `1`, `q = a − 1 + (n−1)d`
/// and `0` with multiplicity `n − 2`.
pub fn check_spectrum_n1_equals_1(p: &OppositionParams) -> Result<SpectrumReport> {
    if p.n1 != 1 {
        return Err(Error::InvalidParameter(format!("expected n1 = 1, got {}", p.n1)));
    }
    p.validate()?;
    let n = p.n();
    let q = p.a - 1.0 + (n as f64 - 1.0) * p.d;
    let mut predicted = vec![(1.0, 0.0), (q, 0.0)];
    predicted.extend(std::iter::repeat_n((0.0, 0.0), n - 2));
    let w: RowStochasticMatrix<f64> = p.weight_matrix()?;
    let numeric = build_A(&w, &p.structure())?.eigenvalues()?;
    Ok(SpectrumReport {
        max_error: match_spectra(&predicted, &numeric),
        q_on_unit_circle: (q.abs() - 1.0).abs() < 1e-12,
        predicted,
        numeric,
        q,
    })
}

/// Greedy nearest matching of two multisets of complex numbers; returns the worst pair distance.
pub fn match_spectra(expected: &[(f64, f64)], actual: &[(f64, f64)]) -> f64 {
    if expected.len() != actual.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; actual.len()];
    let mut worst: f64 = 0.0;
    for e in expected {
        let (k, d) = actual
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, a)| (k, (a.0 - e.0).hypot(a.1 - e.1)))
            .fold((usize::MAX, f64::INFINITY), |m, c| if c.1 < m.1 { c } else { m });
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trust::{TFunction, Tau};

    fn pol_params(b: f64) -> OppositionParams {
        OppositionParams { n1: 10, n2: 10, a: (1.0 - 10.0 * b) / 10.0, b, c: 0.025, d: 0.075 }
    }

    /// Dense-solve oracle for the unit-normalized eigenvector of Aᵀ, solving the
    /// 2×2 reduced system (1) and (3) directly.
    fn reduced_oracle(p: &OppositionParams) -> (f64, f64) {
        let (n1, n2) = (p.n1 as f64, p.n2 as f64);
        // (n1 a − 1) x − n2 c y = 0 ;  n1 x − n2 y = 1
        let m = Matrix::from_rows(&[vec![n1 * p.a - 1.0, -n2 * p.c], vec![n1, -n2]]).unwrap();
        let s = m.solve(&[0.0, 1.0]).unwrap();
        (s[0], s[1])
    }

    #[test]
    fn build_a_examples() {
        let w = RowStochasticMatrix::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap();
        let all_a = OppositionStructure { sides: vec![Side::A, Side::A] };
        assert_eq!(build_A(&w, &all_a).unwrap(), w.as_matrix().clone());
        let a = build_A(&w, &OppositionStructure::split(1, 1)).unwrap();
        assert_eq!(a.to_rows(), vec![vec![0.7, -0.3], vec![-0.4, 0.6]]);
        let p = pol_params(0.05);
        let a = build_A(&p.weight_matrix::<f64>().unwrap(), &p.structure()).unwrap();
        for i in 0..20 {
            assert!((a.row(i).iter().map(|x| x.abs()).sum::<f64>() - 1.0).abs() < 1e-12);
            for j in 0..20 {
                let expect = match (i < 10, j < 10) {
                    (true, true) => p.a,
                    (true, false) => -p.b,
                    (false, true) => -p.c,
                    _ => p.d,
                };
                assert_eq!(a[(i, j)], expect);
            }
        }
    }

    #[test]
    fn fig_pol_point() {
        let p = pol_params(0.09);
        let (x, y) = closed_form_xy(&p).unwrap();
        assert!((y + 0.07826).abs() < 1e-5);
        assert!((x - 0.021739).abs() < 1e-6);
        assert!((10.0 * x + 10.0 * y + 0.56522).abs() < 1e-5);
        let (ox, oy) = reduced_oracle(&p);
        assert!((x - ox).abs() < 1e-12 && (y - oy).abs() < 1e-12);

        let w = p.weight_matrix::<f64>().unwrap();
        let a = build_A(&w, &p.structure()).unwrap();
        let b0 = vec![2.0; 20];
        let r = polarization_limit(&a, &p.structure(), &b0, &IterationOptions::default()).unwrap();
        assert!((r.x - x).abs() < 1e-10 && (r.y - y).abs() < 1e-10);
        assert!((r.limit_a - 2.0 * r.coefficient).abs() < 1e-10);
        assert_eq!(r.limit_b, -r.limit_a);
        let abs_sum: f64 = r.s.iter().map(|v| v.abs()).sum();
        assert!((abs_sum - 1.0).abs() < 1e-12);
        assert!(r.iterated.converged);
        for (i, v) in r.iterated.beliefs.iter().enumerate() {
            let target = if i < 10 { r.limit_a } else { r.limit_b };
            assert!((v - target).abs() < 1e-8);
        }
    }

    #[test]
    fn symmetric_opposition_neutralizes() {
        let p = pol_params(0.025);
        let (x, y) = closed_form_xy(&p).unwrap();
        assert!((y + 0.05).abs() < 1e-12 && (x - 0.05).abs() < 1e-12);
        assert!((10.0 * x + 10.0 * y).abs() < 1e-12);
        let (x0, y0) = closed_form_xy(&OppositionParams { b: 0.0, a: 0.1, ..p }).unwrap();
        assert_eq!((x0, y0), (0.1, 0.0));
    }

    #[test]
    fn abs_y_monotone() {
        let base = OppositionParams { n1: 5, n2: 5, a: 0.1, b: 0.1, c: 0.08, d: 0.12 };
        let mut prev = 0.0;
        for k in 1..10 {
            let b = 0.02 * k as f64;
            let (_, y) = closed_form_xy(&OppositionParams { b, ..base }).unwrap();
            assert!(y.abs() > prev);
            prev = y.abs();
        }
        let mut prev = 0.0;
        for k in 1..10 {
            let d = 0.02 * k as f64;
            let (_, y) = closed_form_xy(&OppositionParams { d, ..base }).unwrap();
            assert!(y.abs() > prev);
            prev = y.abs();
        }
        let bad = OppositionParams { n1: 1, n2: 1, a: 0.0, b: 1.0, c: 0.0, d: 2.0 };
        assert_eq!(closed_form_xy(&bad), Err(Error::DegenerateDenominator));
    }

    #[test]
    fn spectrum_single_leader() {
        let p = OppositionParams { n1: 1, n2: 2, a: 0.5, b: 0.25, c: 0.25, d: 0.375 };
        let r = check_spectrum_n1_equals_1(&p).unwrap();
        assert!((r.q - 0.25).abs() < 1e-15);
        assert!(r.max_error < 1e-9);
        assert!(!r.q_on_unit_circle);
        // characteristic polynomial oracle: det(A − λI) = −λ(λ − 1)(λ − q) for this A
        let a = build_A(&p.weight_matrix::<f64>().unwrap(), &p.structure()).unwrap();
        let det3 = |l: f64| {
            let m = |i: usize, j: usize| a[(i, j)] - if i == j { l } else { 0.0 };
            m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
        };
        for l in [-0.7, 0.1, 0.4, 1.3] {
            assert!((det3(l) + l * (l - 1.0) * (l - 0.25)).abs() < 1e-12);
        }

        let p2 = OppositionParams { n1: 1, n2: 1, a: 0.7, b: 0.3, c: 0.2, d: 0.8 };
        let r = check_spectrum_n1_equals_1(&p2).unwrap();
        // 2×2 determinant oracle: λ² − (a+d)λ + (ad − bc)
        let (tr, det): (f64, f64) = (0.7 + 0.8, 0.7 * 0.8 - 0.3 * 0.2);
        let disc = (tr * tr - 4.0 * det).sqrt();
        let roots = [((tr + disc) / 2.0, 0.0), ((tr - disc) / 2.0, 0.0)];
        assert!(match_spectra(&roots, &r.numeric) < 1e-12);
        assert!(match_spectra(&[(1.0, 0.0), (0.7 + 0.8 - 1.0, 0.0)], &r.numeric) < 1e-12);
    }

    #[test]
    fn spectral_condition_failure_reported() {
        // disconnected groups: eigenvalue 1 twice
        let w = RowStochasticMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let f = OppositionStructure::split(1, 1);
        let a = build_A(&w, &f).unwrap();
        let err = polarization_limit(&a, &f, &[1.0, 1.0], &IterationOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SpectralConditionFailed { .. }));
    }

    #[test]
    fn grouped_adjustment() {
        let p = OppositionParams { n1: 2, n2: 2, a: 0.3, b: 0.2, c: 0.1, d: 0.4 };
        let w = p.weight_matrix::<f64>().unwrap();
        let f = p.structure();
        let pol = TrustPolicy::new(0.1, 0.5, Tau::InitialBeliefs, TFunction::ConstantOne).unwrap();

        let out = adjust_weights_grouped(&w, &[2, 3], &pol, &f).unwrap();
        assert_eq!(out.row(0), w.row(0));
        assert_eq!(out.row(1), w.row(1));

        let out = adjust_weights_grouped(&w, &[0], &pol, &f).unwrap();
        // viewer 1 in A: raw within = (0.3 + 0.5, 0.3), rescaled to total 0.6
        let scale = 0.6 / 1.1;
        assert!((out.get(1, 0) - 0.8 * scale).abs() < 1e-15);
        assert!((out.get(1, 1) - 0.3 * scale).abs() < 1e-15);
        assert_eq!(out.get(1, 2), 0.2);
        assert_eq!(out.row(2), w.row(2));

        let big = TrustPolicy { delta: 1e9, ..pol };
        let out = adjust_weights_grouped(&w, &[0, 1], &big, &f).unwrap();
        assert!((out.get(0, 0) - 0.3).abs() < 1e-8);
        assert!((out.row(0)[2..].iter().sum::<f64>() - 0.4).abs() < 1e-15);
        let out = adjust_weights_grouped(&w, &[0], &big, &f).unwrap();
        assert!((out.get(0, 0) - 0.6).abs() < 1e-8 && out.get(0, 1) < 1e-8);
    }
}
