//! Conformity: agents state opinions pulled toward (or pushed away from) a
//! reference opinion and learn from others' stated opinions.

use serde::{Deserialize, Serialize};

use crate::degroot::{iterate_linear, left_fixed_vector, InfluenceVector, IterationOptions, LimitResult};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::opposition::spectral_violations;
use crate::scalar::{max_abs_diff, Real};
use crate::stochastic::{has_positive_column, RowStochasticMatrix};

/// How reference opinions `q = Q s` are formed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ReferenceMatrix<T> {
    Explicit { q: Matrix<T> },
    /// `Q_ij = W_ij / (1 − W_ii)`, zero diagonal.
    DerivedFromW,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformityParams<T> {
    /// `δ_i ∈ (−1, 1)`; negative values mean counter-conformity.
    pub deltas: Vec<T>,
    pub reference: ReferenceMatrix<T>,
}

/// Conformity parameters with a concrete `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConformity<T> {
    pub deltas: Vec<T>,
    pub q: Matrix<T>,
    pub warnings: Vec<String>,
}

impl<T: Real> ConformityParams<T> {
    pub fn uniform_q(deltas: Vec<T>) -> Self {
        let n = deltas.len();
        let off = if n > 1 { T::one() / T::lit((n - 1) as f64) } else { T::zero() };
        let q = Matrix::from_fn(n, n, |i, j| if i == j { T::zero() } else { off });
        ConformityParams { deltas, reference: ReferenceMatrix::Explicit { q } }
    }

    pub fn validate_deltas(&self) -> Result<()> {
        if let Some(i) = self.deltas.iter().position(|d| !(d.abs() < T::one())) {
            return Err(Error::InvalidParameter(format!(
                "conformity parameter of agent {i} must lie in (-1, 1), got {}",
                self.deltas[i]
            )));
        }
        Ok(())
    }

    pub fn resolve(&self, w: &RowStochasticMatrix<T>) -> Result<ResolvedConformity<T>> {
        self.validate_deltas()?;
        let n = w.n();
        if self.deltas.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.deltas.len() });
        }
        let mut warnings = Vec::new();
        let q = match &self.reference {
            ReferenceMatrix::Explicit { q } => {
                check_reference(q, n)?;
                q.clone()
            }
            ReferenceMatrix::DerivedFromW => {
                let mut q = Matrix::zeros(n, n);
                for i in 0..n {
                    let off = T::one() - w.get(i, i);
                    if off > T::stochastic_tolerance() {
                        for j in 0..n {
                            if j != i {
                                q[(i, j)] = w.get(i, j) / off;
                            }
                        }
                    } else if n > 1 {
                        warnings.push(format!(
                            "agent {i} puts all weight on itself; its reference row is set uniform over others"
                        ));
                        let u = T::one() / T::lit((n - 1) as f64);
                        for j in 0..n {
                            if j != i {
                                q[(i, j)] = u;
                            }
                        }
                    }
                }
                q
            }
        };
        Ok(ResolvedConformity { deltas: self.deltas.clone(), q, warnings })
    }
}

fn check_reference<T: Real>(q: &Matrix<T>, n: usize) -> Result<()> {
    if q.rows() != n || q.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: q.rows() });
    }
    let tol = T::stochastic_tolerance();
    for i in 0..n {
        if q[(i, i)] != T::zero() {
            return Err(Error::InvalidParameter(format!("reference matrix has nonzero diagonal at {i}")));
        }
        if q.row(i).iter().any(|&x| x < T::zero()) {
            return Err(Error::InvalidParameter(format!("reference matrix row {i} has a negative entry")));
        }
        let s: T = q.row(i).iter().copied().sum();
        if n > 1 && (s - T::one()).abs() > tol {
            return Err(Error::NotStochastic(format!("reference row {i} sums to {s}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatedOpinions<T> {
    pub s_star: Vec<T>,
    /// `max |s − (1−δ)b − δ Q s|`.
    pub residual: T,
}

/// `(I − ΔQ)⁻¹ (I − Δ)`.
fn stated_operator<T: Real>(rc: &ResolvedConformity<T>) -> Result<Matrix<T>> {
    let n = rc.deltas.len();
    let dq = Matrix::from_fn(n, n, |i, j| rc.deltas[i] * rc.q[(i, j)]);
    let inv = Matrix::identity(n).sub(&dq)?.inverse()?;
    Ok(Matrix::from_fn(n, n, |i, j| inv[(i, j)] * (T::one() - rc.deltas[j])))
}

pub fn best_response_residual<T: Real>(s: &[T], b: &[T], rc: &ResolvedConformity<T>) -> Result<T> {
    let qs = rc.q.mul_vec(s)?;
    let target: Vec<T> =
        (0..s.len()).map(|i| (T::one() - rc.deltas[i]) * b[i] + rc.deltas[i] * qs[i]).collect();
    Ok(max_abs_diff(s, &target))
}

/// Unique Nash equilibrium of the stating game, by one dense solve.
pub fn nash_stated<T: Real>(b: &[T], rc: &ResolvedConformity<T>) -> Result<StatedOpinions<T>> {
    let n = rc.deltas.len();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    let dq = Matrix::from_fn(n, n, |i, j| rc.deltas[i] * rc.q[(i, j)]);
    let rhs: Vec<T> = b.iter().zip(&rc.deltas).map(|(&x, &d)| (T::one() - d) * x).collect();
    let s_star = Matrix::identity(n).sub(&dq)?.solve(&rhs)?;
    let residual = best_response_residual(&s_star, b, rc)?;
    Ok(StatedOpinions { s_star, residual })
}

/// `M = D + (W − D)(I − ΔQ)⁻¹(I − Δ)` with `D = diag(W)`.
#[allow(non_snake_case)]
pub fn build_M<T: Real>(w: &RowStochasticMatrix<T>, rc: &ResolvedConformity<T>) -> Result<Matrix<T>> {
    let n = w.n();
    let r = stated_operator(rc)?;
    let off = Matrix::from_fn(n, n, |i, j| if i == j { T::zero() } else { w.get(i, j) });
    let mut m = off.matmul(&r)?;
    for i in 0..n {
        m[(i, i)] = m[(i, i)] + w.get(i, i);
    }
    Ok(m)
}

/// Left fixed vector of `M`, normalized to sum one.
pub fn conformity_influence<T: Real>(
    w: &RowStochasticMatrix<T>,
    params: &ConformityParams<T>,
) -> Result<InfluenceVector<T>> {
    let rc = params.resolve(w)?;
    let m = build_M(w, &rc)?;
    let tol = T::lit(1e-10);
    let nonneg = m.as_slice().iter().all(|&x| x >= -tol);
    let induces = if nonneg {
        let clamped = m.map(|x| x.max(T::zero()));
        match RowStochasticMatrix::with_tolerance(clamped, tol) {
            Ok(ms) => has_positive_column(&ms, None).is_some(),
            Err(_) => false,
        }
    } else {
        spectral_violations(&m)?.is_empty()
    };
    if !induces {
        return Err(Error::NoConsensus);
    }
    left_fixed_vector(&m)
}

/// Iterates `b ← M b` for one topic. Divergence is reported in the result.
pub fn run_conformity_topic<T: Real>(
    w: &RowStochasticMatrix<T>,
    params: &ConformityParams<T>,
    b0: &[T],
    opts: &IterationOptions<T>,
    observer: impl FnMut(usize, &[T]),
) -> Result<LimitResult<T>> {
    let rc = params.resolve(w)?;
    let m = build_M(w, &rc)?;
    iterate_linear(&m, b0, opts, observer)
}

/// Influence of the third agent in the three-agent example: `a(1−b)/(4 − ab − 3a)`.
pub fn three_agent_influence(a: f64, b: f64) -> f64 {
    a * (1.0 - b) / (4.0 - a * b - 3.0 * a)
}
