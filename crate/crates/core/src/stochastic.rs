use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Square matrix with entries in `[0, 1]` and rows summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowStochasticMatrix<T> {
    inner: Matrix<T>,
}

impl<T: Real> RowStochasticMatrix<T> {
    /// Validates with the scalar's default stochastic tolerance.
    pub fn new(m: Matrix<T>) -> Result<Self> {
        Self::with_tolerance(m, T::stochastic_tolerance())
    }

    pub fn with_tolerance(m: Matrix<T>, tol: T) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.rows(), got: m.cols() });
        }
        for i in 0..m.rows() {
            let row = m.row(i);
            if let Some(j) = row.iter().position(|&x| !(x >= -tol && x <= T::one() + tol)) {
                return Err(Error::NotStochastic(format!(
                    "entry ({i}, {j}) = {} outside [0, 1]",
                    row[j]
                )));
            }
            let s: T = row.iter().copied().sum();
            if (s - T::one()).abs() > tol {
                return Err(Error::NotStochastic(format!("row {i} sums to {s}")));
            }
        }
        Ok(RowStochasticMatrix { inner: m })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        RowStochasticMatrix { inner: Matrix::identity(n) }
    }

    pub fn uniform(n: usize) -> Self {
        let w = T::one() / T::lit(n as f64);
        RowStochasticMatrix { inner: Matrix::filled(n, n, w) }
    }

    pub fn n(&self) -> usize {
        self.inner.rows()
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.inner
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.inner.row(i)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.inner[(i, j)]
    }

    pub fn matmul(&self, other: &RowStochasticMatrix<T>) -> Result<RowStochasticMatrix<T>> {
        Ok(RowStochasticMatrix { inner: self.inner.matmul(&other.inner)? })
    }

    pub fn pow(&self, t: u32) -> RowStochasticMatrix<T> {
        let mut acc = Matrix::identity(self.n());
        let mut base = self.inner.clone();
        let mut e = t;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.matmul(&base).expect("square");
            }
            base = base.matmul(&base).expect("square");
            e >>= 1;
        }
        RowStochasticMatrix { inner: acc }
    }

    /// Largest absolute deviation of a row sum from one.
    pub fn row_sum_defect(&self) -> T {
        self.inner.row_sums().into_iter().map(|s| (s - T::one()).abs()).fold(T::zero(), T::max)
    }

    pub fn max_abs_diff(&self, other: &RowStochasticMatrix<T>) -> T {
        self.inner.max_abs_diff(&other.inner)
    }

    /// Wraps a matrix known to be stochastic by construction.
    pub(crate) fn from_trusted(m: Matrix<T>) -> Self {
        debug_assert!(m.is_square());
        RowStochasticMatrix { inner: m }
    }
}

/// Divides each row by its sum.
pub fn normalize_rows<T: Real>(raw: &Matrix<T>) -> Result<RowStochasticMatrix<T>> {
    if !raw.is_square() {
        return Err(Error::DimensionMismatch { expected: raw.rows(), got: raw.cols() });
    }
    let mut out = raw.clone();
    for i in 0..raw.rows() {
        let row = out.row_mut(i);
        if let Some(j) = row.iter().position(|&x| x < T::zero() || !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "entry ({i}, {j}) = {} is not a finite nonnegative weight",
                row[j]
            )));
        }
        let s: T = row.iter().copied().sum();
        if s <= T::zero() {
            return Err(Error::ZeroRow(i));
        }
        if s != T::one() {
            row.iter_mut().for_each(|x| *x = *x / s);
        }
    }
    Ok(RowStochasticMatrix::from_trusted(out))
}

/// Sign pattern of a matrix packed as one bitset per row.
#[derive(Clone, PartialEq, Eq, Hash)]
struct BoolMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BoolMatrix {
    fn from_positive<T: Real>(m: &Matrix<T>) -> Self {
        let n = m.rows();
        let words = n.div_ceil(64).max(1);
        let mut bits = vec![0u64; n * words];
        for i in 0..n {
            for (j, &x) in m.row(i).iter().enumerate() {
                if x > T::zero() {
                    bits[i * words + j / 64] |= 1 << (j % 64);
                }
            }
        }
        BoolMatrix { n, words, bits }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn get(&self, i: usize, j: usize) -> bool {
        self.row(i)[j / 64] >> (j % 64) & 1 == 1
    }

    fn mul(&self, rhs: &BoolMatrix) -> BoolMatrix {
        let mut bits = vec![0u64; self.bits.len()];
        for i in 0..self.n {
            let dst = &mut bits[i * self.words..(i + 1) * self.words];
            for k in 0..self.n {
                if self.get(i, k) {
                    for (d, s) in dst.iter_mut().zip(rhs.row(k)) {
                        *d |= *s;
                    }
                }
            }
        }
        BoolMatrix { n: self.n, words: self.words, bits }
    }

    /// Smallest column index whose every row bit is set.
    fn full_column(&self) -> Option<usize> {
        if self.n == 0 {
            return None;
        }
        let mut acc = self.row(0).to_vec();
        for i in 1..self.n {
            for (a, r) in acc.iter_mut().zip(self.row(i)) {
                *a &= *r;
            }
        }
        (0..self.n).find(|&j| acc[j / 64] >> (j % 64) & 1 == 1)
    }
}

/// Searches boolean powers `W^1 .. W^max_power` for a strictly positive column.
///
/// `None` for `max_power` uses `n²`. The boolean power sequence is eventually
/// periodic, so the search also stops once a pattern repeats.
pub fn has_positive_column<T: Real>(w: &RowStochasticMatrix<T>, max_power: Option<usize>) -> Option<usize> {
    let n = w.n();
    let max_power = max_power.unwrap_or(n * n).max(1);
    let base = BoolMatrix::from_positive(w.as_matrix());
    let mut seen = HashSet::new();
    let mut p = base.clone();
    for _ in 0..max_power {
        if let Some(j) = p.full_column() {
            return Some(j);
        }
        if !seen.insert(p.clone()) {
            return None;
        }
        p = p.mul(&base);
    }
    None
}

/// Per-agent beliefs for one topic at one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState<T> {
    pub topic: usize,
    pub round: usize,
    beliefs: Vec<T>,
}

impl<T: Real> BeliefState<T> {
    pub fn new(topic: usize, round: usize, beliefs: Vec<T>) -> Result<Self> {
        if topic == 0 {
            return Err(Error::InvalidParameter("topic index starts at 1".into()));
        }
        if let Some(i) = beliefs.iter().position(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter(format!("belief of agent {i} is not finite")));
        }
        Ok(BeliefState { topic, round, beliefs })
    }

    pub fn beliefs(&self) -> &[T] {
        &self.beliefs
    }

    pub fn into_beliefs(self) -> Vec<T> {
        self.beliefs
    }
}

/// Truth μ_k revealed after topic `k` (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum TruthSequence {
    Constant { mu: f64 },
    Explicit { values: Vec<f64> },
    Affine { slope: f64, intercept: f64 },
}

impl TruthSequence {
    pub fn mu(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidParameter("topic index starts at 1".into()));
        }
        let v = match self {
            TruthSequence::Constant { mu } => *mu,
            TruthSequence::Explicit { values } => *values.get(k - 1).ok_or_else(|| {
                Error::InvalidParameter(format!("explicit truth sequence has no entry for topic {k}"))
            })?,
            TruthSequence::Affine { slope, intercept } => slope * k as f64 + intercept,
        };
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("truth for topic {k} is not finite")));
        }
        Ok(v)
    }

    pub fn is_constant(&self) -> bool {
        match self {
            TruthSequence::Constant { .. } => true,
            TruthSequence::Explicit { values } => values.windows(2).all(|w| w[0] == w[1]),
            TruthSequence::Affine { slope, .. } => *slope == 0.0,
        }
    }

    /// Number of topics this sequence can supply, if bounded.
    pub fn len_bound(&self) -> Option<usize> {
        match self {
            TruthSequence::Explicit { values } => Some(values.len()),
            _ => None,
        }
    }
}
