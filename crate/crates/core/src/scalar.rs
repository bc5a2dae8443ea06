use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar the engines are generic over: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Absolute tolerance used when checking that rows sum to one.
    fn stochastic_tolerance() -> Self;

    /// Default stopping tolerance on the max-abs belief change per round.
    fn default_iteration_tolerance() -> Self;

    /// Default tolerance under which a belief range counts as consensus.
    fn default_consensus_tolerance() -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn stochastic_tolerance() -> Self {
        1e-12
    }
    fn default_iteration_tolerance() -> Self {
        1e-10
    }
    fn default_consensus_tolerance() -> Self {
        1e-8
    }
}

impl Real for f32 {
    fn stochastic_tolerance() -> Self {
        1e-5
    }
    fn default_iteration_tolerance() -> Self {
        1e-6
    }
    fn default_consensus_tolerance() -> Self {
        1e-4
    }
}

pub(crate) fn max_abs_diff<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x - *y).abs())
        .fold(T::zero(), T::max)
}

/// `max - min` of a slice; zero for an empty slice.
pub fn range<T: Real>(values: &[T]) -> T {
    if values.is_empty() {
        return T::zero();
    }
    let (lo, hi) = values
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}
