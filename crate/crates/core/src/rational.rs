//! Closed-form weights: variance-minimizing weights, the hit-rate heuristic,
//! and the predicted limiting consensus.

use serde::{Deserialize, Serialize};

use crate::beliefs::GroupSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::trust::Tau;

/// `w_j ∝ 1/σ_j²`.
pub fn optimal_weights<T: Real>(variances: &[T]) -> Result<Vec<T>> {
    if let Some(i) = variances.iter().position(|&v| !(v > T::zero()) || !v.is_finite()) {
        return Err(Error::NonPositiveVariance(i));
    }
    let inv: Vec<T> = variances.iter().map(|&v| T::one() / v).collect();
    let total: T = inv.iter().copied().sum();
    Ok(inv.into_iter().map(|x| x / total).collect())
}

/// Group masses `∝ count_g · Pr[|b − μ| < η]`.
pub fn heuristic_weight_mass(groups: &[GroupSpec], eta: f64, mu: f64) -> Result<Vec<f64>> {
    if groups.is_empty() {
        return Err(Error::InvalidParameter("at least one group is required".into()));
    }
    if !(eta >= 0.0) {
        return Err(Error::InvalidParameter(format!("eta must be nonnegative, got {eta}")));
    }
    let raw: Vec<f64> = groups
        .iter()
        .map(|g| g.count as f64 * g.distribution.prob_within_radius(mu, eta))
        .collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter(format!("no group can fall within eta = {eta} of the truth")));
    }
    Ok(raw.into_iter().map(|x| x / total).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightPrediction {
    /// Per-agent weights, groups laid out in order.
    pub lambda: Vec<f64>,
    pub group_masses: Vec<f64>,
    /// `Σ λ_j · bias_j`.
    pub predicted_mean_offset: f64,
    /// `Σ λ_j² σ_j²`, the variance of `⟨λ, b(0)⟩` for fixed `λ`.
    pub predicted_variance: f64,
    /// `Σ_g σ_g² / n_g`, the variance of an equal-weight sum of group means.
    pub variance_of_group_means: f64,
}

/// Predicted influence of each agent in the long run, for strictly positive `T`.
///
/// Judging on initial beliefs, influence follows hit rates; judging on limit
/// beliefs, everyone is equally truthful and influence becomes uniform.
pub fn predict_limiting(groups: &[GroupSpec], eta: f64, tau: Tau, mu: f64) -> Result<WeightPrediction> {
    for g in groups {
        g.validate()?;
    }
    let n: usize = groups.iter().map(|g| g.count).sum();
    let group_masses = match tau {
        Tau::InitialBeliefs => heuristic_weight_mass(groups, eta, mu)?,
        Tau::LimitBeliefs => groups.iter().map(|g| g.count as f64 / n as f64).collect(),
    };
    let mut lambda = Vec::with_capacity(n);
    let mut offset = 0.0;
    let mut variance = 0.0;
    let mut group_means_var = 0.0;
    for (g, &mass) in groups.iter().zip(&group_masses) {
        let per = mass / g.count as f64;
        lambda.extend(std::iter::repeat_n(per, g.count));
        offset += mass * g.distribution.bias(mu);
        variance += g.count as f64 * per * per * g.distribution.variance();
        group_means_var += g.distribution.variance() / g.count as f64;
    }
    Ok(WeightPrediction {
        lambda,
        group_masses,
        predicted_mean_offset: offset,
        predicted_variance: variance,
        variance_of_group_means: group_means_var,
    })
}
