//! Initial beliefs drawn from group specifications.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Distribution of `b_i^k(0)`. Offsets are relative to `μ_k` unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BeliefDistribution {
    /// Exactly at the truth.
    PointTruth,
    /// `μ + N(0, σ²)`, optionally conditioned on `|offset| ≤ truncate`.
    NormalAroundTruth {
        variance: f64,
        #[serde(default)]
        truncate: Option<f64>,
    },
    /// `μ + bias + N(0, σ²)`.
    BiasedNormal { bias: f64, variance: f64 },
    /// `U(μ − h, μ + h)`.
    UniformAroundTruth { half_width: f64 },
    /// `U(lo, hi)` in absolute coordinates, independent of `μ`.
    UniformInterval { lo: f64, hi: f64 },
    /// `μ + U(lo, hi)` with the offset interval kept outside `(−η, η)`.
    NeverTruthful { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub count: usize,
    pub distribution: BeliefDistribution,
}

impl GroupSpec {
    pub fn new(count: usize, distribution: BeliefDistribution) -> Self {
        GroupSpec { count, distribution }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidParameter("group count must be at least 1".into()));
        }
        self.distribution.validate()
    }
}

impl BeliefDistribution {
    pub fn validate(&self) -> Result<()> {
        use BeliefDistribution::*;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            PointTruth => Ok(()),
            NormalAroundTruth { variance, truncate } => {
                if !(variance > 0.0 && variance.is_finite()) {
                    return bad(format!("variance must be positive, got {variance}"));
                }
                match truncate {
                    Some(r) if !(r > 0.0) => bad(format!("truncation radius must be positive, got {r}")),
                    _ => Ok(()),
                }
            }
            BiasedNormal { bias, variance } => {
                if !(variance > 0.0 && variance.is_finite()) || !bias.is_finite() {
                    return bad(format!("bad biased normal (bias {bias}, variance {variance})"));
                }
                Ok(())
            }
            UniformAroundTruth { half_width } => {
                if !(half_width > 0.0 && half_width.is_finite()) {
                    return bad(format!("half width must be positive, got {half_width}"));
                }
                Ok(())
            }
            UniformInterval { lo, hi } | NeverTruthful { lo, hi } => {
                if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                    return bad(format!("interval needs lo < hi, got [{lo}, {hi}]"));
                }
                Ok(())
            }
        }
    }

    /// Draws one belief for truth `mu`.
    pub fn sample<R: Rng + ?Sized>(&self, mu: f64, rng: &mut R) -> f64 {
        use BeliefDistribution::*;
        match *self {
            PointTruth => mu,
            NormalAroundTruth { variance, truncate } => {
                let sd = variance.sqrt();
                loop {
                    let z: f64 = StandardNormal.sample(rng);
                    let e = sd * z;
                    match truncate {
                        Some(r) if e.abs() > r => continue,
                        _ => return mu + e,
                    }
                }
            }
            BiasedNormal { bias, variance } => {
                let z: f64 = StandardNormal.sample(rng);
                mu + bias + variance.sqrt() * z
            }
            UniformAroundTruth { half_width } => mu + rng.random_range(-half_width..half_width),
            UniformInterval { lo, hi } => rng.random_range(lo..hi),
            NeverTruthful { lo, hi } => mu + rng.random_range(lo..hi),
        }
    }

    /// Exact `Pr[|b − μ| < η]`.
    pub fn prob_within_radius(&self, mu: f64, eta: f64) -> f64 {
        use BeliefDistribution::*;
        if !(eta > 0.0) {
            return 0.0;
        }
        match *self {
            PointTruth => 1.0,
            NormalAroundTruth { variance, truncate } => {
                let sd = variance.sqrt();
                match truncate {
                    None => normal_interval(-eta, eta, 0.0, sd),
                    Some(r) => normal_interval(-eta.min(r), eta.min(r), 0.0, sd) / normal_interval(-r, r, 0.0, sd),
                }
            }
            BiasedNormal { bias, variance } => normal_interval(-eta, eta, bias, variance.sqrt()),
            UniformAroundTruth { half_width } => overlap(-eta, eta, -half_width, half_width) / (2.0 * half_width),
            UniformInterval { lo, hi } => overlap(mu - eta, mu + eta, lo, hi) / (hi - lo),
            NeverTruthful { lo, hi } => overlap(-eta, eta, lo, hi) / (hi - lo),
        }
    }

    /// Expected offset `E[b] − μ`.
    pub fn bias(&self, mu: f64) -> f64 {
        use BeliefDistribution::*;
        match *self {
            PointTruth | NormalAroundTruth { .. } | UniformAroundTruth { .. } => 0.0,
            BiasedNormal { bias, .. } => bias,
            UniformInterval { lo, hi } => 0.5 * (lo + hi) - mu,
            NeverTruthful { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn variance(&self) -> f64 {
        use BeliefDistribution::*;
        match *self {
            PointTruth => 0.0,
            NormalAroundTruth { variance, truncate: None } | BiasedNormal { variance, .. } => variance,
            NormalAroundTruth { variance, truncate: Some(r) } => {
                let a = r / variance.sqrt();
                let phi = (-0.5 * a * a).exp() / (2.0 * std::f64::consts::PI).sqrt();
                variance * (1.0 - 2.0 * a * phi / (2.0 * std_normal_cdf(a) - 1.0))
            }
            UniformAroundTruth { half_width } => half_width * half_width / 3.0,
            UniformInterval { lo, hi } | NeverTruthful { lo, hi } => (hi - lo).powi(2) / 12.0,
        }
    }

    /// Whether the draw depends on `μ` only through a shift.
    pub fn is_truth_relative(&self) -> bool {
        !matches!(self, BeliefDistribution::UniformInterval { .. })
    }
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `Pr[lo < m + sd·Z < hi]`.
fn normal_interval(lo: f64, hi: f64, m: f64, sd: f64) -> f64 {
    (std_normal_cdf((hi - m) / sd) - std_normal_cdf((lo - m) / sd)).max(0.0)
}

fn overlap(a_lo: f64, a_hi: f64, b_lo: f64, b_hi: f64) -> f64 {
    (a_hi.min(b_hi) - a_lo.max(b_lo)).max(0.0)
}

pub fn prob_within_radius(dist: &BeliefDistribution, mu: f64, eta: f64) -> f64 {
    dist.prob_within_radius(mu, eta)
}

/// Independent random streams keyed by `(topic, agent)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeededRng {
    pub seed: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng { seed }
    }

    /// Stream for one agent on one topic. Topic 0 is free for scenario-level draws.
    pub fn stream(&self, topic: usize, agent: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((topic as u64) << 32) ^ agent as u64);
        rng
    }
}

/// One belief per agent for topic `topic` with truth `mu_k`, groups laid out in order.
pub fn sample_initial<T: Real>(groups: &[GroupSpec], mu_k: f64, topic: usize, rng: &SeededRng) -> Result<Vec<T>> {
    if groups.is_empty() {
        return Err(Error::InvalidParameter("at least one group is required".into()));
    }
    let mut out = Vec::with_capacity(groups.iter().map(|g| g.count).sum());
    for g in groups {
        g.validate()?;
        for _ in 0..g.count {
            let mut s = rng.stream(topic, out.len());
            out.push(T::lit(g.distribution.sample(mu_k, &mut s)));
        }
    }
    Ok(out)
}

/// Group index of each agent for the layout used by [`sample_initial`].
pub fn group_of_agents(groups: &[GroupSpec]) -> Vec<usize> {
    groups.iter().enumerate().flat_map(|(g, spec)| std::iter::repeat_n(g, spec.count)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trust::truthful_set;

    /// Composite Simpson rule on a smooth density.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    fn normal_pdf(x: f64, m: f64, var: f64) -> f64 {
        (-(x - m).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
    }

    #[test]
    fn point_truth_everywhere() {
        let g = [GroupSpec::new(5, BeliefDistribution::PointTruth)];
        let b: Vec<f64> = sample_initial(&g, 2.5, 1, &SeededRng::new(1)).unwrap();
        assert!(b.iter().all(|&x| x == 2.5));
    }

    #[test]
    fn normal_sample_mean() {
        let g = [GroupSpec::new(10_000, BeliefDistribution::NormalAroundTruth { variance: 1.0, truncate: None })];
        let b: Vec<f64> = sample_initial(&g, 3.0, 1, &SeededRng::new(7)).unwrap();
        let mean = b.iter().sum::<f64>() / b.len() as f64;
        assert!((mean - 3.0).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn uniform_far_interval_never_truthful() {
        let g = [GroupSpec::new(40, BeliefDistribution::UniformInterval { lo: 1.0, hi: 4.0 })];
        let rng = SeededRng::new(3);
        for k in 1..=50 {
            let b: Vec<f64> = sample_initial(&g, 0.0, k, &rng).unwrap();
            assert!(truthful_set(&b, 0.0, 0.25).is_empty());
        }
    }

    #[test]
    fn radius_probabilities_match_quadrature() {
        let d = BeliefDistribution::NormalAroundTruth { variance: 1.0, truncate: None };
        let p = d.prob_within_radius(0.0, 0.25);
        let q = simpson(|x| normal_pdf(x, 0.0, 1.0), -0.25, 0.25, 2000);
        assert!((p - q).abs() < 1e-12);
        assert!((p - 0.1974).abs() < 5e-5);

        let d = BeliefDistribution::BiasedNormal { bias: 3.0, variance: 1.0 };
        let p = d.prob_within_radius(0.0, 0.25);
        let q = simpson(|x| normal_pdf(x, 3.0, 1.0), -0.25, 0.25, 2000);
        assert!((p - q).abs() < 1e-12);
        assert!((p - 0.0024).abs() < 5e-5);

        let d = BeliefDistribution::BiasedNormal { bias: 1.0, variance: 1.0 };
        let q = simpson(|x| normal_pdf(x, 1.0, 1.0), -0.25, 0.25, 2000);
        let diff = (d.prob_within_radius(0.0, 0.25) - q).abs();
        assert!(diff < 1e-12, "{diff} {} {q}", d.prob_within_radius(0.0, 0.25));
        assert!((q - 0.1210).abs() < 5e-5);

        let d = BeliefDistribution::UniformInterval { lo: 1.0, hi: 4.0 };
        assert_eq!(d.prob_within_radius(0.0, 0.25), 0.0);
        assert!((d.prob_within_radius(1.0, 0.5) - 0.5 / 3.0).abs() < 1e-15);
        assert_eq!(d.prob_within_radius(0.0, 0.0), 0.0);
    }

    #[test]
    fn truncated_normal_stays_in_support() {
        let d = BeliefDistribution::NormalAroundTruth { variance: 1.0, truncate: Some(0.2) };
        let rng = SeededRng::new(11);
        for a in 0..500 {
            let x = d.sample(1.0, &mut rng.stream(1, a));
            assert!((x - 1.0).abs() <= 0.2);
        }
        assert_eq!(d.prob_within_radius(0.0, 0.3), 1.0);
        let q = simpson(|x| normal_pdf(x, 0.0, 1.0), -0.2, 0.2, 2000);
        let v = simpson(|x| x * x * normal_pdf(x, 0.0, 1.0), -0.2, 0.2, 2000) / q;
        assert!((d.variance() - v).abs() < 1e-10);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let rng = SeededRng::new(42);
        let d = BeliefDistribution::NormalAroundTruth { variance: 1.0, truncate: None };
        let a = d.sample(0.0, &mut rng.stream(3, 4));
        let b = d.sample(0.0, &mut rng.stream(3, 4));
        let c = d.sample(0.0, &mut rng.stream(4, 3));
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(a, c);
    }

    #[test]
    fn group_layout() {
        let g = [
            GroupSpec::new(2, BeliefDistribution::PointTruth),
            GroupSpec::new(1, BeliefDistribution::PointTruth),
        ];
        assert_eq!(group_of_agents(&g), vec![0, 0, 1]);
        assert!(GroupSpec::new(0, BeliefDistribution::PointTruth).validate().is_err());
        assert!(BeliefDistribution::UniformInterval { lo: 2.0, hi: 1.0 }.validate().is_err());
    }
}
