//! Wisdom predicates and per-run summaries.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// `|b − μ| < ε`.
pub fn is_eps_wise<T: Real>(b: T, mu: T, eps: T) -> bool {
    (b - mu).abs() < eps
}

/// Outcome of one topic of a multi-topic run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub topic: usize,
    pub mu: f64,
    pub initial: Vec<f64>,
    pub limit: Vec<f64>,
    pub rounds: usize,
    pub converged: bool,
    pub diverged: bool,
    pub is_consensus: bool,
    pub consensus_value: Option<f64>,
    /// Agents judged truthful for the trust update (empty when skipped).
    pub truthful: Vec<usize>,
    /// Whether the trust update ran for this topic.
    pub adjusted: bool,
}

impl TopicSummary {
    /// Consensus value, or the mean limit belief when there is none.
    pub fn center(&self) -> f64 {
        self.consensus_value.unwrap_or_else(|| {
            if self.limit.is_empty() {
                f64::NAN
            } else {
                self.limit.iter().sum::<f64>() / self.limit.len() as f64
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicWisdom {
    pub topic: usize,
    pub truthful_at_start: Vec<usize>,
    pub eps_wise: Vec<usize>,
    pub consensus_value: Option<f64>,
    /// `|consensus − μ_k|`, or the mean limit belief's distance when there is no consensus.
    pub offset: f64,
    pub signed_offset: f64,
    pub all_eps_wise: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WisdomReport {
    pub eps: f64,
    pub per_topic: Vec<TopicWisdom>,
    pub fraction_full_wisdom: f64,
    pub tail_topics: usize,
    pub tail_mean_abs_offset: f64,
    pub tail_mean_signed_offset: f64,
    pub tail_consensus_fraction: f64,
}

/// Tail window defaults to the last 20% of topics (at least one).
pub fn wisdom_report(topics: &[TopicSummary], eps: f64, tail_fraction: Option<f64>) -> WisdomReport {
    let per_topic: Vec<TopicWisdom> = topics
        .iter()
        .map(|t| {
            let truthful_at_start = (0..t.initial.len()).filter(|&i| is_eps_wise(t.initial[i], t.mu, eps)).collect();
            let eps_wise: Vec<usize> = (0..t.limit.len()).filter(|&i| is_eps_wise(t.limit[i], t.mu, eps)).collect();
            let signed = t.center() - t.mu;
            TopicWisdom {
                topic: t.topic,
                truthful_at_start,
                all_eps_wise: !t.diverged && eps_wise.len() == t.limit.len(),
                eps_wise,
                consensus_value: t.consensus_value,
                offset: signed.abs(),
                signed_offset: signed,
            }
        })
        .collect();
    let k = per_topic.len();
    let frac = tail_fraction.unwrap_or(0.2).clamp(0.0, 1.0);
    let tail = if k == 0 { 0 } else { ((k as f64 * frac).round() as usize).clamp(1, k) };
    let window = &per_topic[k - tail..];
    let mean = |f: &dyn Fn(&TopicWisdom) -> f64| {
        if window.is_empty() {
            f64::NAN
        } else {
            window.iter().map(f).sum::<f64>() / window.len() as f64
        }
    };
    WisdomReport {
        eps,
        fraction_full_wisdom: if k == 0 {
            0.0
        } else {
            per_topic.iter().filter(|w| w.all_eps_wise).count() as f64 / k as f64
        },
        tail_topics: tail,
        tail_mean_abs_offset: mean(&|w| w.offset),
        tail_mean_signed_offset: mean(&|w| w.signed_offset),
        tail_consensus_fraction: mean(&|w| if w.consensus_value.is_some() { 1.0 } else { 0.0 }),
        per_topic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(topic: usize, limit: Vec<f64>, consensus: Option<f64>) -> TopicSummary {
        TopicSummary {
            topic,
            mu: 0.0,
            initial: vec![0.0; limit.len()],
            rounds: 1,
            converged: true,
            diverged: false,
            is_consensus: consensus.is_some(),
            consensus_value: consensus,
            truthful: vec![],
            adjusted: true,
            limit,
        }
    }

    #[test]
    fn eps_wise_examples() {
        assert!(is_eps_wise(1.0, 1.0, 0.1));
        assert!(!is_eps_wise(1.0, 1.0, 0.0));
        assert!(!is_eps_wise(1.5, 1.0, 0.5));
        // a smaller radius is never more permissive
        for b in [0.9, 0.97, 1.02, 1.3] {
            if is_eps_wise(b, 1.0, 0.05) {
                assert!(is_eps_wise(b, 1.0, 0.2));
            }
        }
    }

    #[test]
    fn report_windows() {
        let topics: Vec<TopicSummary> =
            (1..=10).map(|k| summary(k, vec![k as f64 * 0.01; 3], Some(k as f64 * 0.01))).collect();
        let r = wisdom_report(&topics, 0.05, None);
        assert_eq!(r.tail_topics, 2);
        assert!((r.tail_mean_abs_offset - 0.095).abs() < 1e-12);
        assert!((r.fraction_full_wisdom - 0.4).abs() < 1e-12);
        assert_eq!(r.per_topic[0].eps_wise, vec![0, 1, 2]);
        assert_eq!(r.tail_consensus_fraction, 1.0);

        let r = wisdom_report(&topics[..1], 0.05, Some(0.2));
        assert_eq!(r.tail_topics, 1);
    }

    #[test]
    fn no_consensus_uses_mean() {
        let t = summary(1, vec![-1.0, 3.0], None);
        let r = wisdom_report(&[t], 0.5, None);
        assert_eq!(r.per_topic[0].signed_offset, 1.0);
        assert!(!r.per_topic[0].all_eps_wise);
    }
}
