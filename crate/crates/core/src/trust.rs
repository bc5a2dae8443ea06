//! Cross-topic trust adjustment after truth is revealed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::stochastic::{normalize_rows, RowStochasticMatrix};

/// Which beliefs are compared with the revealed truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Tau {
    #[default]
    InitialBeliefs,
    LimitBeliefs,
}

/// Multiplier on the increment as a function of the number of truthful agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TFunction {
    #[default]
    ConstantOne,
    /// 1 below `n`, 0 once everyone is truthful.
    ZeroAtN,
    /// `−log(m/n)`.
    NegLogFraction,
}

impl TFunction {
    pub fn eval(&self, m: usize, n: usize) -> f64 {
        match self {
            TFunction::ConstantOne => 1.0,
            TFunction::ZeroAtN => {
                if m >= n {
                    0.0
                } else {
                    1.0
                }
            }
            TFunction::NegLogFraction => {
                if m == 0 || m >= n {
                    0.0
                } else {
                    -(m as f64 / n as f64).ln()
                }
            }
        }
    }
}

/// How increments from earlier topics carry over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightMemory {
    /// Unnormalized totals accumulate; `W` is their row normalization, so
    /// long-run weights are proportional to hit counts.
    #[default]
    Cumulative,
    /// Each topic adds to the current row-stochastic `W` and renormalizes,
    /// which discounts earlier increments.
    Renormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustPolicy {
    pub eta: f64,
    pub delta: f64,
    #[serde(default)]
    pub tau: Tau,
    #[serde(default)]
    pub t_function: TFunction,
    #[serde(default)]
    pub memory: WeightMemory,
}

impl TrustPolicy {
    pub fn new(eta: f64, delta: f64, tau: Tau, t_function: TFunction) -> Result<Self> {
        let p = TrustPolicy { eta, delta, tau, t_function, memory: WeightMemory::Cumulative };
        p.validate()?;
        Ok(p)
    }

    pub fn with_memory(self, memory: WeightMemory) -> Self {
        TrustPolicy { memory, ..self }
    }

    /// `δ·T(m)` for `m` truthful agents out of `n`.
    pub fn increment(&self, m: usize, n: usize) -> f64 {
        self.delta * self.t_function.eval(m, n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) {
            return Err(Error::InvalidParameter(format!("eta must be nonnegative, got {}", self.eta)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {}", self.delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthfulSet {
    pub topic: usize,
    /// Sorted agent indices, 0-based.
    pub members: Vec<usize>,
    pub reference: Tau,
}

impl TruthfulSet {
    pub fn compute<T: Real>(topic: usize, reference: Tau, b_tau: &[T], mu: T, eta: T) -> Self {
        TruthfulSet { topic, members: truthful_set(b_tau, mu, eta), reference }
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }
}

/// Agents with `|b_j − μ| < η`.
pub fn truthful_set<T: Real>(b_tau: &[T], mu: T, eta: T) -> Vec<usize> {
    b_tau
        .iter()
        .enumerate()
        .filter(|(_, &b)| (b - mu).abs() < eta)
        .map(|(j, _)| j)
        .collect()
}

/// Adds `δ·T(|N|)` to every column in `members`, then renormalizes once.
pub fn adjust_weights<T: Real>(
    w: &RowStochasticMatrix<T>,
    members: &[usize],
    policy: &TrustPolicy,
) -> Result<RowStochasticMatrix<T>> {
    let n = w.n();
    let factor = policy.t_function.eval(members.len(), n);
    if members.is_empty() || factor == 0.0 {
        return Ok(w.clone());
    }
    if let Some(&j) = members.iter().find(|&&j| j >= n) {
        return Err(Error::DimensionMismatch { expected: n, got: j + 1 });
    }
    let inc = T::lit(policy.delta * factor);
    let mut raw = w.as_matrix().clone();
    for i in 0..n {
        let row = raw.row_mut(i);
        for &j in members {
            row[j] = row[j] + inc;
        }
    }
    normalize_rows(&raw)
}

/// Trust carried across topics: the initial weights plus every increment so far.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustLedger<T> {
    initial: RowStochasticMatrix<T>,
    raw: Matrix<T>,
    w: RowStochasticMatrix<T>,
    memory: WeightMemory,
}

impl<T: Real> TrustLedger<T> {
    pub fn new(w1: RowStochasticMatrix<T>, memory: WeightMemory) -> Self {
        TrustLedger { raw: w1.as_matrix().clone(), w: w1.clone(), initial: w1, memory }
    }

    pub fn weights(&self) -> &RowStochasticMatrix<T> {
        &self.w
    }

    pub fn initial(&self) -> &RowStochasticMatrix<T> {
        &self.initial
    }

    /// Unnormalized totals (equal to `W` under renormalized memory).
    pub fn raw(&self) -> &Matrix<T> {
        &self.raw
    }

    /// Applies one topic's increments to every row. Returns whether anything changed.
    pub fn apply(&mut self, members: &[usize], policy: &TrustPolicy) -> Result<bool> {
        self.apply_masked(members, policy, |_, _| true, |raw| normalize_rows(raw))
    }

    /// Increments `raw_ij` only where `allow(i, j)` holds, then rebuilds `W` with `rebuild`.
    pub fn apply_masked(
        &mut self,
        members: &[usize],
        policy: &TrustPolicy,
        allow: impl Fn(usize, usize) -> bool,
        rebuild: impl Fn(&Matrix<T>) -> Result<RowStochasticMatrix<T>>,
    ) -> Result<bool> {
        let n = self.w.n();
        let inc = policy.increment(members.len(), n);
        if members.is_empty() || inc == 0.0 {
            return Ok(false);
        }
        if let Some(&j) = members.iter().find(|&&j| j >= n) {
            return Err(Error::DimensionMismatch { expected: n, got: j + 1 });
        }
        let inc = T::lit(inc);
        if self.memory == WeightMemory::Renormalized {
            self.raw = self.w.as_matrix().clone();
        }
        for i in 0..n {
            let row = self.raw.row_mut(i);
            for &j in members {
                if allow(i, j) {
                    row[j] = row[j] + inc;
                }
            }
        }
        self.w = rebuild(&self.raw)?;
        if self.memory == WeightMemory::Renormalized {
            self.raw = self.w.as_matrix().clone();
        }
        Ok(true)
    }

    /// Replaces the weights outright, e.g. with a within-topic limit.
    pub fn reset(&mut self, w: RowStochasticMatrix<T>) {
        self.raw = w.as_matrix().clone();
        self.w = w;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstSuccessStats {
    /// 1-based topic of the first nonempty truthful set.
    pub r: usize,
    pub p_eta: f64,
    /// `pmf[ν-1] = (1−p)^{ν−1} p`.
    pub pmf: Vec<f64>,
}

pub fn geometric_pmf(p: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut surv = 1.0;
    for _ in 0..len {
        out.push(surv * p);
        surv *= 1.0 - p;
    }
    out
}

/// Chance that at least one agent is truthful, given per-agent hit probabilities.
pub fn success_probability(per_agent: &[f64]) -> f64 {
    1.0 - per_agent.iter().map(|f| 1.0 - f).product::<f64>()
}

/// First truthful topic over a trace of truthful sets.
///
/// Without a supplied `p`, the hit rate over the whole trace is used. The pmf
/// is truncated at the trace length.
pub fn first_success(sets: &[TruthfulSet], p: Option<f64>) -> Result<FirstSuccessStats> {
    if sets.is_empty() {
        return Err(Error::InvalidParameter("no topics simulated".into()));
    }
    let p_eta = match p {
        Some(p) if (0.0..=1.0).contains(&p) => p,
        Some(p) => return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]"))),
        None => sets.iter().filter(|s| !s.is_empty()).count() as f64 / sets.len() as f64,
    };
    let pos = sets.iter().position(|s| !s.is_empty()).ok_or(Error::NoSuccess { horizon: sets.len() })?;
    let r = sets[pos].topic.max(pos + 1);
    Ok(FirstSuccessStats { r, p_eta, pmf: geometric_pmf(p_eta, sets.len()) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy(delta: f64, t: TFunction) -> TrustPolicy {
        TrustPolicy::new(0.25, delta, Tau::InitialBeliefs, t).unwrap()
    }

    #[test]
    fn truthful_set_examples() {
        let (mu, eta) = (1.0, 0.3);
        assert_eq!(truthful_set(&[mu, mu + 2.0 * eta], mu, eta), vec![0]);
        assert!(truthful_set(&[1.0, 1.0], 1.0, 0.0).is_empty());
        let b = [0.1, 0.3, 0.9];
        let oracle: Vec<usize> = (0..3).filter(|&j| f64::abs(b[j] - 0.0) < 0.25).collect();
        assert_eq!(truthful_set(&b, 0.0, 0.25), oracle);
        assert_eq!(oracle, vec![0]);
        // boundary is excluded
        assert!(truthful_set(&[0.25], 0.0, 0.25).is_empty());
    }

    #[test]
    fn adjust_examples() {
        let w: RowStochasticMatrix<f64> = RowStochasticMatrix::identity(3);
        let p = policy(0.2, TFunction::ConstantOne);
        assert_eq!(adjust_weights(&w, &[], &p).unwrap(), w);

        let a = adjust_weights(&w, &[0], &p).unwrap();
        let d = 0.2;
        assert!((a.get(0, 0) - 1.0).abs() < 1e-15);
        for i in 1..3 {
            assert!((a.get(i, 0) - d / (1.0 + d)).abs() < 1e-15);
            assert!((a.get(i, i) - 1.0 / (1.0 + d)).abs() < 1e-15);
        }

        let z = policy(0.2, TFunction::ZeroAtN);
        assert_eq!(adjust_weights(&w, &[0, 1, 2], &z).unwrap(), w);
    }

    #[test]
    fn t_functions() {
        assert_eq!(TFunction::ConstantOne.eval(5, 5), 1.0);
        assert_eq!(TFunction::ZeroAtN.eval(4, 5), 1.0);
        assert_eq!(TFunction::ZeroAtN.eval(5, 5), 0.0);
        assert!((TFunction::NegLogFraction.eval(1, 4) - 4f64.ln()).abs() < 1e-15);
        assert_eq!(TFunction::NegLogFraction.eval(4, 4), 0.0);
        for m in 1..=10 {
            assert!(TFunction::NegLogFraction.eval(m, 10) >= 0.0);
        }
    }

    #[test]
    fn policy_validation() {
        assert!(TrustPolicy::new(-0.1, 1.0, Tau::InitialBeliefs, TFunction::ConstantOne).is_err());
        assert!(TrustPolicy::new(0.1, 0.0, Tau::InitialBeliefs, TFunction::ConstantOne).is_err());
    }

    #[test]
    fn first_success_examples() {
        let mk = |k: usize, m: Vec<usize>| TruthfulSet { topic: k, members: m, reference: Tau::InitialBeliefs };
        let s = first_success(&[mk(1, vec![2]), mk(2, vec![])], None).unwrap();
        assert_eq!(s.r, 1);
        assert_eq!(s.p_eta, 0.5);
        let s = first_success(&[mk(1, vec![]), mk(2, vec![]), mk(3, vec![0])], Some(0.5)).unwrap();
        assert_eq!(s.r, 3);
        assert_eq!(s.pmf, vec![0.5, 0.25, 0.125]);
        assert_eq!(first_success(&[mk(1, vec![])], None), Err(Error::NoSuccess { horizon: 1 }));
        assert!(geometric_pmf(0.3, 50).iter().sum::<f64>() <= 1.0);
    }

    #[test]
    fn cumulative_ledger_counts_hits() {
        let n = 4;
        let p = policy(0.5, TFunction::ConstantOne);
        let mut led: TrustLedger<f64> = TrustLedger::new(RowStochasticMatrix::identity(n), WeightMemory::Cumulative);
        let topics: [&[usize]; 5] = [&[0], &[0, 2], &[], &[2], &[0, 1, 2, 3]];
        let mut hits = [0usize; 4];
        for m in topics {
            led.apply(m, &p).unwrap();
            for &j in m {
                hits[j] += 1;
            }
        }
        // oracle: identity plus δ times the hit count, normalized per row
        for i in 0..n {
            let raw: Vec<f64> = (0..n).map(|j| if i == j { 1.0 } else { 0.0 } + 0.5 * hits[j] as f64).collect();
            let total: f64 = raw.iter().sum();
            for j in 0..n {
                assert!((led.weights().get(i, j) - raw[j] / total).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn renormalized_ledger_matches_adjust_weights() {
        let p = policy(0.3, TFunction::NegLogFraction);
        let w0 = RowStochasticMatrix::from_rows(&[vec![0.5, 0.5, 0.0], vec![0.0, 1.0, 0.0], vec![0.2, 0.2, 0.6]]).unwrap();
        let mut led = TrustLedger::new(w0.clone(), WeightMemory::Renormalized);
        let mut w = w0;
        for m in [vec![1], vec![0, 2], vec![], vec![0, 1, 2], vec![2]] {
            let changed = led.apply(&m, &p).unwrap();
            let next = adjust_weights(&w, &m, &p).unwrap();
            assert_eq!(changed, next != w);
            w = next;
            assert!(led.weights().max_abs_diff(&w) < 1e-15);
        }
    }

    #[test]
    fn memories_agree_on_first_step() {
        let p = policy(0.2, TFunction::ConstantOne);
        let w0: RowStochasticMatrix<f64> = RowStochasticMatrix::identity(3);
        let mut a = TrustLedger::new(w0.clone(), WeightMemory::Cumulative);
        let mut b = TrustLedger::new(w0, WeightMemory::Renormalized);
        a.apply(&[0], &p).unwrap();
        b.apply(&[0], &p).unwrap();
        assert!(a.weights().max_abs_diff(b.weights()) < 1e-15);
        a.apply(&[1], &p).unwrap();
        b.apply(&[1], &p).unwrap();
        assert!(a.weights().max_abs_diff(b.weights()) > 1e-3);
    }
}
