//! Scenario description and the multi-topic engine shared by all model variants.

use serde::{Deserialize, Serialize};

use crate::beliefs::{sample_initial, BeliefDistribution, GroupSpec, SeededRng};
use crate::conformity::{build_M, ConformityParams, ReferenceMatrix};
use crate::degroot::{iterate_linear, iterate_self_weight, IterationOptions, LambdaSchedule, LimitResult};
use crate::error::{Error, Result};
use crate::homophily::{run_topic_homophily_with, truth_adjust_between_topics, HomophilyParams};
use crate::linalg::Matrix;
use crate::metrics::{wisdom_report, TopicSummary, WisdomReport};
use crate::opposition::{build_A, grouped_renormalize, OppositionParams, OppositionStructure};
use crate::scalar::Real;
use crate::stochastic::{RowStochasticMatrix, TruthSequence};
use crate::trust::{first_success, truthful_set, FirstSuccessStats, Tau, TrustLedger, TrustPolicy, TruthfulSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialWeights {
    #[default]
    Identity,
    Uniform,
    Explicit {
        rows: Vec<Vec<f64>>,
    },
    /// Uniform blocks: `a` within the first `n1` agents, `b` from them to the rest,
    /// `c` from the rest to them, `d` within the rest. An omitted `a` or `d`
    /// is filled in so that rows sum to one.
    Block {
        n1: usize,
        #[serde(default)]
        a: Option<f64>,
        b: f64,
        c: f64,
        #[serde(default)]
        d: Option<f64>,
    },
}

impl InitialWeights {
    pub fn build<T: Real>(&self, n: usize) -> Result<RowStochasticMatrix<T>> {
        match self {
            InitialWeights::Identity => Ok(RowStochasticMatrix::identity(n)),
            InitialWeights::Uniform => Ok(RowStochasticMatrix::uniform(n)),
            InitialWeights::Explicit { rows } => {
                if rows.len() != n {
                    return Err(Error::ConfigInvalid(format!("explicit weights have {} rows, expected {n}", rows.len())));
                }
                let m: Vec<Vec<T>> = rows.iter().map(|r| r.iter().map(|&x| T::lit(x)).collect()).collect();
                RowStochasticMatrix::with_tolerance(Matrix::from_rows(&m)?, T::lit(1e-9))
            }
            InitialWeights::Block { n1, a, b, c, d } => {
                if *n1 == 0 || *n1 >= n {
                    return Err(Error::ConfigInvalid(format!("block split n1 = {n1} must lie in 1..{n}")));
                }
                let n2 = n - n1;
                let a = a.unwrap_or((1.0 - n2 as f64 * b) / *n1 as f64);
                let d = d.unwrap_or((1.0 - *n1 as f64 * c) / n2 as f64);
                OppositionParams { n1: *n1, n2, a, b: *b, c: *c, d }.weight_matrix()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ReferenceSpec {
    /// Everyone else weighted equally.
    #[default]
    Uniform,
    DerivedFromW,
    Explicit {
        rows: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelSpec {
    Standard,
    Demarzo {
        schedule: LambdaSchedule,
    },
    /// The first `n1` agents form group A, the rest group B.
    Opposition {
        n1: usize,
    },
    /// One `δ` per agent, or one per group.
    Conformity {
        deltas: Vec<f64>,
        #[serde(default)]
        reference: ReferenceSpec,
    },
    /// Truth radius and increment come from the trust policy.
    Homophily {
        eta_h: f64,
        delta_h: f64,
        #[serde(default)]
        belief_tol: Option<f64>,
        #[serde(default)]
        weight_tol: Option<f64>,
        #[serde(default)]
        max_rounds: Option<usize>,
    },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Standard => "standard",
            ModelSpec::Demarzo { .. } => "demarzo",
            ModelSpec::Opposition { .. } => "opposition",
            ModelSpec::Conformity { .. } => "conformity",
            ModelSpec::Homophily { .. } => "homophily",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol: f64,
    pub max_rounds: usize,
    pub consensus_tol: f64,
    pub overflow_bound: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tol: 1e-10, max_rounds: 100_000, consensus_tol: 1e-8, overflow_bound: 1e12 }
    }
}

impl Tolerances {
    pub fn options<T: Real>(&self) -> IterationOptions<T> {
        IterationOptions {
            tol: T::lit(self.tol),
            max_rounds: self.max_rounds,
            consensus_tol: T::lit(self.consensus_tol),
            overflow_bound: T::lit(self.overflow_bound),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputOptions {
    /// Record every m-th round of every topic; 0 keeps only per-topic summaries.
    pub round_stride: usize,
    /// Snapshot weights every m-th topic; 0 disables snapshots.
    pub weight_stride: usize,
    /// Radius used by the wisdom report.
    pub eps: f64,
    pub tail_fraction: f64,
}

impl Default for OutputOptions {
    fn default() -> Self {
        OutputOptions { round_stride: 1, weight_stride: 1, eps: 0.25, tail_fraction: 0.2 }
    }
}

fn default_name() -> String {
    "scenario".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub model: ModelSpec,
    pub groups: Vec<GroupSpec>,
    pub truth: TruthSequence,
    pub trust: TrustPolicy,
    pub topics: usize,
    #[serde(default)]
    pub seed: u64,
    /// Replication seeds; empty means just `seed`.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub initial_weights: InitialWeights,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputOptions,
}

impl ScenarioConfig {
    pub fn n(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }

    pub fn seed_list(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.seeds.clone()
        }
    }

    /// Schema and cross-field checks.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if self.groups.is_empty() {
            return bad("at least one group is required".into());
        }
        for (g, spec) in self.groups.iter().enumerate() {
            spec.validate().map_err(|e| Error::ConfigInvalid(format!("group {g}: {e}")))?;
        }
        if self.topics == 0 {
            return bad("topics must be at least 1".into());
        }
        self.trust.validate().map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        if let Some(len) = self.truth.len_bound() {
            if len < self.topics {
                return bad(format!("truth sequence has {len} values for {} topics", self.topics));
            }
        }
        for k in 1..=self.topics.min(self.truth.len_bound().unwrap_or(self.topics)) {
            self.truth.mu(k).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        }
        for (g, spec) in self.groups.iter().enumerate() {
            match spec.distribution {
                BeliefDistribution::UniformInterval { .. } if !self.truth.is_constant() => {
                    return bad(format!(
                        "group {g}: an absolute uniform interval needs a constant truth sequence"
                    ));
                }
                BeliefDistribution::NeverTruthful { lo, hi } if !(lo >= self.trust.eta || hi <= -self.trust.eta) => {
                    return bad(format!(
                        "group {g}: never-truthful offsets [{lo}, {hi}] overlap the eta-ball of radius {}",
                        self.trust.eta
                    ));
                }
                _ => {}
            }
        }
        let n = self.n();
        match &self.initial_weights {
            InitialWeights::Explicit { rows } if rows.len() != n || rows.iter().any(|r| r.len() != n) => {
                return bad(format!("explicit initial weights must be {n}x{n}"));
            }
            _ => {}
        }
        self.initial_weights.build::<f64>(n).map_err(|e| Error::ConfigInvalid(format!("initial weights: {e}")))?;
        match &self.model {
            ModelSpec::Standard => {}
            ModelSpec::Demarzo { schedule } => match *schedule {
                LambdaSchedule::Constant { lambda } if !(lambda > 0.0 && lambda <= 1.0) => {
                    return bad(format!("constant lambda must lie in (0, 1], got {lambda}"));
                }
                LambdaSchedule::Geometric { ratio } if !(ratio > 0.0 && ratio <= 1.0) => {
                    return bad(format!("geometric ratio must lie in (0, 1], got {ratio}"));
                }
                _ => {}
            },
            ModelSpec::Opposition { n1 } => {
                if *n1 == 0 || *n1 >= n {
                    return bad(format!("opposition split n1 = {n1} must lie in 1..{n}"));
                }
                if let InitialWeights::Block { n1: b1, .. } = self.initial_weights {
                    if b1 != *n1 {
                        return bad(format!("block split {b1} differs from opposition split {n1}"));
                    }
                }
            }
            ModelSpec::Conformity { deltas, reference } => {
                self.expand_deltas(deltas)?;
                if let ReferenceSpec::Explicit { rows } = reference {
                    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                        return bad(format!("explicit reference matrix must be {n}x{n}"));
                    }
                }
                self.conformity_params::<f64>()?;
            }
            ModelSpec::Homophily { .. } => {
                self.homophily_params()?.validate().map_err(|e| Error::ConfigInvalid(e.to_string()))?;
            }
        }
        if !(self.output.eps >= 0.0) || !(0.0..=1.0).contains(&self.output.tail_fraction) {
            return bad("output eps must be nonnegative and tail_fraction in [0, 1]".into());
        }
        Ok(())
    }

    fn expand_deltas(&self, deltas: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let out = if deltas.len() == n {
            deltas.to_vec()
        } else if deltas.len() == self.groups.len() {
            self.groups.iter().zip(deltas).flat_map(|(g, &d)| std::iter::repeat_n(d, g.count)).collect()
        } else {
            return Err(Error::ConfigInvalid(format!(
                "conformity needs {n} per-agent or {} per-group deltas, got {}",
                self.groups.len(),
                deltas.len()
            )));
        };
        if let Some(d) = out.iter().find(|d| !(d.abs() < 1.0)) {
            return Err(Error::ConfigInvalid(format!("conformity parameter {d} outside (-1, 1)")));
        }
        Ok(out)
    }

    pub fn conformity_params<T: Real>(&self) -> Result<ConformityParams<T>> {
        let ModelSpec::Conformity { deltas, reference } = &self.model else {
            return Err(Error::ConfigInvalid("not a conformity scenario".into()));
        };
        let deltas: Vec<T> = self.expand_deltas(deltas)?.into_iter().map(T::lit).collect();
        Ok(match reference {
            ReferenceSpec::Uniform => ConformityParams::uniform_q(deltas),
            ReferenceSpec::DerivedFromW => ConformityParams { deltas, reference: ReferenceMatrix::DerivedFromW },
            ReferenceSpec::Explicit { rows } => {
                let m: Vec<Vec<T>> = rows.iter().map(|r| r.iter().map(|&x| T::lit(x)).collect()).collect();
                ConformityParams { deltas, reference: ReferenceMatrix::Explicit { q: Matrix::from_rows(&m)? } }
            }
        })
    }

    pub fn homophily_params(&self) -> Result<HomophilyParams> {
        let ModelSpec::Homophily { eta_h, delta_h, belief_tol, weight_tol, max_rounds } = &self.model else {
            return Err(Error::ConfigInvalid("not a homophily scenario".into()));
        };
        let mut p = HomophilyParams::new(*eta_h, *delta_h, self.trust.eta, self.trust.delta);
        p.tau = self.trust.tau;
        p.t_function = self.trust.t_function;
        if let Some(x) = belief_tol {
            p.belief_tol = *x;
        }
        if let Some(x) = weight_tol {
            p.weight_tol = *x;
        }
        if let Some(x) = max_rounds {
            p.max_rounds = *x;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub topic: usize,
    pub round: usize,
    pub agent: usize,
    pub belief: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub topic: usize,
    pub row: usize,
    pub col: usize,
    pub weight: f64,
}

/// Everything one replication produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub seed: u64,
    pub topics: Vec<TopicSummary>,
    /// Ordered by (topic, round, agent).
    pub records: Vec<TraceRecord>,
    /// Weights in effect at the start of each snapshotted topic.
    pub weights: Vec<WeightRecord>,
    pub final_weights: Vec<Vec<f64>>,
    pub first_success: Option<FirstSuccessStats>,
    pub wisdom: WisdomReport,
    pub warnings: Vec<String>,
}

impl RunOutput {
    pub fn truthful_sets(&self, tau: Tau) -> Vec<TruthfulSet> {
        self.topics
            .iter()
            .map(|t| TruthfulSet { topic: t.topic, members: t.truthful.clone(), reference: tau })
            .collect()
    }
}

enum Engine<T> {
    Standard,
    Demarzo(LambdaSchedule),
    Opposition(OppositionStructure),
    Conformity(ConformityParams<T>),
    Homophily(HomophilyParams),
}

/// Runs every topic of `cfg` for one seed with scalar type `T`.
pub fn run_scenario<T: Real>(cfg: &ScenarioConfig, seed: u64) -> Result<RunOutput> {
    cfg.validate()?;
    let n = cfg.n();
    let rng = SeededRng::new(seed);
    let opts = cfg.tolerances.options::<T>();
    let policy = cfg.trust;
    let engine = match &cfg.model {
        ModelSpec::Standard => Engine::Standard,
        ModelSpec::Demarzo { schedule } => Engine::Demarzo(*schedule),
        ModelSpec::Opposition { n1 } => Engine::Opposition(OppositionStructure::split(*n1, n - n1)),
        ModelSpec::Conformity { .. } => Engine::Conformity(cfg.conformity_params()?),
        ModelSpec::Homophily { .. } => Engine::Homophily(cfg.homophily_params()?),
    };
    let mut ledger = TrustLedger::new(cfg.initial_weights.build::<T>(n)?, policy.memory);
    let mut topics = Vec::with_capacity(cfg.topics);
    let mut records = Vec::new();
    let mut weights = Vec::new();
    let mut warnings = Vec::new();
    let stride = cfg.output.round_stride;

    for k in 1..=cfg.topics {
        let mu_f = cfg.truth.mu(k)?;
        let mu = T::lit(mu_f);
        let b0: Vec<T> = sample_initial(&cfg.groups, mu_f, k, &rng)?;
        if cfg.output.weight_stride > 0 && (k - 1) % cfg.output.weight_stride == 0 {
            push_weights(&mut weights, k, ledger.weights());
        }
        let mut last_recorded = None;
        let mut observer = |t: usize, b: &[T]| {
            if stride > 0 && t % stride == 0 {
                push_beliefs(&mut records, k, t, b);
                last_recorded = Some(t);
            }
        };
        let w = ledger.weights().clone();
        let (limit, w_limit): (LimitResult<T>, Option<RowStochasticMatrix<T>>) = match &engine {
            Engine::Standard => (iterate_linear(w.as_matrix(), &b0, &opts, &mut observer)?, None),
            Engine::Demarzo(s) => (iterate_self_weight(&w, &b0, s, &opts, &mut observer)?, None),
            Engine::Opposition(f) => (iterate_linear(&build_A(&w, f)?, &b0, &opts, &mut observer)?, None),
            Engine::Conformity(p) => {
                let rc = p.resolve(&w)?;
                for msg in &rc.warnings {
                    warnings.push(format!("topic {k}: {msg}"));
                }
                (iterate_linear(&build_M(&w, &rc)?, &b0, &opts, &mut observer)?, None)
            }
            Engine::Homophily(p) => {
                let r = run_topic_homophily_with(&w, &b0, p, &mut observer)?;
                if !r.converged() {
                    warnings.push(format!(
                        "topic {k}: homophily rounds hit the cap (beliefs settled: {}, weights settled: {})",
                        r.beliefs_converged, r.weights_converged
                    ));
                }
                (r.limit, Some(r.w_limit))
            }
        };
        if stride > 0 && last_recorded != Some(limit.rounds_used) && !limit.diverged {
            push_beliefs(&mut records, k, limit.rounds_used, &limit.beliefs);
        }
        if limit.diverged {
            warnings.push(format!("topic {k}: beliefs diverged after {} rounds", limit.rounds_used));
        } else if !limit.converged && cfg.trust.tau == Tau::LimitBeliefs {
            warnings.push(format!("topic {k}: no converged limit; trust update skipped"));
        }

        let reference: Option<&[T]> = match cfg.trust.tau {
            Tau::InitialBeliefs => Some(&b0),
            Tau::LimitBeliefs if limit.converged && !limit.diverged => Some(&limit.beliefs),
            Tau::LimitBeliefs => None,
        };
        let members = reference.map(|b| truthful_set(b, mu, T::lit(policy.eta))).unwrap_or_default();
        let adjusted = reference.is_some();
        match (&engine, w_limit) {
            (Engine::Homophily(p), Some(wl)) => {
                let next = if adjusted { truth_adjust_between_topics(&wl, &members, p)? } else { wl };
                ledger.reset(next);
            }
            (_, _) if !adjusted => {}
            (Engine::Opposition(f), _) => {
                let initial = ledger.initial().clone();
                ledger.apply_masked(&members, &policy, |i, j| f.same_side(i, j), |raw| {
                    grouped_renormalize(raw, &initial, f)
                })?;
            }
            (_, _) => {
                ledger.apply(&members, &policy)?;
            }
        }

        topics.push(TopicSummary {
            topic: k,
            mu: mu_f,
            initial: b0.iter().map(|x| x.to_f64_lossy()).collect(),
            limit: limit.beliefs.iter().map(|x| x.to_f64_lossy()).collect(),
            rounds: limit.rounds_used,
            converged: limit.converged,
            diverged: limit.diverged,
            is_consensus: limit.is_consensus,
            consensus_value: limit.consensus_value.map(|x| x.to_f64_lossy()),
            truthful: members,
            adjusted,
        });
    }

    let sets: Vec<TruthfulSet> = topics
        .iter()
        .map(|t| TruthfulSet { topic: t.topic, members: t.truthful.clone(), reference: policy.tau })
        .collect();
    let wisdom = wisdom_report(&topics, cfg.output.eps, Some(cfg.output.tail_fraction));
    Ok(RunOutput {
        seed,
        first_success: first_success(&sets, None).ok(),
        wisdom,
        final_weights: ledger.weights().as_matrix().to_rows().iter().map(|r| r.iter().map(|x| x.to_f64_lossy()).collect()).collect(),
        topics,
        records,
        weights,
        warnings,
    })
}

fn push_beliefs<T: Real>(records: &mut Vec<TraceRecord>, topic: usize, round: usize, b: &[T]) {
    records.extend(b.iter().enumerate().map(|(agent, x)| TraceRecord { topic, round, agent, belief: x.to_f64_lossy() }));
}

fn push_weights<T: Real>(out: &mut Vec<WeightRecord>, topic: usize, w: &RowStochasticMatrix<T>) {
    let n = w.n();
    for row in 0..n {
        for col in 0..n {
            out.push(WeightRecord { topic, row, col, weight: w.get(row, col).to_f64_lossy() });
        }
    }
}

/// Runs every replication seed, in parallel on `threads` workers (0 = all cores),
/// returning results in seed-list order.
pub fn run_replications(cfg: &ScenarioConfig, threads: usize) -> Result<Vec<RunOutput>> {
    use rayon::prelude::*;
    cfg.validate()?;
    let seeds = cfg.seed_list();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| seeds.par_iter().map(|&s| run_scenario::<f64>(cfg, s)).collect())
}

/// Convenience for callers that already hold a policy.
pub fn standard_config(groups: Vec<GroupSpec>, truth: TruthSequence, trust: TrustPolicy, topics: usize, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        name: default_name(),
        model: ModelSpec::Standard,
        groups,
        truth,
        trust,
        topics,
        seed,
        seeds: Vec::new(),
        initial_weights: InitialWeights::Identity,
        tolerances: Tolerances::default(),
        output: OutputOptions::default(),
    }
}
