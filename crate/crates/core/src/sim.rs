//! Slot-by-slot Monte Carlo simulation of the repeated game.
//!
//! Every stage each network plays its equilibrium access probability given
//! the state it observes (its own average age for an AON, its size for a
//! TON), every node draws its transmit decision independently, and the slot
//! is classified by the number of transmitters. AON node ages reset to
//! `sigma_succ` on the node's own success and otherwise grow by the length of
//! the slot. Stage payoffs are realized values; the expectation in the
//! discounted payoff comes from averaging over runs.
//!
//! Run `k` draws from the ChaCha8 stream `k` of the master seed, so results
//! do not depend on how runs are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::slot_model::{SlotLengths, SlotType};
use crate::stage_game::{aon_age_threshold, threshold_access};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkKind {
    Aon,
    Ton,
}

impl NetworkKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            NetworkKind::Aon => "aon",
            NetworkKind::Ton => "ton",
        }
    }
}

/// How a network picks its access probability each stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Zero up to the age threshold `n (sigma_succ - sigma_idle)`, the
    /// interior equilibrium above it.
    AgeThreshold,
    /// `1 / n`.
    Reciprocal,
    /// A constant access probability.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkSetup {
    pub kind: NetworkKind,
    pub n_nodes: usize,
    pub policy: Policy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub kind: NetworkKind,
    pub n_nodes: usize,
    /// Per-node ages; empty for a TON.
    pub node_ages: Vec<f64>,
    pub policy: Policy,
}

impl NetworkState {
    pub fn new(setup: &NetworkSetup, initial_age: f64) -> Self {
        let node_ages = match setup.kind {
            NetworkKind::Aon => vec![initial_age; setup.n_nodes],
            NetworkKind::Ton => Vec::new(),
        };
        Self {
            kind: setup.kind,
            n_nodes: setup.n_nodes,
            node_ages,
            policy: setup.policy,
        }
    }

    pub fn average_age(&self) -> Option<f64> {
        match self.kind {
            NetworkKind::Aon => {
                Some(self.node_ages.iter().sum::<f64>() / self.n_nodes as f64)
            }
            NetworkKind::Ton => None,
        }
    }

    pub fn access_probability(&self, lengths: &SlotLengths) -> f64 {
        match self.policy {
            Policy::AgeThreshold => {
                // an AgeThreshold TON has no age and falls back to silence
                let age = self.average_age().unwrap_or(0.0);
                threshold_access(self.n_nodes, age, lengths)
            }
            Policy::Reciprocal => 1.0 / self.n_nodes as f64,
            Policy::Fixed(tau) => tau,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// 1-based stage number.
    pub stage_index: usize,
    pub tau_by_network: Vec<f64>,
    pub slot_type: SlotType,
    /// (network, node) of the unique transmitter in a success slot.
    pub successful_node: Option<(usize, usize)>,
    /// Realized stage payoff per network: bits per node for a TON, negated
    /// end-of-stage average age for an AON.
    pub payoffs: Vec<f64>,
    /// Average age at stage end; `None` for a TON.
    pub avg_age_end: Vec<Option<f64>>,
}

impl StageRecord {
    fn first_of(&self, kinds: &[NetworkKind], kind: NetworkKind) -> Option<usize> {
        kinds.iter().position(|&k| k == kind)
    }

    /// Payoff of the first network of `kind`, if any.
    pub fn payoff_of(&self, kinds: &[NetworkKind], kind: NetworkKind) -> Option<f64> {
        self.first_of(kinds, kind).map(|i| self.payoffs[i])
    }

    pub fn network_succeeded(&self, network: usize) -> bool {
        matches!(self.successful_node, Some((n, _)) if n == network)
    }
}

/// Plays one stage, updating AON ages in place.
pub fn simulate_stage<R: Rng + ?Sized>(
    states: &mut [NetworkState],
    lengths: &SlotLengths,
    stage_index: usize,
    rng: &mut R,
) -> StageRecord {
    let taus: Vec<f64> = states.iter().map(|s| s.access_probability(lengths)).collect();

    let mut transmitters = 0usize;
    let mut last = None;
    for (net, (state, &tau)) in states.iter().zip(&taus).enumerate() {
        for node in 0..state.n_nodes {
            if rng.random::<f64>() < tau {
                transmitters += 1;
                last = Some((net, node));
            }
        }
    }
    let slot_type = SlotType::from_transmitters(transmitters);
    let successful_node = if slot_type == SlotType::Success { last } else { None };
    let slot_len = lengths.length_of(slot_type);

    let mut payoffs = Vec::with_capacity(states.len());
    let mut avg_age_end = Vec::with_capacity(states.len());
    for (net, state) in states.iter_mut().enumerate() {
        let own = successful_node.filter(|&(n, _)| n == net).map(|(_, node)| node);
        match state.kind {
            NetworkKind::Aon => {
                for age in state.node_ages.iter_mut() {
                    *age += slot_len;
                }
                if let Some(node) = own {
                    state.node_ages[node] = lengths.sigma_succ;
                }
                let avg = state.average_age().unwrap_or_default();
                payoffs.push(-avg);
                avg_age_end.push(Some(avg));
            }
            NetworkKind::Ton => {
                let bits = if own.is_some() {
                    lengths.success_bits() / state.n_nodes as f64
                } else {
                    0.0
                };
                payoffs.push(bits);
                avg_age_end.push(None);
            }
        }
    }

    StageRecord {
        stage_index,
        tau_by_network: taus,
        slot_type,
        successful_node,
        payoffs,
        avg_age_end,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub networks: Vec<NetworkSetup>,
    pub lengths: SlotLengths,
    pub stages: usize,
    pub runs: usize,
    pub alphas: Vec<f64>,
    pub master_seed: u64,
    /// Age every AON node starts with.
    pub initial_age: f64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.networks.is_empty() {
            return Err(Error::Config("no networks".into()));
        }
        for (i, net) in self.networks.iter().enumerate() {
            if net.n_nodes == 0 {
                return Err(Error::Config(format!("network {i} has no nodes")));
            }
            match net.policy {
                Policy::AgeThreshold if !self.lengths.equal_busy_lengths() => {
                    return Err(Error::UnequalSlotLengths {
                        succ: self.lengths.sigma_succ,
                        col: self.lengths.sigma_col,
                    })
                }
                Policy::Fixed(t) => check_probability("fixed tau", t)?,
                _ => {}
            }
        }
        if self.stages == 0 {
            return Err(Error::Config("stages must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        for &a in &self.alphas {
            check_alpha(a)?;
        }
        if !(self.initial_age.is_finite() && self.initial_age >= 0.0) {
            return Err(Error::Config(format!("initial age {} is invalid", self.initial_age)));
        }
        Ok(())
    }

    pub fn kinds(&self) -> Vec<NetworkKind> {
        self.networks.iter().map(|n| n.kind).collect()
    }

    fn initial_states(&self) -> Vec<NetworkState> {
        self.networks
            .iter()
            .map(|n| NetworkState::new(n, self.initial_age))
            .collect()
    }
}

/// Independent generator for run `run_index` of `master_seed`.
pub fn run_rng(master_seed: u64, run_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run_index);
    rng
}

fn drive_run(config: &RunConfig, run_index: u64, mut visit: impl FnMut(&StageRecord)) {
    let mut rng = run_rng(config.master_seed, run_index);
    let mut states = config.initial_states();
    for n in 1..=config.stages {
        let record = simulate_stage(&mut states, &config.lengths, n, &mut rng);
        visit(&record);
    }
}

/// Full per-stage trace of one run.
pub fn simulate_run(config: &RunConfig, run_index: u64) -> Result<Vec<StageRecord>> {
    config.validate()?;
    let mut trace = Vec::with_capacity(config.stages);
    drive_run(config, run_index, |r| trace.push(r.clone()));
    Ok(trace)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("discount factor {alpha} must lie in (0, 1)")))
    }
}

/// `(1 - alpha) * sum_n alpha^(n-1) u_n` over the given (truncated) horizon.
pub fn discounted_payoff(stage_payoffs: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let mut weight = 1.0;
    let mut sum = 0.0;
    for &u in stage_payoffs {
        sum += weight * u;
        weight *= alpha;
    }
    Ok((1.0 - alpha) * sum)
}

/// Statistics of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub idle: u64,
    pub collisions: u64,
    pub successes: Vec<u64>,
    pub tau_zero: Vec<u64>,
    /// `discounted[network][alpha]`.
    pub discounted: Vec<Vec<f64>>,
}

pub fn summarize_run(config: &RunConfig, run_index: u64) -> RunSummary {
    let nets = config.networks.len();
    let mut s = RunSummary {
        idle: 0,
        collisions: 0,
        successes: vec![0; nets],
        tau_zero: vec![0; nets],
        discounted: vec![vec![0.0; config.alphas.len()]; nets],
    };
    let mut weights = vec![1.0; config.alphas.len()];
    drive_run(config, run_index, |r| {
        match r.slot_type {
            SlotType::Idle => s.idle += 1,
            SlotType::Collision => s.collisions += 1,
            SlotType::Success => {}
        }
        if let Some((net, _)) = r.successful_node {
            s.successes[net] += 1;
        }
        for (net, &tau) in r.tau_by_network.iter().enumerate() {
            if tau == 0.0 {
                s.tau_zero[net] += 1;
            }
            for (a, w) in weights.iter().enumerate() {
                s.discounted[net][a] += w * r.payoffs[net];
            }
        }
        for (w, alpha) in weights.iter_mut().zip(&config.alphas) {
            *w *= alpha;
        }
    });
    for per_alpha in s.discounted.iter_mut() {
        for (v, alpha) in per_alpha.iter_mut().zip(&config.alphas) {
            *v *= 1.0 - alpha;
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    fn from_samples(samples: impl Iterator<Item = f64> + Clone) -> Self {
        let n = samples.clone().count() as f64;
        let mean = samples.clone().sum::<f64>() / n;
        let std_error = if n > 1.0 {
            let var = samples.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self { mean, std_error }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkAggregate {
    pub kind: NetworkKind,
    pub n_nodes: usize,
    /// Discounted payoff per entry of `RunAggregate::alphas`.
    pub discounted: Vec<Estimate>,
    /// Network success slots divided by `stages * runs * n_nodes`.
    pub freq_success_per_node: f64,
    /// Fraction of stages with a zero access probability; AON only.
    pub freq_tau_zero: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub runs: usize,
    pub stages: usize,
    pub alphas: Vec<f64>,
    pub networks: Vec<NetworkAggregate>,
    pub freq_idle: f64,
    pub freq_collision: f64,
}

impl RunAggregate {
    pub fn first(&self, kind: NetworkKind) -> Option<&NetworkAggregate> {
        self.networks.iter().find(|n| n.kind == kind)
    }

    /// Discounted payoff of the first TON at `alphas[i]`.
    pub fn u_ton(&self, i: usize) -> Option<Estimate> {
        self.first(NetworkKind::Ton).map(|n| n.discounted[i])
    }

    /// Discounted payoff of the first AON at `alphas[i]`.
    pub fn u_aon(&self, i: usize) -> Option<Estimate> {
        self.first(NetworkKind::Aon).map(|n| n.discounted[i])
    }

    fn from_summaries(config: &RunConfig, summaries: &[RunSummary]) -> Self {
        let total_stages = (config.stages * config.runs) as f64;
        let sum_over = |f: &dyn Fn(&RunSummary) -> u64| summaries.iter().map(f).sum::<u64>() as f64;
        let networks = config
            .networks
            .iter()
            .enumerate()
            .map(|(net, setup)| NetworkAggregate {
                kind: setup.kind,
                n_nodes: setup.n_nodes,
                discounted: (0..config.alphas.len())
                    .map(|a| Estimate::from_samples(summaries.iter().map(move |s| s.discounted[net][a])))
                    .collect(),
                freq_success_per_node: sum_over(&|s| s.successes[net])
                    / (total_stages * setup.n_nodes as f64),
                freq_tau_zero: (setup.kind == NetworkKind::Aon)
                    .then(|| sum_over(&|s| s.tau_zero[net]) / total_stages),
            })
            .collect();
        Self {
            runs: config.runs,
            stages: config.stages,
            alphas: config.alphas.clone(),
            networks,
            freq_idle: sum_over(&|s| s.idle) / total_stages,
            freq_collision: sum_over(&|s| s.collisions) / total_stages,
        }
    }
}

/// Runs the batch on the global rayon pool.
pub fn monte_carlo(config: &RunConfig) -> Result<RunAggregate> {
    monte_carlo_with_threads(config, None)
}

/// Runs the batch with `threads` workers (`Some(1)` runs serially on the
/// calling thread, `None` uses the global pool). The result does not depend
/// on the thread count.
pub fn monte_carlo_with_threads(config: &RunConfig, threads: Option<usize>) -> Result<RunAggregate> {
    config.validate()?;
    let runs = config.runs as u64;
    let summaries: Vec<RunSummary> = match threads {
        Some(1) => (0..runs).map(|k| summarize_run(config, k)).collect(),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| (0..runs).into_par_iter().map(|k| summarize_run(config, k)).collect())
        }
        None => (0..runs).into_par_iter().map(|k| summarize_run(config, k)).collect(),
    };
    Ok(RunAggregate::from_summaries(config, &summaries))
}

/// Whether an AON of `n` nodes at average age `age` is at or below the age
/// where its equilibrium access probability is zero.
pub fn below_threshold(n: usize, age: f64, lengths: &SlotLengths) -> bool {
    age <= aon_age_threshold(n, lengths)
}
