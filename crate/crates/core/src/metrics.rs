//! Throughput and age-of-information random variables over one slot.
//!
//! Throughput of node i is `sigma_succ * rate` bits with probability
//! `P_succ,i` and zero otherwise. Age of node i, observed at the other nodes
//! of its network, resets to `sigma_succ` on its own success and otherwise
//! grows by the length of the slot that occurred. A network with a single
//! node is treated as reporting to a virtual monitor, so the same rules apply.

use crate::error::{Error, Result};
use crate::slot_model::{SlotLengths, SlotProbabilities, SlotType};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputPmf {
    pub success_bits: f64,
    pub p_success: f64,
}

impl ThroughputPmf {
    pub fn for_node(i: usize, probs: &SlotProbabilities, lengths: &SlotLengths) -> Result<Self> {
        Ok(Self {
            success_bits: lengths.success_bits(),
            p_success: node_success(i, probs)?,
        })
    }

    pub fn p_zero(&self) -> f64 {
        1.0 - self.p_success
    }

    pub fn mean(&self) -> f64 {
        self.p_success * self.success_bits
    }
}

/// Which slot outcome a node experienced, as seen by its age process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgeOutcome {
    Idle,
    Collision,
    /// Another node succeeded.
    Busy,
    OwnSuccess,
}

impl AgeOutcome {
    /// Age at the end of the slot given the age at its start.
    pub fn next_age(self, age_prior: f64, lengths: &SlotLengths) -> f64 {
        match self {
            AgeOutcome::Idle => age_prior + lengths.sigma_idle,
            AgeOutcome::Collision => age_prior + lengths.sigma_col,
            AgeOutcome::Busy => age_prior + lengths.sigma_succ,
            AgeOutcome::OwnSuccess => lengths.sigma_succ,
        }
    }

    pub fn from_slot(slot: SlotType, own_success: bool) -> Self {
        match (slot, own_success) {
            (_, true) => AgeOutcome::OwnSuccess,
            (SlotType::Idle, false) => AgeOutcome::Idle,
            (SlotType::Collision, false) => AgeOutcome::Collision,
            (SlotType::Success, false) => AgeOutcome::Busy,
        }
    }
}

/// Conditional PMF of a node's end-of-slot age given its age at slot start.
#[derive(Debug, Clone, PartialEq)]
pub struct AgePmf {
    pub age_prior: f64,
    /// (outcome, end-of-slot age, probability) in idle, collision, busy,
    /// own-success order.
    pub outcomes: [(AgeOutcome, f64, f64); 4],
}

impl AgePmf {
    pub fn for_node(
        age_prior: f64,
        i: usize,
        probs: &SlotProbabilities,
        lengths: &SlotLengths,
    ) -> Result<Self> {
        check_age(age_prior)?;
        let own = node_success(i, probs)?;
        let outcomes = [
            (AgeOutcome::Idle, probs.p_idle),
            (AgeOutcome::Collision, probs.p_col),
            (AgeOutcome::Busy, probs.p_busy_seen_by[i]),
            (AgeOutcome::OwnSuccess, own),
        ]
        .map(|(o, p)| (o, o.next_age(age_prior, lengths), p));
        Ok(Self { age_prior, outcomes })
    }

    pub fn total_mass(&self) -> f64 {
        self.outcomes.iter().map(|o| o.2).sum()
    }

    pub fn mean(&self) -> f64 {
        self.outcomes.iter().map(|o| o.1 * o.2).sum()
    }
}

fn node_success(i: usize, probs: &SlotProbabilities) -> Result<f64> {
    probs
        .p_succ_node
        .get(i)
        .copied()
        .ok_or(Error::IndexOutOfRange {
            index: i,
            len: probs.len(),
        })
}

fn check_age(age: f64) -> Result<()> {
    if age.is_finite() && age >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("age {age} must be finite and non-negative")))
    }
}

fn check_node_set(node_set: &[usize]) -> Result<()> {
    if node_set.is_empty() {
        Err(Error::EmptyNodeSet)
    } else {
        Ok(())
    }
}

/// `P_succ,i * sigma_succ * rate`.
pub fn node_expected_throughput(
    i: usize,
    probs: &SlotProbabilities,
    lengths: &SlotLengths,
) -> Result<f64> {
    Ok(node_success(i, probs)? * lengths.success_bits())
}

/// Mean expected throughput over `node_set`.
pub fn network_expected_throughput(
    probs: &SlotProbabilities,
    lengths: &SlotLengths,
    node_set: &[usize],
) -> Result<f64> {
    check_node_set(node_set)?;
    let mut sum = 0.0;
    for &i in node_set {
        sum += node_expected_throughput(i, probs, lengths)?;
    }
    Ok(sum / node_set.len() as f64)
}

/// `(1 - P_succ,i) * age_prior + E[slot length]`.
pub fn node_expected_age(
    age_prior: f64,
    i: usize,
    probs: &SlotProbabilities,
    lengths: &SlotLengths,
) -> Result<f64> {
    check_age(age_prior)?;
    let own = node_success(i, probs)?;
    Ok((1.0 - own) * age_prior + probs.expected_slot_length(lengths))
}

/// Mean expected end-of-slot age over `node_set`; `ages_prior[k]` is the
/// starting age of node `node_set[k]`.
pub fn network_expected_age(
    ages_prior: &[f64],
    probs: &SlotProbabilities,
    lengths: &SlotLengths,
    node_set: &[usize],
) -> Result<f64> {
    check_node_set(node_set)?;
    if ages_prior.len() != node_set.len() {
        return Err(Error::Domain(format!(
            "{} prior ages for {} nodes",
            ages_prior.len(),
            node_set.len()
        )));
    }
    let mut sum = 0.0;
    for (&age, &i) in ages_prior.iter().zip(node_set) {
        sum += node_expected_age(age, i, probs, lengths)?;
    }
    Ok(sum / node_set.len() as f64)
}
