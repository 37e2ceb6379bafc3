//! Per-slot event probabilities for a set of nodes sharing one slotted
//! CSMA/CA medium.
//!
//! A slot is idle when nobody transmits, a success when exactly one node
//! transmits and a collision otherwise. Every node senses every other node,
//! so the only randomness is the independent per-node transmit decision.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};

/// Time geometry of the channel: idle, success and collision slot lengths
/// plus the transmission rate in bits per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotLengths {
    pub sigma_idle: f64,
    pub sigma_succ: f64,
    pub sigma_col: f64,
    pub rate: f64,
}

impl SlotLengths {
    pub fn new(sigma_idle: f64, sigma_succ: f64, sigma_col: f64, rate: f64) -> Result<Self> {
        for (name, v) in [
            ("sigma_idle", sigma_idle),
            ("sigma_succ", sigma_succ),
            ("sigma_col", sigma_col),
            ("rate", rate),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} = {v} must be positive")));
            }
        }
        Ok(Self {
            sigma_idle,
            sigma_succ,
            sigma_col,
            rate,
        })
    }

    /// `sigma_idle = beta`, `sigma_succ = sigma_col = 1 + beta`, for `0 < beta < 1`.
    pub fn from_beta(beta: f64, rate: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Domain(format!("beta = {beta} must lie in (0, 1)")));
        }
        Self::new(beta, 1.0 + beta, 1.0 + beta, rate)
    }

    pub fn equal_busy_lengths(&self) -> bool {
        self.sigma_succ == self.sigma_col
    }

    pub fn length_of(&self, slot: SlotType) -> f64 {
        match slot {
            SlotType::Idle => self.sigma_idle,
            SlotType::Success => self.sigma_succ,
            SlotType::Collision => self.sigma_col,
        }
    }

    /// Bits delivered by one successful slot.
    pub fn success_bits(&self) -> f64 {
        self.sigma_succ * self.rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotType {
    Idle,
    Success,
    Collision,
}

impl SlotType {
    /// Classifies a slot by the number of nodes that transmitted in it.
    pub fn from_transmitters(count: usize) -> Self {
        match count {
            0 => SlotType::Idle,
            1 => SlotType::Success,
            _ => SlotType::Collision,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SlotType::Idle => "idle",
            SlotType::Success => "success",
            SlotType::Collision => "collision",
        }
    }
}

/// Per-node transmit probabilities; the index identifies the node.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessVector(Vec<f64>);

impl AccessVector {
    pub fn new(taus: Vec<f64>) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::EmptyNodeSet);
        }
        for (i, &t) in taus.iter().enumerate() {
            check_probability(&format!("tau[{i}]"), t)?;
        }
        Ok(Self(taus))
    }

    /// `n_first` nodes at `tau_first` followed by `n_second` nodes at `tau_second`.
    pub fn two_groups(n_first: usize, tau_first: f64, n_second: usize, tau_second: f64) -> Result<Self> {
        let mut taus = vec![tau_first; n_first];
        taus.extend(std::iter::repeat_n(tau_second, n_second));
        Self::new(taus)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotProbabilities {
    pub p_idle: f64,
    /// Probability that node i is the unique transmitter.
    pub p_succ_node: Vec<f64>,
    pub p_succ_total: f64,
    /// Probability that node i stays silent and exactly one other node transmits.
    pub p_busy_seen_by: Vec<f64>,
    pub p_col: f64,
}

impl SlotProbabilities {
    pub fn len(&self) -> usize {
        self.p_succ_node.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_succ_node.is_empty()
    }

    /// Expected slot length `p_idle*sigma_idle + p_succ*sigma_succ + p_col*sigma_col`.
    pub fn expected_slot_length(&self, lengths: &SlotLengths) -> f64 {
        self.p_idle * lengths.sigma_idle
            + self.p_succ_total * lengths.sigma_succ
            + self.p_col * lengths.sigma_col
    }
}

/// Computes the idle/success/busy/collision probabilities with direct products.
pub fn slot_probabilities(taus: &AccessVector) -> SlotProbabilities {
    let taus = taus.as_slice();
    let n = taus.len();
    let p_idle: f64 = taus.iter().map(|t| 1.0 - t).product();

    // Product of (1 - tau_j) over j != i, computed without dividing so that
    // tau_i = 1 is handled exactly.
    let mut prefix = vec![1.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] * (1.0 - taus[i]);
    }
    let mut suffix = vec![1.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] * (1.0 - taus[i]);
    }
    let p_succ_node: Vec<f64> = (0..n)
        .map(|i| taus[i] * prefix[i] * suffix[i + 1])
        .collect();
    let p_succ_total: f64 = p_succ_node.iter().sum();
    let p_busy_seen_by: Vec<f64> = (0..n)
        .map(|i| {
            p_succ_node
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, p)| p)
                .sum()
        })
        .collect();
    let p_col = (1.0 - p_idle - p_succ_total).max(0.0);

    SlotProbabilities {
        p_idle,
        p_succ_node,
        p_succ_total,
        p_busy_seen_by,
        p_col,
    }
}
