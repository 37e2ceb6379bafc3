//! The one-shot coexistence game played in every slot.
//!
//! Two players: an age optimizing network (AON) with `n_aon` nodes and a
//! throughput optimizing network (TON) with `n_ton` nodes. Every node of a
//! network transmits with the same probability, so a mixed strategy is a
//! single access probability per network. The game is parameterized by the
//! average AON age at the start of the slot.
//!
//! The TON payoff is its mean per-node expected throughput; the AON payoff is
//! the negated mean expected end-of-slot age of its nodes.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::metrics::{network_expected_age, network_expected_throughput};
use crate::slot_model::{slot_probabilities, AccessVector, SlotLengths};

/// Largest node count for which pure profiles are enumerated.
pub const MAX_ENUMERATED_NODES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageGameParams {
    pub n_aon: usize,
    pub n_ton: usize,
    pub lengths: SlotLengths,
    /// Average AON age at the start of the stage.
    pub age_state: f64,
}

impl StageGameParams {
    pub fn new(n_aon: usize, n_ton: usize, lengths: SlotLengths, age_state: f64) -> Result<Self> {
        if n_aon + n_ton == 0 {
            return Err(Error::Domain("stage game needs at least one node".into()));
        }
        if !(age_state.is_finite() && age_state >= 0.0) {
            return Err(Error::Domain(format!("age state {age_state} must be non-negative")));
        }
        Ok(Self {
            n_aon,
            n_ton,
            lengths,
            age_state,
        })
    }

    pub fn total_nodes(&self) -> usize {
        self.n_aon + self.n_ton
    }

    /// Age below which the AON equilibrium access probability is zero when
    /// success and collision slots have equal length.
    pub fn age_threshold(&self) -> f64 {
        aon_age_threshold(self.n_aon, &self.lengths)
    }

    fn access_vector(&self, profile: &StrategyProfile) -> Result<AccessVector> {
        AccessVector::two_groups(self.n_aon, profile.tau_aon, self.n_ton, profile.tau_ton)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub tau_aon: f64,
    pub tau_ton: f64,
}

impl StrategyProfile {
    pub fn new(tau_aon: f64, tau_ton: f64) -> Result<Self> {
        check_probability("tau_aon", tau_aon)?;
        check_probability("tau_ton", tau_ton)?;
        Ok(Self { tau_aon, tau_ton })
    }
}

/// Stage payoffs. A network with no nodes gets a payoff of zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StagePayoffs {
    pub u_ton: f64,
    pub u_aon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    /// `None` when the game has no AON nodes.
    pub tau_aon_star: Option<f64>,
    /// `None` when the game has no TON nodes.
    pub tau_ton_star: Option<f64>,
    /// `None` when the game has no AON nodes.
    pub age_threshold: Option<f64>,
    /// Set when the interior formula landed outside [0, 1] and was clamped.
    pub clamped: bool,
}

impl EquilibriumResult {
    pub fn profile(&self) -> StrategyProfile {
        StrategyProfile {
            tau_aon: self.tau_aon_star.unwrap_or(0.0),
            tau_ton: self.tau_ton_star.unwrap_or(0.0),
        }
    }
}

pub fn stage_payoffs(params: &StageGameParams, profile: &StrategyProfile) -> Result<StagePayoffs> {
    let probs = slot_probabilities(&params.access_vector(profile)?);
    let lengths = &params.lengths;
    let u_ton = if params.n_ton > 0 {
        let tons: Vec<usize> = (params.n_aon..params.total_nodes()).collect();
        network_expected_throughput(&probs, lengths, &tons)?
    } else {
        0.0
    };
    let u_aon = if params.n_aon > 0 {
        let aons: Vec<usize> = (0..params.n_aon).collect();
        let priors = vec![params.age_state; params.n_aon];
        -network_expected_age(&priors, &probs, lengths, &aons)?
    } else {
        0.0
    };
    Ok(StagePayoffs { u_ton, u_aon })
}

/// Expected average AON age written out in closed form as a polynomial in
/// the two access probabilities (the quantity the AON minimizes).
pub fn expanded_aon_age(params: &StageGameParams, profile: &StrategyProfile) -> f64 {
    let StageGameParams {
        n_aon, n_ton, lengths, age_state,
    } = *params;
    let (na, nw) = (n_aon as i32, n_ton as i32);
    let (ta, tw) = (profile.tau_aon, profile.tau_ton);
    let SlotLengths {
        sigma_idle: si,
        sigma_succ: ss,
        sigma_col: sc,
        ..
    } = lengths;
    let ton_idle = (1.0 - tw).powi(nw);
    let aon_single = if na == 0 { 0.0 } else { ta * pow_or_one(1.0 - ta, na - 1) };
    let ton_single = if nw == 0 { 0.0 } else { tw * pow_or_one(1.0 - tw, nw - 1) };
    (1.0 - aon_single * ton_idle) * age_state
        + (1.0 - ta).powi(na) * ton_idle * (si - sc)
        + sc
        + (na as f64 * aon_single * ton_idle + nw as f64 * ton_single * (1.0 - ta).powi(na))
            * (ss - sc)
}

/// Per-node TON throughput in closed form, `tau_W (1-tau_W)^(N_W-1) (1-tau_A)^N_A sigma_S r`.
pub fn expanded_ton_throughput(params: &StageGameParams, profile: &StrategyProfile) -> f64 {
    if params.n_ton == 0 {
        return 0.0;
    }
    let (ta, tw) = (profile.tau_aon, profile.tau_ton);
    tw * pow_or_one(1.0 - tw, params.n_ton as i32 - 1)
        * (1.0 - ta).powi(params.n_aon as i32)
        * params.lengths.success_bits()
}

// x^0 is 1 even for x = 0, which is what every expansion here needs.
fn pow_or_one(x: f64, k: i32) -> f64 {
    if k == 0 {
        1.0
    } else {
        x.powi(k)
    }
}

pub fn aon_age_threshold(n_aon: usize, lengths: &SlotLengths) -> f64 {
    n_aon as f64 * (lengths.sigma_succ - lengths.sigma_idle)
}

/// AON access probability from its size and average age, assuming equal
/// success and collision slot lengths.
pub(crate) fn threshold_access(n: usize, age: f64, lengths: &SlotLengths) -> f64 {
    threshold_rule(n, age, lengths).0
}

/// Threshold rule shared by the AON-TON and AON-AON equilibria. Returns the
/// access probability and whether it had to be clamped.
fn threshold_rule(n: usize, age: f64, lengths: &SlotLengths) -> (f64, bool) {
    let nf = n as f64;
    if age <= aon_age_threshold(n, lengths) {
        return (0.0, false);
    }
    let raw = (nf * (lengths.sigma_idle - lengths.sigma_succ) + age)
        / (nf * (lengths.sigma_idle - lengths.sigma_col + age));
    clamp_unit(raw)
}

fn clamp_unit(raw: f64) -> (f64, bool) {
    let clamped = raw.clamp(0.0, 1.0);
    (clamped, clamped != raw)
}

fn require_equal_lengths(lengths: &SlotLengths) -> Result<()> {
    if lengths.equal_busy_lengths() {
        Ok(())
    } else {
        Err(Error::UnequalSlotLengths {
            succ: lengths.sigma_succ,
            col: lengths.sigma_col,
        })
    }
}

fn require_nodes(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Domain("network must have at least one node".into()))
    } else {
        Ok(())
    }
}

/// Closed-form equilibrium for equal success and collision slot lengths.
///
/// `tau_ton* = 1/n_ton`. The AON stays silent until its average age exceeds
/// `n_aon (sigma_succ - sigma_idle)`; at the threshold itself the interior
/// formula is already zero, so equality maps to zero.
pub fn msne(params: &StageGameParams) -> Result<EquilibriumResult> {
    require_equal_lengths(&params.lengths)?;
    let tau_ton_star = (params.n_ton > 0).then(|| 1.0 / params.n_ton as f64);
    let (tau_aon_star, age_threshold, clamped) = if params.n_aon > 0 {
        let (tau, clamped) = threshold_rule(params.n_aon, params.age_state, &params.lengths);
        (Some(tau), Some(params.age_threshold()), clamped)
    } else {
        (None, None, false)
    };
    Ok(EquilibriumResult {
        tau_aon_star,
        tau_ton_star,
        age_threshold,
        clamped,
    })
}

/// The two KKT age thresholds for general slot lengths: `(th0, th1)`.
pub fn general_thresholds(params: &StageGameParams, tau_ton: f64) -> (f64, f64) {
    let l = &params.lengths;
    let na = params.n_aon as f64;
    let nw = params.n_ton as f64;
    let th0 = na * (l.sigma_succ - l.sigma_idle)
        - na * nw * tau_ton * (l.sigma_succ - l.sigma_col) / (1.0 - tau_ton);
    let th1 = na * (l.sigma_succ - l.sigma_col);
    (th0, th1)
}

/// AON equilibrium access probability when success and collision slots may
/// differ, for a given TON access probability.
pub fn general_msne_aon(params: &StageGameParams, tau_ton: f64) -> Result<f64> {
    require_nodes(params.n_aon)?;
    check_probability("tau_ton", tau_ton)?;
    if tau_ton >= 1.0 && params.n_ton > 0 {
        return Err(Error::Domain(
            "tau_ton = 1 makes the equilibrium degenerate".into(),
        ));
    }
    let l = &params.lengths;
    let na = params.n_aon as f64;
    let nw = params.n_ton as f64;
    let age = params.age_state;
    let (th0, th1) = general_thresholds(params, tau_ton);
    let threshold = th0.max(th1);
    if age > threshold {
        let cross = na * nw * tau_ton * (l.sigma_succ - l.sigma_col);
        let num = (1.0 - tau_ton) * (age - na * (l.sigma_succ - l.sigma_idle)) + cross;
        let den = (1.0 - tau_ton)
            * na
            * (age + (l.sigma_idle - l.sigma_col) - na * (l.sigma_succ - l.sigma_col))
            + cross;
        Ok(clamp_unit(num / den).0)
    } else if th1 > th0 {
        Ok(1.0)
    } else {
        Ok(0.0)
    }
}

/// Equilibrium access probability of one AON when two AONs share the medium.
/// Depends only on the network's own size and average age.
pub fn aon_aon_msne(n_self: usize, age_state_self: f64, lengths: &SlotLengths) -> Result<f64> {
    require_nodes(n_self)?;
    require_equal_lengths(lengths)?;
    if !(age_state_self.is_finite() && age_state_self >= 0.0) {
        return Err(Error::Domain(format!("age state {age_state_self} must be non-negative")));
    }
    Ok(threshold_rule(n_self, age_state_self, lengths).0)
}

/// Equilibrium access probability of one TON when two TONs share the medium.
pub fn ton_ton_msne(n_self: usize) -> Result<f64> {
    require_nodes(n_self)?;
    Ok(1.0 / n_self as f64)
}

/// Transmit decisions of every node: bit `k` of `aon` is AON node `k`, bit
/// `k` of `ton` is TON node `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PureProfile {
    pub aon: u32,
    pub ton: u32,
}

impl PureProfile {
    pub fn transmitters(&self) -> usize {
        (self.aon.count_ones() + self.ton.count_ones()) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileDistribution {
    pub entries: Vec<(PureProfile, f64)>,
}

impl ProfileDistribution {
    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn mass_of(&self, profile: PureProfile) -> Option<f64> {
        self.entries.iter().find(|e| e.0 == profile).map(|e| e.1)
    }
}

/// Product-Bernoulli distribution over all `2^(n_aon + n_ton)` pure profiles.
pub fn expand_distribution(
    profile: &StrategyProfile,
    params: &StageGameParams,
) -> Result<ProfileDistribution> {
    let nodes = params.total_nodes();
    if nodes > MAX_ENUMERATED_NODES {
        return Err(Error::EnumerationTooLarge {
            nodes,
            max: MAX_ENUMERATED_NODES,
        });
    }
    check_probability("tau_aon", profile.tau_aon)?;
    check_probability("tau_ton", profile.tau_ton)?;
    let na = params.n_aon;
    let aon_mask = (1u32 << na) - 1;
    let entries = (0u32..(1u32 << nodes))
        .map(|mask| {
            let aon = mask & aon_mask;
            let ton = mask >> na;
            let a_tx = aon.count_ones() as i32;
            let t_tx = ton.count_ones() as i32;
            let p = profile.tau_aon.powi(a_tx)
                * (1.0 - profile.tau_aon).powi(na as i32 - a_tx)
                * profile.tau_ton.powi(t_tx)
                * (1.0 - profile.tau_ton).powi(params.n_ton as i32 - t_tx);
            (PureProfile { aon, ton }, p)
        })
        .collect();
    Ok(ProfileDistribution { entries })
}
