//! Independent numerical checks for the stage game.
//!
//! Payoffs are recomputed by enumerating every pure action profile and
//! classifying the resulting slot, best responses are found by exhaustive
//! grid search, and the KKT conditions of each player's optimization are
//! evaluated from the analytic first derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::slot_model::SlotType;
use crate::stage_game::{
    expand_distribution, stage_payoffs, StageGameParams, StagePayoffs, StrategyProfile,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Aon,
    Ton,
}

/// Expected stage payoffs by summing realized payoffs over all pure profiles.
pub fn expected_payoffs_bruteforce(
    params: &StageGameParams,
    profile: &StrategyProfile,
) -> Result<StagePayoffs> {
    let dist = expand_distribution(profile, params)?;
    let l = &params.lengths;
    let age = params.age_state;
    let na = params.n_aon as f64;
    let (mut u_ton, mut mean_age) = (0.0, 0.0);
    for (pure, p) in &dist.entries {
        let slot = SlotType::from_transmitters(pure.transmitters());
        let aon_success = slot == SlotType::Success && pure.aon != 0;
        let ton_success = slot == SlotType::Success && pure.ton != 0;
        if ton_success {
            u_ton += p * l.success_bits() / params.n_ton as f64;
        }
        let realized_age = match slot {
            SlotType::Idle => age + l.sigma_idle,
            SlotType::Collision => age + l.sigma_col,
            SlotType::Success if aon_success => {
                ((na - 1.0) * (age + l.sigma_succ) + l.sigma_succ) / na
            }
            SlotType::Success => age + l.sigma_succ,
        };
        mean_age += p * realized_age;
    }
    Ok(StagePayoffs {
        u_ton,
        u_aon: if params.n_aon > 0 { -mean_age } else { 0.0 },
    })
}

/// Grid points `0, h, 2h, ..., 1`; the last point is always exactly 1.
pub fn probability_grid(step: f64) -> Vec<f64> {
    let steps = (1.0 / step - 1e-9).ceil() as usize;
    (0..=steps).map(|k| (k as f64 * step).min(1.0)).collect()
}

/// Best response of `player` to the opponent's access probability by
/// exhaustive search over a probability grid. Ties go to the smaller value.
pub fn best_response_grid(
    params: &StageGameParams,
    opponent_tau: f64,
    player: Player,
    grid_step: f64,
) -> Result<f64> {
    if !(grid_step > 0.0 && grid_step <= 0.01) {
        return Err(Error::Domain(format!("grid step {grid_step} must lie in (0, 0.01]")));
    }
    check_probability("opponent tau", opponent_tau)?;
    let mut best: Option<(f64, f64)> = None;
    for tau in probability_grid(grid_step) {
        let profile = match player {
            Player::Aon => StrategyProfile { tau_aon: tau, tau_ton: opponent_tau },
            Player::Ton => StrategyProfile { tau_aon: opponent_tau, tau_ton: tau },
        };
        let u = stage_payoffs(params, &profile)?;
        let value = match player {
            Player::Aon => u.u_aon,
            Player::Ton => u.u_ton,
        };
        // rounding noise must not break ties on flat payoffs
        match best {
            Some((_, b)) if value <= b + 1e-14 * b.abs().max(1.0) => {}
            _ => best = Some((tau, value)),
        }
    }
    Ok(best.map_or(0.0, |b| b.0))
}

/// d/d tau_aon of the expected average AON age, written out term by term.
pub fn aon_age_derivative(params: &StageGameParams, tau_aon: f64, tau_ton: f64) -> f64 {
    if params.n_aon == 0 {
        return 0.0;
    }
    let l = &params.lengths;
    let na = params.n_aon as i32;
    let nw = params.n_ton as i32;
    let (ta, tw) = (tau_aon, tau_ton);
    let ton_idle = (1.0 - tw).powi(nw);
    // (N-1) tau (1-tau)^(N-2), zero when N = 1
    let self_term = if na == 1 {
        0.0
    } else {
        (na - 1) as f64 * ta * (1.0 - ta).powi(na - 2)
    };
    let aon_idle_others = if na == 1 { 1.0 } else { (1.0 - ta).powi(na - 1) };
    let ton_single = if nw == 0 {
        0.0
    } else {
        nw as f64 * tw * if nw == 1 { 1.0 } else { (1.0 - tw).powi(nw - 1) }
    };
    let na = na as f64;
    -params.age_state * ton_idle * (aon_idle_others - self_term)
        + (l.sigma_succ - l.sigma_col)
            * (ton_idle * (na * aon_idle_others - na * self_term)
                - na * ton_single * aon_idle_others)
        - (l.sigma_idle - l.sigma_col) * na * ton_idle * aon_idle_others
}

/// d/d tau_ton of the per-node TON throughput.
pub fn ton_throughput_derivative(params: &StageGameParams, tau_aon: f64, tau_ton: f64) -> f64 {
    if params.n_ton == 0 {
        return 0.0;
    }
    let nw = params.n_ton as i32;
    let aon_idle = (1.0 - tau_aon).powi(params.n_aon as i32);
    let bits = params.lengths.success_bits();
    let lead = if nw == 1 { 1.0 } else { (1.0 - tau_ton).powi(nw - 1) };
    let tail = if nw == 1 {
        0.0
    } else {
        (nw - 1) as f64 * tau_ton * if nw == 2 { 1.0 } else { (1.0 - tau_ton).powi(nw - 2) }
    };
    aon_idle * bits * (lead - tail)
}

/// KKT check of one player's problem `minimize f(tau) s.t. 0 <= tau <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerKkt {
    /// f'(tau) for the player's minimization objective.
    pub gradient: f64,
    /// |f'(tau)| when tau is interior.
    pub stationarity: Option<f64>,
    /// Sign condition at an active bound: f' >= 0 at tau = 0, f' <= 0 at tau = 1.
    pub boundary_ok: Option<bool>,
}

impl PlayerKkt {
    fn evaluate(tau: f64, gradient: f64) -> Self {
        let (stationarity, boundary_ok) = if tau <= 0.0 {
            (None, Some(gradient >= 0.0))
        } else if tau >= 1.0 {
            (None, Some(gradient <= 0.0))
        } else {
            (Some(gradient.abs()), None)
        };
        Self {
            gradient,
            stationarity,
            boundary_ok,
        }
    }

    pub fn satisfied(&self, tol: f64) -> bool {
        self.stationarity.is_none_or(|s| s <= tol) && self.boundary_ok.unwrap_or(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// AON minimizes its expected average age.
    pub aon: PlayerKkt,
    /// TON minimizes its negated throughput.
    pub ton: PlayerKkt,
}

pub fn kkt_residuals(params: &StageGameParams, tau_aon: f64, tau_ton: f64) -> Result<KktReport> {
    check_probability("tau_aon", tau_aon)?;
    check_probability("tau_ton", tau_ton)?;
    Ok(KktReport {
        aon: PlayerKkt::evaluate(tau_aon, aon_age_derivative(params, tau_aon, tau_ton)),
        ton: PlayerKkt::evaluate(tau_ton, -ton_throughput_derivative(params, tau_aon, tau_ton)),
    })
}
