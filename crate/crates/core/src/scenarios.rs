//! Coexistence scenarios and the parameter sweeps behind each figure/table.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{
    monte_carlo_with_threads, simulate_run, NetworkKind, NetworkSetup, Policy, RunAggregate,
    RunConfig,
};
use crate::slot_model::SlotLengths;
use crate::stage_game::{aon_age_threshold, msne, stage_payoffs, StageGameParams};

/// Network sizes swept by every figure.
pub const NODE_COUNTS: [usize; 5] = [1, 2, 5, 10, 50];

/// Discount factors used for the discounted-payoff curves.
pub const ALPHA_GRID: [f64; 13] = [
    0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pairing {
    #[serde(rename = "aon-ton")]
    AonTon,
    #[serde(rename = "aon-aon")]
    AonAon,
    #[serde(rename = "ton-ton")]
    TonTon,
}

impl Pairing {
    pub const ALL: [Pairing; 3] = [Pairing::AonAon, Pairing::AonTon, Pairing::TonTon];

    pub fn kinds(&self) -> [NetworkKind; 2] {
        match self {
            Pairing::AonTon => [NetworkKind::Aon, NetworkKind::Ton],
            Pairing::AonAon => [NetworkKind::Aon, NetworkKind::Aon],
            Pairing::TonTon => [NetworkKind::Ton, NetworkKind::Ton],
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Pairing::AonTon => "aon-ton",
            Pairing::AonAon => "aon-aon",
            Pairing::TonTon => "ton-ton",
        }
    }
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "aon-ton" => Ok(Pairing::AonTon),
            "aon-aon" => Ok(Pairing::AonAon),
            "ton-ton" => Ok(Pairing::TonTon),
            other => Err(Error::Config(format!("unknown pairing {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub pairing: Pairing,
    pub n_first: usize,
    pub n_second: usize,
    pub beta: f64,
    pub rate: f64,
    pub alphas: Vec<f64>,
    pub runs: usize,
    pub stages: usize,
    pub master_seed: u64,
}

impl ScenarioSpec {
    /// Five nodes per network, `beta = 0.01`, unit rate, 2000 runs of 1000 stages.
    pub fn desk_scale(pairing: Pairing, seed: u64) -> Self {
        Self {
            pairing,
            n_first: 5,
            n_second: 5,
            beta: 0.01,
            rate: 1.0,
            alphas: ALPHA_GRID.to_vec(),
            runs: 2000,
            stages: 1000,
            master_seed: seed,
        }
    }

    pub fn with_pairing(&self, pairing: Pairing, n_first: usize, n_second: usize) -> Self {
        Self {
            pairing,
            n_first,
            n_second,
            ..self.clone()
        }
    }

    pub fn lengths(&self) -> Result<SlotLengths> {
        SlotLengths::from_beta(self.beta, self.rate)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_first == 0 || self.n_second == 0 {
            return Err(Error::Config("both networks need at least one node".into()));
        }
        if self.alphas.is_empty() {
            return Err(Error::Config("no discount factors".into()));
        }
        self.lengths()?;
        Ok(())
    }

    /// Binds each network to its equilibrium policy.
    pub fn build(&self) -> Result<RunConfig> {
        self.validate()?;
        let lengths = self.lengths()?;
        let networks = self
            .pairing
            .kinds()
            .into_iter()
            .zip([self.n_first, self.n_second])
            .map(|(kind, n_nodes)| NetworkSetup {
                kind,
                n_nodes,
                policy: match kind {
                    NetworkKind::Aon => Policy::AgeThreshold,
                    NetworkKind::Ton => Policy::Reciprocal,
                },
            })
            .collect();
        let config = RunConfig {
            networks,
            lengths,
            stages: self.stages,
            runs: self.runs,
            alphas: self.alphas.clone(),
            master_seed: self.master_seed,
            initial_age: lengths.sigma_succ,
        };
        config.validate()?;
        Ok(config)
    }
}

/// One output value.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Missing,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// A named table: one CSV file per series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl SeriesTable {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric value at (`row`, `column`).
    pub fn num(&self, row: usize, column: &str) -> Option<f64> {
        match self.rows.get(row)?.get(self.column(column)?)? {
            Cell::Int(v) => Some(*v as f64),
            Cell::Num(v) => Some(*v),
            _ => None,
        }
    }
}

/// Equilibrium access probabilities. TON series: `tau_ton*` against `n_aon`
/// per `n_ton`. AON series: `tau_aon*` against `n_ton` per `n_aon`, at ages
/// just above (`low`) and one success slot above (`high`) the threshold.
pub fn sweep_fig2(beta: f64) -> Result<Vec<SeriesTable>> {
    let lengths = SlotLengths::from_beta(beta, 1.0)?;
    let mut out = Vec::new();
    for nw in NODE_COUNTS {
        let mut t = SeriesTable::new(format!("fig2a_nw{nw}"), &["n_ton", "n_aon", "tau_ton"]);
        for na in NODE_COUNTS {
            let eq = msne(&StageGameParams::new(na, nw, lengths, 0.0)?)?;
            t.push(vec![nw.into(), na.into(), eq.tau_ton_star.into()]);
        }
        out.push(t);
    }
    for na in NODE_COUNTS {
        let th = aon_age_threshold(na, &lengths);
        for (label, age) in [("low", th + lengths.sigma_idle), ("high", th + lengths.sigma_succ)] {
            let mut t = SeriesTable::new(
                format!("fig2b_na{na}_{label}"),
                &["n_aon", "age", "n_ton", "tau_aon"],
            );
            for nw in NODE_COUNTS {
                let eq = msne(&StageGameParams::new(na, nw, lengths, age)?)?;
                t.push(vec![na.into(), age.into(), nw.into(), eq.tau_aon_star.into()]);
            }
            out.push(t);
        }
    }
    Ok(out)
}

/// Stage payoffs at the equilibrium with the AON one success slot above its
/// threshold. TON payoff against `n_aon` per `n_ton`; AON payoff against
/// `n_ton` per `n_aon`.
pub fn sweep_fig3(beta: f64) -> Result<Vec<SeriesTable>> {
    let lengths = SlotLengths::from_beta(beta, 1.0)?;
    let cell = |na: usize, nw: usize| -> Result<(f64, f64, f64, f64, f64)> {
        let age = aon_age_threshold(na, &lengths) + lengths.sigma_succ;
        let params = StageGameParams::new(na, nw, lengths, age)?;
        let eq = msne(&params)?;
        let u = stage_payoffs(&params, &eq.profile())?;
        Ok((age, eq.profile().tau_aon, eq.profile().tau_ton, u.u_ton, u.u_aon))
    };
    let mut out = Vec::new();
    for nw in NODE_COUNTS {
        let mut t = SeriesTable::new(
            format!("fig3a_nw{nw}"),
            &["n_ton", "n_aon", "age", "tau_aon", "tau_ton", "u_ton"],
        );
        for na in NODE_COUNTS {
            let (age, ta, tw, u_ton, _) = cell(na, nw)?;
            t.push(vec![nw.into(), na.into(), age.into(), ta.into(), tw.into(), u_ton.into()]);
        }
        out.push(t);
    }
    for na in NODE_COUNTS {
        let mut t = SeriesTable::new(
            format!("fig3b_na{na}"),
            &["n_aon", "n_ton", "age", "tau_aon", "tau_ton", "u_aon"],
        );
        for nw in NODE_COUNTS {
            let (age, ta, tw, _, u_aon) = cell(na, nw)?;
            t.push(vec![na.into(), nw.into(), age.into(), ta.into(), tw.into(), u_aon.into()]);
        }
        out.push(t);
    }
    Ok(out)
}

/// Per-stage trace of run 0 of an AON-TON scenario.
pub fn sweep_fig4(template: &ScenarioSpec) -> Result<SeriesTable> {
    let spec = template.with_pairing(Pairing::AonTon, template.n_first, template.n_second);
    let config = spec.build()?;
    let trace = simulate_run(&config, 0)?;
    let mut t = SeriesTable::new(
        "fig4_trace",
        &["stage", "tau_aon", "tau_ton", "slot_type", "u_ton", "u_aon", "avg_age"],
    );
    for r in &trace {
        t.push(vec![
            r.stage_index.into(),
            r.tau_by_network[0].into(),
            r.tau_by_network[1].into(),
            r.slot_type.as_str().into(),
            r.payoffs[1].into(),
            r.payoffs[0].into(),
            r.avg_age_end[0].into(),
        ]);
    }
    Ok(t)
}

/// Monte Carlo aggregate for each pairing, in [`Pairing::ALL`] order.
pub fn run_pairings(template: &ScenarioSpec, threads: Option<usize>) -> Result<Vec<(Pairing, RunAggregate)>> {
    Pairing::ALL
        .into_iter()
        .map(|p| {
            let spec = template.with_pairing(p, template.n_first, template.n_second);
            Ok((p, monte_carlo_with_threads(&spec.build()?, threads)?))
        })
        .collect()
}

/// Discounted payoffs against the discount factor for each pairing. Both
/// networks are reported; they coincide in expectation for symmetric pairs.
pub fn sweep_fig5(template: &ScenarioSpec, threads: Option<usize>) -> Result<Vec<SeriesTable>> {
    Ok(run_pairings(template, threads)?
        .iter()
        .map(|(p, agg)| discounted_table(&format!("fig5_{}", p.as_str().replace('-', "_")), *p, agg))
        .collect())
}

pub fn discounted_table(name: &str, pairing: Pairing, agg: &RunAggregate) -> SeriesTable {
    let [k1, k2] = pairing.kinds();
    let c = |net: &str, k: NetworkKind, what: &str| format!("u_{net}_{}_{what}", k.as_str());
    let cols = [
        "alpha".to_string(),
        c("net1", k1, "mean"),
        c("net1", k1, "se"),
        c("net2", k2, "mean"),
        c("net2", k2, "se"),
    ];
    let cols: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let mut t = SeriesTable::new(name, &cols);
    for (i, &alpha) in agg.alphas.iter().enumerate() {
        let a = agg.networks[0].discounted[i];
        let b = agg.networks[1].discounted[i];
        t.push(vec![
            alpha.into(),
            a.mean.into(),
            a.std_error.into(),
            b.mean.into(),
            b.std_error.into(),
        ]);
    }
    t
}

/// Discount factor of the AON-size sweep.
pub const FIG6_ALPHA: f64 = 0.99;

/// Effect of the AON size with `n_second` TON nodes: TON payoff next to an
/// AON versus next to a TON of the same size, and the frequency of silent
/// AON stages.
pub fn sweep_fig6(template: &ScenarioSpec, threads: Option<usize>) -> Result<Vec<SeriesTable>> {
    let alpha = FIG6_ALPHA;
    let base = ScenarioSpec {
        alphas: vec![alpha],
        ..template.clone()
    };
    let mut payoff = SeriesTable::new(
        "fig6a_ton_payoff",
        &[
            "n_aon", "n_ton", "alpha", "u_ton_aon_ton_mean", "u_ton_aon_ton_se",
            "u_ton_ton_ton_mean", "u_ton_ton_ton_se",
        ],
    );
    let mut silent = SeriesTable::new("fig6b_tau_zero", &["n_aon", "n_ton", "alpha", "freq_tau_zero"]);
    for na in NODE_COUNTS {
        let mixed = monte_carlo_with_threads(&base.with_pairing(Pairing::AonTon, na, base.n_second).build()?, threads)?;
        let tons = monte_carlo_with_threads(&base.with_pairing(Pairing::TonTon, na, base.n_second).build()?, threads)?;
        let u_mixed = mixed.networks[1].discounted[0];
        let u_tons = tons.networks[1].discounted[0];
        payoff.push(vec![
            na.into(),
            base.n_second.into(),
            alpha.into(),
            u_mixed.mean.into(),
            u_mixed.std_error.into(),
            u_tons.mean.into(),
            u_tons.std_error.into(),
        ]);
        silent.push(vec![
            na.into(),
            base.n_second.into(),
            alpha.into(),
            mixed.networks[0].freq_tau_zero.into(),
        ]);
    }
    Ok(vec![payoff, silent])
}

/// Column layout shared by `frequencies.csv` and the table reproduction.
pub const FREQUENCY_COLUMNS: [&str; 6] = [
    "scenario",
    "freq_success_net1_per_node",
    "freq_success_net2_per_node",
    "freq_collision",
    "freq_tau_zero_net1",
    "freq_tau_zero_net2",
];

pub fn frequency_row(pairing: Pairing, agg: &RunAggregate) -> Vec<Cell> {
    vec![
        pairing.as_str().into(),
        agg.networks[0].freq_success_per_node.into(),
        agg.networks[1].freq_success_per_node.into(),
        agg.freq_collision.into(),
        agg.networks[0].freq_tau_zero.into(),
        agg.networks[1].freq_tau_zero.into(),
    ]
}

/// Empirical success, collision and silent-stage frequencies for all three
/// pairings.
pub fn sweep_table1(template: &ScenarioSpec, threads: Option<usize>) -> Result<SeriesTable> {
    let mut t = SeriesTable::new("frequencies", &FREQUENCY_COLUMNS);
    for (p, agg) in run_pairings(template, threads)? {
        t.push(frequency_row(p, &agg));
    }
    Ok(t)
}
