//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coexist::oracle::{
    aon_age_derivative, best_response_grid, expected_payoffs_bruteforce, kkt_residuals, Player,
};
use coexist::scenarios::{run_pairings, sweep_fig6, Pairing, ScenarioSpec};
use coexist::sim::{Estimate, RunAggregate};
use coexist::stage_game::aon_age_threshold;
use coexist::{msne, stage_payoffs, SlotLengths, StageGameParams, StrategyProfile};

const SEED: u64 = 7;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// Collects sub-checks; the criterion passes only if all of them do.
#[derive(Default)]
struct Checks {
    parts: Vec<String>,
    pass: bool,
    started: bool,
}

impl Checks {
    fn within(&mut self, label: &str, got: f64, want: f64, tol: f64) {
        let ok = (got - want).abs() <= tol;
        self.push(ok, format!("{label}={got:.4} (want {want} ± {tol})"));
    }

    fn push(&mut self, ok: bool, text: String) {
        self.pass = if self.started { self.pass && ok } else { ok };
        self.started = true;
        self.parts.push(if ok { text } else { format!("[x] {text}") });
    }

    fn finish(self) -> Outcome {
        Outcome::new(self.pass, self.parts.join("; "))
    }
}

fn lengths(beta: f64) -> SlotLengths {
    SlotLengths::from_beta(beta, 1.0).unwrap()
}

fn tau_aon(na: usize, age: f64) -> f64 {
    let p = StageGameParams::new(na, 5, lengths(0.01), age).unwrap();
    msne(&p).unwrap().tau_aon_star.unwrap()
}

fn criterion_1() -> Outcome {
    let mut c = Checks::default();
    c.within("tau_A(2,2.01)", tau_aon(2, 2.01), 0.0050, 1e-3);
    c.within("tau_A(2,3.01)", tau_aon(2, 3.01), 0.2512, 1e-3);
    c.within("tau_A(1,2.01)", tau_aon(1, 2.01), 1.0, 1e-3);
    c.within("tau_A(50,51.01)", tau_aon(50, 51.01), 0.0004, 1e-3);
    let p = StageGameParams::new(2, 5, lengths(0.01), 3.0).unwrap();
    c.within("tau_W(5)", msne(&p).unwrap().tau_ton_star.unwrap(), 0.2, 1e-3);
    c.finish()
}

fn criterion_2() -> Outcome {
    let l = lengths(0.01);
    let mut c = Checks::default();
    for (na, want) in [(2, 0.1416), (10, 0.2281)] {
        let age = na as f64 * (l.sigma_succ - l.sigma_idle) + l.sigma_succ;
        let p = StageGameParams::new(na, 2, l, age).unwrap();
        let eq = msne(&p).unwrap();
        let u = stage_payoffs(&p, &eq.profile()).unwrap();
        c.within(&format!("u_W(N_A={na})"), u.u_ton, want, 5e-4);
    }
    c.finish()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let na = rng.random_range(0..=4);
        let nw = rng.random_range(if na == 0 { 1 } else { 0 }..=4);
        let beta = if rng.random_bool(0.5) { 0.01 } else { 0.1 };
        let p = StageGameParams::new(na, nw, lengths(beta), rng.random_range(0.0..=20.0)).unwrap();
        let prof = StrategyProfile::new(rng.random(), rng.random()).unwrap();
        let a = stage_payoffs(&p, &prof).unwrap();
        let b = expected_payoffs_bruteforce(&p, &prof).unwrap();
        worst = worst.max((a.u_ton - b.u_ton).abs()).max((a.u_aon - b.u_aon).abs());
    }
    Outcome::new(worst <= 1e-12, format!("100 draws, max deviation {worst:.3e} (tol 1e-12)"))
}

fn criterion_4() -> Outcome {
    let step = 1e-4;
    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut br_err, mut stat, mut fd_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let (mut interior, mut ties) = (0, 0);
    for _ in 0..20 {
        let na = rng.random_range(1..=10);
        let nw = rng.random_range(1..=10);
        let beta = if rng.random_bool(0.5) { 0.01 } else { 0.1 };
        let l = lengths(beta);
        let th = aon_age_threshold(na, &l);
        let age = rng.random_range((th - 5.0).max(0.0)..th + 15.0);
        let p = StageGameParams::new(na, nw, l, age).unwrap();
        let eq = msne(&p).unwrap();
        let (ta, tw) = (eq.tau_aon_star.unwrap(), eq.tau_ton_star.unwrap());

        let br_a = best_response_grid(&p, tw, Player::Aon, step).unwrap();
        let br_w = best_response_grid(&p, ta, Player::Ton, step).unwrap();
        // a player facing a flat payoff (e.g. the TON against an AON that
        // always transmits) is indifferent; the grid then returns 0
        let value = |p_: Player, ta_: f64, tw_: f64| {
            let u = stage_payoffs(&p, &StrategyProfile { tau_aon: ta_, tau_ton: tw_ }).unwrap();
            if p_ == Player::Aon { u.u_aon } else { u.u_ton }
        };
        for (player, br, eq_tau) in [(Player::Aon, br_a, ta), (Player::Ton, br_w, tw)] {
            let d = (br - eq_tau).abs();
            let (at_br, at_eq) = match player {
                Player::Aon => (value(player, br, tw), value(player, ta, tw)),
                Player::Ton => (value(player, ta, br), value(player, ta, tw)),
            };
            if d > step && (at_br - at_eq).abs() <= 1e-12 * at_br.abs().max(1.0) {
                ties += 1;
            } else {
                br_err = br_err.max(d);
            }
        }

        let k = kkt_residuals(&p, ta, tw).unwrap();
        for s in [k.aon.stationarity, k.ton.stationarity].into_iter().flatten() {
            interior += 1;
            stat = stat.max(s);
        }

        let t = rng.random_range(h..1.0 - h);
        let age_at = |x| -stage_payoffs(&p, &StrategyProfile { tau_aon: x, tau_ton: tw }).unwrap().u_aon;
        let fd = (age_at(t + h) - age_at(t - h)) / (2.0 * h);
        fd_err = fd_err.max((fd - aon_age_derivative(&p, t, tw)).abs());
    }
    let mut c = Checks::default();
    c.push(br_err <= step * (1.0 + 1e-9), format!("max |BR - eq| = {br_err:.2e} (step {step}, {ties} indifferent)"));
    c.push(stat <= 1e-9, format!("max stationarity {stat:.2e} over {interior} interior points (tol 1e-9)"));
    c.push(fd_err <= 1e-5, format!("max |u_A' - FD| = {fd_err:.2e} (tol 1e-5)"));
    c.finish()
}

fn find(results: &[(Pairing, RunAggregate)], p: Pairing) -> &RunAggregate {
    &results.iter().find(|(q, _)| *q == p).unwrap().1
}

fn criterion_5(results: &[(Pairing, RunAggregate)]) -> Outcome {
    let mut c = Checks::default();
    let tt = find(results, Pairing::TonTon);
    let (tau, n) = (0.2f64, 10);
    let analytic_succ = tau * (1.0 - tau).powi(n - 1);
    let analytic_col = 1.0 - (1.0 - tau).powi(n) - n as f64 * analytic_succ;
    c.within("TON-TON collision", tt.freq_collision, 0.624, 0.005);
    c.within("TON-TON collision (analytic)", analytic_col, 0.624, 0.005);
    c.within("TON-TON success/node", tt.networks[0].freq_success_per_node, 0.027, 0.002);
    c.within("TON-TON success/node (analytic)", analytic_succ, 0.027, 0.002);

    let at = find(results, Pairing::AonTon);
    c.within("AON-TON success/node AON", at.networks[0].freq_success_per_node, 0.021, 0.005);
    c.within("AON-TON success/node TON", at.networks[1].freq_success_per_node, 0.043, 0.005);
    c.within("AON-TON collision", at.freq_collision, 0.017, 0.005);
    c.within("AON-TON freq tau_A=0", at.networks[0].freq_tau_zero.unwrap(), 0.13, 0.02);

    let aa = find(results, Pairing::AonAon);
    c.within("AON-AON success/node", aa.networks[0].freq_success_per_node, 0.004, 0.002);
    c.within("AON-AON collision", aa.freq_collision, 0.002, 0.002);
    c.within("AON-AON freq tau_A=0", aa.networks[0].freq_tau_zero.unwrap(), 0.877, 0.02);
    c.finish()
}

fn gap(label: &str, larger: Estimate, smaller: Estimate, c: &mut Checks) {
    let se = (larger.std_error.powi(2) + smaller.std_error.powi(2)).sqrt();
    let d = larger.mean - smaller.mean;
    c.push(d > 3.0 * se, format!("{label} gap {d:.4} vs 3se {:.4}", 3.0 * se));
}

fn criterion_6(results: &[(Pairing, RunAggregate)]) -> Outcome {
    let at = find(results, Pairing::AonTon);
    let tt = find(results, Pairing::TonTon);
    let aa = find(results, Pairing::AonAon);
    let mut c = Checks::default();
    for alpha in [0.1, 0.5, 0.9, 0.99] {
        let i = at.alphas.iter().position(|&a| a == alpha).expect("alpha on grid");
        gap(&format!("a={alpha} U_W"), at.u_ton(i).unwrap(), tt.u_ton(i).unwrap(), &mut c);
        gap(&format!("a={alpha} U_A"), aa.u_aon(i).unwrap(), at.u_aon(i).unwrap(), &mut c);
    }
    c.finish()
}

fn criterion_7(spec: &ScenarioSpec) -> Outcome {
    let tables = sweep_fig6(spec, None).unwrap();
    let t = tables.iter().find(|t| t.name == "fig6b_tau_zero").unwrap();
    let freqs: Vec<f64> = (0..t.rows.len()).map(|r| t.num(r, "freq_tau_zero").unwrap()).collect();
    let ok = freqs.windows(2).all(|w| w[1] >= w[0]);
    let shown: Vec<String> = freqs.iter().map(|f| format!("{f:.4}")).collect();
    Outcome::new(ok, format!("freq_tau_zero over N_A=1,2,5,10,50: [{}]", shown.join(", ")))
}

fn simulate(config: &Path, out: &Path, threads: usize) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_coexist"))
        .arg("simulate")
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--threads")
        .arg(threads.to_string())
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("simulate exited with {status}"))
    }
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        "pairing = \"aon-ton\"\nn_first = 5\nn_second = 5\nbeta = 0.01\nruns = 300\nstages = 1000\nmaster_seed = 7\ntrace = true\n",
    )
    .unwrap();
    let parallel = std::thread::available_parallelism().map_or(1, |n| n.get()).max(8);
    let (a, b) = (dir.path().join("serial"), dir.path().join("parallel"));
    if let Err(e) = simulate(&config, &a, 1).and_then(|_| simulate(&config, &b, parallel)) {
        return Outcome::new(false, e);
    }
    let mut names: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| fs::read(a.join(n)).ok() != fs::read(b.join(n)).ok())
        .collect();
    Outcome::new(
        differing.is_empty() && names.len() == 4,
        format!("threads 1 vs {parallel}: {} CSV files, differing {:?}", names.len(), differing),
    )
}

fn main() -> ExitCode {
    let spec = ScenarioSpec::desk_scale(Pairing::AonTon, SEED);
    let results = run_pairings(&spec, None).unwrap();
    let outcomes = [
        ("closed-form equilibrium spot values", criterion_1()),
        ("stage payoff spot values", criterion_2()),
        ("closed form vs enumeration oracle", criterion_3()),
        ("best-response fixed point and KKT", criterion_4()),
        ("slot frequencies at desk scale", criterion_5(&results)),
        ("discounted payoff ordering", criterion_6(&results)),
        ("silent-stage frequency monotone in N_A", criterion_7(&spec)),
        ("serial and parallel CSV identical", criterion_8()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in outcomes.iter().enumerate() {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {}: {tag} {name}: {}", i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
