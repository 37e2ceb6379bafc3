use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use coexist::oracle::expected_payoffs_bruteforce;
use coexist::report::{
    emit, format_cell, write_manifest, write_simulation, ConfigFile, OutputOptions, Precision,
};
use coexist::scenarios::{
    sweep_fig2, sweep_fig3, sweep_fig4, sweep_fig5, sweep_fig6, sweep_table1, Cell, Pairing,
    ScenarioSpec, SeriesTable,
};
use coexist::sim::{monte_carlo_with_threads, simulate_run};
use coexist::{msne, stage_payoffs, SlotLengths, StageGameParams, StrategyProfile};

#[derive(Parser)]
#[command(name = "coexist", version, about = "Age/throughput coexistence game: equilibria and Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form mixed-strategy equilibrium of one stage game.
    Msne(GameArgs),
    /// Expected stage payoffs for a given access profile.
    Stage(StageArgs),
    /// Monte Carlo run described by a TOML config file.
    Simulate(SimulateArgs),
    /// Regenerate the series behind a table or figure.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct GameArgs {
    /// Number of AON nodes.
    #[arg(long, default_value_t = 0)]
    na: usize,
    /// Number of TON nodes.
    #[arg(long, default_value_t = 0)]
    nw: usize,
    /// Idle slot length relative to a success slot.
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    /// Data rate in bits per unit time.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Current average age of the AON.
    #[arg(long, default_value_t = 0.0)]
    age: f64,
    #[command(flatten)]
    output: PrintArgs,
}

#[derive(Args)]
struct PrintArgs {
    /// Print values at full precision instead of 6 significant digits.
    #[arg(long)]
    full_precision: bool,
}

impl PrintArgs {
    fn precision(&self) -> Precision {
        if self.full_precision {
            Precision::Full
        } else {
            Precision::Significant6
        }
    }
}

#[derive(Args)]
struct StageArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, default_value_t = 0.0)]
    tau_aon: f64,
    #[arg(long, default_value_t = 0.0)]
    tau_ton: f64,
    /// Cross-check against enumeration over all pure profiles.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the Monte Carlo runs (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Also write a JSON file next to each CSV.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    full_precision: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
    /// Write the stage trace of run 0.
    #[arg(long)]
    trace: bool,
}

#[derive(Copy, Clone, ValueEnum)]
enum Target {
    Table1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(value_enum)]
    target: Target,
    #[arg(long, default_value_t = 2000)]
    runs: usize,
    #[arg(long, default_value_t = 1000)]
    stages: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    /// Nodes in each network for the simulated targets.
    #[arg(long, default_value_t = 5)]
    nodes: usize,
    #[command(flatten)]
    output: OutputArgs,
}

type CliResult<T> = std::result::Result<T, String>;

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn game_params(g: &GameArgs) -> CliResult<StageGameParams> {
    let lengths = SlotLengths::from_beta(g.beta, g.rate).map_err(fail)?;
    StageGameParams::new(g.na, g.nw, lengths, g.age).map_err(fail)
}

fn print_table(t: &SeriesTable, precision: Precision) {
    println!("{}", t.columns.join(","));
    for row in &t.rows {
        let line: Vec<String> = row.iter().map(|c| format_cell(c, precision)).collect();
        println!("{}", line.join(","));
    }
}

fn cmd_msne(g: &GameArgs) -> CliResult<()> {
    let params = game_params(g)?;
    let eq = msne(&params).map_err(fail)?;
    let mut t = SeriesTable::new(
        "msne",
        &["n_aon", "n_ton", "beta", "age", "tau_aon", "tau_ton", "age_threshold"],
    );
    t.push(vec![
        g.na.into(),
        g.nw.into(),
        g.beta.into(),
        g.age.into(),
        eq.tau_aon_star.into(),
        eq.tau_ton_star.into(),
        eq.age_threshold.into(),
    ]);
    print_table(&t, g.output.precision());
    Ok(())
}

fn cmd_stage(a: &StageArgs) -> CliResult<()> {
    let params = game_params(&a.game)?;
    let profile = StrategyProfile::new(a.tau_aon, a.tau_ton).map_err(fail)?;
    let u = stage_payoffs(&params, &profile).map_err(fail)?;
    let mut columns = vec!["tau_aon", "tau_ton", "u_ton", "u_aon"];
    let mut row: Vec<Cell> = vec![a.tau_aon.into(), a.tau_ton.into(), u.u_ton.into(), u.u_aon.into()];
    if a.verify {
        let b = expected_payoffs_bruteforce(&params, &profile).map_err(fail)?;
        let dev = (u.u_ton - b.u_ton).abs().max((u.u_aon - b.u_aon).abs());
        columns.extend(["u_ton_enum", "u_aon_enum", "max_deviation"]);
        row.extend([b.u_ton.into(), b.u_aon.into(), dev.into()]);
    }
    let mut t = SeriesTable::new("stage", &columns);
    t.push(row);
    print_table(&t, a.game.output.precision());
    Ok(())
}

fn output_options(o: &OutputArgs, base: OutputOptions) -> OutputOptions {
    OutputOptions {
        precision: if o.full_precision { Precision::Full } else { base.precision },
        json: o.json || base.json,
    }
}

fn prepare_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<()> {
    let cfg = ConfigFile::load(&a.config).map_err(fail)?;
    let dir = a
        .output
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or("no output directory: pass --out or set output_dir")?;
    let opts = output_options(&a.output, cfg.output_options());
    let spec = cfg.spec();
    let config = spec.build().map_err(fail)?;
    prepare_dir(&dir)?;
    let agg = monte_carlo_with_threads(&config, a.output.threads).map_err(fail)?;
    let trace = if a.trace || cfg.trace {
        Some(simulate_run(&config, 0).map_err(fail)?)
    } else {
        None
    };
    write_simulation(&dir, &spec, &agg, trace.as_deref(), opts)
        .map_err(|e| format!("{}: {e}", dir.display()))?;
    Ok(())
}

fn cmd_reproduce(a: &ReproduceArgs) -> CliResult<()> {
    let dir = a.output.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let opts = output_options(&a.output, OutputOptions::default());
    let spec = ScenarioSpec {
        n_first: a.nodes,
        n_second: a.nodes,
        beta: a.beta,
        runs: a.runs,
        stages: a.stages,
        ..ScenarioSpec::desk_scale(Pairing::AonTon, a.seed)
    };
    spec.validate().map_err(fail)?;
    prepare_dir(&dir)?;
    let threads = a.output.threads;
    let (command, tables) = match a.target {
        Target::Table1 => ("reproduce table1", vec![sweep_table1(&spec, threads).map_err(fail)?]),
        Target::Fig2 => ("reproduce fig2", sweep_fig2(spec.beta).map_err(fail)?),
        Target::Fig3 => ("reproduce fig3", sweep_fig3(spec.beta).map_err(fail)?),
        Target::Fig4 => ("reproduce fig4", vec![sweep_fig4(&spec).map_err(fail)?]),
        Target::Fig5 => ("reproduce fig5", sweep_fig5(&spec, threads).map_err(fail)?),
        Target::Fig6 => ("reproduce fig6", sweep_fig6(&spec, threads).map_err(fail)?),
    };
    let mut written = Vec::new();
    for t in &tables {
        written.extend(emit(&dir, t, opts).map_err(|e| format!("{}: {e}", dir.display()))?);
    }
    write_manifest(&dir, command, &spec, &written).map_err(|e| format!("{}: {e}", dir.display()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let line = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("{line}");
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Msne(g) => cmd_msne(g),
        Command::Stage(a) => cmd_stage(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Reproduce(a) => cmd_reproduce(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {}", msg.replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
