//! CSV / JSON output and the run configuration file.
//!
//! CSV files use `.` as the decimal separator, LF line endings and a fixed
//! column order. Numbers are printed with 6 significant digits, or with the
//! shortest representation that round-trips when full precision is asked for.
//! Missing values are written as `NA`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenarios::{
    discounted_table, frequency_row, Cell, Pairing, ScenarioSpec, SeriesTable, ALPHA_GRID,
    FREQUENCY_COLUMNS,
};
use crate::sim::{NetworkKind, RunAggregate, StageRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    Significant6,
    Full,
}

/// Formats like C's `%.6g`, without locale.
pub fn format_sig6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.5e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        let mantissa = trim_zeros(mantissa.to_string());
        format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn format_cell(cell: &Cell, precision: Precision) -> String {
    match cell {
        Cell::Int(v) => v.to_string(),
        Cell::Num(v) => match precision {
            Precision::Significant6 => format_sig6(*v),
            Precision::Full => format!("{v:?}"),
        },
        Cell::Text(s) => s.clone(),
        Cell::Missing => "NA".into(),
    }
}

pub fn table_to_csv(table: &SeriesTable, precision: Precision) -> String {
    let mut out = table.columns.join(",");
    out.push('\n');
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(|c| format_cell(c, precision)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_table(dir: &Path, table: &SeriesTable, precision: Precision) -> Result<PathBuf> {
    let path = dir.join(format!("{}.csv", table.name));
    fs::write(&path, table_to_csv(table, precision))?;
    Ok(path)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("json encoding: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OutputOptions {
    pub precision: Precision,
    pub json: bool,
}

/// Writes `table` as CSV (and JSON when requested); returns the file names.
pub fn emit(dir: &Path, table: &SeriesTable, opts: OutputOptions) -> Result<Vec<String>> {
    let mut written = vec![file_name(&write_table(dir, table, opts.precision)?)];
    if opts.json {
        let path = dir.join(format!("{}.json", table.name));
        write_json(&path, table)?;
        written.push(file_name(&path));
    }
    Ok(written)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
}

/// `aggregate.csv`: discounted payoffs of the first TON and first AON per alpha.
pub fn aggregate_table(agg: &RunAggregate) -> SeriesTable {
    let mut t = SeriesTable::new(
        "aggregate",
        &["alpha", "U_ton_mean", "U_ton_se", "U_aon_mean", "U_aon_se"],
    );
    for (i, &alpha) in agg.alphas.iter().enumerate() {
        let ton = agg.u_ton(i);
        let aon = agg.u_aon(i);
        t.push(vec![
            alpha.into(),
            ton.map(|e| e.mean).into(),
            ton.map(|e| e.std_error).into(),
            aon.map(|e| e.mean).into(),
            aon.map(|e| e.std_error).into(),
        ]);
    }
    t
}

pub fn frequencies_table(rows: &[(Pairing, &RunAggregate)]) -> SeriesTable {
    let mut t = SeriesTable::new("frequencies", &FREQUENCY_COLUMNS);
    for (p, agg) in rows {
        t.push(frequency_row(*p, agg));
    }
    t
}

/// `trace_run0.csv`: one row per stage of a single run.
pub fn trace_table(kinds: &[NetworkKind], trace: &[StageRecord]) -> SeriesTable {
    let mut t = SeriesTable::new(
        "trace_run0",
        &["stage", "tau_net1", "tau_net2", "slot_type", "u_ton", "u_aon", "avg_age"],
    );
    let first_aon = kinds.iter().position(|&k| k == NetworkKind::Aon);
    for r in trace {
        t.push(vec![
            r.stage_index.into(),
            r.tau_by_network.first().copied().into(),
            r.tau_by_network.get(1).copied().into(),
            r.slot_type.as_str().into(),
            r.payoff_of(kinds, NetworkKind::Ton).into(),
            r.payoff_of(kinds, NetworkKind::Aon).into(),
            first_aon.and_then(|i| r.avg_age_end[i]).into(),
        ]);
    }
    t
}

/// Everything a simulation writes, keyed by file name.
pub fn write_simulation(
    dir: &Path,
    spec: &ScenarioSpec,
    agg: &RunAggregate,
    trace: Option<&[StageRecord]>,
    opts: OutputOptions,
) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    written.extend(emit(dir, &aggregate_table(agg), opts)?);
    let mut per_net = discounted_table("aggregate_networks", spec.pairing, agg);
    per_net.name = "aggregate_networks".into();
    written.extend(emit(dir, &per_net, opts)?);
    written.extend(emit(dir, &frequencies_table(&[(spec.pairing, agg)]), opts)?);
    if let Some(trace) = trace {
        let kinds = spec.pairing.kinds();
        written.extend(emit(dir, &trace_table(&kinds, trace), opts)?);
    }
    write_manifest(dir, "simulate", spec, &written)?;
    Ok(written)
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    master_seed: u64,
    config: &'a ScenarioSpec,
    outputs: &'a [String],
}

/// Echoes the command, seed and full configuration next to the outputs.
pub fn write_manifest(dir: &Path, command: &str, spec: &ScenarioSpec, outputs: &[String]) -> Result<()> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        master_seed: spec.master_seed,
        config: spec,
        outputs,
    };
    write_json(&dir.join("manifest.json"), &manifest)
}

fn default_rate() -> f64 {
    1.0
}

fn default_alphas() -> Vec<f64> {
    ALPHA_GRID.to_vec()
}

/// Flat TOML run configuration. Unknown keys are rejected.
///
/// ```toml
/// pairing = "aon-ton"
/// n_first = 5
/// n_second = 5
/// beta = 0.01
/// runs = 2000
/// stages = 1000
/// master_seed = 7
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub pairing: Pairing,
    pub n_first: usize,
    pub n_second: usize,
    pub beta: f64,
    #[serde(default = "default_rate")]
    pub rate: f64,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    pub runs: usize,
    pub stages: usize,
    pub master_seed: u64,
    /// Output directory, used when none is given on the command line.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Write `trace_run0.csv`.
    #[serde(default)]
    pub trace: bool,
    #[serde(default)]
    pub full_precision: bool,
    #[serde(default)]
    pub json: bool,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(single_line(&e.to_string())))?;
        cfg.spec().build()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            pairing: self.pairing,
            n_first: self.n_first,
            n_second: self.n_second,
            beta: self.beta,
            rate: self.rate,
            alphas: self.alphas.clone(),
            runs: self.runs,
            stages: self.stages,
            master_seed: self.master_seed,
        }
    }

    pub fn output_options(&self) -> OutputOptions {
        OutputOptions {
            precision: if self.full_precision { Precision::Full } else { Precision::Significant6 },
            json: self.json,
        }
    }
}

fn single_line(s: &str) -> String {
    let mut out = String::new();
    for (i, line) in s.lines().map(str::trim).filter(|l| !l.is_empty()).enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        let _ = write!(out, "{line}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_matches_printf_g() {
        for (v, s) in [
            (0.0, "0"),
            (1.0, "1"),
            (0.2512437810945274, "0.251244"),
            (0.624, "0.624"),
            (-5.0, "-5"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e+06"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (4.2e-5, "4.2e-05"),
            (-51.01, "-51.01"),
            (999999.5, "1e+06"),
        ] {
            assert_eq!(format_sig6(v), s, "{v}");
        }
    }

    #[test]
    fn full_precision_round_trips() {
        let v = 0.1 + 0.2;
        let s = format_cell(&Cell::Num(v), Precision::Full);
        assert_eq!(s.parse::<f64>().unwrap(), v);
        assert_eq!(format_cell(&Cell::Missing, Precision::Full), "NA");
    }

    #[test]
    fn csv_layout() {
        let mut t = SeriesTable::new("x", &["a", "b", "c"]);
        t.push(vec![Cell::Int(1), Cell::Num(0.5), Cell::Missing]);
        assert_eq!(table_to_csv(&t, Precision::Significant6), "a,b,c\n1,0.5,NA\n");
    }

    #[test]
    fn config_parsing() {
        let text = r#"
pairing = "aon-ton"
n_first = 5
n_second = 5
beta = 0.01
runs = 10
stages = 100
master_seed = 3
trace = true
"#;
        let cfg = ConfigFile::parse(text).unwrap();
        assert_eq!(cfg.rate, 1.0);
        assert_eq!(cfg.alphas, ALPHA_GRID.to_vec());
        assert!(cfg.trace);
        assert_eq!(cfg.spec().pairing, Pairing::AonTon);

        let unknown = format!("{text}\nbogus = 1\n");
        let err = ConfigFile::parse(&unknown).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
        assert!(!err.contains('\n'));

        let bad = text.replace("beta = 0.01", "beta = 2.0");
        assert!(ConfigFile::parse(&bad).is_err());
        let bad = text.replace("runs = 10", "runs = 0");
        assert!(ConfigFile::parse(&bad).is_err());
    }
}
