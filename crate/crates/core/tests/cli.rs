use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn coexist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coexist")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn field(table: &str, column: &str) -> String {
    let mut lines = table.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    row[header.iter().position(|h| *h == column).unwrap()].to_string()
}

const CONFIG: &str = r#"
pairing = "aon-ton"
n_first = 3
n_second = 4
beta = 0.01
runs = 20
stages = 150
master_seed = 11
"#;

#[test]
fn msne_prints_equilibrium() {
    let o = coexist(&["msne", "--na", "2", "--age", "3.01", "--beta", "0.01"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(field(&out, "tau_aon"), "0.251244");
    assert_eq!(field(&out, "tau_ton"), "NA");
    assert_eq!(field(&out, "age_threshold"), "2");

    let o = coexist(&["msne", "--na", "2", "--nw", "5", "--age", "3.01", "--full-precision"]);
    let tau: f64 = field(&stdout(&o), "tau_aon").parse().unwrap();
    assert!((tau - 1.01 / 4.02).abs() < 1e-15);
    assert_eq!(field(&stdout(&o), "tau_ton"), "0.2");
}

#[test]
fn stage_verify_reports_deviation() {
    let o = coexist(&[
        "stage", "--na", "3", "--nw", "2", "--age", "4", "--tau-aon", "0.3", "--tau-ton", "0.5",
        "--verify", "--full-precision",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let dev: f64 = field(&out, "max_deviation").parse().unwrap();
    assert!(dev <= 1e-12);
    let u: f64 = field(&out, "u_ton").parse().unwrap();
    assert!(u > 0.0);
}

#[test]
fn domain_errors_exit_nonzero_with_one_line() {
    let o = coexist(&["msne", "--na", "2", "--beta", "1.5"]);
    assert!(!o.status.success());
    assert_eq!(stderr(&o).trim_end().lines().count(), 1);

    let o = coexist(&["stage", "--na", "1", "--nw", "1", "--tau-aon", "2"]);
    assert!(!o.status.success());

    let o = coexist(&["reproduce", "fig9"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.contains("fig9"));
}

#[test]
fn unwritable_output_dir_fails() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let o = coexist(&["reproduce", "fig2", "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert_eq!(stderr(&o).trim_end().lines().count(), 1);
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, format!("{CONFIG}{extra}")).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_writes_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "trace = true\n");
    let out = dir.path().join("out");
    let o = coexist(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let agg = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert!(agg.starts_with("alpha,U_ton_mean,U_ton_se,U_aon_mean,U_aon_se\n"));
    assert_eq!(agg.lines().count(), 14);
    assert!(!agg.contains('\r'));

    let freq = fs::read_to_string(out.join("frequencies.csv")).unwrap();
    assert!(freq.starts_with(
        "scenario,freq_success_net1_per_node,freq_success_net2_per_node,freq_collision,freq_tau_zero_net1,freq_tau_zero_net2\naon-ton,"
    ));
    assert!(freq.trim_end().ends_with(",NA"));

    let trace = fs::read_to_string(out.join("trace_run0.csv")).unwrap();
    assert!(trace.starts_with("stage,tau_net1,tau_net2,slot_type,u_ton,u_aon,avg_age\n1,"));
    assert_eq!(trace.lines().count(), 151);

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("aggregate.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 13);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 11);
    assert_eq!(manifest["config"]["n_second"], 4);
}

#[test]
fn simulate_output_dir_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from_cfg");
    let cfg = write_config(dir.path(), &format!("output_dir = {:?}\n", out.to_str().unwrap()));
    let o = coexist(&["simulate", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("aggregate.csv").exists());
    assert!(!out.join("trace_run0.csv").exists());
}

#[test]
fn simulate_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "colour = \"red\"\n");
    let o = coexist(&["simulate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert_eq!(err.trim_end().lines().count(), 1);
    assert!(err.contains("colour"));
}

#[test]
fn simulate_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "trace = true\n");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, threads) in [(&a, "1"), (&b, "6")] {
        let o = coexist(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", threads]);
        assert!(o.status.success());
    }
    for f in ["aggregate.csv", "aggregate_networks.csv", "frequencies.csv", "trace_run0.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn reproduce_table1_has_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = coexist(&["reproduce", "table1", "--runs", "10", "--stages", "100", "--seed", "7", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = fs::read_to_string(dir.path().join("frequencies.csv")).unwrap();
    let scenarios: Vec<&str> = t.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(scenarios, ["aon-aon", "aon-ton", "ton-ton"]);
}

#[test]
fn reproduce_fig2_has_two_series_per_aon_size() {
    let dir = tempfile::tempdir().unwrap();
    let o = coexist(&["reproduce", "fig2", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for na in [1, 2, 5, 10, 50] {
        for side in ["low", "high"] {
            let t = fs::read_to_string(dir.path().join(format!("fig2b_na{na}_{side}.csv"))).unwrap();
            assert!(t.starts_with("n_aon,age,n_ton,tau_aon\n"));
            assert_eq!(t.lines().count(), 6);
        }
    }
    let t = fs::read_to_string(dir.path().join("fig2a_nw5.csv")).unwrap();
    assert!(t.lines().skip(1).all(|l| l.ends_with(",0.2")));
}

#[test]
fn reproduce_simulated_figures() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for target in ["fig3", "fig4", "fig5", "fig6"] {
        let o = coexist(&["reproduce", target, "--runs", "4", "--stages", "60", "--out", out]);
        assert!(o.status.success(), "{target}: {}", stderr(&o));
    }
    let trace = fs::read_to_string(dir.path().join("fig4_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 61);
    for f in ["fig5_aon_ton.csv", "fig5_aon_aon.csv", "fig5_ton_ton.csv", "fig6a_ton_payoff.csv", "fig6b_tau_zero.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}
