use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn fisc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fisc"))
        .args(args)
        .env_remove("FISC_CONFIG")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn report_matches_golden_csv() {
    // FIFO by hand: seq 3 takes lot 1 and half of lot 2 (basis 20000);
    // seq 5 takes the other half of lot 2 (long) and the reward lot (short).
    let out = tempfile::tempdir().unwrap();
    let o = fisc(&["report", "--events", s(&fixture("ledger.jsonl")), "--method", "fifo", "--out", s(out.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let golden = std::fs::read_to_string(fixture("ledger_fifo.csv")).unwrap();
    assert_eq!(read(out.path(), "ledger.csv"), golden);
    let totals: serde_json::Value = serde_json::from_str(&read(out.path(), "totals.json")).unwrap();
    assert_eq!(totals["overall"]["short_term_gain"], "26000.00000000");
    assert_eq!(totals["overall"]["long_term_gain"], "10000.00000000");
    assert_eq!(totals["overall"]["ordinary_income"], "3000.00000000");
    let manifest: serde_json::Value = serde_json::from_str(&read(out.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["command"], "report");
    assert_eq!(manifest["parameters"]["method"], "fifo");
    assert_eq!(manifest["outputs"], serde_json::json!(["ledger.csv", "totals.json", "manifest.json"]));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = fisc(&["report", "--events", s(&fixture("ledger.jsonl")), "--method", "hifo", "--out", s(dir.path())]);
        assert!(o.status.success());
    }
    for f in ["ledger.csv", "totals.json", "manifest.json"] {
        assert_eq!(read(a.path(), f), read(b.path(), f));
    }
}

#[test]
fn empty_events_file_gives_zero_report() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("empty.jsonl");
    std::fs::write(&events, "").unwrap();
    let out = dir.path().join("out");
    let o = fisc(&["report", "--events", s(&events), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read(&out, "ledger.csv"), "seq,date,kind,asset,qty,proceeds,basis,gain,term\n");
    let totals: serde_json::Value = serde_json::from_str(&read(&out, "totals.json")).unwrap();
    assert_eq!(totals["overall"]["short_term_gain"], "0.00000000");
}

#[test]
fn malformed_line_is_reported_with_file_and_line() {
    let out = tempfile::tempdir().unwrap();
    let events = fixture("bad_line.jsonl");
    let o = fisc(&["report", "--events", s(&events), "--out", s(out.path())]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains(&format!("{}:4:", events.display())), "{err}");
    assert!(err.contains("teleport"), "{err}");
}

#[test]
fn oversell_is_a_violation_on_its_line() {
    let out = tempfile::tempdir().unwrap();
    let events = fixture("oversell.jsonl");
    let o = fisc(&["report", "--events", s(&events), "--out", s(out.path())]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains(&format!("{}:3:", events.display())), "{}", stderr(&o));
}

#[test]
fn method_outside_policy_is_rejected() {
    let out = tempfile::tempdir().unwrap();
    let (ledger, policy) = (fixture("ledger.jsonl"), fixture("fifo_only.toml"));
    let args = ["report", "--events", s(&ledger), "--method", "lifo", "--out", s(out.path())];
    let mut with_flag = args.to_vec();
    with_flag.extend(["--config", s(&policy)]);
    let o = fisc(&with_flag);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("lifo"));

    // Same policy through the environment fallback.
    let o = Command::new(env!("CARGO_BIN_EXE_fisc"))
        .args(args)
        .env("FISC_CONFIG", &policy)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));

    let o = fisc(&["report", "--events", s(&fixture("ledger.jsonl")), "--method", "newest", "--out", s(out.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_policy_names_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let policy = dir.path().join("policy.toml");
    std::fs::write(&policy, "gift_exempt = true\nlong_term_days = \"soon\"\n").unwrap();
    let o = fisc(&["report", "--events", s(&fixture("ledger.jsonl")), "--policy", s(&policy), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(&format!("{}:2:", policy.display())), "{}", stderr(&o));
}

#[test]
fn pool_simulation_emits_the_eight_emerald_swap() {
    let out = tempfile::tempdir().unwrap();
    let o = fisc(&["simulate", "pool", "--scenario", s(&fixture("pool_fig43.toml")), "--out", s(out.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let events = read(out.path(), "events.jsonl");
    let swap_out = events
        .lines()
        .find(|l| l.contains("\"swap_seq\""))
        .expect("swap output leg");
    assert!(swap_out.contains("\"asset\":\"EMERALD\""));
    assert!(swap_out.contains("\"quantity\":\"800000000\""));
    let state: serde_json::Value = serde_json::from_str(&read(out.path(), "state.json")).unwrap();
    assert_eq!(state["reserve_x"], "50");
    assert_eq!(state["reserve_y"], "32");
    assert_eq!(state["k_base_units"], "16000000000000000000");
    // The emitted events feed straight back into a report.
    let rep = out.path().join("report");
    let o = fisc(&["report", "--events", s(&out.path().join("events.jsonl")), "--out", s(&rep)]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn chain_simulation_shows_the_halving() {
    let out = tempfile::tempdir().unwrap();
    let o = fisc(&["simulate", "chain", "--scenario", s(&fixture("chain_halving.toml")), "--seed", "1", "--out", s(out.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let quantities: Vec<String> = read(out.path(), "events.jsonl")
        .lines()
        .skip(1)
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["quantity"].as_str().unwrap().to_string())
        .collect();
    // 1% of 50 BTC, then 1% of 25 BTC, in satoshis.
    assert_eq!(quantities, ["50000000", "50000000", "25000000", "25000000"]);
    let manifest: serde_json::Value = serde_json::from_str(&read(out.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["seed"], 1);
}

#[test]
fn validator_simulation_runs() {
    let out = tempfile::tempdir().unwrap();
    let o = fisc(&["simulate", "validators", "--scenario", s(&fixture("validators.toml")), "--out", s(out.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let events = read(out.path(), "events.jsonl");
    assert!(events.contains("\"kind\":\"staking_reward\""));
    assert!(events.contains("\"reason\":\"penalty\""));
}

#[test]
fn malformed_scenario_fails() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("bad.toml");
    std::fs::write(&scenario, "asset_x = \"A\"\nasset_y = \"B\"\nops = 3\n").unwrap();
    let o = fisc(&["simulate", "pool", "--scenario", s(&scenario), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(&format!("{}:3:", scenario.display())), "{}", stderr(&o));

    std::fs::write(&scenario, "blocks = 1\nminer_hash_share = \"2\"\nbtc_price = \"1\"\n").unwrap();
    let o = fisc(&["simulate", "chain", "--scenario", s(&scenario), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn attribution_allow_and_deny() {
    let out = tempfile::tempdir().unwrap();
    let o = fisc(&["attrib", "--scenario", s(&fixture("attrib_allow.toml")), "--out", s(out.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = read(out.path(), "trace.tsv");
    let last = trace.lines().rfind(|l| l.contains("result:")).unwrap();
    assert!(last.contains("result:affirmed:J2"), "{last}");
    let ledger = read(out.path(), "withholding.csv");
    assert!(ledger.lines().nth(1).unwrap().ends_with(",affirmed,J2,0.1,0.1"), "{ledger}");

    let out = tempfile::tempdir().unwrap();
    let o = fisc(&["attrib", "--scenario", s(&fixture("attrib_deny.toml")), "--out", s(out.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ledger = read(out.path(), "withholding.csv");
    assert!(ledger.lines().nth(1).unwrap().ends_with(",unaffirmed,,0.3,0.3"), "{ledger}");
}

#[test]
fn attribution_trace_is_reproducible_per_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = fisc(&["attrib", "--scenario", s(&fixture("attrib_allow.toml")), "--seed", "99", "--out", s(dir.path())]);
        assert!(o.status.success());
    }
    assert_eq!(read(a.path(), "trace.tsv"), read(b.path(), "trace.tsv"));
    assert_eq!(read(a.path(), "manifest.json"), read(b.path(), "manifest.json"));
}
