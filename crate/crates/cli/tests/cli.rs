use compadv::alloc::Allocation;
use compadv::channel::{load_channel_trace, ResourceGrid};
use compadv::metrics::capacity;
use compadv::UserId;
use compadv_cli::commands::{build_scenario, curves_for_seed};
use compadv_cli::config::{ScenarioConfig, StrategyName};
use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn compadv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compadv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = compadv(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    fs::write(&path, body).unwrap();
    path
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generated_trace_round_trips_into_the_same_allocation() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    let stdout = ok(&["gen-channel", "--seed", "1", "--out", s(&gen)]);
    assert!(stdout.contains("user 1: rms magnitude"));

    let trace = gen.join("channel.csv");
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("# compadv config-digest="));
    assert_eq!(text.lines().filter(|l| l.starts_with("1,")).count(), 1500);
    assert_eq!(load_channel_trace(&trace, &ResourceGrid::default()).unwrap().len(), 2);

    let synth = dir.path().join("synth");
    ok(&["allocate", "--seed", "1", "--out", s(&synth)]);
    let cfg = write_config(dir.path(), "[channel]\nsource = \"trace\"\ntrace_path = \"gen/channel.csv\"\n");
    let traced = dir.path().join("traced");
    ok(&["allocate", "--config", s(&cfg), "--seed", "1", "--out", s(&traced)]);

    let (a, b) = (json(&synth.join("allocation.json")), json(&traced.join("allocation.json")));
    assert_eq!(a["owners"], b["owners"]);
    assert_eq!(a["capacities"], b["capacities"]);
}

#[test]
fn single_zero_delay_tap_gives_a_flat_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[channel]\ntap_count = 1\nmax_delay_s = 0.0\nnormalize_power = false\n",
    );
    ok(&["gen-channel", "--config", s(&cfg), "--out", s(dir.path())]);
    let responses = load_channel_trace(&dir.path().join("channel.csv"), &ResourceGrid::default()).unwrap();
    for r in responses {
        let first = r.gains()[0].norm();
        assert!(r.gains().iter().all(|g| (g.norm() - first).abs() <= 1e-12 * first));
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 9\n[curve]\nrandom_trials = 20\nseed_count = 2\n[oracle]\nmax_n = 6\ninstances = 5\n");
    for cmd in ["gen-channel", "allocate", "curve", "oracle-check"] {
        let (a, b) = (dir.path().join(format!("{cmd}-a")), dir.path().join(format!("{cmd}-b")));
        ok(&[cmd, "--config", s(&cfg), "--out", s(&a)]);
        ok(&[cmd, "--config", s(&cfg), "--out", s(&b)]);
        let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(!names.is_empty());
        for name in names {
            assert_eq!(
                fs::read(a.join(&name)).unwrap(),
                fs::read(b.join(&name)).unwrap(),
                "{cmd}: {name:?} differs"
            );
        }
    }
}

fn identical_trace(dir: &Path) -> PathBuf {
    ok(&["gen-channel", "--seed", "4", "--out", s(dir)]);
    let text = fs::read_to_string(dir.join("channel.csv")).unwrap();
    let mut out = String::from("user_id,subcarrier_index,real,imag\n");
    for user in ["1", "2"] {
        for line in text.lines().filter(|l| l.starts_with("1,")) {
            out.push_str(user);
            out.push_str(&line[1..]);
            out.push('\n');
        }
    }
    let path = dir.join("identical.csv");
    fs::write(&path, out).unwrap();
    path
}

#[test]
fn identical_channels_are_all_flexible_and_balanced() {
    let dir = tempfile::tempdir().unwrap();
    identical_trace(dir.path());
    let cfg = write_config(dir.path(), "[channel]\nsource = \"trace\"\ntrace_path = \"identical.csv\"\n");
    let out = dir.path().join("alloc");
    ok(&["allocate", "--config", s(&cfg), "--out", s(&out)]);
    let doc = json(&out.join("allocation.json"));
    assert_eq!(doc["m"], 0);
    assert_eq!(doc["n"], 0);
    assert_eq!(doc["flexible"], 125);
    let owners = doc["owners"].as_array().unwrap();
    assert_eq!(owners.iter().filter(|o| **o == 1).count(), 63);
    assert_eq!(owners.iter().filter(|o| **o == 2).count(), 62);

    let cfg = ScenarioConfig::load(&cfg).unwrap();
    let sc = curves_for_seed(&cfg, &[StrategyName::Ca, StrategyName::AntiCa], 0).unwrap();
    let (ca, anti) = (sc.crossings[0].throughput, sc.crossings[1].throughput);
    assert!((ca - anti).abs() <= 1e-9 * ca, "ca {ca} vs anti_ca {anti}");
}

#[test]
fn ratio_csv_has_one_descending_row_per_block() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["allocate", "--seed", "2", "--out", s(dir.path())]);
    assert!(stdout.contains("partition: m = "));
    let text = fs::read_to_string(dir.path().join("ratios.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# compadv config-digest="));
    assert_eq!(lines.next().unwrap(), "rank,block_index,ratio");
    let ratios: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ratios.len(), 125);
    assert!(ratios.windows(2).all(|w| w[0] >= w[1]));

    let doc = json(&dir.path().join("allocation.json"));
    for key in ["owners", "m", "n", "flexible", "unmet_demand", "capacities", "config_digest"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn multi_user_allocation_reports_groups() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[allocation]\nusers = 5\n");
    ok(&["allocate", "--config", s(&cfg), "--out", s(dir.path())]);
    let doc = json(&dir.path().join("allocation.json"));
    let groups = doc["groups"].as_array().unwrap();
    let members: usize = groups.iter().map(|g| g.as_array().unwrap().len()).sum();
    assert_eq!(members, 5);
    assert_eq!(doc["owners"].as_array().unwrap().len(), 125);
}

#[test]
fn four_seed_curve_sweep_reports_nonnegative_improvements() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[curve]\nseed_count = 4\n");
    let stdout = ok(&["curve", "--config", s(&cfg), "--strategies", "ca,anti_ca", "--out", s(dir.path())]);
    assert!(stdout.contains("ca vs anti_ca: 4 seeds"));
    let text = fs::read_to_string(dir.path().join("improvement.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let pct: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(pct >= 0.0, "{row}");
    }
    for seed in 1..=4 {
        assert!(dir.path().join(format!("curve_seed{seed}.csv")).is_file());
        assert!(json(&dir.path().join(format!("curve_seed{seed}.json")))["equal_capacity"].is_array());
    }
}

#[test]
fn curve_endpoints_match_full_ownership_capacity() {
    let cfg = ScenarioConfig::default();
    let sc = build_scenario(&cfg, 3).unwrap();
    let n = sc.grid.block_count();
    let full = |u: u32| {
        capacity(&Allocation::new(vec![UserId(u); n]), &sc.blocks, &sc.link)
            .unwrap()
            .per_user[&UserId(u)]
    };
    let curves = curves_for_seed(&cfg, &[StrategyName::Ca, StrategyName::AntiCa, StrategyName::Random], 3).unwrap();
    for curve in curves.curves {
        let (first, last) = (curve.points[0], curve.points[n]);
        assert!((last.c1 - full(1)).abs() <= 1e-9 * full(1));
        assert!((first.c2 - full(2)).abs() <= 1e-9 * full(2));
    }
}

#[test]
fn oracle_check_small_grids_pass() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["oracle-check", "--max-n", "8", "--out", s(dir.path())]);
    assert!(stdout.contains("50 instances"));
    assert!(stdout.contains(" 0 mismatches"));
    let text = fs::read_to_string(dir.path().join("oracle_gap.csv")).unwrap();
    let mut lines = text.lines().skip(1);
    assert_eq!(lines.next().unwrap(), "seed,k,ca_sum_bps,oracle_sum_bps,gap");
    let worked: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&worked[..2], &["0", "1"]);
    let gap: f64 = worked[4].parse().unwrap();
    assert!((gap - 100.2 / 101.1).abs() < 1e-12, "gap {gap}");
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let guard = compadv(&["oracle-check", "--max-n", "25", "--out", s(dir.path())]);
    assert_eq!(guard.status.code(), Some(4));

    let cfg = write_config(dir.path(), "[allocation]\nthreshold = 0.5\n");
    let invalid = compadv(&["allocate", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(invalid.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&invalid.stderr);
    assert!(stderr.contains("scenario.toml:2: allocation.threshold"), "{stderr}");

    let missing = compadv(&["allocate", "--config", s(&dir.path().join("absent.toml"))]);
    assert_eq!(missing.status.code(), Some(1));

    let zero = "user_id,subcarrier_index,magnitude\n".to_string()
        + &(0..1500).map(|i| format!("1,{i},1.0\n2,{i},{}\n", if i < 12 { 0.0 } else { 1.0 })).collect::<String>();
    fs::write(dir.path().join("zero.csv"), zero).unwrap();
    let cfg = write_config(dir.path(), "[channel]\nsource = \"trace\"\ntrace_path = \"zero.csv\"\n");
    let degenerate = compadv(&["allocate", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(degenerate.status.code(), Some(3), "{}", String::from_utf8_lossy(&degenerate.stderr));
}
