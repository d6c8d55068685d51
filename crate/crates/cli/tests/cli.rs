use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn adaptmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adaptmc")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn run_in(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> Output {
    let out = dir.display().to_string();
    let mut args = vec![sub, "--config", config, "--out", &out];
    args.extend_from_slice(extra);
    adaptmc(&args)
}

fn summary_without_wall_time(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with("wall_time_s=")).collect::<Vec<_>>().join("\n")
}

fn summary_value(path: &Path, key: &str) -> String {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(str::to_owned))
        .unwrap_or_else(|| panic!("{key} missing from {text}"))
}

const TOY: &str = "seed = 1\noutput_path = \"toy\"\nsteps = 10\n";

const IT: &str = r#"
seed = 5
output_path = "it"
steps = 2000

[target]
kind = "mixture"
dim = 1
separation = 5.0

[it]
temperatures = [1.0, 8.0]
upsilon = 0.3
proposal_covs = [[[1.0]], [[16.0]]]
x0 = [[5.0], [5.0]]
"#;

#[test]
fn toy_run_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        let cfg = write_config(d, "toy.toml", TOY);
        let o = run_in(d, "toy", &cfg, &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let trace = fs::read_to_string(a.path().join("toy.csv")).unwrap();
    assert_eq!(trace.lines().count(), 11);
    assert_eq!(trace.lines().next().unwrap(), "step,accepted,move_kind,x_0");
    for f in ["toy.csv", "toy.exact.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let (sa, sb) = (a.path().join("toy.summary.txt"), b.path().join("toy.summary.txt"));
    assert_eq!(summary_without_wall_time(&sa), summary_without_wall_time(&sb));
    assert_eq!(summary_value(&sa, "seed"), "1");
    assert_eq!(summary_value(&sa, "config_hash").len(), 64);
    summary_value(&sa, "wall_time_s").parse::<f64>().unwrap();
    let exact = fs::read_to_string(a.path().join("toy.exact.csv")).unwrap();
    assert_eq!(exact.lines().next().unwrap(), "n,theta,tv_exact,mixing_time");
    assert_eq!(exact.lines().nth(1).unwrap(), "1,1.0,0.5,inf");
}

#[test]
fn run_it_writes_one_trace_per_level() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "it.toml", IT);
    let o = run_in(d.path(), "run-it", &cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for k in [1, 2] {
        let t = fs::read_to_string(d.path().join(format!("it.level{k}.csv"))).unwrap();
        assert_eq!(t.lines().count(), 2001);
    }
    assert!(!d.path().join("it.level3.csv").exists());
    let level1 = fs::read_to_string(d.path().join("it.level1.csv")).unwrap();
    assert!(level1.contains(",interaction,"));
    let s = d.path().join("it.summary.txt");
    for key in ["acceptance_rate_level1", "acceptance_rate_level2", "interaction_rate_level1"] {
        summary_value(&s, key).parse::<f64>().unwrap();
    }
}

#[test]
fn diagnose_reports_exact_invariance() {
    let d = tempfile::tempdir().unwrap();
    let text = "seed = 9\noutput_path = \"diag\"\nsteps = 10\n\n[diagnose]\nchecks = [\"pi-invariance\"]\ninstances = 20\nstates = 5\n";
    let cfg = write_config(d.path(), "d.toml", text);
    let o = run_in(d.path(), "diagnose", &cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let err: f64 = summary_value(&d.path().join("diag.summary.txt"), "pi_invariance_max_abs_err").parse().unwrap();
    assert!(err <= 1e-12, "{err}");
    let csv = fs::read_to_string(d.path().join("diag.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 20 * 3);
}

#[test]
fn config_errors_exit_with_code_2() {
    let d = tempfile::tempdir().unwrap();
    let cases = [
        (IT.replace("upsilon = 0.3", "upsilon = 1.0"), "it.upsilon", "open interval (0, 1)"),
        (IT.replace("[1.0, 8.0]", "[1.0, 4.0, 2.0]"), "it.temperatures", "strictly ascending"),
        (IT.replace("separation = 5.0", "separation = 5.0\nseperation = 1.0"), "seperation", "line"),
        (IT.replace("steps = 2000", "steps = \"many\""), "steps", "line"),
    ];
    for (i, (text, field, detail)) in cases.iter().enumerate() {
        let cfg = write_config(d.path(), &format!("bad{i}.toml"), text);
        let o = run_in(d.path(), "run-it", &cfg, &[]);
        assert_eq!(o.status.code(), Some(2), "case {i}");
        let msg = String::from_utf8_lossy(&o.stderr);
        assert!(msg.contains(field) && msg.contains(detail), "case {i}: {msg}");
    }
    let o = adaptmc(&["run-it", "--config", "/nonexistent/cfg.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(d.path(), "it.toml", IT);
    let o = run_in(d.path(), "run-am", &cfg, &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_code_3_and_name_the_stage() {
    let d = tempfile::tempdir().unwrap();
    let text = "seed = 1\noutput_path = \"am\"\nsteps = 10\n\n[target]\nkind = \"gaussian\"\ndim = 1\n\n[am]\nkappa = 0.1\nx0 = [1e300]\n";
    let cfg = write_config(d.path(), "am.toml", text);
    let o = run_in(d.path(), "run-am", &cfg, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stage run-am"));
}

#[test]
fn seed_override_and_hash() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "toy.toml", &TOY.replace("steps = 10", "steps = 200"));
    let a = d.path().join("a");
    let b = d.path().join("b");
    assert!(adaptmc(&["toy", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(adaptmc(&["toy", "--config", &cfg, "--seed", "2", "--out", b.to_str().unwrap()]).status.success());
    assert_ne!(fs::read(a.join("toy.csv")).unwrap(), fs::read(b.join("toy.csv")).unwrap());
    assert_eq!(summary_value(&b.join("toy.summary.txt"), "seed"), "2");
    assert_ne!(
        summary_value(&a.join("toy.summary.txt"), "config_hash"),
        summary_value(&b.join("toy.summary.txt"), "config_hash")
    );
    // overriding with the configured value is a no-op
    let c = d.path().join("c");
    assert!(adaptmc(&["toy", "--config", &cfg, "--seed", "1", "--out", c.to_str().unwrap()]).status.success());
    assert_eq!(fs::read(a.join("toy.csv")).unwrap(), fs::read(c.join("toy.csv")).unwrap());
}

#[test]
fn replicates_and_thinning() {
    let d = tempfile::tempdir().unwrap();
    let text = "seed = 4\noutput_path = \"am\"\nsteps = 100\nburn_in = 20\nthinning = 5\nreplicates = 3\n\n[target]\nkind = \"gaussian\"\ndim = 2\n\n[am]\nkappa = 0.1\n";
    let cfg = write_config(d.path(), "am.toml", text);
    let o = run_in(d.path(), "run-am", &cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let traces: Vec<String> =
        (0..3).map(|r| fs::read_to_string(d.path().join(format!("am.rep{r}.csv"))).unwrap()).collect();
    assert_ne!(traces[0], traces[1]);
    let steps: Vec<usize> = traces[0].lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(steps, (25..=100).step_by(5).collect::<Vec<_>>());
    assert_eq!(traces[0].lines().next().unwrap(), "step,accepted,move_kind,x_0,x_1");
    // thinning leaves the sampled values untouched
    let dense = write_config(d.path(), "dense.toml", &text.replace("thinning = 5", "thinning = 1"));
    let dd = d.path().join("dense");
    assert!(adaptmc(&["run-am", "--config", &dense, "--out", dd.to_str().unwrap()]).status.success());
    let full = fs::read_to_string(dd.join("am.rep0.csv")).unwrap();
    for line in traces[0].lines().skip(1) {
        assert!(full.lines().any(|l| l == line), "{line}");
    }
}
