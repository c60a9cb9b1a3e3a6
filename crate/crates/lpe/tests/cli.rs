use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn lpe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = lpe(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

/// `param,estimate,se` rows of an `estimate` report.
fn estimates(report: &str) -> Vec<(String, f64, f64)> {
    report
        .lines()
        .skip_while(|l| *l != "param,estimate,se")
        .skip(1)
        .take_while(|l| !l.contains(": "))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

fn field(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in {report}"))
        .parse()
        .unwrap()
}

const SIMULATIONS: [&[&str]; 4] = [
    &["simulate", "ma1", "--n", "300", "--amp", "0,0.2,0.4", "--osc", "0,4,4"],
    &["simulate", "noisy-diffusion", "--n", "300", "--v", "0.5", "--amp", "0.3", "--osc", "2"],
    &["simulate", "uz", "--sigma2", "0.0001", "--m", "2"],
    &["simulate", "poisson", "--n", "300", "--rate", "3", "--amp", "1", "--osc", "3"],
];

#[test]
fn simulations_are_deterministic() {
    let dir = TempDir::new().unwrap();
    for (i, base) in SIMULATIONS.iter().enumerate() {
        let a = path(&dir, &format!("{i}a.csv"));
        let b = path(&dir, &format!("{i}b.csv"));
        let c = path(&dir, &format!("{i}c.csv"));
        ok(&[base, &["--seed", "7", "--out", &a][..]].concat());
        ok(&[base, &["--seed", "7", "--out", &b, "--threads", "2"][..]].concat());
        ok(&[base, &["--seed", "8", "--out", &c][..]].concat());
        let (a, b, c) = (fs::read(a).unwrap(), fs::read(b).unwrap(), fs::read(c).unwrap());
        assert_eq!(a, b, "{base:?}");
        assert_ne!(a, c, "{base:?}");
    }
}

#[test]
fn uz_prices_lie_on_the_tick_grid() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "uz.csv");
    ok(&["simulate", "uz", "--tick", "0.001", "--seed", "3", "--out", &out]);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time,price"));
    let mut rows = 0;
    for line in lines {
        let price = line.split(',').nth(1).unwrap();
        let decimals = price.split('.').nth(1).unwrap();
        assert_eq!(decimals.len(), 3, "{price}");
        let q: f64 = price.parse::<f64>().unwrap() / 0.001;
        assert!((q - q.round()).abs() < 1e-6);
        rows += 1;
    }
    assert!(rows > 3000, "{rows} rows");
}

fn usage_error(args: &[&str]) {
    let out = lpe(args);
    assert_eq!(out.status.code(), Some(2), "{args:?}");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage") || err.contains("--help"), "{args:?}: {err}");
}

#[test]
fn usage_errors_exit_with_status_two() {
    usage_error(&["simulate", "ma1", "--n", "100", "--seed", "7"]);
    usage_error(&["simulate", "ma1", "--n", "100", "--out", "x.csv"]);
    usage_error(&["simulate", "ma1", "--nu", "0,1", "--seed", "1", "--out", "x.csv"]);
    usage_error(&["estimate", "lpe-ma1", "--in", "x.csv", "--h", "1"]);
    usage_error(&["mc", "table1", "--paths", "0", "--seed", "1", "--out", "x.csv"]);
    usage_error(&["bias-table", "--reps", "999", "--seed", "1", "--out", "x.csv"]);
    usage_error(&["--threads", "0", "simulate", "uz", "--seed", "1", "--out", "x.csv"]);
    usage_error(&["frobnicate"]);
}

#[test]
fn runtime_errors_exit_with_status_one() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.csv");
    fs::write(&bad, "dt,value\n0.1,1.5\n0.1,abc\n0.1,2\n").unwrap();
    let out = lpe(&["estimate", "rv", "--in", &bad, "--h", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("value"), "{err}");

    let short = path(&dir, "short.csv");
    ok(&["simulate", "ma1", "--n", "20", "--seed", "1", "--out", &short]);
    let out = lpe(&["estimate", "lpe-ma1", "--in", &short, "--h", "50"]);
    assert_eq!(out.status.code(), Some(1));

    let out = lpe(&["estimate", "rv", "--in", &path(&dir, "missing.csv")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    let ticks = path(&dir, "ticks.csv");
    fs::write(&ticks, "time,price\n0,1.000\n0.5,1.0005\n").unwrap();
    let out = lpe(&["estimate", "lpe-uz", "--in", &ticks, "--tick", "0.001"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn estimate_recovers_a_constant_ma1() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "ma1.csv");
    ok(&["simulate", "ma1", "--n", "5000", "--nu", "0.2,0.5,1", "--seed", "11", "--out", &data]);
    let truth = [0.2, 0.5, 1.0];
    for extra in [&[][..], &["--bias-correct"][..]] {
        let report = ok(&[&["estimate", "lpe-ma1", "--in", &data, "--h", "250"][..], extra].concat());
        assert_eq!(field(&report, "blocks"), 20.0);
        let rows = estimates(&report);
        assert_eq!(rows.len(), 3);
        for ((name, est, se), t) in rows.iter().zip(truth) {
            assert!((est - t).abs() < 3.0 * se, "{name}: {est} vs {t} (se {se})");
        }
    }
    let report = ok(&["estimate", "lpe-ma1", "--in", &data, "--zero-mean", "--bias-correct"]);
    assert_eq!(field(&report, "h"), 70.0);
    let names: Vec<String> = estimates(&report).into_iter().map(|r| r.0).collect();
    assert_eq!(names, ["beta", "kappa"]);
}

#[test]
fn estimate_rv_and_poisson() {
    let dir = TempDir::new().unwrap();
    let returns = path(&dir, "r.csv");
    ok(&["simulate", "noisy-diffusion", "--n", "4000", "--sigma2", "2", "--seed", "5", "--out", &returns]);
    let rows = estimates(&ok(&["estimate", "rv", "--in", &returns, "--h", "100"]));
    let (_, est, se) = &rows[0];
    assert!((est - 2.0).abs() < 3.0 * se, "{est} {se}");
    assert!((se - 2.0 * (2.0f64 / 4000.0).sqrt()).abs() < 0.1 * se);

    let counts = path(&dir, "c.csv");
    ok(&["simulate", "poisson", "--n", "4000", "--rate", "3", "--alpha", "4000", "--seed", "5", "--out", &counts]);
    let rows = estimates(&ok(&["estimate", "poisson", "--in", &counts]));
    let (_, est, se) = &rows[0];
    assert!((est - 3.0).abs() < 3.0 * se, "{est} {se}");
}

#[test]
fn estimate_lpe_uz_reports_the_constancy_test() {
    let dir = TempDir::new().unwrap();
    let ticks = path(&dir, "uz.csv");
    ok(&["simulate", "uz", "--seed", "21", "--out", &ticks]);
    let report = ok(&["estimate", "lpe-uz", "--in", &ticks, "--tick", "0.001", "--h", "50"]);
    let rows = estimates(&report);
    assert_eq!(rows[0].0, "sigma2");
    assert_eq!(rows[1].0, "eta");
    assert!((rows[1].1 - 0.155).abs() < 3.0 * rows[1].2, "{report}");
    let p = field(&report, "pvalue");
    assert!((0.0..=1.0).contains(&p));
    assert_eq!(field(&report, "df") as usize + 1, field(&report, "blocks") as usize);

    let mismatched = lpe(&["estimate", "lpe-uz", "--in", &ticks, "--tick", "0.01"]);
    assert_eq!(mismatched.status.code(), Some(1));
}

fn mc_table(dir: &Path, args: &[&str], name: &str) -> Vec<u8> {
    let out = dir.join(name);
    ok(&[args, &["--out", out.to_str().unwrap()][..]].concat());
    fs::read(out).unwrap()
}

#[test]
fn mc_is_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let args = ["mc", "table2", "--paths", "3", "--seed", "4"];
    let one = mc_table(dir.path(), &[&args[..], &["--threads", "1"]].concat(), "1.csv");
    let three = mc_table(dir.path(), &[&args[..], &["--threads", "3"]].concat(), "3.csv");
    assert_eq!(one, three);

    let text = String::from_utf8(one).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("estimator,h,param,bias,sd,mc_se"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2 * (2 + 2 * 6));
    assert_eq!(&rows[0][..3], ["global-mle", "", "beta"]);
    assert_eq!(&rows[3][..3], ["last-500-mle", "", "kappa"]);
    assert_eq!(&rows[4][..3], ["lpe", "25", "beta"]);
    assert_eq!(&rows[27][..3], ["bc-lpe", "5000", "kappa"]);

    let uz = ["mc", "uz", "--paths", "4", "--seed", "9"];
    let rej = dir.path().join("rej.csv");
    let a = mc_table(
        dir.path(),
        &[&uz[..], &["--threads", "1", "--rejections-out", rej.to_str().unwrap()]].concat(),
        "uz1.csv",
    );
    let b = mc_table(dir.path(), &[&uz[..], &["--threads", "2"]].concat(), "uz2.csv");
    assert_eq!(a, b);
    let rej = fs::read_to_string(rej).unwrap();
    assert!(rej.starts_with("h,paths,rejections,rate,mc_se\n50,4,"));
    assert_eq!(rej.lines().count(), 10);
}
