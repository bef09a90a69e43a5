use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn forage(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forage")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// `key = value` from a report.
fn field(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.trim_start().strip_prefix('=')))
        .unwrap_or_else(|| panic!("no `{key}` in\n{report}"))
        .split('#')
        .next()
        .unwrap()
        .trim()
        .trim_matches('"')
        .to_owned()
}

fn num(report: &str, key: &str) -> f64 {
    field(report, key).parse().unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

fn with_alpha(src: &str, alpha: f64) -> tempfile::NamedTempFile {
    let text = std::fs::read_to_string(data(src)).unwrap();
    let text = text.replacen(&text.lines().nth(1).unwrap().to_owned(), &format!("alpha = {alpha}"), 1);
    let f = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(f.path(), text).unwrap();
    f
}

#[test]
fn cutoff_matches_formula_and_oracle() {
    let o = forage(&["cutoff", "--scenario", data("safe_good.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = stdout(&o);
    assert!((num(&r, "p_bar_alpha") - 0.25).abs() < 1e-12);
    assert!((num(&r, "p_bar_0") - 2.0 / 3.0).abs() < 1e-12);
    assert!(num(&r, "gap_cells") < 2.0, "{r}");

    let f = with_alpha("safe_good.toml", 0.0);
    let r = stdout(&forage(&["cutoff", "--scenario", f.path().to_str().unwrap()]));
    assert!((num(&r, "p_bar_alpha") - 2.0 / 3.0).abs() < 1e-12, "{r}");
}

#[test]
fn malformed_file_names_key() {
    let text = std::fs::read_to_string(data("safe_good.toml")).unwrap().replace("rate_good", "rate_goood");
    let f = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(f.path(), text).unwrap();
    let o = forage(&["cutoff", "--scenario", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rate_goood"));
}

#[test]
fn exit_codes() {
    assert_eq!(forage(&["cutoff"]).status.code(), Some(2), "missing --scenario");
    assert_eq!(forage(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(forage(&["verify", "nonsense"]).status.code(), Some(2));
    let two = data("two_good.toml");
    assert_eq!(forage(&["cutoff", "--scenario", two.to_str().unwrap()]).status.code(), Some(3));
    let safe = data("safe_good.toml");
    assert_eq!(forage(&["policy", "--scenario", safe.to_str().unwrap()]).status.code(), Some(3));
    let f = with_alpha("two_good.toml", 1.5);
    assert_eq!(forage(&["policy", "--scenario", f.path().to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(forage(&["verify", "cycle"]).status.code(), Some(0));
}

#[test]
fn verify_cycle_prints_triple() {
    let r = stdout(&forage(&["cycle"]));
    assert!(r.contains("(prior 0.3, reward 10, rate 1)"), "{r}");
    assert!(r.contains("cycle = true"));
    let r = stdout(&forage(&["verify", "cycle"]));
    assert_eq!(r.matches("PASS").count(), 6, "{r}");
    assert!(r.contains("(0.3, 10, 1)"));
}

#[test]
fn good_news_timeline_diverges_at_switch() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = forage(&["policy", "--scenario", data("two_good.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let t_switch = num(&stdout(&o), "T");
    let rows = csv_rows(&std::fs::read_to_string(&out).unwrap());
    for row in &rows {
        let t: f64 = row[0].parse().unwrap();
        assert_eq!(row[3], if t < t_switch { "H" } else { "L" }, "{row:?}");
        assert_eq!(row[4], "H");
    }
}

#[test]
fn bad_news_event_order() {
    let r = stdout(&forage(&["policy", "--scenario", data("two_bad.toml").to_str().unwrap()]));
    let (t1, t_switch, t2) = (num(&r, "t1"), num(&r, "T"), num(&r, "t2"));
    assert!(t1 < t_switch && t_switch < t2, "{r}");
    assert_eq!(field(&r, "initial_explored"), "L");
    assert_eq!(field(&r, "initial_exploited"), "H");
}

#[test]
fn balanced_policy_is_constant() {
    let r = stdout(&forage(&["policy", "--scenario", data("two_balanced.toml").to_str().unwrap()]));
    assert_eq!(field(&r, "T"), "none");
    let rows = csv_rows(r.split_once("t,p_L").unwrap().1);
    assert!(rows.windows(2).all(|w| w[0][3] == w[1][3] && w[0][4] == w[1][4]));
}

#[test]
fn delta_surface_shape() {
    let bad = stdout(&forage(&["delta-surface", "--scenario", data("safe_bad.toml").to_str().unwrap()]));
    let rows = csv_rows(bad.split_once("p_H,").unwrap().1);
    assert_eq!(rows.len(), 2500);
    for row in &rows {
        let (p, d): (f64, f64) = (row[0].parse().unwrap(), row[5].parse().unwrap());
        assert!(d >= 0.0, "{row:?}");
        if p >= 2.0 / 3.0 {
            assert!(d.abs() < 1e-12, "{row:?}");
        }
    }

    let good = stdout(&forage(&["delta-surface", "--scenario", data("safe_good.toml").to_str().unwrap()]));
    let rows = csv_rows(good.split_once("p_H,").unwrap().1);
    for column in rows.chunks(50) {
        let ratio: f64 = column[0][1].parse().unwrap();
        let best = column.iter().max_by(|a, b| a[5].parse::<f64>().unwrap().total_cmp(&b[5].parse().unwrap())).unwrap();
        let p: f64 = best[0].parse().unwrap();
        let lo = (ratio * 10.0) / ((ratio + 1.0) * 15.0 - 10.0);
        // the sampled maximum sits within one prior step of the interval
        assert!(lo - 1.0 / 51.0 < p && p < 2.0 / 3.0, "ratio {ratio}: argmax {p}");
    }
}

#[test]
fn csv_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let scen = data("two_bad.toml");
    let run = |name: &str, cmd: &str| {
        let out = dir.path().join(name);
        let o = forage(&[cmd, "--scenario", scen.to_str().unwrap(), "--paths", "500", "--seed", "7", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read(out).unwrap(), o.stdout)
    };
    let (a, ra) = run("a.csv", "simulate");
    let (b, rb) = run("b.csv", "simulate");
    assert_eq!(a, b);
    assert_eq!(ra, rb);
    assert!(!a.contains(&b'\r'));
    assert_eq!(run("c.csv", "policy").0, run("d.csv", "policy").0);
}

#[test]
fn thread_cap_keeps_output() {
    let scen = data("two_good.toml");
    let go = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_forage"))
            .args(["simulate", "--scenario", scen.to_str().unwrap(), "--paths", "2000"])
            .env("FORAGE_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(go("1"), go("4"));
}

#[test]
fn oracle_grid_csv() {
    let o = forage(&["oracle", "--scenario", data("safe_good.toml").to_str().unwrap(), "--grid", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let r = stdout(&o);
    let rows = csv_rows(r.split_once("p_L,p_H").unwrap().1);
    assert_eq!(rows.len(), 101);
    // explored project is always H with a safe L; exploitation flips once
    let flips = rows.windows(2).filter(|w| w[0][4] != w[1][4]).count();
    assert_eq!(flips, 1);
}
