use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn configs_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monocert"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run monocert")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn with_config(name: &str, edit: impl Fn(String) -> String) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fs::read_to_string(configs_dir().join(name)).unwrap();
    fs::write(dir.path().join("c.toml"), edit(cfg)).unwrap();
    dir
}

#[test]
fn help_and_version_succeed() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(d.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(run(d.path(), &["--version"]).status.code(), Some(0));
    assert_eq!(run(d.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(d.path(), &["info"]).status.code(), Some(0));
}

#[test]
fn missing_lipschitz_is_a_usage_error() {
    let d = with_config("population.toml", |c| c.lines().filter(|l| !l.starts_with("lipschitz")).collect::<Vec<_>>().join("\n"));
    assert!(run(d.path(), &["-c", "c.toml", "simulate"]).status.success());
    let o = run(d.path(), &["-c", "c.toml", "verify"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("certificate.lipschitz"), "{}", text(&o));
}

#[test]
fn bad_field_names_its_path() {
    let d = with_config("traffic.toml", |c| c.replace("horizon = 1000\noutput_dir", "horizon = \"long\"\noutput_dir"));
    let o = run(d.path(), &["-c", "c.toml", "simulate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("simulate.horizon"), "{}", text(&o));
}

#[test]
fn zero_horizon_gives_single_state() {
    let d = with_config("population.toml", |c| c.replace("horizon = 400\noutput_dir", "horizon = 0\noutput_dir"));
    let o = run(d.path(), &["-c", "c.toml", "simulate"]);
    assert!(o.status.success(), "{}", text(&o));
    let tr = monocert::Trajectory::load(&d.path().join("out/population/data/run1.json")).unwrap();
    assert_eq!(tr.horizon(), 0);
    assert_eq!(tr.states().len(), 1);
}

#[test]
fn coarse_grid_is_inconclusive() {
    let d = with_config("population.toml", |c| c.replace("width = 0.5", "width = 5.0"));
    assert!(run(d.path(), &["-c", "c.toml", "simulate"]).status.success());
    let o = run(d.path(), &["-c", "c.toml", "verify"]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    assert!(text(&o).contains("inconclusive"));
    assert!(text(&o).contains("most violated rows"));
}

#[test]
fn refusals_are_listed_when_no_tail_fits() {
    // Both runs start high and stay above their limit: no lower tails, and
    // upper bases alone cannot separate the sets.
    let d = with_config("traffic.toml", |c| c.replace("x0 = [0.1, 0.3]", "x0 = [9.8, 9.6]"));
    assert!(run(d.path(), &["-c", "c.toml", "simulate"]).status.success());
    let o = run(d.path(), &["-c", "c.toml", "synthesize"]);
    let t = text(&o);
    assert_eq!(o.status.code(), Some(2), "{t}");
    assert!(t.contains("refused"), "{t}");
    assert!(t.contains("inconclusive"), "{t}");
}

#[test]
fn grid_export_and_shield() {
    let d = with_config("traffic.toml", |c| c);
    assert!(run(d.path(), &["-c", "c.toml", "simulate"]).status.success());
    let o = run(d.path(), &["-c", "c.toml", "synthesize"]);
    assert!(o.status.success(), "{}", text(&o));
    let shield = fs::read_to_string(d.path().join("out/traffic/certificate.shield.csv")).unwrap();
    assert_eq!(shield.lines().count(), 101);
    assert!(shield.lines().skip(1).all(|l| l.ends_with(",9,0.55")));

    let cert = "out/traffic/certificate.json";
    let o = run(d.path(), &["eval-grid", "--certificate", cert, "--resolution", "1"]);
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert_eq!(csv.lines().next(), Some("x1,x2,value"));
    assert!(csv.lines().nth(1).unwrap().starts_with("5,5,"));

    // Initial set inside the 0-sublevel set, unsafe set outside.
    let o = run(d.path(), &["eval-grid", "--certificate", cert, "--resolution", "201"]);
    assert!(o.status.success());
    let csv = String::from_utf8(o.stdout).unwrap();
    let mut seen = (0, 0);
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let (x1, x2, b) = (v[0], v[1], v[2]);
        if (4.0..=6.0).contains(&x1) && (4.0..=6.0).contains(&x2) {
            assert!(b <= 0.0, "{line}");
            seen.0 += 1;
        }
        if x1 < 1.0 && x2 < 1.0 || x1 > 9.0 || x2 > 9.0 {
            assert!(b > 0.0, "{line}");
            seen.1 += 1;
        }
    }
    assert!(seen.0 > 0 && seen.1 > 0);

    for bad in [["--axes", "1,1"], ["--axes", "3,1"], ["--at", "1,2,3"]] {
        let o = run(d.path(), &["eval-grid", "--certificate", cert, bad[0], bad[1]]);
        assert_eq!(o.status.code(), Some(1), "{bad:?}");
    }
}

#[test]
fn tampered_data_is_rejected() {
    let d = with_config("traffic.toml", |c| c);
    assert!(run(d.path(), &["-c", "c.toml", "simulate"]).status.success());
    assert!(run(d.path(), &["-c", "c.toml", "synthesize"]).status.success());
    let p = d.path().join("out/traffic/data/run1.json");
    let data = fs::read_to_string(&p).unwrap().replacen("9.5", "9.4", 1);
    fs::write(&p, data).unwrap();
    let o = run(d.path(), &["-c", "c.toml", "validate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("changed"), "{}", text(&o));
}
