use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_frechet-solve"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn scalar_solve_prints_the_root() {
    let o = run(&["solve", "--problem", "scalar-quadratic", "--target", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let x: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("x "))
        .expect("x line")
        .parse()
        .unwrap();
    // x + x²/4 = 1/2
    assert!((x - (-2.0 + 6.0f64.sqrt())).abs() < 1e-9, "{out}");
    assert!(out.contains("status Converged"));
}

#[test]
fn inverse_verification_passes() {
    let o = run(&[
        "verify", "inverse", "--problem", "scalar-quadratic", "--samples", "200", "--seed", "7",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("verdict Pass"));
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(run(&["solve", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--problem", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["ode", "--ode", "nope"]).status.code(), Some(2));
    assert_eq!(
        run(&["solve", "--problem", "scalar-quadratic", "--eps0", "1.5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["verify", "inject", "--problem", "fourier-antiderivative"]).status.code(),
        Some(2)
    );
}

#[test]
fn help_lists_flags() {
    let cases: &[(&[&str], &[&str])] = &[
        (&["solve"], &["--config", "--seed", "--out", "--trace", "--eps0", "--k0", "--max-outer"]),
        (&["verify", "surj"], &["--samples", "--seed", "--problem"]),
        (&["verify", "inverse"], &["--samples", "--tol"]),
        (&["verify", "inject"], &["--samples"]),
        (&["verify", "ift"], &["--samples"]),
        (&["ode"], &["--ode", "--r", "--grid"]),
    ];
    for (cmd, flags) in cases {
        let mut args = cmd.to_vec();
        args.push("--help");
        let o = run(&args);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        for flag in *flags {
            assert!(text.contains(flag), "{cmd:?} help lacks {flag}");
        }
    }
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for i in 0..2 {
        let dir = tmp.path().join(format!("run{i}"));
        let o = run(&[
            "verify",
            "surj",
            "--problem",
            "fourier-quadratic",
            "--samples",
            "8",
            "--seed",
            "3",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        let mut files = read_dir(&dir);
        // the recorded config names the output directory
        files.retain(|(n, _)| n.ends_with(".csv"));
        outputs.push((o.stdout, files));
    }
    assert!(!outputs[0].1.is_empty());
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn saved_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let o = run(&[
        "solve",
        "--problem",
        "fourier-antiderivative",
        "--trace",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(a.join("solve_trace.csv").exists());
    let again = run(&["solve", "--config", a.join("config.json").to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(o.stdout, again.stdout);
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("solve.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["problem"], "fourier-antiderivative");
}

#[test]
fn mismatched_config_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    std::fs::write(&cfg, r#"{"experiment": "surj", "problem": "scalar-quadratic"}"#).unwrap();
    let o = run(&["verify", "inverse", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn list_is_deterministic() {
    let a = run(&["list"]);
    let b = run(&["list"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let block: Vec<&str> = text
        .lines()
        .skip_while(|l| *l != "fourier-antiderivative")
        .take(4)
        .collect();
    assert!(block.contains(&"  d = 1"), "{text}");
    assert!(text.contains("logistic-scalar (ode)"));
}

#[test]
fn every_catalog_problem_solves_its_default_target() {
    let text = stdout(&run(&["list"]));
    let names: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with(' ') && !l.ends_with("(ode)"))
        .collect();
    assert_eq!(names.len(), 3);
    for name in names {
        let o = run(&["solve", "--problem", name]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
    }
}

#[test]
fn starved_solver_makes_verification_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "surj", "problem": "fourier-quadratic", "solver": {"max_outer": 1}}"#,
    )
    .unwrap();
    let o = run(&["verify", "surj", "--config", cfg.to_str().unwrap(), "--samples", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("verdict Fail"));
}

#[test]
fn starved_solve_is_a_solver_failure() {
    let o = run(&["solve", "--problem", "fourier-quadratic", "--max-outer", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn ode_matches_closed_form() {
    let o = run(&["ode", "--ode", "logistic-scalar", "--r", "0.5", "--grid", "200"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let err: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("closed_form_error "))
        .and_then(|l| l.split(' ').next_back())
        .unwrap()
        .parse()
        .unwrap();
    assert!(err < 1e-8, "{out}");
}

#[test]
fn ift_passes() {
    let o = run(&["verify", "ift", "--samples", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}
