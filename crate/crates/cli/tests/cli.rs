use std::fs;
use std::process::{Command, Output};

fn gamerank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gamerank"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn generate_run_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let config = dir.path().join("cfg.toml");
    fs::write(&config, "[synth]\nper_agent_count = 100\n").unwrap();
    let cfg = config.to_str().unwrap();
    let common = [
        "--config",
        cfg,
        "--out",
        out,
        "--mean-range",
        "0,1",
        "--detectors",
        "payout,random,s_ipw",
    ];

    let g = gamerank(&[&["generate"], &common[..], &["--seed", "5"]].concat());
    assert_eq!(code(&g), 0, "{}", String::from_utf8_lossy(&g.stderr));
    assert!(dir.path().join("datasets/mr_0_seed_5.csv").exists());
    assert!(dir.path().join("datasets/mr_1_seed_5.meta").exists());

    // The default seed list has datasets missing.
    let missing = gamerank(&[&["run"], &common[..]].concat());
    assert_eq!(code(&missing), 1);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("mr_0_seed_0.csv"));

    let r = gamerank(&[&["run"], &common[..], &["--seed", "5"]].concat());
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let ausc = fs::read_to_string(dir.path().join("results_ausc.csv")).unwrap();
    assert_eq!(ausc.lines().count(), 1 + 2 * 3);

    let rep = gamerank(&[&["report"], &common[..], &["--seed", "5"]].concat());
    assert_eq!(code(&rep), 0, "{}", String::from_utf8_lossy(&rep.stderr));
    let stdout = String::from_utf8_lossy(&rep.stdout);
    assert!(stdout.contains("A5:"), "{stdout}");
    assert!(dir.path().join("curves/curves_mr_1.csv").exists());

    // Reporting on more cells than were run is a contract error.
    let partial = gamerank(&[&["report"], &common[..]].concat());
    assert_eq!(code(&partial), 1);
    assert!(String::from_utf8_lossy(&partial.stderr).contains("missing"));
}

#[test]
fn rank_single_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let g = gamerank(&[
        "generate",
        "--out",
        out,
        "--seed",
        "1",
        "--mean-range",
        "0.5",
    ]);
    assert_eq!(code(&g), 0);
    let data = dir.path().join("datasets/mr_0.5_seed_1.csv");
    let effects = dir.path().join("effects.csv");
    let ranking = dir.path().join("ranking.csv");
    let r = gamerank(&[
        "rank",
        "--input",
        data.to_str().unwrap(),
        "--detectors",
        "s_learner",
        "--out",
        ranking.to_str().unwrap(),
        "--effects",
        effects.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(&ranking).unwrap();
    assert!(text.starts_with("position,agent_id,score\n1,"));
    assert_eq!(text.lines().count(), 21);
    assert!(fs::read_to_string(&effects)
        .unwrap()
        .starts_with("agent_id,0,1,"));

    let stdout = gamerank(&[
        "rank",
        "--input",
        data.to_str().unwrap(),
        "--detectors",
        "payout",
    ]);
    assert_eq!(code(&stdout), 0);
    assert_eq!(String::from_utf8_lossy(&stdout.stdout).lines().count(), 21);

    let two = gamerank(&[
        "rank",
        "--input",
        data.to_str().unwrap(),
        "--detectors",
        "payout,random",
    ]);
    assert_eq!(code(&two), 1);
}

#[test]
fn contract_errors_exit_with_one() {
    assert_eq!(code(&gamerank(&["run", "--detectors", "bogus"])), 1);
    assert_eq!(code(&gamerank(&["generate", "--mean-range", "x"])), 1);
    assert_eq!(code(&gamerank(&["frobnicate"])), 1);
    assert_eq!(code(&gamerank(&["--help"])), 0);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "detectors = []\n").unwrap();
    assert_eq!(
        code(&gamerank(&["generate", "--config", cfg.to_str().unwrap()])),
        1
    );
}

#[test]
fn verify_reports_every_criterion() {
    let v = gamerank(&["verify"]);
    let stdout = String::from_utf8_lossy(&v.stdout);
    for id in [
        "A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9", "A10", "A11",
    ] {
        assert!(
            stdout.contains(&format!(" {id}:")),
            "{id} missing from\n{stdout}"
        );
    }
    let any_fail = stdout.lines().any(|l| l.starts_with("FAIL"));
    assert_eq!(code(&v), if any_fail { 2 } else { 0 }, "{stdout}");
}
