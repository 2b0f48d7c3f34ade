//! Exit codes and output files of the `fedmask` binary.

use std::path::Path;
use std::process::{Command, Output};

use fedmask::secagg::RoundTranscript;
use fedmask::FieldVector;

fn fedmask(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedmask"))
        .args(args)
        .current_dir(cwd)
        .env_remove("FEDMASK_OUT_DIR")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const SMALL_RUN: &str = "kind = \"secagg_run\"\ntrials = 2\nn = 5\nk = 3\ndim = 3\n";

#[test]
fn run_writes_a_report_and_a_replayable_transcript() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SMALL_RUN).unwrap();
    let o = fedmask(
        &["run", "s.toml", "--out", "out", "--seed", "7"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    for f in [
        "header.json",
        "body.json",
        "rows.csv",
        "config.toml",
        "transcript-7.jsonl",
        "transcript-8.jsonl",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let o = fedmask(&["replay", "out/transcript-7.jsonl"], dir.path());
    assert_eq!(code(&o), 0);
}

#[test]
fn environment_sets_the_output_directory_and_the_flag_beats_it() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SMALL_RUN).unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["run", "s.toml"];
        args.extend(extra);
        Command::new(env!("CARGO_BIN_EXE_fedmask"))
            .args(&args)
            .current_dir(dir.path())
            .env("FEDMASK_OUT_DIR", "from-env")
            .output()
            .unwrap()
    };
    assert_eq!(code(&run(&[])), 0);
    assert!(dir.path().join("from-env/body.json").is_file());
    assert_eq!(code(&run(&["--out", "from-flag"])), 0);
    assert!(dir.path().join("from-flag/body.json").is_file());
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "n = 3\nk = 4\n").unwrap();
    std::fs::write(dir.path().join("typo.toml"), "trails = 3\n").unwrap();
    let o = fedmask(&["run", "bad.toml"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("`k`"));
    assert_eq!(code(&fedmask(&["run", "typo.toml"], dir.path())), 2);
    assert_eq!(code(&fedmask(&["run"], dir.path())), 2);
    assert_eq!(code(&fedmask(&["run", "missing.toml"], dir.path())), 2);
    assert_eq!(code(&fedmask(&["frobnicate"], dir.path())), 2);
}

#[test]
fn failed_checks_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    // One seed and one coordinate: far too few samples for a 10% match.
    std::fs::write(
        dir.path().join("clt.toml"),
        "kind = \"clt_check\"\ntrials = 1\ndim = 1\nalphas = [0.5]\nclient_counts = [10]\n",
    )
    .unwrap();
    let o = fedmask(&["clt-check", "clt.toml", "--out", "out"], dir.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("[FAIL]"));
}

#[test]
fn tampered_transcript_fails_replay_with_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SMALL_RUN).unwrap();
    assert_eq!(
        code(&fedmask(&["run", "s.toml", "--out", "out"], dir.path())),
        0
    );
    let path = dir.path().join("out/transcript-0.jsonl");
    let mut t = RoundTranscript::from_jsonl(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let agg = t.aggregate.take().unwrap();
    let mut r = agg.residues().to_vec();
    r[0] = (r[0] + 1) % agg.modulus();
    t.aggregate = Some(FieldVector::new(r, agg.modulus(), agg.frac_bits()).unwrap());
    std::fs::write(dir.path().join("bad.jsonl"), t.to_jsonl()).unwrap();
    assert_eq!(code(&fedmask(&["replay", "bad.jsonl"], dir.path())), 3);
}
