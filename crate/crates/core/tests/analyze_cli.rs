use std::path::Path;
use std::process::{Command, Output};

use reverie::simulation::{run_cohort, CohortConfig};

fn cohort_log(dir: &Path) -> std::path::PathBuf {
    let config = CohortConfig::default();
    let cohort = run_cohort(&config).unwrap();
    let path = dir.join("events.log");
    std::fs::write(&path, cohort.journal.store().log_bytes().unwrap()).unwrap();
    path
}

fn analyze(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_analyze"))
        .args(args)
        .env_remove("REVERIE_STORE_KEY")
        .env("REVERIE_STORE_PASSPHRASE", "cohort-7")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn export_then_test_columns() {
    let dir = tempfile::tempdir().unwrap();
    let log = cohort_log(dir.path());
    let out = dir.path().join("export");
    let listed = stdout(&analyze(&[
        "--log",
        log.to_str().unwrap(),
        "export",
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(listed.lines().count(), 9);
    let summary = out.join("participant_summary.csv");
    assert!(summary.exists());

    let w = stdout(&analyze(&[
        "wilcoxon",
        "--csv",
        summary.to_str().unwrap(),
        "--column",
        "img_01",
    ]));
    let row: Vec<&str> = w.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "img_01");
    // Four experimental participants; ratings equal to mu are dropped.
    let n: usize = row[2].parse().unwrap();
    assert!((1..=4).contains(&n));
    assert_eq!(row[5], "exact");

    let s = stdout(&analyze(&[
        "spearman",
        "--csv",
        summary.to_str().unwrap(),
        "--x",
        "sug_01",
        "--y",
        "img_01",
    ]));
    assert!(s.starts_with("x,y,n,rho,p_value,method"));
}

#[test]
fn table_commands_read_the_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = cohort_log(dir.path());
    let log = log.to_str().unwrap();

    let affect = stdout(&analyze(&["--log", log, "affect"]));
    assert!(affect.lines().nth(1).unwrap().starts_with("experimental,4,"));
    assert!(affect.lines().nth(2).unwrap().starts_with("control,4,"));

    let perceptions = stdout(&analyze(&["--log", log, "perceptions", "--battery", "imaginations"]));
    assert_eq!(perceptions.lines().count(), 9);

    let lexicon = stdout(&analyze(&["--log", log, "lexicon"]));
    assert!(lexicon.starts_with("text_id,text_type,word_count,"));
    assert!(lexicon.lines().any(|l| l.contains(",suggestion,")));

    let lengths = stdout(&analyze(&["--log", log, "lengths"]));
    assert_eq!(lengths.lines().count(), 5);
}

#[test]
fn wrong_key_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let log = cohort_log(dir.path());
    let o = Command::new(env!("CARGO_BIN_EXE_analyze"))
        .args(["--log", log.to_str().unwrap(), "affect"])
        .env_remove("REVERIE_STORE_KEY")
        .env("REVERIE_STORE_PASSPHRASE", "not-it")
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("analyze: "));
}
