use std::path::Path;
use std::process::{Command, Output};

fn fmmv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmmv"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn eval_small_window() {
    let dir = tempfile::tempdir().unwrap();
    let o = fmmv(
        dir.path(),
        &[
            "eval", "--family", "t", "--index", "1", "--primes", "5..7", "--output", "json",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["residues"], serde_json::json!({"5": 3, "7": 2}));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fmmv(dir.path(), &["bogus"]).status.code(), Some(2));
    assert_eq!(
        fmmv(dir.path(), &["eval", "--family", "X", "--index", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        fmmv(dir.path(), &["eval", "--index", "1", "--primes", "9..5"])
            .status
            .code(),
        Some(2)
    );
    let o = fmmv(
        dir.path(),
        &[
            "express",
            "--family",
            "S",
            "--index",
            "1,1",
            "--constants",
            "G",
            "--no-cache",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_paper_passes_with_misprints_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let o = fmmv(
        dir.path(),
        &["verify-paper", "--primes", "5..100", "--no-cache"],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("MISPRINT")));
    assert!(!text.lines().any(|l| l.starts_with("FAIL")));
    assert!(text.contains("linear shuffle: b⧢bb"));
}

#[test]
fn express_weight_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = fmmv(
        dir.path(),
        &[
            "express",
            "--family",
            "T",
            "--index",
            "1,1~",
            "--constants",
            "q2^2,G,chi*G",
            "--no-cache",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "T:1,1~ = 1/2*G");
}

#[test]
fn cached_and_uncached_reports_agree() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "dims", "--space", "FMTV", "--weight", "6", "--output", "json",
    ];
    let plain = fmmv(dir.path(), &[&args[..], &["--no-cache"]].concat());
    let cold = fmmv(dir.path(), &args);
    let warm = fmmv(dir.path(), &args);
    assert_eq!(plain.status.code(), Some(0));
    assert_eq!(stdout(&plain), stdout(&cold));
    assert_eq!(stdout(&cold), stdout(&warm));
    let v: serde_json::Value = serde_json::from_str(&stdout(&plain)).unwrap();
    assert_eq!(v[0]["dim_estimate"], 3);
    let stats = stdout(&fmmv(dir.path(), &["cache", "stats", "--output", "json"]));
    let stats: serde_json::Value = serde_json::from_str(&stats).unwrap();
    assert!(stats["entries"].as_u64().unwrap() > 0);
    assert_eq!(stats["entries"], stats["rows"]);
    assert_eq!(fmmv(dir.path(), &["cache", "clear"]).status.code(), Some(0));
    let stats = stdout(&fmmv(dir.path(), &["cache", "stats", "--output", "json"]));
    assert!(stats.contains("\"entries\": 0"));
}

#[test]
fn relation_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = fmmv(
        dir.path(),
        &[
            "relations",
            "--weight",
            "2",
            "--primes",
            "5..200",
            "--out",
            "rels.jsonl",
            "--no-cache",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("rels.jsonl")).unwrap();
    let rels = fmmv::relations::relations_from_jsonl(&text).unwrap();
    assert!(!rels.is_empty());
    assert!(rels.iter().all(|r| !r.verified_primes.is_empty()));
    let three_t: fmmv::relations::LinearCombination = "3*T:1,1".parse().unwrap();
    assert!(rels.iter().any(|r| r.lhs.proportional_to(&three_t)));
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("my.conf"),
        "# window\nprime_hi = 97\nheight_bound = 32\n",
    )
    .unwrap();
    let o = fmmv(
        dir.path(),
        &["--config", "my.conf", "--height", "16", "--show-config"],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("prime_hi = 97"));
    assert!(text.contains("height_bound = 16"));
    std::fs::write(dir.path().join("bad.conf"), "prime_hi: 97\n").unwrap();
    assert_eq!(
        fmmv(dir.path(), &["--config", "bad.conf", "--show-config"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn words_access() {
    let dir = tempfile::tempdir().unwrap();
    let o = fmmv(dir.path(), &["words", "--shuffle", "b", "bB"]);
    assert_eq!(stdout(&o).trim(), "b ⧢ bB = 2*bbB + bBb");
    let o = fmmv(
        dir.path(),
        &[
            "words", "--coeff", "bBG", "--prime", "5", "--output", "json",
        ],
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["coeff"]["residue"], 3);
    assert_eq!(fmmv(dir.path(), &["words"]).status.code(), Some(2));
}
