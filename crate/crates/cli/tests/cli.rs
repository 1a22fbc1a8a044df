use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn roamchain(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_roamchain"));
    cmd.args(args).env_remove("ROAMCHAIN_SEED");
    if let Some(s) = seed {
        cmd.env("ROAMCHAIN_SEED", s);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn simulate(out: &Path, seed: Option<&str>) -> Output {
    let cfg = config("two_country.cfg");
    roamchain(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        seed,
    )
}

#[test]
fn simulate_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate(dir.path(), None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["chain.txt", "operators.csv", "summary.txt", "world.jsonl"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let ops = fs::read_to_string(dir.path().join("operators.csv")).unwrap();
    let lines: Vec<_> = ops.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("operator,"));
    assert!(lines[1].starts_with("alpha,") && lines[2].starts_with("beta,"));
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("replay                       matches"));
    assert!(!summary.contains("UNBALANCED"));
}

#[test]
fn seed_variable_overrides_config() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(code(&simulate(a.path(), None)), 0);
    assert_eq!(code(&simulate(b.path(), Some("99"))), 0);
    let summary = fs::read_to_string(b.path().join("summary.txt")).unwrap();
    assert!(summary.lines().next().unwrap().ends_with(" 99"));
    let chain = |d: &Path| fs::read(d.join("chain.txt")).unwrap();
    assert_ne!(chain(a.path()), chain(b.path()));

    let c = tempfile::tempdir().unwrap();
    assert_eq!(code(&simulate(c.path(), Some("minus one"))), 3);
}

#[test]
fn exported_chain_validates_and_tampering_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&simulate(dir.path(), None)), 0);
    let chain = dir.path().join("chain.txt");
    let cfg = config("two_country.cfg");
    let ok = roamchain(
        &[
            "validate",
            "--chain",
            chain.to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&ok), 0);
    assert_eq!(stdout(&ok).trim(), "OK");

    let text = fs::read_to_string(&chain).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    // Flip a nibble in the last transaction of block 3.
    let line = &mut lines[3];
    let at = line.len() - 20;
    let flipped = if &line[at..at + 1] == "0" { "1" } else { "0" };
    line.replace_range(at..at + 1, flipped);
    fs::write(&chain, lines.join("\n") + "\n").unwrap();
    let bad = roamchain(&["validate", "--chain", chain.to_str().unwrap()], None);
    assert_eq!(code(&bad), 1);
    assert!(
        stdout(&bad).starts_with("INVALID first=3"),
        "{}",
        stdout(&bad)
    );
}

#[test]
fn compare_writes_two_rows_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("two_country.cfg");
    let o = roamchain(
        &[
            "econ-compare",
            "--config",
            cfg.to_str().unwrap(),
            "--lambda1",
            "0.25,0.5,1,2",
            "--assert",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let csv = fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    let rows: Vec<_> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows[0].starts_with("0.25,") && rows[0].ends_with(",traditional"));
    assert!(rows[1].ends_with(",blockchain"));
    assert!(stdout(&o).contains("crossover lambda1 = 0.5"));
}

#[test]
fn sweep_and_nash_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = config("two_country.cfg");
    let o = roamchain(
        &[
            "econ-sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--param",
            "c",
            "--range",
            "0.1:0.5:0.1",
            "--out",
            out,
        ],
        None,
    );
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(stdout(&o).contains("revenue[alpha]           Increases"));

    let nash = config("nash.cfg");
    let o = roamchain(
        &[
            "econ-nash",
            "--config",
            nash.to_str().unwrap(),
            "--out",
            out,
        ],
        None,
    );
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("nash.csv")).unwrap();
    assert!(
        csv.lines()
            .skip(1)
            .all(|l| l.split(',').nth(1) == Some("1")),
        "{csv}"
    );
}

#[test]
fn error_exit_codes() {
    assert_eq!(code(&roamchain(&["simulate"], None)), 2);
    assert_eq!(code(&roamchain(&["no-such-command"], None)), 2);
    assert_eq!(code(&roamchain(&["--help"], None)), 0);
    let cfg = config("two_country.cfg");
    let c = cfg.to_str().unwrap();
    assert_eq!(
        code(&roamchain(
            &[
                "econ-sweep",
                "--config",
                c,
                "--param",
                "zeta",
                "--range",
                "0:1:0.1"
            ],
            None
        )),
        2
    );
    assert_eq!(
        code(&roamchain(
            &[
                "econ-sweep",
                "--config",
                c,
                "--param",
                "p",
                "--range",
                "1:0:0.1"
            ],
            None
        )),
        2
    );

    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.cfg");
    fs::write(&broken, "[scenario]\nseed = 1\n").unwrap();
    let o = roamchain(&["econ-nash", "--config", broken.to_str().unwrap()], None);
    assert_eq!(code(&o), 3);
    assert!(!o.stderr.is_empty());

    let missing = dir.path().join("absent.cfg");
    assert_eq!(
        code(&roamchain(
            &["econ-nash", "--config", missing.to_str().unwrap()],
            None
        )),
        4
    );
}
