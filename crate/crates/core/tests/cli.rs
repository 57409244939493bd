use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use levelreg::cli::run;
use levelreg::io::{parse_column, read_signal};
use levelreg::prox::prox;
use levelreg::{ProxEngine, SetFunction};

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn levelreg(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("levelreg").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

/// The output directory printed on the last stdout line.
fn out_dir(o: &Outcome) -> PathBuf {
    assert_eq!(o.code, 0, "stderr: {}", o.stderr);
    PathBuf::from(o.stdout.lines().last().unwrap())
}

#[test]
fn prox_of_two_point_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let z = write(tmp.path(), "z.csv", "1\n0\n");
    let out = tmp.path().join("out");
    let o = levelreg(&[
        "prox",
        "--family",
        "chain-tv",
        "--signal",
        &z,
        "--lambda",
        "0.25",
        "--out",
        out.to_str().unwrap(),
    ]);
    let dir = out_dir(&o);
    assert!(dir.starts_with(&out));
    assert_eq!(read_signal(&dir.join("w.csv")).unwrap(), vec![0.75, 0.25]);
    let lattice = fs::read_to_string(dir.join("lattice.csv")).unwrap();
    assert_eq!(lattice, "block,element,value\n1,1,0.75\n2,2,0.25\n");
}

#[test]
fn eval_of_constant_point_prints_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let h = write(tmp.path(), "h.csv", "0\n1\n1.5\n1\n0\n");
    let w = write(tmp.path(), "w.csv", "2\n2\n2\n2\n");
    let o = levelreg(&[
        "eval",
        "--family",
        "cardinality",
        "--profile",
        &h,
        "--w",
        &w,
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let mut lines = o.stdout.lines();
    assert_eq!(lines.next(), Some("0"));
    assert!(lines.next().unwrap().starts_with("dual: "));
}

#[test]
fn path_of_two_point_chain_has_one_breakpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let z = write(tmp.path(), "z.csv", "1\n0\n");
    let out = tmp.path().join("out");
    let o = levelreg(&[
        "path",
        "--family",
        "chain-tv",
        "--signal",
        &z,
        "--out",
        out.to_str().unwrap(),
    ]);
    let dir = out_dir(&o);
    assert_eq!(
        fs::read_to_string(dir.join("breakpoints.csv")).unwrap(),
        "lambda\n0.5\n"
    );
    assert_eq!(
        fs::read_to_string(dir.join("merges.csv")).unwrap(),
        "lambda,upper,lower,merged\n0.5,1,2,3\n"
    );
}

#[test]
fn composed_prox_shrinks_towards_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let z = write(tmp.path(), "z.csv", "1\n0\n");
    let out = tmp.path().join("out");
    let o = levelreg(&[
        "prox",
        "--family",
        "chain-tv",
        "--signal",
        &z,
        "--lambda",
        "0.25",
        "--lambda-l1",
        "0.3",
        "--out",
        out.to_str().unwrap(),
    ]);
    let w = read_signal(&out_dir(&o).join("w.csv")).unwrap();
    assert!((w[0] - 0.45).abs() <= 1e-12 && w[1] == 0.0, "{w:?}");
}

#[test]
fn outputs_are_deterministic_and_named_by_content() {
    let tmp = tempfile::tempdir().unwrap();
    let z = write(tmp.path(), "z.csv", "0.3\n-1.2\n2.5\n0.7\n0.1\n");
    let run_in = |sub: &str, extra: &[&str]| {
        let out = tmp.path().join(sub);
        let mut args = vec![
            "prox",
            "--family",
            "clustering",
            "--signal",
            &z,
            "--lambda",
            "0.1",
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        out_dir(&levelreg(&args))
    };
    let a = run_in("a", &[]);
    let b = run_in("b", &[]);
    assert_eq!(a.file_name(), b.file_name());
    for f in ["w.csv", "lattice.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let c = run_in("a", &["--engine", "min-norm"]);
    assert_ne!(a.file_name(), c.file_name());

    let rec = |sub: &str| {
        let out = tmp.path().join(sub);
        let o = levelreg(&[
            "recover",
            "--sizes",
            "5,5",
            "--values",
            "1,0",
            "--sigmas",
            "0.1,0.3",
            "--trials",
            "50",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        fs::read(out_dir(&o).join("recover.csv")).unwrap()
    };
    assert_eq!(rec("r1"), rec("r2"));
}

#[test]
fn solve_trace_is_deterministic_apart_from_wall_time() {
    let tmp = tempfile::tempdir().unwrap();
    let z = write(tmp.path(), "z.csv", "1\n0.8\n-0.2\n0.1\n");
    let trace = |sub: &str, method: &str| {
        let out = tmp.path().join(sub);
        let o = levelreg(&[
            "solve",
            "--family",
            "chain-tv",
            "--signal",
            &z,
            "--lambda",
            "0.2",
            "--method",
            method,
            "--max-iters",
            "40",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.stdout.starts_with("objective: "));
        let text = fs::read_to_string(out_dir(&o).join("trace.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("iter,objective,gap,wall_time_ms"));
        lines
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    for method in ["fista", "ista", "subgradient"] {
        let a = trace(&format!("{method}1"), method);
        assert!(!a.is_empty());
        assert_eq!(a, trace(&format!("{method}2"), method));
    }
}

#[test]
fn written_columns_parse_back_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let vals = [0.1, 1.0 / 3.0, -2.5e-7, 12345.678];
    let text: String = vals.iter().map(|v| format!("{v}\n")).collect();
    let z = write(tmp.path(), "z.csv", &text);
    assert_eq!(read_signal(Path::new(&z)).unwrap(), vals);
    let out = tmp.path().join("out");
    let o = levelreg(&[
        "prox",
        "--family",
        "chain-tv",
        "--signal",
        &z,
        "--lambda",
        "0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    let w_path = out_dir(&o).join("w.csv");
    let parsed = parse_column(&w_path, &fs::read_to_string(&w_path).unwrap()).unwrap();
    let f = SetFunction::chain_tv(vals.len()).unwrap();
    let expect = prox(&f, &vals, 0.1, ProxEngine::Auto).unwrap().w;
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&parsed), bits(&expect));
}

#[test]
fn failures_report_and_leave_no_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let bad = write(tmp.path(), "bad.csv", "1\nabc\n");
    let o = levelreg(&[
        "prox",
        "--family",
        "chain-tv",
        "--signal",
        &bad,
        "--lambda",
        "0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.starts_with("error: "), "{}", o.stderr);
    assert!(!out.exists() || fs::read_dir(&out).unwrap().next().is_none());

    let z = write(tmp.path(), "z.csv", "1\n0\n");
    for args in [
        vec!["prox", "--family", "chain-tv", "--signal", &z],
        vec!["prox", "--family", "nope", "--signal", &z, "--lambda", "1"],
        vec![
            "prox", "--family", "chain-tv", "--signal", &z, "--lambda", "-1",
        ],
        vec![
            "prox", "--family", "chain-tv", "--signal", &z, "--lambda", "1", "--engine", "fast",
        ],
        vec!["eval", "--family", "clustering"],
        vec!["frobnicate"],
    ] {
        let o = levelreg(&args);
        assert_eq!(o.code, 1, "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(levelreg(&["--version"]).code, 0);
}

#[test]
fn uncertifiable_path_exits_with_numerical_code() {
    // Elements 1 and 2 start tied, but the heavy edge to element 0 pulls element 1
    // away from element 2, so the block has to split.
    let tmp = tempfile::tempdir().unwrap();
    let weights = write(tmp.path(), "wts.csv", "1\n0.2\n");
    let z = write(tmp.path(), "z.csv", "-2\n0\n0\n");
    let out = tmp.path().join("out");
    let args = [
        "path",
        "--family",
        "chain-tv",
        "--weights",
        &weights,
        "--signal",
        &z,
        "--out",
        out.to_str().unwrap(),
    ];
    let o = levelreg(&args);
    assert_eq!(o.code, 2, "{}", o.stderr);
    assert!(o.stderr.contains("certification failed"));
    assert!(!out.exists() || fs::read_dir(&out).unwrap().next().is_none());
    let mut unchecked = args.to_vec();
    unchecked.push("--no-certify");
    assert_eq!(levelreg(&unchecked).code, 0);
}

#[test]
fn binary_exit_status_matches_run() {
    let bin = env!("CARGO_BIN_EXE_levelreg");
    let status = Command::new(bin).arg("frobnicate").output().unwrap();
    assert_eq!(status.status.code(), Some(1));
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert!(help.status.success());
    let text = String::from_utf8(help.stdout).unwrap();
    for cmd in ["eval", "prox", "solve", "path", "recover", "bench"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}
