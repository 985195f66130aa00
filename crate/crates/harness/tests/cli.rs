use rayq_core::linalg::io::{read_binary_all, read_text};
use rayq_core::problems::{ProblemFamily, ProblemSpec};
use std::path::Path;
use std::process::{Command, Output};

fn rayq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rayq")).args(args).env("RAYQ_THREADS", "2").output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn drop_wall_time(text: &str) -> String {
    text.lines().map(|l| {
        let mut cells: Vec<&str> = l.split(',').collect();
        cells.remove(2);
        cells.join(",")
    }).collect::<Vec<_>>().join("\n")
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&rayq(&[])), 1);
    assert_eq!(code(&rayq(&["run", "--bogus"])), 1);
    assert_eq!(code(&rayq(&["repro", "fig9"])), 1);
    assert_eq!(code(&rayq(&["repro", "fig2", "--scale", "huge"])), 1);
    assert_eq!(code(&rayq(&["run", "--dim", "5"])), 1);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&rayq(&["gen", "--family", "nope", "--dim", "5", "--out", p(dir.path())])), 1);
    assert_eq!(code(&rayq(&["gen", "--family", "gaussian", "--dim", "0", "--out", p(dir.path())])), 1);
    assert_eq!(code(&rayq(&["--help"])), 0);
}

#[test]
fn gen_writes_the_generated_pair() {
    let dir = tempfile::tempdir().unwrap();
    let expected = ProblemSpec::new(ProblemFamily::IllConditioned, 6, 4).with_q(2.0).generate().unwrap();

    let text = dir.path().join("text");
    assert_eq!(code(&rayq(&["gen", "--family", "ill-conditioned", "--dim", "6", "--q", "2", "--seed", "4", "--out", p(&text)])), 0);
    let read = |f: &str| read_text(std::io::BufReader::new(std::fs::File::open(text.join(f)).unwrap())).unwrap();
    assert_eq!(read("A.txt"), expected.a);
    assert_eq!(read("B.txt"), expected.b);

    let bin = dir.path().join("bin");
    assert_eq!(code(&rayq(&["gen", "--family", "ill-conditioned", "--dim", "6", "--q", "2", "--seed", "4", "--out", p(&bin), "--format", "binary"])), 0);
    let both = read_binary_all(std::fs::File::open(bin.join("pair.bin")).unwrap()).unwrap();
    assert_eq!(both, vec![expected.a, expected.b]);
}

#[test]
fn numerical_failure_exits_two_and_leaves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let res = rayq(&["run", "--family", "ill-conditioned", "--dim", "5", "--q", "400", "--trials", "2", "--iters", "10", "--out", p(&out)]);
    assert_eq!(code(&res), 2, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(!String::from_utf8_lossy(&res.stderr).is_empty());
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn io_and_schema_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(code(&rayq(&["ingest", p(&dir.path().join("missing.csv")), "--out", p(&out)])), 3);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "trial,k,t_wall_s,a,abs_b,tau,rqe,msqr,grad_norm\n0,0,0,1,,,x,,\n").unwrap();
    let res = rayq(&["ingest", p(&bad), "--out", p(&out)]);
    assert_eq!(code(&res), 3);
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("row 2") && err.contains("rqe"), "{err}");

    std::fs::write(&bad, "k,rqe\n0,1\n").unwrap();
    assert_eq!(code(&rayq(&["ingest", p(&bad), "--out", p(&out)])), 3);
}

#[test]
fn run_is_deterministic_and_reingests_to_the_same_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let res = rayq(&["run", "--family", "gaussian", "--dim", "8", "--trials", "4", "--iters", "200", "--solver", "szo:m=3", "--solver", "rga", "--seed", "11", "--out", p(&out)]);
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
        out
    };
    let (first, second) = (run("first"), run("second"));
    for f in ["szo-m3/traces.csv", "rga/traces.csv", "szo-m3/trials/trial_0003.csv"] {
        let read = |root: &Path| drop_wall_time(&std::fs::read_to_string(root.join(f)).unwrap());
        assert_eq!(read(&first), read(&second), "{f}");
    }
    assert!(first.join("rqe.svg").is_file() && first.join("summary.csv").is_file());

    let ingested = dir.path().join("ingested");
    let res = rayq(&["ingest", p(&first.join("szo-m3/traces.csv")), "--out", p(&ingested)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(std::fs::read(ingested.join("traces_aggregate.csv")).unwrap(), std::fs::read(first.join("szo-m3/aggregate.csv")).unwrap());
    assert!(ingested.join("rqe.svg").is_file());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    let out = dir.path().join("from-config");
    std::fs::write(
        &cfg,
        format!(r#"{{"problem": {{"family": "operator-norm", "dim": 6}}, "solvers": ["szo:m=2"], "trials": 2, "maxIters": 50, "output": "{}"}}"#, p(&out)),
    )
    .unwrap();
    let res = rayq(&["run", "--config", p(&cfg), "--iters", "20"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let traces = std::fs::read_to_string(out.join("szo-m2/traces.csv")).unwrap();
    let last_k: usize = traces.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(last_k <= 20);

    std::fs::write(&cfg, r#"{"problem": {"family": "gaussian", "dim": 6}, "unknown": 1}"#).unwrap();
    assert_eq!(code(&rayq(&["run", "--config", p(&cfg)])), 1);
}

#[test]
fn bench_prints_the_table() {
    let res = rayq(&["bench", "--dim", "8,12", "--m", "4", "--q", "1", "--trials", "2"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let text = String::from_utf8(res.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "d,m,q,median_s,iters_capped_count");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("8,4,1e0,"));
}
