use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = "3 2\n2 3\n1 2 2\n3 2\n1\n1 2\n1 2\n1 2 3\n2 3\n";

const BW8_ROWS: [[u8; 8]; 7] = [
    [1, 1, 1, 1, 1, 1, 1, 1],
    [1, 0, 1, 0, 1, 0, 1, 0],
    [1, 1, 0, 0, 1, 1, 0, 0],
    [1, 1, 1, 1, 0, 0, 0, 0],
    [1, 0, 0, 0, 1, 0, 0, 0],
    [1, 0, 1, 0, 0, 0, 0, 0],
    [1, 1, 0, 0, 0, 0, 0, 0],
];

const BW8_CULPRITS: &str = "1 1\n1 3\n1 5\n2 1\n3 1\n4 1\n4 4\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_neurolat"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env("RUST_LOG", "error").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

struct Dir(tempfile::TempDir);

impl Dir {
    fn new() -> Self {
        Dir(tempfile::tempdir().unwrap())
    }

    fn file(&self, name: &str, content: &str) -> String {
        let p = self.0.path().join(name);
        std::fs::write(&p, content).unwrap();
        p.to_string_lossy().into_owned()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }
}

fn bw8_alist() -> String {
    let h = neurolat::tanner::ParityCheckMatrix::from_dense(&BW8_ROWS).unwrap();
    neurolat::tanner::to_alist(&h)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn analyze_small_matrix() {
    let d = Dir::new();
    let a = d.file("h.alist", SMALL);
    let o = run(&["analyze", "--alist", &a]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("E=5 girth=4 cycles4=1 culprits=1"), "{}", stdout(&o));
}

#[test]
fn analyze_cycle_free_matrix() {
    let d = Dir::new();
    let a = d.file("h.alist", "3 1\n1 3\n1 1 1\n3\n1\n1\n1\n1 2 3\n");
    let o = run(&["analyze", "--alist", &a]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("girth=inf cycles4=0 culprits=0"), "{out}");
}

#[test]
fn analyze_bw8_with_culprit_file() {
    let d = Dir::new();
    let a = d.file("bw8.alist", &bw8_alist());
    let c = d.file("c.txt", BW8_CULPRITS);
    let o = run(&["analyze", "--alist", &a, "--culprits-file", &c, "--edge-cycles"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("n=8 m=7 rank=7 k=1 E=26"), "{out}");
    assert!(out.contains("culprits=7"));
    assert!(out.contains("params=33"));
    assert!(out.contains("check,var,cycles4"));
}

#[test]
fn analyze_rejects_bad_alist() {
    let d = Dir::new();
    let a = d.file("bad.alist", "3 2\n2 3\n1 2\n");
    let o = run(&["analyze", "--alist", &a]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["analyze"]).status.code(), Some(1));
    assert_eq!(run(&["analyze", "--alist", "x", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn train_writes_33_weights_and_is_reproducible() {
    let d = Dir::new();
    let a = d.file("bw8.alist", &bw8_alist());
    let c = d.file("c.txt", BW8_CULPRITS);
    let mut files = Vec::new();
    for _ in 0..2 {
        let out = d.path("w1.txt");
        let o = run(&[
            "train", "--alist", &a, "--culprits-file", &c, "--alpha", "0.1", "--beta", "0.01", "--vnr", "1",
            "--vnr-unit", "linear", "--iters", "4", "--max-steps", "40", "--seed", "3", "--out", p(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        files.push(std::fs::read_to_string(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = &files[0];
    assert!(text.starts_with("neurolat-weights v1\n"));
    let n_weights = text.lines().filter(|l| l.starts_with("w ") || l.starts_with("wp ")).count();
    assert_eq!(n_weights, 33);
    let history = std::fs::read_to_string(d.path("w1.txt.history.csv")).unwrap();
    assert!(history.starts_with("step,mean_loss\n1,"));
}

#[test]
fn train_with_zero_steps_keeps_initial_weights() {
    let d = Dir::new();
    let a = d.file("h.alist", SMALL);
    let out = d.path("w.txt");
    let o = run(&[
        "train", "--alist", &a, "--vnr", "0", "--vnr-unit", "db", "--max-steps", "0", "--init", "constant",
        "--init-mean", "0.5", "--out", p(&out),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().filter(|l| l.starts_with('w')).all(|l| l.ends_with(" 0.5")));
    let history = std::fs::read_to_string(d.path("w.txt.history.csv")).unwrap();
    assert_eq!(history.lines().next(), Some("step,mean_loss"));
    assert!(!history.lines().any(|l| l.starts_with('1')));
}

#[test]
fn train_rejects_bad_flags() {
    let d = Dir::new();
    let a = d.file("h.alist", SMALL);
    let o = run(&["train", "--alist", &a, "--vnr", "1", "--vnr-unit", "linear", "--alpha", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["train", "--alist", &a, "--vnr", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn decode_example_gradients() {
    let d = Dir::new();
    let a = d.file("h.alist", SMALL);
    let w = d.file(
        "w.txt",
        &format!(
            "neurolat-weights v1\nmatrix_digest {}\nL 2\nw 2 2 0.1\nwp 1 1 0.15\nwp 1 2 0.16\nwp 1 3 0.17\nwp 2 2 0.18\nwp 2 3 0.19\n",
            neurolat::tanner::parse_alist(SMALL).unwrap().digest()
        ),
    );
    let y = d.file("y.txt", "-0.5 2.5 -4\n");
    let o = run(&["decode", "--alist", &a, "--weights", &w, "--mode", "llr", &y, "--dump-gradients"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let line = out.lines().find(|l| l.starts_with("grad w 2 2 ")).unwrap();
    let g: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!((g - 0.0330983).abs() < 1e-6, "{g}");
    assert!(out.contains("loss[1]=") && out.contains("loss[2]="));
}

#[test]
fn decode_noiseless_lattice_point() {
    let d = Dir::new();
    let a = d.file("bw8.alist", &bw8_alist());
    let y = d.file("y.txt", "-1 -1 -1 -1 -1 -1 -1 -1\n");
    let o = run(&["decode", "--alist", &a, "--unit-weights", "--sigma", "0.3", &y]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("x_hat=-1 -1 -1 -1 -1 -1 -1 -1"), "{out}");
    assert!(out.contains("iterations_used=1 converged=true"));
}

#[test]
fn decode_reference_gives_finite_losses() {
    let d = Dir::new();
    let a = d.file("bw8.alist", &bw8_alist());
    let y = d.file("y.txt", "0.3, -1.7, 2.2, 0.1, -0.4, 1.9, -2.5, 0.8\n");
    let o = run(&["decode", "--alist", &a, "--unit-weights", "--vnr", "1", "--vnr-unit", "linear", "--reference", "0", &y]);
    assert!(o.status.success());
    let out = stdout(&o);
    let losses: Vec<f64> = out
        .lines()
        .filter_map(|l| l.strip_prefix("loss[").and_then(|r| r.split('=').nth(1)))
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(!losses.is_empty() && losses.iter().all(|l| l.is_finite()));
}

#[test]
fn decode_length_mismatch_fails() {
    let d = Dir::new();
    let a = d.file("h.alist", SMALL);
    let y = d.file("y.txt", "1 2\n");
    let o = run(&["decode", "--alist", &a, "--unit-weights", "--mode", "llr", &y]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_high_vnr_and_digest_mismatch() {
    let d = Dir::new();
    let a = d.file("bw8.alist", &bw8_alist());
    let out = d.path("r.csv");
    let o = run(&[
        "simulate", "--alist", &a, "--unit-weights", "--mode", "lattice", "--vnr", "100", "--vnr-unit", "linear",
        "--trials", "300", "--out", p(&out),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("vnr_db,sigma,trials,bit_errors,word_errors,ber,wer,ci95"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!((row[0], row[2], row[3], row[5]), ("20", "300", "0", "0"));

    let small = d.file("h.alist", SMALL);
    let w = d.path("w.txt");
    assert!(run(&["train", "--alist", &small, "--vnr", "0", "--vnr-unit", "db", "--max-steps", "0", "--out", p(&w)])
        .status
        .success());
    let o = run(&["simulate", "--alist", &a, "--weights", p(&w), "--vnr", "1", "--vnr-unit", "linear"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("digest"));
}

#[test]
fn simulate_modes_are_deterministic() {
    let d = Dir::new();
    let a = d.file("bw8.alist", &bw8_alist());
    let args = [
        "simulate", "--alist", &a, "--unit-weights", "--mode", "code", "--vnr", "0,2", "--vnr-unit", "db",
        "--trials", "500", "--seed", "4",
    ];
    let x = run(&args);
    let y = run(&args);
    assert!(x.status.success());
    assert_eq!(x.stdout, y.stdout);
    for mode in ["initial", "updated"] {
        let o = run(&[
            "simulate", "--alist", &a, "--unit-weights", "--llr-mode", mode, "--sigma", "0.8", "--trials", "200",
        ]);
        assert!(o.status.success());
    }
}

#[test]
fn generate_writes_regular_alist() {
    let o = run(&["generate", "--rows", "10", "--cols", "15", "--col-weight", "4", "--seed", "1"]);
    assert!(o.status.success());
    let h = neurolat::tanner::parse_alist(&stdout(&o)).unwrap();
    assert!(h.row_degrees().iter().all(|&d| d == 6));
    assert_eq!(run(&["generate", "--rows", "10", "--cols", "15", "--col-weight", "3"]).status.code(), Some(1));
}
