use std::path::Path;
use std::process::{Command, Output};

use sgrl_core::game::{appd_game1, random_game};

fn sgrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgrl"))
        .args(args)
        .env_remove("SGRL_THREADS")
        .output()
        .expect("spawn sgrl")
}

fn sgrl_out(args: &[&str], out: &Path) -> Output {
    let mut full: Vec<&str> = args.to_vec();
    full.push("--out");
    full.push(out.to_str().unwrap());
    sgrl(&full)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn check_svg(path: &Path) {
    let src = std::fs::read_to_string(path).unwrap();
    let doc = roxmltree::Document::parse(&src).expect("well-formed SVG");
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    let vb: Vec<f64> = root
        .attribute("viewBox")
        .expect("viewBox")
        .split_whitespace()
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(vb.len(), 4);
    assert!(vb[2] > 0.0 && vb[3] > 0.0);
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(
        &good,
        random_game(3, 2, 2, 0.2, 1).unwrap().to_json_string(),
    )
    .unwrap();
    let o = sgrl(&["validate", good.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    assert!(text(&o).contains("ok: true"));

    // Row mass above one at (s, a, b) = (0, 1, 0).
    let mut v: serde_json::Value =
        serde_json::from_str(&appd_game1().to_game().to_json_string()).unwrap();
    v["transitions"][0][1][0][0] = serde_json::json!(1.5);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, v.to_string()).unwrap();
    let o = sgrl(&["validate", "--game", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(text(&o).contains("violation at (0,1,0)"), "{}", text(&o));

    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{ not json").unwrap();
    assert_eq!(code(&sgrl(&["validate", junk.to_str().unwrap()])), 2);
    assert_eq!(code(&sgrl(&["validate", "/nonexistent/game.json"])), 2);

    // Dimension mismatch is malformed input, not a domain failure.
    let short = dir.path().join("short.json");
    std::fs::write(
        &short,
        r#"{"num_states":1,"num_actions_min":1,"num_actions_max":1,"transitions":[],"rewards":[[[0]]],"initial_dist":[1]}"#,
    )
    .unwrap();
    assert_eq!(code(&sgrl(&["validate", short.to_str().unwrap()])), 2);
}

#[test]
fn invalid_game_file_is_rejected_by_loaders() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero_stop.json");
    std::fs::write(
        &path,
        r#"{"num_states":1,"num_actions_min":1,"num_actions_max":1,"transitions":[[[[1.0]]]],"rewards":[[[0.5]]],"initial_dist":[1.0]}"#,
    )
    .unwrap();
    let o = sgrl_out(&["eg", "--game", path.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn prop_commands() {
    let o = sgrl(&["prop31"]);
    assert_eq!(code(&o), 0);
    assert!(text(&o).contains("concentrability: infinite (witness state 3)"));
    assert!(text(&o).contains("C_G = 1.888889"));

    let o = sgrl(&["prop51", "0.1", "0.3"]);
    assert_eq!(code(&o), 0);
    assert!(text(&o).contains("-7.1111111111"));
    // ε ≥ (1−s)/(2s).
    assert_eq!(code(&sgrl(&["prop51", "1.2", "0.3"])), 1);
    assert_eq!(code(&sgrl(&["prop51", "0.1", "1.5"])), 1);
    assert_eq!(code(&sgrl(&["prop51", "abc", "0.3"])), 2);
}

#[test]
fn flag_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["train"],
        &["train", "--preset", "appd1", "--game", "x.json"],
        &["train", "--preset", "appd1", "--rates", "theorem1"],
        &[
            "train",
            "--preset",
            "appd1",
            "--rates",
            "theorem1",
            "--epsilon",
            "0.1",
            "--eta-x",
            "1",
        ],
        &["train", "--preset", "appd1", "--eta-x", "-1"],
        &["train", "--preset", "appd1", "--log-every", "0"],
        &["eg", "--preset", "appd1", "--mode", "sampled"],
        &["mvi-grid", "--preset", "random"],
        &["mvi-grid", "--preset", "appd1", "--anchor", "2,0.5"],
        &["fig", "e"],
        &["bogus"],
    ];
    for args in cases {
        let o = sgrl_out(args, dir.path());
        assert_eq!(
            code(&o),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let o = Command::new(env!("CARGO_BIN_EXE_sgrl"))
        .args(["prop31"])
        .env("SGRL_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn infeasible_theorem_rates_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = sgrl_out(
        &[
            "train",
            "--preset",
            "prop31",
            "--rates",
            "theorem1",
            "--epsilon",
            "0.1",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    let o = sgrl_out(
        &[
            "train",
            "--preset",
            "prop31",
            "--rates",
            "theorem1",
            "--epsilon",
            "0.1",
            "--iters",
            "10",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    assert!(text(&o).contains("C_G = 1.888889"));
}

#[test]
fn train_writes_history_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let o = sgrl_out(
        &[
            "train",
            "--preset",
            "random",
            "--iters",
            "500",
            "--log-every",
            "100",
            "--dump-episodes",
            "5",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("train.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("iter,primal_gap,dual_gap,pd_gap,grad_norm_x,grad_norm_y,avg_primal_gap")
    );
    let iters: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(iters, ["0", "100", "200", "300", "400", "500"]);
    check_svg(&dir.path().join("train.svg"));

    let dump = std::fs::read_to_string(dir.path().join("trajectories.tsv")).unwrap();
    assert_eq!(dump.lines().count(), 5);
    for line in dump.lines() {
        for (t, step) in line.split('\t').enumerate() {
            let fields: Vec<&str> = step.split(',').collect();
            assert_eq!(fields.len(), 5);
            assert_eq!(fields[0], t.to_string());
        }
    }
}

#[test]
fn sign_grid_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = sgrl_out(
        &["mvi-grid", "--preset", "appd1", "--resolution", "21"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("mvi_grid.csv")).unwrap();
    let rows: Vec<Vec<i8>> = csv
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 21);
    assert!(rows.iter().all(|r| r.len() == 21));
    // Anchor at the equilibrium x = y = (0, 1): the x₁ = 0 column is nonnegative
    // and the corner z = ((1,0),(1,0)) is negative.
    assert!(rows.iter().all(|r| r[0] >= 0));
    assert_eq!(rows[20][20], -1);
    check_svg(&dir.path().join("mvi_grid.svg"));

    let o = sgrl_out(&["fig", "a", "--resolution", "31"], dir.path());
    assert_eq!(code(&o), 0);
    check_svg(&dir.path().join("fig_a.svg"));
}

#[test]
fn fig_b_plot() {
    let dir = tempfile::tempdir().unwrap();
    let o = sgrl_out(&["fig", "b", "--iters", "3000"], dir.path());
    assert_eq!(code(&o), 0, "{}", text(&o));
    check_svg(&dir.path().join("fig_b.svg"));
}

#[test]
fn random_suite_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = sgrl_out(
        &[
            "random-suite",
            "--count",
            "3",
            "--iters",
            "1000",
            "--kind",
            "multi",
            "--states",
            "3",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", text(&o));
    assert!(text(&o).contains("invariant checks passed: 18/18"));
    let csv = std::fs::read_to_string(dir.path().join("random_suite.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert_eq!(
        sgrl_out(&["random-suite", "--preset", "appd1"], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn sampled_training_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "train", "--preset", "appd2", "--mode", "sampled", "--seed", "42", "--iters", "2000",
    ];
    assert_eq!(code(&sgrl_out(&args, a.path())), 0);
    assert_eq!(code(&sgrl_out(&args, b.path())), 0);
    let ca = std::fs::read(a.path().join("train.csv")).unwrap();
    let cb = std::fs::read(b.path().join("train.csv")).unwrap();
    assert_eq!(ca, cb);
    let other = [
        "train", "--preset", "appd2", "--mode", "sampled", "--seed", "43", "--iters", "2000",
    ];
    assert_eq!(code(&sgrl_out(&other, b.path())), 0);
    assert_ne!(ca, std::fs::read(b.path().join("train.csv")).unwrap());
}
