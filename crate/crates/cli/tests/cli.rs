use std::path::Path;
use std::process::{Command, Output};

use sumrd::{EmbeddingSet, Instance, RDCurve};

fn sumrd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sumrd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn example1_reports_one_shot_points_and_passes_checks() {
    let out = sumrd(&["example1", "--check"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let log = stderr(&out);
    assert!(log.contains("D = 1.5, R = 0.25"));
    assert!(log.contains("D = 0, R = 0.5625"));
    assert!(log.contains("D = 0.75, R = 0.375"));
    assert!(log.contains("D_max = 1.5, minimizing summary \"0\""));
    let curve = RDCurve::read_csv(out.stdout.as_slice()).unwrap();
    assert!(curve.rate_at(1.5).unwrap() <= 1e-6);
}

#[test]
fn example1_check_fails_on_a_truncated_sweep() {
    // two slopes cannot reach zero rate at D_max
    let out = sumrd(&["example1", "--check", "--beta-grid=-50,-20"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let a = sumrd(&["example1", "--format", "json"]);
    let b = sumrd(&["example1", "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
}

#[test]
fn rd_discrete_writes_the_curve_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("example1.json");
    std::fs::write(&inst, Instance::example1().to_json().unwrap()).unwrap();
    let out_file = dir.path().join("curve.csv");
    let out = sumrd(&[
        "rd-discrete",
        "--instance",
        path(&inst),
        "--out",
        path(&out_file),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("D_max = 1.5"));
    let curve = RDCurve::load(&out_file).unwrap();
    assert_eq!(curve.len(), 40);
    assert!((curve.points()[0].rate - 0.5).abs() < 1e-3);
}

#[test]
fn rd_discrete_constant_distortion_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("flat.json");
    std::fs::write(
        &inst,
        r#"{"alphabet_size": 2, "texts": ["01", "10"], "pmf": [0.5, 0.5],
            "summaries": ["0", "1"], "distortion": [[1, 1], [2, 2]]}"#,
    )
    .unwrap();
    let out = sumrd(&["rd-discrete", "--instance", path(&inst)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stderr(&out).trim(), "R_S ≡ 0 (D_max = 1.5)");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(
        sumrd(&["example1", "--beta-grid", ""]).status.code(),
        Some(2)
    );
    assert_eq!(
        sumrd(&["example1", "--beta-grid", "0.5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        sumrd(&["rd-discrete", "--instance", "/no/such/file"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        sumrd(&["rd-gaussian", "--spectrum", "/no/such/file"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(sumrd(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn non_convergence_exits_with_three() {
    let out = sumrd(&["example1", "--max-iters", "1", "--beta-grid=-2,-3"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn rd_gaussian_from_spectrum_file() {
    let dir = tempfile::tempdir().unwrap();
    let spectrum = dir.path().join("s.json");
    std::fs::write(
        &spectrum,
        r#"{"mean_length": 1, "log_base": 2, "bins": [{"weight": 1, "eigenvalues": [4, 1]}]}"#,
    )
    .unwrap();
    let out = sumrd(&[
        "rd-gaussian",
        "--spectrum",
        path(&spectrum),
        "--distortion-grid",
        "2,5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let curve = RDCurve::read_csv(out.stdout.as_slice()).unwrap();
    assert!((curve.points()[0].rate - 1.0).abs() < 1e-9);
    assert_eq!(curve.points()[1].rate, 0.0);
}

fn offset_sets() -> (EmbeddingSet, EmbeddingSet) {
    let texts = EmbeddingSet::new(
        vec![10, 10, 20],
        &[vec![1.0, 0.0], vec![0.0, 2.0], vec![-1.0, -1.0]],
    )
    .unwrap();
    let sums = EmbeddingSet::new(
        vec![5, 5, 4],
        &[vec![1.5, 0.0], vec![0.0, 1.0], vec![-1.0, 1.0]],
    )
    .unwrap();
    (texts, sums)
}

#[test]
fn rd_gaussian_from_srde_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("e.srde");
    let (texts, _) = offset_sets();
    sumrd::write_embeddings(&texts, &file).unwrap();
    let out_file = dir.path().join("curve.json");
    let out = sumrd(&[
        "rd-gaussian",
        "--embeddings",
        path(&file),
        "--min-bin",
        "2",
        "--out",
        path(&out_file),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let curve = RDCurve::load(&out_file).unwrap();
    assert_eq!(curve.len(), 50);
    assert_eq!(curve.points()[49].rate, 0.0);
}

#[test]
fn eval_identical_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("e.srde");
    sumrd::write_embeddings(&offset_sets().0, &file).unwrap();
    let out = sumrd(&[
        "eval",
        "--embeddings",
        path(&file),
        "--summaries",
        path(&file),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["distortion"], 0.0);
    assert_eq!(v["rate"], 1.0);
    assert_eq!(v["violations"], 0);
}

#[test]
fn eval_offset_pairs_and_gap() {
    let dir = tempfile::tempdir().unwrap();
    let (texts, sums) = offset_sets();
    let (t, s) = (dir.path().join("t.srde"), dir.path().join("s.srde"));
    sumrd::write_embeddings(&texts, &t).unwrap();
    sumrd::write_embeddings(&sums, &s).unwrap();
    let curve = dir.path().join("c.csv");
    std::fs::write(
        &curve,
        "beta,distortion,rate,log_base\n,0.0,1.0,2.0\n,2.0,0.0,2.0\n",
    )
    .unwrap();
    let out = sumrd(&[
        "eval",
        "--embeddings",
        path(&t),
        "--summaries",
        path(&s),
        "--curve",
        path(&curve),
        "--min-bin",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // squared offsets 0.25, 1 and 4
    assert!((v["distortion"].as_f64().unwrap() - 5.25 / 3.0).abs() < 1e-12);
    assert_eq!(v["rate"], 0.5);
    assert!(stderr(&out).contains("bound gap"));
}

#[test]
fn eval_dimension_mismatch_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let (t, s) = (dir.path().join("t.srde"), dir.path().join("s.srde"));
    sumrd::write_embeddings(&offset_sets().0, &t).unwrap();
    let narrow = EmbeddingSet::new(vec![1, 1, 1], &vec![vec![0.0]; 3]).unwrap();
    sumrd::write_embeddings(&narrow, &s).unwrap();
    let out = sumrd(&["eval", "--embeddings", path(&t), "--summaries", path(&s)]);
    assert_eq!(out.status.code(), Some(2));
}
