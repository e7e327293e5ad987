use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sparsebound"));
    c.env_remove("SPARSEBOUND_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn records(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn ccrb_on_identity_without_perturbation() {
    let o =
        run(&["bounds", "ccrb", "--n", "5", "--s", "2", "--sigma-e", "0", "--sigma-n", "0.3", "--x", "0,1.5,0,-2,0"]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = records(&stdout(&o));
    assert_eq!(h, ["bound", "first_term", "correction", "gamma", "regime"]);
    let bound: f64 = rows[0][0].parse().unwrap();
    assert!((bound - 2.0 * 0.09).abs() < 1e-15);
    assert_eq!(rows[0][4], "maximal");
}

#[test]
fn hcrb_rejects_non_identity_matrix() {
    let o = run(&[
        "bounds",
        "hcrb",
        "--matrix",
        "gaussian",
        "--n",
        "6",
        "--m",
        "4",
        "--s",
        "1",
        "--sigma-e",
        "0.1",
        "--sigma-n",
        "0.1",
        "--x",
        "1,0,0,0,0,0",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("closed-form HCRB requires identity matrix"));
}

#[test]
fn hcrb_correction_is_d_hcrb_times_sigma_x2() {
    let o = run(&[
        "bounds",
        "hcrb",
        "--n",
        "10",
        "--s",
        "1",
        "--sigma-e",
        "0.01",
        "--sigma-n",
        "0.1",
        "--x",
        "1,0,0,0,0,0,0,0,0,0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = records(&stdout(&o));
    let correction: f64 = rows[0][col(&h, "correction")].parse().unwrap();
    let model = sparsebound::ProblemModel::identity(10, 0.01, 0.1, 1).unwrap();
    let x = sparsebound::SparseSignal::from_parts(10, &[0], &[1.0]).unwrap();
    let sx2 = sparsebound::model::sigma_x_squared(&model, &x).unwrap();
    let expected = sparsebound::hcrb::d_hcrb(&model, &x).unwrap() * sx2;
    assert!((correction - expected).abs() <= 1e-14 * expected.abs().max(1e-300), "{correction} vs {expected}");
}

#[test]
fn exit_codes() {
    // usage
    assert_eq!(run(&["bounds", "ccrb", "--n", "3"]).status.code(), Some(2));
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["figure", "fig99"]).status.code(), Some(2));
    // math: singular Fisher information at x = 0 with σ_n = 0
    let o = run(&["bounds", "ccrb", "--n", "3", "--s", "1", "--sigma-e", "0.5", "--sigma-n", "0", "--x", "0,0,0"]);
    assert_eq!(o.status.code(), Some(3));
    // I/O
    let o = run(&["bounds", "ccrb", "--config", "/nonexistent/cfg.txt"]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(&[
        "bounds",
        "ccrb",
        "--n",
        "2",
        "--m",
        "2",
        "--s",
        "1",
        "--sigma-e",
        "0.1",
        "--sigma-n",
        "0.1",
        "--x",
        "1,0",
        "--matrix",
        "/nonexistent.csv",
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn json_output() {
    let o = run(&[
        "bounds",
        "ccrb",
        "--n",
        "3",
        "--s",
        "1",
        "--sigma-e",
        "0.1",
        "--sigma-n",
        "0.2",
        "--x",
        "1,0,0",
        "--json",
    ]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["regime"], "maximal");
    assert!(v["bound"].as_f64().unwrap() > 0.0);
}

#[test]
fn matrix_and_signal_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    std::fs::write(&a, "1,0,0\n0,2,0\n0,0,1\n").unwrap();
    let x = dir.path().join("x.txt");
    std::fs::write(&x, "0\n1\n0\n").unwrap();
    let o = run(&[
        "bounds",
        "ccrb",
        "--n",
        "3",
        "--m",
        "3",
        "--s",
        "1",
        "--sigma-e",
        "0",
        "--sigma-n",
        "1",
        "--x",
        x.to_str().unwrap(),
        "--matrix",
        a.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = records(&stdout(&o));
    let bound: f64 = rows[0][0].parse().unwrap();
    assert!((bound - 0.25).abs() < 1e-15);
}

fn figure_csv(dir: &Path, id: &str, extra: &[&str]) -> String {
    let mut args = vec!["figure", id, "--out-dir", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::read_to_string(dir.join(format!("{id}.csv"))).unwrap()
}

#[test]
fn figure_schema_and_determinism() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let args = ["--seed", "11", "--trials", "300", "--grid-points", "4", "--sigma-e-values", "0.1"];
    let a = figure_csv(d1.path(), "fig-estimators", &args);
    let b = figure_csv(d2.path(), "fig-estimators", &args);
    assert_eq!(a, b);
    let (h, rows) = records(&a);
    assert_eq!(h, ["x_value", "curve_id", "value", "std_error"]);
    assert!(!rows.is_empty());
    for r in &rows {
        let _: f64 = r[0].parse().unwrap();
        let _: f64 = r[2].parse().unwrap();
        // f64 round trip through 17 significant digits
        let v: f64 = r[2].parse().unwrap();
        assert_eq!(format!("{v:.16e}"), r[2]);
    }
}

#[test]
fn fig3_passes_through_transition_points() {
    let dir = tempfile::tempdir().unwrap();
    let text = figure_csv(dir.path(), "fig3", &["--grid-points", "9"]);
    let (_, rows) = records(&text);
    let mut hits = 0;
    for cn_db in [f64::NEG_INFINITY, -10.0, 0.0, 10.0] {
        let cn = 10f64.powf(cn_db / 10.0);
        let ce_t = sparsebound::ccrb::transition_ce(cn);
        let label = if cn_db.is_finite() { format!("{cn_db}") } else { "-inf".into() };
        let id = format!("approx:cn={label}dB");
        for r in rows.iter().filter(|r| r[1] == id) {
            let x: f64 = r[0].parse().unwrap();
            if (x - ce_t).abs() <= 1e-15 * ce_t {
                let v: f64 = r[2].parse().unwrap();
                assert!((v - 0.05).abs() < 1e-12, "{r:?}");
                hits += 1;
            }
        }
    }
    assert_eq!(hits, 4);
}

#[test]
fn config_file_and_env_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# fig7 settings\ngrid_points = 3\nsigma-e-values = 0.1\nseed = 4\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["figure", "fig7", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = records(&std::fs::read_to_string(out.join("fig7.csv")).unwrap());
    assert_eq!(rows.len(), 3);
    // flag beats file
    let o = run(&[
        "figure",
        "fig7",
        "--config",
        cfg.to_str().unwrap(),
        "--grid-points",
        "5",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = records(&std::fs::read_to_string(out.join("fig7.csv")).unwrap());
    assert_eq!(rows.len(), 5);

    // the environment seed replaces the built-in default
    let sim = |env: Option<&str>| {
        let mut c = bin();
        c.args([
            "simulate",
            "--n",
            "3",
            "--s",
            "1",
            "--sigma-e",
            "0.1",
            "--x",
            "1,0,0",
            "--grid",
            "0.1",
            "--estimators",
            "ml",
            "--trials",
            "200",
        ]);
        if let Some(e) = env {
            c.env("SPARSEBOUND_SEED", e);
        }
        stdout(&c.output().unwrap())
    };
    assert_eq!(sim(Some("1")), sim(None));
    assert_ne!(sim(Some("2")), sim(None));
}

#[test]
fn simulate_oracle_gap_and_bias_flags() {
    let o = run(&[
        "simulate",
        "--n",
        "5",
        "--s",
        "1",
        "--sigma-e",
        "0.1",
        "--x",
        "1,0,0,0,0",
        "--grid",
        "0.1,5",
        "--estimators",
        "oracle,ml,locally_unbiased",
        "--trials",
        "100000",
        "--seed",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = records(&stdout(&o));
    let (est, gap, biased) = (col(&h, "estimator"), col(&h, "relative_gap"), col(&h, "biased_regime"));
    for r in rows.iter().filter(|r| r[est] == "oracle") {
        let g: f64 = r[gap].parse().unwrap();
        assert!(g.abs() < 0.01, "{r:?}");
    }
    assert!(rows.iter().any(|r| r[est] == "ml" && r[biased] == "true"));
    assert!(rows.iter().filter(|r| r[est] == "locally_unbiased").all(|r| r[biased] == "false"));
}

#[test]
fn simulate_seed_changes_only_monte_carlo_columns() {
    let sim = |seed: &str| {
        let o = run(&[
            "simulate",
            "--n",
            "4",
            "--s",
            "1",
            "--sigma-e",
            "0.2",
            "--x",
            "0,1,0,0",
            "--grid",
            "0.1,1",
            "--estimators",
            "ml",
            "--trials",
            "500",
            "--seed",
            seed,
        ]);
        records(&stdout(&o))
    };
    let (h, a) = sim("1");
    let (_, b) = sim("2");
    let (mse, ccrb, hcrb) = (col(&h, "mse"), col(&h, "ccrb"), col(&h, "hcrb"));
    for (ra, rb) in a.iter().zip(&b) {
        assert_eq!(ra[ccrb], rb[ccrb]);
        assert_eq!(ra[hcrb], rb[hcrb]);
        assert_ne!(ra[mse], rb[mse]);
    }
}

#[test]
fn bounds_only_simulation() {
    let o = run(&[
        "simulate",
        "--n",
        "4",
        "--s",
        "1",
        "--sigma-e",
        "0.2",
        "--x",
        "0,1,0,0",
        "--grid",
        "0.1,1",
        "--estimators",
        "",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = records(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[col(&h, "mse")].is_empty() && !r[col(&h, "ccrb")].is_empty()));
}
