use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hybrid_cis::synthesis::{SynthesisSolution, SynthesisStatus};
use hybrid_cis::verify::SupportFunctionModel;
use nalgebra::DVector;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybrid-cis"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn solve(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["solve", "--config", config.to_str().unwrap(), "--output-dir", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn load(out: &Path) -> SynthesisSolution {
    serde_json::from_str(&std::fs::read_to_string(out.join("solution.json")).unwrap()).unwrap()
}

/// Writes a variant of the bundled example config with `edit` applied.
fn variant(dir: &Path, edit: impl FnOnce(&mut serde_json::Value)) -> PathBuf {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(data("example.json")).unwrap()).unwrap();
    v["system"] = serde_json::Value::String(data("double_integrator.json").to_str().unwrap().into());
    v["reference_set"] = serde_json::Value::String(data("maximal_set.json").to_str().unwrap().into());
    edit(&mut v);
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

struct Csv {
    rows: Vec<(String, f64, f64, f64)>,
}

impl Csv {
    fn read(path: &Path) -> Csv {
        let text = std::fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("curve_id,theta,x,y"));
        let rows = lines
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (f[0].to_string(), f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap())
            })
            .collect();
        Csv { rows }
    }

    fn curve(&self, id: &str) -> Vec<(f64, f64, f64)> {
        self.rows.iter().filter(|r| r.0 == id).map(|r| (r.1, r.2, r.3)).collect()
    }
}

fn lifted(model: &SupportFunctionModel, theta: f64) -> DVector<f64> {
    let mut y = DVector::zeros(model.dim());
    y[0] = theta.cos();
    y[1] = theta.sin();
    y
}

#[test]
fn solve_example_ellipsoid() {
    let dir = tempfile::tempdir().unwrap();
    let out = solve(&data("example.json"), dir.path(), &["--dirs", "2000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let sol = load(dir.path());
    assert_eq!(sol.status, SynthesisStatus::Verified);
    assert!((sol.gamma.unwrap() - 0.894).abs() < 0.005);
    for f in ["verification.json", "fingerprint.txt", "plot.csv", "plot.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn wide_objective_polytope_gives_gamma_0_8() {
    let dir = tempfile::tempdir().unwrap();
    let out = solve(&data("example_wide_d.json"), dir.path(), &["--dirs", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((load(dir.path()).gamma.unwrap() - 0.8).abs() < 1e-4);
}

#[test]
fn missing_degree_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = variant(dir.path(), |v| v["template"] = serde_json::json!({"kind": "polyset"}));
    let out = solve(&cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degree"));
}

#[test]
fn unreadable_system_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = variant(dir.path(), |v| v["system"] = "does-not-exist.json".into());
    assert_eq!(solve(&cfg, dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn degenerate_box_exits_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let mut sys: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data("double_integrator.json")).unwrap()).unwrap();
    sys["nodes"][0]["safe"] = serde_json::json!([[0.0, 0.0], [0.0, 0.0]]);
    let sys_path = dir.path().join("system.json");
    std::fs::write(&sys_path, sys.to_string()).unwrap();
    let cfg = variant(dir.path(), |v| v["system"] = sys_path.to_str().unwrap().into());
    assert_eq!(solve(&cfg, dir.path(), &[]).status.code(), Some(3));
}

#[test]
fn bad_solver_option_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = solve(&data("example.json"), dir.path(), &["--solver-opt", "nope=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ellipsoid_plot_is_a_closed_convex_curve_around_gamma_d() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(solve(&data("example.json"), dir.path(), &["--dirs", "1000"]).status.code(), Some(0));
    let sol = load(dir.path());
    let model = sol.model("q").unwrap();
    let csv = Csv::read(&dir.path().join("plot.csv"));
    let primal = csv.curve("primal");
    assert_eq!(primal.len(), 720);
    for &(_, x, y) in &primal {
        assert!(x.abs() <= 1.0 + 1e-6 && y.abs() <= 1.0 + 1e-6);
    }
    // Every gamma*D vertex lies on the inner side of every primal edge.
    let gd = csv.curve("gamma-d");
    assert_eq!(gd.len(), 6);
    for k in 0..primal.len() {
        let (_, x0, y0) = primal[k];
        let (_, x1, y1) = primal[(k + 1) % primal.len()];
        for &(_, vx, vy) in &gd {
            let cross = (x1 - x0) * (vy - y0) - (y1 - y0) * (vx - x0);
            assert!(cross >= -1e-6, "gamma D vertex ({vx}, {vy}) outside edge {k}");
        }
    }
    // Polar points have h = 1; primal points are exposed: <p, y> = h(y).
    for (theta, x, y) in csv.curve("polar") {
        let h = model.support_value(&(lifted(model, theta) * x.hypot(y))).unwrap();
        assert!((h - 1.0).abs() <= 1e-8, "h = {h}");
    }
    for (theta, x, y) in primal {
        let h = model.support_value(&lifted(model, theta)).unwrap();
        assert!((x * theta.cos() + y * theta.sin() - h).abs() <= 1e-8);
    }
}

#[test]
fn piecewise_plot_is_continuous_at_cone_boundaries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = variant(dir.path(), |v| {
        v["template"] = serde_json::json!({"kind": "piecewise", "partition": {"type": "face-fan", "m1": 8, "m2": 5}})
    });
    assert_eq!(solve(&cfg, dir.path(), &["--dirs", "1000"]).status.code(), Some(0));
    let sol = load(dir.path());
    let model = sol.model("q").unwrap();
    let SupportFunctionModel::Piecewise { partition, .. } = model else { panic!("piecewise expected") };
    let csv = Csv::read(&dir.path().join("plot.csv"));
    let polar = csv.curve("polar");
    assert!(polar.len() >= 720);
    let mut boundaries = 0;
    for (theta, x, y) in polar {
        let y_dir = lifted(model, theta);
        if partition.containing(&y_dir, 1e-9).len() >= 2 {
            boundaries += 1;
            assert!(model.piece_disagreement(&y_dir) <= 1e-6);
        }
        let h = model.support_value(&(y_dir * x.hypot(y))).unwrap();
        assert!((h - 1.0).abs() <= 1e-8);
    }
    assert!(boundaries > 0);
}

#[test]
fn plot_and_verify_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(solve(&data("example.json"), dir.path(), &["--dirs", "500"]).status.code(), Some(0));
    let sol = dir.path().join("solution.json");
    let plots = dir.path().join("plots");
    let out = run(&[
        "plot", "--config", data("example.json").to_str().unwrap(), "--solution", sol.to_str().unwrap(),
        "--output-dir", plots.to_str().unwrap(), "--dirs", "360",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(Csv::read(&plots.join("plot.csv")).curve("polar").len(), 360);
    assert!(Csv::read(&plots.join("plot.csv")).curve("reference").len() > 100);
    let out = run(&[
        "verify", "--config", data("example.json").to_str().unwrap(), "--solution", sol.to_str().unwrap(),
        "--output-dir", plots.to_str().unwrap(), "--dirs", "2000", "--seed", "7",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(plots.join("verification.json").exists());
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg_dir = tempfile::tempdir().unwrap();
    let cfg = variant(cfg_dir.path(), |v| {
        v["template"] = serde_json::json!({"kind": "piecewise", "partition": {"type": "face-fan", "m1": 4, "m2": 3}})
    });
    for d in [&a, &b] {
        assert_eq!(solve(&cfg, d.path(), &["--dirs", "500"]).status.code(), Some(0));
    }
    for f in ["solution.json", "verification.json", "fingerprint.txt", "plot.csv", "plot.svg"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn reproduce_only_ellipsoid_prints_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["reproduce", "--only", "ellipsoid", "--dirs", "500", "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<&str> = stdout.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("ellipsoid"));
    assert!(dir.path().join("ellipsoid/plot.svg").exists());
}

#[test]
fn reproduce_rejects_unknown_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["reproduce", "--only", "cube", "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

fn table_gammas(args: &[&str]) -> Vec<(String, f64)> {
    let dir = tempfile::tempdir().unwrap();
    let mut all = vec!["reproduce", "--dirs", "500", "--output-dir", dir.path().to_str().unwrap()];
    all.extend_from_slice(args);
    // Loose solves may fail the 1e-6 verification; only gamma is compared.
    let out = run(&all);
    assert!(out.status.code().is_some(), "{}", String::from_utf8_lossy(&out.stderr));
    let table: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("table.json")).unwrap()).unwrap();
    table
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["name"].as_str().unwrap().to_string(), r["gamma"].as_f64().unwrap()))
        .collect()
}

fn assert_close_tables(base: &[(String, f64)], loose: &[(String, f64)]) {
    assert_eq!(base.len(), 7);
    assert_eq!(loose.len(), 7);
    for ((name, a), (_, b)) in base.iter().zip(loose) {
        assert!((a - b).abs() <= 5e-3, "{name}: {a} vs {b}");
    }
}

#[test]
fn loose_feasibility_tolerance_keeps_the_table() {
    assert_close_tables(&table_gammas(&[]), &table_gammas(&["--solver-opt", "feas_tol=1e-3"]));
}

#[test]
fn loose_gap_tolerance_keeps_the_table() {
    assert_close_tables(&table_gammas(&[]), &table_gammas(&["--solver-opt", "gap_tol=1e-3"]));
}
