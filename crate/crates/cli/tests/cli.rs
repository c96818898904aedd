use std::path::Path;
use std::process::{Command, Output};

fn kagome(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kagome"))
        .args(args)
        .env("KAGOME_OUT", out)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn sweep_writes_one_row_per_run_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |o: &str| {
        vec![
            "sweep".to_string(),
            "--patch=2x4".into(),
            "--scheme=per_edge".into(),
            "--p=1..6".into(),
            "--restarts=10".into(),
            "--seed=7".into(),
            format!("--out={o}"),
        ]
    };
    let mut tables = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let a = args(out.to_str().unwrap());
        let o = kagome(&a.iter().map(String::as_str).collect::<Vec<_>>(), dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        let (header, rows) = read_csv(&out.join("sweep.csv"));
        assert_eq!(rows.len(), 60);
        for col in [
            "patch",
            "scheme",
            "p",
            "restart",
            "seed",
            "E_final",
            "rel_energy_err",
            "infidelity",
            "iters",
            "evals",
            "wall_s",
        ] {
            assert!(header.iter().any(|h| h == col), "missing {col}");
        }
        assert_eq!(std::fs::read_dir(out.join("runs")).unwrap().count(), 60);
        let wall = header.iter().position(|h| h == "wall_s").unwrap();
        let stripped: Vec<Vec<String>> = rows
            .into_iter()
            .map(|mut r| {
                r.remove(wall);
                r
            })
            .collect();
        tables.push(stripped);
        assert!(out.join("manifest.json").exists());
        assert!(out.join("thresholds.csv").exists());
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn compile_square_fits_seven_layers() {
    let dir = tempfile::tempdir().unwrap();
    let o = kagome(&["compile", "--patch", "2x6", "--topology", "square"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("compile/depth_2x6_square.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["layers_per_round"].as_u64().unwrap() <= 7);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["vqe", "--patch", "2x4", "--scheme", "per_edge", "--p", "2"],
        vec!["ed", "--patch", "nope", "--seed", "1"],
        vec!["ed", "--patch", "2x4", "--seed", "1", "--shots", "10"],
        vec!["vqe", "--patch", "2x4", "--scheme", "bogus", "--p", "2", "--seed", "1"],
        vec!["ed", "--patch", "3x8", "--seed", "1"],
        vec!["sweep", "--bogus"],
    ] {
        let o = kagome(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn plot_rejects_empty_input_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.csv");
    std::fs::write(&input, "patch,scheme,p,infidelity\n").unwrap();
    let o = kagome(
        &["plot", "--kind", "sweep", "--input", input.to_str().unwrap()],
        dir.path(),
    );
    assert!(!o.status.success());
    assert!(stderr(&o).contains("no data rows"), "{}", stderr(&o));
    let svgs = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg"));
    assert_eq!(svgs.count(), 0);
}

#[test]
fn plot_names_missing_column() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    std::fs::write(&input, "patch,scheme,p\n2x4,per_edge,1\n").unwrap();
    let o = kagome(
        &["plot", "--kind", "sweep", "--input", input.to_str().unwrap()],
        dir.path(),
    );
    assert!(!o.status.success());
    assert!(stderr(&o).contains("infidelity"), "{}", stderr(&o));
}

#[test]
fn sfactor_heatmap_range_matches_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("obs");
    let o = kagome(
        &[
            "observables",
            "--patch",
            "2x4",
            "--seed",
            "2",
            "--q-points",
            "15",
            "--out",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = read_csv(&out.join("sfactor.csv"));
    assert_eq!(rows.len(), 15 * 15);
    let values: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let o = kagome(
        &[
            "plot",
            "--kind",
            "sfactor",
            "--input",
            out.join("sfactor.csv").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = std::fs::read_to_string(out.join("sfactor_exact.svg")).unwrap();
    let attr = |name: &str| -> f64 {
        let start = svg.find(&format!("{name}=\"")).unwrap() + name.len() + 2;
        let end = start + svg[start..].find('"').unwrap();
        svg[start..end].parse().unwrap()
    };
    assert!((attr("data-min") - lo).abs() <= 1e-12 * hi.abs().max(1.0));
    assert!((attr("data-max") - hi).abs() <= 1e-12 * hi.abs().max(1.0));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("ed");
    std::fs::write(
        &cfg,
        format!(
            "experiment = \"ed\"\npatch = [\"2x4\"]\nseed = 1\nk = 3\nout = \"{}\"\n",
            out.display()
        ),
    )
    .unwrap();
    let o = kagome(&["--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = read_csv(&out.join("ed.csv"));
    assert_eq!(rows.len(), 3);

    let o = kagome(&["--config", cfg.to_str().unwrap(), "ed", "--k", "1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = read_csv(&out.join("ed.csv"));
    assert_eq!(rows.len(), 1);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["k"], 1);
    assert_eq!(manifest["config"]["seed"], 1);
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "experiment = \"ed\"\npatch = [\"2x4\"]\nseed = 1\nflavour = 3\n").unwrap();
    let o = kagome(&["--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("flavour"), "{}", stderr(&o));
}
