use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use probclust_core::data::{read_csv, read_model, CsvOptions};
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_probclust"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn assignments(text: &str) -> Vec<(usize, f64, bool)> {
    text.lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
            )
        })
        .collect()
}

/// Writes a hand-made model whose regions each own one row.
fn write_point_model(dir: &Path, centers: &[&[f64]], scale: f64) -> PathBuf {
    let regions: Vec<String> = centers
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let sc = vec![scale; c.len()];
            format!(r#"{{"id":{i},"center":{c:?},"scale":{sc:?},"count":1,"members":[{i}]}}"#)
        })
        .collect();
    let text = format!(
        r#"{{"version":1,"dim":{},"regions":[{}],"merge_log":[],"config":{{"target_k":null,"max_levels":6,"merge_enabled":true,"sdl":{{"delta":1e-8,"max_migrations":3,"max_convergences":1,"mu":50,"seed":0}}}},"dataset_fingerprint":"x"}}"#,
        centers[0].len(),
        regions.join(",")
    );
    let path = dir.join("hand.model.json");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn cluster_frozen_mixture_gives_four_regions() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("m.json");
    let report = dir.path().join("r.json");
    let out = run(&[
        "cluster",
        "--input",
        s(&data("mixture4.csv")),
        "--out",
        s(&model),
        "--report",
        s(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("4 clusters"));
    assert_eq!(read_model(&model).unwrap().cluster_count(), 4);
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["cluster_count"], 4);
    assert!(rep["wall_time_secs"].as_f64().unwrap() >= 0.0);
    assert_eq!(rep["sizes"].as_array().unwrap().len(), 4);
}

#[test]
fn cluster_usage_and_input_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("m.json");
    let input = data("mixture4.csv");
    assert_eq!(
        code(&run(&[
            "cluster",
            "--input",
            s(&input),
            "--out",
            s(&out),
            "--target-k",
            "0"
        ])),
        2
    );
    assert_eq!(code(&run(&["cluster", "--out", s(&out)])), 2);
    assert_eq!(
        code(&run(&[
            "cluster",
            "--input",
            s(&input),
            "--out",
            s(&out),
            "--bogus"
        ])),
        2
    );
    assert_eq!(
        code(&run(&[
            "cluster",
            "--input",
            s(&input),
            "--out",
            s(&out),
            "--delta",
            "-1"
        ])),
        2
    );
    assert_eq!(code(&run(&["frobnicate"])), 2);

    let missing = dir.path().join("nope.csv");
    assert_eq!(
        code(&run(&["cluster", "--input", s(&missing), "--out", s(&out)])),
        1
    );
    let ragged = dir.path().join("ragged.csv");
    fs::write(&ragged, "1,2\n3\n").unwrap();
    let res = run(&["cluster", "--input", s(&ragged), "--out", s(&out)]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 2"));
}

#[test]
fn cluster_is_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let out = run(&[
            "cluster",
            "--input",
            s(&data("mixture4.csv")),
            "--out",
            s(p),
            "--seed",
            "3",
        ]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn assign_training_rows_reproduces_partition() {
    let out = run(&[
        "assign",
        "--model",
        s(&data("mixture4.model.json")),
        "--input",
        s(&data("mixture4.csv")),
    ]);
    assert_eq!(code(&out), 0);
    let rows = assignments(&String::from_utf8(out.stdout).unwrap());
    let model = read_model(data("mixture4.model.json")).unwrap();
    assert_eq!(rows.len(), 2000);
    for r in &model.regions {
        for &m in &r.members {
            assert_eq!(rows[m].0, r.id, "row {m}");
        }
    }
    assert!(rows
        .iter()
        .all(|&(_, d, inside)| d >= 0.0 && inside == (d == 0.0)));
}

#[test]
fn assign_holdout_matches_generating_component() {
    let model = read_model(data("mixture4.model.json")).unwrap();
    let train = read_csv(data("mixture4.csv"), CsvOptions::default()).unwrap();
    let train_labels = train.labels.unwrap();
    let majority = |members: &[usize]| {
        let mut counts = [0usize; 4];
        for &m in members {
            counts[train_labels[m]] += 1;
        }
        (0..4).max_by_key(|&l| counts[l]).unwrap()
    };
    let holdout = read_csv(data("mixture4_holdout.csv"), CsvOptions::default()).unwrap();
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("a.txt");
    let out = run(&[
        "assign",
        "--model",
        s(&data("mixture4.model.json")),
        "--input",
        s(&data("mixture4_holdout.csv")),
        "--out",
        s(&path),
    ]);
    assert_eq!(code(&out), 0);
    let rows = assignments(&fs::read_to_string(&path).unwrap());
    let hits = rows
        .iter()
        .zip(holdout.labels.unwrap())
        .filter(|((id, _, _), truth)| {
            let r = model.regions.iter().find(|r| r.id == *id).unwrap();
            majority(&r.members) == *truth
        })
        .count();
    assert!(
        hits as f64 >= 0.95 * rows.len() as f64,
        "{hits}/{}",
        rows.len()
    );
}

#[test]
fn assign_center_and_dimension_mismatch() {
    let model = read_model(data("mixture4.model.json")).unwrap();
    let target = &model.regions[2];
    let c = target.fitted().unwrap().center();
    let dir = TempDir::new().unwrap();
    let one = dir.path().join("one.csv");
    fs::write(&one, format!("{:?},{:?}\n", c[0], c[1])).unwrap();
    let out = run(&[
        "assign",
        "--model",
        s(&data("mixture4.model.json")),
        "--input",
        s(&one),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        assignments(&String::from_utf8(out.stdout).unwrap()),
        vec![(target.id, 0.0, true)]
    );

    let wide = dir.path().join("wide.csv");
    fs::write(&wide, "1,2,3\n").unwrap();
    assert_eq!(
        code(&run(&[
            "assign",
            "--model",
            s(&data("mixture4.model.json")),
            "--input",
            s(&wide)
        ])),
        1
    );
}

#[test]
fn check_metric_exit_codes() {
    let dir = TempDir::new().unwrap();
    let same = write_point_model(dir.path(), &[&[1.0, 2.0], &[1.0, 2.0], &[1.0, 2.0]], 0.5);
    let out = run(&["check-metric", "--model", s(&same)]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(code(&out), 0, "{text}");
    assert!(text.contains("max distance: 0\n"));
    assert!(text.contains("total violations: 0"));

    let two = write_point_model(dir.path(), &[&[0.0], &[5.0]], 0.0);
    assert_eq!(code(&run(&["check-metric", "--model", s(&two)])), 1);
    assert_eq!(
        code(&run(&[
            "check-metric",
            "--random",
            "50",
            "--dim",
            "2",
            "--trials",
            "0"
        ])),
        2
    );
    assert_eq!(code(&run(&["check-metric", "--trials", "10"])), 2);
    assert_eq!(code(&run(&["check-metric", "--random", "50"])), 2);

    let out = run(&[
        "check-metric",
        "--random",
        "50",
        "--dim",
        "18",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn check_metric_reports_clamp_counterexample() {
    // Two far spaces bridged by a wide one: G(a,b) = G(b,c) = 0 but G(a,c) = 10.
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bridge.json");
    let text = r#"{"version":1,"dim":1,"regions":[
        {"id":0,"center":[0.0],"scale":[0.0],"count":1,"members":[0]},
        {"id":1,"center":[5.0],"scale":[100.0],"count":1,"members":[1]},
        {"id":2,"center":[10.0],"scale":[0.0],"count":1,"members":[2]}],
        "merge_log":[],"config":{"target_k":null,"max_levels":6,"merge_enabled":true,
        "sdl":{"delta":1e-8,"max_migrations":3,"max_convergences":1,"mu":50,"seed":0}},
        "dataset_fingerprint":"x"}"#;
    fs::write(&path, text).unwrap();
    let out = run(&["check-metric", "--model", s(&path), "--trials", "200"]);
    assert_eq!(code(&out), 1);
    assert!(!String::from_utf8_lossy(&out.stdout).contains("triangle violations: 0"));
}

#[test]
fn gen_writes_labelled_rows_deterministically() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let out = run(&[
            "gen",
            "--components",
            "0.5:0,0:1;0.5:9,9:1",
            "--n",
            "10",
            "--seed",
            "4",
            "--out",
            s(p),
        ]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let d = read_csv(&a, CsvOptions::default()).unwrap();
    assert_eq!(d.len(), 10);
    assert!(d.labels.unwrap().iter().all(|&l| l <= 1));
}

#[test]
fn gen_rejects_bad_specs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("g.csv");
    assert_eq!(
        code(&run(&[
            "gen",
            "--components",
            "0.3:0:1;0.3:5:1",
            "--n",
            "10",
            "--out",
            s(&out)
        ])),
        2
    );
    assert_eq!(
        code(&run(&[
            "gen",
            "--components",
            "nonsense",
            "--n",
            "10",
            "--out",
            s(&out)
        ])),
        2
    );
    assert_eq!(code(&run(&["gen", "--n", "10", "--out", s(&out)])), 2);

    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"components":[{"weight":1.0,"center":[1.0,2.0],"sigma":[0.5,0.5]}]}"#,
    )
    .unwrap();
    assert_eq!(
        code(&run(&[
            "gen",
            "--spec",
            s(&spec),
            "--n",
            "5",
            "--out",
            s(&out)
        ])),
        0
    );
    assert_eq!(read_csv(&out, CsvOptions::default()).unwrap().dim(), 2);
    fs::write(&spec, r#"{"components":[{"weight":1.0,"center":[1.0]}]}"#).unwrap();
    assert_eq!(
        code(&run(&[
            "gen",
            "--spec",
            s(&spec),
            "--n",
            "5",
            "--out",
            s(&out)
        ])),
        2
    );
}

#[test]
fn report_draws_one_center_per_region() {
    let dir = TempDir::new().unwrap();
    let svg = dir.path().join("p.svg");
    let out = run(&[
        "report",
        "--model",
        s(&data("mixture4.model.json")),
        "--input",
        s(&data("mixture4.csv")),
        "--out",
        s(&svg),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert_eq!(text.matches(r#"class="center""#).count(), 4);
    assert_eq!(text.matches(r#"class="scale""#).count(), 4);
    assert_eq!(text.matches("<circle").count(), 2000);
}

#[test]
fn report_projects_high_dimensional_models() {
    let dir = TempDir::new().unwrap();
    let (csv, model, svg) = (
        dir.path().join("d.csv"),
        dir.path().join("m.json"),
        dir.path().join("p.svg"),
    );
    let zeros = vec!["0"; 18].join(",");
    let nines = vec!["9"; 18].join(",");
    let comps = format!("0.5:{zeros}:1;0.5:{nines}:1");
    assert_eq!(
        code(&run(&[
            "gen",
            "--components",
            &comps,
            "--n",
            "200",
            "--seed",
            "2",
            "--out",
            s(&csv)
        ])),
        0
    );
    assert_eq!(
        code(&run(&["cluster", "--input", s(&csv), "--out", s(&model)])),
        0
    );
    let base = [
        "report",
        "--model",
        s(&model),
        "--input",
        s(&csv),
        "--out",
        s(&svg),
    ];
    assert_eq!(code(&run(&[&base[..], &["--proj", "0,17"]].concat())), 0);
    assert!(fs::read_to_string(&svg)
        .unwrap()
        .contains(r#"class="center""#));
    assert_eq!(code(&run(&[&base[..], &["--proj", "0,99"]].concat())), 1);
    assert_eq!(code(&run(&[&base[..], &["--proj", "0"]].concat())), 2);
}

#[test]
fn sweep_writes_one_row_per_dimension() {
    let out = run(&["sweep", "--dims", "2,5", "--points-per-component", "100"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "dim,zero_fraction,min_between_distance,cluster_count,ari"
    );
    assert!(lines[1].starts_with("2,") && lines[2].starts_with("5,"));
}
