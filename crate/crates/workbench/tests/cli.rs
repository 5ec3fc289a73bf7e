use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fekete_core::convergence::{diagonal_diameter_scan, theorem_maint_experiment, ConvergenceReport};
use fekete_core::fekete::{aawf_array, FeketeArray};
use fekete_core::gram::{optimal_measure, OptimalDesign};
use fekete_core::perturbation::{calc_lemma_experiment, CalcLemmaRow, ConcavityReport};
use fekete_workbench::io::{load_json, read_measure, read_points};
use fekete_workbench::verify::CheckResult;
use fekete_workbench::ExperimentConfig;

fn fekete(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fekete"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn fekete")
}

fn configs() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "cfg"))
        .collect();
    v.sort();
    v
}

const SMALL: &[&str] = &[
    "--shape",
    "interval",
    "--nmin",
    "1",
    "--nmax",
    "6",
    "--resolution",
    "201",
    "--out",
    "out",
];

#[test]
fn verify_passes_on_shipped_configs() {
    let cfgs = configs();
    assert!(cfgs.len() >= 3);
    for cfg in cfgs {
        let tmp = tempfile::tempdir().unwrap();
        let out = fekete(tmp.path(), &["verify", "--config", cfg.to_str().unwrap(), "--out", "v"]);
        assert!(
            out.status.success(),
            "{}: {}",
            cfg.display(),
            String::from_utf8_lossy(&out.stdout)
        );
        let results: Vec<CheckResult> = load_json(&tmp.path().join("v/verify.json")).unwrap();
        assert_eq!(results.len(), 7);
        assert!(results.iter().all(|r| r.passed));
    }
}

#[test]
fn shipped_configs_parse() {
    for cfg in configs() {
        let c = ExperimentConfig::load(&cfg).unwrap();
        c.resolve().unwrap_or_else(|e| panic!("{}: {e}", cfg.display()));
    }
}

#[test]
fn diameter_csv_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fekete(tmp.path(), &[&["diameter"], SMALL].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("out/diameter.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,epsilon,delta,delta_base,discrepancy,second_moment,energy,outside,flags"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r.len(), 9);
        assert_eq!(r[0].parse::<usize>().unwrap(), k + 1);
        let delta: f64 = r[2].parse().unwrap();
        let base: f64 = r[3].parse().unwrap();
        assert!(delta >= base);
        // 17 significant digits
        assert_eq!(r[2].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    }
    let long = fs::read_to_string(tmp.path().join("out/diameter_long.csv")).unwrap();
    assert!(long.starts_with("n,quantity,value\n1,epsilon,"));
}

#[test]
fn mesh_smaller_than_basis_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fekete(
        tmp.path(),
        &[
            "fekete",
            "--shape",
            "interval",
            "--eps-law",
            "zero",
            "--resolution",
            "5",
            "--nmin",
            "5",
            "--nmax",
            "5",
        ],
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("m_n = 6"), "{err}");
}

#[test]
fn bad_config_values_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "shape = interval\nnmax = twenty\n").unwrap();
    let out = fekete(tmp.path(), &["mesh", "--config", "bad.cfg"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`nmax`"));

    fs::write(&cfg, "shape = interval\nnmin = 4\nnmax = 2\n").unwrap();
    let out = fekete(tmp.path(), &["mesh", "--config", "bad.cfg"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`nmax`"));

    let out = fekete(tmp.path(), &["mesh", "--weight", "gaussian:-1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`weight`"));
}

#[test]
fn flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("a.cfg"),
        "shape = circle\nnmin = 2\nnmax = 3\nresolution = 12\n",
    )
    .unwrap();
    let out = fekete(
        tmp.path(),
        &["mesh", "--config", "a.cfg", "--resolution", "30", "--out", "o"],
    );
    assert!(out.status.success());
    assert_eq!(read_points(&tmp.path().join("o/mesh.csv")).unwrap().len(), 30);
    let eff = ExperimentConfig::load(&tmp.path().join("o/config.cfg")).unwrap();
    assert_eq!((eff.shape.as_str(), eff.nmax, eff.resolution), ("circle", 3, 30));
}

fn resolved(args: &[&str]) -> fekete_workbench::Resolved {
    // mirror the CLI: defaults plus the flags in SMALL
    let mut cfg = ExperimentConfig::default();
    let mut it = args.iter();
    while let Some(k) = it.next() {
        let v = it.next().unwrap();
        match *k {
            "--shape" => cfg.shape = v.to_string(),
            "--nmin" => cfg.nmin = v.parse().unwrap(),
            "--nmax" => cfg.nmax = v.parse().unwrap(),
            "--resolution" => cfg.resolution = v.parse().unwrap(),
            "--degree" => cfg.degree = Some(v.parse().unwrap()),
            _ => {}
        }
    }
    cfg.resolve().unwrap()
}

#[test]
fn json_artifacts_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    for cmd in ["fekete", "diameter", "converge", "optimal", "perturb"] {
        let out = fekete(tmp.path(), &[&[cmd], SMALL].concat());
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let dir = tmp.path().join("out");
    let r = resolved(SMALL);

    let arr: FeketeArray = load_json(&dir.join("fekete.json")).unwrap();
    assert_eq!(arr, aawf_array(&r.array).unwrap());
    let diam: ConvergenceReport = load_json(&dir.join("diameter.json")).unwrap();
    assert_eq!(diam, diagonal_diameter_scan(&r.array).unwrap());
    let conv: ConvergenceReport = load_json(&dir.join("converge.json")).unwrap();
    assert_eq!(conv, theorem_maint_experiment(&r.array, 4).unwrap());
    let rows: Vec<CalcLemmaRow> = load_json(&dir.join("perturb.json")).unwrap();
    assert_eq!(rows, calc_lemma_experiment(&r.array, &r.probe, 1e-4).unwrap());
    let _: ConcavityReport = load_json(&dir.join("concavity.json")).unwrap();

    let design: OptimalDesign = load_json(&dir.join("optimal.json")).unwrap();
    let mesh = fekete_core::domains::build_mesh(r.shape(), 201).unwrap();
    let basis = fekete_core::basis::GradedBasis::new(1, r.degree).unwrap();
    let fresh = optimal_measure(&mesh, &basis, r.weight(), 1e-3, 200_000).unwrap();
    assert_eq!(design, fresh);
    // the CSV copy of the measure carries the same doubles
    let csv = read_measure(&dir.join("optimal_measure.csv")).unwrap();
    assert_eq!(csv.probs(), fresh.measure.probs());
    assert_eq!(csv.atoms(), fresh.measure.atoms());
}

#[test]
fn grid_weight_with_infinite_values_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let grid: String = (0..21)
        .map(|i| {
            let x = -1.0 + 0.1 * i as f64;
            let q = if x > 0.75 {
                "inf".to_string()
            } else {
                (0.5 * x * x).to_string()
            };
            format!("{x},0,{q}\n")
        })
        .collect();
    fs::write(tmp.path().join("q.csv"), format!("re_1,im_1,q\n{grid}")).unwrap();
    let out = fekete(
        tmp.path(),
        &[
            "fekete",
            "--weight",
            "grid:q.csv",
            "--eps-law",
            "zero",
            "--nmax",
            "4",
            "--resolution",
            "81",
            "--out",
            "o",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let arr: FeketeArray = load_json(&tmp.path().join("o/fekete.json")).unwrap();
    let text = fs::read_to_string(tmp.path().join("o/fekete.json")).unwrap();
    assert!(text.contains("\"inf\""));
    let again = serde_json::to_string(&arr).unwrap();
    let back: FeketeArray = serde_json::from_str(&again).unwrap();
    assert_eq!(back, arr);
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut m = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        m.insert(
            p.file_name().unwrap().to_string_lossy().into_owned(),
            fs::read(&p).unwrap(),
        );
    }
    m
}

#[test]
fn identical_configs_give_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [a.path(), b.path()] {
        for cmd in ["mesh", "fekete", "converge", "verify"] {
            let out = fekete(dir, &[&[cmd], SMALL, &["--seed", "7"]].concat());
            assert!(out.status.success());
        }
    }
    let (sa, sb) = (snapshot(&a.path().join("out")), snapshot(&b.path().join("out")));
    assert!(sa.len() > 10);
    assert_eq!(sa, sb);
}
