//! Subcommand dispatch. Each subcommand writes its artifacts into the
//! output directory together with `config.cfg`, the effective config.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use fekete_core::basis::GradedBasis;
use fekete_core::convergence::{diagonal_diameter_scan, theorem_maint_experiment};
use fekete_core::domains::{build_mesh, neighborhood_mesh};
use fekete_core::fekete::aawf_array;
use fekete_core::gram::{gram_matrix, logdet_gram, optimal_measure, Bergman, DiscreteMeasure};
use fekete_core::perturbation::{calc_lemma_experiment, concavity_scan};
use serde::Serialize;

use crate::config::{ExperimentConfig, Resolved};
use crate::io::{self, fmt_f64};
use crate::verify::{self, VerifyOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::Subcommand)]
pub enum Subcommand {
    /// Base mesh and the neighborhood meshes for nmin..=nmax
    Mesh,
    /// AAWF array: Fekete points for every degree
    Fekete,
    /// Diagonal scan of transfinite diameter estimates
    Diameter,
    /// Gram matrix of a measure (uniform on the mesh unless --measure)
    Gram,
    /// Bergman function of a measure at --points or at its atoms
    Bergman,
    /// Certified optimal measure on the mesh
    Optimal,
    /// Derivative and concavity experiment for a test function
    Perturb,
    /// Convergence of Fekete measures to the equilibrium measure
    Converge,
    /// Randomized identity suite; fails on any violation
    Verify,
}

/// Runs one subcommand. `Ok(false)` means the run finished but a check
/// failed.
pub fn run(cmd: Subcommand, cfg: &ExperimentConfig) -> Result<bool> {
    let r = cfg.resolve()?;
    let out = cfg.out.as_path();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("config.cfg"), cfg.to_text())?;
    match cmd {
        Subcommand::Mesh => mesh(&r, cfg, out),
        Subcommand::Fekete => {
            let arr = aawf_array(&r.array)?;
            io::write_fekete(out, &arr)?;
            Ok(true)
        }
        Subcommand::Diameter => {
            io::write_report(out, "diameter", &diagonal_diameter_scan(&r.array)?)?;
            Ok(true)
        }
        Subcommand::Gram => gram(&r, cfg, out),
        Subcommand::Bergman => bergman(&r, cfg, out),
        Subcommand::Optimal => {
            let mesh = build_mesh(r.shape(), cfg.resolution)?;
            let basis = GradedBasis::new(r.shape().dim(), r.degree)?;
            let design = optimal_measure(&mesh, &basis, r.weight(), cfg.tol, cfg.max_iter)?;
            io::write_measure(&out.join("optimal_measure.csv"), &design.measure)?;
            io::save_json(&out.join("optimal.json"), &design)?;
            Ok(true)
        }
        Subcommand::Perturb => perturb(&r, cfg, out),
        Subcommand::Converge => {
            let rep = theorem_maint_experiment(&r.array, cfg.moment_degree)?;
            io::write_report(out, "converge", &rep)?;
            Ok(true)
        }
        Subcommand::Verify => {
            let results = verify::run_all(&VerifyOptions {
                seed: cfg.seed,
                tol: cfg.tol,
                max_iter: cfg.max_iter,
                h: cfg.h,
            })?;
            for res in &results {
                println!("{}", res.line());
            }
            io::save_json(&out.join("verify.json"), &results)?;
            Ok(results.iter().all(|r| r.passed))
        }
    }
}

fn mesh(r: &Resolved, cfg: &ExperimentConfig, out: &Path) -> Result<bool> {
    let base = build_mesh(r.shape(), cfg.resolution)?;
    io::write_points(&out.join("mesh.csv"), base.points())?;
    for n in cfg.nmin..=cfg.nmax {
        let eps = r.array.eps.eps(n);
        if eps > 0.0 {
            let m = neighborhood_mesh(r.shape(), eps, cfg.resolution)?;
            io::write_points(&out.join(format!("neighborhood_n{n}.csv")), m.points())?;
        }
    }
    Ok(true)
}

fn load_measure(r: &Resolved, cfg: &ExperimentConfig) -> Result<DiscreteMeasure> {
    match &r.measure {
        Some(path) => io::read_measure(path),
        None => Ok(DiscreteMeasure::uniform(
            build_mesh(r.shape(), cfg.resolution)?.points().to_vec(),
        )?),
    }
}

#[derive(Serialize)]
struct GramSummary<'a> {
    gram: &'a fekete_core::gram::GramMatrix,
    log_det: Option<f64>,
    hermitian_defect: f64,
}

fn gram(r: &Resolved, cfg: &ExperimentConfig, out: &Path) -> Result<bool> {
    let mu = load_measure(r, cfg)?;
    let basis = GradedBasis::new(mu.dim(), r.degree)?;
    let g = gram_matrix(&basis, r.weight(), &mu)?;
    let log_det = logdet_gram(&g).ok();
    let mut w = csv::Writer::from_path(out.join("gram.csv"))?;
    w.write_record(["i", "j", "re", "im"])?;
    for i in 0..g.order() {
        for j in 0..g.order() {
            let e = g.entry(i, j);
            w.write_record([i.to_string(), j.to_string(), fmt_f64(e.re), fmt_f64(e.im)])?;
        }
    }
    w.flush()?;
    io::save_json(
        &out.join("gram.json"),
        &GramSummary {
            gram: &g,
            log_det,
            hermitian_defect: g.hermitian_defect(),
        },
    )?;
    Ok(true)
}

fn bergman(r: &Resolved, cfg: &ExperimentConfig, out: &Path) -> Result<bool> {
    let mu = load_measure(r, cfg)?;
    let d = mu.dim();
    let basis = GradedBasis::new(d, r.degree)?;
    let b = Bergman::new(&basis, r.weight(), &mu)?;
    let pts = r.points.clone().unwrap_or_else(|| mu.atoms().to_vec());
    let m = basis.len() as f64;
    let mut w = csv::Writer::from_path(out.join("bergman.csv"))?;
    let mut header: Vec<String> = (1..=d).flat_map(|j| [format!("re_{j}"), format!("im_{j}")]).collect();
    header.extend(["bergman".into(), "ratio".into()]);
    w.write_record(&header)?;
    for p in &pts {
        let v = b.eval(p)?;
        let mut row: Vec<String> = p.iter().flat_map(|z| [fmt_f64(z.re), fmt_f64(z.im)]).collect();
        row.extend([fmt_f64(v), fmt_f64(v / m)]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(true)
}

fn perturb(r: &Resolved, cfg: &ExperimentConfig, out: &Path) -> Result<bool> {
    let rows = calc_lemma_experiment(&r.array, &r.probe, cfg.h)?;
    let mut w = csv::Writer::from_path(out.join("perturb.csv"))?;
    w.write_record(["n", "f_n0", "fprime_direct", "fprime_fd", "g_prime_ref", "gap"])?;
    for row in &rows {
        w.write_record([
            row.n.to_string(),
            fmt_f64(row.f_n0),
            fmt_f64(row.fprime_direct),
            fmt_f64(row.fprime_fd),
            fmt_f64(row.g_prime_ref),
            fmt_f64(row.gap),
        ])?;
    }
    w.flush()?;
    io::save_json(&out.join("perturb.json"), &rows)?;

    let mu = load_measure(r, cfg)?;
    let basis = GradedBasis::new(mu.dim(), r.degree)?;
    let grid: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
    let rep = concavity_scan(&basis, r.weight(), &r.probe, &mu, &grid)?;
    io::save_json(&out.join("concavity.json"), &rep)?;
    Ok(rep.concave)
}
