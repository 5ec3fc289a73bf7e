//! CSV and JSON formats.
//!
//! Point coordinates are written as `re_1,im_1,...,re_d,im_d`. Floats are
//! written with 17 significant digits so values survive a round trip.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use fekete_core::convergence::ConvergenceReport;
use fekete_core::fekete::FeketeArray;
use fekete_core::gram::DiscreteMeasure;
use fekete_core::{Complex64, Point};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn coord_header(d: usize) -> Vec<String> {
    (1..=d).flat_map(|j| [format!("re_{j}"), format!("im_{j}")]).collect()
}

fn coord_fields(p: &[Complex64]) -> impl Iterator<Item = String> + '_ {
    p.iter().flat_map(|z| [fmt_f64(z.re), fmt_f64(z.im)])
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

/// Rows of a CSV whose leading columns are `re_j,im_j` pairs followed by
/// `extra` named scalar columns.
fn read_coords_with(path: &Path, extra: &[&str]) -> Result<(Vec<Point>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let ncoord = headers.len().checked_sub(extra.len()).filter(|n| *n > 0 && n % 2 == 0);
    let Some(ncoord) = ncoord else {
        bail!(
            "{}: expected columns re_1,im_1,...,{}; found {}",
            path.display(),
            extra.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        );
    };
    for (k, name) in extra.iter().enumerate() {
        if &headers[ncoord + k] != *name {
            bail!("{}: column {} should be `{name}`", path.display(), ncoord + k + 1);
        }
    }
    let mut pts = Vec::new();
    let mut vals = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let nums: Vec<f64> = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| anyhow!("{}: row {}: `{s}` is not a number", path.display(), i + 2))
            })
            .collect::<Result<_>>()?;
        pts.push(nums[..ncoord].chunks(2).map(|c| Complex64::new(c[0], c[1])).collect());
        vals.push(nums[ncoord..].to_vec());
    }
    Ok((pts, vals))
}

pub fn write_points(path: &Path, pts: &[Point]) -> Result<()> {
    let d = pts.first().map_or(1, Vec::len);
    let mut w = writer(path)?;
    w.write_record(coord_header(d))?;
    for p in pts {
        w.write_record(coord_fields(p))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points(path: &Path) -> Result<Vec<Point>> {
    Ok(read_coords_with(path, &[])?.0)
}

pub fn write_measure(path: &Path, mu: &DiscreteMeasure) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = coord_header(mu.dim());
    header.push("prob".into());
    w.write_record(header)?;
    for (a, p) in mu.atoms().iter().zip(mu.probs()) {
        w.write_record(coord_fields(a).chain([fmt_f64(*p)]))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads atoms and probabilities; masses are renormalized only if they are
/// already within rounding of a probability vector.
pub fn read_measure(path: &Path) -> Result<DiscreteMeasure> {
    let (atoms, vals) = read_coords_with(path, &["prob"])?;
    let probs = vals.into_iter().map(|v| v[0]).collect();
    DiscreteMeasure::new(atoms, probs).with_context(|| format!("measure in {}", path.display()))
}

/// Grid weight file: coordinates plus a `q` column; `inf` marks w = 0.
pub fn read_weight_grid(path: &Path) -> Result<(Vec<Point>, Vec<f64>)> {
    let (nodes, vals) = read_coords_with(path, &["q"])?;
    Ok((nodes, vals.into_iter().map(|v| v[0]).collect()))
}

pub fn write_fekete(dir: &Path, arr: &FeketeArray) -> Result<()> {
    let d = arr.spec.shape.dim();
    let mut w = writer(&dir.join("fekete.csv"))?;
    let mut header = vec!["n".to_string(), "index".into()];
    header.extend(coord_header(d));
    w.write_record(header)?;
    for r in &arr.records {
        for (k, p) in r.points.iter().enumerate() {
            w.write_record([r.n.to_string(), k.to_string()].into_iter().chain(coord_fields(p)))?;
        }
    }
    w.flush()?;

    let mut w = writer(&dir.join("fekete_summary.csv"))?;
    w.write_record([
        "n",
        "mesh",
        "epsilon",
        "log_abs_w",
        "delta",
        "delta_reference",
        "threshold",
        "flagged",
        "outside",
    ])?;
    for r in &arr.records {
        w.write_record([
            r.n.to_string(),
            r.mesh_label.clone(),
            fmt_f64(r.epsilon),
            fmt_f64(r.log_abs_w),
            fmt_f64(r.delta),
            fmt_f64(r.delta_reference),
            fmt_f64(r.threshold),
            r.flagged.to_string(),
            r.outside.to_string(),
        ])?;
    }
    w.flush()?;
    save_json(&dir.join("fekete.json"), arr)
}

/// Wide CSV, long CSV (`n,quantity,value`) and JSON for a convergence report.
pub fn write_report(dir: &Path, stem: &str, rep: &ConvergenceReport) -> Result<()> {
    let mut w = writer(&dir.join(format!("{stem}.csv")))?;
    w.write_record([
        "n",
        "epsilon",
        "delta",
        "delta_base",
        "discrepancy",
        "second_moment",
        "energy",
        "outside",
        "flags",
    ])?;
    for r in &rep.rows {
        w.write_record([
            r.n.to_string(),
            fmt_f64(r.epsilon),
            fmt_f64(r.delta),
            fmt_opt(r.delta_base),
            fmt_opt(r.discrepancy),
            fmt_opt(r.second_moment),
            fmt_opt(r.energy),
            r.outside.to_string(),
            r.flags.join(";"),
        ])?;
    }
    w.flush()?;

    let mut w = writer(&dir.join(format!("{stem}_long.csv")))?;
    w.write_record(["n", "quantity", "value"])?;
    for r in &rep.rows {
        let quantities = [
            ("epsilon", Some(r.epsilon)),
            ("delta", Some(r.delta)),
            ("delta_base", r.delta_base),
            ("discrepancy", r.discrepancy),
            ("second_moment", r.second_moment),
            ("energy", r.energy),
            ("outside", Some(r.outside as f64)),
        ];
        for (name, v) in quantities {
            if let Some(v) = v {
                w.write_record([r.n.to_string(), name.to_string(), fmt_f64(v)])?;
            }
        }
    }
    w.flush()?;
    save_json(&dir.join(format!("{stem}.json")), rep)
}

pub fn save_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(std::io::BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
}
