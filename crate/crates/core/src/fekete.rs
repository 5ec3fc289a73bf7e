//! Approximate weighted Fekete tuples on meshes, and AAWF arrays whose `n`-th
//! tuple lives in the neighborhood mesh of `K_n`.
//!
//! Three extractors are provided:
//!
//! * greedy: row-pivoted Gram-Schmidt on the weighted Vandermonde matrix of
//!   the mesh (rows `w(x)^n e(x)`), picking the row with the largest residual
//!   norm at each step; ties go to the lowest mesh index.
//! * exchange: greedy followed by single-point exchanges, each accepted only
//!   if `log|W|` strictly increases.
//! * brute force: exhaustive maximization over all `m_n`-subsets, guarded by
//!   [`BRUTE_FORCE_LIMIT`].
//!
//! Ranking inside the searches runs in `f64`; every accepted move and every
//! reported `log|W|` is evaluated in double-double precision.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

// Float math in no_std builds; unused once std is linked.
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::basis::GradedBasis;
use crate::domains::{neighborhood_mesh, EpsSchedule, Mesh, Shape, WeightFn};
use crate::linalg::{scaled_log_det, Lu, PIVOT_RTOL};
use crate::vandermonde::{delta_from_log, weighted_unchecked};
use crate::{Error, Point, Result};

/// Largest number of subsets brute force will enumerate.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;
pub const DEFAULT_MAX_SWEEPS: usize = 50;
pub const DEFAULT_SLACK: f64 = 0.02;

/// Exchanges must gain at least this relative factor in the `f64` ranking.
const EXCHANGE_GAIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Extractor {
    Greedy,
    /// Greedy start refined by single-point exchanges.
    Exchange {
        max_sweeps: usize,
    },
    BruteForce,
}

impl Extractor {
    pub fn exchange() -> Self {
        Extractor::Exchange {
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Extractor::Greedy => "greedy",
            Extractor::Exchange { .. } => "exchange",
            Extractor::BruteForce => "brute",
        }
    }
}

/// Weighted monomial rows `w(x)^n e(x)` of the mesh points with `w > 0`.
struct Candidates {
    idx: Vec<usize>,
    rows: Vec<Complex64>,
    m: usize,
}

impl Candidates {
    fn build(mesh: &Mesh, basis: &GradedBasis, w: &WeightFn) -> Result<Self> {
        let m = basis.len();
        if mesh.dim() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: mesh.dim(),
            });
        }
        if mesh.len() < m {
            return Err(Error::MeshTooSmall {
                size: mesh.len(),
                needed: m,
            });
        }
        let n = basis.degree() as f64;
        let mut idx = Vec::new();
        let mut rows = Vec::new();
        let mut row = vec![Complex64::new(0.0, 0.0); m];
        for (i, p) in mesh.points().iter().enumerate() {
            let q = w.q(p);
            if !q.is_finite() {
                continue;
            }
            let scale = (-n * q).exp();
            if scale == 0.0 {
                continue;
            }
            basis.eval_into(p, &mut row);
            idx.push(i);
            rows.extend(row.iter().map(|v| v * scale));
        }
        if idx.len() < m {
            return Err(Error::WeightDegenerate {
                positive: idx.len(),
                needed: m,
            });
        }
        Ok(Candidates { idx, rows, m })
    }

    fn row(&self, k: usize) -> &[Complex64] {
        &self.rows[k * self.m..(k + 1) * self.m]
    }

    fn len(&self) -> usize {
        self.idx.len()
    }

    /// `f64` log|det| of the candidate rows `sel`.
    fn log_det_f64(&self, sel: &[usize]) -> f64 {
        let m = self.m;
        let mut a = Vec::with_capacity(m * m);
        for &k in sel {
            a.extend_from_slice(self.row(k));
        }
        let d = scaled_log_det(a, m);
        if d.singular {
            f64::NEG_INFINITY
        } else {
            d.log_abs
        }
    }
}

fn points_of(mesh: &Mesh, idx: &[usize]) -> Vec<Point> {
    idx.iter().map(|&i| mesh.points()[i].clone()).collect()
}

fn log_w(mesh: &Mesh, basis: &GradedBasis, w: &WeightFn, idx: &[usize]) -> f64 {
    weighted_unchecked(basis, w, &points_of(mesh, idx)).log_abs()
}

/// Greedy selection; returns mesh indices in selection order.
pub fn greedy_indices(mesh: &Mesh, basis: &GradedBasis, w: &WeightFn) -> Result<Vec<usize>> {
    let cand = Candidates::build(mesh, basis, w)?;
    greedy_on(&cand).map(|sel| sel.into_iter().map(|k| cand.idx[k]).collect())
}

fn greedy_on(cand: &Candidates) -> Result<Vec<usize>> {
    let m = cand.m;
    let mut resid = cand.rows.clone();
    let mut taken = vec![false; cand.len()];
    let mut sel = Vec::with_capacity(m);
    let mut first = 0.0f64;
    let mut q = vec![Complex64::new(0.0, 0.0); m];
    for step in 0..m {
        let mut best = None;
        let mut best_norm = 0.0f64;
        for k in 0..cand.len() {
            if taken[k] {
                continue;
            }
            let nrm: f64 = resid[k * m..(k + 1) * m].iter().map(|v| v.norm_sqr()).sum();
            if nrm > best_norm {
                best_norm = nrm;
                best = Some(k);
            }
        }
        if step == 0 {
            first = best_norm;
        }
        let Some(b) = best.filter(|_| best_norm > PIVOT_RTOL * PIVOT_RTOL * first) else {
            return Err(Error::NotUnisolvent {
                selected: step,
                needed: m,
            });
        };
        taken[b] = true;
        sel.push(b);
        let inv = 1.0 / best_norm.sqrt();
        for i in 0..m {
            q[i] = resid[b * m + i] * inv;
        }
        for k in 0..cand.len() {
            if taken[k] {
                continue;
            }
            let r = &mut resid[k * m..(k + 1) * m];
            let coef: Complex64 = q.iter().zip(r.iter()).map(|(a, b)| a.conj() * b).sum();
            for i in 0..m {
                r[i] -= coef * q[i];
            }
        }
    }
    Ok(sel)
}

/// Greedy approximate weighted Fekete points.
pub fn greedy_fekete(mesh: &Mesh, basis: &GradedBasis, w: &WeightFn) -> Result<Vec<Point>> {
    Ok(points_of(mesh, &greedy_indices(mesh, basis, w)?))
}

/// Coefficients of every candidate row in the basis formed by the selected
/// rows: column `k` solves `B c = row_k` where `B` has the selected rows as
/// columns. Entry `c[j]` is the factor by which `W` changes when selected
/// point `j` is replaced by candidate `k`.
fn coefficients(cand: &Candidates, sel: &[usize]) -> Option<Vec<Complex64>> {
    let m = cand.m;
    let mut b = vec![Complex64::new(0.0, 0.0); m * m];
    for (j, &k) in sel.iter().enumerate() {
        for (i, v) in cand.row(k).iter().enumerate() {
            b[i * m + j] = *v;
        }
    }
    let lu = Lu::factor(b, m);
    if lu.is_singular() {
        return None;
    }
    let mut c = Vec::with_capacity(m * cand.len());
    let mut x = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..cand.len() {
        x.copy_from_slice(cand.row(k));
        lu.solve(&mut x);
        c.extend_from_slice(&x);
    }
    Some(c)
}

/// Single-point exchange search from `start` (mesh indices).
pub fn exchange_refine_indices(
    start: &[usize],
    mesh: &Mesh,
    basis: &GradedBasis,
    w: &WeightFn,
    max_sweeps: usize,
) -> Result<Vec<usize>> {
    let cand = Candidates::build(mesh, basis, w)?;
    let m = cand.m;
    if start.len() != m {
        return Err(Error::PointCount {
            expected: m,
            found: start.len(),
        });
    }
    let mut sel = Vec::with_capacity(m);
    for &i in start {
        match cand.idx.binary_search(&i) {
            Ok(k) => sel.push(k),
            // a zero-weight or foreign point: nothing to refine from
            Err(_) => return Ok(start.to_vec()),
        }
    }
    let mut current = log_w(mesh, basis, w, start);
    if current == f64::NEG_INFINITY {
        return Ok(start.to_vec());
    }
    for _ in 0..max_sweeps {
        let Some(mut coef) = coefficients(&cand, &sel) else {
            break;
        };
        let mut improved = false;
        for j in 0..m {
            let mut best = None;
            let mut best_ratio = 1.0 + EXCHANGE_GAIN;
            for k in 0..cand.len() {
                let r = coef[k * m + j].norm();
                if r > best_ratio {
                    best_ratio = r;
                    best = Some(k);
                }
            }
            let Some(k) = best else { continue };
            if sel.contains(&k) {
                continue;
            }
            let mut trial = sel.clone();
            trial[j] = k;
            let trial_mesh: Vec<usize> = trial.iter().map(|&t| cand.idx[t]).collect();
            let value = log_w(mesh, basis, w, &trial_mesh);
            if value <= current {
                continue;
            }
            // Column-replacement update of all coefficients.
            let piv: Vec<Complex64> = coef[k * m..(k + 1) * m].to_vec();
            for y in 0..cand.len() {
                let col = &mut coef[y * m..(y + 1) * m];
                let cj = col[j] / piv[j];
                for i in 0..m {
                    if i != j {
                        col[i] -= piv[i] * cj;
                    }
                }
                col[j] = cj;
            }
            sel = trial;
            current = value;
            improved = true;
        }
        if !improved {
            break;
        }
    }
    Ok(sel.into_iter().map(|k| cand.idx[k]).collect())
}

/// Single-point exchange refinement of points taken from `mesh`.
pub fn exchange_refine(
    pts: &[Point],
    mesh: &Mesh,
    basis: &GradedBasis,
    w: &WeightFn,
    max_sweeps: usize,
) -> Result<Vec<Point>> {
    let idx = mesh_indices(mesh, pts)?;
    Ok(points_of(
        mesh,
        &exchange_refine_indices(&idx, mesh, basis, w, max_sweeps)?,
    ))
}

/// Positions of `pts` in `mesh`, by exact coordinate match.
pub fn mesh_indices(mesh: &Mesh, pts: &[Point]) -> Result<Vec<usize>> {
    pts.iter()
        .map(|p| {
            mesh.points()
                .iter()
                .position(|q| q == p)
                .ok_or_else(|| Error::param("points", "not taken from the mesh"))
        })
        .collect()
}

/// Number of `k`-subsets of `n` items, as a float.
pub fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64)
}

/// Exact maximizer of `|W|` over all `m_n`-subsets of the mesh; indices in
/// ascending order.
pub fn brute_force_indices(mesh: &Mesh, basis: &GradedBasis, w: &WeightFn) -> Result<Vec<usize>> {
    let m = basis.len();
    let count = binomial_f64(mesh.len(), m);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::GuardExceeded {
            count,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let cand = Candidates::build(mesh, basis, w)?;
    let n = cand.len();
    let mut comb: Vec<usize> = (0..m).collect();
    let mut best = comb.clone();
    let mut best_val = f64::NEG_INFINITY;
    loop {
        let v = cand.log_det_f64(&comb);
        if v > best_val {
            best_val = v;
            best.copy_from_slice(&comb);
        }
        // next combination in lexicographic order
        let mut i = m;
        while i > 0 && comb[i - 1] == i - 1 + n - m {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        comb[i - 1] += 1;
        for j in i..m {
            comb[j] = comb[j - 1] + 1;
        }
    }
    if best_val == f64::NEG_INFINITY {
        return Err(Error::NotUnisolvent { selected: 0, needed: m });
    }
    Ok(best.into_iter().map(|k| cand.idx[k]).collect())
}

pub fn brute_force_fekete(mesh: &Mesh, basis: &GradedBasis, w: &WeightFn) -> Result<Vec<Point>> {
    Ok(points_of(mesh, &brute_force_indices(mesh, basis, w)?))
}

/// Run an extractor; returns mesh indices.
pub fn extract(mesh: &Mesh, basis: &GradedBasis, w: &WeightFn, extractor: Extractor) -> Result<Vec<usize>> {
    match extractor {
        Extractor::Greedy => greedy_indices(mesh, basis, w),
        Extractor::Exchange { max_sweeps } => {
            let start = greedy_indices(mesh, basis, w)?;
            exchange_refine_indices(&start, mesh, basis, w, max_sweeps)
        }
        Extractor::BruteForce => brute_force_indices(mesh, basis, w),
    }
}

/// Parameters of an AAWF array run.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ArraySpec {
    pub shape: Shape,
    pub resolution: usize,
    pub weight: WeightFn,
    pub eps: EpsSchedule,
    pub n_min: usize,
    pub n_max: usize,
    pub extractor: Extractor,
    /// Finite-`n` tolerance on near-maximality, in `[0, 1)`.
    pub slack: f64,
}

impl ArraySpec {
    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        if !(0.0..1.0).contains(&self.slack) {
            return Err(Error::param("slack", "must lie in [0, 1)"));
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(Error::param("n range", "need 1 <= nmin <= nmax"));
        }
        if self.resolution < 2 {
            return Err(Error::param("resolution", "must be >= 2"));
        }
        Ok(())
    }
}

/// One degree of an AAWF array.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FeketeRecord {
    pub n: usize,
    pub mesh_label: String,
    pub epsilon: f64,
    pub points: Vec<Point>,
    /// `log|W|` of the recorded points.
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_ext::scalar"))]
    pub log_abs_w: f64,
    /// `|W|^{1/l_n}` of the recorded points.
    pub delta: f64,
    /// `delta_n^w` estimate on the `K_n` mesh that the record is held to.
    pub delta_reference: f64,
    /// `(1 - slack) * delta_reference`.
    pub threshold: f64,
    /// Set when `delta < threshold`.
    pub flagged: bool,
    /// Points farther than `1e-12` from `K`.
    pub outside: usize,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FeketeArray {
    pub spec: ArraySpec,
    pub records: Vec<FeketeRecord>,
    /// The diagonal sequence `delta_n^w(K_n)` is nonincreasing within slack.
    pub diagonal_trend_consistent: bool,
}

const OUTSIDE_TOL: f64 = 1e-12;

impl FeketeArray {
    /// Replace point `j` of record `record`, recompute `|W|` and re-check the
    /// slack threshold. The new point need not lie on the mesh.
    pub fn replace_point(&mut self, record: usize, j: usize, point: Point) -> Result<()> {
        let shape = self.spec.shape.clone();
        let w = self.spec.weight.clone();
        let rec = self
            .records
            .get_mut(record)
            .ok_or_else(|| Error::param("record", "index out of range"))?;
        if j >= rec.points.len() {
            return Err(Error::param("point", "index out of range"));
        }
        let basis = GradedBasis::new(shape.dim(), rec.n)?;
        rec.points[j] = point;
        crate::vandermonde::check_points(&basis, &rec.points)?;
        rec.log_abs_w = weighted_unchecked(&basis, &w, &rec.points).log_abs();
        rec.delta = delta_from_log(rec.log_abs_w, basis.l());
        rec.flagged = !(rec.delta >= rec.threshold);
        rec.outside = rec.points.iter().filter(|p| shape.distance(p) > OUTSIDE_TOL).count();
        Ok(())
    }
}

fn trend_consistent(records: &[FeketeRecord], slack: f64) -> bool {
    records.windows(2).all(|r| r[1].delta <= r[0].delta * (1.0 + slack))
}

/// Build the record for degree `n` from already extracted mesh indices.
pub(crate) fn record_for(
    spec: &ArraySpec,
    mesh: &Mesh,
    basis: &GradedBasis,
    idx: &[usize],
    reference: Option<f64>,
) -> FeketeRecord {
    let points = points_of(mesh, idx);
    let log_abs_w = weighted_unchecked(basis, &spec.weight, &points).log_abs();
    let delta = delta_from_log(log_abs_w, basis.l());
    let delta_reference = reference.unwrap_or(delta).max(delta);
    let threshold = (1.0 - spec.slack) * delta_reference;
    let outside = points.iter().filter(|p| spec.shape.distance(p) > OUTSIDE_TOL).count();
    FeketeRecord {
        n: basis.degree(),
        mesh_label: mesh.label().into(),
        epsilon: mesh.epsilon(),
        points,
        log_abs_w,
        delta,
        delta_reference,
        threshold,
        flagged: !(delta >= threshold),
        outside,
    }
}

/// One approximate weighted Fekete tuple per degree, the `n`-th one taken
/// from the mesh of `K_n`.
pub fn aawf_array(spec: &ArraySpec) -> Result<FeketeArray> {
    spec.validate()?;
    let mut records = Vec::with_capacity(spec.n_max - spec.n_min + 1);
    for n in spec.n_min..=spec.n_max {
        let rec = (|| {
            let mesh = neighborhood_mesh(&spec.shape, spec.eps.eps(n), spec.resolution)?;
            let basis = GradedBasis::new(spec.shape.dim(), n)?;
            let idx = extract(&mesh, &basis, &spec.weight, spec.extractor)?;
            Ok(record_for(spec, &mesh, &basis, &idx, None))
        })()
        .map_err(Error::at_degree(n))?;
        records.push(rec);
    }
    let diagonal_trend_consistent = trend_consistent(&records, spec.slack);
    Ok(FeketeArray {
        spec: spec.clone(),
        records,
        diagonal_trend_consistent,
    })
}
