//! Reference equilibrium measures, polynomial moments and weak-* discrepancy,
//! smoothed weighted energies (`d = 1`), and per-degree scans of the
//! diameters and empirical measures of AAWF arrays.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

// Float math in no_std builds; unused once std is linked.
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::basis::GradedBasis;
use crate::domains::{build_mesh, neighborhood_mesh, Shape, WeightFn, WeightSpec};
use crate::fekete::{aawf_array, exchange_refine_indices, extract, ArraySpec, Extractor};
use crate::gram::DiscreteMeasure;
use crate::linalg::Lu;
use crate::vandermonde::{delta_from_log, weighted_unchecked};
use crate::{Error, Point, Result};

pub const DEFAULT_MOMENT_DEGREE: usize = 4;
/// Circle quadrature nodes for smoothed energies; results are checked
/// against twice as many.
pub const ENERGY_NODES: usize = 64;
pub const ENERGY_QUADRATURE_TOL: f64 = 1e-6;
/// Radial bins of the gaussian-disk oracle.
pub const RADIAL_BINS: usize = 400;

/// Anything with complex moments `integral z^alpha conj(z)^beta`.
pub trait Moments {
    fn dim(&self) -> usize;
    fn moment(&self, alpha: &[u32], beta: &[u32]) -> Complex64;
}

fn mono(z: &[Complex64], alpha: &[u32], beta: &[u32]) -> Complex64 {
    let mut v = Complex64::new(1.0, 0.0);
    for (j, zj) in z.iter().enumerate() {
        v *= zj.powu(alpha[j]) * zj.conj().powu(beta[j]);
    }
    v
}

impl Moments for DiscreteMeasure {
    fn dim(&self) -> usize {
        DiscreteMeasure::dim(self)
    }

    fn moment(&self, alpha: &[u32], beta: &[u32]) -> Complex64 {
        self.atoms()
            .iter()
            .zip(self.probs())
            .map(|(a, p)| mono(a, alpha, beta) * p)
            .sum()
    }
}

/// Equilibrium measure known through its moments.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum EquilibriumReference {
    /// `dx / (pi sqrt(h^2 - (x - c)^2))` on `[c - h, c + h]`.
    Arcsine { center: f64, half_width: f64 },
    /// Normalized arc length on `|z| = radius`.
    Circle { radius: f64 },
    /// Rotation-invariant measure with mass `masses[i]` spread over the
    /// circle `|z| = radii[i]`.
    Radial {
        radii: Vec<f64>,
        masses: Vec<f64>,
        support_radius: f64,
    },
    /// Product of univariate factors, one per coordinate.
    Product { factors: Vec<EquilibriumReference> },
}

fn binom(n: u32, k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64)
}

impl EquilibriumReference {
    pub fn arcsine(a: f64, b: f64) -> Self {
        EquilibriumReference::Arcsine {
            center: (a + b) / 2.0,
            half_width: (b - a) / 2.0,
        }
    }

    pub fn label(&self) -> String {
        match self {
            EquilibriumReference::Arcsine { center, half_width } => {
                format!("arcsine[{}, {}]", center - half_width, center + half_width)
            }
            EquilibriumReference::Circle { radius } => format!("circle(r={radius})"),
            EquilibriumReference::Radial {
                support_radius, radii, ..
            } => {
                format!("radial({} bins, support r={support_radius:.6})", radii.len())
            }
            EquilibriumReference::Product { factors } => {
                let parts: Vec<String> = factors.iter().map(|f| f.label()).collect();
                parts.join(" x ")
            }
        }
    }

    /// Where the reference comes from.
    pub fn provenance(&self) -> &'static str {
        match self {
            EquilibriumReference::Arcsine { .. } => "closed form",
            EquilibriumReference::Circle { .. } => "closed form",
            EquilibriumReference::Radial { .. } => "radial weighted-energy minimization",
            EquilibriumReference::Product { .. } => "product of univariate references",
        }
    }

    /// `integral |z|^2` (summed over coordinates).
    pub fn second_moment(&self) -> f64 {
        let d = self.dim();
        (0..d)
            .map(|j| {
                let mut e = vec![0u32; d];
                e[j] = 1;
                self.moment(&e, &e).re
            })
            .sum()
    }

    fn moment1(&self, a: u32, b: u32) -> Complex64 {
        let real = |v: f64| Complex64::new(v, 0.0);
        match self {
            EquilibriumReference::Arcsine { center, half_width } => {
                let p = a + b;
                let mut s = 0.0;
                for k in (0..=p).step_by(2) {
                    let ey = binom(k, k / 2) / 4f64.powi(k as i32 / 2);
                    s += binom(p, k) * center.powi((p - k) as i32) * half_width.powi(k as i32) * ey;
                }
                real(s)
            }
            EquilibriumReference::Circle { radius } => {
                if a == b {
                    real(radius.powi(2 * a as i32))
                } else {
                    real(0.0)
                }
            }
            EquilibriumReference::Radial { radii, masses, .. } => {
                if a == b {
                    real(radii.iter().zip(masses).map(|(r, m)| m * r.powi(2 * a as i32)).sum())
                } else {
                    real(0.0)
                }
            }
            EquilibriumReference::Product { .. } => unreachable!("products are not univariate"),
        }
    }
}

impl Moments for EquilibriumReference {
    fn dim(&self) -> usize {
        match self {
            EquilibriumReference::Product { factors } => factors.len(),
            _ => 1,
        }
    }

    fn moment(&self, alpha: &[u32], beta: &[u32]) -> Complex64 {
        match self {
            EquilibriumReference::Product { factors } => factors
                .iter()
                .enumerate()
                .map(|(j, f)| f.moment1(alpha[j], beta[j]))
                .product(),
            _ => self.moment1(alpha[0], beta[0]),
        }
    }
}

/// Equilibrium measure of `z` on `[0, R]`-radial measures for `Q = c |z|^2`:
/// minimizes `sum nu_i nu_j (-log max(r_i, r_j)) + 2 c sum nu_i r_i^2` over
/// the probability simplex, with `bins` circles at the midpoints of `[0, R]`.
pub fn radial_equilibrium(c: f64, big_r: f64, bins: usize) -> Result<EquilibriumReference> {
    if !(c > 0.0) || !(big_r > 0.0) || bins < 2 {
        return Err(Error::param("radial oracle", "needs c > 0, R > 0 and at least 2 bins"));
    }
    let dr = big_r / bins as f64;
    let radii: Vec<f64> = (0..bins).map(|i| (i as f64 + 0.5) * dr).collect();
    let a = |i: usize, j: usize| -radii[i].max(radii[j]).ln();
    let grad_const: Vec<f64> = radii.iter().map(|r| 2.0 * c * r * r).collect();
    let mut active = vec![true; bins];
    let mut nu = vec![0.0; bins];
    for _ in 0..4 * bins {
        let idx: Vec<usize> = (0..bins).filter(|&i| active[i]).collect();
        let k = idx.len();
        // [2A 1; 1^T 0] [nu; -lambda] = [-2c r^2; 1]
        let sz = k + 1;
        let mut mat = vec![Complex64::new(0.0, 0.0); sz * sz];
        let mut rhs = vec![Complex64::new(0.0, 0.0); sz];
        for (p, &i) in idx.iter().enumerate() {
            for (q, &j) in idx.iter().enumerate() {
                mat[p * sz + q] = Complex64::new(2.0 * a(i, j), 0.0);
            }
            mat[p * sz + k] = Complex64::new(1.0, 0.0);
            mat[k * sz + p] = Complex64::new(1.0, 0.0);
            rhs[p] = Complex64::new(-grad_const[i], 0.0);
        }
        rhs[k] = Complex64::new(1.0, 0.0);
        let lu = Lu::factor(mat, sz);
        if lu.is_singular() {
            return Err(Error::param("radial oracle", "singular KKT system"));
        }
        lu.solve(&mut rhs);
        let lambda = -rhs[k].re;
        nu.iter_mut().for_each(|v| *v = 0.0);
        for (p, &i) in idx.iter().enumerate() {
            nu[i] = rhs[p].re;
        }
        if idx.iter().any(|&i| nu[i] < 0.0) {
            for &i in &idx {
                if nu[i] < 0.0 {
                    active[i] = false;
                }
            }
            continue;
        }
        // KKT on the inactive bins: gradient must not undercut lambda.
        let mut worst = None;
        let mut worst_v = -1e-12 * lambda.abs().max(1.0);
        for i in (0..bins).filter(|&i| !active[i]) {
            let g: f64 = (0..bins).map(|j| 2.0 * a(i, j) * nu[j]).sum::<f64>() + grad_const[i] - lambda;
            if g < worst_v {
                worst_v = g;
                worst = Some(i);
            }
        }
        match worst {
            Some(i) => active[i] = true,
            None => {
                let support_radius = (0..bins)
                    .filter(|&i| nu[i] > 0.0)
                    .map(|i| radii[i] + dr / 2.0)
                    .fold(0.0, f64::max);
                return Ok(EquilibriumReference::Radial {
                    radii,
                    masses: nu,
                    support_radius,
                });
            }
        }
    }
    Err(Error::param("radial oracle", "active set did not settle"))
}

/// Reference equilibrium measure for `(K, Q)` where one is available.
pub fn reference_for(shape: &Shape, w: &WeightFn) -> Result<EquilibriumReference> {
    let missing = || Error::MissingReference(format!("{} with weight {}", shape.label(), w.label()));
    match (shape, w.spec()) {
        (Shape::Interval { a, b }, WeightSpec::Constant) => Ok(EquilibriumReference::arcsine(*a, *b)),
        // Q is constant on a circle, so the weight does not move the measure.
        (Shape::Circle { radius }, WeightSpec::Constant | WeightSpec::Gaussian { .. }) => {
            Ok(EquilibriumReference::Circle { radius: *radius })
        }
        (Shape::Disk { radius }, WeightSpec::Constant) => Ok(EquilibriumReference::Circle { radius: *radius }),
        (Shape::Disk { radius }, WeightSpec::Gaussian { c }) => radial_equilibrium(*c, *radius, RADIAL_BINS),
        (Shape::Square, WeightSpec::Constant) => Ok(EquilibriumReference::Product {
            factors: vec![EquilibriumReference::arcsine(-1.0, 1.0); 2],
        }),
        (Shape::Bidisk, WeightSpec::Constant) => Ok(EquilibriumReference::Product {
            factors: vec![EquilibriumReference::Circle { radius: 1.0 }; 2],
        }),
        _ => Err(missing()),
    }
}

/// Uniform probability measure on the points.
pub fn empirical_measure(pts: &[Point]) -> Result<DiscreteMeasure> {
    DiscreteMeasure::uniform(pts.to_vec())
}

/// All multi-indices of total degree at most `s` in `d` variables.
fn multi_indices(d: usize, s: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for v in &out {
            let used: u32 = v.iter().sum();
            for e in 0..=(s as u32 - used) {
                let mut w = v.clone();
                w.push(e);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

/// `((alpha, beta), moment)` for all `|alpha| + |beta| <= s`.
pub fn moment_vector(mu: &impl Moments, s: usize) -> Vec<((Vec<u32>, Vec<u32>), Complex64)> {
    let d = mu.dim();
    let both = multi_indices(2 * d, s);
    both.into_iter()
        .map(|ab| {
            let (a, b) = ab.split_at(d);
            let v = mu.moment(a, b);
            ((a.to_vec(), b.to_vec()), v)
        })
        .collect()
}

/// `max |moment(mu) - moment(ref)|` over `|alpha| + |beta| <= s`.
pub fn weak_star_discrepancy(mu: &impl Moments, reference: &impl Moments, s: usize) -> Result<f64> {
    if mu.dim() != reference.dim() {
        return Err(Error::DimensionMismatch {
            expected: reference.dim(),
            found: mu.dim(),
        });
    }
    let d = mu.dim();
    Ok(multi_indices(2 * d, s)
        .iter()
        .map(|ab| {
            let (a, b) = ab.split_at(d);
            (mu.moment(a, b) - reference.moment(a, b)).norm()
        })
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SmoothedEnergy {
    pub value: f64,
    /// Change when the circle quadrature is doubled.
    pub quadrature_gap: f64,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; k];
    let mut wt = vec![0.0; k];
    for i in 0..k {
        let mut t = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * t * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = k as f64 * (t * p1 - p0) / (t * t - 1.0);
            let step = p1 / dp;
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = t;
        wt[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, wt)
}

/// Average over the circle of radius `r` about `a` of
/// `-log max(|z - b|, r)`, the potential of the circle measure about `b`,
/// with `dist = |a - b|`. Where `|z - b| < r` the integrand is the constant
/// `-log r`; the rest of the arc is integrated by Gauss-Legendre.
fn circle_pair(dist: f64, r: f64, gl: &(Vec<f64>, Vec<f64>)) -> f64 {
    if dist >= 2.0 * r {
        // harmonic inside the circle: mean value property
        return -dist.ln();
    }
    let theta0 = (-dist / (2.0 * r)).acos();
    let half = 0.5 * theta0;
    let arc: f64 =
        gl.0.iter()
            .zip(&gl.1)
            .map(|(&x, &wx)| {
                let th = half * (x + 1.0);
                wx * half * 0.5 * (dist * dist + r * r + 2.0 * dist * r * th.cos()).ln()
            })
            .sum();
    -((PI - theta0) * r.ln() + arc) / PI
}

fn energy_with_nodes(atoms: &[Complex64], probs: &[f64], w: &WeightFn, r: f64, k: usize) -> f64 {
    let nodes: Vec<Complex64> = (0..k)
        .map(|t| Complex64::from_polar(r, 2.0 * PI * t as f64 / k as f64))
        .collect();
    let gl = gauss_legendre(k);
    let mut total = 0.0;
    for (j, (&aj, &pj)) in atoms.iter().zip(probs).enumerate() {
        let q_avg = nodes.iter().map(|v| w.q(&[aj + v])).sum::<f64>() / k as f64;
        total += pj * pj * (1.0 / r).ln() + 2.0 * pj * q_avg;
        for (i, (&ai, &pi)) in atoms.iter().zip(probs).enumerate() {
            if i != j {
                total += pi * pj * circle_pair((aj - ai).norm(), r, &gl);
            }
        }
    }
    total
}

/// Weighted energy `I^w` of `mu` with every atom spread uniformly over a
/// circle of radius `r` about it.
pub fn smoothed_energy(mu: &DiscreteMeasure, w: &WeightFn, r: f64) -> Result<SmoothedEnergy> {
    if mu.dim() != 1 {
        return Err(Error::RequiresUnivariate(mu.dim()));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::param("r", "smoothing radius must be > 0"));
    }
    let atoms: Vec<Complex64> = mu.atoms().iter().map(|a| a[0]).collect();
    let value = energy_with_nodes(&atoms, mu.probs(), w, r, ENERGY_NODES);
    let doubled = energy_with_nodes(&atoms, mu.probs(), w, r, 2 * ENERGY_NODES);
    let quadrature_gap = (value - doubled).abs();
    if !(quadrature_gap < ENERGY_QUADRATURE_TOL) {
        return Err(Error::QuadratureUnresolved(quadrature_gap));
    }
    Ok(SmoothedEnergy { value, quadrature_gap })
}

/// Smoothing radius `min(eps_n, 1/n^2)`, or `1/n^2` on `K` itself.
pub fn smoothing_radius(eps: f64, n: usize) -> f64 {
    let base = 1.0 / (n as f64 * n as f64);
    if eps > 0.0 {
        eps.min(base)
    } else {
        base
    }
}

/// One degree of a [`ConvergenceReport`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ConvergenceRow {
    pub n: usize,
    pub epsilon: f64,
    /// `delta_n^w` estimate on the `K_n` mesh.
    pub delta: f64,
    /// `delta_n^w` estimate on the `K` mesh (diameter scans only).
    pub delta_base: Option<f64>,
    pub discrepancy: Option<f64>,
    /// `integral |z|^2 d mu_n`.
    pub second_moment: Option<f64>,
    pub energy: Option<f64>,
    /// Points of the tuple outside `K`.
    pub outside: usize,
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ConvergenceReport {
    pub shape: String,
    pub weight: String,
    pub extractor: Extractor,
    pub moment_degree: Option<usize>,
    pub reference: Option<String>,
    /// `integral |z|^2` of the reference measure.
    pub reference_second_moment: Option<f64>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn row(&self, n: usize) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

const OUTSIDE_TOL: f64 = 1e-12;

fn log_w_of(mesh: &crate::domains::Mesh, basis: &GradedBasis, w: &WeightFn, idx: &[usize]) -> f64 {
    let pts: Vec<Point> = idx.iter().map(|&i| mesh.points()[i].clone()).collect();
    weighted_unchecked(basis, w, &pts).log_abs()
}

/// `delta_n^w` on the `K` mesh and on the `K_n` mesh for each degree. The
/// `K_n` search is also warm-started from the `K` tuple, so the `K_n` column
/// never falls below the `K` column.
pub fn diagonal_diameter_scan(spec: &ArraySpec) -> Result<ConvergenceReport> {
    spec.validate()?;
    let d = spec.shape.dim();
    let base = build_mesh(&spec.shape, spec.resolution)?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for n in spec.n_min..=spec.n_max {
        let row = (|| {
            let basis = GradedBasis::new(d, n)?;
            let w = &spec.weight;
            let idx_k = extract(&base, &basis, w, spec.extractor)?;
            let lk = log_w_of(&base, &basis, w, &idx_k);
            let eps = spec.eps.eps(n);
            let (ln, idx_n, mesh_n) = if eps == 0.0 {
                (lk, idx_k.clone(), base.clone())
            } else {
                let mesh = neighborhood_mesh(&spec.shape, eps, spec.resolution)?;
                // base points are a prefix of the neighborhood mesh
                let mut best = (lk, idx_k.clone());
                let mut consider = |idx: Vec<usize>| {
                    let v = log_w_of(&mesh, &basis, w, &idx);
                    if v > best.0 {
                        best = (v, idx);
                    }
                };
                consider(extract(&mesh, &basis, w, spec.extractor)?);
                if let Extractor::Exchange { max_sweeps } = spec.extractor {
                    consider(exchange_refine_indices(&idx_k, &mesh, &basis, w, max_sweeps)?);
                }
                (best.0, best.1, mesh)
            };
            let outside = idx_n
                .iter()
                .filter(|&&i| spec.shape.distance(&mesh_n.points()[i]) > OUTSIDE_TOL)
                .count();
            Ok(ConvergenceRow {
                n,
                epsilon: eps,
                delta: delta_from_log(ln, basis.l()),
                delta_base: Some(delta_from_log(lk, basis.l())),
                discrepancy: None,
                second_moment: None,
                energy: None,
                outside,
                flags: Vec::new(),
            })
        })()
        .map_err(Error::at_degree(n))?;
        rows.push(row);
    }
    for i in 0..rows.len() {
        let mut flags = Vec::new();
        if i > 0 {
            if rows[i].delta > rows[i - 1].delta * (1.0 + spec.slack) {
                flags.push("trend".into());
            }
            if rows[i].delta_base > rows[i - 1].delta_base.map(|v| v * (1.0 + spec.slack)) {
                flags.push("trend-base".into());
            }
        }
        if Some(rows[i].delta) < rows[i].delta_base {
            flags.push("below-base".into());
        }
        rows[i].flags = flags;
    }
    Ok(ConvergenceReport {
        shape: spec.shape.label(),
        weight: spec.weight.label().into(),
        extractor: spec.extractor,
        moment_degree: None,
        reference: None,
        reference_second_moment: None,
        rows,
    })
}

/// AAWF arrays on the `K_n` meshes, with the weak-* discrepancy of their
/// empirical measures against the equilibrium reference, second moments, and
/// (for `d = 1`) smoothed energies.
pub fn theorem_maint_experiment(spec: &ArraySpec, s: usize) -> Result<ConvergenceReport> {
    if s == 0 {
        return Err(Error::param("moment degree", "must be >= 1"));
    }
    let reference = reference_for(&spec.shape, &spec.weight)?;
    let array = aawf_array(spec)?;
    let d = spec.shape.dim();
    let mut rows = Vec::with_capacity(array.records.len());
    for rec in &array.records {
        let row = (|| {
            let mu = empirical_measure(&rec.points)?;
            let energy = if d == 1 {
                Some(smoothed_energy(&mu, &spec.weight, smoothing_radius(rec.epsilon, rec.n))?.value)
            } else {
                None
            };
            let mut flags = Vec::new();
            if rec.flagged {
                flags.push("below-threshold".into());
            }
            Ok(ConvergenceRow {
                n: rec.n,
                epsilon: rec.epsilon,
                delta: rec.delta,
                delta_base: None,
                discrepancy: Some(weak_star_discrepancy(&mu, &reference, s)?),
                second_moment: Some(mu.integrate(|z| z.iter().map(|v| v.norm_sqr()).sum())),
                energy,
                outside: rec.outside,
                flags,
            })
        })()
        .map_err(Error::at_degree(rec.n))?;
        rows.push(row);
    }
    Ok(ConvergenceReport {
        shape: spec.shape.label(),
        weight: spec.weight.label().into(),
        extractor: spec.extractor,
        moment_degree: Some(s),
        reference: Some(reference.label()),
        reference_second_moment: Some(reference.second_moment()),
        rows,
    })
}
