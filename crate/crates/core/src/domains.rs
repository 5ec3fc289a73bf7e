//! Finite meshes standing in for compact sets `K` and their closed
//! neighborhoods `K_n = {z : dist(z, K) <= eps_n}`, plus admissible weights
//! `w = exp(-Q)`.
//!
//! Every supremum over a continuum in this crate is a maximum over a [`Mesh`].
//! Neighborhood meshes always contain the base mesh of the same resolution, so
//! `K`-mesh subset `K_n`-mesh holds exactly and set-monotone quantities can be
//! compared row by row.

use alloc::collections::BTreeSet;
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

use crate::{Error, Point, Result};

/// Supported compact sets.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum Shape {
    /// Real segment `[a, b]` inside `C`.
    Interval { a: f64, b: f64 },
    /// Circle `|z| = radius` in `C`.
    Circle { radius: f64 },
    /// Closed disk `|z| <= radius` in `C`.
    Disk { radius: f64 },
    /// Real square `[-1, 1]^2` inside `C^2`.
    Square,
    /// Closed unit bidisk `{|z_1| <= 1, |z_2| <= 1}` in `C^2`.
    Bidisk,
    /// Real simplex `{x, y >= 0, x + y <= 1}` inside `C^2`.
    Simplex,
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Interval { .. } | Shape::Circle { .. } | Shape::Disk { .. } => 1,
            Shape::Square | Shape::Bidisk | Shape::Simplex => 2,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Shape::Interval { a, b } => format!("interval[{a},{b}]"),
            Shape::Circle { radius } => format!("circle(r={radius})"),
            Shape::Disk { radius } => format!("disk(r={radius})"),
            Shape::Square => "square".into(),
            Shape::Bidisk => "bidisk".into(),
            Shape::Simplex => "simplex".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Shape::Interval { a, b } if !(a.is_finite() && b.is_finite() && a < b) => {
                Err(Error::UnknownShape(format!("interval needs a < b, got [{a}, {b}]")))
            }
            Shape::Circle { radius } | Shape::Disk { radius } if !(radius.is_finite() && radius > 0.0) => {
                Err(Error::UnknownShape(format!("radius must be positive, got {radius}")))
            }
            _ => Ok(()),
        }
    }

    /// Euclidean distance from `z` to the shape.
    pub fn distance(&self, z: &[Complex64]) -> f64 {
        match *self {
            Shape::Interval { a, b } => interval_distance(z[0], a, b),
            Shape::Circle { radius } => (z[0].norm() - radius).abs(),
            Shape::Disk { radius } => (z[0].norm() - radius).max(0.0),
            Shape::Square => z
                .iter()
                .map(|&c| interval_distance(c, -1.0, 1.0).powi(2))
                .sum::<f64>()
                .sqrt(),
            Shape::Bidisk => z.iter().map(|c| (c.norm() - 1.0).max(0.0).powi(2)).sum::<f64>().sqrt(),
            Shape::Simplex => {
                let imag: f64 = z.iter().map(|c| c.im * c.im).sum();
                let r = triangle_distance(z[0].re, z[1].re);
                (imag + r * r).sqrt()
            }
        }
    }
}

fn interval_distance(z: Complex64, a: f64, b: f64) -> f64 {
    let dx = if z.re < a {
        a - z.re
    } else if z.re > b {
        z.re - b
    } else {
        0.0
    };
    dx.hypot(z.im)
}

fn segment_distance(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (vx, vy) = (bx - ax, by - ay);
    let t = (((px - ax) * vx + (py - ay) * vy) / (vx * vx + vy * vy)).clamp(0.0, 1.0);
    (px - ax - t * vx).hypot(py - ay - t * vy)
}

fn triangle_distance(x: f64, y: f64) -> f64 {
    if x >= 0.0 && y >= 0.0 && x + y <= 1.0 {
        return 0.0;
    }
    segment_distance(x, y, 0.0, 0.0, 1.0, 0.0)
        .min(segment_distance(x, y, 0.0, 0.0, 0.0, 1.0))
        .min(segment_distance(x, y, 1.0, 0.0, 0.0, 1.0))
}

/// A finite point cloud discretizing `K` (`epsilon = 0`) or `K_n`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Mesh {
    points: Vec<Point>,
    label: String,
    epsilon: f64,
    fill_distance: f64,
}

impl Mesh {
    /// Wrap an explicit point list. Points must be nonempty, of one dimension
    /// and pairwise distinct.
    pub fn from_points(points: Vec<Point>, label: String, epsilon: f64, fill_distance: f64) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::param("mesh", "no points"));
        };
        let d = first.len();
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for p in &points {
            if !seen.insert(exact_key(p)) {
                return Err(Error::param("mesh", "duplicate points"));
            }
        }
        if !(epsilon >= 0.0) {
            return Err(Error::param("epsilon", "must be >= 0"));
        }
        Ok(Mesh {
            points,
            label,
            epsilon,
            fill_distance,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn fill_distance(&self) -> f64 {
        self.fill_distance
    }

    /// Mesh restricted to the listed indices, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Result<Mesh> {
        Mesh::from_points(
            idx.iter().map(|&i| self.points[i].clone()).collect(),
            format!("{}[subset]", self.label),
            self.epsilon,
            self.fill_distance,
        )
    }
}

fn exact_key(p: &[Complex64]) -> Vec<u64> {
    p.iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]).collect()
}

fn rounded_key(p: &[Complex64]) -> Vec<i64> {
    p.iter()
        .flat_map(|c| [(c.re * 1e12).round() as i64, (c.im * 1e12).round() as i64])
        .collect()
}

/// Drop near-duplicates (coordinates equal after rounding to `1e-12`),
/// keeping first occurrences.
fn dedup(points: Vec<Point>) -> Vec<Point> {
    let mut seen = BTreeSet::new();
    points.into_iter().filter(|p| seen.insert(rounded_key(p))).collect()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `radius * exp(i theta)` with round-off below `1e-15` snapped to zero, so
/// quarter turns land exactly on the axes.
fn polar(radius: f64, theta: f64) -> Complex64 {
    let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
    c(radius * snap(theta.cos()), radius * snap(theta.sin()))
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < 2 {
        return Err(Error::param("resolution", format!("must be >= 2, got {resolution}")));
    }
    Ok(())
}

fn disk_points(radius: f64, resolution: usize) -> Vec<Complex64> {
    // Center plus rings k = 1..=r with 6k - 3 points: 3r^2 + 1 points total.
    let mut pts = vec![c(0.0, 0.0)];
    for k in 1..=resolution {
        let rho = radius * k as f64 / resolution as f64;
        let count = 6 * k - 3;
        for i in 0..count {
            pts.push(polar(rho, 2.0 * PI * i as f64 / count as f64));
        }
    }
    pts
}

fn disk_fill(radius: f64, resolution: usize) -> f64 {
    let dr = radius / resolution as f64;
    let arc = 2.0 * PI * radius / (6 * resolution - 3) as f64;
    (dr * 0.5).hypot(arc * 0.5)
}

/// Mesh of the shape itself.
pub fn build_mesh(shape: &Shape, resolution: usize) -> Result<Mesh> {
    shape.validate()?;
    check_resolution(resolution)?;
    let r = resolution;
    let (points, fill): (Vec<Point>, f64) = match *shape {
        Shape::Interval { a, b } => {
            let h = (b - a) / (r - 1) as f64;
            let pts = (0..r)
                .map(|i| {
                    let x = if i == r - 1 {
                        b
                    } else {
                        a + (b - a) * i as f64 / (r - 1) as f64
                    };
                    vec![c(x, 0.0)]
                })
                .collect();
            (pts, h / 2.0)
        }
        Shape::Circle { radius } => {
            let pts = (0..r)
                .map(|k| vec![polar(radius, 2.0 * PI * k as f64 / r as f64)])
                .collect();
            (pts, 2.0 * radius * (PI / (2.0 * r as f64)).sin())
        }
        Shape::Disk { radius } => (
            disk_points(radius, r).into_iter().map(|z| vec![z]).collect(),
            disk_fill(radius, r),
        ),
        Shape::Square => {
            let h = 2.0 / (r - 1) as f64;
            let xs: Vec<f64> = (0..r).map(|i| -1.0 + h * i as f64).collect();
            let mut pts = Vec::with_capacity(r * r);
            for &x in &xs {
                for &y in &xs {
                    pts.push(vec![c(x, 0.0), c(y, 0.0)]);
                }
            }
            (pts, h / core::f64::consts::SQRT_2)
        }
        Shape::Bidisk => {
            let disk = disk_points(1.0, r);
            let mut pts = Vec::with_capacity(disk.len() * disk.len());
            for &z1 in &disk {
                for &z2 in &disk {
                    pts.push(vec![z1, z2]);
                }
            }
            (pts, disk_fill(1.0, r) * core::f64::consts::SQRT_2)
        }
        Shape::Simplex => {
            let h = 1.0 / (r - 1) as f64;
            let mut pts = Vec::new();
            for i in 0..r {
                for j in 0..r - i {
                    pts.push(vec![c(i as f64 * h, 0.0), c(j as f64 * h, 0.0)]);
                }
            }
            (pts, h / core::f64::consts::SQRT_2)
        }
    };
    Mesh::from_points(points, format!("{}@{}", shape.label(), r), 0.0, fill)
}

/// Mesh of the closed `epsilon`-neighborhood of the shape. Contains the base
/// mesh of the same resolution; `epsilon = 0` returns exactly [`build_mesh`].
pub fn neighborhood_mesh(shape: &Shape, epsilon: f64, resolution: usize) -> Result<Mesh> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::param(
            "epsilon",
            format!("must be finite and >= 0, got {epsilon}"),
        ));
    }
    let base = build_mesh(shape, resolution)?;
    if epsilon == 0.0 {
        return Ok(base);
    }
    let r = resolution;
    let layers = |h: f64| ((epsilon / h).ceil() as usize).max(1);
    let mut points: Vec<Point> = base.points.clone();
    let fill;
    match *shape {
        Shape::Interval { a, b } => {
            let h = (b - a) / (r - 1) as f64;
            let l = layers(h);
            for j in 1..=l {
                let y = epsilon * j as f64 / l as f64;
                for p in &base.points {
                    points.push(vec![c(p[0].re, y)]);
                    points.push(vec![c(p[0].re, -y)]);
                }
            }
            // End caps; angles strictly inside the outer half-plane so the
            // points at +-pi/2 (already on the layers) are not repeated.
            for j in 1..=l {
                let rho = epsilon * j as f64 / l as f64;
                let count = ((PI * rho / h).ceil() as usize).max(2);
                for i in 1..count {
                    let t = PI * i as f64 / count as f64;
                    points.push(vec![c(a, 0.0) + polar(rho, PI / 2.0 + t)]);
                    points.push(vec![c(b, 0.0) + polar(rho, -PI / 2.0 + t)]);
                }
            }
            fill = (h / 2.0).hypot(epsilon / (2.0 * l as f64));
        }
        Shape::Circle { radius } => {
            let h = 2.0 * PI * radius / r as f64;
            let l = layers(h);
            let mut add_center = false;
            for j in 1..=l {
                let dr = epsilon * j as f64 / l as f64;
                for rho in [radius + dr, radius - dr] {
                    if rho <= 0.0 {
                        add_center = true;
                        continue;
                    }
                    for k in 0..r {
                        points.push(vec![polar(rho, 2.0 * PI * k as f64 / r as f64)]);
                    }
                }
            }
            if add_center {
                points.push(vec![c(0.0, 0.0)]);
            }
            fill = (h / 2.0).hypot(epsilon / (2.0 * l as f64)) * (1.0 + epsilon / radius);
        }
        Shape::Disk { radius } => {
            let h = radius / r as f64;
            let l = layers(h);
            let arc = 2.0 * PI * radius / (6 * r - 3) as f64;
            for j in 1..=l {
                let rho = radius + epsilon * j as f64 / l as f64;
                let count = ((2.0 * PI * rho / arc).ceil() as usize).max(3);
                for i in 0..count {
                    points.push(vec![polar(rho, 2.0 * PI * i as f64 / count as f64)]);
                }
            }
            fill = base.fill_distance.max((arc / 2.0).hypot(epsilon / (2.0 * l as f64)));
        }
        Shape::Square | Shape::Bidisk | Shape::Simplex => {
            // Displace every base point along each real coordinate direction.
            let h = base.fill_distance;
            let l = layers(h);
            let d = shape.dim();
            for j in 1..=l {
                let s = epsilon * j as f64 / l as f64;
                for p in &base.points {
                    for coord in 0..d {
                        for dir in [c(s, 0.0), c(-s, 0.0), c(0.0, s), c(0.0, -s)] {
                            let mut q = p.clone();
                            q[coord] += dir;
                            points.push(q);
                        }
                    }
                }
            }
            // Directions are axis-aligned only; this is a coverage estimate.
            fill = h.max(epsilon);
        }
    }
    let points = dedup(points);
    Mesh::from_points(
        points,
        format!("{}@{}+eps={}", shape.label(), r, epsilon),
        epsilon,
        fill,
    )
}

/// Neighborhood radii `eps_n`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum EpsLaw {
    /// `eps_n = 0`: the classical setting on `K` itself.
    Zero,
    /// `eps_n = eps0 / n`.
    InvN,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EpsSchedule {
    pub eps0: f64,
    pub law: EpsLaw,
}

impl EpsSchedule {
    pub const ZERO: EpsSchedule = EpsSchedule {
        eps0: 0.0,
        law: EpsLaw::Zero,
    };

    pub fn inv_n(eps0: f64) -> Result<Self> {
        if !(eps0 >= 0.0) || !eps0.is_finite() {
            return Err(Error::param("eps0", format!("must be finite and >= 0, got {eps0}")));
        }
        Ok(EpsSchedule {
            eps0,
            law: EpsLaw::InvN,
        })
    }

    pub fn eps(&self, n: usize) -> f64 {
        match self.law {
            EpsLaw::Zero => 0.0,
            EpsLaw::InvN => self.eps0 / n.max(1) as f64,
        }
    }
}

/// Weight families.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum WeightSpec {
    /// `Q = 0`.
    Constant,
    /// `Q(z) = c |z|^2`, `c > 0`.
    Gaussian { c: f64 },
    /// Tabulated `Q` values (possibly `+inf`) interpolated between nodes.
    Grid {
        nodes: Vec<Point>,
        #[cfg_attr(feature = "serde", serde(with = "crate::serde_ext"))]
        q: Vec<f64>,
    },
}

/// An admissible weight `w = exp(-Q)`.
///
/// Admissibility (upper semicontinuity and `{w > 0}` nonpluripolar) is not
/// verified; `admissible_hint` only records what the family guarantees.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct WeightFn {
    spec: WeightSpec,
    label: String,
    admissible_hint: bool,
}

/// Validate a weight family and build the evaluable weight.
pub fn make_weight(spec: WeightSpec) -> Result<WeightFn> {
    let (label, hint) = match &spec {
        WeightSpec::Constant => ("constant".into(), true),
        WeightSpec::Gaussian { c } => {
            if !(*c > 0.0) || !c.is_finite() {
                return Err(Error::param("gaussian c", format!("must be > 0, got {c}")));
            }
            (format!("gaussian(c={c})"), true)
        }
        WeightSpec::Grid { nodes, q } => {
            if nodes.is_empty() || nodes.len() != q.len() {
                return Err(Error::param(
                    "weight grid",
                    "needs equally many nodes and Q values, at least one",
                ));
            }
            let d = nodes[0].len();
            if nodes.iter().any(|p| p.len() != d) {
                return Err(Error::param("weight grid", "nodes of mixed dimension"));
            }
            if q.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
                return Err(Error::param("weight grid", "Q values must be real or +inf"));
            }
            let hint = q.iter().any(|v| v.is_finite());
            (format!("grid({} nodes)", nodes.len()), hint)
        }
    };
    Ok(WeightFn {
        spec,
        label,
        admissible_hint: hint,
    })
}

impl WeightFn {
    pub fn constant() -> WeightFn {
        make_weight(WeightSpec::Constant).expect("constant weight is valid")
    }

    pub fn gaussian(c: f64) -> Result<WeightFn> {
        make_weight(WeightSpec::Gaussian { c })
    }

    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn admissible_hint(&self) -> bool {
        self.admissible_hint
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.spec, WeightSpec::Constant)
    }

    /// External field `Q(z) = -log w(z)`, in `R u {+inf}`.
    pub fn q(&self, z: &[Complex64]) -> f64 {
        match &self.spec {
            WeightSpec::Constant => 0.0,
            WeightSpec::Gaussian { c } => c * z.iter().map(|v| v.norm_sqr()).sum::<f64>(),
            WeightSpec::Grid { nodes, q } => shepard(nodes, q, z),
        }
    }

    /// `w(z) = exp(-Q(z))`.
    pub fn w(&self, z: &[Complex64]) -> f64 {
        (-self.q(z)).exp()
    }
}

/// Inverse-distance interpolation over the four nearest nodes. A query on a
/// node returns its value; if the nearest node carries `+inf`, so does the
/// query.
fn shepard(nodes: &[Point], q: &[f64], z: &[Complex64]) -> f64 {
    let dist2 = |p: &Point| -> f64 { p.iter().zip(z).map(|(a, b)| (a - b).norm_sqr()).sum() };
    let k = nodes.len().min(4);
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    for (i, p) in nodes.iter().enumerate() {
        let d2 = dist2(p);
        let pos = best.partition_point(|&(b, _)| b <= d2);
        if pos < k {
            best.insert(pos, (d2, i));
            best.truncate(k);
        }
    }
    let (d0, i0) = best[0];
    if d0 < 1e-28 || q[i0] == f64::INFINITY {
        return q[i0];
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for &(d2, i) in &best {
        if q[i].is_finite() {
            num += q[i] / d2;
            den += 1.0 / d2;
        }
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re_parts(m: &Mesh) -> Vec<f64> {
        m.points().iter().map(|p| p[0].re).collect()
    }

    #[test]
    fn interval_equispaced() {
        let m = build_mesh(&Shape::Interval { a: -1.0, b: 1.0 }, 5).unwrap();
        assert_eq!(re_parts(&m), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(m.points().iter().all(|p| p[0].im == 0.0));
        assert_eq!(m.epsilon(), 0.0);
    }

    #[test]
    fn circle_fourth_roots() {
        let m = build_mesh(&Shape::Circle { radius: 1.0 }, 4).unwrap();
        let want = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        for (p, w) in m.points().iter().zip(want) {
            assert_eq!(p[0], w);
        }
    }

    #[test]
    fn disk_point_count_contract() {
        for r in 2..12 {
            let m = build_mesh(&Shape::Disk { radius: 1.0 }, r).unwrap();
            assert!(m.len() >= r * r && m.len() <= 4 * r * r, "r={r} len={}", m.len());
        }
    }

    #[test]
    fn bad_inputs_rejected() {
        assert!(build_mesh(&Shape::Interval { a: 1.0, b: -1.0 }, 5).is_err());
        assert!(build_mesh(&Shape::Disk { radius: -1.0 }, 5).is_err());
        assert!(build_mesh(&Shape::Square, 1).is_err());
        assert!(neighborhood_mesh(&Shape::Square, -0.1, 5).is_err());
    }

    #[test]
    fn zero_epsilon_is_identity() {
        for s in [
            Shape::Interval { a: -1.0, b: 1.0 },
            Shape::Circle { radius: 1.0 },
            Shape::Disk { radius: 2.0 },
            Shape::Square,
            Shape::Bidisk,
            Shape::Simplex,
        ] {
            assert_eq!(neighborhood_mesh(&s, 0.0, 6).unwrap(), build_mesh(&s, 6).unwrap());
        }
    }

    #[test]
    fn stadium_leaves_the_axis() {
        let s = Shape::Interval { a: -1.0, b: 1.0 };
        let m = neighborhood_mesh(&s, 0.1, 21).unwrap();
        assert!(m.points().iter().any(|p| p[0].im != 0.0));
        assert!(m.points().iter().all(|p| p[0].im.abs() <= 0.1 + 1e-15));
        assert!(m.points().iter().all(|p| s.distance(p) <= 0.1 * (1.0 + 1e-12)));
        // reaches the far tips of the caps
        assert!(m.points().iter().any(|p| (p[0].re + 1.1).abs() < 1e-12));
    }

    #[test]
    fn annulus_bounds() {
        let m = neighborhood_mesh(&Shape::Circle { radius: 1.0 }, 0.2, 32).unwrap();
        for p in m.points() {
            let r = p[0].norm();
            assert!((0.8 - 1e-12..=1.2 + 1e-12).contains(&r));
        }
        assert!(m.points().iter().any(|p| (p[0].norm() - 1.2).abs() < 1e-12));
        assert!(m.points().iter().any(|p| (p[0].norm() - 0.8).abs() < 1e-12));
    }

    #[test]
    fn neighborhoods_contain_base_and_nest() {
        for s in [
            Shape::Interval { a: -1.0, b: 1.0 },
            Shape::Circle { radius: 1.0 },
            Shape::Disk { radius: 1.0 },
            Shape::Square,
            Shape::Bidisk,
            Shape::Simplex,
        ] {
            let base = build_mesh(&s, 5).unwrap();
            let eps = [0.4, 0.2, 0.1];
            for w in eps.windows(2) {
                let outer = neighborhood_mesh(&s, w[0], 5).unwrap();
                let inner = neighborhood_mesh(&s, w[1], 5).unwrap();
                for p in base.points() {
                    assert!(outer.points().contains(p));
                }
                // every eps_{n+1}-mesh point lies within eps_n of the shape
                assert!(inner.points().iter().all(|p| s.distance(p) <= w[0]));
                assert!(inner.points().iter().all(|p| s.distance(p) <= w[1] * (1.0 + 1e-12)));
            }
        }
    }

    #[test]
    fn meshes_are_deterministic() {
        let s = Shape::Disk { radius: 2.0 };
        let a = neighborhood_mesh(&s, 0.3, 9).unwrap();
        let b = neighborhood_mesh(&s, 0.3, 9).unwrap();
        let bits = |m: &Mesh| -> Vec<u64> { m.points().iter().flat_map(|p| exact_key(p)).collect() };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn distinct_points_enforced() {
        let p = vec![vec![c(0.0, 0.0)], vec![c(0.0, 0.0)]];
        assert!(Mesh::from_points(p, "dup".into(), 0.0, 1.0).is_err());
    }

    #[test]
    fn shape_distances() {
        let sq = Shape::Square;
        assert_eq!(sq.distance(&[c(0.5, 0.0), c(-0.2, 0.0)]), 0.0);
        assert!((sq.distance(&[c(1.5, 0.0), c(0.0, 0.5)]) - 0.5f64.hypot(0.5)).abs() < 1e-15);
        let tri = Shape::Simplex;
        assert_eq!(tri.distance(&[c(0.2, 0.0), c(0.2, 0.0)]), 0.0);
        assert!((tri.distance(&[c(1.0, 0.0), c(1.0, 0.0)]) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn weights() {
        let one = WeightFn::constant();
        assert_eq!(one.w(&[c(3.0, -4.0)]), 1.0);
        let g = WeightFn::gaussian(1.0).unwrap();
        assert_eq!(g.w(&[c(0.0, 0.0)]), 1.0);
        assert!((g.w(&[c(0.6, 0.8)]) - (-1.0f64).exp()).abs() < 1e-15);
        assert!(g.admissible_hint());
        assert!(WeightFn::gaussian(0.0).is_err());
        assert!(WeightFn::gaussian(-2.0).is_err());
    }

    #[test]
    fn grid_weight_interpolates() {
        let nodes = vec![vec![c(0.0, 0.0)], vec![c(1.0, 0.0)], vec![c(2.0, 0.0)]];
        let w = make_weight(WeightSpec::Grid {
            nodes,
            q: vec![0.0, 1.0, f64::INFINITY],
        })
        .unwrap();
        assert_eq!(w.q(&[c(1.0, 0.0)]), 1.0);
        assert_eq!(w.w(&[c(2.0, 0.0)]), 0.0);
        let mid = w.q(&[c(0.5, 0.0)]);
        assert!((mid - 0.5).abs() < 1e-12);
        assert!(w.admissible_hint());
        let all_inf = make_weight(WeightSpec::Grid {
            nodes: vec![vec![c(0.0, 0.0)]],
            q: vec![f64::INFINITY],
        })
        .unwrap();
        assert!(!all_inf.admissible_hint());
    }

    #[test]
    fn eps_schedule() {
        let s = EpsSchedule::inv_n(0.5).unwrap();
        assert_eq!(s.eps(1), 0.5);
        assert_eq!(s.eps(5), 0.1);
        assert_eq!(EpsSchedule::ZERO.eps(3), 0.0);
        assert!(EpsSchedule::inv_n(-1.0).is_err());
    }
}
