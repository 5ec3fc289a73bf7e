//! Log-domain (weighted) Vandermonde determinants and the finite-degree
//! diameters `delta_n^w = W_{m_n}^{1/l_n}`.
//!
//! `|VDM|` over- or underflows double precision already around `n = 20`, so
//! every magnitude is carried as a [`LogScaledValue`]. Determinants are
//! evaluated by a column-scaled, partially pivoted LU in double-double complex
//! arithmetic; a determinant is zero when some pivot falls below
//! [`PIVOT_RTOL`](crate::PIVOT_RTOL) times the largest one.

use alloc::vec;
use alloc::vec::Vec;

// Float math in no_std builds; unused once std is linked.
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::basis::GradedBasis;
use crate::dd::Cdd;
use crate::domains::{Mesh, WeightFn};
use crate::fekete::{self, Extractor};
use crate::linalg::{scaled_log_det, LogDet};
use crate::{Error, Point, Result};

/// `v = phase * exp(log_abs)`; `log_abs = -inf` encodes zero.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LogScaledValue {
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_ext::scalar"))]
    log_abs: f64,
    phase: Complex64,
}

impl LogScaledValue {
    pub const ZERO: LogScaledValue = LogScaledValue {
        log_abs: f64::NEG_INFINITY,
        phase: Complex64::new(0.0, 0.0),
    };

    pub fn new(log_abs: f64, phase: Complex64) -> Self {
        if log_abs == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        LogScaledValue {
            log_abs,
            phase: phase / phase.norm(),
        }
    }

    pub fn log_abs(&self) -> f64 {
        self.log_abs
    }

    /// Unit-modulus phase; zero when the value is zero.
    pub fn phase(&self) -> Complex64 {
        self.phase
    }

    pub fn is_zero(&self) -> bool {
        self.log_abs == f64::NEG_INFINITY
    }

    /// The value itself; may overflow to infinity or underflow to zero.
    pub fn value(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        self.phase * self.log_abs.exp()
    }
}

impl From<LogDet> for LogScaledValue {
    fn from(d: LogDet) -> Self {
        if d.singular {
            LogScaledValue::ZERO
        } else {
            LogScaledValue::new(d.log_abs, d.phase)
        }
    }
}

pub(crate) fn check_points(basis: &GradedBasis, pts: &[Point]) -> Result<()> {
    if pts.len() != basis.len() {
        return Err(Error::PointCount {
            expected: basis.len(),
            found: pts.len(),
        });
    }
    if let Some(p) = pts.iter().find(|p| p.len() != basis.dim()) {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: p.len(),
        });
    }
    Ok(())
}

/// `det[e_i(zeta_j)]` with rows indexed by basis monomials and columns by
/// points.
pub fn vdm_logabs(basis: &GradedBasis, pts: &[Point]) -> Result<LogScaledValue> {
    check_points(basis, pts)?;
    Ok(vdm_unchecked(basis, pts))
}

pub(crate) fn vdm_unchecked(basis: &GradedBasis, pts: &[Point]) -> LogScaledValue {
    let m = basis.len();
    let mut a = vec![Cdd::from_c64(Complex64::new(0.0, 0.0)); m * m];
    let mut col = vec![Cdd::from_c64(Complex64::new(0.0, 0.0)); m];
    for (j, p) in pts.iter().enumerate() {
        basis.eval_into(p, &mut col);
        for i in 0..m {
            a[i * m + j] = col[i];
        }
    }
    scaled_log_det(a, m).into()
}

/// Univariate product formula `prod_{j<k} (zeta_k - zeta_j)`, the classical
/// closed form of [`vdm_logabs`] for `d = 1`.
pub fn vdm_product_formula(pts: &[Point]) -> Result<LogScaledValue> {
    if let Some(p) = pts.iter().find(|p| p.len() != 1) {
        return Err(Error::RequiresUnivariate(p.len()));
    }
    let mut log_abs = 0.0;
    let mut phase = Complex64::new(1.0, 0.0);
    for k in 0..pts.len() {
        for j in 0..k {
            let diff = pts[k][0] - pts[j][0];
            let a = diff.norm();
            if a == 0.0 {
                return Ok(LogScaledValue::ZERO);
            }
            log_abs += a.ln();
            phase *= diff / a;
            phase /= phase.norm();
        }
    }
    Ok(LogScaledValue::new(log_abs, phase))
}

/// `W = VDM(pts) * prod_j w(pts_j)^n` with `n` the basis degree.
pub fn weighted_vdm_logabs(basis: &GradedBasis, w: &WeightFn, pts: &[Point]) -> Result<LogScaledValue> {
    check_points(basis, pts)?;
    Ok(weighted_unchecked(basis, w, pts))
}

pub(crate) fn weighted_unchecked(basis: &GradedBasis, w: &WeightFn, pts: &[Point]) -> LogScaledValue {
    let q_sum: f64 = pts.iter().map(|p| w.q(p)).sum();
    if !q_sum.is_finite() {
        return LogScaledValue::ZERO;
    }
    let v = vdm_unchecked(basis, pts);
    if v.is_zero() {
        return v;
    }
    LogScaledValue::new(v.log_abs - basis.degree() as f64 * q_sum, v.phase)
}

/// `delta_n^w = |W|^{1/l_n}` at the tuple chosen by `extractor` on `mesh`.
///
/// Exact over the mesh for [`Extractor::BruteForce`], otherwise a lower bound
/// on the mesh maximum.
pub fn delta_n_estimate(mesh: &Mesh, w: &WeightFn, basis: &GradedBasis, extractor: Extractor) -> Result<f64> {
    if basis.l() == 0 {
        return Err(Error::ZeroDegree);
    }
    let idx = fekete::extract(mesh, basis, w, extractor)?;
    let pts: Vec<Point> = idx.iter().map(|&i| mesh.points()[i].clone()).collect();
    let v = weighted_unchecked(basis, w, &pts);
    Ok(delta_from_log(v.log_abs, basis.l()))
}

/// `exp(log_abs / l)`, zero for a zero determinant.
pub fn delta_from_log(log_abs: f64, l: u64) -> f64 {
    if log_abs == f64::NEG_INFINITY {
        0.0
    } else {
        (log_abs / l as f64).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{build_mesh, Shape};
    use proptest::prelude::*;

    fn p(re: f64, im: f64) -> Point {
        vec![Complex64::new(re, im)]
    }

    #[test]
    fn small_univariate_values() {
        let b1 = GradedBasis::new(1, 1).unwrap();
        let v = vdm_logabs(&b1, &[p(0.0, 0.0), p(1.0, 0.0)]).unwrap();
        assert!(v.log_abs().abs() < 1e-15);
        let b2 = GradedBasis::new(1, 2).unwrap();
        let v = vdm_logabs(&b2, &[p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)]).unwrap();
        assert!((v.log_abs() - 2f64.ln()).abs() < 1e-15);
        assert!((v.value() - Complex64::new(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn repeated_point_is_zero() {
        for n in 1..8 {
            let b = GradedBasis::new(1, n).unwrap();
            let mut pts: Vec<Point> = (0..=n).map(|k| p(k as f64 / n as f64, 0.1)).collect();
            pts[n] = pts[0].clone();
            assert!(vdm_logabs(&b, &pts).unwrap().is_zero());
        }
    }

    #[test]
    fn wrong_point_count() {
        let b = GradedBasis::new(1, 2).unwrap();
        assert_eq!(
            vdm_logabs(&b, &[p(0.0, 0.0)]),
            Err(Error::PointCount { expected: 3, found: 1 })
        );
    }

    #[test]
    fn weighted_examples() {
        let b = GradedBasis::new(1, 1).unwrap();
        let pts = [p(0.0, 0.0), p(1.0, 0.0)];
        let one = WeightFn::constant();
        assert_eq!(
            weighted_vdm_logabs(&b, &one, &pts).unwrap(),
            vdm_logabs(&b, &pts).unwrap()
        );
        let g = WeightFn::gaussian(1.0).unwrap();
        let v = weighted_vdm_logabs(&b, &g, &pts).unwrap();
        assert!((v.log_abs() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_point_gives_zero() {
        use crate::domains::{make_weight, WeightSpec};
        let w = make_weight(WeightSpec::Grid {
            nodes: vec![p(0.0, 0.0), p(1.0, 0.0)],
            q: vec![0.0, f64::INFINITY],
        })
        .unwrap();
        let b = GradedBasis::new(1, 1).unwrap();
        assert!(weighted_vdm_logabs(&b, &w, &[p(0.0, 0.0), p(1.0, 0.0)])
            .unwrap()
            .is_zero());
    }

    #[test]
    fn degree_zero_has_no_diameter() {
        let mesh = build_mesh(&Shape::Circle { radius: 1.0 }, 4).unwrap();
        let b = GradedBasis::new(1, 0).unwrap();
        assert_eq!(
            delta_n_estimate(&mesh, &WeightFn::constant(), &b, Extractor::BruteForce),
            Err(Error::ZeroDegree)
        );
    }

    #[test]
    fn bivariate_permutation_changes_only_phase() {
        let b = GradedBasis::new(2, 2).unwrap();
        let pts: Vec<Point> = (0..6)
            .map(|k| {
                let t = k as f64 * 0.7;
                vec![Complex64::new(t.cos(), 0.3 * t), Complex64::new(t.sin(), -0.2)]
            })
            .collect();
        let v = vdm_logabs(&b, &pts).unwrap();
        let perm = b.permuted_within_degree(&[0, 2, 1, 5, 4, 3]).unwrap();
        let u = vdm_logabs(&perm, &pts).unwrap();
        assert!((u.log_abs() - v.log_abs()).abs() < 1e-13);
        // one transposition in degree 1, one in degree 2: even
        assert!((u.phase() - v.phase()).norm() < 1e-12);
        let mut swapped = pts.clone();
        swapped.swap(0, 3);
        let s = vdm_logabs(&b, &swapped).unwrap();
        assert!((s.log_abs() - v.log_abs()).abs() < 1e-13);
        assert!((s.phase() + v.phase()).norm() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn product_formula_agrees_with_lu(
            raw in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..=31),
        ) {
            let pts: Vec<Point> = raw
                .iter()
                .map(|&(r, t)| {
                    let z = Complex64::from_polar(r.sqrt(), 2.0 * core::f64::consts::PI * t);
                    vec![z]
                })
                .collect();
            let b = GradedBasis::new(1, pts.len() - 1).unwrap();
            let lu = vdm_logabs(&b, &pts).unwrap();
            let pf = vdm_product_formula(&pts).unwrap();
            prop_assume!(!pf.is_zero());
            prop_assert!((lu.log_abs() - pf.log_abs()).abs() <= 1e-9,
                "lu {} product {}", lu.log_abs(), pf.log_abs());
            prop_assert!((lu.phase() - pf.phase()).norm() <= 1e-8);
        }

        #[test]
        fn permuting_points_keeps_magnitude(
            raw in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6),
            swap in (0usize..6, 0usize..6),
        ) {
            let b = GradedBasis::new(1, 5).unwrap();
            let pts: Vec<Point> = raw.iter().map(|&(x, y)| p(x, y)).collect();
            let mut q = pts.clone();
            q.swap(swap.0, swap.1);
            let a = vdm_logabs(&b, &pts).unwrap();
            let c = vdm_logabs(&b, &q).unwrap();
            prop_assume!(!a.is_zero());
            prop_assert!((a.log_abs() - c.log_abs()).abs() <= 1e-12);
            let expected = if swap.0 == swap.1 { a.phase() } else { -a.phase() };
            prop_assert!((c.phase() - expected).norm() <= 1e-10);
        }

        #[test]
        fn scaling_law(t in 0.2f64..5.0, n in 1usize..6) {
            let s = Shape::Interval { a: -1.0, b: 1.0 };
            let st = Shape::Interval { a: -t, b: t };
            let b = GradedBasis::new(1, n).unwrap();
            let w = WeightFn::constant();
            let d1 = delta_n_estimate(&build_mesh(&s, 9).unwrap(), &w, &b, Extractor::BruteForce).unwrap();
            let dt = delta_n_estimate(&build_mesh(&st, 9).unwrap(), &w, &b, Extractor::BruteForce).unwrap();
            prop_assert!((dt - t * d1).abs() <= 1e-12 * dt);
        }
    }
}
