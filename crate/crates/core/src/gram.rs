//! Weighted Gram matrices of discrete measures, Bergman functions, the
//! tuple-sum identities for `det G` and `B_n`, and optimal measures.
//!
//! Gram entries are accumulated and factored in double-double arithmetic so
//! the exact discrete identities hold to far below `1e-10`; the optimal
//! measure iteration runs in `f64` and is certified in double-double at the
//! end.

use alloc::format;
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
use crate::dd::{Cdd, Dd};
use crate::domains::{Mesh, WeightFn};
use crate::linalg::{Ldl, Scalar, PIVOT_RTOL};
use crate::vandermonde::vdm_unchecked;
use crate::{Error, Point, Result};

/// Tolerance on `sum(probs) = 1`.
pub const PROB_SUM_TOL: f64 = 1e-12;
/// Relative tolerance of the Hermitian check in [`logdet_gram`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Largest number of tuples the identity checks will enumerate.
pub const TUPLE_LIMIT: f64 = 1e6;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: usize = 200_000;

/// Pivot rule of the `f64` factorizations inside the optimal-measure loop.
const FAST_RTOL: f64 = 1e-7;

/// Finitely supported probability measure.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DiscreteMeasure {
    atoms: Vec<Point>,
    probs: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Point>, probs: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        if atoms.len() != probs.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} atoms but {} probabilities",
                atoms.len(),
                probs.len()
            )));
        }
        let d = atoms[0].len();
        if d == 0 || atoms.iter().any(|a| a.len() != d) {
            return Err(Error::InvalidMeasure("atoms of mixed or zero dimension".into()));
        }
        if atoms.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite atom".into()));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidMeasure("probabilities must be finite and >= 0".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidMeasure(format!("probabilities sum to {total}")));
        }
        for i in 0..atoms.len() {
            if atoms[..i].contains(&atoms[i]) {
                return Err(Error::InvalidMeasure(format!("atom {i} repeats an earlier atom")));
            }
        }
        Ok(DiscreteMeasure { atoms, probs })
    }

    /// Mass `1/m` on each of `m` distinct points.
    pub fn uniform(atoms: Vec<Point>) -> Result<Self> {
        let m = atoms.len().max(1);
        let probs = vec![1.0 / m as f64; atoms.len()];
        DiscreteMeasure::new(atoms, probs)
    }

    /// Rescale nonnegative masses to total one.
    pub fn normalized(atoms: Vec<Point>, masses: Vec<f64>) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidMeasure("masses must have a positive finite total".into()));
        }
        DiscreteMeasure::new(atoms, masses.iter().map(|p| p / total).collect())
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }

    /// `sum_k p_k f(a_k)`.
    pub fn integrate(&self, f: impl Fn(&[Complex64]) -> f64) -> f64 {
        self.atoms.iter().zip(&self.probs).map(|(a, p)| p * f(a)).sum()
    }
}

/// Hermitian Gram matrix `G_n^{mu,w}`, stored as the high and low parts of
/// its double-double entries (row-major).
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GramMatrix {
    basis: GradedBasis,
    weight_label: String,
    hi: Vec<Complex64>,
    lo: Vec<Complex64>,
}

impl GramMatrix {
    /// Build from plain entries (row-major, `m_n x m_n`).
    pub fn from_entries(basis: GradedBasis, weight_label: String, entries: Vec<Complex64>) -> Result<Self> {
        let m = basis.len();
        if entries.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                found: entries.len(),
            });
        }
        let lo = vec![Complex64::new(0.0, 0.0); entries.len()];
        Ok(GramMatrix {
            basis,
            weight_label,
            hi: entries,
            lo,
        })
    }

    pub fn basis(&self) -> &GradedBasis {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn weight_label(&self) -> &str {
        &self.weight_label
    }

    /// Matrix order `m_n`.
    pub fn order(&self) -> usize {
        self.basis.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        let k = i * self.order() + j;
        self.hi[k] + self.lo[k]
    }

    /// Entries rounded to `f64`, row-major.
    pub fn entries(&self) -> Vec<Complex64> {
        self.hi.iter().zip(&self.lo).map(|(h, l)| h + l).collect()
    }

    fn dd_entries(&self) -> Vec<Cdd> {
        self.hi
            .iter()
            .zip(&self.lo)
            .map(|(h, l)| Cdd {
                re: Dd { hi: h.re, lo: l.re },
                im: Dd { hi: h.im, lo: l.im },
            })
            .collect()
    }

    fn from_dd(basis: GradedBasis, weight_label: String, g: &[Cdd]) -> Self {
        GramMatrix {
            basis,
            weight_label,
            hi: g.iter().map(|z| Complex64::new(z.re.hi, z.im.hi)).collect(),
            lo: g.iter().map(|z| Complex64::new(z.re.lo, z.im.lo)).collect(),
        }
    }

    /// Largest `|G_ij - conj(G_ji)|` relative to the largest entry.
    pub fn hermitian_defect(&self) -> f64 {
        let m = self.order();
        let mut big = 0.0f64;
        let mut defect = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                big = big.max(self.entry(i, j).norm());
                defect = defect.max((self.entry(i, j) - self.entry(j, i).conj()).norm());
            }
        }
        if big == 0.0 {
            0.0
        } else {
            defect / big
        }
    }
}

/// `log(p_k w(a_k)^{2n})` per atom, with `-inf` for vanishing factors.
pub(crate) fn log_factors(
    mu: &DiscreteMeasure,
    w: &WeightFn,
    n: usize,
    shift: impl Fn(&[Complex64]) -> f64,
) -> Vec<f64> {
    mu.atoms
        .iter()
        .zip(&mu.probs)
        .map(|(a, &p)| {
            let q = w.q(a) + shift(a);
            if p == 0.0 || q == f64::INFINITY {
                f64::NEG_INFINITY
            } else {
                p.ln() - 2.0 * n as f64 * q
            }
        })
        .collect()
}

fn check_dim(basis: &GradedBasis, d: usize) -> Result<()> {
    if basis.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: d,
        });
    }
    Ok(())
}

/// `sum_k exp(logf_k) conj(e(a_k)) e(a_k)^T` in double-double.
pub(crate) fn gram_dd(basis: &GradedBasis, atoms: &[Point], logf: &[f64]) -> Vec<Cdd> {
    let m = basis.len();
    let zero = Cdd::from_c64(Complex64::new(0.0, 0.0));
    let mut g = vec![zero; m * m];
    let mut e = vec![zero; m];
    for (a, &lf) in atoms.iter().zip(logf) {
        if lf == f64::NEG_INFINITY {
            continue;
        }
        let c = lf.exp();
        basis.eval_into(a, &mut e);
        for i in 0..m {
            let ci = e[i].conj().mul_f64(c);
            for j in i..m {
                g[i * m + j] = g[i * m + j] + ci * e[j];
            }
        }
    }
    for i in 0..m {
        g[i * m + i].im = Dd::ZERO;
        for j in 0..i {
            g[i * m + j] = g[j * m + i].conj();
        }
    }
    g
}

/// `G_{ij} = sum_k p_k conj(e_i(a_k)) e_j(a_k) w(a_k)^{2n}`.
pub fn gram_matrix(basis: &GradedBasis, w: &WeightFn, mu: &DiscreteMeasure) -> Result<GramMatrix> {
    check_dim(basis, mu.dim())?;
    let logf = log_factors(mu, w, basis.degree(), |_| 0.0);
    let g = gram_dd(basis, &mu.atoms, &logf);
    Ok(GramMatrix::from_dd(basis.clone(), w.label().into(), &g))
}

/// `log det G`, `-inf` when the equilibrated factorization finds a pivot
/// below `PIVOT_RTOL` relative to the largest.
pub fn logdet_gram(g: &GramMatrix) -> Result<f64> {
    let defect = g.hermitian_defect();
    if !(defect <= HERMITIAN_TOL) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(ldl_logdet(&g.dd_entries(), g.order()))
}

pub(crate) fn ldl_logdet(g: &[Cdd], m: usize) -> f64 {
    match Ldl::factor(g, m, PIVOT_RTOL) {
        Ok(f) => f.log_det(),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// `log det` of the Gram matrix with per-atom log factors. Fewer than `m_n`
/// contributing atoms means rank below `m_n`, hence an exact zero.
pub(crate) fn logdet_from_factors(basis: &GradedBasis, atoms: &[Point], logf: &[f64]) -> f64 {
    let m = basis.len();
    if logf.iter().filter(|v| **v > f64::NEG_INFINITY).count() < m {
        return f64::NEG_INFINITY;
    }
    ldl_logdet(&gram_dd(basis, atoms, logf), m)
}

fn conj_all<T: Scalar>(v: &mut [T]) {
    v.iter_mut().for_each(|x| *x = x.conj());
}

fn factor(g: &[Cdd], m: usize) -> Result<Ldl<Cdd>> {
    Ldl::factor(g, m, PIVOT_RTOL).map_err(|_| Error::SingularGram)
}

/// Bergman function evaluator for a fixed measure; factors `G` once.
pub struct Bergman {
    basis: GradedBasis,
    w: WeightFn,
    ldl: Ldl<Cdd>,
}

impl Bergman {
    pub fn new(basis: &GradedBasis, w: &WeightFn, mu: &DiscreteMeasure) -> Result<Self> {
        check_dim(basis, mu.dim())?;
        let logf = log_factors(mu, w, basis.degree(), |_| 0.0);
        Bergman::with_factors(basis, w, &mu.atoms, &logf)
    }

    pub(crate) fn with_factors(basis: &GradedBasis, w: &WeightFn, atoms: &[Point], logf: &[f64]) -> Result<Self> {
        let g = gram_dd(basis, atoms, logf);
        Ok(Bergman {
            basis: basis.clone(),
            w: w.clone(),
            ldl: factor(&g, basis.len())?,
        })
    }

    /// `B_n(z) = w(z)^{2n} e(z)^T G^{-1} conj(e(z))`.
    pub fn eval(&self, z: &[Complex64]) -> Result<f64> {
        check_dim(&self.basis, z.len())?;
        Ok(self.eval_unchecked(z, 0.0))
    }

    /// `B` for the weight `w e^{-shift}` at `z`.
    pub(crate) fn eval_unchecked(&self, z: &[Complex64], shift: f64) -> f64 {
        let q = self.w.q(z) + shift;
        if q == f64::INFINITY {
            return 0.0;
        }
        let mut e = vec![Cdd::from_c64(Complex64::new(0.0, 0.0)); self.basis.len()];
        self.basis.eval_into(z, &mut e);
        conj_all(&mut e);
        self.ldl.inv_quad_form(&e) * (-2.0 * self.basis.degree() as f64 * q).exp()
    }
}

/// `B_n^{mu,w}(z)`; fails when `G` is singular.
pub fn bergman_function(basis: &GradedBasis, w: &WeightFn, mu: &DiscreteMeasure, z: &[Complex64]) -> Result<f64> {
    Bergman::new(basis, w, mu)?.eval(z)
}

/// `s (s-1) ... (s-k+1)` as a float.
fn falling(s: usize, k: usize) -> f64 {
    if k > s {
        return 0.0;
    }
    (0..k).map(|i| (s - i) as f64).product()
}

/// `log sum_t exp(x_t)`, `-inf` for an empty or all-`-inf` input.
fn log_sum_exp(xs: &[f64]) -> f64 {
    let mx = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + xs.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

fn ln_factorial(m: usize) -> f64 {
    (2..=m).map(|k| (k as f64).ln()).sum()
}

/// `|a - b| / max(a, b)` for values given by their logs; zero if both vanish.
fn log_relative_residual(la: f64, lb: f64) -> f64 {
    if la == f64::NEG_INFINITY && lb == f64::NEG_INFINITY {
        return 0.0;
    }
    let hi = la.max(lb);
    let lo = la.min(lb);
    -(lo - hi).exp_m1()
}

/// Calls `f` with every ordered tuple of `k` distinct indices below `s`.
/// Tuples with a repeated atom have vanishing Vandermonde determinant and
/// are skipped.
fn for_each_injective(s: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut tuple = Vec::with_capacity(k);
    let mut used = vec![false; s];
    fn rec(s: usize, k: usize, tuple: &mut Vec<usize>, used: &mut [bool], f: &mut dyn FnMut(&[usize])) {
        if tuple.len() == k {
            f(tuple);
            return;
        }
        for i in 0..s {
            if !used[i] {
                used[i] = true;
                tuple.push(i);
                rec(s, k, tuple, used, f);
                tuple.pop();
                used[i] = false;
            }
        }
    }
    rec(s, k, &mut tuple, &mut used, &mut f);
}

fn guard(s: usize, k: usize) -> Result<()> {
    let count = falling(s, k);
    if count > TUPLE_LIMIT {
        return Err(Error::GuardExceeded {
            count,
            limit: TUPLE_LIMIT,
        });
    }
    Ok(())
}

/// Relative residual of `m_n! det G = sum over ordered m_n-tuples of atoms of
/// |VDM|^2 prod w^{2n} prod p`.
pub fn check_det_g_identity(basis: &GradedBasis, w: &WeightFn, mu: &DiscreteMeasure) -> Result<f64> {
    check_dim(basis, mu.dim())?;
    let m = basis.len();
    let s = mu.len();
    guard(s, m)?;
    let logf = log_factors(mu, w, basis.degree(), |_| 0.0);
    let lhs = ln_factorial(m) + logdet_from_factors(basis, &mu.atoms, &logf);
    let mut terms = Vec::new();
    let mut pts = Vec::with_capacity(m);
    for_each_injective(s, m, |t| {
        let lf: f64 = t.iter().map(|&i| logf[i]).sum();
        if lf == f64::NEG_INFINITY {
            return;
        }
        pts.clear();
        pts.extend(t.iter().map(|&i| mu.atoms[i].clone()));
        terms.push(2.0 * vdm_unchecked(basis, &pts).log_abs() + lf);
    });
    Ok(log_relative_residual(lhs, log_sum_exp(&terms)))
}

/// Relative residual between `B_n(z)` and
/// `(m_n / Z_n) sum over ordered (m_n - 1)-tuples of |VDM(z, .)|^2 w^{2n} p`
/// with `Z_n = m_n! det G`.
pub fn check_bergman_identity(basis: &GradedBasis, w: &WeightFn, mu: &DiscreteMeasure, z: &[Complex64]) -> Result<f64> {
    check_dim(basis, mu.dim())?;
    check_dim(basis, z.len())?;
    let m = basis.len();
    let s = mu.len();
    guard(s, m - 1)?;
    let logf = log_factors(mu, w, basis.degree(), |_| 0.0);
    let g = gram_dd(basis, &mu.atoms, &logf);
    let ldl = factor(&g, m)?;
    let qz = w.q(z);
    let b = {
        let mut e = vec![Cdd::from_c64(Complex64::new(0.0, 0.0)); m];
        basis.eval_into(z, &mut e);
        conj_all(&mut e);
        if qz == f64::INFINITY {
            0.0
        } else {
            ldl.inv_quad_form(&e) * (-2.0 * basis.degree() as f64 * qz).exp()
        }
    };
    let log_z = ln_factorial(m) + ldl.log_det();
    let lwz = -2.0 * basis.degree() as f64 * qz;
    let mut terms = Vec::new();
    let mut pts = Vec::with_capacity(m);
    for_each_injective(s, m - 1, |t| {
        let lf: f64 = t.iter().map(|&i| logf[i]).sum::<f64>() + lwz;
        if lf == f64::NEG_INFINITY {
            return;
        }
        pts.clear();
        pts.push(z.to_vec());
        pts.extend(t.iter().map(|&i| mu.atoms[i].clone()));
        terms.push(2.0 * vdm_unchecked(basis, &pts).log_abs() + lf);
    });
    let rhs = (m as f64).ln() - log_z + log_sum_exp(&terms);
    let lb = if b > 0.0 { b.ln() } else { f64::NEG_INFINITY };
    Ok(log_relative_residual(lb, rhs))
}

/// Certified optimal measure on a mesh.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct OptimalDesign {
    pub measure: DiscreteMeasure,
    pub iterations: usize,
    /// `max B_n / m_n` over the atoms, evaluated in double-double.
    pub max_ratio: f64,
    pub log_det_gram: f64,
}

/// Multiplicative update `p <- p B_n / m_n` from the uniform measure on the
/// mesh until `max B_n <= m_n (1 + tol)`.
pub fn optimal_measure(
    mesh: &Mesh,
    basis: &GradedBasis,
    w: &WeightFn,
    tol: f64,
    max_iter: usize,
) -> Result<OptimalDesign> {
    check_dim(basis, mesh.dim())?;
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::param("tol", "must be > 0"));
    }
    let m = basis.len();
    let n = basis.degree() as f64;
    let atoms = mesh.points();
    let positive = atoms.iter().filter(|a| w.q(a) < f64::INFINITY).count();
    if positive < m {
        return Err(Error::WeightDegenerate { positive, needed: m });
    }
    // Rows conj(e(a)) in f64, reused each iteration; G = sum c r r^H.
    let mut rows = vec![Complex64::new(0.0, 0.0); atoms.len() * m];
    let mut wfac = vec![0.0; atoms.len()];
    for (k, a) in atoms.iter().enumerate() {
        let q = w.q(a);
        if q == f64::INFINITY {
            continue;
        }
        wfac[k] = (-2.0 * n * q).exp();
        basis.eval_into(a, &mut rows[k * m..(k + 1) * m]);
        conj_all(&mut rows[k * m..(k + 1) * m]);
    }
    let mut p = vec![1.0 / atoms.len() as f64; atoms.len()];
    let mut b = vec![0.0; atoms.len()];
    let mut g = vec![Complex64::new(0.0, 0.0); m * m];
    let mut last_ratio = f64::INFINITY;
    for iter in 0..=max_iter {
        g.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for k in 0..atoms.len() {
            let c = p[k] * wfac[k];
            if c == 0.0 {
                continue;
            }
            let r = &rows[k * m..(k + 1) * m];
            for i in 0..m {
                let ci = r[i] * c;
                for j in i..m {
                    g[i * m + j] += ci * r[j].conj();
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                g[i * m + j] = g[j * m + i].conj();
            }
        }
        let ldl = Ldl::factor(&g, m, FAST_RTOL).map_err(|_| Error::SingularGram)?;
        let mut ratio = 0.0f64;
        for k in 0..atoms.len() {
            b[k] = if wfac[k] == 0.0 {
                0.0
            } else {
                ldl.inv_quad_form(&rows[k * m..(k + 1) * m]) * wfac[k]
            };
            ratio = ratio.max(b[k] / m as f64);
        }
        last_ratio = ratio;
        if ratio <= 1.0 + tol {
            if let Some(design) = certify(atoms, &p, basis, w, tol, iter)? {
                return Ok(design);
            }
        }
        if iter == max_iter {
            break;
        }
        let mut total = 0.0;
        for k in 0..atoms.len() {
            p[k] *= b[k] / m as f64;
            total += p[k];
        }
        p.iter_mut().for_each(|v| *v /= total);
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        ratio: last_ratio,
    })
}

/// Double-double check of the stopping rule; `None` if it fails there.
fn certify(
    atoms: &[Point],
    p: &[f64],
    basis: &GradedBasis,
    w: &WeightFn,
    tol: f64,
    iterations: usize,
) -> Result<Option<OptimalDesign>> {
    let total: f64 = p.iter().sum();
    let measure = DiscreteMeasure::new(atoms.to_vec(), p.iter().map(|v| v / total).collect())?;
    let berg = Bergman::new(basis, w, &measure)?;
    let m = basis.len() as f64;
    let max_ratio = atoms
        .iter()
        .map(|a| berg.eval_unchecked(a, 0.0) / m)
        .fold(0.0, f64::max);
    if max_ratio > 1.0 + tol {
        return Ok(None);
    }
    let log_det_gram = berg.ldl.log_det();
    Ok(Some(OptimalDesign {
        measure,
        iterations,
        max_ratio,
        log_det_gram,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{build_mesh, Shape};
    use crate::fekete::brute_force_fekete;
    use crate::vandermonde::weighted_vdm_logabs;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn p1(re: f64, im: f64) -> Point {
        vec![c(re, im)]
    }

    fn roots(k: usize) -> Vec<Point> {
        (0..k)
            .map(|j| {
                vec![Complex64::from_polar(
                    1.0,
                    2.0 * core::f64::consts::PI * j as f64 / k as f64,
                )]
            })
            .collect()
    }

    /// Direct summation oracle for the Gram entries.
    fn gram_oracle(basis: &GradedBasis, w: &WeightFn, mu: &DiscreteMeasure) -> Vec<Complex64> {
        let m = basis.len();
        let mut g = vec![c(0.0, 0.0); m * m];
        for (a, p) in mu.atoms().iter().zip(mu.probs()) {
            let e = basis.eval(a).unwrap();
            let wf = w.w(a).powi(2 * basis.degree() as i32);
            for i in 0..m {
                for j in 0..m {
                    g[i * m + j] += e[i].conj() * e[j] * wf * p;
                }
            }
        }
        g
    }

    #[test]
    fn measure_validation() {
        assert!(DiscreteMeasure::new(vec![p1(0.0, 0.0)], vec![0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![p1(0.0, 0.0), p1(0.0, 0.0)], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![p1(0.0, 0.0)], vec![1.0, 0.0]).is_err());
        assert!(DiscreteMeasure::new(vec![p1(0.0, 0.0), p1(1.0, 0.0)], vec![1.5, -0.5]).is_err());
        assert!(DiscreteMeasure::uniform(vec![p1(-1.0, 0.0), p1(1.0, 0.0)]).is_ok());
    }

    #[test]
    fn roots_of_unity_give_identity() {
        for n in 1..7 {
            let b = GradedBasis::new(1, n).unwrap();
            let mu = DiscreteMeasure::uniform(roots(n + 1)).unwrap();
            let g = gram_matrix(&b, &WeightFn::constant(), &mu).unwrap();
            let oracle = gram_oracle(&b, &WeightFn::constant(), &mu);
            for i in 0..=n {
                for j in 0..=n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g.entry(i, j) - want).norm() < 1e-14);
                    assert!((g.entry(i, j) - oracle[i * (n + 1) + j]).norm() < 1e-14);
                }
            }
            assert!(logdet_gram(&g).unwrap().abs() < 1e-14);
            // B(z) = sum |z|^{2j} = n + 1 on the circle
            let z = [Complex64::from_polar(1.0, 0.3)];
            assert!((bergman_function(&b, &WeightFn::constant(), &mu, &z).unwrap() - (n + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn single_atom_is_rank_one() {
        let b = GradedBasis::new(2, 2).unwrap();
        let mu = DiscreteMeasure::uniform(vec![vec![c(0.5, 0.1), c(-0.3, 0.7)]]).unwrap();
        let g = gram_matrix(&b, &WeightFn::constant(), &mu).unwrap();
        assert_eq!(logdet_gram(&g).unwrap(), f64::NEG_INFINITY);
        assert_eq!(
            bergman_function(&b, &WeightFn::constant(), &mu, &mu.atoms()[0]),
            Err(Error::SingularGram)
        );
        let e = b.eval(&mu.atoms()[0]).unwrap();
        for i in 0..b.len() {
            for j in 0..b.len() {
                assert!((g.entry(i, j) - e[i].conj() * e[j]).norm() < 1e-14);
            }
        }
        assert_eq!(check_det_g_identity(&b, &WeightFn::constant(), &mu).unwrap(), 0.0);
    }

    #[test]
    fn constant_rescaling_of_weight() {
        // gaussian weight restricted to the unit circle is the constant e^{-c}
        let b = GradedBasis::new(1, 3).unwrap();
        let mu = DiscreteMeasure::normalized(roots(6), vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0]).unwrap();
        let g1 = gram_matrix(&b, &WeightFn::constant(), &mu).unwrap();
        let g2 = gram_matrix(&b, &WeightFn::gaussian(0.5).unwrap(), &mu).unwrap();
        let s = (-0.5f64).exp().powi(6);
        for (a, bb) in g1.entries().iter().zip(g2.entries()) {
            assert!((a * s - bb).norm() < 1e-15);
        }
    }

    #[test]
    fn det_identity_hand_example() {
        let b = GradedBasis::new(1, 1).unwrap();
        let mu = DiscreteMeasure::uniform(vec![p1(0.0, 0.0), p1(1.0, 0.0)]).unwrap();
        let g = gram_matrix(&b, &WeightFn::constant(), &mu).unwrap();
        assert!((logdet_gram(&g).unwrap() - 0.25f64.ln()).abs() < 1e-15);
        assert!(check_det_g_identity(&b, &WeightFn::constant(), &mu).unwrap() < 1e-14);
    }

    #[test]
    fn uniform_measure_on_m_points() {
        let w = WeightFn::gaussian(0.3).unwrap();
        for d in 1..=2 {
            let b = GradedBasis::new(d, 2).unwrap();
            let pts: Vec<Point> = (0..b.len())
                .map(|k| {
                    (0..d)
                        .map(|c_| c((k as f64 * 0.37 + c_ as f64).sin(), (k as f64 * 1.3 - c_ as f64).cos()))
                        .collect()
                })
                .collect();
            let mu = DiscreteMeasure::uniform(pts.clone()).unwrap();
            let lg = logdet_gram(&gram_matrix(&b, &w, &mu).unwrap()).unwrap();
            let lw = weighted_vdm_logabs(&b, &w, &pts).unwrap().log_abs();
            let m = b.len() as f64;
            assert!(((lg - (2.0 * lw - m * m.ln())) / lg.abs().max(1.0)).abs() < 1e-12);
            let berg = Bergman::new(&b, &w, &mu).unwrap();
            for p in &pts {
                assert!((berg.eval(p).unwrap() - m).abs() < 1e-10);
            }
            for z in &pts {
                assert!(check_bergman_identity(&b, &w, &mu, z).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn degree_zero_bergman_is_one() {
        let b = GradedBasis::new(1, 0).unwrap();
        let mu = DiscreteMeasure::uniform(vec![p1(0.4, 0.0)]).unwrap();
        assert!((bergman_function(&b, &WeightFn::constant(), &mu, &[c(3.0, 1.0)]).unwrap() - 1.0).abs() < 1e-15);
        assert!(check_bergman_identity(&b, &WeightFn::constant(), &mu, &[c(3.0, 1.0)]).unwrap() < 1e-15);
    }

    #[test]
    fn tuple_guard() {
        let b = GradedBasis::new(1, 6).unwrap();
        let pts: Vec<Point> = (0..12).map(|k| p1(k as f64, 0.0)).collect();
        let mu = DiscreteMeasure::uniform(pts).unwrap();
        assert!(matches!(
            check_det_g_identity(&b, &WeightFn::constant(), &mu),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn non_hermitian_rejected() {
        let b = GradedBasis::new(1, 1).unwrap();
        let g =
            GramMatrix::from_entries(b, "x".into(), vec![c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(matches!(logdet_gram(&g), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn optimal_on_unisolvent_mesh_is_uniform() {
        let mesh = build_mesh(&Shape::Interval { a: -1.0, b: 1.0 }, 3).unwrap();
        let b = GradedBasis::new(1, 2).unwrap();
        let opt = optimal_measure(&mesh, &b, &WeightFn::constant(), DEFAULT_TOL, 10).unwrap();
        assert_eq!(opt.iterations, 0);
        for p in opt.measure.probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn optimal_on_interval_beats_fekete_candidate() {
        let mesh = build_mesh(&Shape::Interval { a: -1.0, b: 1.0 }, 41).unwrap();
        let b = GradedBasis::new(1, 2).unwrap();
        let w = WeightFn::constant();
        let opt = optimal_measure(&mesh, &b, &w, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(opt.max_ratio <= 1.0 + DEFAULT_TOL);
        let fek = brute_force_fekete(&mesh, &b, &w).unwrap();
        let cand = DiscreteMeasure::uniform(fek.clone()).unwrap();
        let lc = logdet_gram(&gram_matrix(&b, &w, &cand).unwrap()).unwrap();
        // det G(nu) = |W|^2 / m^m with W = 2 for {-1, 0, 1}
        assert!((lc - (4.0f64 / 27.0).ln()).abs() < 1e-14);
        assert!(opt.log_det_gram + (10.0 * DEFAULT_TOL).ln_1p() >= lc);
    }

    #[test]
    fn optimal_on_circle_degree_one() {
        let mesh = build_mesh(&Shape::Circle { radius: 1.0 }, 16).unwrap();
        let b = GradedBasis::new(1, 1).unwrap();
        let opt = optimal_measure(&mesh, &b, &WeightFn::constant(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(opt.max_ratio <= 1.0 + DEFAULT_TOL);
        assert!(opt.log_det_gram.is_finite());
    }

    #[test]
    fn optimal_not_converged_reports_ratio() {
        let mesh = build_mesh(&Shape::Interval { a: -1.0, b: 1.0 }, 41).unwrap();
        let b = GradedBasis::new(1, 3).unwrap();
        match optimal_measure(&mesh, &b, &WeightFn::constant(), 1e-9, 2) {
            Err(Error::NotConverged { iterations, ratio }) => {
                assert_eq!(iterations, 2);
                assert!(ratio > 1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    fn measure_strategy(d: usize) -> impl Strategy<Value = DiscreteMeasure> {
        proptest::collection::vec(
            (proptest::collection::vec((-1.5f64..1.5, -1.5f64..1.5), d), 0.05f64..1.0),
            1..=5,
        )
        .prop_filter_map("distinct atoms", |v| {
            let atoms: Vec<Point> = v
                .iter()
                .map(|(p, _)| p.iter().map(|&(a, b)| c(a, b)).collect())
                .collect();
            DiscreteMeasure::normalized(atoms, v.iter().map(|x| x.1).collect()).ok()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn det_identity_holds(mu in measure_strategy(1), n in 0usize..4, gauss in any::<bool>()) {
            let b = GradedBasis::new(1, n).unwrap();
            let w = if gauss { WeightFn::gaussian(0.7).unwrap() } else { WeightFn::constant() };
            prop_assert!(check_det_g_identity(&b, &w, &mu).unwrap() <= 1e-10);
        }

        #[test]
        fn det_identity_holds_2d(mu in measure_strategy(2), n in 0usize..2) {
            let b = GradedBasis::new(2, n).unwrap();
            prop_assert!(check_det_g_identity(&b, &WeightFn::constant(), &mu).unwrap() <= 1e-10);
        }

        #[test]
        fn bergman_trace_and_identity(mu in measure_strategy(1), zr in -2.0f64..2.0, zi in -2.0f64..2.0) {
            let n = mu.len() - 1;
            let b = GradedBasis::new(1, n.min(3)).unwrap();
            let w = WeightFn::gaussian(0.4).unwrap();
            let berg = Bergman::new(&b, &w, &mu).unwrap();
            let trace = mu.integrate(|a| berg.eval(a).unwrap());
            prop_assert!((trace - b.len() as f64).abs() <= 1e-8);
            prop_assert!(check_bergman_identity(&b, &w, &mu, &[c(zr, zi)]).unwrap() <= 1e-10);
        }

        #[test]
        fn basis_reordering_invariance(mu in measure_strategy(2), zr in -1.0f64..1.0) {
            let b = GradedBasis::new(2, 1).unwrap();
            let pb = b.permuted_within_degree(&[0, 2, 1]).unwrap();
            let w = WeightFn::constant();
            let l1 = logdet_gram(&gram_matrix(&b, &w, &mu).unwrap()).unwrap();
            let l2 = logdet_gram(&gram_matrix(&pb, &w, &mu).unwrap()).unwrap();
            if l1.is_finite() {
                prop_assert!((l1 - l2).abs() <= 1e-10 * l1.abs().max(1.0));
                let z = [c(zr, 0.2), c(-0.3, zr)];
                let b1 = bergman_function(&b, &w, &mu, &z).unwrap();
                let b2 = bergman_function(&pb, &w, &mu, &z).unwrap();
                prop_assert!((b1 - b2).abs() <= 1e-10 * b1.max(1.0));
            } else {
                prop_assert_eq!(l2, f64::NEG_INFINITY);
            }
        }
    }
}
