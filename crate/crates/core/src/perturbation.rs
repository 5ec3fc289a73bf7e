//! The functional `f_n(t) = -(1/2l_n) log det G_n^{mu_n, w_t}` with
//! `w_t = w e^{-t u}`, its derivative at zero through the Bergman function,
//! concavity scans, and the comparison of `f_n'(0)` with the equilibrium
//! value `((d+1)/d) * integral of u` along AAWF arrays.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::basis::GradedBasis;
use crate::convergence::{reference_for, EquilibriumReference, Moments};
use crate::domains::WeightFn;
use crate::fekete::{aawf_array, ArraySpec};
use crate::gram::{log_factors, logdet_from_factors, Bergman, DiscreteMeasure};
use crate::{Error, Result};

/// Default central-difference step.
pub const DEFAULT_H: f64 = 1e-4;
/// Relative tolerance on positive second differences.
pub const CONCAVITY_RTOL: f64 = 1e-8;

/// Real test function `u` on `C^d`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum PerturbationProbe {
    Constant {
        c: f64,
    },
    /// `c0 + sum_j re_j Re(z_j) + im_j Im(z_j)`.
    Affine {
        c0: f64,
        re: Vec<f64>,
        im: Vec<f64>,
    },
    /// `Re(z_coord)^2`.
    RealPartSquared {
        coord: usize,
    },
    /// `sum_j |z_j|^2`.
    AbsSquared,
    /// `sum_k c_k u_k`.
    Sum {
        terms: Vec<(f64, PerturbationProbe)>,
    },
}

/// `(alpha, beta, c)`: the term `Re(c z^alpha conj(z)^beta)`.
type Term = (Vec<u32>, Vec<u32>, Complex64);

impl PerturbationProbe {
    pub fn constant(c: f64) -> Self {
        PerturbationProbe::Constant { c }
    }

    pub fn label(&self) -> String {
        match self {
            PerturbationProbe::Constant { c } => format!("{c}"),
            PerturbationProbe::Affine { c0, re, im } => format!("affine(c0={c0}, re={re:?}, im={im:?})"),
            PerturbationProbe::RealPartSquared { coord } => format!("Re(z{})^2", coord + 1),
            PerturbationProbe::AbsSquared => "|z|^2".into(),
            PerturbationProbe::Sum { terms } => {
                let parts: Vec<String> = terms.iter().map(|(c, u)| format!("{c}*{}", u.label())).collect();
                parts.join(" + ")
            }
        }
    }

    /// Check coefficients and coordinate indices against the dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            PerturbationProbe::Constant { c } if !c.is_finite() => Err(Error::param("u", "non-finite constant")),
            PerturbationProbe::Affine { c0, re, im } => {
                if re.len() != d || im.len() != d {
                    return Err(Error::param(
                        "u",
                        format!("affine probe needs {d} coefficients per part"),
                    ));
                }
                if !c0.is_finite() || re.iter().chain(im).any(|v| !v.is_finite()) {
                    return Err(Error::param("u", "non-finite coefficient"));
                }
                Ok(())
            }
            PerturbationProbe::RealPartSquared { coord } if *coord >= d => Err(Error::param(
                "u",
                format!("coordinate {coord} out of range for d = {d}"),
            )),
            PerturbationProbe::Sum { terms } => terms.iter().try_for_each(|(c, u)| {
                if !c.is_finite() {
                    return Err(Error::param("u", "non-finite coefficient"));
                }
                u.validate(d)
            }),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, z: &[Complex64]) -> f64 {
        match self {
            PerturbationProbe::Constant { c } => *c,
            PerturbationProbe::Affine { c0, re, im } => {
                c0 + z
                    .iter()
                    .zip(re.iter().zip(im))
                    .map(|(v, (a, b))| a * v.re + b * v.im)
                    .sum::<f64>()
            }
            PerturbationProbe::RealPartSquared { coord } => z[*coord].re * z[*coord].re,
            PerturbationProbe::AbsSquared => z.iter().map(|v| v.norm_sqr()).sum(),
            PerturbationProbe::Sum { terms } => terms.iter().map(|(c, u)| c * u.eval(z)).sum(),
        }
    }

    fn terms(&self, d: usize) -> Vec<Term> {
        let zero = || alloc::vec![0u32; d];
        let unit = |j: usize, k: u32| {
            let mut e = alloc::vec![0u32; d];
            e[j] = k;
            e
        };
        match self {
            PerturbationProbe::Constant { c } => alloc::vec![(zero(), zero(), Complex64::new(*c, 0.0))],
            PerturbationProbe::Affine { c0, re, im } => {
                let mut t = alloc::vec![(zero(), zero(), Complex64::new(*c0, 0.0))];
                for j in 0..d {
                    // Im(z) = Re(-i z)
                    t.push((unit(j, 1), zero(), Complex64::new(re[j], -im[j])));
                }
                t
            }
            PerturbationProbe::RealPartSquared { coord } => alloc::vec![
                (unit(*coord, 2), zero(), Complex64::new(0.5, 0.0)),
                (unit(*coord, 1), unit(*coord, 1), Complex64::new(0.5, 0.0)),
            ],
            PerturbationProbe::AbsSquared => (0..d)
                .map(|j| (unit(j, 1), unit(j, 1), Complex64::new(1.0, 0.0)))
                .collect(),
            PerturbationProbe::Sum { terms } => terms
                .iter()
                .flat_map(|(c, u)| u.terms(d).into_iter().map(move |(a, b, v)| (a, b, v * c)))
                .collect(),
        }
    }

    /// `integral of u` against a reference equilibrium measure.
    pub fn integrate_reference(&self, reference: &EquilibriumReference) -> f64 {
        self.terms(reference.dim())
            .iter()
            .map(|(a, b, c)| (c * reference.moment(a, b)).re)
            .sum()
    }
}

fn check(basis: &GradedBasis, u: &PerturbationProbe, mu: &DiscreteMeasure) -> Result<()> {
    if basis.l() == 0 {
        return Err(Error::ZeroDegree);
    }
    if mu.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: mu.dim(),
        });
    }
    u.validate(basis.dim())
}

fn f_unchecked(basis: &GradedBasis, w: &WeightFn, u: &PerturbationProbe, mu: &DiscreteMeasure, t: f64) -> Result<f64> {
    let logf = log_factors(mu, w, basis.degree(), |a| t * u.eval(a));
    let ld = logdet_from_factors(basis, mu.atoms(), &logf);
    if ld == f64::NEG_INFINITY {
        return Err(Error::SingularGram);
    }
    Ok(-ld / (2.0 * basis.l() as f64))
}

/// `f_n(t) = -(1/2l_n) log det G_n^{mu, w e^{-t u}}`.
pub fn f_n(basis: &GradedBasis, w: &WeightFn, u: &PerturbationProbe, mu: &DiscreteMeasure, t: f64) -> Result<f64> {
    check(basis, u, mu)?;
    f_unchecked(basis, w, u, mu, t)
}

/// `f_n'(0) = ((d+1)/(d m_n)) * sum_k p_k u(a_k) B_n(a_k)`.
pub fn fn_prime_direct(basis: &GradedBasis, w: &WeightFn, u: &PerturbationProbe, mu: &DiscreteMeasure) -> Result<f64> {
    check(basis, u, mu)?;
    let berg = Bergman::new(basis, w, mu)?;
    let d = basis.dim() as f64;
    let integral = mu.integrate(|a| u.eval(a) * berg.eval_unchecked(a, 0.0));
    Ok((d + 1.0) / (d * basis.len() as f64) * integral)
}

/// Central difference `(f_n(h) - f_n(-h)) / 2h`.
pub fn fn_prime_fd(
    basis: &GradedBasis,
    w: &WeightFn,
    u: &PerturbationProbe,
    mu: &DiscreteMeasure,
    h: f64,
) -> Result<f64> {
    check(basis, u, mu)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::param("h", "must be > 0"));
    }
    let fp = f_unchecked(basis, w, u, mu, h)?;
    let fm = f_unchecked(basis, w, u, mu, -h)?;
    Ok((fp - fm) / (2.0 * h))
}

/// Outcome of [`concavity_scan`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ConcavityReport {
    pub t: Vec<f64>,
    /// `None` where `G` is singular.
    pub values: Vec<Option<f64>>,
    /// `2 (linear interpolant - f)` at each interior node with both
    /// neighbours defined; positive values violate concavity.
    pub second_differences: Vec<f64>,
    pub scale: f64,
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_ext::scalar"))]
    pub max_violation: f64,
    /// Largest distance from `f` to the chord between the grid endpoints.
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_ext::scalar"))]
    pub max_chord_gap: f64,
    pub singular_at: Vec<usize>,
    pub concave: bool,
}

/// Centered second differences of `f_n` on a sorted grid. The tolerance is
/// `CONCAVITY_RTOL * max(1, max |f_n|)`.
pub fn concavity_scan(
    basis: &GradedBasis,
    w: &WeightFn,
    u: &PerturbationProbe,
    mu: &DiscreteMeasure,
    grid: &[f64],
) -> Result<ConcavityReport> {
    check(basis, u, mu)?;
    if grid.len() < 3 || grid.windows(2).any(|p| !(p[1] > p[0])) || grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::param(
            "t grid",
            "needs at least 3 strictly increasing finite values",
        ));
    }
    let values: Vec<Option<f64>> = grid.iter().map(|&t| f_unchecked(basis, w, u, mu, t).ok()).collect();
    let singular_at: Vec<usize> = (0..grid.len()).filter(|&i| values[i].is_none()).collect();
    let scale = values.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut second_differences = Vec::new();
    for i in 1..grid.len() - 1 {
        if let (Some(a), Some(b), Some(c)) = (values[i - 1], values[i], values[i + 1]) {
            let h1 = grid[i] - grid[i - 1];
            let h2 = grid[i + 1] - grid[i];
            let lin = (h2 * a + h1 * c) / (h1 + h2);
            second_differences.push(2.0 * (lin - b));
        }
    }
    let max_violation = second_differences.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_chord_gap = match (values[0], values[grid.len() - 1]) {
        (Some(a), Some(b)) => {
            let (t0, t1) = (grid[0], grid[grid.len() - 1]);
            grid.iter()
                .zip(&values)
                .filter_map(|(&t, v)| v.map(|v| (v - (a + (b - a) * (t - t0) / (t1 - t0))).abs()))
                .fold(0.0, f64::max)
        }
        _ => f64::NAN,
    };
    let concave = singular_at.is_empty() && max_violation <= CONCAVITY_RTOL * scale;
    Ok(ConcavityReport {
        t: grid.to_vec(),
        values,
        second_differences,
        scale,
        max_violation,
        max_chord_gap,
        singular_at,
        concave,
    })
}

/// One degree of [`calc_lemma_experiment`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CalcLemmaRow {
    pub n: usize,
    pub f_n0: f64,
    pub fprime_direct: f64,
    pub fprime_fd: f64,
    pub g_prime_ref: f64,
    /// `|fprime_direct - g_prime_ref|`.
    pub gap: f64,
}

/// `f_n(0)`, `f_n'(0)` for the empirical measures of an AAWF array, against
/// `g'(0) = ((d+1)/d) * integral of u d mu_{K,Q}`.
pub fn calc_lemma_experiment(spec: &ArraySpec, u: &PerturbationProbe, h: f64) -> Result<Vec<CalcLemmaRow>> {
    let d = spec.shape.dim();
    u.validate(d)?;
    let reference = reference_for(&spec.shape, &spec.weight)?;
    let g_prime_ref = (d as f64 + 1.0) / d as f64 * u.integrate_reference(&reference);
    let array = aawf_array(spec)?;
    array
        .records
        .iter()
        .map(|rec| {
            let n = rec.n;
            (|| {
                let basis = GradedBasis::new(d, n)?;
                let mu = DiscreteMeasure::uniform(rec.points.clone())?;
                let fprime_direct = fn_prime_direct(&basis, &spec.weight, u, &mu)?;
                Ok(CalcLemmaRow {
                    n,
                    f_n0: f_n(&basis, &spec.weight, u, &mu, 0.0)?,
                    fprime_direct,
                    fprime_fd: fn_prime_fd(&basis, &spec.weight, u, &mu, h)?,
                    g_prime_ref,
                    gap: (fprime_direct - g_prime_ref).abs(),
                })
            })()
            .map_err(Error::at_degree(n))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{EpsSchedule, Shape};
    use crate::fekete::Extractor;
    use crate::gram::gram_matrix;
    use crate::vandermonde::vdm_logabs;
    use crate::Point;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn generic_measure(k: usize, d: usize, seed: f64) -> DiscreteMeasure {
        let atoms: Vec<Point> = (0..k)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        let x = seed + i as f64 * 0.77 + j as f64 * 1.91;
                        c(1.1 * x.sin(), 0.9 * (1.7 * x).cos())
                    })
                    .collect()
            })
            .collect();
        let masses = (0..k).map(|i| 1.0 + (i as f64 * 1.3 + seed).sin().abs()).collect();
        DiscreteMeasure::normalized(atoms, masses).unwrap()
    }

    fn u_generic() -> PerturbationProbe {
        PerturbationProbe::Sum {
            terms: alloc::vec![
                (
                    0.7,
                    PerturbationProbe::Affine {
                        c0: 0.2,
                        re: alloc::vec![1.0],
                        im: alloc::vec![-0.5]
                    }
                ),
                (0.4, PerturbationProbe::AbsSquared),
            ],
        }
    }

    #[test]
    fn constant_probe_is_exact_shift() {
        let b = GradedBasis::new(1, 3).unwrap();
        let w = WeightFn::gaussian(0.5).unwrap();
        let mu = generic_measure(6, 1, 0.3);
        let u = PerturbationProbe::constant(1.0);
        let f0 = f_n(&b, &w, &u, &mu, 0.0).unwrap();
        for &t in &[-0.8, -0.1, 0.25, 1.0] {
            let ft = f_n(&b, &w, &u, &mu, t).unwrap();
            assert!((ft - f0 - 2.0 * t).abs() < 1e-10, "{t}");
        }
        assert!((fn_prime_direct(&b, &w, &u, &mu).unwrap() - 2.0).abs() < 1e-12);
        assert!((fn_prime_fd(&b, &w, &u, &mu, 0.37).unwrap() - 2.0).abs() < 1e-10);
        let zero = PerturbationProbe::constant(0.0);
        assert_eq!(fn_prime_fd(&b, &w, &zero, &mu, 1e-4).unwrap(), 0.0);
    }

    #[test]
    fn f0_matches_gram_logdet() {
        let b = GradedBasis::new(2, 1).unwrap();
        let w = WeightFn::constant();
        let mu = generic_measure(5, 2, 1.1);
        let ld = crate::gram::logdet_gram(&gram_matrix(&b, &w, &mu).unwrap()).unwrap();
        let f0 = f_n(&b, &w, &PerturbationProbe::AbsSquared, &mu, 0.0).unwrap();
        assert!((f0 + ld / (2.0 * b.l() as f64)).abs() < 1e-14);
    }

    #[test]
    fn uniform_on_m_points_is_affine() {
        let b = GradedBasis::new(1, 3).unwrap();
        let w = WeightFn::gaussian(1.0).unwrap();
        let mu = generic_measure(4, 1, 0.9);
        let u = u_generic();
        let mu = DiscreteMeasure::uniform(mu.atoms().to_vec()).unwrap();
        let mean_u = mu.integrate(|a| u.eval(a));
        let f0 = f_n(&b, &w, &u, &mu, 0.0).unwrap();
        for k in -10..=10 {
            let t = k as f64 / 10.0;
            let ft = f_n(&b, &w, &u, &mu, t).unwrap();
            assert!((ft - f0 - 2.0 * t * mean_u).abs() < 1e-9);
        }
        assert!((fn_prime_direct(&b, &w, &u, &mu).unwrap() - 2.0 * mean_u).abs() < 1e-10);
        let grid: Vec<f64> = (-10..=10).map(|k| k as f64 / 10.0).collect();
        let rep = concavity_scan(&b, &w, &u, &mu, &grid).unwrap();
        assert!(rep.concave);
        assert!(rep.max_chord_gap < 1e-9);
        assert!(rep.second_differences.iter().all(|v| v.abs() < 1e-9));
    }

    /// `F(t) = sum over ordered distinct tuples of |VDM|^2 prod p w_t^{2n}`
    /// and its first two derivatives, by enumeration.
    fn tuple_oracle(b: &GradedBasis, u: &PerturbationProbe, mu: &DiscreteMeasure, t: f64) -> (f64, f64, f64) {
        let m = b.len();
        let s = mu.len();
        let n = b.degree() as f64;
        let (mut f, mut f1, mut f2) = (0.0, 0.0, 0.0);
        let mut idx = alloc::vec![0usize; m];
        loop {
            let mut distinct = true;
            for i in 0..m {
                for j in 0..i {
                    distinct &= idx[i] != idx[j];
                }
            }
            if distinct {
                let pts: Vec<Point> = idx.iter().map(|&i| mu.atoms()[i].clone()).collect();
                let v = vdm_logabs(b, &pts).unwrap().log_abs();
                let su: f64 = idx.iter().map(|&i| u.eval(&mu.atoms()[i])).sum();
                let p: f64 = idx.iter().map(|&i| mu.probs()[i]).product();
                let term = (2.0 * v).exp() * p * (-2.0 * n * t * su).exp();
                f += term;
                f1 += -2.0 * n * su * term;
                f2 += (2.0 * n * su).powi(2) * term;
            }
            let mut k = 0;
            while k < m {
                idx[k] += 1;
                if idx[k] < s {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == m {
                break;
            }
        }
        (f, f1, f2)
    }

    #[test]
    fn generic_six_atom_scan_is_concave() {
        let b = GradedBasis::new(1, 2).unwrap();
        let w = WeightFn::constant();
        let mu = generic_measure(6, 1, 0.2);
        let u = u_generic();
        let grid: Vec<f64> = (-10..=10).map(|k| k as f64 / 10.0).collect();
        let rep = concavity_scan(&b, &w, &u, &mu, &grid).unwrap();
        assert!(rep.concave, "{:?}", rep.max_violation);
        assert!(rep.max_chord_gap > 1e-6, "a generic measure is not affine");
        // log-convexity of F at an interior point, and f = -log(F/m!)/2l
        let (f, f1, f2) = tuple_oracle(&b, &u, &mu, 0.3);
        assert!(f1 * f1 <= f * f2);
        let m_fact = 6.0;
        let f_direct = f_n(&b, &w, &u, &mu, 0.3).unwrap();
        assert!((f_direct + (f / m_fact).ln() / (2.0 * b.l() as f64)).abs() < 1e-12);
        // and the derivative via F'/F
        let d = -f1 / f / (2.0 * b.l() as f64);
        let (g, g1, _) = tuple_oracle(&b, &u, &mu, 0.0);
        let d0 = -g1 / g / (2.0 * b.l() as f64);
        assert!((fn_prime_direct(&b, &w, &u, &mu).unwrap() - d0).abs() < 1e-12);
        assert!((fn_prime_fd(&b, &w, &u, &mu, 1e-4).unwrap() - d0).abs() < 1e-7);
        assert!(d.is_finite());
    }

    #[test]
    fn richardson_consistency() {
        let b = GradedBasis::new(1, 2).unwrap();
        let w = WeightFn::gaussian(0.3).unwrap();
        let mu = generic_measure(5, 1, 2.0);
        let u = u_generic();
        let direct = fn_prime_direct(&b, &w, &u, &mu).unwrap();
        let h = 1e-3;
        let d1 = fn_prime_fd(&b, &w, &u, &mu, h).unwrap();
        let d2 = fn_prime_fd(&b, &w, &u, &mu, h / 2.0).unwrap();
        let rich = (4.0 * d2 - d1) / 3.0;
        assert!((rich - direct).abs() < 1e-9 * direct.abs().max(1.0));
        assert!((d1 - direct).abs() < 1e-6 * direct.abs().max(1.0));
    }

    #[test]
    fn singular_measure_errors() {
        let b = GradedBasis::new(1, 3).unwrap();
        let mu = generic_measure(2, 1, 0.0);
        let u = PerturbationProbe::AbsSquared;
        assert_eq!(f_n(&b, &WeightFn::constant(), &u, &mu, 0.0), Err(Error::SingularGram));
        let rep = concavity_scan(&b, &WeightFn::constant(), &u, &mu, &[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(rep.singular_at, alloc::vec![0, 1, 2]);
        assert!(!rep.concave);
        assert!(concavity_scan(&b, &WeightFn::constant(), &u, &mu, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn probe_reference_integrals() {
        let arcsine = EquilibriumReference::arcsine(-1.0, 1.0);
        let u = PerturbationProbe::RealPartSquared { coord: 0 };
        assert!((u.integrate_reference(&arcsine) - 0.5).abs() < 1e-14);
        let circle = EquilibriumReference::Circle { radius: 1.0 };
        let lin = PerturbationProbe::Affine {
            c0: 0.5,
            re: alloc::vec![1.0],
            im: alloc::vec![2.0],
        };
        assert!((lin.integrate_reference(&circle) - 0.5).abs() < 1e-14);
        assert!((PerturbationProbe::AbsSquared.integrate_reference(&circle) - 1.0).abs() < 1e-14);
        // eval agrees with the term expansion at a point
        let z = [c(0.3, -1.2)];
        for p in [u, lin, u_generic()] {
            let direct = p.eval(&z);
            let via: f64 = p
                .terms(1)
                .iter()
                .map(|(a, bb, cc)| (cc * z[0].powu(a[0]) * z[0].conj().powu(bb[0])).re)
                .sum();
            assert!((direct - via).abs() < 1e-14);
        }
    }

    #[test]
    fn calc_lemma_on_interval_and_circle() {
        let spec = ArraySpec {
            shape: Shape::Interval { a: -1.0, b: 1.0 },
            resolution: 201,
            weight: WeightFn::constant(),
            eps: EpsSchedule::inv_n(1.0).unwrap(),
            n_min: 2,
            n_max: 8,
            extractor: Extractor::exchange(),
            slack: 0.02,
        };
        let rows = calc_lemma_experiment(&spec, &PerturbationProbe::constant(1.0), DEFAULT_H).unwrap();
        for r in &rows {
            assert!((r.fprime_direct - 2.0).abs() < 1e-10 && r.gap < 1e-10);
        }
        let rows = calc_lemma_experiment(&spec, &PerturbationProbe::RealPartSquared { coord: 0 }, DEFAULT_H).unwrap();
        assert!((rows[0].g_prime_ref - 1.0).abs() < 1e-14);
        assert!(rows.last().unwrap().gap < rows[0].gap);
        for r in &rows {
            assert!((r.fprime_direct - r.fprime_fd).abs() < 1e-6);
        }
        let circ = ArraySpec {
            shape: Shape::Circle { radius: 1.0 },
            resolution: 360,
            ..spec
        };
        let lin = PerturbationProbe::Affine {
            c0: 0.0,
            re: alloc::vec![1.0],
            im: alloc::vec![0.0],
        };
        let rows = calc_lemma_experiment(&circ, &lin, DEFAULT_H).unwrap();
        assert!(rows.iter().all(|r| r.g_prime_ref == 0.0));
        assert!(rows.last().unwrap().gap < 0.05);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn derivative_identity(seed in 0.0f64..100.0, d in 1usize..=2, n in 1usize..=3, extra in 0usize..3, gauss in any::<bool>()) {
            let b = GradedBasis::new(d, n).unwrap();
            let k = (b.len() + extra).min(12);
            prop_assume!(k >= b.len());
            let mu = generic_measure(k, d, seed);
            let w = if gauss { WeightFn::gaussian(0.5).unwrap() } else { WeightFn::constant() };
            let u = PerturbationProbe::Sum {
                terms: alloc::vec![
                    (1.0, PerturbationProbe::AbsSquared),
                    (seed.sin(), PerturbationProbe::RealPartSquared { coord: d - 1 }),
                ],
            };
            if let Ok(direct) = fn_prime_direct(&b, &w, &u, &mu) {
                let fd = fn_prime_fd(&b, &w, &u, &mu, DEFAULT_H).unwrap();
                prop_assert!((direct - fd).abs() <= 1e-6 * direct.abs().max(1.0));
            }
        }
    }
}
