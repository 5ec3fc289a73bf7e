//! Small dense factorizations shared by the determinant, Gram and Fekete code.
//!
//! Everything is generic over [`Scalar`] so the same routine runs in plain
//! `Complex64` (fast ranking paths) and in double-double complex arithmetic
//! (reported values and exact-identity checks).

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Div, Mul, Neg, Sub};

// Float math in no_std builds; unused once std is linked.
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::dd::{Cdd, Dd};

/// Relative pivot threshold below which a factorization is declared singular.
pub const PIVOT_RTOL: f64 = 1e-14;

pub(crate) trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    const ZERO: Self;
    const ONE: Self;
    fn from_c64(z: Complex64) -> Self;
    fn to_c64(self) -> Complex64;
    fn conj(self) -> Self;
    /// `|x|^2` rounded to `f64`.
    fn norm_sqr_f64(self) -> f64;
    fn scale_pow2(self, k: i32) -> Self;
    /// Real part, kept at working precision.
    fn re_part(self) -> Self;

    fn abs_f64(self) -> f64 {
        self.norm_sqr_f64().sqrt()
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const ONE: Self = Complex64::new(1.0, 0.0);
    #[inline]
    fn from_c64(z: Complex64) -> Self {
        z
    }
    #[inline]
    fn to_c64(self) -> Complex64 {
        self
    }
    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    #[inline]
    fn norm_sqr_f64(self) -> f64 {
        self.norm_sqr()
    }
    #[inline]
    fn abs_f64(self) -> f64 {
        self.re.hypot(self.im)
    }
    #[inline]
    fn scale_pow2(self, k: i32) -> Self {
        self * crate::dd::pow2(k)
    }
    #[inline]
    fn re_part(self) -> Self {
        Complex64::new(self.re, 0.0)
    }
}

impl Scalar for Cdd {
    const ZERO: Self = Cdd {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };
    const ONE: Self = Cdd {
        re: Dd::ONE,
        im: Dd::ZERO,
    };
    #[inline]
    fn from_c64(z: Complex64) -> Self {
        Cdd::from_c64(z)
    }
    #[inline]
    fn to_c64(self) -> Complex64 {
        Cdd::to_c64(self)
    }
    #[inline]
    fn conj(self) -> Self {
        Cdd::conj(self)
    }
    #[inline]
    fn norm_sqr_f64(self) -> f64 {
        self.norm_sqr().to_f64()
    }
    #[inline]
    fn scale_pow2(self, k: i32) -> Self {
        Cdd::scale_pow2(self, k)
    }
    #[inline]
    fn re_part(self) -> Self {
        Cdd {
            re: self.re,
            im: Dd::ZERO,
        }
    }
}

/// Exponent `k` such that `2^k` is within a factor two of `x > 0`.
pub(crate) fn nearest_pow2_exponent(x: f64) -> i32 {
    if x > 0.0 && x.is_finite() {
        x.log2().round() as i32
    } else {
        0
    }
}

/// `log|det|` and phase of a square matrix.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LogDet {
    pub log_abs: f64,
    pub phase: Complex64,
    pub singular: bool,
}

/// LU factors with partial pivoting, `P A = L U`, stored in place.
pub(crate) struct Lu<T> {
    lu: Vec<T>,
    perm: Vec<usize>,
    m: usize,
    swaps: usize,
    singular: bool,
}

impl<T: Scalar> Lu<T> {
    /// Factor the row-major `m x m` matrix `a`.
    pub fn factor(mut a: Vec<T>, m: usize) -> Lu<T> {
        debug_assert_eq!(a.len(), m * m);
        let mut perm: Vec<usize> = (0..m).collect();
        let mut swaps = 0;
        let mut max_piv = 0.0f64;
        let mut min_piv = f64::INFINITY;
        for k in 0..m {
            let mut p = k;
            let mut best = a[k * m + k].norm_sqr_f64();
            for i in k + 1..m {
                let v = a[i * m + k].norm_sqr_f64();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                for j in 0..m {
                    a.swap(k * m + j, p * m + j);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let piv = a[k * m + k];
            let piv_abs = best.sqrt();
            max_piv = max_piv.max(piv_abs);
            min_piv = min_piv.min(piv_abs);
            if piv_abs == 0.0 {
                continue;
            }
            for i in k + 1..m {
                let f = a[i * m + k] / piv;
                a[i * m + k] = f;
                for j in k + 1..m {
                    let u = a[k * m + j];
                    a[i * m + j] = a[i * m + j] - f * u;
                }
            }
        }
        let singular = m > 0 && (min_piv == 0.0 || min_piv < PIVOT_RTOL * max_piv);
        Lu {
            lu: a,
            perm,
            m,
            swaps,
            singular,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn log_det(&self) -> LogDet {
        if self.singular {
            return LogDet {
                log_abs: f64::NEG_INFINITY,
                phase: Complex64::new(0.0, 0.0),
                singular: true,
            };
        }
        let mut log_abs = 0.0;
        let mut phase = if self.swaps % 2 == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(-1.0, 0.0)
        };
        for k in 0..self.m {
            let u = self.lu[k * self.m + k];
            let a = u.abs_f64();
            log_abs += a.ln();
            let c = u.to_c64() / a;
            phase *= c;
            // Renormalize to stop drift in long products.
            phase /= phase.norm();
        }
        LogDet {
            log_abs,
            phase,
            singular: false,
        }
    }

    /// Solve `A x = b` in place.
    pub fn solve(&self, b: &mut [T]) {
        let m = self.m;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..m {
            let mut s = x[i];
            for j in 0..i {
                s = s - self.lu[i * m + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..m).rev() {
            let mut s = x[i];
            for j in i + 1..m {
                s = s - self.lu[i * m + j] * x[j];
            }
            x[i] = s / self.lu[i * m + i];
        }
        b.copy_from_slice(&x);
    }
}

/// `log|det|` of a row-major `m x m` matrix whose columns are scaled to unit
/// order by exact powers of two before a partially pivoted LU.
pub(crate) fn scaled_log_det<T: Scalar>(mut a: Vec<T>, m: usize) -> LogDet {
    let mut log_scale = 0.0;
    for j in 0..m {
        let mut cmax = 0.0f64;
        for i in 0..m {
            cmax = cmax.max(a[i * m + j].abs_f64());
        }
        if cmax == 0.0 {
            return LogDet {
                log_abs: f64::NEG_INFINITY,
                phase: Complex64::new(0.0, 0.0),
                singular: true,
            };
        }
        let k = nearest_pow2_exponent(cmax);
        if k != 0 {
            for i in 0..m {
                a[i * m + j] = a[i * m + j].scale_pow2(-k);
            }
            log_scale += k as f64 * core::f64::consts::LN_2;
        }
    }
    let mut det = Lu::factor(a, m).log_det();
    if !det.singular {
        det.log_abs += log_scale;
    }
    det
}

/// `G = S L D L^H S` factorization of a Hermitian positive definite matrix,
/// where `S` is a power-of-two diagonal equilibration making `diag(S^-1 G S^-1)`
/// of unit order.
pub(crate) struct Ldl<T> {
    l: Vec<T>,
    d: Vec<T>,
    /// `G = diag(2^e) H diag(2^e)` with `H` equilibrated.
    exps: Vec<i32>,
    m: usize,
}

/// Reason an [`Ldl`] factorization was rejected.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Singular;

impl<T: Scalar> Ldl<T> {
    /// Factor `g` (row-major, Hermitian). `rtol` bounds `sqrt(d_min / d_max)`.
    pub fn factor(g: &[T], m: usize, rtol: f64) -> Result<Ldl<T>, Singular> {
        let mut exps = vec![0i32; m];
        for i in 0..m {
            let gii = g[i * m + i].to_c64().re;
            if gii.is_nan() || gii <= 0.0 {
                return Err(Singular);
            }
            exps[i] = nearest_pow2_exponent(gii) / 2;
        }
        let mut h: Vec<T> = g.to_vec();
        for i in 0..m {
            for j in 0..m {
                h[i * m + j] = h[i * m + j].scale_pow2(-exps[i] - exps[j]);
            }
        }
        let mut l = vec![T::ZERO; m * m];
        let mut d = vec![T::ZERO; m];
        let mut dmax = 0.0f64;
        for j in 0..m {
            // d_j = h_jj - sum_k |l_jk|^2 d_k
            let mut s = h[j * m + j].re_part();
            for k in 0..j {
                let ljk = l[j * m + k];
                s = s - (ljk * ljk.conj()).re_part() * d[k];
            }
            let dj = s.to_c64().re;
            if dj.is_nan() || dj <= 0.0 {
                return Err(Singular);
            }
            dmax = dmax.max(dj);
            d[j] = s;
            l[j * m + j] = T::ONE;
            for i in j + 1..m {
                let mut s = h[i * m + j];
                for k in 0..j {
                    s = s - l[i * m + k] * d[k] * l[j * m + k].conj();
                }
                l[i * m + j] = s / d[j];
            }
        }
        let thresh = rtol * rtol * dmax;
        if d.iter().any(|x| x.to_c64().re < thresh) {
            return Err(Singular);
        }
        Ok(Ldl { l, d, exps, m })
    }

    pub fn log_det(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.m {
            s += self.d[i].to_c64().re.ln() + 2.0 * self.exps[i] as f64 * core::f64::consts::LN_2;
        }
        s
    }

    /// `v^H G^{-1} v`.
    pub fn inv_quad_form(&self, v: &[T]) -> f64 {
        let m = self.m;
        // y = L^{-1} S^{-1} v
        let mut y: Vec<T> = (0..m).map(|i| v[i].scale_pow2(-self.exps[i])).collect();
        for i in 0..m {
            let mut s = y[i];
            for k in 0..i {
                s = s - self.l[i * m + k] * y[k];
            }
            y[i] = s;
        }
        let mut acc = T::ZERO;
        for i in 0..m {
            acc = acc + (y[i] * y[i].conj()).re_part() / self.d[i];
        }
        acc.to_c64().re
    }
}
