//! Graded monomial bases `e_1, e_2, ...` of the polynomials of degree at most
//! `n` in `d` complex variables.
//!
//! Monomials are listed by nondecreasing total degree. Inside one degree block
//! the exponent vectors are sorted in plain ascending lexicographic order on
//! `(a_1, ..., a_d)`; for `d = 2`, degree 1 therefore reads `z_2, z_1`. Since
//! `|VDM|`, Gram determinants and Bergman functions do not depend on the order
//! inside a block, the choice only affects phases and output layout.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::linalg::Scalar;
use crate::{Error, Result};

/// Exponent vector `a = (a_1, ..., a_d)` of the monomial `z^a`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(transparent))]
pub struct MultiIndex {
    exponents: Vec<u32>,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        Ok(MultiIndex { exponents })
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    /// Total degree `|a|`.
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

/// The ordered list `e_1, ..., e_{m_n}` with its counts.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GradedBasis {
    d: usize,
    n: usize,
    indices: Vec<MultiIndex>,
    m: u64,
    l: u64,
}

/// `(m_n, l_n)` for `d` variables and degree `n`, in exact integer arithmetic.
///
/// `m_n = C(n + d, d)` and `l_n = sum_j deg e_j = d n m_n / (d + 1)`.
pub fn dims(d: usize, n: usize) -> Result<(u64, u64)> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let overflow = || Error::Overflow { d, n };
    // C(n + i, i) = C(n + i - 1, i - 1) * (n + i) / i, exact at every step.
    let mut m: u128 = 1;
    for i in 1..=d as u128 {
        m = m.checked_mul(n as u128 + i).ok_or_else(overflow)? / i;
    }
    let num = (d as u128)
        .checked_mul(n as u128)
        .and_then(|x| x.checked_mul(m))
        .ok_or_else(overflow)?;
    debug_assert_eq!(num % (d as u128 + 1), 0);
    let l = num / (d as u128 + 1);
    let m = u64::try_from(m).map_err(|_| overflow())?;
    let l = u64::try_from(l).map_err(|_| overflow())?;
    // n * m_n must also fit, per the counting contract.
    (n as u64).checked_mul(m).ok_or_else(overflow)?;
    Ok((m, l))
}

/// All exponent vectors of `dim` entries summing to `degree`, ascending lex.
fn push_block(dim: usize, degree: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if dim == 1 {
        prefix.push(degree);
        out.push(MultiIndex {
            exponents: prefix.clone(),
        });
        prefix.pop();
        return;
    }
    for first in 0..=degree {
        prefix.push(first);
        push_block(dim - 1, degree - first, prefix, out);
        prefix.pop();
    }
}

impl GradedBasis {
    /// Enumerate the monomials of degree `<= n` in `d` variables.
    pub fn new(d: usize, n: usize) -> Result<Self> {
        let (m, l) = dims(d, n)?;
        let mut indices = Vec::with_capacity(m as usize);
        let mut prefix = Vec::with_capacity(d);
        for k in 0..=n as u32 {
            push_block(d, k, &mut prefix, &mut indices);
        }
        debug_assert_eq!(indices.len() as u64, m);
        Ok(GradedBasis { d, n, indices, m, l })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    /// `m_n`, the number of basis monomials.
    pub fn len(&self) -> usize {
        self.m as usize
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    /// `l_n`, the sum of the degrees of the basis monomials.
    pub fn l(&self) -> u64 {
        self.l
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    /// Check the structural invariants; used after deserialization.
    pub fn validate(&self) -> Result<()> {
        let fresh = GradedBasis::new(self.d, self.n)?;
        let mut a: Vec<&MultiIndex> = self.indices.iter().collect();
        let mut b: Vec<&MultiIndex> = fresh.indices.iter().collect();
        let degrees_sorted = self.indices.windows(2).all(|w| w[0].degree() <= w[1].degree());
        a.sort();
        b.sort();
        if a != b || !degrees_sorted || self.m != fresh.m || self.l != fresh.l {
            return Err(Error::param("basis", "indices do not form a graded basis"));
        }
        Ok(())
    }

    /// Reorder monomials inside their degree blocks. `perm` lists, for each
    /// new position, the old position; it must map every block onto itself.
    pub fn permuted_within_degree(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.indices.len() {
            return Err(Error::param("perm", "length differs from m_n"));
        }
        let mut seen = vec![false; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            if old >= perm.len() || seen[old] {
                return Err(Error::param("perm", "not a permutation"));
            }
            seen[old] = true;
            if self.indices[old].degree() != self.indices[new].degree() {
                return Err(Error::param("perm", "moves a monomial across degree blocks"));
            }
        }
        Ok(GradedBasis {
            indices: perm.iter().map(|&i| self.indices[i].clone()).collect(),
            ..self.clone()
        })
    }

    fn check_point(&self, z: &[Complex64]) -> Result<()> {
        if z.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: z.len(),
            });
        }
        Ok(())
    }

    /// `[e_1(z), ..., e_{m_n}(z)]`.
    pub fn eval(&self, z: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_point(z)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        self.eval_into(z, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation into `out`; `z.len()` must equal `d`.
    pub(crate) fn eval_into<T: Scalar>(&self, z: &[Complex64], out: &mut [T]) {
        let n = self.n;
        // powers[c * (n + 1) + e] = z_c^e
        let mut powers = vec![T::ONE; self.d * (n + 1)];
        for (c, &zc) in z.iter().enumerate() {
            let zc = T::from_c64(zc);
            for e in 1..=n {
                powers[c * (n + 1) + e] = powers[c * (n + 1) + e - 1] * zc;
            }
        }
        for (slot, idx) in out.iter_mut().zip(&self.indices) {
            let mut v = T::ONE;
            for (c, &a) in idx.exponents.iter().enumerate() {
                if a > 0 {
                    v = v * powers[c * (n + 1) + a as usize];
                }
            }
            *slot = v;
        }
    }
}
