//! Split unitary spaces `ℍ(V0) = V0 ⊕ V0*` over the split ring `k = k0 ⊕ k0`.
//!
//! The space is the free `k`-module `k^n` with hermitian form
//! `h(x, y) = Σ x_i σ(y_i)` and quadratic class `s = α h`, `α = (1, 0)`. Its
//! left component is `V0 = k0^n` and its right component is `V0* = k0^n`,
//! paired by the coordinate dot product. Every maximal isotropic submodule is
//! `W ⊕ W°` for a subspace `W ⊆ V0` and its annihilator `W° ⊆ V0*`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::dist::{self, DistError};
use crate::gf::{Field, FieldElement, SplitRing, SplitRingElement};
use crate::linalg::{all_subspaces, LinalgError, SplitSubspace, Subspace};
use crate::qseries::{galois_number, QBinomialTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplitError {
    #[error("ambient dimensions differ: {0} vs {1}")]
    AmbientMismatch(usize, usize),
    #[error("r = {r} outside 0..={n}")]
    OutOfRange { r: u32, n: u32 },
    #[error("invalid types: {0}")]
    InvalidType(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// `ℍ(V0)` for `V0 = k0^n`.
#[derive(Clone, Debug)]
pub struct SplitUnitarySpace {
    ring: SplitRing,
    k0: Arc<Field>,
    n: usize,
}

/// The maximal isotropic submodule `W ⊕ W°`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SUMaximalIsotropic {
    pub w: Subspace,
    pub wann: Subspace,
}

impl SUMaximalIsotropic {
    /// Type `m = 2 dim W - n`.
    pub fn type_m(&self) -> i64 {
        2 * self.w.dim() as i64 - self.w.ambient_dim() as i64
    }

    pub fn as_submodule(&self) -> SplitSubspace {
        SplitSubspace { left: self.w.clone(), right: self.wann.clone() }
    }
}

impl SplitUnitarySpace {
    pub fn new(k0: Arc<Field>, n: usize) -> Self {
        SplitUnitarySpace { ring: SplitRing::new((*k0).clone()), k0, n }
    }

    pub fn k0(&self) -> &Field {
        &self.k0
    }

    pub fn ring(&self) -> &SplitRing {
        &self.ring
    }

    /// Rank `n` over `k`; also the `k0`-dimension of `V0`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `h(x, y) = Σ x_i σ(y_i)`.
    pub fn h(&self, x: &[SplitRingElement], y: &[SplitRingElement]) -> SplitRingElement {
        x.iter()
            .zip(y)
            .fold(SplitRingElement::ZERO, |acc, (&a, &b)| self.ring.add(acc, self.ring.mul(a, b.swap())))
    }

    /// `s(x, y) = α h(x, y)`.
    pub fn s(&self, x: &[SplitRingElement], y: &[SplitRingElement]) -> SplitRingElement {
        self.ring.mul(self.ring.alpha(), self.h(x, y))
    }

    /// Whether `q(x) = s(x, x)` lies in `Λ = {(a, -a)}`.
    pub fn q_is_zero(&self, x: &[SplitRingElement]) -> bool {
        let v = self.s(x, x);
        self.k0.add(v.left, v.right).is_zero()
    }

    /// `k`-module generators of a submodule: `(b, 0)` for `b` in the left basis, `(0, b)` for the right.
    pub fn generators(&self, z: &SplitSubspace) -> Vec<Vec<SplitRingElement>> {
        let zero = FieldElement::ZERO;
        let mut out: Vec<Vec<SplitRingElement>> = z
            .left
            .basis_vecs()
            .into_iter()
            .map(|b| b.into_iter().map(|x| SplitRingElement::new(x, zero)).collect())
            .collect();
        out.extend(
            z.right
                .basis_vecs()
                .into_iter()
                .map(|b| b.into_iter().map(|x| SplitRingElement::new(zero, x)).collect::<Vec<_>>()),
        );
        out
    }

    /// Isotropy decided with the hermitian and quadratic forms on generators.
    pub fn is_isotropic(&self, z: &SplitSubspace) -> Result<bool, SplitError> {
        self.check(z.ambient_dim())?;
        let gens = self.generators(z);
        for (i, a) in gens.iter().enumerate() {
            if !self.q_is_zero(a) {
                return Ok(false);
            }
            for b in &gens[i..] {
                if self.h(a, b) != SplitRingElement::ZERO {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Isotropic of `k0`-dimension `n`, i.e. equal to its orthogonal complement.
    pub fn is_maximal_isotropic(&self, z: &SplitSubspace) -> Result<bool, SplitError> {
        Ok(z.dim_k0() == self.n && self.is_isotropic(z)?)
    }

    /// `Z^⊥ = (Z_R°, Z_L°)`.
    pub fn orthogonal_complement(&self, z: &SplitSubspace) -> Result<SplitSubspace, SplitError> {
        self.check(z.ambient_dim())?;
        Ok(SplitSubspace { left: z.right.annihilator(&self.k0), right: z.left.annihilator(&self.k0) })
    }

    fn check(&self, ambient: usize) -> Result<(), SplitError> {
        if ambient != self.n {
            return Err(SplitError::AmbientMismatch(self.n, ambient));
        }
        Ok(())
    }

    /// Generic enumeration of maximal isotropic submodules: every pair of
    /// subspaces `(Z_L, Z_R)` of total dimension `n`, kept when isotropic.
    pub fn enumerate_maximal_isotropic(&self) -> Vec<SplitSubspace> {
        let subs = all_subspaces(&self.k0, self.n);
        let mut out = Vec::new();
        for l in &subs {
            for r in subs.iter().filter(|r| l.dim() + r.dim() == self.n) {
                let z = SplitSubspace { left: l.clone(), right: r.clone() };
                if self.is_maximal_isotropic(&z).expect("same ambient") {
                    out.push(z);
                }
            }
        }
        out.sort();
        out
    }
}

/// `W ⊕ W°` for a subspace `W ⊆ V0`.
pub fn su_from_base(space: &SplitUnitarySpace, w: &Subspace) -> Result<SUMaximalIsotropic, SplitError> {
    space.check(w.ambient_dim())?;
    Ok(SUMaximalIsotropic { w: w.clone(), wann: w.annihilator(space.k0()) })
}

/// `dim_{k0}` of `Ã ∩ B̃`: `dim(W_A ∩ W_B) + dim(W_A° ∩ W_B°)`.
pub fn su_intersection_dim(space: &SplitUnitarySpace, a: &SUMaximalIsotropic, b: &SUMaximalIsotropic) -> Result<usize, SplitError> {
    space.check(a.w.ambient_dim())?;
    space.check(b.w.ambient_dim())?;
    let f = space.k0();
    Ok(a.w.intersect(f, &b.w)?.dim() + a.wann.intersect(f, &b.wann)?.dim())
}

/// Exact probability that a uniformly random maximal isotropic `Z̃` meets the fixed
/// `W̃` in `k0`-dimension `r`:
/// `Σ_{d ≡ d_W + n - r (2)} q0^{((n-r)² - (d-d_W)²)/4} [d_W, (d+d_W+r-n)/2] [n-d_W, (d-d_W-r+n)/2] / G(n, q0)`.
pub fn su_exact_intersection_prob(space: &SplitUnitarySpace, fixed: &SUMaximalIsotropic, r: u32) -> Result<BigRational, SplitError> {
    let n = space.n() as i64;
    if r as i64 > n {
        return Err(SplitError::OutOfRange { r, n: n as u32 });
    }
    let q0 = space.k0().q() as u64;
    let table = QBinomialTable::new(q0, space.n());
    let dw = fixed.w.dim() as i64;
    let r = r as i64;
    let mut total = BigInt::zero();
    for d in 0..=n {
        if (d - dw - n + r).rem_euclid(2) != 0 {
            continue;
        }
        let (a, b) = ((d + dw + r - n) / 2, (d - dw - r + n) / 2);
        if a < 0 || a > dw || b < 0 || b > n - dw {
            continue;
        }
        let e = ((n - r) * (n - r) - (d - dw) * (d - dw)) / 4;
        let term = BigInt::from(dist::pow_biguint(q0, e as u32))
            * BigInt::from(table.get(dw as usize, a as usize).expect("in range").clone())
            * BigInt::from(table.get((n - dw) as usize, b as usize).expect("in range").clone());
        total += term;
    }
    Ok(BigRational::new(total, BigInt::from(galois_number(n as u64, q0))))
}

/// `P_{m0,m1,n}(j)`: probability that `dim(W ∩ Z) = j` for a fixed `W ⊆ k0^n` of
/// dimension `(n+m0)/2` and a uniformly random `Z` of dimension `(n+m1)/2`.
pub fn fixed_type_intersection_prob(q0: u64, n: u32, m0: i64, m1: i64, j: u32) -> Result<BigRational, SplitError> {
    let n_i = n as i64;
    if (n_i + m0).rem_euclid(2) != 0 || (n_i + m1).rem_euclid(2) != 0 || m0.abs() > n_i || m1.abs() > n_i {
        return Err(SplitError::InvalidType(format!("m0={m0}, m1={m1} for n={n}")));
    }
    let (d0, d1) = (((n_i + m0) / 2) as usize, ((n_i + m1) / 2) as usize);
    let j = j as usize;
    let table = QBinomialTable::new(q0, n as usize);
    if j > d0.min(d1) || n as usize - d0 < d1 - j {
        return Ok(BigRational::zero());
    }
    let num = BigInt::from(dist::pow_biguint(q0, ((d0 - j) * (d1 - j)) as u32))
        * BigInt::from(table.get(d0, j).expect("in range").clone())
        * BigInt::from(table.get(n as usize - d0, d1 - j).expect("in range").clone());
    Ok(BigRational::new(num, BigInt::from(table.get(n as usize, d1).expect("in range").clone())))
}

/// `max_r |P_{m0,m1,n}(r) - U^{|t|}(r - max(0, t))|` with `t = (m0+m1)/2`, the
/// finite masses computed exactly and then rounded.
pub fn uniform_limit_gap(q0: u64, n: u32, m0: i64, m1: i64) -> Result<f64, SplitError> {
    let t = (m0 + m1) / 2;
    let shift = t.max(0);
    let mut gap = 0.0f64;
    for r in 0..=n {
        let p = fixed_type_intersection_prob(q0, n, m0, m1, r)?.to_f64().unwrap_or(f64::NAN);
        let u = if (r as i64) < shift {
            0.0
        } else {
            dist::uniform_dist(q0, t.unsigned_abs() as u32, (r as i64 - shift) as u32)?.value
        };
        gap = gap.max((p - u).abs());
    }
    Ok(gap)
}
