//! Distributions of the intersection rank `dim(Z ∩ W)`.
//!
//! Finite half-dimension `n` quantities are exact rationals. Limit
//! distributions, moments and the split-unitary families are infinite products
//! and sums, returned as [`TruncatedSeriesValue`]s with rigorous tail bounds.
//!
//! The type of a space enters only through `δ` with `|Λ| = q^δ`, carried by
//! [`SpaceType`]: orthogonal `δ = 0`, unitary `δ = ½`, symplectic `δ = 1`.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::gf::prime_power;
use crate::numeric::{
    format_float, product_tail_bound, reciprocal_product_tail_bound, rounding_slack, DoubleDouble,
    TruncatedSeriesValue,
};
use crate::qseries::{jacobi_product, q_binomial};
use crate::quadspace::SpaceType;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("invalid delta for q = {q}: {reason}")]
    InvalidDelta { q: u64, reason: String },
    #[error("q must be a prime power at least 2, got {0}")]
    InvalidBase(u64),
    #[error("internal mismatch: {0}")]
    InternalMismatch(String),
}

/// Total mass allowed outside the reported support of a default limit distribution.
pub const DEFAULT_TAIL_MASS: f64 = 1e-10;

/// Number of factors used for the infinite products in this module.
fn product_factors(q: u64) -> u32 {
    // q^{-N} < 2^{-120}
    (120.0 / (q as f64).log2()).ceil() as u32 + 2
}

/// `|Λ| = q^δ` as an exact integer; `δ = ½` needs an even power of a prime.
pub fn lambda_size(q: u64, ty: SpaceType) -> Result<u64, DistError> {
    let (_, e) = prime_power(q).ok_or(DistError::InvalidBase(q))?;
    if ty == SpaceType::Unitary && e % 2 != 0 {
        return Err(DistError::InvalidDelta { q, reason: "delta = 1/2 needs q = p^e with e even".into() });
    }
    ty.lambda_size(q).ok_or_else(|| DistError::InvalidDelta { q, reason: "q is not a square".into() })
}

/// Parses `δ` written as `0`, `1/2`, `0.5` or `1`, or a type name.
pub fn parse_delta(s: &str) -> Option<SpaceType> {
    match s.trim() {
        "0" => Some(SpaceType::Orthogonal),
        "1/2" | "0.5" | ".5" => Some(SpaceType::Unitary),
        "1" => Some(SpaceType::Symplectic),
        other => SpaceType::parse(other),
    }
}

fn int(x: u64) -> BigInt {
    BigInt::from(x)
}

fn rat(n: BigInt, d: BigInt) -> BigRational {
    BigRational::new(n, d)
}

fn pow_int(q: u64, e: u32) -> BigInt {
    num_traits::pow(int(q), e as usize)
}

fn rat_pow(x: &BigRational, e: u32) -> BigRational {
    num_traits::pow(x.clone(), e as usize)
}

/// Exact `α_{q,n,d}`: probability that `dim(Z ∩ W) = d` in a metabolic space of
/// dimension `2n`. Zero for `d > n`.
pub fn alpha_finite(q: u64, n: u32, d: u32, ty: SpaceType) -> Result<BigRational, DistError> {
    let l = int(lambda_size(q, ty)?);
    if d > n {
        return Ok(BigRational::zero());
    }
    let mut v = BigRational::one();
    for j in 0..n {
        // (1 + 1/(L q^j))^{-1} = L q^j / (L q^j + 1)
        let lq = &l * pow_int(q, j);
        v *= rat(lq.clone(), lq + 1);
    }
    for j in 1..=d {
        v *= rat(int(q), &l * (pow_int(q, j) - 1));
    }
    for j in 0..d {
        // 1 - q^{j-n}
        let qn = pow_int(q, n - j);
        v *= rat(&qn - 1, qn);
    }
    Ok(v)
}

/// Success probabilities `1/(1 + |Λ| q^{i-1})`, `i = 1..=n`, of the Bernoulli summands.
pub fn bernoulli_parameters(q: u64, n: u32, ty: SpaceType) -> Result<Vec<BigRational>, DistError> {
    let l = int(lambda_size(q, ty)?);
    Ok((1..=n).map(|i| rat(BigInt::one(), &l * pow_int(q, i - 1) + 1)).collect())
}

/// Exact law of a sum of independent Bernoulli variables with the given success probabilities.
pub fn convolve_bernoulli(params: &[BigRational]) -> Vec<BigRational> {
    let mut dist = vec![BigRational::one()];
    for p in params {
        let fail = BigRational::one() - p;
        let mut next = vec![BigRational::zero(); dist.len() + 1];
        for (d, m) in dist.iter().enumerate() {
            next[d] += m * &fail;
            next[d + 1] += m * p;
        }
        dist = next;
    }
    dist
}

/// The distribution of `dim(Z ∩ W)` as a sum of independent Bernoulli variables.
pub fn bernoulli_convolution(q: u64, n: u32, ty: SpaceType) -> Result<RankDistribution, DistError> {
    let masses = convolve_bernoulli(&bernoulli_parameters(q, n, ty)?);
    Ok(RankDistribution::exact(masses.into_iter().enumerate().map(|(d, m)| (d as u32, m)).collect()))
}

/// The finite-`n` distribution from the closed form for `α_{q,n,d}`.
pub fn finite_distribution(q: u64, n: u32, ty: SpaceType) -> Result<RankDistribution, DistError> {
    let masses = (0..=n).map(|d| Ok((d, alpha_finite(q, n, d, ty)?))).collect::<Result<_, DistError>>()?;
    Ok(RankDistribution::exact(masses))
}

/// Evaluates `Σ_d α_{q,n,d} z^d` both from the closed-form masses and as the
/// product `Π_{i<n} (1 + z/(|Λ| q^i)) / (1 + 1/(|Λ| q^i))`, returning the common value.
pub fn generating_poly_eval(q: u64, n: u32, ty: SpaceType, z: &BigRational) -> Result<BigRational, DistError> {
    let l = int(lambda_size(q, ty)?);
    let mut lhs = BigRational::zero();
    for d in 0..=n {
        lhs += alpha_finite(q, n, d, ty)? * rat_pow(z, d);
    }
    let mut rhs = BigRational::one();
    for i in 0..n {
        let lq = BigRational::from_integer(&l * pow_int(q, i));
        let x = BigRational::one() / lq;
        rhs *= (BigRational::one() + &x * z) / (BigRational::one() + x);
    }
    if lhs != rhs {
        return Err(DistError::InternalMismatch(format!(
            "generating function at q={q} n={n} {ty} z={z}: sum {lhs} != product {rhs}"
        )));
    }
    Ok(lhs)
}

/// Exact `Π_{j=1}^{r} q/(|Λ|(q^j - 1))`, the ratio `D(r)/D(0)` of the limit distribution.
fn limit_ratio(q: u64, l: u64, r: u32) -> BigRational {
    let mut c = BigRational::one();
    for j in 1..=r {
        c *= rat(int(q), int(l) * (pow_int(q, j) - 1));
    }
    c
}

/// `α_q = Π_{j≥0} (1 + 1/(|Λ| q^j))^{-1}` with tail bound.
pub fn limit_zero_mass(q: u64, ty: SpaceType) -> Result<TruncatedSeriesValue, DistError> {
    let l = lambda_size(q, ty)?;
    let n = product_factors(q);
    let inv_q = DoubleDouble::ONE / DoubleDouble::new(q as f64);
    let mut x = DoubleDouble::ONE / DoubleDouble::new(l as f64);
    let mut p = DoubleDouble::ONE;
    for _ in 0..n {
        p = p * (DoubleDouble::ONE + x);
        x = x * inv_q;
    }
    let x_max = x.to_f64();
    let tail_sum = x_max / (1.0 - 1.0 / q as f64);
    let v = p.recip().to_f64();
    let bound = reciprocal_product_tail_bound(p.to_f64(), tail_sum, x_max);
    Ok(TruncatedSeriesValue::new(v, bound + rounding_slack(v, n as f64 + 2.0)))
}

/// Upper bound on `Σ_{r > d_max} D_q^δ(r)`.
pub fn limit_tail_mass_bound(q: u64, ty: SpaceType, d_max: u32) -> Result<f64, DistError> {
    let l = lambda_size(q, ty)?;
    let first = limit_ratio(q, l, d_max + 1).to_f64().unwrap_or(f64::INFINITY);
    // Successive ratios q/(|Λ|(q^j - 1)) decrease in j.
    let ratio = q as f64 / (l as f64 * ((q as f64).powi(d_max as i32 + 2) - 1.0));
    if ratio >= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(first / (1.0 - ratio))
}

/// Smallest `d_max` whose remaining limit mass is below `mass`.
pub fn default_d_max(q: u64, ty: SpaceType, mass: f64) -> Result<u32, DistError> {
    let mut d = 0;
    while limit_tail_mass_bound(q, ty, d)? >= mass {
        d += 1;
    }
    Ok(d)
}

/// The limit distribution `D_q^δ(r) = α_q Π_{j=1}^{r} q^{1-δ}/(q^j - 1)` for `r ≤ d_max`.
/// Without `d_max`, the support is cut where the remaining mass drops below [`DEFAULT_TAIL_MASS`].
pub fn limit_distribution(q: u64, ty: SpaceType, d_max: Option<u32>) -> Result<RankDistribution, DistError> {
    let l = lambda_size(q, ty)?;
    let d_max = match d_max {
        Some(d) => d,
        None => default_d_max(q, ty, DEFAULT_TAIL_MASS)?,
    };
    let alpha = limit_zero_mass(q, ty)?;
    let mut masses = BTreeMap::new();
    for r in 0..=d_max {
        let c = limit_ratio(q, l, r);
        let cf = DoubleDouble::from_rational(&c);
        let v = (DoubleDouble::new(alpha.value) * cf).to_f64();
        let bound = alpha.tail_bound * cf.to_f64() + rounding_slack(v, 4.0);
        masses.insert(r, TruncatedSeriesValue::new(v, bound));
    }
    Ok(RankDistribution::Truncated { masses, tail_mass: limit_tail_mass_bound(q, ty, d_max)? })
}

/// Closed form `E(q^{mX}) = Π_{i=1}^{m} (1 + q^{i-δ})` together with its
/// evaluation as a series over the limit distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentCheck {
    pub closed_form: BigRational,
    pub series: TruncatedSeriesValue,
}

impl MomentCheck {
    pub fn agrees(&self) -> bool {
        let c = self.closed_form.to_f64().unwrap_or(f64::NAN);
        self.series.contains(c, rounding_slack(c, 4.0))
    }
}

/// `E(q^{mX})` for the limit variable `X ~ D_q^δ`, both in closed form and as a series.
pub fn moment_q_power(q: u64, ty: SpaceType, m: u32) -> Result<MomentCheck, DistError> {
    let l = lambda_size(q, ty)?;
    let mut closed = BigRational::one();
    for i in 1..=m {
        closed *= BigRational::one() + rat(pow_int(q, i), int(l));
    }
    // Terms q^{md} D(d) eventually decay with ratio q^{m+1}/(|Λ|(q^{d+1} - 1)).
    let qf = q as f64;
    let mut d_max = 1u32;
    loop {
        let ratio = qf.powi(m as i32 + 1) / (l as f64 * (qf.powi(d_max as i32 + 2) - 1.0));
        let term = (limit_ratio(q, l, d_max + 1) * BigRational::from_integer(pow_int(q, m * (d_max + 1))))
            .to_f64()
            .unwrap_or(f64::INFINITY);
        if ratio < 0.5 && term / (1.0 - ratio) < 1e-14 {
            break;
        }
        d_max += 1;
    }
    let dist = limit_distribution(q, ty, Some(d_max))?;
    let RankDistribution::Truncated { masses, .. } = &dist else { unreachable!() };
    let mut s = DoubleDouble::ZERO;
    let mut bound = 0.0;
    for (&d, v) in masses {
        let w = qf.powi((m * d) as i32);
        s = s + DoubleDouble::new(v.value) * DoubleDouble::new(w);
        bound += v.tail_bound * w;
    }
    let ratio = qf.powi(m as i32 + 1) / (l as f64 * (qf.powi(d_max as i32 + 2) - 1.0));
    let first = (limit_ratio(q, l, d_max + 1) * BigRational::from_integer(pow_int(q, m * (d_max + 1))))
        .to_f64()
        .unwrap_or(f64::INFINITY);
    let v = s.to_f64();
    bound += first / (1.0 - ratio) + rounding_slack(v, d_max as f64 + 1.0);
    Ok(MomentCheck { closed_form: closed, series: TruncatedSeriesValue::new(v, bound) })
}

/// `E(X) = Σ_{i≥0} 1/(1 + q^{δ+i})`, summed until the tail bound is at most `tol`.
pub fn expectation(q: u64, ty: SpaceType, tol: f64) -> Result<TruncatedSeriesValue, DistError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let l = lambda_size(q, ty)?;
    let qf = q as f64;
    let mut s = DoubleDouble::ZERO;
    let mut lq = DoubleDouble::new(l as f64);
    let mut i = 0u32;
    loop {
        s = s + (DoubleDouble::ONE + lq).recip();
        lq = lq * DoubleDouble::new(qf);
        i += 1;
        // Σ_{j ≥ i} 1/(|Λ| q^j)
        let tail = 1.0 / (lq.to_f64() * (1.0 - 1.0 / qf));
        if tail <= tol {
            let v = s.to_f64();
            return Ok(TruncatedSeriesValue::new(v, tail + rounding_slack(v, 2.0 * i as f64)));
        }
    }
}

/// `Prob(X even) = (1 + P)/2` with `P = Π_{i≥0} (1 - q^{-δ-i})/(1 + q^{-δ-i})`.
/// Exactly `1/2` for `δ = 0`, where the first factor of `P` vanishes.
pub fn parity_even_prob(q: u64, ty: SpaceType) -> Result<TruncatedSeriesValue, DistError> {
    let l = lambda_size(q, ty)?;
    if l == 1 {
        return Ok(TruncatedSeriesValue::exact(0.5));
    }
    let n = product_factors(q);
    let inv_q = DoubleDouble::ONE / DoubleDouble::new(q as f64);
    let mut x = DoubleDouble::ONE / DoubleDouble::new(l as f64);
    let mut p = DoubleDouble::ONE;
    for _ in 0..n {
        p = p * (DoubleDouble::ONE - x) / (DoubleDouble::ONE + x);
        x = x * inv_q;
    }
    // (1 - x)/(1 + x) = 1 - 2x/(1 + x), deviation at most 2x.
    let x_max = 2.0 * x.to_f64();
    let tail_sum = x_max / (1.0 - 1.0 / q as f64);
    let pv = p.to_f64();
    let bound = product_tail_bound(pv, tail_sum, x_max) + rounding_slack(pv, 2.0 * n as f64);
    let v = ((DoubleDouble::ONE + p) / DoubleDouble::new(2.0)).to_f64();
    Ok(TruncatedSeriesValue::new(v, bound / 2.0 + rounding_slack(v, 2.0)))
}

/// The lower bound `1 - q^{1-δ}/(q - 1)` for `Prob(X = 0)`.
pub fn prob_zero_bound(q: u64, ty: SpaceType) -> Result<BigRational, DistError> {
    let l = lambda_size(q, ty)?;
    Ok(BigRational::one() - rat(int(q), int(l) * (int(q) - 1)))
}

/// `Π_{j=from}^{∞} (1 - q0^{-j})` with tail bound.
fn euler_tail(q0: u64, from: u32) -> TruncatedSeriesValue {
    let n = product_factors(q0);
    let inv = DoubleDouble::ONE / DoubleDouble::new(q0 as f64);
    let mut x = inv.powi(from as i64);
    let mut p = DoubleDouble::ONE;
    for _ in 0..n {
        p = p * (DoubleDouble::ONE - x);
        x = x * inv;
    }
    let x_max = x.to_f64();
    let v = p.to_f64();
    let bound = product_tail_bound(v, x_max / (1.0 - 1.0 / q0 as f64), x_max);
    TruncatedSeriesValue::new(v, bound + rounding_slack(v, n as f64 + 1.0))
}

/// Bound on `|a b - A B|` given bounds on `|a - A|` and `|b - B|`.
fn product_bound(a: TruncatedSeriesValue, b: TruncatedSeriesValue) -> f64 {
    a.value.abs() * b.tail_bound + b.value.abs() * a.tail_bound + a.tail_bound * b.tail_bound
}

/// `U^t_{q0}(r) = q0^{-r(t+r)} Π_{j>r} (1 - q0^{-j}) / Π_{j=1}^{t+r} (1 - q0^{-j})`,
/// the limiting corank distribution of random `s × (s+t)` matrices.
pub fn uniform_dist(q0: u64, t: u32, r: u32) -> Result<TruncatedSeriesValue, DistError> {
    prime_power(q0).ok_or(DistError::InvalidBase(q0))?;
    let qf = DoubleDouble::new(q0 as f64);
    let inv = qf.recip();
    let mut den = DoubleDouble::ONE;
    for j in 1..=(t + r) {
        den = den * (DoubleDouble::ONE - inv.powi(j as i64));
    }
    let c = inv.powi(r as i64 * (t + r) as i64) / den;
    let tail = euler_tail(q0, r + 1);
    let v = (c * DoubleDouble::new(tail.value)).to_f64();
    let cf = c.to_f64();
    Ok(TruncatedSeriesValue::new(v, cf * tail.tail_bound + rounding_slack(v, (t + r) as f64 + 4.0)))
}

/// `1 / Π_{i≥1} (1 - q0^{-2i})(1 + q0^{-(2i-1+ε)})(1 + q0^{-(2i-1-ε)})`.
fn inverse_jacobi_product(q0: u64, eps: u32) -> TruncatedSeriesValue {
    let p = jacobi_product(q0, eps, product_factors(q0) / 2 + 2);
    let v = 1.0 / p.value;
    let bound = p.tail_bound / (p.value * (p.value - p.tail_bound));
    TruncatedSeriesValue::new(v, bound + rounding_slack(v, 2.0))
}

/// The type density `V^ε_{q0}(n) = q0^{-n(n+ε)} / Π_{i≥1} (1 - q0^{-2i})(1 + q0^{-(2i-1+ε)})(1 + q0^{-(2i-1-ε)})`.
pub fn type_density(q0: u64, eps: u32, n: i64) -> Result<TruncatedSeriesValue, DistError> {
    prime_power(q0).ok_or(DistError::InvalidBase(q0))?;
    let eps = eps % 2;
    let inv = inverse_jacobi_product(q0, eps);
    let w = DoubleDouble::new(q0 as f64).recip().powi(n * (n + eps as i64));
    let v = (w * DoubleDouble::new(inv.value)).to_f64();
    Ok(TruncatedSeriesValue::new(v, w.to_f64() * inv.tail_bound + rounding_slack(v, 4.0)))
}

/// `D^{SU,m}_{q0}(r)`: limit probability that two random maximal isotropic
/// submodules of a split unitary space, the fixed one of type `m`, meet in
/// `k0`-dimension `r`.
pub fn su_limit_dist(q0: u64, m: i64, r: u32) -> Result<TruncatedSeriesValue, DistError> {
    prime_power(q0).ok_or(DistError::InvalidBase(q0))?;
    let eps = m.rem_euclid(2);
    let half = (m + eps) / 2;
    let a = r as i64 + half;
    let ri = r as i64;
    // Exponent of q0 for each k, including the prefactor q0^{-a(a+ε)}.
    let mut total = BigRational::zero();
    for k in 0..=ri {
        let e = 2 * (k + eps) * (ri - k) + (2 * k + eps) * (m + eps) - a * (a + eps);
        let binom = BigInt::from(q_binomial(r as u64, k as u64, q0).expect("k <= r"));
        let power = if e >= 0 {
            BigRational::from_integer(pow_int(q0, e as u32))
        } else {
            rat(BigInt::one(), pow_int(q0, (-e) as u32))
        };
        total += power * BigRational::from_integer(binom);
    }
    let c = DoubleDouble::from_rational(&total);
    let tail = euler_tail(q0, r + 1);
    let inv_jac = inverse_jacobi_product(q0, eps as u32);
    let ab = TruncatedSeriesValue::new(tail.value * inv_jac.value, product_bound(tail, inv_jac));
    let v = (c * DoubleDouble::new(tail.value) * DoubleDouble::new(inv_jac.value)).to_f64();
    let cf = c.to_f64();
    Ok(TruncatedSeriesValue::new(v, cf * ab.tail_bound + rounding_slack(v, r as f64 + 8.0)))
}

/// `D^{SU,m}_{q0}(r)` assembled from its decomposition over the type of the
/// random submodule: `Σ_{k=0}^{r} V^ε(2k - r - (m+ε)/2) · U^{|r-2k|}(min(k, r-k))`.
pub fn su_limit_dist_by_types(q0: u64, m: i64, r: u32) -> Result<TruncatedSeriesValue, DistError> {
    let eps = m.rem_euclid(2);
    let half = (m + eps) / 2;
    let mut v = 0.0;
    let mut bound = 0.0;
    for k in 0..=r {
        let idx = 2 * k as i64 - r as i64 - half;
        let vt = type_density(q0, eps as u32, idx)?;
        let (t, rr) = if 2 * k <= r { (r - 2 * k, k) } else { (2 * k - r, r - k) };
        let u = uniform_dist(q0, t, rr)?;
        v += vt.value * u.value;
        bound += product_bound(vt, u) + rounding_slack(vt.value * u.value, 2.0);
    }
    Ok(TruncatedSeriesValue::new(v, bound))
}

/// Law of `dim(Z ∩ W)` for the intersection rank, exact or truncated.
#[derive(Clone, Debug, PartialEq)]
pub enum RankDistribution {
    /// Exact finite support; masses sum to exactly one.
    Exact { masses: BTreeMap<u32, BigRational> },
    /// Truncated support; `tail_mass` bounds the mass beyond the largest key.
    Truncated { masses: BTreeMap<u32, TruncatedSeriesValue>, tail_mass: f64 },
}

impl RankDistribution {
    pub fn exact(masses: BTreeMap<u32, BigRational>) -> Self {
        RankDistribution::Exact { masses }
    }

    /// Exact frequencies of a list of observed ranks.
    pub fn from_counts(counts: &BTreeMap<u32, u64>) -> Self {
        let total: u64 = counts.values().sum();
        let masses = counts
            .iter()
            .map(|(&d, &c)| (d, rat(int(c), int(total))))
            .collect();
        RankDistribution::Exact { masses }
    }

    pub fn support_max(&self) -> u32 {
        match self {
            RankDistribution::Exact { masses } => masses.keys().next_back().copied().unwrap_or(0),
            RankDistribution::Truncated { masses, .. } => masses.keys().next_back().copied().unwrap_or(0),
        }
    }

    /// Exact mass at `d`, if this is an exact distribution.
    pub fn exact_mass(&self, d: u32) -> Option<BigRational> {
        match self {
            RankDistribution::Exact { masses } => Some(masses.get(&d).cloned().unwrap_or_else(BigRational::zero)),
            RankDistribution::Truncated { .. } => None,
        }
    }

    /// Mass at `d` as a float (zero outside the support).
    pub fn mass_f64(&self, d: u32) -> f64 {
        match self {
            RankDistribution::Exact { masses } => masses.get(&d).and_then(|m| m.to_f64()).unwrap_or(0.0),
            RankDistribution::Truncated { masses, .. } => masses.get(&d).map_or(0.0, |v| v.value),
        }
    }

    /// Sum of the recorded masses with a bound on its distance from the full total.
    pub fn total(&self) -> TruncatedSeriesValue {
        match self {
            RankDistribution::Exact { masses } => {
                let s: BigRational = masses.values().cloned().sum();
                TruncatedSeriesValue::exact(s.to_f64().unwrap_or(f64::NAN))
            }
            RankDistribution::Truncated { masses, tail_mass } => {
                let mut s = DoubleDouble::ZERO;
                let mut b = *tail_mass;
                for v in masses.values() {
                    s = s + DoubleDouble::new(v.value);
                    b += v.tail_bound;
                }
                let v = s.to_f64();
                TruncatedSeriesValue::new(v, b + rounding_slack(v, masses.len() as f64))
            }
        }
    }

    /// Exact total mass, if exact.
    pub fn exact_total(&self) -> Option<BigRational> {
        match self {
            RankDistribution::Exact { masses } => Some(masses.values().cloned().sum()),
            RankDistribution::Truncated { .. } => None,
        }
    }

    /// CSV with header `d,mass_numerator,mass_denominator` or `d,mass,tail_bound`.
    pub fn to_csv(&self, precision: usize) -> String {
        let mut out = String::new();
        match self {
            RankDistribution::Exact { masses } => {
                out.push_str("d,mass_numerator,mass_denominator\n");
                for (d, m) in masses {
                    out.push_str(&format!("{d},{},{}\n", m.numer(), m.denom()));
                }
            }
            RankDistribution::Truncated { masses, .. } => {
                out.push_str("d,mass,tail_bound\n");
                for (d, v) in masses {
                    out.push_str(&format!(
                        "{d},{},{}\n",
                        format_float(v.value, precision),
                        format_float(v.tail_bound, precision)
                    ));
                }
            }
        }
        out
    }

    /// JSON object with one record per `d`; numbers are rendered as strings.
    pub fn to_json(&self, precision: usize) -> Value {
        match self {
            RankDistribution::Exact { masses } => {
                let rows: Vec<Value> = masses
                    .iter()
                    .map(|(d, m)| {
                        json!({
                            "d": d.to_string(),
                            "mass_numerator": m.numer().to_string(),
                            "mass_denominator": m.denom().to_string(),
                        })
                    })
                    .collect();
                json!({ "kind": "exact", "masses": rows })
            }
            RankDistribution::Truncated { masses, tail_mass } => {
                let rows: Vec<Value> = masses
                    .iter()
                    .map(|(d, v)| {
                        json!({
                            "d": d.to_string(),
                            "mass": format_float(v.value, precision),
                            "tail_bound": format_float(v.tail_bound, precision),
                        })
                    })
                    .collect();
                json!({ "kind": "truncated", "masses": rows, "tail_mass": format_float(*tail_mass, precision) })
            }
        }
    }
}

/// Integer `q^e` as a big unsigned integer.
pub fn pow_biguint(q: u64, e: u32) -> BigUint {
    num_traits::pow(BigUint::from(q), e as usize)
}

/// Absolute difference of an exact rational and a float.
pub fn abs_diff(a: &BigRational, b: f64) -> f64 {
    (DoubleDouble::from_rational(a) - DoubleDouble::new(b)).abs().to_f64()
}

/// Whether an exact rational is non-negative.
pub fn is_nonnegative(a: &BigRational) -> bool {
    !a.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ALL: [SpaceType; 3] = [SpaceType::Orthogonal, SpaceType::Unitary, SpaceType::Symplectic];

    fn r(n: i64, d: i64) -> BigRational {
        rat(BigInt::from(n), BigInt::from(d))
    }

    fn valid(q: u64, ty: SpaceType) -> bool {
        lambda_size(q, ty).is_ok()
    }

    #[test]
    fn alpha_small_values() {
        assert_eq!(alpha_finite(2, 1, 0, SpaceType::Orthogonal).unwrap(), r(1, 2));
        assert_eq!(alpha_finite(2, 1, 1, SpaceType::Orthogonal).unwrap(), r(1, 2));
        assert_eq!(alpha_finite(2, 1, 0, SpaceType::Symplectic).unwrap(), r(2, 3));
        assert_eq!(alpha_finite(2, 1, 1, SpaceType::Symplectic).unwrap(), r(1, 3));
        assert_eq!(alpha_finite(4, 1, 0, SpaceType::Unitary).unwrap(), r(2, 3));
        assert_eq!(alpha_finite(2, 0, 1, SpaceType::Orthogonal).unwrap(), BigRational::zero());
        assert_eq!(alpha_finite(2, 0, 0, SpaceType::Orthogonal).unwrap(), BigRational::one());
    }

    #[test]
    fn bernoulli_small_values() {
        let d = bernoulli_convolution(2, 2, SpaceType::Orthogonal).unwrap();
        assert_eq!(d.exact_mass(0).unwrap(), r(1, 3));
        assert_eq!(d.exact_mass(1).unwrap(), r(1, 2));
        assert_eq!(d.exact_mass(2).unwrap(), r(1, 6));
        let p = bernoulli_parameters(2, 1, SpaceType::Symplectic).unwrap();
        assert_eq!(p, vec![r(1, 3)]);
    }

    #[test]
    fn unitary_needs_even_exponent() {
        assert!(matches!(alpha_finite(2, 1, 0, SpaceType::Unitary), Err(DistError::InvalidDelta { .. })));
        assert!(matches!(alpha_finite(8, 1, 0, SpaceType::Unitary), Err(DistError::InvalidDelta { .. })));
        assert!(matches!(alpha_finite(6, 1, 0, SpaceType::Orthogonal), Err(DistError::InvalidBase(6))));
        assert!(limit_distribution(9, SpaceType::Unitary, Some(3)).is_ok());
    }

    #[test]
    fn finite_closed_form_equals_convolution() {
        for q in [2u64, 3, 4, 5, 9] {
            for ty in ALL {
                if !valid(q, ty) {
                    continue;
                }
                for n in 0..=10 {
                    let a = finite_distribution(q, n, ty).unwrap();
                    let b = bernoulli_convolution(q, n, ty).unwrap();
                    assert_eq!(a, b, "q={q} n={n} {ty}");
                    assert_eq!(a.exact_total().unwrap(), BigRational::one());
                }
            }
        }
    }

    #[test]
    fn generating_function_values() {
        let z = BigRational::from_integer(2.into());
        assert_eq!(generating_poly_eval(2, 2, SpaceType::Orthogonal, &z).unwrap(), BigRational::from_integer(2.into()));
        for ty in ALL {
            let q = 4;
            let one = BigRational::one();
            assert_eq!(generating_poly_eval(q, 5, ty, &one).unwrap(), one);
            let minus = -BigRational::one();
            let l = lambda_size(q, ty).unwrap() as i64;
            let mut expected = BigRational::one();
            for i in 0..5u32 {
                let x = r(1, l * 4i64.pow(i));
                expected *= (BigRational::one() - &x) / (BigRational::one() + x);
            }
            assert_eq!(generating_poly_eval(q, 5, ty, &minus).unwrap(), expected);
        }
    }

    #[test]
    fn limit_zero_orthogonal_q2() {
        let d = limit_distribution(2, SpaceType::Orthogonal, Some(5)).unwrap();
        let RankDistribution::Truncated { masses, .. } = &d else { panic!() };
        let d0 = masses[&0];
        assert!((d0.value - 0.209712).abs() < 1e-6, "{}", d0.value);
        assert!(d0.tail_bound < 1e-12);
        let ratio = masses[&1].value / d0.value;
        assert!((ratio - 2.0).abs() < 1e-14);
    }

    #[test]
    fn limit_masses_sum_to_one() {
        for q in [2u64, 3, 4, 9, 25] {
            for ty in ALL {
                if !valid(q, ty) {
                    continue;
                }
                let d = limit_distribution(q, ty, None).unwrap();
                let t = d.total();
                assert!((t.value - 1.0).abs() <= t.tail_bound + 1e-15, "q={q} {ty}: {t:?}");
                assert!(t.tail_bound < 1e-10);
            }
        }
    }

    #[test]
    fn finite_approaches_limit() {
        let mut last = f64::INFINITY;
        for n in [5u32, 10, 15, 20, 25, 30] {
            let fin = finite_distribution(2, n, SpaceType::Orthogonal).unwrap();
            let lim = limit_distribution(2, SpaceType::Orthogonal, Some(n)).unwrap();
            let gap = (0..=n).map(|d| abs_diff(&fin.exact_mass(d).unwrap(), lim.mass_f64(d))).fold(0.0, f64::max);
            assert!(gap <= last, "n={n}");
            last = gap;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn moments_match_closed_form() {
        for (q, ty, expect) in [(2u64, SpaceType::Orthogonal, 3i64), (9, SpaceType::Unitary, 4), (2, SpaceType::Symplectic, 2)] {
            let m = moment_q_power(q, ty, 1).unwrap();
            assert_eq!(m.closed_form, BigRational::from_integer(expect.into()));
            assert!(m.agrees(), "{q} {ty}: {m:?}");
        }
        for q in [2u64, 3, 4] {
            for ty in ALL {
                if !valid(q, ty) {
                    continue;
                }
                for m in 1..=3 {
                    let c = moment_q_power(q, ty, m).unwrap();
                    assert!(c.agrees(), "q={q} {ty} m={m}: {c:?}");
                }
            }
        }
    }

    #[test]
    fn expectation_matches_series() {
        let e = expectation(2, SpaceType::Orthogonal, 1e-12).unwrap();
        assert!((e.value - 1.2645).abs() < 1e-4);
        for q in [2u64, 3, 4] {
            for ty in ALL {
                if !valid(q, ty) {
                    continue;
                }
                let e = expectation(q, ty, 1e-13).unwrap();
                let d = limit_distribution(q, ty, Some(40)).unwrap();
                let RankDistribution::Truncated { masses, .. } = &d else { panic!() };
                let s: f64 = masses.iter().map(|(&d, v)| d as f64 * v.value).sum();
                assert!((s - e.value).abs() < 1e-12, "q={q} {ty}");
            }
        }
        let big = 1u64 << 16;
        assert!(expectation(big, SpaceType::Symplectic, 1e-12).unwrap().value < 1.0 / (big - 1) as f64);
    }

    #[test]
    fn parity_bias() {
        for q in [2u64, 3, 4, 9] {
            for ty in ALL {
                if !valid(q, ty) {
                    continue;
                }
                let p = parity_even_prob(q, ty).unwrap();
                if ty == SpaceType::Orthogonal {
                    assert_eq!(p, TruncatedSeriesValue::exact(0.5));
                } else {
                    assert!(p.value - p.tail_bound > 0.5);
                }
                let d = limit_distribution(q, ty, None).unwrap();
                let even: f64 = (0..=d.support_max()).step_by(2).map(|k| d.mass_f64(k)).sum();
                assert!((even - p.value).abs() < 1e-9, "q={q} {ty}");
            }
        }
    }

    #[test]
    fn zero_mass_exceeds_bound() {
        assert_eq!(prob_zero_bound(2, SpaceType::Symplectic).unwrap(), BigRational::zero());
        assert_eq!(prob_zero_bound(9, SpaceType::Symplectic).unwrap(), r(7, 8));
        assert_eq!(prob_zero_bound(4, SpaceType::Unitary).unwrap(), r(1, 3));
        for q in [2u64, 3, 4, 9, 16] {
            for ty in ALL {
                if !valid(q, ty) {
                    continue;
                }
                let z = limit_zero_mass(q, ty).unwrap();
                let b = prob_zero_bound(q, ty).unwrap().to_f64().unwrap();
                assert!(z.value - z.tail_bound > b, "q={q} {ty}");
            }
        }
    }

    #[test]
    fn uniform_values_and_mass() {
        let u = uniform_dist(2, 0, 0).unwrap();
        assert!((u.value - 0.288788).abs() < 1e-6);
        assert!(u.tail_bound < 1e-12);
        for t in 0..4 {
            let s: f64 = (0..=20).map(|r| uniform_dist(2, t, r).unwrap().value).sum();
            assert!((s - 1.0).abs() < 1e-10, "t={t}: {s}");
        }
    }

    #[test]
    fn type_density_values() {
        let v = type_density(2, 0, 0).unwrap();
        assert!((v.value - 1.0 / 2.1289368).abs() < 1e-6);
        for q0 in [2u64, 3, 5] {
            for eps in 0..2 {
                let s: f64 = (-8..=8).map(|n| type_density(q0, eps, n).unwrap().value).sum();
                assert!((s - 1.0).abs() < 1e-10);
            }
            assert_eq!(type_density(q0, 0, 3).unwrap(), type_density(q0, 0, -3).unwrap());
        }
    }

    #[test]
    fn su_limit_symmetry_mass_and_decomposition() {
        for q0 in [2u64, 3, 4, 5] {
            for m in -4i64..=4 {
                let mut total = 0.0;
                for r in 0..=30 {
                    let a = su_limit_dist(q0, m, r).unwrap();
                    let b = su_limit_dist(q0, -m, r).unwrap();
                    assert!((a.value - b.value).abs() <= 1e-15 + a.tail_bound + b.tail_bound);
                    if r <= 8 {
                        let c = su_limit_dist_by_types(q0, m, r).unwrap();
                        assert!((a.value - c.value).abs() <= 1e-14 + a.tail_bound + c.tail_bound, "q0={q0} m={m} r={r}");
                    }
                    total += a.value;
                }
                assert!((total - 1.0).abs() < 1e-8, "q0={q0} m={m}: {total}");
            }
        }
    }

    #[test]
    fn serialization_formats() {
        let d = finite_distribution(2, 1, SpaceType::Symplectic).unwrap();
        assert_eq!(d.to_csv(6), "d,mass_numerator,mass_denominator\n0,2,3\n1,1,3\n");
        let j = d.to_json(6);
        assert_eq!(j["masses"][1]["mass_numerator"], "1");
        let l = limit_distribution(2, SpaceType::Orthogonal, Some(1)).unwrap();
        assert!(l.to_csv(6).starts_with("d,mass,tail_bound\n0,0.20971"));
        assert_eq!(parse_delta("1/2"), Some(SpaceType::Unitary));
        assert_eq!(parse_delta("sym"), Some(SpaceType::Symplectic));
    }

    proptest! {
        #[test]
        fn generating_function_identity(n in 0u32..=12, zn in -6i64..=6, zd in 1i64..=4, qi in 0usize..4, ti in 0usize..3) {
            let q = [2u64, 3, 4, 9][qi];
            let ty = ALL[ti];
            prop_assume!(valid(q, ty));
            let z = r(zn, zd);
            prop_assert!(generating_poly_eval(q, n, ty, &z).is_ok());
        }

        #[test]
        fn finite_masses_nonnegative(n in 0u32..=15, qi in 0usize..4, ti in 0usize..3) {
            let q = [2u64, 3, 4, 9][qi];
            let ty = ALL[ti];
            prop_assume!(valid(q, ty));
            for d in 0..=n + 1 {
                prop_assert!(is_nonnegative(&alpha_finite(q, n, d, ty).unwrap()));
            }
        }
    }
}
