//! Gaussian binomials, Galois numbers, `t`-Pochhammer symbols and certified
//! numerical checks of the Jacobi triple product and a Rogers–Ramanujan type
//! double-sum identity.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::numeric::{product_tail_bound, rounding_slack, DoubleDouble, TruncatedSeriesValue};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QSeriesError {
    #[error("k = {k} outside 0..={n}")]
    OutOfRange { n: u64, k: u64 },
    #[error("infinite product with |t| = {0} ≥ 1 diverges")]
    DivergentParameter(f64),
    #[error("q must be at least 2, got {0}")]
    BadBase(u64),
}

fn pow_big(q: u64, e: u64) -> BigUint {
    num_traits::pow(BigUint::from(q), e as usize)
}

/// `[n choose k]_q`, the number of `k`-dimensional subspaces of `GF(q)^n`, by the product formula.
pub fn q_binomial(n: u64, k: u64, q: u64) -> Result<BigUint, QSeriesError> {
    if k > n {
        return Err(QSeriesError::OutOfRange { n, k });
    }
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for j in 0..k {
        num *= pow_big(q, n - j) - 1u32;
        den *= pow_big(q, j + 1) - 1u32;
    }
    Ok(num / den)
}

/// Cached `[n choose k]_q` for `n ≤ n_max`, filled by the Pascal recurrence
/// `[n k] = [n-1 k-1] + q^k [n-1 k]`.
#[derive(Clone, Debug)]
pub struct QBinomialTable {
    q: u64,
    rows: Vec<Vec<BigUint>>,
}

impl QBinomialTable {
    pub fn new(q: u64, n_max: usize) -> Self {
        let mut rows: Vec<Vec<BigUint>> = vec![vec![BigUint::one()]];
        for n in 1..=n_max {
            let prev = &rows[n - 1];
            let row: Vec<BigUint> = (0..=n)
                .map(|k| {
                    let left = if k >= 1 { prev[k - 1].clone() } else { BigUint::zero() };
                    let right = if k < n { pow_big(q, k as u64) * &prev[k] } else { BigUint::zero() };
                    left + right
                })
                .collect();
            rows.push(row);
        }
        QBinomialTable { q, rows }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn n_max(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn get(&self, n: usize, k: usize) -> Result<&BigUint, QSeriesError> {
        self.rows
            .get(n)
            .and_then(|r| r.get(k))
            .ok_or(QSeriesError::OutOfRange { n: n as u64, k: k as u64 })
    }
}

/// `G(n, q) = Σ_k [n choose k]_q`, the number of subspaces of `GF(q)^n`.
pub fn galois_number(n: u64, q: u64) -> BigUint {
    (0..=n).map(|k| q_binomial(n, k, q).expect("k ≤ n")).sum()
}

/// Length of a Pochhammer product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PochhammerLength {
    Finite(u32),
    /// The infinite product, truncated after the given number of factors.
    Infinite { factors: u32 },
}

/// `(a; t)_n = (1 - a)(1 - a t) ⋯ (1 - a t^{n-1})`, in double-double precision.
pub fn pochhammer_dd(a: DoubleDouble, t: DoubleDouble, n: u32) -> DoubleDouble {
    let mut p = DoubleDouble::ONE;
    let mut term = a;
    for _ in 0..n {
        p = p * (DoubleDouble::ONE - term);
        term = term * t;
    }
    p
}

/// `(a; t)_n` with a rigorous tail bound when `n = ∞`.
pub fn pochhammer(a: f64, t: f64, n: PochhammerLength) -> Result<TruncatedSeriesValue, QSeriesError> {
    let (a_dd, t_dd) = (DoubleDouble::new(a), DoubleDouble::new(t));
    match n {
        PochhammerLength::Finite(n) => {
            let v = pochhammer_dd(a_dd, t_dd, n).to_f64();
            Ok(TruncatedSeriesValue::new(v, rounding_slack(v, n as f64 + 1.0)))
        }
        PochhammerLength::Infinite { factors } => {
            if t.abs() >= 1.0 {
                return Err(QSeriesError::DivergentParameter(t.abs()));
            }
            let v = pochhammer_dd(a_dd, t_dd, factors).to_f64();
            let x_max = a.abs() * t.abs().powi(factors as i32);
            let tail_sum = x_max / (1.0 - t.abs());
            let bound = if x_max < 1.0 {
                product_tail_bound(v, tail_sum, x_max)
            } else {
                f64::INFINITY
            };
            Ok(TruncatedSeriesValue::new(v, bound + rounding_slack(v, factors as f64 + 1.0)))
        }
    }
}

/// `(t; t)_∞` for `0 < t < 1`, with tail bound.
pub fn euler_function(t: f64, factors: u32) -> TruncatedSeriesValue {
    let v = pochhammer_dd(DoubleDouble::new(t), DoubleDouble::new(t), factors).to_f64();
    let x_max = t.powi(factors as i32 + 1);
    let bound = product_tail_bound(v, x_max / (1.0 - t), x_max);
    TruncatedSeriesValue::new(v, bound + rounding_slack(v, factors as f64 + 1.0))
}

/// Result of checking an identity `lhs = rhs` between two truncated infinite expressions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// Certified bound on `|lhs - rhs|` if the identity holds: sum of both truncation bounds and rounding slack.
    pub bound: f64,
    pub pass: bool,
}

impl IdentityCheck {
    /// Passes when the residual is within the certified bound and below `tol`.
    fn new(name: String, lhs: TruncatedSeriesValue, rhs: TruncatedSeriesValue, tol: f64) -> Self {
        let residual = (lhs.value - rhs.value).abs();
        let bound = lhs.tail_bound + rhs.tail_bound + f64::EPSILON * lhs.value.abs().max(rhs.value.abs());
        IdentityCheck { name, lhs: lhs.value, rhs: rhs.value, residual, bound, pass: residual <= bound && residual < tol }
    }
}

/// Default tolerance for identity checks.
pub const IDENTITY_TOLERANCE: f64 = 1e-8;

/// `Σ_{|n| ≤ N} q0^{-n(n+ε)}` with its tail bound.
pub fn jacobi_sum(q0: u64, eps: u32, n_sum: u32) -> TruncatedSeriesValue {
    let inv = DoubleDouble::ONE / DoubleDouble::new(q0 as f64);
    let mut s = DoubleDouble::ZERO;
    for n in -(n_sum as i64)..=(n_sum as i64) {
        s = s + inv.powi(n * (n + eps as i64));
    }
    let n = n_sum as f64;
    let qf = q0 as f64;
    // Both tails start at an exponent ≥ N(N+1) and have ratio ≤ q0^{-2(N+1)}.
    let tail = 2.0 * qf.powf(-n * (n + 1.0)) / (1.0 - qf.powf(-2.0 * (n + 1.0)));
    TruncatedSeriesValue::new(s.to_f64(), tail + rounding_slack(s.to_f64(), 2.0 * n + 1.0))
}

/// `Π_{i=1}^{N} (1 - q0^{-2i})(1 + q0^{-(2i-1+ε)})(1 + q0^{-(2i-1-ε)})` with its tail bound.
pub fn jacobi_product(q0: u64, eps: u32, n_prod: u32) -> TruncatedSeriesValue {
    let inv = DoubleDouble::ONE / DoubleDouble::new(q0 as f64);
    let e = eps as i64;
    let mut p = DoubleDouble::ONE;
    for i in 1..=n_prod as i64 {
        p = p
            * (DoubleDouble::ONE - inv.powi(2 * i))
            * (DoubleDouble::ONE + inv.powi(2 * i - 1 + e))
            * (DoubleDouble::ONE + inv.powi(2 * i - 1 - e));
    }
    let qf = q0 as f64;
    let n = n_prod as f64;
    // Each omitted factor deviates from 1 by at most q0^{-2(i-1)} for i > N.
    let x_max = qf.powf(-2.0 * n);
    let tail_sum = 3.0 * x_max / (1.0 - qf.powi(-2));
    let v = p.to_f64();
    TruncatedSeriesValue::new(v, product_tail_bound(v, tail_sum, x_max) + rounding_slack(v, 3.0 * n + 1.0))
}

/// Checks `Σ_n q0^{-n(n+ε)} = Π_i (1 - q0^{-2i})(1 + q0^{-(2i-1+ε)})(1 + q0^{-(2i-1-ε)})`.
pub fn jacobi_check(q0: u64, eps: u32, n_sum: u32, n_prod: u32) -> Result<IdentityCheck, QSeriesError> {
    if q0 < 2 {
        return Err(QSeriesError::BadBase(q0));
    }
    let eps = eps % 2;
    let lhs = jacobi_sum(q0, eps, n_sum);
    let rhs = jacobi_product(q0, eps, n_prod);
    Ok(IdentityCheck::new(format!("jacobi q0={q0} eps={eps}"), lhs, rhs, IDENTITY_TOLERANCE))
}

/// Exponent `k² + i² - ki - m(k - i)` of the double sum.
pub fn rr_exponent(k: i64, i: i64, m: i64) -> i64 {
    k * k + i * i - k * i - m * (k - i)
}

/// Smallest eigenvalue of the quadratic part `k² + i² - ki` of [`rr_exponent`];
/// positivity makes the double sum converge for every `m`.
pub fn rr_quadratic_min_eigenvalue() -> f64 {
    // Matrix [[1, -1/2], [-1/2, 1]] has eigenvalues 1 ± 1/2.
    let (a, b) = (1.0f64, -0.5f64);
    a - b.abs()
}

/// The double sum `Σ_{k ≤ K, i ≤ I} t^{E(k,i)} / ((t;t)_k (t;t)_i)` at `t = 1/q0`, with tail bound.
pub fn rr_double_sum(q0: u64, m: i64, k_max: u32, i_max: u32, n_prod: u32) -> TruncatedSeriesValue {
    let t = DoubleDouble::ONE / DoubleDouble::new(q0 as f64);
    let tf = 1.0 / q0 as f64;
    let poch: Vec<DoubleDouble> = (0..=k_max.max(i_max)).map(|j| pochhammer_dd(t, t, j)).collect();
    let mut s = DoubleDouble::ZERO;
    for k in 0..=k_max as i64 {
        for i in 0..=i_max as i64 {
            s = s + t.powi(rr_exponent(k, i, m)) / (poch[k as usize] * poch[i as usize]);
        }
    }
    // t^E ≤ g(k) g(i) with g(j) = t^{j²/2 - |m| j}, and 1/(t;t)_j ≤ 1/(t;t)_∞.
    let am = m.unsigned_abs() as f64;
    let g = |j: f64| tf.powf(j * j / 2.0 - am * j);
    let g_tail = |from: u32| {
        let j0 = from as f64;
        let ratio = tf.powf(j0 + 0.5 - am);
        if j0 + 0.5 - am <= 0.0 {
            f64::INFINITY
        } else {
            g(j0) / (1.0 - ratio)
        }
    };
    let cut = (k_max.max(i_max) + 1).max(am as u32 + 1);
    let g_all: f64 = (0..cut).map(|j| g(j as f64)).sum::<f64>() + g_tail(cut);
    let euler = euler_function(tf, n_prod);
    let euler_low = euler.value - euler.tail_bound;
    let tail = (g_tail(k_max + 1) * g_all + g_all * g_tail(i_max + 1)) / (euler_low * euler_low);
    let v = s.to_f64();
    TruncatedSeriesValue::new(v, tail + rounding_slack(v, ((k_max + 1) * (i_max + 1)) as f64))
}

/// `(-t; t)_∞ (-t^{1+ε}; t²)_∞ (-t^{1-ε}; t²)_∞` at `t = 1/q0`, with tail bound.
pub fn rr_product(q0: u64, m: i64, n_prod: u32) -> TruncatedSeriesValue {
    let eps = m.rem_euclid(2);
    let t = DoubleDouble::ONE / DoubleDouble::new(q0 as f64);
    let t2 = t * t;
    let neg = |x: DoubleDouble| -x;
    let p = pochhammer_dd(neg(t), t, n_prod)
        * pochhammer_dd(neg(t.powi(1 + eps)), t2, n_prod)
        * pochhammer_dd(neg(t.powi(1 - eps)), t2, n_prod);
    let tf = 1.0 / q0 as f64;
    let n = n_prod as f64;
    let tail_sum = tf.powf(n + 1.0) / (1.0 - tf) + 2.0 * tf.powf(2.0 * n) / (1.0 - tf * tf);
    let x_max = tf.powf(n);
    let v = p.to_f64();
    TruncatedSeriesValue::new(v, product_tail_bound(v, tail_sum, x_max) + rounding_slack(v, 3.0 * n + 1.0))
}

/// Exponent `c = a(a - ε)` with `a = (m + ε)/2` such that `t^c` times the double sum
/// equals the product.
pub fn rr_normalization_exponent(m: i64) -> i64 {
    let eps = m.rem_euclid(2);
    let a = (m + eps) / 2;
    a * (a - eps)
}

/// Checks `t^c · (double sum) = product` at `t = 1/q0` for type `m`, with `c` from
/// [`rr_normalization_exponent`].
pub fn rr_identity_check(q0: u64, m: i64, k_max: u32, i_max: u32, n_prod: u32) -> Result<IdentityCheck, QSeriesError> {
    if q0 < 2 {
        return Err(QSeriesError::BadBase(q0));
    }
    let raw = rr_double_sum(q0, m, k_max, i_max, n_prod);
    let scale = (q0 as f64).powi(-(rr_normalization_exponent(m) as i32));
    let lhs = TruncatedSeriesValue::new(raw.value * scale, raw.tail_bound * scale);
    let rhs = rr_product(q0, m, n_prod);
    let mut check = IdentityCheck::new(format!("rr q0={q0} m={m}"), lhs, rhs, IDENTITY_TOLERANCE);
    check.pass &= rr_quadratic_min_eigenvalue() > 0.0;
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::make_field;
    use crate::linalg::all_subspaces_of_dim;

    #[test]
    fn binomial_values() {
        assert_eq!(q_binomial(4, 2, 2).unwrap(), BigUint::from(35u32));
        assert_eq!(q_binomial(7, 0, 5).unwrap(), BigUint::one());
        assert_eq!(q_binomial(2, 3, 2), Err(QSeriesError::OutOfRange { n: 2, k: 3 }));
        assert_eq!(galois_number(2, 2), BigUint::from(5u32));
        assert_eq!(galois_number(3, 2), BigUint::from(16u32));
    }

    #[test]
    fn pascal_table_agrees_with_product_formula() {
        for q in [2u64, 3, 4, 9] {
            let table = QBinomialTable::new(q, 40);
            for n in 0..=40usize {
                for k in 0..=n {
                    let t = table.get(n, k).unwrap();
                    assert_eq!(t, &q_binomial(n as u64, k as u64, q).unwrap());
                    assert_eq!(t, table.get(n, n - k).unwrap());
                }
            }
            assert!(table.get(41, 0).is_err());
        }
    }

    #[test]
    fn binomials_count_subspaces() {
        for (p, nmax) in [(2u32, 4usize), (3, 4)] {
            let f = make_field(p, 1).unwrap();
            for n in 0..=nmax {
                for k in 0..=n {
                    let count = all_subspaces_of_dim(&f, n, k).len();
                    assert_eq!(BigUint::from(count), q_binomial(n as u64, k as u64, p as u64).unwrap());
                }
            }
        }
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(pochhammer(0.3, 0.5, PochhammerLength::Finite(0)).unwrap().value, 1.0);
        assert_eq!(pochhammer(1.0, 0.5, PochhammerLength::Finite(3)).unwrap().value, 0.0);
        let v = pochhammer(-0.5, 0.5, PochhammerLength::Infinite { factors: 50 }).unwrap();
        assert!(v.tail_bound <= 1e-12);
        let long = pochhammer(-0.5, 0.5, PochhammerLength::Infinite { factors: 200 }).unwrap();
        assert!(v.contains(long.value, long.tail_bound));
        assert_eq!(
            pochhammer(0.5, 1.0, PochhammerLength::Infinite { factors: 10 }),
            Err(QSeriesError::DivergentParameter(1.0))
        );
        let e = euler_function(0.5, 60);
        assert!((e.value - 0.288_788_095_086_602_4).abs() < 1e-15);
    }

    #[test]
    fn jacobi_examples() {
        let lhs = jacobi_sum(2, 0, 8);
        assert!((lhs.value - 2.128_936_827_211_877).abs() < 1e-12);
        let lhs = jacobi_sum(2, 1, 8);
        assert!((lhs.value - 2.531_740_190_461_733).abs() < 1e-12);
        for q0 in 2..=5 {
            for eps in 0..2 {
                let c = jacobi_check(q0, eps, 40, 40).unwrap();
                assert!(c.pass, "{c:?}");
                assert!(c.residual < 1e-10);
            }
        }
    }

    #[test]
    fn rr_examples() {
        let c = rr_identity_check(2, 0, 25, 25, 60).unwrap();
        assert!(c.pass, "{c:?}");
        assert!(c.bound < 1e-8);
        let c = rr_identity_check(3, 1, 25, 25, 60).unwrap();
        assert!(c.pass, "{c:?}");
        for m in 1..=4 {
            let a = rr_identity_check(2, m, 25, 25, 60).unwrap();
            let b = rr_identity_check(2, -m, 25, 25, 60).unwrap();
            assert!((a.lhs - b.lhs).abs() < 1e-14 && (a.rhs - b.rhs).abs() < 1e-14);
        }
        assert_eq!(rr_quadratic_min_eigenvalue(), 0.5);
        for q0 in [2u64, 3, 4, 5] {
            for m in -4i64..=4 {
                let c = rr_identity_check(q0, m, 25, 25, 60).unwrap();
                assert!(c.pass && c.residual < 1e-8, "{c:?}");
            }
        }
        assert_eq!(rr_normalization_exponent(0), 0);
        assert_eq!(rr_normalization_exponent(1), 0);
        assert_eq!(rr_normalization_exponent(-1), 0);
        assert_eq!(rr_normalization_exponent(4), 4);
        assert_eq!(rr_normalization_exponent(-3), 2);
    }
}
