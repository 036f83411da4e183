//! Verification suites shared by the command-line tool and the test suite.
//!
//! Each suite produces [`VerifyRecord`]s comparing a left-hand side with a right-hand side.
//! Numeric fields are kept as decimal strings.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dist::{self, DistError};
use crate::gf::{field_of_order, GfError};
use crate::lift::{self, LiftError};
use crate::maxiso::{self, MaxIsoError, DEFAULT_ENUMERATION_CAP};
use crate::numeric::format_float;
use crate::qseries::{self, QSeriesError, IDENTITY_TOLERANCE};
use crate::quadspace::{QuadError, QuadraticSpace, SpaceType};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
    #[error(transparent)]
    QSeries(#[from] QSeriesError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    MaxIso(#[from] MaxIsoError),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Field(#[from] GfError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Jacobi,
    Rr,
    Counts,
    Lifts,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Result<Self, VerifyError> {
        match s {
            "jacobi" => Ok(Suite::Jacobi),
            "rr" => Ok(Suite::Rr),
            "counts" => Ok(Suite::Counts),
            "lifts" => Ok(Suite::Lifts),
            "all" => Ok(Suite::All),
            _ => Err(VerifyError::UnknownSuite(s.to_string())),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Jacobi => "jacobi",
            Suite::Rr => "rr",
            Suite::Counts => "counts",
            Suite::Lifts => "lifts",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

/// One comparison `lhs` against `rhs`; `pass` iff the residual is within `bound`
/// and any additional tolerance of the check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyRecord {
    pub suite: String,
    pub name: String,
    pub lhs: String,
    pub rhs: String,
    pub residual: String,
    pub bound: String,
    pub pass: bool,
}

impl VerifyRecord {
    fn exact(suite: Suite, name: String, lhs: String, rhs: String) -> Self {
        let pass = lhs == rhs;
        VerifyRecord {
            suite: suite.to_string(),
            name,
            residual: if pass { "0".into() } else { "nonzero".into() },
            lhs,
            rhs,
            bound: "0".into(),
            pass,
        }
    }

    fn float(suite: Suite, name: String, lhs: f64, rhs: f64, bound: f64, pass: bool, precision: usize) -> Self {
        VerifyRecord {
            suite: suite.to_string(),
            name,
            lhs: format_float(lhs, precision),
            rhs: format_float(rhs, precision),
            residual: format_float((lhs - rhs).abs(), precision),
            bound: format_float(bound, precision),
            pass,
        }
    }

    pub fn to_csv_row(&self) -> String {
        format!("{},{},{},{},{},{},{}", self.suite, self.name, self.lhs, self.rhs, self.residual, self.bound, self.pass)
    }
}

pub const CSV_HEADER: &str = "suite,name,lhs,rhs,residual,bound,pass";

/// Bases of the identity checks.
pub const IDENTITY_BASES: [u64; 4] = [2, 3, 4, 5];

/// `(q, type, largest n)` for the enumeration-versus-formula grid.
pub const COUNT_GRID: [(u64, SpaceType, u32); 6] = [
    (2, SpaceType::Orthogonal, 4),
    (2, SpaceType::Symplectic, 4),
    (3, SpaceType::Orthogonal, 3),
    (3, SpaceType::Symplectic, 3),
    (4, SpaceType::Unitary, 3),
    (9, SpaceType::Unitary, 3),
];

/// `(q, type, dim_k)` for the lifting round trips.
pub const LIFT_GRID: [(u64, SpaceType, usize); 12] = [
    (4, SpaceType::Orthogonal, 2),
    (4, SpaceType::Symplectic, 2),
    (4, SpaceType::Unitary, 1),
    (4, SpaceType::Unitary, 2),
    (4, SpaceType::Unitary, 3),
    (9, SpaceType::Orthogonal, 1),
    (9, SpaceType::Orthogonal, 2),
    (9, SpaceType::Symplectic, 2),
    (9, SpaceType::Unitary, 1),
    (9, SpaceType::Unitary, 2),
    (2, SpaceType::Orthogonal, 2),
    (3, SpaceType::Symplectic, 2),
];

fn jacobi(precision: usize) -> Result<Vec<VerifyRecord>, VerifyError> {
    let mut out = Vec::new();
    for q0 in IDENTITY_BASES {
        for eps in 0..2 {
            let c = qseries::jacobi_check(q0, eps, 40, 40)?;
            out.push(VerifyRecord::float(Suite::Jacobi, c.name, c.lhs, c.rhs, c.bound, c.pass, precision));
        }
    }
    Ok(out)
}

fn rr(precision: usize) -> Result<Vec<VerifyRecord>, VerifyError> {
    let mut out = Vec::new();
    for q0 in IDENTITY_BASES {
        for m in -4i64..=4 {
            let c = qseries::rr_identity_check(q0, m, 25, 25, 60)?;
            out.push(VerifyRecord::float(Suite::Rr, c.name, c.lhs, c.rhs, c.bound, c.pass, precision));
        }
        for m in -4i64..=4 {
            let mut total = 0.0;
            let mut bound = 0.0;
            let mut sym_gap: f64 = 0.0;
            let mut sym_bound: f64 = 0.0;
            for r in 0..=40 {
                let a = dist::su_limit_dist(q0, m, r)?;
                let b = dist::su_limit_dist(q0, -m, r)?;
                total += a.value;
                bound += a.tail_bound;
                sym_gap = sym_gap.max((a.value - b.value).abs());
                sym_bound = sym_bound.max(a.tail_bound + b.tail_bound + 1e-15);
            }
            let mass_pass = (total - 1.0).abs() < IDENTITY_TOLERANCE;
            out.push(VerifyRecord::float(
                Suite::Rr,
                format!("su-mass q0={q0} m={m}"),
                total,
                1.0,
                bound.max(IDENTITY_TOLERANCE),
                mass_pass,
                precision,
            ));
            out.push(VerifyRecord::float(
                Suite::Rr,
                format!("su-symmetry q0={q0} m={m}"),
                sym_gap,
                0.0,
                sym_bound,
                sym_gap <= sym_bound,
                precision,
            ));
        }
    }
    Ok(out)
}

fn counts() -> Result<Vec<VerifyRecord>, VerifyError> {
    let mut out = Vec::new();
    for (q, ty, n_max) in COUNT_GRID {
        let field = Arc::new(field_of_order(q)?);
        for n in 1..=n_max {
            let v = QuadraticSpace::hyperbolic_of_type(field.clone(), n as usize, ty)?;
            let set = maxiso::enumerate_maximal_isotropic(&v, DEFAULT_ENUMERATION_CAP)?;
            let formula = maxiso::count_formula(q, n, ty)?;
            out.push(VerifyRecord::exact(
                Suite::Counts,
                format!("count q={q} n={n} type={}", ty.short_name()),
                set.len().to_string(),
                formula.to_string(),
            ));
        }
    }
    Ok(out)
}

fn lifts(seed: u64) -> Result<Vec<VerifyRecord>, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (q, ty, d) in LIFT_GRID {
        let k = Arc::new(field_of_order(q)?);
        let c = lift::lift_round_trip(k, ty, d, &mut rng)?;
        let checks = c.trace_ok && c.unique && c.hermitian_ok && c.round_trip;
        let agreeing = c.subspaces - c.mi_disagreements.max(c.perp_disagreements);
        out.push(VerifyRecord {
            suite: Suite::Lifts.to_string(),
            name: format!("lift q={q} type={} d={d}", ty.short_name()),
            lhs: agreeing.to_string(),
            rhs: c.subspaces.to_string(),
            residual: (c.mi_disagreements + c.perp_disagreements).to_string(),
            bound: "0".into(),
            pass: checks && c.pass(),
        });
    }
    Ok(out)
}

/// Run a suite. `seed` drives the random spaces of the lifting suite and
/// `precision` the number of digits in floating-point fields.
pub fn run_suite(suite: Suite, seed: u64, precision: usize) -> Result<Vec<VerifyRecord>, VerifyError> {
    match suite {
        Suite::Jacobi => jacobi(precision),
        Suite::Rr => rr(precision),
        Suite::Counts => counts(),
        Suite::Lifts => lifts(seed),
        Suite::All => {
            let mut out = jacobi(precision)?;
            out.extend(rr(precision)?);
            out.extend(counts()?);
            out.extend(lifts(seed)?);
            Ok(out)
        }
    }
}
