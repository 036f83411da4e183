//! Maximal isotropic subspaces: exhaustive enumeration, closed-form counts,
//! uniform sampling and intersection-rank statistics.
//!
//! Enumeration runs a depth-first search over reduced row echelon cells,
//! filling one basis row at a time and pruning as soon as a row is not
//! isotropic or not orthogonal to the rows already chosen. Sampling grows a
//! random isotropic flag one vector at a time inside a nondegenerate
//! complement of the current flag.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dist::{self, DistError, RankDistribution};
use crate::gf::{field_of_order, Field, FieldElement, GfError};
use crate::linalg::{self, combinations, Matrix, Subspace};
use crate::numeric::{format_float, TruncatedSeriesValue};
use crate::quadspace::{hyperbolic_gram, QuadError, QuadraticSpace, SpaceType};

/// Default bound on the number of members an enumeration may produce.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// Rejection-sampling trials allowed per isotropic vector.
pub const MAX_TRIALS: u32 = 10_000;

/// Samples drawn from one random stream in chunked simulations.
pub const SAMPLE_CHUNK: u64 = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaxIsoError {
    #[error("{count} maximal isotropic subspaces exceed the enumeration cap {cap}")]
    TooLarge { count: BigUint, cap: u64 },
    #[error("the space is not metabolic")]
    NotMetabolic,
    #[error("no isotropic vector found after {0} trials")]
    SamplingCapExceeded(u32),
    #[error("dim X = {dim_x} outside 0..={n}")]
    OutOfRange { dim_x: u32, n: u32 },
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Field(#[from] GfError),
}

/// `|I_V| = Π_{j=0}^{n-1} (|Λ| q^j + 1)` for `|Λ|` given explicitly.
pub fn count_for_lambda(q: u64, n: u32, lambda_size: u64) -> BigUint {
    (0..n).fold(BigUint::one(), |acc, j| acc * (BigUint::from(lambda_size) * dist::pow_biguint(q, j) + 1u32))
}

/// Number of maximal isotropic subspaces of a metabolic space of dimension `2n` and the given type.
pub fn count_formula(q: u64, n: u32, ty: SpaceType) -> Result<BigUint, MaxIsoError> {
    Ok(count_for_lambda(q, n, dist::lambda_size(q, ty)?))
}

/// Size of every fiber of `W ↦ ((W ∩ X^⊥) + X)/X`: `Π_{i=1}^{dim X} (|Λ| q^{n-i} + 1)`.
pub fn fiber_size_formula(q: u64, n: u32, dim_x: u32, ty: SpaceType) -> Result<BigUint, MaxIsoError> {
    if dim_x > n {
        return Err(MaxIsoError::OutOfRange { dim_x, n });
    }
    let l = dist::lambda_size(q, ty)?;
    Ok((1..=dim_x).fold(BigUint::one(), |acc, i| acc * (BigUint::from(l) * dist::pow_biguint(q, n - i) + 1u32)))
}

/// The maximal isotropic subspaces of a space, in canonical order.
#[derive(Clone, Debug)]
pub struct IsotropicSet {
    field: Arc<Field>,
    members: Vec<Subspace>,
}

impl IsotropicSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Subspace] {
        &self.members
    }

    pub fn contains(&self, x: &Subspace) -> bool {
        let key = x.sort_key(&self.field);
        self.members.binary_search_by(|m| m.sort_key(&self.field).cmp(&key)).is_ok()
    }

    /// One reduced row echelon basis per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for m in &self.members {
            out.push_str(&m.to_text(&self.field));
            out.push('\n');
        }
        out
    }
}

/// Candidate basis rows of one echelon cell: pivot columns and free columns per row.
struct Cell {
    pivots: Vec<usize>,
    free: Vec<Vec<usize>>,
}

impl Cell {
    fn new(dim: usize, pivots: Vec<usize>) -> Self {
        let free = pivots
            .iter()
            .map(|&p| ((p + 1)..dim).filter(|c| !pivots.contains(c)).collect())
            .collect();
        Cell { pivots, free }
    }
}

/// Sparse row with its nonzero entries and their conjugates, for fast form evaluation.
#[derive(Clone, Default)]
struct SparseRow {
    dense: Vec<FieldElement>,
    nz: Vec<(usize, FieldElement, FieldElement)>,
}

impl SparseRow {
    fn new(f: &Field, v: &QuadraticSpace, dense: Vec<FieldElement>) -> Self {
        let nz = dense
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(i, &x)| (i, x, f.conj(v.involution(), x)))
            .collect();
        SparseRow { dense, nz }
    }
}

/// `xᵀ G σ(y)` over the nonzero entries only.
fn sparse_form(f: &Field, g: &Matrix, x: &SparseRow, y: &SparseRow) -> FieldElement {
    let mut acc = FieldElement::ZERO;
    for &(i, xi, _) in &x.nz {
        for &(j, _, yj) in &y.nz {
            let gij = g[(i, j)];
            if !gij.is_zero() {
                acc = f.add(acc, f.mul(xi, f.mul(gij, yj)));
            }
        }
    }
    acc
}

/// Isotropic candidates for row `r` of the cell, orthogonal to the rows after it.
fn row_candidates(v: &QuadraticSpace, cell: &Cell, r: usize, rows: &[SparseRow]) -> Vec<SparseRow> {
    let f = v.field();
    let dim = v.dim();
    let k = cell.pivots.len();
    let free = &cell.free[r];
    let q = f.q() as u64;
    let mut row = vec![FieldElement::ZERO; dim];
    row[cell.pivots[r]] = FieldElement::ONE;
    let mut out = Vec::new();
    for idx in 0..q.pow(free.len() as u32) {
        let mut t = idx;
        for &c in free {
            row[c] = f.element((t % q) as u32);
            t /= q;
        }
        let cand = SparseRow::new(f, v, row.clone());
        let qv = v.param_table().reduce(sparse_form(f, v.s_gram(), &cand, &cand));
        if qv.is_zero() && (r + 1..k).all(|j| sparse_form(f, v.h_gram(), &cand, &rows[j]).is_zero()) {
            out.push(cand);
        }
    }
    out
}

fn leaf(v: &QuadraticSpace, rows: &[SparseRow]) -> Subspace {
    let dense: Vec<Vec<FieldElement>> = rows.iter().map(|r| r.dense.clone()).collect();
    // Rows of an echelon cell with zeros above and below every pivot are already reduced.
    Subspace::from_rref_unchecked(Matrix::from_rows(v.dim(), &dense))
}

/// Completes rows `0..=r` (rows after `r` are fixed) in all isotropic ways.
fn complete_rows(v: &QuadraticSpace, cell: &Cell, r: usize, rows: &mut Vec<SparseRow>, out: &mut Vec<Subspace>) {
    for cand in row_candidates(v, cell, r, rows) {
        rows[r] = cand;
        if r == 0 {
            out.push(leaf(v, rows));
        } else {
            complete_rows(v, cell, r - 1, rows, out);
        }
    }
}

/// Rows are filled from the last pivot to the first, so the most constrained rows come first;
/// the choices for the last row are explored in parallel.
fn search_cell(v: &QuadraticSpace, cell: &Cell) -> Vec<Subspace> {
    let k = cell.pivots.len();
    let empty = vec![SparseRow::default(); k];
    let firsts = row_candidates(v, cell, k - 1, &empty);
    firsts
        .into_par_iter()
        .flat_map_iter(|first| {
            let mut rows = empty.clone();
            rows[k - 1] = first;
            let mut out = Vec::new();
            if k == 1 {
                out.push(leaf(v, &rows));
            } else {
                complete_rows(v, cell, k - 2, &mut rows, &mut out);
            }
            out
        })
        .collect()
}

/// All maximal isotropic subspaces of `V`, refusing when the closed-form count exceeds `cap`.
pub fn enumerate_maximal_isotropic(v: &QuadraticSpace, cap: u64) -> Result<IsotropicSet, MaxIsoError> {
    if !v.dim().is_multiple_of(2) {
        return Err(MaxIsoError::NotMetabolic);
    }
    let n = v.dim() / 2;
    let count = count_for_lambda(v.field().q() as u64, n as u32, v.lambda_size() as u64);
    if count > BigUint::from(cap) {
        return Err(MaxIsoError::TooLarge { count, cap });
    }
    let cells: Vec<Cell> = combinations(v.dim(), n).into_iter().map(|p| Cell::new(v.dim(), p)).collect();
    let shards: Vec<Vec<Subspace>> = cells.par_iter().map(|c| search_cell(v, c)).collect();
    let f = v.field();
    let mut members: Vec<(Vec<u32>, Subspace)> =
        shards.into_iter().flatten().map(|s| (s.sort_key(f), s)).collect();
    members.sort_by(|a, b| a.0.cmp(&b.0));
    if members.is_empty() {
        return Err(MaxIsoError::NotMetabolic);
    }
    Ok(IsotropicSet { field: v.field_arc().clone(), members: members.into_iter().map(|(_, s)| s).collect() })
}

/// Exact frequencies of `dim(Z ∩ W)` over all maximal isotropic `Z`.
pub fn intersection_distribution_exact(
    v: &QuadraticSpace,
    w: &Subspace,
    cap: u64,
) -> Result<RankDistribution, MaxIsoError> {
    if !v.is_maximal_isotropic(w)? {
        return Err(QuadError::NotMaximalIsotropic.into());
    }
    let set = enumerate_maximal_isotropic(v, cap)?;
    Ok(intersection_counts(v, &set, w).map(|c| RankDistribution::from_counts(&c))?)
}

/// Counts of `dim(Z ∩ W)` over the members `Z` of `set`.
pub fn intersection_counts(v: &QuadraticSpace, set: &IsotropicSet, w: &Subspace) -> Result<BTreeMap<u32, u64>, QuadError> {
    let f = v.field();
    let dims: Result<Vec<u32>, _> = set.members.par_iter().map(|z| z.intersect(f, w).map(|m| m.dim() as u32)).collect();
    let mut counts = BTreeMap::new();
    for d in dims? {
        *counts.entry(d).or_insert(0u64) += 1;
    }
    Ok(counts)
}

/// One member of `I_{X^⊥/X}` with the number of `W ∈ I_V` projecting onto it.
#[derive(Clone, Debug)]
pub struct Fiber {
    pub image: Subspace,
    pub size: u64,
}

/// Fibers of the projection `I_V → I_{X^⊥/X}` for an isotropic `X`, one per member of the target.
/// `source` must be the enumeration of `I_V`.
pub fn projection_fibers(
    v: &QuadraticSpace,
    source: &IsotropicSet,
    x: &Subspace,
    cap: u64,
) -> Result<Vec<Fiber>, MaxIsoError> {
    let quot = v.quotient_space(x)?;
    let f = v.field();
    let target = if quot.space.dim() == 0 {
        vec![Subspace::zero(0)]
    } else {
        enumerate_maximal_isotropic(&quot.space, cap)?.members
    };
    let images: Result<Vec<Subspace>, QuadError> =
        source.members.par_iter().map(|w| quot.project_subspace(f, w)).collect();
    let mut sizes: HashMap<Subspace, u64> = HashMap::new();
    for im in images? {
        *sizes.entry(im).or_insert(0) += 1;
    }
    Ok(target.into_iter().map(|t| Fiber { size: sizes.get(&t).copied().unwrap_or(0), image: t }).collect())
}

/// A copy of `V` in a random basis: the transport of its form along a random invertible matrix.
pub fn random_isometric_copy(v: &QuadraticSpace, rng: &mut impl Rng) -> Result<QuadraticSpace, MaxIsoError> {
    let f = v.field();
    let n = v.dim();
    loop {
        let t = Matrix::from_fn(n, n, |_, _| f.element(rng.gen_range(0..f.q())));
        if linalg::rank(f, &t) == n {
            return Ok(v.transport(&t)?);
        }
    }
}

fn random_combination(f: &Field, basis: &[Vec<FieldElement>], dim: usize, rng: &mut impl Rng) -> Vec<FieldElement> {
    let mut v = vec![FieldElement::ZERO; dim];
    for b in basis {
        let c = f.element(rng.gen_range(0..f.q()));
        if !c.is_zero() {
            linalg::axpy(f, &mut v, c, b);
        }
    }
    v
}

/// Whether the nondegenerate space spanned by `basis` has a nonzero isotropic vector, by exhaustive scan.
fn has_isotropic_vector(v: &QuadraticSpace, basis: &[Vec<FieldElement>]) -> Option<bool> {
    let f = v.field();
    let total = (f.q() as u64).checked_pow(basis.len() as u32)?;
    if total > 1 << 20 {
        return None;
    }
    for idx in 1..total {
        let mut w = vec![FieldElement::ZERO; v.dim()];
        let mut t = idx;
        for b in basis {
            linalg::axpy(f, &mut w, f.element((t % f.q() as u64) as u32), b);
            t /= f.q() as u64;
        }
        if w.iter().any(|c| !c.is_zero()) && v.q_unchecked(&w).is_zero() {
            return Some(true);
        }
    }
    Some(false)
}

/// A uniformly random maximal isotropic subspace of a metabolic space.
pub fn sample_uniform(v: &QuadraticSpace, rng: &mut impl Rng) -> Result<Subspace, MaxIsoError> {
    if !v.dim().is_multiple_of(2) {
        return Err(MaxIsoError::NotMetabolic);
    }
    let f = v.field();
    let dim = v.dim();
    let mut chosen: Vec<Vec<FieldElement>> = Vec::with_capacity(dim / 2);
    // Basis of a nondegenerate complement of the chosen flag X inside X^⊥.
    let mut comp: Vec<Vec<FieldElement>> = (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { FieldElement::ONE } else { FieldElement::ZERO }).collect())
        .collect();
    while !comp.is_empty() {
        let mut found = None;
        for _ in 0..MAX_TRIALS {
            let w = random_combination(f, &comp, dim, rng);
            if w.iter().all(|c| c.is_zero()) {
                continue;
            }
            if v.q_unchecked(&w).is_zero() {
                found = Some(w);
                break;
            }
        }
        let Some(w) = found else {
            return Err(match has_isotropic_vector(v, &comp) {
                Some(false) => MaxIsoError::NotMetabolic,
                _ => MaxIsoError::SamplingCapExceeded(MAX_TRIALS),
            });
        };
        let hv: Vec<FieldElement> = comp.iter().map(|c| v.h(c, &w)).collect();
        let p = hv.iter().position(|x| !x.is_zero()).ok_or(MaxIsoError::NotMetabolic)?;
        let inv_p = f.inv(hv[p]);
        let cp = comp[p].clone();
        for (i, c) in comp.iter_mut().enumerate() {
            if i != p && !hv[i].is_zero() {
                linalg::axpy(f, c, f.neg(f.mul(hv[i], inv_p)), &cp);
            }
        }
        comp.remove(p);
        // The remaining vectors span w^⊥ inside the old complement; drop one carrying w.
        let m = Matrix::from_rows(dim, &comp).transpose();
        let coeffs = linalg::solve(f, &m, &w).expect("w lies in its own orthogonal complement");
        let drop = coeffs.iter().position(|c| !c.is_zero()).expect("w is nonzero");
        comp.remove(drop);
        chosen.push(w);
    }
    Ok(Subspace::span(f, dim, &chosen))
}

/// The standard hyperbolic space `ℍ(GF(2)^n)`, `n ≤ 64`, with vectors packed into
/// `u128` words: bit `i` holds coordinate `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PackedHyperbolic {
    n: usize,
    orthogonal: bool,
}

impl PackedHyperbolic {
    pub fn new(n: usize, ty: SpaceType) -> Option<Self> {
        ((1..=64).contains(&n) && ty != SpaceType::Unitary)
            .then_some(PackedHyperbolic { n, orthogonal: ty == SpaceType::Orthogonal })
    }

    /// Recognizes a space that is literally the standard hyperbolic space over `GF(2)`.
    pub fn from_space(v: &QuadraticSpace) -> Option<Self> {
        let n = v.dim() / 2;
        if v.field().q() != 2 || !v.dim().is_multiple_of(2) || v.s_gram() != &hyperbolic_gram(n) {
            return None;
        }
        Self::new(n, v.space_type())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn lo(&self, x: u128) -> u128 {
        x & ((1u128 << self.n) - 1)
    }

    fn hi(&self, x: u128) -> u128 {
        x >> self.n
    }

    /// `q(x, y) = x · y` for orthogonal spaces, identically zero for symplectic ones.
    pub fn q(&self, v: u128) -> bool {
        self.orthogonal && (self.lo(v) & self.hi(v)).count_ones() & 1 == 1
    }

    pub fn h(&self, u: u128, v: u128) -> bool {
        ((self.lo(u) & self.hi(v)) ^ (self.hi(u) & self.lo(v))).count_ones() & 1 == 1
    }

    /// `dim(Z ∩ W)` for `W` spanned by the first `n` coordinate vectors.
    pub fn meet_standard(&self, z: &[u128]) -> usize {
        let hi: Vec<u128> = z.iter().map(|&x| self.hi(x)).collect();
        self.n - crate::gf::packed::rank_gf2(&hi)
    }

    /// Basis of a uniformly random maximal isotropic subspace.
    pub fn sample(&self, rng: &mut impl Rng) -> Result<Vec<u128>, MaxIsoError> {
        let mut comp: Vec<u128> = (0..2 * self.n).map(|i| 1u128 << i).collect();
        let mut chosen = Vec::with_capacity(self.n);
        while !comp.is_empty() {
            let mut found = None;
            for _ in 0..MAX_TRIALS {
                let bits: u128 = rng.gen();
                let mut w = 0u128;
                for (i, c) in comp.iter().enumerate() {
                    if (bits >> i) & 1 == 1 {
                        w ^= c;
                    }
                }
                if w != 0 && !self.q(w) {
                    found = Some(w);
                    break;
                }
            }
            let w = found.ok_or(MaxIsoError::SamplingCapExceeded(MAX_TRIALS))?;
            let p = comp.iter().position(|&c| self.h(c, w)).ok_or(MaxIsoError::NotMetabolic)?;
            let cp = comp.remove(p);
            for c in comp.iter_mut() {
                if self.h(*c, w) {
                    *c ^= cp;
                }
            }
            // Express w in the remaining vectors and drop one that carries it.
            let drop = packed_carrier(&comp, w).expect("w lies in its own orthogonal complement");
            comp.remove(drop);
            chosen.push(w);
        }
        Ok(chosen)
    }

    /// Canonical reduced echelon basis of the span of `rows`, as a sortable key.
    pub fn canonical(rows: &[u128]) -> Vec<u128> {
        let mut basis: Vec<u128> = Vec::new();
        for &r in rows {
            let mut v = r;
            for &b in &basis {
                let lead = b.trailing_zeros();
                if (v >> lead) & 1 == 1 {
                    v ^= b;
                }
            }
            if v != 0 {
                let lead = v.trailing_zeros();
                for b in basis.iter_mut() {
                    if (*b >> lead) & 1 == 1 {
                        *b ^= v;
                    }
                }
                basis.push(v);
            }
        }
        basis.sort_by_key(|b| b.trailing_zeros());
        basis
    }

    /// Converts packed rows to a subspace of `GF(2)^{2n}`.
    pub fn to_subspace(&self, f: &Field, rows: &[u128]) -> Subspace {
        let vecs: Vec<Vec<FieldElement>> = rows
            .iter()
            .map(|&r| (0..2 * self.n).map(|i| f.element(((r >> i) & 1) as u32)).collect())
            .collect();
        Subspace::span(f, 2 * self.n, &vecs)
    }
}

/// Index of a vector in `basis` whose coefficient in the expansion of `w` is nonzero.
fn packed_carrier(basis: &[u128], w: u128) -> Option<usize> {
    // Gaussian elimination tracking which original vectors make up each reduced row.
    let mut rows: Vec<(u128, u128)> = basis.iter().enumerate().map(|(i, &b)| (b, 1u128 << i)).collect();
    let mut reduced: Vec<(u128, u128)> = Vec::new();
    for (mut v, mut tag) in rows.drain(..) {
        for &(b, bt) in &reduced {
            let lead = b.trailing_zeros();
            if (v >> lead) & 1 == 1 {
                v ^= b;
                tag ^= bt;
            }
        }
        if v != 0 {
            reduced.push((v, tag));
        }
    }
    let (mut v, mut tag) = (w, 0u128);
    for &(b, bt) in &reduced {
        let lead = b.trailing_zeros();
        if (v >> lead) & 1 == 1 {
            v ^= b;
            tag ^= bt;
        }
    }
    (v == 0 && tag != 0).then(|| tag.trailing_zeros() as usize)
}

/// Random stream for chunk `chunk` of a simulation with root seed `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Counts of `dim(Z ∩ W)` over `samples` uniform draws, `W` the span of the first
/// `n` coordinate vectors of the standard hyperbolic space of the given type.
pub fn simulate_intersections(
    q: u64,
    ty: SpaceType,
    n: usize,
    samples: u64,
    seed: u64,
) -> Result<BTreeMap<u32, u64>, MaxIsoError> {
    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    let packed = if q == 2 { PackedHyperbolic::new(n, ty) } else { None };
    let generic = match packed {
        Some(_) => None,
        None => {
            let f = Arc::new(field_of_order(q)?);
            Some(QuadraticSpace::hyperbolic_of_type(f, n, ty)?)
        }
    };
    let w = Subspace::coordinate(2 * n, 0..n);
    let partial: Result<Vec<BTreeMap<u32, u64>>, MaxIsoError> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = chunk_rng(seed, chunk);
            let count = SAMPLE_CHUNK.min(samples - chunk * SAMPLE_CHUNK);
            let mut counts = BTreeMap::new();
            for _ in 0..count {
                let d = match (&packed, &generic) {
                    (Some(p), _) => p.meet_standard(&p.sample(&mut rng)?),
                    (None, Some(v)) => sample_uniform(v, &mut rng)?.intersect(v.field(), &w).map_err(QuadError::from)?.dim(),
                    (None, None) => unreachable!(),
                };
                *counts.entry(d as u32).or_insert(0u64) += 1;
            }
            Ok(counts)
        })
        .collect();
    let mut total = BTreeMap::new();
    for c in partial? {
        for (d, k) in c {
            *total.entry(d).or_insert(0) += k;
        }
    }
    Ok(total)
}

/// Expected count below which cells of the comparison are pooled into one tail cell.
pub const MIN_EXPECTED_CELL: f64 = 5.0;

/// One row of the model Selmer rank comparison.
#[derive(Clone, Debug)]
pub struct SelmerRow {
    pub d: u32,
    pub count: u64,
    pub empirical: f64,
    pub exact: BigRational,
    pub limit: Option<TruncatedSeriesValue>,
    /// Three binomial standard deviations of the empirical frequency around the exact mass.
    pub band: f64,
}

/// Empirical law of the model Selmer rank `dim(Z ∩ W)` against the exact finite-`n` law and the limit.
#[derive(Clone, Debug)]
pub struct SelmerReport {
    pub q: u64,
    pub space_type: SpaceType,
    pub n: u32,
    pub samples: u64,
    pub seed: u64,
    pub rows: Vec<SelmerRow>,
    /// Cells with expected count below [`MIN_EXPECTED_CELL`], pooled: (first d, count, mass, band).
    pub pooled_tail: Option<(u32, u64, f64, f64)>,
    pub max_dev_exact: f64,
    pub max_dev_limit: f64,
    pub pass: bool,
}

fn band(p: f64, samples: u64) -> f64 {
    3.0 * (p * (1.0 - p) / samples as f64).sqrt()
}

/// Draws `samples` uniform maximal isotropic `Z` in `ℍ(GF(q)^n)` and compares the
/// frequencies of `dim(Z ∩ W)` with the exact finite-`n` masses (3σ bands) and the limit law.
pub fn selmer_simulation(q: u64, ty: SpaceType, n: u32, samples: u64, seed: u64) -> Result<SelmerReport, MaxIsoError> {
    let counts = simulate_intersections(q, ty, n as usize, samples, seed)?;
    let limit = dist::limit_distribution(q, ty, Some(n))?;
    let mut rows = Vec::new();
    let mut max_dev_exact = 0.0f64;
    let mut max_dev_limit = 0.0f64;
    let mut pass = true;
    let mut tail: Option<(u32, u64, f64)> = None;
    for d in 0..=n {
        let count = counts.get(&d).copied().unwrap_or(0);
        let exact = dist::alpha_finite(q, n, d, ty)?;
        let p = exact.to_f64().unwrap_or(0.0);
        let empirical = count as f64 / samples as f64;
        let lim = match &limit {
            RankDistribution::Truncated { masses, .. } => masses.get(&d).copied(),
            RankDistribution::Exact { .. } => None,
        };
        max_dev_exact = max_dev_exact.max((empirical - p).abs());
        if let Some(l) = lim {
            max_dev_limit = max_dev_limit.max((empirical - l.value).abs());
        }
        let b = band(p, samples);
        if p * samples as f64 >= MIN_EXPECTED_CELL && tail.is_none() {
            pass &= (empirical - p).abs() <= b;
        } else {
            let t = tail.get_or_insert((d, 0, 0.0));
            t.1 += count;
            t.2 += p;
        }
        rows.push(SelmerRow { d, count, empirical, exact, limit: lim, band: b });
    }
    let pooled_tail = tail.map(|(d, c, p)| {
        let b = band(p, samples);
        pass &= (c as f64 / samples as f64 - p).abs() <= b;
        (d, c, p, b)
    });
    Ok(SelmerReport {
        q,
        space_type: ty,
        n,
        samples,
        seed,
        rows,
        pooled_tail,
        max_dev_exact,
        max_dev_limit,
        pass,
    })
}

impl SelmerReport {
    /// CSV with one row per rank; all numbers rendered as strings.
    pub fn to_csv(&self, precision: usize) -> String {
        let mut out = String::from("model_selmer_rank,count,empirical,exact_numerator,exact_denominator,band,limit,limit_tail_bound\n");
        for r in &self.rows {
            let (lv, lb) = r
                .limit
                .map(|l| (format_float(l.value, precision), format_float(l.tail_bound, precision)))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.d,
                r.count,
                format_float(r.empirical, precision),
                r.exact.numer(),
                r.exact.denom(),
                format_float(r.band, precision),
                lv,
                lb
            ));
        }
        out
    }

    pub fn to_json(&self, precision: usize) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                serde_json::json!({
                    "model_selmer_rank": r.d.to_string(),
                    "count": r.count.to_string(),
                    "empirical": format_float(r.empirical, precision),
                    "exact_numerator": r.exact.numer().to_string(),
                    "exact_denominator": r.exact.denom().to_string(),
                    "band_3sigma": format_float(r.band, precision),
                    "limit": r.limit.map(|l| format_float(l.value, precision)),
                    "limit_tail_bound": r.limit.map(|l| format_float(l.tail_bound, precision)),
                })
            })
            .collect();
        serde_json::json!({
            "q": self.q.to_string(),
            "type": self.space_type.short_name(),
            "n": self.n.to_string(),
            "samples": self.samples.to_string(),
            "seed": self.seed.to_string(),
            "rows": rows,
            "pooled_tail": self.pooled_tail.map(|(d, c, p, b)| serde_json::json!({
                "from_rank": d.to_string(),
                "count": c.to_string(),
                "exact": format_float(p, precision),
                "band_3sigma": format_float(b, precision),
            })),
            "max_deviation_exact": format_float(self.max_dev_exact, precision),
            "max_deviation_limit": format_float(self.max_dev_limit, precision),
            "pass": self.pass,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::make_field;
    use crate::linalg::all_subspaces_of_dim;
    use std::collections::HashMap;

    fn space(p: u32, e: u32, n: usize, ty: SpaceType) -> QuadraticSpace {
        QuadraticSpace::hyperbolic_of_type(Arc::new(make_field(p, e).unwrap()), n, ty).unwrap()
    }

    #[test]
    fn planes_have_one_plus_lambda_lines() {
        let ort = enumerate_maximal_isotropic(&space(2, 1, 1, SpaceType::Orthogonal), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(ort.len(), 2);
        assert_eq!(ort.to_text(), "0 1\n1 0\n");
        assert_eq!(enumerate_maximal_isotropic(&space(2, 1, 1, SpaceType::Symplectic), 100).unwrap().len(), 3);
        assert_eq!(enumerate_maximal_isotropic(&space(2, 2, 1, SpaceType::Unitary), 100).unwrap().len(), 3);
    }

    #[test]
    fn closed_form_counts() {
        assert_eq!(count_formula(2, 3, SpaceType::Symplectic).unwrap(), BigUint::from(135u32));
        assert_eq!(count_formula(2, 3, SpaceType::Orthogonal).unwrap(), BigUint::from(30u32));
        assert_eq!(count_formula(4, 2, SpaceType::Unitary).unwrap(), BigUint::from(27u32));
        assert!(count_formula(2, 2, SpaceType::Unitary).is_err());
        assert_eq!(fiber_size_formula(2, 2, 0, SpaceType::Symplectic).unwrap(), BigUint::one());
        assert_eq!(fiber_size_formula(2, 2, 1, SpaceType::Symplectic).unwrap(), BigUint::from(5u32));
        assert_eq!(fiber_size_formula(2, 3, 3, SpaceType::Orthogonal).unwrap(), BigUint::from(30u32));
        assert!(matches!(fiber_size_formula(2, 2, 3, SpaceType::Orthogonal), Err(MaxIsoError::OutOfRange { .. })));
        for n in 1..6 {
            for k in 0..=n {
                let lhs = count_formula(3, n, SpaceType::Symplectic).unwrap();
                let rhs = fiber_size_formula(3, n, k, SpaceType::Symplectic).unwrap()
                    * count_formula(3, n - k, SpaceType::Symplectic).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn enumeration_matches_brute_force_scan() {
        for (p, e, n, ty) in [(2, 1, 2, SpaceType::Orthogonal), (2, 1, 2, SpaceType::Symplectic), (3, 1, 2, SpaceType::Orthogonal), (2, 2, 1, SpaceType::Unitary)] {
            let v = space(p, e, n, ty);
            let f = v.field();
            let mut brute: Vec<Subspace> = all_subspaces_of_dim(f, 2 * n, n)
                .into_iter()
                .filter(|x| v.is_maximal_isotropic(x).unwrap())
                .collect();
            brute.sort_by_key(|s| s.sort_key(f));
            let set = enumerate_maximal_isotropic(&v, DEFAULT_ENUMERATION_CAP).unwrap();
            assert_eq!(set.members(), &brute[..]);
        }
    }

    #[test]
    fn cap_and_metabolic_errors() {
        let v = space(2, 1, 3, SpaceType::Symplectic);
        assert!(matches!(enumerate_maximal_isotropic(&v, 100), Err(MaxIsoError::TooLarge { .. })));
        // x² + xy + y² over GF(2) is anisotropic.
        let f = v.field_arc().clone();
        let s = Matrix::from_rows(2, &[vec![f.one(), f.one()], vec![f.zero(), f.one()]]);
        let aniso = QuadraticSpace::new(f, v.involution(), s, space(2, 1, 1, SpaceType::Orthogonal).param()).unwrap();
        assert_eq!(enumerate_maximal_isotropic(&aniso, 100).unwrap_err(), MaxIsoError::NotMetabolic);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_uniform(&aniso, &mut rng).unwrap_err(), MaxIsoError::NotMetabolic);
    }

    #[test]
    fn exact_intersection_laws() {
        for (p, e, ty, expect) in [
            (2, 1, SpaceType::Orthogonal, (1, 2)),
            (2, 1, SpaceType::Symplectic, (2, 3)),
            (2, 2, SpaceType::Unitary, (2, 3)),
        ] {
            let v = space(p, e, 1, ty);
            let w = Subspace::coordinate(2, [0]);
            let d = intersection_distribution_exact(&v, &w, 100).unwrap();
            let r = BigRational::new(expect.0.into(), expect.1.into());
            assert_eq!(d.exact_mass(0).unwrap(), r);
        }
    }

    #[test]
    fn intersection_law_independent_of_w_and_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (p, e, n, ty) in [(3, 1, 2, SpaceType::Orthogonal), (2, 2, 2, SpaceType::Unitary), (2, 1, 3, SpaceType::Symplectic)] {
            let base = space(p, e, n, ty);
            let v = random_isometric_copy(&base, &mut rng).unwrap();
            let set = enumerate_maximal_isotropic(&v, DEFAULT_ENUMERATION_CAP).unwrap();
            let expected = dist::finite_distribution(v.field().q() as u64, n as u32, ty).unwrap();
            for w in set.members().iter().step_by(set.len() / 3 + 1) {
                let counts = intersection_counts(&v, &set, w).unwrap();
                assert_eq!(RankDistribution::from_counts(&counts), expected);
            }
        }
    }

    #[test]
    fn fibers_are_constant() {
        let v = space(2, 1, 3, SpaceType::Orthogonal);
        let x = Subspace::coordinate(6, [0]);
        let set = enumerate_maximal_isotropic(&v, DEFAULT_ENUMERATION_CAP).unwrap();
        let fibers = projection_fibers(&v, &set, &x, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(fibers.len(), 6);
        assert!(fibers.iter().all(|fb| fb.size == 5));
    }

    #[test]
    fn generic_sampler_is_uniform_and_isotropic() {
        let v = space(3, 1, 1, SpaceType::Orthogonal);
        let set = enumerate_maximal_isotropic(&v, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts: HashMap<Subspace, u64> = HashMap::new();
        let n = 20_000u64;
        for _ in 0..n {
            let z = sample_uniform(&v, &mut rng).unwrap();
            assert!(set.contains(&z));
            *counts.entry(z).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), set.len());
        for c in counts.values() {
            let freq = *c as f64 / n as f64;
            assert!((freq - 0.5).abs() < 0.02, "{freq}");
        }
    }

    #[test]
    fn packed_sampler_agrees_with_generic_space() {
        let v = space(2, 1, 3, SpaceType::Orthogonal);
        let packed = PackedHyperbolic::from_space(&v).unwrap();
        let set = enumerate_maximal_isotropic(&v, 1000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let z = packed.sample(&mut rng).unwrap();
            let sub = packed.to_subspace(v.field(), &z);
            assert!(set.contains(&sub));
            let w = Subspace::coordinate(6, 0..3);
            assert_eq!(packed.meet_standard(&z), sub.intersect(v.field(), &w).unwrap().dim());
            assert_eq!(PackedHyperbolic::canonical(&z), PackedHyperbolic::canonical(&z.iter().rev().copied().collect::<Vec<_>>()));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let v = space(3, 1, 2, SpaceType::Symplectic);
        let a = sample_uniform(&v, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = sample_uniform(&v, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        let r1 = simulate_intersections(2, SpaceType::Orthogonal, 10, 10_000, 9).unwrap();
        let r2 = simulate_intersections(2, SpaceType::Orthogonal, 10, 10_000, 9).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn selmer_report_small() {
        let rep = selmer_simulation(2, SpaceType::Symplectic, 1, 100_000, 1).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.rows.len(), 2);
        let rep = selmer_simulation(3, SpaceType::Orthogonal, 3, 20_000, 2).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.to_csv(6).starts_with("model_selmer_rank,"));
    }
}
