//! Trace lifting of prime-field-valued forms on a `k`-space.
//!
//! A `k`-space `V = k^d` is viewed as the `GF(p)`-space `GF(p)^{d·e}` through the power
//! basis `α_l = x^l` of `k = GF(p)[x]/(m)`: coordinate `i·e + l` is the coefficient of
//! `α_l` in the `i`-th `k`-coordinate. An adjoint `GF(p)`-bilinear form `Hp` on that space
//! is the trace of a unique `σ`-sesquilinear `k`-valued form `H′`, recovered with the dual
//! basis of the trace pairing. In characteristic 2 with trivial involution a quadratic map
//! is lifted by solving for an adjoint bilinear form `s` with `s(v, v) = q(v)`.

use std::sync::Arc;

use rand::Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::gf::{make_field, Field, FieldElement, GfError, Involution};
use crate::linalg::{self, LinalgError, Matrix, Subspace};
use crate::quadspace::{FormParameter, ParamChoice, QuadError, QuadraticSpace, SpaceType};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LiftError {
    #[error("the form is not adjoint for the k-structure")]
    NotAdjoint,
    #[error("the linear system for an adjoint bilinear form has no solution")]
    NoSolution,
    #[error("spaces are not trace compatible: {0}")]
    NotTraceCompatible(String),
    #[error("invalid quadratic data: {0}")]
    InvalidQuadratic(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported setting: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The power basis of `k` over its prime field together with its trace-dual basis.
#[derive(Debug, Clone)]
pub struct TraceBasis {
    k: Arc<Field>,
    prime: Arc<Field>,
    basis: Vec<FieldElement>,
    dual: Vec<FieldElement>,
}

impl TraceBasis {
    pub fn new(k: Arc<Field>) -> Result<Self, LiftError> {
        let e = k.e() as usize;
        let prime = Arc::new(make_field(k.p(), 1)?);
        let basis: Vec<FieldElement> = (0..e)
            .map(|l| {
                let mut c = vec![0u32; e];
                c[l] = 1;
                k.from_coeffs(&c)
            })
            .collect::<Result<_, _>>()?;
        let gram = Matrix::from_fn(e, e, |l, m| prime.element(k.trace_to_prime(k.mul(basis[l], basis[m]))));
        let c = linalg::inverse(&prime, &gram)?;
        let dual = (0..e)
            .map(|m| {
                (0..e).fold(k.zero(), |acc, j| {
                    k.add(acc, k.mul(k.element(c[(j, m)].index()), basis[j]))
                })
            })
            .collect();
        Ok(TraceBasis { k, prime, basis, dual })
    }

    pub fn k(&self) -> &Arc<Field> {
        &self.k
    }

    pub fn prime(&self) -> &Arc<Field> {
        &self.prime
    }

    pub fn e(&self) -> usize {
        self.basis.len()
    }

    /// The power basis `α_l = x^l`.
    pub fn basis(&self) -> &[FieldElement] {
        &self.basis
    }

    /// The dual basis `α*_l` with `Tr(α_l α*_m) = δ_{lm}`.
    pub fn dual(&self) -> &[FieldElement] {
        &self.dual
    }

    /// `Tr_{k/GF(p)}(a)` as a prime-field element.
    pub fn tr(&self, a: FieldElement) -> FieldElement {
        self.prime.element(self.k.trace_to_prime(a))
    }

    /// Prime-field coordinates of a vector of `k^d`.
    pub fn to_prime(&self, v: &[FieldElement]) -> Vec<FieldElement> {
        v.iter()
            .flat_map(|&c| self.k.coeffs(c).into_iter().map(|x| self.prime.element(x)))
            .collect()
    }

    /// Inverse of [`TraceBasis::to_prime`].
    pub fn from_prime(&self, u: &[FieldElement]) -> Result<Vec<FieldElement>, LiftError> {
        let e = self.e();
        if !u.len().is_multiple_of(e) {
            return Err(LiftError::DimensionMismatch { expected: u.len().div_ceil(e) * e, got: u.len() });
        }
        u.chunks(e)
            .map(|c| {
                let coeffs: Vec<u32> = c.iter().map(|x| x.index()).collect();
                self.k.from_coeffs(&coeffs).map_err(LiftError::from)
            })
            .collect()
    }

    /// Matrix of `v ↦ a·v` on `GF(p)^{d·e}`, acting on column vectors.
    pub fn mult_matrix(&self, a: FieldElement, d: usize) -> Matrix {
        let e = self.e();
        let cols: Vec<Vec<u32>> = self.basis.iter().map(|&b| self.k.coeffs(self.k.mul(a, b))).collect();
        Matrix::from_fn(d * e, d * e, |r, c| {
            if r / e == c / e {
                self.prime.element(cols[c % e][r % e])
            } else {
                FieldElement::ZERO
            }
        })
    }

    /// The `GF(p)`-subspace underlying a `k`-subspace of `k^d`.
    pub fn restrict(&self, x: &Subspace) -> Subspace {
        let n = x.ambient_dim() * self.e();
        let rows: Vec<Vec<FieldElement>> = x
            .basis_vecs()
            .iter()
            .flat_map(|b| self.basis.iter().map(move |&a| self.to_prime(&linalg::scale_vec(&self.k, a, b))))
            .collect();
        Subspace::span(&self.prime, n, &rows)
    }

    /// Gram of `Tr ∘ G` on the prime-field basis, for a `σ`-sesquilinear `k`-Gram `G`.
    pub fn trace_form(&self, inv: Involution, g: &Matrix) -> Matrix {
        let e = self.e();
        let k = &*self.k;
        Matrix::from_fn(g.rows() * e, g.cols() * e, |r, c| {
            let (i, l) = (r / e, r % e);
            let (j, m) = (c / e, c % e);
            self.tr(k.mul(k.mul(self.basis[l], k.conj(inv, self.basis[m])), g[(i, j)]))
        })
    }

    /// Rank of the `GF(p)`-linear map `G ↦ Tr ∘ G` on `σ`-sesquilinear forms on `k^d`.
    /// It equals `d²·e` exactly when the lift is unique.
    pub fn trace_map_rank(&self, inv: Involution, d: usize) -> usize {
        let e = self.e();
        let n = d * e;
        let mut rows = Vec::with_capacity(d * d * e);
        for i in 0..d {
            for j in 0..d {
                for &a in &self.basis {
                    let mut g = Matrix::zeros(d, d);
                    g[(i, j)] = a;
                    let t = self.trace_form(inv, &g);
                    rows.push((0..n * n).map(|idx| t[(idx / n, idx % n)]).collect::<Vec<_>>());
                }
            }
        }
        linalg::rank(&self.prime, &Matrix::from_rows(n * n, &rows))
    }

    /// Linear constraints (rows over `GF(p)` in the `N²` entries of a Gram) expressing
    /// `M_aᵀ G = G M_{σ(a)}` for every basis element `a`.
    fn adjoint_constraints(&self, inv: Involution, d: usize) -> Vec<Vec<FieldElement>> {
        let p = &*self.prime;
        let n = d * self.e();
        let mut rows = Vec::new();
        for &a in &self.basis {
            let ma = self.mult_matrix(a, d);
            let msa = self.mult_matrix(self.k.conj(inv, a), d);
            for u in 0..n {
                for v in 0..n {
                    let mut row = vec![FieldElement::ZERO; n * n];
                    for w in 0..n {
                        let x = &mut row[w * n + v];
                        *x = p.add(*x, ma[(w, u)]);
                        let y = &mut row[u * n + w];
                        *y = p.sub(*y, msa[(w, v)]);
                    }
                    if row.iter().any(|c| !c.is_zero()) {
                        rows.push(row);
                    }
                }
            }
        }
        rows
    }
}

/// An adjoint `GF(p)`-bilinear form on the prime-field picture of `k^d`.
#[derive(Debug, Clone)]
pub struct AdjointForm {
    basis: Arc<TraceBasis>,
    inv: Involution,
    d: usize,
    hp: Matrix,
}

impl AdjointForm {
    pub fn new(basis: Arc<TraceBasis>, inv: Involution, d: usize, hp: Matrix) -> Result<Self, LiftError> {
        basis.k.check_involution(inv)?;
        let n = d * basis.e();
        if hp.rows() != n || hp.cols() != n {
            return Err(LiftError::DimensionMismatch { expected: n, got: hp.rows().max(hp.cols()) });
        }
        let p = &*basis.prime;
        for &a in &basis.basis {
            let lhs = basis.mult_matrix(a, d).transpose().mul(p, &hp);
            let rhs = hp.mul(p, &basis.mult_matrix(basis.k.conj(inv, a), d));
            if lhs != rhs {
                return Err(LiftError::NotAdjoint);
            }
        }
        Ok(AdjointForm { basis, inv, d, hp })
    }

    pub fn trace_basis(&self) -> &Arc<TraceBasis> {
        &self.basis
    }

    pub fn involution(&self) -> Involution {
        self.inv
    }

    /// `dim_k V`.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn gram(&self) -> &Matrix {
        &self.hp
    }

    /// A uniformly random adjoint form, drawn from the solution space of the adjointness system.
    pub fn random(basis: Arc<TraceBasis>, inv: Involution, d: usize, rng: &mut impl Rng) -> Result<Self, LiftError> {
        let n = d * basis.e();
        let p = &*basis.prime;
        let cons = basis.adjoint_constraints(inv, d);
        let ker = linalg::kernel(p, &Matrix::from_rows(n * n, &cons));
        let mut flat = vec![FieldElement::ZERO; n * n];
        for r in 0..ker.rows() {
            let c = p.element(rng.gen_range(0..p.q()));
            linalg::axpy(p, &mut flat, c, ker.row(r));
        }
        let hp = Matrix::from_fn(n, n, |i, j| flat[i * n + j]);
        AdjointForm::new(basis, inv, d, hp)
    }
}

/// The unique `σ`-sesquilinear `k`-Gram `H′` with `Tr ∘ H′ = Hp`,
/// `H′(e_i, e_j) = Σ_l α*_l · Hp(α_l e_i, e_j)`.
pub fn lift_bilinear(f: &AdjointForm) -> Matrix {
    let b = &*f.basis;
    let k = &*b.k;
    let e = b.e();
    Matrix::from_fn(f.d, f.d, |i, j| {
        (0..e).fold(k.zero(), |acc, l| {
            let c = k.element(f.hp[(i * e + l, j * e)].index());
            k.add(acc, k.mul(b.dual[l], c))
        })
    })
}

/// A quadratic map on the prime-field picture of `k^d`, given by its values on the
/// prime-field basis and its adjoint polar form.
#[derive(Debug, Clone)]
pub struct AdjointQuadraticForm {
    polar: AdjointForm,
    values: Vec<FieldElement>,
}

impl AdjointQuadraticForm {
    pub fn new(polar: AdjointForm, values: Vec<FieldElement>) -> Result<Self, LiftError> {
        let n = polar.hp.rows();
        if values.len() != n {
            return Err(LiftError::DimensionMismatch { expected: n, got: values.len() });
        }
        let p = &*polar.basis.prime;
        for (i, &v) in values.iter().enumerate() {
            if polar.hp[(i, i)] != p.add(v, v) {
                return Err(LiftError::InvalidQuadratic(format!("Hp({i},{i}) ≠ 2·q(e_{i})")));
            }
            for j in 0..i {
                if polar.hp[(i, j)] != polar.hp[(j, i)] {
                    return Err(LiftError::InvalidQuadratic("polar form is not symmetric".into()));
                }
            }
        }
        Ok(AdjointQuadraticForm { polar, values })
    }

    pub fn polar(&self) -> &AdjointForm {
        &self.polar
    }

    pub fn values(&self) -> &[FieldElement] {
        &self.values
    }

    /// `q(u) = Σ q(e_a) u_a² + Σ_{a<b} Hp(e_a, e_b) u_a u_b`.
    pub fn eval(&self, u: &[FieldElement]) -> FieldElement {
        let p = &*self.polar.basis.prime;
        let n = self.values.len();
        let mut acc = FieldElement::ZERO;
        for a in 0..n {
            acc = p.add(acc, p.mul(self.values[a], p.mul(u[a], u[a])));
            for b in a + 1..n {
                acc = p.add(acc, p.mul(self.polar.hp[(a, b)], p.mul(u[a], u[b])));
            }
        }
        acc
    }
}

/// Result of lifting a characteristic-2 quadratic map.
#[derive(Debug, Clone)]
pub struct QuadraticLift {
    /// Adjoint `GF(2)`-bilinear form with `s(v, v) = q(v)` and `s + sᵀ = Hp`.
    pub s: Matrix,
    /// The `k`-bilinear lift of `s`; `q′(v) = s′(v, v)`.
    pub s_prime: Matrix,
    /// Polar form `h′ = s′ + s′ᵀ` of `q′`.
    pub h_prime: Matrix,
    /// Dimension over `GF(2)` of the solution space of the homogeneous system.
    pub kernel_dim: usize,
}

/// Lift a quadratic map in characteristic 2 with trivial involution.
pub fn lift_quadratic_char2(f: &AdjointQuadraticForm) -> Result<QuadraticLift, LiftError> {
    let polar = &f.polar;
    let b = &polar.basis;
    if b.k.p() != 2 || polar.inv != Involution::Identity {
        return Err(LiftError::Unsupported("quadratic lifting needs characteristic 2 and σ = 1".into()));
    }
    let p = &*b.prime;
    let n = polar.hp.rows();
    let mut rows = b.adjoint_constraints(polar.inv, polar.d);
    let mut rhs = vec![FieldElement::ZERO; rows.len()];
    for a in 0..n {
        let mut row = vec![FieldElement::ZERO; n * n];
        row[a * n + a] = FieldElement::ONE;
        rows.push(row);
        rhs.push(f.values[a]);
        for c in a + 1..n {
            let mut row = vec![FieldElement::ZERO; n * n];
            row[a * n + c] = FieldElement::ONE;
            row[c * n + a] = FieldElement::ONE;
            rows.push(row);
            rhs.push(polar.hp[(a, c)]);
        }
    }
    let m = Matrix::from_rows(n * n, &rows);
    let sol = linalg::solve(p, &m, &rhs).ok_or(LiftError::NoSolution)?;
    let kernel_dim = n * n - linalg::rank(p, &m);
    let s = Matrix::from_fn(n, n, |i, j| sol[i * n + j]);
    let s_form = AdjointForm::new(b.clone(), polar.inv, polar.d, s.clone())?;
    let s_prime = lift_bilinear(&s_form);
    let k = &*b.k;
    let h_prime = s_prime.add(k, &s_prime.transpose());
    if b.trace_form(polar.inv, &h_prime) != polar.hp {
        return Err(LiftError::NotTraceCompatible("Tr ∘ h′ differs from Hp".into()));
    }
    Ok(QuadraticLift { s, s_prime, h_prime, kernel_dim })
}

/// Sesquilinear Gram `S` with `S + λ σ(S)ᵀ = H` for a `λ`-hermitian `H`, built from the
/// strictly upper-triangular part of `H` and a diagonal correction.
fn split_hermitian(k: &Field, inv: Involution, h: &Matrix) -> Result<Matrix, LiftError> {
    let d = h.rows();
    match inv {
        Involution::Identity if k.p() != 2 => {
            let half = k.inv(k.from_int(2));
            Ok(h.scale(k, half))
        }
        Involution::Identity => {
            Ok(Matrix::from_fn(d, d, |i, j| if i < j { h[(i, j)] } else { FieldElement::ZERO }))
        }
        Involution::FrobeniusHalf => {
            let alpha = k.solve_half_unit(inv)?;
            Ok(Matrix::from_fn(d, d, |i, j| match i.cmp(&j) {
                std::cmp::Ordering::Less => h[(i, j)],
                std::cmp::Ordering::Equal => k.mul(alpha, h[(i, i)]),
                std::cmp::Ordering::Greater => FieldElement::ZERO,
            }))
        }
        Involution::SplitSwap => Err(LiftError::Unsupported("split involution".into())),
    }
}

/// The quadratic `GF(p)`-space obtained by composing the forms of `vk` with the trace.
///
/// In odd characteristic the result is orthogonal or symplectic according to the sign of `vk`.
/// In characteristic 2 it is symplectic when `Λ = k`, and otherwise orthogonal with
/// quadratic map `Tr ∘ q′`.
pub fn restrict_scalars(vk: &QuadraticSpace) -> Result<QuadraticSpace, LiftError> {
    let basis = TraceBasis::new(vk.field_arc().clone())?;
    let k = &*basis.k;
    let p = &basis.prime;
    let inv = vk.involution();
    let hp = basis.trace_form(inv, vk.h_gram());
    let n = hp.rows();
    let e = basis.e();
    let (param, sp) = if k.p() != 2 {
        let half = p.inv(p.from_int(2));
        let lambda = vk.param().lambda;
        let sp = Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => hp[(i, j)],
            std::cmp::Ordering::Equal if lambda == 1 => p.mul(half, hp[(i, i)]),
            _ => FieldElement::ZERO,
        });
        let choice = if lambda == 1 { ParamChoice::Min } else { ParamChoice::Max };
        (FormParameter::new(lambda, choice)?, sp)
    } else if vk.lambda_size() == k.q() {
        let sp = Matrix::from_fn(n, n, |i, j| if i < j { hp[(i, j)] } else { FieldElement::ZERO });
        (FormParameter::new(-1, ParamChoice::Max)?, sp)
    } else {
        let s = vk.s_gram();
        let sp = Matrix::from_fn(n, n, |r, c| match r.cmp(&c) {
            std::cmp::Ordering::Less => hp[(r, c)],
            std::cmp::Ordering::Equal => {
                let (i, l) = (r / e, r % e);
                let a = basis.basis[l];
                basis.tr(k.mul(k.mul(a, k.conj(inv, a)), s[(i, i)]))
            }
            std::cmp::Ordering::Greater => FieldElement::ZERO,
        });
        (FormParameter::new(1, ParamChoice::Min)?, sp)
    };
    Ok(QuadraticSpace::new(p.clone(), Involution::Identity, sp, param)?)
}

/// The quadratic `k`-space lifted from a quadratic `GF(p)`-space on `k^d`.
///
/// `vp` lives on `GF(p)^{d·e}` in the coordinates of [`TraceBasis::to_prime`]. Its hermitian
/// form must be adjoint for `inv`. For `inv = σ ≠ 1` the lift is unitary with the sign of
/// `vp` (always `+1` in characteristic 2); for `σ = 1` it keeps the type of `vp`.
pub fn lift_space(vp: &QuadraticSpace, k: Arc<Field>, inv: Involution) -> Result<QuadraticSpace, LiftError> {
    if vp.field().p() != k.p() || vp.field().e() != 1 {
        return Err(LiftError::Unsupported("the source space must be over the prime field of k".into()));
    }
    let basis = Arc::new(TraceBasis::new(k.clone())?);
    let e = basis.e();
    if !vp.dim().is_multiple_of(e) {
        return Err(LiftError::DimensionMismatch { expected: vp.dim().div_ceil(e) * e, got: vp.dim() });
    }
    let d = vp.dim() / e;
    let form = AdjointForm::new(basis.clone(), inv, d, vp.h_gram().clone())?;
    let symplectic_p = vp.space_type() == SpaceType::Symplectic;
    let char2 = k.p() == 2;
    if inv == Involution::Identity && char2 && !symplectic_p {
        let values: Vec<FieldElement> = (0..vp.dim()).map(|i| vp.s_gram()[(i, i)]).collect();
        let lifted = lift_quadratic_char2(&AdjointQuadraticForm::new(form, values)?)?;
        let param = FormParameter::new(1, ParamChoice::Min)?;
        return Ok(QuadraticSpace::new(k, inv, lifted.s_prime, param)?);
    }
    let h = lift_bilinear(&form);
    let lambda = if char2 { 1 } else { vp.param().lambda };
    let param = match inv {
        Involution::Identity if symplectic_p => FormParameter::new(-1, ParamChoice::Max)?,
        _ => FormParameter::new(lambda, ParamChoice::Min)?,
    };
    let s = split_hermitian(&k, inv, &h)?;
    Ok(QuadraticSpace::new(k, inv, s, param)?)
}

/// Check `Tr ∘ h′ = Hp` and that `Tr ∘ q′ = q_p` as maps into `GF(p)/Λ_p`.
pub fn check_trace_compatible(vp: &QuadraticSpace, vk: &QuadraticSpace) -> Result<(), LiftError> {
    let basis = TraceBasis::new(vk.field_arc().clone())?;
    let k = &*basis.k;
    let e = basis.e();
    if vp.field().p() != k.p() || vp.field().e() != 1 {
        return Err(LiftError::NotTraceCompatible("fields do not match".into()));
    }
    if vp.dim() != vk.dim() * e {
        return Err(LiftError::DimensionMismatch { expected: vk.dim() * e, got: vp.dim() });
    }
    let inv = vk.involution();
    if &basis.trace_form(inv, vk.h_gram()) != vp.h_gram() {
        return Err(LiftError::NotTraceCompatible("Tr ∘ h′ differs from Hp".into()));
    }
    let p = &*basis.prime;
    let lambda_p = vp.param_table();
    if let Some(bad) = k.elements().find(|&a| vk.param_table().contains(a) && !lambda_p.contains(basis.tr(a))) {
        return Err(LiftError::NotTraceCompatible(format!("trace of {} ∈ Λ is not in Λ_p", k.format(bad))));
    }
    for r in 0..vp.dim() {
        let (i, l) = (r / e, r % e);
        let mut v = vec![k.zero(); vk.dim()];
        v[i] = basis.basis[l];
        let diff = p.sub(basis.tr(vk.s(&v, &v)), vp.s_gram()[(r, r)]);
        if !lambda_p.contains(diff) {
            return Err(LiftError::NotTraceCompatible(format!("Tr ∘ q′ differs from q on basis vector {r}")));
        }
    }
    Ok(())
}

/// The maximal-isotropic predicates of a `k`-subspace in both pictures, and whether
/// the two orthogonal complements agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MiCorrespondence {
    pub mi_p: bool,
    pub mi_k: bool,
    pub perp_agree: bool,
}

impl MiCorrespondence {
    pub fn agrees(&self) -> bool {
        self.mi_p == self.mi_k && self.perp_agree
    }
}

/// Evaluate maximal isotropy of the `k`-subspace `x` in `vk` and of its prime-field
/// picture in `vp`, after checking trace compatibility.
pub fn check_mi_correspondence(
    vp: &QuadraticSpace,
    vk: &QuadraticSpace,
    x: &Subspace,
) -> Result<MiCorrespondence, LiftError> {
    check_trace_compatible(vp, vk)?;
    let basis = TraceBasis::new(vk.field_arc().clone())?;
    mi_pair(&basis, vp, vk, x)
}

fn mi_pair(
    basis: &TraceBasis,
    vp: &QuadraticSpace,
    vk: &QuadraticSpace,
    x: &Subspace,
) -> Result<MiCorrespondence, LiftError> {
    let xp = basis.restrict(x);
    let mi_k = vk.is_maximal_isotropic(x)?;
    let mi_p = vp.is_maximal_isotropic(&xp)?;
    let perp_k = basis.restrict(&vk.orthogonal_complement(x)?);
    let perp_p = vp.orthogonal_complement(&xp)?;
    Ok(MiCorrespondence { mi_p, mi_k, perp_agree: perp_k == perp_p })
}

/// A random nondegenerate quadratic space of type `ty` and dimension `d` over `k`.
pub fn random_space(k: Arc<Field>, ty: SpaceType, d: usize, rng: &mut impl Rng) -> Result<QuadraticSpace, LiftError> {
    let (inv, param) = ty.realize(&k)?;
    for _ in 0..10_000 {
        let s = Matrix::from_fn(d, d, |_, _| k.element(rng.gen_range(0..k.q())));
        match QuadraticSpace::new(k.clone(), inv, s, param) {
            Ok(v) => return Ok(v),
            Err(QuadError::Degenerate) => continue,
            Err(err) => return Err(err.into()),
        }
    }
    Err(QuadError::Degenerate.into())
}

/// Outcome of one randomized lifting round trip.
#[derive(Debug, Clone)]
pub struct LiftCheck {
    pub q: u32,
    pub ty: SpaceType,
    pub d: usize,
    /// `Tr ∘ h′ = Hp` and `Tr ∘ q′ = q` for the lifted space.
    pub trace_ok: bool,
    /// The trace map on sesquilinear forms is injective.
    pub unique: bool,
    /// `H′ = λ σ(H′)ᵀ` with the sign of the source.
    pub hermitian_ok: bool,
    /// The lifted space has the same class as the space that was restricted.
    pub round_trip: bool,
    pub subspaces: usize,
    pub mi_disagreements: usize,
    pub perp_disagreements: usize,
}

impl LiftCheck {
    pub fn pass(&self) -> bool {
        self.trace_ok
            && self.unique
            && self.hermitian_ok
            && self.round_trip
            && self.mi_disagreements == 0
            && self.perp_disagreements == 0
    }

    pub fn to_json(&self) -> Value {
        json!({
            "q": self.q.to_string(),
            "type": self.ty.short_name(),
            "d": self.d.to_string(),
            "trace_ok": self.trace_ok,
            "unique": self.unique,
            "hermitian_ok": self.hermitian_ok,
            "round_trip": self.round_trip,
            "subspaces": self.subspaces.to_string(),
            "mi_disagreements": self.mi_disagreements.to_string(),
            "perp_disagreements": self.perp_disagreements.to_string(),
            "pass": self.pass(),
        })
    }
}

/// Restrict a random space `V_k` to `V_p`, lift it back, and compare the
/// maximal-isotropic predicates and orthogonal complements on every `k`-subspace.
pub fn lift_round_trip(k: Arc<Field>, ty: SpaceType, d: usize, rng: &mut impl Rng) -> Result<LiftCheck, LiftError> {
    let original = random_space(k.clone(), ty, d, rng)?;
    let inv = original.involution();
    let vp = restrict_scalars(&original)?;
    let vk = lift_space(&vp, k.clone(), inv)?;
    let basis = TraceBasis::new(k.clone())?;
    let trace_ok = check_trace_compatible(&vp, &vk).is_ok();
    let unique = basis.trace_map_rank(inv, d) == d * d * basis.e();
    let h = vk.h_gram();
    let lam = vk.param().lambda_element(&k);
    let hermitian_ok = *h == h.conj(&k, inv).transpose().scale(&k, lam);
    let round_trip = vk.same_class(&original);
    let mut mi_disagreements = 0;
    let mut perp_disagreements = 0;
    let subspaces = linalg::all_subspaces(&k, d);
    for x in &subspaces {
        let c = mi_pair(&basis, &vp, &vk, x)?;
        mi_disagreements += usize::from(c.mi_p != c.mi_k);
        perp_disagreements += usize::from(!c.perp_agree);
    }
    Ok(LiftCheck {
        q: k.q(),
        ty,
        d,
        trace_ok,
        unique,
        hermitian_ok,
        round_trip,
        subspaces: subspaces.len(),
        mi_disagreements,
        perp_disagreements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field(p: u32, e: u32) -> Arc<Field> {
        Arc::new(make_field(p, e).unwrap())
    }

    #[test]
    fn dual_basis_is_dual() {
        for (p, e) in [(2, 2), (3, 2), (2, 3), (5, 1)] {
            let b = TraceBasis::new(field(p, e)).unwrap();
            let k = b.k();
            for (l, &a) in b.basis().iter().enumerate() {
                for (m, &ad) in b.dual().iter().enumerate() {
                    let t = k.trace_to_prime(k.mul(a, ad));
                    assert_eq!(t, u32::from(l == m));
                }
            }
        }
    }

    #[test]
    fn prime_field_lift_is_identity() {
        let k = field(5, 1);
        let b = Arc::new(TraceBasis::new(k.clone()).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = AdjointForm::random(b, Involution::Identity, 3, &mut rng).unwrap();
        let h = lift_bilinear(&f);
        assert_eq!(&h, f.gram());
    }

    #[test]
    fn gf4_trace_pairing_lifts_to_multiplication() {
        let k = field(2, 2);
        let b = Arc::new(TraceBasis::new(k.clone()).unwrap());
        let hp = Matrix::from_fn(2, 2, |l, m| b.tr(k.mul(b.basis()[l], b.basis()[m])));
        let f = AdjointForm::new(b.clone(), Involution::Identity, 1, hp).unwrap();
        let h = lift_bilinear(&f);
        assert_eq!(h[(0, 0)], k.one());
    }

    #[test]
    fn random_gf9_frobenius_forms_lift_uniquely() {
        let k = field(3, 2);
        let b = Arc::new(TraceBasis::new(k.clone()).unwrap());
        let inv = Involution::FrobeniusHalf;
        assert_eq!(b.trace_map_rank(inv, 2), 2 * 2 * 2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let f = AdjointForm::random(b.clone(), inv, 2, &mut rng).unwrap();
            let h = lift_bilinear(&f);
            assert_eq!(&b.trace_form(inv, &h), f.gram());
        }
    }

    #[test]
    fn non_adjoint_form_is_rejected() {
        let k = field(2, 2);
        let b = Arc::new(TraceBasis::new(k).unwrap());
        let mut hp = Matrix::zeros(2, 2);
        hp[(0, 1)] = FieldElement::ONE;
        assert_eq!(AdjointForm::new(b, Involution::Identity, 1, hp).unwrap_err(), LiftError::NotAdjoint);
    }

    #[test]
    fn symmetric_source_lifts_to_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (k, inv) in [(field(3, 2), Involution::FrobeniusHalf), (field(3, 2), Involution::Identity)] {
            let b = Arc::new(TraceBasis::new(k.clone()).unwrap());
            for _ in 0..10 {
                let f = AdjointForm::random(b.clone(), inv, 2, &mut rng).unwrap();
                let hp = f.gram();
                let h = lift_bilinear(&f);
                let ht = h.conj(&k, inv).transpose();
                if *hp == hp.transpose() {
                    assert_eq!(h, ht);
                }
                let neg = hp.scale(b.prime(), b.prime().from_int(-1));
                if neg == hp.transpose() {
                    assert_eq!(h, ht.scale(&k, k.from_int(-1)));
                }
            }
        }
    }

    #[test]
    fn quadratic_lift_on_gf4_hyperbolic_plane() {
        let k = field(2, 2);
        let vk = QuadraticSpace::hyperbolic_of_type(k.clone(), 1, SpaceType::Orthogonal).unwrap();
        let vp = restrict_scalars(&vk).unwrap();
        let b = Arc::new(TraceBasis::new(k.clone()).unwrap());
        let polar = AdjointForm::new(b.clone(), Involution::Identity, 2, vp.h_gram().clone()).unwrap();
        let values = (0..4).map(|i| vp.s_gram()[(i, i)]).collect();
        let qf = AdjointQuadraticForm::new(polar, values).unwrap();
        let lifted = lift_quadratic_char2(&qf).unwrap();
        assert_eq!(lifted.kernel_dim, 2);
        for v in linalg::all_vectors(&k, 2) {
            let qv = linalg::dot(&k, &v, &lifted.s_prime.apply(&k, &v));
            assert_eq!(b.tr(qv), qf.eval(&b.to_prime(&v)));
            assert_eq!(vk.eval_q(&v).unwrap().0, qv);
        }
    }

    #[test]
    fn quadratic_lift_kernel_matches_alternating_forms() {
        let k = field(2, 2);
        let b = Arc::new(TraceBasis::new(k.clone()).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for d in [2usize, 4] {
            let vk = random_space(k.clone(), SpaceType::Orthogonal, d, &mut rng).unwrap();
            let vp = restrict_scalars(&vk).unwrap();
            let polar = AdjointForm::new(b.clone(), Involution::Identity, d, vp.h_gram().clone()).unwrap();
            let values = (0..vp.dim()).map(|i| vp.s_gram()[(i, i)]).collect();
            let lifted = lift_quadratic_char2(&AdjointQuadraticForm::new(polar, values).unwrap()).unwrap();
            let expected = if d == 2 {
                linalg::all_vectors(&k, d * d)
                    .filter(|g| {
                        let m = Matrix::from_fn(d, d, |i, j| g[i * d + j]);
                        linalg::all_vectors(&k, d).all(|v| linalg::dot(&k, &v, &m.apply(&k, &v)).is_zero())
                    })
                    .count()
            } else {
                4usize.pow((d * (d - 1) / 2) as u32)
            };
            assert_eq!(1usize << lifted.kernel_dim, expected);
        }
    }

    #[test]
    fn incompatible_quadratic_is_rejected() {
        let k = field(2, 2);
        let vk = QuadraticSpace::hyperbolic_of_type(k.clone(), 1, SpaceType::Unitary).unwrap();
        let vp = restrict_scalars(&vk).unwrap();
        check_trace_compatible(&vp, &vk).unwrap();
        let mut s = vp.s_gram().clone();
        s[(0, 0)] = vp.field().add(s[(0, 0)], FieldElement::ONE);
        let bad = vp.with_gram(s).unwrap();
        let x = Subspace::zero(2);
        assert!(matches!(check_mi_correspondence(&bad, &vk, &x), Err(LiftError::NotTraceCompatible(_))));
    }

    #[test]
    fn zero_subspace_is_not_maximal() {
        let k = field(3, 2);
        let vk = QuadraticSpace::hyperbolic_of_type(k.clone(), 1, SpaceType::Unitary).unwrap();
        let vp = restrict_scalars(&vk).unwrap();
        let c = check_mi_correspondence(&vp, &vk, &Subspace::zero(2)).unwrap();
        assert_eq!((c.mi_p, c.mi_k), (false, false));
    }

    #[test]
    fn unitary_gf4_plane_lines_match_stable_prime_lagrangians() {
        let k = field(2, 2);
        let vk = QuadraticSpace::hyperbolic_of_type(k.clone(), 1, SpaceType::Unitary).unwrap();
        let vp = restrict_scalars(&vk).unwrap();
        let b = TraceBasis::new(k.clone()).unwrap();
        let mk: Vec<Subspace> = linalg::all_subspaces_of_dim(&k, 2, 1)
            .into_iter()
            .filter(|x| vk.is_maximal_isotropic(x).unwrap())
            .map(|x| b.restrict(&x))
            .collect();
        assert_eq!(mk.len(), 3);
        let x_mult = b.mult_matrix(b.basis()[1], 2);
        let p = b.prime();
        let mut stable: Vec<Subspace> = linalg::all_subspaces_of_dim(p, 4, 2)
            .into_iter()
            .filter(|x| vp.is_maximal_isotropic(x).unwrap())
            .filter(|x| {
                x.basis_vecs().iter().all(|v| x.contains(p, &x_mult.apply(p, v)).unwrap())
            })
            .collect();
        let mut mk = mk;
        mk.sort();
        stable.sort();
        assert_eq!(mk, stable);
    }

    #[test]
    fn round_trips_agree_on_all_subspaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let cases = [
            ((2, 2), SpaceType::Orthogonal, 2),
            ((2, 2), SpaceType::Symplectic, 2),
            ((2, 2), SpaceType::Unitary, 2),
            ((3, 2), SpaceType::Orthogonal, 2),
            ((3, 2), SpaceType::Symplectic, 2),
            ((3, 2), SpaceType::Unitary, 2),
            ((3, 2), SpaceType::Unitary, 1),
        ];
        for ((p, e), ty, d) in cases {
            let c = lift_round_trip(field(p, e), ty, d, &mut rng).unwrap();
            assert!(c.pass(), "{c:?}");
        }
    }
}
