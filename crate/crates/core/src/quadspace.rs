//! `(λ, Λ)`-quadratic spaces over a finite field with involution.
//!
//! A space is given by the Gram matrix `S` of a sesquilinear form
//! `s(x, y) = xᵀ S σ(y)`. It carries the `λ`-hermitian form `h = s + λ s*`
//! with Gram matrix `H = S + λ σ(S)ᵀ`, and the quadratic map
//! `q(v) = s(v, v) mod Λ`. Values of `q` are reported by a canonical
//! representative of the coset in `k / Λ`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{Field, FieldElement, FieldSpec, GfError, Involution};
use crate::linalg::{self, LinalgError, Matrix, Subspace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuadError {
    #[error("the hermitian form is degenerate")]
    Degenerate,
    #[error("invalid form parameter: {0}")]
    InvalidParam(String),
    #[error("subspace is not isotropic")]
    NotIsotropic,
    #[error("subspace is not maximal isotropic")]
    NotMaximalIsotropic,
    #[error("vector or subspace of dimension {got} in a space of dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Which end of the admissible range `Λ^min ⊆ Λ ⊆ Λ^max` is used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamChoice {
    Min,
    Max,
}

/// A form parameter, described by the sign `λ` and the choice of `Λ^min` or `Λ^max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FormParameter {
    /// `+1` or `-1`.
    pub lambda: i8,
    pub choice: ParamChoice,
}

impl FormParameter {
    pub fn new(lambda: i8, choice: ParamChoice) -> Result<Self, QuadError> {
        if lambda != 1 && lambda != -1 {
            return Err(QuadError::InvalidParam(format!("λ must be ±1, got {lambda}")));
        }
        Ok(FormParameter { lambda, choice })
    }

    pub fn lambda_element(&self, f: &Field) -> FieldElement {
        f.from_int(self.lambda as i64)
    }
}

/// The three classical types of quadratic space over a finite field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceType {
    Orthogonal,
    Symplectic,
    Unitary,
}

impl SpaceType {
    pub fn short_name(self) -> &'static str {
        match self {
            SpaceType::Orthogonal => "ort",
            SpaceType::Symplectic => "sym",
            SpaceType::Unitary => "uni",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ort" | "orthogonal" => Some(SpaceType::Orthogonal),
            "sym" | "symplectic" => Some(SpaceType::Symplectic),
            "uni" | "unitary" => Some(SpaceType::Unitary),
            _ => None,
        }
    }

    /// `δ(Λ)` doubled, so that it is an integer: 0, 1 or 2.
    pub fn two_delta(self) -> u32 {
        match self {
            SpaceType::Orthogonal => 0,
            SpaceType::Unitary => 1,
            SpaceType::Symplectic => 2,
        }
    }

    pub fn delta(self) -> f64 {
        self.two_delta() as f64 / 2.0
    }

    /// Involution and form parameter realizing this type over `GF(p^e)`.
    pub fn realize(self, field: &Field) -> Result<(Involution, FormParameter), QuadError> {
        match self {
            SpaceType::Orthogonal => Ok((Involution::Identity, FormParameter { lambda: 1, choice: ParamChoice::Min })),
            SpaceType::Symplectic => Ok((Involution::Identity, FormParameter { lambda: -1, choice: ParamChoice::Max })),
            SpaceType::Unitary => {
                if !field.e().is_multiple_of(2) {
                    return Err(QuadError::InvalidParam(format!(
                        "unitary spaces need a square field order, got {}",
                        field.q()
                    )));
                }
                Ok((Involution::FrobeniusHalf, FormParameter { lambda: 1, choice: ParamChoice::Min }))
            }
        }
    }

    /// `|Λ|` for this type over a field of order `q`; `None` if `q` is not a square in the unitary case.
    pub fn lambda_size(self, q: u64) -> Option<u64> {
        match self {
            SpaceType::Orthogonal => Some(1),
            SpaceType::Symplectic => Some(q),
            SpaceType::Unitary => {
                let r = (q as f64).sqrt().round() as u64;
                (r * r == q).then_some(r)
            }
        }
    }
}

impl fmt::Display for SpaceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// The realized additive subgroup `Λ ⊆ k` together with a canonical complement,
/// used to pick coset representatives for `k / Λ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamTable {
    member: Vec<bool>,
    rep: Vec<u32>,
    size: u32,
}

impl ParamTable {
    pub fn build(field: &Field, inv: Involution, param: FormParameter) -> Result<Self, QuadError> {
        field.check_involution(inv).map_err(|e| QuadError::InvalidParam(e.to_string()))?;
        let lam = param.lambda_element(field);
        let q = field.q() as usize;
        let mut member = vec![false; q];
        for a in field.elements() {
            match param.choice {
                ParamChoice::Min => {
                    let x = field.sub(a, field.mul(lam, field.conj(inv, a)));
                    member[x.index() as usize] = true;
                }
                ParamChoice::Max => {
                    let rhs = field.neg(field.mul(lam, field.conj(inv, a)));
                    if a == rhs {
                        member[a.index() as usize] = true;
                    }
                }
            }
        }
        let size = member.iter().filter(|&&b| b).count() as u32;
        let lambda_set: Vec<FieldElement> =
            field.elements().filter(|x| member[x.index() as usize]).collect();

        let complement: Vec<FieldElement> = if size == 1 {
            field.elements().collect()
        } else if size as usize == q {
            vec![FieldElement::ZERO]
        } else {
            // Unitary case: Λ is either the fixed field k0 or the trace-zero line.
            let in_k0 = |x: FieldElement| field.conj(inv, x) == x;
            let trace_zero = |x: FieldElement| field.add(x, field.conj(inv, x)).is_zero();
            let lambda_is_k0 = lambda_set.iter().all(|&x| in_k0(x));
            if lambda_is_k0 && field.p() == 2 {
                let beta = field.solve_half_unit(inv)?;
                let k0: Vec<FieldElement> = field.elements().filter(|&x| in_k0(x)).collect();
                k0.into_iter().map(|c| field.mul(c, beta)).collect()
            } else if lambda_is_k0 {
                field.elements().filter(|&x| trace_zero(x)).collect()
            } else {
                field.elements().filter(|&x| in_k0(x)).collect()
            }
        };
        let mut rep = vec![u32::MAX; q];
        for &c in &complement {
            for &l in &lambda_set {
                rep[field.add(c, l).index() as usize] = c.index();
            }
        }
        debug_assert!(rep.iter().all(|&r| r != u32::MAX), "complement does not cover k/Λ");
        Ok(ParamTable { member, rep, size })
    }

    pub fn contains(&self, x: FieldElement) -> bool {
        self.member[x.index() as usize]
    }

    /// Canonical representative of `x + Λ`.
    #[inline]
    pub fn reduce(&self, x: FieldElement) -> FieldElement {
        FieldElement::from_index_unchecked(self.rep[x.index() as usize])
    }

    /// `|Λ|`.
    pub fn size(&self) -> u32 {
        self.size
    }
}

/// A value of `q`, i.e. a class in `k / Λ` held by its canonical representative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CosetValue(pub FieldElement);

impl CosetValue {
    pub fn is_zero(self) -> bool {
        self.0.is_zero()
    }
}

/// A nondegenerate `(λ, Λ)`-quadratic space `k^n`.
#[derive(Clone)]
pub struct QuadraticSpace {
    field: Arc<Field>,
    inv: Involution,
    param: FormParameter,
    table: Arc<ParamTable>,
    s: Matrix,
    h: Matrix,
}

impl fmt::Debug for QuadraticSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuadraticSpace")
            .field("field", &self.field)
            .field("involution", &self.inv)
            .field("param", &self.param)
            .field("s", &self.s)
            .finish()
    }
}

/// `H = S + λ σ(S)ᵀ`.
pub fn hermitian_gram(f: &Field, inv: Involution, lambda: FieldElement, s: &Matrix) -> Matrix {
    s.add(f, &s.conj(f, inv).transpose().scale(f, lambda))
}

impl QuadraticSpace {
    pub fn new(field: Arc<Field>, inv: Involution, s: Matrix, param: FormParameter) -> Result<Self, QuadError> {
        if s.rows() != s.cols() {
            return Err(QuadError::DimensionMismatch { expected: s.rows(), got: s.cols() });
        }
        let table = Arc::new(ParamTable::build(&field, inv, param)?);
        Self::with_table(field, inv, s, param, table)
    }

    fn with_table(
        field: Arc<Field>,
        inv: Involution,
        s: Matrix,
        param: FormParameter,
        table: Arc<ParamTable>,
    ) -> Result<Self, QuadError> {
        let h = hermitian_gram(&field, inv, param.lambda_element(&field), &s);
        if linalg::rank(&field, &h) < h.rows() {
            return Err(QuadError::Degenerate);
        }
        Ok(QuadraticSpace { field, inv, param, table, s, h })
    }

    /// The hyperbolic space `ℍ(k^n)` with Gram class `[[0, 1], [0, 0]]`.
    pub fn hyperbolic(field: Arc<Field>, inv: Involution, n: usize, param: FormParameter) -> Result<Self, QuadError> {
        if n == 0 {
            return Err(QuadError::InvalidParam("hyperbolic space needs n ≥ 1".into()));
        }
        Self::new(field, inv, hyperbolic_gram(n), param)
    }

    /// `ℍ(k^n)` of the given classical type over `GF(p^e)`.
    pub fn hyperbolic_of_type(field: Arc<Field>, n: usize, ty: SpaceType) -> Result<Self, QuadError> {
        let (inv, param) = ty.realize(&field)?;
        Self::hyperbolic(field, inv, n, param)
    }

    /// A space with the same field, involution and parameter but a different Gram matrix.
    pub fn with_gram(&self, s: Matrix) -> Result<Self, QuadError> {
        if s.rows() != s.cols() {
            return Err(QuadError::DimensionMismatch { expected: s.rows(), got: s.cols() });
        }
        Self::with_table(self.field.clone(), self.inv, s, self.param, self.table.clone())
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn field_arc(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn involution(&self) -> Involution {
        self.inv
    }

    pub fn param(&self) -> FormParameter {
        self.param
    }

    pub fn param_table(&self) -> &ParamTable {
        &self.table
    }

    pub fn dim(&self) -> usize {
        self.s.rows()
    }

    pub fn s_gram(&self) -> &Matrix {
        &self.s
    }

    pub fn h_gram(&self) -> &Matrix {
        &self.h
    }

    pub fn lambda(&self) -> FieldElement {
        self.param.lambda_element(&self.field)
    }

    /// `|Λ|`.
    pub fn lambda_size(&self) -> u32 {
        self.table.size()
    }

    /// The classical type, read off from `|Λ|`.
    pub fn space_type(&self) -> SpaceType {
        let size = self.table.size();
        if size == 1 {
            SpaceType::Orthogonal
        } else if size == self.field.q() {
            SpaceType::Symplectic
        } else {
            SpaceType::Unitary
        }
    }

    fn check_vec(&self, v: &[FieldElement]) -> Result<(), QuadError> {
        if v.len() != self.dim() {
            return Err(QuadError::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        Ok(())
    }

    fn check_subspace(&self, x: &Subspace) -> Result<(), QuadError> {
        if x.ambient_dim() != self.dim() {
            return Err(QuadError::DimensionMismatch { expected: self.dim(), got: x.ambient_dim() });
        }
        Ok(())
    }

    fn form(&self, g: &Matrix, x: &[FieldElement], y: &[FieldElement]) -> FieldElement {
        let f = &*self.field;
        let sy: Vec<FieldElement> = y.iter().map(|&c| f.conj(self.inv, c)).collect();
        linalg::dot(f, x, &g.apply(f, &sy))
    }

    /// `s(x, y) = xᵀ S σ(y)`.
    pub fn s(&self, x: &[FieldElement], y: &[FieldElement]) -> FieldElement {
        self.form(&self.s, x, y)
    }

    /// `h(x, y) = xᵀ H σ(y)`.
    pub fn h(&self, x: &[FieldElement], y: &[FieldElement]) -> FieldElement {
        self.form(&self.h, x, y)
    }

    /// `q(v) = s(v, v) mod Λ`.
    pub fn eval_q(&self, v: &[FieldElement]) -> Result<CosetValue, QuadError> {
        self.check_vec(v)?;
        Ok(self.q_unchecked(v))
    }

    pub(crate) fn q_unchecked(&self, v: &[FieldElement]) -> CosetValue {
        CosetValue(self.table.reduce(self.s(v, v)))
    }

    /// `X^⊥ = {y : h(x, y) = 0 for all x ∈ X}`.
    pub fn orthogonal_complement(&self, x: &Subspace) -> Result<Subspace, QuadError> {
        self.check_subspace(x)?;
        let f = &*self.field;
        // h(x, y) = 0 for all x  ⇔  (X H) σ(y) = 0.
        let xh = x.basis().mul(f, &self.h);
        let ker = linalg::kernel(f, &xh);
        Ok(Subspace::from_matrix(f, &ker.conj(f, self.inv)))
    }

    /// Whether `q` vanishes on `X` and `h(X, X) = 0`, decided on a basis.
    pub fn is_isotropic(&self, x: &Subspace) -> Result<bool, QuadError> {
        self.check_subspace(x)?;
        let f = &*self.field;
        let b = x.basis_vecs();
        for (i, u) in b.iter().enumerate() {
            if !self.q_unchecked(u).is_zero() {
                return Ok(false);
            }
            for v in &b[i + 1..] {
                if !self.q_unchecked(&linalg::add_vec(f, u, v)).is_zero() {
                    return Ok(false);
                }
            }
            for v in &b {
                if !self.h(u, v).is_zero() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Isotropic with `X = X^⊥`.
    pub fn is_maximal_isotropic(&self, x: &Subspace) -> Result<bool, QuadError> {
        Ok(2 * x.dim() == self.dim() && self.is_isotropic(x)?)
    }

    /// The induced nondegenerate space on `X^⊥ / X`.
    pub fn quotient_space(&self, x: &Subspace) -> Result<QuotientSpace, QuadError> {
        if !self.is_isotropic(x)? {
            return Err(QuadError::NotIsotropic);
        }
        let f = &*self.field;
        let perp = self.orthogonal_complement(x)?;
        let pb = perp.basis();
        // Coordinates of X inside X^⊥.
        let coords: Vec<Vec<FieldElement>> = x
            .basis_vecs()
            .iter()
            .map(|v| linalg::solve(f, &pb.transpose(), v).expect("X lies in X^⊥"))
            .collect();
        let x_in_perp = Subspace::span(f, perp.dim(), &coords);
        let quot = linalg::quotient(f, perp.dim(), &x_in_perp)?;
        let section = quot.section.mul(f, pb);
        let gram = section.mul(f, &self.s).mul(f, &section.conj(f, self.inv).transpose());
        let space = self.with_gram(gram)?;
        Ok(QuotientSpace { space, perp, section, projection: quot.projection })
    }

    /// `W ↦ ((W ∩ X^⊥) + X) / X`, as a subspace of the quotient space.
    pub fn project_maximal_isotropic(
        &self,
        w: &Subspace,
        x: &Subspace,
    ) -> Result<(QuotientSpace, Subspace), QuadError> {
        if !self.is_maximal_isotropic(w)? {
            return Err(QuadError::NotMaximalIsotropic);
        }
        let quot = self.quotient_space(x)?;
        let image = quot.project_subspace(&self.field, w)?;
        Ok((quot, image))
    }

    /// A change of basis `T` (columns are the new basis) with `Tᵀ S σ(T)` in the
    /// class of the standard hyperbolic Gram matrix and the first `dim X`
    /// columns spanning `X`.
    pub fn hyperbolic_basis(&self, x: &Subspace) -> Result<Matrix, QuadError> {
        if !self.is_maximal_isotropic(x)? {
            return Err(QuadError::NotMaximalIsotropic);
        }
        let f = &*self.field;
        let k = x.dim();
        let xs = x.basis_vecs();
        let lam = self.lambda();
        let xh = x.basis().mul(f, &self.h);
        let mut ys: Vec<Vec<FieldElement>> = Vec::with_capacity(k);
        for j in 0..k {
            let e: Vec<FieldElement> =
                (0..k).map(|i| if i == j { FieldElement::ONE } else { FieldElement::ZERO }).collect();
            let z = linalg::solve(f, &xh, &e).ok_or(QuadError::Degenerate)?;
            ys.push(z.iter().map(|&c| f.conj(self.inv, c)).collect());
        }
        for j in 0..k {
            for l in 0..j {
                let c = self.h(&ys[j], &ys[l]);
                let c = f.neg(c);
                let xl = xs[l].clone();
                linalg::axpy(f, &mut ys[j], c, &xl);
            }
            let c = f.neg(f.mul(lam, f.conj(self.inv, self.s(&ys[j], &ys[j]))));
            let xj = xs[j].clone();
            linalg::axpy(f, &mut ys[j], c, &xj);
        }
        let mut rows = xs;
        rows.extend(ys);
        Ok(Matrix::from_rows(self.dim(), &rows).transpose())
    }

    /// The space with Gram matrix `Tᵀ S σ(T)`.
    pub fn transport(&self, t: &Matrix) -> Result<QuadraticSpace, QuadError> {
        let f = &*self.field;
        let s = t.transpose().mul(f, &self.s).mul(f, &t.conj(f, self.inv));
        self.with_gram(s)
    }

    /// Whether `other` has the same hermitian form and the same quadratic map
    /// (same class `[s]`), over the same field, involution and parameter.
    pub fn same_class(&self, other: &QuadraticSpace) -> bool {
        if self.field.spec() != other.field.spec()
            || self.inv != other.inv
            || self.param != other.param
            || self.dim() != other.dim()
        {
            return false;
        }
        let f = &*self.field;
        self.h == other.h
            && (0..self.dim()).all(|i| self.table.contains(f.sub(self.s[(i, i)], other.s[(i, i)])))
    }

    /// Canonical text form.
    pub fn to_text(&self) -> String {
        let f = &*self.field;
        let spec = f.spec();
        let modulus: Vec<String> = spec.modulus.iter().map(|c| c.to_string()).collect();
        let mut out = format!(
            "field {} {} {}\ninvolution {}\nlambda {}\nparam {}\ndim {}\n",
            spec.p,
            spec.e,
            modulus.join(","),
            self.inv.name(),
            self.param.lambda,
            match self.param.choice {
                ParamChoice::Min => "min",
                ParamChoice::Max => "max",
            },
            self.dim()
        );
        for i in 0..self.dim() {
            let row: Vec<String> = self.s.row(i).iter().map(|&x| f.format(x)).collect();
            out.push_str("row ");
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<QuadraticSpace, QuadError> {
        let perr = |m: &str| QuadError::Parse(m.to_string());
        let mut spec: Option<FieldSpec> = None;
        let mut inv = None;
        let mut lambda = None;
        let mut choice = None;
        let mut dim = None;
        let mut rows: Vec<&str> = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "field" => {
                    let parts: Vec<&str> = rest.split_whitespace().collect();
                    if parts.len() != 3 {
                        return Err(perr("field line needs p, e and modulus"));
                    }
                    let p = parts[0].parse().map_err(|_| perr("bad p"))?;
                    let e = parts[1].parse().map_err(|_| perr("bad e"))?;
                    let modulus: Result<Vec<u32>, _> = parts[2].split(',').map(str::parse).collect();
                    spec = Some(FieldSpec { p, e, modulus: modulus.map_err(|_| perr("bad modulus"))? });
                }
                "involution" => inv = Some(Involution::parse(rest).ok_or_else(|| perr("bad involution"))?),
                "lambda" => lambda = Some(rest.parse::<i8>().map_err(|_| perr("bad lambda"))?),
                "param" => {
                    choice = Some(match rest {
                        "min" => ParamChoice::Min,
                        "max" => ParamChoice::Max,
                        _ => return Err(perr("bad param")),
                    })
                }
                "dim" => dim = Some(rest.parse::<usize>().map_err(|_| perr("bad dim"))?),
                "row" => rows.push(rest),
                _ => return Err(perr(&format!("unknown key {key}"))),
            }
        }
        let spec = spec.ok_or_else(|| perr("missing field"))?;
        let expected = crate::gf::make_field(spec.p, spec.e)?;
        // Only the deterministic modulus is supported, so the stored one must match.
        if expected.spec() != &spec {
            return Err(perr("modulus differs from the deterministic modulus"));
        }
        let field = Arc::new(expected);
        let dim = dim.ok_or_else(|| perr("missing dim"))?;
        if rows.len() != dim {
            return Err(perr("row count differs from dim"));
        }
        let mut grid = Vec::with_capacity(dim);
        for r in rows {
            let entries: Result<Vec<FieldElement>, _> = r.split_whitespace().map(|t| field.parse(t)).collect();
            let entries = entries?;
            if entries.len() != dim {
                return Err(perr("row length differs from dim"));
            }
            grid.push(entries);
        }
        let param = FormParameter::new(lambda.ok_or_else(|| perr("missing lambda"))?, choice.ok_or_else(|| perr("missing param"))?)?;
        QuadraticSpace::new(field, inv.ok_or_else(|| perr("missing involution"))?, Matrix::from_rows(dim, &grid), param)
    }
}

/// Standard hyperbolic Gram matrix `[[0, I], [0, 0]]` of size `2n`.
pub fn hyperbolic_gram(n: usize) -> Matrix {
    Matrix::from_fn(2 * n, 2 * n, |i, j| {
        if i < n && j == i + n {
            FieldElement::ONE
        } else {
            FieldElement::ZERO
        }
    })
}

/// The quadratic space `X^⊥ / X` with the maps relating it to `V`.
#[derive(Clone, Debug)]
pub struct QuotientSpace {
    pub space: QuadraticSpace,
    /// `X^⊥`.
    pub perp: Subspace,
    /// Rows: lifts in `V` of the quotient basis.
    pub section: Matrix,
    /// From coordinates in the echelon basis of `X^⊥` to quotient coordinates.
    pub projection: Matrix,
}

impl QuotientSpace {
    /// Image of a vector of `X^⊥` in the quotient.
    pub fn project(&self, f: &Field, v: &[FieldElement]) -> Result<Vec<FieldElement>, QuadError> {
        let c = linalg::solve(f, &self.perp.basis().transpose(), v).ok_or(QuadError::NotIsotropic)?;
        Ok(self.projection.left_apply(f, &c))
    }

    /// Image of `W ∩ X^⊥` in the quotient.
    pub fn project_subspace(&self, f: &Field, w: &Subspace) -> Result<Subspace, QuadError> {
        let meet = w.intersect(f, &self.perp)?;
        let rows: Result<Vec<_>, _> = meet.basis_vecs().iter().map(|v| self.project(f, v)).collect();
        Ok(Subspace::span(f, self.space.dim(), &rows?))
    }
}
