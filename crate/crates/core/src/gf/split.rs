//! The split ring `k = k0 ⊕ k0` with the swap involution.

use super::{Field, FieldElement};

/// An element `(left, right)` of `k0 ⊕ k0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SplitRingElement {
    pub left: FieldElement,
    pub right: FieldElement,
}

impl SplitRingElement {
    pub const ZERO: SplitRingElement =
        SplitRingElement { left: FieldElement::ZERO, right: FieldElement::ZERO };
    pub const ONE: SplitRingElement =
        SplitRingElement { left: FieldElement::ONE, right: FieldElement::ONE };

    pub fn new(left: FieldElement, right: FieldElement) -> Self {
        SplitRingElement { left, right }
    }

    /// The swap involution `(x, y) ↦ (y, x)`.
    pub fn swap(self) -> Self {
        SplitRingElement { left: self.right, right: self.left }
    }
}

/// `k0 ⊕ k0` over a base field `k0`, with componentwise operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitRing {
    k0: Field,
}

impl SplitRing {
    pub fn new(k0: Field) -> Self {
        SplitRing { k0 }
    }

    pub fn base(&self) -> &Field {
        &self.k0
    }

    /// Number of elements, `q0^2`.
    pub fn order(&self) -> u64 {
        (self.k0.q() as u64).pow(2)
    }

    /// Diagonal embedding of the fixed ring `k0`.
    pub fn diag(&self, a: FieldElement) -> SplitRingElement {
        SplitRingElement::new(a, a)
    }

    /// The idempotent `α = (1, 0)`; `α + σ(α) = 1` and `α σ(α) = 0`.
    pub fn alpha(&self) -> SplitRingElement {
        SplitRingElement::new(FieldElement::ONE, FieldElement::ZERO)
    }

    pub fn add(&self, a: SplitRingElement, b: SplitRingElement) -> SplitRingElement {
        SplitRingElement::new(self.k0.add(a.left, b.left), self.k0.add(a.right, b.right))
    }

    pub fn neg(&self, a: SplitRingElement) -> SplitRingElement {
        SplitRingElement::new(self.k0.neg(a.left), self.k0.neg(a.right))
    }

    pub fn sub(&self, a: SplitRingElement, b: SplitRingElement) -> SplitRingElement {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: SplitRingElement, b: SplitRingElement) -> SplitRingElement {
        SplitRingElement::new(self.k0.mul(a.left, b.left), self.k0.mul(a.right, b.right))
    }

    pub fn is_unit(&self, a: SplitRingElement) -> bool {
        !a.left.is_zero() && !a.right.is_zero()
    }

    /// Inverse of a unit; `None` for zero divisors.
    pub fn inv(&self, a: SplitRingElement) -> Option<SplitRingElement> {
        self.is_unit(a)
            .then(|| SplitRingElement::new(self.k0.inv(a.left), self.k0.inv(a.right)))
    }

    pub fn elements(&self) -> impl Iterator<Item = SplitRingElement> + '_ {
        self.k0
            .elements()
            .flat_map(move |l| self.k0.elements().map(move |r| SplitRingElement::new(l, r)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::make_field;

    #[test]
    fn idempotents() {
        let r = SplitRing::new(make_field(3, 1).unwrap());
        let a = r.alpha();
        assert_eq!(r.mul(a, a.swap()), SplitRingElement::ZERO);
        assert_eq!(r.add(a, a.swap()), SplitRingElement::ONE);
        assert_eq!(r.mul(a, a), a);
    }

    #[test]
    fn swap_is_an_involutive_ring_automorphism() {
        let r = SplitRing::new(make_field(2, 2).unwrap());
        let all: Vec<_> = r.elements().collect();
        assert_eq!(all.len(), 16);
        for &x in &all {
            assert_eq!(x.swap().swap(), x);
            for &y in &all {
                assert_eq!(r.mul(x, y).swap(), r.mul(x.swap(), y.swap()));
                assert_eq!(r.add(x, y).swap(), r.add(x.swap(), y.swap()));
            }
            match r.inv(x) {
                Some(i) => assert_eq!(r.mul(x, i), SplitRingElement::ONE),
                None => assert!(x.left.is_zero() || x.right.is_zero()),
            }
        }
        // Fixed ring of the swap is the diagonal copy of k0.
        let fixed = all.iter().filter(|x| x.swap() == **x).count();
        assert_eq!(fixed, 4);
    }
}
