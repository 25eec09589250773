//! Arithmetic in the prime field of order `2^61 - 1`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// The Mersenne prime `2^61 - 1`.
pub const MODULUS: u64 = (1 << 61) - 1;

/// Number of bits a field element can carry losslessly.
pub const CAPACITY_BITS: u32 = 61;

/// An element of `GF(2^61 - 1)`, always kept in canonical form `[0, MODULUS)`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement(u64);

impl FieldElement {
    pub const ZERO: Self = Self(0);
    pub const ONE: Self = Self(1);

    /// Reduces an arbitrary `u64` into the field.
    pub const fn new(value: u64) -> Self {
        let folded = (value & MODULUS) + (value >> 61);
        Self(if folded >= MODULUS { folded - MODULUS } else { folded })
    }

    pub const fn value(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn pow(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = Self::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc *= base;
            }
            base *= base;
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn inverse(self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.pow(MODULUS - 2))
        }
    }
}

/// Inverts every element of `values` in place with a single exponentiation.
///
/// Panics if any element is zero.
pub fn batch_inverse(values: &mut [FieldElement]) {
    if values.is_empty() {
        return;
    }
    let mut prefix = Vec::with_capacity(values.len());
    let mut acc = FieldElement::ONE;
    for v in values.iter() {
        prefix.push(acc);
        acc *= *v;
    }
    let mut inv = acc.inverse().expect("batch_inverse on a zero element");
    for i in (0..values.len()).rev() {
        let original = values[i];
        values[i] = inv * prefix[i];
        inv *= original;
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F({})", self.0)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for FieldElement {
    fn from(value: u64) -> Self {
        Self::new(value)
    }
}

impl Add for FieldElement {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let s = self.0 + rhs.0;
        Self(if s >= MODULUS { s - MODULUS } else { s })
    }
}

impl Sub for FieldElement {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        if self.0 >= rhs.0 {
            Self(self.0 - rhs.0)
        } else {
            Self(self.0 + MODULUS - rhs.0)
        }
    }
}

impl Neg for FieldElement {
    type Output = Self;
    fn neg(self) -> Self {
        Self::ZERO - self
    }
}

impl Mul for FieldElement {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let wide = self.0 as u128 * rhs.0 as u128;
        let lo = (wide as u64) & MODULUS;
        let hi = (wide >> 61) as u64;
        let s = lo + hi;
        Self(if s >= MODULUS { s - MODULUS } else { s })
    }
}

impl AddAssign for FieldElement {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for FieldElement {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl MulAssign for FieldElement {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reduction_is_canonical() {
        assert_eq!(FieldElement::new(MODULUS), FieldElement::ZERO);
        assert_eq!(FieldElement::new(MODULUS + 5).value(), 5);
        assert_eq!(FieldElement::new(u64::MAX).value(), u64::MAX % MODULUS);
    }

    #[test]
    fn zero_has_no_inverse() {
        assert!(FieldElement::ZERO.inverse().is_none());
    }

    #[test]
    fn batch_inverse_matches_single() {
        let mut xs: Vec<_> = (1..20u64).map(|v| FieldElement::new(v * 7919)).collect();
        let expected: Vec<_> = xs.iter().map(|x| x.inverse().unwrap()).collect();
        batch_inverse(&mut xs);
        assert_eq!(xs, expected);
    }

    proptest! {
        #[test]
        fn mul_matches_u128_reference(a in 0..MODULUS, b in 0..MODULUS) {
            let expected = ((a as u128 * b as u128) % MODULUS as u128) as u64;
            prop_assert_eq!((FieldElement::new(a) * FieldElement::new(b)).value(), expected);
        }

        #[test]
        fn nonzero_elements_invert(a in 1..MODULUS) {
            let x = FieldElement::new(a);
            prop_assert_eq!(x * x.inverse().unwrap(), FieldElement::ONE);
        }

        #[test]
        fn add_sub_roundtrip(a in 0..MODULUS, b in 0..MODULUS) {
            let (x, y) = (FieldElement::new(a), FieldElement::new(b));
            prop_assert_eq!(x + y - y, x);
            prop_assert_eq!(x + (-x), FieldElement::ZERO);
        }
    }
}
