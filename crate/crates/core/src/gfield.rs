//! Arithmetic over binary extension fields GF(2^m), 1 <= m <= 16.
//!
//! Elements are stored as their polynomial-basis bit patterns. Fields with
//! m <= 8 multiply through log/antilog tables; larger fields use a carry-less
//! multiply followed by reduction.

use std::fmt;

use thiserror::Error;

/// Largest supported extension degree.
pub const MAX_EXPONENT: u8 = 16;

/// Default degree used by scenarios.
pub const DEFAULT_EXPONENT: u8 = 8;

/// Irreducible reduction polynomials, indexed by degree. Entry 8 is
/// x^8 + x^4 + x^3 + x + 1.
const DEFAULT_POLYNOMIALS: [u32; 17] = [
    0, 0x3, 0x7, 0xB, 0x13, 0x25, 0x43, 0x83, 0x11B, 0x211, 0x409, 0x805, 0x1053, 0x201B, 0x4443,
    0x8003, 0x1100B,
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("field exponent {0} outside 1..=16")]
    Exponent(u8),
    #[error("polynomial {poly:#x} is not an irreducible polynomial of degree {exponent}")]
    Reducible { poly: u32, exponent: u8 },
    #[error("value {value} is not an element of GF(2^{exponent})")]
    OutOfRange { value: u32, exponent: u8 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
}

/// A symbol of GF(2^m), encoded as the bit pattern of its polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FieldElement(pub u16);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn value(self) -> u16 {
        self.0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

#[derive(Clone)]
struct Tables {
    log: Vec<u16>,
    // Doubled so that log[a] + log[b] indexes without a modulo.
    exp: Vec<u16>,
}

/// Description and arithmetic of one GF(2^m).
#[derive(Clone)]
pub struct GaloisField {
    exponent: u8,
    polynomial: u32,
    tables: Option<Tables>,
}

impl fmt::Debug for GaloisField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaloisField")
            .field("exponent", &self.exponent)
            .field("polynomial", &format_args!("{:#x}", self.polynomial))
            .finish()
    }
}

impl PartialEq for GaloisField {
    fn eq(&self, other: &Self) -> bool {
        self.exponent == other.exponent && self.polynomial == other.polynomial
    }
}

impl Eq for GaloisField {}

impl GaloisField {
    /// Field of degree `exponent` with the built-in reduction polynomial.
    pub fn new(exponent: u8) -> Result<Self, FieldError> {
        if exponent == 0 || exponent > MAX_EXPONENT {
            return Err(FieldError::Exponent(exponent));
        }
        Self::with_polynomial(exponent, DEFAULT_POLYNOMIALS[exponent as usize])
    }

    pub fn with_polynomial(exponent: u8, polynomial: u32) -> Result<Self, FieldError> {
        if exponent == 0 || exponent > MAX_EXPONENT {
            return Err(FieldError::Exponent(exponent));
        }
        if degree(polynomial) != Some(exponent as u32) || !is_irreducible(polynomial) {
            return Err(FieldError::Reducible {
                poly: polynomial,
                exponent,
            });
        }
        let mut field = GaloisField {
            exponent,
            polynomial,
            tables: None,
        };
        if exponent <= 8 {
            field.tables = Some(field.build_tables());
        }
        Ok(field)
    }

    fn build_tables(&self) -> Tables {
        let order = self.order() as usize;
        let group = order - 1;
        // Irreducible but not necessarily primitive: search for a generator.
        let generator = (2..order as u16)
            .find(|&g| self.multiplicative_order(g) == group)
            .unwrap_or(1);
        let mut log = vec![0u16; order];
        let mut exp = vec![0u16; 2 * group];
        let mut x: u16 = 1;
        for i in 0..group {
            exp[i] = x;
            exp[i + group] = x;
            log[x as usize] = i as u16;
            x = clmul_reduce(x, generator, self.polynomial, self.exponent);
        }
        Tables { log, exp }
    }

    fn multiplicative_order(&self, g: u16) -> usize {
        let mut x = g;
        let mut n = 1;
        while x != 1 {
            x = clmul_reduce(x, g, self.polynomial, self.exponent);
            n += 1;
            if n > self.order() as usize {
                return 0;
            }
        }
        n
    }

    pub fn exponent(&self) -> u8 {
        self.exponent
    }

    pub fn polynomial(&self) -> u32 {
        self.polynomial
    }

    /// Number of elements, 2^m.
    pub fn order(&self) -> u32 {
        1u32 << self.exponent
    }

    pub fn element(&self, value: u32) -> Result<FieldElement, FieldError> {
        if value >= self.order() {
            return Err(FieldError::OutOfRange {
                value,
                exponent: self.exponent,
            });
        }
        Ok(FieldElement(value as u16))
    }

    /// All elements in increasing integer order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.order()).map(|v| FieldElement(v as u16))
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(a.0 ^ b.0)
    }

    /// Identical to `add` in characteristic 2.
    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(a.0 ^ b.0)
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 == 0 || b.0 == 0 {
            return FieldElement::ZERO;
        }
        match &self.tables {
            Some(t) => {
                let i = t.log[a.0 as usize] as usize + t.log[b.0 as usize] as usize;
                FieldElement(t.exp[i])
            }
            None => FieldElement(clmul_reduce(a.0, b.0, self.polynomial, self.exponent)),
        }
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if a.0 == 0 {
            return Err(FieldError::ZeroInverse);
        }
        match &self.tables {
            Some(t) => {
                let group = self.order() as usize - 1;
                let l = t.log[a.0 as usize] as usize;
                Ok(FieldElement(t.exp[(group - l) % group]))
            }
            // a^(2^m - 2)
            None => Ok(self.pow(a, self.order() as u64 - 2)),
        }
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: FieldElement, mut e: u64) -> FieldElement {
        let mut base = a;
        let mut acc = FieldElement::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }
}

fn degree(poly: u32) -> Option<u32> {
    if poly == 0 {
        None
    } else {
        Some(31 - poly.leading_zeros())
    }
}

/// Carry-less product of `a` and `b` reduced modulo `poly` (degree `m`).
pub(crate) fn clmul_reduce(a: u16, b: u16, poly: u32, m: u8) -> u16 {
    let mut product: u32 = 0;
    let mut a = a as u32;
    let mut b = b as u32;
    while b != 0 {
        if b & 1 == 1 {
            product ^= a;
        }
        a <<= 1;
        b >>= 1;
    }
    for bit in (m as u32..32).rev() {
        if product & (1 << bit) != 0 {
            product ^= poly << (bit - m as u32);
        }
    }
    product as u16
}

fn poly_mod(mut a: u32, b: u32) -> u32 {
    let db = degree(b).expect("nonzero divisor");
    while let Some(da) = degree(a) {
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

/// Trial division by every polynomial of degree 1..=deg/2.
pub fn is_irreducible(poly: u32) -> bool {
    let Some(d) = degree(poly) else {
        return false;
    };
    if d == 0 {
        return false;
    }
    for divisor in 2u32..(1 << (d / 2 + 1)) {
        if degree(divisor).is_some_and(|dd| dd >= 1 && dd <= d / 2) && poly_mod(poly, divisor) == 0 {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(m: u8) -> GaloisField {
        GaloisField::new(m).unwrap()
    }

    #[test]
    fn add_examples() {
        let f2 = gf(1);
        assert_eq!(f2.add(FieldElement(1), FieldElement(1)), FieldElement(0));
        let f16 = gf(4);
        assert_eq!(f16.add(FieldElement(0x9), FieldElement(0x5)), FieldElement(0xC));
        for a in f16.elements() {
            assert_eq!(f16.add(a, FieldElement::ZERO), a);
            assert_eq!(f16.add(a, a), FieldElement::ZERO);
        }
    }

    #[test]
    fn mul_and_inv_examples() {
        let f = gf(8);
        assert_eq!(f.polynomial(), 0x11B);
        assert_eq!(f.mul(FieldElement(0x53), FieldElement(0xCA)), FieldElement(0x01));
        assert_eq!(f.inv(FieldElement(0x53)).unwrap(), FieldElement(0xCA));
        assert_eq!(f.inv(FieldElement(1)).unwrap(), FieldElement(1));
        assert_eq!(f.inv(FieldElement(0)), Err(FieldError::ZeroInverse));
    }

    #[test]
    fn default_polynomials_are_irreducible() {
        for m in 1..=MAX_EXPONENT {
            let p = DEFAULT_POLYNOMIALS[m as usize];
            assert!(is_irreducible(p), "degree {m}: {p:#x}");
            assert_eq!(degree(p), Some(m as u32));
        }
        assert!(!is_irreducible(0b101)); // (x+1)^2
        assert!(GaloisField::with_polynomial(8, 0x11D).is_ok());
        assert!(matches!(
            GaloisField::with_polynomial(4, 0b10001),
            Err(FieldError::Reducible { .. })
        ));
        assert_eq!(GaloisField::new(0), Err(FieldError::Exponent(0)));
        assert_eq!(GaloisField::new(17), Err(FieldError::Exponent(17)));
    }

    #[test]
    fn tables_agree_with_carry_less_multiply() {
        for m in 1..=8u8 {
            let f = gf(m);
            for a in f.elements() {
                for b in f.elements() {
                    let expected = clmul_reduce(a.0, b.0, f.polynomial(), m);
                    assert_eq!(f.mul(a, b).0, expected, "m={m} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn exhaustive_pair_axioms_small_fields() {
        for m in 1..=8u8 {
            let f = gf(m);
            let order = f.order() as u64;
            for a in f.elements() {
                assert_eq!(f.mul(a, FieldElement::ONE), a);
                assert_eq!(f.mul(a, FieldElement::ZERO), FieldElement::ZERO);
                if !a.is_zero() {
                    let ia = f.inv(a).unwrap();
                    assert_eq!(f.mul(a, ia), FieldElement::ONE);
                    assert_eq!(f.inv(ia).unwrap(), a);
                    assert_eq!(f.pow(a, order - 1), FieldElement::ONE);
                }
                for b in f.elements() {
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    // distributivity against a fixed third element
                    let c = FieldElement(((a.0 as u32 * 7 + b.0 as u32 * 3 + 1) % f.order()) as u16);
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                }
            }
        }
    }

    #[test]
    fn large_field_inverse_and_order() {
        for m in [9u8, 12, 16] {
            let f = gf(m);
            let order = f.order() as u64;
            let mut x: u32 = 12345;
            for _ in 0..2000 {
                x = x.wrapping_mul(1_103_515_245).wrapping_add(12345);
                let a = FieldElement((x >> 8) as u16 & (f.order() - 1) as u16);
                if a.is_zero() {
                    continue;
                }
                assert_eq!(f.mul(a, f.inv(a).unwrap()), FieldElement::ONE);
                assert_eq!(f.pow(a, order - 1), FieldElement::ONE);
            }
        }
    }

    #[test]
    fn element_range_checked() {
        let f = gf(2);
        assert!(f.element(3).is_ok());
        assert!(matches!(f.element(4), Err(FieldError::OutOfRange { .. })));
    }
}
