use std::fmt;

use crate::gfield::{FieldElement, GaloisField};

use super::KnowledgeError;

/// 1-based position of a source packet in the transmission queue.
pub type PacketIndex = u32;

/// Payload carried alongside a coefficient vector, one field symbol per slot.
pub type Payload = Vec<FieldElement>;

/// Sparse linear combination of source packets.
///
/// Entries are kept sorted by packet index with no zero coefficients, so the
/// pivot (highest index) is always the last entry.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CoefficientVector {
    entries: Vec<(PacketIndex, FieldElement)>,
}

impl CoefficientVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// The unit vector `p_n`.
    pub fn unit(n: PacketIndex) -> Self {
        assert!(n > 0, "packet indices are 1-based");
        CoefficientVector {
            entries: vec![(n, FieldElement::ONE)],
        }
    }

    /// Builds a vector from arbitrary `(index, coefficient)` pairs. Repeated
    /// indices are summed and zero coefficients dropped.
    pub fn from_terms<I>(terms: I, field: &GaloisField) -> Result<Self, KnowledgeError>
    where
        I: IntoIterator<Item = (PacketIndex, FieldElement)>,
    {
        let mut v = CoefficientVector::new();
        for (n, c) in terms {
            if n == 0 {
                return Err(KnowledgeError::ZeroIndex);
            }
            if c.0 as u32 >= field.order() {
                return Err(KnowledgeError::Coefficient(c));
            }
            v.add_term(n, c);
        }
        Ok(v)
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Highest index with a nonzero coefficient.
    #[inline]
    pub fn pivot(&self) -> Option<PacketIndex> {
        self.entries.last().map(|&(n, _)| n)
    }

    pub fn coefficient(&self, n: PacketIndex) -> FieldElement {
        match self.entries.binary_search_by_key(&n, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => FieldElement::ZERO,
        }
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (PacketIndex, FieldElement)> + '_ {
        self.entries.iter().copied()
    }

    pub fn indices(&self) -> impl DoubleEndedIterator<Item = PacketIndex> + '_ {
        self.entries.iter().map(|&(n, _)| n)
    }

    /// Coefficient at `n` when `n` is the only index in the support.
    pub fn only_at(&self, n: PacketIndex) -> Option<FieldElement> {
        match self.entries.as_slice() {
            [(i, c)] if *i == n => Some(*c),
            _ => None,
        }
    }

    /// `self += c * p_n`
    pub fn add_term(&mut self, n: PacketIndex, c: FieldElement) {
        if c.is_zero() {
            return;
        }
        match self.entries.binary_search_by_key(&n, |&(i, _)| i) {
            Ok(pos) => {
                let sum = FieldElement(self.entries[pos].1 .0 ^ c.0);
                if sum.is_zero() {
                    self.entries.remove(pos);
                } else {
                    self.entries[pos].1 = sum;
                }
            }
            Err(pos) => self.entries.insert(pos, (n, c)),
        }
    }

    pub fn scale(&mut self, c: FieldElement, field: &GaloisField) {
        if c.is_zero() {
            self.entries.clear();
            return;
        }
        for entry in &mut self.entries {
            entry.1 = field.mul(entry.1, c);
        }
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: FieldElement, other: &CoefficientVector, field: &GaloisField) {
        if c.is_zero() || other.is_zero() {
            return;
        }
        let mut merged = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            let (na, ca) = a[i];
            let (nb, cb) = b[j];
            if na < nb {
                merged.push((na, ca));
                i += 1;
            } else if nb < na {
                merged.push((nb, field.mul(c, cb)));
                j += 1;
            } else {
                let sum = FieldElement(ca.0 ^ field.mul(c, cb).0);
                if !sum.is_zero() {
                    merged.push((na, sum));
                }
                i += 1;
                j += 1;
            }
        }
        merged.extend_from_slice(&a[i..]);
        merged.extend(b[j..].iter().map(|&(n, cb)| (n, field.mul(c, cb))));
        self.entries = merged;
    }

    /// Evaluates the combination over per-packet payloads.
    pub fn combine_payloads<'a, F>(&self, payload_len: usize, field: &GaloisField, mut source: F) -> Payload
    where
        F: FnMut(PacketIndex) -> &'a [FieldElement],
    {
        let mut out = vec![FieldElement::ZERO; payload_len];
        for (n, c) in self.iter() {
            payload_axpy(&mut out, c, source(n), field);
        }
        out
    }
}

impl fmt::Display for CoefficientVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (n, c)) in self.entries.iter().rev().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if *c == FieldElement::ONE {
                write!(f, "p{n}")?;
            } else {
                write!(f, "{}·p{n}", c.0)?;
            }
        }
        Ok(())
    }
}

/// `dst += c * src`, symbol by symbol.
pub fn payload_axpy(dst: &mut [FieldElement], c: FieldElement, src: &[FieldElement], field: &GaloisField) {
    if c.is_zero() {
        return;
    }
    for (d, s) in dst.iter_mut().zip(src) {
        *d = FieldElement(d.0 ^ field.mul(c, *s).0);
    }
}
