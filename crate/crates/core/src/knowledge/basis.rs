use std::collections::{BTreeSet, HashMap};

use crate::gfield::{FieldElement, GaloisField};

use super::vector::{payload_axpy, CoefficientVector, PacketIndex, Payload};
use super::KnowledgeSummary;

/// One basis row: `p_pivot` plus a combination of older, unseen packets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub coefficients: CoefficientVector,
    pub payload: Option<Payload>,
}

impl Row {
    /// A row is decoded once it has been reduced to `p_pivot` alone.
    #[inline]
    pub fn is_decoded(&self) -> bool {
        self.coefficients.len() == 1
    }
}

/// Reduced row-echelon knowledge of a single receiver.
///
/// Pivots are the highest index of each row, every row is normalised to a
/// unit coefficient at its pivot, and no row has a nonzero coefficient at
/// another row's pivot. Rows are addressed by pivot.
#[derive(Clone, Debug, Default)]
pub struct KnowledgeBasis {
    rows: Vec<Option<Row>>,
    // Non-pivot column -> pivots of rows that may hold it. Entries can be
    // stale (the row no longer holds the column) and are skipped on use.
    occurrences: HashMap<PacketIndex, Vec<PacketIndex>>,
    rank: usize,
    decoded: usize,
    next_required: PacketIndex,
}

impl KnowledgeBasis {
    pub fn new() -> Self {
        KnowledgeBasis {
            next_required: 1,
            ..Default::default()
        }
    }

    /// Basis whose first `n` packets are already decoded, payloads omitted.
    pub fn with_decoded_prefix(n: PacketIndex, field: &GaloisField) -> Self {
        let mut basis = Self::new();
        for k in 1..=n {
            basis.absorb(&CoefficientVector::unit(k), field);
        }
        basis
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.rank
    }

    #[inline]
    pub fn decoded_count(&self) -> usize {
        self.decoded
    }

    /// Oldest unseen packet.
    #[inline]
    pub fn next_required(&self) -> PacketIndex {
        self.next_required
    }

    /// Length of the delivered prefix. Rows pivoting below the first unseen
    /// index only involve seen columns, so in reduced form they are all
    /// decoded and the seen prefix is the delivered prefix.
    #[inline]
    pub fn delivered(&self) -> PacketIndex {
        self.next_required - 1
    }

    #[inline]
    pub fn row(&self, pivot: PacketIndex) -> Option<&Row> {
        self.rows.get(pivot as usize - 1).and_then(Option::as_ref)
    }

    #[inline]
    pub fn is_seen(&self, n: PacketIndex) -> bool {
        self.row(n).is_some()
    }

    pub fn is_decoded(&self, n: PacketIndex) -> bool {
        self.row(n).is_some_and(Row::is_decoded)
    }

    pub fn rows(&self) -> impl Iterator<Item = (PacketIndex, &Row)> {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().map(|r| (i as PacketIndex + 1, r)))
    }

    /// Decoded payload of packet `n`, if known.
    pub fn decoded_payload(&self, n: PacketIndex) -> Option<&[FieldElement]> {
        self.row(n)
            .filter(|r| r.is_decoded())
            .and_then(|r| r.payload.as_deref())
    }

    /// Eliminates every pivot column of `v`; the result is supported only on
    /// columns this receiver has not seen.
    pub fn reduce_residual(&self, v: &CoefficientVector, field: &GaloisField) -> CoefficientVector {
        let mut out = v.clone();
        for (n, c) in v.iter().rev() {
            if let Some(row) = self.row_opt(n) {
                // Rows hold no other pivot, so `c` is still the coefficient at `n`.
                out.axpy(c, &row.coefficients, field);
            }
        }
        out
    }

    fn reduce_with_payload(
        &self,
        v: &CoefficientVector,
        payload: Option<&[FieldElement]>,
        field: &GaloisField,
    ) -> (CoefficientVector, Option<Payload>) {
        let mut out = v.clone();
        let mut out_payload = payload.map(<[FieldElement]>::to_vec);
        for (n, c) in v.iter().rev() {
            if let Some(row) = self.row_opt(n) {
                out.axpy(c, &row.coefficients, field);
                if let (Some(p), Some(rp)) = (out_payload.as_mut(), row.payload.as_ref()) {
                    payload_axpy(p, c, rp, field);
                }
            }
        }
        (out, out_payload)
    }

    #[inline]
    fn row_opt(&self, n: PacketIndex) -> Option<&Row> {
        self.rows.get(n as usize - 1).and_then(Option::as_ref)
    }

    /// Adds `v` to the knowledge space. Returns the newly seen pivot, or
    /// `None` when `v` was already in the span.
    pub fn absorb(&mut self, v: &CoefficientVector, field: &GaloisField) -> Option<PacketIndex> {
        self.absorb_packet(v, None, field)
    }

    /// As [`absorb`](Self::absorb), applying the same row operations to the
    /// payload.
    pub fn absorb_packet(
        &mut self,
        v: &CoefficientVector,
        payload: Option<&[FieldElement]>,
        field: &GaloisField,
    ) -> Option<PacketIndex> {
        let (mut residual, mut residual_payload) = self.reduce_with_payload(v, payload, field);
        let pivot = residual.pivot()?;
        let lead = residual.coefficient(pivot);
        if lead != FieldElement::ONE {
            let inv = field.inv(lead).expect("pivot coefficient is nonzero");
            residual.scale(inv, field);
            if let Some(p) = residual_payload.as_mut() {
                for s in p.iter_mut() {
                    *s = field.mul(*s, inv);
                }
            }
        }

        // Back-substitute into every row that still references the new pivot.
        if let Some(holders) = self.occurrences.remove(&pivot) {
            for holder in holders {
                let row = self.rows[holder as usize - 1]
                    .as_mut()
                    .expect("occurrence lists only name existing rows");
                let c = row.coefficients.coefficient(pivot);
                if c.is_zero() {
                    continue;
                }
                let was_decoded = row.is_decoded();
                for col in residual.indices().filter(|&col| col != pivot) {
                    if row.coefficients.coefficient(col).is_zero() {
                        self.occurrences.entry(col).or_default().push(holder);
                    }
                }
                row.coefficients.axpy(c, &residual, field);
                if let (Some(rp), Some(p)) = (row.payload.as_mut(), residual_payload.as_ref()) {
                    payload_axpy(rp, c, p, field);
                }
                match (was_decoded, row.is_decoded()) {
                    (false, true) => self.decoded += 1,
                    (true, false) => self.decoded -= 1,
                    _ => {}
                }
            }
        }

        for col in residual.indices().filter(|&col| col != pivot) {
            self.occurrences.entry(col).or_default().push(pivot);
        }
        let row = Row {
            coefficients: residual,
            payload: residual_payload,
        };
        if row.is_decoded() {
            self.decoded += 1;
        }
        let slot = pivot as usize - 1;
        if self.rows.len() <= slot {
            self.rows.resize_with(slot + 1, || None);
        }
        self.rows[slot] = Some(row);
        self.rank += 1;

        let before = self.next_required;
        while self.row_opt(self.next_required).is_some() {
            self.next_required += 1;
        }
        debug_assert!(
            (before..self.next_required).all(|n| self.is_decoded(n)),
            "seen prefix must be decoded"
        );
        Some(pivot)
    }

    /// Seen, decoded, delivered prefix and next required packet, computed
    /// directly from the rows.
    pub fn summarize(&self) -> KnowledgeSummary {
        let seen: BTreeSet<PacketIndex> = self.rows().map(|(n, _)| n).collect();
        let decoded: BTreeSet<PacketIndex> = self
            .rows()
            .filter(|(_, r)| r.is_decoded())
            .map(|(n, _)| n)
            .collect();
        let mut delivered = 0;
        while decoded.contains(&(delivered + 1)) {
            delivered += 1;
        }
        let mut next_required = 1;
        while seen.contains(&next_required) {
            next_required += 1;
        }
        KnowledgeSummary {
            seen,
            decoded,
            delivered,
            next_required,
        }
    }

    /// Row-wise equality of coefficients, ignoring payloads.
    pub fn same_rows(&self, other: &KnowledgeBasis) -> bool {
        self.rank == other.rank
            && self
                .rows()
                .zip(other.rows())
                .all(|((a, ra), (b, rb))| a == b && ra.coefficients == rb.coefficients)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f8() -> GaloisField {
        GaloisField::new(8).unwrap()
    }

    fn vec_of(terms: &[(PacketIndex, u16)], f: &GaloisField) -> CoefficientVector {
        CoefficientVector::from_terms(terms.iter().map(|&(n, c)| (n, FieldElement(c))), f).unwrap()
    }

    /// U_2 of the worked example after t = 1: p1..p5 and p11 decoded.
    fn receiver_two(f: &GaloisField) -> KnowledgeBasis {
        let mut b = KnowledgeBasis::with_decoded_prefix(5, f);
        assert_eq!(b.absorb(&CoefficientVector::unit(11), f), Some(11));
        b
    }

    #[test]
    fn zero_reduces_to_zero() {
        let f = f8();
        let b = receiver_two(&f);
        assert!(b.reduce_residual(&CoefficientVector::new(), &f).is_zero());
        assert!(KnowledgeBasis::new().reduce_residual(&CoefficientVector::new(), &f).is_zero());
    }

    #[test]
    fn worked_example_residual_of_second_transmission() {
        let f = f8();
        let b = receiver_two(&f);
        assert!(b.is_decoded(11));
        let s = vec_of(&[(11, 1), (6, 1)], &f);
        let r = b.reduce_residual(&s, &f);
        assert_eq!(r.indices().collect::<Vec<_>>(), vec![6]);
        // idempotent
        assert_eq!(b.reduce_residual(&r, &f), r);
    }

    #[test]
    fn single_elimination_step() {
        let f = f8();
        let mut b = KnowledgeBasis::new();
        b.absorb(&CoefficientVector::unit(1), &f);
        let r = b.reduce_residual(&vec_of(&[(1, 1), (2, 1)], &f), &f);
        assert_eq!(r, CoefficientVector::unit(2));
    }

    #[test]
    fn worked_example_third_slot_absorb() {
        let f = f8();
        let mut b = receiver_two(&f);
        let s = vec_of(&[(6, 0x17), (3, 0x42)], &f);
        let r = b.reduce_residual(&s, &f);
        assert_eq!(r.indices().collect::<Vec<_>>(), vec![6]);
        assert_eq!(b.absorb(&s, &f), Some(6));
        let summary = b.summarize();
        assert_eq!(summary.seen.iter().copied().collect::<Vec<_>>(), vec![1, 2, 3, 4, 5, 6, 11]);
        assert_eq!(summary.decoded, summary.seen);
        assert_eq!(summary.delivered, 6);
        assert_eq!(summary.next_required, 7);
    }

    #[test]
    fn non_innovative_absorb_is_a_no_op() {
        let f = f8();
        let mut b = receiver_two(&f);
        let before = b.clone();
        assert_eq!(b.absorb(&vec_of(&[(11, 3), (2, 7)], &f), &f), None);
        assert!(b.same_rows(&before));
        assert_eq!(b.rank(), 6);
    }

    #[test]
    fn summary_of_third_receiver_at_start() {
        let f = f8();
        let mut b = KnowledgeBasis::with_decoded_prefix(2, &f);
        b.absorb(&CoefficientVector::unit(6), &f);
        let s = b.summarize();
        assert_eq!(s.seen.iter().copied().collect::<Vec<_>>(), vec![1, 2, 6]);
        assert_eq!(s.decoded, s.seen);
        assert_eq!(s.delivered, 2);
        assert_eq!(s.next_required, 3);

        let empty = KnowledgeBasis::new().summarize();
        assert!(empty.seen.is_empty());
        assert_eq!(empty.delivered, 0);
        assert_eq!(empty.next_required, 1);
    }

    #[test]
    fn full_elimination_decodes_prefix() {
        let f = f8();
        let mut b = KnowledgeBasis::new();
        b.absorb(&vec_of(&[(1, 1)], &f), &f);
        b.absorb(&vec_of(&[(2, 1), (1, 1)], &f), &f);
        b.absorb(&vec_of(&[(3, 1)], &f), &f);
        let s = b.summarize();
        assert_eq!(s.delivered, 3);
        assert_eq!(s.next_required, 4);
        assert_eq!(b.decoded_count(), 3);
    }

    #[test]
    fn seen_but_undecoded_row_is_back_substituted() {
        let f = f8();
        let mut b = KnowledgeBasis::new();
        // p3 + p1 seen, p1 unseen
        assert_eq!(b.absorb(&vec_of(&[(3, 1), (1, 1)], &f), &f), Some(3));
        assert!(b.is_seen(3) && !b.is_decoded(3));
        assert_eq!(b.next_required(), 1);
        assert_eq!(b.delivered(), 0);
        assert_eq!(b.absorb(&CoefficientVector::unit(1), &f), Some(1));
        assert!(b.is_decoded(3));
        assert_eq!(b.decoded_count(), 2);
        assert_eq!(b.next_required(), 2);
    }

    #[test]
    fn payloads_follow_row_operations() {
        let f = f8();
        let src: Vec<Payload> = (1..=3u16)
            .map(|k| (0..4).map(|j| FieldElement((k * 37 + j * 11) & 0xff)).collect())
            .collect();
        let packets = [
            vec_of(&[(3, 5), (2, 9), (1, 1)], &f),
            vec_of(&[(2, 7), (1, 3)], &f),
            vec_of(&[(1, 200)], &f),
        ];
        let mut b = KnowledgeBasis::new();
        for v in &packets {
            let payload = v.combine_payloads(4, &f, |n| &src[n as usize - 1]);
            b.absorb_packet(v, Some(&payload), &f);
        }
        assert_eq!(b.delivered(), 3);
        for n in 1..=3 {
            assert_eq!(b.decoded_payload(n).unwrap(), src[n as usize - 1].as_slice());
        }
    }
}
