//! The sender: Bernoulli arrivals into an unbounded transmission queue,
//! feedback-maintained mirrors of every receiver, and the per-slot encoder.
//!
//! Each slot the encoder groups receivers by next required packet, walks
//! the groups from the newest requested packet down, and adds a packet to
//! the outgoing combination only when some member of its group would
//! otherwise receive nothing innovative. The coefficient is the smallest
//! field element (by encoding) outside the group's veto list.

use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::gfield::{FieldElement, GaloisField};
use crate::knowledge::{CoefficientVector, KnowledgeBasis, PacketIndex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoderError {
    #[error("arrival probability {0} outside [0, 1]")]
    ArrivalProbability(f64),
    #[error("field of order {order} cannot serve {receivers} receivers")]
    FieldTooSmall { order: u32, receivers: usize },
    #[error("unknown receiver {0}")]
    UnknownReceiver(usize),
    #[error("every coefficient is vetoed for packet {0}")]
    CoefficientsExhausted(PacketIndex),
}

/// Receivers sharing one next required packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub packet: PacketIndex,
    pub receivers: Vec<usize>,
}

/// Groups ordered by strictly decreasing packet index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroupTable {
    pub groups: Vec<Group>,
}

impl GroupTable {
    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn as_pairs(&self) -> Vec<(PacketIndex, Vec<usize>)> {
        self.groups
            .iter()
            .map(|g| (g.packet, g.receivers.clone()))
            .collect()
    }
}

/// How a receiver's residual relates to its group's packet `p_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualClass {
    Zero,
    ScalarAtJ(FieldElement),
    Other,
}

pub fn classify_residual(residual: &CoefficientVector, j: PacketIndex) -> ResidualClass {
    if residual.is_zero() {
        ResidualClass::Zero
    } else if let Some(alpha) = residual.only_at(j) {
        ResidualClass::ScalarAtJ(alpha)
    } else {
        ResidualClass::Other
    }
}

/// What the sender emitted in one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransmissionRecord {
    pub slot: u64,
    /// Empty on idle slots.
    pub coefficients: CoefficientVector,
    /// Receivers whose next required packet is the newest one encoded.
    pub leaders: Vec<usize>,
    /// Whether reception would make the receiver's next required packet seen.
    pub differential: Vec<bool>,
    /// Receivers that appeared in the group table.
    pub targeted: Vec<bool>,
}

impl TransmissionRecord {
    pub fn is_idle(&self) -> bool {
        self.coefficients.is_zero()
    }
}

#[derive(Debug, Clone)]
pub struct SenderState {
    field: Arc<GaloisField>,
    arrivals: PacketIndex,
    mirrors: Vec<KnowledgeBasis>,
}

impl SenderState {
    pub fn new(field: Arc<GaloisField>, receivers: usize) -> Result<Self, CoderError> {
        Self::from_mirrors(field, 0, vec![KnowledgeBasis::new(); receivers])
    }

    /// Sender resumed from a known state: `arrivals` packets already queued
    /// and one mirror per receiver.
    pub fn from_mirrors(
        field: Arc<GaloisField>,
        arrivals: PacketIndex,
        mirrors: Vec<KnowledgeBasis>,
    ) -> Result<Self, CoderError> {
        if (field.order() as usize) < mirrors.len() {
            return Err(CoderError::FieldTooSmall {
                order: field.order(),
                receivers: mirrors.len(),
            });
        }
        Ok(SenderState {
            field,
            arrivals,
            mirrors,
        })
    }

    pub fn field(&self) -> &GaloisField {
        &self.field
    }

    /// Highest packet index that has entered the queue, A(t).
    pub fn arrivals(&self) -> PacketIndex {
        self.arrivals
    }

    pub fn receivers(&self) -> usize {
        self.mirrors.len()
    }

    pub fn mirror(&self, receiver: usize) -> Option<&KnowledgeBasis> {
        self.mirrors.get(receiver)
    }

    /// Draws one Bernoulli(`lambda`) arrival; on success `p_{A+1}` joins the
    /// queue.
    pub fn poll_arrival<R: Rng + ?Sized>(&mut self, rng: &mut R, lambda: f64) -> Result<bool, CoderError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(CoderError::ArrivalProbability(lambda));
        }
        let arrived = rng.gen_bool(lambda);
        if arrived {
            self.arrivals += 1;
        }
        Ok(arrived)
    }

    pub fn push_arrival(&mut self) -> PacketIndex {
        self.arrivals += 1;
        self.arrivals
    }

    /// Receivers keyed by next required packet, newest first. Receivers
    /// waiting on a packet that has not arrived are left out.
    pub fn form_groups(&self) -> GroupTable {
        let mut keyed: Vec<(PacketIndex, usize)> = self
            .mirrors
            .iter()
            .enumerate()
            .map(|(i, m)| (m.next_required(), i))
            .filter(|&(n, _)| n <= self.arrivals)
            .collect();
        keyed.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut groups: Vec<Group> = Vec::new();
        for (n, i) in keyed {
            match groups.last_mut() {
                Some(g) if g.packet == n => g.receivers.push(i),
                _ => groups.push(Group {
                    packet: n,
                    receivers: vec![i],
                }),
            }
        }
        GroupTable { groups }
    }

    pub fn encode_slot(&self, slot: u64) -> Result<TransmissionRecord, CoderError> {
        let field = &*self.field;
        let table = self.form_groups();
        let m = self.mirrors.len();
        let mut s = CoefficientVector::new();
        let mut differential = vec![false; m];
        let mut targeted = vec![false; m];

        for group in &table.groups {
            let j = group.packet;
            let mut veto: Vec<FieldElement> = Vec::with_capacity(group.receivers.len());
            let mut residuals = Vec::with_capacity(group.receivers.len());
            for &i in &group.receivers {
                targeted[i] = true;
                let r = self.mirrors[i].reduce_residual(&s, field);
                match classify_residual(&r, j) {
                    ResidualClass::Zero => veto.push(FieldElement::ZERO),
                    ResidualClass::ScalarAtJ(alpha) => veto.push(alpha),
                    ResidualClass::Other => {}
                }
                residuals.push((i, r));
            }
            let added = if veto.contains(&FieldElement::ZERO) {
                let a = field
                    .elements()
                    .find(|e| !veto.contains(e))
                    .ok_or(CoderError::CoefficientsExhausted(j))?;
                s.add_term(j, a);
                Some(a)
            } else {
                None
            };
            // Packets added for later (older) groups are decoded by every
            // member here, so these residuals are already final.
            for (i, mut r) in residuals {
                if let Some(a) = added {
                    r.add_term(j, a);
                }
                debug_assert!(!r.is_zero(), "slot {slot}: transmission not innovative for receiver {i}");
                differential[i] = r.pivot() == Some(j);
            }
        }

        let leaders = table
            .groups
            .first()
            .map(|g| g.receivers.clone())
            .unwrap_or_default();
        Ok(TransmissionRecord {
            slot,
            coefficients: s,
            leaders,
            differential,
            targeted,
        })
    }

    /// Records that `receiver` acknowledged `v`.
    pub fn register_feedback(
        &mut self,
        receiver: usize,
        v: &CoefficientVector,
    ) -> Result<Option<PacketIndex>, CoderError> {
        let mirror = self
            .mirrors
            .get_mut(receiver)
            .ok_or(CoderError::UnknownReceiver(receiver))?;
        Ok(mirror.absorb(v, &self.field))
    }
}
