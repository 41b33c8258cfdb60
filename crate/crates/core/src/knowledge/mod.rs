//! Receiver knowledge spaces.
//!
//! A receiver has *seen* packet `n` when it can compute `p_n` plus a
//! combination of strictly older packets, which in the basis means a row with
//! pivot `n`. It has *decoded* `n` when that row is `p_n` alone, and packet
//! `n` is *delivered* once `p_1..=p_n` are all decoded. The next required
//! packet is the oldest unseen one.

mod basis;
mod vector;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::gfield::FieldElement;

pub use basis::{KnowledgeBasis, Row};
pub use vector::{payload_axpy, CoefficientVector, PacketIndex, Payload};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KnowledgeError {
    #[error("packet indices are 1-based")]
    ZeroIndex,
    #[error("coefficient {0} is not a field element")]
    Coefficient(FieldElement),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeSummary {
    pub seen: BTreeSet<PacketIndex>,
    pub decoded: BTreeSet<PacketIndex>,
    /// Largest `d` with `1..=d` all decoded.
    pub delivered: PacketIndex,
    pub next_required: PacketIndex,
}
