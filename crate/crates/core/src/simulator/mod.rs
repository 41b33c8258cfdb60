//! Time-slotted broadcast engine.
//!
//! Each slot: poll an arrival, encode, draw an independent reception per
//! receiver, absorb at the receivers that got the packet, feed the
//! acknowledgements back to the sender, then update the statistics.

mod config;
mod report;

use std::ops::Range;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::coder::{CoderError, SenderState, TransmissionRecord};
use crate::gfield::{FieldElement, FieldError, GaloisField};
use crate::knowledge::{KnowledgeBasis, PacketIndex, Payload};

pub use config::{ConfigError, ScenarioConfig, DEFAULT_PAYLOAD_LEN, DEFAULT_SLOTS, DEFAULT_WARMUP};
pub use report::{extract_hybrid_inputs, mean_and_stderr, ExtractError, HybridInputs, RunReport, GAP_CAP};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Coder(#[from] CoderError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("scripted slot needs {expected} reception flags, got {got}")]
    ReceptionCount { expected: usize, got: usize },
}

const UNSET: u64 = u64::MAX;

/// A receiver's true knowledge plus its request/delivery timeline.
#[derive(Debug, Clone)]
pub struct ReceiverState {
    basis: KnowledgeBasis,
    /// Slot at whose end packet `n` first became the next required packet.
    first_request: Vec<u64>,
    /// Slot in which packet `n` was delivered.
    delivery: Vec<u64>,
    received: u64,
}

impl ReceiverState {
    fn new(basis: KnowledgeBasis) -> Self {
        let mut state = ReceiverState {
            basis,
            first_request: Vec::new(),
            delivery: Vec::new(),
            received: 0,
        };
        // Knowledge handed in at construction counts as received.
        state.received = state.basis.rank() as u64;
        let n = state.basis.next_required();
        set_at(&mut state.first_request, n, 0);
        state
    }

    pub fn basis(&self) -> &KnowledgeBasis {
        &self.basis
    }

    pub fn first_request(&self, n: PacketIndex) -> Option<u64> {
        get_at(&self.first_request, n)
    }

    pub fn delivery_slot(&self, n: PacketIndex) -> Option<u64> {
        get_at(&self.delivery, n)
    }

    /// Transmissions this receiver got through its channel, plus the rank it
    /// started with.
    pub fn received(&self) -> u64 {
        self.received
    }
}

fn set_at(v: &mut Vec<u64>, n: PacketIndex, value: u64) {
    let i = n as usize - 1;
    if v.len() <= i {
        v.resize(i + 1, UNSET);
    }
    v[i] = value;
}

fn get_at(v: &[u64], n: PacketIndex) -> Option<u64> {
    v.get(n as usize - 1).copied().filter(|&s| s != UNSET)
}

/// What happened in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub slot: u64,
    pub arrived: bool,
    pub record: TransmissionRecord,
    pub received: Vec<bool>,
    /// Packets newly delivered to each receiver.
    pub delivered: Vec<Range<PacketIndex>>,
}

struct Streams {
    arrivals: ChaCha8Rng,
    payloads: ChaCha8Rng,
    channels: Vec<ChaCha8Rng>,
}

impl Streams {
    fn new(seed: u64, receivers: usize) -> Self {
        let stream = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            rng
        };
        Streams {
            arrivals: stream(0),
            payloads: stream(1),
            channels: (0..receivers as u64).map(|i| stream(2 + i)).collect(),
        }
    }
}

/// Sender, channels and receivers of one run.
pub struct World {
    config: ScenarioConfig,
    field: Arc<GaloisField>,
    sender: SenderState,
    receivers: Vec<ReceiverState>,
    streams: Streams,
    sources: Vec<Payload>,
    slot: u64,
    high: Vec<bool>,
    stats: RunReport,
}

impl World {
    /// Fresh world: empty queue, receivers knowing nothing.
    pub fn new(config: &ScenarioConfig) -> Result<Self, SimError> {
        config.validate_model()?;
        let bases = vec![KnowledgeBasis::new(); config.receivers()];
        Self::from_state(config, 0, bases)
    }

    /// World resumed with `arrivals` packets queued and the given receiver
    /// knowledge. Payloads are not tracked when resuming a non-empty queue.
    pub fn from_state(
        config: &ScenarioConfig,
        arrivals: PacketIndex,
        bases: Vec<KnowledgeBasis>,
    ) -> Result<Self, SimError> {
        config.validate_model()?;
        let mut config = config.clone();
        if arrivals > 0 {
            config.payload_len = 0;
        }
        let field = Arc::new(GaloisField::new(config.field_exponent)?);
        let sender = SenderState::from_mirrors(field.clone(), arrivals, bases.clone())?;
        let m = config.receivers();
        let mut streams = Streams::new(config.seed, m);
        let sources = (0..arrivals)
            .map(|_| random_payload(&mut streams.payloads, config.payload_len, &field))
            .collect();
        let stats = RunReport {
            scenario: config.name.clone(),
            seed: config.seed,
            seeds: 1,
            slots: config.slots,
            warmup: config.warmup,
            lambda: config.lambda,
            capacities: config.capacities.clone(),
            measured_slots: 0,
            delivered: vec![0; m],
            non_idle_slots: 0,
            idle_slots: 0,
            leader_slots: vec![0; m],
            high_leader_slots: 0,
            shared_leader_slots: 0,
            differential_slots: vec![vec![0; m]; m],
            leader_weight: vec![0.0; m],
            differential_weight: vec![vec![0.0; m]; m],
            delay_counts: vec![Vec::new(); m],
            gap_counts: vec![vec![0; GAP_CAP + 1]; m],
            payloads_checked: 0,
            payload_mismatches: 0,
        };
        Ok(World {
            high: config.capacities.iter().map(|&c| c > config.lambda).collect(),
            config,
            field,
            sender,
            receivers: bases.into_iter().map(ReceiverState::new).collect(),
            streams,
            sources,
            slot: 0,
            stats,
        })
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn sender(&self) -> &SenderState {
        &self.sender
    }

    pub fn receiver(&self, i: usize) -> &ReceiverState {
        &self.receivers[i]
    }

    pub fn field(&self) -> &GaloisField {
        &self.field
    }

    pub fn source_payload(&self, n: PacketIndex) -> Option<&[FieldElement]> {
        self.sources.get(n as usize - 1).map(Vec::as_slice)
    }

    /// True when every sender mirror matches its receiver row for row.
    pub fn mirrors_consistent(&self) -> bool {
        self.receivers
            .iter()
            .enumerate()
            .all(|(i, r)| self.sender.mirror(i).is_some_and(|m| m.same_rows(&r.basis)))
    }

    /// Statistics so far.
    pub fn report(&self) -> &RunReport {
        &self.stats
    }

    pub fn into_report(self) -> RunReport {
        self.stats
    }

    /// Advances one slot with random arrivals and erasures.
    pub fn step_slot(&mut self) -> Result<SlotOutcome, SimError> {
        let arrived = self
            .sender
            .poll_arrival(&mut self.streams.arrivals, self.config.lambda)?;
        if arrived {
            self.push_source();
        }
        let record = self.sender.encode_slot(self.slot + 1)?;
        // Channels are drawn every slot so that each stream stays aligned
        // with the slot counter regardless of idling.
        let received: Vec<bool> = self
            .streams
            .channels
            .iter_mut()
            .zip(&self.config.capacities)
            .map(|(rng, &c)| rng.gen_bool(c))
            .collect();
        self.finish_slot(arrived, record, received)
    }

    /// Advances one slot with the given arrival and per-receiver reception
    /// outcomes.
    pub fn step_scripted(&mut self, arrived: bool, received: &[bool]) -> Result<SlotOutcome, SimError> {
        if received.len() != self.receivers.len() {
            return Err(SimError::ReceptionCount {
                expected: self.receivers.len(),
                got: received.len(),
            });
        }
        if arrived {
            self.sender.push_arrival();
            self.push_source();
        }
        let record = self.sender.encode_slot(self.slot + 1)?;
        self.finish_slot(arrived, record, received.to_vec())
    }

    fn push_source(&mut self) {
        let p = random_payload(&mut self.streams.payloads, self.config.payload_len, &self.field);
        self.sources.push(p);
    }

    fn finish_slot(
        &mut self,
        arrived: bool,
        record: TransmissionRecord,
        mut received: Vec<bool>,
    ) -> Result<SlotOutcome, SimError> {
        self.slot += 1;
        let t = self.slot;
        let measured = t > self.config.warmup;
        let field = self.field.clone();
        let idle = record.is_idle();
        if idle {
            received.iter_mut().for_each(|r| *r = false);
        }

        let payload = (!idle && self.config.payload_len > 0).then(|| {
            record
                .coefficients
                .combine_payloads(self.config.payload_len, &field, |n| &self.sources[n as usize - 1])
        });

        let mut delivered = Vec::with_capacity(self.receivers.len());
        for (i, rx) in self.receivers.iter_mut().enumerate() {
            let before = rx.basis.next_required();
            if received[i] {
                rx.received += 1;
                rx.basis
                    .absorb_packet(&record.coefficients, payload.as_deref(), &field);
                self.sender.register_feedback(i, &record.coefficients)?;
            }
            let after = rx.basis.next_required();
            debug_assert!(
                (rx.basis.delivered() as usize) <= rx.basis.decoded_count()
                    && rx.basis.decoded_count() <= rx.basis.rank()
                    && rx.basis.rank() as u64 <= rx.received
            );
            if after > before {
                for n in before..after {
                    set_at(&mut rx.delivery, n, t);
                    if let Some(src) = self.sources.get(n as usize - 1).filter(|p| !p.is_empty()) {
                        self.stats.payloads_checked += 1;
                        if rx.basis.decoded_payload(n) != Some(src.as_slice()) {
                            self.stats.payload_mismatches += 1;
                        }
                    }
                }
                // Only the previously required packet waited; the rest were
                // decoded before anyone asked for them.
                let requested_at = get_at(&rx.first_request, before).unwrap_or(0);
                if requested_at >= self.config.warmup {
                    push_count(&mut self.stats.delay_counts[i], (t - requested_at) as usize);
                }
                if measured {
                    push_count_by(&mut self.stats.delay_counts[i], 0, (after - before - 1) as u64);
                    self.stats.delivered[i] += (after - before) as u64;
                }
                set_at(&mut rx.first_request, after, t);
            }
            delivered.push(before..after);
        }

        if measured {
            self.stats.measured_slots += 1;
            if idle {
                self.stats.idle_slots += 1;
            } else {
                self.stats.non_idle_slots += 1;
                let share = 1.0 / record.leaders.len() as f64;
                for &k in &record.leaders {
                    self.stats.leader_slots[k] += 1;
                    self.stats.leader_weight[k] += share;
                    for (i, &d) in record.differential.iter().enumerate() {
                        if d {
                            self.stats.differential_slots[i][k] += 1;
                            self.stats.differential_weight[i][k] += share;
                        }
                    }
                }
                if record.leaders.iter().any(|&k| self.high[k]) {
                    self.stats.high_leader_slots += 1;
                }
                if record.leaders.len() > 1 {
                    self.stats.shared_leader_slots += 1;
                }
            }
            let arrivals = self.sender.arrivals();
            for (i, rx) in self.receivers.iter().enumerate() {
                let gap = (arrivals - rx.basis.delivered()) as usize;
                self.stats.gap_counts[i][gap.min(GAP_CAP)] += 1;
            }
        }

        Ok(SlotOutcome {
            slot: t,
            arrived,
            record,
            received,
            delivered,
        })
    }
}

fn push_count(v: &mut Vec<u64>, t: usize) {
    push_count_by(v, t, 1);
}

fn push_count_by(v: &mut Vec<u64>, t: usize, by: u64) {
    if by == 0 {
        return;
    }
    if v.len() <= t {
        v.resize(t + 1, 0);
    }
    v[t] += by;
}

fn random_payload(rng: &mut ChaCha8Rng, len: usize, field: &GaloisField) -> Payload {
    (0..len)
        .map(|_| FieldElement(rng.gen_range(0..field.order()) as u16))
        .collect()
}

/// Runs `config.slots` slots and returns the post-warm-up statistics.
pub fn run(config: &ScenarioConfig) -> Result<RunReport, SimError> {
    config.validate()?;
    let mut world = World::new(config)?;
    for _ in 0..config.slots {
        world.step_slot()?;
    }
    Ok(world.into_report())
}

/// Independent replications with seeds `config.seed .. config.seed + seeds`,
/// in seed order.
pub fn run_replicates(config: &ScenarioConfig, seeds: usize) -> Result<Vec<RunReport>, SimError> {
    config.validate()?;
    (0..seeds as u64)
        .into_par_iter()
        .map(|k| run(&config.clone().with_seed(config.seed.wrapping_add(k))))
        .collect()
}
