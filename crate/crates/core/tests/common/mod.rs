//! Stand-alone GF(4) elimination used to audit the encoder.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use mrnc::simulator::{ScenarioConfig, SlotOutcome, World};

/// GF(4) with modulus x^2 + x + 1; element `2` is x.
const MUL: [[u8; 4]; 4] = [[0, 0, 0, 0], [0, 1, 2, 3], [0, 2, 3, 1], [0, 3, 1, 2]];
const INV: [u8; 4] = [0, 1, 3, 2];

type Sparse = BTreeMap<u32, u8>;

/// One receiver's stored coefficient vectors in echelon form keyed by
/// highest index.
#[derive(Default)]
pub struct OracleReceiver {
    rows: HashMap<u32, Sparse>,
    next_required: u32,
}

impl OracleReceiver {
    fn new() -> Self {
        OracleReceiver {
            rows: HashMap::new(),
            next_required: 1,
        }
    }

    /// Residual after eliminating the highest term repeatedly.
    fn residual(&self, v: &Sparse) -> Sparse {
        let mut r = v.clone();
        while let Some((&h, &c)) = r.iter().next_back() {
            let Some(row) = self.rows.get(&h) else {
                break;
            };
            let factor = MUL[c as usize][INV[row[&h] as usize] as usize];
            for (&k, &x) in row {
                let e = r.entry(k).or_insert(0);
                *e ^= MUL[factor as usize][x as usize];
                if *e == 0 {
                    r.remove(&k);
                }
            }
        }
        r
    }

    fn insert(&mut self, v: &Sparse) {
        let r = self.residual(v);
        if let Some((&h, _)) = r.iter().next_back() {
            self.rows.insert(h, r);
            while self.rows.contains_key(&self.next_required) {
                self.next_required += 1;
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct OracleTally {
    pub slots: u64,
    pub transmissions: u64,
    pub innovation_checks: u64,
    pub innovation_violations: u64,
    pub leader_checks: u64,
    pub leader_violations: u64,
    pub flag_mismatches: u64,
    pub request_mismatches: u64,
    pub rank_mismatches: u64,
    pub pivot_mismatches: u64,
}

impl OracleTally {
    pub fn violations(&self) -> u64 {
        self.innovation_violations
            + self.leader_violations
            + self.flag_mismatches
            + self.request_mismatches
            + self.rank_mismatches
            + self.pivot_mismatches
    }
}

fn to_sparse(outcome: &SlotOutcome) -> Sparse {
    outcome
        .record
        .coefficients
        .iter()
        .map(|(n, c)| {
            assert!(c.0 < 4, "coefficient outside GF(4)");
            (n, c.0 as u8)
        })
        .collect()
}

/// Steps a fresh world for `config.slots` slots, auditing every slot.
pub fn audit(config: &ScenarioConfig) -> OracleTally {
    assert_eq!(config.field_exponent, 2, "oracle tables are for GF(4)");
    let m = config.receivers();
    let mut world = World::new(config).expect("valid config");
    let mut receivers: Vec<OracleReceiver> = (0..m).map(|_| OracleReceiver::new()).collect();
    let mut tally = OracleTally::default();
    for slot in 0..config.slots {
        let outcome = world.step_slot().expect("slot");
        tally.slots += 1;
        let s = to_sparse(&outcome);
        if !s.is_empty() {
            tally.transmissions += 1;
            let pivot = *s.keys().next_back().unwrap();
            if outcome.record.leaders.is_empty() {
                tally.leader_violations += 1;
            }
            for (i, rx) in receivers.iter().enumerate() {
                let r = rx.residual(&s);
                let new_pivot = r.keys().next_back().copied();
                let differential = new_pivot == Some(rx.next_required);
                if outcome.record.targeted[i] {
                    tally.innovation_checks += 1;
                    if r.is_empty() {
                        tally.innovation_violations += 1;
                    }
                }
                if outcome.record.leaders.contains(&i) {
                    tally.leader_checks += 1;
                    if !differential {
                        tally.leader_violations += 1;
                    }
                    if rx.next_required != pivot {
                        tally.pivot_mismatches += 1;
                    }
                }
                if outcome.record.differential[i] != differential {
                    tally.flag_mismatches += 1;
                }
            }
        }
        for (i, rx) in receivers.iter_mut().enumerate() {
            if outcome.received[i] && !s.is_empty() {
                rx.insert(&s);
            }
            if world.receiver(i).basis().next_required() != rx.next_required {
                tally.request_mismatches += 1;
            }
        }
        if slot % 500 == 0 || slot + 1 == config.slots {
            for (i, rx) in receivers.iter().enumerate() {
                if world.receiver(i).basis().rank() != rx.rank() {
                    tally.rank_mismatches += 1;
                }
            }
        }
    }
    tally
}
