use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gfield::{DEFAULT_EXPONENT, MAX_EXPONENT};

pub const DEFAULT_SLOTS: u64 = 1_000_000;
pub const DEFAULT_WARMUP: u64 = 10_000;
pub const DEFAULT_PAYLOAD_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("arrival probability {0} outside [0, 1]")]
    Lambda(f64),
    #[error("at least one receiver is required")]
    NoReceivers,
    #[error("capacity {value} of receiver {receiver} outside (0, 1]")]
    Capacity { receiver: usize, value: f64 },
    #[error("capacities must be distinct and sorted in decreasing order (receiver {0})")]
    CapacityOrder(usize),
    #[error("field exponent {0} outside 1..=16")]
    FieldExponent(u8),
    #[error("field of order 2^{exponent} is smaller than the {receivers} receivers")]
    FieldTooSmall { exponent: u8, receivers: usize },
    #[error("slot count must be positive")]
    NoSlots,
    #[error("warm-up {warmup} must be shorter than the {slots} slots")]
    Warmup { warmup: u64, slots: u64 },
}

/// One simulated (or analysed) broadcast scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Per-slot arrival probability.
    pub lambda: f64,
    /// Per-receiver reception probabilities, strongest first.
    pub capacities: Vec<f64>,
    #[serde(default = "default_exponent")]
    pub field_exponent: u8,
    #[serde(default = "default_slots")]
    pub slots: u64,
    #[serde(default = "default_warmup")]
    pub warmup: u64,
    #[serde(default)]
    pub seed: u64,
    /// Symbols of pseudo-random payload per source packet; 0 disables
    /// payload tracking.
    #[serde(default = "default_payload_len")]
    pub payload_len: usize,
}

fn default_name() -> String {
    "custom".to_string()
}
fn default_exponent() -> u8 {
    DEFAULT_EXPONENT
}
fn default_slots() -> u64 {
    DEFAULT_SLOTS
}
fn default_warmup() -> u64 {
    DEFAULT_WARMUP
}
fn default_payload_len() -> usize {
    DEFAULT_PAYLOAD_LEN
}

impl ScenarioConfig {
    pub fn new(name: impl Into<String>, lambda: f64, capacities: Vec<f64>) -> Self {
        ScenarioConfig {
            name: name.into(),
            lambda,
            capacities,
            field_exponent: DEFAULT_EXPONENT,
            slots: DEFAULT_SLOTS,
            warmup: DEFAULT_WARMUP,
            seed: 0,
            payload_len: DEFAULT_PAYLOAD_LEN,
        }
    }

    pub fn receivers(&self) -> usize {
        self.capacities.len()
    }

    pub fn with_slots(mut self, slots: u64, warmup: u64) -> Self {
        self.slots = slots;
        self.warmup = warmup;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Receivers whose capacity strictly exceeds the arrival rate.
    pub fn high_receivers(&self) -> Vec<usize> {
        (0..self.receivers())
            .filter(|&i| self.capacities[i] > self.lambda)
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_model()?;
        for (i, &c) in self.capacities.iter().enumerate() {
            if !(c > 0.0 && c <= 1.0) {
                return Err(ConfigError::Capacity { receiver: i, value: c });
            }
            if i > 0 && c >= self.capacities[i - 1] {
                return Err(ConfigError::CapacityOrder(i));
            }
        }
        if self.slots == 0 {
            return Err(ConfigError::NoSlots);
        }
        if self.warmup >= self.slots {
            return Err(ConfigError::Warmup {
                warmup: self.warmup,
                slots: self.slots,
            });
        }
        Ok(())
    }

    /// Checks needed to step a world at all; capacity ordering and the slot
    /// budget are left to [`validate`](Self::validate).
    pub(crate) fn validate_model(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(ConfigError::Lambda(self.lambda));
        }
        if self.capacities.is_empty() {
            return Err(ConfigError::NoReceivers);
        }
        for (i, &c) in self.capacities.iter().enumerate() {
            if !(0.0..=1.0).contains(&c) {
                return Err(ConfigError::Capacity { receiver: i, value: c });
            }
        }
        if self.field_exponent == 0 || self.field_exponent > MAX_EXPONENT {
            return Err(ConfigError::FieldExponent(self.field_exponent));
        }
        if (1usize << self.field_exponent) < self.receivers() {
            return Err(ConfigError::FieldTooSmall {
                exponent: self.field_exponent,
                receivers: self.receivers(),
            });
        }
        Ok(())
    }
}
