use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("max_attempts must be at least 1")]
    NoAttempts,
    #[error("backoff factor must be >= 1, got {0}")]
    Factor(f64),
    #[error("jitter_fraction must lie in [0, 1], got {0}")]
    Jitter(f64),
}

/// Exponential backoff with jitter and an upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    #[serde(with = "millis")]
    pub base_delay: Duration,
    pub factor: f64,
    pub jitter_fraction: f64,
    pub honor_server_retry_hint: bool,
    #[serde(with = "millis")]
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base_delay: Duration::from_secs(1),
            factor: 2.0,
            jitter_fraction: 0.2,
            honor_server_retry_hint: true,
            max_delay: Duration::from_secs(60),
        }
    }
}

impl RetryPolicy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.max_attempts < 1 {
            return Err(PolicyError::NoAttempts);
        }
        if self.factor.is_nan() || self.factor < 1.0 {
            return Err(PolicyError::Factor(self.factor));
        }
        if !(0.0..=1.0).contains(&self.jitter_fraction) {
            return Err(PolicyError::Jitter(self.jitter_fraction));
        }
        Ok(())
    }

    /// `base_delay * factor^retry`, capped at `max_delay`.
    pub fn nominal_delay(&self, retry: u32) -> Duration {
        let secs = self.base_delay.as_secs_f64() * self.factor.powi(retry as i32);
        if !secs.is_finite() || secs >= self.max_delay.as_secs_f64() {
            self.max_delay
        } else {
            Duration::from_secs_f64(secs)
        }
    }
}

/// Delay generator for one request. Delays never decrease and never exceed
/// `max_delay`, whatever the jitter draw or server hint.
#[derive(Debug)]
pub struct Backoff<'p> {
    policy: &'p RetryPolicy,
    retries: u32,
    previous: Duration,
    rng: ChaCha8Rng,
}

impl<'p> Backoff<'p> {
    pub fn new(policy: &'p RetryPolicy, seed: u64) -> Self {
        Backoff {
            policy,
            retries: 0,
            previous: Duration::ZERO,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_delay(&mut self, server_hint: Option<Duration>) -> Duration {
        let nominal = self.policy.nominal_delay(self.retries);
        self.retries += 1;
        let jitter = if self.policy.jitter_fraction > 0.0 {
            self.rng.gen_range(0.0..=self.policy.jitter_fraction)
        } else {
            0.0
        };
        let mut delay = nominal.mul_f64(1.0 + jitter);
        if self.policy.honor_server_retry_hint {
            if let Some(hint) = server_hint {
                delay = delay.max(hint);
            }
        }
        delay = delay.min(self.policy.max_delay).max(self.previous);
        self.previous = delay;
        delay
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}
