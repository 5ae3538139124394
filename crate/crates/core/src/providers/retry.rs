//! Retry with geometric backoff, and a gate bounding in-flight requests.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use super::ProviderError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based): `base * 2^retry`.
    pub fn delay(&self, retry: u32) -> Duration {
        self.base_delay
            .saturating_mul(1u32.checked_shl(retry.min(20)).unwrap_or(u32::MAX))
    }
}

/// Outcome of one attempt.
#[derive(Debug)]
pub enum Attempt<T> {
    Done(T),
    /// Transient failure (timeout, connection refused, 429, 5xx).
    Retry(String),
    /// Permanent failure; returned as is.
    Fail(ProviderError),
}

/// Run `op` until it succeeds, fails permanently, or `1 + max_retries`
/// attempts have been made. `sleep` is injected so tests can observe delays.
pub fn with_retry<T>(
    policy: RetryPolicy,
    mut sleep: impl FnMut(Duration),
    mut op: impl FnMut(u32) -> Attempt<T>,
) -> Result<T, ProviderError> {
    let mut last = String::new();
    for attempt in 0..=policy.max_retries {
        if attempt > 0 {
            sleep(policy.delay(attempt - 1));
        }
        match op(attempt) {
            Attempt::Done(v) => return Ok(v),
            Attempt::Fail(e) => return Err(e),
            Attempt::Retry(reason) => {
                log::warn!("attempt {} failed: {reason}", attempt + 1);
                last = reason;
            }
        }
    }
    Err(ProviderError::Unavailable {
        attempts: policy.max_retries + 1,
        last_error: last,
    })
}

/// Counting semaphore limiting concurrent requests.
#[derive(Debug)]
pub struct Gate {
    limit: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

impl Gate {
    pub fn new(limit: usize) -> Self {
        Self {
            limit: limit.max(1),
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    /// Block until a slot is free.
    pub fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().expect("gate mutex poisoned");
        while *n >= self.limit {
            n = self.freed.wait(n).expect("gate mutex poisoned");
        }
        *n += 1;
        Permit { gate: self }
    }

    pub fn in_flight(&self) -> usize {
        *self.in_flight.lock().expect("gate mutex poisoned")
    }
}

pub struct Permit<'a> {
    gate: &'a Gate,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.gate.in_flight.lock().expect("gate mutex poisoned");
        *n -= 1;
        self.gate.freed.notify_one();
    }
}
