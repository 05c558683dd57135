//! Retry and concurrency plumbing shared by the remote retriever and the
//! chat-completion client.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

/// Exponential backoff: `max_attempts` tries in total, sleeping
/// `base_delay * factor^(n-1)` after the n-th failed attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub factor: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
            factor: 2,
        }
    }
}

impl RetryPolicy {
    /// Delay slept after failed attempt `attempt` (1-based).
    pub fn delay_after(&self, attempt: u32) -> Duration {
        self.base_delay * self.factor.saturating_pow(attempt.saturating_sub(1))
    }

    /// Runs `op` until it succeeds, returns a non-retryable error, or the
    /// attempt budget is exhausted. The last error is returned on failure.
    pub fn run<T, E, F>(&self, mut op: F) -> Result<T, Attempted<E>>
    where
        F: FnMut(u32) -> Result<T, Failure<E>>,
    {
        let attempts = self.max_attempts.max(1);
        let mut attempt = 1;
        loop {
            match op(attempt) {
                Ok(v) => return Ok(v),
                Err(Failure::Fatal(e)) => return Err(Attempted { attempts: attempt, error: e }),
                Err(Failure::Retryable(e)) => {
                    if attempt >= attempts {
                        return Err(Attempted { attempts: attempt, error: e });
                    }
                    let delay = self.delay_after(attempt);
                    tracing::debug!(attempt, ?delay, "request failed, backing off");
                    thread::sleep(delay);
                    attempt += 1;
                }
            }
        }
    }
}

/// Classification of a single failed attempt.
#[derive(Debug)]
pub enum Failure<E> {
    Retryable(E),
    Fatal(E),
}

/// The error of the final attempt plus how many attempts were made.
#[derive(Debug)]
pub struct Attempted<E> {
    pub attempts: u32,
    pub error: E,
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
pub struct ConcurrencyLimit {
    available: Mutex<usize>,
    released: Condvar,
    capacity: usize,
}

impl ConcurrencyLimit {
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Self {
            available: Mutex::new(capacity),
            released: Condvar::new(),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Blocks until a slot is free. The slot is returned when the permit drops.
    pub fn acquire(&self) -> Permit<'_> {
        let mut available = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *available == 0 {
            available = self
                .released
                .wait(available)
                .unwrap_or_else(|e| e.into_inner());
        }
        *available -= 1;
        Permit { limit: self }
    }
}

pub struct Permit<'a> {
    limit: &'a ConcurrencyLimit,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut available = self
            .limit
            .available
            .lock()
            .unwrap_or_else(|e| e.into_inner());
        *available += 1;
        self.limit.released.notify_one();
    }
}

/// Whether an HTTP status is worth retrying (throttling and server errors).
pub(crate) fn retryable_status(status: reqwest::StatusCode) -> bool {
    status == reqwest::StatusCode::TOO_MANY_REQUESTS
        || status == reqwest::StatusCode::REQUEST_TIMEOUT
        || status.is_server_error()
}
