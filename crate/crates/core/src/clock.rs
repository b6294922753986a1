//! Time sources. Simulations use [`VirtualClock`] so that reports and block
//! hashes are reproducible; only benchmarks read the wall clock.

use std::time::{SystemTime, UNIX_EPOCH};

pub trait Clock {
    /// Current time in milliseconds. Never decreases between calls.
    fn now_ms(&mut self) -> u64;
}

/// Deterministic clock: returns `start`, then advances by `step` on every
/// read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualClock {
    now: u64,
    step: u64,
}

impl VirtualClock {
    pub fn new(start: u64, step: u64) -> Self {
        Self { now: start, step }
    }

    pub fn peek(&self) -> u64 {
        self.now
    }

    pub fn advance(&mut self, ms: u64) {
        self.now += ms;
    }
}

impl Clock for VirtualClock {
    fn now_ms(&mut self) -> u64 {
        let t = self.now;
        self.now += self.step;
        t
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct WallClock {
    last: u64,
}

impl Clock for WallClock {
    fn now_ms(&mut self) -> u64 {
        let t = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        self.last = self.last.max(t);
        self.last
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn virtual_clock_steps() {
        let mut c = VirtualClock::new(100, 5);
        assert_eq!(c.now_ms(), 100);
        assert_eq!(c.now_ms(), 105);
        c.advance(10);
        assert_eq!(c.peek(), 120);
    }
}
