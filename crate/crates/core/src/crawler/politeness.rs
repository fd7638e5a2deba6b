use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Minimum spacing between consecutive requests to one host.
///
/// Shared by the crawler and the live-fetch endpoint of the query service.
#[derive(Debug)]
pub struct HostThrottle {
    delay: Duration,
    next_slot: Mutex<HashMap<String, Instant>>,
}

impl HostThrottle {
    pub fn new(delay: Duration) -> Self {
        HostThrottle {
            delay,
            next_slot: Mutex::new(HashMap::new()),
        }
    }

    pub fn delay(&self) -> Duration {
        self.delay
    }

    /// Reserves the next slot for `host` and returns how long the caller
    /// must wait before using it.
    pub fn reserve(&self, host: &str) -> Duration {
        if self.delay.is_zero() {
            return Duration::ZERO;
        }
        let now = Instant::now();
        let mut slots = self.next_slot.lock().expect("throttle state poisoned");
        let slot = slots.get(host).copied().filter(|t| *t > now).unwrap_or(now);
        slots.insert(host.to_string(), slot + self.delay);
        slot - now
    }

    /// Blocks until the caller may contact `host`.
    pub fn wait(&self, host: &str) {
        let d = self.reserve(host);
        if !d.is_zero() {
            std::thread::sleep(d);
        }
    }
}
