//! Counting semaphore bounding in-flight backend calls.

use std::sync::{Condvar, Mutex};

/// Caps concurrent backend calls; acquire blocks once `max` permits are out.
pub struct Limiter {
    max: usize,
    available: Mutex<usize>,
    cv: Condvar,
}

impl Limiter {
    /// Default cap on concurrent backend calls.
    pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

    /// Creates a limiter with `max` permits (`max >= 1`).
    pub fn new(max: usize) -> Self {
        assert!(max >= 1, "limiter needs at least one permit");
        Self {
            max,
            available: Mutex::new(max),
            cv: Condvar::new(),
        }
    }

    pub fn max_in_flight(&self) -> usize {
        self.max
    }

    /// Blocks until a permit is free; the permit releases on drop.
    pub fn acquire(&self) -> Permit<'_> {
        let mut available = self.available.lock().expect("limiter poisoned");
        while *available == 0 {
            available = self.cv.wait(available).expect("limiter poisoned");
        }
        *available -= 1;
        Permit { limiter: self }
    }

    /// Permits currently handed out.
    pub fn in_flight(&self) -> usize {
        self.max - *self.available.lock().expect("limiter poisoned")
    }
}

impl Default for Limiter {
    fn default() -> Self {
        Self::new(Self::DEFAULT_MAX_IN_FLIGHT)
    }
}

/// RAII guard for one in-flight slot.
pub struct Permit<'a> {
    limiter: &'a Limiter,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut available = self.limiter.available.lock().expect("limiter poisoned");
        *available += 1;
        self.limiter.cv.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn never_exceeds_the_cap() {
        let limiter = Arc::new(Limiter::new(4));
        let current = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let mut handles = Vec::new();
        for _ in 0..16 {
            let limiter = Arc::clone(&limiter);
            let current = Arc::clone(&current);
            let peak = Arc::clone(&peak);
            handles.push(std::thread::spawn(move || {
                let _permit = limiter.acquire();
                let now = current.fetch_add(1, Ordering::SeqCst) + 1;
                peak.fetch_max(now, Ordering::SeqCst);
                std::thread::sleep(std::time::Duration::from_millis(5));
                current.fetch_sub(1, Ordering::SeqCst);
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 4, "peak={}", peak.load(Ordering::SeqCst));
        assert!(peak.load(Ordering::SeqCst) >= 1);
        assert_eq!(limiter.in_flight(), 0);
    }

    #[test]
    fn permits_release_on_drop() {
        let limiter = Limiter::new(1);
        {
            let _p = limiter.acquire();
            assert_eq!(limiter.in_flight(), 1);
        }
        assert_eq!(limiter.in_flight(), 0);
        let _p2 = limiter.acquire();
        assert_eq!(limiter.in_flight(), 1);
    }
}
