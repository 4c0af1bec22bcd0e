use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

/// Time source for sessions. Sessions clamp readings so that event times
/// never decrease, whatever the clock does.
pub trait Clock: Send + Sync {
    fn monotonic_ms(&self) -> u64;
    /// Unix epoch milliseconds.
    fn wall_ms(&self) -> u64;
    fn sleep_ms(&self, ms: u64);
}

/// Real time. The monotonic reading is epoch-based so that it stays
/// meaningful across process restarts.
#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn monotonic_ms(&self) -> u64 {
        self.wall_ms()
    }

    fn wall_ms(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64)
    }

    fn sleep_ms(&self, ms: u64) {
        std::thread::sleep(Duration::from_millis(ms));
    }
}

/// Clock that only moves when told to; `sleep_ms` advances it instantly.
#[derive(Debug, Default)]
pub struct ManualClock {
    now_ms: AtomicU64,
    wall_origin_ms: u64,
}

impl ManualClock {
    pub fn new(start_ms: u64, wall_origin_ms: u64) -> Self {
        Self {
            now_ms: AtomicU64::new(start_ms),
            wall_origin_ms,
        }
    }

    pub fn advance(&self, ms: u64) {
        self.now_ms.fetch_add(ms, Ordering::SeqCst);
    }

    pub fn set(&self, ms: u64) {
        self.now_ms.store(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn monotonic_ms(&self) -> u64 {
        self.now_ms.load(Ordering::SeqCst)
    }

    fn wall_ms(&self) -> u64 {
        self.wall_origin_ms + self.monotonic_ms()
    }

    fn sleep_ms(&self, ms: u64) {
        self.advance(ms);
    }
}
