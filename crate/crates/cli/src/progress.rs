//! Percentage ticker on stderr.

use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

pub struct Ticker {
    label: String,
    quiet: bool,
    last: AtomicU64,
}

impl Ticker {
    pub fn new(label: impl Into<String>, quiet: bool) -> Self {
        Ticker {
            label: label.into(),
            quiet,
            last: AtomicU64::new(u64::MAX),
        }
    }

    /// Reports `done` of `total` steps; prints only when the integer
    /// percentage changes.
    pub fn update(&self, done: f64, total: f64) {
        if self.quiet || total <= 0.0 {
            return;
        }
        let pct = ((100.0 * done / total).floor() as u64).min(100);
        if self.last.swap(pct, Ordering::Relaxed) != pct {
            let mut err = std::io::stderr().lock();
            let _ = write!(err, "\r{} {pct:3}%", self.label);
            let _ = err.flush();
        }
    }

    pub fn finish(&self) {
        if !self.quiet && self.last.load(Ordering::Relaxed) != u64::MAX {
            eprintln!();
        }
    }
}
