//! File formats, experiment runners and the command line for
//! `bushing-core`.

pub mod config;
pub mod csv_io;
pub mod error;
pub mod experiment;
pub mod report;
pub mod snapshot;

use std::time::Instant;

use bushing_core::diagnosis::Clock;

pub use error::{CliError, Result};

/// Seconds since construction, from the monotonic system clock.
#[derive(Debug, Clone, Copy)]
pub struct MonotonicClock(Instant);

impl MonotonicClock {
    pub fn new() -> Self {
        MonotonicClock(Instant::now())
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now_seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
