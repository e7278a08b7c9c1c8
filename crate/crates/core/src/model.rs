use std::sync::atomic::{AtomicU64, Ordering};

use crate::linalg::Vector;

/// Monotone call counters. Shared across threads via relaxed atomics; the
/// counts are bookkeeping, not synchronization.
#[derive(Debug, Default)]
pub struct EvalCounters {
    energy: AtomicU64,
    gradient: AtomicU64,
}

impl EvalCounters {
    pub fn record_energy(&self) {
        self.energy.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_gradient(&self) {
        self.gradient.fetch_add(1, Ordering::Relaxed);
    }

    pub fn energy_calls(&self) -> u64 {
        self.energy.load(Ordering::Relaxed)
    }

    pub fn gradient_calls(&self) -> u64 {
        self.gradient.load(Ordering::Relaxed)
    }
}

/// An energy surface together with its standard (ℓ²) gradient.
///
/// Implementations must be pure: the same input always yields the same
/// output, and evaluation must be safe from multiple threads. The counters
/// are the only interior state and only ever increase.
pub trait EnergyModel: Sync {
    fn dim(&self) -> usize;

    fn energy(&self, x: &Vector) -> f64;

    fn gradient(&self, x: &Vector) -> Vector;

    fn counters(&self) -> &EvalCounters;
}
