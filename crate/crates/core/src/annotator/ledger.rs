use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts annotations against a fixed budget. Reservations are
/// all-or-nothing, so `used <= budget` holds under any interleaving.
#[derive(Debug)]
pub struct BudgetLedger {
    budget: usize,
    used: AtomicUsize,
    tokens: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub budget: usize,
    pub used: usize,
    pub token_estimate: u64,
}

impl BudgetLedger {
    pub fn new(budget: usize) -> Self {
        BudgetLedger {
            budget,
            used: AtomicUsize::new(0),
            tokens: AtomicU64::new(0),
        }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn used(&self) -> usize {
        self.used.load(Ordering::Acquire)
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.used()
    }

    pub fn token_estimate(&self) -> u64 {
        self.tokens.load(Ordering::Acquire)
    }

    /// Claim `n` annotations, or none if fewer than `n` remain.
    pub fn try_reserve(&self, n: usize) -> Result<()> {
        self.used
            .fetch_update(Ordering::AcqRel, Ordering::Acquire, |used| {
                used.checked_add(n).filter(|&total| total <= self.budget)
            })
            .map(|_| ())
            .map_err(|used| Error::BudgetExceeded {
                requested: n,
                remaining: self.budget - used,
            })
    }

    pub fn add_tokens(&self, n: u64) {
        self.tokens.fetch_add(n, Ordering::AcqRel);
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        LedgerSnapshot {
            budget: self.budget,
            used: self.used(),
            token_estimate: self.token_estimate(),
        }
    }
}
