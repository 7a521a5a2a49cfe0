use std::sync::atomic::{AtomicU64, Ordering};

/// Operation counts at one point in time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct OpCounts {
    pub add: u64,
    pub plain_mul: u64,
    pub mul: u64,
    pub substitute: u64,
}

impl std::ops::Sub for OpCounts {
    type Output = OpCounts;

    fn sub(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            add: self.add - rhs.add,
            plain_mul: self.plain_mul - rhs.plain_mul,
            mul: self.mul - rhs.mul,
            substitute: self.substitute - rhs.substitute,
        }
    }
}

/// Thread-safe operation counters owned by a backend instance.
#[derive(Debug, Default)]
pub struct OpMeter {
    add: AtomicU64,
    plain_mul: AtomicU64,
    mul: AtomicU64,
    substitute: AtomicU64,
}

impl OpMeter {
    pub fn record_add(&self) {
        self.add.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_plain_mul(&self) {
        self.plain_mul.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_mul(&self) {
        self.mul.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_substitute(&self) {
        self.substitute.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record(&self, counts: OpCounts) {
        self.add.fetch_add(counts.add, Ordering::Relaxed);
        self.plain_mul
            .fetch_add(counts.plain_mul, Ordering::Relaxed);
        self.mul.fetch_add(counts.mul, Ordering::Relaxed);
        self.substitute
            .fetch_add(counts.substitute, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> OpCounts {
        OpCounts {
            add: self.add.load(Ordering::Relaxed),
            plain_mul: self.plain_mul.load(Ordering::Relaxed),
            mul: self.mul.load(Ordering::Relaxed),
            substitute: self.substitute.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        for c in [&self.add, &self.plain_mul, &self.mul, &self.substitute] {
            c.store(0, Ordering::Relaxed);
        }
    }
}
