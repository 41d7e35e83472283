//! Logical buffer accounting.
//!
//! Pipeline stages report the bytes they hold as they allocate and release
//! working buffers. The peak is a deterministic function of the input, unlike
//! process resident-set size.

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BufferMeter {
    current: u64,
    peak: u64,
}

impl BufferMeter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn alloc(&mut self, bytes: usize) {
        self.current += bytes as u64;
        self.peak = self.peak.max(self.current);
    }

    pub fn free(&mut self, bytes: usize) {
        self.current = self
            .current
            .checked_sub(bytes as u64)
            .expect("freed more bytes than were allocated");
    }

    pub fn current(&self) -> u64 {
        self.current
    }

    pub fn peak(&self) -> u64 {
        self.peak
    }
}
