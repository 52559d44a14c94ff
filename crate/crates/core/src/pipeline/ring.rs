use num_traits::Float;

/// Circular buffer of the last `p + q` first-order differences.
///
/// Logical index `i` maps to slot `i mod capacity`; `count` is the number of
/// differences written since the last reset, so the valid logical range is
/// `count.saturating_sub(capacity)..count`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffRing<T = f32> {
    slots: Vec<T>,
    count: u64,
    prev_mean: Option<f64>,
}

impl<T: Float> DiffRing<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "ring capacity must be positive");
        Self {
            slots: vec![T::zero(); capacity],
            count: 0,
            prev_mean: None,
        }
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    /// Differences written since the last reset (`k`).
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn prev_mean(&self) -> Option<f64> {
        self.prev_mean
    }

    pub fn set_prev_mean(&mut self, mean: f64) {
        self.prev_mean = Some(mean);
    }

    pub fn push(&mut self, diff: T) {
        let slot = (self.count % self.slots.len() as u64) as usize;
        self.slots[slot] = diff;
        self.count += 1;
    }

    /// Value at logical index `i`. Only meaningful inside the valid range.
    pub fn get(&self, i: u64) -> T {
        self.slots[(i % self.slots.len() as u64) as usize]
    }

    /// Copies logical indices `start..start + out.len()` into `out`.
    pub fn copy_window(&self, start: u64, out: &mut [T]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.get(start + j as u64);
        }
    }

    pub fn reset(&mut self) {
        self.slots.iter_mut().for_each(|s| *s = T::zero());
        self.count = 0;
        self.prev_mean = None;
    }

    /// Reals held by the buffer (the counter and previous mean are not
    /// counted).
    pub fn memory_reals(&self) -> usize {
        self.slots.len()
    }
}
