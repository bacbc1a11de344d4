use std::collections::VecDeque;

/// Priority queue over 8-bit keys: lowest key first, FIFO within a key.
///
/// Pushing below the current minimum is allowed; the next pop then comes from
/// the lower bucket. This matches a stable binary heap keyed on
/// `(key, insertion order)`.
pub(crate) struct BucketQueue {
    buckets: Vec<VecDeque<usize>>,
    lowest: usize,
    len: usize,
}

impl BucketQueue {
    pub(crate) fn new() -> Self {
        BucketQueue {
            buckets: (0..256).map(|_| VecDeque::new()).collect(),
            lowest: 256,
            len: 0,
        }
    }

    pub(crate) fn push(&mut self, key: u8, item: usize) {
        let k = key as usize;
        self.buckets[k].push_back(item);
        self.lowest = self.lowest.min(k);
        self.len += 1;
    }

    pub(crate) fn pop(&mut self) -> Option<(u8, usize)> {
        if self.len == 0 {
            return None;
        }
        while self.buckets[self.lowest].is_empty() {
            self.lowest += 1;
        }
        let item = self.buckets[self.lowest].pop_front()?;
        self.len -= 1;
        Some((self.lowest as u8, item))
    }
}
