//! FIFO work queue over node indices with O(1) membership tests.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub(crate) struct RingQueue {
    buf: Vec<usize>,
    head: usize,
    len: usize,
    queued: Vec<bool>,
}

impl RingQueue {
    /// Queue holding every node once, in id order, or shuffled when a seed
    /// is given.
    pub(crate) fn seeded(n: usize, seed: Option<u64>) -> RingQueue {
        let mut buf: Vec<usize> = (0..n).collect();
        if let Some(seed) = seed {
            buf.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        RingQueue {
            buf,
            head: 0,
            len: n,
            queued: vec![true; n],
        }
    }

    pub(crate) fn pop(&mut self) -> Option<usize> {
        if self.len == 0 {
            return None;
        }
        let i = self.buf[self.head];
        self.head = (self.head + 1) % self.buf.len();
        self.len -= 1;
        self.queued[i] = false;
        Some(i)
    }

    /// Appends `i` unless it is already waiting.
    pub(crate) fn push(&mut self, i: usize) {
        if self.queued[i] {
            return;
        }
        let tail = (self.head + self.len) % self.buf.len();
        self.buf[tail] = i;
        self.len += 1;
        self.queued[i] = true;
    }

    #[cfg(test)]
    pub(crate) fn len(&self) -> usize {
        self.len
    }
}
