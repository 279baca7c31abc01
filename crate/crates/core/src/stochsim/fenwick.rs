//! Binary indexed tree over nonnegative integer weights.

#[derive(Debug, Clone)]
pub(crate) struct Fenwick {
    tree: Vec<u64>,
    weights: Vec<u64>,
    total: u64,
    /// Largest power of two not above the length.
    top: usize,
}

impl Fenwick {
    pub fn from_weights(weights: Vec<u64>) -> Self {
        let n = weights.len();
        let mut tree = vec![0u64; n + 1];
        for (i, w) in weights.iter().enumerate() {
            tree[i + 1] += w;
            let parent = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i + 1];
            }
        }
        let top = if n == 0 { 0 } else { 1 << (usize::BITS - 1 - n.leading_zeros()) };
        Self {
            tree,
            total: weights.iter().sum(),
            weights,
            top,
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn weight(&self, i: usize) -> u64 {
        self.weights[i]
    }

    pub fn set(&mut self, i: usize, w: u64) {
        let old = self.weights[i];
        if old == w {
            return;
        }
        self.weights[i] = w;
        self.total = self.total - old + w;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] = self.tree[k] - old + w;
            k += k & k.wrapping_neg();
        }
    }

    /// Index `i` with `prefix(i) <= r < prefix(i + 1)`; requires `r < total`.
    pub fn find(&self, mut r: u64) -> usize {
        debug_assert!(r < self.total);
        let mut pos = 0;
        let mut step = self.top;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= r {
                r -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos
    }
}
