//! Fixed-capacity sum tree for proportional sampling.
//!
//! Stored as an implicit binary heap: node 1 is the root, node `i` has
//! children `2i` and `2i + 1`, and the `capacity` leaves live at
//! `capacity..2 * capacity`. Each internal node is recomputed as the sum of
//! its two children whenever a leaf below it changes.

use super::DdqnError;

#[derive(Clone, Debug)]
pub struct SumTree<T> {
    capacity: usize,
    sums: Vec<f64>,
    maxes: Vec<f64>,
    data: Vec<Option<T>>,
    cursor: usize,
    len: usize,
}

impl<T> SumTree<T> {
    /// `capacity` must be a power of two.
    pub fn new(capacity: usize) -> Result<Self, DdqnError> {
        if capacity == 0 || !capacity.is_power_of_two() {
            return Err(DdqnError::Config(format!(
                "sum tree capacity must be a power of two, got {capacity}"
            )));
        }
        Ok(Self {
            capacity,
            sums: vec![0.0; 2 * capacity],
            maxes: vec![0.0; 2 * capacity],
            data: (0..capacity).map(|_| None).collect(),
            cursor: 0,
            len: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn total(&self) -> f64 {
        self.sums[1]
    }

    /// Largest priority currently stored (0 for an empty tree).
    pub fn max_priority(&self) -> f64 {
        self.maxes[1]
    }

    pub fn priority(&self, leaf: usize) -> f64 {
        self.sums[self.capacity + leaf]
    }

    pub fn get(&self, leaf: usize) -> Option<&T> {
        self.data.get(leaf).and_then(Option::as_ref)
    }

    /// All node sums in heap order; index 0 is unused.
    pub fn node_sums(&self) -> &[f64] {
        &self.sums
    }

    /// Writes `item` at the cursor, overwriting the oldest entry once full.
    /// Returns the leaf index used.
    pub fn push(&mut self, item: T, priority: f64) -> Result<usize, DdqnError> {
        check_priority(priority)?;
        let leaf = self.cursor;
        self.data[leaf] = Some(item);
        self.set(leaf, priority);
        self.cursor = (self.cursor + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
        Ok(leaf)
    }

    pub fn update(&mut self, leaf: usize, priority: f64) -> Result<(), DdqnError> {
        check_priority(priority)?;
        if leaf >= self.len {
            return Err(DdqnError::Value(format!("leaf {leaf} is not occupied")));
        }
        self.set(leaf, priority);
        Ok(())
    }

    fn set(&mut self, leaf: usize, priority: f64) {
        let mut node = self.capacity + leaf;
        self.sums[node] = priority;
        self.maxes[node] = priority;
        while node > 1 {
            node /= 2;
            self.sums[node] = self.sums[2 * node] + self.sums[2 * node + 1];
            self.maxes[node] = self.maxes[2 * node].max(self.maxes[2 * node + 1]);
        }
    }

    /// Finds the leaf whose cumulative-priority interval contains `prefix`,
    /// i.e. leaf `k` with `sum(p[..k]) <= prefix < sum(p[..=k])`.
    pub fn sample(&self, prefix: f64) -> Result<(usize, &T, f64), DdqnError> {
        if !(prefix >= 0.0 && prefix < self.total()) {
            return Err(DdqnError::Value(format!(
                "prefix {prefix} is outside [0, {})",
                self.total()
            )));
        }
        let mut node = 1;
        let mut rest = prefix;
        while node < self.capacity {
            let left = 2 * node;
            if rest < self.sums[left] {
                node = left;
            } else {
                rest -= self.sums[left];
                node = left + 1;
            }
        }
        let mut leaf = node - self.capacity;
        // Rounding near the right edge can land on an empty leaf; fall back
        // to the nearest stored leaf with positive priority.
        if self.sums[node] == 0.0 || leaf >= self.len {
            leaf = (0..self.len)
                .rev()
                .find(|&k| self.priority(k) > 0.0)
                .expect("positive total implies a positive leaf");
        }
        let item = self.data[leaf].as_ref().expect("occupied leaf");
        Ok((leaf, item, self.priority(leaf)))
    }
}

fn check_priority(priority: f64) -> Result<(), DdqnError> {
    if priority >= 0.0 && priority.is_finite() {
        Ok(())
    } else {
        Err(DdqnError::Value(format!("priority must be finite and non-negative, got {priority}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tree_of(priorities: &[f64]) -> SumTree<usize> {
        let mut t = SumTree::new(priorities.len().next_power_of_two()).unwrap();
        for (i, &p) in priorities.iter().enumerate() {
            t.push(i, p).unwrap();
        }
        t
    }

    /// Recomputes every internal node from the leaves.
    fn brute_force_sums(tree: &SumTree<usize>) -> Vec<f64> {
        let cap = tree.capacity();
        let mut sums = tree.node_sums().to_vec();
        for node in (1..cap).rev() {
            let mut lo = node;
            let mut hi = node;
            while lo < cap {
                lo *= 2;
                hi = hi * 2 + 1;
            }
            sums[node] = (lo..=hi).map(|n| tree.node_sums()[n]).sum();
        }
        sums
    }

    #[test]
    fn root_holds_the_total() {
        let t = tree_of(&[1.0, 2.0, 3.0]);
        assert_eq!(t.total(), 6.0);
        assert_eq!(t.max_priority(), 3.0);
    }

    #[test]
    fn samples_follow_cumulative_intervals() {
        let t = tree_of(&[1.0, 2.0, 3.0]);
        assert_eq!(t.sample(0.5).unwrap().0, 0);
        assert_eq!(t.sample(1.5).unwrap().0, 1);
        assert_eq!(t.sample(1.0).unwrap().0, 1);
        assert_eq!(t.sample(3.0).unwrap().0, 2);
        assert_eq!(t.sample(5.999).unwrap().0, 2);
        assert!(t.sample(6.0).is_err());
        assert!(t.sample(-0.1).is_err());
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut t = SumTree::new(4).unwrap();
        for i in 0..5 {
            t.push(i, 1.0 + i as f64).unwrap();
        }
        assert_eq!(t.len(), 4);
        assert_eq!(t.get(0), Some(&4));
        assert_eq!(t.total(), 5.0 + 2.0 + 3.0 + 4.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SumTree::<u8>::new(6).is_err());
        assert!(SumTree::<u8>::new(0).is_err());
        let mut t = SumTree::new(2).unwrap();
        assert!(t.push(1u8, -1.0).is_err());
        assert!(t.push(1u8, f64::NAN).is_err());
        assert!(t.update(1, 1.0).is_err());
        assert!(t.sample(0.0).is_err());
    }

    #[test]
    fn zero_priority_leaves_are_skipped() {
        let t = tree_of(&[0.0, 2.0, 0.0, 1.0]);
        assert_eq!(t.sample(0.0).unwrap().0, 1);
        assert_eq!(t.sample(2.0).unwrap().0, 3);
    }

    proptest! {
        #[test]
        fn internal_nodes_match_resummation(
            ops in prop::collection::vec((any::<bool>(), 0usize..16, 0.0f64..100.0), 1..200)
        ) {
            let mut t = SumTree::new(16).unwrap();
            for (is_push, leaf, p) in ops {
                if is_push || t.is_empty() {
                    t.push(leaf, p).unwrap();
                } else {
                    t.update(leaf % t.len(), p).unwrap();
                }
                let oracle = brute_force_sums(&t);
                for node in 1..16 {
                    prop_assert!((t.node_sums()[node] - oracle[node]).abs() <= 1e-9);
                }
            }
        }
    }
}
