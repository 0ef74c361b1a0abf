/// Disjoint-set forest with path compression and union by rank.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
    components: usize,
}

impl DisjointSets {
    /// `n` singleton sets `{0}, {1}, ..., {n - 1}`.
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            rank: vec![0; n],
            components: n,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Merges the sets holding `a` and `b`. Returns `false` if they were
    /// already the same set.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        self.components -= 1;
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_joins_sets() {
        let mut ds = DisjointSets::new(4);
        assert!(ds.union(0, 1));
        assert_eq!(ds.find(0), ds.find(1));
        assert!(!ds.same(0, 2));
    }

    #[test]
    fn repeated_union_is_a_no_op() {
        let mut ds = DisjointSets::new(2);
        assert!(ds.union(0, 1));
        assert!(!ds.union(0, 1));
        assert!(!ds.union(1, 0));
        assert_eq!(ds.components(), 1);
    }

    #[test]
    fn n_minus_one_unions_leave_one_component() {
        let n = 50;
        let mut ds = DisjointSets::new(n);
        assert_eq!(ds.components(), n);
        // a scrambled chain
        let mut merged = 0;
        for i in 1..n {
            if ds.union((i * 7) % n, ((i + 1) * 7) % n) {
                merged += 1;
            }
        }
        assert_eq!(merged, n - 1);
        assert_eq!(ds.components(), 1);
        let root = ds.find(0);
        assert!((0..n).all(|x| ds.find(x) == root));
    }
}
