use super::{Filtration, PersistenceDiagram};

/// Disjoint sets with path halving. The root of a merged set is the lower of
/// the two roots, which realizes the elder rule when every birth is 0.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns `false` if already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (keep, absorb) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[absorb] = keep;
        true
    }
}

/// Order-0 diagram. Every merge kills one component at the edge value;
/// surviving components are truncated at `max_filtration`.
pub fn diagram_h0(f: &Filtration) -> PersistenceDiagram {
    let m = f.point_count();
    let mut uf = UnionFind::new(m);
    let mut pairs = Vec::with_capacity(m);
    for e in &f.edges {
        if uf.union(e.i, e.j) {
            pairs.push((0.0, e.value));
        }
    }
    let components = m - pairs.len();
    pairs.extend(std::iter::repeat_n((0.0, f.max_filtration), components));
    PersistenceDiagram::new(0, pairs, f.max_filtration)
}

/// Indices into `f.edges` of the edges that merge two components.
pub(crate) fn merging_edges(f: &Filtration) -> Vec<bool> {
    let mut uf = UnionFind::new(f.point_count());
    f.edges.iter().map(|e| uf.union(e.i, e.j)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_find_keeps_lower_root() {
        let mut uf = UnionFind::new(4);
        assert!(uf.union(3, 2));
        assert_eq!(uf.find(3), 2);
        assert!(uf.union(3, 0));
        assert_eq!(uf.find(2), 0);
        assert!(!uf.union(0, 2));
    }
}
