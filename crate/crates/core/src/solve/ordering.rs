//! Fill-reducing orderings by graph nested dissection.
//!
//! Separators come from breadth-first level structures rooted at a
//! pseudo-peripheral node, so no coordinates are needed. Rows whose degree
//! exceeds a density threshold (mean constraints, Lagrange multipliers) are
//! removed from the graph and ordered last.

use crate::sparse::SparseOperator;

const LEAF_SIZE: usize = 8;

/// Elimination order (new position -> original index) for a symmetric
/// pattern, grouping indices into the given blocks. Every index must appear
/// in exactly one block; indices inside a block keep their given order.
pub fn nested_dissection(pattern: &SparseOperator, blocks: &[Vec<usize>]) -> Vec<usize> {
    let n = pattern.nrows();
    let dense_threshold = 16.max((10.0 * (n as f64).sqrt()) as usize);
    let dense: Vec<bool> = (0..n)
        .map(|i| pattern.row_ptr()[i + 1] - pattern.row_ptr()[i] > dense_threshold)
        .collect();

    let mut block_of = vec![usize::MAX; n];
    let mut kept: Vec<Vec<usize>> = Vec::with_capacity(blocks.len());
    for b in blocks {
        let members: Vec<usize> = b.iter().copied().filter(|&i| !dense[i]).collect();
        if members.is_empty() {
            continue;
        }
        for &i in &members {
            assert_eq!(block_of[i], usize::MAX, "index {i} appears in two blocks");
            block_of[i] = kept.len();
        }
        kept.push(members);
    }
    for i in 0..n {
        assert!(dense[i] || block_of[i] != usize::MAX, "index {i} is in no block");
    }

    // block adjacency in CSR form
    let nb = kept.len();
    let mut adj_sets: Vec<Vec<usize>> = vec![Vec::new(); nb];
    for (b, members) in kept.iter().enumerate() {
        for &i in members {
            for (j, _) in pattern.row(i) {
                if dense[j] {
                    continue;
                }
                let c = block_of[j];
                if c != b {
                    adj_sets[b].push(c);
                }
            }
        }
        adj_sets[b].sort_unstable();
        adj_sets[b].dedup();
    }
    let graph = Graph::from_sets(&adj_sets);

    let mut worker = Dissector::new(&graph);
    let all: Vec<usize> = (0..nb).collect();
    let mut block_order = Vec::with_capacity(nb);
    worker.dissect(all, &mut block_order);

    let mut order = Vec::with_capacity(n);
    for b in block_order {
        order.extend_from_slice(&kept[b]);
    }
    order.extend((0..n).filter(|&i| dense[i]));
    debug_assert_eq!(order.len(), n);
    order
}

/// Nested dissection with every index in its own block.
pub fn nested_dissection_scalar(pattern: &SparseOperator) -> Vec<usize> {
    let blocks: Vec<Vec<usize>> = (0..pattern.nrows()).map(|i| vec![i]).collect();
    nested_dissection(pattern, &blocks)
}

struct Graph {
    ptr: Vec<usize>,
    adj: Vec<usize>,
}

impl Graph {
    fn from_sets(sets: &[Vec<usize>]) -> Self {
        let mut ptr = Vec::with_capacity(sets.len() + 1);
        let mut adj = Vec::new();
        ptr.push(0);
        for s in sets {
            adj.extend_from_slice(s);
            ptr.push(adj.len());
        }
        Self { ptr, adj }
    }

    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.ptr[v]..self.ptr[v + 1]]
    }

    fn len(&self) -> usize {
        self.ptr.len() - 1
    }
}

struct Dissector<'g> {
    g: &'g Graph,
    /// stamp marking membership of the current subproblem
    member: Vec<usize>,
    /// BFS level, valid when `seen == stamp`
    level: Vec<usize>,
    seen: Vec<usize>,
    stamp: usize,
}

impl<'g> Dissector<'g> {
    fn new(g: &'g Graph) -> Self {
        let n = g.len();
        Self {
            g,
            member: vec![0; n],
            level: vec![0; n],
            seen: vec![0; n],
            stamp: 0,
        }
    }

    fn next_stamp(&mut self) -> usize {
        self.stamp += 1;
        self.stamp
    }

    fn dissect(&mut self, nodes: Vec<usize>, out: &mut Vec<usize>) {
        if nodes.len() <= LEAF_SIZE {
            out.extend(nodes);
            return;
        }
        let set = self.next_stamp();
        for &v in &nodes {
            self.member[v] = set;
        }
        for comp in self.components(&nodes, set) {
            self.dissect_connected(comp, out);
        }
    }

    fn components(&mut self, nodes: &[usize], set: usize) -> Vec<Vec<usize>> {
        let s = self.next_stamp();
        let mut comps = Vec::new();
        for &start in nodes {
            if self.seen[start] == s {
                continue;
            }
            let mut comp = vec![start];
            self.seen[start] = s;
            let mut head = 0;
            while head < comp.len() {
                let v = comp[head];
                head += 1;
                for &w in self.g.neighbors(v) {
                    if self.member[w] == set && self.seen[w] != s {
                        self.seen[w] = s;
                        comp.push(w);
                    }
                }
            }
            comps.push(comp);
        }
        comps
    }

    /// BFS from `root` inside the current member set; returns nodes grouped
    /// by level.
    fn levels(&mut self, root: usize, set: usize) -> Vec<Vec<usize>> {
        let s = self.next_stamp();
        let mut levels = vec![vec![root]];
        self.seen[root] = s;
        self.level[root] = 0;
        loop {
            let mut next = Vec::new();
            for &v in levels.last().unwrap() {
                for &w in self.g.neighbors(v) {
                    if self.member[w] == set && self.seen[w] != s {
                        self.seen[w] = s;
                        self.level[w] = levels.len();
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            levels.push(next);
        }
        levels
    }

    fn dissect_connected(&mut self, nodes: Vec<usize>, out: &mut Vec<usize>) {
        if nodes.len() <= LEAF_SIZE {
            out.extend(nodes);
            return;
        }
        let set = self.next_stamp();
        for &v in &nodes {
            self.member[v] = set;
        }

        // pseudo-peripheral root
        let mut root = nodes[0];
        let mut levels = self.levels(root, set);
        for _ in 0..8 {
            let last = levels.last().unwrap();
            let cand = *last
                .iter()
                .min_by_key(|&&v| (self.degree_in(v, set), v))
                .unwrap();
            let trial = self.levels(cand, set);
            if trial.len() > levels.len() {
                root = cand;
                levels = trial;
            } else {
                break;
            }
        }
        let _ = root;
        if levels.len() < 3 {
            out.extend(nodes);
            return;
        }

        let half = nodes.len() / 2;
        let mut acc = 0;
        let mut m = 1;
        for (i, lv) in levels.iter().enumerate() {
            acc += lv.len();
            if acc >= half {
                m = i;
                break;
            }
        }
        let m = m.clamp(1, levels.len() - 2);

        // refresh level stamps for the chosen structure
        let s = self.next_stamp();
        for (i, lv) in levels.iter().enumerate() {
            for &v in lv {
                self.seen[v] = s;
                self.level[v] = i;
            }
        }
        let mut sep = Vec::new();
        let mut part_a: Vec<usize> = levels[..m].iter().flatten().copied().collect();
        for &v in &levels[m] {
            let touches_next = self
                .g
                .neighbors(v)
                .iter()
                .any(|&w| self.member[w] == set && self.seen[w] == s && self.level[w] == m + 1);
            if touches_next {
                sep.push(v);
            } else {
                part_a.push(v);
            }
        }
        let part_b: Vec<usize> = levels[m + 1..].iter().flatten().copied().collect();

        self.dissect(part_a, out);
        self.dissect(part_b, out);
        out.extend(sep);
    }

    fn degree_in(&self, v: usize, set: usize) -> usize {
        self.g
            .neighbors(v)
            .iter()
            .filter(|&&w| self.member[w] == set)
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_laplacian(n: usize) -> SparseOperator {
        let id = |i: usize, j: usize| (i % n) + n * (j % n);
        let mut t = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let c = id(i, j);
                t.push((c, c, 4.0));
                for nb in [id(i + 1, j), id(i + n - 1, j), id(i, j + 1), id(i, j + n - 1)] {
                    t.push((c, nb, -1.0));
                }
            }
        }
        SparseOperator::from_triplets(n * n, n * n, &t)
    }

    #[test]
    fn ordering_is_a_permutation() {
        let a = grid_laplacian(12);
        let mut p = nested_dissection_scalar(&a);
        p.sort();
        assert_eq!(p, (0..144).collect::<Vec<_>>());
    }

    #[test]
    fn dense_rows_go_last() {
        let n = 400;
        let mut t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        for i in 0..n - 1 {
            t.push((i, n - 1, 1.0));
            t.push((n - 1, i, 1.0));
        }
        for i in 0..n - 2 {
            t.push((i, i + 1, 0.5));
            t.push((i + 1, i, 0.5));
        }
        let a = SparseOperator::from_triplets(n, n, &t);
        let p = nested_dissection_scalar(&a);
        assert_eq!(*p.last().unwrap(), n - 1);
    }

    #[test]
    fn blocks_stay_contiguous() {
        let a = grid_laplacian(6);
        let blocks: Vec<Vec<usize>> = (0..18).map(|b| vec![2 * b, 2 * b + 1]).collect();
        let p = nested_dissection(&a, &blocks);
        for w in p.chunks(2) {
            assert_eq!(w[0] / 2, w[1] / 2);
            assert_eq!(w[0] + 1, w[1]);
        }
    }
}
