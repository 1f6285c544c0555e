//! Deterministic A* over small explicit graphs.
//!
//! Shared by the bubble roadmap and the PRM baselines; both search graphs
//! whose edge lengths are center-to-center Euclidean distances, so the
//! straight-line heuristic is consistent and close-on-pop is exact.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Min-heap entry ordered by f-score, ties broken by the smaller node index.
struct HeapEntry {
    f: f64,
    node: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.f == other.f && self.node == other.node
    }
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want the smallest f on top.
        other
            .f
            .partial_cmp(&self.f)
            .expect("finite f-scores")
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A* from `start` to `goal` over nodes `0..n`.
///
/// `neighbors(u, buf)` fills `buf` with `(v, edge_length)` pairs; `heuristic`
/// must be admissible and consistent. Returns the path cost and node sequence,
/// or `None` when the goal is unreachable.
pub fn astar<FN, FH>(
    n: usize,
    start: usize,
    goal: usize,
    neighbors: FN,
    heuristic: FH,
) -> Option<(f64, Vec<usize>)>
where
    FN: Fn(usize, &mut Vec<(usize, f64)>),
    FH: Fn(usize) -> f64,
{
    assert!(start < n && goal < n, "start/goal outside the graph");
    let mut g = vec![f64::INFINITY; n];
    let mut came_from = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let mut buf = Vec::new();

    g[start] = 0.0;
    open.push(HeapEntry { f: heuristic(start), node: start });
    while let Some(HeapEntry { node, .. }) = open.pop() {
        if closed[node] {
            continue;
        }
        closed[node] = true;
        if node == goal {
            let mut path = vec![goal];
            let mut cur = goal;
            while cur != start {
                cur = came_from[cur];
                path.push(cur);
            }
            path.reverse();
            return Some((g[goal], path));
        }
        buf.clear();
        neighbors(node, &mut buf);
        for &(next, len) in buf.iter() {
            debug_assert!(len >= 0.0 && len.is_finite());
            let cand = g[node] + len;
            if cand < g[next] {
                g[next] = cand;
                came_from[next] = node;
                open.push(HeapEntry { f: cand + heuristic(next), node: next });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_neighbors(side: usize) -> impl Fn(usize, &mut Vec<(usize, f64)>) {
        move |u, buf| {
            let (r, c) = (u / side, u % side);
            if c + 1 < side {
                buf.push((u + 1, 1.0));
            }
            if c > 0 {
                buf.push((u - 1, 1.0));
            }
            if r + 1 < side {
                buf.push((u + side, 1.0));
            }
            if r > 0 {
                buf.push((u - side, 1.0));
            }
        }
    }

    #[test]
    fn straight_line_on_a_grid() {
        let side = 5;
        let (cost, path) =
            astar(side * side, 0, 4, grid_neighbors(side), |_| 0.0).unwrap();
        assert_eq!(cost, 4.0);
        assert_eq!(path.len(), 5);
        assert_eq!(path[0], 0);
        assert_eq!(path[4], 4);
    }

    #[test]
    fn unreachable_is_none() {
        // Two isolated nodes.
        assert!(astar(2, 0, 1, |_, _| {}, |_| 0.0).is_none());
    }

    #[test]
    fn matches_petgraph_dijkstra_on_random_graphs() {
        use petgraph::algo::dijkstra;
        use petgraph::graph::UnGraph;
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = 40;
            let mut edges: Vec<(usize, usize, f64)> = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.12) {
                        edges.push((u, v, rng.gen_range(0.1..2.0)));
                    }
                }
            }
            let adj = {
                let mut adj = vec![Vec::new(); n];
                for &(u, v, w) in &edges {
                    adj[u].push((v, w));
                    adj[v].push((u, w));
                }
                adj
            };
            let result = astar(n, 0, n - 1, |u, buf| buf.extend(&adj[u]), |_| 0.0);

            let mut pg = UnGraph::<(), f64>::new_undirected();
            let nodes: Vec<_> = (0..n).map(|_| pg.add_node(())).collect();
            for &(u, v, w) in &edges {
                pg.add_edge(nodes[u], nodes[v], w);
            }
            let dist = dijkstra(&pg, nodes[0], Some(nodes[n - 1]), |e| *e.weight());
            match (result, dist.get(&nodes[n - 1])) {
                (Some((cost, path)), Some(&expect)) => {
                    assert!((cost - expect).abs() < 1e-9, "{cost} vs {expect}");
                    // The reported path must realize the reported cost.
                    let mut acc = 0.0;
                    for w in path.windows(2) {
                        acc += adj[w[0]]
                            .iter()
                            .find(|&&(v, _)| v == w[1])
                            .map(|&(_, len)| len)
                            .unwrap();
                    }
                    assert!((acc - cost).abs() < 1e-9);
                }
                (None, None) => {}
                (a, b) => panic!("disagreement: {:?} vs {:?}", a.map(|x| x.0), b),
            }
        }
    }
}
