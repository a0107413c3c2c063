use std::collections::{BTreeMap, BTreeSet};

use super::RouteView;
use crate::sim::NodeId;

/// Directed adjacency: `u -> {v}` means `u` can transmit to `v`.
pub type Adjacency = BTreeMap<NodeId, BTreeSet<NodeId>>;

/// Hop-count shortest paths from `me`. Among equal-length paths the one with
/// the lowest first hop wins, so the table is a pure function of the graph.
pub fn bfs_routes(me: NodeId, adj: &Adjacency) -> BTreeMap<NodeId, RouteView> {
    let mut routes: BTreeMap<NodeId, RouteView> = BTreeMap::new();
    let mut frontier: Vec<NodeId> = Vec::new();
    if let Some(first) = adj.get(&me) {
        for &n in first {
            if n != me {
                routes.insert(
                    n,
                    RouteView {
                        next_hop: n,
                        hops: 1,
                    },
                );
                frontier.push(n);
            }
        }
    }
    let mut hops = 1;
    while !frontier.is_empty() {
        hops += 1;
        let mut layer: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        for u in &frontier {
            let via = routes[u].next_hop;
            let Some(out) = adj.get(u) else { continue };
            for &v in out {
                if v == me || routes.contains_key(&v) {
                    continue;
                }
                layer
                    .entry(v)
                    .and_modify(|nh| *nh = (*nh).min(via))
                    .or_insert(via);
            }
        }
        frontier = layer.keys().copied().collect();
        for (v, next_hop) in layer {
            routes.insert(v, RouteView { next_hop, hops });
        }
    }
    routes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn undirected(edges: &[(u32, u32)]) -> Adjacency {
        let mut adj = Adjacency::new();
        for &(a, b) in edges {
            adj.entry(NodeId(a)).or_default().insert(NodeId(b));
            adj.entry(NodeId(b)).or_default().insert(NodeId(a));
        }
        adj
    }

    #[test]
    fn ring_routes_prefer_lowest_next_hop() {
        let adj = undirected(&[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        let r = bfs_routes(NodeId(0), &adj);
        assert_eq!(
            r[&NodeId(3)],
            RouteView {
                next_hop: NodeId(1),
                hops: 3
            }
        );
        assert_eq!(
            r[&NodeId(4)],
            RouteView {
                next_hop: NodeId(5),
                hops: 2
            }
        );
        assert_eq!(r.len(), 5);
    }

    #[test]
    fn unreachable_nodes_are_absent() {
        let adj = undirected(&[(0, 1), (2, 3)]);
        let r = bfs_routes(NodeId(0), &adj);
        assert_eq!(r.len(), 1);
        assert!(!r.contains_key(&NodeId(3)));
    }
}
