//! Weighted road graphs: a line-oriented text format, a validating loader
//! and single-source shortest paths.
//!
//! Format, one record per line (`#` starts a comment, blank lines ignored):
//!
//! ```text
//! N <id> <x> <y>              node with integer id and planar coordinates
//! E <from> <to> <length> [D]  edge; undirected unless the trailing D is present
//! ```
//!
//! Node ids are unsigned 32-bit integers. Edge lengths must be positive.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::path::Path;

use crate::domain::{NodeId, Position};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("graph is not strongly connected; nodes outside the main component: {unreachable:?}")]
    DisconnectedGraph { unreachable: Vec<NodeId> },
    #[error("graph has no nodes")]
    Empty,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {to} is unreachable from node {from}")]
    Unreachable { from: NodeId, to: NodeId },
    #[error("cannot read graph file: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub length: f64,
    pub directed: bool,
}

/// Immutable weighted graph. Nodes are kept in id order; adjacency lists are
/// indexed by dense position.
#[derive(Debug, Clone)]
pub struct RoadGraph {
    ids: Vec<NodeId>,
    positions: Vec<Position>,
    index: BTreeMap<NodeId, usize>,
    edges: Vec<Edge>,
    out_adj: Vec<Vec<(usize, f64)>>,
    in_adj: Vec<Vec<(usize, f64)>>,
    diameter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPath {
    pub distance: f64,
    pub nodes: Vec<NodeId>,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra over dense adjacency. Returns distances and predecessor links;
/// among equal-length alternatives the predecessor with the smaller node id
/// wins, which makes reconstructed paths deterministic.
fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse(HeapItem { dist: 0.0, node: source }));
    while let Some(Reverse(HeapItem { dist: d, node: u })) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in &adj[u] {
            let nd = d + w;
            let better = nd < dist[v] || (nd == dist[v] && !done[v] && pred[v].is_some_and(|p| u < p));
            if better {
                dist[v] = nd;
                pred[v] = Some(u);
                heap.push(Reverse(HeapItem { dist: nd, node: v }));
            }
        }
    }
    (dist, pred)
}

fn reachable(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![source];
    seen[source] = true;
    while let Some(u) = stack.pop() {
        for &(v, _) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

impl RoadGraph {
    /// Builds and validates a graph. Every node must be able to reach every
    /// other node.
    pub fn new(nodes: Vec<(NodeId, Position)>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        if nodes.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut sorted = nodes;
        sorted.sort_by_key(|(id, _)| *id);
        let mut index = BTreeMap::new();
        for (i, (id, _)) in sorted.iter().enumerate() {
            if index.insert(*id, i).is_some() {
                return Err(GraphError::Parse { line: 0, message: format!("duplicate node {id}") });
            }
        }
        let n = sorted.len();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for e in &edges {
            let a = *index.get(&e.from).ok_or(GraphError::UnknownNode(e.from))?;
            let b = *index.get(&e.to).ok_or(GraphError::UnknownNode(e.to))?;
            if !(e.length > 0.0 && e.length.is_finite()) {
                return Err(GraphError::Parse {
                    line: 0,
                    message: format!("edge {}->{} has non-positive length {}", e.from, e.to, e.length),
                });
            }
            out_adj[a].push((b, e.length));
            in_adj[b].push((a, e.length));
            if !e.directed {
                out_adj[b].push((a, e.length));
                in_adj[a].push((b, e.length));
            }
        }
        let ids: Vec<NodeId> = sorted.iter().map(|(id, _)| *id).collect();
        let positions = sorted.iter().map(|(_, p)| *p).collect();

        let fwd = reachable(&out_adj, 0);
        let bwd = reachable(&in_adj, 0);
        let unreachable: Vec<NodeId> = (0..n).filter(|&i| !(fwd[i] && bwd[i])).map(|i| ids[i]).collect();
        if !unreachable.is_empty() {
            return Err(GraphError::DisconnectedGraph { unreachable });
        }

        let mut graph = Self { ids, positions, index, edges, out_adj, in_adj, diameter: 0.0 };
        graph.diameter = (0..n)
            .map(|s| dijkstra(&graph.out_adj, s).0.into_iter().fold(0.0, f64::max))
            .fold(0.0, f64::max);
        Ok(graph)
    }

    pub fn parse(source: &str) -> Result<Self, GraphError> {
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        for (i, raw) in source.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| GraphError::Parse { line: line_no, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("`{s}` is not a number")));
            let id = |s: &str| s.parse::<NodeId>().map_err(|_| err(format!("`{s}` is not a node id")));
            match fields.as_slice() {
                ["N", nid, x, y] => {
                    let p = Position::new(num(x)?, num(y)?).map_err(|e| err(e.to_string()))?;
                    nodes.push((id(nid)?, p));
                }
                ["E", from, to, len, rest @ ..] => {
                    let directed = match rest {
                        [] => false,
                        ["D"] => true,
                        _ => return Err(err(format!("unexpected trailing fields {rest:?}"))),
                    };
                    let length = num(len)?;
                    if !(length > 0.0) {
                        return Err(err(format!("edge length must be positive, got {length}")));
                    }
                    edges.push(Edge { from: id(from)?, to: id(to)?, length, directed });
                }
                _ => return Err(err(format!("unrecognized record `{line}`"))),
            }
        }
        Self::new(nodes, edges)
    }

    pub fn load(path: &Path) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path).map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn position(&self, id: NodeId) -> Option<Position> {
        self.index.get(&id).map(|&i| self.positions[i])
    }

    /// Largest shortest-path distance between any ordered pair of nodes.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    fn idx(&self, id: NodeId) -> Result<usize, GraphError> {
        self.index.get(&id).copied().ok_or(GraphError::UnknownNode(id))
    }

    pub fn shortest_path(&self, from: NodeId, to: NodeId) -> Result<ShortestPath, GraphError> {
        let (s, t) = (self.idx(from)?, self.idx(to)?);
        let (dist, pred) = dijkstra(&self.out_adj, s);
        if dist[t].is_infinite() {
            return Err(GraphError::Unreachable { from, to });
        }
        let mut nodes = vec![self.ids[t]];
        let mut cur = t;
        while let Some(p) = pred[cur] {
            nodes.push(self.ids[p]);
            cur = p;
        }
        nodes.reverse();
        Ok(ShortestPath { distance: dist[t], nodes })
    }

    /// Distance from every node to `target`, keyed by dense node order
    /// (same order as [`RoadGraph::node_ids`]).
    pub fn distances_to(&self, target: NodeId) -> Result<Vec<f64>, GraphError> {
        Ok(dijkstra(&self.in_adj, self.idx(target)?).0)
    }

    pub(crate) fn dense_index(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }
}

impl fmt::Display for RoadGraph {
    /// Writes the graph back in the text format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (id, p) in self.ids.iter().zip(&self.positions) {
            writeln!(f, "N {id} {} {}", p.x, p.y)?;
        }
        for e in &self.edges {
            write!(f, "E {} {} {}", e.from, e.to, e.length)?;
            if e.directed {
                write!(f, " D")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Position {
        Position { x, y }
    }

    #[test]
    fn parses_format() {
        let g = RoadGraph::parse(
            "# toy\nN 1 0 0\nN 2 1 0   # second\n\nE 1 2 5\n",
        )
        .unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.shortest_path(1, 2).unwrap().distance, 5.0);
        assert_eq!(g.shortest_path(2, 1).unwrap().distance, 5.0);
        assert_eq!(g.shortest_path(1, 1).unwrap(), ShortestPath { distance: 0.0, nodes: vec![1] });
        assert_eq!(g.diameter(), 5.0);
    }

    #[test]
    fn diamond_beats_direct_edge() {
        let g = RoadGraph::parse("N 0 0 0\nN 1 1 1\nN 2 1 -1\nN 3 2 0\nE 0 1 1\nE 0 2 1\nE 1 3 1\nE 2 3 1\nE 0 3 2.5\n")
            .unwrap();
        let sp = g.shortest_path(0, 3).unwrap();
        assert_eq!(sp.distance, 2.0);
        // tie between 0-1-3 and 0-2-3 resolved towards the smaller id
        assert_eq!(sp.nodes, vec![0, 1, 3]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match RoadGraph::parse("N 0 0 0\nX 1 2\n") {
            Err(GraphError::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match RoadGraph::parse("N 0 0 0\nN 1 0 1\nE 0 1 -3\n") {
            Err(GraphError::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(RoadGraph::parse("N 0 0 0\nE 0 1 1\n"), Err(GraphError::UnknownNode(1))));
        assert!(matches!(RoadGraph::parse(""), Err(GraphError::Empty)));
    }

    #[test]
    fn disconnected_graph_lists_component() {
        let err = RoadGraph::parse("N 0 0 0\nN 1 1 0\nN 2 2 0\nN 3 3 0\nE 0 1 1\nE 2 3 1\n").unwrap_err();
        assert_eq!(err, GraphError::DisconnectedGraph { unreachable: vec![2, 3] });
        // one-way street makes node 1 a sink
        let err = RoadGraph::parse("N 0 0 0\nN 1 1 0\nE 0 1 1 D\n").unwrap_err();
        assert_eq!(err, GraphError::DisconnectedGraph { unreachable: vec![1] });
    }

    #[test]
    fn directed_edges_are_respected() {
        let g = RoadGraph::new(
            vec![(0, p(0.0, 0.0)), (1, p(1.0, 0.0)), (2, p(2.0, 0.0))],
            vec![
                Edge { from: 0, to: 1, length: 1.0, directed: true },
                Edge { from: 1, to: 2, length: 1.0, directed: true },
                Edge { from: 2, to: 0, length: 10.0, directed: true },
            ],
        )
        .unwrap();
        assert_eq!(g.shortest_path(0, 2).unwrap().distance, 2.0);
        assert_eq!(g.shortest_path(2, 1).unwrap().distance, 11.0);
        assert_eq!(g.diameter(), 11.0);
        let to_one = g.distances_to(1).unwrap();
        assert_eq!(to_one, vec![1.0, 0.0, 11.0]);
    }

    #[test]
    fn display_round_trips() {
        let src = "N 0 0 0\nN 1 1 1\nE 0 1 1.5\nE 1 0 2 D\n";
        let g = RoadGraph::parse(src).unwrap();
        let again = RoadGraph::parse(&g.to_string()).unwrap();
        assert_eq!(again.to_string(), g.to_string());
    }
}
