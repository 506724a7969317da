//! Simple undirected neighbor graphs over a fixed, labeled vertex set.
//!
//! Followers are labeled `1..=n`. Leader-following runs add the leader as
//! vertex `0`, so their vertex set is `0..=n`. Every graph keeps its edge list
//! sorted and deduplicated, which makes equality plain edge-set equality.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signals::SwitchingSignal;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("a vertex set needs at least one follower")]
    NoAgents,
    #[error("vertex {vertex} is not in {vertices}")]
    UnknownVertex { vertex: usize, vertices: VertexSet },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("vertex sets differ: {left} vs {right}")]
    VertexSetMismatch { left: VertexSet, right: VertexSet },
    #[error("union of an empty sequence of graphs")]
    EmptyUnion,
    #[error("invalid time window [{from}, {to})")]
    InvalidWindow { from: usize, to: usize },
    #[error("edge list line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// The labeled vertex set `{1..n}` or, for leader runs, `{0..n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexSet {
    followers: usize,
    leader: bool,
}

impl VertexSet {
    /// Followers `1..=n`.
    pub fn new(followers: usize) -> Result<Self, GraphError> {
        if followers == 0 {
            return Err(GraphError::NoAgents);
        }
        Ok(Self {
            followers,
            leader: false,
        })
    }

    /// Leader `0` plus followers `1..=n`.
    pub fn with_leader(followers: usize) -> Result<Self, GraphError> {
        let mut vs = Self::new(followers)?;
        vs.leader = true;
        Ok(vs)
    }

    pub fn followers(&self) -> usize {
        self.followers
    }

    pub fn has_leader(&self) -> bool {
        self.leader
    }

    /// Total number of vertices, leader included.
    pub fn len(&self) -> usize {
        self.followers + usize::from(self.leader)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> usize {
        if self.leader {
            0
        } else {
            1
        }
    }

    pub fn last(&self) -> usize {
        self.followers
    }

    pub fn contains(&self, v: usize) -> bool {
        v >= self.first() && v <= self.last()
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<usize> {
        self.first()..=self.last()
    }

    pub fn follower_vertices(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.followers
    }

    /// Position of `v` in slot-indexed storage.
    pub fn slot(&self, v: usize) -> usize {
        v - self.first()
    }

    pub fn vertex_at(&self, slot: usize) -> usize {
        slot + self.first()
    }

    pub(crate) fn check(&self, v: usize) -> Result<(), GraphError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(GraphError::UnknownVertex {
                vertex: v,
                vertices: *self,
            })
        }
    }
}

impl fmt::Display for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},…,{}}}", self.first(), self.last())
    }
}

/// An unordered vertex pair, stored with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    lo: usize,
    hi: usize,
}

impl Edge {
    pub fn new(i: usize, j: usize) -> Result<Self, GraphError> {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => Ok(Self { lo: i, hi: j }),
            std::cmp::Ordering::Greater => Ok(Self { lo: j, hi: i }),
            std::cmp::Ordering::Equal => Err(GraphError::SelfLoop(i)),
        }
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn touches(&self, v: usize) -> bool {
        self.lo == v || self.hi == v
    }

    pub fn other(&self, v: usize) -> Option<usize> {
        if self.lo == v {
            Some(self.hi)
        } else if self.hi == v {
            Some(self.lo)
        } else {
            None
        }
    }
}

/// One time slice of a switching signal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NeighborGraph {
    vertices: VertexSet,
    edges: Vec<Edge>,
}

impl NeighborGraph {
    pub fn empty(vertices: VertexSet) -> Self {
        Self {
            vertices,
            edges: Vec::new(),
        }
    }

    pub fn from_edges<I>(vertices: VertexSet, pairs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut edges = Vec::new();
        for (i, j) in pairs {
            vertices.check(i)?;
            vertices.check(j)?;
            edges.push(Edge::new(i, j)?);
        }
        Ok(Self::from_sorted(vertices, edges))
    }

    fn from_sorted(vertices: VertexSet, mut edges: Vec<Edge>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        Self { vertices, edges }
    }

    pub fn complete(vertices: VertexSet) -> Self {
        let edges = vertices
            .iter()
            .flat_map(|i| (i + 1..=vertices.last()).map(move |j| Edge { lo: i, hi: j }))
            .collect();
        Self { vertices, edges }
    }

    /// Star with `center` joined to every other vertex.
    pub fn star(vertices: VertexSet, center: usize) -> Result<Self, GraphError> {
        vertices.check(center)?;
        let pairs = vertices.iter().filter(|&v| v != center).map(|v| (center, v));
        Self::from_edges(vertices, pairs)
    }

    /// Path through the vertices in label order.
    pub fn path(vertices: VertexSet) -> Self {
        let edges = vertices
            .iter()
            .zip(vertices.iter().skip(1))
            .map(|(i, j)| Edge { lo: i, hi: j })
            .collect();
        Self { vertices, edges }
    }

    /// Path closed back to the first vertex (a path when there are fewer than 3 vertices).
    pub fn cycle(vertices: VertexSet) -> Self {
        let mut g = Self::path(vertices);
        if vertices.len() >= 3 {
            g.edges.push(Edge {
                lo: vertices.first(),
                hi: vertices.last(),
            });
            g.edges.sort_unstable();
        }
        g
    }

    pub fn vertices(&self) -> VertexSet {
        self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        Edge::new(i, j)
            .map(|e| self.edges.binary_search(&e).is_ok())
            .unwrap_or(false)
    }

    pub fn neighbors(&self, i: usize) -> Result<BTreeSet<usize>, GraphError> {
        self.vertices.check(i)?;
        Ok(self.edges.iter().filter_map(|e| e.other(i)).collect())
    }

    pub fn degree(&self, i: usize) -> Result<usize, GraphError> {
        self.vertices.check(i)?;
        Ok(self.edges.iter().filter(|e| e.touches(i)).count())
    }

    /// Neighbor lists indexed by slot (see [`VertexSet::slot`]), each ascending.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            adj[self.vertices.slot(e.lo)].push(e.hi);
            adj[self.vertices.slot(e.hi)].push(e.lo);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn union_with(&self, other: &NeighborGraph) -> Result<NeighborGraph, GraphError> {
        self.same_vertices(other)?;
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        Ok(Self::from_sorted(self.vertices, edges))
    }

    pub fn is_subgraph_of(&self, other: &NeighborGraph) -> bool {
        self.vertices == other.vertices
            && self
                .edges
                .iter()
                .all(|e| other.edges.binary_search(e).is_ok())
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().len() == 1
    }

    pub fn connected_components(&self) -> VertexPartition {
        let adj = self.adjacency();
        let vs = self.vertices;
        let mut seen = vec![false; vs.len()];
        let mut blocks = Vec::new();
        for start in vs.iter() {
            if seen[vs.slot(start)] {
                continue;
            }
            seen[vs.slot(start)] = true;
            let mut block = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[vs.slot(v)] {
                    if !seen[vs.slot(w)] {
                        seen[vs.slot(w)] = true;
                        block.push(w);
                        queue.push_back(w);
                    }
                }
            }
            block.sort_unstable();
            blocks.push(block);
        }
        VertexPartition { vertices: vs, blocks }
    }

    /// Whether some edge joins a vertex of `a` to a vertex of `b`.
    pub fn joins(&self, a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> bool {
        self.edges.iter().any(|e| {
            (a.contains(&e.lo) && b.contains(&e.hi)) || (a.contains(&e.hi) && b.contains(&e.lo))
        })
    }

    /// Subgraph induced on `keep`, relabeled `1..=keep.len()` in ascending order.
    pub fn induced(&self, keep: &[usize]) -> Result<NeighborGraph, GraphError> {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        for &v in &keep {
            self.vertices.check(v)?;
        }
        let vs = VertexSet::new(keep.len())?;
        let label = |v: usize| keep.binary_search(&v).ok().map(|k| k + 1);
        let pairs: Vec<_> = self
            .edges
            .iter()
            .filter_map(|e| Some((label(e.lo)?, label(e.hi)?)))
            .collect();
        NeighborGraph::from_edges(vs, pairs)
    }

    fn same_vertices(&self, other: &NeighborGraph) -> Result<(), GraphError> {
        if self.vertices == other.vertices {
            Ok(())
        } else {
            Err(GraphError::VertexSetMismatch {
                left: self.vertices,
                right: other.vertices,
            })
        }
    }

    /// Fixture text form: header `n=<followers>` (with ` leader` appended for
    /// leader vertex sets), then one `i j` line per edge, ascending.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n={}", self.vertices.followers());
        if self.vertices.has_leader() {
            out.push_str(" leader");
        }
        out.push('\n');
        for e in &self.edges {
            out.push_str(&format!("{} {}\n", e.lo, e.hi));
        }
        out
    }

    pub fn parse_edge_list(text: &str) -> Result<NeighborGraph, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            message: "missing n=<count> header".into(),
        })?;
        let parse_err = |line: usize, message: String| GraphError::Parse { line, message };
        let mut words = header.split_whitespace();
        let count = words
            .next()
            .and_then(|w| w.strip_prefix("n="))
            .ok_or_else(|| parse_err(line, format!("expected n=<count>, got {header:?}")))?;
        let count: usize = count
            .parse()
            .map_err(|_| parse_err(line, format!("bad agent count {count:?}")))?;
        let vertices = match words.next() {
            None => VertexSet::new(count)?,
            Some("leader") => VertexSet::with_leader(count)?,
            Some(other) => return Err(parse_err(line, format!("unexpected token {other:?}"))),
        };
        let mut pairs = Vec::new();
        for (line, text) in lines {
            let nums: Vec<usize> = text
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| parse_err(line, format!("bad edge {text:?}")))?;
            match nums[..] {
                [i, j] => pairs.push((i, j)),
                _ => return Err(parse_err(line, format!("expected two vertices, got {text:?}"))),
            }
        }
        NeighborGraph::from_edges(vertices, pairs)
    }
}

/// Union of a nonempty sequence of graphs over one vertex set.
pub fn union<'a, I>(graphs: I) -> Result<NeighborGraph, GraphError>
where
    I: IntoIterator<Item = &'a NeighborGraph>,
{
    let mut iter = graphs.into_iter();
    let first = iter.next().ok_or(GraphError::EmptyUnion)?;
    let mut edges = first.edges.clone();
    for g in iter {
        first.same_vertices(g)?;
        edges.extend_from_slice(&g.edges);
    }
    Ok(NeighborGraph::from_sorted(first.vertices, edges))
}

/// Disjoint blocks covering the vertex set, ordered by smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexPartition {
    vertices: VertexSet,
    blocks: Vec<Vec<usize>>,
}

impl VertexPartition {
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn vertices(&self) -> VertexSet {
        self.vertices
    }

    pub fn block_of(&self, v: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.binary_search(&v).is_ok())
    }
}

/// Whether a limit graph was derived analytically or estimated from a finite tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Exact,
    Approximate,
}

/// Union of `sig(t)` over `t in [from, to_exclusive)`.
pub fn window_union(
    sig: &SwitchingSignal,
    from: usize,
    to_exclusive: usize,
) -> Result<NeighborGraph, GraphError> {
    if from >= to_exclusive {
        return Err(GraphError::InvalidWindow {
            from,
            to: to_exclusive,
        });
    }
    let mut edges = Vec::new();
    for t in from..to_exclusive {
        edges.extend_from_slice(sig.at(t).edges());
    }
    Ok(NeighborGraph::from_sorted(sig.vertices(), edges))
}

/// The graph of edges recurring at arbitrarily late times.
///
/// Generators with a known recurring edge set give it exactly. Otherwise the
/// result is the union over `[horizon / 2, horizon)`, flagged approximate.
pub fn limit_graph(sig: &SwitchingSignal, horizon: usize) -> (NeighborGraph, Exactness) {
    if let Some(g) = sig.recurring_edges() {
        return (g, Exactness::Exact);
    }
    let horizon = horizon.max(1);
    let g = window_union(sig, horizon / 2, horizon).expect("nonempty tail window");
    (g, Exactness::Approximate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vs(n: usize) -> VertexSet {
        VertexSet::new(n).unwrap()
    }

    #[test]
    fn neighbors_examples() {
        let g = NeighborGraph::empty(vs(3));
        assert!(g.neighbors(1).unwrap().is_empty());

        let g = NeighborGraph::from_edges(vs(3), [(1, 2), (2, 3)]).unwrap();
        assert_eq!(g.neighbors(2).unwrap(), BTreeSet::from([1, 3]));

        let g = NeighborGraph::star(vs(5), 1).unwrap();
        assert_eq!(g.neighbors(1).unwrap(), BTreeSet::from([2, 3, 4, 5]));
        assert_eq!(g.degree(1).unwrap(), 4);
    }

    #[test]
    fn neighbors_rejects_unknown_vertex() {
        let g = NeighborGraph::empty(vs(3));
        assert!(matches!(g.neighbors(0), Err(GraphError::UnknownVertex { .. })));
        assert!(matches!(g.neighbors(4), Err(GraphError::UnknownVertex { .. })));
    }

    #[test]
    fn construction_rejects_bad_edges() {
        assert_eq!(
            NeighborGraph::from_edges(vs(3), [(2, 2)]),
            Err(GraphError::SelfLoop(2))
        );
        assert!(NeighborGraph::from_edges(vs(3), [(1, 4)]).is_err());
        assert_eq!(VertexSet::new(0), Err(GraphError::NoAgents));
    }

    #[test]
    fn edges_are_canonical() {
        let a = NeighborGraph::from_edges(vs(3), [(2, 1), (3, 2), (1, 2)]).unwrap();
        let b = NeighborGraph::from_edges(vs(3), [(1, 2), (2, 3)]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.edge_count(), 2);
    }

    #[test]
    fn union_examples() {
        let e = NeighborGraph::empty(vs(4));
        assert_eq!(union([&e, &e]).unwrap(), e);

        let a = NeighborGraph::from_edges(vs(3), [(1, 2)]).unwrap();
        let b = NeighborGraph::from_edges(vs(3), [(2, 3)]).unwrap();
        assert_eq!(
            union([&a, &b]).unwrap(),
            NeighborGraph::from_edges(vs(3), [(1, 2), (2, 3)]).unwrap()
        );
    }

    #[test]
    fn union_of_single_edges_is_complete() {
        let singles: Vec<_> = (1..=4)
            .flat_map(|i| (i + 1..=4).map(move |j| (i, j)))
            .map(|p| NeighborGraph::from_edges(vs(4), [p]).unwrap())
            .collect();
        assert_eq!(singles.len(), 6);
        let u = union(&singles).unwrap();
        assert_eq!(u.edge_count(), 6);
        assert_eq!(u, NeighborGraph::complete(vs(4)));
    }

    #[test]
    fn union_errors() {
        assert_eq!(union(std::iter::empty()), Err(GraphError::EmptyUnion));
        let a = NeighborGraph::empty(vs(3));
        let b = NeighborGraph::empty(vs(4));
        assert!(matches!(
            union([&a, &b]),
            Err(GraphError::VertexSetMismatch { .. })
        ));
    }

    #[test]
    fn connectivity_examples() {
        assert!(NeighborGraph::empty(vs(1)).is_connected());
        assert!(!NeighborGraph::from_edges(vs(3), [(1, 2)]).unwrap().is_connected());
        assert!(NeighborGraph::path(vs(6)).is_connected());
    }

    #[test]
    fn component_examples() {
        let p = NeighborGraph::empty(vs(3)).connected_components();
        assert_eq!(p.blocks(), &[vec![1], vec![2], vec![3]]);

        let g = NeighborGraph::from_edges(vs(5), [(3, 4), (1, 2)]).unwrap();
        let p = g.connected_components();
        assert_eq!(p.blocks(), &[vec![1, 2], vec![3, 4], vec![5]]);
        assert_eq!(p.block_of(4), Some(1));
    }

    #[test]
    fn leader_vertex_sets() {
        let v = VertexSet::with_leader(3).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v.iter().collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        let star = NeighborGraph::star(v, 0).unwrap();
        assert!(star.is_connected());
        assert_eq!(star.neighbors(0).unwrap(), BTreeSet::from([1, 2, 3]));
    }

    #[test]
    fn edge_list_round_trip() {
        let g = NeighborGraph::from_edges(vs(4), [(3, 4), (1, 2), (1, 3)]).unwrap();
        let text = g.to_edge_list();
        assert_eq!(text, "n=4\n1 2\n1 3\n3 4\n");
        assert_eq!(NeighborGraph::parse_edge_list(&text).unwrap(), g);

        let l = NeighborGraph::star(VertexSet::with_leader(2).unwrap(), 0).unwrap();
        assert_eq!(NeighborGraph::parse_edge_list(&l.to_edge_list()).unwrap(), l);
    }

    #[test]
    fn edge_list_parse_errors() {
        assert!(matches!(
            NeighborGraph::parse_edge_list("4\n1 2"),
            Err(GraphError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            NeighborGraph::parse_edge_list("n=4\n1 2 3"),
            Err(GraphError::Parse { line: 2, .. })
        ));
        assert!(NeighborGraph::parse_edge_list("n=4\n1 5").is_err());
    }

    #[test]
    fn induced_relabels() {
        let g = NeighborGraph::from_edges(vs(4), [(1, 2), (3, 4), (2, 3)]).unwrap();
        let h = g.induced(&[3, 4]).unwrap();
        assert_eq!(h, NeighborGraph::from_edges(vs(2), [(1, 2)]).unwrap());
    }
}
