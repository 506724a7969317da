//! Nearest-neighbor heading averaging, the leader-following variant, planar
//! motion, distance-based neighbor graphs, and the simulation loop.
//!
//! Headings are plain reals. They are averaged arithmetically and never
//! reduced modulo 2π.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, NeighborGraph, VertexSet};
use crate::scalar::{format_significant, Scalar};
use crate::signals::GraphSource;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("state covers {state} but the graph covers {graph}")]
    VertexMismatch { state: VertexSet, graph: VertexSet },
    #[error("expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("heading of vertex {vertex} is not finite")]
    NonFinite { vertex: usize },
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("geometric neighbor graphs need a planar state")]
    MissingPlanarState,
    #[error("leader-following runs need a vertex set with the leader, leaderless runs one without")]
    ModeMismatch,
}

/// Headings of every vertex, stored by slot.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadingState<S> {
    vertices: VertexSet,
    values: Vec<S>,
}

impl<S: Scalar> HeadingState<S> {
    pub fn new(vertices: VertexSet, values: Vec<S>) -> Result<Self, DynamicsError> {
        if values.len() != vertices.len() {
            return Err(DynamicsError::SizeMismatch {
                expected: vertices.len(),
                got: values.len(),
            });
        }
        if let Some(slot) = values.iter().position(|x| !x.is_finite()) {
            return Err(DynamicsError::NonFinite {
                vertex: vertices.vertex_at(slot),
            });
        }
        Ok(Self { vertices, values })
    }

    /// Leaderless state for agents `1..=values.len()`.
    pub fn leaderless(values: Vec<S>) -> Result<Self, DynamicsError> {
        Self::new(VertexSet::new(values.len())?, values)
    }

    /// Leader slot `0` holding `theta0`, followers `1..=followers.len()`.
    pub fn with_leader(theta0: S, followers: Vec<S>) -> Result<Self, DynamicsError> {
        let vertices = VertexSet::with_leader(followers.len())?;
        let mut values = Vec::with_capacity(followers.len() + 1);
        values.push(theta0);
        values.extend(followers);
        Self::new(vertices, values)
    }

    pub fn vertices(&self) -> VertexSet {
        self.vertices
    }

    /// All values by slot, leader first when present.
    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn get(&self, v: usize) -> Result<S, GraphError> {
        self.vertices.check(v)?;
        Ok(self.values[self.vertices.slot(v)])
    }

    pub fn followers(&self) -> &[S] {
        &self.values[usize::from(self.vertices.has_leader())..]
    }

    pub fn leader(&self) -> Option<S> {
        self.vertices.has_leader().then(|| self.values[0])
    }

    pub fn follower_min(&self) -> S {
        self.followers().iter().copied().fold(S::infinity(), S::min)
    }

    pub fn follower_max(&self) -> S {
        self.followers().iter().copied().fold(S::neg_infinity(), S::max)
    }

    pub fn spread(&self) -> S {
        self.follower_max() - self.follower_min()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeaderConfig<S> {
    pub theta0: S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborhoodKind {
    /// `d(i, j) <= r`.
    Closed,
    /// `d(i, j) < r`.
    Open,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Speed<S> {
    Uniform(S),
    PerAgent(Vec<S>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarState<S> {
    vertices: VertexSet,
    positions: Vec<[S; 2]>,
    speed: Speed<S>,
    radius: S,
    kind: NeighborhoodKind,
}

impl<S: Scalar> PlanarState<S> {
    pub fn new(
        vertices: VertexSet,
        positions: Vec<[S; 2]>,
        speed: Speed<S>,
        radius: S,
        kind: NeighborhoodKind,
    ) -> Result<Self, DynamicsError> {
        if positions.len() != vertices.len() {
            return Err(DynamicsError::SizeMismatch {
                expected: vertices.len(),
                got: positions.len(),
            });
        }
        let positive = |what, x: S| {
            if x > S::zero() && x.is_finite() {
                Ok(())
            } else {
                Err(DynamicsError::NonPositive {
                    what,
                    value: x.lossless_f64(),
                })
            }
        };
        positive("radius", radius)?;
        match &speed {
            Speed::Uniform(v) => positive("speed", *v)?,
            Speed::PerAgent(vs) => {
                if vs.len() != vertices.len() {
                    return Err(DynamicsError::SizeMismatch {
                        expected: vertices.len(),
                        got: vs.len(),
                    });
                }
                for &v in vs {
                    positive("speed", v)?;
                }
            }
        }
        Ok(Self {
            vertices,
            positions,
            speed,
            radius,
            kind,
        })
    }

    pub fn vertices(&self) -> VertexSet {
        self.vertices
    }

    pub fn positions(&self) -> &[[S; 2]] {
        &self.positions
    }

    pub fn radius(&self) -> S {
        self.radius
    }

    pub fn kind(&self) -> NeighborhoodKind {
        self.kind
    }

    pub fn speed(&self) -> &Speed<S> {
        &self.speed
    }

    fn speed_of(&self, slot: usize) -> S {
        match &self.speed {
            Speed::Uniform(v) => *v,
            Speed::PerAgent(vs) => vs[slot],
        }
    }
}

fn check_graph<S: Scalar>(state: &HeadingState<S>, g: &NeighborGraph) -> Result<(), DynamicsError> {
    if state.vertices != g.vertices() {
        return Err(DynamicsError::VertexMismatch {
            state: state.vertices,
            graph: g.vertices(),
        });
    }
    Ok(())
}

/// Own heading plus the mean offset of the closed neighborhood. Offsets are
/// summed in ascending order so the result does not depend on labels, and a
/// neighborhood at consensus returns `own` exactly.
fn neighborhood_mean<S: Scalar>(values: &[S], own_slot: usize, nbr_slots: &[usize]) -> S {
    let own = values[own_slot];
    if nbr_slots.is_empty() {
        return own;
    }
    let mut offsets: Vec<S> = nbr_slots.iter().map(|&s| values[s] - own).collect();
    offsets.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let total = offsets.into_iter().fold(S::zero(), |acc, d| acc + d);
    own + total / S::from_count(1 + nbr_slots.len())
}

fn average_all<S: Scalar>(state: &HeadingState<S>, g: &NeighborGraph, skip_leader: bool) -> Vec<S> {
    let vs = state.vertices;
    let adj = g.adjacency();
    let mut next = state.values.clone();
    for (slot, nbrs) in adj.iter().enumerate() {
        if skip_leader && slot == 0 {
            continue;
        }
        let slots: Vec<usize> = nbrs.iter().map(|&v| vs.slot(v)).collect();
        next[slot] = neighborhood_mean(&state.values, slot, &slots);
    }
    next
}

/// One nearest-neighbor step: each heading becomes the mean of its own and
/// its neighbors' headings.
pub fn step_headings<S: Scalar>(
    state: &HeadingState<S>,
    g: &NeighborGraph,
) -> Result<HeadingState<S>, DynamicsError> {
    check_graph(state, g)?;
    if state.vertices.has_leader() {
        return Err(DynamicsError::ModeMismatch);
    }
    Ok(HeadingState {
        vertices: state.vertices,
        values: average_all(state, g, false),
    })
}

/// One leader-following step. Followers average over neighborhoods that may
/// include vertex `0`; the leader stays at `theta0`.
pub fn step_headings_leader<S: Scalar>(
    state: &HeadingState<S>,
    leader: &LeaderConfig<S>,
    g: &NeighborGraph,
) -> Result<HeadingState<S>, DynamicsError> {
    check_graph(state, g)?;
    if !state.vertices.has_leader() {
        return Err(DynamicsError::ModeMismatch);
    }
    let mut pinned = state.clone();
    pinned.values[0] = leader.theta0;
    let mut values = average_all(&pinned, g, true);
    values[0] = leader.theta0;
    Ok(HeadingState {
        vertices: state.vertices,
        values,
    })
}

/// Advance every agent by its speed along its current heading.
pub fn step_positions<S: Scalar>(
    planar: &PlanarState<S>,
    state: &HeadingState<S>,
) -> Result<PlanarState<S>, DynamicsError> {
    if planar.vertices != state.vertices {
        return Err(DynamicsError::VertexMismatch {
            state: state.vertices,
            graph: planar.vertices,
        });
    }
    let positions = planar
        .positions
        .iter()
        .zip(&state.values)
        .enumerate()
        .map(|(slot, (&[x, y], &theta))| {
            let v = planar.speed_of(slot);
            [x + v * theta.cos(), y + v * theta.sin()]
        })
        .collect();
    Ok(PlanarState {
        positions,
        ..planar.clone()
    })
}

/// Edges between agents within the neighborhood radius.
pub fn geometric_neighbors<S: Scalar>(planar: &PlanarState<S>) -> NeighborGraph {
    let vs = planar.vertices;
    let r = planar.radius;
    let mut pairs = Vec::new();
    for a in 0..planar.positions.len() {
        for b in a + 1..planar.positions.len() {
            let [xa, ya] = planar.positions[a];
            let [xb, yb] = planar.positions[b];
            let d = ((xa - xb) * (xa - xb) + (ya - yb) * (ya - yb)).sqrt();
            let near = match planar.kind {
                NeighborhoodKind::Closed => d <= r,
                NeighborhoodKind::Open => d < r,
            };
            if near {
                pairs.push((vs.vertex_at(a), vs.vertex_at(b)));
            }
        }
    }
    NeighborGraph::from_edges(vs, pairs).expect("pairs come from the vertex set")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode<S> {
    Leaderless,
    Leader(LeaderConfig<S>),
}

impl<S> Mode<S> {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Leaderless => "leaderless",
            Mode::Leader(_) => "leader",
        }
    }
}

/// A heading update applied once per step.
pub trait UpdateRule<S: Scalar> {
    fn step(
        &self,
        state: &HeadingState<S>,
        g: &NeighborGraph,
        mode: &Mode<S>,
    ) -> Result<HeadingState<S>, DynamicsError>;
}

/// Arithmetic averaging over closed neighborhoods.
#[derive(Debug, Clone, Copy, Default)]
pub struct NearestNeighborRule;

impl<S: Scalar> UpdateRule<S> for NearestNeighborRule {
    fn step(
        &self,
        state: &HeadingState<S>,
        g: &NeighborGraph,
        mode: &Mode<S>,
    ) -> Result<HeadingState<S>, DynamicsError> {
        match mode {
            Mode::Leaderless => step_headings(state, g),
            Mode::Leader(cfg) => step_headings_leader(state, cfg, g),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub mode: String,
    pub followers: usize,
    pub steps: usize,
    pub signal: String,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    headings: Vec<HeadingState<S>>,
    graphs: Vec<NeighborGraph>,
    positions: Option<Vec<Vec<[S; 2]>>>,
    pub meta: RunMeta,
}

impl<S: Scalar> Trajectory<S> {
    /// Headings for `t = 0..=steps`.
    pub fn headings(&self) -> &[HeadingState<S>] {
        &self.headings
    }

    /// Graph used at each step `t = 0..steps`.
    pub fn graphs(&self) -> &[NeighborGraph] {
        &self.graphs
    }

    pub fn positions(&self) -> Option<&[Vec<[S; 2]>]> {
        self.positions.as_deref()
    }

    pub fn steps(&self) -> usize {
        self.graphs.len()
    }

    pub fn vertices(&self) -> VertexSet {
        self.headings[0].vertices
    }

    pub fn last(&self) -> &HeadingState<S> {
        self.headings.last().expect("at least the initial state")
    }

    /// Header `t,theta_1,...,theta_n` (leader runs insert `theta_0` first),
    /// then one row per step with round-trip-exact values.
    pub fn to_csv(&self) -> String {
        let vs = self.vertices();
        let mut out = String::from("t");
        for v in vs.iter() {
            let _ = write!(out, ",theta_{v}");
        }
        out.push('\n');
        for (t, state) in self.headings.iter().enumerate() {
            let _ = write!(out, "{t}");
            for &x in &state.values {
                out.push(',');
                out.push_str(&format_significant(x.lossless_f64(), S::ROUND_TRIP_DIGITS));
            }
            out.push('\n');
        }
        out
    }
}

/// Runs `steps` updates of the nearest-neighbor rule.
pub fn simulate<S: Scalar>(
    mode: Mode<S>,
    initial: HeadingState<S>,
    source: &GraphSource,
    steps: usize,
    planar: Option<PlanarState<S>>,
) -> Result<Trajectory<S>, DynamicsError> {
    simulate_with(&NearestNeighborRule, mode, initial, source, steps, planar)
}

/// Runs `steps` updates of an arbitrary rule. At step `t` the graph comes from
/// the signal at `t`, or in geometric mode from the positions at `t`; headings
/// and positions then both advance from their values at `t`.
pub fn simulate_with<S: Scalar, R: UpdateRule<S> + ?Sized>(
    rule: &R,
    mode: Mode<S>,
    initial: HeadingState<S>,
    source: &GraphSource,
    steps: usize,
    planar: Option<PlanarState<S>>,
) -> Result<Trajectory<S>, DynamicsError> {
    let vs = initial.vertices;
    if matches!(mode, Mode::Leader(_)) != vs.has_leader() {
        return Err(DynamicsError::ModeMismatch);
    }
    let mut state = initial;
    if let Mode::Leader(cfg) = &mode {
        state.values[0] = cfg.theta0;
    }
    match source {
        GraphSource::Signal(sig) if sig.vertices() != vs => {
            return Err(DynamicsError::VertexMismatch {
                state: vs,
                graph: sig.vertices(),
            })
        }
        GraphSource::Geometric if planar.is_none() => return Err(DynamicsError::MissingPlanarState),
        _ => {}
    }
    if let Some(p) = &planar {
        if p.vertices != vs {
            return Err(DynamicsError::VertexMismatch {
                state: vs,
                graph: p.vertices,
            });
        }
    }

    let mut planar = planar;
    let mut headings = Vec::with_capacity(steps + 1);
    let mut graphs = Vec::with_capacity(steps);
    let mut positions = planar.as_ref().map(|p| {
        let mut v = Vec::with_capacity(steps + 1);
        v.push(p.positions.clone());
        v
    });
    headings.push(state.clone());
    for t in 0..steps {
        let g = match source {
            GraphSource::Signal(sig) => sig.at(t),
            GraphSource::Geometric => geometric_neighbors(planar.as_ref().expect("checked above")),
        };
        let next = rule.step(&state, &g, &mode)?;
        if let Some(p) = planar.as_mut() {
            *p = step_positions(p, &state)?;
            positions
                .as_mut()
                .expect("recorded with planar")
                .push(p.positions.clone());
        }
        graphs.push(g);
        headings.push(next.clone());
        state = next;
    }
    Ok(Trajectory {
        headings,
        graphs,
        positions,
        meta: RunMeta {
            mode: mode.name().to_string(),
            followers: vs.followers(),
            steps,
            signal: source.describe(),
            seed: None,
        },
    })
}
