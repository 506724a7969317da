//! Switching signals: total functions from discrete time to neighbor graphs.
//!
//! Every generator is random access. `at(t)` depends only on the signal's
//! parameters and `t`, never on which times were evaluated before.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{self, GraphError, NeighborGraph, VertexSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("periodic signal with period {period} needs {period} phase graphs, got {got}")]
    PhaseCount { period: usize, got: usize },
    #[error("period must be at least 1")]
    ZeroPeriod,
    #[error("event graph must be connected")]
    DisconnectedEventGraph,
    #[error("{what} must be strictly increasing (offending entry at index {index})")]
    NotIncreasing { what: &'static str, index: usize },
    #[error("edge probability {0} is outside [0, 1]")]
    Probability(f64),
    #[error("trace with tail policy {0:?} needs at least one graph")]
    EmptyTrace(TailPolicy),
    #[error("interval schedule must hold at least one graph")]
    EmptySchedule,
    #[error("interval length {length} exceeds bound {bound}")]
    IntervalTooLong { length: usize, bound: usize },
    #[error("intervals starting at {first} and {second} overlap (length {length})")]
    OverlappingIntervals {
        first: usize,
        second: usize,
        length: usize,
    },
    #[error("union of graphs across one interval is disconnected")]
    DisconnectedInterval,
}

/// What a finite trace does after its last recorded graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailPolicy {
    HoldLast,
    Cycle,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConnectTimes {
    /// `t` in `{1, 2, 4, 8, ...}`.
    PowersOfTwo,
    Explicit(Vec<usize>),
}

impl ConnectTimes {
    fn contains(&self, t: usize) -> bool {
        match self {
            ConnectTimes::PowersOfTwo => t.is_power_of_two(),
            ConnectTimes::Explicit(times) => times.binary_search(&t).is_ok(),
        }
    }

    /// Smallest connect time `>= t`.
    pub fn next_at_or_after(&self, t: usize) -> Option<usize> {
        match self {
            ConnectTimes::PowersOfTwo => t.max(1).checked_next_power_of_two(),
            ConnectTimes::Explicit(times) => {
                let k = times.partition_point(|&x| x < t);
                times.get(k).copied()
            }
        }
    }

    fn is_unbounded(&self) -> bool {
        matches!(self, ConnectTimes::PowersOfTwo)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseEventsParams {
    pub connect_times: ConnectTimes,
    pub event_graph: NeighborGraph,
    /// Graph used between events; empty when `None`.
    pub idle_graph: Option<NeighborGraph>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntervalStarts {
    /// Starts at `first, first + stride, first + 2 stride, ...`.
    Arithmetic { first: usize, stride: usize },
    Explicit(Vec<usize>),
}

/// Intervals of length `schedule.len()`, each replaying `schedule`, with the
/// empty graph outside every interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedIntervalsParams {
    pub interval_length_bound: usize,
    pub starts: IntervalStarts,
    pub schedule: Vec<NeighborGraph>,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Trace {
        graphs: Vec<NeighborGraph>,
        tail: TailPolicy,
    },
    Constant(NeighborGraph),
    Periodic(Vec<NeighborGraph>),
    SparseEvents {
        times: ConnectTimes,
        event: NeighborGraph,
        idle: NeighborGraph,
    },
    BoundedIntervals {
        starts: IntervalStarts,
        schedule: Vec<NeighborGraph>,
        idle: NeighborGraph,
    },
    Random {
        seed: u64,
        p: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingSignal {
    vertices: VertexSet,
    kind: Kind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleWarning {
    /// An explicit, finite schedule: the limit graph is the idle graph.
    FiniteSchedule,
}

/// A freshly built generator plus what its constructor found out about it.
#[derive(Debug, Clone, PartialEq)]
pub struct Constructed {
    pub signal: SwitchingSignal,
    /// Connectivity of the union over one period, event, or interval.
    pub union_connected: bool,
    pub warnings: Vec<ScheduleWarning>,
}

/// Outcome of checking whether the limit graph is connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointConnectivity {
    ProvenYes,
    ProvenNo,
    /// No analytic limit is known; `tail_connected` reports the union over
    /// the second half of the horizon.
    UnknownAtHorizon { tail_connected: bool },
}

fn check_vertices(expected: VertexSet, g: &NeighborGraph) -> Result<(), SignalError> {
    if g.vertices() == expected {
        Ok(())
    } else {
        Err(GraphError::VertexSetMismatch {
            left: expected,
            right: g.vertices(),
        }
        .into())
    }
}

fn check_increasing(what: &'static str, xs: &[usize]) -> Result<(), SignalError> {
    match xs.windows(2).position(|w| w[0] >= w[1]) {
        Some(k) => Err(SignalError::NotIncreasing { what, index: k + 1 }),
        None => Ok(()),
    }
}

impl SwitchingSignal {
    pub fn constant(g: NeighborGraph) -> Self {
        Self {
            vertices: g.vertices(),
            kind: Kind::Constant(g),
        }
    }

    pub fn trace(
        vertices: VertexSet,
        graphs: Vec<NeighborGraph>,
        tail: TailPolicy,
    ) -> Result<Self, SignalError> {
        if graphs.is_empty() && tail != TailPolicy::Empty {
            return Err(SignalError::EmptyTrace(tail));
        }
        for g in &graphs {
            check_vertices(vertices, g)?;
        }
        Ok(Self {
            vertices,
            kind: Kind::Trace { graphs, tail },
        })
    }

    pub fn vertices(&self) -> VertexSet {
        self.vertices
    }

    pub fn at(&self, t: usize) -> NeighborGraph {
        match &self.kind {
            Kind::Trace { graphs, tail } => match graphs.get(t) {
                Some(g) => g.clone(),
                None => match tail {
                    TailPolicy::HoldLast => graphs.last().expect("nonempty").clone(),
                    TailPolicy::Cycle => graphs[t % graphs.len()].clone(),
                    TailPolicy::Empty => NeighborGraph::empty(self.vertices),
                },
            },
            Kind::Constant(g) => g.clone(),
            Kind::Periodic(phases) => phases[t % phases.len()].clone(),
            Kind::SparseEvents { times, event, idle } => {
                if times.contains(t) {
                    event.clone()
                } else {
                    idle.clone()
                }
            }
            Kind::BoundedIntervals {
                starts,
                schedule,
                idle,
            } => match interval_offset(starts, schedule.len(), t) {
                Some(k) => schedule[k].clone(),
                None => idle.clone(),
            },
            Kind::Random { seed, p } => random_graph(self.vertices, *seed, *p, t),
        }
    }

    /// Next event time at or after `t` for sparse-event signals.
    pub fn next_event_time(&self, t: usize) -> Option<usize> {
        match &self.kind {
            Kind::SparseEvents { times, .. } => times.next_at_or_after(t),
            _ => None,
        }
    }

    /// The recurring edge set, when the generator determines it analytically.
    /// Traces are excluded: their limit comes from the declared tail policy,
    /// see [`SwitchingSignal::tail_limit`].
    pub fn recurring_edges(&self) -> Option<NeighborGraph> {
        match &self.kind {
            Kind::Trace { .. } => None,
            Kind::Constant(g) => Some(g.clone()),
            Kind::Periodic(phases) => Some(graph::union(phases).expect("phases share vertices")),
            Kind::SparseEvents { times, event, idle } => Some(if times.is_unbounded() {
                event.union_with(idle).expect("same vertices")
            } else {
                idle.clone()
            }),
            Kind::BoundedIntervals {
                starts,
                schedule,
                idle,
            } => Some(match starts {
                IntervalStarts::Arithmetic { .. } => {
                    graph::union(schedule.iter().chain(std::iter::once(idle)))
                        .expect("same vertices")
                }
                IntervalStarts::Explicit(_) => idle.clone(),
            }),
            Kind::Random { p, .. } if *p == 0.0 => Some(NeighborGraph::empty(self.vertices)),
            Kind::Random { p, .. } if *p == 1.0 => Some(NeighborGraph::complete(self.vertices)),
            Kind::Random { .. } => None,
        }
    }

    /// Limit graph forced by a trace's tail policy.
    pub fn tail_limit(&self) -> Option<NeighborGraph> {
        match &self.kind {
            Kind::Trace { graphs, tail } => Some(match tail {
                TailPolicy::HoldLast => graphs.last().expect("nonempty").clone(),
                TailPolicy::Cycle => graph::union(graphs).expect("nonempty"),
                TailPolicy::Empty => NeighborGraph::empty(self.vertices),
            }),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SwitchingSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Trace { graphs, tail } => {
                write!(f, "trace(len={}, tail={tail:?})", graphs.len())
            }
            Kind::Constant(g) => write!(f, "constant(edges={})", g.edge_count()),
            Kind::Periodic(phases) => write!(f, "periodic(period={})", phases.len()),
            Kind::SparseEvents { times, event, .. } => match times {
                ConnectTimes::PowersOfTwo => {
                    write!(f, "sparse(powers_of_two, event_edges={})", event.edge_count())
                }
                ConnectTimes::Explicit(ts) => {
                    write!(f, "sparse(explicit={}, event_edges={})", ts.len(), event.edge_count())
                }
            },
            Kind::BoundedIntervals {
                starts, schedule, ..
            } => match starts {
                IntervalStarts::Arithmetic { first, stride } => write!(
                    f,
                    "bounded_intervals(first={first}, stride={stride}, length={})",
                    schedule.len()
                ),
                IntervalStarts::Explicit(s) => write!(
                    f,
                    "bounded_intervals(explicit={}, length={})",
                    s.len(),
                    schedule.len()
                ),
            },
            Kind::Random { seed, p } => write!(f, "random(seed={seed}, p={p})"),
        }
    }
}

fn interval_offset(starts: &IntervalStarts, length: usize, t: usize) -> Option<usize> {
    let start = match starts {
        IntervalStarts::Arithmetic { first, stride } => {
            if t < *first {
                return None;
            }
            first + (t - first) / stride * stride
        }
        IntervalStarts::Explicit(s) => {
            let k = s.partition_point(|&x| x <= t);
            *s.get(k.checked_sub(1)?)?
        }
    };
    let off = t - start;
    (off < length).then_some(off)
}

/// Each pair included with probability `p`, drawn from ChaCha stream `t` of
/// the generator keyed by `seed`, pairs visited in lexicographic order.
fn random_graph(vertices: VertexSet, seed: u64, p: f64, t: usize) -> NeighborGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64);
    let mut pairs = Vec::new();
    for i in vertices.iter() {
        for j in i + 1..=vertices.last() {
            if rng.gen::<f64>() < p {
                pairs.push((i, j));
            }
        }
    }
    NeighborGraph::from_edges(vertices, pairs).expect("pairs drawn from the vertex set")
}

/// `sig(t) = phases[t mod period]`.
pub fn make_periodic(
    vertices: VertexSet,
    period: usize,
    phases: Vec<NeighborGraph>,
) -> Result<Constructed, SignalError> {
    if period == 0 {
        return Err(SignalError::ZeroPeriod);
    }
    if phases.len() != period {
        return Err(SignalError::PhaseCount {
            period,
            got: phases.len(),
        });
    }
    for g in &phases {
        check_vertices(vertices, g)?;
    }
    let union_connected = graph::union(&phases)?.is_connected();
    Ok(Constructed {
        signal: SwitchingSignal {
            vertices,
            kind: Kind::Periodic(phases),
        },
        union_connected,
        warnings: Vec::new(),
    })
}

/// `event_graph` at connect times, `idle_graph` otherwise.
pub fn make_sparse_events(
    vertices: VertexSet,
    params: SparseEventsParams,
) -> Result<Constructed, SignalError> {
    check_vertices(vertices, &params.event_graph)?;
    let idle = params
        .idle_graph
        .unwrap_or_else(|| NeighborGraph::empty(vertices));
    check_vertices(vertices, &idle)?;
    if !params.event_graph.is_connected() {
        return Err(SignalError::DisconnectedEventGraph);
    }
    let mut warnings = Vec::new();
    if let ConnectTimes::Explicit(times) = &params.connect_times {
        check_increasing("connect_times", times)?;
        log::warn!(
            "explicit schedule of {} connect times is finite; the limit graph is the idle graph",
            times.len()
        );
        warnings.push(ScheduleWarning::FiniteSchedule);
    }
    Ok(Constructed {
        signal: SwitchingSignal {
            vertices,
            kind: Kind::SparseEvents {
                times: params.connect_times,
                event: params.event_graph,
                idle,
            },
        },
        union_connected: true,
        warnings,
    })
}

/// Non-overlapping intervals of length at most the bound, each linking all agents.
pub fn make_bounded_intervals(
    vertices: VertexSet,
    params: BoundedIntervalsParams,
) -> Result<Constructed, SignalError> {
    let length = params.schedule.len();
    if length == 0 {
        return Err(SignalError::EmptySchedule);
    }
    if length > params.interval_length_bound {
        return Err(SignalError::IntervalTooLong {
            length,
            bound: params.interval_length_bound,
        });
    }
    for g in &params.schedule {
        check_vertices(vertices, g)?;
    }
    let mut warnings = Vec::new();
    match &params.starts {
        IntervalStarts::Arithmetic { first, stride } => {
            if *stride < length {
                return Err(SignalError::OverlappingIntervals {
                    first: *first,
                    second: first + stride,
                    length,
                });
            }
        }
        IntervalStarts::Explicit(starts) => {
            check_increasing("interval_starts", starts)?;
            if let Some(w) = starts.windows(2).find(|w| w[1] - w[0] < length) {
                return Err(SignalError::OverlappingIntervals {
                    first: w[0],
                    second: w[1],
                    length,
                });
            }
            log::warn!(
                "explicit list of {} intervals is finite; the limit graph is empty",
                starts.len()
            );
            warnings.push(ScheduleWarning::FiniteSchedule);
        }
    }
    if !graph::union(&params.schedule)?.is_connected() {
        return Err(SignalError::DisconnectedInterval);
    }
    Ok(Constructed {
        signal: SwitchingSignal {
            vertices,
            kind: Kind::BoundedIntervals {
                starts: params.starts,
                schedule: params.schedule,
                idle: NeighborGraph::empty(vertices),
            },
        },
        union_connected: true,
        warnings,
    })
}

/// Independent Erdős–Rényi draws, random access in `t`.
pub fn make_random(vertices: VertexSet, seed: u64, p: f64) -> Result<SwitchingSignal, SignalError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SignalError::Probability(p));
    }
    Ok(SwitchingSignal {
        vertices,
        kind: Kind::Random { seed, p },
    })
}

/// Whether the limit graph is connected, decided analytically where possible.
pub fn verify_finally_jointly_connected(sig: &SwitchingSignal, horizon: usize) -> JointConnectivity {
    match sig.recurring_edges().or_else(|| sig.tail_limit()) {
        Some(g) if g.is_connected() => JointConnectivity::ProvenYes,
        Some(_) => JointConnectivity::ProvenNo,
        None => {
            let (tail, _) = graph::limit_graph(sig, horizon);
            JointConnectivity::UnknownAtHorizon {
                tail_connected: tail.is_connected(),
            }
        }
    }
}

/// Where the neighbor graph for each step comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    Signal(SwitchingSignal),
    /// Derived each step from agent positions; radius and neighborhood kind
    /// live in the planar state.
    Geometric,
}

impl GraphSource {
    pub fn describe(&self) -> String {
        match self {
            GraphSource::Signal(s) => s.describe(),
            GraphSource::Geometric => "geometric".to_string(),
        }
    }
}

impl From<SwitchingSignal> for GraphSource {
    fn from(s: SwitchingSignal) -> Self {
        GraphSource::Signal(s)
    }
}
