//! Scenario documents: a strict JSON schema bundling agent count, mode,
//! initial headings, switching signal, horizon, and optional geometry.
//!
//! ```json
//! {
//!   "name": "thm1-sparse-star",
//!   "n": 5,
//!   "mode": "leaderless",
//!   "initial_headings": [0.0, 0.5, 1.0, 1.5, 1.9],
//!   "signal": {"type": "sparse", "connect_times": "powers_of_two", "event_graph": "star"},
//!   "steps": 2049,
//!   "tolerance": 1e-3
//! }
//! ```
//!
//! Graphs are written as a name (`"empty"`, `"complete"`, `"path"`, `"cycle"`,
//! `"star"`, each over the full vertex set in label order, the star centered on
//! the lowest vertex), as `{"star": center}`, or as `{"edges": [[i, j], ...]}`.

use std::f64::consts::TAU;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::dynamics::{NeighborhoodKind, Speed};
use crate::graph::{NeighborGraph, VertexSet};
use crate::signals::{
    self, BoundedIntervalsParams, ConnectTimes, GraphSource, IntervalStarts, ScheduleWarning,
    SparseEventsParams, SwitchingSignal, TailPolicy,
};
use crate::{HeadingState64, PlanarState64};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// A schema or validation failure at a document path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioError {
    pub path: String,
    pub message: String,
}

impl ScenarioError {
    fn at(path: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    name: String,
    n: usize,
    mode: ModeDoc,
    #[serde(default)]
    theta0: Option<f64>,
    initial_headings: HeadingsDoc,
    signal: SignalDoc,
    steps: usize,
    #[serde(default)]
    tolerance: Option<f64>,
    #[serde(default)]
    geometry: Option<GeometryDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModeDoc {
    Leaderless,
    Leader,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum HeadingsDoc {
    Explicit(Vec<f64>),
    Seeded(SeededDoc),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeededDoc {
    seed: u64,
    low: f64,
    high: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum SignalDoc {
    Constant {
        graph: GraphDoc,
    },
    Periodic {
        #[serde(default)]
        period: Option<usize>,
        phases: Vec<GraphDoc>,
    },
    Sparse {
        connect_times: ConnectTimesDoc,
        event_graph: GraphDoc,
        #[serde(default)]
        idle_graph: Option<GraphDoc>,
    },
    BoundedIntervals {
        bound: usize,
        starts: StartsDoc,
        schedule: Vec<GraphDoc>,
    },
    Random {
        seed: u64,
        p: f64,
    },
    Trace {
        graphs: Vec<GraphDoc>,
        tail: TailPolicy,
    },
    Geometric,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ConnectTimesDoc {
    Named(String),
    Explicit(Vec<usize>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum StartsDoc {
    Arithmetic(ArithmeticDoc),
    Explicit(Vec<usize>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArithmeticDoc {
    first: usize,
    stride: usize,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum GraphDoc {
    Named(String),
    Star(StarDoc),
    Edges(EdgesDoc),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StarDoc {
    star: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgesDoc {
    edges: Vec<[usize; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryDoc {
    r: f64,
    v: f64,
    #[serde(default = "closed")]
    neighborhood: NeighborhoodKind,
    initial_positions: Vec<[f64; 2]>,
}

fn closed() -> NeighborhoodKind {
    NeighborhoodKind::Closed
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioMode {
    Leaderless,
    Leader { theta0: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialHeadings {
    Explicit(Vec<f64>),
    /// Uniform on `[low, high)`; agent `i` draws from stream `i` of the seed.
    Seeded { seed: u64, low: f64, high: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub r: f64,
    pub v: f64,
    pub neighborhood: NeighborhoodKind,
    pub initial_positions: Vec<[f64; 2]>,
}

/// A validated scenario, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// Follower count.
    pub n: usize,
    pub mode: ScenarioMode,
    pub initial_headings: InitialHeadings,
    pub source: GraphSource,
    pub steps: usize,
    pub tolerance: f64,
    pub geometry: Option<Geometry>,
    pub warnings: Vec<ScheduleWarning>,
}

impl Scenario {
    pub fn vertices(&self) -> VertexSet {
        match self.mode {
            ScenarioMode::Leaderless => VertexSet::new(self.n),
            ScenarioMode::Leader { .. } => VertexSet::with_leader(self.n),
        }
        .expect("n validated positive")
    }

    /// Follower headings, drawn when seeded.
    pub fn follower_headings(&self) -> Vec<f64> {
        match &self.initial_headings {
            InitialHeadings::Explicit(h) => h.clone(),
            InitialHeadings::Seeded { seed, low, high } => seeded_uniform(*seed, self.n, *low, *high),
        }
    }

    pub fn initial_state(&self) -> HeadingState64 {
        let headings = self.follower_headings();
        match self.mode {
            ScenarioMode::Leaderless => HeadingState64::leaderless(headings),
            ScenarioMode::Leader { theta0 } => HeadingState64::with_leader(theta0, headings),
        }
        .expect("headings validated")
    }

    pub fn planar_state(&self) -> Option<PlanarState64> {
        self.geometry.as_ref().map(|g| {
            PlanarState64::new(
                self.vertices(),
                g.initial_positions.clone(),
                Speed::Uniform(g.v),
                g.r,
                g.neighborhood,
            )
            .expect("geometry validated")
        })
    }

    /// The seed behind random parts of the scenario, if any.
    pub fn seed(&self) -> Option<u64> {
        match &self.initial_headings {
            InitialHeadings::Seeded { seed, .. } => Some(*seed),
            InitialHeadings::Explicit(_) => None,
        }
    }
}

/// Uniform draws on `[low, high)`, one ChaCha stream per agent index.
pub fn seeded_uniform(seed: u64, n: usize, low: f64, high: f64) -> Vec<f64> {
    (1..=n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            low + (high - low) * rng.gen::<f64>()
        })
        .collect()
}

pub fn parse_scenario(document: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let doc: ScenarioDoc = serde_path_to_error::deserialize(de)
        .map_err(|e| ScenarioError::at(e.path().to_string(), e.inner()))?;
    validate(doc)
}

fn validate(doc: ScenarioDoc) -> Result<Scenario, ScenarioError> {
    if doc.name.trim().is_empty() {
        return Err(ScenarioError::at("name", "must not be empty"));
    }
    if doc.name.contains(['/', '\\']) || doc.name == "." || doc.name == ".." {
        return Err(ScenarioError::at("name", "must be usable as a directory name"));
    }
    if doc.n == 0 {
        return Err(ScenarioError::at("n", "must be at least 1"));
    }
    let mode = match (doc.mode, doc.theta0) {
        (ModeDoc::Leaderless, None) => ScenarioMode::Leaderless,
        (ModeDoc::Leaderless, Some(_)) => {
            return Err(ScenarioError::at("theta0", "only allowed in leader mode"))
        }
        (ModeDoc::Leader, None) => {
            return Err(ScenarioError::at("theta0", "required in leader mode"))
        }
        (ModeDoc::Leader, Some(t)) if !t.is_finite() => {
            return Err(ScenarioError::at("theta0", "must be finite"))
        }
        (ModeDoc::Leader, Some(theta0)) => ScenarioMode::Leader { theta0 },
    };
    let vertices = match mode {
        ScenarioMode::Leaderless => VertexSet::new(doc.n),
        ScenarioMode::Leader { .. } => VertexSet::with_leader(doc.n),
    }
    .map_err(|e| ScenarioError::at("n", e))?;

    let initial_headings = match doc.initial_headings {
        HeadingsDoc::Explicit(h) => {
            if h.len() != doc.n {
                return Err(ScenarioError::at(
                    "initial_headings",
                    format!("expected {} headings, got {}", doc.n, h.len()),
                ));
            }
            if let Some(k) = h.iter().position(|x| !(0.0..TAU).contains(x)) {
                return Err(ScenarioError::at(
                    format!("initial_headings[{k}]"),
                    format!("{} is outside [0, 2π)", h[k]),
                ));
            }
            InitialHeadings::Explicit(h)
        }
        HeadingsDoc::Seeded(SeededDoc { seed, low, high }) => {
            if !(0.0 <= low && low < high && high <= TAU) {
                return Err(ScenarioError::at(
                    "initial_headings",
                    "seeded range needs 0 <= low < high <= 2π",
                ));
            }
            InitialHeadings::Seeded { seed, low, high }
        }
    };

    if let Some(t) = doc.tolerance {
        if !(t > 0.0 && t.is_finite()) {
            return Err(ScenarioError::at("tolerance", "must be a positive number"));
        }
    }
    let tolerance = doc.tolerance.unwrap_or(DEFAULT_TOLERANCE);

    let is_geometric = matches!(doc.signal, SignalDoc::Geometric);
    let geometry = match (is_geometric, doc.geometry) {
        (true, None) => {
            return Err(ScenarioError::at(
                "geometry",
                "required for a geometric signal",
            ))
        }
        (false, Some(_)) => {
            return Err(ScenarioError::at(
                "geometry",
                "only allowed with a geometric signal",
            ))
        }
        (_, g) => g,
    };
    let geometry = geometry
        .map(|g| validate_geometry(g, vertices))
        .transpose()?;

    let (source, warnings) = build_signal(doc.signal, vertices)?;

    Ok(Scenario {
        name: doc.name,
        n: doc.n,
        mode,
        initial_headings,
        source,
        steps: doc.steps,
        tolerance,
        geometry,
        warnings,
    })
}

fn validate_geometry(g: GeometryDoc, vertices: VertexSet) -> Result<Geometry, ScenarioError> {
    if !(g.r > 0.0 && g.r.is_finite()) {
        return Err(ScenarioError::at("geometry.r", "must be positive"));
    }
    if !(g.v > 0.0 && g.v.is_finite()) {
        return Err(ScenarioError::at("geometry.v", "must be positive"));
    }
    if g.initial_positions.len() != vertices.len() {
        return Err(ScenarioError::at(
            "geometry.initial_positions",
            format!(
                "expected {} positions, got {}",
                vertices.len(),
                g.initial_positions.len()
            ),
        ));
    }
    if let Some(k) = g
        .initial_positions
        .iter()
        .position(|p| !p.iter().all(|x| x.is_finite()))
    {
        return Err(ScenarioError::at(
            format!("geometry.initial_positions[{k}]"),
            "coordinates must be finite",
        ));
    }
    Ok(Geometry {
        r: g.r,
        v: g.v,
        neighborhood: g.neighborhood,
        initial_positions: g.initial_positions,
    })
}

fn build_graph(doc: GraphDoc, vertices: VertexSet, path: &str) -> Result<NeighborGraph, ScenarioError> {
    match doc {
        GraphDoc::Named(name) => match name.as_str() {
            "empty" => Ok(NeighborGraph::empty(vertices)),
            "complete" => Ok(NeighborGraph::complete(vertices)),
            "path" => Ok(NeighborGraph::path(vertices)),
            "cycle" => Ok(NeighborGraph::cycle(vertices)),
            "star" => NeighborGraph::star(vertices, vertices.first())
                .map_err(|e| ScenarioError::at(path, e)),
            other => Err(ScenarioError::at(
                path,
                format!("unknown graph name {other:?} (expected empty, complete, path, cycle, or star)"),
            )),
        },
        GraphDoc::Star(StarDoc { star }) => {
            NeighborGraph::star(vertices, star).map_err(|e| ScenarioError::at(path, e))
        }
        GraphDoc::Edges(EdgesDoc { edges }) => {
            NeighborGraph::from_edges(vertices, edges.into_iter().map(|[i, j]| (i, j)))
                .map_err(|e| ScenarioError::at(format!("{path}.edges"), e))
        }
    }
}

fn build_graphs(
    docs: Vec<GraphDoc>,
    vertices: VertexSet,
    path: &str,
) -> Result<Vec<NeighborGraph>, ScenarioError> {
    docs.into_iter()
        .enumerate()
        .map(|(k, d)| build_graph(d, vertices, &format!("{path}[{k}]")))
        .collect()
}

fn build_signal(
    doc: SignalDoc,
    vertices: VertexSet,
) -> Result<(GraphSource, Vec<ScheduleWarning>), ScenarioError> {
    let err = |e: signals::SignalError| ScenarioError::at("signal", e);
    Ok(match doc {
        SignalDoc::Constant { graph } => (
            SwitchingSignal::constant(build_graph(graph, vertices, "signal.graph")?).into(),
            Vec::new(),
        ),
        SignalDoc::Periodic { period, phases } => {
            let phases = build_graphs(phases, vertices, "signal.phases")?;
            let period = period.unwrap_or(phases.len());
            let built = signals::make_periodic(vertices, period, phases).map_err(err)?;
            if !built.union_connected {
                log::info!("periodic signal's period union is disconnected");
            }
            (built.signal.into(), built.warnings)
        }
        SignalDoc::Sparse {
            connect_times,
            event_graph,
            idle_graph,
        } => {
            let connect_times = match connect_times {
                ConnectTimesDoc::Named(s) if s == "powers_of_two" => ConnectTimes::PowersOfTwo,
                ConnectTimesDoc::Named(s) => {
                    return Err(ScenarioError::at(
                        "signal.connect_times",
                        format!("unknown schedule {s:?} (expected \"powers_of_two\" or a list)"),
                    ))
                }
                ConnectTimesDoc::Explicit(times) => ConnectTimes::Explicit(times),
            };
            let params = SparseEventsParams {
                connect_times,
                event_graph: build_graph(event_graph, vertices, "signal.event_graph")?,
                idle_graph: idle_graph
                    .map(|g| build_graph(g, vertices, "signal.idle_graph"))
                    .transpose()?,
            };
            let built = signals::make_sparse_events(vertices, params).map_err(err)?;
            (built.signal.into(), built.warnings)
        }
        SignalDoc::BoundedIntervals {
            bound,
            starts,
            schedule,
        } => {
            let starts = match starts {
                StartsDoc::Arithmetic(ArithmeticDoc { first, stride }) => {
                    IntervalStarts::Arithmetic { first, stride }
                }
                StartsDoc::Explicit(s) => IntervalStarts::Explicit(s),
            };
            let params = BoundedIntervalsParams {
                interval_length_bound: bound,
                starts,
                schedule: build_graphs(schedule, vertices, "signal.schedule")?,
            };
            let built = signals::make_bounded_intervals(vertices, params).map_err(err)?;
            (built.signal.into(), built.warnings)
        }
        SignalDoc::Random { seed, p } => (
            signals::make_random(vertices, seed, p).map_err(err)?.into(),
            Vec::new(),
        ),
        SignalDoc::Trace { graphs, tail } => {
            let graphs = build_graphs(graphs, vertices, "signal.graphs")?;
            (
                SwitchingSignal::trace(vertices, graphs, tail).map_err(err)?.into(),
                Vec::new(),
            )
        }
        SignalDoc::Geometric => (GraphSource::Geometric, Vec::new()),
    })
}
