//! Executes scenarios and writes `trajectory.csv`, `report.json`, and
//! optionally `graphs.log` under `<out>/<scenario-name>/`.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{
    self, check_separation_step, component_limits, detect_consensus, EnvelopeSeries,
    ReportDocument, SeparationVerdict,
};
use crate::dynamics::{
    simulate_with, DynamicsError, LeaderConfig, Mode, NearestNeighborRule, UpdateRule,
};
use crate::graph::{self, NeighborGraph};
use crate::scenario::{Scenario, ScenarioMode};
use crate::signals::GraphSource;
use crate::{Scalar, Trajectory64};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Analysis(#[from] analysis::AnalysisError),
    #[error("serializing report: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub graph_log: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub trajectory: Trajectory64,
    pub report: ReportDocument<f64>,
}

fn mode_of(scn: &Scenario) -> Mode<f64> {
    match scn.mode {
        ScenarioMode::Leaderless => Mode::Leaderless,
        ScenarioMode::Leader { theta0 } => Mode::Leader(LeaderConfig { theta0 }),
    }
}

/// Simulates a scenario with a given update rule, without touching the disk.
pub fn simulate_scenario_with<R: UpdateRule<f64> + ?Sized>(
    rule: &R,
    scn: &Scenario,
) -> Result<Trajectory64, RunError> {
    let mut traj = simulate_with(
        rule,
        mode_of(scn),
        scn.initial_state(),
        &scn.source,
        scn.steps,
        scn.planar_state(),
    )?;
    traj.meta.seed = scn.seed();
    Ok(traj)
}

pub fn simulate_scenario(scn: &Scenario) -> Result<Trajectory64, RunError> {
    simulate_scenario_with(&NearestNeighborRule, scn)
}

/// The limit graph used to split the report into components. Geometric runs
/// use the union of the graphs recorded over the second half of the run.
pub fn scenario_limit_graph(scn: &Scenario, traj: &Trajectory64) -> NeighborGraph {
    match &scn.source {
        GraphSource::Signal(sig) => graph::limit_graph(sig, scn.steps.max(1)).0,
        GraphSource::Geometric => {
            let graphs = traj.graphs();
            graph::union(&graphs[graphs.len() / 2..])
                .unwrap_or_else(|_| NeighborGraph::empty(traj.vertices()))
        }
    }
}

pub fn build_report(scn: &Scenario, traj: &Trajectory64) -> Result<ReportDocument<f64>, RunError> {
    let whole = detect_consensus(traj, scn.tolerance)?;
    let limit = scenario_limit_graph(scn, traj);
    let components = component_limits(traj, &limit, scn.tolerance)?;
    Ok(ReportDocument::new(&whole, components))
}

pub fn report_json(report: &ReportDocument<f64>) -> Result<String, RunError> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

/// Edge-list log of the graphs used, one block per run of identical
/// consecutive graphs: `t=<start> count=<run length> edges=<m>` followed by
/// `m` lines `i j`.
pub fn graph_log(traj: &Trajectory64) -> String {
    let vs = traj.vertices();
    let mut out = format!("n={}", vs.followers());
    if vs.has_leader() {
        out.push_str(" leader");
    }
    out.push('\n');
    let graphs = traj.graphs();
    let mut t = 0;
    while t < graphs.len() {
        let run = graphs[t..].iter().take_while(|g| **g == graphs[t]).count();
        let g = &graphs[t];
        let _ = writeln!(out, "t={t} count={run} edges={}", g.edge_count());
        for e in g.edges() {
            let _ = writeln!(out, "{} {}", e.lo(), e.hi());
        }
        t += run;
    }
    out
}

fn write_file(path: PathBuf, contents: &str) -> Result<(), RunError> {
    fs::write(&path, contents).map_err(|source| RunError::Io { path, source })
}

fn scenario_dir(scn: &Scenario, out_dir: &Path) -> Result<PathBuf, RunError> {
    let dir = out_dir.join(&scn.name);
    fs::create_dir_all(&dir).map_err(|source| RunError::Io {
        path: dir.clone(),
        source,
    })?;
    Ok(dir)
}

/// Runs a scenario and writes its outputs. Succeeds whether or not the run
/// reached consensus; that verdict lives in the report.
pub fn run_scenario(scn: &Scenario, out_dir: &Path, opts: RunOptions) -> Result<RunOutcome, RunError> {
    let trajectory = simulate_scenario(scn)?;
    let report = build_report(scn, &trajectory)?;
    let dir = scenario_dir(scn, out_dir)?;
    write_file(dir.join("trajectory.csv"), &trajectory.to_csv())?;
    write_file(dir.join("report.json"), &report_json(&report)?)?;
    if opts.graph_log {
        write_file(dir.join("graphs.log"), &graph_log(&trajectory))?;
    }
    log::info!(
        "{}: {} steps, converged = {}",
        scn.name,
        scn.steps,
        report.converged
    );
    Ok(RunOutcome {
        dir,
        trajectory,
        report,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CheckCount {
    pub checked: usize,
    pub failed: usize,
}

impl CheckCount {
    fn record(&mut self, ok: bool) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SeparationCount {
    pub checked: usize,
    pub confirmed: usize,
    pub failed: usize,
    /// Checks that reported boundary-ambiguous agents.
    pub with_ambiguity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantSummary {
    pub scenario: String,
    pub steps: usize,
    /// Envelope over every vertex: minimum nondecreasing, maximum nonincreasing.
    pub envelope: CheckCount,
    /// Each new heading within the previous step's range.
    pub hull: CheckCount,
    /// Leader heading bitwise equal to `theta0`.
    pub leader: CheckCount,
    pub separation: SeparationCount,
    pub first_failure: Option<String>,
    pub passed: bool,
}

/// Checks a finished trajectory step by step.
pub fn check_invariants(scn: &Scenario, traj: &Trajectory64) -> InvariantSummary {
    let tol = f64::invariant_tolerance();
    let states = traj.headings();
    let env = EnvelopeSeries::over_all_vertices(states);
    let mut envelope = CheckCount::default();
    let mut hull = CheckCount::default();
    let mut leader = CheckCount::default();
    let mut separation = SeparationCount::default();
    let mut first_failure: Option<String> = None;
    let mut note = |msg: String| {
        if first_failure.is_none() {
            first_failure = Some(msg);
        }
    };

    if let ScenarioMode::Leader { theta0 } = scn.mode {
        for (t, s) in states.iter().enumerate() {
            let ok = s.leader().map(f64::to_bits) == Some(theta0.to_bits());
            leader.record(ok);
            if !ok {
                note(format!("leader heading changed at step {t}"));
            }
        }
    }

    for t in 1..states.len() {
        let lower_ok = env.lower()[t] >= env.lower()[t - 1] - tol;
        let upper_ok = env.upper()[t] <= env.upper()[t - 1] + tol;
        envelope.record(lower_ok && upper_ok);
        if !lower_ok {
            note(format!(
                "envelope minimum fell at step {t}: {} -> {}",
                env.lower()[t - 1],
                env.lower()[t]
            ));
        }
        if !upper_ok {
            note(format!(
                "envelope maximum rose at step {t}: {} -> {}",
                env.upper()[t - 1],
                env.upper()[t]
            ));
        }

        let (lo, hi) = (env.lower()[t - 1], env.upper()[t - 1]);
        let outside = states[t]
            .values()
            .iter()
            .position(|&x| x < lo - tol || x > hi + tol);
        hull.record(outside.is_none());
        if let Some(slot) = outside {
            note(format!(
                "vertex {} left the previous range [{lo}, {hi}] at step {t}",
                states[t].vertices().vertex_at(slot)
            ));
        }

        let g = &traj.graphs()[t - 1];
        for scn_sep in analysis::separation_probes(&states[t - 1]) {
            let verdict = match check_separation_step(&scn_sep, &states[t - 1], g, &states[t]) {
                Ok(v) => v,
                Err(e) => {
                    note(format!("separation check at step {t} errored: {e}"));
                    separation.failed += 1;
                    continue;
                }
            };
            if let SeparationVerdict::Checked(c) = &verdict {
                separation.checked += 1;
                if !c.ambiguous.is_empty() {
                    separation.with_ambiguity += 1;
                }
                if c.confirmed() {
                    separation.confirmed += 1;
                } else {
                    separation.failed += 1;
                    note(format!(
                        "separation ({:?} branch, alpha={}, beta={}) violated at step {t} by {:?}",
                        c.branch,
                        scn_sep.alpha(),
                        scn_sep.beta(),
                        c.violations
                    ));
                }
            }
        }
    }

    let passed = envelope.failed == 0 && hull.failed == 0 && leader.failed == 0 && separation.failed == 0;
    InvariantSummary {
        scenario: scn.name.clone(),
        steps: traj.steps(),
        envelope,
        hull,
        leader,
        separation,
        first_failure,
        passed,
    }
}

pub fn verify_invariants_with<R: UpdateRule<f64> + ?Sized>(
    rule: &R,
    scn: &Scenario,
    out_dir: &Path,
) -> Result<InvariantSummary, RunError> {
    let traj = simulate_scenario_with(rule, scn)?;
    let summary = check_invariants(scn, &traj);
    let dir = scenario_dir(scn, out_dir)?;
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    write_file(dir.join("invariants.json"), &json)?;
    Ok(summary)
}

/// Runs the scenario under the nearest-neighbor rule and checks every step.
/// The summary is written to `invariants.json`.
pub fn verify_invariants(scn: &Scenario, out_dir: &Path) -> Result<InvariantSummary, RunError> {
    verify_invariants_with(&NearestNeighborRule, scn, out_dir)
}
