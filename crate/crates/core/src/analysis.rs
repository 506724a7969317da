//! Envelope series, consensus detection, per-component limits, tail bounds
//! on accumulation points, and a one-step checker for the set-separation
//! dichotomy of the averaging rule.
//!
//! Everything here reads a finished [`Trajectory`]. Envelopes and spreads are
//! taken over followers only; a leader's heading is constant and is what the
//! followers converge to.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{HeadingState, Trajectory};
use crate::graph::{GraphError, NeighborGraph, VertexSet};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error("tail fraction must lie in (0, 1], got {0}")]
    TailFraction(f64),
    #[error("limit graph covers {limit} but the trajectory covers {trajectory}")]
    VertexMismatch {
        limit: VertexSet,
        trajectory: VertexSet,
    },
    #[error("separation parameters need alpha < beta < gamma")]
    Ordering,
    #[error("states at t and t+1 cover different vertex sets")]
    StateMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeBreach {
    LowerDecreased,
    UpperIncreased,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeViolation {
    /// Time index whose envelope is worse than the one before it.
    pub step: usize,
    pub breach: EnvelopeBreach,
    pub amount: f64,
}

/// Per-step follower minimum and maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSeries<S> {
    lower: Vec<S>,
    upper: Vec<S>,
}

impl<S: Scalar> EnvelopeSeries<S> {
    pub fn from_states(states: &[HeadingState<S>]) -> Self {
        Self {
            lower: states.iter().map(HeadingState::follower_min).collect(),
            upper: states.iter().map(HeadingState::follower_max).collect(),
        }
    }

    /// Envelope over every vertex, leader included. This is the envelope that
    /// is monotone in leader-following runs.
    pub fn over_all_vertices(states: &[HeadingState<S>]) -> Self {
        let fold = |h: &HeadingState<S>| {
            h.values()
                .iter()
                .fold((S::infinity(), S::neg_infinity()), |(lo, hi), &x| (lo.min(x), hi.max(x)))
        };
        let (lower, upper) = states.iter().map(fold).unzip();
        Self { lower, upper }
    }

    pub fn lower(&self) -> &[S] {
        &self.lower
    }

    pub fn upper(&self) -> &[S] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn spread(&self, t: usize) -> S {
        self.upper[t] - self.lower[t]
    }

    pub fn spreads(&self) -> Vec<S> {
        (0..self.len()).map(|t| self.spread(t)).collect()
    }

    /// Steps where the minimum fell or the maximum rose by more than `tol`.
    pub fn monotonicity_violations(&self, tol: S) -> Vec<EnvelopeViolation> {
        let mut out = Vec::new();
        for t in 1..self.len() {
            let drop = self.lower[t - 1] - self.lower[t];
            if drop > tol {
                out.push(EnvelopeViolation {
                    step: t,
                    breach: EnvelopeBreach::LowerDecreased,
                    amount: drop.lossless_f64(),
                });
            }
            let rise = self.upper[t] - self.upper[t - 1];
            if rise > tol {
                out.push(EnvelopeViolation {
                    step: t,
                    breach: EnvelopeBreach::UpperIncreased,
                    amount: rise.lossless_f64(),
                });
            }
        }
        out
    }
}

pub fn envelope_series<S: Scalar>(traj: &Trajectory<S>) -> EnvelopeSeries<S> {
    EnvelopeSeries::from_states(traj.headings())
}

/// Finite-horizon consensus verdict for a set of followers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport<S> {
    /// Followers covered by this report.
    pub agents: Vec<usize>,
    pub converged: bool,
    /// Midpoint of the final envelope.
    pub theta_ss: S,
    /// First step from which the spread stays within tolerance to the end.
    pub steps_to_tolerance: Option<usize>,
    pub m_estimate: S,
    #[serde(rename = "M_estimate")]
    pub big_m_estimate: S,
    pub tolerance: S,
    /// Steps `[start, end]` over which the spread stayed within tolerance.
    #[serde(skip)]
    pub tail_window: Option<(usize, usize)>,
}

fn check_tolerance<S: Scalar>(tol: S) -> Result<(), AnalysisError> {
    if tol > S::zero() && tol.is_finite() {
        Ok(())
    } else {
        Err(AnalysisError::Tolerance(tol.lossless_f64()))
    }
}

fn consensus_over<S: Scalar>(traj: &Trajectory<S>, agents: &[usize], tol: S) -> ConvergenceReport<S> {
    let vs = traj.vertices();
    let slots: Vec<usize> = agents.iter().map(|&v| vs.slot(v)).collect();
    let bounds: Vec<(S, S)> = traj
        .headings()
        .iter()
        .map(|h| {
            slots.iter().fold((S::infinity(), S::neg_infinity()), |(lo, hi), &s| {
                (lo.min(h.values()[s]), hi.max(h.values()[s]))
            })
        })
        .collect();
    let last = bounds.len() - 1;
    let mut first_ok = None;
    for t in (0..=last).rev() {
        let (lo, hi) = bounds[t];
        if hi - lo <= tol {
            first_ok = Some(t);
        } else {
            break;
        }
    }
    let (lo, hi) = bounds[last];
    ConvergenceReport {
        agents: agents.to_vec(),
        converged: first_ok.is_some(),
        theta_ss: (lo + hi) / (S::one() + S::one()),
        steps_to_tolerance: first_ok,
        m_estimate: lo,
        big_m_estimate: hi,
        tolerance: tol,
        tail_window: first_ok.map(|t| (t, last)),
    }
}

/// Converged once the follower spread drops to `tol` and stays there to the end.
pub fn detect_consensus<S: Scalar>(
    traj: &Trajectory<S>,
    tol: S,
) -> Result<ConvergenceReport<S>, AnalysisError> {
    check_tolerance(tol)?;
    let agents: Vec<usize> = traj.vertices().follower_vertices().collect();
    Ok(consensus_over(traj, &agents, tol))
}

/// One consensus report per connected component of `limit` that holds followers.
pub fn component_limits<S: Scalar>(
    traj: &Trajectory<S>,
    limit: &NeighborGraph,
    tol: S,
) -> Result<Vec<ConvergenceReport<S>>, AnalysisError> {
    check_tolerance(tol)?;
    if limit.vertices() != traj.vertices() {
        return Err(AnalysisError::VertexMismatch {
            limit: limit.vertices(),
            trajectory: traj.vertices(),
        });
    }
    Ok(limit
        .connected_components()
        .blocks()
        .iter()
        .map(|b| b.iter().copied().filter(|&v| v != 0).collect::<Vec<_>>())
        .filter(|b| !b.is_empty())
        .map(|b| consensus_over(traj, &b, tol))
        .collect())
}

/// Per-agent min and max over a trailing window: finite-horizon estimates of
/// the smallest and largest accumulation points of each heading sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBounds<S> {
    /// Time steps `[start, end)` examined.
    pub window: (usize, usize),
    /// `(agent, m_i, M_i)` for every follower.
    pub per_agent: Vec<(usize, S, S)>,
    pub m: S,
    #[serde(rename = "M")]
    pub big_m: S,
}

pub fn tail_bounds<S: Scalar>(
    traj: &Trajectory<S>,
    tail_fraction: f64,
) -> Result<TailBounds<S>, AnalysisError> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(AnalysisError::TailFraction(tail_fraction));
    }
    let len = traj.headings().len();
    let width = ((tail_fraction * len as f64).ceil() as usize).clamp(1, len);
    let start = len - width;
    let tail = &traj.headings()[start..];
    let vs = traj.vertices();
    let per_agent: Vec<(usize, S, S)> = vs
        .follower_vertices()
        .map(|v| {
            let s = vs.slot(v);
            let (lo, hi) = tail.iter().fold((S::infinity(), S::neg_infinity()), |(lo, hi), h| {
                (lo.min(h.values()[s]), hi.max(h.values()[s]))
            });
            (v, lo, hi)
        })
        .collect();
    let m = per_agent.iter().map(|a| a.1).fold(S::infinity(), S::min);
    let big_m = per_agent.iter().map(|a| a.2).fold(S::neg_infinity(), S::max);
    Ok(TailBounds {
        window: (start, len),
        per_agent,
        m,
        big_m,
    })
}

/// The JSON report layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument<S> {
    pub converged: bool,
    pub theta_ss: S,
    pub steps_to_tolerance: Option<usize>,
    pub m_estimate: S,
    #[serde(rename = "M_estimate")]
    pub big_m_estimate: S,
    pub tolerance: S,
    pub components: Vec<ConvergenceReport<S>>,
}

impl<S: Scalar> ReportDocument<S> {
    pub fn new(whole: &ConvergenceReport<S>, components: Vec<ConvergenceReport<S>>) -> Self {
        Self {
            converged: whole.converged,
            theta_ss: whole.theta_ss,
            steps_to_tolerance: whole.steps_to_tolerance,
            m_estimate: whole.m_estimate,
            big_m_estimate: whole.big_m_estimate,
            tolerance: whole.tolerance,
            components,
        }
    }
}

/// `{ i : a < theta_i < b }` over every vertex of the state.
pub fn agents_between<S: Scalar>(state: &HeadingState<S>, a: S, b: S) -> BTreeSet<usize> {
    let vs = state.vertices();
    state
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &x)| a < x && x < b)
        .map(|(s, _)| vs.vertex_at(s))
        .collect()
}

/// Parameters `alpha < beta < gamma` of the separation statement, with
/// `delta = beta - alpha` and `epsilon = delta / n^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationScenario<S> {
    alpha: S,
    beta: S,
    gamma: S,
    agents: usize,
    delta: S,
    epsilon: S,
}

impl<S: Scalar> SeparationScenario<S> {
    /// `agents` is the size of the vertex set the states cover.
    pub fn new(alpha: S, beta: S, gamma: S, agents: usize) -> Result<Self, AnalysisError> {
        if !(alpha < beta && beta < gamma) {
            return Err(AnalysisError::Ordering);
        }
        let delta = beta - alpha;
        let n = S::from_count(agents);
        let epsilon = delta / n.powi(agents as i32);
        Ok(Self {
            alpha,
            beta,
            gamma,
            agents,
            delta,
            epsilon,
        })
    }

    pub fn alpha(&self) -> S {
        self.alpha
    }

    pub fn beta(&self) -> S {
        self.beta
    }

    pub fn gamma(&self) -> S {
        self.gamma
    }

    pub fn delta(&self) -> S {
        self.delta
    }

    pub fn epsilon(&self) -> S {
        self.epsilon
    }

    /// `V_t(alpha - eps, alpha + eps)`.
    pub fn lower_set(&self, state: &HeadingState<S>) -> BTreeSet<usize> {
        agents_between(state, self.alpha - self.epsilon, self.alpha + self.epsilon)
    }

    /// `V_t(beta - eps, gamma + eps)`.
    pub fn upper_set(&self, state: &HeadingState<S>) -> BTreeSet<usize> {
        agents_between(state, self.beta - self.epsilon, self.gamma + self.epsilon)
    }

    /// `V_t(alpha + delta/n - eps, gamma + eps)`.
    pub fn raised_set(&self, state: &HeadingState<S>) -> BTreeSet<usize> {
        agents_between(state, self.raised_floor(), self.gamma + self.epsilon)
    }

    fn raised_floor(&self) -> S {
        self.alpha + self.delta / S::from_count(self.agents) - self.epsilon
    }

    fn boundaries(&self) -> [S; 5] {
        [
            self.alpha - self.epsilon,
            self.alpha + self.epsilon,
            self.beta - self.epsilon,
            self.gamma + self.epsilon,
            self.raised_floor(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisFailure {
    LowerSetEmpty,
    UpperSetEmpty,
    Overlapping(Vec<usize>),
    Uncovered(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationBranch {
    /// No edge joins the two sets: both are preserved.
    Disconnected,
    /// Some edge joins them: lower agents with an upper neighbor leave, and
    /// everyone outside the lower set ends above `alpha + delta/n - eps`.
    Connected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationCheck {
    pub branch: SeparationBranch,
    pub lower_t: BTreeSet<usize>,
    pub upper_t: BTreeSet<usize>,
    pub lower_t1: BTreeSet<usize>,
    pub upper_t1: BTreeSet<usize>,
    /// Lower followers with a neighbor in the upper set at `t`.
    pub departing: BTreeSet<usize>,
    /// `V_{t+1}(alpha + delta/n - eps, gamma + eps)`.
    pub raised_t1: BTreeSet<usize>,
    /// Agents contradicting the applicable claim, boundary-ambiguous ones excluded.
    pub violations: Vec<usize>,
    /// Agents within tolerance of a set boundary at `t` or `t + 1`.
    pub ambiguous: Vec<usize>,
}

impl SeparationCheck {
    pub fn confirmed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationVerdict {
    HypothesisViolated {
        failure: HypothesisFailure,
        ambiguous: Vec<usize>,
    },
    Checked(SeparationCheck),
}

impl SeparationVerdict {
    pub fn confirmed(&self) -> bool {
        matches!(self, SeparationVerdict::Checked(c) if c.confirmed())
    }

    pub fn hypothesis_held(&self) -> bool {
        matches!(self, SeparationVerdict::Checked(_))
    }
}

fn symmetric_difference(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> BTreeSet<usize> {
    a.symmetric_difference(b).copied().collect()
}

fn near_boundary<S: Scalar>(state: &HeadingState<S>, bounds: &[S], tol: S) -> BTreeSet<usize> {
    let vs = state.vertices();
    state
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &x)| bounds.iter().any(|&b| (x - b).abs() <= tol))
        .map(|(s, _)| vs.vertex_at(s))
        .collect()
}

/// Checks one step `state_t -> state_t1` under graph `g_t` against the
/// separation dichotomy, with the default boundary tolerance of `S`.
pub fn check_separation_step<S: Scalar>(
    scn: &SeparationScenario<S>,
    state_t: &HeadingState<S>,
    g_t: &NeighborGraph,
    state_t1: &HeadingState<S>,
) -> Result<SeparationVerdict, AnalysisError> {
    check_separation_step_with(scn, state_t, g_t, state_t1, S::invariant_tolerance())
}

pub fn check_separation_step_with<S: Scalar>(
    scn: &SeparationScenario<S>,
    state_t: &HeadingState<S>,
    g_t: &NeighborGraph,
    state_t1: &HeadingState<S>,
    tol: S,
) -> Result<SeparationVerdict, AnalysisError> {
    let vs = state_t.vertices();
    if state_t1.vertices() != vs {
        return Err(AnalysisError::StateMismatch);
    }
    if g_t.vertices() != vs {
        return Err(AnalysisError::VertexMismatch {
            limit: g_t.vertices(),
            trajectory: vs,
        });
    }
    let bounds = scn.boundaries();
    let ambiguous_t = near_boundary(state_t, &bounds[..4], tol);
    let ambiguous_t1 = near_boundary(state_t1, &bounds, tol);
    let ambiguous: BTreeSet<usize> = ambiguous_t.union(&ambiguous_t1).copied().collect();
    let ambiguous_list: Vec<usize> = ambiguous.iter().copied().collect();

    let lower_t = scn.lower_set(state_t);
    let upper_t = scn.upper_set(state_t);
    let failure = if lower_t.is_empty() {
        Some(HypothesisFailure::LowerSetEmpty)
    } else if upper_t.is_empty() {
        Some(HypothesisFailure::UpperSetEmpty)
    } else {
        let overlap: Vec<usize> = lower_t.intersection(&upper_t).copied().collect();
        let uncovered: Vec<usize> = vs
            .iter()
            .filter(|v| !lower_t.contains(v) && !upper_t.contains(v))
            .collect();
        if !overlap.is_empty() {
            Some(HypothesisFailure::Overlapping(overlap))
        } else if !uncovered.is_empty() {
            Some(HypothesisFailure::Uncovered(uncovered))
        } else {
            None
        }
    };
    if let Some(failure) = failure {
        return Ok(SeparationVerdict::HypothesisViolated {
            failure,
            ambiguous: ambiguous_list,
        });
    }

    let lower_t1 = scn.lower_set(state_t1);
    let upper_t1 = scn.upper_set(state_t1);
    let raised_t1 = scn.raised_set(state_t1);
    // The leader keeps its heading, so it never departs.
    let departing: BTreeSet<usize> = lower_t
        .iter()
        .copied()
        .filter(|&i| !(vs.has_leader() && i == 0))
        .filter(|&i| {
            g_t.neighbors(i)
                .map(|ns| ns.iter().any(|j| upper_t.contains(j)))
                .unwrap_or(false)
        })
        .collect();

    let (branch, mismatched) = if g_t.joins(&lower_t, &upper_t) {
        let expected_lower: BTreeSet<usize> = lower_t.difference(&departing).copied().collect();
        let rest: BTreeSet<usize> = vs.iter().filter(|v| !lower_t1.contains(v)).collect();
        let mut bad = symmetric_difference(&lower_t1, &expected_lower);
        bad.extend(symmetric_difference(&rest, &raised_t1));
        (SeparationBranch::Connected, bad)
    } else {
        let mut bad = symmetric_difference(&lower_t1, &lower_t);
        bad.extend(symmetric_difference(&upper_t1, &upper_t));
        (SeparationBranch::Disconnected, bad)
    };
    let violations = mismatched
        .into_iter()
        .filter(|v| !ambiguous.contains(v))
        .collect();
    Ok(SeparationVerdict::Checked(SeparationCheck {
        branch,
        lower_t,
        upper_t,
        lower_t1,
        upper_t1,
        departing,
        raised_t1,
        violations,
        ambiguous: ambiguous_list,
    }))
}

/// Separation scenarios whose hypothesis `state` satisfies: for each split of
/// the sorted headings into a lower and an upper group, `alpha` is the lower
/// group's midpoint and `beta` the upper group's minimum, kept when the lower
/// group fits strictly inside `(alpha - eps, alpha + eps)`.
pub fn separation_probes<S: Scalar>(state: &HeadingState<S>) -> Vec<SeparationScenario<S>> {
    let n = state.vertices().len();
    if n < 2 {
        return Vec::new();
    }
    let mut sorted = state.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let two = S::one() + S::one();
    let mut out = Vec::new();
    for k in 1..n {
        let (lo, hi) = (sorted[0], sorted[k - 1]);
        let alpha = (lo + hi) / two;
        let beta = sorted[k];
        let top = sorted[n - 1];
        if beta <= alpha {
            continue;
        }
        let gamma = if top > beta { top } else { beta + (beta - alpha) };
        let Ok(scn) = SeparationScenario::new(alpha, beta, gamma, n) else {
            continue;
        };
        if (hi - lo) / two < scn.epsilon() && scn.alpha + scn.epsilon < scn.beta - scn.epsilon {
            out.push(scn);
        }
    }
    out
}
