use vicsek::dynamics::{DynamicsError, HeadingState, Mode, UpdateRule};
use vicsek::library::list_scenarios;
use vicsek::runner::{verify_invariants, verify_invariants_with};
use vicsek::scenario::parse_scenario;
use vicsek::NeighborGraph;

/// Broken rule: sums the neighborhood instead of averaging it.
struct SumRule;

impl UpdateRule<f64> for SumRule {
    fn step(
        &self,
        state: &HeadingState<f64>,
        g: &NeighborGraph,
        _mode: &Mode<f64>,
    ) -> Result<HeadingState<f64>, DynamicsError> {
        let vs = state.vertices();
        let values = vs
            .iter()
            .map(|v| {
                let own = state.get(v).unwrap();
                own + g
                    .neighbors(v)
                    .unwrap()
                    .iter()
                    .map(|&j| state.get(j).unwrap())
                    .sum::<f64>()
            })
            .collect();
        HeadingState::new(vs, values)
    }
}

#[test]
fn library_scenarios_pass_every_invariant() {
    let out = tempfile::tempdir().unwrap();
    for b in list_scenarios() {
        let summary = verify_invariants(&b.scenario(), out.path()).unwrap();
        assert!(summary.passed, "{}: {:?}", b.name, summary.first_failure);
        assert!(out.path().join(b.name).join("invariants.json").is_file());
    }
}

#[test]
fn summing_rule_breaks_the_envelope_at_step_one() {
    let scn = parse_scenario(
        r#"{"name": "sum", "n": 3, "mode": "leaderless", "initial_headings": [0.5, 1.0, 1.5],
            "signal": {"type": "constant", "graph": "complete"}, "steps": 5}"#,
    )
    .unwrap();
    let out = tempfile::tempdir().unwrap();
    let summary = verify_invariants_with(&SumRule, &scn, out.path()).unwrap();
    assert!(!summary.passed);
    assert!(summary.envelope.failed > 0);
    let first = summary.first_failure.unwrap();
    assert!(first.contains("at step 1"), "{first}");
}

#[test]
fn single_agent_passes_vacuously() {
    let scn = parse_scenario(
        r#"{"name": "one", "n": 1, "mode": "leaderless", "initial_headings": [2.0],
            "signal": {"type": "constant", "graph": "empty"}, "steps": 10}"#,
    )
    .unwrap();
    let out = tempfile::tempdir().unwrap();
    let summary = verify_invariants(&scn, out.path()).unwrap();
    assert!(summary.passed);
    assert_eq!(summary.separation.checked, 0);
}
