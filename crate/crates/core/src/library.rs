//! Built-in scenarios, each a scenario document shipped with the crate.

use crate::scenario::{parse_scenario, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuiltinScenario {
    pub name: &'static str,
    pub description: &'static str,
    /// The property the scenario demonstrates.
    pub exercises: &'static str,
    pub document: &'static str,
}

impl BuiltinScenario {
    pub fn scenario(&self) -> Scenario {
        parse_scenario(self.document).expect("built-in scenarios are valid")
    }
}

macro_rules! builtin {
    ($name:literal, $exercises:literal, $description:literal) => {
        BuiltinScenario {
            name: $name,
            description: $description,
            exercises: $exercises,
            document: include_str!(concat!("../scenarios/", $name, ".json")),
        }
    };
}

const LIBRARY: &[BuiltinScenario] = &[
    builtin!(
        "jlm-periodic",
        "periodic joint connectivity",
        "4 agents, single path edges cycling with period 3; every period links all agents"
    ),
    builtin!(
        "jlm-bounded-intervals",
        "bounded non-overlapping intervals",
        "4 agents linked across intervals of length 2 starting every 7 steps, empty in between"
    ),
    builtin!(
        "thm1-sparse-star",
        "finally jointly connected consensus",
        "5 agents, star graph at t = 1, 2, 4, 8, ... and empty otherwise; gaps are unbounded"
    ),
    builtin!(
        "remark-two-components",
        "disconnected limit graph",
        "constant graph with components {1,2} and {3,4}; each component agrees on its own heading"
    ),
    builtin!(
        "leader-star",
        "leader-following convergence",
        "leader 0 with fixed heading 0 joined to agent 1, followers on a path; all approach 0"
    ),
    builtin!(
        "leader-sparse",
        "leader-following convergence",
        "leader 0 linked to every follower only at powers of two; followers approach theta0"
    ),
    builtin!(
        "geometric-basic",
        "distance-based neighbor graphs",
        "4 agents with equal headings moving together; graph and headings never change"
    ),
    builtin!(
        "random-stress",
        "envelope monotonicity",
        "8 agents with seeded headings under independent random graphs, p = 0.2"
    ),
    builtin!(
        "control-empty",
        "non-interaction control",
        "3 agents that never interact; headings stay put and no consensus is reached"
    ),
];

/// Every built-in scenario, in a fixed order.
pub fn list_scenarios() -> &'static [BuiltinScenario] {
    LIBRARY
}

pub fn builtin(name: &str) -> Option<Scenario> {
    LIBRARY
        .iter()
        .find(|b| b.name == name)
        .map(BuiltinScenario::scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_contains_required_scenarios() {
        let names: Vec<_> = list_scenarios().iter().map(|b| b.name).collect();
        for required in [
            "jlm-periodic",
            "jlm-bounded-intervals",
            "thm1-sparse-star",
            "remark-two-components",
            "leader-star",
            "geometric-basic",
        ] {
            assert!(names.contains(&required), "{required}");
        }
    }

    #[test]
    fn every_document_parses_under_its_own_name() {
        for b in list_scenarios() {
            assert_eq!(b.scenario().name, b.name);
        }
        assert!(builtin("no-such-scenario").is_none());
    }
}
