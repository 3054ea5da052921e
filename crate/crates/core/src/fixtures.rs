//! Bundled problem instances with layout hints that embed cleanly.

use crate::embed::{embed, EmbedOptions, EmbeddedInstance, LogicalProblem, RoutingSpec};
use crate::error::{Error, Result};
use crate::graph::MwisGraph;
use crate::io::{parse_json, ProblemFile};
use serde::{Deserialize, Serialize};

/// Names of every bundled fixture.
pub const FIXTURE_NAMES: [&str; 7] = [
    "fig4",
    "fig5c",
    "fig5d",
    "fig5e",
    "fig5_two_block",
    "fig5_three_block",
    "fig6",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub description: String,
    /// A complete problem file, layout hints included.
    pub problem: ProblemFile,
}

impl Fixture {
    pub fn logical(&self) -> Result<(LogicalProblem, RoutingSpec)> {
        self.problem.clone().into_problem(&self.name)
    }

    /// Embeds with default options.
    pub fn embed(&self) -> Result<EmbeddedInstance> {
        let (p, hints) = self.logical()?;
        embed(&p, &hints, &EmbedOptions::default())
    }
}

fn source(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig4" => include_str!("../fixtures/fig4.json"),
        "fig5c" => include_str!("../fixtures/fig5c.json"),
        "fig5d" => include_str!("../fixtures/fig5d.json"),
        "fig5e" => include_str!("../fixtures/fig5e.json"),
        "fig5_two_block" => include_str!("../fixtures/fig5_two_block.json"),
        "fig5_three_block" => include_str!("../fixtures/fig5_three_block.json"),
        "fig6" => include_str!("../fixtures/fig6.json"),
        _ => return None,
    })
}

pub fn fixture(name: &str) -> Result<Fixture> {
    let text = source(name).ok_or_else(|| {
        Error::input(format!(
            "unknown fixture {name:?}; available: {}",
            FIXTURE_NAMES.join(", ")
        ))
    })?;
    parse_json(text, name)
}

pub fn all_fixtures() -> Result<Vec<Fixture>> {
    FIXTURE_NAMES.iter().map(|n| fixture(n)).collect()
}

/// Two logical atoms joined by a straight MWIS wire of `length` ancillas
/// spaced `spacing_ratio·R` apart along the x axis. Atom order: α, β, then
/// the chain from the α side.
pub fn linear_wire(alpha: f64, beta: f64, length: usize, radius: f64, margin: f64) -> Result<EmbeddedInstance> {
    let g = MwisGraph::new(vec![alpha, beta], vec![(0, 1)])?;
    let opts = EmbedOptions {
        margin,
        radius,
        ..EmbedOptions::default()
    };
    let span = (length + 1) as f64 * opts.spacing_ratio * radius;
    let mut hints = RoutingSpec {
        radius: Some(radius),
        long_range: vec![[0, 1]],
        ..Default::default()
    };
    hints.positions.insert(0, [0.0, 0.0]);
    hints.positions.insert(1, [span, 0.0]);
    let inst = embed(&LogicalProblem::Mwis(g), &hints, &opts)?;
    if inst.gadgets()[0].gadget.length != length {
        return Err(Error::input(format!("no straight wire realises L = {length}")));
    }
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::QuboProblem;

    #[test]
    fn all_fixtures_parse() {
        for f in all_fixtures().unwrap() {
            let (p, _) = f.logical().unwrap();
            assert!(!p.is_empty(), "{}", f.name);
        }
        assert!(fixture("nope").is_err());
    }

    #[test]
    fn fig4_weights() {
        let (p, _) = fixture("fig4").unwrap().logical().unwrap();
        let LogicalProblem::Mwis(g) = p else { panic!() };
        assert_eq!(g.weights(), &[0.22, 0.51, 0.36, 0.21, 0.46, 0.22, 0.1, 0.57, 0.48, 0.1]);
    }

    #[test]
    fn fig5_contains_strong_coupling() {
        let (p, _) = fixture("fig5_three_block").unwrap().logical().unwrap();
        let LogicalProblem::Qubo(q) = p else { panic!() };
        assert_eq!(q.len(), 8);
        assert_eq!(q.coupling(6, 7), 1.0);
    }

    #[test]
    fn fig6_linear_terms() {
        let (p, _) = fixture("fig6").unwrap().logical().unwrap();
        let LogicalProblem::Qubo(q) = p else { panic!() };
        assert_eq!(q.linear(), &[-0.4, -0.3, -0.375, -0.25]);
        let expected = QuboProblem::new(
            vec![-0.4, -0.3, -0.375, -0.25],
            vec![
                ((0, 1), 0.275),
                ((0, 2), 0.2),
                ((0, 3), 0.175),
                ((1, 2), 0.325),
                ((1, 3), 0.2),
                ((2, 3), 0.225),
            ],
        )
        .unwrap();
        assert_eq!(q, expected);
    }

    #[test]
    fn linear_wire_lengths() {
        for l in [2, 6, 14] {
            let w = linear_wire(0.7, 0.3, l, 8.0, 0.1).unwrap();
            assert_eq!(w.len(), l + 2);
        }
    }
}
