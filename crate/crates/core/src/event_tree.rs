//! Consequence side of the bow-tie: the central event's frequency split
//! along conditional branches into phenomenon frequencies.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EventTreeError {
    #[error("branch `{label}`: probability {value} is outside [0, 1]")]
    ProbabilityOutOfRange { label: String, value: f64 },
    #[error("duplicate outcome label `{0}`")]
    DuplicateOutcome(String),
    #[error("central event frequency must be finite and >= 0, got {0}")]
    NegativeFrequency(f64),
    #[error("branch `{label}`: cannot resolve probability source: {message}")]
    Unresolved { label: String, message: String },
}

/// Where a branch's "yes" probability comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilitySource {
    /// Fixed conditional probability.
    Constant(f64),
    /// Failure probability of a basic event (e.g. an on-demand constant).
    Event(String),
    /// Failure probability of a protection barrier.
    Barrier(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventTreeNode {
    Branch {
        label: String,
        p_yes: ProbabilitySource,
        yes: Box<EventTreeNode>,
        no: Box<EventTreeNode>,
    },
    Outcome(String),
}

impl EventTreeNode {
    /// Outcome labels in depth-first order, "yes" limb first.
    pub fn outcomes(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |node| {
            if let EventTreeNode::Outcome(label) = node {
                out.push(label.as_str());
            }
        });
        out
    }

    /// Every `(branch label, source)` pair, depth-first.
    pub fn sources(&self) -> Vec<(&str, &ProbabilitySource)> {
        let mut out = Vec::new();
        self.walk(&mut |node| {
            if let EventTreeNode::Branch { label, p_yes, .. } = node {
                out.push((label.as_str(), p_yes));
            }
        });
        out
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a EventTreeNode)) {
        f(self);
        if let EventTreeNode::Branch { yes, no, .. } = self {
            yes.walk(f);
            no.walk(f);
        }
    }

    /// Duplicate outcome labels, in first-repeat order.
    pub fn duplicate_outcomes(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.outcomes()
            .into_iter()
            .filter(|l| !seen.insert(*l))
            .map(str::to_string)
            .collect()
    }
}

/// Phenomenon frequencies, per year, in natural label order
/// (`PhD2` before `PhD10`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhdFrequencies(pub Vec<(String, f64)>);

impl PhdFrequencies {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.0.iter().find(|(l, _)| l == label).map(|(_, f)| *f)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(l, f)| (l.as_str(), *f))
    }

    pub fn total(&self) -> f64 {
        self.0.iter().map(|(_, f)| f).sum()
    }
}

/// Splits `erc_frequency` along every path; each outcome gets the product
/// of the branch probabilities on its path. `resolve` maps each probability
/// source to a number.
pub fn propagate(
    erc_frequency: f64,
    tree: &EventTreeNode,
    resolve: &dyn Fn(&ProbabilitySource) -> Result<f64, String>,
) -> Result<PhdFrequencies, EventTreeError> {
    if !(erc_frequency.is_finite() && erc_frequency >= 0.0) {
        return Err(EventTreeError::NegativeFrequency(erc_frequency));
    }
    if let Some(dup) = tree.duplicate_outcomes().into_iter().next() {
        return Err(EventTreeError::DuplicateOutcome(dup));
    }
    let mut out = Vec::new();
    descend(erc_frequency, tree, resolve, &mut out)?;
    out.sort_by(|a, b| natural_cmp(&a.0, &b.0));
    Ok(PhdFrequencies(out))
}

/// [`propagate`] for trees whose sources are all constants.
pub fn propagate_constants(
    erc_frequency: f64,
    tree: &EventTreeNode,
) -> Result<PhdFrequencies, EventTreeError> {
    propagate(erc_frequency, tree, &|source| match source {
        ProbabilitySource::Constant(p) => Ok(*p),
        other => Err(format!("{other:?} needs a resolver")),
    })
}

/// Orders labels by their non-digit prefix, then by trailing number.
fn natural_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    let split = |s: &str| {
        let digits = s.len() - s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let (head, tail) = s.split_at(s.len() - digits);
        (head.to_string(), tail.parse::<u64>().ok())
    };
    split(a).cmp(&split(b)).then_with(|| a.cmp(b))
}

fn descend(
    frequency: f64,
    node: &EventTreeNode,
    resolve: &dyn Fn(&ProbabilitySource) -> Result<f64, String>,
    out: &mut Vec<(String, f64)>,
) -> Result<(), EventTreeError> {
    match node {
        EventTreeNode::Outcome(label) => out.push((label.clone(), frequency)),
        EventTreeNode::Branch {
            label,
            p_yes,
            yes,
            no,
        } => {
            let p = resolve(p_yes).map_err(|message| EventTreeError::Unresolved {
                label: label.clone(),
                message,
            })?;
            if !(0.0..=1.0).contains(&p) {
                return Err(EventTreeError::ProbabilityOutOfRange {
                    label: label.clone(),
                    value: p,
                });
            }
            descend(frequency * p, yes, resolve, out)?;
            descend(frequency * (1.0 - p), no, resolve, out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn branch(label: &str, p: f64, yes: EventTreeNode, no: EventTreeNode) -> EventTreeNode {
        EventTreeNode::Branch {
            label: label.into(),
            p_yes: ProbabilitySource::Constant(p),
            yes: Box::new(yes),
            no: Box::new(no),
        }
    }

    fn out(label: &str) -> EventTreeNode {
        EventTreeNode::Outcome(label.into())
    }

    /// Ignition and blast-proof structure of the separator study.
    fn separator_tree() -> EventTreeNode {
        let blast =
            |hold: &str, fail: &str| branch("blast_proof_fails", 0.01, out(fail), out(hold));
        branch(
            "immediate_ignition",
            0.7,
            blast("PhD1", "PhD2"),
            branch(
                "delayed_ignition",
                1.0,
                branch(
                    "explosion",
                    0.4,
                    blast("PhD3", "PhD4"),
                    blast("PhD5", "PhD6"),
                ),
                out("PhD7"),
            ),
        )
    }

    #[test]
    fn separator_paths() {
        let r = propagate_constants(2.07e-4, &separator_tree()).unwrap();
        let phd1 = r.get("PhD1").unwrap();
        assert!((phd1 - 2.07e-4 * 0.7 * 0.99).abs() < 1e-18);
        assert!((phd1 - 1.434e-4).abs() < 1e-7);
        let phd4 = r.get("PhD4").unwrap();
        assert!((phd4 - 2.07e-4 * 0.3 * 0.4 * 0.01).abs() < 1e-20);
        assert_eq!(r.get("PhD7"), Some(0.0));
        assert_eq!(
            r.iter().map(|(l, _)| l).collect::<Vec<_>>(),
            ["PhD1", "PhD2", "PhD3", "PhD4", "PhD5", "PhD6", "PhD7"]
        );
    }

    #[test]
    fn ratios_are_products_of_branch_probabilities() {
        let r = propagate_constants(1.0, &separator_tree()).unwrap();
        let expected = [
            ("PhD1", 0.693),
            ("PhD2", 0.007),
            ("PhD3", 0.1188),
            ("PhD4", 0.0012),
            ("PhD5", 0.1782),
            ("PhD6", 0.0018),
            ("PhD7", 0.0),
        ];
        for (label, ratio) in expected {
            assert!((r.get(label).unwrap() - ratio).abs() < 1e-12, "{label}");
        }
        assert!((r.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let bad = branch("x", 1.5, out("a"), out("b"));
        assert!(matches!(
            propagate_constants(1.0, &bad),
            Err(EventTreeError::ProbabilityOutOfRange { .. })
        ));
        let dup = branch("x", 0.5, out("a"), out("a"));
        assert!(matches!(
            propagate_constants(1.0, &dup),
            Err(EventTreeError::DuplicateOutcome(_))
        ));
        assert!(matches!(
            propagate_constants(-1.0, &out("a")),
            Err(EventTreeError::NegativeFrequency(_))
        ));
        let unresolved = EventTreeNode::Branch {
            label: "x".into(),
            p_yes: ProbabilitySource::Barrier("B".into()),
            yes: Box::new(out("a")),
            no: Box::new(out("b")),
        };
        assert!(matches!(
            propagate_constants(1.0, &unresolved),
            Err(EventTreeError::Unresolved { .. })
        ));
    }
}
