//! Confidence-level (NC) assessment of technical barriers and the
//! division-based propagation of initiating-event frequencies.
//!
//! A barrier's NC is read from a table indexed by element complexity,
//! hardware fault tolerance and safe-failure fraction; NCn credits a risk
//! reduction factor of 10^n.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_tree::{self, EventTreeError, EventTreeNode, PhdFrequencies, ProbabilitySource};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemiQuantError {
    #[error("barrier `{0}` has no credited elements")]
    EmptyBarrier(String),
    #[error("barrier `{barrier}`: hardware fault tolerance {hft} is outside 0..=2")]
    InvalidHft { barrier: String, hft: u8 },
    #[error("barrier `{barrier}`: safe-failure fraction {sff} is outside [0, 1)")]
    InvalidSff { barrier: String, sff: f64 },
    #[error("initiating event `{0}` has no barrier mapping")]
    UnmappedInitiatingEvent(String),
    #[error("barrier `{0}` has no risk reduction factor")]
    MissingFactor(String),
    #[error("initiating event `{id}`: frequency {value} must be finite and >= 0")]
    InvalidFrequency { id: String, value: f64 },
    #[error(transparent)]
    EventTree(#[from] EventTreeError),
}

/// Elements with a microprocessor are complex; the rest are simple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Complexity {
    Simple,
    Complex,
}

/// Confidence level (NC). `None` means no risk reduction can be credited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConfidenceLevel {
    None,
    Nc1,
    Nc2,
    Nc3,
    Nc4,
}

impl ConfidenceLevel {
    pub fn from_level(level: u8) -> Self {
        match level {
            0 => Self::None,
            1 => Self::Nc1,
            2 => Self::Nc2,
            3 => Self::Nc3,
            _ => Self::Nc4,
        }
    }

    pub fn level(self) -> u8 {
        self as u8
    }

    /// `10^n` for NCn, 1 for `None`.
    pub fn risk_reduction_factor(self) -> f64 {
        10f64.powi(i32::from(self.level()))
    }
}

impl fmt::Display for ConfidenceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => f.write_str("-"),
            other => write!(f, "NC{}", other.level()),
        }
    }
}

/// SFF bands of the lookup tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SffBucket {
    Below60,
    From60To90,
    From90To99,
    AtLeast99,
}

impl SffBucket {
    pub fn of(sff: f64) -> Self {
        if sff < 0.60 {
            Self::Below60
        } else if sff < 0.90 {
            Self::From60To90
        } else if sff < 0.99 {
            Self::From90To99
        } else {
            Self::AtLeast99
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Below60 => "<60%",
            Self::From60To90 => "60-90%",
            Self::From90To99 => "90-99%",
            Self::AtLeast99 => ">=99%",
        }
    }
}

/// Maximum NC, rows by SFF bucket, columns by HFT 0/1/2.
const SIMPLE_TABLE: [[u8; 3]; 4] = [[1, 2, 3], [2, 3, 4], [3, 4, 4], [3, 4, 4]];
const COMPLEX_TABLE: [[u8; 3]; 4] = [[0, 1, 2], [1, 2, 3], [2, 3, 4], [3, 4, 4]];

#[derive(Debug, Clone, PartialEq)]
pub struct SemiQuantBarrierProfile {
    pub barrier_id: String,
    pub complexity: Complexity,
    pub hft: u8,
    /// Governing (lowest) SFF among the credited elements.
    pub sff_effective: f64,
    /// Human action is part of the barrier but not of its SFF.
    pub operator_excluded: bool,
}

/// Table cell for the profile.
pub fn nc_lookup(profile: &SemiQuantBarrierProfile) -> ConfidenceLevel {
    let table = match profile.complexity {
        Complexity::Simple => &SIMPLE_TABLE,
        Complexity::Complex => &COMPLEX_TABLE,
    };
    let row = SffBucket::of(profile.sff_effective) as usize;
    let col = usize::from(profile.hft.min(2));
    ConfidenceLevel::from_level(table[row][col])
}

/// One credited element of a barrier.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierElement {
    pub id: String,
    pub complexity: Complexity,
    pub sff: f64,
}

/// Most penalizing profile of a barrier: complex if any element is complex,
/// lowest SFF over the elements, declared HFT.
pub fn effective_profile(
    barrier_id: &str,
    elements: &[BarrierElement],
    declared_hft: u8,
    operator_excluded: bool,
) -> Result<SemiQuantBarrierProfile, SemiQuantError> {
    if elements.is_empty() {
        return Err(SemiQuantError::EmptyBarrier(barrier_id.to_string()));
    }
    if declared_hft > 2 {
        return Err(SemiQuantError::InvalidHft {
            barrier: barrier_id.to_string(),
            hft: declared_hft,
        });
    }
    let complexity = elements
        .iter()
        .map(|e| e.complexity)
        .max()
        .unwrap_or(Complexity::Simple);
    let sff_effective = elements.iter().map(|e| e.sff).fold(f64::INFINITY, f64::min);
    if !(0.0..1.0).contains(&sff_effective) {
        return Err(SemiQuantError::InvalidSff {
            barrier: barrier_id.to_string(),
            sff: sff_effective,
        });
    }
    Ok(SemiQuantBarrierProfile {
        barrier_id: barrier_id.to_string(),
        complexity,
        hft: declared_hft,
        sff_effective,
        operator_excluded,
    })
}

/// An initiating event with the barriers credited against it.
#[derive(Debug, Clone, PartialEq)]
pub struct CreditedInitiator {
    pub id: String,
    pub frequency_per_year: f64,
    /// `None` when the event was never mapped.
    pub barriers: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiQuantBowTie<'a> {
    pub initiating_events: Vec<CreditedInitiator>,
    /// Risk reduction factor per barrier.
    pub factors: BTreeMap<String, f64>,
    pub event_tree: &'a EventTreeNode,
    /// Probabilities of `event` sources in the event tree.
    pub event_probabilities: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiQuantResult {
    pub erc_frequency: f64,
    pub by_initiating_event: Vec<(String, f64)>,
    pub phd: PhdFrequencies,
}

/// Central-event frequency `sum_e f_e / prod(factors of barriers on e)`,
/// then the event tree. Barrier sources in the event tree use `1 / factor`.
pub fn semiquant_propagate(model: &SemiQuantBowTie<'_>) -> Result<SemiQuantResult, SemiQuantError> {
    let mut by_initiating_event = Vec::with_capacity(model.initiating_events.len());
    for ei in &model.initiating_events {
        if !(ei.frequency_per_year.is_finite() && ei.frequency_per_year >= 0.0) {
            return Err(SemiQuantError::InvalidFrequency {
                id: ei.id.clone(),
                value: ei.frequency_per_year,
            });
        }
        let barriers = ei
            .barriers
            .as_ref()
            .ok_or_else(|| SemiQuantError::UnmappedInitiatingEvent(ei.id.clone()))?;
        let mut divisor = 1.0;
        for b in barriers {
            divisor *= model
                .factors
                .get(b)
                .ok_or_else(|| SemiQuantError::MissingFactor(b.clone()))?;
        }
        by_initiating_event.push((ei.id.clone(), ei.frequency_per_year / divisor));
    }
    let erc_frequency = by_initiating_event.iter().map(|(_, f)| f).sum();
    let phd = event_tree::propagate(erc_frequency, model.event_tree, &|source| match source {
        ProbabilitySource::Constant(p) => Ok(*p),
        ProbabilitySource::Event(id) => model
            .event_probabilities
            .get(id)
            .copied()
            .ok_or_else(|| format!("no probability for event `{id}`")),
        ProbabilitySource::Barrier(id) => model
            .factors
            .get(id)
            .map(|f| 1.0 / f)
            .ok_or_else(|| format!("no risk reduction factor for barrier `{id}`")),
    })?;
    Ok(SemiQuantResult {
        erc_frequency,
        by_initiating_event,
        phd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(complexity: Complexity, hft: u8, sff: f64) -> SemiQuantBarrierProfile {
        SemiQuantBarrierProfile {
            barrier_id: "b".into(),
            complexity,
            hft,
            sff_effective: sff,
            operator_excluded: false,
        }
    }

    fn element(id: &str, complexity: Complexity, sff: f64) -> BarrierElement {
        BarrierElement {
            id: id.into(),
            complexity,
            sff,
        }
    }

    #[test]
    fn table_cells() {
        let relief = nc_lookup(&profile(Complexity::Simple, 0, 0.50));
        assert_eq!(relief, ConfidenceLevel::Nc1);
        assert_eq!(relief.risk_reduction_factor(), 10.0);
        let sis = nc_lookup(&profile(Complexity::Complex, 1, 0.65));
        assert_eq!(sis, ConfidenceLevel::Nc2);
        assert_eq!(sis.risk_reduction_factor(), 100.0);
        let dot = nc_lookup(&profile(Complexity::Complex, 0, 0.40));
        assert_eq!(dot, ConfidenceLevel::None);
        assert_eq!(dot.risk_reduction_factor(), 1.0);
    }

    #[test]
    fn bucket_edges() {
        assert_eq!(SffBucket::of(0.5999), SffBucket::Below60);
        assert_eq!(SffBucket::of(0.60), SffBucket::From60To90);
        assert_eq!(SffBucket::of(0.90), SffBucket::From90To99);
        assert_eq!(SffBucket::of(0.99), SffBucket::AtLeast99);
    }

    #[test]
    fn monotone_over_all_cells() {
        let sffs = [0.3, 0.7, 0.95, 0.995];
        for complexity in [Complexity::Simple, Complexity::Complex] {
            for (i, &sff) in sffs.iter().enumerate() {
                for hft in 0..=2u8 {
                    let here = nc_lookup(&profile(complexity, hft, sff));
                    if hft < 2 {
                        assert!(nc_lookup(&profile(complexity, hft + 1, sff)) >= here);
                    }
                    if i + 1 < sffs.len() {
                        assert!(nc_lookup(&profile(complexity, hft, sffs[i + 1])) >= here);
                    }
                    // a complex element never earns more than a simple one
                    assert!(
                        nc_lookup(&profile(Complexity::Simple, hft, sff))
                            >= nc_lookup(&profile(Complexity::Complex, hft, sff))
                    );
                }
            }
        }
    }

    #[test]
    fn factors_are_powers_of_ten() {
        for level in 0..=4 {
            let nc = ConfidenceLevel::from_level(level);
            assert_eq!(nc.risk_reduction_factor(), 10f64.powi(i32::from(level)));
        }
    }

    #[test]
    fn governing_profiles_of_the_separator_barriers() {
        let alarm = effective_profile(
            "ALARM",
            &[
                element("CP2", Complexity::Simple, 0.800),
                element("AC", Complexity::Complex, 0.835),
                element("ESDV", Complexity::Simple, 0.625),
            ],
            0,
            true,
        )
        .unwrap();
        assert_eq!(alarm.complexity, Complexity::Complex);
        assert_eq!(alarm.sff_effective, 0.625);
        assert_eq!(nc_lookup(&alarm), ConfidenceLevel::Nc1);

        let sis = effective_profile(
            "SIS",
            &[
                element("CP", Complexity::Simple, 0.800),
                element("AS", Complexity::Complex, 0.950),
                element("CV", Complexity::Simple, 0.650),
                element("ESDV", Complexity::Simple, 0.625),
            ],
            1,
            false,
        )
        .unwrap();
        assert_eq!(nc_lookup(&sis), ConfidenceLevel::Nc2);

        let rv =
            effective_profile("RV", &[element("RV", Complexity::Simple, 0.5)], 0, false).unwrap();
        assert_eq!(nc_lookup(&rv), ConfidenceLevel::Nc1);
    }

    #[test]
    fn profile_errors() {
        assert!(matches!(
            effective_profile("x", &[], 0, false),
            Err(SemiQuantError::EmptyBarrier(_))
        ));
        let e = [element("a", Complexity::Simple, 0.5)];
        assert!(matches!(
            effective_profile("x", &e, 3, false),
            Err(SemiQuantError::InvalidHft { .. })
        ));
    }

    #[test]
    fn division_propagation() {
        let tree = EventTreeNode::Outcome("PhD".into());
        let factors: BTreeMap<String, f64> = [("RV".to_string(), 10.0)].into();
        let mut model = SemiQuantBowTie {
            initiating_events: vec![CreditedInitiator {
                id: "EI4".into(),
                frequency_per_year: 0.005,
                barriers: Some(vec!["RV".into()]),
            }],
            factors,
            event_tree: &tree,
            event_probabilities: BTreeMap::new(),
        };
        let r = semiquant_propagate(&model).unwrap();
        assert_eq!(r.erc_frequency, 5.0e-4);
        assert_eq!(r.phd.get("PhD"), Some(5.0e-4));

        model.initiating_events[0].barriers = None;
        assert!(matches!(
            semiquant_propagate(&model),
            Err(SemiQuantError::UnmappedInitiatingEvent(_))
        ));
        model.initiating_events[0].barriers = Some(vec!["SIS".into()]);
        assert!(matches!(
            semiquant_propagate(&model),
            Err(SemiQuantError::MissingFactor(_))
        ));
    }
}
