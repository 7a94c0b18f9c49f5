//! Evaluation of a model under either approach and any sensitivity case.

use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::event_tree::{self, EventTreeError, PhdFrequencies, ProbabilitySource};
use crate::fault_tree::{
    barrier_pfd_avg, erc_frequency, BasicEvent, EventCatalog, FaultTreeError, InitiatingScenario,
    InitiatorCause, PreventionStructure,
};
use crate::model::{BowTieModel, CaseTransform, EventModelSpec, ModelError};
use crate::reliability::{
    average_unavailability, split_ccf, CcfRole, ReliabilityError, UnavailabilityModel,
};
use crate::semiquant::{
    effective_profile, nc_lookup, semiquant_propagate, BarrierElement, ConfidenceLevel,
    CreditedInitiator, SemiQuantBarrierProfile, SemiQuantBowTie, SemiQuantError,
};

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    FaultTree(#[from] FaultTreeError),
    #[error(transparent)]
    SemiQuant(#[from] SemiQuantError),
    #[error(transparent)]
    EventTree(#[from] EventTreeError),
    #[error(transparent)]
    Reliability(#[from] ReliabilityError),
    #[error("inconsistent result: {0}")]
    InvalidResult(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Approach {
    Quantitative,
    SemiQuantitative,
}

impl Approach {
    pub fn key(self) -> &'static str {
        match self {
            Self::Quantitative => "quantitative",
            Self::SemiQuantitative => "semi_quantitative",
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Quantitative => "Quantitative",
            Self::SemiQuantitative => "Semi-quantitative",
        })
    }
}

/// Overrides of the model's `evaluation` settings.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvaluationOptions {
    pub horizon_hours: Option<f64>,
    pub grid_step_hours: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierMetrics {
    pub barrier_id: String,
    /// Quantitative only.
    pub pfd_avg: Option<f64>,
    /// Semi-quantitative only.
    pub profile: Option<SemiQuantBarrierProfile>,
    pub confidence: Option<ConfidenceLevel>,
    pub risk_reduction_factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub approach: Approach,
    pub case_id: String,
    pub barriers: Vec<BarrierMetrics>,
    pub erc_frequency: f64,
    pub by_initiating_event: Vec<(String, f64)>,
    pub phd: PhdFrequencies,
}

impl CaseResult {
    pub fn barrier(&self, id: &str) -> Option<&BarrierMetrics> {
        self.barriers.iter().find(|b| b.barrier_id == id)
    }

    pub fn initiating_event(&self, id: &str) -> Option<f64> {
        self.by_initiating_event
            .iter()
            .find(|(e, _)| e == id)
            .map(|(_, f)| *f)
    }

    fn check(&self) -> Result<(), EvaluationError> {
        let bad = |what: String| Err(EvaluationError::InvalidResult(what));
        let label = format!("{} {}", self.approach.key(), self.case_id);
        if !(self.erc_frequency.is_finite() && self.erc_frequency >= 0.0) {
            return bad(format!("{label}: ERC frequency {}", self.erc_frequency));
        }
        if let Some((l, f)) = self.phd.iter().find(|(_, f)| !(f.is_finite() && *f >= 0.0)) {
            return bad(format!("{label}: {l} frequency {f}"));
        }
        for b in &self.barriers {
            if b.pfd_avg.is_some_and(|p| !(0.0..=1.0).contains(&p)) {
                return bad(format!("{label}: {} PFDavg outside [0, 1]", b.barrier_id));
            }
            if b.risk_reduction_factor < 1.0 {
                return bad(format!("{label}: {} factor below 1", b.barrier_id));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub horizon_hours: f64,
    pub grid_step_hours: f64,
    /// Leading hex digits of the SHA-256 of the canonical model document.
    pub model_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationResult {
    pub metadata: Metadata,
    pub case_ids: Vec<String>,
    pub approaches: Vec<Approach>,
    /// Approach-major, cases in request order.
    pub results: Vec<CaseResult>,
}

impl EvaluationResult {
    pub fn get(&self, approach: Approach, case_id: &str) -> Option<&CaseResult> {
        self.results
            .iter()
            .find(|r| r.approach == approach && r.case_id == case_id)
    }
}

pub fn model_hash(model: &BowTieModel) -> String {
    let digest = Sha256::digest(model.to_json().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Settings after applying overrides.
pub fn resolve_settings(
    model: &BowTieModel,
    options: &EvaluationOptions,
) -> Result<(f64, f64), EvaluationError> {
    let horizon = options
        .horizon_hours
        .unwrap_or(model.evaluation.horizon_hours);
    let step = options
        .grid_step_hours
        .unwrap_or(model.evaluation.grid_step_hours);
    if !(horizon.is_finite() && horizon > 0.0 && step > 0.0 && step <= horizon) {
        return Err(ReliabilityError::InvalidGrid {
            horizon,
            grid_step: step,
        }
        .into());
    }
    Ok((horizon, step))
}

/// Basic events of the model plus one initiator per initiating-event cause.
pub fn build_catalog(model: &BowTieModel) -> Result<EventCatalog, EvaluationError> {
    let mut catalog = EventCatalog::new();
    for spec in &model.basic_events {
        let unavailability = match &spec.model {
            EventModelSpec::Constant { probability } => {
                UnavailabilityModel::ConstantProbability(*probability)
            }
            EventModelSpec::Frequency { per_year } => UnavailabilityModel::Frequency(*per_year),
            EventModelSpec::Tested {
                component,
                ccf_role,
                ccf_group,
            } => {
                let c = model
                    .component(component)
                    .ok_or_else(|| ModelError::UnknownComponent(component.clone()))?;
                match (ccf_role, ccf_group) {
                    (CcfRole::Common, Some(group)) => {
                        let members = group
                            .iter()
                            .map(|id| {
                                model
                                    .component(id)
                                    .cloned()
                                    .ok_or_else(|| ModelError::UnknownComponent(id.clone()))
                            })
                            .collect::<Result<Vec<_>, _>>()?;
                        let split = split_ccf(&members)?;
                        split.common
                    }
                    _ => UnavailabilityModel::tested(c.clone(), *ccf_role)?,
                }
            }
        };
        catalog.insert(BasicEvent::new(&spec.id, unavailability, spec.role)?)?;
    }
    for ei in &model.initiating_events {
        for cause in model.initiator_causes(ei)? {
            catalog.insert(BasicEvent::new(
                cause.id,
                UnavailabilityModel::Frequency(cause.per_year),
                crate::fault_tree::EventRole::Initiator,
            )?)?;
        }
    }
    Ok(catalog)
}

/// Barrier trees and per-initiating-event scenarios with their linkages.
pub fn build_prevention(model: &BowTieModel) -> Result<PreventionStructure, EvaluationError> {
    let barriers = model
        .barriers
        .iter()
        .map(|b| (b.id.clone(), b.tree.clone()))
        .collect();
    let mut links: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for l in &model.conditional_linkages {
        links
            .entry(l.cause.as_str())
            .or_default()
            .extend(l.force_failed.iter().cloned());
    }
    let mut scenarios = Vec::new();
    for ei in &model.initiating_events {
        let causes = model
            .initiator_causes(ei)?
            .into_iter()
            .map(|c| InitiatorCause {
                force_failed: links.get(c.id.as_str()).cloned().unwrap_or_default(),
                event: c.id,
            })
            .collect();
        scenarios.push(InitiatingScenario {
            id: ei.id.clone(),
            causes,
            barriers: model.ei_barrier_map.get(&ei.id).cloned(),
        });
    }
    Ok(PreventionStructure {
        barriers,
        scenarios,
    })
}

/// Quantitative evaluation of an already-transformed model.
pub fn evaluate_quantitative(
    model: &BowTieModel,
    case_id: &str,
    horizon: f64,
    grid_step: f64,
) -> Result<CaseResult, EvaluationError> {
    let catalog = build_catalog(model)?;
    let prevention = build_prevention(model)?;
    let mut barriers = Vec::with_capacity(model.barriers.len());
    for b in &model.barriers {
        let pfd = barrier_pfd_avg(&b.tree, &catalog, horizon, grid_step)?;
        barriers.push(BarrierMetrics {
            barrier_id: b.id.clone(),
            pfd_avg: Some(pfd.pfd_avg),
            profile: None,
            confidence: None,
            risk_reduction_factor: pfd.risk_reduction_factor,
        });
    }
    let erc = erc_frequency(&prevention, &catalog, horizon, grid_step)?;
    let phd = event_tree::propagate(
        erc.total_per_year,
        &model.event_tree,
        &|source| match source {
            ProbabilitySource::Constant(p) => Ok(*p),
            ProbabilitySource::Event(id) => {
                let e = catalog.get(id).map_err(|e| e.to_string())?;
                average_unavailability(&e.model, horizon, grid_step).map_err(|e| e.to_string())
            }
            ProbabilitySource::Barrier(id) => barriers
                .iter()
                .find(|b| &b.barrier_id == id)
                .and_then(|b| b.pfd_avg)
                .ok_or_else(|| format!("unknown barrier `{id}`")),
        },
    )?;
    let result = CaseResult {
        approach: Approach::Quantitative,
        case_id: case_id.to_string(),
        barriers,
        erc_frequency: erc.total_per_year,
        by_initiating_event: erc.by_initiating_event,
        phd,
    };
    result.check()?;
    Ok(result)
}

/// Governing profile of every barrier, from the model's element lists.
pub fn semiquant_profiles(
    model: &BowTieModel,
) -> Result<Vec<SemiQuantBarrierProfile>, EvaluationError> {
    model
        .barriers
        .iter()
        .map(|b| {
            let spec = model
                .semiquant
                .profiles
                .iter()
                .find(|p| p.barrier == b.id)
                .ok_or_else(|| SemiQuantError::EmptyBarrier(b.id.clone()))?;
            let elements = spec
                .elements
                .iter()
                .map(|e| {
                    let c = model
                        .component(&e.component)
                        .ok_or_else(|| ModelError::UnknownComponent(e.component.clone()))?;
                    Ok(BarrierElement {
                        id: e.component.clone(),
                        complexity: e.complexity,
                        sff: c.sff,
                    })
                })
                .collect::<Result<Vec<_>, EvaluationError>>()?;
            Ok(effective_profile(
                &b.id,
                &elements,
                spec.declared_hft,
                spec.operator_excluded,
            )?)
        })
        .collect()
}

/// Semi-quantitative evaluation of an already-transformed model.
pub fn evaluate_semiquantitative(
    model: &BowTieModel,
    case_id: &str,
) -> Result<CaseResult, EvaluationError> {
    let mut barriers = Vec::new();
    let mut factors = BTreeMap::new();
    for profile in semiquant_profiles(model)? {
        let nc = nc_lookup(&profile);
        factors.insert(profile.barrier_id.clone(), nc.risk_reduction_factor());
        barriers.push(BarrierMetrics {
            barrier_id: profile.barrier_id.clone(),
            pfd_avg: None,
            profile: Some(profile),
            confidence: Some(nc),
            risk_reduction_factor: nc.risk_reduction_factor(),
        });
    }
    let initiating_events = model
        .initiating_events
        .iter()
        .map(|ei| CreditedInitiator {
            id: ei.id.clone(),
            frequency_per_year: BowTieModel::semiquant_frequency(ei),
            barriers: model.semiquant_barriers(&ei.id).cloned(),
        })
        .collect();
    let event_probabilities = model
        .basic_events
        .iter()
        .filter_map(|e| match e.model {
            EventModelSpec::Constant { probability } => Some((e.id.clone(), probability)),
            _ => None,
        })
        .collect();
    let r = semiquant_propagate(&SemiQuantBowTie {
        initiating_events,
        factors,
        event_tree: &model.event_tree,
        event_probabilities,
    })?;
    let result = CaseResult {
        approach: Approach::SemiQuantitative,
        case_id: case_id.to_string(),
        barriers,
        erc_frequency: r.erc_frequency,
        by_initiating_event: r.by_initiating_event,
        phd: r.phd,
    };
    result.check()?;
    Ok(result)
}

/// Applies the case transform, then evaluates under one approach.
pub fn evaluate_case(
    model: &BowTieModel,
    approach: Approach,
    case: &CaseTransform,
    options: &EvaluationOptions,
) -> Result<CaseResult, EvaluationError> {
    let (horizon, step) = resolve_settings(model, options)?;
    let transformed = model.apply_case(case)?;
    match approach {
        Approach::Quantitative => evaluate_quantitative(&transformed, &case.case_id, horizon, step),
        Approach::SemiQuantitative => evaluate_semiquantitative(&transformed, &case.case_id),
    }
}

/// Every requested (approach, case) pair; cases run on separate threads.
pub fn evaluate(
    model: &BowTieModel,
    approaches: &[Approach],
    case_ids: &[String],
    options: &EvaluationOptions,
) -> Result<EvaluationResult, EvaluationError> {
    let (horizon, step) = resolve_settings(model, options)?;
    let cases = case_ids
        .iter()
        .map(|id| model.case(id))
        .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(Approach, &CaseTransform)> = approaches
        .iter()
        .flat_map(|a| cases.iter().map(move |c| (*a, *c)))
        .collect();
    let results = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(a, c)| scope.spawn(move || evaluate_case(model, *a, c, options)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("evaluation thread panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(EvaluationResult {
        metadata: Metadata {
            horizon_hours: horizon,
            grid_step_hours: step,
            model_hash: model_hash(model),
        },
        case_ids: case_ids.to_vec(),
        approaches: approaches.to_vec(),
        results,
    })
}

/// One line of the approach comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub case_id: String,
    pub quantitative_erc: f64,
    pub semiquantitative_erc: f64,
    /// Quantitative over semi-quantitative ERC frequency.
    pub ratio: f64,
}

/// Per-case ERC comparison; needs both approaches in `result`.
pub fn compare(result: &EvaluationResult) -> Vec<ComparisonRow> {
    result
        .case_ids
        .iter()
        .filter_map(|case| {
            let q = result.get(Approach::Quantitative, case)?.erc_frequency;
            let s = result.get(Approach::SemiQuantitative, case)?.erc_frequency;
            Some(ComparisonRow {
                case_id: case.clone(),
                quantitative_erc: q,
                semiquantitative_erc: s,
                ratio: q / s,
            })
        })
        .collect()
}
