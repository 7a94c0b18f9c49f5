//! Declarative bow-tie model file: schema, validation, the bundled
//! separator case study, and sensitivity-case transforms.
//!
//! Units follow the source data: failure rates per hour, initiating-event
//! frequencies per year, intervals in hours.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::event_tree::{EventTreeNode, ProbabilitySource};
use crate::fault_tree::{EventRole, GateNode};
use crate::reliability::{split_ccf, CcfRole, ComponentReliability, HOURS_PER_YEAR};
use crate::semiquant::Complexity;

/// The separator case study shipped with the crate.
pub const CASE_STUDY_SEPARATOR: &str = include_str!("../models/case_study_separator.json");

/// Top-level sections every model file must carry.
pub const SECTIONS: [&str; 10] = [
    "components",
    "basic_events",
    "barriers",
    "initiating_events",
    "ei_barrier_map",
    "conditional_linkages",
    "event_tree",
    "semiquant",
    "cases",
    "evaluation",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BowTieModel {
    pub components: Vec<ComponentReliability>,
    pub basic_events: Vec<BasicEventSpec>,
    pub barriers: Vec<BarrierSpec>,
    pub initiating_events: Vec<InitiatingEventSpec>,
    pub ei_barrier_map: BTreeMap<String, Vec<String>>,
    pub conditional_linkages: Vec<ConditionalLinkage>,
    pub event_tree: EventTreeNode,
    pub semiquant: SemiQuantSpec,
    pub cases: Vec<CaseTransform>,
    pub evaluation: EvaluationSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasicEventSpec {
    pub id: String,
    pub role: EventRole,
    pub model: EventModelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventModelSpec {
    /// Periodically proof-tested component. A `common` event carries the
    /// β share of the whole `ccf_group`.
    Tested {
        component: String,
        #[serde(default)]
        ccf_role: CcfRole,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ccf_group: Option<Vec<String>>,
    },
    Constant {
        probability: f64,
    },
    Frequency {
        per_year: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub tree: GateNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitiatingEventSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub frequency: InitiatingFrequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitiatingFrequency {
    PerYear(f64),
    /// Computed from the total failure rates of a control loop; each loop
    /// element becomes a separate cause.
    Derived(DerivedFrequencySpec),
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivedFrequencySpec {
    pub control_loop: Vec<String>,
    /// Split a loop element's β share into its own `<ei>.<component>.ccf` cause.
    #[serde(default = "yes")]
    pub ccf_share_as_initiator: bool,
    /// Fixed frequency used by the semi-quantitative approach.
    pub semiquant_per_year: f64,
}

/// Occurrence of `cause` leaves every `force_failed` enabler failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalLinkage {
    pub cause: String,
    pub force_failed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiQuantSpec {
    pub profiles: Vec<ProfileSpec>,
    /// Per initiating event, the barriers credited by the semi-quantitative
    /// approach when they differ from `ei_barrier_map`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub credited_barriers: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub barrier: String,
    pub elements: Vec<ElementSpec>,
    pub declared_hft: u8,
    #[serde(default)]
    pub operator_excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub component: String,
    pub complexity: Complexity,
}

fn one() -> f64 {
    1.0
}

/// Multiplicative sensitivity case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseTransform {
    pub case_id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default = "one")]
    pub lambda_scale: f64,
    #[serde(default = "one")]
    pub sff_scale: f64,
    /// Applies to both full and partial test intervals.
    #[serde(default = "one")]
    pub test_interval_scale: f64,
    #[serde(default = "one")]
    pub beta_scale: f64,
}

impl CaseTransform {
    pub fn identity(case_id: impl Into<String>) -> Self {
        Self {
            case_id: case_id.into(),
            description: String::new(),
            lambda_scale: 1.0,
            sff_scale: 1.0,
            test_interval_scale: 1.0,
            beta_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSettings {
    pub horizon_hours: f64,
    pub grid_step_hours: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DiagnosticKind {
    Syntax,
    MissingSection,
    Schema,
    Duplicate,
    DanglingReference,
    Range,
    Structure,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Syntax => "syntax",
            Self::MissingSection => "missing section",
            Self::Schema => "schema",
            Self::Duplicate => "duplicate",
            Self::DanglingReference => "dangling reference",
            Self::Range => "range",
            Self::Structure => "structure",
        })
    }
}

/// One validation finding, located by a path such as `components[3].sff`.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = if self.path.is_empty() {
            "<root>"
        } else {
            &self.path
        };
        write!(f, "{path}: {} error: {}", self.kind, self.message)
    }
}

/// Every problem found in a model file.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ModelErrors(pub Vec<Diagnostic>);

impl fmt::Display for ModelErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model:\n{0}")]
    Invalid(ModelErrors),
    #[error("case `{case}`: {message}")]
    Transform { case: String, message: String },
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error("unknown initiating event `{0}`")]
    UnknownInitiatingEvent(String),
    #[error("initiating event `{0}` has no derived frequency")]
    NotDerived(String),
    #[error("initiating event `{0}` has an empty control loop")]
    EmptyControlLoop(String),
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
}

/// Parses and validates a model document, reporting every problem found.
pub fn parse_model(text: &str) -> Result<BowTieModel, ModelErrors> {
    let diag = |kind, path: &str, message: String| Diagnostic {
        kind,
        path: path.to_string(),
        message,
    };
    let value: Value = serde_json::from_str(text).map_err(|e| {
        ModelErrors(vec![diag(
            DiagnosticKind::Syntax,
            "",
            format!("line {} column {}: {e}", e.line(), e.column()),
        )])
    })?;
    let Some(object) = value.as_object() else {
        return Err(ModelErrors(vec![diag(
            DiagnosticKind::Schema,
            "",
            "model must be an object".into(),
        )]));
    };
    let mut errors: Vec<Diagnostic> = SECTIONS
        .iter()
        .filter(|s| !object.contains_key(**s))
        .map(|s| {
            diag(
                DiagnosticKind::MissingSection,
                s,
                format!("required section `{s}` is missing"),
            )
        })
        .collect();
    errors.extend(
        object
            .keys()
            .filter(|k| !SECTIONS.contains(&k.as_str()))
            .map(|k| diag(DiagnosticKind::Schema, k, format!("unknown section `{k}`"))),
    );
    if !errors.is_empty() {
        return Err(ModelErrors(errors));
    }
    let model: BowTieModel = serde_path_to_error::deserialize(value).map_err(|e| {
        ModelErrors(vec![diag(
            DiagnosticKind::Schema,
            &e.path().to_string(),
            e.inner().to_string(),
        )])
    })?;
    let errors = model.validate();
    if errors.is_empty() {
        Ok(model)
    } else {
        Err(ModelErrors(errors))
    }
}

/// The bundled separator case study.
pub fn case_study() -> BowTieModel {
    parse_model(CASE_STUDY_SEPARATOR).expect("bundled case study is valid")
}

/// One frequency cause of an initiating event.
#[derive(Debug, Clone, PartialEq)]
pub struct InitiatorCauseSpec {
    pub id: String,
    /// Component behind the cause, for derived frequencies.
    pub component: Option<String>,
    pub per_year: f64,
}

/// Derived initiating-event frequency and its per-cause decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedFrequency {
    pub initiating_event: String,
    pub total_per_year: f64,
    pub causes: Vec<InitiatorCauseSpec>,
}

struct Validator {
    out: Vec<Diagnostic>,
}

impl Validator {
    fn push(&mut self, kind: DiagnosticKind, path: impl Into<String>, message: impl Into<String>) {
        self.out.push(Diagnostic {
            kind,
            path: path.into(),
            message: message.into(),
        });
    }

    fn duplicates<'b>(&mut self, section: &str, ids: impl Iterator<Item = &'b str>) {
        let mut seen = BTreeSet::new();
        for (i, id) in ids.enumerate() {
            if !seen.insert(id) {
                self.push(
                    DiagnosticKind::Duplicate,
                    format!("{section}[{i}]"),
                    format!("duplicate id `{id}`"),
                );
            }
        }
    }

    fn positive(&mut self, path: String, value: f64) {
        if !(value.is_finite() && value > 0.0) {
            self.push(
                DiagnosticKind::Range,
                path,
                format!("must be > 0, got {value}"),
            );
        }
    }
}

impl BowTieModel {
    pub fn component(&self, id: &str) -> Option<&ComponentReliability> {
        self.components.iter().find(|c| c.id == id)
    }

    pub fn basic_event(&self, id: &str) -> Option<&BasicEventSpec> {
        self.basic_events.iter().find(|e| e.id == id)
    }

    pub fn barrier(&self, id: &str) -> Option<&BarrierSpec> {
        self.barriers.iter().find(|b| b.id == id)
    }

    pub fn case(&self, id: &str) -> Result<&CaseTransform, ModelError> {
        self.cases
            .iter()
            .find(|c| c.case_id == id)
            .ok_or_else(|| ModelError::UnknownCase(id.to_string()))
    }

    /// Canonical pretty-printed document.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    /// Frequency causes of an initiating event. A fixed-frequency event has
    /// a single cause named after itself; a derived one has a cause
    /// `<ei>.<component>` per control-loop element, plus
    /// `<ei>.<component>.ccf` for the β share when split out.
    pub fn initiator_causes(
        &self,
        ei: &InitiatingEventSpec,
    ) -> Result<Vec<InitiatorCauseSpec>, ModelError> {
        match &ei.frequency {
            InitiatingFrequency::PerYear(f) => Ok(vec![InitiatorCauseSpec {
                id: ei.id.clone(),
                component: None,
                per_year: *f,
            }]),
            InitiatingFrequency::Derived(spec) => {
                if spec.control_loop.is_empty() {
                    return Err(ModelError::EmptyControlLoop(ei.id.clone()));
                }
                let mut causes = Vec::new();
                for cid in &spec.control_loop {
                    let c = self
                        .component(cid)
                        .ok_or_else(|| ModelError::UnknownComponent(cid.clone()))?;
                    let total = c.lambda_total * HOURS_PER_YEAR;
                    let beta = c.beta_or_zero();
                    let cause = |id: String, per_year| InitiatorCauseSpec {
                        id,
                        component: Some(cid.clone()),
                        per_year,
                    };
                    if spec.ccf_share_as_initiator && beta > 0.0 {
                        causes.push(cause(format!("{}.{cid}", ei.id), (1.0 - beta) * total));
                        causes.push(cause(format!("{}.{cid}.ccf", ei.id), beta * total));
                    } else {
                        causes.push(cause(format!("{}.{cid}", ei.id), total));
                    }
                }
                Ok(causes)
            }
        }
    }

    /// Derived frequency of the named initiating event.
    pub fn derived_frequency(&self, ei_id: &str) -> Result<DerivedFrequency, ModelError> {
        let ei = self
            .initiating_events
            .iter()
            .find(|e| e.id == ei_id)
            .ok_or_else(|| ModelError::UnknownInitiatingEvent(ei_id.to_string()))?;
        if !matches!(ei.frequency, InitiatingFrequency::Derived(_)) {
            return Err(ModelError::NotDerived(ei_id.to_string()));
        }
        let causes = self.initiator_causes(ei)?;
        Ok(DerivedFrequency {
            initiating_event: ei.id.clone(),
            total_per_year: causes.iter().map(|c| c.per_year).sum(),
            causes,
        })
    }

    /// Frequency the semi-quantitative approach uses for an initiating event.
    pub fn semiquant_frequency(ei: &InitiatingEventSpec) -> f64 {
        match &ei.frequency {
            InitiatingFrequency::PerYear(f) => *f,
            InitiatingFrequency::Derived(d) => d.semiquant_per_year,
        }
    }

    /// Barriers the semi-quantitative approach credits against `ei_id`.
    pub fn semiquant_barriers(&self, ei_id: &str) -> Option<&Vec<String>> {
        self.semiquant
            .credited_barriers
            .get(ei_id)
            .or_else(|| self.ei_barrier_map.get(ei_id))
    }

    /// New model with the case's multipliers applied to every component.
    pub fn apply_case(&self, transform: &CaseTransform) -> Result<BowTieModel, ModelError> {
        let err = |message: String| ModelError::Transform {
            case: transform.case_id.clone(),
            message,
        };
        for (name, v) in [
            ("lambda_scale", transform.lambda_scale),
            ("sff_scale", transform.sff_scale),
            ("test_interval_scale", transform.test_interval_scale),
            ("beta_scale", transform.beta_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(err(format!("{name} must be > 0, got {v}")));
            }
        }
        let mut out = self.clone();
        for c in &mut out.components {
            c.lambda_total *= transform.lambda_scale;
            c.sff *= transform.sff_scale;
            c.t1_hours *= transform.test_interval_scale;
            if let Some(pt) = &mut c.partial_test {
                pt.t2_hours *= transform.test_interval_scale;
            }
            if let Some(beta) = &mut c.beta {
                *beta *= transform.beta_scale;
            }
            if c.sff >= 1.0 {
                return Err(err(format!(
                    "component `{}`: scaled SFF {} >= 1",
                    c.id, c.sff
                )));
            }
            if c.beta.is_some_and(|b| b > 1.0) {
                return Err(err(format!(
                    "component `{}`: scaled beta {} > 1",
                    c.id,
                    c.beta.unwrap_or_default()
                )));
            }
        }
        Ok(out)
    }

    /// Every structural and range problem.
    pub fn validate(&self) -> Vec<Diagnostic> {
        use DiagnosticKind::*;
        let mut v = Validator { out: Vec::new() };

        v.duplicates("components", self.components.iter().map(|c| c.id.as_str()));
        for (i, c) in self.components.iter().enumerate() {
            for violation in c.violations() {
                v.push(
                    Range,
                    format!("components[{i}].{}", violation.field),
                    violation.message,
                );
            }
        }

        v.duplicates(
            "basic_events",
            self.basic_events.iter().map(|e| e.id.as_str()),
        );
        for (i, e) in self.basic_events.iter().enumerate() {
            self.validate_event(&mut v, i, e);
        }

        v.duplicates("barriers", self.barriers.iter().map(|b| b.id.as_str()));
        for (i, b) in self.barriers.iter().enumerate() {
            for (path, message) in b.tree.violations() {
                v.push(
                    Structure,
                    format!("barriers[{i}].tree.{path}"),
                    format!("barrier `{}`: {message}", b.id),
                );
            }
            for leaf in b.tree.event_ids() {
                match self.basic_event(&leaf) {
                    None => v.push(
                        DanglingReference,
                        format!("barriers[{i}].tree"),
                        format!("barrier `{}` references unknown basic event `{leaf}`", b.id),
                    ),
                    Some(e) if e.role != EventRole::Enabler => v.push(
                        Structure,
                        format!("barriers[{i}].tree"),
                        format!("barrier `{}` contains initiator `{leaf}`", b.id),
                    ),
                    Some(_) => {}
                }
            }
        }

        v.duplicates(
            "initiating_events",
            self.initiating_events.iter().map(|e| e.id.as_str()),
        );
        let mut cause_ids = BTreeSet::new();
        for (i, ei) in self.initiating_events.iter().enumerate() {
            let path = format!("initiating_events[{i}].frequency");
            match &ei.frequency {
                InitiatingFrequency::PerYear(f) => {
                    if !(f.is_finite() && *f >= 0.0) {
                        v.push(
                            Range,
                            format!("{path}.per_year"),
                            format!("must be >= 0, got {f}"),
                        );
                    }
                }
                InitiatingFrequency::Derived(d) => {
                    if d.control_loop.is_empty() {
                        v.push(
                            Structure,
                            format!("{path}.derived.control_loop"),
                            "control loop is empty",
                        );
                    }
                    for (j, cid) in d.control_loop.iter().enumerate() {
                        if self.component(cid).is_none() {
                            v.push(
                                DanglingReference,
                                format!("{path}.derived.control_loop[{j}]"),
                                format!("unknown component `{cid}`"),
                            );
                        }
                    }
                    if !(d.semiquant_per_year.is_finite() && d.semiquant_per_year >= 0.0) {
                        v.push(
                            Range,
                            format!("{path}.derived.semiquant_per_year"),
                            format!("must be >= 0, got {}", d.semiquant_per_year),
                        );
                    }
                }
            }
            if let Ok(causes) = self.initiator_causes(ei) {
                for c in causes {
                    if self.basic_event(&c.id).is_some() || !cause_ids.insert(c.id.clone()) {
                        v.push(
                            Duplicate,
                            format!("initiating_events[{i}]"),
                            format!("initiator cause id `{}` is already used", c.id),
                        );
                    }
                }
            }
        }

        let ei_ids: BTreeSet<&str> = self
            .initiating_events
            .iter()
            .map(|e| e.id.as_str())
            .collect();
        self.validate_mapping(&mut v, "ei_barrier_map", &self.ei_barrier_map, &ei_ids);
        for ei in &ei_ids {
            if !self.ei_barrier_map.contains_key(*ei) {
                v.push(
                    Structure,
                    "ei_barrier_map",
                    format!("initiating event `{ei}` is not mapped to any barrier set"),
                );
            }
        }

        for (i, link) in self.conditional_linkages.iter().enumerate() {
            if !cause_ids.contains(&link.cause) {
                v.push(
                    DanglingReference,
                    format!("conditional_linkages[{i}].cause"),
                    format!("unknown initiator cause `{}`", link.cause),
                );
            }
            for (j, id) in link.force_failed.iter().enumerate() {
                self.expect_enabler(
                    &mut v,
                    format!("conditional_linkages[{i}].force_failed[{j}]"),
                    id,
                );
            }
        }

        for dup in self.event_tree.duplicate_outcomes() {
            v.push(
                Duplicate,
                "event_tree",
                format!("duplicate outcome label `{dup}`"),
            );
        }
        self.validate_event_tree(&mut v, &self.event_tree, "event_tree".to_string());

        let sq = &self.semiquant;
        v.duplicates(
            "semiquant.profiles",
            sq.profiles.iter().map(|p| p.barrier.as_str()),
        );
        for (i, p) in sq.profiles.iter().enumerate() {
            let path = format!("semiquant.profiles[{i}]");
            if self.barrier(&p.barrier).is_none() {
                v.push(
                    DanglingReference,
                    format!("{path}.barrier"),
                    format!("unknown barrier `{}`", p.barrier),
                );
            }
            if p.elements.is_empty() {
                v.push(
                    Structure,
                    format!("{path}.elements"),
                    "no credited elements",
                );
            }
            for (j, e) in p.elements.iter().enumerate() {
                if self.component(&e.component).is_none() {
                    v.push(
                        DanglingReference,
                        format!("{path}.elements[{j}].component"),
                        format!("unknown component `{}`", e.component),
                    );
                }
            }
            if p.declared_hft > 2 {
                v.push(
                    Range,
                    format!("{path}.declared_hft"),
                    format!("must be 0, 1 or 2, got {}", p.declared_hft),
                );
            }
        }
        for b in &self.barriers {
            if !sq.profiles.iter().any(|p| p.barrier == b.id) {
                v.push(
                    Structure,
                    "semiquant.profiles",
                    format!("barrier `{}` has no semi-quantitative profile", b.id),
                );
            }
        }
        self.validate_mapping(
            &mut v,
            "semiquant.credited_barriers",
            &sq.credited_barriers,
            &ei_ids,
        );

        v.duplicates("cases", self.cases.iter().map(|c| c.case_id.as_str()));
        for (i, c) in self.cases.iter().enumerate() {
            v.positive(format!("cases[{i}].lambda_scale"), c.lambda_scale);
            v.positive(format!("cases[{i}].sff_scale"), c.sff_scale);
            v.positive(
                format!("cases[{i}].test_interval_scale"),
                c.test_interval_scale,
            );
            v.positive(format!("cases[{i}].beta_scale"), c.beta_scale);
        }

        let ev = self.evaluation;
        v.positive("evaluation.horizon_hours".into(), ev.horizon_hours);
        v.positive("evaluation.grid_step_hours".into(), ev.grid_step_hours);
        if ev.grid_step_hours > ev.horizon_hours {
            v.push(
                Range,
                "evaluation.grid_step_hours",
                "must not exceed horizon_hours",
            );
        }
        v.out
    }

    fn validate_event(&self, v: &mut Validator, i: usize, e: &BasicEventSpec) {
        use DiagnosticKind::*;
        let path = format!("basic_events[{i}].model");
        let expected_role = match e.model {
            EventModelSpec::Frequency { .. } => EventRole::Initiator,
            _ => EventRole::Enabler,
        };
        if e.role != expected_role {
            v.push(
                Structure,
                format!("basic_events[{i}].role"),
                format!(
                    "event `{}`: frequency models must be initiators, probability models enablers",
                    e.id
                ),
            );
        }
        match &e.model {
            EventModelSpec::Constant { probability } => {
                if !(0.0..=1.0).contains(probability) {
                    v.push(
                        Range,
                        format!("{path}.probability"),
                        format!("must be in [0, 1], got {probability}"),
                    );
                }
            }
            EventModelSpec::Frequency { per_year } => {
                if !(per_year.is_finite() && *per_year >= 0.0) {
                    v.push(
                        Range,
                        format!("{path}.per_year"),
                        format!("must be >= 0, got {per_year}"),
                    );
                }
            }
            EventModelSpec::Tested {
                component,
                ccf_role,
                ccf_group,
            } => {
                let Some(c) = self.component(component) else {
                    v.push(
                        DanglingReference,
                        format!("{path}.component"),
                        format!("unknown component `{component}`"),
                    );
                    return;
                };
                match (ccf_role, ccf_group) {
                    (CcfRole::Independent, Some(_)) => v.push(
                        Structure,
                        format!("{path}.ccf_group"),
                        "only common-cause events carry a group",
                    ),
                    (CcfRole::Independent, None) => {}
                    (CcfRole::Common, None) => v.push(
                        Structure,
                        format!("{path}.ccf_group"),
                        "common-cause events need their group",
                    ),
                    (CcfRole::Common, Some(group)) => {
                        if !group.contains(component) {
                            v.push(
                                Structure,
                                format!("{path}.ccf_group"),
                                format!("group does not contain `{component}`"),
                            );
                        }
                        let mut members = Vec::new();
                        for (j, id) in group.iter().enumerate() {
                            match self.component(id) {
                                Some(m) => members.push(m.clone()),
                                None => v.push(
                                    DanglingReference,
                                    format!("{path}.ccf_group[{j}]"),
                                    format!("unknown component `{id}`"),
                                ),
                            }
                        }
                        if members.len() == group.len() && c.violations().is_empty() {
                            if let Err(err) = split_ccf(&members) {
                                v.push(Structure, format!("{path}.ccf_group"), err.to_string());
                            }
                        }
                    }
                }
            }
        }
    }

    fn validate_mapping(
        &self,
        v: &mut Validator,
        section: &str,
        map: &BTreeMap<String, Vec<String>>,
        ei_ids: &BTreeSet<&str>,
    ) {
        for (ei, barriers) in map {
            if !ei_ids.contains(ei.as_str()) {
                v.push(
                    DiagnosticKind::DanglingReference,
                    format!("{section}.{ei}"),
                    format!("unknown initiating event `{ei}`"),
                );
            }
            for (j, b) in barriers.iter().enumerate() {
                if self.barrier(b).is_none() {
                    v.push(
                        DiagnosticKind::DanglingReference,
                        format!("{section}.{ei}[{j}]"),
                        format!("unknown barrier `{b}`"),
                    );
                }
            }
        }
    }

    fn expect_enabler(&self, v: &mut Validator, path: String, id: &str) {
        match self.basic_event(id) {
            None => v.push(
                DiagnosticKind::DanglingReference,
                path,
                format!("unknown basic event `{id}`"),
            ),
            Some(e) if e.role != EventRole::Enabler => v.push(
                DiagnosticKind::Structure,
                path,
                format!("`{id}` is an initiator, expected an enabler"),
            ),
            Some(_) => {}
        }
    }

    fn validate_event_tree(&self, v: &mut Validator, node: &EventTreeNode, path: String) {
        let EventTreeNode::Branch { p_yes, yes, no, .. } = node else {
            return;
        };
        let here = format!("{path}.branch");
        match p_yes {
            ProbabilitySource::Constant(p) => {
                if !(0.0..=1.0).contains(p) {
                    v.push(
                        DiagnosticKind::Range,
                        format!("{here}.p_yes.constant"),
                        format!("must be in [0, 1], got {p}"),
                    );
                }
            }
            ProbabilitySource::Event(id) => {
                self.expect_enabler(v, format!("{here}.p_yes.event"), id)
            }
            ProbabilitySource::Barrier(id) => {
                if self.barrier(id).is_none() {
                    v.push(
                        DiagnosticKind::DanglingReference,
                        format!("{here}.p_yes.barrier"),
                        format!("unknown barrier `{id}`"),
                    );
                }
            }
        }
        self.validate_event_tree(v, yes, format!("{here}.yes"));
        self.validate_event_tree(v, no, format!("{here}.no"));
    }
}

/// Derived frequency of the model's control-loop initiating event (the
/// first one declared with a derived frequency).
pub fn derive_ei1_frequency(model: &BowTieModel) -> Result<DerivedFrequency, ModelError> {
    let ei = model
        .initiating_events
        .iter()
        .find(|e| matches!(e.frequency, InitiatingFrequency::Derived(_)))
        .ok_or_else(|| ModelError::NotDerived("<any>".into()))?;
    model.derived_frequency(&ei.id)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    fn mutate(f: impl FnOnce(&mut Value)) -> String {
        let mut v: Value = serde_json::from_str(CASE_STUDY_SEPARATOR).unwrap();
        f(&mut v);
        v.to_string()
    }

    fn errors(text: &str) -> Vec<Diagnostic> {
        parse_model(text).unwrap_err().0
    }

    #[test]
    fn bundled_case_study_inventory() {
        let m = case_study();
        assert_eq!(m.barriers.len(), 3);
        assert_eq!(m.initiating_events.len(), 4);
        assert_eq!(m.event_tree.outcomes().len(), 7);
        assert_eq!(m.cases.len(), 5);
        assert_eq!(m.evaluation.horizon_hours, 35040.0);
        assert_eq!(m.evaluation.grid_step_hours, 4.0);
    }

    #[test]
    fn round_trip_is_stable() {
        let m = case_study();
        let text = m.to_json();
        let again = parse_model(&text).unwrap();
        assert_eq!(m, again);
        assert_eq!(text, again.to_json());
    }

    #[test]
    fn koon_k_too_large_names_the_gate() {
        let text = mutate(|v| {
            v["barriers"][1]["tree"]["or"][1]["koon"]["k"] = 4.into();
        });
        let errs = errors(&text);
        assert_eq!(errs.len(), 1, "{errs:?}");
        assert_eq!(errs[0].kind, DiagnosticKind::Structure);
        assert_eq!(errs[0].path, "barriers[1].tree.or[1].koon");
        assert!(errs[0].message.contains("SIS"));
    }

    #[test]
    fn unknown_barrier_in_mapping() {
        let text = mutate(|v| {
            v["ei_barrier_map"]["EI4"] = serde_json::json!(["RVx"]);
        });
        let errs = errors(&text);
        assert_eq!(errs.len(), 1, "{errs:?}");
        assert_eq!(errs[0].kind, DiagnosticKind::DanglingReference);
        assert_eq!(errs[0].path, "ei_barrier_map.EI4[0]");
    }

    #[test]
    fn sff_out_of_range_has_field_path() {
        let text = mutate(|v| {
            v["components"][0]["sff"] = 1.2.into();
        });
        let errs = errors(&text);
        assert_eq!(errs.len(), 1, "{errs:?}");
        assert_eq!(errs[0].kind, DiagnosticKind::Range);
        assert_eq!(errs[0].path, "components[0].sff");
    }

    #[test]
    fn missing_sections_are_all_reported() {
        let text = mutate(|v| {
            let o = v.as_object_mut().unwrap();
            o.remove("event_tree");
            o.remove("cases");
        });
        let errs = errors(&text);
        assert_eq!(errs.len(), 2);
        assert!(errs
            .iter()
            .all(|e| e.kind == DiagnosticKind::MissingSection));
        assert_eq!(errs[0].path, "event_tree");
    }

    #[test]
    fn several_errors_are_collected() {
        let text = mutate(|v| {
            v["components"][0]["sff"] = 1.2.into();
            v["ei_barrier_map"]["EI4"] = serde_json::json!(["RVx"]);
            v["conditional_linkages"][0]["cause"] = "EI9.AC".into();
        });
        assert_eq!(errors(&text).len(), 3);
    }

    #[test]
    fn schema_error_carries_path() {
        let text = mutate(|v| {
            v["components"][2]["lambda_total"] = "fast".into();
        });
        let errs = errors(&text);
        assert_eq!(errs[0].kind, DiagnosticKind::Schema);
        assert_eq!(errs[0].path, "components[2].lambda_total");
    }

    #[test]
    fn syntax_error() {
        assert_eq!(errors("{ nope")[0].kind, DiagnosticKind::Syntax);
    }

    #[test]
    fn unmapped_initiating_event() {
        let text = mutate(|v| {
            v["ei_barrier_map"].as_object_mut().unwrap().remove("EI2");
        });
        let errs = errors(&text);
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("EI2"));
    }

    #[test]
    fn case_transforms() {
        let m = case_study();
        let cas1 = m.apply_case(m.case("cas1").unwrap()).unwrap();
        let rv = cas1.component("RVa").unwrap();
        assert!(close(rv.lambda_total, 6.96e-6, 1e-12));
        assert!(close(rv.lambda_du(), 3.48e-6, 1e-12));
        let cas2 = m.apply_case(m.case("cas2").unwrap()).unwrap();
        assert!(close(cas2.component("AS").unwrap().sff, 0.475, 1e-12));
        let cas3 = m.apply_case(m.case("cas3").unwrap()).unwrap();
        let esdv = cas3.component("ESDV1").unwrap();
        assert_eq!(esdv.t1_hours, 70080.0);
        assert_eq!(esdv.partial_test.as_ref().unwrap().t2_hours, 8760.0);
        let cas4 = m.apply_case(m.case("cas4").unwrap()).unwrap();
        assert!(close(
            cas4.component("CP2").unwrap().beta.unwrap(),
            0.15,
            1e-12
        ));
        let cas0 = m.apply_case(m.case("cas0").unwrap()).unwrap();
        assert_eq!(cas0, m);
        // original untouched
        assert_eq!(m.component("RVa").unwrap().lambda_total, 1.392e-6);
    }

    #[test]
    fn transform_errors() {
        let m = case_study();
        let doubled = CaseTransform {
            sff_scale: 2.0,
            ..CaseTransform::identity("x")
        };
        assert!(matches!(
            m.apply_case(&doubled),
            Err(ModelError::Transform { .. })
        ));
        let beta = CaseTransform {
            beta_scale: 30.0,
            ..CaseTransform::identity("x")
        };
        assert!(matches!(
            m.apply_case(&beta),
            Err(ModelError::Transform { .. })
        ));
        assert!(matches!(m.case("cas9"), Err(ModelError::UnknownCase(_))));
    }

    #[test]
    fn control_loop_frequency() {
        let m = case_study();
        let d = derive_ei1_frequency(&m).unwrap();
        let expected = (3.2e-6 + 3.0e-6 + 2.0 * 3.26e-6) * 8760.0;
        assert!(close(d.total_per_year, expected, 1e-12));
        assert!(close(d.total_per_year, 0.1114, 1e-3));
        let ids: Vec<_> = d.causes.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(
            ids,
            ["EI1.CP1", "EI1.CP1.ccf", "EI1.AC", "EI1.CV1", "EI1.CV2"]
        );

        let cas1 = m.apply_case(m.case("cas1").unwrap()).unwrap();
        let d1 = derive_ei1_frequency(&cas1).unwrap();
        assert!(close(d1.total_per_year, 5.0 * expected, 1e-12));
        assert!(close(d1.total_per_year, 0.557, 1e-3));

        let ei1 = &m.initiating_events[0];
        assert_eq!(BowTieModel::semiquant_frequency(ei1), 0.1);
    }

    #[test]
    fn ccf_share_flag_merges_cause() {
        let mut m = case_study();
        if let InitiatingFrequency::Derived(d) = &mut m.initiating_events[0].frequency {
            d.ccf_share_as_initiator = false;
        }
        let d = m.derived_frequency("EI1").unwrap();
        assert_eq!(d.causes.len(), 4);
        assert!(close(d.causes[0].per_year, 3.2e-6 * 8760.0, 1e-12));
    }

    #[test]
    fn empty_control_loop() {
        let mut m = case_study();
        if let InitiatingFrequency::Derived(d) = &mut m.initiating_events[0].frequency {
            d.control_loop.clear();
        }
        assert!(matches!(
            m.derived_frequency("EI1"),
            Err(ModelError::EmptyControlLoop(_))
        ));
        assert!(matches!(
            m.derived_frequency("EI2"),
            Err(ModelError::NotDerived(_))
        ));
    }
}
