//! Coherent fault trees over shared basic events.
//!
//! Distinct basic events are statistically independent; dependence between
//! trees comes only from sharing an event id. Probabilities are exact: the
//! tree is Shannon-expanded on every event that occurs more than once, which
//! leaves sub-trees whose children share no events and can be combined with
//! the independent AND/OR/k-out-of-n formulas.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reliability::{ReliabilityError, Side, TimeGrid, UnavailabilityModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FaultTreeError {
    #[error("unknown basic event `{0}`")]
    UnknownEvent(String),
    #[error("duplicate basic event `{0}`")]
    DuplicateEvent(String),
    #[error("basic event `{id}`: {message}")]
    RoleMismatch { id: String, message: String },
    #[error("invalid gate at `{path}`: {message}")]
    InvalidGate { path: String, message: String },
    #[error("initiator `{0}` cannot appear in a probability tree; use erc_frequency")]
    InitiatorInTree(String),
    #[error("initiating event `{0}` has no barrier mapping")]
    UnmappedInitiatingEvent(String),
    #[error("unknown barrier `{0}`")]
    UnknownBarrier(String),
    #[error("cut set {{{}}} of `{scenario}` contains {count} initiator events, expected exactly one", .set.join(", "))]
    CutSetInitiators {
        scenario: String,
        set: Vec<String>,
        count: usize,
    },
    #[error(transparent)]
    Reliability(#[from] ReliabilityError),
}

/// Whether an event starts a scenario (frequency) or enables one (probability).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventRole {
    Enabler,
    Initiator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasicEvent {
    pub id: String,
    pub model: UnavailabilityModel,
    pub role: EventRole,
}

impl BasicEvent {
    pub fn new(
        id: impl Into<String>,
        model: UnavailabilityModel,
        role: EventRole,
    ) -> Result<Self, FaultTreeError> {
        let id = id.into();
        let message = match (&model, role) {
            (UnavailabilityModel::Frequency(f), EventRole::Initiator) if *f >= 0.0 => None,
            (UnavailabilityModel::Frequency(f), EventRole::Initiator) => {
                Some(format!("frequency must be >= 0, got {f}"))
            }
            (UnavailabilityModel::Frequency(_), EventRole::Enabler) => {
                Some("frequency models must have the initiator role".to_string())
            }
            (_, EventRole::Initiator) => {
                Some("probability models must have the enabler role".to_string())
            }
            (UnavailabilityModel::ConstantProbability(p), _) if !(0.0..=1.0).contains(p) => {
                Some(format!("probability must be in [0, 1], got {p}"))
            }
            _ => None,
        };
        match message {
            Some(message) => Err(FaultTreeError::RoleMismatch { id, message }),
            None => Ok(Self { id, model, role }),
        }
    }
}

/// Basic events by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventCatalog {
    events: BTreeMap<String, BasicEvent>,
}

impl EventCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_events(
        events: impl IntoIterator<Item = BasicEvent>,
    ) -> Result<Self, FaultTreeError> {
        let mut catalog = Self::new();
        for e in events {
            catalog.insert(e)?;
        }
        Ok(catalog)
    }

    pub fn insert(&mut self, event: BasicEvent) -> Result<(), FaultTreeError> {
        if self.events.contains_key(&event.id) {
            return Err(FaultTreeError::DuplicateEvent(event.id));
        }
        self.events.insert(event.id.clone(), event);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<&BasicEvent, FaultTreeError> {
        self.events
            .get(id)
            .ok_or_else(|| FaultTreeError::UnknownEvent(id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &BasicEvent> {
        self.events.values()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Failure-side gate tree. `koon` fails when at least `k` children fail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateNode {
    Event(String),
    And(Vec<GateNode>),
    Or(Vec<GateNode>),
    Koon { k: usize, children: Vec<GateNode> },
}

impl GateNode {
    pub fn event(id: impl Into<String>) -> Self {
        Self::Event(id.into())
    }

    /// Structural problems, each with a path such as `or[2].koon`.
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        self.collect_violations(String::new(), &mut out);
        out
    }

    fn collect_violations(&self, path: String, out: &mut Vec<(String, String)>) {
        let join = |seg: &str| {
            if path.is_empty() {
                seg.to_string()
            } else {
                format!("{path}.{seg}")
            }
        };
        let (here, children) = match self {
            Self::Event(id) => {
                if id.is_empty() {
                    out.push((join("event"), "empty event id".into()));
                }
                return;
            }
            Self::And(c) => (join("and"), c),
            Self::Or(c) => (join("or"), c),
            Self::Koon { k, children } => {
                let here = join("koon");
                if *k < 1 || *k > children.len() {
                    out.push((
                        here.clone(),
                        format!(
                            "k = {k} must be between 1 and the number of children ({})",
                            children.len()
                        ),
                    ));
                }
                (format!("{here}.children"), children)
            }
        };
        if children.is_empty() {
            out.push((here.clone(), "gate has no children".into()));
        }
        for (i, c) in children.iter().enumerate() {
            c.collect_violations(format!("{here}[{i}]"), out);
        }
    }

    fn check(&self) -> Result<(), FaultTreeError> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some((path, message)) => Err(FaultTreeError::InvalidGate { path, message }),
        }
    }

    /// Distinct leaf ids, sorted.
    pub fn event_ids(&self) -> BTreeSet<String> {
        let mut ids = BTreeSet::new();
        self.visit_leaves(&mut |id| {
            ids.insert(id.to_string());
        });
        ids
    }

    fn visit_leaves(&self, f: &mut impl FnMut(&str)) {
        match self {
            Self::Event(id) => f(id),
            Self::And(c) | Self::Or(c) | Self::Koon { children: c, .. } => {
                c.iter().for_each(|n| n.visit_leaves(f))
            }
        }
    }

    /// Structure function: does the tree fail when exactly `failed` events fail?
    pub fn fails(&self, failed: &dyn Fn(&str) -> bool) -> bool {
        match self {
            Self::Event(id) => failed(id),
            Self::And(c) => c.iter().all(|n| n.fails(failed)),
            Self::Or(c) => c.iter().any(|n| n.fails(failed)),
            Self::Koon { k, children } => children.iter().filter(|n| n.fails(failed)).count() >= *k,
        }
    }
}

/// Compiled tree over dense variable indices. AND and OR are votes with
/// `k = n` and `k = 1`.
#[derive(Debug, Clone, PartialEq)]
enum Node {
    Var(usize),
    Const(bool),
    Vote { k: usize, children: Vec<Node> },
}

impl Node {
    fn compile(gate: &GateNode, index: &BTreeMap<&str, usize>) -> Node {
        let vote = |k: usize, c: &[GateNode]| {
            let children = c.iter().map(|n| Node::compile(n, index)).collect();
            Node::vote(k, children)
        };
        match gate {
            GateNode::Event(id) => Node::Var(index[id.as_str()]),
            GateNode::And(c) => vote(c.len(), c),
            GateNode::Or(c) => vote(1, c),
            GateNode::Koon { k, children } => vote(*k, children),
        }
    }

    /// Normalizing constructor: folds constant children.
    fn vote(mut k: usize, children: Vec<Node>) -> Node {
        let mut kept = Vec::with_capacity(children.len());
        for c in children {
            match c {
                Node::Const(true) => k = k.saturating_sub(1),
                Node::Const(false) => {}
                other => kept.push(other),
            }
        }
        if k == 0 {
            Node::Const(true)
        } else if k > kept.len() {
            Node::Const(false)
        } else if kept.len() == 1 {
            kept.pop().unwrap_or(Node::Const(false))
        } else {
            Node::Vote { k, children: kept }
        }
    }

    fn restrict(&self, var: usize, failed: bool) -> Node {
        match self {
            Node::Var(v) if *v == var => Node::Const(failed),
            Node::Var(_) | Node::Const(_) => self.clone(),
            Node::Vote { k, children } => Node::vote(
                *k,
                children.iter().map(|c| c.restrict(var, failed)).collect(),
            ),
        }
    }

    fn count_vars(&self, counts: &mut [u32]) {
        match self {
            Node::Var(v) => counts[*v] += 1,
            Node::Const(_) => {}
            Node::Vote { children, .. } => children.iter().for_each(|c| c.count_vars(counts)),
        }
    }

    /// Probability assuming no variable occurs twice.
    fn independent_probability(&self, p: &[f64]) -> f64 {
        match self {
            Node::Var(v) => p[*v],
            Node::Const(b) => f64::from(u8::from(*b)),
            Node::Vote { k, children } => {
                let n = children.len();
                if *k == n {
                    children
                        .iter()
                        .map(|c| c.independent_probability(p))
                        .product()
                } else if *k == 1 {
                    1.0 - children
                        .iter()
                        .map(|c| 1.0 - c.independent_probability(p))
                        .product::<f64>()
                } else {
                    // dist[j]: probability of exactly j failures so far, dist[k]: at least k
                    let mut dist = vec![0.0; k + 1];
                    dist[0] = 1.0;
                    for c in children {
                        let q = c.independent_probability(p);
                        dist[*k] += dist[k - 1] * q;
                        for j in (1..*k).rev() {
                            dist[j] = dist[j] * (1.0 - q) + dist[j - 1] * q;
                        }
                        dist[0] *= 1.0 - q;
                    }
                    dist[*k]
                }
            }
        }
    }
}

/// Shannon expansion on repeated variables, computed once per tree and
/// reused for every probability vector.
#[derive(Debug, Clone, PartialEq)]
enum Plan {
    Independent(Node),
    Pivot {
        var: usize,
        failed: Box<Plan>,
        working: Box<Plan>,
    },
}

impl Plan {
    fn build(node: Node, n_vars: usize) -> Plan {
        let mut counts = vec![0u32; n_vars];
        node.count_vars(&mut counts);
        let pivot = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 1)
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(v, _)| v);
        match pivot {
            None => Plan::Independent(node),
            Some(var) => Plan::Pivot {
                var,
                failed: Box::new(Plan::build(node.restrict(var, true), n_vars)),
                working: Box::new(Plan::build(node.restrict(var, false), n_vars)),
            },
        }
    }

    fn probability(&self, p: &[f64]) -> f64 {
        match self {
            Plan::Independent(node) => node.independent_probability(p),
            Plan::Pivot {
                var,
                failed,
                working,
            } => {
                let q = p[*var];
                let hi = if q > 0.0 {
                    q * failed.probability(p)
                } else {
                    0.0
                };
                let lo = if q < 1.0 {
                    (1.0 - q) * working.probability(p)
                } else {
                    0.0
                };
                hi + lo
            }
        }
    }
}

/// Exact top-event probability evaluator for one tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityEvaluator {
    vars: Vec<String>,
    plan: Plan,
}

impl ProbabilityEvaluator {
    pub fn new(tree: &GateNode) -> Result<Self, FaultTreeError> {
        tree.check()?;
        let vars: Vec<String> = tree.event_ids().into_iter().collect();
        let index: BTreeMap<&str, usize> = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let node = Node::compile(tree, &index);
        let plan = Plan::build(node, vars.len());
        Ok(Self { vars, plan })
    }

    /// Event ids in variable order (sorted).
    pub fn events(&self) -> &[String] {
        &self.vars
    }

    /// Top probability for failure probabilities given in [`Self::events`] order.
    pub fn probability(&self, event_probabilities: &[f64]) -> f64 {
        assert_eq!(event_probabilities.len(), self.vars.len());
        self.plan.probability(event_probabilities).clamp(0.0, 1.0)
    }
}

/// Resolves the tree's events against the catalog; rejects initiators.
fn enabler_models<'a>(
    evaluator: &ProbabilityEvaluator,
    catalog: &'a EventCatalog,
) -> Result<Vec<&'a UnavailabilityModel>, FaultTreeError> {
    evaluator
        .events()
        .iter()
        .map(|id| {
            let e = catalog.get(id)?;
            match e.role {
                EventRole::Initiator => Err(FaultTreeError::InitiatorInTree(id.clone())),
                EventRole::Enabler => Ok(&e.model),
            }
        })
        .collect()
}

/// Exact probability that `tree` is failed at time `t` (hours).
pub fn top_probability(
    tree: &GateNode,
    catalog: &EventCatalog,
    t: f64,
) -> Result<f64, FaultTreeError> {
    let evaluator = ProbabilityEvaluator::new(tree)?;
    let models = enabler_models(&evaluator, catalog)?;
    let p = models
        .iter()
        .map(|m| m.unavailability_at(t, Side::Right))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(evaluator.probability(&p))
}

/// Time average over `[0, horizon]` of the tree's failure probability, with
/// the `forced` events held failed.
pub fn conditional_average_probability(
    tree: &GateNode,
    catalog: &EventCatalog,
    forced: &BTreeSet<String>,
    horizon: f64,
    grid_step: f64,
) -> Result<f64, FaultTreeError> {
    for id in forced {
        if catalog.get(id)?.role != EventRole::Enabler {
            return Err(FaultTreeError::RoleMismatch {
                id: id.clone(),
                message: "only enabler events can be forced to the failed state".into(),
            });
        }
    }
    let evaluator = ProbabilityEvaluator::new(tree)?;
    let models: Vec<Option<&UnavailabilityModel>> = enabler_models(&evaluator, catalog)?
        .into_iter()
        .zip(evaluator.events())
        .map(|(m, id)| (!forced.contains(id)).then_some(m))
        .collect();
    let grid = TimeGrid::new(
        horizon,
        grid_step,
        models.iter().flatten().flat_map(|m| m.test_periods()),
    )?;
    let mut p = vec![1.0; models.len()];
    grid.average(|t, side| {
        for (slot, m) in p.iter_mut().zip(&models) {
            if let Some(m) = m {
                *slot = m.unavailability_at(t, side)?;
            }
        }
        Ok::<_, FaultTreeError>(evaluator.probability(&p))
    })
}

/// Time-averaged probability of failure on demand of a barrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierPfd {
    pub pfd_avg: f64,
    /// `1 / pfd_avg`.
    pub risk_reduction_factor: f64,
}

pub fn barrier_pfd_avg(
    tree: &GateNode,
    catalog: &EventCatalog,
    horizon: f64,
    grid_step: f64,
) -> Result<BarrierPfd, FaultTreeError> {
    let pfd_avg =
        conditional_average_probability(tree, catalog, &BTreeSet::new(), horizon, grid_step)?;
    Ok(BarrierPfd {
        pfd_avg,
        risk_reduction_factor: 1.0 / pfd_avg,
    })
}

/// A minimal cut set: event ids, sorted.
pub type CutSet = BTreeSet<String>;

/// Minimal cut sets, sorted by size then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CutSetList(pub Vec<CutSet>);

impl CutSetList {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CutSet> {
        self.0.iter()
    }
}

type Family = Vec<Vec<usize>>;

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

/// Absorption: drops every set that contains another.
fn minimize(mut family: Family) -> Family {
    family.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    family.dedup();
    let mut kept: Family = Vec::with_capacity(family.len());
    for s in family {
        if !kept.iter().any(|k| is_subset(k, &s)) {
            kept.push(s);
        }
    }
    kept
}

fn product(a: &Family, b: &Family) -> Family {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            let mut u: Vec<usize> = x.iter().chain(y).copied().collect();
            u.sort_unstable();
            u.dedup();
            out.push(u);
        }
    }
    minimize(out)
}

fn cut_family(node: &Node) -> Family {
    match node {
        Node::Var(v) => vec![vec![*v]],
        Node::Const(true) => vec![Vec::new()],
        Node::Const(false) => Vec::new(),
        Node::Vote { k, children } => {
            // at_least[j]: cut sets failing at least j of the children seen so far
            let mut at_least: Vec<Family> = vec![Vec::new(); k + 1];
            at_least[0] = vec![Vec::new()];
            for c in children {
                let fam = cut_family(c);
                for j in (1..=*k).rev() {
                    let mut merged = std::mem::take(&mut at_least[j]);
                    merged.extend(product(&at_least[j - 1], &fam));
                    at_least[j] = minimize(merged);
                }
            }
            std::mem::take(&mut at_least[*k])
        }
    }
}

/// All minimal cut sets of a coherent tree.
pub fn minimal_cut_sets(tree: &GateNode) -> Result<CutSetList, FaultTreeError> {
    tree.check()?;
    let vars: Vec<String> = tree.event_ids().into_iter().collect();
    let index: BTreeMap<&str, usize> = vars
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    // vars are sorted, so index order is id order
    let family = minimize(cut_family(&Node::compile(tree, &index)));
    Ok(CutSetList(
        family
            .into_iter()
            .map(|s| s.into_iter().map(|i| vars[i].clone()).collect())
            .collect(),
    ))
}

/// One cause of an initiating event and the enablers it fails on occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct InitiatorCause {
    pub event: String,
    pub force_failed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitiatingScenario {
    pub id: String,
    pub causes: Vec<InitiatorCause>,
    /// Barriers that must all fail for the scenario to reach the central event.
    /// `None` means the event was never mapped.
    pub barriers: Option<Vec<String>>,
}

/// Left side of the bow-tie: barriers and the initiating events they oppose.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PreventionStructure {
    pub barriers: BTreeMap<String, GateNode>,
    pub scenarios: Vec<InitiatingScenario>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CauseContribution {
    pub initiating_event: String,
    pub cause: String,
    pub frequency_per_year: f64,
    /// Time-averaged probability that every mapped barrier fails, given the cause.
    pub conditional_failure_probability: f64,
    pub contribution_per_year: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErcBreakdown {
    pub total_per_year: f64,
    pub by_initiating_event: Vec<(String, f64)>,
    pub by_cause: Vec<CauseContribution>,
}

/// Central-event frequency: each initiator cause's frequency times the
/// time-averaged probability that all barriers opposing it fail, with the
/// cause's linked enablers held failed.
pub fn erc_frequency(
    structure: &PreventionStructure,
    catalog: &EventCatalog,
    horizon: f64,
    grid_step: f64,
) -> Result<ErcBreakdown, FaultTreeError> {
    let mut cache: BTreeMap<(Vec<String>, BTreeSet<String>), f64> = BTreeMap::new();
    let mut by_cause = Vec::new();
    let mut by_initiating_event = Vec::new();
    for scenario in &structure.scenarios {
        let barrier_ids = scenario
            .barriers
            .as_ref()
            .ok_or_else(|| FaultTreeError::UnmappedInitiatingEvent(scenario.id.clone()))?;
        let trees = barrier_ids
            .iter()
            .map(|b| {
                structure
                    .barriers
                    .get(b)
                    .cloned()
                    .ok_or_else(|| FaultTreeError::UnknownBarrier(b.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let joint = (!trees.is_empty()).then_some(GateNode::And(trees));
        let joint_cuts = match &joint {
            Some(tree) => minimal_cut_sets(tree)?,
            None => CutSetList(vec![CutSet::new()]),
        };
        let mut scenario_total = 0.0;
        for cause in &scenario.causes {
            let event = catalog.get(&cause.event)?;
            for cut in joint_cuts.iter() {
                let mut initiators = usize::from(event.role == EventRole::Initiator);
                for id in cut {
                    if catalog.get(id)?.role == EventRole::Initiator {
                        initiators += 1;
                    }
                }
                if initiators != 1 {
                    let mut set: Vec<String> = cut.iter().cloned().collect();
                    set.push(cause.event.clone());
                    set.sort();
                    return Err(FaultTreeError::CutSetInitiators {
                        scenario: scenario.id.clone(),
                        set,
                        count: initiators,
                    });
                }
            }
            let UnavailabilityModel::Frequency(frequency) = event.model else {
                return Err(FaultTreeError::RoleMismatch {
                    id: event.id.clone(),
                    message: "initiator causes need a frequency model".into(),
                });
            };
            let forced: BTreeSet<String> = cause.force_failed.iter().cloned().collect();
            for id in &forced {
                if catalog.get(id)?.role != EventRole::Enabler {
                    return Err(FaultTreeError::RoleMismatch {
                        id: id.clone(),
                        message: "only enabler events can be forced to the failed state".into(),
                    });
                }
            }
            let conditional = match &joint {
                None => 1.0,
                Some(tree) => {
                    let key = (barrier_ids.clone(), forced);
                    match cache.get(&key) {
                        Some(v) => *v,
                        None => {
                            let v = conditional_average_probability(
                                tree, catalog, &key.1, horizon, grid_step,
                            )?;
                            cache.insert(key, v);
                            v
                        }
                    }
                }
            };
            let contribution = frequency * conditional;
            scenario_total += contribution;
            by_cause.push(CauseContribution {
                initiating_event: scenario.id.clone(),
                cause: cause.event.clone(),
                frequency_per_year: frequency,
                conditional_failure_probability: conditional,
                contribution_per_year: contribution,
            });
        }
        by_initiating_event.push((scenario.id.clone(), scenario_total));
    }
    Ok(ErcBreakdown {
        total_per_year: by_initiating_event.iter().map(|(_, f)| f).sum(),
        by_initiating_event,
        by_cause,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(id: &str) -> GateNode {
        GateNode::event(id)
    }

    fn constants(pairs: &[(&str, f64)]) -> EventCatalog {
        EventCatalog::from_events(pairs.iter().map(|(id, p)| {
            BasicEvent::new(
                *id,
                UnavailabilityModel::ConstantProbability(*p),
                EventRole::Enabler,
            )
            .unwrap()
        }))
        .unwrap()
    }

    fn sets(list: &CutSetList) -> Vec<Vec<&str>> {
        list.iter()
            .map(|s| s.iter().map(String::as_str).collect())
            .collect()
    }

    #[test]
    fn or_and_cut_sets() {
        let or = minimal_cut_sets(&GateNode::Or(vec![ev("b"), ev("a")])).unwrap();
        assert_eq!(sets(&or), vec![vec!["a"], vec!["b"]]);
        let and = minimal_cut_sets(&GateNode::And(vec![ev("b"), ev("a")])).unwrap();
        assert_eq!(sets(&and), vec![vec!["a", "b"]]);
    }

    #[test]
    fn two_out_of_three_cut_sets() {
        let tree = GateNode::Koon {
            k: 2,
            children: vec![ev("a"), ev("b"), ev("c")],
        };
        let cuts = minimal_cut_sets(&tree).unwrap();
        assert_eq!(
            sets(&cuts),
            vec![vec!["a", "b"], vec!["a", "c"], vec!["b", "c"]]
        );
    }

    #[test]
    fn absorption_removes_supersets() {
        // a + a.b = a
        let tree = GateNode::Or(vec![ev("a"), GateNode::And(vec![ev("a"), ev("b")])]);
        assert_eq!(sets(&minimal_cut_sets(&tree).unwrap()), vec![vec!["a"]]);
    }

    #[test]
    fn simple_probabilities() {
        let cat = constants(&[("a", 0.1), ("b", 0.1)]);
        let and = top_probability(&GateNode::And(vec![ev("a"), ev("b")]), &cat, 0.0).unwrap();
        assert!((and - 0.01).abs() < 1e-15);
        let or = top_probability(&GateNode::Or(vec![ev("a"), ev("b")]), &cat, 0.0).unwrap();
        assert!((or - 0.19).abs() < 1e-15);
    }

    #[test]
    fn repeated_event_is_not_double_counted() {
        // (a + b)(a + c) = a + bc
        let cat = constants(&[("a", 0.2), ("b", 0.3), ("c", 0.4)]);
        let tree = GateNode::And(vec![
            GateNode::Or(vec![ev("a"), ev("b")]),
            GateNode::Or(vec![ev("a"), ev("c")]),
        ]);
        let p = top_probability(&tree, &cat, 0.0).unwrap();
        let expected = 0.2 + 0.8 * 0.3 * 0.4;
        assert!((p - expected).abs() < 1e-15);
    }

    #[test]
    fn koon_vote_probability() {
        let cat = constants(&[("a", 0.1), ("b", 0.2), ("c", 0.3)]);
        let tree = GateNode::Koon {
            k: 2,
            children: vec![ev("a"), ev("b"), ev("c")],
        };
        let p = top_probability(&tree, &cat, 0.0).unwrap();
        let expected = 0.1 * 0.2 * 0.7 + 0.1 * 0.8 * 0.3 + 0.9 * 0.2 * 0.3 + 0.1 * 0.2 * 0.3;
        assert!((p - expected).abs() < 1e-15);
    }

    #[test]
    fn invalid_koon_names_the_gate() {
        let tree = GateNode::Or(vec![
            ev("x"),
            GateNode::Koon {
                k: 4,
                children: vec![ev("a"), ev("b"), ev("c")],
            },
        ]);
        match minimal_cut_sets(&tree) {
            Err(FaultTreeError::InvalidGate { path, .. }) => assert_eq!(path, "or[1].koon"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn initiator_leaf_is_misuse() {
        let mut cat = constants(&[("a", 0.1)]);
        cat.insert(
            BasicEvent::new(
                "ei",
                UnavailabilityModel::Frequency(0.1),
                EventRole::Initiator,
            )
            .unwrap(),
        )
        .unwrap();
        let tree = GateNode::And(vec![ev("a"), ev("ei")]);
        assert!(matches!(
            top_probability(&tree, &cat, 0.0),
            Err(FaultTreeError::InitiatorInTree(_))
        ));
    }

    #[test]
    fn role_must_match_model_kind() {
        assert!(
            BasicEvent::new("x", UnavailabilityModel::Frequency(1.0), EventRole::Enabler).is_err()
        );
        assert!(BasicEvent::new(
            "x",
            UnavailabilityModel::ConstantProbability(0.5),
            EventRole::Initiator
        )
        .is_err());
        assert!(BasicEvent::new(
            "x",
            UnavailabilityModel::ConstantProbability(1.5),
            EventRole::Enabler
        )
        .is_err());
    }

    fn with_initiator(mut cat: EventCatalog, id: &str, f: f64) -> EventCatalog {
        cat.insert(
            BasicEvent::new(id, UnavailabilityModel::Frequency(f), EventRole::Initiator).unwrap(),
        )
        .unwrap();
        cat
    }

    fn scenario(id: &str, cause: &str, barriers: Option<&[&str]>) -> InitiatingScenario {
        InitiatingScenario {
            id: id.into(),
            causes: vec![InitiatorCause {
                event: cause.into(),
                force_failed: vec![],
            }],
            barriers: barriers.map(|b| b.iter().map(|s| s.to_string()).collect()),
        }
    }

    #[test]
    fn unprotected_initiator_passes_through() {
        let cat = with_initiator(EventCatalog::new(), "ei", 0.1);
        let s = PreventionStructure {
            barriers: BTreeMap::new(),
            scenarios: vec![scenario("EI", "ei", Some(&[]))],
        };
        let r = erc_frequency(&s, &cat, 100.0, 10.0).unwrap();
        assert_eq!(r.total_per_year, 0.1);
    }

    #[test]
    fn erc_uses_conditioning_and_rejects_bad_structures() {
        let cat = with_initiator(constants(&[("a", 0.1), ("b", 0.2)]), "ei", 2.0);
        let mut barriers = BTreeMap::new();
        barriers.insert("A".to_string(), GateNode::Or(vec![ev("a"), ev("b")]));
        let mut s = PreventionStructure {
            barriers,
            scenarios: vec![scenario("EI", "ei", Some(&["A"]))],
        };
        let plain = erc_frequency(&s, &cat, 100.0, 10.0).unwrap().total_per_year;
        assert!((plain - 2.0 * 0.28).abs() < 1e-12);
        s.scenarios[0].causes[0].force_failed = vec!["b".into()];
        let linked = erc_frequency(&s, &cat, 100.0, 10.0).unwrap().total_per_year;
        assert!((linked - 2.0).abs() < 1e-12);

        s.scenarios[0].barriers = None;
        assert!(matches!(
            erc_frequency(&s, &cat, 100.0, 10.0),
            Err(FaultTreeError::UnmappedInitiatingEvent(_))
        ));
        s.scenarios[0].barriers = Some(vec!["nope".into()]);
        assert!(matches!(
            erc_frequency(&s, &cat, 100.0, 10.0),
            Err(FaultTreeError::UnknownBarrier(_))
        ));
        // an enabler as cause gives cut sets without any initiator
        s.scenarios[0] = scenario("EI", "a", Some(&["A"]));
        assert!(matches!(
            erc_frequency(&s, &cat, 100.0, 10.0),
            Err(FaultTreeError::CutSetInitiators { count: 0, .. })
        ));
    }

    #[test]
    fn forced_events_hold_at_one() {
        let cat = constants(&[("a", 0.1), ("b", 0.2)]);
        let tree = GateNode::And(vec![ev("a"), ev("b")]);
        let forced: BTreeSet<String> = ["a".to_string()].into();
        let p = conditional_average_probability(&tree, &cat, &forced, 10.0, 1.0).unwrap();
        assert!((p - 0.2).abs() < 1e-15);
    }
}
