//! Dangerous-undetected unavailability of periodically proof-tested elements.
//!
//! An element fails dangerously-undetected at rate `(1 - sff) * lambda_total`.
//! Failures stay latent until the next proof test, where they are found and
//! repaired instantly, so the unavailability is a sawtooth:
//!
//! ```text
//! q(t) = 1 - exp(-rate * (t mod T1))
//! ```
//!
//! With partial tests the rate is split by coverage into a share reset every
//! `T2` (and by full tests) and a share reset only by full tests. The two
//! shares are independent, so `q = 1 - (1 - q_partial)(1 - q_full)`.
//!
//! β-factor common cause assigns `β * λ_DU` of every group member to one
//! shared event and leaves `(1 - β) * λ_DU` on each member.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HOURS_PER_YEAR: f64 = 8760.0;
pub const DEFAULT_HORIZON_HOURS: f64 = 4.0 * HOURS_PER_YEAR;
pub const DEFAULT_GRID_STEP_HOURS: f64 = 4.0;

/// Relative tolerance used when merging grid points and comparing rates.
const REL_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReliabilityError {
    #[error("frequency model `{0}` has no unavailability; it can only act as an initiator")]
    FrequencyModel(String),
    #[error("time must be finite and non-negative, got {0}")]
    NegativeTime(f64),
    #[error("invalid averaging window: horizon {horizon} h, grid step {grid_step} h")]
    InvalidGrid { horizon: f64, grid_step: f64 },
    #[error("invalid component `{id}`: {field} {message}")]
    InvalidComponent {
        id: String,
        field: &'static str,
        message: String,
    },
    #[error("common-cause group is not supported: {0}")]
    UnsupportedConfiguration(String),
    #[error("common-cause misuse: {0}")]
    CcfMisuse(String),
}

/// Partial proof test: every `t2_hours`, a fraction `ptc` of the
/// dangerous-undetected failures is revealed and repaired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialTest {
    pub t2_hours: f64,
    pub ptc: f64,
}

/// Reliability and maintenance parameters of one hardware element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentReliability {
    pub id: String,
    /// Total failure rate, per hour.
    pub lambda_total: f64,
    /// Safe-failure fraction.
    pub sff: f64,
    /// Full proof-test interval, hours.
    pub t1_hours: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial_test: Option<PartialTest>,
    /// Common-cause fraction (β-factor).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

/// A single broken invariant of a [`ComponentReliability`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentViolation {
    pub field: &'static str,
    pub message: String,
}

impl ComponentReliability {
    /// Dangerous-undetected failure rate `(1 - sff) * lambda_total`.
    pub fn lambda_du(&self) -> f64 {
        (1.0 - self.sff) * self.lambda_total
    }

    pub fn beta_or_zero(&self) -> f64 {
        self.beta.unwrap_or(0.0)
    }

    /// Every broken invariant, in field order.
    pub fn violations(&self) -> Vec<ComponentViolation> {
        let mut out = Vec::new();
        let mut push = |field, message: String| out.push(ComponentViolation { field, message });
        if !(self.lambda_total.is_finite() && self.lambda_total > 0.0) {
            push(
                "lambda_total",
                format!("must be > 0, got {}", self.lambda_total),
            );
        }
        if !(self.sff.is_finite() && (0.0..1.0).contains(&self.sff)) {
            push("sff", format!("must be in [0, 1), got {}", self.sff));
        }
        if !(self.t1_hours.is_finite() && self.t1_hours > 0.0) {
            push("t1_hours", format!("must be > 0, got {}", self.t1_hours));
        }
        if let Some(pt) = &self.partial_test {
            if !(pt.t2_hours.is_finite() && pt.t2_hours > 0.0 && pt.t2_hours < self.t1_hours) {
                push(
                    "partial_test.t2_hours",
                    format!("must be in (0, t1_hours), got {}", pt.t2_hours),
                );
            }
            if !(pt.ptc.is_finite() && pt.ptc > 0.0 && pt.ptc <= 1.0) {
                push(
                    "partial_test.ptc",
                    format!("must be in (0, 1], got {}", pt.ptc),
                );
            }
        }
        if let Some(beta) = self.beta {
            if !(beta.is_finite() && (0.0..=1.0).contains(&beta)) {
                push("beta", format!("must be in [0, 1], got {beta}"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ReliabilityError> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(v) => Err(ReliabilityError::InvalidComponent {
                id: self.id.clone(),
                field: v.field,
                message: v.message,
            }),
        }
    }
}

/// Whether a tested model carries the member's own share of the failure
/// rate or the group's shared common-cause share.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CcfRole {
    #[default]
    Independent,
    Common,
}

/// One exponential share of a tested element: fails at `rate`, reset at
/// every multiple of each of `periods`.
#[derive(Debug, Clone, PartialEq)]
struct SawtoothShare {
    rate: f64,
    periods: Vec<f64>,
}

impl SawtoothShare {
    fn elapsed(&self, t: f64, side: Side) -> f64 {
        self.periods
            .iter()
            .map(|&p| {
                let k = (t / p).round();
                if (t - k * p).abs() <= REL_EPS * p * k.max(1.0) {
                    // at a test instant the left limit sees a full period
                    if side == Side::Left && t > 0.0 {
                        p
                    } else {
                        0.0
                    }
                } else {
                    t - (t / p).floor() * p
                }
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Which one-sided limit to take at a test discontinuity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Value just before `t` (failures accumulated up to the test).
    Left,
    /// Value at `t` itself (after any test at `t`).
    Right,
}

/// How a basic event's state is quantified.
#[derive(Debug, Clone, PartialEq)]
pub enum UnavailabilityModel {
    PeriodicallyTested {
        component: ComponentReliability,
        ccf_role: CcfRole,
    },
    ConstantProbability(f64),
    /// Occurrence frequency, per year.
    Frequency(f64),
}

impl UnavailabilityModel {
    /// Checked constructor for a tested model.
    pub fn tested(
        component: ComponentReliability,
        ccf_role: CcfRole,
    ) -> Result<Self, ReliabilityError> {
        component.validate()?;
        if ccf_role == CcfRole::Common && component.beta_or_zero() <= 0.0 {
            return Err(ReliabilityError::CcfMisuse(format!(
                "component `{}` has no positive beta, it cannot carry a common-cause share",
                component.id
            )));
        }
        Ok(Self::PeriodicallyTested {
            component,
            ccf_role,
        })
    }

    pub fn is_frequency(&self) -> bool {
        matches!(self, Self::Frequency(_))
    }

    /// Role-adjusted dangerous-undetected rate, per hour. `None` for
    /// untested models.
    pub fn effective_rate(&self) -> Option<f64> {
        match self {
            Self::PeriodicallyTested {
                component,
                ccf_role,
            } => {
                let beta = component.beta_or_zero();
                let share = match ccf_role {
                    CcfRole::Independent => 1.0 - beta,
                    CcfRole::Common => beta,
                };
                Some(share * component.lambda_du())
            }
            _ => None,
        }
    }

    fn shares(&self) -> Vec<SawtoothShare> {
        let Self::PeriodicallyTested { component, .. } = self else {
            return Vec::new();
        };
        let rate = self.effective_rate().unwrap_or(0.0);
        let t1 = component.t1_hours;
        match &component.partial_test {
            None => vec![SawtoothShare {
                rate,
                periods: vec![t1],
            }],
            Some(pt) => vec![
                SawtoothShare {
                    rate: pt.ptc * rate,
                    periods: vec![pt.t2_hours, t1],
                },
                SawtoothShare {
                    rate: (1.0 - pt.ptc) * rate,
                    periods: vec![t1],
                },
            ],
        }
    }

    /// Test periods whose multiples are discontinuities of `q(t)`.
    pub fn test_periods(&self) -> Vec<f64> {
        match self {
            Self::PeriodicallyTested { component, .. } => {
                let mut p = vec![component.t1_hours];
                if let Some(pt) = &component.partial_test {
                    p.push(pt.t2_hours);
                }
                p
            }
            _ => Vec::new(),
        }
    }

    /// One-sided unavailability at `t`.
    pub fn unavailability_at(&self, t: f64, side: Side) -> Result<f64, ReliabilityError> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(ReliabilityError::NegativeTime(t));
        }
        match self {
            Self::Frequency(f) => Err(ReliabilityError::FrequencyModel(format!("{f}/yr"))),
            Self::ConstantProbability(p) => Ok(*p),
            Self::PeriodicallyTested { .. } => {
                let exponent: f64 = self
                    .shares()
                    .iter()
                    .map(|s| s.rate * s.elapsed(t, side))
                    .sum();
                Ok(-(-exponent).exp_m1())
            }
        }
    }
}

/// Right-continuous instantaneous unavailability `q(t)`.
pub fn instantaneous_unavailability(
    model: &UnavailabilityModel,
    t: f64,
) -> Result<f64, ReliabilityError> {
    model.unavailability_at(t, Side::Right)
}

/// Integration grid over `[0, horizon]`: every multiple of the step, every
/// test instant and the horizon itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(
        horizon: f64,
        grid_step: f64,
        test_periods: impl IntoIterator<Item = f64>,
    ) -> Result<Self, ReliabilityError> {
        if !(horizon.is_finite() && horizon > 0.0 && grid_step > 0.0 && grid_step <= horizon) {
            return Err(ReliabilityError::InvalidGrid { horizon, grid_step });
        }
        let mut points = Vec::new();
        let steps = (horizon / grid_step).floor() as usize;
        points.extend((0..=steps).map(|k| k as f64 * grid_step));
        for period in test_periods {
            if period <= 0.0 || !period.is_finite() {
                continue;
            }
            let mut k = 1.0;
            while k * period < horizon {
                points.push(k * period);
                k += 1.0;
            }
        }
        points.push(horizon);
        points.sort_by(f64::total_cmp);
        let tol = REL_EPS * horizon.max(1.0);
        points.dedup_by(|b, a| (*b - *a).abs() <= tol);
        if let Some(last) = points.last_mut() {
            *last = horizon;
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().unwrap_or(&0.0)
    }

    /// Composite trapezoid average of `f`. Each cell `[a, b]` uses the
    /// right limit at `a` and the left limit at `b`, so jumps at test
    /// instants are integrated exactly.
    pub fn average<E>(&self, mut f: impl FnMut(f64, Side) -> Result<f64, E>) -> Result<f64, E> {
        let mut total = 0.0;
        for w in self.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            total += 0.5 * (f(a, Side::Right)? + f(b, Side::Left)?) * (b - a);
        }
        Ok(total / self.horizon())
    }
}

/// Time-averaged unavailability over `[0, horizon]`.
pub fn average_unavailability(
    model: &UnavailabilityModel,
    horizon: f64,
    grid_step: f64,
) -> Result<f64, ReliabilityError> {
    match model {
        UnavailabilityModel::Frequency(f) => {
            return Err(ReliabilityError::FrequencyModel(format!("{f}/yr")))
        }
        UnavailabilityModel::ConstantProbability(p) => {
            TimeGrid::new(horizon, grid_step, [])?;
            return Ok(*p);
        }
        UnavailabilityModel::PeriodicallyTested { .. } => {}
    }
    let grid = TimeGrid::new(horizon, grid_step, model.test_periods())?;
    grid.average(|t, side| model.unavailability_at(t, side))
}

/// Result of splitting a β-factor group.
#[derive(Debug, Clone, PartialEq)]
pub struct CcfSplit {
    /// One model per member, in input order.
    pub independent: Vec<UnavailabilityModel>,
    pub common: UnavailabilityModel,
}

/// Splits a homogeneous β-factor group into per-member independent models
/// and one shared common-cause model.
pub fn split_ccf(group: &[ComponentReliability]) -> Result<CcfSplit, ReliabilityError> {
    let first = group
        .first()
        .ok_or_else(|| ReliabilityError::CcfMisuse("empty common-cause group".into()))?;
    for c in group {
        c.validate()?;
    }
    let beta = first.beta.ok_or_else(|| {
        ReliabilityError::CcfMisuse(format!("component `{}` has no beta", first.id))
    })?;
    if beta <= 0.0 {
        return Err(ReliabilityError::CcfMisuse(
            "beta = 0 group; use plain independent models".into(),
        ));
    }
    let ldu = first.lambda_du();
    for c in &group[1..] {
        match c.beta {
            Some(b) if b == beta => {}
            _ => {
                return Err(ReliabilityError::CcfMisuse(format!(
                    "component `{}` does not share beta {beta} with `{}`",
                    c.id, first.id
                )))
            }
        }
        if (c.lambda_du() - ldu).abs() > REL_EPS * ldu {
            return Err(ReliabilityError::UnsupportedConfiguration(format!(
                "members `{}` and `{}` have different dangerous-undetected rates ({} vs {} /h)",
                first.id,
                c.id,
                ldu,
                c.lambda_du()
            )));
        }
        if c.t1_hours != first.t1_hours || c.partial_test != first.partial_test {
            return Err(ReliabilityError::UnsupportedConfiguration(format!(
                "members `{}` and `{}` have different proof-test schedules",
                first.id, c.id
            )));
        }
    }
    let independent = group
        .iter()
        .map(|c| UnavailabilityModel::tested(c.clone(), CcfRole::Independent))
        .collect::<Result<Vec<_>, _>>()?;
    let common = UnavailabilityModel::tested(first.clone(), CcfRole::Common)?;
    Ok(CcfSplit {
        independent,
        common,
    })
}
