//! Bow-tie risk model evaluation.
//!
//! Two ways of quantifying the same bow-tie are provided:
//!
//! * quantitative: barrier fault trees over periodically tested components,
//!   exact top-event probabilities averaged over the proof-test horizon, and
//!   initiator/enabler frequency quantification of the central event;
//! * semi-quantitative: confidence levels looked up from architecture and
//!   safe-failure fraction, propagated as powers-of-ten divisors.
//!
//! Both feed the same event tree to obtain per-phenomenon frequencies.

pub mod evaluate;
pub mod event_tree;
pub mod fault_tree;
pub mod model;
pub mod reliability;
pub mod report;
pub mod semiquant;
