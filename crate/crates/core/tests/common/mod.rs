//! Independent oracles shared by the integration tests. Nothing here calls
//! into the evaluation code it is used to check.
#![allow(dead_code)]

use std::collections::BTreeSet;

use bowtie_core::fault_tree::{BasicEvent, EventCatalog, EventRole, GateNode};
use bowtie_core::reliability::{CcfRole, ComponentReliability, UnavailabilityModel};
use rand::rngs::StdRng;
use rand::Rng;

/// Random coherent tree over events `E00..E{n-1}`; events may repeat.
pub fn random_tree(rng: &mut StdRng, n_events: usize, depth: u32) -> GateNode {
    random_gate(rng, n_events, depth.max(1))
}

fn random_gate(rng: &mut StdRng, n: usize, depth: u32) -> GateNode {
    let m = rng.gen_range(2..=4);
    let children = (0..m).map(|_| random_node(rng, n, depth - 1)).collect();
    match rng.gen_range(0..3) {
        0 => GateNode::And(children),
        1 => GateNode::Or(children),
        _ => GateNode::Koon {
            k: rng.gen_range(1..=m),
            children,
        },
    }
}

fn random_node(rng: &mut StdRng, n: usize, depth: u32) -> GateNode {
    if depth == 0 || rng.gen_bool(0.4) {
        GateNode::event(format!("E{:02}", rng.gen_range(0..n)))
    } else {
        random_gate(rng, n, depth)
    }
}

/// Exhaustive sum over all 2^n component states.
pub fn enumerate_probability(tree: &GateNode, ids: &[String], p: &[f64]) -> f64 {
    let n = ids.len();
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let failed = |id: &str| {
            let i = ids.iter().position(|x| x == id).unwrap();
            mask & (1 << i) != 0
        };
        if tree.fails(&failed) {
            let mut w = 1.0;
            for (i, pi) in p.iter().enumerate() {
                w *= if mask & (1 << i) != 0 { *pi } else { 1.0 - pi };
            }
            total += w;
        }
    }
    total
}

/// Minimal failing states by brute force: failing masks from which
/// repairing any single failed event restores the system.
pub fn enumerate_min_cut_sets(tree: &GateNode, ids: &[String]) -> BTreeSet<BTreeSet<String>> {
    let n = ids.len();
    let fails = |mask: u32| {
        tree.fails(&|id: &str| {
            let i = ids.iter().position(|x| x == id).unwrap();
            mask & (1 << i) != 0
        })
    };
    let mut out = BTreeSet::new();
    for mask in 0u32..(1 << n) {
        if !fails(mask) {
            continue;
        }
        let minimal = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .all(|i| !fails(mask & !(1 << i)));
        if minimal {
            out.insert(
                (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| ids[i].clone())
                    .collect(),
            );
        }
    }
    out
}

/// Probability of the union of cut sets by inclusion-exclusion.
pub fn inclusion_exclusion(cut_sets: &[BTreeSet<String>], prob: &dyn Fn(&str) -> f64) -> f64 {
    let m = cut_sets.len();
    let mut total = 0.0;
    for mask in 1u32..(1 << m) {
        let mut union = BTreeSet::new();
        for (j, cs) in cut_sets.iter().enumerate() {
            if mask & (1 << j) != 0 {
                union.extend(cs.iter().cloned());
            }
        }
        let term: f64 = union.iter().map(|id| prob(id)).product();
        if mask.count_ones() % 2 == 1 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

pub fn constant_catalog(ids: &[String], p: &[f64]) -> EventCatalog {
    let mut cat = EventCatalog::new();
    for (id, pi) in ids.iter().zip(p) {
        cat.insert(
            BasicEvent::new(
                id.clone(),
                UnavailabilityModel::ConstantProbability(*pi),
                EventRole::Enabler,
            )
            .unwrap(),
        )
        .unwrap();
    }
    cat
}

/// Time average of a tested element's sawtooth over `[0, horizon]`,
/// integrated in closed form between consecutive test instants.
pub fn closed_form_average(c: &ComponentReliability, role: CcfRole, horizon: f64) -> f64 {
    let lambda_du = (1.0 - c.sff) * c.lambda_total;
    let share = match (role, c.beta) {
        (CcfRole::Common, Some(b)) => b,
        (CcfRole::Independent, Some(b)) => 1.0 - b,
        (_, None) => 1.0,
    };
    let rate = share * lambda_du;
    let (t2, ptc) = c
        .partial_test
        .as_ref()
        .map_or((None, 0.0), |pt| (Some(pt.t2_hours), pt.ptc));
    let (r_partial, r_full) = (ptc * rate, (1.0 - ptc) * rate);

    let mut instants = vec![0.0, horizon];
    for period in std::iter::once(c.t1_hours).chain(t2) {
        let mut k = 1.0;
        while k * period < horizon {
            instants.push(k * period);
            k += 1.0;
        }
    }
    instants.sort_by(f64::total_cmp);
    instants.dedup();

    let last_test = |a: f64, period: f64| (a / period + 1e-9).floor() * period;
    let mut integral = 0.0;
    for w in instants.windows(2) {
        let (a, b) = (w[0], w[1]);
        let since_full = a - last_test(a, c.t1_hours);
        let since_any = t2.map_or(since_full, |t2| since_full.min(a - last_test(a, t2)));
        let c0 = r_full * since_full + r_partial * since_any;
        let r = r_full + r_partial;
        let d = b - a;
        integral += if r == 0.0 {
            d * (1.0 - (-c0).exp())
        } else {
            d - (-c0).exp() * (-(r * d)).exp_m1().abs() / r
        };
    }
    integral / horizon
}
