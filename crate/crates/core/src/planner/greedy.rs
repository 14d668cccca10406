//! Greedy versus exhaustive view sequences under the expected-evidence world.
//!
//! Observations are replaced by [`expected_evidence`], so every view sequence
//! has one deterministic outcome and the best policy can be enumerated.

use super::{
    eig_from_responsibilities, expected_evidence_from_responsibilities, information_gain,
    CandidateSet, PlannerError,
};
use crate::posterior::PosteriorState;
use crate::real::Real;
use crate::render::render_responsibilities;
use crate::scene::Scene;

pub const MAX_BRUTE_FORCE_CANDIDATES: usize = 7;
pub const MAX_BRUTE_FORCE_K: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyRatio {
    /// `greedy_total / best_total`, 1 when no sequence gains anything.
    pub ratio: f64,
    pub greedy_total: f64,
    pub best_total: f64,
    pub greedy_order: Vec<usize>,
    pub best_order: Vec<usize>,
}

/// Total entropy drop of applying `order`'s expected evidence in sequence.
fn sequence_gain(renders: &[Vec<f64>], order: &[usize], state: &PosteriorState) -> f64 {
    let mut s = state.clone();
    let mut total = 0.0;
    for &v in order {
        let ev = expected_evidence_from_responsibilities(&renders[v], &s);
        total += information_gain(&s, &ev);
        s.update(&ev).expect("aligned evidence");
    }
    total
}

fn ordered_subsets(n: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() == k {
        out.push(prefix.clone());
        return;
    }
    for v in 0..n {
        if !prefix.contains(&v) {
            prefix.push(v);
            ordered_subsets(n, k, prefix, out);
            prefix.pop();
        }
    }
}

/// Runs `k` greedy steps (distinct views, posterior updated with expected
/// evidence between steps) and compares against every ordered `k`-subset.
pub fn greedy_ratio_check<T: Real>(
    scene: &Scene<T>,
    candidates: &CandidateSet<T>,
    k: usize,
    state: &PosteriorState,
) -> Result<GreedyRatio, PlannerError> {
    let n = candidates.cameras.len();
    if n == 0 {
        return Err(PlannerError::NoCandidates);
    }
    if n > MAX_BRUTE_FORCE_CANDIDATES || k > MAX_BRUTE_FORCE_K || k == 0 || k > n {
        return Err(PlannerError::Budget(format!(
            "need 1 <= k <= min({MAX_BRUTE_FORCE_K}, candidates) and at most \
             {MAX_BRUTE_FORCE_CANDIDATES} candidates, got k = {k} with {n} candidates"
        )));
    }
    let renders: Vec<Vec<f64>> = candidates
        .cameras
        .iter()
        .map(|c| {
            render_responsibilities(scene, c)
                .iter()
                .map(|t| t.as_f64())
                .collect()
        })
        .collect();

    let mut s = state.clone();
    let mut greedy_order = Vec::with_capacity(k);
    let mut greedy_total = 0.0;
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for (v, out) in renders.iter().enumerate() {
            if greedy_order.contains(&v) {
                continue;
            }
            let g = eig_from_responsibilities(out, &s);
            if best.is_none_or(|(_, bg)| g > bg) {
                best = Some((v, g));
            }
        }
        let (v, g) = best.expect("k <= n leaves a candidate");
        greedy_order.push(v);
        greedy_total += g;
        s.update(&expected_evidence_from_responsibilities(&renders[v], &s))
            .expect("aligned evidence");
    }

    let mut orders = Vec::new();
    ordered_subsets(n, k, &mut Vec::with_capacity(k), &mut orders);
    let (best_order, best_total) = orders
        .into_iter()
        .map(|o| {
            let g = sequence_gain(&renders, &o, state);
            (o, g)
        })
        .fold((Vec::new(), f64::NEG_INFINITY), |acc, x| {
            if x.1 > acc.1 {
                x
            } else {
                acc
            }
        });

    let ratio = if best_total <= 0.0 {
        1.0
    } else {
        greedy_total / best_total
    };
    Ok(GreedyRatio {
        ratio,
        greedy_total,
        best_total,
        greedy_order,
        best_order,
    })
}
