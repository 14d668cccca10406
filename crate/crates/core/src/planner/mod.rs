//! Candidate views on the object sphere, EIG scoring and greedy selection.

mod candidates;
mod greedy;

pub use candidates::{
    camera_on_sphere, sample_candidates, sample_sphere_directions, sphere_radius, up_vector,
    CandidateSet,
};
pub use greedy::{greedy_ratio_check, GreedyRatio, MAX_BRUTE_FORCE_CANDIDATES, MAX_BRUTE_FORCE_K};

use rayon::prelude::*;
use thiserror::Error;

use crate::posterior::{row_entropy, EvidenceMap, PosteriorState};
use crate::real::Real;
use crate::render::{
    aggregate_evidence, aggregate_evidence_multiclass, render, render_responsibilities, Camera,
    Mask, RenderError, RenderOutput,
};
use crate::scene::Scene;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("no candidate views")]
    NoCandidates,
    #[error("brute force budget exceeded: {0}")]
    Budget(String),
    #[error(transparent)]
    Render(#[from] RenderError),
}

/// EIG of one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewScore {
    pub camera_index: usize,
    pub eig: f64,
    pub per_gaussian_drop: Option<Vec<f64>>,
}

fn assert_aligned<T: Real>(out: &RenderOutput<T>, state: &PosteriorState) {
    assert_eq!(
        out.num_gaussians(),
        state.len(),
        "render and posterior must index the same gaussians"
    );
}

/// Mean-preserving pseudo-evidence `ẽᵢ,c = mᵢ,c τᵢ`.
///
/// # Panics
/// If `out` and `state` have different lengths.
pub fn expected_evidence<T: Real>(out: &RenderOutput<T>, state: &PosteriorState) -> EvidenceMap {
    assert_aligned(out, state);
    let tau: Vec<f64> = out.responsibilities().iter().map(|t| t.as_f64()).collect();
    expected_evidence_from_responsibilities(&tau, state)
}

/// [`expected_evidence`] for a bare responsibility vector.
///
/// # Panics
/// If `tau` and `state` have different lengths, or `tau` has a negative entry.
pub fn expected_evidence_from_responsibilities(tau: &[f64], state: &PosteriorState) -> EvidenceMap {
    assert_eq!(tau.len(), state.len(), "one responsibility per gaussian");
    let k = state.num_classes();
    let mut counts = Vec::with_capacity(state.len() * k);
    for (i, &tau) in tau.iter().enumerate() {
        let row = state.row(i);
        let kappa: f64 = row.iter().sum();
        counts.extend(row.iter().map(|&c| c / kappa * tau));
    }
    EvidenceMap::from_counts(k, counts).expect("expected evidence is non-negative")
}

/// Per-splat entropy drop `H(row) - H(row + evidence row)`; zero where `τᵢ = 0`.
fn drops(state: &PosteriorState, ev: &EvidenceMap) -> Vec<f64> {
    let mut next = vec![0.0; state.num_classes()];
    (0..state.len())
        .map(|i| {
            let e = ev.row(i);
            if e.iter().all(|&v| v == 0.0) {
                return 0.0;
            }
            for ((n, &c), &d) in next.iter_mut().zip(state.row(i)).zip(e) {
                *n = c + d;
            }
            row_entropy(state.row(i)) - row_entropy(&next)
        })
        .collect()
}

/// Expected information gain of a rendered view.
pub fn eig<T: Real>(out: &RenderOutput<T>, state: &PosteriorState) -> f64 {
    drops(state, &expected_evidence(out, state)).iter().sum()
}

/// [`eig`] for a bare responsibility vector.
pub fn eig_from_responsibilities(tau: &[f64], state: &PosteriorState) -> f64 {
    drops(state, &expected_evidence_from_responsibilities(tau, state))
        .iter()
        .sum()
}

/// [`eig`] with the per-splat terms retained.
pub fn eig_breakdown<T: Real>(
    out: &RenderOutput<T>,
    state: &PosteriorState,
    camera_index: usize,
) -> ViewScore {
    let d = drops(state, &expected_evidence(out, state));
    ViewScore {
        camera_index,
        eig: d.iter().sum(),
        per_gaussian_drop: Some(d),
    }
}

/// Realized entropy drop from aggregating `mask`. Binary states split on
/// `target`; multi-class states take one column per mask class.
pub fn exact_ig<T: Real>(
    out: &RenderOutput<T>,
    mask: &Mask,
    target: u32,
    state: &PosteriorState,
) -> Result<f64, RenderError> {
    assert_aligned(out, state);
    let ev = if state.num_classes() == 2 {
        aggregate_evidence(out, mask, target)?
    } else {
        aggregate_evidence_multiclass(out, mask)?
    };
    Ok(information_gain(state, &ev))
}

/// `Σᵢ H(stateᵢ) - H(stateᵢ + evidenceᵢ)`.
pub fn information_gain(state: &PosteriorState, ev: &EvidenceMap) -> f64 {
    drops(state, ev).iter().sum()
}

/// Renders every candidate, scores it with [`eig`] and returns the best one
/// (lowest index on ties) together with its render.
pub fn select_view<T: Real>(
    scene: &Scene<T>,
    candidates: &CandidateSet<T>,
    state: &PosteriorState,
) -> Result<(ViewScore, RenderOutput<T>), PlannerError> {
    if candidates.cameras.is_empty() {
        return Err(PlannerError::NoCandidates);
    }
    let best = candidates
        .cameras
        .par_iter()
        .enumerate()
        .map(|(i, cam)| (i, candidate_eig(scene, cam, state)))
        .reduce_with(|x, y| {
            // Associative and order-independent: higher score, then lower index.
            if y.1 > x.1 || (y.1 == x.1 && y.0 < x.0) {
                y
            } else {
                x
            }
        })
        .expect("non-empty candidate set");
    let (camera_index, eig) = best;
    let out = render(scene, &candidates.cameras[camera_index]);
    Ok((
        ViewScore {
            camera_index,
            eig,
            per_gaussian_drop: None,
        },
        out,
    ))
}

/// Scores every candidate without keeping renders.
pub fn score_candidates<T: Real>(
    scene: &Scene<T>,
    candidates: &CandidateSet<T>,
    state: &PosteriorState,
) -> Vec<f64> {
    candidates
        .cameras
        .par_iter()
        .map(|cam| candidate_eig(scene, cam, state))
        .collect()
}

fn candidate_eig<T: Real>(scene: &Scene<T>, camera: &Camera<T>, state: &PosteriorState) -> f64 {
    let tau: Vec<f64> = render_responsibilities(scene, camera)
        .iter()
        .map(|t| t.as_f64())
        .collect();
    eig_from_responsibilities(&tau, state)
}

/// Mean posterior predictive entropy over all splats.
pub fn mean_predictive_entropy(state: &PosteriorState) -> f64 {
    if state.is_empty() {
        return 0.0;
    }
    (0..state.len())
        .map(|i| state.predictive_entropy(i))
        .sum::<f64>()
        / state.len() as f64
}

/// True once the mean predictive entropy has reached `target_mean_entropy`.
pub fn should_stop(state: &PosteriorState, target_mean_entropy: f64) -> bool {
    mean_predictive_entropy(state) <= target_mean_entropy
}

/// Mean predictive entropy matching an average accuracy bound of `accuracy`:
/// `(1 - A) · 2 ln 2`.
pub fn entropy_target_for_accuracy(accuracy: f64) -> f64 {
    (1.0 - accuracy) * 2.0 * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::render::Camera;
    use crate::scene::Gaussian;

    fn one_splat_view(tau_scale: f64) -> (Scene<f64>, RenderOutput<f64>) {
        let g = Gaussian::isotropic(Vec3::zero(), tau_scale, 1.0, [1.0; 3]);
        let scene = Scene::new("s", vec![g]).unwrap();
        let cam = Camera::new(
            Vec3::new(-5.0, 0.0, 0.0),
            Vec3::zero(),
            Vec3::new(0.0, 0.0, 1.0),
            1.0,
            12,
            12,
        )
        .unwrap();
        let out = render(&scene, &cam);
        (scene, out)
    }

    #[test]
    fn expected_evidence_splits_tau() {
        let (_, out) = one_splat_view(0.3);
        let s = PosteriorState::from_counts(2, vec![1.0, 1.0], 1.0, 1.0).unwrap();
        let ev = expected_evidence(&out, &s);
        let tau = out.responsibilities()[0];
        assert!((ev.e1(0) - 0.5 * tau).abs() < 1e-15);
        assert!((ev.e0(0) + ev.e1(0) - tau).abs() <= 1e-15 * tau);
    }

    #[test]
    fn eig_matches_drop_sum() {
        let (_, out) = one_splat_view(0.3);
        let s = PosteriorState::from_counts(2, vec![2.0, 5.0], 1.0, 1.0).unwrap();
        let vs = eig_breakdown(&out, &s, 0);
        assert_eq!(vs.eig, vs.per_gaussian_drop.unwrap().iter().sum::<f64>());
        assert!(vs.eig > 0.0);
    }

    #[test]
    fn stop_rule() {
        let s = PosteriorState::from_counts(2, vec![1.0, 19.0], 1.0, 1.0).unwrap();
        let target = entropy_target_for_accuracy(0.9);
        assert!((target - 0.138_629).abs() < 1e-5);
        assert!(!should_stop(&s, target));
        let uniform = PosteriorState::new(3, 1.0, 1.0).unwrap();
        assert!(!should_stop(&uniform, 0.5));
        assert!((mean_predictive_entropy(&uniform) - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
