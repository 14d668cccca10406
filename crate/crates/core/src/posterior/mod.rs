//! Per-splat Beta (or Dirichlet) label posteriors.
//!
//! Counts live in an `N × K` row-major matrix. For the binary case `K = 2`
//! with column 1 holding `a` (foreground) and column 0 holding `b`.

mod checkpoint;
mod entropy;

pub use checkpoint::{checkpoint_header, read_checkpoint, write_checkpoint};
pub use entropy::{
    bayes_accuracy_bound, bernoulli_entropy, beta_entropy, categorical_entropy, dirichlet_entropy,
};
pub(crate) use entropy::{beta_entropy_unchecked, dirichlet_entropy_unchecked};

use thiserror::Error;

use crate::geometry::Vec3;
use crate::real::Real;
use crate::scene::Scene;

/// Lower clamp on the object radius.
pub const R_MIN: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum PosteriorError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("negative or non-finite evidence {value} for gaussian {index}")]
    NegativeEvidence { index: usize, value: f64 },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("no gaussian is labeled foreground")]
    NoForeground,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Non-negative per-splat evidence from one view, one column per class.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceMap {
    k: usize,
    counts: Vec<f64>,
}

impl EvidenceMap {
    /// Binary evidence with success counts `e1` and failure counts `e0`.
    pub fn binary(e1: Vec<f64>, e0: Vec<f64>) -> Result<Self, PosteriorError> {
        if e1.len() != e0.len() {
            return Err(PosteriorError::LengthMismatch(format!(
                "e1 has {} entries, e0 has {}",
                e1.len(),
                e0.len()
            )));
        }
        let counts = e0.iter().zip(&e1).flat_map(|(&b, &a)| [b, a]).collect();
        Self::from_counts(2, counts)
    }

    /// Row-major `N × k` counts.
    pub fn from_counts(k: usize, counts: Vec<f64>) -> Result<Self, PosteriorError> {
        if k < 2 || !counts.len().is_multiple_of(k) {
            return Err(PosteriorError::LengthMismatch(format!(
                "{} counts do not form rows of {k} classes",
                counts.len()
            )));
        }
        if let Some(p) = counts.iter().position(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(PosteriorError::NegativeEvidence {
                index: p / k,
                value: counts[p],
            });
        }
        Ok(Self { k, counts })
    }

    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            k,
            counts: vec![0.0; n * k],
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.counts[i * self.k..(i + 1) * self.k]
    }

    /// Foreground count (column 1).
    pub fn e1(&self, i: usize) -> f64 {
        self.counts[i * self.k + 1]
    }

    /// Background count (column 0).
    pub fn e0(&self, i: usize) -> f64 {
        self.counts[i * self.k]
    }

    /// Row total, i.e. the splat's responsibility in the view.
    pub fn tau(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    pub fn taus(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.tau(i)).collect()
    }
}

/// Pseudo-count state for every splat of a scene.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorState {
    k: usize,
    counts: Vec<f64>,
    a_init: f64,
    b_init: f64,
}

fn check_init(v: f64, name: &str) -> Result<(), PosteriorError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(PosteriorError::Domain(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

impl PosteriorState {
    /// `n` binary posteriors at `Beta(a_init, b_init)`.
    pub fn new(n: usize, a_init: f64, b_init: f64) -> Result<Self, PosteriorError> {
        check_init(a_init, "a_init")?;
        check_init(b_init, "b_init")?;
        Ok(Self {
            k: 2,
            counts: [b_init, a_init].repeat(n),
            a_init,
            b_init,
        })
    }

    /// `n` Dirichlet posteriors over `k` classes, every count at `alpha_init`.
    pub fn dirichlet(n: usize, k: usize, alpha_init: f64) -> Result<Self, PosteriorError> {
        check_init(alpha_init, "alpha_init")?;
        if k < 2 {
            return Err(PosteriorError::Domain(format!(
                "need at least 2 classes, got {k}"
            )));
        }
        Ok(Self {
            k,
            counts: vec![alpha_init; n * k],
            a_init: alpha_init,
            b_init: alpha_init,
        })
    }

    /// State from explicit row-major counts, e.g. a checkpoint.
    pub fn from_counts(
        k: usize,
        counts: Vec<f64>,
        a_init: f64,
        b_init: f64,
    ) -> Result<Self, PosteriorError> {
        check_init(a_init, "a_init")?;
        check_init(b_init, "b_init")?;
        if k < 2 || !counts.len().is_multiple_of(k) {
            return Err(PosteriorError::LengthMismatch(format!(
                "{} counts do not form rows of {k} classes",
                counts.len()
            )));
        }
        if let Some(p) = counts.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(PosteriorError::Domain(format!(
                "count {} of gaussian {} must be positive",
                counts[p],
                p / k
            )));
        }
        Ok(Self {
            k,
            counts,
            a_init,
            b_init,
        })
    }

    pub fn len(&self) -> usize {
        self.counts.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn a_init(&self) -> f64 {
        self.a_init
    }

    pub fn b_init(&self) -> f64 {
        self.b_init
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.counts[i * self.k..(i + 1) * self.k]
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn a(&self, i: usize) -> f64 {
        self.counts[i * self.k + 1]
    }

    pub fn b(&self, i: usize) -> f64 {
        self.counts[i * self.k]
    }

    /// Concentration `κᵢ`, the row total.
    pub fn concentration(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    /// Posterior mean of class `c`.
    pub fn class_mean(&self, i: usize, c: usize) -> f64 {
        self.counts[i * self.k + c] / self.concentration(i)
    }

    /// Posterior foreground probability `mᵢ`: `a/(a+b)` for binary states,
    /// `1 - P(class 0)` otherwise.
    pub fn mean(&self, i: usize) -> f64 {
        if self.k == 2 {
            let (a, b) = (self.a(i), self.b(i));
            a / (a + b)
        } else {
            1.0 - self.class_mean(i, 0)
        }
    }

    /// Adds `evidence` column-wise in place.
    pub fn update(&mut self, evidence: &EvidenceMap) -> Result<(), PosteriorError> {
        if evidence.len() != self.len() || evidence.num_classes() != self.k {
            return Err(PosteriorError::LengthMismatch(format!(
                "evidence is {}x{}, state is {}x{}",
                evidence.len(),
                evidence.num_classes(),
                self.len(),
                self.k
            )));
        }
        if let Some(p) = evidence
            .counts
            .iter()
            .position(|&v| !(v >= 0.0 && v.is_finite()))
        {
            return Err(PosteriorError::NegativeEvidence {
                index: p / self.k,
                value: evidence.counts[p],
            });
        }
        for (c, e) in self.counts.iter_mut().zip(&evidence.counts) {
            *c += e;
        }
        Ok(())
    }

    /// Functional form of [`PosteriorState::update`].
    pub fn updated(&self, evidence: &EvidenceMap) -> Result<Self, PosteriorError> {
        let mut next = self.clone();
        next.update(evidence)?;
        Ok(next)
    }

    /// Entropy of splat `i`'s Beta or Dirichlet posterior.
    pub fn entropy(&self, i: usize) -> f64 {
        row_entropy(self.row(i))
    }

    /// Posterior predictive entropy of splat `i`'s label.
    pub fn predictive_entropy(&self, i: usize) -> f64 {
        if self.k == 2 {
            bernoulli_entropy(self.mean(i))
        } else {
            let kappa = self.concentration(i);
            let probs: Vec<f64> = self.row(i).iter().map(|&c| c / kappa).collect();
            categorical_entropy(&probs)
        }
    }
}

/// Entropy of one row of counts (Beta for two columns).
pub(crate) fn row_entropy(row: &[f64]) -> f64 {
    if row.len() == 2 {
        beta_entropy_unchecked(row[1], row[0])
    } else {
        dirichlet_entropy_unchecked(row)
    }
}

/// `Σᵢ H(posteriorᵢ)`.
pub fn total_entropy(state: &PosteriorState) -> f64 {
    (0..state.len()).map(|i| state.entropy(i)).sum()
}

/// MAP class per splat: the largest count wins, the lowest class id on ties.
/// For binary states this is `1` iff `a > b`.
pub fn map_labels(state: &PosteriorState) -> Vec<u32> {
    (0..state.len())
        .map(|i| {
            let row = state.row(i);
            let mut best = 0;
            for (c, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = c;
                }
            }
            best as u32
        })
        .collect()
}

/// Center and spread of the splats currently labeled foreground.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectStats {
    pub center: Vec3<f64>,
    pub radius: f64,
}

/// `mᵢ`-weighted mean position and mean distance of the foreground splats
/// (MAP label other than 0). The radius is clamped below by [`R_MIN`].
pub fn object_stats<T: Real>(
    scene: &Scene<T>,
    state: &PosteriorState,
) -> Result<ObjectStats, PosteriorError> {
    if scene.len() != state.len() {
        return Err(PosteriorError::LengthMismatch(format!(
            "scene has {} gaussians, posterior {}",
            scene.len(),
            state.len()
        )));
    }
    let fg: Vec<(Vec3<f64>, f64)> = map_labels(state)
        .iter()
        .enumerate()
        .filter(|(_, &l)| l != 0)
        .map(|(i, _)| (scene.gaussian(i).mean.cast(), state.mean(i)))
        .collect();
    if fg.is_empty() {
        return Err(PosteriorError::NoForeground);
    }
    let wsum: f64 = fg.iter().map(|(_, w)| w).sum();
    let center = fg.iter().fold(Vec3::zero(), |acc, &(p, w)| acc + p * w) * (1.0 / wsum);
    let radius = fg
        .iter()
        .map(|&(p, w)| w * (p - center).norm())
        .sum::<f64>()
        / wsum;
    Ok(ObjectStats {
        center,
        radius: radius.max(R_MIN),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Gaussian;

    #[test]
    fn conjugate_update() {
        let mut s = PosteriorState::new(1, 1.0, 1.0).unwrap();
        s.update(&EvidenceMap::binary(vec![0.6], vec![0.0]).unwrap())
            .unwrap();
        assert_eq!((s.a(0), s.b(0)), (1.6, 1.0));
        let before = s.clone();
        s.update(&EvidenceMap::zeros(1, 2)).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn bad_evidence_rejected() {
        assert!(matches!(
            EvidenceMap::binary(vec![0.0, -1.0], vec![0.0, 0.0]),
            Err(PosteriorError::NegativeEvidence { index: 1, .. })
        ));
        let mut s = PosteriorState::new(2, 1.0, 1.0).unwrap();
        assert!(s.update(&EvidenceMap::zeros(3, 2)).is_err());
        assert!(PosteriorState::new(2, 0.0, 1.0).is_err());
    }

    #[test]
    fn map_tie_goes_to_background() {
        let s =
            PosteriorState::from_counts(2, vec![1.1, 3.2, 1.0, 1.0, 2.0, 1.0], 1.0, 1.0).unwrap();
        assert_eq!(map_labels(&s), vec![1, 0, 0]);
        let d = PosteriorState::from_counts(3, vec![1.0, 2.0, 2.0], 1.0, 1.0).unwrap();
        assert_eq!(map_labels(&d), vec![1]);
    }

    #[test]
    fn total_entropy_values() {
        assert_eq!(
            total_entropy(&PosteriorState::new(5, 1.0, 1.0).unwrap()),
            0.0
        );
        let s = PosteriorState::new(2, 2.0, 2.0).unwrap();
        assert!((total_entropy(&s) + 2.0 * 0.125_092_802_56).abs() < 1e-10);
    }

    fn scene_at(points: &[[f64; 3]]) -> Scene<f64> {
        Scene::new(
            "pts",
            points
                .iter()
                .map(|&p| Gaussian::isotropic(Vec3::from_array(p), 0.1, 0.5, [0.5; 3]))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn object_stats_cases() {
        let scene = scene_at(&[[1.0, 2.0, 3.0], [5.0, 5.0, 5.0]]);
        let s = PosteriorState::from_counts(2, vec![1.0, 4.0, 1.0, 1.0], 1.0, 1.0).unwrap();
        let st = object_stats(&scene, &s).unwrap();
        assert!((st.center - Vec3::new(1.0, 2.0, 3.0)).norm() < 1e-14);
        assert_eq!(st.radius, R_MIN);

        let scene = scene_at(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [9.0, 9.0, 9.0]]);
        let s =
            PosteriorState::from_counts(2, vec![1.0, 3.0, 1.0, 3.0, 3.0, 1.0], 1.0, 1.0).unwrap();
        let st = object_stats(&scene, &s).unwrap();
        assert!(st.center.norm() < 1e-15);
        assert!((st.radius - 1.0).abs() < 1e-15);

        let none = PosteriorState::new(3, 1.0, 1.0).unwrap();
        assert!(matches!(
            object_stats(&scene, &none),
            Err(PosteriorError::NoForeground)
        ));
    }

    #[test]
    fn predictive_entropy_binary_and_dirichlet_agree_for_two_classes() {
        let s = PosteriorState::from_counts(2, vec![1.0, 3.0], 1.0, 1.0).unwrap();
        assert!((s.predictive_entropy(0) - bernoulli_entropy(0.75)).abs() < 1e-15);
        let d = PosteriorState::from_counts(3, vec![1.0, 3.0, 0.5], 1.0, 1.0).unwrap();
        assert!((d.mean(0) - 3.5 / 4.5).abs() < 1e-15);
    }
}
