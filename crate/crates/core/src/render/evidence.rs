//! Mask-conditioned split of compositing weights into per-splat counts.

use super::{Mask, RenderError, RenderOutput};
use crate::posterior::EvidenceMap;
use crate::real::Real;

/// Binary evidence for `target_class`: column 1 collects weights of pixels
/// labeled `target_class`, column 0 everything else.
///
/// Pixels are visited in row-major order and each pixel's weights in depth
/// order, the same traversal that produces `out.responsibilities()`.
pub fn aggregate_evidence<T: Real>(
    out: &RenderOutput<T>,
    mask: &Mask,
    target_class: u32,
) -> Result<EvidenceMap, RenderError> {
    mask.check_dims(out.width(), out.height())?;
    if target_class >= mask.num_classes() {
        return Err(RenderError::InvalidClass {
            class: target_class,
            num_classes: mask.num_classes(),
        });
    }
    let n = out.num_gaussians();
    let mut e1 = vec![0.0; n];
    let mut e0 = vec![0.0; n];
    for (p, &label) in mask.labels().iter().enumerate() {
        let bucket = if label == target_class {
            &mut e1
        } else {
            &mut e0
        };
        for c in out.contribs(p) {
            bucket[c.gaussian as usize] += c.weight.as_f64();
        }
    }
    Ok(EvidenceMap::binary(e1, e0).expect("compositing weights are non-negative"))
}

/// One evidence column per mask class.
pub fn aggregate_evidence_multiclass<T: Real>(
    out: &RenderOutput<T>,
    mask: &Mask,
) -> Result<EvidenceMap, RenderError> {
    mask.check_dims(out.width(), out.height())?;
    let k = mask.num_classes() as usize;
    let mut counts = vec![0.0; out.num_gaussians() * k];
    for (p, &label) in mask.labels().iter().enumerate() {
        for c in out.contribs(p) {
            counts[c.gaussian as usize * k + label as usize] += c.weight.as_f64();
        }
    }
    Ok(EvidenceMap::from_counts(k, counts).expect("compositing weights are non-negative"))
}
