//! Differential entropies of Beta and Dirichlet distributions, in nats.
//!
//! Both are evaluated with the Stirling parts of `ln Γ` and `ψ` cancelled
//! analytically, leaving only O(ln κ) sized terms plus small remainders.

use super::PosteriorError;
use crate::real::Real;
use crate::special::{digamma_remainder as s, stirling_remainder as r};

fn check<T: Real>(v: T) -> Result<(), PosteriorError> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(PosteriorError::Domain(format!(
            "parameter must be positive and finite, got {v}"
        )))
    }
}

/// Entropy of `Beta(a, b)`.
pub fn beta_entropy<T: Real>(a: T, b: T) -> Result<T, PosteriorError> {
    check(a)?;
    check(b)?;
    Ok(beta_entropy_unchecked(a, b))
}

/// [`beta_entropy`] without the domain check.
pub(crate) fn beta_entropy_unchecked<T: Real>(a: T, b: T) -> T {
    let one = T::one();
    // Beta(1, b) has the closed form -ln b + 1 - 1/b; this also makes H(1,1) exactly 0.
    if a == one {
        return one - b.ln() - b.recip();
    }
    if b == one {
        return one - a.ln() - a.recip();
    }
    let half = T::lit(0.5);
    let k = a + b;
    let two = T::lit(2.0);
    half * (a.ln() + b.ln()) - T::lit(1.5) * k.ln() + half * (T::TAU()).ln() + half
        - half / a
        - half / b
        + k.recip()
        + r(a)
        + r(b)
        - r(k)
        + (a - one) * s(a)
        + (b - one) * s(b)
        - (k - two) * s(k)
}

/// Entropy of `Dirichlet(alpha)`, `alpha.len() >= 2`.
pub fn dirichlet_entropy<T: Real>(alpha: &[T]) -> Result<T, PosteriorError> {
    if alpha.len() < 2 {
        return Err(PosteriorError::Domain(format!(
            "Dirichlet needs at least 2 parameters, got {}",
            alpha.len()
        )));
    }
    for &a in alpha {
        check(a)?;
    }
    Ok(dirichlet_entropy_unchecked(alpha))
}

pub(crate) fn dirichlet_entropy_unchecked<T: Real>(alpha: &[T]) -> T {
    if alpha.len() == 2 {
        // Column 1 is the "a" of the binary layout; the entropy is symmetric anyway.
        return beta_entropy_unchecked(alpha[1], alpha[0]);
    }
    let half = T::lit(0.5);
    let one = T::one();
    let k = T::from_usize_lossy(alpha.len());
    let a0: T = alpha.iter().copied().sum();
    let mut acc =
        (half - k) * a0.ln() + (k - one) * half * T::TAU().ln() - half + k * half / a0 + k * half
            - r(a0)
            - (a0 - k) * s(a0);
    for &a in alpha {
        acc += half * a.ln() - half / a + r(a) + (a - one) * s(a);
    }
    acc
}

/// Bernoulli entropy `-q ln q - (1-q) ln(1-q)` with `0 ln 0 = 0`.
pub fn bernoulli_entropy(q: f64) -> f64 {
    let term = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    term(q) + term(1.0 - q)
}

/// Entropy of a categorical distribution given by `probs`.
pub fn categorical_entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Lower bound `1 - H(q) / (2 ln 2)` on the Bayes accuracy of a Bernoulli
/// predictive with mean `q`.
pub fn bayes_accuracy_bound(q: f64) -> Result<f64, PosteriorError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(PosteriorError::Domain(format!(
            "q must lie in [0, 1], got {q}"
        )));
    }
    Ok(1.0 - bernoulli_entropy(q) / (2.0 * std::f64::consts::LN_2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{digamma, ln_beta};

    fn textbook(a: f64, b: f64) -> f64 {
        ln_beta(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b)
            + (a + b - 2.0) * digamma(a + b)
    }

    #[test]
    fn reference_values() {
        assert_eq!(beta_entropy(1.0, 1.0).unwrap(), 0.0);
        assert!((beta_entropy(2.0_f64, 2.0).unwrap() + 0.125_092_802_56).abs() < 1e-10);
        assert!((beta_entropy(1.0_f64, 3.0).unwrap() + 0.431_945_622_0).abs() < 1e-9);
    }

    #[test]
    fn agrees_with_textbook_form_at_moderate_counts() {
        for &(a, b) in &[
            (0.5, 0.7),
            (2.5, 9.0),
            (30.0, 4.0),
            (100.0, 100.0),
            (1.5, 0.6),
        ] {
            assert!(
                (beta_entropy(a, b).unwrap() - textbook(a, b)).abs() < 1e-11,
                "{a},{b}"
            );
        }
    }

    #[test]
    fn large_counts_follow_gaussian_limit() {
        // Beta(κm, κ(1-m)) tends to a normal with variance m(1-m)/κ.
        let (m, k) = (0.3_f64, 1e8_f64);
        let var = m * (1.0 - m) / (k + 1.0);
        let gauss = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * var).ln();
        let h = beta_entropy(m * k, (1.0 - m) * k).unwrap();
        assert!((h - gauss).abs() < 1e-6, "{h} vs {gauss}");
    }

    #[test]
    fn domain_errors() {
        assert!(beta_entropy(0.0, 1.0).is_err());
        assert!(beta_entropy(1.0, -2.0).is_err());
        assert!(beta_entropy(f64::NAN, 1.0).is_err());
        assert!(dirichlet_entropy(&[1.0]).is_err());
        assert!(dirichlet_entropy(&[1.0, 0.0, 1.0]).is_err());
        assert!(bayes_accuracy_bound(1.1).is_err());
    }

    #[test]
    fn dirichlet_reduces_to_beta() {
        assert_eq!(dirichlet_entropy(&[1.0, 1.0]).unwrap(), 0.0);
        let d = dirichlet_entropy(&[2.0, 2.0]).unwrap();
        assert!((d - beta_entropy(2.0_f64, 2.0).unwrap()).abs() < 1e-12);
        // Uniform density 2 on the 2-simplex.
        let u = dirichlet_entropy(&[1.0, 1.0, 1.0]).unwrap();
        assert!((u + std::f64::consts::LN_2).abs() < 1e-12, "{u}");
    }

    #[test]
    fn dirichlet_general_form_matches_textbook() {
        let alpha = [0.7, 3.0, 12.0, 1.4];
        let a0: f64 = alpha.iter().sum();
        let ln_b: f64 = alpha
            .iter()
            .map(|&a| crate::special::ln_gamma(a))
            .sum::<f64>()
            - crate::special::ln_gamma(a0);
        let k = alpha.len() as f64;
        let expect = ln_b + (a0 - k) * digamma(a0)
            - alpha.iter().map(|&a| (a - 1.0) * digamma(a)).sum::<f64>();
        assert!((dirichlet_entropy(&alpha).unwrap() - expect).abs() < 1e-11);
    }

    #[test]
    fn accuracy_bound_values() {
        assert_eq!(bayes_accuracy_bound(0.5).unwrap(), 0.5);
        assert_eq!(bayes_accuracy_bound(1.0).unwrap(), 1.0);
        assert_eq!(bayes_accuracy_bound(0.0).unwrap(), 1.0);
        let b = bayes_accuracy_bound(0.9).unwrap();
        assert!((b - 0.7655).abs() < 1e-4 && b <= 0.9);
    }

    #[test]
    fn f32_entropy_is_close() {
        let h: f32 = beta_entropy(2.0_f32, 2.0).unwrap();
        assert!((h as f64 + 0.125_092_8).abs() < 1e-5);
    }
}
