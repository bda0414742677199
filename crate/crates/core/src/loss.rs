//! ProPML and the BCE-on-candidates baseline, with analytic gradients with
//! respect to the logits.
//!
//! For one instance with candidate set `S` and clamped probabilities `p`:
//!
//! ```text
//! L = -log( Σ_{i∈S} p_i ) - λ · Σ_{j∉S} log(1 - p_j)
//! ∂L/∂z_c = -p_c (1 - p_c) / Σ_{i∈S} p_i    for c ∈ S
//! ∂L/∂z_c =  λ · p_c                         for c ∉ S
//! ```
//!
//! The first term only asks that *some* candidate be predicted; the second is
//! the negative half of BCE on labels known to be false. With `|S| = 1` and
//! `λ = 1` the loss is exactly BCE.
//!
//! Batch values are the arithmetic mean over rows, summed left to right, and
//! gradients carry the matching `1/n` factor.

use crate::data::LabelSet;
use crate::error::{Error, Result};
use crate::tensor::{sigmoid_scalar, Matrix};

/// Probability clamp applied after the sigmoid and before any logarithm.
pub const DEFAULT_EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LossKind {
    ProPml,
    BceCandidates,
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::ProPml => "propml",
            LossKind::BceCandidates => "bce",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "propml" => Some(LossKind::ProPml),
            "bce" => Some(LossKind::BceCandidates),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub kind: LossKind,
    /// Weight of the off-candidate penalty. Ignored by BCE.
    pub lambda: f64,
    pub epsilon: f64,
}

impl LossConfig {
    pub fn propml(lambda: f64) -> Self {
        LossConfig {
            kind: LossKind::ProPml,
            lambda,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn bce() -> Self {
        LossConfig {
            kind: LossKind::BceCandidates,
            lambda: 1.0,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::invalid(format!(
                "epsilon must lie in (0, 0.5), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self, logits: &Matrix, candidates: &[LabelSet]) -> Result<LossResult> {
        self.validate()?;
        match self.kind {
            LossKind::ProPml => propml_loss(logits, candidates, self.lambda, self.epsilon),
            LossKind::BceCandidates => bce_candidates_loss(logits, candidates, self.epsilon),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    /// Mean loss over the batch.
    pub value: f64,
    pub grad_logits: Matrix,
}

/// The two ProPML components for a single row of (already clamped) probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProPmlTerms {
    /// `-log Σ_{i∈S} p_i`
    pub candidate: f64,
    /// `-Σ_{j∉S} log(1 - p_j)`, before multiplying by λ.
    pub penalty: f64,
}

impl ProPmlTerms {
    pub fn total(&self, lambda: f64) -> f64 {
        self.candidate + lambda * self.penalty
    }
}

pub fn propml_terms(probs: &[f64], candidates: &LabelSet) -> ProPmlTerms {
    let mask = candidates.mask(probs.len());
    let mut mass = 0.0;
    let mut penalty = 0.0;
    for (&p, &in_s) in probs.iter().zip(&mask) {
        if in_s {
            mass += p;
        } else {
            penalty -= (1.0 - p).ln();
        }
    }
    ProPmlTerms {
        candidate: -mass.ln(),
        penalty,
    }
}

#[inline]
fn clamped_prob(z: f64, epsilon: f64) -> f64 {
    sigmoid_scalar(z).clamp(epsilon, 1.0 - epsilon)
}

fn check_batch(logits: &Matrix, candidates: &[LabelSet]) -> Result<()> {
    if logits.rows() != candidates.len() {
        return Err(Error::shape(format!(
            "{} logit rows but {} candidate sets",
            logits.rows(),
            candidates.len()
        )));
    }
    if logits.rows() == 0 {
        return Err(Error::invalid("empty batch"));
    }
    for (i, s) in candidates.iter().enumerate() {
        if s.is_empty() {
            return Err(Error::invalid(format!("candidate set {i} is empty")));
        }
        if s.max().is_some_and(|m| m >= logits.cols()) {
            return Err(Error::invalid(format!(
                "candidate set {i} has a label outside 0..{}",
                logits.cols()
            )));
        }
    }
    Ok(())
}

pub fn propml_loss(
    logits: &Matrix,
    candidates: &[LabelSet],
    lambda: f64,
    epsilon: f64,
) -> Result<LossResult> {
    check_batch(logits, candidates)?;
    let (n, c) = logits.shape();
    let scale = 1.0 / n as f64;
    let mut grad = Matrix::zeros(n, c);
    let mut total = 0.0;
    let mut probs = vec![0.0; c];
    for (r, s) in candidates.iter().enumerate() {
        for (p, &z) in probs.iter_mut().zip(logits.row(r)) {
            *p = clamped_prob(z, epsilon);
        }
        let mask = s.mask(c);
        let mass: f64 = s.iter().map(|i| probs[i]).sum();
        let mut penalty = 0.0;
        let g = grad.row_mut(r);
        for k in 0..c {
            let p = probs[k];
            if mask[k] {
                g[k] = -p * (1.0 - p) / mass * scale;
            } else {
                penalty -= (1.0 - p).ln();
                g[k] = lambda * p * scale;
            }
        }
        total += -mass.ln() + lambda * penalty;
    }
    Ok(LossResult {
        value: total * scale,
        grad_logits: grad,
    })
}

pub fn bce_candidates_loss(
    logits: &Matrix,
    candidates: &[LabelSet],
    epsilon: f64,
) -> Result<LossResult> {
    check_batch(logits, candidates)?;
    let (n, c) = logits.shape();
    let scale = 1.0 / n as f64;
    let mut grad = Matrix::zeros(n, c);
    let mut total = 0.0;
    for (r, s) in candidates.iter().enumerate() {
        let mask = s.mask(c);
        let mut positive = 0.0;
        let mut negative = 0.0;
        let g = grad.row_mut(r);
        for (k, &z) in logits.row(r).iter().enumerate() {
            let p = clamped_prob(z, epsilon);
            if mask[k] {
                positive -= p.ln();
                g[k] = (p - 1.0) * scale;
            } else {
                negative -= (1.0 - p).ln();
                g[k] = p * scale;
            }
        }
        // Same grouping as ProPML so single-label rows agree bit for bit.
        total += positive + negative;
    }
    Ok(LossResult {
        value: total * scale,
        grad_logits: grad,
    })
}

/// Central finite differences against the analytic gradient.
///
/// Returns the maximum over entries of `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
pub fn check_gradients(
    config: &LossConfig,
    logits: &Matrix,
    candidates: &[LabelSet],
) -> Result<f64> {
    const STEP: f64 = 1e-5;
    let analytic = config.evaluate(logits, candidates)?.grad_logits;
    let mut probe = logits.clone();
    let mut worst = 0.0f64;
    for idx in 0..logits.as_slice().len() {
        let orig = probe.as_slice()[idx];
        probe.as_mut_slice()[idx] = orig + STEP;
        let up = config.evaluate(&probe, candidates)?.value;
        probe.as_mut_slice()[idx] = orig - STEP;
        let down = config.evaluate(&probe, candidates)?.value;
        probe.as_mut_slice()[idx] = orig;
        let numeric = (up - down) / (2.0 * STEP);
        worst = worst.max(relative_error(analytic.as_slice()[idx], numeric));
    }
    Ok(worst)
}

pub(crate) fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::StreamRng;
    use proptest::prelude::*;
    use rand::Rng;

    fn logit(p: f64) -> f64 {
        (p / (1.0 - p)).ln()
    }

    fn row(ps: &[f64]) -> Matrix {
        Matrix::from_rows(&[ps.iter().map(|&p| logit(p)).collect::<Vec<_>>()]).unwrap()
    }

    fn set(ls: &[usize]) -> LabelSet {
        LabelSet::new(ls.to_vec())
    }

    #[test]
    fn single_label_even_probs() {
        let r = propml_loss(&row(&[0.5, 0.5]), &[set(&[0])], 1.0, DEFAULT_EPSILON).unwrap();
        assert!((r.value - 4.0f64.ln()).abs() < 1e-12);
        assert!((r.value - 1.386294).abs() < 5e-7);
    }

    #[test]
    fn candidate_mass_one_without_penalty_is_zero() {
        let r = propml_loss(
            &row(&[0.6, 0.4, 0.9]),
            &[set(&[0, 1])],
            0.0,
            DEFAULT_EPSILON,
        )
        .unwrap();
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn hand_evaluated_value() {
        let r = propml_loss(
            &row(&[0.2, 0.3, 0.5]),
            &[set(&[0, 1])],
            0.5,
            DEFAULT_EPSILON,
        )
        .unwrap();
        let expected = -(0.5f64.ln()) - 0.5 * 0.5f64.ln();
        assert!((r.value - expected).abs() < 1e-12);
        assert!((r.value - 1.039721).abs() < 5e-7);
    }

    #[test]
    fn bce_fixed_values() {
        let half = bce_candidates_loss(&row(&[0.5]), &[set(&[0])], DEFAULT_EPSILON).unwrap();
        assert!((half.value - 2.0f64.ln()).abs() < 1e-12);
        // Saturated logits hit the clamp: loss is tiny but not exactly zero.
        let z = Matrix::from_rows(&[[40.0, -40.0]]).unwrap();
        let near = bce_candidates_loss(&z, &[set(&[0])], DEFAULT_EPSILON).unwrap();
        assert!(near.value < 1e-6);
    }

    #[test]
    fn rejects_bad_candidate_sets() {
        let z = Matrix::zeros(1, 3);
        assert!(propml_loss(&z, &[LabelSet::default()], 1.0, DEFAULT_EPSILON).is_err());
        assert!(propml_loss(&z, &[set(&[3])], 1.0, DEFAULT_EPSILON).is_err());
        assert!(propml_loss(&z, &[set(&[0]), set(&[1])], 1.0, DEFAULT_EPSILON).is_err());
        assert!(LossConfig {
            epsilon: 0.5,
            ..LossConfig::propml(1.0)
        }
        .validate()
        .is_err());
        assert!(LossConfig::propml(-0.1).validate().is_err());
    }

    fn random_batch(rng: &mut StreamRng, n: usize, c: usize) -> (Matrix, Vec<LabelSet>) {
        let z: Vec<f64> = (0..n * c).map(|_| rng.random_range(-4.0..4.0)).collect();
        let sets = (0..n)
            .map(|_| {
                let mut s: Vec<usize> = (0..c).filter(|_| rng.random_bool(0.4)).collect();
                if s.is_empty() {
                    s.push(rng.random_range(0..c));
                }
                LabelSet::new(s)
            })
            .collect();
        (Matrix::from_vec(n, c, z).unwrap(), sets)
    }

    #[test]
    fn gradient_check_random_batch() {
        let mut rng = StreamRng::new(5);
        let (z, s) = random_batch(&mut rng, 4, 6);
        let err = check_gradients(&LossConfig::propml(0.3), &z, &s).unwrap();
        assert!(err < 1e-5, "relative error {err}");
        let err = check_gradients(&LossConfig::bce(), &z, &s).unwrap();
        assert!(err < 1e-5, "relative error {err}");
    }

    #[test]
    fn gradient_check_many_instances() {
        let mut rng = StreamRng::new(6);
        for _ in 0..100 {
            let (z, s) = random_batch(&mut rng, 1, 5);
            let lambda = rng.random_range(0.0..1.0);
            let err = check_gradients(&LossConfig::propml(lambda), &z, &s).unwrap();
            assert!(err < 1e-5, "relative error {err}");
        }
    }

    #[test]
    fn zero_lambda_zeroes_off_candidate_gradient() {
        let mut rng = StreamRng::new(8);
        let (z, s) = random_batch(&mut rng, 6, 5);
        let g = propml_loss(&z, &s, 0.0, DEFAULT_EPSILON)
            .unwrap()
            .grad_logits;
        for (r, set) in s.iter().enumerate() {
            for c in (0..5).filter(|&c| !set.contains(c)) {
                assert_eq!(g.get(r, c), 0.0);
            }
        }
    }

    #[test]
    fn full_candidate_rows_have_no_penalty() {
        let mut rng = StreamRng::new(9);
        let (z, _) = random_batch(&mut rng, 3, 4);
        let full = vec![LabelSet::full(4); 3];
        let a = propml_loss(&z, &full, 0.0, DEFAULT_EPSILON).unwrap();
        let b = propml_loss(&z, &full, 0.9, DEFAULT_EPSILON).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn single_label_propml_equals_bce(
            z in prop::collection::vec(-20.0f64..20.0, 1..8),
            pick in 0usize..8,
        ) {
            let c = z.len();
            let s = vec![set(&[pick % c])];
            let logits = Matrix::from_vec(1, c, z).unwrap();
            let a = propml_loss(&logits, &s, 1.0, DEFAULT_EPSILON).unwrap();
            let b = bce_candidates_loss(&logits, &s, DEFAULT_EPSILON).unwrap();
            prop_assert!((a.value - b.value).abs() < 1e-12);
            prop_assert!(a.grad_logits.max_abs_diff(&b.grad_logits) < 1e-12);
        }

        #[test]
        fn raising_a_candidate_probability_lowers_the_loss(
            p in prop::collection::vec(0.01f64..0.9, 2..6),
            bump in 0.001f64..0.09,
            lambda in 0.0f64..1.0,
        ) {
            let s = set(&[0]);
            let before = propml_terms(&p, &s).total(lambda);
            let mut q = p.clone();
            q[0] += bump;
            prop_assert!(propml_terms(&q, &s).total(lambda) < before);
        }

        #[test]
        fn raising_an_off_candidate_probability_raises_the_loss(
            p in prop::collection::vec(0.01f64..0.9, 2..6),
            bump in 0.001f64..0.09,
            lambda in 0.01f64..1.0,
        ) {
            let s = set(&[0]);
            let before = propml_terms(&p, &s).total(lambda);
            let mut q = p.clone();
            let j = q.len() - 1;
            q[j] += bump;
            prop_assert!(propml_terms(&q, &s).total(lambda) > before);
        }

        #[test]
        fn loss_is_affine_in_lambda(
            z in prop::collection::vec(-5.0f64..5.0, 6),
            l1 in 0.0f64..1.0, l2 in 0.0f64..1.0, l3 in 0.0f64..1.0,
        ) {
            let logits = Matrix::from_vec(2, 3, z).unwrap();
            let s = vec![set(&[0]), set(&[1, 2])];
            let f = |l| propml_loss(&logits, &s, l, DEFAULT_EPSILON).unwrap().value;
            let penalty = f(1.0) - f(0.0);
            prop_assert!(penalty >= 0.0);
            prop_assert!((f(l2) - f(l1) - (l2 - l1) * penalty).abs() < 1e-10);
            prop_assert!((f(l3) - f(l1) - (l3 - l1) * penalty).abs() < 1e-10);
        }

        #[test]
        fn candidate_term_lower_bound(z in prop::collection::vec(-30.0f64..30.0, 1..6)) {
            let c = z.len();
            let s = LabelSet::full(c);
            let logits = Matrix::from_vec(1, c, z).unwrap();
            let v = propml_loss(&logits, &[s], 1.0, DEFAULT_EPSILON).unwrap().value;
            prop_assert!(v >= -((c as f64) * (1.0 - DEFAULT_EPSILON)).ln() - 1e-15);
        }
    }
}
