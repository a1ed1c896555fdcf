use super::layers::sigmoid;
use crate::error::{Error, Result};
use crate::labels::Ternary;

/// Mean binary cross-entropy over the entries whose label is not masked.
///
/// Returns the loss and `d loss / d logit`. Masked entries get exactly zero
/// gradient; when every entry is masked the loss is zero.
pub fn masked_bce(logits: &[f64], labels: &[Ternary]) -> Result<(f64, Vec<f64>)> {
    if logits.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} logits for {} labels",
            logits.len(),
            labels.len()
        )));
    }
    let active = labels.iter().filter(|l| !l.is_masked()).count();
    masked_bce_with_count(logits, labels, active)
}

/// Same as [`masked_bce`] but normalised by an externally supplied count of
/// active entries, so per-sample contributions of a batch sum to the batch
/// mean.
pub fn masked_bce_with_count(
    logits: &[f64],
    labels: &[Ternary],
    active: usize,
) -> Result<(f64, Vec<f64>)> {
    if let Some(bad) = logits.iter().find(|z| !z.is_finite()) {
        return Err(Error::Invalid(format!("non-finite logit {bad}")));
    }
    let mut grad = vec![0.0; logits.len()];
    if active == 0 {
        return Ok((0.0, grad));
    }
    let norm = 1.0 / active as f64;
    let mut loss = 0.0;
    for (i, (&z, label)) in logits.iter().zip(labels).enumerate() {
        let y = match label.value() {
            Some(true) => 1.0,
            Some(false) => 0.0,
            None => continue,
        };
        loss += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
        grad[i] = (sigmoid(z) - y) * norm;
    }
    Ok((loss * norm, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Ternary::{Masked, Negative, Positive};

    #[test]
    fn single_active_entry_at_zero_logit() {
        let (loss, grad) = masked_bce(&[0.0, 0.0], &[Positive, Masked]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(grad[1], 0.0);
        assert!((grad[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn all_masked_is_zero() {
        let (loss, grad) = masked_bce(&[3.0, -1.0], &[Masked, Masked]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn masked_logit_does_not_affect_loss() {
        let labels = [Positive, Masked, Negative];
        let (a, _) = masked_bce(&[0.3, 1.0, -0.2], &labels).unwrap();
        let (b, _) = masked_bce(&[0.3, -57.0, -0.2], &labels).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn non_finite_logit_is_rejected() {
        assert!(masked_bce(&[f64::NAN], &[Positive]).is_err());
    }

    #[test]
    fn large_logits_are_stable() {
        let (loss, _) = masked_bce(&[800.0, -800.0], &[Positive, Negative]).unwrap();
        assert!(loss.abs() < 1e-300);
        let (loss, _) = masked_bce(&[-800.0], &[Positive]).unwrap();
        assert!((loss - 800.0).abs() < 1e-9);
    }
}
