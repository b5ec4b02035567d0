use super::scalar::Real;
use super::NnError;

/// Softmax with temperature: `exp(y_k / t) / sum_j exp(y_j / t)`. The
/// maximum logit is subtracted first so large logits cannot overflow.
pub fn softmax<T: Real>(logits: &[T], temperature: T) -> Result<Vec<T>, NnError> {
    if !(temperature > T::zero() && temperature.is_finite()) {
        return Err(NnError::InvalidTemperature(temperature.as_f64()));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(NnError::NonFiniteInput);
    }
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let mut out: Vec<T> = logits.iter().map(|&y| ((y - max) / temperature).exp()).collect();
    let total: T = out.iter().copied().sum();
    out.iter_mut().for_each(|p| *p = *p / total);
    Ok(out)
}

/// Log-softmax of one row, written into `out`.
pub(crate) fn log_softmax_into<T: Real>(logits: &[T], out: &mut [T]) {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let total: T = logits.iter().map(|&y| (y - max).exp()).sum();
    let log_total = total.ln();
    for (o, &y) in out.iter_mut().zip(logits) {
        *o = y - max - log_total;
    }
}

/// Mean negative log-probability of the targets, in nats per symbol.
pub fn cross_entropy_loss<T: Real>(probabilities: &[Vec<T>], targets: &[usize]) -> Result<T, NnError> {
    if probabilities.len() != targets.len() {
        return Err(NnError::LengthMismatch {
            left: probabilities.len(),
            right: targets.len(),
        });
    }
    if targets.is_empty() {
        return Ok(T::zero());
    }
    let mut total = T::zero();
    for (p, &k) in probabilities.iter().zip(targets) {
        let pk = *p.get(k).ok_or(NnError::IndexOutOfRange { index: k, len: p.len() })?;
        total += -pk.ln();
    }
    Ok(total / T::from_usize(targets.len()).expect("length fits"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits() {
        let p = softmax(&[0.0f64, 0.0, 0.0], 1.0).unwrap();
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn direct_formula() {
        let y = [1.0f64, 2.0, 3.0];
        let denom: f64 = y.iter().map(|v| v.exp()).sum();
        let p = softmax(&y, 1.0).unwrap();
        for (pk, yk) in p.iter().zip(y) {
            assert!((pk - yk.exp() / denom).abs() < 1e-15);
        }
        let t = 0.7;
        let denom: f64 = y.iter().map(|v| (v / t).exp()).sum();
        let p = softmax(&y, t).unwrap();
        for (pk, yk) in p.iter().zip(y) {
            assert!((pk - (yk / t).exp() / denom).abs() < 1e-15);
        }
    }

    #[test]
    fn low_temperature_collapses_to_argmax() {
        let p = softmax(&[0.1f64, 0.5, 0.3], 1e-3).unwrap();
        assert!(p[1] > 1.0 - 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(softmax(&[f64::NAN, 0.0], 1.0), Err(NnError::NonFiniteInput));
        assert!(softmax(&[0.0f64], 0.0).is_err());
    }

    #[test]
    fn cross_entropy_cases() {
        let perfect = vec![vec![0.0f64, 1.0], vec![1.0, 0.0]];
        assert_eq!(cross_entropy_loss(&perfect, &[1, 0]).unwrap(), 0.0);
        let uniform = vec![vec![0.2f64; 5]; 4];
        let l = cross_entropy_loss(&uniform, &[0, 1, 2, 3]).unwrap();
        assert!((l - 5f64.ln()).abs() < 1e-12);
        assert!((l - 1.609).abs() < 1e-3);
        assert_eq!(
            cross_entropy_loss(&uniform, &[0]),
            Err(NnError::LengthMismatch { left: 4, right: 1 })
        );
    }

    #[test]
    fn cross_entropy_scalar_oracle() {
        let probs = vec![vec![0.1f64, 0.7, 0.2], vec![0.5, 0.25, 0.25], vec![0.3, 0.3, 0.4]];
        let targets = [1, 0, 2];
        // -(ln 0.7 + ln 0.5 + ln 0.4) / 3
        let expected = -((0.7f64).ln() + (0.5f64).ln() + (0.4f64).ln()) / 3.0;
        let l = cross_entropy_loss(&probs, &targets).unwrap();
        assert!((l - expected).abs() < 1e-15);
    }
}
