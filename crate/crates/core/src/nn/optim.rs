use serde::{Deserialize, Serialize};

use super::lstm::Network;
use super::scalar::Real;
use super::NnError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub m: Network<T>,
    pub v: Network<T>,
    pub step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(params: &Network<T>) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step<T: Real>(
    params: &mut Network<T>,
    grads: &Network<T>,
    state: &mut AdamState<T>,
    config: &AdamConfig,
) -> Result<(), NnError> {
    if params.architecture() != grads.architecture() || params.architecture() != state.m.architecture() {
        return Err(NnError::ShapeMismatch {
            what: "parameter count",
            expected: params.parameter_count(),
            found: grads.parameter_count(),
        });
    }
    if !grads.all_finite() {
        return Err(NnError::NonFiniteInput);
    }
    state.step += 1;
    let t = state.step as i32;
    let b1 = T::from_f64_lossy(config.beta1);
    let b2 = T::from_f64_lossy(config.beta2);
    let one = T::one();
    let correction1 = T::from_f64_lossy(1.0 - config.beta1.powi(t));
    let correction2 = T::from_f64_lossy(1.0 - config.beta2.powi(t));
    let lr = T::from_f64_lossy(config.learning_rate);
    let eps = T::from_f64_lossy(config.epsilon);
    let tensors = params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(state.m.tensors_mut().into_iter().zip(state.v.tensors_mut()));
    for ((p, g), (m, v)) in tensors {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (one - b1) * g[i];
            v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
            let m_hat = m[i] / correction1;
            let v_hat = v[i] / correction2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`. Returns
/// the norm before clipping.
pub fn clip_gradients<T: Real>(grads: &mut Network<T>, max_norm: f64) -> f64 {
    let norm = grads.global_norm().as_f64();
    if norm > max_norm && norm > 0.0 {
        let scale = T::from_f64_lossy(max_norm / norm);
        for t in grads.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= scale);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Architecture;

    fn tiny() -> Network<f64> {
        Network::init(&Architecture::new(2, vec![2], 2), 5)
    }

    #[test]
    fn first_step_moves_by_learning_rate_against_gradient_sign() {
        let mut p = tiny();
        let before = p.clone();
        let mut g = p.zeros_like();
        for (i, t) in g.tensors_mut().into_iter().enumerate() {
            for (j, v) in t.iter_mut().enumerate() {
                *v = if (i + j) % 2 == 0 { 0.37 * (j as f64 + 1.0) } else { -2.5 };
            }
        }
        let mut s = AdamState::new(&p);
        let cfg = AdamConfig::default();
        adam_step(&mut p, &g, &mut s, &cfg).unwrap();
        for ((a, b), gr) in p.tensors().iter().zip(before.tensors()).zip(g.tensors()) {
            for i in 0..a.len() {
                let expected = b[i] - cfg.learning_rate * gr[i].signum();
                assert!((a[i] - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn quadratic_converges() {
        // Minimise sum (p - 3)^2 over every parameter.
        let mut p = tiny();
        let mut s = AdamState::new(&p);
        let cfg = AdamConfig { learning_rate: 0.05, ..AdamConfig::default() };
        for _ in 0..2000 {
            let mut g = p.clone();
            for t in g.tensors_mut() {
                t.iter_mut().for_each(|v| *v = 2.0 * (*v - 3.0));
            }
            adam_step(&mut p, &g, &mut s, &cfg).unwrap();
        }
        assert!(p.tensors().iter().flat_map(|t| t.iter()).all(|v| (v - 3.0).abs() < 1e-3));
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = tiny();
        let before = p.clone();
        let g = p.zeros_like();
        let mut s = AdamState::new(&p);
        adam_step(&mut p, &g, &mut s, &AdamConfig::default()).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn scalar_quadratic_loss_decreases_monotonically() {
        // f(x) = 0.5 * (x - 2)^2 on the first weight, starting at x = -1.
        let mut p = tiny().zeros_like();
        p.tensors_mut()[0][0] = -1.0;
        let mut s = AdamState::new(&p);
        let cfg = AdamConfig { learning_rate: 0.01, ..AdamConfig::default() };
        let f = |x: f64| 0.5 * (x - 2.0) * (x - 2.0);
        let mut last = f(-1.0);
        for _ in 0..100 {
            let mut g = p.zeros_like();
            g.tensors_mut()[0][0] = p.tensors()[0][0] - 2.0;
            adam_step(&mut p, &g, &mut s, &cfg).unwrap();
            let now = f(p.tensors()[0][0]);
            assert!(now < last);
            last = now;
        }
    }

    #[test]
    fn clipping() {
        let mut g = tiny().zeros_like();
        g.tensors_mut()[0][0] = 3.0;
        g.tensors_mut()[1][0] = 4.0;
        assert_eq!(clip_gradients(&mut g, 10.0), 5.0);
        assert_eq!(g.tensors()[0][0], 3.0);
        assert_eq!(clip_gradients(&mut g, 1.0), 5.0);
        assert!((g.global_norm() - 1.0).abs() < 1e-12);
        assert!((g.tensors()[0][0] - 0.6).abs() < 1e-12);
        let mut z = tiny().zeros_like();
        assert_eq!(clip_gradients(&mut z, 1.0), 0.0);
        assert!(z.all_finite());
    }

    #[test]
    fn rejects_nonfinite_gradient() {
        let mut p = tiny();
        let mut g = p.zeros_like();
        g.tensors_mut()[2][0] = f64::NAN;
        let mut s = AdamState::new(&p);
        assert_eq!(adam_step(&mut p, &g, &mut s, &AdamConfig::default()), Err(NnError::NonFiniteInput));
    }
}
