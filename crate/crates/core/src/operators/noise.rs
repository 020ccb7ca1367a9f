use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::vec_norm;
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    /// Additive i.i.d. noise with `E|ξ_i|² = σ²`.
    Gaussian { sigma: f64 },
    /// Rounding of every component to the grid `step·ℤ` (real and imaginary
    /// parts separately).
    Quantization { step: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    #[serde(flatten)]
    pub kind: NoiseKind,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self { kind: NoiseKind::None, seed: 0 }
    }

    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        Self { kind: NoiseKind::Gaussian { sigma }, seed }
    }

    pub fn quantization(step: f64) -> Self {
        Self { kind: NoiseKind::Quantization { step }, seed: 0 }
    }
}

/// Corrupts `y` and returns the noisy vector with `ε = ‖ξ‖₂` of the noise
/// actually added, so the truth always lies in the feasibility ball.
///
/// Gaussian noise is real when `y` is real and circularly symmetric
/// (variance `σ²/2` per part) otherwise.
pub fn add_noise(y: &[Complex64], model: &NoiseModel) -> Result<(Vec<Complex64>, f64)> {
    let noisy: Vec<Complex64> = match model.kind {
        NoiseKind::None => y.to_vec(),
        NoiseKind::Gaussian { sigma } => {
            if !sigma.is_finite() || sigma < 0.0 {
                return invalid(format!("noise sigma must be >= 0, got {sigma}"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
            let real = y.iter().all(|v| v.im == 0.0);
            y.iter()
                .map(|&v| {
                    let a: f64 = StandardNormal.sample(&mut rng);
                    if real {
                        v + Complex64::new(sigma * a, 0.0)
                    } else {
                        let b: f64 = StandardNormal.sample(&mut rng);
                        v + Complex64::new(a, b) * (sigma * std::f64::consts::FRAC_1_SQRT_2)
                    }
                })
                .collect()
        }
        NoiseKind::Quantization { step } => {
            if !step.is_finite() || step <= 0.0 {
                return invalid(format!("quantization step must be > 0, got {step}"));
            }
            y.iter()
                .map(|v| Complex64::new(step * (v.re / step).round(), step * (v.im / step).round()))
                .collect()
        }
    };
    let residual: Vec<Complex64> = noisy.iter().zip(y).map(|(a, b)| a - b).collect();
    let eps = vec_norm(&residual);
    Ok((noisy, eps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    #[test]
    fn zero_sigma_is_identity() {
        let y = real(&[1.0, -2.0, 3.5]);
        let (z, eps) = add_noise(&y, &NoiseModel::gaussian(0.0, 9)).unwrap();
        assert_eq!(z, y);
        assert_eq!(eps, 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        let y = real(&[1.0]);
        assert!(add_noise(&y, &NoiseModel::gaussian(-1.0, 0)).is_err());
        assert!(add_noise(&y, &NoiseModel::quantization(0.0)).is_err());
        assert!(add_noise(&y, &NoiseModel::quantization(-0.5)).is_err());
    }

    #[test]
    fn quantization_error_is_bounded_by_half_step() {
        let y = real(&[0.1, 0.7, 1.3, 2.9, 0.05]);
        let step = 8.0;
        let (z, eps) = add_noise(&y, &NoiseModel::quantization(step)).unwrap();
        for (a, b) in z.iter().zip(&y) {
            assert!((a - b).norm() <= step / 2.0);
        }
        assert!(eps <= step * (y.len() as f64).sqrt() / 2.0);
    }

    #[test]
    fn gaussian_eps_concentrates() {
        let y = vec![Complex64::default(); 100];
        for seed in 0..100 {
            let (_, eps) = add_noise(&y, &NoiseModel::gaussian(0.01, seed)).unwrap();
            assert!((0.05..=0.2).contains(&eps), "seed {seed}: eps {eps}");
        }
    }

    #[test]
    fn model_json_shape() {
        let m = NoiseModel::gaussian(0.5, 3);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"kind":"gaussian","sigma":0.5,"seed":3}"#);
        assert_eq!(serde_json::from_str::<NoiseModel>(&s).unwrap(), m);
    }
}
