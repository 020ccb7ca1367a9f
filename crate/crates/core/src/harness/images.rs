use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{invalid, Result};
use crate::image::{gradient_support_size, Image};

const SHEPP_LOGAN: &str = include_str!("../../data/shepp_logan.json");

#[derive(Deserialize)]
struct EllipseTable {
    ellipses: Vec<[f64; 6]>,
}

/// Shepp-Logan head phantom rasterized at `n × n` by pixel-center sampling,
/// clamped to `[0, 1]`.
pub fn phantom(n: usize) -> Result<Image> {
    if n < 16 {
        return invalid(format!("phantom needs N >= 16, got {n}"));
    }
    let table: EllipseTable = serde_json::from_str(SHEPP_LOGAN)?;
    let ellipses: Vec<_> = table
        .ellipses
        .iter()
        .map(|&[rho, a, b, x0, y0, deg]| {
            let (sin, cos) = deg.to_radians().sin_cos();
            (rho, a * a, b * b, x0, y0, sin, cos)
        })
        .collect();
    let step = 2.0 / n as f64;
    Ok(Image::from_fn(n, n, |j, k| {
        let x = -1.0 + (k as f64 + 0.5) * step;
        let y = 1.0 - (j as f64 + 0.5) * step;
        let mut v = 0.0;
        for &(rho, a2, b2, x0, y0, sin, cos) in &ellipses {
            let (dx, dy) = (x - x0, y - y0);
            let u = dx * cos + dy * sin;
            let w = -dx * sin + dy * cos;
            if u * u / a2 + w * w / b2 <= 1.0 {
                v += rho;
            }
        }
        v.clamp(0.0, 1.0)
    }))
}

/// Piecewise-constant test image: `s` axis-aligned rectangles with random
/// corners, sides in `1..=max(1, n/4)` and levels in `[−1, 1]`, painted in
/// order over a zero background. Returns the image and the number of
/// nonzero gradient entries.
pub fn synthetic_gradient_sparse(n: usize, s: usize, seed: u64) -> Result<(Image, usize)> {
    if n < 2 {
        return invalid(format!("need N >= 2, got {n}"));
    }
    if s > n {
        return invalid(format!("need s <= N, got s = {s}, N = {n}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_side = (n / 4).max(1);
    let mut img = Image::zeros(n, n);
    for _ in 0..s {
        let h = rng.random_range(1..=max_side);
        let w = rng.random_range(1..=max_side);
        let top = rng.random_range(0..=n - h);
        let left = rng.random_range(0..=n - w);
        let level: f64 = rng.random_range(-1.0..=1.0);
        for j in top..top + h {
            for k in left..left + w {
                img.set(j, k, level);
            }
        }
    }
    let support = gradient_support_size(&img)?;
    Ok((img, support))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::{best_s_term_gradient_error, tv_norm, TvMode};

    #[test]
    fn phantom_range_and_background() {
        let p = phantom(64).unwrap();
        assert!(p.pixels().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let first: Vec<f64> = (0..64).map(|j| p.get(j, 0)).collect();
        let last: Vec<f64> = (0..64).map(|j| p.get(j, 63)).collect();
        assert_eq!(first, last);
        assert!(p.norm_inf() > 0.9);
        assert!(phantom(8).is_err());
    }

    #[test]
    fn phantom_is_deterministic() {
        assert_eq!(phantom(32).unwrap(), phantom(32).unwrap());
    }

    #[test]
    fn phantom_gradient_is_compressible() {
        let n = 256;
        let p = phantom(n).unwrap();
        let tv = tv_norm(&p, TvMode::Anisotropic);
        let s = (0.05 * 2.0 * (n * n) as f64) as usize;
        let tail = best_s_term_gradient_error(&p, s).unwrap();
        assert!(tail < 0.01 * tv, "tail {tail} vs tv {tv}");
    }

    #[test]
    fn zero_rectangles_give_constant() {
        let (img, support) = synthetic_gradient_sparse(16, 0, 3).unwrap();
        assert_eq!(support, 0);
        assert_eq!(tv_norm(&img, TvMode::Anisotropic), 0.0);
    }

    #[test]
    fn synthetic_is_seeded() {
        let a = synthetic_gradient_sparse(32, 10, 7).unwrap();
        let b = synthetic_gradient_sparse(32, 10, 7).unwrap();
        let c = synthetic_gradient_sparse(32, 10, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
        assert!(synthetic_gradient_sparse(8, 9, 0).is_err());
    }
}
