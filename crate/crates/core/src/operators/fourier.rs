use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use super::{MeasurementOp, OperatorDescriptor};
use crate::error::{invalid, Result};
use crate::image::Image;

/// Rows `Ω` of the unitary 2-D DFT applied after an optional ±1 pixel
/// diagonal, rescaled by `√(N²/m)`. Matrix-free.
#[derive(Clone)]
pub struct FourierOp {
    n: usize,
    omega: Vec<usize>,
    signs: Option<Vec<i8>>,
    seed: Option<u64>,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FourierOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierOp")
            .field("n", &self.n)
            .field("m", &self.omega.len())
            .field("signed", &self.signs.is_some())
            .field("seed", &self.seed)
            .finish()
    }
}

impl FourierOp {
    /// `omega` holds flat frequency indices `u·N + v`; `signs`, when given,
    /// holds one ±1 per pixel in row-major order.
    pub fn new(n: usize, omega: Vec<usize>, signs: Option<Vec<i8>>) -> Result<Self> {
        let d = n * n;
        if n == 0 || omega.is_empty() {
            return invalid("Fourier operator needs N >= 1 and at least one row");
        }
        if omega.len() > d {
            return invalid(format!("m = {} exceeds N² = {d}", omega.len()));
        }
        let mut seen = vec![false; d];
        for &w in &omega {
            if w >= d || std::mem::replace(&mut seen[w], true) {
                return invalid(format!("frequency index {w} out of range or repeated"));
            }
        }
        if let Some(s) = &signs {
            if s.len() != d || s.iter().any(|&v| v != 1 && v != -1) {
                return invalid("sign diagonal must hold N² entries of ±1");
            }
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            scale: (d as f64 / omega.len() as f64).sqrt(),
            omega,
            signs,
            seed: None,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn rows_selected(&self) -> &[usize] {
        &self.omega
    }

    pub fn signs(&self) -> Option<&[i8]> {
        self.signs.as_deref()
    }

    fn fft2(&self, buf: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(buf, &mut scratch);
        let mut col = vec![Complex64::default(); n];
        for k in 0..n {
            for j in 0..n {
                col[j] = buf[j * n + k];
            }
            fft.process_with_scratch(&mut col, &mut scratch);
            for j in 0..n {
                buf[j * n + k] = col[j];
            }
        }
        let norm = (n as f64).recip();
        for v in buf.iter_mut() {
            *v *= norm;
        }
    }
}

impl MeasurementOp for FourierOp {
    fn input_shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    fn output_len(&self) -> usize {
        self.omega.len()
    }

    fn apply(&self, x: &Image<Complex64>) -> Vec<Complex64> {
        assert_eq!(x.shape(), (self.n, self.n), "operator input shape mismatch");
        let mut buf = x.pixels().to_vec();
        if let Some(s) = &self.signs {
            for (v, &sg) in buf.iter_mut().zip(s) {
                if sg < 0 {
                    *v = -*v;
                }
            }
        }
        self.fft2(&mut buf, &self.forward);
        self.omega.iter().map(|&w| buf[w] * self.scale).collect()
    }

    fn adjoint(&self, y: &[Complex64]) -> Image<Complex64> {
        assert_eq!(y.len(), self.omega.len(), "measurement length mismatch");
        let mut buf = vec![Complex64::default(); self.n * self.n];
        for (&w, v) in self.omega.iter().zip(y) {
            buf[w] = v * self.scale;
        }
        self.fft2(&mut buf, &self.inverse);
        if let Some(s) = &self.signs {
            for (v, &sg) in buf.iter_mut().zip(s) {
                if sg < 0 {
                    *v = -*v;
                }
            }
        }
        Image::from_vec_unchecked(self.n, self.n, buf)
    }

    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor::Fourier {
            n: self.n,
            m: self.omega.len(),
            seed: self.seed,
            omega: self.omega.clone(),
            signs: self.signs.clone(),
        }
    }
}

fn random_rows(rng: &mut ChaCha8Rng, d: usize, m: usize) -> Vec<usize> {
    let mut omega = index::sample(rng, d, m).into_vec();
    omega.sort_unstable();
    omega
}

/// Uniformly random `m` rows of the unitary DFT with random column signs.
pub fn fourier_signed_op(m: usize, n: usize, seed: u64) -> Result<FourierOp> {
    let d = n * n;
    if m == 0 || m > d {
        return invalid(format!("need 1 <= m <= N² = {d}, got m = {m}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signs: Vec<i8> = (0..d).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    let omega = random_rows(&mut rng, d, m);
    let mut op = FourierOp::new(n, omega, Some(signs))?;
    op.seed = Some(seed);
    Ok(op)
}

/// Uniformly random `m` rows of the unitary DFT without sign randomization.
pub fn fourier_plain_op(m: usize, n: usize, seed: u64) -> Result<FourierOp> {
    let d = n * n;
    if m == 0 || m > d {
        return invalid(format!("need 1 <= m <= N² = {d}, got m = {m}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = random_rows(&mut rng, d, m);
    let mut op = FourierOp::new(n, omega, None)?;
    op.seed = Some(seed);
    Ok(op)
}
