use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    compose_with_inverse_haar, composite_tv_op, fourier_plain_op, fourier_signed_op, gaussian_op, DenseOp,
    FourierOp, SharedOp,
};
use crate::error::{invalid, Result};

/// Exact, replayable record of a constructed operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorDescriptor {
    Dense {
        m: usize,
        shape: (usize, usize),
        re: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<f64>>,
    },
    Gaussian {
        m: usize,
        shape: (usize, usize),
        seed: u64,
    },
    Fourier {
        n: usize,
        m: usize,
        seed: Option<u64>,
        omega: Vec<usize>,
        /// `None` for plain subsampling.
        signs: Option<Vec<i8>>,
    },
    CompositeTv {
        n: usize,
        m1: usize,
        m2: usize,
        m: usize,
        a: Box<OperatorDescriptor>,
        a_prime: Box<OperatorDescriptor>,
        b: Box<OperatorDescriptor>,
    },
    HaarComposed {
        inner: Box<OperatorDescriptor>,
    },
}

impl OperatorDescriptor {
    /// Rebuilds the operator this descriptor was taken from.
    pub fn build(&self) -> Result<SharedOp> {
        Ok(match self {
            OperatorDescriptor::Dense { m, shape, re, im } => match im {
                None => Arc::new(DenseOp::real(*m, *shape, re.clone())?),
                Some(im) => {
                    if im.len() != re.len() {
                        return invalid("dense descriptor: re/im length mismatch");
                    }
                    let data = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
                    Arc::new(DenseOp::complex(*m, *shape, data)?)
                }
            },
            OperatorDescriptor::Gaussian { m, shape, seed } => Arc::new(gaussian_op(*m, shape.0, shape.1, *seed)?),
            OperatorDescriptor::Fourier { n, m, omega, signs, .. } => {
                if omega.len() != *m {
                    return invalid("fourier descriptor: m disagrees with omega");
                }
                Arc::new(FourierOp::new(*n, omega.clone(), signs.clone())?)
            }
            OperatorDescriptor::CompositeTv { a, a_prime, b, .. } => {
                let a = a.build()?;
                let a_prime = a_prime.build()?;
                Arc::new(composite_tv_op(a.as_ref(), a_prime.as_ref(), b.build()?)?)
            }
            OperatorDescriptor::HaarComposed { inner } => Arc::new(compose_with_inverse_haar(inner.build()?)?),
        })
    }
}

/// Measurement count given either absolutely or as a fraction of `N²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleCount {
    M(usize),
    Fraction(f64),
}

impl SampleCount {
    /// `m`, with fractions rounded down.
    pub fn resolve(self, d: usize) -> Result<usize> {
        match self {
            SampleCount::M(m) => Ok(m),
            SampleCount::Fraction(f) => {
                if !(f > 0.0 && f <= 1.0) {
                    return invalid(format!("sampling fraction must lie in (0, 1], got {f}"));
                }
                Ok(((f * d as f64).floor() as usize).max(1))
            }
        }
    }
}

/// Operator recipe as written in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSpec {
    Gaussian { samples: SampleCount, seed: u64 },
    FourierSigned { samples: SampleCount, seed: u64 },
    FourierPlain { samples: SampleCount, seed: u64 },
    /// Gaussian `A`, `A′` with `m1` rows each on `(N−1) × N`, plus `b` on `N × N`.
    CompositeTv { m1: usize, seed_a: u64, seed_a_prime: u64, b: Box<OperatorSpec> },
}

impl OperatorSpec {
    pub fn build(&self, n: usize) -> Result<SharedOp> {
        let d = n * n;
        Ok(match self {
            OperatorSpec::Gaussian { samples, seed } => Arc::new(gaussian_op(samples.resolve(d)?, n, n, *seed)?),
            OperatorSpec::FourierSigned { samples, seed } => Arc::new(fourier_signed_op(samples.resolve(d)?, n, *seed)?),
            OperatorSpec::FourierPlain { samples, seed } => Arc::new(fourier_plain_op(samples.resolve(d)?, n, *seed)?),
            OperatorSpec::CompositeTv { m1, seed_a, seed_a_prime, b } => {
                if n < 2 {
                    return invalid("composite operator needs N >= 2");
                }
                let a = gaussian_op(*m1, n - 1, n, *seed_a)?;
                let a_prime = gaussian_op(*m1, n - 1, n, *seed_a_prime)?;
                Arc::new(composite_tv_op(&a, &a_prime, b.build(n)?)?)
            }
        })
    }
}
