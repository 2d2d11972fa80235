//! Gamma, Laplace and Gaussian samplers driven by an explicit [`RngStream`].

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Integer shapes up to this bound are drawn as a sum of exponentials.
const EXPONENTIAL_SUM_MAX_SHAPE: f64 = 64.0;

/// Shape `k` and scale `theta` of a Gamma distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    shape: f64,
    scale: f64,
}

impl GammaParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma shape must be > 0, got {shape}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma scale must be > 0, got {scale}")));
        }
        Ok(Self { shape, scale })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `E[r^m] = theta^m Gamma(k+m) / Gamma(k)` for a non-negative integer `m`.
    pub fn raw_moment(&self, m: u32) -> f64 {
        (0..m).map(|i| self.scale * (self.shape + i as f64)).product()
    }
}

pub fn gamma_sample(params: GammaParams, rng: &mut RngStream) -> f64 {
    let k = params.shape;
    if k.fract() == 0.0 && k <= EXPONENTIAL_SUM_MAX_SHAPE {
        // Sum of k standard exponentials: -ln(U_1 ... U_k).
        let mut acc = 0.0;
        let mut prod = 1.0;
        for _ in 0..k as usize {
            prod *= rng.open_unit();
            if prod < 1e-280 {
                acc -= prod.ln();
                prod = 1.0;
            }
        }
        acc -= prod.ln();
        return acc * params.scale;
    }
    marsaglia_tsang(k, rng) * params.scale
}

/// Marsaglia and Tsang's squeeze-rejection sampler for unit-scale Gamma(k).
fn marsaglia_tsang(k: f64, rng: &mut RngStream) -> f64 {
    if k < 1.0 {
        // Gamma(k) = Gamma(k+1) * U^(1/k)
        let u = rng.open_unit();
        return marsaglia_tsang(k + 1.0, rng) * u.powf(1.0 / k);
    }
    let d = k - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let (x, v) = loop {
            let x: f64 = StandardNormal.sample(rng);
            let v = 1.0 + c * x;
            if v > 0.0 {
                break (x, v * v * v);
            }
        };
        let u = rng.open_unit();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Laplace draw with density `exp(-|t|/b) / 2b`.
pub fn laplace_sample(scale: f64, rng: &mut RngStream) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("laplace scale must be > 0, got {scale}")));
    }
    Ok(laplace_unchecked(scale, rng))
}

pub(crate) fn laplace_unchecked(scale: f64, rng: &mut RngStream) -> f64 {
    let e = -rng.open_unit().ln() * scale;
    if rng.coin() {
        e
    } else {
        -e
    }
}

pub fn gaussian_sample(sigma: f64, rng: &mut RngStream) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gaussian sigma must be > 0, got {sigma}")));
    }
    Ok(gaussian_unchecked(sigma, rng))
}

pub(crate) fn gaussian_unchecked(sigma: f64, rng: &mut RngStream) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    sigma * z
}
