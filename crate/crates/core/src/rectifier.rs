//! Truncated (fourth-order) nonlinear rectifier model.
//!
//! The DC output metric is `k2 R E{y^2} + k4 R^2 E{y^4}`, where the moments are
//! time averages of the received multisine `y(t)`. Both moments are computed in
//! closed form from the per-tone received amplitudes; [`z_dc_time_oracle`]
//! recomputes them by sampling one period of `y(t)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{invalid, Result};
use crate::signals::{PeriodicSampler, PrecoderWeights, ToneGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RectifierParams {
    pub k2: f64,
    pub k4: f64,
    /// Receive antenna impedance in ohms.
    pub r_ant: f64,
}

impl Default for RectifierParams {
    fn default() -> Self {
        Self { k2: 0.0034, k4: 0.3829, r_ant: 50.0 }
    }
}

impl RectifierParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k2", self.k2), ("k4", self.k4), ("r_ant", self.r_ant)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Weight applied to the second moment.
    pub fn second_order_gain(&self) -> f64 {
        self.k2 * self.r_ant
    }

    /// Weight applied to the fourth moment.
    pub fn fourth_order_gain(&self) -> f64 {
        self.k4 * self.r_ant * self.r_ant
    }
}

/// Per-tone received complex amplitudes on a tone grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedTones {
    a: Vec<Complex64>,
    grid: ToneGrid,
}

impl ReceivedTones {
    pub fn new(a: Vec<Complex64>, grid: ToneGrid) -> Result<Self> {
        if a.len() != grid.n_tones() {
            return Err(invalid("a", format!("expected {} tones, got {}", grid.n_tones(), a.len())));
        }
        if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(invalid("a", "amplitudes must be finite"));
        }
        Ok(Self { a, grid })
    }

    /// `a_n = Lambda^{-1/2} h_n . w_n`.
    pub fn from_link(weights: &PrecoderWeights, channel: &ChannelRealization) -> Result<Self> {
        Self::new(weights.received_amplitudes(channel)?, *weights.grid())
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.a
    }

    pub fn grid(&self) -> &ToneGrid {
        &self.grid
    }
}

/// `E{y^2} = (1/2) sum |a_n|^2`.
pub fn moment2(r: &ReceivedTones) -> f64 {
    0.5 * r.a.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// Raw quadruple sum `sum_{n0+n1=n2+n3} a_n0 a_n1 a*_n2 a*_n3`, before the 3/8 factor.
pub fn resonant_quadruple_sum(a: &[Complex64]) -> Complex64 {
    let n = a.len() as isize;
    let mut acc = Complex64::new(0.0, 0.0);
    for n0 in 0..n {
        for n1 in 0..n {
            let pair = a[n0 as usize] * a[n1 as usize];
            for n2 in 0..n {
                let n3 = n0 + n1 - n2;
                if (0..n).contains(&n3) {
                    acc += pair * (a[n2 as usize] * a[n3 as usize]).conj();
                }
            }
        }
    }
    acc
}

/// `E{y^4} = (3/8) sum_{n0+n1=n2+n3} a_n0 a_n1 a*_n2 a*_n3`.
pub fn moment4(r: &ReceivedTones) -> f64 {
    0.375 * resonant_quadruple_sum(&r.a).re
}

/// Second-order contribution `k2 R E{y^2}`.
pub fn z_dc_second_order(r: &ReceivedTones, params: &RectifierParams) -> f64 {
    params.second_order_gain() * moment2(r)
}

/// Fourth-order contribution `k4 R^2 E{y^4}`.
pub fn z_dc_fourth_order(r: &ReceivedTones, params: &RectifierParams) -> f64 {
    params.fourth_order_gain() * moment4(r)
}

/// DC output metric.
pub fn z_dc(r: &ReceivedTones, params: &RectifierParams) -> f64 {
    z_dc_second_order(r, params) + z_dc_fourth_order(r, params)
}

/// DC output for a designed link.
pub fn z_dc_link(weights: &PrecoderWeights, channel: &ChannelRealization, params: &RectifierParams) -> Result<f64> {
    Ok(z_dc(&ReceivedTones::from_link(weights, channel)?, params))
}

/// Evaluates the same model by uniformly sampling one period of `y(t)`.
///
/// Needs `f0` to be an integer multiple of `delta_f`, with `f0 >= N delta_f`
/// so no odd-order mixing product falls on DC, and at least
/// `8 (f0 + N delta_f) / delta_f` samples.
pub fn z_dc_time_oracle(r: &ReceivedTones, params: &RectifierParams, samples: usize) -> Result<f64> {
    let sampler = PeriodicSampler::new(&r.grid, samples)?;
    let offset = r.grid.harmonic_offset().unwrap_or(0) as usize;
    if offset < r.grid.n_tones() {
        return Err(invalid("f0", "must be at least n_tones * delta_f for the time oracle"));
    }
    let (mut s2, mut s4) = (0.0, 0.0);
    for i in 0..sampler.samples() {
        let y2 = sampler.value(&r.a, i).powi(2);
        s2 += y2;
        s4 += y2 * y2;
    }
    let k = sampler.samples() as f64;
    Ok(params.second_order_gain() * s2 / k + params.fourth_order_gain() * s4 / k)
}

/// Scaling law for CW over unit-variance Rayleigh fading:
/// `k2 R P / Lambda + 3 k4 R^2 P^2 / Lambda^2`.
pub fn scaling_law_cw(params: &RectifierParams, path_loss: f64, p: f64) -> f64 {
    let x = p / path_loss;
    params.second_order_gain() * x + 3.0 * params.fourth_order_gain() * x * x
}

/// Large-(N, M) scaling law for channel-adaptive signals:
/// `k2 R P M / Lambda + k4 R^2 P^2 N M^2 / Lambda^2`.
pub fn scaling_law_ca(params: &RectifierParams, path_loss: f64, p: f64, n_tones: usize, m_antennas: usize) -> f64 {
    let x = p / path_loss;
    let (n, m) = (n_tones as f64, m_antennas as f64);
    params.second_order_gain() * x * m + params.fourth_order_gain() * x * x * n * m * m
}

/// Path loss at 1 m for which the CW scaling law yields `target` at power `p`.
pub fn calibrate_path_loss_ref(params: &RectifierParams, p: f64, target: f64) -> Result<f64> {
    if !(target.is_finite() && target > 0.0) {
        return Err(invalid("target", "must be positive"));
    }
    if !(p.is_finite() && p > 0.0) {
        return Err(invalid("power", "must be positive"));
    }
    // 3 k4 R^2 x^2 + k2 R x - target = 0 in x = P / Lambda
    let a = 3.0 * params.fourth_order_gain();
    let b = params.second_order_gain();
    let x = 2.0 * target / (b + (b * b + 4.0 * a * target).sqrt());
    Ok(p / x)
}
