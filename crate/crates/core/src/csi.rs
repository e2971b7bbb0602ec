//! Simulated CSI acquisition: pilot-based least-squares estimation, fixed-bit
//! feedback quantization and frame timing.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_gaussian, ChannelRealization};
use crate::design::DesignScheme;
use crate::error::{invalid, Result};
use crate::rectifier::{z_dc_link, RectifierParams};
use crate::rng::rng_from_seed;
use crate::signals::ToneGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsiConfig {
    /// Pilot magnitude on every tone and antenna.
    pub pilot_amplitude: f64,
    /// Complex receiver noise power per tone.
    pub noise_variance: f64,
    /// Bits for each of the real and imaginary parts; `None` disables quantization.
    pub quant_bits_per_component: Option<u32>,
    /// Frame length in seconds.
    pub frame_length: f64,
    /// Time spent acquiring CSI in each frame, seconds.
    pub acquisition_time: f64,
    /// Scale harvested power by the fraction of the frame spent transferring power.
    pub energy_accounting: bool,
}

impl Default for CsiConfig {
    fn default() -> Self {
        Self {
            pilot_amplitude: 1.0,
            noise_variance: 0.0,
            quant_bits_per_component: Some(8),
            frame_length: 1.0,
            acquisition_time: 0.080,
            energy_accounting: false,
        }
    }
}

impl CsiConfig {
    /// Noiseless, unquantized feedback.
    pub fn perfect() -> Self {
        Self {
            quant_bits_per_component: None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pilot_amplitude.is_finite() && self.pilot_amplitude > 0.0) {
            return Err(invalid("pilot_amplitude", "must be positive"));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(invalid("noise_variance", "must be non-negative"));
        }
        if let Some(b) = self.quant_bits_per_component {
            if !(1..=62).contains(&b) {
                return Err(invalid("quant_bits_per_component", format!("must be in 1..=62, got {b}")));
            }
        }
        if !(self.frame_length.is_finite() && self.acquisition_time > 0.0 && self.acquisition_time < self.frame_length) {
            return Err(invalid("acquisition_time", "must satisfy 0 < acquisition_time < frame_length"));
        }
        Ok(())
    }

    /// Fraction of each frame available for power transfer.
    pub fn duty_factor(&self) -> f64 {
        (self.frame_length - self.acquisition_time) / self.frame_length
    }
}

/// Least-squares estimate `(received + noise) / pilot`, entry by entry.
pub fn ls_estimate(
    pilot: &Array2<Complex64>,
    received: &Array2<Complex64>,
    noise_seed: u64,
    cfg: &CsiConfig,
) -> Result<Array2<Complex64>> {
    if pilot.dim() != received.dim() {
        return Err(invalid("received", "pilot and received shapes differ"));
    }
    if pilot.iter().any(|p| p.norm_sqr() == 0.0) {
        return Err(invalid("pilot", "pilot entries must be nonzero"));
    }
    let sigma = cfg.noise_variance.sqrt();
    let mut rng = rng_from_seed(noise_seed);
    let mut est = Array2::zeros(pilot.dim());
    for ((slot, y), p) in est.iter_mut().zip(received.iter()).zip(pilot.iter()) {
        let noise = if sigma > 0.0 { complex_gaussian(&mut rng) * sigma } else { Complex64::new(0.0, 0.0) };
        *slot = (y + noise) / p;
    }
    Ok(est)
}

/// Quantizer step for dynamic range `x_max` and `bits`.
pub fn quantizer_step(x_max: f64, bits: u32) -> f64 {
    2.0 * x_max / ((2.0f64).powi(bits as i32) - 1.0)
}

/// Midtread uniform quantizer applied separately to real and imaginary parts.
///
/// The dynamic range is the largest component magnitude of the matrix; outputs
/// are clipped to that range so the extremes stay representable.
pub fn quantize_csi(h: &Array2<Complex64>, bits_per_component: u32) -> Array2<Complex64> {
    let x_max = h.iter().flat_map(|z| [z.re.abs(), z.im.abs()]).fold(0.0, f64::max);
    if x_max == 0.0 {
        return h.clone();
    }
    let step = quantizer_step(x_max, bits_per_component);
    let q = |x: f64| (step * (x / step).round()).clamp(-x_max, x_max);
    h.mapv(|z| Complex64::new(q(z.re), q(z.im)))
}

/// What the transmitter learns about `true_channel` in one frame.
pub fn acquire_csi(true_channel: &ChannelRealization, cfg: &CsiConfig, seed: u64) -> Result<ChannelRealization> {
    cfg.validate()?;
    let pilot = Array2::from_elem(true_channel.gains().dim(), Complex64::new(cfg.pilot_amplitude, 0.0));
    let received = true_channel.gains() * &pilot;
    let mut est = ls_estimate(&pilot, &received, seed, cfg)?;
    if let Some(bits) = cfg.quant_bits_per_component {
        est = quantize_csi(&est, bits);
    }
    true_channel.with_gains(est)
}

/// DC output when the design uses acquired (noisy, quantized) CSI but power
/// flows through the true channel.
pub fn csi_loop_zdc(
    true_channel: &ChannelRealization,
    grid: &ToneGrid,
    scheme: &DesignScheme,
    cfg: &CsiConfig,
    params: &RectifierParams,
    seed: u64,
) -> Result<f64> {
    let estimate = acquire_csi(true_channel, cfg, seed)?;
    let weights = scheme.design(&estimate, grid)?;
    let z = z_dc_link(&weights, true_channel, params)?;
    Ok(if cfg.energy_accounting { z * cfg.duty_factor() } else { z })
}
