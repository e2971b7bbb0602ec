//! Multisine MISO transmit signals.
//!
//! Signals are kept as per-tone complex amplitudes; passband waveforms are
//! only synthesized on demand (and inside the periodic sampling oracles).

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::channel::ChannelRealization;
use crate::error::{invalid, Result, WptError};

/// Default carrier of tone 0.
pub const DEFAULT_F0_HZ: f64 = 2.4e9;
/// Default maximum occupied bandwidth.
pub const DEFAULT_BAND_LIMIT_HZ: f64 = 10e6;

/// Evenly spaced tone comb `f_n = f0 + n * delta_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToneGrid {
    f0: f64,
    delta_f: f64,
    n_tones: usize,
}

impl ToneGrid {
    /// Builds a grid checked against the default 10 MHz band limit.
    pub fn new(f0: f64, delta_f: f64, n_tones: usize) -> Result<Self> {
        Self::with_band_limit(f0, delta_f, n_tones, DEFAULT_BAND_LIMIT_HZ)
    }

    pub fn with_band_limit(f0: f64, delta_f: f64, n_tones: usize, band_limit: f64) -> Result<Self> {
        if n_tones == 0 {
            return Err(invalid("n_tones", "must be at least 1"));
        }
        if !(f0.is_finite() && f0 > 0.0) {
            return Err(invalid("f0", format!("must be positive and finite, got {f0}")));
        }
        if !(delta_f.is_finite() && delta_f > 0.0) {
            return Err(invalid("delta_f", format!("must be positive and finite, got {delta_f}")));
        }
        let occupied = (n_tones - 1) as f64 * delta_f;
        if occupied > band_limit * (1.0 + 1e-12) {
            return Err(invalid(
                "delta_f",
                format!("occupied bandwidth {occupied} Hz exceeds band limit {band_limit} Hz"),
            ));
        }
        Ok(Self { f0, delta_f, n_tones })
    }

    /// `n_tones` tones placed in `bandwidth`, spacing `bandwidth / n_tones`.
    pub fn spanning(f0: f64, bandwidth: f64, n_tones: usize) -> Result<Self> {
        if n_tones == 0 {
            return Err(invalid("n_tones", "must be at least 1"));
        }
        Self::with_band_limit(f0, bandwidth / n_tones as f64, n_tones, bandwidth)
    }

    /// Default grid: 2.4 GHz carrier, tones spread over 10 MHz.
    pub fn default_for(n_tones: usize) -> Result<Self> {
        Self::spanning(DEFAULT_F0_HZ, DEFAULT_BAND_LIMIT_HZ, n_tones)
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn delta_f(&self) -> f64 {
        self.delta_f
    }

    pub fn n_tones(&self) -> usize {
        self.n_tones
    }

    pub fn frequency(&self, n: usize) -> f64 {
        self.f0 + n as f64 * self.delta_f
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_tones).map(move |n| self.frequency(n))
    }

    /// `f0 / delta_f` when it is an integer, i.e. when the multisine is
    /// periodic in `1 / delta_f`.
    pub fn harmonic_offset(&self) -> Option<u64> {
        let ratio = self.f0 / self.delta_f;
        let k = ratio.round();
        if k >= 0.0 && (ratio - k).abs() <= 1e-7 {
            Some(k as u64)
        } else {
            None
        }
    }
}

/// Uniform sampling of one period `1 / delta_f` of a periodic multisine.
///
/// Phases are reduced modulo the period in integer arithmetic so that sample
/// values stay accurate even at GHz carriers.
#[derive(Debug, Clone, Copy)]
pub struct PeriodicSampler {
    offset: u64,
    n_tones: usize,
    samples: u64,
}

impl PeriodicSampler {
    /// Minimum number of samples per period: 8 times the highest harmonic index.
    pub fn min_samples(grid: &ToneGrid) -> Result<usize> {
        let offset = grid
            .harmonic_offset()
            .ok_or_else(|| invalid("f0", "must be an integer multiple of delta_f for periodic sampling"))?;
        Ok(8 * (offset as usize + grid.n_tones()))
    }

    pub fn new(grid: &ToneGrid, samples: usize) -> Result<Self> {
        let required = Self::min_samples(grid)?;
        if samples < required {
            return Err(WptError::InsufficientSampling {
                required,
                provided: samples,
            });
        }
        Ok(Self {
            offset: grid.harmonic_offset().unwrap_or(0),
            n_tones: grid.n_tones(),
            samples: samples as u64,
        })
    }

    pub fn samples(&self) -> usize {
        self.samples as usize
    }

    /// Value of `Re{ sum_n amps[n] e^{j 2 pi f_n t_i} }` at sample `i`.
    pub fn value(&self, amps: &[Complex64], i: usize) -> f64 {
        debug_assert_eq!(amps.len(), self.n_tones);
        let k_samples = self.samples as u128;
        amps.iter()
            .enumerate()
            .map(|(n, a)| {
                let harmonic = (self.offset + n as u64) as u128;
                let residue = (harmonic * i as u128) % k_samples;
                let phase = 2.0 * PI * residue as f64 / k_samples as f64;
                (a * Complex64::from_polar(1.0, phase)).re
            })
            .sum()
    }

    /// Uniform average of `g(value)` over one period.
    pub fn mean_of<F: Fn(f64) -> f64>(&self, amps: &[Complex64], g: F) -> f64 {
        let total: f64 = (0..self.samples as usize).map(|i| g(self.value(amps, i))).sum();
        total / self.samples as f64
    }
}

/// Complex amplitude/phase matrix, tones along rows and antennas along columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderWeights {
    w: Array2<Complex64>,
    grid: ToneGrid,
}

impl PrecoderWeights {
    pub fn new(w: Array2<Complex64>, grid: ToneGrid) -> Result<Self> {
        let (n, m) = w.dim();
        if n != grid.n_tones() {
            return Err(WptError::DimensionMismatch {
                expected: format!("{} tones", grid.n_tones()),
                actual: format!("{n} rows"),
            });
        }
        if m == 0 {
            return Err(invalid("w", "needs at least one antenna column"));
        }
        if w.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(invalid("w", "entries must be finite"));
        }
        Ok(Self { w, grid })
    }

    pub fn zeros(grid: ToneGrid, m_antennas: usize) -> Result<Self> {
        Self::new(Array2::zeros((grid.n_tones(), m_antennas)), grid)
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.w
    }

    pub fn grid(&self) -> &ToneGrid {
        &self.grid
    }

    pub fn n_tones(&self) -> usize {
        self.w.nrows()
    }

    pub fn m_antennas(&self) -> usize {
        self.w.ncols()
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.w[[n, m]]
    }

    /// Time-domain transmit vector `x(t)`, one real sample per antenna.
    pub fn synthesize_tx(&self, t: f64) -> Vec<f64> {
        let phasors: Vec<Complex64> = self
            .grid
            .frequencies()
            .map(|f| Complex64::from_polar(1.0, 2.0 * PI * f * t))
            .collect();
        self.w
            .columns()
            .into_iter()
            .map(|col| col.iter().zip(&phasors).map(|(w, e)| (w * e).re).sum())
            .collect()
    }

    /// Average transmit power `sum |w|^2 / 2`.
    pub fn tx_power(&self) -> f64 {
        self.w.iter().map(|z| z.norm_sqr()).sum::<f64>() / 2.0
    }

    /// Rescales to transmit power exactly `power`.
    pub fn normalize_power(&self, power: f64) -> Result<Self> {
        if !(power.is_finite() && power > 0.0) {
            return Err(invalid("power", format!("must be positive, got {power}")));
        }
        let current = self.tx_power();
        if current <= 0.0 || !current.is_finite() {
            return Err(WptError::Degenerate("all-zero precoder weights".into()));
        }
        let scale = (power / current).sqrt();
        Ok(Self {
            w: self.w.mapv(|z| z * scale),
            grid: self.grid,
        })
    }

    /// Per-tone received complex amplitudes `Lambda^{-1/2} h_n . w_n`.
    pub fn received_amplitudes(&self, channel: &ChannelRealization) -> Result<Vec<Complex64>> {
        let h = channel.gains();
        if h.dim() != self.w.dim() {
            return Err(WptError::DimensionMismatch {
                expected: format!("{:?}", self.w.dim()),
                actual: format!("{:?}", h.dim()),
            });
        }
        let scale = channel.path_loss().powf(-0.5);
        Ok(h.rows()
            .into_iter()
            .zip(self.w.rows())
            .map(|(hn, wn)| hn.iter().zip(wn.iter()).map(|(a, b)| a * b).sum::<Complex64>() * scale)
            .collect())
    }

    /// Received scalar signal `y(t)`.
    pub fn received_signal(&self, channel: &ChannelRealization, t: f64) -> Result<f64> {
        let amps = self.received_amplitudes(channel)?;
        Ok(amps
            .iter()
            .zip(self.grid.frequencies())
            .map(|(a, f)| (a * Complex64::from_polar(1.0, 2.0 * PI * f * t)).re)
            .sum())
    }
}
