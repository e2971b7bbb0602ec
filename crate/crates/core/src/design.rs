//! Closed-form transmit designs: CW, MRT, UP and SMF.
//!
//! Every design returns weights scaled to the power budget exactly.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::channel::ChannelRealization;
use crate::error::{invalid, Result, WptError};
use crate::signals::{PrecoderWeights, ToneGrid};

/// SMF exponent used in the measurement campaign.
pub const DEFAULT_BETA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Cw,
    Mrt,
    Up,
    Smf,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [SchemeKind::Cw, SchemeKind::Mrt, SchemeKind::Up, SchemeKind::Smf];

    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Cw => "cw",
            SchemeKind::Mrt => "mrt",
            SchemeKind::Up => "up",
            SchemeKind::Smf => "smf",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = WptError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cw" => Ok(SchemeKind::Cw),
            "mrt" => Ok(SchemeKind::Mrt),
            "up" => Ok(SchemeKind::Up),
            "smf" => Ok(SchemeKind::Smf),
            other => Err(invalid("scheme", format!("unknown scheme `{other}` (expected cw, mrt, up or smf)"))),
        }
    }
}

/// A design scheme together with its power budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignScheme {
    pub kind: SchemeKind,
    /// SMF exponent, ignored by the other schemes.
    pub beta: f64,
    /// Transmit power budget in watts.
    pub power_budget: f64,
}

impl DesignScheme {
    pub fn new(kind: SchemeKind, beta: f64, power_budget: f64) -> Result<Self> {
        let s = Self { kind, beta, power_budget };
        s.validate()?;
        Ok(s)
    }

    pub fn cw(power_budget: f64) -> Self {
        Self { kind: SchemeKind::Cw, beta: DEFAULT_BETA, power_budget }
    }

    pub fn mrt(power_budget: f64) -> Self {
        Self { kind: SchemeKind::Mrt, beta: DEFAULT_BETA, power_budget }
    }

    pub fn up(power_budget: f64) -> Self {
        Self { kind: SchemeKind::Up, beta: DEFAULT_BETA, power_budget }
    }

    pub fn smf(beta: f64, power_budget: f64) -> Self {
        Self { kind: SchemeKind::Smf, beta, power_budget }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power_budget.is_finite() && self.power_budget > 0.0) {
            return Err(invalid("power_budget", format!("must be positive, got {}", self.power_budget)));
        }
        if self.kind == SchemeKind::Smf && !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(invalid("beta", format!("must be positive for smf, got {}", self.beta)));
        }
        Ok(())
    }

    /// Weights for `channel` on `grid`. The channel must have `grid.n_tones()` rows.
    pub fn design(&self, channel: &ChannelRealization, grid: &ToneGrid) -> Result<PrecoderWeights> {
        self.validate()?;
        if channel.n_tones() != grid.n_tones() {
            return Err(WptError::DimensionMismatch {
                expected: format!("{} tones", grid.n_tones()),
                actual: format!("{} channel rows", channel.n_tones()),
            });
        }
        match self.kind {
            SchemeKind::Cw => design_cw(self.power_budget, grid, channel.m_antennas()),
            SchemeKind::Mrt => design_mrt(channel, grid, self.power_budget),
            SchemeKind::Up => design_up(channel, grid, self.power_budget),
            SchemeKind::Smf => design_smf(channel, grid, self.power_budget, self.beta),
        }
    }
}

/// All power on tone 0, antenna 0, amplitude `sqrt(2P)`.
pub fn design_cw(p: f64, grid: &ToneGrid, m_antennas: usize) -> Result<PrecoderWeights> {
    if !(p.is_finite() && p > 0.0) {
        return Err(invalid("power_budget", "must be positive"));
    }
    let mut w = Array2::zeros((grid.n_tones(), m_antennas.max(1)));
    w[[0, 0]] = Complex64::new((2.0 * p).sqrt(), 0.0);
    PrecoderWeights::new(w, *grid)
}

/// Single-tone maximal ratio transmission `sqrt(2P) conj(h) / |h|`.
pub fn design_mrt(channel: &ChannelRealization, grid: &ToneGrid, p: f64) -> Result<PrecoderWeights> {
    if channel.n_tones() != 1 {
        return Err(invalid("n_tones", format!("mrt needs a single tone, got {}", channel.n_tones())));
    }
    let norm = channel.tone_norm(0);
    if norm <= 0.0 {
        return Err(WptError::Degenerate("mrt on an all-zero channel".into()));
    }
    let amp = (2.0 * p).sqrt() / norm;
    let w = channel.gains().mapv(|h| h.conj() * amp);
    PrecoderWeights::new(w, *grid)
}

/// Uniform power over every tone and antenna, phases matched to the channel.
pub fn design_up(channel: &ChannelRealization, grid: &ToneGrid, p: f64) -> Result<PrecoderWeights> {
    let (n, m) = channel.gains().dim();
    let amp = (2.0 * p / (n * m) as f64).sqrt();
    let w = channel.gains().mapv(|h| Complex64::from_polar(amp, -h.arg()));
    PrecoderWeights::new(w, *grid)
}

/// Scaled matched filter: per-tone MRT across antennas, tone amplitude
/// proportional to `|h_n|^beta`. Reduces to [`design_mrt`] for one tone.
pub fn design_smf(channel: &ChannelRealization, grid: &ToneGrid, p: f64, beta: f64) -> Result<PrecoderWeights> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid("beta", "must be positive"));
    }
    if channel.n_tones() == 1 {
        return design_mrt(channel, grid, p);
    }
    let mut w = channel.gains().mapv(|h| h.conj());
    for (n, mut row) in w.rows_mut().into_iter().enumerate() {
        let norm = channel.tone_norm(n);
        let scale = if norm > 0.0 { norm.powf(beta - 1.0) } else { 0.0 };
        row.mapv_inplace(|z| z * scale);
    }
    PrecoderWeights::new(w, *grid)?
        .normalize_power(p)
        .map_err(|_| WptError::Degenerate("smf on an all-zero channel".into()))
}
