//! MISO fading channels with distance-dependent path loss.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{Read, Write};

use crate::error::{invalid, Result, WptError};
use crate::rng::rng_from_seed;
use crate::signals::ToneGrid;

/// Path-loss exponent used by the default model.
pub const DEFAULT_PATH_LOSS_EXPONENT: f64 = 1.55;
/// Path loss at 1 m used by the default model. Chosen so that the mean CW
/// output at 1 m with a 1 W budget and default rectifier is about 8.081 uW
/// (see `rectifier::calibrate_path_loss_ref`).
pub const DEFAULT_PATH_LOSS_REF: f64 = 32_094.0;

/// One channel draw: fading gains (tones x antennas), path loss and distance.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h: Array2<Complex64>,
    path_loss: f64,
    distance: f64,
}

impl ChannelRealization {
    pub fn new(h: Array2<Complex64>, path_loss: f64, distance: f64) -> Result<Self> {
        if h.is_empty() {
            return Err(invalid("h", "channel matrix must be non-empty"));
        }
        if h.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(invalid("h", "entries must be finite"));
        }
        if !(path_loss.is_finite() && path_loss > 0.0) {
            return Err(invalid("path_loss", format!("must be positive, got {path_loss}")));
        }
        if !(distance.is_finite() && distance > 0.0) {
            return Err(invalid("distance", format!("must be positive, got {distance}")));
        }
        Ok(Self { h, path_loss, distance })
    }

    pub fn gains(&self) -> &Array2<Complex64> {
        &self.h
    }

    pub fn path_loss(&self) -> f64 {
        self.path_loss
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn n_tones(&self) -> usize {
        self.h.nrows()
    }

    pub fn m_antennas(&self) -> usize {
        self.h.ncols()
    }

    /// Amplitude `A_{n,m}`.
    pub fn amplitude(&self, n: usize, m: usize) -> f64 {
        self.h[[n, m]].norm()
    }

    /// Phase `psi_{n,m}`.
    pub fn phase(&self, n: usize, m: usize) -> f64 {
        self.h[[n, m]].arg()
    }

    /// Euclidean norm of the tone-`n` channel vector across antennas.
    pub fn tone_norm(&self, n: usize) -> f64 {
        self.h.row(n).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Same fading, different geometry.
    pub fn with_path_loss(&self, path_loss: f64, distance: f64) -> Result<Self> {
        Self::new(self.h.clone(), path_loss, distance)
    }

    pub fn with_gains(&self, h: Array2<Complex64>) -> Result<Self> {
        Self::new(h, self.path_loss, self.distance)
    }

    pub fn to_entries(&self) -> Vec<ChannelEntry> {
        self.h
            .indexed_iter()
            .map(|((tone, antenna), z)| ChannelEntry {
                tone,
                antenna,
                re: z.re,
                im: z.im,
                path_loss: self.path_loss,
                distance_m: self.distance,
            })
            .collect()
    }

    pub fn from_entries(entries: &[ChannelEntry]) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| WptError::Data("channel file has no entries".into()))?;
        let n = entries.iter().map(|e| e.tone).max().unwrap_or(0) + 1;
        let m = entries.iter().map(|e| e.antenna).max().unwrap_or(0) + 1;
        if entries.len() != n * m {
            return Err(WptError::Data(format!(
                "expected {} entries for a {n}x{m} channel, found {}",
                n * m,
                entries.len()
            )));
        }
        let mut h = Array2::from_elem((n, m), Complex64::new(f64::NAN, f64::NAN));
        for e in entries {
            if e.path_loss != first.path_loss || e.distance_m != first.distance_m {
                return Err(WptError::Data("path_loss and distance_m must be constant across entries".into()));
            }
            let slot = &mut h[[e.tone, e.antenna]];
            if !slot.re.is_nan() {
                return Err(WptError::Data(format!("duplicate entry ({}, {})", e.tone, e.antenna)));
            }
            *slot = Complex64::new(e.re, e.im);
        }
        Self::new(h, first.path_loss, first.distance_m)
    }

    /// CSV with header `tone,antenna,re,im,path_loss,distance_m`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for e in self.to_entries() {
            w.serialize(e).map_err(|e| WptError::Data(e.to_string()))?;
        }
        w.flush().map_err(|e| WptError::Data(e.to_string()))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let entries = r
            .deserialize()
            .collect::<std::result::Result<Vec<ChannelEntry>, _>>()
            .map_err(|e| WptError::Data(e.to_string()))?;
        Self::from_entries(&entries)
    }

    /// JSON array of entry objects with the same fields as the CSV form.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_entries()).expect("channel entries serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let entries: Vec<ChannelEntry> = serde_json::from_str(text).map_err(|e| WptError::Data(e.to_string()))?;
        Self::from_entries(&entries)
    }
}

/// Serialized form of one channel coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEntry {
    pub tone: usize,
    pub antenna: usize,
    pub re: f64,
    pub im: f64,
    pub path_loss: f64,
    pub distance_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    FrequencyFlat,
    TappedDelay,
}

/// Statistical channel description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelModel {
    pub kind: ChannelKind,
    /// Number of taps for the tapped-delay model.
    pub n_taps: usize,
    /// Span of tap delays in seconds.
    pub delay_spread: f64,
    /// Exponential power-delay-profile decay rate (1/s).
    pub pdp_decay: f64,
    /// Path loss at 1 m.
    pub path_loss_ref: f64,
    pub path_loss_exponent: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            kind: ChannelKind::TappedDelay,
            n_taps: 8,
            delay_spread: 200e-9,
            pdp_decay: 5e6,
            path_loss_ref: DEFAULT_PATH_LOSS_REF,
            path_loss_exponent: DEFAULT_PATH_LOSS_EXPONENT,
        }
    }
}

impl ChannelModel {
    pub fn frequency_flat() -> Self {
        Self {
            kind: ChannelKind::FrequencyFlat,
            n_taps: 1,
            delay_spread: 0.0,
            ..Self::default()
        }
    }

    pub fn tapped_delay(n_taps: usize, delay_spread: f64, pdp_decay: f64) -> Self {
        Self {
            kind: ChannelKind::TappedDelay,
            n_taps,
            delay_spread,
            pdp_decay,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_taps == 0 {
            return Err(invalid("n_taps", "must be at least 1"));
        }
        if !(self.delay_spread.is_finite() && self.delay_spread >= 0.0) {
            return Err(invalid("delay_spread", "must be finite and non-negative"));
        }
        if !(self.pdp_decay.is_finite() && self.pdp_decay >= 0.0) {
            return Err(invalid("pdp_decay", "must be finite and non-negative"));
        }
        if !(self.path_loss_ref.is_finite() && self.path_loss_ref > 0.0) {
            return Err(invalid("path_loss_ref", "must be positive"));
        }
        if !(self.path_loss_exponent.is_finite() && self.path_loss_exponent > 0.0) {
            return Err(invalid("path_loss_exponent", "must be positive"));
        }
        Ok(())
    }

    /// `Lambda(d) = Lambda0 * d^gamma`.
    pub fn path_loss(&self, d: f64) -> Result<f64> {
        if !(d.is_finite() && d > 0.0) {
            return Err(invalid("distance", format!("must be positive, got {d}")));
        }
        Ok(self.path_loss_ref * d.powf(self.path_loss_exponent))
    }

    /// Tap delays and normalized tap powers.
    pub fn taps(&self) -> (Vec<f64>, Vec<f64>) {
        match self.kind {
            ChannelKind::FrequencyFlat => (vec![0.0], vec![1.0]),
            ChannelKind::TappedDelay => {
                let l = self.n_taps.max(1);
                let delays: Vec<f64> = if l == 1 {
                    vec![0.0]
                } else {
                    (0..l).map(|i| self.delay_spread * i as f64 / (l - 1) as f64).collect()
                };
                let raw: Vec<f64> = delays.iter().map(|t| (-self.pdp_decay * t).exp()).collect();
                let total: f64 = raw.iter().sum();
                (delays, raw.into_iter().map(|p| p / total).collect())
            }
        }
    }

    /// Unit-variance fading draw for `grid` and `m_antennas`, at distance `d`.
    ///
    /// Deterministic in `(self, grid, m_antennas, seed)`. Taps are drawn
    /// antenna by antenna, so antenna `m` sees the same fading for any
    /// `m_antennas > m`.
    pub fn sample(&self, grid: &ToneGrid, m_antennas: usize, d: f64, seed: u64) -> Result<ChannelRealization> {
        self.validate()?;
        if m_antennas == 0 {
            return Err(invalid("m_antennas", "must be at least 1"));
        }
        let path_loss = self.path_loss(d)?;
        let h = self.sample_gains(grid, m_antennas, seed);
        ChannelRealization::new(h, path_loss, d)
    }

    /// Fading matrix only.
    pub fn sample_gains(&self, grid: &ToneGrid, m_antennas: usize, seed: u64) -> Array2<Complex64> {
        let mut rng = rng_from_seed(seed);
        let (delays, powers) = self.taps();
        let n = grid.n_tones();
        let mut h = Array2::zeros((n, m_antennas));
        for m in 0..m_antennas {
            let taps: Vec<Complex64> = powers
                .iter()
                .map(|p| complex_gaussian(&mut rng) * p.sqrt())
                .collect();
            for (k, f) in grid.frequencies().enumerate() {
                h[[k, m]] = taps
                    .iter()
                    .zip(&delays)
                    .map(|(a, tau)| a * Complex64::from_polar(1.0, -2.0 * PI * f * tau))
                    .sum();
            }
        }
        h
    }
}

/// Circularly-symmetric complex Gaussian with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Free-function form of [`ChannelModel::path_loss`].
pub fn path_loss(model: &ChannelModel, d: f64) -> Result<f64> {
    model.path_loss(d)
}

/// Free-function form of [`ChannelModel::sample`] at unit distance.
pub fn sample_channel(model: &ChannelModel, grid: &ToneGrid, m_antennas: usize, seed: u64) -> Result<ChannelRealization> {
    model.sample(grid, m_antennas, 1.0, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model_with_loss(gamma: f64) -> ChannelModel {
        ChannelModel {
            path_loss_ref: 1.0,
            path_loss_exponent: gamma,
            ..ChannelModel::default()
        }
    }

    #[test]
    fn path_loss_examples() {
        let m = model_with_loss(2.0);
        assert_eq!(m.path_loss(1.0).unwrap(), 1.0);
        assert_relative_eq!(m.path_loss(3.0).unwrap(), 9.0, max_relative = 1e-15);
        assert_relative_eq!(model_with_loss(1.55).path_loss(2.0).unwrap(), 2.928_171, max_relative = 1e-6);
        assert!(m.path_loss(0.0).is_err());
        assert!(m.path_loss(-1.0).is_err());
    }

    #[test]
    fn single_tap_is_flat() {
        let model = ChannelModel::tapped_delay(1, 300e-9, 0.0);
        let grid = ToneGrid::default_for(8).unwrap();
        let ch = sample_channel(&model, &grid, 3, 5).unwrap();
        for m in 0..3 {
            for n in 1..8 {
                assert_relative_eq!(ch.gains()[[n, m]].re, ch.gains()[[0, m]].re, epsilon = 1e-15);
                assert_relative_eq!(ch.gains()[[n, m]].im, ch.gains()[[0, m]].im, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn flat_model_identical_across_tones() {
        let grid = ToneGrid::default_for(4).unwrap();
        let ch = sample_channel(&ChannelModel::frequency_flat(), &grid, 2, 9).unwrap();
        for n in 1..4 {
            assert_eq!(ch.gains().row(n), ch.gains().row(0));
        }
        assert_ne!(ch.gains()[[0, 0]], ch.gains()[[0, 1]]);
    }

    #[test]
    fn sampling_is_deterministic() {
        let grid = ToneGrid::default_for(8).unwrap();
        let model = ChannelModel::default();
        let a = model.sample(&grid, 4, 2.0, 77).unwrap();
        let b = model.sample(&grid, 4, 2.0, 77).unwrap();
        assert_eq!(a, b);
        let c = model.sample(&grid, 4, 2.0, 78).unwrap();
        assert_ne!(a, c);
        // antenna prefix property
        let d = model.sample(&grid, 2, 2.0, 77).unwrap();
        assert_eq!(d.gains().column(1), a.gains().column(1));
    }

    #[test]
    fn unit_energy_and_rayleigh_fourth_moment() {
        let grid = ToneGrid::default_for(1).unwrap();
        for model in [ChannelModel::frequency_flat(), ChannelModel::default()] {
            let (mut s2, mut s4) = (0.0, 0.0);
            let runs = 100_000;
            for seed in 0..runs {
                let g = model.sample_gains(&grid, 1, seed)[[0, 0]].norm_sqr();
                s2 += g;
                s4 += g * g;
            }
            let (m2, m4) = (s2 / runs as f64, s4 / runs as f64);
            assert!((0.98..=1.02).contains(&m2), "E|h|^2 = {m2}");
            assert!((1.94..=2.06).contains(&m4), "E|h|^4 = {m4}");
        }
    }

    #[test]
    fn tone_energy_is_unit_for_every_tone() {
        let grid = ToneGrid::default_for(8).unwrap();
        let model = ChannelModel::tapped_delay(6, 400e-9, 2e6);
        let runs = 100_000u64;
        let mut acc = [0.0f64; 8];
        for seed in 0..runs {
            let h = model.sample_gains(&grid, 1, seed);
            for n in 0..8 {
                acc[n] += h[[n, 0]].norm_sqr();
            }
        }
        for v in acc {
            let mean = v / runs as f64;
            assert!((0.98..=1.02).contains(&mean), "mean {mean}");
        }
    }

    fn edge_correlation(model: &ChannelModel) -> f64 {
        let grid = ToneGrid::default_for(8).unwrap();
        let mut cross = Complex64::new(0.0, 0.0);
        let (mut p0, mut p1) = (0.0, 0.0);
        for seed in 0..20_000 {
            let h = model.sample_gains(&grid, 1, seed);
            let (a, b) = (h[[0, 0]], h[[7, 0]]);
            cross += a * b.conj();
            p0 += a.norm_sqr();
            p1 += b.norm_sqr();
        }
        cross.norm() / (p0 * p1).sqrt()
    }

    #[test]
    fn frequency_correlation_drops_with_delay_spread() {
        let small = edge_correlation(&ChannelModel::tapped_delay(8, 20e-9, 0.0));
        let large = edge_correlation(&ChannelModel::tapped_delay(8, 400e-9, 0.0));
        assert!(large < small, "large {large} small {small}");
    }

    #[test]
    fn csv_and_json_round_trip() {
        let grid = ToneGrid::default_for(3).unwrap();
        let ch = ChannelModel::default().sample(&grid, 2, 1.7, 3).unwrap();
        let mut buf = Vec::new();
        ch.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("tone,antenna,re,im,path_loss,distance_m\n"));
        assert_eq!(ChannelRealization::read_csv(buf.as_slice()).unwrap(), ch);
        assert_eq!(ChannelRealization::from_json(&ch.to_json()).unwrap(), ch);
    }

    #[test]
    fn malformed_entries_rejected() {
        let e = |tone, antenna| ChannelEntry { tone, antenna, re: 1.0, im: 0.0, path_loss: 1.0, distance_m: 1.0 };
        assert!(ChannelRealization::from_entries(&[]).is_err());
        assert!(ChannelRealization::from_entries(&[e(0, 0), e(1, 1)]).is_err());
        assert!(ChannelRealization::from_entries(&[e(0, 0), e(0, 0)]).is_err());
        assert!(ChannelRealization::new(ndarray::array![[Complex64::new(1.0, 0.0)]], 0.0, 1.0).is_err());
    }
}
