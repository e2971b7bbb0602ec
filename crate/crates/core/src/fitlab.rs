//! Power-law range modeling: `P_dc = a d^b` fitted in log-log space, its
//! inversion to range, range gains and cumulative-gain composition.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{invalid, Result, WptError};

/// `P_dc = a * d^b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub a: f64,
    pub b: f64,
}

impl PowerLawFit {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(invalid("a", format!("must be positive, got {a}")));
        }
        if !(b.is_finite() && b < 0.0) {
            return Err(invalid("b", format!("must be negative, got {b}")));
        }
        Ok(Self { a, b })
    }

    pub fn predict(&self, d: f64) -> f64 {
        predict_pdc(self, d)
    }

    pub fn range(&self, p_target: f64) -> Result<f64> {
        invert_range(self, p_target)
    }
}

/// One measured (or simulated) DC power sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub scheme: String,
    pub n_tones: usize,
    pub m_antennas: usize,
    pub distance_m: f64,
    pub p_dc: f64,
}

/// Reference fit for a given scheme and configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceFit {
    pub scheme: &'static str,
    pub n_tones: usize,
    pub m_antennas: usize,
    pub fit: PowerLawFit,
}

const fn reference(scheme: &'static str, n_tones: usize, m_antennas: usize, a: f64, b: f64) -> ReferenceFit {
    ReferenceFit { scheme, n_tones, m_antennas, fit: PowerLawFit { a, b } }
}

/// Measured power-law coefficients: SMF tone series (1 antenna) followed by
/// the MRT antenna series (1 tone).
pub const PAPER_COEFFICIENTS: [ReferenceFit; 7] = [
    reference("smf", 1, 1, 8.081, -1.553),
    reference("smf", 2, 1, 9.975, -1.538),
    reference("smf", 4, 1, 12.52, -1.560),
    reference("smf", 8, 1, 14.32, -1.577),
    reference("mrt", 1, 2, 18.05, -1.535),
    reference("mrt", 1, 4, 37.07, -1.488),
    reference("mrt", 1, 8, 70.97, -1.417),
];

/// Looks up a reference fit. The single-tone single-antenna entry is shared by
/// both series, so `("mrt", 1, 1)` and `("cw", 1, 1)` resolve to it too.
pub fn paper_fit(scheme: &str, n_tones: usize, m_antennas: usize) -> Option<PowerLawFit> {
    if n_tones == 1 && m_antennas == 1 {
        return Some(PAPER_COEFFICIENTS[0].fit);
    }
    PAPER_COEFFICIENTS
        .iter()
        .find(|r| r.scheme == scheme && r.n_tones == n_tones && r.m_antennas == m_antennas)
        .map(|r| r.fit)
}

/// Least-squares line through `(ln d, ln p)` pairs: `(intercept, slope)`.
fn log_log_regression(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x / n, sy + y / n));
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

fn log_points(records: &[MeasurementRecord]) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        if !(r.distance_m.is_finite() && r.distance_m > 0.0) {
            return Err(invalid("distance_m", format!("must be positive, got {}", r.distance_m)));
        }
        if !(r.p_dc.is_finite() && r.p_dc > 0.0) {
            return Err(invalid("p_dc", format!("must be positive for fitting, got {}", r.p_dc)));
        }
        out.push((r.distance_m.ln(), r.p_dc.ln()));
    }
    let first = out.first().map(|p| p.0);
    if out.len() < 2 || out.iter().all(|p| Some(p.0) == first) {
        return Err(invalid("distance_m", "need at least two distinct distances"));
    }
    Ok(out)
}

/// Ordinary least squares of `ln p_dc` on `ln d`.
pub fn fit_power_law(records: &[MeasurementRecord]) -> Result<PowerLawFit> {
    let pts = log_points(records)?;
    let (intercept, slope) = log_log_regression(&pts);
    PowerLawFit::new(intercept.exp(), slope)
}

/// Fit from bare `(distance, p_dc)` pairs.
pub fn fit_pairs(pairs: &[(f64, f64)]) -> Result<PowerLawFit> {
    let records: Vec<MeasurementRecord> = pairs
        .iter()
        .map(|&(d, p)| MeasurementRecord { scheme: String::new(), n_tones: 1, m_antennas: 1, distance_m: d, p_dc: p })
        .collect();
    fit_power_law(&records)
}

pub fn predict_pdc(fit: &PowerLawFit, d: f64) -> f64 {
    fit.a * d.powf(fit.b)
}

/// Distance at which the fitted law delivers `p_target`:
/// `d = 10^{(log10 p - log10 a) / b}`.
pub fn invert_range(fit: &PowerLawFit, p_target: f64) -> Result<f64> {
    if !(p_target.is_finite() && p_target > 0.0) {
        return Err(invalid("p_target", format!("must be positive, got {p_target}")));
    }
    Ok(10f64.powf((p_target.log10() - fit.a.log10()) / fit.b))
}

/// Ratio of achievable ranges at the same target power.
pub fn range_gain(fit_new: &PowerLawFit, fit_ref: &PowerLawFit, p_target: f64) -> Result<f64> {
    Ok(invert_range(fit_new, p_target)? / invert_range(fit_ref, p_target)?)
}

/// Predicts the joint-(tones, antennas) law by stacking the tone and antenna
/// gains onto the single-tone single-antenna base: coefficients multiply,
/// exponent deviations add.
pub fn compose_cumulative(base: &PowerLawFit, tone_fit: &PowerLawFit, antenna_fit: &PowerLawFit) -> PowerLawFit {
    PowerLawFit {
        a: base.a * (antenna_fit.a / base.a) * (tone_fit.a / base.a),
        b: base.b + (antenna_fit.b - base.b) + (tone_fit.b - base.b),
    }
}

/// Fit summary for one (scheme, N, M) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub scheme: String,
    pub n_tones: usize,
    pub m_antennas: usize,
    pub a: f64,
    pub b: f64,
    /// Residual RMS of `ln p_dc`.
    pub rms_log: f64,
    pub n_points: usize,
}

pub fn fit_report(records: &[MeasurementRecord]) -> Result<FitReport> {
    let fit = fit_power_law(records)?;
    let pts = log_points(records)?;
    let ss: f64 = pts
        .iter()
        .map(|(x, y)| {
            let r = y - (fit.a.ln() + fit.b * x);
            r * r
        })
        .sum();
    let first = &records[0];
    Ok(FitReport {
        scheme: first.scheme.clone(),
        n_tones: first.n_tones,
        m_antennas: first.m_antennas,
        a: fit.a,
        b: fit.b,
        rms_log: (ss / pts.len() as f64).sqrt(),
        n_points: pts.len(),
    })
}

/// One report per (scheme, N, M) group, sorted by that key.
pub fn fit_groups(records: &[MeasurementRecord]) -> Result<Vec<FitReport>> {
    let mut groups: BTreeMap<(String, usize, usize), Vec<MeasurementRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.scheme.clone(), r.n_tones, r.m_antennas))
            .or_default()
            .push(r.clone());
    }
    groups
        .into_iter()
        .map(|((s, n, m), recs)| {
            fit_report(&recs).map_err(|e| WptError::Data(format!("group {s} N={n} M={m}: {e}")))
        })
        .collect()
}

/// Reads the `scheme,n_tones,m_antennas,distance_m,p_dc` CSV (header required).
pub fn read_measurements<R: Read>(reader: R) -> Result<Vec<MeasurementRecord>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = r.headers().map_err(|e| WptError::Data(e.to_string()))?.clone();
    let expected = ["scheme", "n_tones", "m_antennas", "distance_m", "p_dc"];
    if headers.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(WptError::Data(format!(
            "measurement header must be `{}`, got `{}`",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize()
        .collect::<std::result::Result<Vec<MeasurementRecord>, _>>()
        .map_err(|e| WptError::Data(e.to_string()))
}

pub fn write_measurements<W: Write>(writer: W, records: &[MeasurementRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r).map_err(|e| WptError::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| WptError::Data(e.to_string()))
}
