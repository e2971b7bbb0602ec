//! Monte-Carlo experiment driver: distance sweeps, empirical CDFs and the
//! reference-claim check suite.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write;

use crate::channel::ChannelModel;
use crate::csi::{csi_loop_zdc, CsiConfig};
use crate::design::{DesignScheme, SchemeKind, DEFAULT_BETA};
use crate::error::{Result, WptError};
use crate::exec::Execution;
use crate::fitlab::{compose_cumulative, invert_range, range_gain, PowerLawFit, PAPER_COEFFICIENTS};
use crate::rectifier::{moment4, z_dc_link, ReceivedTones, RectifierParams};
use crate::rng::SeedStream;
use crate::signals::{ToneGrid, DEFAULT_BAND_LIMIT_HZ, DEFAULT_F0_HZ};

/// Formats with 9 significant digits.
pub fn fmt9(x: f64) -> String {
    format!("{x:.8e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schemes: Vec<SchemeKind>,
    pub beta: f64,
    /// Transmit power budget, watts.
    pub power_budget: f64,
    pub tones: Vec<usize>,
    pub antennas: Vec<usize>,
    pub distances: Vec<f64>,
    pub realizations: usize,
    pub f0: f64,
    pub bandwidth: f64,
    pub channel: ChannelModel,
    pub rectifier: RectifierParams,
    /// Imperfect CSI; perfect CSI when absent.
    pub csi: Option<CsiConfig>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schemes: vec![SchemeKind::Cw, SchemeKind::Smf],
            beta: DEFAULT_BETA,
            power_budget: 1.0,
            tones: vec![1],
            antennas: vec![1],
            distances: (1..=9).map(|i| 0.6 * i as f64).collect(),
            realizations: 1000,
            f0: DEFAULT_F0_HZ,
            bandwidth: DEFAULT_BAND_LIMIT_HZ,
            channel: ChannelModel::default(),
            rectifier: RectifierParams::default(),
            csi: None,
            seed: 1,
        }
    }
}

/// One (scheme, N, M) configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Combo {
    pub scheme: SchemeKind,
    pub n_tones: usize,
    pub m_antennas: usize,
}

impl ExperimentConfig {
    /// Checks every field, reporting all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.schemes.is_empty() {
            errs.push("schemes: must not be empty".to_string());
        }
        if self.tones.is_empty() || self.tones.contains(&0) {
            errs.push("tones: must be non-empty with every entry >= 1".to_string());
        }
        if self.antennas.is_empty() || self.antennas.contains(&0) {
            errs.push("antennas: must be non-empty with every entry >= 1".to_string());
        }
        if self.distances.is_empty() || self.distances.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            errs.push("distances: must be non-empty with every entry > 0".to_string());
        }
        if self.realizations == 0 {
            errs.push("realizations: must be >= 1".to_string());
        }
        if !(self.power_budget.is_finite() && self.power_budget > 0.0) {
            errs.push("power_budget: must be > 0".to_string());
        }
        if self.schemes.contains(&SchemeKind::Smf) && !(self.beta.is_finite() && self.beta > 0.0) {
            errs.push("beta: must be > 0 for smf".to_string());
        }
        for &n in &self.tones {
            if n > 0 {
                if let Err(e) = ToneGrid::spanning(self.f0, self.bandwidth, n) {
                    errs.push(format!("tones: {e}"));
                    break;
                }
            }
        }
        if let Err(e) = self.channel.validate() {
            errs.push(format!("channel.{e}"));
        }
        if let Err(e) = self.rectifier.validate() {
            errs.push(format!("rectifier.{e}"));
        }
        if let Some(csi) = &self.csi {
            if let Err(e) = csi.validate() {
                errs.push(format!("csi.{e}"));
            }
        }
        if !self.combos().iter().any(|_| true) && errs.is_empty() {
            errs.push("schemes/tones: mrt needs tones = 1 and no other scheme was given".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(WptError::Data(format!("invalid experiment config:\n  {}", errs.join("\n  "))))
        }
    }

    /// Evaluated configurations in output order (scheme name, N, M).
    /// MRT is single-tone, so it only pairs with N = 1.
    pub fn combos(&self) -> Vec<Combo> {
        let mut schemes = self.schemes.clone();
        schemes.sort_by_key(|s| s.name());
        schemes.dedup();
        let mut tones = self.tones.clone();
        tones.sort_unstable();
        tones.dedup();
        let mut antennas = self.antennas.clone();
        antennas.sort_unstable();
        antennas.dedup();
        let mut out = Vec::new();
        for &scheme in &schemes {
            for &n in &tones {
                if scheme == SchemeKind::Mrt && n != 1 {
                    continue;
                }
                for &m in &antennas {
                    out.push(Combo { scheme, n_tones: n, m_antennas: m });
                }
            }
        }
        out
    }

    fn sorted_distances(&self) -> Vec<f64> {
        let mut d = self.distances.clone();
        d.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
        d.dedup();
        d
    }

    fn scheme(&self, kind: SchemeKind) -> DesignScheme {
        DesignScheme { kind, beta: self.beta, power_budget: self.power_budget }
    }

    /// DC output for realization `r` at distance index `di`.
    ///
    /// Fading depends only on `(seed, di, r)` and the array shape, so every
    /// scheme sees the same channels.
    pub fn evaluate(&self, combo: Combo, di: usize, distance: f64, r: usize) -> Result<f64> {
        let grid = ToneGrid::spanning(self.f0, self.bandwidth, combo.n_tones)?;
        let point = SeedStream::new(self.seed).child(di as u64);
        let channel = self.channel.sample(&grid, combo.m_antennas, distance, point.seed(r as u64))?;
        let scheme = self.scheme(combo.scheme);
        match &self.csi {
            None => z_dc_link(&scheme.design(&channel, &grid)?, &channel, &self.rectifier),
            Some(csi) => {
                let noise_seed = point.child(0xC51).seed(r as u64);
                csi_loop_zdc(&channel, &grid, &scheme, csi, &self.rectifier, noise_seed)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scheme: SchemeKind,
    pub n_tones: usize,
    pub m_antennas: usize,
    pub distance_m: f64,
    pub zdc_mean: f64,
    pub zdc_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean and standard deviation of the DC output for every (scheme, N, M, d).
pub fn run_sweep(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let distances = cfg.sorted_distances();
    let index_of = |d: f64| cfg.distances.iter().position(|&x| x == d).unwrap_or(0);
    let mut rows = Vec::new();
    for combo in cfg.combos() {
        for &d in &distances {
            let di = index_of(d);
            let values = exec.try_map_indexed(cfg.realizations, |r| cfg.evaluate(combo, di, d, r))?;
            let (zdc_mean, zdc_std) = mean_std(&values);
            rows.push(SweepRow {
                scheme: combo.scheme,
                n_tones: combo.n_tones,
                m_antennas: combo.m_antennas,
                distance_m: d,
                zdc_mean,
                zdc_std,
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(w, "scheme,n_tones,m_antennas,distance_m,zdc_mean,zdc_std")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.scheme,
            r.n_tones,
            r.m_antennas,
            fmt9(r.distance_m),
            fmt9(r.zdc_mean),
            fmt9(r.zdc_std)
        )?;
    }
    Ok(())
}

/// Empirical CDF: sorted samples with plotting positions `i / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    values: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(value, F)` pairs, `F = (i + 1) / n`.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.values.len() as f64;
        self.values.iter().enumerate().map(move |(i, &v)| (v, (i + 1) as f64 / n))
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.values.partition_point(|&v| v <= x);
        k as f64 / self.values.len() as f64
    }

    /// Sample median (mean of the middle pair for even counts).
    pub fn median(&self) -> f64 {
        let n = self.values.len();
        if n == 0 {
            return f64::NAN;
        }
        if n % 2 == 1 {
            self.values[n / 2]
        } else {
            0.5 * (self.values[n / 2 - 1] + self.values[n / 2])
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfSeries {
    pub combo: Combo,
    pub cdf: EmpiricalCdf,
}

/// Pools DC output samples over realizations and the distance grid.
pub fn run_cdf(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<CdfSeries>> {
    cfg.validate()?;
    let distances = cfg.distances.clone();
    let per = cfg.realizations;
    cfg.combos()
        .into_iter()
        .map(|combo| {
            let samples = exec.try_map_indexed(per * distances.len(), |k| {
                let (di, r) = (k / per, k % per);
                cfg.evaluate(combo, di, distances[di], r)
            })?;
            Ok(CdfSeries { combo, cdf: EmpiricalCdf::new(samples) })
        })
        .collect()
}

pub fn write_cdf_csv<W: Write>(mut w: W, series: &[CdfSeries]) -> std::io::Result<()> {
    writeln!(w, "scheme,n_tones,m_antennas,zdc,cdf")?;
    for s in series {
        for (v, f) in s.cdf.points() {
            writeln!(w, "{},{},{},{},{}", s.combo.scheme, s.combo.n_tones, s.combo.m_antennas, fmt9(v), fmt9(f))?;
        }
    }
    Ok(())
}

/// One checked claim.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl CheckLine {
    fn new(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), value, lo, hi }
    }

    pub fn passed(&self) -> bool {
        self.value >= self.lo && self.value <= self.hi
    }
}

/// Target DC power used for range-gain comparisons.
pub const RANGE_GAIN_TARGET: f64 = 2.0;

fn paper_fit_at(i: usize) -> PowerLawFit {
    PAPER_COEFFICIENTS[i].fit
}

/// Checks the reference fits against the reported range claims plus the
/// deterministic rectifier laws.
pub fn paper_check() -> Result<Vec<CheckLine>> {
    let mut lines = Vec::new();
    let p = RANGE_GAIN_TARGET;

    // tone doubling along the SMF series, antenna doubling along MRT
    for (lo, hi) in [(0usize, 1usize), (1, 2), (2, 3)] {
        let g = range_gain(&paper_fit_at(hi), &paper_fit_at(lo), p)?;
        let from = PAPER_COEFFICIENTS[lo].n_tones;
        let to = PAPER_COEFFICIENTS[hi].n_tones;
        lines.push(CheckLine::new(format!("tone_doubling_range_gain_{from}_to_{to}"), g, 1.05, 1.25));
    }
    for (lo, hi) in [(0usize, 4usize), (4, 5), (5, 6)] {
        let g = range_gain(&paper_fit_at(hi), &paper_fit_at(lo), p)?;
        let from = PAPER_COEFFICIENTS[lo].m_antennas;
        let to = PAPER_COEFFICIENTS[hi].m_antennas;
        lines.push(CheckLine::new(format!("antenna_doubling_range_gain_{from}_to_{to}"), g, 1.50, 1.80));
    }

    let base = paper_fit_at(0);
    let cw_range = invert_range(&base, base.a)?;
    let mrt8_range = invert_range(&paper_fit_at(6), base.a)?;
    lines.push(CheckLine::new("mrt8_vs_cw_range_ratio", mrt8_range / cw_range, 3.7, 5.2));

    let composed = compose_cumulative(&base, &paper_fit_at(3), &paper_fit_at(5));
    let measured = paper_fit_at(6).a;
    lines.push(CheckLine::new(
        "cumulative_a_4ant_8tone_over_8ant_1tone",
        composed.a / measured,
        0.9,
        1.1,
    ));

    for r in PAPER_COEFFICIENTS.iter() {
        lines.push(CheckLine::new(
            format!("exponent_{}_{}x{}", r.scheme, r.n_tones, r.m_antennas),
            r.fit.b,
            -1.60,
            -1.40,
        ));
    }

    // In-phase flat multisine fourth moment: (3/8)(2N^3 + N)/3 for unit tones.
    for n in [1usize, 2, 4, 8, 16] {
        let grid = ToneGrid::spanning(DEFAULT_F0_HZ, DEFAULT_BAND_LIMIT_HZ, n)?;
        let tones = ReceivedTones::new(vec![num_complex::Complex64::new(1.0, 0.0); n], grid)?;
        let nf = n as f64;
        let expected = 0.375 * (2.0 * nf.powi(3) + nf) / 3.0;
        let rel = moment4(&tones) / expected;
        lines.push(CheckLine::new(format!("flat_multisine_moment4_ratio_n{n}"), rel, 1.0 - 1e-9, 1.0 + 1e-9));
    }
    Ok(lines)
}

/// Renders one line per claim: verdict, name, value and band.
pub fn render_check_report(lines: &[CheckLine]) -> String {
    let mut out = String::new();
    for l in lines {
        let _ = writeln!(
            out,
            "{} {} value={} band=[{}, {}]",
            if l.passed() { "PASS" } else { "FAIL" },
            l.name,
            fmt9(l.value),
            fmt9(l.lo),
            fmt9(l.hi)
        );
    }
    let failed = lines.iter().filter(|l| !l.passed()).count();
    let _ = writeln!(out, "{} checks, {} failed", lines.len(), failed);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            schemes: vec![SchemeKind::Smf, SchemeKind::Cw],
            tones: vec![2],
            antennas: vec![2],
            distances: vec![3.0, 1.0, 2.0],
            realizations: 50,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn sweep_cardinality_and_order() {
        let rows = run_sweep(&small_cfg(), Execution::Serial).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].scheme, SchemeKind::Cw);
        assert_eq!(rows[3].scheme, SchemeKind::Smf);
        let d: Vec<f64> = rows.iter().map(|r| r.distance_m).collect();
        assert_eq!(d, vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
        assert!(rows.windows(2).all(|w| w[0].scheme != w[1].scheme || w[0].zdc_mean > w[1].zdc_mean));
    }

    #[test]
    fn sweep_is_deterministic_across_execution_modes() {
        let cfg = small_cfg();
        let a = run_sweep(&cfg, Execution::Serial).unwrap();
        let b = run_sweep(&cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        write_sweep_csv(&mut x, &a).unwrap();
        write_sweep_csv(&mut y, &run_sweep(&cfg, Execution::Parallel).unwrap()).unwrap();
        assert_eq!(x, y);
        let text = String::from_utf8(x).unwrap();
        assert!(text.starts_with("scheme,n_tones,m_antennas,distance_m,zdc_mean,zdc_std\ncw,2,2,1.00000000e0,"));
    }

    #[test]
    fn mrt_only_pairs_with_single_tone() {
        let cfg = ExperimentConfig {
            schemes: vec![SchemeKind::Mrt, SchemeKind::Up],
            tones: vec![1, 4],
            antennas: vec![2],
            ..ExperimentConfig::default()
        };
        let combos = cfg.combos();
        assert_eq!(combos.len(), 3);
        assert_eq!(combos[0], Combo { scheme: SchemeKind::Mrt, n_tones: 1, m_antennas: 2 });
    }

    #[test]
    fn validation_lists_fields() {
        let cfg = ExperimentConfig {
            realizations: 0,
            distances: vec![],
            tones: vec![0],
            ..ExperimentConfig::default()
        };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("realizations"));
        assert!(msg.contains("distances"));
        assert!(msg.contains("tones"));
        let only_mrt = ExperimentConfig { schemes: vec![SchemeKind::Mrt], tones: vec![4], ..Default::default() };
        assert!(only_mrt.validate().is_err());
    }

    #[test]
    fn empirical_cdf_definition() {
        let c = EmpiricalCdf::new(vec![3.0, 1.0, 2.0]);
        assert!((c.eval(2.0) - 2.0 / 3.0).abs() < 1e-15);
        let pts: Vec<(f64, f64)> = c.points().collect();
        assert_eq!(pts.last().unwrap().1, 1.0);
        assert!(pts.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
        assert_eq!(c.median(), 2.0);
        assert_eq!(EmpiricalCdf::new(vec![1.0, 4.0]).median(), 2.5);
    }

    #[test]
    fn cdf_pools_distances() {
        let cfg = small_cfg();
        let series = run_cdf(&cfg, Execution::Parallel).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series[0].cdf.len(), 150);
        assert_eq!(series, run_cdf(&cfg, Execution::Serial).unwrap());
    }

    #[test]
    fn paper_check_passes() {
        let lines = paper_check().unwrap();
        for l in &lines {
            assert!(l.passed(), "{l:?}");
        }
        let report = render_check_report(&lines);
        assert!(report.contains("PASS mrt8_vs_cw_range_ratio"));
        assert!(report.ends_with("0 failed\n"));
    }

    #[test]
    fn fmt9_has_nine_significant_digits() {
        assert_eq!(fmt9(8.081), "8.08100000e0");
        assert_eq!(fmt9(-1.234567891234e-5), "-1.23456789e-5");
    }
}
