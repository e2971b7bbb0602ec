//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p wpt-core --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

use wpt_core::channel::ChannelModel;
use wpt_core::csi::{csi_loop_zdc, CsiConfig};
use wpt_core::design::{design_cw, design_mrt, design_up, DesignScheme, SchemeKind};
use wpt_core::fitlab::{compose_cumulative, fit_pairs, invert_range, range_gain, PowerLawFit, PAPER_COEFFICIENTS};
use wpt_core::harness::{run_cdf, ExperimentConfig};
use wpt_core::rectifier::{
    moment4, scaling_law_cw, z_dc, z_dc_fourth_order, z_dc_link, z_dc_second_order, z_dc_time_oracle, ReceivedTones,
    RectifierParams,
};
use wpt_core::rng::{rng_from_seed, SeedStream};
use wpt_core::signals::{PeriodicSampler, PrecoderWeights, ToneGrid};
use wpt_core::{ChannelRealization, Execution};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn fit(i: usize) -> PowerLawFit {
    PAPER_COEFFICIENTS[i].fit
}

/// `d = (p / a)^(1 / b)`, solved directly rather than through base-10 logs.
fn range_oracle(f: &PowerLawFit, p: f64) -> f64 {
    (p / f.a).powf(1.0 / f.b)
}

/// All N^4 index quadruples, no resonance shortcut.
fn fourth_moment_oracle(a: &[Complex64]) -> f64 {
    let n = a.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    if i + j == k + l {
                        acc += a[i] * a[j] * a[k].conj() * a[l].conj();
                    }
                }
            }
        }
    }
    0.375 * acc.re
}

fn c1_oracle_equivalence() -> Outcome {
    let params = RectifierParams::default();
    let mut rng = rng_from_seed(0xACCE_0001);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let n = 1 + i % 16;
        let m = 1 + (i / 16) % 8;
        let grid = ToneGrid::default_for(n).unwrap();
        let channel = ChannelModel::default().sample(&grid, m, rng.gen_range(0.5..5.0), rng.gen()).unwrap();
        let w = Array2::from_shape_fn((n, m), |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let w = PrecoderWeights::new(w, grid).unwrap().normalize_power(1.0).unwrap();
        let tones = ReceivedTones::from_link(&w, &channel).unwrap();
        let samples = PeriodicSampler::min_samples(&grid).unwrap();
        let oracle = z_dc_time_oracle(&tones, &params, samples).unwrap();
        let closed = z_dc(&tones, &params);
        worst = worst.max(((oracle - closed) / closed).abs());
    }
    outcome(worst <= 1e-8, format!("max relative error {worst:.3e} over 200 instances (tol 1e-8)"))
}

fn c2_flat_multisine_law() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for n in [1usize, 2, 4, 8, 16] {
        let grid = ToneGrid::default_for(n).unwrap();
        let a = vec![Complex64::new(1.0, 0.0); n];
        let got = moment4(&ReceivedTones::new(a.clone(), grid).unwrap());
        let nf = n as f64;
        let closed_form = 0.375 * (2.0 * nf.powi(3) + nf) / 3.0;
        let enumerated = fourth_moment_oracle(&a);
        worst = worst.max((got - closed_form).abs()).max((got - enumerated).abs());
        notes.push(format!("N={n}:{got}"));
    }
    let spot = (fourth_moment_oracle(&[Complex64::new(1.0, 0.0); 2]) - 2.25).abs() < 1e-12
        && (fourth_moment_oracle(&[Complex64::new(1.0, 0.0); 4]) - 16.5).abs() < 1e-12;
    outcome(worst <= 1e-9 && spot, format!("{} (max abs dev {worst:.1e}, tol 1e-9)", notes.join(" ")))
}

fn c3_cw_scaling_law() -> Outcome {
    let params = RectifierParams::default();
    let model = ChannelModel::frequency_flat();
    let grid = ToneGrid::default_for(1).unwrap();
    let d = 2.0;
    let p = 1.0;
    let lambda = model.path_loss(d).unwrap();
    let w = design_cw(p, &grid, 1).unwrap();
    let seeds = SeedStream::new(3);
    let draws = 100_000;
    let values = Execution::Parallel.map_indexed(draws, |r| {
        let ch = model.sample(&grid, 1, d, seeds.seed(r as u64)).unwrap();
        z_dc_link(&w, &ch, &params).unwrap()
    });
    let mean = values.iter().sum::<f64>() / draws as f64;
    let law = scaling_law_cw(&params, lambda, p);
    let rel = (mean / law - 1.0).abs();
    outcome(rel <= 0.05, format!("MC mean {mean:.4e} vs law {law:.4e}, rel dev {rel:.4} (tol 0.05)"))
}

fn c4_ca_trends() -> Outcome {
    let params = RectifierParams::default();
    let model = ChannelModel::frequency_flat();
    let grid = ToneGrid::default_for(1).unwrap();
    let (d, p) = (1.5, 1.0);
    let lambda = model.path_loss(d).unwrap();
    let seeds = SeedStream::new(4);
    let draws = 100_000;
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for m in [1usize, 2, 4, 8] {
        let values = Execution::Parallel.map_indexed(draws, |r| {
            let ch = model.sample(&grid, m, d, seeds.seed(r as u64)).unwrap();
            let w = design_mrt(&ch, &grid, p).unwrap();
            z_dc_second_order(&ReceivedTones::from_link(&w, &ch).unwrap(), &params)
        });
        let mean = values.iter().sum::<f64>() / draws as f64;
        let law = params.second_order_gain() * p * m as f64 / lambda;
        let rel = (mean / law - 1.0).abs();
        worst = worst.max(rel);
        notes.push(format!("M={m}:{:.4}", mean / law));
    }

    // In-phase equal-amplitude tones at fixed total power through a unit channel.
    let fourth = |n: usize| {
        let grid = ToneGrid::default_for(n).unwrap();
        let ch = ChannelRealization::new(Array2::from_elem((n, 1), Complex64::new(1.0, 0.0)), 1.0, 1.0).unwrap();
        let w = design_up(&ch, &grid, p).unwrap();
        let tones = ReceivedTones::from_link(&w, &ch).unwrap();
        (z_dc_fourth_order(&tones, &params), fourth_moment_oracle(tones.amplitudes()))
    };
    let ((f8, o8), (f4, o4)) = (fourth(8), fourth(4));
    let ratio = f8 / f4;
    let oracle_ratio = o8 / o4;
    let ratio_ok = (ratio - oracle_ratio).abs() <= 1e-9 && (ratio - 1.9545).abs() < 5e-5;
    outcome(
        worst <= 0.05 && ratio_ok,
        format!(
            "(a) MRT 2nd-order / (k2 R P M / L): {} (tol 0.05); (b) N=8/N=4 4th-order ratio {ratio:.10} vs enumeration {oracle_ratio:.10}",
            notes.join(" ")
        ),
    )
}

fn c5_range_gains() -> Outcome {
    let p = 2.0;
    let tone_expect = [1.157, 1.140, 1.075];
    let ant_expect = [1.706, 1.696, 1.746];
    let mut ok = true;
    let mut notes = Vec::new();
    for (k, (lo, hi)) in [(0usize, 1usize), (1, 2), (2, 3)].into_iter().enumerate() {
        let g = range_gain(&fit(hi), &fit(lo), p).unwrap();
        let o = range_oracle(&fit(hi), p) / range_oracle(&fit(lo), p);
        ok &= (1.05..=1.25).contains(&g) && (g - o).abs() <= 1e-12 * o && (g - tone_expect[k]).abs() < 1e-3;
        notes.push(format!("{g:.3}"));
    }
    notes.push("|".into());
    for (k, (lo, hi)) in [(0usize, 4usize), (4, 5), (5, 6)].into_iter().enumerate() {
        let g = range_gain(&fit(hi), &fit(lo), p).unwrap();
        let o = range_oracle(&fit(hi), p) / range_oracle(&fit(lo), p);
        ok &= (1.50..=1.80).contains(&g) && (g - o).abs() <= 1e-12 * o && (g - ant_expect[k]).abs() < 2e-3;
        notes.push(format!("{g:.3}"));
    }
    outcome(ok, format!("tone gains / antenna gains at p=2: {}", notes.join(" ")))
}

fn c6_four_times_range() -> Outcome {
    let p = 8.081;
    let mrt8 = invert_range(&fit(6), p).unwrap();
    let cw = invert_range(&fit(0), p).unwrap();
    let ratio = mrt8 / cw;
    let agrees = (mrt8 - range_oracle(&fit(6), p)).abs() <= 1e-12 * mrt8 && (cw - 1.0).abs() < 1e-12;
    outcome(
        agrees && (3.7..=5.2).contains(&ratio) && (mrt8 - 4.63).abs() < 0.01,
        format!("8-antenna MRT range {mrt8:.3} m vs CW {cw:.3} m, ratio {ratio:.3} (band [3.7, 5.2])"),
    )
}

fn c7_cumulative_overlap() -> Outcome {
    let composed = compose_cumulative(&fit(0), &fit(3), &fit(5));
    let direct = 37.07 * 14.32 / 8.081;
    let measured = fit(6).a;
    let rel = (composed.a / measured - 1.0).abs();
    outcome(
        (composed.a - direct).abs() <= 1e-12 * direct && (composed.a - 65.69).abs() < 0.01 && rel <= 0.10,
        format!("composed a {:.3} vs measured 8-antenna a {measured}, rel dev {rel:.4} (tol 0.10)", composed.a),
    )
}

fn c8_fit_recovery() -> Outcome {
    let (a, b) = (8.081, -1.553);
    let exact: Vec<(f64, f64)> = [0.6, 1.0, 1.7, 2.9, 4.4, 5.4].iter().map(|&d: &f64| (d, a * d.powf(b))).collect();
    let f = fit_pairs(&exact).unwrap();
    let exact_ok = ((f.a - a) / a).abs() <= 1e-12 && ((f.b - b) / b).abs() <= 1e-12;

    let noise = rand_distr::Normal::new(0.0, 0.1).unwrap();
    let mut successes = 0;
    for trial in 0..100u64 {
        let mut rng = rng_from_seed(SeedStream::new(8).seed(trial));
        let pts: Vec<(f64, f64)> = (0..50)
            .map(|_| {
                let d: f64 = rng.gen_range(0.6..5.4);
                let e: f64 = rng.sample(noise);
                (d, a * d.powf(b) * e.exp())
            })
            .collect();
        let g = fit_pairs(&pts).unwrap();
        if ((g.a - a) / a).abs() <= 0.05 && ((g.b - b) / b).abs() <= 0.05 {
            successes += 1;
        }
    }
    outcome(
        exact_ok && successes >= 90,
        format!("noiseless exact: {exact_ok}; noisy trials within 5%: {successes}/100 (need >= 90)"),
    )
}

fn c9_cdf_ordering() -> Outcome {
    let distances: Vec<f64> = (1..=9).map(|i| 0.6 * i as f64).collect();
    let per = 10_000usize.div_ceil(distances.len());
    let median = |scheme: SchemeKind, n: usize, m: usize| {
        let cfg = ExperimentConfig {
            schemes: vec![scheme],
            tones: vec![n],
            antennas: vec![m],
            distances: distances.clone(),
            realizations: per,
            seed: 9,
            ..ExperimentConfig::default()
        };
        run_cdf(&cfg, Execution::Parallel).unwrap()[0].cdf.median()
    };
    let smf: Vec<f64> = [(1, 1), (8, 1), (8, 2), (8, 4)].iter().map(|&(n, m)| median(SchemeKind::Smf, n, m)).collect();
    let mrt: Vec<f64> = [1, 2, 4, 8].iter().map(|&m| median(SchemeKind::Mrt, 1, m)).collect();
    let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    let trades: Vec<f64> = (0..3).map(|i| smf[i + 1] / mrt[i + 1]).collect();
    let trade_ok = trades.iter().all(|r| (0.8..=1.2).contains(r));
    outcome(
        increasing(&smf) && increasing(&mrt) && trade_ok,
        format!(
            "SMF medians {}; MRT medians {}; SMF(8,M)/MRT(2M) for M=1,2,4: {:.3?} (band [0.8, 1.2])",
            sci(&smf), sci(&mrt), trades
        ),
    )
}

fn c10_imperfect_csi() -> Outcome {
    let params = RectifierParams::default();
    let grid = ToneGrid::default_for(1).unwrap();
    let model = ChannelModel::default();
    let scheme = DesignScheme::mrt(1.0);
    let seeds = SeedStream::new(10);
    let mean_with = |cfg: &CsiConfig, count: usize| {
        let v = Execution::Parallel.map_indexed(count, |r| {
            let ch = model.sample(&grid, 4, 2.0, seeds.seed(r as u64)).unwrap();
            csi_loop_zdc(&ch, &grid, &scheme, cfg, &params, seeds.child(1).seed(r as u64)).unwrap()
        });
        v.iter().sum::<f64>() / count as f64
    };
    let perfect = mean_with(&CsiConfig::perfect(), 100);
    let quantized = mean_with(&CsiConfig::default(), 100);
    let degradation = (perfect - quantized) / perfect;

    let variances = [0.0, 1e-3, 1e-2, 0.1, 0.5, 1.0];
    let curve: Vec<f64> = variances
        .iter()
        .map(|&v| mean_with(&CsiConfig { noise_variance: v, ..CsiConfig::default() }, 1000))
        .collect();
    let monotone = curve.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        degradation.abs() < 0.005 && monotone,
        format!("16-bit degradation {:.4}% (tol 0.5%); mean vs noise variance {}", degradation * 100.0, sci(&curve)),
    )
}

type Criterion = (&'static str, &'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("C1", "rectifier oracle equivalence", Duration::from_secs(10), c1_oracle_equivalence),
        ("C2", "flat multisine fourth-moment law", Duration::from_secs(5), c2_flat_multisine_law),
        ("C3", "CW scaling law Monte-Carlo", Duration::from_secs(30), c3_cw_scaling_law),
        ("C4", "channel-adaptive scaling trends", Duration::from_secs(30), c4_ca_trends),
        ("C5", "reference range gains", Duration::from_secs(1), c5_range_gains),
        ("C6", "four-times range expansion", Duration::from_secs(1), c6_four_times_range),
        ("C7", "cumulative gain overlap", Duration::from_secs(1), c7_cumulative_overlap),
        ("C8", "power-law fit recovery", Duration::from_secs(5), c8_fit_recovery),
        ("C9", "CDF median ordering", Duration::from_secs(60), c9_cdf_ordering),
        ("C10", "imperfect CSI sanity", Duration::from_secs(30), c10_imperfect_csi),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] {id} {name}: {} ({:.2}s, budget {}s{})",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
