//! `wptsim`: command-line driver for the wpt-core simulator.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use wpt_core::design::{DesignScheme, SchemeKind};
use wpt_core::fitlab::{self, paper_fit, PowerLawFit};
use wpt_core::harness::{self, fmt9, ExperimentConfig};
use wpt_core::rectifier::{self, ReceivedTones};
use wpt_core::signals::PeriodicSampler;
use wpt_core::{ChannelRealization, Execution, ToneGrid};

const EXIT_VALIDATION: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "wptsim", version, about = "Channel-adaptive wireless power transfer simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Flags override the config file.
#[derive(Args, Debug, Default)]
struct Common {
    /// TOML experiment config.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// cw, mrt, up or smf. Comma-separated lists are accepted by sweep/cdf.
    #[arg(long, global = true, value_name = "NAME")]
    scheme: Option<String>,
    #[arg(long, global = true, value_name = "N", value_delimiter = ',')]
    tones: Option<Vec<usize>>,
    #[arg(long, global = true, value_name = "M", value_delimiter = ',')]
    antennas: Option<Vec<usize>>,
    #[arg(long, global = true, value_name = "F")]
    beta: Option<f64>,
    #[arg(long, global = true, value_name = "K")]
    realizations: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw one channel realization and write it as CSV (or JSON for *.json).
    Channel {
        #[arg(long, default_value_t = 1.0)]
        distance: f64,
    },
    /// Design precoder weights for a channel file.
    Design {
        #[arg(long, value_name = "PATH")]
        channel: PathBuf,
    },
    /// Evaluate the DC output of one link.
    Zdc {
        /// Channel file; a channel is drawn from the config model when omitted.
        #[arg(long, value_name = "PATH")]
        channel: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        distance: f64,
        /// Also evaluate the time-sampling oracle.
        #[arg(long)]
        oracle: bool,
    },
    /// Mean/std DC output over the (scheme, N, M, distance) grid.
    Sweep {
        /// Comma-separated distances in meters.
        #[arg(long, value_delimiter = ',')]
        distances: Option<Vec<f64>>,
        #[arg(long)]
        serial: bool,
    },
    /// Empirical CDFs pooled over realizations and distances.
    Cdf {
        #[arg(long, value_delimiter = ',')]
        distances: Option<Vec<f64>>,
        #[arg(long)]
        serial: bool,
    },
    /// Fit P_dc = a d^b per (scheme, N, M) group of a measurement CSV.
    Fit {
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
    },
    /// Range at which a fitted law reaches a target DC power.
    Range {
        /// Target DC power, in the fit's units.
        #[arg(long)]
        target: f64,
        #[arg(long, allow_hyphen_values = true)]
        a: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<f64>,
    },
    /// Check the reference fit coefficients against the reported claims.
    PaperCheck,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(s) = &common.scheme {
        cfg.schemes = s.split(',').map(str::parse).collect::<Result<_, _>>()?;
    }
    if let Some(t) = &common.tones {
        cfg.tones = t.clone();
    }
    if let Some(a) = &common.antennas {
        cfg.antennas = a.clone();
    }
    if let Some(b) = common.beta {
        cfg.beta = b;
    }
    if let Some(k) = common.realizations {
        cfg.realizations = k;
    }
    Ok(cfg)
}

fn single<T: Copy>(values: &[T], name: &str) -> Result<T> {
    match values {
        [v] => Ok(*v),
        _ => bail!("--{name} takes a single value for this command"),
    }
}

fn single_scheme(cfg: &ExperimentConfig) -> Result<DesignScheme> {
    let kind = single(&cfg.schemes, "scheme")?;
    Ok(DesignScheme::new(kind, cfg.beta, cfg.power_budget)?)
}

fn read_channel(path: &Path) -> Result<ChannelRealization> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let ch = if path.extension().is_some_and(|e| e == "json") {
        ChannelRealization::from_json(&text)?
    } else {
        ChannelRealization::read_csv(text.as_bytes())?
    };
    Ok(ch)
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => io::stdout().write_all(bytes).map_err(Into::into),
    }
}

fn run(cli: Cli) -> Result<u8> {
    let common = &cli.common;
    match cli.command {
        Command::PaperCheck => {
            let lines = harness::paper_check()?;
            emit(&common.out, harness::render_check_report(&lines).as_bytes())?;
            Ok(if lines.iter().all(|l| l.passed()) { 0 } else { EXIT_CHECK_FAILED })
        }
        Command::Range { target, a, b } => {
            let fit = match (a, b) {
                (Some(a), Some(b)) => PowerLawFit::new(a, b)?,
                (None, None) => {
                    let cfg = load_config(common)?;
                    let scheme = single(&cfg.schemes, "scheme")?;
                    let (n, m) = (single(&cfg.tones, "tones")?, single(&cfg.antennas, "antennas")?);
                    paper_fit(scheme.name(), n, m)
                        .ok_or_else(|| anyhow!("no reference fit for {scheme} N={n} M={m}; pass --a and --b"))?
                }
                _ => bail!("--a and --b must be given together"),
            };
            let d = fitlab::invert_range(&fit, target)?;
            emit(&common.out, format!("{}\n", fmt9(d)).as_bytes())?;
            Ok(0)
        }
        Command::Fit { input } => {
            let file = fs::File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let records = fitlab::read_measurements(file)?;
            let reports = fitlab::fit_groups(&records)?;
            let mut text = serde_json::to_string_pretty(&reports)?;
            text.push('\n');
            emit(&common.out, text.as_bytes())?;
            Ok(0)
        }
        Command::Channel { distance } => {
            let cfg = load_config(common)?;
            cfg.channel.validate()?;
            let n = single(&cfg.tones, "tones")?;
            let m = single(&cfg.antennas, "antennas")?;
            let grid = ToneGrid::spanning(cfg.f0, cfg.bandwidth, n)?;
            let ch = cfg.channel.sample(&grid, m, distance, cfg.seed)?;
            let is_json = common.out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
            let bytes = if is_json {
                let mut s = ch.to_json();
                s.push('\n');
                s.into_bytes()
            } else {
                let mut buf = Vec::new();
                ch.write_csv(&mut buf)?;
                buf
            };
            emit(&common.out, &bytes)?;
            Ok(0)
        }
        Command::Design { channel } => {
            let cfg = load_config(common)?;
            let ch = read_channel(&channel)?;
            let grid = ToneGrid::spanning(cfg.f0, cfg.bandwidth, ch.n_tones())?;
            let w = single_scheme(&cfg)?.design(&ch, &grid)?;
            let mut text = String::from("tone,antenna,re,im\n");
            for ((n, m), z) in w.matrix().indexed_iter() {
                text.push_str(&format!("{n},{m},{},{}\n", fmt9(z.re), fmt9(z.im)));
            }
            emit(&common.out, text.as_bytes())?;
            Ok(0)
        }
        Command::Zdc { channel, distance, oracle } => {
            let cfg = load_config(common)?;
            let ch = match channel {
                Some(path) => read_channel(&path)?,
                None => {
                    let n = single(&cfg.tones, "tones")?;
                    let m = single(&cfg.antennas, "antennas")?;
                    let grid = ToneGrid::spanning(cfg.f0, cfg.bandwidth, n)?;
                    cfg.channel.sample(&grid, m, distance, cfg.seed)?
                }
            };
            let grid = ToneGrid::spanning(cfg.f0, cfg.bandwidth, ch.n_tones())?;
            let w = single_scheme(&cfg)?.design(&ch, &grid)?;
            let tones = ReceivedTones::from_link(&w, &ch)?;
            let mut text = format!(
                "zdc={}\nsecond_order={}\nfourth_order={}\n",
                fmt9(rectifier::z_dc(&tones, &cfg.rectifier)),
                fmt9(rectifier::z_dc_second_order(&tones, &cfg.rectifier)),
                fmt9(rectifier::z_dc_fourth_order(&tones, &cfg.rectifier)),
            );
            if oracle {
                let samples = PeriodicSampler::min_samples(&grid)?;
                let z = rectifier::z_dc_time_oracle(&tones, &cfg.rectifier, samples)?;
                text.push_str(&format!("zdc_time_oracle={}\n", fmt9(z)));
            }
            emit(&common.out, text.as_bytes())?;
            Ok(0)
        }
        Command::Sweep { distances, serial } => {
            let mut cfg = load_config(common)?;
            if let Some(d) = distances {
                cfg.distances = d;
            }
            let rows = harness::run_sweep(&cfg, execution(serial))?;
            let mut buf = Vec::new();
            harness::write_sweep_csv(&mut buf, &rows)?;
            emit(&common.out, &buf)?;
            Ok(0)
        }
        Command::Cdf { distances, serial } => {
            let mut cfg = load_config(common)?;
            if let Some(d) = distances {
                cfg.distances = d;
            }
            let series = harness::run_cdf(&cfg, execution(serial))?;
            let mut buf = Vec::new();
            harness::write_cdf_csv(&mut buf, &series)?;
            emit(&common.out, &buf)?;
            Ok(0)
        }
    }
}

fn execution(serial: bool) -> Execution {
    if serial {
        Execution::Serial
    } else {
        Execution::Parallel
    }
}
