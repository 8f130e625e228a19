//! Command line front end for the simulation harness.
//!
//! Every subcommand resolves a configuration (file, preset, and flag
//! overrides, in that order), runs one experiment, prints a short summary,
//! and optionally writes the full report as JSON plus CSV. Failures print a
//! single JSON error record to stderr and exit nonzero, so scripted callers
//! never have to scrape prose.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use riscf_sim::config::{load_config, preset, save_config, SimConfig, VariantConfig, PRESET_NAMES};
use riscf_sim::experiments::{
    run, ExperimentKind, ExperimentSpec, DEFAULT_AP_COUNTS, DEFAULT_AREA, DEFAULT_AREA_SPACINGS,
    DEFAULT_BLOCKING_GRID, DEFAULT_SPACINGS,
};
use riscf_sim::report::{write_csv, write_json, ReportBody, ReportDocument};

#[derive(Parser, Debug)]
#[command(
    name = "riscf",
    version,
    about = "Throughput studies for a cell-free network assisted by a reconfigurable surface"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Configuration file (TOML); takes precedence over --preset.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Named preset: desk, full, validation, or tiny.
    #[arg(long, default_value = "desk", value_name = "NAME")]
    preset: String,
    /// Shorthand for --preset full.
    #[arg(long)]
    full_scale: bool,
    /// Master seed; realization i draws with seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per geometry.
    #[arg(long)]
    trials: Option<u64>,
    /// Independent geometry draws.
    #[arg(long)]
    realizations: Option<usize>,
    /// Worker threads; 0 uses every core. Results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Output stem; writes <stem>.json and <stem>.csv.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compare closed-form net throughput against Monte Carlo per user.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sweep the probability that a direct AP-user link is unblocked.
    SweepBlocking {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated probabilities in [0, 1].
        #[arg(long, value_delimiter = ',', value_name = "P,..")]
        grid: Vec<f64>,
        /// Comma-separated variants: ris-cellfree, cellfree, ris-cellfree-nolos.
        #[arg(long, value_delimiter = ',', value_parser = parse_variant, value_name = "V,..")]
        variants: Vec<VariantConfig>,
    },
    /// Collect per-user closed-form throughput samples for distribution plots.
    Cdf {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated variants: ris-cellfree, cellfree, ris-cellfree-nolos.
        #[arg(long, value_delimiter = ',', value_parser = parse_variant, value_name = "V,..")]
        variants: Vec<VariantConfig>,
    },
    /// Compare equal against random phases under both correlation models.
    PhaseCompare {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sweep the element spacing at a fixed element count.
    ElementSize {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated spacings in wavelengths, "H" or "HxV" per entry.
        #[arg(long, value_delimiter = ',', value_parser = parse_spacing_pair, value_name = "D,..")]
        spacings: Vec<(f64, f64)>,
    },
    /// Sweep the element spacing while the element count keeps the aperture.
    FixedArea {
        #[command(flatten)]
        common: CommonArgs,
        /// Total aperture in squared wavelengths.
        #[arg(long)]
        area: Option<f64>,
        /// Comma-separated square spacings in wavelengths.
        #[arg(long, value_delimiter = ',', value_name = "D,..")]
        spacings: Vec<f64>,
    },
    /// Measure how fast the normalized decision statistics concentrate as
    /// the AP population grows. Spread estimation needs far fewer trials
    /// than SINR estimation; a few thousand usually suffice.
    Asymptotics {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated AP counts, ascending.
        #[arg(long, value_delimiter = ',', value_name = "M,..")]
        ap_counts: Vec<usize>,
    },
    /// Print the resolved configuration, or save it with --out.
    Config {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn parse_variant(s: &str) -> Result<VariantConfig, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_spacing_pair(s: &str) -> Result<(f64, f64), String> {
    let parse = |part: &str| {
        part.trim()
            .parse::<f64>()
            .map_err(|_| format!("bad spacing component {part:?}"))
    };
    match s.split_once(['x', 'X']) {
        Some((h, v)) => Ok((parse(h)?, parse(v)?)),
        None => {
            let d = parse(s)?;
            Ok((d, d))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_cli(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let record = serde_json::json!({ "error": format!("{err:#}") });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}

fn run_cli(cli: Cli) -> anyhow::Result<()> {
    if let Command::Config { common } = &cli.command {
        let config = resolve_config(common)?;
        match &common.out {
            Some(path) => {
                save_config(&config, path)?;
                println!("wrote {}", path.display());
            }
            None => print!("{}", config.to_toml()?),
        }
        return Ok(());
    }
    let (common, kind, variants) = experiment_parts(cli.command);
    let config = resolve_config(&common)?;
    let spec = ExperimentSpec {
        config,
        kind,
        variants,
    };
    let doc = run(&spec)?;
    println!("{}", summarize(&doc));
    if let Some(stem) = &common.out {
        let json_path = stem.with_extension("json");
        let csv_path = stem.with_extension("csv");
        write_json(&doc, &json_path)?;
        write_csv(&doc, &csv_path)?;
        println!("wrote {} and {}", json_path.display(), csv_path.display());
    }
    Ok(())
}

fn resolve_config(common: &CommonArgs) -> anyhow::Result<SimConfig> {
    let mut config = match &common.config {
        Some(path) => load_config(path)?,
        None => {
            let name = if common.full_scale {
                "full"
            } else {
                common.preset.as_str()
            };
            preset(name).ok_or_else(|| {
                anyhow::anyhow!("unknown preset {name:?}; expected one of {PRESET_NAMES:?}")
            })?
        }
    };
    if let Some(seed) = common.seed {
        config.run.seed = seed;
    }
    if let Some(trials) = common.trials {
        config.run.trials = trials;
    }
    if let Some(realizations) = common.realizations {
        config.run.realizations = realizations;
    }
    if let Some(threads) = common.threads {
        config.run.threads = threads;
    }
    config.validate()?;
    Ok(config)
}

fn experiment_parts(command: Command) -> (CommonArgs, ExperimentKind, Vec<VariantConfig>) {
    match command {
        Command::Validate { common } => (common, ExperimentKind::Validate, Vec::new()),
        Command::SweepBlocking {
            common,
            grid,
            variants,
        } => {
            let grid = if grid.is_empty() {
                DEFAULT_BLOCKING_GRID.to_vec()
            } else {
                grid
            };
            (
                common,
                ExperimentKind::SweepBlocking { grid },
                resolve_variants(variants),
            )
        }
        Command::Cdf { common, variants } => {
            (common, ExperimentKind::Cdf, resolve_variants(variants))
        }
        Command::PhaseCompare { common } => (common, ExperimentKind::PhaseCompare, Vec::new()),
        Command::ElementSize { common, spacings } => {
            let spacings = if spacings.is_empty() {
                DEFAULT_SPACINGS.to_vec()
            } else {
                spacings
            };
            (common, ExperimentKind::ElementSize { spacings }, Vec::new())
        }
        Command::FixedArea {
            common,
            area,
            spacings,
        } => {
            let spacings = if spacings.is_empty() {
                DEFAULT_AREA_SPACINGS.to_vec()
            } else {
                spacings
            };
            (
                common,
                ExperimentKind::FixedArea {
                    area_wavelengths2: area.unwrap_or(DEFAULT_AREA),
                    spacings,
                },
                Vec::new(),
            )
        }
        Command::Asymptotics { common, ap_counts } => {
            let ap_counts = if ap_counts.is_empty() {
                DEFAULT_AP_COUNTS.to_vec()
            } else {
                ap_counts
            };
            (common, ExperimentKind::Asymptotics { ap_counts }, Vec::new())
        }
        Command::Config { .. } => unreachable!("handled before dispatch"),
    }
}

fn resolve_variants(requested: Vec<VariantConfig>) -> Vec<VariantConfig> {
    if requested.is_empty() {
        VariantConfig::ALL.to_vec()
    } else {
        requested
    }
}

fn summarize(doc: &ReportDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} | seed {} | config {}",
        doc.kind, doc.seed, doc.config_digest
    );
    match &doc.body {
        ReportBody::Validate(body) => {
            let _ = writeln!(
                out,
                "{} geometries, worst closed-form vs Monte Carlo gap {:.3}%",
                body.realizations.len(),
                100.0 * body.max_relative_gap
            );
            if let Some(ratio) = body.median_downlink_uplink_ratio {
                let _ = writeln!(out, "median downlink/uplink throughput ratio {ratio:.3}");
            }
        }
        ReportBody::SweepBlocking(body) => {
            for point in &body.points {
                let _ = writeln!(
                    out,
                    "{:<20} p={:<5} uplink {:>10.3} Mbps  downlink {:>10.3} Mbps",
                    point.variant,
                    point.unblocked_probability,
                    point.uplink_sum_mbps,
                    point.downlink_sum_mbps
                );
            }
        }
        ReportBody::Cdf(body) => {
            let _ = writeln!(out, "{} per-user samples", body.samples.len());
        }
        ReportBody::PhaseCompare(body) => {
            for combo in &body.combos {
                let _ = write!(
                    out,
                    "{:<12} {:<7} uplink {:>10.3} Mbps  downlink {:>10.3} Mbps",
                    combo.correlation,
                    combo.policy,
                    combo.uplink_sum_mean_mbps,
                    combo.downlink_sum_mean_mbps
                );
                if let (Some(mc), Some(w)) =
                    (combo.mc_uplink_sum_mbps, combo.mc_uplink_half_width_mbps)
                {
                    let _ = write!(out, "  [mc uplink {mc:.3} +/- {w:.3}]");
                }
                let _ = writeln!(out);
            }
        }
        ReportBody::ElementSize(body) | ReportBody::FixedArea(body) => {
            for point in &body.points {
                let _ = writeln!(
                    out,
                    "spacing {}x{} ({} elements): uplink {:.3} Mbps  downlink {:.3} Mbps",
                    point.spacing_h_wavelengths,
                    point.spacing_v_wavelengths,
                    point.elements,
                    point.uplink_sum_mean_mbps,
                    point.downlink_sum_mean_mbps
                );
            }
        }
        ReportBody::Asymptotics(body) => {
            for point in &body.points {
                let _ = writeln!(
                    out,
                    "M={:<5} uplink spread {:.4e}  downlink spread {:.4e}",
                    point.ap_count, point.uplink_spread, point.downlink_spread
                );
            }
        }
    }
    out.trim_end().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn argument_definitions_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn spacing_pairs_accept_single_and_double_forms() {
        assert_eq!(parse_spacing_pair("0.25").unwrap(), (0.25, 0.25));
        assert_eq!(parse_spacing_pair("0.5x0.75").unwrap(), (0.5, 0.75));
        assert_eq!(parse_spacing_pair("0.5X0.75").unwrap(), (0.5, 0.75));
        assert!(parse_spacing_pair("axb").is_err());
    }
}
