//! The named experiments: each one turns a configuration into a report body.
//!
//! Determinism contract: realization `i` draws its geometry with seed
//! `master + i`, Monte Carlo runs on that geometry use the same seed XORed
//! with [`MC_SEED_SALT`], and random phase baselines come from the dedicated
//! [`PHASE_DRAW_STREAM`]. Everything downstream is a pure function of the
//! configuration and master seed.

use anyhow::Context;
use nalgebra::DMatrix;

use riscf_core::montecarlo::{
    downlink_decision_spread, uplink_decision_spread, AsymptoticRegime, McOutcome, Mode,
    NetworkParts, SinrEstimate,
};
use riscf_core::phase::{equal_phase_design, random_phase_design};
use riscf_core::rng::trial_rng;
use riscf_core::scenario::{base_correlation, build_scenario_with, Scenario, ScenarioParams};
use riscf_core::throughput::{
    default_power_control, downlink_sinr_closed_form, net_throughput, uplink_sinr_closed_form,
};
use riscf_core::Direction;

use crate::config::{CorrelationConfig, SimConfig, VariantConfig};
use crate::parallel;
use crate::report::{
    AsymptoticsBody, AsymptoticsPoint, CdfBody, CdfSample, PhaseBody, PhaseCombo,
    RealizationRecord, ReportBody, ReportDocument, SizeBody, SizePoint, SizeSample, SumSample,
    SweepBody, SweepPoint, UserRecord, ValidateBody,
};

/// XOR mask separating Monte Carlo seed streams from geometry seed streams.
pub const MC_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
/// Stream index reserved for drawing random phase baselines.
pub const PHASE_DRAW_STREAM: u64 = u64::MAX;

/// Blocking probabilities swept by default.
pub const DEFAULT_BLOCKING_GRID: [f64; 8] = [0.0, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0];
/// AP counts of the default convergence sweep.
pub const DEFAULT_AP_COUNTS: [usize; 4] = [50, 100, 200, 400];
/// Element spacings of the default size study, in wavelengths.
pub const DEFAULT_SPACINGS: [(f64, f64); 4] = [(0.25, 0.25), (0.5, 0.5), (0.75, 0.75), (1.0, 1.0)];
/// Default total aperture in squared wavelengths (a 10-by-10 wavelength
/// surface).
pub const DEFAULT_AREA: f64 = 100.0;
/// Spacings tried at constant total aperture.
pub const DEFAULT_AREA_SPACINGS: [f64; 3] = [1.0 / 3.0, 0.5, 1.0];

/// Which experiment to run, with its sweep axes.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentKind {
    /// Closed forms versus Monte Carlo on drawn geometries.
    Validate,
    /// Sum throughput versus the direct-link unblocked probability.
    SweepBlocking {
        /// Probabilities to sweep, each in `[0, 1]`.
        grid: Vec<f64>,
    },
    /// Per-user closed-form throughput CDF samples.
    Cdf,
    /// Equal versus random phases under both correlation models.
    PhaseCompare,
    /// Sum throughput versus element spacing at fixed element count.
    ElementSize {
        /// `(horizontal, vertical)` spacings in wavelengths.
        spacings: Vec<(f64, f64)>,
    },
    /// Sum throughput at constant total aperture; the element count adapts.
    FixedArea {
        /// Total aperture in squared wavelengths.
        area_wavelengths2: f64,
        /// Square element spacings in wavelengths.
        spacings: Vec<f64>,
    },
    /// Concentration of the decision statistics along a nested AP draw.
    Asymptotics {
        /// AP counts, ascending.
        ap_counts: Vec<usize>,
    },
}

impl ExperimentKind {
    fn needs_variants(&self) -> bool {
        matches!(
            self,
            ExperimentKind::SweepBlocking { .. } | ExperimentKind::Cdf
        )
    }
}

/// A fully resolved experiment: configuration, kind, and the system variants
/// to compare where the kind compares variants.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// Scenario and budget.
    pub config: SimConfig,
    /// What to run.
    pub kind: ExperimentKind,
    /// Variants for the comparing kinds; ignored by the others.
    pub variants: Vec<VariantConfig>,
}

impl ExperimentSpec {
    /// Checks the budget and the kind-specific axes.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.config.validate()?;
        if self.kind.needs_variants() {
            anyhow::ensure!(!self.variants.is_empty(), "no system variants selected");
        }
        match &self.kind {
            ExperimentKind::SweepBlocking { grid } => {
                anyhow::ensure!(!grid.is_empty(), "empty blocking grid");
                for &p in grid {
                    anyhow::ensure!(
                        p.is_finite() && (0.0..=1.0).contains(&p),
                        "blocking probability {p} outside [0, 1]"
                    );
                }
            }
            ExperimentKind::ElementSize { spacings } => {
                anyhow::ensure!(!spacings.is_empty(), "no element spacings given");
            }
            ExperimentKind::FixedArea {
                area_wavelengths2,
                spacings,
            } => {
                anyhow::ensure!(
                    area_wavelengths2.is_finite() && *area_wavelengths2 > 0.0,
                    "total aperture must be positive"
                );
                anyhow::ensure!(!spacings.is_empty(), "no element spacings given");
                for &d in spacings {
                    anyhow::ensure!(
                        d.is_finite() && d > 0.0,
                        "element spacing {d} must be positive"
                    );
                }
            }
            ExperimentKind::Asymptotics { ap_counts } => {
                anyhow::ensure!(!ap_counts.is_empty(), "no AP counts given");
                anyhow::ensure!(
                    ap_counts.windows(2).all(|w| w[0] < w[1]),
                    "AP counts must be strictly ascending"
                );
            }
            _ => {}
        }
        Ok(())
    }
}

/// Runs the experiment and wraps the result in a report document.
pub fn run(spec: &ExperimentSpec) -> anyhow::Result<ReportDocument> {
    spec.validate()?;
    let pool = parallel::thread_pool(spec.config.run.threads)?;
    let body = match &spec.kind {
        ExperimentKind::Validate => ReportBody::Validate(run_validate(&spec.config, &pool)?),
        ExperimentKind::SweepBlocking { grid } => {
            ReportBody::SweepBlocking(run_sweep_blocking(&spec.config, &spec.variants, grid)?)
        }
        ExperimentKind::Cdf => ReportBody::Cdf(run_cdf(&spec.config, &spec.variants)?),
        ExperimentKind::PhaseCompare => {
            ReportBody::PhaseCompare(run_phase_compare(&spec.config, &pool)?)
        }
        ExperimentKind::ElementSize { spacings } => {
            ReportBody::ElementSize(run_element_size(&spec.config, spacings)?)
        }
        ExperimentKind::FixedArea {
            area_wavelengths2,
            spacings,
        } => ReportBody::FixedArea(run_fixed_area(&spec.config, *area_wavelengths2, spacings)?),
        ExperimentKind::Asymptotics { ap_counts } => {
            ReportBody::Asymptotics(run_asymptotics(&spec.config, ap_counts)?)
        }
    };
    ReportDocument::new(&spec.config, body)
}

fn scenario_seed(master: u64, realization: usize) -> u64 {
    master.wrapping_add(realization as u64)
}

fn mc_seed(scenario_seed: u64) -> u64 {
    scenario_seed ^ MC_SEED_SALT
}

fn relative_gap(closed: f64, mc: f64) -> f64 {
    if closed == mc {
        0.0
    } else {
        ((closed - mc).abs() / closed.abs().max(f64::MIN_POSITIVE)).min(f64::MAX)
    }
}

fn ordered_sum(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, v| acc + v)
}

/// Closed-form per-user net throughput of both directions.
fn closed_throughputs(
    scenario: &Scenario,
    traces: &riscf_core::correlation::PhaseTraces,
) -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
    let (stats, xi) = scenario.link_stats_with(traces)?;
    let power = scenario.power();
    let plan = scenario.plan();
    let uplink = uplink_sinr_closed_form(&stats, &xi, plan, power)?;
    let eta = default_power_control(&stats.gamma);
    let downlink = downlink_sinr_closed_form(&stats, &xi, plan, &eta, power)?;
    let frame = scenario.frame();
    let tau_p = scenario.params().tau_p;
    let up = net_throughput(&uplink, frame, tau_p, Direction::Uplink)?;
    let down = net_throughput(&downlink, frame, tau_p, Direction::Downlink)?;
    Ok((up, down))
}

/// Monte Carlo per-user throughput with interval edges mapped through the
/// rate function; an unresolved interval collapses onto the point estimate.
fn mc_throughputs(
    estimates: &[SinrEstimate],
    scenario: &Scenario,
    direction: Direction,
) -> anyhow::Result<Vec<(f64, f64, f64)>> {
    let frame = scenario.frame();
    let tau_p = scenario.params().tau_p;
    let mut out = Vec::with_capacity(estimates.len());
    for estimate in estimates {
        let point = net_throughput(&[estimate.sinr], frame, tau_p, direction)?[0];
        let (low, high) = if estimate.half_width.is_finite() {
            let lo = (estimate.sinr - estimate.half_width).max(0.0);
            let hi = estimate.sinr + estimate.half_width;
            let bounds = net_throughput(&[lo, hi], frame, tau_p, direction)?;
            (bounds[0], bounds[1])
        } else {
            (point, point)
        };
        out.push((point, low, high));
    }
    Ok(out)
}

fn user_records(closed: &[f64], mc: &[(f64, f64, f64)]) -> Vec<UserRecord> {
    closed
        .iter()
        .zip(mc.iter())
        .enumerate()
        .map(|(user, (&c, &(point, low, high)))| UserRecord {
            user,
            closed_mbps: c,
            mc_mbps: point,
            mc_low_mbps: low,
            mc_high_mbps: high,
            relative_gap: relative_gap(c, point),
        })
        .collect()
}

/// Closed forms versus Monte Carlo, one record per drawn geometry.
pub fn run_validate(config: &SimConfig, pool: &rayon::ThreadPool) -> anyhow::Result<ValidateBody> {
    let params = config.scenario.to_params();
    let base = base_correlation(&params)?;
    let phase = equal_phase_design(params.ris_elements());
    let mut realizations = Vec::with_capacity(config.run.realizations);
    let mut max_gap = 0.0f64;
    let mut ratios = Vec::new();
    for i in 0..config.run.realizations {
        let seed = scenario_seed(config.run.seed, i);
        let scenario = build_scenario_with(&params, seed, &base)
            .with_context(|| format!("drawing geometry {i}"))?;
        let traces = scenario.phase_traces(&phase);
        let (up_closed, down_closed) = closed_throughputs(&scenario, &traces)?;
        let parts = NetworkParts::from_scenario(&scenario);
        let outcome: McOutcome = parallel::sinr_monte_carlo(
            pool,
            &parts,
            &phase,
            &config.run.monte_carlo(mc_seed(seed)),
            Mode::Both,
        )?;
        let up_mc = mc_throughputs(
            outcome.uplink.as_ref().expect("both-mode uplink"),
            &scenario,
            Direction::Uplink,
        )?;
        let down_mc = mc_throughputs(
            outcome.downlink.as_ref().expect("both-mode downlink"),
            &scenario,
            Direction::Downlink,
        )?;
        let uplink = user_records(&up_closed, &up_mc);
        let downlink = user_records(&down_closed, &down_mc);
        for record in uplink.iter().chain(downlink.iter()) {
            max_gap = max_gap.max(record.relative_gap);
        }
        for (up, down) in up_closed.iter().zip(down_closed.iter()) {
            if *up > 0.0 {
                ratios.push(down / up);
            }
        }
        let mc_up: Vec<f64> = up_mc.iter().map(|t| t.0).collect();
        let mc_down: Vec<f64> = down_mc.iter().map(|t| t.0).collect();
        realizations.push(RealizationRecord {
            realization: i,
            scenario_seed: seed,
            uplink,
            downlink,
            uplink_sum_closed_mbps: ordered_sum(&up_closed),
            uplink_sum_mc_mbps: ordered_sum(&mc_up),
            downlink_sum_closed_mbps: ordered_sum(&down_closed),
            downlink_sum_mc_mbps: ordered_sum(&mc_down),
        });
    }
    let median = median_of(&mut ratios);
    Ok(ValidateBody {
        realizations,
        max_relative_gap: max_gap,
        median_downlink_uplink_ratio: median,
    })
}

fn median_of(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

/// Mean sum throughput per variant and blocking probability. All variants
/// and probabilities share geometry seeds, so curves are coupled draw by
/// draw.
pub fn run_sweep_blocking(
    config: &SimConfig,
    variants: &[VariantConfig],
    grid: &[f64],
) -> anyhow::Result<SweepBody> {
    let base_params = config.scenario.to_params();
    let base = base_correlation(&base_params)?;
    let phase = equal_phase_design(base_params.ris_elements());
    let mut traces = None;
    let mut points = Vec::new();
    for &variant in variants {
        for &p in grid {
            let params = ScenarioParams {
                variant: variant.to_core(),
                unblocked_probability: p,
                ..base_params.clone()
            };
            let mut up_total = 0.0;
            let mut down_total = 0.0;
            for i in 0..config.run.realizations {
                let scenario =
                    build_scenario_with(&params, scenario_seed(config.run.seed, i), &base)?;
                let traces =
                    traces.get_or_insert_with(|| scenario.phase_traces(&phase));
                let (up, down) = closed_throughputs(&scenario, traces)?;
                up_total += ordered_sum(&up);
                down_total += ordered_sum(&down);
            }
            let n = config.run.realizations as f64;
            points.push(SweepPoint {
                variant: variant.as_str().to_string(),
                unblocked_probability: p,
                uplink_sum_mbps: up_total / n,
                downlink_sum_mbps: down_total / n,
            });
        }
    }
    Ok(SweepBody { points })
}

/// Closed-form per-user throughput samples per variant, pooled over
/// realizations.
pub fn run_cdf(config: &SimConfig, variants: &[VariantConfig]) -> anyhow::Result<CdfBody> {
    let base_params = config.scenario.to_params();
    let base = base_correlation(&base_params)?;
    let phase = equal_phase_design(base_params.ris_elements());
    let mut traces = None;
    let mut samples = Vec::new();
    for &variant in variants {
        let params = ScenarioParams {
            variant: variant.to_core(),
            ..base_params.clone()
        };
        for i in 0..config.run.realizations {
            let scenario =
                build_scenario_with(&params, scenario_seed(config.run.seed, i), &base)?;
            let traces = traces.get_or_insert_with(|| scenario.phase_traces(&phase));
            let (up, down) = closed_throughputs(&scenario, traces)?;
            for (direction, values) in [("uplink", &up), ("downlink", &down)] {
                for (user, &value) in values.iter().enumerate() {
                    samples.push(CdfSample {
                        variant: variant.as_str().to_string(),
                        direction: direction.to_string(),
                        user,
                        value_mbps: value,
                    });
                }
            }
        }
    }
    Ok(CdfBody { samples })
}

fn mc_sum_and_width(
    estimates: &[SinrEstimate],
    scenario: &Scenario,
    direction: Direction,
) -> anyhow::Result<(f64, f64)> {
    let triples = mc_throughputs(estimates, scenario, direction)?;
    let points: Vec<f64> = triples.iter().map(|t| t.0).collect();
    let width = triples
        .iter()
        .fold(0.0, |acc, &(_, low, high)| acc + 0.5 * (high - low));
    Ok((ordered_sum(&points), width))
}

/// Equal-phase versus random-phase sum throughput under the sinc-correlated
/// and the independent element model. Closed forms run on every realization;
/// Monte Carlo runs once per pairing on the first geometry.
pub fn run_phase_compare(
    config: &SimConfig,
    pool: &rayon::ThreadPool,
) -> anyhow::Result<PhaseBody> {
    let mut combos = Vec::new();
    for correlation in [CorrelationConfig::Sinc, CorrelationConfig::Independent] {
        let params = ScenarioParams {
            correlation_model: correlation.to_core(),
            ..config.scenario.to_params()
        };
        let base = base_correlation(&params)?;
        let elements = params.ris_elements();
        let mut equal_traces = None;
        for policy in ["equal", "random"] {
            let mut samples = Vec::new();
            let mut up_total = 0.0;
            let mut down_total = 0.0;
            let mut mc_fields = (None, None, None, None);
            for i in 0..config.run.realizations {
                let seed = scenario_seed(config.run.seed, i);
                let scenario = build_scenario_with(&params, seed, &base)?;
                let phase = if policy == "equal" {
                    equal_phase_design(elements)
                } else {
                    let mut rng = trial_rng(seed, PHASE_DRAW_STREAM);
                    random_phase_design(elements, &mut rng)
                };
                let traces = if policy == "equal" {
                    *equal_traces.get_or_insert_with(|| scenario.phase_traces(&phase))
                } else {
                    scenario.phase_traces(&phase)
                };
                let (up, down) = closed_throughputs(&scenario, &traces)?;
                let up_sum = ordered_sum(&up);
                let down_sum = ordered_sum(&down);
                up_total += up_sum;
                down_total += down_sum;
                samples.push(SumSample {
                    realization: i,
                    direction: "uplink".to_string(),
                    value_mbps: up_sum,
                });
                samples.push(SumSample {
                    realization: i,
                    direction: "downlink".to_string(),
                    value_mbps: down_sum,
                });
                if i == 0 && config.run.trials > 0 {
                    let parts = NetworkParts::from_scenario(&scenario);
                    let outcome = parallel::sinr_monte_carlo(
                        pool,
                        &parts,
                        &phase,
                        &config.run.monte_carlo(mc_seed(seed)),
                        Mode::Both,
                    )?;
                    let (up_mc, up_width) = mc_sum_and_width(
                        outcome.uplink.as_ref().expect("both-mode uplink"),
                        &scenario,
                        Direction::Uplink,
                    )?;
                    let (down_mc, down_width) = mc_sum_and_width(
                        outcome.downlink.as_ref().expect("both-mode downlink"),
                        &scenario,
                        Direction::Downlink,
                    )?;
                    mc_fields = (Some(up_mc), Some(up_width), Some(down_mc), Some(down_width));
                }
            }
            let n = config.run.realizations as f64;
            combos.push(PhaseCombo {
                correlation: correlation.as_str().to_string(),
                policy: policy.to_string(),
                uplink_sum_mean_mbps: up_total / n,
                downlink_sum_mean_mbps: down_total / n,
                mc_uplink_sum_mbps: mc_fields.0,
                mc_uplink_half_width_mbps: mc_fields.1,
                mc_downlink_sum_mbps: mc_fields.2,
                mc_downlink_half_width_mbps: mc_fields.3,
                samples,
            });
        }
    }
    Ok(PhaseBody { combos })
}

fn size_study(
    config: &SimConfig,
    settings: &[(usize, usize, f64, f64)],
) -> anyhow::Result<SizeBody> {
    let mut points = Vec::new();
    let mut samples = Vec::new();
    for &(columns, rows, spacing_h, spacing_v) in settings {
        let params = ScenarioParams {
            ris_columns: columns,
            ris_rows: rows,
            spacing_h_wavelengths: spacing_h,
            spacing_v_wavelengths: spacing_v,
            ..config.scenario.to_params()
        };
        let base = base_correlation(&params)?;
        let elements = params.ris_elements();
        let phase = equal_phase_design(elements);
        let mut traces = None;
        let mut up_total = 0.0;
        let mut down_total = 0.0;
        for i in 0..config.run.realizations {
            let scenario =
                build_scenario_with(&params, scenario_seed(config.run.seed, i), &base)?;
            let traces = traces.get_or_insert_with(|| scenario.phase_traces(&phase));
            let (up, down) = closed_throughputs(&scenario, traces)?;
            let up_sum = ordered_sum(&up);
            let down_sum = ordered_sum(&down);
            up_total += up_sum;
            down_total += down_sum;
            for (direction, value) in [("uplink", up_sum), ("downlink", down_sum)] {
                samples.push(SizeSample {
                    spacing_h_wavelengths: spacing_h,
                    spacing_v_wavelengths: spacing_v,
                    elements,
                    realization: i,
                    direction: direction.to_string(),
                    value_mbps: value,
                });
            }
        }
        let n = config.run.realizations as f64;
        points.push(SizePoint {
            spacing_h_wavelengths: spacing_h,
            spacing_v_wavelengths: spacing_v,
            elements,
            uplink_sum_mean_mbps: up_total / n,
            downlink_sum_mean_mbps: down_total / n,
        });
    }
    Ok(SizeBody { points, samples })
}

/// Sum throughput across element spacings at the configured element count.
/// Settings share geometry seeds, so the comparison is coupled draw by draw.
pub fn run_element_size(
    config: &SimConfig,
    spacings: &[(f64, f64)],
) -> anyhow::Result<SizeBody> {
    let settings: Vec<(usize, usize, f64, f64)> = spacings
        .iter()
        .map(|&(h, v)| {
            (
                config.scenario.ris_columns,
                config.scenario.ris_rows,
                h,
                v,
            )
        })
        .collect();
    size_study(config, &settings)
}

/// Grid shape for `n` elements: the widest rectangle no taller than wide.
/// The row count rounds up, so the grid may slightly exceed `n`.
#[must_use]
pub fn near_square_grid(n: usize) -> (usize, usize) {
    let n = n.max(1);
    let columns = (n as f64).sqrt().floor() as usize;
    let columns = columns.max(1);
    let rows = n.div_ceil(columns);
    (columns, rows)
}

/// Sum throughput across element spacings with the element count adapted to
/// keep the total aperture at `area_wavelengths2`.
pub fn run_fixed_area(
    config: &SimConfig,
    area_wavelengths2: f64,
    spacings: &[f64],
) -> anyhow::Result<SizeBody> {
    let settings: Vec<(usize, usize, f64, f64)> = spacings
        .iter()
        .map(|&d| {
            let wanted = (area_wavelengths2 / (d * d)).round().max(1.0) as usize;
            let (columns, rows) = near_square_grid(wanted);
            (columns, rows, d, d)
        })
        .collect();
    size_study(config, &settings)
}

/// RMS deviation of the normalized decision statistics from their limits,
/// along a nested AP population: each realization draws the largest network
/// once and every smaller count keeps its leading APs.
pub fn run_asymptotics(
    config: &SimConfig,
    ap_counts: &[usize],
) -> anyhow::Result<AsymptoticsBody> {
    let largest = *ap_counts.last().expect("validated non-empty");
    let params = ScenarioParams {
        ap_count: largest,
        ..config.scenario.to_params()
    };
    let base = base_correlation(&params)?;
    let phase = equal_phase_design(params.ris_elements());
    let mut up_acc = vec![0.0f64; ap_counts.len()];
    let mut down_acc = vec![0.0f64; ap_counts.len()];
    for i in 0..config.run.realizations {
        let seed = scenario_seed(config.run.seed, i);
        let master = build_scenario_with(&params, seed, &base)?;
        let mc = config.run.monte_carlo(mc_seed(seed));
        for (j, &aps) in ap_counts.iter().enumerate() {
            let correlations = master.correlations().truncate_aps(aps)?;
            let beta: DMatrix<f64> = master.beta().rows(0, aps).into_owned();
            let parts = NetworkParts {
                correlations: &correlations,
                beta: &beta,
                plan: master.plan(),
                power: master.power(),
            };
            let up =
                uplink_decision_spread(&parts, &phase, &mc, AsymptoticRegime::ManyAps)?;
            let down =
                downlink_decision_spread(&parts, &phase, &mc, AsymptoticRegime::ManyAps)?;
            up_acc[j] += ordered_sum(&up) / up.len() as f64;
            down_acc[j] += ordered_sum(&down) / down.len() as f64;
        }
    }
    let n = config.run.realizations as f64;
    let points = ap_counts
        .iter()
        .enumerate()
        .map(|(j, &aps)| AsymptoticsPoint {
            ap_count: aps,
            uplink_spread: up_acc[j] / n,
            downlink_spread: down_acc[j] / n,
        })
        .collect();
    Ok(AsymptoticsBody { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;

    fn tiny_spec(kind: ExperimentKind) -> ExperimentSpec {
        ExperimentSpec {
            config: preset("tiny").unwrap(),
            kind,
            variants: VariantConfig::ALL.to_vec(),
        }
    }

    #[test]
    fn grid_shapes_cover_the_requested_count() {
        assert_eq!(near_square_grid(16), (4, 4));
        assert_eq!(near_square_grid(10), (3, 4));
        assert_eq!(near_square_grid(1), (1, 1));
        let (c, r) = near_square_grid(399);
        assert!(c * r >= 399);
    }

    #[test]
    fn sweep_rejects_probabilities_outside_the_interval() {
        let spec = tiny_spec(ExperimentKind::SweepBlocking { grid: vec![1.5] });
        assert!(spec.validate().is_err());
    }

    #[test]
    fn ascending_ap_counts_are_enforced() {
        let spec = tiny_spec(ExperimentKind::Asymptotics {
            ap_counts: vec![8, 4],
        });
        assert!(spec.validate().is_err());
    }

    #[test]
    fn reports_are_reproducible_for_a_fixed_seed() {
        let spec = tiny_spec(ExperimentKind::Cdf);
        let a = run(&spec).unwrap();
        let b = run(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn realization_sums_match_their_user_columns() {
        let mut spec = tiny_spec(ExperimentKind::Validate);
        spec.config.run.realizations = 2;
        spec.config.run.trials = 500;
        let doc = run(&spec).unwrap();
        let ReportBody::Validate(body) = &doc.body else {
            panic!("wrong body kind");
        };
        for record in &body.realizations {
            let up: f64 = record.uplink.iter().map(|u| u.closed_mbps).sum();
            assert_eq!(up, record.uplink_sum_closed_mbps);
            let down_mc: f64 = record.downlink.iter().map(|u| u.mc_mbps).sum();
            assert_eq!(down_mc, record.downlink_sum_mc_mbps);
        }
    }

    #[test]
    fn degenerate_surface_makes_phase_policies_coincide() {
        let mut spec = tiny_spec(ExperimentKind::PhaseCompare);
        spec.config.scenario.ris_gain_scale = 0.0;
        spec.config.run.realizations = 2;
        spec.config.run.trials = 500;
        let doc = run(&spec).unwrap();
        let ReportBody::PhaseCompare(body) = &doc.body else {
            panic!("wrong body kind");
        };
        assert_eq!(body.combos.len(), 4);
        let reference = &body.combos[0];
        for combo in &body.combos[1..] {
            assert_eq!(combo.uplink_sum_mean_mbps, reference.uplink_sum_mean_mbps);
            assert_eq!(
                combo.downlink_sum_mean_mbps,
                reference.downlink_sum_mean_mbps
            );
        }
    }
}
