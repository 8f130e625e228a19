//! Machine-readable experiment output: one JSON document per run plus a flat
//! CSV rendering of its samples or table.
//!
//! Reports embed the full configuration and master seed, so every number in
//! them can be regenerated from the file alone.

use std::io::Write as _;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;

/// Version tag of the JSON document layout.
pub const REPORT_SCHEMA: &str = "riscf-report/1";
/// Version tag written as the first line of every CSV file.
pub const CSV_SCHEMA: &str = "riscf-csv/1";

/// Closed-form versus Monte Carlo throughput of one user in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    /// User index.
    pub user: usize,
    /// Closed-form net throughput in Mbps.
    pub closed_mbps: f64,
    /// Monte Carlo net throughput in Mbps.
    pub mc_mbps: f64,
    /// Throughput at the lower edge of the 95% SINR interval.
    pub mc_low_mbps: f64,
    /// Throughput at the upper edge of the 95% SINR interval.
    pub mc_high_mbps: f64,
    /// `|closed - mc| / closed`, capped to stay finite.
    pub relative_gap: f64,
}

/// Both directions of one drawn geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    /// Realization index under the master seed.
    pub realization: usize,
    /// Seed the instance was drawn with.
    pub scenario_seed: u64,
    /// Per-user uplink results.
    pub uplink: Vec<UserRecord>,
    /// Per-user downlink results.
    pub downlink: Vec<UserRecord>,
    /// Sum of the closed-form uplink column, in user order.
    pub uplink_sum_closed_mbps: f64,
    /// Sum of the Monte Carlo uplink column, in user order.
    pub uplink_sum_mc_mbps: f64,
    /// Sum of the closed-form downlink column.
    pub downlink_sum_closed_mbps: f64,
    /// Sum of the Monte Carlo downlink column.
    pub downlink_sum_mc_mbps: f64,
}

/// Output of the closed-form versus Monte Carlo comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateBody {
    /// One record per drawn geometry.
    pub realizations: Vec<RealizationRecord>,
    /// Largest per-user relative gap across directions and realizations.
    pub max_relative_gap: f64,
    /// Median of the per-user downlink/uplink closed-form ratio, when any
    /// user carries uplink throughput.
    pub median_downlink_uplink_ratio: Option<f64>,
}

/// Mean sum throughput of one variant at one blocking level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// System variant label.
    pub variant: String,
    /// Probability a direct link is unblocked.
    pub unblocked_probability: f64,
    /// Mean uplink sum throughput over realizations, Mbps.
    pub uplink_sum_mbps: f64,
    /// Mean downlink sum throughput over realizations, Mbps.
    pub downlink_sum_mbps: f64,
}

/// Output of the blocking sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepBody {
    /// One point per (variant, probability), variants outer.
    pub points: Vec<SweepPoint>,
}

/// One per-user throughput draw for an empirical CDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfSample {
    /// Label of what produced the sample (system variant, or estimator for
    /// the validation run).
    pub variant: String,
    /// `uplink` or `downlink`.
    pub direction: String,
    /// User index.
    pub user: usize,
    /// Net throughput in Mbps.
    pub value_mbps: f64,
}

/// Output of the per-user CDF run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfBody {
    /// Pooled samples over realizations and users.
    pub samples: Vec<CdfSample>,
}

/// One sum-throughput draw of a phase-policy combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumSample {
    /// Realization index.
    pub realization: usize,
    /// `uplink` or `downlink`.
    pub direction: String,
    /// Sum net throughput in Mbps.
    pub value_mbps: f64,
}

/// Closed-form and Monte Carlo results of one correlation/policy pairing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCombo {
    /// `sinc` or `independent`.
    pub correlation: String,
    /// `equal` or `random`.
    pub policy: String,
    /// Mean closed-form uplink sum throughput, Mbps.
    pub uplink_sum_mean_mbps: f64,
    /// Mean closed-form downlink sum throughput, Mbps.
    pub downlink_sum_mean_mbps: f64,
    /// Monte Carlo uplink sum throughput on the first realization.
    pub mc_uplink_sum_mbps: Option<f64>,
    /// Half-width of the uplink sum, from the per-user intervals.
    pub mc_uplink_half_width_mbps: Option<f64>,
    /// Monte Carlo downlink sum throughput on the first realization.
    pub mc_downlink_sum_mbps: Option<f64>,
    /// Half-width of the downlink sum.
    pub mc_downlink_half_width_mbps: Option<f64>,
    /// Per-realization closed-form sum draws.
    pub samples: Vec<SumSample>,
}

/// Output of the phase-policy comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseBody {
    /// The four correlation/policy pairings.
    pub combos: Vec<PhaseCombo>,
}

/// Mean sum throughput at one element-size setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizePoint {
    /// Horizontal spacing in wavelengths.
    pub spacing_h_wavelengths: f64,
    /// Vertical spacing in wavelengths.
    pub spacing_v_wavelengths: f64,
    /// Elements of the resulting grid.
    pub elements: usize,
    /// Mean uplink sum throughput, Mbps.
    pub uplink_sum_mean_mbps: f64,
    /// Mean downlink sum throughput, Mbps.
    pub downlink_sum_mean_mbps: f64,
}

/// One sum-throughput draw at one element-size setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSample {
    /// Horizontal spacing in wavelengths.
    pub spacing_h_wavelengths: f64,
    /// Vertical spacing in wavelengths.
    pub spacing_v_wavelengths: f64,
    /// Elements of the grid.
    pub elements: usize,
    /// Realization index.
    pub realization: usize,
    /// `uplink` or `downlink`.
    pub direction: String,
    /// Sum net throughput in Mbps.
    pub value_mbps: f64,
}

/// Output of the element-size and fixed-area studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeBody {
    /// One point per setting, in input order.
    pub points: Vec<SizePoint>,
    /// Per-realization draws behind the means.
    pub samples: Vec<SizeSample>,
}

/// Concentration of the normalized decision statistic at one network size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsPoint {
    /// Number of APs.
    pub ap_count: usize,
    /// RMS deviation of the uplink statistic from its limit, averaged over
    /// users and realizations.
    pub uplink_spread: f64,
    /// Downlink counterpart.
    pub downlink_spread: f64,
}

/// Output of the convergence sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsBody {
    /// One point per AP count, ascending.
    pub points: Vec<AsymptoticsPoint>,
}

/// Experiment-specific payload of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ReportBody {
    /// Closed-form versus Monte Carlo comparison.
    Validate(ValidateBody),
    /// Sum throughput versus blocking probability.
    SweepBlocking(SweepBody),
    /// Per-user throughput CDF samples.
    Cdf(CdfBody),
    /// Equal versus random phases under both correlation models.
    PhaseCompare(PhaseBody),
    /// Sum throughput versus element size.
    ElementSize(SizeBody),
    /// Sum throughput at constant total aperture.
    FixedArea(SizeBody),
    /// Concentration of the decision statistics.
    Asymptotics(AsymptoticsBody),
}

impl ReportBody {
    /// Stable kind label, also used as the CSV schema suffix.
    #[must_use]
    pub fn kind(&self) -> &'static str {
        match self {
            ReportBody::Validate(_) => "validate",
            ReportBody::SweepBlocking(_) => "sweep-blocking",
            ReportBody::Cdf(_) => "cdf",
            ReportBody::PhaseCompare(_) => "phase-compare",
            ReportBody::ElementSize(_) => "element-size",
            ReportBody::FixedArea(_) => "fixed-area",
            ReportBody::Asymptotics(_) => "asymptotics",
        }
    }
}

/// One complete experiment result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    /// Layout version, [`REPORT_SCHEMA`].
    pub schema: String,
    /// Experiment kind label.
    pub kind: String,
    /// Master seed of the run.
    pub seed: u64,
    /// Digest of the canonical TOML rendering of the configuration.
    pub config_digest: String,
    /// The configuration itself.
    pub config: SimConfig,
    /// Experiment payload.
    pub body: ReportBody,
}

impl ReportDocument {
    /// Wraps a payload with the configuration it came from.
    ///
    /// The echoed configuration pins the worker count to zero: the thread
    /// count never changes a result, so reports from the same experiment are
    /// byte-identical however it was scheduled.
    pub fn new(config: &SimConfig, body: ReportBody) -> anyhow::Result<Self> {
        let mut config = config.clone();
        config.run.threads = 0;
        Ok(Self {
            schema: REPORT_SCHEMA.to_string(),
            kind: body.kind().to_string(),
            seed: config.run.seed,
            config_digest: config_digest(&config)?,
            config,
            body,
        })
    }
}

/// FNV-1a digest of the canonical TOML rendering, as fixed-width hex.
pub fn config_digest(config: &SimConfig) -> anyhow::Result<String> {
    let text = config.to_toml()?;
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in text.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    Ok(format!("{hash:016x}"))
}

/// Pretty JSON rendering with a trailing newline.
pub fn json_string(doc: &ReportDocument) -> anyhow::Result<String> {
    let mut text = serde_json::to_string_pretty(doc).context("serializing report")?;
    text.push('\n');
    Ok(text)
}

/// Writes the JSON document.
pub fn write_json(doc: &ReportDocument, path: &Path) -> anyhow::Result<()> {
    std::fs::write(path, json_string(doc)?)
        .with_context(|| format!("writing report {}", path.display()))
}

fn num(value: f64) -> String {
    let mut buffer = ryu_format(value);
    if buffer.ends_with(".0") {
        buffer.truncate(buffer.len() - 2);
    }
    buffer
}

// Shortest round-trip float rendering, matching what the JSON writer emits.
fn ryu_format(value: f64) -> String {
    let mut out = Vec::new();
    // serde_json's float path is ryu; reuse it for byte-stable CSV output
    serde_json::to_writer(&mut out, &value).expect("float serialization");
    String::from_utf8(out).expect("ascii float")
}

/// Flat CSV rendering of the samples or table of a report. Starts with a
/// schema comment line, then a header row; every value column is `_mbps`
/// except the asymptotics spread.
pub fn csv_string(doc: &ReportDocument) -> anyhow::Result<String> {
    let mut raw = Vec::new();
    writeln!(raw, "# {} {}", CSV_SCHEMA, doc.body.kind())?;
    let mut w = csv::Writer::from_writer(raw);
    match &doc.body {
        ReportBody::Validate(body) => {
            w.write_record(["variant", "direction", "user", "value_mbps"])?;
            for record in &body.realizations {
                for (direction, users) in
                    [("uplink", &record.uplink), ("downlink", &record.downlink)]
                {
                    for user in users {
                        let index = user.user.to_string();
                        w.write_record([
                            "closed-form",
                            direction,
                            &index,
                            &num(user.closed_mbps),
                        ])?;
                        w.write_record([
                            "monte-carlo",
                            direction,
                            &index,
                            &num(user.mc_mbps),
                        ])?;
                    }
                }
            }
        }
        ReportBody::SweepBlocking(body) => {
            w.write_record(["variant", "direction", "unblocked_probability", "value_mbps"])?;
            for point in &body.points {
                for (direction, value) in [
                    ("uplink", point.uplink_sum_mbps),
                    ("downlink", point.downlink_sum_mbps),
                ] {
                    w.write_record([
                        point.variant.as_str(),
                        direction,
                        &num(point.unblocked_probability),
                        &num(value),
                    ])?;
                }
            }
        }
        ReportBody::Cdf(body) => {
            w.write_record(["variant", "direction", "user", "value_mbps"])?;
            for sample in &body.samples {
                w.write_record([
                    sample.variant.as_str(),
                    &sample.direction,
                    &sample.user.to_string(),
                    &num(sample.value_mbps),
                ])?;
            }
        }
        ReportBody::PhaseCompare(body) => {
            w.write_record(["correlation", "policy", "direction", "realization", "value_mbps"])?;
            for combo in &body.combos {
                for sample in &combo.samples {
                    w.write_record([
                        combo.correlation.as_str(),
                        &combo.policy,
                        &sample.direction,
                        &sample.realization.to_string(),
                        &num(sample.value_mbps),
                    ])?;
                }
            }
        }
        ReportBody::ElementSize(body) | ReportBody::FixedArea(body) => {
            w.write_record([
                "spacing_h_wavelengths",
                "spacing_v_wavelengths",
                "elements",
                "direction",
                "realization",
                "value_mbps",
            ])?;
            for sample in &body.samples {
                w.write_record([
                    num(sample.spacing_h_wavelengths),
                    num(sample.spacing_v_wavelengths),
                    sample.elements.to_string(),
                    sample.direction.clone(),
                    sample.realization.to_string(),
                    num(sample.value_mbps),
                ])?;
            }
        }
        ReportBody::Asymptotics(body) => {
            w.write_record(["direction", "ap_count", "spread"])?;
            for point in &body.points {
                w.write_record([
                    "uplink",
                    &point.ap_count.to_string(),
                    &num(point.uplink_spread),
                ])?;
            }
            for point in &body.points {
                w.write_record([
                    "downlink",
                    &point.ap_count.to_string(),
                    &num(point.downlink_spread),
                ])?;
            }
        }
    }
    let raw = w.into_inner().context("flushing CSV buffer")?;
    Ok(String::from_utf8(raw).expect("CSV output is ascii"))
}

/// Writes the CSV rendering.
pub fn write_csv(doc: &ReportDocument, path: &Path) -> anyhow::Result<()> {
    std::fs::write(path, csv_string(doc)?)
        .with_context(|| format!("writing CSV {}", path.display()))
}
