//! Closed-form ergodic SINR and net throughput for both link directions.
//!
//! Both directions use maximum-ratio processing on the aggregated-channel
//! estimates and the hardening bound, so the SINR of every user is a ratio of
//! second-order statistics only: the estimate powers `gamma`, the channel
//! powers `delta`, the estimator coefficients `c`, and the fourth-moment
//! traces `xi`. Pilot-sharing users add two coherent interference terms that
//! vanish under orthogonal pilots; the `_orthogonal` variants spell out that
//! reduced form and agree with the general ones bit for bit when every user
//! has a dedicated pilot.
//!
//! All powers are normalized to the noise floor: `pilot_energy` is `p tau_p`
//! and the two data SNRs are per-symbol transmit powers over the noise power.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimation::{EstimationStats, PilotPlan};
use crate::fm;
use crate::Direction;

/// Tolerance on the per-AP downlink power budget `sum_k eta_mk gamma_mk <= 1`.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

/// Normalized transmit powers of the system.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerConfig {
    /// Pilot energy `p tau_p` over the noise power.
    pub pilot_energy: f64,
    /// Uplink data SNR `rho_u`.
    pub uplink_snr: f64,
    /// Downlink data SNR `rho_d`.
    pub downlink_snr: f64,
    /// Per-user uplink power fractions `eta_k` in `[0, 1]`.
    pub uplink_weights: Vec<f64>,
}

impl PowerConfig {
    /// Validates the normalized powers.
    pub fn new(
        pilot_energy: f64,
        uplink_snr: f64,
        downlink_snr: f64,
        uplink_weights: Vec<f64>,
    ) -> Result<Self> {
        if !(pilot_energy.is_finite() && pilot_energy > 0.0) {
            return Err(Error::InvalidParameter {
                name: "pilot_energy",
                value: pilot_energy,
            });
        }
        if !(uplink_snr.is_finite() && uplink_snr >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "uplink_snr",
                value: uplink_snr,
            });
        }
        if !(downlink_snr.is_finite() && downlink_snr >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "downlink_snr",
                value: downlink_snr,
            });
        }
        for &weight in &uplink_weights {
            if !(weight.is_finite() && (0.0..=1.0).contains(&weight)) {
                return Err(Error::InvalidParameter {
                    name: "uplink_weight",
                    value: weight,
                });
            }
        }
        Ok(Self {
            pilot_energy,
            uplink_snr,
            downlink_snr,
            uplink_weights,
        })
    }

    /// Full uplink power for every user.
    pub fn full_uplink(pilot_energy: f64, uplink_snr: f64, downlink_snr: f64, users: usize) -> Result<Self> {
        Self::new(
            pilot_energy,
            uplink_snr,
            downlink_snr,
            alloc::vec![1.0; users],
        )
    }
}

fn check_stats(
    stats: &EstimationStats,
    xi: &DMatrix<f64>,
    plan: &PilotPlan,
    users_weights: Option<usize>,
) -> Result<(usize, usize)> {
    let aps = stats.gamma.nrows();
    let users = stats.gamma.ncols();
    if xi.nrows() != aps || xi.ncols() != users {
        return Err(Error::DimensionMismatch {
            context: "fourth-moment grid",
            expected: aps * users,
            got: xi.nrows() * xi.ncols(),
        });
    }
    if plan.users() != users {
        return Err(Error::DimensionMismatch {
            context: "pilot assignment",
            expected: users,
            got: plan.users(),
        });
    }
    if let Some(len) = users_weights {
        if len != users {
            return Err(Error::DimensionMismatch {
                context: "uplink weights",
                expected: users,
                got: len,
            });
        }
    }
    Ok((aps, users))
}

/// Ergodic uplink SINR of every user under maximum-ratio combining with
/// arbitrary pilot sharing.
pub fn uplink_sinr_closed_form(
    stats: &EstimationStats,
    xi: &DMatrix<f64>,
    plan: &PilotPlan,
    power: &PowerConfig,
) -> Result<Vec<f64>> {
    let (aps, users) = check_stats(stats, xi, plan, Some(power.uplink_weights.len()))?;
    let rho = power.uplink_snr;
    let energy = power.pilot_energy;
    let mut sinr = Vec::with_capacity(users);
    for k in 0..users {
        let mut gamma_sum = 0.0;
        for m in 0..aps {
            gamma_sum += stats.gamma[(m, k)];
        }
        let numerator = rho * power.uplink_weights[k] * gamma_sum * gamma_sum;
        if numerator == 0.0 {
            sinr.push(0.0);
            continue;
        }
        // coherent pilot contamination, zero when nobody shares the pilot
        let mut coherent = 0.0;
        for other in plan.copilots(k) {
            if other == k {
                continue;
            }
            let mut fourth = 0.0;
            let mut aligned = 0.0;
            for m in 0..aps {
                let c = stats.c[(m, k)];
                fourth += c * c * xi[(m, other)];
                aligned += c * stats.delta[(m, other)];
            }
            coherent += 2.0 * rho * energy * power.uplink_weights[other] * fourth
                + energy * rho * power.uplink_weights[other] * aligned * aligned;
        }
        let mut self_fourth = 0.0;
        for m in 0..aps {
            let c = stats.c[(m, k)];
            self_fourth += c * c * xi[(m, k)];
        }
        let mut beamforming_gain = 0.0;
        for other in 0..users {
            let mut cross = 0.0;
            for m in 0..aps {
                cross += stats.gamma[(m, k)] * stats.delta[(m, other)];
            }
            beamforming_gain += rho * power.uplink_weights[other] * cross;
        }
        let noncoherent = 2.0 * rho * energy * power.uplink_weights[k] * self_fourth + beamforming_gain;
        sinr.push(numerator / (coherent + noncoherent + gamma_sum));
    }
    Ok(sinr)
}

/// Uplink SINR specialized to one dedicated pilot per user.
///
/// The plan must actually be orthogonal; the result matches
/// [`uplink_sinr_closed_form`] exactly in that case.
pub fn uplink_sinr_orthogonal(
    stats: &EstimationStats,
    xi: &DMatrix<f64>,
    plan: &PilotPlan,
    power: &PowerConfig,
) -> Result<Vec<f64>> {
    if !plan.is_orthogonal() {
        return Err(Error::InvalidParameter {
            name: "orthogonal_plan",
            value: plan.tau_p() as f64,
        });
    }
    let (aps, users) = check_stats(stats, xi, plan, Some(power.uplink_weights.len()))?;
    let rho = power.uplink_snr;
    let energy = power.pilot_energy;
    let mut sinr = Vec::with_capacity(users);
    for k in 0..users {
        let mut gamma_sum = 0.0;
        for m in 0..aps {
            gamma_sum += stats.gamma[(m, k)];
        }
        let numerator = rho * power.uplink_weights[k] * gamma_sum * gamma_sum;
        if numerator == 0.0 {
            sinr.push(0.0);
            continue;
        }
        let mut self_fourth = 0.0;
        for m in 0..aps {
            let c = stats.c[(m, k)];
            self_fourth += c * c * xi[(m, k)];
        }
        let mut beamforming_gain = 0.0;
        for other in 0..users {
            let mut cross = 0.0;
            for m in 0..aps {
                cross += stats.gamma[(m, k)] * stats.delta[(m, other)];
            }
            beamforming_gain += rho * power.uplink_weights[other] * cross;
        }
        let noncoherent = 2.0 * rho * energy * power.uplink_weights[k] * self_fourth + beamforming_gain;
        sinr.push(numerator / (0.0 + noncoherent + gamma_sum));
    }
    Ok(sinr)
}

fn check_downlink_budget(stats: &EstimationStats, eta: &DMatrix<f64>) -> Result<()> {
    let aps = stats.gamma.nrows();
    let users = stats.gamma.ncols();
    if eta.nrows() != aps || eta.ncols() != users {
        return Err(Error::DimensionMismatch {
            context: "downlink power coefficients",
            expected: aps * users,
            got: eta.nrows() * eta.ncols(),
        });
    }
    for m in 0..aps {
        let mut load = 0.0;
        for k in 0..users {
            let value = eta[(m, k)];
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "eta",
                    value,
                });
            }
            load += value * stats.gamma[(m, k)];
        }
        if load > 1.0 + BUDGET_TOLERANCE {
            return Err(Error::PowerBudgetExceeded { ap: m, load });
        }
    }
    Ok(())
}

/// Ergodic downlink SINR of every user under maximum-ratio precoding with
/// per-AP power coefficients `eta` (`M x K`).
pub fn downlink_sinr_closed_form(
    stats: &EstimationStats,
    xi: &DMatrix<f64>,
    plan: &PilotPlan,
    eta: &DMatrix<f64>,
    power: &PowerConfig,
) -> Result<Vec<f64>> {
    let (aps, users) = check_stats(stats, xi, plan, None)?;
    check_downlink_budget(stats, eta)?;
    let rho = power.downlink_snr;
    let energy = power.pilot_energy;
    let mut sinr = Vec::with_capacity(users);
    for k in 0..users {
        let mut amplitude = 0.0;
        for m in 0..aps {
            amplitude += fm::sqrt(eta[(m, k)]) * stats.gamma[(m, k)];
        }
        let numerator = rho * amplitude * amplitude;
        if numerator == 0.0 {
            sinr.push(0.0);
            continue;
        }
        let mut coherent = 0.0;
        for other in plan.copilots(k) {
            if other == k {
                continue;
            }
            let mut fourth = 0.0;
            let mut aligned = 0.0;
            for m in 0..aps {
                let c = stats.c[(m, other)];
                fourth += eta[(m, other)] * c * c * xi[(m, k)];
                aligned += fm::sqrt(eta[(m, other)]) * c * stats.delta[(m, k)];
            }
            coherent += 2.0 * rho * energy * fourth + rho * energy * aligned * aligned;
        }
        let mut self_fourth = 0.0;
        for m in 0..aps {
            let c = stats.c[(m, k)];
            self_fourth += eta[(m, k)] * c * c * xi[(m, k)];
        }
        let mut beamforming_gain = 0.0;
        for other in 0..users {
            let mut cross = 0.0;
            for m in 0..aps {
                cross += eta[(m, other)] * stats.gamma[(m, other)] * stats.delta[(m, k)];
            }
            beamforming_gain += rho * cross;
        }
        let noncoherent = 2.0 * rho * energy * self_fourth + beamforming_gain;
        sinr.push(numerator / (coherent + noncoherent + 1.0));
    }
    Ok(sinr)
}

/// Downlink SINR specialized to orthogonal pilots, matching
/// [`downlink_sinr_closed_form`] exactly on such plans.
pub fn downlink_sinr_orthogonal(
    stats: &EstimationStats,
    xi: &DMatrix<f64>,
    plan: &PilotPlan,
    eta: &DMatrix<f64>,
    power: &PowerConfig,
) -> Result<Vec<f64>> {
    if !plan.is_orthogonal() {
        return Err(Error::InvalidParameter {
            name: "orthogonal_plan",
            value: plan.tau_p() as f64,
        });
    }
    let (aps, users) = check_stats(stats, xi, plan, None)?;
    check_downlink_budget(stats, eta)?;
    let rho = power.downlink_snr;
    let energy = power.pilot_energy;
    let mut sinr = Vec::with_capacity(users);
    for k in 0..users {
        let mut amplitude = 0.0;
        for m in 0..aps {
            amplitude += fm::sqrt(eta[(m, k)]) * stats.gamma[(m, k)];
        }
        let numerator = rho * amplitude * amplitude;
        if numerator == 0.0 {
            sinr.push(0.0);
            continue;
        }
        let mut self_fourth = 0.0;
        for m in 0..aps {
            let c = stats.c[(m, k)];
            self_fourth += eta[(m, k)] * c * c * xi[(m, k)];
        }
        let mut beamforming_gain = 0.0;
        for other in 0..users {
            let mut cross = 0.0;
            for m in 0..aps {
                cross += eta[(m, other)] * stats.gamma[(m, other)] * stats.delta[(m, k)];
            }
            beamforming_gain += rho * cross;
        }
        let noncoherent = 2.0 * rho * energy * self_fourth + beamforming_gain;
        sinr.push(numerator / (0.0 + noncoherent + 1.0));
    }
    Ok(sinr)
}

/// Damping added to the per-AP normalizer when every estimate there is zero.
pub const POWER_CONTROL_DAMPING: f64 = 1e-12;

/// The uniform full-power downlink allocation `eta_mk = 1 / sum_k' gamma_mk'`,
/// which meets the per-AP budget with equality.
///
/// An AP with no usable estimates gets its normalizer damped by
/// [`POWER_CONTROL_DAMPING`]; its products `eta gamma` are all zero anyway.
#[must_use]
pub fn default_power_control(gamma: &DMatrix<f64>) -> DMatrix<f64> {
    let aps = gamma.nrows();
    let users = gamma.ncols();
    let mut eta = DMatrix::zeros(aps, users);
    for m in 0..aps {
        let mut total = 0.0;
        for k in 0..users {
            total += gamma[(m, k)];
        }
        if total <= 0.0 {
            total += POWER_CONTROL_DAMPING;
        }
        for k in 0..users {
            eta[(m, k)] = 1.0 / total;
        }
    }
    eta
}

/// Frame structure and bandwidth shared by both directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    /// System bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Symbols per coherence interval, `tau_c`.
    pub coherence_symbols: usize,
    /// Fraction of data symbols spent on the uplink.
    pub uplink_fraction: f64,
    /// Fraction of data symbols spent on the downlink.
    pub downlink_fraction: f64,
}

impl FrameConfig {
    /// Validates bandwidth, frame length, and the data split.
    pub fn new(
        bandwidth_hz: f64,
        coherence_symbols: usize,
        uplink_fraction: f64,
        downlink_fraction: f64,
    ) -> Result<Self> {
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return Err(Error::InvalidParameter {
                name: "bandwidth_hz",
                value: bandwidth_hz,
            });
        }
        if coherence_symbols == 0 {
            return Err(Error::InvalidParameter {
                name: "coherence_symbols",
                value: 0.0,
            });
        }
        for (name, value) in [
            ("uplink_fraction", uplink_fraction),
            ("downlink_fraction", downlink_fraction),
        ] {
            if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        if uplink_fraction + downlink_fraction > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter {
                name: "data_fraction_sum",
                value: uplink_fraction + downlink_fraction,
            });
        }
        Ok(Self {
            bandwidth_hz,
            coherence_symbols,
            uplink_fraction,
            downlink_fraction,
        })
    }

    fn fraction(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Uplink => self.uplink_fraction,
            Direction::Downlink => self.downlink_fraction,
        }
    }
}

/// Net throughput in Mbps per user:
/// `B nu (1 - tau_p / tau_c) log2(1 + SINR)`.
pub fn net_throughput(
    sinr: &[f64],
    frame: &FrameConfig,
    tau_p: usize,
    direction: Direction,
) -> Result<Vec<f64>> {
    if tau_p > frame.coherence_symbols {
        return Err(Error::InvalidParameter {
            name: "tau_p",
            value: tau_p as f64,
        });
    }
    let overhead = 1.0 - tau_p as f64 / frame.coherence_symbols as f64;
    let scale = frame.bandwidth_hz / 1e6 * frame.fraction(direction) * overhead;
    sinr.iter()
        .map(|&value| {
            if !(value.is_finite() && value >= 0.0) {
                Err(Error::InvalidParameter {
                    name: "sinr",
                    value,
                })
            } else {
                Ok(scale * fm::log2(1.0 + value))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::mmse_coefficients;
    use crate::rng::trial_rng;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn single_link_stats() -> EstimationStats {
        // beta = 1, no RIS, pilot energy 1: delta = 1, c = 1/2, gamma = 1/2
        let beta = DMatrix::from_element(1, 1, 1.0);
        let trace = DMatrix::from_element(1, 1, 0.0);
        let plan = PilotPlan::orthogonal(1).unwrap();
        mmse_coefficients(&beta, &trace, &plan, 1.0).unwrap()
    }

    #[test]
    fn single_link_uplink_sinr_is_one_quarter() {
        let stats = single_link_stats();
        assert_relative_eq!(stats.gamma[(0, 0)], 0.5);
        let xi = DMatrix::from_element(1, 1, 0.0);
        let plan = PilotPlan::orthogonal(1).unwrap();
        let power = PowerConfig::full_uplink(1.0, 1.0, 1.0, 1).unwrap();
        let sinr = uplink_sinr_closed_form(&stats, &xi, &plan, &power).unwrap();
        assert_relative_eq!(sinr[0], 0.25);
    }

    #[test]
    fn single_link_downlink_sinr_at_budget_equality() {
        let stats = single_link_stats();
        let xi = DMatrix::from_element(1, 1, 0.0);
        let plan = PilotPlan::orthogonal(1).unwrap();
        let power = PowerConfig::full_uplink(1.0, 1.0, 1.0, 1).unwrap();
        let eta = default_power_control(&stats.gamma);
        assert_relative_eq!(eta[(0, 0)], 2.0);
        let sinr = downlink_sinr_closed_form(&stats, &xi, &plan, &eta, &power).unwrap();
        // numerator (sqrt(2) * 1/2)^2 = 1/2; denominator 2 * 1/2 * 1 + 1 = 2
        assert_relative_eq!(sinr[0], 0.25);
    }

    #[test]
    fn zero_estimates_give_zero_sinr() {
        let beta = DMatrix::from_element(2, 1, 0.0);
        let trace = DMatrix::from_element(2, 1, 0.0);
        let plan = PilotPlan::orthogonal(1).unwrap();
        let stats = mmse_coefficients(&beta, &trace, &plan, 1.0).unwrap();
        let xi = DMatrix::from_element(2, 1, 0.0);
        let power = PowerConfig::full_uplink(1.0, 2.0, 2.0, 1).unwrap();
        let up = uplink_sinr_closed_form(&stats, &xi, &plan, &power).unwrap();
        assert_eq!(up[0], 0.0);
        let eta = default_power_control(&stats.gamma);
        let down = downlink_sinr_closed_form(&stats, &xi, &plan, &eta, &power).unwrap();
        assert_eq!(down[0], 0.0);
    }

    #[test]
    fn zero_data_power_gives_zero_sinr() {
        let stats = single_link_stats();
        let xi = DMatrix::from_element(1, 1, 0.0);
        let plan = PilotPlan::orthogonal(1).unwrap();
        let power = PowerConfig::full_uplink(1.0, 0.0, 0.0, 1).unwrap();
        let up = uplink_sinr_closed_form(&stats, &xi, &plan, &power).unwrap();
        assert_eq!(up[0], 0.0);
    }

    fn random_stats(
        aps: usize,
        users: usize,
        plan: &PilotPlan,
        rng: &mut impl Rng,
    ) -> (EstimationStats, DMatrix<f64>) {
        let beta = DMatrix::from_fn(aps, users, |_, _| rng.random_range(0.01..2.0));
        let trace = DMatrix::from_fn(aps, users, |_, _| rng.random_range(0.0..1.5));
        let stats = mmse_coefficients(&beta, &trace, plan, 3.0).unwrap();
        // xi <= T^2 for PSD factors; a random fraction keeps it consistent
        let xi = DMatrix::from_fn(aps, users, |m, k| {
            let t = trace[(m, k)];
            t * t * rng.random_range(0.0..1.0)
        });
        (stats, xi)
    }

    #[test]
    fn orthogonal_reduction_is_exact_uplink() {
        let mut rng = trial_rng(73, 0);
        for _ in 0..50 {
            let plan = PilotPlan::orthogonal(4).unwrap();
            let (stats, xi) = random_stats(3, 4, &plan, &mut rng);
            let power = PowerConfig::new(3.0, 1.7, 2.2, alloc::vec![1.0, 0.8, 0.5, 1.0]).unwrap();
            let general = uplink_sinr_closed_form(&stats, &xi, &plan, &power).unwrap();
            let reduced = uplink_sinr_orthogonal(&stats, &xi, &plan, &power).unwrap();
            for (a, b) in general.iter().zip(reduced.iter()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn orthogonal_reduction_is_exact_downlink() {
        let mut rng = trial_rng(79, 0);
        for _ in 0..50 {
            let plan = PilotPlan::orthogonal(3).unwrap();
            let (stats, xi) = random_stats(4, 3, &plan, &mut rng);
            let power = PowerConfig::full_uplink(3.0, 1.0, 2.0, 3).unwrap();
            let eta = default_power_control(&stats.gamma);
            let general = downlink_sinr_closed_form(&stats, &xi, &plan, &eta, &power).unwrap();
            let reduced = downlink_sinr_orthogonal(&stats, &xi, &plan, &eta, &power).unwrap();
            for (a, b) in general.iter().zip(reduced.iter()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn contamination_only_hurts() {
        let mut rng = trial_rng(83, 0);
        for _ in 0..20 {
            let shared = PilotPlan::round_robin(4, 2).unwrap();
            let beta = DMatrix::from_fn(3, 4, |_, _| rng.random_range(0.01..2.0));
            let trace = DMatrix::from_fn(3, 4, |_, _| rng.random_range(0.0..1.5));
            let xi = DMatrix::from_fn(3, 4, |m, k| {
                let t = trace[(m, k)];
                t * t * 0.5
            });
            let power = PowerConfig::full_uplink(3.0, 1.5, 1.5, 4).unwrap();
            let contaminated = {
                let stats = mmse_coefficients(&beta, &trace, &shared, 3.0).unwrap();
                uplink_sinr_closed_form(&stats, &xi, &shared, &power).unwrap()
            };
            let clean = {
                let plan = PilotPlan::orthogonal(4).unwrap();
                let stats = mmse_coefficients(&beta, &trace, &plan, 3.0).unwrap();
                uplink_sinr_closed_form(&stats, &xi, &plan, &power).unwrap()
            };
            for k in 0..4 {
                assert!(
                    contaminated[k] <= clean[k] + 1e-12,
                    "user {k}: {} > {}",
                    contaminated[k],
                    clean[k]
                );
            }
        }
    }

    #[test]
    fn budget_violation_is_rejected() {
        let stats = single_link_stats();
        let xi = DMatrix::from_element(1, 1, 0.0);
        let plan = PilotPlan::orthogonal(1).unwrap();
        let power = PowerConfig::full_uplink(1.0, 1.0, 1.0, 1).unwrap();
        let eta = DMatrix::from_element(1, 1, 2.5);
        assert!(matches!(
            downlink_sinr_closed_form(&stats, &xi, &plan, &eta, &power),
            Err(Error::PowerBudgetExceeded { ap: 0, .. })
        ));
    }

    #[test]
    fn default_power_control_meets_budget_with_equality() {
        let mut rng = trial_rng(89, 0);
        let gamma = DMatrix::from_fn(5, 3, |_, _| rng.random_range(0.0..2.0));
        let eta = default_power_control(&gamma);
        for m in 0..5 {
            let load: f64 = (0..3).map(|k| eta[(m, k)] * gamma[(m, k)]).sum();
            assert_relative_eq!(load, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn silent_ap_gets_damped_normalizer() {
        let gamma = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        let eta = default_power_control(&gamma);
        assert_relative_eq!(eta[(0, 0)], 1.0 / POWER_CONTROL_DAMPING);
        assert_relative_eq!(eta[(1, 0)], 0.5);
        // the damped AP still spends nothing
        assert_eq!(eta[(0, 0)] * gamma[(0, 0)], 0.0);
    }

    #[test]
    fn throughput_reference_points() {
        let frame = FrameConfig::new(20e6, 200, 0.5, 0.5).unwrap();
        let rates = net_throughput(&[1.0, 0.0, 3.0], &frame, 5, Direction::Uplink).unwrap();
        assert_relative_eq!(rates[0], 9.75, max_relative = 1e-12);
        assert_eq!(rates[1], 0.0);
        assert_relative_eq!(rates[2], 19.5, max_relative = 1e-12);
    }

    #[test]
    fn frame_rejects_oversubscribed_split() {
        assert!(FrameConfig::new(20e6, 200, 0.7, 0.7).is_err());
        assert!(FrameConfig::new(0.0, 200, 0.5, 0.5).is_err());
        let frame = FrameConfig::new(20e6, 100, 0.5, 0.5).unwrap();
        assert!(net_throughput(&[1.0], &frame, 101, Direction::Uplink).is_err());
    }

    #[test]
    fn more_aps_help_every_user() {
        let mut rng = trial_rng(97, 0);
        let plan = PilotPlan::round_robin(3, 2).unwrap();
        let beta_small = DMatrix::from_fn(4, 3, |_, _| rng.random_range(0.05..1.0));
        let beta_large = {
            let extra = DMatrix::from_fn(4, 3, |_, _| rng.random_range(0.05..1.0));
            let mut stacked = DMatrix::zeros(8, 3);
            stacked.view_mut((0, 0), (4, 3)).copy_from(&beta_small);
            stacked.view_mut((4, 0), (4, 3)).copy_from(&extra);
            stacked
        };
        let zeros_small = DMatrix::zeros(4, 3);
        let zeros_large = DMatrix::zeros(8, 3);
        let power = PowerConfig::full_uplink(2.0, 1.0, 1.0, 3).unwrap();
        let small = {
            let stats = mmse_coefficients(&beta_small, &zeros_small, &plan, 2.0).unwrap();
            uplink_sinr_closed_form(&stats, &zeros_small, &plan, &power).unwrap()
        };
        let large = {
            let stats = mmse_coefficients(&beta_large, &zeros_large, &plan, 2.0).unwrap();
            uplink_sinr_closed_form(&stats, &zeros_large, &plan, &power).unwrap()
        };
        for k in 0..3 {
            assert!(large[k] > small[k], "user {k} lost SINR with more APs");
        }
    }
}
