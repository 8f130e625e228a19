//! Stochastic network instances: AP/user placement, large-scale fading,
//! blocking, and the assembled per-realization statistics.
//!
//! The deployment is a square service area treated as a torus so no AP or
//! user sits at an artificial edge. Direct AP-user links follow a three-slope
//! distance law with log-normal shadowing on the far slope and can be blocked
//! entirely; the links through the RIS keep line of sight. All channel gains
//! are absolute (linear) while transmit powers are normalized to the noise
//! floor, so the estimator and SINR formulas see unit-variance noise.
//!
//! One seed fixes one realization: every random quantity is drawn from a
//! counter-based stream in a documented order, and the system variants
//! (with RIS, without RIS, blocked direct only) reuse the identical draws so
//! they can be compared realization by realization.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::correlation::{
    build_ris_geometry, scaled_covariances, sinc_correlation_matrix, BaseCorrelation,
    CorrelationSet, PhaseTraces, RisGeometry,
};
use crate::error::{Error, Result};
use crate::estimation::{mmse_coefficients, EstimationStats, PilotPlan};
use crate::fm;
use crate::phase::{NmseProblem, PhaseConfig};
use crate::rng::trial_rng;
use crate::throughput::{FrameConfig, PowerConfig};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Which parts of the network are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemVariant {
    /// Direct links plus the RIS-reflected path.
    RisCellFree,
    /// Direct links only; the surface is absent.
    CellFree,
    /// Every direct link blocked; only the reflected path remains.
    RisCellFreeNoLos,
}

/// Spatial correlation model across the RIS elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorrelationModel {
    /// Sinc profile from the element geometry.
    Sinc,
    /// Independent elements (identity base), the common simplification.
    Independent,
}

/// Axis-aligned rectangle in the deployment plane, km units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    /// Smallest x coordinate.
    pub x_min: f64,
    /// Largest x coordinate.
    pub x_max: f64,
    /// Smallest y coordinate.
    pub y_min: f64,
    /// Largest y coordinate.
    pub y_max: f64,
}

impl Region {
    /// Uniform draw from the rectangle; x first, then y.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let x = rng.random_range(self.x_min..self.x_max);
        let y = rng.random_range(self.y_min..self.y_max);
        [x, y]
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        if self.x_min < self.x_max && self.y_min < self.y_max {
            Ok(())
        } else {
            Err(Error::InvalidGeometry(alloc::format!(
                "{name} region is empty: x [{}, {}], y [{}, {}]",
                self.x_min,
                self.x_max,
                self.y_min,
                self.y_max
            )))
        }
    }
}

/// Everything needed to draw network realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    /// Number of APs.
    pub ap_count: usize,
    /// Number of users.
    pub user_count: usize,
    /// RIS grid width.
    pub ris_columns: usize,
    /// RIS grid height.
    pub ris_rows: usize,
    /// Horizontal element spacing in wavelengths.
    pub spacing_h_wavelengths: f64,
    /// Vertical element spacing in wavelengths.
    pub spacing_v_wavelengths: f64,
    /// Carrier frequency in GHz.
    pub carrier_ghz: f64,
    /// System bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Symbols per coherence interval.
    pub coherence_symbols: usize,
    /// Fraction of data symbols on the uplink.
    pub uplink_fraction: f64,
    /// Fraction of data symbols on the downlink.
    pub downlink_fraction: f64,
    /// Pilot sequence length.
    pub tau_p: usize,
    /// Per-user pilot power in mW.
    pub pilot_power_mw: f64,
    /// Per-user uplink data power in mW.
    pub uplink_power_mw: f64,
    /// Per-AP downlink power budget in mW.
    pub downlink_power_mw: f64,
    /// Noise power in dBm.
    pub noise_dbm: f64,
    /// Side of the square (toroidal) service area in km.
    pub side_km: f64,
    /// Where APs may fall.
    pub ap_region: Region,
    /// Where users may fall.
    pub user_region: Region,
    /// AP antenna height in m.
    pub ap_height_m: f64,
    /// RIS center height in m.
    pub ris_height_m: f64,
    /// User antenna height in m.
    pub user_height_m: f64,
    /// Shadow fading standard deviation in dB (far slope only).
    pub shadow_sigma_db: f64,
    /// Whether the AP-RIS and RIS-user links also see shadow fading.
    pub ris_shadow_fading: bool,
    /// Probability that a direct link is not blocked.
    pub unblocked_probability: f64,
    /// Extra linear gain on every AP-RIS and RIS-user hop. The distance law
    /// leaves the absolute aperture gain of the surface open; 1.0 keeps the
    /// raw path loss, larger values put the reflected path at a chosen
    /// strength relative to the direct links.
    pub ris_gain_scale: f64,
    /// Active system parts.
    pub variant: SystemVariant,
    /// RIS element correlation model.
    pub correlation_model: CorrelationModel,
}

impl Default for ScenarioParams {
    /// The reference deployment: 100 APs and 10 users on a 1 km torus, a
    /// 30 x 30 surface at quarter-wavelength spacing, 1.9 GHz, 20 MHz,
    /// 200-symbol frames with 5 pilots, 100 mW pilots and uplink data,
    /// 200 mW downlink budget, -92 dBm noise, 8 dB shadowing, and an 0.2
    /// chance that a direct link stays unblocked.
    fn default() -> Self {
        Self {
            ap_count: 100,
            user_count: 10,
            ris_columns: 30,
            ris_rows: 30,
            spacing_h_wavelengths: 0.25,
            spacing_v_wavelengths: 0.25,
            carrier_ghz: 1.9,
            bandwidth_hz: 20e6,
            coherence_symbols: 200,
            uplink_fraction: 0.5,
            downlink_fraction: 0.5,
            tau_p: 5,
            pilot_power_mw: 100.0,
            uplink_power_mw: 100.0,
            downlink_power_mw: 200.0,
            noise_dbm: -92.0,
            side_km: 1.0,
            ap_region: Region {
                x_min: -0.5,
                x_max: -0.25,
                y_min: -0.5,
                y_max: -0.25,
            },
            user_region: Region {
                x_min: 0.25,
                x_max: 0.5,
                y_min: 0.25,
                y_max: 0.5,
            },
            ap_height_m: 15.0,
            ris_height_m: 30.0,
            user_height_m: 1.65,
            shadow_sigma_db: 8.0,
            ris_shadow_fading: true,
            unblocked_probability: 0.2,
            ris_gain_scale: 1.0,
            variant: SystemVariant::RisCellFree,
            correlation_model: CorrelationModel::Sinc,
        }
    }
}

impl ScenarioParams {
    /// Carrier wavelength in meters.
    #[must_use]
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / (self.carrier_ghz * 1e9)
    }

    /// Noise power in mW.
    #[must_use]
    pub fn noise_mw(&self) -> f64 {
        fm::powf(10.0, self.noise_dbm / 10.0)
    }

    /// Total number of RIS elements.
    #[must_use]
    pub fn ris_elements(&self) -> usize {
        self.ris_columns * self.ris_rows
    }

    /// RIS panel description implied by the parameters.
    pub fn ris_geometry(&self) -> Result<RisGeometry> {
        let wavelength = self.wavelength_m();
        build_ris_geometry(
            self.ris_columns,
            self.ris_rows,
            self.spacing_h_wavelengths * wavelength,
            self.spacing_v_wavelengths * wavelength,
            wavelength,
        )
    }

    /// Frame structure implied by the parameters.
    pub fn frame(&self) -> Result<FrameConfig> {
        FrameConfig::new(
            self.bandwidth_hz,
            self.coherence_symbols,
            self.uplink_fraction,
            self.downlink_fraction,
        )
    }

    /// Normalized transmit powers implied by the parameters.
    pub fn power(&self) -> Result<PowerConfig> {
        let noise = self.noise_mw();
        if !(noise.is_finite() && noise > 0.0) {
            return Err(Error::InvalidParameter {
                name: "noise_dbm",
                value: self.noise_dbm,
            });
        }
        PowerConfig::full_uplink(
            self.pilot_power_mw / noise * self.tau_p as f64,
            self.uplink_power_mw / noise,
            self.downlink_power_mw / noise,
            self.user_count,
        )
    }

    fn validate(&self) -> Result<()> {
        if self.ap_count == 0 || self.user_count == 0 {
            return Err(Error::InvalidGeometry(alloc::format!(
                "need at least one AP and one user, got {} and {}",
                self.ap_count,
                self.user_count
            )));
        }
        self.ap_region.validate("ap")?;
        self.user_region.validate("user")?;
        if !(self.side_km.is_finite() && self.side_km > 0.0) {
            return Err(Error::InvalidParameter {
                name: "side_km",
                value: self.side_km,
            });
        }
        for (name, value) in [
            ("pilot_power_mw", self.pilot_power_mw),
            ("uplink_power_mw", self.uplink_power_mw),
            ("downlink_power_mw", self.downlink_power_mw),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        if !(self.shadow_sigma_db.is_finite() && self.shadow_sigma_db >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "shadow_sigma_db",
                value: self.shadow_sigma_db,
            });
        }
        if !(self.unblocked_probability.is_finite()
            && (0.0..=1.0).contains(&self.unblocked_probability))
        {
            return Err(Error::InvalidParameter {
                name: "unblocked_probability",
                value: self.unblocked_probability,
            });
        }
        if !(self.ris_gain_scale.is_finite() && self.ris_gain_scale >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "ris_gain_scale",
                value: self.ris_gain_scale,
            });
        }
        if self.tau_p > self.coherence_symbols {
            return Err(Error::InvalidParameter {
                name: "tau_p",
                value: self.tau_p as f64,
            });
        }
        for (name, value) in [
            ("ap_height_m", self.ap_height_m),
            ("ris_height_m", self.ris_height_m),
            ("user_height_m", self.user_height_m),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        Ok(())
    }
}

/// Wall-plus-rooftop propagation constant of the far slope in dB.
///
/// Evaluates the COST-Hata fixed term for the carrier (GHz), AP height (m),
/// and user height (m); roughly 140.7 dB at 1.9 GHz, 15 m, 1.65 m.
#[must_use]
pub fn cost_hata_constant(carrier_ghz: f64, ap_height_m: f64, user_height_m: f64) -> f64 {
    let log_f = fm::log10(carrier_ghz * 1e3);
    46.3 + 33.9 * log_f
        - 13.82 * fm::log10(ap_height_m)
        - (1.1 * log_f - 0.7) * user_height_m
        + (1.56 * log_f - 0.8)
}

/// Three-slope distance law: linear channel gain at distance `d_km` given the
/// far-slope constant `l_db` and a shadowing term in dB that only applies
/// beyond 50 m.
///
/// Beyond 50 m the gain falls with the 3.5 power of distance, between 10 and
/// 50 m with the square, and below 10 m it is flat.
#[must_use]
pub fn three_slope_pathloss(d_km: f64, shadow_db: f64, l_db: f64) -> f64 {
    let near = -l_db - 15.0 * fm::log10(0.05);
    let gain_db = if d_km > 0.05 {
        -l_db - 35.0 * fm::log10(d_km) + shadow_db
    } else if d_km > 0.01 {
        near - 20.0 * fm::log10(d_km)
    } else {
        near - 20.0 * fm::log10(0.01)
    };
    fm::powf(10.0, gain_db / 10.0)
}

/// Shortest horizontal displacement between two points on the square torus.
#[must_use]
pub fn wraparound_distance(a: [f64; 2], b: [f64; 2], side_km: f64) -> f64 {
    let mut total = 0.0;
    for axis in 0..2 {
        let mut d = (a[axis] - b[axis]).abs() % side_km;
        if d > side_km / 2.0 {
            d = side_km - d;
        }
        total += d * d;
    }
    fm::sqrt(total)
}

fn link_distance_km(a: [f64; 2], b: [f64; 2], height_a_m: f64, height_b_m: f64, side_km: f64) -> f64 {
    let horizontal = wraparound_distance(a, b, side_km);
    let vertical = (height_a_m - height_b_m) / 1000.0;
    fm::sqrt(horizontal * horizontal + vertical * vertical)
}

/// Bernoulli blocking states for every direct link, `true` meaning the link
/// is open. Draws one uniform per link, APs outer, users inner.
pub fn sample_blocking<R: Rng + ?Sized>(
    aps: usize,
    users: usize,
    unblocked_probability: f64,
    rng: &mut R,
) -> DMatrix<bool> {
    let mut open = DMatrix::from_element(aps, users, false);
    for m in 0..aps {
        for k in 0..users {
            open[(m, k)] = rng.random::<f64>() < unblocked_probability;
        }
    }
    open
}

/// Shared base correlation for the given parameters; build it once and reuse
/// it across realizations, since its eigendecomposition dominates setup time.
pub fn base_correlation(params: &ScenarioParams) -> Result<BaseCorrelation> {
    let geometry = params.ris_geometry()?;
    let matrix = match params.correlation_model {
        CorrelationModel::Sinc => sinc_correlation_matrix(&geometry),
        CorrelationModel::Independent => DMatrix::identity(geometry.elements(), geometry.elements()),
    };
    BaseCorrelation::new(matrix)
}

/// One drawn network instance with all its derived statistics.
#[derive(Debug, Clone)]
pub struct Scenario {
    params: ScenarioParams,
    geometry: RisGeometry,
    ap_positions: Vec<[f64; 2]>,
    user_positions: Vec<[f64; 2]>,
    correlations: CorrelationSet,
    beta_bar: DMatrix<f64>,
    unblocked: DMatrix<bool>,
    beta: DMatrix<f64>,
    plan: PilotPlan,
    power: PowerConfig,
    frame: FrameConfig,
    seed: u64,
}

/// Draws a network instance using a previously built base correlation.
///
/// Consumption order of the seed-derived stream: AP positions, user
/// positions, direct shadowing normals (APs outer), blocking uniforms (APs
/// outer), AP-RIS shadowing normals, RIS-user shadowing normals. Every draw
/// happens for every variant, so instances with the same seed differ only in
/// what the variant masks out.
pub fn build_scenario_with(
    params: &ScenarioParams,
    seed: u64,
    base: &BaseCorrelation,
) -> Result<Scenario> {
    params.validate()?;
    let geometry = params.ris_geometry()?;
    if base.elements() != geometry.elements() {
        return Err(Error::DimensionMismatch {
            context: "base correlation",
            expected: geometry.elements(),
            got: base.elements(),
        });
    }
    let frame = params.frame()?;
    let power = params.power()?;
    let plan = PilotPlan::round_robin(params.user_count, params.tau_p)?;
    let l_db = cost_hata_constant(params.carrier_ghz, params.ap_height_m, params.user_height_m);
    let aps = params.ap_count;
    let users = params.user_count;

    let mut rng = trial_rng(seed, 0);
    let mut ap_positions = Vec::with_capacity(aps);
    for _ in 0..aps {
        ap_positions.push(params.ap_region.sample(&mut rng));
    }
    let mut user_positions = Vec::with_capacity(users);
    for _ in 0..users {
        user_positions.push(params.user_region.sample(&mut rng));
    }

    let mut beta_bar = DMatrix::zeros(aps, users);
    for m in 0..aps {
        for k in 0..users {
            let shadow: f64 = rng.sample(StandardNormal);
            let d = link_distance_km(
                ap_positions[m],
                user_positions[k],
                params.ap_height_m,
                params.user_height_m,
                params.side_km,
            );
            beta_bar[(m, k)] = three_slope_pathloss(d, params.shadow_sigma_db * shadow, l_db);
        }
    }
    let unblocked = sample_blocking(aps, users, params.unblocked_probability, &mut rng);

    let ris_position = [0.0, 0.0];
    let mut ap_gain = Vec::with_capacity(aps);
    for &position in &ap_positions {
        let shadow: f64 = rng.sample(StandardNormal);
        let shadow_db = if params.ris_shadow_fading {
            params.shadow_sigma_db * shadow
        } else {
            0.0
        };
        let d = link_distance_km(
            position,
            ris_position,
            params.ap_height_m,
            params.ris_height_m,
            params.side_km,
        );
        ap_gain.push(params.ris_gain_scale * three_slope_pathloss(d, shadow_db, l_db));
    }
    let mut user_gain = Vec::with_capacity(users);
    for &position in &user_positions {
        let shadow: f64 = rng.sample(StandardNormal);
        let shadow_db = if params.ris_shadow_fading {
            params.shadow_sigma_db * shadow
        } else {
            0.0
        };
        let d = link_distance_km(
            position,
            ris_position,
            params.user_height_m,
            params.ris_height_m,
            params.side_km,
        );
        user_gain.push(params.ris_gain_scale * three_slope_pathloss(d, shadow_db, l_db));
    }

    // the variant decides which of the drawn statistics survive
    let ris_active = !matches!(params.variant, SystemVariant::CellFree);
    if !ris_active {
        for value in ap_gain.iter_mut() {
            *value = 0.0;
        }
        for value in user_gain.iter_mut() {
            *value = 0.0;
        }
    }
    let direct_active = !matches!(params.variant, SystemVariant::RisCellFreeNoLos);
    let mut beta = DMatrix::zeros(aps, users);
    if direct_active {
        for m in 0..aps {
            for k in 0..users {
                if unblocked[(m, k)] {
                    beta[(m, k)] = beta_bar[(m, k)];
                }
            }
        }
    }

    let link_gain = DMatrix::from_fn(aps, users, |_, k| user_gain[k]);
    let correlations = scaled_covariances(
        base.clone(),
        &ap_gain,
        &link_gain,
        geometry.spacing_h(),
        geometry.spacing_v(),
    )?;

    Ok(Scenario {
        params: params.clone(),
        geometry,
        ap_positions,
        user_positions,
        correlations,
        beta_bar,
        unblocked,
        beta,
        plan,
        power,
        frame,
        seed,
    })
}

/// Draws a network instance, building the base correlation on the fly.
pub fn build_scenario(params: &ScenarioParams, seed: u64) -> Result<Scenario> {
    let base = base_correlation(params)?;
    build_scenario_with(params, seed, &base)
}

impl Scenario {
    /// Parameters the instance was drawn from.
    #[must_use]
    pub fn params(&self) -> &ScenarioParams {
        &self.params
    }

    /// RIS panel description.
    #[must_use]
    pub fn geometry(&self) -> &RisGeometry {
        &self.geometry
    }

    /// AP positions in km.
    #[must_use]
    pub fn ap_positions(&self) -> &[[f64; 2]] {
        &self.ap_positions
    }

    /// User positions in km.
    #[must_use]
    pub fn user_positions(&self) -> &[[f64; 2]] {
        &self.user_positions
    }

    /// Correlation description of the reflected links.
    #[must_use]
    pub fn correlations(&self) -> &CorrelationSet {
        &self.correlations
    }

    /// Direct gains before blocking.
    #[must_use]
    pub fn beta_bar(&self) -> &DMatrix<f64> {
        &self.beta_bar
    }

    /// Blocking states of the direct links.
    #[must_use]
    pub fn unblocked(&self) -> &DMatrix<bool> {
        &self.unblocked
    }

    /// Effective direct gains after blocking and the variant mask.
    #[must_use]
    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    /// Pilot assignment.
    #[must_use]
    pub fn plan(&self) -> &PilotPlan {
        &self.plan
    }

    /// Normalized transmit powers.
    #[must_use]
    pub fn power(&self) -> &PowerConfig {
        &self.power
    }

    /// Frame structure.
    #[must_use]
    pub fn frame(&self) -> &FrameConfig {
        &self.frame
    }

    /// Seed the instance was drawn with.
    #[must_use]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The phase-selection problem this instance poses.
    pub fn nmse_problem(&self) -> Result<NmseProblem<'_>> {
        NmseProblem::new(
            &self.beta,
            &self.correlations,
            &self.plan,
            self.power.pilot_energy,
        )
    }

    /// Base trace functionals of a phase configuration on this instance.
    #[must_use]
    pub fn phase_traces(&self, phase: &PhaseConfig) -> PhaseTraces {
        self.correlations.phase_traces(phase)
    }

    /// Estimator statistics and fourth-moment grid under the given phases.
    pub fn link_stats(&self, phase: &PhaseConfig) -> Result<(EstimationStats, DMatrix<f64>)> {
        let traces = self.phase_traces(phase);
        self.link_stats_with(&traces)
    }

    /// Same as [`Scenario::link_stats`] with the trace functionals already
    /// computed, so sweeping scenarios under a fixed phase stays cheap.
    pub fn link_stats_with(
        &self,
        traces: &PhaseTraces,
    ) -> Result<(EstimationStats, DMatrix<f64>)> {
        let (trace_grid, xi_grid) = self.correlations.moment_grids(traces);
        let stats = mmse_coefficients(
            &self.beta,
            &trace_grid,
            &self.plan,
            self.power.pilot_energy,
        )?;
        Ok((stats, xi_grid))
    }
}
