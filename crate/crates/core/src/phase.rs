//! Phase-shift configurations for the RIS and their selection.
//!
//! A configuration is one angle per element; the surface applies
//! `diag(exp(j theta_1), ..., exp(j theta_N))` to whatever impinges on it.
//! Because the channel statistics enter every closed form only through the
//! trace functionals of [`crate::correlation`], configurations can be compared
//! without sampling channels, and [`grid_search_phases`] exploits that to
//! minimize the summed channel-estimation NMSE exactly on small surfaces.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::correlation::{base_trace_product_angles, CorrelationSet};
use crate::error::{Error, Result};
use crate::estimation::{mmse_coefficients, PilotPlan};
use crate::fm;

/// Per-element reflection angles, stored wrapped to `[-pi, pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    angles: Vec<f64>,
}

impl PhaseConfig {
    /// Wraps the given angles into `[-pi, pi)` and stores them. Angles that
    /// are already in range pass through bit-identically.
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        let mut wrapped = angles;
        for value in wrapped.iter_mut() {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "phase angle",
                    value: *value,
                });
            }
            *value = wrap_angle(*value);
        }
        Ok(Self { angles: wrapped })
    }

    /// All elements at the same angle.
    pub fn equal(elements: usize, angle: f64) -> Result<Self> {
        Self::new(vec![angle; elements])
    }

    /// Number of elements.
    #[must_use]
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    /// Whether the configuration covers zero elements.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// The wrapped angles.
    #[must_use]
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Diagonal of the reflection matrix, `exp(j theta_n)` per element.
    #[must_use]
    pub fn diagonal(&self) -> Vec<Complex64> {
        self.angles
            .iter()
            .map(|&t| Complex64::new(fm::cos(t), fm::sin(t)))
            .collect()
    }
}

fn wrap_angle(x: f64) -> f64 {
    if (-PI..PI).contains(&x) {
        return x;
    }
    let shifted = x + PI;
    let wrapped = shifted - TAU * fm::floor(shifted / TAU);
    let result = wrapped - PI;
    if result >= PI {
        -PI
    } else {
        result
    }
}

/// The common-phase design: every element at `pi / 4`.
///
/// When all covariances share one base matrix and the direct links carry no
/// power, any common angle maximizes the aggregated channel gain, so the
/// fixed value only pins down a convention.
#[must_use]
pub fn equal_phase_design(elements: usize) -> PhaseConfig {
    PhaseConfig::equal(elements, FRAC_PI_4).expect("constant angle is finite")
}

/// Independent uniform angles on `[-pi, pi)`, the usual baseline.
pub fn random_phase_design<R: Rng + ?Sized>(elements: usize, rng: &mut R) -> PhaseConfig {
    let angles = (0..elements).map(|_| rng.random_range(-PI..PI)).collect();
    PhaseConfig::new(angles).expect("sampled angles are finite")
}

/// Inputs of the NMSE-based phase selection: large-scale direct gains, the
/// RIS correlation description, the pilot plan, and the normalized pilot
/// power `p * tau_p`.
#[derive(Debug, Clone, Copy)]
pub struct NmseProblem<'a> {
    beta: &'a DMatrix<f64>,
    correlations: &'a CorrelationSet,
    plan: &'a PilotPlan,
    pilot_energy: f64,
}

impl<'a> NmseProblem<'a> {
    /// Validates dimensions and the pilot energy.
    pub fn new(
        beta: &'a DMatrix<f64>,
        correlations: &'a CorrelationSet,
        plan: &'a PilotPlan,
        pilot_energy: f64,
    ) -> Result<Self> {
        if beta.nrows() != correlations.ap_count() {
            return Err(Error::DimensionMismatch {
                context: "direct gain rows",
                expected: correlations.ap_count(),
                got: beta.nrows(),
            });
        }
        if beta.ncols() != correlations.user_count() {
            return Err(Error::DimensionMismatch {
                context: "direct gain columns",
                expected: correlations.user_count(),
                got: beta.ncols(),
            });
        }
        if plan.users() != beta.ncols() {
            return Err(Error::DimensionMismatch {
                context: "pilot assignment",
                expected: beta.ncols(),
                got: plan.users(),
            });
        }
        if !(pilot_energy.is_finite() && pilot_energy > 0.0) {
            return Err(Error::InvalidParameter {
                name: "pilot_energy",
                value: pilot_energy,
            });
        }
        Ok(Self {
            beta,
            correlations,
            plan,
            pilot_energy,
        })
    }
}

/// Sum over all AP-user links of the channel-estimation NMSE under the given
/// phase configuration.
///
/// A link with zero aggregated power has no defined NMSE and is reported as
/// [`Error::DegenerateLink`].
pub fn sum_nmse(problem: &NmseProblem<'_>, phase: &PhaseConfig) -> Result<f64> {
    if phase.len() != problem.correlations.elements() {
        return Err(Error::DimensionMismatch {
            context: "phase configuration",
            expected: problem.correlations.elements(),
            got: phase.len(),
        });
    }
    sum_nmse_angles(problem, phase.angles())
}

fn sum_nmse_angles(problem: &NmseProblem<'_>, angles: &[f64]) -> Result<f64> {
    let second = base_trace_product_angles(problem.correlations.base().matrix(), angles);
    let aps = problem.correlations.ap_count();
    let users = problem.correlations.user_count();
    let trace_part = DMatrix::from_fn(aps, users, |m, k| {
        problem.correlations.cascade_scale(m, k) * second
    });
    let stats = mmse_coefficients(problem.beta, &trace_part, problem.plan, problem.pilot_energy)?;
    let mut total = 0.0;
    for k in 0..users {
        for m in 0..aps {
            let delta = stats.delta[(m, k)];
            if delta == 0.0 {
                return Err(Error::DegenerateLink { ap: m, user: k });
            }
            total += stats.error_var[(m, k)] / delta;
        }
    }
    Ok(total)
}

/// Largest surface the exhaustive search accepts.
pub const GRID_SEARCH_MAX_ELEMENTS: usize = 6;
/// Largest per-element resolution the exhaustive search accepts.
pub const GRID_SEARCH_MAX_RESOLUTION: usize = 16;

/// Exhaustive minimization of [`sum_nmse`] over the uniform angle grid
/// `{-pi + 2 pi i / resolution}` per element.
///
/// Only practical for a handful of elements; inputs beyond
/// [`GRID_SEARCH_MAX_ELEMENTS`] or [`GRID_SEARCH_MAX_RESOLUTION`] are
/// rejected. Returns the first minimizer in lexicographic order together
/// with its objective value, which equals `sum_nmse` of the returned
/// configuration bit for bit.
pub fn grid_search_phases(
    problem: &NmseProblem<'_>,
    resolution: usize,
) -> Result<(PhaseConfig, f64)> {
    let elements = problem.correlations.elements();
    if resolution == 0 {
        return Err(Error::InvalidParameter {
            name: "resolution",
            value: 0.0,
        });
    }
    if elements > GRID_SEARCH_MAX_ELEMENTS || resolution > GRID_SEARCH_MAX_RESOLUTION {
        return Err(Error::GridSearchTooLarge {
            elements,
            resolution,
        });
    }
    let levels: Vec<f64> = (0..resolution)
        .map(|i| -PI + TAU * i as f64 / resolution as f64)
        .collect();
    let mut indices = vec![0usize; elements];
    let mut angles = vec![levels[0]; elements];
    let mut best_angles = angles.clone();
    let mut best_value = f64::INFINITY;
    loop {
        let value = sum_nmse_angles(problem, &angles)?;
        if value < best_value {
            best_value = value;
            best_angles.copy_from_slice(&angles);
        }
        // advance the rightmost digit first, keeping lexicographic order
        let mut pos = elements;
        loop {
            if pos == 0 {
                return Ok((PhaseConfig::new(best_angles)?, best_value));
            }
            pos -= 1;
            indices[pos] += 1;
            if indices[pos] < resolution {
                angles[pos] = levels[indices[pos]];
                break;
            }
            indices[pos] = 0;
            angles[pos] = levels[0];
        }
    }
}
