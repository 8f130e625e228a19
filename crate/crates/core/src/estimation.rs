//! Pilot-based MMSE estimation of the aggregated channels.
//!
//! Each user repeats one of `tau_p` orthogonal pilots; an AP correlates its
//! receive signal with each pilot and gets, per pilot, the sum of the
//! aggregated channels of the users on that pilot plus unit-variance noise.
//! Because the aggregated channel is not Gaussian the estimator here is the
//! best *linear* one, which only needs the per-link second moments
//! `delta = beta + T`: each estimate is a scalar `c` times the pilot
//! projection. Users sharing a pilot contaminate each other through the
//! common denominator, and their estimates at one AP are collinear.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fm;
use crate::rng::standard_complex;

/// Assignment of one pilot (index `0..tau_p`) to every user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PilotPlan {
    tau_p: usize,
    assignment: Vec<usize>,
}

impl PilotPlan {
    /// Builds a plan from an explicit per-user pilot index.
    pub fn new(tau_p: usize, assignment: Vec<usize>) -> Result<Self> {
        if tau_p == 0 {
            return Err(Error::InvalidParameter {
                name: "tau_p",
                value: 0.0,
            });
        }
        for (user, &pilot) in assignment.iter().enumerate() {
            if pilot >= tau_p {
                return Err(Error::InvalidPilot {
                    user,
                    pilot,
                    tau_p,
                });
            }
        }
        Ok(Self { tau_p, assignment })
    }

    /// Deterministic reuse pattern: user `k` gets pilot `k mod tau_p`.
    pub fn round_robin(users: usize, tau_p: usize) -> Result<Self> {
        Self::new(tau_p, (0..users).map(|k| k % tau_p).collect())
    }

    /// One dedicated pilot per user (`tau_p = users`), so no contamination.
    pub fn orthogonal(users: usize) -> Result<Self> {
        Self::new(users, (0..users).collect())
    }

    /// Pilot sequence length.
    #[must_use]
    pub fn tau_p(&self) -> usize {
        self.tau_p
    }

    /// Number of users covered by the plan.
    #[must_use]
    pub fn users(&self) -> usize {
        self.assignment.len()
    }

    /// Pilot index assigned to user `k`.
    #[must_use]
    pub fn pilot_of(&self, k: usize) -> usize {
        self.assignment[k]
    }

    /// All users on the same pilot as `k`, in ascending order, `k` included.
    #[must_use]
    pub fn copilots(&self, k: usize) -> Vec<usize> {
        let pilot = self.assignment[k];
        (0..self.users())
            .filter(|&other| self.assignment[other] == pilot)
            .collect()
    }

    /// Whether users `a` and `b` use the same pilot.
    #[must_use]
    pub fn shares_pilot(&self, a: usize, b: usize) -> bool {
        self.assignment[a] == self.assignment[b]
    }

    /// Whether every user has a dedicated pilot.
    #[must_use]
    pub fn is_orthogonal(&self) -> bool {
        (0..self.users()).all(|k| self.copilots(k).len() == 1)
    }
}

/// Per-link second-order quantities of the estimator, all `M x K`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationStats {
    /// Aggregated channel power `beta + T`.
    pub delta: DMatrix<f64>,
    /// Reflected contribution `T` alone.
    pub trace_part: DMatrix<f64>,
    /// Linear estimator coefficient applied to the pilot projection.
    pub c: DMatrix<f64>,
    /// Power of the channel estimate.
    pub gamma: DMatrix<f64>,
    /// Power of the estimation error, `delta - gamma`.
    pub error_var: DMatrix<f64>,
    /// Normalized pilot energy `p * tau_p` the coefficients were built for.
    pub pilot_energy: f64,
}

/// Builds the linear MMSE coefficients from the direct gains `beta`, the
/// reflected second moments `T` (both `M x K`), the pilot plan, and the
/// normalized pilot energy `p * tau_p`.
pub fn mmse_coefficients(
    beta: &DMatrix<f64>,
    trace_part: &DMatrix<f64>,
    plan: &PilotPlan,
    pilot_energy: f64,
) -> Result<EstimationStats> {
    let aps = beta.nrows();
    let users = beta.ncols();
    if trace_part.nrows() != aps || trace_part.ncols() != users {
        return Err(Error::DimensionMismatch {
            context: "reflected moment grid",
            expected: aps * users,
            got: trace_part.nrows() * trace_part.ncols(),
        });
    }
    if plan.users() != users {
        return Err(Error::DimensionMismatch {
            context: "pilot assignment",
            expected: users,
            got: plan.users(),
        });
    }
    if !(pilot_energy.is_finite() && pilot_energy > 0.0) {
        return Err(Error::InvalidParameter {
            name: "pilot_energy",
            value: pilot_energy,
        });
    }
    for grid in [beta, trace_part] {
        for &value in grid.iter() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "link moment",
                    value,
                });
            }
        }
    }

    let sqrt_energy = fm::sqrt(pilot_energy);
    let delta = beta + trace_part;
    let mut c = DMatrix::zeros(aps, users);
    let mut gamma = DMatrix::zeros(aps, users);
    // group users per pilot once; ascending order fixes the summation order
    let mut groups: Vec<Vec<usize>> = alloc::vec![Vec::new(); plan.tau_p()];
    for k in 0..users {
        groups[plan.pilot_of(k)].push(k);
    }
    for m in 0..aps {
        for group in &groups {
            let mut sum = 0.0;
            for &k in group {
                sum += delta[(m, k)];
            }
            let denominator = pilot_energy * sum + 1.0;
            for &k in group {
                let coefficient = sqrt_energy * delta[(m, k)] / denominator;
                c[(m, k)] = coefficient;
                gamma[(m, k)] = sqrt_energy * delta[(m, k)] * coefficient;
            }
        }
    }
    let error_var = &delta - &gamma;
    Ok(EstimationStats {
        delta,
        trace_part: trace_part.clone(),
        c,
        gamma,
        error_var,
        pilot_energy,
    })
}

/// Correlates one realization of the aggregated channels `u` (`M x K`) with
/// the pilots: entry `(m, t)` is `sqrt(p tau_p)` times the sum of `u` over
/// the users on pilot `t`, plus one unit-variance complex Gaussian noise
/// draw shared by those users.
///
/// Noise is drawn AP by AP, pilots in ascending order within each AP.
pub fn pilot_projection<R: Rng + ?Sized>(
    u: &DMatrix<Complex64>,
    plan: &PilotPlan,
    pilot_energy: f64,
    rng: &mut R,
) -> Result<DMatrix<Complex64>> {
    if plan.users() != u.ncols() {
        return Err(Error::DimensionMismatch {
            context: "pilot assignment",
            expected: u.ncols(),
            got: plan.users(),
        });
    }
    if !(pilot_energy.is_finite() && pilot_energy > 0.0) {
        return Err(Error::InvalidParameter {
            name: "pilot_energy",
            value: pilot_energy,
        });
    }
    let aps = u.nrows();
    let sqrt_energy = fm::sqrt(pilot_energy);
    let mut projection = DMatrix::from_element(aps, plan.tau_p(), Complex64::new(0.0, 0.0));
    for k in 0..plan.users() {
        let t = plan.pilot_of(k);
        for m in 0..aps {
            projection[(m, t)] += u[(m, k)];
        }
    }
    for m in 0..aps {
        for t in 0..plan.tau_p() {
            projection[(m, t)] = projection[(m, t)] * sqrt_energy + standard_complex(rng);
        }
    }
    Ok(projection)
}

/// Applies the linear coefficients to a pilot projection, giving the `M x K`
/// matrix of channel estimates.
pub fn estimate_channels(
    projection: &DMatrix<Complex64>,
    stats: &EstimationStats,
    plan: &PilotPlan,
) -> Result<DMatrix<Complex64>> {
    let aps = stats.c.nrows();
    let users = stats.c.ncols();
    if projection.nrows() != aps || projection.ncols() != plan.tau_p() {
        return Err(Error::DimensionMismatch {
            context: "pilot projection",
            expected: aps * plan.tau_p(),
            got: projection.nrows() * projection.ncols(),
        });
    }
    if plan.users() != users {
        return Err(Error::DimensionMismatch {
            context: "pilot assignment",
            expected: users,
            got: plan.users(),
        });
    }
    Ok(DMatrix::from_fn(aps, users, |m, k| {
        projection[(m, plan.pilot_of(k))] * stats.c[(m, k)]
    }))
}

/// Per-link normalized mean-squared error `1 - gamma / delta`.
///
/// Links with `delta = 0` carry no channel at all; their entry is NaN.
#[must_use]
pub fn nmse(stats: &EstimationStats) -> DMatrix<f64> {
    DMatrix::from_fn(stats.delta.nrows(), stats.delta.ncols(), |m, k| {
        stats.error_var[(m, k)] / stats.delta[(m, k)]
    })
}
