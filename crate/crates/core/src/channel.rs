//! Channel realizations and the moments of the aggregated link.
//!
//! Every AP-user pair has a direct Rayleigh channel plus a reflected path
//! through the RIS, and the receiver only ever works with their sum
//! `u = g + h^H Phi z`, the aggregated channel. Realizations are drawn
//! through the low-rank factor of the shared base correlation, so a surface
//! with `N` elements costs `O(N r)` per vector instead of `O(N^2)`.
//!
//! [`aggregated_moments`] gives the exact second and fourth moments of `u`;
//! the Monte Carlo suite checks the sampled statistics against them.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::correlation::{trace_product, trace_product_squared, CorrelationSet};
use crate::error::{Error, Result};
use crate::fm;
use crate::phase::PhaseConfig;
use crate::rng::standard_complex;

/// One draw of every channel in the network.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    direct: DMatrix<Complex64>,
    ap_ris: Vec<DVector<Complex64>>,
    ris_user: Vec<DVector<Complex64>>,
}

impl ChannelRealization {
    /// Number of APs.
    #[must_use]
    pub fn ap_count(&self) -> usize {
        self.direct.nrows()
    }

    /// Number of users.
    #[must_use]
    pub fn user_count(&self) -> usize {
        self.direct.ncols()
    }

    /// Direct channels, one entry per AP-user pair.
    #[must_use]
    pub fn direct(&self) -> &DMatrix<Complex64> {
        &self.direct
    }

    /// Channel from the RIS to AP `m`.
    #[must_use]
    pub fn ap_ris(&self, m: usize) -> &DVector<Complex64> {
        &self.ap_ris[m]
    }

    /// Channel from user `k` to the RIS as seen in the path towards AP `m`.
    ///
    /// The reflected paths to different APs fade independently, which is why
    /// the vector is indexed by the pair and not by the user alone.
    #[must_use]
    pub fn ris_user_link(&self, m: usize, k: usize) -> &DVector<Complex64> {
        &self.ris_user[m * self.user_count() + k]
    }
}

/// Draws one network realization.
///
/// Order of consumption from `rng`: the direct matrix (APs outer, users
/// inner), then the AP-side latent vectors in AP order, then the user-side
/// latent vectors (APs outer, users inner). Each latent has the rank of the
/// base-correlation factor.
pub fn sample_channels<R: Rng + ?Sized>(
    correlations: &CorrelationSet,
    beta: &DMatrix<f64>,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let aps = correlations.ap_count();
    let users = correlations.user_count();
    if beta.nrows() != aps || beta.ncols() != users {
        return Err(Error::DimensionMismatch {
            context: "direct gain grid",
            expected: aps * users,
            got: beta.nrows() * beta.ncols(),
        });
    }
    let factor = correlations.base().factor();
    let rank = factor.ncols();

    let mut direct = DMatrix::from_element(aps, users, Complex64::new(0.0, 0.0));
    for m in 0..aps {
        for k in 0..users {
            direct[(m, k)] = standard_complex(rng) * fm::sqrt(beta[(m, k)]);
        }
    }

    let elements = factor.nrows();
    let mut latent = DVector::from_element(rank, Complex64::new(0.0, 0.0));
    let mut draw_scaled = |scale: f64, rng: &mut R| -> DVector<Complex64> {
        for value in latent.iter_mut() {
            *value = standard_complex(rng);
        }
        // real factor times complex latent, column by column
        let mut vector = DVector::from_element(elements, Complex64::new(0.0, 0.0));
        for j in 0..rank {
            let weight = latent[j];
            for i in 0..elements {
                vector[i] += weight * factor[(i, j)];
            }
        }
        let amplitude = fm::sqrt(scale);
        for value in vector.iter_mut() {
            *value *= amplitude;
        }
        vector
    };

    let mut ap_ris = Vec::with_capacity(aps);
    for m in 0..aps {
        ap_ris.push(draw_scaled(correlations.ap_scale(m), rng));
    }
    let mut ris_user = Vec::with_capacity(aps * users);
    for m in 0..aps {
        for k in 0..users {
            ris_user.push(draw_scaled(correlations.link_scale(m, k), rng));
        }
    }
    Ok(ChannelRealization {
        direct,
        ap_ris,
        ris_user,
    })
}

/// Aggregated channels `u = g + h^H Phi z` for every AP-user pair.
pub fn aggregate(
    realization: &ChannelRealization,
    phase: &PhaseConfig,
) -> Result<DMatrix<Complex64>> {
    let aps = realization.ap_count();
    let users = realization.user_count();
    let elements = if aps == 0 {
        phase.len()
    } else {
        realization.ap_ris[0].len()
    };
    if phase.len() != elements {
        return Err(Error::DimensionMismatch {
            context: "phase configuration",
            expected: elements,
            got: phase.len(),
        });
    }
    let diagonal = phase.diagonal();
    let mut u = realization.direct.clone();
    for m in 0..aps {
        let h = &realization.ap_ris[m];
        for k in 0..users {
            let z = realization.ris_user_link(m, k);
            let mut reflected = Complex64::new(0.0, 0.0);
            for n in 0..elements {
                reflected += h[n].conj() * diagonal[n] * z[n];
            }
            u[(m, k)] += reflected;
        }
    }
    Ok(u)
}

/// Exact second and fourth absolute moments of one aggregated channel built
/// from the direct gain `beta` and dense covariances of the two reflected
/// hops.
///
/// With `T = tr(Phi^H R_ap Phi R_user)` and `xi` the same trace of the
/// squared product, the moments are `beta + T` and
/// `2 (beta + T)^2 + 2 xi`.
pub fn aggregated_moments(
    beta: f64,
    r_ap: &DMatrix<Complex64>,
    r_user: &DMatrix<Complex64>,
    phases: &[Complex64],
) -> Result<(f64, f64)> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
        });
    }
    let t = trace_product(phases, r_ap, r_user)?;
    let xi = trace_product_squared(phases, r_ap, r_user)?;
    let second = beta + t;
    let fourth = 2.0 * second * second + 2.0 * xi;
    Ok((second, fourth))
}

/// `E |x^H M x|^2` for `x ~ CN(0, R)`: equals
/// `|tr(R M)|^2 + tr(R M R M^H)`.
pub fn quadratic_form_moment(r: &DMatrix<Complex64>, m: &DMatrix<Complex64>) -> Result<f64> {
    let n = r.nrows();
    if r.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "quadratic form",
            expected: n,
            got: m.nrows(),
        });
    }
    let p = r * m;
    let first = p.trace().norm_sqr();
    let q = r * m.adjoint();
    let second = (&p * &q).trace();
    debug_assert!(second.im.abs() <= 1e-9 * (1.0 + second.re.abs()));
    Ok(first + second.re)
}
