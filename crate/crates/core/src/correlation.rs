//! Spatial correlation across the RIS surface.
//!
//! The RIS is a rectangular grid of rectangular elements. Under isotropic
//! scattering the correlation between two elements depends only on their
//! spacing, through `sinc(2 d / wavelength)`, so every AP-side and user-side
//! covariance is one shared unit-diagonal matrix scaled by the link gain and
//! the element area. [`CorrelationSet`] stores exactly that factorization
//! instead of the `M + M * K` dense matrices it describes, which is what makes
//! surfaces with hundreds of elements affordable.
//!
//! Generic Hermitian inputs are still accepted by the free functions
//! ([`psd_factor`], [`trace_product`], [`trace_product_squared`]); they back
//! the reference checks in the test suite.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fm;
use crate::phase::PhaseConfig;

/// Relative eigenvalue cutoff below which a covariance direction is dropped.
pub const EIGENVALUE_CUTOFF: f64 = 1e-12;
/// Relative tolerance for Hermitian symmetry and negative-eigenvalue checks.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// Rectangular RIS panel: grid dimensions, element spacing, and wavelength,
/// all lengths in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct RisGeometry {
    columns: usize,
    rows: usize,
    spacing_h: f64,
    spacing_v: f64,
    wavelength: f64,
}

/// Builds the RIS panel description, rejecting non-physical inputs.
pub fn build_ris_geometry(
    columns: usize,
    rows: usize,
    spacing_h: f64,
    spacing_v: f64,
    wavelength: f64,
) -> Result<RisGeometry> {
    if columns == 0 || rows == 0 {
        return Err(Error::InvalidGeometry(alloc::format!(
            "grid must be non-empty, got {columns} x {rows}"
        )));
    }
    for (name, value) in [
        ("horizontal spacing", spacing_h),
        ("vertical spacing", spacing_v),
        ("wavelength", wavelength),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidGeometry(alloc::format!("{name} = {value}")));
        }
    }
    Ok(RisGeometry {
        columns,
        rows,
        spacing_h,
        spacing_v,
        wavelength,
    })
}

impl RisGeometry {
    /// Total number of elements.
    #[must_use]
    pub fn elements(&self) -> usize {
        self.columns * self.rows
    }

    /// Grid width (elements per row).
    #[must_use]
    pub fn columns(&self) -> usize {
        self.columns
    }

    /// Grid height (number of rows).
    #[must_use]
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Horizontal element spacing in meters.
    #[must_use]
    pub fn spacing_h(&self) -> f64 {
        self.spacing_h
    }

    /// Vertical element spacing in meters.
    #[must_use]
    pub fn spacing_v(&self) -> f64 {
        self.spacing_v
    }

    /// Carrier wavelength in meters.
    #[must_use]
    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Area `d_h * d_v` occupied by one element, in square meters.
    #[must_use]
    pub fn element_area(&self) -> f64 {
        self.spacing_h * self.spacing_v
    }

    /// Position of element `index` (0-based) in meters.
    ///
    /// The surface lies in the y-z plane and is filled row by row along y, so
    /// element `index` sits at `[0, (index % columns) * d_h, (index / columns) * d_v]`.
    #[must_use]
    pub fn position(&self, index: usize) -> [f64; 3] {
        let column = index % self.columns;
        let row = index / self.columns;
        [
            0.0,
            column as f64 * self.spacing_h,
            row as f64 * self.spacing_v,
        ]
    }
}

/// `sin(pi x) / (pi x)`, continuously extended with `sinc(0) = 1`.
#[must_use]
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let t = PI * x;
        fm::sin(t) / t
    }
}

/// Unit-diagonal correlation matrix of the RIS elements under isotropic
/// scattering: entry `(a, b)` is `sinc(2 d_ab / wavelength)`.
#[must_use]
pub fn sinc_correlation_matrix(geometry: &RisGeometry) -> DMatrix<f64> {
    let n = geometry.elements();
    let mut positions = Vec::with_capacity(n);
    for index in 0..n {
        positions.push(geometry.position(index));
    }
    let scale = 2.0 / geometry.wavelength();
    DMatrix::from_fn(n, n, |a, b| {
        let pa = positions[a];
        let pb = positions[b];
        let dy = pa[1] - pb[1];
        let dz = pa[2] - pb[2];
        sinc(scale * fm::sqrt(dy * dy + dz * dz))
    })
}

/// Low-rank factor of a real symmetric PSD matrix: returns `F` with
/// `F * F^T` equal to the input up to the eigenvalue cutoff.
///
/// Eigenvalues below `EIGENVALUE_CUTOFF` times the largest one are dropped;
/// an eigenvalue below `-PSD_TOLERANCE` times the largest one is an error.
pub fn psd_factor_sym(matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (factor, _) = sym_eigen_factor(matrix)?;
    Ok(factor)
}

/// Same as [`psd_factor_sym`] for a complex Hermitian matrix.
pub fn psd_factor(matrix: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = check_square(matrix.nrows(), matrix.ncols(), "psd_factor")?;
    check_hermitian(matrix)?;
    let eigen = matrix.clone().symmetric_eigen();
    let order = descending_order(eigen.eigenvalues.as_slice());
    let largest = eigen.eigenvalues[order[0]].max(0.0);
    let mut kept = Vec::new();
    for &idx in &order {
        let value = eigen.eigenvalues[idx];
        if value < -PSD_TOLERANCE * largest {
            return Err(Error::NotPositiveSemiDefinite {
                min: value,
                max: largest,
            });
        }
        if value >= EIGENVALUE_CUTOFF * largest && value > 0.0 {
            kept.push(idx);
        }
    }
    let mut factor = DMatrix::zeros(n, kept.len());
    for (col, &idx) in kept.iter().enumerate() {
        let weight = Complex64::new(fm::sqrt(eigen.eigenvalues[idx]), 0.0);
        for row in 0..n {
            factor[(row, col)] = eigen.eigenvectors[(row, idx)] * weight;
        }
    }
    Ok(factor)
}

/// Second-moment trace functional `tr(Phi^H A Phi B)` for a diagonal
/// phase-shift matrix given by its unit-modulus entries.
///
/// Both matrices must be Hermitian; the result is then real and the numerical
/// imaginary residue is discarded.
pub fn trace_product(
    phases: &[Complex64],
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
) -> Result<f64> {
    let n = check_phase_args(phases, a, b)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let left = phases[i].conj();
        for j in 0..n {
            acc += left * a[(i, j)] * phases[j] * b[(j, i)];
        }
    }
    Ok(discard_residue(acc))
}

/// Fourth-moment trace functional `tr((Phi^H A Phi B)^2)` under the same
/// contract as [`trace_product`].
pub fn trace_product_squared(
    phases: &[Complex64],
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
) -> Result<f64> {
    let n = check_phase_args(phases, a, b)?;
    // X = Phi^H A Phi is an elementwise rotation of A, then Y = X * B.
    let x = DMatrix::from_fn(n, n, |i, j| phases[i].conj() * a[(i, j)] * phases[j]);
    let y = &x * b;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += y[(i, j)] * y[(j, i)];
        }
    }
    Ok(discard_residue(acc))
}

/// The pair of base-matrix trace functionals a phase configuration induces.
///
/// For covariances that share one base matrix `R`, every per-link moment is a
/// scalar multiple of these two numbers, so experiments compute them once per
/// phase configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTraces {
    /// `tr(Phi^H R Phi R)`.
    pub second: f64,
    /// `tr((Phi^H R Phi R)^2)`.
    pub fourth: f64,
}

/// Shared base correlation matrix with its factor, reusable across every
/// scenario drawn on the same RIS geometry.
#[derive(Debug, Clone)]
pub struct BaseCorrelation {
    base: Arc<DMatrix<f64>>,
    factor: Arc<DMatrix<f64>>,
    spectral_norm: f64,
}

impl BaseCorrelation {
    /// Validates the base matrix (unit diagonal, symmetric, PSD) and
    /// factorizes it.
    pub fn new(base: DMatrix<f64>) -> Result<Self> {
        let n = check_square(base.nrows(), base.ncols(), "base correlation")?;
        for i in 0..n {
            if (base[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter {
                    name: "base diagonal",
                    value: base[(i, i)],
                });
            }
        }
        let (factor, spectral_norm) = sym_eigen_factor(&base)?;
        Ok(Self {
            base: Arc::new(base),
            factor: Arc::new(factor),
            spectral_norm,
        })
    }

    /// Number of RIS elements the base matrix covers.
    #[must_use]
    pub fn elements(&self) -> usize {
        self.base.nrows()
    }

    /// The shared unit-diagonal matrix.
    #[must_use]
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.base
    }

    /// Real factor `F` with `F F^T` equal to the base up to the cutoff.
    #[must_use]
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Largest eigenvalue of the base matrix.
    #[must_use]
    pub fn spectral_norm(&self) -> f64 {
        self.spectral_norm
    }
}

/// Complete second-order description of every AP-RIS and RIS-user channel:
/// one shared base matrix plus nonnegative per-AP and per-link scales that
/// already include the element area.
#[derive(Debug, Clone)]
pub struct CorrelationSet {
    base: BaseCorrelation,
    ap_scale: Vec<f64>,
    link_scale: DMatrix<f64>,
}

/// Assembles a [`CorrelationSet`] from the shared base, the AP-side gains,
/// the user-side gains (one row per AP, one column per user), and the element
/// spacing in meters.
pub fn scaled_covariances(
    base: BaseCorrelation,
    ap_gain: &[f64],
    link_gain: &DMatrix<f64>,
    spacing_h: f64,
    spacing_v: f64,
) -> Result<CorrelationSet> {
    if !(spacing_h.is_finite() && spacing_h > 0.0) {
        return Err(Error::InvalidParameter {
            name: "spacing_h",
            value: spacing_h,
        });
    }
    if !(spacing_v.is_finite() && spacing_v > 0.0) {
        return Err(Error::InvalidParameter {
            name: "spacing_v",
            value: spacing_v,
        });
    }
    if link_gain.nrows() != ap_gain.len() {
        return Err(Error::DimensionMismatch {
            context: "link gain rows",
            expected: ap_gain.len(),
            got: link_gain.nrows(),
        });
    }
    let area = spacing_h * spacing_v;
    let mut ap_scale = Vec::with_capacity(ap_gain.len());
    for &gain in ap_gain {
        ap_scale.push(checked_scale(gain, "ap_gain")? * area);
    }
    let mut link_scale = link_gain.clone();
    for value in link_scale.iter_mut() {
        *value = checked_scale(*value, "link_gain")? * area;
    }
    Ok(CorrelationSet {
        base,
        ap_scale,
        link_scale,
    })
}

impl CorrelationSet {
    /// Number of RIS elements.
    #[must_use]
    pub fn elements(&self) -> usize {
        self.base.elements()
    }

    /// Number of APs.
    #[must_use]
    pub fn ap_count(&self) -> usize {
        self.ap_scale.len()
    }

    /// Number of users.
    #[must_use]
    pub fn user_count(&self) -> usize {
        self.link_scale.ncols()
    }

    /// Shared base correlation.
    #[must_use]
    pub fn base(&self) -> &BaseCorrelation {
        &self.base
    }

    /// Scale of the AP-side covariance of AP `m` (gain times element area).
    #[must_use]
    pub fn ap_scale(&self, m: usize) -> f64 {
        self.ap_scale[m]
    }

    /// Scale of the user-side covariance of the `(m, k)` link.
    #[must_use]
    pub fn link_scale(&self, m: usize, k: usize) -> f64 {
        self.link_scale[(m, k)]
    }

    /// Product of the AP-side and user-side scales of one cascaded link.
    #[must_use]
    pub fn cascade_scale(&self, m: usize, k: usize) -> f64 {
        self.ap_scale[m] * self.link_scale[(m, k)]
    }

    /// Restriction to the first `aps` access points, for convergence studies
    /// that grow the AP population along a fixed draw.
    pub fn truncate_aps(&self, aps: usize) -> Result<Self> {
        if aps == 0 || aps > self.ap_count() {
            return Err(Error::DimensionMismatch {
                context: "AP truncation",
                expected: self.ap_count(),
                got: aps,
            });
        }
        Ok(Self {
            base: self.base.clone(),
            ap_scale: self.ap_scale[..aps].to_vec(),
            link_scale: self.link_scale.rows(0, aps).into_owned(),
        })
    }

    /// Dense AP-side covariance of AP `m` (mostly for tests and small setups).
    #[must_use]
    pub fn ap_covariance(&self, m: usize) -> DMatrix<f64> {
        self.base.matrix() * self.ap_scale[m]
    }

    /// Dense user-side covariance of the `(m, k)` link.
    #[must_use]
    pub fn link_covariance(&self, m: usize, k: usize) -> DMatrix<f64> {
        self.base.matrix() * self.link_scale[(m, k)]
    }

    /// `tr(Phi^H R Phi R)` over the shared base.
    ///
    /// Computed from phase differences, so all equal-phase configurations
    /// evaluate bitwise identically regardless of the common angle.
    #[must_use]
    pub fn base_trace_product(&self, phase: &PhaseConfig) -> f64 {
        base_trace_product_angles(self.base.matrix(), phase.angles())
    }

    /// Both base trace functionals; the fourth-moment one costs a dense
    /// matrix product, so callers should cache the result per phase.
    #[must_use]
    pub fn phase_traces(&self, phase: &PhaseConfig) -> PhaseTraces {
        let base = self.base.matrix();
        let angles = phase.angles();
        let second = base_trace_product_angles(base, angles);
        let fourth = base_trace_product_squared_angles(base, angles);
        PhaseTraces { second, fourth }
    }

    /// Per-link second- and fourth-moment trace grids (`M x K` each) induced
    /// by previously computed base functionals.
    #[must_use]
    pub fn moment_grids(&self, traces: &PhaseTraces) -> (DMatrix<f64>, DMatrix<f64>) {
        let m = self.ap_count();
        let k = self.user_count();
        let second = DMatrix::from_fn(m, k, |i, j| self.cascade_scale(i, j) * traces.second);
        let fourth = DMatrix::from_fn(m, k, |i, j| {
            let s = self.cascade_scale(i, j);
            s * s * traces.fourth
        });
        (second, fourth)
    }
}

pub(crate) fn base_trace_product_angles(base: &DMatrix<f64>, angles: &[f64]) -> f64 {
    let n = base.nrows();
    debug_assert_eq!(angles.len(), n);
    let mut acc = 0.0;
    for i in 0..n {
        let d = base[(i, i)];
        acc += d * d;
        for j in (i + 1)..n {
            let r = base[(i, j)];
            if r != 0.0 {
                acc += 2.0 * r * r * fm::cos(angles[j] - angles[i]);
            }
        }
    }
    acc
}

fn base_trace_product_squared_angles(base: &DMatrix<f64>, angles: &[f64]) -> f64 {
    let n = base.nrows();
    debug_assert_eq!(angles.len(), n);
    // W = Phi^H R Phi, then tr((W R)^2) = sum_ij (W R)_ij (W R)_ji.
    let mut w = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for j in 0..n {
        for i in 0..n {
            let r = base[(i, j)];
            if r != 0.0 {
                let d = angles[j] - angles[i];
                w[(i, j)] = Complex64::new(r * fm::cos(d), r * fm::sin(d));
            }
        }
    }
    let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    let w_slice = w.as_slice();
    let y_slice = y.as_mut_slice();
    for j in 0..n {
        let y_col = &mut y_slice[j * n..(j + 1) * n];
        for l in 0..n {
            let b = base[(l, j)];
            if b != 0.0 {
                let w_col = &w_slice[l * n..(l + 1) * n];
                for i in 0..n {
                    y_col[i] += w_col[i] * b;
                }
            }
        }
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += y[(i, j)] * y[(j, i)];
        }
    }
    discard_residue(acc)
}

fn checked_scale(value: f64, name: &'static str) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter { name, value })
    }
}

fn check_square(rows: usize, cols: usize, context: &'static str) -> Result<usize> {
    if rows == cols {
        Ok(rows)
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected: rows,
            got: cols,
        })
    }
}

fn check_hermitian(matrix: &DMatrix<Complex64>) -> Result<()> {
    let n = matrix.nrows();
    let mut scale: f64 = 0.0;
    for value in matrix.iter() {
        scale = scale.max(value.norm_sqr());
    }
    let scale = fm::sqrt(scale).max(1.0);
    let mut worst = 0.0;
    for i in 0..n {
        for j in i..n {
            let asym = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
            if asym > worst {
                worst = asym;
            }
        }
    }
    if worst > PSD_TOLERANCE * scale {
        Err(Error::NotHermitian { asymmetry: worst })
    } else {
        Ok(())
    }
}

fn check_symmetric(matrix: &DMatrix<f64>) -> Result<()> {
    let n = matrix.nrows();
    let mut scale: f64 = 1.0;
    for value in matrix.iter() {
        scale = scale.max(value.abs());
    }
    let mut worst = 0.0;
    for i in 0..n {
        for j in i..n {
            let asym = (matrix[(i, j)] - matrix[(j, i)]).abs();
            if asym > worst {
                worst = asym;
            }
        }
    }
    if worst > PSD_TOLERANCE * scale {
        Err(Error::NotHermitian { asymmetry: worst })
    } else {
        Ok(())
    }
}

fn check_phase_args(
    phases: &[Complex64],
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
) -> Result<usize> {
    let n = phases.len();
    for (matrix, context) in [(a, "first trace factor"), (b, "second trace factor")] {
        check_square(matrix.nrows(), matrix.ncols(), context)?;
        if matrix.nrows() != n {
            return Err(Error::DimensionMismatch {
                context,
                expected: n,
                got: matrix.nrows(),
            });
        }
        check_hermitian(matrix)?;
    }
    for (index, value) in phases.iter().enumerate() {
        let modulus = value.norm();
        if (modulus - 1.0).abs() > PSD_TOLERANCE {
            return Err(Error::NotUnitModulus { index, modulus });
        }
    }
    Ok(n)
}

fn discard_residue(value: Complex64) -> f64 {
    debug_assert!(
        value.im.abs() <= 1e-9 * (1.0 + value.re.abs()),
        "imaginary residue {} on trace {}",
        value.im,
        value.re
    );
    value.re
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

fn sym_eigen_factor(matrix: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let n = check_square(matrix.nrows(), matrix.ncols(), "psd_factor_sym")?;
    check_symmetric(matrix)?;
    let eigen = matrix.clone().symmetric_eigen();
    let order = descending_order(eigen.eigenvalues.as_slice());
    let largest = eigen.eigenvalues[order[0]].max(0.0);
    let mut kept = Vec::new();
    for &idx in &order {
        let value = eigen.eigenvalues[idx];
        if value < -PSD_TOLERANCE * largest {
            return Err(Error::NotPositiveSemiDefinite {
                min: value,
                max: largest,
            });
        }
        if value >= EIGENVALUE_CUTOFF * largest && value > 0.0 {
            kept.push(idx);
        }
    }
    let mut factor = DMatrix::zeros(n, kept.len());
    for (col, &idx) in kept.iter().enumerate() {
        let weight = fm::sqrt(eigen.eigenvalues[idx]);
        for row in 0..n {
            factor[(row, col)] = eigen.eigenvectors[(row, idx)] * weight;
        }
    }
    Ok((factor, largest))
}
