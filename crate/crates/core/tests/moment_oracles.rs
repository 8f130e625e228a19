//! Monte Carlo verification of the closed-form channel moments.
//!
//! Every statistic with a formula in the library is re-estimated here from
//! raw draws and compared at a few percent tolerance around five standard
//! errors, so an algebra slip in either place shows up as a mismatch.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use riscf_core::channel::{
    aggregate, aggregated_moments, quadratic_form_moment, sample_channels,
};
use riscf_core::correlation::{
    build_ris_geometry, psd_factor, scaled_covariances, sinc_correlation_matrix, BaseCorrelation,
    CorrelationSet,
};
use riscf_core::estimation::{
    estimate_channels, mmse_coefficients, nmse, pilot_projection, PilotPlan,
};
use riscf_core::phase::{random_phase_design, PhaseConfig};
use riscf_core::rng::{standard_complex, trial_rng};

fn random_psd(n: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n, n, |_, _| standard_complex(rng));
    (&a * a.adjoint()) / Complex64::new(n as f64, 0.0)
}

fn correlated_sample(
    factor: &DMatrix<Complex64>,
    rng: &mut impl Rng,
) -> nalgebra::DVector<Complex64> {
    let latent = nalgebra::DVector::from_fn(factor.ncols(), |_, _| standard_complex(rng));
    factor * latent
}

#[test]
fn fourth_moment_formula_matches_sampling() {
    let n = 8;
    let mut rng = trial_rng(0xA1, 0);
    let r_ap = random_psd(n, &mut rng);
    let r_user = random_psd(n, &mut rng);
    let phase = random_phase_design(n, &mut rng);
    let diagonal = phase.diagonal();
    let beta = 0.7;
    let (second, fourth) = aggregated_moments(beta, &r_ap, &r_user, &diagonal).unwrap();

    let f_ap = psd_factor(&r_ap).unwrap();
    let f_user = psd_factor(&r_user).unwrap();
    let sqrt_beta = beta.sqrt();
    let trials = 1_000_000;
    let mut sum2 = 0.0;
    let mut sum4 = 0.0;
    for _ in 0..trials {
        let g = standard_complex(&mut rng) * sqrt_beta;
        let h = correlated_sample(&f_ap, &mut rng);
        let z = correlated_sample(&f_user, &mut rng);
        let mut reflected = Complex64::new(0.0, 0.0);
        for i in 0..n {
            reflected += h[i].conj() * diagonal[i] * z[i];
        }
        let u = g + reflected;
        let power = u.norm_sqr();
        sum2 += power;
        sum4 += power * power;
    }
    let mean2 = sum2 / trials as f64;
    let mean4 = sum4 / trials as f64;
    assert!(
        (mean2 - second).abs() / second < 0.02,
        "second moment: sampled {mean2}, formula {second}"
    );
    assert!(
        (mean4 - fourth).abs() / fourth < 0.02,
        "fourth moment: sampled {mean4}, formula {fourth}"
    );
}

#[test]
fn quadratic_form_moment_matches_sampling() {
    let n = 6;
    let mut rng = trial_rng(0xA2, 0);
    let r = random_psd(n, &mut rng);
    let m = DMatrix::from_fn(n, n, |_, _| standard_complex(&mut rng));
    let expected = quadratic_form_moment(&r, &m).unwrap();

    let f = psd_factor(&r).unwrap();
    let trials = 1_000_000;
    let mut sum = 0.0;
    for _ in 0..trials {
        let x = correlated_sample(&f, &mut rng);
        let value = (x.adjoint() * &m * &x)[(0, 0)];
        sum += value.norm_sqr();
    }
    let mean = sum / trials as f64;
    assert!(
        (mean - expected).abs() / expected < 0.02,
        "sampled {mean}, formula {expected}"
    );
}

fn small_network() -> (CorrelationSet, DMatrix<f64>) {
    let wavelength = 0.15;
    let spacing = wavelength / 4.0;
    let geometry = build_ris_geometry(2, 2, spacing, spacing, wavelength).unwrap();
    let base = BaseCorrelation::new(sinc_correlation_matrix(&geometry)).unwrap();
    let link_gain = DMatrix::from_row_slice(2, 2, &[0.8, 1.3, 1.0, 0.4]);
    let set = scaled_covariances(base, &[1.0, 0.6], &link_gain, spacing, spacing).unwrap();
    let beta = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.8]);
    (set, beta)
}

#[test]
fn aggregated_channel_has_no_odd_moments() {
    let (set, beta) = small_network();
    let phase = random_phase_design(set.elements(), &mut trial_rng(0xA3, 0));
    let mut rng = trial_rng(0xA3, 1);
    let trials = 100_000;
    let mut mean = Complex64::new(0.0, 0.0);
    let mut power = 0.0;
    for _ in 0..trials {
        let realization = sample_channels(&set, &beta, &mut rng).unwrap();
        let u = aggregate(&realization, &phase).unwrap();
        mean += u[(0, 0)];
        power += u[(0, 0)].norm_sqr();
    }
    let mean = mean / Complex64::new(trials as f64, 0.0);
    let std_error = (power / trials as f64 / trials as f64).sqrt();
    assert!(
        mean.norm() < 5.0 * std_error,
        "mean {mean} exceeds 5 standard errors {std_error}"
    );
}

#[test]
fn estimates_carry_the_predicted_power_and_orthogonal_error() {
    let (set, beta) = small_network();
    let phase = PhaseConfig::equal(set.elements(), 0.9).unwrap();
    let plan = PilotPlan::round_robin(2, 1).unwrap();
    let pilot_energy = 4.0;

    let traces = set.phase_traces(&phase);
    let (trace_grid, _) = set.moment_grids(&traces);
    let stats = mmse_coefficients(&beta, &trace_grid, &plan, pilot_energy).unwrap();

    let mut rng = trial_rng(0xA4, 0);
    let trials = 100_000;
    let aps = 2;
    let users = 2;
    let mut estimate_power = DMatrix::<f64>::zeros(aps, users);
    let mut cross = DMatrix::<Complex64>::zeros(aps, users);
    let mut projection_power = 0.0;
    for _ in 0..trials {
        let realization = sample_channels(&set, &beta, &mut rng).unwrap();
        let u = aggregate(&realization, &phase).unwrap();
        let projection = pilot_projection(&u, &plan, pilot_energy, &mut rng).unwrap();
        let estimates = estimate_channels(&projection, &stats, &plan).unwrap();
        projection_power += projection[(0, 0)].norm_sqr();
        for m in 0..aps {
            for k in 0..users {
                estimate_power[(m, k)] += estimates[(m, k)].norm_sqr();
                cross[(m, k)] += estimates[(m, k)] * (u[(m, k)] - estimates[(m, k)]).conj();
            }
        }
    }

    // shared pilot: projection variance is the contaminated denominator
    let expected_projection =
        pilot_energy * (stats.delta[(0, 0)] + stats.delta[(0, 1)]) + 1.0;
    let sampled_projection = projection_power / trials as f64;
    assert!(
        (sampled_projection - expected_projection).abs() / expected_projection < 0.02,
        "projection power: sampled {sampled_projection}, formula {expected_projection}"
    );

    for m in 0..aps {
        for k in 0..users {
            let sampled = estimate_power[(m, k)] / trials as f64;
            let expected = stats.gamma[(m, k)];
            assert!(
                (sampled - expected).abs() / expected < 0.02,
                "estimate power ({m},{k}): sampled {sampled}, formula {expected}"
            );
            // error orthogonality within five standard errors
            let mean_cross = cross[(m, k)] / Complex64::new(trials as f64, 0.0);
            let scale = (stats.gamma[(m, k)] * stats.error_var[(m, k)]).sqrt()
                / (trials as f64).sqrt();
            assert!(
                mean_cross.norm() < 5.0 * scale.max(1e-12),
                "estimate correlates with its error at ({m},{k}): {mean_cross}"
            );
        }
    }

    let err = nmse(&stats);
    for value in err.iter() {
        assert!((0.0..=1.0).contains(value));
    }
}

#[test]
fn sampled_ap_covariance_matches_request() {
    let (set, beta) = small_network();
    let mut rng = trial_rng(0xA5, 0);
    let trials = 100_000;
    let n = set.elements();
    let mut cov = DMatrix::<Complex64>::zeros(n, n);
    for _ in 0..trials {
        let realization = sample_channels(&set, &beta, &mut rng).unwrap();
        let h = realization.ap_ris(1);
        for a in 0..n {
            for b in 0..n {
                cov[(a, b)] += h[a] * h[b].conj();
            }
        }
    }
    let expected = set.ap_covariance(1);
    let scale = 1.0 / trials as f64;
    for a in 0..n {
        for b in 0..n {
            let sampled = cov[(a, b)] * scale;
            let target = expected[(a, b)];
            let tolerance = 0.03 * expected[(a, a)].max(expected[(b, b)]);
            assert!(
                (sampled.re - target).abs() < tolerance && sampled.im.abs() < tolerance,
                "covariance ({a},{b}): sampled {sampled}, expected {target}"
            );
        }
    }
}
