//! Monte Carlo estimation of the ergodic SINRs and of the large-system
//! decision statistics.
//!
//! The sampler draws complete network trials (channels, pilot noise, data
//! noise), forms the maximum-ratio decision statistics exactly as a receiver
//! would, and estimates every SINR term from empirical moments. It exists to
//! validate the closed forms, so it shares no algebra with them beyond the
//! estimator coefficients.
//!
//! Determinism: every trial consumes its own counter-derived stream, trials
//! are grouped into fixed chunks, and chunk results are merged in index
//! order, so the outcome is bit-identical no matter how chunks are scheduled
//! across threads. Confidence intervals come from batch means over a fixed
//! number of batches.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::correlation::CorrelationSet;
use crate::error::{Error, Result};
use crate::estimation::{mmse_coefficients, EstimationStats, PilotPlan};
use crate::fm;
use crate::phase::PhaseConfig;
use crate::rng::{standard_complex, trial_rng};
use crate::scenario::Scenario;
use crate::throughput::{default_power_control, PowerConfig};

/// Trial budget and determinism knobs of one Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarloConfig {
    /// Number of independent trials.
    pub trials: u64,
    /// Base seed; a given seed fixes every draw of the run.
    pub seed: u64,
    /// Number of batches for the batch-means confidence interval.
    pub batches: usize,
    /// Trials per scheduling chunk.
    pub chunk: usize,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            trials: 100_000,
            seed: 1,
            batches: 32,
            chunk: 2048,
        }
    }
}

impl MonteCarloConfig {
    /// Checks the run is large enough to estimate moments at all.
    pub fn validate(&self) -> Result<()> {
        if self.trials < 100 {
            return Err(Error::InvalidParameter {
                name: "trials",
                value: self.trials as f64,
            });
        }
        if self.batches == 0 {
            return Err(Error::InvalidParameter {
                name: "batches",
                value: 0.0,
            });
        }
        if self.chunk == 0 {
            return Err(Error::InvalidParameter {
                name: "chunk",
                value: 0.0,
            });
        }
        Ok(())
    }
}

/// Which decision statistics a run should sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Uplink only.
    Uplink,
    /// Downlink only.
    Downlink,
    /// Both directions from the same channel draws.
    Both,
}

impl Mode {
    fn uplink(self) -> bool {
        matches!(self, Mode::Uplink | Mode::Both)
    }

    fn downlink(self) -> bool {
        matches!(self, Mode::Downlink | Mode::Both)
    }
}

/// Compensated scalar sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    /// Adds one value.
    pub fn add(&mut self, value: f64) {
        let y = value - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    /// Folds another sum in, keeping its compensation.
    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.sum);
        self.add(-other.compensation);
    }

    /// Current total.
    #[must_use]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct KahanComplex {
    re: KahanSum,
    im: KahanSum,
}

impl KahanComplex {
    fn add(&mut self, value: Complex64) {
        self.re.add(value.re);
        self.im.add(value.im);
    }

    fn merge(&mut self, other: &KahanComplex) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Running empirical moments of the decision statistics of every user.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    users: usize,
    count: u64,
    ul_mean: Vec<KahanComplex>,
    ul_square: Vec<KahanSum>,
    ul_cross: Vec<KahanSum>,
    ul_noise: Vec<KahanSum>,
    dl_mean: Vec<KahanComplex>,
    dl_square: Vec<KahanSum>,
    dl_cross: Vec<KahanSum>,
}

impl MomentAccumulator {
    /// Empty accumulator for `users` users.
    #[must_use]
    pub fn new(users: usize) -> Self {
        Self {
            users,
            count: 0,
            ul_mean: vec![KahanComplex::default(); users],
            ul_square: vec![KahanSum::default(); users],
            ul_cross: vec![KahanSum::default(); users * users],
            ul_noise: vec![KahanSum::default(); users],
            dl_mean: vec![KahanComplex::default(); users],
            dl_square: vec![KahanSum::default(); users],
            dl_cross: vec![KahanSum::default(); users * users],
        }
    }

    /// Trials folded in so far.
    #[must_use]
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Folds another accumulator in; merging in a fixed order keeps results
    /// bit-reproducible.
    pub fn merge(&mut self, other: &MomentAccumulator) {
        debug_assert_eq!(self.users, other.users);
        self.count += other.count;
        for (a, b) in self.ul_mean.iter_mut().zip(other.ul_mean.iter()) {
            a.merge(b);
        }
        for (a, b) in self.ul_square.iter_mut().zip(other.ul_square.iter()) {
            a.merge(b);
        }
        for (a, b) in self.ul_cross.iter_mut().zip(other.ul_cross.iter()) {
            a.merge(b);
        }
        for (a, b) in self.ul_noise.iter_mut().zip(other.ul_noise.iter()) {
            a.merge(b);
        }
        for (a, b) in self.dl_mean.iter_mut().zip(other.dl_mean.iter()) {
            a.merge(b);
        }
        for (a, b) in self.dl_square.iter_mut().zip(other.dl_square.iter()) {
            a.merge(b);
        }
        for (a, b) in self.dl_cross.iter_mut().zip(other.dl_cross.iter()) {
            a.merge(b);
        }
    }
}

/// One scheduling unit: trials `start .. start + count` feeding one batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkSpec {
    /// Position in the global chunk order.
    pub index: u64,
    /// First trial of the chunk.
    pub start: u64,
    /// Number of trials in the chunk.
    pub count: u64,
    /// Batch the chunk belongs to.
    pub batch: usize,
}

/// Fixed decomposition of a run into chunks, independent of scheduling.
#[must_use]
pub fn plan_chunks(config: &MonteCarloConfig) -> Vec<ChunkSpec> {
    let chunk = config.chunk as u64;
    let mut specs = Vec::new();
    let mut start = 0;
    let mut index = 0;
    while start < config.trials {
        let count = chunk.min(config.trials - start);
        specs.push(ChunkSpec {
            index,
            start,
            count,
            batch: (index % config.batches as u64) as usize,
        });
        start += count;
        index += 1;
    }
    specs
}

/// Additive decomposition of one estimated SINR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrTerms {
    /// Power of the mean desired signal.
    pub desired: f64,
    /// Variance from the receiver only knowing the average channel.
    pub uncertainty: f64,
    /// Total inter-user interference power.
    pub interference: f64,
    /// Noise power at the decision statistic.
    pub noise: f64,
}

/// SINR estimate with its batch-means confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrEstimate {
    /// Point estimate from all trials.
    pub sinr: f64,
    /// 95% half-width from batch means; NaN when fewer than two batches
    /// received trials.
    pub half_width: f64,
    /// Term decomposition at the point estimate.
    pub terms: SinrTerms,
}

/// Results of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct McOutcome {
    /// Uplink estimates, when sampled.
    pub uplink: Option<Vec<SinrEstimate>>,
    /// Downlink estimates, when sampled.
    pub downlink: Option<Vec<SinrEstimate>>,
    /// Total trials.
    pub trials: u64,
}

struct Scratch {
    w: DVector<Complex64>,
    q: Vec<DVector<Complex64>>,
    v: DVector<Complex64>,
    u: DMatrix<Complex64>,
    u_hat: DMatrix<Complex64>,
    projection: DMatrix<Complex64>,
    ul_grid: DMatrix<Complex64>,
    dl_grid: DMatrix<Complex64>,
    noise: Vec<Complex64>,
}

/// Borrowed statistical description of one network: reflected-link
/// covariances, direct gains, pilot plan, and normalized powers.
///
/// [`Scenario`] supplies these pieces for a physical layout; validation
/// studies can assemble them directly from arbitrary link statistics.
#[derive(Debug, Clone, Copy)]
pub struct NetworkParts<'a> {
    /// Covariance model of the two reflected hops.
    pub correlations: &'a CorrelationSet,
    /// Direct-link gains, `M x K`.
    pub beta: &'a DMatrix<f64>,
    /// Pilot assignment.
    pub plan: &'a PilotPlan,
    /// Normalized transmit powers.
    pub power: &'a PowerConfig,
}

impl<'a> NetworkParts<'a> {
    /// The statistical pieces of a physical scenario.
    #[must_use]
    pub fn from_scenario(scenario: &'a Scenario) -> Self {
        Self {
            correlations: scenario.correlations(),
            beta: scenario.beta(),
            plan: scenario.plan(),
            power: scenario.power(),
        }
    }

    /// Estimator statistics and fourth-moment grid under the given phases.
    pub fn link_stats(&self, phase: &PhaseConfig) -> Result<(EstimationStats, DMatrix<f64>)> {
        let traces = self.correlations.phase_traces(phase);
        let (trace_grid, xi_grid) = self.correlations.moment_grids(&traces);
        let stats = mmse_coefficients(self.beta, &trace_grid, self.plan, self.power.pilot_energy)?;
        Ok((stats, xi_grid))
    }
}

/// Draws network trials for one scenario under one phase configuration and
/// accumulates the empirical moments of the maximum-ratio decision
/// statistics.
pub struct SinrSampler {
    aps: usize,
    users: usize,
    rank: usize,
    sqrt_beta: DMatrix<f64>,
    ris_amp: DMatrix<f64>,
    reflect_adj: DMatrix<Complex64>,
    c: DMatrix<f64>,
    sqrt_eta: DMatrix<f64>,
    plan: PilotPlan,
    pilots: Vec<usize>,
    sqrt_pilot_energy: f64,
    uplink_snr: f64,
    downlink_snr: f64,
    uplink_weights: Vec<f64>,
}

impl SinrSampler {
    /// Precomputes everything a trial needs: estimator coefficients, the
    /// downlink power allocation, and the rank-space reflection operator.
    pub fn new(scenario: &Scenario, phase: &PhaseConfig) -> Result<Self> {
        Self::from_parts(&NetworkParts::from_scenario(scenario), phase)
    }

    /// Same construction from borrowed parts, for networks that never came
    /// from a physical layout.
    pub fn from_parts(parts: &NetworkParts<'_>, phase: &PhaseConfig) -> Result<Self> {
        let correlations = parts.correlations;
        let aps = correlations.ap_count();
        let users = correlations.user_count();
        if phase.len() != correlations.elements() {
            return Err(Error::DimensionMismatch {
                context: "phase configuration",
                expected: correlations.elements(),
                got: phase.len(),
            });
        }
        if parts.power.uplink_weights.len() != users {
            return Err(Error::DimensionMismatch {
                context: "uplink weights",
                expected: users,
                got: parts.power.uplink_weights.len(),
            });
        }
        let (stats, _) = parts.link_stats(phase)?;
        let eta = default_power_control(&stats.gamma);
        let sqrt_eta = eta.map(fm::sqrt);
        let sqrt_beta = parts.beta.map(fm::sqrt);
        let ris_amp = DMatrix::from_fn(aps, users, |m, k| {
            fm::sqrt(correlations.cascade_scale(m, k))
        });

        // reflection through the surface collapsed to the factor rank:
        // h^H Phi z = sqrt(scale) * w^H (F^T Phi F) v for latent w, v
        let factor = correlations.base().factor();
        let rank = factor.ncols();
        let diagonal = phase.diagonal();
        let n = factor.nrows();
        let mut rotated = DMatrix::from_element(n, rank, Complex64::new(0.0, 0.0));
        for j in 0..rank {
            for i in 0..n {
                rotated[(i, j)] = diagonal[i] * factor[(i, j)];
            }
        }
        let mut reflect = DMatrix::from_element(rank, rank, Complex64::new(0.0, 0.0));
        for i in 0..rank {
            for j in 0..rank {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..n {
                    acc += factor[(l, i)] * rotated[(l, j)];
                }
                reflect[(i, j)] = acc;
            }
        }
        let power = parts.power;
        Ok(Self {
            aps,
            users,
            rank,
            sqrt_beta,
            ris_amp,
            reflect_adj: reflect.adjoint(),
            c: stats.c.clone(),
            sqrt_eta,
            plan: parts.plan.clone(),
            pilots: (0..users).map(|k| parts.plan.pilot_of(k)).collect(),
            sqrt_pilot_energy: fm::sqrt(power.pilot_energy),
            uplink_snr: power.uplink_snr,
            downlink_snr: power.downlink_snr,
            uplink_weights: power.uplink_weights.clone(),
        })
    }

    /// Number of users the sampler reports on.
    #[must_use]
    pub fn users(&self) -> usize {
        self.users
    }

    fn scratch(&self) -> Scratch {
        let zero = Complex64::new(0.0, 0.0);
        Scratch {
            w: DVector::from_element(self.rank, zero),
            q: vec![DVector::from_element(self.rank, zero); self.aps],
            v: DVector::from_element(self.rank, zero),
            u: DMatrix::from_element(self.aps, self.users, zero),
            u_hat: DMatrix::from_element(self.aps, self.users, zero),
            projection: DMatrix::from_element(self.aps, self.plan.tau_p(), zero),
            ul_grid: DMatrix::from_element(self.users, self.users, zero),
            dl_grid: DMatrix::from_element(self.users, self.users, zero),
            noise: vec![zero; self.users],
        }
    }

    /// One complete trial. Draw order: direct channels (APs outer, users
    /// inner), AP-side latents per AP, user-side latents (APs outer, users
    /// inner), pilot noise (APs outer, pilots inner), then uplink data noise
    /// per AP when requested.
    fn run_trial(&self, scratch: &mut Scratch, seed: u64, trial: u64, with_uplink_noise: bool) {
        let mut rng = trial_rng(seed, trial);
        for m in 0..self.aps {
            for k in 0..self.users {
                scratch.u[(m, k)] = standard_complex(&mut rng) * self.sqrt_beta[(m, k)];
            }
        }
        for m in 0..self.aps {
            for value in scratch.w.iter_mut() {
                *value = standard_complex(&mut rng);
            }
            self.reflect_adj.mul_to(&scratch.w, &mut scratch.q[m]);
        }
        for m in 0..self.aps {
            for k in 0..self.users {
                for value in scratch.v.iter_mut() {
                    *value = standard_complex(&mut rng);
                }
                let reflected = scratch.q[m].dotc(&scratch.v);
                scratch.u[(m, k)] += reflected * self.ris_amp[(m, k)];
            }
        }

        scratch.projection.fill(Complex64::new(0.0, 0.0));
        for k in 0..self.users {
            let t = self.pilots[k];
            for m in 0..self.aps {
                scratch.projection[(m, t)] += scratch.u[(m, k)];
            }
        }
        for m in 0..self.aps {
            for t in 0..self.plan.tau_p() {
                scratch.projection[(m, t)] =
                    scratch.projection[(m, t)] * self.sqrt_pilot_energy + standard_complex(&mut rng);
            }
        }
        for k in 0..self.users {
            let t = self.pilots[k];
            for m in 0..self.aps {
                scratch.u_hat[(m, k)] = scratch.projection[(m, t)] * self.c[(m, k)];
            }
        }

        for k in 0..self.users {
            for other in 0..self.users {
                let mut ul = Complex64::new(0.0, 0.0);
                let mut dl = Complex64::new(0.0, 0.0);
                for m in 0..self.aps {
                    ul += scratch.u_hat[(m, k)].conj() * scratch.u[(m, other)];
                    dl += scratch.u[(m, k)] * scratch.u_hat[(m, other)].conj()
                        * self.sqrt_eta[(m, other)];
                }
                scratch.ul_grid[(k, other)] = ul;
                scratch.dl_grid[(k, other)] = dl;
            }
        }

        for value in scratch.noise.iter_mut() {
            *value = Complex64::new(0.0, 0.0);
        }
        if with_uplink_noise {
            for m in 0..self.aps {
                let draw = standard_complex(&mut rng);
                for k in 0..self.users {
                    scratch.noise[k] += scratch.u_hat[(m, k)].conj() * draw;
                }
            }
        }
    }

    /// Runs one chunk of trials and returns its accumulator. Pure in the
    /// chunk specification, so chunks can run on any thread in any order.
    #[must_use]
    pub fn accumulate_chunk(&self, seed: u64, spec: &ChunkSpec, mode: Mode) -> MomentAccumulator {
        let mut scratch = self.scratch();
        let mut acc = MomentAccumulator::new(self.users);
        for trial in spec.start..spec.start + spec.count {
            self.run_trial(&mut scratch, seed, trial, mode.uplink());
            acc.count += 1;
            for k in 0..self.users {
                if mode.uplink() {
                    let a = scratch.ul_grid[(k, k)];
                    acc.ul_mean[k].add(a);
                    acc.ul_square[k].add(a.norm_sqr());
                    for other in 0..self.users {
                        if other != k {
                            acc.ul_cross[k * self.users + other]
                                .add(scratch.ul_grid[(k, other)].norm_sqr());
                        }
                    }
                    acc.ul_noise[k].add(scratch.noise[k].norm_sqr());
                }
                if mode.downlink() {
                    let d = scratch.dl_grid[(k, k)];
                    acc.dl_mean[k].add(d);
                    acc.dl_square[k].add(d.norm_sqr());
                    for other in 0..self.users {
                        if other != k {
                            acc.dl_cross[k * self.users + other]
                                .add(scratch.dl_grid[(k, other)].norm_sqr());
                        }
                    }
                }
            }
        }
        acc
    }

    fn uplink_terms(&self, acc: &MomentAccumulator, k: usize) -> SinrTerms {
        let count = acc.count as f64;
        let mean = acc.ul_mean[k].value() / count;
        let square = acc.ul_square[k].value() / count;
        let rho = self.uplink_snr;
        let weight = self.uplink_weights[k];
        let desired = rho * weight * mean.norm_sqr();
        let uncertainty = (rho * weight * (square - mean.norm_sqr())).max(0.0);
        let mut interference = 0.0;
        for other in 0..self.users {
            if other != k {
                interference += rho
                    * self.uplink_weights[other]
                    * acc.ul_cross[k * self.users + other].value()
                    / count;
            }
        }
        let noise = acc.ul_noise[k].value() / count;
        SinrTerms {
            desired,
            uncertainty,
            interference,
            noise,
        }
    }

    fn downlink_terms(&self, acc: &MomentAccumulator, k: usize) -> SinrTerms {
        let count = acc.count as f64;
        let mean = acc.dl_mean[k].value() / count;
        let square = acc.dl_square[k].value() / count;
        let rho = self.downlink_snr;
        let desired = rho * mean.norm_sqr();
        let uncertainty = (rho * (square - mean.norm_sqr())).max(0.0);
        let mut interference = 0.0;
        for other in 0..self.users {
            if other != k {
                interference += rho * acc.dl_cross[k * self.users + other].value() / count;
            }
        }
        SinrTerms {
            desired,
            uncertainty,
            interference,
            noise: 1.0,
        }
    }

    /// Assembles point estimates and batch-means confidence intervals from
    /// per-batch accumulators. Batches must be passed in batch order.
    #[must_use]
    pub fn finalize(&self, batches: &[MomentAccumulator], mode: Mode) -> McOutcome {
        let mut global = MomentAccumulator::new(self.users);
        for batch in batches {
            global.merge(batch);
        }
        let assemble = |per_user_terms: &dyn Fn(&MomentAccumulator, usize) -> SinrTerms| {
            (0..self.users)
                .map(|k| {
                    let terms = per_user_terms(&global, k);
                    let sinr = sinr_of(&terms);
                    let mut batch_values = Vec::new();
                    for batch in batches {
                        if batch.count > 0 {
                            batch_values.push(sinr_of(&per_user_terms(batch, k)));
                        }
                    }
                    SinrEstimate {
                        sinr,
                        half_width: half_width(&batch_values),
                        terms,
                    }
                })
                .collect::<Vec<_>>()
        };
        let uplink = mode
            .uplink()
            .then(|| assemble(&|acc, k| self.uplink_terms(acc, k)));
        let downlink = mode
            .downlink()
            .then(|| assemble(&|acc, k| self.downlink_terms(acc, k)));
        McOutcome {
            uplink,
            downlink,
            trials: global.count,
        }
    }
}

fn sinr_of(terms: &SinrTerms) -> f64 {
    let denominator = terms.uncertainty + terms.interference + terms.noise;
    if terms.desired <= 0.0 || denominator <= 0.0 {
        0.0
    } else {
        terms.desired / denominator
    }
}

fn half_width(batch_values: &[f64]) -> f64 {
    let n = batch_values.len();
    if n < 2 {
        return f64::NAN;
    }
    let mean = batch_values.iter().sum::<f64>() / n as f64;
    let var = batch_values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (n - 1) as f64;
    1.96 * fm::sqrt(var / n as f64)
}

/// Runs the sampler over all chunks in index order.
pub fn sinr_monte_carlo(
    parts: &NetworkParts<'_>,
    phase: &PhaseConfig,
    config: &MonteCarloConfig,
    mode: Mode,
) -> Result<McOutcome> {
    config.validate()?;
    let sampler = SinrSampler::from_parts(parts, phase)?;
    let mut batches = vec![MomentAccumulator::new(sampler.users()); config.batches];
    for spec in plan_chunks(config) {
        let acc = sampler.accumulate_chunk(config.seed, &spec, mode);
        batches[spec.batch].merge(&acc);
    }
    Ok(sampler.finalize(&batches, mode))
}

/// Uplink SINR estimates for every user.
pub fn uplink_sinr_monte_carlo(
    scenario: &Scenario,
    phase: &PhaseConfig,
    config: &MonteCarloConfig,
) -> Result<Vec<SinrEstimate>> {
    let parts = NetworkParts::from_scenario(scenario);
    Ok(sinr_monte_carlo(&parts, phase, config, Mode::Uplink)?
        .uplink
        .expect("uplink mode fills uplink estimates"))
}

/// Downlink SINR estimates for every user.
pub fn downlink_sinr_monte_carlo(
    scenario: &Scenario,
    phase: &PhaseConfig,
    config: &MonteCarloConfig,
) -> Result<Vec<SinrEstimate>> {
    let parts = NetworkParts::from_scenario(scenario);
    Ok(sinr_monte_carlo(&parts, phase, config, Mode::Downlink)?
        .downlink
        .expect("downlink mode fills downlink estimates"))
}

/// Both directions from the same channel draws.
pub fn joint_sinr_monte_carlo(
    scenario: &Scenario,
    phase: &PhaseConfig,
    config: &MonteCarloConfig,
) -> Result<McOutcome> {
    let parts = NetworkParts::from_scenario(scenario);
    sinr_monte_carlo(&parts, phase, config, Mode::Both)
}

/// Limit regime of the large-system analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymptoticRegime {
    /// Number of APs grows, surface fixed: statistics scale with `1/M`.
    ManyAps,
    /// APs and elements grow together: statistics scale with `1/(M N)`.
    ManyApsAndElements,
}

fn equivalent_normalizer(regime: AsymptoticRegime, aps: usize, elements: usize) -> f64 {
    match regime {
        AsymptoticRegime::ManyAps => 1.0 / aps as f64,
        AsymptoticRegime::ManyApsAndElements => 1.0 / (aps as f64 * elements as f64),
    }
}

/// Deterministic limit of the normalized uplink decision statistic.
///
/// Entry `(k, k')` is the coefficient the symbol of user `k'` keeps in the
/// statistic of user `k`; only pilot-sharing users contribute. Under
/// [`AsymptoticRegime::ManyAps`] the coefficient keeps the full channel
/// power, under [`AsymptoticRegime::ManyApsAndElements`] only the reflected
/// part survives.
pub fn uplink_deterministic_equivalent(
    parts: &NetworkParts<'_>,
    phase: &PhaseConfig,
    regime: AsymptoticRegime,
) -> Result<DMatrix<f64>> {
    let (stats, _) = parts.link_stats(phase)?;
    let aps = stats.delta.nrows();
    let users = stats.delta.ncols();
    let normalizer = equivalent_normalizer(regime, aps, parts.correlations.elements());
    let sqrt_energy = fm::sqrt(parts.power.pilot_energy);
    let weights = &parts.power.uplink_weights;
    let plan = parts.plan;
    let mut table = DMatrix::zeros(users, users);
    for k in 0..users {
        for other in plan.copilots(k) {
            let mut acc = 0.0;
            for m in 0..aps {
                let channel_power = match regime {
                    AsymptoticRegime::ManyAps => stats.delta[(m, other)],
                    AsymptoticRegime::ManyApsAndElements => stats.trace_part[(m, other)],
                };
                acc += stats.c[(m, k)] * channel_power;
            }
            table[(k, other)] = normalizer * fm::sqrt(weights[other]) * sqrt_energy * acc;
        }
    }
    Ok(table)
}

/// Deterministic limit of the normalized downlink received signal, same
/// layout as [`uplink_deterministic_equivalent`]. The downlink coefficient
/// of user `k'` carries that user's estimator quality `c_mk'` and power
/// weight, applied to the channel of user `k`.
pub fn downlink_deterministic_equivalent(
    parts: &NetworkParts<'_>,
    phase: &PhaseConfig,
    regime: AsymptoticRegime,
) -> Result<DMatrix<f64>> {
    let (stats, _) = parts.link_stats(phase)?;
    let aps = stats.delta.nrows();
    let users = stats.delta.ncols();
    let normalizer = equivalent_normalizer(regime, aps, parts.correlations.elements());
    let sqrt_energy = fm::sqrt(parts.power.pilot_energy);
    let sqrt_eta = default_power_control(&stats.gamma).map(fm::sqrt);
    let plan = parts.plan;
    let mut table = DMatrix::zeros(users, users);
    for k in 0..users {
        for other in plan.copilots(k) {
            let mut acc = 0.0;
            for m in 0..aps {
                let channel_power = match regime {
                    AsymptoticRegime::ManyAps => stats.delta[(m, k)],
                    AsymptoticRegime::ManyApsAndElements => stats.trace_part[(m, k)],
                };
                acc += sqrt_eta[(m, other)] * stats.c[(m, other)] * channel_power;
            }
            table[(k, other)] = normalizer * sqrt_energy * acc;
        }
    }
    Ok(table)
}

fn decision_spread(
    parts: &NetworkParts<'_>,
    phase: &PhaseConfig,
    config: &MonteCarloConfig,
    regime: AsymptoticRegime,
    uplink: bool,
) -> Result<Vec<f64>> {
    config.validate()?;
    let sampler = SinrSampler::from_parts(parts, phase)?;
    let table = if uplink {
        uplink_deterministic_equivalent(parts, phase, regime)?
    } else {
        downlink_deterministic_equivalent(parts, phase, regime)?
    };
    let normalizer = equivalent_normalizer(regime, sampler.aps, parts.correlations.elements());
    let users = sampler.users();
    let plan = parts.plan;
    let mut scratch = sampler.scratch();
    let mut squares = vec![KahanSum::default(); users];
    for trial in 0..config.trials {
        sampler.run_trial(&mut scratch, config.seed, trial, false);
        for k in 0..users {
            let mut deviation = 0.0;
            for other in plan.copilots(k) {
                let empirical = if uplink {
                    scratch.ul_grid[(k, other)]
                        * (normalizer * fm::sqrt(sampler.uplink_weights[other]))
                } else {
                    scratch.dl_grid[(k, other)] * normalizer
                };
                deviation += (empirical - Complex64::new(table[(k, other)], 0.0)).norm_sqr();
            }
            squares[k].add(deviation);
        }
    }
    Ok(squares
        .iter()
        .map(|s| fm::sqrt(s.value() / config.trials as f64))
        .collect())
}

/// Root-mean-square deviation of the normalized uplink decision statistic
/// from its deterministic limit, per user. Concentration means this shrinks
/// as the network grows.
pub fn uplink_decision_spread(
    parts: &NetworkParts<'_>,
    phase: &PhaseConfig,
    config: &MonteCarloConfig,
    regime: AsymptoticRegime,
) -> Result<Vec<f64>> {
    decision_spread(parts, phase, config, regime, true)
}

/// Downlink counterpart of [`uplink_decision_spread`].
pub fn downlink_decision_spread(
    parts: &NetworkParts<'_>,
    phase: &PhaseConfig,
    config: &MonteCarloConfig,
    regime: AsymptoticRegime,
) -> Result<Vec<f64>> {
    decision_spread(parts, phase, config, regime, false)
}

/// Spectral norm and normalized trace of one covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceBounds {
    /// Largest eigenvalue.
    pub spectral_norm: f64,
    /// Trace divided by the number of elements.
    pub normalized_trace: f64,
}

/// Health report of the covariance family behind the large-system claims:
/// spectral norms should stay bounded and normalized traces away from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// Bounds of each AP-side covariance.
    pub ap_bounds: Vec<CovarianceBounds>,
    /// APs whose covariance vanishes entirely.
    pub degenerate_aps: Vec<usize>,
    /// Links whose user-side covariance vanishes entirely.
    pub degenerate_links: Vec<(usize, usize)>,
}

impl AssumptionReport {
    /// Whether every covariance in the family is non-degenerate.
    #[must_use]
    pub fn bounded(&self) -> bool {
        self.degenerate_aps.is_empty() && self.degenerate_links.is_empty()
    }

    /// Largest AP-side spectral norm.
    #[must_use]
    pub fn max_spectral_norm(&self) -> f64 {
        self.ap_bounds
            .iter()
            .fold(0.0f64, |acc, b| acc.max(b.spectral_norm))
    }

    /// Smallest AP-side normalized trace.
    #[must_use]
    pub fn min_normalized_trace(&self) -> f64 {
        self.ap_bounds
            .iter()
            .fold(f64::INFINITY, |acc, b| acc.min(b.normalized_trace))
    }
}

/// Checks the covariance family of a correlation set for the boundedness the
/// large-system limits rely on.
#[must_use]
pub fn check_covariance_bounds(correlations: &CorrelationSet) -> AssumptionReport {
    let base = correlations.base();
    let elements = base.elements() as f64;
    let base_trace = base.matrix().trace();
    let mut ap_bounds = Vec::with_capacity(correlations.ap_count());
    let mut degenerate_aps = Vec::new();
    let mut degenerate_links = Vec::new();
    for m in 0..correlations.ap_count() {
        let scale = correlations.ap_scale(m);
        ap_bounds.push(CovarianceBounds {
            spectral_norm: scale * base.spectral_norm(),
            normalized_trace: scale * base_trace / elements,
        });
        if scale == 0.0 {
            degenerate_aps.push(m);
        }
        for k in 0..correlations.user_count() {
            if correlations.link_scale(m, k) == 0.0 {
                degenerate_links.push((m, k));
            }
        }
    }
    AssumptionReport {
        ap_bounds,
        degenerate_aps,
        degenerate_links,
    }
}
