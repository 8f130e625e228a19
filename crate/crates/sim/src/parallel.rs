//! Deterministic parallel Monte Carlo execution.
//!
//! Trials are cut into the same fixed chunks the sequential driver uses;
//! workers evaluate chunks in any order and the partial accumulators are then
//! merged in chunk order, so a report never depends on the thread count.

use anyhow::Context;
use rayon::prelude::*;

use riscf_core::montecarlo::{
    plan_chunks, McOutcome, Mode, MomentAccumulator, MonteCarloConfig, NetworkParts, SinrSampler,
};
use riscf_core::phase::PhaseConfig;

/// A worker pool with the requested number of threads; 0 picks the host
/// default.
pub fn thread_pool(threads: usize) -> anyhow::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building worker pool")
}

/// Parallel counterpart of the sequential SINR sampler; bit-identical to it
/// for every pool size.
pub fn sinr_monte_carlo(
    pool: &rayon::ThreadPool,
    parts: &NetworkParts<'_>,
    phase: &PhaseConfig,
    config: &MonteCarloConfig,
    mode: Mode,
) -> anyhow::Result<McOutcome> {
    config.validate()?;
    let sampler = SinrSampler::from_parts(parts, phase)?;
    let chunks = plan_chunks(config);
    let partials: Vec<MomentAccumulator> = pool.install(|| {
        chunks
            .par_iter()
            .map(|spec| sampler.accumulate_chunk(config.seed, spec, mode))
            .collect()
    });
    let mut batches = vec![MomentAccumulator::new(sampler.users()); config.batches];
    for (spec, partial) in chunks.iter().zip(partials.iter()) {
        batches[spec.batch].merge(partial);
    }
    Ok(sampler.finalize(&batches, mode))
}
