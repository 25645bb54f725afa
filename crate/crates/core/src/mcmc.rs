//! Single-site Metropolis sampling of the determinant-weighted measure with
//! batch-means error bars.
//!
//! Each chain owns a ChaCha8 stream (`seed`, stream = chain index), so a run is
//! bit-reproducible for a fixed `(seed, n_chains, sweep schedule)` no matter how
//! the chains are scheduled on threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::SpdFactor;
use crate::model::{log_weight_with_factor, FieldConfig, ModelParams, Observable};

pub const TARGET_BATCHES: usize = 32;
pub const MIN_BATCHES: usize = 8;

/// Sweep schedule and chain layout of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub n_sweeps: usize,
    pub burn_in: usize,
    pub n_chains: usize,
    pub seed: u64,
    pub proposal_sigma: f64,
    /// Adjust `proposal_sigma` toward acceptance 0.3–0.5 in a separate pre-run.
    pub tune: bool,
}

impl RunSpec {
    /// Default schedule: 10% burn-in, `σ = 1`, no tuning.
    pub fn new(n_sweeps: usize, n_chains: usize, seed: u64) -> Self {
        RunSpec { n_sweeps, burn_in: n_sweeps / 10, n_chains, seed, proposal_sigma: 1.0, tune: false }
    }

    fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::InvalidParameter("need at least one chain".into()));
        }
        if self.n_sweeps <= self.burn_in {
            return Err(Error::InvalidParameter(format!(
                "n_sweeps ({}) must exceed burn_in ({})",
                self.n_sweeps, self.burn_in
            )));
        }
        if !(self.proposal_sigma >= 0.0) || !self.proposal_sigma.is_finite() {
            return Err(Error::InvalidParameter("proposal sigma must be finite and >= 0".into()));
        }
        let samples = self.n_sweeps - self.burn_in;
        if samples < MIN_BATCHES {
            return Err(Error::InsufficientSamples { samples, needed: MIN_BATCHES });
        }
        Ok(())
    }
}

/// Current configuration with its cached factor and log weight.
#[derive(Debug, Clone)]
pub struct ChainState {
    config: FieldConfig,
    factor: SpdFactor,
    log_weight: f64,
    rng: ChaCha8Rng,
    stream: u64,
    sweeps: u64,
    proposed: u64,
    accepted: u64,
    factor_failures: u64,
}

impl ChainState {
    /// Chain started from `t ≡ 0`.
    pub fn new(params: &ModelParams, seed: u64, stream: u64) -> Result<Self> {
        Self::from_config(params, FieldConfig::zeros(params.size()), seed, stream)
    }

    pub fn from_config(params: &ModelParams, config: FieldConfig, seed: u64, stream: u64) -> Result<Self> {
        let (log_weight, factor) = log_weight_with_factor(params, &config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(ChainState {
            config,
            factor,
            log_weight,
            rng,
            stream,
            sweeps: 0,
            proposed: 0,
            accepted: 0,
            factor_failures: 0,
        })
    }

    pub fn config(&self) -> &FieldConfig {
        &self.config
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    pub fn log_weight(&self) -> f64 {
        self.log_weight
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn sweeps(&self) -> u64 {
        self.sweeps
    }

    /// Proposals rejected because `D` could not be factored.
    pub fn factor_failures(&self) -> u64 {
        self.factor_failures
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    fn reset_counters(&mut self) {
        self.proposed = 0;
        self.accepted = 0;
    }

    /// Metropolis test for moving `t_site` to `value` with the uniform draw `u`.
    /// Accepts iff `u < exp(Δ log_weight)`; returns whether the move was taken.
    pub fn try_site_update(&mut self, params: &ModelParams, site: usize, value: f64, u: f64) -> bool {
        self.proposed += 1;
        let old = self.config.get(site);
        if self.config.set(site, value).is_err() {
            self.factor_failures += 1;
            return false;
        }
        match log_weight_with_factor(params, &self.config) {
            Ok((lw, factor)) => {
                let delta = lw - self.log_weight;
                if delta >= 0.0 || u < delta.exp() {
                    self.log_weight = lw;
                    self.factor = factor;
                    self.accepted += 1;
                    return true;
                }
            }
            Err(_) => self.factor_failures += 1,
        }
        self.config.set(site, old).expect("previous value is finite");
        false
    }
}

/// Outcome of one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepStats {
    pub proposed: usize,
    pub accepted: usize,
}

/// One site-ordered pass of Gaussian random-walk proposals `t_j + σ ξ`.
pub fn metropolis_sweep(state: &mut ChainState, params: &ModelParams, sigma: f64) -> SweepStats {
    let mut accepted = 0;
    for site in 0..params.size() {
        let xi: f64 = state.rng.sample(StandardNormal);
        let u: f64 = state.rng.random();
        let proposal = state.config.get(site) + sigma * xi;
        if state.try_site_update(params, site, proposal, u) {
            accepted += 1;
        }
    }
    state.sweeps += 1;
    SweepStats { proposed: params.size(), accepted }
}

/// Multiplicative tuning of `σ` toward acceptance in `[0.3, 0.5]` on a
/// dedicated chain. The result is frozen before any measurement.
pub fn tune_sigma(params: &ModelParams, seed: u64, initial: f64) -> Result<f64> {
    const ROUNDS: usize = 40;
    const SWEEPS_PER_ROUND: usize = 50;
    let mut state = ChainState::new(params, seed, u64::MAX)?;
    let mut sigma = if initial > 0.0 { initial } else { 1.0 };
    for _ in 0..ROUNDS {
        state.reset_counters();
        for _ in 0..SWEEPS_PER_ROUND {
            metropolis_sweep(&mut state, params, sigma);
        }
        let acc = state.acceptance_rate();
        if (0.3..=0.5).contains(&acc) {
            break;
        }
        sigma *= (2.0 * (acc - 0.4)).exp();
    }
    Ok(sigma)
}

/// Monte Carlo estimate with batch-means error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorResult {
    pub mean: f64,
    pub stderr: f64,
    /// Samples used, summed over chains.
    pub n_samples: usize,
    pub acceptance_rate: f64,
    /// Batches pooled over all chains.
    pub batch_count: usize,
}

/// Run `run.n_chains` independent chains and estimate `n_obs` quantities that
/// `measure` writes for the current state after every post-burn-in sweep.
///
/// Each chain's samples are cut into `min(32, samples)` equal batches (the
/// earliest remainder is discarded). The pooled batch means of all chains give
/// the mean and its standard error, which folds in between-chain variance.
pub fn run_estimator<F>(params: &ModelParams, run: &RunSpec, n_obs: usize, measure: F) -> Result<Vec<EstimatorResult>>
where
    F: Fn(&ChainState, &mut [f64]) + Sync,
{
    run.validate()?;
    let sigma = if run.tune { tune_sigma(params, run.seed, run.proposal_sigma)? } else { run.proposal_sigma };
    let samples = run.n_sweeps - run.burn_in;
    let batches = TARGET_BATCHES.min(samples);
    let batch_size = samples / batches;
    let skip = samples - batches * batch_size;

    let chains: Vec<Result<(Vec<Vec<f64>>, f64)>> = (0..run.n_chains as u64)
        .into_par_iter()
        .map(|stream| {
            let mut state = ChainState::new(params, run.seed, stream)?;
            for _ in 0..run.burn_in + skip {
                metropolis_sweep(&mut state, params, sigma);
            }
            state.reset_counters();
            let mut batch_means = vec![vec![0.0; batches]; n_obs];
            let mut values = vec![0.0; n_obs];
            for b in 0..batches {
                for _ in 0..batch_size {
                    metropolis_sweep(&mut state, params, sigma);
                    measure(&state, &mut values);
                    for (acc, v) in batch_means.iter_mut().zip(&values) {
                        acc[b] += v;
                    }
                }
            }
            for acc in batch_means.iter_mut() {
                for m in acc.iter_mut() {
                    *m /= batch_size as f64;
                }
            }
            Ok((batch_means, state.acceptance_rate()))
        })
        .collect();
    let chains: Vec<(Vec<Vec<f64>>, f64)> = chains.into_iter().collect::<Result<_>>()?;

    let acceptance_rate = chains.iter().map(|c| c.1).sum::<f64>() / chains.len() as f64;
    let total_batches = batches * chains.len();
    Ok((0..n_obs)
        .map(|o| {
            let pooled: Vec<f64> = chains.iter().flat_map(|c| c.0[o].iter().copied()).collect();
            let (mean, stderr) = mean_and_stderr(&pooled);
            EstimatorResult {
                mean,
                stderr,
                n_samples: batches * batch_size * chains.len(),
                acceptance_rate,
                batch_count: total_batches,
            }
        })
        .collect())
}

/// Mean of `values` and the standard error of that mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Estimate several observables from the same chains.
pub fn estimate_many(params: &ModelParams, observables: &[Observable], run: &RunSpec) -> Result<Vec<EstimatorResult>> {
    for obs in observables {
        obs.validate(params)?;
    }
    run_estimator(params, run, observables.len(), |state, out| {
        for (slot, obs) in out.iter_mut().zip(observables) {
            *slot = obs.evaluate(state.config(), state.factor()).expect("validated observable");
        }
    })
}

/// `⟨obs⟩` with its batch-means error.
pub fn estimate(params: &ModelParams, obs: Observable, run: &RunSpec) -> Result<EstimatorResult> {
    Ok(estimate_many(params, &[obs], run)?.remove(0))
}

/// `⟨e^{t_x/2}⟩` under single pinning.
pub fn estimate_ox(params: &ModelParams, x: usize, run: &RunSpec) -> Result<EstimatorResult> {
    if params.pinning().single_site().is_none() {
        return Err(Error::PinningMismatch("O_x estimates require the single-pinning scheme".into()));
    }
    estimate(params, Observable::HalfExp { x }, run)
}
