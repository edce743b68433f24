//! The nested sampling loop.

use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods come from std whenever it is linked
use num_traits::Float;
use rand::Rng;

use crate::diagnostics::{summarize, DiagnosticSummary};
use crate::geometry::{compute_reference_radius, ReferenceGeometry};
use crate::math::{log_sum_exp, logaddexp};
use crate::problem::{evaluate, ProblemDefinition, UnitPoint};
use crate::rng::{sample_unit_cube, stream_rng, Stream};
use crate::sampler::{ConstrainedSampler, SliceWalker};
use crate::{Error, Result};

/// Settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Number of live points `K`.
    pub num_live: usize,
    /// Slice steps per replacement `M`.
    pub num_steps: usize,
    /// Stop once the live remainder is below this fraction of the evidence.
    pub termination_frac: f64,
    /// Bootstrap rounds `B` for the reference radius.
    pub bootstrap_rounds: usize,
    pub seed: u64,
    /// Iterations between radius recomputations; `None` picks a default
    /// from `K · d` (see [`RunConfig::effective_radius_interval`]).
    pub radius_update_interval: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            num_live: 400,
            num_steps: 1,
            termination_frac: 0.01,
            bootstrap_rounds: 30,
            seed: 1,
            radius_update_interval: None,
        }
    }
}

impl RunConfig {
    pub fn new(num_live: usize, num_steps: usize, seed: u64) -> Self {
        Self {
            num_live,
            num_steps,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.num_live < 2 * dim || self.num_live < 2 {
            return Err(Error::InvalidConfig("num_live must be at least 2·d"));
        }
        if self.num_steps == 0 {
            return Err(Error::InvalidConfig("num_steps must be at least 1"));
        }
        if !(self.termination_frac > 0.0 && self.termination_frac < 1.0) {
            return Err(Error::InvalidConfig("termination_frac must lie in (0, 1)"));
        }
        if self.bootstrap_rounds == 0 {
            return Err(Error::InvalidConfig("bootstrap_rounds must be at least 1"));
        }
        if self.radius_update_interval == Some(0) {
            return Err(Error::InvalidConfig(
                "radius_update_interval must be at least 1",
            ));
        }
        Ok(())
    }

    /// Every iteration while `K · d ≤ 10⁴`, otherwise every `⌈K/10⌉`.
    pub fn effective_radius_interval(&self, dim: usize) -> usize {
        self.radius_update_interval.unwrap_or_else(|| {
            if self.num_live * dim <= 10_000 {
                1
            } else {
                self.num_live.div_ceil(10)
            }
        })
    }
}

/// One dead point and the walk that replaced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// `ln L_i` of the dead point.
    pub logl: f64,
    /// `ln V_i = ln δ + i ln(1 - δ)`, `δ = 1/K`.
    pub logv: f64,
    /// `ln w_i = ln L_i + ln V_i`.
    pub logw: f64,
    /// Number of surviving live points with lower likelihood than the new
    /// point.
    pub insertion_rank: usize,
    /// Jump distance between walk start and end.
    pub jd: f64,
    /// Reference radius in force at this iteration.
    pub r: f64,
    /// `jd / r`
    pub rjd: f64,
}

/// Full trace and evidence estimate of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub problem_name: String,
    pub num_live: usize,
    pub num_steps: usize,
    pub seed: u64,
    pub radius_update_interval: usize,
    pub records: Vec<IterationRecord>,
    /// `ln L` of the live points left at termination.
    pub final_live_logl: Vec<f64>,
    /// `ln V` still enclosed at termination.
    pub final_logv: f64,
    pub logz: f64,
    pub logz_err: f64,
    pub likelihood_calls: usize,
    /// `None` when no jump was recorded (e.g. constant likelihood).
    pub summary: Option<DiagnosticSummary>,
}

impl RunResult {
    /// `ln w` of the final live points: each carries `1/K` of the remaining
    /// volume.
    pub fn remainder_logw(&self) -> impl Iterator<Item = f64> + '_ {
        let share = self.final_logv - (self.final_live_logl.len() as f64).ln();
        self.final_live_logl.iter().map(move |l| l + share)
    }

    /// Normalised posterior log-weights: dead points first, then the final
    /// live points.
    pub fn posterior_log_weights(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.logw)
            .chain(self.remainder_logw())
            .map(|w| w - self.logz)
            .collect()
    }
}

/// Position at which `new_logl` slots into `live_logls`: the number of
/// entries strictly below it.
pub fn insertion_rank(live_logls: &[f64], new_logl: f64) -> usize {
    live_logls.iter().filter(|&&l| l < new_logl).count()
}

/// `sqrt(H / K)` with `H` the information of the posterior relative to the
/// prior, estimated from the normalised record weights.
pub fn logz_uncertainty(records: &[IterationRecord], num_live: usize) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no records"));
    }
    Ok(information_error(
        records.iter().map(|r| (r.logw, r.logv)),
        num_live,
    ))
}

fn information_error<I: Iterator<Item = (f64, f64)> + Clone>(weights: I, num_live: usize) -> f64 {
    let logz = log_sum_exp(weights.clone().map(|(w, _)| w));
    if !logz.is_finite() {
        return 0.0;
    }
    let h: f64 = weights
        .filter(|(w, _)| *w > f64::NEG_INFINITY)
        .map(|(w, v)| {
            let p = (w - logz).exp();
            // ln(p / V) = ln L - ln Z
            p * (w - v - logz)
        })
        .sum();
    (h.max(0.0) / num_live as f64).sqrt()
}

/// Nested sampling with the slice-sampling walk of `config.num_steps` steps.
pub fn run(problem: &ProblemDefinition, config: &RunConfig) -> Result<RunResult> {
    run_with_sampler(problem, config, &mut SliceWalker::new(config.num_steps))
}

/// Nested sampling with a caller-provided constrained sampler.
pub fn run_with_sampler<S: ConstrainedSampler>(
    problem: &ProblemDefinition,
    config: &RunConfig,
    sampler: &mut S,
) -> Result<RunResult> {
    let d = problem.dim();
    config.validate(d)?;
    let k = config.num_live;
    let interval = config.effective_radius_interval(d);

    let mut init_rng = stream_rng(config.seed, Stream::Init);
    let mut walk_rng = stream_rng(config.seed, Stream::Walk);
    let mut radius_rng = stream_rng(config.seed, Stream::Radius);

    let mut live: Vec<UnitPoint> = (0..k)
        .map(|_| evaluate(problem, &sample_unit_cube(&mut init_rng, d)))
        .collect::<Result<_>>()?;

    let delta = 1.0 / k as f64;
    let ln_delta = delta.ln();
    let ln_shrink = (-delta).ln_1p();
    let ln_frac = config.termination_frac.ln();

    let mut records: Vec<IterationRecord> = Vec::new();
    let mut logz_dead = f64::NEG_INFINITY;
    let mut geometry: Option<ReferenceGeometry> = None;
    let mut likelihood_calls = k;
    let mut eligible: Vec<usize> = Vec::with_capacity(k);
    let mut iter = 0usize;

    loop {
        let logv_remaining = iter as f64 * ln_shrink;
        let (min_logl, max_logl) = live
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.logl), hi.max(p.logl))
            });
        if min_logl == max_logl {
            // plateau: the remainder is known exactly
            break;
        }
        if logz_dead > f64::NEG_INFINITY && max_logl + logv_remaining < ln_frac + logz_dead {
            break;
        }

        if iter.is_multiple_of(interval) {
            geometry = Some(
                compute_reference_radius(&live, config.bootstrap_rounds, &mut radius_rng)
                    .map_err(|e| e.at_iteration(iter))?,
            );
        }
        let geom = geometry.as_ref().expect("radius computed at iteration 0");

        let dead = live
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.logl.total_cmp(&b.1.logl))
            .map(|(i, _)| i)
            .expect("live set is never empty");
        let threshold = live[dead].logl;
        let logv = ln_delta + logv_remaining;
        let logw = threshold + logv;
        logz_dead = logaddexp(logz_dead, logw);

        eligible.clear();
        eligible.extend((0..k).filter(|&i| i != dead && live[i].logl > threshold));
        let start = eligible[walk_rng.random_range(0..eligible.len())];

        let walk = sampler
            .sample(problem, &live[start], threshold, &mut walk_rng)
            .map_err(|e| e.at_iteration(iter))?;
        if !(walk.end.logl > threshold) {
            return Err(
                Error::InvalidConfig("sampler returned a point below the threshold")
                    .at_iteration(iter),
            );
        }
        likelihood_calls += walk.likelihood_calls;

        let jd = geom
            .space
            .distance(&live[start].u, &walk.end.u)
            .map_err(|e| e.at_iteration(iter))?;
        let r = geom.radius.r;
        let rjd = if r > 0.0 { jd / r } else { f64::NAN };
        let rank = live
            .iter()
            .enumerate()
            .filter(|&(i, p)| i != dead && p.logl < walk.end.logl)
            .count();

        records.push(IterationRecord {
            iter,
            logl: threshold,
            logv,
            logw,
            insertion_rank: rank,
            jd,
            r,
            rjd,
        });
        live[dead] = walk.end;
        iter += 1;
    }

    let final_logv = iter as f64 * ln_shrink;
    let final_live_logl: Vec<f64> = live.iter().map(|p| p.logl).collect();
    let share = final_logv - (k as f64).ln();
    let logz = final_live_logl
        .iter()
        .fold(logz_dead, |acc, l| logaddexp(acc, l + share));
    let logz_err = information_error(
        records
            .iter()
            .map(|r| (r.logw, r.logv))
            .chain(final_live_logl.iter().map(|l| (l + share, share))),
        k,
    );
    let summary = if records.iter().any(|r| r.r > 0.0) {
        Some(summarize(&records)?)
    } else {
        None
    };

    Ok(RunResult {
        problem_name: problem.name().into(),
        num_live: k,
        num_steps: config.num_steps,
        seed: config.seed,
        radius_update_interval: interval,
        records,
        final_live_logl,
        final_logv,
        logz,
        logz_err,
        likelihood_calls,
        summary,
    })
}
