//! Relative jump distance statistics, the insertion-order test and the
//! rerun rule.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // float methods come from std whenever it is linked
use num_traits::Float;

use crate::engine::IterationRecord;
use crate::{Error, Result};

/// Outcome of the majority rule on a single run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Trustworthy,
    RerunWithDoubledSteps,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Trustworthy => "trustworthy",
            Verdict::RerunWithDoubledSteps => "rerun_with_doubled_steps",
        }
    }
}

/// Summary of the RJD stream of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticSummary {
    /// `exp(mean ln RJD)`.
    pub geometric_mean_rjd: f64,
    /// Fraction of jumps with RJD strictly above one.
    pub frac_rjd_above_1: f64,
    /// Records with a positive reference radius.
    pub num_jumps: usize,
    /// Jumps of length zero; they enter the geometric mean at the smallest
    /// positive double.
    pub zero_jumps: usize,
    /// Mean squared jump distance.
    pub esjd: f64,
    pub verdict: Verdict,
}

/// Summarise the stored RJD values of `records` (those with `r > 0`).
pub fn summarize(records: &[IterationRecord]) -> Result<DiagnosticSummary> {
    let mut num_jumps = 0usize;
    let mut zero_jumps = 0usize;
    let mut above = 0usize;
    let mut log_sum = 0.0;
    let mut sq_sum = 0.0;
    for rec in records.iter().filter(|r| r.r > 0.0) {
        let rjd = rec.rjd;
        num_jumps += 1;
        if rjd > 1.0 {
            above += 1;
        }
        if rjd > 0.0 {
            log_sum += rjd.ln();
        } else {
            zero_jumps += 1;
            log_sum += f64::MIN_POSITIVE.ln();
        }
        sq_sum += rec.jd * rec.jd;
    }
    if num_jumps == 0 {
        return Err(Error::EmptyInput(
            "no records with a positive reference radius",
        ));
    }
    let n = num_jumps as f64;
    let geometric_mean_rjd = (log_sum / n).exp();
    let frac_rjd_above_1 = above as f64 / n;
    let verdict = if frac_rjd_above_1 > 0.5 && geometric_mean_rjd > 1.0 {
        Verdict::Trustworthy
    } else {
        Verdict::RerunWithDoubledSteps
    };
    Ok(DiagnosticSummary {
        geometric_mean_rjd,
        frac_rjd_above_1,
        num_jumps,
        zero_jumps,
        esjd: sq_sum / n,
        verdict,
    })
}

/// Counts of RJD in logarithmic bins aligned to decades: bin `k` covers
/// `[10^(k/b), 10^((k+1)/b))` for `b` bins per decade.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RjdHistogram {
    pub bins_per_decade: usize,
    /// Index `k` of the first bin in `counts`.
    pub first_bin: i64,
    pub counts: Vec<usize>,
    /// Jumps with RJD exactly zero.
    pub zero_count: usize,
}

impl RjdHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.zero_count
    }

    /// `(low, high)` edges of `counts[i]`.
    pub fn edges(&self, i: usize) -> (f64, f64) {
        let b = self.bins_per_decade as f64;
        let k = self.first_bin + i as i64;
        (10f64.powf(k as f64 / b), 10f64.powf((k + 1) as f64 / b))
    }

    /// Number of jumps with RJD in `[lo, hi]` counting whole bins whose
    /// centre lies in the range.
    pub fn count_between(&self, lo: f64, hi: f64) -> usize {
        (0..self.counts.len())
            .filter(|&i| {
                let (a, b) = self.edges(i);
                let centre = (a * b).sqrt();
                centre >= lo && centre <= hi
            })
            .map(|i| self.counts[i])
            .sum()
    }
}

pub fn rjd_histogram(records: &[IterationRecord], bins_per_decade: usize) -> Result<RjdHistogram> {
    if bins_per_decade == 0 {
        return Err(Error::InvalidConfig("bins_per_decade must be at least 1"));
    }
    let b = bins_per_decade as f64;
    let mut zero_count = 0;
    let mut idx = Vec::new();
    for rec in records.iter().filter(|r| r.r > 0.0) {
        let rjd = rec.rjd;
        if rjd > 0.0 {
            idx.push((rjd.log10() * b).floor() as i64);
        } else {
            zero_count += 1;
        }
    }
    let (lo, hi) = match (idx.iter().min(), idx.iter().max()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (0, -1),
    };
    let mut counts = vec![0; (hi - lo + 1).max(0) as usize];
    for k in idx {
        counts[(k - lo) as usize] += 1;
    }
    Ok(RjdHistogram {
        bins_per_decade,
        first_bin: lo,
        counts,
        zero_count,
    })
}

/// One-sample Kolmogorov-Smirnov test of the insertion ranks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsertionOrderTest {
    pub ks_statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // P(K ≤ λ) = sqrt(2π)/λ Σ_k exp(-(2k-1)² π² / (8 λ²))
        let y = (-PI * PI / (8.0 * lambda * lambda)).exp();
        let series: f64 = (1..=6).map(|k: i32| y.powi((2 * k - 1).pow(2))).sum();
        (1.0 - (2.0 * PI).sqrt() / lambda * series).clamp(0.0, 1.0)
    } else {
        // 2 Σ_k (-1)^(k-1) exp(-2 k² λ²)
        let s: f64 = (1..=100)
            .map(|k: i32| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
            })
            .take_while(|t| t.abs() > 0.0)
            .fold(0.0, |acc, t| acc + t);
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// KS distance between the empirical distribution of `samples` and U(0, 1).
/// Sorts `samples` in place.
pub fn ks_statistic_uniform(samples: &mut [f64]) -> f64 {
    samples.sort_unstable_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            let above = (i + 1) as f64 / n - x;
            let below = x - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Test ranks normalised to `(rank + 0.5) / K` against the uniform
/// distribution with the asymptotic Kolmogorov p-value.
pub fn insertion_order_ks(
    records: &[IterationRecord],
    num_live: usize,
) -> Result<InsertionOrderTest> {
    if num_live < 2 {
        return Err(Error::InvalidConfig("need at least two live points"));
    }
    if records.is_empty() {
        return Err(Error::EmptyInput("no records"));
    }
    let k = num_live as f64;
    let mut u: Vec<f64> = records
        .iter()
        .map(|r| (r.insertion_rank as f64 + 0.5) / k)
        .collect();
    let d = ks_statistic_uniform(&mut u);
    let n = u.len();
    Ok(InsertionOrderTest {
        ks_statistic: d,
        p_value: kolmogorov_sf((n as f64).sqrt() * d),
        n,
    })
}

/// What to do after a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recommendation {
    Accept,
    RerunDoubled,
    AcceptWithCaution,
}

impl Recommendation {
    pub fn as_str(self) -> &'static str {
        match self {
            Recommendation::Accept => "accept",
            Recommendation::RerunDoubled => "rerun_doubled",
            Recommendation::AcceptWithCaution => "accept_with_caution",
        }
    }
}

/// A trustworthy run is accepted. Otherwise, without an earlier run at half
/// the steps, rerun with doubled steps; with one, accept cautiously when
/// neither `ln Z` (within two combined standard errors) nor the geometric
/// mean RJD (within 10 % relative) moved, else rerun again.
pub fn decision_rule(
    current: &DiagnosticSummary,
    previous: Option<(&DiagnosticSummary, f64, f64)>,
    logz: f64,
    logz_err: f64,
) -> Recommendation {
    if current.verdict == Verdict::Trustworthy {
        return Recommendation::Accept;
    }
    let Some((prev, prev_logz, prev_err)) = previous else {
        return Recommendation::RerunDoubled;
    };
    let combined = (logz_err * logz_err + prev_err * prev_err).sqrt();
    let logz_stable = (logz - prev_logz).abs() <= 2.0 * combined;
    let gm_stable = (current.geometric_mean_rjd - prev.geometric_mean_rjd).abs()
        <= 0.1 * prev.geometric_mean_rjd;
    if logz_stable && gm_stable {
        Recommendation::AcceptWithCaution
    } else {
        Recommendation::RerunDoubled
    }
}
