//! Dependence of the reference radius on the number of points and the
//! dimension, for points filling an ellipsoid.

use alloc::vec::Vec;

#[allow(unused_imports)] // float methods come from std whenever it is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{compute_reference_radius_with, SampleSizePolicy};
use crate::Result;

/// `(20/K)^(1/d) · (d/2)^0.1`
pub fn predicted_radius(num_live: usize, dim: usize) -> f64 {
    let d = dim as f64;
    (20.0 / num_live as f64).powf(1.0 / d) * (d / 2.0).powf(0.1)
}

/// `n` points uniform inside the axis-aligned ellipsoid with semi-axes
/// `axes`.
pub fn sample_ellipsoid<R: Rng + ?Sized>(rng: &mut R, n: usize, axes: &[f64]) -> Vec<Vec<f64>> {
    let d = axes.len();
    (0..n)
        .map(|_| {
            let mut x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let radius = rng.random::<f64>().powf(1.0 / d as f64);
            for (v, a) in x.iter_mut().zip(axes) {
                *v *= radius / norm * a;
            }
            x
        })
        .collect()
}

/// Semi-axes spread log-uniformly over two decades.
pub fn default_axes(dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|i| {
            let t = if dim > 1 {
                i as f64 / (dim - 1) as f64
            } else {
                0.0
            };
            10f64.powf(2.0 * t - 1.0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub num_live: usize,
    pub dim: usize,
    pub repeats: usize,
    pub mean_r: f64,
    /// Sample standard deviation; zero for a single repeat.
    pub std_r: f64,
    pub predicted: f64,
}

/// Mean and spread of the reference radius over `repeats` ellipsoid samples.
pub fn radius_scaling_row<R: Rng + ?Sized>(
    num_live: usize,
    dim: usize,
    repeats: usize,
    bootstrap_rounds: usize,
    rng: &mut R,
) -> Result<ScalingRow> {
    let axes = default_axes(dim);
    let radii: Vec<f64> = (0..repeats)
        .map(|_| {
            let pts = sample_ellipsoid(rng, num_live, &axes);
            compute_reference_radius_with(
                &pts,
                bootstrap_rounds,
                rng,
                SampleSizePolicy::AllowUndersampled,
            )
            .map(|g| g.radius.r)
        })
        .collect::<Result<_>>()?;
    let n = radii.len() as f64;
    let mean_r = radii.iter().sum::<f64>() / n;
    let std_r = if radii.len() > 1 {
        (radii
            .iter()
            .map(|r| (r - mean_r) * (r - mean_r))
            .sum::<f64>()
            / (n - 1.0))
            .sqrt()
    } else {
        0.0
    };
    Ok(ScalingRow {
        num_live,
        dim,
        repeats,
        mean_r,
        std_r,
        predicted: predicted_radius(num_live, dim),
    })
}
