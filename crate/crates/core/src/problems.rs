//! Analytic benchmark problems.
//!
//! | name            | d  | prior                                   | true ln Z |
//! |-----------------|----|-----------------------------------------|-----------|
//! | `gauss-N`       | N  | U(0,1)                                  | 0         |
//! | `box-N`         | N  | U(-½,½)                                 | –         |
//! | `rosenbrock-N`  | N  | U(-10,10)                               | –         |
//! | `eggbox`        | 2  | U(0,10π)                                | –         |
//! | `loggamma-N`    | N  | U(0,1)                                  | 0         |
//! | `funnel-N`      | N  | N(0,1) on ln σ², U(-10,10) on μ         | –         |
//! | `eightschools`  | 10 | N(0,1) on x, N(0,5²) on μ, C⁺(0,5) on τ | –         |

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // float methods come from std whenever it is linked
use num_traits::Float;

use crate::linalg;
use crate::math::{logaddexp, normal_log_pdf, normal_quantile, HALF_LN_2PI};
use crate::problem::ProblemDefinition;
use crate::{Error, Result};

/// Names accepted by [`by_name`] for the standard suite.
pub const CATALOG: [&str; 9] = [
    "gauss-4",
    "box-5",
    "rosenbrock-2",
    "rosenbrock-20",
    "eggbox",
    "loggamma-2",
    "loggamma-10",
    "funnel-10",
    "eightschools",
];

/// Look up a problem by name. Families taking a dimension accept any
/// `family-N` with a valid `N`.
pub fn by_name(name: &str) -> Result<ProblemDefinition> {
    let unknown = || Error::UnknownProblem(name.into());
    match name {
        "eggbox" => return Ok(eggbox()),
        "eightschools" => return Ok(eight_schools()),
        _ => {}
    }
    let (family, dim) = name.rsplit_once('-').ok_or_else(unknown)?;
    let d: usize = dim.parse().map_err(|_| unknown())?;
    match family {
        "gauss" => gaussian(d),
        "box" => box_problem(d),
        "rosenbrock" => rosenbrock(d),
        "loggamma" => loggamma(d),
        "funnel" => funnel(d),
        _ => Err(unknown()),
    }
}

fn need_dim(d: usize, min: usize, what: &str) -> Result<()> {
    if d < min {
        return Err(Error::InvalidProblem(format!(
            "{what} needs d ≥ {min}, got {d}"
        )));
    }
    Ok(())
}

/// Per-axis widths of the Gaussian problem: log-spaced from 10⁻¹ (first
/// axis) down to 10⁻⁹ (last axis).
pub fn gaussian_sigmas(d: usize) -> Vec<f64> {
    (0..d)
        .map(|i| {
            let t = if d > 1 {
                i as f64 / (d - 1) as f64
            } else {
                0.0
            };
            0.1 * 10f64.powf(-8.0 * t)
        })
        .collect()
}

/// Means of the Gaussian problem, pushed away from the cube centre.
pub fn gaussian_means(d: usize) -> Vec<f64> {
    gaussian_sigmas(d)
        .iter()
        .enumerate()
        .map(|(i, s)| 0.5 + (1.0 - 5.0 * s) / 2.0 * (i as f64 / (2 * d) as f64).sin())
        .collect()
}

/// Product of normals with widths spanning eight decades.
pub fn gaussian(d: usize) -> Result<ProblemDefinition> {
    need_dim(d, 1, "gauss")?;
    let sigmas = gaussian_sigmas(d);
    let means = gaussian_means(d);
    Ok(
        ProblemDefinition::on_unit_cube(format!("gauss-{d}"), d, move |x| {
            x.iter()
                .zip(means.iter().zip(&sigmas))
                .map(|(&x, (&m, &s))| normal_log_pdf(x, m, s))
                .sum()
        })
        .with_true_logz(0.0),
    )
}

/// Gaussian of width 0.1 with a +100 plateau inside the cube `max|θ| < 0.1`.
pub fn box_problem(d: usize) -> Result<ProblemDefinition> {
    need_dim(d, 1, "box")?;
    Ok(ProblemDefinition::new(
        format!("box-{d}"),
        d,
        |u, t| {
            for (t, u) in t.iter_mut().zip(u) {
                *t = u - 0.5;
            }
        },
        box_log_likelihood,
    ))
}

pub fn box_log_likelihood(theta: &[f64]) -> f64 {
    let quad: f64 = theta.iter().map(|t| (t / 0.1) * (t / 0.1)).sum();
    let delta = theta.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let bonus = if delta < 0.1 { 100.0 } else { 0.0 };
    -0.5 * quad + bonus
}

pub fn rosenbrock(d: usize) -> Result<ProblemDefinition> {
    need_dim(d, 2, "rosenbrock")?;
    Ok(ProblemDefinition::new(
        format!("rosenbrock-{d}"),
        d,
        |u, t| {
            for (t, u) in t.iter_mut().zip(u) {
                *t = -10.0 + 20.0 * u;
            }
        },
        rosenbrock_log_likelihood,
    ))
}

/// `-2 Σ [100 (θ_{i+1} - θ_i²)² + (1 - θ_i)²]`
pub fn rosenbrock_log_likelihood(theta: &[f64]) -> f64 {
    -2.0 * theta
        .windows(2)
        .map(|w| {
            let a = w[1] - w[0] * w[0];
            let b = 1.0 - w[0];
            100.0 * a * a + b * b
        })
        .sum::<f64>()
}

/// Two-dimensional eggbox, `(2 + cos(θ₁/2) cos(θ₂/2))⁵` on `[0, 10π]²`.
pub fn eggbox() -> ProblemDefinition {
    ProblemDefinition::new(
        "eggbox",
        2,
        |u, t| {
            t[0] = 10.0 * PI * u[0];
            t[1] = 10.0 * PI * u[1];
        },
        |t| (2.0 + (t[0] / 2.0).cos() * (t[1] / 2.0).cos()).powi(5),
    )
}

/// Log-density of the shape-1 log-gamma distribution with location `loc`
/// and scale `scale`.
pub fn loggamma_log_pdf(x: f64, loc: f64, scale: f64) -> f64 {
    let z = (x - loc) / scale;
    z - z.exp() - scale.ln()
}

/// Mixture of log-gamma and normal factors with modes at ⅓ and ⅔.
pub fn loggamma(d: usize) -> Result<ProblemDefinition> {
    need_dim(d, 2, "loggamma")?;
    const S: f64 = 1.0 / 30.0;
    let half = 0.5f64.ln();
    Ok(
        ProblemDefinition::on_unit_cube(format!("loggamma-{d}"), d, move |x| {
            let l1 = half
                + logaddexp(
                    loggamma_log_pdf(x[0], 1.0 / 3.0, S),
                    loggamma_log_pdf(x[0], 2.0 / 3.0, S),
                );
            let l2 = half
                + logaddexp(
                    normal_log_pdf(x[1], 1.0 / 3.0, S),
                    normal_log_pdf(x[1], 2.0 / 3.0, S),
                );
            // factor i (1-based) is log-gamma while 2i ≤ d + 2
            let rest: f64 = x
                .iter()
                .enumerate()
                .skip(2)
                .map(|(i, &xi)| {
                    if 2 * (i + 1) <= d + 2 {
                        loggamma_log_pdf(xi, 2.0 / 3.0, S)
                    } else {
                        normal_log_pdf(xi, 2.0 / 3.0, S)
                    }
                })
                .sum();
            l1 + l2 + rest
        })
        .with_true_logz(0.0),
    )
}

/// Unit-cube coordinate clamped away from 0 and 1 so inverse CDFs stay
/// finite.
fn clamp_open(u: f64) -> f64 {
    u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Correlation `γ = 0.95` used by [`funnel`].
pub const FUNNEL_CORRELATION: f64 = 0.95;

/// Correlated funnel: parameters `(ln σ², μ₁ … μ_{d-1})`, likelihood
/// `Normal(μ; 0, σ² M)` with `M` the equicorrelation matrix.
pub fn funnel(d: usize) -> Result<ProblemDefinition> {
    funnel_with_correlation(d, FUNNEL_CORRELATION)
}

pub fn funnel_with_correlation(d: usize, gamma: f64) -> Result<ProblemDefinition> {
    need_dim(d, 2, "funnel")?;
    let n = d - 1;
    let mut corr = vec![gamma; n * n];
    for i in 0..n {
        corr[i * n + i] = 1.0;
    }
    let chol = linalg::cholesky(&corr, n).map_err(|_| {
        Error::InvalidProblem(format!("correlation {gamma} is not positive definite"))
    })?;
    let log_det_corr = linalg::log_det_from_cholesky(&chol, n);
    Ok(ProblemDefinition::new(
        format!("funnel-{d}"),
        d,
        |u, t| {
            t[0] = normal_quantile(clamp_open(u[0]));
            for (t, u) in t[1..].iter_mut().zip(&u[1..]) {
                *t = -10.0 + 20.0 * u;
            }
        },
        move |t| {
            let log_var = t[0];
            let mut y = t[1..].to_vec();
            linalg::forward_substitute(&chol, n, &mut y);
            let quad: f64 = y.iter().map(|v| v * v).sum();
            -0.5 * quad * (-log_var).exp()
                - n as f64 * (HALF_LN_2PI + 0.5 * log_var)
                - 0.5 * log_det_corr
        },
    ))
}

/// Treatment effects and standard errors of the eight schools.
pub const EIGHT_SCHOOLS: [(f64, f64); 8] = [
    (28.0, 15.0),
    (8.0, 10.0),
    (-3.0, 16.0),
    (7.0, 11.0),
    (-1.0, 9.0),
    (1.0, 11.0),
    (18.0, 10.0),
    (12.0, 18.0),
];

/// Non-centred eight schools: parameters `(x₁ … x₈, μ, τ)`, school effect
/// `x_i τ + μ`.
pub fn eight_schools() -> ProblemDefinition {
    ProblemDefinition::new(
        "eightschools",
        10,
        |u, t| {
            for (t, u) in t[..8].iter_mut().zip(&u[..8]) {
                *t = normal_quantile(clamp_open(*u));
            }
            t[8] = 5.0 * normal_quantile(clamp_open(u[8]));
            t[9] = 5.0 * (PI * u[9] / 2.0).tan();
        },
        |t| {
            let (mu, tau) = (t[8], t[9]);
            -EIGHT_SCHOOLS
                .iter()
                .zip(&t[..8])
                .map(|(&(y, s), &x)| {
                    let r = x * tau + mu - y;
                    r * r / (2.0 * s * s)
                })
                .sum::<f64>()
        },
    )
}
