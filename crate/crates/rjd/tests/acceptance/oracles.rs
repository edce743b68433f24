//! Brute-force evidence values by grid quadrature, written out from the
//! problem formulas independently of the catalog code.

use std::f64::consts::PI;

/// Composite Simpson weights for `n` (even) panels on `[a, b]`, paired with
/// the nodes.
fn simpson_grid(a: f64, b: f64, n: usize) -> impl Iterator<Item = (f64, f64)> {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    (0..=n).map(move |i| {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        (a + i as f64 * h, w * h / 3.0)
    })
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    simpson_grid(a, b, n).map(|(x, w)| w * f(x)).sum()
}

fn normal_pdf(x: f64, m: f64, s: f64) -> f64 {
    (-0.5 * ((x - m) / s).powi(2)).exp() / (s * (2.0 * PI).sqrt())
}

/// Uniform prior on `[-10, 10]²`, `ln L = -2 [100 (y - x²)² + (1 - x)²]`.
pub fn rosenbrock2_logz() -> f64 {
    let inner = |x: f64| {
        // the ridge has width 0.05 around y = x²
        let (a, b) = ((x * x - 1.0).max(-10.0), (x * x + 1.0).min(10.0));
        if a >= b {
            return 0.0;
        }
        simpson(
            |y| (-2.0 * (100.0 * (y - x * x).powi(2) + (1.0 - x).powi(2))).exp(),
            a,
            b,
            800,
        )
    };
    (simpson(inner, -10.0, 10.0, 40_000) / 400.0).ln()
}

/// Uniform prior on `[0, 10π]²`, `ln L = (2 + cos(x/2) cos(y/2))⁵`.
pub fn eggbox_logz() -> f64 {
    let n = 6000;
    let grid: Vec<(f64, f64)> = simpson_grid(0.0, 10.0 * PI, n)
        .map(|(x, w)| ((x / 2.0).cos(), w))
        .collect();
    let peak = 243.0;
    let mut sum = 0.0;
    for &(cx, wx) in &grid {
        let mut row = 0.0;
        for &(cy, wy) in &grid {
            row += wy * ((2.0 + cx * cy).powi(5) - peak).exp();
        }
        sum += wx * row;
    }
    peak + (sum / (100.0 * PI * PI)).ln()
}

/// Uniform prior on the unit square; the likelihood is a product of a
/// two-component log-gamma mixture and a two-component normal mixture.
pub fn loggamma2_logz() -> f64 {
    let s = 1.0 / 30.0;
    let loggamma_pdf = |x: f64, loc: f64| {
        let z = (x - loc) / s;
        (z - z.exp()).exp() / s
    };
    let first = simpson(
        |x| 0.5 * (loggamma_pdf(x, 1.0 / 3.0) + loggamma_pdf(x, 2.0 / 3.0)),
        0.0,
        1.0,
        100_000,
    );
    let second = simpson(
        |x| 0.5 * (normal_pdf(x, 1.0 / 3.0, s) + normal_pdf(x, 2.0 / 3.0, s)),
        0.0,
        1.0,
        100_000,
    );
    first.ln() + second.ln()
}

/// `ln σ² ~ N(0, 1)`, `μ ~ U(-10, 10)`, `L = N(μ; 0, σ²)`.
pub fn funnel2_logz() -> f64 {
    let outer = |v: f64| {
        let sigma = (0.5 * v).exp();
        let a = (14.0 * sigma).min(10.0);
        let inner = simpson(|mu| normal_pdf(mu, 0.0, sigma), -a, a, 800);
        normal_pdf(v, 0.0, 1.0) * inner / 20.0
    };
    simpson(outer, -10.0, 10.0, 8000).ln()
}
