//! Quadrature, interpolation and finite-difference helpers on uniform grids.

/// Composite trapezoid rule for samples with uniform spacing `h`.
pub(crate) fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values.iter().sum();
            h * (inner - 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Trapezoid-rule inner product of two real functions sampled on the same grid.
pub(crate) fn inner(a: &[f64], b: &[f64], h: f64) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    if n < 2 {
        return 0.0;
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    h * (sum - 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]))
}

pub(crate) fn norm_sq(a: &[f64], h: f64) -> f64 {
    inner(a, a, h)
}

const STENCIL: usize = 8;

/// Evaluates samples at fractional index `u` by 8-point Lagrange interpolation.
/// Positions outside `[0, n-1]` evaluate to zero (no support beyond the grid).
pub(crate) fn interpolate(samples: &[f64], u: f64) -> f64 {
    let n = samples.len();
    if !(0.0..=(n - 1) as f64).contains(&u) {
        return 0.0;
    }
    let base = u.floor();
    if base == u {
        return samples[u as usize];
    }
    let start = (base as isize - (STENCIL as isize / 2 - 1)).clamp(0, (n - STENCIL) as isize) as usize;
    let mut acc = 0.0;
    for k in 0..STENCIL {
        let xk = (start + k) as f64;
        let mut w = 1.0;
        for m in 0..STENCIL {
            if m != k {
                let xm = (start + m) as f64;
                w *= (u - xm) / (xk - xm);
            }
        }
        acc += w * samples[start + k];
    }
    acc
}

/// Samples of `f(x - d)` given samples of `f` on a grid with spacing `h`.
pub(crate) fn shift(samples: &[f64], d: f64, h: f64) -> Vec<f64> {
    let offset = d / h;
    (0..samples.len())
        .map(|i| interpolate(samples, i as f64 - offset))
        .collect()
}

fn at(samples: &[f64], i: isize) -> f64 {
    if i < 0 || i as usize >= samples.len() {
        0.0
    } else {
        samples[i as usize]
    }
}

/// 7-point central first derivative; values beyond the grid are taken as zero.
pub(crate) fn first_derivative(samples: &[f64], h: f64) -> Vec<f64> {
    const C: [f64; 3] = [45.0, -9.0, 1.0];
    (0..samples.len() as isize)
        .map(|i| {
            let mut acc = 0.0;
            for (k, c) in C.iter().enumerate() {
                let k = k as isize + 1;
                acc += c * (at(samples, i + k) - at(samples, i - k));
            }
            acc / (60.0 * h)
        })
        .collect()
}

/// 7-point central second derivative; values beyond the grid are taken as zero.
pub(crate) fn second_derivative(samples: &[f64], h: f64) -> Vec<f64> {
    const C: [f64; 3] = [270.0, -27.0, 2.0];
    (0..samples.len() as isize)
        .map(|i| {
            let mut acc = -490.0 * samples[i as usize];
            for (k, c) in C.iter().enumerate() {
                let k = k as isize + 1;
                acc += c * (at(samples, i + k) + at(samples, i - k));
            }
            acc / (180.0 * h * h)
        })
        .collect()
}

/// Derivative of arbitrary order built from repeated second derivatives.
pub(crate) fn derivative(samples: &[f64], h: f64, order: usize) -> Vec<f64> {
    let mut out = samples.to_vec();
    for _ in 0..order / 2 {
        out = second_derivative(&out, h);
    }
    if order % 2 == 1 {
        out = first_derivative(&out, h);
    }
    out
}

/// Physicists' Hermite polynomial H_n(t) by upward recurrence.
pub(crate) fn hermite(n: usize, t: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * t);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = 2.0 * t * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Central difference of `f` at step `h` and `h/2`, combined by Richardson
/// extrapolation. `f` receives the offset from the expansion point.
/// Returns `(extrapolated, coarse, fine)`.
pub(crate) fn richardson<T, F>(f: F, h: f64) -> (T, T, T)
where
    T: Clone + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    F: Fn(f64) -> T,
{
    let coarse = (f(h) - f(-h)) * (0.5 / h);
    let fine = (f(0.5 * h) - f(-0.5 * h)) * (1.0 / h);
    let extrapolated = fine.clone() * (4.0 / 3.0) + coarse.clone() * (-1.0 / 3.0);
    (extrapolated, coarse, fine)
}
