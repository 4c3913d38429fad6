//! Bessel functions of the first kind, orders 0..=2, and zeros of J₁.
//!
//! Small and moderate arguments use Miller's downward recurrence normalised by
//! `J₀ + 2 Σ J₂ₖ = 1`; large arguments use the Hankel asymptotic expansion.

use std::f64::consts::PI;

const ASYMPTOTIC_FROM: f64 = 25.0;

/// Returns `[J₀(x), J₁(x), J₂(x)]`.
pub fn j012(x: f64) -> [f64; 3] {
    let ax = x.abs();
    let vals = if ax < 1e-12 {
        [1.0 - ax * ax / 4.0, ax / 2.0, ax * ax / 8.0]
    } else if ax < ASYMPTOTIC_FROM {
        miller(ax)
    } else {
        [hankel_asymptotic(0, ax), hankel_asymptotic(1, ax), hankel_asymptotic(2, ax)]
    };
    if x < 0.0 {
        [vals[0], -vals[1], vals[2]]
    } else {
        vals
    }
}

pub fn j0(x: f64) -> f64 {
    j012(x)[0]
}

pub fn j1(x: f64) -> f64 {
    j012(x)[1]
}

pub fn j2(x: f64) -> f64 {
    j012(x)[2]
}

fn miller(x: f64) -> [f64; 3] {
    let top = x.max(2.0);
    let mut m = (top + 40.0 + (80.0 * top).sqrt()) as usize;
    if m % 2 == 1 {
        m += 1;
    }
    let tox = 2.0 / x;
    let (mut bjp, mut bj) = (0.0_f64, 1e-280_f64);
    let mut sum = 0.0;
    let mut out = [0.0; 3];
    for j in (1..=m).rev() {
        let bjm = j as f64 * tox * bj - bjp;
        bjp = bj;
        bj = bjm;
        if bj.abs() > 1e200 {
            bj *= 1e-200;
            bjp *= 1e-200;
            sum *= 1e-200;
            for o in out.iter_mut() {
                *o *= 1e-200;
            }
        }
        // bj now holds J_{j-1}
        let order = j - 1;
        if order <= 2 {
            out[order] = bj;
        }
        if order % 2 == 0 && order > 0 {
            sum += bj;
        }
    }
    let norm = 2.0 * sum + bj;
    [out[0] / norm, out[1] / norm, out[2] / norm]
}

fn hankel_asymptotic(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu as f64).powi(2);
    let chi = x - (nu as f64 / 2.0 + 0.25) * PI;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term = 1.0_f64;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        let contribution = term;
        if contribution.abs() > last && k > 2 {
            break;
        }
        last = contribution.abs();
        match k % 4 {
            0 => p += contribution,
            1 => q += contribution,
            2 => p -= contribution,
            _ => q -= contribution,
        }
        if contribution.abs() < 1e-18 {
            break;
        }
        let odd = (2 * k + 1) as f64;
        term *= (mu - odd * odd) / ((k + 1) as f64 * 8.0 * x);
    }
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// First `count` positive zeros of J₁, refined by Newton iteration.
pub fn j1_zeros(count: usize) -> Vec<f64> {
    (1..=count)
        .map(|m| {
            let beta = (m as f64 + 0.25) * PI;
            let mu = 4.0;
            let b8 = 8.0 * beta;
            let mut x = beta - (mu - 1.0) / b8 - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8.powi(3));
            for _ in 0..50 {
                let [b0, b1, _] = j012(x);
                let step = b1 / (b0 - b1 / x);
                x -= step;
                if step.abs() < 1e-15 * x {
                    break;
                }
            }
            x
        })
        .collect()
}
