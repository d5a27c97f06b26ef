//! Bessel functions of the first kind, orders 0 and 1.

use std::f64::consts::PI;

/// Power series is used below this argument, the Hankel expansion above.
const SERIES_LIMIT: f64 = 12.0;

/// First zero of J₁, where J₀ attains its first minimum.
pub const J1_FIRST_ZERO: f64 = 3.831_705_970_207_512;

fn series(order: u32, z: f64) -> f64 {
    let h = 0.5 * z;
    let q = -h * h;
    let mut term = if order == 0 { 1.0 } else { h };
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k as f64 * (k + order) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn hankel(order: u32, z: f64) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let eight_z = 8.0 * z;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let next = term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * eight_z);
        if next.abs() >= last {
            break;
        }
        last = next.abs();
        term = next;
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    let chi = z - (0.5 * order as f64 + 0.25) * PI;
    (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}

pub fn j0(z: f64) -> f64 {
    let z = z.abs();
    if z <= SERIES_LIMIT {
        series(0, z)
    } else {
        hankel(0, z)
    }
}

pub fn j1(z: f64) -> f64 {
    let s = z.signum();
    let z = z.abs();
    s * if z <= SERIES_LIMIT { series(1, z) } else { hankel(1, z) }
}
