//! Reference computations shared by the integration tests. None of them
//! call into the solver or simulator code they are used to check.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Full spectrum of `sum_edges XX + YY + ZZ`, sorted, built block by block
/// in fixed-popcount subspaces.
pub fn block_spectrum(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
    let mut all = Vec::with_capacity(1 << n);
    for weight in 0..=n {
        let basis: Vec<usize> = (0..1usize << n).filter(|s| s.count_ones() as usize == weight).collect();
        let index = |s: usize| basis.binary_search(&s).unwrap();
        let d = basis.len();
        let mut m = DMatrix::<f64>::zeros(d, d);
        for (col, &s) in basis.iter().enumerate() {
            for &(a, b) in edges {
                let (x, y) = ((s >> a) & 1, (s >> b) & 1);
                if x == y {
                    m[(col, col)] += 1.0;
                } else {
                    m[(col, col)] -= 1.0;
                    let t = s ^ (1 << a) ^ (1 << b);
                    m[(index(t), col)] += 2.0;
                }
            }
        }
        all.extend(m.symmetric_eigenvalues().iter().copied());
    }
    all.sort_by(f64::total_cmp);
    all
}

/// `<psi| sum_edges XX + YY + ZZ |psi>` evaluated bit by bit.
pub fn heisenberg_energy(amps: &[Complex64], edges: &[(usize, usize)]) -> f64 {
    let mut e = 0.0;
    for (s, a) in amps.iter().enumerate() {
        for &(i, j) in edges {
            let (x, y) = ((s >> i) & 1, (s >> j) & 1);
            if x == y {
                e += a.norm_sqr();
            } else {
                e -= a.norm_sqr();
                let t = s ^ (1 << i) ^ (1 << j);
                e += 2.0 * (amps[t].conj() * a).re;
            }
        }
    }
    e
}

/// `sum_i X_i |psi>`.
pub fn total_x(amps: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    for (s, a) in amps.iter().enumerate() {
        for q in 0..n {
            out[s ^ (1 << q)] += a;
        }
    }
    out
}

/// `sum_i Y_i |psi>` with `Y|0> = i|1>`, `Y|1> = -i|0>`.
pub fn total_y(amps: &[Complex64], n: usize) -> Vec<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    for (s, a) in amps.iter().enumerate() {
        for q in 0..n {
            let phase = if (s >> q) & 1 == 0 { i } else { -i };
            out[s ^ (1 << q)] += phase * a;
        }
    }
    out
}

/// `sum_i Z_i |psi>` with `Z|1> = -|1>`.
pub fn total_z(amps: &[Complex64], n: usize) -> Vec<Complex64> {
    amps.iter()
        .enumerate()
        .map(|(s, a)| a * (n as f64 - 2.0 * s.count_ones() as f64))
        .collect()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Central difference with one Richardson step, O(h^4).
pub fn richardson_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut y = x.to_vec();
    for i in 0..x.len() {
        let mut at = |d: f64| {
            y[i] = x[i] + d;
            let v = f(&y);
            y[i] = x[i];
            v
        };
        let (p1, m1, p2, m2) = (at(h), at(-h), at(2.0 * h), at(-2.0 * h));
        out.push((8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h));
    }
    out
}

pub fn uniform(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(lo..hi)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_amplitudes(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let n = norm(&v);
    v.into_iter().map(|a| a / n).collect()
}

/// Least-squares line through `(x, y)`: `(slope, intercept, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx, sxy * sxy / (sxx * syy))
}
