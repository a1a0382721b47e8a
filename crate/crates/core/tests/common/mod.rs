//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use oceansim::spectra::WaveGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn signed(s: usize, n: usize) -> i64 {
    s as i64 - (n / 2) as i64
}

/// Random field with `X(-k) = conj X(k)` in centred storage.
pub fn random_conjugate_symmetric(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let raw: Vec<Complex64> =
        (0..n * n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    (0..n * n)
        .map(|idx| {
            let (r, c) = (idx / n, idx % n);
            let partner = ((n - r) % n) * n + (n - c) % n;
            (raw[idx] + raw[partner].conj()) * 0.5
        })
        .collect()
}

/// `x[r, c] = 1/N^2 sum X[s, t] exp(2 pi i (f(s) r + f(t) c) / N)` with centred frequencies.
pub fn naive_centered_idft(n: usize, data: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for r in 0..n {
        for c in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for s in 0..n {
                for t in 0..n {
                    let ph = 2.0 * PI * (signed(s, n) * r as i64 + signed(t, n) * c as i64) as f64 / n as f64;
                    acc += data[s * n + t] * Complex64::from_polar(1.0, ph);
                }
            }
            out[r * n + c] = acc / (n * n) as f64;
        }
    }
    out
}

/// The eight surface fields of one grid by direct modal summation at the
/// sample points `x = i L / N`, `z = j L / N`. Order: h, Dx, Dz, dDx/dx,
/// dDz/dx, dDz/dz, dh/dx, dh/dz.
pub fn direct_surface_fields(grid: &WaveGrid, t: f64, choppiness: f64) -> [Vec<f64>; 8] {
    let n = grid.resolution();
    let l = grid.length();
    let g = grid.gravity();
    let h0 = grid.h0();
    let mut modes = Vec::new();
    for s in 0..n {
        for u in 0..n {
            let idx = s * n + u;
            let (a, b) = (signed(s, n), signed(u, n));
            let kx = 2.0 * PI * a as f64 / l;
            let kz = 2.0 * PI * b as f64 / l;
            let k = kx.hypot(kz);
            if k == 0.0 {
                continue;
            }
            let neg = ((n - s) % n) * n + (n - u) % n;
            let w = (g * k).sqrt();
            let h = h0[idx] * Complex64::from_polar(1.0, w * t) + h0[neg].conj() * Complex64::from_polar(1.0, -w * t);
            if h == Complex64::new(0.0, 0.0) {
                continue;
            }
            let i = Complex64::i();
            let dx = i * kx / k * h * choppiness;
            let dz = i * kz / k * h * choppiness;
            modes.push((a, b, [h, dx, dz, i * kx * dx, i * kx * dz, i * kz * dz, i * kx * h, i * kz * h]));
        }
    }
    let mut out: [Vec<f64>; 8] = std::array::from_fn(|_| vec![0.0; n * n]);
    for r in 0..n {
        for c in 0..n {
            let mut acc = [Complex64::new(0.0, 0.0); 8];
            for (a, b, coeffs) in &modes {
                let ph = 2.0 * PI * ((a * r as i64 + b * c as i64).rem_euclid(n as i64)) as f64 / n as f64;
                let e = Complex64::from_polar(1.0, ph);
                for (acc_f, cf) in acc.iter_mut().zip(coeffs) {
                    *acc_f += cf * e;
                }
            }
            for (f, v) in out.iter_mut().zip(acc) {
                f[r * n + c] = v.re;
            }
        }
    }
    out
}

/// Winding number of a closed polygon around `(x, z)`.
pub fn winding_number(poly: &[[f64; 2]], x: f64, z: f64) -> i32 {
    let mut w = 0;
    let m = poly.len();
    for i in 0..m {
        let a = poly[i];
        let b = poly[(i + 1) % m];
        let cross = (b[0] - a[0]) * (z - a[1]) - (x - a[0]) * (b[1] - a[1]);
        if a[1] <= z {
            if b[1] > z && cross > 0.0 {
                w += 1;
            }
        } else if b[1] <= z && cross < 0.0 {
            w -= 1;
        }
    }
    w
}

/// Simple star-shaped polygon with `m` vertices around `center`.
pub fn random_star_polygon(rng: &mut ChaCha8Rng, m: usize, center: [f64; 2]) -> Vec<[f64; 2]> {
    let mut angles: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    angles.sort_by(|a, b| a.total_cmp(b));
    angles
        .into_iter()
        .map(|t| {
            let r = rng.random_range(0.3..2.0);
            [center[0] + r * t.cos(), center[1] + r * t.sin()]
        })
        .collect()
}

/// Volume of a closed triangle mesh by signed tetrahedra from the origin.
pub fn tetra_volume(vertices: &[[f64; 3]], triangles: &[[usize; 3]]) -> f64 {
    triangles
        .iter()
        .map(|t| {
            let [a, b, c] = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
            (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0]))
                / 6.0
        })
        .sum()
}

/// Composite Simpson rule on `[a, b]` with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
