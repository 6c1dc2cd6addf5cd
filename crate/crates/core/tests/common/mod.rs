#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Coefficients `c_0..=c_n` of `det(λI - A) = Σ c_k λ^k` by the
/// Faddeev-LeVerrier recursion.
pub fn characteristic_polynomial(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let id = DMatrix::<f64>::identity(n, n);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        m = a * &m + &id * c[n - k + 1];
        c[n - k] = -(a * &m).trace() / k as f64;
    }
    c
}

pub fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

/// Number of eigenvalues of the symmetric `a` below `x`, from the signs of
/// the pivots of `A - xI` (Sylvester's law of inertia).
pub fn count_below(a: &DMatrix<f64>, x: f64) -> usize {
    let n = a.nrows();
    let mut m = a - DMatrix::<f64>::identity(n, n) * x;
    let mut negative = 0;
    for k in 0..n {
        let mut pivot = m[(k, k)];
        if pivot == 0.0 {
            pivot = -f64::EPSILON * (1.0 + x.abs());
        }
        if pivot < 0.0 {
            negative += 1;
        }
        for i in k + 1..n {
            let f = m[(i, k)] / pivot;
            for j in k + 1..n {
                m[(i, j)] -= f * m[(k, j)];
            }
        }
    }
    negative
}

/// Roots of the characteristic polynomial in descending order. Each root is
/// isolated by inertia counts, then located by bisection on the sign of the
/// polynomial (or on the count itself for clustered roots).
pub fn oracle_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let radius = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    let poly = characteristic_polynomial(a);
    let mut roots = Vec::with_capacity(n);
    for k in 0..n {
        // k-th smallest: count_below(lo) <= k < count_below(hi)
        let (mut lo, mut hi) = (-radius, radius);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if count_below(a, mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-14 * radius {
                break;
            }
        }
        // polish on the polynomial when the bracket isolates a sign change
        let (plo, phi) = (horner(&poly, lo), horner(&poly, hi));
        let root = if plo.signum() != phi.signum() && plo != 0.0 && phi != 0.0 {
            let (mut l, mut h, mut sl) = (lo, hi, plo.signum());
            for _ in 0..60 {
                let mid = 0.5 * (l + h);
                let v = horner(&poly, mid);
                if v == 0.0 {
                    l = mid;
                    h = mid;
                    break;
                }
                if v.signum() == sl {
                    l = mid;
                    sl = v.signum();
                } else {
                    h = mid;
                }
            }
            0.5 * (l + h)
        } else {
            0.5 * (lo + hi)
        };
        roots.push(root);
    }
    roots.reverse();
    roots
}
