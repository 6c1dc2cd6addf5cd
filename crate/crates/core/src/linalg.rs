//! Dense symmetric eigendecomposition.
//!
//! Householder reduction to tridiagonal form followed by the implicit-shift
//! QL iteration, after the EISPACK `tred2`/`tql2` pair. The orthogonal
//! transformations are accumulated only when eigenvectors are requested.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Maximum QL sweeps spent on a single eigenvalue.
const MAX_SWEEPS: usize = 60;

/// Eigenvalues in descending order, with optional orthonormal eigenvectors
/// stored column-wise in the matching order.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Option<DMatrix<f64>>,
}

/// Full eigendecomposition of a real symmetric matrix.
///
/// The input must be symmetric to within `1e-12` relative to its largest
/// entry; it is symmetrized before the reduction.
pub fn symmetric_eigen(a: &DMatrix<f64>, want_vectors: bool) -> Result<SymmetricEigen> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    let n = rows;
    if n == 0 {
        return Ok(SymmetricEigen {
            values: vec![],
            vectors: want_vectors.then(|| DMatrix::zeros(0, 0)),
        });
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut asymmetry = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            asymmetry = asymmetry.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if asymmetry > 1e-12 * scale {
        return Err(Error::NotSymmetric { asymmetry });
    }
    if let Some(k) = a.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: k % n, col: k / n });
    }

    // Row-major working copy; `v[i * n + j]` is V[i][j].
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            v[i * n + j] = 0.5 * (a[(i, j)] + a[(j, i)]);
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];

    tridiagonalize(n, &mut v, &mut d, &mut e, want_vectors);
    ql_implicit(n, &mut v, &mut d, &mut e, want_vectors)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[y].total_cmp(&d[x]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = want_vectors.then(|| DMatrix::from_fn(n, n, |i, j| v[i * n + order[j]]));
    Ok(SymmetricEigen { values, vectors })
}

/// Eigenvalues only, descending.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    symmetric_eigen(a, false).map(|e| e.values)
}

fn tridiagonalize(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64], accumulate: bool) {
    let at = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
                v[at(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    if !accumulate {
        // The reduced diagonal sits on the diagonal of the work array.
        for i in 0..n {
            d[i] = v[at(i, i)];
        }
        e[0] = 0.0;
        return;
    }

    for i in 0..n - 1 {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = 0.0;
    }
    v[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

fn ql_implicit(
    n: usize,
    v: &mut [f64],
    d: &mut [f64],
    e: &mut [f64],
    accumulate: bool,
) -> Result<()> {
    let at = |i: usize, j: usize| i * n + j;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(Error::EigenFailure { index: l });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if accumulate {
                        for k in 0..n {
                            h = v[at(k, i + 1)];
                            v[at(k, i + 1)] = s * v[at(k, i)] + c * h;
                            v[at(k, i)] = c * v[at(k, i)] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
