//! Dense real-symmetric eigensolver: Householder tridiagonalization
//! followed by implicit-shift QL with eigenvector accumulation
//! (the classic tred2/tql2 pair).
//!
//! Eigenvectors are kept transposed (one vector per contiguous row) so
//! the QL plane rotations sweep contiguous memory; that is what makes
//! the 924-dimensional sector solves affordable on one core.

use thiserror::Error;

use crate::real::Real;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("QL iteration failed to converge for eigenvalue {0}")]
    NoConvergence(usize),
}

const MAX_QL_ITER: usize = 50;

fn hypot<R: Real>(a: R, b: R) -> R {
    let (a, b) = (a.abs(), b.abs());
    let (big, small) = if a > b { (a, b) } else { (b, a) };
    if big == R::zero() {
        return R::zero();
    }
    let t = small / big;
    big * (R::one() + t * t).sqrt()
}

/// Householder reduction of a symmetric matrix (row-major, n×n) to
/// tridiagonal form. On return `d` holds the diagonal and `e[1..]` the
/// subdiagonal. With `accumulate` the matrix is overwritten by the
/// orthogonal transform Q (column i = transform vector i).
fn tridiagonalize<R: Real>(a: &mut [R], n: usize, d: &mut [R], e: &mut [R], accumulate: bool) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = R::zero();
        if l > 0 {
            let mut scale = R::zero();
            for k in 0..=l {
                scale += a[i * n + k].abs();
            }
            if scale == R::zero() {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= R::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f_acc = R::zero();
                for j in 0..=l {
                    if accumulate {
                        a[j * n + i] = a[i * n + j] / h;
                    }
                    let mut g = R::zero();
                    for k in 0..=j {
                        g += a[j * n + k] * a[i * n + k];
                    }
                    for k in j + 1..=l {
                        g += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g / h;
                    f_acc += e[j] * a[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let gj = e[j] - hh * f;
                    e[j] = gj;
                    for k in 0..=j {
                        a[j * n + k] = a[j * n + k] - (f * e[k] + gj * a[i * n + k]);
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    d[0] = R::zero();
    e[0] = R::zero();
    if accumulate {
        for i in 0..n {
            if d[i] != R::zero() {
                for j in 0..i {
                    let mut g = R::zero();
                    for k in 0..i {
                        g += a[i * n + k] * a[k * n + j];
                    }
                    for k in 0..i {
                        a[k * n + j] = a[k * n + j] - g * a[k * n + i];
                    }
                }
            }
            d[i] = a[i * n + i];
            a[i * n + i] = R::one();
            for j in 0..i {
                a[j * n + i] = R::zero();
                a[i * n + j] = R::zero();
            }
        }
    } else {
        for i in 0..n {
            d[i] = a[i * n + i];
        }
    }
}

/// Implicit-shift QL on a tridiagonal matrix. `qt`, when present, holds
/// one transform vector per row and is rotated along.
fn ql_implicit<R: Real>(
    d: &mut [R],
    e: &mut [R],
    n: usize,
    mut qt: Option<&mut [R]>,
) -> Result<(), LinalgError> {
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = R::zero();
    let eps = R::epsilon();

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter == MAX_QL_ITER {
                return Err(LinalgError::NoConvergence(l));
            }
            iter += 1;

            let mut g = (d[l + 1] - d[l]) / (R::of(2.0) * e[l]);
            let r = hypot(g, R::one());
            let sign_r = if g >= R::zero() { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = R::one();
            let mut c = R::one();
            let mut p = R::zero();
            let mut underflow = false;

            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                let r = hypot(f, g);
                e[i + 1] = r;
                if r == R::zero() {
                    d[i + 1] -= p;
                    e[m] = R::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                let r2 = (d[i] - g) * s + R::of(2.0) * c * b;
                p = s * r2;
                d[i + 1] = g + p;
                g = c * r2 - b;

                if let Some(q) = qt.as_deref_mut() {
                    let (lo, hi) = q.split_at_mut((i + 1) * n);
                    let row_i = &mut lo[i * n..(i + 1) * n];
                    let row_i1 = &mut hi[..n];
                    for k in 0..n {
                        f = row_i1[k];
                        row_i1[k] = s * row_i[k] + c * f;
                        row_i[k] = c * row_i[k] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = R::zero();
        }
    }
    Ok(())
}

/// Full eigendecomposition of a dense symmetric matrix.
///
/// Returns eigenvalues in ascending order and, when requested, the
/// orthonormal eigenvectors flattened with vector k in
/// `vectors[k*n..(k+1)*n]`.
pub fn symmetric_eigen<R: Real>(
    mut a: Vec<R>,
    n: usize,
    want_vectors: bool,
) -> Result<(Vec<R>, Option<Vec<R>>), LinalgError> {
    assert_eq!(a.len(), n * n);
    let mut d = vec![R::zero(); n];
    let mut e = vec![R::zero(); n];
    tridiagonalize(&mut a, n, &mut d, &mut e, want_vectors);

    let mut qt = if want_vectors {
        // transpose so transform vector i becomes row i
        let mut t = vec![R::zero(); n * n];
        for k in 0..n {
            for i in 0..n {
                t[i * n + k] = a[k * n + i];
            }
        }
        drop(a);
        Some(t)
    } else {
        drop(a);
        None
    };

    ql_implicit(&mut d, &mut e, n, qt.as_deref_mut())?;

    // sort ascending, permuting vectors along
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("finite eigenvalues"));
    let eigenvalues: Vec<R> = order.iter().map(|&i| d[i]).collect();
    let vectors = qt.map(|q| {
        let mut sorted = vec![R::zero(); n * n];
        for (new, &old) in order.iter().enumerate() {
            sorted[new * n..(new + 1) * n].copy_from_slice(&q[old * n..(old + 1) * n]);
        }
        sorted
    });
    Ok((eigenvalues, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        a
    }

    #[test]
    fn two_by_two_analytic() {
        let a: Vec<f64> = vec![-0.5, 1.0, 1.0, -0.5];
        let (vals, _) = symmetric_eigen(a, 2, true).unwrap();
        assert!((vals[0] + 1.5).abs() < 1e-14);
        assert!((vals[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn identity_spectrum() {
        let n = 6;
        let mut a = vec![0.0f64; n * n];
        for i in 0..n {
            a[i * n + i] = 1.0;
        }
        let (vals, vecs) = symmetric_eigen(a, n, true).unwrap();
        for v in vals {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let q = vecs.unwrap();
        // orthonormality
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| q[i * n + k] * q[j * n + k]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reconstruction_and_orthonormality_random() {
        for seed in 0..5 {
            let n = 30;
            let a = random_symmetric(n, seed);
            let (vals, vecs) = symmetric_eigen(a.clone(), n, true).unwrap();
            let q = vecs.unwrap();
            // ascending
            for k in 1..n {
                assert!(vals[k] >= vals[k - 1]);
            }
            // A v = λ v
            for k in 0..n {
                let v = &q[k * n..(k + 1) * n];
                let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-10);
                for r in 0..n {
                    let av: f64 = (0..n).map(|c| a[r * n + c] * v[c]).sum();
                    assert!((av - vals[k] * v[r]).abs() < 1e-9, "residual too large");
                }
            }
        }
    }

    #[test]
    fn eigenvalues_only_matches_full_solve() {
        let n = 25;
        let a = random_symmetric(n, 99);
        let (v1, _) = symmetric_eigen(a.clone(), n, true).unwrap();
        let (v2, none) = symmetric_eigen(a, n, false).unwrap();
        assert!(none.is_none());
        for k in 0..n {
            assert!((v1[k] - v2[k]).abs() < 1e-10);
        }
    }
}
