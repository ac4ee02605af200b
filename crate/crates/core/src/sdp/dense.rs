//! Blocked Cholesky factorization of dense column-major symmetric matrices.

const NB: usize = 96;

/// Factors the lower triangle of the `n x n` column-major matrix `a` in
/// place as `L Lᵀ`. Fails with the offending column when a pivot drops
/// below `min_pivot` times the original diagonal entry.
pub(crate) fn cholesky(a: &mut [f64], n: usize, min_pivot: f64) -> Result<(), usize> {
    assert_eq!(a.len(), n * n);
    let diag: Vec<f64> = (0..n).map(|i| a[i + i * n]).collect();
    let mut k0 = 0;
    while k0 < n {
        let kb = NB.min(n - k0);
        factor_diagonal(a, n, k0, kb, &diag, min_pivot)?;
        let below = n - k0 - kb;
        if below > 0 {
            solve_panel(a, n, k0, kb);
            update_trailing(a, n, k0, kb);
        }
        k0 += kb;
    }
    Ok(())
}

fn factor_diagonal(
    a: &mut [f64],
    n: usize,
    k0: usize,
    kb: usize,
    diag: &[f64],
    min_pivot: f64,
) -> Result<(), usize> {
    for j in k0..k0 + kb {
        let mut d = a[j + j * n];
        for t in k0..j {
            d -= a[j + t * n] * a[j + t * n];
        }
        if !(d > min_pivot * diag[j].abs().max(f64::MIN_POSITIVE)) {
            return Err(j);
        }
        let d = d.sqrt();
        a[j + j * n] = d;
        for i in j + 1..k0 + kb {
            let mut s = a[i + j * n];
            for t in k0..j {
                s -= a[i + t * n] * a[j + t * n];
            }
            a[i + j * n] = s / d;
        }
    }
    Ok(())
}

/// Rows below the diagonal block: `P <- P L_kk^{-T}`.
fn solve_panel(a: &mut [f64], n: usize, k0: usize, kb: usize) {
    let r0 = k0 + kb;
    for c in 0..kb {
        let col = k0 + c;
        for t in 0..c {
            let l = a[col + (k0 + t) * n];
            if l == 0.0 {
                continue;
            }
            let (src, dst) = split_columns(a, n, k0 + t, col);
            for i in r0..n {
                dst[i] -= src[i] * l;
            }
        }
        let inv = 1.0 / a[col + col * n];
        for i in r0..n {
            a[i + col * n] *= inv;
        }
    }
}

fn split_columns(a: &mut [f64], n: usize, src: usize, dst: usize) -> (&[f64], &mut [f64]) {
    debug_assert!(src < dst);
    let (left, right) = a.split_at_mut(dst * n);
    (&left[src * n..(src + 1) * n], &mut right[..n])
}

/// `A22 <- A22 - P Pᵀ` on the lower triangle, one column block at a time.
fn update_trailing(a: &mut [f64], n: usize, k0: usize, kb: usize) {
    let r0 = k0 + kb;
    let mut j0 = r0;
    while j0 < n {
        let jb = NB.min(n - j0);
        let rows = n - j0;
        // C = A[j0.., j0..j0+jb], A_ = A[j0.., k0..k0+kb], B = A[j0..j0+jb, k0..k0+kb]ᵀ
        unsafe {
            let base = a.as_mut_ptr();
            let c = base.add(j0 + j0 * n);
            let pa = base.add(j0 + k0 * n) as *const f64;
            let pb = base.add(j0 + k0 * n) as *const f64;
            matrixmultiply::dgemm(
                rows, kb, jb, -1.0, pa, 1, n as isize, pb, n as isize, 1, 1.0, c, 1, n as isize,
            );
        }
        j0 += jb;
    }
}

/// Solves `L Lᵀ x = b` in place given the factor from [`cholesky`].
pub(crate) fn solve(l: &[f64], n: usize, b: &mut [f64]) {
    for j in 0..n {
        let v = b[j] / l[j + j * n];
        b[j] = v;
        if v != 0.0 {
            let col = &l[j * n..(j + 1) * n];
            for i in j + 1..n {
                b[i] -= col[i] * v;
            }
        }
    }
    for j in (0..n).rev() {
        let col = &l[j * n..(j + 1) * n];
        let mut s = b[j];
        for i in j + 1..n {
            s -= col[i] * b[i];
        }
        b[j] = s / l[j + j * n];
    }
}

/// Cholesky with diagonal pivoting on the lower triangle. Returns the
/// pivot order and the rank at which remaining pivots fall below
/// `tol * max_diag`. Only the leading `rank` columns of the permuted factor
/// are meaningful.
pub(crate) fn pivoted_cholesky(a: &[f64], n: usize, tol: f64) -> (Vec<usize>, usize) {
    let mut m: Vec<f64> = a.to_vec();
    for j in 0..n {
        for i in 0..j {
            m[i + j * n] = m[j + i * n];
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let max_diag = (0..n).map(|i| m[i + i * n]).fold(0.0, f64::max);
    let mut rank = 0;
    for k in 0..n {
        let (mut best, mut best_val) = (k, f64::NEG_INFINITY);
        for i in k..n {
            let v = m[i + i * n];
            if v > best_val {
                best_val = v;
                best = i;
            }
        }
        if best_val <= tol * max_diag {
            break;
        }
        if best != k {
            swap_sym(&mut m, n, k, best);
            perm.swap(k, best);
        }
        let d = m[k + k * n].sqrt();
        m[k + k * n] = d;
        for i in k + 1..n {
            m[i + k * n] /= d;
        }
        for j in k + 1..n {
            let ljk = m[j + k * n];
            if ljk == 0.0 {
                continue;
            }
            for i in k + 1..n {
                m[i + j * n] -= m[i + k * n] * ljk;
            }
        }
        rank = k + 1;
    }
    (perm, rank)
}

/// Swaps rows and columns `a` and `b`. The trailing block is updated in
/// full, so it stays symmetric.
fn swap_sym(m: &mut [f64], n: usize, a: usize, b: usize) {
    for t in 0..n {
        m.swap(a + t * n, b + t * n);
    }
    for t in 0..n {
        m.swap(t + a * n, t + b * n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> Vec<f64> {
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                g[i + j * n] = ((i * 7 + j * 13) % 11) as f64 / 11.0 - 0.5;
            }
        }
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += g[i + k * n] * g[j + k * n];
                }
                a[i + j * n] = s + if i == j { n as f64 } else { 0.0 };
            }
        }
        a
    }

    #[test]
    fn blocked_factor_solves() {
        for n in [1, 5, 96, 97, 250] {
            let a = spd(n);
            let mut l = a.clone();
            cholesky(&mut l, n, 1e-14).unwrap();
            let x_true: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
            let mut b = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    b[i] += a[i + j * n] * x_true[j];
                }
            }
            solve(&l, n, &mut b);
            let err = b
                .iter()
                .zip(&x_true)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "n = {n}: error {err}");
        }
    }

    #[test]
    fn pivoted_detects_rank() {
        // Gram matrix of vectors e1, e2, e1 + e2 has rank 2.
        let a = vec![1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 2.0];
        let (perm, rank) = pivoted_cholesky(&a, 3, 1e-12);
        assert_eq!(rank, 2);
        assert_eq!(perm[0], 2);
        assert!(cholesky(&mut a.clone(), 3, 1e-10).is_err());
    }
}
