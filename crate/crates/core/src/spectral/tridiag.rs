//! Symmetric tridiagonal eigen-tools: implicit-shift QL with optional
//! eigenvector accumulation, Sturm-sequence bisection and inverse iteration.
//!
//! Matrices are passed as a main diagonal `d` (length `n`) and an
//! off-diagonal `e` (length `n - 1`, `e[i]` couples rows `i` and `i + 1`).

/// Sweep budget per eigenvalue for the QL iteration.
pub const MAX_SWEEPS: usize = 50;

/// Diagonalizes in place with the implicit-shift QL algorithm (the EISPACK
/// `tql2` recurrence). On success `d` holds the eigenvalues in ascending order
/// and, when `z` is given, `z` holds the orthonormal eigenvectors as contiguous
/// columns (`z[k * n + i]` is component `i` of eigenvector `k`). `z` must
/// enter as the identity.
///
/// Returns `Err(index)` if the eigenvalue at `index` did not converge within
/// [`MAX_SWEEPS`] sweeps.
pub fn ql_implicit(d: &mut [f64], off: &[f64], mut z: Option<&mut [f64]>) -> Result<(), usize> {
    let n = d.len();
    assert_eq!(off.len() + 1, n.max(1), "off-diagonal length must be n - 1");
    if let Some(z) = z.as_deref() {
        assert_eq!(z.len(), n * n);
    }
    if n <= 1 {
        return Ok(());
    }

    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_SWEEPS {
                    return Err(l);
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
                for di in d.iter_mut().skip(l + 2) {
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

                    if let Some(z) = z.as_deref_mut() {
                        let (lo, hi) = z.split_at_mut((i + 1) * n);
                        let col_i = &mut lo[i * n..];
                        let col_i1 = &mut hi[..n];
                        for (a, b) in col_i.iter_mut().zip(col_i1.iter_mut()) {
                            let t = *b;
                            *b = s * *a + c * t;
                            *a = c * *a - s * t;
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

    // Selection sort keeps the column swaps to at most n.
    for i in 0..n - 1 {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d.swap(i, k);
            if let Some(z) = z.as_deref_mut() {
                for row in 0..n {
                    z.swap(i * n + row, k * n + row);
                }
            }
        }
    }
    Ok(())
}

/// Gershgorin interval containing the whole spectrum.
pub fn gershgorin(d: &[f64], off: &[f64]) -> (f64, f64) {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - left - right);
        hi = hi.max(d[i] + left + right);
    }
    (lo, hi)
}

/// Number of eigenvalues strictly below `x` (Sturm sequence count).
pub fn count_below(d: &[f64], off: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let denom = if q == 0.0 { tiny } else { q };
        q = d[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k`-th smallest eigenvalue (0-based) by bisection on the Sturm count.
pub fn kth_eigenvalue(d: &[f64], off: &[f64], k: usize) -> f64 {
    assert!(k < d.len());
    let (mut lo, mut hi) = gershgorin(d, off);
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    lo -= 1e-12 * scale;
    hi += 1e-12 * scale;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(d, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `(T - shift I) x = rhs` for tridiagonal `T` with partial pivoting.
/// Exactly singular pivots are nudged, which is what inverse iteration wants.
pub fn solve_shifted(d: &[f64], off: &[f64], shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = d.len();
    let scale = d.iter().chain(off).fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let nudge = f64::EPSILON * scale;

    // Row i of U has entries u0[i] (diagonal), u1[i], u2[i] (two superdiagonals).
    let mut u0: Vec<f64> = d.iter().map(|&v| v - shift).collect();
    let mut u1: Vec<f64> = (0..n).map(|i| if i + 1 < n { off[i] } else { 0.0 }).collect();
    let mut u2 = vec![0.0; n];
    let mut sub: Vec<f64> = off.to_vec();
    let mut b = rhs.to_vec();

    for i in 0..n.saturating_sub(1) {
        if sub[i].abs() > u0[i].abs() {
            // Swap rows i and i + 1.
            let (a0, a1, a2) = (u0[i], u1[i], u2[i]);
            u0[i] = sub[i];
            u1[i] = u0[i + 1];
            u2[i] = u1[i + 1];
            let factor = a0 / u0[i];
            u0[i + 1] = a1 - factor * u1[i];
            u1[i + 1] = a2 - factor * u2[i];
            b.swap(i, i + 1);
            b[i + 1] -= factor * b[i];
        } else {
            if u0[i] == 0.0 {
                u0[i] = nudge;
            }
            let factor = sub[i] / u0[i];
            u0[i + 1] -= factor * u1[i];
            u1[i + 1] -= factor * u2[i];
            b[i + 1] -= factor * b[i];
        }
        sub[i] = 0.0;
    }
    if u0[n - 1] == 0.0 {
        u0[n - 1] = nudge;
    }

    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        if i + 1 < n {
            acc -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            acc -= u2[i] * x[i + 2];
        }
        x[i] = acc / u0[i];
    }
    x
}

/// Unit eigenvector for an (accurately known) eigenvalue by inverse iteration.
pub fn inverse_iteration(d: &[f64], off: &[f64], eigenvalue: f64) -> Vec<f64> {
    let n = d.len();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 101) as f64).collect();
    normalize(&mut v);
    for _ in 0..4 {
        let mut w = solve_shifted(d, off, eigenvalue, &v);
        normalize(&mut w);
        v = w;
    }
    v
}

pub(crate) fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(d: &[f64], off: &[f64]) -> Vec<Vec<f64>> {
        let n = d.len();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = d[i];
            if i + 1 < n {
                m[i][i + 1] = off[i];
                m[i + 1][i] = off[i];
            }
        }
        m
    }

    fn identity(n: usize) -> Vec<f64> {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        z
    }

    #[test]
    fn two_by_two_swap() {
        let mut d = vec![0.0, 0.0];
        let mut z = identity(2);
        ql_implicit(&mut d, &[1.0], Some(&mut z)).unwrap();
        assert!((d[0] + 1.0).abs() < 1e-15);
        assert!((d[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn already_diagonal_sorts() {
        let mut d = vec![3.0, -1.0, 2.0];
        let mut z = identity(3);
        ql_implicit(&mut d, &[0.0, 0.0], Some(&mut z)).unwrap();
        assert_eq!(d, vec![-1.0, 2.0, 3.0]);
        // Column 0 is e_1, column 1 is e_2, column 2 is e_0.
        assert_eq!(&z[0..3], &[0.0, 1.0, 0.0]);
        assert_eq!(&z[3..6], &[0.0, 0.0, 1.0]);
        assert_eq!(&z[6..9], &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn reconstruction_and_orthogonality() {
        let n = 40;
        let d0: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 - 4.0).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| 0.5 + ((i * 13) % 7) as f64 * 0.3).collect();
        let mut d = d0.clone();
        let mut z = identity(n);
        ql_implicit(&mut d, &off, Some(&mut z)).unwrap();
        let a = dense(&d0, &off);
        let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in 0..n {
                let rec: f64 = (0..n).map(|k| z[k * n + i] * d[k] * z[k * n + j]).sum();
                assert!((rec - a[i][j]).abs() < 1e-10 * scale);
                let dot: f64 = (0..n).map(|k| z[i * n + k] * z[j * n + k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10);
            }
        }
        for w in d.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn bisection_matches_ql() {
        let n = 60;
        let d0: Vec<f64> = (0..n).map(|i| (i as f64).sin() * 3.0).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| 1.0 + (i as f64).cos()).collect();
        let mut d = d0.clone();
        ql_implicit(&mut d, &off, None).unwrap();
        for k in [0, 1, 17, n - 2, n - 1] {
            let b = kth_eigenvalue(&d0, &off, k);
            assert!((b - d[k]).abs() < 1e-11, "k={k}: {b} vs {}", d[k]);
        }
    }

    #[test]
    fn inverse_iteration_recovers_vector() {
        let n = 50;
        let d0: Vec<f64> = (0..n).map(|i| 2.0 + 1e3 * (i == 0) as u8 as f64).collect();
        let off = vec![-1.0; n - 1];
        let lam = kth_eigenvalue(&d0, &off, n - 1);
        let v = inverse_iteration(&d0, &off, lam);
        let a = dense(&d0, &off);
        for i in 0..n {
            let av: f64 = (0..n).map(|j| a[i][j] * v[j]).sum();
            assert!((av - lam * v[i]).abs() < 1e-10 * lam);
        }
    }

    #[test]
    fn pivoted_solve() {
        let d = [1e-20, 4.0, 5.0, 6.0];
        let off = [2.0, 1.0, 3.0];
        let rhs = [1.0, 2.0, 3.0, 4.0];
        let x = solve_shifted(&d, &off, 0.0, &rhs);
        let a = dense(&d, &off);
        for i in 0..4 {
            let ax: f64 = (0..4).map(|j| a[i][j] * x[j]).sum();
            assert!((ax - rhs[i]).abs() < 1e-12);
        }
    }
}
