//! Desk-scale dense eigensolver.
//!
//! `dense_eigenvalues` reduces to Hessenberg form with Householder
//! reflections and runs the Francis double-shift QR iteration (the classic
//! EISPACK `hqr` lineage, values only). Eigenvectors for real simple
//! eigenvalues are recovered afterwards by shifted inverse iteration.
//!
//! This is the oracle the rest of the crate is checked against. It is
//! intentionally capped at order 64: correctness and determinism over
//! scalability.

use crate::matrix::{DenseMatrix, LinalgError};
use crate::rng::Xoshiro256StarStar;

/// Largest matrix order `dense_eigenvalues` accepts.
pub const MAX_EIGEN_ORDER: usize = 64;

/// Relative residual bound enforced when an eigenpair is constructed from a
/// matrix: `||M v - lambda v|| <= EIGENPAIR_RESIDUAL_TOL * ||M||_F`.
pub const EIGENPAIR_RESIDUAL_TOL: f64 = 1e-8;

/// One eigenvalue, complex-capable, with an optional eigenvector.
///
/// Real eigenvectors are stored as an `n x 1` column with unit Euclidean
/// norm and the largest-magnitude entry made positive. Vectors are attached
/// only when the producing routine can certify the residual bound.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value_re: f64,
    pub value_im: f64,
    pub vector: Option<DenseMatrix>,
}

impl EigenPair {
    /// Value-only pair (no vector attached).
    pub fn value_only(value_re: f64, value_im: f64) -> Self {
        Self {
            value_re,
            value_im,
            vector: None,
        }
    }

    /// Build a real eigenpair from `matrix`, normalising the vector and
    /// checking `||M v - lambda v|| <= 1e-8 ||M||_F`.
    pub fn validated(
        matrix: &DenseMatrix,
        value_re: f64,
        vector: &DenseMatrix,
    ) -> Result<Self, LinalgError> {
        assert_eq!(vector.cols(), 1, "eigenvector must be a column");
        assert_eq!(vector.rows(), matrix.rows(), "eigenvector length mismatch");
        let norm = vector.frobenius_norm();
        if norm == 0.0 {
            return Err(LinalgError::ZeroComponent { iterations: 0 });
        }
        let v = normalize_sign(&vector.scale(1.0 / norm));
        let residual = matrix.matmul(&v).sub(&v.scale(value_re)).frobenius_norm();
        let bound = EIGENPAIR_RESIDUAL_TOL * matrix.frobenius_norm().max(f64::MIN_POSITIVE);
        if residual > bound {
            return Err(LinalgError::ResidualTooLarge { residual, bound });
        }
        Ok(Self {
            value_re,
            value_im: 0.0,
            vector: Some(v),
        })
    }

    /// |lambda|.
    pub fn magnitude(&self) -> f64 {
        self.value_re.hypot(self.value_im)
    }

    pub fn is_real(&self) -> bool {
        self.value_im == 0.0
    }
}

/// Scale a unit column so its largest-magnitude entry is positive.
pub(crate) fn normalize_sign(v: &DenseMatrix) -> DenseMatrix {
    let mut best = 0usize;
    let mut best_abs = 0.0;
    for (i, &e) in v.entries().iter().enumerate() {
        if e.abs() > best_abs {
            best_abs = e.abs();
            best = i;
        }
    }
    if v.entries()[best] < 0.0 {
        v.scale(-1.0)
    } else {
        v.clone()
    }
}

/// All eigenvalues of a square matrix of order at most 64, sorted by
/// decreasing magnitude (ties: larger real part first, then larger
/// imaginary part). Complex eigenvalues come out as conjugate pairs with
/// no vector; real simple eigenvalues carry a validated eigenvector when
/// inverse iteration certifies one.
pub fn dense_eigenvalues(
    m: &DenseMatrix,
    max_iters: usize,
) -> Result<Vec<EigenPair>, LinalgError> {
    assert!(m.is_square(), "dense_eigenvalues needs a square matrix");
    assert!(
        m.rows() <= MAX_EIGEN_ORDER,
        "dense_eigenvalues is a desk-scale oracle (order <= {MAX_EIGEN_ORDER})"
    );
    let n = m.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = m.clone();
    reduce_to_hessenberg(&mut h);
    let mut values = hessenberg_eigenvalues(&mut h, max_iters)?;
    values.sort_by(|a, b| {
        let ma = a.0.hypot(a.1);
        let mb = b.0.hypot(b.1);
        mb.partial_cmp(&ma)
            .unwrap()
            .then(b.0.partial_cmp(&a.0).unwrap())
            .then(b.1.partial_cmp(&a.1).unwrap())
    });

    let scale = values
        .iter()
        .map(|&(re, im)| re.hypot(im))
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut pairs = Vec::with_capacity(n);
    for (idx, &(re, im)) in values.iter().enumerate() {
        let mut pair = EigenPair::value_only(re, im);
        if im == 0.0 && is_simple(&values, idx, scale) {
            if let Some(v) = inverse_iteration(m, re) {
                if let Ok(p) = EigenPair::validated(m, re, &v) {
                    pair = p;
                }
            }
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

fn is_simple(values: &[(f64, f64)], idx: usize, scale: f64) -> bool {
    let (re, im) = values[idx];
    values.iter().enumerate().all(|(j, &(r, i))| {
        j == idx || ((re - r).hypot(im - i) > 1e-6 * scale)
    })
}

/// Householder reduction to upper Hessenberg form, in place.
fn reduce_to_hessenberg(h: &mut DenseMatrix) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let mut ort = vec![0.0; n];
    for m in 1..n - 1 {
        let mut scale = 0.0;
        for i in m..n {
            scale += h[(i, m - 1)].abs();
        }
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..n).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        // Apply the similarity transform H <- (I - u u^T / hh) H (I - u u^T / hh).
        for j in m..n {
            let mut f = 0.0;
            for i in (m..n).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= hh;
            for i in m..n {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..n {
            let mut f = 0.0;
            for j in (m..n).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= hh;
            for j in m..n {
                h[(i, j)] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[(m, m - 1)] = scale * g;
        for i in m + 1..n {
            h[(i, m - 1)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix; returns the
/// eigenvalues as (re, im) pairs. Follows the EISPACK/Jama `hqr` scheme
/// with the classic exceptional shifts at 10 and 30 stalled sweeps.
fn hessenberg_eigenvalues(
    h: &mut DenseMatrix,
    max_iters: usize,
) -> Result<Vec<(f64, f64)>, LinalgError> {
    let nn = h.rows();
    let eps = 2.0_f64.powi(-52);
    let mut values: Vec<(f64, f64)> = Vec::with_capacity(nn);
    if nn == 1 {
        values.push((h[(0, 0)], 0.0));
        return Ok(values);
    }

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }
    if norm == 0.0 {
        for _ in 0..nn {
            values.push((0.0, 0.0));
        }
        return Ok(values);
    }

    let mut n = nn - 1;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let mut total = 0usize;

    loop {
        // Look for a negligible subdiagonal element from the bottom up.
        let mut l = n;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One real root.
            let d = h[(n, n)] + exshift;
            h[(n, n)] = d;
            values.push((d, 0.0));
            if n == 0 {
                break;
            }
            n -= 1;
            iter = 0;
        } else if l + 1 == n {
            // A 2x2 block: real pair or complex conjugate pair.
            let w = h[(n, n - 1)] * h[(n - 1, n)];
            let p = (h[(n - 1, n - 1)] - h[(n, n)]) / 2.0;
            let q = p * p + w;
            let mut z = q.abs().sqrt();
            let x = h[(n, n)] + exshift;
            h[(n, n)] = x;
            h[(n - 1, n - 1)] += exshift;
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                let d1 = x + z;
                let d2 = if z != 0.0 { x - w / z } else { d1 };
                values.push((d1, 0.0));
                values.push((d2, 0.0));
            } else {
                values.push((x + p, z));
                values.push((x + p, -z));
            }
            if n >= 2 {
                n -= 2;
            } else {
                break;
            }
            iter = 0;
        } else {
            // No convergence yet: form a shift and sweep.
            let mut x = h[(n, n)];
            let mut y = h[(n - 1, n - 1)];
            let mut w = h[(n, n - 1)] * h[(n - 1, n)];

            if iter == 10 {
                exshift += x;
                for i in 0..=n {
                    h[(i, i)] -= x;
                }
                let s = h[(n, n - 1)].abs() + h[(n - 1, n - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                let mut s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=n {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }

            iter += 1;
            total += 1;
            if total > max_iters {
                return Err(LinalgError::NoConvergence { max_iters });
            }

            // Two consecutive small subdiagonals. p, q, r from the scan
            // seed the first reflector of the sweep below.
            let (mut p, mut q, mut r);
            let mut m = n - 2;
            loop {
                let z = h[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - rr - ss;
                r = h[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs()
                            * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=n {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }

            // Double QR sweep over rows l..=n, columns m..=n.
            for k in m..n {
                let notlast = k != n - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                let mut s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s == 0.0 {
                    continue;
                }
                if k != m {
                    h[(k, k - 1)] = -s * x;
                } else if l != m {
                    h[(k, k - 1)] = -h[(k, k - 1)];
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;

                for j in k..nn {
                    let mut pp = h[(k, j)] + q * h[(k + 1, j)];
                    if notlast {
                        pp += r * h[(k + 2, j)];
                        h[(k + 2, j)] -= pp * z;
                    }
                    h[(k, j)] -= pp * x;
                    h[(k + 1, j)] -= pp * y;
                }
                let upper = n.min(k + 3);
                for i in 0..=upper {
                    let mut pp = x * h[(i, k)] + y * h[(i, k + 1)];
                    if notlast {
                        pp += z * h[(i, k + 2)];
                        h[(i, k + 2)] -= pp * r;
                    }
                    h[(i, k)] -= pp;
                    h[(i, k + 1)] -= pp * q;
                }
            }
        }
    }
    Ok(values)
}

/// LU factorisation with partial pivoting. Returns the packed factors and
/// the pivot permutation, or `None` if the matrix is numerically singular.
pub(crate) fn lu_factor(a: &DenseMatrix) -> Option<(DenseMatrix, Vec<usize>)> {
    assert!(a.is_square());
    let n = a.rows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut pivot = col;
        let mut best = lu[(col, col)].abs();
        for row in col + 1..n {
            let v = lu[(row, col)].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best < f64::MIN_POSITIVE {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(pivot, j)];
                lu[(pivot, j)] = tmp;
            }
            perm.swap(col, pivot);
        }
        let d = lu[(col, col)];
        for row in col + 1..n {
            let factor = lu[(row, col)] / d;
            lu[(row, col)] = factor;
            for j in col + 1..n {
                let sub = factor * lu[(col, j)];
                lu[(row, j)] -= sub;
            }
        }
    }
    Some((lu, perm))
}

/// Solve `A x = b` given packed LU factors.
pub(crate) fn lu_solve(lu: &DenseMatrix, perm: &[usize], b: &[f64]) -> Vec<f64> {
    let n = lu.rows();
    let mut x: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
    for i in 1..n {
        for j in 0..i {
            x[i] -= lu[(i, j)] * x[j];
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            x[i] -= lu[(i, j)] * x[j];
        }
        x[i] /= lu[(i, i)];
    }
    x
}

/// Matrix inverse via LU; `None` if numerically singular.
pub fn invert(a: &DenseMatrix) -> Option<DenseMatrix> {
    let n = a.rows();
    let (lu, perm) = lu_factor(a)?;
    let mut inv = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for col in 0..n {
        e[col] = 1.0;
        let x = lu_solve(&lu, &perm, &e);
        e[col] = 0.0;
        for row in 0..n {
            inv[(row, col)] = x[row];
        }
    }
    Some(inv)
}

/// Shifted inverse iteration for a real eigenvalue estimate. Returns a
/// unit column or `None` if no well-behaved vector emerges.
fn inverse_iteration(a: &DenseMatrix, lambda: f64) -> Option<DenseMatrix> {
    let n = a.rows();
    let scale = a.max_abs().max(1.0);
    let mut rng = Xoshiro256StarStar::seed_from_u64(0x5eed_1e55_u64);
    let mut v: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= nrm;
    }
    // Progressively stronger shifts if the shifted matrix is singular.
    for attempt in 0..4 {
        let shift = lambda + scale * 1e-11 * 10.0_f64.powi(attempt);
        let mut b = a.clone();
        for i in 0..n {
            b[(i, i)] -= shift;
        }
        let Some((lu, perm)) = lu_factor(&b) else {
            continue;
        };
        let mut w = v.clone();
        for _ in 0..3 {
            let y = lu_solve(&lu, &perm, &w);
            let ny = y.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !ny.is_finite() || ny == 0.0 {
                break;
            }
            w = y.into_iter().map(|x| x / ny).collect();
        }
        if w.iter().all(|x| x.is_finite()) {
            return Some(DenseMatrix::column_vector(&w));
        }
    }
    None
}
