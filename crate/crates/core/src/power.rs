//! Power iteration and its Kronecker factorisation.
//!
//! The iterate is renormalised to unit Euclidean norm every step. The
//! reported eigenvector fixes its sign by making the largest-magnitude
//! entry positive; the per-step sign factor relating the raw iterate to
//! that fixed direction is tracked in `beta_signs` rather than eliminated,
//! so a negative dominant eigenvalue shows up as an alternating sign
//! sequence.

use crate::eigen::{dense_eigenvalues, normalize_sign, EigenPair};
use crate::matrix::{DenseMatrix, LinalgError};

/// Iterates below this norm are treated as a collapse to numerical zero.
const COLLAPSE_NORM: f64 = 1e-290;

/// Window length and decay factor for stagnation detection: if the
/// successive-direction residual fails to drop by a factor of 0.999 over a
/// 50-iteration window, the spectrum is flagged as non-dominant.
const STAGNATION_WINDOW: usize = 50;
const STAGNATION_FACTOR: f64 = 0.999;

/// Outcome of a power iteration run.
#[derive(Debug, Clone)]
pub struct PowerIterationResult {
    /// Dominant eigenpair; eigenvalue is the Rayleigh quotient of the
    /// final iterate, eigenvector the sign-fixed final direction.
    pub dominant: EigenPair,
    /// `residual_norms[k] = || z_k - beta_k * v1_hat ||`, the distance of
    /// the k-th normalised iterate to the converged direction.
    pub residual_norms: Vec<f64>,
    /// Sign factor `beta_k / |beta_k|` per iteration.
    pub beta_signs: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// The loop iterates past `tol` by this factor on the successive-iterate
/// distance, so that the reported residuals (measured against the final
/// direction, which the successive distance under-estimates by roughly
/// `rho / (1 - rho)`) genuinely reach `tol`.
const INTERNAL_STOP_FACTOR: f64 = 5e-3;

/// Run power iteration on a square matrix from a nonzero start vector.
///
/// `residual_norms[k]` is the distance of the k-th normalised iterate to
/// the final converged direction (sign factor removed); `converged` holds
/// exactly when the last of these is at most `tol`. Internally the loop
/// runs a couple of orders past `tol` on the successive-iterate distance
/// and then polishes the direction with a few extra multiplications, so
/// the reported eigenpair passes its construction-time residual check.
pub fn power_iteration(
    s: &DenseMatrix,
    x0: &DenseMatrix,
    max_iters: usize,
    tol: f64,
) -> Result<PowerIterationResult, LinalgError> {
    assert!(s.is_square(), "power_iteration needs a square matrix");
    assert_eq!(x0.cols(), 1, "start must be a column vector");
    assert_eq!(x0.rows(), s.rows(), "start length must match the matrix");
    let start_norm = x0.frobenius_norm();
    assert!(start_norm > 0.0, "start vector must be nonzero");

    let mut z = x0.scale(1.0 / start_norm);
    let mut iterates: Vec<DenseMatrix> = Vec::new();
    let mut succ_resid: Vec<f64> = Vec::new();
    let mut settled = false;

    for k in 0..max_iters {
        let y = s.matmul(&z);
        let ny = y.frobenius_norm();
        if !ny.is_finite() || ny < COLLAPSE_NORM {
            return Err(LinalgError::ZeroComponent { iterations: k + 1 });
        }
        let z_next = y.scale(1.0 / ny);
        let align = if z_next.dot(&z) >= 0.0 { 1.0 } else { -1.0 };
        let resid = z_next.sub(&z.scale(align)).frobenius_norm();
        z = z_next;
        iterates.push(z.clone());
        succ_resid.push(resid);

        if resid <= tol * INTERNAL_STOP_FACTOR {
            settled = true;
            break;
        }
        if succ_resid.len() > STAGNATION_WINDOW {
            let before = succ_resid[succ_resid.len() - 1 - STAGNATION_WINDOW];
            if resid > STAGNATION_FACTOR * before {
                return Err(LinalgError::NonDominantSpectrum {
                    detail: format!(
                        "residual {resid:.3e} did not decay over {STAGNATION_WINDOW} iterations"
                    ),
                });
            }
        }
    }

    let iterations = iterates.len();

    // Polish: a few extra multiplications sharpen the reference direction.
    let mut v = z.clone();
    if settled {
        for _ in 0..8 {
            let y = s.matmul(&v);
            let ny = y.frobenius_norm();
            if !ny.is_finite() || ny < COLLAPSE_NORM {
                break;
            }
            v = y.scale(1.0 / ny);
        }
    }
    let v_hat = normalize_sign(&v);
    let rayleigh = v_hat.dot(&s.matmul(&v_hat));

    let mut residual_norms = Vec::with_capacity(iterations);
    let mut beta_signs = Vec::with_capacity(iterations);
    for zk in &iterates {
        let sign = if zk.dot(&v_hat) >= 0.0 { 1.0 } else { -1.0 };
        beta_signs.push(sign);
        residual_norms.push(zk.sub(&v_hat.scale(sign)).frobenius_norm());
    }
    let converged = residual_norms.last().is_some_and(|&r| r <= tol);

    let dominant = if converged && settled {
        EigenPair::validated(s, rayleigh, &v_hat)?
    } else {
        EigenPair {
            value_re: rayleigh,
            value_im: 0.0,
            vector: Some(v_hat),
        }
    };

    Ok(PowerIterationResult {
        dominant,
        residual_norms,
        beta_signs,
        iterations,
        converged,
    })
}

/// Largest singular value of a matrix, computed as the square root of the
/// dominant eigenvalue of `M^T M` via power iteration.
pub fn spectral_norm(m: &DenseMatrix, max_iters: usize, tol: f64) -> Result<f64, LinalgError> {
    let gram = m.transpose().matmul(m);
    let n = gram.rows();
    if n == 0 {
        return Ok(0.0);
    }
    // A deterministic dense start vector; M^T M is PSD so any start with a
    // component along the top eigenvector works.
    let x0 = DenseMatrix::from_fn(n, 1, |i, _| 1.0 + (i as f64 + 1.0).sqrt());
    let result = power_iteration(&gram, &x0, max_iters, tol)?;
    Ok(result.dominant.value_re.max(0.0).sqrt())
}

/// Dominant eigenpairs of the two Kronecker factors of `kron(s_w, s_a)`,
/// plus the product eigenvalue `lambda1(A) * lambda1(W)`.
///
/// Both factors must have a real, simple dominant eigenvalue (checked via
/// the dense oracle). The returned pair of vectors certifies that
/// `kron(v1_w, v1_a)` is an eigenvector of `kron(s_w, s_a)` with the
/// product eigenvalue, with residual at most 1e-8.
pub fn dominant_left_right_factors(
    s_w: &DenseMatrix,
    s_a: &DenseMatrix,
) -> Result<(EigenPair, EigenPair, f64), LinalgError> {
    let w_pair = dominant_real_simple(s_w, "left factor")?;
    let a_pair = dominant_real_simple(s_a, "right factor")?;
    let product = a_pair.value_re * w_pair.value_re;

    // Residual of the Kronecker vector, computed without materialising
    // kron(s_w, s_a): kron(W v_w, A v_a) - product * kron(v_w, v_a).
    let vw = w_pair.vector.as_ref().expect("validated pair has vector");
    let va = a_pair.vector.as_ref().expect("validated pair has vector");
    let big = s_w.matmul(vw).kron(&s_a.matmul(va))?;
    let small = vw.kron(va)?.scale(product);
    let residual = big.sub(&small).frobenius_norm();
    let bound = 1e-8 * (1.0 + product.abs());
    if residual > bound {
        return Err(LinalgError::ResidualTooLarge { residual, bound });
    }
    Ok((w_pair, a_pair, product))
}

/// Dominant eigenpair of a matrix, requiring it to be real and simple
/// with a strict magnitude gap.
fn dominant_real_simple(m: &DenseMatrix, label: &str) -> Result<EigenPair, LinalgError> {
    let pairs = dense_eigenvalues(m, 200 * m.rows().max(1))?;
    let first = pairs
        .first()
        .ok_or_else(|| LinalgError::NonDominantSpectrum {
            detail: format!("{label} is empty"),
        })?;
    if !first.is_real() {
        return Err(LinalgError::NonDominantSpectrum {
            detail: format!("{label} has a complex dominant eigenvalue"),
        });
    }
    if pairs.len() > 1 {
        let second = &pairs[1];
        if second.magnitude() >= first.magnitude() * (1.0 - 1e-10) {
            return Err(LinalgError::NonDominantSpectrum {
                detail: format!(
                    "{label}: |lambda2|/|lambda1| = {:.12}",
                    second.magnitude() / first.magnitude()
                ),
            });
        }
    }
    if first.vector.is_none() {
        return Err(LinalgError::NonDominantSpectrum {
            detail: format!("{label}: no certified eigenvector for lambda1"),
        });
    }
    Ok(first.clone())
}
