//! Smoothness and rank-collapse metrics on state matrices.
//!
//! All norms here are Frobenius; for a vectorised state that coincides
//! with the Euclidean norm, which keeps the vector-form and matrix-form
//! statements of the theory consistent.

use thiserror::Error;

use crate::graph::{StructureKind, StructureMatrix};
use crate::matrix::DenseMatrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("state has zero Frobenius norm")]
    ZeroState,
}

/// Trace-form Dirichlet energy `tr(X^T L X)`.
///
/// `lap` must be one of the two Laplacian kinds; for the symmetric kind
/// this matches the edge-sum `1/2 sum ||x_i/sqrt(d_i) - x_j/sqrt(d_j)||^2`,
/// for the unnormalized kind the analogous unweighted sum.
pub fn dirichlet_energy(x: &DenseMatrix, lap: &StructureMatrix) -> f64 {
    assert!(
        matches!(
            lap.kind(),
            StructureKind::UnnormalizedLaplacian | StructureKind::SymNormLaplacian
        ),
        "dirichlet_energy expects a Laplacian, got {:?}",
        lap.kind()
    );
    assert_eq!(x.rows(), lap.matrix().rows(), "state/Laplacian size mismatch");
    let lx = lap.matrix().matmul(x);
    x.dot(&lx)
}

/// Dirichlet energy of the Frobenius-normalised state `X / ||X||`.
pub fn normalized_dirichlet_energy(
    x: &DenseMatrix,
    lap: &StructureMatrix,
) -> Result<f64, MetricError> {
    let norm = x.frobenius_norm();
    if norm == 0.0 {
        return Err(MetricError::ZeroState);
    }
    Ok(dirichlet_energy(x, lap) / (norm * norm))
}

/// Rank-one distance: Frobenius distance between the normalised state and
/// the normalised outer product of its largest-norm column and largest-norm
/// row, with the column sign corrected so the product aligns with the state.
///
/// Ties in the row/column argmax break toward the lowest index. If the
/// pivot entry `v[j]` is exactly zero the sign falls back to the alignment
/// `u^T X v`; if that is also zero the column is used as-is. Both fallbacks
/// are deterministic and only reachable for rank-deficient states.
pub fn rank_one_distance(x: &DenseMatrix) -> Result<f64, MetricError> {
    let norm = x.frobenius_norm();
    if norm == 0.0 {
        return Err(MetricError::ZeroState);
    }
    let (rows, cols) = (x.rows(), x.cols());

    let mut best_row = 0usize;
    let mut best_row_sq = -1.0;
    for i in 0..rows {
        let sq: f64 = (0..cols).map(|j| x[(i, j)] * x[(i, j)]).sum();
        if sq > best_row_sq {
            best_row_sq = sq;
            best_row = i;
        }
    }
    let v: Vec<f64> = x.row(best_row);

    let mut best_col = 0usize;
    let mut best_col_sq = -1.0;
    for j in 0..cols {
        let sq: f64 = (0..rows).map(|i| x[(i, j)] * x[(i, j)]).sum();
        if sq > best_col_sq {
            best_col_sq = sq;
            best_col = j;
        }
    }
    let u: Vec<f64> = x.column(best_col);

    let pivot = v[best_col];
    let sign = if pivot > 0.0 {
        1.0
    } else if pivot < 0.0 {
        -1.0
    } else {
        // Degenerate pivot: align u v^T with X via <u v^T, X> = u^T X v.
        let xv: Vec<f64> = (0..rows)
            .map(|i| (0..cols).map(|j| x[(i, j)] * v[j]).sum())
            .collect();
        let align: f64 = u.iter().zip(&xv).map(|(a, b)| a * b).sum();
        if align < 0.0 {
            -1.0
        } else {
            1.0
        }
    };

    // ||u v^T||_F = ||u|| ||v||; both are nonzero for a nonzero state.
    let outer_norm = best_col_sq.sqrt() * best_row_sq.sqrt();
    let mut dist_sq = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let d = x[(i, j)] / norm - sign * u[i] * v[j] / outer_norm;
            dist_sq += d * d;
        }
    }
    Ok(dist_sq.sqrt())
}

/// Per-layer record of a depth run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    /// 1-based layer index.
    pub layer: usize,
    /// Frobenius norm of the raw state.
    pub state_norm: f64,
    /// Normalised Dirichlet energy with the unnormalized Laplacian.
    pub energy_unnorm: f64,
    /// Normalised Dirichlet energy with the symmetric Laplacian.
    pub energy_sym: f64,
    /// Rank-one distance of the state.
    pub rod: f64,
    pub status: RecordStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordStatus {
    Ok,
    Overflow,
    Underflow,
}

impl RecordStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordStatus::Ok => "OK",
            RecordStatus::Overflow => "OVERFLOW",
            RecordStatus::Underflow => "UNDERFLOW",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "OK" => Some(RecordStatus::Ok),
            "OVERFLOW" => Some(RecordStatus::Overflow),
            "UNDERFLOW" => Some(RecordStatus::Underflow),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Collapsed,
    NotCollapsed,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Collapsed => "COLLAPSED",
            Verdict::NotCollapsed => "NOT_COLLAPSED",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Default collapse threshold for verdicts.
pub const DEFAULT_COLLAPSE_THRESHOLD: f64 = 1e-2;
/// Default trailing-window length for verdicts.
pub const DEFAULT_COLLAPSE_WINDOW: usize = 8;

/// Classify a trace: COLLAPSED if the mean ROD over the last `window`
/// OK records is at most `threshold`, NOT_COLLAPSED if at least ten times
/// the threshold, otherwise (or with fewer than `window` OK records)
/// INCONCLUSIVE.
pub fn classify_collapse(trace: &[MetricRecord], threshold: f64, window: usize) -> Verdict {
    assert!(!trace.is_empty(), "classify_collapse needs a nonempty trace");
    assert!(window > 0);
    let ok_rods: Vec<f64> = trace
        .iter()
        .filter(|r| r.status == RecordStatus::Ok)
        .map(|r| r.rod)
        .collect();
    if ok_rods.len() < window {
        return Verdict::Inconclusive;
    }
    let tail = &ok_rods[ok_rods.len() - window..];
    let mean = tail.iter().sum::<f64>() / window as f64;
    if mean <= threshold {
        Verdict::Collapsed
    } else if mean >= 10.0 * threshold {
        Verdict::NotCollapsed
    } else {
        Verdict::Inconclusive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{load_edge_list, structure_matrix, StructureKind};
    use crate::rng::Xoshiro256StarStar;

    fn two_node() -> crate::graph::Graph {
        load_edge_list("0 1").unwrap()
    }

    #[test]
    fn constant_columns_have_zero_unnormalized_energy() {
        let g = two_node();
        let lap = structure_matrix(&g, StructureKind::UnnormalizedLaplacian);
        let x = DenseMatrix::from_row_major(2, 2, &[3.0, -1.0, 3.0, -1.0]);
        assert!(dirichlet_energy(&x, &lap).abs() < 1e-12);
    }

    #[test]
    fn sqrt_degree_direction_has_zero_sym_energy() {
        let g = crate::graph::karate_club();
        let lap = structure_matrix(&g, StructureKind::SymNormLaplacian);
        let x = DenseMatrix::from_fn(g.node_count(), 1, |i, _| (g.degrees()[i] as f64).sqrt());
        assert!(dirichlet_energy(&x, &lap).abs() < 1e-10);
    }

    #[test]
    fn two_node_edge_energy_is_four() {
        // X = (1, -1)^T on a single edge: trace form gives 4.
        let g = two_node();
        let lap = structure_matrix(&g, StructureKind::UnnormalizedLaplacian);
        let x = DenseMatrix::column_vector(&[1.0, -1.0]);
        assert!((dirichlet_energy(&x, &lap) - 4.0).abs() < 1e-12);
        // Normalised: ||X||^2 = 2, so the energy halves.
        let e = normalized_dirichlet_energy(&x, &lap).unwrap();
        assert!((e - 2.0).abs() < 1e-12);
    }

    #[test]
    fn trace_form_matches_edge_sum_form() {
        // Independent oracle: the edge-sum forms of the energy.
        let g = load_edge_list("0 1\n1 2\n2 3\n3 0\n0 2").unwrap();
        let mut rng = Xoshiro256StarStar::seed_from_u64(11);
        let x = DenseMatrix::from_fn(4, 3, |_, _| rng.next_normal());

        let lap_un = structure_matrix(&g, StructureKind::UnnormalizedLaplacian);
        let mut edge_sum = 0.0;
        for &(src, dst) in g.edges() {
            for c in 0..x.cols() {
                let d = x[(src, c)] - x[(dst, c)];
                edge_sum += d * d;
            }
        }
        edge_sum *= 0.5;
        assert!((dirichlet_energy(&x, &lap_un) - edge_sum).abs() < 1e-10);

        let lap_sym = structure_matrix(&g, StructureKind::SymNormLaplacian);
        let mut edge_sum_sym = 0.0;
        for &(src, dst) in g.edges() {
            let ds = (g.degrees()[src] as f64).sqrt();
            let dd = (g.degrees()[dst] as f64).sqrt();
            for c in 0..x.cols() {
                let d = x[(src, c)] / ds - x[(dst, c)] / dd;
                edge_sum_sym += d * d;
            }
        }
        edge_sum_sym *= 0.5;
        assert!((dirichlet_energy(&x, &lap_sym) - edge_sum_sym).abs() < 1e-10);
    }

    #[test]
    fn normalized_energy_is_scale_invariant() {
        let g = two_node();
        let lap = structure_matrix(&g, StructureKind::UnnormalizedLaplacian);
        let x = DenseMatrix::from_row_major(2, 2, &[1.0, -2.0, 0.5, 3.0]);
        let e1 = normalized_dirichlet_energy(&x, &lap).unwrap();
        let e2 = normalized_dirichlet_energy(&x.scale(37.5), &lap).unwrap();
        assert!((e1 - e2).abs() < 1e-12);
    }

    #[test]
    fn zero_state_is_an_error() {
        let g = two_node();
        let lap = structure_matrix(&g, StructureKind::UnnormalizedLaplacian);
        let x = DenseMatrix::zeros(2, 2);
        assert_eq!(
            normalized_dirichlet_energy(&x, &lap),
            Err(MetricError::ZeroState)
        );
        assert_eq!(rank_one_distance(&x), Err(MetricError::ZeroState));
    }

    #[test]
    fn outer_product_has_zero_rod() {
        let a = [1.0, 2.0, 0.5];
        let b = [0.3, 1.7];
        let x = DenseMatrix::from_fn(3, 2, |i, j| a[i] * b[j]);
        assert!(rank_one_distance(&x).unwrap() < 1e-12);
    }

    #[test]
    fn identity_rod_matches_hand_computation() {
        // Ties break to the first row/column: the approximation is E_11,
        // so ROD = || I/sqrt(2) - E_11 ||_F.
        let x = DenseMatrix::identity(2);
        let expect = ((1.0 / 2.0_f64.sqrt() - 1.0).powi(2) + 0.5).sqrt();
        let got = rank_one_distance(&x).unwrap();
        assert!((got - expect).abs() < 1e-12, "got {got}, expect {expect}");
        assert!((got - 0.7653668647301795).abs() < 1e-12);
    }

    #[test]
    fn rod_is_scale_invariant() {
        let x = DenseMatrix::from_row_major(2, 3, &[1.0, -2.0, 3.0, 0.5, 4.0, -1.0]);
        let r1 = rank_one_distance(&x).unwrap();
        let r2 = rank_one_distance(&x.scale(5.0)).unwrap();
        assert!((r1 - r2).abs() < 1e-12);
    }

    #[test]
    fn rod_sign_correction_handles_negative_pivot() {
        // Rank-one with a negative dominant column: still distance zero.
        let a = [1.0, 2.0, 0.5];
        let b = [-1.7, 0.3];
        let x = DenseMatrix::from_fn(3, 2, |i, j| a[i] * b[j]);
        assert!(rank_one_distance(&x).unwrap() < 1e-12);
    }

    #[test]
    fn degenerate_pivot_falls_back_deterministically() {
        // Max-norm row is (0, 2) while the max-norm column is column 0,
        // so the pivot v[j] is exactly zero, and the alignment u^T X v is
        // also zero: both fallback branches fire. The state and the outer
        // product are then Frobenius-orthogonal unit matrices, so the
        // distance is exactly sqrt(2).
        let x = DenseMatrix::from_row_major(3, 2, &[0.0, 2.0, 1.9, 0.0, 1.9, 0.0]);
        let r1 = rank_one_distance(&x).unwrap();
        let r2 = rank_one_distance(&x).unwrap();
        assert_eq!(r1, r2);
        assert!((r1 - 2.0_f64.sqrt()).abs() < 1e-12, "got {r1}");
    }

    fn record(layer: usize, rod: f64, status: RecordStatus) -> MetricRecord {
        MetricRecord {
            layer,
            state_norm: 1.0,
            energy_unnorm: 0.0,
            energy_sym: 0.0,
            rod,
            status,
        }
    }

    #[test]
    fn tiny_final_rods_classify_as_collapsed() {
        let trace: Vec<MetricRecord> =
            (1..=20).map(|k| record(k, 1e-6, RecordStatus::Ok)).collect();
        assert_eq!(classify_collapse(&trace, 1e-2, 8), Verdict::Collapsed);
    }

    #[test]
    fn large_final_rods_classify_as_not_collapsed() {
        let trace: Vec<MetricRecord> =
            (1..=20).map(|k| record(k, 0.8, RecordStatus::Ok)).collect();
        assert_eq!(classify_collapse(&trace, 1e-2, 8), Verdict::NotCollapsed);
    }

    #[test]
    fn early_overflow_is_inconclusive() {
        let mut trace: Vec<MetricRecord> =
            (1..=2).map(|k| record(k, 0.5, RecordStatus::Ok)).collect();
        trace.push(record(3, f64::NAN, RecordStatus::Overflow));
        assert_eq!(classify_collapse(&trace, 1e-2, 8), Verdict::Inconclusive);
    }

    #[test]
    fn intermediate_mean_is_inconclusive() {
        let trace: Vec<MetricRecord> =
            (1..=20).map(|k| record(k, 0.05, RecordStatus::Ok)).collect();
        assert_eq!(classify_collapse(&trace, 1e-2, 8), Verdict::Inconclusive);
    }
}
