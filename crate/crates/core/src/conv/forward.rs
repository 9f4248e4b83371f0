//! Per-method forward passes and their shared pieces.

use crate::graph::{structure_matrix, Graph, StructureKind};
use crate::matrix::DenseMatrix;

use super::{LayerParams, MethodId, RunState};

pub(crate) fn relu_inplace(m: &mut DenseMatrix) {
    for e in m.entries_mut() {
        if *e < 0.0 {
            *e = 0.0;
        }
    }
}

fn relu(mut m: DenseMatrix) -> DenseMatrix {
    relu_inplace(&mut m);
    m
}

/// Add a 1 x d bias row to every row of x.
fn add_bias(x: &mut DenseMatrix, bias: &DenseMatrix) {
    let d = x.cols();
    debug_assert_eq!(bias.cols(), d);
    for i in 0..x.rows() {
        for j in 0..d {
            x[(i, j)] += bias[(0, j)];
        }
    }
}

/// GCN-family aggregation matrix, honoring the self-loop switch.
fn gcn_aggregation(graph: &Graph, self_loops: bool) -> DenseMatrix {
    let kind = if self_loops {
        StructureKind::SelfLoopSymNormAdjacency
    } else {
        StructureKind::SymNormAdjacency
    };
    structure_matrix(graph, kind).into_matrix()
}

/// Softmax in place over a slice of logits.
fn softmax(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

/// The basic GCN layer used directly and as a building block:
/// `ReLU(A~ X W + b)`.
fn gcn_layer(x: &DenseMatrix, graph: &Graph, params: &LayerParams) -> DenseMatrix {
    let agg = gcn_aggregation(graph, params.method.hyper.gcn_self_loops);
    let mut y = agg.matmul(x).matmul(params.tensor("w"));
    add_bias(&mut y, params.tensor("b"));
    relu(y)
}

fn gat_forward(x: &DenseMatrix, graph: &Graph, params: &LayerParams) -> DenseMatrix {
    let d = params.method.dim;
    let slope = params.method.hyper.leaky_relu_slope;
    let t = x.matmul(params.tensor("w"));
    let att = params.tensor("att");
    // a^T [t_i || t_j] split into the two halves of the attention vector.
    let score_self: Vec<f64> = (0..t.rows())
        .map(|i| (0..d).map(|f| att[(f, 0)] * t[(i, f)]).sum())
        .collect();
    let score_nbr: Vec<f64> = (0..t.rows())
        .map(|j| (0..d).map(|f| att[(d + f, 0)] * t[(j, f)]).sum())
        .collect();
    let leaky = |v: f64| if v > 0.0 { v } else { slope * v };

    let nbrs = graph.in_neighbors();
    let mut out = DenseMatrix::zeros(x.rows(), d);
    for i in 0..x.rows() {
        let mut targets: Vec<usize> = nbrs[i].clone();
        targets.push(i);
        let mut scores: Vec<f64> = targets
            .iter()
            .map(|&j| leaky(score_self[i] + score_nbr[j]))
            .collect();
        softmax(&mut scores);
        for (&j, &alpha) in targets.iter().zip(&scores) {
            for f in 0..d {
                out[(i, f)] += alpha * t[(j, f)];
            }
        }
    }
    add_bias(&mut out, params.tensor("b"));
    relu(out)
}

fn sage_forward(x: &DenseMatrix, graph: &Graph, params: &LayerParams) -> DenseMatrix {
    let mean = structure_matrix(graph, StructureKind::RowStochastic).into_matrix();
    let mut y = x.matmul(params.tensor("w_root"));
    y = y.add(&mean.matmul(x).matmul(params.tensor("w_nbr")));
    add_bias(&mut y, params.tensor("b"));
    relu(y)
}

fn ggcn_forward(x: &DenseMatrix, graph: &Graph, params: &LayerParams) -> DenseMatrix {
    let d = params.method.dim;
    let agg = gcn_aggregation(graph, params.method.hyper.gcn_self_loops);
    let mut t = x.matmul(params.tensor("w"));
    add_bias(&mut t, params.tensor("b"));
    let row_norms: Vec<f64> = (0..t.rows())
        .map(|i| (0..d).map(|f| t[(i, f)] * t[(i, f)]).sum::<f64>().sqrt())
        .collect();
    let n = x.rows();
    let mut out = DenseMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..n {
            let a = agg[(i, j)];
            if a == 0.0 {
                continue;
            }
            // Signed weight: cosine similarity of the transformed features.
            let cos = if row_norms[i] > 0.0 && row_norms[j] > 0.0 {
                let dot: f64 = (0..d).map(|f| t[(i, f)] * t[(j, f)]).sum();
                dot / (row_norms[i] * row_norms[j])
            } else {
                0.0
            };
            let w = a * cos;
            for f in 0..d {
                out[(i, f)] += w * t[(j, f)];
            }
        }
    }
    relu(out)
}

fn gcnii_forward(state: &RunState, graph: &Graph, params: &LayerParams) -> DenseMatrix {
    let alpha = params.method.hyper.gcnii_alpha;
    let beta = params.method.hyper.gcnii_beta;
    let agg = gcn_aggregation(graph, params.method.hyper.gcn_self_loops);
    let mixed = agg
        .matmul(&state.x)
        .scale(1.0 - alpha)
        .add(&state.x0.scale(alpha));
    // mixed * ((1 - beta) I + beta W)
    let y = mixed
        .scale(1.0 - beta)
        .add(&mixed.matmul(params.tensor("w")).scale(beta));
    relu(y)
}

fn pprgnn_forward(state: &RunState, graph: &Graph, params: &LayerParams) -> DenseMatrix {
    let gamma = 1.0 / params.layer_index as f64;
    let agg = gcn_aggregation(graph, params.method.hyper.gcn_self_loops);
    let y = agg
        .matmul(&state.x)
        .matmul(params.tensor("w"))
        .scale(gamma)
        .add(&state.x0);
    relu(y)
}

fn gated_forward(x: &DenseMatrix, graph: &Graph, params: &LayerParams) -> DenseMatrix {
    let agg = gcn_aggregation(graph, params.method.hyper.gcn_self_loops);
    let ax = agg.matmul(x);
    let mut z = ax
        .matmul(params.tensor("w_z"))
        .add(&x.matmul(params.tensor("u_z")));
    add_bias(&mut z, params.tensor("b_z"));
    for e in z.entries_mut() {
        *e = 1.0 / (1.0 + (-*e).exp());
    }
    let zx = DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| z[(i, j)] * x[(i, j)]);
    let mut h = ax
        .matmul(params.tensor("w_h"))
        .add(&zx.matmul(params.tensor("u_h")));
    add_bias(&mut h, params.tensor("b_h"));
    for e in h.entries_mut() {
        *e = e.tanh();
    }
    let y = DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| {
        (1.0 - z[(i, j)]) * x[(i, j)] + z[(i, j)] * h[(i, j)]
    });
    relu(y)
}

/// PairNorm: centre the columns, then rescale so the average squared row
/// norm equals `scale^2`.
fn pairnorm(x: DenseMatrix, scale: f64) -> DenseMatrix {
    let (n, d) = (x.rows(), x.cols());
    let mut centered = x;
    for j in 0..d {
        let mean: f64 = (0..n).map(|i| centered[(i, j)]).sum::<f64>() / n as f64;
        for i in 0..n {
            centered[(i, j)] -= mean;
        }
    }
    let norm = centered.frobenius_norm();
    if norm == 0.0 {
        return centered;
    }
    centered.scale(scale * (n as f64).sqrt() / norm)
}

/// BatchNorm with batch statistics only: per-column standardisation.
fn batchnorm(x: DenseMatrix, epsilon: f64) -> DenseMatrix {
    let (n, d) = (x.rows(), x.cols());
    let mut out = x;
    for j in 0..d {
        let mean: f64 = (0..n).map(|i| out[(i, j)]).sum::<f64>() / n as f64;
        let var: f64 = (0..n)
            .map(|i| (out[(i, j)] - mean) * (out[(i, j)] - mean))
            .sum::<f64>()
            / n as f64;
        let inv = 1.0 / (var + epsilon).sqrt();
        for i in 0..n {
            out[(i, j)] = (out[(i, j)] - mean) * inv;
        }
    }
    out
}

fn gin_forward(x: &DenseMatrix, graph: &Graph, params: &LayerParams, blocks: usize) -> DenseMatrix {
    let eps = params.method.hyper.gin_epsilon;
    let a = graph.adjacency();
    let mut h = a.matmul(x).add(&x.scale(1.0 + eps));
    for block in 1..=blocks {
        let (w, b) = match block {
            1 => ("w1", "b1"),
            2 => ("w2", "b2"),
            3 => ("w3", "b3"),
            _ => unreachable!(),
        };
        h = h.matmul(params.tensor(w));
        add_bias(&mut h, params.tensor(b));
        relu_inplace(&mut h);
    }
    h
}

fn unimp_forward(x: &DenseMatrix, graph: &Graph, params: &LayerParams) -> DenseMatrix {
    let d = params.method.dim;
    let inv_sqrt_d = 1.0 / (d as f64).sqrt();
    let q = x.matmul(params.tensor("w_q"));
    let k = x.matmul(params.tensor("w_k"));
    let v = x.matmul(params.tensor("w_v"));
    let nbrs = graph.in_neighbors();
    let mut h = DenseMatrix::zeros(x.rows(), d);
    for i in 0..x.rows() {
        let mut targets: Vec<usize> = nbrs[i].clone();
        targets.push(i);
        let mut scores: Vec<f64> = targets
            .iter()
            .map(|&j| {
                let dot: f64 = (0..d).map(|f| q[(i, f)] * k[(j, f)]).sum();
                dot * inv_sqrt_d
            })
            .collect();
        softmax(&mut scores);
        for (&j, &alpha) in targets.iter().zip(&scores) {
            for f in 0..d {
                h[(i, f)] += alpha * v[(j, f)];
            }
        }
    }
    let mut y = h.matmul(params.tensor("w_o"));
    add_bias(&mut y, params.tensor("b"));
    relu(y)
}

/// Per-row layer normalisation without learned affine parameters.
fn layernorm(x: DenseMatrix, epsilon: f64) -> DenseMatrix {
    let (n, d) = (x.rows(), x.cols());
    let mut out = x;
    for i in 0..n {
        let mean: f64 = (0..d).map(|j| out[(i, j)]).sum::<f64>() / d as f64;
        let var: f64 = (0..d)
            .map(|j| (out[(i, j)] - mean) * (out[(i, j)] - mean))
            .sum::<f64>()
            / d as f64;
        let inv = 1.0 / (var + epsilon).sqrt();
        for j in 0..d {
            out[(i, j)] = (out[(i, j)] - mean) * inv;
        }
    }
    out
}

fn gps_forward(x: &DenseMatrix, graph: &Graph, params: &LayerParams) -> DenseMatrix {
    let d = params.method.dim;
    let inv_sqrt_d = 1.0 / (d as f64).sqrt();
    // Edge-restricted message passing half.
    let agg = gcn_aggregation(graph, params.method.hyper.gcn_self_loops);
    let m = agg.matmul(x).matmul(params.tensor("w_m"));
    // Dense single-head self-attention over all nodes.
    let q = x.matmul(params.tensor("w_q"));
    let k = x.matmul(params.tensor("w_k"));
    let v = x.matmul(params.tensor("w_v"));
    let n = x.rows();
    let mut t = DenseMatrix::zeros(n, d);
    let mut scores = vec![0.0; n];
    for i in 0..n {
        for (j, s) in scores.iter_mut().enumerate() {
            let dot: f64 = (0..d).map(|f| q[(i, f)] * k[(j, f)]).sum();
            *s = dot * inv_sqrt_d;
        }
        softmax(&mut scores);
        for (j, &alpha) in scores.iter().enumerate() {
            for f in 0..d {
                t[(i, f)] += alpha * v[(j, f)];
            }
        }
    }
    let s = layernorm(m.add(&t), params.method.hyper.layernorm_epsilon);
    // Two-layer MLP with residual.
    let mut hidden = s.matmul(params.tensor("w_1"));
    add_bias(&mut hidden, params.tensor("b_1"));
    relu_inplace(&mut hidden);
    let mut mlp = hidden.matmul(params.tensor("w_2"));
    add_bias(&mut mlp, params.tensor("b_2"));
    relu(s.add(&mlp))
}

/// Dispatch one layer of the configured method (without the norm check,
/// which the caller applies).
pub(super) fn forward(state: &RunState, graph: &Graph, params: &LayerParams) -> DenseMatrix {
    let x = &state.x;
    match params.method.id {
        MethodId::Gcn => gcn_layer(x, graph, params),
        MethodId::Gat => gat_forward(x, graph, params),
        MethodId::ResGcn => x.add(&gcn_layer(x, graph, params)),
        MethodId::Sage => sage_forward(x, graph, params),
        MethodId::Ggcn => ggcn_forward(x, graph, params),
        MethodId::Gcnii | MethodId::Gcnii2x => gcnii_forward(state, graph, params),
        MethodId::PprGnn => pprgnn_forward(state, graph, params),
        MethodId::GatedGnn => gated_forward(x, graph, params),
        MethodId::GcnPairNorm => pairnorm(
            gcn_layer(x, graph, params),
            params.method.hyper.pairnorm_scale,
        ),
        MethodId::GcnBatchNorm => batchnorm(
            gcn_layer(x, graph, params),
            params.method.hyper.batchnorm_epsilon,
        ),
        MethodId::Gin2 => gin_forward(x, graph, params, 2),
        MethodId::Gin3 => gin_forward(x, graph, params, 3),
        MethodId::UniMp => unimp_forward(x, graph, params),
        MethodId::Gps => gps_forward(x, graph, params),
    }
}
