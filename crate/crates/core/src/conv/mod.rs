//! Forward-only, randomly initialised graph convolutions.
//!
//! Fifteen run configurations share one interface: build per-layer
//! parameters with [`init_params`], advance the state with [`apply_layer`].
//! No training, no gradients; every model is used exactly as initialised.
//!
//! Adopted per-method formulas (the published methods leave room; these are
//! the definitions this crate commits to):
//!
//! * `gcn`: `X <- ReLU(A~ X W + b)`. By default `A~ = D^{-1/2} A D^{-1/2}`;
//!   the self-loop variant `(D+I)^{-1/2}(A+I)(D+I)^{-1/2}` can be switched
//!   on via [`MethodHyper::gcn_self_loops`] (see that field's note).
//! * `gat`: single attention head, logits
//!   `LeakyReLU(a^T [W x_i || W x_j])` softmaxed over `N_i ∪ {i}`; the
//!   aggregation is row-stochastic by construction.
//! * `resgcn`: `X <- X + gcn_layer(X)`.
//! * `sage`: `X <- ReLU(X W_root + mean_{j in N_i}(x_j) W_nbr + b)`.
//! * `ggcn`: GCN-style aggregate with per-edge signed weights, the sign
//!   weight being the cosine similarity of the transformed features at the
//!   edge's endpoints (degree-scaling terms of the published method are
//!   omitted; sign weights are resampled from the features every layer).
//! * `gcnii`: `X <- ReLU(((1-a) A~ X + a X0)((1-b) I + b W))` with
//!   `a = 0.1` and `b = 1` (the published implementation's value when its
//!   depth-decay constants are left unset; see [`MethodHyper::gcnii_beta`]).
//! * `gcnii2x`: same draw as `gcnii` with every `W` entry doubled exactly.
//! * `pprgnn`: `X <- ReLU(g_k A~ X W + X0)` with the depth-decaying factor
//!   `g_k = 1/k` bounding the effective depth.
//! * `gatedgnn`: GRU-style gate `z = sigmoid(A~ X W_z + X U_z + b_z)`,
//!   `h~ = tanh(A~ X W_h + (z . X) U_h + b_h)`,
//!   `X <- (1-z) . X + z . h~`, then the shared ReLU.
//! * `gcn_pairnorm`: GCN layer, then centre columns and rescale to average
//!   row norm 1.
//! * `gcn_batchnorm`: GCN layer, then per-column standardisation with
//!   batch statistics, epsilon 1e-5, no running averages.
//! * `gin2` / `gin3`: `X <- MLP((1+eps) X + sum_{j in N_i} x_j)` with
//!   `eps = 0` and a 2- or 3-block `(Linear -> ReLU)` MLP of width d.
//! * `unimp`: single-head dot-product attention over `N_i ∪ {i}`
//!   (row-stochastic softmax), then linear + ReLU.
//! * `gps`: edge-restricted GCN-style message passing plus full dense
//!   single-head self-attention, summed, layer-normalised, then a 2-layer
//!   MLP with a residual connection and the shared ReLU.
//!
//! Initialisation mirrors the published implementations: graph-convolution
//! weights are Glorot uniform `U(+-sqrt(6/(fan_in+fan_out)))` with zero
//! biases, while plain linear layers (GIN/GPS MLPs, the gate matrices)
//! use `U(+-sqrt(1/fan_in))` for both weights and biases. The nonzero MLP
//! and gate biases matter: on trajectories whose norm decays, they are the
//! only source that keeps re-randomising the state, which is what keeps
//! `gin3` and `gatedgnn` away from rank collapse.

mod forward;

use thiserror::Error;

use crate::graph::Graph;
use crate::matrix::DenseMatrix;
use crate::rng::Xoshiro256StarStar;

/// State norms outside `[UNDERFLOW_NORM, OVERFLOW_NORM]` (or non-finite
/// states) truncate a run.
pub const OVERFLOW_NORM: f64 = 1e150;
pub const UNDERFLOW_NORM: f64 = 1e-150;

/// A layer application pushed the state out of the representable band.
#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum Instability {
    #[error("state norm {norm:e} exceeds {OVERFLOW_NORM:e} (or is non-finite)")]
    Overflow { norm: f64 },
    #[error("state norm {norm:e} fell below {UNDERFLOW_NORM:e}")]
    Underflow { norm: f64 },
}

/// The evaluated run configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodId {
    Gcn,
    Gat,
    ResGcn,
    Sage,
    Ggcn,
    Gcnii,
    Gcnii2x,
    PprGnn,
    GatedGnn,
    GcnPairNorm,
    GcnBatchNorm,
    Gin2,
    Gin3,
    UniMp,
    Gps,
}

impl MethodId {
    pub const ALL: [MethodId; 15] = [
        MethodId::Gcn,
        MethodId::Gat,
        MethodId::ResGcn,
        MethodId::Sage,
        MethodId::Ggcn,
        MethodId::Gcnii,
        MethodId::Gcnii2x,
        MethodId::PprGnn,
        MethodId::GatedGnn,
        MethodId::GcnPairNorm,
        MethodId::GcnBatchNorm,
        MethodId::Gin2,
        MethodId::Gin3,
        MethodId::UniMp,
        MethodId::Gps,
    ];

    /// Lowercase CLI token.
    pub fn token(self) -> &'static str {
        match self {
            MethodId::Gcn => "gcn",
            MethodId::Gat => "gat",
            MethodId::ResGcn => "resgcn",
            MethodId::Sage => "sage",
            MethodId::Ggcn => "ggcn",
            MethodId::Gcnii => "gcnii",
            MethodId::Gcnii2x => "gcnii2x",
            MethodId::PprGnn => "pprgnn",
            MethodId::GatedGnn => "gatedgnn",
            MethodId::GcnPairNorm => "gcn_pairnorm",
            MethodId::GcnBatchNorm => "gcn_batchnorm",
            MethodId::Gin2 => "gin2",
            MethodId::Gin3 => "gin3",
            MethodId::UniMp => "unimp",
            MethodId::Gps => "gps",
        }
    }

    pub fn parse(token: &str) -> Option<MethodId> {
        MethodId::ALL.iter().copied().find(|m| m.token() == token)
    }

    /// Token of the parameter family this method draws from. `gcnii2x`
    /// shares the `gcnii` draw (its tensors are the exact 2x scaling of
    /// the same random parameters); every other method is its own family.
    pub fn family_token(self) -> &'static str {
        match self {
            MethodId::Gcnii2x => "gcnii",
            other => other.token(),
        }
    }
}

/// Method-specific scalar hyperparameters, with the adopted defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodHyper {
    /// GCNII initial-residual mixing factor, in (0, 1).
    pub gcnii_alpha: f64,
    /// GCNII feature-transform mixing factor in `(1-b) I + b W`. The
    /// published implementation uses `b = 1` unless its depth-decay
    /// constants are configured; the constant keeps the doubled-weight
    /// variant's growth mechanism intact at depth (a decaying schedule
    /// drives the transform to the identity, after which the restart term
    /// always resurfaces and the 2x variant can no longer collapse).
    pub gcnii_beta: f64,
    /// Negative slope of the GAT attention LeakyReLU.
    pub leaky_relu_slope: f64,
    /// PairNorm target average row norm.
    pub pairnorm_scale: f64,
    /// BatchNorm variance epsilon.
    pub batchnorm_epsilon: f64,
    /// LayerNorm variance epsilon (GPS).
    pub layernorm_epsilon: f64,
    /// GIN self-weight epsilon.
    pub gin_epsilon: f64,
    /// When set, the GCN-family aggregation uses the published self-loop
    /// normalisation `(D+I)^{-1/2}(A+I)(D+I)^{-1/2}`. Off by default: the
    /// loop-free form keeps the aggregation's dominant eigenvector exactly
    /// in the nullspace of the loop-free symmetric Laplacian the energy
    /// metric uses (the self-loop variant plateaus near 5.7e-3 on the
    /// karate club instead of converging).
    pub gcn_self_loops: bool,
}

impl Default for MethodHyper {
    fn default() -> Self {
        Self {
            gcnii_alpha: 0.1,
            gcnii_beta: 1.0,
            leaky_relu_slope: 0.2,
            pairnorm_scale: 1.0,
            batchnorm_epsilon: 1e-5,
            layernorm_epsilon: 1e-5,
            gin_epsilon: 0.0,
            gcn_self_loops: false,
        }
    }
}

/// One of the 15 method configurations at a fixed feature width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSpec {
    pub id: MethodId,
    pub dim: usize,
    pub hyper: MethodHyper,
}

impl MethodSpec {
    pub fn new(id: MethodId, dim: usize) -> Self {
        Self::with_hyper(id, dim, MethodHyper::default())
    }

    pub fn with_hyper(id: MethodId, dim: usize, hyper: MethodHyper) -> Self {
        assert!(dim >= 1, "feature width must be at least 1");
        assert!(
            hyper.gcnii_alpha > 0.0 && hyper.gcnii_alpha < 1.0,
            "gcnii_alpha must lie in (0, 1)"
        );
        assert!(hyper.pairnorm_scale > 0.0);
        assert!(hyper.batchnorm_epsilon > 0.0 && hyper.layernorm_epsilon > 0.0);
        Self { id, dim, hyper }
    }
}

/// Randomly initialised tensors of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub method: MethodSpec,
    /// 1-based depth index; drives the GCNII/PPRGNN schedules.
    pub layer_index: usize,
    /// Recorded for reproducibility.
    pub rng_seed: u64,
    tensors: Vec<(&'static str, DenseMatrix)>,
}

impl LayerParams {
    pub fn tensor(&self, name: &str) -> &DenseMatrix {
        &self
            .tensors
            .iter()
            .find(|(n, _)| *n == name)
            .unwrap_or_else(|| panic!("method {:?} has no tensor '{name}'", self.method.id))
            .1
    }

    pub fn tensor_names(&self) -> Vec<&'static str> {
        self.tensors.iter().map(|(n, _)| *n).collect()
    }

    pub fn tensors(&self) -> &[(&'static str, DenseMatrix)] {
        &self.tensors
    }
}

/// Current state of a depth run.
#[derive(Debug, Clone)]
pub struct RunState {
    /// Current node states, n x d.
    pub x: DenseMatrix,
    /// Initial state, read by the initial-residual methods.
    pub x0: DenseMatrix,
    /// Optional per-method carry; unused by the built-in methods.
    pub aux: Option<DenseMatrix>,
}

impl RunState {
    pub fn new(x0: DenseMatrix) -> Self {
        Self {
            x: x0.clone(),
            x0,
            aux: None,
        }
    }
}

/// Initialisation family of one tensor, mirroring the published
/// implementations: graph-convolution weights use Glorot uniform, dense
/// (MLP / gate) weights and biases use the `U(+-sqrt(1/fan_in))` default
/// of plain linear layers, and convolution-level biases start at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Init {
    /// `U(+-sqrt(6 / (fan_in + fan_out)))`.
    Glorot,
    /// `U(+-sqrt(1 / fan_in))`.
    Dense,
    /// All zeros.
    Zero,
}

fn draw(rng: &mut Xoshiro256StarStar, rows: usize, cols: usize, init: Init) -> DenseMatrix {
    let bound = match init {
        Init::Glorot => (6.0 / (rows + cols) as f64).sqrt(),
        Init::Dense => (1.0 / rows as f64).sqrt(),
        Init::Zero => return DenseMatrix::zeros(rows, cols),
    };
    let mut m = DenseMatrix::zeros(rows, cols);
    for e in m.entries_mut() {
        *e = rng.uniform_symmetric(bound);
    }
    m
}

/// Deterministic parameter initialisation for one layer.
///
/// The draw depends only on `(spec, layer_index, seed)`; `gcnii2x`
/// produces exactly twice the `gcnii` tensors of the same seed.
pub fn init_params(spec: &MethodSpec, layer_index: usize, seed: u64) -> LayerParams {
    assert!(layer_index >= 1, "layers are 1-indexed");
    let d = spec.dim;
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut tensors: Vec<(&'static str, DenseMatrix)> = Vec::new();
    let push = |rng: &mut Xoshiro256StarStar,
                tensors: &mut Vec<(&'static str, DenseMatrix)>,
                name: &'static str,
                rows: usize,
                cols: usize,
                init: Init| {
        tensors.push((name, draw(rng, rows, cols, init)));
    };
    // Bias rows record the fan-in of the layer they belong to; a dense
    // bias is drawn with that fan-in's bound.
    let dense_bias = |rng: &mut Xoshiro256StarStar, cols: usize, fan_in: usize| {
        let bound = (1.0 / fan_in as f64).sqrt();
        let mut b = DenseMatrix::zeros(1, cols);
        for e in b.entries_mut() {
            *e = rng.uniform_symmetric(bound);
        }
        b
    };

    match spec.id {
        MethodId::Gcn | MethodId::ResGcn | MethodId::Ggcn | MethodId::GcnPairNorm
        | MethodId::GcnBatchNorm => {
            push(&mut rng, &mut tensors, "w", d, d, Init::Glorot);
            push(&mut rng, &mut tensors, "b", 1, d, Init::Zero);
        }
        MethodId::Gat => {
            push(&mut rng, &mut tensors, "w", d, d, Init::Glorot);
            // Attention vector a in R^{2d}.
            push(&mut rng, &mut tensors, "att", 2 * d, 1, Init::Glorot);
            push(&mut rng, &mut tensors, "b", 1, d, Init::Zero);
        }
        MethodId::Sage => {
            push(&mut rng, &mut tensors, "w_root", d, d, Init::Glorot);
            push(&mut rng, &mut tensors, "w_nbr", d, d, Init::Glorot);
            push(&mut rng, &mut tensors, "b", 1, d, Init::Zero);
        }
        MethodId::Gcnii | MethodId::Gcnii2x => {
            push(&mut rng, &mut tensors, "w", d, d, Init::Glorot);
            if spec.id == MethodId::Gcnii2x {
                for (_, t) in &mut tensors {
                    *t = t.scale(2.0);
                }
            }
        }
        MethodId::PprGnn => {
            push(&mut rng, &mut tensors, "w", d, d, Init::Glorot);
        }
        MethodId::GatedGnn => {
            push(&mut rng, &mut tensors, "w_z", d, d, Init::Dense);
            push(&mut rng, &mut tensors, "u_z", d, d, Init::Dense);
            tensors.push(("b_z", dense_bias(&mut rng, d, d)));
            push(&mut rng, &mut tensors, "w_h", d, d, Init::Dense);
            push(&mut rng, &mut tensors, "u_h", d, d, Init::Dense);
            tensors.push(("b_h", dense_bias(&mut rng, d, d)));
        }
        MethodId::Gin2 => {
            push(&mut rng, &mut tensors, "w1", d, d, Init::Dense);
            tensors.push(("b1", dense_bias(&mut rng, d, d)));
            push(&mut rng, &mut tensors, "w2", d, d, Init::Dense);
            tensors.push(("b2", dense_bias(&mut rng, d, d)));
        }
        MethodId::Gin3 => {
            push(&mut rng, &mut tensors, "w1", d, d, Init::Dense);
            tensors.push(("b1", dense_bias(&mut rng, d, d)));
            push(&mut rng, &mut tensors, "w2", d, d, Init::Dense);
            tensors.push(("b2", dense_bias(&mut rng, d, d)));
            push(&mut rng, &mut tensors, "w3", d, d, Init::Dense);
            tensors.push(("b3", dense_bias(&mut rng, d, d)));
        }
        MethodId::UniMp => {
            push(&mut rng, &mut tensors, "w_q", d, d, Init::Glorot);
            push(&mut rng, &mut tensors, "w_k", d, d, Init::Glorot);
            push(&mut rng, &mut tensors, "w_v", d, d, Init::Glorot);
            push(&mut rng, &mut tensors, "w_o", d, d, Init::Glorot);
            push(&mut rng, &mut tensors, "b", 1, d, Init::Zero);
        }
        MethodId::Gps => {
            push(&mut rng, &mut tensors, "w_m", d, d, Init::Glorot);
            push(&mut rng, &mut tensors, "w_q", d, d, Init::Glorot);
            push(&mut rng, &mut tensors, "w_k", d, d, Init::Glorot);
            push(&mut rng, &mut tensors, "w_v", d, d, Init::Glorot);
            push(&mut rng, &mut tensors, "w_1", d, d, Init::Dense);
            tensors.push(("b_1", dense_bias(&mut rng, d, d)));
            push(&mut rng, &mut tensors, "w_2", d, d, Init::Dense);
            tensors.push(("b_2", dense_bias(&mut rng, d, d)));
        }
    }

    LayerParams {
        method: *spec,
        layer_index,
        rng_seed: seed,
        tensors,
    }
}

/// Advance the state by one layer of the configured method. Returns an
/// [`Instability`] when the resulting state norm leaves the representable
/// band, signalling the harness to truncate the trace.
pub fn apply_layer(
    state: &RunState,
    graph: &Graph,
    params: &LayerParams,
) -> Result<RunState, Instability> {
    assert_eq!(state.x.rows(), graph.node_count(), "state rows must match n");
    assert_eq!(state.x.cols(), params.method.dim, "state width must match d");
    assert_eq!(state.x0.rows(), state.x.rows());
    let x = forward::forward(state, graph, params);
    let next = check_state(x)?;
    Ok(RunState {
        x: next,
        x0: state.x0.clone(),
        aux: state.aux.clone(),
    })
}

/// One linear step over a sum of Kronecker terms:
/// `X <- sum_l A_l X W_l^T`, optionally followed by a ReLU.
///
/// A single `(A, W)` pair is exactly one linear graph convolution; the
/// pair list `[(A, W), (I, I)]` expresses a residual connection. Two or
/// more terms with independent transformations are the construction that
/// prevents rank collapse.
pub fn sum_kron_layer(
    state: &RunState,
    terms: &[(&DenseMatrix, &DenseMatrix)],
    apply_relu: bool,
) -> Result<RunState, Instability> {
    assert!(!terms.is_empty(), "sum_kron_layer needs at least one term");
    let (n, d) = (state.x.rows(), state.x.cols());
    let mut acc = DenseMatrix::zeros(n, d);
    for (a, w) in terms {
        assert_eq!(a.rows(), n, "aggregation matrix must be n x n");
        assert_eq!(a.cols(), n);
        assert_eq!(w.rows(), d, "weight must be d x d");
        assert_eq!(w.cols(), d);
        acc = acc.add(&a.matmul(&state.x).matmul(&w.transpose()));
    }
    if apply_relu {
        forward::relu_inplace(&mut acc);
    }
    let next = check_state(acc)?;
    Ok(RunState {
        x: next,
        x0: state.x0.clone(),
        aux: state.aux.clone(),
    })
}

fn check_state(x: DenseMatrix) -> Result<DenseMatrix, Instability> {
    let norm = x.frobenius_norm();
    if !norm.is_finite() || norm > OVERFLOW_NORM {
        return Err(Instability::Overflow { norm });
    }
    if norm < UNDERFLOW_NORM {
        return Err(Instability::Underflow { norm });
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{karate_club, load_edge_list};

    fn normal_state(n: usize, d: usize, seed: u64) -> RunState {
        let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
        RunState::new(DenseMatrix::from_fn(n, d, |_, _| rng.next_normal()))
    }

    fn zero_biases(params: &mut LayerParams) {
        for (name, t) in &mut params.tensors {
            if name.starts_with('b') {
                *t = DenseMatrix::zeros(t.rows(), t.cols());
            }
        }
    }

    #[test]
    fn init_is_deterministic() {
        let spec = MethodSpec::new(MethodId::Gat, 8);
        let a = init_params(&spec, 3, 42);
        let b = init_params(&spec, 3, 42);
        assert_eq!(a.tensors(), b.tensors());
    }

    #[test]
    fn gcnii2x_is_exactly_double() {
        let base = MethodSpec::new(MethodId::Gcnii, 16);
        let twice = MethodSpec::new(MethodId::Gcnii2x, 16);
        let p1 = init_params(&base, 5, 7);
        let p2 = init_params(&twice, 5, 7);
        let w1 = p1.tensor("w");
        let w2 = p2.tensor("w");
        for (a, b) in w1.entries().iter().zip(w2.entries()) {
            assert_eq!(*b, 2.0 * *a);
        }
    }

    #[test]
    fn gin3_has_three_weight_matrices() {
        let p2 = init_params(&MethodSpec::new(MethodId::Gin2, 4), 1, 0);
        let p3 = init_params(&MethodSpec::new(MethodId::Gin3, 4), 1, 0);
        let count = |p: &LayerParams| {
            p.tensor_names()
                .iter()
                .filter(|n| n.starts_with('w'))
                .count()
        };
        assert_eq!(count(&p2), 2);
        assert_eq!(count(&p3), 3);
    }

    #[test]
    fn init_bounds_match_their_families() {
        // Convolution weight: Glorot; convolution bias: zero.
        let p = init_params(&MethodSpec::new(MethodId::Gcn, 25), 1, 9);
        let glorot = (6.0 / 50.0_f64).sqrt();
        for &e in p.tensor("w").entries() {
            assert!(e.abs() <= glorot);
        }
        assert!(p.tensor("b").entries().iter().all(|&e| e == 0.0));

        // MLP weight and bias: U(+-sqrt(1/fan_in)), bias nonzero.
        let p = init_params(&MethodSpec::new(MethodId::Gin2, 25), 1, 9);
        let dense = (1.0 / 25.0_f64).sqrt();
        for name in ["w1", "w2", "b1", "b2"] {
            for &e in p.tensor(name).entries() {
                assert!(e.abs() <= dense, "{name} out of bound");
            }
        }
        assert!(p.tensor("b1").entries().iter().any(|&e| e != 0.0));
    }

    #[test]
    fn gcn_on_edgeless_graph_reduces_to_feature_transform() {
        // With self-loop normalisation an edgeless graph gives A~ = I.
        // Self-loop lines are dropped by the loader, leaving two isolated
        // nodes.
        let mut hyper = MethodHyper::default();
        hyper.gcn_self_loops = true;
        let spec = MethodSpec::with_hyper(MethodId::Gcn, 4, hyper);
        let g = load_edge_list("0 0\n1 1\n").unwrap();
        assert_eq!(g.directed_edge_count(), 0);
        assert_eq!(g.node_count(), 2);
        let state = normal_state(2, 4, 1);
        let params = init_params(&spec, 1, 11);
        let next = apply_layer(&state, &g, &params).unwrap();
        // A~ = I, so the layer is ReLU(X W).
        let expect = {
            let mut y = state.x.matmul(params.tensor("w"));
            forward::relu_inplace(&mut y);
            y
        };
        assert_eq!(next.x, expect);
    }

    #[test]
    fn gcn_two_node_self_loop_hand_computation() {
        // Single edge, X = I2, W = I2: A~ = [[.5,.5],[.5,.5]].
        let g = load_edge_list("0 1").unwrap();
        let mut hyper = MethodHyper::default();
        hyper.gcn_self_loops = true;
        let spec = MethodSpec::with_hyper(MethodId::Gcn, 2, hyper);
        let mut params = init_params(&spec, 1, 0);
        for (name, t) in &mut params.tensors {
            if *name == "w" {
                *t = DenseMatrix::identity(2);
            }
        }
        let state = RunState::new(DenseMatrix::identity(2));
        let next = apply_layer(&state, &g, &params).unwrap();
        for &e in next.x.entries() {
            assert!((e - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_state_with_zero_biases_flags_underflow() {
        let g = karate_club();
        for id in MethodId::ALL {
            let spec = MethodSpec::new(id, 4);
            let mut params = init_params(&spec, 1, 3);
            zero_biases(&mut params);
            let state = RunState::new(DenseMatrix::zeros(g.node_count(), 4));
            match apply_layer(&state, &g, &params) {
                Err(Instability::Underflow { .. }) => {}
                other => panic!("{id:?}: expected underflow, got {other:?}"),
            }
        }
    }

    #[test]
    fn huge_state_flags_overflow() {
        let g = karate_club();
        let spec = MethodSpec::new(MethodId::Gin2, 4);
        let params = init_params(&spec, 1, 3);
        let x = DenseMatrix::from_fn(g.node_count(), 4, |_, _| 1e160);
        let state = RunState::new(x);
        match apply_layer(&state, &g, &params) {
            Err(Instability::Overflow { .. }) => {}
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn shapes_are_preserved() {
        let g = karate_club();
        let state = normal_state(g.node_count(), 6, 5);
        for id in MethodId::ALL {
            let spec = MethodSpec::new(id, 6);
            let params = init_params(&spec, 1, 8);
            let next = apply_layer(&state, &g, &params).unwrap();
            assert_eq!(next.x.rows(), g.node_count(), "{id:?}");
            assert_eq!(next.x.cols(), 6, "{id:?}");
        }
    }

    #[test]
    fn positive_homogeneous_methods_scale_linearly() {
        // GAT and UniMP are excluded: their softmax logits scale with the
        // input, so the attention distribution itself shifts under scaling.
        let g = karate_club();
        let state = normal_state(g.node_count(), 6, 5);
        let scaled = RunState::new(state.x.scale(3.5));
        for id in [
            MethodId::Gcn,
            MethodId::ResGcn,
            MethodId::Sage,
            MethodId::Gin2,
            MethodId::Gin3,
        ] {
            let spec = MethodSpec::new(id, 6);
            let mut params = init_params(&spec, 1, 21);
            zero_biases(&mut params);
            let a = apply_layer(&state, &g, &params).unwrap();
            let b = apply_layer(&scaled, &g, &params).unwrap();
            let diff = a.x.scale(3.5).sub(&b.x).frobenius_norm();
            assert!(
                diff < 1e-9 * b.x.frobenius_norm().max(1.0),
                "{id:?} not positively homogeneous: {diff}"
            );
        }
    }

    #[test]
    fn single_kron_term_is_one_convolution() {
        let g = karate_club();
        let a = crate::graph::structure_matrix(&g, crate::graph::StructureKind::SymNormAdjacency);
        let state = normal_state(g.node_count(), 4, 2);
        let mut rng = Xoshiro256StarStar::seed_from_u64(33);
        let w = DenseMatrix::from_fn(4, 4, |_, _| rng.next_normal());
        let next = sum_kron_layer(&state, &[(a.matrix(), &w)], false).unwrap();
        let expect = a.matrix().matmul(&state.x).matmul(&w.transpose());
        assert!(next.x.sub(&expect).frobenius_norm() < 1e-12);
    }

    #[test]
    fn identity_pair_is_a_residual_connection() {
        let g = karate_club();
        let n = g.node_count();
        let a = crate::graph::structure_matrix(&g, crate::graph::StructureKind::SymNormAdjacency);
        let id = DenseMatrix::identity(n);
        let idw = DenseMatrix::identity(4);
        let state = normal_state(n, 4, 6);
        let mut rng = Xoshiro256StarStar::seed_from_u64(44);
        let w = DenseMatrix::from_fn(4, 4, |_, _| rng.next_normal());
        let next = sum_kron_layer(&state, &[(a.matrix(), &w), (&id, &idw)], false).unwrap();
        let expect = a
            .matrix()
            .matmul(&state.x)
            .matmul(&w.transpose())
            .add(&state.x);
        assert!(next.x.sub(&expect).frobenius_norm() < 1e-12);
    }
}
