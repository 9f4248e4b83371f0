//! Executable property suite for the spectral claims behind the library.
//!
//! Seven check families, each deterministic given its fixed seeds:
//!
//! 1. `power_iteration` — residual decay, oracle agreement, sign behaviour.
//! 2. `kron_power` — the Kronecker power iterate converges to
//!    `v1_W (x) v1_A` with eigenvalue `lambda1_A * lambda1_W`.
//! 3. `matrix_remark` — the matrix iteration `X <- A X W` (normalised)
//!    equals the vectorised power iterate, its ROD vanishes, and every
//!    column collapses onto `v1_A`.
//! 4. `over_smoothing_limits` — the limit rank-one factor is `1` for mean
//!    aggregation and `D^{1/2} 1` for the symmetric normalisation.
//! 5. `jordan_blocks` — constructed Jordan cases: column collapse still
//!    holds and the growth rate tracks `q_k = C(k, p-1) lambda1^{k-(p-1)}`.
//! 6. `energy_bound` — `E(AXW) <= (lambda2_A sigma1_W)^2 E(X)` plus one
//!    constructed energy-growth trial past the bound's safe regime.
//! 7. `energy_rod_implication` — near-nullspace states have both a small
//!    energy and a small ROD.
//!
//! Checks report failures rather than aborting; the harness turns a failed
//! report into a nonzero exit status.

use crate::eigen::{dense_eigenvalues, invert, EigenPair};
use crate::graph::{karate_club, structure_matrix, Graph, StructureKind};
use crate::matrix::DenseMatrix;
use crate::metrics::{dirichlet_energy, normalized_dirichlet_energy, rank_one_distance};
use crate::power::{power_iteration, spectral_norm};
use crate::rng::Xoshiro256StarStar;

/// Outcome of one check family.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub cases: Vec<CaseResult>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.passed)
    }
}

/// Outcome of one case within a family.
#[derive(Debug, Clone)]
pub struct CaseResult {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

impl CaseResult {
    fn fail(label: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            passed: false,
            detail: detail.into(),
        }
    }

    fn check(label: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Fault injection for self-testing the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sabotage {
    /// Flip the sign of the largest-magnitude entry of every Kronecker
    /// product computed inside the suite.
    Kron,
}

impl Sabotage {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "kron" => Some(Sabotage::Kron),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    pub sabotage: Option<Sabotage>,
}

/// Shared context: wraps `kron` so fault injection reaches every family
/// that builds Kronecker products.
struct Ctx {
    sabotage_kron: bool,
}

impl Ctx {
    fn kron(&self, a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        let mut k = a.kron(b).expect("suite-scale kron");
        if self.sabotage_kron {
            let mut best = 0usize;
            let mut best_abs = -1.0;
            for (i, &e) in k.entries().iter().enumerate() {
                if e.abs() > best_abs {
                    best_abs = e.abs();
                    best = i;
                }
            }
            k.entries_mut()[best] = -k.entries_mut()[best];
        }
        k
    }
}

/// Run all seven check families with fixed seeds, in a fixed order.
pub fn run_all(options: &VerifyOptions) -> Vec<CheckReport> {
    let ctx = Ctx {
        sabotage_kron: options.sabotage == Some(Sabotage::Kron),
    };
    vec![
        check_power_iteration(20, 8, 1e-8),
        kron_power_with(&ctx, 20),
        matrix_remark_with(&ctx, 96),
        check_over_smoothing_limits(300),
        jordan_blocks_with(&ctx, 200),
        check_energy_bound(100),
        check_energy_rod_implication(8),
    ]
}

/// Kronecker power iteration family without fault injection.
pub fn check_kron_power(trials: usize) -> CheckReport {
    kron_power_with(&Ctx { sabotage_kron: false }, trials)
}

/// Matrix-form iteration family without fault injection.
pub fn check_matrix_remark(k_max: usize) -> CheckReport {
    matrix_remark_with(&Ctx { sabotage_kron: false }, k_max)
}

/// Random square matrix with entries i.i.d. standard normal, regenerated
/// until the dominant eigenvalue is real, certified with an eigenvector,
/// and separated: `|lambda1| >= min_ratio * |lambda2|`.
fn gapped_matrix(
    rng: &mut Xoshiro256StarStar,
    n: usize,
    min_ratio: f64,
) -> (DenseMatrix, Vec<EigenPair>) {
    loop {
        let m = DenseMatrix::from_fn(n, n, |_, _| rng.next_normal());
        let Ok(pairs) = dense_eigenvalues(&m, 400 * n) else {
            continue;
        };
        if pairs.len() < 2 {
            return (m, pairs);
        }
        let ok = pairs[0].is_real()
            && pairs[0].vector.is_some()
            && pairs[0].magnitude() >= min_ratio * pairs[1].magnitude();
        if ok {
            return (m, pairs);
        }
    }
}

fn unit(v: &DenseMatrix) -> DenseMatrix {
    v.scale(1.0 / v.frobenius_norm())
}

/// Distance of a unit vector to a unit direction, up to sign.
fn direction_distance(z: &DenseMatrix, dir: &DenseMatrix) -> f64 {
    let aligned = if z.dot(dir) >= 0.0 { 1.0 } else { -1.0 };
    z.sub(&dir.scale(aligned)).frobenius_norm()
}

// ---------------------------------------------------------------------
// 1. power iteration
// ---------------------------------------------------------------------

pub fn check_power_iteration(trials: usize, size: usize, tol: f64) -> CheckReport {
    let mut cases = Vec::new();

    // diag(2,1): converges, no sign alternation.
    let s = DenseMatrix::from_diagonal(&[2.0, 1.0]);
    let x0 = DenseMatrix::column_vector(&[1.0, 1.0]);
    match power_iteration(&s, &x0, 500, tol) {
        Ok(r) => {
            let tail_constant = r
                .beta_signs
                .iter()
                .rev()
                .take(5)
                .all(|&sgn| sgn == 1.0);
            cases.push(CaseResult::check(
                "diag(2,1) converges without sign alternation",
                r.converged && tail_constant,
                format!("iterations={}, signs constant={}", r.iterations, tail_constant),
            ));
        }
        Err(e) => cases.push(CaseResult::fail("diag(2,1)", e.to_string())),
    }

    // diag(-2,1): converges in direction, sign alternates every step.
    let s = DenseMatrix::from_diagonal(&[-2.0, 1.0]);
    match power_iteration(&s, &x0, 500, tol) {
        Ok(r) => {
            let tail = &r.beta_signs[r.beta_signs.len().saturating_sub(6)..];
            let alternates = tail.windows(2).all(|w| w[0] == -w[1]);
            cases.push(CaseResult::check(
                "diag(-2,1) converges with alternating signs",
                r.converged && alternates,
                format!("iterations={}, alternates={}", r.iterations, alternates),
            ));
        }
        Err(e) => cases.push(CaseResult::fail("diag(-2,1)", e.to_string())),
    }

    // Permutation matrix: tied magnitudes must be detected.
    let perm = DenseMatrix::from_row_major(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let start = DenseMatrix::column_vector(&[1.0, 0.0]);
    let rejected = matches!(
        power_iteration(&perm, &start, 500, tol),
        Err(crate::matrix::LinalgError::NonDominantSpectrum { .. })
    );
    cases.push(CaseResult::check(
        "permutation matrix raises NON_DOMINANT_SPECTRUM",
        rejected,
        format!("rejected={rejected}"),
    ));

    // Random gapped trials against the dense oracle.
    let mut rng = Xoshiro256StarStar::seed_from_u64(0x9a11_0001);
    for trial in 0..trials {
        let (s, pairs) = gapped_matrix(&mut rng, size, 1.1);
        let x0 = DenseMatrix::from_fn(size, 1, |_, _| rng.next_normal());
        match power_iteration(&s, &x0, 500, tol) {
            Ok(r) => {
                let lambda1 = pairs[0].value_re;
                let value_ok =
                    (r.dominant.value_re - lambda1).abs() <= 1e-8 * lambda1.abs().max(1.0);
                let final_resid = r.residual_norms.last().copied().unwrap_or(f64::INFINITY);
                let resid_ok = final_resid <= tol;
                let signs_ok = {
                    let tail = &r.beta_signs[r.beta_signs.len().saturating_sub(5)..];
                    if lambda1 > 0.0 {
                        tail.windows(2).all(|w| w[0] == w[1])
                    } else {
                        tail.windows(2).all(|w| w[0] == -w[1])
                    }
                };
                cases.push(CaseResult::check(
                    format!("random trial {trial}"),
                    r.converged && value_ok && resid_ok && signs_ok,
                    format!(
                        "lambda1={lambda1:.6}, rayleigh={:.6}, final residual={final_resid:.2e}, \
                         iterations={}",
                        r.dominant.value_re, r.iterations
                    ),
                ));
            }
            Err(e) => cases.push(CaseResult::fail(format!("random trial {trial}"), e.to_string())),
        }
    }

    CheckReport {
        name: "power_iteration",
        cases,
    }
}

// ---------------------------------------------------------------------
// 2. Kronecker power iteration
// ---------------------------------------------------------------------

fn kron_power_with(ctx: &Ctx, trials: usize) -> CheckReport {
    let mut cases = Vec::new();

    // Diagonal pair: the iterate is exact once normalised.
    {
        let w = DenseMatrix::from_diagonal(&[2.0, 1.0]);
        let a = DenseMatrix::from_diagonal(&[3.0, 1.0]);
        let k = ctx.kron(&w, &a);
        let x0 = DenseMatrix::from_fn(4, 1, |i, _| 1.0 + i as f64 * 0.1);
        match power_iteration(&k, &x0, 500, 1e-12) {
            Ok(r) => {
                let v = r.dominant.vector.as_ref().unwrap();
                let e1 = DenseMatrix::from_fn(4, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
                let dist = direction_distance(v, &e1);
                cases.push(CaseResult::check(
                    "diagonal pair converges to e1 (x) e1",
                    r.converged && dist < 1e-9 && (r.dominant.value_re - 6.0).abs() < 1e-9,
                    format!("distance={dist:.2e}, value={:.9}", r.dominant.value_re),
                ));
            }
            Err(e) => cases.push(CaseResult::fail("diagonal pair", e.to_string())),
        }
    }

    // Karate: limit direction is v1_W (x) D^{1/2} 1.
    {
        let g = karate_club();
        let a = structure_matrix(&g, StructureKind::SymNormAdjacency).into_matrix();
        let mut rng = Xoshiro256StarStar::seed_from_u64(0x9a11_0002);
        let (w, w_pairs) = gapped_matrix(&mut rng, 3, 1.1);
        let k = ctx.kron(&w, &a);
        let x0 = DenseMatrix::from_fn(k.rows(), 1, |_, _| rng.next_normal());
        match power_iteration(&k, &x0, 5000, 1e-10) {
            Ok(r) => {
                // D^{1/2} 1 direction built from the degree table.
                let d_half = unit(&DenseMatrix::from_fn(g.node_count(), 1, |i, _| {
                    (g.degrees()[i] as f64).sqrt()
                }));
                let vw = w_pairs[0].vector.as_ref().unwrap();
                let expect = unit(&vw.kron(&d_half).unwrap());
                let v = r.dominant.vector.as_ref().unwrap();
                let dist = direction_distance(v, &expect);
                cases.push(CaseResult::check(
                    "karate limit is v1_W (x) D^{1/2} 1",
                    r.converged && dist < 1e-6,
                    format!("distance={dist:.2e}"),
                ));
            }
            Err(e) => cases.push(CaseResult::fail("karate pair", e.to_string())),
        }
    }

    // Random pairs, W 4x4 and A 6x6.
    let mut rng = Xoshiro256StarStar::seed_from_u64(0x9a11_0003);
    for trial in 0..trials {
        let (w, w_pairs) = gapped_matrix(&mut rng, 4, 1.05);
        let (a, a_pairs) = gapped_matrix(&mut rng, 6, 1.05);
        let product = a_pairs[0].value_re * w_pairs[0].value_re;
        let k = ctx.kron(&w, &a);
        let x0 = DenseMatrix::from_fn(24, 1, |_, _| rng.next_normal());
        match power_iteration(&k, &x0, 20_000, 1e-10) {
            Ok(r) => {
                let expect = unit(
                    &w_pairs[0]
                        .vector
                        .as_ref()
                        .unwrap()
                        .kron(a_pairs[0].vector.as_ref().unwrap())
                        .unwrap(),
                );
                let v = r.dominant.vector.as_ref().unwrap();
                let dist = direction_distance(v, &expect);
                let value_ok =
                    (r.dominant.value_re - product).abs() <= 1e-8 * (1.0 + product.abs());
                cases.push(CaseResult::check(
                    format!("random pair {trial}"),
                    r.converged && dist <= 1e-6 && value_ok,
                    format!(
                        "distance={dist:.2e}, rayleigh={:.9}, product={product:.9}",
                        r.dominant.value_re
                    ),
                ));
            }
            Err(e) => cases.push(CaseResult::fail(format!("random pair {trial}"), e.to_string())),
        }
    }

    CheckReport {
        name: "kron_power",
        cases,
    }
}

// ---------------------------------------------------------------------
// 3. matrix-form remark
// ---------------------------------------------------------------------

fn matrix_remark_with(ctx: &Ctx, k_max: usize) -> CheckReport {
    let mut cases = Vec::new();
    let g = karate_club();
    let n = g.node_count();
    let d = 32usize;
    let a = structure_matrix(&g, StructureKind::SymNormAdjacency).into_matrix();
    let lap_sym = structure_matrix(&g, StructureKind::SymNormLaplacian);

    let mut rng = Xoshiro256StarStar::seed_from_u64(0x9a11_0004);
    let (w, w_pairs) = gapped_matrix(&mut rng, d, 1.05);
    let x_init = DenseMatrix::from_fn(n, d, |_, _| rng.next_normal());

    // Route 1: matrix iteration, normalised per step.
    let mut x = unit(&x_init);
    // Route 2: vectorised power iteration on the explicit W^T (x) A.
    let s = ctx.kron(&w.transpose(), &a);
    let mut z = unit(&x_init.vectorize());
    let mut max_route_gap: f64 = 0.0;
    for _ in 0..k_max {
        x = unit(&a.matmul(&x).matmul(&w));
        z = unit(&s.matmul(&z));
        max_route_gap = max_route_gap.max(direction_distance(&z, &x.vectorize()));
    }
    cases.push(CaseResult::check(
        "matrix route equals vec route",
        max_route_gap <= 1e-8,
        format!("max direction gap over {k_max} steps = {max_route_gap:.2e}"),
    ));

    let rod = rank_one_distance(&x).unwrap();
    cases.push(CaseResult::check(
        format!("ROD at k={k_max} vanishes"),
        rod <= 1e-6,
        format!("rod={rod:.2e}"),
    ));

    let energy = normalized_dirichlet_energy(&x, &lap_sym).unwrap();
    cases.push(CaseResult::check(
        format!("symmetric energy at k={k_max} vanishes"),
        energy <= 1e-10,
        format!("energy={energy:.2e}"),
    ));

    // Every column a multiple of v1_A (cosine similarity -> 1).
    let v1a = unit(&DenseMatrix::from_fn(n, 1, |i, _| {
        (g.degrees()[i] as f64).sqrt()
    }));
    let mut min_cos = f64::INFINITY;
    for j in 0..d {
        let col = DenseMatrix::column_vector(&x.column(j));
        let norm = col.frobenius_norm();
        if norm < 1e-12 {
            continue;
        }
        let cos = (col.dot(&v1a) / norm).abs();
        min_cos = min_cos.min(cos);
    }
    cases.push(CaseResult::check(
        "columns align with v1_A",
        min_cos >= 1.0 - 1e-8,
        format!("min |cos| = {min_cos:.12}"),
    ));

    // Fixed direction: X = v1_A (v1_W)^T stays at ROD ~ 0 every step.
    {
        let vw = w_pairs[0].vector.as_ref().unwrap();
        let mut fixed = v1a.matmul(&vw.transpose());
        let mut max_rod: f64 = 0.0;
        for _ in 0..8 {
            max_rod = max_rod.max(rank_one_distance(&fixed).unwrap());
            fixed = unit(&a.matmul(&fixed).matmul(&w));
        }
        cases.push(CaseResult::check(
            "rank-one start stays rank-one",
            max_rod <= 1e-10,
            format!("max rod={max_rod:.2e}"),
        ));
    }

    CheckReport {
        name: "matrix_remark",
        cases,
    }
}

// ---------------------------------------------------------------------
// 4. over-smoothing limit shapes
// ---------------------------------------------------------------------

pub fn check_over_smoothing_limits(k_max: usize) -> CheckReport {
    let mut cases = Vec::new();
    let g = karate_club();
    let n = g.node_count();
    let d = 8usize;
    let mut rng = Xoshiro256StarStar::seed_from_u64(0x9a11_0005);

    let families: [(&str, DenseMatrix, DenseMatrix); 2] = [
        (
            "mean aggregation collapses to 1 c^T",
            structure_matrix(&g, StructureKind::RowStochastic).into_matrix(),
            unit(&DenseMatrix::from_fn(n, 1, |_, _| 1.0)),
        ),
        (
            "symmetric normalisation collapses to D^{1/2} 1 c^T",
            structure_matrix(&g, StructureKind::SymNormAdjacency).into_matrix(),
            unit(&DenseMatrix::from_fn(n, 1, |i, _| {
                (g.degrees()[i] as f64).sqrt()
            })),
        ),
    ];

    for (label, agg, v1) in families {
        let (w, _) = gapped_matrix(&mut rng, d, 1.05);
        let mut x = unit(&DenseMatrix::from_fn(n, d, |_, _| rng.next_normal()));
        for _ in 0..k_max {
            x = unit(&agg.matmul(&x).matmul(&w));
        }
        // Distance of X to its projection onto the rank-one family
        // v1 c^T: subtract v1 <v1, col_j> per column.
        let mut resid_sq = 0.0;
        for j in 0..d {
            let col = DenseMatrix::column_vector(&x.column(j));
            let coef = col.dot(&v1);
            resid_sq += col.sub(&v1.scale(coef)).frobenius_norm().powi(2);
        }
        let resid = resid_sq.sqrt();
        cases.push(CaseResult::check(
            label,
            resid <= 1e-6,
            format!("||X - v1 c^T|| = {resid:.2e} at k={k_max}"),
        ));
    }

    CheckReport {
        name: "over_smoothing_limits",
        cases,
    }
}

// ---------------------------------------------------------------------
// 5. Jordan-block cases
// ---------------------------------------------------------------------

/// A constructed Jordan case: `w = P J P^{-1}` with the Jordan form
/// assembled explicitly, so the structure is known without running any
/// (numerically fragile) general Jordan decomposition.
#[derive(Debug, Clone)]
pub struct JordanTestCase {
    /// Size of the largest dominant Jordan block of `w`.
    pub p: usize,
    /// Number of dominant blocks of size `p`.
    pub block_multiplicity: usize,
    /// Dominant eigenvalue of `w`.
    pub lambda_w: f64,
    pub w: DenseMatrix,
    pub a: DenseMatrix,
    /// Dominant eigenpair of `a`.
    pub expected_factor_a: EigenPair,
    /// Condition number of the basis `P`.
    pub basis_condition: f64,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum JordanError {
    #[error("basis is ill-conditioned: cond = {cond:.3e} > 100")]
    IllConditioned { cond: f64 },
    #[error("basis is singular")]
    SingularBasis,
}

impl JordanTestCase {
    /// Assemble `w = P J P^{-1}` from an explicit basis. `J` holds
    /// `block_multiplicity` Jordan blocks of size `p` with eigenvalue
    /// `lambda_w`, padded with the `filler` diagonal values.
    pub fn with_basis(
        p: usize,
        block_multiplicity: usize,
        lambda_w: f64,
        filler: &[f64],
        basis: DenseMatrix,
        a: DenseMatrix,
        expected_factor_a: EigenPair,
    ) -> Result<Self, JordanError> {
        let d = p * block_multiplicity + filler.len();
        assert_eq!(basis.rows(), d, "basis must match the Jordan form size");
        assert!(basis.is_square());
        // cond(P) via the eigenvalues of P^T P.
        let gram = basis.transpose().matmul(&basis);
        let sigma = dense_eigenvalues(&gram, 4000).map_err(|_| JordanError::SingularBasis)?;
        let smax = sigma.first().map(|p| p.value_re).unwrap_or(0.0);
        let smin = sigma.last().map(|p| p.value_re).unwrap_or(0.0);
        if smin <= 0.0 {
            return Err(JordanError::SingularBasis);
        }
        let cond = (smax / smin).sqrt();
        if cond > 100.0 {
            return Err(JordanError::IllConditioned { cond });
        }
        let mut j = DenseMatrix::zeros(d, d);
        for b in 0..block_multiplicity {
            let base = b * p;
            for i in 0..p {
                j[(base + i, base + i)] = lambda_w;
                if i + 1 < p {
                    j[(base + i, base + i + 1)] = 1.0;
                }
            }
        }
        for (i, &f) in filler.iter().enumerate() {
            let k = block_multiplicity * p + i;
            j[(k, k)] = f;
        }
        let inv = invert(&basis).ok_or(JordanError::SingularBasis)?;
        let w = basis.matmul(&j).matmul(&inv);
        Ok(Self {
            p,
            block_multiplicity,
            lambda_w,
            w,
            a,
            expected_factor_a,
            basis_condition: cond,
        })
    }

    /// Construct with a random well-conditioned basis (regenerated until
    /// the condition check passes) and a random symmetric gapped `a`.
    pub fn construct(
        p: usize,
        block_multiplicity: usize,
        seed: u64,
    ) -> Result<Self, JordanError> {
        let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
        // Symmetric a with a spectral gap: real spectrum, certified v1.
        let (a, a_pairs) = loop {
            let raw = DenseMatrix::from_fn(6, 6, |_, _| rng.next_normal());
            let sym = raw.add(&raw.transpose()).scale(0.5);
            let Ok(pairs) = dense_eigenvalues(&sym, 4000) else {
                continue;
            };
            if pairs[0].is_real()
                && pairs[0].vector.is_some()
                && pairs[0].magnitude() >= 1.3 * pairs[1].magnitude()
            {
                break (sym, pairs);
            }
        };
        let lambda_w = 1.1;
        let filler = [0.5, 0.3];
        let d = p * block_multiplicity + filler.len();
        for _ in 0..64 {
            let basis = DenseMatrix::from_fn(d, d, |_, _| rng.next_normal());
            match Self::with_basis(
                p,
                block_multiplicity,
                lambda_w,
                &filler,
                basis,
                a.clone(),
                a_pairs[0].clone(),
            ) {
                Ok(case) => return Ok(case),
                Err(JordanError::SingularBasis) | Err(JordanError::IllConditioned { .. }) => {
                    continue
                }
            }
        }
        Err(JordanError::IllConditioned { cond: f64::INFINITY })
    }
}

/// Binomial coefficient as f64 (suite-scale arguments).
fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Run one constructed Jordan case for `k_max` steps.
pub fn check_jordan_case(ctx_kron: bool, case: &JordanTestCase, k_max: usize) -> Vec<CaseResult> {
    let ctx = Ctx {
        sabotage_kron: ctx_kron,
    };
    let mut results = Vec::new();
    let label = format!("p={}, multiplicity={}", case.p, case.block_multiplicity);
    let n = case.a.rows();
    let d = case.w.rows();

    let s = ctx.kron(&case.w, &case.a);
    let lambda_s = case.lambda_w * case.expected_factor_a.value_re;

    let mut rng = Xoshiro256StarStar::seed_from_u64(0x9a11_0006);
    let mut z = unit(&DenseMatrix::from_fn(n * d, 1, |_, _| rng.next_normal()));
    // Cumulative log growth of the unnormalised iterate.
    let mut log_norms = Vec::with_capacity(k_max + 1);
    log_norms.push(0.0_f64);
    for _ in 0..k_max {
        let y = s.matmul(&z);
        let ny = y.frobenius_norm();
        log_norms.push(log_norms.last().unwrap() + ny.ln());
        z = y.scale(1.0 / ny);
    }

    // Column collapse onto v1_A: reshape vec form to n x d, check every
    // column of the unit-Frobenius state.
    let x = DenseMatrix::from_vectorized(&z, n, d);
    let v1a = unit(case.expected_factor_a.vector.as_ref().unwrap());
    let mut max_col_resid: f64 = 0.0;
    for j in 0..d {
        let col = DenseMatrix::column_vector(&x.column(j));
        let coef = col.dot(&v1a);
        max_col_resid = max_col_resid.max(col.sub(&v1a.scale(coef)).frobenius_norm());
    }
    results.push(CaseResult::check(
        format!("{label}: columns collapse to v1_A"),
        max_col_resid <= 1e-5,
        format!("max column residual = {max_col_resid:.2e} at k={k_max}"),
    ));

    // Growth tracks q_k = C(k, p-1) lambda_S^{k-(p-1)} over the second
    // half of the run, constants absorbed at k0 = k_max/2.
    let k0 = k_max / 2;
    let q_log = |k: usize| {
        binomial(k, case.p - 1).ln() + (k as f64 - (case.p as f64 - 1.0)) * lambda_s.abs().ln()
    };
    // worst_ratio = max over k of max(ratio, 1/ratio); the bound
    // "ratio in [0.5, 2.0]" is then worst_ratio <= 2.
    let mut worst_ratio: f64 = 1.0;
    for k in (k0 + 1)..=k_max {
        let measured = log_norms[k] - log_norms[k0];
        let predicted = q_log(k) - q_log(k0);
        let ratio = (measured - predicted).exp();
        worst_ratio = worst_ratio.max(ratio).max(1.0 / ratio);
    }
    results.push(CaseResult::check(
        format!("{label}: growth tracks q_k"),
        worst_ratio <= 2.0,
        format!("worst growth/q_k ratio deviation = {worst_ratio:.4}"),
    ));

    // For diagonalisable dominant structure (p = 1) the limit factor u is
    // an eigenvector of W for lambda_w (any combination within the
    // eigenspace when the multiplicity exceeds one).
    if case.p == 1 {
        let mut u = DenseMatrix::zeros(d, 1);
        for j in 0..d {
            let col = DenseMatrix::column_vector(&x.column(j));
            u[(j, 0)] = col.dot(&v1a);
        }
        let u = unit(&u);
        let resid = case
            .w
            .matmul(&u)
            .sub(&u.scale(case.lambda_w))
            .frobenius_norm();
        results.push(CaseResult::check(
            format!("{label}: limit factor u lies in the dominant eigenspace"),
            resid <= 1e-6,
            format!("||W u - lambda u|| = {resid:.2e}"),
        ));
    }

    // beta_k stays bounded: with unit iterates the projection onto the
    // (unit) limit direction is bounded by 1; assert finiteness of the
    // whole run instead of a closed form.
    results.push(CaseResult::check(
        format!("{label}: run stayed finite"),
        log_norms.iter().all(|l| l.is_finite()),
        format!("final log-norm = {:.3}", log_norms.last().unwrap()),
    ));

    results
}

fn jordan_blocks_with(ctx: &Ctx, k_max: usize) -> CheckReport {
    let mut cases = Vec::new();
    for (p, mult, seed) in [
        (1usize, 1usize, 0x0bad_0001u64),
        (1, 2, 0x0bad_0002),
        (2, 1, 0x0bad_0003),
        (2, 2, 0x0bad_0004),
    ] {
        match JordanTestCase::construct(p, mult, seed) {
            Ok(case) => {
                cases.push(CaseResult::check(
                    format!("p={p}, multiplicity={mult}: basis is well-conditioned"),
                    case.basis_condition <= 100.0,
                    format!("cond(P) = {:.2}", case.basis_condition),
                ));
                cases.extend(check_jordan_case(ctx.sabotage_kron, &case, k_max));
            }
            Err(e) => cases.push(CaseResult::fail(
                format!("p={p}, multiplicity={mult}: construction"),
                e.to_string(),
            )),
        }
    }
    CheckReport {
        name: "jordan_blocks",
        cases,
    }
}

// ---------------------------------------------------------------------
// 6. energy contraction bound
// ---------------------------------------------------------------------

/// Fixed 10-node connected non-bipartite test graph (cycle plus chords).
pub fn energy_bound_graph() -> Graph {
    crate::graph::Graph::from_undirected_edges([
        (0usize, 1usize),
        (1, 2),
        (2, 3),
        (3, 4),
        (4, 5),
        (5, 6),
        (6, 7),
        (7, 8),
        (8, 9),
        (9, 0),
        (0, 2),
        (3, 7),
        (1, 6),
    ])
}

pub fn check_energy_bound(trials: usize) -> CheckReport {
    let mut cases = Vec::new();
    let g = energy_bound_graph();
    let n = g.node_count();
    let d = 4usize;
    let a = structure_matrix(&g, StructureKind::SymNormAdjacency).into_matrix();
    let lap = structure_matrix(&g, StructureKind::SymNormLaplacian);

    let pairs = dense_eigenvalues(&a, 4000).expect("fixed graph spectrum");
    let lambda2 = pairs[1].magnitude();
    let v1 = unit(pairs[0].vector.as_ref().expect("certified v1"));

    let project_out_v1 = |x: &DenseMatrix| {
        let mut out = x.clone();
        for j in 0..out.cols() {
            let col = DenseMatrix::column_vector(&out.column(j));
            let coef = col.dot(&v1);
            for i in 0..out.rows() {
                out[(i, j)] -= coef * v1[(i, 0)];
            }
        }
        out
    };

    // W = 0: both sides vanish.
    {
        let x = DenseMatrix::from_fn(n, d, |i, j| ((i + 2 * j) % 5) as f64 - 2.0);
        let x = project_out_v1(&x);
        let zero = DenseMatrix::zeros(d, d);
        let lhs = dirichlet_energy(&a.matmul(&x).matmul(&zero), &lap);
        cases.push(CaseResult::check(
            "W = 0 gives zero on both sides",
            lhs == 0.0,
            format!("lhs={lhs:.2e}"),
        ));
    }

    let mut rng = Xoshiro256StarStar::seed_from_u64(0x9a11_0007);

    // W = I special case.
    {
        let x = project_out_v1(&DenseMatrix::from_fn(n, d, |_, _| rng.next_normal()));
        let lhs = dirichlet_energy(&a.matmul(&x), &lap);
        let rhs = lambda2 * lambda2 * dirichlet_energy(&x, &lap);
        cases.push(CaseResult::check(
            "W = I obeys E(AX) <= lambda2^2 E(X)",
            lhs <= rhs * (1.0 + 1e-9) + 1e-12,
            format!("lhs={lhs:.6e}, rhs={rhs:.6e}"),
        ));
    }

    // Random trials.
    let mut violations = Vec::new();
    for trial in 0..trials {
        let x = project_out_v1(&DenseMatrix::from_fn(n, d, |_, _| rng.next_normal()));
        let w = DenseMatrix::from_fn(d, d, |_, _| rng.next_normal());
        let sigma1 = spectral_norm(&w, 2000, 1e-12).expect("gram power iteration");
        let lhs = dirichlet_energy(&a.matmul(&x).matmul(&w), &lap);
        let rhs = lambda2 * lambda2 * sigma1 * sigma1 * dirichlet_energy(&x, &lap);
        if lhs > rhs * (1.0 + 1e-9) + 1e-12 {
            violations.push(format!(
                "trial {trial}: lhs={lhs:.6e} > rhs={rhs:.6e}; X={:?}; W={:?}",
                x.entries(),
                w.entries()
            ));
        }
    }
    cases.push(CaseResult::check(
        format!("{trials} random trials obey the bound"),
        violations.is_empty(),
        if violations.is_empty() {
            "no violations".to_string()
        } else {
            violations.join(" | ")
        },
    ));

    // Over-separation: sigma1 = 2 / lambda2 with X along v2 grows the
    // energy while still obeying the bound.
    {
        let v2 = pairs[1]
            .vector
            .as_ref()
            .expect("v2 is simple for the fixed graph")
            .clone();
        let c = 2.0 / lambda2;
        let w = DenseMatrix::from_diagonal(&vec![c; d]);
        let x = DenseMatrix::from_fn(n, d, |i, j| v2[(i, 0)] * (1.0 + j as f64));
        let before = dirichlet_energy(&x, &lap);
        let after = dirichlet_energy(&a.matmul(&x).matmul(&w), &lap);
        let rhs = lambda2 * lambda2 * c * c * before;
        cases.push(CaseResult::check(
            "sigma1 > 1/lambda2 can grow the energy",
            after > before && after <= rhs * (1.0 + 1e-9),
            format!("before={before:.6e}, after={after:.6e}, bound rhs={rhs:.6e}"),
        ));
    }

    CheckReport {
        name: "energy_bound",
        cases,
    }
}

// ---------------------------------------------------------------------
// 7. energy => ROD implication
// ---------------------------------------------------------------------

pub fn check_energy_rod_implication(samples: usize) -> CheckReport {
    let mut cases = Vec::new();
    let g = karate_club();
    let n = g.node_count();
    let d = 8usize;

    let ones = unit(&DenseMatrix::from_fn(n, 1, |_, _| 1.0));
    let d_half = unit(&DenseMatrix::from_fn(n, 1, |i, _| {
        (g.degrees()[i] as f64).sqrt()
    }));
    let families = [
        ("unnormalized Laplacian with 1", StructureKind::UnnormalizedLaplacian, ones),
        ("symmetric Laplacian with D^{1/2} 1", StructureKind::SymNormLaplacian, d_half),
    ];

    let mut rng = Xoshiro256StarStar::seed_from_u64(0x9a11_0008);
    for (label, kind, v1) in families {
        let lap = structure_matrix(&g, kind);
        let mut mean_by_eta: Vec<(f64, f64, f64)> = Vec::new();
        for &eta in &[0.0, 1e-6, 1e-3] {
            let mut mean_e = 0.0;
            let mut mean_rod = 0.0;
            let mut worst_ratio: f64 = 0.0;
            for _ in 0..samples {
                let c = DenseMatrix::from_fn(1, d, |_, _| rng.next_normal());
                let noise = DenseMatrix::from_fn(n, d, |_, _| rng.next_normal());
                let x = v1.matmul(&c).add(&noise.scale(eta));
                let e = normalized_dirichlet_energy(&x, &lap).unwrap();
                let rod = rank_one_distance(&x).unwrap();
                mean_e += e / samples as f64;
                mean_rod += rod / samples as f64;
                if eta > 0.0 && e > 0.0 {
                    worst_ratio = worst_ratio.max(rod / e.sqrt());
                }
            }
            if eta == 0.0 {
                cases.push(CaseResult::check(
                    format!("{label}: exact nullspace state has zero energy and zero ROD"),
                    mean_e <= 1e-10 && mean_rod <= 1e-10,
                    format!("mean energy={mean_e:.2e}, mean rod={mean_rod:.2e}"),
                ));
            } else if eta == 1e-3 {
                cases.push(CaseResult::check(
                    format!("{label}: ROD <= 10 sqrt(E) at eta=1e-3"),
                    worst_ratio <= 10.0,
                    format!("max rod/sqrt(E) = {worst_ratio:.3}"),
                ));
            }
            mean_by_eta.push((eta, mean_e, mean_rod));
        }
        let monotone = mean_by_eta.windows(2).all(|w| {
            w[0].1 <= w[1].1 + 1e-15 && w[0].2 <= w[1].2 + 1e-15
        });
        cases.push(CaseResult::check(
            format!("{label}: energy and ROD grow together with the noise level"),
            monotone,
            format!("{mean_by_eta:?}"),
        ));
    }

    CheckReport {
        name: "energy_rod_implication",
        cases,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_families_pass_without_sabotage() {
        let reports = run_all(&VerifyOptions::default());
        assert_eq!(reports.len(), 7);
        for r in &reports {
            for c in &r.cases {
                assert!(c.passed, "{}: {} failed: {}", r.name, c.label, c.detail);
            }
        }
    }

    #[test]
    fn sabotaged_kron_is_caught() {
        let reports = run_all(&VerifyOptions {
            sabotage: Some(Sabotage::Kron),
        });
        assert!(
            reports.iter().any(|r| !r.passed()),
            "sign-flipped kron must fail at least one family"
        );
    }

    #[test]
    fn family_names_are_stable() {
        let names: Vec<&str> = run_all(&VerifyOptions::default())
            .iter()
            .map(|r| r.name)
            .collect();
        assert_eq!(
            names,
            vec![
                "power_iteration",
                "kron_power",
                "matrix_remark",
                "over_smoothing_limits",
                "jordan_blocks",
                "energy_bound",
                "energy_rod_implication",
            ]
        );
    }

    #[test]
    fn jordan_rejects_ill_conditioned_basis() {
        let mut basis = DenseMatrix::identity(4);
        basis[(0, 0)] = 1e6;
        let a = DenseMatrix::from_diagonal(&[2.0, 1.0]);
        let pairs = dense_eigenvalues(&a, 100).unwrap();
        let err = JordanTestCase::with_basis(1, 2, 1.1, &[0.5, 0.3], basis, a, pairs[0].clone());
        assert!(matches!(err, Err(JordanError::IllConditioned { .. })));
    }

    #[test]
    fn energy_bound_graph_is_suitable() {
        let g = energy_bound_graph();
        assert_eq!(g.node_count(), 10);
        let a = structure_matrix(&g, StructureKind::SymNormAdjacency).into_matrix();
        let pairs = dense_eigenvalues(&a, 4000).unwrap();
        // connected: lambda1 = 1 simple; non-bipartite: |lambda_min| < 1
        assert!((pairs[0].value_re - 1.0).abs() < 1e-10);
        assert!(pairs[1].magnitude() < 1.0 - 1e-6);
        // v2 must be real simple so the over-separation trial has a vector
        assert!(pairs[1].is_real());
        assert!(pairs[1].vector.is_some());
    }
}
