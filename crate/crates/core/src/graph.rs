//! Graph representation and derived structural matrices.
//!
//! Graphs store directed (src, dst) pairs; an undirected edge appears as
//! two directed pairs. `degrees[i]` counts the incoming directed edges of
//! node `i`, matching the neighbourhood convention `N_i = { j | (j,i) }`.

use thiserror::Error;

use crate::matrix::DenseMatrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Simple directed graph with precomputed in-degrees. No self-loops are
/// stored; normalisations that require them add them on the fly.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    degrees: Vec<usize>,
}

impl Graph {
    fn build(pairs: Vec<(usize, usize)>, min_nodes: usize) -> Self {
        let mut edges: Vec<(usize, usize)> = pairs
            .into_iter()
            .filter(|&(s, d)| s != d)
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let n = edges
            .iter()
            .map(|&(s, d)| s.max(d) + 1)
            .max()
            .unwrap_or(0)
            .max(min_nodes);
        let mut degrees = vec![0usize; n];
        for &(_, dst) in &edges {
            degrees[dst] += 1;
        }
        Self { n, edges, degrees }
    }

    /// Build from directed edge pairs; node count is `max id + 1`.
    /// Duplicate pairs and self-loops are dropped (a self-loop still
    /// counts toward the node range).
    pub fn from_directed_edges(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
        let min_nodes = pairs.iter().map(|&(s, d)| s.max(d) + 1).max().unwrap_or(0);
        Self::build(pairs, min_nodes)
    }

    /// Build from undirected pairs: each pair is stored in both directions.
    pub fn from_undirected_edges(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut directed = Vec::new();
        for (a, b) in pairs {
            directed.push((a, b));
            directed.push((b, a));
        }
        Self::from_directed_edges(directed)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Directed edge pairs, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn directed_edge_count(&self) -> usize {
        self.edges.len()
    }

    /// In-degree of each node.
    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// In-neighbours of each node: `neighbors[i] = { j | (j, i) in E }`.
    pub fn in_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nbrs = vec![Vec::new(); self.n];
        for &(src, dst) in &self.edges {
            nbrs[dst].push(src);
        }
        nbrs
    }

    /// Dense adjacency matrix: `A[dst, src] = 1` for each directed pair
    /// `(src, dst)`, so that row i aggregates over `N_i`.
    pub fn adjacency(&self) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(self.n, self.n);
        for &(src, dst) in &self.edges {
            a[(dst, src)] = 1.0;
        }
        a
    }
}

/// Parse a whitespace-separated edge list: one `src dst` pair per line,
/// 0-based ids, `#` starts a comment. Lines are interpreted as undirected
/// edges (both directions stored); self-loop lines are ignored. Gaps in
/// the id range are tolerated as isolated nodes.
pub fn load_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let mut tokens = line.split_whitespace();
        let Some(first) = tokens.next() else {
            continue;
        };
        let second = tokens.next().ok_or_else(|| GraphError::Parse {
            line: line_no,
            message: "expected two node ids".into(),
        })?;
        if let Some(extra) = tokens.next() {
            return Err(GraphError::Parse {
                line: line_no,
                message: format!("unexpected trailing token '{extra}'"),
            });
        }
        let src: usize = first.parse().map_err(|_| GraphError::Parse {
            line: line_no,
            message: format!("invalid node id '{first}'"),
        })?;
        let dst: usize = second.parse().map_err(|_| GraphError::Parse {
            line: line_no,
            message: format!("invalid node id '{second}'"),
        })?;
        pairs.push((src, dst));
    }
    Ok(Graph::from_undirected_edges(pairs))
}

/// The 78 undirected edges of Zachary's karate club, 0-based.
const KARATE_EDGES: [(usize, usize); 78] = [
    (0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3), (0, 4), (0, 5), (0, 6),
    (4, 6), (5, 6), (0, 7), (1, 7), (2, 7), (3, 7), (0, 8), (2, 8), (2, 9),
    (0, 10), (4, 10), (5, 10), (0, 11), (0, 12), (3, 12), (0, 13), (1, 13),
    (2, 13), (3, 13), (5, 16), (6, 16), (0, 17), (1, 17), (0, 19), (1, 19),
    (0, 21), (1, 21), (23, 25), (24, 25), (2, 27), (23, 27), (24, 27),
    (2, 28), (23, 29), (26, 29), (1, 30), (8, 30), (0, 31), (24, 31),
    (25, 31), (28, 31), (2, 32), (8, 32), (14, 32), (15, 32), (18, 32),
    (20, 32), (22, 32), (23, 32), (29, 32), (30, 32), (31, 32), (8, 33),
    (9, 33), (13, 33), (14, 33), (15, 33), (18, 33), (19, 33), (20, 33),
    (22, 33), (23, 33), (26, 33), (27, 33), (28, 33), (29, 33), (30, 33),
    (31, 33), (32, 33),
];

/// The standard Zachary karate club graph: 34 nodes, 156 directed edges.
pub fn karate_club() -> Graph {
    Graph::from_undirected_edges(KARATE_EDGES.iter().copied())
}

/// The structural matrices derived from a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StructureKind {
    /// Plain 0/1 adjacency.
    Adjacency,
    /// `D^{-1/2} A D^{-1/2}`.
    SymNormAdjacency,
    /// `(D+I)^{-1/2} (A+I) (D+I)^{-1/2}`.
    SelfLoopSymNormAdjacency,
    /// `D^{-1} A` (mean aggregation).
    RowStochastic,
    /// `D - A`.
    UnnormalizedLaplacian,
    /// `I - D^{-1/2} A D^{-1/2}`.
    SymNormLaplacian,
}

/// A structural matrix together with the kind that produced it.
#[derive(Debug, Clone)]
pub struct StructureMatrix {
    kind: StructureKind,
    matrix: DenseMatrix,
}

impl StructureMatrix {
    pub fn kind(&self) -> StructureKind {
        self.kind
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.matrix
    }
}

/// Realise a structural matrix of the graph. Isolated nodes get zero rows
/// in the degree-normalised kinds (`D^{-1/2}` and `D^{-1}` entries are 0
/// for degree-0 nodes).
pub fn structure_matrix(g: &Graph, kind: StructureKind) -> StructureMatrix {
    let n = g.node_count();
    let a = g.adjacency();
    let degrees = g.degrees();
    let inv_sqrt: Vec<f64> = degrees
        .iter()
        .map(|&d| if d > 0 { 1.0 / (d as f64).sqrt() } else { 0.0 })
        .collect();

    let matrix = match kind {
        StructureKind::Adjacency => a,
        StructureKind::SymNormAdjacency => {
            DenseMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * a[(i, j)] * inv_sqrt[j])
        }
        StructureKind::SelfLoopSymNormAdjacency => {
            let inv_hat: Vec<f64> = degrees
                .iter()
                .map(|&d| 1.0 / ((d + 1) as f64).sqrt())
                .collect();
            DenseMatrix::from_fn(n, n, |i, j| {
                let loops = if i == j { 1.0 } else { 0.0 };
                inv_hat[i] * (a[(i, j)] + loops) * inv_hat[j]
            })
        }
        StructureKind::RowStochastic => DenseMatrix::from_fn(n, n, |i, j| {
            if degrees[i] > 0 {
                a[(i, j)] / degrees[i] as f64
            } else {
                0.0
            }
        }),
        StructureKind::UnnormalizedLaplacian => DenseMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { degrees[i] as f64 } else { 0.0 };
            d - a[(i, j)]
        }),
        StructureKind::SymNormLaplacian => DenseMatrix::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - inv_sqrt[i] * a[(i, j)] * inv_sqrt[j]
        }),
    };
    StructureMatrix { kind, matrix }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power::power_iteration;

    #[test]
    fn single_line_gives_two_directed_edges() {
        let g = load_edge_list("0 1").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.directed_edge_count(), 2);
        assert_eq!(g.degrees(), &[1, 1]);
    }

    #[test]
    fn empty_input_gives_empty_graph() {
        let g = load_edge_list("").unwrap();
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.directed_edge_count(), 0);
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let g = load_edge_list("# header\n\n0 1 # trailing\n1 2\n").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.directed_edge_count(), 4);
    }

    #[test]
    fn bad_token_reports_line_number() {
        let err = load_edge_list("0 1\nx 2\n").unwrap_err();
        assert_eq!(err, GraphError::Parse {
            line: 2,
            message: "invalid node id 'x'".into()
        });
    }

    #[test]
    fn repeated_pairs_do_not_duplicate() {
        let g = load_edge_list("0 1\n1 0\n0 1\n").unwrap();
        assert_eq!(g.directed_edge_count(), 2);
    }

    #[test]
    fn id_gaps_leave_isolated_nodes() {
        let g = load_edge_list("0 5").unwrap();
        assert_eq!(g.node_count(), 6);
        assert_eq!(g.degrees(), &[1, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn karate_club_counts() {
        let g = karate_club();
        assert_eq!(g.node_count(), 34);
        assert_eq!(g.directed_edge_count(), 156);
        // Highest-degree node, counted once from the embedded table.
        assert_eq!(g.degrees().iter().copied().max(), Some(17));
        assert_eq!(g.degrees()[33], 17);
        assert_eq!(g.degrees()[0], 16);
    }

    #[test]
    fn karate_club_round_trips_through_edge_list_text() {
        let g = karate_club();
        let mut text = String::from("# zachary karate club\n");
        for &(src, dst) in g.edges() {
            if src < dst {
                text.push_str(&format!("{src} {dst}\n"));
            }
        }
        let loaded = load_edge_list(&text).unwrap();
        assert_eq!(loaded.node_count(), 34);
        assert_eq!(loaded.directed_edge_count(), 156);
        assert_eq!(loaded.edges(), g.edges());
        assert_eq!(loaded.degrees(), g.degrees());
    }

    #[test]
    fn two_node_laplacians() {
        let g = load_edge_list("0 1").unwrap();
        let lap = structure_matrix(&g, StructureKind::UnnormalizedLaplacian);
        assert_eq!(
            lap.matrix().entries(),
            &[1.0, -1.0, -1.0, 1.0]
        );
        let sym = structure_matrix(&g, StructureKind::SymNormAdjacency);
        assert_eq!(sym.matrix().entries(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn triangle_row_stochastic_is_half() {
        let g = load_edge_list("0 1\n1 2\n2 0").unwrap();
        let rs = structure_matrix(&g, StructureKind::RowStochastic);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.0 } else { 0.5 };
                assert_eq!(rs.matrix()[(i, j)], expect);
            }
        }
    }

    #[test]
    fn laplacian_nullspaces() {
        let g = karate_club();
        let n = g.node_count();
        let ones = DenseMatrix::from_fn(n, 1, |_, _| 1.0);
        let lun = structure_matrix(&g, StructureKind::UnnormalizedLaplacian);
        assert!(lun.matrix().matmul(&ones).frobenius_norm() < 1e-12);

        let d_half = DenseMatrix::from_fn(n, 1, |i, _| (g.degrees()[i] as f64).sqrt());
        let lsym = structure_matrix(&g, StructureKind::SymNormLaplacian);
        assert!(lsym.matrix().matmul(&d_half).frobenius_norm() < 1e-10);
    }

    #[test]
    fn row_stochastic_rows_sum_to_one() {
        let g = karate_club();
        let rs = structure_matrix(&g, StructureKind::RowStochastic);
        for i in 0..g.node_count() {
            let sum: f64 = rs.matrix().row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sym_laplacian_is_identity_minus_sym_adjacency() {
        let g = karate_club();
        let asym = structure_matrix(&g, StructureKind::SymNormAdjacency);
        let lsym = structure_matrix(&g, StructureKind::SymNormLaplacian);
        let diff = DenseMatrix::identity(g.node_count())
            .sub(asym.matrix())
            .sub(lsym.matrix());
        assert_eq!(diff.frobenius_norm(), 0.0);
    }

    #[test]
    fn karate_dominant_eigenvector_is_sqrt_degree() {
        let g = karate_club();
        let n = g.node_count();
        let asym = structure_matrix(&g, StructureKind::SymNormAdjacency);
        let x0 = DenseMatrix::from_fn(n, 1, |i, _| 1.0 + (i % 5) as f64);
        let r = power_iteration(asym.matrix(), &x0, 2000, 1e-10).unwrap();
        assert!(r.converged);
        assert!((r.dominant.value_re - 1.0).abs() < 1e-8);
        let mut expect = DenseMatrix::from_fn(n, 1, |i, _| (g.degrees()[i] as f64).sqrt());
        expect = expect.scale(1.0 / expect.frobenius_norm());
        let v = r.dominant.vector.as_ref().unwrap();
        assert!(v.sub(&expect).frobenius_norm() < 1e-8);
    }

    #[test]
    fn row_stochastic_dominant_eigenvector_is_ones() {
        let g = karate_club();
        let n = g.node_count();
        let rs = structure_matrix(&g, StructureKind::RowStochastic);
        let x0 = DenseMatrix::from_fn(n, 1, |i, _| 1.0 + (i % 7) as f64 * 0.1);
        let r = power_iteration(rs.matrix(), &x0, 5000, 1e-10).unwrap();
        assert!(r.converged);
        assert!((r.dominant.value_re - 1.0).abs() < 1e-8);
        let uniform = DenseMatrix::from_fn(n, 1, |_, _| 1.0 / (n as f64).sqrt());
        let v = r.dominant.vector.as_ref().unwrap();
        assert!(v.sub(&uniform).frobenius_norm() < 1e-7);
    }
}
