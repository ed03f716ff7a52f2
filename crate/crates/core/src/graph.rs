//! Oriented graphs, incidence matrices and admissible words.
//!
//! Vertices are `0..m`. Edges carry an initial vertex `I(e)` and a final vertex `F(e)` and are
//! labelled canonically by sorting on `(I, F)`, parallel edges keeping their input order.
//! A word `x_1 x_2 ... x_d` is admissible when `F(x_{k+1}) = I(x_k)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub initial: usize,
    pub terminal: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientedGraph {
    m: usize,
    edges: Vec<Edge>,
}

impl OrientedGraph {
    /// Builds a graph from `(I, F)` pairs and relabels the edges canonically.
    pub fn new(m: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        for (k, &(i, f)) in pairs.iter().enumerate() {
            if i >= m || f >= m {
                return Err(Error::InvalidGraph(format!(
                    "edge {k} = ({i}, {f}) refers to a vertex outside 0..{m}"
                )));
            }
        }
        let mut edges: Vec<Edge> = pairs.iter().map(|&(initial, terminal)| Edge { initial, terminal }).collect();
        edges.sort_by_key(|e| (e.initial, e.terminal));
        let g = OrientedGraph { m, edges };
        g.validate()?;
        Ok(g)
    }

    /// The graph with `Q_ij` edges from `i` to `j`.
    pub fn from_matrix(q: &IncidenceMatrix) -> Result<Self> {
        let mut pairs = Vec::new();
        for i in 0..q.dim() {
            for j in 0..q.dim() {
                let c = q.get(i, j);
                if c < 0 {
                    return Err(Error::InvalidGraph(format!("negative entry Q[{i}][{j}] = {c}")));
                }
                for _ in 0..c {
                    pairs.push((i, j));
                }
            }
        }
        Self::new(q.dim(), &pairs)
    }

    /// Every vertex needs at least one outgoing and one incoming edge.
    pub fn validate(&self) -> Result<()> {
        let mut out = vec![0usize; self.m];
        let mut inc = vec![0usize; self.m];
        for e in &self.edges {
            out[e.initial] += 1;
            inc[e.terminal] += 1;
        }
        for v in 0..self.m {
            if out[v] == 0 {
                return Err(Error::InvalidGraph(format!("vertex {v} has no outgoing edge")));
            }
            if inc[v] == 0 {
                return Err(Error::InvalidGraph(format!("vertex {v} has no incoming edge")));
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.m
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn initial(&self, e: EdgeId) -> usize {
        self.edges[e].initial
    }

    #[inline]
    pub fn terminal(&self, e: EdgeId) -> usize {
        self.edges[e].terminal
    }

    pub fn incidence(&self) -> IncidenceMatrix {
        let mut q = IncidenceMatrix::zeros(self.m);
        for e in &self.edges {
            q.entries[e.initial * self.m + e.terminal] += 1;
        }
        q
    }

    /// Edges leaving `v`, in label order.
    pub fn outgoing(&self, v: usize) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.iter().enumerate().filter(move |(_, e)| e.initial == v).map(|(k, _)| k)
    }

    /// Edges entering `v`, in label order.
    pub fn incoming(&self, v: usize) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.iter().enumerate().filter(move |(_, e)| e.terminal == v).map(|(k, _)| k)
    }

    /// Position of the first inadmissible junction, if any.
    pub fn check_word(&self, word: &[EdgeId]) -> Result<()> {
        for (k, &e) in word.iter().enumerate() {
            if e >= self.edges.len() {
                return Err(Error::Inadmissible { position: k });
            }
        }
        for k in 0..word.len().saturating_sub(1) {
            if self.terminal(word[k + 1]) != self.initial(word[k]) {
                return Err(Error::Inadmissible { position: k + 1 });
            }
        }
        Ok(())
    }

    /// All admissible words of length `d`, with `word[0] = x_1`, in lexicographic order of
    /// `(x_d, ..., x_1)`.
    pub fn enumerate_words(&self, d: usize) -> Vec<Vec<EdgeId>> {
        if d == 0 {
            return vec![Vec::new()];
        }
        // Build from the top letter down so the order is lexicographic from x_d.
        let mut words: Vec<Vec<EdgeId>> = (0..self.edges.len()).map(|e| vec![e]).collect();
        for _ in 1..d {
            let mut next = Vec::with_capacity(words.len() * 2);
            for w in &words {
                let below = self.terminal(*w.last().unwrap());
                for e in self.outgoing(below) {
                    let mut nw = w.clone();
                    nw.push(e);
                    next.push(nw);
                }
            }
            words = next;
        }
        for w in &mut words {
            w.reverse();
        }
        words
    }

    /// Combinatorial primitivity: some power of the adjacency pattern is positive.
    /// Wielandt's bound `(m-1)^2 + 1` on the exponent makes the check finite.
    pub fn is_primitive(&self) -> bool {
        let m = self.m;
        let mut adj = vec![false; m * m];
        for e in &self.edges {
            adj[e.initial * m + e.terminal] = true;
        }
        let mut pow = adj.clone();
        let bound = (m - 1) * (m - 1) + 1;
        for _ in 1..bound {
            if pow.iter().all(|&b| b) {
                return true;
            }
            let mut next = vec![false; m * m];
            for i in 0..m {
                for k in 0..m {
                    if pow[i * m + k] {
                        for j in 0..m {
                            if adj[k * m + j] {
                                next[i * m + j] = true;
                            }
                        }
                    }
                }
            }
            pow = next;
        }
        pow.iter().all(|&b| b)
    }
}

/// Square integer matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceMatrix {
    m: usize,
    entries: Vec<i64>,
}

impl IncidenceMatrix {
    pub fn zeros(m: usize) -> Self {
        IncidenceMatrix { m, entries: vec![0; m * m] }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::InvalidGraph("empty matrix".into()));
        }
        let mut entries = Vec::with_capacity(m * m);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != m {
                return Err(Error::InvalidGraph(format!("row {i} has {} entries, expected {m}", r.len())));
            }
            entries.extend_from_slice(r);
        }
        Ok(IncidenceMatrix { m, entries })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.m + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.m).map(|c| c.to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let m = self.m;
        let mut t = Self::zeros(m);
        for i in 0..m {
            for j in 0..m {
                t.entries[j * m + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.m, |i, j| self.get(i, j) as f64)
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> i128 {
        let m = self.m;
        let mut a: Vec<i128> = self.entries.iter().map(|&x| x as i128).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..m {
            if a[k * m + k] == 0 {
                let Some(p) = (k + 1..m).find(|&r| a[r * m + k] != 0) else {
                    return 0;
                };
                for c in 0..m {
                    a.swap(k * m + c, p * m + c);
                }
                sign = -sign;
            }
            for i in k + 1..m {
                for j in k + 1..m {
                    a[i * m + j] = (a[i * m + j] * a[k * m + k] - a[i * m + k] * a[k * m + j]) / prev;
                }
            }
            prev = a[k * m + k];
        }
        sign * a[m * m - 1]
    }

    /// Characteristic polynomial coefficients `c_0..c_m` of `det(zI - Q)`, monic, by
    /// Faddeev–LeVerrier in exact integer arithmetic.
    pub fn char_poly(&self) -> Vec<i128> {
        let m = self.m;
        let q: Vec<i128> = self.entries.iter().map(|&x| x as i128).collect();
        let mul = |a: &[i128], b: &[i128]| {
            let mut c = vec![0i128; m * m];
            for i in 0..m {
                for k in 0..m {
                    let aik = a[i * m + k];
                    if aik != 0 {
                        for j in 0..m {
                            c[i * m + j] += aik * b[k * m + j];
                        }
                    }
                }
            }
            c
        };
        let mut coeffs = vec![0i128; m + 1];
        coeffs[m] = 1;
        let mut mk = vec![0i128; m * m];
        for k in 1..=m {
            // M_k = Q M_{k-1} + c_{m-k+1} I
            let mut next = mul(&q, &mk);
            for i in 0..m {
                next[i * m + i] += coeffs[m - k + 1];
            }
            mk = next;
            let qm = mul(&q, &mk);
            let tr: i128 = (0..m).map(|i| qm[i * m + i]).sum();
            coeffs[m - k] = -tr / k as i128;
        }
        coeffs
    }

    /// Row-vector-free product `Q v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m).map(|i| (0..m).map(|j| self.get(i, j) as f64 * v[j]).sum()).collect()
    }

    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m).map(|j| (0..m).map(|i| self.get(i, j) as f64 * v[i]).sum()).collect()
    }
}

/// Serializable description of a graph: either an explicit edge list or an incidence matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSpec {
    Edges { m: usize, edges: Vec<[usize; 2]> },
    Matrix { matrix: Vec<Vec<i64>> },
}

impl GraphSpec {
    pub fn build(&self) -> Result<OrientedGraph> {
        match self {
            GraphSpec::Edges { m, edges } => {
                let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e[0], e[1])).collect();
                OrientedGraph::new(*m, &pairs)
            }
            GraphSpec::Matrix { matrix } => OrientedGraph::from_matrix(&IncidenceMatrix::from_rows(matrix)?),
        }
    }

    pub fn from_graph(g: &OrientedGraph) -> Self {
        GraphSpec::Edges {
            m: g.vertex_count(),
            edges: g.edges().iter().map(|e| [e.initial, e.terminal]).collect(),
        }
    }
}

/// The two-vertex example with incidence matrix `[[3,1],[1,3]]`.
pub fn example_qa() -> OrientedGraph {
    OrientedGraph::from_matrix(&IncidenceMatrix::from_rows(&[vec![3, 1], vec![1, 3]]).unwrap()).unwrap()
}

/// `[[2,1],[1,2]]`; used as the second matrix of the random examples.
pub fn example_qc() -> OrientedGraph {
    OrientedGraph::from_matrix(&IncidenceMatrix::from_rows(&[vec![2, 1], vec![1, 2]]).unwrap()).unwrap()
}

/// Three vertices, eigenvalues `(9 ± sqrt 17)/2` and `4`: three distinct expanding directions.
pub fn example_qb() -> OrientedGraph {
    OrientedGraph::from_matrix(
        &IncidenceMatrix::from_rows(&[vec![3, 1, 1], vec![1, 5, 1], vec![1, 1, 5]]).unwrap(),
    )
    .unwrap()
}
