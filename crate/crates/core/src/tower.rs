//! Level structure shared by the periodic compactum and the random (graph-sequence) compacta.
//!
//! Level `j` carries the graph whose edges are the admissible values of the coordinate `x_j`.
//! The level-`j` cell of a point fixes `x_t` for `t ≥ j`; its length (the value of `Φ₁⁺`)
//! depends only on `F(x_j)`. Co-lengths are the values of `Φ₁⁻` on `γ⁻_j`, indexed by `I(x_j)`.

use num_complex::Complex64;
use rand::Rng;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, IncidenceMatrix, OrientedGraph};
use crate::ordering::VershikOrdering;
use crate::spectral::SpectralData;

pub fn dd_to_f64(x: TwoFloat) -> f64 {
    x.hi() + x.lo()
}

/// Double-double quotient by long division; the library operator loses the low word.
pub fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}

pub trait Tower: Send + Sync {
    fn dim(&self) -> usize;
    /// Inclusive range of levels with data.
    fn levels(&self) -> (i64, i64);
    fn graph(&self, level: i64) -> &OrientedGraph;
    fn ordering(&self, level: i64) -> &VershikOrdering;
    /// `Φ₁⁺` of a level-`level` cell whose top edge ends at `v`.
    fn length(&self, level: i64, v: usize) -> TwoFloat;
    /// `Φ₁⁻` of `γ⁻_level` whose edge `x_level` starts at `v`.
    fn colength(&self, level: i64, v: usize) -> f64;

    fn incidence(&self, level: i64) -> IncidenceMatrix {
        self.graph(level).incidence()
    }

    /// Total length of the siblings preceding `e` inside its parent cell, at level `level`.
    fn prefix_length(&self, level: i64, e: EdgeId) -> TwoFloat {
        let g = self.graph(level);
        let mut s = TwoFloat::from(0.0);
        for &c in self.ordering(level).children(g.initial(e)) {
            if c == e {
                break;
            }
            s += self.length(level, g.terminal(c));
        }
        s
    }

    fn check_level(&self, level: i64) -> Result<()> {
        let (lo, hi) = self.levels();
        if level < lo || level > hi {
            Err(Error::OutOfWindow { lo, hi, level })
        } else {
            Ok(())
        }
    }
}

/// The stationary tower of a single primitive graph: lengths `h ρ^{j-1}`, co-lengths `λ ρ^{-j}`.
#[derive(Debug, Clone)]
pub struct PeriodicTower {
    pub graph: OrientedGraph,
    pub ordering: VershikOrdering,
    pub sd: SpectralData,
    lo: i64,
    lengths: Vec<Vec<TwoFloat>>,
    prefixes: Vec<Vec<TwoFloat>>,
    colengths: Vec<Vec<f64>>,
}

impl PeriodicTower {
    pub fn new(graph: OrientedGraph, ordering: VershikOrdering, sd: SpectralData) -> Self {
        let log_rho = sd.rho.log10();
        let span = ((200.0 / log_rho).floor() as i64).clamp(8, 400);
        let (lo, hi) = (1 - span, 1 + span);
        let m = sd.dim();
        let n = (hi - lo + 1) as usize;
        let mut lengths = vec![vec![TwoFloat::from(0.0); m]; n];
        let one = (1 - lo) as usize;
        lengths[one] = sd.h_dd.clone();
        let rinv = dd_div(TwoFloat::from(1.0), sd.rho_dd);
        for k in one + 1..n {
            lengths[k] = lengths[k - 1].iter().map(|&x| x * sd.rho_dd).collect();
        }
        for k in (0..one).rev() {
            lengths[k] = lengths[k + 1].iter().map(|&x| x * rinv).collect();
        }
        let mut colengths = vec![vec![0.0; m]; n];
        for (k, row) in colengths.iter_mut().enumerate() {
            let j = lo + k as i64;
            let s = sd.rho.powi(-(j as i32));
            for (v, x) in row.iter_mut().enumerate() {
                *x = sd.la[v] * s;
            }
        }
        let prefixes = lengths
            .iter()
            .map(|row| {
                let mut p = vec![TwoFloat::from(0.0); graph.edge_count()];
                for v in 0..m {
                    let mut acc = TwoFloat::from(0.0);
                    for &e in ordering.children(v) {
                        p[e] = acc;
                        acc += row[graph.terminal(e)];
                    }
                }
                p
            })
            .collect();
        PeriodicTower { graph, ordering, sd, lo, lengths, prefixes, colengths }
    }

    pub fn of_graph(graph: &OrientedGraph) -> Result<Self> {
        let sd = SpectralData::of_graph(graph)?;
        Ok(Self::new(graph.clone(), VershikOrdering::canonical(graph), sd))
    }
}

impl Tower for PeriodicTower {
    fn dim(&self) -> usize {
        self.sd.dim()
    }
    fn levels(&self) -> (i64, i64) {
        (self.lo, self.lo + self.lengths.len() as i64 - 1)
    }
    fn graph(&self, _level: i64) -> &OrientedGraph {
        &self.graph
    }
    fn ordering(&self, _level: i64) -> &VershikOrdering {
        &self.ordering
    }
    #[inline]
    fn length(&self, level: i64, v: usize) -> TwoFloat {
        self.lengths[(level - self.lo) as usize][v]
    }
    #[inline]
    fn colength(&self, level: i64, v: usize) -> f64 {
        self.colengths[(level - self.lo) as usize][v]
    }
    fn incidence(&self, _level: i64) -> IncidenceMatrix {
        self.sd.q.clone()
    }
    #[inline]
    fn prefix_length(&self, level: i64, e: EdgeId) -> TwoFloat {
        self.prefixes[(level - self.lo) as usize][e]
    }
}

/// Values of a finitely additive measure on level cells: `rows[j - lo][v]` is the value of a
/// level-`j` cell whose top edge ends at `v`. Values are holonomy invariant, so the vertex
/// determines them.
#[derive(Debug, Clone)]
pub struct LevelTable {
    pub lo: i64,
    pub rows: Vec<Vec<Complex64>>,
}

impl LevelTable {
    pub fn hi(&self) -> i64 {
        self.lo + self.rows.len() as i64 - 1
    }

    #[inline]
    pub fn get(&self, level: i64, v: usize) -> Complex64 {
        self.rows[(level - self.lo) as usize][v]
    }

    pub fn row(&self, level: i64) -> Result<&[Complex64]> {
        if level < self.lo || level > self.hi() {
            return Err(Error::OutOfWindow { lo: self.lo, hi: self.hi(), level });
        }
        Ok(&self.rows[(level - self.lo) as usize])
    }
}

fn choose_weighted<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        if u < w {
            return k;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// Uniform sample of `[0, len)` with double-double resolution.
pub fn uniform_dd<R: Rng + ?Sized>(rng: &mut R, len: TwoFloat) -> TwoFloat {
    let a: f64 = rng.gen();
    let b: f64 = rng.gen();
    let u = TwoFloat::new_add(a, b * f64::EPSILON * 0.5);
    let x = len * u;
    if x >= len {
        TwoFloat::from(0.0)
    } else {
        x
    }
}

/// `x_level` drawn from its marginal under the Parry measure: weight `L[F(e)] Λ[I(e)]`.
pub fn sample_marginal<R: Rng + ?Sized>(t: &dyn Tower, level: i64, rng: &mut R) -> EdgeId {
    let g = t.graph(level);
    let w: Vec<f64> = g
        .edges()
        .iter()
        .map(|e| dd_to_f64(t.length(level, e.terminal)) * t.colength(level, e.initial))
        .collect();
    choose_weighted(rng, &w)
}

/// `x_level` given `x_{level+1}`: among edges leaving `parent`, weight `L[F(e)]`.
pub fn sample_child<R: Rng + ?Sized>(t: &dyn Tower, level: i64, parent: usize, rng: &mut R) -> EdgeId {
    let kids = t.ordering(level).children(parent);
    let g = t.graph(level);
    let w: Vec<f64> = kids.iter().map(|&e| dd_to_f64(t.length(level, g.terminal(e)))).collect();
    kids[choose_weighted(rng, &w)]
}

/// `x_level` given `x_{level-1}`: among edges ending at `below`, weight `Λ_level[I(e)]`.
pub fn sample_parent<R: Rng + ?Sized>(t: &dyn Tower, level: i64, below: usize, rng: &mut R) -> EdgeId {
    let g = t.graph(level);
    let cands: Vec<EdgeId> = g.incoming(below).collect();
    let w: Vec<f64> = cands.iter().map(|&e| t.colength(level, g.initial(e))).collect();
    cands[choose_weighted(rng, &w)]
}

/// Digits `x_bottom..=x_top` (returned bottom first) from the Parry measure.
pub fn sample_digits<R: Rng + ?Sized>(t: &dyn Tower, bottom: i64, top: i64, rng: &mut R) -> Vec<EdgeId> {
    let n = (top - bottom + 1) as usize;
    let mut out = vec![0; n];
    out[n - 1] = sample_marginal(t, top, rng);
    for k in (0..n - 1).rev() {
        let level = bottom + k as i64;
        let parent = t.graph(level + 1).terminal(out[k + 1]);
        out[k] = sample_child(t, level, parent, rng);
    }
    out
}
