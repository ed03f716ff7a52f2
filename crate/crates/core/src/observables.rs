//! Observables that depend on finitely many coordinates `x_1..x_d`, their cell integrals,
//! the map `f ↦ Φ_f⁺` and integrals against `m_Φ⁻`.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::flow::{self, CellValues, FlowState};
use crate::graph::{EdgeId, OrientedGraph};
use crate::linalg::{c, CVec};
use crate::measures::{inverse_on_plus, MinusMeasure, PlusMeasure};
use crate::spectral::SpectralData;
use crate::tower::{dd_to_f64, LevelTable, PeriodicTower, Tower};

/// `f(x) = constant + Σ coeff_w [x_1..x_d = w]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderObservable {
    pub depth: usize,
    /// Word (first letter `x_1`) to coefficient.
    pub terms: BTreeMap<Vec<EdgeId>, Complex64>,
    pub constant: Complex64,
}

impl CylinderObservable {
    pub fn new(g: &OrientedGraph, depth: usize, terms: Vec<(Vec<EdgeId>, Complex64)>, constant: Complex64) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (w, a) in terms {
            if w.len() != depth {
                return Err(Error::InvalidArgument(format!("word {w:?} does not have length {depth}")));
            }
            g.check_word(&w)?;
            if map.insert(w.clone(), a).is_some() {
                return Err(Error::InvalidArgument(format!("word {w:?} listed twice")));
            }
        }
        Ok(CylinderObservable { depth, terms: map, constant })
    }

    pub fn constant(a: Complex64) -> Self {
        CylinderObservable { depth: 0, terms: BTreeMap::new(), constant: a }
    }

    pub fn indicator(g: &OrientedGraph, word: Vec<EdgeId>) -> Result<Self> {
        let d = word.len();
        Self::new(g, d, vec![(word, c(1.0))], c(0.0))
    }

    /// Value on a point whose first coordinates are `word`.
    pub fn value(&self, word: &[EdgeId]) -> Complex64 {
        self.constant + self.terms.get(&word[..self.depth]).copied().unwrap_or_default()
    }

    pub fn value_at(&self, z: &FlowState) -> Complex64 {
        self.value(&z.window.edges[..self.depth.min(z.window.edges.len())])
    }

    /// The same function written at depth `d ≥ self.depth`.
    pub fn refine(&self, g: &OrientedGraph, d: usize) -> Result<Self> {
        if d < self.depth {
            return Err(Error::InvalidArgument("cannot lower the depth".into()));
        }
        let mut terms = BTreeMap::new();
        if d == self.depth {
            return Ok(self.clone());
        }
        for (w, &a) in &self.terms {
            for ext in extensions_above(g, w, d - self.depth) {
                terms.insert(ext, a);
            }
        }
        Ok(CylinderObservable { depth: d, terms, constant: self.constant })
    }

    pub fn add(&self, g: &OrientedGraph, other: &Self) -> Result<Self> {
        let d = self.depth.max(other.depth);
        let a = self.refine(g, d)?;
        let b = other.refine(g, d)?;
        let mut terms = a.terms;
        for (w, v) in b.terms {
            *terms.entry(w).or_default() += v;
        }
        Ok(CylinderObservable { depth: d, terms, constant: a.constant + b.constant })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        CylinderObservable {
            depth: self.depth,
            terms: self.terms.iter().map(|(w, &a)| (w.clone(), a * s)).collect(),
            constant: self.constant * s,
        }
    }

    /// `f ∘ σ`, which reads `x_2..x_{d+1}`.
    pub fn compose_shift(&self, g: &OrientedGraph) -> Self {
        let mut terms = BTreeMap::new();
        for (w, &a) in &self.terms {
            for e in g.outgoing(g.terminal(w[0])) {
                let mut ext = vec![e];
                ext.extend_from_slice(w);
                terms.insert(ext, a);
            }
        }
        let depth = if self.depth == 0 { 0 } else { self.depth + 1 };
        CylinderObservable { depth, terms, constant: self.constant }
    }

    /// `∫ f dν`.
    pub fn mean(&self, sd: &SpectralData, g: &OrientedGraph) -> Complex64 {
        let mut s = self.constant;
        for (w, &a) in &self.terms {
            let k = w.len() as i32;
            let first = w[0];
            let last = w[w.len() - 1];
            s += a * sd.la[g.initial(last)] * sd.h[g.terminal(first)] * sd.rho.powi(-k);
        }
        s
    }

    /// `f - ∫ f dν`.
    pub fn centered(&self, sd: &SpectralData, g: &OrientedGraph) -> Self {
        let mut out = self.clone();
        out.constant -= self.mean(sd, g);
        out
    }

    /// `∫ f dν` on any tower: a cylinder on `x_1..x_k` has measure `L_1[F(x_1)] Λ_k[I(x_k)]`.
    pub fn mean_in(&self, t: &dyn Tower) -> Result<Complex64> {
        self.check_tower(t)?;
        let mut s = self.constant;
        for (w, &a) in &self.terms {
            let k = w.len() as i64;
            let first = t.graph(1).terminal(w[0]);
            let last = t.graph(k).initial(w[w.len() - 1]);
            s += a * dd_to_f64(t.length(1, first)) * t.colength(k, last);
        }
        Ok(s)
    }

    pub fn centered_in(&self, t: &dyn Tower) -> Result<Self> {
        let mut out = self.clone();
        out.constant -= self.mean_in(t)?;
        Ok(out)
    }

    /// Depth-1 function of the vertices `(I(x_1), F(x_1))` on the level-1 graph of `t`.
    pub fn vertex_pair_function(t: &dyn Tower, phi: &[Vec<f64>]) -> Result<Self> {
        let g = t.graph(1);
        let m = g.vertex_count();
        if phi.len() != m || phi.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch { expected: m, got: phi.len() });
        }
        let terms = (0..g.edge_count()).map(|e| (vec![e], c(phi[g.initial(e)][g.terminal(e)]))).collect();
        Self::new(g, 1, terms, c(0.0))
    }

    /// Every word is admissible for the graphs at levels `1..=d` of `t`.
    pub fn check_tower(&self, t: &dyn Tower) -> Result<()> {
        t.check_level(self.depth as i64 + 1)?;
        for w in self.terms.keys() {
            for (k, &e) in w.iter().enumerate() {
                let g = t.graph(k as i64 + 1);
                if e >= g.edge_count() {
                    return Err(Error::Inadmissible { position: k });
                }
                if k > 0 && g.terminal(e) != t.graph(k as i64).initial(w[k - 1]) {
                    return Err(Error::Inadmissible { position: k });
                }
            }
        }
        Ok(())
    }
}

/// Words `(w, y_1, ..., y_k)` extending `w` upward by `k` admissible letters.
fn extensions_above(g: &OrientedGraph, w: &[EdgeId], k: usize) -> Vec<Vec<EdgeId>> {
    let mut out = vec![w.to_vec()];
    for _ in 0..k {
        let mut next = Vec::new();
        for u in &out {
            let below = g.initial(*u.last().unwrap());
            for e in g.incoming(below) {
                let mut v = u.clone();
                v.push(e);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Cell integrals `∫_γ f dΦ₁⁺`. Level `j ≤ d` cells depend on `x_j..x_d`; above depth they
/// depend only on the vertex `F(x_j)` and satisfy `v(j+1) = A_j v(j)`.
#[derive(Debug, Clone)]
pub struct CellIntegrals {
    pub depth: usize,
    pub constant: Complex64,
    word_values: HashMap<Vec<EdgeId>, Complex64>,
    /// `lower[j-1]`: non-constant part of level-`j` cells keyed by `(x_j..x_d)`.
    lower: Vec<HashMap<Vec<EdgeId>, Complex64>>,
    /// Rows `v(j)` for `j > d`.
    pub upper: LevelTable,
}

impl CellIntegrals {
    pub fn new(t: &dyn Tower, f: &CylinderObservable) -> Result<Self> {
        let d = f.depth;
        let (_, top) = t.levels();
        f.check_tower(t)?;
        let m = t.dim();
        let g1 = t.graph(1);
        let mut lower: Vec<HashMap<Vec<EdgeId>, Complex64>> = Vec::with_capacity(d);
        if d > 0 {
            let mut first = HashMap::new();
            for (w, &a) in &f.terms {
                let len = dd_to_f64(t.length(1, g1.terminal(w[0])));
                first.insert(w.clone(), a * len);
            }
            lower.push(first);
            for _ in 1..d {
                let mut next: HashMap<Vec<EdgeId>, Complex64> = HashMap::new();
                for (k, &v) in lower.last().unwrap() {
                    *next.entry(k[1..].to_vec()).or_default() += v;
                }
                lower.push(next);
            }
        }
        let dd = d as i64 + 1;
        let mut base = vec![Complex64::new(0.0, 0.0); m];
        if let Some(last) = lower.last() {
            let g = t.graph(d as i64);
            for (k, &v) in last {
                base[g.initial(k[0])] += v;
            }
        }
        for (i, b) in base.iter_mut().enumerate() {
            *b += f.constant * dd_to_f64(t.length(dd, i));
        }
        let mut rows = vec![base];
        for j in dd..top {
            let a = t.incidence(j);
            let w = rows.last().unwrap();
            let nxt = (0..m).map(|i| (0..m).map(|k| w[k] * a.get(i, k) as f64).sum()).collect();
            rows.push(nxt);
        }
        let word_values = f.terms.iter().map(|(w, &a)| (w.clone(), a)).collect();
        Ok(CellIntegrals { depth: d, constant: f.constant, word_values, lower, upper: LevelTable { lo: dd, rows } })
    }

    /// `v(d+1)`.
    pub fn base(&self) -> &[Complex64] {
        &self.upper.rows[0]
    }

    /// `v(n)` for `n > d`.
    pub fn level(&self, n: i64) -> Result<&[Complex64]> {
        self.upper.row(n)
    }

    /// Integral over the level-`j` cell whose coordinates from `j` on start with `key`.
    pub fn cell_by_key(&self, t: &dyn Tower, j: i64, key: &[EdgeId]) -> Complex64 {
        let f = t.graph(j).terminal(key[0]);
        let lin = self.lower[(j - 1) as usize].get(key).copied().unwrap_or_default();
        lin + self.constant * dd_to_f64(t.length(j, f))
    }

    fn f_value(&self, word: &[EdgeId]) -> Complex64 {
        self.constant + self.word_values.get(word).copied().unwrap_or_default()
    }
}

impl CellValues for CellIntegrals {
    fn cell(&self, t: &dyn Tower, level: i64, e: EdgeId, z: &FlowState) -> Complex64 {
        let d = self.depth as i64;
        if level > d {
            return self.upper.get(level, t.graph(level).terminal(e));
        }
        let mut key = Vec::with_capacity((d - level + 1) as usize);
        key.push(e);
        for j in level + 1..=d {
            key.push(z.digit(j));
        }
        self.cell_by_key(t, level, &key)
    }

    fn bottom(&self, _t: &dyn Tower, z: &FlowState) -> Complex64 {
        let word = &z.window.edges[..self.depth];
        self.f_value(word) * dd_to_f64(z.offset)
    }
}

/// `v(d+1)`: integrals over level-`(d+1)` cells.
pub fn base_cell_integrals(t: &dyn Tower, f: &CylinderObservable) -> Result<Vec<Complex64>> {
    Ok(CellIntegrals::new(t, f)?.base().to_vec())
}

/// `Φ_f⁺ = ℐ(Q^{-d} P⁺ v(d+1))`.
pub fn xi_plus(sd: &SpectralData, t: &PeriodicTower, f: &CylinderObservable) -> Result<PlusMeasure> {
    let base = base_cell_integrals(t, f)?;
    let mut w = CVec::from_vec(sd.project_plus(&base)?);
    let k = inverse_on_plus(sd);
    for _ in 0..f.depth {
        w = &k * w;
    }
    Ok(PlusMeasure { v: w.iter().copied().collect() })
}

/// `Σ_i v(n)_i ṽ^{(1-n)}_i` at `n = n_max`.
pub fn integral_against(sd: &SpectralData, t: &PeriodicTower, f: &CylinderObservable, mi: &MinusMeasure, n_max: i64) -> Result<Complex64> {
    let n = n_max.max(f.depth as i64 + 1);
    let ci = CellIntegrals::new(t, f)?;
    let vn = ci.level(n)?;
    let vt = mi.level_vector(sd, 1 - n)?;
    Ok(vn.iter().zip(&vt).map(|(a, b)| a * b).sum())
}

/// `Σ_i m_{Φ⁻(i)}(f) Φ⁺(i)` with the dual basis.
pub fn xi_plus_by_duality(sd: &SpectralData, t: &PeriodicTower, f: &CylinderObservable, n_max: i64) -> Result<PlusMeasure> {
    let m = sd.dim();
    let mut v = vec![Complex64::new(0.0, 0.0); m];
    for (p, mi) in PlusMeasure::basis(sd).iter().zip(MinusMeasure::dual_basis(sd)) {
        let coef = integral_against(sd, t, f, &mi, n_max)?;
        for i in 0..m {
            v[i] += coef * p.v[i];
        }
    }
    Ok(PlusMeasure { v })
}

/// `α(f) = m_{Φ₂⁻}(f)`, read at the lowest exact level: higher levels cancel a Perron part of
/// size `(ρ/|μ₂|)ⁿ`.
pub fn alpha(sd: &SpectralData, t: &PeriodicTower, f: &CylinderObservable) -> Result<Complex64> {
    integral_against(sd, t, f, &MinusMeasure::second(sd)?, 0)
}

/// `sup |f| + C_f`, where `C_f` is the largest difference of integrals over two cells of the same
/// level ending at the same vertex.
pub fn weak_lipschitz_norm(t: &PeriodicTower, f: &CylinderObservable) -> Result<f64> {
    let g = &t.graph;
    let d = f.depth;
    let words: Vec<Vec<EdgeId>> = if d == 0 { vec![vec![]] } else { g.enumerate_words(d) };
    let sup = words.iter().map(|w| f.value(w).norm()).fold(0.0, f64::max);
    let ci = CellIntegrals::new(t, f)?;
    let mut cf: f64 = 0.0;
    for n in 1..=d {
        let keys = g.enumerate_words(d - n + 1);
        let mut by_vertex: Vec<Vec<Complex64>> = vec![Vec::new(); g.vertex_count()];
        for k in &keys {
            by_vertex[g.terminal(k[0])].push(ci.cell_by_key(t, n as i64, k));
        }
        cf = cf.max(spread(&by_vertex));
    }
    // Cells below level 1: f is constant on each, so only the set of reachable words matters.
    let m = g.vertex_count();
    let mut reach: Vec<Vec<bool>> = (0..m).map(|i| (0..m).map(|j| i == j).collect()).collect();
    let fmax = words.iter().map(|w| f.value(w).norm()).fold(0.0, f64::max);
    let mut n = 0i64;
    loop {
        // Vertices F(x_1) reachable from a level-n cell ending at i.
        let mut next = vec![vec![false; m]; m];
        for i in 0..m {
            for (k, &r) in reach[i].iter().enumerate() {
                if r {
                    for e in g.incoming(k) {
                        next[i][g.initial(e)] = true;
                    }
                }
            }
        }
        reach = next;
        let mut lmax: f64 = 0.0;
        for i in 0..m {
            let len = dd_to_f64(t.length(n, i));
            lmax = lmax.max(len);
            let vals: Vec<Complex64> =
                words.iter().filter(|w| d == 0 || reach[i][g.terminal(w[0])]).map(|w| f.value(w) * len).collect();
            cf = cf.max(spread(&[vals]));
        }
        if 2.0 * fmax * lmax < cf * 1e-3 || n < -64 || fmax == 0.0 {
            break;
        }
        n -= 1;
    }
    Ok(sup + cf)
}

fn spread(groups: &[Vec<Complex64>]) -> f64 {
    let mut s: f64 = 0.0;
    for g in groups {
        for a in g {
            for b in g {
                s = s.max((a - b).norm());
            }
        }
    }
    s
}

/// `∫_0^T f(h_t x) dt` summed cell by cell along the orbit.
pub fn ergodic_integral_slow(t: &dyn Tower, f: &CylinderObservable, start: &FlowState, time: f64) -> Result<Complex64> {
    let mut s = start.clone();
    s.extend_to(t, f.depth as i64)?;
    let mut rem = TwoFloat::from(time);
    let mut acc = Complex64::new(0.0, 0.0);
    loop {
        let len = t.length(1, s.vertex(t));
        let room = len - s.offset;
        let val = f.value_at(&s);
        if rem <= room {
            acc += val * dd_to_f64(rem);
            return Ok(acc);
        }
        acc += val * dd_to_f64(room);
        rem -= room;
        let next = loop {
            match flow::successor(t, &s.window) {
                Ok(w) => break w,
                Err(Error::MaxPathSignal) => {
                    let top = s.top();
                    s.extend_to(t, top + 1)?;
                }
                Err(e) => return Err(e),
            }
        };
        s.window = next;
        s.offset = TwoFloat::from(0.0);
    }
}

/// `∫_0^T f(h_t x) dt` by telescoping over whole cells.
pub fn ergodic_integral(t: &dyn Tower, ci: &CellIntegrals, start: &FlowState, time: f64) -> Result<Complex64> {
    let mut s = start.clone();
    s.extend_to(t, ci.depth as i64)?;
    let end = flow::flow(t, &s, TwoFloat::from(time))?;
    flow::value_between(ci, t, &s, &end)
}

/// Serialized observable: `{depth, terms: [{word, coeff: [re, im]}], constant, center}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub depth: usize,
    #[serde(default)]
    pub terms: Vec<TermSpec>,
    #[serde(default)]
    pub constant: [f64; 2],
    /// Subtract the Parry mean.
    #[serde(default)]
    pub center: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub word: Vec<EdgeId>,
    pub coeff: [f64; 2],
}

impl ObservableSpec {
    pub fn build(&self, sd: &SpectralData, g: &OrientedGraph) -> Result<CylinderObservable> {
        let terms = self.terms.iter().map(|t| (t.word.clone(), Complex64::new(t.coeff[0], t.coeff[1]))).collect();
        let f = CylinderObservable::new(g, self.depth, terms, Complex64::new(self.constant[0], self.constant[1]))?;
        Ok(if self.center { f.centered(sd, g) } else { f })
    }

    /// Builds against the level graphs of `t`, centering with its Parry measure.
    pub fn build_in(&self, t: &dyn Tower) -> Result<CylinderObservable> {
        let mut terms = BTreeMap::new();
        for term in &self.terms {
            if term.word.len() != self.depth {
                return Err(Error::InvalidArgument(format!("word {:?} does not have length {}", term.word, self.depth)));
            }
            if terms.insert(term.word.clone(), Complex64::new(term.coeff[0], term.coeff[1])).is_some() {
                return Err(Error::InvalidArgument(format!("word {:?} listed twice", term.word)));
            }
        }
        let f = CylinderObservable { depth: self.depth, terms, constant: Complex64::new(self.constant[0], self.constant[1]) };
        f.check_tower(t)?;
        if self.center {
            f.centered_in(t)
        } else {
            Ok(f)
        }
    }
}
