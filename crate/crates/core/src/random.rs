//! Random Markov compacta. A bi-infinite sequence `ω` of graphs on a common vertex set is drawn
//! i.i.d. from a finite list; level `j` of the compactum `X(ω)` carries the graph `ω_j`.
//!
//! The renormalization cocycle is `𝔸(n, ω) = A(ω_n)⋯A(ω_1)`. Its Lyapunov spectrum replaces the
//! eigenvalues of `Q`, and the expanding Oseledets spaces replace `E⁺`. Measures over `ω` are
//! carried by a [`SequenceTower`], which also stores orthonormal frames for the fastest directions
//! pushed forward from the far past (`F_j`) and backward by transposes from the far future (`G_j`).

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::flow::{self, CellValues, Extension, FlowState};
use crate::graph::{GraphSpec, IncidenceMatrix, OrientedGraph};
use crate::limit::{self, Audit, Deviation, LimitConfig, LimitReport, Scale};
use crate::measures::build_table;
use crate::observables::{CellIntegrals, CylinderObservable};
use crate::ordering::{OrderingSpec, VershikOrdering};
use crate::stats::{self, MannKendall, SlopeEstimate};
use crate::tower::{dd_div, dd_to_f64, LevelTable, Tower};

type C = Complex64;

/// A finite list of graphs with probabilities; `ω_n` are i.i.d. draws, reproducible from `seed`.
#[derive(Debug, Clone)]
pub struct GraphSequence {
    pub graphs: Vec<OrientedGraph>,
    pub orderings: Vec<VershikOrdering>,
    pub incidences: Vec<IncidenceMatrix>,
    pub probs: Vec<f64>,
    pub seed: u64,
    mats: Vec<DMatrix<f64>>,
    cumulative: Vec<f64>,
}

impl GraphSequence {
    pub fn new(graphs: Vec<OrientedGraph>, orderings: Vec<VershikOrdering>, probs: Vec<f64>, seed: u64) -> Result<Self> {
        if graphs.is_empty() {
            return Err(Error::InvalidGraph("empty graph list".into()));
        }
        if orderings.len() != graphs.len() || probs.len() != graphs.len() {
            return Err(Error::Config(format!(
                "{} graphs, {} orderings, {} probabilities",
                graphs.len(),
                orderings.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::Config("probabilities must be non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("probabilities sum to {total}, not 1")));
        }
        let m = graphs[0].vertex_count();
        let mut incidences = Vec::new();
        for (k, g) in graphs.iter().enumerate() {
            if g.vertex_count() != m {
                return Err(Error::InvalidGraph(format!("graph {k} has {} vertices, expected {m}", g.vertex_count())));
            }
            let q = g.incidence();
            let det = q.det();
            if det == 0 {
                return Err(Error::NotInvertible { det });
            }
            incidences.push(q);
        }
        let positive = (0..graphs.len())
            .any(|k| probs[k] > 0.0 && (0..m).all(|i| (0..m).all(|j| incidences[k].get(i, j) > 0)));
        if !positive {
            return Err(Error::InvalidGraph("no graph of positive probability has a positive incidence matrix".into()));
        }
        let mats = incidences.iter().map(|q| q.to_f64()).collect();
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(GraphSequence { graphs, orderings, incidences, probs, seed, mats, cumulative })
    }

    /// The constant sequence of one graph with its canonical ordering.
    pub fn constant(g: &OrientedGraph) -> Result<Self> {
        Self::new(vec![g.clone()], vec![VershikOrdering::canonical(g)], vec![1.0], 0)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GraphSequence { seed, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        self.graphs[0].vertex_count()
    }

    /// Index of the graph `ω_n`.
    pub fn symbol(&self, n: i64) -> usize {
        if self.graphs.len() == 1 {
            return 0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(limit::substream(self.seed, n as u64));
        let u: f64 = rng.gen();
        for (k, &c) in self.cumulative.iter().enumerate() {
            if u < c && self.probs[k] > 0.0 {
                return k;
            }
        }
        self.probs.iter().rposition(|&p| p > 0.0).unwrap()
    }

    /// `A(ω_n)`.
    pub fn matrix(&self, n: i64) -> &DMatrix<f64> {
        &self.mats[self.symbol(n)]
    }

    pub fn incidence(&self, n: i64) -> &IncidenceMatrix {
        &self.incidences[self.symbol(n)]
    }
}

/// `ω_n` for `n ∈ [lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphSequenceWindow {
    pub lo: i64,
    pub symbols: Vec<usize>,
}

impl GraphSequenceWindow {
    pub fn hi(&self) -> i64 {
        self.lo + self.symbols.len() as i64 - 1
    }

    pub fn get(&self, n: i64) -> Result<usize> {
        if n < self.lo || n > self.hi() {
            return Err(Error::OutOfWindow { lo: self.lo, hi: self.hi(), level: n });
        }
        Ok(self.symbols[(n - self.lo) as usize])
    }
}

pub fn sample_sequence(seq: &GraphSequence, lo: i64, hi: i64) -> GraphSequenceWindow {
    GraphSequenceWindow { lo, symbols: (lo..=hi).map(|n| seq.symbol(n)).collect() }
}

/// JSON form `{graphs, orderings?, probs, seed}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub graphs: Vec<GraphSpec>,
    #[serde(default)]
    pub orderings: Option<Vec<Option<OrderingSpec>>>,
    pub probs: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl SequenceSpec {
    pub fn build(&self) -> Result<GraphSequence> {
        let graphs: Vec<OrientedGraph> = self.graphs.iter().map(|g| g.build()).collect::<Result<_>>()?;
        let mut orderings = Vec::new();
        for (k, g) in graphs.iter().enumerate() {
            let spec = self.orderings.as_ref().and_then(|o| o.get(k).cloned().flatten());
            orderings.push(match spec {
                Some(s) => s.build(g)?,
                None => VershikOrdering::canonical(g),
            });
        }
        GraphSequence::new(graphs, orderings, self.probs.clone(), self.seed)
    }
}

/// Products of the renormalization cocycle along a sequence.
#[derive(Debug, Clone, Copy)]
pub struct RenormCocycle<'a> {
    pub seq: &'a GraphSequence,
}

impl<'a> RenormCocycle<'a> {
    pub fn new(seq: &'a GraphSequence) -> Self {
        RenormCocycle { seq }
    }

    /// `𝔸(n, σ^start ω)`; negative `n` gives `𝔸(-n, σ^{start+n} ω)^{-1}`.
    pub fn product(&self, start: i64, n: i64) -> Result<DMatrix<f64>> {
        let m = self.seq.dim();
        if n < 0 {
            return self
                .product(start + n, -n)?
                .try_inverse()
                .ok_or_else(|| Error::IllConditioned("cocycle product is singular".into()));
        }
        let mut p = DMatrix::identity(m, m);
        for k in 1..=n {
            p = self.seq.matrix(start + k) * p;
        }
        Ok(p)
    }

    /// `𝔸ᵗ(n, σ^start ω) = 𝔸(n, σ^start ω)ᵗ`.
    pub fn transpose_product(&self, start: i64, n: i64) -> Result<DMatrix<f64>> {
        Ok(self.product(start, n)?.transpose())
    }

    /// `𝔸(n, σ^start ω)` in exact integer arithmetic.
    pub fn exact_product(&self, start: i64, n: usize) -> Result<Vec<Vec<i128>>> {
        let m = self.seq.dim();
        let mut p: Vec<Vec<i128>> = (0..m).map(|i| (0..m).map(|j| (i == j) as i128).collect()).collect();
        for k in 1..=n as i64 {
            let a = self.seq.incidence(start + k);
            let mut next = vec![vec![0i128; m]; m];
            for i in 0..m {
                for j in 0..m {
                    let mut s = 0i128;
                    for l in 0..m {
                        s = (a.get(i, l) as i128)
                            .checked_mul(p[l][j])
                            .and_then(|x| s.checked_add(x))
                            .ok_or_else(|| Error::InvalidArgument(format!("integer overflow at step {k}")))?;
                    }
                    next[i][j] = s;
                }
            }
            p = next;
        }
        Ok(p)
    }
}

pub fn int_matmul(a: &[Vec<i128>], b: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let m = a.len();
    (0..m).map(|i| (0..m).map(|j| (0..m).map(|l| a[i][l] * b[l][j]).sum()).collect()).collect()
}

#[derive(Debug, Clone)]
pub struct LyapunovConfig {
    pub horizon: usize,
    pub reorth_period: usize,
    /// Steps discarded before averaging.
    pub burn_in: usize,
    /// Block length of the bootstrap, in steps.
    pub block: usize,
    pub reps: usize,
    pub seed: u64,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        LyapunovConfig { horizon: 10_000, reorth_period: 1, burn_in: 200, block: 100, reps: 1000, seed: 17 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Exponents {
    pub values: Vec<f64>,
    pub ci: Vec<[f64; 2]>,
    pub transpose_values: Vec<f64>,
    pub transpose_ci: Vec<[f64; 2]>,
    pub horizon: usize,
}

impl Exponents {
    /// Number of positive exponents; every exponent must stay away from zero.
    pub fn dim_plus(&self) -> Result<usize> {
        for (i, c) in self.ci.iter().enumerate() {
            if c[0] <= 0.0 && c[1] >= 0.0 {
                return Err(Error::NoGap { index: i, next: i, detail: format!("interval [{}, {}] contains 0", c[0], c[1]) });
            }
        }
        Ok(self.values.iter().filter(|&&x| x > 0.0).count())
    }

    /// The second exponent is positive and separated from its neighbours.
    pub fn check_second_simple(&self) -> Result<()> {
        let m = self.values.len();
        if m < 2 || self.ci[1][0] <= 0.0 {
            return Err(Error::NoGap { index: 1, next: 1, detail: "second exponent is not positive".into() });
        }
        if self.ci[0][0] <= self.ci[1][1] {
            return Err(Error::NoGap { index: 0, next: 1, detail: "intervals overlap".into() });
        }
        if m > 2 && self.ci[1][0] <= self.ci[2][1] {
            return Err(Error::NoGap { index: 1, next: 2, detail: "intervals overlap".into() });
        }
        Ok(())
    }
}

fn qr_log_increments(mats: &mut dyn Iterator<Item = DMatrix<f64>>, m: usize, period: usize) -> Vec<Vec<f64>> {
    let mut q = DMatrix::<f64>::identity(m, m);
    let mut out = Vec::new();
    let mut count = 0;
    for a in mats {
        q = a * q;
        count += 1;
        if count == period {
            let qr = q.clone().qr();
            let r = qr.r();
            out.push((0..m).map(|i| r[(i, i)].abs().ln()).collect());
            q = qr.q();
            count = 0;
        }
    }
    out
}

fn summarize(incs: &[Vec<f64>], m: usize, cfg: &LyapunovConfig) -> (Vec<f64>, Vec<[f64; 2]>) {
    let p = cfg.reorth_period as f64;
    let block = (cfg.block / cfg.reorth_period).max(1);
    let mut values = Vec::with_capacity(m);
    let mut ci = Vec::with_capacity(m);
    for i in 0..m {
        let col: Vec<f64> = incs.iter().map(|r| r[i] / p).collect();
        values.push(col.iter().sum::<f64>() / col.len() as f64);
        let (a, b) = stats::block_bootstrap_mean(&col, block, cfg.reps, limit::substream(cfg.seed, i as u64));
        ci.push([a, b]);
    }
    (values, ci)
}

/// Lyapunov exponents of `𝔸` and of `𝔸ᵗ` along `ω_{start+1}, …` by re-orthonormalized products.
pub fn lyapunov_spectrum(rc: &RenormCocycle<'_>, start: i64, cfg: &LyapunovConfig) -> Result<Exponents> {
    if cfg.horizon == 0 || cfg.reorth_period == 0 {
        return Err(Error::InvalidArgument("horizon and period must be positive".into()));
    }
    let m = rc.seq.dim();
    let total = (cfg.burn_in + cfg.horizon) as i64;
    let skip = cfg.burn_in / cfg.reorth_period;
    let mut fwd = (1..=total).map(|k| rc.seq.matrix(start + k).clone());
    let incs = qr_log_increments(&mut fwd, m, cfg.reorth_period);
    let (values, ci) = summarize(&incs[skip..], m, cfg);
    let mut bwd = (1..=total).map(|k| rc.seq.matrix(start + total + 1 - k).transpose());
    let incs = qr_log_increments(&mut bwd, m, cfg.reorth_period);
    let (transpose_values, transpose_ci) = summarize(&incs[skip..], m, cfg);
    Ok(Exponents { values, ci, transpose_values, transpose_ci, horizon: cfg.horizon })
}

/// Second compound matrix: `2×2` minors indexed by pairs `i < j`.
pub fn compound2(a: &DMatrix<f64>) -> DMatrix<f64> {
    let m = a.nrows();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    DMatrix::from_fn(pairs.len(), pairs.len(), |r, c| {
        let (i, k) = pairs[r];
        let (j, l) = pairs[c];
        a[(i, j)] * a[(k, l)] - a[(i, l)] * a[(k, j)]
    })
}

fn log_norm_growth(mats: &mut dyn Iterator<Item = DMatrix<f64>>) -> f64 {
    let mut p: Option<DMatrix<f64>> = None;
    let mut acc = 0.0;
    for a in mats {
        let next = match p {
            None => a,
            Some(q) => a * q,
        };
        let s = next.iter().map(|x| x.abs()).fold(0.0, f64::max);
        acc += s.ln();
        p = Some(next / s);
    }
    acc
}

/// `(θ₁, θ₂)` from the growth of `‖𝔸(n)‖` and of `‖∧²𝔸(n)‖` over `n` steps.
pub fn norm_growth_oracle(rc: &RenormCocycle<'_>, start: i64, n: usize) -> (f64, f64) {
    let top = log_norm_growth(&mut (1..=n as i64).map(|k| rc.seq.matrix(start + k).clone())) / n as f64;
    if rc.seq.dim() < 2 {
        return (top, f64::NAN);
    }
    let both = log_norm_growth(&mut (1..=n as i64).map(|k| compound2(rc.seq.matrix(start + k)))) / n as f64;
    (top, both - top)
}

fn log_top_singular(a: &DMatrix<f64>) -> f64 {
    let s = a.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let top = (a / s).singular_values().iter().copied().fold(0.0, f64::max);
    top.ln() + s.ln()
}

/// Slopes in `n ∈ [n_min, n_max]` of `log σ₁(𝔸(n))`, from the exact integer product, and of
/// `log(σ₁σ₂)`, from `∧²𝔸(n) = ∧²A(ω_n)⋯∧²A(ω_1)`; `m = 1` gives one slope.
pub fn singular_value_slopes(rc: &RenormCocycle<'_>, start: i64, n_min: usize, n_max: usize) -> Result<Vec<f64>> {
    let m = rc.seq.dim();
    let mut xs = Vec::new();
    let mut s1 = Vec::new();
    let mut s12 = Vec::new();
    let mut wedge = (m >= 2).then(|| compound2(&DMatrix::identity(m, m)));
    for n in 1..=n_max {
        if let Some(w) = wedge.as_mut() {
            *w = compound2(rc.seq.matrix(start + n as i64)) * &*w;
        }
        if n < n_min {
            continue;
        }
        let p = rc.exact_product(start, n)?;
        let a = DMatrix::from_fn(m, m, |i, j| p[i][j] as f64);
        xs.push(n as f64);
        s1.push(log_top_singular(&a));
        if let Some(w) = &wedge {
            s12.push(log_top_singular(w));
        }
    }
    let (_, a1) = stats::ols(&xs, &s1);
    if m < 2 {
        return Ok(vec![a1]);
    }
    let (_, a12) = stats::ols(&xs, &s12);
    Ok(vec![a1, a12 - a1])
}

fn orthonormal_columns(a: DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = a.qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..r.nrows() {
        if r[(i, i)] < 0.0 {
            q.column_mut(i).neg_mut();
            r.row_mut(i).neg_mut();
        }
    }
    (q, r)
}

fn generic_frame(m: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(m, k, |_, _| rng.gen::<f64>() - 0.5);
    orthonormal_columns(a).0
}

/// Largest principal-angle sine between the column spans of two orthonormal frames.
pub fn subspace_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let resid = b - a * (a.transpose() * b);
    resid.singular_values().iter().copied().fold(0.0, f64::max)
}

/// The compactum `X(ω)` over levels `[lo, hi]`, with Perron lengths `L_j`, co-lengths `Λ_j` and
/// the Oseledets frames. Lengths satisfy `L_{j+1} = A(ω_j) L_j` exactly, co-lengths
/// `Λ_j = A(ω_{j+1})ᵗ Λ_{j+1}`, and `Σ Λ_0 = 1 = Σ Λ_0 L_1`.
#[derive(Debug, Clone)]
pub struct SequenceTower {
    pub seq: GraphSequence,
    /// Level `j` carries `ω_{j + origin}`.
    pub origin: i64,
    pub k: usize,
    lo: i64,
    symbols: Vec<usize>,
    lengths: Vec<Vec<TwoFloat>>,
    prefixes: Vec<Vec<TwoFloat>>,
    colengths: Vec<Vec<f64>>,
    /// `A_j F_j = F_{j+1} R_j`.
    frames: Vec<DMatrix<f64>>,
    steps: Vec<DMatrix<f64>>,
    /// `A_{j+1}ᵗ G_{j+1} = G_j S_j`.
    dual_frames: Vec<DMatrix<f64>>,
    dual_steps: Vec<DMatrix<f64>>,
}

impl SequenceTower {
    /// `k` is the number of positive exponents; `span` defaults to what double range allows.
    pub fn new(seq: &GraphSequence, k: usize, span: Option<i64>) -> Result<Self> {
        let m = seq.dim();
        if k == 0 || k > m {
            return Err(Error::InvalidArgument(format!("expanding dimension {k} outside 1..={m}")));
        }
        let growth = seq
            .incidences
            .iter()
            .flat_map(|q| {
                (0..m).map(move |i| {
                    let row: i64 = (0..m).map(|j| q.get(i, j)).sum();
                    let col: i64 = (0..m).map(|j| q.get(j, i)).sum();
                    row.max(col)
                })
            })
            .max()
            .unwrap_or(2)
            .max(2) as f64;
        let span = span.unwrap_or(((250.0 / (2.0 * growth.log10())) as i64).clamp(16, 400));
        let (lo, hi) = (1 - span, 1 + span);
        let n = (hi - lo + 1) as usize;
        let symbols: Vec<usize> = (lo..=hi).map(|j| seq.symbol(j)).collect();
        let inc = |j: i64| &seq.incidences[symbols[(j - lo) as usize]];

        let tiny = 1e-125;
        let mut lengths = vec![vec![TwoFloat::from(tiny); m]; n];
        for idx in 1..n {
            let a = inc(lo + idx as i64 - 1);
            lengths[idx] = (0..m)
                .map(|i| {
                    let mut s = TwoFloat::from(0.0);
                    for l in 0..m {
                        s += lengths[idx - 1][l] * a.get(i, l) as f64;
                    }
                    s
                })
                .collect();
        }
        let mut colengths = vec![vec![tiny; m]; n];
        for idx in (0..n - 1).rev() {
            let a = inc(lo + idx as i64 + 1);
            colengths[idx] = (0..m).map(|i| (0..m).map(|l| a.get(l, i) as f64 * colengths[idx + 1][l]).sum()).collect();
        }
        let zero = (0 - lo) as usize;
        let a: f64 = 1.0 / colengths[zero].iter().sum::<f64>();
        for row in colengths.iter_mut() {
            for x in row.iter_mut() {
                *x *= a;
            }
        }
        let pair: f64 = (0..m).map(|i| colengths[zero][i] * dd_to_f64(lengths[zero + 1][i])).sum();
        let b = 1.0 / pair;
        for row in lengths.iter_mut() {
            for x in row.iter_mut() {
                *x = *x * b;
            }
        }

        let mut frames = Vec::with_capacity(n);
        let mut steps = Vec::with_capacity(n - 1);
        frames.push(generic_frame(m, k, 0x5eed));
        for idx in 1..n {
            let (q, r) = orthonormal_columns(inc(lo + idx as i64 - 1).to_f64() * &frames[idx - 1]);
            frames.push(q);
            steps.push(r);
        }
        let mut dual_frames = vec![DMatrix::zeros(m, k); n];
        let mut dual_steps = vec![DMatrix::zeros(k, k); n - 1];
        dual_frames[n - 1] = generic_frame(m, k, 0xd0a1);
        for idx in (0..n - 1).rev() {
            let (q, s) = orthonormal_columns(inc(lo + idx as i64 + 1).to_f64().transpose() * &dual_frames[idx + 1]);
            dual_frames[idx] = q;
            dual_steps[idx] = s;
        }

        let mut t = SequenceTower {
            seq: seq.clone(),
            origin: 0,
            k,
            lo,
            symbols,
            lengths,
            prefixes: Vec::new(),
            colengths,
            frames,
            steps,
            dual_frames,
            dual_steps,
        };
        t.prefixes = t.compute_prefixes();
        Ok(t)
    }

    fn compute_prefixes(&self) -> Vec<Vec<TwoFloat>> {
        let m = self.dim();
        (0..self.lengths.len())
            .map(|idx| {
                let level = self.lo + idx as i64;
                let g = self.graph(level);
                let o = self.ordering(level);
                let mut p = vec![TwoFloat::from(0.0); g.edge_count()];
                for v in 0..m {
                    let mut acc = TwoFloat::from(0.0);
                    for &e in o.children(v) {
                        p[e] = acc;
                        acc += self.lengths[idx][g.terminal(e)];
                    }
                }
                p
            })
            .collect()
    }

    #[inline]
    fn idx(&self, level: i64) -> usize {
        (level - self.lo) as usize
    }

    /// Graph index carried by `level`.
    pub fn symbol_at(&self, level: i64) -> usize {
        self.symbols[self.idx(level)]
    }

    /// `C_l` with `L^{(ω)}_{j+l} = C_l L^{(σ^l ω)}_j`: the time change between `X(ω)` and `X(σ^l ω)`.
    pub fn scale_ratio(&self, l: i64) -> TwoFloat {
        let s: f64 = self.colengths[self.idx(l)].iter().sum();
        dd_div(TwoFloat::from(1.0), TwoFloat::from(s))
    }

    /// The tower of `σ^l ω`, sharing data and renormalized.
    pub fn shifted(&self, l: i64) -> Result<SequenceTower> {
        self.check_level(l)?;
        let s: f64 = self.colengths[self.idx(l)].iter().sum();
        let sd = TwoFloat::from(s);
        let mut t = self.clone();
        t.origin += l;
        t.lo -= l;
        for row in t.lengths.iter_mut() {
            for x in row.iter_mut() {
                *x = *x * sd;
            }
        }
        for row in t.prefixes.iter_mut() {
            for x in row.iter_mut() {
                *x = *x * sd;
            }
        }
        for row in t.colengths.iter_mut() {
            for x in row.iter_mut() {
                *x /= s;
            }
        }
        Ok(t)
    }

    /// Orthonormal basis of `E⁺` at `level` (columns ordered from the fastest direction).
    pub fn frame(&self, level: i64) -> &DMatrix<f64> {
        &self.frames[self.idx(level)]
    }

    /// Orthonormal basis of `Ẽ⁺` at `level`, paired with `E⁺` at `level + 1`.
    pub fn dual_frame(&self, level: i64) -> &DMatrix<f64> {
        &self.dual_frames[self.idx(level)]
    }

    pub fn lengths_f64(&self, level: i64) -> Vec<f64> {
        self.lengths[self.idx(level)].iter().map(|&x| dd_to_f64(x)).collect()
    }

    pub fn colengths_at(&self, level: i64) -> &[f64] {
        &self.colengths[self.idx(level)]
    }

    /// `W_{j+1} = A_j W_j`.
    pub fn push_up(&self, j: i64, w: &[C]) -> Vec<C> {
        let a = self.incidence(j);
        let m = self.dim();
        (0..m).map(|i| (0..m).map(|l| w[l] * a.get(i, l) as f64).sum()).collect()
    }

    /// `W_j` with `A_j W_j = W_{j+1}`, for `W_{j+1}` in the span of `F_{j+1}`.
    pub fn pull_down(&self, j: i64, w: &[C]) -> Result<Vec<C>> {
        self.check_level(j)?;
        if j + 1 > self.levels().1 {
            return Err(Error::OutOfWindow { lo: self.lo, hi: self.levels().1, level: j + 1 });
        }
        let f1 = &self.frames[self.idx(j + 1)];
        let r = &self.steps[self.idx(j)];
        let rinv = r.clone().try_inverse().ok_or_else(|| Error::IllConditioned("frame step is singular".into()))?;
        let coords: Vec<C> = (0..self.k).map(|c| (0..self.dim()).map(|i| w[i] * f1[(i, c)]).sum()).collect();
        let c2: Vec<C> = (0..self.k).map(|a| (0..self.k).map(|b| coords[b] * rinv[(a, b)]).sum()).collect();
        let f0 = &self.frames[self.idx(j)];
        Ok((0..self.dim()).map(|i| (0..self.k).map(|c| c2[c] * f0[(i, c)]).sum()).collect())
    }

    /// `ṽ_{n-1} = A_nᵗ ṽ_n`.
    pub fn dual_down(&self, n: i64, w: &[C]) -> Vec<C> {
        let a = self.incidence(n);
        let m = self.dim();
        (0..m).map(|i| (0..m).map(|l| w[l] * a.get(l, i) as f64).sum()).collect()
    }

    /// `ṽ_{n+1}` with `A_{n+1}ᵗ ṽ_{n+1} = ṽ_n`, for `ṽ_n` in the span of `G_n`.
    pub fn dual_up(&self, n: i64, w: &[C]) -> Result<Vec<C>> {
        self.check_level(n + 1)?;
        let g0 = &self.dual_frames[self.idx(n)];
        let s = &self.dual_steps[self.idx(n)];
        let sinv = s.clone().try_inverse().ok_or_else(|| Error::IllConditioned("frame step is singular".into()))?;
        let coords: Vec<C> = (0..self.k).map(|c| (0..self.dim()).map(|i| w[i] * g0[(i, c)]).sum()).collect();
        let c2: Vec<C> = (0..self.k).map(|a| (0..self.k).map(|b| coords[b] * sinv[(a, b)]).sum()).collect();
        let g1 = &self.dual_frames[self.idx(n + 1)];
        Ok((0..self.dim()).map(|i| (0..self.k).map(|c| c2[c] * g1[(i, c)]).sum()).collect())
    }

    /// Projection onto `E⁺` along `E⁻` at `level`: `F (Gᵀ F)^{-1} Gᵀ` with `G` taken one level lower.
    pub fn project_plus(&self, level: i64, w: &[C]) -> Result<Vec<C>> {
        self.check_level(level - 1)?;
        let f = self.frame(level);
        let g = self.dual_frame(level - 1);
        let gram = g.transpose() * f;
        let ginv = gram.try_inverse().ok_or_else(|| Error::IllConditioned("E⁺ and dual frame are not paired".into()))?;
        let m = self.dim();
        let gw: Vec<C> = (0..self.k).map(|c| (0..m).map(|i| w[i] * g[(i, c)]).sum()).collect();
        let coef: Vec<C> = (0..self.k).map(|a| (0..self.k).map(|b| gw[b] * ginv[(a, b)]).sum()).collect();
        Ok((0..m).map(|i| (0..self.k).map(|c| coef[c] * f[(i, c)]).sum()).collect())
    }

    /// Distance of `w` from the span of `F_level`, relative to `|w|`.
    pub fn plus_residual(&self, level: i64, w: &[C]) -> f64 {
        let f = self.frame(level);
        let m = self.dim();
        let coords: Vec<C> = (0..self.k).map(|c| (0..m).map(|i| w[i] * f[(i, c)]).sum()).collect();
        let norm: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let res: f64 = (0..m)
            .map(|i| (w[i] - (0..self.k).map(|c| coords[c] * f[(i, c)]).sum::<C>()).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 {
            0.0
        } else {
            res / norm
        }
    }

    fn dual_residual(&self, level: i64, w: &[C]) -> f64 {
        let g = self.dual_frame(level);
        let m = self.dim();
        let coords: Vec<C> = (0..self.k).map(|c| (0..m).map(|i| w[i] * g[(i, c)]).sum()).collect();
        let norm: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let res: f64 = (0..m)
            .map(|i| (w[i] - (0..self.k).map(|c| coords[c] * g[(i, c)]).sum::<C>()).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 {
            0.0
        } else {
            res / norm
        }
    }

    /// Distances between `E⁺` at level 1 pushed from `1 - N` and from `1 - 2N`.
    pub fn cauchy_distances(&self) -> Vec<(i64, f64)> {
        let mut out = Vec::new();
        let mut n = 4;
        while 1 - 2 * n >= self.lo {
            let a = self.push_frame(1 - n);
            let b = self.push_frame(1 - 2 * n);
            out.push((n, subspace_distance(&a, &b)));
            n *= 2;
        }
        out
    }

    fn push_frame(&self, from: i64) -> DMatrix<f64> {
        let mut f = generic_frame(self.dim(), self.k, 0x5eed);
        for j in from..1 {
            f = orthonormal_columns(self.incidence(j).to_f64() * f).0;
        }
        f
    }
}

impl Tower for SequenceTower {
    fn dim(&self) -> usize {
        self.seq.dim()
    }
    fn levels(&self) -> (i64, i64) {
        (self.lo, self.lo + self.lengths.len() as i64 - 1)
    }
    fn graph(&self, level: i64) -> &OrientedGraph {
        &self.seq.graphs[self.symbols[self.idx(level)]]
    }
    fn ordering(&self, level: i64) -> &VershikOrdering {
        &self.seq.orderings[self.symbols[self.idx(level)]]
    }
    #[inline]
    fn length(&self, level: i64, v: usize) -> TwoFloat {
        self.lengths[self.idx(level)][v]
    }
    #[inline]
    fn colength(&self, level: i64, v: usize) -> f64 {
        self.colengths[self.idx(level)][v]
    }
    fn incidence(&self, level: i64) -> IncidenceMatrix {
        self.seq.incidences[self.symbols[self.idx(level)]].clone()
    }
    #[inline]
    fn prefix_length(&self, level: i64, e: usize) -> TwoFloat {
        self.prefixes[self.idx(level)][e]
    }
}

/// Oseledets data of `ω` at level 1 of a [`SequenceTower`].
#[derive(Debug, Clone, Serialize)]
pub struct OseledetsData {
    pub exponents: Option<Exponents>,
    pub dim_plus: usize,
    pub h: Vec<f64>,
    pub la: Vec<f64>,
    /// Columns spanning `E⁺_ω` and `Ẽ⁺_ω`.
    pub e_plus: Vec<Vec<f64>>,
    pub et_plus: Vec<Vec<f64>>,
    /// `v₂^{(ω)}` with unit ℓ¹ norm and `Σ λ v₂ = 0`; `ṽ₂` dual to it and annihilating `h`.
    pub v2: Option<Vec<f64>>,
    pub vt2: Option<Vec<f64>>,
    pub cauchy: Vec<(i64, f64)>,
}

fn sign_normalize(v: Vec<f64>) -> Vec<f64> {
    let n: f64 = v.iter().map(|x| x.abs()).sum();
    let max = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let pivot = v.iter().copied().find(|x| x.abs() > 1e-9 * max).unwrap_or(1.0);
    let s = pivot.signum() / n;
    v.into_iter().map(|x| x * s).collect()
}

/// The vector in the span of the first two columns of `frame` annihilated by `a`.
fn second_in_flag(frame: &DMatrix<f64>, a: &[f64]) -> Vec<f64> {
    let m = frame.nrows();
    let p = |c: usize| (0..m).map(|i| frame[(i, c)] * a[i]).sum::<f64>();
    let (p0, p1) = (p(0), p(1));
    (0..m).map(|i| -p1 * frame[(i, 0)] + p0 * frame[(i, 1)]).collect()
}

impl OseledetsData {
    pub fn of_tower(t: &SequenceTower, exponents: Option<Exponents>) -> Self {
        let m = t.dim();
        let h = t.lengths_f64(1);
        let la = t.colengths_at(0).to_vec();
        let cols = |f: &DMatrix<f64>| (0..f.ncols()).map(|c| f.column(c).iter().copied().collect()).collect();
        let (v2, vt2) = if t.k >= 2 {
            let v2 = sign_normalize(second_in_flag(t.frame(1), &la));
            let w = second_in_flag(t.dual_frame(0), &h);
            let p: f64 = (0..m).map(|i| v2[i] * w[i]).sum();
            (Some(v2), Some(w.iter().map(|x| x / p).collect()))
        } else {
            (None, None)
        };
        OseledetsData {
            exponents,
            dim_plus: t.k,
            h,
            la,
            e_plus: cols(t.frame(1)),
            et_plus: cols(t.dual_frame(0)),
            v2,
            vt2,
            cauchy: t.cauchy_distances(),
        }
    }
}

/// Exponents, the number of positive ones and the tower built with it.
pub fn oseledets_spaces(seq: &GraphSequence, cfg: &LyapunovConfig, span: Option<i64>) -> Result<(SequenceTower, OseledetsData)> {
    let ex = lyapunov_spectrum(&RenormCocycle::new(seq), 0, cfg)?;
    let k = ex.dim_plus()?;
    if k == 0 {
        return Err(Error::NonExpanding { rho: ex.values[0].exp() });
    }
    let t = SequenceTower::new(seq, k, span)?;
    let od = OseledetsData::of_tower(&t, Some(ex));
    Ok((t, od))
}

/// `Φ⁺_v` over `ω`: the value of a level-`(n+1)` cell is `(𝔸(n, ω) v)_{F(x_{n+1})}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqPlusMeasure {
    pub v: Vec<C>,
}

/// `Φ⁻_ṽ` over `ω`: level-`n` values `ṽ_n[I(x_n)]` with `ṽ_0 = ṽ` and `ṽ_{n-1} = A_nᵗ ṽ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqMinusMeasure {
    pub vt: Vec<C>,
}

const SPAN_TOL: f64 = 1e-9;

impl SeqPlusMeasure {
    pub fn new(t: &SequenceTower, v: Vec<C>) -> Result<Self> {
        if v.len() != t.dim() {
            return Err(Error::DimensionMismatch { expected: t.dim(), got: v.len() });
        }
        let residual = t.plus_residual(1, &v);
        if residual > SPAN_TOL {
            return Err(Error::NegativePowerOutsideEplus { residual });
        }
        Ok(SeqPlusMeasure { v })
    }

    pub fn perron(t: &SequenceTower) -> Self {
        SeqPlusMeasure { v: t.lengths_f64(1).into_iter().map(|x| C::new(x, 0.0)).collect() }
    }

    pub fn second(od: &OseledetsData) -> Result<Self> {
        let v2 = od.v2.as_ref().ok_or_else(|| Error::NoGap { index: 1, next: 1, detail: "no second expanding direction".into() })?;
        Ok(SeqPlusMeasure { v: v2.iter().map(|&x| C::new(x, 0.0)).collect() })
    }

    /// Columns of `E⁺_ω`.
    pub fn basis(t: &SequenceTower) -> Vec<Self> {
        let f = t.frame(1);
        (0..f.ncols()).map(|c| SeqPlusMeasure { v: f.column(c).iter().map(|&x| C::new(x, 0.0)).collect() }).collect()
    }

    /// Level-`n` vector `W_n`, with `W_1 = v`.
    pub fn level_vector(&self, t: &SequenceTower, n: i64) -> Result<Vec<C>> {
        t.check_level(n)?;
        let mut w = self.v.clone();
        if n >= 1 {
            for j in 1..n {
                w = t.push_up(j, &w);
            }
        } else {
            for j in (n..1).rev() {
                w = t.pull_down(j, &w)?;
            }
        }
        Ok(w)
    }

    pub fn table(&self, t: &SequenceTower, tol: f64) -> Result<LevelTable> {
        build_table(t, &self.v, &|j, w| t.pull_down(j, w), tol)
    }
}

impl SeqMinusMeasure {
    pub fn new(t: &SequenceTower, vt: Vec<C>) -> Result<Self> {
        if vt.len() != t.dim() {
            return Err(Error::DimensionMismatch { expected: t.dim(), got: vt.len() });
        }
        let residual = t.dual_residual(0, &vt);
        if residual > SPAN_TOL {
            return Err(Error::NegativePowerOutsideEtplus { residual });
        }
        Ok(SeqMinusMeasure { vt })
    }

    pub fn perron(t: &SequenceTower) -> Self {
        SeqMinusMeasure { vt: t.colengths_at(0).iter().map(|&x| C::new(x, 0.0)).collect() }
    }

    pub fn second(od: &OseledetsData) -> Result<Self> {
        let vt2 = od.vt2.as_ref().ok_or_else(|| Error::NoGap { index: 1, next: 1, detail: "no second expanding direction".into() })?;
        Ok(SeqMinusMeasure { vt: vt2.iter().map(|&x| C::new(x, 0.0)).collect() })
    }

    /// The basis of `Ẽ⁺_ω` dual to [`SeqPlusMeasure::basis`].
    pub fn dual_basis(t: &SequenceTower) -> Result<Vec<Self>> {
        let f = t.frame(1);
        let g = t.dual_frame(0);
        let d = g * (f.transpose() * g)
            .try_inverse()
            .ok_or_else(|| Error::IllConditioned("E⁺ and dual frame are not paired".into()))?;
        Ok((0..d.ncols()).map(|c| SeqMinusMeasure { vt: d.column(c).iter().map(|&x| C::new(x, 0.0)).collect() }).collect())
    }

    /// `ṽ_n`.
    pub fn level_vector(&self, t: &SequenceTower, n: i64) -> Result<Vec<C>> {
        t.check_level(n)?;
        let mut w = self.vt.clone();
        if n >= 0 {
            for j in 0..n {
                w = t.dual_up(j, &w)?;
            }
        } else {
            for j in (n + 1..=0).rev() {
                w = t.dual_down(j, &w);
            }
        }
        Ok(w)
    }
}

pub fn seq_pairing(p: &SeqPlusMeasure, mi: &SeqMinusMeasure) -> C {
    p.v.iter().zip(&mi.vt).map(|(a, b)| a * b).sum()
}

/// `Σ_e W_j[F(e)] ṽ_j[I(e)]` over the edges of level `j`: the product measure of all level-`j`
/// cells, which equals the pairing at every level.
pub fn product_total(t: &SequenceTower, p: &SeqPlusMeasure, mi: &SeqMinusMeasure, j: i64) -> Result<C> {
    let w = p.level_vector(t, j)?;
    let vt = mi.level_vector(t, j)?;
    let g = t.graph(j);
    Ok(g.edges().iter().map(|e| w[e.terminal] * vt[e.initial]).sum())
}

/// `Φ_f⁺` over `ω`: `P⁺ v(d+1)` pulled down to level 1.
pub fn seq_xi_plus(t: &SequenceTower, f: &CylinderObservable) -> Result<SeqPlusMeasure> {
    let ci = CellIntegrals::new(t, f)?;
    let d = f.depth as i64;
    let mut w = t.project_plus(d + 1, ci.base())?;
    for j in (1..=d).rev() {
        w = t.pull_down(j, &w)?;
    }
    Ok(SeqPlusMeasure { v: w })
}

/// `m_{Φ⁻}(f) = Σ v(n)_i ṽ_{n-1, i}` at `n = n_max`.
pub fn seq_integral_against(t: &SequenceTower, f: &CylinderObservable, mi: &SeqMinusMeasure, n_max: i64) -> Result<C> {
    let n = n_max.max(f.depth as i64 + 1);
    let ci = CellIntegrals::new(t, f)?;
    let vn = ci.level(n)?;
    let vt = mi.level_vector(t, n - 1)?;
    Ok(vn.iter().zip(&vt).map(|(a, b)| a * b).sum())
}

/// `𝔞^{(ω)}(f) = m_{Φ₂⁻}(f)`.
pub fn seq_alpha(t: &SequenceTower, od: &OseledetsData, f: &CylinderObservable) -> Result<C> {
    let xi = seq_xi_plus(t, f)?;
    Ok(seq_pairing(&xi, &SeqMinusMeasure::second(od)?))
}

/// `σx` in the tower of `σω` (`ts = t.shifted(1)`).
pub fn shift_state(t: &SequenceTower, x: &FlowState, ts: &SequenceTower) -> Result<FlowState> {
    let mut x = x.clone();
    x.extend_to(t, 2)?;
    let pos = x.offset + t.prefix_length(1, x.digit(1));
    let s: f64 = t.colengths_at(1).iter().sum();
    let ext = x.extension.map(|e| Extension { seed: e.seed, shift: e.shift - 1 });
    FlowState::new(ts, x.window.edges[1..].to_vec(), pos * s, ext)
}

#[derive(Debug, Clone, Serialize)]
pub struct RenormDefect {
    pub samples: usize,
    /// Largest `|Φ₁⁺|` distance between `σ(h_t x)` and `h_{t/C₁}(σx)`.
    pub max_distance: f64,
}

/// Flows whole level-1 cells from cell starts in `X(ω)`, shifts, and compares with flowing the
/// shifted start for the renormalized time.
pub fn renormalization_defect(t: &SequenceTower, samples: usize, cells: usize, seed: u64) -> Result<RenormDefect> {
    let ts = t.shifted(1)?;
    let perron = SeqPlusMeasure::perron(&ts).table(&ts, 1e-12)?;
    let c1 = t.scale_ratio(1);
    let mut max_distance: f64 = 0.0;
    for i in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(limit::substream(seed, 2 * i as u64));
        let x0 = flow::sample_state(t, 4, &mut rng, limit::substream(seed, 2 * i as u64 + 1))?;
        let x = FlowState::new(t, x0.window.edges.clone(), TwoFloat::from(0.0), x0.extension)?;
        let mut total = TwoFloat::from(0.0);
        let mut z = x.clone();
        for _ in 0..cells {
            let len = t.length(1, z.vertex(t));
            total += len;
            z = flow::flow(t, &z, len)?;
        }
        let y = flow::flow(t, &x, total)?;
        let sy = shift_state(t, &y, &ts)?;
        let sx = shift_state(t, &x, &ts)?;
        let moved = flow::flow(&ts, &sx, dd_div(total, c1))?;
        let d = flow::value_between(&perron, &ts, &moved, &sy)?.norm();
        max_distance = max_distance.max(d);
    }
    Ok(RenormDefect { samples, max_distance })
}

#[derive(Debug, Clone)]
pub struct HarnessConfig {
    pub epsilons: Vec<f64>,
    pub audit_times: Vec<f64>,
    pub audit_starts: usize,
    pub cylinder_len: usize,
    pub reference_seed: u64,
    /// Target scales; each is replaced by the first return at or after it.
    pub targets: Vec<i64>,
    pub table_tol: f64,
    pub limit: LimitConfig,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            epsilons: vec![0.05, 0.1],
            audit_times: limit::audit_grid(),
            audit_starts: 50,
            cylinder_len: 2,
            reference_seed: 99,
            targets: vec![9, 12, 15],
            table_tol: 1e-4,
            limit: LimitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsAudit {
    pub epsilon: f64,
    /// `max_T error / (1 + T^ε)`.
    pub c_eps: f64,
    pub trend: MannKendall,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneralizedReport {
    pub audit: Audit,
    pub eps: Vec<EpsAudit>,
    pub alpha: [f64; 2],
    pub returns: Vec<i64>,
    /// `H⁽²⁾(l)` signed: `𝔸(l) v₂^{(ω)} = s_l v₂^{(σ^l ω)}`.
    pub signed_h2: Vec<f64>,
    pub limit: LimitReport,
}

/// First `l ≥ n` with `ω_{l+1..l+L}` equal to the reference word.
pub fn cylinder_return(t: &SequenceTower, reference: &[usize], n: i64, horizon: i64) -> Result<i64> {
    let l_len = reference.len() as i64;
    for l in n.max(0)..=horizon - l_len {
        if (0..l_len).all(|k| t.symbol_at(l + 1 + k) == reference[k as usize]) {
            return Ok(l);
        }
    }
    Err(Error::NoReturns { horizon })
}

/// `v₂` of `σ^l ω` and the signed factor `s_l` with `𝔸(l) v₂^{(ω)} = s_l v₂^{(σ^l ω)}`.
pub fn second_at(t: &SequenceTower, od: &OseledetsData, l: i64) -> Result<(Vec<f64>, f64)> {
    let w = SeqPlusMeasure::second(od)?.level_vector(t, l + 1)?;
    let re: Vec<f64> = w.iter().map(|z| z.re).collect();
    let v = sign_normalize(re.clone());
    let i = (0..v.len()).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap();
    Ok((v.clone(), re[i] / v[i]))
}

pub fn generalized_harness(t: &SequenceTower, od: &OseledetsData, f: &CylinderObservable, cfg: &HarnessConfig) -> Result<GeneralizedReport> {
    if let Some(ex) = &od.exponents {
        ex.check_second_simple()?;
    }
    let exponent = match &od.exponents {
        Some(ex) => ex.values[1] / ex.values[0],
        None => return Err(Error::InvalidArgument("exponents are required".into())),
    };
    let ci = CellIntegrals::new(t, f)?;
    let xi = seq_xi_plus(t, f)?;
    let phi = xi.table(t, cfg.table_tol)?;
    let top = f.depth as i64 + 3;
    let starts = limit::sample_states(t, cfg.audit_starts, top, limit::substream(cfg.limit.seed, 7))?;
    let audit = limit::multiplic_audit(t, &ci, &phi, &starts, &cfg.audit_times)?;
    let eps = cfg
        .epsilons
        .iter()
        .map(|&e| {
            let ratios: Vec<f64> = audit.rows.iter().map(|r| r.error / (1.0 + r.time.powf(e))).collect();
            EpsAudit { epsilon: e, c_eps: ratios.iter().copied().fold(0.0, f64::max), trend: stats::mann_kendall(&ratios) }
        })
        .collect();

    let alpha = seq_pairing(&xi, &SeqMinusMeasure::second(od)?);
    let reference: Vec<usize> = {
        let r = t.seq.with_seed(cfg.reference_seed);
        (1..=cfg.cylinder_len as i64).map(|k| r.symbol(k)).collect()
    };
    let horizon = t.levels().1 - 20;
    let mut returns = BTreeSet::new();
    for &n in &cfg.targets {
        returns.insert(cylinder_return(t, &reference, n, horizon)?);
    }
    let returns: Vec<i64> = returns.into_iter().collect();

    let mut towers = Vec::new();
    let mut tables = Vec::new();
    let mut signed = Vec::new();
    for &l in &returns {
        let ts = t.shifted(l)?;
        let (v2, s) = second_at(t, od, l)?;
        let table = SeqPlusMeasure { v: v2.iter().map(|&x| C::new(x, 0.0)).collect() }.table(&ts, cfg.table_tol)?;
        towers.push(ts);
        tables.push(table);
        signed.push(s);
    }
    let scales: Vec<Scale<'_>> = returns
        .iter()
        .enumerate()
        .map(|(k, &l)| Scale {
            n: l,
            tower: t,
            integrals: &ci,
            time_unit: t.scale_ratio(l),
            norm: alpha * signed[k],
            reference: Some((&towers[k] as &dyn Tower, &tables[k] as &dyn CellValues)),
        })
        .collect();
    // Table values carry interpolation errors up to `table_tol`; ties are judged at that scale.
    let lcfg = LimitConfig { ks_tie_tol: cfg.limit.ks_tie_tol.max(cfg.table_tol), ..cfg.limit.clone() };
    let limit = limit::limit_distribution_test(t, &phi, &scales, exponent, &lcfg)?;
    Ok(GeneralizedReport { audit, eps, alpha: [alpha.re, alpha.im], returns, signed_h2: signed, limit })
}

/// Deviation run over `ω`: `T_n = C_n` and starts at scale `n` coupled to Parry samples of the
/// tower of `σⁿω`.
pub fn sequence_deviation(t: &SequenceTower, f: &CylinderObservable, ns: &[i64], samples: usize, seed: u64) -> Result<Deviation> {
    let ci = CellIntegrals::new(t, f)?;
    let top = f.depth as i64 + 3;
    limit::deviation_exponent(
        t,
        &ci,
        ns,
        &|n| t.scale_ratio(n),
        &|n| {
            let ts = t.shifted(n)?;
            let ys = limit::sample_states(&ts, samples, top, seed)?;
            ys.iter().map(|y| limit::coupled_start(t, n, y, &ts)).collect()
        },
        limit::substream(seed, 1),
    )
}

/// Slope in `n` of `log H⁽²⁾(n) − n θ̂₂`, with `H⁽²⁾(n) = |𝔸(n) v₂|`; the vector is kept in the
/// annihilator of `Λ_n` so the top direction cannot leak in.
pub fn h2_growth_residual(t: &SequenceTower, od: &OseledetsData, theta2: f64, n_max: i64) -> Result<SlopeEstimate> {
    let v2 = od.v2.as_ref().ok_or_else(|| Error::NoGap { index: 1, next: 1, detail: "no second expanding direction".into() })?;
    let m = t.dim();
    let mut w: Vec<f64> = v2.clone();
    let mut acc = 0.0;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for n in 1..=n_max {
        t.check_level(n + 1)?;
        let a = t.incidence(n);
        let mut next: Vec<f64> = (0..m).map(|i| (0..m).map(|l| a.get(i, l) as f64 * w[l]).sum()).collect();
        let lam = t.colengths_at(n);
        let len = t.lengths_f64(n + 1);
        let c = (0..m).map(|i| lam[i] * next[i]).sum::<f64>() / (0..m).map(|i| lam[i] * len[i]).sum::<f64>();
        for i in 0..m {
            next[i] -= c * len[i];
        }
        let s: f64 = next.iter().map(|x| x.abs()).sum();
        acc += s.ln();
        w = next.iter().map(|x| x / s).collect();
        xs.push(n as f64);
        ys.push(acc - n as f64 * theta2);
    }
    Ok(stats::slope_with_bootstrap(&xs, &ys, 1000, 3))
}
