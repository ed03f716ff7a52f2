//! The flow `h_t⁺` along plus leaves, the adic successor map, arcs and the extension of
//! finitely additive measures to arcs.
//!
//! A [`FlowState`] stores the coordinates `x_1..x_N` and the position inside the level-1 cell.
//! The flow is computed hierarchically: climb until the target time fits inside a level-`K`
//! cell, then descend choosing digits. Boundary points are represented by the minimal path of
//! the next cell (offset exactly 0). [`flow_stepwise`] is the cell-by-cell successor version.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::compactum::PathWindow;
use crate::error::{Error, Result};
use crate::graph::EdgeId;
use crate::tower::{self, dd_to_f64, LevelTable, Tower};

/// Source of the coordinates above the sampled window. Coordinate `x_k` is drawn from its
/// conditional law given `x_{k-1}` with a random stream indexed by `k - shift`, so extending the
/// same state twice gives the same digits and two states whose windows differ by a shift share
/// their extensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Extension {
    pub seed: u64,
    pub shift: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    /// Coordinates `x_1..x_N` (`lo = 1`).
    pub window: PathWindow,
    /// Position inside the level-1 cell, in `[0, Φ₁⁺(γ⁺_1))`.
    pub offset: TwoFloat,
    pub clock: TwoFloat,
    pub extension: Option<Extension>,
}

impl FlowState {
    pub fn new(t: &dyn Tower, edges: Vec<EdgeId>, offset: TwoFloat, extension: Option<Extension>) -> Result<Self> {
        let window = PathWindow::in_tower(t, 1, edges)?;
        let len = t.length(1, t.graph(1).terminal(window.edges[0]));
        if offset < 0.0 || offset >= len {
            return Err(Error::InvalidArgument(format!(
                "offset {} outside the level-1 cell of length {}",
                dd_to_f64(offset),
                dd_to_f64(len)
            )));
        }
        Ok(FlowState { window, offset, clock: TwoFloat::from(0.0), extension })
    }

    pub fn top(&self) -> i64 {
        self.window.hi
    }

    #[inline]
    pub fn digit(&self, level: i64) -> EdgeId {
        self.window.edges[(level - 1) as usize]
    }

    /// Appends coordinates until the window reaches `level`.
    pub fn extend_to(&mut self, t: &dyn Tower, level: i64) -> Result<()> {
        while self.window.hi < level {
            let next = self.window.hi + 1;
            let Some(ext) = self.extension else {
                return Err(Error::OutOfWindow { lo: self.window.lo, hi: self.window.hi, level });
            };
            t.check_level(next)?;
            let mut rng = ChaCha8Rng::seed_from_u64(ext.seed);
            rng.set_stream((next - ext.shift) as u64);
            let below = t.graph(next - 1).initial(self.digit(next - 1));
            let e = tower::sample_parent(t, next, below, &mut rng);
            self.window.edges.push(e);
            self.window.hi = next;
        }
        Ok(())
    }

    /// Position of the point inside its level-`k` cell.
    pub fn position(&self, t: &dyn Tower, k: i64) -> TwoFloat {
        let mut p = self.offset;
        for j in 1..k {
            p += t.prefix_length(j, self.digit(j));
        }
        p
    }

    /// Level-1 cell vertex `F(x_1)`.
    pub fn vertex(&self, t: &dyn Tower) -> usize {
        t.graph(1).terminal(self.digit(1))
    }
}

/// Point of the level-`k` cell with coordinates `upper = (x_k, ..., x_N)` at position `pos`.
pub fn locate(t: &dyn Tower, k: i64, upper: &[EdgeId], pos: TwoFloat, extension: Option<Extension>) -> Result<FlowState> {
    if k < 1 || upper.is_empty() {
        return Err(Error::InvalidArgument("locate needs k ≥ 1 and at least one coordinate".into()));
    }
    let mut edges = vec![0; (k - 1) as usize];
    edges.extend_from_slice(upper);
    let top_len = t.length(k, t.graph(k).terminal(upper[0]));
    if pos < 0.0 || pos >= top_len {
        return Err(Error::InvalidArgument("position outside the cell".into()));
    }
    let p = descend(t, &mut edges, k, pos);
    let window = PathWindow::new(1, edges)?;
    Ok(FlowState { window, offset: p, clock: TwoFloat::from(0.0), extension })
}

/// Fills `edges[0..k-1]` (levels `1..k-1`) so the point sits at `pos` inside the level-`k`
/// cell fixed by `edges[k-1..]`; returns the offset in the level-1 cell.
fn descend(t: &dyn Tower, edges: &mut [EdgeId], k: i64, pos: TwoFloat) -> TwoFloat {
    let mut p = pos;
    for j in (1..k).rev() {
        let u = t.graph(j + 1).terminal(edges[j as usize]);
        let g = t.graph(j);
        let kids = t.ordering(j).children(u);
        let mut chosen = *kids.last().unwrap();
        for &e in kids {
            let len = t.length(j, g.terminal(e));
            if p < len {
                chosen = e;
                break;
            }
            if e == chosen {
                // Rounding pushed the point past the last child; keep it inside.
                p = len - len * f64::EPSILON * f64::EPSILON;
                break;
            }
            p -= len;
        }
        edges[(j - 1) as usize] = chosen;
    }
    let len1 = t.length(1, t.graph(1).terminal(edges[0]));
    if p >= len1 {
        p = len1 - len1 * f64::EPSILON * f64::EPSILON;
    }
    if p < 0.0 {
        p = TwoFloat::from(0.0);
    }
    p
}

/// `h_t⁺ x` for `t` of either sign.
pub fn flow(t: &dyn Tower, state: &FlowState, time: TwoFloat) -> Result<FlowState> {
    let mut s = state.clone();
    let mut pos = s.offset;
    let mut k = 1;
    loop {
        let xk = s.digit(k);
        let len = t.length(k, t.graph(k).terminal(xk));
        let target = pos + time;
        if target >= 0.0 && target < len {
            break;
        }
        if k == s.top() {
            if let Err(e) = s.extend_to(t, k + 1) {
                let room = if time >= 0.0 { len - pos } else { pos };
                return match e {
                    Error::OutOfWindow { .. } => Err(Error::HorizonExceeded { elapsed: dd_to_f64(room) }),
                    other => Err(other),
                };
            }
        }
        pos += t.prefix_length(k, xk);
        k += 1;
    }
    let target = pos + time;
    let offset = descend(t, &mut s.window.edges, k, target);
    s.offset = offset;
    s.clock += time;
    Ok(s)
}

/// The next level-1 cell in the adic order: increment the least non-maximal coordinate and
/// reset the ones below it to minimal edges.
pub fn successor(t: &dyn Tower, w: &PathWindow) -> Result<PathWindow> {
    let mut out = w.clone();
    for l in w.lo..=w.hi {
        let e = w.get(l)?;
        let g = t.graph(l);
        if let Some(next) = t.ordering(l).next(g, e) {
            out.edges[(l - w.lo) as usize] = next;
            for j in (w.lo..l).rev() {
                let above = t.graph(j + 1).terminal(out.edges[(j + 1 - w.lo) as usize]);
                out.edges[(j - w.lo) as usize] = t.ordering(j).min_from(above);
            }
            return Ok(out);
        }
    }
    Err(Error::MaxPathSignal)
}

/// Inverse of [`successor`].
pub fn predecessor(t: &dyn Tower, w: &PathWindow) -> Result<PathWindow> {
    let mut out = w.clone();
    for l in w.lo..=w.hi {
        let e = w.get(l)?;
        let g = t.graph(l);
        if let Some(prev) = t.ordering(l).prev(g, e) {
            out.edges[(l - w.lo) as usize] = prev;
            for j in (w.lo..l).rev() {
                let above = t.graph(j + 1).terminal(out.edges[(j + 1 - w.lo) as usize]);
                out.edges[(j - w.lo) as usize] = t.ordering(j).max_from(above);
            }
            return Ok(out);
        }
    }
    Err(Error::MinPathSignal)
}

/// Cell-by-cell flow through successive level-1 cells. Used as an oracle for [`flow`].
pub fn flow_stepwise(t: &dyn Tower, state: &FlowState, time: TwoFloat) -> Result<FlowState> {
    let mut s = state.clone();
    let mut rem = time;
    let mut elapsed = TwoFloat::from(0.0);
    if time >= 0.0 {
        loop {
            let len = t.length(1, s.vertex(t));
            let room = len - s.offset;
            if rem < room {
                s.offset += rem;
                break;
            }
            rem -= room;
            elapsed += room;
            let next = loop {
                match successor(t, &s.window) {
                    Ok(w) => break w,
                    Err(Error::MaxPathSignal) => {
                        let top = s.top();
                        s.extend_to(t, top + 1)
                            .map_err(|_| Error::HorizonExceeded { elapsed: dd_to_f64(elapsed) })?;
                    }
                    Err(e) => return Err(e),
                }
            };
            s.window = next;
            s.offset = TwoFloat::from(0.0);
        }
    } else {
        loop {
            if s.offset + rem >= 0.0 {
                s.offset += rem;
                break;
            }
            rem += s.offset;
            elapsed += s.offset;
            let prev = loop {
                match predecessor(t, &s.window) {
                    Ok(w) => break w,
                    Err(Error::MinPathSignal) => {
                        let top = s.top();
                        s.extend_to(t, top + 1)
                            .map_err(|_| Error::HorizonExceeded { elapsed: dd_to_f64(elapsed) })?;
                    }
                    Err(e) => return Err(e),
                }
            };
            s.window = prev;
            s.offset = t.length(1, s.vertex(t));
        }
        let len = t.length(1, s.vertex(t));
        if s.offset >= len {
            // Landed exactly on the far boundary: use the next cell's minimal point.
            s.offset = TwoFloat::from(0.0);
            s.window = successor(t, &s.window)?;
        }
    }
    s.clock += time;
    Ok(s)
}

/// Something that assigns values to level cells and to initial pieces of level-1 cells, so
/// that arcs can be evaluated by telescoping.
pub trait CellValues: Sync {
    /// Value of the level-`level` cell whose top coordinate is `e` and whose higher coordinates
    /// are those of `z`.
    fn cell(&self, t: &dyn Tower, level: i64, e: EdgeId, z: &FlowState) -> Complex64;
    /// Value of the part of the level-1 cell of `z` lying before `z`.
    fn bottom(&self, t: &dyn Tower, z: &FlowState) -> Complex64;
}

fn sibling_prefix(v: &dyn CellValues, t: &dyn Tower, level: i64, z: &FlowState) -> Complex64 {
    let e = z.digit(level);
    let g = t.graph(level);
    let mut s = Complex64::new(0.0, 0.0);
    for &c in t.ordering(level).children(g.initial(e)) {
        if c == e {
            break;
        }
        s += v.cell(t, level, c, z);
    }
    s
}

/// Value of the arc `[x, y)` for `y` on the plus leaf of `x` and after it (or the negative of
/// `[y, x)` when `y` comes first).
pub fn value_between(v: &dyn CellValues, t: &dyn Tower, x: &FlowState, y: &FlowState) -> Result<Complex64> {
    let (mut x, mut y) = (x.clone(), y.clone());
    let top = x.top().max(y.top());
    x.extend_to(t, top)?;
    y.extend_to(t, top)?;
    let mut k = 1;
    for l in (1..=top).rev() {
        if x.digit(l) != y.digit(l) {
            k = l + 1;
            break;
        }
    }
    if k > top {
        return Err(Error::InvalidArgument("points lie in different leaves of the window".into()));
    }
    let mut acc = v.bottom(t, &y) - v.bottom(t, &x);
    for j in 1..k {
        acc += sibling_prefix(v, t, j, &y) - sibling_prefix(v, t, j, &x);
    }
    Ok(acc)
}

/// A measure given by level values; cells below the table are handled by linear
/// interpolation inside the deepest tabulated cell.
impl CellValues for LevelTable {
    fn cell(&self, t: &dyn Tower, level: i64, e: EdgeId, _z: &FlowState) -> Complex64 {
        self.get(level, t.graph(level).terminal(e))
    }

    fn bottom(&self, t: &dyn Tower, z: &FlowState) -> Complex64 {
        let mut p = z.offset;
        let mut u = z.vertex(t);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut j = 0;
        while j >= self.lo {
            let g = t.graph(j);
            let kids = t.ordering(j).children(u);
            let mut next = None;
            for &e in kids {
                let f = g.terminal(e);
                let len = t.length(j, f);
                if p < len {
                    next = Some(f);
                    break;
                }
                p -= len;
                acc += self.get(j, f);
            }
            match next {
                Some(f) => u = f,
                None => {
                    // Rounding overflow at the right end: the point is the end of the cell.
                    return acc;
                }
            }
            j -= 1;
        }
        let deepest = j + 1;
        let len = t.length(deepest, u);
        let frac = dd_to_f64(tower::dd_div(p, len));
        acc + self.get(deepest, u) * frac
    }
}

#[derive(Debug, Clone)]
pub struct Arc {
    pub start: FlowState,
    pub duration: TwoFloat,
}

impl Arc {
    pub fn new(start: FlowState, duration: f64) -> Result<Self> {
        if !(duration >= 0.0) {
            return Err(Error::InvalidArgument("arc duration must be non-negative".into()));
        }
        Ok(Arc { start, duration: TwoFloat::from(duration) })
    }
}

pub fn arc_value(v: &dyn CellValues, t: &dyn Tower, a: &Arc) -> Result<Complex64> {
    let end = flow(t, &a.start, a.duration)?;
    value_between(v, t, &a.start, &end)
}

/// `Φ(x, s) = Φ([x, h_s x))`, negative for `s < 0`.
pub fn cocycle(v: &dyn CellValues, t: &dyn Tower, x: &FlowState, s: f64) -> Result<Complex64> {
    let end = flow(t, x, TwoFloat::from(s))?;
    value_between(v, t, x, &end)
}

/// `(t, max_x |Φ(x, t)|)` over the given starting points.
pub fn hoelder_probe(v: &dyn CellValues, t: &dyn Tower, starts: &[FlowState], times: &[f64]) -> Result<Vec<(f64, f64)>> {
    use rayon::prelude::*;
    times
        .iter()
        .map(|&s| {
            let vals: Result<Vec<f64>> = starts.par_iter().map(|x| cocycle(v, t, x, s).map(|z| z.norm())).collect();
            Ok((s, vals?.into_iter().fold(0.0, f64::max)))
        })
        .collect()
}

/// Parry-random state with coordinates `x_1..x_top`, extended on demand with `seed`.
pub fn sample_state<R: rand::Rng + ?Sized>(t: &dyn Tower, top: i64, rng: &mut R, seed: u64) -> Result<FlowState> {
    t.check_level(top)?;
    let edges = tower::sample_digits(t, 1, top, rng);
    let len = t.length(1, t.graph(1).terminal(edges[0]));
    let offset = tower::uniform_dd(rng, len);
    let window = PathWindow::new(1, edges)?;
    Ok(FlowState { window, offset, clock: TwoFloat::from(0.0), extension: Some(Extension { seed, shift: 0 }) })
}

/// Smallest window top whose cells all exceed `factor * horizon`.
pub fn window_for_horizon(t: &dyn Tower, horizon: f64, factor: f64) -> Result<i64> {
    let (_, hi) = t.levels();
    for n in 1..=hi {
        let min = (0..t.dim()).map(|v| dd_to_f64(t.length(n, v))).fold(f64::INFINITY, f64::min);
        if min >= factor * horizon {
            return Ok(n);
        }
    }
    Err(Error::HorizonExceeded { elapsed: 0.0 })
}

/// Rows of an orbit trace: one per level-1 cell entered.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub event: usize,
    pub clock: f64,
    pub vertex: usize,
    pub values: Vec<[f64; 2]>,
}

/// Event-by-event trace of the orbit up to `time`, with cumulative values of each measure.
pub fn orbit_trace(t: &dyn Tower, start: &FlowState, time: f64, measures: &[&dyn CellValues]) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::new();
    let mut s = start.clone();
    let mut event = 0;
    loop {
        let mut values = Vec::new();
        for m in measures {
            let z = value_between(*m, t, start, &s)?;
            values.push([z.re, z.im]);
        }
        rows.push(TraceRow { event, clock: dd_to_f64(s.clock), vertex: s.vertex(t), values });
        let room = t.length(1, s.vertex(t)) - s.offset;
        if s.clock + room > TwoFloat::from(time) + start.clock {
            break;
        }
        s = flow(t, &s, room)?;
        event += 1;
    }
    Ok(rows)
}
