//! Finitely additive measures `Φ⁺_v`, `Φ⁻_ṽ`, their products, the pairing and the level
//! tables used to evaluate plus measures on arcs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::compactum::{Cylinder, MinusSegment, PathWindow, PlusSegment};
use crate::error::{Error, Result};
use crate::graph::OrientedGraph;
use crate::linalg::{self, c, CMat, CVec};
use crate::spectral::SpectralData;
use crate::tower::{dd_to_f64, LevelTable, PeriodicTower, Tower};

/// Default accuracy of arc values.
pub const TOL_ARC: f64 = 1e-9;

fn to_cvec(v: &[Complex64]) -> CVec {
    CVec::from_column_slice(v)
}

fn to_vec(v: &CVec) -> Vec<Complex64> {
    v.iter().copied().collect()
}

/// `Q⁻¹` restricted to E⁺, as an `m × m` matrix that vanishes on E⁻.
pub fn inverse_on_plus(sd: &SpectralData) -> CMat {
    &sd.e_plus * &sd.a_plus_inv * sd.dual_plus.transpose()
}

/// `(Qᵗ)⁻¹` restricted to Ẽ⁺.
pub fn inverse_on_tplus(sd: &SpectralData) -> CMat {
    let gram = sd.et_plus.transpose() * &sd.e_plus;
    let dual = &sd.e_plus * linalg::inverse(&gram).expect("pairing of E⁺ and Ẽ⁺ is non-degenerate");
    &sd.et_plus * &sd.at_plus_inv * dual.transpose()
}

/// `Φ⁺_v` for `v ∈ E⁺`: a level-`n+1` segment ending at `F(x_{n+1}) = i` has value `(Qⁿv)_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlusMeasure {
    pub v: Vec<Complex64>,
}

/// `Φ⁻_ṽ` for `ṽ ∈ Ẽ⁺`: a level-`n` segment starting at `I(x_n) = i` has value `((Qᵗ)^{-n}ṽ)_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinusMeasure {
    pub vt: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductMeasure {
    pub plus: PlusMeasure,
    pub minus: MinusMeasure,
}

impl PlusMeasure {
    pub fn new(sd: &SpectralData, v: Vec<Complex64>) -> Result<Self> {
        sd.plus_coords(&v)?;
        Ok(PlusMeasure { v })
    }

    /// `Φ₁⁺`.
    pub fn perron(sd: &SpectralData) -> Self {
        PlusMeasure { v: sd.h.iter().map(|&x| c(x)).collect() }
    }

    /// `Φ₂⁺` with `v₂` normalized in ℓ¹.
    pub fn second(sd: &SpectralData) -> Result<Self> {
        let v2 = sd.v2.as_ref().ok_or_else(|| Error::Degenerate("no simple real second eigenvalue".into()))?;
        Ok(PlusMeasure { v: v2.iter().map(|&x| c(x)).collect() })
    }

    /// Basis `Φ⁺(i)` given by the columns of `e_plus`.
    pub fn basis(sd: &SpectralData) -> Vec<Self> {
        sd.e_plus.column_iter().map(|col| PlusMeasure { v: col.iter().copied().collect() }).collect()
    }

    /// `v⁽ⁿ⁾ = Qⁿv`; negative powers act on E⁺.
    pub fn level_vector(&self, sd: &SpectralData, n: i64) -> Result<Vec<Complex64>> {
        let qc = linalg::to_complex(&sd.q.to_f64());
        let mut w = to_cvec(&self.v);
        if n >= 0 {
            for _ in 0..n {
                w = &qc * w;
            }
        } else {
            let mut x = sd.plus_coords(&self.v)?;
            for _ in 0..(-n) {
                x = &sd.a_plus_inv * x;
            }
            w = &sd.e_plus * x;
        }
        Ok(to_vec(&w))
    }

    pub fn eval(&self, sd: &SpectralData, g: &OrientedGraph, seg: &PlusSegment) -> Result<Complex64> {
        let w = self.level_vector(sd, seg.n - 1)?;
        Ok(w[seg.vertex(g)])
    }

    /// Level values `Qʲ⁻¹v` from the refinement floor up to the top of the tower.
    pub fn table(&self, sd: &SpectralData, t: &PeriodicTower, tol: f64) -> Result<LevelTable> {
        sd.plus_coords(&self.v)?;
        let k = inverse_on_plus(sd);
        build_table(t, &self.v, &|_, w: &[Complex64]| Ok(to_vec(&(&k * to_cvec(w)))), tol)
    }

    /// Pullback under the shift: the measure whose level-`n` values are the level-`(n-1)`
    /// values of `self`.
    pub fn shift_pullback(&self, sd: &SpectralData) -> Result<Self> {
        Ok(PlusMeasure { v: self.level_vector(sd, -1)? })
    }
}

impl MinusMeasure {
    pub fn new(sd: &SpectralData, vt: Vec<Complex64>) -> Result<Self> {
        sd.tplus_coords(&vt)?;
        Ok(MinusMeasure { vt })
    }

    /// `Φ₁⁻`.
    pub fn perron(sd: &SpectralData) -> Self {
        MinusMeasure { vt: sd.la.iter().map(|&x| c(x)).collect() }
    }

    /// `Φ₂⁻`, normalized by `⟨v₂, ṽ₂⟩ = 1`.
    pub fn second(sd: &SpectralData) -> Result<Self> {
        let vt2 = sd.vt2.as_ref().ok_or_else(|| Error::Degenerate("no simple real second eigenvalue".into()))?;
        Ok(MinusMeasure { vt: vt2.iter().map(|&x| c(x)).collect() })
    }

    /// Dual basis `Φ⁻(i)`: `⟨Φ⁺(i), Φ⁻(j)⟩ = δ_ij`.
    pub fn dual_basis(sd: &SpectralData) -> Vec<Self> {
        sd.dual_plus.column_iter().map(|col| MinusMeasure { vt: col.iter().copied().collect() }).collect()
    }

    /// `ṽ⁽ᵏ⁾ = (Qᵗ)ᵏṽ`; negative powers act on Ẽ⁺.
    pub fn level_vector(&self, sd: &SpectralData, k: i64) -> Result<Vec<Complex64>> {
        let qt = linalg::to_complex(&sd.q.to_f64().transpose());
        let mut w = to_cvec(&self.vt);
        if k >= 0 {
            for _ in 0..k {
                w = &qt * w;
            }
        } else {
            let mut x = sd.tplus_coords(&self.vt)?;
            for _ in 0..(-k) {
                x = &sd.at_plus_inv * x;
            }
            w = &sd.et_plus * x;
        }
        Ok(to_vec(&w))
    }

    pub fn eval(&self, sd: &SpectralData, g: &OrientedGraph, seg: &MinusSegment) -> Result<Complex64> {
        let w = self.level_vector(sd, -seg.n)?;
        Ok(w[seg.vertex(g)])
    }
}

/// `⟨v, ṽ⟩ = Σ v_i ṽ_i`.
pub fn pairing(p: &PlusMeasure, mi: &MinusMeasure) -> Complex64 {
    p.v.iter().zip(&mi.vt).map(|(a, b)| a * b).sum()
}

impl ProductMeasure {
    /// Value on `C = {x_{n+1} = e_1, ..., x_{n+k} = e_k}`:
    /// `Φ⁺(γ⁺_{n+1}(x) ∩ C) · Φ⁻(γ⁻_{n+k}(x) ∩ C)` for the witness `x ∈ C`.
    pub fn eval(&self, sd: &SpectralData, g: &OrientedGraph, cyl: &Cylinder, witness: &PathWindow) -> Result<Complex64> {
        let k = cyl.word.len() as i64;
        if !witness.covers(cyl.n + 1, cyl.n + k) {
            let level = if witness.lo > cyl.n + 1 { cyl.n + 1 } else { cyl.n + k };
            return Err(Error::OutOfWindow { lo: witness.lo, hi: witness.hi, level });
        }
        if !cyl.contains(witness)? {
            return Err(Error::InvalidArgument("witness is not in the cylinder".into()));
        }
        let a = self.plus.eval(sd, g, &PlusSegment::new(cyl.n + 1, witness.clone())?)?;
        let b = self.minus.eval(sd, g, &MinusSegment::new(cyl.n + k, witness.clone())?)?;
        Ok(a * b)
    }

    /// Total mass, summing the closed form over all one-edge cylinders at position `n`.
    pub fn total_by_cells(&self, sd: &SpectralData, g: &OrientedGraph, n: i64) -> Result<Complex64> {
        let vp = self.plus.level_vector(sd, n)?;
        let vm = self.minus.level_vector(sd, -(n + 1))?;
        Ok(g.edges().iter().map(|e| vp[e.terminal] * vm[e.initial]).sum())
    }
}

/// Largest deviation, over levels `-3..=3` and vertices, between the shift-transported values
/// of `mu` (level `n` read at level `n-1`) and the values of the measure of `Q⁻¹v`.
pub fn shift_equivariance_check(sd: &SpectralData, mu: &PlusMeasure) -> Result<f64> {
    let pulled = mu.shift_pullback(sd)?;
    let mut defect: f64 = 0.0;
    for n in -3..=3 {
        let transported = mu.level_vector(sd, n - 2)?;
        let direct = pulled.level_vector(sd, n - 1)?;
        for (a, b) in transported.iter().zip(&direct) {
            defect = defect.max((a - b).norm());
        }
    }
    Ok(defect)
}

/// Level table of a plus measure from its level-1 vector: rows above level 1 by the tower
/// incidences, rows below by `down(j, W_{j+1}) = W_j`, stopping once the remaining tail is below
/// `tol / 2`.
pub fn build_table(
    t: &dyn Tower,
    level1: &[Complex64],
    down: &dyn Fn(i64, &[Complex64]) -> Result<Vec<Complex64>>,
    tol: f64,
) -> Result<LevelTable> {
    let (tlo, thi) = t.levels();
    let m = t.dim();
    if level1.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: level1.len() });
    }
    let sup = |w: &[Complex64]| w.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let maxdeg = (tlo..=thi.min(tlo + 64))
        .flat_map(|j| (0..m).map(move |v| (j, v)))
        .map(|(j, v)| t.ordering(j).children(v).len())
        .max()
        .unwrap_or(1) as f64;
    let top_len = (0..m).map(|v| dd_to_f64(t.length(1, v))).fold(0.0, f64::max);

    // Contraction rate: geometric mean of the step ratios over the last `WINDOW` levels, since
    // single steps of a random tower need not contract.
    const WINDOW: usize = 16;
    let mut below: Vec<Vec<Complex64>> = Vec::new();
    let mut sups: Vec<f64> = vec![sup(level1)];
    let mut cur = level1.to_vec();
    let mut j = 1;
    loop {
        let s = sup(&cur);
        if s == 0.0 {
            break;
        }
        let k = (sups.len() - 1).min(WINDOW);
        let r = if k == 0 { 1.0 } else { (s / sups[sups.len() - 1 - k]).powf(1.0 / k as f64) };
        if j <= 0 && r < 0.99 && maxdeg * s / (1.0 - r) < tol / 2.0 {
            break;
        }
        if j - 1 < tlo {
            return Err(Error::RefinementStall { level: j, reason: "tower has no lower levels".into() });
        }
        let len = (0..m).map(|v| dd_to_f64(t.length(j - 1, v))).fold(f64::INFINITY, f64::min);
        if len < 1e-28 * top_len {
            return Err(Error::RefinementStall {
                level: j - 1,
                reason: format!("cell values still {s:e} below double-double resolution"),
            });
        }
        let next = down(j - 1, &cur)?;
        sups.push(sup(&next));
        below.push(next.clone());
        cur = next;
        j -= 1;
    }
    let lo = 1 - below.len() as i64;
    let mut rows: Vec<Vec<Complex64>> = below.into_iter().rev().collect();
    let mut w = level1.to_vec();
    rows.push(w.clone());
    for j in 1..thi {
        let a = t.incidence(j);
        w = (0..m).map(|i| (0..m).map(|k| w[k] * a.get(i, k) as f64).sum()).collect();
        rows.push(w.clone());
    }
    Ok(LevelTable { lo, rows })
}

/// Serialized form `{kind, vector: [[re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub kind: String,
    pub vector: Vec<[f64; 2]>,
}

impl MeasureSpec {
    fn encode(kind: &str, v: &[Complex64]) -> Self {
        MeasureSpec { kind: kind.into(), vector: v.iter().map(|z| [z.re, z.im]).collect() }
    }

    fn decode(&self) -> Vec<Complex64> {
        self.vector.iter().map(|p| Complex64::new(p[0], p[1])).collect()
    }

    pub fn plus(p: &PlusMeasure) -> Self {
        Self::encode("plus", &p.v)
    }

    pub fn minus(m: &MinusMeasure) -> Self {
        Self::encode("minus", &m.vt)
    }

    pub fn to_plus(&self, sd: &SpectralData) -> Result<PlusMeasure> {
        if self.kind != "plus" {
            return Err(Error::Config(format!("expected a plus measure, found {:?}", self.kind)));
        }
        PlusMeasure::new(sd, self.decode())
    }

    pub fn to_minus(&self, sd: &SpectralData) -> Result<MinusMeasure> {
        if self.kind != "minus" {
            return Err(Error::Config(format!("expected a minus measure, found {:?}", self.kind)));
        }
        MinusMeasure::new(sd, self.decode())
    }
}
