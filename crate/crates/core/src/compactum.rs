//! Finite windows of bi-infinite paths, cylinders, leaf segments, the Parry measure and its
//! conditional measures `Φ₁±`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, OrientedGraph};
use crate::spectral::SpectralData;
use crate::tower::{self, PeriodicTower, Tower};

/// Coordinates `x_lo, ..., x_hi` of a path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathWindow {
    pub lo: i64,
    pub hi: i64,
    pub edges: Vec<EdgeId>,
}

impl PathWindow {
    pub fn new(lo: i64, edges: Vec<EdgeId>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::InvalidArgument("empty window".into()));
        }
        let hi = lo + edges.len() as i64 - 1;
        Ok(PathWindow { lo, hi, edges })
    }

    /// Window checked for admissibility in a single graph.
    pub fn admissible(g: &OrientedGraph, lo: i64, edges: Vec<EdgeId>) -> Result<Self> {
        g.check_word(&edges)?;
        Self::new(lo, edges)
    }

    /// Window checked against the level graphs of a tower.
    pub fn in_tower(t: &dyn Tower, lo: i64, edges: Vec<EdgeId>) -> Result<Self> {
        let w = Self::new(lo, edges)?;
        for level in w.lo..=w.hi {
            t.check_level(level)?;
            if w.get(level)? >= t.graph(level).edge_count() {
                return Err(Error::Inadmissible { position: (level - w.lo) as usize });
            }
        }
        for level in w.lo..w.hi {
            let below = t.graph(level).initial(w.get(level)?);
            let above = t.graph(level + 1).terminal(w.get(level + 1)?);
            if below != above {
                return Err(Error::Inadmissible { position: (level + 1 - w.lo) as usize });
            }
        }
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn get(&self, level: i64) -> Result<EdgeId> {
        if level < self.lo || level > self.hi {
            return Err(Error::OutOfWindow { lo: self.lo, hi: self.hi, level });
        }
        Ok(self.edges[(level - self.lo) as usize])
    }

    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        self.lo <= lo && hi <= self.hi
    }
}

/// `{x : x_{n+1} = e_1, ..., x_{n+k} = e_k}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cylinder {
    pub n: i64,
    pub word: Vec<EdgeId>,
}

impl Cylinder {
    pub fn new(g: &OrientedGraph, n: i64, word: Vec<EdgeId>) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::InvalidArgument("cylinder needs a non-empty word".into()));
        }
        g.check_word(&word)?;
        Ok(Cylinder { n, word })
    }

    pub fn contains(&self, x: &PathWindow) -> Result<bool> {
        for (k, &e) in self.word.iter().enumerate() {
            if x.get(self.n + 1 + k as i64)? != e {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `γ⁺_n(x)`: points agreeing with the anchor at all indices `t ≥ n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlusSegment {
    pub n: i64,
    pub anchor: PathWindow,
}

/// `γ⁻_n(x)`: points agreeing with the anchor at all indices `t ≤ n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinusSegment {
    pub n: i64,
    pub anchor: PathWindow,
}

impl PlusSegment {
    pub fn new(n: i64, anchor: PathWindow) -> Result<Self> {
        anchor.get(n)?;
        Ok(PlusSegment { n, anchor })
    }

    /// Vertex that determines every holonomy-invariant value: `F(x_n)`.
    pub fn vertex(&self, g: &OrientedGraph) -> usize {
        g.terminal(self.anchor.get(self.n).unwrap())
    }
}

impl MinusSegment {
    pub fn new(n: i64, anchor: PathWindow) -> Result<Self> {
        anchor.get(n)?;
        Ok(MinusSegment { n, anchor })
    }

    /// `I(x_n)`.
    pub fn vertex(&self, g: &OrientedGraph) -> usize {
        g.initial(self.anchor.get(self.n).unwrap())
    }
}

/// `ν(C) = λ_{I(e_k)} h_{F(e_1)} e^{-kθ₁}`.
pub fn parry_measure(g: &OrientedGraph, sd: &SpectralData, c: &Cylinder) -> f64 {
    let k = c.word.len();
    let first = c.word[0];
    let last = c.word[k - 1];
    sd.la[g.initial(last)] * sd.h[g.terminal(first)] * sd.rho.powi(-(k as i32))
}

/// `Φ₁⁺(γ⁺_n) = h_{F(x_n)} e^{(n-1)θ₁}`.
pub fn phi1_plus(g: &OrientedGraph, sd: &SpectralData, seg: &PlusSegment) -> f64 {
    sd.h[seg.vertex(g)] * sd.rho.powi((seg.n - 1) as i32)
}

/// `Φ₁⁻(γ⁻_n) = λ_{I(x_n)} e^{-nθ₁}`.
pub fn phi1_minus(g: &OrientedGraph, sd: &SpectralData, seg: &MinusSegment) -> f64 {
    sd.la[seg.vertex(g)] * sd.rho.powi(-(seg.n as i32))
}

/// `(ν(C), Φ₁⁺(γ⁺_∞(x) ∩ C) · Φ₁⁻(γ⁻_∞(x) ∩ C))` for a witness `x ∈ C`.
///
/// Inside `C` the plus leaf through `x` is `γ⁺_{n+1}(x)` and the minus leaf is `γ⁻_{n+k}(x)`.
pub fn conditional_product_check(
    g: &OrientedGraph,
    sd: &SpectralData,
    c: &Cylinder,
    x: &PathWindow,
) -> Result<(f64, f64)> {
    let k = c.word.len() as i64;
    if !x.covers(c.n + 1, c.n + k) {
        return Err(Error::OutOfWindow { lo: x.lo, hi: x.hi, level: if x.lo > c.n + 1 { c.n + 1 } else { c.n + k } });
    }
    if !c.contains(x)? {
        return Err(Error::InvalidArgument("witness is not in the cylinder".into()));
    }
    let lhs = parry_measure(g, sd, c);
    let plus = phi1_plus(g, sd, &PlusSegment::new(c.n + 1, x.clone())?);
    let minus = phi1_minus(g, sd, &MinusSegment::new(c.n + k, x.clone())?);
    Ok((lhs, plus * minus))
}

/// Window `x_lo..x_hi` drawn from the Parry measure.
pub fn sample_parry<R: Rng + ?Sized>(t: &PeriodicTower, lo: i64, hi: i64, rng: &mut R) -> Result<PathWindow> {
    if hi < lo {
        return Err(Error::InvalidArgument("window with hi < lo".into()));
    }
    t.check_level(lo)?;
    t.check_level(hi)?;
    let edges = tower::sample_digits(t, lo, hi, rng);
    PathWindow::new(lo, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{example_qa, IncidenceMatrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parry_on_qa() {
        let g = example_qa();
        let sd = SpectralData::of_graph(&g).unwrap();
        let mut total = 0.0;
        for e in 0..8 {
            let v = parry_measure(&g, &sd, &Cylinder::new(&g, 0, vec![e]).unwrap());
            assert!((v - 0.125).abs() < 1e-15);
            total += v;
        }
        assert!((total - 1.0).abs() < 1e-15);
        let words = g.enumerate_words(2);
        assert_eq!(words.len(), 32);
        let s: f64 = words.iter().map(|w| parry_measure(&g, &sd, &Cylinder::new(&g, 3, w.clone()).unwrap())).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn phi1_values() {
        let g = example_qa();
        let sd = SpectralData::of_graph(&g).unwrap();
        let w = PathWindow::admissible(&g, -1, vec![0, 0, 0, 0, 0]).unwrap();
        let plus = |n| phi1_plus(&g, &sd, &PlusSegment::new(n, w.clone()).unwrap());
        let minus = |n| phi1_minus(&g, &sd, &MinusSegment::new(n, w.clone()).unwrap());
        assert!((plus(1) - 1.0).abs() < 1e-15);
        assert!((plus(3) - 16.0).abs() < 1e-13);
        assert!((plus(0) - 0.25).abs() < 1e-15);
        assert!((minus(0) - 0.5).abs() < 1e-15);
        assert!((minus(2) - 1.0 / 32.0).abs() < 1e-15);
        assert!((minus(-1) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn all_ones_matrix() {
        let q = IncidenceMatrix::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap();
        let g = OrientedGraph::from_matrix(&q).unwrap();
        let sd = SpectralData::decompose(&q, Default::default()).unwrap();
        assert!((sd.theta1 - 2f64.ln()).abs() < 1e-14);
        for e in 0..4 {
            let c = Cylinder::new(&g, 0, vec![e]).unwrap();
            assert!((parry_measure(&g, &sd, &c) - 0.25).abs() < 1e-15);
            let x = PathWindow::new(1, vec![e]).unwrap();
            let (l, r) = conditional_product_check(&g, &sd, &c, &x).unwrap();
            assert!((l - r).abs() < 1e-15);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let t = PeriodicTower::of_graph(&example_qa()).unwrap();
        let a = sample_parry(&t, 1, 6, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = sample_parry(&t, 1, 6, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        example_qa().check_word(&a.edges).unwrap();
    }
}
