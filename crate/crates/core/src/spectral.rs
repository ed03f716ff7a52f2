//! Spectral data of an incidence matrix: Perron pair, expanding and contracting splittings of
//! `Q` and `Qᵗ`, the second eigenvalue, and recovery of expanding vectors from noisy orbits.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::graph::{IncidenceMatrix, OrientedGraph};
use crate::linalg::{self, c, CMat, CVec, Splitting};

#[derive(Debug, Clone, Copy)]
pub struct SpectralTol {
    /// Width of the band around the unit circle that is refused.
    pub unit: f64,
    /// Relative distance under which eigenvalues are merged into one cluster.
    pub cluster: f64,
    /// Residual allowed in the invariant checks.
    pub check: f64,
}

impl Default for SpectralTol {
    fn default() -> Self {
        SpectralTol { unit: 1e-8, cluster: 1e-5, check: 1e-9 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenInfo {
    #[serde(serialize_with = "ser_complex")]
    pub value: Complex64,
    pub multiplicity: usize,
    pub jordan_blocks: Vec<usize>,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

#[derive(Debug, Clone)]
pub struct SpectralData {
    pub q: IncidenceMatrix,
    pub rho: f64,
    pub rho_dd: TwoFloat,
    pub theta1: f64,
    pub h: Vec<f64>,
    pub h_dd: Vec<TwoFloat>,
    pub la: Vec<f64>,
    pub eigenvalues: Vec<EigenInfo>,
    /// Columns span E⁺; the first column is `h`.
    pub e_plus: CMat,
    pub e_minus: CMat,
    /// Columns span Ẽ⁺; the first column is `λ`.
    pub et_plus: CMat,
    pub et_minus: CMat,
    /// Dual basis of `e_plus` inside Ẽ⁺: `e_plusᵗ · dual_plus = I`.
    pub dual_plus: CMat,
    /// Index into `eigenvalues` of the cluster each `e_plus` column belongs to.
    pub plus_cluster: Vec<usize>,
    pub p_plus: CMat,
    pub pt_plus: CMat,
    /// `Q` on E⁺ in the coordinates of `e_plus`, and its inverse.
    pub a_plus: CMat,
    pub a_plus_inv: CMat,
    /// `Qᵗ` on Ẽ⁺ in the coordinates of `et_plus`, and its inverse.
    pub at_plus: CMat,
    pub at_plus_inv: CMat,
    pub theta2: Option<f64>,
    pub v2: Option<Vec<f64>>,
    pub vt2: Option<Vec<f64>>,
}

/// Perron eigenvector refined in double-double by Newton steps on the bordered system.
fn refine_perron(q: &IncidenceMatrix, h0: &[f64], rho0: f64, la: &[f64]) -> (Vec<TwoFloat>, TwoFloat) {
    let m = q.dim();
    let mut h: Vec<TwoFloat> = h0.iter().map(|&x| TwoFloat::from(x)).collect();
    let mut rho = TwoFloat::from(rho0);
    let mut jac = DMatrix::<f64>::zeros(m + 1, m + 1);
    for i in 0..m {
        for j in 0..m {
            jac[(i, j)] = q.get(i, j) as f64;
        }
        jac[(i, i)] -= rho0;
        jac[(m, i)] = la[i];
    }
    for _ in 0..3 {
        let mut rhs = DVector::<f64>::zeros(m + 1);
        for i in 0..m {
            jac[(i, m)] = -(h[i].hi());
            let mut r = TwoFloat::from(0.0);
            for j in 0..m {
                r += h[j] * (q.get(i, j) as f64);
            }
            r -= rho * h[i];
            rhs[i] = -(r.hi() + r.lo());
        }
        let mut norm = TwoFloat::from(0.0);
        for i in 0..m {
            norm += h[i] * la[i];
        }
        let nr = TwoFloat::from(1.0) - norm;
        rhs[m] = nr.hi() + nr.lo();
        let Some(delta) = jac.clone().lu().solve(&rhs) else { break };
        for i in 0..m {
            h[i] += delta[i];
        }
        rho += delta[m];
    }
    (h, rho)
}

fn real_vec(v: &CVec) -> Vec<f64> {
    v.iter().map(|z| z.re).collect()
}

impl SpectralData {
    pub fn of_graph(g: &OrientedGraph) -> Result<Self> {
        Self::decompose(&g.incidence(), SpectralTol::default())
    }

    pub fn decompose(q: &IncidenceMatrix, tol: SpectralTol) -> Result<Self> {
        let m = q.dim();
        for i in 0..m {
            for j in 0..m {
                if q.get(i, j) < 0 {
                    return Err(Error::InvalidGraph(format!("negative entry Q[{i}][{j}]")));
                }
            }
        }
        let g = OrientedGraph::from_matrix(q)?;
        if !g.is_primitive() {
            return Err(Error::NonPrimitive("no power of Q is strictly positive".into()));
        }
        let qf = q.to_f64();
        let qc = linalg::to_complex(&qf);
        let qt = linalg::to_complex(&qf.transpose());
        let eigs = linalg::eigenvalues(&qc);
        let rho = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if rho <= 1.0 + tol.unit {
            return Err(Error::NonExpanding { rho });
        }
        let split: Splitting = linalg::split(&qc, 1.0, tol.unit, tol.cluster)?;
        let tsplit: Splitting = linalg::split(&qt, 1.0, tol.unit, tol.cluster)?;
        let top = &split.clusters[0];
        if top.multiplicity != 1 || top.value.im != 0.0 || (top.value.re - rho).abs() > 1e-9 * rho {
            return Err(Error::NonPrimitive("Perron eigenvalue is not simple".into()));
        }
        if split.clusters.len() > 1 && split.clusters[1].value.norm() > rho * (1.0 - tol.cluster) {
            return Err(Error::NonPrimitive("second eigenvalue on the spectral circle".into()));
        }
        let rho = top.value.re;
        let mut h = real_vec(&top.basis.column(0).into_owned());
        let mut la = real_vec(&tsplit.clusters[0].basis.column(0).into_owned());
        if h.iter().any(|&x| x <= 0.0) || la.iter().any(|&x| x <= 0.0) {
            return Err(Error::NonPrimitive("Perron vector is not strictly positive".into()));
        }
        let sl: f64 = la.iter().sum();
        la.iter_mut().for_each(|x| *x /= sl);
        let s: f64 = h.iter().zip(&la).map(|(a, b)| a * b).sum();
        h.iter_mut().for_each(|x| *x /= s);
        let (h_dd, rho_dd) = refine_perron(q, &h, rho, &la);
        let h: Vec<f64> = h_dd.iter().map(|x| x.hi() + x.lo()).collect();
        let rho = rho_dd.hi() + rho_dd.lo();

        // Perron column replaced by h (and λ), the other columns kept from the splitting.
        let mut e_plus = split.plus.clone();
        e_plus.set_column(0, &linalg::cvec(&h));
        let mut et_plus = tsplit.plus.clone();
        et_plus.set_column(0, &linalg::cvec(&la));
        let k = e_plus.ncols();
        if et_plus.ncols() != k {
            return Err(Error::IllConditioned("E⁺ and Ẽ⁺ have different dimensions".into()));
        }
        let gram = e_plus.transpose() * &et_plus;
        let dual_plus = &et_plus * linalg::inverse(&gram)?;

        let pinv = |b: &CMat| -> Result<CMat> {
            let bh = b.adjoint();
            Ok(linalg::inverse(&(&bh * b))? * bh)
        };
        let a_plus = pinv(&e_plus)? * &qc * &e_plus;
        let a_plus_inv = linalg::inverse(&a_plus)?;
        let at_plus = pinv(&et_plus)? * &qt * &et_plus;
        let at_plus_inv = linalg::inverse(&at_plus)?;

        let mut plus_cluster = Vec::new();
        for (ci, cl) in split.clusters.iter().enumerate() {
            if cl.value.norm() > 1.0 {
                plus_cluster.extend(std::iter::repeat(ci).take(cl.multiplicity));
            }
        }

        // Second eigenvalue: real, simple, > 1, alone on its circle.
        let (mut theta2, mut v2, mut vt2) = (None, None, None);
        if split.clusters.len() > 1 {
            let second = &split.clusters[1];
            let alone = split.clusters.get(2).map_or(true, |c3| c3.value.norm() < second.value.norm() * (1.0 - tol.cluster));
            if second.multiplicity == 1 && second.value.im == 0.0 && second.value.re > 1.0 && alone {
                let v = real_vec(&linalg::normalize_l1_phase(&second.basis.column(0).into_owned()));
                // The dual partner is the matching column of the dual basis.
                let vt = real_vec(&dual_plus.column(1).into_owned());
                theta2 = Some(second.value.re.ln());
                v2 = Some(v);
                vt2 = Some(vt);
            }
        }

        let eigenvalues = split
            .clusters
            .iter()
            .map(|c| EigenInfo { value: c.value, multiplicity: c.multiplicity, jordan_blocks: c.jordan_blocks.clone() })
            .collect();

        let sd = SpectralData {
            q: q.clone(),
            rho,
            rho_dd,
            theta1: rho.ln(),
            h,
            h_dd,
            la,
            eigenvalues,
            e_plus,
            e_minus: split.minus.clone(),
            et_plus,
            et_minus: tsplit.minus.clone(),
            dual_plus,
            plus_cluster,
            p_plus: split.proj_plus.clone(),
            pt_plus: tsplit.proj_plus.clone(),
            a_plus,
            a_plus_inv,
            at_plus,
            at_plus_inv,
            theta2,
            v2,
            vt2,
        };
        sd.check_invariants(tol.check)?;
        if m <= 4 {
            sd.check_char_poly(tol.check.max(1e-7))?;
        }
        Ok(sd)
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn dim_plus(&self) -> usize {
        self.e_plus.ncols()
    }

    /// Residuals of the type invariants; errors with `IllConditioned` when one exceeds `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let m = self.dim();
        let qf = self.q.to_f64();
        let qc = linalg::to_complex(&qf);
        let scale = self.rho.max(1.0);
        let qh = self.q.apply(&self.h);
        let qtl = self.q.apply_transpose(&self.la);
        let perron = (0..m)
            .map(|i| (qh[i] - self.rho * self.h[i]).abs().max((qtl[i] - self.rho * self.la[i]).abs()))
            .fold(0.0, f64::max);
        let sum_la: f64 = self.la.iter().sum();
        let pair: f64 = self.h.iter().zip(&self.la).map(|(a, b)| a * b).sum();
        let id = CMat::identity(m, m);
        let pm = &id - &self.p_plus;
        let proj = (&self.p_plus * &pm).norm().max((&qc * &self.p_plus - &self.p_plus * &qc).norm());
        let mut all: Vec<CVec> = self.e_plus.column_iter().map(|c| c.into_owned()).collect();
        all.extend(self.e_minus.column_iter().map(|c| c.into_owned()));
        let full = linalg::rank(&CMat::from_columns(&all), 1e-10, 0.0) == m;
        let dual = (self.e_plus.transpose() * &self.dual_plus - CMat::identity(self.dim_plus(), self.dim_plus())).norm();
        let checks = [
            ("Perron residual", perron / scale),
            ("sum of la", (sum_la - 1.0).abs()),
            ("<h, la>", (pair - 1.0).abs()),
            ("projection identities", proj / scale),
            ("dual basis", dual),
        ];
        for (name, r) in checks {
            if !(r <= tol * 10.0) {
                return Err(Error::IllConditioned(format!("{name} residual {r:e}")));
            }
        }
        if !full {
            return Err(Error::IllConditioned("E⁺ ⊕ E⁻ does not span".into()));
        }
        Ok(())
    }

    /// Cross-check of the eigenvalue clusters against the exact characteristic polynomial:
    /// each cluster value must be a root of the right multiplicity.
    pub fn check_char_poly(&self, tol: f64) -> Result<()> {
        let coeffs = self.q.char_poly();
        let scale: f64 = coeffs.iter().map(|&x| (x as f64).abs()).sum::<f64>();
        for e in &self.eigenvalues {
            let mut p: Vec<f64> = coeffs.iter().map(|&x| x as f64).collect();
            for d in 0..e.multiplicity {
                let mut val = c(0.0);
                for (k, &a) in p.iter().enumerate() {
                    val += e.value.powu(k as u32) * a;
                }
                let bound = tol * scale * e.value.norm().max(1.0).powi(p.len() as i32);
                if val.norm() > bound {
                    return Err(Error::IllConditioned(format!(
                        "eigenvalue {} fails the characteristic polynomial at derivative {d} ({:e})",
                        e.value,
                        val.norm()
                    )));
                }
                p = p.iter().enumerate().skip(1).map(|(k, &a)| a * k as f64).collect();
            }
        }
        Ok(())
    }

    /// Projection onto E⁺ along E⁻.
    pub fn project_plus(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        let w = &self.p_plus * CVec::from_column_slice(v);
        Ok(w.iter().copied().collect())
    }

    pub fn project_plus_transpose(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        let w = &self.pt_plus * CVec::from_column_slice(v);
        Ok(w.iter().copied().collect())
    }

    /// Coordinates of `v ∈ E⁺` in the `e_plus` basis.
    pub fn plus_coords(&self, v: &[Complex64]) -> Result<CVec> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        let (x, res) = linalg::coordinates(&self.e_plus, &CVec::from_column_slice(v));
        if res > 1e-9 {
            return Err(Error::NegativePowerOutsideEplus { residual: res });
        }
        Ok(x)
    }

    pub fn tplus_coords(&self, v: &[Complex64]) -> Result<CVec> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        let (x, res) = linalg::coordinates(&self.et_plus, &CVec::from_column_slice(v));
        if res > 1e-9 {
            return Err(Error::NegativePowerOutsideEtplus { residual: res });
        }
        Ok(x)
    }

    /// Exponential growth rate of `|Qⁿ v|`: the largest `log|μ|` over the generalized
    /// eigenspaces in which `v` has a non-negligible component.
    pub fn lyapunov_of_vector(&self, v: &[Complex64]) -> Result<f64> {
        let m = self.dim();
        if v.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: v.len() });
        }
        let vv = CVec::from_column_slice(v);
        let nv = linalg::l1(&vv);
        if nv == 0.0 {
            return Err(Error::InvalidArgument("zero vector has no growth rate".into()));
        }
        let qc = linalg::to_complex(&self.q.to_f64());
        let cl = linalg::clusters(&qc, 1e-5)?;
        let cols: Vec<CVec> = cl.iter().flat_map(|k| k.basis.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>()).collect();
        let b = CMat::from_columns(&cols);
        let coords = linalg::inverse(&b)? * &vv;
        let mut off = 0;
        for k in &cl {
            let part = coords.rows(off, k.multiplicity);
            off += k.multiplicity;
            if part.iter().map(|z| z.norm()).sum::<f64>() > 1e-10 * nv {
                return Ok(k.value.norm().ln());
            }
        }
        Err(Error::IllConditioned("vector has no resolvable component".into()))
    }

    /// Serializable summary.
    pub fn report(&self) -> SpectralReport {
        let cols = |b: &CMat| -> Vec<Vec<[f64; 2]>> {
            b.column_iter().map(|c| c.iter().map(|z| [z.re, z.im]).collect()).collect()
        };
        SpectralReport {
            matrix: self.q.rows(),
            theta1: self.theta1,
            rho: self.rho,
            h: self.h.clone(),
            la: self.la.clone(),
            eigenvalues: self.eigenvalues.clone(),
            e_plus_basis: cols(&self.e_plus),
            e_minus_basis: cols(&self.e_minus),
            et_plus_basis: cols(&self.et_plus),
            et_minus_basis: cols(&self.et_minus),
            theta2: self.theta2,
            v2: self.v2.clone(),
            vt2: self.vt2.clone(),
        }
    }

    /// `ṽ₂ᵗ v₂` and `ṽ₂ᵗ h`, which should be 1 and 0.
    pub fn second_pairings(&self) -> Option<(f64, f64)> {
        let v2 = self.v2.as_ref()?;
        let vt2 = self.vt2.as_ref()?;
        let a: f64 = v2.iter().zip(vt2).map(|(x, y)| x * y).sum();
        let b: f64 = self.h.iter().zip(vt2).map(|(x, y)| x * y).sum();
        Some((a, b))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub matrix: Vec<Vec<i64>>,
    pub theta1: f64,
    pub rho: f64,
    pub h: Vec<f64>,
    pub la: Vec<f64>,
    pub eigenvalues: Vec<EigenInfo>,
    pub e_plus_basis: Vec<Vec<[f64; 2]>>,
    pub e_minus_basis: Vec<Vec<[f64; 2]>>,
    pub et_plus_basis: Vec<Vec<[f64; 2]>>,
    pub et_minus_basis: Vec<Vec<[f64; 2]>>,
    pub theta2: Option<f64>,
    pub v2: Option<Vec<f64>>,
    pub vt2: Option<Vec<f64>>,
}

/// Orbit data `v(0), ..., v(N)` whose one-step defects `|S v(n) - v(n+1)|` are at most `delta`.
#[derive(Debug, Clone)]
pub struct NoisyVectorSequence {
    pub v: Vec<Vec<Complex64>>,
    pub delta: f64,
}

impl NoisyVectorSequence {
    /// Asserts the defect bound against `s`.
    pub fn new(s: &CMat, v: Vec<Vec<Complex64>>, delta: f64) -> Result<Self> {
        let seq = NoisyVectorSequence { v, delta };
        let d = seq.defect(s)?;
        if d > delta * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::InvalidArgument(format!("defect {d:e} exceeds the stated bound {delta:e}")));
        }
        Ok(seq)
    }

    /// Uses the observed defect as the bound.
    pub fn from_orbit(s: &CMat, v: Vec<Vec<Complex64>>) -> Result<Self> {
        let mut seq = NoisyVectorSequence { v, delta: 0.0 };
        seq.delta = seq.defect(s)?;
        Ok(seq)
    }

    pub fn defect(&self, s: &CMat) -> Result<f64> {
        let m = s.nrows();
        let mut d: f64 = 0.0;
        for w in &self.v {
            if w.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: w.len() });
            }
        }
        for n in 0..self.v.len().saturating_sub(1) {
            let sv = s * CVec::from_column_slice(&self.v[n]);
            let diff = sv - CVec::from_column_slice(&self.v[n + 1]);
            d = d.max(linalg::l1(&diff));
        }
        Ok(d)
    }
}

#[derive(Debug, Clone)]
pub struct Recovery {
    pub v: Vec<Complex64>,
    /// `max_{n≥1} |Sⁿv - v(n)| / (δ' n^q)` with `q = dim V - dim V⁺ + 1` and
    /// `δ' = max(δ, |P⁻ v(0)|)`.
    pub certificate: f64,
    pub delta_eff: f64,
    pub exponent: i32,
    pub terms: usize,
}

/// Finds the unique `v ∈ V⁺` shadowing a noisy orbit of `S`, as
/// `v = Σ S⁻ⁿ P⁺ u(n)` with `u(0) = v(0)` and `u(n+1) = v(n+1) - S v(n)`.
pub fn recover_expanding_vector(s: &CMat, seq: &NoisyVectorSequence) -> Result<Recovery> {
    let m = s.nrows();
    if s.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, got: s.ncols() });
    }
    if seq.v.is_empty() {
        return Err(Error::InvalidArgument("empty sequence".into()));
    }
    let sp = linalg::split(s, 1.0, 1e-8, 1e-5)?;
    let kp = sp.plus.ncols();
    let a_inv = sp
        .plus_block_inv
        .clone()
        .ok_or_else(|| Error::IllConditioned("S is not invertible on V⁺".into()))?;
    // Coordinates in the plus basis of P⁺ w are the first kp entries of B⁻¹ w.
    let mut all: Vec<CVec> = sp.plus.column_iter().map(|c| c.into_owned()).collect();
    all.extend(sp.minus.column_iter().map(|c| c.into_owned()));
    let binv = linalg::inverse(&CMat::from_columns(&all))?;
    let plus_coords = |w: &CVec| -> CVec { (&binv * w).rows(0, kp).into_owned() };

    let contraction = {
        let nrm = linalg::op_norm_l1(&(&sp.plus * &a_inv * binv.rows(0, kp)));
        if nrm < 1.0 {
            nrm
        } else {
            linalg::eigenvalues(&a_inv).iter().map(|z| z.norm()).fold(0.0, f64::max)
        }
    };
    let tol = 1e-16;
    let vs: Vec<CVec> = seq.v.iter().map(|w| CVec::from_column_slice(w)).collect();
    let scale = vs.iter().map(linalg::l1).fold(0.0, f64::max).max(1e-300);
    let mut acc = plus_coords(&vs[0]);
    let mut pow_inv = CMat::identity(kp, kp);
    let mut terms = 1;
    for n in 1..vs.len().min(65) {
        let u = &vs[n] - s * &vs[n - 1];
        let un = linalg::l1(&u);
        if un > seq.delta * (1.0 + 1e-9) + 1e-14 * scale {
            return Err(Error::SeriesDiverges { step: n, norm: un });
        }
        pow_inv = &pow_inv * &a_inv;
        let inc = &pow_inv * plus_coords(&u);
        acc += &inc;
        terms = n + 1;
        let inc_norm = linalg::l1(&(&sp.plus * &inc));
        if inc_norm < tol * scale * (1.0 - contraction).max(1e-3) && n >= 8 {
            break;
        }
    }
    let v = &sp.plus * acc;
    let q = (m - kp) as i32 + 1;
    let p_minus_v0 = &vs[0] - &sp.plus * plus_coords(&vs[0]);
    let delta_eff = seq.delta.max(linalg::l1(&p_minus_v0));
    let mut cert: f64 = 0.0;
    let mut sn = v.clone();
    for (n, w) in vs.iter().enumerate().skip(1) {
        sn = s * sn;
        let err = linalg::l1(&(&sn - w));
        if delta_eff > 0.0 {
            cert = cert.max(err / (delta_eff * (n as f64).powi(q)));
        } else if err > 1e-9 * linalg::l1(w).max(1.0) {
            cert = f64::INFINITY;
        }
    }
    Ok(Recovery { v: v.iter().copied().collect(), certificate: cert, delta_eff, exponent: q, terms })
}
