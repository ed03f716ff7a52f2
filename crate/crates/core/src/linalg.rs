//! Dense complex linear algebra used by the spectral code: eigenvalue clusters, generalized
//! eigenspaces and the splitting of a matrix into expanding and contracting parts.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(c)
}

pub fn cvec(v: &[f64]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|&x| c(x)))
}

pub fn l1(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

pub fn l1_slice(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

/// Induced ℓ¹ operator norm (max column sum).
pub fn op_norm_l1(a: &CMat) -> f64 {
    (0..a.ncols()).map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Bilinear (not Hermitian) pairing `Σ a_i b_i`.
pub fn bilinear(a: &CVec, b: &CVec) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Scales to unit ℓ¹ norm and rotates the phase so the first non-negligible entry is real
/// and positive.
pub fn normalize_l1_phase(v: &CVec) -> CVec {
    let n = l1(v);
    if n == 0.0 {
        return v.clone();
    }
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = v.iter().find(|z| z.norm() > 1e-9 * max).copied().unwrap_or(c(1.0));
    let phase = pivot.conj() / pivot.norm();
    v.map(|z| z * phase / n)
}

/// All eigenvalues, using the real Schur form when the matrix is real.
pub fn eigenvalues(s: &CMat) -> Vec<Complex64> {
    if s.iter().all(|z| z.im == 0.0) {
        let re = s.map(|z| z.re);
        Schur::new(re).complex_eigenvalues().iter().copied().collect()
    } else {
        let (_, t) = Schur::new(s.clone()).unpack();
        (0..t.nrows()).map(|i| t[(i, i)]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Cluster {
    pub value: Complex64,
    pub multiplicity: usize,
    pub jordan_blocks: Vec<usize>,
    pub basis: CMat,
}

/// Groups numerically coincident eigenvalues. The mean of a cluster is well conditioned even
/// when the individual members of a Jordan block are not.
pub fn cluster_eigenvalues(eigs: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let scale = eigs.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    for &z in eigs {
        if let Some(g) = groups.iter_mut().find(|g| g.iter().any(|w| (w - z).norm() <= tol * scale)) {
            g.push(z);
        } else {
            groups.push(vec![z]);
        }
    }
    let mut out: Vec<(Complex64, usize)> = groups
        .into_iter()
        .map(|g| {
            let n = g.len();
            let mean = g.iter().sum::<Complex64>() / n as f64;
            // Real clusters stay real.
            let mean = if mean.im.abs() <= tol * scale { c(mean.re) } else { mean };
            (mean, n)
        })
        .collect();
    out.sort_by(|a, b| {
        b.0.norm()
            .partial_cmp(&a.0.norm())
            .unwrap()
            .then(b.0.re.partial_cmp(&a.0.re).unwrap())
            .then(b.0.im.partial_cmp(&a.0.im).unwrap())
    });
    out
}

fn sorted_svd(a: &CMat) -> (Vec<f64>, CMat) {
    let svd = a.clone().svd(false, true);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let vt = svd.v_t.expect("v_t requested");
    let mut idx: Vec<usize> = (0..sv.len()).collect();
    idx.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap());
    let svs: Vec<f64> = idx.iter().map(|&i| sv[i]).collect();
    let v = CMat::from_fn(a.ncols(), idx.len(), |r, k| vt[(idx[k], r)].conj());
    (svs, v)
}

/// Numerical rank with a threshold relative to the largest singular value (or `scale`).
pub fn rank(a: &CMat, rel_tol: f64, scale: f64) -> usize {
    let (sv, _) = sorted_svd(a);
    let s0 = sv.first().copied().unwrap_or(0.0).max(scale);
    sv.iter().filter(|&&s| s > rel_tol * s0).count()
}

/// Orthonormal basis of the `k` right singular vectors with the smallest singular values,
/// plus the largest of those singular values and the next one up.
pub fn null_space(a: &CMat, k: usize) -> (CMat, f64, f64) {
    let (sv, v) = sorted_svd(a);
    let n = sv.len();
    let basis = v.columns(n - k, k).into_owned();
    let kept = if k > 0 { sv[n - k] } else { 0.0 };
    let next = if k < n { sv[n - k - 1] } else { f64::INFINITY };
    (basis, kept, next)
}

pub fn pow(a: &CMat, k: usize) -> CMat {
    let mut r = CMat::identity(a.nrows(), a.ncols());
    for _ in 0..k {
        r = &r * a;
    }
    r
}

pub fn inverse(a: &CMat) -> Result<CMat> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::IllConditioned("singular matrix in basis inversion".into()))
}

/// Condition number in the spectral norm.
pub fn condition(a: &CMat) -> f64 {
    let (sv, _) = sorted_svd(a);
    let lo = *sv.last().unwrap();
    if lo == 0.0 {
        f64::INFINITY
    } else {
        sv[0] / lo
    }
}

/// Clusters with generalized eigenspaces and Jordan structure.
pub fn clusters(s: &CMat, tol: f64) -> Result<Vec<Cluster>> {
    let m = s.nrows();
    let scale = op_norm_l1(s).max(1.0);
    let eigs = eigenvalues(s);
    let mut out = Vec::new();
    for (mu, a) in cluster_eigenvalues(&eigs, tol) {
        let shifted = s - CMat::identity(m, m) * mu;
        let big = pow(&shifted, a);
        let (basis, kept, next) = null_space(&big, a);
        let big_scale = scale.powi(a as i32);
        if kept > 1e-7 * big_scale || next < 1e-7 * big_scale {
            return Err(Error::IllConditioned(format!(
                "generalized eigenspace of {mu} not resolved (singular values {kept:e}, {next:e})"
            )));
        }
        // Jordan structure from the rank sequence of powers of (S - mu).
        let mut ranks = vec![m];
        for k in 1..=a {
            ranks.push(rank(&pow(&shifted, k), 1e-8, scale.powi(k as i32)));
        }
        let at_least: Vec<usize> = (1..=a).map(|k| ranks[k - 1] - ranks[k]).collect();
        let mut blocks = Vec::new();
        for k in 1..=a {
            let exact = at_least[k - 1] - at_least.get(k).copied().unwrap_or(0);
            for _ in 0..exact {
                blocks.push(k);
            }
        }
        blocks.sort_unstable_by(|x, y| y.cmp(x));
        if blocks.iter().sum::<usize>() != a {
            return Err(Error::IllConditioned(format!("Jordan structure of {mu} is inconsistent")));
        }
        let basis = if a == 1 {
            CMat::from_columns(&[normalize_l1_phase(&basis.column(0).into_owned())])
        } else {
            let cols: Vec<CVec> = (0..a).map(|k| normalize_l1_phase(&basis.column(k).into_owned())).collect();
            CMat::from_columns(&cols)
        };
        out.push(Cluster { value: mu, multiplicity: a, jordan_blocks: blocks, basis });
    }
    Ok(out)
}

/// Splitting of `C^m` into the span of generalized eigenvectors with `|mu| > r` and with
/// `|mu| < r`. Eigenvalues within `band` of the circle make the splitting ill-conditioned.
#[derive(Debug, Clone)]
pub struct Splitting {
    pub clusters: Vec<Cluster>,
    pub plus: CMat,
    pub minus: CMat,
    pub proj_plus: CMat,
    /// `S` restricted to `plus`, in the coordinates of its columns.
    pub plus_block: CMat,
    /// Inverse of `plus_block`, when it exists.
    pub plus_block_inv: Option<CMat>,
}

pub fn split(s: &CMat, r: f64, band: f64, tol: f64) -> Result<Splitting> {
    let m = s.nrows();
    let cl = clusters(s, tol)?;
    for k in &cl {
        if (k.value.norm() - r).abs() <= band * r.max(1.0) {
            return Err(Error::IllConditioned(format!(
                "eigenvalue {} lies on the circle of radius {r}",
                k.value
            )));
        }
    }
    let pcols: Vec<CVec> = cl
        .iter()
        .filter(|k| k.value.norm() > r)
        .flat_map(|k| k.basis.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>())
        .collect();
    let mcols: Vec<CVec> = cl
        .iter()
        .filter(|k| k.value.norm() < r)
        .flat_map(|k| k.basis.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>())
        .collect();
    let kp = pcols.len();
    let plus = if kp > 0 { CMat::from_columns(&pcols) } else { CMat::zeros(m, 0) };
    let minus = if kp < m { CMat::from_columns(&mcols) } else { CMat::zeros(m, 0) };
    let mut all = pcols.clone();
    all.extend(mcols.iter().cloned());
    let b = CMat::from_columns(&all);
    if condition(&b) > 1e12 {
        return Err(Error::IllConditioned("eigenvector basis is nearly singular".into()));
    }
    let binv = inverse(&b)?;
    let mut d = CMat::zeros(m, m);
    for i in 0..kp {
        d[(i, i)] = c(1.0);
    }
    let proj_plus = &b * d * &binv;
    let block = &binv * s * &b;
    let plus_block = block.view((0, 0), (kp, kp)).into_owned();
    let plus_block_inv = if kp > 0 { plus_block.clone().try_inverse() } else { Some(CMat::zeros(0, 0)) };
    Ok(Splitting { clusters: cl, plus, minus, proj_plus, plus_block, plus_block_inv })
}

/// Coordinates of `v` in the column basis `b` (least squares) and the relative residual.
pub fn coordinates(b: &CMat, v: &CVec) -> (CVec, f64) {
    if b.ncols() == 0 {
        return (CVec::zeros(0), if l1(v) == 0.0 { 0.0 } else { 1.0 });
    }
    let svd = b.clone().svd(true, true);
    let x = svd.solve(v, 1e-14).expect("svd solve");
    let r = b * &x - v;
    let denom = l1(v).max(1e-300);
    (x, l1(&r) / denom)
}
