//! Ergodic integrals at growing scales: error audit against `Φ_f⁺`, deviation exponents,
//! the distributional limit of normalized sums and the Hölder modulus of their paths.
//!
//! Scales are coupled through a common sample `y`: the start at scale `n` shares the
//! coordinates of `y` shifted up by `n` levels and sits at the same relative position inside its
//! level-`(n+1)` cell, so it is Parry distributed and `σⁿ` maps it to `y`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::flow::{self, CellValues, Extension, FlowState};
use crate::measures::{PlusMeasure, TOL_ARC};
use crate::observables::{alpha, CellIntegrals, CylinderObservable};
use crate::spectral::SpectralData;
use crate::stats::{self, KsResult, MannKendall, Moments, SlopeEstimate};
use crate::tower::{dd_div, dd_to_f64, PeriodicTower, Tower};

/// Independent 64-bit seed for item `i` of a run seeded with `seed`.
pub fn substream(seed: u64, i: u64) -> u64 {
    let mut z = seed ^ i.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Parry-random states, one independent stream per sample.
pub fn sample_states(t: &dyn Tower, count: usize, top: i64, seed: u64) -> Result<Vec<FlowState>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, 2 * i as u64));
            flow::sample_state(t, top, &mut rng, substream(seed, 2 * i as u64 + 1))
        })
        .collect()
}

/// Start at scale `n` coupled to `y`: coordinates `x_{n+k} = y_k` and the same relative
/// position inside the level-`(n+1)` cell. `ty` is the tower `y` lives in.
pub fn coupled_start(t: &dyn Tower, n: i64, y: &FlowState, ty: &dyn Tower) -> Result<FlowState> {
    let v = y.vertex(ty);
    let frac = dd_div(y.offset, ty.length(1, v));
    let pos = frac * t.length(n + 1, v);
    let ext = y.extension.map(|e| Extension { seed: e.seed, shift: e.shift + n });
    let mut x = flow::locate(t, n + 1, &y.window.edges, pos, ext)?;
    x.clock = TwoFloat::from(0.0);
    Ok(x)
}

/// `∫_0^T f(h_t x) dt` for time given in double-double.
pub fn integral_dd(t: &dyn Tower, values: &dyn CellValues, x: &FlowState, time: TwoFloat) -> Result<Complex64> {
    let end = flow::flow(t, x, time)?;
    flow::value_between(values, t, x, &end)
}

/// Checkpointed ergodic integral with the prediction `Φ_f⁺(x, T)`.
#[derive(Debug, Clone, Serialize)]
pub struct ErgodicRun {
    pub checkpoints: Vec<f64>,
    pub integrals: Vec<[f64; 2]>,
    pub cocycle_pred: Vec<[f64; 2]>,
}

pub fn ergodic_run(t: &dyn Tower, ci: &CellIntegrals, phi: &dyn CellValues, start: &FlowState, checkpoints: &[f64]) -> Result<ErgodicRun> {
    let mut x = start.clone();
    x.extend_to(t, ci.depth as i64)?;
    let mut integrals = Vec::new();
    let mut pred = Vec::new();
    for &s in checkpoints {
        let end = flow::flow(t, &x, TwoFloat::from(s))?;
        let a = flow::value_between(ci, t, &x, &end)?;
        let b = flow::value_between(phi, t, &x, &end)?;
        integrals.push([a.re, a.im]);
        pred.push([b.re, b.im]);
    }
    Ok(ErgodicRun { checkpoints: checkpoints.to_vec(), integrals, cocycle_pred: pred })
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditRow {
    pub time: f64,
    pub error: f64,
    pub bound_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Audit {
    pub rows: Vec<AuditRow>,
    pub trend: MannKendall,
    pub max_ratio: f64,
}

/// Times `φ · 4^{2 + k/2}`, `k = 0..35`, inside `[4², 4²⁰]`. The golden factor keeps them off
/// whole-cell lengths, where the error cancels and only rounding is left.
pub fn audit_grid() -> Vec<f64> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    (0..36).map(|k| phi * 4f64.powf(2.0 + k as f64 / 2.0)).collect()
}

/// `max_x |∫_0^T f − Φ_f⁺(x, T)|` and its ratio to `(1 + log(1 + T))^{m+1}` over the grid.
pub fn multiplic_audit(t: &dyn Tower, ci: &CellIntegrals, phi: &dyn CellValues, starts: &[FlowState], grid: &[f64]) -> Result<Audit> {
    let m = t.dim() as i32;
    let mut rows = Vec::with_capacity(grid.len());
    for &time in grid {
        let errs: Result<Vec<f64>> = starts
            .par_iter()
            .map(|x| {
                let mut x = x.clone();
                x.extend_to(t, ci.depth as i64)?;
                let end = flow::flow(t, &x, TwoFloat::from(time))?;
                let a = flow::value_between(ci, t, &x, &end)?;
                let b = flow::value_between(phi, t, &x, &end)?;
                Ok((a - b).norm())
            })
            .collect();
        let error = errs?.into_iter().fold(0.0, f64::max);
        let bound = (1.0 + (1.0 + time).ln()).powi(m + 1);
        rows.push(AuditRow { time, error, bound_ratio: error / bound });
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.bound_ratio).collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(Audit { trend: stats::mann_kendall(&ratios), rows, max_ratio })
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationRow {
    pub n: i64,
    pub time: f64,
    pub max_abs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Deviation {
    pub rows: Vec<DeviationRow>,
    pub slope: SlopeEstimate,
}

/// Growth exponent of `max |∫_0^T f|` over the scales `T = scale(n)`, from the starts
/// `starts(n)`.
pub fn deviation_exponent(
    t: &dyn Tower,
    ci: &CellIntegrals,
    ns: &[i64],
    scale: &dyn Fn(i64) -> TwoFloat,
    starts: &dyn Fn(i64) -> Result<Vec<FlowState>>,
    seed: u64,
) -> Result<Deviation> {
    let mut rows = Vec::new();
    for &n in ns {
        let time = scale(n);
        let xs = starts(n)?;
        let vals: Result<Vec<f64>> = xs
            .into_par_iter()
            .map(|mut x| {
                x.extend_to(t, ci.depth as i64)?;
                Ok(integral_dd(t, ci, &x, time)?.norm())
            })
            .collect();
        let max_abs = vals?.into_iter().fold(0.0, f64::max);
        rows.push(DeviationRow { n, time: dd_to_f64(time), max_abs });
    }
    if rows.iter().any(|r| !(r.max_abs > 0.0)) {
        return Err(Error::Degenerate("ergodic integral vanishes at some scale".into()));
    }
    let x: Vec<f64> = rows.iter().map(|r| r.time.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.max_abs.ln()).collect();
    Ok(Deviation { slope: stats::slope_with_bootstrap(&x, &y, 2000, seed), rows })
}

pub fn dd_powi(x: TwoFloat, n: i64) -> TwoFloat {
    let mut p = TwoFloat::from(1.0);
    for _ in 0..n.unsigned_abs() {
        p = p * x;
    }
    if n < 0 {
        dd_div(TwoFloat::from(1.0), p)
    } else {
        p
    }
}

/// Deviation run on the periodic tower with `T = ρⁿ` and starts coupled to one Parry sample.
pub fn periodic_deviation(t: &PeriodicTower, f: &CylinderObservable, ns: &[i64], samples: usize, seed: u64) -> Result<Deviation> {
    let ci = CellIntegrals::new(t, f)?;
    let ys = sample_states(t, samples, f.depth as i64 + 3, seed)?;
    let rho = t.sd.rho_dd;
    deviation_exponent(
        t,
        &ci,
        ns,
        &|n| dd_powi(rho, n),
        &|n| ys.iter().map(|y| coupled_start(t, n, y, t)).collect(),
        substream(seed, 1),
    )
}

/// `μ₂` with `Q v₂ = μ₂ v₂`.
pub fn second_eigenvalue(sd: &SpectralData) -> Result<f64> {
    let (v2, vt2) = match (&sd.v2, &sd.vt2) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Degenerate("second eigenvalue is not real and simple".into())),
    };
    Ok(sd.q.apply(v2).iter().zip(vt2).map(|(a, b)| a * b).sum())
}

/// The limit harness on the periodic tower: `T_n = ρⁿ`, normalization `α(f) μ₂ⁿ`.
pub fn periodic_limit(t: &PeriodicTower, f: &CylinderObservable, cfg: &LimitConfig) -> Result<LimitReport> {
    let sd = &t.sd;
    let a = alpha(sd, t, f)?;
    if a.norm() < 1e-12 {
        return Err(Error::Degenerate("α(f) vanishes".into()));
    }
    let mu2 = second_eigenvalue(sd)?;
    let theta2 = sd.theta2.ok_or_else(|| Error::Degenerate("no second exponent".into()))?;
    let phi2 = PlusMeasure::second(sd)?.table(sd, t, TOL_ARC)?;
    let ci = CellIntegrals::new(t, f)?;
    let scales: Vec<Scale<'_>> = cfg
        .ns
        .iter()
        .map(|&n| Scale {
            n,
            tower: t,
            integrals: &ci,
            time_unit: dd_powi(sd.rho_dd, n),
            norm: a * mu2.powi(n as i32),
            reference: None,
        })
        .collect();
    limit_distribution_test(t, &phi2, &scales, theta2 / sd.theta1, cfg)
}

#[derive(Debug, Clone)]
pub struct LimitConfig {
    pub ns: Vec<i64>,
    pub taus: Vec<f64>,
    pub samples: usize,
    pub eta_samples: usize,
    /// Samples used for the path modulus and number of grid intervals on `[0, 1]`.
    pub modulus_samples: usize,
    pub modulus_grid: usize,
    /// Values closer than this are treated as equal in the KS statistic.
    pub ks_tie_tol: f64,
    pub seed: u64,
}

impl Default for LimitConfig {
    fn default() -> Self {
        LimitConfig {
            ns: vec![9, 12, 15],
            taus: vec![0.25, 0.5, 1.0],
            samples: 10_000,
            eta_samples: 10_000,
            modulus_samples: 500,
            modulus_grid: 32,
            ks_tie_tol: 1e-6,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KsRow {
    pub n: i64,
    pub tau: f64,
    pub ks: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub n: i64,
    /// `"sums"` for the normalized sums, `"eta"` for the reference samples.
    pub source: &'static str,
    pub tau: f64,
    pub moments: Moments,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModulusRow {
    pub n: i64,
    pub c_emp: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub ks: Vec<KsRow>,
    pub moments: Vec<MomentRow>,
    pub modulus: Vec<ModulusRow>,
    pub exponent: f64,
    /// Largest absolute value at `τ = 0` on either side.
    pub tau_zero_max: f64,
}

/// Everything the harness needs about one scale `n`: the tower of the starts, the time unit
/// and the normalization of the sums.
pub struct Scale<'a> {
    pub n: i64,
    pub tower: &'a dyn Tower,
    pub integrals: &'a CellIntegrals,
    /// `T` corresponding to `τ = 1`.
    pub time_unit: TwoFloat,
    /// Divisor of the ergodic integral.
    pub norm: Complex64,
    /// Tower and `Φ₂⁺` the scale is coupled to, when it differs from the common one.
    pub reference: Option<(&'a dyn Tower, &'a dyn CellValues)>,
}

/// Normalized sums `∫_0^{τ T_n} f / norm_n` of coupled starts against `η = Φ₂⁺(y', τ)` samples.
/// `phi2` evaluates `Φ₂⁺` on `ty`; `exponent` is `θ₂/θ₁` for the modulus.
pub fn limit_distribution_test(
    ty: &dyn Tower,
    phi2: &dyn CellValues,
    scales: &[Scale<'_>],
    exponent: f64,
    cfg: &LimitConfig,
) -> Result<LimitReport> {
    let top = scales.iter().map(|s| s.integrals.depth as i64).max().unwrap_or(0).max(1) + 3;
    let mut taus: Vec<f64> = vec![0.0];
    taus.extend(cfg.taus.iter().copied().filter(|&x| x > 0.0));

    let reference_samples = |ty: &dyn Tower, phi2: &dyn CellValues| -> Result<(Vec<FlowState>, Vec<Vec<f64>>)> {
        let ys = sample_states(ty, cfg.samples, top, cfg.seed)?;
        let etas = sample_states(ty, cfg.eta_samples, top, substream(cfg.seed, u64::MAX))?;
        let vals: Result<Vec<Vec<f64>>> = etas
            .par_iter()
            .map(|y| taus.iter().map(|&tau| Ok(integral_dd(ty, phi2, y, TwoFloat::from(tau))?.re)).collect())
            .collect();
        Ok((ys, vals?))
    };
    let common = if scales.iter().any(|s| s.reference.is_none()) { Some(reference_samples(ty, phi2)?) } else { None };

    let mut tau_zero_max: f64 = 0.0;
    let mut ks = Vec::new();
    let mut moments = Vec::new();
    let mut modulus = Vec::new();
    for sc in scales {
        let own;
        let (ty_s, (ys, eta_vals)) = match sc.reference {
            Some((rt, rphi)) => {
                own = reference_samples(rt, rphi)?;
                (rt, &own)
            }
            None => (ty, common.as_ref().unwrap()),
        };
        let vals: Result<Vec<Vec<f64>>> = ys
            .par_iter()
            .map(|y| {
                let mut x = coupled_start(sc.tower, sc.n, y, ty_s)?;
                x.extend_to(sc.tower, sc.integrals.depth as i64)?;
                taus.iter()
                    .map(|&tau| Ok((integral_dd(sc.tower, sc.integrals, &x, sc.time_unit * tau)? / sc.norm).re))
                    .collect()
            })
            .collect();
        let vals = vals?;
        tau_zero_max = tau_zero_max
            .max(vals.iter().map(|v| v[0].abs()).fold(0.0, f64::max))
            .max(eta_vals.iter().map(|v| v[0].abs()).fold(0.0, f64::max));
        for (k, &tau) in taus.iter().enumerate().skip(1) {
            let a: Vec<f64> = vals.iter().map(|v| v[k]).collect();
            let b: Vec<f64> = eta_vals.iter().map(|v| v[k]).collect();
            let r: KsResult = stats::ks_two_sample_tol(&a, &b, cfg.ks_tie_tol);
            ks.push(KsRow { n: sc.n, tau, ks: r.statistic, p_value: r.p_value });
            moments.push(MomentRow { n: sc.n, source: "sums", tau, moments: stats::moments(&a) });
            moments.push(MomentRow { n: sc.n, source: "eta", tau, moments: stats::moments(&b) });
        }
        let c = path_modulus(sc, &ys[..cfg.modulus_samples.min(ys.len())], ty_s, exponent, cfg.modulus_grid)?;
        modulus.push(ModulusRow { n: sc.n, c_emp: c });
    }
    Ok(LimitReport { ks, moments, modulus, exponent, tau_zero_max })
}

/// `max` over samples and grid pairs of `|S(τ₂) − S(τ₁)| / |τ₂ − τ₁|^exponent`.
pub fn path_modulus(sc: &Scale<'_>, ys: &[FlowState], ty: &dyn Tower, exponent: f64, grid: usize) -> Result<f64> {
    let per: Result<Vec<f64>> = ys
        .par_iter()
        .map(|y| {
            let mut x = coupled_start(sc.tower, sc.n, y, ty)?;
            x.extend_to(sc.tower, sc.integrals.depth as i64)?;
            let path: Result<Vec<f64>> = (0..=grid)
                .map(|k| {
                    let tau = k as f64 / grid as f64;
                    Ok((integral_dd(sc.tower, sc.integrals, &x, sc.time_unit * tau)? / sc.norm).re)
                })
                .collect();
            let path = path?;
            let mut c: f64 = 0.0;
            for i in 0..=grid {
                for j in i + 1..=grid {
                    let dt = (j - i) as f64 / grid as f64;
                    c = c.max((path[j] - path[i]).abs() / dt.powf(exponent));
                }
            }
            Ok(c)
        })
        .collect();
    Ok(per?.into_iter().fold(0.0, f64::max))
}

/// Log–log slope of `sup_x |Φ(x, t)|` over `t = base^{-k}`.
pub fn hoelder_slope(t: &dyn Tower, phi: &dyn CellValues, starts: &[FlowState], base: f64, ks: &[i32], seed: u64) -> Result<(Vec<(f64, f64)>, SlopeEstimate)> {
    let times: Vec<f64> = ks.iter().map(|&k| base.powi(-k)).collect();
    let table = flow::hoelder_probe(phi, t, starts, &times)?;
    if table.iter().any(|r| !(r.1 > 0.0)) {
        return Err(Error::Degenerate("cocycle vanishes on the sample".into()));
    }
    let x: Vec<f64> = table.iter().map(|r| r.0.ln()).collect();
    let y: Vec<f64> = table.iter().map(|r| r.1.ln()).collect();
    let est = stats::slope_with_bootstrap(&x, &y, 2000, seed);
    Ok((table, est))
}
