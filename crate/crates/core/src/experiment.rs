//! Experiment configurations and the batch commands run by the command-line tool.
//!
//! A configuration names either one graph (the periodic compactum) or a graph sequence, a list
//! of observables, and the settings of each command. Commands return their artifacts as strings
//! so callers decide where they go; the output depends only on the configuration.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::flow::{self, FlowState};
use crate::graph::{example_qa, example_qb, GraphSpec, OrientedGraph};
use crate::limit::{self, Deviation, LimitConfig, LimitReport};
use crate::measures::{shift_equivariance_check, PlusMeasure, TOL_ARC};
use crate::observables::{self, CellIntegrals, CylinderObservable, ObservableSpec};
use crate::ordering::{OrderingSpec, VershikOrdering};
use crate::random::{self, GraphSequence, LyapunovConfig, OseledetsData, RenormCocycle, SequenceSpec, SequenceTower};
use crate::spectral::{SpectralData, SpectralReport};
use crate::stats;
use crate::tower::{dd_to_f64, PeriodicTower, Tower};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub graph: Option<GraphSpec>,
    #[serde(default)]
    pub ordering: Option<OrderingSpec>,
    #[serde(default)]
    pub sequence: Option<SequenceSpec>,
    #[serde(default)]
    pub observables: Vec<ObservableSpec>,
    #[serde(default)]
    pub deviation: DeviationSettings,
    #[serde(default)]
    pub limit: LimitSettings,
    #[serde(default)]
    pub lyapunov: LyapunovSettings,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviationSettings {
    /// Observable name; all observables when absent.
    pub observable: Option<String>,
    pub ns: Vec<i64>,
    pub samples: usize,
    pub svg: bool,
}

impl Default for DeviationSettings {
    fn default() -> Self {
        DeviationSettings { observable: None, ns: (4..=12).collect(), samples: 256, svg: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitSettings {
    pub observable: Option<String>,
    pub ns: Vec<i64>,
    pub taus: Vec<f64>,
    pub samples: usize,
    pub eta_samples: usize,
    pub modulus_samples: usize,
    pub modulus_grid: usize,
    pub ks_tie_tol: f64,
    /// Sequence runs: length of the reference cylinder and the seed of the reference sequence.
    pub cylinder_len: usize,
    pub reference_seed: u64,
    pub table_tol: f64,
}

impl Default for LimitSettings {
    fn default() -> Self {
        let l = LimitConfig::default();
        let h = random::HarnessConfig::default();
        LimitSettings {
            observable: None,
            ns: l.ns,
            taus: l.taus,
            samples: l.samples,
            eta_samples: l.eta_samples,
            modulus_samples: l.modulus_samples,
            modulus_grid: l.modulus_grid,
            ks_tie_tol: l.ks_tie_tol,
            cylinder_len: h.cylinder_len,
            reference_seed: h.reference_seed,
            table_tol: h.table_tol,
        }
    }
}

impl LimitSettings {
    pub fn config(&self, seed: u64) -> LimitConfig {
        LimitConfig {
            ns: self.ns.clone(),
            taus: self.taus.clone(),
            samples: self.samples,
            eta_samples: self.eta_samples,
            modulus_samples: self.modulus_samples,
            modulus_grid: self.modulus_grid,
            ks_tie_tol: self.ks_tie_tol,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovSettings {
    pub horizon: usize,
    pub reorth_period: usize,
    pub burn_in: usize,
    pub block: usize,
    pub span: Option<i64>,
}

impl Default for LyapunovSettings {
    fn default() -> Self {
        let c = LyapunovConfig::default();
        LyapunovSettings { horizon: c.horizon, reorth_period: c.reorth_period, burn_in: c.burn_in, block: c.block, span: None }
    }
}

impl LyapunovSettings {
    pub fn config(&self, seed: u64) -> LyapunovConfig {
        LyapunovConfig {
            horizon: self.horizon,
            reorth_period: self.reorth_period,
            burn_in: self.burn_in,
            block: self.block,
            seed,
            ..LyapunovConfig::default()
        }
    }
}

/// The compactum a configuration describes.
pub enum Model {
    Periodic(PeriodicTower),
    Sequence { tower: SequenceTower, od: OseledetsData },
}

impl Model {
    pub fn tower(&self) -> &dyn Tower {
        match self {
            Model::Periodic(t) => t,
            Model::Sequence { tower, .. } => tower,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    fn graph(&self) -> Result<OrientedGraph> {
        self.graph.as_ref().ok_or_else(|| Error::Config("configuration has neither graph nor sequence".into()))?.build()
    }

    pub fn model(&self) -> Result<Model> {
        match (&self.graph, &self.sequence) {
            (Some(_), Some(_)) => Err(Error::Config("give either graph or sequence, not both".into())),
            (None, Some(s)) => {
                let seq = s.build()?;
                let (tower, od) = random::oseledets_spaces(&seq, &self.lyapunov.config(self.seed), self.lyapunov.span)?;
                Ok(Model::Sequence { tower, od })
            }
            _ => {
                let g = self.graph()?;
                let sd = SpectralData::of_graph(&g)?;
                let o = match &self.ordering {
                    Some(spec) => spec.build(&g)?,
                    None => VershikOrdering::canonical(&g),
                };
                Ok(Model::Periodic(PeriodicTower::new(g, o, sd)))
            }
        }
    }

    /// Observables selected by `name` (all when `None`), built on the model.
    pub fn observables(&self, model: &Model, name: Option<&str>) -> Result<Vec<(String, CylinderObservable)>> {
        let mut out = Vec::new();
        for (k, spec) in self.observables.iter().enumerate() {
            let label = spec.name.clone().unwrap_or_else(|| format!("f{k}"));
            if name.is_some_and(|n| n != label) {
                continue;
            }
            let f = match model {
                Model::Periodic(t) => spec.build(&t.sd, &t.graph)?,
                Model::Sequence { tower, .. } => spec.build_in(tower)?,
            };
            out.push((label, f));
        }
        if out.is_empty() {
            return Err(Error::Config(match name {
                Some(n) => format!("observable '{n}' not found"),
                None => "no observables configured".into(),
            }));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralOutput {
    Periodic {
        report: SpectralReport,
        /// Largest residual of the eigen-identities, and of the characteristic polynomial check.
        invariants_ok: bool,
        char_poly_ok: bool,
        second_pairings: Option<(f64, f64)>,
    },
    Sequence {
        oseledets: Box<OseledetsData>,
        norm_growth: (f64, f64),
        singular_value_slopes: Vec<f64>,
    },
}

pub fn cmd_spectral(cfg: &ExperimentConfig) -> Result<SpectralOutput> {
    match cfg.model()? {
        Model::Periodic(t) => {
            let sd = &t.sd;
            sd.check_invariants(1e-9)?;
            sd.check_char_poly(1e-9)?;
            Ok(SpectralOutput::Periodic {
                report: sd.report(),
                invariants_ok: true,
                char_poly_ok: true,
                second_pairings: sd.second_pairings(),
            })
        }
        Model::Sequence { tower, od } => {
            let rc = RenormCocycle::new(&tower.seq);
            let n = cfg.lyapunov.horizon + cfg.lyapunov.burn_in;
            let slopes = random::singular_value_slopes(&rc, 0, 10, 50)?;
            Ok(SpectralOutput::Sequence {
                oseledets: Box::new(od),
                norm_growth: random::norm_growth_oracle(&rc, 0, n),
                singular_value_slopes: slopes,
            })
        }
    }
}

/// Files produced by a command: `(file name, contents)`.
pub type Artifacts = Vec<(String, String)>;

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn cmd_deviation(cfg: &ExperimentConfig) -> Result<(Artifacts, Vec<(String, Deviation)>)> {
    let model = cfg.model()?;
    let fs = cfg.observables(&model, cfg.deviation.observable.as_deref())?;
    let d = &cfg.deviation;
    let mut runs = Vec::new();
    for (name, f) in fs {
        let dev = match &model {
            Model::Periodic(t) => limit::periodic_deviation(t, &f, &d.ns, d.samples, cfg.seed)?,
            Model::Sequence { tower, .. } => random::sequence_deviation(tower, &f, &d.ns, d.samples, cfg.seed)?,
        };
        runs.push((name, dev));
    }
    let mut csv = String::from(
        "observable,n[level],time[flow units],log_time[ln flow units],max_abs_integral[|f| x time],slope[dimensionless],slope_ci_low[dimensionless],slope_ci_high[dimensionless]\n",
    );
    for (name, dev) in &runs {
        for r in &dev.rows {
            writeln!(
                csv,
                "{name},{},{},{},{},{},{},{}",
                r.n,
                num(r.time),
                num(r.time.ln()),
                num(r.max_abs),
                num(dev.slope.slope),
                num(dev.slope.ci_low),
                num(dev.slope.ci_high)
            )
            .unwrap();
        }
    }
    let mut files = vec![("deviation.csv".to_string(), csv)];
    if d.svg {
        files.push(("deviation.svg".to_string(), deviation_svg(&runs)));
    }
    Ok((files, runs))
}

/// Log–log scatter of `max |∫ f|` against `T` with the fitted lines.
pub fn deviation_svg(runs: &[(String, Deviation)]) -> String {
    let (w, h, pad) = (640.0, 420.0, 50.0);
    let pts: Vec<(f64, f64)> = runs.iter().flat_map(|(_, d)| d.rows.iter().map(|r| (r.time.ln(), r.max_abs.ln()))).collect();
    let (x0, x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.0)));
    let (y0, y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.1), a.1.max(p.1)));
    let sx = |x: f64| pad + (x - x0) / (x1 - x0).max(1e-12) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0).max(1e-12) * (h - 2.0 * pad);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<line x1="{pad}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/><line x1="{pad}" y1="{pad}" x2="{pad}" y2="{0}" stroke="black"/>"#,
        h - pad,
        w - pad
    )
    .unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">ln T</text>"#, w / 2.0, h - 15.0).unwrap();
    writeln!(s, r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">ln max |∫f|</text>"#, h / 2.0, h / 2.0).unwrap();
    for (k, (name, d)) in runs.iter().enumerate() {
        let c = colors[k % colors.len()];
        for r in &d.rows {
            writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{c}"/>"#, sx(r.time.ln()), sy(r.max_abs.ln())).unwrap();
        }
        let line = |x: f64| d.slope.intercept + d.slope.slope * x;
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{c}"/>"#,
            sx(x0),
            sy(line(x0)),
            sx(x1),
            sy(line(x1))
        )
        .unwrap();
        writeln!(s, r#"<text x="{}" y="{}" fill="{c}">{name}: slope {:.4}</text>"#, pad + 10.0, pad + 15.0 * (k as f64 + 1.0), d.slope.slope).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitOutput {
    pub observable: String,
    pub report: LimitReport,
    pub generalized: Option<random::GeneralizedReport>,
}

pub fn cmd_limit(cfg: &ExperimentConfig) -> Result<(Artifacts, LimitOutput)> {
    let model = cfg.model()?;
    let mut fs = cfg.observables(&model, cfg.limit.observable.as_deref())?;
    let (name, f) = fs.swap_remove(0);
    let lc = cfg.limit.config(cfg.seed);
    let out = match &model {
        Model::Periodic(t) => LimitOutput { observable: name, report: limit::periodic_limit(t, &f, &lc)?, generalized: None },
        Model::Sequence { tower, od } => {
            let hc = random::HarnessConfig {
                cylinder_len: cfg.limit.cylinder_len,
                reference_seed: cfg.limit.reference_seed,
                targets: cfg.limit.ns.clone(),
                table_tol: cfg.limit.table_tol,
                limit: lc,
                ..random::HarnessConfig::default()
            };
            let g = random::generalized_harness(tower, od, &f, &hc)?;
            LimitOutput { observable: name, report: g.limit.clone(), generalized: Some(g) }
        }
    };
    let r = &out.report;
    let mut ks = String::from("n[level],tau[fraction of T_n],ks[sup cdf distance],p_value[probability]\n");
    for k in &r.ks {
        writeln!(ks, "{},{},{},{}", k.n, num(k.tau), num(k.ks), num(k.p_value)).unwrap();
    }
    let mut mo = String::from(
        "n[level],source,tau[fraction of T_n],mean[normalized],variance[normalized^2],skewness[dimensionless],excess_kurtosis[dimensionless]\n",
    );
    for m in &r.moments {
        writeln!(
            mo,
            "{},{},{},{},{},{},{}",
            m.n,
            m.source,
            num(m.tau),
            num(m.moments.mean),
            num(m.moments.variance),
            num(m.moments.skewness),
            num(m.moments.kurtosis)
        )
        .unwrap();
    }
    let mut md = String::from("n[level],c_emp[normalized per tau^exponent],exponent[dimensionless]\n");
    for m in &r.modulus {
        writeln!(md, "{},{},{}", m.n, num(m.c_emp), num(r.exponent)).unwrap();
    }
    let mut files = vec![("ks.csv".to_string(), ks), ("moments.csv".to_string(), mo), ("modulus.csv".to_string(), md)];
    if let Some(g) = &out.generalized {
        let mut a = String::from("time[flow units],error[|f| x time]");
        for e in &g.eps {
            write!(a, ",ratio_eps_{}[error/(1+T^eps)]", e.epsilon).unwrap();
        }
        a.push('\n');
        for row in &g.audit.rows {
            write!(a, "{},{}", num(row.time), num(row.error)).unwrap();
            for e in &g.eps {
                write!(a, ",{}", num(row.error / (1.0 + row.time.powf(e.epsilon)))).unwrap();
            }
            a.push('\n');
        }
        files.push(("audit.csv".to_string(), a));
        let mut ex = String::from("index,exponent[per level],ci_low[per level],ci_high[per level]\n");
        if let Model::Sequence { od, .. } = &model {
            if let Some(e) = &od.exponents {
                for (i, v) in e.values.iter().enumerate() {
                    writeln!(ex, "{},{},{},{}", i + 1, num(*v), num(e.ci[i][0]), num(e.ci[i][1])).unwrap();
                }
            }
        }
        files.push(("exponents.csv".to_string(), ex));
    }
    Ok((files, out))
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub checks: Vec<Check>,
    /// Set when the suite could not run.
    pub error: Option<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.pass)
    }
}

pub const SUITES: [&str; 8] = [
    "graph_core",
    "spectral",
    "compactum",
    "additive_measures",
    "adic_flow",
    "observables",
    "limit_harness",
    "random_compacta",
];

struct Checks {
    list: Vec<Check>,
    tol_override: Option<f64>,
}

impl Checks {
    fn add(&mut self, name: &str, value: f64, tol: f64) {
        let tol = self.tol_override.unwrap_or(tol);
        self.list.push(Check { name: name.into(), value, tol, pass: value <= tol });
    }
}

fn run_suite(name: &str, c: &mut Checks) -> Result<()> {
    let qa = example_qa();
    match name {
        "graph_core" => {
            let q = qa.incidence();
            c.add("det(Q_A) - 8", (q.det() - 8).abs() as f64, 0.0);
            c.add("edge count - 8", (qa.edge_count() as f64 - 8.0).abs(), 0.0);
            c.add("Q_B primitive (0 = yes)", (!example_qb().is_primitive()) as u8 as f64, 0.0);
        }
        "spectral" => {
            for (label, g) in [("Q_A", qa.clone()), ("Q_B", example_qb())] {
                let sd = SpectralData::of_graph(&g)?;
                let qh = sd.q.apply(&sd.h);
                let r = qh.iter().zip(&sd.h).map(|(a, b)| (a - sd.rho * b).abs()).fold(0.0, f64::max);
                c.add(&format!("{label}: |Qh - rho h|"), r, 1e-9);
                let n: f64 = sd.h.iter().zip(&sd.la).map(|(a, b)| a * b).sum();
                c.add(&format!("{label}: |<la,h> - 1|"), (n - 1.0).abs(), 1e-12);
            }
            let sd = SpectralData::of_graph(&qa)?;
            c.add("Q_A: |theta1 - ln 4|", (sd.theta1 - 4f64.ln()).abs(), 1e-12);
        }
        "compactum" => {
            let t = PeriodicTower::of_graph(&qa)?;
            let mut worst: f64 = 0.0;
            for j in -4..6 {
                for u in 0..2 {
                    let mut s = TwoFloat::from(0.0);
                    for &e in t.ordering.children(u) {
                        s += t.length(j, qa.terminal(e));
                    }
                    worst = worst.max(dd_to_f64((s - t.length(j + 1, u)).abs()) / dd_to_f64(t.length(j + 1, u)));
                }
            }
            c.add("length additivity", worst, 1e-28);
            let mass: f64 = qa.edges().iter().map(|e| dd_to_f64(t.length(1, e.terminal)) * t.colength(1, e.initial)).sum();
            c.add("|Parry mass - 1|", (mass - 1.0).abs(), 1e-12);
        }
        "additive_measures" => {
            let sd = SpectralData::of_graph(&qa)?;
            let mu = PlusMeasure::second(&sd)?;
            c.add("shift equivariance defect", shift_equivariance_check(&sd, &mu)?, 1e-9);
            let t = PeriodicTower::of_graph(&qa)?;
            let tab = mu.table(&sd, &t, TOL_ARC)?;
            let mut worst: f64 = 0.0;
            for j in tab.lo..5 {
                for u in 0..2 {
                    let s: Complex64 = t.ordering.children(u).iter().map(|&e| tab.get(j, qa.terminal(e))).sum();
                    worst = worst.max((s - tab.get(j + 1, u)).norm());
                }
            }
            c.add("table additivity", worst, 1e-9);
        }
        "adic_flow" => {
            let t = PeriodicTower::of_graph(&qa)?;
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
            let mut worst: f64 = 0.0;
            for i in 0..20 {
                let x = flow::sample_state(&t, 4, &mut rng, i)?;
                let s = TwoFloat::from(0.37 * (i + 1) as f64);
                let a = flow::flow(&t, &x, s)?;
                let b = flow::flow_stepwise(&t, &x, s)?;
                let same = a.window.edges.iter().zip(&b.window.edges).all(|(p, q)| p == q);
                worst = worst.max(if same { dd_to_f64((a.offset - b.offset).abs()) } else { f64::INFINITY });
            }
            c.add("hierarchical vs stepwise flow", worst, 1e-12);
        }
        "observables" => {
            let t = PeriodicTower::of_graph(&qa)?;
            let f = CylinderObservable::new(
                &qa,
                2,
                vec![(vec![0, 0], Complex64::new(1.0, 0.0)), (vec![5, 3], Complex64::new(0.5, 0.0))],
                Complex64::new(0.0, 0.0),
            )?
            .centered(&t.sd, &qa);
            let ci = CellIntegrals::new(&t, &f)?;
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(4);
            let mut worst: f64 = 0.0;
            for i in 0..10 {
                let x = flow::sample_state(&t, 5, &mut rng, i)?;
                let time = 3.3 * (i + 1) as f64;
                let a = observables::ergodic_integral(&t, &ci, &x, time)?;
                let b = observables::ergodic_integral_slow(&t, &f, &x, time)?;
                worst = worst.max((a - b).norm());
            }
            c.add("fast vs slow integral", worst, 1e-9);
            let xi = observables::xi_plus(&t.sd, &t, &f)?;
            let dual = observables::xi_plus_by_duality(&t.sd, &t, &f, 0)?;
            let d = xi.v.iter().zip(&dual.v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            c.add("Phi_f by projection vs duality", d, 1e-9);
        }
        "limit_harness" => {
            let t = PeriodicTower::of_graph(&qa)?;
            let f = CylinderObservable::new(
                &qa,
                2,
                vec![(vec![0, 0], Complex64::new(1.0, 0.0)), (vec![5, 3], Complex64::new(0.5, 0.0))],
                Complex64::new(0.0, 0.0),
            )?
            .centered(&t.sd, &qa);
            let cfg = LimitConfig { ns: vec![9], samples: 1000, eta_samples: 1000, modulus_samples: 50, ..LimitConfig::default() };
            let r = limit::periodic_limit(&t, &f, &cfg)?;
            let worst = r.ks.iter().map(|k| k.ks).fold(0.0, f64::max);
            c.add("KS at n = 9 (1000 samples)", worst, 0.08);
            c.add("values at tau = 0", r.tau_zero_max, 1e-12);
        }
        "random_compacta" => {
            let seq = GraphSequence::constant(&qa)?;
            let cfg = LyapunovConfig { horizon: 2000, ..LyapunovConfig::default() };
            let ex = random::lyapunov_spectrum(&RenormCocycle::new(&seq), 0, &cfg)?;
            c.add("constant Q_A: |theta1 - ln 4|", (ex.values[0] - 4f64.ln()).abs(), 1e-6);
            c.add("constant Q_A: |theta2 - ln 2|", (ex.values[1] - 2f64.ln()).abs(), 1e-6);
            let t = SequenceTower::new(&seq, 2, Some(60))?;
            let d = random::renormalization_defect(&t, 10, 3, 5)?;
            c.add("renormalization diagram defect", d.max_distance, 1e-12);
            let p = RenormCocycle::new(&seq);
            let a = p.exact_product(0, 7)?;
            let b = random::int_matmul(&p.exact_product(3, 4)?, &p.exact_product(0, 3)?);
            c.add("cocycle identity (exact)", (a != b) as u8 as f64, 0.0);
        }
        other => return Err(Error::Config(format!("unknown suite '{other}'"))),
    }
    Ok(())
}

/// Runs the named suites (all when `filter` is empty). `tol_override` replaces every tolerance.
pub fn cmd_selftest(filter: &[String], tol_override: Option<f64>) -> Result<Vec<SuiteResult>> {
    for f in filter {
        if !SUITES.contains(&f.as_str()) {
            return Err(Error::Config(format!("unknown suite '{f}'")));
        }
    }
    Ok(SUITES
        .iter()
        .filter(|s| filter.is_empty() || filter.iter().any(|f| f == *s))
        .map(|s| {
            let mut c = Checks { list: Vec::new(), tol_override };
            let error = run_suite(s, &mut c).err().map(|e| e.to_string());
            SuiteResult { suite: s.to_string(), checks: c.list, error }
        })
        .collect())
}

/// Ergodic integral from a state, for callers that only hold a configuration.
pub fn integral_from(t: &dyn Tower, f: &CylinderObservable, x: &FlowState, time: f64) -> Result<Complex64> {
    let ci = CellIntegrals::new(t, f)?;
    observables::ergodic_integral(t, &ci, x, time)
}

/// Mann–Kendall trend of a series, re-exported for reports.
pub fn trend(x: &[f64]) -> stats::MannKendall {
    stats::mann_kendall(x)
}
