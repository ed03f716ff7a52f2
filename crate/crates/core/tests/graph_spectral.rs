use adicflow::graph::{example_qa, IncidenceMatrix, OrientedGraph};
use adicflow::linalg::CMat;
use adicflow::spectral::{recover_expanding_vector, NoisyVectorSequence, SpectralData};
use adicflow::Error;
use num_complex::Complex64;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn cv(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| c(x)).collect()
}

fn golden() -> SpectralData {
    SpectralData::decompose(&IncidenceMatrix::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap(), Default::default()).unwrap()
}

#[test]
fn isolated_vertex_is_reported() {
    let err = OrientedGraph::new(3, &[(0, 0), (0, 1), (1, 0)]).unwrap_err();
    assert_eq!(err, Error::InvalidGraph("vertex 2 has no outgoing edge".into()));
}

#[test]
fn valid_graphs_pass() {
    example_qa().validate().unwrap();
    let one = OrientedGraph::new(1, &[(0, 0)]).unwrap();
    one.validate().unwrap();
    assert_eq!(one.incidence().rows(), vec![vec![1]]);
}

#[test]
fn incidence_counts_edges() {
    assert_eq!(example_qa().incidence().rows(), vec![vec![3, 1], vec![1, 3]]);
    let swap = OrientedGraph::new(2, &[(0, 1), (1, 0)]).unwrap();
    assert_eq!(swap.incidence().rows(), vec![vec![0, 1], vec![1, 0]]);
    assert!(!swap.is_primitive());
}

#[test]
fn word_counts_match_matrix_powers() {
    let g = example_qa();
    assert_eq!(g.enumerate_words(1).len(), 8);
    // Entries of Q_A² = [[10, 6], [6, 10]] add up to 32.
    assert_eq!(g.enumerate_words(2).len(), 32);
    assert_eq!(OrientedGraph::new(1, &[(0, 0)]).unwrap().enumerate_words(1).len(), 1);
}

#[test]
fn qa_perron_data() {
    let sd = SpectralData::of_graph(&example_qa()).unwrap();
    assert!((sd.theta1 - 4f64.ln()).abs() < 1e-12);
    assert!(sd.h.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    assert!(sd.la.iter().all(|&x| (x - 0.5).abs() < 1e-12));
    assert!((sd.theta2.unwrap() - 2f64.ln()).abs() < 1e-12);
    let v2 = sd.v2.as_ref().unwrap();
    assert!((v2[0] + v2[1]).abs() < 1e-12 && v2[0].abs() > 0.1);
}

#[test]
fn one_by_one_is_not_expanding() {
    let q = IncidenceMatrix::from_rows(&[vec![1]]).unwrap();
    assert!(matches!(SpectralData::decompose(&q, Default::default()), Err(Error::NonExpanding { .. })));
}

#[test]
fn golden_matrix_has_one_expanding_direction() {
    let sd = golden();
    let phi2 = (3.0 + 5f64.sqrt()) / 2.0;
    assert!((sd.theta1 - phi2.ln()).abs() < 1e-12);
    assert_eq!(sd.dim_plus(), 1);
    assert!(sd.theta2.is_none());
}

#[test]
fn projections() {
    let qa = SpectralData::of_graph(&example_qa()).unwrap();
    let p = qa.project_plus(&cv(&[1.0, 0.0])).unwrap();
    assert!((p[0] - c(1.0)).norm() < 1e-12 && p[1].norm() < 1e-12);

    let sd = golden();
    let h = cv(&sd.h);
    let ph = sd.project_plus(&h).unwrap();
    assert!(ph.iter().zip(&h).all(|(a, b)| (a - b).norm() < 1e-12));
    // Contracting eigenvector of [[2,1],[1,1]]: (1, -φ) with φ the golden ratio.
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let pm = sd.project_plus(&cv(&[1.0, -phi])).unwrap();
    assert!(pm.iter().all(|z| z.norm() < 1e-12));
}

#[test]
fn growth_rates_of_vectors() {
    let sd = SpectralData::of_graph(&example_qa()).unwrap();
    assert!((sd.lyapunov_of_vector(&cv(&[1.0, -1.0])).unwrap() - 2f64.ln()).abs() < 1e-6);
    assert!((sd.lyapunov_of_vector(&cv(&[1.0, 0.0])).unwrap() - 4f64.ln()).abs() < 1e-6);
    let g = golden();
    assert!((g.lyapunov_of_vector(&cv(&g.h)).unwrap() - g.theta1).abs() < 1e-6);
}

fn diag_s() -> CMat {
    CMat::from_row_slice(2, 2, &[c(2.0), c(0.0), c(0.0), c(0.5)])
}

#[test]
fn noiseless_orbit_recovers_exactly() {
    let s = diag_s();
    let v: Vec<Vec<Complex64>> = (0..12).map(|n| cv(&[2f64.powi(n), 0.0])).collect();
    let r = recover_expanding_vector(&s, &NoisyVectorSequence::from_orbit(&s, v).unwrap()).unwrap();
    assert!((r.v[0] - c(1.0)).norm() < 1e-12 && r.v[1].norm() < 1e-12);
    assert_eq!(r.certificate, 0.0);
}

/// Worst corner noise sequences with `|ε|, |ε'| ≤ 0.1` against the bound of the construction.
#[test]
fn corner_noise_stays_within_the_bound() {
    let s = diag_s();
    let n_max = 12;
    // With u(n) the defects, Sⁿv − v(n) = −Σ_{k≤n} S^{n−k}P⁻u(k) + Σ_{k>n} S^{n−k}P⁺u(k), so
    // |Sⁿv − v(n)| ≤ δ' (Σ_j 2^{-j} + Σ_{j≥1} 2^{-j}) ≤ 3 δ' ≤ 3 δ' n².
    let bound_c = 3.0;
    let mut worst_v: f64 = 0.0;
    for mask in 0u32..256 {
        let sign = |k: usize, i: usize| if (mask >> ((2 * k + i) % 8)) & 1 == 1 { 0.1 } else { -0.1 };
        let v: Vec<Vec<Complex64>> = (0..=n_max)
            .map(|n| cv(&[2f64.powi(n as i32) + sign(n, 0), sign(n, 1)]))
            .collect();
        let seq = NoisyVectorSequence::from_orbit(&s, v).unwrap();
        let r = recover_expanding_vector(&s, &seq).unwrap();
        worst_v = worst_v.max((r.v[0] - c(1.0)).norm() + r.v[1].norm());
        assert!(r.exponent == 2);
        assert!(r.certificate <= bound_c, "certificate {}", r.certificate);
    }
    assert!(worst_v <= 0.2, "|v - (1,0)| = {worst_v}");
}

#[test]
fn jordan_orbit_recovers_start() {
    let s = CMat::from_row_slice(2, 2, &[c(2.0), c(1.0), c(0.0), c(2.0)]);
    let mut v = vec![cv(&[1.0, 1.0])];
    for n in 1..=10 {
        // Sⁿ(1,1) = (2ⁿ + n 2^{n−1}, 2ⁿ).
        let p = 2f64.powi(n);
        v.push(cv(&[p + n as f64 * p / 2.0, p]));
    }
    let r = recover_expanding_vector(&s, &NoisyVectorSequence::from_orbit(&s, v).unwrap()).unwrap();
    assert!((r.v[0] - c(1.0)).norm() < 1e-10 && (r.v[1] - c(1.0)).norm() < 1e-10);
}

#[test]
fn recovery_is_deterministic() {
    let s = diag_s();
    let v: Vec<Vec<Complex64>> = (0..10).map(|n| cv(&[2f64.powi(n) + 0.01 * (n as f64).sin(), 0.03])).collect();
    let seq = NoisyVectorSequence::from_orbit(&s, v).unwrap();
    let a = recover_expanding_vector(&s, &seq).unwrap();
    let b = recover_expanding_vector(&s, &seq).unwrap();
    assert_eq!(a.v, b.v);
}

#[test]
fn defect_bound_is_asserted() {
    let s = diag_s();
    let v = vec![cv(&[1.0, 0.0]), cv(&[3.0, 0.0])];
    assert!(NoisyVectorSequence::new(&s, v, 0.5).is_err());
}
