use adicflow::compactum::{
    conditional_product_check, parry_measure, phi1_minus, phi1_plus, sample_parry, Cylinder, MinusSegment, PathWindow,
    PlusSegment,
};
use adicflow::graph::{example_qa, IncidenceMatrix, OrientedGraph};
use adicflow::measures::{pairing, shift_equivariance_check, MinusMeasure, PlusMeasure, ProductMeasure};
use adicflow::spectral::SpectralData;
use adicflow::tower::PeriodicTower;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn cv(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| c(x)).collect()
}

fn qa() -> (OrientedGraph, SpectralData) {
    let g = example_qa();
    let sd = SpectralData::of_graph(&g).unwrap();
    (g, sd)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

/// Edges `3, 4, 3, 0` at levels 0..3: admissible since `F(x_{k+1}) = I(x_k)`.
fn window() -> PathWindow {
    PathWindow::admissible(&example_qa(), 0, vec![3, 4, 3, 0]).unwrap()
}

#[test]
fn parry_measure_of_cylinders() {
    let (g, sd) = qa();
    for w in g.enumerate_words(1) {
        assert!(close(parry_measure(&g, &sd, &Cylinder::new(&g, 0, w).unwrap()), 1.0 / 8.0));
    }
    for w in g.enumerate_words(2) {
        assert!(close(parry_measure(&g, &sd, &Cylinder::new(&g, 3, w).unwrap()), 1.0 / 32.0));
    }
    let ones = OrientedGraph::from_matrix(&IncidenceMatrix::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap()).unwrap();
    let so = SpectralData::of_graph(&ones).unwrap();
    for w in ones.enumerate_words(1) {
        assert!(close(parry_measure(&ones, &so, &Cylinder::new(&ones, 0, w).unwrap()), 0.25));
    }
}

#[test]
fn leaf_lengths() {
    let (g, sd) = qa();
    let x = window();
    let plus = |n| phi1_plus(&g, &sd, &PlusSegment::new(n, x.clone()).unwrap());
    let minus = |n| phi1_minus(&g, &sd, &MinusSegment::new(n, x.clone()).unwrap());
    assert!(close(plus(1), 1.0));
    assert!(close(plus(3), 16.0));
    assert!(close(plus(0), 0.25));
    assert!(close(minus(0), 0.5));
    assert!(close(minus(2), 1.0 / 32.0));
    let y = PathWindow::admissible(&g, -1, vec![0, 0, 0]).unwrap();
    assert!(close(phi1_minus(&g, &sd, &MinusSegment::new(-1, y).unwrap()), 2.0));
}

#[test]
fn conditional_product_on_cylinders() {
    let (g, sd) = qa();
    let x = window();
    let (a, b) = conditional_product_check(&g, &sd, &Cylinder::new(&g, 0, vec![4]).unwrap(), &x).unwrap();
    assert!(close(a, 0.125) && close(b, 0.125));
    let (a, b) = conditional_product_check(&g, &sd, &Cylinder::new(&g, 0, vec![4, 3]).unwrap(), &x).unwrap();
    assert!(close(a, 1.0 / 32.0) && close(b, 1.0 / 32.0));

    let ones = OrientedGraph::from_matrix(&IncidenceMatrix::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap()).unwrap();
    let so = SpectralData::of_graph(&ones).unwrap();
    let y = PathWindow::admissible(&ones, 0, vec![0, 0, 0]).unwrap();
    let (a, b) = conditional_product_check(&ones, &so, &Cylinder::new(&ones, 0, vec![0]).unwrap(), &y).unwrap();
    assert!(close(a, 0.25) && close(b, 0.25));
}

#[test]
fn parry_sampling_marginals() {
    let t = PeriodicTower::of_graph(&example_qa()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 100_000;
    let mut one = [0usize; 8];
    let mut two = vec![0usize; 64];
    for _ in 0..draws {
        let w = sample_parry(&t, 1, 2, &mut rng).unwrap();
        one[w.edges[0]] += 1;
        two[w.edges[0] * 8 + w.edges[1]] += 1;
    }
    let chi = |counts: &[usize], p: f64| -> f64 {
        counts.iter().map(|&k| (k as f64 - draws as f64 * p).powi(2) / (draws as f64 * p)).sum()
    };
    let x1 = chi(&one, 1.0 / 8.0);
    assert!(1.0 - ChiSquared::new(7.0).unwrap().cdf(x1) > 0.001, "chi2 {x1}");
    let admissible: Vec<usize> = two.iter().copied().filter(|&k| k > 0).collect();
    assert_eq!(admissible.len(), 32);
    let x2 = chi(&admissible, 1.0 / 32.0);
    assert!(1.0 - ChiSquared::new(31.0).unwrap().cdf(x2) > 0.001, "chi2 {x2}");

    let a = sample_parry(&t, -3, 4, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let b = sample_parry(&t, -3, 4, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn plus_measure_values() {
    let (g, sd) = qa();
    let x = window();
    let h = PlusMeasure::new(&sd, cv(&sd.h)).unwrap();
    assert!((h.eval(&sd, &g, &PlusSegment::new(1, x.clone()).unwrap()).unwrap() - c(1.0)).norm() < 1e-12);

    let v = PlusMeasure::new(&sd, cv(&[1.0, -1.0])).unwrap();
    // x_3 = 0 ends at vertex 0, where Q²v = 4.
    let at3 = v.eval(&sd, &g, &PlusSegment::new(3, x.clone()).unwrap()).unwrap();
    assert!((at3 - c(4.0)).norm() < 1e-12);
    // x_0 = 3 ends at vertex 1, where Q⁻¹v = -1/2.
    let at0 = v.eval(&sd, &g, &PlusSegment::new(0, x).unwrap()).unwrap();
    assert!((at0 - c(-0.5)).norm() < 1e-12);
}

#[test]
fn minus_measure_values() {
    let (g, sd) = qa();
    let x = window();
    let la = MinusMeasure::new(&sd, cv(&sd.la)).unwrap();
    let seg = |n| MinusSegment::new(n, x.clone()).unwrap();
    // x_0 = 3 starts at vertex 0.
    assert!((la.eval(&sd, &g, &seg(0)).unwrap() - c(0.5)).norm() < 1e-12);
    let w = MinusMeasure::new(&sd, cv(&[0.5, -0.5])).unwrap();
    // x_2 = 3 starts at vertex 0: ½ 2^{-2}.
    assert!((w.eval(&sd, &g, &seg(2)).unwrap() - c(0.125)).norm() < 1e-12);
    let y = PathWindow::admissible(&g, -1, vec![0, 0, 0]).unwrap();
    let at = la.eval(&sd, &g, &MinusSegment::new(-1, y).unwrap()).unwrap();
    assert!((at - c(2.0)).norm() < 1e-12);
}

#[test]
fn pairings() {
    let (_, sd) = qa();
    let p = |v: &[f64]| PlusMeasure::new(&sd, cv(v)).unwrap();
    let m = |v: &[f64]| MinusMeasure::new(&sd, cv(v)).unwrap();
    assert!((pairing(&p(&[1.0, -1.0]), &m(&[0.5, -0.5])) - c(1.0)).norm() < 1e-12);
    assert!((pairing(&p(&sd.h), &m(&sd.la)) - c(1.0)).norm() < 1e-12);
    assert!(pairing(&p(&[1.0, -1.0]), &m(&sd.la)).norm() < 1e-12);
}

#[test]
fn product_measure_on_cylinders() {
    let (g, sd) = qa();
    let x = PathWindow::admissible(&g, 0, vec![0, 0, 0]).unwrap();
    let cyl = Cylinder::new(&g, 0, vec![0]).unwrap();
    let nu = ProductMeasure { plus: PlusMeasure::perron(&sd), minus: MinusMeasure::perron(&sd) };
    assert!((nu.eval(&sd, &g, &cyl, &x).unwrap() - c(parry_measure(&g, &sd, &cyl))).norm() < 1e-12);

    let v = PlusMeasure::new(&sd, cv(&[1.0, -1.0])).unwrap();
    let pm = ProductMeasure { plus: v.clone(), minus: MinusMeasure::perron(&sd) };
    assert!((pm.eval(&sd, &g, &cyl, &x).unwrap() - c(0.125)).norm() < 1e-12);
    let pm = ProductMeasure { plus: v, minus: MinusMeasure::new(&sd, cv(&[0.5, -0.5])).unwrap() };
    assert!((pm.eval(&sd, &g, &cyl, &x).unwrap() - c(0.25)).norm() < 1e-12);
}

#[test]
fn shift_equivariance() {
    let (_, sd) = qa();
    assert!(shift_equivariance_check(&sd, &PlusMeasure::second(&sd).unwrap()).unwrap() <= 1e-12);
    assert!(shift_equivariance_check(&sd, &PlusMeasure::perron(&sd)).unwrap() <= 1e-12);
    assert_eq!(shift_equivariance_check(&sd, &PlusMeasure::new(&sd, cv(&[0.0, 0.0])).unwrap()).unwrap(), 0.0);
    let mu = PlusMeasure::second(&sd).unwrap();
    let pulled = mu.shift_pullback(&sd).unwrap();
    assert!(pulled.v.iter().zip(&mu.v).all(|(a, b)| (a - b * 0.5).norm() < 1e-12));
}

#[test]
fn outside_expanding_space_is_rejected() {
    let g = OrientedGraph::from_matrix(&IncidenceMatrix::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap()).unwrap();
    let sd = SpectralData::of_graph(&g).unwrap();
    assert!(PlusMeasure::new(&sd, cv(&[1.0, 0.0])).is_err());
}
