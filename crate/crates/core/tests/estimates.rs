use std::f64::consts::{LN_2, PI};

use neflab_core::estimates::*;
use neflab_core::*;
use proptest::prelude::*;

fn torus1(points: usize, vol: f64) -> Torus {
    Torus::new(Grid::new(1, points).unwrap(), HermMat::scalar(vol)).unwrap()
}

fn field(t: &Torus, f: impl Fn(&[f64; 4]) -> f64) -> PeriodicField {
    PeriodicField::from_fn(t.grid(), f).unwrap()
}

#[test]
fn deficit_trivial_cases() {
    let t = torus1(16, 2.0);
    let zero = PeriodicField::zeros(t.grid());
    let d = Deficit::new(&t, &zero, &zero, &zero, 1.0).unwrap();
    assert_eq!(d.a_s(0.5), 0.0);
    assert_eq!(d.tail(0.5), 0.0);
    assert_eq!(d.entropy(), 0.0);
    // φ − V ≡ −2 with F̂ ≡ 0.
    let phi = PeriodicField::constant(t.grid(), -2.0);
    let d = Deficit::new(&t, &phi, &zero, &zero, 1.0).unwrap();
    assert!((d.a_s(1.0) - 2.0).abs() < 1e-15);
    assert!((d.tail(1.0) - 2.0).abs() < 1e-15);
    let one = PeriodicField::constant(t.grid(), -1.0);
    assert!((entropy(&t, &one, &zero, &zero, 1.0).unwrap() - 2.0).abs() < 1e-15);
}

/// `d = a + b cos 2πx + c cos 2πy` with the `y` integral done in closed form
/// and a fine midpoint rule in `x`.
fn oracle_levels(a: f64, b: f64, c: f64, s: f64) -> (f64, f64) {
    let m = 200_000;
    let (mut tail, mut mass) = (0.0, 0.0);
    for i in 0..m {
        let x = (i as f64 + 0.5) / m as f64;
        let r = s - a - b * (2.0 * PI * x).cos();
        // {c cos θ ≥ r} has measure θ₀/π in y, θ₀ = arccos(r/c).
        let th = (r / c).clamp(-1.0, 1.0).acos();
        tail += th / PI;
        mass += (-r * th + c * th.sin()) / PI;
    }
    (tail / m as f64, mass / m as f64)
}

#[test]
fn sublevel_stats_match_deterministic_quadrature() {
    let t = torus1(1024, 1.0);
    let (a, b, c) = (0.6, 0.35, 0.25);
    let phi = field(&t, |x| -(a + b * (2.0 * PI * x[0]).cos() + c * (2.0 * PI * x[1]).cos()));
    let zero = PeriodicField::zeros(t.grid());
    let s_grid = [0.1, 0.3, 0.5, 0.7, 0.9];
    let stats = sublevel_stats(&t, &phi, &zero, &zero, &s_grid, 1.0).unwrap();
    for (i, &s) in s_grid.iter().enumerate() {
        let (tail, mass) = oracle_levels(a, b, c, s);
        assert!(((stats.tail[i] - tail) / tail).abs() < 1e-3, "tail at s={s}: {} vs {tail}", stats.tail[i]);
        assert!(((stats.a_s[i] - mass) / mass).abs() < 1e-3, "A_s at s={s}: {} vs {mass}", stats.a_s[i]);
        assert_eq!(stats.tail[i], stats.omega_measure[i]);
    }
}

#[test]
fn orlicz_examples() {
    let t = torus1(16, 1.5);
    let zero = PeriodicField::zeros(t.grid());
    assert!((orlicz_norm(&t, &zero, 3.0) - 1.5).abs() < 1e-15);
    let normalized = geometry::normalize_density(&t, &PeriodicField::constant(t.grid(), 2.7)).unwrap();
    assert!((orlicz_norm(&t, &normalized, 3.0) - 1.5).abs() < 1e-15);

    // Two levels 0 and L on halves of the torus; after normalization they
    // become −o and L − o with o = log((1 + e^L)/2).
    let l = 3.0;
    let raw = field(&t, |x| if x[0] < 0.5 { 0.0 } else { l });
    let f = geometry::normalize_density(&t, &raw).unwrap();
    let o = ((1.0 + l.exp()) / 2.0).ln();
    let level = |g: f64| g.exp() * (1.0 + g.abs()).powi(3);
    let hand = 1.5 * (level(-o) + level(l - o)) / 2.0;
    assert!((orlicz_norm(&t, &f, 3.0) - hand).abs() < 1e-12 * hand);
}

#[test]
fn young_trivial_cases() {
    let t = torus1(8, 1.0);
    let zero = PeriodicField::zeros(t.grid());
    let r = young_check(&zero, &zero, 3.0).unwrap();
    assert_eq!(r.violations, 0);
    assert!(r.max_violation <= 0.0);
    let one = PeriodicField::constant(t.grid(), 1.0);
    let r = young_check(&one, &zero, 3.0).unwrap();
    assert_eq!(r.violations, 0);
    // 1 ≤ 1 + C(p)e².
    let c_p = young_constant(3.0);
    assert!((r.max_violation + c_p * 2f64.exp()).abs() < 1e-12);
    assert!((c_p - 3.0 * 4.0 * (-2f64).exp()).abs() < 1e-15);
    assert!(young_check(&PeriodicField::constant(t.grid(), -1.0), &zero, 3.0).is_err());
}

#[test]
fn trudinger_trivial_cases() {
    let t = torus1(16, 1.7);
    let zero = PeriodicField::zeros(t.grid());
    let phi = field(&t, |x| -0.3 * (1.0 + (2.0 * PI * x[0]).cos()));
    let d = Deficit::new(&t, &phi, &zero, &zero, 1.0).unwrap();
    assert_eq!(d.trudinger_lhs(d.sup() + 1e-9, 2.0), 0.0);
    let same = Deficit::new(&t, &zero, &zero, &zero, 1.0).unwrap();
    assert!((same.trudinger_lhs(0.0, 2.0) - 1.7).abs() < 1e-15);
    let (lhs, ok) = trudinger_check(&d, 2.0, 0.1, 10.0);
    assert!(lhs > 0.0 && ok);

    let e = 0.4;
    let c = trudinger_constant(3.0, e);
    assert!((c * (c * e).exp() - 3.0).abs() < 1e-12);
    assert_eq!(calibrate_trudinger(&[(3.0, e), (1.0, e)]), c);
}

#[test]
fn comparison_constants() {
    let c = phi_constants(2.0, 1);
    assert_eq!(c.epsilon, 2.0);
    assert_eq!(c.lambda, 1.0);
    let c = phi_constants(1.0, 2);
    assert!((c.epsilon.powi(3) - 9.0 / 4.0).abs() < 1e-15);
    assert!((c.lambda - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn comparison_rejects_small_beta() {
    let t = torus1(8, 1.0);
    let zero = PeriodicField::zeros(t.grid());
    let psi = PeriodicField::constant(t.grid(), 0.0);
    let u = PeriodicField::constant(t.grid(), -1.5);
    assert!(matches!(phi_comparison_check(&zero, &u, &psi, &zero, 0.0, 1.0, 1), Err(Error::BetaTooSmall { .. })));
}

#[test]
fn holder_exponents() {
    assert!((delta0(3.0, 1) - 2.0 / 3.0).abs() < 1e-15);
    assert!((holder_q(3.0, 1) - 6.0 / 5.0).abs() < 1e-15);
    assert!((delta0(4.0, 2) - 0.25).abs() < 1e-15);
}

#[test]
fn holder_chain_on_empty_levels() {
    let t = torus1(16, 1.0);
    let zero = PeriodicField::zeros(t.grid());
    let d = Deficit::new(&t, &zero, &zero, &zero, 1.0).unwrap();
    let stats = LevelStats::from_deficit(&d, &[0.5, 1.0]).unwrap();
    let r = holder_chain_check(&d, &stats, 1.0, 0.0, 1.0, 3.0, 1.0);
    assert!(r.b0_margin >= 0.0 && r.holder_margin >= 0.0 && r.moment_margin >= 0.0);
}

#[test]
fn degiorgi_examples() {
    let r = degiorgi_iterate(&[0.0, 0.5], &[0.0, 0.0], 3.0, 0.5).unwrap();
    assert_eq!(r.s0, 0.0);
    assert_eq!(r.s_infinity, 0.0);
    let r = degiorgi_iterate(&[0.0], &[1.0], 0.25, 1.0).unwrap();
    assert_eq!(r.s_infinity, 1.0);
    assert!(matches!(degiorgi_iterate(&[0.0], &[1.0], 5.0, 1.0), Err(Error::NoValidS0 { .. })));
}

#[test]
fn degiorgi_on_a_cubic_tail() {
    // φ(s) = (1−s)³₊: max_r r φ(s+r) = (27/256)(1−s)⁴ = B₀ φ(s)^{4/3}.
    let tail = |s: f64| (1.0 - s).max(0.0).powi(3);
    let (b0, d0) = (27.0 / 256.0, 1.0 / 3.0);
    for i in 0..100 {
        let s = i as f64 / 100.0;
        for j in 1..200 {
            let r = j as f64 / 200.0;
            assert!(r * tail(s + r) <= b0 * tail(s).powf(1.0 + d0) * (1.0 + 1e-12));
        }
    }
    let s: Vec<f64> = (0..50).map(|i| i as f64 / 50.0).collect();
    let tails: Vec<f64> = s.iter().map(|&v| tail(v)).collect();
    let r = degiorgi_iterate(&s, &tails, b0, d0).unwrap();
    assert!(r.s_infinity >= 1.0 && r.s_infinity <= 4.0);
}

#[test]
fn alpha0_examples() {
    let t = torus1(16, 1.0);
    let cap = 50.0;
    assert_eq!(alpha0_estimate(&t, &[PeriodicField::zeros(t.grid())], cap).unwrap(), cap);
    let one = PeriodicField::constant(t.grid(), -1.0);
    assert!((alpha0_estimate(&t, &[one], cap).unwrap() - LN_2).abs() < 1e-12);
    assert!(matches!(alpha0_estimate(&t, &[], cap), Err(Error::EmptyCandidates)));
}

#[test]
fn s_grid_defaults() {
    let g = default_s_grid(0.2, 64, 1.5);
    assert_eq!(g.len(), 64);
    assert_eq!(g[0], 0.0);
    assert!((g[63] - 0.3).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn level_functions_are_monotone(d in prop::collection::vec(0.0..1.0f64, 64), f in prop::collection::vec(-1.0..1.0f64, 64)) {
        let t = torus1(8, 1.3);
        let phi = PeriodicField::new(t.grid(), d.iter().map(|v| -v).collect()).unwrap();
        let zero = PeriodicField::zeros(t.grid());
        let f = geometry::normalize_density(&t, &PeriodicField::new(t.grid(), f).unwrap()).unwrap();
        let def = Deficit::new(&t, &phi, &zero, &f, 1.0).unwrap();
        let grid = default_s_grid(def.sup(), 40, 1.2);
        let stats = LevelStats::from_deficit(&def, &grid).unwrap();
        let e = def.entropy();
        for w in 0..stats.len() - 1 {
            prop_assert!(stats.tail[w + 1] <= stats.tail[w]);
            prop_assert!(stats.a_s[w + 1] <= stats.a_s[w]);
        }
        for a in &stats.a_s {
            prop_assert!(*a <= e * (1.0 + 1e-14));
        }
    }

    #[test]
    fn young_has_no_violations(v in prop::collection::vec(0.0..6.0f64, 64), g in prop::collection::vec(-8.0..8.0f64, 64), p in 1.2..6.0f64) {
        let t = torus1(8, 1.0);
        let vf = PeriodicField::new(t.grid(), v).unwrap();
        let gf = PeriodicField::new(t.grid(), g).unwrap();
        let r = young_check(&vf, &gf, p).unwrap();
        prop_assert_eq!(r.violations, 0);
        prop_assert!(r.exact_step_max_violation <= 1e-9);
    }
}
