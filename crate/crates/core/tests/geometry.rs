use std::f64::consts::PI;

use nalgebra::{Complex, Matrix2};
use neflab_core::geometry::{self, cohomology_constants, det_ratio, sigma_k_ratio};
use neflab_core::hessian::gamma_k_check;
use neflab_core::herm::{self, HermMat};
use neflab_core::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Eigenvalues of `g⁻¹a` through a Cholesky factorization `g = LL*` and the
/// Hermitian eigensolver applied to `L⁻¹aL⁻*`.
fn oracle_eigenvalues(a: &HermMat, g: &HermMat) -> [f64; 2] {
    let to_na = |m: &HermMat| {
        let z = |v: Complex64| Complex::new(v.re, v.im);
        Matrix2::new(z(c(m.a11, 0.0)), z(m.a12), z(m.a12.conj()), z(c(m.a22, 0.0)))
    };
    let l = to_na(g).cholesky().expect("g positive definite").l();
    let li = l.try_inverse().unwrap();
    let m = li * to_na(a) * li.adjoint();
    let e = m.symmetric_eigenvalues();
    let (x, y) = (e[0], e[1]);
    if x <= y {
        [x, y]
    } else {
        [y, x]
    }
}

fn random_herm(seed: &[f64; 4]) -> HermMat {
    HermMat::new(seed[0], seed[1], c(seed[2], seed[3]))
}

fn torus(n: usize, points: usize, g: HermMat) -> Torus {
    Torus::new(Grid::new(n, points).unwrap(), g).unwrap()
}

#[test]
fn mixed_partials_of_a_cosine_product() {
    // u = cos(2πx₁)cos(4πy₂): ∂z₁∂z̄₁u = −π²u, ∂z₂∂z̄₂u = −4π²u,
    // ∂z₁∂z̄₂u = ¼(∂x₁ − i∂y₁)(∂x₂ + i∂y₂)u = ¼ i ∂x₁∂y₂u = 2iπ² sin(2πx₁)sin(4πy₂).
    let t = torus(2, 8, HermMat::identity(2));
    let u = PeriodicField::from_fn(t.grid(), |x| (2.0 * PI * x[0]).cos() * (4.0 * PI * x[3]).cos()).unwrap();
    let h = t.complex_hessian(&u);
    for (i, m) in h.matrices().iter().enumerate() {
        let x = t.grid().coords(i);
        let uu = u.values()[i];
        let s = (2.0 * PI * x[0]).sin() * (4.0 * PI * x[3]).sin();
        assert!((m.a11 + PI * PI * uu).abs() < 1e-10);
        assert!((m.a22 + 4.0 * PI * PI * uu).abs() < 1e-10);
        assert!((m.a12 - c(0.0, 2.0 * PI * PI * s)).norm() < 1e-10);
    }
}

#[test]
fn mixed_partial_across_real_directions() {
    // u = sin(2π(x₁ + x₂)): ∂z₁∂z̄₂u = ¼∂x₁∂x₂u = −π²u.
    let t = torus(2, 8, HermMat::identity(2));
    let u = PeriodicField::from_fn(t.grid(), |x| (2.0 * PI * (x[0] + x[2])).sin()).unwrap();
    let h = t.complex_hessian(&u);
    for (m, &uu) in h.matrices().iter().zip(u.values()) {
        assert!((m.a12 - c(-PI * PI * uu, 0.0)).norm() < 1e-10);
    }
}

#[test]
fn det_ratio_examples() {
    let g = HermMat::new(1.5, 0.8, c(0.2, -0.3));
    let grid = Grid::new(2, 8).unwrap();
    let ones = det_ratio(&HermitianField::constant(grid, g), &g);
    assert!(ones.values().iter().all(|&v| (v - 1.0).abs() < 1e-14));
    let six = det_ratio(&HermitianField::constant(grid, HermMat::diag(2.0, 3.0)), &HermMat::identity(2));
    assert!(six.values().iter().all(|&v| v == 6.0));
}

#[test]
fn sigma_k_examples() {
    let grid = Grid::new(2, 8).unwrap();
    let g = HermMat::new(1.5, 0.8, c(0.2, -0.3));
    for k in 1..=2 {
        let r = sigma_k_ratio(&HermitianField::constant(grid, g), &g, k).unwrap();
        assert!(r.values().iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }
    let r = sigma_k_ratio(&HermitianField::constant(grid, HermMat::diag(2.0, 0.0)), &HermMat::identity(2), 1).unwrap();
    assert!(r.values().iter().all(|&v| v == 1.0));
    assert!(sigma_k_ratio(&HermitianField::constant(grid, g), &g, 3).is_err());
}

#[test]
fn integrate_examples() {
    for points in [8, 16, 32] {
        let t = torus(1, points, HermMat::scalar(1.0));
        assert!((t.integrate(&PeriodicField::constant(t.grid(), 1.0)) - 1.0).abs() < 1e-15);
        let f = PeriodicField::from_fn(t.grid(), |x| (2.0 * PI * x[0]).cos()).unwrap();
        assert!(t.integrate(&f).abs() < 1e-14);
    }
    // ∫ cos²(2πx₁)cos²(4πy₁)cos²(2πx₂) = 1/8 on the unit cube, times Vol.
    let g = HermMat::new(1.2, 1.5, c(0.3, 0.0));
    let t = torus(2, 16, g);
    let f = PeriodicField::from_fn(t.grid(), |x| {
        ((2.0 * PI * x[0]).cos() * (4.0 * PI * x[1]).cos() * (2.0 * PI * x[2]).cos()).powi(2)
    })
    .unwrap();
    assert!((t.integrate(&f) - g.det(2) / 8.0).abs() < 1e-12);
}

#[test]
fn cohomology_constant_examples() {
    let grid = Grid::new(2, 16).unwrap();
    let f = PeriodicField::zeros(grid);
    let make = |chi0: HermMat, rho: PeriodicField| {
        let nef = NefClassSpec::new(chi0, rho).unwrap();
        ProblemSpec::new(grid, HermMat::identity(2), nef, f.clone(), 3.0).unwrap()
    };
    let flat = make(HermMat::ZERO, PeriodicField::zeros(grid));
    for t in [1.0, 0.5, 0.1] {
        assert!((cohomology_constants(&flat, t, 2).unwrap() - t * t).abs() < 1e-15);
    }
    let rank_one = make(HermMat::diag(1.0, 0.0), PeriodicField::zeros(grid));
    let rho = PeriodicField::from_fn(grid, |x| 0.05 * (2.0 * PI * x[0]).cos()).unwrap();
    let perturbed = make(HermMat::diag(1.0, 0.0), rho);
    for t in [1.0, 0.3, 0.01] {
        let c0 = cohomology_constants(&rank_one, t, 2).unwrap();
        assert!((c0 - t * (1.0 + t)).abs() < 1e-14);
        let c1 = cohomology_constants(&perturbed, t, 2).unwrap();
        assert!((c1 - c0).abs() < 1e-10);
    }
}

#[test]
fn gamma_k_examples() {
    let grid = Grid::new(2, 8).unwrap();
    let g = HermMat::identity(2);
    let m = gamma_k_check(&HermitianField::constant(grid, g), &g, 2).unwrap();
    assert_eq!(m.margin, 1.0);
    let a = HermitianField::constant(grid, HermMat::diag(2.0, -0.5));
    assert!(gamma_k_check(&a, &g, 1).unwrap().admissible());
    let m2 = gamma_k_check(&a, &g, 2).unwrap();
    assert!(!m2.admissible());
    assert_eq!(m2.margin, -1.0);
}

#[test]
fn neff_layout_is_row_major_axis_zero_slowest() {
    let grid = Grid::new(2, 8).unwrap();
    let idx = 3 + 8 * (5 + 8 * (1 + 8 * 6));
    assert_eq!(grid.digit(idx, 0), 6);
    assert_eq!(grid.digit(idx, 3), 3);
    assert_eq!(grid.coords(idx), [6.0 / 8.0, 1.0 / 8.0, 5.0 / 8.0, 3.0 / 8.0]);
}

/// Band-limited random field with modes `|m_i| ≤ 2` on every axis it uses.
fn smooth_field(grid: Grid, coeffs: &[f64]) -> PeriodicField {
    let axes = grid.axes();
    PeriodicField::from_fn(grid, |x| {
        let mut v = 0.0;
        for (j, w) in coeffs.chunks(2).enumerate() {
            let axis_a = j % axes;
            let axis_b = (j / axes + 1 + axis_a) % axes;
            let m = 1.0 + (j % 2) as f64;
            let phase = 2.0 * PI * (m * x[axis_a] + x[axis_b]);
            v += w[0] * phase.cos() + w[1] * phase.sin();
        }
        v
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn det_ratio_matches_eigenvalue_product(a in prop::array::uniform4(-2.0..2.0f64), gs in prop::array::uniform4(-0.4..0.4f64)) {
        let g = HermMat::new(1.0 + gs[0].abs(), 1.0 + gs[1].abs(), c(gs[2], gs[3]));
        let a = random_herm(&a);
        let [l1, l2] = oracle_eigenvalues(&a, &g);
        prop_assert!((herm::det_ratio_at(&a, &g, 2) - l1 * l2).abs() < 1e-12 * (1.0 + (l1 * l2).abs()));
        let ours = herm::relative_eigenvalues(&a, &g, 2);
        prop_assert!((ours[0] - l1).abs() < 1e-12 * (1.0 + l1.abs()));
        prop_assert!((ours[1] - l2).abs() < 1e-12 * (1.0 + l2.abs()));
        // Γ_k margins against brute-force σ_j of the oracle eigenvalues.
        let brute1 = (l1 + l2) / 2.0;
        let brute2 = l1 * l2;
        prop_assert!((herm::cone_margin_at(&a, &g, 2, 1) - brute1).abs() < 1e-12 * (1.0 + brute1.abs()));
        let m2 = brute1.min(brute2);
        prop_assert!((herm::cone_margin_at(&a, &g, 2, 2) - m2).abs() < 1e-12 * (1.0 + m2.abs()));
    }

    #[test]
    fn sigma_n_equals_det(vals in prop::collection::vec(prop::array::uniform4(-2.0..2.0f64), 64)) {
        let grid = Grid::new(2, 8).unwrap();
        let mats: Vec<HermMat> = (0..grid.len()).map(|i| random_herm(&vals[i % vals.len()])).collect();
        let a = HermitianField::new(grid, mats).unwrap();
        let g = HermMat::new(1.3, 0.9, c(0.1, 0.2));
        let s2 = sigma_k_ratio(&a, &g, 2).unwrap();
        let d = det_ratio(&a, &g);
        for (x, y) in s2.values().iter().zip(d.values()) {
            prop_assert!((x - y).abs() < 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn gamma_cones_are_nested(a in prop::array::uniform4(-2.0..2.0f64)) {
        let g = HermMat::identity(2);
        let a = random_herm(&a);
        if herm::cone_margin_at(&a, &g, 2, 2) > 0.0 {
            prop_assert!(herm::cone_margin_at(&a, &g, 2, 1) > 0.0);
        }
        prop_assert!(herm::cone_margin_at(&a, &g, 2, 2) <= herm::cone_margin_at(&a, &g, 2, 1));
    }

    #[test]
    fn hessians_integrate_to_zero_and_mass_is_invariant(coeffs in prop::collection::vec(-0.05..0.05f64, 8)) {
        let g = HermMat::new(1.2, 0.9, c(0.2, -0.1));
        for n in [1usize, 2] {
            let metric = if n == 1 { HermMat::scalar(1.7) } else { g };
            let t = torus(n, 16, metric);
            let u = smooth_field(t.grid(), &coeffs);
            let h = t.complex_hessian(&u);
            let mut entries = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
            for m in h.matrices() {
                entries[0].push(m.a11);
                entries[1].push(m.a22);
                entries[2].push(m.a12.re);
                entries[3].push(m.a12.im);
                // Hermitian by construction; a11 and a22 are real fields.
                prop_assert!(m.a11.is_finite() && m.a22.is_finite());
            }
            for e in &entries {
                prop_assert!(t.integrate_values(e).abs() < 1e-12);
            }
            let forms = h.add_constant(metric);
            let mass = t.integrate(&det_ratio(&forms, &metric));
            prop_assert!((mass - t.volume()).abs() < 1e-8);
        }
    }

    #[test]
    fn integrate_is_linear_and_monotone(a in prop::collection::vec(-1.0..1.0f64, 64), b in prop::collection::vec(-1.0..1.0f64, 64), s in -3.0..3.0f64) {
        let t = torus(1, 8, HermMat::scalar(2.0));
        let fa = PeriodicField::new(t.grid(), a).unwrap();
        let fb = PeriodicField::new(t.grid(), b).unwrap();
        let comb = fa.zip_map(&fb, |x, y| x + s * y).unwrap();
        let lin = t.integrate(&fa) + s * t.integrate(&fb);
        prop_assert!((t.integrate(&comb) - lin).abs() < 1e-12);
        let hi = fa.zip_map(&fb, |x, y| x.max(y)).unwrap();
        prop_assert!(t.integrate(&hi) >= t.integrate(&fa) - 1e-15);
    }

    #[test]
    fn cohomology_constant_ignores_exact_perturbations(coeffs in prop::collection::vec(-0.05..0.05f64, 6), t in 0.05..1.0f64) {
        let grid = Grid::new(2, 16).unwrap();
        let f = PeriodicField::from_fn(grid, |x| 0.3 * (2.0 * PI * x[1]).sin()).unwrap();
        let make = |rho: PeriodicField| {
            let nef = NefClassSpec::new(HermMat::diag(1.0, 0.0), rho).unwrap();
            ProblemSpec::new(grid, HermMat::identity(2), nef, f.clone(), 3.0).unwrap()
        };
        let base = cohomology_constants(&make(PeriodicField::zeros(grid)), t, 2).unwrap();
        let pert = cohomology_constants(&make(smooth_field(grid, &coeffs)), t, 2).unwrap();
        prop_assert!((base - pert).abs() < 1e-8 * base.max(1e-3));
    }
}

#[test]
fn normalized_density_is_shift_invariant() {
    let t = torus(1, 16, HermMat::scalar(1.0));
    let f = PeriodicField::from_fn(t.grid(), |x| (2.0 * PI * x[0]).sin()).unwrap();
    let a = geometry::normalize_density(&t, &f).unwrap();
    let b = geometry::normalize_density(&t, &f.shifted(7.5)).unwrap();
    assert!(a.sup_distance(&b).unwrap() < 1e-13);
    let zero = geometry::normalize_density(&t, &PeriodicField::constant(t.grid(), 4.0)).unwrap();
    assert!(zero.values().iter().all(|v| v.abs() < 1e-15));
}
