mod common;

use common::{rel, si};
use csl_heat::constants::HBAR;
use csl_heat::experiment::{CslParams, QuadratureSpec};
use csl_heat::geometry::{Layer, MassModel, Material, Wavevector};
use csl_heat::heating::{gamma_cm, gamma_total};
use csl_heat::lattice::{
    build_lattice, cube_discretization_error, f_double_commutator, gamma_cm_lattice, gamma_cm_pair_sum,
    gamma_total_discrete, lattice_suite, mu_tilde_discrete, random_lattice, Lattice, Site,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RC: f64 = 1e-7;

#[test]
fn fill_examples() {
    let a = 4e-7;
    let m = MassModel::cube(a, si());
    let lat = build_lattice(&m, a / 2.0).unwrap();
    assert_eq!(lat.len(), 8);
    for s in &lat.sites {
        assert!(rel(s.mass, m.total_mass() / 8.0) < 1e-15);
    }

    let sphere = MassModel::sphere(3e-7, si());
    let lat = build_lattice(&sphere, 3e-7 / 20.0).unwrap();
    assert!(rel(lat.total_mass(), sphere.total_mass()) < 1e-14);

    let mm = MassModel::cube(1e-3, si());
    assert_eq!(build_lattice(&mm, 20e-6).unwrap().len(), 125_000);
}

#[test]
fn discrete_mu_trivial_values() {
    let lat = build_lattice(&MassModel::cylinder(2e-7, 3e-7, si()), 2e-8).unwrap();
    let mu0 = mu_tilde_discrete(&lat, Wavevector::ZERO);
    assert!(rel(mu0.re, lat.total_mass()) < 1e-14 && mu0.im == 0.0);

    let r = [1e-7, -3e-7, 2e-7];
    let one = Lattice::from_sites(vec![Site { mass: 2e-26, position: r }], 1e-30);
    let k = Wavevector::new(1e7, 5e6, -2e7);
    let mu = mu_tilde_discrete(&one, k);
    let want = num_complex::Complex64::from_polar(2e-26, -k.dot(&r));
    assert!((mu - want).norm() < 1e-15 * 2e-26);
    assert!(rel(mu.norm(), 2e-26) < 1e-15);
}

#[test]
fn double_commutator_closed_form() {
    let m = 3e-26;
    let one = Lattice::from_sites(vec![Site { mass: m, position: [4e-7, 0.0, 1e-7] }], 1e-30);
    let f = f_double_commutator(&one, Wavevector::new(1e7, 0.0, 0.0));
    assert!(rel(f, -HBAR * HBAR * m * 1e14) < 1e-15);
    assert_eq!(f_double_commutator(&one, Wavevector::ZERO), 0.0);
}

#[test]
fn double_commutator_is_position_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let n = rng.random_range(1..64);
        let lat = random_lattice(n, &mut rng);
        let k = Wavevector(std::array::from_fn(|_| rng.random_range(-1e8..1e8)));
        let f = f_double_commutator(&lat, k);
        let want = -HBAR * HBAR * lat.total_mass() * k.norm_sq();
        assert!(rel(f, want) <= 1e-14, "{f} vs {want}");
        for _ in 0..10 {
            let mut pos: Vec<_> = lat.sites.iter().map(|s| s.position).collect();
            pos.shuffle(&mut rng);
            let moved = Lattice::from_sites(
                lat.sites.iter().zip(pos).map(|(s, position)| Site { mass: s.mass, position }).collect(),
                lat.cell_volume,
            );
            assert!(rel(f_double_commutator(&moved, k), f) <= 1e-14);
        }
    }
}

#[test]
fn discrete_rate_matches_continuum_total() {
    let csl = CslParams::new(1e-16, RC);
    let lat = build_lattice(&MassModel::sphere(2e-7, si()), 2e-8).unwrap();
    assert_eq!(gamma_total_discrete(&lat, &csl), gamma_total(lat.total_mass(), &csl));
    let heavy = Lattice::from_sites(
        lat.sites.iter().map(|s| Site { mass: 2.0 * s.mass, position: s.position }).collect(),
        lat.cell_volume,
    );
    assert!(rel(gamma_total_discrete(&heavy, &csl), 2.0 * gamma_total_discrete(&lat, &csl)) < 1e-15);
    assert_eq!(gamma_total_discrete(&lat, &csl.with_lambda(0.0)), 0.0);
}

#[test]
fn second_order_convergence() {
    let errors: Vec<f64> = [10, 20, 40, 80].iter().map(|&c| cube_discretization_error(RC, c)).collect();
    for w in errors.windows(2) {
        let slope = (w[0] / w[1]).log2();
        assert!((slope - 2.0).abs() <= 0.3, "{errors:?}");
    }
    assert!(cube_discretization_error(RC, 50) <= 1e-3);
}

#[test]
fn pair_sum_and_product_lattice_agree_with_quadrature() {
    let csl = CslParams::new(1e-16, RC);
    let quad = QuadratureSpec::default();
    let small = MassModel::cuboid(3e-8, 2e-8, 5e-8, si());
    let lat = build_lattice(&small, 5e-9).unwrap();
    let pair = gamma_cm_pair_sum(&lat, &csl);
    assert!(rel(pair, gamma_cm(&small, &csl, &quad).unwrap().value) < 1e-2);

    let bodies = [
        MassModel::point(1.0),
        MassModel::cube(0.1 * RC, si()),
        MassModel::cube(10.0 * RC, si()),
        MassModel::cuboid(1e-3, 1e-3, 1e-5, si()),
        MassModel::stack(
            1e-6,
            1e-6,
            (0..16)
                .map(|i| Layer {
                    material: Material::new("x", if i % 2 == 0 { 23290.0 } else { 2329.0 }),
                    thickness: RC,
                })
                .collect(),
        ),
    ];
    for m in &bodies {
        let q = gamma_cm(m, &csl, &quad).unwrap().value;
        let l = gamma_cm_lattice(m, &csl, None).unwrap();
        assert!(rel(l.value, q) <= 1e-6, "{}: {} vs {q}", m.kind_name(), l.value);
        assert!((l.value - q).abs() <= 3.0 * l.error.max(1e-12 * q));
    }
}

#[test]
fn suite_passes_with_default_settings() {
    let report = lattice_suite(100, 32, 7);
    assert!(report.all_passed, "{report:#?}");
    assert_eq!(report.convergence_slopes.len(), 3);
}

proptest! {
    #[test]
    fn discrete_mu_is_bounded(seed in any::<u64>(), k in prop::array::uniform3(-1e8..1e8f64)) {
        let lat = random_lattice(16, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(mu_tilde_discrete(&lat, Wavevector(k)).norm() <= lat.total_mass() * (1.0 + 1e-12));
    }
}
