mod common;

use std::f64::consts::PI;

use common::{gauss_legendre, random_model, rel, si};
use csl_heat::experiment::{CslParams, QuadratureSpec};
use csl_heat::geometry::{Layer, MassModel, Material, Wavevector};
use csl_heat::heating::{cm_integral, gamma_cm, gamma_internal, gamma_total, heating_report, GAUSSIAN_MOMENT};
use csl_heat::mc::gamma_cm_mc;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const RC: f64 = 1e-7;

fn csl() -> CslParams {
    CslParams::new(1e-16, RC)
}

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

/// `∫ d³u e^{-u²} u² |f(u/r_c)|²` in spherical coordinates with a
/// product Gauss-Legendre rule, independent of the axis factorization.
fn spherical_oracle(model: &MassModel, r_c: f64, nang: usize) -> f64 {
    let r_rule = common::composite(0.0, 8.0, 1.0, 0.5, &gauss_legendre(20));
    let c_rule = common::composite(-1.0, 1.0, 1.0, 2.0 / nang as f64, &gauss_legendre(20));
    let p_rule = common::composite(0.0, 2.0 * PI, 1.0, 2.0 * PI / nang as f64, &gauss_legendre(20));
    let mut acc = 0.0;
    for &(u, wu) in &r_rule {
        let radial = wu * u.powi(4) * (-u * u).exp();
        let mut shell = 0.0;
        for &(ct, wc) in &c_rule {
            let st = (1.0 - ct * ct).sqrt();
            for &(phi, wp) in &p_rule {
                let k = Wavevector::new(st * phi.cos(), st * phi.sin(), ct).scaled(u / r_c);
                shell += wc * wp * model.normalized_form_factor(k).norm_sqr();
            }
        }
        acc += radial * shell;
    }
    acc
}

#[test]
fn gaussian_moment_identity() {
    let i = cm_integral(&MassModel::point(1.0), RC, &quad()).unwrap();
    assert!(rel(i.value, 1.5 * PI.powf(1.5)) <= 1e-12, "{}", i.value);
    assert!(rel(GAUSSIAN_MOMENT, 1.5 * PI.powf(1.5)) <= 1e-15);
}

#[test]
fn point_mass_reduces_to_total_rate() {
    for m in [1e-20, 1.0, 7.0] {
        let p = MassModel::point(m).translated([1e-6, 0.0, -2e-6]);
        let cm = gamma_cm(&p, &csl(), &quad()).unwrap();
        assert!(rel(cm.value, gamma_total(m, &csl())) <= 1e-9);
        assert!((cm.reduction_factor - 1.0).abs() <= 1e-9);
        let int = gamma_internal(&p, &csl(), &quad()).unwrap();
        assert!(int.value <= 1e-9 * gamma_total(m, &csl()));
    }
}

#[test]
fn tiny_cube_is_nearly_a_point() {
    let m = MassModel::cube(RC / 100.0, si());
    let r = heating_report(&m, &csl(), &quad()).unwrap();
    assert!(r.reduction_factor >= 0.999, "{}", r.reduction_factor);
    let mc = gamma_cm_mc(&m, &csl(), &quad());
    assert!((mc.value - r.gamma_cm).abs() <= 3.0 * mc.std_error);
}

#[test]
fn large_cube_heats_mostly_internally() {
    let m = MassModel::cube(10.0 * RC, si());
    let r = heating_report(&m, &csl(), &quad()).unwrap();
    assert!(r.reduction_factor < 0.1);
    assert!(r.gamma_int / r.gamma_total >= 0.9);
    let mc = gamma_cm_mc(&m, &csl(), &quad());
    assert!((mc.value - r.gamma_cm).abs() <= 3.0 * mc.std_error);
    assert!(rel(mc.value, r.gamma_cm) <= 1e-3);
    assert!(1.0 - mc.value / r.gamma_total >= 0.9);
}

#[test]
fn thin_plate_agrees_with_monte_carlo() {
    let m = MassModel::cuboid(1e-3, 1e-3, 1e-5, si());
    let q = gamma_cm(&m, &csl(), &quad()).unwrap();
    let mc = gamma_cm_mc(&m, &csl(), &quad());
    assert!((mc.value - q.value).abs() <= 3.0 * mc.std_error, "{mc:?} vs {q:?}");
}

#[test]
fn spherical_oracle_agrees_on_non_separable_and_separable_bodies() {
    let bodies = [
        MassModel::sphere(1.3 * RC, si()),
        MassModel::cylinder(0.7 * RC, 2.2 * RC, si()),
        MassModel::cuboid(2.0 * RC, 0.5 * RC, 1.0 * RC, si()),
        MassModel::stack(
            RC,
            1.5 * RC,
            vec![
                Layer { material: Material::new("a", 23290.0), thickness: 0.5 * RC },
                Layer { material: Material::new("b", 2329.0), thickness: 0.5 * RC },
            ],
        ),
    ];
    for m in &bodies {
        let got = cm_integral(m, RC, &quad()).unwrap().value;
        let want = spherical_oracle(m, RC, 6);
        assert!(rel(got, want) <= 1e-9, "{}: {got} vs {want}", m.kind_name());
    }
}

#[test]
fn reduction_depends_only_on_shape_over_rc() {
    let base = MassModel::cuboid(3.0 * RC, 0.4 * RC, 1.7 * RC, si());
    let r0 = gamma_cm(&base, &csl(), &quad()).unwrap().reduction_factor;
    let dense = gamma_cm(&base.with_density_scaled(7.5), &csl(), &quad()).unwrap();
    assert!(rel(dense.reduction_factor, r0) <= 1e-12);
    let strong = gamma_cm(&base, &csl().with_lambda(3e-9), &quad()).unwrap();
    assert!(rel(strong.reduction_factor, r0) <= 1e-12);
    for s in [0.01, 3.0, 1e4] {
        let scaled = base.with_lengths_scaled(s);
        let r = gamma_cm(&scaled, &CslParams::new(1e-16, RC * s), &quad()).unwrap();
        assert!(rel(r.reduction_factor, r0) <= 1e-12, "{s}");
    }
}

#[test]
fn shrinking_approaches_the_point_limit_monotonically() {
    let base = MassModel::cylinder(4.0 * RC, 3.0 * RC, si());
    let mut last = 0.0;
    for s in [1.0, 0.5, 0.25, 0.1, 0.03, 0.01, 0.001] {
        let r = gamma_cm(&base.with_lengths_scaled(s), &csl(), &quad()).unwrap().reduction_factor;
        assert!(r > last, "{s}: {r} <= {last}");
        assert!(r <= 1.0 + 1e-9);
        last = r;
    }
    assert!(last > 0.9999);
}

#[test]
fn zero_lambda_gives_zero_rates() {
    let m = MassModel::sphere(RC, si());
    let r = heating_report(&m, &csl().with_lambda(0.0), &quad()).unwrap();
    assert_eq!((r.gamma_total, r.gamma_cm, r.gamma_int), (0.0, 0.0, 0.0));
}

#[test]
fn rates_scale_with_lambda_and_rc() {
    let m = MassModel::cube(RC, si());
    let a = gamma_cm(&m, &csl(), &quad()).unwrap().value;
    let b = gamma_cm(&m, &csl().with_lambda(4e-16), &quad()).unwrap().value;
    assert!(rel(b, 4.0 * a) <= 1e-15);
    let g = gamma_total(1.0, &csl());
    assert!(rel(gamma_total(1.0, &CslParams::new(1e-16, RC / 2.0)), 4.0 * g) <= 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_consistent(seed in any::<u64>()) {
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed), RC);
        let r = heating_report(&m, &csl(), &quad()).unwrap();
        prop_assert!(r.gamma_cm <= r.gamma_total * (1.0 + quad().rel_tol));
        prop_assert!(r.gamma_int >= 0.0);
        if !r.internal_clamped {
            prop_assert!((r.gamma_cm + r.gamma_int - r.gamma_total).abs() <= 1e-15 * r.gamma_total);
        }
        prop_assert!(r.reduction_factor > 0.0 && r.reduction_factor <= 1.0 + 1e-9);
    }
}
