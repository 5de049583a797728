mod common;

use std::path::PathBuf;

use csl_heat::error::SpecError;
use csl_heat::experiment::{canonical_hash, load_spec, parse_spec, to_json, validate_spec, CslParams, ExperimentSpec, QuadratureSpec, TaskSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn regression_specs() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs");
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    v.sort();
    v
}

#[test]
fn regression_specs_load_and_validate() {
    let specs = regression_specs();
    assert!(specs.len() >= 5);
    for p in specs {
        let spec = load_spec(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert!(validate_spec(&spec).is_empty());
        let again = parse_spec(&to_json(&spec)).unwrap();
        assert_eq!(again, spec);
    }
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(load_spec("/definitely/not/here.json"), Err(SpecError::Io { .. })));
}

#[test]
fn hash_ignores_formatting_and_key_order() {
    let a = r#"{"csl": {"r_c": 1e-7, "lambda_rate": 1e-16}, "mass_model": {"type": "point_mass", "mass": 1.0}}"#;
    let b = "{\n  \"mass_model\": {\"mass\": 1.0, \"type\": \"point_mass\"},\n  \"csl\": {\"lambda_rate\": 1e-16, \"r_c\": 1e-7}\n}\n";
    assert_eq!(canonical_hash(a).unwrap(), canonical_hash(b).unwrap());
    let c = a.replace("1.0", "2.0");
    assert_ne!(canonical_hash(a).unwrap(), canonical_hash(&c).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn serialize_then_load_is_idempotent(
        seed in any::<u64>(),
        lambda in 0.0..1e-6f64,
        r_c in 1e-9..1e-5f64,
        rel_tol in 1e-12..1e-6f64,
        rng_seed in any::<u64>(),
    ) {
        let spec = ExperimentSpec {
            version: 1,
            materials: Default::default(),
            csl: CslParams::new(lambda, r_c),
            mass_model: common::random_model(&mut ChaCha8Rng::seed_from_u64(seed), r_c),
            thermal: None,
            quadrature: QuadratureSpec { rel_tol, rng_seed, ..Default::default() },
            task: TaskSpec::default(),
        };
        let first = parse_spec(&to_json(&spec)).unwrap();
        prop_assert!(validate_spec(&first).is_empty());
        let second = parse_spec(&to_json(&first)).unwrap();
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(to_json(&first), to_json(&second));
    }
}
