//! Randomized invariants of the quadrature, the dbar solve and the determinant paths.

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use serde_json::json;

use carleman::config::{apply_override, config_hash};
use carleman::dbar::{solve_gamma, MatrixField};
use carleman::determinants::determinant_report;
use carleman::geometry::{build_grid, DomainSpec, Ellipse};
use carleman::kernel::{constant_nilpotent_pair, polynomial_pair, PolyTerm};
use carleman::linalg::{det, fro, identity, CMat};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ellipse() -> impl Strategy<Value = Ellipse> {
    (-1.0..1.0f64, -1.0..1.0f64, 0.3..1.5f64, 0.3..1.0f64, 0.0..PI)
        .prop_map(|(x, y, a, ratio, rot)| Ellipse::new(c(x, y), a, a * ratio, rot))
}

fn e12(v: Complex64) -> CMat {
    let mut m = CMat::zeros(2, 2);
    m[(0, 1)] = v;
    m
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn grid_reproduces_area_and_centroid(e in ellipse()) {
        let grid = build_grid(&DomainSpec::ellipse(e.center, e.a, e.b, e.rotation), 8, 16).unwrap();
        let area = grid.integrate(|_| c(1.0, 0.0));
        prop_assert!((grid.area() - e.area()).abs() <= 1e-12 * e.area());
        let centroid = grid.integrate(|z| z) / area;
        prop_assert!((centroid - e.center).norm() <= 1e-12);
        prop_assert!(grid.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn schwarz_function_is_conjugation_on_the_boundary(e in ellipse(), theta in 0.0..2.0 * PI) {
        let z = e.point(1.0, theta);
        prop_assert!((e.schwarz(z) - z.conj()).norm() <= 1e-11 * (1.0 + z.norm()));
    }

    #[test]
    fn cauchy_transform_of_indicator_decays_like_area(e in ellipse(), arg in 0.0..2.0 * PI) {
        // (1/π)∫∫_E dA/(z − w) → (area/π)/(z − center) far away
        let z = e.center + Complex64::from_polar(1e4, arg);
        let far = e.cauchy_indicator(z) * (z - e.center);
        prop_assert!((far - e.area() / PI).norm() <= 1e-6);
    }

    #[test]
    fn nilpotent_field_has_unimodular_gamma(e in ellipse(), re in -1.0..1.0f64, im in -1.0..1.0f64) {
        let v = c(re, im);
        let m = MatrixField::constant_e12(v, e);
        let grid = build_grid(&m.support, 16, 32).unwrap();
        let g = solve_gamma(&grid, &m).unwrap();
        prop_assert!(g.unimodularity_residual() <= 1e-13);
        let z = e.center + c(3.0, 2.0);
        let exact = identity(2) + e12(v * e.cauchy_indicator(z));
        prop_assert!(fro(&(g.evaluate(z) - exact)) <= 1e-10);
        prop_assert!((det(&g.evaluate(z)) - 1.0).norm() <= 1e-13);
    }

    #[test]
    fn determinant_paths_agree(
        lambda in 0.05..0.6f64,
        re in -0.5..0.5f64,
        im in -0.5..0.5f64,
        p in 0u32..3,
    ) {
        let support = DomainSpec::disk(c(0.2, -0.1), 0.6);
        let one = c(1.0, 0.0);
        let f = vec![
            PolyTerm { row: 0, col: 0, p: 0, q: 0, coeff: one },
            PolyTerm { row: 1, col: 0, p, q: 0, coeff: c(re, im) },
        ];
        let g = vec![
            PolyTerm { row: 0, col: 0, p, q: 0, coeff: -c(re, im) * lambda },
            PolyTerm { row: 1, col: 0, p: 0, q: 0, coeff: c(lambda, 0.0) },
        ];
        let pair = polynomial_pair(2, 1, support.clone(), f, g).unwrap();
        let grid = build_grid(&support, 6, 12).unwrap();
        let rep = determinant_report(&pair.discretize(&grid), 60).unwrap();
        let scale = rep.det2_eigen.norm().max(1e-300);
        prop_assert!((rep.det2_lu - rep.det2_eigen).norm() <= 1e-10 * scale);
        if let Some(s) = &rep.det2_series {
            prop_assert!((s.value - rep.det2_eigen).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn nilpotent_pair_has_unit_det2(re in -2.0..2.0f64, im in -2.0..2.0f64, r in 0.2..1.2f64) {
        let support = DomainSpec::disk(c(0.0, 0.5), r);
        let pair = constant_nilpotent_pair(c(re, im), support.clone());
        let grid = build_grid(&support, 5, 10).unwrap();
        let rep = determinant_report(&pair.discretize(&grid), 20).unwrap();
        prop_assert!((rep.det2_eigen - 1.0).norm() <= 1e-12);
        prop_assert!(rep.trace.norm() <= 1e-12);
    }

    #[test]
    fn overrides_change_the_hash_exactly_when_the_value_changes(x in -10.0..10.0f64, y in -10.0..10.0f64) {
        let base = json!({"nls": {"x": x}});
        let mut same = base.clone();
        apply_override(&mut same, &format!("nls.x={}", serde_json::to_string(&x).unwrap())).unwrap();
        prop_assert_eq!(config_hash(&same), config_hash(&base));
        let mut other = base.clone();
        apply_override(&mut other, &format!("nls.x={}", serde_json::to_string(&y).unwrap())).unwrap();
        prop_assert_eq!(other["nls"]["x"].as_f64(), Some(y));
        prop_assert_eq!(config_hash(&other) == config_hash(&base), x == y);
    }
}
