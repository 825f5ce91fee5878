use super::*;
use crate::curvature_algebra::{weighted_weyl, SymForm};
use crate::warped_smms::{euclidean, sphere};
use proptest::prelude::*;

fn unit_volume_sphere(n: usize, m: f64, grid: usize) -> WarpedSmms {
    let k = (1.0 / crate::numerics::sphere_area(n)).powf(1.0 / n as f64);
    sphere(n, DimParam::Finite(m), SphereParams::round(k), grid).unwrap()
}

#[test]
fn status_rules() {
    assert!(CheckResult::residual("x", "m", 1e-13, 1e-12).passed());
    assert!(!CheckResult::residual("x", "m", f64::NAN, 1e-12).passed());
    assert!(!CheckResult::strict("x", "m", 1.0, 1.0, 0.0).passed());
    assert!(CheckResult::weak("x", "m", 1.0, 1.0, -1e-12, 1e-10).passed());
    assert!(!CheckResult::weak("x", "m", 1.0, 1.0, -1e-9, 1e-10).passed());
    let neg = CheckResult::residual("x", "m", 1.0, 1e-12).expecting_failure();
    assert!(neg.as_expected());
    assert!(!CheckResult::residual("x", "m", 0.0, 1e-12).expecting_failure().as_expected());
    assert!(CheckResult::skipped("x", "m", "why").as_expected());
    let j = CheckResult::skipped("x", "m", "why").to_json();
    assert_eq!(j["status"], "skipped");
    assert_eq!(j["margin"], "nan");
}

#[test]
fn channels_match_tensor_algebra() {
    let q = nontrivial_qe(129).unwrap();
    let n = q.model.n;
    for &i in guarded_indices(&q.model).iter().step_by(17) {
        let r = q.model.grid()[i];
        let c = Channels::at(&q, r).unwrap();
        let (pr, ps) = schouten_from_tensor(&q, r).unwrap();
        assert!((pr - c.p_rad).abs() < 1e-14 && (ps - c.p_sph).abs() < 1e-14);
        let a = weighted_weyl(&c.rm(n), q.model.m, q.mu().unwrap()).unwrap();
        assert!((a.get(0, 1, 0, 1) - c.a_rad).abs() < 1e-13);
        assert!((a.get(1, 2, 1, 2) - c.a_sph).abs() < 1e-13);
        assert!(a.max_abs_diff(&c.a(n)) < 1e-13);
        assert!((a.norm_sq() - c.a_norm_sq(n)).abs() < 1e-12);
    }
}

#[test]
fn div_free_vanishes_on_trivial_families() {
    let hyper = QeInput::hyperbolic(4, 3.0, 257, 10.0, 0.0).unwrap();
    assert!(div_free_residual(&hyper).unwrap().max() < 1e-12);
    let round = QeInput::einstein_sphere(5, 2.0, 1.0, 257, 0.0).unwrap();
    assert!(div_free_residual(&round).unwrap().max() < 1e-12);
}

#[test]
fn div_free_converges_at_second_order() {
    let (res, orders) = div_free_refinement(nontrivial_qe, &[129, 257, 513]).unwrap();
    assert!(res[0] > 1e-7, "the nontrivial solution must exercise the identity: {res:?}");
    for o in orders {
        assert!(o > 1.7, "{res:?}");
    }
}

#[test]
fn reduction_agrees_with_coordinate_computation() {
    for n in 3..=6 {
        let d = channel_reduction_defect(n, 0.9).unwrap();
        assert!(d < 1e-6, "n = {n}: {d}");
    }
    assert!(channel_reduction_defect(2, 0.9).is_err());
}

#[test]
fn laplacian_forms_agree_only_on_quasi_einstein_inputs() {
    let q = nontrivial_qe(129).unwrap();
    assert!(laplacian_rhs_equivalence(&q, 20, 1e-10).unwrap().passed());
    let bad = q.perturbed(0.05);
    let c = laplacian_rhs_equivalence(&bad, 20, 1e-10).unwrap();
    assert!(c.measured > 1e-5, "{}", c.measured);
    let round = QeInput::einstein_sphere(4, 3.0, 0.7, 129, 0.2).unwrap();
    assert!(laplacian_rhs_equivalence(&round, 20, 1e-12).unwrap().passed());
    let zero_m = QeInput::einstein_sphere(4, 0.0, 0.7, 129, 0.0).unwrap();
    assert!(laplacian_rhs_difference(&zero_m, 1.0).is_err());
}

#[test]
fn pohozaev_sum_is_an_identity() {
    let chi = |r: f64| (r.sin(), r.cos());
    let sum = |g| {
        let s = squashed_sphere(4, 3.0, g).unwrap();
        let (t1, t2) = pohozaev_terms(&s, 1.0, chi).unwrap();
        assert!(t1.abs() > 1.0, "the terms must be individually nonzero");
        (t1 + t2).abs()
    };
    let (e1, e2) = (sum(129), sum(257));
    assert!((e1 / e2).log2() > 1.7, "{e1} {e2}");
    let s = squashed_sphere(4, 3.0, 129).unwrap();
    assert_eq!(pohozaev_terms(&s, 1.0, |_| (0.0, 0.0)).unwrap(), (0.0, 0.0));
}

#[test]
fn dil_estimate_guards_and_margins() {
    let q = QeInput::einstein_sphere(4, 5.0, 1.0, 129, 0.0).unwrap();
    let cs = dil_estimate_check(&q).unwrap();
    assert!(cs.iter().all(|c| c.passed() && c.margin > 0.0), "{cs:?}");
    let low = QeInput::einstein_sphere(4, 1.0, 1.0, 129, 0.0).unwrap();
    assert!(dil_estimate_check(&low).unwrap().iter().all(|c| c.status == Status::Skipped));
    // Equality on the hyperbolic family, which is why noncompact inputs
    // get the weak form.
    let h = QeInput::hyperbolic(4, 5.0, 129, 10.0, 0.0).unwrap();
    let cs = dil_estimate_check(&h).unwrap();
    assert!(cs[0].passed() && cs[0].margin.abs() < 1e-12);
}

#[test]
fn volume_bounds_on_the_einstein_sphere() {
    let q = QeInput::einstein_sphere(4, 3.0, 1.0, 129, -0.4).unwrap();
    let cs = volume_bounds_check(&q, 1.0).unwrap();
    assert!(cs.iter().all(CheckResult::passed), "{cs:?}");
    // Equality case of the lower bound.
    assert!(cs[0].margin.abs() < 1e-12);
    let bad = volume_bounds_check(&q, 1.5).unwrap();
    assert!(!bad[0].passed() && !bad[1].passed());
    let wrong_mu = QeInput::einstein_sphere(4, 3.0, 2.0, 129, 0.0).unwrap();
    assert!(volume_bounds_check(&wrong_mu, 1.0).is_err());
}

#[test]
fn growth_bounds_are_strict_off_the_equality_case() {
    let q = QeInput::hyperbolic(4, 3.0, 257, 10.0, 0.5).unwrap();
    let cs = growth_bound_check(&q).unwrap();
    assert!(cs.iter().all(|c| c.passed() && c.margin > 0.0), "{cs:?}");
    // f0 = 0 is the equality case at the origin.
    let q0 = QeInput::hyperbolic(4, 3.0, 257, 10.0, 0.0).unwrap();
    let cs = growth_bound_check(&q0).unwrap();
    assert!(cs.iter().all(CheckResult::passed));
    assert!(cs[0].margin.abs() < 1e-12);
    // Constant f: the linearized bound reduces to k2 >= 0.
    let flat = QeInput::einstein_sphere(4, 3.0, 1.0, 129, 0.0).unwrap();
    assert!(growth_bound_check(&flat).unwrap().iter().all(CheckResult::passed));
}

#[test]
fn sobolev_inequalities() {
    let s = unit_volume_sphere(4, 2.0, 129);
    let ws = random_test_functions(3, 20, s.domain(), 0.5);
    let c = sharp_sobolev_check(&s, &ws).unwrap();
    assert!(c.passed() && c.margin > 0.0, "{c:?}");
    // Constants: both sides are equal under unit volume.
    let one = [RadialProfile::constant(s.domain().0, s.domain().1, 1.0)];
    let c = sharp_sobolev_check(&s, &one).unwrap();
    assert!(c.margin.abs() < 1e-12 && (c.measured - 1.0).abs() < 1e-12);
    let flat = euclidean(4, DimParam::Finite(2.0), 129, 1.0).unwrap();
    assert_eq!(sharp_sobolev_check(&flat, &ws).unwrap().status, Status::Skipped);
    let (es, lambda) = unit_energy_sphere(4, 2.0, 129).unwrap();
    assert!((es.weighted_volume(0.0).unwrap() - 1.0).abs() < estimates::UNIT_VOLUME_TOL);
    assert!(minimizer_sobolev_check(&es, lambda, &ws).unwrap().passed());
}

#[test]
fn unit_energy_sphere_is_minimized_by_constants() {
    use crate::variational::{minimize_m_energy, MinimizeOptions};
    let (s, lambda) = unit_energy_sphere(4, 2.0, 129).unwrap();
    let r = minimize_m_energy(&s, &MinimizeOptions::default()).unwrap();
    assert!((r.tau_star.unwrap() - 1.0).abs() < 1e-6);
    assert!((r.lambda_m - lambda).abs() < 1e-6 * lambda);
}

#[test]
fn holder_is_tight_only_for_constants() {
    let s = sphere(4, DimParam::Finite(2.0), SphereParams { density: crate::warped_smms::SphereDensity::ExpCos(0.3), ..SphereParams::round(1.0) }, 129).unwrap();
    let ws = random_test_functions(9, 20, s.domain(), 0.5);
    assert!(holder_check(&s, &ws).unwrap().iter().all(|c| c.passed()));
    let one = [RadialProfile::constant(s.domain().0, s.domain().1, 1.0)];
    let cs = holder_check(&s, &one).unwrap();
    assert!(cs[0].margin.abs() < 1e-12);
}

#[test]
fn test_functions_are_seeded() {
    let a = random_test_functions(5, 3, (0.0, 1.0), 0.5);
    let b = random_test_functions(5, 3, (0.0, 1.0), 0.5);
    let c = random_test_functions(6, 3, (0.0, 1.0), 0.5);
    assert_eq!(a[2].eval(0.3), b[2].eval(0.3));
    assert_ne!(a[2].eval(0.3), c[2].eval(0.3));
    // Even at the ends.
    assert!(a[0].eval(0.0).d1.abs() < 1e-14 && a[0].eval(1.0).d1.abs() < 1e-12);
}

#[test]
fn suite_passes_and_controls_fail() {
    let cfg = SuiteConfig { seed: 1, trials: 4, perturb: 0.1, grid: 129 };
    let results = run_suite(&cfg).unwrap();
    for c in &results {
        assert!(c.as_expected(), "{}", c.summary_line());
    }
    assert!(results.iter().any(|c| c.expect_fail));
    let again = run_suite(&cfg).unwrap();
    assert_eq!(results, again);
    let report = report_json(&results);
    assert_eq!(report["unexpected"], 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn channel_norm_matches_tensor_norm(n in 3usize..7, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let c = Channels { r: 1.0, h: 0.0, k_rad: 0.0, k_sph: 0.0, scalar: 0.0, p_rad: 0.0, p_sph: 0.0, a_rad: a, a_sph: b, df: 0.0, d2f: 0.0 };
        prop_assert!((c.a(n).norm_sq() - c.a_norm_sq(n)).abs() < 1e-12 * (1.0 + a * a + b * b));
    }

    #[test]
    fn residual_fails_iff_above_tolerance(x in 0.0f64..2.0, tol in 0.0f64..2.0) {
        let c = CheckResult::residual("x", "m", x, tol);
        prop_assert_eq!(c.passed(), x <= tol);
    }

    #[test]
    fn radial_schouten_is_diagonal(kr in -2.0f64..2.0, ks in -2.0f64..2.0, m in 0.0f64..10.0, mu in -1.0f64..1.0) {
        let rm = AlgCurv::radial(4, kr, ks);
        let ric = trace(&rm);
        let p = weighted_schouten(&ric, ric.trace(), DimParam::Finite(m), mu).unwrap();
        let diag = SymForm::diagonal(&[p.get(0, 0), p.get(1, 1), p.get(1, 1), p.get(1, 1)]);
        prop_assert!(p.max_abs_diff(&diag) < 1e-14);
    }
}
