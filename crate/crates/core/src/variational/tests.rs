use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::conformal::weighted_conformal_laplacian_at;
use crate::warped_smms::{sphere, Density, SphereDensity, SphereParams};

fn fin(m: f64) -> DimParam {
    DimParam::Finite(m)
}

fn s4_volume() -> f64 {
    8.0 * PI * PI / 3.0
}

/// Round `S⁴` rescaled to unit volume, `v ≡ 1`; its default `µ` makes it
/// quasi-Einstein.
fn unit_volume_s4(m: f64, grid: usize) -> WarpedSmms {
    let k = s4_volume().powf(-0.25);
    sphere(4, fin(m), SphereParams::round(k), grid).unwrap()
}

fn random_trig(seed: u64, a: f64, b: f64) -> RadialProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.3..0.3)).collect();
    RadialProfile::closed(a, b, move |r| {
        let x = PI * (r - a) / (b - a);
        let k = PI / (b - a);
        let mut j = Jet::constant(1.0);
        for (i, ci) in c.iter().enumerate() {
            let f = (i + 1) as f64;
            j = j.add(Jet::new(ci * (f * x).cos(), -ci * f * k * (f * x).sin(), -ci * f * f * k * k * (f * x).cos()).scale(1.0 / f));
        }
        j
    })
}

#[test]
fn energy_functional_on_the_unit_four_sphere() {
    let s = sphere(4, fin(2.0), SphereParams::round(1.0), 513).unwrap();
    let w = energy_functional(&s, 3.0).unwrap();
    // (R + mµ) Vol with R = 12.
    assert!((w - 18.0 * s4_volume()).abs() < 1e-8 * w, "{w}");
    let s0 = sphere(4, fin(0.0), SphereParams::round(1.0), 513).unwrap();
    assert!((energy_functional(&s0, 0.0).unwrap() - 12.0 * s4_volume()).abs() < 1e-7);
}

#[test]
fn renormalization_gap_decays_like_one_over_m() {
    let build = |m: DimParam| {
        sphere(4, m, SphereParams { radius: 1.0, density: SphereDensity::PhiCos(1.0), squash: 0.0, mu: None }, 257)
    };
    let gaps = renormalization_gap(build, 1.5, &[10.0, 20.0, 40.0, 80.0]).unwrap();
    for w in gaps.windows(2) {
        let ratio = w[1] / w[0];
        assert!((0.4..=0.6).contains(&ratio), "{gaps:?}");
    }
    assert!(renormalization_gap(build, 1.0, &[10.0, f64::INFINITY]).is_err());
}

#[test]
fn yamabe_quotient_of_round_sphere() {
    let s = sphere(4, fin(0.0), SphereParams::round(1.0), 513).unwrap();
    let one = RadialProfile::constant(0.0, PI, 1.0);
    let q = yamabe_quotient(&s, &one).unwrap();
    assert!((q - 12.0 * s4_volume().sqrt()).abs() < 1e-8, "{q}");
    let two = RadialProfile::constant(0.0, PI, 2.7);
    assert!((yamabe_quotient(&s, &two).unwrap() - q).abs() < 1e-12 * q);
}

#[test]
fn quotient_forms_agree_for_random_factors() {
    let params = SphereParams { radius: 1.2, density: SphereDensity::ExpCos(0.3), squash: 0.1, mu: None };
    let (n, m) = (4usize, 2.5);
    let s = sphere(n, fin(m), params, 513).unwrap();
    let d = m + n as f64 - 2.0;
    for seed in 0..5 {
        let w = random_trig(seed, 0.0, 1.2 * PI);
        let u = w.map(move |j| j.powf(-2.0 / d));
        let a = yamabe_quotient(&s, &w).unwrap();
        let b = yamabe_quotient_homogeneous(&s, &u).unwrap();
        assert!((a - b).abs() < 1e-7 * a.abs(), "seed {seed}: {a} vs {b}");
    }
}

#[test]
fn homogeneous_quotient_is_scale_invariant() {
    let (n, m) = (4usize, 3.0);
    let base = SphereParams { radius: 1.0, density: SphereDensity::ExpCos(0.4), squash: 0.15, mu: None };
    let s = sphere(n, fin(m), base, 513).unwrap();
    let q0 = homogeneous_quotient_of(&s, m).unwrap();
    // g ↦ c²g is the sphere of radius c with the same density profile in
    // r/c; v ↦ kv rescales the density.
    let (c, k) = (1.7, 0.6);
    let scaled = sphere(n, fin(m), SphereParams { radius: c, ..base }, 513).unwrap();
    let v = match &scaled.density {
        Density::V(v) => v.map(move |j| j.scale(k)),
        Density::Phi(_) => unreachable!(),
    };
    let scaled = WarpedSmms { density: Density::V(v), ..scaled };
    let q1 = homogeneous_quotient_of(&scaled, m).unwrap();
    assert!((q0 - q1).abs() < 1e-9 * q0.abs(), "{q0} {q1}");
}

#[test]
fn tau_star_minimizes_objective() {
    assert_eq!(tau_star(2.0, 2.0, 4.0, 4), Some(4.0));
    assert_eq!(tau_star(-1.0, 2.0, 4.0, 4), None);
    let params = SphereParams { radius: 1.0, density: SphereDensity::ExpCos(0.3), squash: 0.0, mu: None };
    let (n, m) = (4usize, 2.0);
    let s = sphere(n, fin(m), params, 257).unwrap();
    for seed in 0..3 {
        let w = random_trig(seed, 0.0, PI);
        let q = quadratic_parts(&s, &w).unwrap();
        let t = tau_star(q.a, q.b, m, n).unwrap();
        // Scan oracle on a geometric grid around τ*.
        let best = (0..401)
            .map(|i| t * 2f64.powf((i as f64 - 200.0) / 100.0))
            .min_by(|x, y| m_energy_objective(&s, &w, *x).unwrap().total_cmp(&m_energy_objective(&s, &w, *y).unwrap()))
            .unwrap();
        assert!((best / t - 1.0).abs() < 0.01, "{best} vs {t}");
        let closed = m_energy_at_tau_star(q.a, q.b, q.p_norm.powf(2.0 / sobolev_exponent(n, m)), m, n);
        let direct = m_energy_objective(&s, &w, t).unwrap();
        assert!((closed - direct).abs() < 1e-12 * direct);
    }
}

#[test]
fn objective_gradients_match_central_differences() {
    let params = SphereParams { radius: 1.0, density: SphereDensity::ExpCos(0.3), squash: 0.1, mu: Some(2.0) };
    let s = sphere(4, fin(2.0), params, 129).unwrap();
    let problem = EnergyProblem::new(&s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for obj in [Objective::Mmu(2.0), Objective::MEnergy, Objective::Yamabe] {
        for _ in 0..5 {
            let w: Vec<f64> = problem.nodes.iter().map(|&r| 1.0 + 0.3 * (r * rng.gen_range(0.5..3.0)).cos()).collect();
            let d: Vec<f64> = (0..w.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g = problem.gradient(obj, &w);
            let exact: f64 = g.iter().zip(&d).map(|(g, d)| g * d).sum();
            let h = 1e-5;
            let plus: Vec<f64> = w.iter().zip(&d).map(|(w, d)| w + h * d).collect();
            let minus: Vec<f64> = w.iter().zip(&d).map(|(w, d)| w - h * d).collect();
            let fd = (problem.value(obj, &plus) - problem.value(obj, &minus)) / (2.0 * h);
            assert!((fd - exact).abs() < 1e-6 * exact.abs(), "{obj:?}: {fd} vs {exact}");
        }
    }
}

#[test]
fn tangent_projection_preserves_constraint_to_first_order() {
    let s = sphere(4, fin(2.0), SphereParams::round(1.0), 129).unwrap();
    let problem = EnergyProblem::new(&s).unwrap();
    let w = problem.normalized(&problem.nodes.iter().map(|r| 1.0 + 0.2 * r.sin()).collect::<Vec<_>>());
    let d: Vec<f64> = problem.nodes.iter().map(|r| (3.0 * r).cos()).collect();
    let t = problem.project_tangent(&w, &d);
    let p = problem.exponent();
    let dot: f64 = (0..w.len()).map(|i| problem.weights[i] * w[i].powf(p - 1.0) * t[i]).sum();
    assert!(dot.abs() < 1e-14, "{dot}");
}

#[test]
fn finite_volume_operator_is_consistent() {
    let params = SphereParams { radius: 1.0, density: SphereDensity::ExpCos(0.3), squash: 0.0, mu: None };
    let err = |grid: usize| {
        let s = sphere(4, fin(2.0), params, grid).unwrap();
        let problem = EnergyProblem::new(&s).unwrap();
        let w = random_trig(3, 0.0, PI);
        let vals: Vec<f64> = problem.nodes.iter().map(|&r| w.value(r)).collect();
        let kw = problem.stiffness(&vals);
        let mut e = 0.0f64;
        for i in 1..grid - 1 {
            let r = problem.nodes[i];
            let fv = kw[i] / problem.weights[i] + problem.scalar_weights[i] / problem.weights[i] * vals[i];
            e = e.max((fv - weighted_conformal_laplacian_at(&s, w.eval(r), r).unwrap()).abs());
        }
        e
    };
    let (a, b) = (err(129), err(257));
    assert!((a / b).log2() > 1.8, "{a} {b}");
}

#[test]
fn mmu_minimizer_on_quasi_einstein_sphere_is_constant() {
    let s = unit_volume_s4(2.0, 257);
    let opts = MinimizeOptions { init: Init::Random { seed: 5, amplitude: 0.4 }, ..Default::default() };
    let rep = minimize_mmu_energy(&s, &opts).unwrap();
    assert!(rep.converged, "{rep:?}");
    let (lo, hi) = rep.w.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi - lo < 1e-3 * hi, "{lo} {hi}");
    let expect = 18.0 * s4_volume().sqrt();
    assert!((rep.lambda_mmu - expect).abs() < 1e-4 * expect, "{}", rep.lambda_mmu);
    assert!(rep.el_residual < 1e-6 && rep.sc_crit_deviation < 1e-5);
    for w in rep.history.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-14), "{:?}", w);
    }
}

#[test]
fn known_minimizer_needs_no_iterations() {
    let s = unit_volume_s4(2.0, 129);
    let rep = minimize_mmu_energy(&s, &MinimizeOptions { max_iter: 0, ..Default::default() }).unwrap();
    assert!(rep.converged);
    assert_eq!(rep.iterations, 0);
}

#[test]
fn m_energy_matches_yamabe_constant() {
    for &m in &[1.0, 2.0, 5.0] {
        let s = sphere(4, fin(m), SphereParams::round(1.0), 257).unwrap();
        let opts = MinimizeOptions { init: Init::Random { seed: 1, amplitude: 0.3 }, ..Default::default() };
        let me = minimize_m_energy(&s, &opts).unwrap();
        let ya = minimize_yamabe_quotient(&s, &MinimizeOptions { init: Init::Random { seed: 2, amplitude: 0.3 }, ..Default::default() }).unwrap();
        assert!(me.converged && ya.converged);
        let predicted = lambda_from_sigma(ya.sigma, m, 4);
        assert!((me.lambda_m - predicted).abs() < 1e-4 * predicted, "m={m}: {} vs {predicted}", me.lambda_m);
        // Lower bound from the most negative part of R_φ; zero here.
        assert!(ya.sigma >= 0.0);
    }
}

#[test]
fn gauge_of_m_energy_minimizer_satisfies_volume_condition() {
    let (n, m) = (4usize, 2.0);
    let s = sphere(n, fin(m), SphereParams::round(1.0), 257).unwrap();
    let rep = minimize_m_energy(&s, &MinimizeOptions::default()).unwrap();
    let tau = rep.tau_star.unwrap();
    // Gauge: v ↦ √τ v and u = w̃^{-2/(m+n-2)}, with w̃ = τ^{-m/(2p)} w
    // normalized against the rescaled measure; there (1, 1) is critical.
    let d = m + n as f64 - 2.0;
    let c = tau.powf(-m / (2.0 * sobolev_exponent(n, m)));
    let u = rep.minimizer().unwrap().map(move |j| j.scale(c).powf(-2.0 / d));
    let hat = crate::conformal::conformal_change(&s, &u).unwrap();
    let v = match &hat.density {
        Density::V(v) => v.map(move |j| j.scale(tau.sqrt())),
        Density::Phi(_) => unreachable!(),
    };
    let gauge = WarpedSmms { density: Density::V(v), ..hat };
    let lhs = gauge.weighted_volume(-2.0).unwrap();
    let rhs = rep.lambda_m / (m + n as f64);
    assert!((lhs - rhs).abs() < 1e-3 * rhs, "{lhs} {rhs}");
}

#[test]
fn first_eigenvalue_signs() {
    let s = sphere(4, fin(2.0), SphereParams::round(1.0), 257).unwrap();
    let (l0, f) = first_eigenvalue(&s).unwrap();
    assert!((l0 - 12.0).abs() < 1e-9, "{l0}");
    let vals: Vec<f64> = s.grid().iter().map(|&r| f.value(r)).collect();
    assert!(vals.iter().all(|&x| x > 0.0));
    let spread = vals.iter().cloned().fold(f64::MIN, f64::max) / vals.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread - 1.0 < 1e-8);

    let neg = negative_model(257);
    let (l0, f) = first_eigenvalue(&neg).unwrap();
    assert!(l0 < 0.0, "{l0}");
    assert!(neg.grid().iter().all(|&r| f.value(r) > 0.0));
}

pub(crate) fn negative_model(grid: usize) -> WarpedSmms {
    let params = SphereParams { radius: 1.0, density: SphereDensity::ExpCos(10.0), squash: 0.0, mu: Some(1.0) };
    sphere(4, fin(0.5), params, grid).unwrap()
}

#[test]
fn negative_sigma_gives_zero_renormalized_energy() {
    let s = negative_model(257);
    let rep = minimize_m_energy(&s, &MinimizeOptions { max_iter: 200, ..Default::default() }).unwrap();
    assert_eq!(rep.lambda_m, f64::NEG_INFINITY);
    assert_eq!(rep.lambda_bar, 0.0);
    assert!(rep.sigma < 0.0);
}

#[test]
fn renormalized_energy_cases() {
    assert_eq!(renormalized_energy(5.0, fin(2.0), 4, false), 0.0);
    let unit = renormalized_energy(6.0, fin(2.0), 4, true);
    assert!((unit - (2.0 * PI * E).powf(-2.0)).abs() < 1e-15);
    let (m, n, sigma) = (3.0, 4usize, 40.0);
    let lam = lambda_from_sigma(sigma, m, n);
    let direct = (sigma / (2.0 * PI * n as f64 * E)).powf(n as f64 / 2.0);
    assert!((renormalized_energy(lam, fin(m), n, true) - direct).abs() < 1e-12 * direct);
    let lam_inf = 3.3;
    let nu = nu_from_lambda_inf(lam_inf, 4);
    assert!((renormalized_energy(lam_inf, DimParam::Infinite, 4, true) - nu.exp()).abs() < 1e-14);
}

#[test]
fn infinity_energy_of_gaussian_shrinker() {
    let n = 4;
    let g = crate::warped_smms::gaussian(n, DimParam::Infinite, 1025, Some(12.0)).unwrap();
    let zero = RadialProfile::constant(0.0, 12.0, 0.0);
    let value = infinity_energy_evaluate(&g, &zero, 1.0).unwrap();
    // Direct substitution: Φ = r²/2 + (n/2) log 2π gives the constant
    // integrand n log 2π against a probability measure.
    assert!((value - n as f64 * (2.0 * PI).ln()).abs() < 1e-8, "{value}");
    assert!(nu_from_lambda_inf(value, n).abs() < 1e-8);
    let once = project_infinity_constraint(&g, &zero, 1.0).unwrap();
    let twice = project_infinity_constraint(&g, &once, 1.0).unwrap();
    assert!((once.value(1.0) - twice.value(1.0)).abs() < 1e-12);
    assert!(infinity_energy_evaluate(&sphere(4, fin(1.0), SphereParams::round(1.0), 65).unwrap(), &zero, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quotient_is_homogeneous(c in 0.01f64..100.0, seed in 0u64..1000) {
        let s = sphere(4, fin(2.0), SphereParams { radius: 1.0, density: SphereDensity::ExpCos(0.2), squash: 0.0, mu: None }, 129).unwrap();
        let w = random_trig(seed, 0.0, PI);
        let cw = w.map(move |j| j.scale(c));
        let (a, b) = (yamabe_quotient(&s, &w).unwrap(), yamabe_quotient(&s, &cw).unwrap());
        prop_assert!((a - b).abs() < 1e-12 * a.abs());
    }

    #[test]
    fn holder_bounds_hold(seed in 0u64..10_000, m in 0.5f64..8.0, amp in 0.0f64..0.8) {
        let s = sphere(4, fin(m), SphereParams { radius: 1.0, density: SphereDensity::ExpCos(amp), squash: 0.0, mu: None }, 129).unwrap();
        let w = random_trig(seed, 0.0, PI);
        let q = quadratic_parts(&s, &w).unwrap();
        let p = sobolev_exponent(4, m);
        let pn2 = q.p_norm.powf(2.0 / p);
        let vol = s.weighted_volume(0.0).unwrap();
        let vn = s.weighted_volume(-m - 4.0).unwrap();
        prop_assert!(q.l2 <= pn2 * vol.powf(2.0 / (m + 4.0)) * (1.0 + 1e-12));
        prop_assert!(q.b <= pn2 * vn.powf(2.0 / (m + 4.0)) * (1.0 + 1e-12));
    }
}

