use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;

fn fin(m: f64) -> DimParam {
    DimParam::Finite(m)
}

#[test]
fn sphere_family_is_einstein_with_normalized_ricci() {
    let (n, m) = (4usize, 3.0);
    let k = gaussian_radius(n, m);
    let s = sphere(n, fin(m), SphereParams::round(k), 129).unwrap();
    let expect = (n as f64 - 1.0) / (m + n as f64 - 1.0);
    for r in s.interior_nodes() {
        let c = s.curvature_at(r).unwrap();
        assert!((c.ric_rad - expect).abs() < 1e-10, "{c:?}");
        assert!((c.ric_sph - expect).abs() < 1e-9, "{c:?}");
        // Constant density: weighted quantities reduce to the plain ones.
        assert_eq!(c.ric_phi_rad, c.ric_rad);
        assert_eq!(c.r_phi, c.scalar);
    }
    let (a, b) = s.qe_residual(expect).unwrap();
    assert!(a < 1e-12 && b < 1e-9);
}

#[test]
fn euclidean_is_flat_and_hyperbolic_has_constant_curvature() {
    let e = euclidean(3, fin(2.0), 65, 1.0).unwrap();
    for r in e.interior_nodes() {
        let c = e.curvature_at(r).unwrap();
        assert_eq!((c.k_rad, c.k_sph, c.scalar, c.r_phi), (0.0, 0.0, 0.0, 0.0));
    }
    let (n, m) = (5usize, 2.0);
    let h = hyperbolic_gaussian(n, m, 129, 3.0).unwrap();
    let k = -1.0 / (m + n as f64 - 1.0);
    for r in h.interior_nodes() {
        let c = h.curvature_at(r).unwrap();
        assert!((c.k_rad - k).abs() < 1e-12 && (c.k_sph - k).abs() < 1e-9, "{c:?}");
    }
}

#[test]
fn curvature_at_pole_is_singular() {
    let s = sphere(4, fin(1.0), SphereParams::round(1.0), 65).unwrap();
    assert!(matches!(s.curvature_at(0.0), Err(SmmsError::SingularPoint(_))));
    assert!(matches!(s.curvature_at(PI), Err(SmmsError::SingularPoint(_))));
}

#[test]
fn gaussian_is_quasi_einstein_with_expected_mu() {
    for &n in &[3usize, 4, 5] {
        for &m in &[2.0, 5.0, 100.0] {
            let g = gaussian(n, fin(m), DEFAULT_GRID, None).unwrap();
            let (a, b) = g.qe_residual(1.0).unwrap();
            assert!(a < 1e-10 && b < 1e-10, "n={n} m={m}: {a} {b}");
            let expect = (m - 1.0) / (m + n as f64 - 1.0);
            for r in g.interior_nodes() {
                assert!((g.kim_kim_mu(1.0, r).unwrap() - expect).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn infinite_gaussian_is_a_shrinker() {
    let g = gaussian(4, DimParam::Infinite, 257, Some(6.0)).unwrap();
    let (a, b) = g.qe_residual(1.0).unwrap();
    assert!(a < 1e-15 && b < 1e-15);
    for r in g.interior_nodes() {
        assert!(g.kim_kim_mu(1.0, r).unwrap().abs() < 1e-12);
    }
}

#[test]
fn kim_kim_mu_varies_off_quasi_einstein() {
    let params = SphereParams { radius: 1.0, density: SphereDensity::ExpCos(0.4), squash: 0.0, mu: None };
    let s = sphere(4, fin(2.0), params, 129).unwrap();
    let vals: Vec<f64> = s.interior_nodes().iter().map(|&r| s.kim_kim_mu(3.0, r).unwrap()).collect();
    let spread = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread > 0.1, "{spread}");
    let t = sphere(4, fin(2.0), SphereParams::round(1.0), 65).unwrap();
    assert!((t.kim_kim_mu(3.0, 1.0).unwrap() - 3.0).abs() < 1e-12);
    assert!(sphere(4, fin(0.0), SphereParams::round(1.0), 65).unwrap().kim_kim_mu(3.0, 1.0).is_err());
}

#[test]
fn hyperbolic_scale_satisfies_scale_equations() {
    for &(n, m) in &[(4usize, 3.0), (3, 5.0), (5, 2.0)] {
        let h = hyperbolic_gaussian(n, m, 257, 3.0).unwrap();
        let u = hyperbolic_scale(n, m, 3.0);
        let res = h.qe_scale_residual(&u, 1.0).unwrap();
        assert!(res.max() < 1e-9, "{res:?}");
        let bumped = u.map(|j| Jet::new(j.v + 0.1, j.d1, j.d2));
        assert!(h.qe_scale_residual(&bumped, 1.0).unwrap().max() > 1e-3);
    }
    let s = sphere(4, fin(2.0), SphereParams::round(1.0), 65).unwrap();
    let one = RadialProfile::constant(0.0, PI, 1.0);
    assert!(s.qe_scale_residual(&one, 3.0).unwrap().max() < 1e-9);
}

#[test]
fn volume_of_unit_four_sphere() {
    let s = sphere(4, fin(2.0), SphereParams::round(1.0), DEFAULT_GRID).unwrap();
    let exact = 8.0 * PI * PI / 3.0;
    assert!((s.weighted_volume(0.0).unwrap() - exact).abs() < 1e-8);
    assert!((s.weighted_volume(-2.0).unwrap() - s.volume()).abs() < 1e-14);
    let err = |n| (sphere(4, fin(2.0), SphereParams::round(1.0), n).unwrap().volume() - exact).abs();
    let ratio = err(65) / err(129);
    assert!((ratio - 16.0).abs() < 1.0, "{ratio}");
}

#[test]
fn curvature_matches_finite_differences() {
    // Rebuild a squashed sphere from samples; curvature from FD jets must
    // agree with the closed form to O(h^2) or better.
    let params = SphereParams { radius: 1.3, density: SphereDensity::ExpCos(0.3), squash: 0.2, mu: None };
    let s = sphere(4, fin(2.0), params, 257).unwrap();
    let err = |n: usize| {
        let grid = linspace(0.0, 1.3 * PI, n);
        let psi: Vec<f64> = grid.iter().map(|&r| s.psi.value(r)).collect();
        let v: Vec<f64> = grid.iter().map(|&r| s.v_jet(r).unwrap().v).collect();
        let c = custom_grid(4, fin(2.0), grid.clone(), psi, v, None).unwrap();
        let mut e = 0.0f64;
        for (i, &r) in grid.iter().enumerate() {
            if i < n / 8 || i > n - n / 8 {
                continue;
            }
            let a = s.curvature_at(r).unwrap();
            let b = c.curvature_at(r).unwrap();
            e = e.max((a.r_phi - b.r_phi).abs()).max((a.ric_phi_sph - b.ric_phi_sph).abs());
        }
        e
    };
    let (e1, e2) = (err(129), err(257));
    assert!(e2 < 1e-4, "{e2}");
    assert!((e1 / e2).log2() > 1.8, "order {}", (e1 / e2).log2());
}

#[test]
fn gaussian_converges_to_infinite_gaussian_at_rate_one_over_m() {
    let g_inf = gaussian(4, DimParam::Infinite, 65, Some(3.0)).unwrap();
    let r = 0.8;
    let c_inf = g_inf.curvature_at(r).unwrap();
    let gap = |m: f64| {
        let g = gaussian(4, fin(m), 65, None).unwrap();
        let c = g.curvature_at(r).unwrap();
        (c.ric_rad - c_inf.ric_rad).abs() + (g.psi.value(r) - r).abs() + (c.ric_phi_sph - c_inf.ric_phi_sph).abs()
    };
    for &m in &[100.0, 200.0, 400.0] {
        let ratio = gap(2.0 * m) / gap(m);
        assert!((0.4..=0.6).contains(&ratio), "m={m}: {ratio}");
    }
}

#[test]
fn config_round_trip_and_validation() {
    let text = r#"{"family":"gaussian","n":4,"m":5}"#;
    let cfg: ModelConfig = serde_json::from_str(text).unwrap();
    assert_eq!(cfg.grid, DEFAULT_GRID);
    let model = cfg.build().unwrap();
    assert!((model.mu.unwrap() - 0.5).abs() < 1e-15);
    let back: ModelConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
    let inf: ModelConfig = serde_json::from_str(r#"{"family":"sphere","n":3,"m":"inf","params":{"phi_amp":0.5},"grid":65}"#).unwrap();
    assert!(inf.build().unwrap().m.is_infinite());
    let bad: ModelConfig = serde_json::from_str(r#"{"family":"sphere","n":2,"m":1}"#).unwrap();
    assert!(bad.build().unwrap_err().is_config_error());
    assert!(serde_json::from_str::<ModelConfig>(r#"{"family":"torus","n":3,"m":1}"#).is_err());
    let even: ModelConfig = serde_json::from_str(r#"{"family":"euclidean","n":3,"m":1,"grid":64}"#).unwrap();
    assert!(even.build().is_err());
}

#[test]
fn profile_rows_cover_interior() {
    let g = gaussian(4, fin(5.0), 65, None).unwrap();
    let rows = g.profile_rows().unwrap();
    assert_eq!(rows.len(), 63);
    assert!(rows.iter().all(|r| r.scalar.is_finite() && r.r_phi.is_finite()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn constant_density_reduces_weighted_curvature(m in 0.0f64..50.0, radius in 0.5f64..3.0, squash in -0.2f64..0.5, t in 0.05f64..0.95) {
        let s = sphere(4, fin(m), SphereParams { radius, density: SphereDensity::Constant, squash, mu: None }, 65).unwrap();
        let c = s.curvature_at(t * radius * PI).unwrap();
        prop_assert!((c.ric_phi_rad - c.ric_rad).abs() < 1e-12);
        prop_assert!((c.ric_phi_sph - c.ric_sph).abs() < 1e-12);
        prop_assert!((c.r_phi - c.scalar).abs() < 1e-12);
        prop_assert!((c.scalar - (c.ric_rad + (s.n as f64 - 1.0) * c.ric_sph)).abs() < 1e-9 * (1.0 + c.scalar.abs()));
    }

    #[test]
    fn phi_and_v_forms_agree(m in 0.5f64..20.0, a in -1.0f64..1.0, t in 0.05f64..0.95) {
        // v = exp(a cos r) is the same density as φ = -m a cos r.
        let sv = sphere(4, fin(m), SphereParams { radius: 1.0, density: SphereDensity::ExpCos(a), squash: 0.0, mu: None }, 65).unwrap();
        let sp = sphere(4, fin(m), SphereParams { radius: 1.0, density: SphereDensity::PhiCos(-m * a), squash: 0.0, mu: None }, 65).unwrap();
        let (x, y) = (sv.curvature_at(t * PI).unwrap(), sp.curvature_at(t * PI).unwrap());
        prop_assert!((x.r_phi - y.r_phi).abs() < 1e-9 * (1.0 + x.r_phi.abs()));
        prop_assert!((x.ric_phi_rad - y.ric_phi_rad).abs() < 1e-9 * (1.0 + x.ric_phi_rad.abs()));
        let (va, vb) = (sv.weighted_volume(0.0).unwrap(), sp.weighted_volume(0.0).unwrap());
        prop_assert!((va - vb).abs() < 1e-12 * va);
    }
}
