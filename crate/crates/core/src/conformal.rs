//! Conformal changes `(g, v^m dvol) ↦ (u⁻²g, u^{-m-n}v^m dvol)` of radial
//! models and the weighted conformal Laplacian
//! `L = -(4(m+n-1)/(m+n-2)) Δ_φ + R_φ^m`.
//!
//! After a change the model is reparametrized by arclength `dr̂ = dr/u`,
//! so the warped-product formulas apply verbatim. For a radial `F`,
//! `dF/dr̂ = uF'` and `d²F/dr̂² = u(u'F' + uF'')`.

use crate::dim::DimParam;
use crate::error::{Result, SmmsError};
use crate::numerics::{fd_first, fd_second, hermite_segment_integral, linspace};
use crate::warped_smms::{Density, End, Jet, RadialProfile, WarpedSmms};

/// Arclength coordinate `r̂(r) = ∫ dr/u` at the model's grid nodes.
pub fn arclength_nodes(s: &WarpedSmms, u: &RadialProfile) -> Result<Vec<f64>> {
    let grid = s.grid();
    let inv: Vec<[f64; 3]> = grid
        .iter()
        .map(|&r| {
            let j = u.eval(r);
            if !(j.v > 0.0) {
                return Err(SmmsError::NotPositive(format!("conformal factor at r = {r} is {}", j.v)));
            }
            Ok([1.0 / j.v, -j.d1 / (j.v * j.v), -j.d2 / (j.v * j.v) + 2.0 * j.d1 * j.d1 / j.v.powi(3)])
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = grid[0];
    out.push(acc);
    for i in 0..grid.len() - 1 {
        acc += hermite_segment_integral(grid[i + 1] - grid[i], inv[i], inv[i + 1]);
        out.push(acc);
    }
    Ok(out)
}

/// Jet in `r̂` of a radial function, given its jet and the factor's jet
/// in `r`.
pub fn reparametrize_jet(p: Jet, u: Jet) -> Jet {
    Jet::new(p.v, u.v * p.d1, u.v * (u.d1 * p.d1 + u.v * p.d2))
}

/// Express a profile given in `r` on the arclength nodes of the change by
/// `u`.
pub fn reparametrize(s: &WarpedSmms, u: &RadialProfile, p: &RadialProfile) -> Result<RadialProfile> {
    let hat = arclength_nodes(s, u)?;
    let jets = s.grid().iter().map(|&r| reparametrize_jet(p.eval(r), u.eval(r))).collect();
    RadialProfile::from_jets(hat, jets)
}

/// `F/u` as a jet in `r̂`.
fn divide_reparametrized(p: Jet, u: Jet) -> Jet {
    let q = u.v;
    Jet::new(
        p.v / q,
        p.d1 - p.v * u.d1 / q,
        q * (p.d2 - p.d1 * u.d1 / q - p.v * u.d2 / q + p.v * u.d1 * u.d1 / (q * q)),
    )
}

/// The model `(u⁻²g, u^{-m-n}v^m dvol)` in its arclength coordinate, with
/// `ψ̂ = ψ/u` and `v̂ = v/u`. Requires finite `m`.
pub fn conformal_change(s: &WarpedSmms, u: &RadialProfile) -> Result<WarpedSmms> {
    let m = s.m.require_finite("conformal_change (use conformal_change_inf)")?;
    let nodes = arclength_nodes(s, u)?;
    let grid = s.grid();
    let uj: Vec<Jet> = grid.iter().map(|&r| u.eval(r)).collect();
    let psi = grid.iter().zip(&uj).map(|(&r, &u)| divide_reparametrized(s.psi.eval(r), u)).collect();
    let psi = RadialProfile::from_jets(nodes.clone(), psi)?;
    let density = match &s.density {
        Density::V(v) => {
            let jets = grid.iter().zip(&uj).map(|(&r, &u)| divide_reparametrized(v.eval(r), u)).collect();
            Density::V(RadialProfile::from_jets(nodes, jets)?)
        }
        Density::Phi(phi) => {
            // φ̂ = φ + m log u.
            let jets = grid
                .iter()
                .zip(&uj)
                .map(|(&r, &u)| reparametrize_jet(phi.eval(r).add(u.ln().scale(m)), u))
                .collect();
            Density::Phi(RadialProfile::from_jets(nodes, jets)?)
        }
    };
    WarpedSmms::new(s.n, psi, density, s.m, s.mu, s.ends, s.grid_size, format!("{}/conformal", s.label))
}

/// The `m = ∞` change: the metric is unchanged and the measure gains the
/// factor `e^{-f}`.
pub fn conformal_change_inf(s: &WarpedSmms, f: &RadialProfile) -> Result<WarpedSmms> {
    if !s.m.is_infinite() {
        return Err(SmmsError::InvalidParameter("conformal_change_inf needs m = inf".into()));
    }
    let phi = match &s.density {
        Density::Phi(phi) => phi.zip(f, |a, b| a.add(b)),
        Density::V(_) => unreachable!("m = inf models store phi"),
    };
    WarpedSmms::new(s.n, s.psi.clone(), Density::Phi(phi), s.m, s.mu, s.ends, s.grid_size, format!("{}/conformal", s.label))
}

/// Weighted curvature of the changed model evaluated directly from the
/// original data, in an orthonormal frame of `u⁻²g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedCurvature {
    pub ric_phi_rad: f64,
    pub ric_phi_sph: f64,
    pub r_phi: f64,
}

/// `Δ_φ F = F'' + ((n-1)ψ'/ψ - φ')F'`.
pub fn weighted_laplacian(s: &WarpedSmms, f: Jet, r: f64) -> Result<f64> {
    let p = s.psi.eval(r);
    let h = p.d1 / p.v;
    let drift = match s.m {
        DimParam::Infinite => -s.phi_jet(r)?.d1,
        DimParam::Finite(m) => m * s.density_ratios(r)?.a1,
    };
    Ok(f.d2 + ((s.n as f64 - 1.0) * h + drift) * f.d1)
}

/// Weighted Ricci and scalar curvature of `(u⁻²g, u^{-m-n}v^m dvol)`:
///
/// * `Ric^ = Ric_φ + (m+n-2)u⁻¹∇²u + (u⁻¹Δ_φu - (m+n-1)u⁻²|∇u|²)g`,
/// * `R^ = R_φ + 2(m+n-1)u⁻¹Δ_φu - (m+n)(m+n-1)u⁻²|∇u|²`,
///
/// both rescaled by `u²` into the new orthonormal frame.
pub fn transformed_curvature(s: &WarpedSmms, u: &RadialProfile, r: f64) -> Result<TransformedCurvature> {
    let m = s.m.require_finite("transformed_curvature")?;
    let n = s.n as f64;
    let c = s.curvature_at(r)?;
    let uj = u.eval(r);
    if !(uj.v > 0.0) {
        return Err(SmmsError::NotPositive(format!("conformal factor at r = {r} is {}", uj.v)));
    }
    let p = s.psi.eval(r);
    let h = p.d1 / p.v;
    let lap = weighted_laplacian(s, uj, r)?;
    let (q, du2) = (uj.v, uj.d1 * uj.d1);
    let iso = lap / q - (m + n - 1.0) * du2 / (q * q);
    let u2 = q * q;
    Ok(TransformedCurvature {
        ric_phi_rad: u2 * (c.ric_phi_rad + (m + n - 2.0) * uj.d2 / q + iso),
        ric_phi_sph: u2 * (c.ric_phi_sph + (m + n - 2.0) * h * uj.d1 / q + iso),
        r_phi: u2 * (c.r_phi + 2.0 * (m + n - 1.0) * lap / q - (m + n) * (m + n - 1.0) * du2 / u2),
    })
}

/// Coefficient `4(m+n-1)/(m+n-2)` of the weighted conformal Laplacian;
/// its `m = ∞` limit is 4.
pub fn laplacian_coefficient(n: usize, m: DimParam) -> f64 {
    match m {
        DimParam::Infinite => 4.0,
        DimParam::Finite(m) => {
            let nf = n as f64;
            4.0 * (m + nf - 1.0) / (m + nf - 2.0)
        }
    }
}

/// `L_φ^m w` at `r`.
pub fn weighted_conformal_laplacian_at(s: &WarpedSmms, w: Jet, r: f64) -> Result<f64> {
    let c = s.curvature_at(r)?;
    Ok(-laplacian_coefficient(s.n, s.m) * weighted_laplacian(s, w, r)? + c.r_phi * w.v)
}

/// `L_φ^m w` on the interior grid nodes.
pub fn weighted_conformal_laplacian(s: &WarpedSmms, w: &RadialProfile) -> Result<Vec<f64>> {
    s.interior_nodes().into_iter().map(|r| weighted_conformal_laplacian_at(s, w.eval(r), r)).collect()
}

/// Fraction of the interval excluded next to each pole in
/// `covariance_residual`. Near a pole `K_sph = (1-ψ'²)/ψ²` divides
/// finite-difference error by `ψ² ~ h²`, which caps the order at two.
pub const POLE_GUARD: f64 = 0.05;

/// `r` as a function of the arclength coordinate `r̂` of the change by `u`.
pub fn inverse_arclength(s: &WarpedSmms, u: &RadialProfile) -> Result<RadialProfile> {
    let hat = arclength_nodes(s, u)?;
    let jets = s
        .grid()
        .iter()
        .map(|&r| {
            let j = u.eval(r);
            Jet::new(r, j.v, j.v * j.d1)
        })
        .collect();
    RadialProfile::from_jets(hat, jets)
}

/// Max over interior nodes of `|L^(w) - u^{(m+n+2)/2} L(u^{-(m+n-2)/2} w)|`.
///
/// `L^` is discretized independently: the changed model is resampled on
/// a uniform grid in its arclength coordinate and differentiated by
/// finite differences, so the residual measures discretization error and
/// should vanish under refinement. Nodes within `POLE_GUARD` of a pole
/// are skipped.
pub fn covariance_residual(s: &WarpedSmms, u: &RadialProfile, w: &RadialProfile) -> Result<f64> {
    let m = s.m.require_finite("covariance_residual")?;
    let nn = m + s.n as f64;
    let exact = conformal_change(s, u)?;
    let r_of = inverse_arclength(s, u)?;
    let (a, b) = exact.domain();
    let grid = linspace(a, b, s.grid_size);
    let h = grid[1] - grid[0];
    let psi: Vec<f64> = grid.iter().map(|&x| exact.psi.value(x)).collect();
    let dens: Vec<f64> = match &exact.density {
        Density::V(v) => grid.iter().map(|&x| v.value(x)).collect(),
        Density::Phi(p) => grid.iter().map(|&x| p.value(x)).collect(),
    };
    let back: Vec<f64> = grid.iter().map(|&x| r_of.value(x)).collect();
    let w_hat: Vec<f64> = back.iter().map(|&r| w.value(r)).collect();
    let dw = fd_first(&w_hat, h)?;
    let d2w = fd_second(&w_hat, h)?;
    let psi_p = RadialProfile::from_samples(grid.clone(), psi)?;
    let dens_p = RadialProfile::from_samples(grid.clone(), dens)?;
    let density = match exact.density {
        Density::V(_) => Density::V(dens_p),
        Density::Phi(_) => Density::Phi(dens_p),
    };
    let hat = WarpedSmms::new(s.n, psi_p, density, s.m, s.mu, s.ends, s.grid_size, "resampled")?;
    let guard = POLE_GUARD * (b - a);
    let lo = if s.ends[0] == End::Pole { a + guard } else { a };
    let hi = if s.ends[1] == End::Pole { b - guard } else { b };
    let mut worst = 0.0f64;
    for j in 1..grid.len() - 1 {
        if grid[j] < lo || grid[j] > hi {
            continue;
        }
        let lhs = weighted_conformal_laplacian_at(&hat, Jet::new(w_hat[j], dw[j], d2w[j]), grid[j])?;
        let r = back[j];
        let uj = u.eval(r);
        let inner = uj.powf(-(nn - 2.0) / 2.0).mul(w.eval(r));
        let rhs = uj.v.powf((nn + 2.0) / 2.0) * weighted_conformal_laplacian_at(s, inner, r)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// The same comparison at the images of the original nodes, with `L^`
/// taken from the exactly reparametrized model. Both sides share the
/// same jets, so this is exact up to round-off.
pub fn covariance_defect_at_nodes(s: &WarpedSmms, u: &RadialProfile, w: &RadialProfile) -> Result<f64> {
    let m = s.m.require_finite("covariance_defect_at_nodes")?;
    let nn = m + s.n as f64;
    let hat = conformal_change(s, u)?;
    let hat_nodes = arclength_nodes(s, u)?;
    let grid = s.grid();
    let mut worst = 0.0f64;
    for i in 1..grid.len() - 1 {
        let r = grid[i];
        let (uj, wj) = (u.eval(r), w.eval(r));
        let lhs = weighted_conformal_laplacian_at(&hat, reparametrize_jet(wj, uj), hat_nodes[i])?;
        let inner = uj.powf(-(nn - 2.0) / 2.0).mul(wj);
        let rhs = uj.v.powf((nn + 2.0) / 2.0) * weighted_conformal_laplacian_at(s, inner, r)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

impl WarpedSmms {
    /// Restriction to `[a, b]`; cut ends become open.
    pub fn restricted(&self, a: f64, b: f64) -> Result<WarpedSmms> {
        let (a0, b0) = self.domain();
        if !(a >= a0 && b <= b0 && a < b) {
            return Err(SmmsError::InvalidParameter(format!("[{a}, {b}] is not inside [{a0}, {b0}]")));
        }
        let ends = [if a == a0 { self.ends[0] } else { End::Open }, if b == b0 { self.ends[1] } else { End::Open }];
        let density = match &self.density {
            Density::V(v) => Density::V(v.restricted(a, b)?),
            Density::Phi(p) => Density::Phi(p.restricted(a, b)?),
        };
        WarpedSmms::new(self.n, self.psi.restricted(a, b)?, density, self.m, self.mu, ends, self.grid_size, self.label.clone())
    }
}
