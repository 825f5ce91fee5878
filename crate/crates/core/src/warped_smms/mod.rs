//! Rotationally symmetric smooth metric measure spaces
//! `dr² + ψ(r)² dθ²` over the round `S^{n-1}`, with radial density.
//!
//! Warped-product curvature, with `h = ψ'/ψ`:
//!
//! * `K_rad = -ψ''/ψ`, `K_sph = (1 - ψ'²)/ψ²`;
//! * `Ric = diag((n-1)K_rad, K_rad + (n-2)K_sph)`;
//! * `∇²F = diag(F'', h F')` for radial `F`.
//!
//! These are validated against the constant-curvature families in tests.

mod ode;
mod profile;

use serde::{Deserialize, Serialize};

use crate::dim::DimParam;
use crate::error::{Result, SmmsError};
use crate::numerics::{linspace, simpson_weights, sphere_area, MIN_GRID};

pub use ode::{shoot_closed_qe, solve_qe_ode, QeInit, QeSolution};
pub use profile::{Jet, RadialProfile};

/// Default number of grid nodes.
pub const DEFAULT_GRID: usize = 513;

/// Warp values at or below this are treated as a pole.
pub const SINGULAR_PSI: f64 = 1e-12;

/// How the manifold ends at an endpoint of the radial interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum End {
    /// Smooth pole: `ψ = 0`, `|ψ'| = 1`.
    Pole,
    /// Boundary or truncation of a noncompact model.
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Closed,
    Open,
}

/// The measure density, stored either as `v` or as `φ = -m log v`.
#[derive(Debug, Clone)]
pub enum Density {
    V(RadialProfile),
    Phi(RadialProfile),
}

#[derive(Debug, Clone)]
pub struct WarpedSmms {
    pub n: usize,
    pub psi: RadialProfile,
    pub density: Density,
    pub m: DimParam,
    pub mu: Option<f64>,
    pub ends: [End; 2],
    pub grid_size: usize,
    pub label: String,
}

/// Curvature data at one radius. Spherical entries are the eigenvalue on
/// the `n-1` directions tangent to the orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvaturePoint {
    pub r: f64,
    pub k_rad: f64,
    pub k_sph: f64,
    pub ric_rad: f64,
    pub ric_sph: f64,
    pub scalar: f64,
    pub ric_phi_rad: f64,
    pub ric_phi_sph: f64,
    pub r_phi: f64,
}

/// Residuals of the three scale equations (trace-free, λ and µ parts).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleResidual {
    pub trace_free: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl ScaleResidual {
    pub fn max(&self) -> f64 {
        self.trace_free.max(self.lambda).max(self.mu)
    }
}

/// Logarithmic derivatives `v'/v`, `v''/v` of the density.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DensityRatios {
    pub a1: f64,
    pub a2: f64,
}

impl WarpedSmms {
    /// Validates dimension, grid size and positivity of `ψ` and `v` at the
    /// interior grid nodes.
    pub fn new(
        n: usize,
        psi: RadialProfile,
        density: Density,
        m: DimParam,
        mu: Option<f64>,
        ends: [End; 2],
        grid_size: usize,
        label: impl Into<String>,
    ) -> Result<Self> {
        if n < 3 {
            return Err(SmmsError::InvalidParameter(format!("dimension must be >= 3, got {n}")));
        }
        if grid_size < MIN_GRID || grid_size % 2 == 0 {
            return Err(SmmsError::InvalidParameter(format!("grid size must be odd and >= {MIN_GRID}, got {grid_size}")));
        }
        if m.is_infinite() && matches!(density, Density::V(_)) {
            return Err(SmmsError::InvalidParameter("m = inf requires the density as phi".into()));
        }
        let s = WarpedSmms { n, psi, density, m, mu, ends, grid_size, label: label.into() };
        for r in s.interior_nodes() {
            let p = s.psi.value(r);
            if !(p > 0.0) {
                return Err(SmmsError::NotPositive(format!("warp function at r = {r} is {p}")));
            }
            if let Density::V(v) = &s.density {
                let val = v.value(r);
                if !(val > 0.0) {
                    return Err(SmmsError::NotPositive(format!("density v at r = {r} is {val}")));
                }
            }
        }
        Ok(s)
    }

    pub fn domain(&self) -> (f64, f64) {
        self.psi.domain()
    }

    pub fn boundary(&self) -> Boundary {
        if self.ends == [End::Pole, End::Pole] {
            Boundary::Closed
        } else {
            Boundary::Open
        }
    }

    pub fn step(&self) -> f64 {
        let (a, b) = self.domain();
        (b - a) / (self.grid_size - 1) as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let (a, b) = self.domain();
        linspace(a, b, self.grid_size)
    }

    /// Grid nodes strictly inside the interval.
    pub fn interior_nodes(&self) -> Vec<f64> {
        let g = self.grid();
        g[1..g.len() - 1].to_vec()
    }

    pub fn with_grid(&self, grid_size: usize) -> Result<Self> {
        Self::new(self.n, self.psi.clone(), self.density.clone(), self.m, self.mu, self.ends, grid_size, self.label.clone())
    }

    pub fn with_mu(&self, mu: Option<f64>) -> Self {
        WarpedSmms { mu, ..self.clone() }
    }

    /// Density `v` at `r`. For `m = 0` the measure is the Riemannian one and
    /// `v ≡ 1`.
    pub fn v_jet(&self, r: f64) -> Result<Jet> {
        let m = self.m.require_finite("the density v")?;
        match &self.density {
            Density::V(v) => Ok(v.eval(r)),
            Density::Phi(_) if m == 0.0 => Ok(Jet::constant(1.0)),
            Density::Phi(phi) => Ok(phi.eval(r).scale(-1.0 / m).exp()),
        }
    }

    /// `φ = -m log v`.
    pub fn phi_jet(&self, r: f64) -> Result<Jet> {
        match &self.density {
            Density::Phi(phi) => Ok(phi.eval(r)),
            Density::V(v) => {
                let m = self.m.require_finite("phi from v")?;
                Ok(v.eval(r).ln().scale(-m))
            }
        }
    }

    pub(crate) fn density_ratios(&self, r: f64) -> Result<DensityRatios> {
        let m = self.m.require_finite("density ratios")?;
        match &self.density {
            Density::V(v) => {
                let j = v.eval(r);
                if !(j.v > 0.0) {
                    return Err(SmmsError::SingularPoint(r));
                }
                Ok(DensityRatios { a1: j.d1 / j.v, a2: j.d2 / j.v })
            }
            Density::Phi(_) if m == 0.0 => Ok(DensityRatios { a1: 0.0, a2: 0.0 }),
            Density::Phi(phi) => {
                let j = phi.eval(r);
                let a1 = -j.d1 / m;
                Ok(DensityRatios { a1, a2: a1 * a1 - j.d2 / m })
            }
        }
    }

    pub fn curvature_at(&self, r: f64) -> Result<CurvaturePoint> {
        let (a, b) = self.domain();
        if !(r >= a && r <= b) {
            return Err(SmmsError::InvalidParameter(format!("r = {r} outside [{a}, {b}]")));
        }
        let p = self.psi.eval(r);
        if !(p.v > SINGULAR_PSI) {
            return Err(SmmsError::SingularPoint(r));
        }
        let n = self.n as f64;
        let h = p.d1 / p.v;
        let k_rad = -p.d2 / p.v;
        let k_sph = (1.0 - p.d1 * p.d1) / (p.v * p.v);
        let ric_rad = (n - 1.0) * k_rad;
        let ric_sph = k_rad + (n - 2.0) * k_sph;
        let scalar = (n - 1.0) * (2.0 * k_rad + (n - 2.0) * k_sph);
        let (ric_phi_rad, ric_phi_sph, r_phi) = match self.m {
            DimParam::Infinite => {
                let f = self.phi_jet(r)?;
                let lap = f.d2 + (n - 1.0) * h * f.d1;
                (ric_rad + f.d2, ric_sph + h * f.d1, scalar + 2.0 * lap - f.d1 * f.d1)
            }
            DimParam::Finite(m) => {
                let d = self.density_ratios(r)?;
                (
                    ric_rad - m * d.a2,
                    ric_sph - m * h * d.a1,
                    scalar - 2.0 * m * (d.a2 + (n - 1.0) * h * d.a1) - m * (m - 1.0) * d.a1 * d.a1,
                )
            }
        };
        Ok(CurvaturePoint { r, k_rad, k_sph, ric_rad, ric_sph, scalar, ric_phi_rad, ric_phi_sph, r_phi })
    }

    /// Max over interior nodes of `|Ric_φ^m - λ|` per channel.
    pub fn qe_residual(&self, lambda: f64) -> Result<(f64, f64)> {
        let mut out = (0.0f64, 0.0f64);
        for r in self.interior_nodes() {
            let c = self.curvature_at(r)?;
            out.0 = out.0.max((c.ric_phi_rad - lambda).abs());
            out.1 = out.1.max((c.ric_phi_sph - lambda).abs());
        }
        Ok(out)
    }

    /// Characteristic constant read off pointwise from the Bianchi-type
    /// identity `R_φ^m + mµv⁻² = (m+n)λ`. At `m = ∞` this is the constant
    /// `µ'` of `R_φ^∞ + 2λ(φ - n) = -µ'`.
    pub fn kim_kim_mu(&self, lambda: f64, r: f64) -> Result<f64> {
        let c = self.curvature_at(r)?;
        let n = self.n as f64;
        match self.m {
            DimParam::Infinite => {
                let phi = self.phi_jet(r)?.v;
                Ok(-(c.r_phi + 2.0 * lambda * (phi - n)))
            }
            DimParam::Finite(m) => {
                if m <= 0.0 {
                    return Err(SmmsError::InvalidParameter("the characteristic constant needs m > 0".into()));
                }
                let v = self.v_jet(r)?.v;
                Ok(((m + n) * lambda - c.r_phi) * v * v / m)
            }
        }
    }

    /// Residuals of the scale equations for `u` with quasi-Einstein
    /// constant `λ`, using the model's characteristic constant.
    pub fn qe_scale_residual(&self, u: &RadialProfile, lambda: f64) -> Result<ScaleResidual> {
        let mu = self.mu.ok_or_else(|| SmmsError::InvalidParameter("scale residual needs a characteristic constant".into()))?;
        let m = self.m.require_finite("the scale equations")?;
        let n = self.n as f64;
        let mut res = ScaleResidual { trace_free: 0.0, lambda: 0.0, mu: 0.0 };
        for r in self.interior_nodes() {
            let c = self.curvature_at(r)?;
            let p = self.psi.eval(r);
            let h = p.d1 / p.v;
            let uj = u.eval(r);
            let vj = self.v_jet(r)?;
            let (uu, vv) = (uj.v, vj.v);
            let lap_u = uj.d2 + (n - 1.0) * h * uj.d1;
            let lap_v = vj.d2 + (n - 1.0) * h * vj.d1;
            let du2 = uj.d1 * uj.d1;
            let dv2 = vj.d1 * vj.d1;
            let duv = uj.d1 * vj.d1;
            // Trace-free part of a diagonal form diag(a, b, ..., b) is
            // proportional to a - b.
            let t_rad = uu * vv * c.ric_rad + (m + n - 2.0) * vv * uj.d2 - m * uu * vj.d2;
            let t_sph = uu * vv * c.ric_sph + (m + n - 2.0) * vv * h * uj.d1 - m * uu * h * vj.d1;
            let uv2 = (uu * vv).powi(2);
            let lam = uv2 * c.scalar + (m + 2.0 * n - 2.0) * uu * vv * vv * lap_u - m * uu * uu * vv * lap_v
                - (m + n - 1.0) * n * vv * vv * du2
                + m * n * uu * vv * duv;
            let muq = uv2 * c.scalar + (m + n - 2.0) * uu * vv * vv * lap_u - (m - n) * uu * uu * vv * lap_v
                - (m + n - 2.0) * n * uu * vv * duv
                + (m - 1.0) * n * uu * uu * dv2;
            res.trace_free = res.trace_free.max((t_rad - t_sph).abs());
            res.lambda = res.lambda.max((lam - n * lambda * vv * vv).abs());
            res.mu = res.mu.max((muq - n * mu * uu * uu).abs());
        }
        Ok(res)
    }

    /// Quadrature weights for `∫ F dvol_g`: Simpson weights times
    /// `ω_{n-1} ψ^{n-1}`. Zero at poles.
    pub fn volume_weights(&self) -> Vec<f64> {
        let w = simpson_weights(self.grid_size, self.step()).expect("grid size validated at construction");
        let omega = sphere_area(self.n - 1);
        self.grid()
            .iter()
            .zip(w)
            .map(|(&r, w)| {
                let p = self.psi.value(r);
                // Round-off leaves |ψ| ~ 1e-16 at a pole; treat it as the zero it is.
                if p <= SINGULAR_PSI {
                    0.0
                } else {
                    w * omega * p.powi(self.n as i32 - 1)
                }
            })
            .collect()
    }

    /// Density power `v^{m+offset}` at `r`, or `e^{-φ}` at `m = ∞`.
    pub fn density_power(&self, r: f64, offset: f64) -> Result<f64> {
        match self.m {
            DimParam::Infinite => {
                if offset != 0.0 {
                    return Err(SmmsError::InvalidParameter("density offsets need finite m".into()));
                }
                Ok((-self.phi_jet(r)?.v).exp())
            }
            DimParam::Finite(m) => {
                let e = m + offset;
                if e == 0.0 {
                    return Ok(1.0);
                }
                match &self.density {
                    Density::Phi(phi) if m > 0.0 => Ok((-phi.value(r) * e / m).exp()),
                    _ => Ok(self.v_jet(r)?.v.powf(e)),
                }
            }
        }
    }

    /// Per-node quadrature weights for `∫ F v^{m+offset} dvol_g`. Endpoint
    /// values that blow up (where `v` vanishes) are dropped; interior
    /// singularities are an error.
    pub fn measure_weights(&self, offset: f64) -> Result<Vec<f64>> {
        let grid = self.grid();
        let last = grid.len() - 1;
        let base = self.volume_weights();
        let mut out = Vec::with_capacity(grid.len());
        for (i, (&r, &w)) in grid.iter().zip(&base).enumerate() {
            if w == 0.0 {
                out.push(0.0);
                continue;
            }
            let d = self.density_power(r, offset)?;
            if !d.is_finite() {
                if i == 0 || i == last {
                    out.push(0.0);
                    continue;
                }
                return Err(SmmsError::SingularPoint(r));
            }
            out.push(w * d);
        }
        Ok(out)
    }

    /// `ω_{n-1} ∫ v^{m+offset} ψ^{n-1} dr`.
    pub fn weighted_volume(&self, offset: f64) -> Result<f64> {
        Ok(self.measure_weights(offset)?.iter().sum())
    }

    /// Riemannian volume.
    pub fn volume(&self) -> f64 {
        self.volume_weights().iter().sum()
    }

    /// Integral of `F(r)` against `v^{m+offset} dvol_g`.
    pub fn integrate(&self, offset: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
        let w = self.measure_weights(offset)?;
        Ok(self.grid().iter().zip(&w).map(|(&r, &w)| if w == 0.0 { 0.0 } else { w * f(r) }).sum())
    }
}

// ---- Built-in families ----

fn require_dim(n: usize) -> Result<f64> {
    if n < 3 {
        Err(SmmsError::InvalidParameter(format!("dimension must be >= 3, got {n}")))
    } else {
        Ok(n as f64)
    }
}

/// Radius `√(m+n-1)` shared by the Gaussian and hyperbolic families.
pub fn gaussian_radius(n: usize, m: f64) -> f64 {
    (m + n as f64 - 1.0).sqrt()
}

/// Positive elliptic m-Gaussian: the hemisphere of radius `k = √(m+n-1)`
/// with density `v = cos(r/k)`; at `m = ∞` flat space with `φ = r²/2` on
/// `[0, r_max]`.
pub fn gaussian(n: usize, m: DimParam, grid_size: usize, r_max: Option<f64>) -> Result<WarpedSmms> {
    let nf = require_dim(n)?;
    match m {
        DimParam::Infinite => {
            let r_max = r_max.unwrap_or(12.0);
            let psi = RadialProfile::closed(0.0, r_max, |r| Jet::new(r, 1.0, 0.0));
            let phi = RadialProfile::closed(0.0, r_max, |r| Jet::new(0.5 * r * r, r, 1.0));
            WarpedSmms::new(n, psi, Density::Phi(phi), m, Some(1.0), [End::Pole, End::Open], grid_size, "gaussian")
        }
        DimParam::Finite(mf) => {
            let k = gaussian_radius(n, mf);
            let b = k * std::f64::consts::FRAC_PI_2;
            let psi = RadialProfile::closed(0.0, b, move |r| {
                let (s, c) = (r / k).sin_cos();
                Jet::new(k * s, c, -s / k)
            });
            let v = RadialProfile::closed(0.0, b, move |r| {
                let (s, c) = (r / k).sin_cos();
                Jet::new(c, -s / k, -c / (k * k))
            });
            let mu = (mf - 1.0) / (mf + nf - 1.0);
            WarpedSmms::new(n, psi, Density::V(v), m, Some(mu), [End::Pole, End::Open], grid_size, "gaussian")
        }
    }
}

/// Density choices for the round sphere family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SphereDensity {
    Constant,
    /// `v = exp(a cos(r/k))`.
    ExpCos(f64),
    /// `φ = a cos(r/k)`, valid for every `m`.
    PhiCos(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereParams {
    pub radius: f64,
    pub density: SphereDensity,
    /// `ψ = k(s + ε s³)` with `s = sin(r/k)`; zero gives the round metric.
    pub squash: f64,
    pub mu: Option<f64>,
}

impl SphereParams {
    pub fn round(radius: f64) -> Self {
        SphereParams { radius, density: SphereDensity::Constant, squash: 0.0, mu: None }
    }
}

/// Sphere of radius `k` (possibly squashed) with a radial density. With
/// constant density the default characteristic constant is `(n-1)/k²`,
/// making it a trivial quasi-Einstein space.
pub fn sphere(n: usize, m: DimParam, params: SphereParams, grid_size: usize) -> Result<WarpedSmms> {
    let nf = require_dim(n)?;
    let k = params.radius;
    if !(k > 0.0) {
        return Err(SmmsError::InvalidParameter(format!("sphere radius must be positive, got {k}")));
    }
    let eps = params.squash;
    if !(eps > -1.0 / 3.0) {
        return Err(SmmsError::InvalidParameter(format!("squash must exceed -1/3, got {eps}")));
    }
    let b = k * std::f64::consts::PI;
    let psi = RadialProfile::closed(0.0, b, move |r| {
        let (s, c) = (r / k).sin_cos();
        Jet::new(k * (s + eps * s.powi(3)), c * (1.0 + 3.0 * eps * s * s), (-s - eps * (3.0 * s.powi(3) - 6.0 * s * c * c)) / k)
    });
    let density = match params.density {
        SphereDensity::Constant => {
            if m.is_infinite() {
                Density::Phi(RadialProfile::constant(0.0, b, 0.0))
            } else {
                Density::V(RadialProfile::constant(0.0, b, 1.0))
            }
        }
        SphereDensity::ExpCos(a) => {
            if m.is_infinite() {
                return Err(SmmsError::InvalidParameter("exp-cos density v needs finite m; use phi".into()));
            }
            Density::V(RadialProfile::closed(0.0, b, move |r| {
                let (s, c) = (r / k).sin_cos();
                let e = (a * c).exp();
                let d1 = -a * s / k;
                Jet::new(e, e * d1, e * (d1 * d1 - a * c / (k * k)))
            }))
        }
        SphereDensity::PhiCos(a) => Density::Phi(RadialProfile::closed(0.0, b, move |r| {
            let (s, c) = (r / k).sin_cos();
            Jet::new(a * c, -a * s / k, -a * c / (k * k))
        })),
    };
    let mu = params.mu.or(if params.density == SphereDensity::Constant && eps == 0.0 {
        Some((nf - 1.0) / (k * k))
    } else {
        None
    });
    WarpedSmms::new(n, psi, density, m, mu, [End::Pole, End::Pole], grid_size, "sphere")
}

/// Hyperbolic space of curvature `-1/k²`, `k = √(m+n-1)`, with `v ≡ 1` and
/// characteristic constant `(m-1)/k²`, truncated at `r_max`. The scale
/// `cosh(r/k)` turns it into the m-Gaussian.
pub fn hyperbolic_gaussian(n: usize, m: f64, grid_size: usize, r_max: f64) -> Result<WarpedSmms> {
    let nf = require_dim(n)?;
    let k = gaussian_radius(n, m);
    let psi = RadialProfile::closed(0.0, r_max, move |r| {
        let (s, c) = ((r / k).sinh(), (r / k).cosh());
        Jet::new(k * s, c, s / k)
    });
    let v = RadialProfile::constant(0.0, r_max, 1.0);
    let mu = (m - 1.0) / (m + nf - 1.0);
    WarpedSmms::new(n, psi, Density::V(v), DimParam::finite(m)?, Some(mu), [End::Pole, End::Open], grid_size, "hyperbolic-gaussian")
}

/// Quasi-Einstein scale `u = cosh(r/k)` of the hyperbolic family.
pub fn hyperbolic_scale(n: usize, m: f64, r_max: f64) -> RadialProfile {
    let k = gaussian_radius(n, m);
    RadialProfile::closed(0.0, r_max, move |r| {
        let (s, c) = ((r / k).sinh(), (r / k).cosh());
        Jet::new(c, s / k, c / (k * k))
    })
}

/// Flat space with constant density on the ball of radius `r_max`.
pub fn euclidean(n: usize, m: DimParam, grid_size: usize, r_max: f64) -> Result<WarpedSmms> {
    require_dim(n)?;
    let psi = RadialProfile::closed(0.0, r_max, |r| Jet::new(r, 1.0, 0.0));
    let density = if m.is_infinite() {
        Density::Phi(RadialProfile::constant(0.0, r_max, 0.0))
    } else {
        Density::V(RadialProfile::constant(0.0, r_max, 1.0))
    };
    WarpedSmms::new(n, psi, density, m, None, [End::Pole, End::Open], grid_size, "euclidean")
}

/// Model from uniformly sampled `ψ` and `v` (or `φ` at `m = ∞`).
pub fn custom_grid(n: usize, m: DimParam, r: Vec<f64>, psi: Vec<f64>, density: Vec<f64>, mu: Option<f64>) -> Result<WarpedSmms> {
    let len = r.len();
    let psi_p = RadialProfile::from_samples(r.clone(), psi.clone())?;
    let dens = RadialProfile::from_samples(r, density)?;
    let density = if m.is_infinite() { Density::Phi(dens) } else { Density::V(dens) };
    let tol = 1e-10;
    let ends = [
        if psi[0].abs() < tol { End::Pole } else { End::Open },
        if psi[len - 1].abs() < tol { End::Pole } else { End::Open },
    ];
    WarpedSmms::new(n, psi_p, density, m, mu, ends, len, "custom-grid")
}

// ---- Configuration ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Gaussian,
    Sphere,
    HyperbolicGaussian,
    Euclidean,
    CustomGrid,
}

impl std::str::FromStr for Family {
    type Err = SmmsError;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| SmmsError::InvalidParameter(format!("unknown family {s:?}")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_amp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_amp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub squash: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Vec<f64>>,
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

/// JSON model definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: Family,
    pub n: usize,
    pub m: DimParam,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

impl ModelConfig {
    pub fn build(&self) -> Result<WarpedSmms> {
        let p = &self.params;
        let model = match self.family {
            Family::Gaussian => gaussian(self.n, self.m, self.grid, p.r_max)?,
            Family::Sphere => {
                let radius = p.radius.unwrap_or_else(|| gaussian_radius(self.n, if self.m.is_infinite() { 0.0 } else { self.m.value() }));
                let density = match (p.v_amp, p.phi_amp) {
                    (Some(_), Some(_)) => return Err(SmmsError::InvalidParameter("give at most one of v_amp and phi_amp".into())),
                    (Some(a), None) => SphereDensity::ExpCos(a),
                    (None, Some(a)) => SphereDensity::PhiCos(a),
                    (None, None) => SphereDensity::Constant,
                };
                sphere(self.n, self.m, SphereParams { radius, density, squash: p.squash.unwrap_or(0.0), mu: p.mu }, self.grid)?
            }
            Family::HyperbolicGaussian => {
                let m = self.m.require_finite("hyperbolic-gaussian")?;
                hyperbolic_gaussian(self.n, m, self.grid, p.r_max.unwrap_or(3.0))?
            }
            Family::Euclidean => euclidean(self.n, self.m, self.grid, p.r_max.unwrap_or(1.0))?,
            Family::CustomGrid => {
                let (r, psi, d) = match (&p.r, &p.psi, &p.density) {
                    (Some(r), Some(psi), Some(d)) => (r.clone(), psi.clone(), d.clone()),
                    _ => return Err(SmmsError::InvalidParameter("custom-grid needs params r, psi and density".into())),
                };
                custom_grid(self.n, self.m, r, psi, d, p.mu)?
            }
        };
        Ok(match p.mu {
            Some(mu) => model.with_mu(Some(mu)),
            None => model,
        })
    }
}

/// One row of the profile export.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileRow {
    pub r: f64,
    pub psi: f64,
    pub v: f64,
    pub f: f64,
    pub k_rad: f64,
    pub k_sph: f64,
    pub scalar: f64,
    pub r_phi: f64,
}

pub const PROFILE_HEADER: &str = "r,psi,v,f,K_rad,K_sph,R,R_phi";

impl WarpedSmms {
    /// Profile rows on the interior grid; `f` is the density potential
    /// `φ`, and `v` is NaN at `m = ∞`.
    pub fn profile_rows(&self) -> Result<Vec<ProfileRow>> {
        self.interior_nodes()
            .into_iter()
            .map(|r| {
                let c = self.curvature_at(r)?;
                let v = if self.m.is_infinite() { f64::NAN } else { self.v_jet(r)?.v };
                let f = if self.m == DimParam::Finite(0.0) { 0.0 } else { self.phi_jet(r)?.v };
                Ok(ProfileRow { r, psi: self.psi.value(r), v, f, k_rad: c.k_rad, k_sph: c.k_sph, scalar: c.scalar, r_phi: c.r_phi })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests;
