//! Radial quasi-Einstein equation for `(g, 1^m dvol)` with scale
//! `u = e^{f/(m+n-2)}`:
//!
//! `Ric + ∇²f + df⊗df/(m+n-2) = µg`.
//!
//! With `g = dr² + ψ² dθ²` the spherical and radial channels give
//!
//! * `ψ'' = (n-2)(1-ψ'²)/ψ + ψ'f' - µψ`,
//! * `f'' = µ - f'²/(m+n-2) + (n-1)ψ''/ψ`.
//!
//! A smooth pole forces `ψ = r + c₃r³ + c₅r⁵ + ...`,
//! `f = f₀ + b₂r² + b₄r⁴ + ...` with `c₃ = (2b₂ - µ)/(6(n-1))`; the
//! quartic coefficients follow by matching the `r³` terms.

use ode_solvers::{Dop853, OutputType, System, Vector4};

use super::{Density, End, RadialProfile, WarpedSmms};
use crate::dim::DimParam;
use crate::error::{Result, SmmsError};
use crate::numerics::{linspace, MIN_GRID};
use crate::warped_smms::Jet;

const RTOL: f64 = 1e-14;
const ATOL: f64 = 1e-14;
/// Radius where the pole series hands over to the integrator.
const SERIES_RADIUS: f64 = 3e-3;

#[derive(Debug, Clone, Copy)]
struct QeSystem {
    n: f64,
    m: f64,
    mu: f64,
    /// Stop once `ψ` drops below this value (closing detection).
    close_at: f64,
    r_floor: f64,
}

impl QeSystem {
    fn rhs(&self, y: &Vector4<f64>) -> (f64, f64) {
        let (psi, dpsi, df) = (y[0], y[1], y[3]);
        let psi2 = (self.n - 2.0) * (1.0 - dpsi * dpsi) / psi + dpsi * df - self.mu * psi;
        let f2 = self.mu - df * df / (self.m + self.n - 2.0) + (self.n - 1.0) * psi2 / psi;
        (psi2, f2)
    }
}

impl System<f64, Vector4<f64>> for QeSystem {
    fn system(&self, _r: f64, y: &Vector4<f64>, dy: &mut Vector4<f64>) {
        let (psi2, f2) = self.rhs(y);
        dy[0] = y[1];
        dy[1] = psi2;
        dy[2] = y[3];
        dy[3] = f2;
    }

    fn solout(&mut self, r: f64, y: &Vector4<f64>, _dy: &Vector4<f64>) -> bool {
        r > self.r_floor && (y[0] < self.close_at || !y.iter().all(|x| x.is_finite()))
    }
}

/// Initial data at a smooth pole. `f2` is `f''(0)`; `f0 = f(0)` only
/// rescales the scale `u` and hence `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QeInit {
    pub n: usize,
    pub m: f64,
    pub mu: f64,
    pub f0: f64,
    pub f2: f64,
    pub r_end: f64,
    pub grid_size: usize,
    /// Required bound on the scale-equation residual of the output.
    pub tol: f64,
}

impl QeInit {
    pub fn new(n: usize, m: f64, mu: f64, f2: f64, r_end: f64) -> Self {
        QeInit { n, m, mu, f0: 0.0, f2, r_end, grid_size: super::DEFAULT_GRID, tol: 1e-7 }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(SmmsError::InvalidParameter(format!("dimension must be >= 3, got {}", self.n)));
        }
        if !(self.m > 1.0) || !self.m.is_finite() {
            return Err(SmmsError::InvalidParameter(format!("the quasi-Einstein ODE needs finite m > 1, got {}", self.m)));
        }
        if !(self.mu > 0.0) {
            return Err(SmmsError::InvalidParameter(format!("the characteristic constant must be positive, got {}", self.mu)));
        }
        if !(self.r_end > 0.0) || self.grid_size < MIN_GRID || self.grid_size % 2 == 0 {
            return Err(SmmsError::InvalidParameter("need r_end > 0 and an odd grid of >= 65 nodes".into()));
        }
        Ok(())
    }

    fn system(&self, close_at: f64, r_floor: f64) -> QeSystem {
        QeSystem { n: self.n as f64, m: self.m, mu: self.mu, close_at, r_floor }
    }

    fn c3(&self) -> f64 {
        (self.f2 - self.mu) / (6.0 * (self.n as f64 - 1.0))
    }

    fn series(&self, r: f64) -> Vector4<f64> {
        let n = self.n as f64;
        let big_m = self.m + n - 2.0;
        let c3 = self.c3();
        let b2 = 0.5 * self.f2;
        let t = c3 * (6.0 * b2 - self.mu) - 3.0 * (n - 2.0) * c3 * c3;
        let b4 = n / (4.0 * (n + 2.0)) * (-4.0 * b2 * b2 / big_m - 6.0 * (n - 1.0) * c3 * c3 + 2.0 * (n - 1.0) / n * t);
        let c5 = (t + 4.0 * b4) / (10.0 * n);
        let (r2, r3) = (r * r, r * r * r);
        Vector4::new(
            r + c3 * r3 + c5 * r3 * r2,
            1.0 + 3.0 * c3 * r2 + 5.0 * c5 * r2 * r2,
            self.f0 + b2 * r2 + b4 * r2 * r2,
            2.0 * b2 * r + 4.0 * b4 * r3,
        )
    }

    /// Quasi-Einstein constant of the scale, read off at the pole.
    pub fn lambda(&self) -> f64 {
        let n = self.n as f64;
        let u0 = (self.f0 / (self.m + n - 2.0)).exp();
        u0 * u0 * (-6.0 * self.c3() * (n - 1.0) + (self.m + 2.0 * n - 2.0) * self.f2 / (self.m + n - 2.0))
    }
}

/// A solved model together with its scale.
#[derive(Debug, Clone)]
pub struct QeSolution {
    pub model: WarpedSmms,
    pub f: RadialProfile,
    pub u: RadialProfile,
    pub lambda: f64,
    pub f2: f64,
    /// First zero of `ψ` when the solution was shot to close up.
    pub closing_radius: Option<f64>,
}

fn step(sys: QeSystem, a: f64, b: f64, y: Vector4<f64>) -> Result<Vector4<f64>> {
    let mut s = Dop853::from_param(
        sys,
        a,
        b,
        b - a,
        y,
        RTOL,
        ATOL,
        0.9,
        0.0,
        0.333,
        6.0,
        b - a,
        0.0,
        100_000,
        1000,
        OutputType::Sparse,
    );
    s.integrate().map_err(|e| SmmsError::Integration(format!("{e:?}")))?;
    let (x, ys) = s.results().get();
    let last = *ys.last().ok_or_else(|| SmmsError::Integration("no output".into()))?;
    let xl = *x.last().unwrap();
    if (xl - b).abs() > 1e-9 * b.abs().max(1.0) || !last.iter().all(|v| v.is_finite()) || last[0] <= 0.0 {
        return Err(SmmsError::Integration(format!("solution blew up or closed before r = {b}")));
    }
    Ok(last)
}

/// Integrate from the pole to `r_end`, node by node on a uniform grid.
pub fn solve_qe_ode(init: QeInit) -> Result<QeSolution> {
    init.validate()?;
    let nodes = linspace(0.0, init.r_end, init.grid_size);
    let sys = init.system(0.0, f64::INFINITY);
    // Below SERIES_RADIUS the truncated series is exact to rounding; above
    // it integration starts where the 1/r terms are still well conditioned.
    let r0 = SERIES_RADIUS.min(init.r_end / 4.0);
    let mut states = vec![Vector4::new(0.0, 1.0, init.f0, 0.0)];
    let (mut at, mut y) = (r0, init.series(r0));
    for &r in &nodes[1..] {
        if r <= r0 {
            states.push(init.series(r));
        } else {
            y = step(sys, at, r, y)?;
            at = r;
            states.push(y);
        }
    }
    build_solution(init, nodes, &states, None)
}

fn build_solution(init: QeInit, nodes: Vec<f64>, states: &[Vector4<f64>], closing: Option<f64>) -> Result<QeSolution> {
    let sys = init.system(0.0, f64::INFINITY);
    let mut psi = Vec::with_capacity(states.len());
    let mut f = Vec::with_capacity(states.len());
    for (i, y) in states.iter().enumerate() {
        let (psi2, f2) = if i == 0 { (0.0, init.f2) } else { sys.rhs(y) };
        psi.push(Jet::new(y[0], y[1], psi2));
        f.push(Jet::new(y[2], y[3], f2));
    }
    let r_end = *nodes.last().unwrap();
    let psi = RadialProfile::from_jets(nodes.clone(), psi)?;
    let f = RadialProfile::from_jets(nodes, f)?;
    let scale = 1.0 / (init.m + init.n as f64 - 2.0);
    let u = f.map(move |j| j.scale(scale).exp());
    let density = Density::V(RadialProfile::constant(0.0, r_end, 1.0));
    let model = WarpedSmms::new(
        init.n,
        psi,
        density,
        DimParam::finite(init.m)?,
        Some(init.mu),
        [End::Pole, End::Open],
        init.grid_size,
        "qe-ode",
    )?;
    let lambda = init.lambda();
    let res = model.qe_scale_residual(&u, lambda)?;
    if !(res.max() < init.tol) {
        return Err(SmmsError::NotConverged(format!("scale residual {:e} exceeds {:e}", res.max(), init.tol)));
    }
    Ok(QeSolution { model, f, u, lambda, f2: init.f2, closing_radius: closing })
}

/// Outcome of one shot: where `ψ` (nearly) closed and `f'` there.
#[derive(Debug, Clone, Copy)]
struct Shot {
    r: f64,
    df: f64,
    closed: bool,
}

fn shoot(init: QeInit, r_max: f64) -> Result<Shot> {
    let close_at = 1e-3 * init.r_end.max(1.0);
    let r0 = 1e-3;
    let sys = init.system(close_at, 10.0 * r0);
    let mut s = Dop853::from_param(
        sys,
        r0,
        r_max,
        r_max,
        init.series(r0),
        RTOL,
        ATOL,
        0.9,
        0.0,
        0.333,
        6.0,
        0.05,
        0.0,
        200_000,
        1000,
        OutputType::Sparse,
    );
    // Integration errors near a blow-up still leave usable output.
    let _ = s.integrate();
    let (x, ys) = s.results().get();
    let (r, y) = x.iter().zip(ys).filter(|(_, y)| y.iter().all(|v| v.is_finite())).last().ok_or_else(|| SmmsError::Integration("empty shot".into()))?;
    Ok(Shot { r: *r, df: y[3], closed: y[0] < close_at })
}

/// Bisection on `f''(0)` for a solution that closes up smoothly, i.e.
/// `f'` vanishes where `ψ` returns to zero. The bracket must produce
/// defects of opposite sign. The returned solution covers `[0, r_end]`
/// with `r_end` the fraction `keep` of the closing radius.
pub fn shoot_closed_qe(init: QeInit, bracket: (f64, f64), r_max: f64, keep: f64) -> Result<QeSolution> {
    init.validate()?;
    let defect = |f2: f64| -> Result<(f64, Shot)> {
        let s = shoot(QeInit { f2, ..init }, r_max)?;
        Ok((if s.closed { s.df } else { s.df.signum() * f64::MAX.sqrt() }, s))
    };
    let (mut lo, mut hi) = bracket;
    let (mut d_lo, _) = defect(lo)?;
    let (d_hi, _) = defect(hi)?;
    if d_lo == 0.0 {
        hi = lo;
    } else if d_hi == 0.0 {
        lo = hi;
    } else if d_lo.signum() == d_hi.signum() {
        return Err(SmmsError::NotConverged(format!("shooting bracket [{lo}, {hi}] does not change sign")));
    }
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-13 * (1.0 + lo.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (d, _) = defect(mid)?;
        if d == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if d.signum() == d_lo.signum() {
            lo = mid;
            d_lo = d;
        } else {
            hi = mid;
        }
    }
    let f2 = 0.5 * (lo + hi);
    let (_, shot) = defect(f2)?;
    if !shot.closed {
        return Err(SmmsError::NotConverged("shooting did not produce a closed solution".into()));
    }
    let r_close = shot.r;
    let mut sol = solve_qe_ode(QeInit { f2, r_end: keep * r_close, ..init })?;
    sol.closing_radius = Some(r_close);
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warped_smms::{gaussian_radius, hyperbolic_scale};

    #[test]
    fn recovers_hyperbolic_model() {
        let (n, m) = (4usize, 3.0);
        let k = gaussian_radius(n, m);
        let mu = (m - 1.0) / (k * k);
        let f2 = (m + n as f64 - 2.0) / (k * k);
        let sol = solve_qe_ode(QeInit::new(n, m, mu, f2, 3.0)).unwrap();
        let scale = hyperbolic_scale(n, m, 3.0);
        let mut err_psi = 0.0f64;
        let mut err_u = 0.0f64;
        for r in sol.model.grid() {
            err_psi = err_psi.max((sol.model.psi.value(r) - k * (r / k).sinh()).abs());
            err_u = err_u.max((sol.u.value(r) - scale.value(r)).abs());
        }
        assert!(err_psi < 1e-8, "{err_psi}");
        assert!(err_u < 1e-8, "{err_u}");
        assert!((sol.lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(solve_qe_ode(QeInit::new(4, 1.0, 0.5, 0.0, 1.0)), Err(SmmsError::InvalidParameter(_))));
        assert!(matches!(solve_qe_ode(QeInit::new(4, 3.0, -0.5, 0.0, 1.0)), Err(SmmsError::InvalidParameter(_))));
    }

    #[test]
    fn shooting_finds_einstein_sphere() {
        let (n, m, mu) = (4usize, 3.0, 0.5);
        let init = QeInit::new(n, m, mu, 0.0, 1.0);
        let sol = shoot_closed_qe(init, (-0.3, 0.2), 20.0, 0.9).unwrap();
        let k = ((n as f64 - 1.0) / mu).sqrt();
        assert!(sol.f2.abs() < 1e-8, "f2 = {}", sol.f2);
        assert!((sol.closing_radius.unwrap() - k * std::f64::consts::PI).abs() < 1e-2);
        for r in sol.model.grid() {
            assert!((sol.model.psi.value(r) - k * (r / k).sin()).abs() < 1e-7);
        }
        assert!(sol.lambda > 0.0 && mu > 0.0);
    }
}
