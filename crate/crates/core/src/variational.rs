//! Energy functionals of radial models: the `(m,µ)`-energy functional, the
//! weighted Yamabe quotient, the `m`-energy with its `τ` optimization, the
//! renormalized energy and the first eigenvalue of the weighted conformal
//! Laplacian.
//!
//! Minimization works on a finite-volume discretization of radial test
//! functions. Node `i` owns the cell `[r_{i-1/2}, r_{i+1/2}]` clipped to the
//! domain, cell integrals use two-point Gauss rules on each half cell and
//! the Dirichlet form uses the density at cell faces. The resulting strong
//! residual `(Kw)_i / W_i` is a second-order approximation of
//! `-c Δ_φ w`, including at a pole.

use std::f64::consts::{E, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conformal::{laplacian_coefficient, transformed_curvature, POLE_GUARD};
use crate::dim::DimParam;
use crate::error::{Result, SmmsError};
use crate::numerics::solve_tridiagonal;
use crate::warped_smms::{End, Jet, RadialProfile, WarpedSmms};

/// `p = 2(m+n)/(m+n-2)`.
pub fn sobolev_exponent(n: usize, m: f64) -> f64 {
    let d = m + n as f64;
    2.0 * d / (d - 2.0)
}

/// `q = 2(m+n)/n`.
pub fn quotient_exponent(n: usize, m: f64) -> f64 {
    2.0 * (m + n as f64) / n as f64
}

/// Integral of a fallible integrand against `v^{m+offset} dvol`; nodes with
/// zero weight (poles, dropped endpoints) are never evaluated.
pub(crate) fn integrate_with(s: &WarpedSmms, offset: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let w = s.measure_weights(offset)?;
    let mut acc = 0.0;
    for (&r, &w) in s.grid().iter().zip(&w) {
        if w != 0.0 {
            acc += w * f(r)?;
        }
    }
    Ok(acc)
}

/// `W_µ^m`: `∫(R_φ + mµv⁻²)v^m dvol` for finite `m`, and
/// `∫(R_φ + 2µ(φ-n))e^{-φ} dvol` at `m = ∞`.
pub fn energy_functional(s: &WarpedSmms, mu: f64) -> Result<f64> {
    match s.m {
        DimParam::Finite(m) => {
            let scal = integrate_with(s, 0.0, |r| Ok(s.curvature_at(r)?.r_phi))?;
            let pot = if m == 0.0 { 0.0 } else { m * mu * s.weighted_volume(-2.0)? };
            Ok(scal + pot)
        }
        DimParam::Infinite => {
            let n = s.n as f64;
            integrate_with(s, 0.0, |r| Ok(s.curvature_at(r)?.r_phi + 2.0 * mu * (s.phi_jet(r)?.v - n)))
        }
    }
}

/// `|W_µ^m - (m+2n)µ Vol_φ - W_µ^∞|` for each finite `m`, with the density
/// held fixed as `φ`. `build(m)` must return the same `φ`-model at every `m`.
pub fn renormalization_gap(build: impl Fn(DimParam) -> Result<WarpedSmms>, mu: f64, m_list: &[f64]) -> Result<Vec<f64>> {
    if m_list.iter().any(|m| !m.is_finite() || *m <= 0.0) {
        return Err(SmmsError::InvalidParameter("renormalization gap needs finite positive m".into()));
    }
    let limit = energy_functional(&build(DimParam::Infinite)?, mu)?;
    m_list
        .iter()
        .map(|&m| {
            let s = build(DimParam::Finite(m))?;
            let n = s.n as f64;
            Ok((energy_functional(&s, mu)? - (m + 2.0 * n) * mu * s.weighted_volume(0.0)? - limit).abs())
        })
        .collect()
}

/// The three integrals entering every energy, evaluated by quadrature from
/// the jets of `w`: `a = (L w, w)`, `b = ‖wv⁻¹‖₂²`, `P = ‖w‖_p^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticParts {
    pub a: f64,
    pub b: f64,
    pub p_norm: f64,
    pub l2: f64,
}

/// Quadrature of `(Lw, w) = ∫(c|∇w|² + R_φ w²)`, `‖wv⁻¹‖₂²`, `‖w‖_p^p`
/// and `‖w‖₂²` under `v^m dvol`.
pub fn quadratic_parts(s: &WarpedSmms, w: &RadialProfile) -> Result<QuadraticParts> {
    let m = s.m.require_finite("energy quadratures")?;
    let c = laplacian_coefficient(s.n, s.m);
    let p = sobolev_exponent(s.n, m);
    let a = integrate_with(s, 0.0, |r| {
        let j = w.eval(r);
        Ok(c * j.d1 * j.d1 + s.curvature_at(r)?.r_phi * j.v * j.v)
    })?;
    let b = integrate_with(s, -2.0, |r| Ok(w.value(r).powi(2)))?;
    let p_norm = integrate_with(s, 0.0, |r| Ok(w.value(r).abs().powf(p)))?;
    let l2 = integrate_with(s, 0.0, |r| Ok(w.value(r).powi(2)))?;
    Ok(QuadraticParts { a, b, p_norm, l2 })
}

/// Weighted Yamabe quotient `(Lw,w)‖wv⁻¹‖₂^{2m/n} / ‖w‖_p^q`.
pub fn yamabe_quotient(s: &WarpedSmms, w: &RadialProfile) -> Result<f64> {
    let m = s.m.require_finite("yamabe_quotient")?;
    let q = quadratic_parts(s, w)?;
    let (p, qe) = (sobolev_exponent(s.n, m), quotient_exponent(s.n, m));
    Ok(q.a * q.b.powf(m / s.n as f64) / q.p_norm.powf(qe / p))
}

/// Homogeneous form of the quotient, computed on the changed model
/// `(u⁻²g, u^{-m-n}v^m dvol)`:
/// `(∫R̂_φ v̂^m)(∫v̂^{m-2})^{m/n} / (∫v̂^m)^{(m+n-2)/n}`.
pub fn yamabe_quotient_homogeneous(s: &WarpedSmms, u: &RadialProfile) -> Result<f64> {
    let m = s.m.require_finite("yamabe_quotient_homogeneous")?;
    let hat = crate::conformal::conformal_change(s, u)?;
    homogeneous_quotient_of(&hat, m)
}

/// The homogeneous quotient of a model at `u ≡ 1`.
pub fn homogeneous_quotient_of(s: &WarpedSmms, m: f64) -> Result<f64> {
    let n = s.n as f64;
    let scal = integrate_with(s, 0.0, |r| Ok(s.curvature_at(r)?.r_phi))?;
    let b = s.weighted_volume(-2.0)?;
    let vol = s.weighted_volume(0.0)?;
    Ok(scal * b.powf(m / n) / vol.powf((m + n - 2.0) / n))
}

/// Minimizing `τ` of the `m`-energy objective, `τ* = n b / a`. Returns
/// `None` when `a ≤ 0`: the objective then has no interior minimizer.
pub fn tau_star(a: f64, b: f64, _m: f64, n: usize) -> Option<f64> {
    if a > 0.0 && b > 0.0 {
        Some(n as f64 * b / a)
    } else {
        None
    }
}

/// `(τ^{m/(m+n)} a + m τ^{-n/(m+n)} b) / ‖w‖_p²`.
pub fn m_energy_objective(s: &WarpedSmms, w: &RadialProfile, tau: f64) -> Result<f64> {
    let m = s.m.require_finite("m_energy_objective")?;
    if !(tau > 0.0) {
        return Err(SmmsError::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    let q = quadratic_parts(s, w)?;
    let d = m + s.n as f64;
    let p = sobolev_exponent(s.n, m);
    Ok((tau.powf(m / d) * q.a + m * tau.powf(-(s.n as f64) / d) * q.b) / q.p_norm.powf(2.0 / p))
}

/// Closed-form value of the `m`-energy objective at `τ*`:
/// `(m+n) n^{-n/(m+n)} a^{n/(m+n)} b^{m/(m+n)}` over `‖w‖_p²`.
pub fn m_energy_at_tau_star(a: f64, b: f64, p_norm_sq: f64, m: f64, n: usize) -> f64 {
    let nf = n as f64;
    let d = m + nf;
    d * nf.powf(-nf / d) * a.powf(nf / d) * b.powf(m / d) / p_norm_sq
}

/// `λ = (m+n)(σ/n)^{n/(m+n)}` for `σ > 0`, `0` at `σ = 0` and `-∞` below.
pub fn lambda_from_sigma(sigma: f64, m: f64, n: usize) -> f64 {
    let nf = n as f64;
    if sigma > 0.0 {
        (m + nf) * (sigma / nf).powf(nf / (m + nf))
    } else if sigma == 0.0 {
        0.0
    } else {
        f64::NEG_INFINITY
    }
}

/// Inverse of [`lambda_from_sigma`] on the positive branch.
pub fn sigma_from_lambda(lambda: f64, m: f64, n: usize) -> f64 {
    let nf = n as f64;
    nf * (lambda / (m + nf)).powf((m + nf) / nf)
}

/// Renormalized energy; zero unless `σ > 0`.
pub fn renormalized_energy(lambda: f64, m: DimParam, n: usize, sigma_positive: bool) -> f64 {
    if !sigma_positive {
        return 0.0;
    }
    let nf = n as f64;
    match m {
        DimParam::Finite(m) => (2.0 * PI * E).powf(-nf / 2.0) * (lambda / (m + nf)).powf((m + nf) / 2.0),
        DimParam::Infinite => (2.0 * PI).powf(-nf / 2.0) * (lambda / 2.0).exp(),
    }
}

/// `ν = λ/2 - (n/2) log 2π`.
pub fn nu_from_lambda_inf(lambda_inf: f64, n: usize) -> f64 {
    0.5 * lambda_inf - 0.5 * n as f64 * (2.0 * PI).ln()
}

/// Shift `f` by the constant making `∫τ^{-n/2}e^{-f-φ} dvol = 1`.
pub fn project_infinity_constraint(s: &WarpedSmms, f: &RadialProfile, tau: f64) -> Result<RadialProfile> {
    let n = s.n as f64;
    let mass = integrate_with(s, 0.0, |r| Ok(tau.powf(-n / 2.0) * (-f.value(r)).exp()))?;
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(SmmsError::InvalidParameter(format!("constraint mass is {mass}")));
    }
    let shift = mass.ln();
    Ok(f.map(move |j| Jet::new(j.v + shift, j.d1, j.d2)))
}

/// `W_{1/τ}^∞(g, τ^{-(n-2)/2}e^{-f-φ})` after projecting `f` onto the
/// constraint. With `Φ = f + φ + ((n-2)/2) log τ` this is
/// `∫(R + 2ΔΦ - |∇Φ|² + 2(Φ-n)/τ) e^{-Φ} dvol`.
pub fn infinity_energy_evaluate(s: &WarpedSmms, f: &RadialProfile, tau: f64) -> Result<f64> {
    if !s.m.is_infinite() {
        return Err(SmmsError::InvalidParameter("infinity_energy_evaluate needs m = inf".into()));
    }
    if !(tau > 0.0) {
        return Err(SmmsError::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    let n = s.n as f64;
    let f = project_infinity_constraint(s, f, tau)?;
    let offset = 0.5 * (n - 2.0) * tau.ln();
    integrate_with(s, 0.0, |r| {
        let fj = f.eval(r);
        let phi = s.phi_jet(r)?;
        let big = Jet::new(fj.v + phi.v + offset, fj.d1 + phi.d1, fj.d2 + phi.d2);
        let p = s.psi.eval(r);
        let lap = big.d2 + (n - 1.0) * p.d1 / p.v * big.d1;
        let scal = s.curvature_at(r)?.scalar + 2.0 * lap - big.d1 * big.d1;
        // Measure relative to e^{-φ}: τ^{-(n-2)/2} e^{-f}.
        let rel = (-(fj.v + offset)).exp();
        Ok((scal + 2.0 * (big.v - n) / tau) * rel)
    })
}

// ---- Discretized problem ----

/// Which energy a minimization run targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// `(a + mµ b)/‖w‖_p²` at a fixed characteristic constant.
    Mmu(f64),
    /// `m`-energy objective with `τ = τ*(w)` substituted.
    MEnergy,
    /// Weighted Yamabe quotient.
    Yamabe,
}

/// Finite-volume discretization of radial test functions on a model grid.
#[derive(Debug, Clone)]
pub struct EnergyProblem {
    pub n: usize,
    pub m: f64,
    pub nodes: Vec<f64>,
    /// Cell integrals of `v^m dvol`.
    pub weights: Vec<f64>,
    /// Cell integrals of `R_φ v^m dvol`.
    pub scalar_weights: Vec<f64>,
    /// Cell integrals of `v^{m-2} dvol`.
    pub inverse_weights: Vec<f64>,
    /// Face conductances `ρ(r_{i+1/2})/h`, scaled by the Laplacian
    /// coefficient.
    pub faces: Vec<f64>,
    p: f64,
}

/// Values entering every objective.
#[derive(Debug, Clone, Copy)]
struct Parts {
    a: f64,
    b: f64,
    pn: f64,
}

const GAUSS: f64 = 0.577_350_269_189_625_8;

impl EnergyProblem {
    pub fn new(s: &WarpedSmms) -> Result<Self> {
        let m = s.m.require_finite("the energy discretization")?;
        if m < 0.0 {
            return Err(SmmsError::InvalidParameter(format!("m must be nonnegative, got {m}")));
        }
        let nodes = s.grid();
        let h = s.step();
        let (lo, hi) = s.domain();
        let c = laplacian_coefficient(s.n, s.m);
        let omega = crate::numerics::sphere_area(s.n - 1);
        let rho = |r: f64, offset: f64| -> Result<f64> {
            let psi = s.psi.value(r);
            Ok(omega * psi.max(0.0).powi(s.n as i32 - 1) * s.density_power(r, offset)?)
        };
        let len = nodes.len();
        let mut weights = vec![0.0; len];
        let mut scalar_weights = vec![0.0; len];
        let mut inverse_weights = vec![0.0; len];
        for (i, &r) in nodes.iter().enumerate() {
            for (x0, x1) in [((r - 0.5 * h).max(lo), r), (r, (r + 0.5 * h).min(hi))] {
                if x1 <= x0 {
                    continue;
                }
                let (mid, half) = (0.5 * (x0 + x1), 0.5 * (x1 - x0));
                for x in [mid - GAUSS * half, mid + GAUSS * half] {
                    let base = rho(x, 0.0)?;
                    weights[i] += half * base;
                    scalar_weights[i] += half * base * s.curvature_at(x)?.r_phi;
                    inverse_weights[i] += half * rho(x, -2.0)?;
                }
            }
        }
        let faces = nodes.windows(2).map(|p| Ok(c * rho(0.5 * (p[0] + p[1]), 0.0)? / h)).collect::<Result<Vec<_>>>()?;
        if weights.iter().chain(&inverse_weights).any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(SmmsError::NotPositive("cell weights must be positive and finite".into()));
        }
        Ok(EnergyProblem { n: s.n, m, nodes, weights, scalar_weights, inverse_weights, faces, p: sobolev_exponent(s.n, m) })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    /// `K w` for the Dirichlet form `Σ κ (w_{i+1} - w_i)²`.
    fn stiffness(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; w.len()];
        for (i, &k) in self.faces.iter().enumerate() {
            let flux = k * (w[i + 1] - w[i]);
            out[i] -= flux;
            out[i + 1] += flux;
        }
        out
    }

    fn parts(&self, w: &[f64]) -> Parts {
        let dir: f64 = self.faces.iter().enumerate().map(|(i, k)| k * (w[i + 1] - w[i]).powi(2)).sum();
        let pot: f64 = self.scalar_weights.iter().zip(w).map(|(s, x)| s * x * x).sum();
        let b = self.inverse_weights.iter().zip(w).map(|(s, x)| s * x * x).sum();
        let pn = self.weights.iter().zip(w).map(|(s, x)| s * x.abs().powf(self.p)).sum();
        Parts { a: dir + pot, b, pn }
    }

    /// `(Lw, w)`, `‖wv⁻¹‖₂²`, `‖w‖_p^p` of a node vector.
    pub fn integrals(&self, w: &[f64]) -> (f64, f64, f64) {
        let q = self.parts(w);
        (q.a, q.b, q.pn)
    }

    pub fn l2_squared(&self, w: &[f64]) -> f64 {
        self.weights.iter().zip(w).map(|(s, x)| s * x * x).sum()
    }

    pub fn p_norm(&self, w: &[f64]) -> f64 {
        self.parts(w).pn.powf(1.0 / self.p)
    }

    /// Value and partial derivatives `(f, f_a, f_b, f_P)`.
    fn value_parts(&self, obj: Objective, q: Parts) -> (f64, f64, f64, f64) {
        let (m, n, p) = (self.m, self.n as f64, self.p);
        match obj {
            Objective::Mmu(mu) => {
                let s = q.pn.powf(-2.0 / p);
                let f = (q.a + m * mu * q.b) * s;
                (f, s, m * mu * s, -2.0 / p * f / q.pn)
            }
            Objective::MEnergy => {
                if !(q.a > 0.0) {
                    return (f64::INFINITY, 0.0, 0.0, 0.0);
                }
                let f = m_energy_at_tau_star(q.a, q.b, q.pn.powf(2.0 / p), m, self.n);
                let d = m + n;
                (f, n / d * f / q.a, m / d * f / q.b, -2.0 / p * f / q.pn)
            }
            Objective::Yamabe => {
                let qe = quotient_exponent(self.n, m);
                let s = q.b.powf(m / n) * q.pn.powf(-qe / p);
                let f = q.a * s;
                (f, s, m / n * f / q.b, -qe / p * f / q.pn)
            }
        }
    }

    /// `∂f/∂a`, the factor multiplying the quadratic form in the gradient.
    fn stiffness_factor(&self, obj: Objective, w: &[f64]) -> f64 {
        self.value_parts(obj, self.parts(w)).1
    }

    pub fn value(&self, obj: Objective, w: &[f64]) -> f64 {
        self.value_parts(obj, self.parts(w)).0
    }

    pub fn gradient(&self, obj: Objective, w: &[f64]) -> Vec<f64> {
        let q = self.parts(w);
        let (_, fa, fb, fp) = self.value_parts(obj, q);
        let kw = self.stiffness(w);
        (0..w.len())
            .map(|i| {
                let x = w[i];
                2.0 * fa * (kw[i] + self.scalar_weights[i] * x)
                    + 2.0 * fb * self.inverse_weights[i] * x
                    + fp * self.p * self.weights[i] * x.abs().powf(self.p - 1.0) * x.signum()
            })
            .collect()
    }

    /// `τ*` of a node vector, if `(Lw,w) > 0`.
    pub fn tau_star(&self, w: &[f64]) -> Option<f64> {
        let q = self.parts(w);
        tau_star(q.a, q.b, self.m, self.n)
    }

    /// Characteristic constant whose `(m,µ)` equation a critical point of
    /// `obj` satisfies: `µ` itself, `1/τ*` for the τ-optimized problem, and
    /// `a/(nb)` for the Yamabe quotient. The last equals `1/τ*` when
    /// `a > 0` and stays defined, negative, when `σ < 0`.
    pub fn effective_mu(&self, obj: Objective, w: &[f64]) -> Option<f64> {
        match obj {
            Objective::Mmu(mu) => Some(mu),
            Objective::MEnergy => self.tau_star(w).map(|t| 1.0 / t),
            Objective::Yamabe => {
                let q = self.parts(w);
                (q.b > 0.0).then(|| q.a / (self.n as f64 * q.b))
            }
        }
    }

    /// Strong Euler–Lagrange residual
    /// `-cΔ_φw + (R_φ + mµv⁻²)w - Λw^{p-1}` at every node, `Λ` the
    /// `(m,µ)` objective at `w` with `‖w‖_p = 1`.
    pub fn el_residual(&self, mu: f64, w: &[f64]) -> Vec<f64> {
        let w = self.normalized(w);
        let lambda = self.value(Objective::Mmu(mu), &w);
        let kw = self.stiffness(&w);
        (0..w.len())
            .map(|i| {
                let pot = (self.scalar_weights[i] + self.m * mu * self.inverse_weights[i]) / self.weights[i];
                kw[i] / self.weights[i] + pot * w[i] - lambda * w[i].powf(self.p - 1.0)
            })
            .collect()
    }

    /// Rescale to `‖w‖_p = 1`.
    pub fn normalized(&self, w: &[f64]) -> Vec<f64> {
        let s = self.p_norm(w);
        w.iter().map(|x| x / s).collect()
    }

    /// Component of `d` tangent to `{‖w‖_p = 1}` at `w`:
    /// `∫ d w^{p-1} = 0`.
    pub fn project_tangent(&self, w: &[f64], d: &[f64]) -> Vec<f64> {
        let num: f64 = (0..w.len()).map(|i| self.weights[i] * w[i].powf(self.p - 1.0) * d[i]).sum();
        let den: f64 = (0..w.len()).map(|i| self.weights[i] * w[i].powf(self.p)).sum();
        let t = num / den;
        d.iter().zip(w).map(|(d, w)| d - t * w).collect()
    }

    /// Node values of `L w` as a generalized eigenproblem
    /// `(K + R) w = λ W w`; returns the lowest pair.
    pub fn first_eigenpair(&self) -> Result<(f64, Vec<f64>)> {
        let len = self.len();
        let s: Vec<f64> = self.weights.iter().map(|w| 1.0 / w.sqrt()).collect();
        let mut a = DMatrix::<f64>::zeros(len, len);
        for i in 0..len {
            a[(i, i)] = self.scalar_weights[i] * s[i] * s[i];
        }
        for (i, &k) in self.faces.iter().enumerate() {
            a[(i, i)] += k * s[i] * s[i];
            a[(i + 1, i + 1)] += k * s[i + 1] * s[i + 1];
            a[(i, i + 1)] -= k * s[i] * s[i + 1];
            a[(i + 1, i)] -= k * s[i] * s[i + 1];
        }
        let eig = SymmetricEigen::new(a);
        let (idx, &lambda) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .ok_or_else(|| SmmsError::NotConverged("empty eigenproblem".into()))?;
        let col = eig.eigenvectors.column(idx);
        let mut w: Vec<f64> = (0..len).map(|i| col[i] * s[i]).collect();
        if w.iter().sum::<f64>() < 0.0 {
            w.iter_mut().for_each(|x| *x = -*x);
        }
        Ok((lambda, w))
    }

    /// Tridiagonal Sobolev preconditioner `K + αW`.
    fn precondition(&self, alpha: f64, g: &[f64]) -> Result<Vec<f64>> {
        let len = self.len();
        let mut diag: Vec<f64> = self.weights.iter().map(|w| alpha * w).collect();
        let mut off = vec![0.0; len - 1];
        for (i, &k) in self.faces.iter().enumerate() {
            diag[i] += k;
            diag[i + 1] += k;
            off[i] = -k;
        }
        solve_tridiagonal(&diag, &off, g)
    }
}

/// Starting point of a minimization.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Constant,
    /// `1 + Σ a_k cos(kπ(r-r₀)/L)` with seeded coefficients of size
    /// `amplitude / k`, kept positive.
    Random { seed: u64, amplitude: f64 },
    /// Node values on the model grid.
    Nodes(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub init: Init,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { tol: 1e-6, max_iter: 5000, init: Init::Constant }
    }
}

/// Result of a variational run.
#[derive(Debug, Clone)]
pub struct EnergyReport {
    pub objective: Objective,
    /// Weighted Yamabe constant estimate.
    pub sigma: f64,
    /// `(m,µ)`-energy at the characteristic constant the run used (`1/τ*`
    /// for τ-optimized runs).
    pub lambda_mmu: f64,
    /// `m`-energy; `-∞` when `σ < 0`.
    pub lambda_m: f64,
    pub lambda_bar: f64,
    pub tau_star: Option<f64>,
    pub nodes: Vec<f64>,
    /// Minimizer node values with `‖w‖_p = 1`.
    pub w: Vec<f64>,
    pub el_residual: f64,
    /// `max |R̂_φ + mµv̂⁻² - Λ|` evaluated from finite-difference jets of
    /// `w` through the conformal change formulas.
    pub sc_crit_deviation: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted step, starting with the initial value.
    pub history: Vec<f64>,
    /// Set for `m = 0`, where minimizing sequences may concentrate.
    pub no_compactness: bool,
}

impl EnergyReport {
    pub fn minimizer(&self) -> Result<RadialProfile> {
        RadialProfile::from_samples(self.nodes.clone(), self.w.clone())
    }
}

fn initial_nodes(problem: &EnergyProblem, init: &Init) -> Result<Vec<f64>> {
    let nodes = &problem.nodes;
    let w = match init {
        Init::Constant => vec![1.0; nodes.len()],
        Init::Nodes(w) => {
            if w.len() != nodes.len() {
                return Err(SmmsError::DimensionMismatch(w.len(), nodes.len()));
            }
            w.clone()
        }
        Init::Random { seed, amplitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let (r0, len) = (nodes[0], nodes[nodes.len() - 1] - nodes[0]);
            let coef: Vec<f64> = (1..=4).map(|k| amplitude * rng.gen_range(-1.0..1.0) / k as f64).collect();
            nodes
                .iter()
                .map(|&r| 1.0 + coef.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * PI * (r - r0) / len).cos()).sum::<f64>())
                .collect()
        }
    };
    if w.iter().any(|x| !(*x > 0.0)) {
        return Err(SmmsError::NotPositive("initial w must be positive".into()));
    }
    Ok(problem.normalized(&w))
}

/// Preconditioned projected gradient descent with Armijo backtracking.
/// A trial step that changes the sign of some entries is folded back to
/// `|w|`: every term of every objective depends on `w` only through
/// `(w_{i+1} - w_i)²`, `w²` and `|w|^p`, and folding cannot increase the
/// first. Rejecting such steps instead stalls the descent wherever the
/// minimizer is small, e.g. near a pole where `v` is small.
fn descend(problem: &EnergyProblem, obj: Objective, opts: &MinimizeOptions) -> Result<(Vec<f64>, usize, bool, Vec<f64>)> {
    let mut w = initial_nodes(problem, &opts.init)?;
    let mut f = problem.value(obj, &w);
    if !f.is_finite() {
        return Err(SmmsError::InvalidParameter("objective is not finite at the initial point".into()));
    }
    let mut history = vec![f];
    let residual = |w: &[f64]| -> f64 {
        match problem.effective_mu(obj, w) {
            Some(mu) => problem.el_residual(mu, w).iter().fold(0.0f64, |a, x| a.max(x.abs())),
            None => f64::INFINITY,
        }
    };
    let total: f64 = problem.weights.iter().sum();
    for it in 0..opts.max_iter {
        if residual(&w) < opts.tol {
            return Ok((w, it, true, history));
        }
        let g = problem.gradient(obj, &w);
        // Shift of the preconditioner: the mean potential, which matches
        // the Hessian's zeroth-order part on quasi-Einstein inputs.
        let mu = problem.effective_mu(obj, &w).unwrap_or(0.0);
        let mean_pot = (0..w.len())
            .map(|i| (problem.scalar_weights[i] + problem.m * mu * problem.inverse_weights[i]).abs())
            .sum::<f64>()
            / total;
        let alpha = 0.25 * mean_pot.max(1e-3);
        // The gradient is 2 f_a (K + ...) w + ...; dividing by 2 f_a makes a
        // unit step exact on the stiff, Laplacian-dominated modes.
        let scale = 0.5 / problem.stiffness_factor(obj, &w);
        let d: Vec<f64> = problem.precondition(alpha, &g)?.iter().map(|x| -scale * x).collect();
        let d = problem.project_tangent(&w, &d);
        let slope: f64 = g.iter().zip(&d).map(|(g, d)| g * d).sum();
        if slope >= 0.0 {
            return Ok((w, it, false, history));
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-12 {
            let trial: Vec<f64> = w.iter().zip(&d).map(|(w, d)| (w + t * d).abs()).collect();
            if trial.iter().any(|x| *x > 0.0) {
                let ft = problem.value(obj, &trial);
                let noise = 16.0 * f64::EPSILON * f.abs();
                if ft <= f + 1e-4 * t * slope || (t == 1.0 && ft <= f + noise && -slope < noise) {
                    accepted = Some((problem.normalized(&trial), ft));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((next, ft)) => {
                w = next;
                f = ft;
                history.push(f);
            }
            None => {
                let ok = residual(&w) < opts.tol;
                return Ok((w, it, ok, history));
            }
        }
    }
    let ok = residual(&w) < opts.tol;
    Ok((w, opts.max_iter, ok, history))
}

/// `max |R̂_φ + mµv̂⁻² - Λ|` from finite-difference jets of `w`, skipping
/// nodes within [`POLE_GUARD`] of a pole.
pub fn sc_crit_deviation(s: &WarpedSmms, nodes: &[f64], w: &[f64], mu: f64, lambda: f64) -> Result<f64> {
    let m = s.m.require_finite("sc_crit_deviation")?;
    let d = m + s.n as f64 - 2.0;
    let wp = RadialProfile::from_samples(nodes.to_vec(), w.to_vec())?;
    let u = wp.map(move |j| j.powf(-2.0 / d));
    let (lo, hi) = s.domain();
    let guard = POLE_GUARD * (hi - lo);
    let mut dev = 0.0f64;
    for &r in &nodes[1..nodes.len() - 1] {
        if (s.ends[0] == End::Pole && r < lo + guard) || (s.ends[1] == End::Pole && r > hi - guard) {
            continue;
        }
        let t = transformed_curvature(s, &u, r)?;
        let uu = u.value(r);
        let vv = s.v_jet(r)?.v;
        let val = t.r_phi + m * mu * uu * uu / (vv * vv);
        dev = dev.max((val - lambda).abs());
    }
    Ok(dev)
}

fn finish(s: &WarpedSmms, problem: &EnergyProblem, obj: Objective, run: (Vec<f64>, usize, bool, Vec<f64>)) -> Result<EnergyReport> {
    let (w, iterations, converged, history) = run;
    let (m, n) = (problem.m, problem.n);
    let (a, b, pn) = problem.integrals(&w);
    let tau = tau_star(a, b, m, n);
    let mu = problem.effective_mu(obj, &w);
    let (el, lambda_mmu, dev) = match mu {
        Some(mu) => {
            let lambda = problem.value(Objective::Mmu(mu), &w);
            let el = problem.el_residual(mu, &w).iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            (el, lambda, sc_crit_deviation(s, &problem.nodes, &w, mu, lambda)?)
        }
        None => (f64::INFINITY, f64::NAN, f64::NAN),
    };
    let quotient = problem.value(Objective::Yamabe, &w);
    let (sigma, lambda_m) = match obj {
        Objective::MEnergy => {
            let l = problem.value(Objective::MEnergy, &w);
            (sigma_from_lambda(l, m, n), l)
        }
        _ => match tau {
            Some(_) => (quotient, m_energy_at_tau_star(a, b, pn.powf(2.0 / problem.p), m, n)),
            None => (quotient, f64::NEG_INFINITY),
        },
    };
    let lambda_bar = renormalized_energy(lambda_m, DimParam::Finite(m), n, sigma > 0.0 && lambda_m.is_finite());
    Ok(EnergyReport {
        objective: obj,
        sigma,
        lambda_mmu,
        lambda_m,
        lambda_bar,
        tau_star: tau,
        nodes: problem.nodes.clone(),
        w,
        el_residual: el,
        sc_crit_deviation: dev,
        iterations,
        converged,
        history,
        no_compactness: m == 0.0,
    })
}

/// Minimize the `(m,µ)`-energy over radial `w > 0` with `‖w‖_p = 1`. The
/// characteristic constant is the model's `mu`.
pub fn minimize_mmu_energy(s: &WarpedSmms, opts: &MinimizeOptions) -> Result<EnergyReport> {
    let mu = s.mu.ok_or_else(|| SmmsError::InvalidParameter("the (m,mu)-energy needs a characteristic constant".into()))?;
    let m = s.m.require_finite("minimize_mmu_energy")?;
    if !(m > 0.0) {
        return Err(SmmsError::InvalidParameter(format!("the (m,mu)-energy needs m > 0, got {m}")));
    }
    let problem = EnergyProblem::new(s)?;
    let obj = Objective::Mmu(mu);
    let run = descend(&problem, obj, opts)?;
    finish(s, &problem, obj, run)
}

/// Minimize the weighted Yamabe quotient directly.
pub fn minimize_yamabe_quotient(s: &WarpedSmms, opts: &MinimizeOptions) -> Result<EnergyReport> {
    let problem = EnergyProblem::new(s)?;
    let run = descend(&problem, Objective::Yamabe, opts)?;
    finish(s, &problem, Objective::Yamabe, run)
}

/// Minimize the `m`-energy, alternating the closed-form `τ*` with descent
/// steps in `w`. When the first eigenvalue of `L` is negative the
/// `m`-energy is `-∞`; the report then carries the direct Yamabe estimate
/// of `σ` and `λ̄ = 0`.
pub fn minimize_m_energy(s: &WarpedSmms, opts: &MinimizeOptions) -> Result<EnergyReport> {
    let problem = EnergyProblem::new(s)?;
    let (lambda0, _) = problem.first_eigenpair()?;
    if lambda0 <= 0.0 {
        let mut report = minimize_yamabe_quotient(s, opts)?;
        report.objective = Objective::MEnergy;
        report.lambda_m = if lambda0 == 0.0 { 0.0 } else { f64::NEG_INFINITY };
        report.lambda_bar = 0.0;
        report.tau_star = None;
        return Ok(report);
    }
    let run = descend(&problem, Objective::MEnergy, opts)?;
    finish(s, &problem, Objective::MEnergy, run)
}

/// Lowest eigenvalue of `L_φ^m` on radial functions and its positive
/// eigenfunction.
pub fn first_eigenvalue(s: &WarpedSmms) -> Result<(f64, RadialProfile)> {
    let problem = EnergyProblem::new(s)?;
    let (lambda, w) = problem.first_eigenpair()?;
    Ok((lambda, RadialProfile::from_samples(problem.nodes.clone(), w)?))
}

#[cfg(test)]
mod tests;
