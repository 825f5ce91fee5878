//! Verification of the differential identities and the geometric estimates
//! on concrete radial models.
//!
//! Every check returns a [`CheckResult`]. Inequalities report a relative
//! margin `(rhs - lhs) / scale` at their tightest grid point, so that a
//! passing check with a margin of `1e-15` is visibly different from one
//! with a margin of `0.3`.

mod estimates;
mod identities;

pub use estimates::*;
pub use identities::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::conformal::POLE_GUARD;
use crate::curvature_algebra::{trace, weighted_schouten, AlgCurv};
use crate::error::{Result, SmmsError};
use crate::json::num;
use crate::warped_smms::{
    gaussian_radius, hyperbolic_gaussian, sphere, End, Jet, QeSolution, RadialProfile, SphereParams, WarpedSmms,
    SINGULAR_PSI,
};
use crate::DimParam;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

/// Outcome of one check. For residual checks `measured` is the residual
/// and `bound` is zero; for inequalities they are the two sides at the
/// tightest point.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    pub measured: f64,
    pub bound: f64,
    pub tolerance: f64,
    /// Relative slack; negative on violation. For residual checks this is
    /// `tolerance - measured`.
    pub margin: f64,
    pub model: String,
    pub note: String,
    /// Negative controls are expected to fail.
    pub expect_fail: bool,
}

impl CheckResult {
    fn base(name: &str, model: &str, status: Status, measured: f64, bound: f64, tolerance: f64, margin: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            status,
            measured,
            bound,
            tolerance,
            margin,
            model: model.to_string(),
            note: String::new(),
            expect_fail: false,
        }
    }

    /// Pass iff `measured <= tolerance`; NaN fails.
    pub fn residual(name: &str, model: &str, measured: f64, tolerance: f64) -> Self {
        let status = if measured <= tolerance { Status::Pass } else { Status::Fail };
        Self::base(name, model, status, measured, 0.0, tolerance, tolerance - measured)
    }

    /// Strict inequality: pass iff `margin > 0`.
    pub fn strict(name: &str, model: &str, lhs: f64, rhs: f64, margin: f64) -> Self {
        let status = if margin > 0.0 { Status::Pass } else { Status::Fail };
        Self::base(name, model, status, lhs, rhs, 0.0, margin)
    }

    /// Weak inequality: pass iff `margin >= -tolerance`.
    pub fn weak(name: &str, model: &str, lhs: f64, rhs: f64, margin: f64, tolerance: f64) -> Self {
        let status = if margin >= -tolerance { Status::Pass } else { Status::Fail };
        Self::base(name, model, status, lhs, rhs, tolerance, margin)
    }

    pub fn skipped(name: &str, model: &str, why: &str) -> Self {
        let mut c = Self::base(name, model, Status::Skipped, f64::NAN, f64::NAN, f64::NAN, f64::NAN);
        c.note = why.to_string();
        c
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn expecting_failure(mut self) -> Self {
        self.expect_fail = true;
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Pass (or skip) for ordinary checks, fail for negative controls.
    pub fn as_expected(&self) -> bool {
        if self.expect_fail {
            self.status == Status::Fail
        } else {
            self.status != Status::Fail
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "status": self.status,
            "measured": num(self.measured),
            "bound": num(self.bound),
            "tolerance": num(self.tolerance),
            "margin": num(self.margin),
            "model": self.model,
            "note": self.note,
            "expect_fail": self.expect_fail,
            "as_expected": self.as_expected(),
        })
    }

    /// One fixed-width summary line.
    pub fn summary_line(&self) -> String {
        let status = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        let tag = if self.expect_fail { " (expected fail)" } else { "" };
        format!(
            "{status:<4} {:<32} {:<36} measured={:<12.4e} bound={:<12.4e} margin={:<12.4e}{tag}",
            self.name, self.model, self.measured, self.bound, self.margin
        )
    }
}

fn describe(s: &WarpedSmms) -> String {
    format!("{}(n={}, m={})", s.label, s.n, s.m)
}

/// A model `(g, 1^m dvol)` with characteristic constant `µ` (the model's
/// `mu`) together with `f`, where `u = e^{f/(m+n-2)}` is a quasi-Einstein
/// scale with constant `λ`:
/// `Ric + ∇²f + df⊗df/(m+n-2) = µg`.
#[derive(Debug, Clone)]
pub struct QeInput {
    pub model: WarpedSmms,
    pub f: RadialProfile,
    pub lambda: f64,
    pub compact: bool,
}

impl QeInput {
    pub fn from_solution(sol: &QeSolution) -> Self {
        let compact = sol.model.ends == [End::Pole, End::Pole];
        QeInput { model: sol.model.clone(), f: sol.f.clone(), lambda: sol.lambda, compact }
    }

    /// Hyperbolic space of curvature `-1/k²` with `f = (m+n-2) log cosh(r/k) + f₀`,
    /// i.e. `u = c cosh(r/k)` with `c = e^{f₀/(m+n-2)}` and `λ = c²`.
    pub fn hyperbolic(n: usize, m: f64, grid: usize, r_max: f64, f0: f64) -> Result<Self> {
        let model = hyperbolic_gaussian(n, m, grid, r_max)?;
        let k = gaussian_radius(n, m);
        let big_m = m + n as f64 - 2.0;
        let f = RadialProfile::closed(0.0, r_max, move |r| {
            let x = r / k;
            let t = x.tanh();
            Jet::new(big_m * x.cosh().ln() + f0, big_m * t / k, big_m * (1.0 - t * t) / (k * k))
        });
        let lambda = (2.0 * f0 / big_m).exp();
        Ok(QeInput { model, f, lambda, compact: false })
    }

    /// Round Einstein sphere with `Ric = µg`, constant `f = f₀` and
    /// `λ = e^{2f₀/(m+n-2)} µ`.
    pub fn einstein_sphere(n: usize, m: f64, mu: f64, grid: usize, f0: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(SmmsError::InvalidParameter(format!("Einstein sphere needs mu > 0, got {mu}")));
        }
        let k = ((n as f64 - 1.0) / mu).sqrt();
        let model = sphere(n, DimParam::finite(m)?, SphereParams::round(k), grid)?;
        let (a, b) = model.domain();
        let big_m = m + n as f64 - 2.0;
        let lambda = (2.0 * f0 / big_m).exp() * mu;
        Ok(QeInput { model, f: RadialProfile::constant(a, b, f0), lambda, compact: true })
    }

    /// `f + ε(1 - cos(π(r-a)/L))/2`: smooth at a pole and no longer a
    /// quasi-Einstein scale for the same metric.
    pub fn perturbed(&self, eps: f64) -> Self {
        let (a, b) = self.model.domain();
        let w = std::f64::consts::PI / (b - a);
        let bump = RadialProfile::closed(a, b, move |r| {
            let (s, c) = (w * (r - a)).sin_cos();
            Jet::new(0.5 * eps * (1.0 - c), 0.5 * eps * w * s, 0.5 * eps * w * w * c)
        });
        let f = self.f.zip(&bump, |x, y| x.add(y));
        let mut model = self.model.clone();
        model.label = format!("{}+perturbed({eps})", model.label);
        QeInput { model, f, lambda: self.lambda, compact: self.compact }
    }

    pub fn m(&self) -> Result<f64> {
        self.model.m.require_finite("quasi-Einstein checks")
    }

    pub fn mu(&self) -> Result<f64> {
        self.model.mu.ok_or_else(|| SmmsError::InvalidParameter("quasi-Einstein checks need a characteristic constant".into()))
    }

    /// `m + n - 2`.
    pub fn big_m(&self) -> Result<f64> {
        Ok(self.m()? + self.model.n as f64 - 2.0)
    }

    /// The scale `u = e^{f/(m+n-2)}`.
    pub fn scale(&self) -> Result<RadialProfile> {
        let c = 1.0 / self.big_m()?;
        Ok(self.f.map(move |j| j.scale(c).exp()))
    }

    /// Max residual of the scale equations; small exactly when the input
    /// is quasi-Einstein.
    pub fn scale_residual(&self) -> Result<f64> {
        Ok(self.model.qe_scale_residual(&self.scale()?, self.lambda)?.max())
    }

    pub fn describe(&self) -> String {
        describe(&self.model)
    }
}

/// Channel values at one radius in the frame `(∂r, e₂, ..., eₙ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channels {
    pub r: f64,
    /// `ψ'/ψ`.
    pub h: f64,
    pub k_rad: f64,
    pub k_sph: f64,
    pub scalar: f64,
    /// Weighted Schouten tensor `P = diag(p_rad, p_sph, ...)`.
    pub p_rad: f64,
    pub p_sph: f64,
    /// Weighted Weyl tensor `A = Rm - P∧g`, sectional values.
    pub a_rad: f64,
    pub a_sph: f64,
    pub df: f64,
    pub d2f: f64,
}

impl Channels {
    pub fn at(q: &QeInput, r: f64) -> Result<Self> {
        let m = q.m()?;
        let mu = q.mu()?;
        let s = &q.model;
        let c = s.curvature_at(r)?;
        let p = s.psi.eval(r);
        let nf = s.n as f64;
        let big_m = m + nf - 2.0;
        let shift = (c.scalar + m * mu) / (2.0 * (m + nf - 1.0));
        let p_rad = (c.ric_rad - shift) / big_m;
        let p_sph = (c.ric_sph - shift) / big_m;
        let fj = q.f.eval(r);
        Ok(Channels {
            r,
            h: p.d1 / p.v,
            k_rad: c.k_rad,
            k_sph: c.k_sph,
            scalar: c.scalar,
            p_rad,
            p_sph,
            a_rad: c.k_rad - p_rad - p_sph,
            a_sph: c.k_sph - 2.0 * p_sph,
            df: fj.d1,
            d2f: fj.d2,
        })
    }

    /// Full curvature tensor in the radial frame.
    pub fn rm(&self, n: usize) -> AlgCurv {
        AlgCurv::radial(n, self.k_rad, self.k_sph)
    }

    pub fn a(&self, n: usize) -> AlgCurv {
        AlgCurv::radial(n, self.a_rad, self.a_sph)
    }

    /// `|A|²` with the `¼Σ` normalization: `n-1` radial planes and
    /// `(n-1)(n-2)/2` spherical ones.
    pub fn a_norm_sq(&self, n: usize) -> f64 {
        let nf = n as f64;
        (nf - 1.0) * self.a_rad * self.a_rad + 0.5 * (nf - 1.0) * (nf - 2.0) * self.a_sph * self.a_sph
    }
}

/// Schouten tensor of the channel data computed through the tensor
/// algebra; used to cross-check [`Channels::at`].
pub fn schouten_from_tensor(q: &QeInput, r: f64) -> Result<(f64, f64)> {
    let c = Channels::at(q, r)?;
    let n = q.model.n;
    let ric = trace(&c.rm(n));
    let p = weighted_schouten(&ric, ric.trace(), q.model.m, q.mu()?)?;
    Ok((p.get(0, 0), p.get(1, 1)))
}

/// Indices of nodes at least [`POLE_GUARD`] (as a fraction of the domain)
/// away from any pole and strictly inside the grid.
pub fn guarded_indices(s: &WarpedSmms) -> Vec<usize> {
    let grid = s.grid();
    let (lo, hi) = s.domain();
    let guard = POLE_GUARD * (hi - lo);
    let last = grid.len() - 1;
    (1..last)
        .filter(|&i| {
            let r = grid[i];
            !(s.ends[0] == End::Pole && r < lo + guard)
                && !(s.ends[1] == End::Pole && r > hi - guard)
                && s.psi.value(r) > SINGULAR_PSI
        })
        .collect()
}

/// Random radial test functions `1 + Σ_{k≤4} a_k cos(kπ(r-a)/L)` with
/// `|a_k| ≤ amplitude/k`. Cosine modes are even at both ends, so the
/// functions are smooth at poles.
pub fn random_test_functions(seed: u64, count: usize, domain: (f64, f64), amplitude: f64) -> Vec<RadialProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = domain;
    let w = std::f64::consts::PI / (b - a);
    (0..count)
        .map(|_| {
            let coeffs: Vec<f64> = (1..=4).map(|k| rng.gen_range(-amplitude..amplitude) / k as f64).collect();
            RadialProfile::closed(a, b, move |r| {
                let mut j = Jet::constant(1.0);
                for (i, c) in coeffs.iter().enumerate() {
                    let kw = (i + 1) as f64 * w;
                    let (s, co) = (kw * (r - a)).sin_cos();
                    j = j.add(Jet::new(c * co, -c * kw * s, -c * kw * kw * co));
                }
                j
            })
        })
        .collect()
}

/// Configuration of the full suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Random tensors per `(n, m)` in the algebra suite and random test
    /// functions per inequality.
    pub trials: usize,
    /// Amplitude of the negative-control perturbation.
    pub perturb: f64,
    pub grid: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 0, trials: 100, perturb: 0.1, grid: 257 }
    }
}

/// A named, independent unit of the suite.
pub struct SuiteJob {
    pub name: &'static str,
    pub run: Box<dyn Fn() -> Result<Vec<CheckResult>> + Send + Sync>,
}

/// The full suite as independent jobs, in report order.
pub fn suite_jobs(cfg: &SuiteConfig) -> Vec<SuiteJob> {
    let c = cfg.clone();
    let mut jobs: Vec<SuiteJob> = Vec::new();
    let mut push = |name: &'static str, f: Box<dyn Fn() -> Result<Vec<CheckResult>> + Send + Sync>| {
        jobs.push(SuiteJob { name, run: f });
    };
    let c1 = c.clone();
    push("algebra", Box::new(move || Ok(algebra_suite(c1.seed, c1.trials))));
    let c2 = c.clone();
    push("identities", Box::new(move || identity_suite(c2.grid)));
    let c3 = c.clone();
    push("estimates", Box::new(move || estimate_suite(c3.grid, c3.seed, c3.trials.max(1) * 2)));
    let c4 = c;
    push("negative-controls", Box::new(move || negative_controls(c4.grid, c4.perturb)));
    jobs
}

/// Run every job in order.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for job in suite_jobs(cfg) {
        out.extend((job.run)()?);
    }
    Ok(out)
}

/// Report array plus counts.
pub fn report_json(results: &[CheckResult]) -> Value {
    let failed = results.iter().filter(|c| !c.as_expected()).count();
    json!({
        "checks": results.iter().map(CheckResult::to_json).collect::<Vec<_>>(),
        "total": results.len(),
        "unexpected": failed,
        "skipped": results.iter().filter(|c| c.status == Status::Skipped).count(),
    })
}

#[cfg(test)]
mod tests;
