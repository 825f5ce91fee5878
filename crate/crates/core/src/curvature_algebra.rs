//! Pointwise algebra of curvature-type tensors on an `n`-dimensional inner
//! product space.
//!
//! Everything is expressed in an orthonormal frame, so the metric is the
//! identity form and indices are never raised or lowered. Four-tensors are
//! stored row-major in `(x, y, u, v)` order: component `(i, j, k, l)` lives at
//! `((i * n + j) * n + k) * n + l`.
//!
//! Conventions:
//! - `Ric(x, u) = sum_i Rm(e_i, x, e_i, u)`, so the unit round sphere has
//!   `Rm = g∧g / 2` and sectional curvature `K(x, y) = Rm(x, y, x, y)`.
//! - Norms on algebraic curvature tensors are taken on `Λ²`, where
//!   `e_i∧e_j` has unit length; this is one quarter of the sum of squared
//!   components. Symmetric forms use the plain sum of squares.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dim::DimParam;
use crate::error::{Result, SmmsError};

/// Residual allowed when checking the symmetries of an input tensor.
pub const SYMMETRY_TOL: f64 = 1e-13;

#[inline]
fn idx2(n: usize, i: usize, j: usize) -> usize {
    i * n + j
}

#[inline]
fn idx4(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n + j) * n + k) * n + l
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(SmmsError::DimensionMismatch(a, b))
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// A symmetric bilinear form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymForm {
    n: usize,
    comps: Vec<f64>,
}

impl SymForm {
    pub fn zeros(n: usize) -> Self {
        SymForm { n, comps: vec![0.0; n * n] }
    }

    /// The metric, which is the identity in an orthonormal frame.
    pub fn identity(n: usize) -> Self {
        let mut s = Self::zeros(n);
        for i in 0..n {
            s.comps[idx2(n, i, i)] = 1.0;
        }
        s
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut s = Self::zeros(n);
        for (i, d) in diag.iter().enumerate() {
            s.comps[idx2(n, i, i)] = *d;
        }
        s
    }

    /// Checked constructor: the input must be symmetric to [`SYMMETRY_TOL`]
    /// (relative to its size); the stored value is the exact symmetrization.
    pub fn from_components(n: usize, comps: Vec<f64>) -> Result<Self> {
        if comps.len() != n * n {
            return Err(SmmsError::DimensionMismatch(comps.len(), n * n));
        }
        let s = Self::symmetrized(n, comps.clone());
        let scale = comps.iter().fold(1.0_f64, |a, c| a.max(c.abs()));
        let residual = max_abs_diff(&comps, &s.comps);
        if residual > SYMMETRY_TOL * scale {
            return Err(SmmsError::Symmetry { residual, tolerance: SYMMETRY_TOL * scale });
        }
        Ok(s)
    }

    /// Symmetrize arbitrary components without checking.
    pub fn symmetrized(n: usize, comps: Vec<f64>) -> Self {
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[idx2(n, i, j)] = 0.5 * (comps[idx2(n, i, j)] + comps[idx2(n, j, i)]);
            }
        }
        SymForm { n, comps: out }
    }

    /// `a e⊗e` summed over the outer products of the given vectors.
    pub fn outer(v: &[f64]) -> Self {
        let n = v.len();
        let mut comps = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                comps[idx2(n, i, j)] = v[i] * v[j];
            }
        }
        SymForm { n, comps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn comps(&self) -> &[f64] {
        &self.comps
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.comps[idx2(self.n, i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Trace-free part `T - (tr T / n) g`.
    pub fn trace_free(&self) -> Self {
        let t = self.trace() / self.n as f64;
        self.add(&Self::identity(self.n).scale(-t))
    }

    pub fn scale(&self, c: f64) -> Self {
        SymForm { n: self.n, comps: self.comps.iter().map(|x| c * x).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "SymForm::add dimension mismatch");
        SymForm {
            n: self.n,
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn norm_sq(&self) -> f64 {
        self.comps.iter().map(|x| x * x).sum()
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.comps.iter().zip(&other.comps).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.comps, &other.comps)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |a, c| a.max(c.abs()))
    }
}

/// A general 4-tensor, used for the non-symmetric composition product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor4 {
    n: usize,
    comps: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Tensor4 { n, comps: vec![0.0; n * n * n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn comps(&self) -> &[f64] {
        &self.comps
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.comps[idx4(self.n, i, j, k, l)]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.comps, &other.comps)
    }
}

/// An algebraic curvature operator: antisymmetric in each index pair and
/// symmetric under exchange of the pairs. The first Bianchi identity is not
/// assumed; see [`AlgCurv::bianchi_residual`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgCurv {
    n: usize,
    comps: Vec<f64>,
}

impl AlgCurv {
    pub fn zeros(n: usize) -> Self {
        AlgCurv { n, comps: vec![0.0; n * n * n * n] }
    }

    /// `Id = g∧g / 2` on `Λ²`.
    pub fn identity(n: usize) -> Self {
        let g = SymForm::identity(n);
        kn_wedge_unchecked(&g, &g).scale(0.5)
    }

    /// Checked constructor; see [`SymForm::from_components`].
    pub fn from_components(n: usize, comps: Vec<f64>) -> Result<Self> {
        if comps.len() != n * n * n * n {
            return Err(SmmsError::DimensionMismatch(comps.len(), n * n * n * n));
        }
        let s = Self::symmetrized(n, &comps);
        let scale = comps.iter().fold(1.0_f64, |a, c| a.max(c.abs()));
        let residual = max_abs_diff(&comps, &s.comps);
        if residual > SYMMETRY_TOL * scale {
            return Err(SmmsError::Symmetry { residual, tolerance: SYMMETRY_TOL * scale });
        }
        Ok(s)
    }

    /// Project arbitrary components onto the pair-antisymmetric,
    /// pair-exchange-symmetric subspace.
    pub fn symmetrized(n: usize, comps: &[f64]) -> Self {
        let mut out = vec![0.0; comps.len()];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let t = |a, b, c, d| comps[idx4(n, a, b, c, d)];
                        let s = t(i, j, k, l) - t(j, i, k, l) - t(i, j, l, k) + t(j, i, l, k)
                            + t(k, l, i, j)
                            - t(l, k, i, j)
                            - t(k, l, j, i)
                            + t(l, k, j, i);
                        out[idx4(n, i, j, k, l)] = s / 8.0;
                    }
                }
            }
        }
        AlgCurv { n, comps: out }
    }

    /// The tensor `a_sph g∧g/2 + (a_rad - a_sph) E∧g` with `E = e_1⊗e_1`:
    /// sectional value `a_rad` on planes containing `e_1` and `a_sph` on the
    /// others. This is the shape of every rotationally symmetric curvature
    /// quantity in the frame `(∂_r, e_2, ..., e_n)`.
    pub fn radial(n: usize, a_rad: f64, a_sph: f64) -> Self {
        let g = SymForm::identity(n);
        let mut e = vec![0.0; n];
        e[0] = 1.0;
        let big_e = SymForm::outer(&e);
        kn_wedge_unchecked(&g, &g)
            .scale(0.5 * a_sph)
            .add(&kn_wedge_unchecked(&big_e, &g).scale(a_rad - a_sph))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn comps(&self) -> &[f64] {
        &self.comps
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.comps[idx4(self.n, i, j, k, l)]
    }

    pub fn scale(&self, c: f64) -> Self {
        AlgCurv { n: self.n, comps: self.comps.iter().map(|x| c * x).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "AlgCurv::add dimension mismatch");
        AlgCurv {
            n: self.n,
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Squared norm as an element of `S²Λ²`: a quarter of the component sum.
    pub fn norm_sq(&self) -> f64 {
        0.25 * self.comps.iter().map(|x| x * x).sum::<f64>()
    }

    /// Inner product matching [`AlgCurv::norm_sq`].
    pub fn inner(&self, other: &Self) -> f64 {
        0.25 * self.comps.iter().zip(&other.comps).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |a, c| a.max(c.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.comps, &other.comps)
    }

    /// Max-abs of the cyclic sum over the first three slots.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.n;
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let c = self.get(i, j, k, l) + self.get(j, k, i, l) + self.get(k, i, j, l);
                        r = r.max(c.abs());
                    }
                }
            }
        }
        r
    }

    /// Remove the totally antisymmetric part, enforcing the first Bianchi
    /// identity.
    pub fn bianchi_projected(&self) -> Self {
        let n = self.n;
        let mut out = self.comps.clone();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let b = (self.get(i, j, k, l) + self.get(j, k, i, l) + self.get(k, i, j, l)) / 3.0;
                        out[idx4(n, i, j, k, l)] -= b;
                    }
                }
            }
        }
        AlgCurv { n, comps: out }
    }

    /// Debug dump: `{"n": n, "index_order": "xyuv", "comps": [...]}` with
    /// the components row-major.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "n": self.n, "index_order": "xyuv", "comps": self.comps })
    }
}

/// A `Λ¹⊗Λ²`-valued object `T(y; u, v)`, antisymmetric in `(u, v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeForm2 {
    n: usize,
    comps: Vec<f64>,
}

impl ThreeForm2 {
    pub fn zeros(n: usize) -> Self {
        ThreeForm2 { n, comps: vec![0.0; n * n * n] }
    }

    /// Checked constructor: the last pair must be antisymmetric.
    pub fn from_components(n: usize, comps: Vec<f64>) -> Result<Self> {
        if comps.len() != n * n * n {
            return Err(SmmsError::DimensionMismatch(comps.len(), n * n * n));
        }
        let mut out = vec![0.0; comps.len()];
        for y in 0..n {
            for u in 0..n {
                for v in 0..n {
                    out[(y * n + u) * n + v] = 0.5 * (comps[(y * n + u) * n + v] - comps[(y * n + v) * n + u]);
                }
            }
        }
        let scale = comps.iter().fold(1.0_f64, |a, c| a.max(c.abs()));
        let residual = max_abs_diff(&comps, &out);
        if residual > SYMMETRY_TOL * scale {
            return Err(SmmsError::Symmetry { residual, tolerance: SYMMETRY_TOL * scale });
        }
        Ok(ThreeForm2 { n, comps: out })
    }

    /// Interior product in the first slot: `(i_X A)(y; u, v) = A(X, y, u, v)`.
    pub fn interior(a: &AlgCurv, x: &[f64]) -> Result<Self> {
        check_dims(a.n, x.len())?;
        let n = a.n;
        let mut comps = vec![0.0; n * n * n];
        for y in 0..n {
            for u in 0..n {
                for v in 0..n {
                    comps[(y * n + u) * n + v] = (0..n).map(|i| x[i] * a.get(i, y, u, v)).sum();
                }
            }
        }
        Ok(ThreeForm2 { n, comps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, y: usize, u: usize, v: usize) -> f64 {
        self.comps[(y * self.n + u) * self.n + v]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.comps, &other.comps)
    }
}

fn kn_wedge_unchecked(h: &SymForm, k: &SymForm) -> AlgCurv {
    let n = h.n;
    let mut comps = vec![0.0; n * n * n * n];
    for x in 0..n {
        for y in 0..n {
            for u in 0..n {
                for v in 0..n {
                    comps[idx4(n, x, y, u, v)] = h.get(x, u) * k.get(y, v) + h.get(y, v) * k.get(x, u)
                        - h.get(x, v) * k.get(y, u)
                        - h.get(y, u) * k.get(x, v);
                }
            }
        }
    }
    AlgCurv { n, comps }
}

/// Kulkarni–Nomizu product
/// `(h∧k)(x,y,u,v) = h(x,u)k(y,v) + h(y,v)k(x,u) - h(x,v)k(y,u) - h(y,u)k(x,v)`.
pub fn kn_wedge(h: &SymForm, k: &SymForm) -> Result<AlgCurv> {
    check_dims(h.n, k.n)?;
    Ok(kn_wedge_unchecked(h, k))
}

/// Composition `A∘B`, defined by `(A∘B)(x,y,u,v) = B(x,y,e_i,e_j) A(e_i,e_j,u,v)`
/// with the sum over all ordered pairs `(i, j)`.
pub fn compose(a: &AlgCurv, b: &AlgCurv) -> Result<Tensor4> {
    check_dims(a.n, b.n)?;
    let n = a.n;
    let nn = n * n;
    let mut comps = vec![0.0; nn * nn];
    // Both factors are nn x nn matrices in pair indices; this is B * A.
    for xy in 0..nn {
        for uv in 0..nn {
            let mut s = 0.0;
            for ij in 0..nn {
                s += b.comps[xy * nn + ij] * a.comps[ij * nn + uv];
            }
            comps[xy * nn + uv] = s;
        }
    }
    Ok(Tensor4 { n, comps })
}

/// Symmetric product `A·B = (A∘B + B∘A) / 2`.
pub fn sym_dot(a: &AlgCurv, b: &AlgCurv) -> Result<AlgCurv> {
    let ab = compose(a, b)?;
    let ba = compose(b, a)?;
    let comps = ab.comps.iter().zip(&ba.comps).map(|(x, y)| 0.5 * (x + y)).collect();
    Ok(AlgCurv { n: a.n, comps })
}

/// The Lie-algebra product
/// `(A□B)(x,y,u,v) = A(x,e_i,u,e_j)B(y,e_i,v,e_j) + A(y,e_i,v,e_j)B(x,e_i,u,e_j)
///                 - A(x,e_i,v,e_j)B(y,e_i,u,e_j) - A(y,e_i,u,e_j)B(x,e_i,v,e_j)`.
pub fn sharp(a: &AlgCurv, b: &AlgCurv) -> Result<AlgCurv> {
    check_dims(a.n, b.n)?;
    let n = a.n;
    // c[x,u,y,v] = sum_ij A(x,i,u,j) B(y,i,v,j): a matrix product over (i,j).
    let nn = n * n;
    let mut am = vec![0.0; nn * nn];
    let mut bm = vec![0.0; nn * nn];
    for x in 0..n {
        for u in 0..n {
            for i in 0..n {
                for j in 0..n {
                    am[(x * n + u) * nn + i * n + j] = a.get(x, i, u, j);
                    bm[(x * n + u) * nn + i * n + j] = b.get(x, i, u, j);
                }
            }
        }
    }
    let mut c = vec![0.0; nn * nn];
    for xu in 0..nn {
        for yv in 0..nn {
            let mut s = 0.0;
            for ij in 0..nn {
                s += am[xu * nn + ij] * bm[yv * nn + ij];
            }
            c[xu * nn + yv] = s;
        }
    }
    let cc = |x: usize, u: usize, y: usize, v: usize| c[(x * n + u) * nn + y * n + v];
    let mut comps = vec![0.0; nn * nn];
    for x in 0..n {
        for y in 0..n {
            for u in 0..n {
                for v in 0..n {
                    comps[idx4(n, x, y, u, v)] =
                        cc(x, u, y, v) + cc(y, v, x, u) - cc(x, v, y, u) - cc(y, u, x, v);
                }
            }
        }
    }
    Ok(AlgCurv { n, comps })
}

/// Derivation action
/// `(T♯A)(x,y,u,v) = -A(Tx,y,u,v) - A(x,Ty,u,v) - A(x,y,Tu,v) - A(x,y,u,Tv)`.
pub fn hash_action(t: &SymForm, a: &AlgCurv) -> Result<AlgCurv> {
    check_dims(t.n, a.n)?;
    let n = a.n;
    let mut comps = vec![0.0; n * n * n * n];
    for x in 0..n {
        for y in 0..n {
            for u in 0..n {
                for v in 0..n {
                    let mut s = 0.0;
                    for p in 0..n {
                        s += t.get(x, p) * a.get(p, y, u, v)
                            + t.get(y, p) * a.get(x, p, u, v)
                            + t.get(u, p) * a.get(x, y, p, v)
                            + t.get(v, p) * a.get(x, y, u, p);
                    }
                    comps[idx4(n, x, y, u, v)] = -s;
                }
            }
        }
    }
    Ok(AlgCurv { n, comps })
}

/// Contraction `⟨A,T⟩(x,u) = sum_ij A(e_i,x,e_j,u) T_ij`; `⟨A,g⟩` is the
/// trace, so `⟨Rm,g⟩ = Ric`.
pub fn contract(a: &AlgCurv, t: &SymForm) -> Result<SymForm> {
    check_dims(a.n, t.n)?;
    let n = a.n;
    let mut comps = vec![0.0; n * n];
    for x in 0..n {
        for u in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += a.get(i, x, j, u) * t.get(i, j);
                }
            }
            comps[idx2(n, x, u)] = s;
        }
    }
    // Symmetric whenever A has pair symmetry and T is symmetric.
    Ok(SymForm::symmetrized(n, comps))
}

/// Trace `⟨A, g⟩`.
pub fn trace(a: &AlgCurv) -> SymForm {
    contract(a, &SymForm::identity(a.n)).expect("same dimension")
}

/// Output of [`ricci_decompose`].
#[derive(Debug, Clone, PartialEq)]
pub struct RicciParts {
    pub weyl: AlgCurv,
    pub ric0: SymForm,
    pub scalar: f64,
}

impl RicciParts {
    /// `W + Ric0∧g/(n-2) + R g∧g/(2n(n-1))`.
    pub fn reconstruct(&self) -> AlgCurv {
        let n = self.weyl.n;
        let nf = n as f64;
        let g = SymForm::identity(n);
        self.weyl
            .add(&kn_wedge_unchecked(&self.ric0, &g).scale(1.0 / (nf - 2.0)))
            .add(&kn_wedge_unchecked(&g, &g).scale(self.scalar / (2.0 * nf * (nf - 1.0))))
    }
}

/// Orthogonal decomposition into Weyl, trace-free Ricci and scalar parts.
/// The input must satisfy the first Bianchi identity to
/// `tol * max|Rm|`; the metric is the identity of the frame.
pub fn ricci_decompose(rm: &AlgCurv, tol: f64) -> Result<RicciParts> {
    let n = rm.n;
    if n < 3 {
        return Err(SmmsError::InvalidParameter("ricci_decompose needs n >= 3".into()));
    }
    let scale = rm.max_abs().max(1.0);
    let b = rm.bianchi_residual();
    if b > tol * scale {
        return Err(SmmsError::Symmetry { residual: b, tolerance: tol * scale });
    }
    let nf = n as f64;
    let g = SymForm::identity(n);
    let ric = trace(rm);
    let scalar = ric.trace();
    let ric0 = ric.trace_free();
    let weyl = rm
        .sub(&kn_wedge_unchecked(&ric0, &g).scale(1.0 / (nf - 2.0)))
        .sub(&kn_wedge_unchecked(&g, &g).scale(scalar / (2.0 * nf * (nf - 1.0))));
    Ok(RicciParts { weyl, ric0, scalar })
}

/// Weighted Schouten tensor `P = (Ric - (R + mµ)/(2(m+n-1)) g) / (m+n-2)`.
/// Undefined at `m = ∞`.
pub fn weighted_schouten(ric: &SymForm, scalar: f64, m: DimParam, mu: f64) -> Result<SymForm> {
    let m = m.require_finite("weighted Schouten tensor")?;
    let nf = ric.n as f64;
    if m + nf - 2.0 <= 0.0 {
        return Err(SmmsError::InvalidParameter("m + n - 2 must be positive".into()));
    }
    let g = SymForm::identity(ric.n);
    Ok(ric
        .sub(&g.scale((scalar + m * mu) / (2.0 * (m + nf - 1.0))))
        .scale(1.0 / (m + nf - 2.0)))
}

/// Weighted Weyl tensor `A = Rm - P∧g`; equal to `Rm` at `m = ∞`.
pub fn weighted_weyl(rm: &AlgCurv, m: DimParam, mu: f64) -> Result<AlgCurv> {
    if m.is_infinite() {
        return Ok(rm.clone());
    }
    let ric = trace(rm);
    let p = weighted_schouten(&ric, ric.trace(), m, mu)?;
    Ok(rm.sub(&kn_wedge_unchecked(&p, &SymForm::identity(rm.n))))
}

/// The same tensor assembled from the Ricci decomposition:
/// `W + m/((m+n-2)(n-2)) Ric0∧g + m/(2(m+n-1)(m+n-2)) ((m-1)R/(n(n-1)) + µ) g∧g`.
pub fn weighted_weyl_decomposed(rm: &AlgCurv, m: DimParam, mu: f64, tol: f64) -> Result<AlgCurv> {
    let parts = ricci_decompose(rm, tol)?;
    if m.is_infinite() {
        return Ok(parts.reconstruct());
    }
    let m = m.value();
    let nf = rm.n as f64;
    let g = SymForm::identity(rm.n);
    let c_ric = m / ((m + nf - 2.0) * (nf - 2.0));
    let c_id = m / (2.0 * (m + nf - 1.0) * (m + nf - 2.0))
        * ((m - 1.0) * parts.scalar / (nf * (nf - 1.0)) + mu);
    Ok(parts
        .weyl
        .add(&kn_wedge_unchecked(&parts.ric0, &g).scale(c_ric))
        .add(&kn_wedge_unchecked(&g, &g).scale(c_id)))
}

/// Channel form of `|A|²` with characteristic constant `µ`:
/// `|W|² + (m/(m+n-2))²|Ric0|²/(n-2) + n(n-1)/2 (m/((m+n-1)(m+n-2)))² ((m-1)R/(n(n-1)) + µ)²`.
pub fn weighted_weyl_norm_sq_channels(rm: &AlgCurv, m: f64, mu: f64, tol: f64) -> Result<f64> {
    let parts = ricci_decompose(rm, tol)?;
    let nf = rm.n as f64;
    let a = m / (m + nf - 2.0);
    let b = m / ((m + nf - 1.0) * (m + nf - 2.0));
    let s = (m - 1.0) * parts.scalar / (nf * (nf - 1.0)) + mu;
    Ok(parts.weyl.norm_sq() + a * a * parts.ric0.norm_sq() / (nf - 2.0) + 0.5 * nf * (nf - 1.0) * b * b * s * s)
}

/// `(|A|², |Rm + g∧g/(2(m-1))|², C |A|²)` with
/// `C = ((m+n-1)(m+n-2)/(m(m-1)))²`, for characteristic constant one.
pub fn norm_comparison(rm: &AlgCurv, m: f64) -> Result<(f64, f64, f64)> {
    if !(m > 1.0) || !m.is_finite() {
        return Err(SmmsError::InvalidParameter(format!("norm comparison needs 1 < m < inf, got {m}")));
    }
    let nf = rm.n as f64;
    let a = weighted_weyl(rm, DimParam::Finite(m), 1.0)?;
    let g = SymForm::identity(rm.n);
    let shifted = rm.add(&kn_wedge_unchecked(&g, &g).scale(1.0 / (2.0 * (m - 1.0))));
    let c = ((m + nf - 1.0) * (m + nf - 2.0) / (m * (m - 1.0))).powi(2);
    let an = a.norm_sq();
    Ok((an, shifted.norm_sq(), c * an))
}

/// Max-abs residual of `A² + A# = Rm·A + Rm□A - trA∧P - ⟨A,P⟩∧g` with
/// `A = Rm - P∧g` and `A² = A·A`.
pub fn algebra_lemma_residual(rm: &AlgCurv, m: DimParam, mu: f64) -> Result<f64> {
    let n = rm.n;
    let g = SymForm::identity(n);
    let ric = trace(rm);
    let p = weighted_schouten(&ric, ric.trace(), m, mu)?;
    let a = rm.sub(&kn_wedge_unchecked(&p, &g));
    let tr_a = trace(&a);
    let lhs = sym_dot(&a, &a)?.add(&sharp(&a, &a)?);
    let rhs = sym_dot(rm, &a)?
        .add(&sharp(rm, &a)?)
        .sub(&kn_wedge_unchecked(&tr_a, &p))
        .sub(&kn_wedge_unchecked(&contract(&a, &p)?, &g));
    Ok(lhs.max_abs_diff(&rhs))
}

/// Max-abs residual of
/// `tr A = m (P - (R - (m+2n-2)µ) / (2(m+n-1)(m+n-2)) g)`.
///
/// The factor `1/(m+n-2)` in the scalar term is required for the identity
/// to hold and for the Laplacian formula for `A` to follow from it; see
/// [`trace_a_identity_residual_unscaled`] for the variant without it.
pub fn trace_a_identity_residual(rm: &AlgCurv, m: DimParam, mu: f64) -> Result<f64> {
    trace_a_residual_with(rm, m, mu, true)
}

/// Residual of the variant `tr A = m (P - (R - (m+2n-2)µ)/(2(m+n-1)) g)`,
/// which only holds when `m = 0`, `m + n = 3` or `R = (m+2n-2)µ`.
pub fn trace_a_identity_residual_unscaled(rm: &AlgCurv, m: DimParam, mu: f64) -> Result<f64> {
    trace_a_residual_with(rm, m, mu, false)
}

fn trace_a_residual_with(rm: &AlgCurv, m: DimParam, mu: f64, scaled: bool) -> Result<f64> {
    let n = rm.n;
    let g = SymForm::identity(n);
    let ric = trace(rm);
    let scalar = ric.trace();
    let p = weighted_schouten(&ric, scalar, m, mu)?;
    let a = rm.sub(&kn_wedge_unchecked(&p, &g));
    let mf = m.value();
    let nf = n as f64;
    let mut c = (scalar - (mf + 2.0 * nf - 2.0) * mu) / (2.0 * (mf + nf - 1.0));
    if scaled {
        c /= mf + nf - 2.0;
    }
    let rhs = p.sub(&g.scale(c)).scale(mf);
    Ok(trace(&a).max_abs_diff(&rhs))
}

/// Random symmetric form with entries uniform in `[-1, 1]`.
pub fn random_symform<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SymForm {
    let comps = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    SymForm::symmetrized(n, comps)
}

/// Random pair-symmetric tensor (no Bianchi identity).
pub fn random_pair_symmetric<R: Rng + ?Sized>(rng: &mut R, n: usize) -> AlgCurv {
    let comps: Vec<f64> = (0..n * n * n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    AlgCurv::symmetrized(n, &comps)
}

/// Random algebraic curvature tensor satisfying the first Bianchi identity:
/// a sum of three Kulkarni–Nomizu products plus a Weyl-type part obtained by
/// projecting a random pair-symmetric tensor.
pub fn random_bianchi<R: Rng + ?Sized>(rng: &mut R, n: usize) -> AlgCurv {
    let mut t = AlgCurv::zeros(n);
    for _ in 0..3 {
        let h = random_symform(rng, n);
        let k = random_symform(rng, n);
        t = t.add(&kn_wedge_unchecked(&h, &k));
    }
    let raw = random_pair_symmetric(rng, n).bianchi_projected();
    let weyl = ricci_decompose(&raw, 1e-12).expect("projected tensor satisfies Bianchi").weyl;
    let out = t.add(&weyl);
    debug_assert!(out.bianchi_residual() < 1e-12);
    out
}
