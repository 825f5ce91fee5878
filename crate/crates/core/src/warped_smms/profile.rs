use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SmmsError};
use crate::numerics::{fd_first, fd_second, hermite_eval, MIN_GRID};

/// Value together with first and second radial derivative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub fn new(v: f64, d1: f64, d2: f64) -> Self {
        Jet { v, d1, d2 }
    }

    pub fn constant(c: f64) -> Self {
        Jet { v: c, d1: 0.0, d2: 0.0 }
    }

    pub fn mul(self, o: Jet) -> Jet {
        Jet { v: self.v * o.v, d1: self.d1 * o.v + self.v * o.d1, d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2 }
    }

    /// Jet of `g(self)` given `g, g', g''` at `self.v`.
    pub fn compose(self, g: [f64; 3]) -> Jet {
        Jet { v: g[0], d1: g[1] * self.d1, d2: g[2] * self.d1 * self.d1 + g[1] * self.d2 }
    }

    pub fn powf(self, p: f64) -> Jet {
        let x = self.v;
        self.compose([x.powf(p), p * x.powf(p - 1.0), p * (p - 1.0) * x.powf(p - 2.0)])
    }

    pub fn exp(self) -> Jet {
        let e = self.v.exp();
        self.compose([e, e, e])
    }

    pub fn ln(self) -> Jet {
        let x = self.v;
        self.compose([x.ln(), 1.0 / x, -1.0 / (x * x)])
    }

    pub fn scale(self, c: f64) -> Jet {
        Jet { v: c * self.v, d1: c * self.d1, d2: c * self.d2 }
    }

    pub fn add(self, o: Jet) -> Jet {
        Jet { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }

    fn as_array(self) -> [f64; 3] {
        [self.v, self.d1, self.d2]
    }
}

type JetFn = Arc<dyn Fn(f64) -> Jet + Send + Sync>;

/// A scalar function of the radial coordinate with two derivatives.
///
/// Grid profiles interpolate node jets by quintic Hermite segments, so
/// evaluation at a node returns the stored jet exactly.
#[derive(Clone)]
pub enum RadialProfile {
    Closed { a: f64, b: f64, f: JetFn },
    Grid { nodes: Vec<f64>, jets: Vec<Jet> },
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialProfile::Closed { a, b, .. } => write!(f, "Closed[{a}, {b}]"),
            RadialProfile::Grid { nodes, .. } => write!(f, "Grid({} nodes)", nodes.len()),
        }
    }
}

impl RadialProfile {
    pub fn closed(a: f64, b: f64, f: impl Fn(f64) -> Jet + Send + Sync + 'static) -> Self {
        RadialProfile::Closed { a, b, f: Arc::new(f) }
    }

    pub fn constant(a: f64, b: f64, c: f64) -> Self {
        Self::closed(a, b, move |_| Jet::constant(c))
    }

    /// Grid profile from node jets. Nodes must be strictly increasing.
    pub fn from_jets(nodes: Vec<f64>, jets: Vec<Jet>) -> Result<Self> {
        if nodes.len() != jets.len() {
            return Err(SmmsError::DimensionMismatch(nodes.len(), jets.len()));
        }
        if nodes.len() < MIN_GRID {
            return Err(SmmsError::InvalidParameter(format!("grid profiles need >= {MIN_GRID} samples, got {}", nodes.len())));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SmmsError::InvalidParameter("grid nodes must be strictly increasing".into()));
        }
        if jets.iter().any(|j| !(j.v.is_finite() && j.d1.is_finite() && j.d2.is_finite())) {
            return Err(SmmsError::InvalidParameter("grid profile has non-finite samples".into()));
        }
        Ok(RadialProfile::Grid { nodes, jets })
    }

    /// Grid profile from uniformly spaced values; derivatives come from
    /// fourth-order finite differences.
    pub fn from_samples(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(SmmsError::DimensionMismatch(nodes.len(), values.len()));
        }
        if nodes.len() < MIN_GRID {
            return Err(SmmsError::InvalidParameter(format!("grid profiles need >= {MIN_GRID} samples, got {}", nodes.len())));
        }
        let h = (nodes[nodes.len() - 1] - nodes[0]) / (nodes.len() - 1) as f64;
        let uniform = nodes.iter().enumerate().all(|(i, x)| (x - nodes[0] - i as f64 * h).abs() <= 1e-9 * h.max(1.0));
        if !uniform {
            return Err(SmmsError::InvalidParameter("sampled profiles need a uniform grid".into()));
        }
        let d1 = fd_first(&values, h)?;
        let d2 = fd_second(&values, h)?;
        let jets = (0..values.len()).map(|i| Jet::new(values[i], d1[i], d2[i])).collect();
        Self::from_jets(nodes, jets)
    }

    /// Sample a closure on a uniform grid, keeping only values.
    pub fn sampled(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let nodes = crate::numerics::linspace(a, b, n);
        let values = nodes.iter().map(|&r| f(r)).collect();
        Self::from_samples(nodes, values)
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            RadialProfile::Closed { a, b, .. } => (*a, *b),
            RadialProfile::Grid { nodes, .. } => (nodes[0], nodes[nodes.len() - 1]),
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, RadialProfile::Grid { .. })
    }

    pub fn eval(&self, r: f64) -> Jet {
        match self {
            RadialProfile::Closed { f, .. } => f(r),
            RadialProfile::Grid { nodes, jets } => {
                let n = nodes.len();
                let i = match nodes.binary_search_by(|x| x.partial_cmp(&r).unwrap_or(std::cmp::Ordering::Less)) {
                    Ok(i) => return jets[i],
                    Err(i) => i.clamp(1, n - 1) - 1,
                };
                let e = hermite_eval(nodes[i], nodes[i + 1], jets[i].as_array(), jets[i + 1].as_array(), r);
                Jet::new(e[0], e[1], e[2])
            }
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).v
    }

    /// Pointwise map of jets, producing a profile of the same kind.
    pub fn map(&self, g: impl Fn(Jet) -> Jet + Send + Sync + 'static) -> RadialProfile {
        match self {
            RadialProfile::Closed { a, b, f } => {
                let f = f.clone();
                RadialProfile::closed(*a, *b, move |r| g(f(r)))
            }
            RadialProfile::Grid { nodes, jets } => {
                RadialProfile::Grid { nodes: nodes.clone(), jets: jets.iter().map(|&j| g(j)).collect() }
            }
        }
    }

    /// Pointwise product; a grid operand makes the result a grid on its nodes.
    pub fn mul(&self, other: &RadialProfile) -> RadialProfile {
        self.zip(other, |a, b| a.mul(b))
    }

    pub fn zip(&self, other: &RadialProfile, g: impl Fn(Jet, Jet) -> Jet + Send + Sync + 'static) -> RadialProfile {
        match (self, other) {
            (RadialProfile::Closed { a, b, f }, RadialProfile::Closed { f: h, .. }) => {
                let (f, h) = (f.clone(), h.clone());
                RadialProfile::closed(*a, *b, move |r| g(f(r), h(r)))
            }
            (RadialProfile::Grid { nodes, jets }, o) => RadialProfile::Grid {
                nodes: nodes.clone(),
                jets: nodes.iter().zip(jets).map(|(&r, &j)| g(j, o.eval(r))).collect(),
            },
            (s, RadialProfile::Grid { nodes, jets }) => RadialProfile::Grid {
                nodes: nodes.clone(),
                jets: nodes.iter().zip(jets).map(|(&r, &j)| g(s.eval(r), j)).collect(),
            },
        }
    }

    /// Restrict the domain; grid profiles keep the nodes inside `[a, b]`.
    pub fn restricted(&self, a: f64, b: f64) -> Result<RadialProfile> {
        match self {
            RadialProfile::Closed { f, .. } => Ok(RadialProfile::Closed { a, b, f: f.clone() }),
            RadialProfile::Grid { nodes, jets } => {
                let keep: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i] >= a - 1e-12 && nodes[i] <= b + 1e-12).collect();
                RadialProfile::from_jets(keep.iter().map(|&i| nodes[i]).collect(), keep.iter().map(|&i| jets[i]).collect())
            }
        }
    }

    pub fn nodes(&self) -> Option<&[f64]> {
        match self {
            RadialProfile::Grid { nodes, .. } => Some(nodes),
            RadialProfile::Closed { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_profile_interpolates_closed_form() {
        let g = RadialProfile::sampled(0.0, 2.0, 129, |r| (1.5 * r).sin()).unwrap();
        for &r in &[0.013, 0.5, 1.234, 1.99] {
            let j = g.eval(r);
            assert!((j.v - (1.5 * r).sin()).abs() < 1e-8);
            assert!((j.d1 - 1.5 * (1.5 * r).cos()).abs() < 1e-6);
            assert!((j.d2 + 2.25 * (1.5 * r).sin()).abs() < 1e-4);
        }
    }

    #[test]
    fn jet_algebra_matches_chain_rule() {
        let x = Jet::new(1.3, 0.7, -0.2);
        let p = x.powf(2.0);
        let q = x.mul(x);
        assert!((p.v - q.v).abs() < 1e-14 && (p.d1 - q.d1).abs() < 1e-14 && (p.d2 - q.d2).abs() < 1e-14);
        let e = x.ln().exp();
        assert!((e.d2 - x.d2).abs() < 1e-14);
    }

    #[test]
    fn rejects_short_grids() {
        assert!(RadialProfile::sampled(0.0, 1.0, 10, |r| r).is_err());
    }
}
