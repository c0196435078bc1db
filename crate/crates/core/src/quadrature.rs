//! Gauss-Legendre panel quadrature.
//!
//! Every integrand handed to this module has already been transformed so that
//! it is bounded on its range; endpoint singularities are removed by the
//! caller with a power substitution.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub(crate) fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Fixed-rule integral of a fallible integrand over [a, b].
    pub(crate) fn try_apply<F>(&self, f: &F, a: f64, b: f64) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        for (x, w) in self.points() {
            sum += w * f(mid + half * x)?;
        }
        Ok(sum * half)
    }

    /// Returns (integral, integral of |f|) over [a, b].
    #[inline]
    fn apply<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> (f64, f64) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        let mut abs = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * x);
            sum += w * v;
            abs += w * v.abs();
        }
        (sum * half, abs * half.abs())
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadratureScheme {
    /// Bisect panels until two successive estimates agree to the tolerance.
    Adaptive,
    /// A fixed number of equal panels, no error control.
    Composite { panels: usize },
}

/// Quadrature settings shared by the kernel evaluators.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    scheme: QuadratureScheme,
    tolerance: f64,
    max_depth: u32,
    rule: Arc<GaussRule>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::adaptive(10, 1e-6).expect("default quadrature spec is valid")
    }
}

impl QuadratureSpec {
    pub fn new(scheme: QuadratureScheme, nodes: usize, tolerance: f64) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::domain(format!(
                "quadrature needs at least 2 nodes per panel, got {nodes}"
            )));
        }
        if !(tolerance > 0.0) {
            return Err(Error::domain(format!(
                "quadrature tolerance must be positive, got {tolerance}"
            )));
        }
        if let QuadratureScheme::Composite { panels: 0 } = scheme {
            return Err(Error::domain("composite quadrature needs at least one panel"));
        }
        Ok(Self {
            scheme,
            tolerance,
            max_depth: 60,
            rule: Arc::new(GaussRule::new(nodes)),
        })
    }

    pub fn adaptive(nodes: usize, tolerance: f64) -> Result<Self> {
        Self::new(QuadratureScheme::Adaptive, nodes, tolerance)
    }

    pub fn with_tolerance(&self, tolerance: f64) -> Result<Self> {
        Self::new(self.scheme, self.rule.len(), tolerance)
    }

    pub fn scheme(&self) -> QuadratureScheme {
        self.scheme
    }

    pub fn nodes(&self) -> usize {
        self.rule.len()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Integrates `f` over [a, b]. The tolerance is relative to the integral
    /// of |f|, so integrands that vanish identically are accepted at once.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        match self.scheme {
            QuadratureScheme::Composite { panels } => {
                let h = (b - a) / panels as f64;
                Ok((0..panels)
                    .map(|i| {
                        let lo = a + i as f64 * h;
                        self.rule.apply(&f, lo, lo + h).0
                    })
                    .sum())
            }
            QuadratureScheme::Adaptive => {
                let (whole, abs) = self.rule.apply(&f, a, b);
                let scale = abs.max(f64::MIN_POSITIVE);
                // halving stops at the rounding level of the whole integral
                let floor = 64.0 * f64::EPSILON * scale;
                self.refine(&f, a, b, whole, self.tolerance * scale, floor, 0)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn refine<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        floor: f64,
        depth: u32,
    ) -> Result<f64> {
        let mid = 0.5 * (a + b);
        let (left, _) = self.rule.apply(f, a, mid);
        let (right, _) = self.rule.apply(f, mid, b);
        let split = left + right;
        let err = (split - whole).abs();
        if err <= tol.max(floor) || !err.is_finite() && !split.is_finite() {
            return Ok(split);
        }
        if depth >= self.max_depth || mid <= a || mid >= b {
            return Err(Error::Quadrature {
                tolerance: self.tolerance,
                estimate: err,
            });
        }
        let l = self.refine(f, a, mid, left, 0.5 * tol, floor, depth + 1)?;
        let r = self.refine(f, mid, b, right, 0.5 * tol, floor, depth + 1)?;
        Ok(l + r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = GaussRule::new(5);
        // degree 9 is the limit for 5 nodes
        let (v, _) = rule.apply(&|x: f64| x.powi(8) + 3.0 * x.powi(3), -1.0, 1.0);
        assert!((v - 2.0 / 9.0).abs() < 1e-14);
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn odd_rule_has_center_node() {
        let rule = GaussRule::new(7);
        assert!(rule.nodes[3].abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_sqrt_endpoint() {
        let q = QuadratureSpec::adaptive(8, 1e-10).unwrap();
        let v = q.integrate(|x: f64| x.sqrt(), 0.0, 1.0).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn zero_integrand_is_accepted() {
        let q = QuadratureSpec::default();
        assert_eq!(q.integrate(|_| 0.0, 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn composite_scheme_runs_fixed_panels() {
        let q = QuadratureSpec::new(QuadratureScheme::Composite { panels: 4 }, 4, 1e-6).unwrap();
        let v = q.integrate(|x: f64| x.exp(), 0.0, 1.0).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(QuadratureSpec::adaptive(1, 1e-6).is_err());
        assert!(QuadratureSpec::adaptive(4, 0.0).is_err());
        assert!(QuadratureSpec::new(QuadratureScheme::Composite { panels: 0 }, 4, 1e-6).is_err());
    }

    #[test]
    fn unreachable_tolerance_is_reported() {
        let q = QuadratureSpec::adaptive(4, 1e-10).unwrap();
        // 1/x is not integrable: every panel at 0 contributes the same amount
        let r = q.integrate(|x: f64| x.recip(), 0.0, 1.0);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
