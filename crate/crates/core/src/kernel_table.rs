//! Tabulated primitive of the fBm kernel.
//!
//! Every noise functional in this crate integrates K_H(u, ·) against a
//! piecewise-constant path, so what is needed is Φ_u(x) = ∫_0^x K_H(u, s) ds.
//! Self-similarity K_H(cu, cs) = c^{H-1/2} K_H(u, s) gives
//! Φ_u(x) = u^{H+1/2} Φ_1(x/u), so a single table per H suffices.
//!
//! Φ_1 behaves like y^{3/2-H} at 0 and like Φ_1(1) - C(1-y)^{H+1/2} at 1.
//! Each half of [0, 1] is tabulated in a graded variable (y = w^4 on the left,
//! 1 - y = v^4 on the right) and interpolated by cubic Hermite splines whose
//! node derivatives are exact kernel values.

use crate::error::Result;
use crate::fbm_kernel::{kernel_k, HurstParam};
use crate::quadrature::{GaussRule, QuadratureSpec};

const GRADING: i32 = 4;
const DEFAULT_NODES: usize = 1024;

#[derive(Debug, Clone)]
struct HermiteTable {
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl HermiteTable {
    #[inline]
    fn eval(&self, w: f64) -> f64 {
        let last = self.values.len() - 1;
        let pos = w / self.step;
        let j = (pos as usize).min(last - 1);
        let u = pos - j as f64;
        let (y0, y1) = (self.values[j], self.values[j + 1]);
        let (d0, d1) = (self.slopes[j] * self.step, self.slopes[j + 1] * self.step);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * d0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * d1
    }
}

/// Φ_1 for one Hurst index; H = 1/2 is exact (Φ_u(x) = min(x, u)).
#[derive(Debug, Clone)]
pub struct KernelPrimitive {
    hurst: HurstParam,
    tables: Option<(HermiteTable, HermiteTable)>,
    half: f64,
    total: f64,
}

impl KernelPrimitive {
    pub fn new(hurst: HurstParam, q: &QuadratureSpec) -> Result<Self> {
        Self::with_nodes(hurst, q, DEFAULT_NODES)
    }

    pub fn with_nodes(hurst: HurstParam, q: &QuadratureSpec, nodes: usize) -> Result<Self> {
        let hurst = hurst.require_chaos()?;
        if hurst.is_brownian() {
            return Ok(Self {
                hurst,
                tables: None,
                half: 0.5,
                total: 1.0,
            });
        }
        let nodes = nodes.max(16);
        let wmax = 0.5f64.powf(1.0 / GRADING as f64);
        let g = GRADING as f64;

        // dΦ/dw in the graded variables; both vanish at w = 0.
        let left_slope = |w: f64| -> Result<f64> {
            if w <= 0.0 {
                return Ok(0.0);
            }
            let s = w.powi(GRADING);
            Ok(kernel_k(hurst, 1.0, s, q)? * g * w.powi(GRADING - 1))
        };
        let right_slope = |v: f64| -> Result<f64> {
            if v <= 0.0 {
                return Ok(0.0);
            }
            let s = 1.0 - v.powi(GRADING);
            // K_H(1, s) -> 0 as s -> 1
            if s >= 1.0 {
                return Ok(0.0);
            }
            Ok(kernel_k(hurst, 1.0, s, q)? * g * v.powi(GRADING - 1))
        };

        let left = build_table(&left_slope, wmax, nodes)?;
        let right = build_table(&right_slope, wmax, nodes)?;
        let half = *left.values.last().expect("non-empty table");
        let total = half + *right.values.last().expect("non-empty table");
        Ok(Self {
            hurst,
            tables: Some((left, right)),
            half,
            total,
        })
    }

    pub fn hurst(&self) -> HurstParam {
        self.hurst
    }

    /// Φ_1(y) = ∫_0^y K_H(1, s) ds for y in [0, 1].
    #[inline]
    pub fn unit_primitive(&self, y: f64) -> f64 {
        let y = y.clamp(0.0, 1.0);
        match &self.tables {
            None => y,
            Some((left, right)) => {
                if y <= 0.5 {
                    left.eval(y.sqrt().sqrt())
                } else {
                    self.total - right.eval((1.0 - y).sqrt().sqrt())
                }
            }
        }
    }

    /// Φ_u(x) = ∫_0^{x ∧ u} K_H(u, s) ds.
    #[inline]
    pub fn primitive(&self, u: f64, x: f64) -> f64 {
        if u <= 0.0 || x <= 0.0 {
            return 0.0;
        }
        let y = (x / u).min(1.0);
        match &self.tables {
            None => y * u,
            Some(_) => u.powf(self.hurst.value() + 0.5) * self.unit_primitive(y),
        }
    }

    /// ∫_lo^hi K_H(u, s) ds
    #[inline]
    pub fn integral(&self, u: f64, lo: f64, hi: f64) -> f64 {
        self.primitive(u, hi) - self.primitive(u, lo)
    }

    /// Φ_1(1/2), exposed for diagnostics.
    pub fn half_value(&self) -> f64 {
        self.half
    }
}

fn build_table<F>(slope: &F, wmax: f64, nodes: usize) -> Result<HermiteTable>
where
    F: Fn(f64) -> Result<f64>,
{
    let rule = GaussRule::new(8);
    let step = wmax / nodes as f64;
    let mut values = Vec::with_capacity(nodes + 1);
    let mut slopes = Vec::with_capacity(nodes + 1);
    values.push(0.0);
    slopes.push(slope(0.0)?);
    let mut acc = 0.0;
    for j in 0..nodes {
        let a = j as f64 * step;
        let b = a + step;
        acc += rule.try_apply(slope, a, b)?;
        values.push(acc);
        slopes.push(slope(b)?);
    }
    Ok(HermiteTable {
        step,
        values,
        slopes,
    })
}
