//! Deterministic weight functions w(x) that get integrated against noise paths.

use crate::error::{Error, Result};
use crate::fbm_kernel::Interval;
use crate::kernel_table::KernelPrimitive;
use crate::quadrature::QuadratureSpec;

pub trait Weight: Sync {
    /// ∫_lo^hi w(x) dx
    fn integral(&self, lo: f64, hi: f64) -> Result<f64>;

    /// A primitive of w, when one is cheap to evaluate. Path integration uses
    /// it to evaluate each breakpoint once instead of twice.
    fn antiderivative(&self, _x: f64) -> Option<f64> {
        None
    }
}

impl<W: Weight + ?Sized> Weight for &W {
    fn integral(&self, lo: f64, hi: f64) -> Result<f64> {
        (**self).integral(lo, hi)
    }

    fn antiderivative(&self, x: f64) -> Option<f64> {
        (**self).antiderivative(x)
    }
}

/// w(x) = Σ c_k x^k, integrated exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    pub fn constant(c: f64) -> Self {
        Self(vec![c])
    }

    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    fn primitive(&self, x: f64) -> f64 {
        self.0
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (k, c)| acc * x + c / (k + 1) as f64)
            * x
    }
}

impl Weight for Polynomial {
    fn integral(&self, lo: f64, hi: f64) -> Result<f64> {
        Ok(self.primitive(hi) - self.primitive(lo))
    }

    fn antiderivative(&self, x: f64) -> Option<f64> {
        Some(self.primitive(x))
    }
}

/// An arbitrary pointwise weight, integrated by quadrature on each piece.
pub struct FnWeight<F> {
    f: F,
    quad: QuadratureSpec,
}

impl<F: Fn(f64) -> f64 + Sync> FnWeight<F> {
    pub fn new(f: F, quad: QuadratureSpec) -> Self {
        Self { f, quad }
    }
}

impl<F: Fn(f64) -> f64 + Sync> Weight for FnWeight<F> {
    fn integral(&self, lo: f64, hi: f64) -> Result<f64> {
        self.quad.integrate(&self.f, lo, hi)
    }
}

/// K_H(u, ·), with K_H(u, s) = 0 for s >= u.
#[derive(Debug, Clone, Copy)]
pub struct KernelWeight<'a> {
    table: &'a KernelPrimitive,
    u: f64,
}

impl<'a> KernelWeight<'a> {
    pub fn new(table: &'a KernelPrimitive, u: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain(format!("kernel time must lie in [0, 1], got {u}")));
        }
        Ok(Self { table, u })
    }
}

impl Weight for KernelWeight<'_> {
    fn integral(&self, lo: f64, hi: f64) -> Result<f64> {
        Ok(self.table.integral(self.u, lo, hi))
    }

    fn antiderivative(&self, x: f64) -> Option<f64> {
        Some(self.table.primitive(self.u, x))
    }
}

/// Γ_H^{(1)}(1_I 1_{[0,t]}) = K_H(b∧t, ·) - K_H(a∧t, ·).
#[derive(Debug, Clone, Copy)]
pub struct IndicatorImage<'a> {
    table: &'a KernelPrimitive,
    clipped: Interval,
}

impl<'a> IndicatorImage<'a> {
    pub fn new(table: &'a KernelPrimitive, interval: &Interval, t: f64) -> Self {
        Self {
            table,
            clipped: interval.clip(t),
        }
    }

    pub fn interval(&self) -> Interval {
        self.clipped
    }
}

impl Weight for IndicatorImage<'_> {
    fn integral(&self, lo: f64, hi: f64) -> Result<f64> {
        Ok(self.antiderivative(hi).unwrap_or(0.0) - self.antiderivative(lo).unwrap_or(0.0))
    }

    #[inline]
    fn antiderivative(&self, x: f64) -> Option<f64> {
        if self.clipped.is_empty() {
            return Some(0.0);
        }
        Some(
            self.table.primitive(self.clipped.end(), x)
                - self.table.primitive(self.clipped.start(), x),
        )
    }
}
