//! The Volterra kernel of fractional Brownian motion and the closed-form
//! objects around it: covariance, the weight ψ, inner products of indicators,
//! the one-dimensional right-sided fractional integral, and the transfer
//! operator applied to an indicator.

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;

/// Validated Hurst index H in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HurstParam(f64);

impl HurstParam {
    pub fn new(h: f64) -> Result<Self> {
        if h > 0.0 && h < 1.0 {
            Ok(Self(h))
        } else {
            Err(Error::InvalidHurst(h))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// H = 1/2: the kernel is the identity and fBm is standard Brownian motion.
    pub fn is_brownian(self) -> bool {
        self.0 == 0.5
    }

    /// The ψ-weighted inner product and chaos machinery need H >= 1/2.
    pub fn supports_chaos(self) -> bool {
        self.0 >= 0.5
    }

    pub fn require_chaos(self) -> Result<Self> {
        if self.supports_chaos() {
            Ok(self)
        } else {
            Err(Error::HurstBelowHalf(self.0))
        }
    }
}

impl std::fmt::Display for HurstParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Half-open interval (a, b] inside [0, 1]. `a == b` is the empty set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a.is_finite() && b.is_finite() && 0.0 <= a && a <= b && b <= 1.0 {
            Ok(Self { a, b })
        } else {
            Err(Error::InvalidInterval { a, b })
        }
    }

    pub const EMPTY: Interval = Interval { a: 0.0, b: 0.0 };

    #[inline]
    pub fn start(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn end(&self) -> f64 {
        self.b
    }

    #[inline]
    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.a >= self.b
    }

    /// (a ∧ t, b ∧ t]
    pub fn clip(&self, t: f64) -> Interval {
        Interval {
            a: self.a.min(t),
            b: self.b.min(t),
        }
    }

    pub fn overlap(&self, other: &Interval) -> f64 {
        (self.b.min(other.b) - self.a.max(other.a)).max(0.0)
    }

    pub fn is_disjoint(&self, other: &Interval) -> bool {
        self.is_empty() || other.is_empty() || self.b <= other.a || other.b <= self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a < x && x <= self.b
    }
}

/// c_H = (2H Γ(3/2 - H) / (Γ(H + 1/2) Γ(2 - 2H)))^{1/2}
pub fn normalizing_constant(h: HurstParam) -> f64 {
    let h = h.value();
    if h == 0.5 {
        return 1.0;
    }
    (2.0 * h * gamma(1.5 - h) / (gamma(h + 0.5) * gamma(2.0 - 2.0 * h))).sqrt()
}

/// K_H(t, s) for 0 < s < t <= 1, evaluated from its defining integral
///
/// K_H(t,s) = c_H (t-s)^{H-1/2} + c_H (1/2-H) ∫_s^t (u-s)^{H-3/2} (1 - (s/u)^{1/2-H}) du.
///
/// In r = u - s the integrand is r^{H-3/2} (1 - (1 + r/s)^{H-1/2}). The
/// range is split at r = s. Below, r^{H-1/2} times a bounded factor, handled
/// by r = s w^{1/(H+1/2)}; above, the factor varies on a logarithmic scale
/// and r = s e^v makes it smooth.
pub fn kernel_k(h: HurstParam, t: f64, s: f64, q: &QuadratureSpec) -> Result<f64> {
    if !(s > 0.0 && s < t && t <= 1.0) {
        return Err(Error::domain(format!(
            "kernel needs 0 < s < t <= 1, got t = {t}, s = {s}"
        )));
    }
    if h.is_brownian() {
        return Ok(1.0);
    }
    let hv = h.value();
    let c = normalizing_constant(h);
    let len = t - s;
    let p = hv + 0.5;
    let a = hv - 0.5;
    // (1 - (1 + r/s)^a) without cancellation
    let bracket = |r: f64| -(a * (r / s).ln_1p()).exp_m1();

    let head = len.min(s);
    let phi = |w: f64| {
        let r = head * w.powf(1.0 / p);
        if r <= 0.0 {
            return -a / s;
        }
        bracket(r) / r
    };
    let mut integral = q.integrate(phi, 0.0, 1.0)? * head.powf(p) / p;
    if len > s {
        let tail = |v: f64| {
            let r = s * v.exp();
            r.powf(a) * bracket(r)
        };
        integral += q.integrate(tail, 0.0, (len / s).ln())?;
    }
    Ok(c * len.powf(a) + c * (0.5 - hv) * integral)
}

/// K_H(u, s) with the support convention K_H(u, s) = 0 for s >= u.
pub fn kernel_or_zero(h: HurstParam, u: f64, s: f64, q: &QuadratureSpec) -> Result<f64> {
    if s >= u {
        Ok(0.0)
    } else {
        kernel_k(h, u, s, q)
    }
}

/// R(t, s) = (t^{2H} + s^{2H} - |t-s|^{2H}) / 2
pub fn covariance_r(h: HurstParam, t: f64, s: f64) -> f64 {
    let e = 2.0 * h.value();
    0.5 * (t.powf(e) + s.powf(e) - (t - s).abs().powf(e))
}

/// ψ(s, t) = H(2H-1)|s-t|^{2H-2}, defined for H > 1/2 and s != t.
pub fn psi(h: HurstParam, s: f64, t: f64) -> Result<f64> {
    let hv = h.value();
    if hv <= 0.5 {
        return Err(Error::domain(format!("psi needs H > 1/2, got {hv}")));
    }
    if s == t {
        return Err(Error::domain("psi is not defined on the diagonal s = t"));
    }
    Ok(hv * (2.0 * hv - 1.0) * (s - t).abs().powf(2.0 * hv - 2.0))
}

/// ⟨1_{I1}, 1_{I2}⟩ in the ℋ inner product, i.e. E[(B_b - B_a)(B_d - B_c)].
pub fn indicator_inner_product(h: HurstParam, i1: &Interval, i2: &Interval) -> Result<f64> {
    let h = h.require_chaos()?;
    if i1.is_empty() || i2.is_empty() {
        return Ok(0.0);
    }
    if h.is_brownian() {
        return Ok(i1.overlap(i2));
    }
    let e = 2.0 * h.value();
    let (a, b, c, d) = (i1.a, i1.b, i2.a, i2.b);
    let p = |x: f64| x.abs().powf(e);
    Ok(0.5 * (p(b - c) + p(a - d) - p(a - c) - p(b - d)))
}

/// (1/Γ(α)) ∫_x^t f(u) (u-x)^{α-1} du, via u = x + (t-x) w^{1/α}, which turns
/// the weight into the constant (t-x)^α / Γ(α+1).
pub fn fractional_integral<F: Fn(f64) -> f64>(
    alpha: f64,
    f: F,
    t: f64,
    x: f64,
    q: &QuadratureSpec,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("fractional order must lie in (0, 1), got {alpha}")));
    }
    if !(0.0 <= x && x < t && t <= 1.0) {
        return Err(Error::domain(format!(
            "fractional integral needs 0 <= x < t <= 1, got x = {x}, t = {t}"
        )));
    }
    let len = t - x;
    let inner = q.integrate(|w| f(x + len * w.powf(1.0 / alpha)), 0.0, 1.0)?;
    Ok(inner * len.powf(alpha) / gamma(alpha + 1.0))
}

/// Right-hand side of the fractional-integral representation of the kernel,
/// c_H Γ(H+1/2) s^{1/2-H} (I^{H-1/2}_{1-} (x^{H-1/2} 1_{[0,t]}))(s), for H > 1/2.
pub fn kernel_via_fractional_integral(
    h: HurstParam,
    t: f64,
    s: f64,
    q: &QuadratureSpec,
) -> Result<f64> {
    let hv = h.value();
    if hv <= 0.5 {
        return Err(Error::domain(format!(
            "fractional-integral form needs H > 1/2, got {hv}"
        )));
    }
    let alpha = hv - 0.5;
    // the indicator cuts the upper limit from 1 to t
    let frac = fractional_integral(alpha, |u| u.powf(alpha), t, s, q)?;
    Ok(normalizing_constant(h) * gamma(hv + 0.5) * s.powf(-alpha) * frac)
}

/// (Γ_H^{(1)} 1_{I} 1_{[0,t]})(s) = K_H(b∧t, s) - K_H(a∧t, s).
pub fn gamma1_indicator(
    h: HurstParam,
    interval: &Interval,
    t: f64,
    s: f64,
    q: &QuadratureSpec,
) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::domain(format!("transfer image needs s in (0, 1), got {s}")));
    }
    let clipped = interval.clip(t);
    if clipped.is_empty() || s >= clipped.b {
        return Ok(0.0);
    }
    Ok(kernel_or_zero(h, clipped.b, s, q)? - kernel_or_zero(h, clipped.a, s, q)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight() -> QuadratureSpec {
        QuadratureSpec::adaptive(10, 1e-12).unwrap()
    }

    fn hp(h: f64) -> HurstParam {
        HurstParam::new(h).unwrap()
    }

    #[test]
    fn hurst_validation() {
        assert!(HurstParam::new(0.0).is_err());
        assert!(HurstParam::new(1.0).is_err());
        assert!(HurstParam::new(f64::NAN).is_err());
        assert!(hp(0.3).require_chaos().is_err());
        assert!(hp(0.5).is_brownian());
        assert!(hp(0.5).supports_chaos());
    }

    #[test]
    fn interval_validation() {
        assert!(Interval::new(0.5, 0.2).is_err());
        assert!(Interval::new(-0.1, 0.2).is_err());
        assert!(Interval::new(0.2, 1.1).is_err());
        assert!(Interval::new(0.3, 0.3).unwrap().is_empty());
    }

    #[test]
    fn normalizing_constant_values() {
        assert_eq!(normalizing_constant(hp(0.5)), 1.0);
        // arbitrary-precision reference values
        let cases = [
            (0.6, 1.076_005_184_131_807_2),
            (0.75, 1.069_644_635_031_990_3),
            (0.9, 0.811_220_648_143_352_5),
        ];
        for (h, expected) in cases {
            assert!((normalizing_constant(hp(h)) - expected).abs() < 1e-12, "H = {h}");
        }
        // Γ(2-2H) blows up as H -> 1, so c_H -> 0
        assert!(normalizing_constant(hp(0.999)) < normalizing_constant(hp(0.99)));
        assert!(normalizing_constant(hp(0.99999)) < 0.02);
    }

    #[test]
    fn kernel_matches_reference_values() {
        let q = tight();
        let cases = [
            (0.6, 0.1, 1.104_311_054_719_638_7),
            (0.6, 0.9, 0.855_543_038_445_604_3),
            (0.75, 0.5, 0.937_591_963_698_057_2),
            (0.75, 0.001, 3.129_957_768_034_79),
            (0.9, 0.1, 1.212_574_786_079_335_4),
            (0.9, 0.001, 6.483_060_861_215_905),
        ];
        for (h, s, expected) in cases {
            let k = kernel_k(hp(h), 1.0, s, &q).unwrap();
            assert!((k - expected).abs() < 1e-10 * expected, "H={h} s={s}: {k}");
        }
    }

    #[test]
    fn kernel_brownian_is_one() {
        assert_eq!(kernel_k(hp(0.5), 0.7, 0.2, &tight()).unwrap(), 1.0);
    }

    #[test]
    fn kernel_vanishes_at_diagonal() {
        let q = tight();
        // K ~ c_H (t-s)^{H-1/2} near the diagonal
        let near = kernel_k(hp(0.75), 0.6, 0.6 - 1e-10, &q).unwrap();
        assert!(near.abs() < 1e-2);
        let nearer = kernel_k(hp(0.75), 0.6, 0.6 - 1e-14, &q).unwrap();
        assert!(nearer.abs() < near.abs());
    }

    #[test]
    fn kernel_rejects_bad_arguments() {
        let q = tight();
        assert!(kernel_k(hp(0.75), 0.5, 0.5, &q).is_err());
        assert!(kernel_k(hp(0.75), 0.5, 0.0, &q).is_err());
        assert!(kernel_k(hp(0.75), 0.5, 0.7, &q).is_err());
    }

    #[test]
    fn kernel_defined_for_small_hurst() {
        let k = kernel_k(hp(0.3), 1.0, 0.5, &tight()).unwrap();
        assert!(k.is_finite() && k > 0.0);
    }

    #[test]
    fn kernel_is_self_similar() {
        let q = tight();
        let h = hp(0.8);
        let lhs = kernel_k(h, 0.5, 0.2, &q).unwrap();
        let rhs = 0.5f64.powf(0.3) * kernel_k(h, 1.0, 0.4, &q).unwrap();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn fractional_integral_representation_agrees() {
        let q = tight();
        for h in [0.6, 0.75, 0.9] {
            for s in [0.05, 0.3, 0.55] {
                let direct = kernel_k(hp(h), 0.7, s, &q).unwrap();
                let frac = kernel_via_fractional_integral(hp(h), 0.7, s, &q).unwrap();
                assert!((direct - frac).abs() < 1e-9, "H={h} s={s}");
            }
        }
    }

    #[test]
    fn covariance_identities() {
        let h = hp(0.75);
        assert!((covariance_r(h, 0.4, 0.4) - 0.4f64.powf(1.5)).abs() < 1e-15);
        assert_eq!(covariance_r(h, 0.4, 0.0), 0.0);
        let b = hp(0.5);
        assert!((covariance_r(b, 0.3, 0.8) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn psi_values() {
        let h = hp(0.75);
        assert!((psi(h, 0.0, 1.0).unwrap() - 0.375).abs() < 1e-15);
        assert!((psi(h, 0.5, 0.25).unwrap() - 0.75).abs() < 1e-14);
        assert_eq!(psi(h, 0.1, 0.7).unwrap(), psi(h, 0.7, 0.1).unwrap());
        assert!(psi(h, 0.3, 0.3).is_err());
        assert!(psi(hp(0.5), 0.1, 0.3).is_err());
    }

    #[test]
    fn indicator_inner_product_cases() {
        let h = hp(0.75);
        let i = Interval::new(0.2, 0.6).unwrap();
        assert!((indicator_inner_product(h, &i, &i).unwrap() - 0.4f64.powf(1.5)).abs() < 1e-15);
        assert_eq!(indicator_inner_product(h, &i, &Interval::EMPTY).unwrap(), 0.0);
        let left = Interval::new(0.0, 0.5).unwrap();
        let right = Interval::new(0.5, 1.0).unwrap();
        // (1 - 2 * 0.5^{1.5}) / 2, exact
        let v = indicator_inner_product(h, &left, &right).unwrap();
        assert!((v - 0.146_446_609_406_726_24).abs() < 1e-15);
        assert_eq!(indicator_inner_product(hp(0.5), &left, &right).unwrap(), 0.0);
        assert!(indicator_inner_product(hp(0.4), &left, &right).is_err());
    }

    #[test]
    fn inner_product_reproduces_covariance() {
        let h = hp(0.7);
        for (t, s) in [(0.3, 0.9), (1.0, 0.5), (0.25, 0.25)] {
            let ip = indicator_inner_product(
                h,
                &Interval::new(0.0, t).unwrap(),
                &Interval::new(0.0, s).unwrap(),
            )
            .unwrap();
            assert!((ip - covariance_r(h, t, s)).abs() < 1e-15);
        }
    }

    #[test]
    fn fractional_integral_of_constants() {
        let q = tight();
        assert_eq!(fractional_integral(0.3, |_| 0.0, 0.9, 0.1, &q).unwrap(), 0.0);
        let v = fractional_integral(0.3, |_| 1.0, 0.9, 0.1, &q).unwrap();
        assert!((v - 0.8f64.powf(0.3) / gamma(1.3)).abs() < 1e-14);
        assert!(fractional_integral(1.2, |_| 1.0, 0.9, 0.1, &q).is_err());
        assert!(fractional_integral(0.3, |_| 1.0, 0.1, 0.9, &q).is_err());
    }

    #[test]
    fn gamma1_support_convention() {
        let q = tight();
        let h = hp(0.75);
        let i = Interval::new(0.2, 0.6).unwrap();
        assert_eq!(gamma1_indicator(h, &i, 1.0, 0.6, &q).unwrap(), 0.0);
        assert_eq!(gamma1_indicator(h, &i, 0.4, 0.45, &q).unwrap(), 0.0);
        assert_eq!(gamma1_indicator(h, &i, 0.1, 0.05, &q).unwrap(), 0.0);
        // between a and b only the K(b, .) term survives
        let v = gamma1_indicator(h, &i, 1.0, 0.3, &q).unwrap();
        assert!((v - kernel_k(h, 0.6, 0.3, &q).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn gamma1_brownian_is_indicator() {
        let q = tight();
        let h = hp(0.5);
        let i = Interval::new(0.2, 0.6).unwrap();
        assert_eq!(gamma1_indicator(h, &i, 1.0, 0.3, &q).unwrap(), 1.0);
        assert_eq!(gamma1_indicator(h, &i, 1.0, 0.1, &q).unwrap(), 0.0);
        assert_eq!(gamma1_indicator(h, &i, 0.4, 0.5, &q).unwrap(), 0.0);
        assert_eq!(gamma1_indicator(h, &i, 0.4, 0.35, &q).unwrap(), 1.0);
    }
}
