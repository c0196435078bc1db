//! The approximating functionals built from one noise path θ_ε:
//! η_ε, the product form Y^ε, band integrals near the diagonal, the
//! diagonal-excluded I_{n,ε}(f)_t and the three-point functional F_ε.
//!
//! Multi-dimensional integrals run over a uniform grid of m cells. Inside a
//! cell the integrand factors, so each coordinate contributes the exact cell
//! integrals c_i = ∫_{cell i} w θ; only the band indicators are frozen at
//! cell centers. With step δ = 1/m, cells i and j are "near" when
//! |i - j| δ < ε, i.e. |i - j| <= D.

use crate::error::{Error, Result};
use crate::kernel_table::KernelPrimitive;
use crate::noise::{cell_integrals, integrate_against, PiecewiseConstantPath};
use crate::simple::SimpleFunction;
use crate::weight::{IndicatorImage, KernelWeight, Weight};

/// Half-width of the excluded band around the diagonals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExclusionSpec {
    eps: f64,
}

impl ExclusionSpec {
    pub fn new(eps: f64) -> Result<Self> {
        if eps > 0.0 && eps.is_finite() {
            Ok(Self { eps })
        } else {
            Err(Error::domain(format!("band half-width must be positive, got {eps}")))
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    delta: f64,
}

impl GridSpec {
    /// Requested step; the grid uses the largest 1/m not exceeding it.
    pub fn new(delta: f64) -> Result<Self> {
        if delta > 0.0 && delta <= 1.0 {
            Ok(Self { delta })
        } else {
            Err(Error::domain(format!("grid step must lie in (0, 1], got {delta}")))
        }
    }

    /// δ = ε / divisor
    pub fn relative(eps: f64, divisor: f64) -> Result<Self> {
        Self::new((eps / divisor).min(1.0))
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn cells(&self) -> usize {
        ((1.0 / self.delta - 1e-9).ceil() as usize).max(1)
    }

    pub fn step(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    pub fn check(&self, eps: f64) -> Result<()> {
        if self.step() <= eps / 4.0 * (1.0 + 1e-12) {
            Ok(())
        } else {
            Err(Error::Resolution {
                delta: self.step(),
                eps,
            })
        }
    }

    /// Largest D with D δ < ε.
    pub fn band_cells(&self, eps: f64) -> usize {
        let d = ((eps / self.step() - 1e-9).ceil() as usize).saturating_sub(1);
        d.min(self.cells() - 1)
    }
}

/// Prefix sums with clipped window queries.
struct Prefix(Vec<f64>);

impl Prefix {
    fn new(c: &[f64]) -> Self {
        let mut p = Vec::with_capacity(c.len() + 1);
        p.push(0.0);
        let mut acc = 0.0;
        for v in c {
            acc += v;
            p.push(acc);
        }
        Self(p)
    }

    /// Σ_{lo <= j <= hi} c_j for signed bounds, clipped to the grid.
    #[inline]
    fn range(&self, lo: isize, hi: isize) -> f64 {
        let m = self.0.len() as isize - 1;
        let lo = lo.max(0);
        let hi = hi.min(m - 1);
        if lo > hi {
            return 0.0;
        }
        self.0[(hi + 1) as usize] - self.0[lo as usize]
    }

    #[inline]
    fn window(&self, i: usize, d: usize) -> f64 {
        self.range(i as isize - d as isize, (i + d) as isize)
    }
}

/// Σ_{|i-j| <= d} a_i b_j
fn band_sum(a: &[f64], b: &[f64], d: usize) -> f64 {
    let pb = Prefix::new(b);
    a.iter().enumerate().map(|(i, ai)| ai * pb.window(i, d)).sum()
}

/// Σ_i a_i W_b(i) W_c(i): both partners within d of the center coordinate.
fn star_sum(center: &[f64], b: &[f64], c: &[f64], d: usize) -> f64 {
    let pb = Prefix::new(b);
    let pc = Prefix::new(c);
    center
        .iter()
        .enumerate()
        .map(|(i, v)| v * pb.window(i, d) * pc.window(i, d))
        .sum()
}

/// Σ over triples pairwise within d.
fn triangle_sum(a: &[f64], b: &[f64], c: &[f64], d: usize) -> f64 {
    let pc = Prefix::new(c);
    let m = a.len();
    let di = d as isize;
    let mut total = 0.0;
    for (i, ai) in a.iter().enumerate() {
        if *ai == 0.0 {
            continue;
        }
        let lo = i.saturating_sub(d);
        let hi = (i + d).min(m - 1);
        let mut inner = 0.0;
        for (j, bj) in b.iter().enumerate().take(hi + 1).skip(lo) {
            let (i, j) = (i as isize, j as isize);
            inner += bj * pc.range(i.max(j) - di, i.min(j) + di);
        }
        total += ai * inner;
    }
    total
}

/// Σ over cell tuples with every pair of indices more than d apart, n <= 3,
/// by inclusion-exclusion over the set of "near" pairs.
fn excluded_sum(cs: &[Vec<f64>], d: usize) -> f64 {
    let s = |k: usize| cs[k].iter().sum::<f64>();
    match cs.len() {
        0 => 1.0,
        1 => s(0),
        2 => s(0) * s(1) - band_sum(&cs[0], &cs[1], d),
        3 => {
            let (a, b, c) = (&cs[0], &cs[1], &cs[2]);
            s(0) * s(1) * s(2)
                - (band_sum(a, b, d) * s(2) + band_sum(a, c, d) * s(1) + band_sum(b, c, d) * s(0))
                + (star_sum(a, b, c, d) + star_sum(b, a, c, d) + star_sum(c, a, b, d))
                - triangle_sum(a, b, c, d)
        }
        _ => unreachable!("arity is checked by the caller"),
    }
}

/// η_ε(t) = ∫_0^t K_H(t, s) θ_ε(s) ds
pub fn eta_eps(table: &KernelPrimitive, path: &PiecewiseConstantPath, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("time must lie in [0, 1], got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    integrate_against(path, &KernelWeight::new(table, t)?, 0.0, t)
}

/// Y^ε(f)_t = Σ_k α_k Π_i (η_ε(b_k^i ∧ t) - η_ε(a_k^i ∧ t)).
pub fn y_eps_product(
    table: &KernelPrimitive,
    f: &SimpleFunction,
    path: &PiecewiseConstantPath,
    t: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for (alpha, b) in f.clip(t).terms() {
        let mut p = *alpha;
        for iv in b.intervals() {
            let w = IndicatorImage::new(table, iv, t);
            p *= integrate_against(path, &w, 0.0, 1.0)?;
        }
        total += p;
    }
    Ok(total)
}

/// ∫∫ w1(x) w2(y) θ(x) θ(y) 1{|x - y| < ε} dx dy on the cell grid.
pub fn band_functional<W1: Weight + ?Sized, W2: Weight + ?Sized>(
    w1: &W1,
    w2: &W2,
    path: &PiecewiseConstantPath,
    eps: f64,
    grid: &GridSpec,
) -> Result<f64> {
    grid.check(eps)?;
    let m = grid.cells();
    let c1 = cell_integrals(path, w1, m)?;
    let c2 = cell_integrals(path, w2, m)?;
    Ok(band_sum(&c1, &c2, grid.band_cells(eps)))
}

pub const MAX_APPROX_ARITY: usize = 3;

/// I_{n,ε}(f)_t = ∫ (Γ^{(n)} f 1_{[0,t]}^{⊗n}) Π θ_ε(x_j) g_ε(x) dx with
/// g_ε = Π_{i<j} 1{|x_i - x_j| >= ε} at cell centers.
pub fn i_n_eps(
    table: &KernelPrimitive,
    f: &SimpleFunction,
    path: &PiecewiseConstantPath,
    t: f64,
    excl: &ExclusionSpec,
    grid: &GridSpec,
) -> Result<f64> {
    let n = f.arity();
    if n == 0 || n > MAX_APPROX_ARITY {
        return Err(Error::domain(format!(
            "the diagonal-excluded integral supports orders 1..={MAX_APPROX_ARITY}, got {n}"
        )));
    }
    grid.check(excl.eps())?;
    let m = grid.cells();
    let d = grid.band_cells(excl.eps());
    let mut total = 0.0;
    for (alpha, b) in f.clip(t).terms() {
        let cs = b
            .intervals()
            .iter()
            .map(|iv| cell_integrals(path, &IndicatorImage::new(table, iv, t), m))
            .collect::<Result<Vec<_>>>()?;
        total += alpha * excluded_sum(&cs, d);
    }
    Ok(total)
}

/// Cell integrals of each Γ-image of a clipped box, exposed so the harness
/// can reuse them across functionals.
pub fn image_cells(
    table: &KernelPrimitive,
    intervals: &[crate::fbm_kernel::Interval],
    path: &PiecewiseConstantPath,
    t: f64,
    grid: &GridSpec,
) -> Result<Vec<Vec<f64>>> {
    intervals
        .iter()
        .map(|iv| cell_integrals(path, &IndicatorImage::new(table, iv, t), grid.cells()))
        .collect()
}

/// F_ε = ∫ w1 w2 w3 1{|x1-x2| < ε} 1{|x1-x3| < ε} θθθ h dx with |h| <= 1,
/// h evaluated at cell centers (h ≡ 1 when absent).
pub fn f_eps(
    w: [&dyn Weight; 3],
    path: &PiecewiseConstantPath,
    eps: f64,
    grid: &GridSpec,
    h: Option<&dyn Fn([f64; 3]) -> f64>,
) -> Result<f64> {
    grid.check(eps)?;
    let m = grid.cells();
    let d = grid.band_cells(eps);
    let c = w
        .iter()
        .map(|wi| cell_integrals(path, *wi, m))
        .collect::<Result<Vec<_>>>()?;
    let Some(h) = h else {
        return Ok(star_sum(&c[0], &c[1], &c[2], d));
    };
    let step = grid.step();
    let center = |i: usize| (i as f64 + 0.5) * step;
    let mut total = 0.0;
    for i in 0..m {
        let lo = i.saturating_sub(d);
        let hi = (i + d).min(m - 1);
        for j in lo..=hi {
            for k in lo..=hi {
                let hv = h([center(i), center(j), center(k)]);
                if !(hv.abs() <= 1.0) {
                    return Err(Error::domain(format!("|h| must not exceed 1, got {hv}")));
                }
                total += c[0][i] * c[1][j] * c[2][k] * hv;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm_kernel::{HurstParam, Interval};
    use crate::noise::{sample_kac_stroock, Innovation, NoiseKind};
    use crate::quadrature::QuadratureSpec;
    use crate::seed::SeedSpec;
    use crate::weight::Polynomial;

    fn table(h: f64) -> KernelPrimitive {
        KernelPrimitive::new(HurstParam::new(h).unwrap(), &QuadratureSpec::default()).unwrap()
    }

    fn near(i: usize, j: usize, d: usize) -> bool {
        i.abs_diff(j) <= d
    }

    fn brute(cs: &[Vec<f64>], d: usize) -> f64 {
        let m = cs[0].len();
        match cs.len() {
            1 => cs[0].iter().sum(),
            2 => {
                let mut s = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        if !near(i, j, d) {
                            s += cs[0][i] * cs[1][j];
                        }
                    }
                }
                s
            }
            3 => {
                let mut s = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        for k in 0..m {
                            if !near(i, j, d) && !near(i, k, d) && !near(j, k, d) {
                                s += cs[0][i] * cs[1][j] * cs[2][k];
                            }
                        }
                    }
                }
                s
            }
            _ => unreachable!(),
        }
    }

    fn pseudo(m: usize, salt: u64) -> Vec<f64> {
        (0..m)
            .map(|i| ((i as u64 * 2654435761 + salt * 97) % 1000) as f64 / 500.0 - 1.0)
            .collect()
    }

    #[test]
    fn grid_spec_rules() {
        let g = GridSpec::relative(0.1, 8.0).unwrap();
        assert_eq!(g.cells(), 80);
        assert_eq!(g.band_cells(0.1), 7);
        assert!(g.check(0.1).is_ok());
        assert!(matches!(GridSpec::new(0.05).unwrap().check(0.1), Err(Error::Resolution { .. })));
        // a step that does not divide 1 is rounded down
        let g = GridSpec::new(0.03).unwrap();
        assert_eq!(g.cells(), 34);
        assert_eq!(GridSpec::new(0.01).unwrap().band_cells(5.0), 99);
        assert!(GridSpec::new(0.0).is_err());
        assert!(ExclusionSpec::new(-1.0).is_err());
    }

    #[test]
    fn fast_sums_match_brute_force() {
        for (m, d) in [(23, 0), (23, 2), (40, 5), (17, 16), (12, 30)] {
            let d = d.min(m - 1);
            let cs = [pseudo(m, 1), pseudo(m, 2), pseudo(m, 3)];
            for n in 1..=3 {
                let fast = excluded_sum(&cs[..n], d);
                let slow = brute(&cs[..n], d);
                assert!((fast - slow).abs() < 1e-10, "m={m} d={d} n={n}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn eta_basics() {
        let t05 = table(0.5);
        let p = sample_kac_stroock(0.3, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(eta_eps(&t05, &p, 0.0).unwrap(), 0.0);
        // H = 1/2: the primitive of θ
        let direct = integrate_against(&p, &Polynomial::constant(1.0), 0.0, 0.6).unwrap();
        assert!((eta_eps(&t05, &p, 0.6).unwrap() - direct).abs() < 1e-14);
        assert!(eta_eps(&t05, &p, 1.5).is_err());
    }

    #[test]
    fn first_order_reduces_to_product_form() {
        let t = table(0.75);
        let f = SimpleFunction::parse("2; 0.1,0.5\n-1; 0.3,0.9").unwrap();
        let grid = GridSpec::relative(0.2, 8.0).unwrap();
        let excl = ExclusionSpec::new(0.2).unwrap();
        for i in 0..10 {
            let p = sample_kac_stroock(0.2, SeedSpec::new(2, i)).unwrap();
            for tt in [0.4, 1.0] {
                let a = i_n_eps(&t, &f, &p, tt, &excl, &grid).unwrap();
                let b = y_eps_product(&t, &f, &p, tt).unwrap();
                assert!((a - b).abs() < 1e-12);
                // η increments
                let e = |x: f64| eta_eps(&t, &p, x.min(tt)).unwrap();
                let c = 2.0 * (e(0.5) - e(0.1)) - (e(0.9) - e(0.3));
                assert!((b - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn second_order_splits_into_product_minus_band() {
        let t = table(0.75);
        let f = SimpleFunction::parse("1; 0.0,0.4; 0.5,1.0\n-0.7; 0.35,0.6; 0.05,0.3").unwrap();
        let eps = 0.1;
        let grid = GridSpec::relative(eps, 8.0).unwrap();
        let excl = ExclusionSpec::new(eps).unwrap();
        for i in 0..10 {
            let p = NoiseKind::Donsker(Innovation::Rademacher).sample(eps, SeedSpec::new(3, i)).unwrap();
            let tt = 0.8;
            let full = i_n_eps(&t, &f, &p, tt, &excl, &grid).unwrap();
            let mut band = 0.0;
            for (alpha, b) in f.clip(tt).terms() {
                let [i1, i2] = b.intervals() else { unreachable!() };
                let w1 = IndicatorImage::new(&t, i1, tt);
                let w2 = IndicatorImage::new(&t, i2, tt);
                band += alpha * band_functional(&w1, &w2, &p, eps, &grid).unwrap();
            }
            let y = y_eps_product(&t, &f, &p, tt).unwrap();
            assert!((full - (y - band)).abs() < 1e-10 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn brownian_disjoint_supports_need_no_exclusion() {
        let t = table(0.5);
        // minimum gap 0.1
        let f2 = SimpleFunction::parse("1; 0.0,0.3; 0.4,0.7\n0.5; 0.8,1.0; 0.05,0.2").unwrap();
        let eps = 0.05;
        let grid = GridSpec::relative(eps, 8.0).unwrap();
        let excl = ExclusionSpec::new(eps).unwrap();
        for i in 0..20 {
            let p = sample_kac_stroock(eps, SeedSpec::new(4, i)).unwrap();
            let a = i_n_eps(&t, &f2, &p, 1.0, &excl, &grid).unwrap();
            let b = y_eps_product(&t, &f2, &p, 1.0).unwrap();
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn band_functional_cases() {
        let p = sample_kac_stroock(0.2, SeedSpec::new(5, 0)).unwrap();
        let grid = GridSpec::relative(0.2, 8.0).unwrap();
        let zero = Polynomial::zero();
        let one = Polynomial::constant(1.0);
        assert_eq!(band_functional(&zero, &one, &p, 0.2, &grid).unwrap(), 0.0);
        assert!(band_functional(&one, &one, &p, 0.2, &GridSpec::new(0.1).unwrap()).is_err());
        // bands wider than the square see the full product
        let full = integrate_against(&p, &one, 0.0, 1.0).unwrap().powi(2);
        let wide = band_functional(&one, &one, &p, 1.0, &GridSpec::new(0.01).unwrap()).unwrap();
        assert!((full - wide).abs() < 1e-10);
    }

    #[test]
    fn f_eps_cases() {
        let p = sample_kac_stroock(0.2, SeedSpec::new(6, 0)).unwrap();
        let grid = GridSpec::relative(0.2, 8.0).unwrap();
        let a = Polynomial(vec![1.0, 0.5]);
        let b = Polynomial(vec![0.2, -1.0]);
        let c = Polynomial(vec![0.0, 0.0, 3.0]);
        let zero = Polynomial::zero();
        assert_eq!(f_eps([&a, &zero, &c], &p, 0.2, &grid, None).unwrap(), 0.0);
        let plain = f_eps([&a, &b, &c], &p, 0.2, &grid, None).unwrap();
        let unit = |_: [f64; 3]| 1.0;
        let with_h = f_eps([&a, &b, &c], &p, 0.2, &grid, Some(&unit)).unwrap();
        assert!((plain - with_h).abs() < 1e-10 * (1.0 + plain.abs()));
        let g = GridSpec::new(0.01).unwrap();
        let wide = f_eps([&a, &b, &c], &p, 1.0, &g, None).unwrap();
        let prod: f64 = [&a, &b, &c]
            .iter()
            .map(|w| integrate_against(&p, *w, 0.0, 1.0).unwrap())
            .product();
        assert!((wide - prod).abs() < 1e-9 * (1.0 + prod.abs()));
        let big = |_: [f64; 3]| 2.0;
        assert!(f_eps([&a, &b, &c], &p, 0.2, &grid, Some(&big)).is_err());
        // an indicator h against a brute-force triple sum
        let m = grid.cells();
        let d = grid.band_cells(0.2);
        let cs: Vec<Vec<f64>> = [&a, &b, &c].iter().map(|w| cell_integrals(&p, *w, m).unwrap()).collect();
        let h = |x: [f64; 3]| if x[1] > x[2] { 1.0 } else { -0.5 };
        let mut slow = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    if near(i, j, d) && near(i, k, d) {
                        let x = [(i as f64 + 0.5) / m as f64, (j as f64 + 0.5) / m as f64, (k as f64 + 0.5) / m as f64];
                        slow += cs[0][i] * cs[1][j] * cs[2][k] * h(x);
                    }
                }
            }
        }
        let fast = f_eps([&a, &b, &c], &p, 0.2, &grid, Some(&h)).unwrap();
        assert!((fast - slow).abs() < 1e-9 * (1.0 + slow.abs()));
    }

    #[test]
    fn arity_guard() {
        let t = table(0.75);
        let p = sample_kac_stroock(0.2, SeedSpec::new(7, 0)).unwrap();
        let f = SimpleFunction::indicator(
            1.0,
            vec![
                Interval::new(0.0, 0.1).unwrap(),
                Interval::new(0.2, 0.3).unwrap(),
                Interval::new(0.4, 0.5).unwrap(),
                Interval::new(0.6, 0.7).unwrap(),
            ],
        )
        .unwrap();
        let grid = GridSpec::relative(0.2, 8.0).unwrap();
        let excl = ExclusionSpec::new(0.2).unwrap();
        assert!(i_n_eps(&t, &f, &p, 1.0, &excl, &grid).is_err());
    }

    #[test]
    fn refinement_changes_little() {
        let t = table(0.75);
        let f = SimpleFunction::parse("1; 0.0,0.4; 0.5,1.0; 0.42,0.48").unwrap();
        let eps = 0.1;
        let excl = ExclusionSpec::new(eps).unwrap();
        let coarse = GridSpec::relative(eps, 8.0).unwrap();
        let fine = GridSpec::relative(eps, 16.0).unwrap();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..20 {
            let p = sample_kac_stroock(eps, SeedSpec::new(8, i)).unwrap();
            let a = i_n_eps(&t, &f, &p, 1.0, &excl, &coarse).unwrap();
            let b = i_n_eps(&t, &f, &p, 1.0, &excl, &fine).unwrap();
            worst = worst.max((a - b).abs());
            scale = scale.max(b.abs());
        }
        assert!(worst <= 0.25 * scale.max(1.0), "worst change {worst}, scale {scale}");
    }
}
