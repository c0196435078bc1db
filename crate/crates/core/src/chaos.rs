//! Exact-in-law samples of multiple fractional integrals I_n^H(f 1_{[0,t]}^{⊗n})
//! for simple f: fBm is sampled on a grid containing every endpoint, and the
//! integral of each box is the Wick product of its increments.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fbm_kernel::{covariance_r, indicator_inner_product, HurstParam, Interval};
use crate::seed::SeedSpec;
use crate::simple::{inner_product_hn, SimpleFunction};

const MAX_RIDGE: f64 = 1e-12;
const GRID_MATCH: f64 = 1e-12;

/// Values of a process on a grid starting at 0, with value 0 there.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmPath {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl FbmPath {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() || grid.is_empty() {
            return Err(Error::domain("grid and values must have the same nonzero length"));
        }
        if grid[0] != 0.0 || values[0] != 0.0 {
            return Err(Error::domain("a path starts at time 0 with value 0"));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) || *grid.last().unwrap() > 1.0 {
            return Err(Error::domain("grid must be strictly increasing inside [0, 1]"));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at a grid time; there is no interpolation.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let k = self.grid.partition_point(|&g| g < t - GRID_MATCH);
        match self.grid.get(k) {
            Some(&g) if (g - t).abs() <= GRID_MATCH => Ok(self.values[k]),
            _ => Err(Error::OffGrid(t)),
        }
    }

    /// X_{b∧t} - X_{a∧t}
    pub fn increment(&self, interval: &Interval, t: f64) -> Result<f64> {
        let c = interval.clip(t);
        if c.is_empty() {
            return Ok(0.0);
        }
        Ok(self.value_at(c.end())? - self.value_at(c.start())?)
    }
}

/// A standard Brownian path on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BmPath(FbmPath);

impl BmPath {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        FbmPath::new(grid, values).map(Self)
    }

    pub fn as_path(&self) -> &FbmPath {
        &self.0
    }

    pub fn increment(&self, interval: &Interval) -> Result<f64> {
        self.0.increment(interval, 1.0)
    }
}

pub fn increment(path: &FbmPath, interval: &Interval, t: f64) -> Result<f64> {
    path.increment(interval, t)
}

fn checked_grid(times: &[f64]) -> Result<Vec<f64>> {
    if times.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::domain("grid times must lie in (0, 1]"));
    }
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain("grid times must be strictly increasing"));
    }
    let mut grid = Vec::with_capacity(times.len() + 1);
    grid.push(0.0);
    grid.extend_from_slice(times);
    Ok(grid)
}

/// Cholesky factor of [R(t_i, t_j)] for a fixed grid, reused across samples.
#[derive(Debug, Clone)]
pub struct FbmSampler {
    grid: Vec<f64>,
    factor: DMatrix<f64>,
}

impl FbmSampler {
    /// `times` are the strictly increasing positive grid points; 0 is prepended.
    pub fn new(h: HurstParam, times: &[f64]) -> Result<Self> {
        let grid = checked_grid(times)?;
        let n = times.len();
        let cov = DMatrix::from_fn(n, n, |i, j| covariance_r(h, times[i], times[j]));
        let mut ridge = 0.0;
        loop {
            let mut m = cov.clone();
            for i in 0..n {
                m[(i, i)] += ridge;
            }
            if let Some(ch) = m.cholesky() {
                return Ok(Self {
                    grid,
                    factor: ch.unpack(),
                });
            }
            ridge = if ridge == 0.0 { 1e-16 } else { ridge * 10.0 };
            if ridge > MAX_RIDGE * (1.0 + 1e-9) {
                return Err(Error::Factorization { ridge: MAX_RIDGE });
            }
        }
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn sample(&self, seed: SeedSpec) -> FbmPath {
        let mut rng = seed.rng();
        let n = self.factor.nrows();
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let x = &self.factor * z;
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        values.extend(x.iter().copied());
        FbmPath {
            grid: self.grid.clone(),
            values,
        }
    }
}

pub fn sample_fbm(h: HurstParam, times: &[f64], seed: SeedSpec) -> Result<FbmPath> {
    Ok(FbmSampler::new(h, times)?.sample(seed))
}

/// Brownian motion from independent Gaussian increments.
pub fn sample_bm(times: &[f64], seed: SeedSpec) -> Result<BmPath> {
    let grid = checked_grid(times)?;
    let mut rng = seed.rng();
    let mut values = Vec::with_capacity(grid.len());
    values.push(0.0);
    let mut acc = 0.0;
    for w in grid.windows(2) {
        let z: f64 = StandardNormal.sample(&mut rng);
        acc += (w[1] - w[0]).sqrt() * z;
        values.push(acc);
    }
    Ok(BmPath(FbmPath { grid, values }))
}

/// Sorted grid holding every endpoint of f clipped at each probe, and the probes.
pub fn grid_for(f: &SimpleFunction, probes: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = probes.to_vec();
    for &t in probes {
        for (_, b) in f.terms() {
            for i in b.intervals() {
                pts.push(i.start().min(t));
                pts.push(i.end().min(t));
            }
        }
    }
    pts.retain(|&x| x > 0.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= GRID_MATCH);
    pts
}

/// Σ over partial matchings M of (-1)^{|M|} Π_{{i,j}∈M} gram[i][j] Π_{k∉M} x_k,
/// each matching counted once.
pub fn wick_product(x: &[f64], gram: &[Vec<f64>]) -> f64 {
    fn rec(mask: u32, x: &[f64], gram: &[Vec<f64>]) -> f64 {
        if mask == 0 {
            return 1.0;
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut v = x[i] * rec(rest, x, gram);
        let mut m = rest;
        while m != 0 {
            let j = m.trailing_zeros() as usize;
            m &= m - 1;
            if gram[i][j] != 0.0 {
                v -= gram[i][j] * rec(rest & !(1 << j), x, gram);
            }
        }
        v
    }
    assert!(x.len() < 32, "wick product of order {} is out of reach", x.len());
    rec((1u32 << x.len()) - 1, x, gram)
}

fn clipped_gram(h: HurstParam, ivs: &[Interval]) -> Result<Vec<Vec<f64>>> {
    let n = ivs.len();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = indicator_inner_product(h, &ivs[i], &ivs[j])?;
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    Ok(g)
}

fn term_increments(path: &FbmPath, ivs: &[Interval]) -> Result<Vec<f64>> {
    ivs.iter().map(|i| path.increment(i, 1.0)).collect()
}

/// I_n^H(f 1_{[0,t]}^{⊗n}) on one fBm realization.
pub fn exact_multiple_integral(
    h: HurstParam,
    f: &SimpleFunction,
    t: f64,
    path: &FbmPath,
) -> Result<f64> {
    h.require_chaos()?;
    let clipped = f.clip(t);
    let mut total = 0.0;
    for (alpha, b) in clipped.terms() {
        let ivs = b.intervals();
        let x = term_increments(path, ivs)?;
        let gram = clipped_gram(h, ivs)?;
        total += alpha * wick_product(&x, &gram);
    }
    Ok(total)
}

/// ΔB¹ΔB² - ⟨1_{I¹}, 1_{I²}⟩_ℋ summed over boxes, written out for n = 2.
pub fn two_fold_formula(h: HurstParam, f: &SimpleFunction, t: f64, path: &FbmPath) -> Result<f64> {
    expect_arity(f, 2)?;
    let mut total = 0.0;
    for (alpha, b) in f.clip(t).terms() {
        let [i1, i2] = b.intervals() else { unreachable!() };
        let d1 = path.increment(i1, 1.0)?;
        let d2 = path.increment(i2, 1.0)?;
        total += alpha * (d1 * d2 - indicator_inner_product(h, i1, i2)?);
    }
    Ok(total)
}

/// I(f1)I(f2)I(f3) - (⟨f1,f3⟩ I(f2) + ⟨f2,f3⟩ I(f1) + ⟨f1,f2⟩ I(f3)), per box.
pub fn three_fold_formula(h: HurstParam, f: &SimpleFunction, t: f64, path: &FbmPath) -> Result<f64> {
    expect_arity(f, 3)?;
    let mut total = 0.0;
    for (alpha, b) in f.clip(t).terms() {
        let [i1, i2, i3] = b.intervals() else { unreachable!() };
        let d1 = path.increment(i1, 1.0)?;
        let d2 = path.increment(i2, 1.0)?;
        let d3 = path.increment(i3, 1.0)?;
        let p = |a: &Interval, b: &Interval| indicator_inner_product(h, a, b);
        total += alpha
            * (d1 * d2 * d3 - (p(i1, i3)? * d2 + p(i2, i3)? * d1 + p(i1, i2)? * d3));
    }
    Ok(total)
}

fn expect_arity(f: &SimpleFunction, n: usize) -> Result<()> {
    if f.arity() == n {
        Ok(())
    } else {
        Err(Error::Arity {
            expected: n,
            found: f.arity(),
        })
    }
}

/// n! ⟨(f 1_{t1})~, (f 1_{t2})~⟩_{ℋ^{⊗n}} = E[I_n^H(f 1_{t1}) I_n^H(f 1_{t2})].
pub fn analytic_covariance(h: HurstParam, f: &SimpleFunction, t1: f64, t2: f64) -> Result<f64> {
    let a = f.clip(t1);
    // symmetrization is an orthogonal projection, so one side suffices
    let b = f.clip(t2).symmetrize();
    let nfact: f64 = (1..=f.arity()).map(|k| k as f64).product();
    Ok(nfact * inner_product_hn(h, &a, &b)?)
}

pub fn analytic_variance(h: HurstParam, f: &SimpleFunction, t: f64) -> Result<f64> {
    analytic_covariance(h, f, t, t)
}

/// Σ_k α_k Π_i W(A_k^i) for an elementary f.
pub fn wiener_multiple_integral(f: &SimpleFunction, path: &BmPath) -> Result<f64> {
    let mut total = 0.0;
    for (alpha, b) in f.terms() {
        let mut p = *alpha;
        for i in b.intervals() {
            p *= path.increment(i)?;
        }
        total += p;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm_kernel::Interval;
    use itertools::Itertools;

    fn hp(h: f64) -> HurstParam {
        HurstParam::new(h).unwrap()
    }

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn path_lookup_and_increments() {
        let p = FbmPath::new(vec![0.0, 0.25, 0.5, 1.0], vec![0.0, 1.0, -0.5, 2.0]).unwrap();
        assert_eq!(p.value_at(0.5).unwrap(), -0.5);
        assert!(matches!(p.value_at(0.3), Err(Error::OffGrid(_))));
        assert_eq!(p.increment(&iv(0.25, 1.0), 1.0).unwrap(), 1.0);
        assert_eq!(p.increment(&iv(0.25, 1.0), 0.5).unwrap(), -1.5);
        assert_eq!(p.increment(&iv(0.5, 1.0), 0.25).unwrap(), 0.0);
        assert_eq!(p.increment(&iv(0.5, 0.5), 1.0).unwrap(), 0.0);
        let whole = p.increment(&iv(0.0, 1.0), 1.0).unwrap();
        let parts = p.increment(&iv(0.0, 0.5), 1.0).unwrap() + p.increment(&iv(0.5, 1.0), 1.0).unwrap();
        assert_eq!(whole, parts);
        assert!(p.increment(&iv(0.3, 1.0), 1.0).is_err());
        assert!(FbmPath::new(vec![0.0, 0.5], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn single_point_variance() {
        let h = hp(0.75);
        let s = FbmSampler::new(h, &[0.6]).unwrap();
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|i| s.sample(SeedSpec::new(1, i)).values()[1]).collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let m4 = xs.iter().map(|x| x.powi(4)).sum::<f64>() / n as f64;
        let se = ((m4 - var * var) / n as f64).sqrt();
        assert!((var - 0.6f64.powf(1.5)).abs() < 3.0 * se, "{var}");
    }

    #[test]
    fn brownian_disjoint_increments_are_uncorrelated() {
        let s = FbmSampler::new(hp(0.5), &[0.3, 0.6, 1.0]).unwrap();
        let n = 50_000;
        let mut acc = 0.0;
        for i in 0..n {
            let p = s.sample(SeedSpec::new(2, i));
            acc += p.increment(&iv(0.0, 0.3), 1.0).unwrap() * p.increment(&iv(0.6, 1.0), 1.0).unwrap();
        }
        let cov = acc / n as f64;
        let se = (0.3f64 * 0.4 / n as f64).sqrt();
        assert!(cov.abs() < 4.0 * se, "{cov}");
    }

    #[test]
    fn degenerate_grid_needs_ridge_or_fails() {
        // two nearly identical times make R nearly singular but still factorizable
        assert!(FbmSampler::new(hp(0.75), &[0.5, 0.5 + 1e-13]).is_ok());
        assert!(FbmSampler::new(hp(0.75), &[0.5, 0.4]).is_err());
        assert!(FbmSampler::new(hp(0.75), &[0.0, 0.4]).is_err());
    }

    #[test]
    fn wick_small_cases() {
        let g = vec![vec![0.0, 0.2, 0.3], vec![0.2, 0.0, 0.5], vec![0.3, 0.5, 0.0]];
        let x = [1.5, -0.7, 2.0];
        assert_eq!(wick_product(&x[..1], &g), 1.5);
        assert!((wick_product(&x[..2], &g) - (1.5 * -0.7 - 0.2)).abs() < 1e-15);
        let three = x[0] * x[1] * x[2] - (0.3 * x[1] + 0.5 * x[0] + 0.2 * x[2]);
        assert!((wick_product(&x, &g) - three).abs() < 1e-15);
        // four points: x1x2x3x4 - Σ_pairs g x x + Σ perfect matchings
        let g4 = vec![
            vec![0.0, 0.1, 0.2, 0.3],
            vec![0.1, 0.0, 0.4, 0.5],
            vec![0.2, 0.4, 0.0, 0.6],
            vec![0.3, 0.5, 0.6, 0.0],
        ];
        let y = [0.5, 1.0, -1.0, 2.0];
        let mut expect = y.iter().product::<f64>();
        for (i, j) in (0..4).tuple_combinations() {
            let rest: f64 = (0..4).filter(|&k| k != i && k != j).map(|k| y[k]).product();
            expect -= g4[i][j] * rest;
        }
        expect += 0.1 * 0.6 + 0.2 * 0.5 + 0.3 * 0.4;
        assert!((wick_product(&y, &g4) - expect).abs() < 1e-14);
    }

    #[test]
    fn generic_matches_hand_formulas() {
        let h = hp(0.75);
        let f2 = SimpleFunction::parse("1.0; 0.0,0.4; 0.5,1.0\n-0.7; 0.6,0.9; 0.1,0.3").unwrap();
        let f3 = SimpleFunction::parse("1.0; 0.0,0.2; 0.3,0.5; 0.6,1.0").unwrap();
        for t in [0.45, 0.8, 1.0] {
            let mut grid = grid_for(&f2, &[t]);
            grid.extend(grid_for(&f3, &[t]));
            grid.sort_by(f64::total_cmp);
            grid.dedup();
            let s = FbmSampler::new(h, &grid).unwrap();
            for i in 0..200 {
                let p = s.sample(SeedSpec::new(3, i));
                let a = exact_multiple_integral(h, &f2, t, &p).unwrap();
                let b = two_fold_formula(h, &f2, t, &p).unwrap();
                assert!((a - b).abs() <= 1e-12);
                let a = exact_multiple_integral(h, &f3, t, &p).unwrap();
                let b = three_fold_formula(h, &f3, t, &p).unwrap();
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn first_order_is_linear_in_increments() {
        let h = hp(0.75);
        let f = SimpleFunction::parse("2; 0.1,0.5\n-1; 0.3,0.9").unwrap();
        let s = FbmSampler::new(h, &grid_for(&f, &[1.0])).unwrap();
        let p = s.sample(SeedSpec::new(4, 0));
        let direct = 2.0 * p.increment(&iv(0.1, 0.5), 1.0).unwrap()
            - p.increment(&iv(0.3, 0.9), 1.0).unwrap();
        assert_eq!(exact_multiple_integral(h, &f, 1.0, &p).unwrap(), direct);
    }

    #[test]
    fn analytic_variance_cases() {
        let h = hp(0.75);
        let f = SimpleFunction::indicator(1.0, vec![iv(0.2, 0.7)]).unwrap();
        assert!((analytic_variance(h, &f, 1.0).unwrap() - 0.5f64.powf(1.5)).abs() < 1e-15);
        // H = 1/2, disjoint box: 2! ⟨f̃, f̃⟩ = L1 L2
        let g = SimpleFunction::indicator(1.0, vec![iv(0.0, 0.3), iv(0.5, 0.9)]).unwrap();
        assert!((analytic_variance(hp(0.5), &g, 1.0).unwrap() - 0.3 * 0.4).abs() < 1e-15);
        // the projection shortcut agrees with symmetrizing both sides
        let f2 = SimpleFunction::parse("1.0; 0.0,0.4; 0.5,1.0\n-0.7; 0.6,0.9; 0.1,0.3").unwrap();
        let a = f2.clip(0.8).symmetrize();
        let full = 2.0 * inner_product_hn(h, &a, &a).unwrap();
        assert!((analytic_variance(h, &f2, 0.8).unwrap() - full).abs() < 1e-14);
    }

    #[test]
    fn brownian_case_agrees_with_wiener_integral() {
        // per-box disjointness makes every L² correction vanish
        let f2 = SimpleFunction::parse("1.0; 0.0,0.4; 0.5,1.0\n-0.7; 0.6,0.9; 0.1,0.3").unwrap();
        let grid = grid_for(&f2, &[1.0]);
        let fb = FbmSampler::new(hp(0.5), &grid).unwrap();
        for i in 0..100 {
            let p = fb.sample(SeedSpec::new(5, i));
            let bm = BmPath::new(p.grid().to_vec(), p.values().to_vec()).unwrap();
            let a = exact_multiple_integral(hp(0.5), &f2, 1.0, &p).unwrap();
            let b = wiener_multiple_integral(&f2, &bm).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn wiener_isometry() {
        let f = SimpleFunction::parse("1.0; 0.0,0.4; 0.5,1.0\n-0.7; 0.6,0.9; 0.1,0.3").unwrap();
        let g = SimpleFunction::parse("0.5; 0.1,0.2; 0.7,0.95").unwrap();
        let mut grid = grid_for(&f, &[1.0]);
        grid.extend(grid_for(&g, &[1.0]));
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let n = 100_000;
        let mut xs = Vec::with_capacity(n);
        for i in 0..n as u64 {
            let p = sample_bm(&grid, SeedSpec::new(6, i)).unwrap();
            let a = wiener_multiple_integral(&f, &p).unwrap();
            let b = wiener_multiple_integral(&g, &p).unwrap();
            xs.push((a, b));
        }
        let nf = n as f64;
        let mean = xs.iter().map(|x| x.0).sum::<f64>() / nf;
        let var = xs.iter().map(|x| x.0 * x.0).sum::<f64>() / nf;
        assert!(mean.abs() < 4.0 * (var / nf).sqrt());
        let prods: Vec<f64> = xs.iter().map(|x| x.0 * x.1).collect();
        let m = prods.iter().sum::<f64>() / nf;
        let v = prods.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (nf - 1.0);
        let expect = 2.0 * inner_product_hn(hp(0.5), &f.symmetrize(), &g.symmetrize()).unwrap();
        assert!((m - expect).abs() < 4.0 * (v / nf).sqrt(), "{m} vs {expect}");
    }

    #[test]
    fn product_formula_first_order() {
        // disjoint supports: W(A)W(B) = I_2(1_A ⊗ 1_B) exactly
        let a = iv(0.1, 0.4);
        let b = iv(0.5, 0.8);
        let p = sample_bm(&[0.1, 0.4, 0.5, 0.8, 1.0], SeedSpec::new(7, 0)).unwrap();
        let fa = SimpleFunction::indicator(1.0, vec![a]).unwrap();
        let fb = SimpleFunction::indicator(1.0, vec![b]).unwrap();
        let fab = SimpleFunction::indicator(1.0, vec![a, b]).unwrap();
        let lhs = wiener_multiple_integral(&fa, &p).unwrap() * wiener_multiple_integral(&fb, &p).unwrap();
        let rhs = wiener_multiple_integral(&fab, &p).unwrap() + a.overlap(&b);
        assert!((lhs - rhs).abs() < 1e-15);

        // overlapping supports: I_2 of the off-diagonal refinement converges in L²
        let a = iv(0.0, 0.5);
        let b = iv(0.25, 1.0);
        let mut prev = f64::INFINITY;
        for m in [4usize, 16, 64] {
            let pts: Vec<f64> = (1..=m).map(|k| k as f64 / m as f64).collect();
            let cells: Vec<Interval> = (0..m).map(|k| iv(k as f64 / m as f64, (k + 1) as f64 / m as f64)).collect();
            let mut terms = Vec::new();
            for (i, ci) in cells.iter().enumerate() {
                for (j, cj) in cells.iter().enumerate() {
                    if i != j && a.overlap(ci) > 0.0 && b.overlap(cj) > 0.0 {
                        terms.push((1.0, crate::simple::IndicatorBox::new(vec![*ci, *cj]).unwrap()));
                    }
                }
            }
            let f2 = SimpleFunction::new(2, terms).unwrap();
            let fa = SimpleFunction::indicator(1.0, vec![a]).unwrap();
            let fb = SimpleFunction::indicator(1.0, vec![b]).unwrap();
            let reps = 4000;
            let mut ms = 0.0;
            for i in 0..reps {
                let p = sample_bm(&pts, SeedSpec::new(8, i)).unwrap();
                let r = wiener_multiple_integral(&fa, &p).unwrap() * wiener_multiple_integral(&fb, &p).unwrap()
                    - wiener_multiple_integral(&f2, &p).unwrap()
                    - a.overlap(&b);
                ms += r * r;
            }
            ms /= reps as f64;
            // E r² = 2 Σ_diag |cell|² = 2 · overlap / m
            assert!(ms < prev);
            let expect = 2.0 * 0.25 / m as f64;
            assert!((ms - expect).abs() < 0.25 * expect, "m={m}: {ms}");
            prev = ms;
        }
    }
}
