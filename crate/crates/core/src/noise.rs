//! Noise kernels θ_ε: Kac-Stroock telegraph paths and Donsker random-walk
//! derivatives, both piecewise constant on [0, 1].

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::seed::SeedSpec;
use crate::weight::Weight;

/// A piecewise-constant function on [0, 1]; piece k is [b_k, b_{k+1}).
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantPath {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConstantPath {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || values.len() + 1 != breakpoints.len() {
            return Err(Error::domain(format!(
                "{} breakpoints cannot carry {} pieces",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::domain("path breakpoints must start at 0 and end at 1"));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("path breakpoints must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("path values must be finite"));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn pieces(&self) -> usize {
        self.values.len()
    }

    pub fn interior_breakpoints(&self) -> usize {
        self.breakpoints.len() - 2
    }

    /// θ(x); x = 1 belongs to the last piece.
    pub fn value_at(&self, x: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&b| b <= x);
        self.values[k.saturating_sub(1).min(self.values.len() - 1)]
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// ∫_0^1 θ(x)² dx
    pub fn square_integral(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(b, v)| v * v * (b[1] - b[0]))
            .sum()
    }
}

/// Innovation law ξ of a Donsker kernel; all are centered with unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Innovation {
    #[default]
    Rademacher,
    Gaussian,
    /// √3 · U(-1, 1)
    Uniform,
}

impl Innovation {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Innovation::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Innovation::Gaussian => StandardNormal.sample(rng),
            Innovation::Uniform => 3f64.sqrt() * rng.random_range(-1.0..1.0),
        }
    }

    /// E ξ^{2k}
    pub fn even_moment(self, k: u32) -> f64 {
        match self {
            Innovation::Rademacher => 1.0,
            Innovation::Gaussian => (1..=k).map(|j| (2 * j - 1) as f64).product(),
            Innovation::Uniform => 3f64.powi(k as i32) / (2 * k + 1) as f64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Innovation::Rademacher => "rademacher",
            Innovation::Gaussian => "gaussian",
            Innovation::Uniform => "uniform",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rademacher" => Ok(Innovation::Rademacher),
            "gaussian" => Ok(Innovation::Gaussian),
            "uniform" => Ok(Innovation::Uniform),
            _ => Err(Error::Config(format!("unknown innovation '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    KacStroock,
    Donsker(Innovation),
}

impl NoiseKind {
    pub fn sample(self, eps: f64, seed: SeedSpec) -> Result<PiecewiseConstantPath> {
        match self {
            NoiseKind::KacStroock => sample_kac_stroock(eps, seed),
            NoiseKind::Donsker(_) => sample_donsker(eps, self, seed),
        }
    }

    pub fn name(self) -> String {
        match self {
            NoiseKind::KacStroock => "kac-stroock".to_string(),
            NoiseKind::Donsker(i) => format!("donsker-{}", i.name()),
        }
    }

    /// Inverse of [`NoiseKind::name`]; a bare "donsker" means Rademacher steps.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "kac-stroock" => Ok(NoiseKind::KacStroock),
            "donsker" => Ok(NoiseKind::Donsker(Innovation::default())),
            _ => match s.strip_prefix("donsker-") {
                Some(inn) => Ok(NoiseKind::Donsker(Innovation::parse(inn)?)),
                None => Err(Error::Config(format!("unknown noise kind '{s}'"))),
            },
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("noise scale must lie in (0, 1], got {eps}")))
    }
}

/// θ_ε(x) = ε^{-1}(-1)^{N(x/ε²)}: jumps at ε² times the arrivals of a unit
/// Poisson process, generated from exponential spacings.
pub fn sample_kac_stroock(eps: f64, seed: SeedSpec) -> Result<PiecewiseConstantPath> {
    check_eps(eps)?;
    let e2 = eps * eps;
    let mut rng = seed.rng();
    let mut breakpoints = vec![0.0];
    let mut arrival = 0.0;
    loop {
        let gap: f64 = Exp1.sample(&mut rng);
        arrival += gap;
        let x = arrival * e2;
        if x >= 1.0 {
            break;
        }
        // a spacing below the float resolution at x merges two jumps
        if x > *breakpoints.last().unwrap() {
            breakpoints.push(x);
        } else {
            breakpoints.pop();
        }
        if breakpoints.is_empty() {
            breakpoints.push(0.0);
        }
    }
    breakpoints.push(1.0);
    let values = (0..breakpoints.len() - 1)
        .map(|k| if k % 2 == 0 { 1.0 / eps } else { -1.0 / eps })
        .collect();
    PiecewiseConstantPath::new(breakpoints, values)
}

/// θ_ε = ε^{-1} Σ ξ_k 1_{[(k-1)ε², kε²)}; the last block is cut at 1.
pub fn sample_donsker(eps: f64, kind: NoiseKind, seed: SeedSpec) -> Result<PiecewiseConstantPath> {
    check_eps(eps)?;
    let NoiseKind::Donsker(innovation) = kind else {
        return Err(Error::domain("the Donsker sampler needs a Donsker noise kind"));
    };
    let e2 = eps * eps;
    let blocks = donsker_blocks(eps);
    let mut breakpoints: Vec<f64> = (0..blocks).map(|k| k as f64 * e2).collect();
    breakpoints.push(1.0);
    let mut rng = seed.rng();
    let values = (0..blocks)
        .map(|_| innovation.sample(&mut rng) / eps)
        .collect();
    PiecewiseConstantPath::new(breakpoints, values)
}

/// Number of blocks [kε², (k+1)ε²) that meet [0, 1), ignoring slivers
/// produced by rounding when 1/ε² is an integer.
fn donsker_blocks(eps: f64) -> usize {
    let e2 = eps * eps;
    let mut k = (1.0 / e2).ceil() as usize;
    while k > 1 && (k - 1) as f64 * e2 >= 1.0 - 1e-12 {
        k -= 1;
    }
    k.max(1)
}

/// E[θ_ε(x) θ_ε(y)]
pub fn second_moment_kernel(kind: NoiseKind, eps: f64, x: f64, y: f64) -> f64 {
    let e2 = eps * eps;
    match kind {
        NoiseKind::KacStroock => (-2.0 * (x - y).abs() / e2).exp() / e2,
        NoiseKind::Donsker(_) => {
            if (x / e2).floor() == (y / e2).floor() {
                1.0 / e2
            } else {
                0.0
            }
        }
    }
}

/// ∫_lo^hi w(x) θ(x) dx, exact over the pieces of θ.
pub fn integrate_against<W: Weight + ?Sized>(
    path: &PiecewiseConstantPath,
    w: &W,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::domain(format!(
            "integration range [{lo}, {hi}] is not inside [0, 1]"
        )));
    }
    if lo == hi {
        return Ok(0.0);
    }
    let bp = &path.breakpoints;
    let mut k = bp.partition_point(|&b| b <= lo).saturating_sub(1);
    let mut x = lo;
    let mut fx = w.antiderivative(x);
    let mut sum = 0.0;
    while x < hi && k < path.values.len() {
        let next = bp[k + 1].min(hi);
        let part = match fx {
            Some(prev) => {
                let f = w.antiderivative(next).expect("antiderivative is all-or-nothing");
                fx = Some(f);
                f - prev
            }
            None => w.integral(x, next)?,
        };
        sum += path.values[k] * part;
        x = next;
        k += 1;
    }
    Ok(sum)
}

/// c_i = ∫_{[i/m, (i+1)/m)} w θ for a uniform grid of m cells on [0, 1].
pub fn cell_integrals<W: Weight + ?Sized>(
    path: &PiecewiseConstantPath,
    w: &W,
    cells: usize,
) -> Result<Vec<f64>> {
    if cells == 0 {
        return Err(Error::domain("a cell grid needs at least one cell"));
    }
    let mut out = vec![0.0; cells];
    let bp = &path.breakpoints;
    let edge = |i: usize| if i >= cells { 1.0 } else { i as f64 / cells as f64 };
    let (mut k, mut cell) = (0, 0);
    let mut x = 0.0;
    let mut fx = w.antiderivative(0.0);
    while k < path.values.len() && cell < cells {
        let piece_end = bp[k + 1];
        let cell_end = edge(cell + 1);
        let next = piece_end.min(cell_end);
        let part = match fx {
            Some(prev) => {
                let f = w.antiderivative(next).expect("antiderivative is all-or-nothing");
                fx = Some(f);
                f - prev
            }
            None => w.integral(x, next)?,
        };
        out[cell] += path.values[k] * part;
        x = next;
        if next >= piece_end {
            k += 1;
        }
        if next >= cell_end {
            cell += 1;
        }
    }
    Ok(out)
}
