//! Experiment suites behind the command-line front end. Each returns a
//! [`Report`]: CSV tables plus pass/fail verdicts.

use crate::approx::{band_functional, eta_eps, f_eps, GridSpec};
use crate::chaos::{exact_multiple_integral, grid_for, FbmSampler};
use crate::error::{Error, Result};
use crate::fbm_kernel::{
    covariance_r, indicator_inner_product, kernel_k, kernel_via_fractional_integral, psi,
    HurstParam, Interval,
};
use crate::harness::{
    approximation_samples, num, run_replications, trend_verdict, validate_schedule,
    ExperimentConfig, Outcome, Report, Table, Verdict, LABEL_NOISE, LABEL_REFERENCE,
    MIN_REPLICATIONS,
};
use crate::kernel_table::KernelPrimitive;
use crate::noise::NoiseKind;
use crate::quadrature::QuadratureSpec;
use crate::stats::{covariance, Moments};
use crate::weight::{IndicatorImage, Weight};

fn check_replications(n: usize) -> Result<()> {
    if n < MIN_REPLICATIONS {
        return Err(Error::Config(format!(
            "replications must be at least {MIN_REPLICATIONS}, got {n}"
        )));
    }
    Ok(())
}

/// Shrinking-statistic verdict: consecutive point estimates strictly
/// decrease and the last is below the first by more than 2 combined SEs.
pub fn decrease_verdict(name: &str, values: &[(f64, f64)]) -> Verdict {
    let trend = trend_verdict(name, values, 2.0);
    if trend.outcome == Outcome::Insufficient {
        return trend;
    }
    let monotone = values.windows(2).all(|w| w[1].0 < w[0].0);
    let outcome = Outcome::from_bool(monotone && trend.outcome == Outcome::Pass);
    let detail = if monotone {
        trend.detail
    } else {
        format!("not strictly decreasing; {}", trend.detail)
    };
    Verdict::new(name, outcome, detail)
}

// ---------------------------------------------------------------- kernel-check

#[derive(Debug, Clone)]
pub struct KernelCheckConfig {
    pub hurst: Vec<f64>,
    pub times: Vec<f64>,
    /// interior points per (H, t) for the fractional-integral form
    pub points: usize,
    pub norm_tolerance: f64,
    pub pointwise_tolerance: f64,
    pub pair_hurst: f64,
    pub pairs: Vec<(Interval, Interval)>,
    pub relative_tolerance: f64,
    pub quadrature: QuadratureSpec,
}

/// ∫_0^t K_H(t, s)² ds. The substitution s = t w^m with m = 1/(2-2H) cancels
/// the s^{1-2H} growth of K² at the origin.
pub fn kernel_square_integral(h: HurstParam, t: f64, q: &QuadratureSpec) -> Result<f64> {
    let m = 1.0 / (2.0 - 2.0 * h.value());
    q.integrate(
        |w| {
            if w <= 0.0 || w >= 1.0 {
                return 0.0;
            }
            let s = t * w.powf(m);
            let k = kernel_k(h, t, s, q).unwrap_or(f64::NAN);
            k * k * t * m * w.powf(m - 1.0)
        },
        0.0,
        1.0,
    )
}

/// ∫_{I1} ∫_{I2} ψ(u, v) dv du by nested quadrature, for H > 1/2. The inner
/// integral is split at u; on each side r = |u - v| is graded toward u as
/// r0 + (r1 - r0) w^k with k = 2/(2H-1).
pub fn psi_rectangle(h: HurstParam, i1: &Interval, i2: &Interval, q: &QuadratureSpec) -> Result<f64> {
    let hv = h.value();
    if hv <= 0.5 {
        return Err(Error::domain(format!("psi needs H > 1/2, got {hv}")));
    }
    let k = 2.0 / (2.0 * hv - 1.0);
    let c_psi = psi(h, 0.0, 1.0)?;
    let (c, d) = (i2.start(), i2.end());
    let side = |r0: f64, r1: f64| -> f64 {
        if r1 <= r0 {
            return 0.0;
        }
        let len = r1 - r0;
        q.integrate(
            |w| {
                let r = r0 + len * w.powf(k);
                if r <= 0.0 {
                    return 0.0;
                }
                // ψ as a function of r; u + r can round back onto u
                c_psi * r.powf(2.0 * hv - 2.0) * len * k * w.powf(k - 1.0)
            },
            0.0,
            1.0,
        )
        .unwrap_or(f64::NAN)
    };
    let inner = |u: f64| {
        let below = side((u - d).max(0.0), u - c);
        let above = side((c - u).max(0.0), d - u);
        below + above
    };
    let mut cuts = vec![i1.start()];
    cuts.extend([c, d].into_iter().filter(|&x| x > i1.start() && x < i1.end()));
    cuts.push(i1.end());
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += q.integrate(inner, w[0], w[1])?;
    }
    if !total.is_finite() {
        return Err(Error::Quadrature {
            tolerance: q.tolerance(),
            estimate: total,
        });
    }
    Ok(total)
}

pub fn kernel_check(cfg: &KernelCheckConfig) -> Result<Report> {
    let q = &cfg.quadrature;
    let mut norms = Table::new("kernel_norms.csv", &["hurst", "t", "square_integral", "target", "residual"]);
    let mut pointwise = Table::new(
        "kernel_fractional_form.csv",
        &["hurst", "t", "s", "kernel", "fractional_form", "residual"],
    );
    let (mut worst_norm, mut worst_point) = (0.0f64, 0.0f64);
    for &hv in &cfg.hurst {
        let h = HurstParam::new(hv)?;
        for &t in &cfg.times {
            let sq = kernel_square_integral(h, t, q)?;
            let target = t.powf(2.0 * hv);
            worst_norm = worst_norm.max((sq - target).abs());
            norms.push(vec![num(hv), num(t), num(sq), num(target), num(sq - target)]);
            for i in 0..cfg.points {
                let s = t * (i as f64 + 0.5) / cfg.points as f64;
                let k = kernel_k(h, t, s, q)?;
                let frac = kernel_via_fractional_integral(h, t, s, q)?;
                worst_point = worst_point.max((k - frac).abs());
                pointwise.push(vec![num(hv), num(t), num(s), num(k), num(frac), num(k - frac)]);
            }
        }
    }
    let ph = HurstParam::new(cfg.pair_hurst)?;
    let mut pairs = Table::new(
        "inner_products.csv",
        &["a", "b", "c", "d", "closed_form", "quadrature", "relative_error"],
    );
    let mut worst_rel = 0.0f64;
    for (i1, i2) in &cfg.pairs {
        let closed = indicator_inner_product(ph, i1, i2)?;
        let quad = psi_rectangle(ph, i1, i2, q)?;
        let rel = (closed - quad).abs() / closed.abs().max(f64::MIN_POSITIVE);
        worst_rel = worst_rel.max(rel);
        pairs.push(vec![
            num(i1.start()),
            num(i1.end()),
            num(i2.start()),
            num(i2.end()),
            num(closed),
            num(quad),
            num(rel),
        ]);
    }
    let verdicts = vec![
        Verdict::new(
            "square integral equals t^{2H}",
            Outcome::from_bool(worst_norm <= cfg.norm_tolerance),
            format!("max residual {worst_norm:.3e} (tolerance {:.1e})", cfg.norm_tolerance),
        ),
        Verdict::new(
            "fractional-integral form",
            Outcome::from_bool(worst_point <= cfg.pointwise_tolerance),
            format!("max residual {worst_point:.3e} (tolerance {:.1e})", cfg.pointwise_tolerance),
        ),
        Verdict::new(
            "inner product closed form",
            Outcome::from_bool(worst_rel <= cfg.relative_tolerance),
            format!("max relative error {worst_rel:.3e} (tolerance {:.1e})", cfg.relative_tolerance),
        ),
    ];
    Ok(Report {
        title: "kernel-check".into(),
        tables: vec![norms, pointwise, pairs],
        verdicts,
    })
}

// ---------------------------------------------------------------- eta-cov

#[derive(Debug, Clone)]
pub struct EtaCovConfig {
    pub hurst: HurstParam,
    pub eps_schedule: Vec<f64>,
    pub replications: usize,
    pub noise: NoiseKind,
    pub s: f64,
    pub t: f64,
    pub quadrature: QuadratureSpec,
    pub seed: u64,
}

/// Covariance of (η_ε(s), η_ε(t)) against R(s, t) along the schedule.
pub fn eta_cov(cfg: &EtaCovConfig, workers: usize) -> Result<Report> {
    check_replications(cfg.replications)?;
    validate_schedule(&cfg.eps_schedule)?;
    for x in [cfg.s, cfg.t] {
        if !(x > 0.0 && x <= 1.0) {
            return Err(Error::Config(format!("times must lie in (0, 1], got {x}")));
        }
    }
    let table = KernelPrimitive::new(cfg.hurst, &cfg.quadrature)?;
    let target = covariance_r(cfg.hurst, cfg.s, cfg.t);
    let mut out = Table::new(
        "eta_cov.csv",
        &["eps", "n", "cov", "se_cov", "target", "abs_error", "var_s", "var_t"],
    );
    let mut errors = Vec::new();
    for (k, &eps) in cfg.eps_schedule.iter().enumerate() {
        let pairs = run_replications(cfg.replications, cfg.seed, workers, |_, seed| {
            let path = cfg.noise.sample(eps, seed.derive(LABEL_NOISE + k as u64))?;
            Ok((eta_eps(&table, &path, cfg.s)?, eta_eps(&table, &path, cfg.t)?))
        })?;
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let (cov, se) = covariance(&a, &b)?;
        let err = (cov - target).abs();
        errors.push((err, se));
        out.push(vec![
            num(eps),
            cfg.replications.to_string(),
            num(cov),
            num(se),
            num(target),
            num(err),
            num(Moments::of(&a)?.variance),
            num(Moments::of(&b)?.variance),
        ]);
    }
    let verdict = if errors.len() < 2 {
        Verdict::new("covariance error shrinks", Outcome::Insufficient, "need at least two eps values")
    } else {
        let (first, last) = (errors[0].0, errors.last().unwrap().0);
        Verdict::new(
            "covariance error shrinks",
            Outcome::from_bool(last < first),
            format!("|error| first {first:.3e}, last {last:.3e}"),
        )
    };
    Ok(Report {
        title: "eta-cov".into(),
        tables: vec![out],
        verdicts: vec![verdict],
    })
}

// ---------------------------------------------------------------- lemma3 / lemma7

#[derive(Debug, Clone)]
pub struct BandStudyConfig {
    pub hurst: HurstParam,
    pub eps_schedule: Vec<f64>,
    pub replications: usize,
    pub kinds: Vec<NoiseKind>,
    /// the weights are Γ-images of these indicators (two for lemma3, three for lemma7)
    pub intervals: Vec<Interval>,
    pub grid_divisor: f64,
    pub quadrature: QuadratureSpec,
    pub seed: u64,
}

impl BandStudyConfig {
    fn validate(&self, weights: usize) -> Result<()> {
        check_replications(self.replications)?;
        validate_schedule(&self.eps_schedule)?;
        self.hurst.require_chaos()?;
        if self.kinds.is_empty() {
            return Err(Error::Config("at least one noise kind is required".into()));
        }
        if self.intervals.len() != weights {
            return Err(Error::Config(format!(
                "expected {weights} intervals, got {}",
                self.intervals.len()
            )));
        }
        if !(self.grid_divisor >= 4.0) {
            return Err(Error::Config(format!(
                "grid_divisor must be at least 4, got {}",
                self.grid_divisor
            )));
        }
        Ok(())
    }
}

/// Mean and SE of a per-path statistic for every (kind, ε), plus one
/// decrease verdict per kind.
fn band_study<F>(cfg: &BandStudyConfig, workers: usize, file: &str, stat: &str, f: F) -> Result<(Table, Vec<Verdict>)>
where
    F: Fn(&crate::noise::PiecewiseConstantPath, f64, &GridSpec) -> Result<f64> + Sync,
{
    let mut out = Table::new(file, &["noise", "eps", "n", stat, "se"]);
    let mut verdicts = Vec::new();
    for (ki, kind) in cfg.kinds.iter().enumerate() {
        let mut series = Vec::new();
        for (k, &eps) in cfg.eps_schedule.iter().enumerate() {
            let grid = GridSpec::relative(eps, cfg.grid_divisor)?;
            let label = LABEL_NOISE + (ki as u64) * 1024 + k as u64;
            let xs = run_replications(cfg.replications, cfg.seed, workers, |_, seed| {
                f(&kind.sample(eps, seed.derive(label))?, eps, &grid)
            })?;
            let m = Moments::of(&xs)?;
            series.push((m.mean, m.se_mean));
            out.push(vec![kind.name(), num(eps), m.n.to_string(), num(m.mean), num(m.se_mean)]);
        }
        verdicts.push(decrease_verdict(&format!("{stat} decreases ({})", kind.name()), &series));
    }
    Ok((out, verdicts))
}

/// E(Y_ε - Y)² with Y_ε the band functional of two Γ-images and
/// Y = ⟨1_{I1}, 1_{I2}⟩_ℋ its limit.
pub fn lemma3(cfg: &BandStudyConfig, workers: usize) -> Result<Report> {
    cfg.validate(2)?;
    let table = KernelPrimitive::new(cfg.hurst, &cfg.quadrature)?;
    let (i1, i2) = (&cfg.intervals[0], &cfg.intervals[1]);
    let w1 = IndicatorImage::new(&table, i1, 1.0);
    let w2 = IndicatorImage::new(&table, i2, 1.0);
    let limit = indicator_inner_product(cfg.hurst, i1, i2)?;
    let (t, verdicts) = band_study(cfg, workers, "lemma3.csv", "mean_sq_error", |path, eps, grid| {
        let y = band_functional(&w1, &w2, path, eps, grid)?;
        Ok((y - limit) * (y - limit))
    })?;
    Ok(Report {
        title: format!("lemma3 (limit {limit:.6e})"),
        tables: vec![t],
        verdicts,
    })
}

/// E(F_ε²) for three Γ-images and h ≡ 1.
pub fn lemma7(cfg: &BandStudyConfig, workers: usize) -> Result<Report> {
    cfg.validate(3)?;
    let table = KernelPrimitive::new(cfg.hurst, &cfg.quadrature)?;
    let ws: Vec<IndicatorImage> = cfg
        .intervals
        .iter()
        .map(|iv| IndicatorImage::new(&table, iv, 1.0))
        .collect();
    let (t, verdicts) = band_study(cfg, workers, "lemma7.csv", "mean_square", |path, eps, grid| {
        let w: [&dyn Weight; 3] = [&ws[0], &ws[1], &ws[2]];
        let x = f_eps(w, path, eps, grid, None)?;
        Ok(x * x)
    })?;
    Ok(Report {
        title: "lemma7".into(),
        tables: vec![t],
        verdicts,
    })
}

// ---------------------------------------------------------------- sample

/// Raw samples of the approximations and of the exact integrals, one row per
/// (replication, source, probe).
pub fn sample(config: &ExperimentConfig, workers: usize) -> Result<Report> {
    config.validate()?;
    let table = KernelPrimitive::new(config.hurst, &config.quadrature)?;
    let mut out = Table::new("samples.csv", &["source", "eps", "replication", "probe", "value"]);
    let sampler = FbmSampler::new(config.hurst, &grid_for(&config.integrand, &config.probes))?;
    let exact = run_replications(config.replications, config.seed, workers, |_, seed| {
        let path = sampler.sample(seed.derive(LABEL_REFERENCE));
        config
            .probes
            .iter()
            .map(|&t| exact_multiple_integral(config.hurst, &config.integrand, t, &path))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut emit = |source: &str, eps: String, rows: &[Vec<f64>]| {
        for (i, row) in rows.iter().enumerate() {
            for (p, v) in config.probes.iter().zip(row) {
                out.push(vec![source.into(), eps.clone(), i.to_string(), num(*p), num(*v)]);
            }
        }
    };
    emit("exact", String::new(), &exact);
    for k in 0..config.eps_schedule.len() {
        let block = approximation_samples(config, &table, k, workers)?;
        emit("approx", num(block.eps), &block.samples);
    }
    Ok(Report {
        title: "sample".into(),
        tables: vec![out],
        verdicts: Vec::new(),
    })
}
