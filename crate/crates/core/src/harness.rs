//! Replication engine and convergence reports.
//!
//! Replication i of any experiment draws from the stream (master, i) under a
//! purpose label, so samples do not depend on how work is scheduled; rayon's
//! indexed collect keeps them in replication order.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::approx::{i_n_eps, ExclusionSpec, GridSpec, MAX_APPROX_ARITY};
use crate::chaos::{analytic_covariance, exact_multiple_integral, grid_for, FbmSampler};
use crate::error::{Error, Result};
use crate::fbm_kernel::HurstParam;
use crate::kernel_table::KernelPrimitive;
use crate::noise::NoiseKind;
use crate::quadrature::QuadratureSpec;
use crate::seed::SeedSpec;
use crate::simple::SimpleFunction;
use crate::stats::{covariance, ks_statistic, Moments};

pub const MIN_REPLICATIONS: usize = 100;

/// Stream labels; each purpose gets its own key.
pub(crate) const LABEL_REFERENCE: u64 = 1;
pub(crate) const LABEL_NOISE: u64 = 1 << 20;

/// Runs `f(i, seed_i)` for i in 0..n on `workers` threads (0: rayon's
/// default). The first failure, by replication index, is returned.
pub fn run_replications<T, F>(n: usize, master: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, SeedSpec) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<T>> = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| f(i, SeedSpec::new(master, i as u64)))
            .collect()
    });
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::Replication {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub hurst: HurstParam,
    pub integrand: SimpleFunction,
    pub probes: Vec<f64>,
    pub eps_schedule: Vec<f64>,
    pub replications: usize,
    pub noise: NoiseKind,
    /// grid step δ = ε / grid_divisor
    pub grid_divisor: f64,
    /// band half-width; the noise ε when absent
    pub exclusion: Option<f64>,
    pub quadrature: QuadratureSpec,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.hurst.require_chaos()?;
        if self.replications < MIN_REPLICATIONS {
            return Err(Error::Config(format!(
                "replications must be at least {MIN_REPLICATIONS}, got {}",
                self.replications
            )));
        }
        validate_schedule(&self.eps_schedule)?;
        if self.probes.is_empty() || self.probes.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::Config("probes must be nonempty and lie in (0, 1]".into()));
        }
        let n = self.integrand.arity();
        if n == 0 || n > MAX_APPROX_ARITY {
            return Err(Error::Config(format!(
                "integrand order must be between 1 and {MAX_APPROX_ARITY}, got {n}"
            )));
        }
        if !(self.grid_divisor >= 4.0) {
            return Err(Error::Config(format!(
                "grid_divisor must be at least 4, got {}",
                self.grid_divisor
            )));
        }
        if let Some(x) = self.exclusion {
            ExclusionSpec::new(x)?;
        }
        Ok(())
    }
}

pub fn validate_schedule(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::Config("the eps schedule is empty".into()));
    }
    if eps.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::Config("every eps must lie in (0, 1]".into()));
    }
    if eps.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::Config("the eps schedule must be strictly decreasing".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    /// a trend needs at least two schedule points
    Insufficient,
}

impl Outcome {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Insufficient => "insufficient schedule",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub outcome: Outcome,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, outcome: Outcome, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            outcome,
            detail: detail.into(),
        }
    }
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Self {
            file: file.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Fixed float format for every CSV cell.
pub fn num(x: f64) -> String {
    format!("{x:.12e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub title: String,
    pub tables: Vec<Table>,
    pub verdicts: Vec<Verdict>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.outcome == Outcome::Pass)
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{}\n", self.title);
        for v in &self.verdicts {
            let _ = writeln!(s, "  [{}] {}: {}", v.outcome.label(), v.name, v.detail);
        }
        let _ = writeln!(s, "overall: {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for t in &self.tables {
            std::fs::write(dir.join(&t.file), t.to_csv())?;
        }
        std::fs::write(dir.join("summary.txt"), self.summary())
    }
}

/// Trend check for a statistic that should shrink along the schedule: the
/// last value must sit below the first by more than `k` combined SEs.
pub fn trend_verdict(name: &str, values: &[(f64, f64)], k: f64) -> Verdict {
    if values.len() < 2 {
        return Verdict::new(name, Outcome::Insufficient, "need at least two eps values");
    }
    let (first, se1) = values[0];
    let (last, se2) = *values.last().unwrap();
    let margin = k * (se1 * se1 + se2 * se2).sqrt();
    let ok = last < first - margin;
    Verdict::new(
        name,
        Outcome::from_bool(ok),
        format!("first {first:.4e}, last {last:.4e}, required drop > {margin:.3e}"),
    )
}

/// SD of the two-sample KS statistic under the null, about 0.26 sqrt(1/n + 1/m);
/// used as the KS "standard error" in trend checks.
pub fn ks_noise(n: usize, m: usize) -> f64 {
    0.26 * (1.0 / n as f64 + 1.0 / m as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub eps: f64,
    pub probe: f64,
    pub moments: Moments,
    pub analytic_variance: f64,
    pub ks: f64,
    pub ks_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovRow {
    pub eps: f64,
    pub probe_i: f64,
    pub probe_j: f64,
    pub cov: f64,
    pub se: f64,
    pub analytic: f64,
}

/// Samples of the probe vector: `samples[i][p]` is replication i at probe p.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSamples {
    pub eps: f64,
    pub samples: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ProbeRow>,
    pub covariances: Vec<CovRow>,
    pub verdicts: Vec<Verdict>,
}

fn column(samples: &[Vec<f64>], p: usize) -> Vec<f64> {
    samples.iter().map(|s| s[p]).collect()
}

impl ConvergenceReport {
    /// Statistics and verdicts from stored samples; no randomness involved.
    pub fn from_samples(
        hurst: HurstParam,
        f: &SimpleFunction,
        probes: &[f64],
        reference: &[Vec<f64>],
        per_eps: &[ProbeSamples],
    ) -> Result<Self> {
        let mut rows = Vec::new();
        let mut covariances = Vec::new();
        let refs: Vec<Vec<f64>> = (0..probes.len()).map(|p| column(reference, p)).collect();
        let mut analytic = vec![vec![0.0; probes.len()]; probes.len()];
        for (i, &ti) in probes.iter().enumerate() {
            for (j, &tj) in probes.iter().enumerate() {
                analytic[i][j] = analytic_covariance(hurst, f, ti, tj)?;
            }
        }
        for block in per_eps {
            let cols: Vec<Vec<f64>> = (0..probes.len()).map(|p| column(&block.samples, p)).collect();
            for (p, &t) in probes.iter().enumerate() {
                rows.push(ProbeRow {
                    eps: block.eps,
                    probe: t,
                    moments: Moments::of(&cols[p])?,
                    analytic_variance: analytic[p][p],
                    ks: ks_statistic(&cols[p], &refs[p])?,
                    ks_se: ks_noise(cols[p].len(), refs[p].len()),
                });
            }
            for i in 0..probes.len() {
                for j in i + 1..probes.len() {
                    let (cov, se) = covariance(&cols[i], &cols[j])?;
                    covariances.push(CovRow {
                        eps: block.eps,
                        probe_i: probes[i],
                        probe_j: probes[j],
                        cov,
                        se,
                        analytic: analytic[i][j],
                    });
                }
            }
        }
        let verdicts = Self::verdicts(probes, &rows, &covariances);
        Ok(Self {
            rows,
            covariances,
            verdicts,
        })
    }

    fn verdicts(probes: &[f64], rows: &[ProbeRow], covs: &[CovRow]) -> Vec<Verdict> {
        let mut out = Vec::new();
        let Some(last_eps) = rows.last().map(|r| r.eps) else {
            return out;
        };
        for &t in probes {
            let series: Vec<&ProbeRow> = rows.iter().filter(|r| r.probe == t).collect();
            let ks: Vec<(f64, f64)> = series.iter().map(|r| (r.ks, r.ks_se)).collect();
            out.push(trend_verdict(&format!("ks_trend t={t}"), &ks, 1.0));
            let last = series.last().unwrap();
            let m = &last.moments;
            out.push(Verdict::new(
                format!("mean t={t}"),
                Outcome::from_bool(m.mean.abs() <= 4.0 * m.se_mean),
                format!("{:.4e} (4 SE = {:.3e}) at eps={last_eps}", m.mean, 4.0 * m.se_mean),
            ));
            let dv = m.variance - last.analytic_variance;
            out.push(Verdict::new(
                format!("variance t={t}"),
                Outcome::from_bool(dv.abs() <= 4.0 * m.se_variance),
                format!(
                    "{:.4e} vs {:.4e} (4 SE = {:.3e}) at eps={last_eps}",
                    m.variance,
                    last.analytic_variance,
                    4.0 * m.se_variance
                ),
            ));
        }
        for c in covs.iter().filter(|c| c.eps == last_eps) {
            out.push(Verdict::new(
                format!("cov t={},{}", c.probe_i, c.probe_j),
                Outcome::from_bool((c.cov - c.analytic).abs() <= 4.0 * c.se),
                format!(
                    "{:.4e} vs {:.4e} (4 SE = {:.3e}) at eps={last_eps}",
                    c.cov,
                    c.analytic,
                    4.0 * c.se
                ),
            ));
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.outcome == Outcome::Pass)
    }

    pub fn probe_table(&self) -> Table {
        let mut t = Table::new(
            "fdd_probes.csv",
            &[
                "eps",
                "probe",
                "n",
                "mean",
                "se_mean",
                "variance",
                "se_variance",
                "analytic_variance",
                "variance_error",
                "ks",
                "ks_se",
            ],
        );
        for r in &self.rows {
            let m = &r.moments;
            t.push(vec![
                num(r.eps),
                num(r.probe),
                m.n.to_string(),
                num(m.mean),
                num(m.se_mean),
                num(m.variance),
                num(m.se_variance),
                num(r.analytic_variance),
                num(m.variance - r.analytic_variance),
                num(r.ks),
                num(r.ks_se),
            ]);
        }
        t
    }

    pub fn covariance_table(&self) -> Table {
        let mut t = Table::new(
            "fdd_covariance.csv",
            &["eps", "probe_i", "probe_j", "cov", "se_cov", "analytic_cov", "z"],
        );
        for c in &self.covariances {
            let z = if c.se > 0.0 { (c.cov - c.analytic) / c.se } else { 0.0 };
            t.push(vec![
                num(c.eps),
                num(c.probe_i),
                num(c.probe_j),
                num(c.cov),
                num(c.se),
                num(c.analytic),
                num(z),
            ]);
        }
        t
    }

    pub fn into_report(self, title: &str) -> Report {
        Report {
            title: title.to_string(),
            tables: vec![self.probe_table(), self.covariance_table()],
            verdicts: self.verdicts,
        }
    }
}

/// Exact samples of I_n^H(f 1_{[0,t]}^{⊗n}) at every probe.
pub fn reference_samples(config: &ExperimentConfig, workers: usize) -> Result<Vec<Vec<f64>>> {
    let h = config.hurst;
    let f = &config.integrand;
    let sampler = FbmSampler::new(h, &grid_for(f, &config.probes))?;
    run_replications(config.replications, config.seed, workers, |_, seed| {
        let path = sampler.sample(seed.derive(LABEL_REFERENCE));
        config
            .probes
            .iter()
            .map(|&t| exact_multiple_integral(h, f, t, &path))
            .collect()
    })
}

/// Samples of (I_{n,ε}(f)_{t_1}, …, I_{n,ε}(f)_{t_r}) for one ε.
pub fn approximation_samples(
    config: &ExperimentConfig,
    table: &KernelPrimitive,
    eps_index: usize,
    workers: usize,
) -> Result<ProbeSamples> {
    let eps = config.eps_schedule[eps_index];
    let grid = GridSpec::relative(eps, config.grid_divisor)?;
    let excl = ExclusionSpec::new(config.exclusion.unwrap_or(eps))?;
    let label = LABEL_NOISE + eps_index as u64;
    let samples = run_replications(config.replications, config.seed, workers, |_, seed| {
        let path = config.noise.sample(eps, seed.derive(label))?;
        config
            .probes
            .iter()
            .map(|&t| i_n_eps(table, &config.integrand, &path, t, &excl, &grid))
            .collect()
    })?;
    Ok(ProbeSamples { eps, samples })
}

pub fn fdd_convergence_study(config: &ExperimentConfig, workers: usize) -> Result<ConvergenceReport> {
    config.validate()?;
    let table = KernelPrimitive::new(config.hurst, &config.quadrature)?;
    let reference = reference_samples(config, workers)?;
    let per_eps = (0..config.eps_schedule.len())
        .map(|k| approximation_samples(config, &table, k, workers))
        .collect::<Result<Vec<_>>>()?;
    ConvergenceReport::from_samples(
        config.hurst,
        &config.integrand,
        &config.probes,
        &reference,
        &per_eps,
    )
}
