//! TOML experiment file. Shared physical defaults sit in `[defaults]`; each
//! suite has its own section, which may override them.

use std::path::Path;

use fbm_chaos::harness::ExperimentConfig;
use fbm_chaos::studies::{BandStudyConfig, EtaCovConfig, KernelCheckConfig};
use fbm_chaos::{HurstParam, Interval, NoiseKind, QuadratureSpec, SimpleFunction};
use serde::Deserialize;

pub type ConfigResult<T> = std::result::Result<T, String>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub defaults: Defaults,
    pub quadrature: Quadrature,
    pub kernel_check: Option<KernelCheckSection>,
    pub eta_cov: Option<EtaCovSection>,
    pub lemma3: Option<BandSection>,
    pub lemma7: Option<BandSection>,
    pub fdd: Option<FddSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    pub hurst: f64,
    pub eps: Vec<f64>,
    pub replications: usize,
    pub grid_divisor: f64,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quadrature {
    pub nodes: usize,
    pub tolerance: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelCheckSection {
    pub hurst: Vec<f64>,
    pub times: Vec<f64>,
    pub points: usize,
    pub norm_tolerance: f64,
    pub pointwise_tolerance: f64,
    pub pair_hurst: f64,
    /// [a, b, c, d] for the pair (a, b], (c, d]
    pub pairs: Vec<[f64; 4]>,
    pub relative_tolerance: f64,
    /// quadrature tolerance used by this suite only
    pub quadrature_tolerance: f64,
}

/// Per-suite overrides of `[defaults]`. serde cannot combine `flatten` with
/// `deny_unknown_fields`, so each section repeats the fields.
struct Overrides<'a> {
    hurst: Option<f64>,
    eps: Option<&'a Vec<f64>>,
    replications: Option<usize>,
    grid_divisor: Option<f64>,
}

macro_rules! overrides {
    ($s:expr) => {
        Overrides {
            hurst: $s.hurst,
            eps: $s.eps.as_ref(),
            replications: $s.replications,
            grid_divisor: $s.grid_divisor,
        }
    };
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaCovSection {
    pub noise: String,
    pub s: f64,
    pub t: f64,
    pub hurst: Option<f64>,
    pub eps: Option<Vec<f64>>,
    pub replications: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSection {
    pub noise: Vec<String>,
    pub intervals: Vec<[f64; 2]>,
    pub hurst: Option<f64>,
    pub eps: Option<Vec<f64>>,
    pub replications: Option<usize>,
    pub grid_divisor: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FddSection {
    /// one term per line: "alpha; a1,b1; a2,b2; ..."
    pub integrand: String,
    pub probes: Vec<f64>,
    pub noise: String,
    pub exclusion: Option<f64>,
    pub hurst: Option<f64>,
    pub eps: Option<Vec<f64>>,
    pub replications: Option<usize>,
    pub grid_divisor: Option<f64>,
}

pub fn load(path: &Path) -> ConfigResult<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn field<T, E: std::fmt::Display>(name: &str, r: std::result::Result<T, E>) -> ConfigResult<T> {
    r.map_err(|e| format!("{name}: {e}"))
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> ConfigResult<&'a T> {
    s.as_ref().ok_or_else(|| format!("missing [{name}] section"))
}

fn interval(name: &str, [a, b]: [f64; 2]) -> ConfigResult<Interval> {
    field(name, Interval::new(a, b))
}

struct Resolved {
    hurst: HurstParam,
    eps: Vec<f64>,
    replications: usize,
    grid_divisor: f64,
}

impl FileConfig {
    fn quadrature(&self) -> ConfigResult<QuadratureSpec> {
        field(
            "quadrature",
            QuadratureSpec::adaptive(self.quadrature.nodes, self.quadrature.tolerance),
        )
    }

    fn resolve(&self, sec: &str, o: &Overrides<'_>) -> ConfigResult<Resolved> {
        let d = &self.defaults;
        Ok(Resolved {
            hurst: field(&format!("{sec}.hurst"), HurstParam::new(o.hurst.unwrap_or(d.hurst)))?,
            eps: o.eps.unwrap_or(&d.eps).clone(),
            replications: o.replications.unwrap_or(d.replications),
            grid_divisor: o.grid_divisor.unwrap_or(d.grid_divisor),
        })
    }

    pub fn kernel_check(&self) -> ConfigResult<KernelCheckConfig> {
        let k = section(&self.kernel_check, "kernel_check")?;
        let pairs = k
            .pairs
            .iter()
            .map(|&[a, b, c, d]| {
                Ok((interval("kernel_check.pairs", [a, b])?, interval("kernel_check.pairs", [c, d])?))
            })
            .collect::<ConfigResult<Vec<_>>>()?;
        Ok(KernelCheckConfig {
            hurst: k.hurst.clone(),
            times: k.times.clone(),
            points: k.points,
            norm_tolerance: k.norm_tolerance,
            pointwise_tolerance: k.pointwise_tolerance,
            pair_hurst: k.pair_hurst,
            pairs,
            relative_tolerance: k.relative_tolerance,
            quadrature: field(
                "kernel_check.quadrature_tolerance",
                self.quadrature()?.with_tolerance(k.quadrature_tolerance),
            )?,
        })
    }

    pub fn eta_cov(&self, seed: u64) -> ConfigResult<EtaCovConfig> {
        let e = section(&self.eta_cov, "eta_cov")?;
        // η_ε is integrated exactly, so there is no grid to override
        let o = Overrides {
            hurst: e.hurst,
            eps: e.eps.as_ref(),
            replications: e.replications,
            grid_divisor: None,
        };
        let r = self.resolve("eta_cov", &o)?;
        Ok(EtaCovConfig {
            hurst: r.hurst,
            eps_schedule: r.eps,
            replications: r.replications,
            noise: field("eta_cov.noise", NoiseKind::parse(&e.noise))?,
            s: e.s,
            t: e.t,
            quadrature: self.quadrature()?,
            seed,
        })
    }

    pub fn band(&self, name: &str, seed: u64) -> ConfigResult<BandStudyConfig> {
        let b = match name {
            "lemma3" => section(&self.lemma3, name)?,
            _ => section(&self.lemma7, name)?,
        };
        let r = self.resolve(name, &overrides!(b))?;
        Ok(BandStudyConfig {
            hurst: r.hurst,
            eps_schedule: r.eps,
            replications: r.replications,
            kinds: b
                .noise
                .iter()
                .map(|s| field(&format!("{name}.noise"), NoiseKind::parse(s)))
                .collect::<ConfigResult<_>>()?,
            intervals: b
                .intervals
                .iter()
                .map(|&iv| interval(&format!("{name}.intervals"), iv))
                .collect::<ConfigResult<_>>()?,
            grid_divisor: r.grid_divisor,
            quadrature: self.quadrature()?,
            seed,
        })
    }

    pub fn experiment(&self, seed: u64) -> ConfigResult<ExperimentConfig> {
        let f = section(&self.fdd, "fdd")?;
        let r = self.resolve("fdd", &overrides!(f))?;
        let config = ExperimentConfig {
            hurst: r.hurst,
            integrand: field("fdd.integrand", SimpleFunction::parse(&f.integrand))?,
            probes: f.probes.clone(),
            eps_schedule: r.eps,
            replications: r.replications,
            noise: field("fdd.noise", NoiseKind::parse(&f.noise))?,
            grid_divisor: r.grid_divisor,
            exclusion: f.exclusion,
            quadrature: self.quadrature()?,
            seed,
        };
        field("fdd", config.validate())?;
        Ok(config)
    }
}
