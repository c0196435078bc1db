//! Sample moments with standard errors, and the two-sample KS distance.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// unbiased sample variance
    pub variance: f64,
    pub se_mean: f64,
    /// large-sample SE of the variance, from the fourth central moment
    pub se_variance: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::domain("moments need at least two samples"));
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let (mut m2, mut m4) = (0.0, 0.0);
        for x in xs {
            let d = (x - mean) * (x - mean);
            m2 += d;
            m4 += d * d;
        }
        let variance = m2 / (n - 1.0);
        let (m2, m4) = (m2 / n, m4 / n);
        Ok(Self {
            n: xs.len(),
            mean,
            variance,
            se_mean: (variance / n).sqrt(),
            se_variance: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
        })
    }
}

/// Sample covariance and its SE, taken from the spread of the centered products.
pub fn covariance(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::domain("covariance needs two equally long samples of size >= 2"));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let m = Moments::of(&prods)?;
    Ok((m.mean * n / (n - 1.0), m.se_mean))
}

/// sup_x |F_a(x) - F_b(x)| for the empirical distribution functions.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("KS distance needs two nonempty samples"));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::domain("KS distance is undefined for NaN samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // step past every copy of the smaller value before comparing
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}
