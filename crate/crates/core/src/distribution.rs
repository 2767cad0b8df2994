//! Attractor projections, return histograms and tail statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BURN_IN: usize = 1000;
pub const DEFAULT_BINS: usize = 200;
pub const MIN_HISTOGRAM_SAMPLES: usize = 1000;
pub const MIN_BINS: usize = 10;
/// Bins whose centre lies beyond this many standard deviations count as tail.
pub const TAIL_SIGMAS: f64 = 2.0;

/// Pairs `(r_{t-1}, r_t)` after dropping the first `burn_in` returns.
pub fn phase_portrait(returns: &[f64], burn_in: usize) -> Vec<(f64, f64)> {
    let tail = returns.get(burn_in..).unwrap_or(&[]);
    tail.windows(2).map(|w| (w[0], w[1])).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
    pub sample_mean: f64,
    pub sample_variance: f64,
    /// Zero-mean Gaussian density with the sample variance, at bin centres.
    /// Absent when the sample variance is zero.
    pub matched_gaussian: Option<Vec<f64>>,
    pub samples: usize,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.densities.len()
    }

    pub fn centres(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|e| e[1] - e[0]).collect()
    }

    /// `Σ density · width`.
    pub fn mass(&self) -> f64 {
        self.densities.iter().zip(self.widths()).map(|(d, w)| d * w).sum()
    }

    pub fn is_degenerate(&self) -> bool {
        self.matched_gaussian.is_none()
    }

    /// Natural log of the densities, `None` for empty bins.
    pub fn log_densities(&self) -> Vec<Option<f64>> {
        self.densities
            .iter()
            .map(|&d| (d > 0.0).then(|| d.ln()))
            .collect()
    }

    /// Compare mass beyond [`TAIL_SIGMAS`] standard deviations with the overlay.
    pub fn tail_comparison(&self) -> Option<TailComparison> {
        let gauss = self.matched_gaussian.as_ref()?;
        let sigma = self.sample_variance.sqrt();
        let cut = TAIL_SIGMAS * sigma;
        let mut out = TailComparison {
            sigma,
            threshold: cut,
            empirical_mass: 0.0,
            gaussian_mass: 0.0,
            tail_bins: 0,
            tail_bins_above_gaussian: 0,
            fat_tailed: false,
        };
        for ((c, w), (d, g)) in self
            .centres()
            .into_iter()
            .zip(self.widths())
            .zip(self.densities.iter().zip(gauss))
        {
            if c.abs() > cut {
                out.tail_bins += 1;
                out.empirical_mass += d * w;
                out.gaussian_mass += g * w;
                if d > g {
                    out.tail_bins_above_gaussian += 1;
                }
            }
        }
        out.fat_tailed = out.empirical_mass > out.gaussian_mass;
        Some(out)
    }

    pub fn to_csv(&self) -> crate::export::CsvTable {
        let mut t = crate::export::CsvTable::new(&[
            "bin_lo",
            "bin_hi",
            "centre",
            "density",
            "log_density",
            "gaussian",
            "log_gaussian",
        ]);
        let gauss = self.matched_gaussian.clone();
        let logs = self.log_densities();
        for (i, c) in self.centres().into_iter().enumerate() {
            let g = gauss.as_ref().map_or(f64::NAN, |g| g[i]);
            let lg = if g > 0.0 { g.ln() } else { f64::NAN };
            t.push_row(&[
                self.bin_edges[i],
                self.bin_edges[i + 1],
                c,
                self.densities[i],
                logs[i].unwrap_or(f64::NAN),
                g,
                lg,
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailComparison {
    pub sigma: f64,
    pub threshold: f64,
    pub empirical_mass: f64,
    pub gaussian_mass: f64,
    pub tail_bins: usize,
    pub tail_bins_above_gaussian: usize,
    /// Empirical tail mass exceeds the Gaussian's over the same bins.
    pub fat_tailed: bool,
}

fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Density histogram on a range symmetric about zero that covers every sample.
pub fn return_histogram(returns: &[f64], bins: usize) -> Result<Histogram> {
    if bins < MIN_BINS {
        return Err(Error::param(format!("need at least {MIN_BINS} bins, got {bins}")));
    }
    if returns.len() < MIN_HISTOGRAM_SAMPLES {
        return Err(Error::param(format!(
            "need at least {MIN_HISTOGRAM_SAMPLES} returns, got {}",
            returns.len()
        )));
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(Error::input("returns must be finite"));
    }
    let (mean, mut var) = mean_and_variance(returns);
    if returns.iter().all(|&r| r == returns[0]) {
        var = 0.0;
    }
    let max_abs = returns.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let half = if max_abs > 0.0 { max_abs * (1.0 + 1e-9) } else { 1.0 };
    let width = 2.0 * half / bins as f64;
    let bin_edges: Vec<f64> = (0..=bins).map(|i| -half + i as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &r in returns {
        let i = (((r + half) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let total = returns.len() as f64;
    let densities: Vec<f64> = counts
        .iter()
        .zip(bin_edges.windows(2))
        .map(|(&c, e)| c as f64 / (total * (e[1] - e[0])))
        .collect();
    let matched_gaussian = (var > 0.0).then(|| {
        let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
        bin_edges
            .windows(2)
            .map(|e| {
                let c = 0.5 * (e[0] + e[1]);
                norm * (-c * c / (2.0 * var)).exp()
            })
            .collect()
    });
    Ok(Histogram {
        bin_edges,
        densities,
        sample_mean: mean,
        sample_variance: var,
        matched_gaussian,
        samples: returns.len(),
    })
}

/// Fourth standardised moment minus 3.
pub fn excess_kurtosis(returns: &[f64]) -> Result<f64> {
    if returns.len() < MIN_HISTOGRAM_SAMPLES {
        return Err(Error::param(format!(
            "need at least {MIN_HISTOGRAM_SAMPLES} returns, got {}",
            returns.len()
        )));
    }
    let (mean, var) = mean_and_variance(returns);
    if var <= 0.0 || returns.iter().all(|&r| r == returns[0]) {
        return Err(Error::DegenerateVariance);
    }
    let m4 = returns.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / returns.len() as f64;
    Ok(m4 / (var * var) - 3.0)
}

/// Sample mean and its standard error.
pub fn mean_with_stderr(returns: &[f64]) -> Result<(f64, f64)> {
    if returns.len() < 2 {
        return Err(Error::param("need at least two samples"));
    }
    let (mean, var) = mean_and_variance(returns);
    let n = returns.len() as f64;
    Ok((mean, (var * n / (n - 1.0) / n).sqrt()))
}
