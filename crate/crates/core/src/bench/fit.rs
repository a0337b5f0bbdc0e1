use thiserror::Error;

use super::{BenchSample, Routine, Sweep};

/// Least-squares fit of `T = alpha + beta * L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBetaFit {
    /// Seconds.
    pub alpha: f64,
    /// Bytes per second, `1 / beta`.
    pub beta_inv: f64,
    /// `None` with only two samples.
    pub alpha_sd: Option<f64>,
    /// Standard deviation of `beta` in seconds per byte.
    pub beta_sd: Option<f64>,
    /// Euclidean norm of the residuals, in seconds.
    pub residual: f64,
    pub samples: usize,
}

impl AlphaBetaFit {
    pub fn beta(&self) -> f64 {
        1.0 / self.beta_inv
    }

    /// Standard deviation of `beta_inv`, to first order.
    pub fn beta_inv_sd(&self) -> Option<f64> {
        self.beta_sd.map(|sd| sd * self.beta_inv * self.beta_inv)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least two samples, got {0}")]
    TooFew(usize),
    #[error("all samples share one message size")]
    Degenerate,
}

/// Ordinary least squares over `(size_bytes, seconds)`.
pub fn fit_alpha_beta(samples: &[BenchSample]) -> Result<AlphaBetaFit, FitError> {
    let n = samples.len();
    if n < 2 {
        return Err(FitError::TooFew(n));
    }
    let nf = n as f64;
    let xm = samples.iter().map(|s| s.size_bytes as f64).sum::<f64>() / nf;
    let ym = samples.iter().map(|s| s.seconds).sum::<f64>() / nf;
    let sxx: f64 = samples
        .iter()
        .map(|s| (s.size_bytes as f64 - xm).powi(2))
        .sum();
    if sxx == 0.0 {
        return Err(FitError::Degenerate);
    }
    let sxy: f64 = samples
        .iter()
        .map(|s| (s.size_bytes as f64 - xm) * (s.seconds - ym))
        .sum();
    let beta = sxy / sxx;
    let alpha = ym - beta * xm;
    let rss: f64 = samples
        .iter()
        .map(|s| (s.seconds - alpha - beta * s.size_bytes as f64).powi(2))
        .sum();
    let (alpha_sd, beta_sd) = if n > 2 {
        let var = rss / (nf - 2.0);
        (
            Some((var * (1.0 / nf + xm * xm / sxx)).sqrt()),
            Some((var / sxx).sqrt()),
        )
    } else {
        (None, None)
    };
    Ok(AlphaBetaFit {
        alpha,
        beta_inv: 1.0 / beta,
        alpha_sd,
        beta_sd,
        residual: rss.sqrt(),
        samples: n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutineFit {
    pub routine: Routine,
    pub pe_count: usize,
    pub fit: AlphaBetaFit,
}

/// One fit per size-swept routine and PE count, in first-seen order.
/// Groups that cannot be fitted are left out.
pub fn fit_suite(samples: &[BenchSample]) -> Vec<RoutineFit> {
    let mut groups: Vec<(Routine, usize)> = vec![];
    for s in samples.iter().filter(|s| s.routine.sweep() == Sweep::Size) {
        if !groups.contains(&(s.routine, s.pe_count)) {
            groups.push((s.routine, s.pe_count));
        }
    }
    groups
        .into_iter()
        .filter_map(|(routine, pe_count)| {
            let g: Vec<_> = samples
                .iter()
                .filter(|s| s.routine == routine && s.pe_count == pe_count)
                .cloned()
                .collect();
            fit_alpha_beta(&g).ok().map(|fit| RoutineFit {
                routine,
                pe_count,
                fit,
            })
        })
        .collect()
}
