use super::normal;
use super::{check_q, check_samples, Fit, FitError, FitMeta, LatencyModel, QuantileError};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Gaussian {
    pub mu: f64,
    pub sigma: f64,
}

impl Gaussian {
    pub fn ln_pdf(&self, x: f64) -> f64 {
        normal::ln_pdf((x - self.mu) / self.sigma) - libm::log(self.sigma)
    }
}

/// Maximum likelihood: sample mean and population standard deviation.
pub fn fit_gaussian(samples: &[f64]) -> Result<Fit<Gaussian>, FitError> {
    check_samples(samples, 2)?;
    let n = samples.len() as f64;
    let mu = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(FitError::ZeroVariance);
    }
    let model = Gaussian {
        mu,
        sigma: libm::sqrt(var),
    };
    let loglik = samples.iter().map(|&x| model.ln_pdf(x)).sum();
    Ok(Fit {
        model,
        meta: FitMeta::closed_form(samples.len(), Some(loglik)),
    })
}

impl LatencyModel for Gaussian {
    fn cdf(&self, x: f64) -> f64 {
        normal::cdf((x - self.mu) / self.sigma)
    }

    fn exceedance(&self, x: f64) -> f64 {
        normal::sf((x - self.mu) / self.sigma)
    }

    fn quantile(&self, q: f64) -> Result<f64, QuantileError> {
        check_q(q)?;
        Ok(self.mu + self.sigma * normal::inv_cdf(q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_pair() {
        let f = fit_gaussian(&[-1.0, 1.0]).unwrap();
        assert_eq!(f.model, Gaussian { mu: 0.0, sigma: 1.0 });
    }

    #[test]
    fn standard_p99() {
        let g = Gaussian { mu: 0.0, sigma: 1.0 };
        assert!((g.quantile(0.99).unwrap() - 2.326_347_874).abs() < 1e-6);
    }

    #[test]
    fn exceedance_two_sigma() {
        let g = Gaussian { mu: 40.0, sigma: 5.0 };
        assert!((g.exceedance(50.0) - 0.022_750_131_948).abs() < 1e-9);
    }

    #[test]
    fn zero_variance() {
        assert_eq!(fit_gaussian(&[5.0, 5.0]), Err(FitError::ZeroVariance));
        assert!(matches!(fit_gaussian(&[5.0]), Err(FitError::TooFew { .. })));
    }
}
