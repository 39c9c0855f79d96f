use super::{check_q, check_samples, Fit, FitError, FitMeta, FitWarning, LatencyModel, QuantileError};

/// Uniform on `[a, b]`. `a == b` is a point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Uniform {
    pub a: f64,
    pub b: f64,
}

impl Uniform {
    pub fn is_degenerate(&self) -> bool {
        self.a == self.b
    }
}

/// Maximum-likelihood uniform: the sample range.
pub fn fit_uniform(samples: &[f64]) -> Result<Fit<Uniform>, FitError> {
    check_samples(samples, 2)?;
    let (a, b) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let model = Uniform { a, b };
    let n = samples.len();
    let mut meta = if model.is_degenerate() {
        FitMeta::closed_form(n, None)
    } else {
        FitMeta::closed_form(n, Some(-(n as f64) * libm::log(b - a)))
    };
    if model.is_degenerate() {
        meta.warning = Some(FitWarning::DegenerateSupport);
    }
    Ok(Fit { model, meta })
}

impl LatencyModel for Uniform {
    fn cdf(&self, x: f64) -> f64 {
        if x < self.a {
            0.0
        } else if x >= self.b {
            1.0
        } else {
            (x - self.a) / (self.b - self.a)
        }
    }

    fn quantile(&self, q: f64) -> Result<f64, QuantileError> {
        check_q(q)?;
        Ok(self.a + q * (self.b - self.a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_is_mle() {
        let f = fit_uniform(&[2.0, 1.0, 3.0]).unwrap();
        assert_eq!(f.model, Uniform { a: 1.0, b: 3.0 });
        assert!(f.meta.warning.is_none());
    }

    #[test]
    fn linear_quantile_and_tail() {
        let u = Uniform { a: 0.0, b: 100.0 };
        assert!((u.quantile(0.99).unwrap() - 99.0).abs() < 1e-12);
        assert!((u.exceedance(99.0) - 0.01).abs() < 1e-12);
        assert_eq!(u.exceedance(-5.0), 1.0);
        assert_eq!(u.exceedance(150.0), 0.0);
    }

    #[test]
    fn point_mass() {
        let f = fit_uniform(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(f.meta.warning, Some(FitWarning::DegenerateSupport));
        assert_eq!(f.model.quantile(0.3).unwrap(), 5.0);
        assert_eq!(f.model.quantile(0.99).unwrap(), 5.0);
        assert_eq!(f.model.exceedance(50.0), 0.0);
        assert_eq!(f.model.exceedance(4.0), 1.0);
    }

    #[test]
    fn too_few() {
        assert_eq!(
            fit_uniform(&[1.0]),
            Err(FitError::TooFew { need: 2, got: 1 })
        );
    }
}
