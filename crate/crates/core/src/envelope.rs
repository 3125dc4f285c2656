use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower/upper mean and lower/upper variance of the response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyEnvelope {
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub sigma2_lo: f64,
    pub sigma2_hi: f64,
}

impl UncertaintyEnvelope {
    /// Checked constructor: `mu_lo <= mu_hi` and `0 <= sigma2_lo <= sigma2_hi`.
    pub fn new(mu_lo: f64, mu_hi: f64, sigma2_lo: f64, sigma2_hi: f64) -> Result<Self> {
        let env = Self {
            mu_lo,
            mu_hi,
            sigma2_lo,
            sigma2_hi,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.mu_lo, self.mu_hi, self.sigma2_lo, self.sigma2_hi];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite envelope {self:?}")));
        }
        if self.mu_lo > self.mu_hi {
            return Err(Error::InvalidData(format!(
                "mu_lo {} > mu_hi {}",
                self.mu_lo, self.mu_hi
            )));
        }
        if self.sigma2_lo < 0.0 || self.sigma2_lo > self.sigma2_hi {
            return Err(Error::InvalidData(format!(
                "variance band [{}, {}] is not ordered and non-negative",
                self.sigma2_lo, self.sigma2_hi
            )));
        }
        Ok(())
    }

    pub fn sigma_lo(&self) -> f64 {
        self.sigma2_lo.sqrt()
    }

    pub fn sigma_hi(&self) -> f64 {
        self.sigma2_hi.sqrt()
    }

    pub fn mu_mid(&self) -> f64 {
        0.5 * (self.mu_lo + self.mu_hi)
    }
}
