//! Regime-tagged one-dimensional stationary densities.

use std::io::Write;

use serde::Serialize;

use crate::empirics::Support;
use crate::error::{ChiarellaError, Result};
use crate::fast_trend::variance_x;
use crate::linear::{gaussian_ln_pdf, linear_validity, lyapunov_covariance};
use crate::model::{ModelParams, Regime};
use crate::slow_trend::ln_gaussian_cosh_density;
use crate::strong_coupling::{self, TrendMarginal};

/// Evaluates a normalised density in log space.
pub trait Density1D {
    fn ln_pdf(&self, x: f64) -> f64;

    fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Interval outside which the density is negligible (below ~1e-12 of its mass).
    fn effective_support(&self) -> (f64, f64);
}

#[derive(Debug, Clone)]
pub enum AnalyticDensity {
    /// Mispricing marginal of the linearised Gaussian law.
    LinearGaussian { var: f64 },
    /// Large-`gamma` slow-trend law.
    GaussianCosh { params: ModelParams<f64> },
    /// Weak-coupling fast-trend Gaussian with the exact variance.
    FastTrendGaussian { var: f64 },
    /// Quasi-static strong-coupling Gaussian, only when `Z(theta) > 0`.
    StrongCouplingQuasiStatic { var: f64 },
    /// Trend marginal `p(M)`.
    TrendMarginal { law: TrendMarginal, params: ModelParams<f64> },
}

/// A density together with the label of the law and any regime warnings.
#[derive(Debug, Clone)]
pub struct DensityBuild {
    pub density: AnalyticDensity,
    pub warnings: Vec<String>,
}

impl AnalyticDensity {
    /// Mispricing density for `regime`.
    pub fn for_regime(p: &ModelParams<f64>, regime: Regime) -> Result<DensityBuild> {
        let mut warnings = Vec::new();
        let density = match regime {
            Regime::Linear => {
                let c = lyapunov_covariance(p)?;
                let v = linear_validity(p, &c);
                if !v.valid {
                    warnings.push(format!(
                        "gamma*sigma_M = {} is not small (threshold {}): linearisation is unreliable",
                        v.gamma_sigma_m,
                        crate::linear::LINEAR_VALIDITY_THRESHOLD
                    ));
                }
                AnalyticDensity::LinearGaussian { var: c.var_delta }
            }
            Regime::SlowTrend => {
                if p.alpha >= p.kappa {
                    warnings.push(format!(
                        "alpha = {} is not small against kappa = {}: slow-trend law is out of regime",
                        p.alpha, p.kappa
                    ));
                }
                AnalyticDensity::GaussianCosh { params: *p }
            }
            Regime::FastTrendWeak => {
                let m = variance_x(p)?;
                warnings.extend(m.warnings.iter().cloned());
                AnalyticDensity::FastTrendGaussian { var: m.x_sq_exact }
            }
            Regime::StrongCoupling => {
                let r = strong_coupling::report(p)?;
                warnings.extend(r.warnings.iter().cloned());
                AnalyticDensity::StrongCouplingQuasiStatic { var: strong_coupling::quasi_static_variance(p)? }
            }
        };
        Ok(DensityBuild { density, warnings })
    }

    pub fn trend_marginal(p: &ModelParams<f64>) -> Result<Self> {
        Ok(AnalyticDensity::TrendMarginal { law: TrendMarginal::new(p)?, params: *p })
    }

    /// Short name of the law.
    pub fn label(&self) -> &'static str {
        match self {
            AnalyticDensity::LinearGaussian { .. } => "linear-gaussian",
            AnalyticDensity::GaussianCosh { .. } => "gaussian-cosh",
            AnalyticDensity::FastTrendGaussian { .. } => "fast-trend-gaussian",
            AnalyticDensity::StrongCouplingQuasiStatic { .. } => "strong-coupling-quasi-static",
            AnalyticDensity::TrendMarginal { .. } => "trend-marginal",
        }
    }

    /// Formula of the law, for output metadata.
    pub fn equation(&self) -> &'static str {
        match self {
            AnalyticDensity::LinearGaussian { .. } => {
                "N(0, var_delta) with var_delta from the stationary Lyapunov covariance"
            }
            AnalyticDensity::GaussianCosh { .. } => {
                "sqrt(kappa/(pi sigma^2)) exp(-beta^2/(kappa sigma^2)) cosh(2 beta x/sigma^2) exp(-kappa x^2/sigma^2)"
            }
            AnalyticDensity::FastTrendGaussian { .. } => "N(0, <x^2>) with the Gamma-ratio variance",
            AnalyticDensity::StrongCouplingQuasiStatic { .. } => "N(0, sigma_x^2 / (2 Z(theta) kappa))",
            AnalyticDensity::TrendMarginal { .. } => {
                "cosh(gamma M)^(2 theta^2/(beta gamma)) exp(-M^2 Z/(sigma_x^2 kappa + Z alpha sigma_n^2)), normalised numerically"
            }
        }
    }

    /// Values on a uniform grid of `n` points over `[lo, hi]`.
    pub fn grid(&self, lo: f64, hi: f64, n: usize) -> Result<Vec<(f64, f64)>> {
        if n < 2 || !(hi > lo) {
            return Err(ChiarellaError::InvalidSpec(format!("bad grid [{lo}, {hi}] with {n} points")));
        }
        Ok((0..n)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (x, Density1D::pdf(self, x))
            })
            .collect())
    }

    /// Writes `x,p` CSV rows for the grid.
    pub fn write_csv<W: Write>(&self, w: &mut W, lo: f64, hi: f64, n: usize) -> Result<()> {
        let rows = self.grid(lo, hi, n)?;
        let io = |e: std::io::Error| ChiarellaError::InvalidSpec(format!("write failed: {e}"));
        writeln!(w, "x,p").map_err(io)?;
        for (x, p) in rows {
            writeln!(w, "{x},{p}").map_err(io)?;
        }
        Ok(())
    }
}

fn gaussian_support(var: f64) -> (f64, f64) {
    let h = 8.0 * var.sqrt();
    (-h, h)
}

impl Density1D for AnalyticDensity {
    fn ln_pdf(&self, x: f64) -> f64 {
        match self {
            AnalyticDensity::LinearGaussian { var }
            | AnalyticDensity::FastTrendGaussian { var }
            | AnalyticDensity::StrongCouplingQuasiStatic { var } => gaussian_ln_pdf(x, *var),
            AnalyticDensity::GaussianCosh { params } => ln_gaussian_cosh_density(x, params),
            AnalyticDensity::TrendMarginal { law, .. } => law.ln_density(x),
        }
    }

    fn effective_support(&self) -> (f64, f64) {
        match self {
            AnalyticDensity::LinearGaussian { var }
            | AnalyticDensity::FastTrendGaussian { var }
            | AnalyticDensity::StrongCouplingQuasiStatic { var } => gaussian_support(*var),
            AnalyticDensity::GaussianCosh { params } => {
                let s = (params.sigma_sq() / (2.0 * params.kappa)).sqrt();
                let h = params.beta / params.kappa + 8.0 * s;
                (-h, h)
            }
            AnalyticDensity::TrendMarginal { law, .. } => {
                let m = law.positive_mode();
                let h = m + 8.0 * law.width();
                (-h, h)
            }
        }
    }
}

impl Support for AnalyticDensity {
    fn support(&self) -> (f64, f64) {
        self.effective_support()
    }

    fn pdf(&self, x: f64) -> f64 {
        Density1D::pdf(self, x)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityMetadata {
    pub regime: String,
    pub law: String,
    pub equation: String,
    pub warnings: Vec<String>,
    pub params: ModelParams<f64>,
}
