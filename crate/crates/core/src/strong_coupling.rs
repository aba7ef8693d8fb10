//! Strong-coupling regime (`alpha, beta >> kappa`).
//!
//! The trend equilibrates quickly given the mispricing, so its conditional law is
//! of Maxwell-Boltzmann form and the feedback `beta tanh(gamma M)` can be
//! replaced by its conditional mean. Linearising that mean renormalises the
//! mean reversion to `kappa Z(theta)`, which changes sign at `theta_c`.

use serde::Serialize;

use crate::error::{ChiarellaError, Result};
use crate::linear::gaussian_ln_pdf;
use crate::model::{Modality, ModalityVerdict, ModelParams, VerdictSource};
use crate::quadrature::{integrate, integrate_real_line};
use crate::scalar::{ln_cosh, Scalar};
use crate::special::{erf, ln_erfc};

/// Below this value of `gamma sigma_n sqrt(alpha)` the saturated-tanh replacement is suspect.
pub const SATURATION_WARNING: f64 = 3.0;
pub const THETA_C_TOL: f64 = 1e-10;

/// `Z(theta) = 1 - 2 theta^2 + (2/sqrt(pi)) theta e^{-theta^2} / (1 + erf theta)`.
pub fn z_of_theta<T: Scalar>(theta: T) -> T {
    let t2 = theta * theta;
    T::one() - T::lit(2.0) * t2
        + T::lit(2.0) * T::inv_sqrt_pi() * theta * (-t2).exp() / (T::one() + erf(theta))
}

/// Unique root of `Z` on `(0, 2)` by bisection to absolute tolerance `1e-10`.
pub fn theta_critical() -> f64 {
    theta_critical_with_tol(THETA_C_TOL)
}

pub fn theta_critical_with_tol(tol: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 2.0_f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if z_of_theta(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TanhExpectation<T> {
    /// `E[tanh(gamma M) | x]` from the erf-ratio expression.
    pub exact: T,
    /// Small-`kappa x` linearisation.
    pub linearized: T,
    /// `gamma sigma_n sqrt(alpha)` fell below [`SATURATION_WARNING`].
    pub saturation_warning: bool,
}

/// `E[tanh(gamma M) | x] = (A1 - A2) / (A1 + A2)`, evaluated as `tanh((ln A1 - ln A2)/2)`.
pub fn expected_tanh_given_x<T: Scalar>(x: T, p: &ModelParams<T>) -> Result<TanhExpectation<T>> {
    let theta = p.theta()?;
    let (k, b, a, sn) = (p.kappa, p.beta, p.alpha, p.sigma_n);
    let two = T::lit(2.0);
    let scale = a.sqrt() * sn;
    let e = two * x * b * k / (a * sn * sn);
    // ln(1 + erf z) = ln erfc(-z)
    let ln_a1 = e + ln_erfc(-(b + x * k) / scale);
    let ln_a2 = -e + ln_erfc(-(b - x * k) / scale);
    let exact = ((ln_a1 - ln_a2) / two).tanh();
    let slope = two * k
        * (theta * theta + theta * (-theta * theta).exp() / (T::PI().sqrt() * (T::one() + erf(theta))));
    let linearized = if b == T::zero() { two * k * x / (T::PI().sqrt() * scale) } else { slope * x / b };
    Ok(TanhExpectation {
        exact,
        linearized,
        saturation_warning: (p.gamma * scale).as_f64() < SATURATION_WARNING,
    })
}

/// `sigma_x^2 = sigma_n^2 (1 + xi^2 + 4 theta/sqrt(pi) + 2 ln2 theta^2)`.
pub fn sigma_x_sq<T: Scalar>(p: &ModelParams<T>) -> Result<T> {
    let theta = p.theta()?;
    let xi_sq = p.xi_sq()?;
    Ok(p.sigma_n * p.sigma_n
        * (T::one() + xi_sq + T::lit(4.0) * theta * T::inv_sqrt_pi()
            + T::lit(2.0) * T::LN_2() * theta * theta))
}

/// Variance `sigma_x^2 / (2 Z kappa)` of the quasi-static Gaussian; refuses when `Z <= 0`.
pub fn quasi_static_variance<T: Scalar>(p: &ModelParams<T>) -> Result<T> {
    let z = z_of_theta(p.theta()?);
    if z <= T::zero() {
        return Err(ChiarellaError::NoGaussianDensity { z: z.as_f64() });
    }
    Ok(sigma_x_sq(p)? / (T::lit(2.0) * z * p.kappa))
}

pub fn ln_quasi_static_x_density<T: Scalar>(x: T, p: &ModelParams<T>) -> Result<T> {
    Ok(gaussian_ln_pdf(x, quasi_static_variance(p)?))
}

pub fn quasi_static_x_density<T: Scalar>(x: T, p: &ModelParams<T>) -> Result<T> {
    Ok(ln_quasi_static_x_density(x, p)?.exp())
}

/// Exponent `2 beta / (sigma_n^2 alpha gamma)` of the cosh factor in the trend laws.
fn cosh_power<T: Scalar>(p: &ModelParams<T>) -> Result<T> {
    if p.sigma_n == T::zero() {
        return Err(ChiarellaError::DivisionByZero("cosh exponent"));
    }
    if p.beta == T::zero() {
        return Ok(T::zero());
    }
    if p.gamma == T::zero() {
        return Err(ChiarellaError::InvalidParams("gamma = 0 with beta > 0 has no trend law".into()));
    }
    Ok(T::lit(2.0) * p.beta / (p.sigma_n * p.sigma_n * p.alpha * p.gamma))
}

/// Unnormalised log-density of `M | x`.
fn ln_conditional_kernel(m: f64, x: f64, c: f64, p: &ModelParams<f64>) -> f64 {
    let s = p.sigma_n * p.sigma_n * p.alpha;
    c * ln_cosh(p.gamma * m) - m * m / s + 2.0 * p.kappa * m * x / s
}

/// Conditional law of `M` given `x`; the normaliser is computed once.
#[derive(Debug, Clone)]
pub struct ConditionalTrendLaw {
    params: ModelParams<f64>,
    x: f64,
    power: f64,
    ln_norm: f64,
    scale: f64,
}

impl ConditionalTrendLaw {
    pub fn new<T: Scalar>(x: T, p: &ModelParams<T>) -> Result<Self> {
        let params = p.cast::<f64>();
        let x = x.as_f64();
        let power = cosh_power(&params)?;
        let scale = params.sigma_n * params.alpha.sqrt() + params.beta + (params.kappa * x).abs();
        let shift = grid_max(|m| ln_conditional_kernel(m, x, power, &params), scale);
        let r = integrate_real_line(
            |m| (ln_conditional_kernel(m, x, power, &params) - shift).exp(),
            0.0,
            scale,
            1e-11,
        )?;
        Ok(Self { params, x, power, ln_norm: shift + r.value.ln(), scale })
    }

    pub fn ln_density(&self, m: f64) -> f64 {
        ln_conditional_kernel(m, self.x, self.power, &self.params) - self.ln_norm
    }

    pub fn density(&self, m: f64) -> f64 {
        self.ln_density(m).exp()
    }

    /// `E[M | x]` by quadrature.
    pub fn mean(&self) -> Result<f64> {
        // split at zero: each half is one-signed, so the relative test is meaningful
        let f = |m: f64| m * self.density(m);
        let l = 40.0 * self.scale;
        let neg = integrate(f, -l, 0.0, 1e-10, 0.0)?;
        let pos = integrate(f, 0.0, l, 1e-10, 0.0)?;
        Ok(neg.value + pos.value)
    }
}

/// Maximum of `f` over a coarse grid on `[-12 scale, 12 scale]`, used as a log-space shift.
fn grid_max<F: Fn(f64) -> f64>(f: F, scale: f64) -> f64 {
    (-600..=600).map(|i| f(12.0 * scale * i as f64 / 600.0)).fold(f64::NEG_INFINITY, f64::max)
}

pub fn conditional_density_m_given_x<T: Scalar>(m: T, x: T, p: &ModelParams<T>) -> Result<T> {
    Ok(T::lit(ConditionalTrendLaw::new(x, p)?.density(m.as_f64())))
}

/// Quadratic coefficient `Z / (sigma_x^2 kappa + Z alpha sigma_n^2)` of the trend marginal.
pub fn trend_quadratic_coefficient<T: Scalar>(p: &ModelParams<T>) -> Result<T> {
    let z = z_of_theta(p.theta()?);
    Ok(z / (sigma_x_sq(p)? * p.kappa + z * p.alpha * p.sigma_n * p.sigma_n))
}

/// Trend marginal `p(M) ∝ cosh(gamma M)^{2 theta^2/(beta gamma)} e^{-q M^2}`, normalised by quadrature.
#[derive(Debug, Clone)]
pub struct TrendMarginal {
    gamma: f64,
    power: f64,
    q: f64,
    ln_norm: f64,
}

impl TrendMarginal {
    pub fn new<T: Scalar>(p: &ModelParams<T>) -> Result<Self> {
        let pf = p.cast::<f64>();
        let power = cosh_power(&pf)?;
        let q = trend_quadratic_coefficient(&pf)?;
        if !(q > 0.0) {
            return Err(ChiarellaError::NotNormalizable(format!(
                "trend marginal quadratic coefficient {q} <= 0"
            )));
        }
        let gamma = pf.gamma;
        let kernel = |m: f64| power * ln_cosh(gamma * m) - q * m * m;
        let scale = (1.0 / q).sqrt() + power * gamma / (2.0 * q);
        let shift = grid_max(kernel, scale);
        let r = integrate_real_line(|m| (kernel(m) - shift).exp(), 0.0, scale, 1e-11)?;
        Ok(Self { gamma, power, q, ln_norm: shift + r.value.ln() })
    }

    pub fn ln_density(&self, m: f64) -> f64 {
        self.power * ln_cosh(self.gamma * m) - self.q * m * m - self.ln_norm
    }

    pub fn density(&self, m: f64) -> f64 {
        self.ln_density(m).exp()
    }

    /// Standard deviation of the Gaussian factor, `1/sqrt(2q)`.
    pub fn width(&self) -> f64 {
        (0.5 / self.q).sqrt()
    }

    /// Positive mode (zero when unimodal), solving `power gamma tanh(gamma M) = 2 q M`.
    pub fn positive_mode(&self) -> f64 {
        let f = |m: f64| self.power * self.gamma * (self.gamma * m).tanh() - 2.0 * self.q * m;
        if self.power * self.gamma * self.gamma <= 2.0 * self.q {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, self.power * self.gamma / (2.0 * self.q) * 1.01);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

pub fn trend_marginal_density<T: Scalar>(m: T, p: &ModelParams<T>) -> Result<T> {
    Ok(T::lit(TrendMarginal::new(p)?.density(m.as_f64())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendBimodality<T> {
    /// `2 beta gamma/(alpha sigma_n^2) - 2 Z/(sigma_x^2 kappa + Z alpha sigma_n^2)`.
    pub curvature: T,
    /// `+1` bimodal, `-1` unimodal, `0` degenerate.
    pub sign: i8,
    /// The simple criterion `beta gamma > 1`.
    pub beta_gamma_above_one: bool,
}

pub fn trend_bimodality<T: Scalar>(p: &ModelParams<T>) -> Result<TrendBimodality<T>> {
    let z = z_of_theta(p.theta()?);
    let sn2 = p.sigma_n * p.sigma_n;
    let two = T::lit(2.0);
    let curvature = two * p.beta_gamma() / (p.alpha * sn2) - two * z / (sigma_x_sq(p)? * p.kappa + z * p.alpha * sn2);
    let sign = if curvature > T::zero() {
        1
    } else if curvature < T::zero() {
        -1
    } else {
        0
    };
    Ok(TrendBimodality { curvature, sign, beta_gamma_above_one: p.beta_gamma() > T::one() })
}

/// `T_x = e^{theta^2} / alpha`, the well-to-well switching time of the trend.
pub fn arrhenius_crossing_time<T: Scalar>(p: &ModelParams<T>) -> Result<T> {
    if p.beta_gamma() <= T::one() {
        return Err(ChiarellaError::NoBarrier { beta_gamma: p.beta_gamma().as_f64() });
    }
    Ok(crossing_time_for_theta(p.theta()?, p.alpha))
}

pub fn crossing_time_for_theta<T: Scalar>(theta: T, alpha: T) -> T {
    (theta * theta).exp() / alpha
}

/// Quasi-static mispricing verdict: unimodal while `Z(theta) > 0`, bimodal
/// (indicative only) once it turns negative.
pub fn mispricing_modality<T: Scalar>(p: &ModelParams<T>) -> Result<ModalityVerdict<T>> {
    let z = z_of_theta(p.theta()?);
    let curvature = -T::lit(2.0) * z * p.kappa / sigma_x_sq(p)?;
    if z >= T::zero() {
        let mut v = ModalityVerdict::unimodal_at_zero(VerdictSource::AnalyticStrongCoupling);
        v.curvature_at_zero = Some(curvature);
        return Ok(v);
    }
    let x = p.beta / p.kappa;
    Ok(ModalityVerdict {
        modality: Modality::Bimodal,
        modes: vec![-x, x],
        source: VerdictSource::AnalyticStrongCoupling,
        indicative: true,
        curvature_at_zero: Some(curvature),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrongCouplingReport<T> {
    pub theta: T,
    pub z_value: T,
    pub sigma_x_sq: T,
    /// `kappa Z(theta)`
    pub kappa_eff: T,
    /// `e^{theta^2}/alpha`, reported even without a barrier.
    pub crossing_time: T,
    pub has_barrier: bool,
    /// `kappa T_x`; the quasi-static picture needs this well below one.
    pub validity_score: T,
    pub quasi_static_valid: bool,
    /// `sigma_n^2 alpha / 2`
    pub temperature: T,
    pub trend_curvature: T,
    pub trend_curvature_sign: i8,
    pub mispricing_modality: ModalityVerdict<T>,
    pub warnings: Vec<String>,
}

pub fn report<T: Scalar>(p: &ModelParams<T>) -> Result<StrongCouplingReport<T>> {
    let theta = p.theta()?;
    let z_value = z_of_theta(theta);
    let crossing_time = crossing_time_for_theta(theta, p.alpha);
    let validity_score = p.kappa * crossing_time;
    let tb = trend_bimodality(p)?;
    let mut warnings = Vec::new();
    let sat = (p.gamma * p.sigma_n * p.alpha.sqrt()).as_f64();
    if sat < SATURATION_WARNING {
        warnings.push(format!("gamma sigma_n sqrt(alpha) = {sat} < {SATURATION_WARNING}: tanh not saturated"));
    }
    if validity_score >= T::one() {
        warnings.push(format!("kappa T_x = {validity_score} >= 1: quasi-static approximation breaks down"));
    }
    Ok(StrongCouplingReport {
        theta,
        z_value,
        sigma_x_sq: sigma_x_sq(p)?,
        kappa_eff: p.kappa * z_value,
        crossing_time,
        has_barrier: p.beta_gamma() > T::one(),
        validity_score,
        quasi_static_valid: validity_score < T::one(),
        temperature: p.sigma_n * p.sigma_n * p.alpha / T::lit(2.0),
        trend_curvature: tb.curvature,
        trend_curvature_sign: tb.sign,
        mispricing_modality: mispricing_modality(p)?,
        warnings,
    })
}
