//! Fast-trend, weak-coupling regime (`alpha >> kappa`, `theta << 1`).
//!
//! The saturated trend acts on the mispricing as telegraph noise with
//! autocovariance `(2/pi) asin(e^{-alpha tau})`. Mean reversion and feedback are
//! both renormalised by `1 + 2 theta / sqrt(pi)`, and the stationary law is a
//! centred Gaussian whose variance is available exactly (Gamma ratio) and to
//! second order in `theta`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::Result;
use crate::linear::gaussian_ln_pdf;
use crate::model::{derive_params, ModelParams};
use crate::quadrature::integrate_real_line;
use crate::scalar::Scalar;
use crate::special::{gamma, ln_gamma};

/// Warn when `alpha / kappa` falls below this.
pub const MIN_TIMESCALE_RATIO: f64 = 50.0;
/// Warn when `theta` exceeds this.
pub const MAX_WEAK_THETA: f64 = 0.3;

/// `(2/pi) asin(e^{-alpha tau})`.
pub fn telegraph_autocov<T: Scalar>(tau: T, alpha: T) -> T {
    T::FRAC_2_PI() * (-alpha * tau).exp().asin()
}

/// `(kappa_eff, beta_eff) = (kappa, beta) (1 + 2 theta / sqrt(pi))`.
pub fn effective_params<T: Scalar>(p: &ModelParams<T>) -> Result<(T, T)> {
    let f = renormalisation(p.theta()?);
    Ok((p.kappa * f, p.beta * f))
}

fn renormalisation<T: Scalar>(theta: T) -> T {
    T::one() + T::lit(2.0) * theta * T::inv_sqrt_pi()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FastTrendMoments<T> {
    pub kappa_eff: T,
    pub beta_eff: T,
    /// `<A^2>`, the telegraph-driven part of the variance.
    pub a_sq: T,
    /// `<AB>`, cross term between telegraph and price noise.
    pub ab: T,
    pub x_sq_exact: T,
    pub x_sq_truncated: T,
    pub theta: T,
    pub alpha_over_kappa: T,
    pub min_timescale_ratio: f64,
    pub max_weak_theta: f64,
    pub warnings: Vec<String>,
}

/// Stationary variance of the mispricing, exact and second-order in `theta`.
pub fn variance_x<T: Scalar>(p: &ModelParams<T>) -> Result<FastTrendMoments<T>> {
    let theta = p.theta()?;
    let (ke, be) = effective_params(p)?;
    let (k, a, sn) = (p.kappa, p.alpha, p.sigma_n);
    let s2 = p.sigma_sq();
    let two = T::lit(2.0);
    let sqrt_pi = T::PI().sqrt();

    let ratio = gamma_ratio(ke / (two * a));
    let a_sq = be * be / (sqrt_pi * ke * ke) * (sqrt_pi - ratio);
    let ab = be * sn * (a / T::PI()).sqrt() / (ke * (a + ke));
    let ou = s2 / (two * ke);
    let x_sq_exact = a_sq + ou + two * ab;
    let x_sq_truncated = ou
        + two * a * sn * sn * theta / (sqrt_pi * k * (a + ke))
        + T::LN_2() * sn * sn * theta * theta / k;

    let mut warnings = Vec::new();
    let alpha_over_kappa = a / k;
    if alpha_over_kappa.as_f64() < MIN_TIMESCALE_RATIO {
        warnings.push(format!(
            "alpha/kappa = {alpha_over_kappa} < {MIN_TIMESCALE_RATIO}: fast-trend separation is weak"
        ));
    }
    if theta.as_f64() > MAX_WEAK_THETA {
        warnings.push(format!("theta = {theta} > {MAX_WEAK_THETA}: weak-coupling expansion is stretched"));
    }
    Ok(FastTrendMoments {
        kappa_eff: ke,
        beta_eff: be,
        a_sq,
        ab,
        x_sq_exact,
        x_sq_truncated,
        theta,
        alpha_over_kappa,
        min_timescale_ratio: MIN_TIMESCALE_RATIO,
        max_weak_theta: MAX_WEAK_THETA,
        warnings,
    })
}

/// `Gamma(1/2 + eps) / Gamma(1 + eps)`, via log-Gamma away from the tabulated range.
fn gamma_ratio<T: Scalar>(eps: T) -> T {
    let half = T::lit(0.5);
    if eps < T::lit(2.0) {
        gamma(half + eps) / gamma(T::one() + eps)
    } else {
        (ln_gamma(half + eps) - ln_gamma(T::one() + eps)).exp()
    }
}

/// Log of the weak-coupling Gaussian `N(0, <x^2>)` (exact variance).
pub fn ln_weak_coupling_density<T: Scalar>(x: T, p: &ModelParams<T>) -> Result<T> {
    let v = variance_x(p)?.x_sq_exact;
    Ok(gaussian_ln_pdf(x, v))
}

pub fn weak_coupling_density<T: Scalar>(x: T, p: &ModelParams<T>) -> Result<T> {
    Ok(ln_weak_coupling_density(x, p)?.exp())
}

/// `(Gamma(1/2+eps)/Gamma(1+eps), sqrt(pi)(1 - 2 ln2 eps))`.
pub fn gamma_ratio_expansion<T: Scalar>(eps: T) -> (T, T) {
    let first = T::PI().sqrt() * (T::one() - T::lit(2.0) * T::LN_2() * eps);
    (gamma_ratio(eps), first)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NovikovExpectation {
    pub w: f64,
    /// `2 / (gamma sigma_n sqrt(pi alpha))`
    pub leading: f64,
    /// `<sech^2 X>` for `X ~ N(0, w)` by quadrature.
    pub quadrature: f64,
}

impl NovikovExpectation {
    pub fn rel_error(&self) -> f64 {
        ((self.quadrature - self.leading) / self.quadrature).abs()
    }
}

fn sech_sq(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

/// `<sech^2(gamma M)>` for the Gaussian trend of variance `w`, leading term and quadrature.
pub fn novikov_cosh_expectation<T: Scalar>(p: &ModelParams<T>) -> Result<NovikovExpectation> {
    novikov_for_w(derive_params(p).w.as_f64())
}

/// Same as [`novikov_cosh_expectation`] parameterised directly by `w`.
pub fn novikov_for_w(w: f64) -> Result<NovikovExpectation> {
    let leading = 2.0 / (std::f64::consts::TAU * w).sqrt();
    let norm = 1.0 / (std::f64::consts::TAU * w).sqrt();
    let r = integrate_real_line(|x: f64| norm * (-x * x / (2.0 * w)).exp() * sech_sq(x), 0.0, 1.0, 1e-12)?;
    Ok(NovikovExpectation { w, leading, quadrature: r.value })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AutocovEstimate {
    pub lag: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub exact: f64,
}

impl AutocovEstimate {
    pub fn z_score(&self) -> f64 {
        (self.estimate - self.exact) / self.std_error
    }
}

/// Monte-Carlo autocovariance of `sign(X_t)` for a stationary unit OU process of rate `alpha`.
///
/// For each lag, `n_pairs` independent stationary pairs `(X_0, X_tau)` are drawn
/// with the exact OU transition, so the product samples are i.i.d. and the
/// standard error is the plain sample standard deviation over `sqrt(n_pairs)`.
pub fn telegraph_autocov_mc(alpha: f64, lags: &[f64], n_pairs: usize, seed: u64) -> Vec<AutocovEstimate> {
    lags.iter()
        .enumerate()
        .map(|(i, &lag)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let rho = (-alpha * lag).exp();
            let s = (1.0 - rho * rho).max(0.0).sqrt();
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..n_pairs {
                let x0: f64 = StandardNormal.sample(&mut rng);
                let z: f64 = StandardNormal.sample(&mut rng);
                let x1 = rho * x0 + s * z;
                let prod = x0.signum() * x1.signum();
                sum += prod;
                sum_sq += prod * prod;
            }
            let n = n_pairs as f64;
            let mean = sum / n;
            let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
            AutocovEstimate {
                lag,
                estimate: mean,
                std_error: (var / n).sqrt().max(f64::MIN_POSITIVE),
                exact: telegraph_autocov(lag, alpha),
            }
        })
        .collect()
}
