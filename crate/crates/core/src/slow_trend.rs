//! Slow-trend regime (`kappa >> alpha`).
//!
//! With `x = delta` and `y = M - alpha delta`, the fast mispricing relaxes to
//! `p(x|y) ∝ exp(-kappa x^2 / sigma^2) cosh^n(gamma (alpha x + y))` with
//! `n = 2 beta / (alpha gamma sigma^2)`. For integer `n` the normaliser is a
//! finite binomial sum of cosh terms; otherwise it falls back to quadrature.
//! In the large-`gamma` limit the marginal becomes the Gaussian-cosh law
//! `sqrt(kappa/(pi sigma^2)) e^{-beta^2/(kappa sigma^2)} cosh(2 beta x / sigma^2) e^{-kappa x^2/sigma^2}`.

use crate::error::{ChiarellaError, Result};
use crate::model::{derive_params, Modality, ModalityVerdict, ModelParams, VerdictSource};
use crate::quadrature::integrate_real_line;
use crate::scalar::{ln_cosh, Scalar};
use crate::special::ln_binomial;

/// Relative tolerance of the quadrature fallback for `A(y)`.
pub const NORMALIZATION_QUAD_TOL: f64 = 1e-10;
/// Bisection bracket for mode location is `(0, BRACKET_FACTOR * beta / kappa]`.
pub const BRACKET_FACTOR: f64 = 1.01;

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// `ln A(y)` from the closed binomial cosh sum; requires integer `n >= 0`.
pub fn ln_normalization_a_integer<T: Scalar>(y: T, p: &ModelParams<T>, n: u64) -> T {
    let (y, k, a, g) = (y.as_f64(), p.kappa.as_f64(), p.alpha.as_f64(), p.gamma.as_f64());
    let s2 = p.sigma_sq().as_f64();
    let c = (a * g) * (a * g) * s2 / (4.0 * k);
    let eps = n % 2;
    let half_floor = n / 2;
    let centre = (n - eps) / 2;

    let mut terms = Vec::with_capacity(half_floor as usize + 1);
    let lead = ln_binomial(n, centre);
    if eps == 0 {
        terms.push(lead - std::f64::consts::LN_2);
    } else {
        terms.push(lead + ln_cosh(g * y) + c);
    }
    for j in 1..=half_floor {
        let m = (2 * j + eps) as f64;
        terms.push(ln_binomial(n, centre - j) + ln_cosh(g * m * y) + c * m * m);
    }
    let prefactor = 0.5 * (std::f64::consts::PI * s2 / k).ln() - (n as f64 - 1.0) * std::f64::consts::LN_2;
    T::lit(prefactor + log_sum_exp(&terms))
}

/// `ln A(y)` by adaptive quadrature of `e^{-kappa x^2/sigma^2} cosh^n(gamma(alpha x + y))`.
pub fn ln_normalization_a_quadrature<T: Scalar>(y: T, p: &ModelParams<T>, n: T) -> Result<T> {
    let (y, k, a, g, n) =
        (y.as_f64(), p.kappa.as_f64(), p.alpha.as_f64(), p.gamma.as_f64(), n.as_f64());
    let s2 = p.sigma_sq().as_f64();
    let slope = n * g * a;
    // upper bound of the log-integrand, subtracted to keep values O(1)
    let shift = n * ln_cosh(g * y) + slope * slope * s2 / (4.0 * k);
    let f = |x: f64| (-k * x * x / s2 + n * ln_cosh(g * (a * x + y)) - shift).exp();
    let scale = (s2 / k).sqrt() + slope * s2 / (2.0 * k);
    let r = integrate_real_line(f, 0.0, scale, NORMALIZATION_QUAD_TOL)?;
    Ok(T::lit(shift + r.value.ln()))
}

/// `ln A(y)`: closed form when `n` is an integer (relative tolerance 1e-9), quadrature otherwise.
pub fn ln_normalization_a<T: Scalar>(y: T, p: &ModelParams<T>) -> Result<T> {
    let d = derive_params(p);
    if !d.n_exponent.is_finite() {
        return Err(ChiarellaError::InvalidParams("cosh exponent n is infinite (gamma = 0)".into()));
    }
    match d.integer_n() {
        Some(n) => Ok(ln_normalization_a_integer(y, p, n)),
        None => ln_normalization_a_quadrature(y, p, d.n_exponent),
    }
}

pub fn normalization_a<T: Scalar>(y: T, p: &ModelParams<T>) -> Result<T> {
    Ok(ln_normalization_a(y, p)?.exp())
}

/// Quasi-static conditional density `p(x | y)`, in log space.
pub fn ln_conditional_density_x_given_y<T: Scalar>(x: T, y: T, p: &ModelParams<T>) -> Result<T> {
    let n = derive_params(p).n_exponent;
    let ln_a = ln_normalization_a(y, p)?;
    let log_kernel = -p.kappa * x * x / p.sigma_sq()
        + if n == T::zero() { T::zero() } else { n * ln_cosh(p.gamma * (p.alpha * x + y)) };
    Ok(log_kernel - ln_a)
}

pub fn conditional_density_x_given_y<T: Scalar>(x: T, y: T, p: &ModelParams<T>) -> Result<T> {
    Ok(ln_conditional_density_x_given_y(x, y, p)?.exp())
}

/// Log of the large-`gamma` Gaussian-cosh density.
pub fn ln_gaussian_cosh_density<T: Scalar>(x: T, p: &ModelParams<T>) -> T {
    let s2 = p.sigma_sq();
    let k = p.kappa;
    let b = p.beta;
    T::lit(0.5) * (k / (T::PI() * s2)).ln() - b * b / (k * s2) + ln_cosh(T::lit(2.0) * b * x / s2)
        - k * x * x / s2
}

pub fn gaussian_cosh_density<T: Scalar>(x: T, p: &ModelParams<T>) -> T {
    ln_gaussian_cosh_density(x, p).exp()
}

/// `2 beta^2 / sigma^2`: the Gaussian-cosh law is bimodal iff `kappa` is below it.
pub fn bimodality_threshold<T: Scalar>(p: &ModelParams<T>) -> T {
    T::lit(2.0) * p.beta * p.beta / p.sigma_sq()
}

/// Sign-carrying part of the Gaussian-cosh curvature at the origin, `4 beta^2/sigma^4 - 2 kappa/sigma^2`.
pub fn curvature_at_zero<T: Scalar>(p: &ModelParams<T>) -> T {
    let s2 = p.sigma_sq();
    T::lit(4.0) * p.beta * p.beta / (s2 * s2) - T::lit(2.0) * p.kappa / s2
}

/// Modes of the Gaussian-cosh density: zero when `kappa >= 2 beta^2/sigma^2`,
/// otherwise the symmetric roots of `beta tanh(2 beta x/sigma^2) = kappa x`.
pub fn locate_modes<T: Scalar>(p: &ModelParams<T>) -> Result<ModalityVerdict<T>> {
    let curvature = curvature_at_zero(p);
    if p.kappa >= bimodality_threshold(p) {
        let mut v = ModalityVerdict::unimodal_at_zero(VerdictSource::AnalyticSlowTrend);
        v.curvature_at_zero = Some(curvature);
        return Ok(v);
    }
    let (b, k, s2) = (p.beta.as_f64(), p.kappa.as_f64(), p.sigma_sq().as_f64());
    let f = |x: f64| b * (2.0 * b * x / s2).tanh() - k * x;
    let mut hi = BRACKET_FACTOR * b / k;
    let mut expansions = 0;
    while f(hi) >= 0.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(ChiarellaError::BracketFailure(format!("no sign change up to x = {hi}")));
        }
    }
    // f > 0 just right of the origin whenever the curvature is positive
    let mut lo = hi * 1e-12;
    if !(f(lo) > 0.0) {
        return Err(ChiarellaError::BracketFailure(format!(
            "f(x) not positive near the origin (kappa = {k}, threshold = {})",
            2.0 * b * b / s2
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let x = T::lit(0.5 * (lo + hi));
    Ok(ModalityVerdict {
        modality: Modality::Bimodal,
        modes: vec![-x, x],
        source: VerdictSource::AnalyticSlowTrend,
        indicative: false,
        curvature_at_zero: Some(curvature),
    })
}

/// `p(x) = ∫ p(x|y) N(y; 0, var_y) dy` by quadrature, the quasi-static marginal
/// before any large-`gamma` approximation.
pub fn quasi_static_marginal<T: Scalar>(x: T, p: &ModelParams<T>, var_y: T) -> Result<T> {
    let sd = var_y.as_f64().sqrt();
    let xf = x.as_f64();
    let pf = p.cast::<f64>();
    let failure = std::cell::RefCell::new(None);
    let integrand = |y: f64| {
        let ln_py = -0.5 * (y * y / (sd * sd) + (std::f64::consts::TAU * sd * sd).ln());
        match ln_conditional_density_x_given_y(xf, y, &pf) {
            Ok(v) => (v + ln_py).exp(),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let r = integrate_real_line(integrand, 0.0, sd, 1e-9);
    let r = r?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(T::lit(r.value))
}

/// First-order stationary variance of `y`, `alpha sigma_v^2 / 2`.
pub fn first_order_var_y<T: Scalar>(p: &ModelParams<T>) -> T {
    p.alpha * p.sigma_v * p.sigma_v / T::lit(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, integrate_real_line};
    use rand::{Rng, SeedableRng};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// Parameters with `n = 2 beta / (alpha gamma sigma^2)` equal to `n` exactly.
    fn with_n(n: u64, kappa: f64, alpha: f64, gamma: f64) -> ModelParams<f64> {
        let (sn, sv) = (0.2, 0.1);
        let beta = n as f64 * alpha * gamma * (sn * sn + sv * sv) / 2.0;
        ModelParams::new(kappa, beta, gamma, alpha, sn, sv).unwrap()
    }

    /// Oracle: the defining integral, evaluated directly.
    fn a_by_quadrature(y: f64, p: &ModelParams<f64>, n: i32) -> f64 {
        let s2 = p.sigma_sq();
        let f = |x: f64| (-p.kappa * x * x / s2).exp() * (p.gamma * (p.alpha * x + y)).cosh().powi(n);
        let tilt = n as f64 * p.alpha * p.gamma * s2 / p.kappa;
        let l = 12.0 * (s2 / (2.0 * p.kappa)).sqrt() + tilt;
        integrate(f, -l, l, 1e-12, 0.0).unwrap().value
    }

    #[test]
    fn n_one_closed_form() {
        let p = with_n(1, 0.5, 0.3, 2.0);
        let s2 = p.sigma_sq();
        for &y in &[0.0, 0.4, -1.2] {
            let c = (p.alpha * p.gamma) * (p.alpha * p.gamma) * s2 / (4.0 * p.kappa);
            let want = (std::f64::consts::PI * s2 / p.kappa).sqrt() * (p.gamma * y).cosh() * c.exp();
            assert!(rel(normalization_a(y, &p).unwrap(), want) < 1e-13);
        }
    }

    #[test]
    fn n_two_at_origin() {
        let p = with_n(2, 0.5, 0.3, 2.0);
        let s2 = p.sigma_sq();
        let e = (p.alpha * p.gamma).powi(2) * s2 / p.kappa;
        let want = (std::f64::consts::PI * s2 / p.kappa).sqrt() * 0.5 * (1.0 + e.exp());
        assert!(rel(normalization_a(0.0, &p).unwrap(), want) < 1e-13);
        assert!(rel(want, a_by_quadrature(0.0, &p, 2)) < 1e-10);
    }

    #[test]
    fn closed_form_matches_quadrature_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in 1..=4u64 {
            for _ in 0..50 {
                let p = with_n(n, rng.gen_range(0.2..3.0), rng.gen_range(0.05..1.0), rng.gen_range(0.5..4.0));
                let y = rng.gen_range(-1.0..1.0);
                let closed = normalization_a(y, &p).unwrap();
                let oracle = a_by_quadrature(y, &p, n as i32);
                assert!(rel(closed, oracle) < 1e-8, "n={n} y={y} {closed} vs {oracle}");
            }
        }
    }

    #[test]
    fn non_integer_n_uses_quadrature() {
        let p: ModelParams<f64> = ModelParams::new(0.7, 0.013, 2.0, 0.3, 0.2, 0.1).unwrap();
        let n = derive_params(&p).n_exponent;
        assert!(derive_params(&p).integer_n().is_none());
        let s2 = p.sigma_sq();
        let oracle = integrate(
            |x: f64| (-p.kappa * x * x / s2).exp() * (p.gamma * (p.alpha * x + 0.3)).cosh().powf(n),
            -40.0,
            40.0,
            1e-12,
            0.0,
        )
        .unwrap()
        .value;
        assert!(rel(normalization_a(0.3, &p).unwrap(), oracle) < 1e-9);
    }

    #[test]
    fn conditional_density_properties() {
        let p = with_n(3, 0.8, 0.2, 3.0);
        for &y in &[0.0, 0.25, -0.6] {
            let z = integrate_real_line(|x| conditional_density_x_given_y(x, y, &p).unwrap(), 0.0, 0.5, 1e-10)
                .unwrap();
            assert!((z.value - 1.0).abs() < 1e-8);
        }
        for &x in &[0.1, 0.5, 1.3] {
            let a = conditional_density_x_given_y(x, 0.0, &p).unwrap();
            let b = conditional_density_x_given_y(-x, 0.0, &p).unwrap();
            assert!(rel(a, b) < 1e-13);
        }
        // n = 0 collapses to N(0, sigma^2 / 2 kappa)
        let p0: ModelParams<f64> = ModelParams::new(0.8, 0.0, 3.0, 0.2, 0.2, 0.1).unwrap();
        let var = p0.sigma_sq() / (2.0 * p0.kappa);
        for &x in &[0.0, 0.3, -0.7] {
            let want = (-x * x / (2.0 * var)).exp() / (std::f64::consts::TAU * var).sqrt();
            assert!(rel(conditional_density_x_given_y(x, 0.4, &p0).unwrap(), want) < 1e-13);
        }
    }

    fn fig2(kappa: f64) -> ModelParams<f64> {
        ModelParams::new(kappa, 0.05, 5e4, 2e-5, 0.2, 0.1).unwrap()
    }

    #[test]
    fn gaussian_cosh_properties() {
        let p: ModelParams<f64> = ModelParams::new(0.4, 0.0, 5e4, 2e-5, 0.2, 0.1).unwrap();
        let var = p.sigma_sq() / 0.8;
        for &x in &[0.0, 0.2, -0.5] {
            let want = (-x * x / (2.0 * var)).exp() / (std::f64::consts::TAU * var).sqrt();
            assert!(rel(gaussian_cosh_density(x, &p), want) < 1e-13);
        }
        for kappa in [0.2, 0.075, 0.02] {
            let p = fig2(kappa);
            let z = integrate_real_line(|x| gaussian_cosh_density(x, &p), 0.0, 1.0, 1e-12).unwrap();
            assert!((z.value - 1.0).abs() < 1e-10, "kappa={kappa} {}", z.value);
        }
        let a = ModelParams::new(0.075, 0.05, 5e4, 1e-5, 0.2, 0.1).unwrap();
        let b = ModelParams::new(0.075, 0.05, 5e4, 1e-3, 0.2, 0.1).unwrap();
        for &x in &[-1.0, 0.0, 0.6] {
            assert_eq!(gaussian_cosh_density(x, &a), gaussian_cosh_density(x, &b));
        }
        // no overflow deep in the tails
        assert!(ln_gaussian_cosh_density(1e3, &fig2(0.02)).is_finite());
    }

    #[test]
    fn mode_location_examples() {
        let v = locate_modes(&fig2(0.2)).unwrap();
        assert_eq!(v.modality, Modality::Unimodal);
        let v = locate_modes(&fig2(0.1)).unwrap();
        assert_eq!(v.modality, Modality::Unimodal);

        // kappa = 0.01: saturated tanh, fixed-point oracle x = (beta/kappa) tanh(2 beta x / sigma^2)
        let p: ModelParams<f64> = ModelParams::new(0.01, 0.05, 5e4, 2e-5, 0.05_f64.sqrt(), 0.0).unwrap();
        let mut x: f64 = 1.0;
        for _ in 0..200 {
            x = 0.05 / 0.01 * (2.0 * 0.05 * x / 0.05).tanh();
        }
        let v = locate_modes(&p).unwrap();
        assert_eq!(v.modality, Modality::Bimodal);
        assert!((v.modes[1] - x).abs() < 1e-10 && (v.modes[0] + x).abs() < 1e-10);
        assert!((x - 5.0).abs() < 1e-3);
    }

    #[test]
    fn modes_solve_the_stationarity_equation() {
        for kappa in [0.099, 0.09, 0.075, 0.05, 0.02, 0.003] {
            let p = fig2(kappa);
            let v = locate_modes(&p).unwrap();
            assert_eq!(v.modality, Modality::Bimodal);
            let x = v.modes[1];
            assert!(x > 0.0 && x < 0.05 / kappa);
            let resid = 0.05 * (2.0 * 0.05 * x / p.sigma_sq()).tanh() - kappa * x;
            assert!(resid.abs() < 1e-12, "kappa={kappa} resid={resid}");
            // and the analytic density really peaks there
            let h = 1e-4;
            let c = gaussian_cosh_density(x, &p);
            assert!(c >= gaussian_cosh_density(x + h, &p) && c >= gaussian_cosh_density(x - h, &p));
        }
    }

    #[test]
    fn curvature_sign_flips_at_threshold() {
        assert!(curvature_at_zero(&fig2(0.0999)) > 0.0);
        assert!(curvature_at_zero(&fig2(0.1001)) < 0.0);
        assert_eq!(curvature_at_zero(&fig2(0.1)).abs() < 1e-12, true);
    }

    /// Quasi-static marginal with exact `A(y)` approaches the Gaussian-cosh law as
    /// `gamma` grows at fixed `alpha gamma` (so `n` is fixed at 2).
    #[test]
    fn large_gamma_consistency() {
        let kappa = 0.075;
        let mut errs = Vec::new();
        for gamma in [5e4, 5e5, 5e6, 5e7] {
            let p: ModelParams<f64> = ModelParams::new(kappa, 0.05, gamma, 1.0 / gamma, 0.2, 0.1).unwrap();
            assert_eq!(derive_params(&p).integer_n(), Some(2));
            let var_y = first_order_var_y(&p);
            let sd_delta = (p.sigma_sq() / (2.0 * kappa) + (0.05f64 / kappa).powi(2)).sqrt();
            let mut worst: f64 = 0.0;
            for i in -8..=8 {
                let x = 4.0 * sd_delta * i as f64 / 8.0;
                let q = quasi_static_marginal(x, &p, var_y).unwrap();
                worst = worst.max(rel(q, gaussian_cosh_density(x, &p)));
            }
            errs.push(worst);
        }
        for w in errs.windows(2) {
            assert!(w[1] < w[0], "{errs:?}");
        }
        assert!(*errs.last().unwrap() < 1e-3, "{errs:?}");
    }
}
