//! Model parameters, derived dimensionless groups and the analytic classifiers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ChiarellaError, Result};
use crate::scalar::Scalar;
use crate::{slow_trend, strong_coupling};

/// The six rates of the extended Chiarella system plus a constant value drift.
///
/// `gamma` has units of time; `sigma_n`, `sigma_v` are per square-root time;
/// everything else is a rate. Validated on construction and deserialisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams<T>", bound(deserialize = "T: Scalar"))]
pub struct ModelParams<T> {
    pub kappa: T,
    pub beta: T,
    pub gamma: T,
    pub alpha: T,
    pub sigma_n: T,
    pub sigma_v: T,
    #[serde(default)]
    pub g: T,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams<T> {
    kappa: T,
    beta: T,
    gamma: T,
    alpha: T,
    sigma_n: T,
    sigma_v: T,
    #[serde(default)]
    g: Option<T>,
}

impl<T: Scalar> TryFrom<RawParams<T>> for ModelParams<T> {
    type Error = ChiarellaError;

    fn try_from(r: RawParams<T>) -> Result<Self> {
        ModelParams::new(r.kappa, r.beta, r.gamma, r.alpha, r.sigma_n, r.sigma_v)?
            .with_drift(r.g.unwrap_or_else(T::zero))
    }
}

impl<T: Scalar> ModelParams<T> {
    /// Builds a validated parameter set with zero drift.
    pub fn new(kappa: T, beta: T, gamma: T, alpha: T, sigma_n: T, sigma_v: T) -> Result<Self> {
        let p = Self { kappa, beta, gamma, alpha, sigma_n, sigma_v, g: T::zero() };
        p.validate()?;
        Ok(p)
    }

    pub fn with_drift(mut self, g: T) -> Result<Self> {
        if !g.is_finite() {
            return Err(ChiarellaError::InvalidParams(format!("g must be finite, got {g}")));
        }
        self.g = g;
        Ok(self)
    }

    /// Returns a copy with one rate replaced, re-validated.
    pub fn with(mut self, name: &str, value: T) -> Result<Self> {
        match name {
            "kappa" => self.kappa = value,
            "beta" => self.beta = value,
            "gamma" => self.gamma = value,
            "alpha" => self.alpha = value,
            "sigma_n" => self.sigma_n = value,
            "sigma_v" => self.sigma_v = value,
            "g" => self.g = value,
            other => return Err(ChiarellaError::InvalidParams(format!("unknown parameter `{other}`"))),
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let named = [
            ("kappa", self.kappa),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("sigma_n", self.sigma_n),
            ("sigma_v", self.sigma_v),
            ("g", self.g),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                return Err(ChiarellaError::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        for (name, v) in [("kappa", self.kappa), ("alpha", self.alpha)] {
            if v <= T::zero() {
                return Err(ChiarellaError::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        // beta = 0 and gamma = 0 are the OU / linear limits and stay admissible
        for (name, v) in [
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("sigma_n", self.sigma_n),
            ("sigma_v", self.sigma_v),
        ] {
            if v < T::zero() {
                return Err(ChiarellaError::InvalidParams(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.sigma_sq() <= T::zero() {
            return Err(ChiarellaError::InvalidParams(
                "at least one of sigma_n, sigma_v must be positive".into(),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn sigma_sq(&self) -> T {
        self.sigma_n * self.sigma_n + self.sigma_v * self.sigma_v
    }

    /// `beta * gamma`, the small-signal gain of the trend feedback.
    #[inline]
    pub fn beta_gamma(&self) -> T {
        self.beta * self.gamma
    }

    /// `beta / (sigma_n sqrt(alpha))`.
    pub fn theta(&self) -> Result<T> {
        if self.sigma_n == T::zero() {
            return Err(ChiarellaError::DivisionByZero("theta"));
        }
        Ok(self.beta / (self.sigma_n * self.alpha.sqrt()))
    }

    /// `sigma_v^2 / sigma_n^2`.
    pub fn xi_sq(&self) -> Result<T> {
        if self.sigma_n == T::zero() {
            return Err(ChiarellaError::DivisionByZero("xi_sq"));
        }
        Ok(self.sigma_v * self.sigma_v / (self.sigma_n * self.sigma_n))
    }

    /// Converts every field to another scalar type.
    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        let c = |v: T| U::lit(v.as_f64());
        ModelParams {
            kappa: c(self.kappa),
            beta: c(self.beta),
            gamma: c(self.gamma),
            alpha: c(self.alpha),
            sigma_n: c(self.sigma_n),
            sigma_v: c(self.sigma_v),
            g: c(self.g),
        }
    }
}

/// Dimensionless groups derived from [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams<T> {
    pub sigma: T,
    pub sigma_sq: T,
    /// `None` when `sigma_n = 0`.
    pub theta: Option<T>,
    /// `None` when `sigma_n = 0`.
    pub xi_sq: Option<T>,
    /// Exponent `2 beta / (alpha gamma sigma^2)` of the slow-trend conditional law.
    /// Zero when `beta = 0`, infinite when `gamma = 0 < beta`.
    pub n_exponent: T,
    /// `gamma^2 alpha sigma_n^2 / 2`, stationary variance of the argument of the saturating trend term.
    pub w: T,
}

impl<T: Scalar> DerivedParams<T> {
    pub fn theta(&self) -> Result<T> {
        self.theta.ok_or(ChiarellaError::DivisionByZero("theta"))
    }

    pub fn xi_sq(&self) -> Result<T> {
        self.xi_sq.ok_or(ChiarellaError::DivisionByZero("xi_sq"))
    }

    /// The nearest integer to `n_exponent` if within relative tolerance `1e-9`.
    pub fn integer_n(&self) -> Option<u64> {
        let n = self.n_exponent.as_f64();
        if !n.is_finite() || n < 0.0 {
            return None;
        }
        let r = n.round();
        let tol = 1e-9 * r.max(1.0);
        ((n - r).abs() <= tol).then_some(r as u64)
    }
}

pub fn derive_params<T: Scalar>(p: &ModelParams<T>) -> DerivedParams<T> {
    let sigma_sq = p.sigma_sq();
    let n_exponent = if p.beta == T::zero() {
        T::zero()
    } else {
        T::lit(2.0) * p.beta / (p.alpha * p.gamma * sigma_sq)
    };
    DerivedParams {
        sigma: sigma_sq.sqrt(),
        sigma_sq,
        theta: p.theta().ok(),
        xi_sq: p.xi_sq().ok(),
        n_exponent,
        w: p.gamma * p.gamma * p.alpha * p.sigma_n * p.sigma_n / T::lit(2.0),
    }
}

/// Deterministic phase of the noiseless system around the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    StableSpiral,
    LimitCycle,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::StableSpiral => "stable-spiral",
            Phase::LimitCycle => "limit-cycle",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseVerdict<T> {
    pub phase: Phase,
    /// `alpha (1 - beta gamma) + kappa`
    pub margin: T,
}

/// Hopf classification: stable spiral iff `alpha (1 - beta gamma) + kappa > 0`.
pub fn classify_deterministic_phase<T: Scalar>(p: &ModelParams<T>) -> PhaseVerdict<T> {
    let margin = hopf_margin(p);
    let phase = if margin > T::zero() { Phase::StableSpiral } else { Phase::LimitCycle };
    PhaseVerdict { phase, margin }
}

#[inline]
pub fn hopf_margin<T: Scalar>(p: &ModelParams<T>) -> T {
    p.alpha * (T::one() - p.beta_gamma()) + p.kappa
}

/// Parameter regime an analytic density is requested for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Linear,
    SlowTrend,
    FastTrendWeak,
    StrongCoupling,
}

impl Regime {
    pub const ALL: [Regime; 4] =
        [Regime::Linear, Regime::SlowTrend, Regime::FastTrendWeak, Regime::StrongCoupling];

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Linear => "linear",
            Regime::SlowTrend => "slow-trend",
            Regime::FastTrendWeak => "fast-trend",
            Regime::StrongCoupling => "strong-coupling",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = ChiarellaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "linear" => Ok(Regime::Linear),
            "slow-trend" | "slow" => Ok(Regime::SlowTrend),
            "fast-trend" | "fast-trend-weak" | "fast" => Ok(Regime::FastTrendWeak),
            "strong-coupling" | "strong" => Ok(Regime::StrongCoupling),
            _ => Err(ChiarellaError::UnsupportedRegime(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modality {
    Unimodal,
    Bimodal,
    /// Three or more modes; only ever produced by the empirical counter.
    Multimodal,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Unimodal => "unimodal",
            Modality::Bimodal => "bimodal",
            Modality::Multimodal => "multimodal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictSource {
    AnalyticSlowTrend,
    AnalyticStrongCoupling,
    /// Linear and weak fast-trend laws are Gaussian by construction.
    AnalyticGaussian,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModalityVerdict<T = f64> {
    pub modality: Modality,
    pub modes: Vec<T>,
    pub source: VerdictSource,
    /// Set when the analytic criterion is only indicative (strong coupling near `theta_c`).
    pub indicative: bool,
    /// Curvature of the density at the origin, when the criterion produced one.
    pub curvature_at_zero: Option<T>,
}

impl<T: Scalar> ModalityVerdict<T> {
    pub fn unimodal_at_zero(source: VerdictSource) -> Self {
        Self {
            modality: Modality::Unimodal,
            modes: vec![T::zero()],
            source,
            indicative: false,
            curvature_at_zero: None,
        }
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }
}

/// Analytic modality forecast for the mispricing distribution in a regime.
pub fn predict_modality<T: Scalar>(p: &ModelParams<T>, regime: Regime) -> Result<ModalityVerdict<T>> {
    match regime {
        Regime::Linear | Regime::FastTrendWeak => {
            Ok(ModalityVerdict::unimodal_at_zero(VerdictSource::AnalyticGaussian))
        }
        Regime::SlowTrend => slow_trend::locate_modes(p),
        Regime::StrongCoupling => strong_coupling::mispricing_modality(p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fig2(kappa: f64) -> ModelParams<f64> {
        ModelParams::new(kappa, 0.05, 5e4, 2e-5, 0.2, 0.1).unwrap()
    }

    #[test]
    fn fig4_top_theta() {
        let p: ModelParams<f64> = ModelParams::new(0.05, 5.0, 1.0, 50.0, 0.7, 0.2).unwrap();
        let th = derive_params(&p).theta().unwrap();
        assert!((th - 1.01).abs() < 0.005, "theta = {th}");
    }

    #[test]
    fn sigma_sq_is_sum_of_squares() {
        let p: ModelParams<f64> = ModelParams::new(1.0, 0.0, 1.0, 1.0, 0.2, 0.1).unwrap();
        assert!((derive_params(&p).sigma_sq - 0.05).abs() < 1e-17);
    }

    #[test]
    fn n_exponent_for_fig2() {
        let p: ModelParams<f64> = ModelParams::new(0.2, 0.05, 5e4, 2e-5, 0.05_f64.sqrt(), 0.0).unwrap();
        let d = derive_params(&p);
        assert!((d.n_exponent - 2.0).abs() < 1e-12);
        assert_eq!(d.integer_n(), Some(2));
        assert_eq!(derive_params(&fig2(0.2)).integer_n(), Some(2));
    }

    #[test]
    fn theta_undefined_without_price_noise() {
        let p: ModelParams<f64> = ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.0, 0.3).unwrap();
        let d = derive_params(&p);
        assert_eq!(d.theta(), Err(ChiarellaError::DivisionByZero("theta")));
        assert!(d.xi_sq().is_err());
    }

    #[test]
    fn validation_rejects_bad_input() {
        assert!(ModelParams::new(0.0, 1.0, 1.0, 1.0, 0.1, 0.1).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1.0, 1.0, 0.1, 0.1).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, f64::NAN, 1.0, 0.1, 0.1).is_err());
    }

    #[test]
    fn hopf_examples() {
        let v = classify_deterministic_phase(&fig2(0.2));
        assert_eq!(v.phase, Phase::StableSpiral);
        assert!((v.margin - (2e-5 * (1.0 - 2500.0) + 0.2)).abs() < 1e-15);
        let v = classify_deterministic_phase(&fig2(0.02));
        assert_eq!(v.phase, Phase::LimitCycle);
        assert!((v.margin + 0.02998).abs() < 1e-9);
        // beta gamma = 1 leaves margin = kappa
        let p: ModelParams<f64> = ModelParams::new(0.3, 2.0, 0.5, 7.0, 0.1, 0.1).unwrap();
        let v = classify_deterministic_phase(&p);
        assert_eq!(v.phase, Phase::StableSpiral);
        assert!((v.margin - 0.3).abs() < 1e-15);
    }

    #[test]
    fn slow_trend_modality_examples() {
        let v = predict_modality(&fig2(0.2), Regime::SlowTrend).unwrap();
        assert_eq!(v.modality, Modality::Unimodal);
        // kappa exactly at 2 beta^2 / sigma^2 belongs to the unimodal side
        let p: ModelParams<f64> = ModelParams::new(0.5, 0.25, 5e4, 2e-5, 0.5, 0.0).unwrap();
        assert_eq!(2.0 * p.beta * p.beta / p.sigma_sq(), p.kappa);
        let v = predict_modality(&p, Regime::SlowTrend).unwrap();
        assert_eq!(v.modality, Modality::Unimodal);
        assert_eq!(v.modes, vec![0.0]);
    }

    #[test]
    fn strong_coupling_small_theta_is_unimodal() {
        // theta = 0.5
        let p: ModelParams<f64> = ModelParams::new(0.05, 0.5 * 0.7 * 50f64.sqrt(), 1.0, 50.0, 0.7, 0.2).unwrap();
        let v = predict_modality(&p, Regime::StrongCoupling).unwrap();
        assert_eq!(v.modality, Modality::Unimodal);
        assert_eq!(v.source, VerdictSource::AnalyticStrongCoupling);
    }

    #[test]
    fn gaussian_regimes_always_unimodal() {
        for r in [Regime::Linear, Regime::FastTrendWeak] {
            assert_eq!(predict_modality(&fig2(0.001), r).unwrap().modality, Modality::Unimodal);
        }
    }

    #[test]
    fn regime_parsing() {
        assert_eq!("slow-trend".parse::<Regime>().unwrap(), Regime::SlowTrend);
        assert_eq!("Strong_Coupling".parse::<Regime>().unwrap(), Regime::StrongCoupling);
        assert!(matches!("chaotic".parse::<Regime>(), Err(ChiarellaError::UnsupportedRegime(_))));
    }

    #[test]
    fn json_round_trip_and_missing_key() {
        let p = fig2(0.075);
        let s = serde_json::to_string(&p).unwrap();
        for k in ["kappa", "beta", "gamma", "alpha", "sigma_n", "sigma_v", "g"] {
            assert!(s.contains(&format!("\"{k}\"")), "{s}");
        }
        let back: ModelParams<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let err = serde_json::from_str::<ModelParams<f64>>(
            r#"{"kappa":1,"beta":1,"gamma":1,"alpha":1,"sigma_v":0.1}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("sigma_n"), "{err}");
        // g defaults to zero
        let p: ModelParams<f64> = serde_json::from_str(
            r#"{"kappa":1,"beta":1,"gamma":1,"alpha":1,"sigma_n":0.1,"sigma_v":0.1}"#,
        )
        .unwrap();
        assert_eq!(p.g, 0.0);
        assert!(serde_json::from_str::<ModelParams<f64>>(
            r#"{"kappa":-1,"beta":1,"gamma":1,"alpha":1,"sigma_n":0.1,"sigma_v":0.1}"#
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn derive_is_pure(k in 1e-3..10.0f64, b in 0.0..5.0f64, g in 0.0..10.0f64,
                          a in 1e-4..100.0f64, sn in 0.01..2.0f64, sv in 0.0..2.0f64) {
            let p: ModelParams<f64> = ModelParams::new(k, b, g, a, sn, sv).unwrap();
            let d1 = derive_params(&p);
            let d2 = derive_params(&p);
            prop_assert_eq!(format!("{d1:?}"), format!("{d2:?}"));
            prop_assert_eq!(d1.sigma_sq, sn * sn + sv * sv);
        }

        #[test]
        fn hopf_flips_at_alpha_bg_minus_one(b in 0.01..5.0f64, g in 0.01..10.0f64, a in 1e-3..10.0f64) {
            let bg = b * g;
            let p: ModelParams<f64> = ModelParams::new(1.0, b, g, a, 0.1, 0.1).unwrap();
            if bg <= 1.0 {
                for k in [1e-6, 0.1, 10.0] {
                    let v = classify_deterministic_phase(&p.with("kappa", k).unwrap());
                    prop_assert_eq!(v.phase, Phase::StableSpiral);
                }
            } else {
                let kc = a * (bg - 1.0);
                let above = classify_deterministic_phase(&p.with("kappa", kc * (1.0 + 1e-9)).unwrap());
                let below = classify_deterministic_phase(&p.with("kappa", kc * (1.0 - 1e-9)).unwrap());
                prop_assert_eq!(above.phase, Phase::StableSpiral);
                prop_assert_eq!(below.phase, Phase::LimitCycle);
            }
        }

        #[test]
        fn slow_trend_verdict_ignores_alpha_and_gamma(k in 0.001..1.0f64, b in 0.001..0.5f64,
                sn in 0.05..1.0f64, sv in 0.0..1.0f64, a in 1e-6..1e-2f64, g in 1.0..1e5f64) {
            let p: ModelParams<f64> = ModelParams::new(k, b, g, a, sn, sv).unwrap();
            let q = ModelParams::new(k, b, 3.0 * g, 0.1 * a, sn, sv).unwrap();
            let v1 = predict_modality(&p, Regime::SlowTrend).unwrap();
            let v2 = predict_modality(&q, Regime::SlowTrend).unwrap();
            prop_assert_eq!(v1.modality, v2.modality);
            let threshold = 2.0 * b * b / (sn * sn + sv * sv);
            let expected = if k >= threshold { Modality::Unimodal } else { Modality::Bimodal };
            prop_assert_eq!(v1.modality, expected);
        }
    }
}
