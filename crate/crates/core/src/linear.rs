//! Stationary law of the linearised system (`tanh(gamma M) ~ gamma M`).
//!
//! The drift matrix is `A = [[-kappa, beta gamma], [-alpha kappa, alpha (beta gamma - 1)]]`
//! and the diffusion matrix `D = [[sigma^2, alpha sigma_n^2], [alpha sigma_n^2, alpha^2 sigma_n^2]]`.
//! The stationary covariance solves `A S + S A^T + D = 0`.

use serde::Serialize;

use crate::error::{ChiarellaError, Result};
use crate::model::{hopf_margin, ModelParams};
use crate::scalar::Scalar;

/// Validity threshold on `gamma * sigma_M` for the linearisation.
pub const LINEAR_VALIDITY_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryCovariance<T> {
    pub var_delta: T,
    pub var_m: T,
    pub rho: T,
}

impl<T: Scalar> StationaryCovariance<T> {
    pub fn cov_delta_m(&self) -> T {
        self.rho * (self.var_delta * self.var_m).sqrt()
    }

    pub fn det(&self) -> T {
        self.var_delta * self.var_m * (T::one() - self.rho * self.rho)
    }

    /// Entries `(a, b, c)` of the precision matrix `[[a, b], [b, c]]`.
    pub fn precision(&self) -> Result<(T, T, T)> {
        let det = self.det();
        if !(det > T::zero()) || !det.is_finite() {
            return Err(ChiarellaError::SingularCovariance { det: det.as_f64() });
        }
        let c01 = self.cov_delta_m();
        Ok((self.var_m / det, -c01 / det, self.var_delta / det))
    }

    pub fn ln_joint_density(&self, delta: T, m: T) -> Result<T> {
        let (a, b, c) = self.precision()?;
        let q = a * delta * delta + T::lit(2.0) * b * delta * m + c * m * m;
        Ok(-T::lit(0.5) * q - (T::TAU()).ln() - T::lit(0.5) * self.det().ln())
    }
}

/// Closed-form stationary covariance of the linearised system.
pub fn lyapunov_covariance<T: Scalar>(p: &ModelParams<T>) -> Result<StationaryCovariance<T>> {
    let margin = hopf_margin(p);
    if !(margin > T::zero()) {
        return Err(ChiarellaError::NoStationaryDistribution { margin: margin.as_f64() });
    }
    let one = T::one();
    let two = T::lit(2.0);
    let (k, a) = (p.kappa, p.alpha);
    let bg = p.beta_gamma();
    let s2 = p.sigma_sq();
    let sn2 = p.sigma_n * p.sigma_n;

    let num_delta = (k + a * (bg - one) * (bg - one)) * s2 + a * bg * (two - bg) * sn2;
    let num_m = k * s2 + (a - k) * sn2;
    let var_delta = num_delta / (two * k * margin);
    let var_m = a * num_m / (two * margin);
    let rho = (a * k).sqrt() * ((bg - one) * s2 + (two - bg) * sn2) / (num_delta * num_m).sqrt();
    Ok(StationaryCovariance { var_delta, var_m, rho })
}

/// Drift and diffusion matrices of the linearised system, row-major.
pub fn linear_system_matrices<T: Scalar>(p: &ModelParams<T>) -> ([[T; 2]; 2], [[T; 2]; 2]) {
    let bg = p.beta_gamma();
    let sn2 = p.sigma_n * p.sigma_n;
    let drift = [[-p.kappa, bg], [-p.alpha * p.kappa, p.alpha * (bg - T::one())]];
    let diffusion = [[p.sigma_sq(), p.alpha * sn2], [p.alpha * sn2, p.alpha * p.alpha * sn2]];
    (drift, diffusion)
}

/// Generic solve of `A S + S A^T + D = 0` for symmetric 2x2 `S`, as the
/// 3x3 linear system in `(s11, s12, s22)` with partial pivoting.
pub fn solve_lyapunov_2x2(a: [[f64; 2]; 2], d: [[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let mut m = [
        [2.0 * a[0][0], 2.0 * a[0][1], 0.0, -d[0][0]],
        [a[1][0], a[0][0] + a[1][1], a[0][1], -d[0][1]],
        [0.0, 2.0 * a[1][0], 2.0 * a[1][1], -d[1][1]],
    ];
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("rows");
        if m[piv][col].abs() < 1e-300 {
            return Err(ChiarellaError::SingularCovariance { det: 0.0 });
        }
        m.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    let s11 = m[0][3] / m[0][0];
    let s12 = m[1][3] / m[1][1];
    let s22 = m[2][3] / m[2][2];
    Ok([[s11, s12], [s12, s22]])
}

/// Centered Gaussian marginal of the mispricing, `N(0, var_delta)`.
pub fn marginal_delta_density<T: Scalar>(c: &StationaryCovariance<T>, delta: T) -> T {
    gaussian_pdf(delta, c.var_delta)
}

pub fn marginal_m_density<T: Scalar>(c: &StationaryCovariance<T>, m: T) -> T {
    gaussian_pdf(m, c.var_m)
}

pub fn joint_density<T: Scalar>(c: &StationaryCovariance<T>, delta: T, m: T) -> Result<T> {
    Ok(c.ln_joint_density(delta, m)?.exp())
}

pub(crate) fn gaussian_ln_pdf<T: Scalar>(x: T, var: T) -> T {
    -T::lit(0.5) * (x * x / var + (T::TAU() * var).ln())
}

pub(crate) fn gaussian_pdf<T: Scalar>(x: T, var: T) -> T {
    gaussian_ln_pdf(x, var).exp()
}

/// The four collected coefficients of the stationary Fokker-Planck equation
/// after substituting the Gaussian ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FpeResiduals<T> {
    pub constant: T,
    pub delta_sq: T,
    pub m_sq: T,
    pub delta_m: T,
    /// Same residuals divided by the largest absolute constituent term of each.
    pub normalized: [T; 4],
}

impl<T: Scalar> FpeResiduals<T> {
    pub fn max_normalized(&self) -> T {
        self.normalized.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

fn collect<T: Scalar>(terms: &[T]) -> (T, T) {
    let sum = terms.iter().fold(T::zero(), |s, &t| s + t);
    let scale = terms.iter().fold(T::zero(), |m, t| m.max(t.abs()));
    let norm = if scale > T::zero() { sum.abs() / scale } else { T::zero() };
    (sum, norm)
}

pub fn fpe_residuals<T: Scalar>(p: &ModelParams<T>, c: &StationaryCovariance<T>) -> Result<FpeResiduals<T>> {
    let (a, b, cc) = c.precision()?;
    let half = T::lit(0.5);
    let k = p.kappa;
    let al = p.alpha;
    let bg = p.beta_gamma();
    let s2 = p.sigma_sq();
    let sn2 = p.sigma_n * p.sigma_n;
    let one_m_bg = T::one() - bg;

    let (r0, n0) = collect(&[k, al * one_m_bg, -half * s2 * a, -al * sn2 * b, -half * al * al * sn2 * cc]);
    let (r1, n1) = collect(&[
        -k * a,
        -al * k * b,
        half * s2 * a * a,
        al * sn2 * a * b,
        half * al * al * sn2 * b * b,
    ]);
    let (r2, n2) = collect(&[
        bg * b,
        -al * one_m_bg * cc,
        half * s2 * b * b,
        al * sn2 * b * cc,
        half * al * al * sn2 * cc * cc,
    ]);
    let (r3, n3) = collect(&[
        -k * b,
        bg * a,
        -al * k * cc,
        -al * one_m_bg * b,
        s2 * a * b,
        al * sn2 * a * cc,
        al * sn2 * b * b,
        al * al * sn2 * b * cc,
    ]);
    Ok(FpeResiduals { constant: r0, delta_sq: r1, m_sq: r2, delta_m: r3, normalized: [n0, n1, n2, n3] })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearValidity<T> {
    pub gamma_sigma_m: T,
    /// `gamma^2 alpha sigma_n^2 / (2 (1 - beta gamma))`, the `alpha >> kappa` form; infinite for `beta gamma >= 1`.
    pub simplified: T,
    pub valid: bool,
}

pub fn linear_validity<T: Scalar>(p: &ModelParams<T>, c: &StationaryCovariance<T>) -> LinearValidity<T> {
    let gamma_sigma_m = p.gamma * c.var_m.sqrt();
    let denom = T::lit(2.0) * (T::one() - p.beta_gamma());
    let simplified = if denom > T::zero() {
        p.gamma * p.gamma * p.alpha * p.sigma_n * p.sigma_n / denom
    } else {
        T::infinity()
    };
    LinearValidity { gamma_sigma_m, simplified, valid: gamma_sigma_m < T::lit(LINEAR_VALIDITY_THRESHOLD) }
}
