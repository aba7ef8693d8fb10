//! Histograms, smoothing, mode counting and density distances.

use serde::{Deserialize, Serialize};

use crate::error::{ChiarellaError, Result};
use crate::model::{Modality, ModalityVerdict, VerdictSource};
use crate::quadrature::trapezoid;
use crate::special::erf;

pub const MIN_BINS: usize = 10;
pub const MIN_SMOOTH_SAMPLES: u64 = 1000;
pub const MIN_MOMENT_SAMPLES: u64 = 100;
pub const DEFAULT_PROMINENCE: f64 = 0.05;

/// Equal-width histogram with out-of-range counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram1D {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Sum of `counts` (in-range samples only).
    pub total: u64,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram1D {
    pub fn uniform(lo: f64, hi: f64, n_bins: usize) -> Result<Self> {
        if n_bins < MIN_BINS {
            return Err(ChiarellaError::InvalidSpec(format!("need at least {MIN_BINS} bins, got {n_bins}")));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(ChiarellaError::InvalidSpec(format!("bad histogram range [{lo}, {hi}]")));
        }
        let w = (hi - lo) / n_bins as f64;
        let mut edges: Vec<f64> = (0..=n_bins).map(|i| lo + w * i as f64).collect();
        edges[n_bins] = hi;
        Ok(Self { edges, counts: vec![0; n_bins], total: 0, underflow: 0, overflow: 0 })
    }

    #[inline]
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.edges[self.n_bins()]
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi() - self.lo()) / self.n_bins() as f64
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let n = self.n_bins();
        let lo = self.lo();
        let hi = self.hi();
        if x < lo {
            self.underflow += 1;
        } else if x > hi {
            self.overflow += 1;
        } else {
            let i = (((x - lo) / (hi - lo)) * n as f64) as usize;
            self.counts[i.min(n - 1)] += 1;
            self.total += 1;
        }
    }

    pub fn merge(&mut self, other: &Histogram1D) -> Result<()> {
        if self.edges != other.edges {
            return Err(ChiarellaError::IncompatibleHistograms);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        Ok(())
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    /// Counts normalised to unit area over the histogram range.
    pub fn density(&self) -> Vec<f64> {
        let w = self.bin_width();
        let t = self.total.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / (t * w)).collect()
    }

    /// Fraction of all samples that fell outside the range.
    pub fn out_of_range_fraction(&self) -> f64 {
        let all = self.total + self.underflow + self.overflow;
        if all == 0 {
            0.0
        } else {
            (self.underflow + self.overflow) as f64 / all as f64
        }
    }

    fn binned_mean_std(&self) -> (f64, f64) {
        let t = self.total as f64;
        let c = self.centers();
        let mean = c.iter().zip(&self.counts).map(|(x, &n)| x * n as f64).sum::<f64>() / t;
        let var = c.iter().zip(&self.counts).map(|(x, &n)| (x - mean).powi(2) * n as f64).sum::<f64>() / t;
        (mean, var.sqrt())
    }

    /// Quantile by linear interpolation inside the bin.
    fn quantile(&self, q: f64) -> f64 {
        let target = q * self.total as f64;
        let mut acc = 0.0;
        let w = self.bin_width();
        for (i, &n) in self.counts.iter().enumerate() {
            let next = acc + n as f64;
            if next >= target && n > 0 {
                return self.edges[i] + w * (target - acc) / n as f64;
            }
            acc = next;
        }
        self.hi()
    }
}

/// Histogram of raw samples; the default range is `mean +- 6 std`.
pub fn build_histogram(samples: &[f64], n_bins: usize, range: Option<(f64, f64)>) -> Result<Histogram1D> {
    if samples.is_empty() {
        return Err(ChiarellaError::EmptyInput);
    }
    let (lo, hi) = match range {
        Some(r) => r,
        None => {
            let n = samples.len() as f64;
            let mean = samples.iter().sum::<f64>() / n;
            let std = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            let half = if std > 0.0 { 6.0 * std } else { 0.5 * mean.abs().max(1.0) };
            (mean - half, mean + half)
        }
    };
    let mut h = Histogram1D::uniform(lo, hi, n_bins)?;
    for &x in samples {
        h.add(x);
    }
    Ok(h)
}

/// Streaming raw power sums.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RawMoments {
    pub count: u64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
}

impl RawMoments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        let x2 = x * x;
        self.count += 1;
        self.s1 += x;
        self.s2 += x2;
        self.s3 += x2 * x;
        self.s4 += x2 * x2;
    }

    pub fn merge(&mut self, o: &RawMoments) {
        self.count += o.count;
        self.s1 += o.s1;
        self.s2 += o.s2;
        self.s3 += o.s3;
        self.s4 += o.s4;
    }

    pub fn from_samples(xs: &[f64]) -> Self {
        let mut m = Self::default();
        xs.iter().for_each(|&x| m.push(x));
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentReport {
    pub n: u64,
    pub n_eff: f64,
    pub mean: f64,
    pub var: f64,
    pub skew: f64,
    /// Excess kurtosis.
    pub kurtosis: f64,
    pub se_mean: f64,
    pub se_var: f64,
    pub se_skew: f64,
    pub se_kurtosis: f64,
}

/// `N_eff = n min(1, 2 stride dt rate)`.
pub fn effective_sample_size(n: u64, sample_spacing: f64, decorrelation_rate: f64) -> f64 {
    n as f64 * (2.0 * sample_spacing * decorrelation_rate).min(1.0)
}

/// Central moments and autocorrelation-aware standard errors.
///
/// `sample_spacing` is the time between retained samples (`stride * dt`).
pub fn moments_with_errors(m: &RawMoments, sample_spacing: f64, decorrelation_rate: f64) -> Result<MomentReport> {
    if m.count < MIN_MOMENT_SAMPLES {
        return Err(ChiarellaError::InsufficientData { have: m.count, need: MIN_MOMENT_SAMPLES });
    }
    let n = m.count as f64;
    let (e1, e2, e3, e4) = (m.s1 / n, m.s2 / n, m.s3 / n, m.s4 / n);
    let var = (e2 - e1 * e1).max(0.0);
    let mu3 = e3 - 3.0 * e1 * e2 + 2.0 * e1.powi(3);
    let mu4 = e4 - 4.0 * e1 * e3 + 6.0 * e1 * e1 * e2 - 3.0 * e1.powi(4);
    let n_eff = effective_sample_size(m.count, sample_spacing, decorrelation_rate).max(1.0);
    let (skew, kurtosis) = if var > 0.0 { (mu3 / var.powf(1.5), mu4 / (var * var) - 3.0) } else { (0.0, 0.0) };
    Ok(MomentReport {
        n: m.count,
        n_eff,
        mean: e1,
        var,
        skew,
        kurtosis,
        se_mean: (var / n_eff).sqrt(),
        se_var: ((mu4 - var * var).max(0.0) / n_eff).sqrt(),
        se_skew: (6.0 / n_eff).sqrt(),
        se_kurtosis: (24.0 / n_eff).sqrt(),
    })
}

/// A smoothed density on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDensity {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
}

impl EmpiricalDensity {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }

    /// Linear interpolation, zero outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let g = &self.grid;
        if g.is_empty() || x < g[0] || x > g[g.len() - 1] {
            return 0.0;
        }
        let i = g.partition_point(|&v| v <= x).clamp(1, g.len() - 1);
        let t = (x - g[i - 1]) / (g[i] - g[i - 1]);
        self.values[i - 1] * (1.0 - t) + self.values[i] * t
    }
}

/// Silverman bandwidth `0.9 min(std, IQR/1.34) N_eff^{-1/5}`.
pub fn silverman_bandwidth(h: &Histogram1D, n_eff: f64) -> f64 {
    let (_, std) = h.binned_mean_std();
    let iqr = h.quantile(0.75) - h.quantile(0.25);
    let spread = if iqr > 0.0 { std.min(iqr / 1.34) } else { std };
    0.9 * spread * n_eff.max(1.0).powf(-0.2)
}

/// Gaussian smoothing of the histogram's piecewise-constant density.
///
/// `n_eff` defaults to the in-range count; pass the autocorrelation-corrected
/// size for time-series samples. The grid is the bin centres padded by four
/// bandwidths on each side, and the result is renormalised to unit area.
pub fn smooth(h: &Histogram1D, n_eff: Option<f64>) -> Result<EmpiricalDensity> {
    if h.total < MIN_SMOOTH_SAMPLES {
        return Err(ChiarellaError::InsufficientData { have: h.total, need: MIN_SMOOTH_SAMPLES });
    }
    let bw = silverman_bandwidth(h, n_eff.unwrap_or(h.total as f64));
    smooth_with_bandwidth(h, bw)
}

pub fn smooth_with_bandwidth(h: &Histogram1D, bandwidth: f64) -> Result<EmpiricalDensity> {
    if h.total == 0 {
        return Err(ChiarellaError::EmptyInput);
    }
    let w = h.bin_width();
    let bw = bandwidth.max(1e-3 * w);
    let pad = (4.0 * bw / w).ceil() as usize;
    let grid: Vec<f64> =
        (0..h.n_bins() + 2 * pad).map(|i| h.lo() + w * (i as f64 - pad as f64 + 0.5)).collect();
    let dens = h.density();
    let inv = 1.0 / (std::f64::consts::SQRT_2 * bw);
    let reach = (8.0 * bw / w).ceil() as isize + 1;
    let mut values = vec![0.0; grid.len()];
    for (gi, &x) in grid.iter().enumerate() {
        let centre = gi as isize - pad as isize;
        let (j0, j1) = ((centre - reach).max(0) as usize, ((centre + reach).max(0) as usize).min(h.n_bins()));
        let mut v = 0.0;
        for j in j0..j1 {
            if dens[j] == 0.0 {
                continue;
            }
            let a = (x - h.edges[j]) * inv;
            let b = (x - h.edges[j + 1]) * inv;
            v += dens[j] * 0.5 * (erf(a) - erf(b));
        }
        values[gi] = v;
    }
    let area = trapezoid(&grid, &values);
    if area > 0.0 {
        values.iter_mut().for_each(|v| *v /= area);
    }
    Ok(EmpiricalDensity { grid, values, bandwidth: bw })
}

/// Local maxima with topographic prominence at least `prominence_fraction * max`.
pub fn count_modes(d: &EmpiricalDensity, prominence_fraction: f64) -> ModalityVerdict<f64> {
    let v = &d.values;
    let vmax = v.iter().cloned().fold(0.0, f64::max);
    let threshold = prominence_fraction * vmax;
    let mut modes = Vec::new();
    let n = v.len();
    let mut i = 0;
    while i < n {
        // plateau [i, j)
        let mut j = i + 1;
        while j < n && v[j] == v[i] {
            j += 1;
        }
        let left_lower = i == 0 || v[i - 1] < v[i];
        let right_lower = j == n || v[j] < v[i];
        if left_lower && right_lower && v[i] > 0.0 {
            let peak = v[i];
            let side_min = |range: &mut dyn Iterator<Item = usize>| {
                let mut m = peak;
                for k in range {
                    if v[k] > peak {
                        return m;
                    }
                    m = m.min(v[k]);
                }
                m
            };
            let lmin = side_min(&mut (0..i).rev());
            let rmin = side_min(&mut (j..n));
            // the higher saddle bounds the prominence; a side with no higher ground counts fully
            let base = lmin.max(rmin);
            if peak - base >= threshold {
                let mid = (i + j - 1) as f64 / 2.0;
                let k = mid.floor() as usize;
                let x = if mid.fract() == 0.0 { d.grid[k] } else { 0.5 * (d.grid[k] + d.grid[k + 1]) };
                modes.push(x);
            }
        }
        i = j;
    }
    if modes.is_empty() {
        let k = v.iter().enumerate().fold(0, |b, (i, &x)| if x > v[b] { i } else { b });
        modes.push(d.grid.get(k).copied().unwrap_or(0.0));
    }
    let modality = match modes.len() {
        1 => Modality::Unimodal,
        2 => Modality::Bimodal,
        _ => Modality::Multimodal,
    };
    ModalityVerdict { modality, modes, source: VerdictSource::Empirical, indicative: false, curvature_at_zero: None }
}

/// Grid over which an analytic density is compared: its effective support.
pub trait Support {
    fn support(&self) -> (f64, f64);
    fn pdf(&self, x: f64) -> f64;
}

impl<F: Fn(f64) -> f64> Support for ((f64, f64), F) {
    fn support(&self) -> (f64, f64) {
        self.0
    }
    fn pdf(&self, x: f64) -> f64 {
        (self.1)(x)
    }
}

const COMPARISON_POINTS: usize = 4001;

fn union_grid(d: &EmpiricalDensity, f: &dyn Support) -> Result<Vec<f64>> {
    if d.grid.len() < 2 {
        return Err(ChiarellaError::SupportMismatch("empirical grid has fewer than two points".into()));
    }
    let (lo, hi) = f.support();
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(ChiarellaError::SupportMismatch(format!("analytic support [{lo}, {hi}] is not a finite interval")));
    }
    let mut g: Vec<f64> = (0..COMPARISON_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (COMPARISON_POINTS - 1) as f64)
        .chain(d.grid.iter().copied())
        .collect();
    g.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    g.dedup();
    Ok(g)
}

/// `∫ |d - f|` over the union of the empirical grid and the analytic support.
pub fn l1_distance(d: &EmpiricalDensity, f: &dyn Support) -> Result<f64> {
    let g = union_grid(d, f)?;
    let diff: Vec<f64> = g.iter().map(|&x| (d.eval(x) - f.pdf(x)).abs()).collect();
    Ok(trapezoid(&g, &diff))
}

/// Largest gap between the two cumulative distribution functions.
pub fn ks_distance(d: &EmpiricalDensity, f: &dyn Support) -> Result<f64> {
    let g = union_grid(d, f)?;
    let (mut cd, mut cf, mut worst) = (0.0_f64, 0.0_f64, 0.0_f64);
    for w in g.windows(2) {
        let h = w[1] - w[0];
        cd += 0.5 * h * (d.eval(w[0]) + d.eval(w[1]));
        cf += 0.5 * h * (f.pdf(w[0]) + f.pdf(w[1]));
        worst = worst.max((cd - cf).abs());
    }
    Ok(worst)
}
