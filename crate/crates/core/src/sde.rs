//! Euler-Maruyama integration with streaming statistics.
//!
//! Path `i` draws from ChaCha8 stream `i` of the master seed (stream `i / 2`
//! with negated noise on odd paths when antithetic pairing is on), so results
//! do not depend on thread count or scheduling. Per-path statistics are merged
//! in path order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::empirics::{Histogram1D, RawMoments};
use crate::error::{ChiarellaError, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;

pub const GENERATOR: &str = "ChaCha8Rng (rand_chacha 0.3), one stream per path";
pub const MIN_STEPS: f64 = 1e3;
pub const DEFAULT_BINS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FullState<T> {
    pub p: T,
    pub m: T,
    pub v: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReducedState<T> {
    pub delta: T,
    pub m: T,
}

impl<T: Scalar> FullState<T> {
    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.m.is_finite() && self.v.is_finite()
    }

    pub fn reduced(&self) -> ReducedState<T> {
        ReducedState { delta: self.p - self.v, m: self.m }
    }
}

impl<T: Scalar> ReducedState<T> {
    pub fn is_finite(&self) -> bool {
        self.delta.is_finite() && self.m.is_finite()
    }
}

/// One step of the three-variable system; `noise = (xi_n, xi_v)`.
#[inline]
pub fn step_full<T: Scalar>(s: FullState<T>, p: &ModelParams<T>, dt: T, noise: (T, T)) -> Result<FullState<T>> {
    let sq = dt.sqrt();
    let dp = (p.kappa * (s.v - s.p) + p.beta * tanh_fast(p.gamma * s.m) + p.g) * dt + p.sigma_n * sq * noise.0;
    let out = FullState {
        p: s.p + dp,
        m: s.m - p.alpha * s.m * dt + p.alpha * (dp - p.g * dt),
        v: s.v + p.g * dt + p.sigma_v * sq * noise.1,
    };
    if out.is_finite() {
        Ok(out)
    } else {
        Err(ChiarellaError::NonFinite { step: 0, path: 0 })
    }
}

/// One step of the mispricing/trend system.
#[inline]
pub fn step_reduced<T: Scalar>(
    s: ReducedState<T>,
    p: &ModelParams<T>,
    dt: T,
    noise: (T, T),
) -> Result<ReducedState<T>> {
    let out = step_reduced_unchecked(s, p, dt, dt.sqrt(), noise);
    if out.is_finite() {
        Ok(out)
    } else {
        Err(ChiarellaError::NonFinite { step: 0, path: 0 })
    }
}

/// Odd `tanh` through a single `exp`; absolute error below 1e-15.
#[inline(always)]
fn tanh_fast<T: Scalar>(z: T) -> T {
    let two = T::lit(2.0);
    let r = T::one() - two / ((two * z.abs()).exp() + T::one());
    if z < T::zero() {
        -r
    } else {
        r
    }
}

#[inline(always)]
fn step_reduced_unchecked<T: Scalar>(s: ReducedState<T>, p: &ModelParams<T>, dt: T, sq: T, noise: (T, T)) -> ReducedState<T> {
    let v_kick = p.sigma_v * sq * noise.1;
    let dd = (-p.kappa * s.delta + p.beta * tanh_fast(p.gamma * s.m)) * dt + p.sigma_n * sq * noise.0 - v_kick;
    ReducedState { delta: s.delta + dd, m: s.m - p.alpha * s.m * dt + p.alpha * (dd + v_kick) }
}

/// `(x, y) = (delta, M - alpha delta)`.
pub fn to_xy<T: Scalar>(s: ReducedState<T>, p: &ModelParams<T>) -> (T, T) {
    (s.delta, s.m - p.alpha * s.delta)
}

pub fn from_xy<T: Scalar>(x: T, y: T, p: &ModelParams<T>) -> ReducedState<T> {
    ReducedState { delta: x, m: y + p.alpha * x }
}

/// Initial condition; also selects which system is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "lowercase", bound(deserialize = "T: Scalar"))]
pub enum InitState<T> {
    Reduced { delta: T, m: T },
    Full { p: T, m: T, v: T },
}

impl<T: Scalar> Default for InitState<T> {
    fn default() -> Self {
        InitState::Reduced { delta: T::zero(), m: T::zero() }
    }
}

/// Simulation request. Optional fields fall back to the defaults documented on [`SimSpec::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct SimSpec<T = f64> {
    pub params: ModelParams<T>,
    pub dt: T,
    pub total_time: T,
    pub burn_in_fraction: f64,
    pub subsample_stride: u64,
    pub seed: u64,
    pub n_paths: u64,
    #[serde(default)]
    pub init: InitState<T>,
    pub delta_range: (f64, f64),
    pub m_range: (f64, f64),
    pub n_bins: usize,
    /// Pair path `2k + 1` with path `2k` using negated noise.
    #[serde(default)]
    pub antithetic: bool,
}

/// Same as [`SimSpec`] with every tunable optional, for config files.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct SimConfig<T = f64> {
    pub params: ModelParams<T>,
    pub total_time: T,
    pub dt: Option<T>,
    pub burn_in_fraction: Option<f64>,
    pub subsample_stride: Option<u64>,
    pub seed: Option<u64>,
    pub n_paths: Option<u64>,
    pub init: Option<InitState<T>>,
    pub delta_range: Option<(f64, f64)>,
    pub m_range: Option<(f64, f64)>,
    pub n_bins: Option<usize>,
    pub antithetic: Option<bool>,
}

impl<T: Scalar> SimConfig<T> {
    pub fn into_spec(self) -> Result<SimSpec<T>> {
        let mut s = SimSpec::new(self.params, self.total_time);
        if let Some(dt) = self.dt {
            s.dt = dt;
            s.subsample_stride = default_stride(&s.params, dt);
        }
        s.burn_in_fraction = self.burn_in_fraction.unwrap_or(s.burn_in_fraction);
        s.subsample_stride = self.subsample_stride.unwrap_or(s.subsample_stride);
        s.seed = self.seed.unwrap_or(s.seed);
        s.n_paths = self.n_paths.unwrap_or(s.n_paths);
        s.init = self.init.unwrap_or(s.init);
        s.delta_range = self.delta_range.unwrap_or(s.delta_range);
        s.m_range = self.m_range.unwrap_or(s.m_range);
        s.n_bins = self.n_bins.unwrap_or(s.n_bins);
        s.antithetic = self.antithetic.unwrap_or(s.antithetic);
        s.validate()?;
        Ok(s)
    }
}

/// `min(1/(20 alpha), 1/(20 kappa), gamma/2)`, ignoring the last term when `gamma = 0`.
pub fn default_dt<T: Scalar>(p: &ModelParams<T>) -> T {
    let twenty = T::lit(20.0);
    let mut dt = (twenty * p.alpha).recip().min((twenty * p.kappa).recip());
    if p.gamma > T::zero() {
        dt = dt.min(p.gamma / T::lit(2.0));
    }
    dt
}

/// Stride with `stride * dt` close to `1 / min(kappa, alpha)`.
pub fn default_stride<T: Scalar>(p: &ModelParams<T>, dt: T) -> u64 {
    let t = (p.kappa.min(p.alpha) * dt).recip().as_f64();
    t.round().max(1.0) as u64
}

/// Heuristic histogram half-widths for mispricing and trend.
pub fn default_ranges<T: Scalar>(p: &ModelParams<T>) -> ((f64, f64), (f64, f64)) {
    let p = p.cast::<f64>();
    let s = p.sigma_sq().sqrt();
    let d = 8.0 * s / (2.0 * p.kappa).sqrt() + 1.5 * p.beta / p.kappa;
    let m = 8.0 * s * (p.alpha / 2.0).sqrt() + 1.5 * p.beta * p.alpha / (p.alpha + p.kappa);
    ((-d, d), (-m, m))
}

impl<T: Scalar> SimSpec<T> {
    /// Spec with defaults: `dt` from [`default_dt`], burn-in 10%, stride from
    /// [`default_stride`], seed 0, one path, start at the origin, ranges from
    /// [`default_ranges`] with 200 bins.
    pub fn new(params: ModelParams<T>, total_time: T) -> Self {
        let dt = default_dt(&params);
        let (delta_range, m_range) = default_ranges(&params);
        Self {
            params,
            dt,
            total_time,
            burn_in_fraction: 0.1,
            subsample_stride: default_stride(&params, dt),
            seed: 0,
            n_paths: 1,
            init: InitState::default(),
            delta_range,
            m_range,
            n_bins: DEFAULT_BINS,
            antithetic: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ChiarellaError::InvalidSpec(m));
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.total_time / self.dt >= T::lit(MIN_STEPS)) {
            return bad(format!("total_time/dt = {} < {MIN_STEPS}", self.total_time / self.dt));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return bad(format!("burn_in_fraction must be in [0, 1), got {}", self.burn_in_fraction));
        }
        if self.subsample_stride < 1 {
            return bad("subsample_stride must be >= 1".into());
        }
        if self.n_paths < 1 {
            return bad("n_paths must be >= 1".into());
        }
        Histogram1D::uniform(self.delta_range.0, self.delta_range.1, self.n_bins)?;
        Histogram1D::uniform(self.m_range.0, self.m_range.1, self.n_bins)?;
        Ok(())
    }

    pub fn n_steps(&self) -> u64 {
        (self.total_time / self.dt).as_f64().round() as u64
    }

    pub fn burn_in_steps(&self) -> u64 {
        (self.n_steps() as f64 * self.burn_in_fraction).floor() as u64
    }

    /// Time between retained samples.
    pub fn sample_spacing(&self) -> f64 {
        self.subsample_stride as f64 * self.dt.as_f64()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimMetadata {
    pub version: String,
    pub seed: u64,
    pub generator: String,
    pub spec: serde_json::Value,
}

/// Merged statistics of all retained samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryStats {
    pub hist_delta: Histogram1D,
    pub hist_m: Histogram1D,
    pub raw_moments_delta: RawMoments,
    pub raw_moments_m: RawMoments,
    pub n_retained: u64,
    pub sample_spacing: f64,
    pub metadata: SimMetadata,
}

struct PathStats {
    hd: Histogram1D,
    hm: Histogram1D,
    md: RawMoments,
    mm: RawMoments,
}

/// RNG and noise sign for path `i`.
fn path_rng(seed: u64, path: u64, antithetic: bool) -> (ChaCha8Rng, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (stream, negate) = if antithetic { (path / 2, path % 2 == 1) } else { (path, false) };
    rng.set_stream(stream);
    (rng, negate)
}

/// Integrates path `path` and hands every retained `(delta, M)` to `sink`.
pub fn run_path<T, F>(spec: &SimSpec<T>, path: u64, mut sink: F) -> Result<()>
where
    T: Scalar,
    StandardNormal: Distribution<T>,
    F: FnMut(T, T),
{
    let (mut rng, negate) = path_rng(spec.seed, path, spec.antithetic);
    let sign = if negate { -T::one() } else { T::one() };
    let p = &spec.params;
    let dt = spec.dt;
    let sq = dt.sqrt();
    let n = spec.n_steps();
    let burn = spec.burn_in_steps();
    let stride = spec.subsample_stride;
    let nonfinite = |step| ChiarellaError::NonFinite { step, path };
    match spec.init {
        InitState::Reduced { delta, m } => {
            let mut s = ReducedState { delta: sign * delta, m: sign * m };
            for step in 1..=n {
                let xn: T = StandardNormal.sample(&mut rng);
                let xv: T = StandardNormal.sample(&mut rng);
                s = step_reduced_unchecked(s, p, dt, sq, (sign * xn, sign * xv));
                if step > burn && (step - burn) % stride == 0 {
                    if !s.is_finite() {
                        return Err(nonfinite(step));
                    }
                    sink(s.delta, s.m);
                }
            }
            if !s.is_finite() {
                return Err(nonfinite(n));
            }
        }
        InitState::Full { p: p0, m, v } => {
            let mut s = FullState { p: sign * p0, m: sign * m, v: sign * v };
            for step in 1..=n {
                let xn: T = StandardNormal.sample(&mut rng);
                let xv: T = StandardNormal.sample(&mut rng);
                s = step_full(s, p, dt, (sign * xn, sign * xv)).map_err(|_| nonfinite(step))?;
                if step > burn && (step - burn) % stride == 0 {
                    sink(s.p - s.v, s.m);
                }
            }
        }
    }
    Ok(())
}

/// Retained samples of one path, for diagnostics and tests.
pub fn sample_path<T>(spec: &SimSpec<T>, path: u64) -> Result<Vec<(T, T)>>
where
    T: Scalar,
    StandardNormal: Distribution<T>,
{
    let mut out = Vec::new();
    run_path(spec, path, |d, m| out.push((d, m)))?;
    Ok(out)
}

fn simulate_one<T>(spec: &SimSpec<T>, path: u64) -> Result<PathStats>
where
    T: Scalar,
    StandardNormal: Distribution<T>,
{
    let mut st = PathStats {
        hd: Histogram1D::uniform(spec.delta_range.0, spec.delta_range.1, spec.n_bins)?,
        hm: Histogram1D::uniform(spec.m_range.0, spec.m_range.1, spec.n_bins)?,
        md: RawMoments::default(),
        mm: RawMoments::default(),
    };
    run_path(spec, path, |d, m| {
        let (d, m) = (d.as_f64(), m.as_f64());
        st.hd.add(d);
        st.hm.add(m);
        st.md.push(d);
        st.mm.push(m);
    })?;
    Ok(st)
}

/// Runs all paths (in parallel on the current rayon pool) and merges in path order.
pub fn simulate<T>(spec: &SimSpec<T>) -> Result<TrajectoryStats>
where
    T: Scalar,
    StandardNormal: Distribution<T>,
{
    spec.validate()?;
    let per_path: Vec<Result<PathStats>> = (0..spec.n_paths).into_par_iter().map(|i| simulate_one(spec, i)).collect();
    let mut it = per_path.into_iter();
    let mut acc = it.next().expect("n_paths >= 1")?;
    for r in it {
        let s = r?;
        acc.hd.merge(&s.hd)?;
        acc.hm.merge(&s.hm)?;
        acc.md.merge(&s.md);
        acc.mm.merge(&s.mm);
    }
    Ok(TrajectoryStats {
        n_retained: acc.md.count,
        hist_delta: acc.hd,
        hist_m: acc.hm,
        raw_moments_delta: acc.md,
        raw_moments_m: acc.mm,
        sample_spacing: spec.sample_spacing(),
        metadata: SimMetadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: spec.seed,
            generator: GENERATOR.to_string(),
            spec: serde_json::to_value(spec).unwrap_or(serde_json::Value::Null),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> ModelParams<f64> {
        ModelParams::new(0.1, 0.2, 1e-4, 0.2, 0.2, 0.1).unwrap()
    }

    #[test]
    fn fast_tanh_accuracy() {
        for i in -4000..=4000 {
            let z = i as f64 * 0.01;
            assert!((tanh_fast(z) - z.tanh()).abs() < 1e-15, "{z}");
        }
        assert_eq!(tanh_fast(1e6_f64), 1.0);
        assert_eq!(tanh_fast(-1e6_f64), -1.0);
        assert!(tanh_fast(f64::NAN).is_nan());
        assert_eq!(tanh_fast(-0.3_f64), -tanh_fast(0.3_f64));
    }

    #[test]
    fn fixed_points() {
        let p = ModelParams { sigma_n: 0.0, sigma_v: 0.0, ..fig1() };
        let z = FullState::default();
        assert_eq!(step_full(z, &p, 0.01, (0.0, 0.0)).unwrap(), z);
        assert_eq!(step_reduced(ReducedState::default(), &p, 0.01, (0.0, 0.0)).unwrap(), ReducedState::default());
    }

    #[test]
    fn pure_relaxation() {
        let p = ModelParams::new(0.3, 0.0, 1.0, 0.2, 0.2, 0.1).unwrap();
        let s = step_full(FullState { p: 1.0, m: 0.0, v: 0.0 }, &p, 0.01, (0.0, 0.0)).unwrap();
        assert_eq!(s.p, 1.0 - 0.3 * 0.01);
    }

    #[test]
    fn hand_computed_steps() {
        let p = ModelParams::new(0.3, 0.7, 2.0, 1.5, 0.4, 0.2).unwrap().with_drift(0.05).unwrap();
        let (dt, xn, xv) = (0.01_f64, 0.8_f64, -1.3_f64);
        let s = FullState { p: 0.2, m: 0.1, v: -0.1 };
        let dp = (0.3 * (-0.1 - 0.2) + 0.7 * (0.2_f64).tanh() + 0.05) * dt + 0.4 * 0.1 * xn;
        let want = FullState {
            p: 0.2 + dp,
            m: 0.1 - 1.5 * 0.1 * dt + 1.5 * (dp - 0.05 * dt),
            v: -0.1 + 0.05 * dt + 0.2 * 0.1 * xv,
        };
        let got = step_full(s, &p, dt, (xn, xv)).unwrap();
        assert!((got.p - want.p).abs() < 1e-15 && (got.m - want.m).abs() < 1e-15 && (got.v - want.v).abs() < 1e-15);

        let r = ReducedState { delta: 0.3, m: 0.1 };
        let dd = (-0.3 * 0.3 + 0.7 * (0.2_f64).tanh()) * dt + 0.4 * 0.1 * xn - 0.2 * 0.1 * xv;
        let got = step_reduced(r, &p, dt, (xn, xv)).unwrap();
        assert!((got.delta - (0.3 + dd)).abs() < 1e-15);
        assert!((got.m - (0.1 - 1.5 * 0.1 * dt + 1.5 * (dd + 0.2 * 0.1 * xv))).abs() < 1e-15);
    }

    #[test]
    fn full_and_reduced_agree() {
        let p = ModelParams::new(0.3, 0.7, 2.0, 1.5, 0.4, 0.2).unwrap().with_drift(0.02).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut f = FullState { p: 0.5_f64, m: 0.0, v: 0.1 };
        let mut r = f.reduced();
        for _ in 0..10_000 {
            let n = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            f = step_full(f, &p, 0.01, n).unwrap();
            r = step_reduced(r, &p, 0.01, n).unwrap();
            assert!((f.p - f.v - r.delta).abs() < 1e-12);
            assert!((f.m - r.m).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_is_reported() {
        let p = ModelParams::new(1e300, 0.0, 1.0, 1.0, 0.1, 0.1).unwrap();
        let e = step_reduced(ReducedState { delta: 1e300, m: 0.0 }, &p, 1e10, (0.0, 0.0));
        assert!(matches!(e, Err(ChiarellaError::NonFinite { .. })));
        let mut spec = SimSpec::new(ModelParams::new(1.0, 0.0, 1.0, 1.0, 0.1, 0.1).unwrap(), 1e4);
        spec.dt = 5.0;
        spec.total_time = 5e3;
        spec.subsample_stride = 1;
        spec.init = InitState::Reduced { delta: 1.0, m: 0.0 };
        match simulate(&spec) {
            Err(ChiarellaError::NonFinite { step, path: 0 }) => assert!(step > 0 && step < 1000),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn xy_round_trip() {
        let p = fig1();
        assert_eq!(to_xy(ReducedState { delta: 0.0, m: 0.0 }, &p), (0.0, 0.0));
        assert_eq!(to_xy(ReducedState { delta: 1.0, m: 0.2 }, &p), (1.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let s = ReducedState { delta: StandardNormal.sample(&mut rng), m: StandardNormal.sample(&mut rng) };
            let (x, y) = to_xy(s, &p);
            let b = from_xy(x, y, &p);
            assert!((b.delta - s.delta).abs() <= 1e-15 && (b.m - s.m).abs() <= 1e-15);
        }
    }

    fn small_spec() -> SimSpec<f64> {
        let mut s = SimSpec::new(ModelParams::new(0.5, 0.3, 2.0, 1.0, 0.3, 0.1).unwrap(), 200.0);
        s.n_paths = 4;
        s.seed = 42;
        s
    }

    #[test]
    fn zero_noise_stays_at_origin() {
        let mut s = small_spec();
        s.params = ModelParams { sigma_n: 0.0, sigma_v: 0.0, ..s.params };
        let st = simulate(&s).unwrap();
        assert!(st.n_retained > 0);
        assert_eq!(st.raw_moments_delta.s2, 0.0);
        assert_eq!(st.raw_moments_m.s2, 0.0);
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let s = small_spec();
        let a = simulate(&s).unwrap();
        let b = simulate(&s).unwrap();
        assert_eq!(a, b);
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| simulate(&s)).unwrap();
        assert_eq!(a, serial);
        let mut other = s.clone();
        other.seed = 43;
        assert_ne!(simulate(&other).unwrap().raw_moments_delta, a.raw_moments_delta);
    }

    #[test]
    fn antithetic_pairs_are_mirror_images() {
        let mut s = small_spec();
        s.antithetic = true;
        let a = sample_path(&s, 0).unwrap();
        let b = sample_path(&s, 1).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((x.0, x.1), (-y.0, -y.1));
        }
    }

    #[test]
    fn burn_in_and_stride_counts() {
        let mut s = small_spec();
        s.n_paths = 1;
        s.subsample_stride = 7;
        let n = s.n_steps();
        let want = (n - s.burn_in_steps()) / 7;
        assert_eq!(sample_path(&s, 0).unwrap().len() as u64, want);
    }

    #[test]
    fn full_system_path_runs() {
        let mut s = small_spec();
        s.init = InitState::Full { p: 0.0, m: 0.0, v: 0.0 };
        let st = simulate(&s).unwrap();
        let mut r = s.clone();
        r.init = InitState::default();
        let rt = simulate(&r).unwrap();
        assert_eq!(st.n_retained, rt.n_retained);
        // identical noise, identical delta up to rounding
        assert!((st.raw_moments_delta.s2 - rt.raw_moments_delta.s2).abs() < 1e-8 * rt.raw_moments_delta.s2);
    }

    #[test]
    fn spec_validation() {
        let mut s = small_spec();
        s.total_time = s.dt * 10.0;
        assert!(s.validate().is_err());
        let mut s = small_spec();
        s.burn_in_fraction = 1.0;
        assert!(s.validate().is_err());
        let json = r#"{"params":{"kappa":0.1,"beta":0.2,"gamma":0.0001,"alpha":0.2,"sigma_n":0.2,"sigma_v":0.1},"total_time":1.0}"#;
        let c: SimConfig<f64> = serde_json::from_str(json).unwrap();
        let spec = c.into_spec().unwrap();
        assert_eq!(spec.dt, 5e-5);
        assert_eq!(spec.subsample_stride, 200_000);
    }

    #[test]
    fn single_precision_runs() {
        let mut s: SimSpec<f32> = SimSpec::new(ModelParams::new(0.5, 0.3, 2.0, 1.0, 0.3, 0.1).unwrap(), 200.0);
        s.n_paths = 2;
        let st = simulate(&s).unwrap();
        assert!(st.n_retained > 0);
    }
}
