//! Figure reproductions, parameter sweeps and the oracle verification suite.
//!
//! Each figure is a list of panels. A panel runs the simulator, smooths both
//! marginals, counts modes and compares against the analytic law of its
//! regime. Checks carry the measured value and the threshold so that callers
//! can print or serialise verdicts without re-deriving anything.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::density::{AnalyticDensity, Density1D};
use crate::empirics::{count_modes, l1_distance, moments_with_errors, smooth, EmpiricalDensity, MomentReport};
use crate::error::{ChiarellaError, Result};
use crate::fast_trend::{gamma_ratio_expansion, novikov_for_w, telegraph_autocov_mc, variance_x};
use crate::linear::{fpe_residuals, lyapunov_covariance};
use crate::model::{classify_deterministic_phase, predict_modality, ModalityVerdict, ModelParams, Regime};
use crate::quadrature::integrate;
use crate::sde::{default_ranges, simulate, SimSpec, TrajectoryStats};
use crate::slow_trend::normalization_a;
use crate::strong_coupling::{crossing_time_for_theta, theta_critical};

/// Prominence used for figure and sweep verdicts.
///
/// Lower than the library default: the simulated dips at the bimodal onset
/// are 2-4% of the peak, while the Monte-Carlo ripple at these sample sizes
/// stays below 0.5%.
pub const FIGURE_PROMINENCE: f64 = 0.01;

/// Relative-error and L1 tolerance, at both scales.
///
/// The fast-trend variance carries a systematic floor of a few percent, so a
/// tighter full-scale threshold would test the truncation, not the sampling.
pub const DENSITY_TOL: f64 = 0.05;

/// Standard errors allowed between a simulated moment and its prediction.
pub const SE_TOLERANCE: f64 = 3.0;

/// Reference value of the critical coupling.
pub const THETA_C_REFERENCE: f64 = 0.797999;

/// Figure 1 panel values of `gamma`.
pub const FIG1_GAMMAS: [f64; 4] = [1e-4, 1e-2, 1.0, 2.0];
/// Figure 2 panel values of `kappa`.
pub const FIG2_KAPPAS: [f64; 3] = [0.2, 0.075, 0.02];
/// Figure 3 panels `(kappa, beta)`, all with `theta <= 0.12`.
pub const FIG3_PANELS: [(f64, f64); 3] = [(0.2, 1.0), (0.5, 1.5), (1.0, 2.0)];
/// Figure 4 panel values of `beta`.
pub const FIG4_BETAS: [f64; 2] = [5.0, 18.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Not evaluated at this scale.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        let status = if passed { Status::Pass } else { Status::Fail };
        Self { name: name.into(), status, value, threshold, detail: detail.into() }
    }

    fn skipped(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self { name: name.into(), status: Status::Skipped, value: f64::NAN, threshold: f64::NAN, detail: detail.into() }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// `PASS name: detail` style line.
    pub fn line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        format!("{tag} {}: {}", self.name, self.detail)
    }
}

/// Simulation plan of one panel.
#[derive(Debug, Clone, Serialize)]
pub struct PanelPlan {
    pub label: String,
    pub regime: Regime,
    pub spec: SimSpec<f64>,
    /// Decorrelation rates used for `N_eff` of mispricing and trend.
    pub rate_delta: f64,
    pub rate_m: f64,
}

/// Everything a panel produced.
#[derive(Debug, Clone, Serialize)]
pub struct Panel {
    pub label: String,
    pub regime: Regime,
    pub params: ModelParams<f64>,
    #[serde(skip)]
    pub stats: TrajectoryStats,
    #[serde(skip)]
    pub delta_density: EmpiricalDensity,
    #[serde(skip)]
    pub m_density: EmpiricalDensity,
    pub delta_moments: MomentReport,
    pub m_moments: MomentReport,
    pub delta_modes: ModalityVerdict<f64>,
    pub m_modes: ModalityVerdict<f64>,
    /// Analytic law of the mispricing on the empirical grid, if the regime has one.
    #[serde(skip)]
    pub analytic_delta: Option<Vec<(f64, f64)>>,
    #[serde(skip)]
    pub analytic_m: Option<Vec<(f64, f64)>>,
    pub analytic_delta_law: Option<String>,
    pub l1_delta: Option<f64>,
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FigureResult {
    pub figure: u8,
    pub scale: Scale,
    pub seed: u64,
    pub panels: Vec<Panel>,
}

impl FigureResult {
    pub fn checks(&self) -> impl Iterator<Item = &Check> {
        self.panels.iter().flat_map(|p| p.checks.iter())
    }

    /// True when no evaluated check failed.
    pub fn passed(&self) -> bool {
        self.checks().all(|c| c.status != Status::Fail)
    }
}

fn analytic_on_grid(d: &AnalyticDensity, grid: &[f64]) -> Vec<(f64, f64)> {
    grid.iter().map(|&x| (x, Density1D::pdf(d, x))).collect()
}

/// Runs the simulation of `plan` and computes the empirical summaries.
pub fn run_plan(plan: &PanelPlan) -> Result<Panel> {
    let stats = simulate(&plan.spec)?;
    let dm = moments_with_errors(&stats.raw_moments_delta, stats.sample_spacing, plan.rate_delta)?;
    let mm = moments_with_errors(&stats.raw_moments_m, stats.sample_spacing, plan.rate_m)?;
    let delta_density = smooth(&stats.hist_delta, Some(dm.n_eff))?;
    let m_density = smooth(&stats.hist_m, Some(mm.n_eff))?;
    let mut warnings = Vec::new();
    for (name, h) in [("delta", &stats.hist_delta), ("M", &stats.hist_m)] {
        let f = h.out_of_range_fraction();
        if f > 1e-3 {
            warnings.push(format!("{:.3}% of {name} samples fell outside the histogram range", 100.0 * f));
        }
    }
    Ok(Panel {
        label: plan.label.clone(),
        regime: plan.regime,
        params: plan.spec.params,
        delta_modes: count_modes(&delta_density, FIGURE_PROMINENCE),
        m_modes: count_modes(&m_density, FIGURE_PROMINENCE),
        stats,
        delta_density,
        m_density,
        delta_moments: dm,
        m_moments: mm,
        analytic_delta: None,
        analytic_m: None,
        analytic_delta_law: None,
        l1_delta: None,
        warnings,
        checks: Vec::new(),
    })
}

/// Attaches the analytic mispricing law of the panel's regime, when it exists.
fn overlay_delta(panel: &mut Panel) -> Option<AnalyticDensity> {
    match AnalyticDensity::for_regime(&panel.params, panel.regime) {
        Ok(b) => {
            panel.analytic_delta = Some(analytic_on_grid(&b.density, &panel.delta_density.grid));
            panel.analytic_delta_law = Some(b.density.label().to_string());
            panel.l1_delta = l1_distance(&panel.delta_density, &b.density).ok();
            panel.warnings.extend(b.warnings);
            Some(b.density)
        }
        Err(e) => {
            panel.warnings.push(format!("no analytic mispricing law: {e}"));
            None
        }
    }
}

fn symmetric(h: f64) -> (f64, f64) {
    (-h, h)
}

fn stride_for(spacing: f64, dt: f64) -> u64 {
    ((spacing / dt).round() as u64).max(1)
}

// ---------------------------------------------------------------- figure 1

pub fn fig1_params(gamma: f64) -> Result<ModelParams<f64>> {
    ModelParams::new(0.1, 0.2, gamma, 0.2, 0.2, 0.1)
}

/// Desk scale keeps `T / gamma = 1e7`; full scale uses the caption `1e9`.
pub fn fig1_plan(gamma: f64, scale: Scale, seed: u64, n_paths: u64) -> Result<PanelPlan> {
    let p = fig1_params(gamma)?;
    let t = gamma * if scale == Scale::Full { 1e9 } else { 1e7 };
    let dt = gamma / 2.0;
    let c = lyapunov_covariance(&p)?;
    let mut spec = SimSpec::new(p, t);
    spec.dt = dt;
    spec.subsample_stride = stride_for(0.5, dt);
    spec.seed = seed;
    spec.n_paths = n_paths;
    // mirrored pairs share their second moments, which would understate the variance error
    spec.antithetic = false;
    spec.delta_range = symmetric(8.0 * c.var_delta.sqrt());
    spec.m_range = symmetric(8.0 * c.var_m.sqrt());
    Ok(PanelPlan {
        label: format!("gamma={gamma}"),
        regime: Regime::Linear,
        spec,
        rate_delta: p.kappa.min(p.alpha),
        rate_m: p.alpha,
    })
}

pub fn fig1_default_paths(gamma: f64, scale: Scale) -> u64 {
    match scale {
        Scale::Desk if gamma == FIG1_GAMMAS[0] => 48,
        Scale::Desk => 8,
        Scale::Full => 4,
    }
}

/// One Figure 1 panel; only the smallest `gamma` is gated.
pub fn fig1_panel(gamma: f64, scale: Scale, seed: u64, n_paths: u64) -> Result<Panel> {
    let plan = fig1_plan(gamma, scale, seed, n_paths)?;
    let mut panel = run_plan(&plan)?;
    overlay_delta(&mut panel);
    if gamma == FIG1_GAMMAS[0] {
        let want = lyapunov_covariance(&panel.params)?.var_delta;
        let m = &panel.delta_moments;
        let z = (m.var - want) / m.se_var;
        panel.checks.push(Check::new(
            "fig1.var_delta",
            z.abs() < SE_TOLERANCE,
            z.abs(),
            SE_TOLERANCE,
            format!("Var[delta] = {:.5} +- {:.5}, predicted {want:.5} (|z| = {:.2})", m.var, m.se_var, z.abs()),
        ));
        let tol = DENSITY_TOL;
        let l1 = panel.l1_delta.unwrap_or(f64::INFINITY);
        panel.checks.push(Check::new(
            "fig1.l1_delta",
            l1 < tol,
            l1,
            tol,
            format!("L1(empirical, linear Gaussian) = {l1:.4} < {tol}"),
        ));
    }
    Ok(panel)
}

// ---------------------------------------------------------------- figure 2

pub fn fig2_params(kappa: f64) -> Result<ModelParams<f64>> {
    ModelParams::new(kappa, 0.05, 5e4, 2e-5, 0.2, 0.1)
}

pub fn fig2_plan(kappa: f64, scale: Scale, seed: u64, n_paths: u64) -> Result<PanelPlan> {
    let p = fig2_params(kappa)?;
    let t = if scale == Scale::Full { 5e7 } else { 5e5 };
    let mut spec = SimSpec::new(p, t);
    spec.dt = 0.01;
    spec.subsample_stride = stride_for(1.0, spec.dt);
    spec.seed = seed;
    spec.n_paths = n_paths;
    spec.antithetic = true;
    spec.delta_range = AnalyticDensity::GaussianCosh { params: p }.effective_support();
    Ok(PanelPlan {
        label: format!("kappa={kappa}"),
        regime: Regime::SlowTrend,
        spec,
        // the conditional law of delta relaxes at kappa; min(kappa, alpha) would oversmooth
        rate_delta: kappa,
        rate_m: p.alpha,
    })
}

pub fn fig2_default_paths(kappa: f64, scale: Scale) -> u64 {
    match scale {
        Scale::Desk if kappa == 0.075 => 16,
        Scale::Desk => 8,
        Scale::Full => 4,
    }
}

pub fn fig2_panel(kappa: f64, scale: Scale, seed: u64, n_paths: u64) -> Result<Panel> {
    let plan = fig2_plan(kappa, scale, seed, n_paths)?;
    let mut panel = run_plan(&plan)?;
    overlay_delta(&mut panel);
    let predicted = predict_modality(&panel.params, Regime::SlowTrend)?;
    let hopf = classify_deterministic_phase(&panel.params);
    let got = panel.delta_modes.mode_count();
    let want = predicted.mode_count();
    panel.checks.push(Check::new(
        format!("fig2.modes_kappa_{kappa}"),
        got == want,
        got as f64,
        want as f64,
        format!("{got} empirical mode(s), threshold criterion predicts {want}, Hopf phase {}", hopf.phase),
    ));
    Ok(panel)
}

// ---------------------------------------------------------------- figure 3

pub fn fig3_params(kappa: f64, beta: f64) -> Result<ModelParams<f64>> {
    ModelParams::new(kappa, beta, 1.0, 500.0, 0.8, 0.1)
}

pub fn fig3_plan(kappa: f64, beta: f64, scale: Scale, seed: u64, n_paths: u64) -> Result<PanelPlan> {
    let p = fig3_params(kappa, beta)?;
    let m = variance_x(&p)?;
    let t = if scale == Scale::Full { 1e5 } else { 1e4 };
    let mut spec = SimSpec::new(p, t);
    spec.dt = 1e-3;
    spec.subsample_stride = stride_for(0.01, spec.dt);
    spec.seed = seed;
    spec.n_paths = n_paths;
    spec.antithetic = true;
    spec.delta_range = symmetric(8.0 * m.x_sq_exact.sqrt());
    spec.m_range = default_ranges(&p).1;
    Ok(PanelPlan {
        label: format!("kappa={kappa},beta={beta}"),
        regime: Regime::FastTrendWeak,
        spec,
        rate_delta: kappa,
        rate_m: p.alpha,
    })
}

pub fn fig3_default_paths(scale: Scale) -> u64 {
    match scale {
        Scale::Desk => 16,
        Scale::Full => 4,
    }
}

pub fn fig3_panel(kappa: f64, beta: f64, scale: Scale, seed: u64, n_paths: u64) -> Result<Panel> {
    let plan = fig3_plan(kappa, beta, scale, seed, n_paths)?;
    let mut panel = run_plan(&plan)?;
    overlay_delta(&mut panel);
    let exact = variance_x(&panel.params)?.x_sq_exact;
    let rel = ((panel.delta_moments.var - exact) / exact).abs();
    let tol = DENSITY_TOL;
    let tag = format!("kappa_{kappa}_beta_{beta}");
    panel.checks.push(Check::new(
        format!("fig3.var_{tag}"),
        rel < tol,
        rel,
        tol,
        format!("Var[delta] = {:.5}, exact <x^2> = {exact:.5}, relative error {rel:.4}", panel.delta_moments.var),
    ));
    let l1 = panel.l1_delta.unwrap_or(f64::INFINITY);
    panel.checks.push(Check::new(
        format!("fig3.l1_{tag}"),
        l1 < tol,
        l1,
        tol,
        format!("L1(empirical, fast-trend Gaussian) = {l1:.4}"),
    ));
    Ok(panel)
}

// ---------------------------------------------------------------- figure 4

pub fn fig4_params(beta: f64) -> Result<ModelParams<f64>> {
    ModelParams::new(0.05, beta, 1.0, 50.0, 0.7, 0.2)
}

/// `T = 1e4` at desk scale and the caption `1e5` at full scale.
pub fn fig4_plan(beta: f64, scale: Scale, seed: u64, n_paths: u64) -> Result<PanelPlan> {
    let p = fig4_params(beta)?;
    let t = if scale == Scale::Full { 1e5 } else { 1e4 };
    let mut spec = SimSpec::new(p, t);
    spec.dt = 1e-3;
    spec.subsample_stride = stride_for(0.1, spec.dt);
    spec.seed = seed;
    spec.n_paths = n_paths;
    spec.antithetic = true;
    // the mispricing spread ranges from a few units to ~beta/kappa; fine bins cover both
    spec.n_bins = 2000;
    let crossing = crossing_time_for_theta(p.theta()?, p.alpha);
    Ok(PanelPlan {
        label: format!("beta={beta}"),
        regime: Regime::StrongCoupling,
        spec,
        rate_delta: p.kappa,
        rate_m: 1.0 / crossing,
    })
}

pub fn fig4_default_paths(_scale: Scale) -> u64 {
    8
}

/// Expected `(M, delta)` mode counts of a Figure 4 panel.
pub fn fig4_expected_modes(beta: f64) -> (usize, usize) {
    if beta < 10.0 {
        (2, 1)
    } else {
        (2, 2)
    }
}

/// Simulated time needed before mode counts of the trend are meaningful: `10 T_x`.
pub fn fig4_required_time(beta: f64) -> Result<f64> {
    let p = fig4_params(beta)?;
    Ok(10.0 * crossing_time_for_theta(p.theta()?, p.alpha))
}

pub fn fig4_panel(beta: f64, scale: Scale, seed: u64, n_paths: u64) -> Result<Panel> {
    let plan = fig4_plan(beta, scale, seed, n_paths)?;
    let mut panel = run_plan(&plan)?;
    match AnalyticDensity::trend_marginal(&panel.params) {
        Ok(d) => panel.analytic_m = Some(analytic_on_grid(&d, &panel.m_density.grid)),
        Err(e) => panel.warnings.push(format!("no analytic trend law: {e}")),
    }
    overlay_delta(&mut panel);
    let (want_m, want_d) = fig4_expected_modes(beta);
    let (got_m, got_d) = (panel.m_modes.mode_count(), panel.delta_modes.mode_count());
    let needed = fig4_required_time(beta)?;
    let name = format!("fig4.modes_beta_{beta}");
    let detail = format!("(M, delta) modes = ({got_m}, {got_d}), expected ({want_m}, {want_d})");
    let check = if plan.spec.total_time < 0.5 * needed && scale == Scale::Desk {
        Check::skipped(name, format!("{detail}; needs --full: T = {} < 10 T_x = {needed:.3e}", plan.spec.total_time))
    } else {
        Check::new(name, got_m == want_m && got_d == want_d, (got_m * 10 + got_d) as f64, (want_m * 10 + want_d) as f64, detail)
    };
    panel.checks.push(check);
    Ok(panel)
}

/// Runs every panel of figure `n` with the default path counts.
pub fn reproduce(n: u8, scale: Scale, seed: u64) -> Result<FigureResult> {
    let panels = match n {
        1 => FIG1_GAMMAS
            .iter()
            .map(|&g| fig1_panel(g, scale, seed, fig1_default_paths(g, scale)))
            .collect::<Result<Vec<_>>>()?,
        2 => FIG2_KAPPAS
            .iter()
            .map(|&k| fig2_panel(k, scale, seed, fig2_default_paths(k, scale)))
            .collect::<Result<Vec<_>>>()?,
        3 => FIG3_PANELS
            .iter()
            .map(|&(k, b)| fig3_panel(k, b, scale, seed, fig3_default_paths(scale)))
            .collect::<Result<Vec<_>>>()?,
        4 => FIG4_BETAS
            .iter()
            .map(|&b| fig4_panel(b, scale, seed, fig4_default_paths(scale)))
            .collect::<Result<Vec<_>>>()?,
        _ => return Err(ChiarellaError::InvalidSpec(format!("figure must be 1-4, got {n}"))),
    };
    Ok(FigureResult { figure: n, scale, seed, panels })
}

// ---------------------------------------------------------------- sweeps

/// One swept parameter, either listed or as an inclusive linear range.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub stop: Option<f64>,
    #[serde(default)]
    pub n: Option<usize>,
}

impl Axis {
    pub fn points(&self) -> Result<Vec<f64>> {
        let bad = |m: String| ChiarellaError::InvalidSpec(format!("axis `{}`: {m}", self.name));
        match (&self.values, self.start, self.stop, self.n) {
            (Some(v), None, None, None) if !v.is_empty() => Ok(v.clone()),
            (None, Some(a), Some(b), Some(n)) if n >= 1 => {
                if n == 1 {
                    return Ok(vec![a]);
                }
                Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
            }
            _ => Err(bad("give either a non-empty `values` list or all of `start`, `stop`, `n`".into())),
        }
    }
}

/// Optional simulation attached to every sweep point.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalSweep {
    pub total_time: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub n_paths: Option<u64>,
    /// Time between retained samples; defaults to `1 / kappa`.
    #[serde(default)]
    pub sample_spacing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ModelParams<f64>,
    pub param1: Axis,
    #[serde(default)]
    pub param2: Option<Axis>,
    #[serde(default)]
    pub empirical: Option<EmpiricalSweep>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param1: f64,
    pub param2: Option<f64>,
    pub hopf_phase: String,
    pub eq19_modality: String,
    pub empirical_modes: Option<usize>,
}

fn sweep_point(p: &ModelParams<f64>, emp: Option<&EmpiricalSweep>, seed: u64) -> Result<SweepRow> {
    let hopf = classify_deterministic_phase(p);
    let eq19 = predict_modality(p, Regime::SlowTrend)?;
    let empirical_modes = match emp {
        None => None,
        Some(e) => {
            let mut spec = SimSpec::new(*p, e.total_time);
            if let Some(dt) = e.dt {
                spec.dt = dt;
            }
            spec.subsample_stride = stride_for(e.sample_spacing.unwrap_or(1.0 / p.kappa), spec.dt);
            spec.n_paths = e.n_paths.unwrap_or(4);
            spec.antithetic = true;
            spec.seed = seed;
            spec.delta_range = AnalyticDensity::GaussianCosh { params: *p }.effective_support();
            let plan = PanelPlan { label: String::new(), regime: Regime::SlowTrend, spec, rate_delta: p.kappa, rate_m: p.alpha };
            Some(run_plan(&plan)?.delta_modes.mode_count())
        }
    };
    Ok(SweepRow {
        param1: f64::NAN,
        param2: None,
        hopf_phase: hopf.phase.to_string(),
        eq19_modality: eq19.modality.to_string(),
        empirical_modes,
    })
}

/// Evaluates the analytic (and optionally simulated) verdicts on the grid.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let xs = spec.param1.points()?;
    let ys: Vec<Option<f64>> = match &spec.param2 {
        Some(a) => a.points()?.into_iter().map(Some).collect(),
        None => vec![None],
    };
    let seed = spec.seed.unwrap_or(0);
    let mut rows = Vec::with_capacity(xs.len() * ys.len());
    for &x in &xs {
        for &y in &ys {
            let mut p = spec.base.with(&spec.param1.name, x)?;
            if let (Some(a), Some(y)) = (&spec.param2, y) {
                p = p.with(&a.name, y)?;
            }
            let mut row = sweep_point(&p, spec.empirical.as_ref(), seed)?;
            row.param1 = x;
            row.param2 = y;
            rows.push(row);
        }
    }
    Ok(rows)
}

/// `param1,param2,hopf_phase,eq19_modality,empirical_modes` rows.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("param1,param2,hopf_phase,eq19_modality,empirical_modes\n");
    for r in rows {
        let p2 = r.param2.map(|v| v.to_string()).unwrap_or_default();
        let e = r.empirical_modes.map(|v| v.to_string()).unwrap_or_default();
        s.push_str(&format!("{},{p2},{},{},{e}\n", r.param1, r.hopf_phase, r.eq19_modality));
    }
    s
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Relative error injected into the stationary mispricing variance
    /// before the Fokker-Planck check; zero for a normal run.
    pub covariance_perturbation: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 2024, covariance_perturbation: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// Random parameter set with a stationary linearised law.
pub fn random_stable_params<R: Rng>(rng: &mut R) -> ModelParams<f64> {
    loop {
        let kappa = 10f64.powf(rng.gen_range(-2.0..1.0));
        let alpha = 10f64.powf(rng.gen_range(-2.0..2.0));
        let beta = rng.gen_range(0.0..3.0);
        let gamma = 10f64.powf(rng.gen_range(-2.0..1.0));
        let sn = rng.gen_range(0.05..1.5);
        let sv = rng.gen_range(0.0..1.0);
        if let Ok(p) = ModelParams::new(kappa, beta, gamma, alpha, sn, sv) {
            if lyapunov_covariance(&p).is_ok() {
                return p;
            }
        }
    }
}

/// Worst normalised residual over `n` random stable sets.
pub fn fpe_residual_sweep(n: usize, seed: u64, perturbation: f64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..n {
        let p = random_stable_params(&mut rng);
        let mut c = lyapunov_covariance(&p)?;
        c.var_delta *= 1.0 + perturbation;
        worst = worst.max(fpe_residuals(&p, &c)?.max_normalized());
    }
    Ok(worst)
}

/// Direct quadrature of `A(y) = int exp(-kappa x^2/sigma^2) cosh^n(gamma(alpha x + y)) dx`.
pub fn normalization_a_oracle(y: f64, p: &ModelParams<f64>, n: i32) -> Result<f64> {
    let s2 = p.sigma_sq();
    let tilt = n as f64 * p.alpha * p.gamma * s2 / p.kappa;
    let l = 12.0 * (s2 / (2.0 * p.kappa)).sqrt() + tilt;
    let f = |x: f64| (-p.kappa * x * x / s2).exp() * (p.gamma * (p.alpha * x + y)).cosh().powi(n);
    Ok(integrate(f, -l, l, 1e-12, 0.0)?.value)
}

/// Worst relative error of the closed form against quadrature, 50 draws per `n`.
pub fn normalization_sweep(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for n in 1..=4u32 {
        for _ in 0..50 {
            let kappa = rng.gen_range(0.2..3.0);
            let alpha = rng.gen_range(0.05..1.0);
            let gamma = rng.gen_range(0.5..4.0);
            let (sn, sv) = (rng.gen_range(0.1..0.5), rng.gen_range(0.0..0.3));
            let beta = n as f64 * alpha * gamma * (sn * sn + sv * sv) / 2.0;
            let p = ModelParams::new(kappa, beta, gamma, alpha, sn, sv)?;
            let y = rng.gen_range(-1.0..1.0);
            let closed = normalization_a(y, &p)?;
            let oracle = normalization_a_oracle(y, &p, n as i32)?;
            worst = worst.max(((closed - oracle) / oracle).abs());
        }
    }
    Ok(worst)
}

/// Error ratios of the first-order Gamma-ratio expansion when `eps` halves.
pub fn gamma_ratio_orders() -> [f64; 2] {
    let err = |e: f64| {
        let (exact, first) = gamma_ratio_expansion(e);
        (exact - first).abs()
    };
    let e = [1e-2, 5e-3, 2.5e-3].map(err);
    [e[0] / e[1], e[1] / e[2]]
}

/// Lags `0, 1/alpha, 2/alpha, ln2/alpha` used for the telegraph check.
pub fn telegraph_lags(alpha: f64) -> [f64; 4] {
    [0.0, 1.0 / alpha, 2.0 / alpha, std::f64::consts::LN_2 / alpha]
}

pub const NOVIKOV_WS: [f64; 3] = [50.0, 100.0, 500.0];

/// Runs the oracle suite.
pub fn verify(opts: VerifyOptions) -> Result<VerifyReport> {
    let mut checks = Vec::new();

    let worst = fpe_residual_sweep(1000, opts.seed, opts.covariance_perturbation)?;
    checks.push(Check::new(
        "fpe_residuals",
        worst < 1e-9,
        worst,
        1e-9,
        format!("worst normalised Fokker-Planck coefficient over 1000 stable sets = {worst:.2e}"),
    ));

    let worst = normalization_sweep(opts.seed)?;
    checks.push(Check::new(
        "normalization_closed_form",
        worst < 1e-8,
        worst,
        1e-8,
        format!("worst relative error of A(y) vs quadrature, n = 1..4 x 50 = {worst:.2e}"),
    ));

    let r = gamma_ratio_orders();
    let ok = r.iter().all(|v| (v - 4.0).abs() < 0.3);
    checks.push(Check::new(
        "gamma_ratio_order",
        ok,
        r[1],
        4.0,
        format!("error ratios on halving eps = {:.3}, {:.3} (want 4 +- 0.3)", r[0], r[1]),
    ));

    let tc = theta_critical();
    let d = (tc - THETA_C_REFERENCE).abs();
    checks.push(Check::new("theta_c_root", d < 1e-5, tc, THETA_C_REFERENCE, format!("theta_c = {tc:.9}")));

    let alpha = 500.0;
    let est = telegraph_autocov_mc(alpha, &telegraph_lags(alpha), 200_000, opts.seed);
    let worst_z = est.iter().map(|e| e.z_score().abs()).fold(0.0, f64::max);
    let third = (est[3].exact - 1.0 / 3.0).abs();
    checks.push(Check::new(
        "telegraph_autocovariance",
        worst_z < SE_TOLERANCE && third < 1e-12,
        worst_z,
        SE_TOLERANCE,
        format!(
            "worst |z| = {worst_z:.2} over lags {{0, 1, 2, ln2}}/alpha; exact at ln2/alpha = {:.15}",
            est[3].exact
        ),
    ));

    let mut ok = true;
    let mut parts = Vec::new();
    for w in NOVIKOV_WS {
        let n = novikov_for_w(w)?;
        ok &= n.rel_error() < 2.0 / w;
        parts.push(format!("w={w}: {:.2e} < {:.2e}", n.rel_error(), 2.0 / w));
    }
    checks.push(Check::new("novikov_leading_term", ok, 0.0, 0.0, parts.join("; ")));

    let passed = checks.iter().filter(|c| c.passed()).count();
    let failed = checks.len() - passed;
    Ok(VerifyReport { checks, passed, failed })
}
