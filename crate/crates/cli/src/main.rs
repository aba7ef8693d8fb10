use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use chiarella::density::{AnalyticDensity, Density1D, DensityMetadata};
use chiarella::empirics::{count_modes, moments_with_errors, smooth, DEFAULT_PROMINENCE};
use chiarella::experiments::{self, FigureResult, Scale, SweepSpec, VerifyOptions};
use chiarella::io::{self, Provenance};
use chiarella::sde::{SimConfig, GENERATOR};
use chiarella::{classify_deterministic_phase, predict_modality, ChiarellaError, Params, Regime};

const ANALYTIC_GENERATOR: &str = "none (deterministic)";

#[derive(Parser, Debug)]
#[command(name = "chiarella", version, about = "Stationary distributions of the Chiarella mispricing/trend model")]
struct Cli {
    /// Worker threads for parallel paths (falls back to CHIARELLA_THREADS).
    #[arg(long, global = true, env = "CHIARELLA_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate paths and write histograms plus a statistics JSON.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate an analytic stationary density on a grid.
    Density {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Analytic modality forecast and Hopf phase.
    Modality {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Phase-diagram sweep over one or two parameters.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the oracle verification suite.
    Verify {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Regenerate the data behind figure N (1-4).
    ReproduceFig {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        n: u8,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Caption-scale run instead of the 1/100 desk scale.
        #[arg(long)]
        full: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Core(ChiarellaError),
    Checks(String),
}

impl Failure {
    fn code(&self) -> u8 {
        use ChiarellaError::*;
        match self {
            Failure::Config(_) => 2,
            Failure::Checks(_) => 1,
            Failure::Core(e) => match e {
                NoGaussianDensity { .. }
                | NoStationaryDistribution { .. }
                | NoBarrier { .. }
                | NotNormalizable(_)
                | DivisionByZero(_)
                | SingularCovariance { .. } => 4,
                QuadratureFailure { .. } | BracketFailure(_) | NonFinite { .. } => 3,
                _ => 2,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Config(m) => format!("config error: {m}"),
            Failure::Core(e) => format!("{e:?}: {e}"),
            Failure::Checks(m) => m.clone(),
        }
    }
}

impl From<ChiarellaError> for Failure {
    fn from(e: ChiarellaError) -> Self {
        Failure::Core(e)
    }
}

type Outcome<T> = Result<T, Failure>;

fn read_config(path: &Path) -> Outcome<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(bytes: &[u8], path: &Path) -> Outcome<T> {
    serde_json::from_slice(bytes).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn cmd_simulate(config: &Path, out: &Path, seed: Option<u64>) -> Outcome<()> {
    let bytes = read_config(config)?;
    let cfg: SimConfig<f64> = parse(&bytes, config)?;
    let mut spec = cfg.into_spec()?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let stats = chiarella::simulate(&spec)?;
    let prov = Provenance::new(&bytes, spec.seed, GENERATOR);
    let p = &spec.params;
    let rate_delta = p.kappa.min(p.alpha);
    let md = moments_with_errors(&stats.raw_moments_delta, stats.sample_spacing, rate_delta)?;
    let mm = moments_with_errors(&stats.raw_moments_m, stats.sample_spacing, p.alpha)?;
    let modes = |h, n_eff| smooth(h, Some(n_eff)).ok().map(|d| count_modes(&d, DEFAULT_PROMINENCE));
    let report = json!({
        "provenance": prov,
        "spec": spec,
        "n_retained": stats.n_retained,
        "sample_spacing": stats.sample_spacing,
        "decorrelation_rates": { "delta": rate_delta, "m": p.alpha },
        "moments_delta": md,
        "moments_m": mm,
        "modes_delta": modes(&stats.hist_delta, md.n_eff),
        "modes_m": modes(&stats.hist_m, mm.n_eff),
        "out_of_range_fraction": {
            "delta": stats.hist_delta.out_of_range_fraction(),
            "m": stats.hist_m.out_of_range_fraction(),
        },
    });
    io::write_text(&out.join("delta_hist.csv"), &io::histogram_csv(&stats.hist_delta, &prov))?;
    io::write_text(&out.join("m_hist.csv"), &io::histogram_csv(&stats.hist_m, &prov))?;
    io::write_json(&out.join("stats.json"), &report)?;
    println!("wrote {} samples to {}", stats.n_retained, out.display());
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    lo: Option<f64>,
    hi: Option<f64>,
    #[serde(default = "default_grid_n")]
    n: usize,
}

fn default_grid_n() -> usize {
    401
}

#[derive(Deserialize, Clone, Copy, Default, PartialEq)]
#[serde(rename_all = "lowercase")]
enum Variable {
    #[default]
    Delta,
    M,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityConfig {
    params: Params,
    regime: String,
    #[serde(default)]
    variable: Variable,
    grid: Option<GridSpec>,
}

fn cmd_density(config: &Path, out: &Path) -> Outcome<()> {
    let bytes = read_config(config)?;
    let cfg: DensityConfig = parse(&bytes, config)?;
    let regime: Regime = cfg.regime.parse()?;
    let (density, warnings) = match cfg.variable {
        Variable::Delta => {
            let b = AnalyticDensity::for_regime(&cfg.params, regime)?;
            (b.density, b.warnings)
        }
        Variable::M if regime == Regime::StrongCoupling => (AnalyticDensity::trend_marginal(&cfg.params)?, Vec::new()),
        Variable::M => {
            return Err(Failure::Config(format!("variable `m` is only available for regime strong-coupling, got {regime}")))
        }
    };
    warn_all(&warnings);
    let (slo, shi) = density.effective_support();
    let g = cfg.grid.unwrap_or(GridSpec { lo: None, hi: None, n: default_grid_n() });
    let rows = density.grid(g.lo.unwrap_or(slo), g.hi.unwrap_or(shi), g.n)?;
    let prov = Provenance::new(&bytes, 0, ANALYTIC_GENERATOR);
    let meta = DensityMetadata {
        regime: regime.to_string(),
        law: density.label().to_string(),
        equation: density.equation().to_string(),
        warnings,
        params: cfg.params,
    };
    io::write_text(&out.join("density.csv"), &io::grid_csv(&rows, &prov))?;
    io::write_json(&out.join("density.json"), &json!({ "provenance": prov, "metadata": meta }))?;
    println!("wrote {} grid points ({}) to {}", rows.len(), density.label(), out.display());
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModalityConfig {
    params: Params,
    regime: String,
}

fn cmd_modality(config: &Path, out: Option<&Path>) -> Outcome<()> {
    let bytes = read_config(config)?;
    let cfg: ModalityConfig = parse(&bytes, config)?;
    let regime: Regime = cfg.regime.parse()?;
    let verdict = predict_modality(&cfg.params, regime)?;
    let phase = classify_deterministic_phase(&cfg.params);
    let report = json!({
        "provenance": Provenance::new(&bytes, 0, ANALYTIC_GENERATOR),
        "regime": regime.to_string(),
        "hopf_phase": phase.phase.to_string(),
        "hopf_margin": phase.margin,
        "verdict": verdict,
    });
    let text = serde_json::to_string_pretty(&report).expect("verdict serialises");
    println!("{text}");
    if let Some(dir) = out {
        io::write_json(&dir.join("modality.json"), &report)?;
    }
    Ok(())
}

fn cmd_sweep(config: &Path, out: &Path, seed: Option<u64>) -> Outcome<()> {
    let bytes = read_config(config)?;
    let mut spec: SweepSpec = parse(&bytes, config)?;
    if seed.is_some() {
        spec.seed = seed;
    }
    let rows = experiments::sweep(&spec)?;
    let generator = if spec.empirical.is_some() { GENERATOR } else { ANALYTIC_GENERATOR };
    let prov = Provenance::new(&bytes, spec.seed.unwrap_or(0), generator);
    let csv = format!("{}\n{}", prov.csv_comment(), experiments::sweep_csv(&rows));
    io::write_text(&out.join("sweep.csv"), &csv)?;
    println!("wrote {} sweep points to {}", rows.len(), out.display());
    Ok(())
}

fn cmd_verify(out: Option<&Path>, seed: Option<u64>) -> Outcome<()> {
    let mut opts = VerifyOptions::default();
    if let Some(s) = seed {
        opts.seed = s;
    }
    let report = experiments::verify(opts)?;
    for c in &report.checks {
        println!("{}", c.line());
    }
    println!("{} passed, {} failed", report.passed, report.failed);
    if let Some(dir) = out {
        let key = format!("verify seed={}", opts.seed);
        let prov = Provenance::new(key.as_bytes(), opts.seed, "ChaCha8Rng (rand_chacha 0.3)");
        io::write_json(&dir.join("verify.json"), &json!({ "provenance": prov, "report": report }))?;
    }
    if report.all_passed() {
        Ok(())
    } else {
        let names: Vec<&str> = report.checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
        Err(Failure::Checks(format!("verification failed: {}", names.join(", "))))
    }
}

#[derive(Serialize)]
struct PanelVerdict<'a> {
    file_prefix: String,
    #[serde(flatten)]
    panel: &'a experiments::Panel,
}

fn write_figure(fig: &FigureResult, out: &Path, prov: &Provenance) -> Outcome<()> {
    let mut panels = Vec::new();
    for (i, p) in fig.panels.iter().enumerate() {
        let prefix = format!("fig{}_panel{}", fig.figure, i + 1);
        let w = |name: &str, text: String| io::write_text(&out.join(format!("{prefix}_{name}.csv")), &text);
        w("delta_hist", io::histogram_csv(&p.stats.hist_delta, prov))?;
        w("m_hist", io::histogram_csv(&p.stats.hist_m, prov))?;
        w("delta_smoothed", io::empirical_csv(&p.delta_density, prov))?;
        w("m_smoothed", io::empirical_csv(&p.m_density, prov))?;
        if let Some(rows) = &p.analytic_delta {
            w("delta_analytic", io::grid_csv(rows, prov))?;
        }
        if let Some(rows) = &p.analytic_m {
            w("m_analytic", io::grid_csv(rows, prov))?;
        }
        panels.push(PanelVerdict { file_prefix: prefix, panel: p });
    }
    let verdict = json!({
        "provenance": prov,
        "figure": fig.figure,
        "scale": fig.scale,
        "seed": fig.seed,
        "passed": fig.passed(),
        "checks": fig.checks().collect::<Vec<_>>(),
        "panels": panels,
    });
    io::write_json(&out.join(format!("fig{}_verdict.json", fig.figure)), &verdict)?;
    Ok(())
}

fn cmd_reproduce(n: u8, out: &Path, seed: Option<u64>, full: bool) -> Outcome<()> {
    let scale = if full { Scale::Full } else { Scale::Desk };
    let seed = seed.unwrap_or(0);
    let fig = experiments::reproduce(n, scale, seed)?;
    let key = format!("reproduce-fig n={n} scale={scale:?} seed={seed}");
    let prov = Provenance::new(key.as_bytes(), seed, GENERATOR);
    write_figure(&fig, out, &prov)?;
    for p in &fig.panels {
        warn_all(&p.warnings);
    }
    for c in fig.checks() {
        println!("{}", c.line());
    }
    if fig.passed() {
        Ok(())
    } else {
        Err(Failure::Checks(format!("figure {n}: at least one check failed")))
    }
}

fn run(cli: Cli) -> Outcome<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("cannot start {n} threads: {e}")))?;
    }
    match cli.command {
        Command::Simulate { config, out, seed } => cmd_simulate(&config, &out, seed),
        Command::Density { config, out } => cmd_density(&config, &out),
        Command::Modality { config, out } => cmd_modality(&config, out.as_deref()),
        Command::Sweep { config, out, seed } => cmd_sweep(&config, &out, seed),
        Command::Verify { out, seed } => cmd_verify(out.as_deref(), seed),
        Command::ReproduceFig { n, out, seed, full } => cmd_reproduce(n, &out, seed, full),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
