//! Acceptance suite: one `PASS`/`FAIL` line per criterion, non-zero exit on any failure.
//!
//! Runs without the libtest harness so the lines appear in order and unbuffered.

use std::time::Instant;

use chiarella::experiments::{
    self, fig1_panel, fig2_panel, fig3_panel, fig4_panel, Check, Scale, Status, FIG3_PANELS, NOVIKOV_WS,
};
use chiarella::fast_trend::{novikov_for_w, telegraph_autocov_mc};
use chiarella::strong_coupling::theta_critical;

const SEED: u64 = 20240917;

struct Outcome {
    passed: bool,
    summary: String,
}

fn from_checks(checks: &[&Check]) -> Outcome {
    let passed = !checks.is_empty() && checks.iter().all(|c| c.status == Status::Pass);
    let summary = checks.iter().map(|c| c.detail.clone()).collect::<Vec<_>>().join(" | ");
    Outcome { passed, summary }
}

fn err(e: impl std::fmt::Display) -> Outcome {
    Outcome { passed: false, summary: format!("error: {e}") }
}

fn c1() -> Outcome {
    let t = Instant::now();
    match experiments::fpe_residual_sweep(1000, SEED, 0.0) {
        Ok(w) => {
            let secs = t.elapsed().as_secs_f64();
            Outcome {
                passed: w < 1e-9 && secs < 1.0,
                summary: format!("worst normalised residual {w:.2e} < 1e-9 over 1000 sets in {secs:.3}s"),
            }
        }
        Err(e) => err(e),
    }
}

fn c2() -> Outcome {
    match fig1_panel(1e-4, Scale::Desk, SEED, experiments::fig1_default_paths(1e-4, Scale::Desk)) {
        Ok(p) => from_checks(&p.checks.iter().collect::<Vec<_>>()),
        Err(e) => err(e),
    }
}

fn c3() -> Outcome {
    let mut checks = Vec::new();
    for k in [0.2, 0.02, 0.075] {
        match fig2_panel(k, Scale::Desk, SEED, experiments::fig2_default_paths(k, Scale::Desk)) {
            Ok(p) => checks.extend(p.checks),
            Err(e) => return err(e),
        }
    }
    from_checks(&checks.iter().collect::<Vec<_>>())
}

fn c4() -> Outcome {
    match experiments::normalization_sweep(SEED) {
        Ok(w) => Outcome { passed: w < 1e-8, summary: format!("worst relative error {w:.2e} < 1e-8 (n = 1..4, 50 draws each)") },
        Err(e) => err(e),
    }
}

fn c5() -> Outcome {
    let mut checks = Vec::new();
    for (k, b) in FIG3_PANELS {
        match fig3_panel(k, b, Scale::Desk, SEED, experiments::fig3_default_paths(Scale::Desk)) {
            Ok(p) => checks.extend(p.checks),
            Err(e) => return err(e),
        }
    }
    from_checks(&checks.iter().collect::<Vec<_>>())
}

fn c6() -> Outcome {
    let alpha = 500.0;
    let est = telegraph_autocov_mc(alpha, &experiments::telegraph_lags(alpha), 200_000, SEED);
    let worst = est.iter().map(|e| e.z_score().abs()).fold(0.0, f64::max);
    let third = est[3].exact;
    Outcome {
        passed: worst < 3.0 && (third - 1.0 / 3.0).abs() < 1e-12,
        summary: format!(
            "estimates {:?}, worst |z| = {worst:.2} < 3; exact at ln2/alpha = {third:.12}",
            est.iter().map(|e| format!("{:.4}", e.estimate)).collect::<Vec<_>>()
        ),
    }
}

fn c7() -> Outcome {
    let t = Instant::now();
    let tc = theta_critical();
    let secs = t.elapsed().as_secs_f64();
    Outcome {
        passed: (tc - experiments::THETA_C_REFERENCE).abs() < 1e-5 && secs < 1e-3,
        summary: format!("theta_c = {tc:.9} (reference 0.797999 +- 1e-5) in {:.1} us", secs * 1e6),
    }
}

fn c8() -> Outcome {
    let r = experiments::gamma_ratio_orders();
    Outcome {
        passed: r.iter().all(|v| (v - 4.0).abs() < 0.3),
        summary: format!("error ratios {:.4}, {:.4} (4.0 +- 0.3)", r[0], r[1]),
    }
}

fn c9() -> Outcome {
    let top = match fig4_panel(5.0, Scale::Desk, SEED, experiments::fig4_default_paths(Scale::Desk)) {
        Ok(p) => p,
        Err(e) => return err(e),
    };
    let bottom = match fig4_panel(18.0, Scale::Full, SEED, experiments::fig4_default_paths(Scale::Full)) {
        Ok(p) => p,
        Err(e) => return err(e),
    };
    from_checks(&top.checks.iter().chain(bottom.checks.iter()).collect::<Vec<_>>())
}

fn c10() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for w in NOVIKOV_WS {
        match novikov_for_w(w) {
            Ok(n) => {
                ok &= n.rel_error() < 2.0 / w;
                parts.push(format!("w={w}: {:.2e} < {:.2e}", n.rel_error(), 2.0 / w));
            }
            Err(e) => return err(e),
        }
    }
    Outcome { passed: ok, summary: parts.join(", ") }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 fpe-residuals", c1),
        ("2 linear-regime-fig1", c2),
        ("3 slow-trend-modality-fig2", c3),
        ("4 normalization-oracle", c4),
        ("5 fast-trend-variance-fig3", c5),
        ("6 telegraph-autocovariance", c6),
        ("7 theta-c-root", c7),
        ("8 gamma-ratio-order", c8),
        ("9 strong-coupling-fig4", c9),
        ("10 novikov-expectation", c10),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let o = f();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("{tag} criterion {name} [{:.1}s]: {}", t.elapsed().as_secs_f64(), o.summary);
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
