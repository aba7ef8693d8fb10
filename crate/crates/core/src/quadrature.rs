//! Adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! Used both as the fallback for non-integer cosh exponents and as the
//! independent oracle that the closed forms are tested against.

use crate::error::{ChiarellaError, Result};
use crate::scalar::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 50;
const MAX_EVALS: usize = 2_000_000;

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
}

fn kronrod<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let c = half * (a + b);
    let h = half * (b - a);
    let fc = f(c);
    let mut k = T::lit(WGK[7]) * fc;
    let mut g = T::lit(WG[3]) * fc;
    for i in 0..7 {
        let dx = h * T::lit(XGK[i]);
        let s = f(c - dx) + f(c + dx);
        k = k + T::lit(WGK[i]) * s;
        if i % 2 == 1 {
            g = g + T::lit(WG[i / 2]) * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrates `f` over `[a, b]` to `rel_tol` relative accuracy (absolute floor `abs_tol`).
pub fn integrate<T: Scalar, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    rel_tol: T,
    abs_tol: T,
) -> Result<QuadResult<T>> {
    if a == b {
        return Ok(QuadResult { value: T::zero(), error: T::zero() });
    }
    let mut evals = 0usize;
    // Global adaptive bisection driven by the whole-integral error estimate.
    let (v0, e0) = kronrod(&f, a, b);
    evals += 15;
    let mut segs: Vec<(T, T, T, T, u32)> = vec![(a, b, v0, e0, 0)];
    loop {
        let total: T = segs.iter().fold(T::zero(), |s, seg| s + seg.2);
        let err: T = segs.iter().fold(T::zero(), |s, seg| s + seg.3);
        let target = (rel_tol * total.abs()).max(abs_tol);
        if err <= target {
            return Ok(QuadResult { value: total, error: err });
        }
        // split the worst segment
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty");
        let (sa, sb, _, _, depth) = segs.swap_remove(idx);
        if depth >= MAX_DEPTH || evals > MAX_EVALS || !total.is_finite() {
            return Err(ChiarellaError::QuadratureFailure {
                tol: rel_tol.as_f64(),
                estimate: total.as_f64(),
                error: err.as_f64(),
            });
        }
        let mid = T::lit(0.5) * (sa + sb);
        let (vl, el) = kronrod(&f, sa, mid);
        let (vr, er) = kronrod(&f, mid, sb);
        evals += 30;
        segs.push((sa, mid, vl, el, depth + 1));
        segs.push((mid, sb, vr, er, depth + 1));
    }
}

/// Integrates over the real line for integrands concentrated around `center`
/// with characteristic width `scale`.
///
/// The core interval `center ± 10 scale` is widened geometrically until the
/// next tail slab contributes less than `1e-3 * rel_tol` of the running total.
pub fn integrate_real_line<T: Scalar, F: Fn(T) -> T>(
    f: F,
    center: T,
    scale: T,
    rel_tol: T,
) -> Result<QuadResult<T>> {
    let ten = T::lit(10.0);
    let mut half = ten * scale;
    let core = integrate(&f, center - half, center + half, rel_tol, T::zero())?;
    let mut value = core.value;
    let mut error = core.error;
    for _ in 0..60 {
        let next = half * T::lit(2.0);
        let left = integrate(&f, center - next, center - half, rel_tol, T::zero())?;
        let right = integrate(&f, center + half, center + next, rel_tol, T::zero())?;
        let slab = left.value + right.value;
        value = value + slab;
        error = error + left.error + right.error;
        half = next;
        if slab.abs() <= T::lit(1e-3) * rel_tol * value.abs() {
            return Ok(QuadResult { value, error });
        }
    }
    Err(ChiarellaError::QuadratureFailure {
        tol: rel_tol.as_f64(),
        estimate: value.as_f64(),
        error: error.as_f64(),
    })
}

/// Trapezoid rule on a (possibly non-uniform) grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}
