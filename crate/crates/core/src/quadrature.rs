//! Globally adaptive 15-point Gauss–Kronrod quadrature with nested rules for
//! iterated integrals over variable bounds.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Default cap on integrand evaluations for a single 1-D integral.
pub const DEFAULT_MAX_EVALUATIONS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_bound: f64,
    pub evaluations: usize,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    // largest error first; ties broken by position so the order is total
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// One Kronrod rule on `[a, b]`: the estimate and a QUADPACK-style error.
fn kronrod15<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center)?;
    let mut result_kronrod = f_center * WGK[7];
    let mut result_gauss = f_center * WG[3];
    let mut result_abs = result_kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        result_kronrod += WGK[j] * (f1 + f2);
        result_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            result_gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * result_kronrod;
    let mut result_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        result_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = result_kronrod * half;
    let result_abs = result_abs * half.abs();
    let result_asc = result_asc * half.abs();
    let mut error = ((result_kronrod - result_gauss) * half).abs();
    if result_asc != 0.0 && error != 0.0 {
        error = result_asc * (200.0 * error / result_asc).powf(1.5).min(1.0);
    }
    if result_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * result_abs);
    }
    Ok((value, error))
}

/// Integrates a fallible integrand over `[a, b]`, bisecting the segment with
/// the largest error until the summed error estimate is at most `tol`.
pub fn try_integrate<F>(mut f: F, a: f64, b: f64, tol: f64, max_evaluations: usize) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            abs_error_bound: 0.0,
            evaluations: 0,
        });
    }
    let (value, error) = kronrod15(&mut f, a, b)?;
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total_error = error;
    while total_error > tol {
        if evaluations + 30 > max_evaluations {
            return Err(Error::QuadratureBudget {
                tol,
                estimate: total_error,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // cannot split further in floating point
            return Err(Error::QuadratureBudget {
                tol,
                estimate: total_error,
                evaluations,
            });
        }
        let (v1, e1) = kronrod15(&mut f, worst.a, mid)?;
        let (v2, e2) = kronrod15(&mut f, mid, worst.b)?;
        evaluations += 30;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        total_error = heap.iter().map(|s| s.error).sum();
    }
    // sum in position order so the result does not depend on heap layout
    let mut segments = heap.into_vec();
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(QuadratureResult {
        value: segments.iter().map(|s| s.value).sum(),
        abs_error_bound: total_error,
        evaluations,
    })
}

pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> f64,
{
    try_integrate(|x| Ok(f(x)), a, b, tol, DEFAULT_MAX_EVALUATIONS)
}

/// `∫_a^b ∫_{lo(x)}^{hi(x)} f(x, y) dy dx`.
///
/// The outer rule gets `0.9·tol`; each inner integral gets `tol / (10 |b − a|)`
/// so the propagated inner error is at most `tol / 10`.
pub fn integrate_2d<F, L, H>(f: F, a: f64, b: f64, lo: L, hi: H, tol: f64) -> Result<QuadratureResult>
where
    F: Fn(f64, f64) -> f64,
    L: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let inner_tol = tol / (10.0 * (b - a).abs().max(1.0));
    let mut inner_evaluations = 0;
    let mut inner_error: f64 = 0.0;
    let outer = try_integrate(
        |x| {
            let r = try_integrate(|y| Ok(f(x, y)), lo(x), hi(x), inner_tol, DEFAULT_MAX_EVALUATIONS)?;
            inner_evaluations += r.evaluations;
            inner_error = inner_error.max(r.abs_error_bound);
            Ok(r.value)
        },
        a,
        b,
        0.9 * tol,
        DEFAULT_MAX_EVALUATIONS,
    )?;
    Ok(QuadratureResult {
        value: outer.value,
        abs_error_bound: outer.abs_error_bound + (b - a).abs() * inner_error,
        evaluations: inner_evaluations,
    })
}

/// `∫_a^b ∫_{lo2(x)}^{hi2(x)} ∫_{lo3(x,y)}^{hi3(x,y)} f(x, y, z) dz dy dx`, with
/// the same tolerance split applied level by level.
#[allow(clippy::too_many_arguments)]
pub fn integrate_3d<F, L2, H2, L3, H3>(
    f: F,
    a: f64,
    b: f64,
    lo2: L2,
    hi2: H2,
    lo3: L3,
    hi3: H3,
    tol: f64,
) -> Result<QuadratureResult>
where
    F: Fn(f64, f64, f64) -> f64,
    L2: Fn(f64) -> f64,
    H2: Fn(f64) -> f64,
    L3: Fn(f64, f64) -> f64,
    H3: Fn(f64, f64) -> f64,
{
    let inner_tol = tol / (10.0 * (b - a).abs().max(1.0));
    let mut evaluations = 0;
    let mut inner_error: f64 = 0.0;
    let outer = try_integrate(
        |x| {
            let r = integrate_2d(|y, z| f(x, y, z), lo2(x), hi2(x), |y| lo3(x, y), |y| hi3(x, y), inner_tol)?;
            evaluations += r.evaluations;
            inner_error = inner_error.max(r.abs_error_bound);
            Ok(r.value)
        },
        a,
        b,
        0.9 * tol,
        DEFAULT_MAX_EVALUATIONS,
    )?;
    Ok(QuadratureResult {
        value: outer.value,
        abs_error_bound: outer.abs_error_bound + (b - a).abs() * inner_error,
        evaluations,
    })
}
