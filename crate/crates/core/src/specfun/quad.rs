//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
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
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadControl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadControl {
    fn default() -> Self {
        QuadControl {
            abs_tol: 1e-300,
            rel_tol: 1e-11,
            max_subdivisions: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = (fc * WGK[7]).abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

/// ∫ₐᵇ f(x) dx on a finite interval.
///
/// Returns an accuracy error carrying the best estimate when the subdivision
/// cap is reached or the integrand produces non-finite values.
pub fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, ctrl: QuadControl) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain(format!("quad needs finite limits, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let (v, e) = kronrod(&f, a, b);
    let mut evaluations = 15;
    let mut total = v;
    let mut total_err = e;
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value: v,
        error: e,
    });
    let mut splits = 0;
    loop {
        if !total.is_finite() {
            return Err(Error::Accuracy {
                what: "quadrature hit a non-finite integrand value".into(),
                estimate: total,
                error_bound: f64::INFINITY,
            });
        }
        if total_err <= ctrl.abs_tol.max(ctrl.rel_tol * total.abs()) {
            break;
        }
        if splits >= ctrl.max_subdivisions {
            return Err(Error::Accuracy {
                what: format!("quadrature on [{a}, {b}] reached {splits} subdivisions"),
                estimate: total,
                error_bound: total_err,
            });
        }
        let seg = heap.pop().expect("heap never empties");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval collapsed to adjacent floats; nothing more to gain.
            heap.push(seg);
            break;
        }
        let (v1, e1) = kronrod(&f, seg.a, mid);
        let (v2, e2) = kronrod(&f, mid, seg.b);
        evaluations += 30;
        splits += 1;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
        // Re-sum now and then so cancellation in the running totals cannot drift.
        if splits % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
    let value = heap.iter().map(|s| s.value).sum();
    let abs_error = heap.iter().map(|s| s.error).sum();
    Ok(QuadResult {
        value,
        abs_error,
        evaluations,
    })
}

/// ∫ₐ^∞ f(x) dx through the substitution x = a + t/(1 − t), t ∈ (0, 1).
pub fn quad_semi_infinite<F: Fn(f64) -> f64>(f: F, a: f64, ctrl: QuadControl) -> Result<QuadResult> {
    if !a.is_finite() {
        return Err(Error::domain(format!("lower limit must be finite, got {a}")));
    }
    let g = |t: f64| {
        let one_m = 1.0 - t;
        let x = a + t / one_m;
        if x.is_infinite() {
            return 0.0;
        }
        let v = f(x) / (one_m * one_m);
        if v.is_nan() {
            0.0
        } else {
            v
        }
    };
    quad(g, 0.0, 1.0, ctrl)
}

/// ln ∫ exp(g(t)) dt over (lo, ∞), where `lo` may be −∞.
///
/// `g` is the log of the integrand. The range is split at `split`, each side
/// is mapped to a half-line, and the integrand is rescaled by its largest
/// observed value so that neither tail overflows.
pub fn ln_integral_exp<G: Fn(f64) -> f64>(g: G, lo: f64, split: f64, ctrl: QuadControl) -> Result<f64> {
    let split = if lo.is_finite() { split.max(lo) } else { split };
    let mut scale = g(split);
    for d in [-32.0, -16.0, -8.0, -4.0, -2.0, -1.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        let t = split + d;
        if t > lo {
            let v = g(t);
            if v > scale {
                scale = v;
            }
        }
    }
    if scale == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    if !scale.is_finite() {
        return Err(Error::Accuracy {
            what: "log-integrand is not finite near the split point".into(),
            estimate: scale,
            error_bound: f64::INFINITY,
        });
    }
    for _ in 0..4 {
        let peak = std::cell::Cell::new(scale);
        let h = |t: f64| {
            let v = g(t);
            if v > peak.get() {
                peak.set(v);
            }
            (v - scale).exp()
        };
        let right = quad_semi_infinite(|x| h(split + x), 0.0, ctrl);
        let left = if lo.is_finite() {
            quad(h, lo, split, ctrl)
        } else {
            quad_semi_infinite(|x| h(split - x), 0.0, ctrl)
        };
        if peak.get() > scale + 600.0 {
            scale = peak.get();
            continue;
        }
        let (r, l) = (right?, left?);
        return Ok(scale + (r.value + l.value).ln());
    }
    Err(Error::Accuracy {
        what: "log-integrand kept growing while rescaling".into(),
        estimate: f64::INFINITY,
        error_bound: f64::INFINITY,
    })
}
