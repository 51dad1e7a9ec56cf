//! Special functions used by the intensity and eppf computations.
//!
//! Everything that multiplies gamma functions or powers is available on the
//! log scale; the eppf integrands routinely combine factors that would
//! overflow an `f64` on their own.

mod quad;

pub use quad::{ln_integral_exp, quad, quad_semi_infinite, QuadControl, QuadResult};

use crate::{Error, Result};

pub use statrs::function::gamma::{gamma, ln_gamma};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Truncation rule for the power series in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub max_terms: usize,
    pub rel_tol: f64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            max_terms: 10_000,
            rel_tol: 1e-14,
        }
    }
}

impl SeriesControl {
    pub fn new(max_terms: usize, rel_tol: f64) -> Result<Self> {
        if max_terms == 0 || !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(Error::domain(format!(
                "series control needs max_terms >= 1 and 0 < rel_tol < 1, got {max_terms}, {rel_tol}"
            )));
        }
        Ok(SeriesControl { max_terms, rel_tol })
    }
}

/// Exponential integral E₁(x) = ∫ₓ^∞ t⁻¹e^{−t} dt for x > 0.
pub fn exp1(x: f64) -> f64 {
    if x > 1.0 {
        (-x + ln_exp1_cf(x)).exp()
    } else {
        exp1_series(x)
    }
}

/// ln E₁(x); stays finite where E₁ itself underflows.
pub fn ln_exp1(x: f64) -> f64 {
    if x > 1.0 {
        -x + ln_exp1_cf(x)
    } else {
        exp1_series(x).ln()
    }
}

fn exp1_series(x: f64) -> f64 {
    if x <= 0.0 {
        return if x == 0.0 { f64::INFINITY } else { f64::NAN };
    }
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= -x / k as f64;
        let add = -term / k as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

// Modified Lentz on the continued fraction e^x E₁(x) = 1/(x+1− 1/(x+3− 4/(x+5− …))).
fn ln_exp1_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h.ln()
}

/// Regularized upper incomplete gamma Q(a, x) = Γ(a, x)/Γ(a) for a > 0, x ≥ 0.
pub fn gamma_q(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) {
        return Err(Error::domain(format!("gamma_q needs a > 0, x >= 0, got ({a}, {x})")));
    }
    Ok((ln_upper_gamma(a, x)? - ln_gamma(a)).exp().min(1.0))
}

/// ln Γ(a, x) for real `a` and x > 0 (x = 0 allowed when a > 0).
pub fn ln_upper_gamma(a: f64, x: f64) -> Result<f64> {
    if x.is_nan() || a.is_nan() || x < 0.0 {
        return Err(Error::domain(format!("ln_upper_gamma needs x >= 0, got ({a}, {x})")));
    }
    if x == 0.0 {
        return if a > 0.0 {
            Ok(ln_gamma(a))
        } else {
            Err(Error::domain(format!("Γ({a}, 0) diverges")))
        };
    }
    if x.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    if x > 1.5 && x >= a - 1.0 {
        return Ok(ln_upper_gamma_cf(a, x));
    }
    if a == 0.0 {
        return Ok(ln_exp1(x));
    }
    if a < 0.0 {
        // Γ(a,x) = (x^a e^{−x} − Γ(a+1,x)) / (−a)
        let lead = a * x.ln() - x;
        let next = ln_upper_gamma(a + 1.0, x)?;
        return Ok(lead + (-(next - lead).exp()).ln_1p() - (-a).ln());
    }
    if a < 1.0 {
        return Ok(upper_gamma_small_a(a, x).ln());
    }
    // a ≥ 1 with x < a + 1 or x ≤ 1.5: Q = 1 − P, P from the lower series.
    let ln_p = ln_lower_gamma_reg_series(a, x);
    Ok(ln_gamma(a) + (-ln_p.exp()).ln_1p())
}

/// Γ(a, x) for −1 ≤ a < 0, anchored at a+1 through Γ(a,x) = (Γ(a+1,x) − x^a e^{−x})/a.
pub fn upper_incomplete_gamma_neg(a: f64, x: f64) -> Result<f64> {
    if !(-1.0..0.0).contains(&a) {
        return Err(Error::domain(format!(
            "upper_incomplete_gamma_neg needs -1 <= a < 0, got {a}"
        )));
    }
    if !(x > 0.0) {
        return Err(Error::domain(format!(
            "upper_incomplete_gamma_neg needs x > 0, got {x}"
        )));
    }
    Ok(ln_upper_gamma(a, x)?.exp())
}

// ln P(a,x) by the series γ(a,x) = e^{−x} x^a Σ x^k / (a(a+1)…(a+k)).
fn ln_lower_gamma_reg_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..10_000 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum.ln() - x + a * x.ln() - ln_gamma(a)
}

// Lentz continued fraction for Γ(a,x) = e^{−x}x^a / (x+1−a− 1(1−a)/(x+3−a− …)); any real a.
fn ln_upper_gamma_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    -x + a * x.ln() + h.ln()
}

// Taylor coefficients of 1/Γ(z) = Σ c_k z^k (c₁ = 1), accurate for |z| ≤ 1.
const RECIP_GAMMA: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
    0.000_000_005_002_007_5,
    -0.000_000_001_181_274_6,
    0.000_000_000_104_342_7,
    0.000_000_000_007_782_3,
    -0.000_000_000_003_696_8,
    0.000_000_000_000_510_0,
    -0.000_000_000_000_020_6,
    -0.000_000_000_000_005_4,
    0.000_000_000_000_001_4,
    0.000_000_000_000_000_1,
];

/// (Γ(1+a) − 1)/a without cancellation for |a| ≤ 1.
fn gamma1pm1_over_a(a: f64) -> f64 {
    // 1/Γ(1+a) = Σ c_{k+1} a^k = 1 + a·s(a)
    let mut s = 0.0;
    for &c in RECIP_GAMMA[1..].iter().rev() {
        s = s * a + c;
    }
    let r = 1.0 + a * s;
    -s / r
}

// Γ(a,x) for 0 < a < 1 and small x, split as
// (Γ(1+a) − 1)/a − (x^a − 1)/a − x^a Σ_{k≥1} (−x)^k/(k!(a+k)).
fn upper_gamma_small_a(a: f64, x: f64) -> f64 {
    let lx = x.ln();
    let mut sum = 0.0;
    let mut t = 1.0;
    for k in 1..200 {
        t *= -x / k as f64;
        let add = t / (a + k as f64);
        sum += add;
        if add.abs() < 1e-17 {
            break;
        }
    }
    gamma1pm1_over_a(a) - (a * lx).exp_m1() / a - (a * lx).exp() * sum
}

/// Modified Bessel function I_ν(s).
///
/// Fails with a range error when the result would overflow; use
/// [`bessel_i_scaled`] there.
pub fn bessel_i(nu: f64, s: f64) -> Result<f64> {
    if s > 700.0 {
        return Err(Error::Range(format!("I_{nu}({s}) overflows; use the scaled variant")));
    }
    let v = ln_bessel_i_scaled(nu, s)? + s;
    Ok(v.exp())
}

/// e^{−s} I_ν(s).
pub fn bessel_i_scaled(nu: f64, s: f64) -> Result<f64> {
    Ok(ln_bessel_i_scaled(nu, s)?.exp())
}

/// ln(e^{−s} I_ν(s)); −∞ at s = 0 for ν > 0.
pub fn ln_bessel_i_scaled(nu: f64, s: f64) -> Result<f64> {
    if !(nu >= 0.0) || !(s >= 0.0) {
        return Err(Error::domain(format!(
            "bessel_i needs nu >= 0, s >= 0, got ({nu}, {s})"
        )));
    }
    if s == 0.0 {
        return Ok(if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY });
    }
    if s <= 35.0 || s <= 2.0 * nu * nu {
        return Ok(ln_bessel_series(nu, s) - s);
    }
    Ok(ln_bessel_asymptotic(nu, s))
}

fn ln_bessel_series(nu: f64, s: f64) -> f64 {
    let q = 0.25 * s * s;
    // Terms relative to the m=0 term; the largest sits near m ≈ s/2.
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut shift = 0.0f64;
    for m in 0..100_000 {
        let m = m as f64;
        term *= q / ((m + 1.0) * (nu + m + 1.0));
        sum += term;
        if sum > 1e250 {
            shift += sum.ln();
            term /= sum;
            sum = 1.0;
        }
        if term < 1e-17 * sum && m + 1.0 > 0.5 * s {
            break;
        }
    }
    nu * (0.5 * s).ln() - ln_gamma(nu + 1.0) + shift + sum.ln()
}

fn ln_bessel_asymptotic(nu: f64, s: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in 1..60 {
        let kf = k as f64;
        let next = -term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * s);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum.ln() - 0.5 * (2.0 * std::f64::consts::PI * s).ln()
}

/// ₂F₁(a, b; 1; z) for 0 ≤ z < 1 by direct summation.
pub fn hyp2f1_unit_c(a: f64, b: f64, z: f64, ctrl: SeriesControl) -> Result<f64> {
    Ok(ln_hyp2f1_unit_c(a, b, z, ctrl)?.exp())
}

/// ln ₂F₁(a, b; 1; z).
///
/// Arguments above 1 − 10⁻⁶ are refused with an accuracy error: the series
/// needs millions of terms there and loses its digits to rounding.
pub fn ln_hyp2f1_unit_c(a: f64, b: f64, z: f64, ctrl: SeriesControl) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain(format!("hyp2f1 needs a, b > 0, got ({a}, {b})")));
    }
    if !(0.0..1.0).contains(&z) {
        return Err(Error::domain(format!("hyp2f1 series needs 0 <= z < 1, got {z}")));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut shift = 0.0f64;
    for j in 0..ctrl.max_terms {
        let jf = j as f64;
        let r = (a + jf) * (b + jf) / ((jf + 1.0) * (jf + 1.0)) * z;
        term *= r;
        sum += term;
        if sum > 1e250 {
            shift += sum.ln();
            term /= sum;
            sum = 1.0;
        }
        // Term ratios move monotonically towards z, so the tail is a geometric bound.
        let rmax = r.max(z);
        if rmax < 1.0 && term * rmax / (1.0 - rmax) < ctrl.rel_tol * sum {
            if z > 1.0 - 1e-6 {
                break;
            }
            return Ok(shift + sum.ln());
        }
    }
    Err(Error::Accuracy {
        what: format!("2F1({a}, {b}; 1; {z}) series"),
        estimate: shift + sum.ln(),
        error_bound: f64::INFINITY,
    })
}
