//! Distribution functions: F via the regularized incomplete beta, and the
//! studentized range via nested adaptive Gauss–Kronrod quadrature.

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

const MAX_CF_ITER: usize = 100_000;
const CF_EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_CF_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, 1.0 - x) / b
    }
}

/// `P(F ≤ x)` for an F distribution with `(d1, d2)` degrees of freedom.
pub fn f_cdf(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    regularized_beta(d1 * x / (d1 * x + d2), d1 / 2.0, d2 / 2.0)
}

/// `P(F > x)`, evaluated directly so small p-values keep their precision.
pub fn f_sf(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    regularized_beta(d2 / (d2 + d1 * x), d2 / 2.0, d1 / 2.0)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule.
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

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) on `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn go<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, whole: (f64, f64), depth: u32) -> f64 {
        let (value, err) = whole;
        if err <= tol || depth == 0 {
            return value;
        }
        let m = 0.5 * (a + b);
        let left = gauss_kronrod(f, a, m);
        let right = gauss_kronrod(f, m, b);
        go(f, a, m, tol / 2.0, left, depth - 1) + go(f, m, b, tol / 2.0, right, depth - 1)
    }
    go(f, a, b, tol, gauss_kronrod(f, a, b), 40)
}

/// `P(range of k standard normals ≤ w)`.
fn normal_range_cdf(w: f64, k: f64, tol: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let integrand = |z: f64| {
        let d = normal_cdf(z) - normal_cdf(z - w);
        normal_pdf(z) * d.max(0.0).powf(k - 1.0)
    };
    (k * integrate(&integrand, -8.5, 8.5 + w.min(8.5), tol)).clamp(0.0, 1.0)
}

/// Default absolute tolerance for [`studentized_range_cdf`].
pub const STUDENTIZED_RANGE_TOL: f64 = 5e-4;

pub fn studentized_range_cdf(q: f64, k: usize, df: f64) -> f64 {
    studentized_range_cdf_tol(q, k, df, STUDENTIZED_RANGE_TOL)
}

/// `P(Q ≤ q)` for the studentized range with `k` groups and `df` degrees of
/// freedom: the range CDF integrated against the density of `s = χ_df/√df`.
pub fn studentized_range_cdf_tol(q: f64, k: usize, df: f64, tol: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let k = k as f64;
    if df.is_infinite() {
        return normal_range_cdf(q, k, tol);
    }
    let half = df / 2.0;
    let ln_norm = half * df.ln() - ln_gamma(half) - (half - 1.0) * std::f64::consts::LN_2;
    let density = move |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        (ln_norm + (df - 1.0) * s.ln() - half * s * s).exp()
    };
    // Support of s: mean and sd of χ_df/√df.
    let mean = (2.0 / df).sqrt() * (ln_gamma((df + 1.0) / 2.0) - ln_gamma(half)).exp();
    let sd = (1.0 - mean * mean).max(0.0).sqrt().max(1e-6);
    let lo = (mean - 14.0 * sd).max(0.0);
    let hi = mean + 14.0 * sd.max(0.05);
    let inner_tol = tol / 4.0;
    let integrand = |s: f64| {
        let w = density(s);
        if w < 1e-300 {
            0.0
        } else {
            w * normal_range_cdf(q * s, k, inner_tol)
        }
    };
    // split at the mode so the peak is never straddled by a single panel
    let mode = ((df - 1.0) / df).max(0.0).sqrt().clamp(lo, hi);
    let total = integrate(&integrand, lo, mode, tol / 2.0) + integrate(&integrand, mode, hi, tol / 2.0);
    total.clamp(0.0, 1.0)
}
