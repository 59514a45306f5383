//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use coevo::SocietyParams;

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_KRONROD: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_GAUSS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_KRONROD[7] * fc;
    let mut g = GK_GAUSS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        k += GK_KRONROD[i] * s;
        if i % 2 == 1 {
            g += GK_GAUSS[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (k, err) = gk15(f, a, b);
    // stop at the absolute target or once the estimate is at round-off level
    if err <= tol || err <= 8.0 * f64::EPSILON * k.abs() || depth == 0 {
        return k;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    adapt(&f, a, b, tol, 40)
}

/// Residual `g(z) − z` written out from the model definition.
pub fn residual_oracle(p: &SocietyParams, z: f64) -> f64 {
    let u = p.lambda_d * p.r / (1.0 - p.w - p.w * z);
    let e = (-u).exp();
    e / (2.0 - e) - z
}

/// Sign changes of the residual on a uniform grid over `[lo, hi]`.
pub fn sign_changes(p: &SocietyParams, lo: f64, hi: f64, step: f64) -> usize {
    let n = ((hi - lo) / step).floor() as usize;
    let mut prev = residual_oracle(p, lo) > 0.0;
    let mut count = 0;
    for i in 1..=n {
        let now = residual_oracle(p, lo + i as f64 * step) > 0.0;
        if now != prev {
            count += 1;
        }
        prev = now;
    }
    count
}

/// Raw (unnormalized-by-population) welfare density from its definition,
/// given the mean quality `q`.
pub fn density_oracle(p: &SocietyParams, q: f64, x: f64) -> f64 {
    let pop = p.lambda_b / (p.lambda_d * (1.0 + q));
    let l1 = p.lambda_d / ((1.0 - p.w) + p.w * q);
    let l2 = p.lambda_d / ((1.0 - p.w) - p.w * q);
    let norm = 2.0 - (-l2 * p.r).exp();
    if x >= 0.0 {
        pop * l1 * (-l1 * x).exp() / norm
    } else if x >= -p.r {
        pop * l2 * (l2 * x).exp() / norm
    } else {
        0.0
    }
}

/// `∫ xᵏ p(x) dx` over `[lo, hi]`, split at 0 where the density jumps.
pub fn moment(p: &SocietyParams, q: f64, k: i32, lo: f64, hi: f64) -> f64 {
    let f = |x: f64| x.powi(k) * density_oracle(p, q, x);
    let mut total = 0.0;
    if lo < 0.0 {
        total += integrate(f, lo, hi.min(0.0), 1e-15);
    }
    if hi > 0.0 {
        total += integrate(f, lo.max(0.0), hi, 1e-15);
    }
    total
}

/// Upper integration limit beyond which the positive tail is below double precision.
pub fn tail_cutoff(p: &SocietyParams, q: f64) -> f64 {
    let l1 = p.lambda_d / ((1.0 - p.w) + p.w * q);
    90.0 / l1
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

/// Reference closed form for the `w = 0` inequality, with `a = λ_d·r`.
pub fn anchor_w0_variance(lambda_d: f64, r: f64) -> f64 {
    let a = lambda_d * r;
    let num = 8.0 * (2.0 * a).exp() + a.exp() * (-2.0 * a * a + 4.0 * a - 8.0) - 3.0 * a + a * a + 1.0;
    num / (2.0 * a.exp() - 1.0).powi(2) / (lambda_d * lambda_d)
}

/// Reference large-`r` limit of the inequality.
pub fn anchor_large_r_variance(lambda_d: f64, w: f64) -> f64 {
    ((1.0 - w) / lambda_d).powi(2)
}

/// `(λ_d, r, w)` grid with moderate boundary pressure, so every moment is
/// well away from cancellation.
pub fn moment_grid() -> Vec<SocietyParams> {
    let mut out = Vec::new();
    for ld in [0.5, 1.0, 2.0] {
        for r in [0.25, 0.5, 1.0] {
            for w in [0.0, 0.15, 0.3, 0.45, 0.6, 0.75] {
                out.push(SocietyParams::new(1.3, ld, r, w).unwrap());
            }
        }
    }
    out
}
