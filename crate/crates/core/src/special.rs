//! Double-precision special functions used by the numerical oracles.
//!
//! Nothing here feeds the exact symbolic path.

use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// sin(πx) with exact zeros at integers.
pub fn sinpi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round(); // r in [-1, 1]
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        -(PI * (1.0 + r)).sin()
    } else {
        (PI * r).sin()
    }
}

/// cos(πx) with exact zeros at half-integers.
pub fn cospi(x: f64) -> f64 {
    sinpi(x + 0.5)
}

pub fn sinpi_c(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    Complex64::new(sinpi(x) * (PI * y).cosh(), cospi(x) * (PI * y).sinh())
}

pub fn is_nonpositive_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// log Γ(z) for Re z ≥ 1/2 (principal branch along the positive axis).
fn lngamma_right(z: Complex64) -> Complex64 {
    let z1 = z - 1.0;
    let mut x = c(LANCZOS[0]);
    for (i, p) in LANCZOS.iter().enumerate().skip(1) {
        x += p / (z1 + i as f64);
    }
    let t = z1 + LANCZOS_G + 0.5;
    c(0.5 * (2.0 * PI).ln()) + (z1 + 0.5) * t.ln() - t + x.ln()
}

/// Γ(z) for complex z (Lanczos g = 7, n = 9, reflection for Re z < 1/2).
pub fn gamma(z: Complex64) -> Complex64 {
    if is_nonpositive_integer(z) {
        return c(f64::INFINITY);
    }
    if z.re < 0.5 {
        c(PI) / (sinpi_c(z) * gamma(c(1.0) - z))
    } else {
        lngamma_right(z).exp()
    }
}

/// 1/Γ(z), entire; exactly zero at the non-positive integers.
pub fn rgamma(z: Complex64) -> Complex64 {
    if is_nonpositive_integer(z) {
        return c(0.0);
    }
    if z.re < 0.5 {
        sinpi_c(z) * gamma(c(1.0) - z) / PI
    } else {
        (-lngamma_right(z)).exp()
    }
}

pub fn gamma_r(x: f64) -> f64 {
    gamma(c(x)).re
}

pub fn rgamma_r(x: f64) -> f64 {
    rgamma(c(x)).re
}

/// e^z − 1 without cancellation for small |z|.
pub fn expm1_c(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = z;
        let mut sum = z;
        for k in 2..40 {
            term = term * z / k as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        z.exp() - 1.0
    }
}

/// x^a for real x > 0.
pub fn powc(x: f64, a: Complex64) -> Complex64 {
    (a * x.ln()).exp()
}

/// x^{-a} γ(a, x) = e^{-x} Σ_k x^k / (a)_{k+1}, the lower incomplete gamma without its power.
fn lower_scaled_series(a: Complex64, x: f64) -> Complex64 {
    let mut term = c(1.0) / a;
    let mut sum = term;
    let mut k = 1.0;
    while k < 100_000.0 {
        term = term * x / (a + k);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
        k += 1.0;
    }
    sum * (-x).exp()
}

/// x^{-a} Γ(a, x) by the Legendre continued fraction (modified Lentz); x > 0.
fn upper_scaled_cf(a: Complex64, x: f64) -> Complex64 {
    let tiny = 1e-300;
    let mut b = c(x + 1.0) - a;
    let mut cc = c(1.0 / tiny);
    let mut d = if b.norm() < tiny { c(1.0 / tiny) } else { c(1.0) / b };
    let mut h = d;
    for i in 1..200_000 {
        let fi = i as f64;
        let an = -(c(fi) * (c(fi) - a));
        b += 2.0;
        d = an * d + b;
        if d.norm() < tiny {
            d = c(tiny);
        }
        cc = b + an / cc;
        if cc.norm() < tiny {
            cc = c(tiny);
        }
        d = c(1.0) / d;
        let del = d * cc;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h * (-x).exp()
}

/// x^{-a} Γ(a, x) for complex a and real x > 0.
pub fn upper_gamma_scaled(a: Complex64, x: f64) -> Complex64 {
    assert!(x > 0.0, "upper incomplete gamma needs x > 0");
    if x >= 1.0 && x >= a.re + 1.0 {
        return upper_scaled_cf(a, x);
    }
    if a.re >= 1.0 {
        // x < a + 1: the lower function converges quickly and cancellation is mild
        return gamma(a) * powc(x, -a) - lower_scaled_series(a, x);
    }
    // small x: shift a to the right half plane, then recur downward
    let shift = if a.re < 1.0 { (1.0 - a.re).ceil() as usize } else { 0 };
    let top = a + shift as f64;
    // Γ(top, x) = Γ(top) − γ(top, x)
    let mut g = gamma(top) - powc(x, top) * lower_scaled_series(top, x);
    let ex = (-x).exp();
    for k in (0..shift).rev() {
        let ak = a + k as f64;
        if ak.norm() == 0.0 {
            // Γ(0, x) = E1(x)
            g = c(exp_int_e1(x));
        } else {
            g = (g - powc(x, ak) * ex) / ak;
        }
    }
    g * powc(x, -a)
}

/// Γ(a, x).
pub fn upper_gamma(a: Complex64, x: f64) -> Complex64 {
    upper_gamma_scaled(a, x) * powc(x, a)
}

/// x^{-a} γ(a, x); at x = 0 this is 1/a.
pub fn lower_gamma_scaled(a: Complex64, x: f64) -> Complex64 {
    if x == 0.0 {
        return c(1.0) / a;
    }
    if x < 40.0 + a.norm() {
        lower_scaled_series(a, x)
    } else {
        gamma(a) * powc(x, -a) - upper_gamma_scaled(a, x)
    }
}

/// Exponential integral E1(x), x > 0.
pub fn exp_int_e1(x: f64) -> f64 {
    if x < 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        -0.577_215_664_901_532_9 - x.ln() + sum
    } else {
        upper_scaled_cf(c(0.0), x).re
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn gamma_values() {
        assert!(close(gamma(c(5.0)), c(24.0), 1e-14));
        assert!(close(gamma(c(0.5)), c(PI.sqrt()), 1e-14));
        assert!(close(gamma(c(-0.5)), c(-2.0 * PI.sqrt()), 1e-14));
        // Γ(1+i) = 0.49801566811835604 − 0.15494982830181069 i
        assert!(close(gamma(Complex64::new(1.0, 1.0)), Complex64::new(0.498_015_668_118_356, -0.154_949_828_301_810_7), 1e-13));
        assert_eq!(rgamma(c(-3.0)), c(0.0));
        assert!(close(rgamma(c(-2.5)), c(1.0) / gamma(c(-2.5)), 1e-13));
    }

    #[test]
    fn incomplete_gamma_values() {
        // Γ(1, x) = e^{-x}
        for &x in &[0.1, 0.9, 1.0, 3.0, 30.0] {
            assert!(close(upper_gamma(c(1.0), x), c((-x).exp()), 1e-13), "x={x}");
        }
        // Γ(1/2, x) = √π erfc(√x); erfc(1) = 0.15729920705028513
        assert!(close(upper_gamma(c(0.5), 1.0), c(PI.sqrt() * 0.157_299_207_050_285_13), 1e-13));
        // Γ(0, x) = E1(x); E1(0.5) = 0.5597735947761608, E1(2) = 0.04890051070806112
        assert!(close(upper_gamma(c(0.0), 0.5), c(0.559_773_594_776_160_8), 1e-12));
        assert!(close(upper_gamma(c(0.0), 2.0), c(0.048_900_510_708_061_12), 1e-12));
        // Γ(-1, x) = E2(x)/x; E2(0.5) = 0.3266438623245530
        assert!(close(upper_gamma(c(-1.0), 0.5), c(0.326_643_862_324_553_0 / 0.5), 1e-12));
        // γ(a,x) + Γ(a,x) = Γ(a)
        let a = Complex64::new(2.3, 0.7);
        for &x in &[0.3, 2.0, 15.0, 80.0] {
            let s = (lower_gamma_scaled(a, x) + upper_gamma_scaled(a, x)) * powc(x, a);
            assert!(close(s, gamma(a), 1e-12), "x={x}");
        }
    }

    #[test]
    fn expm1_small() {
        let z = Complex64::new(1e-12, 0.0);
        assert!((expm1_c(z).re - (1e-12 + 5e-25)).abs() < 1e-36);
    }

    #[test]
    fn upper_plus_lower_is_gamma() {
        // integer and near-integer orders hit the continued-fraction start b = x + 1 − a = 0
        for &a in &[1.0, 2.5, 4.0, 5.0, 7.3, 12.0] {
            for &x in &[0.3, 1.0, 4.0, 6.0, 11.0, 50.0] {
                let a = c(a);
                let sum = upper_gamma_scaled(a, x) + lower_gamma_scaled(a, x);
                let want = gamma(a) * powc(x, -a);
                assert!(close(sum, want, 1e-12), "a={a} x={x}: {sum} vs {want}");
            }
        }
    }
}
