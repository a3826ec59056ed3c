//! Numerical checks of the scalar integral identities behind the symbol formulas:
//! the τ-integral and its steepest-descent expansion, the Gamma-integral identity for
//! the full (u,v) quadrant, and the truncated-region remainder.

pub mod split;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gamma::{c_of_s, eval_rational, uv_coefficient, uv_coefficient_ext};
use crate::quadrature::{gk_adaptive, tanh_sinh};
use crate::special::{gamma, powc, rgamma};

pub use split::{lemma65_split, SplitInput, SplitResult};

fn cx(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Below this T the Taylor series of Q_pq is used directly.
const SERIES_T: f64 = 8.0;
/// Split point between quadrature and the asymptotic tail.
pub const T_SPLIT: f64 = 200.0;

/// ∫₀¹ e^{−Tτ(1−τ)} dτ by adaptive Gauss–Kronrod.
pub fn tau_integral(t: f64) -> f64 {
    q_pq(0, 0, t)
}

/// The same integral through the substitution κ = Tτ(1−τ):
/// (1/T) ∫₀^{T/4} e^{−κ} · 2/(2√(1/4 − κ/T)) · 2 dκ, folded over the two halves of [0, 1].
pub fn tau_integral_kappa(t: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let top = t / 4.0;
    let f = |k: f64, _da: f64, db: f64| {
        // 1/4 − κ/T = (T/4 − κ)/T, with T/4 − κ = db exact near the endpoint
        cx((-k).exp() / (db / t).sqrt())
    };
    let r = if top <= 60.0 {
        tanh_sinh(f, 0.0, top, 1e-15).value
    } else {
        // e^{−60} is below the working precision; stop well before the endpoint
        tanh_sinh(|k, da, _| f(k, da, top - k), 0.0, 60.0, 1e-15).value
    };
    r.re / t
}

/// Q_pq(T) = ∫₀¹ τ^p (1−τ)^q e^{−Tτ(1−τ)} dτ.
pub fn q_pq(p: u32, q: u32, t: f64) -> f64 {
    if t <= SERIES_T {
        return q_series(p, q, t, 0);
    }
    let f = |x: f64| cx(x.powi(p as i32) * (1.0 - x).powi(q as i32) * (-t * x * (1.0 - x)).exp());
    // the mass sits within O(1/T) of the endpoints; break there so the adaptive rule sees it
    let w = (80.0 / t).min(0.5);
    [(0.0, w), (w, 0.5), (0.5, 1.0 - w), (1.0 - w, 1.0)]
        .iter()
        .filter(|(a, b)| b > a)
        .map(|&(a, b)| gk_adaptive(f, a, b, 1e-15, 1e-300).value.re)
        .sum()
}

/// Taylor coefficients at T = 0: (−1)^j/j! · B(p+j+1, q+j+1).
pub fn q_taylor(p: u32, q: u32, count: usize) -> Vec<f64> {
    let (p, q) = (p as f64, q as f64);
    // B(p+1, q+1)
    let mut beta = gamma(cx(p + 1.0)).re * gamma(cx(q + 1.0)).re / gamma(cx(p + q + 2.0)).re;
    let mut out = Vec::with_capacity(count);
    let mut fact = 1.0;
    for j in 0..count {
        let jf = j as f64;
        if j > 0 {
            fact *= jf;
            // B(p+j+1, q+j+1) from B(p+j, q+j)
            beta *= (p + jf) * (q + jf) / ((p + q + 2.0 * jf) * (p + q + 2.0 * jf + 1.0));
        }
        out.push(if j % 2 == 0 { beta / fact } else { -beta / fact });
    }
    out
}

/// Σ_{j ≥ from} of the Taylor series at T (the exact remainder after `from` terms).
fn q_series(p: u32, q: u32, t: f64, from: usize) -> f64 {
    let c = q_taylor(p, q, 80);
    let mut s = 0.0;
    let mut tp = t.powi(from as i32);
    for cj in &c[from..] {
        let term = cj * tp;
        s += term;
        if term.abs() < 1e-18 * s.abs() && tp > 0.0 {
            break;
        }
        tp *= t;
    }
    s
}

/// Coefficients D_j of Q_pq(T) ~ Σ D_j T^{−j−1} (T → ∞), from κ = τ(1−τ):
/// D_j = j! [κ^j] (τ^p(1−τ)^q + τ^q(1−τ)^p)(1 − 4κ)^{−1/2}, τ = (1 − √(1−4κ))/2.
pub fn watson_coefficients(p: u32, q: u32, count: usize) -> Vec<f64> {
    let mul = |a: &[f64], b: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; count];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate().take(count - i) {
                c[i + j] += x * y;
            }
        }
        c
    };
    let pow = |a: &[f64], k: u32| -> Vec<f64> {
        let mut r = vec![0.0; count];
        r[0] = 1.0;
        for _ in 0..k {
            r = mul(&r, a);
        }
        r
    };
    // τ(κ) = Σ_{k≥1} Cat_{k−1} κ^k
    let mut tau = vec![0.0; count];
    let mut cat = 1.0;
    for k in 1..count {
        tau[k] = cat;
        let m = (k - 1) as f64;
        cat *= 2.0 * (2.0 * m + 1.0) / (m + 2.0);
    }
    let mut one_minus = tau.iter().map(|x| -x).collect::<Vec<_>>();
    one_minus[0] += 1.0;
    // (1 − 4κ)^{−1/2} = Σ C(2j, j) κ^j
    let mut inv_sqrt = vec![0.0; count];
    let mut b = 1.0;
    for (j, slot) in inv_sqrt.iter_mut().enumerate() {
        *slot = b;
        let jf = j as f64;
        b *= 2.0 * (2.0 * jf + 1.0) / (jf + 1.0);
    }
    let a1 = mul(&pow(&tau, p), &pow(&one_minus, q));
    let a2 = mul(&pow(&tau, q), &pow(&one_minus, p));
    let g: Vec<f64> = a1.iter().zip(&a2).map(|(x, y)| x + y).collect();
    let g = mul(&g, &inv_sqrt);
    let mut fact = 1.0;
    g.iter()
        .enumerate()
        .map(|(j, x)| {
            if j > 0 {
                fact *= j as f64;
            }
            x * fact
        })
        .collect()
}

/// C_1, …, C_order of ∫₀¹ e^{−Tτ(1−τ)}dτ ~ Σ C_j T^{−j}; C_j = 2(2j−2)!/(j−1)!.
pub fn tau_expansion(order: usize) -> Vec<f64> {
    watson_coefficients(0, 0, order)
}

/// Least-squares fit of T·τ(T) = Σ_{j<order} c_j T^{−j} over the given T values.
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionFit {
    pub coeffs: Vec<f64>,
    pub max_residual: f64,
    pub condition: f64,
}

pub fn fit_tau_expansion(ts: &[f64], order: usize) -> ExpansionFit {
    let t0 = ts.iter().cloned().fold(f64::INFINITY, f64::min);
    let vals: Vec<f64> = Exec::default().map_slice(ts, |&t| t * tau_integral(t));
    let a = DMatrix::from_fn(ts.len(), order, |i, j| (t0 / ts[i]).powi(j as i32));
    let y = DVector::from_vec(vals);
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let condition = sv.max() / sv.min();
    let x = svd.solve(&y, 1e-300).expect("svd solve");
    let max_residual = (&a * &x - &y).amax();
    let coeffs = (0..order).map(|j| x[j] * t0.powi(j as i32)).collect();
    ExpansionFit { coeffs, max_residual, condition }
}

/// Smallest J with Re α + J ≥ 0, so the subtracted integrand stays bounded at 0.
fn subtraction_order(alpha: Complex64) -> usize {
    if alpha.re >= 0.0 {
        0
    } else {
        (-alpha.re).ceil() as usize
    }
}

/// ∫₀^L T^α f(T) dT continued in α: `rem(T)` must return f(T) − Σ_{j<J} a_j T^j accurately,
/// with J = a.len() chosen by [`subtraction_order`].
pub(crate) fn continued_moment(rem: impl Fn(f64) -> f64, a: &[f64], alpha: Complex64, l: f64) -> Result<Complex64> {
    let mut head = Complex64::new(0.0, 0.0);
    for (j, aj) in a.iter().enumerate() {
        let e = alpha + (j as f64 + 1.0);
        if e.norm() < 1e-12 {
            return Err(Error::Pole(format!("moment ∫T^α has a pole at α = {}", -(j as f64) - 1.0)));
        }
        head += powc(l, e) / e * *aj;
    }
    let body = tanh_sinh(|_, da, _| powc(da, alpha) * rem(da), 0.0, l, 1e-13).value;
    Ok(head + body)
}

/// ∫₀^∞ T^K Q_pq(T) dT, analytically continued in K: Taylor subtraction at 0 and the
/// Watson series on [T_SPLIT, ∞).
pub fn mellin_q(p: u32, q: u32, k: Complex64) -> Result<Complex64> {
    let jj = subtraction_order(k);
    let taylor = q_taylor(p, q, jj);
    let rem = |t: f64| {
        if t <= SERIES_T {
            q_series(p, q, t, jj)
        } else {
            q_pq(p, q, t) - taylor.iter().enumerate().map(|(j, a)| a * t.powi(j as i32)).sum::<f64>()
        }
    };
    let head = continued_moment(rem, &taylor, k, T_SPLIT)?;
    Ok(head + watson_tail(p, q, k, T_SPLIT)?)
}

/// Σ_j D_j ∫_{T1}^∞ T^{K−j−1} dT = Σ_j D_j T1^{K−j}/(j − K), summed to its smallest term.
fn watson_tail(p: u32, q: u32, k: Complex64, t1: f64) -> Result<Complex64> {
    let d = watson_coefficients(p, q, 70);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut last = f64::INFINITY;
    for (j, dj) in d.iter().enumerate() {
        let den = cx(j as f64) - k;
        if den.norm() < 1e-12 {
            return Err(Error::Pole(format!("tail pole at K = {j}")));
        }
        let term = powc(t1, k - j as f64) * *dj / den;
        if term.norm() > last {
            break;
        }
        last = term.norm();
        sum += term;
        if last < 1e-18 * sum.norm() {
            break;
        }
    }
    Ok(sum)
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaIdentityCheck {
    pub n: u32,
    pub s: [f64; 2],
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
    pub rel_error: f64,
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// (1/Γ(s−n/2)) ∫₀^∞∫₀¹ T^{s−n/2+1} e^{−Tτ(1−τ)} dτ dT against
/// Γ(n/2−s−1)Γ(n/2−s+1)/Γ(n−2s−2). Requires n/2 − ℜs − 1 > 0.
pub fn check_eq_1_20(n: u32, s: Complex64) -> Result<GammaIdentityCheck> {
    let big_s = s - n as f64 / 2.0;
    let b = -big_s - 1.0;
    if b.re <= 0.0 {
        return Err(Error::Divergence(format!("the τ-integral diverges: n/2 − ℜs − 1 = {} ≤ 0", b.re)));
    }
    let lhs = rgamma(big_s) * mellin_q(0, 0, big_s + 1.0)?;
    let rhs = gamma(b) * gamma(b + 2.0) * rgamma(b * 2.0);
    let rel_error = (lhs - rhs).norm() / rhs.norm();
    Ok(GammaIdentityCheck { n, s: pair(s), lhs: pair(lhs), rhs: pair(rhs), rel_error })
}

/// Offsets n/2 − s − 1 used for the acceptance grid.
pub const STRIP_OFFSETS: [f64; 5] = [0.2, 0.6, 1.1, 1.5, 1.9];

pub fn check_gamma_identity_grid(exec: Exec) -> Vec<Result<GammaIdentityCheck>> {
    let pts: Vec<(u32, f64)> = (1..=5u32).flat_map(|n| STRIP_OFFSETS.iter().map(move |b| (n, n as f64 / 2.0 - 1.0 - b))).collect();
    exec.map_slice(&pts, |&(n, s)| check_eq_1_20(n, cx(s)))
}

/// Truncated (u + v < 1) against full-quadrant values of
/// (4π)^{−n/2}/Γ(S) ∬ (u+v)^{S−r} u^p v^q e^{−|ξ|²uv/(u+v)} du dv.
#[derive(Clone, Debug, Serialize)]
pub struct UvTruncation {
    pub pqr: [i64; 3],
    pub n: u32,
    pub s: f64,
    /// |ξ| = 1 value of the full quadrant: closed form and continued quadrature
    pub full_closed: f64,
    pub full_quadrature: f64,
    pub rows: Vec<UvRow>,
    /// fitted exponent of the remainder in |ξ|
    pub remainder_exponent: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct UvRow {
    pub xi: f64,
    pub truncated: f64,
    pub full: f64,
    pub remainder: f64,
    /// leading terms −(prefactor/Γ(S)) Σ_j D_j |ξ|^{−2j−2}/(K − j)
    pub asymptotic: f64,
}

pub fn uv_truncated_vs_full(p: i64, q: i64, r: i64, n: u32, s: f64) -> Result<UvTruncation> {
    if p < 0 || q < 0 {
        return Err(Error::Constraint("p, q must be non-negative".into()));
    }
    let big_s = s - n as f64 / 2.0;
    let k = big_s - r as f64 + (p + q) as f64 + 1.0;
    if k <= -1.0 {
        return Err(Error::Divergence(format!("u+v<1 integral diverges at 0 (exponent {k} ≤ −1)")));
    }
    let (pu, qu) = (p as u32, q as u32);
    let pref = (4.0 * std::f64::consts::PI).powf(-(n as f64) / 2.0) * rgamma(cx(big_s)).re;
    let uc = uv_coefficient_ext(p, q, r)?;
    let coeff = eval_rational(&uc.coeff, cx(big_s))?;
    let cfac = c_of_s(n, cx(s))?.powi(uc.c_power);
    let full_closed = (coeff * cfac).re;
    let full_quadrature = pref * mellin_q(pu, qu, cx(k))?.re;
    let xis: Vec<f64> = (0..10).map(|i| 10f64.powf(1.0 + i as f64 / 9.0)).collect();
    let d = watson_coefficients(pu, qu, 12);
    let rows: Vec<UvRow> = Exec::default().map_slice(&xis, |&xi| {
        let x = xi * xi;
        let scale = x.powf(-k - 1.0);
        let truncated = pref * scale * truncated_moment(pu, qu, k, x);
        let full = full_closed * xi.powf(n as f64 - 2.0 * s + uc.norm_offset as f64);
        let asymptotic = -pref * d.iter().enumerate().take(6).map(|(j, dj)| dj * x.powi(-(j as i32) - 1) / (k - j as f64)).sum::<f64>();
        UvRow { xi, truncated, full, remainder: full - truncated, asymptotic }
    });
    // least-squares slope of log|remainder| against log|ξ|
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.xi.ln(), r.remainder.abs().ln())).collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let num: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Ok(UvTruncation { pqr: [p, q, r], n, s, full_closed, full_quadrature, rows, remainder_exponent: num / den })
}

/// ∫₀^x T^K Q_pq(T) dT, K > −1.
fn truncated_moment(p: u32, q: u32, k: f64, x: f64) -> f64 {
    let f = |t: f64| t.powf(k) * q_pq(p, q, t);
    let lo = tanh_sinh(|_, da, _| cx(f(da)), 0.0, SERIES_T.min(x), 1e-14).value.re;
    let hi = if x > SERIES_T { gk_adaptive(|y: f64| cx(y.exp() * f(y.exp())), SERIES_T.ln(), x.ln(), 1e-14, 0.0).value.re } else { 0.0 };
    lo + hi
}

/// Pole probe for (p,q,r) = (0,0,0) at S = 1 + δ: the full-quadrant value has a simple pole
/// there while the truncated one stays finite, so δ·remainder·|ξ|⁶/(4π)^{−n/2} tends to
/// −D₂ = −24 (the T^{−3} Watson coefficient against T^{S+1}).
pub fn uv_pole_probe(n: u32, xi: f64, delta: f64) -> Result<f64> {
    let big_s = 1.0 + delta;
    let s = big_s + n as f64 / 2.0;
    let pref = (4.0 * std::f64::consts::PI).powf(-(n as f64) / 2.0);
    let uc = uv_coefficient(0, 0, 0)?;
    let full = (eval_rational(&uc.coeff, cx(big_s))? * c_of_s(n, cx(s))?.powi(uc.c_power)).re * xi.powf(n as f64 - 2.0 * s + uc.norm_offset as f64);
    let x = xi * xi;
    let k = big_s + 1.0;
    let truncated = pref * rgamma(cx(big_s)).re * x.powf(-k - 1.0) * truncated_moment(0, 0, k, x);
    Ok(delta * (full - truncated) * xi.powi(6) / pref)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_routes_agree() {
        for t in [0.5, 3.0, 10.0, 100.0, 1e3, 1e5] {
            let a = tau_integral(t);
            let b = tau_integral_kappa(t);
            assert!((a / b - 1.0).abs() < 1e-12, "T={t}: {a} vs {b}");
        }
        assert!((tau_integral(1e-12) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn watson_closed_form() {
        let c = tau_expansion(6);
        let want = [2.0, 4.0, 24.0, 240.0, 3360.0, 60480.0];
        for (a, b) in c.iter().zip(want) {
            assert!((a / b - 1.0).abs() < 1e-14);
        }
        // p = 1: Q_10 = Q_00/2 by symmetry
        let d = watson_coefficients(1, 0, 6);
        for (a, b) in d.iter().zip(&c) {
            assert!((a - b / 2.0).abs() < 1e-10 * b);
        }
    }

    #[test]
    fn q_branches_meet() {
        for (p, q) in [(0, 0), (1, 2), (3, 1)] {
            let a = q_series(p, q, SERIES_T, 0);
            let f = |x: f64| cx(x.powi(p as i32) * (1.0 - x).powi(q as i32) * (-SERIES_T * x * (1.0 - x)).exp());
            let b = gk_adaptive(f, 0.0, 1.0, 1e-15, 0.0).value.re;
            assert!((a / b - 1.0).abs() < 1e-13, "{a} {b}");
        }
    }

    #[test]
    fn gamma_identity_in_and_beyond_the_strip() {
        for (n, s) in [(3, 0.3), (4, 0.5), (5, -0.4), (1, -1.1)] {
            let c = check_eq_1_20(n, cx(s)).unwrap();
            assert!(c.rel_error < 1e-8, "n={n} s={s}: {c:?}");
        }
        assert!(matches!(check_eq_1_20(3, cx(0.7)), Err(Error::Divergence(_))));
    }

    #[test]
    fn near_the_strip_edge() {
        // n/2 − s − 1 = 1e−2
        let c = check_eq_1_20(3, cx(0.49)).unwrap();
        let ratio = c.lhs[0] / c.rhs[0];
        assert!((ratio - 1.0).abs() < 1e-3);
    }

    #[test]
    fn gamma_identity_grid() {
        let grid = check_gamma_identity_grid(Exec::default());
        assert_eq!(grid.len(), 25);
        for c in grid {
            let c = c.unwrap();
            assert!(c.rel_error < 1e-8, "{c:?}");
        }
    }

    #[test]
    fn uv_truncation_remainder() {
        let r = uv_truncated_vs_full(0, 0, 0, 3, 0.7).unwrap();
        assert!((r.full_quadrature / r.full_closed - 1.0).abs() < 1e-8, "{r:?}");
        assert!((r.remainder_exponent + 2.0).abs() < 0.05, "{r:?}");
        let last = r.rows.last().unwrap();
        assert!((last.remainder / last.asymptotic - 1.0).abs() < 1e-6, "{last:?}");
        assert!(matches!(uv_truncated_vs_full(0, 0, 3, 3, 0.7), Err(Error::Divergence(_))));
    }

    #[test]
    fn remainder_pole_at_s_plus_one() {
        // the finite part grows like |ξ|⁴, so probe at a moderate |ξ|
        let a = uv_pole_probe(3, 3.0, 1e-3).unwrap();
        let b = uv_pole_probe(3, 3.0, -1e-4).unwrap();
        let c = uv_pole_probe(3, 3.0, 1e-4).unwrap();
        for v in [b, c] {
            assert!((v / -24.0 - 1.0).abs() < 1e-3, "{a} {b} {c}");
        }
        // the approach is linear in δ
        assert!((c + 24.0).abs() < (a + 24.0).abs());
    }
}
