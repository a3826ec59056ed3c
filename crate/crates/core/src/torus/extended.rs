//! Extended-precision (40 significant digits) Hessians on the circle and the fit for the
//! non-integer power |m|^{n−2s} in m ↦ Hess 𝒵(s)(h_m, h_m).
//!
//! On the circle the perturbed metric (1 + σ cos(mx)) dx² is isometric to the round circle of
//! length L(σ) = ∫₀^{2π} √(1 + σ cos(mx)) dx, so its spectrum is (2πk/L)² exactly and
//! 𝒵_σ(s) = 2ζ(2s) Γ(s)/Γ(s−1/2) · (L/2π)^{2s} (times L^{−2s} when the volume factor is on).

use num_bigfloat::BigFloat;
use serde::Serialize;

use super::{TorusPerturbation, TorusProblem};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::special::{gamma_r, rgamma_r};

fn bf(x: f64) -> BigFloat {
    BigFloat::from_f64(x)
}

fn bfi(x: i64) -> BigFloat {
    BigFloat::from(x)
}

/// a/b. The crate's `/` drops to ~13 digits when the divisor carries a full-length mantissa
/// (e.g. any product), so the reciprocal is refined by Newton steps that only multiply.
fn dv(a: BigFloat, b: BigFloat) -> BigFloat {
    let two = bfi(2);
    let mut r = bf(1.0 / b.to_f64());
    for _ in 0..3 {
        r = r * (two - b * r);
    }
    a * r
}

/// Trapezoid rule with 16|m| nodes; exact up to aliasing at Fourier order 16 in σ.
pub fn circle_length(sigma: &BigFloat, m: i64) -> BigFloat {
    let n = 16 * m.unsigned_abs().max(1) as i64;
    let two_pi = num_bigfloat::PI * bfi(2);
    let step = dv(two_pi, bfi(n));
    let mut acc = num_bigfloat::ZERO;
    for j in 0..n {
        let x = step * bfi(j * m);
        acc += (num_bigfloat::ONE + *sigma * x.cos()).sqrt();
    }
    acc * step
}

/// ζ(x) for real x > 1 by Euler–Maclaurin in extended precision.
pub fn zeta_bf(x: &BigFloat) -> BigFloat {
    const N: i64 = 40;
    // B_2k as num/den; dividing by parsed BigFloats loses digits, so build everything from i64
    const B: [(i64, i64); 10] =
        [(1, 6), (-1, 30), (1, 42), (-1, 30), (5, 66), (-691, 2730), (7, 6), (-3617, 510), (43867, 798), (-174611, 330)];

    let mut s = num_bigfloat::ZERO;
    for k in 1..N {
        s += bfi(k).pow(&(-*x));
    }
    let nb = bfi(N);
    s += dv(nb.pow(&(num_bigfloat::ONE - *x)), *x - num_bigfloat::ONE);
    s += dv(nb.pow(&(-*x)), bfi(2));
    // Σ B_2k/(2k)! · x(x+1)…(x+2k−2) N^{−x−2k+1}
    let mut rising = *x;
    let mut fact = num_bigfloat::ONE;
    for (k, (p, q)) in B.iter().enumerate() {
        let kk = (k + 1) as i64;
        fact = fact * bfi(2 * kk - 1) * bfi(2 * kk);
        let c = dv(bfi(*p), bfi(*q) * fact);
        s += c * rising * nb.pow(&(-*x - bfi(2 * kk - 1)));
        rising = rising * (*x + bfi(2 * kk - 1)) * (*x + bfi(2 * kk));
    }
    s
}

/// 𝒵 for the circle metric (1 + σ cos(mx)) dx².
fn zcal_circle(sigma: &BigFloat, m: i64, s: &BigFloat, pref: &BigFloat, v_factor: bool) -> BigFloat {
    let l = circle_length(sigma, m);
    if v_factor {
        // λ_k = L² (2πk/L)² does not depend on σ
        return *pref;
    }
    let two_pi = num_bigfloat::PI * bfi(2);
    *pref * dv(l, two_pi).pow(&(*s * bfi(2)))
}

pub const FD_STEP: f64 = 1e-6;

/// Second σ-derivative of 𝒵 at 0 (5-point stencil, step [`FD_STEP`]) in 40-digit arithmetic.
pub fn circle_hessian(p: &TorusProblem, m: i64, s: f64) -> Result<BigFloat> {
    if p.n != 1 {
        return Err(Error::Invalid("extended-precision Hessians are implemented for n = 1".into()));
    }
    if s <= 0.5 {
        return Err(Error::Constraint(format!("s = {s}: the mode sums need s > n/2")));
    }
    if (p.g[(0, 0)] - 1.0).abs() > 0.0 {
        return Err(Error::Invalid("the circle oracle uses g = 1".into()));
    }
    let sb = bf(s);
    let two_s = sb * bfi(2);
    // 2ζ(2s)Γ(s)/Γ(s−1/2); the Gamma ratio is a uniform double-precision factor
    let pref = zeta_bf(&two_s) * bfi(2) * bf(gamma_r(s) * rgamma_r(s - 0.5));
    let d = bf(FD_STEP);
    let f = |k: i64| zcal_circle(&(d * bfi(k)), m, &sb, &pref, p.v_factor);
    let (fm2, fm1, f0, f1, f2) = (f(-2), f(-1), f(0), f(1), f(2));
    let num = -fm2 + fm1 * bfi(16) - f0 * bfi(30) + f1 * bfi(16) - f2;
    Ok(dv(num, bfi(12) * d * d))
}

/// Householder least squares in extended precision; returns (x, residual 2-norm).
pub fn lstsq_bf(a: &[Vec<BigFloat>], y: &[BigFloat]) -> (Vec<BigFloat>, BigFloat) {
    let rows = a.len();
    let cols = a[0].len();
    let mut r: Vec<Vec<BigFloat>> = a.to_vec();
    let mut b: Vec<BigFloat> = y.to_vec();
    for k in 0..cols {
        let mut norm = num_bigfloat::ZERO;
        for row in r.iter().skip(k) {
            norm += row[k] * row[k];
        }
        let norm = norm.sqrt();
        if norm.is_zero() {
            continue;
        }
        let alpha = if r[k][k].is_negative() { norm } else { -norm };
        let mut v: Vec<BigFloat> = (k..rows).map(|i| r[i][k]).collect();
        v[0] -= alpha;
        let vv: BigFloat = v.iter().fold(num_bigfloat::ZERO, |acc, x| acc + *x * *x);
        if vv.is_zero() {
            continue;
        }
        for j in k..cols {
            let dot = v.iter().enumerate().fold(num_bigfloat::ZERO, |acc, (i, x)| acc + *x * r[k + i][j]);
            let f = dv(dot * bfi(2), vv);
            for (i, x) in v.iter().enumerate() {
                r[k + i][j] -= f * *x;
            }
        }
        let dot = v.iter().enumerate().fold(num_bigfloat::ZERO, |acc, (i, x)| acc + *x * b[k + i]);
        let f = dv(dot * bfi(2), vv);
        for (i, x) in v.iter().enumerate() {
            b[k + i] -= f * *x;
        }
    }
    let mut x = vec![num_bigfloat::ZERO; cols];
    for k in (0..cols).rev() {
        let mut s = b[k];
        for j in k + 1..cols {
            s -= r[k][j] * x[j];
        }
        x[k] = if r[k][k].is_zero() { num_bigfloat::ZERO } else { dv(s, r[k][k]) };
    }
    let res = b[cols..].iter().fold(num_bigfloat::ZERO, |acc, z| acc + *z * *z).sqrt();
    (x, res)
}

/// Model Σ_{j ≤ J} c_j |m|^{2−j} + u |m|^{p}.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub integer_terms: usize,
    pub c: Vec<f64>,
    pub u: f64,
    /// residual 2-norm relative to the data 2-norm
    pub rel_residual: f64,
    /// same for the model without the |m|^p column
    pub rel_residual_without: f64,
    pub warnings: Vec<String>,
}

/// Integer powers kept in the model: |m|², |m|, 1, |m|^{−1}, |m|^{−2}.
pub const INTEGER_TERMS: usize = 5;

pub fn fit_exponent_model(ms: &[f64], data: &[BigFloat], exponent: f64, integer_terms: usize) -> Result<ExponentFit> {
    if (exponent - exponent.round()).abs() < 1e-9 {
        return Err(Error::Constraint(format!("exponent {exponent} is an integer; it cannot be separated from the polynomial part")));
    }
    if ms.len() < integer_terms + 2 {
        return Err(Error::Invalid("not enough modes for the fit".into()));
    }
    let cols = |with_u: bool| -> Vec<Vec<BigFloat>> {
        ms.iter()
            .map(|&m| {
                let mb = bf(m);
                let mut row: Vec<BigFloat> = (0..integer_terms).map(|j| mb.pow(&bfi(2 - j as i64))).collect();
                if with_u {
                    row.push(mb.pow(&bf(exponent)));
                }
                row
            })
            .collect()
    };
    let ynorm = data.iter().fold(num_bigfloat::ZERO, |acc, z| acc + *z * *z).sqrt();
    let (x, res) = lstsq_bf(&cols(true), data);
    let (_, res0) = lstsq_bf(&cols(false), data);
    let rel = |r: BigFloat| if ynorm.is_zero() { 0.0 } else { dv(r, ynorm).to_f64() };
    let mut warnings = Vec::new();
    let scale = x[..integer_terms].iter().map(|c| c.to_f64().abs()).fold(0.0, f64::max);
    if scale > 0.0 && x.iter().any(|c| c.to_f64().abs() > 1e12 * scale) {
        warnings.push("ill-conditioned fit: coefficients far above the data scale".into());
    }
    Ok(ExponentFit {
        exponent,
        integer_terms,
        c: x[..integer_terms].iter().map(|c| c.to_f64()).collect(),
        u: x[integer_terms].to_f64(),
        rel_residual: rel(res),
        rel_residual_without: rel(res0),
        warnings,
    })
}

/// Brute-force Hessians Hess 𝒵(s)(h_m, h_m) for h_m = e cos(mx) dx² over `m_list`, fitted for
/// the coefficient of |m|^{n−2s}.
pub fn nonlocal_exponent_fit(p: &TorusProblem, e: f64, s: f64, m_list: &[i64]) -> Result<(ExponentFit, Vec<(i64, f64)>)> {
    if p.n != 1 {
        return Err(Error::Invalid("nonlocal_exponent_fit: brute-force Hessians are exact only for n = 1".into()));
    }
    if s <= p.n as f64 / 2.0 {
        return Err(Error::Constraint(format!("s = {s} must exceed n/2")));
    }
    let h = TorusPerturbation::CosMode { e: nalgebra::DMatrix::from_element(1, 1, e), m: vec![1] };
    h.validate(p.n)?;
    let hs: Vec<Result<BigFloat>> = Exec::default().map_slice(m_list, |&m| Ok(circle_hessian(p, m, s)? * bf(e * e)));
    let hs = hs.into_iter().collect::<Result<Vec<_>>>()?;
    let ms: Vec<f64> = m_list.iter().map(|m| m.abs() as f64).collect();
    let fit = fit_exponent_model(&ms, &hs, p.n as f64 - 2.0 * s, INTEGER_TERMS)?;
    Ok((fit, m_list.iter().zip(&hs).map(|(m, h)| (*m, h.to_f64())).collect()))
}

/// Coefficient of |m|^{n−2s} that the local symbol predicts for Hess 𝒵(s)(h_m, h_m) with
/// h_m = e cos(mx) dx²: ⟨h_m, Op(u_s) h_m⟩ = π e² u_s(ξ = 1) for the scalar Laplacian on the circle.
pub fn predicted_nonlocal_coefficient(e: f64, s: f64) -> Result<f64> {
    use crate::operator::{assemble_us, linearize_scalar_family, pairing, PerturbationDirection, UsCache};
    use crate::poly::rat_int;
    let spec = linearize_scalar_family(1, &rat_int(0), &rat_int(0));
    let h = PerturbationDirection::new(vec![vec![rat_int(1)]], false)?;
    let m = assemble_us(&spec, num_complex::Complex64::new(s, 0.0), &[1.0], &h, &UsCache::default())?;
    Ok(std::f64::consts::PI * e * e * pairing(&h, &m).re)
}

/// Fit plus the comparison against [`predicted_nonlocal_coefficient`].
#[derive(Clone, Debug, Serialize)]
pub struct NonlocalCheck {
    pub fit: ExponentFit,
    pub predicted: f64,
    /// |Hess| averaged over the modes; the scale for the 5% comparison when the prediction is 0
    pub hessian_scale: f64,
    pub rel_deviation: f64,
    pub hessians: Vec<(i64, f64)>,
}

pub fn nonlocal_check(p: &TorusProblem, e: f64, s: f64, m_list: &[i64]) -> Result<NonlocalCheck> {
    let (fit, hessians) = nonlocal_exponent_fit(p, e, s, m_list)?;
    let predicted = predicted_nonlocal_coefficient(e, s)?;
    let hessian_scale = hessians.iter().map(|(_, h)| h.abs()).sum::<f64>() / hessians.len() as f64;
    let rel_deviation = (fit.u - predicted).abs() / predicted.abs().max(hessian_scale);
    Ok(NonlocalCheck { fit, predicted, hessian_scale, rel_deviation, hessians })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_values() {
        let z2 = zeta_bf(&bfi(2)).to_f64();
        assert!((z2 - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-15);
        // ζ(4) to 30 digits
        let z4 = zeta_bf(&bfi(4));
        let want = dv(num_bigfloat::PI.pow(&bfi(4)), bfi(90));
        let rel = dv(z4 - want, want).abs().to_f64();
        assert!(rel < 1e-30, "{rel}");
    }

    #[test]
    fn length_expansion() {
        // L(σ) = 2π(1 − σ²/16 − 15σ⁴/1024 − 105σ⁶/16384 + …)
        let sig = bf(1e-3);
        let l = circle_length(&sig, 7);
        let two_pi = num_bigfloat::PI * bfi(2);
        let want = two_pi * (num_bigfloat::ONE - dv(sig * sig, bfi(16)) - dv(bfi(15) * sig.pow(&bfi(4)), bfi(1024)) - dv(bfi(105) * sig.pow(&bfi(6)), bfi(16384)));
        assert!(dv(l - want, want).abs().to_f64() < 1e-22);
    }

    #[test]
    fn hessian_closed_form() {
        // 𝒵'' = pref · 2s · L''/(2π) with L''(0) = −π/4
        let p = TorusProblem::flat(1, 0, false);
        let s = 3.0;
        let h = circle_hessian(&p, 3, s).unwrap().to_f64();
        let pref = 2.0 * zeta_bf(&bfi(6)).to_f64() * gamma_r(s) / gamma_r(s - 0.5);
        let want = pref * 2.0 * s * (-0.125);
        assert!((h / want - 1.0).abs() < 1e-14, "{h} vs {want}");
        // agrees with the double-precision four-term assembly
        let hp = TorusPerturbation::CosMode { e: nalgebra::DMatrix::from_element(1, 1, 1.0), m: vec![3] };
        let lem = crate::torus::hessian_lemma31(&TorusProblem::flat(1, 64, false), &hp, s.into()).unwrap().value;
        assert!((lem / h - 1.0).norm() < 1e-6, "{lem} vs {h}");
    }

    #[test]
    fn synthetic_recovery() {
        let ms: Vec<f64> = (8..=64).map(|m| m as f64).collect();
        let p = -0.6;
        let data: Vec<BigFloat> = ms.iter().map(|&m| {
            let bm = bf(m);
            bfi(3) * bm * bm - bfi(2) * bm + dv(bfi(1), bfi(2)) + dv(bfi(1), bfi(4) * bm) + dv(bfi(7), bfi(10)) * bm.pow(&bf(p))
        }).collect();
        let fit = fit_exponent_model(&ms, &data, p, INTEGER_TERMS).unwrap();
        assert!((fit.u - 0.7).abs() < 1e-12, "{fit:?}");
        assert!((fit.c[0] - 3.0).abs() < 1e-14);
        // without the column the residual is far above the noise floor
        assert!(fit.rel_residual < 1e-25 && fit.rel_residual_without > 1e-9, "{fit:?}");
    }

    #[test]
    fn circle_prediction_vanishes() {
        // in n = 1 the assembled u_s is identically zero, and the Hessian does not see m
        assert!(predicted_nonlocal_coefficient(1.0, 0.8).unwrap().abs() < 1e-14);
        let c = nonlocal_check(&TorusProblem::flat(1, 0, false), 0.1, 0.8, &[8, 9, 10, 11, 12, 13, 14, 15, 16]).unwrap();
        assert!(c.rel_deviation < 0.05, "{c:?}");
        let h0 = c.hessians[0].1;
        assert!(c.hessians.iter().all(|(_, h)| ((h - h0) / h0).abs() < 1e-20));
    }

    #[test]
    fn integer_exponent_rejected() {
        let ms = [1.0; 10];
        let data = vec![num_bigfloat::ONE; 10];
        assert!(fit_exponent_model(&ms, &data, -1.0, 3).is_err());
        assert!(nonlocal_exponent_fit(&TorusProblem::flat(2, 0, false), 1.0, 1.8, &[1, 2]).is_err());
    }
}
