//! Ratios of Gamma functions with integer-compatible offsets, reduced to
//! rational functions of S times a power of the universal constant
//! C(s) = (4π)^{-n/2} Γ(1−S)² / Γ(2−2S).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{fmt_rational, rat, rat_int, Poly, RationalInS};
use crate::special;

/// Γ(a·S + b)^exp.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaFactor {
    pub a: i64,
    pub b: BigRational,
    pub exp: i32,
}

impl GammaFactor {
    pub fn new(a: i64, b: BigRational, exp: i32) -> Self {
        GammaFactor { a, b, exp }
    }
    pub fn int(a: i64, b: i64, exp: i32) -> Self {
        GammaFactor { a, b: rat_int(b), exp }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GammaRatio {
    pub factors: Vec<GammaFactor>,
}

impl GammaRatio {
    pub fn new(factors: Vec<GammaFactor>) -> Self {
        GammaRatio { factors }
    }

    /// Numerical value at S (Lanczos); used only by cross-checks.
    pub fn eval_numeric(&self, s: Complex64) -> Complex64 {
        let mut v = Complex64::new(1.0, 0.0);
        for f in &self.factors {
            let z = s * f.a as f64 + crate::poly::rat_to_f64(&f.b);
            let g = if f.exp > 0 { special::gamma(z) } else { special::rgamma(z) };
            for _ in 0..f.exp.unsigned_abs() {
                v *= g;
            }
        }
        v
    }

    pub fn render(&self) -> String {
        let mut num = Vec::new();
        let mut den = Vec::new();
        for f in &self.factors {
            let arg = render_linear(f.a, &f.b);
            let t = if f.exp.abs() == 1 { format!("Γ({arg})") } else { format!("Γ({arg})^{}", f.exp.abs()) };
            if f.exp > 0 {
                num.push(t)
            } else {
                den.push(t)
            }
        }
        let n = if num.is_empty() { "1".to_string() } else { num.join("") };
        if den.is_empty() {
            n
        } else {
            format!("{n}/({})", den.join(""))
        }
    }
}

fn render_linear(a: i64, b: &BigRational) -> String {
    let sa = match a {
        1 => "S".to_string(),
        -1 => "-S".to_string(),
        _ => format!("{a}S"),
    };
    if b.is_zero() {
        sa
    } else if b.is_negative() {
        format!("{sa}-{}", fmt_rational(&-b))
    } else {
        format!("{sa}+{}", fmt_rational(b))
    }
}

fn frac_part(b: &BigRational) -> BigRational {
    b - b.floor()
}

/// Reduces `g` to `R(S) · ((4π)^{n/2} C(s))^{c_power}`.
///
/// Each factor is moved along its Pochhammer chain to a reference Gamma of its
/// class; the reference Gammas left over must be exactly a power of
/// Γ(1−S)²/Γ(2−2S).
pub fn pochhammer_reduce(g: &GammaRatio) -> Result<(RationalInS, i32)> {
    let mut num = Poly::one();
    let mut den = Poly::one();
    let mut pre_poles: Vec<BigRational> = Vec::new();
    // class (a, frac(b)) -> net exponent of the reference Gamma
    let mut net: BTreeMap<(i64, BigRational), i32> = BTreeMap::new();

    for f in &g.factors {
        if ![-2, -1, 1, 2].contains(&f.a) {
            return Err(Error::IrreducibleRatio(format!("multiplier {} not in ±1, ±2", f.a)));
        }
        if f.exp == 0 {
            continue;
        }
        let fr = frac_part(&f.b);
        let reference = match (f.a, fr.is_zero()) {
            (-1, true) => rat_int(1),
            (-2, true) => rat_int(2),
            _ => fr.clone(),
        };
        let k = (&f.b - &reference).to_integer().to_i64().ok_or_else(|| Error::IrreducibleRatio("offset too large".into()))?;
        *net.entry((f.a, fr)).or_insert(0) += f.exp;
        // Γ(x + k) = Γ(x) Π_{i=0}^{k-1} (x+i)   (k ≥ 0)
        // Γ(x + k) = Γ(x) / Π_{i=1}^{-k} (x−i)  (k < 0),    x = aS + reference
        let mut chain = Poly::one();
        let lin = |i: i64| Poly::linear(rat_int(f.a), &reference + rat_int(i));
        if k >= 0 {
            for i in 0..k {
                chain = &chain * &lin(i);
            }
        } else {
            for i in 1..=(-k) {
                chain = &chain * &lin(-i);
            }
        }
        let chain_in_num = (k >= 0) == (f.exp > 0);
        for _ in 0..f.exp.unsigned_abs() {
            if chain_in_num {
                num = &num * &chain;
            } else {
                den = &den * &chain;
                let roots: Vec<BigRational> = if k >= 0 {
                    (0..k).map(|i| -(&reference + rat_int(i)) / rat_int(f.a)).collect()
                } else {
                    (1..=(-k)).map(|i| -(&reference - rat_int(i)) / rat_int(f.a)).collect()
                };
                pre_poles.extend(roots);
            }
        }
    }

    let mut c_power: Option<i32> = None;
    let e1 = net.get(&(-1, BigRational::zero())).copied().unwrap_or(0);
    let e2 = net.get(&(-2, BigRational::zero())).copied().unwrap_or(0);
    for ((a, fr), e) in &net {
        let is_c_class = fr.is_zero() && (*a == -1 || *a == -2);
        if !is_c_class && *e != 0 {
            return Err(Error::IrreducibleRatio(format!(
                "unbalanced Γ({}) class with net exponent {e}",
                render_linear(*a, fr)
            )));
        }
    }
    if e1 % 2 != 0 || e2 != -e1 / 2 {
        return Err(Error::IrreducibleRatio(format!(
            "reference content Γ(1−S)^{e1} Γ(2−2S)^{e2} is not a power of Γ(1−S)²/Γ(2−2S)"
        )));
    }
    if e1 != 0 || e2 != 0 {
        c_power = Some(e1 / 2);
    }
    let r = RationalInS::new(num, den, pre_poles)?;
    Ok((r, c_power.unwrap_or(0)))
}

/// Exact value of (1/Γ(S)) ∬ (u+v)^{S−r} u^p v^q G du dv, as coeff · C(s) · |ξ|^{n−2s+e}.
#[derive(Clone, Debug, PartialEq)]
pub struct UvCoefficient {
    pub coeff: RationalInS,
    pub c_power: i32,
    pub norm_offset: i64,
}

/// The Gamma ratio Γ(S−r+p+q+2)Γ(−S+r−p−1)Γ(−S+r−q−1)/(Γ(S)Γ(−2S+2r−p−q−2)).
pub fn uv_gamma_ratio(p: i64, q: i64, r: i64) -> GammaRatio {
    GammaRatio::new(vec![
        GammaFactor::int(1, -r + p + q + 2, 1),
        GammaFactor::int(-1, r - p - 1, 1),
        GammaFactor::int(-1, r - q - 1, 1),
        GammaFactor::int(1, 0, -1),
        GammaFactor::int(-2, 2 * r - p - q - 2, -1),
    ])
}

pub fn uv_coefficient(p: i64, q: i64, r: i64) -> Result<UvCoefficient> {
    if p < 0 || q < 0 {
        return Err(Error::Constraint(format!("u^{p} v^{q}: powers must be non-negative")));
    }
    uv_coefficient_ext(p, q, r)
}

/// As [`uv_coefficient`], also accepting r < 0 (positive powers of u+v).
pub fn uv_coefficient_ext(p: i64, q: i64, r: i64) -> Result<UvCoefficient> {
    if r > p.min(q) + 2 {
        return Err(Error::Constraint(format!("(p,q,r)=({p},{q},{r}) needs r ≤ min(p,q)+2")));
    }
    let (coeff, c_power) = pochhammer_reduce(&uv_gamma_ratio(p, q, r))?;
    Ok(UvCoefficient { coeff, c_power, norm_offset: 2 * r - 2 * p - 2 * q - 4 })
}

/// C(s) for dimension n. Returns a pole error at S ∈ ℕ⁺.
pub fn c_of_s(n: u32, s: Complex64) -> Result<Complex64> {
    let big_s = s - n as f64 / 2.0;
    let one_minus = Complex64::new(1.0, 0.0) - big_s;
    if special::is_nonpositive_integer(one_minus) {
        return Err(Error::Pole(format!("C(s) has a pole at s = {s} (S ∈ ℕ⁺)")));
    }
    let g = special::gamma(one_minus);
    let pref = (4.0 * std::f64::consts::PI).powf(-(n as f64) / 2.0);
    Ok(g * g * special::rgamma(one_minus * 2.0) * pref)
}

/// Exact form of (4π)^{n/2} C(s) for S an integer or half-integer:
/// returns (q, k) meaning q · π^k.
pub fn c_exact(big_s: &BigRational) -> Result<Option<(BigRational, u32)>> {
    let two_s = big_s * rat_int(2);
    if !two_s.is_integer() {
        return Ok(None);
    }
    let fact = |m: i64| -> BigRational {
        let mut f = BigInt::one();
        for i in 2..=m {
            f *= i;
        }
        BigRational::from_integer(f)
    };
    if big_s.is_integer() {
        let sv = big_s.to_integer().to_i64().unwrap();
        if sv >= 1 {
            return Err(Error::Pole(format!("C has a pole at S = {sv}")));
        }
        // Γ(1−S)² / Γ(2−2S) = ((−S)!)² / (1−2S)!
        let a = fact(-sv);
        return Ok(Some((&a * &a / fact(1 - 2 * sv), 0)));
    }
    // S = m + 1/2: Γ(1−S) = Γ(1/2 − m) = √π · q_m
    let m = (big_s - rat(1, 2)).to_integer().to_i64().unwrap();
    let two_minus = 2 - 2 * m - 1; // 2 − 2S = 1 − 2m
    if two_minus <= 0 {
        return Ok(Some((BigRational::zero(), 0)));
    }
    // Γ(1/2 − m)/√π: for m ≤ 0 it is (1/2)_{−m}; for m > 0 it is 1/Π_{i=1}^{m}(1/2 − i)
    let mut q = BigRational::one();
    if m <= 0 {
        for i in 0..(-m) {
            q *= rat(1, 2) + rat_int(i);
        }
    } else {
        for i in 1..=m {
            q /= rat(1, 2) - rat_int(i);
        }
    }
    Ok(Some((&q * &q / fact(two_minus - 1), 1)))
}

/// Pole order of ((4π)^{n/2} C)^1 at S0: 1 at S0 ∈ ℕ⁺, −1 (a zero) at S0 ∈ {3/2, 5/2, …}.
pub fn c_order_at(s0: &BigRational) -> i64 {
    if s0.is_integer() && s0 >= &rat_int(1) {
        1
    } else if (s0 * rat_int(2)).is_integer() && s0 >= &rat(3, 2) {
        -1
    } else {
        0
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PoleReport {
    /// candidate poles before cancellation, as s-values
    pub pre_reduction: Vec<String>,
    /// genuine poles of R(S)·C(s)^k, as s-values, with their orders
    pub post_reduction: Vec<(String, i64)>,
    /// post-reduction pole locations as exact S-offsets
    #[serde(skip)]
    pub post_s_offsets: Vec<BigRational>,
}

/// Poles in s of coeff·C(s)^{c_power} for dimension n, searched up to S ≤ s_max_offset.
pub fn pole_locations(coeff: &RationalInS, c_power: i32, n: u32, s_max_offset: i64) -> PoleReport {
    let half_n = rat(n as i64, 2);
    let mut pre: Vec<BigRational> = coeff.pre_reduction_poles().to_vec();
    let mut candidates: Vec<BigRational> = coeff.poles();
    if c_power != 0 {
        for k in 2..=(2 * s_max_offset) {
            let s0 = rat(k, 2);
            candidates.push(s0.clone());
            let gamma_pole = s0.is_integer(); // Γ(1−S) poles (C > 0) or Γ(2−2S) poles (C < 0)
            if (c_power > 0 && gamma_pole) || (c_power < 0) {
                pre.push(s0);
            }
        }
    }
    candidates.sort();
    candidates.dedup();
    pre.sort();
    pre.dedup();
    let mut post = Vec::new();
    let mut offs = Vec::new();
    for s0 in candidates {
        if coeff.is_zero() {
            break;
        }
        let ord = coeff.order_at(&s0) + c_power as i64 * c_order_at(&s0);
        if ord > 0 {
            post.push((fmt_rational(&(&half_n + &s0)), ord));
            offs.push(s0);
        }
    }
    PoleReport {
        pre_reduction: pre.iter().map(|x| fmt_rational(&(&half_n + x))).collect(),
        post_reduction: post,
        post_s_offsets: offs,
    }
}

/// True when every post-reduction pole lies in n/2 + ℕ⁺.
pub fn poles_in_half_n_plus_naturals(r: &PoleReport) -> bool {
    r.post_s_offsets.iter().all(|s0| s0.is_integer() && s0 >= &rat_int(1))
}

pub fn eval_rational(expr: &RationalInS, s: Complex64) -> Result<Complex64> {
    expr.eval_c(s)
}

pub fn eval_rational_exact(expr: &RationalInS, s: &BigRational) -> Result<BigRational> {
    expr.eval(s)
}

/// gcd of integers, used by tests building random ratios.
pub fn igcd(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[i64]) -> Poly {
        Poly::from_i64(c)
    }

    #[test]
    fn two_step_pochhammer() {
        let g = GammaRatio::new(vec![GammaFactor::int(1, 2, 1), GammaFactor::int(1, 0, -1)]);
        let (r, k) = pochhammer_reduce(&g).unwrap();
        assert_eq!(k, 0);
        assert_eq!(r.num(), &poly(&[0, 1, 1]));
    }

    #[test]
    fn irreducible_is_refused() {
        let g = GammaRatio::new(vec![GammaFactor::int(1, 2, 1)]);
        assert!(matches!(pochhammer_reduce(&g), Err(Error::IrreducibleRatio(_))));
        let g = GammaRatio::new(vec![GammaFactor::new(-1, rat(1, 2), 2), GammaFactor::int(-2, 2, -1)]);
        assert!(matches!(pochhammer_reduce(&g), Err(Error::IrreducibleRatio(_))));
        let g = GammaRatio::new(vec![GammaFactor::int(-1, 1, 1), GammaFactor::int(-2, 2, -1)]);
        assert!(matches!(pochhammer_reduce(&g), Err(Error::IrreducibleRatio(_))));
    }

    #[test]
    fn hand_checked_uv_values() {
        let cases: [((i64, i64, i64), &[i64]); 4] = [
            ((0, 0, 0), &[-4, 0, 16]),
            ((0, 1, 1), &[-2, 0, 8]),
            ((0, 0, 1), &[-2, 4]),
            ((2, 2, 4), &[0, 1, 1]),
        ];
        for ((p, q, r), want) in cases {
            let u = uv_coefficient(p, q, r).unwrap();
            assert_eq!(u.c_power, 1);
            assert!(u.coeff.is_polynomial());
            assert_eq!(u.coeff.num(), &poly(want), "({p},{q},{r})");
        }
        assert!(matches!(uv_coefficient(0, 0, 3), Err(Error::Constraint(_))));
    }

    #[test]
    fn c_values() {
        let pi = std::f64::consts::PI;
        let v = c_of_s(2, Complex64::new(1.0, 0.0)).unwrap();
        assert!((v.re - 1.0 / (4.0 * pi)).abs() < 1e-15);
        let v = c_of_s(1, Complex64::new(0.5, 0.0)).unwrap();
        assert!((v.re - (4.0 * pi).powf(-0.5)).abs() < 1e-15);
        assert!(c_of_s(2, Complex64::new(2.0, 0.0)).is_err());
        // zero at S = 3/2
        assert_eq!(c_of_s(1, Complex64::new(2.0, 0.0)).unwrap().norm(), 0.0);
        // exact forms agree with the numeric ones
        for k in -6..=4 {
            let s0 = rat(k, 2);
            if k >= 2 && k % 2 == 0 {
                assert!(c_exact(&s0).is_err());
                continue;
            }
            let (q, pk) = c_exact(&s0).unwrap().unwrap();
            let exact = crate::poly::rat_to_f64(&q) * pi.powi(pk as i32);
            let num = c_of_s(0, Complex64::new(k as f64 / 2.0, 0.0)).unwrap().re;
            assert!((exact - num).abs() <= 1e-13 * num.abs().max(1e-300), "S={k}/2");
        }
    }

    #[test]
    fn pole_report_for_base_integral() {
        let u = uv_coefficient(0, 0, 0).unwrap();
        let rep = pole_locations(&u.coeff, u.c_power, 3, 4);
        assert!(poles_in_half_n_plus_naturals(&rep));
        assert_eq!(rep.post_reduction.first().unwrap().0, "5/2");
        let rep = pole_locations(&RationalInS::from_poly(poly(&[1, 1])), 0, 3, 4);
        assert!(rep.post_reduction.is_empty());
    }
}
