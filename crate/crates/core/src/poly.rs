//! Dense univariate polynomials over ℚ and reduced rational functions of S.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // very large num/den: scale down by the bit length difference
        let nb = r.numer().bits() as i64;
        let db = r.denom().bits() as i64;
        let shift = (nb.max(db) - 900).max(0) as u64;
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Parses "p/q", "p" or a short decimal such as "-0.25" into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| Error::Parse(format!("bad rational '{s}'")))?;
        let q: BigInt = q.trim().parse().map_err(|_| Error::Parse(format!("bad rational '{s}'")))?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in '{s}'")));
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.trim_start().starts_with('-');
        let digits = format!("{}{}", ip.trim_start_matches(['-', '+']), fp);
        let n: BigInt = digits.parse().map_err(|_| Error::Parse(format!("bad decimal '{s}'")))?;
        let d = num_traits::pow(BigInt::from(10), fp.len());
        let r = BigRational::new(n, d);
        return Ok(if neg { -r } else { r });
    }
    let n: BigInt = s.parse().map_err(|_| Error::Parse(format!("bad rational '{s}'")))?;
    Ok(BigRational::from_integer(n))
}

pub fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Polynomial in S with rational coefficients, ascending powers, no trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Poly {
    c: Vec<BigRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { c: Vec::new() }
    }
    pub fn one() -> Self {
        Poly::constant(BigRational::one())
    }
    pub fn constant(a: BigRational) -> Self {
        Poly::from_coeffs(vec![a])
    }
    /// `a·S + b`
    pub fn linear(a: BigRational, b: BigRational) -> Self {
        Poly::from_coeffs(vec![b, a])
    }
    pub fn s() -> Self {
        Poly::linear(BigRational::one(), BigRational::zero())
    }
    pub fn from_coeffs(mut c: Vec<BigRational>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        Poly { c }
    }
    pub fn from_i64(c: &[i64]) -> Self {
        Poly::from_coeffs(c.iter().map(|&x| rat_int(x)).collect())
    }
    pub fn coeffs(&self) -> &[BigRational] {
        &self.c
    }
    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }
    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }
    pub fn lead(&self) -> BigRational {
        self.c.last().cloned().unwrap_or_else(BigRational::zero)
    }
    pub fn coeff(&self, i: usize) -> BigRational {
        self.c.get(i).cloned().unwrap_or_else(BigRational::zero)
    }
    pub fn scale(&self, a: &BigRational) -> Poly {
        if a.is_zero() {
            return Poly::zero();
        }
        Poly { c: self.c.iter().map(|x| x * a).collect() }
    }
    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let l = self.lead();
        self.scale(&(BigRational::one() / l))
    }
    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for a in self.c.iter().rev() {
            acc = acc * x + a;
        }
        acc
    }
    pub fn eval_c(&self, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in self.c.iter().rev() {
            acc = acc * x + rat_to_f64(a);
        }
        acc
    }
    pub fn pow(&self, k: u32) -> Poly {
        let mut r = Poly::one();
        for _ in 0..k {
            r = &r * self;
        }
        r
    }
    /// Euclidean division: returns (quotient, remainder).
    pub fn divrem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let dd = d.c.len() - 1;
        let dl = d.lead();
        let mut r = self.c.clone();
        if r.len() < d.c.len() {
            return (Poly::zero(), self.clone());
        }
        let mut q = vec![BigRational::zero(); r.len() - dd];
        for i in (0..q.len()).rev() {
            let f = &r[i + dd] / &dl;
            if !f.is_zero() {
                for (j, dj) in d.c.iter().enumerate() {
                    r[i + j] -= &f * dj;
                }
            }
            q[i] = f;
        }
        (Poly::from_coeffs(q), Poly::from_coeffs(r))
    }
    /// Monic gcd (zero if both are zero).
    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        let (mut x, mut y) = (a.clone(), b.clone());
        while !y.is_zero() {
            let (_, r) = x.divrem(&y);
            x = y;
            y = r;
        }
        x.monic()
    }
    /// Multiplicity of the root `x0`.
    pub fn root_multiplicity(&self, x0: &BigRational) -> usize {
        if self.is_zero() {
            return usize::MAX;
        }
        let lin = Poly::linear(BigRational::one(), -x0.clone());
        let mut p = self.clone();
        let mut m = 0;
        loop {
            let (q, r) = p.divrem(&lin);
            if !r.is_zero() {
                return m;
            }
            m += 1;
            p = q;
        }
    }
    /// Rational roots (without multiplicity), by the rational root theorem.
    /// Intended for the small integer-coefficient polynomials produced here.
    pub fn rational_roots(&self) -> Vec<BigRational> {
        let Some(deg) = self.degree() else { return Vec::new() };
        if deg == 0 {
            return Vec::new();
        }
        // clear denominators
        let l = self.c.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let ints: Vec<BigInt> = self.c.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect();
        let mut roots = Vec::new();
        let mut low = 0;
        while ints[low].is_zero() {
            low += 1;
        }
        if low > 0 {
            roots.push(BigRational::zero());
        }
        let a0 = ints[low].abs();
        let an = ints[deg].abs();
        let divs = |n: &BigInt| -> Vec<BigInt> {
            let n64 = n.to_i64().unwrap_or(0);
            if n64 == 0 || n64 > 1_000_000_000 {
                return vec![BigInt::one()];
            }
            let mut v = Vec::new();
            let mut i = 1i64;
            while i * i <= n64 {
                if n64 % i == 0 {
                    v.push(BigInt::from(i));
                    if i != n64 / i {
                        v.push(BigInt::from(n64 / i));
                    }
                }
                i += 1;
            }
            v
        };
        for p in divs(&a0) {
            for q in divs(&an) {
                for sgn in [1, -1] {
                    let cand = BigRational::new(p.clone() * sgn, q.clone());
                    if !roots.contains(&cand) && self.eval(&cand).is_zero() {
                        roots.push(cand);
                    }
                }
            }
        }
        roots.sort();
        roots
    }
    pub fn to_strings(&self) -> Vec<String> {
        self.c.iter().map(fmt_rational).collect()
    }
    pub fn from_strings(v: &[String]) -> Result<Poly> {
        Ok(Poly::from_coeffs(v.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?))
    }
    /// Human-readable form in the variable `var`, highest power first.
    pub fn render(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, a) in self.c.iter().enumerate().rev() {
            if a.is_zero() {
                continue;
            }
            let neg = a.is_negative();
            let mag = a.abs();
            if out.is_empty() {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mono = match i {
                0 => String::new(),
                1 => var.to_string(),
                _ => format!("{var}^{i}"),
            };
            if mono.is_empty() {
                out.push_str(&fmt_rational(&mag));
            } else if mag.is_one() {
                out.push_str(&mono);
            } else if mag.is_integer() {
                out.push_str(&format!("{}{}", fmt_rational(&mag), mono));
            } else {
                out.push_str(&format!("({}){}", fmt_rational(&mag), mono));
            }
        }
        out
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::from_coeffs((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }
}
impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::from_coeffs((0..n).map(|i| self.coeff(i) - o.coeff(i)).collect())
    }
}
impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly { c: self.c.iter().map(|x| -x).collect() }
    }
}
impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![BigRational::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::from_coeffs(c)
    }
}

/// Exact rational function of S in lowest terms (monic denominator), together
/// with the pole set of the expression it was built from, before cancellation.
#[derive(Clone, Debug)]
pub struct RationalInS {
    num: Poly,
    den: Poly,
    pre_poles: Vec<BigRational>,
}

impl PartialEq for RationalInS {
    fn eq(&self, o: &Self) -> bool {
        self.num == o.num && self.den == o.den
    }
}
impl Eq for RationalInS {}

impl RationalInS {
    pub fn zero() -> Self {
        RationalInS { num: Poly::zero(), den: Poly::one(), pre_poles: Vec::new() }
    }
    pub fn one() -> Self {
        RationalInS::from_poly(Poly::one())
    }
    pub fn constant(a: BigRational) -> Self {
        RationalInS::from_poly(Poly::constant(a))
    }
    pub fn from_i64(n: i64, d: i64) -> Self {
        RationalInS::constant(rat(n, d))
    }
    pub fn from_poly(p: Poly) -> Self {
        RationalInS { num: p, den: Poly::one(), pre_poles: Vec::new() }
    }
    /// Builds num/den; `pre_poles` records the pole candidates of the unreduced form
    /// (extended by the rational roots of `den`).
    pub fn new(num: Poly, den: Poly, mut pre_poles: Vec<BigRational>) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Invalid("rational function with zero denominator".into()));
        }
        for r in den.rational_roots() {
            if !pre_poles.contains(&r) {
                pre_poles.push(r);
            }
        }
        pre_poles.sort();
        pre_poles.dedup();
        Ok(RationalInS { num, den, pre_poles }.reduced())
    }
    fn reduced(mut self) -> Self {
        if self.num.is_zero() {
            self.den = Poly::one();
            return self;
        }
        let g = Poly::gcd(&self.num, &self.den);
        if g.degree().unwrap_or(0) > 0 {
            self.num = self.num.divrem(&g).0;
            self.den = self.den.divrem(&g).0;
        }
        let l = self.den.lead();
        self.num = self.num.scale(&(BigRational::one() / &l));
        self.den = self.den.monic();
        self
    }
    pub fn num(&self) -> &Poly {
        &self.num
    }
    pub fn den(&self) -> &Poly {
        &self.den
    }
    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
    pub fn is_polynomial(&self) -> bool {
        self.den.degree() == Some(0)
    }
    /// Pole candidates of the unreduced expression.
    pub fn pre_reduction_poles(&self) -> &[BigRational] {
        &self.pre_poles
    }
    /// Poles that survive reduction (all rational by construction).
    pub fn poles(&self) -> Vec<BigRational> {
        let mut v: Vec<BigRational> = self.pre_poles.iter().filter(|c| self.den.eval(c).is_zero()).cloned().collect();
        for r in self.den.rational_roots() {
            if !v.contains(&r) {
                v.push(r);
            }
        }
        v.sort();
        v
    }
    /// Order of the function at S0: positive = pole order, negative = zero order.
    pub fn order_at(&self, s0: &BigRational) -> i64 {
        if self.is_zero() {
            return i64::MIN;
        }
        self.den.root_multiplicity(s0) as i64 - self.num.root_multiplicity(s0) as i64
    }
    pub fn scale(&self, a: &BigRational) -> Self {
        let mut r = self.clone();
        r.num = r.num.scale(a);
        if r.num.is_zero() {
            r.den = Poly::one();
        }
        r
    }
    pub fn eval(&self, s: &BigRational) -> Result<BigRational> {
        let d = self.den.eval(s);
        if d.is_zero() {
            return Err(Error::Pole(format!("coefficient has a pole at S = {}", fmt_rational(s))));
        }
        Ok(self.num.eval(s) / d)
    }
    pub fn eval_c(&self, s: Complex64) -> Result<Complex64> {
        let d = self.den.eval_c(s);
        if d.norm() == 0.0 {
            return Err(Error::Pole(format!("coefficient has a pole at S = {s}")));
        }
        Ok(self.num.eval_c(s) / d)
    }
    fn merge_poles(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
        let mut v: Vec<BigRational> = a.iter().chain(b.iter()).cloned().collect();
        v.sort();
        v.dedup();
        v
    }
    pub fn render(&self) -> String {
        if self.is_polynomial() {
            self.num.render("S")
        } else {
            format!("({})/({})", self.num.render("S"), self.den.render("S"))
        }
    }
}

impl Add for &RationalInS {
    type Output = RationalInS;
    fn add(self, o: &RationalInS) -> RationalInS {
        let pre = RationalInS::merge_poles(&self.pre_poles, &o.pre_poles);
        if self.den == o.den {
            return RationalInS { num: &self.num + &o.num, den: self.den.clone(), pre_poles: pre }.reduced();
        }
        let g = Poly::gcd(&self.den, &o.den);
        let a = self.den.divrem(&g).0;
        let b = o.den.divrem(&g).0;
        let num = &(&self.num * &b) + &(&o.num * &a);
        let den = &(&a * &b) * &g;
        RationalInS { num, den, pre_poles: pre }.reduced()
    }
}
impl Neg for &RationalInS {
    type Output = RationalInS;
    fn neg(self) -> RationalInS {
        RationalInS { num: -&self.num, den: self.den.clone(), pre_poles: self.pre_poles.clone() }
    }
}
impl Sub for &RationalInS {
    type Output = RationalInS;
    fn sub(self, o: &RationalInS) -> RationalInS {
        self + &(-o)
    }
}
impl Mul for &RationalInS {
    type Output = RationalInS;
    fn mul(self, o: &RationalInS) -> RationalInS {
        let pre = RationalInS::merge_poles(&self.pre_poles, &o.pre_poles);
        RationalInS { num: &self.num * &o.num, den: &self.den * &o.den, pre_poles: pre }.reduced()
    }
}

impl fmt::Display for RationalInS {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// Wire form of a rational function: ascending coefficient lists as "p/q" strings.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RationalJson {
    pub numerator: Vec<String>,
    pub denominator: Vec<String>,
}

impl From<&RationalInS> for RationalJson {
    fn from(r: &RationalInS) -> Self {
        RationalJson { numerator: r.num.to_strings(), denominator: r.den.to_strings() }
    }
}

impl TryFrom<&RationalJson> for RationalInS {
    type Error = Error;
    fn try_from(j: &RationalJson) -> Result<Self> {
        RationalInS::new(Poly::from_strings(&j.numerator)?, Poly::from_strings(&j.denominator)?, Vec::new())
    }
}
