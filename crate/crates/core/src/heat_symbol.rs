//! Gaussian symbol calculus: the polynomials P(∂^α, t, w), ξ-derivatives of the
//! Gaussian G = (4π)^{−n/2}(u+v)^{−n/2} exp(−|ξ|² uv/(u+v)), the σ-terms, their
//! closed-form (u,v) integrals and the resulting u_s coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::expr::{canonicalize, idx, normalize_monomial, IndexSymbol, MultiIndex, TensorExpr, TensorTerm};
use crate::gamma::{uv_coefficient, uv_coefficient_ext};
use crate::poly::{fmt_rational, rat, rat_int, Poly, RationalInS};

type Delta = (IndexSymbol, IndexSymbol);

/// Gaussian rational re + i·im; the σ-terms carry powers of i until integration.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct GaussRat {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRat {
    pub fn real(x: BigRational) -> Self {
        GaussRat { re: x, im: BigRational::zero() }
    }
    pub fn i_pow(k: u32) -> Self {
        let (re, im) = match k % 4 {
            0 => (1, 0),
            1 => (0, 1),
            2 => (-1, 0),
            _ => (0, -1),
        };
        GaussRat { re: rat_int(re), im: rat_int(im) }
    }
    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    pub fn add(&self, o: &GaussRat) -> GaussRat {
        GaussRat { re: &self.re + &o.re, im: &self.im + &o.im }
    }
    pub fn mul(&self, o: &GaussRat) -> GaussRat {
        GaussRat { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re }
    }
    pub fn scale(&self, a: &BigRational) -> GaussRat {
        GaussRat { re: &self.re * a, im: &self.im * a }
    }
}

impl fmt::Display for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", fmt_rational(&self.re)),
            (true, false) => write!(f, "{}i", fmt_rational(&self.im)),
            _ => write!(f, "({} + {}i)", fmt_rational(&self.re), fmt_rational(&self.im)),
        }
    }
}

/// One term coeff · t^{t_power} · Π w · Π δ of P(∂^α, t, w).
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteTerm {
    pub coeff: BigRational,
    pub t_power: i64,
    pub w: Vec<IndexSymbol>,
    pub deltas: Vec<Delta>,
}

/// P(∂^α, t, w) = e^{|w|²/4t} ∂_w^α e^{−|w|²/4t}.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteP {
    pub terms: Vec<HermiteTerm>,
}

impl HermiteP {
    fn canonical(terms: Vec<HermiteTerm>) -> HermiteP {
        let mut acc: BTreeMap<(i64, Vec<IndexSymbol>, Vec<Delta>), BigRational> = BTreeMap::new();
        for mut t in terms {
            if t.coeff.is_zero() || !normalize_monomial(&mut t.w, &mut t.deltas) {
                continue;
            }
            *acc.entry((t.t_power, t.w, t.deltas)).or_insert_with(BigRational::zero) += t.coeff;
        }
        HermiteP {
            terms: acc
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|((t_power, w, deltas), coeff)| HermiteTerm { coeff, t_power, w, deltas })
                .collect(),
        }
    }

    /// (∂_{w_j} − w_j/(2t)) applied to self.
    pub fn raise(&self, j: &IndexSymbol) -> HermiteP {
        let mut out = Vec::new();
        for t in &self.terms {
            for pos in 0..t.w.len() {
                let mut w = t.w.clone();
                let x = w.remove(pos);
                let mut deltas = t.deltas.clone();
                deltas.push((x, j.clone()));
                out.push(HermiteTerm { coeff: t.coeff.clone(), t_power: t.t_power, w, deltas });
            }
            let mut w = t.w.clone();
            w.push(j.clone());
            out.push(HermiteTerm { coeff: -&t.coeff / rat_int(2), t_power: t.t_power - 1, w, deltas: t.deltas.clone() });
        }
        HermiteP::canonical(out)
    }
}

/// P(∂^α, t, w) for α given as an index list (abstract or concrete).
pub fn hermite_p(alpha: &[IndexSymbol]) -> HermiteP {
    let mut p = HermiteP { terms: vec![HermiteTerm { coeff: BigRational::one(), t_power: 0, w: vec![], deltas: vec![] }] };
    for j in alpha {
        p = p.raise(j);
    }
    p
}

pub fn hermite_p_multi(alpha: &MultiIndex) -> HermiteP {
    hermite_p(&alpha.to_indices())
}

/// coeff · u^p v^q (u+v)^{−r} · Π ξ · Π δ · G. Powers may be negative before canonicalization.
#[derive(Clone, Debug, PartialEq)]
pub struct UVTerm {
    pub coeff: GaussRat,
    pub p: i64,
    pub q: i64,
    pub r: i64,
    pub xi: Vec<IndexSymbol>,
    pub deltas: Vec<Delta>,
}

impl UVTerm {
    pub fn g() -> Self {
        UVTerm { coeff: GaussRat::real(BigRational::one()), p: 0, q: 0, r: 0, xi: vec![], deltas: vec![] }
    }
    pub fn real(c: BigRational, p: i64, q: i64, r: i64, xi: Vec<IndexSymbol>, deltas: Vec<Delta>) -> Self {
        UVTerm { coeff: GaussRat::real(c), p, q, r, xi, deltas }
    }
    /// Homogeneity degree in (u, v).
    pub fn degree(&self) -> i64 {
        self.p + self.q - self.r
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct UVExpr {
    pub terms: Vec<UVTerm>,
}

type Shape = (Vec<IndexSymbol>, Vec<Delta>);

/// Polynomial in τ = u/(u+v) with Gaussian-rational coefficients (real and imaginary parts).
#[derive(Clone)]
struct TauPoly {
    re: Poly,
    im: Poly,
}

fn tau_monomial(p: usize, q: usize) -> Poly {
    // τ^p (1−τ)^q
    let one_minus = Poly::from_i64(&[1, -1]);
    &Poly::s().pow(p as u32) * &one_minus.pow(q as u32)
}

impl UVExpr {
    pub fn from_terms(terms: Vec<UVTerm>) -> Self {
        UVExpr { terms }
    }
    pub fn g() -> Self {
        UVExpr { terms: vec![UVTerm::g()] }
    }
    pub fn add(&self, o: &UVExpr) -> UVExpr {
        let mut t = self.terms.clone();
        t.extend(o.terms.iter().cloned());
        UVExpr { terms: t }
    }

    /// Merges identical monomials only (no rewriting of u, v, u+v powers).
    pub fn merged(&self) -> UVExpr {
        let mut acc: BTreeMap<(i64, i64, i64, Vec<IndexSymbol>, Vec<Delta>), GaussRat> = BTreeMap::new();
        for t in &self.terms {
            let (mut xi, mut d) = (t.xi.clone(), t.deltas.clone());
            if t.coeff.is_zero() || !normalize_monomial(&mut xi, &mut d) {
                continue;
            }
            let e = acc.entry((t.p, t.q, t.r, xi, d)).or_default();
            *e = e.add(&t.coeff);
        }
        UVExpr {
            terms: acc
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|((p, q, r, xi, deltas), coeff)| UVTerm { coeff, p, q, r, xi, deltas })
                .collect(),
        }
    }

    /// Canonical form. Terms with the same tensor shape and (u,v)-degree d are
    /// rewritten as (u+v)^d f(τ) and f is expanded in the basis
    /// {τ^j : 0 ≤ j ≤ m} ∪ {τ^m (1−τ)^k : 1 ≤ k ≤ m}, m = d + 2, whose members all
    /// satisfy r ≤ min(p,q) + 2. Groups that do not fit are left as merged monomials.
    pub fn canonical(&self) -> UVExpr {
        let merged = self.merged();
        let mut groups: BTreeMap<(Shape, i64), Vec<UVTerm>> = BTreeMap::new();
        for t in merged.terms {
            groups.entry(((t.xi.clone(), t.deltas.clone()), t.degree())).or_default().push(t);
        }
        let mut out = Vec::new();
        for (((xi, deltas), d), terms) in groups {
            match Self::basis_expand(&terms, d) {
                Some(list) => {
                    for (p, q, c) in list {
                        out.push(UVTerm { coeff: c, p, q, r: p + q - d, xi: xi.clone(), deltas: deltas.clone() });
                    }
                }
                None => out.extend(terms),
            }
        }
        UVExpr { terms: out }.merged()
    }

    fn basis_expand(terms: &[UVTerm], d: i64) -> Option<Vec<(i64, i64, GaussRat)>> {
        let a = terms.iter().map(|t| (-t.p).max(0)).max().unwrap_or(0);
        let b = terms.iter().map(|t| (-t.q).max(0)).max().unwrap_or(0);
        let mut g = TauPoly { re: Poly::zero(), im: Poly::zero() };
        for t in terms {
            let m = tau_monomial((t.p + a) as usize, (t.q + b) as usize);
            g.re = &g.re + &m.scale(&t.coeff.re);
            g.im = &g.im + &m.scale(&t.coeff.im);
        }
        let div = tau_monomial(a as usize, b as usize);
        let (fr, rr) = g.re.divrem(&div);
        let (fi, ri) = g.im.divrem(&div);
        if !rr.is_zero() || !ri.is_zero() {
            return None;
        }
        let m = d + 2;
        let deg = fr.degree().max(fi.degree());
        let Some(deg) = deg else { return Some(vec![]) };
        if m < 0 || deg as i64 > 2 * m {
            return None;
        }
        let m = m as usize;
        let (mut fr, mut fi) = (fr, fi);
        let mut out = Vec::new();
        for k in (1..=m).rev() {
            // τ^m (1−τ)^k has leading coefficient (−1)^k at degree m + k
            let sign = if k % 2 == 0 { rat_int(1) } else { rat_int(-1) };
            let cr = fr.coeff(m + k) * &sign;
            let ci = fi.coeff(m + k) * &sign;
            let basis = tau_monomial(m, k);
            fr = &fr - &basis.scale(&cr);
            fi = &fi - &basis.scale(&ci);
            out.push((m as i64, k as i64, GaussRat { re: cr, im: ci }));
        }
        for j in 0..=m {
            out.push((j as i64, 0, GaussRat { re: fr.coeff(j), im: fi.coeff(j) }));
        }
        Some(out.into_iter().filter(|(_, _, c)| !c.is_zero()).collect())
    }

    /// ∂_{ξ_j}, using ∂_{ξ_j} G = −(2uv/(u+v)) ξ_j G.
    pub fn d_xi(&self, j: &IndexSymbol) -> UVExpr {
        let mut out = Vec::new();
        for t in &self.terms {
            for pos in 0..t.xi.len() {
                let mut xi = t.xi.clone();
                let x = xi.remove(pos);
                let mut deltas = t.deltas.clone();
                deltas.push((x, j.clone()));
                out.push(UVTerm { xi, deltas, ..t.clone() });
            }
            let mut xi = t.xi.clone();
            xi.push(j.clone());
            out.push(UVTerm { coeff: t.coeff.scale(&rat_int(-2)), p: t.p + 1, q: t.q + 1, r: t.r + 1, xi, deltas: t.deltas.clone() });
        }
        UVExpr { terms: out }.merged()
    }

    /// Applies P(∂^β, u or v, −i∂_ξ).
    pub fn apply_p(&self, beta: &[IndexSymbol], on_u: bool) -> UVExpr {
        let p = hermite_p(beta);
        let mut out = UVExpr::default();
        for ht in &p.terms {
            // (−i∂_ξ)^w = (−i)^{|w|} ∂_ξ^w
            let mut e = self.clone();
            for x in &ht.w {
                e = e.d_xi(x);
            }
            let factor = GaussRat::i_pow(3 * ht.w.len() as u32).scale(&ht.coeff);
            for mut t in e.terms {
                t.coeff = t.coeff.mul(&factor);
                if on_u {
                    t.p += ht.t_power;
                } else {
                    t.q += ht.t_power;
                }
                t.deltas.extend(ht.deltas.iter().cloned());
                out.terms.push(t);
            }
        }
        out.merged()
    }

    pub fn mul_const(&self, c: &GaussRat) -> UVExpr {
        UVExpr { terms: self.terms.iter().map(|t| UVTerm { coeff: t.coeff.mul(c), ..t.clone() }).collect() }.merged()
    }

    pub fn mul_xi(&self, xi: &[IndexSymbol]) -> UVExpr {
        UVExpr {
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let mut t = t.clone();
                    t.xi.extend(xi.iter().cloned());
                    t
                })
                .collect(),
        }
        .merged()
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.im.is_zero())
    }

    /// Equality after canonicalization.
    pub fn same_as(&self, o: &UVExpr) -> bool {
        let neg = o.mul_const(&GaussRat::real(rat_int(-1)));
        self.add(&neg).canonical().terms.is_empty()
    }
}

impl UVExpr {
    /// Numeric value at concrete (u, v, ξ) in dimension n. Indices must be concrete.
    pub fn eval(&self, n: usize, u: f64, v: f64, xi: &[f64]) -> Result<num_complex::Complex64> {
        let pick = |a: &IndexSymbol| -> Result<usize> {
            match a {
                IndexSymbol::Concrete(k) if (*k as usize) >= 1 && (*k as usize) <= xi.len() => Ok(*k as usize - 1),
                other => Err(Error::UnassignedIndex(other.to_string())),
            }
        };
        let w = u + v;
        let norm2: f64 = xi.iter().map(|x| x * x).sum();
        let g = (4.0 * std::f64::consts::PI * w).powf(-(n as f64) / 2.0) * (-norm2 * u * v / w).exp();
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let mut x = u.powi(t.p as i32) * v.powi(t.q as i32) * w.powi(-(t.r as i32));
            for a in &t.xi {
                x *= xi[pick(a)?];
            }
            for (a, b) in &t.deltas {
                if pick(a)? != pick(b)? {
                    x = 0.0;
                }
            }
            acc += num_complex::Complex64::new(crate::poly::rat_to_f64(&t.coeff.re), crate::poly::rat_to_f64(&t.coeff.im)) * x;
        }
        Ok(acc * g)
    }
}

impl fmt::Display for UVExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| {
                let mut s = format!("{}", t.coeff);
                if t.p != 0 {
                    s.push_str(&format!(" u^{}", t.p));
                }
                if t.q != 0 {
                    s.push_str(&format!(" v^{}", t.q));
                }
                if t.r != 0 {
                    s.push_str(&format!(" (u+v)^{}", -t.r));
                }
                for (a, b) in &t.deltas {
                    s.push_str(&format!(" δ_{a}{b}"));
                }
                for x in &t.xi {
                    s.push_str(&format!(" ξ_{x}"));
                }
                s + " G"
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// ∂_ξ^μ G.
pub fn gaussian_xi_derivative(mu: &[IndexSymbol]) -> UVExpr {
    let mut e = UVExpr::g();
    for j in mu {
        e = e.d_xi(j);
    }
    e
}

/// σ(∂^α, ∂^β, ∂^γ, ∂^δ) = (iξ)^{α+γ} P(∂^β, u, −i∂_ξ) P(∂^δ, v, −i∂_ξ) G, canonical.
/// Errors if a residual imaginary part survives.
pub fn sigma_term(alpha: &[IndexSymbol], beta: &[IndexSymbol], gamma: &[IndexSymbol], delta: &[IndexSymbol]) -> Result<UVExpr> {
    let e = sigma_term_raw(alpha, beta, gamma, delta).canonical();
    if !e.is_real() {
        return Err(Error::ResidualImaginary(format!("σ({alpha:?}, {beta:?}, {gamma:?}, {delta:?}) = {e}")));
    }
    Ok(e)
}

/// σ before canonical rewriting; coefficients may be imaginary and powers of u, v negative.
pub fn sigma_term_raw(alpha: &[IndexSymbol], beta: &[IndexSymbol], gamma: &[IndexSymbol], delta: &[IndexSymbol]) -> UVExpr {
    let e = UVExpr::g().apply_p(delta, false).apply_p(beta, true);
    let mut pre = alpha.to_vec();
    pre.extend(gamma.iter().cloned());
    e.mul_xi(&pre).mul_const(&GaussRat::i_pow(pre.len() as u32))
}

/// (1/Γ(S)) ∬_{[0,∞)²} (u+v)^S σ du dv, term by term through the closed-form Gamma integral.
/// Output coefficients carry c_power 1 (one factor C(s)).
pub fn uv_integrate(e: &UVExpr) -> Result<TensorExpr> {
    let e = e.canonical();
    let mut terms = Vec::new();
    for t in &e.terms {
        if !t.coeff.im.is_zero() {
            return Err(Error::ResidualImaginary(format!("{e}")));
        }
        let uc = uv_coefficient(t.p, t.q, t.r)?;
        terms.push(TensorTerm {
            coeff: uc.coeff.scale(&t.coeff.re),
            c_power: uc.c_power,
            xi: t.xi.clone(),
            deltas: t.deltas.clone(),
            norm_offset: uc.norm_offset,
        });
    }
    Ok(canonicalize(&TensorExpr { terms }))
}

/// u_s(∂^α, ∂^β, ∂^γ, ∂^δ, x, ξ), normalized by one factor C(s).
pub fn us_term(alpha: &[IndexSymbol], beta: &[IndexSymbol], gamma: &[IndexSymbol], delta: &[IndexSymbol]) -> Result<TensorExpr> {
    Ok(uv_integrate(&sigma_term(alpha, beta, gamma, delta)?)?.shift_c_power(-1))
}

pub fn us_term_multi(alpha: &MultiIndex, beta: &MultiIndex, gamma: &MultiIndex, delta: &MultiIndex) -> Result<TensorExpr> {
    us_term(&alpha.to_indices(), &beta.to_indices(), &gamma.to_indices(), &delta.to_indices())
}

/// Taylor datum J̃_{abν}: the coefficient of u^a v^b (u+v)^{−r} ξ^ν (δ…) G.
/// `upv_power` defaults to ℓ, the form in which 2a + 2b = 3ℓ + |ν|.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorDatum {
    pub a: i64,
    pub b: i64,
    pub upv_power: Option<i64>,
    pub nu: Vec<IndexSymbol>,
    pub deltas: Vec<Delta>,
    pub value: BigRational,
}

impl TaylorDatum {
    pub fn new(a: i64, b: i64, nu: Vec<IndexSymbol>, value: BigRational) -> Self {
        TaylorDatum { a, b, upv_power: None, nu, deltas: vec![], value }
    }
}

/// U_{s,ℓ}: the homogeneous term of degree n−2s−4−ℓ, with one factor C(s)
/// (the (4π)^{n/2} normalization of the data is absorbed into G).
///
/// Each datum must satisfy 2(a+b−r) = ℓ + |ν| (2a+2b = 3ℓ+|ν| when r = ℓ)
/// and |ν| ≤ 2m+ℓ. Data with a < 0 or b < 0 contribute nothing.
pub fn u_s_ell(data: &[TaylorDatum], ell: i64, m: i64) -> Result<TensorExpr> {
    let mut terms = Vec::new();
    for d in data {
        let r = d.upv_power.unwrap_or(ell);
        let nu = d.nu.len() as i64 + 2 * d.deltas.len() as i64;
        if 2 * (d.a + d.b - r) != ell + nu {
            return Err(Error::Constraint(format!("datum (a,b,r,|ν|)=({},{},{r},{nu}) does not have degree ℓ={ell}", d.a, d.b)));
        }
        if nu > 2 * m + ell {
            return Err(Error::Constraint(format!("|ν|={nu} exceeds 2m+ℓ={}", 2 * m + ell)));
        }
        if d.a < 0 || d.b < 0 || d.value.is_zero() {
            continue;
        }
        let uc = uv_coefficient_ext(d.a, d.b, r)?;
        terms.push(TensorTerm {
            coeff: uc.coeff.scale(&d.value),
            c_power: uc.c_power,
            xi: d.nu.clone(),
            deltas: d.deltas.clone(),
            norm_offset: uc.norm_offset,
        });
    }
    Ok(canonicalize(&TensorExpr { terms }))
}

/// The six (α, β, γ, δ) patterns of the Hessian symbol, with free indices j, k, p, q.
pub fn patterns() -> Vec<(char, [Vec<IndexSymbol>; 4])> {
    vec![
        ('a', [idx("jk"), idx(""), idx("pq"), idx("")]),
        ('b', [idx("j"), idx("k"), idx("pq"), idx("")]),
        ('c', [idx("j"), idx("k"), idx("p"), idx("q")]),
        ('d', [idx(""), idx("jk"), idx("pq"), idx("")]),
        ('e', [idx(""), idx("jk"), idx("p"), idx("q")]),
        ('f', [idx(""), idx("jk"), idx(""), idx("pq")]),
    ]
}

/// u_s for every pattern, computed from σ.
pub fn theorem2_table() -> Result<BTreeMap<char, TensorExpr>> {
    let mut out = BTreeMap::new();
    for (label, [a, b, g, d]) in patterns() {
        out.insert(label, us_term(&a, &b, &g, &d)?);
    }
    Ok(out)
}

fn poly_c(c: &[(i64, i64)]) -> RationalInS {
    RationalInS::from_poly(Poly::from_coeffs(c.iter().map(|&(n, d)| rat(n, d)).collect()))
}

fn dl(a: &str, b: &str) -> Delta {
    (IndexSymbol::abs(a), IndexSymbol::abs(b))
}

/// The published closed forms, entered by hand (independent of the σ pipeline).
pub fn hand_encoded_table() -> BTreeMap<char, TensorExpr> {
    let t = |c: RationalInS, xi: &str, d: Vec<Delta>, e: i64| TensorTerm::new(c, idx(xi), d, e);
    let mut m = BTreeMap::new();
    // (a) 4(4S²−1)
    m.insert('a', TensorExpr::from_terms(vec![t(poly_c(&[(-4, 1), (0, 1), (16, 1)]), "jkpq", vec![], -4)]));
    // (b) −2(4S²−1)
    m.insert('b', TensorExpr::from_terms(vec![t(poly_c(&[(2, 1), (0, 1), (-8, 1)]), "jkpq", vec![], -4)]));
    // (c)
    m.insert(
        'c',
        TensorExpr::from_terms(vec![
            t(poly_c(&[(-2, 1), (2, 1), (4, 1)]), "jkpq", vec![], -4),
            t(poly_c(&[(1, 1), (-2, 1)]), "jp", vec![dl("k", "q")], -2),
        ]),
    );
    // (d)
    m.insert(
        'd',
        TensorExpr::from_terms(vec![
            t(poly_c(&[(0, 1), (-2, 1), (4, 1)]), "jkpq", vec![], -4),
            t(poly_c(&[(-1, 1), (2, 1)]), "pq", vec![dl("j", "k")], -2),
        ]),
    );
    // (e)
    let half = poly_c(&[(-1, 2), (1, 1)]);
    m.insert(
        'e',
        TensorExpr::from_terms(vec![
            t(poly_c(&[(1, 1), (-1, 1), (-2, 1)]), "jkpq", vec![], -4),
            t(half.scale(&rat_int(-1)), "pq", vec![dl("j", "k")], -2),
            t(half.clone(), "kp", vec![dl("j", "q")], -2),
            t(half, "jp", vec![dl("k", "q")], -2),
        ]),
    );
    // (f)
    let sm1 = poly_c(&[(-1, 2), (1, 2)]);
    let ms = poly_c(&[(0, 1), (-1, 2)]);
    let q = RationalInS::constant(rat(1, 4));
    m.insert(
        'f',
        TensorExpr::from_terms(vec![
            t(poly_c(&[(0, 1), (1, 1), (1, 1)]), "jkpq", vec![], -4),
            t(sm1.clone(), "pq", vec![dl("j", "k")], -2),
            t(sm1, "jk", vec![dl("p", "q")], -2),
            t(ms.clone(), "kq", vec![dl("j", "p")], -2),
            t(ms.clone(), "jp", vec![dl("k", "q")], -2),
            t(ms.clone(), "kp", vec![dl("j", "q")], -2),
            t(ms, "jq", vec![dl("k", "p")], -2),
            t(q.clone(), "", vec![dl("j", "k"), dl("p", "q")], 0),
            t(q.clone(), "", vec![dl("j", "p"), dl("k", "q")], 0),
            t(q, "", vec![dl("j", "q"), dl("k", "p")], 0),
        ]),
    );
    m
}

/// True if every coefficient is a polynomial in S of degree ≤ `deg`.
pub fn coefficients_polynomial_of_degree(e: &TensorExpr, deg: usize) -> bool {
    e.terms.iter().all(|t| t.coeff.is_polynomial() && t.coeff.num().degree().unwrap_or(0) <= deg)
}
