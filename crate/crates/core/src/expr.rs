//! Exact multilinear expressions in ξ components, Kronecker deltas and powers
//! |ξ|^{n−2s+e}, with coefficients rational in S (times an optional power of C(s)).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{rat_int, rat_to_f64, RationalInS, RationalJson};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum IndexSymbol {
    Abstract(String),
    Concrete(u32),
}

impl IndexSymbol {
    pub fn abs(name: &str) -> Self {
        IndexSymbol::Abstract(name.to_string())
    }
    pub fn parse(s: &str) -> Result<Self> {
        if let Ok(k) = s.parse::<u32>() {
            if k == 0 {
                return Err(Error::Parse("concrete indices start at 1".into()));
            }
            return Ok(IndexSymbol::Concrete(k));
        }
        if !s.is_empty() && s.chars().all(|c| c.is_alphabetic()) {
            return Ok(IndexSymbol::Abstract(s.to_string()));
        }
        Err(Error::Parse(format!("bad index symbol '{s}'")))
    }
}

impl fmt::Display for IndexSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSymbol::Abstract(s) => write!(f, "{s}"),
            IndexSymbol::Concrete(k) => write!(f, "{k}"),
        }
    }
}

/// Shorthand for a list of abstract indices: `idx("jk")` = [j, k].
pub fn idx(names: &str) -> Vec<IndexSymbol> {
    names.chars().map(|c| IndexSymbol::Abstract(c.to_string())).collect()
}

/// Multi-index with concrete entries (length = dimension).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize, Default)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0; n];
        v[i] = 1;
        MultiIndex(v)
    }
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }
    pub fn add(&self, o: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }
    pub fn factorial(&self) -> BigInt {
        let mut f = BigInt::one();
        for &a in &self.0 {
            for i in 2..=a {
                f *= i;
            }
        }
        f
    }
    /// Multinomial-style binomial Π C(α_i, β_i); zero unless β ≤ α.
    pub fn binomial(&self, beta: &MultiIndex) -> BigInt {
        let mut r = BigInt::one();
        for (&a, &b) in self.0.iter().zip(&beta.0) {
            if b > a {
                return BigInt::zero();
            }
            let mut c = BigInt::one();
            for i in 0..b {
                c = c * (a - i) / (i + 1);
            }
            r *= c;
        }
        r
    }
    /// The derivative ∂^α written as a sorted list of concrete (1-based) indices.
    pub fn to_indices(&self) -> Vec<IndexSymbol> {
        let mut v = Vec::new();
        for (i, &a) in self.0.iter().enumerate() {
            for _ in 0..a {
                v.push(IndexSymbol::Concrete(i as u32 + 1));
            }
        }
        v
    }
}

/// Sorts a ξ-monomial and its delta pairs, dropping δ_aa and deciding δ between
/// two concrete indices. Returns false if the monomial vanishes.
pub fn normalize_monomial(xi: &mut Vec<IndexSymbol>, deltas: &mut Vec<(IndexSymbol, IndexSymbol)>) -> bool {
    let mut keep = Vec::with_capacity(deltas.len());
    for (a, b) in deltas.drain(..) {
        if a == b {
            continue;
        }
        if let (IndexSymbol::Concrete(_), IndexSymbol::Concrete(_)) = (&a, &b) {
            return false;
        }
        keep.push(if a <= b { (a, b) } else { (b, a) });
    }
    keep.sort();
    *deltas = keep;
    xi.sort();
    true
}

/// coeff · C(s)^{c_power} · Π ξ · Π δ · |ξ|^{n−2s+e}
#[derive(Clone, Debug, PartialEq)]
pub struct TensorTerm {
    pub coeff: RationalInS,
    pub c_power: i32,
    pub xi: Vec<IndexSymbol>,
    pub deltas: Vec<(IndexSymbol, IndexSymbol)>,
    pub norm_offset: i64,
}

type TermKey = (i32, i64, Vec<IndexSymbol>, Vec<(IndexSymbol, IndexSymbol)>);

impl TensorTerm {
    pub fn new(coeff: RationalInS, xi: Vec<IndexSymbol>, deltas: Vec<(IndexSymbol, IndexSymbol)>, norm_offset: i64) -> Self {
        TensorTerm { coeff, c_power: 0, xi, deltas, norm_offset }
    }
    pub fn with_c_power(mut self, k: i32) -> Self {
        self.c_power = k;
        self
    }
    /// Sorts indices and delta pairs and evaluates deltas that are decidable
    /// symbolically; returns None if the term vanishes.
    fn normalized(mut self) -> Option<Self> {
        if self.coeff.is_zero() || !normalize_monomial(&mut self.xi, &mut self.deltas) {
            return None;
        }
        Some(self)
    }
    fn key(&self) -> TermKey {
        (self.c_power, self.norm_offset, self.xi.clone(), self.deltas.clone())
    }
    pub fn abstract_indices(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        let mut add = |x: &IndexSymbol| {
            if let IndexSymbol::Abstract(n) = x {
                s.insert(n.clone());
            }
        };
        self.xi.iter().for_each(&mut add);
        for (a, b) in &self.deltas {
            add(a);
            add(b);
        }
        s
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TensorExpr {
    pub terms: Vec<TensorTerm>,
}

impl TensorExpr {
    pub fn zero() -> Self {
        TensorExpr::default()
    }
    pub fn from_terms(terms: Vec<TensorTerm>) -> Self {
        canonicalize(&TensorExpr { terms })
    }
    pub fn is_zero(&self) -> bool {
        canonicalize(self).terms.is_empty()
    }
    pub fn add(&self, o: &TensorExpr) -> TensorExpr {
        let mut t = self.terms.clone();
        t.extend(o.terms.iter().cloned());
        canonicalize(&TensorExpr { terms: t })
    }
    pub fn neg(&self) -> TensorExpr {
        self.scale(&RationalInS::constant(rat_int(-1)))
    }
    pub fn sub(&self, o: &TensorExpr) -> TensorExpr {
        self.add(&o.neg())
    }
    pub fn scale(&self, f: &RationalInS) -> TensorExpr {
        let terms = self.terms.iter().map(|t| TensorTerm { coeff: &t.coeff * f, ..t.clone() }).collect();
        canonicalize(&TensorExpr { terms })
    }
    /// Multiplies every term by ξ-monomial `xi` (e.g. the (iξ)^{α+γ} prefactor, without the i's).
    pub fn mul_xi(&self, xi: &[IndexSymbol]) -> TensorExpr {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut t = t.clone();
                t.xi.extend(xi.iter().cloned());
                t
            })
            .collect();
        canonicalize(&TensorExpr { terms })
    }
    pub fn shift_c_power(&self, k: i32) -> TensorExpr {
        let terms = self.terms.iter().map(|t| TensorTerm { c_power: t.c_power + k, ..t.clone() }).collect();
        TensorExpr { terms }
    }
    /// Renames abstract indices.
    pub fn relabel(&self, map: &BTreeMap<String, String>) -> TensorExpr {
        let f = |x: &IndexSymbol| match x {
            IndexSymbol::Abstract(n) => IndexSymbol::Abstract(map.get(n).cloned().unwrap_or_else(|| n.clone())),
            c => c.clone(),
        };
        let terms = self
            .terms
            .iter()
            .map(|t| TensorTerm {
                xi: t.xi.iter().map(f).collect(),
                deltas: t.deltas.iter().map(|(a, b)| (f(a), f(b))).collect(),
                ..t.clone()
            })
            .collect();
        canonicalize(&TensorExpr { terms })
    }
    /// Substitutes concrete values for abstract indices (others kept).
    pub fn assign(&self, a: &BTreeMap<String, u32>) -> TensorExpr {
        let f = |x: &IndexSymbol| match x {
            IndexSymbol::Abstract(n) => a.get(n).map(|&k| IndexSymbol::Concrete(k)).unwrap_or_else(|| x.clone()),
            c => c.clone(),
        };
        let terms = self
            .terms
            .iter()
            .map(|t| TensorTerm {
                xi: t.xi.iter().map(f).collect(),
                deltas: t.deltas.iter().map(|(x, y)| (f(x), f(y))).collect(),
                ..t.clone()
            })
            .collect();
        canonicalize(&TensorExpr { terms })
    }
    pub fn abstract_indices(&self) -> BTreeSet<String> {
        self.terms.iter().flat_map(|t| t.abstract_indices()).collect()
    }
    /// Largest coefficient degree in S over all terms (numerator degree for polynomials).
    pub fn max_coeff_degree(&self) -> usize {
        self.terms.iter().filter_map(|t| t.coeff.num().degree()).max().unwrap_or(0)
    }
}

/// Merges like terms, drops zeros and sorts into a deterministic order.
pub fn canonicalize(e: &TensorExpr) -> TensorExpr {
    let mut acc: BTreeMap<TermKey, TensorTerm> = BTreeMap::new();
    for t in e.terms.iter().cloned().filter_map(TensorTerm::normalized) {
        let k = t.key();
        match acc.get_mut(&k) {
            Some(x) => x.coeff = &x.coeff + &t.coeff,
            None => {
                acc.insert(k, t);
            }
        }
    }
    TensorExpr { terms: acc.into_values().filter(|t| !t.coeff.is_zero()).collect() }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(BigRational),
    Float(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => rat_to_f64(r),
            Value::Float(x) => *x,
        }
    }
    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }
}

fn exact_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

fn pow_rat(x: &BigRational, k: i64) -> BigRational {
    if k >= 0 {
        num_traits::pow(x.clone(), k as usize)
    } else {
        BigRational::one() / num_traits::pow(x.clone(), (-k) as usize)
    }
}

fn resolve(x: &IndexSymbol, a: &BTreeMap<String, u32>, n: usize) -> Result<usize> {
    let k = match x {
        IndexSymbol::Concrete(k) => *k,
        IndexSymbol::Abstract(name) => *a.get(name).ok_or_else(|| Error::UnassignedIndex(name.clone()))?,
    };
    if k == 0 || k as usize > n {
        return Err(Error::Invalid(format!("index {k} outside 1..{n}")));
    }
    Ok(k as usize - 1)
}

/// Value of `e` at S (in units of C(s)^{c_power}: the C factor is not included).
///
/// |ξ|^{−2S+e} is evaluated exactly when −2S+e is an integer and, for odd
/// exponents, |ξ|² is a rational square; otherwise the result is a float.
pub fn instantiate(e: &TensorExpr, n: usize, assignment: &BTreeMap<String, u32>, xi: &[BigRational], s: &BigRational) -> Result<Value> {
    if xi.len() != n {
        return Err(Error::Invalid(format!("ξ has {} components, dimension is {n}", xi.len())));
    }
    let norm2: BigRational = xi.iter().map(|x| x * x).sum();
    let mut exact = BigRational::zero();
    let mut float = 0.0f64;
    let mut all_exact = true;
    for t in &e.terms {
        let c = t.coeff.eval(s)?;
        let mut mono = c;
        for x in &t.xi {
            mono *= &xi[resolve(x, assignment, n)?];
        }
        for (a, b) in &t.deltas {
            if resolve(a, assignment, n)? != resolve(b, assignment, n)? {
                mono = BigRational::zero();
            }
        }
        // exponent of |ξ|: −2S + e
        let pexp = -(s * rat_int(2)) + rat_int(t.norm_offset);
        if norm2.is_zero() {
            if pexp.is_negative() && !mono.is_zero() {
                return Err(Error::ZeroXi("|ξ| raised to a negative power at ξ = 0".into()));
            }
            if pexp.is_zero() {
                exact += mono;
            }
            continue;
        }
        if pexp.is_integer() {
            let k = pexp.to_integer().to_i64().ok_or_else(|| Error::Invalid("huge exponent".into()))?;
            if k % 2 == 0 {
                exact += mono * pow_rat(&norm2, k / 2);
                continue;
            }
            if let Some(r) = exact_sqrt(&norm2) {
                exact += mono * pow_rat(&r, k);
                continue;
            }
        }
        all_exact = false;
        float += rat_to_f64(&mono) * rat_to_f64(&norm2).powf(rat_to_f64(&pexp) / 2.0);
    }
    if all_exact {
        Ok(Value::Exact(exact))
    } else {
        Ok(Value::Float(float + rat_to_f64(&exact)))
    }
}

/// Complex evaluation at arbitrary S (C factor not included), ξ real.
pub fn instantiate_complex(e: &TensorExpr, n: usize, assignment: &BTreeMap<String, u32>, xi: &[f64], s: Complex64) -> Result<Complex64> {
    if xi.len() != n {
        return Err(Error::Invalid(format!("ξ has {} components, dimension is {n}", xi.len())));
    }
    let norm2: f64 = xi.iter().map(|x| x * x).sum();
    if norm2 == 0.0 {
        return Err(Error::ZeroXi("ξ = 0".into()));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for t in &e.terms {
        let mut v = t.coeff.eval_c(s)?;
        for x in &t.xi {
            v *= xi[resolve(x, assignment, n)?];
        }
        for (a, b) in &t.deltas {
            if resolve(a, assignment, n)? != resolve(b, assignment, n)? {
                v *= 0.0;
            }
        }
        let pexp = -s * 2.0 + t.norm_offset as f64;
        acc += v * ((pexp / 2.0) * norm2.ln()).exp();
    }
    Ok(acc)
}

/// Rational ξ vectors in dimension 4 with distinct |ξ|² and no zero component.
pub fn xi_basket() -> Vec<Vec<BigRational>> {
    [[1, 2, 3, 5], [2, -1, 1, 3], [1, 3, -2, 4], [2, 1, 1, 1]]
        .iter()
        .map(|v| v.iter().map(|&x| rat_int(x)).collect())
        .collect()
}

/// Equality as multilinear forms: all abstract indices are assigned over 1..4 and
/// the expressions are compared at the ξ basket, as exact rational functions of S,
/// separately per power of C(s) and per parity of the |ξ| offset.
pub fn expr_equal(a: &TensorExpr, b: &TensorExpr) -> bool {
    let diff = a.sub(b);
    if diff.terms.is_empty() {
        return true;
    }
    let names: Vec<String> = diff.abstract_indices().into_iter().collect();
    let basket = xi_basket();
    let total = 4usize.pow(names.len() as u32);
    for code in 0..total {
        let mut asg = BTreeMap::new();
        let mut c = code;
        for nm in &names {
            asg.insert(nm.clone(), (c % 4) as u32 + 1);
            c /= 4;
        }
        for xi in &basket {
            if !class_sums_vanish(&diff, &asg, xi) {
                return false;
            }
        }
    }
    true
}

fn class_sums_vanish(e: &TensorExpr, asg: &BTreeMap<String, u32>, xi: &[BigRational]) -> bool {
    let norm2: BigRational = xi.iter().map(|x| x * x).sum();
    let mut classes: BTreeMap<(i32, i64), Vec<&TensorTerm>> = BTreeMap::new();
    for t in &e.terms {
        classes.entry((t.c_power, t.norm_offset.rem_euclid(2))).or_default().push(t);
    }
    for terms in classes.values() {
        let emin = terms.iter().map(|t| t.norm_offset).min().unwrap();
        let mut sum = RationalInS::zero();
        for t in terms {
            let mut m = BigRational::one();
            for x in &t.xi {
                let Ok(i) = resolve(x, asg, 4) else { return false };
                m *= &xi[i];
            }
            for (p, q) in &t.deltas {
                let (Ok(i), Ok(j)) = (resolve(p, asg, 4), resolve(q, asg, 4)) else { return false };
                if i != j {
                    m = BigRational::zero();
                }
            }
            m *= pow_rat(&norm2, (t.norm_offset - emin) / 2);
            sum = &sum + &t.coeff.scale(&m);
        }
        if !sum.is_zero() {
            return false;
        }
    }
    true
}

fn render_coeff(r: &RationalInS, c_power: i32) -> (bool, String) {
    // returns (negative?, magnitude text) so terms can be joined with signs
    let s = r.render();
    let single_term = r.is_polynomial() && r.num().coeffs().iter().filter(|c| !c.is_zero()).count() == 1;
    let (neg, body) = if single_term && s.starts_with('-') { (true, s[1..].to_string()) } else { (false, s) };
    let mut out = if single_term || body == "1" { body } else { format!("({body})") };
    if c_power != 0 {
        out = format!("{out} C(s)^{c_power}");
    }
    (neg, out)
}

fn norm_text(e: i64, latex: bool) -> String {
    let exp = match e.cmp(&0) {
        std::cmp::Ordering::Equal => "n-2s".to_string(),
        std::cmp::Ordering::Less => format!("n-2s-{}", -e),
        std::cmp::Ordering::Greater => format!("n-2s+{e}"),
    };
    if latex {
        format!("|\\xi|^{{{exp}}}")
    } else {
        format!("|ξ|^({exp})")
    }
}

/// Plain-text rendering, e.g. `(16S^2 - 4) ξ_j ξ_k ξ_p ξ_q |ξ|^(n-2s-4)`.
pub fn render_text(e: &TensorExpr) -> String {
    if e.terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, t) in e.terms.iter().enumerate() {
        let (neg, c) = render_coeff(&t.coeff, t.c_power);
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mut parts = vec![];
        if c != "1" || (t.xi.is_empty() && t.deltas.is_empty()) {
            parts.push(c);
        }
        for (a, b) in &t.deltas {
            parts.push(format!("δ_{a}{b}"));
        }
        for x in &t.xi {
            parts.push(format!("ξ_{x}"));
        }
        parts.push(norm_text(t.norm_offset, false));
        out.push_str(&parts.join(" "));
    }
    out
}

fn latex_poly(r: &RationalInS) -> String {
    let t = r.render();
    // S^2 -> S^{2}, a/b -> \frac{a}{b}
    let mut out = String::new();
    let mut chars = t.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '^' {
            let mut num = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                num.push(*d);
                chars.next();
            }
            out.push_str(&format!("^{{{num}}}"));
        } else {
            out.push(c);
        }
    }
    // fractions p/q of plain integers
    let words: Vec<String> = out
        .split(' ')
        .map(|w| {
            if let Some((p, q)) = w.split_once('/') {
                let lead: String = p.chars().take_while(|c| *c == '(' || *c == '-').collect();
                let p2 = &p[lead.len()..];
                let tail_pos = q.find(|c: char| !c.is_ascii_digit()).unwrap_or(q.len());
                if !p2.is_empty() && p2.chars().all(|c| c.is_ascii_digit()) && tail_pos > 0 {
                    return format!("{lead}\\frac{{{p2}}}{{{}}}{}", &q[..tail_pos], &q[tail_pos..]);
                }
            }
            w.to_string()
        })
        .collect();
    words.join(" ").replace('(', "\\left(").replace(')', "\\right)")
}

/// LaTeX rendering (math mode body).
pub fn render_latex(e: &TensorExpr) -> String {
    if e.terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, t) in e.terms.iter().enumerate() {
        let (neg, _) = render_coeff(&t.coeff, t.c_power);
        let mag = if neg { t.coeff.scale(&rat_int(-1)) } else { t.coeff.clone() };
        let single = mag.is_polynomial() && mag.num().coeffs().iter().filter(|c| !c.is_zero()).count() == 1;
        let mut c = latex_poly(&mag);
        if !single {
            c = format!("\\left({c}\\right)");
        }
        if c == "1" && !(t.xi.is_empty() && t.deltas.is_empty()) {
            c.clear();
        }
        if t.c_power != 0 {
            c = format!("{c}\\,C(s)^{{{}}}", t.c_power);
        }
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        out.push_str(&c);
        for (a, b) in &t.deltas {
            out.push_str(&format!("\\delta_{{{a}{b}}}"));
        }
        for x in &t.xi {
            out.push_str(&format!("\\xi_{{{x}}}"));
        }
        out.push_str(&norm_text(t.norm_offset, true));
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TensorTermJson {
    pub coeff: RationalJson,
    pub c_power: i32,
    pub xi: Vec<String>,
    pub deltas: Vec<[String; 2]>,
    pub norm_offset: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TensorExprJson {
    pub terms: Vec<TensorTermJson>,
}

impl From<&TensorExpr> for TensorExprJson {
    fn from(e: &TensorExpr) -> Self {
        TensorExprJson {
            terms: e
                .terms
                .iter()
                .map(|t| TensorTermJson {
                    coeff: (&t.coeff).into(),
                    c_power: t.c_power,
                    xi: t.xi.iter().map(|x| x.to_string()).collect(),
                    deltas: t.deltas.iter().map(|(a, b)| [a.to_string(), b.to_string()]).collect(),
                    norm_offset: t.norm_offset,
                })
                .collect(),
        }
    }
}

impl TryFrom<&TensorExprJson> for TensorExpr {
    type Error = Error;
    fn try_from(j: &TensorExprJson) -> Result<Self> {
        let mut terms = Vec::new();
        for t in &j.terms {
            terms.push(TensorTerm {
                coeff: RationalInS::try_from(&t.coeff)?,
                c_power: t.c_power,
                xi: t.xi.iter().map(|s| IndexSymbol::parse(s)).collect::<Result<_>>()?,
                deltas: t
                    .deltas
                    .iter()
                    .map(|[a, b]| Ok((IndexSymbol::parse(a)?, IndexSymbol::parse(b)?)))
                    .collect::<Result<_>>()?,
                norm_offset: t.norm_offset,
            });
        }
        Ok(canonicalize(&TensorExpr { terms }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{rat, Poly};

    fn c(n: i64) -> RationalInS {
        RationalInS::constant(rat_int(n))
    }
    fn d(a: &str, b: &str) -> (IndexSymbol, IndexSymbol) {
        (IndexSymbol::abs(a), IndexSymbol::abs(b))
    }

    #[test]
    fn canonical_merging() {
        let e = TensorExpr {
            terms: vec![
                TensorTerm::new(c(1), idx("qp"), vec![d("k", "j")], -2),
                TensorTerm::new(c(1), idx("pq"), vec![d("j", "k")], -2),
            ],
        };
        let k = canonicalize(&e);
        assert_eq!(k.terms.len(), 1);
        assert_eq!(k.terms[0].coeff, c(2));
        assert_eq!(k.terms[0].deltas, vec![d("j", "k")]);
        assert!(canonicalize(&TensorExpr { terms: vec![TensorTerm::new(c(0), idx("j"), vec![], 0)] }).terms.is_empty());
        let a = TensorExpr::from_terms(vec![TensorTerm::new(c(1), vec![], vec![d("j", "k"), d("p", "q")], 0)]);
        let b = TensorExpr::from_terms(vec![TensorTerm::new(c(1), vec![], vec![d("q", "p"), d("k", "j")], 0)]);
        assert_eq!(a, b);
    }

    #[test]
    fn instantiate_examples() {
        // δ_jk ξ_p ξ_q with e chosen so that |ξ| enters with power 0 at S = 0
        let e = TensorExpr::from_terms(vec![TensorTerm::new(c(1), idx("pq"), vec![d("j", "k")], 0)]);
        let asg: BTreeMap<String, u32> = [("j", 1), ("k", 1), ("p", 2), ("q", 2)].iter().map(|(a, b)| (a.to_string(), *b)).collect();
        let v = instantiate(&e, 2, &asg, &[rat_int(3), rat_int(5)], &rat_int(0)).unwrap();
        assert_eq!(v, Value::Exact(rat_int(25)));
        // pattern (a) at S = 1: 4(4S²−1) = 12
        let a = TensorExpr::from_terms(vec![TensorTerm::new(RationalInS::from_poly(Poly::from_i64(&[-4, 0, 16])), idx("jkpq"), vec![], -4)]);
        let asg: BTreeMap<String, u32> = ["j", "k", "p", "q"].iter().map(|a| (a.to_string(), 1)).collect();
        let xi = [rat_int(1), rat_int(0), rat_int(0), rat_int(0)];
        assert_eq!(instantiate(&a, 4, &asg, &xi, &rat_int(1)).unwrap(), Value::Exact(rat_int(12)));
        // odd |ξ| power on a non-square norm falls back to float
        let xi = [rat_int(1), rat_int(1), rat_int(0), rat_int(0)];
        let v = instantiate(&a, 4, &asg, &xi, &rat(1, 2)).unwrap();
        assert!(!v.is_exact());
        assert!(matches!(instantiate(&a, 4, &BTreeMap::new(), &xi, &rat_int(1)), Err(Error::UnassignedIndex(_))));
    }

    #[test]
    fn pole_in_coefficient_reported() {
        let r = RationalInS::new(Poly::one(), Poly::from_i64(&[-1, 1]), vec![]).unwrap();
        let e = TensorExpr::from_terms(vec![TensorTerm::new(r, vec![], vec![], 0)]);
        assert!(matches!(instantiate(&e, 1, &BTreeMap::new(), &[rat_int(1)], &rat_int(1)), Err(Error::Pole(_))));
    }

    #[test]
    fn delta_triple_symmetry() {
        let t = |a: &str, b: &str, x: &str, y: &str| TensorTerm::new(c(1), vec![], vec![d(a, b), d(x, y)], 0);
        let e = TensorExpr::from_terms(vec![t("j", "k", "p", "q"), t("j", "p", "k", "q"), t("j", "q", "k", "p")]);
        let map: BTreeMap<String, String> = [("j", "k"), ("k", "j"), ("p", "q"), ("q", "p")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        assert!(expr_equal(&e, &e.relabel(&map)));
        let other = TensorExpr::from_terms(vec![t("j", "k", "p", "q")]);
        assert!(!expr_equal(&e, &other));
    }

    #[test]
    fn json_round_trip() {
        let e = TensorExpr::from_terms(vec![
            TensorTerm::new(RationalInS::from_poly(Poly::from_i64(&[-1, 2])), idx("jp"), vec![d("k", "q")], -2).with_c_power(1),
            TensorTerm::new(c(3), vec![IndexSymbol::Concrete(2)], vec![], -1),
        ]);
        let j = TensorExprJson::from(&e);
        let s = serde_json::to_string(&j).unwrap();
        let back: TensorExprJson = serde_json::from_str(&s).unwrap();
        assert_eq!(TensorExpr::try_from(&back).unwrap(), e);
    }

    #[test]
    fn renderings() {
        let e = TensorExpr::from_terms(vec![
            TensorTerm::new(RationalInS::from_poly(Poly::from_i64(&[-4, 0, 16])), idx("jkpq"), vec![], -4),
            TensorTerm::new(RationalInS::constant(rat(1, 4)), vec![], vec![d("j", "k"), d("p", "q")], 0),
        ]);
        let t = render_text(&e);
        assert!(t.contains("(16S^2 - 4) ξ_j ξ_k ξ_p ξ_q |ξ|^(n-2s-4)"), "{t}");
        let l = render_latex(&e);
        assert!(l.contains("\\frac{1}{4}"), "{l}");
        assert!(l.contains("S^{2}"), "{l}");
    }
}
