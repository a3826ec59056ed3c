//! Linearized Laplace-type operators F′ = Σ A^{ij}_{αβ} (∂^α h_ij) ∂^β at a point,
//! and assembly of the Hessian symbol u_s(x, ξ) from the coefficient tables.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{instantiate_complex, MultiIndex, TensorExpr};
use crate::gamma::c_of_s;
use crate::heat_symbol::us_term_multi;
use crate::poly::{fmt_rational, parse_rational, rat, rat_int, rat_to_f64, RationalInS};

pub type RatMatrix = Vec<Vec<BigRational>>;

/// Key (i, j, α, β) with 0-based i, j.
pub type EntryKey = (usize, usize, MultiIndex, MultiIndex);

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSpec {
    pub n: usize,
    /// bundle rank
    pub rank: usize,
    pub volume: BigRational,
    pub v_factor: bool,
    pub entries: BTreeMap<EntryKey, RatMatrix>,
}

/// Symmetric direction h_ij (constant coefficients at the point).
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationDirection {
    pub e: RatMatrix,
    pub trace_free: bool,
}

impl PerturbationDirection {
    pub fn new(e: RatMatrix, trace_free: bool) -> Result<Self> {
        let n = e.len();
        for (i, row) in e.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Invalid("h must be square".into()));
            }
            for j in 0..n {
                if row[j] != e[j][i] {
                    return Err(Error::Invalid(format!("h is not symmetric at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        if trace_free {
            let tr: BigRational = (0..n).map(|i| e[i][i].clone()).sum();
            if !tr.is_zero() {
                return Err(Error::Invalid("h flagged trace-free but has nonzero trace".into()));
            }
        }
        Ok(PerturbationDirection { e, trace_free })
    }
}

fn zero_matrix(n: usize) -> RatMatrix {
    vec![vec![BigRational::zero(); n]; n]
}

fn scalar(x: BigRational) -> RatMatrix {
    vec![vec![x]]
}

fn mat_add(a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
    a.iter().zip(b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect()).collect()
}

fn mat_scale(a: &RatMatrix, c: &BigRational) -> RatMatrix {
    a.iter().map(|r| r.iter().map(|x| x * c).collect()).collect()
}

/// trace(A B)
pub fn trace_product(a: &RatMatrix, b: &RatMatrix) -> BigRational {
    let mut t = BigRational::zero();
    for i in 0..a.len() {
        for k in 0..a.len() {
            t += &a[i][k] * &b[k][i];
        }
    }
    t
}

impl OperatorSpec {
    pub fn new(n: usize, rank: usize) -> Self {
        OperatorSpec { n, rank, volume: BigRational::one(), v_factor: false, entries: BTreeMap::new() }
    }

    /// Adds `m` to the (i, j, α, β) entry (0-based i, j).
    pub fn add_entry(&mut self, i: usize, j: usize, alpha: MultiIndex, beta: MultiIndex, m: RatMatrix) {
        let key = (i, j, alpha, beta);
        let v = match self.entries.remove(&key) {
            Some(old) => mat_add(&old, &m),
            None => m,
        };
        if v.iter().flatten().any(|x| !x.is_zero()) {
            self.entries.insert(key, v);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.rank == 0 {
            return Err(Error::Invalid("dimension and rank must be positive".into()));
        }
        if self.volume <= BigRational::zero() {
            return Err(Error::Invalid("volume must be positive".into()));
        }
        for ((i, j, a, b), m) in &self.entries {
            if *i >= self.n || *j >= self.n {
                return Err(Error::Invalid(format!("index pair ({}, {}) outside 1..{}", i + 1, j + 1, self.n)));
            }
            if a.0.len() != self.n || b.0.len() != self.n {
                return Err(Error::Invalid("multi-index length differs from dimension".into()));
            }
            if a.order() + b.order() > 2 {
                return Err(Error::Invalid(format!("|α|+|β| = {} > 2 at ({}, {})", a.order() + b.order(), i + 1, j + 1)));
            }
            if m.len() != self.rank || m.iter().any(|r| r.len() != self.rank) {
                return Err(Error::Invalid(format!("coefficient matrix at ({}, {}) is not {}×{}", i + 1, j + 1, self.rank, self.rank)));
            }
        }
        Ok(())
    }

    /// Replaces A^{ij} and A^{ji} by their average. Returns the keys that were not symmetric.
    pub fn symmetrize(&mut self) -> Vec<EntryKey> {
        let keys: std::collections::BTreeSet<EntryKey> =
            self.entries.keys().flat_map(|(i, j, a, b)| [(*i, *j, a.clone(), b.clone()), (*j, *i, a.clone(), b.clone())]).collect();
        let zero = zero_matrix(self.rank);
        let mut out = BTreeMap::new();
        let mut asym = Vec::new();
        let half = rat(1, 2);
        for (i, j, a, b) in keys {
            let x = self.entries.get(&(i, j, a.clone(), b.clone())).unwrap_or(&zero);
            let y = self.entries.get(&(j, i, a.clone(), b.clone())).unwrap_or(&zero);
            if x != y && i < j {
                asym.push((i, j, a.clone(), b.clone()));
            }
            let m = mat_scale(&mat_add(x, y), &half);
            if m.iter().flatten().any(|v| !v.is_zero()) {
                out.insert((i, j, a, b), m);
            }
        }
        self.entries = out;
        asym
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries.iter().all(|((i, j, a, b), m)| self.entries.get(&(*j, *i, a.clone(), b.clone())) == Some(m))
    }

    pub fn negated(&self) -> OperatorSpec {
        let mut o = self.clone();
        for m in o.entries.values_mut() {
            *m = mat_scale(m, &rat_int(-1));
        }
        o
    }

    /// Entries with |α| + |β| = 2, the only ones entering u_s.
    pub fn principal_entries(&self) -> impl Iterator<Item = (&EntryKey, &RatMatrix)> {
        self.entries.iter().filter(|((_, _, a, b), _)| a.order() + b.order() == 2)
    }
}

/// Linearization of F = V^{2/n}(Δ + c₁ μ Scal) + c₂ at the flat metric in orthonormal
/// coordinates, with Δ the positive Laplacian and μ = (n−2)/(4(n−1)).
///
/// The V^{2/n} factor is not part of the tables (its variation is a multiple of F
/// itself, which is lower order in the symbol); `c2` does not contribute.
pub fn linearize_scalar_family(n: usize, c1: &BigRational, _c2: &BigRational) -> OperatorSpec {
    let mut spec = OperatorSpec::new(n, 1);
    let half = rat(1, 2);
    let z = MultiIndex::zero(n);
    for i in 0..n {
        for j in 0..n {
            let eij = MultiIndex::unit(n, i).add(&MultiIndex::unit(n, j));
            // h_ij ∂_i∂_j
            spec.add_entry(i, j, z.clone(), eij.clone(), scalar(BigRational::one()));
            // (∂_i h_ij) ∂_j, split over the two orderings of the symmetric pair
            spec.add_entry(i, j, MultiIndex::unit(n, i), MultiIndex::unit(n, j), scalar(half.clone()));
            spec.add_entry(i, j, MultiIndex::unit(n, j), MultiIndex::unit(n, i), scalar(half.clone()));
        }
        // −½ (∂_j tr h) ∂_j
        for j in 0..n {
            spec.add_entry(i, i, MultiIndex::unit(n, j), MultiIndex::unit(n, j), scalar(-&half));
        }
    }
    if n >= 2 && !c1.is_zero() {
        // δScal = ∂_i∂_j h_ij − Δ₀ tr h
        let mu = rat(n as i64 - 2, 4 * (n as i64 - 1));
        let cm = c1 * mu;
        if !cm.is_zero() {
            for i in 0..n {
                for j in 0..n {
                    let eij = MultiIndex::unit(n, i).add(&MultiIndex::unit(n, j));
                    spec.add_entry(i, j, eij, z.clone(), scalar(cm.clone()));
                }
                for k in 0..n {
                    let ekk = MultiIndex::unit(n, k).add(&MultiIndex::unit(n, k));
                    spec.add_entry(i, i, ekk, z.clone(), scalar(-&cm));
                }
            }
        }
    }
    spec
}

type PatternKey = (MultiIndex, MultiIndex, MultiIndex, MultiIndex);

/// Memo of u_s(∂^α, ∂^β, ∂^γ, ∂^δ) for concrete multi-indices.
#[derive(Default)]
pub struct UsCache {
    map: Mutex<HashMap<PatternKey, TensorExpr>>,
}

impl UsCache {
    pub fn get(&self, a: &MultiIndex, b: &MultiIndex, g: &MultiIndex, d: &MultiIndex) -> Result<TensorExpr> {
        let key = (a.clone(), b.clone(), g.clone(), d.clone());
        if let Some(e) = self.map.lock().unwrap().get(&key) {
            return Ok(e.clone());
        }
        let e = us_term_multi(a, b, g, d)?;
        self.map.lock().unwrap().insert(key, e.clone());
        Ok(e)
    }
}

/// Exact form: for each (i, j), Σ u_s(α,β,γ,δ) tr(A^{ij}_{αβ} A^{kℓ}_{γδ}) h_kℓ as a
/// TensorExpr in concrete indices, C(s) and the V factor not included.
pub fn assemble_us_exact(spec: &OperatorSpec, h: &PerturbationDirection, cache: &UsCache) -> Result<Vec<Vec<TensorExpr>>> {
    let n = spec.n;
    let mut out = vec![vec![TensorExpr::zero(); n]; n];
    for ((i, j, a, b), m1) in spec.principal_entries() {
        for ((k, l, g, d), m2) in spec.principal_entries() {
            let t = trace_product(m1, m2) * &h.e[*k][*l];
            if t.is_zero() {
                continue;
            }
            let u = cache.get(a, b, g, d)?;
            out[*i][*j] = out[*i][*j].add(&u.scale(&RationalInS::constant(t)));
        }
    }
    Ok(out)
}

/// (u_s(x,ξ) h)_ij = V^{(2s−n)/n} C(s) Σ u_s(…) tr(A^{ij}_{αβ} A^{kℓ}_{γδ}) h_kℓ.
/// The V prefactor is applied only when the spec's V factor flag is on.
pub fn assemble_us(spec: &OperatorSpec, s: Complex64, xi: &[f64], h: &PerturbationDirection, cache: &UsCache) -> Result<Vec<Vec<Complex64>>> {
    spec.validate()?;
    let n = spec.n;
    if xi.len() != n {
        return Err(Error::Invalid(format!("ξ has {} components, dimension is {n}", xi.len())));
    }
    if xi.iter().all(|x| *x == 0.0) {
        return Err(Error::ZeroXi("u_s is evaluated at ξ ≠ 0".into()));
    }
    if h.e.len() != n {
        return Err(Error::Invalid("h has the wrong dimension".into()));
    }
    let c = c_of_s(n as u32, s)?;
    let pref = if spec.v_factor {
        let big_s = s - n as f64 / 2.0;
        c * (big_s * 2.0 / n as f64 * rat_to_f64(&spec.volume).ln()).exp()
    } else {
        c
    };
    let exact = assemble_us_exact(spec, h, cache)?;
    let empty = BTreeMap::new();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = pref * instantiate_complex(&exact[i][j], n, &empty, xi, s - n as f64 / 2.0)?;
        }
    }
    Ok(out)
}

/// Frobenius pairing ⟨h₁, u_s h₂⟩.
pub fn pairing(h1: &PerturbationDirection, m: &[Vec<Complex64>]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            acc += v * rat_to_f64(&h1.e[i][j]);
        }
    }
    acc
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EntryJson {
    pub i: usize,
    pub j: usize,
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub matrix: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpecJson {
    pub n: usize,
    #[serde(rename = "N")]
    pub rank: usize,
    #[serde(rename = "V")]
    pub volume: String,
    pub v_factor: bool,
    pub entries: Vec<EntryJson>,
}

impl From<&OperatorSpec> for OperatorSpecJson {
    fn from(s: &OperatorSpec) -> Self {
        OperatorSpecJson {
            n: s.n,
            rank: s.rank,
            volume: fmt_rational(&s.volume),
            v_factor: s.v_factor,
            entries: s
                .entries
                .iter()
                .map(|((i, j, a, b), m)| EntryJson {
                    i: i + 1,
                    j: j + 1,
                    alpha: a.0.clone(),
                    beta: b.0.clone(),
                    matrix: m.iter().map(|r| r.iter().map(fmt_rational).collect()).collect(),
                })
                .collect(),
        }
    }
}

/// Parses and validates a spec. Asymmetric (i, j) pairs are symmetrized and reported
/// as warnings.
pub fn spec_from_json(j: &OperatorSpecJson) -> Result<(OperatorSpec, Vec<String>)> {
    let mut spec = OperatorSpec::new(j.n, j.rank);
    spec.volume = parse_rational(&j.volume).map_err(|e| Error::Parse(format!("field V: {e}")))?;
    spec.v_factor = j.v_factor;
    for (idx, e) in j.entries.iter().enumerate() {
        if e.i == 0 || e.j == 0 || e.i > j.n || e.j > j.n {
            return Err(Error::Parse(format!("entries[{idx}]: indices must lie in 1..{}", j.n)));
        }
        if e.alpha.len() != j.n || e.beta.len() != j.n {
            return Err(Error::Parse(format!("entries[{idx}]: alpha and beta need {} components", j.n)));
        }
        let m = e
            .matrix
            .iter()
            .map(|r| r.iter().map(|x| parse_rational(x)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()
            .map_err(|err| Error::Parse(format!("entries[{idx}].matrix: {err}")))?;
        if m.len() != j.rank || m.iter().any(|r| r.len() != j.rank) {
            return Err(Error::Parse(format!("entries[{idx}].matrix must be {}×{}", j.rank, j.rank)));
        }
        let (a, b) = (MultiIndex(e.alpha.clone()), MultiIndex(e.beta.clone()));
        if a.order() + b.order() > 2 {
            return Err(Error::Parse(format!("entries[{idx}]: |alpha|+|beta| = {} exceeds 2", a.order() + b.order())));
        }
        spec.add_entry(e.i - 1, e.j - 1, a, b, m);
    }
    spec.validate()?;
    let mut warnings = Vec::new();
    if !spec.is_symmetric() {
        for (i, j, a, b) in spec.symmetrize() {
            warnings.push(format!("A^{{{}{}}}_{{{:?},{:?}}} differs from A^{{{}{}}}; symmetrized", i + 1, j + 1, a.0, b.0, j + 1, i + 1));
        }
    }
    Ok((spec, warnings))
}

pub fn load_operator_spec(text: &str) -> Result<(OperatorSpec, Vec<String>)> {
    let j: OperatorSpecJson = serde_json::from_str(text).map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    spec_from_json(&j)
}

pub fn save_operator_spec(spec: &OperatorSpec) -> String {
    serde_json::to_string_pretty(&OperatorSpecJson::from(spec)).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{expr_equal, instantiate};
    use crate::heat_symbol::hand_encoded_table;

    fn h_diag(n: usize, d: &[i64]) -> PerturbationDirection {
        let mut e = zero_matrix(n);
        for (i, v) in d.iter().enumerate() {
            e[i][i] = rat_int(*v);
        }
        PerturbationDirection::new(e, false).unwrap()
    }

    #[test]
    fn laplacian_principal_block() {
        let spec = linearize_scalar_family(3, &rat_int(0), &rat_int(0));
        let z = MultiIndex::zero(3);
        for i in 0..3 {
            for j in 0..3 {
                let eij = MultiIndex::unit(3, i).add(&MultiIndex::unit(3, j));
                assert_eq!(spec.entries[&(i, j, z.clone(), eij)], scalar(rat_int(1)));
            }
        }
        assert!(spec.is_symmetric());
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn single_entry_reduces_to_pattern_a() {
        let n = 2;
        let mut spec = OperatorSpec::new(n, 1);
        spec.add_entry(0, 0, MultiIndex(vec![2, 0]), MultiIndex::zero(n), scalar(rat_int(1)));
        let h = h_diag(n, &[1, 0]);
        let cache = UsCache::default();
        let ex = assemble_us_exact(&spec, &h, &cache).unwrap();
        // (a) at j=k=p=q=1
        let a = hand_encoded_table()[&'a'].clone();
        let asg: BTreeMap<String, u32> = ["j", "k", "p", "q"].iter().map(|s| (s.to_string(), 1)).collect();
        let xi = [rat_int(3), rat_int(4)];
        for s in [rat(1, 3), rat_int(-2)] {
            assert_eq!(instantiate(&ex[0][0], n, &BTreeMap::new(), &xi, &s).unwrap(), instantiate(&a, n, &asg, &xi, &s).unwrap());
        }
        assert!(expr_equal(&ex[0][1], &TensorExpr::zero()));
    }

    #[test]
    fn assembled_matrix_is_symmetric_and_sign_invariant() {
        let spec = linearize_scalar_family(3, &rat_int(1), &rat_int(0));
        let cache = UsCache::default();
        let mut e = zero_matrix(3);
        e[0][1] = rat(1, 2);
        e[1][0] = rat(1, 2);
        e[2][2] = rat_int(-1);
        e[0][0] = rat_int(2);
        let h = PerturbationDirection::new(e, false).unwrap();
        let s = Complex64::new(0.3, 0.0);
        let xi = [0.7, -1.1, 0.4];
        let m = assemble_us(&spec, s, &xi, &h, &cache).unwrap();
        let m2 = assemble_us(&spec.negated(), s, &xi, &h, &cache).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((m[i][j] - m[j][i]).norm() < 1e-12 * (1.0 + m[i][j].norm()));
                assert!((m[i][j] - m2[i][j]).norm() < 1e-14 * (1.0 + m[i][j].norm()));
            }
        }
    }

    #[test]
    fn json_round_trip_and_rejections() {
        let spec = linearize_scalar_family(2, &rat_int(1), &rat_int(0));
        let text = save_operator_spec(&spec);
        let (back, w) = load_operator_spec(&text).unwrap();
        assert!(w.is_empty());
        assert_eq!(back, spec);
        assert_eq!(save_operator_spec(&back), text);
        let bad = r#"{"n":1,"N":1,"V":"1","v_factor":false,"entries":[{"i":1,"j":1,"alpha":[1],"beta":[2],"matrix":[["1"]]}]}"#;
        assert!(matches!(load_operator_spec(bad), Err(Error::Parse(_))));
        let asym = r#"{"n":2,"N":1,"V":"1","v_factor":false,"entries":[{"i":1,"j":2,"alpha":[0,0],"beta":[1,1],"matrix":[["1"]]}]}"#;
        let (s, w) = load_operator_spec(asym).unwrap();
        assert_eq!(w.len(), 1);
        assert!(s.is_symmetric());
    }
}
