use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;
use zetahess::expr::{canonicalize, expr_equal, instantiate, instantiate_complex, IndexSymbol, TensorExpr, TensorTerm};
use zetahess::gamma::{eval_rational, pochhammer_reduce, uv_gamma_ratio};
use zetahess::operator::{assemble_us, linearize_scalar_family, pairing, PerturbationDirection, UsCache};
use zetahess::poly::{rat, rat_int, Poly, RationalInS};
use zetahess::torus::{hessian_lemma31_with, TorusPerturbation, TorusProblem};
use zetahess::Exec;

const NAMES: [&str; 4] = ["j", "k", "p", "q"];

fn term() -> impl Strategy<Value = TensorTerm> {
    (
        prop::collection::vec(-6i64..=6, 1..=3),
        prop::collection::vec(0usize..4, 0..=4),
        prop::collection::vec((0usize..4, 0usize..4), 0..=2),
        prop::sample::select(vec![-4i64, -2, 0]),
    )
        .prop_map(|(c, xi, d, e)| {
            let coeff = RationalInS::from_poly(Poly::from_i64(&c));
            let xi = xi.into_iter().map(|i| IndexSymbol::abs(NAMES[i])).collect();
            let d = d.into_iter().map(|(a, b)| (IndexSymbol::abs(NAMES[a]), IndexSymbol::abs(NAMES[b]))).collect();
            TensorTerm::new(coeff, xi, d, e)
        })
}

fn expr() -> impl Strategy<Value = TensorExpr> {
    prop::collection::vec(term(), 1..=4).prop_map(TensorExpr::from_terms)
}

fn assignment() -> impl Strategy<Value = BTreeMap<String, u32>> {
    prop::collection::vec(1u32..=3, 4).prop_map(|v| NAMES.iter().zip(v).map(|(k, v)| (k.to_string(), v)).collect())
}

fn xi3() -> impl Strategy<Value = Vec<BigRational>> {
    prop::collection::vec((-4i64..=4, 1i64..=3), 3)
        .prop_filter("ξ ≠ 0", |v| v.iter().any(|(a, _)| *a != 0))
        .prop_map(|v| v.into_iter().map(|(a, b)| rat(a, b)).collect())
}

fn sym_h(n: usize) -> impl Strategy<Value = PerturbationDirection> {
    prop::collection::vec(-3i64..=3, n * (n + 1) / 2).prop_map(move |v| {
        let mut e = vec![vec![rat_int(0); n]; n];
        let mut it = v.into_iter();
        for i in 0..n {
            for j in i..n {
                let x = rat_int(it.next().unwrap());
                e[i][j] = x.clone();
                e[j][i] = x;
            }
        }
        PerturbationDirection::new(e, false).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn canonical_form_is_idempotent(e in expr()) {
        let c = canonicalize(&e);
        prop_assert_eq!(canonicalize(&c), c);
    }

    #[test]
    fn canonicalization_preserves_values(e in expr(), a in assignment(), xi in xi3(), s in -3i64..=3) {
        let s = rat(2 * s + 1, 2);
        let raw = instantiate(&e, 3, &a, &xi, &s).unwrap();
        let can = instantiate(&canonicalize(&e), 3, &a, &xi, &s).unwrap();
        prop_assert!((raw.to_f64() - can.to_f64()).abs() <= 1e-12 * raw.to_f64().abs().max(1.0));
    }

    #[test]
    fn equality_is_an_equivalence(a in expr(), b in expr()) {
        prop_assert!(expr_equal(&a, &a));
        prop_assert_eq!(expr_equal(&a, &b), expr_equal(&b, &a));
        let shuffled = TensorExpr::from_terms(a.terms.iter().rev().cloned().collect());
        prop_assert!(expr_equal(&a, &shuffled));
        prop_assert!(expr_equal(&a.add(&b).sub(&b), &a));
    }

    #[test]
    fn terms_scale_with_their_degree(t in term(), a in assignment(), lam in 1.1f64..4.0, s in -2.0f64..2.0) {
        let e = TensorExpr::from_terms(vec![t.clone()]);
        let xi = [0.3, -0.7, 1.1];
        let big_s = Complex64::new(s, 0.0);
        let v1 = instantiate_complex(&e, 3, &a, &xi, big_s).unwrap();
        let xl: Vec<f64> = xi.iter().map(|x| x * lam).collect();
        let v2 = instantiate_complex(&e, 3, &a, &xl, big_s).unwrap();
        // |ξ|^{n−2s+e} = |ξ|^{−2S+e}
        let d = t.xi.len() as f64 - 2.0 * s + t.norm_offset as f64;
        prop_assert!((v2 - v1 * lam.powf(d)).norm() <= 1e-10 * v1.norm().max(1e-300) * lam.powf(d).max(1.0));
    }

    #[test]
    fn gamma_ratio_reduction_is_numerically_exact(p in 0i64..=3, q in 0i64..=3, dr in 0i64..=4, s in -2.4f64..-0.6) {
        let r = (p.min(q) + 2 - dr).max(-1);
        let g = uv_gamma_ratio(p, q, r);
        let (coeff, k) = pochhammer_reduce(&g).unwrap();
        let z = Complex64::new(s + 0.0123, 0.0371);
        let base = zetahess::special::gamma(Complex64::new(1.0, 0.0) - z).powi(2) * zetahess::special::rgamma((Complex64::new(1.0, 0.0) - z) * 2.0);
        let want = g.eval_numeric(z);
        let got = eval_rational(&coeff, z).unwrap() * base.powi(k);
        prop_assert!((got - want).norm() <= 1e-10 * want.norm(), "({p},{q},{r}) {got} vs {want}");
    }

    #[test]
    fn assembled_symbol_is_symmetric(h1 in sym_h(3), h2 in sym_h(3), c1 in 0i64..=1, xi in prop::collection::vec(-2.0f64..2.0, 3), s in -1.5f64..1.4) {
        prop_assume!(xi.iter().map(|x| x * x).sum::<f64>() > 1e-3);
        let spec = linearize_scalar_family(3, &rat_int(c1), &rat_int(0));
        let cache = UsCache::default();
        let s = Complex64::new(s, 0.25);
        let a = pairing(&h1, &assemble_us(&spec, s, &xi, &h2, &cache).unwrap());
        let b = pairing(&h2, &assemble_us(&spec, s, &xi, &h1, &cache).unwrap());
        prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(b.norm()).max(1e-12));
        // F′ enters quadratically
        let neg = assemble_us(&spec.negated(), s, &xi, &h2, &cache).unwrap();
        prop_assert!((pairing(&h1, &neg) - a).norm() <= 1e-12 * a.norm().max(1e-12));
    }

    #[test]
    fn assembled_symbol_is_homogeneous(h in sym_h(2), lam in 0.2f64..5.0, s in -1.0f64..1.0) {
        let spec = linearize_scalar_family(2, &rat_int(1), &rat_int(0));
        let cache = UsCache::default();
        let s = Complex64::new(s, 0.0);
        let xi = [0.6, -1.3];
        let xl = [0.6 * lam, -1.3 * lam];
        let a = assemble_us(&spec, s, &xi, &h, &cache).unwrap();
        let b = assemble_us(&spec, s, &xl, &h, &cache).unwrap();
        let f = lam.powf(2.0 - 2.0 * s.re);
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((b[i][j] - a[i][j] * f).norm() <= 1e-10 * (a[i][j] * f).norm().max(1e-14));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn spectral_hessian_ignores_partitioning(m1 in -2i64..=2, m2 in 1i64..=2, e12 in -1.0f64..1.0, s in 3.0f64..5.0) {
        let p = TorusProblem::flat(2, 10, false);
        let e = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, e12, e12, -1.0]);
        let h = TorusPerturbation::CosMode { e, m: vec![m1, m2] };
        let s = Complex64::new(s, 0.0);
        let a = hessian_lemma31_with(&p, &h, s, Exec::Sequential).unwrap();
        let b = hessian_lemma31_with(&p, &h, s, Exec::Parallel).unwrap();
        prop_assert_eq!(a.value, b.value);
    }

    #[test]
    fn quadrature_converges_on_smooth_integrands(a in 0.5f64..3.0, b in 0.1f64..2.0) {
        // ∫₀¹ e^{−a x} cos(b x) dx in closed form
        let f = |x: f64| Complex64::new((-a * x).exp() * (b * x).cos(), 0.0);
        let exact = (a - (-a as f64).exp() * (a * b.cos() - b * b.sin())) / (a * a + b * b);
        let gk = zetahess::quadrature::gk_adaptive(f, 0.0, 1.0, 1e-14, 1e-300).value.re;
        let ts = zetahess::quadrature::tanh_sinh(|x, _, _| f(x), 0.0, 1.0, 1e-14).value.re;
        prop_assert!((gk - exact).abs() < 1e-13);
        prop_assert!((ts - exact).abs() < 1e-13);
    }
}
