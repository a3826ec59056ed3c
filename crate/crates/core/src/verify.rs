//! Verification suites. Each check returns report rows with the measured error and its budget;
//! the numbered ones are the release criteria.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::Error;
use crate::exec::Exec;
use crate::expr::{expr_equal, render_text};
use crate::gamma::{pole_locations, poles_in_half_n_plus_naturals, uv_coefficient};
use crate::geometry::check_linearization;
use crate::heat_symbol::{hand_encoded_table, theorem2_table, uv_integrate, UVExpr, UVTerm};
use crate::io::{cnum, num, CheckRow, Timer};
use crate::lab::{self, split};
use crate::poly::{rat_int, Poly, RationalInS};
use crate::torus::{self, extended, TorusPerturbation, TorusProblem};

fn cx(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn err_row(c: Option<u32>, name: &str, params: Value, e: &Error, t: &Timer) -> CheckRow {
    CheckRow::failed(c, name, params, &e.to_string(), t.secs())
}

/// Generated symbol table against the hand-entered closed forms; exact.
pub fn theorem2() -> Vec<CheckRow> {
    let t = Timer::start();
    let table = match theorem2_table() {
        Ok(x) => x,
        Err(e) => return vec![err_row(Some(1), "theorem2", json!({}), &e, &t)],
    };
    let reference = hand_encoded_table();
    let secs = t.secs();
    let mut rows: Vec<CheckRow> = table
        .iter()
        .map(|(k, v)| {
            let ok = expr_equal(v, &reference[k]);
            CheckRow::measured(
                Some(1),
                &format!("theorem2 ({k})"),
                json!({ "pattern": k.to_string() }),
                Value::String(render_text(v)),
                Value::String(render_text(&reference[k])),
                if ok { 0.0 } else { 1.0 },
                0.0,
                secs,
            )
        })
        .collect();
    if rows.len() != 6 {
        rows.push(CheckRow::failed(Some(1), "theorem2 pattern count", json!({}), "expected six patterns", secs));
    }
    rows.push(CheckRow::measured(Some(1), "theorem2 runtime", json!({}), num(secs), num(10.0), secs, 10.0, secs));
    rows
}

/// (p, q, r) of u^p v^q (u+v)^{−r} G, expected coefficient (ascending in S) and |ξ| offset.
pub const SUBSTITUTIONS: [(i64, i64, i64, &[i64], i64); 9] = [
    (2, 2, 4, &[0, 1, 1], -4),
    (1, 1, 3, &[0, 1], -2),
    (1, 2, 3, &[-1, 1, 2], -4),
    (0, 1, 2, &[-1, 2], -2),
    (1, 1, 2, &[-2, 2, 4], -4),
    (0, 0, 1, &[-2, 4], -2),
    (0, 2, 2, &[0, -2, 4], -4),
    (0, 0, 2, &[1], 0),
    (0, 0, 0, &[-4, 0, 16], -4),
];

pub fn substitution_table() -> Vec<CheckRow> {
    SUBSTITUTIONS
        .iter()
        .map(|&(p, q, r, c, e)| {
            let t = Timer::start();
            let params = json!({ "p": p, "q": q, "r": r });
            let name = format!("substitution u^{p}v^{q}/(u+v)^{r} G");
            let out = match uv_integrate(&UVExpr::from_terms(vec![UVTerm::real(rat_int(1), p, q, r, vec![], vec![])])) {
                Ok(o) => o,
                Err(err) => return err_row(Some(2), &name, params, &err, &t),
            };
            let want = RationalInS::from_poly(Poly::from_i64(c));
            let ok = out.terms.len() == 1 && out.terms[0].coeff == want && out.terms[0].c_power == 1 && out.terms[0].norm_offset == e;
            CheckRow::measured(
                Some(2),
                &name,
                params,
                Value::String(render_text(&out)),
                json!({ "coefficient": want.render(), "norm_offset": e }),
                if ok { 0.0 } else { 1.0 },
                0.0,
                t.secs(),
            )
        })
        .collect()
}

pub fn gamma_identity_grid(exec: Exec) -> Vec<CheckRow> {
    let t = Timer::start();
    let results = lab::check_gamma_identity_grid(exec);
    let secs = t.secs();
    let mut rows: Vec<CheckRow> = results
        .into_iter()
        .map(|r| match r {
            Ok(c) => CheckRow::measured(
                Some(3),
                &format!("gamma-integral identity n={} s={:.2}", c.n, c.s[0]),
                json!({ "n": c.n, "s": c.s }),
                json!(c.lhs),
                json!(c.rhs),
                c.rel_error,
                1e-8,
                secs / 25.0,
            ),
            Err(e) => err_row(Some(3), "gamma-integral identity", json!({}), &e, &t),
        })
        .collect();
    rows.push(CheckRow::measured(Some(3), "gamma-integral grid runtime", json!({ "points": 25 }), num(secs), num(60.0), secs, 60.0, secs));
    rows
}

/// T values for the steepest-descent fit.
pub fn steepest_descent_ts() -> Vec<f64> {
    (0..13).map(|i| 10f64.powf(4.0 + i as f64 / 6.0)).collect()
}

pub fn steepest_descent() -> Vec<CheckRow> {
    let t = Timer::start();
    let ts = steepest_descent_ts();
    let fit = lab::fit_tau_expansion(&ts, 4);
    let closed = lab::tau_expansion(2);
    let secs = t.secs();
    let params = json!({ "T_min": 1e4, "T_max": 1e6, "points": ts.len(), "order": 4 });
    vec![
        CheckRow::measured(Some(4), "steepest descent leading coefficient", params.clone(), num(fit.coeffs[0]), num(2.0), (fit.coeffs[0] - 2.0).abs(), 1e-6, secs),
        CheckRow::measured(
            Some(4),
            "steepest descent C2: substitution vs fit",
            params,
            num(fit.coeffs[1]),
            num(closed[1]),
            (fit.coeffs[1] / closed[1] - 1.0).abs(),
            1e-4,
            secs,
        ),
    ]
}

/// 𝒵 on a small circle around s0 is finite, and its 8-point mean reproduces the centre.
fn disk_probe(p: &TorusProblem, s0: f64) -> (f64, bool) {
    let r = 1e-2;
    let centre = torus::zcal(p, cx(s0));
    let pts: Vec<Complex64> = (0..8).map(|k| torus::zcal(p, cx(s0) + Complex64::from_polar(r, std::f64::consts::PI * k as f64 / 4.0))).collect();
    let finite = centre.re.is_finite() && pts.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    let mean = pts.iter().sum::<Complex64>() / 8.0;
    ((mean - centre).norm() / centre.norm().max(1.0), finite)
}

pub fn circle_zeta() -> Vec<CheckRow> {
    let p = TorusProblem::flat(1, 0, true);
    let mut rows = Vec::new();
    let t = Timer::start();
    match torus::epstein_zeta(&p, cx(1.0)) {
        Ok(z) => rows.push(CheckRow::measured(Some(5), "circle Z(1)", json!({ "s": 1 }), cnum(z), num(1.0 / 12.0), (z - 1.0 / 12.0).norm(), 1e-10, t.secs())),
        Err(e) => rows.push(err_row(Some(5), "circle Z(1)", json!({ "s": 1 }), &e, &t)),
    }
    let t = Timer::start();
    match torus::epstein_zeta(&p, cx(-1.0)) {
        Ok(z) => rows.push(CheckRow::measured(Some(5), "circle Z(-1) continued", json!({ "s": -1 }), cnum(z), num(0.0), z.norm(), 1e-10, t.secs())),
        Err(e) => rows.push(err_row(Some(5), "circle Z(-1) continued", json!({ "s": -1 }), &e, &t)),
    }
    for s0 in [0.5, 0.0] {
        let t = Timer::start();
        let (dev, finite) = disk_probe(&p, s0);
        let err = if finite { dev } else { f64::INFINITY };
        rows.push(CheckRow::measured(Some(5), "corrected zeta regular (8-point disk)", json!({ "s": s0, "radius": 1e-2 }), num(dev), num(0.0), err, 1e-8, t.secs()));
    }
    rows
}

pub fn spectral_vs_fd() -> Vec<CheckRow> {
    let p = TorusProblem::flat(1, 64, false);
    let s = cx(3.0);
    let e = DMatrix::from_element(1, 1, 1.0);
    let cases = [("constant", TorusPerturbation::Constant { e: e.clone() }), ("cos(3x)", TorusPerturbation::CosMode { e, m: vec![3] })];
    cases
        .iter()
        .map(|(label, h)| {
            let t = Timer::start();
            let name = format!("spectral Hessian vs finite differences, h = {label}");
            let params = json!({ "n": 1, "K": 64, "s": 3, "h": label });
            let l = match torus::hessian_lemma31(&p, h, s) {
                Ok(l) => l,
                Err(err) => return err_row(Some(6), &name, params, &err, &t),
            };
            match torus::hessian_fd(&p, h, s) {
                Ok(fd) => CheckRow::measured(Some(6), &name, params, cnum(l.value), cnum(fd), (l.value - fd).norm() / fd.norm(), 1e-6, t.secs()),
                Err(err) => err_row(Some(6), &name, params, &err, &t),
            }
        })
        .collect()
}

pub const HEAT_TIMES: [f64; 3] = [1e-2, 3e-3, 1e-3];

pub fn heat_trace() -> Vec<CheckRow> {
    let p = TorusProblem::flat(1, 0, false);
    let h = TorusPerturbation::CosMode { e: DMatrix::from_element(1, 1, 1.0), m: vec![3] };
    let mut rows = Vec::new();
    let mut devs = Vec::new();
    for &t in &HEAT_TIMES {
        let tm = Timer::start();
        let params = json!({ "n": 1, "m": 3, "t": t });
        let r = torus::heat_trace_second_variation(&p, &h, t / 2.0, t / 2.0).and_then(|v| Ok((v.value * t.powf(2.5), torus::heat_trace_prediction(&p, &h, t)?)));
        match r {
            Ok((val, pred)) => {
                let dev = (val / pred - 1.0).abs();
                devs.push(dev);
                // only the smallest t carries the 2% budget; the others are reported
                let budget = if t == 1e-3 { 0.02 } else { f64::INFINITY };
                rows.push(CheckRow::measured(Some(7), "heat-trace second variation vs symbol", params, num(val), num(pred), dev, budget, tm.secs()));
            }
            Err(e) => rows.push(err_row(Some(7), "heat-trace second variation vs symbol", params, &e, &tm)),
        }
    }
    let decreasing = devs.len() == 3 && devs.windows(2).all(|w| w[1] < w[0]);
    rows.push(CheckRow::measured(
        Some(7),
        "heat-trace deviation decreases with t",
        json!({ "t": HEAT_TIMES }),
        json!(devs),
        Value::String("decreasing".into()),
        if decreasing { 0.0 } else { 1.0 },
        0.0,
        0.0,
    ));
    rows
}

/// |m| ∈ {8, …, 64}.
pub fn nonlocal_modes() -> Vec<i64> {
    (8..=64).collect()
}

pub fn nonlocal_exponent() -> Vec<CheckRow> {
    let t = Timer::start();
    let p = TorusProblem::flat(1, 0, false);
    let params = json!({ "n": 1, "s": 0.8, "m": [8, 64], "digits": 40, "e": 1.0 });
    match extended::nonlocal_check(&p, 1.0, 0.8, &nonlocal_modes()) {
        Ok(c) => vec![CheckRow::measured(
            Some(8),
            "coefficient of |m|^(n-2s) from brute-force Hessians",
            params,
            json!({ "fitted": c.fit.u, "rel_residual": c.fit.rel_residual, "hessian_scale": c.hessian_scale }),
            num(c.predicted),
            c.rel_deviation,
            0.05,
            t.secs(),
        )],
        Err(e) => vec![err_row(Some(8), "coefficient of |m|^(n-2s)", params, &e, &t)],
    }
}

pub const LINEARIZATION_SEED: u64 = 20240917;

pub fn linearization() -> Vec<CheckRow> {
    let mut rows = Vec::new();
    for n in 1..=4usize {
        for c1 in [0i64, 1] {
            let t = Timer::start();
            let c = check_linearization(n, c1, 20, LINEARIZATION_SEED + n as u64);
            let err = c.max_entry_error.max(c.max_probe_error);
            rows.push(CheckRow::measured(
                Some(9),
                "linearization tables vs finite differences",
                json!({ "n": n, "c1": c1, "entries": c.entries_checked, "probes": c.random_probes, "seed": c.seed }),
                json!({ "max_entry_error": c.max_entry_error, "max_probe_error": c.max_probe_error }),
                num(0.0),
                err,
                1e-6,
                t.secs(),
            ));
        }
    }
    rows
}

/// (p, q, r) over 0 ≤ p, q ≤ 3 and 0 ≤ r ≤ min(p, q) + 2.
pub fn uv_grid() -> Vec<(i64, i64, i64)> {
    let mut v = Vec::new();
    for p in 0..=3 {
        for q in 0..=3 {
            for r in 0..=(p.min(q) + 2) {
                v.push((p, q, r));
            }
        }
    }
    v
}

pub fn pole_property() -> Vec<CheckRow> {
    let t = Timer::start();
    let mut bad = Vec::new();
    let mut checked = 0usize;
    let table = theorem2_table().unwrap_or_default();
    for n in 1..=5u32 {
        for (k, e) in &table {
            for term in &e.terms {
                // u_s carries one power of C(s) on top of the table
                let rep = pole_locations(&term.coeff, term.c_power + 1, n, 8);
                checked += 1;
                if !poles_in_half_n_plus_naturals(&rep) {
                    bad.push(format!("theorem2 ({k}) n={n}: {:?}", rep.post_reduction));
                }
            }
        }
        for (p, q, r) in uv_grid() {
            checked += 1;
            match uv_coefficient(p, q, r) {
                Ok(uc) => {
                    let rep = pole_locations(&uc.coeff, uc.c_power, n, 8);
                    if !poles_in_half_n_plus_naturals(&rep) {
                        bad.push(format!("uv ({p},{q},{r}) n={n}: {:?}", rep.post_reduction));
                    }
                }
                Err(e) => bad.push(format!("uv ({p},{q},{r}): {e}")),
            }
        }
    }
    let ok = table.len() == 6 && bad.is_empty();
    vec![CheckRow::measured(
        Some(10),
        "poles lie in n/2 + N+",
        json!({ "n": [1, 5], "uv_grid": "0<=p,q<=3, 0<=r<=min(p,q)+2", "checked": checked }),
        json!(bad),
        json!([]),
        if ok { 0.0 } else { bad.len().max(1) as f64 },
        0.0,
        t.secs(),
    )]
}

/// Remainder of the truncated (u + v < 1) integral decays like |ξ|^{−2}, and the pole at S = 1.
pub fn uv_truncation() -> Vec<CheckRow> {
    let t = Timer::start();
    let mut rows = Vec::new();
    match lab::uv_truncated_vs_full(0, 0, 0, 3, 0.3) {
        Ok(u) => {
            rows.push(CheckRow::measured(None, "truncated uv remainder exponent", json!({ "pqr": u.pqr, "n": 3, "s": 0.3 }), num(u.remainder_exponent), num(-2.0), (u.remainder_exponent + 2.0).abs(), 0.05, t.secs()));
            rows.push(CheckRow::measured(
                None,
                "uv closed form vs quadrature",
                json!({ "pqr": u.pqr, "n": 3, "s": 0.3 }),
                num(u.full_closed),
                num(u.full_quadrature),
                (u.full_closed / u.full_quadrature - 1.0).abs(),
                1e-8,
                t.secs(),
            ));
        }
        Err(e) => rows.push(err_row(None, "truncated uv remainder", json!({}), &e, &t)),
    }
    let t = Timer::start();
    match lab::uv_pole_probe(3, 3.0, 1e-4) {
        Ok(v) => rows.push(CheckRow::measured(None, "uv remainder pole residue at S = 1", json!({ "n": 3, "xi": 3.0, "delta": 1e-4 }), num(v), num(-24.0), (v + 24.0).abs() / 24.0, 1e-2, t.secs())),
        Err(e) => rows.push(err_row(None, "uv remainder pole residue", json!({}), &e, &t)),
    }
    rows
}

/// Spectral Hessian of the circle in double vs 40-digit arithmetic (s = 3, m = 3).
pub fn extended_agreement() -> Vec<CheckRow> {
    let t = Timer::start();
    let p = TorusProblem::flat(1, 64, false);
    let h = TorusPerturbation::CosMode { e: DMatrix::from_element(1, 1, 1.0), m: vec![3] };
    let r = torus::hessian_lemma31(&p, &h, cx(3.0)).and_then(|l| Ok((l.value, extended::circle_hessian(&p, 3, 3.0)?.to_f64())));
    match r {
        Ok((a, b)) => vec![CheckRow::measured(None, "circle Hessian: spectral vs extended precision", json!({ "s": 3, "m": 3 }), cnum(a), num(b), (a.re / b - 1.0).abs(), 1e-6, t.secs())],
        Err(e) => vec![err_row(None, "circle Hessian: spectral vs extended precision", json!({}), &e, &t)],
    }
}

/// τ-type Q: u₀ against its Gamma closed form, and the reconstruction order.
pub fn split_suite() -> Vec<CheckRow> {
    let mut rows = Vec::new();
    let tau_q = |_: f64, big_t: f64| lab::tau_integral(big_t);
    let n = 3u32;
    let s = cx(1.2);
    let inp = split::SplitInput { q: &tau_q, n, s };
    let t = Timer::start();
    match split::lemma65_split(&inp, 0, 1) {
        Ok(r) => {
            // ∫ T^S τ(T) dT = Γ(S−1)Γ(−S)Γ(2−S)/Γ(−2S)
            let big_s = s - n as f64 / 2.0;
            let g = crate::special::gamma;
            let want = g(big_s - 1.0) * g(-big_s) * g(-big_s + 2.0) / g(-big_s * 2.0);
            let got = r.u[0].c();
            rows.push(CheckRow::measured(None, "split u0 vs Gamma closed form", json!({ "q": "tau", "n": n, "s": [1.2, 0.0] }), cnum(got), cnum(want), (got - want).norm() / want.norm(), 1e-6, t.secs()));
        }
        Err(e) => rows.push(err_row(None, "split u0", json!({}), &e, &t)),
    }
    let rat_q = |t: f64, big_t: f64| 1.0 / (1.0 + big_t + t);
    let inp = split::SplitInput { q: &rat_q, n, s };
    for (order, xis) in [(0usize, [40.0, 80.0, 160.0, 320.0]), (1, [20.0, 40.0, 80.0, 160.0])] {
        let t = Timer::start();
        let r = split::lemma65_split(&inp, order, order).and_then(|r| split::reconstruction_check(&inp, &r, &xis));
        match r {
            Ok(rec) => rows.push(CheckRow::measured(
                None,
                "split reconstruction order",
                json!({ "q": "1/(1+T+t)", "order": order, "xi": xis }),
                num(rec.fitted_exponent),
                num(rec.predicted_exponent),
                (rec.fitted_exponent - rec.predicted_exponent).abs(),
                0.2,
                t.secs(),
            )),
            Err(e) => rows.push(err_row(None, "split reconstruction order", json!({ "order": order }), &e, &t)),
        }
    }
    rows
}

pub const SUITES: [&str; 4] = ["identities", "torus", "split", "all"];

pub fn run_suite(name: &str, exec: Exec) -> crate::Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let identities = |rows: &mut Vec<CheckRow>| {
        rows.extend(theorem2());
        rows.extend(substitution_table());
        rows.extend(gamma_identity_grid(exec));
        rows.extend(steepest_descent());
        rows.extend(linearization());
        rows.extend(pole_property());
        rows.extend(uv_truncation());
    };
    let torus_suite = |rows: &mut Vec<CheckRow>| {
        rows.extend(circle_zeta());
        rows.extend(spectral_vs_fd());
        rows.extend(heat_trace());
        rows.extend(nonlocal_exponent());
        rows.extend(extended_agreement());
    };
    match name {
        "identities" => identities(&mut rows),
        "torus" => torus_suite(&mut rows),
        "split" => rows.extend(split_suite()),
        "all" => {
            identities(&mut rows);
            torus_suite(&mut rows);
            rows.extend(split_suite());
        }
        "" => return Err(Error::Invalid(format!("empty suite name; expected one of {}", SUITES.join(", ")))),
        other => return Err(Error::Invalid(format!("unknown suite '{other}'; expected one of {}", SUITES.join(", ")))),
    }
    Ok(rows)
}
