//! The subcommands as library calls: each returns a JSON document (validated against the files
//! in `schemas/`) plus a text rendering.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::expr::{render_latex, render_text, TensorExprJson};
use crate::gamma::{c_order_at, pole_locations};
use crate::heat_symbol::{hand_encoded_table, theorem2_table};
use crate::io::{cnum, num, CheckRow, Format, Precision};
use crate::lab::split;
use crate::operator::{assemble_us, linearize_scalar_family, load_operator_spec, OperatorSpec, PerturbationDirection, UsCache};
use crate::poly::{fmt_rational, parse_rational, rat_int, RationalInS};
use crate::torus::{self, extended, TorusPerturbation, TorusProblem, TorusProblemJson};

pub struct Output {
    pub json: Value,
    pub text: String,
    /// nonzero exit status requested by the command (e.g. failed checks)
    pub failures: usize,
}

pub fn theorem2(format: Format, check: bool) -> Result<Output> {
    let table = theorem2_table()?;
    let reference = hand_encoded_table();
    let checks: Option<Vec<CheckRow>> = check.then(crate::verify::theorem2);
    let failures = checks.as_ref().map(|c| c.iter().filter(|r| !r.pass).count()).unwrap_or(0);
    let text = match format {
        Format::Latex => {
            let mut s = String::from("\\documentclass{article}\n\\usepackage{amsmath}\n\\begin{document}\n\\begin{align*}\n");
            let lines: Vec<String> = table.iter().map(|(k, v)| format!("\\text{{({k})}}\\quad & {}", render_latex(v))).collect();
            s += &lines.join(" \\\\\n");
            s += "\n\\end{align*}\n\\end{document}\n";
            s
        }
        _ => {
            let mut s = String::from("u_s = C(s) x the following, per pattern (alpha, beta, gamma, delta):\n");
            for (k, v) in &table {
                s += &format!("({k}) {}\n", render_text(v));
            }
            if let Some(c) = &checks {
                for r in c.iter().filter(|r| r.name.starts_with("theorem2 (")) {
                    s += &format!("{} {}\n", if r.pass { "PASS" } else { "FAIL" }, r.name);
                }
                s += &format!("{}/6 patterns match\n", 6 - failures.min(6));
            }
            s
        }
    };
    let patterns: BTreeMap<String, Value> = table
        .iter()
        .map(|(k, v)| (k.to_string(), json!({ "expr": TensorExprJson::from(v), "text": render_text(v), "latex": render_latex(v) })))
        .collect();
    let json = json!({
        "kind": "theorem2",
        "patterns": patterns,
        "checks": checks,
        "reference_available": reference.len() == 6,
    });
    Ok(Output { json, text, failures })
}

/// "laplacian", "conformal" (c₁ = 1) or "family:c1" pick built-in specs; anything else is a file.
pub fn builtin_spec(name: &str, n: usize) -> Result<Option<OperatorSpec>> {
    let c1 = match name {
        "laplacian" => rat_int(0),
        "conformal" => rat_int(1),
        _ => match name.strip_prefix("family:") {
            Some(c) => parse_rational(c)?,
            None => return Ok(None),
        },
    };
    if n == 0 {
        return Err(Error::Invalid("built-in specs need n ≥ 1".into()));
    }
    Ok(Some(linearize_scalar_family(n, &c1, &rat_int(0))))
}

pub fn load_spec(name: &str, n: Option<usize>) -> Result<(OperatorSpec, Vec<String>)> {
    if let Some(spec) = builtin_spec(name, n.unwrap_or(0).max(if n.is_some() { 0 } else { 1 }))? {
        if n.is_none() {
            return Err(Error::Invalid("built-in specs need --n".into()));
        }
        return Ok((spec, vec![]));
    }
    let text = crate::io::read_file(std::path::Path::new(name))?;
    load_operator_spec(&text)
}

/// s in n/2 + ℕ⁺ is reported as a pole before anything is evaluated.
fn pole_diagnostic(n: usize, s: Complex64) -> Result<()> {
    let big = s - n as f64 / 2.0;
    if big.im == 0.0 && big.re >= 1.0 && big.re.fract() == 0.0 {
        let s0 = num_rational::BigRational::from_integer((big.re as i64).into());
        if c_order_at(&s0) > 0 {
            return Err(Error::Pole(format!("s = {} lies in n/2 + N+ = {{{}, {}, …}}: u_s has a pole", s.re, n as f64 / 2.0 + 1.0, n as f64 / 2.0 + 2.0)));
        }
    }
    Ok(())
}

pub fn us(spec: &OperatorSpec, s: Complex64, xi: &[f64], h: &PerturbationDirection, warnings: Vec<String>) -> Result<Output> {
    pole_diagnostic(spec.n, s)?;
    let cache = UsCache::default();
    let m = assemble_us(spec, s, xi, h, &cache)?;
    let n = spec.n;
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            asym = asym.max((m[i][j] - m[j][i]).norm());
        }
    }
    // poles of the C(s) prefactor, listed for the record
    let rep = pole_locations(&RationalInS::one(), 1, n as u32, 4);
    let mut warnings = warnings;
    if spec.rank > 1 {
        warnings.push("bundle rank > 1: the trace contraction order is ambiguous; output is experimental".into());
    }
    let mut text = format!("(u_s(x, xi) h)_ij at s = {}{:+}i, xi = {:?}\n", s.re, s.im, xi);
    for row in &m {
        let cells: Vec<String> = row.iter().map(|z| if z.im == 0.0 { format!("{:>14.6e}", z.re) } else { format!("{:.6e}{:+.6e}i", z.re, z.im) }).collect();
        text += &cells.join("  ");
        text += "\n";
    }
    for w in &warnings {
        text += &format!("warning: {w}\n");
    }
    let json = json!({
        "kind": "us",
        "n": n,
        "rank": spec.rank,
        "s": cnum(s),
        "xi": xi,
        "h": h.e.iter().map(|r| r.iter().map(fmt_rational).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "matrix": m.iter().map(|r| r.iter().map(|z| cnum(*z)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "asymmetry": num(asym),
        "poles": rep.post_reduction.iter().map(|(s, o)| json!({ "s": s, "order": o })).collect::<Vec<_>>(),
        "experimental": spec.rank > 1,
        "warnings": warnings,
    });
    Ok(Output { json, text, failures: 0 })
}

pub fn load_torus_problem(text: &str) -> Result<(TorusProblem, TorusPerturbation)> {
    let j: TorusProblemJson = serde_json::from_str(text).map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    j.parse()
}

pub fn torus_hessian(p: &TorusProblem, h: &TorusPerturbation, s: Complex64, precision: Precision, exec: Exec) -> Result<Output> {
    let l = torus::hessian::hessian_lemma31_with(p, h, s, exec)?;
    let fd = torus::hessian_fd(p, h, s)?;
    let corr = torus::intrinsic_correction(p, h, s)?;
    let ext = match (precision, h) {
        (Precision::Extended, TorusPerturbation::CosMode { e, m }) if p.n == 1 && s.im == 0.0 => {
            let v = extended::circle_hessian(p, m[0], s.re)? * num_bigfloat::BigFloat::from_f64(e[(0, 0)] * e[(0, 0)]);
            Some(v.to_string())
        }
        (Precision::Extended, _) => return Err(Error::Invalid("extended precision is available for n = 1, CosMode h and real s".into())),
        _ => None,
    };
    let mut text = format!(
        "Hess Z(s)(h,h) at s = {}{:+}i\n  spectral terms: {:.12e} {:.12e} {:.12e} {:.12e}\n  spectral total: {:.12e}{:+.3e}i (K -> K+4 change {:.2e}{})\n  finite differences: {:.12e}{:+.3e}i\n  intrinsic = flat + {:.12e}\n",
        s.re, s.im, l.terms[0].re, l.terms[1].re, l.terms[2].re, l.terms[3].re, l.value.re, l.value.im, l.increment,
        if l.converged { "" } else { ", NOT converged" }, fd.re, fd.im, corr.re
    );
    if let Some(x) = &ext {
        text += &format!("  extended precision: {x}\n");
    }
    let mut warnings = Vec::new();
    if s.re <= p.n as f64 / 2.0 + 1.0 {
        warnings.push(format!("Re s ≤ n/2 + 1: the truncated mode sums (spectral and finite-difference routes) carry a cutoff error; K -> K+4 change {:.1e}", l.increment));
    }
    for w in &warnings {
        text += &format!("warning: {w}\n");
    }
    let json = json!({
        "kind": "torus-hessian",
        "n": p.n,
        "K": p.k_cutoff,
        "v_factor": p.v_factor,
        "s": cnum(s),
        "terms": l.terms.iter().map(|z| cnum(*z)).collect::<Vec<_>>(),
        "value": cnum(l.value),
        "increment": num(l.increment),
        "converged": l.converged,
        "finite_difference": cnum(fd),
        "rel_difference": num((l.value - fd).norm() / fd.norm().max(f64::MIN_POSITIVE)),
        "intrinsic_correction": cnum(corr),
        "extended": ext,
        "warnings": warnings,
    });
    Ok(Output { json, text, failures: 0 })
}

pub fn heat_trace(p: &TorusProblem, h: &TorusPerturbation, ts: &[f64], exec: Exec) -> Result<(Output, Vec<Vec<String>>)> {
    if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Invalid("times must be positive".into()));
    }
    let mut rows = Vec::new();
    let mut csv = Vec::new();
    let mut text = String::from("t, t^(n/2+2) Tr F'e^(-tF/2)F'e^(-tF/2), symbol prediction, rel. deviation\n");
    let pw = p.n as f64 / 2.0 + 2.0;
    for &t in ts {
        let v = torus::heat::heat_trace_second_variation_with(p, h, t / 2.0, t / 2.0, exec)?;
        let val = v.value * t.powf(pw);
        let pred = torus::heat_trace_prediction(p, h, t).ok();
        let dev = pred.map(|q| (val / q - 1.0).abs());
        text += &format!("{t:e}, {val:.10e}, {}, {}\n", pred.map(|x| format!("{x:.10e}")).unwrap_or("-".into()), dev.map(|x| format!("{x:.3e}")).unwrap_or("-".into()));
        csv.push(vec![format!("{t:e}"), format!("{val:e}"), pred.map(|x| format!("{x:e}")).unwrap_or_default(), dev.map(|x| format!("{x:e}")).unwrap_or_default(), v.k_used.to_string()]);
        rows.push(json!({ "t": t, "value": num(val), "prediction": pred.map(num), "rel_deviation": dev.map(num), "k_used": v.k_used }));
    }
    let json = json!({ "kind": "heat-trace", "n": p.n, "rows": rows });
    Ok((Output { json, text, failures: 0 }, csv))
}

pub const SPLIT_QS: [&str; 3] = ["tau", "rational", "exponential"];

pub fn split(q: &str, n: u32, s: Complex64, k_max: usize, l_max: usize, xis: &[f64]) -> Result<Output> {
    let tau = |_: f64, tt: f64| crate::lab::tau_integral(tt);
    let rational = |t: f64, tt: f64| 1.0 / (1.0 + tt + t);
    let expo = |t: f64, tt: f64| (-(tt + t)).exp();
    let qf: &(dyn Fn(f64, f64) -> f64 + Sync) = match q {
        "tau" => &tau,
        "rational" => &rational,
        "exponential" => &expo,
        _ => return Err(Error::Invalid(format!("unknown Q '{q}'; expected one of {}", SPLIT_QS.join(", ")))),
    };
    let inp = split::SplitInput { q: qf, n, s };
    let r = split::lemma65_split(&inp, k_max, l_max)?;
    let rec = if xis.is_empty() { None } else { Some(split::reconstruction_check(&inp, &r, xis)?) };
    let mut text = format!("U/V split of Q = {q}, n = {n}, s = {}{:+}i\n", s.re, s.im);
    for (k, e) in r.u.iter().enumerate() {
        text += &format!("  u_{k} = {:.10e}{:+.3e}i  (± {:.1e})\n", e.value[0], e.value[1], e.error);
    }
    for (l, e) in r.v.iter().enumerate() {
        text += &format!("  v_{l} = {:.10e}{:+.3e}i  (± {:.1e})\n", e.value[0], e.value[1], e.error);
    }
    if let Some(rc) = &rec {
        text += &format!("  remainder exponent {:.3} (predicted {:.3})\n", rc.fitted_exponent, rc.predicted_exponent);
    }
    for w in &r.warnings {
        text += &format!("warning: {w}\n");
    }
    let json = json!({
        "kind": "split",
        "q": q,
        "n": n,
        "s": cnum(s),
        "u": r.u,
        "v": r.v,
        "decay_constant": num(r.decay_constant),
        "warnings": r.warnings,
        "reconstruction": rec,
    });
    Ok(Output { json, text, failures: 0 })
}

pub fn verify(suite: &str, exec: Exec) -> Result<Vec<CheckRow>> {
    crate::verify::run_suite(suite, exec)
}
