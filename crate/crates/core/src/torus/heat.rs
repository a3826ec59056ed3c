//! Heat traces on the torus and the small-time behaviour of Tr F′e^{−uF}F′e^{−vF}.

use num_complex::Complex64;

use super::spectral::{check_cutoff, OperatorCoefficients};
use super::{box_modes, TorusPerturbation, TorusProblem};
use crate::error::{Error, Result};
use crate::exec::{compensated_sum, Exec};
use crate::expr::MultiIndex;
use crate::heat_symbol::sigma_term;
use crate::operator::{linearize_scalar_family, trace_product};
use crate::poly::{rat_int, rat_to_f64};

/// exp(−x) below this is dropped from the sums.
const TAIL_EXPONENT: f64 = 40.0;

/// Σ_k e^{−tλ_k} over the full lattice (the box is enlarged until the tail is negligible).
pub fn heat_trace(p: &TorusProblem, t: f64) -> f64 {
    let lmin = p.scale() * super::form_minimum(&p.ginv());
    let k = ((TAIL_EXPONENT / (t * lmin)).sqrt().ceil() as usize + 1).max(p.k_cutoff);
    let q = p.with_cutoff(k);
    compensated_sum(q.modes().iter().map(|m| (-t * q.eigenvalue(m)).exp()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatTraceValue {
    pub value: f64,
    /// cutoff actually used
    pub k_used: usize,
    /// false when the requested cutoff had to be enlarged
    pub cutoff_ok: bool,
}

/// Σ_{k,k′} |⟨k′|F′|k⟩|² e^{−uλ_k − vλ_{k′}}.
pub fn heat_trace_second_variation(p: &TorusProblem, h: &TorusPerturbation, u: f64, v: f64) -> Result<HeatTraceValue> {
    heat_trace_second_variation_with(p, h, u, v, Exec::default())
}

pub fn heat_trace_second_variation_with(p: &TorusProblem, h: &TorusPerturbation, u: f64, v: f64, exec: Exec) -> Result<HeatTraceValue> {
    if !(u > 0.0 && v > 0.0) {
        return Err(Error::Invalid("u and v must be positive".into()));
    }
    h.validate(p.n)?;
    let oc = OperatorCoefficients::new(p, h, 0.0)?;
    let lmin = p.scale() * super::form_minimum(&p.ginv());
    let mmax = oc.m.iter().map(|x| x.abs()).max().unwrap_or(0) as usize * oc.band as usize;
    let need = (TAIL_EXPONENT / ((u + v) * lmin)).sqrt().ceil() as usize + mmax + 1;
    let k_used = need.max(p.k_cutoff);
    let q = p.with_cutoff(k_used);
    check_cutoff(&q, h)?;
    let kc = k_used as i64;
    let modes = box_modes(p.n, kc);
    let rows = exec.map_slice(&modes, |k| {
        let lk = oc.element(k, k).v;
        let mut acc = Vec::new();
        for l in -oc.band..=oc.band {
            let kp: Vec<i64> = k.iter().zip(&oc.m).map(|(a, b)| a + l * b).collect();
            if kp.iter().any(|x| x.abs() > kc) || (l != 0 && oc.band == 0) {
                continue;
            }
            let f1 = oc.element(&kp, k).d1;
            if f1 == 0.0 {
                continue;
            }
            let lkp = oc.element(&kp, &kp).v;
            acc.push(f1 * f1 * (-u * lk - v * lkp).exp());
        }
        compensated_sum(acc)
    });
    Ok(HeatTraceValue { value: compensated_sum(rows), k_used, cutoff_ok: need <= p.k_cutoff })
}

/// Leading small-t behaviour of t^{n/2+2}·Tr F′e^{−tF/2}F′e^{−tF/2} for h = e·cos(m·x) on the
/// unit-metric torus, from the Gaussian symbols:
///
///   t^{n/2+2} (2π)ⁿ/2 · Σ tr(A^{ij}_{0β} A^{kl}_{0δ}) e_ij e_kl σ(0, ∂^β, 0, ∂^δ)|_{ξ=m, u=v=t/2}.
///
/// The (2π)ⁿ is the volume and the 1/2 the mean of cos².
pub fn heat_trace_prediction(p: &TorusProblem, h: &TorusPerturbation, t: f64) -> Result<f64> {
    let TorusPerturbation::CosMode { e, m } = h else {
        return Err(Error::Invalid("heat-trace prediction needs a CosMode perturbation".into()));
    };
    h.validate(p.n)?;
    let n = p.n;
    if (&p.g - nalgebra::DMatrix::<f64>::identity(n, n)).amax() > 1e-14 || p.v_factor {
        return Err(Error::Invalid("heat-trace prediction is for g = I with the volume factor off".into()));
    }
    let spec = linearize_scalar_family(n, &rat_int(0), &rat_int(0));
    let principal: Vec<_> = spec.entries.iter().filter(|((_, _, a, _), _)| a.order() == 0).collect();
    let xi: Vec<f64> = m.iter().map(|x| *x as f64).collect();
    let zero = MultiIndex::zero(n).to_indices();
    let mut acc = Complex64::new(0.0, 0.0);
    for ((i, j, _, b), ma) in &principal {
        for ((k, l, _, d), mb) in &principal {
            let w = rat_to_f64(&trace_product(ma, mb)) * e[(*i, *j)] * e[(*k, *l)];
            if w == 0.0 {
                continue;
            }
            let sig = sigma_term(&zero, &b.to_indices(), &zero, &d.to_indices())?;
            acc += sig.eval(n, t / 2.0, t / 2.0, &xi)? * w;
        }
    }
    let vol = (2.0 * std::f64::consts::PI).powi(n as i32);
    Ok(acc.re * vol / 2.0 * t.powf(n as f64 / 2.0 + 2.0))
}
