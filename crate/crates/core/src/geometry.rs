//! Coordinate formulas for F_g = Δ_g + c₁μ Scal_g at the origin, for metrics g = δ + σh(x)
//! with h quadratic in x. Differencing in σ gives an oracle for the linearization tables
//! that shares nothing with them: the geometry is the full nonlinear one.

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::expr::MultiIndex;
use crate::operator::{linearize_scalar_family, OperatorSpec};
use crate::poly::rat_to_f64;

/// p(x) = a + Σ b_k x_k + ½ Σ c_kl x_k x_l (c symmetric) — only the 2-jet at 0 matters.
#[derive(Clone, Debug)]
pub struct Quadratic {
    pub a: f64,
    pub b: Vec<f64>,
    pub c: Vec<Vec<f64>>,
}

impl Quadratic {
    pub fn zero(n: usize) -> Self {
        Quadratic { a: 0.0, b: vec![0.0; n], c: vec![vec![0.0; n]; n] }
    }

    /// x^α/α!, so that ∂^β of it at 0 is δ_αβ.
    pub fn monomial(alpha: &MultiIndex) -> Self {
        let n = alpha.0.len();
        let mut q = Quadratic::zero(n);
        let idx: Vec<usize> = alpha.0.iter().enumerate().flat_map(|(i, k)| std::iter::repeat(i).take(*k as usize)).collect();
        match idx.as_slice() {
            [] => q.a = 1.0,
            [k] => q.b[*k] = 1.0,
            [k, l] => {
                q.c[*k][*l] = 1.0;
                q.c[*l][*k] = 1.0;
            }
            _ => panic!("monomials of degree > 2 are not representable"),
        }
        q
    }

    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let mut q = Quadratic::zero(n);
        q.a = rng.gen_range(-1.0..1.0);
        for k in 0..n {
            q.b[k] = rng.gen_range(-1.0..1.0);
            for l in k..n {
                let v = rng.gen_range(-1.0..1.0);
                q.c[k][l] = v;
                q.c[l][k] = v;
            }
        }
        q
    }

    /// ∂^α at 0 for |α| ≤ 2.
    pub fn derivative(&self, alpha: &MultiIndex) -> f64 {
        let idx: Vec<usize> = alpha.0.iter().enumerate().flat_map(|(i, k)| std::iter::repeat(i).take(*k as usize)).collect();
        match idx.as_slice() {
            [] => self.a,
            [k] => self.b[*k],
            [k, l] => self.c[*k][*l],
            _ => 0.0,
        }
    }
}

/// Symmetric field h_ij(x), each entry a quadratic.
#[derive(Clone, Debug)]
pub struct MetricField {
    pub n: usize,
    pub h: Vec<Vec<Quadratic>>,
}

impl MetricField {
    pub fn zero(n: usize) -> Self {
        MetricField { n, h: vec![vec![Quadratic::zero(n); n]; n] }
    }

    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let mut f = MetricField::zero(n);
        for i in 0..n {
            for j in i..n {
                let q = Quadratic::random(n, rng);
                f.h[i][j] = q.clone();
                f.h[j][i] = q;
            }
        }
        f
    }
}

fn inv(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let a = nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j]);
    let ai = a.try_inverse().expect("metric stays invertible for small σ");
    (0..n).map(|i| (0..n).map(|j| ai[(i, j)]).collect()).collect()
}

/// (F_{δ+σh} u)(0) with F = Δ + c₁μ Scal, Δ the positive Laplacian.
pub fn apply_operator(h: &MetricField, sigma: f64, u: &Quadratic, c1: f64) -> f64 {
    let n = h.n;
    let r = 0..n;
    let g: Vec<Vec<f64>> = r.clone().map(|i| r.clone().map(|j| (i == j) as u8 as f64 + sigma * h.h[i][j].a).collect()).collect();
    // dg[k][i][j] = ∂_k g_ij, ddg[k][l][i][j] = ∂_k∂_l g_ij
    let dg: Vec<Vec<Vec<f64>>> = r.clone().map(|k| r.clone().map(|i| r.clone().map(|j| sigma * h.h[i][j].b[k]).collect()).collect()).collect();
    let ddg = |k: usize, l: usize, i: usize, j: usize| sigma * h.h[i][j].c[k][l];
    let gi = inv(&g);
    // ∂_m g^{kl} = −g^{ka} ∂_m g_ab g^{bl}
    let dgi = |m: usize, k: usize, l: usize| -> f64 {
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                acc -= gi[k][a] * dg[m][a][b] * gi[b][l];
            }
        }
        acc
    };
    // Γ_{ijl} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij) and its derivative
    let gam1 = |i: usize, j: usize, l: usize| 0.5 * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
    let dgam1 = |m: usize, i: usize, j: usize, l: usize| 0.5 * (ddg(m, i, j, l) + ddg(m, j, i, l) - ddg(m, l, i, j));
    let gam = |k: usize, i: usize, j: usize| (0..n).map(|l| gi[k][l] * gam1(i, j, l)).sum::<f64>();
    let dgam = |m: usize, k: usize, i: usize, j: usize| (0..n).map(|l| dgi(m, k, l) * gam1(i, j, l) + gi[k][l] * dgam1(m, i, j, l)).sum::<f64>();

    let mut lap = 0.0;
    for i in 0..n {
        for j in 0..n {
            let conn: f64 = (0..n).map(|k| gam(k, i, j) * u.b[k]).sum();
            lap -= gi[i][j] * (u.c[i][j] - conn);
        }
    }
    if c1 == 0.0 || n < 2 {
        return lap;
    }
    // R_ij = ∂_k Γ^k_ij − ∂_j Γ^k_ik + Γ^k_kl Γ^l_ij − Γ^k_jl Γ^l_ik
    let mut scal = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut rij = 0.0;
            for k in 0..n {
                rij += dgam(k, k, i, j) - dgam(j, k, i, k);
                for l in 0..n {
                    rij += gam(k, k, l) * gam(l, i, j) - gam(k, j, l) * gam(l, i, k);
                }
            }
            scal += gi[i][j] * rij;
        }
    }
    let mu = (n as f64 - 2.0) / (4.0 * (n as f64 - 1.0));
    lap + c1 * mu * scal * u.a
}

/// d/dσ at 0 by central differences at ±`step`.
pub fn fd_linearization(h: &MetricField, u: &Quadratic, c1: f64, step: f64) -> f64 {
    (apply_operator(h, step, u, c1) - apply_operator(h, -step, u, c1)) / (2.0 * step)
}

/// Σ A^{ij}_{αβ} (∂^α h_ij)(∂^β u) at 0, for rank-1 specs.
pub fn table_action(spec: &OperatorSpec, h: &MetricField, u: &Quadratic) -> f64 {
    spec.entries
        .iter()
        .map(|((i, j, a, b), m)| rat_to_f64(&m[0][0]) * h.h[*i][*j].derivative(a) * u.derivative(b))
        .sum()
}

pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Debug, Serialize)]
pub struct LinearizationCheck {
    pub n: usize,
    pub c1: i64,
    /// (i, j, α, β) probes of single table entries (both orderings of i ≠ j at once)
    pub entries_checked: usize,
    pub max_entry_error: f64,
    pub random_probes: usize,
    pub max_probe_error: f64,
    pub seed: u64,
}

fn multi_indices(n: usize, max_order: u32) -> Vec<MultiIndex> {
    let mut out = vec![MultiIndex::zero(n)];
    for i in 0..n {
        out.push(MultiIndex::unit(n, i));
    }
    if max_order >= 2 {
        for i in 0..n {
            for j in i..n {
                out.push(MultiIndex::unit(n, i).add(&MultiIndex::unit(n, j)));
            }
        }
    }
    out
}

/// Every (i ≤ j, α, β) with |α|+|β| ≤ 2 is probed with h = E_ij x^α/α!, u = x^β/β!; then
/// `probes` random quadratic h, u are compared as full contractions.
pub fn check_linearization(n: usize, c1: i64, probes: usize, seed: u64) -> LinearizationCheck {
    let spec = linearize_scalar_family(n, &num_rational::BigRational::from_integer(c1.into()), &num_rational::BigRational::from_integer(0.into()));
    let c1f = c1.to_f64().unwrap_or(0.0);
    let mis = multi_indices(n, 2);
    let mut max_entry_error = 0.0f64;
    let mut entries_checked = 0;
    for i in 0..n {
        for j in i..n {
            for a in &mis {
                for b in &mis {
                    if a.order() + b.order() > 2 {
                        continue;
                    }
                    let mut h = MetricField::zero(n);
                    h.h[i][j] = Quadratic::monomial(a);
                    h.h[j][i] = Quadratic::monomial(a);
                    let u = Quadratic::monomial(b);
                    let fd = fd_linearization(&h, &u, c1f, FD_STEP);
                    let tab = table_action(&spec, &h, &u);
                    max_entry_error = max_entry_error.max((fd - tab).abs());
                    entries_checked += 1;
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_probe_error = 0.0f64;
    for _ in 0..probes {
        let h = MetricField::random(n, &mut rng);
        let u = Quadratic::random(n, &mut rng);
        let fd = fd_linearization(&h, &u, c1f, FD_STEP);
        max_probe_error = max_probe_error.max((fd - table_action(&spec, &h, &u)).abs());
    }
    LinearizationCheck { n, c1, entries_checked, max_entry_error, random_probes: probes, max_probe_error, seed }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_metric_is_euclidean() {
        let h = MetricField::zero(3);
        let mut u = Quadratic::zero(3);
        u.c[0][0] = 2.0;
        u.c[2][2] = 1.0;
        assert_eq!(apply_operator(&h, 0.0, &u, 1.0), -3.0);
    }

    #[test]
    fn conformal_scalar_curvature() {
        // g = (1 + σ|x|²)δ: Scal = −(n−1)σ·2n + O(σ²) at the origin
        let n = 4;
        let mut h = MetricField::zero(n);
        for i in 0..n {
            for k in 0..n {
                h.h[i][i].c[k][k] = 2.0;
            }
        }
        let mut u = Quadratic::zero(n);
        u.a = 1.0;
        let mu = (n as f64 - 2.0) / (4.0 * (n as f64 - 1.0));
        let d = fd_linearization(&h, &u, 1.0, FD_STEP) / mu;
        assert!((d + 2.0 * (n as f64 - 1.0) * n as f64).abs() < 1e-6, "{d}");
        let c = check_linearization(2, 1, 5, 7);
        assert!(c.max_entry_error < 1e-6 && c.max_probe_error < 1e-6, "{c:?}");
    }

    #[test]
    fn tables_match_in_three_dimensions() {
        for c1 in [0, 1] {
            let c = check_linearization(3, c1, 20, 11);
            assert!(c.max_entry_error < 1e-6 && c.max_probe_error < 1e-6, "{c:?}");
        }
    }
}
