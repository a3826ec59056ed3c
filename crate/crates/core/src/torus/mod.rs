//! Brute-force spectral oracle on flat tori ℝⁿ/2πℤⁿ.
//!
//! Eigenfunctions of the flat Laplacian are the plane waves e^{ik·x}; metric
//! perturbations h(x) = e·p(m·x) couple k to k + ℓm only, so every operator here
//! is assembled from Fourier coefficients of functions of one angle θ = m·x.

pub mod epstein;
pub mod extended;
pub mod heat;
pub mod hessian;
pub mod spectral;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use epstein::{epstein_zeta, zcal, zcal_constant_perturbation, zcal_with_kernel};
pub use heat::{heat_trace, heat_trace_prediction, heat_trace_second_variation, HeatTraceValue};
pub use hessian::{first_variation, hessian_fd, hessian_lemma31, hessian_lemma31_with, intrinsic_correction, psi_s, SpectralHessian};
pub use spectral::{build_matrices, OperatorCoefficients, SpectralMatrices};

#[derive(Clone, Debug, PartialEq)]
pub struct TorusProblem {
    pub n: usize,
    pub g: DMatrix<f64>,
    /// modes k with |k|∞ ≤ k_cutoff
    pub k_cutoff: usize,
    pub v_factor: bool,
}

impl TorusProblem {
    pub fn new(g: DMatrix<f64>, k_cutoff: usize, v_factor: bool) -> Result<Self> {
        let n = g.nrows();
        if n == 0 || g.ncols() != n {
            return Err(Error::Invalid("metric must be a nonempty square matrix".into()));
        }
        if (&g - g.transpose()).amax() > 1e-14 * g.amax() {
            return Err(Error::Invalid("metric must be symmetric".into()));
        }
        if g.clone().cholesky().is_none() {
            return Err(Error::Invalid("metric must be positive definite".into()));
        }
        Ok(TorusProblem { n, g, k_cutoff, v_factor })
    }

    pub fn flat(n: usize, k_cutoff: usize, v_factor: bool) -> Self {
        TorusProblem { n, g: DMatrix::identity(n, n), k_cutoff, v_factor }
    }

    pub fn with_cutoff(&self, k: usize) -> Self {
        TorusProblem { k_cutoff: k, ..self.clone() }
    }

    pub fn volume(&self) -> f64 {
        (2.0 * std::f64::consts::PI).powi(self.n as i32) * self.g.determinant().sqrt()
    }

    /// V^{2/n} if the flag is on, else 1.
    pub fn scale(&self) -> f64 {
        if self.v_factor {
            self.volume().powf(2.0 / self.n as f64)
        } else {
            1.0
        }
    }

    pub fn ginv(&self) -> DMatrix<f64> {
        self.g.clone().try_inverse().expect("positive definite")
    }

    /// Eigenvalue of the mode k.
    pub fn eigenvalue(&self, k: &[i64]) -> f64 {
        let gi = self.ginv();
        self.scale() * quad_form(&gi, k)
    }

    /// All modes with |k|∞ ≤ K in lexicographic order.
    pub fn modes(&self) -> Vec<Vec<i64>> {
        box_modes(self.n, self.k_cutoff as i64)
    }

    /// Sorted eigenvalues of the unperturbed operator on the truncated mode set.
    pub fn eigenvalues_sorted(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.modes().iter().map(|k| self.eigenvalue(k)).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }
}

pub fn quad_form(q: &DMatrix<f64>, k: &[i64]) -> f64 {
    let n = k.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += q[(i, j)] * k[i] as f64 * k[j] as f64;
        }
    }
    s
}

pub fn box_modes(n: usize, k: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * (2 * k as usize + 1));
        for v in &out {
            for x in -k..=k {
                let mut w = v.clone();
                w.push(x);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

/// Nonzero lattice points with ⟨k, Q k⟩ ≤ bound, with their form values.
pub fn lattice_points(q: &DMatrix<f64>, bound: f64) -> Vec<(Vec<i64>, f64)> {
    let n = q.nrows();
    let qi = q.clone().try_inverse().expect("positive definite form");
    let r: Vec<i64> = (0..n).map(|i| (bound * qi[(i, i)]).max(0.0).sqrt().floor() as i64).collect();
    let mut pts = vec![vec![]];
    for ri in &r {
        let mut next = Vec::new();
        for v in &pts {
            for x in -ri..=*ri {
                let mut w = v.clone();
                w.push(x);
                next.push(w);
            }
        }
        pts = next;
    }
    pts.into_iter()
        .filter(|k| k.iter().any(|x| *x != 0))
        .map(|k| {
            let v = quad_form(q, &k);
            (k, v)
        })
        .filter(|(_, v)| *v <= bound)
        .collect()
}

/// Smallest value of ⟨k, Q k⟩ over nonzero integer k.
pub fn form_minimum(q: &DMatrix<f64>) -> f64 {
    let b = (0..q.nrows()).map(|i| q[(i, i)]).fold(f64::INFINITY, f64::min);
    lattice_points(q, b * (1.0 + 1e-12)).iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min)
}

/// Perturbation direction h(x).
#[derive(Clone, Debug, PartialEq)]
pub enum TorusPerturbation {
    Constant { e: DMatrix<f64> },
    /// h(x) = e cos(m·x)
    CosMode { e: DMatrix<f64>, m: Vec<i64> },
}

impl TorusPerturbation {
    pub fn e(&self) -> &DMatrix<f64> {
        match self {
            TorusPerturbation::Constant { e } | TorusPerturbation::CosMode { e, .. } => e,
        }
    }
    pub fn validate(&self, n: usize) -> Result<()> {
        let e = self.e();
        if e.nrows() != n || e.ncols() != n {
            return Err(Error::Invalid(format!("perturbation must be {n}×{n}")));
        }
        if (e - e.transpose()).amax() > 1e-14 * e.amax().max(1.0) {
            return Err(Error::Invalid("perturbation must be symmetric".into()));
        }
        if let TorusPerturbation::CosMode { m, .. } = self {
            if m.len() != n || m.iter().all(|x| *x == 0) {
                return Err(Error::Invalid("CosMode needs a nonzero m with n components".into()));
            }
        }
        Ok(())
    }
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            TorusPerturbation::Constant { e } => TorusPerturbation::Constant { e: e * c },
            TorusPerturbation::CosMode { e, m } => TorusPerturbation::CosMode { e: e * c, m: m.clone() },
        }
    }
    pub fn profile(&self) -> Profile {
        match self {
            TorusPerturbation::Constant { e } => Profile { e: e.clone(), m: vec![0; e.nrows()], cos: vec![1.0] },
            TorusPerturbation::CosMode { e, m } => Profile { e: e.clone(), m: m.clone(), cos: vec![0.0, 1.0] },
        }
    }
}

/// h(x) = e · Σ_ℓ cos[ℓ] cos(ℓ m·x); with m = 0 the profile is the constant Σ cos[ℓ].
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub e: DMatrix<f64>,
    pub m: Vec<i64>,
    pub cos: Vec<f64>,
}

impl Profile {
    pub fn is_constant(&self) -> bool {
        self.m.iter().all(|x| *x == 0)
    }
    pub fn value(&self, theta: f64) -> f64 {
        if self.is_constant() {
            return self.cos.iter().sum();
        }
        self.cos.iter().enumerate().map(|(l, c)| c * (l as f64 * theta).cos()).sum()
    }
    pub fn derivative(&self, theta: f64) -> f64 {
        if self.is_constant() {
            return 0.0;
        }
        self.cos.iter().enumerate().map(|(l, c)| -c * l as f64 * (l as f64 * theta).sin()).sum()
    }
    pub fn degree(&self) -> usize {
        if self.is_constant() {
            0
        } else {
            self.cos.len().saturating_sub(1)
        }
    }
}

/// JSON problem file: {n, g, K, v_factor, perturbation}.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TorusProblemJson {
    pub n: usize,
    pub g: Vec<Vec<f64>>,
    #[serde(rename = "K")]
    pub k: usize,
    pub v_factor: bool,
    pub perturbation: PerturbationJson,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum PerturbationJson {
    #[serde(rename = "constant")]
    Constant { e: Vec<Vec<f64>> },
    #[serde(rename = "cos")]
    Cos { e: Vec<Vec<f64>>, m: Vec<i64> },
}

/// Row-major nested vectors to a square matrix (caller checks the shape).
pub fn dmatrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows.len(), |i, j| rows[i][j])
}

fn to_matrix(rows: &[Vec<f64>], n: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("{what} must be {n}×{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl TorusProblemJson {
    pub fn parse(&self) -> Result<(TorusProblem, TorusPerturbation)> {
        let g = to_matrix(&self.g, self.n, "g")?;
        let p = TorusProblem::new(g, self.k, self.v_factor)?;
        let h = match &self.perturbation {
            PerturbationJson::Constant { e } => TorusPerturbation::Constant { e: to_matrix(e, self.n, "e")? },
            PerturbationJson::Cos { e, m } => TorusPerturbation::CosMode { e: to_matrix(e, self.n, "e")?, m: m.clone() },
        };
        h.validate(self.n)?;
        Ok((p, h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weyl_counting() {
        // N(λ) ~ ω_n V λ^{n/2} / (2π)^n on the unit-metric torus, v_factor off
        for n in 1..=2usize {
            let p = TorusProblem::flat(n, 40, false);
            let lam = 40.0f64.powi(2) * 0.9;
            let count = p.eigenvalues_sorted().iter().filter(|&&x| x <= lam).count() as f64;
            let omega = if n == 1 { 2.0 } else { std::f64::consts::PI };
            let weyl = omega * lam.powf(n as f64 / 2.0);
            assert!((count / weyl - 1.0).abs() < 0.02, "n={n}: {count} vs {weyl}");
        }
    }

    #[test]
    fn lattice_enumeration() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let pts = lattice_points(&q, 10.0);
        let brute: usize = box_modes(2, 10).iter().filter(|k| k.iter().any(|x| *x != 0) && quad_form(&q, k) <= 10.0).count();
        assert_eq!(pts.len(), brute);
        assert!((form_minimum(&q) - 1.0).abs() < 1e-15);
    }
}
