//! Matrices of F(σ0 + σ) = c(σ)·Δ_{g+σh} in the plane-wave basis.
//!
//! We work with the unitarily equivalent ρ^{1/2} F ρ^{−1/2} on L²(dx), ρ = √det g, whose
//! quadratic form is ∫ g^{ij}(∂_i ū − b_i ū)(∂_j u − b_j u) with b = ½∇ log ρ. Between
//! plane waves e_k, e_{k'} with k' − k = ℓm this gives
//!
//!   ĉ1_ℓ[ij] k'_i k_j + i k'·ĉ2_ℓ − i k·ĉ2_ℓ + ĉ3_ℓ,
//!
//! c1 = g^{−1}, c2 = g^{−1}b, c3 = ⟨b, g^{−1}b⟩ expanded as jets in σ.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Profile, TorusPerturbation, TorusProblem};
use crate::error::{Error, Result};
use crate::jet::{CJet2, Jet2};

/// Fourier modes kept for the coefficient functions.
pub const FOURIER_BAND: i64 = 16;
const N_THETA: usize = 128;

#[derive(Clone, Debug)]
pub struct OperatorCoefficients {
    pub n: usize,
    pub m: Vec<i64>,
    /// ℓ ranges over −band..=band (index ℓ + band)
    pub band: i64,
    pub c1: Vec<Vec<CJet2>>,
    pub c2: Vec<Vec<CJet2>>,
    pub c3: Vec<CJet2>,
    /// jet of V(σ)^{2/n}, or the constant 1
    pub vfac: Jet2,
}

type MatJet = [DMatrix<f64>; 3];

fn mat_jet_inverse(b: &DMatrix<f64>, edot: &DMatrix<f64>) -> MatJet {
    let bi = b.clone().try_inverse().expect("perturbed metric must stay positive definite");
    let x = &bi * edot * &bi;
    let x2 = &x * edot * &bi * 2.0;
    [bi, -x, x2]
}

impl OperatorCoefficients {
    pub fn new(p: &TorusProblem, h: &TorusPerturbation, sigma0: f64) -> Result<Self> {
        h.validate(p.n)?;
        Ok(Self::from_profile(p, &h.profile(), sigma0))
    }

    pub fn from_profile(p: &TorusProblem, prof: &Profile, sigma0: f64) -> Self {
        let n = p.n;
        let band = if prof.is_constant() { 0 } else { FOURIER_BAND };
        let nb = (2 * band + 1) as usize;
        let z = CJet2::default();
        let mut c1 = vec![vec![z; n * n]; nb];
        let mut c2 = vec![vec![z; n]; nb];
        let mut c3 = vec![z; nb];
        let nt = if prof.is_constant() { 1 } else { N_THETA };
        let mut sqrt_det_mean = Jet2::default();
        let noise_floor = 1.0 + p.ginv().amax() * (1.0 + prof.e.amax()).powi(3) * (1.0 + sigma0.abs()).powi(2);
        let s_tot = Jet2::new(sigma0, 1.0, 0.0);
        for t in 0..nt {
            let th = 2.0 * std::f64::consts::PI * t as f64 / nt as f64;
            let pv = prof.value(th);
            let pd = prof.derivative(th);
            let edot = &prof.e * pv;
            let b = &p.g + &edot * sigma0;
            let gi = mat_jet_inverse(&b, &edot);
            let jet = |i: usize, j: usize| Jet2::new(gi[0][(i, j)], gi[1][(i, j)], gi[2][(i, j)]);
            // log det jet and tr(g^{-1}E)
            let bi_e = &gi[0] * &edot;
            let ld1 = bi_e.trace();
            let ld2 = -(&bi_e * &bi_e).trace();
            let det_b = b.determinant();
            let sqrt_det = Jet2::new(0.0, 0.5 * ld1, 0.5 * ld2).exp().scale(det_b.sqrt());
            sqrt_det_mean = sqrt_det_mean + sqrt_det.scale(1.0 / nt as f64);
            let mut tr_ge = Jet2::default();
            for i in 0..n {
                for j in 0..n {
                    tr_ge = tr_ge + jet(i, j).scale(prof.e[(j, i)]);
                }
            }
            let bvec: Vec<Jet2> = (0..n).map(|i| (s_tot * tr_ge).scale(0.25 * prof.m[i] as f64 * pd)).collect();
            let gb: Vec<Jet2> = (0..n)
                .map(|i| (0..n).fold(Jet2::default(), |acc, j| acc + jet(i, j) * bvec[j]))
                .collect();
            let bgb = (0..n).fold(Jet2::default(), |acc, i| acc + bvec[i] * gb[i]);
            for (li, l) in (-band..=band).enumerate() {
                // (1/Nθ) e^{−iℓθ}
                let w = Complex64::from_polar(1.0 / nt as f64, -(l as f64) * th);
                for i in 0..n {
                    for j in 0..n {
                        c1[li][i * n + j].add_scaled(jet(i, j), w);
                    }
                    c2[li][i].add_scaled(gb[i], w);
                }
                c3[li].add_scaled(bgb, w);
            }
        }
        // drop rounding noise left by the trapezoid sums
        for cj in c1.iter_mut().flatten().chain(c2.iter_mut().flatten()).chain(c3.iter_mut()) {
            for x in [&mut cj.re, &mut cj.im] {
                for part in [&mut x.v, &mut x.d1, &mut x.d2] {
                    if part.abs() < 1e-15 * noise_floor {
                        *part = 0.0;
                    }
                }
            }
        }
        for part in [&mut sqrt_det_mean.d1, &mut sqrt_det_mean.d2] {
            if part.abs() < 1e-15 * noise_floor * sqrt_det_mean.v {
                *part = 0.0;
            }
        }
        let vfac = if p.v_factor {
            let two_pi_n = (2.0 * std::f64::consts::PI).powi(n as i32);
            sqrt_det_mean.scale(two_pi_n).powf(2.0 / n as f64)
        } else {
            Jet2::constant(1.0)
        };
        OperatorCoefficients { n, m: prof.m.clone(), band, c1, c2, c3, vfac }
    }

    /// ℓ with k' − k = ℓm, if any.
    pub fn coupling(&self, kp: &[i64], k: &[i64]) -> Option<i64> {
        if self.band == 0 {
            return if kp == k { Some(0) } else { None };
        }
        let mut ell: Option<i64> = None;
        for i in 0..self.n {
            let d = kp[i] - k[i];
            if self.m[i] == 0 {
                if d != 0 {
                    return None;
                }
            } else {
                if d % self.m[i] != 0 {
                    return None;
                }
                let l = d / self.m[i];
                match ell {
                    None => ell = Some(l),
                    Some(e) if e != l => return None,
                    _ => {}
                }
            }
        }
        let l = ell.unwrap_or(0);
        (l.abs() <= self.band).then_some(l)
    }

    /// Matrix element ⟨e_{k'}, F e_k⟩ as a jet in σ; real for even profiles.
    pub fn element(&self, kp: &[i64], k: &[i64]) -> Jet2 {
        let Some(l) = self.coupling(kp, k) else { return Jet2::default() };
        let li = (l + self.band) as usize;
        let n = self.n;
        // real part of a complex jet times a complex scalar
        let re = |c: &CJet2, z: Complex64| c.re.scale(z.re) - c.im.scale(z.im);
        let mut acc = Jet2::default();
        for i in 0..n {
            for j in 0..n {
                acc = acc + re(&self.c1[li][i * n + j], Complex64::new((kp[i] * k[j]) as f64, 0.0));
            }
            let w = Complex64::new(0.0, (kp[i] - k[i]) as f64);
            acc = acc + re(&self.c2[li][i], w);
        }
        acc = acc + re(&self.c3[li], Complex64::new(1.0, 0.0));
        acc * self.vfac
    }
}

/// F, F′ and F″ on the truncated basis.
#[derive(Clone, Debug)]
pub struct SpectralMatrices {
    pub modes: Vec<Vec<i64>>,
    pub f0: DMatrix<f64>,
    pub f1: DMatrix<f64>,
    pub f2: DMatrix<f64>,
}

impl SpectralMatrices {
    /// Index of the zero mode.
    pub fn zero_index(&self) -> usize {
        self.modes.iter().position(|k| k.iter().all(|x| *x == 0)).expect("box contains 0")
    }
}

pub fn check_cutoff(p: &TorusProblem, h: &TorusPerturbation) -> Result<()> {
    if let TorusPerturbation::CosMode { m, .. } = h {
        let mi = m.iter().map(|x| x.abs()).max().unwrap_or(0) as usize;
        if p.k_cutoff < 2 * mi {
            return Err(Error::Cutoff(format!("K = {} but CosMode needs K ≥ 2|m|∞ = {}", p.k_cutoff, 2 * mi)));
        }
    }
    Ok(())
}

pub fn build_matrices(p: &TorusProblem, h: &TorusPerturbation, sigma: f64) -> Result<SpectralMatrices> {
    check_cutoff(p, h)?;
    let oc = OperatorCoefficients::new(p, h, sigma)?;
    let modes = p.modes();
    let d = modes.len();
    let mut f0 = DMatrix::zeros(d, d);
    let mut f1 = DMatrix::zeros(d, d);
    let mut f2 = DMatrix::zeros(d, d);
    for (a, kp) in modes.iter().enumerate() {
        for (b, k) in modes.iter().enumerate() {
            let e = oc.element(kp, k);
            f0[(a, b)] = e.v;
            f1[(a, b)] = e.d1;
            f2[(a, b)] = e.d2;
        }
    }
    Ok(SpectralMatrices { modes, f0, f1, f2 })
}

/// Closed-form λ_k(σ) for constant h.
pub fn constant_eigenvalue(p: &TorusProblem, e: &DMatrix<f64>, sigma: f64, k: &[i64]) -> f64 {
    let g = &p.g + e * sigma;
    let q = TorusProblem { g, ..p.clone() };
    q.eigenvalue(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m1(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    #[test]
    fn constant_derivative_matches_closed_form() {
        let g = DMatrix::from_row_slice(2, 2, &[1.2, 0.1, 0.1, 0.9]);
        let e = DMatrix::from_row_slice(2, 2, &[0.3, -0.2, -0.2, 0.5]);
        for vf in [false, true] {
            let p = TorusProblem::new(g.clone(), 3, vf).unwrap();
            let h = TorusPerturbation::Constant { e: e.clone() };
            let sm = build_matrices(&p, &h, 0.0).unwrap();
            for (a, k) in sm.modes.iter().enumerate() {
                let d = 1e-3;
                let f = |s: f64| constant_eigenvalue(&p, &e, s, k);
                let fd1 = (f(-2.0 * d) - 8.0 * f(-d) + 8.0 * f(d) - f(2.0 * d)) / (12.0 * d);
                let fd2 = (-f(-2.0 * d) + 16.0 * f(-d) - 30.0 * f(0.0) + 16.0 * f(d) - f(2.0 * d)) / (12.0 * d * d);
                let scale = 1.0 + f(0.0).abs();
                assert!((sm.f0[(a, a)] - f(0.0)).abs() < 1e-12 * scale);
                assert!((sm.f1[(a, a)] - fd1).abs() < 1e-8 * scale, "{} vs {fd1}", sm.f1[(a, a)]);
                assert!((sm.f2[(a, a)] - fd2).abs() < 1e-5 * scale, "{} vs {fd2}", sm.f2[(a, a)]);
            }
        }
    }

    #[test]
    fn cos_mode_band_structure() {
        let p = TorusProblem::flat(1, 8, true);
        let h = TorusPerturbation::CosMode { e: m1(1.0), m: vec![3] };
        let sm = build_matrices(&p, &h, 0.0).unwrap();
        let z = sm.zero_index();
        for a in 0..sm.modes.len() {
            for b in 0..sm.modes.len() {
                let dk = (sm.modes[a][0] - sm.modes[b][0]).abs();
                if dk != 3 {
                    assert!(sm.f1[(a, b)].abs() < 1e-14, "F' at Δk = {dk}: {}", sm.f1[(a, b)]);
                }
                assert!((sm.f1[(a, b)] - sm.f1[(b, a)]).abs() < 1e-13);
                assert!((sm.f2[(a, b)] - sm.f2[(b, a)]).abs() < 1e-13);
            }
            // ΠF = FΠ = 0
            assert!(sm.f0[(a, z)].abs() < 1e-14 && sm.f0[(z, a)].abs() < 1e-14);
        }
        assert!(sm.f1[(z, z)].abs() < 1e-14);
        assert!(matches!(build_matrices(&p.with_cutoff(5), &h, 0.0), Err(Error::Cutoff(_))));
    }

    #[test]
    fn zero_perturbation() {
        let p = TorusProblem::flat(2, 3, true);
        let h = TorusPerturbation::CosMode { e: DMatrix::zeros(2, 2), m: vec![1, 1] };
        let sm = build_matrices(&p, &h, 0.0).unwrap();
        assert!(sm.f1.amax() == 0.0 && sm.f2.amax() == 0.0);
    }

    #[test]
    fn perturbed_matrix_is_symmetric() {
        let p = TorusProblem::flat(2, 4, true);
        let e = DMatrix::from_row_slice(2, 2, &[0.4, 0.3, 0.3, -0.4]);
        let h = TorusPerturbation::CosMode { e, m: vec![1, 2] };
        let sm = build_matrices(&p, &h, 0.2).unwrap();
        assert!((&sm.f0 - sm.f0.transpose()).amax() < 1e-12);
        // the zero eigenvalue survives (up to truncation) the perturbation
        let ev = sm.f0.clone().symmetric_eigenvalues();
        let min = ev.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
        assert!(min < 1e-6, "{min}");
    }
}
