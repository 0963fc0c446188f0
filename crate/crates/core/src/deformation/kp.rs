//! KP residual of log τ by finite differences of the Malgrange form, and the
//! polynomial-graph kernel pair used as the base KP scenario.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::Deformation;
use crate::dbar::MatrixField;
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Ellipse};
use crate::kernel::KernelPair;
use crate::linalg::{CMat, ZERO};

fn poly(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(ZERO, |acc, c| acc * z + c)
}

fn poly_dz(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut s = ZERO;
    let mut p = Complex64::new(1.0, 0.0);
    for (k, c) in coeffs.iter().enumerate().skip(1) {
        s += c * p * k as f64;
        p *= z;
    }
    s
}

/// f = (1, p(z))ᵀχ_E, g = λ(1 + μz̄)(−p(z), 1)ᵀχ_E with p(z) = Σ c_k z^k.
///
/// fᵀg = 0 and ∂̄f = 0, K(z,w) = λ(1 + μw̄)(p(z) − p(w))/(z − w), and
/// M₀ = πλ(1 + μz̄) [[−p, 1], [−p², p]] χ_E has (∂_zM₀)₁₁ = −πλ(1 + μz̄)p′.
/// The z̄-weight keeps area integrals of the dressed kernel from collapsing to point values.
pub fn graph_pair(shape: Ellipse, lambda: Complex64, mu: Complex64, coeffs: Vec<Complex64>) -> KernelPair {
    let support = if shape.is_circle() {
        DomainSpec::disk(shape.center, shape.a)
    } else {
        DomainSpec::ellipse(shape.center, shape.a, shape.b, shape.rotation)
    };
    let chi = move |z: Complex64| Complex64::new(if shape.contains(z) { 1.0 } else { 0.0 }, 0.0);
    let weight = move |z: Complex64| lambda * (1.0 + mu * z.conj()) * chi(z);
    let (c1, c2, c3, c4) = (coeffs.clone(), coeffs.clone(), coeffs.clone(), coeffs);
    let col = |a: Complex64, b: Complex64| CMat::from_column_slice(2, 1, &[a, b]);
    let one = Complex64::new(1.0, 0.0);
    let f = MatrixField::new(2, 1, support.clone(), move |z| col(one, poly(&c1, z)) * chi(z))
        .with_dz(move |z| col(ZERO, poly_dz(&c2, z)) * chi(z))
        .with_dzbar(|_| CMat::zeros(2, 1));
    let g = MatrixField::new(2, 1, support, move |z| col(-poly(&c3, z), one) * weight(z))
        .with_dz(move |z| col(-poly_dz(&c4, z), ZERO) * weight(z));
    KernelPair { f, g }
}

/// Finite-difference pieces of the KP equation in Hirota form at one time.
#[derive(Clone, Debug, Serialize)]
pub struct KpReport {
    pub h: f64,
    pub residual: f64,
    pub f11: Complex64,
    pub f111: Complex64,
    pub f1111: Complex64,
    pub f111111: Complex64,
    pub f1113: Complex64,
    pub f1122: Complex64,
}

/// |6F₁₁₂₂ − 8F₁₁₁₃ + 2F₁₁₁₁₁₁ + 24(F₁₁₁² + F₁₁F₁₁₁₁)| for F = log τ, using F_j = ω_j.
///
/// This is 3u₂₂ − ∂₁(4u₃ − u₁₁₁ − 6uu₁) with u = 2∂₁² log τ. Derivatives are second-order
/// central differences: ω₁, ω₃ on a 7-point line in t₁ and ω₂ on a 3 × 2 patch in (t₁, t₂).
pub fn kp_residual(def: &Deformation, t0: &[Complex64], h: f64) -> Result<KpReport> {
    if t0.len() < 3 {
        return Err(Error::Argument("the KP residual needs times t₁, t₂, t₃".into()));
    }
    let shift = |d1: i32, d2: i32| {
        let mut t = t0.to_vec();
        t[0] += h * d1 as f64;
        t[1] += h * d2 as f64;
        t
    };
    let mut points: Vec<Vec<Complex64>> = (-3..=3).map(|m| shift(m, 0)).collect();
    for d2 in [-1, 1] {
        for d1 in -1..=1 {
            points.push(shift(d1, d2));
        }
    }
    let om: Vec<Vec<Complex64>> = points
        .par_iter()
        .map(|t| def.omega(t).map(|(_, o)| o).map_err(|e| Error::PathSolve { t: t.clone(), source: Box::new(e) }))
        .collect::<Result<_>>()?;
    let line = |j: usize, m: i32| om[(m + 3) as usize][j];
    let patch = |d1: i32, d2: i32| om[7 + if d2 < 0 { 0 } else { 3 } + (d1 + 1) as usize][1];
    let d3 = |j: usize| (line(j, 2) - 2.0 * line(j, 1) + 2.0 * line(j, -1) - line(j, -2)) / (2.0 * h.powi(3));
    let f11 = (line(0, 1) - line(0, -1)) / (2.0 * h);
    let f111 = (line(0, 1) - 2.0 * line(0, 0) + line(0, -1)) / (h * h);
    let f1111 = d3(0);
    let f111111 = (line(0, 3) - 4.0 * line(0, 2) + 5.0 * line(0, 1) - 5.0 * line(0, -1) + 4.0 * line(0, -2)
        - line(0, -3))
        / (2.0 * h.powi(5));
    let f1113 = d3(2);
    let lap = |d2: i32| patch(1, d2) - 2.0 * patch(0, d2) + patch(-1, d2);
    let f1122 = (lap(1) - lap(-1)) / (2.0 * h.powi(3));
    let r = 6.0 * f1122 - 8.0 * f1113 + 2.0 * f111111 + 24.0 * (f111 * f111 + f11 * f1111);
    Ok(KpReport { h, residual: r.norm(), f11, f111, f1111, f111111, f1113, f1122 })
}

/// KP residuals at h and h/2 with the observed order log₂(r(h)/r(h/2)).
#[derive(Clone, Debug, Serialize)]
pub struct Richardson {
    pub coarse: KpReport,
    pub fine: KpReport,
    pub slope: f64,
}

pub fn kp_richardson(def: &Deformation, t0: &[Complex64], h: f64) -> Result<Richardson> {
    let coarse = kp_residual(def, t0, h)?;
    let fine = kp_residual(def, t0, h / 2.0)?;
    let slope = (coarse.residual / fine.residual).log2();
    Ok(Richardson { coarse, fine, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::Flow;
    use crate::geometry::build_grid;
    use crate::linalg::c;

    #[test]
    fn graph_pair_satisfies_constraints() {
        let p = graph_pair(Ellipse::disk(c(0.0, 0.0), 1.0), c(0.2, 0.0), ZERO, vec![ZERO, c(1.0, 0.0), c(0.3, 0.0)]);
        let grid = build_grid(p.support(), 5, 10).unwrap();
        p.check_constraints(&grid).unwrap();
        let z = c(0.3, -0.2);
        let m = p.m_from_pair(&grid).unwrap().eval(z);
        let pz = z + 0.3 * z * z;
        let s = std::f64::consts::PI * 0.2;
        assert!((m[(0, 0)] + s * pz).norm() < 1e-14);
        assert!((m[(1, 0)] + s * pz * pz).norm() < 1e-14);
    }

    #[test]
    fn zero_field_kp_residual_vanishes() {
        let d = DomainSpec::disk(c(0.0, 0.0), 1.0);
        let grid = build_grid(&d, 4, 8).unwrap();
        let def = Deformation::from_field(MatrixField::zero(2, d), &grid, Flow::KP).unwrap();
        let r = kp_residual(&def, &[ZERO, ZERO, ZERO], 0.05).unwrap();
        assert_eq!(r.residual, 0.0);
    }
}
