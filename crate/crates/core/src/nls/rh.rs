//! Reduction of the NLS ∂̄-problem on an ellipse to a contour problem on the mother-body.
//!
//! For analytic β the area integrals of the column equations collapse by Stokes' theorem
//! onto the focal segments ℒ of 𝒟 and ℒ̄ of 𝒟̄, weighted by the jump ΔS of the Schwarz
//! function. Collocating A at ℒ and B at ℒ̄ gives a 2n × 2n dense system.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use super::NlsScenario;
use crate::deformation::xi;
use crate::error::{Error, Result};
use crate::geometry::{mother_body, DomainKind};
use crate::linalg::{mat2, CMat, Dense, DenseLu, I, ONE, ZERO};

/// Γ̃ outside 𝒟 ∪ 𝒟̄ from the mother-body Nyström solution.
#[derive(Clone, Debug)]
pub struct RhSolution {
    /// Nodes on ℒ (inside 𝒟) and their mirrors on ℒ̄.
    pub upper: Vec<Complex64>,
    pub lower: Vec<Complex64>,
    /// A(z) = e₁ + Σ σ_k B(q_k)/(z − q_k).
    sigma: Vec<Complex64>,
    /// B(z) = e₂ + Σ ρ_k A(p_k)/(z − p_k).
    rho: Vec<Complex64>,
    a_nodes: Vec<[Complex64; 2]>,
    b_nodes: Vec<[Complex64; 2]>,
    scenario: NlsScenario,
    pub rcond: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RhSummary {
    pub nodes: usize,
    pub rcond: f64,
    pub psi: Complex64,
}

pub fn rh_reduce_ellipse(s: &NlsScenario, t: &[Complex64], n: usize) -> Result<RhSolution> {
    s.validate()?;
    if s.domain.kind != DomainKind::Ellipse {
        return Err(Error::Domain("the reduction needs a single ellipse".into()));
    }
    if !s.beta.is_analytic() {
        return Err(Error::Argument("the reduction needs β analytic in 𝒟 (constant or polynomial)".into()));
    }
    let e = s.domain.parts[0];
    if e.rotation.rem_euclid(PI).abs() > 1e-14 {
        return Err(Error::Domain("the reduction handles axis-aligned ellipses only".into()));
    }
    if n < 2 {
        return Err(Error::Argument("at least two mother-body nodes are needed".into()));
    }
    let mb = mother_body(e.a, e.b, n)?;
    let c0 = e.center;
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let mut upper = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut rho = Vec::with_capacity(n);
    for (k, ((&x, &w), &jump)) in mb.contour.nodes.iter().zip(&mb.contour.weights).zip(&mb.jump).enumerate() {
        let (p, q) = (c0 + x, c0.conj() + x);
        let mu = w * jump / two_pi_i;
        let r = mu * s.beta.eval(p) * (-2.0 * I * xi(p, t)).exp();
        let sg = -mu * s.mirror_scale * s.beta.star(q) * (2.0 * I * xi(q, t)).exp();
        if !r.is_finite() || !sg.is_finite() {
            return Err(Error::Argument(format!("non-finite mother-body weight at panel {k} (x = {})", x.re)));
        }
        upper.push(p);
        lower.push(q);
        rho.push(r);
        sigma.push(sg);
    }
    // unknowns [A(p_1..n); B(q_1..n)], one right-hand side per vector component
    let mut l = Dense::zeros(2 * n, 2 * n);
    for j in 0..n {
        l[(j, j)] = ONE;
        l[(n + j, n + j)] = ONE;
        for k in 0..n {
            l[(j, n + k)] = -sigma[k] / (upper[j] - lower[k]);
            l[(n + j, k)] = -rho[k] / (lower[j] - upper[k]);
        }
    }
    let mut rhs = Dense::zeros(2 * n, 2);
    for j in 0..n {
        rhs[(j, 0)] = ONE;
        rhs[(n + j, 1)] = ONE;
    }
    let lu = DenseLu::new(&l);
    let rcond = lu.rcond();
    if rcond < crate::dbar::RCOND_FLOOR {
        return Err(Error::NotInvertible { rcond });
    }
    let x = lu.solve(&rhs);
    let a_nodes = (0..n).map(|k| [x[(k, 0)], x[(k, 1)]]).collect();
    let b_nodes = (0..n).map(|k| [x[(n + k, 0)], x[(n + k, 1)]]).collect();
    Ok(RhSolution { upper, lower, sigma, rho, a_nodes, b_nodes, scenario: s.clone(), rcond })
}

impl RhSolution {
    /// Γ̃(z) for z outside 𝒟 ∪ 𝒟̄.
    pub fn evaluate(&self, z: Complex64) -> Result<CMat> {
        if self.scenario.support().contains(z) {
            return Err(Error::InsideSupport(z));
        }
        let mut a = [ONE, ZERO];
        let mut b = [ZERO, ONE];
        for k in 0..self.upper.len() {
            let sa = self.sigma[k] / (z - self.lower[k]);
            let sb = self.rho[k] / (z - self.upper[k]);
            for i in 0..2 {
                a[i] += sa * self.b_nodes[k][i];
                b[i] += sb * self.a_nodes[k][i];
            }
        }
        Ok(mat2(a[0], b[0], a[1], b[1]))
    }

    /// Coefficient of 1/z of Γ̃ at infinity.
    pub fn gamma1(&self) -> CMat {
        let mut a = [ZERO; 2];
        let mut b = [ZERO; 2];
        for k in 0..self.upper.len() {
            for i in 0..2 {
                a[i] += self.sigma[k] * self.b_nodes[k][i];
                b[i] += self.rho[k] * self.a_nodes[k][i];
            }
        }
        mat2(a[0], b[0], a[1], b[1])
    }

    pub fn psi(&self) -> Complex64 {
        2.0 * I * self.gamma1()[(0, 1)]
    }

    pub fn summary(&self) -> RhSummary {
        RhSummary { nodes: self.upper.len(), rcond: self.rcond, psi: self.psi() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use crate::linalg::{c, fro, identity};
    use crate::nls::{psi_extract, times, Beta, NlsSolver};

    fn ellipse(beta: Beta) -> NlsScenario {
        NlsScenario::new(DomainSpec::ellipse(c(0.0, 1.0), 0.5, 0.25, 0.0), beta)
    }

    #[test]
    fn zero_beta_is_identity() {
        let r = rh_reduce_ellipse(&ellipse(Beta::Constant { value: ZERO }), &times(0.2, 0.0, None), 16).unwrap();
        assert!(fro(&(r.evaluate(c(3.0, 0.0)).unwrap() - identity(2))) == 0.0);
        assert_eq!(r.psi(), ZERO);
    }

    #[test]
    fn rejects_non_analytic_beta_and_disks() {
        let g = Beta::Gaussian { amplitude: ONE, center: c(0.0, 1.0), width: 0.3 };
        assert!(rh_reduce_ellipse(&ellipse(g), &times(0.0, 0.0, None), 16).is_err());
        let d = NlsScenario::new(DomainSpec::disk(c(0.0, 1.0), 0.5), Beta::Constant { value: ONE });
        assert!(rh_reduce_ellipse(&d, &times(0.0, 0.0, None), 16).is_err());
    }

    #[test]
    fn agrees_with_the_area_solver_outside_the_support() {
        let s = ellipse(Beta::Constant { value: ONE });
        let t = times(0.2, 0.0, None);
        let r = rh_reduce_ellipse(&s, &t, 32).unwrap();
        let g = NlsSolver::new(s, 16, 32).unwrap().solve(&t).unwrap();
        for z in [c(3.0, 0.0), c(0.0, 4.0), c(-2.0, -2.5)] {
            assert!(fro(&(r.evaluate(z).unwrap() - g.evaluate(z))) < 1e-4);
        }
        let (p, q) = (r.psi(), psi_extract(&g).psi);
        assert!((p - q).norm() < 1e-3 * q.norm());
        assert!(r.evaluate(c(0.0, 1.0)).is_err());
    }
}
