//! Focusing NLS from the dressed ∂̄-problem on 𝒟 ∪ 𝒟̄: ψ extraction, Schwarz symmetry,
//! the Zakharov–Shabat Lax pair and finite-difference residuals of the flows.

pub mod rh;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::dbar::{GammaField, MatrixField};
use crate::deformation::{Deformation, Flow};
use crate::error::{Error, Result};
use crate::geometry::{build_grid, DomainSpec, QuadratureGrid};
use crate::kernel::KernelPair;
use crate::linalg::{fro, mat2, sigma2_conj, CMat, I, ZERO};

/// Scalar weight β(z, z̄) on 𝒟.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Beta {
    Constant {
        value: Complex64,
    },
    /// amplitude · exp(−|z − center|²/width²)
    Gaussian {
        amplitude: Complex64,
        center: Complex64,
        width: f64,
    },
    /// Σ c_k z^k
    Polynomial {
        coeffs: Vec<Complex64>,
    },
}

impl Beta {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Beta::Constant { value } => *value,
            Beta::Gaussian { amplitude, center, width } => {
                amplitude * (-(z - center).norm_sqr() / (width * width)).exp()
            }
            Beta::Polynomial { coeffs } => coeffs.iter().rev().fold(ZERO, |acc, c| acc * z + c),
        }
    }

    pub fn dz(&self, z: Complex64) -> Complex64 {
        match self {
            Beta::Constant { .. } => ZERO,
            Beta::Gaussian { center, width, .. } => -self.eval(z) * (z - center).conj() / (width * width),
            Beta::Polynomial { coeffs } => {
                let mut s = ZERO;
                let mut p = Complex64::new(1.0, 0.0);
                for (k, c) in coeffs.iter().enumerate().skip(1) {
                    s += c * p * k as f64;
                    p *= z;
                }
                s
            }
        }
    }

    pub fn dzbar(&self, z: Complex64) -> Complex64 {
        match self {
            Beta::Gaussian { center, width, .. } => -self.eval(z) * (z - center) / (width * width),
            _ => ZERO,
        }
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self, Beta::Gaussian { .. })
    }

    /// β*(z, z̄) = conj(β(z̄, z)).
    pub fn star(&self, z: Complex64) -> Complex64 {
        self.eval(z.conj()).conj()
    }
}

/// √β continued from the value at a reference point, so the branch is continuous on 𝒟
/// as long as β/β(ref) stays off the negative real axis.
#[derive(Clone, Debug)]
struct SqrtBeta {
    beta: Beta,
    base: Complex64,
    root: Complex64,
}

impl SqrtBeta {
    fn new(beta: &Beta, reference: Complex64, nodes: &[Complex64]) -> Result<Self> {
        let base = beta.eval(reference);
        let zero = base == ZERO;
        for &z in nodes {
            let v = beta.eval(z);
            if zero {
                if v != ZERO {
                    return Err(Error::Argument(format!(
                        "β vanishes at the reference point {reference} but not at {z}"
                    )));
                }
                continue;
            }
            let q = v / base;
            if q.norm() == 0.0 || (q.im.abs() < 1e-12 * q.norm() && q.re < 0.0) || q.arg().abs() > PI - 1e-6 {
                return Err(Error::Argument(format!(
                    "√β has no continuous branch on the domain: β({z}) = {v} against β({reference}) = {base}"
                )));
            }
        }
        Ok(Self { beta: beta.clone(), base, root: base.sqrt() })
    }

    fn eval(&self, z: Complex64) -> Complex64 {
        if self.base == ZERO {
            return ZERO;
        }
        self.root * (self.beta.eval(z) / self.base).sqrt()
    }

    /// (∂_z √β, ∂_z̄ √β).
    fn wirtinger(&self, z: Complex64) -> (Complex64, Complex64) {
        let s = self.eval(z);
        if s == ZERO {
            return (ZERO, ZERO);
        }
        (self.beta.dz(z) / (2.0 * s), self.beta.dzbar(z) / (2.0 * s))
    }
}

/// β on a domain 𝒟 in the upper half plane, paired with its mirror 𝒟̄.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NlsScenario {
    /// 𝒟 alone; the conjugate part is added automatically.
    pub domain: DomainSpec,
    pub beta: Beta,
    /// Factor on the 𝒟̄ entry. Anything but 1 breaks the Schwarz symmetry (negative control).
    #[serde(default = "one")]
    pub mirror_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl NlsScenario {
    pub fn new(domain: DomainSpec, beta: Beta) -> Self {
        Self { domain, beta, mirror_scale: 1.0 }
    }

    pub fn support(&self) -> DomainSpec {
        let mut d = self.domain.clone();
        d.conjugate_closed = true;
        d
    }

    pub fn validate(&self) -> Result<()> {
        if self.domain.conjugate_closed {
            return Err(Error::Domain("give 𝒟 alone; the mirror image is added automatically".into()));
        }
        self.support().validate()?;
        if !self.mirror_scale.is_finite() {
            return Err(Error::Argument("mirror_scale must be finite".into()));
        }
        Ok(())
    }
}

/// ξ = zx + z²t (+ z³t₃) as a time vector.
pub fn times(x: f64, t: f64, t3: Option<f64>) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(x, 0.0), Complex64::new(t, 0.0)];
    if let Some(t3) = t3 {
        v.push(Complex64::new(t3, 0.0));
    }
    v
}

/// f = (√β χ_𝒟, −s√β* χ_𝒟̄)ᵀ/√π and g = (√β* χ_𝒟̄, √β χ_𝒟)ᵀ/√π, so that
/// M₀ = πfgᵀ = [[0, βχ_𝒟], [−sβ*χ_𝒟̄, 0]].
pub fn nls_pair(s: &NlsScenario, grid: &QuadratureGrid) -> Result<KernelPair> {
    s.validate()?;
    let parts = s.domain.parts.clone();
    let upper: Vec<Complex64> = grid.nodes.iter().copied().filter(|z| parts.iter().any(|e| e.contains(*z))).collect();
    let reference = parts[0].center;
    let sq = Arc::new(SqrtBeta::new(&s.beta, reference, &upper)?);
    let scale = s.mirror_scale;
    let inv = Complex64::new(1.0 / PI.sqrt(), 0.0);
    let (pu, pl) = (parts.clone(), parts);
    let in_d = Arc::new(move |z: Complex64| pu.iter().any(|e| e.contains(z)));
    let in_db = Arc::new(move |z: Complex64| pl.iter().any(|e| e.contains(z.conj())));
    let col = |a: Complex64, b: Complex64| CMat::from_column_slice(2, 1, &[a, b]);
    // values and Wirtinger derivatives of (√β χ_𝒟, √β* χ_𝒟̄) at z
    let parts_at = {
        let (sq, in_d, in_db) = (sq.clone(), in_d.clone(), in_db.clone());
        Arc::new(move |z: Complex64| {
            let mut v = [ZERO; 6];
            if in_d(z) {
                let (dz, dzb) = sq.wirtinger(z);
                v[0] = sq.eval(z);
                v[1] = dz;
                v[2] = dzb;
            }
            if in_db(z) {
                let w = z.conj();
                let (dz, dzb) = sq.wirtinger(w);
                v[3] = sq.eval(w).conj();
                // ∂_z conj(h(z̄)) = conj(∂_w h)(z̄), ∂_z̄ conj(h(z̄)) = conj(∂_w̄ h)(z̄)
                v[4] = dz.conj();
                v[5] = dzb.conj();
            }
            v
        })
    };
    let support = s.support();
    let (p1, p2, p3, p4, p5) = (parts_at.clone(), parts_at.clone(), parts_at.clone(), parts_at.clone(), parts_at);
    let f = MatrixField::new(2, 1, support.clone(), move |z| {
        let v = p1(z);
        col(v[0], -scale * v[3]) * inv
    })
    .with_dz(move |z| {
        let v = p2(z);
        col(v[1], -scale * v[4]) * inv
    })
    .with_dzbar(move |z| {
        let v = p3(z);
        col(v[2], -scale * v[5]) * inv
    });
    let g = MatrixField::new(2, 1, support, move |z| {
        let v = p4(z);
        col(v[3], v[0]) * inv
    })
    .with_dz(move |z| {
        let v = p5(z);
        col(v[4], v[1]) * inv
    });
    Ok(KernelPair { f, g })
}

/// max over mirrored node pairs of ‖conj(M(z̄)) − σ₂M(z)σ₂‖.
pub fn field_schwarz_residual(m: &MatrixField, grid: &QuadratureGrid) -> Result<f64> {
    let mirror = grid.mirror.as_ref().ok_or_else(|| Error::Domain("grid is not conjugate-closed".into()))?;
    Ok(grid
        .nodes
        .iter()
        .zip(mirror)
        .map(|(&z, &k)| fro(&(sigma2_conj(&m.eval(grid.nodes[k])) - m.eval(z))))
        .fold(0.0, f64::max))
}

/// max over mirrored node pairs of ‖Γ(z) − σ₂ conj(Γ(z̄)) σ₂‖.
pub fn schwarz_residual(gamma: &GammaField) -> Result<f64> {
    let grid = &gamma.grid;
    let mirror = grid.mirror.as_ref().ok_or_else(|| Error::Domain("grid is not conjugate-closed".into()))?;
    Ok(gamma.values.iter().zip(mirror).map(|(g, &k)| fro(&(g - sigma2_conj(&gamma.values[k])))).fold(0.0, f64::max))
}

/// ψ = 2i(Γ₁)₁₂ together with a = (Γ₁)₁₁ and b = (Γ₁)₁₂.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PsiSample {
    pub psi: Complex64,
    pub a: Complex64,
    pub b: Complex64,
}

pub fn psi_extract(gamma: &GammaField) -> PsiSample {
    let b = gamma.gamma1[(0, 1)];
    PsiSample { psi: 2.0 * I * b, a: gamma.gamma1[(0, 0)], b }
}

/// 2i·z·(Γ(z) − 1)₁₂, which tends to ψ with an O(1/z) error.
pub fn far_field_psi(gamma: &GammaField, z: Complex64) -> Complex64 {
    2.0 * I * z * gamma.evaluate(z)[(0, 1)]
}

/// The dressed NLS problem on a fixed grid.
#[derive(Clone)]
pub struct NlsSolver {
    pub scenario: NlsScenario,
    pub deformation: Deformation,
}

impl NlsSolver {
    pub fn new(scenario: NlsScenario, radial: usize, angular: usize) -> Result<Self> {
        scenario.validate()?;
        let grid = build_grid(&scenario.support(), radial, angular)?;
        Self::on_grid(scenario, &grid)
    }

    pub fn on_grid(scenario: NlsScenario, grid: &QuadratureGrid) -> Result<Self> {
        if grid.mirror.is_none() {
            return Err(Error::Domain("the NLS grid must be conjugate-closed".into()));
        }
        let pair = nls_pair(&scenario, grid)?;
        let deformation = Deformation::from_pair(pair, grid, Flow::NLS)?;
        Ok(Self { scenario, deformation })
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        self.deformation.grid()
    }

    /// The dressed M = e^{−iξσ₃}M₀e^{iξσ₃}.
    pub fn field(&self, t: &[Complex64]) -> Result<MatrixField> {
        self.deformation.field_at(t)
    }

    pub fn solve(&self, t: &[Complex64]) -> Result<GammaField> {
        self.deformation.solve(t)
    }

    pub fn psi(&self, t: &[Complex64]) -> Result<PsiSample> {
        Ok(psi_extract(&self.solve(t)?))
    }

    /// ψ at many time vectors in parallel.
    pub fn psi_many(&self, ts: &[Vec<Complex64>]) -> Result<Vec<PsiSample>> {
        ts.par_iter().map(|t| self.psi(t).map_err(|e| Error::PathSolve { t: t.clone(), source: Box::new(e) })).collect()
    }

    pub fn log_det2(&self, t: &[Complex64]) -> Result<Complex64> {
        self.deformation.log_det2(t)
    }
}

/// Shifts the (x, t, t₃) components of a base time vector.
fn shifted(base: &[Complex64], dx: f64, dt: f64, dt3: f64) -> Vec<Complex64> {
    let mut v = base.to_vec();
    v[0] += dx;
    v[1] += dt;
    if dt3 != 0.0 {
        v[2] += dt3;
    }
    v
}

/// U = [[−iz, ψ], [−ψ̄, iz]] and V = [[−iz² + i|ψ|²/2, zψ + iψ_x/2], [−zψ̄ + iψ̄_x/2, iz² − i|ψ|²/2]].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LaxPair {
    pub psi: Complex64,
    pub psi_x: Complex64,
}

impl LaxPair {
    pub fn u(&self, z: Complex64) -> CMat {
        mat2(-I * z, self.psi, -self.psi.conj(), I * z)
    }

    pub fn v(&self, z: Complex64) -> CMat {
        let p2 = self.psi.norm_sqr();
        mat2(
            -I * z * z + I * p2 / 2.0,
            z * self.psi + I * self.psi_x / 2.0,
            -z * self.psi.conj() + I * self.psi_x.conj() / 2.0,
            I * z * z - I * p2 / 2.0,
        )
    }
}

/// Lax pair at t from ψ and a central difference of ψ in x.
pub fn lax_matrices(solver: &NlsSolver, t: &[Complex64], h: f64) -> Result<LaxPair> {
    let ps = solver.psi_many(&[t.to_vec(), shifted(t, h, 0.0, 0.0), shifted(t, -h, 0.0, 0.0)])?;
    Ok(LaxPair { psi: ps[0].psi, psi_x: (ps[1].psi - ps[2].psi) / (2.0 * h) })
}

/// max over probes of ‖∂_tU − ∂_xV + [U, V]‖ with central differences of step h.
pub fn zero_curvature_residual(solver: &NlsSolver, t: &[Complex64], h: f64, probes: &[Complex64]) -> Result<f64> {
    let pts: Vec<Vec<Complex64>> =
        [(0.0, 0.0), (h, 0.0), (-h, 0.0), (2.0 * h, 0.0), (-2.0 * h, 0.0), (0.0, h), (0.0, -h)]
            .iter()
            .map(|&(dx, dt)| shifted(t, dx, dt, 0.0))
            .collect();
    let p: Vec<Complex64> = solver.psi_many(&pts)?.iter().map(|s| s.psi).collect();
    let d = 2.0 * h;
    let center = LaxPair { psi: p[0], psi_x: (p[1] - p[2]) / d };
    let right = LaxPair { psi: p[1], psi_x: (p[3] - p[0]) / d };
    let left = LaxPair { psi: p[2], psi_x: (p[0] - p[4]) / d };
    let (up, down) = (LaxPair { psi: p[5], psi_x: ZERO }, LaxPair { psi: p[6], psi_x: ZERO });
    Ok(probes
        .iter()
        .map(|&z| {
            let ut = (up.u(z) - down.u(z)) / Complex64::new(d, 0.0);
            let vx = (right.v(z) - left.v(z)) / Complex64::new(d, 0.0);
            let (u, v) = (center.u(z), center.v(z));
            fro(&(ut - vx + &u * &v - &v * &u))
        })
        .fold(0.0, f64::max))
}

/// |iψ_t + ψ_xx/2 + |ψ|²ψ| at t by central differences.
pub fn nls_residual(solver: &NlsSolver, t: &[Complex64], h: f64) -> Result<f64> {
    let pts: Vec<Vec<Complex64>> = [(0.0, 0.0), (h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)]
        .iter()
        .map(|&(dx, dt)| shifted(t, dx, dt, 0.0))
        .collect();
    let p: Vec<Complex64> = solver.psi_many(&pts)?.iter().map(|s| s.psi).collect();
    let psi_t = (p[3] - p[4]) / (2.0 * h);
    let psi_xx = (p[1] - 2.0 * p[0] + p[2]) / (h * h);
    Ok((I * psi_t + psi_xx / 2.0 + p[0].norm_sqr() * p[0]).norm())
}

/// |ψ_{t₃} + ψ_xxx/4 + (3/2)|ψ|²ψ_x| at t (which must carry t₃) by central differences.
pub fn cmkdv_residual(solver: &NlsSolver, t: &[Complex64], h: f64) -> Result<f64> {
    if t.len() < 3 {
        return Err(Error::Argument("the cmKdV residual needs t₃ in the time vector".into()));
    }
    let pts: Vec<Vec<Complex64>> =
        [(0.0, 0.0), (h, 0.0), (-h, 0.0), (2.0 * h, 0.0), (-2.0 * h, 0.0), (0.0, h), (0.0, -h)]
            .iter()
            .map(|&(dx, d3)| shifted(t, dx, 0.0, d3))
            .collect();
    let p: Vec<Complex64> = solver.psi_many(&pts)?.iter().map(|s| s.psi).collect();
    let psi_3 = (p[5] - p[6]) / (2.0 * h);
    let psi_x = (p[1] - p[2]) / (2.0 * h);
    let psi_xxx = (p[3] - 2.0 * p[1] + 2.0 * p[2] - p[4]) / (2.0 * h.powi(3));
    Ok((psi_3 + psi_xxx / 4.0 + 1.5 * p[0].norm_sqr() * psi_x).norm())
}

/// |i∂_{t₁}ψ₁ − 2ψ₂| with ψ₂ = (i/2)∂_{t₁}ψ₁ (h₁ = 0): the m = 1 step of the recursion.
pub fn hierarchy_m1_residual(solver: &NlsSolver, t: &[Complex64], h: f64) -> Result<f64> {
    let p = solver.psi_many(&[shifted(t, h, 0.0, 0.0), shifted(t, -h, 0.0, 0.0)])?;
    let d1 = (p[0].psi - p[1].psi) / (2.0 * h);
    let psi2 = I / 2.0 * d1;
    Ok((I * d1 - 2.0 * psi2).norm())
}

/// |∂_x a + 2i|b|²| with a = (Γ₁)₁₁ and b = (Γ₁)₁₂.
pub fn a_equation_residual(solver: &NlsSolver, t: &[Complex64], h: f64) -> Result<f64> {
    let p = solver.psi_many(&[t.to_vec(), shifted(t, h, 0.0, 0.0), shifted(t, -h, 0.0, 0.0)])?;
    let ax = (p[1].a - p[2].a) / (2.0 * h);
    Ok((ax + 2.0 * I * p[0].b.norm_sqr()).norm())
}

/// Both sides of ∂²_x log det₂ = |ψ|².
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Det2PsiReport {
    pub second_derivative: Complex64,
    pub psi_squared: f64,
    pub discrepancy: f64,
}

pub fn det2_psi_check(solver: &NlsSolver, t: &[Complex64], h: f64) -> Result<Det2PsiReport> {
    let pts = [shifted(t, -h, 0.0, 0.0), t.to_vec(), shifted(t, h, 0.0, 0.0)];
    let logs: Vec<Complex64> = pts.par_iter().map(|p| solver.log_det2(p)).collect::<Result<_>>()?;
    let c0 = logs[1];
    let l: Vec<Complex64> = logs.iter().map(|&v| crate::linalg::unwrap_log(v, c0)).collect();
    let d2 = (l[2] - 2.0 * l[1] + l[0]) / (h * h);
    let p2 = solver.psi(t)?.psi.norm_sqr();
    Ok(Det2PsiReport { second_derivative: d2, psi_squared: p2, discrepancy: (d2 - p2).norm() })
}

/// Residuals at steps h and h/2 with the observed order log₂(r(h)/r(h/2)).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Refinement {
    pub h: f64,
    pub coarse: f64,
    pub fine: f64,
    pub slope: f64,
}

pub fn refine(h: f64, f: impl Fn(f64) -> Result<f64>) -> Result<Refinement> {
    let coarse = f(h)?;
    let fine = f(h / 2.0)?;
    Ok(Refinement { h, coarse, fine, slope: (coarse / fine).log2() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, sigma3};

    fn disk_scenario(beta: Beta) -> NlsScenario {
        NlsScenario::new(DomainSpec::disk(c(0.0, 1.0), 0.5), beta)
    }

    #[test]
    fn pair_induces_the_nls_field() {
        let s = disk_scenario(Beta::Polynomial { coeffs: vec![c(1.0, 0.2), c(0.3, -0.1)] });
        let grid = build_grid(&s.support(), 6, 12).unwrap();
        let pair = nls_pair(&s, &grid).unwrap();
        pair.check_constraints(&grid).unwrap();
        let m = pair.m_from_pair(&grid).unwrap();
        let z = c(0.1, 1.2);
        let v = m.eval(z);
        assert!((v[(0, 1)] - s.beta.eval(z)).norm() < 1e-14);
        assert_eq!(v[(1, 0)], ZERO);
        let w = z.conj();
        let v = m.eval(w);
        assert!((v[(1, 0)] + s.beta.eval(z).conj()).norm() < 1e-14);
        assert!(field_schwarz_residual(&m, &grid).unwrap() < 1e-14);
        assert!(pair.kernel_eval(z, z).norm() == 0.0);
    }

    #[test]
    fn constant_beta_field_is_the_indicator() {
        let s = disk_scenario(Beta::Constant { value: c(1.0, 0.0) });
        let solver = NlsSolver::new(s, 4, 8).unwrap();
        let m = solver.field(&times(0.0, 0.0, None)).unwrap();
        assert!((m.eval(c(0.0, 1.1))[(0, 1)] - 1.0).norm() < 1e-15);
        assert!((m.eval(c(0.0, -1.1))[(1, 0)] + 1.0).norm() < 1e-15);
        assert_eq!(fro(&m.eval(c(2.0, 0.0))), 0.0);
    }

    #[test]
    fn zero_beta_gives_zero_psi_and_trivial_residuals() {
        let solver = NlsSolver::new(disk_scenario(Beta::Constant { value: ZERO }), 4, 8).unwrap();
        let t = times(0.1, 0.05, Some(0.0));
        assert_eq!(solver.psi(&t).unwrap().psi, ZERO);
        assert_eq!(nls_residual(&solver, &t, 1e-2).unwrap(), 0.0);
        assert_eq!(cmkdv_residual(&solver, &t, 1e-2).unwrap(), 0.0);
        assert_eq!(schwarz_residual(&solver.solve(&t).unwrap()).unwrap(), 0.0);
        assert_eq!(zero_curvature_residual(&solver, &t, 1e-2, &[c(1.0, 0.0)]).unwrap(), 0.0);
        assert_eq!(det2_psi_check(&solver, &t, 1e-2).unwrap().discrepancy, 0.0);
    }

    #[test]
    fn free_lax_pair_is_diagonal() {
        let l = LaxPair { psi: ZERO, psi_x: ZERO };
        let z = c(0.3, 0.7);
        assert!(fro(&(l.u(z) + sigma3() * (I * z))) < 1e-15);
        assert!(fro(&(l.v(z) + sigma3() * (I * z * z))) < 1e-15);
        let l = LaxPair { psi: c(0.4, 0.1), psi_x: c(-0.2, 0.3) };
        assert!(crate::linalg::trace(&l.v(z)).norm() < 1e-15);
    }

    #[test]
    fn solved_field_is_schwarz_symmetric_and_psi_matches_far_field() {
        let solver = NlsSolver::new(disk_scenario(Beta::Constant { value: c(1.0, 0.0) }), 10, 20).unwrap();
        let g = solver.solve(&times(0.3, 0.1, None)).unwrap();
        assert!(schwarz_residual(&g).unwrap() < 1e-8);
        let p = psi_extract(&g);
        assert!((g.gamma1[(1, 0)] + g.gamma1[(0, 1)].conj()).norm() < 1e-10);
        let far = far_field_psi(&g, c(1e3, 0.0));
        assert!((far - p.psi).norm() <= 1e-2 * p.psi.norm());
    }

    #[test]
    fn broken_mirror_is_detected() {
        let mut s = disk_scenario(Beta::Constant { value: c(1.0, 0.0) });
        s.mirror_scale = 2.0;
        let solver = NlsSolver::new(s, 8, 16).unwrap();
        let g = solver.solve(&times(0.3, 0.1, None)).unwrap();
        assert!(schwarz_residual(&g).unwrap() > 1e-2);
    }

    #[test]
    fn branch_of_sqrt_beta_must_be_continuous() {
        // β = z − i changes sign across the center of disk(i, 1/2)
        let s = disk_scenario(Beta::Polynomial { coeffs: vec![c(0.0, -1.0), c(1.0, 0.0)] });
        let grid = build_grid(&s.support(), 6, 12).unwrap();
        assert!(nls_pair(&s, &grid).is_err());
    }
}
