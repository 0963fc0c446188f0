//! Time dressing of M₀, the Malgrange one-form, τ by path integration,
//! Miwa shifts and the KP checks built on top of them.

pub mod kp;
pub mod miwa;

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::dbar::{solve_with_rows, CauchyRows, DiagGauge, GammaField, MatrixField};
use crate::determinants::log_det2_lu;
use crate::error::{Error, Result};
use crate::geometry::{boundary_contour, QuadratureGrid};
use crate::kernel::KernelPair;
use crate::linalg::{inverse, trace, CMat, ZERO};
use crate::quadrature::gauss_legendre_on;

/// Largest |Re(2κξ)| tolerated on the support boundary.
pub const OVERFLOW_EXPONENT: f64 = 700.0;
/// Default cap on the number of active times.
pub const MAX_TIMES: usize = 8;
/// Gauss points per path sub-segment.
pub const PATH_GAUSS_POINTS: usize = 8;

/// Dressing convention E(z,t) = diag(e^{κξ}, e^{−κξ}), ξ = Σ t_j z^j.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flow {
    pub kappa: Complex64,
}

impl Flow {
    /// M = e^{ξσ₃/2} M₀ e^{−ξσ₃/2}.
    pub const KP: Flow = Flow { kappa: Complex64 { re: 0.5, im: 0.0 } };
    /// M = e^{−iξσ₃} M₀ e^{iξσ₃} with t₁ = x, t₂ = t.
    pub const NLS: Flow = Flow { kappa: Complex64 { re: 0.0, im: -1.0 } };
}

/// ξ(z,t) = Σ_j t_j z^j.
pub fn xi(z: Complex64, t: &[Complex64]) -> Complex64 {
    let mut p = z;
    let mut s = ZERO;
    for tj in t {
        s += tj * p;
        p *= z;
    }
    s
}

/// ∂_z ξ(z,t).
pub fn xi_dz(z: Complex64, t: &[Complex64]) -> Complex64 {
    let mut p = Complex64::new(1.0, 0.0);
    let mut s = ZERO;
    for (j, tj) in t.iter().enumerate() {
        s += tj * p * (j + 1) as f64;
        p *= z;
    }
    s
}

pub fn check_times(t: &[Complex64], cap: usize) -> Result<()> {
    if t.is_empty() {
        return Err(Error::Argument("time vector must have at least one entry".into()));
    }
    if t.len() > cap {
        return Err(Error::Argument(format!("{} times exceed the cap {cap}", t.len())));
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("time vector has non-finite entries".into()));
    }
    Ok(())
}

/// Diagonal gauge diag(e^{κξ}, e^{−κξ}) after checking the overflow guard on the support boundary.
pub fn dressing_gauge(m0: &MatrixField, t: &[Complex64], flow: Flow) -> Result<DiagGauge> {
    check_times(t, usize::MAX)?;
    for z in boundary_contour(&m0.support, 128).nodes {
        let e = 2.0 * (flow.kappa * xi(z, t)).re;
        if e.abs() > OVERFLOW_EXPONENT {
            return Err(Error::Overflow { z, exponent: e });
        }
    }
    let k = flow.kappa;
    let t1 = t.to_vec();
    let t2 = t.to_vec();
    Ok(DiagGauge {
        d: Arc::new(move |z| {
            let e = (k * xi(z, &t1)).exp();
            [e, 1.0 / e]
        }),
        dz: Arc::new(move |z| {
            let e = (k * xi(z, &t2)).exp();
            let d = k * xi_dz(z, &t2);
            [d * e, -d / e]
        }),
    })
}

/// Dressed field E M₀ E⁻¹.
pub fn dress(m0: &MatrixField, t: &[Complex64], flow: Flow) -> Result<MatrixField> {
    if m0.rows != 2 || m0.cols != 2 {
        return Err(Error::Argument("dressing needs a 2×2 field".into()));
    }
    let gauge = dressing_gauge(m0, t, flow)?;
    let mut out = m0.gauged(&gauge);
    out.flags.traceless = m0.flags.traceless;
    Ok(out)
}

/// Dressed pair (E f, E⁻¹ g).
pub fn dress_pair(pair: &KernelPair, t: &[Complex64], flow: Flow) -> Result<KernelPair> {
    if pair.r() != 2 {
        return Err(Error::Argument("dressing needs r = 2".into()));
    }
    let gauge = dressing_gauge(&pair.f, t, flow)?;
    Ok(pair.gauged(&gauge))
}

/// κ z^j [σ₃, M] at a point.
pub fn dt_m_at(m: &CMat, z: Complex64, j: usize, flow: Flow) -> CMat {
    let s = flow.kappa * z.powi(j as i32) * 2.0;
    let mut out = CMat::zeros(2, 2);
    out[(0, 1)] = s * m[(0, 1)];
    out[(1, 0)] = -s * m[(1, 0)];
    out
}

/// ∂_{t_j} M as a field.
pub fn dt_m(m: &MatrixField, j: usize, flow: Flow) -> MatrixField {
    let mm = m.clone();
    MatrixField::new(2, 2, m.support.clone(), move |z| dt_m_at(&mm.eval(z), z, j, flow))
}

/// ω_j = −(1/π) Σ_k w_k Tr(Γ⁻¹ ∂_zΓ ∂_{t_j}M) at the nodes of Γ's grid.
pub fn malgrange_component(gamma: &GammaField, m_nodes: &[CMat], j: usize, flow: Flow) -> Result<Complex64> {
    let grid = &gamma.grid;
    let dz = gamma.dz_at_nodes();
    let mut s = ZERO;
    for k in 0..grid.len() {
        let m = &m_nodes[k];
        if m[(0, 1)] == ZERO && m[(1, 0)] == ZERO {
            continue;
        }
        let inv = inverse(&gamma.values[k]).ok_or_else(|| Error::Linalg(format!("Γ singular at node {k}")))?;
        let dm = dt_m_at(m, grid.nodes[k], j, flow);
        s += trace(&(inv * &dz[k] * dm)) * grid.weights[k];
    }
    Ok(-s / PI)
}

/// A base M₀ (optionally induced by a kernel pair) deformed by finitely many times on a fixed grid.
#[derive(Clone)]
pub struct Deformation {
    pub base: MatrixField,
    pub pair: Option<KernelPair>,
    pub flow: Flow,
    pub max_times: usize,
    rows: Arc<CauchyRows>,
}

impl Deformation {
    pub fn from_field(base: MatrixField, grid: &QuadratureGrid, flow: Flow) -> Result<Self> {
        if base.rows != 2 || base.cols != 2 {
            return Err(Error::Argument("deformations need a 2×2 M₀".into()));
        }
        base.check_flags(grid)?;
        Ok(Self {
            base,
            pair: None,
            flow,
            max_times: MAX_TIMES,
            rows: Arc::new(CauchyRows::new(Arc::new(grid.clone()))),
        })
    }

    pub fn from_pair(pair: KernelPair, grid: &QuadratureGrid, flow: Flow) -> Result<Self> {
        let base = pair.m_from_pair(grid)?;
        let mut d = Self::from_field(base, grid, flow)?;
        d.pair = Some(pair);
        Ok(d)
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        self.rows.grid()
    }

    pub fn field_at(&self, t: &[Complex64]) -> Result<MatrixField> {
        check_times(t, self.max_times)?;
        match &self.pair {
            Some(p) => Ok(dress_pair(p, t, self.flow)?.m_unchecked()),
            None => dress(&self.base, t, self.flow),
        }
    }

    pub fn pair_at(&self, t: &[Complex64]) -> Result<KernelPair> {
        check_times(t, self.max_times)?;
        let p = self.pair.as_ref().ok_or_else(|| Error::Argument("deformation has no kernel pair".into()))?;
        dress_pair(p, t, self.flow)
    }

    pub fn solve_field(&self, m: &MatrixField) -> Result<GammaField> {
        solve_with_rows(self.rows.clone(), m)
    }

    pub fn solve(&self, t: &[Complex64]) -> Result<GammaField> {
        self.solve_field(&self.field_at(t)?)
    }

    /// Γ at t with every component ω_1..ω_J.
    pub fn omega(&self, t: &[Complex64]) -> Result<(GammaField, Vec<Complex64>)> {
        let m = self.field_at(t)?;
        let gamma = self.solve_field(&m)?;
        let nodes: Vec<CMat> = gamma.grid.nodes.iter().map(|&z| m.eval(z)).collect();
        let om =
            (1..=t.len()).map(|j| malgrange_component(&gamma, &nodes, j, self.flow)).collect::<Result<Vec<_>>>()?;
        Ok((gamma, om))
    }

    /// log det₂(I − 𝒦_t) for the dressed pair on the grid.
    pub fn log_det2(&self, t: &[Complex64]) -> Result<Complex64> {
        let p = self.pair_at(t)?;
        Ok(log_det2_lu(&p.discretize(self.grid())))
    }

    /// ∫ Σ_j ω_j dt_j along the polyline, each segment split into `steps` Gauss panels.
    pub fn tau_along_path(&self, path: &[Vec<Complex64>], steps: usize) -> Result<Complex64> {
        if path.len() < 2 {
            return Ok(ZERO);
        }
        let steps = steps.max(1);
        let dim = path[0].len();
        if path.iter().any(|p| p.len() != dim) {
            return Err(Error::Argument("path points must share one dimension".into()));
        }
        let (gx, gw) = gauss_legendre_on(PATH_GAUSS_POINTS, 0.0, 1.0);
        let mut samples: Vec<(Vec<Complex64>, Vec<Complex64>, f64)> = Vec::new();
        for seg in path.windows(2) {
            let (a, b) = (&seg[0], &seg[1]);
            let delta: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
            if delta.iter().all(|d| *d == ZERO) {
                continue;
            }
            for s in 0..steps {
                for (&x, &w) in gx.iter().zip(&gw) {
                    let u = (s as f64 + x) / steps as f64;
                    let t: Vec<Complex64> = a.iter().zip(&delta).map(|(p, d)| p + d * u).collect();
                    samples.push((t, delta.clone(), w / steps as f64));
                }
            }
        }
        let parts: Vec<Complex64> = samples
            .par_iter()
            .map(|(t, delta, w)| {
                let (_, om) = self.omega(t).map_err(|e| Error::PathSolve { t: t.clone(), source: Box::new(e) })?;
                Ok(om.iter().zip(delta).map(|(o, d)| o * d).sum::<Complex64>() * *w)
            })
            .collect::<Result<_>>()?;
        Ok(parts.iter().sum())
    }
}

fn bump(t: &[Complex64], j: usize, h: f64) -> Vec<Complex64> {
    let mut out = t.to_vec();
    out[j - 1] += h;
    out
}

/// ω_j at t next to the central difference of log det₂ in t_j with step h.
pub fn variational_check(def: &Deformation, t: &[Complex64], j: usize, h: f64) -> Result<(Complex64, Complex64)> {
    if j == 0 || j > t.len() {
        return Err(Error::Argument(format!("time index {j} out of range")));
    }
    let (_, om) = def.omega(t)?;
    let plus = def.log_det2(&bump(t, j, h))?;
    let minus = def.log_det2(&bump(t, j, -h))?;
    let diff = crate::linalg::unwrap_log(plus - minus, ZERO);
    Ok((om[j - 1], diff / (2.0 * h)))
}

/// ∂_{t_i}ω_j − ∂_{t_j}ω_i by central differences.
pub fn closedness(def: &Deformation, t: &[Complex64], i: usize, j: usize, h: f64) -> Result<Complex64> {
    if i == 0 || j == 0 || i > t.len() || j > t.len() {
        return Err(Error::Argument(format!("time indices ({i},{j}) out of range")));
    }
    let pts = [bump(t, i, h), bump(t, i, -h), bump(t, j, h), bump(t, j, -h)];
    let om: Vec<Vec<Complex64>> = pts.par_iter().map(|p| def.omega(p).map(|o| o.1)).collect::<Result<_>>()?;
    let di_wj = (om[0][j - 1] - om[1][j - 1]) / (2.0 * h);
    let dj_wi = (om[2][i - 1] - om[3][i - 1]) / (2.0 * h);
    Ok(di_wj - dj_wi)
}

/// ∮ ω around the rectangle t, t + a e_i, t + a e_i + b e_j, t + b e_j.
pub fn loop_integral(
    def: &Deformation,
    t: &[Complex64],
    (i, a): (usize, f64),
    (j, b): (usize, f64),
    steps: usize,
) -> Result<Complex64> {
    let p1 = bump(t, i, a);
    let p2 = bump(&p1, j, b);
    let p3 = bump(t, j, b);
    def.tau_along_path(&[t.to_vec(), p1, p2, p3, t.to_vec()], steps)
}

/// Current time, accumulated log τ and the Γ solved there.
#[derive(Clone, Debug)]
pub struct DeformationState {
    pub t: Vec<Complex64>,
    pub log_tau: Complex64,
    pub gamma: GammaField,
}

impl DeformationState {
    pub fn new(def: &Deformation, t: Vec<Complex64>, log_tau: Complex64) -> Result<Self> {
        let gamma = def.solve(&t)?;
        Ok(Self { t, log_tau, gamma })
    }

    /// Integrates ω from the current time through `waypoints` and moves there.
    pub fn advance(&mut self, def: &Deformation, waypoints: &[Vec<Complex64>], steps: usize) -> Result<Complex64> {
        let Some(end) = waypoints.last() else {
            return Ok(ZERO);
        };
        let mut path = vec![self.t.clone()];
        path.extend_from_slice(waypoints);
        let inc = def.tau_along_path(&path, steps)?;
        self.gamma = def.solve(end).map_err(|e| Error::PathSolve { t: end.clone(), source: Box::new(e) })?;
        self.t = end.clone();
        self.log_tau += inc;
        Ok(inc)
    }
}
