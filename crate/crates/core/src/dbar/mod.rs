//! Nyström solver for the matrix ∂̄-problem ∂̄Γ = ΓM, Γ → 1 at infinity.

mod cauchy;
mod field;

pub(crate) use cauchy::CauchyRows;
pub use cauchy::Target;
pub use field::{DiagFn, DiagGauge, FieldFlags, LowRank, MatFn, MatrixField};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::geometry::QuadratureGrid;
use crate::linalg::{det, fro, identity, CMat, Dense, DenseLu, ZERO};

/// Reciprocal condition number below which Id − 𝒦 counts as singular.
pub const RCOND_FLOOR: f64 = 1e-13;

/// Node values of Γ together with the data needed to evaluate it anywhere.
#[derive(Clone)]
pub struct GammaField {
    pub grid: Arc<QuadratureGrid>,
    pub values: Vec<CMat>,
    /// Coefficient of 1/z at infinity.
    pub gamma1: CMat,
    /// Coefficient of 1/z² at infinity.
    pub gamma2: CMat,
    pub source: MatrixField,
    /// D_k = Γ(z_k)M(z_k).
    pub density: Vec<CMat>,
    pub rcond: f64,
    rows: Arc<CauchyRows>,
    dz_nodes: Arc<OnceLock<Vec<CMat>>>,
}

impl std::fmt::Debug for GammaField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GammaField")
            .field("nodes", &self.grid.len())
            .field("gamma1", &self.gamma1)
            .field("rcond", &self.rcond)
            .finish()
    }
}

/// Node samples of a low-rank factorization M = U Vᵀ (V = 1 when M carries no factors).
fn node_factors(grid: &QuadratureGrid, m: &MatrixField) -> (Vec<CMat>, Vec<CMat>) {
    let r = m.rows;
    grid.nodes
        .par_iter()
        .map(|&z| match m.factors() {
            Some(lr) => ((lr.left)(z), (lr.right)(z)),
            None => (m.eval(z), identity(r)),
        })
        .unzip()
}

/// Solves the collocated equation Γ(z_j) = 1 + Σ_k P_jk Γ(z_k) M(z_k) for Γ at every node.
pub fn solve_gamma(grid: &QuadratureGrid, m: &MatrixField) -> Result<GammaField> {
    solve_gamma_shared(Arc::new(grid.clone()), m)
}

/// As [`solve_gamma`] but shares an existing grid.
pub fn solve_gamma_shared(grid: Arc<QuadratureGrid>, m: &MatrixField) -> Result<GammaField> {
    if m.rows != m.cols {
        return Err(Error::Argument(format!("Γ needs a square M, got {}×{}", m.rows, m.cols)));
    }
    for e in m.support.components() {
        if !grid.domain.contains(e.center) {
            return Err(Error::Domain("support of M is not inside the grid domain".into()));
        }
    }
    let rows = Arc::new(CauchyRows::new(grid.clone()));
    solve_with_rows(rows, m)
}

pub(crate) fn solve_with_rows(rows: Arc<CauchyRows>, m: &MatrixField) -> Result<GammaField> {
    let grid = rows.grid().clone();
    let r = m.rows;
    let n = grid.len();
    let (us, vs) = node_factors(&grid, m);
    let q = us.first().map_or(0, |u| u.ncols());
    if us.iter().any(|u| u.nrows() != r || u.ncols() != q) || vs.iter().any(|v| v.nrows() != r || v.ncols() != q) {
        return Err(Error::Argument("inconsistent factor shapes".into()));
    }
    let active: Vec<usize> = (0..n).filter(|&k| fro(&us[k]) > 0.0).collect();
    let na = active.len();

    // P[j][a] = row entry of node j against active node active[a].
    let p: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let row = rows.value_row(Target::Node(j));
            active.iter().map(|&k| row[k]).collect()
        })
        .collect();

    let mut density = vec![CMat::zeros(r, r); n];
    let mut rcond = 1.0;
    if na > 0 {
        let size = na * q;
        let mut lmat = Dense::zeros(size, size);
        for (ja, &j) in active.iter().enumerate() {
            for (ka, &k) in active.iter().enumerate() {
                let c = vs[k].transpose() * &us[j];
                let pk = p[j][ka];
                for alpha in 0..q {
                    for beta in 0..q {
                        lmat[(ja * q + alpha, ka * q + beta)] = -pk * c[(beta, alpha)];
                    }
                }
            }
        }
        for d in 0..size {
            lmat[(d, d)] += Complex64::new(1.0, 0.0);
        }
        let lu = DenseLu::new(&lmat);
        rcond = lu.rcond();
        if !(rcond >= RCOND_FLOOR) {
            return Err(Error::NotInvertible { rcond });
        }
        let mut rhs = Dense::zeros(size, r);
        for (ja, &j) in active.iter().enumerate() {
            for alpha in 0..q {
                for a in 0..r {
                    rhs[(ja * q + alpha, a)] = us[j][(a, alpha)];
                }
            }
        }
        let sol = lu.solve(&rhs);
        for (ka, &k) in active.iter().enumerate() {
            let s = CMat::from_fn(r, q, |a, alpha| sol[(ka * q + alpha, a)]);
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Linalg("non-finite solution".into()));
            }
            density[k] = s * vs[k].transpose();
        }
    }

    let values: Vec<CMat> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut g = identity(r);
            for (ka, &k) in active.iter().enumerate() {
                g += &density[k] * p[j][ka];
            }
            g
        })
        .collect();

    let mut gamma1 = CMat::zeros(r, r);
    let mut gamma2 = CMat::zeros(r, r);
    for &k in &active {
        let w = grid.weights[k] / PI;
        gamma1 += &density[k] * Complex64::new(w, 0.0);
        gamma2 += &density[k] * (grid.nodes[k] * w);
    }

    Ok(GammaField {
        grid,
        values,
        gamma1,
        gamma2,
        source: m.clone(),
        density,
        rcond,
        rows,
        dz_nodes: Arc::new(OnceLock::new()),
    })
}

impl GammaField {
    pub fn dim(&self) -> usize {
        self.source.rows
    }

    fn target(&self, z: Complex64) -> Target {
        let tol = 1e-14 * self.grid.domain.diameter().max(1.0);
        match self.grid.nodes.iter().position(|&w| (w - z).norm() <= tol) {
            Some(j) => Target::Node(j),
            None => Target::Point(z),
        }
    }

    fn apply(&self, row: &[Complex64]) -> CMat {
        let mut out = CMat::zeros(self.dim(), self.dim());
        for (k, d) in self.density.iter().enumerate() {
            if row[k] != ZERO && fro(d) > 0.0 {
                out += d * row[k];
            }
        }
        out
    }

    /// Γ(z) = 1 + (1/π)∫∫ Γ(w)M(w)/(z − w) dA(w) by the same rule as the solve.
    pub fn evaluate(&self, z: Complex64) -> CMat {
        match self.target(z) {
            Target::Node(j) => self.values[j].clone(),
            t => identity(self.dim()) + self.apply(&self.rows.value_row(t)),
        }
    }

    /// Γ at a target, always recomputed from the density.
    pub fn evaluate_target(&self, t: Target) -> CMat {
        identity(self.dim()) + self.apply(&self.rows.value_row(t))
    }

    /// ∂_zΓ(z); points on a component boundary are rejected.
    pub fn dz(&self, z: Complex64) -> Result<CMat> {
        match self.target(z) {
            Target::Node(j) => Ok(self.dz_at_nodes()[j].clone()),
            t => Ok(self.apply(&self.rows.dz_row(t)?)),
        }
    }

    /// ∂_zΓ at every node, computed once.
    pub fn dz_at_nodes(&self) -> &[CMat] {
        self.dz_nodes.get_or_init(|| {
            (0..self.grid.len())
                .into_par_iter()
                .map(|j| {
                    let row = self.rows.dz_row(Target::Node(j)).expect("node targets are interior");
                    self.apply(&row)
                })
                .collect()
        })
    }

    /// max_k |det Γ(z_k) − 1|.
    pub fn unimodularity_residual(&self) -> f64 {
        self.values.iter().map(|g| (det(g) - 1.0).norm()).fold(0.0, f64::max)
    }

    /// max over nodes of ‖∂̄Γ − ΓM‖ with ∂̄Γ from a local least-squares quadratic.
    pub fn dbar_residual(&self) -> f64 {
        let r = self.dim();
        let grid = &self.grid;
        (0..grid.len())
            .into_par_iter()
            .map(|j| {
                let Some(dbar) = local_dbar(grid, j, &self.values, r) else {
                    return 0.0;
                };
                let gm = &self.values[j] * self.source.eval(grid.nodes[j]);
                fro(&(dbar - gm))
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Writes `node,re,im` followed by the real and imaginary parts of each entry, row-major.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let r = self.dim();
        write!(w, "node,re,im")?;
        for a in 1..=r {
            for b in 1..=r {
                write!(w, ",g{a}{b}_re,g{a}{b}_im")?;
            }
        }
        writeln!(w)?;
        for (k, (z, g)) in self.grid.nodes.iter().zip(&self.values).enumerate() {
            write!(w, "{k},{:.17e},{:.17e}", z.re, z.im)?;
            for a in 0..r {
                for b in 0..r {
                    write!(w, ",{:.17e},{:.17e}", g[(a, b)].re, g[(a, b)].im)?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

const STENCIL_RINGS: usize = 3;
const STENCIL_ANGLES: usize = 5;

/// ∂̄ of node data at node j from a quadratic fit over a 3 × 5 polar patch of its component.
fn local_dbar(grid: &QuadratureGrid, j: usize, values: &[CMat], r: usize) -> Option<CMat> {
    let (ci, l) = grid.locate[j];
    let comp = &grid.components[ci];
    let (nr, nt) = (comp.n_radial(), comp.n_angular());
    if nr < STENCIL_RINGS || nt < STENCIL_ANGLES {
        return None;
    }
    let z0 = grid.nodes[j];
    let (i, k) = (l / nt, l % nt);
    let i0 = i.saturating_sub(1).min(nr - STENCIL_RINGS);
    let mut near = Vec::with_capacity(STENCIL_RINGS * STENCIL_ANGLES);
    for ii in i0..i0 + STENCIL_RINGS {
        for dk in 0..STENCIL_ANGLES {
            let kk = (k + nt + dk - STENCIL_ANGLES / 2) % nt;
            let g = comp.nodes[ii * nt + kk];
            near.push(((grid.nodes[g] - z0).norm(), g));
        }
    }
    const STENCIL: usize = STENCIL_RINGS * STENCIL_ANGLES;
    let h = near.iter().map(|v| v.0).fold(0.0, f64::max);
    if h == 0.0 {
        return None;
    }
    let a = DMatrix::<f64>::from_fn(STENCIL, 6, |i, col| {
        let d = (grid.nodes[near[i].1] - z0) / h;
        match col {
            0 => 1.0,
            1 => d.re,
            2 => d.im,
            3 => d.re * d.re,
            4 => d.re * d.im,
            _ => d.im * d.im,
        }
    });
    let ncol = 2 * r * r;
    let b = DMatrix::<f64>::from_fn(STENCIL, ncol, |i, col| {
        let e = col / 2;
        let v = values[near[i].1][(e / r, e % r)];
        if col % 2 == 0 {
            v.re
        } else {
            v.im
        }
    });
    let sol = a.svd(true, true).solve(&b, 1e-12).ok()?;
    Some(CMat::from_fn(r, r, |p, q| {
        let e = 2 * (p * r + q);
        let dx = Complex64::new(sol[(1, e)], sol[(1, e + 1)]);
        let dy = Complex64::new(sol[(2, e)], sol[(2, e + 1)]);
        (dx + Complex64::i() * dy) / (2.0 * h)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DomainSpec, Ellipse};
    use crate::linalg::c;

    fn e12(v: Complex64) -> CMat {
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = v;
        m
    }

    #[test]
    fn zero_field_gives_identity() {
        let d = DomainSpec::disk(c(0.0, 0.0), 1.0);
        let grid = build_grid(&d, 6, 12).unwrap();
        let g = solve_gamma(&grid, &MatrixField::zero(2, d)).unwrap();
        for v in &g.values {
            assert_eq!(*v, identity(2));
        }
        assert_eq!(g.evaluate(c(3.0, 1.0)), identity(2));
        assert_eq!(g.dz(c(3.0, 1.0)).unwrap(), CMat::zeros(2, 2));
        assert_eq!(g.unimodularity_residual(), 0.0);
        assert!(g.dbar_residual() < 1e-12);
    }

    #[test]
    fn constant_upper_triangular_field_on_disk() {
        let cc = c(0.3, 0.0);
        let m = MatrixField::constant_e12(cc, Ellipse::disk(c(0.0, 0.0), 1.0));
        let grid = build_grid(&m.support, 10, 20).unwrap();
        let g = solve_gamma(&grid, &m).unwrap();
        for (z, v) in grid.nodes.iter().zip(&g.values) {
            assert!(fro(&(v - identity(2) - e12(cc * z.conj()))) < 1e-12);
        }
        assert!(fro(&(&g.gamma1 - e12(cc))) < 1e-12);
        let z = c(2.0, 0.0);
        assert!(fro(&(g.evaluate(z) - identity(2) - e12(cc / z))) < 1e-12);
        assert!(fro(&(g.dz(z).unwrap() - e12(-cc / 4.0))) < 1e-12);
        for d in g.dz_at_nodes() {
            assert!(fro(d) < 1e-10);
        }
        assert!(g.unimodularity_residual() < 1e-14);
        assert!(g.dbar_residual() < 1e-9);
    }

    #[test]
    fn far_field_decay() {
        let m = MatrixField::constant_e12(c(0.3, 0.0), Ellipse::disk(c(0.0, 0.0), 1.0));
        let grid = build_grid(&m.support, 8, 16).unwrap();
        let g = solve_gamma(&grid, &m).unwrap();
        let z = c(1e6, 0.0);
        assert!(fro(&(g.evaluate(z) - identity(2))) <= 2.0 * fro(&g.gamma1) * 1e-6);
    }

    #[test]
    fn ellipse_constant_field() {
        let shape = Ellipse::new(c(0.2, 0.1), 1.5, 0.8, 0.3);
        let m = MatrixField::constant_e12(c(0.0, 0.4), shape);
        let grid = build_grid(&m.support, 12, 24).unwrap();
        let g = solve_gamma(&grid, &m).unwrap();
        for (z, v) in grid.nodes.iter().zip(&g.values) {
            let exact = e12(c(0.0, 0.4) * shape.cauchy_indicator(*z));
            assert!(fro(&(v - identity(2) - exact)) < 1e-12);
        }
        let area = shape.area() / PI;
        assert!(fro(&(&g.gamma1 - e12(c(0.0, 0.4) * area))) < 1e-10);
    }

    #[test]
    fn traceless_rotation_field_is_unimodular() {
        let d = DomainSpec::disk(c(0.0, 0.0), 1.0);
        let field = MatrixField::new(2, 2, d.clone(), |z: Complex64| {
            let mut out = CMat::zeros(2, 2);
            if z.norm() < 1.0 {
                out[(0, 1)] = c(0.3, 0.0) * (1.0 - z.norm_sqr());
                out[(1, 0)] = c(-0.3, 0.0) * (1.0 - z.norm_sqr());
            }
            out
        });
        let coarse = solve_gamma(&build_grid(&d, 6, 12).unwrap(), &field).unwrap();
        let fine = solve_gamma(&build_grid(&d, 12, 24).unwrap(), &field).unwrap();
        assert!(coarse.rcond > RCOND_FLOOR);
        assert!(fine.unimodularity_residual() < 1e-8);
        assert!(fine.unimodularity_residual() <= coarse.unimodularity_residual());
        let z = c(1.7, -0.4);
        assert!(fro(&(coarse.evaluate(z) - fine.evaluate(z))) < 1e-6);
    }

    #[test]
    fn node_ordering_does_not_change_values() {
        let d = DomainSpec::disk(c(0.0, 1.0), 0.5).with_conjugate();
        let field = MatrixField::new(2, 2, d.clone(), |z: Complex64| {
            let mut out = CMat::zeros(2, 2);
            if (z - c(0.0, 1.0)).norm() < 0.5 || (z - c(0.0, -1.0)).norm() < 0.5 {
                out[(0, 1)] = c(0.4, 0.1) * z;
                out[(1, 0)] = c(-0.2, 0.0);
            }
            out
        });
        let grid = build_grid(&d, 6, 12).unwrap();
        let n = grid.len();
        let perm: Vec<usize> = (0..n).map(|p| (p * 29 + 5) % n).collect();
        let a = solve_gamma(&grid, &field).unwrap();
        let b = solve_gamma(&grid.permuted(&perm).unwrap(), &field).unwrap();
        for (p, &q) in perm.iter().enumerate() {
            assert!(fro(&(&b.values[p] - &a.values[q])) < 1e-10);
        }
    }
}
