//! Integrable kernels K(z,w) = fᵀ(z)g(w)/(z − w) on planar domains, the matrix field
//! M = π f gᵀ they induce, their Nyström discretization and the resolvent built from Γ.

use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

use crate::dbar::{DiagGauge, FieldFlags, GammaField, MatrixField};
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, QuadratureGrid};
use crate::linalg::{fro, inverse, spectral_norm, CMat, Dense, ZERO};

/// Relative tolerance for fᵀg = 0 at the nodes.
pub const PAIR_TOL: f64 = 1e-12;
/// Relative tolerance for (∂̄f)ᵀg = 0 at the nodes.
pub const DBAR_PAIR_TOL: f64 = 1e-8;
/// Separation, relative to the domain diameter, below which K uses its first-order Taylor form.
pub const SPLIT_RADIUS: f64 = 1e-4;

/// Central-difference ∂_z (or ∂̄ when `bar`) of a matrix function.
pub(crate) fn numeric_wirtinger(f: &MatrixField, z: Complex64, h: f64, bar: bool) -> CMat {
    let i = Complex64::i();
    let dx = (f.eval(z + h) - f.eval(z - h)) / Complex64::new(2.0 * h, 0.0);
    let dy = (f.eval(z + i * h) - f.eval(z - i * h)) / Complex64::new(2.0 * h, 0.0);
    let s = if bar { i } else { -i };
    (dx + dy * s) * Complex64::new(0.5, 0.0)
}

/// Pair (f, g) of r×n fields with fᵀg = 0 and (∂̄f)ᵀg = 0.
#[derive(Clone, Debug)]
pub struct KernelPair {
    pub f: MatrixField,
    pub g: MatrixField,
}

impl KernelPair {
    pub fn new(f: MatrixField, g: MatrixField) -> Result<Self> {
        if f.rows != g.rows || f.cols != g.cols {
            return Err(Error::Argument(format!("f is {}×{} but g is {}×{}", f.rows, f.cols, g.rows, g.cols)));
        }
        Ok(Self { f, g })
    }

    pub fn zero(r: usize, n: usize, support: DomainSpec) -> Self {
        let z = CMat::zeros(r, n);
        let (a, b, c) = (z.clone(), z.clone(), z.clone());
        let f = MatrixField::new(r, n, support.clone(), move |_| a.clone()).with_dz(move |_| b.clone());
        let g = MatrixField::new(r, n, support, move |_| c.clone()).with_dz(move |_| z.clone());
        Self { f, g }
    }

    pub fn r(&self) -> usize {
        self.f.rows
    }

    pub fn n(&self) -> usize {
        self.f.cols
    }

    pub fn support(&self) -> &DomainSpec {
        &self.f.support
    }

    fn step(&self) -> f64 {
        1e-6 * self.support().diameter().max(1e-3)
    }

    /// ∂_z f, analytic when supplied.
    pub fn f_dz(&self, z: Complex64) -> CMat {
        self.f.dz(z).unwrap_or_else(|| numeric_wirtinger(&self.f, z, self.step(), false))
    }

    /// ∂̄ f, analytic when supplied.
    pub fn f_dzbar(&self, z: Complex64) -> CMat {
        self.f.dzbar(z).unwrap_or_else(|| numeric_wirtinger(&self.f, z, self.step(), true))
    }

    /// f ↦ εf, so that K ↦ εK.
    pub fn scaled(&self, eps: Complex64) -> Self {
        let f0 = self.f.eval_fn();
        let mut f = MatrixField::new(self.r(), self.n(), self.support().clone(), move |z| f0(z) * eps);
        if let Some(d) = self.f.dz_fn() {
            f = f.with_dz(move |z| d(z) * eps);
        }
        if let Some(d) = self.f.dzbar_fn() {
            f = f.with_dzbar(move |z| d(z) * eps);
        }
        Self { f, g: self.g.clone() }
    }

    /// f ↦ Df, g ↦ D⁻¹g for a diagonal D, so that M ↦ DMD⁻¹.
    pub fn gauged(&self, gauge: &DiagGauge) -> Self {
        Self { f: scale_field(&self.f, gauge, false), g: scale_field(&self.g, gauge, true) }
    }

    /// K(z,w) (n×n), switching to ∂_z fᵀ(z) g(w) when |z − w| is below the splitting radius.
    pub fn kernel_eval(&self, z: Complex64, w: Complex64) -> CMat {
        let g = self.g.eval(w);
        if (z - w).norm() < SPLIT_RADIUS * self.support().diameter() {
            return self.f_dz(z).transpose() * g;
        }
        self.f.eval(z).transpose() * g / (z - w)
    }

    /// Checks both constraints at every node, reporting the first offending node.
    pub fn check_constraints(&self, grid: &QuadratureGrid) -> Result<()> {
        let fscale = grid.nodes.iter().map(|&z| fro(&self.f.eval(z))).fold(0.0, f64::max);
        let gscale = grid.nodes.iter().map(|&z| fro(&self.g.eval(z))).fold(0.0, f64::max);
        let scale = fscale * gscale;
        if scale == 0.0 {
            return Ok(());
        }
        for (k, &z) in grid.nodes.iter().enumerate() {
            let g = self.g.eval(z);
            let v = fro(&(self.f.eval(z).transpose() * &g));
            if v > PAIR_TOL * scale {
                return Err(Error::Constraint { node: k, detail: format!("|fᵀg| = {v:.3e}") });
            }
            let v = fro(&(self.f_dzbar(z).transpose() * &g));
            if v > DBAR_PAIR_TOL * scale.max(1.0) {
                return Err(Error::Constraint { node: k, detail: format!("|(∂̄f)ᵀg| = {v:.3e}") });
            }
        }
        Ok(())
    }

    /// M = π f gᵀ after checking the constraints on `grid`.
    pub fn m_from_pair(&self, grid: &QuadratureGrid) -> Result<MatrixField> {
        self.check_constraints(grid)?;
        Ok(self.m_unchecked())
    }

    pub(crate) fn m_unchecked(&self) -> MatrixField {
        let pi = Complex64::new(std::f64::consts::PI, 0.0);
        let sq = Complex64::new(std::f64::consts::PI.sqrt(), 0.0);
        let (f, g) = (self.f.eval_fn(), self.g.eval_fn());
        let mut m = MatrixField::new(self.r(), self.r(), self.support().clone(), move |z| f(z) * g(z).transpose() * pi);
        let dz = match (self.f.dz_fn(), self.g.dz_fn()) {
            (Some(fd), Some(gd)) => {
                let (f, g) = (self.f.eval_fn(), self.g.eval_fn());
                Some(Arc::new(move |z| (fd(z) * g(z).transpose() + f(z) * gd(z).transpose()) * pi) as crate::dbar::MatFn)
            }
            _ => None,
        };
        let (f, g) = (self.f.eval_fn(), self.g.eval_fn());
        let factors = crate::dbar::LowRank {
            left: Arc::new(move |z| f(z) * sq),
            right: Arc::new(move |z| g(z) * sq),
            rank: self.n(),
        };
        m.set_parts(dz, None, Some(factors));
        m.flags = FieldFlags { traceless: true, nilpotent: true, schwarz_symmetric: false };
        m
    }

    /// Symmetric-weighted Nyström matrix √w_k K(z_k, z_l) √w_l.
    pub fn discretize(&self, grid: &QuadratureGrid) -> DiscreteOperator {
        let n = self.n();
        let nodes = &grid.nodes;
        let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
        let fs: Vec<CMat> = nodes.par_iter().map(|&z| self.f.eval(z)).collect();
        let gs: Vec<CMat> = nodes.par_iter().map(|&z| self.g.eval(z)).collect();
        let diag: Vec<CMat> = nodes
            .par_iter()
            .zip(&gs)
            .map(|(&z, g)| if fro(g) == 0.0 { CMat::zeros(n, n) } else { self.f_dz(z).transpose() * g })
            .collect();
        let split = SPLIT_RADIUS * self.support().diameter();
        let blocks = |k: usize, l: usize| -> CMat {
            if k == l {
                return diag[k].clone();
            }
            let d = nodes[k] - nodes[l];
            if d.norm() < split {
                self.f_dz(nodes[k]).transpose() * &gs[l]
            } else {
                fs[k].transpose() * &gs[l] / d
            }
        };
        let matrix = build_block_matrix(nodes.len(), n, &sw, blocks);
        DiscreteOperator { matrix, sqrt_weights: sw, block: n, nodes: nodes.clone() }
    }
}

fn scale_field(f: &MatrixField, gauge: &DiagGauge, inverse: bool) -> MatrixField {
    let f0 = f.eval_fn();
    let g0 = gauge.clone();
    let mut out = MatrixField::new(f.rows, f.cols, f.support.clone(), move |z| g0.scale_rows(z, &f0(z), inverse));
    if let Some(d) = f.dz_fn() {
        let (f0, g1) = (f.eval_fn(), gauge.clone());
        out = out.with_dz(move |z| g1.scale_rows_dz(z, &f0(z), &d(z), inverse));
    }
    out
}

fn build_block_matrix(nodes: usize, n: usize, sw: &[f64], block: impl Fn(usize, usize) -> CMat + Sync) -> Dense {
    let rows: Vec<Vec<Complex64>> = (0..nodes)
        .into_par_iter()
        .map(|k| {
            let mut row = vec![ZERO; n * nodes * n];
            if sw[k] == 0.0 {
                return row;
            }
            for l in 0..nodes {
                let b = block(k, l);
                let s = sw[k] * sw[l];
                for a in 0..n {
                    for c in 0..n {
                        row[a * nodes * n + l * n + c] = b[(a, c)] * s;
                    }
                }
            }
            row
        })
        .collect();
    let size = nodes * n;
    let mut out = Dense::zeros(size, size);
    for (k, row) in rows.iter().enumerate() {
        for a in 0..n {
            for col in 0..size {
                out[(k * n + a, col)] = row[a * size + col];
            }
        }
    }
    out
}

/// Nyström matrix of 𝒦 with symmetric √w weighting; index (k, α) ↦ k·n + α.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub matrix: Dense,
    pub sqrt_weights: Vec<f64>,
    /// Block size n.
    pub block: usize,
    pub nodes: Vec<Complex64>,
}

impl DiscreteOperator {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.size()).map(|i| self.matrix[(i, i)]).sum()
    }

    pub fn from_matrix(matrix: Dense) -> Self {
        let n = matrix.nrows();
        Self { matrix, sqrt_weights: vec![1.0; n], block: 1, nodes: vec![ZERO; n] }
    }
}

/// R(z,w) = fᵀ(z)Γᵀ(z)Γᵀ(w)⁻¹g(w)/(z − w), with the diagonal limit near z = w.
pub fn resolvent_eval(pair: &KernelPair, gamma: &GammaField, z: Complex64, w: Complex64) -> Result<CMat> {
    let gw = gamma.evaluate(w);
    let gw_inv_t = inverse(&gw.transpose()).ok_or_else(|| Error::Linalg(format!("Γ({w}) is singular")))?;
    let right = gw_inv_t * pair.g.eval(w);
    if (z - w).norm() < SPLIT_RADIUS * pair.support().diameter() {
        let left = pair.f_dz(z).transpose() * gamma.evaluate(z).transpose()
            + pair.f.eval(z).transpose() * gamma.dz(z)?.transpose();
        return Ok(left * right);
    }
    Ok(pair.f.eval(z).transpose() * gamma.evaluate(z).transpose() * right / (z - w))
}

/// Symmetric-weighted discretization of the resolvent kernel on the grid of `gamma`.
pub fn discrete_resolvent(pair: &KernelPair, gamma: &GammaField) -> Result<Dense> {
    let grid = &gamma.grid;
    let n = pair.n();
    let nodes = &grid.nodes;
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    let left: Vec<CMat> =
        nodes.par_iter().zip(&gamma.values).map(|(&z, g)| pair.f.eval(z).transpose() * g.transpose()).collect();
    let right: Vec<CMat> = nodes
        .par_iter()
        .zip(&gamma.values)
        .map(|(&w, g)| {
            inverse(&g.transpose())
                .map(|inv| inv * pair.g.eval(w))
                .ok_or_else(|| Error::Linalg(format!("Γ({w}) is singular")))
        })
        .collect::<Result<_>>()?;
    let dz = gamma.dz_at_nodes();
    let diag: Vec<CMat> = (0..nodes.len())
        .into_par_iter()
        .map(|k| {
            let z = nodes[k];
            (pair.f_dz(z).transpose() * gamma.values[k].transpose() + pair.f.eval(z).transpose() * dz[k].transpose())
                * &right[k]
        })
        .collect();
    let split = SPLIT_RADIUS * pair.support().diameter();
    Ok(build_block_matrix(nodes.len(), n, &sw, |k, l| {
        if k == l || (nodes[k] - nodes[l]).norm() < split {
            if k == l {
                return diag[k].clone();
            }
            let z = nodes[k];
            return (pair.f_dz(z).transpose() * gamma.values[k].transpose()
                + pair.f.eval(z).transpose() * dz[k].transpose())
                * &right[l];
        }
        &left[k] * &right[l] / (nodes[k] - nodes[l])
    }))
}

/// ‖R̂ − A − R̂A‖₂ for the discrete resolvent R̂ and operator A.
pub fn resolvent_identity_residual(pair: &KernelPair, gamma: &GammaField) -> Result<f64> {
    let a = pair.discretize(&gamma.grid).matrix;
    let r = discrete_resolvent(pair, gamma)?;
    let res = &r - &a - &r * &a;
    Ok(spectral_norm(&res))
}

/// Dense oracle A(I − A)⁻¹ for the discrete resolvent.
pub fn dense_resolvent(a: &Dense) -> Dense {
    let n = a.nrows();
    let lu = crate::linalg::DenseLu::new(&(Dense::identity(n, n) - a));
    let x = lu.solve(&Dense::identity(n, n));
    a * x
}

/// f = (1, 0)ᵀχ, g = (0, c/π)ᵀχ, so that M = c E₁₂ on the support and ∂_z f = 0.
pub fn constant_nilpotent_pair(value: Complex64, support: DomainSpec) -> KernelPair {
    let (s1, s2) = (support.clone(), support.clone());
    let one = Complex64::new(1.0, 0.0);
    let gv = value / std::f64::consts::PI;
    let f = MatrixField::new(2, 1, support.clone(), move |z| {
        CMat::from_column_slice(2, 1, &[if s1.contains(z) { one } else { ZERO }, ZERO])
    })
    .with_dz(|_| CMat::zeros(2, 1))
    .with_dzbar(|_| CMat::zeros(2, 1));
    let g = MatrixField::new(2, 1, support, move |z| {
        CMat::from_column_slice(2, 1, &[ZERO, if s2.contains(z) { gv } else { ZERO }])
    })
    .with_dz(|_| CMat::zeros(2, 1));
    KernelPair { f, g }
}

/// One monomial c·z^p·z̄^q in entry (row, col) of f or g.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolyTerm {
    pub row: usize,
    pub col: usize,
    pub p: u32,
    pub q: u32,
    pub coeff: Complex64,
}

fn poly_field(r: usize, n: usize, support: DomainSpec, terms: Vec<PolyTerm>) -> MatrixField {
    let t = Arc::new(terms);
    let inside = {
        let s = support.clone();
        move |z: Complex64| s.contains(z)
    };
    let build = move |t: Arc<Vec<PolyTerm>>, inside: Arc<dyn Fn(Complex64) -> bool + Send + Sync>, d: u8| {
        move |z: Complex64| {
            let mut m = CMat::zeros(r, n);
            if !inside(z) {
                return m;
            }
            let zb = z.conj();
            for term in t.iter() {
                let (p, q) = (term.p as i32, term.q as i32);
                let v = match d {
                    0 => z.powi(p) * zb.powi(q),
                    1 if p > 0 => z.powi(p - 1) * zb.powi(q) * p as f64,
                    2 if q > 0 => z.powi(p) * zb.powi(q - 1) * q as f64,
                    _ => ZERO,
                };
                m[(term.row, term.col)] += term.coeff * v;
            }
            m
        }
    };
    let inside: Arc<dyn Fn(Complex64) -> bool + Send + Sync> = Arc::new(inside);
    MatrixField::new(r, n, support, build(t.clone(), inside.clone(), 0))
        .with_dz(build(t.clone(), inside.clone(), 1))
        .with_dzbar(build(t, inside, 2))
}

/// f and g given entrywise as polynomials in z and z̄, cut off by the support.
pub fn polynomial_pair(
    r: usize,
    n: usize,
    support: DomainSpec,
    f: Vec<PolyTerm>,
    g: Vec<PolyTerm>,
) -> Result<KernelPair> {
    for t in f.iter().chain(&g) {
        if t.row >= r || t.col >= n {
            return Err(Error::Argument(format!("term at ({}, {}) lies outside {r}×{n}", t.row, t.col)));
        }
    }
    Ok(KernelPair { f: poly_field(r, n, support.clone(), f), g: poly_field(r, n, support, g) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbar::solve_gamma;
    use crate::geometry::{build_grid, Ellipse};
    use crate::linalg::c;

    fn chi(e: Ellipse) -> impl Fn(Complex64) -> f64 + Clone {
        move |z| if e.contains(z) { 1.0 } else { 0.0 }
    }

    /// f = (1, p)ᵀχ, g = λ(−p, 1)ᵀχ on a disk, with p(z) = z + a z².
    fn graph_pair(lambda: f64, a: f64) -> KernelPair {
        let e = Ellipse::disk(c(0.0, 0.0), 1.0);
        let x = chi(e);
        let (x1, x2, x3) = (x.clone(), x.clone(), x.clone());
        let support = DomainSpec::disk(c(0.0, 0.0), 1.0);
        let f = MatrixField::new(2, 1, support.clone(), move |z| {
            CMat::from_column_slice(2, 1, &[c(1.0, 0.0), z + a * z * z]) * c(x1(z), 0.0)
        })
        .with_dz(move |z| CMat::from_column_slice(2, 1, &[ZERO, 1.0 + 2.0 * a * z]) * c(x2(z), 0.0))
        .with_dzbar(|_| CMat::zeros(2, 1));
        let g = MatrixField::new(2, 1, support, move |z| {
            CMat::from_column_slice(2, 1, &[-(z + a * z * z), c(1.0, 0.0)]) * c(lambda * x3(z), 0.0)
        });
        KernelPair::new(f, g).unwrap()
    }

    #[test]
    fn kernel_diagonal_and_off_diagonal() {
        let p = graph_pair(0.2, 0.3);
        let pz = |z: Complex64| z + 0.3 * z * z;
        let (z, w) = (c(0.3, 0.1), c(-0.2, 0.4));
        let k = p.kernel_eval(z, w)[(0, 0)];
        assert!((k - 0.2 * (pz(z) - pz(w)) / (z - w)).norm() < 1e-14);
        let kd = p.kernel_eval(z, z)[(0, 0)];
        assert!((kd - 0.2 * (1.0 + 0.6 * z)).norm() < 1e-14);
        assert_eq!(p.kernel_eval(z, c(2.0, 0.0))[(0, 0)], ZERO);
    }

    #[test]
    fn induced_field_is_nilpotent_and_traceless() {
        let p = graph_pair(0.2, 0.3);
        let grid = build_grid(p.support(), 6, 12).unwrap();
        let m = p.m_from_pair(&grid).unwrap();
        m.check_flags(&grid).unwrap();
        let z = c(0.1, 0.2);
        let mz = m.eval(z);
        assert!(crate::linalg::trace(&mz).norm() < 1e-15);
        assert!(fro(&(&mz * &mz)) < 1e-15);
    }

    #[test]
    fn constraint_violation_names_node() {
        let support = DomainSpec::disk(c(0.0, 0.0), 1.0);
        let one = |_: Complex64| CMat::from_column_slice(2, 1, &[c(1.0, 0.0), ZERO]);
        let f = MatrixField::new(2, 1, support.clone(), one);
        let g = MatrixField::new(2, 1, support, one);
        let p = KernelPair::new(f, g).unwrap();
        let grid = build_grid(p.support(), 3, 6).unwrap();
        assert!(matches!(p.m_from_pair(&grid), Err(Error::Constraint { node: 0, .. })));
    }

    #[test]
    fn zero_pair_discretizes_to_zero() {
        let p = KernelPair::zero(2, 1, DomainSpec::disk(c(0.0, 0.0), 1.0));
        let grid = build_grid(p.support(), 4, 8).unwrap();
        let a = p.discretize(&grid);
        assert_eq!(a.matrix.norm_l2(), 0.0);
        let g = solve_gamma(&grid, &p.m_from_pair(&grid).unwrap()).unwrap();
        assert!(resolvent_identity_residual(&p, &g).unwrap() < 1e-15);
    }

    #[test]
    fn discrete_trace_matches_diagonal_quadrature() {
        let p = graph_pair(0.2, 0.3);
        let grid = build_grid(p.support(), 6, 12).unwrap();
        let a = p.discretize(&grid);
        let direct = grid.integrate(|z| p.kernel_eval(z, z)[(0, 0)]);
        assert!((a.trace() - direct).norm() < 1e-12);
    }

    #[test]
    fn resolvent_agrees_with_dense_inverse() {
        let p = graph_pair(0.3, 0.25);
        let grid = build_grid(p.support(), 10, 20).unwrap();
        let g = solve_gamma(&grid, &p.m_from_pair(&grid).unwrap()).unwrap();
        let res = resolvent_identity_residual(&p, &g).unwrap();
        assert!(res < 1e-8, "residual {res}");
        let a = p.discretize(&grid).matrix;
        let oracle = dense_resolvent(&a);
        let r = discrete_resolvent(&p, &g).unwrap();
        assert!(spectral_norm(&(&r - &oracle)) < 1e-8);
        let z = c(0.2, 0.1);
        let w = c(-0.3, 0.2);
        let direct = resolvent_eval(&p, &g, z, w).unwrap();
        assert!(direct.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn small_pair_resolvent_is_neumann_series() {
        let base = graph_pair(1.0, 0.25);
        let grid = build_grid(base.support(), 8, 16).unwrap();
        let mut last = f64::INFINITY;
        for eps in [1e-2, 1e-3] {
            let p = base.scaled(c(eps, 0.0));
            let g = solve_gamma(&grid, &p.m_from_pair(&grid).unwrap()).unwrap();
            let a = p.discretize(&grid).matrix;
            let r = discrete_resolvent(&p, &g).unwrap();
            let err = spectral_norm(&(&r - &a - &a * &a));
            assert!(err < 50.0 * eps.powi(3), "eps {eps}: {err}");
            assert!(err < last);
            last = err;
        }
    }

    #[test]
    fn builtin_pairs_induce_expected_fields() {
        let d = DomainSpec::disk(c(0.0, 0.0), 1.0);
        let grid = build_grid(&d, 4, 8).unwrap();
        let p = constant_nilpotent_pair(c(0.3, 0.1), d.clone());
        let m = p.m_from_pair(&grid).unwrap();
        assert!((m.eval(c(0.2, 0.1))[(0, 1)] - c(0.3, 0.1)).norm() < 1e-15);
        assert_eq!(crate::determinants::trace_k(&grid, &p), ZERO);
        // f = (1, z)ᵀ, g = z̄(−z, 1)ᵀ
        let one = c(1.0, 0.0);
        let f = vec![
            PolyTerm { row: 0, col: 0, p: 0, q: 0, coeff: one },
            PolyTerm { row: 1, col: 0, p: 1, q: 0, coeff: one },
        ];
        let g = vec![
            PolyTerm { row: 0, col: 0, p: 1, q: 1, coeff: -one },
            PolyTerm { row: 1, col: 0, p: 0, q: 1, coeff: one },
        ];
        let p = polynomial_pair(2, 1, d, f, g).unwrap();
        p.check_constraints(&grid).unwrap();
        let z = c(0.3, -0.4);
        assert!((p.g.dzbar(z).unwrap()[(0, 0)] + z).norm() < 1e-15);
        assert!((p.kernel_eval(z, c(0.1, 0.2))[(0, 0)] - c(0.1, -0.2)).norm() < 1e-15);
    }
}
