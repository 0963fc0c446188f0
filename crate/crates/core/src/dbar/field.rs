use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Ellipse, QuadratureGrid};
use crate::linalg::{fro, trace, CMat};

/// A complex-matrix-valued function of z.
pub type MatFn = Arc<dyn Fn(Complex64) -> CMat + Send + Sync>;
/// A pair of diagonal entries as a function of z.
pub type DiagFn = Arc<dyn Fn(Complex64) -> [Complex64; 2] + Send + Sync>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FieldFlags {
    pub traceless: bool,
    pub nilpotent: bool,
    pub schwarz_symmetric: bool,
}

/// Factorization M = U·Vᵀ with U, V of size r×q.
#[derive(Clone)]
pub struct LowRank {
    pub left: MatFn,
    pub right: MatFn,
    pub rank: usize,
}

/// Diagonal gauge D(z) = diag(d₁, d₂) with its z-derivative, acting by M ↦ D M D⁻¹.
#[derive(Clone)]
pub struct DiagGauge {
    pub d: DiagFn,
    pub dz: DiagFn,
}

impl DiagGauge {
    fn apply(&self, z: Complex64, m: &CMat) -> CMat {
        let d = (self.d)(z);
        CMat::from_fn(m.nrows(), m.ncols(), |a, b| d[a] * m[(a, b)] / d[b])
    }

    fn apply_dz(&self, z: Complex64, m: &CMat, mz: &CMat) -> CMat {
        let d = (self.d)(z);
        let dd = (self.dz)(z);
        CMat::from_fn(m.nrows(), m.ncols(), |a, b| {
            (dd[a] * m[(a, b)] + d[a] * mz[(a, b)]) / d[b] - d[a] * m[(a, b)] * dd[b] / (d[b] * d[b])
        })
    }

    /// Rows scaled by d (`inverse` false) or 1/d (`inverse` true).
    pub(crate) fn scale_rows(&self, z: Complex64, m: &CMat, inverse: bool) -> CMat {
        let d = (self.d)(z);
        CMat::from_fn(m.nrows(), m.ncols(), |a, b| if inverse { m[(a, b)] / d[a] } else { m[(a, b)] * d[a] })
    }

    /// ∂_z of the row-scaled matrix given the matrix and its derivative.
    pub(crate) fn scale_rows_dz(&self, z: Complex64, m: &CMat, mz: &CMat, inverse: bool) -> CMat {
        let d = (self.d)(z);
        let dd = (self.dz)(z);
        CMat::from_fn(m.nrows(), m.ncols(), |a, b| {
            if inverse {
                mz[(a, b)] / d[a] - m[(a, b)] * dd[a] / (d[a] * d[a])
            } else {
                mz[(a, b)] * d[a] + m[(a, b)] * dd[a]
            }
        })
    }
}

/// A compactly supported matrix field with optional analytic derivatives.
#[derive(Clone)]
pub struct MatrixField {
    pub rows: usize,
    pub cols: usize,
    eval: MatFn,
    dz: Option<MatFn>,
    dzbar: Option<MatFn>,
    pub support: DomainSpec,
    pub flags: FieldFlags,
    factors: Option<LowRank>,
}

impl fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixField")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("support", &self.support)
            .field("flags", &self.flags)
            .field("factored", &self.factors.is_some())
            .finish()
    }
}

impl MatrixField {
    pub fn new(
        rows: usize,
        cols: usize,
        support: DomainSpec,
        eval: impl Fn(Complex64) -> CMat + Send + Sync + 'static,
    ) -> Self {
        Self {
            rows,
            cols,
            eval: Arc::new(eval),
            dz: None,
            dzbar: None,
            support,
            flags: FieldFlags::default(),
            factors: None,
        }
    }

    pub fn zero(r: usize, support: DomainSpec) -> Self {
        let z = CMat::zeros(r, r);
        let dz = z.clone();
        let mut f = Self::new(r, r, support, move |_| z.clone()).with_dz(move |_| dz.clone());
        f.flags = FieldFlags { traceless: true, nilpotent: true, schwarz_symmetric: true };
        f
    }

    /// c·E₁₂ on a single ellipse, zero elsewhere.
    pub fn constant_e12(value: Complex64, shape: Ellipse) -> Self {
        let support = if shape.is_circle() {
            DomainSpec::disk(shape.center, shape.a)
        } else {
            DomainSpec::ellipse(shape.center, shape.a, shape.b, shape.rotation)
        };
        let m = move |z: Complex64| {
            let mut out = CMat::zeros(2, 2);
            if shape.contains(z) {
                out[(0, 1)] = value;
            }
            out
        };
        let u = move |z: Complex64| {
            let mut out = CMat::zeros(2, 1);
            if shape.contains(z) {
                out[(0, 0)] = value;
            }
            out
        };
        let v = move |z: Complex64| {
            let mut out = CMat::zeros(2, 1);
            if shape.contains(z) {
                out[(1, 0)] = Complex64::new(1.0, 0.0);
            }
            out
        };
        let mut f = Self::new(2, 2, support, m).with_dz(|_| CMat::zeros(2, 2)).with_factors(u, v, 1);
        f.flags = FieldFlags { traceless: true, nilpotent: true, schwarz_symmetric: false };
        f
    }

    pub fn with_dz(mut self, f: impl Fn(Complex64) -> CMat + Send + Sync + 'static) -> Self {
        self.dz = Some(Arc::new(f));
        self
    }

    pub fn with_dzbar(mut self, f: impl Fn(Complex64) -> CMat + Send + Sync + 'static) -> Self {
        self.dzbar = Some(Arc::new(f));
        self
    }

    pub fn with_flags(mut self, flags: FieldFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn with_factors(
        mut self,
        left: impl Fn(Complex64) -> CMat + Send + Sync + 'static,
        right: impl Fn(Complex64) -> CMat + Send + Sync + 'static,
        rank: usize,
    ) -> Self {
        self.factors = Some(LowRank { left: Arc::new(left), right: Arc::new(right), rank });
        self
    }

    pub(crate) fn set_parts(&mut self, dz: Option<MatFn>, dzbar: Option<MatFn>, factors: Option<LowRank>) {
        self.dz = dz;
        self.dzbar = dzbar;
        self.factors = factors;
    }

    pub fn eval(&self, z: Complex64) -> CMat {
        (self.eval)(z)
    }

    pub fn dz(&self, z: Complex64) -> Option<CMat> {
        self.dz.as_ref().map(|f| f(z))
    }

    pub fn dzbar(&self, z: Complex64) -> Option<CMat> {
        self.dzbar.as_ref().map(|f| f(z))
    }

    pub fn has_dz(&self) -> bool {
        self.dz.is_some()
    }

    pub fn factors(&self) -> Option<&LowRank> {
        self.factors.as_ref()
    }

    pub(crate) fn eval_fn(&self) -> MatFn {
        self.eval.clone()
    }

    pub(crate) fn dz_fn(&self) -> Option<MatFn> {
        self.dz.clone()
    }

    pub(crate) fn dzbar_fn(&self) -> Option<MatFn> {
        self.dzbar.clone()
    }

    /// M ↦ D M D⁻¹ for a diagonal gauge; factors transform as U ↦ DU, V ↦ D⁻¹V.
    pub fn gauged(&self, gauge: &DiagGauge) -> Self {
        let m = self.eval.clone();
        let g1 = gauge.clone();
        let mut out = Self::new(self.rows, self.cols, self.support.clone(), move |z| g1.apply(z, &m(z)));
        out.flags = self.flags;
        out.flags.schwarz_symmetric = false;
        if let Some(dz) = self.dz.clone() {
            let m = self.eval.clone();
            let g2 = gauge.clone();
            out.dz = Some(Arc::new(move |z| g2.apply_dz(z, &m(z), &dz(z))));
        }
        if let Some(dzb) = self.dzbar.clone() {
            let g3 = gauge.clone();
            out.dzbar = Some(Arc::new(move |z| g3.apply(z, &dzb(z))));
        }
        if let Some(f) = &self.factors {
            let (l, r) = (f.left.clone(), f.right.clone());
            let (ga, gb) = (gauge.clone(), gauge.clone());
            out.factors = Some(LowRank {
                left: Arc::new(move |z| ga.scale_rows(z, &l(z), false)),
                right: Arc::new(move |z| gb.scale_rows(z, &r(z), true)),
                rank: f.rank,
            });
        }
        out
    }

    /// Checks the declared flags at every node.
    pub fn check_flags(&self, grid: &QuadratureGrid) -> Result<()> {
        for (k, &z) in grid.nodes.iter().enumerate() {
            let m = self.eval(z);
            let nm = fro(&m);
            if self.flags.traceless && trace(&m).norm() > 1e-12 * nm.max(f64::MIN_POSITIVE) && nm > 0.0 {
                return Err(Error::Constraint { node: k, detail: format!("trace {:.3e}", trace(&m).norm()) });
            }
            if self.flags.nilpotent && self.rows == self.cols && nm > 0.0 {
                let sq = fro(&(&m * &m));
                if sq > 1e-12 * nm * nm {
                    return Err(Error::Constraint { node: k, detail: format!("|M²| = {sq:.3e}") });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;
    use crate::linalg::c;

    #[test]
    fn constant_e12_is_supported_and_nilpotent() {
        let f = MatrixField::constant_e12(c(0.3, 0.0), Ellipse::disk(c(0.0, 0.0), 1.0));
        assert_eq!(f.eval(c(0.2, 0.1))[(0, 1)], c(0.3, 0.0));
        assert_eq!(fro(&f.eval(c(2.0, 0.0))), 0.0);
        let grid = build_grid(&f.support, 4, 8).unwrap();
        f.check_flags(&grid).unwrap();
        let lr = f.factors().unwrap();
        let z = c(0.1, 0.2);
        let m = (lr.left)(z) * (lr.right)(z).transpose();
        assert!(fro(&(m - f.eval(z))) < 1e-15);
    }

    #[test]
    fn gauge_conjugates_entries_and_factors() {
        let f = MatrixField::constant_e12(c(0.3, 0.0), Ellipse::disk(c(0.0, 0.0), 1.0));
        let gauge = DiagGauge {
            d: Arc::new(|z: Complex64| [1.0 - z / 3.0, c(1.0, 0.0)]),
            dz: Arc::new(|_| [c(-1.0 / 3.0, 0.0), c(0.0, 0.0)]),
        };
        let g = f.gauged(&gauge);
        let z = c(0.4, -0.3);
        assert!((g.eval(z)[(0, 1)] - 0.3 * (1.0 - z / 3.0)).norm() < 1e-15);
        let lr = g.factors().unwrap();
        let m = (lr.left)(z) * (lr.right)(z).transpose();
        assert!(fro(&(m - g.eval(z))) < 1e-15);
        let h = 1e-6;
        let fd = (g.eval(z + h)[(0, 1)] - g.eval(z - h)[(0, 1)]) / (2.0 * h);
        assert!((g.dz(z).unwrap()[(0, 1)] - fd).norm() < 1e-9);
    }

    #[test]
    fn flag_check_reports_offending_node() {
        let bad = MatrixField::new(2, 2, DomainSpec::disk(c(0.0, 0.0), 1.0), |_| CMat::identity(2, 2))
            .with_flags(FieldFlags { traceless: true, ..Default::default() });
        let grid = build_grid(&bad.support, 2, 4).unwrap();
        assert!(matches!(bad.check_flags(&grid), Err(Error::Constraint { node: 0, .. })));
    }
}
