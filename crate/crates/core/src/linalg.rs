//! Small-matrix helpers (nalgebra) and dense factorizations (faer).

use faer::linalg::solvers::Solve;
use faer::Mat;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Small dense complex matrix used for pointwise field values.
pub type CMat = DMatrix<Complex64>;
/// Large dense complex matrix used for Nyström systems.
pub type Dense = Mat<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(r: usize) -> CMat {
    CMat::identity(r, r)
}

pub fn mat2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> CMat {
    CMat::from_row_slice(2, 2, &[a, b, c, d])
}

pub fn sigma2() -> CMat {
    mat2(ZERO, -I, I, ZERO)
}

pub fn sigma3() -> CMat {
    mat2(ONE, ZERO, ZERO, -ONE)
}

pub fn diag2(a: Complex64, d: Complex64) -> CMat {
    mat2(a, ZERO, ZERO, d)
}

pub fn fro(m: &CMat) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &CMat) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn det(m: &CMat) -> Complex64 {
    match m.nrows() {
        0 => ONE,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => m.clone().determinant(),
    }
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    if m.nrows() == 2 {
        let d = det(m);
        if d.norm() == 0.0 || !d.is_finite() {
            return None;
        }
        return Some(mat2(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / d);
    }
    m.clone().try_inverse()
}

/// Entrywise complex conjugate.
pub fn conj(m: &CMat) -> CMat {
    m.map(|v| v.conj())
}

/// σ₂ · conj(m) · σ₂ for a 2×2 matrix.
pub fn sigma2_conj(m: &CMat) -> CMat {
    let s = sigma2();
    &s * conj(m) * &s
}

/// Continuous unwrap of a logarithm against a reference value.
pub fn unwrap_log(principal: Complex64, reference: Complex64) -> Complex64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let k = ((reference.im - principal.im) / two_pi).round();
    Complex64::new(principal.re, principal.im + k * two_pi)
}

/// Partial-pivot LU with a 1-norm condition estimate.
pub struct DenseLu {
    lu: faer::linalg::solvers::PartialPivLu<Complex64>,
    norm1: f64,
    n: usize,
}

impl DenseLu {
    pub fn new(a: &Dense) -> Self {
        let n = a.nrows();
        let norm1 = (0..a.ncols()).map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
        Self { lu: a.partial_piv_lu(), norm1, n }
    }

    pub fn solve(&self, b: &Dense) -> Dense {
        self.lu.solve(b)
    }

    pub fn solve_adjoint(&self, b: &Dense) -> Dense {
        self.lu.solve_adjoint(b)
    }

    /// Hager–Higham estimate of 1/(‖A‖₁‖A⁻¹‖₁).
    pub fn rcond(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 1.0;
        }
        let diag_min = (0..n).map(|i| self.lu.U()[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        if diag_min == 0.0 || !diag_min.is_finite() {
            return 0.0;
        }
        let mut x = Dense::from_fn(n, 1, |_, _| Complex64::new(1.0 / n as f64, 0.0));
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            est = (0..n).map(|i| y[(i, 0)].norm()).sum::<f64>();
            let xi = Dense::from_fn(n, 1, |i, _| {
                let v = y[(i, 0)];
                if v.norm() > 0.0 {
                    v / v.norm()
                } else {
                    ONE
                }
            });
            let z = self.solve_adjoint(&xi);
            let (j, zmax) =
                (0..n).map(|i| (i, z[(i, 0)].norm())).fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            let ztx: f64 = (0..n).map(|i| (z[(i, 0)].conj() * x[(i, 0)]).re).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = Dense::zeros(n, 1);
            x[(j, 0)] = ONE;
        }
        if est == 0.0 || !est.is_finite() {
            return 0.0;
        }
        1.0 / (self.norm1 * est)
    }

    /// log det A on the principal branch of each pivot.
    pub fn log_det(&self) -> Complex64 {
        let mut acc = ZERO;
        for i in 0..self.n {
            acc += self.lu.U()[(i, i)].ln();
        }
        let (fwd, _) = self.lu.P().arrays();
        if permutation_is_odd(fwd) {
            acc += Complex64::new(0.0, std::f64::consts::PI);
        }
        acc
    }
}

fn permutation_is_odd(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    let mut transpositions = 0usize;
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = p[j];
            len += 1;
        }
        transpositions += len - 1;
    }
    transpositions % 2 == 1
}

pub fn eigenvalues(a: &Dense) -> Result<Vec<Complex64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    a.eigenvalues().map_err(|e| Error::Linalg(format!("eigenvalue solver failed: {e:?}")))
}

/// Largest singular value by power iteration on AᴴA.
pub fn spectral_norm(a: &Dense) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let mut v = Dense::from_fn(n, 1, |i, _| Complex64::new(1.0 + (i % 7) as f64 * 0.1, 0.01 * (i % 3) as f64));
    let mut sigma = 0.0;
    for _ in 0..200 {
        let nv = v.norm_l2();
        if nv == 0.0 {
            return 0.0;
        }
        v = v * faer::Scale(Complex64::new(1.0 / nv, 0.0));
        let av = a * &v;
        let next = av.norm_l2();
        v = a.adjoint() * &av;
        if (next - sigma).abs() <= 1e-12 * next {
            return next;
        }
        sigma = next;
    }
    sigma
}

/// Converts a small matrix into the dense type.
pub fn to_dense(m: &CMat) -> Dense {
    Dense::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_det_matches_product_with_pivoting() {
        let a = Dense::from_fn(3, 3, |i, j| c([0.0, 2.0, 1.0][(i + j) % 3], (i as f64) - (j as f64) * 0.5));
        let lu = DenseLu::new(&a);
        let small = CMat::from_fn(3, 3, |i, j| a[(i, j)]);
        let exact = small.determinant();
        let got = lu.log_det().exp();
        assert!((got - exact).norm() < 1e-12 * exact.norm().max(1.0));
    }

    #[test]
    fn rcond_flags_singular_and_accepts_identity() {
        let id = Dense::identity(5, 5);
        assert!((DenseLu::new(&id).rcond() - 1.0).abs() < 1e-12);
        let sing = Dense::from_fn(4, 4, |i, j| c((i * j) as f64, 0.0));
        assert!(DenseLu::new(&sing).rcond() < 1e-13);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = Dense::from_fn(4, 4, |i, j| if i == j { c(0.5 * i as f64, 0.0) } else { ZERO });
        assert!((spectral_norm(&a) - 1.5).abs() < 1e-9);
    }

    #[test]
    fn unwrap_follows_reference() {
        let p = Complex64::new(0.0, 3.0);
        let r = Complex64::new(0.0, -3.2);
        let u = unwrap_log(p, r);
        assert!((u.im - (3.0 - 2.0 * std::f64::consts::PI)).abs() < 1e-15);
    }
}
