use num_complex::Complex64;
use std::f64::consts::PI;

use super::{schwarz_standard, DomainSpec};
use crate::error::{Error, Result};
use crate::quadrature::gauss_chebyshev_second;

/// Quadrature for ∫ h(z) dz along an oriented curve.
#[derive(Clone, Debug, Default)]
pub struct ContourGrid {
    pub nodes: Vec<Complex64>,
    /// Complex weights absorbing dz.
    pub weights: Vec<Complex64>,
    pub closed: bool,
    pub anticlockwise: bool,
    pub warnings: Vec<String>,
}

impl ContourGrid {
    pub fn integrate(&self, h: impl Fn(Complex64) -> Complex64) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(&z, &w)| h(z) * w).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Anticlockwise periodic-trapezoid rule on the boundary of every component.
pub fn boundary_contour(domain: &DomainSpec, n: usize) -> ContourGrid {
    let mut out = ContourGrid { closed: true, anticlockwise: true, ..Default::default() };
    if n < 16 {
        out.warnings.push(format!("boundary contour with n = {n} < 16 points is under-resolved"));
    }
    let n = n.max(1);
    let h = 2.0 * PI / n as f64;
    for e in domain.components() {
        let phase = Complex64::new(e.rotation.cos(), e.rotation.sin());
        for k in 0..n {
            let th = h * k as f64;
            out.nodes.push(e.point(1.0, th));
            out.weights.push(phase * Complex64::new(-e.a * th.sin(), e.b * th.cos()) * h);
        }
    }
    out
}

/// Anticlockwise circle |z − center| = radius with n trapezoid points.
pub fn circle_contour(center: Complex64, radius: f64, n: usize) -> ContourGrid {
    let h = 2.0 * PI / n as f64;
    let (nodes, weights) = (0..n)
        .map(|k| {
            let e = Complex64::from_polar(1.0, h * k as f64);
            (center + radius * e, Complex64::new(0.0, radius * h) * e)
        })
        .unzip();
    ContourGrid { nodes, weights, closed: true, anticlockwise: true, warnings: Vec::new() }
}

/// Schwarz function of the centered, axis-aligned ellipse with a > b > 0.
pub fn schwarz_ellipse(a: f64, b: f64, z: Complex64) -> Result<Complex64> {
    if !(a > b && b > 0.0) {
        return Err(Error::Argument(format!("schwarz_ellipse needs a > b > 0, got a={a}, b={b}")));
    }
    let c = (a * a - b * b).sqrt();
    if z.im.abs() <= 1e-14 * a && z.re.abs() < c {
        return Err(Error::Argument(format!("{z} lies on the focal segment (branch cut)")));
    }
    Ok(schwarz_standard(a, b, z))
}

/// Focal segment [−c, c] of a centered ellipse carrying the jump of its Schwarz function.
#[derive(Clone, Debug)]
pub struct MotherBody {
    /// Nodes on [−c, c] with real dx weights; ∫ h ΔS dx ≈ Σ w_k h(x_k) ΔS_k.
    pub contour: ContourGrid,
    /// ΔS = S₋ − S₊ at the nodes (limits from below minus above).
    pub jump: Vec<Complex64>,
    pub focal: f64,
}

impl MotherBody {
    /// Σ w_k h(x_k) ΔS_k, equal to ∮_{∂D} h S dw for h analytic in the ellipse.
    pub fn integrate(&self, h: impl Fn(Complex64) -> Complex64) -> Complex64 {
        self.contour.nodes.iter().zip(&self.contour.weights).zip(&self.jump).map(|((&x, &w), &j)| h(x) * w * j).sum()
    }
}

/// Chebyshev-clustered sampling of the mother-body of a centered ellipse.
pub fn mother_body(a: f64, b: f64, n: usize) -> Result<MotherBody> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Argument("semi-axes must be positive".into()));
    }
    if (a - b).abs() <= 1e-14 * a {
        return Err(Error::Argument("circle: the mother-body degenerates to a point".into()));
    }
    if a < b {
        return Err(Error::Argument("mother_body expects a > b (rotate the frame otherwise)".into()));
    }
    let c = (a * a - b * b).sqrt();
    let (y, w) = gauss_chebyshev_second(n);
    let mut contour = ContourGrid { closed: false, anticlockwise: true, ..Default::default() };
    let mut jump = Vec::with_capacity(n);
    for (&yk, &wk) in y.iter().zip(&w) {
        let x = c * yk;
        let root = (c * c - x * x).sqrt();
        contour.nodes.push(Complex64::new(x, 0.0));
        contour.weights.push(Complex64::new(c * c * wk / root, 0.0));
        jump.push(Complex64::new(0.0, 4.0 * a * b / (c * c) * root));
    }
    Ok(MotherBody { contour, jump, focal: c })
}

/// Jump of the standard Schwarz function computed from one-sided limits.
#[cfg(test)]
pub(crate) fn schwarz_jump_numeric(a: f64, b: f64, x: f64, eps: f64) -> Complex64 {
    let c = (a * a - b * b).sqrt();
    let below = super::focal_root(Complex64::new(x, -eps), c);
    let above = super::focal_root(Complex64::new(x, eps), c);
    -2.0 * a * b * (below - above) / (c * c)
}
