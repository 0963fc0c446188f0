//! Planar domains (disks, ellipses, unions, conjugate-closed pairs), their
//! area quadrature, boundary contours and Schwarz functions.

mod contour;
mod grid;

pub use contour::{boundary_contour, circle_contour, mother_body, schwarz_ellipse, ContourGrid, MotherBody};
pub use grid::{build_grid, GridComponent, QuadratureGrid};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A (possibly rotated and translated) ellipse; a disk when `a == b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub center: Complex64,
    pub a: f64,
    pub b: f64,
    pub rotation: f64,
}

impl Ellipse {
    pub fn disk(center: Complex64, radius: f64) -> Self {
        Self { center, a: radius, b: radius, rotation: 0.0 }
    }

    pub fn new(center: Complex64, a: f64, b: f64, rotation: f64) -> Self {
        Self { center, a, b, rotation }
    }

    pub fn is_circle(&self) -> bool {
        (self.a - self.b).abs() <= 1e-14 * self.a.max(self.b)
    }

    pub fn area(&self) -> f64 {
        PI * self.a * self.b
    }

    fn phase(&self) -> Complex64 {
        Complex64::new(self.rotation.cos(), self.rotation.sin())
    }

    /// Point at elliptic-polar coordinates (ρ, θ).
    pub fn point(&self, rho: f64, theta: f64) -> Complex64 {
        self.center + self.phase() * Complex64::new(self.a * rho * theta.cos(), self.b * rho * theta.sin())
    }

    /// Coordinates in the frame where the ellipse is axis-aligned and centered.
    pub fn to_local(&self, z: Complex64) -> Complex64 {
        self.phase().conj() * (z - self.center)
    }

    /// (x/a)² + (y/b)² in local coordinates: < 1 inside, 1 on the boundary.
    pub fn level(&self, z: Complex64) -> f64 {
        let u = self.to_local(z);
        (u.re / self.a).powi(2) + (u.im / self.b).powi(2)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.level(z) < 1.0
    }

    pub fn mirror(&self) -> Self {
        Self { center: self.center.conj(), a: self.a, b: self.b, rotation: -self.rotation }
    }

    pub fn max_radius(&self) -> f64 {
        self.a.max(self.b)
    }

    /// Half-height of the bounding box.
    pub fn y_extent(&self) -> f64 {
        let (s, c) = self.rotation.sin_cos();
        (self.a * self.a * s * s + self.b * self.b * c * c).sqrt()
    }

    /// The same ellipse with semi-axes ordered so that a ≥ b.
    fn standard(&self) -> (f64, f64, f64) {
        if self.a >= self.b {
            (self.a, self.b, self.rotation)
        } else {
            (self.b, self.a, self.rotation + PI / 2.0)
        }
    }

    /// (1/π)∫∫_E dA(w)/(z − w).
    pub fn cauchy_indicator(&self, z: Complex64) -> Complex64 {
        if self.is_circle() {
            let d = z - self.center;
            return if d.norm() < self.a { d.conj() } else { self.a * self.a / d };
        }
        let (a, b, rot) = self.standard();
        let e = Complex64::new(rot.cos(), rot.sin());
        let u = e.conj() * (z - self.center);
        let inside = (u.re / a).powi(2) + (u.im / b).powi(2) < 1.0;
        let val = if inside {
            u.conj() - (a - b) / (a + b) * u
        } else {
            // u − r = c²/(u + r) avoids cancellation when c ≪ |u|
            2.0 * a * b / (u + focal_root(u, (a * a - b * b).sqrt()))
        };
        e.conj() * val
    }

    /// ∂_z of [`Ellipse::cauchy_indicator`], the finite-part integral −(1/π)∫∫ dA/(w − z)².
    pub fn cauchy_indicator_dz(&self, z: Complex64) -> Complex64 {
        if self.is_circle() {
            let d = z - self.center;
            return if d.norm() < self.a { Complex64::new(0.0, 0.0) } else { -self.a * self.a / (d * d) };
        }
        let (a, b, rot) = self.standard();
        let e = Complex64::new(rot.cos(), rot.sin());
        let u = e.conj() * (z - self.center);
        let inside = (u.re / a).powi(2) + (u.im / b).powi(2) < 1.0;
        let val = if inside {
            Complex64::new(-(a - b) / (a + b), 0.0)
        } else {
            let r = focal_root(u, (a * a - b * b).sqrt());
            -2.0 * a * b / (r * (u + r))
        };
        e.conj() * e.conj() * val
    }

    /// Schwarz function: analytic near the boundary with S(z) = z̄ on it.
    pub fn schwarz(&self, z: Complex64) -> Complex64 {
        if self.is_circle() {
            return self.center.conj() + self.a * self.a / (z - self.center);
        }
        let (a, b, rot) = self.standard();
        let e = Complex64::new(rot.cos(), rot.sin());
        let u = e.conj() * (z - self.center);
        self.center.conj() + e.conj() * schwarz_standard(a, b, u)
    }
}

/// √(u − c)·√(u + c) with principal roots: cut on [−c, c], ~ u at infinity.
pub(crate) fn focal_root(u: Complex64, c: f64) -> Complex64 {
    (u - c).sqrt() * (u + c).sqrt()
}

pub(crate) fn schwarz_standard(a: f64, b: f64, u: Complex64) -> Complex64 {
    // ((a² + b²)u − 2ab·r)/c² rewritten without the cancellation for nearly circular shapes
    (a - b) / (a + b) * u + 2.0 * a * b / (u + focal_root(u, (a * a - b * b).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Disk,
    Ellipse,
    UnionOfTwo,
}

/// A compact support: one or two ellipses, optionally paired with their mirror images.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub parts: Vec<Ellipse>,
    pub conjugate_closed: bool,
}

impl DomainSpec {
    pub fn disk(center: Complex64, radius: f64) -> Self {
        Self { kind: DomainKind::Disk, parts: vec![Ellipse::disk(center, radius)], conjugate_closed: false }
    }

    pub fn ellipse(center: Complex64, a: f64, b: f64, rotation: f64) -> Self {
        Self { kind: DomainKind::Ellipse, parts: vec![Ellipse::new(center, a, b, rotation)], conjugate_closed: false }
    }

    pub fn union_of_two(first: Ellipse, second: Ellipse) -> Self {
        Self { kind: DomainKind::UnionOfTwo, parts: vec![first, second], conjugate_closed: false }
    }

    pub fn with_conjugate(mut self) -> Self {
        self.conjugate_closed = true;
        self
    }

    /// All components, mirrors appended after the base parts.
    pub fn components(&self) -> Vec<Ellipse> {
        let mut out = self.parts.clone();
        if self.conjugate_closed {
            out.extend(self.parts.iter().map(Ellipse::mirror));
        }
        out
    }

    /// The domain restricted to its base parts (no mirrors).
    pub fn base(&self) -> DomainSpec {
        Self { kind: self.kind, parts: self.parts.clone(), conjugate_closed: false }
    }

    /// The mirror image D̄ alone.
    pub fn mirrored(&self) -> DomainSpec {
        Self { kind: self.kind, parts: self.parts.iter().map(Ellipse::mirror).collect(), conjugate_closed: false }
    }

    pub fn validate(&self) -> Result<()> {
        let expected = match self.kind {
            DomainKind::Disk | DomainKind::Ellipse => 1,
            DomainKind::UnionOfTwo => 2,
        };
        if self.parts.len() != expected {
            return Err(Error::Domain(format!(
                "{:?} needs {expected} component(s), got {}",
                self.kind,
                self.parts.len()
            )));
        }
        for p in &self.parts {
            if !(p.a > 0.0 && p.b > 0.0) || !p.a.is_finite() || !p.b.is_finite() {
                return Err(Error::Domain(format!("degenerate semi-axes a={}, b={}", p.a, p.b)));
            }
            if !p.center.is_finite() || !p.rotation.is_finite() {
                return Err(Error::Domain("non-finite center or rotation".into()));
            }
            if self.kind == DomainKind::Disk && !p.is_circle() {
                return Err(Error::Domain("disk requires a == b".into()));
            }
            if self.conjugate_closed && p.center.im - p.y_extent() <= 0.0 {
                return Err(Error::Domain(format!(
                    "conjugate-closed domain must lie strictly above the real axis (lowest point {:.3e})",
                    p.center.im - p.y_extent()
                )));
            }
        }
        let comps = self.components();
        for i in 0..comps.len() {
            for j in (i + 1)..comps.len() {
                if !separated(&comps[i], &comps[j]) {
                    return Err(Error::Domain(format!("components {i} and {j} overlap or touch")));
                }
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.components().iter().map(Ellipse::area).sum()
    }

    /// Index of the component containing z, if any.
    pub fn component_of(&self, z: Complex64) -> Option<usize> {
        self.components().iter().position(|e| e.contains(z))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.component_of(z).is_some()
    }

    /// Smallest level-set value over components (≤ 1 means on or inside the support).
    pub fn min_level(&self, z: Complex64) -> f64 {
        self.components().iter().map(|e| e.level(z)).fold(f64::INFINITY, f64::min)
    }

    /// Upper bound on the diameter of the support.
    pub fn diameter(&self) -> f64 {
        let comps = self.components();
        let mut d: f64 = 0.0;
        for p in &comps {
            for q in &comps {
                d = d.max((p.center - q.center).norm() + p.max_radius() + q.max_radius());
            }
        }
        d
    }

    /// Upper bound on |z| over the support.
    pub fn max_modulus(&self) -> f64 {
        self.components().iter().map(|e| e.center.norm() + e.max_radius()).fold(0.0, f64::max)
    }

    /// Schwarz function of the component whose boundary is nearest to z.
    pub fn schwarz(&self, component: usize, z: Complex64) -> Complex64 {
        self.components()[component].schwarz(z)
    }
}

fn separated(p: &Ellipse, q: &Ellipse) -> bool {
    let gap = (p.center - q.center).norm() - p.max_radius() - q.max_radius();
    if gap > 0.0 {
        return true;
    }
    if p.contains(q.center) || q.contains(p.center) {
        return false;
    }
    let n = 2048;
    let touches = |x: &Ellipse, y: &Ellipse| {
        (0..n).any(|k| {
            let th = 2.0 * PI * k as f64 / n as f64;
            y.level(x.point(1.0, th)) <= 1.0 + 1e-9
        })
    };
    !(touches(p, q) || touches(q, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn validation_rejects_bad_domains() {
        assert!(DomainSpec::ellipse(c(0.0, 0.0), 0.0, 1.0, 0.0).validate().is_err());
        assert!(DomainSpec::disk(c(0.0, 0.4), 0.5).with_conjugate().validate().is_err());
        assert!(DomainSpec::disk(c(0.0, 1.0), 0.5).with_conjugate().validate().is_ok());
        let u = DomainSpec::union_of_two(Ellipse::disk(c(0.0, 0.0), 1.0), Ellipse::disk(c(1.5, 0.0), 1.0));
        assert!(u.validate().is_err());
        let u = DomainSpec::union_of_two(Ellipse::disk(c(0.0, 0.0), 1.0), Ellipse::disk(c(2.5, 0.0), 1.0));
        assert!(u.validate().is_ok());
    }

    #[test]
    fn indicator_transform_is_continuous_across_the_boundary() {
        let e = Ellipse::new(c(0.3, -0.2), 2.0, 1.0, 0.4);
        for k in 0..12 {
            let th = 0.5 + k as f64;
            let inner = e.point(1.0 - 1e-9, th);
            let outer = e.point(1.0 + 1e-9, th);
            assert!((e.cauchy_indicator(inner) - e.cauchy_indicator(outer)).norm() < 1e-7);
        }
    }

    #[test]
    fn indicator_transform_decays_like_area_over_pi_z() {
        let e = Ellipse::new(c(0.0, 0.0), 2.0, 1.0, 0.0);
        let z = c(1e4, 3e3);
        let v = e.cauchy_indicator(z) * z;
        assert!((v - c(2.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn schwarz_reproduces_conjugate_on_boundary() {
        for e in [
            Ellipse::new(c(0.0, 1.0), 0.5, 0.25, 0.0),
            Ellipse::new(c(-1.0, 2.0), 0.7, 1.3, 0.9),
            Ellipse::disk(c(0.2, 0.1), 0.8),
        ] {
            for k in 0..16 {
                let z = e.point(1.0, 0.3 + 0.4 * k as f64);
                assert!((e.schwarz(z) - z.conj()).norm() < 1e-12, "{e:?}");
            }
        }
    }
}
