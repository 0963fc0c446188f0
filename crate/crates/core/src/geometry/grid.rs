use num_complex::Complex64;
use std::f64::consts::PI;
use std::io::Write;

use super::{boundary_contour, ContourGrid, DomainSpec, Ellipse};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;

/// Polar tensor layout of one component.
#[derive(Clone, Debug)]
pub struct GridComponent {
    pub shape: Ellipse,
    /// Radial Gauss nodes in (0, 1).
    pub radial: Vec<f64>,
    /// Gauss weights on [0, 1] matching `radial`.
    pub radial_weights: Vec<f64>,
    /// Angular nodes, uniformly spaced modulo 2π.
    pub angles: Vec<f64>,
    /// Global node index of local node `i * angles.len() + k`.
    pub nodes: Vec<usize>,
    pub mirror_of: Option<usize>,
}

impl GridComponent {
    pub fn n_radial(&self) -> usize {
        self.radial.len()
    }

    pub fn n_angular(&self) -> usize {
        self.angles.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Area quadrature on a [`DomainSpec`].
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    pub nodes: Vec<Complex64>,
    pub weights: Vec<f64>,
    pub domain: DomainSpec,
    pub boundary: ContourGrid,
    pub components: Vec<GridComponent>,
    /// (component, local index) of every node.
    pub locate: Vec<(usize, usize)>,
    /// Index of the conjugate node, for conjugate-closed domains.
    pub mirror: Option<Vec<usize>>,
    pub radial_points: usize,
    pub angular_points: usize,
}

/// Tensor Gauss–Legendre (radius) × trapezoid (angle) grid.
pub fn build_grid(domain: &DomainSpec, radial_points: usize, angular_points: usize) -> Result<QuadratureGrid> {
    QuadratureGrid::build(domain, radial_points, angular_points, 0.0)
}

impl QuadratureGrid {
    /// As [`build_grid`], with the angular nodes offset by `angle_offset`.
    pub fn build(domain: &DomainSpec, radial_points: usize, angular_points: usize, angle_offset: f64) -> Result<Self> {
        if radial_points < 2 {
            return Err(Error::Argument(format!("radial_points must be >= 2, got {radial_points}")));
        }
        if angular_points < 4 {
            return Err(Error::Argument(format!("angular_points must be >= 4, got {angular_points}")));
        }
        domain.validate()?;
        let (rho, rw) = gauss_legendre_on(radial_points, 0.0, 1.0);
        let dth = 2.0 * PI / angular_points as f64;
        let base_angles: Vec<f64> = (0..angular_points).map(|k| angle_offset + dth * k as f64).collect();

        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut components = Vec::new();
        let mut locate = Vec::new();
        let per = radial_points * angular_points;

        for (ci, shape) in domain.parts.iter().enumerate() {
            let mut idx = Vec::with_capacity(per);
            for (i, (&r, &w)) in rho.iter().zip(&rw).enumerate() {
                for (k, &th) in base_angles.iter().enumerate() {
                    idx.push(nodes.len());
                    locate.push((ci, i * angular_points + k));
                    nodes.push(shape.point(r, th));
                    weights.push(shape.a * shape.b * r * w * dth);
                }
            }
            components.push(GridComponent {
                shape: *shape,
                radial: rho.clone(),
                radial_weights: rw.clone(),
                angles: base_angles.clone(),
                nodes: idx,
                mirror_of: None,
            });
        }

        let mut mirror = None;
        if domain.conjugate_closed {
            let nbase = nodes.len();
            let mut map: Vec<usize> = (0..2 * nbase).collect();
            let nparts = components.len();
            for ci in 0..nparts {
                let src = components[ci].clone();
                let mut idx = Vec::with_capacity(per);
                for (l, &g) in src.nodes.iter().enumerate() {
                    let j = nodes.len();
                    idx.push(j);
                    locate.push((nparts + ci, l));
                    nodes.push(nodes[g].conj());
                    weights.push(weights[g]);
                    map[g] = j;
                    map[j] = g;
                }
                components.push(GridComponent {
                    shape: src.shape.mirror(),
                    radial: src.radial.clone(),
                    radial_weights: src.radial_weights.clone(),
                    angles: src.angles.iter().map(|t| -t).collect(),
                    nodes: idx,
                    mirror_of: Some(ci),
                });
            }
            mirror = Some(map);
        }

        let boundary = boundary_contour(domain, (2 * angular_points).max(64));
        let grid = Self {
            nodes,
            weights,
            domain: domain.clone(),
            boundary,
            components,
            locate,
            mirror,
            radial_points,
            angular_points,
        };
        grid.check_separation()?;
        Ok(grid)
    }

    fn check_separation(&self) -> Result<()> {
        let tol = 1e-12 * self.domain.diameter();
        let n = self.nodes.len();
        for i in 0..n {
            for j in (i + 1)..n {
                if (self.nodes[i] - self.nodes[j]).norm() <= tol {
                    return Err(Error::Domain(format!("nodes {i} and {j} coincide")));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// ∫∫ h dA by the area rule.
    pub fn integrate(&self, h: impl Fn(Complex64) -> Complex64) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(&z, &w)| h(z) * w).sum()
    }

    /// The same rule with node `p` of the result taken from node `perm[p]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut inv = vec![usize::MAX; n];
        for (p, &q) in perm.iter().enumerate() {
            if q >= n || inv[q] != usize::MAX {
                return Err(Error::Argument("not a permutation".into()));
            }
            inv[q] = p;
        }
        if perm.len() != n {
            return Err(Error::Argument("permutation length mismatch".into()));
        }
        let mut out = self.clone();
        out.nodes = perm.iter().map(|&q| self.nodes[q]).collect();
        out.weights = perm.iter().map(|&q| self.weights[q]).collect();
        out.locate = perm.iter().map(|&q| self.locate[q]).collect();
        for comp in &mut out.components {
            comp.nodes.iter_mut().for_each(|g| *g = inv[*g]);
        }
        out.mirror = self.mirror.as_ref().map(|m| perm.iter().map(|&q| inv[m[q]]).collect());
        Ok(out)
    }

    /// Writes `re,im,weight` rows.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "re,im,weight")?;
        for (z, wt) in self.nodes.iter().zip(&self.weights) {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", z.re, z.im, wt)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn disk_and_ellipse_areas() {
        let g = build_grid(&DomainSpec::disk(c(0.0, 0.0), 1.0), 20, 40).unwrap();
        assert!((g.area() - PI).abs() < 1e-12 * PI);
        let g = build_grid(&DomainSpec::ellipse(c(0.0, 0.0), 2.0, 1.0, 0.0), 20, 40).unwrap();
        assert!((g.area() - 2.0 * PI).abs() < 1e-12 * 2.0 * PI);
    }

    #[test]
    fn conjugate_closed_grid_is_mirror_symmetric() {
        let g = build_grid(&DomainSpec::disk(c(0.0, 1.0), 0.5).with_conjugate(), 6, 12).unwrap();
        let m = g.mirror.as_ref().unwrap();
        for j in 0..g.len() {
            assert_eq!(g.nodes[m[j]], g.nodes[j].conj());
            assert_eq!(g.weights[m[j]], g.weights[j]);
            assert_eq!(m[m[j]], j);
        }
    }

    #[test]
    fn permutation_keeps_component_maps_consistent() {
        let g = build_grid(&DomainSpec::disk(c(0.0, 1.0), 0.5).with_conjugate(), 4, 8).unwrap();
        let n = g.len();
        let perm: Vec<usize> = (0..n).map(|p| (p * 37 + 11) % n).collect();
        let h = g.permuted(&perm).unwrap();
        for (ci, comp) in h.components.iter().enumerate() {
            let gc = &g.components[ci];
            for (l, &node) in comp.nodes.iter().enumerate() {
                assert_eq!(h.nodes[node], g.nodes[gc.nodes[l]]);
                assert_eq!(h.locate[node], (ci, l));
            }
        }
        let m = h.mirror.as_ref().unwrap();
        for j in 0..n {
            assert_eq!(h.nodes[m[j]], h.nodes[j].conj());
        }
    }

    #[test]
    fn rejects_small_resolutions() {
        let d = DomainSpec::disk(c(0.0, 0.0), 1.0);
        assert!(build_grid(&d, 1, 8).is_err());
        assert!(build_grid(&d, 4, 3).is_err());
    }
}
