//! Quadrature rows for the Cauchy transform C[φ](z) = (1/π)∫∫ φ(w)/(z − w) dA(w)
//! and its z-derivative, acting on node samples of φ.
//!
//! Disk components use product integration: φ is expanded in angular Fourier
//! modes and radial Lagrange polynomials, and each mode is integrated against
//! the kernel exactly in angle and by adapted Gauss panels in radius. Ellipse
//! components subtract the analytic transform of the indicator at the target.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{GridComponent, QuadratureGrid};
use crate::quadrature::{gauss_legendre_on, Barycentric};

/// Where a row is evaluated.
#[derive(Clone, Copy, Debug)]
pub enum Target {
    Node(usize),
    Point(Complex64),
}

const PANEL_POINTS: usize = 20;
const PANEL_RATIO: f64 = 2.0;
const MIN_RADIUS: f64 = 1e-12;

struct RadialTables {
    /// ã[n][i] = s^{-(n+1)} ∫_0^{min(s,1)} ρ^{n+1} ℓ_i dρ
    a: Vec<f64>,
    /// ã[n][i] / s
    ad: Vec<f64>,
    /// b̃[n][i] = s^n ∫_s^1 ρ^{-n} ℓ_i dρ (zero outside the disk)
    b: Vec<f64>,
    /// b̃[n][i] / s
    bd: Vec<f64>,
    /// ℓ_i(s) inside the disk
    ell: Vec<f64>,
    inside: bool,
}

struct DiskRule {
    bary: Barycentric,
    nr: usize,
    nt: usize,
    n_a: usize,
    n_b: Option<usize>,
    half_a: Option<usize>,
    half_b: Option<usize>,
    theta: Vec<f64>,
    center: Complex64,
    radius: f64,
    qa: (Vec<f64>, Vec<f64>),
    node_tables: Vec<RadialTables>,
    far: f64,
}

impl DiskRule {
    fn new(comp: &GridComponent) -> Self {
        let nr = comp.n_radial();
        let nt = comp.n_angular();
        let (n_a, n_b, half_a, half_b) = if nt % 2 == 0 {
            let m = nt / 2;
            (m, m.checked_sub(1), Some(m), m.checked_sub(1))
        } else {
            let m = (nt - 1) / 2;
            (m, m.checked_sub(1), None, None)
        };
        let qa_n = (n_a + nr) / 2 + 2;
        let mut rule = Self {
            bary: Barycentric::new(&comp.radial),
            nr,
            nt,
            n_a,
            n_b,
            half_a,
            half_b,
            theta: comp.angles.iter().map(|t| t + comp.shape.rotation).collect(),
            center: comp.shape.center,
            radius: comp.shape.a,
            qa: gauss_legendre_on(qa_n, 0.0, 1.0),
            node_tables: Vec::new(),
            far: 10f64.powf(16.0 / nt as f64).max(1.5),
        };
        rule.node_tables = comp.radial.iter().map(|&s| rule.tables(s)).collect();
        rule
    }

    fn h_a(&self, n: usize) -> f64 {
        if Some(n) == self.half_a {
            0.5
        } else {
            1.0
        }
    }

    fn h_b(&self, n: usize) -> f64 {
        if Some(n) == self.half_b {
            0.5
        } else {
            1.0
        }
    }

    fn tables(&self, s: f64) -> RadialTables {
        let nr = self.nr;
        let na = self.n_a + 1;
        let nb = self.n_b.map_or(0, |v| v + 1);
        let mut t = RadialTables {
            a: vec![0.0; na * nr],
            ad: vec![0.0; na * nr],
            b: vec![0.0; nb * nr],
            bd: vec![0.0; nb * nr],
            ell: vec![0.0; nr],
            inside: s < 1.0,
        };
        let mut ell = vec![0.0; nr];
        let (qx, qw) = &self.qa;
        if s < 1.0 {
            let s = s.max(MIN_RADIUS);
            for (&u, &w) in qx.iter().zip(qw) {
                self.bary.basis_into(s * u, &mut ell);
                let mut p = u;
                for n in 0..na {
                    let f = w * p;
                    let row = &mut t.ad[n * nr..(n + 1) * nr];
                    row.iter_mut().zip(&ell).for_each(|(r, l)| *r += f * l);
                    p *= u;
                }
            }
            for (a, ad) in t.a.iter_mut().zip(&t.ad) {
                *a = s * ad;
            }
            if nb > 0 {
                let mut lo = s;
                while lo < 1.0 {
                    let hi = (lo * PANEL_RATIO).min(1.0);
                    let (px, pw) = gauss_legendre_on(PANEL_POINTS, lo, hi);
                    for (&rho, &w) in px.iter().zip(&pw) {
                        self.bary.basis_into(rho, &mut ell);
                        let q = s / rho;
                        let mut p = 1.0;
                        for n in 0..nb {
                            let f = w * p;
                            let row = &mut t.b[n * nr..(n + 1) * nr];
                            row.iter_mut().zip(&ell).for_each(|(r, l)| *r += f * l);
                            p *= q;
                        }
                    }
                    lo = hi;
                }
                for (bd, b) in t.bd.iter_mut().zip(&t.b) {
                    *bd = b / s;
                }
            }
            self.bary.basis_into(s, &mut t.ell);
        } else {
            for (&rho, &w) in qx.iter().zip(qw) {
                self.bary.basis_into(rho, &mut ell);
                let q = rho / s;
                let mut p = q;
                for n in 0..na {
                    let f = w * p;
                    let row = &mut t.a[n * nr..(n + 1) * nr];
                    row.iter_mut().zip(&ell).for_each(|(r, l)| *r += f * l);
                    p *= q;
                }
            }
            for (ad, a) in t.ad.iter_mut().zip(&t.a) {
                *ad = a / s;
            }
        }
        t
    }

    /// Adds the value row (or derivative row) for target ζ = s e^{iα} into `out`.
    fn accumulate(&self, t: &RadialTables, alpha: f64, comp: &GridComponent, out: &mut [Complex64], derivative: bool) {
        let nr = self.nr;
        let nt = self.nt;
        let na = self.n_a + 1;
        let nb = self.n_b.map_or(0, |v| v + 1);
        let nmax = na.max(nb);
        let ea = Complex64::from_polar(1.0, -alpha);
        let ea2 = ea * ea;
        let mut pw = vec![Complex64::new(0.0, 0.0); nmax];
        let ha: Vec<f64> = (0..na).map(|n| self.h_a(n)).collect();
        let hb: Vec<f64> = (0..nb).map(|n| self.h_b(n)).collect();
        let m_half = nt / 2;
        for k in 0..nt {
            let theta = self.theta[k];
            let delta = theta - alpha;
            let e = Complex64::from_polar(1.0, delta);
            let mut p = Complex64::new(1.0, 0.0);
            for v in pw.iter_mut() {
                *v = p;
                p *= e;
            }
            let et = Complex64::from_polar(1.0, -theta);
            let local = if derivative && t.inside {
                let mut d = 1.0;
                if nt % 2 == 0 {
                    for m in 1..m_half {
                        d += 2.0 * (m as f64 * delta).cos();
                    }
                    d += (m_half as f64 * delta).cos();
                } else {
                    for m in 1..=m_half {
                        d += 2.0 * (m as f64 * delta).cos();
                    }
                }
                d / nt as f64
            } else {
                0.0
            };
            for i in 0..nr {
                let g = comp.nodes[i * nt + k];
                if derivative {
                    let mut sa = Complex64::new(0.0, 0.0);
                    for n in 0..na {
                        sa += pw[n] * (ha[n] * (n + 1) as f64 * t.ad[n * nr + i]);
                    }
                    let mut sb = Complex64::new(0.0, 0.0);
                    for n in 1..nb {
                        sb += pw[n].conj() * (hb[n] * n as f64 * t.bd[n * nr + i]);
                    }
                    let mut v = -(2.0 / nt as f64) * (ea2 * sa + et * ea * sb);
                    if t.inside {
                        v += ea2 * (t.ell[i] * local);
                    }
                    out[g] += v;
                } else {
                    let mut sa = Complex64::new(0.0, 0.0);
                    for n in 0..na {
                        sa += pw[n] * (ha[n] * t.a[n * nr + i]);
                    }
                    let mut sb = Complex64::new(0.0, 0.0);
                    for n in 0..nb {
                        sb += pw[n].conj() * (hb[n] * t.b[n * nr + i]);
                    }
                    out[g] += (2.0 * self.radius / nt as f64) * (ea * sa - et * sb);
                }
            }
        }
    }
}

/// Row builder for the Cauchy transform on a fixed grid.
pub(crate) struct CauchyRows {
    grid: Arc<QuadratureGrid>,
    disks: Vec<Option<DiskRule>>,
}

impl CauchyRows {
    pub fn new(grid: Arc<QuadratureGrid>) -> Self {
        let disks =
            grid.components.iter().map(|c| if c.shape.is_circle() { Some(DiskRule::new(c)) } else { None }).collect();
        Self { grid, disks }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    fn point(&self, target: Target) -> Complex64 {
        match target {
            Target::Node(j) => self.grid.nodes[j],
            Target::Point(z) => z,
        }
    }

    /// Row r with C[φ](target) ≈ Σ_k r_k φ_k.
    pub fn value_row(&self, target: Target) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        for ci in 0..self.grid.components.len() {
            self.component_row(ci, target, &mut out, false);
        }
        out
    }

    /// Row r with ∂_z C[φ](target) ≈ Σ_k r_k φ_k; rejects targets on a boundary.
    pub fn dz_row(&self, target: Target) -> Result<Vec<Complex64>> {
        let z = self.point(target);
        if matches!(target, Target::Point(_)) {
            for comp in &self.grid.components {
                if (comp.shape.level(z) - 1.0).abs() < 1e-12 {
                    return Err(Error::OnBoundary(z));
                }
            }
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        for ci in 0..self.grid.components.len() {
            self.component_row(ci, target, &mut out, true);
        }
        Ok(out)
    }

    fn component_row(&self, ci: usize, target: Target, out: &mut [Complex64], derivative: bool) {
        let comp = &self.grid.components[ci];
        let z = self.point(target);
        let own_node = match target {
            Target::Node(j) if self.grid.locate[j].0 == ci => Some((j, self.grid.locate[j].1)),
            _ => None,
        };
        if let Some(rule) = &self.disks[ci] {
            if let Some((_, l)) = own_node {
                let i = l / rule.nt;
                let k = l % rule.nt;
                rule.accumulate(&rule.node_tables[i], rule.theta[k], comp, out, derivative);
                return;
            }
            let zeta = (z - rule.center) / rule.radius;
            let s = zeta.norm();
            if s > rule.far {
                self.direct(comp, z, out, derivative);
                return;
            }
            let alpha = if s > 0.0 { zeta.arg() } else { 0.0 };
            let tables = rule.tables(s);
            rule.accumulate(&tables, alpha, comp, out, derivative);
            return;
        }
        let anchor = match own_node {
            Some((j, _)) => Some(j),
            None if comp.shape.contains(z) => comp
                .nodes
                .iter()
                .copied()
                .min_by(|&p, &q| (self.grid.nodes[p] - z).norm().total_cmp(&(self.grid.nodes[q] - z).norm())),
            None => None,
        };
        match anchor {
            None => self.direct(comp, z, out, derivative),
            Some(j) => {
                let mut sum = Complex64::new(0.0, 0.0);
                for &g in &comp.nodes {
                    if Some(g) == own_node.map(|v| v.0) {
                        continue;
                    }
                    let d = z - self.grid.nodes[g];
                    let v =
                        if derivative { -self.grid.weights[g] / (PI * d * d) } else { self.grid.weights[g] / (PI * d) };
                    out[g] += v;
                    sum += v;
                }
                let exact = if derivative { comp.shape.cauchy_indicator_dz(z) } else { comp.shape.cauchy_indicator(z) };
                out[j] += exact - sum;
            }
        }
    }

    fn direct(&self, comp: &GridComponent, z: Complex64, out: &mut [Complex64], derivative: bool) {
        for &g in &comp.nodes {
            let d = z - self.grid.nodes[g];
            out[g] += if derivative { -self.grid.weights[g] / (PI * d * d) } else { self.grid.weights[g] / (PI * d) };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DomainSpec};
    use crate::linalg::c;

    fn apply(row: &[Complex64], vals: &[Complex64]) -> Complex64 {
        row.iter().zip(vals).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn disk_indicator_transform_is_exact_at_nodes_and_points() {
        let center = c(0.3, 1.0);
        let r = 0.5;
        let grid = build_grid(&DomainSpec::disk(center, r), 10, 20).unwrap();
        let rows = CauchyRows::new(Arc::new(grid.clone()));
        let ones = vec![c(1.0, 0.0); grid.len()];
        for j in [0, 7, 55, grid.len() - 1] {
            let z = grid.nodes[j];
            let got = apply(&rows.value_row(Target::Node(j)), &ones);
            assert!((got - (z - center).conj()).norm() < 1e-13, "node {j}: {got}");
            let d = apply(&rows.dz_row(Target::Node(j)).unwrap(), &ones);
            assert!(d.norm() < 1e-12, "node {j}: {d}");
        }
        for z in [c(0.31, 1.02), c(0.1, 0.8), c(1.0, 1.3), c(2.0, -1.0), c(30.0, 5.0)] {
            let inside = (z - center).norm() < r;
            let exact = if inside { (z - center).conj() } else { r * r / (z - center) };
            let got = apply(&rows.value_row(Target::Point(z)), &ones);
            assert!((got - exact).norm() < 1e-13, "{z}: {got} vs {exact}");
            let dexact = if inside { c(0.0, 0.0) } else { -r * r / ((z - center) * (z - center)) };
            let d = apply(&rows.dz_row(Target::Point(z)).unwrap(), &ones);
            assert!((d - dexact).norm() < 1e-12, "{z}: {d} vs {dexact}");
        }
    }

    #[test]
    fn disk_transform_of_smooth_field_matches_fine_direct_sum() {
        let center = c(0.0, 0.0);
        let grid = build_grid(&DomainSpec::disk(center, 1.0), 14, 28).unwrap();
        let rows = CauchyRows::new(Arc::new(grid.clone()));
        let phi = |w: Complex64| (w * 1.3).exp() * (1.0 + w.conj() * w.conj() * 0.4);
        let vals: Vec<Complex64> = grid.nodes.iter().map(|&w| phi(w)).collect();
        // Exterior oracle: direct quadrature on a much finer grid.
        let fine = build_grid(&DomainSpec::disk(center, 1.0), 60, 120).unwrap();
        for z in [c(1.2, 0.3), c(-0.2, -1.5)] {
            let oracle: Complex64 =
                fine.nodes.iter().zip(&fine.weights).map(|(&w, &wt)| phi(w) * wt / (PI * (z - w))).sum();
            let got = apply(&rows.value_row(Target::Point(z)), &vals);
            assert!((got - oracle).norm() < 1e-11, "{z}: {got} vs {oracle}");
        }
        // Inside the unit disk C[w̄²] = z̄³/3: it has ∂̄ = z̄² and matches the decaying
        // exterior solution 1/(3z³) on |z| = 1.
        let psi = |w: Complex64| w.conj() * w.conj();
        let vals: Vec<Complex64> = grid.nodes.iter().map(|&w| psi(w)).collect();
        for j in [3, 100, 300] {
            let z = grid.nodes[j];
            let exact = z.conj().powi(3) / 3.0;
            let got = apply(&rows.value_row(Target::Node(j)), &vals);
            assert!((got - exact).norm() < 1e-13, "{got} vs {exact}");
        }
    }

    #[test]
    fn ellipse_indicator_transform_exact_at_nodes() {
        let grid = build_grid(&DomainSpec::ellipse(c(0.0, 1.0), 0.5, 0.25, 0.3), 8, 16).unwrap();
        let rows = CauchyRows::new(Arc::new(grid.clone()));
        let ones = vec![c(1.0, 0.0); grid.len()];
        let e = grid.components[0].shape;
        for j in [0, 40, 100] {
            let got = apply(&rows.value_row(Target::Node(j)), &ones);
            assert!((got - e.cauchy_indicator(grid.nodes[j])).norm() < 1e-12);
        }
    }

    #[test]
    fn boundary_targets_rejected_for_derivative() {
        let grid = build_grid(&DomainSpec::disk(c(0.0, 0.0), 1.0), 4, 8).unwrap();
        let rows = CauchyRows::new(Arc::new(grid.clone()));
        assert!(rows.dz_row(Target::Point(c(1.0, 0.0))).is_err());
    }
}
