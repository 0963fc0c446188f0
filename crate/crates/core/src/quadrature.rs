//! One-dimensional rules: Gauss–Legendre, Gauss–Chebyshev of the second kind,
//! and barycentric Lagrange interpolation on arbitrary nodes.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    (x.iter().map(|t| c + h * t).collect(), w.iter().map(|v| h * v).collect())
}

/// Nodes and weights for ∫_{-1}^{1} √(1−y²) h(y) dy, exact for polynomials of degree 2n−1.
pub fn gauss_chebyshev_second(n: usize) -> (Vec<f64>, Vec<f64>) {
    let np1 = (n + 1) as f64;
    (1..=n)
        .map(|k| {
            let th = k as f64 * PI / np1;
            (th.cos(), PI / np1 * th.sin().powi(2))
        })
        .unzip()
}

/// Barycentric Lagrange interpolation on a fixed node set.
#[derive(Clone, Debug)]
pub struct Barycentric {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Barycentric {
    pub fn new(nodes: &[f64]) -> Self {
        let weights = nodes
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                let prod: f64 = nodes.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &xj)| xi - xj).product();
                1.0 / prod
            })
            .collect();
        Self { nodes: nodes.to_vec(), weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Writes the cardinal functions ℓ_i(x) into `out`.
    pub fn basis_into(&self, x: f64, out: &mut [f64]) {
        if let Some(i) = self.nodes.iter().position(|&xi| xi == x) {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[i] = 1.0;
            return;
        }
        let mut denom = 0.0;
        for (o, (&xi, &wi)) in out.iter_mut().zip(self.nodes.iter().zip(&self.weights)) {
            *o = wi / (x - xi);
            denom += *o;
        }
        out.iter_mut().for_each(|v| *v /= denom);
    }

    pub fn basis(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.basis_into(x, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 12, 33] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg} got {got}");
            }
        }
    }

    #[test]
    fn legendre_nodes_ascending_and_symmetric() {
        let (x, w) = gauss_legendre(20);
        for i in 1..20 {
            assert!(x[i] > x[i - 1]);
        }
        for i in 0..20 {
            assert_eq!(x[i], -x[19 - i]);
            assert_eq!(w[i], w[19 - i]);
        }
    }

    #[test]
    fn chebyshev_second_kind_moments() {
        let (y, w) = gauss_chebyshev_second(12);
        let total: f64 = w.iter().sum();
        assert!((total - PI / 2.0).abs() < 1e-14);
        let second: f64 = y.iter().zip(&w).map(|(y, w)| w * y * y).sum();
        assert!((second - PI / 8.0).abs() < 1e-14);
    }

    #[test]
    fn barycentric_reproduces_polynomials() {
        let (x, _) = gauss_legendre_on(9, 0.0, 1.0);
        let bary = Barycentric::new(&x);
        let p = |t: f64| 1.0 - 2.0 * t + 3.0 * t.powi(5) - t.powi(8);
        let vals: Vec<f64> = x.iter().map(|&t| p(t)).collect();
        for t in [0.0, 0.013, 0.5, 0.77, 1.0] {
            let l = bary.basis(t);
            let got: f64 = l.iter().zip(&vals).map(|(a, b)| a * b).sum();
            assert!((got - p(t)).abs() < 1e-12);
        }
    }
}
