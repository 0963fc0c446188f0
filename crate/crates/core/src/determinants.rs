//! Traces, Fredholm and Hilbert–Carleman determinants of a discretized operator.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::QuadratureGrid;
use crate::kernel::{DiscreteOperator, KernelPair};
use crate::linalg::{eigenvalues, trace, Dense, DenseLu, ZERO};

pub const DEFAULT_TRACE_POWERS: usize = 40;
pub const MAX_TRACE_POWERS: usize = 400;
/// Terms of the log-series below this (relative to 1) count as negligible.
const NEGLIGIBLE: f64 = 1e-17;

/// Tr 𝒦 = ∫∫ Tr K(z,z) dA by the grid rule.
pub fn trace_k(grid: &QuadratureGrid, pair: &KernelPair) -> Complex64 {
    grid.integrate(|z| trace(&pair.kernel_eval(z, z)))
}

/// Tr(Aⁿ) for n = 1..=values.len().
#[derive(Clone, Debug, Serialize)]
pub struct TraceSequence {
    pub values: Vec<Complex64>,
    pub n_max: usize,
}

impl TraceSequence {
    /// Spectral-radius estimate from the decay of the last available powers.
    pub fn radius_estimate(&self) -> f64 {
        let len = self.values.len();
        let lo = len.saturating_sub(4).max(1);
        let mut best: f64 = 0.0;
        for n in lo..=len {
            let t = self.values[n - 1].norm();
            if t > 0.0 {
                best = best.max(t.powf(1.0 / n as f64));
            }
        }
        best
    }
}

fn check_cap(n_max: usize) -> Result<()> {
    if n_max < 2 {
        return Err(Error::Argument(format!("n_max must be >= 2, got {n_max}")));
    }
    if n_max > MAX_TRACE_POWERS {
        return Err(Error::Argument(format!("n_max {n_max} exceeds the cap {MAX_TRACE_POWERS}")));
    }
    Ok(())
}

/// ⟨X, Yᵀ⟩ = Tr(XY).
fn trace_product(x: &Dense, y: &Dense) -> Complex64 {
    let n = x.nrows();
    let mut s = ZERO;
    for j in 0..n {
        for i in 0..n {
            s += x[(i, j)] * y[(j, i)];
        }
    }
    s
}

/// Tr(Aⁿ) by repeated multiplication, pairing A^⌈n/2⌉ with A^⌊n/2⌋.
/// Stops early once two consecutive terms are negligible.
pub fn trace_powers(a: &DiscreteOperator, n_max: usize) -> Result<TraceSequence> {
    check_cap(n_max)?;
    let m = &a.matrix;
    let size = m.nrows();
    let mut values = Vec::with_capacity(n_max);
    if size == 0 {
        return Ok(TraceSequence { values: vec![ZERO; n_max], n_max });
    }
    values.push((0..size).map(|i| m[(i, i)]).sum());
    let mut prev = m.clone();
    for n in 2..=n_max {
        if n % 2 == 0 {
            values.push(trace_product(&prev, &prev));
        } else {
            let next = m * &prev;
            values.push(trace_product(&next, &prev));
            prev = next;
        }
        let tiny = |i: usize| values[i - 1].norm() / i as f64 <= NEGLIGIBLE;
        if tiny(n) && tiny(n - 1) {
            break;
        }
    }
    Ok(TraceSequence { values, n_max })
}

/// Tr(Aⁿ) = Σλᵢⁿ from the eigenvalues.
pub fn trace_powers_eigen(a: &DiscreteOperator, n_max: usize) -> Result<TraceSequence> {
    check_cap(n_max)?;
    let lam = eigenvalues(&a.matrix)?;
    let mut values = Vec::with_capacity(n_max);
    let mut p = lam.clone();
    for _ in 0..n_max {
        values.push(p.iter().sum());
        p.iter_mut().zip(&lam).for_each(|(x, l)| *x *= l);
    }
    Ok(TraceSequence { values, n_max })
}

/// det₂ from the series log det₂ = −Σ_{n≥2} Tr(Aⁿ)/n.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SeriesDet {
    pub value: Complex64,
    pub log: Complex64,
    /// Magnitude of the last retained term.
    pub truncation: f64,
    pub terms: usize,
    pub radius: f64,
}

pub fn det2_series(ts: &TraceSequence) -> Result<SeriesDet> {
    let radius = ts.radius_estimate();
    if radius >= 1.0 {
        return Err(Error::SeriesDiverged { radius });
    }
    let mut log = ZERO;
    let mut truncation = 0.0;
    for (i, t) in ts.values.iter().enumerate().skip(1) {
        let term = t / (i + 1) as f64;
        log -= term;
        truncation = term.norm();
    }
    Ok(SeriesDet { value: log.exp(), log, truncation, terms: ts.values.len(), radius })
}

/// log det₂ = Σ log(1 − λ) + λ over the eigenvalues.
pub fn log_det2_eigen(a: &DiscreteOperator) -> Result<Complex64> {
    let lam = eigenvalues(&a.matrix)?;
    Ok(lam.iter().map(|&l| (1.0 - l).ln() + l).sum())
}

pub fn det2_eigen(a: &DiscreteOperator) -> Result<Complex64> {
    log_det2_eigen(a).map(|l| l.exp())
}

/// log det(I − A) by LU.
pub fn log_fredholm_det(a: &DiscreteOperator) -> Complex64 {
    let n = a.size();
    if n == 0 {
        return ZERO;
    }
    DenseLu::new(&(Dense::identity(n, n) - &a.matrix)).log_det()
}

pub fn fredholm_det(a: &DiscreteOperator) -> Complex64 {
    log_fredholm_det(a).exp()
}

/// log det₂ = log det(I − A) + Tr A, the cheapest path.
pub fn log_det2_lu(a: &DiscreteOperator) -> Complex64 {
    log_fredholm_det(a) + a.trace()
}

/// Coefficients d_m of det₂(I − λA) = Σ d_m λᵐ from m d_m = −Σ_{n=2}^m Tr(Aⁿ) d_{m−n}.
pub fn plemelj_smithies(ts: &TraceSequence) -> Vec<Complex64> {
    let mmax = ts.values.len();
    let mut d = vec![ZERO; mmax + 1];
    d[0] = Complex64::new(1.0, 0.0);
    for m in 1..=mmax {
        let mut s = ZERO;
        for n in 2..=m {
            s += ts.values[n - 1] * d[m - n];
        }
        d[m] = -s / m as f64;
    }
    d
}

/// All determinant paths side by side.
#[derive(Clone, Debug, Serialize)]
pub struct DeterminantReport {
    pub trace: Complex64,
    pub fredholm: Complex64,
    pub log_fredholm: Complex64,
    pub det2_eigen: Complex64,
    pub log_det2_eigen: Complex64,
    pub det2_series: Option<SeriesDet>,
    pub det2_lu: Complex64,
    /// Set when the series was not usable and the eigenvalue path stands alone.
    pub fallback: bool,
    pub size: usize,
}

pub fn determinant_report(a: &DiscreteOperator, n_max: usize) -> Result<DeterminantReport> {
    let ts = trace_powers(a, n_max)?;
    let (series, fallback) = match det2_series(&ts) {
        Ok(s) => (Some(s), false),
        Err(Error::SeriesDiverged { .. }) => (None, true),
        Err(e) => return Err(e),
    };
    let log_e = log_det2_eigen(a)?;
    let log_f = log_fredholm_det(a);
    let tr = a.trace();
    Ok(DeterminantReport {
        trace: tr,
        fredholm: log_f.exp(),
        log_fredholm: log_f,
        det2_eigen: log_e.exp(),
        log_det2_eigen: log_e,
        det2_series: series,
        det2_lu: (log_f + tr).exp(),
        fallback,
        size: a.size(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn op(m: Dense) -> DiscreteOperator {
        DiscreteOperator::from_matrix(m)
    }

    fn rank_one(lam: Complex64, n: usize) -> Dense {
        // u vᵀ with vᵀu = lam
        let mut m = Dense::zeros(n, n);
        let u: Vec<Complex64> = (0..n).map(|i| c(1.0 + i as f64, 0.5)).collect();
        let v0: Vec<Complex64> = (0..n).map(|i| c(0.3, -(i as f64))).collect();
        let s: Complex64 = u.iter().zip(&v0).map(|(a, b)| a * b).sum();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = u[i] * v0[j] * lam / s;
            }
        }
        m
    }

    #[test]
    fn zero_operator() {
        let a = op(Dense::zeros(4, 4));
        let ts = trace_powers(&a, 10).unwrap();
        assert!(ts.values.iter().all(|v| *v == ZERO));
        assert_eq!(det2_series(&ts).unwrap().value, c(1.0, 0.0));
        assert!((det2_eigen(&a).unwrap() - 1.0).norm() < 1e-15);
        assert_eq!(fredholm_det(&a), c(1.0, 0.0));
    }

    #[test]
    fn rank_one_closed_forms() {
        let lam = c(0.4, 0.2);
        let a = op(rank_one(lam, 5));
        let ts = trace_powers(&a, 30).unwrap();
        for (n, t) in ts.values.iter().enumerate() {
            assert!((t - lam.powi(n as i32 + 1)).norm() < 1e-12);
        }
        let exact = (1.0 - lam) * lam.exp();
        assert!((det2_series(&ts).unwrap().value - exact).norm() < 1e-10);
        assert!((fredholm_det(&a) - (1.0 - lam)).norm() < 1e-12);
        let d: Complex64 = plemelj_smithies(&ts).iter().sum();
        assert!((d - exact).norm() < 1e-10);
    }

    #[test]
    fn diagonal_and_nilpotent_examples() {
        let mut m = Dense::zeros(2, 2);
        m[(0, 0)] = c(0.5, 0.0);
        m[(1, 1)] = c(-0.5, 0.0);
        assert!((det2_eigen(&op(m)).unwrap() - 0.75).norm() < 1e-14);
        let mut n = Dense::zeros(2, 2);
        n[(0, 1)] = c(1.0, 0.0);
        assert!((det2_eigen(&op(n)).unwrap() - 1.0).norm() < 1e-14);
    }

    #[test]
    fn divergent_series_signals_fallback() {
        let a = op(rank_one(c(1.5, 0.0), 3));
        let ts = trace_powers(&a, 10).unwrap();
        assert!(matches!(det2_series(&ts), Err(Error::SeriesDiverged { .. })));
        let rep = determinant_report(&a, 10).unwrap();
        assert!(rep.fallback);
        assert!((rep.det2_eigen - (1.0 - 1.5) * 1.5f64.exp()).norm() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let a = op(Dense::zeros(2, 2));
        assert!(trace_powers(&a, MAX_TRACE_POWERS + 1).is_err());
        assert!(trace_powers(&a, 1).is_err());
    }
}
