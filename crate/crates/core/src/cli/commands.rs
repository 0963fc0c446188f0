//! The nine subcommands. Each fills a [`Report`] and leaves writing to the caller.

use num_complex::Complex64;
use rayon::prelude::*;

use super::report::{cols, matrix, Report, Table};
use crate::config::{Built, Config};
use crate::dbar::solve_gamma;
use crate::deformation::kp::kp_richardson;
use crate::deformation::miwa::{connection_check, shift_composition_residual, tau_ratio_check, Sign};
use crate::deformation::{closedness, loop_integral, variational_check, Deformation, DeformationState};
use crate::determinants::{determinant_report, plemelj_smithies, trace_powers};
use crate::error::{Error, Result};
use crate::kernel::{resolvent_identity_residual, KernelPair};
use crate::linalg::{fro, unwrap_log, ZERO};
use crate::nls::rh::rh_reduce_ellipse;
use crate::nls::{
    a_equation_residual, cmkdv_residual, det2_psi_check, field_schwarz_residual, hierarchy_m1_residual, nls_residual,
    psi_extract, refine, schwarz_residual, times, zero_curvature_residual, NlsSolver,
};

fn need_times(cfg: &Config, n: usize, what: &str) -> Result<()> {
    if cfg.times.len() < n {
        return Err(Error::Config(format!("{what} needs at least {n} entries in `times`")));
    }
    Ok(())
}

fn relative(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

pub fn solve_dbar(cfg: &Config, b: &Built, r: &mut Report) -> Result<()> {
    let gamma =
        if cfg.times.is_empty() { solve_gamma(&b.grid, &b.field)? } else { b.deformation()?.solve(&cfg.times)? };
    let det_residual = gamma.unimodularity_residual();
    let dbar = gamma.dbar_residual();
    r.value("rcond", gamma.rcond);
    r.value("gamma1", matrix(&gamma.gamma1));
    r.value("gamma2", matrix(&gamma.gamma2));
    r.value("det_residual", det_residual);
    r.value("dbar_residual", dbar);
    r.le("unimodularity", det_residual, cfg.tolerances.unimodularity);
    let mut buf = Vec::new();
    gamma.write_csv(&mut buf)?;
    r.raw_table("gamma", String::from_utf8_lossy(&buf).into_owned());
    Ok(())
}

pub fn det2(cfg: &Config, b: &Built, r: &mut Report) -> Result<()> {
    let base = b.pair.clone().unwrap_or_else(|| KernelPair::zero(2, 1, b.support.clone()));
    let def = Deformation::from_pair(base, &b.grid, b.flow)?;
    let pair = def.pair_at(&cfg.times)?;
    let op = pair.discretize(&b.grid);
    let rep = determinant_report(&op, cfg.n_max)?;
    let mut paths = vec![("eigen", rep.det2_eigen), ("fredholm_exp_trace", rep.det2_lu)];
    if let Some(s) = &rep.det2_series {
        paths.push(("series", s.value));
    }
    let mut worst = 0.0f64;
    for i in 0..paths.len() {
        for j in i + 1..paths.len() {
            worst = worst.max(relative(paths[i].1, paths[j].1));
        }
    }
    r.le("determinant_paths", worst, cfg.tolerances.determinant_agreement);
    let gamma = def.solve_field(&pair.m_unchecked())?;
    let res = resolvent_identity_residual(&pair, &gamma)?;
    r.le("resolvent_identity", res, cfg.tolerances.resolvent);
    r.value("determinants", &rep);
    r.value("resolvent_residual", res);
    r.value("rcond", gamma.rcond);
    let ts = trace_powers(&op, cfg.n_max)?;
    let coeffs = plemelj_smithies(&ts);
    let mut t = Table::new(&["n", "trace_re", "trace_im", "coeff_re", "coeff_im"]);
    for (n, tr) in ts.values.iter().enumerate() {
        let mut row = vec![(n + 1) as f64];
        row.extend(cols(&[*tr, coeffs.get(n + 1).copied().unwrap_or(ZERO)]));
        t.push(row);
    }
    r.table("traces", &t)?;
    Ok(())
}

pub fn tau_path(cfg: &Config, b: &Built, r: &mut Report) -> Result<()> {
    need_times(cfg, 1, "tau-path")?;
    let def = b.deformation()?;
    let dim = cfg.times.len();
    let path = cfg.path.clone().unwrap_or_else(|| vec![vec![ZERO; dim], cfg.times.clone()]);
    if path.len() < 2 || path.iter().any(|p| p.len() != dim) {
        return Err(Error::Config(format!("`path` needs at least two points of length {dim}")));
    }
    let tol = &cfg.tolerances;
    let mut state = DeformationState::new(&def, path[0].clone(), ZERO)?;
    let det0 = def.pair.as_ref().map(|_| def.log_det2(&path[0])).transpose()?;
    let mut header = vec!["waypoint".to_string()];
    for j in 1..=dim {
        header.push(format!("t{j}_re"));
        header.push(format!("t{j}_im"));
    }
    header.extend(["log_tau_re", "log_tau_im", "log_det2_re", "log_det2_im"].map(String::from));
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new(&h);
    let mut last_det = ZERO;
    for (k, w) in path.iter().enumerate() {
        if k > 0 {
            state.advance(&def, std::slice::from_ref(w), cfg.path_steps)?;
        }
        let det = match det0 {
            Some(d0) => {
                let d = unwrap_log(def.log_det2(w)? - d0, last_det);
                last_det = d;
                d
            }
            None => Complex64::new(f64::NAN, f64::NAN),
        };
        let mut row = vec![k as f64];
        row.extend(cols(w));
        row.extend(cols(&[state.log_tau, det]));
        table.push(row);
    }
    r.value("log_tau", state.log_tau);
    r.value("end", &state.t);
    r.value("gamma1_end", matrix(&state.gamma.gamma1));
    if det0.is_some() {
        r.value("log_det2_difference", last_det);
        r.le("tau_vs_det2", (state.log_tau - last_det).norm(), tol.tau_path);
        let t0 = path.last().expect("path has points").clone();
        let mut var = Vec::new();
        for j in 1..=dim.min(2) {
            let (om, fd) = variational_check(&def, &t0, j, cfg.fd_step)?;
            r.le(&format!("variational_{j}"), (om - fd).norm(), tol.variational);
            var.push((om, fd));
        }
        r.value("variational", var);
    }
    let t0 = path.last().expect("path has points").clone();
    let mut clos = Vec::new();
    for i in 1..=dim {
        for j in i + 1..=dim {
            let c = closedness(&def, &t0, i, j, cfg.fd_step)?;
            r.le(&format!("closedness_{i}{j}"), c.norm(), tol.closedness);
            clos.push(((i, j), c));
        }
    }
    r.value("closedness", clos);
    if dim >= 2 {
        let l = loop_integral(&def, &t0, (1, 0.1), (2, 0.1), cfg.path_steps)?;
        r.value("loop_integral", l);
        r.le("loop_integral", l.norm(), tol.closedness);
    }
    r.table("path", &table)?;
    Ok(())
}

pub fn miwa_check(cfg: &Config, b: &Built, r: &mut Report) -> Result<()> {
    need_times(cfg, 1, "miwa-check")?;
    let def = b.deformation()?;
    let tol = &cfg.tolerances;
    let mut table = Table::new(&[
        "sign",
        "connection_residual",
        "ratio_re",
        "ratio_im",
        "predicted_re",
        "predicted_im",
        "discrepancy",
    ]);
    for (sign, label, code) in [(Sign::Minus, "minus", -1.0), (Sign::Plus, "plus", 1.0)] {
        let (conn, _, _) = connection_check(&def, &cfg.times, cfg.zeta, sign)?;
        r.le(&format!("connection_{label}"), conn.residual, tol.connection);
        r.value(&format!("connection_{label}"), &conn);
        let mut row = vec![code, conn.residual];
        if def.pair.is_some() {
            let tr = tau_ratio_check(&def, &cfg.times, cfg.zeta, sign)?;
            r.le(&format!("tau_ratio_{label}"), tr.discrepancy, tol.tau_ratio);
            row.extend(cols(&[tr.determinant_ratio, tr.predicted]));
            row.push(tr.discrepancy);
            r.value(&format!("tau_ratio_{label}"), &tr);
        } else {
            row.extend([f64::NAN; 5]);
        }
        table.push(row);
    }
    let comp = shift_composition_residual(&def, &cfg.times, cfg.zeta)?;
    r.value("composition_residual", comp);
    r.le("shift_composition", comp, tol.composition);
    r.table("shifts", &table)?;
    Ok(())
}

pub fn hirota_check(cfg: &Config, b: &Built, r: &mut Report) -> Result<()> {
    need_times(cfg, 1, "hirota-check")?;
    let def = b.deformation()?;
    let s = if cfg.s_times.is_empty() { cfg.times.clone() } else { cfg.s_times.clone() };
    if s.len() != cfg.times.len() {
        return Err(Error::Config("`s_times` and `times` must have the same length".into()));
    }
    let reach = b.grid.domain.max_modulus();
    if cfg.radii.is_empty() || cfg.radii.iter().any(|&x| !(x > 1.5 * reach)) {
        return Err(Error::Config(format!("every radius must exceed 1.5 × {reach:.3}")));
    }
    let gt = def.solve(&cfg.times)?;
    let gs = if s == cfg.times { gt.clone() } else { def.solve(&s)? };
    let vals: Vec<Complex64> = cfg
        .radii
        .iter()
        .map(|&rad| crate::deformation::miwa::hirota_contour(&gt, &gs, rad, cfg.contour_points))
        .collect();
    let mut table = Table::new(&["radius", "residue_re", "residue_im", "abs"]);
    for (&rad, v) in cfg.radii.iter().zip(&vals) {
        r.le(&format!("hirota_R{rad}"), v.norm(), cfg.tolerances.hirota);
        let mut row = vec![rad];
        row.extend(cols(&[*v]));
        row.push(v.norm());
        table.push(row);
    }
    if cfg.tolerances.hirota_decay > 0.0 {
        for w in cfg.radii.windows(2).zip(vals.windows(2)) {
            let ratio = w.1[0].norm() / w.1[1].norm();
            r.ge(&format!("hirota_decay_R{}_R{}", w.0[0], w.0[1]), ratio, cfg.tolerances.hirota_decay);
        }
    }
    r.value("residues", &vals);
    r.table("hirota", &table)?;
    Ok(())
}

pub fn kp_residual(cfg: &Config, b: &Built, r: &mut Report) -> Result<()> {
    need_times(cfg, 3, "kp-residual")?;
    let def = b.deformation()?;
    if def.pair.is_none() && b.nls.is_some() {
        return Err(Error::Config("kp-residual needs a KP field".into()));
    }
    let rich = kp_richardson(&def, &cfg.times, cfg.kp_step)?;
    let tol = &cfg.tolerances;
    r.band("richardson_slope", rich.slope, tol.slope_target, tol.slope_band);
    let mut table = Table::new(&["h", "residual"]);
    table.push(vec![rich.coarse.h, rich.coarse.residual]);
    table.push(vec![rich.fine.h, rich.fine.residual]);
    r.value("richardson", &rich);
    r.table("kp", &table)?;
    Ok(())
}

fn nls_solver(b: &Built, what: &str) -> Result<NlsSolver> {
    let s = b.nls.clone().ok_or_else(|| Error::Config(format!("{what} needs an nls_beta field")))?;
    NlsSolver::on_grid(s, &b.grid)
}

fn nls_times(cfg: &Config) -> Vec<Complex64> {
    let n = &cfg.nls;
    times(n.x, n.t, Some(n.t3))
}

fn linspace(range: [f64; 2], n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![range[0]];
    }
    (0..n).map(|k| range[0] + (range[1] - range[0]) * k as f64 / (n - 1) as f64).collect()
}

pub fn nls_solve(cfg: &Config, b: &Built, r: &mut Report) -> Result<()> {
    let solver = nls_solver(b, "nls-solve")?;
    let n = &cfg.nls;
    let t0 = nls_times(cfg);
    let g = solver.solve(&t0)?;
    let sym = schwarz_residual(&g)?;
    let uni = g.unimodularity_residual();
    r.value("psi", psi_extract(&g));
    r.value("schwarz_residual", sym);
    r.value("det_residual", uni);
    r.le("schwarz", sym, cfg.tolerances.schwarz);
    r.le("unimodularity", uni, cfg.tolerances.unimodularity);
    let xs = linspace(n.x_range, n.x_samples);
    let ts = linspace(n.t_range, n.t_samples);
    let pts: Vec<(f64, f64)> = ts.iter().flat_map(|&t| xs.iter().map(move |&x| (x, t))).collect();
    let vecs: Vec<Vec<Complex64>> = pts.iter().map(|&(x, t)| times(x, t, Some(n.t3))).collect();
    let ps = solver.psi_many(&vecs)?;
    let mut table = Table::new(&["x", "t", "psi_re", "psi_im", "abs_psi", "a_re", "a_im"]);
    for (&(x, t), p) in pts.iter().zip(&ps) {
        let mut row = vec![x, t];
        row.extend(cols(&[p.psi]));
        row.push(p.psi.norm());
        row.extend(cols(&[p.a]));
        table.push(row);
    }
    r.table("psi", &table)?;
    Ok(())
}

pub fn nls_verify(cfg: &Config, b: &Built, r: &mut Report) -> Result<()> {
    let solver = nls_solver(b, "nls-verify")?;
    let n = &cfg.nls;
    let tol = &cfg.tolerances;
    let t0 = nls_times(cfg);
    let field = solver.field(&t0)?;
    let g = solver.solve(&t0)?;
    let field_sym = field_schwarz_residual(&field, &b.grid)?;
    let sym = schwarz_residual(&g)?;
    r.le("schwarz_field", field_sym, tol.schwarz);
    r.le("schwarz", sym, tol.schwarz);
    r.value("psi", psi_extract(&g));
    let probes = n.probes.clone();
    let rules: Vec<(&str, Box<dyn Fn(f64) -> Result<f64> + Sync>)> = vec![
        ("zero_curvature", Box::new(|h| zero_curvature_residual(&solver, &t0, h, &probes))),
        ("nls", Box::new(|h| nls_residual(&solver, &t0, h))),
        ("cmkdv", Box::new(|h| cmkdv_residual(&solver, &t0, h))),
    ];
    let refs: Vec<_> = rules.par_iter().map(|(name, f)| refine(n.h, f).map(|x| (*name, x))).collect::<Result<_>>()?;
    let mut table = Table::new(&["equation", "h", "coarse", "fine", "slope"]);
    for (k, (name, x)) in refs.iter().enumerate() {
        r.band(&format!("{name}_slope"), x.slope, tol.slope_target, tol.slope_band);
        r.value(&format!("{name}_refinement"), x);
        table.push(vec![k as f64, x.h, x.coarse, x.fine, x.slope]);
    }
    let d = det2_psi_check(&solver, &t0, n.h_det2)?;
    r.le("det2_psi", d.discrepancy, tol.det2_psi);
    r.value("det2_psi", d);
    let a = a_equation_residual(&solver, &t0, n.h_small)?;
    r.le("a_equation", a, tol.a_equation);
    r.value("a_equation", a);
    let hm = hierarchy_m1_residual(&solver, &t0, n.h_small)?;
    r.le("hierarchy_m1", hm, tol.hierarchy);
    r.value("hierarchy_m1", hm);
    r.value("equations", ["zero_curvature", "nls", "cmkdv"]);
    r.table("refinement", &table)?;
    Ok(())
}

/// Ten points on a circle well outside the support.
fn default_probes(b: &Built) -> Vec<Complex64> {
    let rad = 1.5 * b.support.max_modulus() + 0.5;
    (0..10).map(|k| Complex64::from_polar(rad, 0.3 + k as f64 * std::f64::consts::TAU / 10.0)).collect()
}

pub fn rh_compare(cfg: &Config, b: &Built, r: &mut Report) -> Result<()> {
    let solver = nls_solver(b, "rh-compare")?;
    let n = &cfg.nls;
    let t0 = if n.t3 == 0.0 { times(n.x, n.t, None) } else { nls_times(cfg) };
    let rh = rh_reduce_ellipse(&solver.scenario, &t0, n.rh_nodes).map_err(|e| Error::Config(e.to_string()))?;
    let g = solver.solve(&t0)?;
    let probes = if n.rh_probes.is_empty() { default_probes(b) } else { n.rh_probes.clone() };
    let mut table = Table::new(&["re", "im", "difference"]);
    let mut worst = 0.0f64;
    for &z in &probes {
        let d = fro(&(rh.evaluate(z).map_err(|e| Error::Config(e.to_string()))? - g.evaluate(z)));
        worst = worst.max(d);
        table.push(vec![z.re, z.im, d]);
    }
    let (p_rh, p_area) = (rh.psi(), psi_extract(&g).psi);
    let rel = (p_rh - p_area).norm() / p_area.norm().max(f64::MIN_POSITIVE);
    r.le("gamma_agreement", worst, cfg.tolerances.rh_gamma);
    r.le("psi_agreement", rel, cfg.tolerances.rh_psi);
    r.value("rh", rh.summary());
    r.value("psi_area", p_area);
    r.value("probes", probes.len());
    r.table("probes", &table)?;
    Ok(())
}
