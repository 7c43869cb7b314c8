//! Epsilon sweeps with continuation, rate-product extraction and the
//! Green-function limit residual.

use crate::basis::SpectralBasis;
use crate::constants::{closed_form_constants, ConstantSet};
use crate::error::{Error, Result};
use crate::greens::GreenCache;
use crate::problem::ProblemKind;
use crate::solver::{
    rescale_solution, solve_least_energy_with, SolveReport, SolverOptions,
};
use serde::Serialize;

/// One sweep row; the rate column matching the sweep's kind is filled, the
/// other stays empty so the two products are never mixed.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub mu_eps: f64,
    pub x_eps: [f64; 3],
    pub x_eps_cells_from_center: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_product_critical: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_product_subcritical: Option<f64>,
    pub green_residual: f64,
    pub bound_ratio: f64,
    pub resolved: bool,
    pub energy: f64,
    pub residual_norm: f64,
}

#[derive(Serialize)]
pub struct SweepTable {
    pub kind: String,
    pub s: f64,
    pub rows: Vec<SweepRow>,
    #[serde(skip)]
    pub reports: Vec<SolveReport>,
}

impl SweepTable {
    pub fn rate_products(&self) -> Vec<(f64, f64, bool)> {
        self.rows
            .iter()
            .map(|r| {
                let rate = r
                    .rate_product_critical
                    .or(r.rate_product_subcritical)
                    .expect("one rate column is always filled");
                (r.epsilon, rate, r.resolved)
            })
            .collect()
    }
}

/// Solve once per epsilon (decreasing list), seeding each solve from the
/// previous solution rescaled by the predicted mu growth.
pub fn epsilon_sweep(
    basis: &std::sync::Arc<SpectralBasis>,
    s: f64,
    kind: &dyn ProblemKind,
    eps_list: &[f64],
    cache: &GreenCache,
    exclusion_radius: f64,
) -> Result<SweepTable> {
    if eps_list.is_empty() {
        return Err(Error::config("empty epsilon list"));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("epsilon list must be strictly decreasing"));
    }
    let grid = basis.grid();
    let n = grid.dim();
    let nf = n as f64;
    let consts = closed_form_constants(n, s)?;
    let center = {
        let mut best = 0usize;
        let mut margin = 0usize;
        for node in 0..grid.node_count() {
            let m = grid.cells_to_boundary(node);
            if m > margin {
                margin = m;
                best = node;
            }
        }
        grid.coord(best)
    };
    let mut rows = Vec::new();
    let mut reports: Vec<SolveReport> = Vec::new();
    let opts = SolverOptions::default();
    for &eps in eps_list.iter() {
        let report = match reports.last() {
            None => solve_least_energy_with(basis, s, eps, kind, &opts, None)?,
            Some(prev) => continue_to(basis, s, kind, eps, &opts, prev)?,
        };
        let green_residual = green_limit_residual(&report, cache, &consts, exclusion_radius)?;
        let h = grid.axes()[0].h;
        let cells = (0..n)
            .map(|d| (report.x_eps[d] - center[d]) / h)
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt();
        let q = kind.rate_exponent(nf, s);
        let rate = eps * report.u.max_abs().powf(q);
        rows.push(SweepRow {
            epsilon: eps,
            mu_eps: report.mu_eps,
            x_eps: report.x_eps,
            x_eps_cells_from_center: cells,
            rate_product_critical: (kind.name() == "critical").then_some(rate),
            rate_product_subcritical: (kind.name() == "subcritical").then_some(rate),
            green_residual,
            bound_ratio: report.bound_ratio,
            resolved: report.resolved,
            energy: report.energy,
            residual_norm: report.residual_norm,
        });
        reports.push(report);
    }
    if rows.iter().all(|r| !r.resolved) {
        return Err(Error::SolverFailure(
            "every sweep row is under-resolved; use a finer grid".into(),
            f64::NAN,
        ));
    }
    Ok(SweepTable { kind: kind.name().to_string(), s, rows, reports })
}

/// Adaptive continuation from a solved report to a smaller eps: the step
/// ratio shrinks geometrically on Newton failure and the seed is the
/// previous solution, coordinate/amplitude rescaled by the predicted mu
/// growth (left untouched for small steps, where interpolation smearing
/// costs more than the amplitude offset).
fn continue_to(
    basis: &std::sync::Arc<SpectralBasis>,
    s: f64,
    kind: &dyn ProblemKind,
    eps: f64,
    opts: &SolverOptions,
    prev: &SolveReport,
) -> Result<SolveReport> {
    let grid = basis.grid();
    let nf = grid.dim() as f64;
    let q = kind.rate_exponent(nf, s);
    let mut from_eps = prev.epsilon;
    let mut from_u = prev.u.clone();
    let mut from_x = prev.x_eps;
    // log-space step toward the target, shrunk on failure
    let mut step = (eps / from_eps).ln();
    let mut failures = 0usize;
    loop {
        let target = (from_eps.ln() + step).exp().max(eps);
        let mu_ratio = (from_eps / target).powf(1.0 / q);
        let seed = if mu_ratio > 1.25 {
            rescale_solution(grid, &from_u, &from_x, mu_ratio, kind.rescale_exponent(nf, s, from_eps))
        } else {
            from_u.clone()
        };
        match solve_least_energy_with(basis, s, target, kind, opts, Some(&seed)) {
            Ok(r) => {
                if (target - eps).abs() <= 1e-12 * eps {
                    return Ok(r);
                }
                from_eps = target;
                from_u = r.u.clone();
                from_x = r.x_eps;
                // regrow the step after success
                step = (eps / from_eps).ln().max(1.6 * step);
            }
            Err(e) => {
                failures += 1;
                step *= 0.5;
                if failures > 24 || step.abs() < 1e-4 {
                    return Err(e);
                }
            }
        }
    }
}

/// Richardson-style extrapolation of the rate product to eps = 0 from the
/// resolved rows (linear-in-eps model on the last two), plus the agreement
/// ratio against a target.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateFit {
    pub limit: f64,
    pub ratio: f64,
}

pub fn rate_fit(table: &SweepTable, target: f64) -> Result<RateFit> {
    let resolved: Vec<(f64, f64)> = table
        .rate_products()
        .into_iter()
        .filter(|&(_, _, ok)| ok)
        .map(|(e, r, _)| (e, r))
        .collect();
    if resolved.len() < 3 {
        return Err(Error::config(format!(
            "rate_fit needs at least 3 resolved rows, got {}",
            resolved.len()
        )));
    }
    let (e1, r1) = resolved[resolved.len() - 2];
    let (e2, r2) = resolved[resolved.len() - 1];
    let limit = (r2 * e1 - r1 * e2) / (e1 - e2);
    Ok(RateFit { limit, ratio: limit / target })
}

/// Cauchy-style trend: successive |differences| of the resolved rate
/// products decrease.
pub fn rate_differences_decreasing(table: &SweepTable) -> bool {
    let vals: Vec<f64> = table
        .rate_products()
        .into_iter()
        .filter(|&(_, _, ok)| ok)
        .map(|(_, r, _)| r)
        .collect();
    let diffs: Vec<f64> = vals.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    diffs.windows(2).all(|w| w[1] < w[0])
}

/// Max over nodes at distance > radius from x_eps of
/// | |u|_inf u(x) - b G(x, x_eps) | / max |b G| on that set.
pub fn green_limit_residual(
    report: &SolveReport,
    cache: &GreenCache,
    consts: &ConstantSet,
    radius: f64,
) -> Result<f64> {
    let grid = cache.basis().grid();
    report.u.check_grid(grid)?;
    let n = grid.dim();
    let col = cache.column(report.x_eps_node)?;
    let b = consts.green_limit;
    let sup = report.u.max_abs();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    let mut any = false;
    for node in 0..grid.node_count() {
        let x = grid.coord(node);
        let d2: f64 = (0..n).map(|d| (x[d] - report.x_eps[d]) * (x[d] - report.x_eps[d])).sum();
        if d2.sqrt() <= radius {
            continue;
        }
        any = true;
        let model = b * col.values()[node];
        worst = worst.max((sup * report.u.values()[node] - model).abs());
        scale = scale.max(model.abs());
    }
    if !any {
        return Err(Error::domain("exclusion radius leaves no far-field nodes"));
    }
    Ok(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridFunction;
    use crate::greens::RobinMethod;
    use crate::problem::lookup_kind;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    #[test]
    fn synthetic_rate_fit_recovers_linear_model() {
        let rows: Vec<SweepRow> = [0.4, 0.2, 0.1, 0.05]
            .iter()
            .map(|&e| SweepRow {
                epsilon: e,
                mu_eps: 1.0,
                x_eps: [0.0; 3],
                x_eps_cells_from_center: 0.0,
                rate_product_critical: Some(0.37 + 1.9 * e),
                rate_product_subcritical: None,
                green_residual: 0.0,
                bound_ratio: 1.0,
                resolved: true,
                energy: 0.0,
                residual_norm: 0.0,
            })
            .collect();
        let table =
            SweepTable { kind: "critical".into(), s: 0.2, rows, reports: Vec::new() };
        let fit = rate_fit(&table, 0.37).unwrap();
        assert_relative_eq!(fit.limit, 0.37, max_relative = 1e-10);
        assert_relative_eq!(fit.ratio, 1.0, max_relative = 1e-10);
        // constant table: limit equals the common value
        let rows: Vec<SweepRow> = [0.4, 0.2, 0.1]
            .iter()
            .map(|&e| SweepRow {
                epsilon: e,
                mu_eps: 1.0,
                x_eps: [0.0; 3],
                x_eps_cells_from_center: 0.0,
                rate_product_critical: Some(2.5),
                rate_product_subcritical: None,
                green_residual: 0.0,
                bound_ratio: 1.0,
                resolved: true,
                energy: 0.0,
                residual_norm: 0.0,
            })
            .collect();
        let table =
            SweepTable { kind: "critical".into(), s: 0.2, rows, reports: Vec::new() };
        assert_relative_eq!(rate_fit(&table, 2.5).unwrap().limit, 2.5, max_relative = 1e-12);
    }

    #[test]
    fn rate_fit_requires_three_resolved_rows() {
        let rows: Vec<SweepRow> = [0.4, 0.2, 0.1]
            .iter()
            .enumerate()
            .map(|(i, &e)| SweepRow {
                epsilon: e,
                mu_eps: 1.0,
                x_eps: [0.0; 3],
                x_eps_cells_from_center: 0.0,
                rate_product_critical: Some(1.0),
                rate_product_subcritical: None,
                green_residual: 0.0,
                bound_ratio: 1.0,
                resolved: i < 2,
                energy: 0.0,
                residual_norm: 0.0,
            })
            .collect();
        let table =
            SweepTable { kind: "critical".into(), s: 0.2, rows, reports: Vec::new() };
        assert!(rate_fit(&table, 1.0).is_err());
    }

    #[test]
    fn empty_or_increasing_eps_list_rejected() {
        let basis = Arc::new(SpectralBasis::build_box(&[(-1.0, 1.0)], 2.0 / 64.0).unwrap());
        let cache = GreenCache::build(&basis, 0.2, RobinMethod::LatticeMatched).unwrap();
        let kind = lookup_kind("critical").unwrap();
        assert!(epsilon_sweep(&basis, 0.2, kind, &[], &cache, 0.5).is_err());
        assert!(epsilon_sweep(&basis, 0.2, kind, &[0.1, 0.2], &cache, 0.5).is_err());
    }

    #[test]
    fn green_residual_is_zero_for_consistent_field() {
        // substituting u := b G / |u|-consistent field gives residual 0
        let basis = Arc::new(SpectralBasis::build_box(&[(-1.0, 1.0)], 2.0 / 128.0).unwrap());
        let cache = GreenCache::build(&basis, 0.2, RobinMethod::LatticeMatched).unwrap();
        let consts = closed_form_constants(1, 0.2).unwrap();
        let grid = basis.grid();
        let y = grid.nearest_node(&[0.0]).unwrap();
        let col = cache.column(y).unwrap();
        // u = b G(., y) / sup: then sup_u * u = b G exactly on the far field
        let g_sup = col.max_abs();
        let sup = (consts.green_limit * g_sup).sqrt();
        let u = GridFunction::new(
            grid,
            col.values().iter().map(|g| consts.green_limit * g / sup).collect(),
        )
        .unwrap();
        let report = SolveReport {
            kind: "critical".into(),
            epsilon: 0.1,
            u,
            energy: 0.0,
            residual_norm: 0.0,
            mu_eps: sup / consts.bubble_amplitude,
            x_eps_node: y,
            x_eps: grid.coord(y),
            bound_ratio: 1.0,
            resolved: true,
            iterations: Default::default(),
            stage1_values: Vec::new(),
        };
        let res = green_limit_residual(&report, &cache, &consts, 0.5).unwrap();
        assert!(res <= 1e-12, "self-consistency residual {res}");
        // empty far field errors
        assert!(green_limit_residual(&report, &cache, &consts, 10.0).is_err());
    }
}
