//! Least-energy and multi-peak solvers for A_s u = f_eps(u) with blow-up
//! diagnostics.
//!
//! The least-energy path runs three stages: constrained quotient descent on
//! the unit L^q sphere from a centered-bubble guess, rescaling to the
//! equation's natural normalization, then damped Newton on the residual with
//! MINRES linear solves preconditioned by (A_s + gamma)^{-1}. Multi-peak
//! solves start from a sum of projected bubbles and go straight to Newton;
//! the correction operator of the reduction framework is replaced by full
//! Newton convergence.

use crate::basis::SpectralBasis;
use crate::bubbles::{project_bubble, BubbleDeriv, BubbleParams};
use crate::constants::{closed_form_constants, ConstantSet};
use crate::error::{Error, Result};
use crate::field::{weighted_dot, GridFunction};
use crate::operator::apply_power;
use crate::problem::ProblemKind;
use crate::reduced::ReducedConfig;
use serde::Serialize;

/// Nodes required across the predicted core width before a solve counts as
/// grid-resolved.
pub const CORE_RESOLUTION_NODES: f64 = 6.0;

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct IterationCounts {
    pub stage1: usize,
    pub newton: usize,
    pub linear: usize,
}

/// A computed solution with its blow-up diagnostics.
#[derive(Serialize)]
pub struct SolveReport {
    pub kind: String,
    pub epsilon: f64,
    #[serde(skip)]
    pub u: GridFunction,
    /// (1/2) <A_s u, u> - Int F_eps(u)
    pub energy: f64,
    /// |A_s u - f_eps(u)|_inf
    pub residual_norm: f64,
    /// mu_eps = c_{n,s}^{-1} sup u
    pub mu_eps: f64,
    pub x_eps_node: usize,
    pub x_eps: [f64; 3],
    /// sup over rescaled nodes of b_eps / w_1
    pub bound_ratio: f64,
    /// core width mu^{-a} covers at least `CORE_RESOLUTION_NODES` cells
    pub resolved: bool,
    pub iterations: IterationCounts,
    /// accepted quotient values of stage 1 (monotonicity diagnostic)
    pub stage1_values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// residual tolerance factor: converge when |r|_inf <= factor |u|_inf^p
    pub tol_factor: f64,
    pub stage1_iters: usize,
    pub newton_max_iters: usize,
    pub minres_max_iters: usize,
    pub minres_rtol: f64,
    /// initial bubble scale; default diameter / 50
    pub initial_scale: Option<f64>,
    /// initial bubble center; default the deepest interior node
    pub initial_center: Option<[f64; 3]>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_factor: 1e-9,
            stage1_iters: 150,
            newton_max_iters: 110,
            minres_max_iters: 700,
            minres_rtol: 1e-11,
            initial_scale: None,
            initial_center: None,
        }
    }
}

/// Preconditioned MINRES for symmetric (possibly indefinite) systems.
/// `precond` must apply a symmetric positive definite approximate inverse.
pub fn minres(
    apply: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    precond: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    rtol: f64,
    max_iters: usize,
) -> (Vec<f64>, f64, usize) {
    let n = b.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = precond(&r1);
    let beta1 = dot(&r1, &y).max(0.0).sqrt();
    if beta1 == 0.0 {
        return (x, 0.0, 0);
    }
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0f64, beta1);
    let (mut dbar, mut epsln) = (0.0f64, 0.0f64);
    let mut phibar = beta1;
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut iters = 0;
    for it in 1..=max_iters {
        iters = it;
        let v: Vec<f64> = y.iter().map(|t| t / beta).collect();
        let mut ynew = apply(&v);
        if it >= 2 {
            let f = beta / oldb;
            for (a, b) in ynew.iter_mut().zip(&r1) {
                *a -= f * b;
            }
        }
        let alfa = dot(&v, &ynew);
        let f = alfa / beta;
        for (a, b) in ynew.iter_mut().zip(&r2) {
            *a -= f * b;
        }
        r1 = std::mem::replace(&mut r2, ynew);
        y = precond(&r2);
        oldb = beta;
        beta = dot(&r2, &y).max(0.0).sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = (gbar * gbar + beta * beta).sqrt().max(f64::MIN_POSITIVE);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let w1 = std::mem::replace(&mut w2, std::mem::take(&mut w));
        w = v
            .iter()
            .zip(&w1)
            .zip(&w2)
            .map(|((vv, a), b)| (vv - oldeps * a - delta * b) / gamma)
            .collect();
        for (xx, ww) in x.iter_mut().zip(&w) {
            *xx += phi * ww;
        }
        if phibar <= rtol * beta1 {
            break;
        }
    }
    (x, phibar / beta1, iters)
}

struct Workspace<'a> {
    basis: &'a SpectralBasis,
    s: f64,
    p: f64,
    eps: f64,
    kind: &'a dyn ProblemKind,
    vol: f64,
}

impl Workspace<'_> {
    fn apply_s(&self, v: &[f64]) -> Vec<f64> {
        let u = GridFunction::new(self.basis.grid(), v.to_vec()).expect("workspace field");
        apply_power(self.basis, &u, self.s).expect("apply_power").into_values()
    }

    fn precond(&self, v: &[f64], gamma: f64) -> Vec<f64> {
        let u = GridFunction::new(self.basis.grid(), v.to_vec()).expect("workspace field");
        let mut c = self.basis.analyze(&u).expect("analyze");
        for (a, l) in c.values_mut().iter_mut().zip(self.basis.eigenvalues()) {
            *a /= l.powf(self.s) + gamma;
        }
        self.basis.synthesize(&c).expect("synthesize").into_values()
    }

    fn residual(&self, u: &[f64]) -> Vec<f64> {
        let mut r = self.apply_s(u);
        for (ri, &ui) in r.iter_mut().zip(u) {
            *ri -= self.kind.nonlinearity(ui, self.p, self.eps);
        }
        r
    }

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    fn norm2(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Damped Newton with MINRES directions and a gradient-step fallback.
    fn newton(
        &self,
        u0: Vec<f64>,
        opts: &SolverOptions,
        counts: &mut IterationCounts,
    ) -> Result<Vec<f64>> {
        let trace = std::env::var_os("FRACLAB_SOLVER_TRACE").is_some();
        let mut u = u0;
        let mut last_res = f64::INFINITY;
        let mut best_res = f64::INFINITY;
        let mut since_best = 0usize;
        // Levenberg shift against near-null Jacobian modes; zero while the
        // plain Newton step makes progress
        let mut nu = 0.0f64;
        for it in 0..opts.newton_max_iters {
            counts.newton += 1;
            let r = self.residual(&u);
            let nr = Self::max_abs(&r);
            let sup = Self::max_abs(&u);
            if trace {
                eprintln!("newton[{it}] eps={} res={nr:.3e} sup={sup:.4}", self.eps);
            }
            if nr <= opts.tol_factor * sup.powf(self.p) {
                return Ok(u);
            }
            last_res = nr;
            // stagnation escalates the Levenberg shift before giving up
            if nr < 0.97 * best_res {
                best_res = nr;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best == 4 || since_best == 8 || since_best == 12 {
                    let fp_max = u
                        .iter()
                        .map(|&ui| self.kind.nonlinearity_deriv(ui, self.p, self.eps))
                        .fold(0.0f64, f64::max);
                    nu = (4.0 * nu).max(1e-3 * fp_max);
                    if trace {
                        eprintln!("  levenberg shift nu={nu:.3e}");
                    }
                } else if since_best >= 18 {
                    return Err(Error::SolverFailure("newton stagnated".into(), nr));
                }
            }
            let fp: Vec<f64> =
                u.iter().map(|&ui| self.kind.nonlinearity_deriv(ui, self.p, self.eps)).collect();
            let gamma = 0.5 * fp.iter().fold(0.0f64, |m, x| m.max(*x));
            let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
            let nu_now = nu;
            let mut apply = |v: &[f64]| {
                let mut av = self.apply_s(v);
                for (a, (f, vv)) in av.iter_mut().zip(fp.iter().zip(v)) {
                    *a -= (f - nu_now) * vv;
                }
                av
            };
            let mut pre = |v: &[f64]| self.precond(v, gamma);
            let (delta, rel, its) =
                minres(&mut apply, &mut pre, &rhs, opts.minres_rtol, opts.minres_max_iters);
            counts.linear += its;
            if trace {
                // true linear residual, not the preconditioned norm
                let jd = apply(&delta);
                let tr: f64 = jd
                    .iter()
                    .zip(&rhs)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
                    / rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
                eprintln!("  minres its={its} relres(precond)={rel:.2e} relres(true)={tr:.2e}");
            }
            // Armijo backtracking on the l2 merit, factor 1/2, at most 30
            // halvings; the sup-norm only gates final convergence
            let nr2 = Self::norm2(&r);
            let mut t = 1.0f64;
            let mut accepted = false;
            for _ in 0..30 {
                let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
                if Self::norm2(&self.residual(&trial)) < (1.0 - 1e-4 * t) * nr2 {
                    u = trial;
                    accepted = true;
                    nu *= 0.3;
                    if nu < 1e-14 {
                        nu = 0.0;
                    }
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                // steepest descent on |r|_2^2: direction -J r
                let g = apply(&r);
                let jg = apply(&g);
                let denom = jg.iter().map(|x| x * x).sum::<f64>();
                if denom == 0.0 {
                    return Err(Error::SolverFailure("newton stalled".into(), nr));
                }
                let step = g.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / denom;
                let mut t = step;
                let mut ok = false;
                for _ in 0..30 {
                    let trial: Vec<f64> = u.iter().zip(&g).map(|(a, d)| a - t * d).collect();
                    if Self::norm2(&self.residual(&trial)) < nr2 {
                        u = trial;
                        ok = true;
                        break;
                    }
                    t *= 0.5;
                }
                if !ok {
                    return Err(Error::SolverFailure("newton divergence".into(), nr));
                }
            }
        }
        Err(Error::SolverFailure("newton iteration budget exhausted".into(), last_res))
    }
}

/// Least-energy solve from a centered-bubble initial guess.
pub fn solve_least_energy(
    basis: &SpectralBasis,
    s: f64,
    eps: f64,
    kind: &dyn ProblemKind,
) -> Result<SolveReport> {
    solve_least_energy_with(basis, s, eps, kind, &SolverOptions::default(), None)
}

/// Least-energy solve; a continuation seed skips the quotient stages.
pub fn solve_least_energy_with(
    basis: &SpectralBasis,
    s: f64,
    eps: f64,
    kind: &dyn ProblemKind,
    opts: &SolverOptions,
    seed: Option<&GridFunction>,
) -> Result<SolveReport> {
    let grid = basis.grid();
    let n = grid.dim();
    let consts = closed_form_constants(n, s)?;
    kind.validate_eps(&consts, basis.eigenvalues()[0].powf(s), eps)?;
    let ws = Workspace { basis, s, p: consts.p, eps, kind, vol: grid.cell_volume() };
    let mut counts = IterationCounts::default();
    let mut stage1_values = Vec::new();

    let u_start: Vec<f64> = match seed {
        Some(seed_fn) => {
            seed_fn.check_grid(grid)?;
            seed_fn.values().to_vec()
        }
        None => {
            // stage 1: quotient descent on the unit L^q sphere
            let center = opts.initial_center.unwrap_or_else(|| deepest_node_coord(grid));
            let lambda0 = opts.initial_scale.unwrap_or(grid.diameter() / 50.0);
            let bubble = BubbleParams::new(lambda0, center)?;
            let w0 = bubble.sample(grid, s, BubbleDeriv::Value)?;
            let q = kind.constraint_exponent(consts.p, eps);
            let normalize = |v: &mut Vec<f64>, ws: &Workspace| {
                let norm =
                    (ws.vol * v.iter().map(|x| x.abs().powf(q)).sum::<f64>()).powf(1.0 / q);
                for x in v.iter_mut() {
                    *x /= norm;
                }
            };
            let quotient_parts = |v: &[f64], ws: &Workspace| -> (Vec<f64>, f64) {
                let av = ws.apply_s(v);
                let mut grad: Vec<f64> = av;
                if ws.kind.quotient_eps_correction() {
                    for (g, &x) in grad.iter_mut().zip(v) {
                        *g -= ws.eps * x;
                    }
                }
                let theta = ws.vol * grad.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
                (grad, theta)
            };
            let mut u = w0.values().to_vec();
            normalize(&mut u, &ws);
            let (_, mut theta) = quotient_parts(&u, &ws);
            stage1_values.push(theta);
            let mut step = 0.5 / (basis.eigenvalues()[0].powf(s) + 1.0);
            for _ in 0..opts.stage1_iters {
                counts.stage1 += 1;
                let (grad, th) = quotient_parts(&u, &ws);
                let dir: Vec<f64> = grad
                    .iter()
                    .zip(&u)
                    .map(|(g, &x)| g - th * x.abs().powf(q - 1.0) * x.signum())
                    .collect();
                let dir_norm = ws.vol * dir.iter().map(|x| x * x).sum::<f64>();
                if dir_norm.sqrt() <= 1e-12 * th.abs().max(1e-300) {
                    break;
                }
                let mut improved = false;
                for _ in 0..25 {
                    let mut trial: Vec<f64> =
                        u.iter().zip(&dir).map(|(a, d)| a - step * d).collect();
                    normalize(&mut trial, &ws);
                    let (_, th_trial) = quotient_parts(&trial, &ws);
                    if th_trial < th {
                        u = trial;
                        theta = th_trial;
                        stage1_values.push(th_trial);
                        step *= 1.4;
                        improved = true;
                        break;
                    }
                    step *= 0.4;
                }
                if !improved {
                    break;
                }
            }
            // stage 2: rescale the constrained minimizer to the equation's
            // normalization through its multiplier
            let kappa = if kind.quotient_eps_correction() {
                theta.powf(1.0 / (consts.p - 1.0))
            } else {
                theta.powf(1.0 / (consts.p - 1.0 - eps))
            };
            u.iter().map(|&x| kappa * x.max(0.0)).collect()
        }
    };

    // stage 3: damped Newton
    let u = ws.newton(u_start, opts, &mut counts)?;
    finalize_report(basis, s, eps, kind, &consts, u, counts, stage1_values)
}

/// Multi-peak solve from a sum of projected bubbles at the configuration's
/// scales and centers; on Newton failure eps is halved, at most 3 times.
pub fn solve_multipeak(
    basis: &SpectralBasis,
    s: f64,
    eps: f64,
    init: &ReducedConfig,
    kind: &dyn ProblemKind,
) -> Result<SolveReport> {
    let grid = basis.grid();
    let n = grid.dim();
    let consts = closed_form_constants(n, s)?;
    init.validate(grid)?;
    let opts = SolverOptions::default();
    let mut eps_try = eps;
    let mut last_err = None;
    for _attempt in 0..=3 {
        kind.validate_eps(&consts, basis.eigenvalues()[0].powf(s), eps_try)?;
        let alpha0 = init.alpha0;
        let mut ansatz = vec![0.0f64; grid.node_count()];
        let mut ok = true;
        for i in 0..init.k {
            let scale = init.lambdas[i] * eps_try.powf(alpha0);
            let params = match BubbleParams::new(scale, init.sigmas[i]) {
                Ok(p) => p,
                Err(e) => return Err(e),
            };
            match project_bubble(basis, &params, s) {
                Ok(pb) => {
                    for (a, v) in ansatz.iter_mut().zip(pb.w.values()) {
                        *a += v;
                    }
                }
                Err(e) => {
                    last_err = Some(e);
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            let ws =
                Workspace { basis, s, p: consts.p, eps: eps_try, kind, vol: grid.cell_volume() };
            let mut counts = IterationCounts::default();
            match ws.newton(ansatz, &opts, &mut counts) {
                Ok(u) => {
                    let report = finalize_report(
                        basis,
                        s,
                        eps_try,
                        kind,
                        &consts,
                        u,
                        counts,
                        Vec::new(),
                    )?;
                    verify_peaks(grid, &report.u, init)?;
                    return Ok(report);
                }
                Err(e) => last_err = Some(e),
            }
        }
        eps_try *= 0.5;
    }
    Err(last_err.unwrap_or_else(|| Error::SolverFailure("multipeak ansatz failed".into(), f64::NAN)))
}

/// Exactly k local maxima, each within delta0/2 of a distinct configured
/// center.
fn verify_peaks(
    grid: &crate::grid::DomainGrid,
    u: &GridFunction,
    init: &ReducedConfig,
) -> Result<()> {
    let n = grid.dim();
    let floor = 0.1 * u.max_abs();
    let mut peaks: Vec<usize> = Vec::new();
    'nodes: for node in 0..grid.node_count() {
        let v = u.values()[node];
        if v < floor {
            continue;
        }
        let mi = grid.multi_index(node);
        for d in 0..n {
            for delta in [-1isize, 1] {
                let idx = mi[d] as isize + delta;
                if idx < 0 {
                    continue;
                }
                let mut mm = mi;
                mm[d] = idx as usize;
                if let Some(j) = grid.node_at(&mm[..n]) {
                    if u.values()[j] >= v {
                        continue 'nodes;
                    }
                }
            }
        }
        peaks.push(node);
    }
    if peaks.len() != init.k {
        return Err(Error::SolverFailure(
            format!("merged peaks: found {} local maxima, expected {}", peaks.len(), init.k),
            f64::NAN,
        ));
    }
    let mut used = vec![false; init.k];
    for &peak in &peaks {
        let x = grid.coord(peak);
        let mut matched = false;
        for (i, sigma) in init.sigmas.iter().enumerate() {
            if used[i] {
                continue;
            }
            let dist2: f64 = (0..n).map(|d| (x[d] - sigma[d]) * (x[d] - sigma[d])).sum();
            if dist2.sqrt() <= init.delta0 / 2.0 {
                used[i] = true;
                matched = true;
                break;
            }
        }
        if !matched {
            return Err(Error::SolverFailure(
                "merged peaks: a maximum sits away from every configured center".into(),
                f64::NAN,
            ));
        }
    }
    Ok(())
}

fn deepest_node_coord(grid: &crate::grid::DomainGrid) -> [f64; 3] {
    let mut best = 0usize;
    let mut best_margin = 0usize;
    for node in 0..grid.node_count() {
        let m = grid.cells_to_boundary(node);
        if m > best_margin {
            best_margin = m;
            best = node;
        }
    }
    grid.coord(best)
}

#[allow(clippy::too_many_arguments)]
fn finalize_report(
    basis: &SpectralBasis,
    s: f64,
    eps: f64,
    kind: &dyn ProblemKind,
    consts: &ConstantSet,
    u: Vec<f64>,
    counts: IterationCounts,
    stage1_values: Vec<f64>,
) -> Result<SolveReport> {
    let grid = basis.grid();
    let min = u.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        return Err(Error::SolverFailure(
            format!("converged iterate is not positive (min {min:.3e})"),
            min,
        ));
    }
    let field = GridFunction::new(grid, u)?;
    let au = apply_power(basis, &field, s)?;
    let mut residual_norm = 0.0f64;
    for (a, &ui) in au.values().iter().zip(field.values()) {
        residual_norm = residual_norm.max((a - kind.nonlinearity(ui, consts.p, eps)).abs());
    }
    let vol = grid.cell_volume();
    let energy = 0.5 * weighted_dot(grid, &au, &field)
        - vol
            * field
                .values()
                .iter()
                .map(|&ui| kind.potential(ui, consts.p, eps))
                .sum::<f64>();
    let diag = blowup_diagnostics_inner(grid, &field, consts, kind, eps);
    let h = grid.axes()[0].h;
    let width = diag.mu_eps.powf(-kind.rescale_exponent(grid.dim() as f64, s, eps));
    Ok(SolveReport {
        kind: kind.name().to_string(),
        epsilon: eps,
        u: field,
        energy,
        residual_norm,
        mu_eps: diag.mu_eps,
        x_eps_node: diag.x_eps_node,
        x_eps: diag.x_eps,
        bound_ratio: diag.bound_ratio,
        resolved: width >= CORE_RESOLUTION_NODES * h,
        iterations: counts,
        stage1_values,
    })
}

/// Blow-up diagnostics of a computed solution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlowupDiagnostics {
    pub mu_eps: f64,
    pub x_eps_node: usize,
    pub x_eps: [f64; 3],
    pub bound_ratio: f64,
}

fn blowup_diagnostics_inner(
    grid: &crate::grid::DomainGrid,
    u: &GridFunction,
    consts: &ConstantSet,
    kind: &dyn ProblemKind,
    eps: f64,
) -> BlowupDiagnostics {
    let amp = consts.bubble_amplitude;
    let x_node = u.argmax();
    let mu = u.values()[x_node] / amp;
    let xe = grid.coord(x_node);
    let n = grid.dim();
    let re = kind.rescale_exponent(n as f64, consts.s, eps);
    let half_exp = (n as f64 - 2.0 * consts.s) / 2.0;
    let mut ratio = 0.0f64;
    for node in 0..grid.node_count() {
        let y = grid.coord(node);
        let mut arg2 = 0.0;
        for d in 0..n {
            let t = mu.powf(re) * (y[d] - xe[d]);
            arg2 += t * t;
        }
        let w1 = amp * (1.0 / (1.0 + arg2)).powf(half_exp);
        ratio = ratio.max(u.values()[node] / mu / w1);
    }
    BlowupDiagnostics { mu_eps: mu, x_eps_node: x_node, x_eps: xe, bound_ratio: ratio }
}

/// Diagnostics for an existing report (mu, location, uniform-bound ratio).
pub fn blowup_diagnostics(
    basis: &SpectralBasis,
    report: &SolveReport,
    consts: &ConstantSet,
    kind: &dyn ProblemKind,
) -> BlowupDiagnostics {
    blowup_diagnostics_inner(basis.grid(), &report.u, consts, kind, report.epsilon)
}

/// Rescaled profile b_eps evaluated by interpolation at a rescaled lattice
/// point x (so b(0) = c_{n,s} exactly at the maximum).
pub fn rescaled_profile(
    grid: &crate::grid::DomainGrid,
    report: &SolveReport,
    kind: &dyn ProblemKind,
    s: f64,
    x: &[f64],
) -> f64 {
    let n = grid.dim();
    let re = kind.rescale_exponent(n as f64, s, report.epsilon);
    let mut point = [0.0f64; 3];
    for d in 0..n {
        point[d] = report.x_eps[d] + report.mu_eps.powf(-re) * x[d];
    }
    report.u.interpolate(grid, &point[..n]) / report.mu_eps
}

/// Continuation seed: amplitude and core rescaling of a previous solution to
/// a predicted mu.
pub fn rescale_solution(
    grid: &crate::grid::DomainGrid,
    u_prev: &GridFunction,
    x_eps: &[f64; 3],
    mu_ratio: f64,
    rescale_exponent: f64,
) -> GridFunction {
    let n = grid.dim();
    GridFunction::from_fn(grid, |y| {
        let mut z = [0.0f64; 3];
        for d in 0..n {
            z[d] = x_eps[d] + mu_ratio.powf(rescale_exponent) * (y[d] - x_eps[d]);
        }
        mu_ratio * u_prev.interpolate(grid, &z[..n])
    })
}
