//! Reduced energies over scale/center configurations, their critical points,
//! and the dumbbell-domain generator.
//!
//! The shared Green/Robin block
//!   c1^2 ( sum_i H(sigma_i, sigma_i) lambda_i^{n-2s}
//!          - sum_{i != h} G(sigma_i, sigma_h) (lambda_i lambda_h)^{(n-2s)/2} )
//! is combined with a kind-specific scale penalty (see `ProblemKind`):
//! c2 sum lambda_i^{2s} for the near-critical family and a logarithmic term
//! for the subcritical one.

use crate::constants::ConstantSet;
use crate::error::{Error, Result};
use crate::greens::GreenCache;
use crate::grid::{DomainGrid, Mask2d};
use crate::problem::ProblemKind;
use nalgebra::DMatrix;
use serde::Serialize;

/// A k-peak scale/center configuration inside the admissible set.
#[derive(Debug, Clone, Serialize)]
pub struct ReducedConfig {
    pub k: usize,
    pub lambdas: Vec<f64>,
    pub sigmas: Vec<[f64; 3]>,
    /// admissibility margin delta_0
    pub delta0: f64,
    /// dilation exponent: 1/(n-4s) critical, 1/(n-2s) subcritical
    pub alpha0: f64,
}

impl ReducedConfig {
    pub fn new(
        lambdas: Vec<f64>,
        sigmas: Vec<[f64; 3]>,
        delta0: f64,
        alpha0: f64,
    ) -> Result<Self> {
        if lambdas.is_empty() || lambdas.len() != sigmas.len() {
            return Err(Error::config("configuration needs matching, nonempty scale/center lists"));
        }
        Ok(ReducedConfig { k: lambdas.len(), lambdas, sigmas, delta0, alpha0 })
    }

    /// Default margin: a tenth of the domain diameter.
    pub fn default_delta0(grid: &DomainGrid) -> f64 {
        0.1 * grid.diameter()
    }

    /// Membership in the admissible set O^{delta0}.
    pub fn validate(&self, grid: &DomainGrid) -> Result<()> {
        let n = grid.dim();
        for (i, sigma) in self.sigmas.iter().enumerate() {
            if grid.nearest_node(&sigma[..n]).is_none() {
                return Err(Error::Inadmissible(format!("center {i} is outside the domain")));
            }
            let dist = grid.dist_to_boundary(&sigma[..n]);
            if dist <= self.delta0 {
                return Err(Error::Inadmissible(format!(
                    "center {i} sits {dist:.4} from the boundary, needs > {}",
                    self.delta0
                )));
            }
            let l = self.lambdas[i];
            if !(l > self.delta0 && l < 1.0 / self.delta0) {
                return Err(Error::Inadmissible(format!(
                    "scale {i} = {l} outside (delta0, 1/delta0)"
                )));
            }
            for (j, other) in self.sigmas.iter().enumerate().skip(i + 1) {
                let d2: f64 = (0..n).map(|d| (sigma[d] - other[d]) * (sigma[d] - other[d])).sum();
                if d2.sqrt() <= self.delta0 {
                    return Err(Error::Inadmissible(format!(
                        "centers {i} and {j} are {:.4} apart, need > {}",
                        d2.sqrt(),
                        self.delta0
                    )));
                }
            }
        }
        Ok(())
    }

    /// Flat coordinate vector (lambda_1..lambda_k, sigma_1..sigma_k).
    fn to_vec(&self, n: usize) -> Vec<f64> {
        let mut v = self.lambdas.clone();
        for sigma in &self.sigmas {
            v.extend_from_slice(&sigma[..n]);
        }
        v
    }

    fn from_vec(&self, n: usize, v: &[f64]) -> ReducedConfig {
        let mut out = self.clone();
        out.lambdas = v[..self.k].to_vec();
        for (i, chunk) in v[self.k..].chunks(n).enumerate() {
            for d in 0..n {
                out.sigmas[i][d] = chunk[d];
            }
        }
        out
    }
}

/// Reduced energy of a configuration.
pub fn upsilon(
    cache: &GreenCache,
    consts: &ConstantSet,
    config: &ReducedConfig,
    kind: &dyn ProblemKind,
) -> Result<f64> {
    let grid = cache.basis().grid();
    config.validate(grid)?;
    upsilon_unchecked(cache, consts, config, kind)
}

fn upsilon_unchecked(
    cache: &GreenCache,
    consts: &ConstantSet,
    config: &ReducedConfig,
    kind: &dyn ProblemKind,
) -> Result<f64> {
    let grid = cache.basis().grid();
    let n = grid.dim();
    let nf = n as f64;
    let s = consts.s;
    let half = (nf - 2.0 * s) / 2.0;
    let mut block = 0.0;
    for i in 0..config.k {
        let tau = cache.robin_interp(&config.sigmas[i][..n])?;
        block += tau * config.lambdas[i].powf(nf - 2.0 * s);
        for h in 0..config.k {
            if h == i {
                continue;
            }
            let g = cache.green_interp(&config.sigmas[i][..n], &config.sigmas[h][..n])?;
            block -= g * (config.lambdas[i] * config.lambdas[h]).powf(half);
        }
    }
    Ok(consts.c1 * consts.c1 * block - kind.scale_penalty(consts, &config.lambdas)?)
}

/// Gradient of the reduced energy: analytic in the scales, grid-step central
/// differences in the centers. Length k (n + 1), scales first.
pub fn upsilon_grad(
    cache: &GreenCache,
    consts: &ConstantSet,
    config: &ReducedConfig,
    kind: &dyn ProblemKind,
) -> Result<Vec<f64>> {
    let grid = cache.basis().grid();
    config.validate(grid)?;
    let n = grid.dim();
    let nf = n as f64;
    let s = consts.s;
    let half = (nf - 2.0 * s) / 2.0;
    let c1sq = consts.c1 * consts.c1;
    let mut grad = Vec::with_capacity(config.k * (n + 1));
    for i in 0..config.k {
        let tau = cache.robin_interp(&config.sigmas[i][..n])?;
        let mut dl = (nf - 2.0 * s) * tau * config.lambdas[i].powf(nf - 2.0 * s - 1.0);
        for h in 0..config.k {
            if h == i {
                continue;
            }
            let g = cache.green_interp(&config.sigmas[i][..n], &config.sigmas[h][..n])?;
            // both (i,h) and (h,i) terms of the ordered double sum
            dl -= 2.0
                * g
                * half
                * config.lambdas[i].powf(half - 1.0)
                * config.lambdas[h].powf(half);
        }
        grad.push(c1sq * dl - kind.scale_penalty_dlambda(consts, config.lambdas[i])?);
    }
    // centers by central differences over one grid cell
    let h_cell = grid.axes()[0].h;
    for i in 0..config.k {
        for d in 0..n {
            let mut up = config.clone();
            up.sigmas[i][d] += h_cell;
            let mut dn = config.clone();
            dn.sigmas[i][d] -= h_cell;
            let fu = upsilon_unchecked(cache, consts, &up, kind)?;
            let fd = upsilon_unchecked(cache, consts, &dn, kind)?;
            grad.push((fu - fd) / (2.0 * h_cell));
        }
    }
    Ok(grad)
}

/// A located critical configuration with its diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalConfigReport {
    pub config: ReducedConfig,
    pub upsilon: f64,
    pub grad_norm: f64,
    pub hessian: Vec<Vec<f64>>,
    pub hessian_eigenvalues: Vec<f64>,
    pub iterations: usize,
}

/// Damped Newton / descent on the reduced-energy gradient, projected to stay
/// admissible. Returns the configuration with the numerical Hessian and its
/// eigenvalues as the nondegeneracy proxy for stability.
pub fn find_critical_config(
    cache: &GreenCache,
    consts: &ConstantSet,
    start: &ReducedConfig,
    kind: &dyn ProblemKind,
) -> Result<CriticalConfigReport> {
    let grid = cache.basis().grid();
    start.validate(grid)?;
    let n = grid.dim();
    let dim = start.k * (n + 1);
    let mut x = start.to_vec(n);
    let scale = {
        let v = upsilon_unchecked(cache, consts, start, kind)?.abs();
        v.max(1.0)
    };
    let tol = 1e-8 * scale;
    let mut iterations = 0usize;
    let grad_at = |v: &[f64]| -> Result<Vec<f64>> {
        let cfg = start.from_vec(n, v);
        cfg.validate(grid)
            .map_err(|_| Error::Inadmissible("migrated out of O^delta0".into()))?;
        upsilon_grad(cache, consts, &cfg, kind)
    };
    let mut g = grad_at(&x)?;
    let gnorm = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>().sqrt();
    for _ in 0..60 {
        if gnorm(&g) <= tol {
            break;
        }
        iterations += 1;
        // numerical Hessian by forward differences of the gradient
        let hess = numerical_hessian(&grad_at, &x, &g)?;
        // Newton step with a Levenberg fallback when the solve is poor
        let mut step = solve_dense(&hess, &g)?;
        let mut t = 1.0f64;
        let mut moved = false;
        for _ in 0..25 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a - t * d).collect();
            match grad_at(&trial) {
                Ok(g_trial) if gnorm(&g_trial) < gnorm(&g) => {
                    x = trial;
                    g = g_trial;
                    moved = true;
                    break;
                }
                _ => t *= 0.5,
            }
        }
        if !moved {
            // plain descent along the gradient
            let mut t = 0.1 * x.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min)
                / gnorm(&g).max(1e-300);
            let mut ok = false;
            for _ in 0..25 {
                let trial: Vec<f64> = x.iter().zip(&g).map(|(a, d)| a - t * d).collect();
                if let Ok(g_trial) = grad_at(&trial) {
                    if gnorm(&g_trial) < gnorm(&g) {
                        x = trial;
                        g = g_trial;
                        ok = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !ok {
                step = vec![0.0; dim];
                let _ = step;
                break;
            }
        }
    }
    if gnorm(&g) > tol {
        return Err(Error::SolverFailure(
            "reduced-energy finder did not reach the gradient tolerance".into(),
            gnorm(&g),
        ));
    }
    let config = start.from_vec(n, &x);
    let hess = numerical_hessian(&grad_at, &x, &g)?;
    let m = DMatrix::from_fn(dim, dim, |i, j| 0.5 * (hess[i][j] + hess[j][i]));
    let mut eig: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    Ok(CriticalConfigReport {
        upsilon: upsilon_unchecked(cache, consts, &config, kind)?,
        config,
        grad_norm: gnorm(&g),
        hessian: hess,
        hessian_eigenvalues: eig,
        iterations,
    })
}

fn numerical_hessian(
    grad_at: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    x: &[f64],
    g0: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let dim = x.len();
    let mut hess = vec![vec![0.0f64; dim]; dim];
    for j in 0..dim {
        let dh = 1e-5 * x[j].abs().max(0.05);
        let mut xp = x.to_vec();
        xp[j] += dh;
        let gp = match grad_at(&xp) {
            Ok(g) => g,
            Err(_) => {
                // one-sided toward the interior
                let mut xm = x.to_vec();
                xm[j] -= dh;
                let gm = grad_at(&xm)?;
                for i in 0..dim {
                    hess[i][j] = (g0[i] - gm[i]) / dh;
                }
                continue;
            }
        };
        for i in 0..dim {
            hess[i][j] = (gp[i] - g0[i]) / dh;
        }
    }
    Ok(hess)
}

fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let nd = b.len();
    let mut m = DMatrix::from_fn(nd, nd, |i, j| a[i][j]);
    // mild ridge keeps near-singular Hessians usable as step generators
    let ridge = 1e-12
        * (0..nd).map(|i| m[(i, i)].abs()).fold(0.0f64, f64::max).max(1e-12);
    for i in 0..nd {
        m[(i, i)] += ridge;
    }
    let rhs = nalgebra::DVector::from_column_slice(b);
    m.lu()
        .solve(&rhs)
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::SolverFailure("singular reduced Hessian".into(), f64::NAN))
}

/// k square lobes in a row joined by thin necks, as a 0/1 raster.
/// `lobe` and `neck` are physical lengths; the gap between lobes equals the
/// lobe side.
pub fn dumbbell_mask(k: usize, lobe: f64, neck: f64, h: f64) -> Result<Mask2d> {
    if k == 0 {
        return Err(Error::config("dumbbell needs at least one lobe"));
    }
    let lobe_cells = (lobe / h).round() as usize;
    let neck_cells = (neck / h).round() as usize;
    if lobe_cells < 3 {
        return Err(Error::config("lobe too small for the spacing"));
    }
    if neck_cells < 2 {
        return Err(Error::config("neck must span at least 2 cells"));
    }
    if neck_cells > lobe_cells {
        return Err(Error::config("neck wider than the lobes"));
    }
    let rows = lobe_cells;
    let cols = k * lobe_cells + (k - 1) * lobe_cells;
    if rows * cols > 40_000_000 {
        return Err(Error::config("dumbbell raster too large"));
    }
    let mut cells = vec![false; rows * cols];
    for lobe_idx in 0..k {
        let c0 = lobe_idx * 2 * lobe_cells;
        for r in 0..rows {
            for c in c0..c0 + lobe_cells {
                cells[r * cols + c] = true;
            }
        }
    }
    // necks centered vertically in the gaps
    let r0 = (rows - neck_cells) / 2;
    for gap in 0..k.saturating_sub(1) {
        let c0 = gap * 2 * lobe_cells + lobe_cells;
        for r in r0..r0 + neck_cells {
            for c in c0..c0 + lobe_cells {
                cells[r * cols + c] = true;
            }
        }
    }
    Mask2d::new(rows, cols, h, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::SpectralBasis;
    use crate::constants::closed_form_constants;
    use crate::greens::RobinMethod;
    use crate::problem::lookup_kind;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn interval_setup() -> (Arc<SpectralBasis>, GreenCache, ConstantSet) {
        let basis = Arc::new(SpectralBasis::build_box(&[(-1.0, 1.0)], 2.0 / 128.0).unwrap());
        let cache = GreenCache::build(&basis, 0.2, RobinMethod::LatticeMatched).unwrap();
        let consts = closed_form_constants(1, 0.2).unwrap();
        (basis, cache, consts)
    }

    #[test]
    fn single_peak_upsilon_matches_direct_formula() {
        let (_basis, cache, consts) = interval_setup();
        let kind = lookup_kind("critical").unwrap();
        let cfg = ReducedConfig::new(vec![1.3], vec![[0.0; 3]], 0.2, 5.0).unwrap();
        let got = upsilon(&cache, &consts, &cfg, kind).unwrap();
        let grid = cache.basis().grid();
        let tau = cache.robin_interp(&[0.0]).unwrap();
        let _ = grid;
        let expect = consts.c1 * consts.c1 * tau * 1.3f64.powf(0.6)
            - consts.c2.unwrap().corrected * 1.3f64.powf(0.4);
        assert_relative_eq!(got, expect, max_relative = 1e-12);
    }

    #[test]
    fn upsilon_is_permutation_invariant() {
        let (_basis, cache, consts) = interval_setup();
        let kind = lookup_kind("critical").unwrap();
        let a = ReducedConfig::new(
            vec![0.8, 1.4],
            vec![[-0.4, 0.0, 0.0], [0.45, 0.0, 0.0]],
            0.15,
            5.0,
        )
        .unwrap();
        let b = ReducedConfig::new(
            vec![1.4, 0.8],
            vec![[0.45, 0.0, 0.0], [-0.4, 0.0, 0.0]],
            0.15,
            5.0,
        )
        .unwrap();
        let ua = upsilon(&cache, &consts, &a, kind).unwrap();
        let ub = upsilon(&cache, &consts, &b, kind).unwrap();
        assert_relative_eq!(ua, ub, max_relative = 1e-13);
        let sub = lookup_kind("subcritical").unwrap();
        let ua = upsilon(&cache, &consts, &a, sub).unwrap();
        let ub = upsilon(&cache, &consts, &b, sub).unwrap();
        assert_relative_eq!(ua, ub, max_relative = 1e-13);
    }

    #[test]
    fn upsilon_blows_up_as_centers_merge() {
        let (_basis, cache, consts) = interval_setup();
        let kind = lookup_kind("critical").unwrap();
        let mut last = f64::NEG_INFINITY;
        // shrink the separation toward the delta0 guard: |Upsilon| grows
        for &sep in &[0.8, 0.5, 0.3, 0.2] {
            let cfg = ReducedConfig::new(
                vec![1.0, 1.0],
                vec![[-sep / 2.0, 0.0, 0.0], [sep / 2.0, 0.0, 0.0]],
                0.08,
                5.0,
            )
            .unwrap();
            let v = upsilon(&cache, &consts, &cfg, kind).unwrap();
            assert!(v.abs() > last * 0.99 || last == f64::NEG_INFINITY);
            last = v.abs();
        }
        // inside the guard the configuration is rejected outright
        let too_close = ReducedConfig::new(
            vec![1.0, 1.0],
            vec![[-0.03, 0.0, 0.0], [0.03, 0.0, 0.0]],
            0.08,
            5.0,
        )
        .unwrap();
        assert!(upsilon(&cache, &consts, &too_close, kind).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (_basis, cache, consts) = interval_setup();
        for kind_name in ["critical", "subcritical"] {
            let kind = lookup_kind(kind_name).unwrap();
            let cfg = ReducedConfig::new(
                vec![0.9, 1.6],
                vec![[-0.35, 0.0, 0.0], [0.4, 0.0, 0.0]],
                0.12,
                5.0,
            )
            .unwrap();
            let grad = upsilon_grad(&cache, &consts, &cfg, kind).unwrap();
            // lambda components against central differences of upsilon
            for i in 0..2 {
                let dh = 1e-6;
                let mut up = cfg.clone();
                up.lambdas[i] += dh;
                let mut dn = cfg.clone();
                dn.lambdas[i] -= dh;
                let fd = (upsilon(&cache, &consts, &up, kind).unwrap()
                    - upsilon(&cache, &consts, &dn, kind).unwrap())
                    / (2.0 * dh);
                assert_relative_eq!(grad[i], fd, max_relative = 1e-6);
            }
            // sigma components are grid central differences by construction;
            // check them against an independent evaluation
            let h = cache.basis().grid().axes()[0].h;
            for i in 0..2 {
                let mut up = cfg.clone();
                up.sigmas[i][0] += h;
                let mut dn = cfg.clone();
                dn.sigmas[i][0] -= h;
                let fd = (upsilon(&cache, &consts, &up, kind).unwrap()
                    - upsilon(&cache, &consts, &dn, kind).unwrap())
                    / (2.0 * h);
                assert_relative_eq!(grad[2 + i], fd, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn symmetric_single_peak_center_gradient_vanishes() {
        let (_basis, cache, consts) = interval_setup();
        let kind = lookup_kind("critical").unwrap();
        let cfg = ReducedConfig::new(vec![1.0], vec![[0.0; 3]], 0.2, 5.0).unwrap();
        let grad = upsilon_grad(&cache, &consts, &cfg, kind).unwrap();
        let scale = upsilon(&cache, &consts, &cfg, kind).unwrap().abs();
        assert!(grad[1].abs() <= 1e-4 * scale.max(1.0), "sigma gradient {}", grad[1]);
    }

    #[test]
    fn single_peak_finder_matches_closed_form() {
        let (_basis, cache, consts) = interval_setup();
        let kind = lookup_kind("critical").unwrap();
        let tau = cache.robin_interp(&[0.0]).unwrap();
        let (n, s) = (1.0, 0.2);
        let c2 = consts.c2.unwrap().corrected;
        let lambda_star = (2.0 * s * c2 / ((n - 2.0 * s) * consts.c1 * consts.c1 * tau))
            .powf(1.0 / (n - 4.0 * s));
        // n - 4s = 0.2 puts lambda* around 1e2; the admissible window has to
        // be wide enough to hold it
        let delta0 = 0.004;
        // gradient vanishes at the closed-form scale
        let cfg =
            ReducedConfig::new(vec![lambda_star], vec![[0.0; 3]], delta0, 5.0).unwrap();
        let grad = upsilon_grad(&cache, &consts, &cfg, kind).unwrap();
        let gscale = upsilon(&cache, &consts, &cfg, kind).unwrap().abs() / lambda_star;
        assert!(grad[0].abs() <= 1e-8 * gscale.max(1.0), "grad {} scale {}", grad[0], gscale);
        // the finder reaches it from a generic admissible start
        let start =
            ReducedConfig::new(vec![30.0], vec![[0.05, 0.0, 0.0]], delta0, 5.0).unwrap();
        let found = find_critical_config(&cache, &consts, &start, kind).unwrap();
        assert_relative_eq!(found.config.lambdas[0], lambda_star, max_relative = 1e-6);
        assert!(found.config.sigmas[0][0].abs() <= 2.0 * cache.basis().grid().axes()[0].h);
        // restarting at the solution stays put
        let again = find_critical_config(&cache, &consts, &found.config, kind).unwrap();
        assert!(again.iterations <= 1);
    }

    #[test]
    fn dumbbell_mask_shape_and_symmetry() {
        let mask = dumbbell_mask(2, 0.5, 0.125, 1.0 / 16.0).unwrap();
        assert!(mask.is_connected());
        // symmetric under horizontal flip
        for r in 0..mask.rows {
            for c in 0..mask.cols {
                assert_eq!(mask.at(r, c), mask.at(r, mask.cols - 1 - c));
            }
        }
        // neck of 2 cells still connects
        let thin = dumbbell_mask(2, 0.5, 2.0 / 16.0, 1.0 / 16.0).unwrap();
        assert!(thin.is_connected());
        assert!(dumbbell_mask(2, 0.5, 0.01, 1.0 / 16.0).is_err());
        assert!(dumbbell_mask(0, 0.5, 0.1, 1.0 / 16.0).is_err());
    }

    #[test]
    fn admissibility_guards() {
        let grid = DomainGrid::new_box(&[(-1.0, 1.0)], 2.0 / 64.0).unwrap();
        // too close to the boundary
        let cfg = ReducedConfig::new(vec![1.0], vec![[0.95, 0.0, 0.0]], 0.2, 5.0).unwrap();
        assert!(cfg.validate(&grid).is_err());
        // scale outside the window
        let cfg = ReducedConfig::new(vec![0.05], vec![[0.0; 3]], 0.2, 5.0).unwrap();
        assert!(cfg.validate(&grid).is_err());
        // separation guard
        let cfg = ReducedConfig::new(
            vec![1.0, 1.0],
            vec![[-0.05, 0.0, 0.0], [0.05, 0.0, 0.0]],
            0.2,
            5.0,
        )
        .unwrap();
        assert!(cfg.validate(&grid).is_err());
    }
}
