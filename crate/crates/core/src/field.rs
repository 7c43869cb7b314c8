//! Fields on interior grid nodes and their spectral coefficient vectors.

use crate::error::{Error, Result};
use crate::grid::DomainGrid;

/// One real value per interior node; Dirichlet zero outside the node set.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid_id: u64,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: &DomainGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::mismatch(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("field contains non-finite values"));
        }
        Ok(GridFunction { grid_id: grid.id(), values })
    }

    pub fn zeros(grid: &DomainGrid) -> Self {
        GridFunction { grid_id: grid.id(), values: vec![0.0; grid.node_count()] }
    }

    /// Sample a function of the node coordinates.
    pub fn from_fn(grid: &DomainGrid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let values = (0..grid.node_count())
            .map(|i| {
                let xyz = grid.coord(i);
                f(&xyz[..dim])
            })
            .collect();
        GridFunction { grid_id: grid.id(), values }
    }

    pub fn grid_id(&self) -> u64 {
        self.grid_id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn check_grid(&self, grid: &DomainGrid) -> Result<()> {
        if self.grid_id != grid.id() {
            return Err(Error::mismatch("field belongs to a different grid"));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Multilinear interpolation at a physical point; zero outside the
    /// Dirichlet hull (exterior lattice cells contribute zero).
    pub fn interpolate(&self, grid: &DomainGrid, point: &[f64]) -> f64 {
        let dim = grid.dim();
        let mut base = [0isize; 3];
        let mut frac = [0.0f64; 3];
        for d in 0..dim {
            let a = &grid.axes()[d];
            let t = (point[d] - a.min) / a.h - 1.0; // node k sits at t = k
            let fl = t.floor();
            base[d] = fl as isize;
            frac[d] = t - fl;
            if t < -1.0 || t > a.n as f64 {
                return 0.0;
            }
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut mi = [0usize; 3];
            let mut inside = true;
            for d in 0..dim {
                let up = (corner >> d) & 1 == 1;
                let idx = base[d] + if up { 1 } else { 0 };
                w *= if up { frac[d] } else { 1.0 - frac[d] };
                if idx < 0 || idx >= grid.axes()[d].n as isize {
                    inside = false; // Dirichlet zero beyond the last node
                } else {
                    mi[d] = idx as usize;
                }
            }
            if inside && w != 0.0 {
                if let Some(node) = grid.node_at(&mi[..dim]) {
                    acc += w * self.values[node];
                }
            }
        }
        acc
    }
}

/// Weighted discrete inner product <u, v> = vol * sum u_i v_i.
pub fn weighted_dot(grid: &DomainGrid, u: &GridFunction, v: &GridFunction) -> f64 {
    debug_assert_eq!(u.grid_id(), grid.id());
    debug_assert_eq!(v.grid_id(), grid.id());
    let w = grid.cell_volume();
    w * u.values().iter().zip(v.values()).map(|(a, b)| a * b).sum::<f64>()
}

/// Discrete L^q norm, (sum w |u_i|^q)^{1/q}; q = infinity gives max |u_i|.
pub fn lp_norm(grid: &DomainGrid, u: &GridFunction, q: f64) -> Result<f64> {
    u.check_grid(grid)?;
    if q.is_infinite() && q > 0.0 {
        return Ok(u.max_abs());
    }
    if !(q >= 1.0) {
        return Err(Error::domain(format!("lp_norm requires q >= 1 or infinity, got {q}")));
    }
    let w = grid.cell_volume();
    let sum: f64 = u.values().iter().map(|v| v.abs().powf(q)).sum();
    Ok((w * sum).powf(1.0 / q))
}

/// Coefficient vector of a field in a spectral basis.
#[derive(Debug, Clone)]
pub struct SpectralCoeffs {
    basis_id: u64,
    values: Vec<f64>,
}

impl SpectralCoeffs {
    pub(crate) fn new_unchecked(basis_id: u64, values: Vec<f64>) -> Self {
        SpectralCoeffs { basis_id, values }
    }

    pub fn basis_id(&self) -> u64 {
        self.basis_id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainGrid;
    use approx::assert_relative_eq;

    #[test]
    fn lp_norm_of_constant_one() {
        let g = DomainGrid::new_box(&[(0.0, 1.0)], 1.0 / 256.0).unwrap();
        let u = GridFunction::from_fn(&g, |_| 1.0);
        // interior quadrature of 1 over (0,1) misses half a cell at each end
        let l2 = lp_norm(&g, &u, 2.0).unwrap();
        assert_relative_eq!(l2, 1.0, max_relative = 3e-3);
        let linf = lp_norm(&g, &u, f64::INFINITY).unwrap();
        assert_eq!(linf, 1.0);
    }

    #[test]
    fn lp_norm_rejects_small_exponent() {
        let g = DomainGrid::new_box(&[(0.0, 1.0)], 0.25).unwrap();
        let u = GridFunction::from_fn(&g, |x| x[0]);
        assert!(lp_norm(&g, &u, 0.5).is_err());
    }

    #[test]
    fn infinity_norm_is_max_abs_nodal_value() {
        let g = DomainGrid::new_box(&[(0.0, 1.0)], 0.125).unwrap();
        let u = GridFunction::from_fn(&g, |x| (x[0] - 0.3) * (x[0] + 2.0));
        let m = u.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert_eq!(lp_norm(&g, &u, f64::INFINITY).unwrap(), m);
    }

    #[test]
    fn interpolation_reproduces_nodal_and_linear_fields() {
        let g = DomainGrid::new_box(&[(-1.0, 1.0)], 0.25).unwrap();
        let u = GridFunction::from_fn(&g, |x| 0.5 + 0.25 * x[0]);
        for node in 0..g.node_count() {
            let x = g.coord(node);
            assert_relative_eq!(u.interpolate(&g, &x[..1]), u.values()[node], epsilon = 1e-14);
        }
        // halfway between nodes a linear field is reproduced exactly
        assert_relative_eq!(u.interpolate(&g, &[0.125]), 0.5 + 0.25 * 0.125, epsilon = 1e-14);
        // outside the domain hull the extension is zero
        assert_eq!(u.interpolate(&g, &[5.0]), 0.0);
    }

    #[test]
    fn field_length_is_checked() {
        let g = DomainGrid::new_box(&[(0.0, 1.0)], 0.25).unwrap();
        assert!(GridFunction::new(&g, vec![0.0; 2]).is_err());
        assert!(GridFunction::new(&g, vec![f64::NAN; 3]).is_err());
    }
}
