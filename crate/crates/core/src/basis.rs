//! Eigenbasis of the discrete Dirichlet Laplacian.
//!
//! Box grids get the analytic tensor sine basis with FFT-backed transforms;
//! masked 2D grids get a dense symmetric eigendecomposition of the 5-point
//! stencil. Both expose the same interface: eigenvalues ascending, forward
//! and inverse transforms that are discretely orthonormal under the
//! cell-volume inner product.

use crate::error::{Error, Result};
use crate::field::{GridFunction, SpectralCoeffs};
use crate::grid::{DomainGrid, GridKind, Mask2d};
use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Default cap on dense eigendecompositions of masked grids.
pub const DENSE_EIGEN_CAP: usize = 6000;

struct AxisSpectral {
    n: usize,
    len: f64,
    eigen: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

enum BasisKind {
    BoxSine {
        axes: Vec<AxisSpectral>,
        /// sorted position -> tensor index; None when tensor order is
        /// already ascending (1D)
        perm: Option<Vec<u32>>,
    },
    Dense {
        /// columns are eigenvectors, discretely orthonormal under the
        /// cell-volume inner product
        vectors: DMatrix<f64>,
    },
}

pub struct SpectralBasis {
    id: u64,
    grid: Arc<DomainGrid>,
    eigenvalues: Vec<f64>,
    kind: BasisKind,
}

impl SpectralBasis {
    /// Full sine eigenbasis of the second-order finite-difference Laplacian
    /// on a box grid. Eigenvalues are sums over axes of
    /// (2/h^2)(1 - cos(k pi h / L)).
    pub fn box_basis(grid: Arc<DomainGrid>) -> Result<SpectralBasis> {
        if grid.kind() != GridKind::Box {
            return Err(Error::config("box_basis requires a box grid"));
        }
        let mut planner = FftPlanner::<f64>::new();
        let mut axes = Vec::new();
        for axis in grid.axes() {
            let n = axis.n;
            let h = axis.h;
            let eigen: Vec<f64> = (1..=n)
                .map(|k| 2.0 / (h * h) * (1.0 - (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos()))
                .collect();
            let fft = planner.plan_fft_forward(2 * (n + 1));
            axes.push(AxisSpectral { n, len: axis.len(), eigen, fft });
        }
        // tensor eigenvalues, then sort ascending
        let m = grid.node_count();
        let mut eigenvalues = vec![0.0f64; m];
        tensor_sums(&axes, &mut eigenvalues);
        let perm = if axes.len() == 1 {
            None
        } else {
            let mut idx: Vec<u32> = (0..m as u32).collect();
            idx.sort_by(|&a, &b| eigenvalues[a as usize].total_cmp(&eigenvalues[b as usize]));
            eigenvalues = idx.iter().map(|&i| eigenvalues[i as usize]).collect();
            Some(idx)
        };
        Ok(SpectralBasis {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            grid,
            eigenvalues,
            kind: BasisKind::BoxSine { axes, perm },
        })
    }

    /// Convenience constructor: build the grid and its box basis together.
    pub fn build_box(bounds: &[(f64, f64)], h: f64) -> Result<SpectralBasis> {
        let grid = Arc::new(DomainGrid::new_box(bounds, h)?);
        SpectralBasis::box_basis(grid)
    }

    /// Dense eigendecomposition of the symmetric 5-point stencil on a masked
    /// grid, capped at `cap` nodes (default `DENSE_EIGEN_CAP`).
    pub fn masked_basis(mask: &Mask2d, cap: Option<usize>) -> Result<SpectralBasis> {
        let grid = Arc::new(DomainGrid::new_mask(mask)?);
        let m = grid.node_count();
        let cap = cap.unwrap_or(DENSE_EIGEN_CAP);
        if m > cap {
            return Err(Error::config(format!(
                "mask has {m} interior nodes, above the dense-eigensolver cap {cap}; use a coarser grid"
            )));
        }
        let h = grid.axes()[0].h;
        let inv_h2 = 1.0 / (h * h);
        let mut a = DMatrix::<f64>::zeros(m, m);
        for node in 0..m {
            let mi = grid.multi_index(node);
            a[(node, node)] = 4.0 * inv_h2;
            let neighbors = [
                [mi[0].wrapping_sub(1), mi[1]],
                [mi[0] + 1, mi[1]],
                [mi[0], mi[1].wrapping_sub(1)],
                [mi[0], mi[1] + 1],
            ];
            for nb in neighbors {
                if let Some(j) = grid.node_at(&nb) {
                    a[(node, j)] = -inv_h2;
                }
            }
        }
        let eig = a.symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let w_sqrt = grid.cell_volume().sqrt();
        let mut vectors = DMatrix::<f64>::zeros(m, m);
        for (col, &src) in order.iter().enumerate() {
            let v = eig.eigenvectors.column(src);
            for row in 0..m {
                vectors[(row, col)] = v[row] / w_sqrt;
            }
        }
        Ok(SpectralBasis {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            grid,
            eigenvalues,
            kind: BasisKind::Dense { vectors },
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> Arc<DomainGrid> {
        Arc::clone(&self.grid)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues in ascending order, units 1/length^2.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// k-th eigenvector as a grid function (k indexes the ascending order).
    pub fn eigenvector(&self, k: usize) -> GridFunction {
        let mut coeffs = vec![0.0; self.len()];
        coeffs[k] = 1.0;
        self.synthesize(&SpectralCoeffs::new_unchecked(self.id, coeffs))
            .expect("own coefficients")
    }

    /// Value of the k-th eigenvector (ascending order) at one node.
    pub fn mode_value(&self, k: usize, node: usize) -> f64 {
        match &self.kind {
            BasisKind::BoxSine { axes, perm } => {
                let tensor = match perm {
                    None => k,
                    Some(p) => p[k] as usize,
                };
                let mi = self.grid.multi_index(node);
                // decompose the tensor index, last axis fastest
                let mut rest = tensor;
                let mut modes = [0usize; 3];
                for d in (0..axes.len()).rev() {
                    modes[d] = rest % axes[d].n;
                    rest /= axes[d].n;
                }
                let mut val = 1.0;
                for (d, a) in axes.iter().enumerate() {
                    let arg = std::f64::consts::PI
                        * (modes[d] as f64 + 1.0)
                        * (mi[d] as f64 + 1.0)
                        / (a.n as f64 + 1.0);
                    val *= (2.0 / a.len).sqrt() * arg.sin();
                }
                val
            }
            BasisKind::Dense { vectors } => vectors[(node, k)],
        }
    }

    /// Forward transform: weighted projections a_k = <u, phi_k>.
    pub fn analyze(&self, u: &GridFunction) -> Result<SpectralCoeffs> {
        u.check_grid(&self.grid)?;
        let values = match &self.kind {
            BasisKind::BoxSine { axes, perm } => {
                let mut data = u.values().to_vec();
                let mut scale = self.grid.cell_volume();
                for a in axes {
                    scale *= (2.0 / a.len).sqrt();
                }
                dst_all_axes(axes, &mut data);
                for v in &mut data {
                    *v *= scale;
                }
                apply_perm(perm.as_deref(), &data)
            }
            BasisKind::Dense { vectors } => {
                let w = self.grid.cell_volume();
                let uv = nalgebra::DVector::from_column_slice(u.values());
                let a = vectors.tr_mul(&uv) * w;
                a.iter().copied().collect()
            }
        };
        Ok(SpectralCoeffs::new_unchecked(self.id, values))
    }

    /// Inverse transform: u = sum a_k phi_k.
    pub fn synthesize(&self, coeffs: &SpectralCoeffs) -> Result<GridFunction> {
        if coeffs.basis_id() != self.id {
            return Err(Error::mismatch("coefficients belong to a different basis"));
        }
        let values = match &self.kind {
            BasisKind::BoxSine { axes, perm } => {
                let mut data = invert_perm(perm.as_deref(), coeffs.values());
                let mut scale = 1.0;
                for a in axes {
                    scale *= (2.0 / a.len).sqrt();
                }
                dst_all_axes(axes, &mut data);
                for v in &mut data {
                    *v *= scale;
                }
                data
            }
            BasisKind::Dense { vectors } => {
                let av = nalgebra::DVector::from_column_slice(coeffs.values());
                let u = vectors * av;
                u.iter().copied().collect()
            }
        };
        GridFunction::new(&self.grid, values)
    }

    /// Coefficient-space application of diag(lambda^sigma); the workhorse of
    /// the fractional operator.
    pub fn scale_coeffs(&self, coeffs: &mut SpectralCoeffs, sigma: f64) -> Result<()> {
        if coeffs.basis_id() != self.id {
            return Err(Error::mismatch("coefficients belong to a different basis"));
        }
        for (a, l) in coeffs.values_mut().iter_mut().zip(&self.eigenvalues) {
            *a *= l.powf(sigma);
        }
        Ok(())
    }

    /// Apply the plain second-order Dirichlet Laplacian stencil; used as the
    /// sigma = 1 consistency oracle.
    pub fn laplacian_stencil(&self, u: &GridFunction) -> Result<GridFunction> {
        u.check_grid(&self.grid)?;
        let g = &self.grid;
        let dim = g.dim();
        let mut out = vec![0.0; g.node_count()];
        let inv_h2: Vec<f64> = g.axes().iter().map(|a| 1.0 / (a.h * a.h)).collect();
        for node in 0..g.node_count() {
            let mi = g.multi_index(node);
            let mut acc = 0.0;
            for d in 0..dim {
                let mut m = mi;
                acc += 2.0 * inv_h2[d] * u.values()[node];
                if mi[d] > 0 {
                    m[d] = mi[d] - 1;
                    if let Some(j) = g.node_at(&m[..dim]) {
                        acc -= inv_h2[d] * u.values()[j];
                    }
                }
                m = mi;
                m[d] = mi[d] + 1;
                if let Some(j) = g.node_at(&m[..dim]) {
                    acc -= inv_h2[d] * u.values()[j];
                }
            }
            out[node] = acc;
        }
        GridFunction::new(g, out)
    }

    /// Largest off-diagonal / diagonal-defect entry of the Gram matrix over a
    /// set of eigenvector indices. Exhaustive check used by tests.
    pub fn orthonormality_defect(&self, indices: &[usize]) -> f64 {
        let w = self.grid.cell_volume();
        let vecs: Vec<GridFunction> = indices.iter().map(|&k| self.eigenvector(k)).collect();
        let mut worst = 0.0f64;
        for (i, vi) in vecs.iter().enumerate() {
            for (j, vj) in vecs.iter().enumerate() {
                let dot =
                    w * vi.values().iter().zip(vj.values()).map(|(a, b)| a * b).sum::<f64>();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

fn apply_perm(perm: Option<&[u32]>, data: &[f64]) -> Vec<f64> {
    match perm {
        None => data.to_vec(),
        Some(p) => p.iter().map(|&i| data[i as usize]).collect(),
    }
}

fn invert_perm(perm: Option<&[u32]>, data: &[f64]) -> Vec<f64> {
    match perm {
        None => data.to_vec(),
        Some(p) => {
            let mut out = vec![0.0; data.len()];
            for (sorted_pos, &tensor_idx) in p.iter().enumerate() {
                out[tensor_idx as usize] = data[sorted_pos];
            }
            out
        }
    }
}

/// Unnormalized DST-I along every axis of a row-major tensor array
/// (last axis fastest).
fn dst_all_axes(axes: &[AxisSpectral], data: &mut [f64]) {
    let shape: Vec<usize> = axes.iter().map(|a| a.n).collect();
    for (d, axis) in axes.iter().enumerate() {
        dst_axis(axis, &shape, d, data);
    }
}

fn dst_axis(axis: &AxisSpectral, shape: &[usize], d: usize, data: &mut [f64]) {
    let n = axis.n;
    let m = 2 * (n + 1);
    let after: usize = shape[d + 1..].iter().product();
    let before: usize = shape[..d].iter().product();
    let mut buf = vec![Complex::new(0.0, 0.0); m];
    let mut scratch = vec![Complex::new(0.0, 0.0); axis.fft.get_inplace_scratch_len()];
    for b in 0..before {
        for a in 0..after {
            let base = b * n * after + a;
            // odd extension: y_0 = y_{n+1} = 0, y_k = v_k, y_{m-k} = -v_k
            buf[0] = Complex::new(0.0, 0.0);
            buf[n + 1] = Complex::new(0.0, 0.0);
            for k in 0..n {
                let v = data[base + k * after];
                buf[k + 1] = Complex::new(v, 0.0);
                buf[m - 1 - k] = Complex::new(-v, 0.0);
            }
            axis.fft.process_with_scratch(&mut buf, &mut scratch);
            for k in 0..n {
                data[base + k * after] = -0.5 * buf[k + 1].im;
            }
        }
    }
}

/// Helper shared by box construction: fill `out` with all tensor sums of the
/// per-axis eigenvalues, row-major with the last axis fastest.
fn tensor_sums(axes: &[AxisSpectral], out: &mut [f64]) {
    let dims: Vec<usize> = axes.iter().map(|a| a.n).collect();
    let mut idx = vec![0usize; dims.len()];
    for slot in out.iter_mut() {
        *slot = idx.iter().enumerate().map(|(d, &k)| axes[d].eigen[k]).sum();
        for d in (0..dims.len()).rev() {
            idx[d] += 1;
            if idx[d] < dims[d] {
                break;
            }
            idx[d] = 0;
        }
    }
}
