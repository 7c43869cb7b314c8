//! Uniform tensor grids on boxes and masked 2D domains.
//!
//! Quadrature is the plain cell-volume rule: every interior node carries the
//! weight prod_d h_d, and Dirichlet values outside the node set are hard
//! zeros. Masked domains must be edge-connected.

use crate::error::{Error, Result};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Box,
    Mask2d,
}

/// One axis of a tensor grid: interval (min, max) with `n` interior nodes at
/// spacing `h`, so max - min = (n + 1) h.
#[derive(Debug, Clone)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
    pub h: f64,
}

impl Axis {
    /// Coordinate of the k-th interior node (0-based).
    pub fn coord(&self, k: usize) -> f64 {
        self.min + (k as f64 + 1.0) * self.h
    }

    pub fn len(&self) -> f64 {
        self.max - self.min
    }
}

/// A 2D boolean raster of interior nodes with lattice spacing `h`.
#[derive(Debug, Clone)]
pub struct Mask2d {
    pub rows: usize,
    pub cols: usize,
    pub h: f64,
    /// row-major, `true` marks an interior node
    pub cells: Vec<bool>,
}

impl Mask2d {
    pub fn new(rows: usize, cols: usize, h: f64, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != rows * cols {
            return Err(Error::config(format!(
                "mask raster has {} entries, expected {} x {}",
                cells.len(),
                rows,
                cols
            )));
        }
        if !(h > 0.0) {
            return Err(Error::config("mask spacing must be positive"));
        }
        Ok(Mask2d { rows, cols, h, cells })
    }

    pub fn full(rows: usize, cols: usize, h: f64) -> Self {
        Mask2d { rows, cols, h, cells: vec![true; rows * cols] }
    }

    pub fn at(&self, r: usize, c: usize) -> bool {
        self.cells[r * self.cols + c]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    /// Parse the plain-text format: one-line header `rows cols h`, then a
    /// 0/1 raster (whitespace optional inside rows).
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::config("empty mask file"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::config("mask header must be `rows cols h`"));
        }
        let rows: usize = parts[0].parse().map_err(|_| Error::config("bad mask rows"))?;
        let cols: usize = parts[1].parse().map_err(|_| Error::config("bad mask cols"))?;
        let h: f64 = parts[2].parse().map_err(|_| Error::config("bad mask spacing"))?;
        let mut cells = Vec::with_capacity(rows * cols);
        for line in lines {
            for ch in line.chars() {
                match ch {
                    '0' => cells.push(false),
                    '1' => cells.push(true),
                    c if c.is_whitespace() => {}
                    c => return Err(Error::config(format!("bad mask character {c:?}"))),
                }
            }
        }
        Mask2d::new(rows, cols, h, cells)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.rows, self.cols, self.h);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(if self.at(r, c) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read mask {path:?}: {e}")))?;
        Mask2d::from_text(&text)
    }

    /// True when the interior nodes form a single edge-connected component.
    pub fn is_connected(&self) -> bool {
        let total = self.count();
        if total == 0 {
            return false;
        }
        let start = self.cells.iter().position(|&b| b).unwrap();
        let mut seen = vec![false; self.cells.len()];
        let mut stack = vec![start];
        seen[start] = true;
        let mut reached = 0usize;
        while let Some(idx) = stack.pop() {
            reached += 1;
            let (r, c) = (idx / self.cols, idx % self.cols);
            let mut push = |rr: usize, cc: usize| {
                let j = rr * self.cols + cc;
                if self.cells[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if r > 0 {
                push(r - 1, c);
            }
            if r + 1 < self.rows {
                push(r + 1, c);
            }
            if c > 0 {
                push(r, c - 1);
            }
            if c + 1 < self.cols {
                push(r, c + 1);
            }
        }
        reached == total
    }
}

/// Interior nodes of a bounded domain with uniform spacing and cell-volume
/// quadrature weights.
#[derive(Debug)]
pub struct DomainGrid {
    id: u64,
    kind: GridKind,
    axes: Vec<Axis>,
    /// mask grids: per-node lattice position (row, col)
    lattice: Vec<(u32, u32)>,
    /// mask grids: row-major raster -> node index, usize::MAX when exterior
    raster_index: Vec<usize>,
    node_count: usize,
}

impl DomainGrid {
    /// Tensor-product box grid. `bounds` is one (min, max) pair per axis and
    /// `h` must divide every side length.
    pub fn new_box(bounds: &[(f64, f64)], h: f64) -> Result<DomainGrid> {
        if bounds.is_empty() || bounds.len() > 3 {
            return Err(Error::config("box grids support 1 to 3 axes"));
        }
        if !(h > 0.0) {
            return Err(Error::config("spacing must be positive"));
        }
        let mut axes = Vec::with_capacity(bounds.len());
        for &(min, max) in bounds {
            if !(max > min) {
                return Err(Error::config("empty box side"));
            }
            let side = max - min;
            let cells = side / h;
            let rounded = cells.round();
            if (cells - rounded).abs() > 1e-9 * cells.max(1.0) || rounded < 2.0 {
                return Err(Error::config(format!(
                    "spacing {h} does not divide side ({min}, {max}) into at least 2 cells"
                )));
            }
            let n = rounded as usize - 1;
            axes.push(Axis { min, max, n, h });
        }
        let node_count = axes.iter().map(|a| a.n).product();
        Ok(DomainGrid {
            id: fresh_id(),
            kind: GridKind::Box,
            axes,
            lattice: Vec::new(),
            raster_index: Vec::new(),
            node_count,
        })
    }

    /// Masked 2D grid; the mask must be connected.
    pub fn new_mask(mask: &Mask2d) -> Result<DomainGrid> {
        if mask.count() == 0 {
            return Err(Error::config("mask has no interior nodes"));
        }
        if !mask.is_connected() {
            return Err(Error::config("mask interior is not edge-connected"));
        }
        let mut lattice = Vec::with_capacity(mask.count());
        let mut raster_index = vec![usize::MAX; mask.rows * mask.cols];
        for r in 0..mask.rows {
            for c in 0..mask.cols {
                if mask.at(r, c) {
                    raster_index[r * mask.cols + c] = lattice.len();
                    lattice.push((r as u32, c as u32));
                }
            }
        }
        let h = mask.h;
        let axes = vec![
            // axis 0 = x (columns), axis 1 = y (rows)
            Axis { min: 0.0, max: (mask.cols as f64 + 1.0) * h, n: mask.cols, h },
            Axis { min: 0.0, max: (mask.rows as f64 + 1.0) * h, n: mask.rows, h },
        ];
        let node_count = lattice.len();
        Ok(DomainGrid {
            id: fresh_id(),
            kind: GridKind::Mask2d,
            axes,
            lattice,
            raster_index,
            node_count,
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Quadrature weight of every node (uniform: the cell volume).
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.h).product()
    }

    pub fn diameter(&self) -> f64 {
        self.axes.iter().map(|a| a.len() * a.len()).sum::<f64>().sqrt()
    }

    /// Lattice multi-index of a node (padded with zeros above `dim`).
    pub fn multi_index(&self, node: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        match self.kind {
            GridKind::Box => {
                // row-major with the last axis fastest
                let mut rest = node;
                for d in (0..self.axes.len()).rev() {
                    out[d] = rest % self.axes[d].n;
                    rest /= self.axes[d].n;
                }
            }
            GridKind::Mask2d => {
                let (r, c) = self.lattice[node];
                out[0] = c as usize;
                out[1] = r as usize;
            }
        }
        out
    }

    /// Physical coordinates of a node (padded with zeros above `dim`).
    pub fn coord(&self, node: usize) -> [f64; 3] {
        let mi = self.multi_index(node);
        let mut out = [0.0f64; 3];
        for d in 0..self.axes.len() {
            out[d] = self.axes[d].coord(mi[d]);
        }
        out
    }

    /// Node index at a lattice multi-index, if it is an interior node.
    pub fn node_at(&self, mi: &[usize]) -> Option<usize> {
        match self.kind {
            GridKind::Box => {
                let mut idx = 0usize;
                for d in 0..self.axes.len() {
                    if mi[d] >= self.axes[d].n {
                        return None;
                    }
                    idx = idx * self.axes[d].n + mi[d];
                }
                Some(idx)
            }
            GridKind::Mask2d => {
                let (c, r) = (mi[0], mi[1]);
                if r >= self.axes[1].n || c >= self.axes[0].n {
                    return None;
                }
                let idx = self.raster_index[r * self.axes[0].n + c];
                (idx != usize::MAX).then_some(idx)
            }
        }
    }

    /// Nearest node to a physical point, or None when the point rounds to an
    /// exterior lattice cell.
    pub fn nearest_node(&self, point: &[f64]) -> Option<usize> {
        let mut mi = [0usize; 3];
        for d in 0..self.axes.len() {
            let a = &self.axes[d];
            let k = ((point[d] - a.min) / a.h - 1.0).round();
            if k < 0.0 || k >= a.n as f64 {
                return None;
            }
            mi[d] = k as usize;
        }
        self.node_at(&mi[..self.axes.len()])
    }

    /// Lattice distance (in cells) from a node to the Dirichlet boundary.
    pub fn cells_to_boundary(&self, node: usize) -> usize {
        let mi = self.multi_index(node);
        match self.kind {
            GridKind::Box => {
                let mut best = usize::MAX;
                for d in 0..self.axes.len() {
                    best = best.min(mi[d] + 1).min(self.axes[d].n - mi[d]);
                }
                best
            }
            GridKind::Mask2d => {
                // breadth-limited scan: grow rings until an exterior cell shows up
                let (c0, r0) = (mi[0] as isize, mi[1] as isize);
                let (nc, nr) = (self.axes[0].n as isize, self.axes[1].n as isize);
                for ring in 1..=(nc.max(nr)) {
                    for dr in -ring..=ring {
                        for dc in -ring..=ring {
                            if dr.abs().max(dc.abs()) != ring {
                                continue;
                            }
                            let (r, c) = (r0 + dr, c0 + dc);
                            let outside = r < 0
                                || c < 0
                                || r >= nr
                                || c >= nc
                                || self.raster_index[(r * nc + c) as usize] == usize::MAX;
                            if outside {
                                return ring as usize;
                            }
                        }
                    }
                }
                nc.max(nr) as usize
            }
        }
    }

    /// Distance from a physical point to the Dirichlet boundary,
    /// measured on the lattice (cells * h).
    pub fn dist_to_boundary(&self, point: &[f64]) -> f64 {
        match self.nearest_node(point) {
            Some(node) => self.cells_to_boundary(node) as f64 * self.axes[0].h,
            None => 0.0,
        }
    }
}
