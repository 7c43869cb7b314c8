//! Named domain constructors shared by the subcommands.
//!
//! `interval` is (-1, 1); `square` is (0, 1)^2; `box:min,max;min,max` is a
//! general box; `mask:path` loads a 0/1 raster; `dumbbell:k,lobe,neck`
//! generates the lobes-and-necks raster. Box resolution comes from `nodes`
//! (interior nodes along the first axis).

use fraclab::error::{Error, Result};
use fraclab::reduced::dumbbell_mask;
use fraclab::{Mask2d, SpectralBasis};
use std::path::Path;

pub fn build_basis(domain: &str, nodes: usize) -> Result<SpectralBasis> {
    if let Some(rest) = domain.strip_prefix("mask:") {
        let mask = Mask2d::from_file(Path::new(rest))?;
        return SpectralBasis::masked_basis(&mask, None);
    }
    if let Some(rest) = domain.strip_prefix("dumbbell:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::config("dumbbell spec is dumbbell:k,lobe,neck"));
        }
        let k: usize = parts[0].parse().map_err(|_| Error::config("bad dumbbell k"))?;
        let lobe: f64 = parts[1].parse().map_err(|_| Error::config("bad dumbbell lobe"))?;
        let neck: f64 = parts[2].parse().map_err(|_| Error::config("bad dumbbell neck"))?;
        let h = lobe / (nodes as f64);
        let mask = dumbbell_mask(k, lobe, neck, h)?;
        return SpectralBasis::masked_basis(&mask, None);
    }
    let bounds: Vec<(f64, f64)> = if domain == "interval" {
        vec![(-1.0, 1.0)]
    } else if domain == "square" {
        vec![(0.0, 1.0), (0.0, 1.0)]
    } else if let Some(rest) = domain.strip_prefix("box:") {
        let mut out = Vec::new();
        for axis in rest.split(';') {
            let Some((a, b)) = axis.split_once(',') else {
                return Err(Error::config("box spec is box:min,max;min,max"));
            };
            let a: f64 = a.trim().parse().map_err(|_| Error::config("bad box bound"))?;
            let b: f64 = b.trim().parse().map_err(|_| Error::config("bad box bound"))?;
            out.push((a, b));
        }
        out
    } else {
        return Err(Error::config(format!(
            "unknown domain {domain:?}; use interval, square, box:..., mask:..., dumbbell:..."
        )));
    };
    if nodes == 0 {
        return Err(Error::config("nodes must be positive"));
    }
    let h = (bounds[0].1 - bounds[0].0) / (nodes as f64 + 1.0);
    SpectralBasis::build_box(&bounds, h)
}
