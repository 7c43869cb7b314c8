//! Subcommand implementations: artifacts on disk plus a manifest.

use crate::config::Config;
use crate::domain::build_basis;
use fraclab::error::{Error, Result};
use fraclab::extension::{extend_cylinder, flux_residual, pohozaev_residual};
use fraclab::greens::{GreenCache, RobinMethod};
use fraclab::problem::lookup_kind;
use fraclab::reduced::{dumbbell_mask, find_critical_config, ReducedConfig};
use fraclab::solver::solve_least_energy;
use fraclab::sweep::{epsilon_sweep, rate_fit};
use fraclab::{closed_form_constants, GridFunction};
use serde_json::json;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

pub fn write_manifest(out: &Path, name: &str, cfg: &Config, failure: Option<&str>) -> Result<()> {
    let inputs: serde_json::Map<String, serde_json::Value> = cfg
        .entries()
        .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
        .collect();
    let manifest = json!({
        "subcommand": name,
        "inputs": inputs,
        "versions": { "fraclab": env!("CARGO_PKG_VERSION") },
        "seeds": serde_json::Value::Null,
        "tolerances": {
            "newton_residual_factor": 1e-9,
            "orthonormality": 1e-10,
            "rate_agreement": 0.30,
        },
        "failure": failure,
    });
    write_text(out, "manifest.json", &serde_json::to_string_pretty(&manifest).unwrap())
}

fn write_text(out: &Path, file: &str, text: &str) -> Result<()> {
    let path = out.join(file);
    let mut f = std::fs::File::create(&path)
        .map_err(|e| Error::config(format!("cannot create {path:?}: {e}")))?;
    f.write_all(text.as_bytes())
        .and_then(|_| if text.ends_with('\n') { Ok(()) } else { f.write_all(b"\n") })
        .map_err(|e| Error::config(format!("cannot write {path:?}: {e}")))
}

fn need_f64(cfg: &Config, key: &str) -> Result<f64> {
    cfg.get(key)
        .ok_or_else(|| Error::config(format!("missing required option {key}")))?
        .parse()
        .map_err(|_| Error::config(format!("bad number for {key}")))
}

fn need_str<'c>(cfg: &'c Config, key: &str) -> Result<&'c str> {
    cfg.get(key).ok_or_else(|| Error::config(format!("missing required option {key}")))
}

fn nodes_of(cfg: &Config) -> Result<usize> {
    match cfg.get("nodes") {
        None => Ok(255),
        Some(v) => v.parse().map_err(|_| Error::config("bad nodes")),
    }
}

fn field_csv(grid: &fraclab::DomainGrid, u: &GridFunction, header: &str) -> String {
    let n = grid.dim();
    let mut out = String::from(header);
    out.push('\n');
    for node in 0..grid.node_count() {
        let x = grid.coord(node);
        for d in 0..n {
            out.push_str(&format!("{:.17e},", x[d]));
        }
        out.push_str(&format!("{:.17e}\n", u.values()[node]));
    }
    out
}

pub fn dispatch(name: &str, cfg: &Config, out: &Path) -> Result<()> {
    match name {
        "constants" => constants_cmd(cfg, out),
        "basis" => basis_cmd(cfg, out),
        "solve" => solve_cmd(cfg, out),
        "sweep" => sweep_cmd(cfg, out),
        "reduce" => reduce_cmd(cfg, out),
        "green" => green_cmd(cfg, out),
        "extension-check" => extension_cmd(cfg, out),
        "dumbbell" => dumbbell_cmd(cfg, out),
        other => Err(Error::config(format!("unknown subcommand {other}"))),
    }
}

fn constants_cmd(cfg: &Config, out: &Path) -> Result<()> {
    let n = need_f64(cfg, "n")? as usize;
    let s = need_f64(cfg, "s")?;
    let consts = closed_form_constants(n, s)?;
    let text = serde_json::to_string_pretty(&consts).unwrap();
    println!("{text}");
    write_text(out, "constants.json", &text)
}

fn basis_cmd(cfg: &Config, out: &Path) -> Result<()> {
    let domain = need_str(cfg, "domain")?;
    let basis = build_basis(domain, nodes_of(cfg)?)?;
    let mut csv = String::from("k,lambda\n");
    for (k, l) in basis.eigenvalues().iter().enumerate() {
        csv.push_str(&format!("{},{:.17e}\n", k + 1, l));
    }
    write_text(out, "eigenvalues.csv", &csv)?;
    let summary = json!({
        "domain": domain,
        "node_count": basis.grid().node_count(),
        "dim": basis.grid().dim(),
        "spacing": basis.grid().axes()[0].h,
        "lambda_1": basis.eigenvalues()[0],
        "lambda_max": basis.eigenvalues()[basis.len() - 1],
    });
    println!("{summary}");
    write_text(out, "basis.json", &serde_json::to_string_pretty(&summary).unwrap())
}

fn solve_cmd(cfg: &Config, out: &Path) -> Result<()> {
    let kind = lookup_kind(need_str(cfg, "kind")?)?;
    let s = need_f64(cfg, "s")?;
    let eps = need_f64(cfg, "eps")?;
    let basis = build_basis(need_str(cfg, "domain")?, nodes_of(cfg)?)?;
    let report = solve_least_energy(&basis, s, eps, kind)?;
    let text = serde_json::to_string_pretty(&report).unwrap();
    println!("{text}");
    write_text(out, "report.json", &text)?;
    write_text(out, "solution.csv", &field_csv(basis.grid(), &report.u, "x,u"))
}

fn sweep_cmd(cfg: &Config, out: &Path) -> Result<()> {
    let kind = lookup_kind(need_str(cfg, "kind")?)?;
    let s = need_f64(cfg, "s")?;
    let eps_list: Vec<f64> = need_str(cfg, "eps_list")?
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::config("bad eps list")))
        .collect::<Result<_>>()?;
    let basis = Arc::new(build_basis(need_str(cfg, "domain")?, nodes_of(cfg)?)?);
    let grid = basis.grid();
    let n = grid.dim();
    let cache = GreenCache::build(&basis, s, RobinMethod::LatticeMatched)?;
    let radius = grid.diameter() / 4.0;
    let table = epsilon_sweep(&basis, s, kind, &eps_list, &cache, radius)?;
    let mut csv = String::from(
        "epsilon,mu_eps,x_eps,x_eps_cells,rate_product_critical,rate_product_subcritical,green_residual,bound_ratio,resolved\n",
    );
    for r in &table.rows {
        csv.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.6},{},{},{:.17e},{:.17e},{}\n",
            r.epsilon,
            r.mu_eps,
            r.x_eps[0],
            r.x_eps_cells_from_center,
            r.rate_product_critical.map(|v| format!("{v:.17e}")).unwrap_or_default(),
            r.rate_product_subcritical.map(|v| format!("{v:.17e}")).unwrap_or_default(),
            r.green_residual,
            r.bound_ratio,
            r.resolved,
        ));
    }
    write_text(out, "sweep.csv", &csv)?;
    // metadata sidecar with rate targets and fits
    let consts = closed_form_constants(n, s)?;
    let center = deepest_node(grid);
    let tau = cache.robin_function(center)?;
    let mut fits = serde_json::Map::new();
    for target in kind.rate_targets(&consts, tau.abs())? {
        let entry = match rate_fit(&table, target.value) {
            Ok(f) => json!({ "target": target.value, "limit": f.limit, "ratio": f.ratio }),
            Err(e) => json!({ "target": target.value, "error": e.to_string() }),
        };
        fits.insert(target.name.to_string(), entry);
    }
    let meta = json!({
        "kind": kind.name(),
        "n": n,
        "s": s,
        "nodes": grid.node_count(),
        "spacing": grid.axes()[0].h,
        "tau_center": tau,
        "robin_method": "lattice-matched",
        "exclusion_radius": radius,
        "agreement_tolerance": 0.30,
        "constants": consts,
        "rate_fits": fits,
    });
    println!("{}", serde_json::to_string_pretty(&meta).unwrap());
    write_text(out, "sweep_meta.json", &serde_json::to_string_pretty(&meta).unwrap())
}

fn reduce_cmd(cfg: &Config, out: &Path) -> Result<()> {
    let kind = lookup_kind(need_str(cfg, "kind")?)?;
    let s = need_f64(cfg, "s")?;
    let k: usize = cfg.get("k").unwrap_or("1").parse().map_err(|_| Error::config("bad k"))?;
    let basis = Arc::new(build_basis(need_str(cfg, "domain")?, nodes_of(cfg)?)?);
    let grid = basis.grid();
    let n = grid.dim();
    let consts = closed_form_constants(n, s)?;
    let cache = GreenCache::build(&basis, s, RobinMethod::LatticeMatched)?;
    let delta0 = match cfg.get_f64("delta0").map_err(Error::config)? {
        Some(v) => v,
        None => ReducedConfig::default_delta0(grid),
    };
    let alpha0 = kind.alpha0(n as f64, s);
    // start: deepest nodes spread along the first axis
    let start = default_start(grid, k, delta0, alpha0, cfg)?;
    let found = find_critical_config(&cache, &consts, &start, kind)?;
    let text = serde_json::to_string_pretty(&found).unwrap();
    println!("{text}");
    write_text(out, "reduced_config.json", &text)
}

fn deepest_node(grid: &fraclab::DomainGrid) -> usize {
    let mut best = 0usize;
    let mut margin = 0usize;
    for node in 0..grid.node_count() {
        let m = grid.cells_to_boundary(node);
        if m > margin {
            margin = m;
            best = node;
        }
    }
    best
}

fn default_start(
    grid: &fraclab::DomainGrid,
    k: usize,
    delta0: f64,
    alpha0: f64,
    cfg: &Config,
) -> Result<ReducedConfig> {
    let lambda0 = cfg.get_f64("lambda0").map_err(Error::config)?.unwrap_or(1.0);
    let n = grid.dim();
    let mut sigmas = Vec::with_capacity(k);
    for i in 0..k {
        // explicit centers from the config win: sigma0 = x[,y]
        if let Some(raw) = cfg.get(&format!("sigma{i}")) {
            let parts: Vec<f64> = raw
                .split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|_| Error::config("bad sigma")))
                .collect::<Result<_>>()?;
            let mut p = [0.0f64; 3];
            for (d, v) in parts.iter().enumerate().take(3) {
                p[d] = *v;
            }
            sigmas.push(p);
            continue;
        }
        // otherwise spread along the first axis on the middle row
        let frac = (i as f64 + 1.0) / (k as f64 + 1.0);
        let axis = &grid.axes()[0];
        let mut p = [0.0f64; 3];
        p[0] = axis.min + frac * axis.len();
        if n > 1 {
            p[1] = grid.axes()[1].min + 0.5 * grid.axes()[1].len();
        }
        sigmas.push(p);
    }
    ReducedConfig::new(vec![lambda0; k], sigmas, delta0, alpha0)
}

fn green_cmd(cfg: &Config, out: &Path) -> Result<()> {
    let s = need_f64(cfg, "s")?;
    let basis = Arc::new(build_basis(need_str(cfg, "domain")?, nodes_of(cfg)?)?);
    let cache = GreenCache::build(&basis, s, RobinMethod::LatticeMatched)?;
    let grid = basis.grid();
    let n = grid.dim();
    let mut csv = String::new();
    for d in 0..n {
        csv.push_str(&format!("x{d},"));
    }
    csv.push_str("tau\n");
    for node in 0..grid.node_count() {
        if let Ok(tau) = cache.robin_function(node) {
            let x = grid.coord(node);
            for d in 0..n {
                csv.push_str(&format!("{:.17e},", x[d]));
            }
            csv.push_str(&format!("{:.17e}\n", tau));
        }
    }
    write_text(out, "robin.csv", &csv)
}

fn extension_cmd(cfg: &Config, out: &Path) -> Result<()> {
    let s = need_f64(cfg, "s")?;
    let basis = build_basis(need_str(cfg, "domain")?, nodes_of(cfg)?)?;
    let grid = basis.grid();
    // smooth low-mode test field for the flux routes
    let phi0 = basis.eigenvector(0);
    let phi2 = basis.eigenvector(2.min(basis.len() - 1));
    let u = GridFunction::new(
        grid,
        phi0.values().iter().zip(phi2.values()).map(|(a, b)| a + 0.4 * b).collect(),
    )?;
    let flux = flux_residual(&basis, &u, s)?;
    let mut report = json!({
        "flux_analytic_residual": flux.analytic,
        "flux_numerical_residual": flux.numerical,
    });
    // sanity: extension evaluates the trace at height zero
    let ext = extend_cylinder(&basis, &u, s)?;
    let node = grid.node_count() / 2;
    report["trace_check"] = json!((ext.eval(node, 0.0) - u.values()[node]).abs());
    if grid.dim() == 1 {
        if let Some(eps) = cfg.get_f64("eps").map_err(Error::config)? {
            let kind = lookup_kind("critical")?;
            let solve = solve_least_energy(&basis, s, eps, kind)?;
            let poho = pohozaev_residual(&basis, &solve, s)?;
            report["pohozaev"] = serde_json::to_value(&poho).unwrap();
        }
    }
    let text = serde_json::to_string_pretty(&report).unwrap();
    println!("{text}");
    write_text(out, "extension.json", &text)
}

fn dumbbell_cmd(cfg: &Config, out: &Path) -> Result<()> {
    let k = need_f64(cfg, "k")? as usize;
    let lobe = need_f64(cfg, "lobe")?;
    let neck = need_f64(cfg, "neck")?;
    let h = need_f64(cfg, "h")?;
    let mask = dumbbell_mask(k, lobe, neck, h)?;
    write_text(out, "mask.txt", &mask.to_text())?;
    println!("wrote {} x {} mask with {} interior nodes", mask.rows, mask.cols, mask.count());
    Ok(())
}
