// scratch probe for sweep scaling (not part of the deliverable test suite)
use fraclab::greens::{GreenCache, RobinMethod};
use fraclab::problem::lookup_kind;
use fraclab::sweep::{epsilon_sweep, rate_fit};
use fraclab::SpectralBasis;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let pow: u32 = args.get(1).and_then(|v| v.parse().ok()).unwrap_or(15);
    let kind_name = args.get(2).map(|s| s.as_str()).unwrap_or("critical");
    let s = 0.2;
    let n_nodes = (1usize << pow) - 1;
    let h = 2.0 / (n_nodes as f64 + 1.0);
    let t0 = Instant::now();
    let basis = Arc::new(SpectralBasis::build_box(&[(-1.0, 1.0)], h).unwrap());
    println!("basis {} nodes in {:?}", basis.len(), t0.elapsed());
    let cache = GreenCache::build(&basis, s, RobinMethod::LatticeMatched).unwrap();
    let kind = lookup_kind(kind_name).unwrap();
    let t0 = Instant::now();
    let table = epsilon_sweep(&basis, s, kind, &[0.2, 0.1, 0.05, 0.025], &cache, 0.5).unwrap();
    println!("sweep in {:?}", t0.elapsed());
    for r in &table.rows {
        println!(
            "eps={:<6} mu={:<10.4} cells={:<6.2} rate={:<10.6} green={:<8.4} bound={:<8.3} resolved={} res={:.2e}",
            r.epsilon,
            r.mu_eps,
            r.x_eps_cells_from_center,
            r.rate_product_critical.or(r.rate_product_subcritical).unwrap(),
            r.green_residual,
            r.bound_ratio,
            r.resolved,
            r.residual_norm,
        );
    }
    // tau at center for targets
    let grid = basis.grid();
    let center = grid.nearest_node(&[0.0]).unwrap();
    let tau = cache.robin_function(center).unwrap();
    println!("tau(0) = {tau}");
    let consts = fraclab::closed_form_constants(1, s).unwrap();
    for t in kind.rate_targets(&consts, tau.abs()).unwrap() {
        match rate_fit(&table, t.value) {
            Ok(fit) => println!("variant {:<10} target {:<12.6} limit {:<12.6} ratio {:.4}", t.name, t.value, fit.limit, fit.ratio),
            Err(e) => println!("variant {:<10} target {:<12.6} fit failed: {e}", t.name, t.value),
        }
    }
}
