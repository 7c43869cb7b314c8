// scratch: where does the far-field ratio deviate?
use fraclab::bubbles::{project_bubble, BubbleParams};
use fraclab::greens::{GreenCache, RobinMethod};
use fraclab::{closed_form_constants, SpectralBasis};
use std::sync::Arc;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let pow: u32 = args.get(1).and_then(|v| v.parse().ok()).unwrap_or(13);
    let lam0: f64 = args.get(2).and_then(|v| v.parse().ok()).unwrap_or(0.15);
    let s = 0.2;
    let nn = (1usize << pow) - 1;
    let basis =
        Arc::new(SpectralBasis::build_box(&[(-1.0, 1.0)], 2.0 / (nn as f64 + 1.0)).unwrap());
    let cache = GreenCache::build(&basis, s, RobinMethod::LatticeMatched).unwrap();
    let consts = closed_form_constants(1, s).unwrap();
    let grid = basis.grid();
    let center = grid.nearest_node(&[0.0]).unwrap();
    let g = cache.column(center).unwrap();
    for eps in [0.2, 0.1, 0.05] {
        let lam = lam0 * eps;
        let params = BubbleParams::new(lam, [0.0; 3]).unwrap();
        let pw = project_bubble(&basis, &params, s).unwrap().w;
        let pref = consts.c1 * lam.powf(0.3);
        print!("Lam={lam:.4}: ");
        for &x in &[0.5f64, 0.55, 0.6, 0.65, 0.7, 0.75] {
            let i = grid.nearest_node(&[x]).unwrap();
            let model = pref * g.values()[i];
            print!("{x:.2}:{:+.3} ", pw.values()[i] / model - 1.0);
        }
        println!();
    }
}
