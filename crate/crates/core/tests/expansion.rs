//! Projection expansion of shrinking bubbles against the Green/Robin model.

use fraclab::bubbles::{
    project_bubble, projection_expansion_residual, projection_green_ratio, BubbleDeriv,
    BubbleParams,
};
use fraclab::greens::{GreenCache, RobinMethod};
use fraclab::{closed_form_constants, SpectralBasis};
use std::sync::Arc;

fn interval(nodes: usize, s: f64) -> (Arc<SpectralBasis>, GreenCache) {
    let basis =
        Arc::new(SpectralBasis::build_box(&[(-1.0, 1.0)], 2.0 / (nodes as f64 + 1.0)).unwrap());
    let cache = GreenCache::build(&basis, s, RobinMethod::LatticeMatched).unwrap();
    (basis, cache)
}

#[test]
fn robin_remainder_decreases_with_scale() {
    let s = 0.2;
    let (basis, cache) = interval(2047, s);
    let consts = closed_form_constants(1, s).unwrap();
    let params = BubbleParams::new(1.0, [0.0; 3]).unwrap();
    let res = projection_expansion_residual(
        &basis,
        &cache,
        &consts,
        &params,
        1.0,
        &[0.2, 0.1, 0.05],
        BubbleDeriv::Value,
    )
    .unwrap();
    assert!(
        res.strictly_decreasing,
        "expansion remainder not decreasing: {:?}",
        res.rows
    );
    // fewer than two scales is rejected
    assert!(projection_expansion_residual(
        &basis,
        &cache,
        &consts,
        &params,
        1.0,
        &[0.1],
        BubbleDeriv::Value
    )
    .is_err());
}

#[test]
fn scale_derivative_remainder_decreases_too() {
    let s = 0.2;
    let (basis, cache) = interval(2047, s);
    let consts = closed_form_constants(1, s).unwrap();
    let params = BubbleParams::new(1.0, [0.0; 3]).unwrap();
    let res = projection_expansion_residual(
        &basis,
        &cache,
        &consts,
        &params,
        1.0,
        &[0.2, 0.1, 0.05],
        BubbleDeriv::Scale,
    )
    .unwrap();
    assert!(
        res.strictly_decreasing,
        "psi^0 expansion remainder not decreasing: {:?}",
        res.rows
    );
}

#[test]
fn far_field_matches_green_function() {
    let s = 0.2;
    let (basis, cache) = interval(2047, s);
    let consts = closed_form_constants(1, s).unwrap();
    let params = BubbleParams::new(1.0, [0.0; 3]).unwrap();
    let dev =
        projection_green_ratio(&basis, &cache, &consts, &params, 1.0, 0.05, 0.5).unwrap();
    assert!(dev <= 0.10, "far-field Green ratio off by {dev}");
}

#[test]
fn robin_term_scales_with_lambda() {
    // doubling lambda multiplies the predicted Robin deficit by 2^{(n-2s)/2}
    let s = 0.2;
    let (basis, _cache) = interval(2047, s);
    let grid = basis.grid();
    let probe = grid.nearest_node(&[0.6]).unwrap();
    let deficit = |lam: f64| {
        let params = BubbleParams::new(lam, [0.0; 3]).unwrap();
        let w = params.sample(grid, s, BubbleDeriv::Value).unwrap();
        let pw = project_bubble(&basis, &params, s).unwrap().w;
        w.values()[probe] - pw.values()[probe]
    };
    let (lam, eps) = (1.0, 0.02);
    let d1 = deficit(lam * eps);
    let d2 = deficit(2.0 * lam * eps);
    let got = d2 / d1;
    let expect = 2.0f64.powf((1.0 - 2.0 * s) / 2.0);
    assert!(
        (got - expect).abs() / expect <= 0.05,
        "lambda scaling: got {got}, expected {expect}"
    );
}
