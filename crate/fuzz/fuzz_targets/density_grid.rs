#![no_main]

//! Input layout: `[nh, nv, alpha, values...]`, each density a little-endian
//! u16 divided by 1000.

use envcontour::grid::{DensityGrid, ExceedanceProbability, GridAxis};
use envcontour::hdc::{contour_for_alpha, extract_isolines};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let [nh, nv, a, rest @ ..] = data else { return };
    let (nh, nv) = (*nh as usize % 15 + 2, *nv as usize % 15 + 2);
    let values: Vec<f64> = rest
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]) as f64 / 1000.0)
        .chain(std::iter::repeat(0.0))
        .take(nh * nv)
        .collect();
    let grid = DensityGrid::new(
        GridAxis::new(0.05, 0.1, nh).unwrap(),
        GridAxis::new(0.05, 0.1, nv).unwrap(),
        values,
    )
    .unwrap();
    let alpha = ExceedanceProbability::new((*a as f64 + 0.5) / 256.0).unwrap();
    if let Ok(r) = contour_for_alpha(&grid, alpha) {
        assert!(r.threshold >= 0.0);
        for lp in &r.contour.loops {
            assert!(lp.vertices().len() >= 4);
        }
    }
    let _ = extract_isolines(&grid, *a as f64 / 1000.0);
});
