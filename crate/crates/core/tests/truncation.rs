//! Shrinking the truncated domain moves the boundary-value solution towards
//! the shooting solution. No rate is known, so only the trend is asserted.

use twfilm::bvp::{picard_solve, BvpConfig};
use twfilm::matching::Curve;
use twfilm::shoot::shoot_b;
use twfilm::{Params, ShootConfig};

#[test]
fn mismatch_shrinks_with_eps() {
    for n in [1.5, 2.0, 2.5] {
        let p = Params::new(n, 1.0).unwrap();
        let prof = shoot_b(&p, &ShootConfig::default()).unwrap().profile;
        let mut last = f64::INFINITY;
        for eps in [1e-2, 3e-3, 1e-3] {
            let g = picard_solve(&p, &BvpConfig { eps, grid_size: 4096, ..Default::default() }).unwrap();
            let sup = g
                .nodes
                .iter()
                .zip(&g.values)
                .filter(|(h, _)| (0.1..=10.0).contains(*h))
                .map(|(&h, &v)| {
                    let s = prof.state(h).unwrap();
                    (v - s.psi).abs() / s.psi
                })
                .fold(0.0, f64::max);
            eprintln!("n = {n}, eps = {eps:e}: sup relative mismatch on [0.1, 10] = {sup:.3e}");
            assert!(sup < last, "n = {n}: no improvement at eps = {eps}");
            last = sup;
        }
    }
}
