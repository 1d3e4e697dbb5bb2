use kwire::observables::{self, correlation, current, sweep_bias, sweep_distance, sweep_iv, sweep_position};
use kwire::ModelParams;
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn params(ev: f64) -> ModelParams {
    ModelParams::default().with_bias(ev).unwrap()
}

#[test]
fn mirror_and_bias_reversal() {
    for ev in [0.2, 1.0, 1.6] {
        let a = correlation(4, 8, &params(ev), TOL).unwrap().value;
        let b = correlation(17, 13, &params(-ev), TOL).unwrap().value;
        assert!((a - b).abs() < 1e-8, "eV={ev}: {a} vs {b}");
    }
}

#[test]
fn current_is_odd_in_bias() {
    assert!(current(&params(0.0), TOL).unwrap().value.abs() < 1e-10);
    for ev in [0.5, 1.0, 2.0] {
        let plus = current(&params(ev), TOL).unwrap().value;
        let minus = current(&params(-ev), TOL).unwrap().value;
        assert!(plus > 0.0);
        assert!((plus + minus).abs() < 1e-10);
    }
}

#[test]
fn decoupled_sweeps_are_zero() {
    let p = ModelParams::new(2.0, 0.0, 20, 1.0).unwrap();
    let bias = sweep_bias(4, 8, &[0.0], &p, TOL).unwrap();
    assert_eq!(bias.rows.len(), 1);
    assert!(bias.values().unwrap()[0].abs() < 1e-12);
    let dist = sweep_distance(4, &p, TOL).unwrap();
    assert_eq!(dist.rows.len(), 20);
    assert!(dist.values().unwrap().iter().all(|v| v.abs() < 1e-12));
    let iv = sweep_iv(&[0.0, 1.0, 2.0], &p, TOL).unwrap();
    assert!(iv.values().unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn single_point_iv_at_zero_bias() {
    let iv = sweep_iv(&[0.0], &ModelParams::default(), TOL).unwrap();
    assert!(iv.values().unwrap()[0].abs() < 1e-10);
}

#[test]
fn equilibrium_position_profile_is_mirror_symmetric() {
    let sweep = sweep_position(4, &params(0.0), TOL).unwrap();
    let v = sweep.values().unwrap();
    assert_eq!(v.len(), 16);
    for k in 0..v.len() {
        assert!((v[k] - v[v.len() - 1 - k]).abs() < 1e-8);
    }
}

#[test]
fn position_profile_matches_mirrored_reverse_bias() {
    let d = 4;
    let fwd = sweep_position(d, &params(1.0), TOL).unwrap().values().unwrap();
    let rev = sweep_position(d, &params(-1.0), TOL).unwrap().values().unwrap();
    // row i holds C_{i,i+d}; its mirror C_{L-d+1-i, L+1-i} is row L-d+1-i
    let n = fwd.len();
    for k in 0..n {
        assert!((fwd[k] - rev[n - 1 - k]).abs() < 1e-8);
    }
}

#[test]
fn net_enhancement_cancels_across_wire() {
    let d = 4;
    let biased = sweep_position(d, &params(1.0), TOL).unwrap().values().unwrap();
    let equilibrium = sweep_position(d, &params(0.0), TOL).unwrap().values().unwrap();
    let (sum, amplitude) = observables::net_enhancement(&biased, &equilibrium);
    assert!(amplitude > 1e-4);
    assert!(sum.abs() < 1e-8 * amplitude.max(1.0), "net {sum:e} vs amplitude {amplitude:e}");
}

#[test]
fn local_density_entry_is_allowed() {
    let c = correlation(5, 5, &params(0.7), TOL).unwrap();
    assert!(c.value.is_finite());
    assert_eq!(c.i, 5);
}

#[test]
fn sweep_rows_keep_grid_order() {
    let grid = [0.0, 0.3, 0.6, 0.9];
    let sweep = sweep_bias(2, 9, &grid, &ModelParams::default(), TOL).unwrap();
    assert_eq!(sweep.xs(), grid.to_vec());
    for (row, ev) in sweep.rows.iter().zip(grid) {
        let direct = correlation(2, 9, &params(ev), TOL).unwrap().value;
        assert_eq!(row.outcome.as_ref().unwrap().value, direct);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn mirror_bias_symmetry_random(i in 1usize..=20, j in 1usize..=20, ev in -2.0f64..2.0) {
        let p = params(ev);
        let a = correlation(i, j, &p, TOL).unwrap().value;
        let b = correlation(p.mirror_site(i), p.mirror_site(j), &params(-ev), TOL).unwrap().value;
        prop_assert!((a - b).abs() < 1e-8);
    }
}
