//! Randomized invariant checks for the grid, morphology, path, and
//! modeling layers.

use proptest::prelude::*;

use ealm_core::grid::{complement, quantize, BinaryGrid, Dataset, GridSpec, PlaneKind};
use ealm_core::idscog::{cog_path, ids, plane_truth, truth, IdsParams};
use ealm_core::modeling::{alm_fit, fit_separator, model_error, partition_areas, predict, AlmConfig, RuleBase};
use ealm_core::morphology::{
    components8, fig14_chains, thicken, thicken_once, thin_once, thin_to_skeleton,
    DEFAULT_MAX_PASSES,
};
use ealm_core::rng::Rng;

fn spec(w: usize, h: usize) -> GridSpec {
    GridSpec::new(w, h, (0.0, w as f64), (0.0, h as f64)).unwrap()
}

/// 16x16 grid whose foreground keeps a 2-cell background guard band.
fn guarded_grid(bits: &[bool]) -> BinaryGrid {
    let mut g = BinaryGrid::empty(spec(16, 16));
    for (i, &b) in bits.iter().enumerate() {
        if b {
            g.set(2 + i % 12, 2 + i / 12, true);
        }
    }
    g
}

fn guarded_bits() -> impl Strategy<Value = Vec<bool>> {
    proptest::collection::vec(proptest::bool::weighted(0.3), 144)
}

proptest! {
    #[test]
    fn thickening_thinning_duality(bits in guarded_bits()) {
        let g = guarded_grid(&bits);
        let (thick, _) = fig14_chains();
        for se in &thick.elements {
            let lhs = complement(&thin_once(&complement(&g), &se.swap_fg_bg()).unwrap());
            let rhs = thicken_once(&g, se).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn thinning_shrinks_thickening_grows(bits in guarded_bits()) {
        let g = guarded_grid(&bits);
        let (thick, thin) = fig14_chains();
        let sk = thin_to_skeleton(&g, &thin, DEFAULT_MAX_PASSES).unwrap();
        prop_assert!(sk.grid.is_subset_of(&g));
        let t = thicken(&g, &thick, 2).unwrap();
        prop_assert!(g.is_subset_of(&t));
    }

    #[test]
    fn skeleton_is_a_fixpoint(bits in guarded_bits()) {
        let g = guarded_grid(&bits);
        let (_, thin) = fig14_chains();
        let sk = thin_to_skeleton(&g, &thin, DEFAULT_MAX_PASSES).unwrap();
        let again = thin_to_skeleton(&sk.grid, &thin, DEFAULT_MAX_PASSES).unwrap();
        prop_assert_eq!(sk.grid, again.grid);
    }

    #[test]
    fn thinning_preserves_component_count(bits in guarded_bits()) {
        let g = guarded_grid(&bits);
        let (_, thin) = fig14_chains();
        let sk = thin_to_skeleton(&g, &thin, DEFAULT_MAX_PASSES).unwrap();
        prop_assert_eq!(components8(&sk.grid), components8(&g));
    }

    #[test]
    fn quantize_is_order_invariant(
        mut pts in proptest::collection::vec((0.0f64..10.0, 0.0f64..10.0), 2..60),
        rotation in 0usize..60,
    ) {
        let sp = GridSpec::new(12, 12, (0.0, 10.0), (0.0, 10.0)).unwrap();
        let as_ds = |pts: &[(f64, f64)]| {
            Dataset::new(1, pts.iter().map(|&(x, y)| (vec![x], y)).collect()).unwrap()
        };
        let a = quantize(&as_ds(&pts), PlaneKind::InputOutput(0), sp).unwrap();
        let n = pts.len();
        pts.rotate_left(rotation % n);
        let b = quantize(&as_ds(&pts), PlaneKind::InputOutput(0), sp).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn quantize_clips_out_of_range_samples(x in -50.0f64..50.0, y in -50.0f64..50.0) {
        let sp = GridSpec::new(8, 8, (0.0, 10.0), (0.0, 10.0)).unwrap();
        let ds = Dataset::new(1, vec![(vec![x], y), (vec![5.0], 5.0)]).unwrap();
        let g = quantize(&ds, PlaneKind::InputOutput(0), sp).unwrap();
        // clipping maps every sample to some boundary cell: nothing is lost
        prop_assert!(g.count() == 1 || g.count() == 2);
        let cc = sp.col_of(x.clamp(0.0, 10.0));
        let rr = sp.row_of(y.clamp(0.0, 10.0));
        prop_assert!(g.get(cc, rr));
    }

    #[test]
    fn cog_path_single_valued_and_within_mass(bits in guarded_bits()) {
        let g = guarded_grid(&bits);
        let path = cog_path(&ids(&g, &IdsParams::default()));
        for c in 0..g.width() {
            match path.delegate[c] {
                Some(d) => {
                    prop_assert!((0.0..=(g.height() - 1) as f64).contains(&d));
                    prop_assert!(path.confidence[c].is_some());
                }
                None => prop_assert!(path.confidence[c].is_none()),
            }
        }
        prop_assert!(path.delegate_count() <= g.width());
    }

    #[test]
    fn truth_is_monotone_and_unit_bounded(a in 0.0f64..30.0, b in 0.0f64..30.0) {
        let (ta, tb) = (truth(a).unwrap(), truth(b).unwrap());
        prop_assert!(ta > 0.0 && ta <= 1.0);
        if a < b {
            prop_assert!(ta >= tb);
        }
    }

    #[test]
    fn partition_is_exact(bits in guarded_bits(), y0 in 1usize..15) {
        let g = guarded_grid(&bits);
        let (a1, a2, a3) = partition_areas(&g, y0);
        // the three areas are disjoint and reassemble the plane
        prop_assert_eq!(a1.union(&a2).union(&a3), g.clone());
        prop_assert!(a1.intersection(&a2).is_blank());
        prop_assert!(a1.intersection(&a3).is_blank());
        prop_assert!(a2.intersection(&a3).is_blank());
        for c in 0..g.width() {
            prop_assert!(a1.column_rows(c).iter().all(|&r| r <= y0));
            prop_assert!(a2.column_rows(c).iter().all(|&r| r > y0));
            let s = a3.column_rows(c);
            if !s.is_empty() {
                prop_assert!(s.iter().any(|&r| r <= y0) && s.iter().any(|&r| r > y0));
            }
        }
    }

    #[test]
    fn separator_output_is_normalized(
        c1 in proptest::collection::vec((-5.0f64..0.0, -5.0f64..5.0), 2..20),
        c2 in proptest::collection::vec((1.0f64..5.0, -5.0f64..5.0), 2..20),
    ) {
        let (a, b, _, mis) = fit_separator(&c1, &c2).unwrap();
        prop_assert!(((a * a + b * b).sqrt() - 1.0).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&mis));
    }

    #[test]
    fn rng_is_deterministic_and_in_range(seed in any::<u64>(), lo in -10.0f64..0.0, hi in 1.0f64..10.0) {
        let mut a = Rng::new(seed);
        let mut b = Rng::new(seed);
        for _ in 0..32 {
            let v = a.uniform(lo, hi);
            prop_assert_eq!(v, b.uniform(lo, hi));
            prop_assert!((lo..hi).contains(&v) || v == lo);
        }
    }

    #[test]
    fn rule_base_covers_and_round_trips(seed in any::<u64>()) {
        let mut r = Rng::new(seed);
        let rows: Vec<(Vec<f64>, f64)> = (0..40)
            .map(|_| {
                let x = r.uniform(0.0, 4.0);
                (vec![x], (1.3 * x).sin() + 0.3 * x)
            })
            .collect();
        let ds = Dataset::new(1, rows).unwrap();
        let cfg = AlmConfig { grid_size: 16, ..AlmConfig::default() };
        let rb = alm_fit(&ds, &cfg).unwrap();
        prop_assert!(rb.covers(&ds));
        let (mse, _) = model_error(&rb, &ds).unwrap();
        prop_assert!(mse.is_finite());

        let mut buf = Vec::new();
        rb.save_json(&mut buf).unwrap();
        let rb2 = RuleBase::load_json(&mut buf.as_slice()).unwrap();
        for (x, _) in ds.rows() {
            prop_assert_eq!(
                predict(&rb, x).unwrap().to_bits(),
                predict(&rb2, x).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn plane_truth_certain_for_flat_rows(row in 2usize..14, bits in guarded_bits()) {
        // a single horizontal line has zero column variance everywhere
        let mut g = BinaryGrid::empty(spec(16, 16));
        for c in 2..14 {
            g.set(c, row, true);
        }
        prop_assert_eq!(plane_truth(&g).unwrap(), 1.0);
        // any plane's truth stays within (0, 1]
        let g2 = guarded_grid(&bits);
        if g2.count() > 0 {
            let t = plane_truth(&g2).unwrap();
            prop_assert!(t > 0.0 && t <= 1.0);
        }
    }
}
