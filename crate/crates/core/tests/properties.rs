use proptest::prelude::*;
use wpl_core::diagnostics::{extract_level_set, hausdorff, LevelInterval, PointSet};
use wpl_core::energy::{discrepancy_densities, energy_report, mu_density, alpha_density, PenaltyConfig};
use wpl_core::grid::{gradient_sq, integrate, laplacian, read_snapshot_from, write_snapshot_to, Boundary, Field, Grid};
use wpl_core::shapes::optimal_profile;
use wpl_core::topo::{geodesic_distance, Phase, TopoConfig};

fn bc_strategy() -> impl Strategy<Value = Boundary> {
    prop_oneof![Just(Boundary::Periodic), Just(Boundary::NeumannReflect), Just(Boundary::DirichletMinusOne)]
}

fn field_strategy(n: usize, ndim: usize) -> impl Strategy<Value = (Boundary, Vec<f64>)> {
    let len = n.pow(ndim as u32);
    (bc_strategy(), prop::collection::vec(-1.5f64..1.5, len))
}

fn make(n: usize, ndim: usize, bc: Boundary, values: Vec<f64>) -> Field {
    let grid = Grid::with_zero_origin(&vec![n; ndim], 1.0 / n as f64, bc).unwrap();
    Field::new(grid, 4.0 / n as f64, values).unwrap()
}

fn point_set() -> impl Strategy<Value = PointSet> {
    prop::collection::vec([0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0], 1..40).prop_map(|p| PointSet::new("p", p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn summation_by_parts((bc, u) in field_strategy(8, 3)) {
        // Σ|∇u|² = -Σ u Δu for the homogeneous ghosts; the -1 clamp adds the face terms.
        let bc = if bc == Boundary::DirichletMinusOne { Boundary::NeumannReflect } else { bc };
        let f = make(8, 3, bc, u);
        let lap = laplacian(&f);
        let g = integrate(f.grid(), &gradient_sq(&f));
        let ul: f64 = f.values().iter().zip(lap.values()).map(|(a, b)| a * b).sum::<f64>() * f.grid().cell_volume();
        prop_assert!((g + ul).abs() <= 1e-9 * g.abs().max(1.0));
    }

    #[test]
    fn periodic_energies_are_translation_invariant(u in prop::collection::vec(-1.5f64..1.5, 144), shift in 0usize..12) {
        let f = make(12, 2, Boundary::Periodic, u.clone());
        let rolled: Vec<f64> = (0..144).map(|i| u[(i / 12) * 12 + (i % 12 + shift) % 12]).collect();
        let g = make(12, 2, Boundary::Periodic, rolled);
        let (a, b) = (energy_report(&f, &PenaltyConfig::none()), energy_report(&g, &PenaltyConfig::none()));
        prop_assert!((a.S_eps - b.S_eps).abs() <= 1e-10 * a.S_eps.max(1.0));
        prop_assert!((a.W_eps - b.W_eps).abs() <= 1e-10 * a.W_eps.max(1.0));
    }

    #[test]
    fn densities_are_nonnegative((bc, u) in field_strategy(10, 2)) {
        let f = make(10, 2, bc, u);
        let (xp, xa) = discrepancy_densities(&f);
        prop_assert!(mu_density(&f).values.iter().all(|v| *v >= 0.0));
        prop_assert!(alpha_density(&f).values.iter().all(|v| *v >= 0.0));
        prop_assert!(xp.values.iter().zip(&xa.values).all(|(p, a)| *p >= 0.0 && p <= a));
    }

    #[test]
    fn hausdorff_is_a_metric(a in point_set(), b in point_set(), c in point_set()) {
        let d = |x: &PointSet, y: &PointSet| hausdorff(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }

    #[test]
    fn level_sets_grow_with_the_interval((bc, u) in field_strategy(10, 2), lo in -0.95f64..0.0, w in 0.0f64..0.5, pad in 0.0f64..0.3) {
        let f = make(10, 2, bc, u);
        let inner = extract_level_set(&f, LevelInterval::new(lo, lo + w).unwrap());
        let outer = extract_level_set(&f, LevelInterval::new((lo - pad).max(-0.99), lo + w + pad).unwrap());
        for p in &inner.points {
            prop_assert!(outer.points.contains(p));
        }
    }

    #[test]
    fn geodesics_are_symmetric_and_satisfy_the_triangle_inequality(
        u in prop::collection::vec(-1.0f64..1.0, 256),
        pts in prop::collection::vec([0.0f64..1.0, 0.0f64..1.0], 3),
    ) {
        let f = make(16, 2, Boundary::NeumannReflect, u);
        let t = TopoConfig::default();
        let [x, y, z] = [0, 1, 2].map(|i| [pts[i][0], pts[i][1], 0.0]);
        let d = |a, b| geodesic_distance(&f, &t, Phase::One, a, b).distance;
        let (xy, yx) = (d(&x, &y), d(&y, &x));
        prop_assert!((xy - yx).abs() <= 1e-12 * xy.max(1.0));
        prop_assert!(d(&x, &z) <= xy + d(&y, &z) + 1e-12);
    }

    #[test]
    fn profile_is_odd_and_monotone(t in -20.0f64..20.0, dt in 0.0f64..2.0, eps in 0.005f64..0.2) {
        prop_assert_eq!(optimal_profile(-t, eps), -optimal_profile(t, eps));
        prop_assert!(optimal_profile(t + dt, eps) >= optimal_profile(t, eps));
    }

    #[test]
    fn snapshots_round_trip_bit_exact((bc, u) in field_strategy(8, 2)) {
        let f = make(8, 2, bc, u);
        let mut buf = Vec::new();
        write_snapshot_to(&f, &mut buf).unwrap();
        let g = read_snapshot_from(&buf[..]).unwrap();
        prop_assert_eq!(g.grid().bc(), bc);
        prop_assert!(f.values().iter().zip(g.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
