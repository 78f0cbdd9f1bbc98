use proptest::prelude::*;
use repgap_core::groups::torus_sq_dist;
use repgap_core::manifolds::{sample_conditional_wave, SwissRollParams, WaveParams};
use repgap_core::nnindex::exhaustive_nearest;
use repgap_core::{sq_dist, GroupSpec, ManifoldSpec, NnIndex, PointCloud};

fn point3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 3)
}

fn group3() -> impl Strategy<Value = GroupSpec> {
    prop_oneof![
        Just(GroupSpec::identity(3)),
        (0..3usize).prop_map(|a| GroupSpec::rotation(3, a).unwrap()),
        (0..3usize, 0.5..4.0f64, -2.0..2.0f64).prop_map(|(a, p, o)| GroupSpec::translation(
            3,
            vec![a],
            vec![p],
            vec![o]
        )
        .unwrap()),
    ]
}

fn params(g: &GroupSpec, t: f64) -> Vec<f64> {
    match g.kind() {
        repgap_core::GroupKind::Identity => vec![],
        _ => vec![t],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn group_action_is_an_isometry(g in group3(), y in point3(), z in point3(), t in -10.0..10.0f64) {
        let (gy, gz) = (g.act(&params(&g, t), &y).unwrap(), g.act(&params(&g, t), &z).unwrap());
        prop_assert!((sq_dist(&gy, &gz).sqrt() - sq_dist(&y, &z).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn orbit_distance_is_invariant(g in group3(), y in point3(), z in point3(), t in -10.0..10.0f64) {
        let gy = g.act(&params(&g, t), &y).unwrap();
        prop_assert!((g.orbit_sq_dist(&gy, &z).unwrap() - g.orbit_sq_dist(&y, &z).unwrap()).abs() < 1e-10);
        prop_assert!((g.orbit_sq_dist(&y, &z).unwrap() - g.orbit_sq_dist(&z, &y).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn canonical_points_realize_orbit_distance(g in group3(), y in point3(), z in point3()) {
        let (cy, cz) = (g.canonicalize(&y).unwrap(), g.canonicalize(&z).unwrap());
        prop_assert!((sq_dist(&cy, &cz) - g.orbit_sq_dist(&y, &z).unwrap()).abs() < 1e-10);
        prop_assert!((g.orbit_sq_dist(&cy, &cz).unwrap() - g.orbit_sq_dist(&y, &z).unwrap()).abs() < 1e-10);
        prop_assert_eq!(g.canonicalize(&cy).unwrap(), cy);
    }

    #[test]
    fn nearest_orbit_point_attains_the_distance(g in group3(), y in point3(), z in point3()) {
        let p = g.nearest_orbit_point(&y, &z).unwrap();
        prop_assert!((sq_dist(&y, &p) - g.orbit_sq_dist(&y, &z).unwrap()).abs() < 1e-10);
        prop_assert!(g.orbit_sq_dist(&p, &z).unwrap() < 1e-10);
    }

    #[test]
    fn augmented_points_stay_on_the_orbit(g in group3(), z in point3(), k in 1..50usize) {
        let aug = g.augment(&PointCloud::new(3, z.clone()).unwrap(), k).unwrap();
        for p in aug.iter() {
            prop_assert!(g.orbit_sq_dist(p, &z).unwrap() < 1e-20);
        }
        // Augmentation preserves torus distances between copies of two points.
        let w: Vec<f64> = z.iter().map(|v| v * 0.5 + 0.1).collect();
        let both = g.augment(&PointCloud::new(3, [z.clone(), w.clone()].concat()).unwrap(), k).unwrap();
        let m = both.len() / 2;
        for j in 0..m {
            let d0 = torus_sq_dist(&g, &z, &w);
            prop_assert!((torus_sq_dist(&g, both.point(j), both.point(m + j)) - d0).abs() < 1e-10);
        }
    }

    #[test]
    fn kd_tree_is_exact(
        pts in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 4), 1..300),
        q in prop::collection::vec(-1.5..1.5f64, 4),
    ) {
        let cloud = PointCloud::from_rows(&pts).unwrap();
        let index = NnIndex::build(&cloud).unwrap();
        prop_assert_eq!(index.nearest(&q).unwrap(), exhaustive_nearest(&cloud, &q).unwrap());
        let (i, d) = index.nearest(&pts[0]).unwrap();
        prop_assert_eq!(d, 0.0);
        prop_assert!(i == 0 || pts[i] == pts[0]);
    }

    #[test]
    fn samples_are_fixed_by_projection(seed in any::<u64>()) {
        let specs = [
            ManifoldSpec::hypercube(2, 4, 1.5).unwrap(),
            ManifoldSpec::hypersphere(3, 2.0).unwrap(),
            ManifoldSpec::wave(WaveParams::default()).unwrap(),
            ManifoldSpec::swiss_roll(SwissRollParams::default()),
            ManifoldSpec::deformed_sphere(0.3).unwrap(),
        ];
        for spec in &specs {
            let cloud = spec.sample_uniform(20, seed).unwrap();
            for y in cloud.iter() {
                let p = spec.project(y).unwrap();
                prop_assert!(sq_dist(&p, y).sqrt() < 1e-10, "{} {:?} -> {:?}", spec.kind().name(), y, p);
            }
            prop_assert_eq!(spec.sample_uniform(20, seed).unwrap(), cloud);
        }
    }

    #[test]
    fn projection_is_idempotent_and_closest(y in point3()) {
        let spec = ManifoldSpec::hypersphere(3, 1.0).unwrap();
        let p = spec.project(&y).unwrap();
        prop_assert!(sq_dist(&spec.project(&p).unwrap(), &p) < 1e-24);
        let q = spec.sample_uniform(200, 1).unwrap();
        let best = q.iter().map(|z| sq_dist(z, &y)).fold(f64::INFINITY, f64::min);
        prop_assert!(sq_dist(&p, &y) <= best + 1e-12);
    }

    #[test]
    fn conditional_wave_points_lie_on_the_graph(seed in any::<u64>(), n in 1..50usize) {
        let w = WaveParams::default();
        let s = sample_conditional_wave(&ManifoldSpec::wave(w).unwrap(), n, seed).unwrap();
        for p in s.cloud.iter() {
            prop_assert_eq!(p[2], w.profile(p[0]));
            prop_assert!((0.0..=w.width).contains(&p[1]));
        }
    }
}
