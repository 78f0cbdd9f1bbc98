use repgap_core::quantize::{
    kmeanspp_indices, kmeanspp_init, lloyd, optimal_gap, reference_sample, LloydOptions,
    OptimalOptions,
};
use repgap_core::rng::seeded;
use repgap_core::scaling::{fit_loglog, j_optimal};
use repgap_core::{sq_dist, GroupSpec, ManifoldSpec, PointCloud};

fn unit_cube(d: usize) -> ManifoldSpec {
    ManifoldSpec::hypercube(d, d, 1.0).unwrap()
}

fn sorted_coords(c: &PointCloud) -> Vec<f64> {
    let mut v = c.coords().to_vec();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn lloyd_single_centroid_goes_to_the_middle() {
    let spec = unit_cube(1);
    let reference = reference_sample(&spec, 10_000, 1).unwrap();
    let init = PointCloud::new(1, vec![0.4]).unwrap();
    let r = lloyd(&spec, &init, &reference, LloydOptions::default()).unwrap();
    assert!(r.centroids.point(0)[0].abs() < 0.01);
    assert!((r.quantization_error - 1.0 / 12.0).abs() < 0.01 / 12.0);
}

#[test]
fn lloyd_two_centroids_split_the_interval() {
    let spec = unit_cube(1);
    let reference = reference_sample(&spec, 10_000, 2).unwrap();
    let init = PointCloud::new(1, vec![-0.1, 0.05]).unwrap();
    let r = lloyd(&spec, &init, &reference, LloydOptions::default()).unwrap();
    let c = sorted_coords(&r.centroids);
    assert!(
        (c[0] + 0.25).abs() < 0.01 && (c[1] - 0.25).abs() < 0.01,
        "{c:?}"
    );
    assert!((r.quantization_error - 1.0 / 48.0).abs() < 0.02 / 48.0);
}

#[test]
fn lloyd_from_optimum_converges_immediately() {
    let spec = unit_cube(1);
    let reference = reference_sample(&spec, 100_000, 3).unwrap();
    let first = lloyd(
        &spec,
        &PointCloud::new(1, vec![-0.3, 0.2]).unwrap(),
        &reference,
        LloydOptions::default(),
    )
    .unwrap();
    let again = lloyd(&spec, &first.centroids, &reference, LloydOptions::default()).unwrap();
    assert!(again.converged);
    assert!(again.iterations <= 2);
    assert!(
        (again.quantization_error - first.quantization_error).abs()
            <= 1e-6 * first.quantization_error
    );
}

#[test]
fn lloyd_error_never_increases() {
    for (spec, n) in [
        (unit_cube(2), 40),
        (ManifoldSpec::hypersphere(3, 1.0).unwrap(), 30),
        (ManifoldSpec::deformed_sphere(0.3).unwrap(), 20),
    ] {
        let reference = reference_sample(&spec, 20_000, 4).unwrap();
        let init = kmeanspp_init(&reference, n, 4).unwrap();
        let r = lloyd(
            &spec,
            &init,
            &reference,
            LloydOptions {
                max_iter: 60,
                tol: 0.0,
            },
        )
        .unwrap();
        for w in r.error_history.windows(2) {
            assert!(
                w[1] <= w[0] * (1.0 + 1e-12),
                "{}: {} -> {}",
                spec.kind().name(),
                w[0],
                w[1]
            );
        }
        for c in r.centroids.iter() {
            assert!(sq_dist(&spec.project(c).unwrap(), c) < 1e-20);
        }
    }
}

#[test]
fn optimal_interval_at_n32_is_near_one_twelfth() {
    let (est, q) = optimal_gap(
        &unit_cube(1),
        &GroupSpec::identity(1),
        32,
        0,
        OptimalOptions::default(),
    )
    .unwrap();
    let scaled = est.value * 32.0 * 32.0;
    assert!(
        (1.0 / 12.0 * 0.98..=1.0 / 12.0 * 1.05).contains(&scaled),
        "{scaled}"
    );
    assert_eq!(q.centroids.len(), 32);
    assert_eq!(est.n_eval, 100_000);
}

#[test]
fn optimal_square_at_n256_is_near_hexagonal_constant() {
    let (est, _) = optimal_gap(
        &unit_cube(2),
        &GroupSpec::identity(2),
        256,
        0,
        OptimalOptions::default(),
    )
    .unwrap();
    let j2 = 5.0 / (18.0 * 3f64.sqrt());
    assert!(
        (est.value * 256.0 - j2).abs() < 0.08 * j2,
        "{}",
        est.value * 256.0
    );
}

#[test]
fn full_translation_orbit_covers_the_interval() {
    let spec = unit_cube(1);
    let g = GroupSpec::cube_translation(1, 1, 1.0).unwrap();
    for n in [1, 3] {
        let (est, _) = optimal_gap(&spec, &g, n, 0, OptimalOptions::default()).unwrap();
        assert!(est.value < 1e-6);
    }
}

#[test]
fn more_restarts_never_hurt() {
    let spec = unit_cube(2);
    for seed in 0..3 {
        let base = OptimalOptions {
            reference_size: 20_000,
            restarts: 1,
            ..Default::default()
        };
        let (one, _) = optimal_gap(&spec, &GroupSpec::identity(2), 24, seed, base).unwrap();
        let (many, _) = optimal_gap(
            &spec,
            &GroupSpec::identity(2),
            24,
            seed,
            OptimalOptions {
                restarts: 6,
                ..base
            },
        )
        .unwrap();
        assert!(many.value <= one.value);
    }
}

#[test]
fn optimal_constant_reached_at_n512() {
    for d in [1usize, 2] {
        let n = 512;
        let (est, _) = optimal_gap(
            &unit_cube(d),
            &GroupSpec::identity(d),
            n,
            1,
            OptimalOptions::default(),
        )
        .unwrap();
        let (j, _) = j_optimal(d).unwrap();
        let scaled = est.value * (n as f64).powf(2.0 / d as f64);
        assert!((scaled - j).abs() < 0.1 * j, "d = {d}: {scaled} vs {j}");
    }
}

#[test]
fn translation_quotient_halves_the_dimension() {
    let spec = unit_cube(2);
    let g = GroupSpec::cube_translation(2, 1, 1.0).unwrap();
    let opts = OptimalOptions {
        reference_size: 20_000,
        ..Default::default()
    };
    let curve: Vec<(f64, f64)> = [4usize, 8, 16, 32, 64]
        .iter()
        .map(|&n| {
            (
                n as f64,
                optimal_gap(&spec, &g, n, 0, opts).unwrap().0.value,
            )
        })
        .collect();
    let fit = fit_loglog(&curve).unwrap();
    assert!((fit.slope + 2.0).abs() < 0.15, "slope {}", fit.slope);
}

#[test]
fn kmeanspp_separates_two_far_clusters() {
    // 30 points near 0 and 30 near 10: after a uniform first pick, the second
    // pick lands in the other cluster with probability
    // sum_other d^2 / sum_all d^2, averaged over the first pick.
    let mut coords = Vec::new();
    for i in 0..30 {
        coords.push(i as f64 * 1e-3);
    }
    for i in 0..30 {
        coords.push(10.0 + i as f64 * 1e-3);
    }
    let sample = PointCloud::new(1, coords.clone()).unwrap();
    let mut analytic = 0.0;
    for (f, &c) in coords.iter().enumerate() {
        let (mut other, mut total) = (0.0, 0.0);
        for (j, &x) in coords.iter().enumerate() {
            let w = (x - c) * (x - c);
            total += w;
            if (j < 30) != (f < 30) {
                other += w;
            }
        }
        analytic += other / total / coords.len() as f64;
    }
    assert!(analytic > 0.99);
    let hits = (0..1000u64)
        .filter(|&s| {
            let p = kmeanspp_indices(&sample, 2, &mut seeded(s, 2)).unwrap();
            (p[0] < 30) != (p[1] < 30)
        })
        .count();
    assert!(hits as f64 / 1000.0 >= 0.99, "{hits}");
}

#[test]
fn kmeanspp_is_deterministic_and_distinct() {
    let s = unit_cube(3).sample_uniform(500, 9).unwrap();
    let a = kmeanspp_init(&s, 40, 5).unwrap();
    assert_eq!(a, kmeanspp_init(&s, 40, 5).unwrap());
    assert_eq!(a.dedup_exact().len(), 40);
    assert!(kmeanspp_init(&s, 501, 5).is_err());
}
