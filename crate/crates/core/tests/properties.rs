use fruitlet_map::eval::{compute_metrics, match_spheres};
use fruitlet_map::extraction::FruitletObservation;
use fruitlet_map::fruit_map::{intersection_ratio, FruitletMap, MatchConfig, Registration};
use fruitlet_map::geometry::{CoordinateFrame, Point3, PointCloud, RigidTransform};
use fruitlet_map::sphere_fit::{correct_curvature, fit_least_squares, fit_ransac, RansacConfig, Sphere};
use nalgebra::Vector3;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point3> {
    prop::array::uniform3(-500.0f64..500.0).prop_map(Point3::from)
}

fn sphere() -> impl Strategy<Value = Sphere> {
    (point(), 5.0f64..40.0).prop_map(|(c, r)| Sphere::new(c, r).unwrap())
}

fn rigid() -> impl Strategy<Value = RigidTransform> {
    (prop::array::uniform3(-1.0f64..1.0), -3.1f64..3.1, prop::array::uniform3(-1000.0f64..1000.0)).prop_map(
        |(axis, angle, t)| {
            let axis = Vector3::from(axis) + Vector3::new(0.0, 0.0, 1e-3);
            RigidTransform::from_axis_angle(axis, angle, Vector3::from(t))
        },
    )
}

/// Points on a sphere; every fifth one is pushed off the surface by 0.5 to 1.5
/// times `wobble`, far from any inlier threshold, so fits are not trivially exact.
fn noisy_surface(s: &Sphere, n: usize, wobble: f64) -> Vec<Point3> {
    (0..n)
        .map(|i| {
            let z = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
            let phi = i as f64 * 2.399_963;
            let rho = (1.0 - z * z).sqrt();
            let sign = if i % 10 == 0 { 1.0 } else { -1.0 };
            let dr = if i % 5 == 0 { sign * wobble * (0.5 + (i * 7 % 11) as f64 / 10.0) } else { 0.0 };
            s.center + Vector3::new(rho * phi.cos(), rho * phi.sin(), z) * (s.radius + dr)
        })
        .collect()
}

fn close(a: &Sphere, b: &Sphere, tol: f64) -> bool {
    let scale = a.radius.max(b.center.coords.norm()).max(1.0);
    (a.center - b.center).norm() <= tol * scale && (a.radius - b.radius).abs() <= tol * a.radius
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fitters_are_rigidly_equivariant(s in sphere(), t in rigid(), n in 40usize..200, seed in any::<u64>()) {
        let pts = noisy_surface(&s, n, 0.4 * s.radius);
        let moved: Vec<Point3> = pts.iter().map(|p| t.apply(p)).collect();

        let a = fit_least_squares(&pts).unwrap().sphere.transformed(&t);
        let b = fit_least_squares(&moved).unwrap().sphere;
        prop_assert!(close(&a, &b, 1e-6), "lsq {a:?} vs {b:?}");

        let cfg = RansacConfig { seed, iterations_max: 100, ..Default::default() };
        let a = fit_ransac(&pts, &cfg).unwrap().sphere.transformed(&t);
        let b = fit_ransac(&moved, &cfg).unwrap().sphere;
        prop_assert!(close(&a, &b, 1e-6), "ransac {a:?} vs {b:?}");
    }

    #[test]
    fn curvature_correction_is_idempotent(s in sphere(), cam in point(), offset in prop::array::uniform3(-30.0f64..30.0)) {
        let pts = noisy_surface(&s, 60, 0.0);
        let obs = FruitletObservation {
            frame_id: 0,
            instance: 1,
            cloud: PointCloud::new(pts, CoordinateFrame::World).unwrap(),
            camera_center: cam,
            score: 1.0,
            mask_centroid_ray: None,
        };
        let mut fit = fit_least_squares(&obs.cloud.points).unwrap();
        fit.sphere.center += Vector3::from(offset);
        let (once, _) = correct_curvature(&fit, &obs);
        let (twice, _) = correct_curvature(&once, &obs);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn intersection_ratio_is_a_symmetric_fraction(a in sphere(), b in sphere(), pull in 0.0f64..1.0) {
        // pull b toward a so that overlaps are common
        let b = Sphere::new(b.center + (a.center - b.center) * pull, b.radius).unwrap();
        let r1 = intersection_ratio(&a, &b);
        let r2 = intersection_ratio(&b, &a);
        prop_assert!((0.0..=1.0).contains(&r1));
        prop_assert!((r1 - r2).abs() <= 1e-12);
    }

    #[test]
    fn registration_keeps_ids_and_observation_counts(spheres in prop::collection::vec(sphere(), 1..60), threshold in 0.05f64..0.95) {
        let cfg = MatchConfig { merge_threshold: threshold, ..Default::default() };
        let mut map = FruitletMap::new();
        let mut created = 0;
        for (i, s) in spheres.iter().enumerate() {
            let before: Vec<(u32, u32)> = map.tracks().iter().map(|t| (t.id, t.observations)).collect();
            if let Registration::Created(id) = map.register(*s, i as u32, &cfg) {
                prop_assert_eq!(id as usize, created);
                created += 1;
            }
            for ((id, obs), t) in before.iter().zip(map.tracks()) {
                prop_assert_eq!(*id, t.id);
                prop_assert!(t.observations >= *obs);
            }
        }
        prop_assert_eq!(map.count(), created);
        let total: u32 = map.tracks().iter().map(|t| t.observations).sum();
        prop_assert_eq!(total as usize, spheres.len());
    }

    #[test]
    fn matching_counts_are_consistent(pred in prop::collection::vec(sphere(), 0..20), truth in prop::collection::vec(sphere(), 0..20), tol in 1.0f64..400.0) {
        let c = match_spheres(&pred, &truth, tol);
        prop_assert_eq!(c.tp + c.fp, pred.len());
        prop_assert_eq!(c.tp + c.fn_, truth.len());
        let mut rp = pred.clone();
        rp.reverse();
        let mut rt = truth.clone();
        rt.reverse();
        prop_assert_eq!(match_spheres(&rp, &rt, tol).tp, c.tp);
        let m = compute_metrics(c.tp, c.fp, c.fn_);
        for v in [m.precision, m.recall, m.f1].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
