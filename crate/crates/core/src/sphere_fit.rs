//! Sphere models for fruitlet point clouds.
//!
//! Two estimators are provided:
//!
//! - [`fit_least_squares`]: the algebraic linear fit. Expanding
//!   `|p - c|^2 = r^2` gives `|p|^2 = 2c·p + (r^2 - |c|^2)`, which is linear
//!   in the four unknowns `(2c, rho)` with `rho = r^2 - |c|^2`.
//! - [`fit_ransac`]: minimal-sample hypothesise-and-verify using
//!   [`sphere_from_4`], a relative radial residual test, and a least-squares
//!   refit on the winning inlier set. The refit starts from the algebraic
//!   solution and is then polished by [`refine_geometric`], because the
//!   algebraic fit shrinks the radius and pulls the centre toward the
//!   viewer when noisy points cover only a cap.
//!
//! Both work in a normalised frame (centroid-shifted, scaled to unit RMS
//! spread) so that small fruitlets far from the origin stay well conditioned.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::FruitletObservation;
use crate::geometry::{centroid, Point3, RigidTransform};

/// Determinant threshold for minimal samples, in normalised units.
const DEGENERACY_EPS: f64 = 1e-9;
/// Relative singular value floor for the least-squares design matrix.
const RANK_EPS: f64 = 1e-10;
const REFINE_MAX_ITERS: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 4 points, got {0}")]
    InsufficientPoints(usize),
    #[error("degenerate point configuration (coplanar or rank deficient)")]
    Degenerate,
    #[error("fit failed: {0}")]
    Failed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Point3,
    pub radius: f64,
}

impl Sphere {
    pub fn new(center: Point3, radius: f64) -> Result<Self, FitError> {
        if !(radius.is_finite() && radius > 0.0) || !center.coords.iter().all(|c| c.is_finite()) {
            return Err(FitError::Failed(format!("invalid sphere: center {center:?}, radius {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.radius.powi(3)
    }

    /// Signed radial residual `|p - c| - r`.
    pub fn residual(&self, p: &Point3) -> f64 {
        (p - self.center).norm() - self.radius
    }

    pub fn transformed(&self, t: &RigidTransform) -> Self {
        Self {
            center: t.apply(&self.center),
            radius: self.radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    Ransac,
    LeastSquares,
}

impl std::fmt::Display for FitMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitMethod::Ransac => "ransac",
            FitMethod::LeastSquares => "least_squares",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacConfig {
    pub iterations_max: u32,
    /// Inlier test: `|dist - r| / r < tolerance_t`. The band must be wider
    /// than the depth noise, or the refit only sees a truncated shell.
    pub tolerance_t: f64,
    pub seed: u64,
    /// Hypotheses with radius outside `[min, max]` mm are rejected.
    pub radius_bounds: (f64, f64),
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations_max: 500,
            tolerance_t: 0.15,
            seed: 0,
            radius_bounds: (5.0, 40.0),
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.iterations_max < 1 {
            return Err("ransac.iterations_max must be >= 1".into());
        }
        if !(self.tolerance_t > 0.0 && self.tolerance_t.is_finite()) {
            return Err("ransac.tolerance_t must be > 0".into());
        }
        let (lo, hi) = self.radius_bounds;
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(format!("ransac.radius_bounds ({lo}, {hi}) is not a valid range"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub sphere: Sphere,
    pub inlier_count: usize,
    /// Root-mean-square geometric residual over the points used, in mm.
    pub rms_residual: f64,
    pub method: FitMethod,
    /// The raw winning RANSAC hypothesis before the least-squares refit.
    pub hypothesis: Option<Sphere>,
}

/// Outcome of [`correct_curvature`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureOutcome {
    Unchanged,
    Flipped,
    /// Camera centre coincides with the cloud centroid; no view direction.
    NoViewDirection,
}

/// Centroid and scale used to bring points near unit size.
struct Normalizer {
    origin: Vector3<f64>,
    scale: f64,
}

impl Normalizer {
    fn new(points: &[Point3]) -> Self {
        let origin = centroid(points).map(|c| c.coords).unwrap_or_else(Vector3::zeros);
        let ms = points.iter().map(|p| (p.coords - origin).norm_squared()).sum::<f64>() / points.len().max(1) as f64;
        let scale = if ms > 0.0 { ms.sqrt() } else { 1.0 };
        Self { origin, scale }
    }

    fn forward(&self, p: &Point3) -> Vector3<f64> {
        (p.coords - self.origin) / self.scale
    }

    fn back(&self, center: Vector3<f64>, radius: f64) -> Sphere {
        Sphere {
            center: Point3::from(center * self.scale + self.origin),
            radius: radius * self.scale,
        }
    }
}

/// The unique sphere through four non-coplanar points.
pub fn sphere_from_4(points: &[Point3; 4]) -> Result<Sphere, FitError> {
    let norm = Normalizer::new(points);
    let q: Vec<Vector3<f64>> = points.iter().map(|p| norm.forward(p)).collect();
    // 2 (q_i - q_0) . c = |q_i|^2 - |q_0|^2
    let a = Matrix3::from_rows(&[
        (2.0 * (q[1] - q[0])).transpose(),
        (2.0 * (q[2] - q[0])).transpose(),
        (2.0 * (q[3] - q[0])).transpose(),
    ]);
    if a.determinant().abs() <= DEGENERACY_EPS {
        return Err(FitError::Degenerate);
    }
    let b = Vector3::new(
        q[1].norm_squared() - q[0].norm_squared(),
        q[2].norm_squared() - q[0].norm_squared(),
        q[3].norm_squared() - q[0].norm_squared(),
    );
    let c = a.lu().solve(&b).ok_or(FitError::Degenerate)?;
    let r = (q[0] - c).norm();
    let sphere = norm.back(c, r);
    Sphere::new(sphere.center, sphere.radius)
}

/// Linear least-squares sphere fit.
pub fn fit_least_squares(points: &[Point3]) -> Result<FitResult, FitError> {
    let sphere = least_squares_sphere(points)?;
    Ok(FitResult {
        sphere,
        inlier_count: points.len(),
        rms_residual: rms_residual(&sphere, points),
        method: FitMethod::LeastSquares,
        hypothesis: None,
    })
}

fn least_squares_sphere(points: &[Point3]) -> Result<Sphere, FitError> {
    if points.len() < 4 {
        return Err(FitError::InsufficientPoints(points.len()));
    }
    let norm = Normalizer::new(points);
    let n = points.len();
    let mut a = DMatrix::<f64>::zeros(n, 4);
    let mut f = DVector::<f64>::zeros(n);
    for (i, p) in points.iter().enumerate() {
        let q = norm.forward(p);
        a[(i, 0)] = q.x;
        a[(i, 1)] = q.y;
        a[(i, 2)] = q.z;
        a[(i, 3)] = 1.0;
        f[i] = q.norm_squared();
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= RANK_EPS * smax {
        return Err(FitError::Degenerate);
    }
    let sol = svd.solve(&f, 0.0).map_err(|e| FitError::Failed(e.to_string()))?;
    let center = Vector3::new(sol[0], sol[1], sol[2]) / 2.0;
    let r2 = sol[3] + center.norm_squared();
    if !(r2 > 0.0) {
        return Err(FitError::Failed(format!("non-positive squared radius {r2}")));
    }
    let sphere = norm.back(center, r2.sqrt());
    Sphere::new(sphere.center, sphere.radius)
}

/// Levenberg-Marquardt minimisation of the geometric error
/// `sum (|p - c| - r)^2`, started from `init`. Never returns a sphere with a
/// larger error than `init`.
pub fn refine_geometric(points: &[Point3], init: &Sphere) -> Sphere {
    if points.len() < 4 {
        return *init;
    }
    let cost = |s: &Sphere| points.iter().map(|p| s.residual(p).powi(2)).sum::<f64>();
    let mut best = *init;
    let mut best_cost = cost(&best);
    let mut lambda = 1e-3;
    for _ in 0..REFINE_MAX_ITERS {
        // J_i = [-(p - c)/|p - c|, -1], residual_i = |p - c| - r
        let mut jtj = nalgebra::Matrix4::<f64>::zeros();
        let mut jtr = nalgebra::Vector4::<f64>::zeros();
        for p in points {
            let v = p - best.center;
            let d = v.norm();
            if d == 0.0 {
                continue;
            }
            let u = v / d;
            let j = nalgebra::Vector4::new(-u.x, -u.y, -u.z, -1.0);
            jtj += j * j.transpose();
            jtr += j * (d - best.radius);
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut damped = jtj;
            for k in 0..4 {
                damped[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&(-jtr))) else {
                lambda *= 10.0;
                continue;
            };
            let candidate = Sphere {
                center: best.center + step.xyz(),
                radius: best.radius + step.w,
            };
            let c = cost(&candidate);
            if candidate.radius > 0.0 && c.is_finite() && c < best_cost {
                let converged = step.norm() <= 1e-12 * (best.center.coords.norm() + best.radius);
                best = candidate;
                best_cost = c;
                lambda = (lambda * 0.1).max(1e-12);
                improved = !converged;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    best
}

pub fn rms_residual(sphere: &Sphere, points: &[Point3]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    (points.iter().map(|p| sphere.residual(p).powi(2)).sum::<f64>() / points.len() as f64).sqrt()
}

pub fn is_inlier(sphere: &Sphere, p: &Point3, tolerance_t: f64) -> bool {
    sphere.residual(p).abs() / sphere.radius < tolerance_t
}

pub fn count_inliers(sphere: &Sphere, points: &[Point3], tolerance_t: f64) -> usize {
    points.iter().filter(|p| is_inlier(sphere, p, tolerance_t)).count()
}

/// RANSAC sphere fit. Deterministic for a given `cfg.seed`.
pub fn fit_ransac(points: &[Point3], cfg: &RansacConfig) -> Result<FitResult, FitError> {
    if points.len() < 4 {
        return Err(FitError::InsufficientPoints(points.len()));
    }
    let (rmin, rmax) = cfg.radius_bounds;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(Sphere, usize)> = None;

    for _ in 0..cfg.iterations_max {
        let idx = index::sample(&mut rng, points.len(), 4);
        let sample = [points[idx.index(0)], points[idx.index(1)], points[idx.index(2)], points[idx.index(3)]];
        let Ok(candidate) = sphere_from_4(&sample) else {
            continue;
        };
        if candidate.radius < rmin || candidate.radius > rmax {
            continue;
        }
        let inliers = count_inliers(&candidate, points, cfg.tolerance_t);
        // strict comparison: ties keep the earliest hypothesis
        if best.is_none_or(|(_, n)| inliers > n) {
            best = Some((candidate, inliers));
        }
    }

    let (hypothesis, inlier_count) = match best {
        Some((s, n)) if n >= 4 => (s, n),
        Some((_, n)) => return Err(FitError::Failed(format!("best hypothesis has only {n} inliers"))),
        None => return Err(FitError::Failed("no admissible hypothesis".into())),
    };
    let inliers: Vec<Point3> = points
        .iter()
        .filter(|p| is_inlier(&hypothesis, p, cfg.tolerance_t))
        .copied()
        .collect();
    let sphere = match least_squares_sphere(&inliers) {
        Ok(s) => refine_geometric(&inliers, &s),
        Err(e) => {
            log::debug!("ransac refit failed ({e}); keeping raw hypothesis");
            hypothesis
        }
    };
    Ok(FitResult {
        sphere,
        inlier_count,
        rms_residual: rms_residual(&sphere, &inliers),
        method: FitMethod::Ransac,
        hypothesis: Some(hypothesis),
    })
}

/// Moves a sphere centre that landed on the camera side of the observed
/// surface to its point reflection through the cloud centroid.
pub fn correct_curvature(fit: &FitResult, obs: &FruitletObservation) -> (FitResult, CurvatureOutcome) {
    let Some(m) = obs.cloud.centroid() else {
        return (*fit, CurvatureOutcome::NoViewDirection);
    };
    let view = m - obs.camera_center;
    let len = view.norm();
    if !(len > 1e-9) {
        log::warn!(
            "frame {} instance {}: camera centre at cloud centroid, curvature check skipped",
            obs.frame_id,
            obs.instance
        );
        return (*fit, CurvatureOutcome::NoViewDirection);
    }
    let v = view / len;
    let c = fit.sphere.center;
    if (c - m).dot(&v) >= 0.0 {
        return (*fit, CurvatureOutcome::Unchanged);
    }
    let mut out = *fit;
    out.sphere.center = m + (m - c);
    (out, CurvatureOutcome::Flipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CoordinateFrame, PointCloud};
    use rand::Rng;

    fn cap_points(rng: &mut ChaCha8Rng, c: Point3, r: f64, n: usize, sigma: f64) -> Vec<Point3> {
        use rand_distr::{Distribution, Normal};
        let noise = Normal::new(0.0, sigma).unwrap();
        // -z hemisphere, facing a camera at the origin
        sphere_points(rng, Point3::origin(), 1.0, 2 * n)
            .into_iter()
            .filter(|p| p.z < 0.0)
            .take(n)
            .map(|p| c + p.coords * (r + noise.sample(rng)))
            .collect()
    }

    fn sphere_points(rng: &mut ChaCha8Rng, c: Point3, r: f64, n: usize) -> Vec<Point3> {
        (0..n)
            .map(|_| {
                let z: f64 = rng.random_range(-1.0..1.0);
                let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let s = (1.0 - z * z).sqrt();
                c + Vector3::new(s * phi.cos(), s * phi.sin(), z) * r
            })
            .collect()
    }

    #[test]
    fn unit_sphere_from_symmetric_points() {
        let s = sphere_from_4(&[
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(-1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ])
        .unwrap();
        assert!(s.center.coords.norm() < 1e-12);
        assert!((s.radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coplanar_quadruple_is_degenerate() {
        let r = sphere_from_4(&[
            Point3::new(0.0, 0.0, 5.0),
            Point3::new(1.0, 0.0, 5.0),
            Point3::new(0.0, 1.0, 5.0),
            Point3::new(1.0, 1.0, 5.0),
        ]);
        assert_eq!(r, Err(FitError::Degenerate));
    }

    #[test]
    fn random_quadruples_recover_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = Point3::new(10.0, 20.0, 30.0);
        for _ in 0..200 {
            let p = sphere_points(&mut rng, c, 12.0, 4);
            let Ok(s) = sphere_from_4(&[p[0], p[1], p[2], p[3]]) else {
                continue;
            };
            for q in &p {
                assert!(s.residual(q).abs() < 1e-9 * 12.0);
            }
            // well-spread samples pin the sphere tightly
            if (s.center - c).norm() > 1e-6 {
                continue;
            }
            assert!((s.radius - 12.0).abs() < 1e-9 * 12.0 * 1e3);
        }
    }

    #[test]
    fn least_squares_exact_spheres() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = sphere_points(&mut rng, Point3::origin(), 1.0, 50);
        let fit = fit_least_squares(&pts).unwrap();
        assert!(fit.sphere.center.coords.norm() < 1e-9);
        assert!((fit.sphere.radius - 1.0).abs() < 1e-9);

        let c = Point3::new(5.0, -3.0, 410.0);
        let pts = sphere_points(&mut rng, c, 22.0, 300);
        let fit = fit_least_squares(&pts).unwrap();
        assert!((fit.sphere.center - c).norm() / c.coords.norm() < 1e-7);
        assert!((fit.sphere.radius - 22.0).abs() / 22.0 < 1e-7);
        assert!(fit.rms_residual < 1e-9);
    }

    #[test]
    fn least_squares_errors() {
        let p = Point3::new(1.0, 2.0, 3.0);
        assert_eq!(fit_least_squares(&[p, p, p]), Err(FitError::InsufficientPoints(3)));
        let plane: Vec<Point3> = (0..20).map(|i| Point3::new(i as f64, (i * i % 7) as f64, 4.0)).collect();
        assert_eq!(fit_least_squares(&plane), Err(FitError::Degenerate));
    }

    #[test]
    fn ransac_zero_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = Point3::new(0.0, 0.0, 400.0);
        let pts = sphere_points(&mut rng, c, 15.0, 500);
        let fit = fit_ransac(&pts, &RansacConfig::default()).unwrap();
        assert_eq!(fit.inlier_count, 500);
        assert!((fit.sphere.center - c).norm() < 1e-6);
        assert!((fit.sphere.radius - 15.0).abs() < 1e-6);
        assert_eq!(fit.method, FitMethod::Ransac);
        assert!(fit.hypothesis.is_some());
    }

    #[test]
    fn ransac_needs_four_points() {
        let p = Point3::new(1.0, 2.0, 3.0);
        assert_eq!(fit_ransac(&[p, p, p], &RansacConfig::default()), Err(FitError::InsufficientPoints(3)));
    }

    #[test]
    fn ransac_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut pts = sphere_points(&mut rng, Point3::new(3.0, 1.0, 350.0), 14.0, 300);
        for p in pts.iter_mut() {
            p.x += rng.random_range(-1.0..1.0);
        }
        let cfg = RansacConfig {
            seed: 99,
            ..Default::default()
        };
        let a = fit_ransac(&pts, &cfg).unwrap();
        let b = fit_ransac(&pts, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ransac_rejects_out_of_bounds_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = sphere_points(&mut rng, Point3::origin(), 80.0, 100);
        assert!(matches!(fit_ransac(&pts, &RansacConfig::default()), Err(FitError::Failed(_))));
    }

    #[test]
    fn inlier_count_monotone_in_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = Sphere::new(Point3::new(0.0, 0.0, 300.0), 12.0).unwrap();
        let pts: Vec<Point3> = sphere_points(&mut rng, s.center, 12.0, 400)
            .into_iter()
            .map(|p| p + Vector3::new(rng.random_range(-2.0..2.0), 0.0, rng.random_range(-2.0..2.0)))
            .collect();
        let mut last = 0;
        for t in [0.01, 0.02, 0.05, 0.1, 0.2, 0.5] {
            let n = count_inliers(&s, &pts, t);
            assert!(n >= last);
            last = n;
        }
    }

    fn observation(points: Vec<Point3>, camera: Point3) -> FruitletObservation {
        FruitletObservation {
            frame_id: 0,
            instance: 1,
            cloud: PointCloud::new(points, CoordinateFrame::World).unwrap(),
            camera_center: camera,
            score: 1.0,
            mask_centroid_ray: None,
        }
    }

    fn front_patch(c: Point3, r: f64) -> Vec<Point3> {
        // cap facing a camera on the -z side
        let mut pts = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                let th = 0.1 * i as f64;
                let ph = 0.628 * j as f64;
                pts.push(c + Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), -th.cos()) * r);
            }
        }
        pts
    }

    #[test]
    fn curvature_flip() {
        let c0 = Point3::new(0.0, 0.0, 400.0);
        let obs = observation(front_patch(c0, 15.0), Point3::origin());
        let good = fit_least_squares(&obs.cloud.points).unwrap();
        let (same, outcome) = correct_curvature(&good, &obs);
        assert_eq!(outcome, CurvatureOutcome::Unchanged);
        assert_eq!(same, good);

        let m = obs.cloud.centroid().unwrap();
        let mut bad = good;
        bad.sphere.center = m - (good.sphere.center - m);
        let (fixed, outcome) = correct_curvature(&bad, &obs);
        assert_eq!(outcome, CurvatureOutcome::Flipped);
        assert!((fixed.sphere.center - c0).norm() < 1e-6);
        assert_eq!(correct_curvature(&fixed, &obs), (fixed, CurvatureOutcome::Unchanged));
    }

    #[test]
    fn curvature_degenerate_view() {
        let pts = front_patch(Point3::new(0.0, 0.0, 400.0), 15.0);
        let m = centroid(&pts).unwrap();
        let obs = observation(pts, m);
        let fit = fit_least_squares(&obs.cloud.points).unwrap();
        assert_eq!(correct_curvature(&fit, &obs), (fit, CurvatureOutcome::NoViewDirection));
    }

    #[test]
    fn hemisphere_lsq_radius_bias_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (c, r) = (Point3::new(0.0, 0.0, 400.0), 15.0);
        let trials = 200;
        let mut bias = 0.0;
        for _ in 0..trials {
            let pts = cap_points(&mut rng, c, r, 400, 0.5);
            bias += fit_least_squares(&pts).unwrap().sphere.radius - r;
        }
        bias /= trials as f64;
        assert!(bias.abs() < 0.1 * r, "mean radius bias {bias}");
    }

    #[test]
    fn geometric_refinement_reduces_cap_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (c, r) = (Point3::new(30.0, -10.0, 380.0), 12.0);
        let (mut alg, mut geo) = (0.0, 0.0);
        for _ in 0..100 {
            let pts = cap_points(&mut rng, c, r, 500, 2.0);
            let init = fit_least_squares(&pts).unwrap().sphere;
            let refined = refine_geometric(&pts, &init);
            assert!(rms_residual(&refined, &pts) <= rms_residual(&init, &pts));
            alg += (init.radius - r).abs();
            geo += (refined.radius - r).abs();
        }
        assert!(geo < alg, "geometric {geo} vs algebraic {alg}");
    }

    #[test]
    fn geometric_refinement_fixes_exact_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let truth = Sphere::new(Point3::new(5.0, -3.0, 410.0), 22.0).unwrap();
        let pts = sphere_points(&mut rng, truth.center, truth.radius, 300);
        let start = Sphere::new(truth.center + Vector3::new(1.0, -2.0, 1.5), 19.0).unwrap();
        let got = refine_geometric(&pts, &start);
        assert!((got.center - truth.center).norm() < 1e-8);
        assert!((got.radius - truth.radius).abs() < 1e-8);
        assert_eq!(refine_geometric(&pts[..3], &start), start);
    }
}
