//! Per-frame fruitlet extraction: instance filtering, backprojection into the
//! world frame, and k-means occlusion splitting.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{backproject, centroid, to_world, CameraFrame, InstanceClass, Point3, PointCloud};

const KMEANS_ITERATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct FruitletObservation {
    pub frame_id: u32,
    pub instance: u16,
    /// World-frame points.
    pub cloud: PointCloud,
    pub camera_center: Point3,
    pub score: f64,
    /// World-frame unit direction of the camera ray through the mask centroid.
    pub mask_centroid_ray: Option<Vector3<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    pub min_points: usize,
    pub score_threshold: f64,
    pub occlusion_split_enabled: bool,
    /// Two k-means centroids further apart than this mean the cloud is
    /// contaminated by an occluder.
    pub cluster_separation_mm: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            min_points: 50,
            score_threshold: 0.5,
            occlusion_split_enabled: true,
            cluster_separation_mm: 25.0,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_points < 4 {
            return Err(format!("extraction.min_points must be >= 4, got {}", self.min_points));
        }
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return Err(format!("extraction.score_threshold {} outside [0, 1]", self.score_threshold));
        }
        if !(self.cluster_separation_mm > 0.0 && self.cluster_separation_mm.is_finite()) {
            return Err("extraction.cluster_separation_mm must be > 0".into());
        }
        Ok(())
    }
}

/// Counters from one frame's extraction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionStats {
    pub detections: usize,
    pub non_fruitlet: usize,
    pub low_score: usize,
    pub too_few_points: usize,
    /// Masked pixels skipped for lack of a valid depth.
    pub invalid_depth_pixels: usize,
}

/// Keeps fruitlet instances that pass the score and point-count thresholds.
pub fn filter_instances(frame: &CameraFrame, cfg: &ExtractionConfig) -> Vec<FruitletObservation> {
    extract_frame(frame, cfg).0
}

/// [`filter_instances`] plus rejection counters.
pub fn extract_frame(frame: &CameraFrame, cfg: &ExtractionConfig) -> (Vec<FruitletObservation>, ExtractionStats) {
    let mut stats = ExtractionStats::default();
    let mut out = Vec::new();
    let camera_center = frame.camera_center();
    for inst in frame.masks.instances() {
        stats.detections += 1;
        if inst.class != InstanceClass::Fruitlet {
            stats.non_fruitlet += 1;
            continue;
        }
        if inst.score < cfg.score_threshold {
            stats.low_score += 1;
            continue;
        }
        // labels come from the mask's own instance table, so this cannot fail
        let Ok(cam) = backproject(&frame.depth, &frame.intrinsics, &frame.masks, inst.label) else {
            continue;
        };
        stats.invalid_depth_pixels += frame.masks.pixel_count(inst.label) - cam.len();
        if cam.len() < cfg.min_points {
            stats.too_few_points += 1;
            continue;
        }
        let cloud = to_world(&cam, &frame.pose).expect("camera-frame cloud");
        let ray = frame
            .masks
            .centroid(inst.label)
            .map(|(u, v)| frame.pose.apply_vector(&frame.intrinsics.ray(u, v)).normalize());
        out.push(FruitletObservation {
            frame_id: frame.frame_id,
            instance: inst.label,
            cloud,
            camera_center,
            score: inst.score,
            mask_centroid_ray: ray,
        });
    }
    (out, stats)
}

/// Splits a contaminated cloud with 2-means and keeps the larger part.
///
/// Returns the (possibly reduced) observation and whether a split happened.
pub fn split_occlusion(obs: &FruitletObservation, cfg: &ExtractionConfig) -> (FruitletObservation, bool) {
    let pts = &obs.cloud.points;
    if !cfg.occlusion_split_enabled || pts.len() < 2 * cfg.min_points || pts.len() < 2 {
        return (obs.clone(), false);
    }
    let Some(km) = two_means(pts) else {
        return (obs.clone(), false);
    };
    if (km.centroids[0] - km.centroids[1]).norm() <= cfg.cluster_separation_mm {
        return (obs.clone(), false);
    }
    let sizes = [km.sizes[0], km.sizes[1]];
    let keep = if sizes[0] != sizes[1] {
        usize::from(sizes[1] > sizes[0])
    } else {
        let dir = obs
            .mask_centroid_ray
            .or_else(|| obs.cloud.centroid().map(|m| (m - obs.camera_center).normalize()))
            .filter(|d| d.iter().all(|c| c.is_finite()));
        match dir {
            Some(d) => {
                let d0 = distance_to_ray(&km.centroids[0], &obs.camera_center, &d);
                let d1 = distance_to_ray(&km.centroids[1], &obs.camera_center, &d);
                usize::from(d1 < d0)
            }
            None => 0,
        }
    };
    let points: Vec<Point3> = pts
        .iter()
        .zip(&km.assignment)
        .filter(|(_, &a)| a == keep)
        .map(|(p, _)| *p)
        .collect();
    let mut out = obs.clone();
    out.cloud.points = points;
    (out, true)
}

fn distance_to_ray(p: &Point3, origin: &Point3, dir: &Vector3<f64>) -> f64 {
    let w = p - origin;
    (w - dir * w.dot(dir)).norm()
}

#[derive(Debug, Clone)]
pub(crate) struct TwoMeans {
    pub centroids: [Point3; 2],
    pub sizes: [usize; 2],
    pub assignment: Vec<usize>,
}

/// Lloyd's 2-means seeded with the farthest pair, capped at 20 iterations.
pub(crate) fn two_means(points: &[Point3]) -> Option<TwoMeans> {
    let (a, b) = farthest_pair(points)?;
    let mut centroids = [points[a], points[b]];
    let mut assignment = vec![usize::MAX; points.len()];
    for _ in 0..KMEANS_ITERATIONS {
        let mut changed = false;
        for (p, slot) in points.iter().zip(assignment.iter_mut()) {
            let k = usize::from((p - centroids[1]).norm_squared() < (p - centroids[0]).norm_squared());
            if *slot != k {
                *slot = k;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for (k, c) in centroids.iter_mut().enumerate() {
            let members: Vec<Point3> = points
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a == k)
                .map(|(p, _)| *p)
                .collect();
            if let Some(m) = centroid(&members) {
                *c = m;
            }
        }
    }
    let n1 = assignment.iter().filter(|&&a| a == 1).count();
    let sizes = [points.len() - n1, n1];
    (sizes[0] > 0 && sizes[1] > 0).then_some(TwoMeans {
        centroids,
        sizes,
        assignment,
    })
}

/// Exact farthest pair of points (indices, lower first). Pairs are pruned
/// with the triangle bound `|p - q| <= |p - m| + |q - m|` around the centroid.
pub(crate) fn farthest_pair(points: &[Point3]) -> Option<(usize, usize)> {
    if points.len() < 2 {
        return None;
    }
    let m = centroid(points)?;
    let mut order: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, p)| ((p - m).norm(), i)).collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let mut best = (-1.0f64, (order[0].1, order[1].1));
    for (i, &(ri, pi)) in order.iter().enumerate() {
        if 2.0 * ri < best.0 {
            break;
        }
        for &(rj, pj) in &order[i + 1..] {
            if ri + rj < best.0 {
                break;
            }
            let d = (points[pi] - points[pj]).norm();
            let pair = (pi.min(pj), pi.max(pj));
            if d > best.0 || (d == best.0 && pair < best.1) {
                best = (d, pair);
            }
        }
    }
    Some(best.1)
}
