//! Synthetic branch scans with known ground truth.
//!
//! World frame: the branch runs along +X from the origin, +Z is up, and the
//! scanning side is -Y. Fruitlets are spheres hanging in clusters below the
//! branch, leaves are planar discs between the branch and the cameras, and
//! the branch itself is a cylinder that renders depth but no label.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    CameraFrame, CameraIntrinsics, DepthImage, Instance, InstanceClass, MaskImage, Point3, RigidTransform,
    INVALID_DEPTH,
};
use crate::sphere_fit::Sphere;

/// Allowed interpenetration between neighbouring fruitlets, as a fraction of
/// the smaller radius.
const MAX_OVERLAP_FRACTION: f64 = 0.3;
const PLACEMENT_RETRIES: usize = 200;
const DETECTION_SCORE: f64 = 0.95;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation spec: {0}")]
    Spec(String),
    #[error("could not place {what} after {tries} attempts")]
    Placement { what: String, tries: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub branch_length: f64,
    pub branch_radius: f64,
    pub fruitlet_count: usize,
    pub cluster_size_range: (usize, usize),
    pub fruitlet_radius_range: (f64, f64),
    pub leaf_count: usize,
    /// Nominal leaf disc radius in mm.
    pub leaf_size: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            branch_length: 900.0,
            branch_radius: 8.0,
            fruitlet_count: 40,
            cluster_size_range: (1, 5),
            fruitlet_radius_range: (8.0, 18.0),
            leaf_count: 20,
            leaf_size: 30.0,
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let (cmin, cmax) = self.cluster_size_range;
        if !(1 <= cmin && cmin <= cmax && cmax <= 5) {
            return Err(SimError::Spec(format!("cluster_size_range ({cmin}, {cmax}) must lie within 1..=5")));
        }
        let (rmin, rmax) = self.fruitlet_radius_range;
        if !(rmin > 0.0 && rmin <= rmax && rmax.is_finite()) {
            return Err(SimError::Spec(format!("fruitlet_radius_range ({rmin}, {rmax}) is not a valid range")));
        }
        if !(self.branch_length > 0.0 && self.branch_radius > 0.0 && self.leaf_size > 0.0) {
            return Err(SimError::Spec("branch and leaf sizes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub center: Point3,
    pub normal: Vector3<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFruitlet {
    pub id: u32,
    pub cluster: u32,
    pub sphere: Sphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub fruitlets: Vec<GroundTruthFruitlet>,
    pub leaves: Vec<Leaf>,
    pub branch_start: Point3,
    pub branch_end: Point3,
    pub branch_radius: f64,
}

impl Scene {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        for f in &self.fruitlets {
            let c = f.cluster as usize;
            if sizes.len() <= c {
                sizes.resize(c + 1, 0);
            }
            sizes[c] += 1;
        }
        sizes
    }
}

fn fits_with(placed: &[GroundTruthFruitlet], s: &Sphere) -> bool {
    placed.iter().all(|o| {
        let d = (o.sphere.center - s.center).norm();
        d >= o.sphere.radius + s.radius - MAX_OVERLAP_FRACTION * o.sphere.radius.min(s.radius)
    })
}

fn clear_of_branch(s: &Sphere, spec: &SceneSpec) -> bool {
    let c = s.center;
    (c.y * c.y + c.z * c.z).sqrt() >= spec.branch_radius + s.radius
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - z * z).sqrt();
    Vector3::new(s * phi.cos(), s * phi.sin(), z)
}

/// Places fruitlet clusters and leaves. Deterministic in `spec.seed`.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene, SimError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (cmin, cmax) = spec.cluster_size_range;
    let (rmin, rmax) = spec.fruitlet_radius_range;
    let margin = (rmax * 3.0).min(spec.branch_length / 2.0);

    let mut fruitlets: Vec<GroundTruthFruitlet> = Vec::with_capacity(spec.fruitlet_count);
    let mut cluster = 0u32;
    while fruitlets.len() < spec.fruitlet_count {
        let size = rng.random_range(cmin..=cmax).min(spec.fruitlet_count - fruitlets.len());
        let mut placed_cluster = None;
        for _ in 0..PLACEMENT_RETRIES {
            let anchor = Point3::new(
                rng.random_range(margin..=spec.branch_length - margin),
                rng.random_range(-25.0..25.0),
                rng.random_range(-50.0..-25.0),
            );
            let mut members: Vec<GroundTruthFruitlet> = Vec::with_capacity(size);
            for _ in 0..size {
                let mut ok = None;
                for _ in 0..PLACEMENT_RETRIES {
                    let r = rng.random_range(rmin..=rmax);
                    let offset = if members.is_empty() {
                        Vector3::zeros()
                    } else {
                        random_unit(&mut rng) * rng.random_range(0.0..=2.0 * r)
                    };
                    let s = Sphere {
                        center: anchor + offset,
                        radius: r,
                    };
                    if clear_of_branch(&s, spec) && fits_with(&fruitlets, &s) && fits_with(&members, &s) {
                        ok = Some(s);
                        break;
                    }
                }
                let Some(s) = ok else { break };
                members.push(GroundTruthFruitlet {
                    id: 0,
                    cluster,
                    sphere: s,
                });
            }
            if members.len() == size {
                placed_cluster = Some(members);
                break;
            }
        }
        let members = placed_cluster.ok_or_else(|| SimError::Placement {
            what: format!("cluster {cluster} of {size} fruitlets"),
            tries: PLACEMENT_RETRIES,
        })?;
        for mut m in members {
            m.id = fruitlets.len() as u32;
            fruitlets.push(m);
        }
        cluster += 1;
    }

    let mut leaves = Vec::with_capacity(spec.leaf_count);
    for i in 0..spec.leaf_count {
        let mut placed = None;
        for _ in 0..PLACEMENT_RETRIES {
            let radius = spec.leaf_size * rng.random_range(0.7..=1.0);
            let center = Point3::new(
                rng.random_range(0.0..=spec.branch_length),
                rng.random_range(-110.0..-50.0),
                rng.random_range(-90.0..20.0),
            );
            // mostly facing the scanning side, with random tilt
            let mut normal = random_unit(&mut rng) + Vector3::new(0.0, -1.2, 0.0);
            normal.normalize_mut();
            let leaf = Leaf { center, normal, radius };
            if fruitlets.iter().all(|f| disc_clear_of_sphere(&leaf, &f.sphere)) {
                placed = Some(leaf);
                break;
            }
        }
        leaves.push(placed.ok_or_else(|| SimError::Placement {
            what: format!("leaf {i}"),
            tries: PLACEMENT_RETRIES,
        })?);
    }

    Ok(Scene {
        fruitlets,
        leaves,
        branch_start: Point3::origin(),
        branch_end: Point3::new(spec.branch_length, 0.0, 0.0),
        branch_radius: spec.branch_radius,
    })
}

fn disc_clear_of_sphere(leaf: &Leaf, s: &Sphere) -> bool {
    let w = s.center - leaf.center;
    let h = w.dot(&leaf.normal);
    if h.abs() >= s.radius {
        return true;
    }
    let radial = (w - leaf.normal * h).norm();
    radial >= leaf.radius + s.radius
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectorySpec {
    pub arc_points: usize,
    pub arcs: usize,
    /// Axial offset between consecutive arcs, mm.
    pub arc_spacing: f64,
    /// Camera distance from the branch axis, mm.
    pub standoff: (f64, f64),
    /// Elevation of the outermost arcs around the branch axis, degrees.
    pub elevation_sweep_deg: f64,
    pub intrinsics: CameraIntrinsics,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self {
            arc_points: 12,
            arcs: 6,
            arc_spacing: 15.0,
            standoff: (300.0, 400.0),
            elevation_sweep_deg: 20.0,
            intrinsics: CameraIntrinsics::vga(),
        }
    }
}

impl TrajectorySpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.arc_points < 1 || self.arcs < 1 {
            return Err(SimError::Spec("arc_points and arcs must be >= 1".into()));
        }
        let (lo, hi) = self.standoff;
        if !(lo > 0.0 && hi >= lo) {
            return Err(SimError::Spec(format!("standoff ({lo}, {hi}) is not a valid range")));
        }
        self.intrinsics.validate().map_err(|e| SimError::Spec(e.to_string()))
    }
}

/// Camera-to-world poses, arc by arc.
///
/// Each arc spreads `arc_points` viewpoints along the branch on a path that
/// bows toward the branch (farthest standoff at the ends, nearest in the
/// middle). Arcs are shifted by `arc_spacing` along the axis and tilted in
/// elevation around it so that consecutive arcs look past different leaves.
/// Every optical axis passes through the branch axis.
pub fn plan_trajectory(spec: &TrajectorySpec, scene: &Scene) -> Vec<RigidTransform> {
    let axis = scene.branch_end - scene.branch_start;
    let length = axis.norm();
    let dir = axis / length;
    let toward_camera = Vector3::new(0.0, -1.0, 0.0);
    let up = toward_camera.cross(&dir).normalize();
    let (smin, smax) = spec.standoff;
    let n = spec.arc_points;
    let mut poses = Vec::with_capacity(spec.arcs * n);
    for k in 0..spec.arcs {
        let elevation = if spec.arcs > 1 {
            (-1.0 + 2.0 * k as f64 / (spec.arcs - 1) as f64) * spec.elevation_sweep_deg.to_radians()
        } else {
            0.0
        };
        let offset = (k as f64 - (spec.arcs - 1) as f64 / 2.0) * spec.arc_spacing;
        let side = toward_camera * elevation.cos() + up * elevation.sin();
        for j in 0..n {
            let frac = (j as f64 + 0.5) / n as f64;
            let standoff = smax - (smax - smin) * (std::f64::consts::PI * frac).sin();
            let target = scene.branch_start + dir * (length * frac + offset);
            let eye = target + side * standoff;
            poses.push(RigidTransform::look_at(eye, target, -up));
        }
    }
    poses
}

/// A rendered view together with the exact per-fruitlet visibility.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub frame: CameraFrame,
    /// `(ground-truth id, visible pixel count)` for every fruitlet, in id order.
    pub visible_pixels: Vec<(u32, u32)>,
    /// Mask label assigned to each visible fruitlet.
    pub labels: Vec<(u32, u16)>,
}

#[derive(Clone, Copy, PartialEq)]
enum Owner {
    None,
    Fruitlet(usize),
    Occluder,
}

struct Raster {
    k: CameraIntrinsics,
    depth: Vec<f64>,
    owner: Vec<Owner>,
}

impl Raster {
    fn bbox(&self, lo: Vector3<f64>, hi: Vector3<f64>) -> Option<(u32, u32, u32, u32)> {
        let (w, h) = (self.k.width as f64, self.k.height as f64);
        if hi.z <= 1e-6 {
            return None;
        }
        if lo.z <= 1e-6 {
            return Some((0, 0, self.k.width - 1, self.k.height - 1));
        }
        let (mut umin, mut vmin, mut umax, mut vmax) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for i in 0..8 {
            let p = Point3::new(
                if i & 1 == 0 { lo.x } else { hi.x },
                if i & 2 == 0 { lo.y } else { hi.y },
                if i & 4 == 0 { lo.z } else { hi.z },
            );
            let (u, v) = self.k.project(&p)?;
            umin = umin.min(u);
            umax = umax.max(u);
            vmin = vmin.min(v);
            vmax = vmax.max(v);
        }
        if umax < 0.0 || vmax < 0.0 || umin > w - 1.0 || vmin > h - 1.0 {
            return None;
        }
        Some((
            umin.floor().max(0.0) as u32,
            vmin.floor().max(0.0) as u32,
            umax.ceil().min(w - 1.0) as u32,
            vmax.ceil().min(h - 1.0) as u32,
        ))
    }

    fn draw(&mut self, bbox: Option<(u32, u32, u32, u32)>, owner: Owner, hit: impl Fn(&Vector3<f64>) -> Option<f64>) {
        let Some((u0, v0, u1, v1)) = bbox else { return };
        let w = self.k.width as usize;
        for v in v0..=v1 {
            for u in u0..=u1 {
                let ray = self.k.ray(u as f64, v as f64);
                if let Some(t) = hit(&ray) {
                    let i = v as usize * w + u as usize;
                    if t < self.depth[i] {
                        self.depth[i] = t;
                        self.owner[i] = owner;
                    }
                }
            }
        }
    }
}

/// Nearest positive ray parameter for a ray from the origin with direction `d`.
fn ray_sphere(d: &Vector3<f64>, c: &Vector3<f64>, r: f64) -> Option<f64> {
    let a = d.norm_squared();
    let b = d.dot(c);
    let disc = b * b - a * (c.norm_squared() - r * r);
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let t0 = (b - s) / a;
    let t1 = (b + s) / a;
    if t0 > 0.0 {
        Some(t0)
    } else if t1 > 0.0 {
        Some(t1)
    } else {
        None
    }
}

fn ray_disc(d: &Vector3<f64>, c: &Vector3<f64>, n: &Vector3<f64>, r: f64) -> Option<f64> {
    let denom = n.dot(d);
    if denom.abs() < 1e-12 {
        return None;
    }
    let t = n.dot(c) / denom;
    (t > 0.0 && (d * t - c).norm_squared() <= r * r).then_some(t)
}

fn ray_cylinder(d: &Vector3<f64>, p0: &Vector3<f64>, axis: &Vector3<f64>, length: f64, r: f64) -> Option<f64> {
    let w = -p0;
    let dp = d - axis * d.dot(axis);
    let wp = w - axis * w.dot(axis);
    let a = dp.norm_squared();
    if a < 1e-15 {
        return None;
    }
    let b = 2.0 * dp.dot(&wp);
    let c = wp.norm_squared() - r * r;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    [(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)].into_iter().find(|&t| {
        let along = (d * t - p0).dot(axis);
        t > 0.0 && (0.0..=length).contains(&along)
    })
}

/// Ray-casts fruitlets, leaves and the branch into a depth image and an
/// instance mask. Visible fruitlets get labels 1..=K in ground-truth id order.
pub fn render_frame(scene: &Scene, pose: &RigidTransform, intrinsics: &CameraIntrinsics, frame_id: u32) -> RenderedFrame {
    let world_to_cam = pose.inverse();
    let n = intrinsics.pixel_count();
    let mut raster = Raster {
        k: *intrinsics,
        depth: vec![f64::INFINITY; n],
        owner: vec![Owner::None; n],
    };

    for (i, f) in scene.fruitlets.iter().enumerate() {
        let c = world_to_cam.apply(&f.sphere.center).coords;
        let r = f.sphere.radius;
        let ext = Vector3::repeat(r);
        let bbox = raster.bbox(c - ext, c + ext);
        raster.draw(bbox, Owner::Fruitlet(i), |d| ray_sphere(d, &c, r));
    }
    for leaf in &scene.leaves {
        let c = world_to_cam.apply(&leaf.center).coords;
        let nrm = world_to_cam.apply_vector(&leaf.normal);
        let ext = nrm.map(|x| leaf.radius * (1.0 - x * x).max(0.0).sqrt());
        let bbox = raster.bbox(c - ext, c + ext);
        raster.draw(bbox, Owner::Occluder, |d| ray_disc(d, &c, &nrm, leaf.radius));
    }
    {
        let p0 = world_to_cam.apply(&scene.branch_start).coords;
        let p1 = world_to_cam.apply(&scene.branch_end).coords;
        let length = (p1 - p0).norm();
        let axis = (p1 - p0) / length;
        let ext = Vector3::repeat(scene.branch_radius);
        let bbox = raster.bbox(p0.inf(&p1) - ext, p0.sup(&p1) + ext);
        let r = scene.branch_radius;
        raster.draw(bbox, Owner::Occluder, |d| ray_cylinder(d, &p0, &axis, length, r));
    }

    let mut counts = vec![0u32; scene.fruitlets.len()];
    for o in &raster.owner {
        if let Owner::Fruitlet(i) = o {
            counts[*i] += 1;
        }
    }
    let mut label_of = vec![0u16; scene.fruitlets.len()];
    let mut instances = Vec::new();
    let mut labels = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 {
            let label = instances.len() as u16 + 1;
            label_of[i] = label;
            instances.push(Instance {
                label,
                class: InstanceClass::Fruitlet,
                score: DETECTION_SCORE,
            });
            labels.push((scene.fruitlets[i].id, label));
        }
    }
    let mask_labels: Vec<u16> = raster
        .owner
        .iter()
        .map(|o| match o {
            Owner::Fruitlet(i) => label_of[*i],
            _ => 0,
        })
        .collect();
    let depth: Vec<f32> = raster
        .depth
        .iter()
        .map(|&t| if t.is_finite() { t as f32 } else { INVALID_DEPTH })
        .collect();

    let (w, h) = (intrinsics.width, intrinsics.height);
    RenderedFrame {
        frame: CameraFrame {
            frame_id,
            intrinsics: *intrinsics,
            pose: *pose,
            depth: DepthImage::new(w, h, depth).expect("raster size"),
            masks: MaskImage::new(w, h, mask_labels, instances).expect("contiguous labels"),
        },
        visible_pixels: scene.fruitlets.iter().zip(&counts).map(|(f, &c)| (f.id, c)).collect(),
        labels,
    }
}

/// Grows every instance mask by `pixels` into neighbouring unlabelled pixels
/// whose surface lies in front of the instance, emulating masks that bleed
/// over a leaf or branch edge.
pub fn contaminate_masks(frame: &CameraFrame, pixels: u32) -> CameraFrame {
    let (w, h) = (frame.masks.width() as usize, frame.masks.height() as usize);
    let mut labels = frame.masks.labels().to_vec();
    let depth = frame.depth.values();
    for _ in 0..pixels {
        let prev = labels.clone();
        for v in 0..h {
            for u in 0..w {
                let i = v * w + u;
                if prev[i] != 0 || !(depth[i] > 0.0) {
                    continue;
                }
                let neighbours = [
                    (u > 0).then(|| i - 1),
                    (u + 1 < w).then(|| i + 1),
                    (v > 0).then(|| i - w),
                    (v + 1 < h).then(|| i + w),
                ];
                if let Some(j) = neighbours
                    .into_iter()
                    .flatten()
                    .find(|&j| prev[j] != 0 && depth[j] > depth[i])
                {
                    labels[i] = prev[j];
                }
            }
        }
    }
    let mut out = frame.clone();
    out.masks = MaskImage::new(frame.masks.width(), frame.masks.height(), labels, frame.masks.instances().to_vec())
        .expect("labels unchanged in range");
    out
}

/// Gaussian depth noise plus uniform outliers over the frame's valid depth
/// range. Invalid pixels and masks are untouched.
pub fn add_noise(frame: &CameraFrame, depth_sigma: f64, outlier_rate: f64, seed: u64) -> Result<CameraFrame, SimError> {
    if !(depth_sigma >= 0.0 && depth_sigma.is_finite()) || !(0.0..=1.0).contains(&outlier_rate) {
        return Err(SimError::Spec(format!("noise sigma {depth_sigma} / outlier rate {outlier_rate} out of range")));
    }
    let mut out = frame.clone();
    if depth_sigma == 0.0 && outlier_rate == 0.0 {
        return Ok(out);
    }
    let Some((lo, hi)) = frame.depth.valid_range() else {
        return Ok(out);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, depth_sigma).expect("finite sigma");
    for d in out.depth.values_mut() {
        if !crate::geometry::is_valid_depth(*d) {
            continue;
        }
        if outlier_rate > 0.0 && rng.random_bool(outlier_rate) {
            *d = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        } else if depth_sigma > 0.0 {
            let noisy = *d as f64 + normal.sample(&mut rng);
            *d = noisy.max(1e-3) as f32;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    pub depth_sigma: f64,
    pub outlier_rate: f64,
    /// Mask dilation across occluder edges, pixels; 0 disables.
    pub mask_contamination_px: u32,
    /// Fraction of planned viewpoints dropped from the scan.
    pub frame_drop_rate: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub scene: SceneSpec,
    pub trajectory: TrajectorySpec,
    pub noise: NoiseSpec,
}

/// Ground truth for one fruitlet across the frames that made it into the scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub id: u32,
    pub center: Point3,
    pub radius: f64,
    /// Visible pixel count per frame, aligned with [`GroundTruth::frame_ids`].
    pub visible_pixels: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub frame_ids: Vec<u32>,
    pub fruitlets: Vec<TruthRecord>,
}

impl GroundTruth {
    pub fn spheres(&self) -> Vec<Sphere> {
        self.fruitlets
            .iter()
            .map(|f| Sphere {
                center: f.center,
                radius: f.radius,
            })
            .collect()
    }

    /// Ids of fruitlets with at least `min_points` visible pixels in some frame.
    pub fn visible_ids(&self, min_points: usize) -> Vec<u32> {
        self.fruitlets
            .iter()
            .filter(|f| f.visible_pixels.iter().any(|&c| c as usize >= min_points))
            .map(|f| f.id)
            .collect()
    }

    /// Ground truth restricted to fruitlets the scan could have counted.
    pub fn visible_only(&self, min_points: usize) -> GroundTruth {
        let ids = self.visible_ids(min_points);
        GroundTruth {
            frame_ids: self.frame_ids.clone(),
            fruitlets: self.fruitlets.iter().filter(|f| ids.contains(&f.id)).cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedScan {
    pub scene: Scene,
    pub frames: Vec<CameraFrame>,
    pub truth: GroundTruth,
}

/// Generates, plans, renders and degrades a full scan.
pub fn simulate_scan(cfg: &SimulationConfig) -> Result<SimulatedScan, SimError> {
    cfg.trajectory.validate()?;
    if !(0.0..1.0).contains(&cfg.noise.frame_drop_rate) {
        return Err(SimError::Spec("frame_drop_rate must be in [0, 1)".into()));
    }
    let scene = generate_scene(&cfg.scene)?;
    let poses = plan_trajectory(&cfg.trajectory, &scene);
    let mut drop_rng = ChaCha8Rng::seed_from_u64(cfg.scene.seed ^ 0xD509_F4A3);
    let mut frames = Vec::new();
    let mut per_frame_counts = Vec::new();
    for (i, pose) in poses.iter().enumerate() {
        if cfg.noise.frame_drop_rate > 0.0 && drop_rng.random_bool(cfg.noise.frame_drop_rate) {
            continue;
        }
        let rendered = render_frame(&scene, pose, &cfg.trajectory.intrinsics, i as u32);
        let mut frame = rendered.frame;
        if cfg.noise.mask_contamination_px > 0 {
            frame = contaminate_masks(&frame, cfg.noise.mask_contamination_px);
        }
        let noise_seed = cfg.scene.seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
        frame = add_noise(&frame, cfg.noise.depth_sigma, cfg.noise.outlier_rate, noise_seed)?;
        per_frame_counts.push(rendered.visible_pixels);
        frames.push(frame);
    }
    let truth = GroundTruth {
        frame_ids: frames.iter().map(|f| f.frame_id).collect(),
        fruitlets: scene
            .fruitlets
            .iter()
            .enumerate()
            .map(|(i, f)| TruthRecord {
                id: f.id,
                center: f.sphere.center,
                radius: f.sphere.radius,
                visible_pixels: per_frame_counts.iter().map(|c| c[i].1).collect(),
            })
            .collect(),
    };
    Ok(SimulatedScan { scene, frames, truth })
}
