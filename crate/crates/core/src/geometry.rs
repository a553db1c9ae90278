//! Core 3D types, the pinhole camera model, and backprojection of masked
//! depth pixels into point clouds.
//!
//! All lengths are millimetres. Camera coordinates follow the usual
//! computer-vision convention: +Z along the optical axis, +X right, +Y down.
//! Poses are camera-to-world.

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point in millimetres.
pub type Point3 = nalgebra::Point3<f64>;

/// Tolerance used when validating rotation matrices.
pub const ROTATION_TOLERANCE: f64 = 1e-6;

/// Depth value written for pixels with no measurement.
pub const INVALID_DEPTH: f32 = 0.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("rotation is not orthonormal with determinant +1 (det = {det:.9}, orthogonality error = {ortho:.3e})")]
    NotARotation { det: f64, ortho: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid intrinsics: {0}")]
    Intrinsics(String),
    #[error("image size mismatch: depth {depth:?}, mask {mask:?}")]
    SizeMismatch {
        depth: (u32, u32),
        mask: (u32, u32),
    },
    #[error("raster has {got} values, expected {expected}")]
    RasterLength { got: usize, expected: usize },
    #[error("unknown instance label {0}")]
    UnknownInstance(u16),
    #[error("mask labels must be contiguous 1..=K: {0}")]
    NonContiguousLabels(String),
    #[error("point cloud is already in the world frame")]
    AlreadyWorld,
}

/// A proper rigid motion `p -> R p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidTransform {
    /// Builds a transform, rejecting reflections and non-orthonormal matrices.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        if rotation.iter().chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("rigid transform"));
        }
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        let det = rotation.determinant();
        if ortho > ROTATION_TOLERANCE || (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(GeometryError::NotARotation { det, ortho });
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// Rotation about a unit axis by `angle` radians, followed by translation.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rot = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        Self {
            rotation: *rot.matrix(),
            translation,
        }
    }

    /// Camera pose looking from `eye` toward `target`, with the image "down"
    /// direction as close as possible to `down`.
    pub fn look_at(eye: Point3, target: Point3, down: Vector3<f64>) -> Self {
        let z = (target - eye).normalize();
        let x = down.cross(&z).normalize();
        let y = z.cross(&x);
        Self {
            rotation: Matrix3::from_columns(&[x, y, z]),
            translation: eye.coords,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `compose(a, b)(p) == a(b(p))`.
    pub fn compose(&self, b: &RigidTransform) -> Self {
        Self {
            rotation: self.rotation * b.rotation,
            translation: self.rotation * b.translation + self.translation,
        }
    }

    /// Homogeneous 4x4 matrix, row-major.
    pub fn to_rows(&self) -> [[f64; 4]; 4] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }

    pub fn from_matrix4(m: &Matrix4<f64>) -> Result<Self, GeometryError> {
        let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(GeometryError::NotARotation {
                det: f64::NAN,
                ortho: f64::NAN,
            });
        }
        Self::new(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            m.fixed_view::<3, 1>(0, 3).into_owned(),
        )
    }
}

/// Free-function form of [`RigidTransform::compose`].
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

/// Rectified pinhole intrinsics. Pixel `(u, v)` refers to the pixel centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self, GeometryError> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.fx.is_finite() && self.fy.is_finite() && self.fx > 0.0 && self.fy > 0.0) {
            return Err(GeometryError::Intrinsics(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64 && self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(GeometryError::Intrinsics(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Default test camera: 640x480 with a ~56 degree horizontal field of view.
    pub fn vga() -> Self {
        Self {
            fx: 600.0,
            fy: 600.0,
            cx: 320.0,
            cy: 240.0,
            width: 640,
            height: 480,
        }
    }

    /// Scales resolution and focal lengths together, keeping the field of view.
    pub fn scaled(&self, factor: f64) -> Self {
        let width = (self.width as f64 * factor).round() as u32;
        let height = (self.height as f64 * factor).round() as u32;
        Self {
            fx: self.fx * factor,
            fy: self.fy * factor,
            cx: (self.cx * factor).min(width as f64 - 1.0),
            cy: (self.cy * factor).min(height as f64 - 1.0),
            width,
            height,
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Camera-frame point at depth `z` along the ray through pixel `(u, v)`.
    pub fn unproject(&self, u: f64, v: f64, z: f64) -> Point3 {
        Point3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z)
    }

    /// Pixel coordinates of a camera-frame point, `None` behind the camera.
    pub fn project(&self, p: &Point3) -> Option<(f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        Some((self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    /// Ray direction through pixel `(u, v)` with unit Z component.
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }
}

/// Metric Z-depth raster in millimetres, row-major. Non-positive or
/// non-finite values mean "no measurement".
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    width: u32,
    height: u32,
    values: Vec<f32>,
}

impl DepthImage {
    pub fn new(width: u32, height: u32, values: Vec<f32>) -> Result<Self, GeometryError> {
        let expected = width as usize * height as usize;
        if values.len() != expected {
            return Err(GeometryError::RasterLength {
                got: values.len(),
                expected,
            });
        }
        Ok(Self { width, height, values })
    }

    pub fn invalid(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            values: vec![INVALID_DEPTH; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    pub fn raw(&self, u: u32, v: u32) -> f32 {
        self.values[v as usize * self.width as usize + u as usize]
    }

    /// Valid depth at a pixel, if any.
    pub fn get(&self, u: u32, v: u32) -> Option<f64> {
        let d = self.raw(u, v);
        is_valid_depth(d).then_some(d as f64)
    }

    /// Smallest and largest valid depth.
    pub fn valid_range(&self) -> Option<(f32, f32)> {
        self.values
            .iter()
            .copied()
            .filter(|d| is_valid_depth(*d))
            .fold(None, |acc, d| match acc {
                None => Some((d, d)),
                Some((lo, hi)) => Some((lo.min(d), hi.max(d))),
            })
    }
}

pub fn is_valid_depth(d: f32) -> bool {
    d.is_finite() && d > 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceClass {
    Fruitlet,
    Calyx,
    Stem,
}

/// Metadata for one detected instance. Labels are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub label: u16,
    pub class: InstanceClass,
    pub score: f64,
}

/// Per-pixel instance labels (0 = background) plus per-instance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskImage {
    width: u32,
    height: u32,
    labels: Vec<u16>,
    instances: Vec<Instance>,
}

impl MaskImage {
    pub fn new(width: u32, height: u32, labels: Vec<u16>, instances: Vec<Instance>) -> Result<Self, GeometryError> {
        let expected = width as usize * height as usize;
        if labels.len() != expected {
            return Err(GeometryError::RasterLength {
                got: labels.len(),
                expected,
            });
        }
        for (i, inst) in instances.iter().enumerate() {
            if inst.label as usize != i + 1 {
                return Err(GeometryError::NonContiguousLabels(format!(
                    "instance #{i} has label {}, expected {}",
                    inst.label,
                    i + 1
                )));
            }
            if !(0.0..=1.0).contains(&inst.score) {
                return Err(GeometryError::NonContiguousLabels(format!(
                    "instance {} score {} outside [0, 1]",
                    inst.label, inst.score
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize > instances.len()) {
            return Err(GeometryError::NonContiguousLabels(format!(
                "pixel label {bad} exceeds instance count {}",
                instances.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
            instances,
        })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            labels: vec![0; width as usize * height as usize],
            instances: Vec::new(),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn label(&self, u: u32, v: u32) -> u16 {
        self.labels[v as usize * self.width as usize + u as usize]
    }

    pub fn instance(&self, label: u16) -> Option<&Instance> {
        (label >= 1).then(|| self.instances.get(label as usize - 1)).flatten()
    }

    pub fn pixel_count(&self, label: u16) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Mean pixel coordinate of an instance.
    pub fn centroid(&self, label: u16) -> Option<(f64, f64)> {
        let (mut su, mut sv, mut n) = (0.0, 0.0, 0usize);
        for (i, _) in self.labels.iter().enumerate().filter(|(_, &l)| l == label) {
            su += (i % self.width as usize) as f64;
            sv += (i / self.width as usize) as f64;
            n += 1;
        }
        (n > 0).then(|| (su / n as f64, sv / n as f64))
    }
}

/// One viewpoint of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraFrame {
    pub frame_id: u32,
    pub intrinsics: CameraIntrinsics,
    /// Camera-to-world.
    pub pose: RigidTransform,
    pub depth: DepthImage,
    pub masks: MaskImage,
}

impl CameraFrame {
    pub fn validate(&self) -> Result<(), GeometryError> {
        self.intrinsics.validate()?;
        let k = (self.intrinsics.width, self.intrinsics.height);
        let d = (self.depth.width, self.depth.height);
        let m = (self.masks.width, self.masks.height);
        if d != m || d != k {
            return Err(GeometryError::SizeMismatch { depth: d, mask: m });
        }
        RigidTransform::new(self.pose.rotation, self.pose.translation)?;
        Ok(())
    }

    /// World-frame position of the optical centre.
    pub fn camera_center(&self) -> Point3 {
        Point3::from(self.pose.translation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordinateFrame {
    Camera,
    World,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub frame: CoordinateFrame,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>, frame: CoordinateFrame) -> Result<Self, GeometryError> {
        if points.iter().any(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::NonFinite("point cloud"));
        }
        Ok(Self { points, frame })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<Point3> {
        centroid(&self.points)
    }
}

pub fn centroid(points: &[Point3]) -> Option<Point3> {
    if points.is_empty() {
        return None;
    }
    let sum = points.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords);
    Some(Point3::from(sum / points.len() as f64))
}

/// Camera-frame cloud of every pixel labelled `instance` that has a valid
/// depth, in row-major pixel order.
pub fn backproject(
    depth: &DepthImage,
    intrinsics: &CameraIntrinsics,
    mask: &MaskImage,
    instance: u16,
) -> Result<PointCloud, GeometryError> {
    if (depth.width, depth.height) != (mask.width, mask.height) {
        return Err(GeometryError::SizeMismatch {
            depth: (depth.width, depth.height),
            mask: (mask.width, mask.height),
        });
    }
    if mask.instance(instance).is_none() {
        return Err(GeometryError::UnknownInstance(instance));
    }
    let w = depth.width as usize;
    let points = mask
        .labels
        .iter()
        .zip(&depth.values)
        .enumerate()
        .filter(|(_, (&l, &d))| l == instance && is_valid_depth(d))
        .map(|(i, (_, &d))| intrinsics.unproject((i % w) as f64, (i / w) as f64, d as f64))
        .collect();
    Ok(PointCloud {
        points,
        frame: CoordinateFrame::Camera,
    })
}

/// Maps a camera-frame cloud into the world frame.
pub fn to_world(cloud: &PointCloud, pose: &RigidTransform) -> Result<PointCloud, GeometryError> {
    if cloud.frame == CoordinateFrame::World {
        return Err(GeometryError::AlreadyWorld);
    }
    Ok(PointCloud {
        points: cloud.points.iter().map(|p| pose.apply(p)).collect(),
        frame: CoordinateFrame::World,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_transform(rng: &mut ChaCha8Rng) -> RigidTransform {
        let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let t = Vector3::new(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0));
        RigidTransform::from_axis_angle(axis, rng.random_range(-3.0..3.0), t)
    }

    fn single_pixel_frame(u: u32, v: u32, z: f32) -> (DepthImage, CameraIntrinsics, MaskImage) {
        let k = CameraIntrinsics::new(100.0, 100.0, 50.0, 40.0, 200, 80).unwrap();
        let mut depth = DepthImage::invalid(200, 80);
        let mut labels = vec![0u16; 200 * 80];
        let i = v as usize * 200 + u as usize;
        depth.values_mut()[i] = z;
        labels[i] = 1;
        let mask = MaskImage::new(
            200,
            80,
            labels,
            vec![Instance {
                label: 1,
                class: InstanceClass::Fruitlet,
                score: 0.9,
            }],
        )
        .unwrap();
        (depth, k, mask)
    }

    #[test]
    fn principal_point_backprojects_on_axis() {
        let (d, k, m) = single_pixel_frame(50, 40, 400.0);
        let c = backproject(&d, &k, &m, 1).unwrap();
        assert_eq!(c.points, vec![Point3::new(0.0, 0.0, 400.0)]);
        assert_eq!(c.frame, CoordinateFrame::Camera);
    }

    #[test]
    fn forty_five_degree_ray() {
        let (d, k, m) = single_pixel_frame(150, 40, 400.0);
        let c = backproject(&d, &k, &m, 1).unwrap();
        assert_eq!(c.points, vec![Point3::new(400.0, 0.0, 400.0)]);
    }

    #[test]
    fn unknown_label_and_invalid_depth() {
        let (mut d, k, m) = single_pixel_frame(10, 10, 400.0);
        assert_eq!(backproject(&d, &k, &m, 2), Err(GeometryError::UnknownInstance(2)));
        assert_eq!(backproject(&d, &k, &m, 0), Err(GeometryError::UnknownInstance(0)));
        d.values_mut()[10 * 200 + 10] = INVALID_DEPTH;
        assert!(backproject(&d, &k, &m, 1).unwrap().is_empty());
        d.values_mut()[10 * 200 + 10] = f32::NAN;
        assert!(backproject(&d, &k, &m, 1).unwrap().is_empty());
    }

    #[test]
    fn reprojection_round_trip() {
        let k = CameraIntrinsics::vga();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let u = rng.random_range(0..k.width) as f64;
            let v = rng.random_range(0..k.height) as f64;
            let z = rng.random_range(100.0f32..2000.0) as f64;
            let (pu, pv) = k.project(&k.unproject(u, v, z)).unwrap();
            assert!((pu - u).abs() < 0.5 && (pv - v).abs() < 0.5);
        }
    }

    #[test]
    fn to_world_translation_and_guard() {
        let cloud = PointCloud::new(vec![Point3::new(1.0, 2.0, 3.0)], CoordinateFrame::Camera).unwrap();
        let w = to_world(&cloud, &RigidTransform::from_translation(Vector3::new(10.0, 0.0, 0.0))).unwrap();
        assert_eq!(w.points, vec![Point3::new(11.0, 2.0, 3.0)]);
        assert_eq!(w.frame, CoordinateFrame::World);
        assert_eq!(to_world(&cloud, &RigidTransform::identity()).unwrap().points, cloud.points);
        assert_eq!(to_world(&w, &RigidTransform::identity()), Err(GeometryError::AlreadyWorld));
    }

    #[test]
    fn to_world_preserves_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point3> = (0..60)
            .map(|_| Point3::new(rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0), rng.random_range(100.0..900.0)))
            .collect();
        let cloud = PointCloud::new(pts.clone(), CoordinateFrame::Camera).unwrap();
        for _ in 0..10 {
            let t = random_transform(&mut rng);
            let w = to_world(&cloud, &t).unwrap();
            assert_eq!(w.len(), pts.len());
            for i in 0..pts.len() {
                for j in 0..i {
                    let a = (pts[i] - pts[j]).norm();
                    let b = (w.points[i] - w.points[j]).norm();
                    assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn compose_matches_sequential_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t1 = random_transform(&mut rng);
        let t2 = random_transform(&mut rng);
        let c = compose(&t1, &t2);
        for _ in 0..100 {
            let p = Point3::new(rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
            assert!((c.apply(&p) - t1.apply(&t2.apply(&p))).norm() < 1e-9);
        }
        let id = compose(&RigidTransform::identity(), &t1);
        assert_eq!(id, t1);
        let round = compose(&t1, &t1.inverse());
        assert!((round.rotation() - Matrix3::identity()).abs().max() < 1e-9);
        assert!(round.translation().norm() < 1e-9);
    }

    #[test]
    fn long_composition_chains_stay_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut acc = RigidTransform::identity();
        for _ in 0..100 {
            acc = acc.compose(&random_transform(&mut rng));
        }
        assert!((acc.rotation().determinant() - 1.0).abs() < 1e-6);
        assert!(RigidTransform::new(*acc.rotation(), *acc.translation()).is_ok());
    }

    #[test]
    fn reflection_is_rejected() {
        let m = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(matches!(
            RigidTransform::new(m, Vector3::zeros()),
            Err(GeometryError::NotARotation { .. })
        ));
    }

    #[test]
    fn mask_validation() {
        let inst = |label| Instance {
            label,
            class: InstanceClass::Fruitlet,
            score: 0.5,
        };
        assert!(MaskImage::new(2, 1, vec![0, 1], vec![inst(1)]).is_ok());
        assert!(MaskImage::new(2, 1, vec![0, 2], vec![inst(1)]).is_err());
        assert!(MaskImage::new(2, 1, vec![0, 1], vec![inst(2)]).is_err());
        assert!(MaskImage::new(3, 1, vec![0, 1], vec![inst(1)]).is_err());
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 1.0, 1.0, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 4.0, 1.0, 4, 4).is_err());
        assert!(CameraIntrinsics::vga().validate().is_ok());
        assert!(CameraIntrinsics::vga().scaled(6.25).validate().is_ok());
    }
}
