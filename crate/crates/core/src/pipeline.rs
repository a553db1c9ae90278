//! End-to-end scan processing: extraction, occlusion split, sphere fit,
//! curvature correction, and registration into a [`FruitletMap`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::EvalConfig;
use crate::extraction::{extract_frame, split_occlusion, ExtractionConfig, FruitletObservation};
use crate::fruit_map::{FruitletMap, MatchConfig, Registration};
use crate::geometry::CameraFrame;
use crate::sphere_fit::{
    correct_curvature, fit_least_squares, fit_ransac, CurvatureOutcome, FitError, FitMethod, FitResult, RansacConfig,
    Sphere,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("scan has no frames")]
    NoFrames,
    #[error("frame ids must be strictly increasing: {prev} then {next}")]
    FrameOrder { prev: u32, next: u32 },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Sphere fitting selection plus RANSAC parameters (kept even when the
/// least-squares method is selected, for the radius bounds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub method: FitMethod,
    pub ransac: RansacConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            method: FitMethod::Ransac,
            ransac: RansacConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub extraction: ExtractionConfig,
    pub fit: FitConfig,
    pub matching: MatchConfig,
    pub evaluation: EvalConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.extraction.validate().map_err(PipelineError::Config)?;
        self.fit.ransac.validate().map_err(PipelineError::Config)?;
        self.matching.validate().map_err(PipelineError::Config)?;
        if !(self.evaluation.center_tolerance_mm > 0.0) {
            return Err(PipelineError::Config("evaluation.center_tolerance_mm must be > 0".into()));
        }
        Ok(())
    }
}

/// Per-scan counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanStats {
    pub frames: usize,
    pub detections: usize,
    pub rejected_class: usize,
    pub rejected_score: usize,
    pub rejected_points: usize,
    pub observations: usize,
    pub occlusion_splits: usize,
    pub fit_failures: usize,
    pub curvature_flips: usize,
    pub merges: usize,
    pub new_tracks: usize,
}

/// One fitted sphere ready for registration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereObservation {
    pub frame_id: u32,
    pub instance: u16,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub map: FruitletMap,
    pub stats: ScanStats,
    pub stream: Vec<SphereObservation>,
}

/// Seed for one observation's RANSAC run, independent of processing order.
pub fn observation_seed(base: u64, frame_id: u32, instance: u16) -> u64 {
    let mut z = base ^ ((frame_id as u64) << 16 | instance as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    // splitmix64 finaliser
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fits one observation with the configured method and bounds.
pub fn fit_observation(obs: &FruitletObservation, cfg: &FitConfig) -> Result<FitResult, FitError> {
    let fit = match cfg.method {
        FitMethod::Ransac => {
            let ransac = RansacConfig {
                seed: observation_seed(cfg.ransac.seed, obs.frame_id, obs.instance),
                ..cfg.ransac
            };
            fit_ransac(&obs.cloud.points, &ransac)?
        }
        FitMethod::LeastSquares => fit_least_squares(&obs.cloud.points)?,
    };
    let (lo, hi) = cfg.ransac.radius_bounds;
    if fit.sphere.radius < lo || fit.sphere.radius > hi {
        return Err(FitError::Failed(format!(
            "radius {:.2} mm outside [{lo}, {hi}]",
            fit.sphere.radius
        )));
    }
    Ok(fit)
}

/// Runs extraction and fitting over all frames and returns the ordered
/// stream of sphere observations that registration consumes.
pub fn observe_scan(frames: &[CameraFrame], cfg: &PipelineConfig) -> Result<(Vec<SphereObservation>, ScanStats), PipelineError> {
    cfg.validate()?;
    if frames.is_empty() {
        return Err(PipelineError::NoFrames);
    }
    for w in frames.windows(2) {
        if w[1].frame_id <= w[0].frame_id {
            return Err(PipelineError::FrameOrder {
                prev: w[0].frame_id,
                next: w[1].frame_id,
            });
        }
    }
    let mut stats = ScanStats {
        frames: frames.len(),
        ..Default::default()
    };
    let mut stream = Vec::new();
    for frame in frames {
        let (observations, ex) = extract_frame(frame, &cfg.extraction);
        stats.detections += ex.detections;
        stats.rejected_class += ex.non_fruitlet;
        stats.rejected_score += ex.low_score;
        stats.rejected_points += ex.too_few_points;
        for obs in observations {
            stats.observations += 1;
            let (obs, split) = split_occlusion(&obs, &cfg.extraction);
            stats.occlusion_splits += usize::from(split);
            let fit = match fit_observation(&obs, &cfg.fit) {
                Ok(f) => f,
                Err(e) => {
                    log::info!("frame {} instance {}: {e}", obs.frame_id, obs.instance);
                    stats.fit_failures += 1;
                    continue;
                }
            };
            let (fit, outcome) = correct_curvature(&fit, &obs);
            stats.curvature_flips += usize::from(outcome == CurvatureOutcome::Flipped);
            stream.push(SphereObservation {
                frame_id: obs.frame_id,
                instance: obs.instance,
                fit,
            });
        }
    }
    Ok((stream, stats))
}

/// Registers a recorded sphere stream in order.
pub fn build_map(stream: &[SphereObservation], matching: &MatchConfig) -> (FruitletMap, usize, usize) {
    let mut map = FruitletMap::new();
    let (mut merges, mut created) = (0, 0);
    for s in stream {
        match map.register(s.fit.sphere, s.frame_id, matching) {
            Registration::Merged(_) => merges += 1,
            Registration::Created(_) => created += 1,
        }
    }
    (map, merges, created)
}

/// Full pipeline over one scan.
pub fn process_scan(frames: &[CameraFrame], cfg: &PipelineConfig) -> Result<ScanResult, PipelineError> {
    let (stream, mut stats) = observe_scan(frames, cfg)?;
    let (map, merges, created) = build_map(&stream, &cfg.matching);
    stats.merges = merges;
    stats.new_tracks = created;
    Ok(ScanResult { map, stats, stream })
}

/// Spheres of the final map, in track order.
pub fn map_spheres(map: &FruitletMap) -> Vec<Sphere> {
    map.tracks().iter().map(|t| t.sphere).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CameraIntrinsics, DepthImage, MaskImage, RigidTransform};

    fn empty_frame(id: u32) -> CameraFrame {
        let k = CameraIntrinsics::new(50.0, 50.0, 16.0, 12.0, 32, 24).unwrap();
        CameraFrame {
            frame_id: id,
            intrinsics: k,
            pose: RigidTransform::identity(),
            depth: DepthImage::invalid(32, 24),
            masks: MaskImage::empty(32, 24),
        }
    }

    #[test]
    fn empty_scan_is_an_error() {
        assert_eq!(process_scan(&[], &PipelineConfig::default()), Err(PipelineError::NoFrames));
    }

    #[test]
    fn detection_free_scan_gives_empty_map() {
        let frames: Vec<CameraFrame> = (0..5).map(empty_frame).collect();
        let res = process_scan(&frames, &PipelineConfig::default()).unwrap();
        assert_eq!(res.map.count(), 0);
        assert_eq!(res.stats.frames, 5);
        assert_eq!(res.stats.detections, 0);
    }

    #[test]
    fn frames_must_be_ordered() {
        let frames = vec![empty_frame(2), empty_frame(1)];
        assert!(matches!(
            process_scan(&frames, &PipelineConfig::default()),
            Err(PipelineError::FrameOrder { .. })
        ));
    }

    #[test]
    fn bad_config_is_rejected() {
        let mut cfg = PipelineConfig::default();
        cfg.extraction.min_points = 3;
        assert!(matches!(process_scan(&[empty_frame(0)], &cfg), Err(PipelineError::Config(_))));
    }

    #[test]
    fn seeds_differ_per_observation() {
        let a = observation_seed(1, 0, 1);
        assert_ne!(a, observation_seed(1, 0, 2));
        assert_ne!(a, observation_seed(1, 1, 1));
        assert_ne!(a, observation_seed(2, 0, 1));
        assert_eq!(a, observation_seed(1, 0, 1));
    }
}
