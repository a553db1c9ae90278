//! Counting apple fruitlets from a sequence of masked depth frames.
//!
//! Each fruitlet detection is back-projected into a point cloud, cleaned of
//! occluders by a two-cluster split, fitted with a sphere, and merged into a
//! global map when its volume overlap with an existing sphere is large
//! enough. A ray-cast simulator supplies scans with exact ground truth.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod eval;
pub mod extraction;
pub mod fruit_map;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod simulator;
pub mod sphere_fit;

pub use eval::{compute_metrics, percentage_error, CountReport, Metrics};
pub use extraction::{ExtractionConfig, FruitletObservation};
pub use fruit_map::{intersection_ratio, FruitletMap, MatchConfig};
pub use geometry::{CameraFrame, CameraIntrinsics, DepthImage, MaskImage, Point3, PointCloud, RigidTransform};
pub use pipeline::{process_scan, PipelineConfig};
pub use simulator::{simulate_scan, SimulationConfig};
pub use sphere_fit::{fit_least_squares, fit_ransac, FitMethod, RansacConfig, Sphere};
