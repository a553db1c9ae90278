//! Persistent fruitlet map: volumetric sphere matching and stable count ids.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::geometry::Point3;
use crate::sphere_fit::Sphere;

/// Fraction of the smaller sphere's volume that lies inside the other sphere.
///
/// Symmetric in its arguments; 1 for containment, 0 for disjoint spheres.
pub fn intersection_ratio(a: &Sphere, b: &Sphere) -> f64 {
    let (big, small) = if a.radius >= b.radius { (a.radius, b.radius) } else { (b.radius, a.radius) };
    let d = (a.center - b.center).norm();
    if d >= big + small {
        return 0.0;
    }
    if d <= big - small {
        return 1.0;
    }
    let lens = lens_volume(big, small, d);
    (lens / (4.0 / 3.0 * PI * small.powi(3))).clamp(0.0, 1.0)
}

/// Volume of the intersection of two overlapping spheres with radii `big`,
/// `small` and centre distance `d`, where `big - small < d < big + small`.
pub fn lens_volume(big: f64, small: f64, d: f64) -> f64 {
    let (rr, r) = (big, small);
    PI * (rr + r - d).powi(2) * (d * d + 2.0 * d * r - 3.0 * r * r + 2.0 * d * rr + 6.0 * r * rr - 3.0 * rr * rr)
        / (12.0 * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    /// Minimum intersection ratio for a new sphere to merge into a track.
    pub merge_threshold: f64,
    /// Weight the merge by observation count instead of a plain pairwise mean.
    pub weighted_average: bool,
    /// Only tracks seen within this many frames are merge candidates.
    pub frame_window: Option<u32>,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            merge_threshold: 0.5,
            weighted_average: false,
            frame_window: None,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.merge_threshold > 0.0 && self.merge_threshold <= 1.0) {
            return Err(format!("matching.merge_threshold {} outside (0, 1]", self.merge_threshold));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FruitletTrack {
    pub id: u32,
    pub sphere: Sphere,
    pub observations: u32,
    pub first_frame: u32,
    pub last_frame: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Registration {
    Merged(u32),
    Created(u32),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FruitletMap {
    tracks: Vec<FruitletTrack>,
    next_id: u32,
}

impl FruitletMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tracks(&self) -> &[FruitletTrack] {
        &self.tracks
    }

    pub fn next_id(&self) -> u32 {
        self.next_id
    }

    /// Number of counted fruitlets.
    pub fn count(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    /// Merges `sphere` into the best-overlapping track, or starts a new one.
    pub fn register(&mut self, sphere: Sphere, frame_id: u32, cfg: &MatchConfig) -> Registration {
        let mut best: Option<(usize, f64)> = None;
        for (i, t) in self.tracks.iter().enumerate() {
            if let Some(window) = cfg.frame_window {
                if frame_id.saturating_sub(t.last_frame) > window {
                    continue;
                }
            }
            let ratio = intersection_ratio(&t.sphere, &sphere);
            // tracks are in id order, so strict > keeps the lowest id on ties
            if best.is_none_or(|(_, r)| ratio > r) {
                best = Some((i, ratio));
            }
        }
        match best {
            Some((i, ratio)) if ratio >= cfg.merge_threshold => {
                let t = &mut self.tracks[i];
                let w = if cfg.weighted_average {
                    t.observations as f64 / (t.observations as f64 + 1.0)
                } else {
                    0.5
                };
                t.sphere = Sphere {
                    center: Point3::from(t.sphere.center.coords * w + sphere.center.coords * (1.0 - w)),
                    radius: t.sphere.radius * w + sphere.radius * (1.0 - w),
                };
                t.observations += 1;
                t.last_frame = t.last_frame.max(frame_id);
                Registration::Merged(t.id)
            }
            _ => {
                let id = self.next_id;
                self.next_id += 1;
                self.tracks.push(FruitletTrack {
                    id,
                    sphere,
                    observations: 1,
                    first_frame: frame_id,
                    last_frame: frame_id,
                });
                Registration::Created(id)
            }
        }
    }

    /// Test helper for building maps with arbitrary tracks.
    pub fn from_spheres(spheres: impl IntoIterator<Item = Sphere>) -> Self {
        let mut map = Self::new();
        for s in spheres {
            let id = map.next_id;
            map.next_id += 1;
            map.tracks.push(FruitletTrack {
                id,
                sphere: s,
                observations: 1,
                first_frame: 0,
                last_frame: 0,
            });
        }
        map
    }
}

pub fn count(map: &FruitletMap) -> usize {
    map.count()
}
