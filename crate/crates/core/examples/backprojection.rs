//! Renders one sphere, back-projects its mask into a point cloud, moves it to
//! the world frame, and checks that every point lies on the true surface.

use fruitlet_map::geometry::{backproject, to_world, CameraIntrinsics, RigidTransform};
use fruitlet_map::simulator::{render_frame, GroundTruthFruitlet, Scene};
use fruitlet_map::{Point3, Sphere};
use nalgebra::Vector3;

fn main() {
    let truth = Sphere::new(Point3::new(120.0, 0.0, 40.0), 14.0).unwrap();
    let scene = Scene {
        fruitlets: vec![GroundTruthFruitlet {
            id: 0,
            cluster: 0,
            sphere: truth,
        }],
        leaves: vec![],
        branch_start: Point3::new(0.0, 5000.0, 0.0),
        branch_end: Point3::new(1.0, 5000.0, 0.0),
        branch_radius: 1.0,
    };
    let k = CameraIntrinsics::vga();
    let eye = Point3::new(100.0, -350.0, 60.0);
    let pose = RigidTransform::look_at(eye, truth.center, Vector3::new(0.0, 0.0, -1.0));
    let frame = render_frame(&scene, &pose, &k, 0).frame;

    let label = frame.masks.instances()[0].label;
    let camera_cloud = backproject(&frame.depth, &k, &frame.masks, label).unwrap();
    let world = to_world(&camera_cloud, &pose).unwrap();
    let worst = world.points.iter().map(|p| truth.residual(p).abs()).fold(0.0, f64::max);

    let first = camera_cloud.points[0];
    let (u, v) = k.project(&first).unwrap();
    println!("{} points; worst distance to the true surface {worst:.4} mm", world.len());
    println!("first point {first:.2?} reprojects to pixel ({u:.3}, {v:.3})");
}
