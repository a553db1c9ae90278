use fruitlet_map::eval::CountReport;
use fruitlet_map::pipeline::{process_scan, PipelineConfig};
use fruitlet_map::simulator::{
    generate_scene, plan_trajectory, render_frame, GroundTruth, GroundTruthFruitlet, SceneSpec, TrajectorySpec, TruthRecord,
};
use fruitlet_map::{Point3, Sphere};

#[test]
fn fruitlet_outside_every_view_is_a_visibility_miss() {
    let spec = SceneSpec {
        fruitlet_count: 40,
        seed: 21,
        ..Default::default()
    };
    let mut scene = generate_scene(&spec).unwrap();
    // 2 m past the end of the branch: no viewpoint sees it
    scene.fruitlets.push(GroundTruthFruitlet {
        id: 40,
        cluster: u32::MAX,
        sphere: Sphere::new(Point3::new(spec.branch_length + 2000.0, 0.0, -40.0), 12.0).unwrap(),
    });
    let trajectory = TrajectorySpec::default();
    let poses = plan_trajectory(&trajectory, &scene);
    let mut frames = Vec::new();
    let mut visible: Vec<Vec<u32>> = vec![Vec::new(); scene.fruitlets.len()];
    for (i, pose) in poses.iter().enumerate() {
        let r = render_frame(&scene, pose, &trajectory.intrinsics, i as u32);
        for (k, (id, px)) in r.visible_pixels.iter().enumerate() {
            assert_eq!(*id, scene.fruitlets[k].id);
            visible[k].push(*px);
        }
        frames.push(r.frame);
    }
    let truth = GroundTruth {
        frame_ids: frames.iter().map(|f| f.frame_id).collect(),
        fruitlets: scene
            .fruitlets
            .iter()
            .zip(visible)
            .map(|(f, v)| TruthRecord {
                id: f.id,
                center: f.sphere.center,
                radius: f.sphere.radius,
                visible_pixels: v,
            })
            .collect(),
    };

    let cfg = PipelineConfig::default();
    let res = process_scan(&frames, &cfg).unwrap();
    let never_visible = truth.fruitlets.len() - truth.visible_ids(cfg.extraction.min_points).len();
    let report = CountReport::from_map(&res.map, &truth.spheres(), cfg.evaluation.center_tolerance_mm);
    assert_eq!(never_visible, 1);
    assert_eq!(res.map.count(), 40);
    assert_eq!(report.fp, 0);
    assert_eq!(report.fn_, 1);
}
