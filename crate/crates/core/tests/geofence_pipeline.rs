use std::fs::File;
use std::io::{BufReader, BufWriter};

use cra_core::geofence::{build_maps, extract_contour, GridSpec, Point, Scene, SpatialMap, P_MIN};
use cra_core::metrics::marginal_accuracy;
use cra_core::optimizer::optimize;
use cra_core::{ChannelPair, Execution, FeasibleInterval, Policy, SourceModel};

fn open_scene(res: f64, n: usize) -> Scene {
    let mut s = Scene::demo();
    s.obstacles.clear();
    let half = res * (n - 1) as f64 / 2.0;
    s.grid = GridSpec {
        x_min: -half,
        y_min: -half,
        resolution: res,
        nx: n,
        ny: n,
    };
    s.bob_success_override = Some(0.8);
    s
}

#[test]
fn obstacle_free_contour_is_a_circle() {
    let scene = open_scene(8.0, 101);
    let src = SourceModel::new(0.1, 0.1).unwrap();
    let maps = build_maps(
        &scene,
        &src,
        &FeasibleInterval::default(),
        Execution::default(),
    )
    .unwrap();
    let contour = extract_contour(&maps.cra, 0.3).unwrap();
    assert_eq!(contour.polylines.len(), 1, "expected one ring");
    let ring = &contour.polylines[0];
    assert!(ring.closed);
    let radii: Vec<f64> = ring
        .points
        .iter()
        .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt())
        .collect();
    let (lo, hi) = radii
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    assert!(
        hi - lo < scene.grid.resolution,
        "radius spread {} over [{lo}, {hi}]",
        hi - lo
    );
    // Inside the ring Eve is close and the optimum is below the threshold.
    assert!(maps.cra.get(50, 50) < 0.3);
}

#[test]
fn far_field_reaches_the_eve_limit() {
    let scene = open_scene(8.0, 101);
    let src = SourceModel::new(0.1, 0.1).unwrap();
    let interval = FeasibleInterval::default();
    let maps = build_maps(&scene, &src, &interval, Execution::default()).unwrap();
    // Along the +x axis from the centre (node 50) outward.
    let ray: Vec<f64> = (51..101).map(|i| maps.cra.get(i, 50)).collect();
    assert!(ray.windows(2).all(|w| w[1] >= w[0] - 1e-15), "{ray:?}");
    let limit = optimize(&src, &ChannelPair::new(0.8, P_MIN).unwrap(), &interval).unwrap();
    let far = *ray.last().unwrap();
    assert!(far <= limit.value + 1e-15);
    // CRA never exceeds Bob's accuracy under the same policy.
    let ceiling = marginal_accuracy(
        &src,
        &ChannelPair::new(0.8, P_MIN).unwrap(),
        &Policy::new(limit.p_alpha_star).unwrap(),
    );
    assert!(limit.value <= ceiling);
}

#[test]
fn map_files_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let scene = open_scene(10.0, 21);
    let src = SourceModel::new(0.2, 0.3).unwrap();
    let maps = build_maps(
        &scene,
        &src,
        &FeasibleInterval::default(),
        Execution::Sequential,
    )
    .unwrap();

    let path = dir.path().join("cra.bin");
    maps.cra
        .write_binary(BufWriter::new(File::create(&path).unwrap()))
        .unwrap();
    let back = SpatialMap::read_binary(BufReader::new(File::open(&path).unwrap())).unwrap();
    assert_eq!(back, maps.cra);
    assert_eq!(back.digest(), maps.cra.digest());

    let csv = dir.path().join("cra.csv");
    maps.cra
        .write_csv(BufWriter::new(File::create(&csv).unwrap()))
        .unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    for (line, &v) in text.lines().skip(1).zip(&maps.cra.values) {
        let parsed: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(parsed.to_bits(), v.to_bits(), "CSV must round-trip exactly");
    }
}

#[test]
fn scene_file_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let scene = Scene::demo();
    let path = dir.path().join("scene.json");
    std::fs::write(&path, scene.to_json()).unwrap();
    let loaded = Scene::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(loaded, scene);
    assert_eq!(loaded.digest(), scene.digest());

    let src = SourceModel::new(0.1, 0.1).unwrap();
    let mut small = scene.clone();
    small.grid = GridSpec {
        x_min: -100.0,
        y_min: -100.0,
        resolution: 20.0,
        nx: 11,
        ny: 11,
    };
    let a = build_maps(
        &small,
        &src,
        &FeasibleInterval::default(),
        Execution::Sequential,
    )
    .unwrap();
    let mut moved = small.clone();
    moved.bob = Point::new(140.0, 0.0);
    let b = build_maps(
        &moved,
        &src,
        &FeasibleInterval::default(),
        Execution::Sequential,
    )
    .unwrap();
    assert_ne!(a.cra.scene_hash, b.cra.scene_hash);
}

#[test]
fn threshold_above_the_map_gives_an_empty_contour() {
    let scene = open_scene(10.0, 21);
    let src = SourceModel::new(0.1, 0.1).unwrap();
    let maps = build_maps(
        &scene,
        &src,
        &FeasibleInterval::default(),
        Execution::Sequential,
    )
    .unwrap();
    let tau = 0.99;
    assert!(maps.cra.max() < tau);
    let c = extract_contour(&maps.cra, tau).unwrap();
    assert!(c.polylines.is_empty());
    assert_eq!(c.inside_count(), scene.grid.len());
    let g = c.to_geojson(&maps.cra);
    assert_eq!(g["type"], "FeatureCollection");
    assert_eq!(g["properties"]["scene_hash"], maps.cra.scene_hash.as_str());
}
