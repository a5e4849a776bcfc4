use affrecon::core::camera::backproject;
use affrecon::core::{Pixel, Vec3};
use affrecon::synth::*;

#[test]
fn rendered_normals_are_unit_and_face_the_camera() {
    let k = default_intrinsics();
    let r = render(&SynthCupSpec::default(), &k).unwrap();
    let mut n_valid = 0;
    for p in r.depth.values().pixels() {
        let Some(n) = r.normals.get(p) else {
            assert!(!r.depth.is_valid(p));
            continue;
        };
        n_valid += 1;
        assert!((n.norm() - 1.0).abs() < 1e-12);
        assert!(n.dot(k.ray(p)) <= 0.0, "{p:?}");
    }
    assert_eq!(n_valid, r.depth.valid_count());
}

#[test]
fn top_down_view_sees_the_inner_bottom() {
    let mut s = SynthCupSpec::default();
    s.camera.elevation_deg = 90.0;
    let r = render(&s, &default_intrinsics()).unwrap();
    let c = Pixel::new(80, 60);
    let expected = s.camera.distance + s.camera.target_height - s.wall_thickness;
    assert!((r.depth.get(c).unwrap() - expected).abs() < 1e-9);
    assert_eq!(*r.mask.labels().get(c), 1);
    assert!(r.normals.get(c).unwrap().angle_to(-Vec3::Z) < 1e-9);
}

#[test]
fn normals_agree_with_depth_differences() {
    let k = default_intrinsics();
    for seed in 0..3 {
        let s = SynthCupSpec::default().varied(seed);
        let r = render(&s, &k).unwrap();
        let labels = r.mask.labels();
        let (mut total, mut good) = (0, 0);
        for p in labels.pixels() {
            if p.u < 2 || p.v < 2 || p.u + 2 >= k.width || p.v + 2 >= k.height {
                continue;
            }
            // Central differences need the whole 5x5 neighbourhood on one smooth patch.
            let patch: Vec<Pixel> = (p.v - 2..=p.v + 2)
                .flat_map(|v| (p.u - 2..=p.u + 2).map(move |u| Pixel::new(u, v)))
                .collect();
            let same = patch.iter().all(|&q| {
                labels.get(q) == labels.get(p) && r.depth.is_valid(q) && r.boundary.probs().get(q)[0] == 1.0
            });
            if !same {
                continue;
            }
            let pt = |u: usize, v: usize| {
                let q = Pixel::new(u, v);
                backproject(q, r.depth.get(q).unwrap(), &k).unwrap()
            };
            let du = pt(p.u + 1, p.v) - pt(p.u - 1, p.v);
            let dv = pt(p.u, p.v + 1) - pt(p.u, p.v - 1);
            let mut n = du.cross(dv).normalized().unwrap();
            if n.dot(k.ray(p)) > 0.0 {
                n = -n;
            }
            total += 1;
            if n.angle_to(r.normals.get(p).unwrap()).to_degrees() < 2.0 {
                good += 1;
            }
        }
        // Creases between flat and conical parts are not depth jumps, so a few stay.
        assert!(total > 200, "seed {seed}: {total}");
        assert!(good as f64 >= 0.9 * total as f64, "seed {seed}: {good}/{total}");
    }
}

#[test]
fn rendering_and_corruption_are_deterministic() {
    let k = default_intrinsics();
    let s = SynthCupSpec::default();
    assert_eq!(render(&s, &k).unwrap(), render(&s, &k).unwrap());
    let a = gen_synthetic(&s, &k, 7).unwrap();
    let b = gen_synthetic(&s, &k, 7).unwrap();
    assert_eq!(a.layers, b.layers);
    let c = gen_synthetic(&s, &k, 8).unwrap();
    assert_ne!(a.layers.depth_raw, c.layers.depth_raw);
    assert_eq!(a.depth_gt, c.depth_gt);
}

#[test]
fn full_drop_removes_every_object_depth() {
    let k = default_intrinsics();
    let mut s = SynthCupSpec::default();
    s.corruption.drop_fraction = 1.0;
    let scene = gen_synthetic(&s, &k, 0).unwrap();
    let gt = scene.depth_gt.as_ref().unwrap();
    for p in gt.values().pixels() {
        if scene.layers.mask.is_object(p) {
            assert!(!scene.layers.depth_raw.is_valid(p));
        } else {
            assert_eq!(scene.layers.depth_raw.get(p), gt.get(p));
        }
    }
    assert_eq!(scene.instances.len(), 1);
    assert_eq!(Some(scene.instances[0].bbox), object_bbox(&scene.layers.mask));
}

#[test]
fn varied_specs_differ_and_render() {
    let k = default_intrinsics();
    let base = SynthCupSpec::default();
    let specs: Vec<_> = (0..10).map(|s| base.varied(s)).collect();
    for (i, s) in specs.iter().enumerate() {
        assert!(s.validate().is_ok());
        assert_eq!(s.corruption, base.corruption);
        let r = render(s, &k).unwrap();
        let l = r.mask.labels().as_slice();
        // The support face is the underside, hidden from cameras above the table.
        assert!(l.contains(&1) && l.contains(&2), "spec {i}");
        assert!(!l.contains(&3), "spec {i}");
        for t in &specs[..i] {
            assert_ne!(s, t);
        }
    }
    assert_eq!(base.varied(3), base.varied(3));
}

#[test]
fn table_plane_and_rim_centre_match_the_rendering() {
    let k = default_intrinsics();
    let s = SynthCupSpec::default();
    let r = render(&s, &k).unwrap();
    let (n, d) = s.table_plane_camera();
    let bg = Pixel::new(2, 118);
    assert_eq!(*r.mask.labels().get(bg), 0);
    let x = backproject(bg, r.depth.get(bg).unwrap(), &k).unwrap();
    assert!((n.dot(x) - d).abs() < 1e-9);
    // The rim centre lies one cup height above the table.
    let c = s.rim_center_camera();
    assert!((n.dot(c) - d - s.height).abs() < 1e-9);
}
