use affrecon_core::depth::{
    assemble_system, solve, Anchors, BoundaryMap, BoundaryWeighting, DepthImage, EnergyWeights, NormalMap,
    SolverConfig, SparseSystem, Term,
};
use affrecon_core::{CameraIntrinsics, Grid, Pixel, Plane, Vec3};
use proptest::prelude::*;

const W: usize = 40;
const H: usize = 30;

fn intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(300.0, 300.0, 19.5, 14.5, W, H).unwrap()
}

fn tilted_plane() -> Plane {
    Plane::new(Vec3::new(0.25, -0.35, -1.0).normalized().unwrap(), -0.45).unwrap()
}

/// Exact depth of the plane along every pixel ray.
fn plane_depth(plane: &Plane, k: &CameraIntrinsics) -> DepthImage {
    DepthImage::from_values(Grid::from_fn(W, H, |p| {
        let r = k.ray(p);
        plane.offset / plane.normal.dot(r)
    }))
}

fn hole() -> Grid<bool> {
    Grid::from_fn(W, H, |p| (8..32).contains(&p.u) && (6..24).contains(&p.v))
}

struct Patch {
    gt: DepthImage,
    observed: DepthImage,
    mask: Grid<bool>,
    normals: NormalMap,
    boundary: BoundaryMap,
    k: CameraIntrinsics,
}

fn patch() -> Patch {
    let k = intrinsics();
    let plane = tilted_plane();
    let gt = plane_depth(&plane, &k);
    let mask = hole();
    let mut observed = gt.clone();
    for p in mask.pixels() {
        if *mask.get(p) {
            observed.invalidate(p);
        }
    }
    Patch {
        gt,
        observed,
        mask,
        normals: NormalMap::uniform(W, H, plane.normal),
        boundary: BoundaryMap::empty(W, H),
        k,
    }
}

fn system(p: &Patch, weights: &EnergyWeights) -> SparseSystem {
    assemble_system(
        &p.observed,
        &p.mask,
        &p.normals,
        &p.boundary,
        &p.k,
        weights,
        BoundaryWeighting::PerPixel,
        Anchors::AllObserved,
    )
    .unwrap()
}

#[test]
fn planar_hole_is_filled_with_the_plane() {
    let p = patch();
    let s = system(&p, &EnergyWeights::default());
    let init = DepthImage::from_values(Grid::filled(W, H, 1.0));
    let (out, report) = solve(&s, &init, &SolverConfig::default());
    assert!(report.converged);
    let mut worst: f64 = 0.0;
    for q in p.mask.pixels().filter(|q| *p.mask.get(*q)) {
        worst = worst.max((out.get(q).unwrap() - p.gt.get(q).unwrap()).abs());
    }
    assert!(worst <= 1e-4, "max error {worst}");
    assert!(report.energy_after <= report.energy_before);
}

#[test]
fn gradient_matches_central_differences() {
    let p = patch();
    let s = system(&p, &EnergyWeights::default());
    let x: Vec<f64> = (0..s.num_unknowns()).map(|i| 0.4 + 0.001 * ((i * 7919) % 97) as f64).collect();
    let g = s.gradient(&x);
    let h = 1e-6;
    for i in (0..x.len()).step_by(13) {
        let mut a = x.clone();
        let mut b = x.clone();
        a[i] += h;
        b[i] -= h;
        let fd = (s.energy_of(&a) - s.energy_of(&b)) / (2.0 * h);
        let scale = g[i].abs().max(1e-3);
        assert!((fd - g[i]).abs() <= 1e-5 * scale, "unknown {i}: analytic {} fd {fd}", g[i]);
    }
}

#[test]
fn smoothness_rows_follow_pixel_adjacency() {
    // 3×2 solved, no anchors: 7 4-neighbour pairs.
    let k = CameraIntrinsics::new(100.0, 100.0, 1.0, 0.5, 3, 2).unwrap();
    let d = DepthImage::invalid(3, 2);
    let s = assemble_system(
        &d,
        &Grid::filled(3, 2, true),
        &NormalMap::uniform(3, 2, Vec3::new(0.0, 0.0, -1.0)),
        &BoundaryMap::empty(3, 2),
        &k,
        &EnergyWeights::default(),
        BoundaryWeighting::PerPixel,
        Anchors::AllObserved,
    )
    .unwrap();
    assert_eq!(s.count(Term::Data), 0);
    assert_eq!(s.count(Term::Smoothness), 7);
    assert_eq!(s.count(Term::Normal), 14);
    assert!(s.is_underdetermined());
}

#[test]
fn occlusion_boundary_switches_off_normal_rows() {
    let k = CameraIntrinsics::new(100.0, 100.0, 0.5, 0.0, 2, 1).unwrap();
    let d = DepthImage::from_values(Grid::from_vec(2, 1, vec![0.5, 0.6]).unwrap());
    let b = BoundaryMap::new(Grid::from_vec(2, 1, vec![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]).unwrap()).unwrap();
    let s = assemble_system(
        &d,
        &Grid::filled(2, 1, true),
        &NormalMap::uniform(2, 1, Vec3::new(0.0, 0.0, -1.0)),
        &b,
        &k,
        &EnergyWeights::default(),
        BoundaryWeighting::PerPixel,
        Anchors::AllObserved,
    )
    .unwrap();
    // The row based at the occluding pixel is dropped; the other keeps full weight.
    let normal: Vec<_> = s.rows().iter().filter(|r| r.term == Term::Normal).collect();
    assert_eq!(normal.len(), 1);
    assert_eq!(normal[0].weight, 1.0);
}

#[test]
fn heavy_data_weight_reproduces_exact_raw_depth() {
    let k = intrinsics();
    let gt = plane_depth(&tilted_plane(), &k);
    // Normals deliberately wrong: with every pixel observed the data term dominates.
    let s = assemble_system(
        &gt,
        &Grid::filled(W, H, true),
        &NormalMap::uniform(W, H, Vec3::new(0.6, 0.0, -0.8)),
        &BoundaryMap::empty(W, H),
        &k,
        &EnergyWeights::default(),
        BoundaryWeighting::PerPixel,
        Anchors::AllObserved,
    )
    .unwrap();
    let (out, _) = solve(&s, &DepthImage::from_values(Grid::filled(W, H, 1.0)), &SolverConfig::default());
    for q in gt.values().pixels() {
        assert!((out.get(q).unwrap() - gt.get(q).unwrap()).abs() < 1e-3);
    }
}

#[test]
fn solving_twice_is_idempotent() {
    let p = patch();
    let s = system(&p, &EnergyWeights::default());
    let (once, _) = solve(&s, &p.observed, &SolverConfig::default());
    let (twice, r2) = solve(&s, &once, &SolverConfig::default());
    for q in p.mask.pixels().filter(|q| *p.mask.get(*q)) {
        assert!((once.get(q).unwrap() - twice.get(q).unwrap()).abs() < 1e-6);
    }
    assert!(r2.energy_after <= r2.energy_before + 1e-12);
}

fn random_rows(n: usize, seed: u64) -> Vec<(Term, f64, Vec<(usize, f64)>, f64)> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64) / ((1u64 << 53) as f64)
    };
    let mut rows = Vec::new();
    for i in 0..n {
        rows.push((Term::Data, 1.0 + next(), vec![(i, 1.0)], -0.5 - next()));
        if i + 1 < n {
            rows.push((Term::Smoothness, 0.5 + next(), vec![(i, 1.0), (i + 1, -1.0)], 0.0));
            rows.push((Term::Normal, next(), vec![(i, -0.9 - 0.1 * next()), (i + 1, 1.0)], 0.01 * next()));
        }
    }
    rows
}

fn small_system(n: usize, seed: u64) -> SparseSystem {
    let unknowns = (0..n).map(|u| Pixel::new(u, 0)).collect();
    SparseSystem::from_rows(unknowns, n, 1, random_rows(n, seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn row_order_does_not_change_the_solution(n in 2usize..12, seed in any::<u64>(), rot in 0usize..50) {
        let s = small_system(n, seed);
        let m = s.rows().len();
        let mut order: Vec<usize> = (0..m).collect();
        order.rotate_left(rot % m);
        order.reverse();
        let t = s.with_row_order(&order);
        let init = DepthImage::from_values(Grid::filled(n, 1, 1.0));
        let cfg = SolverConfig { tol: 1e-12, max_iter: None };
        let (a, _) = solve(&s, &init, &cfg);
        let (b, _) = solve(&t, &init, &cfg);
        for u in 0..n {
            let p = Pixel::new(u, 0);
            prop_assert!((a.get(p).unwrap() - b.get(p).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn scaling_all_weights_keeps_the_minimiser(n in 2usize..12, seed in any::<u64>(), scale in 0.01f64..100.0) {
        let s = small_system(n, seed);
        let t = s.scaled(scale);
        let init = DepthImage::from_values(Grid::filled(n, 1, 1.0));
        let cfg = SolverConfig { tol: 1e-12, max_iter: None };
        let (a, _) = solve(&s, &init, &cfg);
        let (b, _) = solve(&t, &init, &cfg);
        for u in 0..n {
            let p = Pixel::new(u, 0);
            prop_assert!((a.get(p).unwrap() - b.get(p).unwrap()).abs() < 1e-9);
        }
        let x = s.gather(&a);
        prop_assert!((t.energy_of(&x) - scale * s.energy_of(&x)).abs() <= 1e-9 * (1.0 + t.energy_of(&x)));
    }

    #[test]
    fn solution_is_a_stationary_point(n in 2usize..12, seed in any::<u64>()) {
        let s = small_system(n, seed);
        let init = DepthImage::from_values(Grid::filled(n, 1, 1.0));
        let (a, report) = solve(&s, &init, &SolverConfig { tol: 1e-12, max_iter: None });
        prop_assert!(report.converged);
        let x = s.gather(&a);
        let g = s.gradient(&x);
        prop_assert!(g.iter().all(|v| v.abs() < 1e-8));
        // Any perturbation raises the energy.
        let mut y = x.clone();
        y[seed as usize % n] += 1e-3;
        prop_assert!(s.energy_of(&y) >= s.energy_of(&x));
    }

    #[test]
    fn energy_is_non_negative(n in 2usize..12, seed in any::<u64>(), v in -2.0f64..2.0) {
        let s = small_system(n, seed);
        let x = vec![v; n];
        prop_assert!(s.energy_of(&x) >= 0.0);
    }
}
