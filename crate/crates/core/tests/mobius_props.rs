//! Metric and conformal properties of `T_L` checked against finite
//! differences and elementary geometry.

use hypmin::geometry::Point;
use hypmin::mobius::{
    apply_t, conformal_factor_on_plane, conformal_factor_with_anisotropy, isometry_defect, jacobian_t, transport_graph,
    AmbientPoint,
};
use nalgebra::{DMatrix, DVector, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn image(l: f64, x: &[f64]) -> DVector<f64> {
    apply_t(l, &AmbientPoint::new(x)).unwrap().coords().unwrap().clone()
}

/// Random point of the upper half-space kept away from the pole.
fn random_point(rng: &mut ChaCha8Rng, l: f64) -> [f64; 3] {
    loop {
        let x = [
            rng.gen_range(-3.0..3.0) * l,
            rng.gen_range(-3.0..3.0) * l,
            rng.gen_range(0.05..3.0) * l,
        ];
        if ((x[0] - l).powi(2) + x[1] * x[1] + x[2] * x[2]).sqrt() > 0.2 * l {
            return x;
        }
    }
}

fn fd_jacobian(l: f64, x: &[f64; 3]) -> DMatrix<f64> {
    let h = 1e-6 * l;
    let mut j = DMatrix::zeros(3, 3);
    for k in 0..3 {
        let mut p = *x;
        let mut m = *x;
        p[k] += h;
        m[k] -= h;
        let col = (image(l, &p) - image(l, &m)) / (2.0 * h);
        j.set_column(k, &col);
    }
    j
}

#[test]
fn jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let l = 1.0;
    for _ in 0..100 {
        let x = random_point(&mut rng, l);
        let j = jacobian_t(l, &AmbientPoint::new(&x)).unwrap();
        let fd = fd_jacobian(l, &x);
        let scale = j.amax().max(1.0);
        assert!((j - fd).amax() <= 1e-6 * scale, "at {x:?}");
    }
}

#[test]
fn isometry_defect_small_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for l in [0.5, 1.0, 2.0] {
        for _ in 0..100 {
            let x = random_point(&mut rng, l);
            let d = isometry_defect(l, &AmbientPoint::new(&x)).unwrap();
            assert!(d <= 1e-9, "L={l} x={x:?} defect {d}");
        }
    }
}

#[test]
fn determinant_at_fixed_point_matches_stretch() {
    let l = 1.7;
    let p = AmbientPoint::new(&[0.0, 0.0, l]);
    let j = jacobian_t(l, &p).unwrap();
    // Stretch measured along each coordinate direction.
    let stretches: Vec<f64> = (0..3).map(|k| j.column(k).norm()).collect();
    let s = stretches[0];
    assert!(stretches.iter().all(|v| (v - s).abs() < 1e-12));
    assert!((j.determinant().abs() - s.powi(3)).abs() < 1e-12);
}

#[test]
fn plane_factor_is_isotropic_and_matches_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let l = 1.0;
    for _ in 0..50 {
        let x: [f64; 2] = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        if ((x[0] - l).powi(2) + x[1] * x[1]).sqrt() < 0.2 {
            continue;
        }
        let (f, aniso) = conformal_factor_with_anisotropy(l, &x).unwrap();
        assert!(aniso <= 1e-10 * f.max(1.0), "anisotropy {aniso}");
        // Stretch of a small chord through x.
        let dir = Point::new(0.6, 0.8);
        let h = 1e-6;
        let a = image(l, &[x[0] + h * dir.x, x[1] + h * dir.y, 0.0]);
        let b = image(l, &[x[0] - h * dir.x, x[1] - h * dir.y, 0.0]);
        let chord = (a - b).norm() / (2.0 * h);
        assert!((chord - f).abs() <= 1e-6 * f.max(1.0));
    }
    // At the origin the factor is 2 L^2 / L^2.
    assert!((conformal_factor_on_plane(l, &[0.0, 0.0]).unwrap() - 2.0).abs() < 1e-14);
}

#[test]
fn angles_between_plane_curves_preserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let l = 1.0;
    let h = 1e-5;
    for _ in 0..50 {
        let x: [f64; 2] = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        if ((x[0] - l).powi(2) + x[1] * x[1]).sqrt() < 0.3 {
            continue;
        }
        // Two parabolic arcs through x with random tangents and curvatures.
        let arcs: Vec<(f64, f64)> = (0..2)
            .map(|_| (rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(-3.0..3.0)))
            .collect();
        let curve = |(ang, k): (f64, f64), t: f64| {
            let (s, c) = ang.sin_cos();
            [
                x[0] + t * c - 0.5 * k * t * t * s,
                x[1] + t * s + 0.5 * k * t * t * c,
                0.0,
            ]
        };
        let tangent = |arc: (f64, f64)| {
            let a = image(l, &curve(arc, h));
            let b = image(l, &curve(arc, -h));
            (a - b).normalize()
        };
        let before = (arcs[0].0 - arcs[1].0).cos();
        let after = tangent(arcs[0]).dot(&tangent(arcs[1]));
        assert!((before - after).abs() <= 1e-8, "{before} vs {after}");
    }
}

/// Max distance of points from the plane through the first three, relative
/// to the spread of the points.
fn planarity_residual(points: &[Vector3<f64>]) -> f64 {
    let n = (points[1] - points[0]).cross(&(points[2] - points[0])).normalize();
    let spread = points.iter().map(|p| (p - points[0]).norm()).fold(0.0, f64::max);
    points.iter().map(|p| (p - points[0]).dot(&n).abs()).fold(0.0, f64::max) / spread
}

#[test]
fn spheres_through_pole_become_planes() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let l = 1.0;
    let pole = Vector3::new(l, 0.0, 0.0);
    for _ in 0..5 {
        let center: Vector3<f64> = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.0..1.0),
        );
        let r = (center - pole).norm();
        let mut imgs = Vec::new();
        while imgs.len() < 1000 {
            let v: Vector3<f64> = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if v.norm() < 1e-3 || v.norm() > 1.0 {
                continue;
            }
            let p: Vector3<f64> = center + r * v.normalize();
            if p.z < 0.0 || (p - pole).norm() < 0.05 * r {
                continue;
            }
            let y = image(l, p.as_slice());
            imgs.push(Vector3::new(y[0], y[1], y[2]));
        }
        let res = planarity_residual(&imgs);
        assert!(res <= 1e-9, "planarity residual {res}");
    }
}

fn hemisphere_samples(l: f64, count: usize) -> Vec<(Point, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut out = Vec::new();
    while out.len() < count {
        let x = Point::new(rng.gen_range(-l..l), rng.gen_range(-l..l));
        let f2 = l * l - x.norm_squared();
        if f2 > 0.0 && (x - Point::new(l, 0.0)).norm() > 0.05 * l {
            out.push((x, f2.sqrt()));
        }
    }
    out
}

#[test]
fn hemisphere_through_pole_maps_to_vertical_plane() {
    let l = 1.0;
    let img = transport_graph(&hemisphere_samples(l, 1000), l).unwrap();
    let pts: Vec<Vector3<f64>> = img.iter().map(|(y, f)| Vector3::new(y.x, y.y, *f)).collect();
    assert!(planarity_residual(&pts) <= 1e-8);
    // The sphere is orthogonal to the boundary, so its image is the
    // vertical plane y1 = 0.
    let spread = img.iter().map(|(y, _)| y.norm()).fold(0.0, f64::max);
    let worst = img.iter().map(|(y, _)| y.x.abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-8 * spread.max(1.0), "image is not the plane y1 = 0");
}

#[test]
fn graph_height_halves_near_x0() {
    let l = 1.0;
    let x0 = Point::new(-l, 0.0);
    let mut ratio_max: f64 = 0.0;
    for k in 1..=30 {
        let t = 0.5f64.powi(k);
        for dir in [Point::new(1.0, 0.0), Point::new(0.8, 0.6), Point::new(0.8, -0.6)] {
            let x = x0 + t * dir;
            let f2 = l * l - x.norm_squared();
            if f2 <= 0.0 {
                continue;
            }
            let f = f2.sqrt();
            let img = transport_graph(&[(x, f)], l).unwrap();
            let ratio = (img[0].1 - 0.5 * f).abs() / (f * t);
            ratio_max = ratio_max.max(ratio);
        }
    }
    assert!(ratio_max < 2.0 / l, "ratio {ratio_max}");
}

proptest! {
    #[test]
    fn inverse_round_trip(x in -3.0f64..3.0, y in -3.0f64..3.0, z in 0.0f64..3.0, l in 0.3f64..3.0) {
        prop_assume!(((x - l).powi(2) + y * y + z * z).sqrt() > 0.1 * l);
        let p = AmbientPoint::new(&[x, y, z]);
        let back = hypmin::mobius::apply_t_inverse(l, &apply_t(l, &p).unwrap()).unwrap();
        let err = (back.coords().unwrap() - p.coords().unwrap()).amax();
        prop_assert!(err <= 1e-12 * (1.0 + x.abs() + y.abs() + z.abs()).powi(2));
    }

    #[test]
    fn upper_half_space_preserved(x in -3.0f64..3.0, y in -3.0f64..3.0, z in 0.0f64..3.0) {
        prop_assume!(((x - 1.0).powi(2) + y * y + z * z).sqrt() > 0.1);
        let img = image(1.0, &[x, y, z]);
        prop_assert!(img[2] >= 0.0);
    }
}
