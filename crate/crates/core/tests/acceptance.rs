//! Acceptance run: one PASS/FAIL line per criterion, with the measured
//! values and timings. Failures are reported, not raised, so the run always
//! completes.

use std::time::{Duration, Instant};

use hypmin::asymptotics::{
    chord_cut_lens, geometric_radii, localization_experiment, smooth_expansion_experiment, theorem1_experiment,
    theorem2_experiment, AsymptoticsReport, LocalizationConfig, SectorConfig, Theorem2Config,
};
use hypmin::cone_profile::{
    certify_supersolution, endpoint_exponent, solve_cone_profile, supersolution_params, SupersolutionParams,
};
use hypmin::elliptic_solver::{comparison_test, evaluate, solve_domain, solve_domain_with, GridField, SolveOptions};
use hypmin::geometry::{Domain, DomainSpec, Point};
use hypmin::mobius::{apply_t, isometry_defect, jacobian_t, AmbientPoint, MobiusError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn disk(center: [f64; 2], radius: f64) -> DomainSpec {
    DomainSpec::Disk { center, radius }
}

fn lens(mu: f64, kappa: f64) -> DomainSpec {
    DomainSpec::Lens {
        vertex: [0.0, 0.0],
        mu,
        kappa1: kappa,
        kappa2: kappa,
        axis_angle: 0.0,
    }
}

fn corner_opts(resolution: usize) -> SolveOptions {
    SolveOptions {
        resolution,
        tol: 1e-9,
        exponent: 3.0,
        frame: None,
    }
}

fn checks_summary(report: &AsymptoticsReport) -> String {
    report
        .checks
        .iter()
        .map(|c| format!("{} {:.4} ({})", c.name, c.value, if c.passed { "ok" } else { "fail" }))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Largest relative error at the grid nodes.
fn hemisphere_nodal_error(field: &GridField) -> f64 {
    field
        .samples()
        .into_iter()
        .filter(|(x, _)| 1.0 - x.norm() >= 0.05)
        .map(|(x, f)| (f / (1.0 - x.norm_squared()).sqrt() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Largest relative error of the interpolated field on a fixed polar set
/// of 8000 points with `|x| <= 0.95`. Nodal values of `u = f^2` are exact
/// for the disk, so the interpolant carries the discretization error.
fn hemisphere_error(field: &GridField) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for k in 0..400 {
        let t = std::f64::consts::TAU * k as f64 / 400.0;
        for j in 0..20 {
            let r = 0.95 * j as f64 / 19.0;
            let x = Point::new(r * t.cos(), r * t.sin());
            let f = evaluate(field, &x).map_err(|e| e.to_string())?;
            worst = worst.max((f / (1.0 - r * r).sqrt() - 1.0).abs());
        }
    }
    Ok(worst)
}

fn hemisphere() -> Outcome {
    let spec = disk([0.0, 0.0], 1.0);
    let (coarse, t_coarse) = timed(|| solve_domain(&spec, 128, 1e-10));
    let (fine, t_fine) = timed(|| solve_domain(&spec, 256, 1e-10));
    let (coarse, fine) = (coarse.map_err(|e| e.to_string())?, fine.map_err(|e| e.to_string())?);
    let (e_coarse, e_fine) = (hemisphere_error(&coarse)?, hemisphere_error(&fine)?);
    let order = (e_coarse / e_fine).log2();
    let nodal = hemisphere_nodal_error(&fine);
    let slowest = t_coarse.max(t_fine).as_secs_f64();
    Ok((
        e_fine <= 1e-2 && nodal <= 1e-2 && order >= 1.5 && slowest <= 60.0,
        format!(
            "error {e_fine:.3e} at 256 (nodes {nodal:.1e}), order {order:.2} from 128, slowest solve {slowest:.1} s"
        ),
    ))
}

fn cone_profiles() -> Outcome {
    let mut ok = true;
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut max_h_quarter = 0.0;
    for n in [2, 3] {
        for mu in [0.25, 0.5, 0.75] {
            let p = solve_cone_profile(mu, n, 1e-12).map_err(|e| format!("mu {mu}, n {n}: {e}"))?;
            let dominated = p
                .theta
                .iter()
                .zip(&p.h)
                .all(|(t, h)| *h <= p.supersolution.value(mu, *t) * (1.0 + 1e-12));
            let target = 1.0 / (n as f64 + 1.0);
            let exponent = endpoint_exponent(&p).map_err(|e| e.to_string())?;
            let rel = (exponent / target - 1.0).abs();
            ok &= p.residual_norm <= 1e-8 && p.symmetry_defect <= 1e-8 && dominated && rel <= 0.05;
            worst = (
                worst.0.max(p.residual_norm),
                worst.1.max(p.symmetry_defect),
                worst.2.max(rel),
            );
            if n == 2 && mu == 0.25 {
                max_h_quarter = p.h.iter().copied().fold(0.0, f64::max);
                ok &= max_h_quarter <= 0.75f64.sqrt() + 1e-6;
            }
        }
    }
    Ok((
        ok,
        format!(
            "residual {:.1e}, symmetry {:.1e}, exponent off by {:.2}%, max h (mu 0.25, n 2) {max_h_quarter:.6}",
            worst.0,
            worst.1,
            100.0 * worst.2
        ),
    ))
}

fn supersolutions() -> Outcome {
    let mut ok = true;
    let mut closed_forms = 0;
    let mut worst = f64::NEG_INFINITY;
    for n in [2usize, 3] {
        for k in 1..=19 {
            let mu = 0.05 * k as f64;
            match supersolution_params(mu, n) {
                Ok(c) => {
                    ok &= c.grid_size == 100_000 && c.max_residual <= 0.0;
                    worst = worst.max(c.max_residual);
                }
                Err(e) => return Ok((false, format!("mu {mu:.2}, n {n}: {e}"))),
            }
            if mu <= 1.0 / (1.0 + n as f64) {
                let params = SupersolutionParams {
                    a: ((1.0 + n as f64) * mu).sqrt(),
                    b: 0.0,
                    alpha: n as f64,
                    beta: 0.01,
                };
                ok &= certify_supersolution(mu, n, params, 100_000).is_ok();
                closed_forms += 1;
            }
        }
    }
    Ok((
        ok,
        format!("38 pairs certified on 1e5 points, max residual {worst:.3e}, {closed_forms} closed forms"),
    ))
}

fn mobius() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut iso, mut jac, mut fix) = (0.0f64, 0.0f64, 0.0f64);
    let mut pole_ok = true;
    for l in [0.5, 1.0, 2.0] {
        for _ in 0..100 {
            let x = [
                rng.gen_range(-3.0 * l..3.0 * l),
                rng.gen_range(-3.0 * l..3.0 * l),
                rng.gen_range(0.05 * l..3.0 * l),
            ];
            iso = iso.max(isometry_defect(l, &AmbientPoint::new(&x)).map_err(|e| e.to_string())?);
        }
        let j = jacobian_t(l, &AmbientPoint::new(&[-l, 0.0, 0.0])).map_err(|e| e.to_string())?;
        for r in 0..3 {
            for c in 0..3 {
                jac = jac.max((j[(r, c)] - if r == c { 0.5 } else { 0.0 }).abs());
            }
        }
        let y = apply_t(l, &AmbientPoint::new(&[0.0, 0.0, l])).map_err(|e| e.to_string())?;
        let y = y.coords().ok_or("fixed point mapped to infinity")?;
        fix = fix.max((y[0].abs()).max(y[1].abs()).max((y[2] - l).abs()));
        pole_ok &= matches!(
            apply_t(l, &AmbientPoint::new(&[l, 0.0, 0.0])),
            Ok(AmbientPoint::AtInfinity) | Err(MobiusError::AtInfinity)
        );
    }
    Ok((
        iso <= 1e-9 && jac <= 1e-12 && fix <= 1e-12 && pole_ok,
        format!("isometry {iso:.1e}, Jacobian {jac:.1e}, fixed point {fix:.1e}, pole at infinity {pole_ok}"),
    ))
}

fn theorem1() -> Outcome {
    let cfg = SectorConfig::new(
        Point::new(0.0, 0.0),
        0.3,
        geometric_radii(0.2, 0.02, 7),
        corner_opts(512),
    );
    let (report, t) = timed(|| theorem1_experiment(&lens(0.5, 1.0), &cfg));
    let report = report.map_err(|e| e.to_string())?;
    let one_sided = report.check("max_ratio_f_over_fv").is_some_and(|c| c.passed);
    let secs = t.as_secs_f64();
    Ok((
        report.slope >= 0.8 && one_sided && secs <= 900.0,
        format!("slope {:.3}, {}, {secs:.1} s", report.slope, checks_summary(&report)),
    ))
}

fn theorem2() -> Outcome {
    let cfg = Theorem2Config {
        sector: SectorConfig::new(
            Point::new(0.0, 0.0),
            0.3,
            geometric_radii(0.05, 0.008, 7),
            corner_opts(512),
        ),
        mu: 0.25,
        kappa1: 1.0,
        kappa2: 1.0,
        alpha: 0.5,
        epsilon: 0.2,
        amplitude: 0.5,
        mu_max: 0.75,
    };
    let (report, t) = timed(|| theorem2_experiment(&cfg));
    let report = report.map_err(|e| e.to_string())?;
    Ok((
        report.verdict,
        format!(
            "slope {:.3}, {}, {:.1} s",
            report.slope,
            checks_summary(&report),
            t.as_secs_f64()
        ),
    ))
}

fn localization_config(delta: f64) -> LocalizationConfig {
    LocalizationConfig {
        sector: SectorConfig::new(
            Point::new(0.0, 0.0),
            delta,
            geometric_radii(0.08, 0.01, 7),
            corner_opts(512),
        ),
        r0: 0.27,
        beta: 0.0,
    }
}

fn localization(delta: f64) -> Outcome {
    let cut = chord_cut_lens(Point::new(0.0, 0.0), 0.15, 1.0, 1.0, 0.3).map_err(|e| e.to_string())?;
    let (report, t) = timed(|| localization_experiment(&cut, &lens(0.15, 1.0), &localization_config(delta)));
    let report = report.map_err(|e| e.to_string())?;
    Ok((
        report.verdict,
        format!("delta {delta}: slope {:.3}, {:.1} s", report.slope, t.as_secs_f64()),
    ))
}

fn smooth() -> Outcome {
    let depths = [0.2, 0.1, 0.05, 0.025];
    let opts = SolveOptions {
        resolution: 256,
        ..Default::default()
    };
    let ellipse = DomainSpec::Ellipse {
        center: [0.0, 0.0],
        a: 1.0,
        b: 0.8,
    };
    let report = smooth_expansion_experiment(&ellipse, &depths, &opts).map_err(|e| e.to_string())?;
    let series: Vec<String> = report.series.iter().map(|p| format!("{:.4}", p.e)).collect();
    let disk = smooth_expansion_experiment(&disk([0.0, 0.0], 1.0), &depths, &opts).map_err(|e| e.to_string())?;
    let disk_gap = disk
        .series
        .iter()
        .map(|p| (p.e - (1.0 - (1.0 - p.r / 2.0).sqrt())).abs())
        .fold(0.0, f64::max);
    Ok((
        report.verdict && disk_gap <= 1e-2,
        format!(
            "ellipse E = [{}], slope {:.3}; disk off closed form by {disk_gap:.1e}",
            series.join(", "),
            report.slope
        ),
    ))
}

fn far_corner(domain: &Domain) -> Point {
    domain
        .corner_points()
        .iter()
        .copied()
        .fold(Point::new(0.0, 0.0), |a, c| if c.norm() > a.norm() { c } else { a })
}

fn maximum_principle() -> Outcome {
    let err = |e: hypmin::elliptic_solver::SolverError| e.to_string();
    let small = solve_domain(&lens(0.5, 1.0), 256, 1e-10).map_err(err)?;
    let tau = |f: &GridField| f.meta.extrapolation_change;
    let q = far_corner(small.domain());
    let centre = 0.5 * q;

    // Nested domains.
    let circumscribed = solve_domain(&disk([centre.x, centre.y], 0.5 * q.norm()), 256, 1e-10).map_err(err)?;
    let nested_tol = 2.0 * (tau(&small) + tau(&circumscribed));
    let nested = comparison_test(&small, &circumscribed, nested_tol).map_err(err)?;

    // Inscribed and enclosing hemispheres.
    let inner = small.domain().signed_distance(&centre);
    let outer = 0.5 * q.norm();
    let (mut below, mut above) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (x, f) in small.samples() {
        let s = (x - centre).norm_squared();
        if s < inner * inner {
            below = below.max((inner * inner - s).sqrt() - f);
        }
        above = above.max(f - (outer * outer - s).max(0.0).sqrt());
    }
    let ball_tol = 2.0 * tau(&small);

    // Scaling by R = 2.
    let large = solve_domain_with(
        &lens(0.5, 0.5),
        &SolveOptions {
            resolution: 256,
            tol: 1e-10,
            ..Default::default()
        },
    )
    .map_err(err)?;
    let scale_tol = 2.0 * (2.0 * tau(&small) + tau(&large));
    let mut scale_gap = 0.0f64;
    for (x, f) in small.samples() {
        if small.domain().signed_distance(&x) > 2.0 * small.spacing {
            scale_gap = scale_gap.max((evaluate(&large, &(2.0 * x)).map_err(err)? - 2.0 * f).abs());
        }
    }
    Ok((
        nested.passed && below <= ball_tol && above <= ball_tol && scale_gap <= scale_tol,
        format!(
            "nested excess {:.1e} (tol {nested_tol:.1e}), inner ball {below:.1e} / outer ball {above:.1e} \
             (tol {ball_tol:.1e}), scaling {scale_gap:.1e} (tol {scale_tol:.1e})",
            nested.worst_excess
        ),
    ))
}

fn report(number: usize, name: &str, outcome: Outcome, elapsed: Duration) {
    let (verdict, detail) = match outcome {
        Ok((true, d)) => ("PASS", d),
        Ok((false, d)) => ("FAIL", d),
        Err(e) => ("FAIL", format!("error: {e}")),
    };
    println!("{verdict} {number} {name}: {detail} [{:.1} s]", elapsed.as_secs_f64());
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("hemisphere oracle", hemisphere),
        ("cone profiles", cone_profiles),
        ("supersolution certification", supersolutions),
        ("Möbius isometry", mobius),
        ("tangent-cone rate", theorem1),
        ("osculating-lens refinement", theorem2),
        ("localization", || localization(0.3)),
        ("smooth expansion", smooth),
        ("maximum principle", maximum_principle),
    ];
    for (k, (name, check)) in criteria.iter().enumerate() {
        let (outcome, t) = timed(check);
        report(k + 1, name, outcome, t);
        if k == 6 {
            // The sector at delta = 0.3 is empty for this opening; the same
            // experiment in the nonempty sector at delta = 0.1.
            let (outcome, t) = timed(|| localization(0.1));
            let line = match outcome {
                Ok((_, d)) => d,
                Err(e) => format!("error: {e}"),
            };
            println!("INFO 7 localization: {line} [{:.1} s]", t.as_secs_f64());
        }
    }
}
