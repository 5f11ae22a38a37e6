//! Boundary-asymptotics experiments at small resolutions: report structure,
//! parameter validation and the closed-form disk expansion.

use hypmin::asymptotics::{
    check_agreement, chord_cut_lens, foot_points, geometric_radii, localization_experiment, sector_points,
    smooth_expansion_experiment, theorem1_experiment, theorem2_experiment, AsymptoticsError, AsymptoticsReport,
    LocalizationConfig, SectorConfig, Theorem2Config,
};
use hypmin::elliptic_solver::SolveOptions;
use hypmin::geometry::{Domain, DomainSpec, Point};

fn opts(resolution: usize, exponent: f64) -> SolveOptions {
    SolveOptions {
        resolution,
        tol: 1e-9,
        exponent,
        frame: None,
    }
}

fn lens(mu: f64) -> DomainSpec {
    DomainSpec::Lens {
        vertex: [0.0, 0.0],
        mu,
        kappa1: 1.0,
        kappa2: 1.0,
        axis_angle: 0.0,
    }
}

#[test]
fn theorem1_report_on_coarse_lens() {
    let cfg = SectorConfig::new(Point::new(0.0, 0.0), 0.3, geometric_radii(0.2, 0.05, 5), opts(192, 3.0));
    let report = theorem1_experiment(&lens(0.5), &cfg).unwrap();
    assert_eq!(report.experiment, "theorem1");
    assert_eq!(report.series.len(), 5);
    assert!((report.params.mu.unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(report.checks[0].name, "slope");
    // The error shrinks towards the vertex and f stays below f_V.
    assert!(report.series.windows(2).all(|w| w[1].e < w[0].e), "{:?}", report.series);
    assert!(report.slope > 0.5, "slope {}", report.slope);
    assert!(report.check("max_ratio_f_over_fv").unwrap().passed);
    let json = serde_json::to_string(&report).unwrap();
    let back: AsymptoticsReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
    assert_eq!(report.series[0].r.to_bits(), back.series[0].r.to_bits());
}

#[test]
fn sector_parameters_are_validated() {
    let bad_delta = SectorConfig::new(Point::new(0.0, 0.0), 0.0, geometric_radii(0.2, 0.05, 5), opts(64, 2.0));
    assert!(matches!(
        theorem1_experiment(&lens(0.5), &bad_delta),
        Err(AsymptoticsError::InvalidParameter(_))
    ));
    // Radii below five grid spacings are not resolved.
    let tiny = SectorConfig::new(Point::new(0.0, 0.0), 0.3, geometric_radii(0.1, 0.01, 5), opts(64, 2.0));
    assert!(matches!(
        theorem1_experiment(&lens(0.5), &tiny),
        Err(AsymptoticsError::InvalidParameter(_))
    ));
}

#[test]
fn narrow_sector_is_empty() {
    // sin(0.075 pi) is below 0.3, so no point of a thin lens sits that far
    // from both arcs relative to its distance to the vertex.
    let domain = Domain::new(lens(0.15)).unwrap();
    let opening = 0.15 * std::f64::consts::PI;
    for r in [0.2, 0.05, 0.01] {
        let pts = sector_points(&domain, &Point::new(0.0, 0.0), 0.0, opening, 0.3, r);
        assert!(matches!(pts, Err(AsymptoticsError::EmptySector(_))), "{pts:?}");
    }
    let pts = sector_points(&domain, &Point::new(0.0, 0.0), 0.0, opening, 0.1, 0.05).unwrap();
    assert!(!pts.is_empty());
    // The experiments report an empty sector before solving anything.
    let x0 = Point::new(0.0, 0.0);
    let cut = chord_cut_lens(x0, 0.15, 1.0, 1.0, 0.3).unwrap();
    let cfg = LocalizationConfig {
        sector: SectorConfig::new(x0, 0.3, geometric_radii(0.08, 0.01, 7), opts(512, 3.0)),
        r0: 0.27,
        beta: 0.0,
    };
    let start = std::time::Instant::now();
    let err = localization_experiment(&cut, &lens(0.15), &cfg).unwrap_err();
    assert!(matches!(err, AsymptoticsError::EmptySector(_)), "{err:?}");
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

fn theorem2_config() -> Theorem2Config {
    Theorem2Config {
        sector: SectorConfig::new(
            Point::new(0.0, 0.0),
            0.3,
            geometric_radii(0.06, 0.03, 5),
            opts(256, 3.0),
        ),
        mu: 0.5,
        kappa1: 1.0,
        kappa2: 1.0,
        alpha: 0.5,
        epsilon: 0.1,
        amplitude: 0.5,
        mu_max: 0.75,
    }
}

#[test]
fn theorem2_parameters_are_validated() {
    let mut cfg = theorem2_config();
    cfg.epsilon = 0.6;
    assert!(matches!(
        theorem2_experiment(&cfg),
        Err(AsymptoticsError::InvalidParameter(_))
    ));
    let mut cfg = theorem2_config();
    cfg.mu = 0.8;
    assert!(matches!(
        theorem2_experiment(&cfg),
        Err(AsymptoticsError::InvalidParameter(_))
    ));
}

#[test]
fn theorem2_report_on_coarse_lens() {
    let report = theorem2_experiment(&theorem2_config()).unwrap();
    assert_eq!(report.experiment, "theorem2");
    assert_eq!(report.params.alpha, Some(0.5));
    assert!(report.check("gain_over_tangent_cone").is_some());
    assert!(
        report.series.iter().all(|p| p.e > 0.0 && p.e < 0.1),
        "{:?}",
        report.series
    );
}

#[test]
fn chord_cut_agrees_only_inside_the_cut() {
    let spec = chord_cut_lens(Point::new(0.0, 0.0), 0.5, 1.0, 1.0, 0.5).unwrap();
    let cut = Domain::new(spec).unwrap();
    let full = Domain::new(lens(0.5)).unwrap();
    let x0 = Point::new(0.0, 0.0);
    check_agreement(&cut, &full, &x0, 0.45).unwrap();
    assert!(matches!(
        check_agreement(&cut, &full, &x0, 0.8),
        Err(AsymptoticsError::DomainsDisagreeNearVertex(..))
    ));
    let cfg = LocalizationConfig {
        sector: SectorConfig::new(x0, 0.1, geometric_radii(0.1, 0.05, 5), opts(64, 2.0)),
        r0: 0.8,
        beta: 0.0,
    };
    assert!(localization_experiment(&cut.spec().clone(), &lens(0.5), &cfg).is_err());
}

#[test]
fn localization_report_on_coarse_lens() {
    let x0 = Point::new(0.0, 0.0);
    let cut = chord_cut_lens(x0, 0.5, 1.0, 1.0, 0.5).unwrap();
    let cfg = LocalizationConfig {
        sector: SectorConfig::new(x0, 0.3, geometric_radii(0.15, 0.04, 5), opts(192, 3.0)),
        r0: 0.45,
        beta: 0.0,
    };
    let report = localization_experiment(&cut, &lens(0.5), &cfg).unwrap();
    assert_eq!(report.experiment, "localization");
    // The cut lowers the solution, and its influence fades at the vertex.
    assert!(report.series.windows(2).all(|w| w[1].e < w[0].e), "{:?}", report.series);
}

#[test]
fn disk_expansion_matches_closed_form() {
    // On the unit disk f = sqrt(2d - d^2) at depth d, so the error is
    // 1 - sqrt(1 - d / 2), about d / 4.
    let depths = [0.2, 0.1, 0.05, 0.025];
    let spec = DomainSpec::Disk {
        center: [0.0, 0.0],
        radius: 1.0,
    };
    let report = smooth_expansion_experiment(&spec, &depths, &opts(128, 2.0)).unwrap();
    for p in &report.series {
        let exact = 1.0 - (1.0 - p.r / 2.0).sqrt();
        assert!((p.e - exact).abs() < 2e-3, "d {}: {} vs {exact}", p.r, p.e);
    }
    assert!((report.slope - 1.0).abs() < 0.1, "slope {}", report.slope);
    assert!(report.verdict);
}

#[test]
fn foot_points_lie_on_the_boundary() {
    let domain = Domain::new(DomainSpec::Ellipse {
        center: [0.5, -0.2],
        a: 1.0,
        b: 0.5,
    })
    .unwrap();
    let feet = foot_points(&domain, 16);
    assert_eq!(feet.len(), 16);
    for p in feet {
        assert!(domain.signed_distance(&p).abs() < 1e-9);
    }
}
