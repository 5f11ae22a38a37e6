//! Boundary-asymptotics experiments: sample solver errors along δ-sectors
//! at decreasing radii, fit log-log slopes and record pass/fail reports.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone_profile::{eval_cone_solution, solve_cone_profile, ConeError};
use crate::elliptic_solver::{evaluate, solve_domain_with, GridField, SolveOptions, SolverError};
use crate::geometry::{lens_disks, lens_domain, DiskSpec, Domain, DomainSpec, GeometryError, Point};

/// Rays per radius in a δ-sector.
pub const SECTOR_RAYS: usize = 32;
/// Angular scan used to locate the admissible window of a δ-sector.
const WINDOW_SCAN: usize = 2048;
/// Smallest admissible radius in grid spacings.
const MIN_RADIUS_CELLS: f64 = 5.0;

#[derive(Debug, Error)]
pub enum AsymptoticsError {
    #[error("slope fit needs positive data, got r = {r}, e = {e}")]
    NonPositiveData { r: f64, e: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domains differ near the vertex at ({0}, {1})")]
    DomainsDisagreeNearVertex(f64, f64),
    #[error("empty δ-sector at radius {0}")]
    EmptySector(f64),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

pub type Result<T> = std::result::Result<T, AsymptoticsError>;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct SeriesPoint {
    pub r: f64,
    pub e: f64,
}

/// A named scalar condition entering a verdict.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value >= threshold,
        }
    }

    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct ReportParams {
    pub delta: Option<f64>,
    pub mu: Option<f64>,
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
    pub resolution: usize,
    pub exponent: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AsymptoticsReport {
    pub experiment: String,
    pub domain_hash: String,
    pub params: ReportParams,
    /// Radius (or depth) and error, radii strictly decreasing.
    pub series: Vec<SeriesPoint>,
    pub slope: f64,
    pub intercept: f64,
    /// Required slope.
    pub threshold: f64,
    pub checks: Vec<Check>,
    pub verdict: bool,
}

impl AsymptoticsReport {
    fn new(
        experiment: &str,
        domain_hash: String,
        params: ReportParams,
        series: Vec<SeriesPoint>,
        threshold: f64,
        mut checks: Vec<Check>,
    ) -> Result<Self> {
        let pts: Vec<(f64, f64)> = series.iter().map(|p| (p.r, p.e)).collect();
        let (slope, intercept) = slope_fit(&pts)?;
        checks.insert(0, Check::at_least("slope", slope, threshold));
        let verdict = checks.iter().all(|c| c.passed);
        Ok(Self {
            experiment: experiment.into(),
            domain_hash,
            params,
            series,
            slope,
            intercept,
            threshold,
            checks,
            verdict,
        })
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Least squares line through `(ln r, ln e)`; returns `(slope, intercept)`.
pub fn slope_fit(series: &[(f64, f64)]) -> Result<(f64, f64)> {
    if series.len() < 2 {
        return Err(AsymptoticsError::InvalidParameter(format!(
            "slope fit needs 2 points, got {}",
            series.len()
        )));
    }
    if let Some(&(r, e)) = series.iter().find(|(r, e)| !(*r > 0.0 && *e > 0.0)) {
        return Err(AsymptoticsError::NonPositiveData { r, e });
    }
    let n = series.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for (r, e) in series {
        sx += r.ln();
        sy += e.ln();
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (r, e) in series {
        let dx = r.ln() - mx;
        sxx += dx * dx;
        sxy += dx * (e.ln() - my);
    }
    if !(sxx > 0.0) {
        return Err(AsymptoticsError::InvalidParameter("all radii coincide".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// `count` radii from `r_max` down to `r_min` in geometric progression.
pub fn geometric_radii(r_max: f64, r_min: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| r_max * (r_min / r_max).powf(k as f64 / (count - 1).max(1) as f64))
        .collect()
}

/// Points at radius `r` from `x0` on [`SECTOR_RAYS`] rays spread uniformly
/// over the angular window of the δ-sector; every point is checked with
/// [`Domain::in_delta_sector`].
pub fn sector_points(domain: &Domain, x0: &Point, axis: f64, opening: f64, delta: f64, r: f64) -> Result<Vec<Point>> {
    let at = |th: f64| x0 + r * Point::new(th.cos(), th.sin());
    let gap = |th: f64| domain.signed_distance(&at(th)) - delta * r;
    let (lo, hi) = (axis - 0.5 * opening, axis + 0.5 * opening);
    let thetas: Vec<f64> = (0..=WINDOW_SCAN)
        .map(|k| lo + (hi - lo) * k as f64 / WINDOW_SCAN as f64)
        .collect();
    let first = thetas.iter().position(|&t| gap(t) >= 0.0);
    let last = thetas.iter().rposition(|&t| gap(t) >= 0.0);
    let (Some(i), Some(j)) = (first, last) else {
        return Err(AsymptoticsError::EmptySector(r));
    };
    // Refine both window edges by bisection on the distance gap.
    let refine = |inside: f64, outside: f64| {
        let (mut a, mut b) = (inside, outside);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if gap(m) >= 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        a
    };
    let t0 = if i > 0 {
        refine(thetas[i], thetas[i - 1])
    } else {
        thetas[i]
    };
    let t1 = if j < WINDOW_SCAN {
        refine(thetas[j], thetas[j + 1])
    } else {
        thetas[j]
    };
    let pts: Vec<Point> = (0..SECTOR_RAYS)
        .map(|k| at(t0 + (t1 - t0) * (k as f64 + 0.5) / SECTOR_RAYS as f64))
        .filter(|x| domain.in_delta_sector(x, x0, delta))
        .collect();
    if pts.is_empty() {
        return Err(AsymptoticsError::EmptySector(r));
    }
    Ok(pts)
}

/// Radii must be decreasing, at least five and below `0.3 diam`.
fn check_radius_list(radii: &[f64], domain: &Domain) -> Result<()> {
    if radii.len() < 5 {
        return Err(AsymptoticsError::InvalidParameter(format!(
            "{} radii given, at least 5 needed",
            radii.len()
        )));
    }
    if radii.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(AsymptoticsError::InvalidParameter(
            "radii must be strictly decreasing".into(),
        ));
    }
    let r_max = 0.3 * domain.diameter();
    if let Some(r) = radii.iter().find(|&&r| r > r_max) {
        return Err(AsymptoticsError::InvalidParameter(format!("radius {r} above {r_max}")));
    }
    Ok(())
}

/// [`check_radius_list`], plus radii large enough that sector samples lie
/// at least one spacing inside the domain and five spacings from the
/// vertex.
fn check_radii(radii: &[f64], delta: f64, field: &GridField) -> Result<()> {
    check_radius_list(radii, field.domain())?;
    let h = field.spacing;
    let r_min = (MIN_RADIUS_CELLS * h).max(h / delta);
    if let Some(r) = radii.iter().find(|&&r| r < r_min) {
        return Err(AsymptoticsError::InvalidParameter(format!("radius {r} below {r_min}")));
    }
    Ok(())
}

/// Checks the sector parameters that do not depend on the lattice, so that
/// empty sectors are reported before any solve.
fn check_sectors(spec: &DomainSpec, cfg: &SectorConfig) -> Result<()> {
    check_delta(cfg.delta)?;
    let domain = Domain::new(spec.clone())?;
    check_radius_list(&cfg.radii, &domain)?;
    let x0 = cfg.vertex();
    let cone = domain.tangent_cone_at(&x0)?;
    let axis = cone.axis().y.atan2(cone.axis().x);
    for &r in &cfg.radii {
        sector_points(&domain, &x0, axis, cone.opening, cfg.delta, r)?;
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(AsymptoticsError::InvalidParameter(format!(
            "delta = {delta} not in (0, 1)"
        )));
    }
    Ok(())
}

/// Parameters of the corner experiments.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SectorConfig {
    pub vertex: [f64; 2],
    pub delta: f64,
    pub radii: Vec<f64>,
    pub solve: SolveOptions,
}

impl SectorConfig {
    pub fn new(vertex: Point, delta: f64, radii: Vec<f64>, solve: SolveOptions) -> Self {
        Self {
            vertex: [vertex.x, vertex.y],
            delta,
            radii,
            solve,
        }
    }

    fn vertex(&self) -> Point {
        Point::new(self.vertex[0], self.vertex[1])
    }
}

/// Relative slack of the one-sided bound `f <= f_V`.
pub const ONE_SIDED_TOL: f64 = 1e-3;
const THEOREM1_SLOPE: f64 = 0.8;
const THEOREM1_SPREAD: f64 = 10.0;

/// Comparison of a solved field with the cone solution of its tangent cone
/// at `vertex`. The series is `sup |f / f_V - 1|` over the δ-sector at each
/// radius. Extra checks: the normalized error `|f - f_V| / (f r)` stays
/// within a factor 10 over the series, `f <= f_V (1 + tol)` at every
/// sample, and on the bisector `f / f_V >= 1 - 10 r_min` at the last radius.
pub fn theorem1_from_field(field: &GridField, cfg: &SectorConfig) -> Result<AsymptoticsReport> {
    check_delta(cfg.delta)?;
    check_radii(&cfg.radii, cfg.delta, field)?;
    let domain = field.domain();
    let x0 = cfg.vertex();
    let cone = domain.tangent_cone_at(&x0)?;
    let profile = solve_cone_profile(cone.mu(), 2, 1e-12)?;
    let axis = cone.axis().y.atan2(cone.axis().x);
    let mut series = Vec::new();
    let (mut norm_min, mut norm_max) = (f64::INFINITY, 0.0f64);
    let mut worst_ratio = 0.0f64;
    for &r in &cfg.radii {
        let mut sup = 0.0f64;
        for x in sector_points(domain, &x0, axis, cone.opening, cfg.delta, r)? {
            let f = evaluate(field, &x)?;
            let fv = eval_cone_solution(&profile, &cone, &x)?;
            sup = sup.max((f / fv - 1.0).abs());
            let normalized = (f - fv).abs() / (f * r);
            norm_min = norm_min.min(normalized);
            norm_max = norm_max.max(normalized);
            worst_ratio = worst_ratio.max(f / fv);
        }
        series.push(SeriesPoint { r, e: sup });
    }
    let r_min = *cfg.radii.last().unwrap();
    let xb = x0 + r_min * cone.axis();
    let bisector = evaluate(field, &xb)? / eval_cone_solution(&profile, &cone, &xb)?;
    let checks = vec![
        Check::at_most("normalized_error_spread", norm_max / norm_min, THEOREM1_SPREAD),
        Check::at_most("max_ratio_f_over_fv", worst_ratio, 1.0 + ONE_SIDED_TOL),
        Check::at_least("bisector_ratio", bisector, 1.0 - 10.0 * r_min),
    ];
    AsymptoticsReport::new(
        "theorem1",
        field.domain().hash(),
        ReportParams {
            delta: Some(cfg.delta),
            mu: Some(cone.mu()),
            resolution: cfg.solve.resolution,
            exponent: field.exponent,
            ..Default::default()
        },
        series,
        THEOREM1_SLOPE,
        checks,
    )
}

/// Solves on `spec` and runs [`theorem1_from_field`].
pub fn theorem1_experiment(spec: &DomainSpec, cfg: &SectorConfig) -> Result<AsymptoticsReport> {
    check_sectors(spec, cfg)?;
    let field = solve_domain_with(spec, &cfg.solve)?;
    theorem1_from_field(&field, cfg)
}

/// `sup |f - f_*| / f` over the δ-sector at each radius.
fn relative_difference_series(
    field: &GridField,
    reference: &GridField,
    x0: &Point,
    delta: f64,
    radii: &[f64],
) -> Result<Vec<SeriesPoint>> {
    let domain = field.domain();
    let cone = domain.tangent_cone_at(x0)?;
    let axis = cone.axis().y.atan2(cone.axis().x);
    radii
        .iter()
        .map(|&r| {
            let mut sup = 0.0f64;
            for x in sector_points(domain, x0, axis, cone.opening, delta, r)? {
                let f = evaluate(field, &x)?;
                let g = evaluate(reference, &x)?;
                sup = sup.max((f - g).abs() / f);
            }
            Ok(SeriesPoint { r, e: sup })
        })
        .collect()
}

/// Lattice box containing both domains, so that they are solved on the
/// same nodes.
fn common_frame(a: &Domain, b: &Domain) -> [[f64; 2]; 2] {
    let (a0, a1) = a.bounding_box();
    let (b0, b1) = b.bounding_box();
    let lo = a0.inf(&b0);
    let hi = a1.sup(&b1);
    [[lo.x, lo.y], [hi.x, hi.y]]
}

fn solve_pair(a: &DomainSpec, b: &DomainSpec, opts: &SolveOptions) -> Result<(GridField, GridField)> {
    let frame = common_frame(&Domain::new(a.clone())?, &Domain::new(b.clone())?);
    let opts = SolveOptions {
        frame: Some(frame),
        ..*opts
    };
    Ok((solve_domain_with(a, &opts)?, solve_domain_with(b, &opts)?))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Theorem2Config {
    pub sector: SectorConfig,
    pub mu: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Hölder exponent of the boundary perturbation.
    pub alpha: f64,
    /// Loss in the predicted rate `1 + alpha - epsilon`.
    pub epsilon: f64,
    pub amplitude: f64,
    /// Largest opening accepted.
    pub mu_max: f64,
}

const THEOREM2_SLOPE: f64 = 1.1;
const THEOREM2_GAIN: f64 = 0.2;

impl Theorem2Config {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < self.alpha) {
            return Err(AsymptoticsError::InvalidParameter(format!(
                "epsilon = {} not in (0, alpha = {})",
                self.epsilon, self.alpha
            )));
        }
        if !(self.mu <= self.mu_max) {
            return Err(AsymptoticsError::InvalidParameter(format!(
                "mu = {} above {}",
                self.mu, self.mu_max
            )));
        }
        Ok(())
    }

    pub fn perturbed_spec(&self) -> DomainSpec {
        DomainSpec::PerturbedLens {
            vertex: self.sector.vertex,
            mu: self.mu,
            kappa1: self.kappa1,
            kappa2: self.kappa2,
            amplitude: self.amplitude,
            holder_exponent: self.alpha,
            axis_angle: 0.0,
        }
    }

    pub fn osculating_spec(&self) -> DomainSpec {
        DomainSpec::Lens {
            vertex: self.sector.vertex,
            mu: self.mu,
            kappa1: self.kappa1,
            kappa2: self.kappa2,
            axis_angle: 0.0,
        }
    }
}

/// Perturbed lens against its osculating lens. The series is
/// `sup |f - f_*| / f`; the verdict also requires the slope to beat the
/// tangent-cone slope of the same field by 0.2.
pub fn theorem2_from_fields(
    perturbed: &GridField,
    osculating: &GridField,
    cfg: &Theorem2Config,
) -> Result<AsymptoticsReport> {
    cfg.validate()?;
    check_delta(cfg.sector.delta)?;
    check_radii(&cfg.sector.radii, cfg.sector.delta, perturbed)?;
    let x0 = cfg.sector.vertex();
    let series = relative_difference_series(perturbed, osculating, &x0, cfg.sector.delta, &cfg.sector.radii)?;
    let cone_report = theorem1_from_field(perturbed, &cfg.sector)?;
    let (slope, _) = slope_fit(&series.iter().map(|p| (p.r, p.e)).collect::<Vec<_>>())?;
    let checks = vec![Check::at_least(
        "gain_over_tangent_cone",
        slope - cone_report.slope,
        THEOREM2_GAIN,
    )];
    AsymptoticsReport::new(
        "theorem2",
        perturbed.domain().hash(),
        ReportParams {
            delta: Some(cfg.sector.delta),
            mu: Some(cfg.mu),
            alpha: Some(cfg.alpha),
            epsilon: Some(cfg.epsilon),
            resolution: cfg.sector.solve.resolution,
            exponent: perturbed.exponent,
        },
        series,
        THEOREM2_SLOPE,
        checks,
    )
}

/// Solves both lenses on a common lattice and runs [`theorem2_from_fields`].
pub fn theorem2_experiment(cfg: &Theorem2Config) -> Result<AsymptoticsReport> {
    cfg.validate()?;
    check_sectors(&cfg.perturbed_spec(), &cfg.sector)?;
    let (f, f_star) = solve_pair(&cfg.perturbed_spec(), &cfg.osculating_spec(), &cfg.sector.solve)?;
    theorem2_from_fields(&f, &f_star, cfg)
}

/// Radius of the disk whose boundary stands in for a straight chord.
const CHORD_DISK_RADIUS: f64 = 1e3;

/// Lens at `vertex` with bisector along +x, cut by the line `x = vertex.x +
/// distance` (a disk of radius 1000 through that line).
pub fn chord_cut_lens(vertex: Point, mu: f64, kappa1: f64, kappa2: f64, distance: f64) -> Result<DomainSpec> {
    lens_domain(vertex, mu, kappa1, kappa2)?;
    let mut disks = lens_disks(vertex, mu, kappa1, kappa2).to_vec();
    disks.push(DiskSpec::new(
        Point::new(vertex.x + distance - CHORD_DISK_RADIUS, vertex.y),
        CHORD_DISK_RADIUS,
    ));
    let spec = DomainSpec::DiskIntersection { disks };
    Domain::new(spec.clone())?;
    Ok(spec)
}

/// Verifies that the two boundaries coincide inside `B_r0(x0)`: boundary
/// samples of each domain inside the ball lie on the other boundary.
pub fn check_agreement(a: &Domain, b: &Domain, x0: &Point, r0: f64) -> Result<()> {
    let tol = 1e-9 * a.diameter().max(b.diameter());
    for (p, q) in [(a, b), (b, a)] {
        for s in p.boundary_samples(4096) {
            if (s - x0).norm() < r0 && q.signed_distance(&s).abs() > tol {
                return Err(AsymptoticsError::DomainsDisagreeNearVertex(s.x, s.y));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LocalizationConfig {
    pub sector: SectorConfig,
    /// Radius of the ball around the vertex where the domains agree.
    pub r0: f64,
    /// Extra decay exponent of the continuum estimate `(r / r0)^(2 + beta)`.
    pub beta: f64,
}

const LOCALIZATION_SLOPE: f64 = 1.8;

/// Difference between the solutions on two domains that agree near the
/// vertex. The series is `sup |f - f_*| / f`.
pub fn localization_from_fields(
    field: &GridField,
    reference: &GridField,
    cfg: &LocalizationConfig,
) -> Result<AsymptoticsReport> {
    check_delta(cfg.sector.delta)?;
    check_radii(&cfg.sector.radii, cfg.sector.delta, field)?;
    let x0 = cfg.sector.vertex();
    check_agreement(field.domain(), reference.domain(), &x0, cfg.r0)?;
    let series = relative_difference_series(field, reference, &x0, cfg.sector.delta, &cfg.sector.radii)?;
    AsymptoticsReport::new(
        "localization",
        field.domain().hash(),
        ReportParams {
            delta: Some(cfg.sector.delta),
            mu: Some(field.domain().tangent_cone_at(&x0)?.mu()),
            resolution: cfg.sector.solve.resolution,
            exponent: field.exponent,
            ..Default::default()
        },
        series,
        LOCALIZATION_SLOPE,
        Vec::new(),
    )
}

/// Checks agreement, solves both domains on a common lattice and runs
/// [`localization_from_fields`].
pub fn localization_experiment(
    spec: &DomainSpec,
    reference: &DomainSpec,
    cfg: &LocalizationConfig,
) -> Result<AsymptoticsReport> {
    let x0 = cfg.sector.vertex();
    check_agreement(
        &Domain::new(spec.clone())?,
        &Domain::new(reference.clone())?,
        &x0,
        cfg.r0,
    )?;
    check_sectors(spec, &cfg.sector)?;
    let (f, f_star) = solve_pair(spec, reference, &cfg.sector.solve)?;
    localization_from_fields(&f, &f_star, cfg)
}

const SMOOTH_SLOPE: f64 = 0.3;

/// `E(p, d) = |(kappa(p) / (2 d))^(1/2) f(p + d nu) - 1|`, maximized over
/// the foot points `p` at each depth `d`; the series is indexed by depth.
/// Passes when the error strictly decreases with `d` and the slope is at
/// least 0.3.
pub fn smooth_expansion_from_field(field: &GridField, feet: &[Point], depths: &[f64]) -> Result<AsymptoticsReport> {
    if depths.windows(2).any(|w| !(w[1] < w[0])) || depths.len() < 2 {
        return Err(AsymptoticsError::InvalidParameter(
            "depths must be strictly decreasing, at least 2".into(),
        ));
    }
    if feet.is_empty() {
        return Err(AsymptoticsError::InvalidParameter("no foot points".into()));
    }
    let domain = field.domain();
    let frames = feet
        .iter()
        .map(|p| Ok((*p, domain.boundary_curvature(p)?, domain.inward_normal(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let series = depths
        .iter()
        .map(|&d| {
            let mut sup = 0.0f64;
            for (p, kappa, nu) in &frames {
                let f = evaluate(field, &(p + d * nu))?;
                sup = sup.max(((kappa / (2.0 * d)).sqrt() * f - 1.0).abs());
            }
            Ok(SeriesPoint { r: d, e: sup })
        })
        .collect::<Result<Vec<_>>>()?;
    let decreasing = series.windows(2).filter(|w| !(w[1].e < w[0].e)).count();
    let checks = vec![Check::at_most("non_decreasing_steps", decreasing as f64, 0.0)];
    AsymptoticsReport::new(
        "smooth_expansion",
        domain.hash(),
        ReportParams {
            resolution: field.nx.max(field.ny),
            exponent: field.exponent,
            ..Default::default()
        },
        series,
        SMOOTH_SLOPE,
        checks,
    )
}

/// `count` foot points spread evenly by angle around the centre of the
/// bounding box.
pub fn foot_points(domain: &Domain, count: usize) -> Vec<Point> {
    let (lo, hi) = domain.bounding_box();
    let c = (lo + hi) * 0.5;
    let reach = 2.0 * domain.diameter();
    (0..count)
        .filter_map(|k| {
            let th = 2.0 * PI * k as f64 / count as f64;
            let far = c + reach * Point::new(th.cos(), th.sin());
            domain.segment_exit(&c, &far).map(|t| c + t * (far - c))
        })
        .collect()
}

/// Solves on `spec` and runs [`smooth_expansion_from_field`] with 16 foot
/// points.
pub fn smooth_expansion_experiment(
    spec: &DomainSpec,
    depths: &[f64],
    solve: &SolveOptions,
) -> Result<AsymptoticsReport> {
    let field = solve_domain_with(spec, solve)?;
    let feet = foot_points(field.domain(), 16);
    smooth_expansion_from_field(&field, &feet, depths)
}
