//! Convex planar domains.
//!
//! Every supported domain is an intersection of convex pieces (disks, an
//! axis-aligned ellipse, or a disk whose boundary carries a Hölder bump near a
//! corner). Working piecewise gives exact membership tests, exact boundary
//! crossings along segments, and the interior distance as the minimum of the
//! per-piece distances.

use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub type Point = Vector2<f64>;

/// Samples per boundary curve used for distance queries on curves without a
/// closed-form projection.
pub const BOUNDARY_SAMPLES: usize = 4096;

/// Half-width (in tangent coordinates) of the zone where a perturbed lens
/// departs from its osculating circle.
pub const BUMP_HALF_WIDTH: f64 = 0.2;
const BUMP_FLAT: f64 = 0.0;

const ON_BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid domain parameter: {0}")]
    InvalidParameter(String),
    #[error("lens has an empty interior")]
    DegenerateLens,
    #[error("point ({0}, {1}) is not a corner of the domain")]
    NotACorner(f64, f64),
    #[error("boundary is not smooth at ({0}, {1})")]
    NotSmooth(f64, f64),
    #[error("point ({0}, {1}) is not on the boundary")]
    NotOnBoundary(f64, f64),
    #[error("tangent ball {index} contains the boundary point ({x}, {y})")]
    BallTooLarge { index: usize, x: f64, y: f64 },
}

pub type Result<T> = std::result::Result<T, GeometryError>;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct DiskSpec {
    pub center: [f64; 2],
    pub radius: f64,
}

impl DiskSpec {
    pub fn new(center: Point, radius: f64) -> Self {
        Self {
            center: [center.x, center.y],
            radius,
        }
    }

    pub fn center(&self) -> Point {
        Point::new(self.center[0], self.center[1])
    }

    pub fn contains(&self, p: &Point) -> bool {
        (p - self.center()).norm() < self.radius
    }
}

/// Declarative description of a convex planar domain; this is also the
/// on-disk configuration format (JSON with a `kind` tag).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        #[serde(default)]
        center: [f64; 2],
        a: f64,
        b: f64,
    },
    /// Intersection of the two disks of curvature `kappa1`, `kappa2` whose
    /// boundary circles meet at `vertex` with interior angle `mu * pi`.
    /// The bisector of the corner points along `axis_angle` (radians).
    Lens {
        vertex: [f64; 2],
        mu: f64,
        kappa1: f64,
        kappa2: f64,
        #[serde(default)]
        axis_angle: f64,
    },
    /// Lens whose two boundary curves are pushed inward near the vertex by
    /// `amplitude * |u|^(2 + holder_exponent)` in tangent coordinates.
    PerturbedLens {
        vertex: [f64; 2],
        mu: f64,
        kappa1: f64,
        kappa2: f64,
        amplitude: f64,
        holder_exponent: f64,
        #[serde(default)]
        axis_angle: f64,
    },
    DiskIntersection {
        disks: Vec<DiskSpec>,
    },
}

impl DomainSpec {
    /// Short content hash of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("domain spec serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(&digest[..8])
    }
}

/// Infinite planar cone (a wedge) with vertex, opening in radians and the
/// direction of its bisector. `dimension` records the ambient n for product
/// cones `wedge x R^(n-2)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConeSpec {
    pub vertex: [f64; 2],
    pub opening: f64,
    pub axis_angle: f64,
    pub dimension: usize,
}

impl ConeSpec {
    pub fn new(vertex: Point, opening: f64, axis_angle: f64) -> Self {
        Self {
            vertex: [vertex.x, vertex.y],
            opening,
            axis_angle,
            dimension: 2,
        }
    }

    pub fn vertex(&self) -> Point {
        Point::new(self.vertex[0], self.vertex[1])
    }

    /// Opening as a fraction of pi.
    pub fn mu(&self) -> f64 {
        self.opening / PI
    }

    pub fn axis(&self) -> Point {
        Point::new(self.axis_angle.cos(), self.axis_angle.sin())
    }

    /// Polar coordinates `(r, theta)` about the vertex with `theta` measured
    /// counterclockwise from the first edge. `theta` lies in `(-pi, pi]`
    /// shifted so that the cone itself is `0 < theta < opening`.
    pub fn polar(&self, x: &Point) -> (f64, f64) {
        let d = x - self.vertex();
        let r = d.norm();
        let first_edge = self.axis_angle - 0.5 * self.opening;
        let mut theta = d.y.atan2(d.x) - first_edge;
        while theta <= -PI {
            theta += 2.0 * PI;
        }
        while theta > PI {
            theta -= 2.0 * PI;
        }
        (r, theta)
    }

    pub fn contains(&self, x: &Point) -> bool {
        let (r, theta) = self.polar(x);
        r > 0.0 && theta > 0.0 && theta < self.opening
    }
}

#[derive(Clone, Copy, Debug)]
struct Circle {
    center: Point,
    radius: f64,
}

impl Circle {
    fn level(&self, p: &Point) -> f64 {
        self.radius - (p - self.center).norm()
    }

    fn project(&self, p: &Point) -> Point {
        let d = p - self.center;
        let n = d.norm();
        if n == 0.0 {
            self.center + Point::new(self.radius, 0.0)
        } else {
            self.center + d * (self.radius / n)
        }
    }

    /// Parameter `t` in `(0, 1]` where the segment `p -> q` (with `p` inside)
    /// leaves the disk, or `None` when `q` is inside too.
    fn exit(&self, p: &Point, q: &Point) -> Option<f64> {
        let d = q - p;
        let m = p - self.center;
        let a = d.norm_squared();
        let b = m.dot(&d);
        let c = m.norm_squared() - self.radius * self.radius;
        if (q - self.center).norm_squared() < self.radius * self.radius {
            return None;
        }
        let disc = (b * b - a * c).max(0.0);
        // c < 0 (p inside) so the positive root is (-b + sqrt)/a; use the
        // cancellation-free form.
        let s = b + disc.sqrt();
        let t = if s > 0.0 { -c / s } else { (-b + disc.sqrt()) / a };
        Some(t.clamp(0.0, 1.0))
    }
}

#[derive(Clone, Copy, Debug)]
struct Ellipse {
    center: Point,
    a: f64,
    b: f64,
}

impl Ellipse {
    fn level(&self, p: &Point) -> f64 {
        let d = p - self.center;
        // Scaled so the gradient at the boundary is comparable to a distance.
        let s = self.a.min(self.b);
        0.5 * s * (1.0 - (d.x / self.a).powi(2) - (d.y / self.b).powi(2))
    }

    fn exit(&self, p: &Point, q: &Point) -> Option<f64> {
        if self.level(q) > 0.0 {
            return None;
        }
        let m = p - self.center;
        let d = q - p;
        let ms = Point::new(m.x / self.a, m.y / self.b);
        let ds = Point::new(d.x / self.a, d.y / self.b);
        let a = ds.norm_squared();
        let b = ms.dot(&ds);
        let c = ms.norm_squared() - 1.0;
        let disc = (b * b - a * c).max(0.0);
        let s = b + disc.sqrt();
        let t = if s > 0.0 { -c / s } else { (-b + disc.sqrt()) / a };
        Some(t.clamp(0.0, 1.0))
    }

    /// Nearest boundary point (robust bisection on the Lagrange multiplier).
    fn project(&self, p: &Point) -> Point {
        let d = p - self.center;
        let (swap, e0, e1) = if self.a >= self.b {
            (false, self.a, self.b)
        } else {
            (true, self.b, self.a)
        };
        let (x0, y0) = if swap { (d.y, d.x) } else { (d.x, d.y) };
        let (sx, sy) = (x0.signum(), y0.signum());
        let (y0a, y1a) = (x0.abs(), y0.abs());
        let (px, py) = nearest_on_ellipse_quadrant(e0, e1, y0a, y1a);
        let (px, py) = (px * sx, py * sy);
        let local = if swap { Point::new(py, px) } else { Point::new(px, py) };
        self.center + local
    }

    fn normal_inward(&self, q: &Point) -> Point {
        let d = q - self.center;
        let g = Point::new(d.x / (self.a * self.a), d.y / (self.b * self.b));
        -g.normalize()
    }

    fn curvature(&self, q: &Point) -> f64 {
        let d = q - self.center;
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        let s = d.x * d.x / (a2 * a2) + d.y * d.y / (b2 * b2);
        1.0 / (a2 * b2 * s.powf(1.5))
    }
}

/// Nearest point on the first-quadrant arc of `x^2/e0^2 + y^2/e1^2 = 1`
/// (`e0 >= e1`) to `(y0, y1)` with nonnegative coordinates.
fn nearest_on_ellipse_quadrant(e0: f64, e1: f64, y0: f64, y1: f64) -> (f64, f64) {
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g != 0.0 {
                let r0 = (e0 / e1).powi(2);
                let n0 = r0 * z0;
                let mut s0 = z1 - 1.0;
                let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
                let mut s = 0.0;
                for _ in 0..200 {
                    s = 0.5 * (s0 + s1);
                    if s == s0 || s == s1 {
                        break;
                    }
                    let ratio0 = n0 / (s + r0);
                    let ratio1 = z1 / (s + 1.0);
                    let gs = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
                    if gs > 0.0 {
                        s0 = s;
                    } else if gs < 0.0 {
                        s1 = s;
                    } else {
                        break;
                    }
                }
                (r0 * y0 / (s + r0), y1 / (s + 1.0))
            } else {
                (y0, y1)
            }
        } else {
            (0.0, e1)
        }
    } else {
        let numer0 = e0 * y0;
        let denom0 = e0 * e0 - e1 * e1;
        if numer0 < denom0 {
            let xde0 = numer0 / denom0;
            (e0 * xde0, e1 * (1.0 - xde0 * xde0).max(0.0).sqrt())
        } else {
            (e0, 0.0)
        }
    }
}

/// Disk whose boundary near `vertex` is replaced, in tangent coordinates
/// `(u, v)` (v along the inward normal), by
/// `v = circle(u) + amplitude * |u|^(2+exponent) * cutoff(|u|)`.
#[derive(Clone, Debug)]
struct BumpedDisk {
    circle: Circle,
    vertex: Point,
    tangent: Point,
    normal: Point,
    kappa: f64,
    amplitude: f64,
    exponent: f64,
    /// Graph samples `(u, world point)` over `[-BUMP_HALF_WIDTH, BUMP_HALF_WIDTH]`.
    samples: Vec<(f64, Point)>,
}

fn smoothstep_cutoff(s: f64) -> (f64, f64, f64) {
    // Quintic (C^2) descent from 1 at BUMP_FLAT to 0 at BUMP_HALF_WIDTH. Starting
    // the descent at 0 keeps the perturbed curve convex for moderate amplitudes.
    if s <= BUMP_FLAT {
        return (1.0, 0.0, 0.0);
    }
    if s >= BUMP_HALF_WIDTH {
        return (0.0, 0.0, 0.0);
    }
    let w = BUMP_HALF_WIDTH - BUMP_FLAT;
    let t = (s - BUMP_FLAT) / w;
    let p = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    let dp = 30.0 * t * t * (1.0 - t) * (1.0 - t);
    let ddp = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
    (1.0 - p, -dp / w, -ddp / (w * w))
}

impl BumpedDisk {
    fn new(vertex: Point, normal: Point, kappa: f64, amplitude: f64, exponent: f64) -> Self {
        let tangent = Point::new(-normal.y, normal.x);
        let circle = Circle {
            center: vertex + normal / kappa,
            radius: 1.0 / kappa,
        };
        let mut piece = Self {
            circle,
            vertex,
            tangent,
            normal,
            kappa,
            amplitude,
            exponent,
            samples: Vec::new(),
        };
        piece.samples = (0..BOUNDARY_SAMPLES)
            .map(|k| {
                let u = -BUMP_HALF_WIDTH + 2.0 * BUMP_HALF_WIDTH * k as f64 / (BOUNDARY_SAMPLES - 1) as f64;
                (u, piece.graph_point(u))
            })
            .collect();
        piece
    }

    fn local(&self, p: &Point) -> (f64, f64) {
        let d = p - self.vertex;
        (d.dot(&self.tangent), d.dot(&self.normal))
    }

    fn graph_point(&self, u: f64) -> Point {
        self.vertex + self.tangent * u + self.normal * self.graph(u).0
    }

    /// `(g, g', g'')` of the boundary graph in tangent coordinates.
    fn graph(&self, u: f64) -> (f64, f64, f64) {
        let k = self.kappa;
        let root = (1.0 - k * k * u * u).sqrt();
        let c0 = (1.0 - root) / k;
        let c1 = k * u / root;
        let c2 = k / (root * root * root);
        let s = u.abs();
        let sg = if u < 0.0 { -1.0 } else { 1.0 };
        let p = 2.0 + self.exponent;
        let (chi, dchi, ddchi) = smoothstep_cutoff(s);
        let a = self.amplitude;
        let sp = s.powf(p);
        let b0 = a * sp * chi;
        let (b1, b2) = if s > 0.0 {
            let sp1 = p * s.powf(p - 1.0);
            let sp2 = p * (p - 1.0) * s.powf(p - 2.0);
            (
                sg * a * (sp1 * chi + sp * dchi),
                a * (sp2 * chi + 2.0 * sp1 * dchi + sp * ddchi),
            )
        } else {
            (0.0, 0.0)
        };
        (c0 + b0, c1 + b1, c2 + b2)
    }

    fn in_bump_zone(&self, u: f64, v: f64) -> bool {
        u.abs() < BUMP_HALF_WIDTH && v < 1.0 / self.kappa
    }

    fn level(&self, p: &Point) -> f64 {
        let (u, v) = self.local(p);
        if self.in_bump_zone(u, v) {
            v - self.graph(u).0
        } else {
            self.circle.level(p)
        }
    }

    fn exit(&self, p: &Point, q: &Point) -> Option<f64> {
        if self.level(q) > 0.0 {
            return None;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if self.level(&(p + (q - p) * mid)) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    fn project(&self, p: &Point) -> Point {
        let mut best = self.circle.project(p);
        let (bu, bv) = self.local(&best);
        let mut best_d = if self.in_bump_zone(bu, bv) {
            f64::INFINITY
        } else {
            (p - best).norm_squared()
        };
        // Graph part: only worth scanning if it can beat the arc candidate.
        let (u, v) = self.local(p);
        let du = (u.abs() - BUMP_HALF_WIDTH).max(0.0);
        let dv = (v - 1.0 / self.kappa).max(0.0);
        if du * du + dv * dv < best_d {
            let (mut k_best, mut d_best) = (0, f64::INFINITY);
            for (k, (_, q)) in self.samples.iter().enumerate() {
                let d = (p - q).norm_squared();
                if d < d_best {
                    d_best = d;
                    k_best = k;
                }
            }
            let lo = self.samples[k_best.saturating_sub(1)].0;
            let hi = self.samples[(k_best + 1).min(self.samples.len() - 1)].0;
            let u_star = golden_min(lo, hi, |u| (p - self.graph_point(u)).norm_squared());
            let q = self.graph_point(u_star);
            let d = (p - q).norm_squared();
            if d < best_d {
                best_d = d;
                best = q;
            }
        }
        let _ = best_d;
        best
    }

    fn normal_inward(&self, q: &Point) -> Point {
        let (u, v) = self.local(q);
        if self.in_bump_zone(u, v) {
            let (_, g1, _) = self.graph(u);
            (self.normal - self.tangent * g1).normalize()
        } else {
            (self.circle.center - q).normalize()
        }
    }

    fn curvature(&self, q: &Point) -> f64 {
        let (u, v) = self.local(q);
        if self.in_bump_zone(u, v) {
            let (_, g1, g2) = self.graph(u);
            g2 / (1.0 + g1 * g1).powf(1.5)
        } else {
            self.kappa
        }
    }
}

fn golden_min<F: Fn(f64) -> f64>(mut a: f64, mut b: f64, f: F) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[derive(Clone, Debug)]
enum Piece {
    Disk(Circle),
    Ellipse(Ellipse),
    Bumped(BumpedDisk),
}

impl Piece {
    fn level(&self, p: &Point) -> f64 {
        match self {
            Piece::Disk(c) => c.level(p),
            Piece::Ellipse(e) => e.level(p),
            Piece::Bumped(b) => b.level(p),
        }
    }

    fn exit(&self, p: &Point, q: &Point) -> Option<f64> {
        match self {
            Piece::Disk(c) => c.exit(p, q),
            Piece::Ellipse(e) => e.exit(p, q),
            Piece::Bumped(b) => b.exit(p, q),
        }
    }

    fn project(&self, p: &Point) -> Point {
        match self {
            Piece::Disk(c) => c.project(p),
            Piece::Ellipse(e) => e.project(p),
            Piece::Bumped(b) => b.project(p),
        }
    }

    fn boundary_distance(&self, p: &Point) -> f64 {
        match self {
            Piece::Disk(c) => c.level(p).abs(),
            _ => (p - self.project(p)).norm(),
        }
    }

    fn normal_inward(&self, q: &Point) -> Point {
        match self {
            Piece::Disk(c) => (c.center - q).normalize(),
            Piece::Ellipse(e) => e.normal_inward(q),
            Piece::Bumped(b) => b.normal_inward(q),
        }
    }

    fn curvature(&self, q: &Point) -> f64 {
        match self {
            Piece::Disk(c) => 1.0 / c.radius,
            Piece::Ellipse(e) => e.curvature(q),
            Piece::Bumped(b) => b.curvature(q),
        }
    }

    fn boundary_samples(&self, n: usize) -> Vec<Point> {
        match self {
            Piece::Disk(c) => (0..n)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / n as f64;
                    c.center + Point::new(t.cos(), t.sin()) * c.radius
                })
                .collect(),
            Piece::Ellipse(e) => (0..n)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / n as f64;
                    e.center + Point::new(e.a * t.cos(), e.b * t.sin())
                })
                .collect(),
            Piece::Bumped(b) => {
                let mut pts: Vec<Point> = (0..n)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / n as f64;
                        b.circle.center + Point::new(t.cos(), t.sin()) * b.circle.radius
                    })
                    .filter(|q| {
                        let (u, v) = b.local(q);
                        !b.in_bump_zone(u, v)
                    })
                    .collect();
                let m = (n / 4).max(16);
                pts.extend(
                    (0..=m).map(|k| b.graph_point(-BUMP_HALF_WIDTH + 2.0 * BUMP_HALF_WIDTH * k as f64 / m as f64)),
                );
                pts
            }
        }
    }

    /// Axis-extreme points of the full piece boundary (for bounding boxes).
    fn extremes(&self) -> Vec<Point> {
        match self {
            Piece::Disk(c) => axis_extremes(c.center, c.radius, c.radius),
            Piece::Ellipse(e) => axis_extremes(e.center, e.a, e.b),
            Piece::Bumped(b) => {
                let mut pts: Vec<Point> = axis_extremes(b.circle.center, b.circle.radius, b.circle.radius)
                    .into_iter()
                    .filter(|q| {
                        let (u, v) = b.local(q);
                        !b.in_bump_zone(u, v)
                    })
                    .collect();
                pts.extend(b.samples.iter().map(|(_, q)| *q));
                pts
            }
        }
    }
}

fn axis_extremes(c: Point, rx: f64, ry: f64) -> Vec<Point> {
    vec![
        c + Point::new(rx, 0.0),
        c - Point::new(rx, 0.0),
        c + Point::new(0.0, ry),
        c - Point::new(0.0, ry),
    ]
}

/// Second intersection of two circles that are known to meet at `x0`
/// (reflection of `x0` across the line of centers).
fn second_intersection(c1: Point, c2: Point, x0: Point) -> Point {
    let axis = (c2 - c1).normalize();
    let rel = x0 - c1;
    let along = axis * rel.dot(&axis);
    c1 + along * 2.0 - rel
}

fn circle_intersections(a: &Circle, b: &Circle) -> Vec<Point> {
    let d = b.center - a.center;
    let dist = d.norm();
    if dist == 0.0 || dist > a.radius + b.radius || dist < (a.radius - b.radius).abs() {
        return Vec::new();
    }
    let along = (a.radius * a.radius - b.radius * b.radius + dist * dist) / (2.0 * dist);
    let h = (a.radius * a.radius - along * along).max(0.0).sqrt();
    let e = d / dist;
    let base = a.center + e * along;
    let perp = Point::new(-e.y, e.x);
    vec![base + perp * h, base - perp * h]
}

/// A validated convex domain built from a [`DomainSpec`]. Immutable after
/// construction.
#[derive(Clone, Debug)]
pub struct Domain {
    spec: DomainSpec,
    pieces: Vec<Piece>,
    corners: Vec<Point>,
    bbox_min: Point,
    bbox_max: Point,
    diameter: f64,
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(GeometryError::InvalidParameter(msg.to_string()))
    }
}

fn lens_normals(axis_angle: f64, mu: f64) -> (Point, Point) {
    // Edge 1 leaves the vertex at axis + mu*pi/2, edge 2 at axis - mu*pi/2;
    // interior normals point into the wedge.
    let half = 0.5 * mu * PI;
    let a1 = axis_angle + half - 0.5 * PI;
    let a2 = axis_angle - half + 0.5 * PI;
    (Point::new(a1.cos(), a1.sin()), Point::new(a2.cos(), a2.sin()))
}

impl Domain {
    pub fn new(spec: DomainSpec) -> Result<Self> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let (pieces, corners) = match &spec {
            DomainSpec::Disk { center, radius } => {
                check(finite(&[center[0], center[1], *radius]), "non-finite disk")?;
                check(*radius > 0.0, "disk radius must be positive")?;
                let c = Circle {
                    center: Point::new(center[0], center[1]),
                    radius: *radius,
                };
                (vec![Piece::Disk(c)], Vec::new())
            }
            DomainSpec::Ellipse { center, a, b } => {
                check(finite(&[center[0], center[1], *a, *b]), "non-finite ellipse")?;
                check(*a > 0.0 && *b > 0.0, "ellipse semi-axes must be positive")?;
                let e = Ellipse {
                    center: Point::new(center[0], center[1]),
                    a: *a,
                    b: *b,
                };
                (vec![Piece::Ellipse(e)], Vec::new())
            }
            DomainSpec::Lens {
                vertex,
                mu,
                kappa1,
                kappa2,
                axis_angle,
            } => {
                check(
                    finite(&[vertex[0], vertex[1], *mu, *kappa1, *kappa2, *axis_angle]),
                    "non-finite lens",
                )?;
                check(*mu > 0.0 && *mu < 1.0, "lens opening mu must lie in (0, 1)")?;
                check(*kappa1 > 0.0 && *kappa2 > 0.0, "lens curvatures must be positive")?;
                let x0 = Point::new(vertex[0], vertex[1]);
                let (n1, n2) = lens_normals(*axis_angle, *mu);
                let c1 = Circle {
                    center: x0 + n1 / *kappa1,
                    radius: 1.0 / kappa1,
                };
                let c2 = Circle {
                    center: x0 + n2 / *kappa2,
                    radius: 1.0 / kappa2,
                };
                let x1 = second_intersection(c1.center, c2.center, x0);
                lens_width_check(&c1, &c2, x0, x1)?;
                (vec![Piece::Disk(c1), Piece::Disk(c2)], vec![x0, x1])
            }
            DomainSpec::PerturbedLens {
                vertex,
                mu,
                kappa1,
                kappa2,
                amplitude,
                holder_exponent,
                axis_angle,
            } => {
                check(
                    finite(&[
                        vertex[0],
                        vertex[1],
                        *mu,
                        *kappa1,
                        *kappa2,
                        *amplitude,
                        *holder_exponent,
                        *axis_angle,
                    ]),
                    "non-finite perturbed lens",
                )?;
                check(*mu > 0.0 && *mu < 1.0, "lens opening mu must lie in (0, 1)")?;
                check(*kappa1 > 0.0 && *kappa2 > 0.0, "lens curvatures must be positive")?;
                check(
                    *kappa1 * BUMP_HALF_WIDTH < 0.9 && *kappa2 * BUMP_HALF_WIDTH < 0.9,
                    "curvature too large for the perturbation zone",
                )?;
                check(
                    *holder_exponent > 0.0 && *holder_exponent < 1.0,
                    "Hölder exponent must lie in (0, 1)",
                )?;
                check(*amplitude >= 0.0, "perturbation amplitude must be nonnegative")?;
                let x0 = Point::new(vertex[0], vertex[1]);
                let (n1, n2) = lens_normals(*axis_angle, *mu);
                let b1 = BumpedDisk::new(x0, n1, *kappa1, *amplitude, *holder_exponent);
                let b2 = BumpedDisk::new(x0, n2, *kappa2, *amplitude, *holder_exponent);
                for b in [&b1, &b2] {
                    let convex = (0..BOUNDARY_SAMPLES).all(|k| {
                        let u = BUMP_HALF_WIDTH * k as f64 / (BOUNDARY_SAMPLES - 1) as f64;
                        b.graph(u).2 > 0.0
                    });
                    check(convex, "perturbation amplitude breaks convexity")?;
                }
                let x1 = second_intersection(b1.circle.center, b2.circle.center, x0);
                lens_width_check(&b1.circle, &b2.circle, x0, x1)?;
                for b in [&b1, &b2] {
                    let (u, v) = b.local(&x1);
                    check(
                        !b.in_bump_zone(u, v),
                        "lens too short: far corner inside the perturbation zone",
                    )?;
                }
                (vec![Piece::Bumped(b1), Piece::Bumped(b2)], vec![x0, x1])
            }
            DomainSpec::DiskIntersection { disks } => {
                check(!disks.is_empty(), "disk intersection needs at least one disk")?;
                let circles: Vec<Circle> = disks
                    .iter()
                    .map(|d| {
                        check(
                            finite(&[d.center[0], d.center[1], d.radius]) && d.radius > 0.0,
                            "invalid disk in intersection",
                        )
                        .map(|_| Circle {
                            center: d.center(),
                            radius: d.radius,
                        })
                    })
                    .collect::<Result<_>>()?;
                let scale = circles.iter().map(|c| c.radius).fold(0.0, f64::max);
                let mut corners: Vec<Point> = Vec::new();
                for i in 0..circles.len() {
                    for j in i + 1..circles.len() {
                        for p in circle_intersections(&circles[i], &circles[j]) {
                            let on_all = circles.iter().all(|c| c.level(&p) >= -ON_BOUNDARY_TOL * scale);
                            let dup = corners.iter().any(|q| (q - p).norm() < 1e-12 * scale);
                            if on_all && !dup {
                                corners.push(p);
                            }
                        }
                    }
                }
                (circles.into_iter().map(Piece::Disk).collect(), corners)
            }
        };

        let mut domain = Self {
            spec,
            pieces,
            corners,
            bbox_min: Point::zeros(),
            bbox_max: Point::zeros(),
            diameter: 0.0,
        };
        domain.finish_extent()?;
        Ok(domain)
    }

    fn finish_extent(&mut self) -> Result<()> {
        let scale = self.length_scale();
        let tol = -1e-10 * scale;
        let mut pts: Vec<Point> = self
            .pieces
            .iter()
            .flat_map(|p| p.extremes())
            .filter(|q| self.pieces.iter().all(|p| p.level(q) >= tol))
            .collect();
        pts.extend(self.corners.iter().copied());
        if pts.is_empty() {
            return Err(GeometryError::InvalidParameter("domain has an empty interior".into()));
        }
        let mut lo = pts[0];
        let mut hi = pts[0];
        for q in &pts {
            lo = lo.inf(q);
            hi = hi.sup(q);
        }
        self.bbox_min = lo;
        self.bbox_max = hi;
        let samples = self.boundary_samples(256);
        let mut diam: f64 = 0.0;
        for (i, a) in samples.iter().enumerate() {
            for b in &samples[i + 1..] {
                diam = diam.max((a - b).norm());
            }
        }
        self.diameter = diam.max((hi - lo).x.max((hi - lo).y));
        let center = (lo + hi) * 0.5;
        if !self.contains(&center) && self.signed_distance(&center) <= 0.0 {
            // Convex sets contain the midpoint of any two boundary points;
            // an empty interior shows up as a nonpositive distance everywhere.
            let any_inside = samples
                .iter()
                .zip(samples.iter().skip(samples.len() / 2))
                .any(|(a, b)| self.contains(&((a + b) * 0.5)));
            if !any_inside {
                return Err(GeometryError::InvalidParameter("domain has an empty interior".into()));
            }
        }
        Ok(())
    }

    fn length_scale(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| match p {
                Piece::Disk(c) => c.radius,
                Piece::Ellipse(e) => e.a.max(e.b),
                Piece::Bumped(b) => b.circle.radius,
            })
            .fold(0.0, f64::max)
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn hash(&self) -> String {
        self.spec.hash()
    }

    pub fn corner_points(&self) -> &[Point] {
        &self.corners
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        (self.bbox_min, self.bbox_max)
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.pieces.iter().all(|piece| piece.level(p) > 0.0)
    }

    /// Fraction `t` in `(0, 1]` at which the segment `p -> q` leaves the
    /// domain (`p` must be inside), or `None` if `q` is inside as well.
    pub fn segment_exit(&self, p: &Point, q: &Point) -> Option<f64> {
        self.pieces
            .iter()
            .filter_map(|piece| piece.exit(p, q))
            .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.min(t))))
    }

    /// Distance to the boundary, positive inside and negative outside.
    pub fn signed_distance(&self, p: &Point) -> f64 {
        if self.contains(p) {
            return self
                .pieces
                .iter()
                .map(|piece| piece.boundary_distance(p))
                .fold(f64::INFINITY, f64::min);
        }
        let tol = -1e-12 * self.length_scale();
        let mut best = f64::INFINITY;
        for (i, piece) in self.pieces.iter().enumerate() {
            if piece.level(p) > 0.0 {
                continue;
            }
            let q = piece.project(p);
            let inside_others = self
                .pieces
                .iter()
                .enumerate()
                .all(|(j, other)| j == i || other.level(&q) >= tol);
            if inside_others {
                best = best.min((p - q).norm());
            }
        }
        for c in &self.corners {
            best = best.min((p - c).norm());
        }
        -best
    }

    /// Pieces whose boundary passes through `q`.
    fn active_pieces(&self, q: &Point) -> Vec<usize> {
        let tol = ON_BOUNDARY_TOL * self.length_scale();
        (0..self.pieces.len())
            .filter(|&i| self.pieces[i].boundary_distance(q) < tol)
            .collect()
    }

    fn is_corner(&self, q: &Point) -> bool {
        let tol = ON_BOUNDARY_TOL * self.length_scale();
        self.corners.iter().any(|c| (c - q).norm() < tol)
    }

    fn check_on_boundary(&self, q: &Point) -> Result<Vec<usize>> {
        let active = self.active_pieces(q);
        if active.is_empty() || self.signed_distance(q).abs() > ON_BOUNDARY_TOL * self.length_scale() {
            return Err(GeometryError::NotOnBoundary(q.x, q.y));
        }
        Ok(active)
    }

    /// Curvature of the boundary at `q` with respect to the inward normal.
    pub fn boundary_curvature(&self, q: &Point) -> Result<f64> {
        let active = self.check_on_boundary(q)?;
        if active.len() > 1 || self.is_corner(q) {
            return Err(GeometryError::NotSmooth(q.x, q.y));
        }
        Ok(self.pieces[active[0]].curvature(q))
    }

    /// Inward unit normal at a smooth boundary point.
    pub fn inward_normal(&self, q: &Point) -> Result<Point> {
        let active = self.check_on_boundary(q)?;
        if active.len() > 1 || self.is_corner(q) {
            return Err(GeometryError::NotSmooth(q.x, q.y));
        }
        Ok(self.pieces[active[0]].normal_inward(q))
    }

    /// Nearest boundary point to an interior point.
    pub fn nearest_boundary_point(&self, p: &Point) -> Point {
        let mut best = (f64::INFINITY, *p);
        for piece in &self.pieces {
            let q = piece.project(p);
            let d = (p - q).norm();
            if d < best.0 {
                best = (d, q);
            }
        }
        best.1
    }

    /// Points on the boundary, `per_piece` samples per curve (those not on
    /// the domain boundary are dropped).
    pub fn boundary_samples(&self, per_piece: usize) -> Vec<Point> {
        let tol = -1e-10 * self.length_scale();
        let mut pts: Vec<Point> = self
            .pieces
            .iter()
            .enumerate()
            .flat_map(|(i, piece)| {
                piece
                    .boundary_samples(per_piece)
                    .into_iter()
                    .filter(move |q| {
                        self.pieces
                            .iter()
                            .enumerate()
                            .all(|(j, other)| j == i || other.level(q) >= tol)
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        pts.extend(self.corners.iter().copied());
        pts
    }

    /// Tangent cone at a registered corner.
    pub fn tangent_cone_at(&self, vertex: &Point) -> Result<ConeSpec> {
        if !self.is_corner(vertex) {
            return Err(GeometryError::NotACorner(vertex.x, vertex.y));
        }
        let normals: Vec<Point> = self
            .active_pieces(vertex)
            .into_iter()
            .map(|i| self.pieces[i].normal_inward(vertex))
            .collect();
        wedge_from_normals(vertex, &normals).ok_or(GeometryError::NotACorner(vertex.x, vertex.y))
    }

    /// Largest half-angle `theta0` of a circular cone of the given height,
    /// with vertex at the corner and axis along the tangent-cone bisector,
    /// contained in the closure of the domain.
    pub fn interior_cone(&self, vertex: &Point, height: f64) -> Result<f64> {
        let cone = self.tangent_cone_at(vertex)?;
        let fits = |half: f64| {
            (1..=64).all(|k| {
                let t = height * k as f64 / 64.0;
                [cone.axis_angle - half, cone.axis_angle + half].iter().all(|a| {
                    let q = vertex + Point::new(a.cos(), a.sin()) * t;
                    self.signed_distance(&q) >= -1e-12 * self.length_scale()
                })
            })
        };
        let (mut lo, mut hi) = (0.0, 0.5 * cone.opening);
        if !fits(lo) {
            return Err(GeometryError::InvalidParameter("cone height exceeds the domain".into()));
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if fits(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// The disks `B_i` of radius `(L/2)/<nu_i, e>` centred on `x0 + r nu_i`:
    /// each touches one boundary curve at the corner from inside and all of
    /// them pass through `x0` and `q = x0 + L e`, with `e` the cone axis.
    pub fn tangent_balls(&self, vertex: &Point, l: f64) -> Result<Vec<DiskSpec>> {
        let cone = self.tangent_cone_at(vertex)?;
        if !(l > 0.0) {
            return Err(GeometryError::InvalidParameter("L must be positive".into()));
        }
        let e = cone.axis();
        let active = self.active_pieces(vertex);
        let mut balls = Vec::new();
        let samples = self.boundary_samples(BOUNDARY_SAMPLES);
        for (index, &i) in active.iter().enumerate() {
            let nu = self.pieces[i].normal_inward(vertex);
            let r = 0.5 * l / nu.dot(&e);
            let ball = DiskSpec::new(vertex + nu * r, r);
            let tol = 1e-9 * r;
            for q in samples
                .iter()
                .filter(|q| self.pieces[i].boundary_distance(q) < 1e-9 * self.length_scale())
            {
                if (q - ball.center()).norm() < r - tol {
                    return Err(GeometryError::BallTooLarge { index, x: q.x, y: q.y });
                }
            }
            balls.push(ball);
        }
        Ok(balls)
    }

    /// True iff `dist(x, boundary) >= delta * |x - x0|`.
    pub fn in_delta_sector(&self, x: &Point, x0: &Point, delta: f64) -> bool {
        self.signed_distance(x) >= delta * (x - x0).norm()
    }
}

fn lens_width_check(c1: &Circle, c2: &Circle, x0: Point, x1: Point) -> Result<()> {
    let scale = c1.radius.max(c2.radius);
    let mid = (x0 + x1) * 0.5;
    let width = c1.level(&mid).min(c2.level(&mid));
    if !((x1 - x0).norm() > 1e-12 * scale) || !(width > 1e-12 * scale) || !width.is_finite() {
        return Err(GeometryError::DegenerateLens);
    }
    Ok(())
}

/// Lens `B_{1/k1}(x0 + nu1/k1) ∩ B_{1/k2}(x0 + nu2/k2)` with interior angle
/// `mu * pi` at `x0` and bisector along +x.
pub fn lens_domain(x0: Point, mu: f64, kappa1: f64, kappa2: f64) -> Result<Domain> {
    Domain::new(DomainSpec::Lens {
        vertex: [x0.x, x0.y],
        mu,
        kappa1,
        kappa2,
        axis_angle: 0.0,
    })
}

/// The two disks whose intersection is [`lens_domain`].
pub fn lens_disks(x0: Point, mu: f64, kappa1: f64, kappa2: f64) -> [DiskSpec; 2] {
    let (n1, n2) = lens_normals(0.0, mu);
    [
        DiskSpec::new(x0 + n1 / kappa1, 1.0 / kappa1),
        DiskSpec::new(x0 + n2 / kappa2, 1.0 / kappa2),
    ]
}

pub fn perturbed_lens_domain(
    x0: Point,
    mu: f64,
    kappa1: f64,
    kappa2: f64,
    amplitude: f64,
    holder_exponent: f64,
) -> Result<Domain> {
    Domain::new(DomainSpec::PerturbedLens {
        vertex: [x0.x, x0.y],
        mu,
        kappa1,
        kappa2,
        amplitude,
        holder_exponent,
        axis_angle: 0.0,
    })
}

/// Wedge `{x : n_i . (x - vertex) >= 0}` cut out by the given inward
/// normals, or `None` when it is a half-plane or degenerate.
pub(crate) fn wedge_from_normals(vertex: &Point, normals: &[Point]) -> Option<ConeSpec> {
    let mut edges: Vec<Point> = Vec::new();
    for n in normals {
        for d in [Point::new(-n.y, n.x), Point::new(n.y, -n.x)] {
            if normals.iter().all(|m| m.dot(&d) >= -1e-12) {
                edges.push(d);
            }
        }
    }
    let mut best: Option<(f64, Point, Point)> = None;
    for (i, a) in edges.iter().enumerate() {
        for b in &edges[i + 1..] {
            let ang = a.dot(b).clamp(-1.0, 1.0).acos();
            if best.is_none_or(|(x, _, _)| ang > x) {
                best = Some((ang, *a, *b));
            }
        }
    }
    let (opening, a, b) = best?;
    if opening >= PI - 1e-9 || opening <= 1e-12 {
        return None;
    }
    let axis = (a + b).normalize();
    Some(ConeSpec::new(*vertex, opening, axis.y.atan2(axis.x)))
}
