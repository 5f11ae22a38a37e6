//! The hyperbolic isometry `T_L` of the upper half-space that fixes the
//! point `(0, ..., 0, L)`, swaps `(-L, 0, ..., 0)` with the origin and sends
//! `(L, 0, ..., 0)` to infinity, together with the graph and domain transport
//! used to compare ball intersections with cones.
//!
//! Writing `u = x - L e1` and `R = diag(-1, 1, ..., 1)`,
//! `T_L(x) = -L e1 + 2 L^2 R u / |u|^2`: an inversion followed by a
//! reflection, which gives the inverse in closed form.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{wedge_from_normals, ConeSpec, DiskSpec, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MobiusError {
    #[error("point maps to infinity")]
    AtInfinity,
    #[error("point lies on the boundary plane")]
    BoundaryPoint,
    #[error("disk {index} does not pass through both x0 and q")]
    NotThroughPole { index: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, MobiusError>;

/// A point of the closed upper half-space, or the single point at infinity.
#[derive(Clone, Debug, PartialEq)]
pub enum AmbientPoint {
    Finite(DVector<f64>),
    AtInfinity,
}

impl AmbientPoint {
    pub fn new(coords: &[f64]) -> Self {
        AmbientPoint::Finite(DVector::from_column_slice(coords))
    }

    pub fn coords(&self) -> Option<&DVector<f64>> {
        match self {
            AmbientPoint::Finite(v) => Some(v),
            AmbientPoint::AtInfinity => None,
        }
    }
}

fn check_length(l: f64) -> Result<()> {
    if l.is_finite() && l > 0.0 {
        Ok(())
    } else {
        Err(MobiusError::InvalidParameter(format!("L = {l}")))
    }
}

/// `x - L e1` and its squared norm; `AtInfinity` at the pole.
fn shifted(l: f64, x: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let mut u = x.clone();
    u[0] -= l;
    let d = u.norm_squared();
    if d <= (1e-300f64).max(1e-30 * l * l) {
        return Err(MobiusError::AtInfinity);
    }
    Ok((u, d))
}

pub fn apply_t(l: f64, p: &AmbientPoint) -> Result<AmbientPoint> {
    check_length(l)?;
    let x = p.coords().ok_or(MobiusError::AtInfinity)?;
    let (mut u, d) = shifted(l, x)?;
    u *= 2.0 * l * l / d;
    u[0] = -u[0] - l;
    Ok(AmbientPoint::Finite(u))
}

/// Inverse of [`apply_t`] on finite points. `-L e1` is the image of
/// infinity and yields `AtInfinity`.
pub fn apply_t_inverse(l: f64, p: &AmbientPoint) -> Result<AmbientPoint> {
    check_length(l)?;
    let y = p.coords().ok_or(MobiusError::AtInfinity)?;
    let mut v = y.clone();
    v[0] = -(v[0] + l);
    let d = v.norm_squared();
    if d <= (1e-300f64).max(1e-30 * l * l) {
        return Err(MobiusError::AtInfinity);
    }
    v *= 2.0 * l * l / d;
    v[0] += l;
    Ok(AmbientPoint::Finite(v))
}

/// Analytic derivative of `T_L` at `x`:
/// `2 L^2 R (I - 2 u u^T / |u|^2) / |u|^2`.
pub fn jacobian_t(l: f64, p: &AmbientPoint) -> Result<DMatrix<f64>> {
    check_length(l)?;
    let x = p.coords().ok_or(MobiusError::AtInfinity)?;
    let (u, d) = shifted(l, x)?;
    let dim = u.len();
    let mut j = DMatrix::identity(dim, dim) - (&u * u.transpose()) * (2.0 / d);
    j *= 2.0 * l * l / d;
    j.row_mut(0).neg_mut();
    Ok(j)
}

/// Max-abs entry of `J^T J (x_last / y_last)^2 - I`, which vanishes exactly
/// when `J` pulls the hyperbolic metric at `y` back to the one at `x`.
pub fn metric_defect(j: &DMatrix<f64>, x_last: f64, y_last: f64) -> f64 {
    let scale = (x_last / y_last).powi(2);
    let g = j.transpose() * j * scale - DMatrix::identity(j.nrows(), j.ncols());
    g.amax()
}

pub fn isometry_defect(l: f64, p: &AmbientPoint) -> Result<f64> {
    let x = p.coords().ok_or(MobiusError::AtInfinity)?;
    let x_last = x[x.len() - 1];
    if x_last <= 0.0 {
        return Err(MobiusError::BoundaryPoint);
    }
    let y = apply_t(l, p)?;
    let y_last = y.coords().map(|v| v[v.len() - 1]).unwrap_or(0.0);
    Ok(metric_defect(&jacobian_t(l, p)?, x_last, y_last))
}

/// Stretch factor of `T_L` restricted to the boundary plane at `p`
/// (given by its `n` plane coordinates). Returns the mean of the singular
/// values of the restricted Jacobian and its anisotropy `max - min`.
pub fn conformal_factor_with_anisotropy(l: f64, p: &[f64]) -> Result<(f64, f64)> {
    let mut coords = p.to_vec();
    coords.push(0.0);
    let j = jacobian_t(l, &AmbientPoint::new(&coords))?;
    let n = p.len();
    let restricted = j.view((0, 0), (n, n)).into_owned();
    let sv = restricted.singular_values();
    let max = sv.max();
    let min = sv.min();
    Ok((0.5 * (max + min), max - min))
}

/// Conformal factor `2 L^2 / |x - L e1|^2` of `T_L` on the boundary plane.
pub fn conformal_factor_on_plane(l: f64, p: &[f64]) -> Result<f64> {
    conformal_factor_with_anisotropy(l, p).map(|(f, _)| f)
}

/// Image under `T_L` of an intersection of disks whose boundary circles all
/// pass through `x0 = (-L, 0)` and `q = (L, 0)`. Each circle becomes a line
/// through `T_L(x0) = 0`, so the image is a cone with vertex at the midpoint
/// of `x0 q`.
pub fn image_of_ball_intersection(balls: &[DiskSpec], l: f64) -> Result<ConeSpec> {
    check_length(l)?;
    if balls.is_empty() {
        return Err(MobiusError::InvalidParameter("no disks".into()));
    }
    let x0 = Point::new(-l, 0.0);
    let q = Point::new(l, 0.0);
    let to_plane = |p: &Point| -> Result<Point> {
        let y = apply_t(l, &AmbientPoint::new(&[p.x, p.y, 0.0]))?;
        let y = y.coords().unwrap();
        Ok(Point::new(y[0], y[1]))
    };
    let mut normals = Vec::with_capacity(balls.len());
    for (index, ball) in balls.iter().enumerate() {
        let c = ball.center();
        let r = ball.radius;
        let tol = 1e-10 * l.max(r);
        if ((x0 - c).norm() - r).abs() > tol || ((q - c).norm() - r).abs() > tol {
            return Err(MobiusError::NotThroughPole { index });
        }
        // A third point on the circle fixes the image line; the center fixes
        // the side.
        let off = if c.norm() > 1e-12 * l {
            c.normalize()
        } else {
            Point::new(0.0, 1.0)
        };
        let on_line = to_plane(&(c + r * off))?;
        let inside = to_plane(&c)?;
        let d = on_line.normalize();
        let mut nu = Point::new(-d.y, d.x);
        if nu.dot(&inside) < 0.0 {
            nu = -nu;
        }
        normals.push(nu);
    }
    wedge_from_normals(&Point::zeros(), &normals)
        .ok_or_else(|| MobiusError::InvalidParameter("image is not a proper cone".into()))
}

/// Maps graph samples `(x, f(x))` over the plane through `T_L`, returning
/// the image samples `(y, f~(y))`.
pub fn transport_graph(samples: &[(Point, f64)], l: f64) -> Result<Vec<(Point, f64)>> {
    samples
        .iter()
        .map(|(x, f)| {
            let y = apply_t(l, &AmbientPoint::new(&[x.x, x.y, *f]))?;
            let y = y.coords().unwrap();
            Ok((Point::new(y[0], y[1]), y[2]))
        })
        .collect()
}
