//! Finite-difference solver for the singular Dirichlet problem
//! `(delta_ij - f_i f_j / (1 + |grad f|^2)) f_ij + n / f = 0` in `Omega`,
//! `f = 0` on the boundary, for convex planar domains (`n = 2`).
//!
//! The unknown is `w = f^2`, which is Lipschitz up to the boundary where `f`
//! has an infinite gradient. Multiplying the operator by `2 f S` with
//! `P = |grad w|^2` and `S = 4w + P` gives the polynomial form
//!
//! `G(w) = S lap(w) - w_i w_j w_ij - 2P + 2nS`, with `Q(f) = G / (2 f S)`.
//!
//! Boundary data `f = eps` are imposed on the exact boundary through
//! cut-cell three-point stencils along the two axes and two diagonals.
//! Solutions for a halving sequence of `eps` are computed by damped Newton
//! and extrapolated to `eps = 0` in `eps^2`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Domain, DomainSpec, GeometryError, Point};
use crate::sparse::{bicgstab, Csr, Ilu0, Jacobi, KrylovStats, Preconditioner};

/// Dimension `n` of the base space handled by the grid solver.
pub const DIMENSION: usize = 2;
/// Nodes closer than this fraction of the spacing to the boundary are
/// treated as boundary points.
const ACTIVE_FRACTION: f64 = 1e-3;
const MAX_NEWTON: usize = 100;
/// Newton budget of an attempt that can still be retried with an easier
/// boundary value; such attempts also stop at the first linear solve that
/// fails to converge.
const RETRY_NEWTON: usize = 30;
const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1.0 / (1u64 << 20) as f64;
const KRYLOV_RTOL: f64 = 1e-10;
const KRYLOV_MAX_ITER: usize = 2000;
/// Tolerance used on continuation levels that do not enter the
/// extrapolation.
/// Radius, in grid spacings, of the neighbourhood of each corner where the
/// equation is discretized in `f^2` whatever the chosen exponent.
const CORNER_CELLS: f64 = 2.0;
const COARSE_LEVEL_TOL: f64 = 1e-6;
/// Largest starting boundary value, relative to `0.05 diam`.
const MAX_START_FACTOR: f64 = 8.0;
/// Times a failed continuation step may be halved in `log eps`.
const MAX_SPLITS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("non-positive value {value} at node ({i}, {j})")]
    NonPositiveValue { i: usize, j: usize, value: f64 },
    #[error("Newton line search failed at eps = {epsilon} after {iterations} iterations (residual {residual})")]
    NewtonStalled {
        epsilon: f64,
        iterations: usize,
        residual: f64,
    },
    #[error("Newton did not converge at eps = {epsilon} (residual {residual})")]
    NewtonDiverged { epsilon: f64, residual: f64 },
    #[error("point ({0}, {1}) is outside the domain")]
    OutOfDomain(f64, f64),
    #[error("point ({0}, {1}) is closer than one grid spacing to the boundary")]
    TooCloseToBoundary(f64, f64),
    #[error("inner domain is not contained in the outer one near ({0}, {1})")]
    NotNested(f64, f64),
}

pub type Result<T> = std::result::Result<T, SolverError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Outside,
    /// Unknown whose whole stencil consists of unknowns.
    Inside,
    /// Unknown with at least one stencil arm cut by the boundary.
    BoundaryAdjacent,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    /// Boundary offsets `eps` in the order they were solved.
    pub epsilons: Vec<f64>,
    pub newton_iterations: Vec<usize>,
    /// Max `|G / E|` at the end of each level.
    pub level_residuals: Vec<f64>,
    pub krylov_iterations: usize,
    pub tol: f64,
    /// Whether the values are the `eps -> 0` extrapolation.
    pub extrapolated: bool,
    /// Max `|Q(f)|` of the stored values over unknowns at distance
    /// `>= 2h` from the boundary.
    pub interior_residual: f64,
    /// Max change of `f` made by the extrapolation over the finest level;
    /// used as the value tolerance of the field.
    pub extrapolation_change: f64,
}

/// Node values of `f` on a uniform lattice covering the domain.
#[derive(Clone, Debug)]
pub struct GridField {
    pub origin: Point,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    pub mask: Vec<NodeKind>,
    /// `f` at every node; zero outside.
    pub values: Vec<f64>,
    /// Value of `f` imposed on the boundary.
    pub boundary_value: f64,
    /// The solver works with `u = f^exponent`; interpolation acts on `u`.
    pub exponent: f64,
    pub meta: SolverMeta,
    domain: Arc<Domain>,
    distance: Vec<f64>,
}

/// One side of a three-point stencil: an unknown or the boundary.
#[derive(Clone, Copy, Debug)]
struct Arm {
    unknown: Option<usize>,
    dist: f64,
}

/// Stencil of one unknown: `[minus, plus]` arms along x, y, (1,1), (1,-1).
#[derive(Clone, Copy, Debug)]
struct Stencil {
    node: usize,
    arms: [[Arm; 2]; 4],
}

const STEPS: [(i64, i64); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];

/// Three-point weights `(minus, centre, plus)` of the first and second
/// derivatives for arm lengths `a` (minus) and `b` (plus).
fn weights(a: f64, b: f64) -> ([f64; 3], [f64; 3]) {
    let d1 = [-b / (a * (a + b)), (b - a) / (a * b), a / (b * (a + b))];
    let d2 = [2.0 / (a * (a + b)), -2.0 / (a * b), 2.0 / (b * (a + b))];
    (d1, d2)
}

/// `G` for the unknown `u = f^p`, the weight `E` with `Q = G / (p u^(1 - 1/p) E)`,
/// and the partial derivatives of `G` with respect to
/// `(u, ux, uy, uxx, uyy, uxy)`. With `m = 1 - 2/p` and `P = |grad u|^2`,
/// `E = p^2 u^(1+m) + P` and
/// `G = E lap(u) - u_i u_j u_ij + (p - p^2) u^m P + n p E u^m`.
fn operator_g(p: f64, v: [f64; 6]) -> (f64, f64, [f64; 6]) {
    let [u, ux, uy, uxx, uyy, uxy] = v;
    let n = DIMENSION as f64;
    let m = 1.0 - 2.0 / p;
    let c = p - p * p;
    let um = u.powf(m);
    let pp = ux * ux + uy * uy;
    let e = p * p * u * um + pp;
    let lap = uxx + uyy;
    let hess = ux * ux * uxx + 2.0 * ux * uy * uxy + uy * uy * uyy;
    let g = e * lap - hess + c * um * pp + n * p * e * um;
    let de_du = p * p * (1.0 + m) * um;
    let dg_du = if m == 0.0 {
        de_du * lap + n * p * de_du
    } else {
        let dum = m * um / u;
        de_du * lap + c * dum * pp + n * p * (de_du * um + e * dum)
    };
    let first = |a: f64, b: f64, ab: f64, aa: f64| {
        2.0 * a * lap - (2.0 * a * aa + 2.0 * b * ab) + 2.0 * c * um * a + 2.0 * n * p * um * a
    };
    let dg_dux = first(ux, uy, uxy, uxx);
    let dg_duy = first(uy, ux, uxy, uyy);
    (g, e, [dg_du, dg_dux, dg_duy, e - ux * ux, e - uy * uy, -2.0 * ux * uy])
}

fn build_stencils(
    domain: &Domain,
    origin: Point,
    h: f64,
    (nx, ny): (usize, usize),
    unknown_of: &[Option<usize>],
    nodes: &[usize],
) -> Vec<Stencil> {
    nodes
        .par_iter()
        .map(|&k| {
            let (i, j) = ((k % nx) as i64, (k / nx) as i64);
            let p = origin + Point::new(i as f64 * h, j as f64 * h);
            let arm = |di: i64, dj: i64| {
                let len = h * ((di * di + dj * dj) as f64).sqrt();
                let (ii, jj) = (i + di, j + dj);
                let inside_grid = ii >= 0 && jj >= 0 && (ii as usize) < nx && (jj as usize) < ny;
                let nb = inside_grid.then(|| jj as usize * nx + ii as usize);
                if let Some(u) = nb.and_then(|m| unknown_of[m]) {
                    return Arm {
                        unknown: Some(u),
                        dist: len,
                    };
                }
                // Either the segment leaves the domain or the neighbour lies
                // within the inactive layer next to the boundary.
                let q = p + Point::new(di as f64 * h, dj as f64 * h);
                let t = domain.segment_exit(&p, &q).unwrap_or(1.0);
                Arm {
                    unknown: None,
                    dist: (t * len).max(ACTIVE_FRACTION * h),
                }
            };
            Stencil {
                node: k,
                arms: STEPS.map(|(di, dj)| [arm(-di, -dj), arm(di, dj)]),
            }
        })
        .collect()
}

/// Lattice, unknown numbering and stencils for one domain and resolution.
struct Grid {
    exponent: f64,
    /// Exponent in which each unknown's equation is discretized: `exponent`
    /// away from corners, 2 within `CORNER_CELLS` spacings of one.
    local_exponent: Vec<f64>,
    origin: Point,
    h: f64,
    nx: usize,
    ny: usize,
    distance: Vec<f64>,
    unknown_of: Vec<Option<usize>>,
    stencils: Vec<Stencil>,
}

impl Grid {
    fn new(domain: &Domain, resolution: usize, exponent: f64, frame: Option<[[f64; 2]; 2]>) -> Result<Self> {
        if !(2.0..=4.0).contains(&exponent) {
            return Err(SolverError::InvalidParameter(format!(
                "exponent {exponent} outside [2, 4]"
            )));
        }
        if resolution < 8 {
            return Err(SolverError::InvalidParameter(format!(
                "resolution {resolution} is below 8"
            )));
        }
        let (mut lo, mut hi) = domain.bounding_box();
        if let Some([a, b]) = frame {
            let (a, b) = (Point::new(a[0], a[1]), Point::new(b[0], b[1]));
            if !(a.x <= lo.x && a.y <= lo.y && b.x >= hi.x && b.y >= hi.y) {
                return Err(SolverError::InvalidParameter(format!(
                    "frame {a:?}..{b:?} does not contain the domain"
                )));
            }
            (lo, hi) = (a, b);
        }
        let ext = hi - lo;
        let h = ext.x.max(ext.y) / (resolution - 1) as f64;
        let nx = (ext.x / h - 1e-9).ceil() as usize + 1;
        let ny = (ext.y / h - 1e-9).ceil() as usize + 1;
        Ok(Self::on_lattice(domain, lo, h, (nx, ny), exponent))
    }

    fn on_lattice(domain: &Domain, lo: Point, h: f64, (nx, ny): (usize, usize), exponent: f64) -> Self {
        let point = |k: usize| lo + Point::new((k % nx) as f64 * h, (k / nx) as f64 * h);
        let distance: Vec<f64> = (0..nx * ny)
            .into_par_iter()
            .map(|k| domain.signed_distance(&point(k)))
            .collect();
        let mut unknown_of = vec![None; nx * ny];
        let mut nodes = Vec::new();
        for k in 0..nx * ny {
            if distance[k] > ACTIVE_FRACTION * h {
                unknown_of[k] = Some(nodes.len());
                nodes.push(k);
            }
        }
        let stencils = build_stencils(domain, lo, h, (nx, ny), &unknown_of, &nodes);
        let local_exponent = local_exponents(domain, &nodes, point, h, exponent);
        Self {
            exponent,
            local_exponent,
            origin: lo,
            h,
            nx,
            ny,
            distance,
            unknown_of,
            stencils,
        }
    }

    fn point(&self, k: usize) -> Point {
        self.origin + Point::new((k % self.nx) as f64 * self.h, (k / self.nx) as f64 * self.h)
    }

    /// Discrete `(v, vx, vy, vxx, vyy, vxy)` at one unknown for the local
    /// variable `v = u^(q/p)`, plus per-arm derivative weights and `dv/du`
    /// at the arm ends and the centre.
    fn jet(&self, k: usize, u: &[f64], bv: f64) -> Jet {
        let st = &self.stencils[k];
        let r = self.local_exponent[k] / self.exponent;
        let local = |x: f64| {
            if r == 1.0 {
                (x, 1.0)
            } else {
                (x.powf(r), r * x.powf(r - 1.0))
            }
        };
        let (vb, _) = local(bv);
        let (vk, dk) = local(u[k]);
        let mut d1 = [0.0; 4];
        let mut d2 = [0.0; 4];
        let mut wts = [([0.0; 3], [0.0; 3]); 4];
        let mut chain = [[0.0; 2]; 4];
        for (dir, arms) in st.arms.iter().enumerate() {
            let mut vals = [vb; 2];
            for side in 0..2 {
                if let Some(j) = arms[side].unknown {
                    (vals[side], chain[dir][side]) = local(u[j]);
                }
            }
            let (c1, c2) = weights(arms[0].dist, arms[1].dist);
            d1[dir] = c1[0] * vals[0] + c1[1] * vk + c1[2] * vals[1];
            d2[dir] = c2[0] * vals[0] + c2[1] * vk + c2[2] * vals[1];
            wts[dir] = (c1, c2);
        }
        let vxy = 0.5 * (d2[2] - d2[3]);
        Jet {
            values: [vk, d1[0], d1[1], d2[0], d2[1], vxy],
            weights: wts,
            chain,
            centre_chain: dk,
        }
    }

    /// `G` and `E` of the local variable at every unknown.
    fn residual(&self, u: &[f64], bv: f64) -> Vec<(f64, f64)> {
        (0..self.stencils.len())
            .into_par_iter()
            .map(|k| {
                let jet = self.jet(k, u, bv);
                let (g, e, _) = operator_g(self.local_exponent[k], jet.values);
                (g, e)
            })
            .collect()
    }

    /// Normalized residual `Q` at unknown `k` from its `(G, E)`.
    fn curvature(&self, k: usize, u: f64, (g, e): (f64, f64)) -> f64 {
        let q = self.local_exponent[k];
        let v = u.powf(q / self.exponent);
        g / (q * v.powf(1.0 - 1.0 / q) * e)
    }

    fn jacobian(&self, u: &[f64], bv: f64) -> Csr {
        let rows: Vec<Vec<(usize, f64)>> = (0..self.stencils.len())
            .into_par_iter()
            .map(|k| {
                let st = &self.stencils[k];
                let jet = self.jet(k, u, bv);
                let (_, _, dg) = operator_g(self.local_exponent[k], jet.values);
                // Sensitivities to the first and second derivative along
                // each stencil direction.
                let first = [dg[1], dg[2], 0.0, 0.0];
                let second = [dg[3], dg[4], 0.5 * dg[5], -0.5 * dg[5]];
                let mut row = Vec::with_capacity(9);
                let mut centre = dg[0];
                for dir in 0..4 {
                    let (c1, c2) = jet.weights[dir];
                    centre += first[dir] * c1[1] + second[dir] * c2[1];
                    for side in 0..2 {
                        if let Some(v) = st.arms[dir][side].unknown {
                            let c = 2 * side;
                            let dv = first[dir] * c1[c] + second[dir] * c2[c];
                            row.push((v, dv * jet.chain[dir][side]));
                        }
                    }
                }
                row.push((k, centre * jet.centre_chain));
                row
            })
            .collect();
        Csr::from_rows(rows)
    }
}

fn local_exponents(
    domain: &Domain,
    nodes: &[usize],
    point: impl Fn(usize) -> Point,
    h: f64,
    exponent: f64,
) -> Vec<f64> {
    let corners = domain.corner_points();
    nodes
        .iter()
        .map(|&k| {
            let x = point(k);
            if corners.iter().any(|c| (x - c).norm() < CORNER_CELLS * h) {
                2.0
            } else {
                exponent
            }
        })
        .collect()
}

struct Jet {
    values: [f64; 6],
    weights: [([f64; 3], [f64; 3]); 4],
    chain: [[f64; 2]; 4],
    centre_chain: f64,
}

fn max_normalized(res: &[(f64, f64)]) -> f64 {
    res.iter().map(|(g, s)| (g / s).abs()).fold(0.0, f64::max)
}

/// Merit function of the line search: the 2-norm of `G / scale`.
fn l2(res: &[(f64, f64)], scale: &[f64]) -> f64 {
    res.iter()
        .zip(scale)
        .map(|((g, _), s)| (g / s).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug)]
struct NewtonOutcome {
    iterations: usize,
    residual: f64,
    krylov_iterations: usize,
}

fn solve_linear(a: &Csr, b: &[f64], x: &mut [f64]) -> KrylovStats {
    let run = |m: &dyn Preconditioner, x: &mut [f64]| {
        struct Dyn<'a>(&'a dyn Preconditioner);
        impl Preconditioner for Dyn<'_> {
            fn apply(&self, r: &[f64], z: &mut [f64]) {
                self.0.apply(r, z)
            }
        }
        bicgstab(a, b, x, &Dyn(m), KRYLOV_RTOL, KRYLOV_MAX_ITER)
    };
    if let Some(ilu) = Ilu0::new(a) {
        let stats = run(&ilu, x);
        if stats.converged {
            return stats;
        }
    }
    x.iter_mut().for_each(|v| *v = 0.0);
    match Jacobi::new(a) {
        Some(jac) => run(&jac, x),
        None => KrylovStats {
            iterations: 0,
            relative_residual: f64::INFINITY,
            converged: false,
        },
    }
}

/// Damped Newton on `G(u) = 0` with boundary value `bv = eps^p`, in place.
fn newton(
    grid: &Grid,
    u: &mut [f64],
    bv: f64,
    floor: f64,
    tol: f64,
    epsilon: f64,
    retryable: bool,
) -> Result<NewtonOutcome> {
    let max_iter = if retryable { RETRY_NEWTON } else { MAX_NEWTON };
    // The discrete solution exceeds the boundary value at every node, so
    // iterates are projected onto `u >= bv`.
    let lower = floor.max(bv);
    let mut res = grid.residual(u, bv);
    let mut krylov = 0;
    for it in 0..max_iter {
        let rmax = max_normalized(&res);
        if rmax <= tol {
            return Ok(NewtonOutcome {
                iterations: it,
                residual: rmax,
                krylov_iterations: krylov,
            });
        }
        // Rows scaled by 1 / E: near corners E is many orders of magnitude
        // below its interior size, which ruins the conditioning otherwise.
        let mut jac = grid.jacobian(u, bv);
        for (i, (_, e)) in res.iter().enumerate() {
            for v in &mut jac.val[jac.row_ptr[i]..jac.row_ptr[i + 1]] {
                *v /= e;
            }
        }
        let rhs: Vec<f64> = res.iter().map(|(g, e)| -g / e).collect();
        let mut delta = vec![0.0; u.len()];
        let stats = solve_linear(&jac, &rhs, &mut delta);
        krylov += stats.iterations;
        if retryable && !stats.converged {
            return Err(SolverError::NewtonStalled {
                epsilon,
                iterations: it,
                residual: rmax,
            });
        }
        // Row scales frozen at the current iterate, so that the step is a
        // Newton step for the merit function.
        let scale: Vec<f64> = res.iter().map(|(_, e)| *e).collect();
        let r0 = l2(&res, &scale);
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| (a + step * d).max(lower)).collect();
            let trial_res = grid.residual(&trial, bv);
            let r1 = l2(&trial_res, &scale);
            if r1.is_finite() && r1 <= (1.0 - ARMIJO * step) * r0 {
                u.copy_from_slice(&trial);
                res = trial_res;
                break;
            }
            step *= 0.5;
            if step < MIN_STEP {
                return Err(SolverError::NewtonStalled {
                    epsilon,
                    iterations: it,
                    residual: rmax,
                });
            }
        }
    }
    let rmax = max_normalized(&res);
    if rmax <= tol {
        Ok(NewtonOutcome {
            iterations: max_iter,
            residual: rmax,
            krylov_iterations: krylov,
        })
    } else {
        Err(SolverError::NewtonDiverged {
            epsilon,
            residual: rmax,
        })
    }
}

impl GridField {
    /// Samples `f` on the solver lattice of `domain` at the given
    /// resolution; nodes outside (or within `1e-3 h` of the boundary) get 0.
    pub fn from_fn<F: Fn(&Point) -> f64 + Sync>(
        domain: Domain,
        resolution: usize,
        boundary_value: f64,
        f: F,
    ) -> Result<Self> {
        let grid = Grid::new(&domain, resolution, 2.0, None)?;
        Ok(Self::from_grid(&grid, Arc::new(domain), boundary_value, |k| {
            f(&grid.point(k))
        }))
    }

    /// Rebuilds a field from stored node values (`f` at every node of the
    /// `nx x ny` lattice at `origin` with spacing `h`, row by row in `y`).
    /// The mask is recomputed from the domain; unknown nodes must carry
    /// positive values.
    #[allow(clippy::too_many_arguments)]
    pub fn from_lattice(
        spec: DomainSpec,
        origin: Point,
        spacing: f64,
        (nx, ny): (usize, usize),
        values: Vec<f64>,
        boundary_value: f64,
        exponent: f64,
        meta: SolverMeta,
    ) -> Result<Self> {
        if !(spacing > 0.0) || nx < 2 || ny < 2 || values.len() != nx * ny {
            return Err(SolverError::InvalidParameter(format!(
                "lattice {nx} x {ny} with spacing {spacing} and {} values",
                values.len()
            )));
        }
        if !(2.0..=4.0).contains(&exponent) {
            return Err(SolverError::InvalidParameter(format!(
                "exponent {exponent} outside [2, 4]"
            )));
        }
        let domain = Domain::new(spec)?;
        let grid = Grid::on_lattice(&domain, origin, spacing, (nx, ny), exponent);
        for st in &grid.stencils {
            if !(values[st.node] > 0.0) {
                return Err(SolverError::NonPositiveValue {
                    i: st.node % nx,
                    j: st.node / nx,
                    value: values[st.node],
                });
            }
        }
        let mut field = Self::from_grid(&grid, Arc::new(domain), boundary_value, |k| values[k]);
        field.meta = meta;
        Ok(field)
    }

    fn from_grid<F: Fn(usize) -> f64>(grid: &Grid, domain: Arc<Domain>, bv: f64, f: F) -> Self {
        let mut mask = vec![NodeKind::Outside; grid.nx * grid.ny];
        let mut values = vec![0.0; grid.nx * grid.ny];
        for st in &grid.stencils {
            let cut = st.arms.iter().flatten().any(|a| a.unknown.is_none());
            mask[st.node] = if cut {
                NodeKind::BoundaryAdjacent
            } else {
                NodeKind::Inside
            };
            values[st.node] = f(st.node);
        }
        Self {
            origin: grid.origin,
            spacing: grid.h,
            nx: grid.nx,
            ny: grid.ny,
            mask,
            values,
            boundary_value: bv,
            exponent: grid.exponent,
            meta: SolverMeta::default(),
            domain,
            distance: grid.distance.clone(),
        }
    }

    fn grid(&self) -> Grid {
        // Rebuilding from the stored distances keeps fields cheap to clone.
        let h = self.spacing;
        let mut unknown_of = vec![None; self.nx * self.ny];
        let mut nodes = Vec::new();
        for (k, slot) in unknown_of.iter_mut().enumerate() {
            if self.mask[k] != NodeKind::Outside {
                *slot = Some(nodes.len());
                nodes.push(k);
            }
        }
        let stencils = build_stencils(&self.domain, self.origin, h, (self.nx, self.ny), &unknown_of, &nodes);
        let local_exponent = local_exponents(
            &self.domain,
            &nodes,
            |k| self.node_point(k % self.nx, k / self.nx),
            h,
            self.exponent,
        );
        Grid {
            exponent: self.exponent,
            local_exponent,
            origin: self.origin,
            h,
            nx: self.nx,
            ny: self.ny,
            distance: self.distance.clone(),
            unknown_of,
            stencils,
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn domain_spec(&self) -> &DomainSpec {
        self.domain.spec()
    }

    pub fn node_point(&self, i: usize, j: usize) -> Point {
        self.origin + Point::new(i as f64 * self.spacing, j as f64 * self.spacing)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Signed distance of node `k` to the boundary.
    pub fn node_distance(&self, k: usize) -> f64 {
        self.distance[k]
    }

    pub fn is_unknown(&self, k: usize) -> bool {
        self.mask[k] != NodeKind::Outside
    }

    /// `(x, f(x))` at every unknown node.
    pub fn samples(&self) -> Vec<(Point, f64)> {
        (0..self.values.len())
            .filter(|&k| self.is_unknown(k))
            .map(|k| (self.node_point(k % self.nx, k / self.nx), self.values[k]))
            .collect()
    }

    pub fn unknown_count(&self) -> usize {
        self.mask.iter().filter(|m| **m != NodeKind::Outside).count()
    }

    /// `u = f^exponent` at the unknowns of `grid`.
    fn u_values(&self, grid: &Grid) -> Vec<f64> {
        grid.stencils
            .iter()
            .map(|st| self.values[st.node].powf(self.exponent))
            .collect()
    }
}

/// `Q(f)` at every node (NaN at nodes that are not unknowns), using the
/// cut-cell stencils with the field's boundary value.
pub fn assemble_residual(field: &GridField) -> Result<Vec<f64>> {
    let grid = field.grid();
    for st in &grid.stencils {
        let v = field.values[st.node];
        if !(v > 0.0) {
            return Err(SolverError::NonPositiveValue {
                i: st.node % field.nx,
                j: st.node / field.nx,
                value: v,
            });
        }
    }
    let p = field.exponent;
    let u = field.u_values(&grid);
    let res = grid.residual(&u, field.boundary_value.powf(p));
    let mut out = vec![f64::NAN; field.nx * field.ny];
    for (k, r) in res.into_iter().enumerate() {
        out[grid.stencils[k].node] = grid.curvature(k, u[k], r);
    }
    Ok(out)
}

fn interior_residual(field: &GridField) -> Result<f64> {
    let q = assemble_residual(field)?;
    Ok(q.iter()
        .enumerate()
        .filter(|(k, v)| !v.is_nan() && field.distance[*k] >= 2.0 * field.spacing)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max))
}

/// Solves with boundary value `f = epsilon` starting from `init`.
pub fn newton_solve(init: &GridField, epsilon: f64, tol: f64) -> Result<GridField> {
    if !(epsilon > 0.0) || !(tol > 0.0) {
        return Err(SolverError::InvalidParameter(format!(
            "epsilon = {epsilon}, tol = {tol}"
        )));
    }
    let grid = init.grid();
    let p = grid.exponent;
    let mut u = init.u_values(&grid);
    if let Some((i, v)) = u.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        let k = grid.stencils[i].node;
        return Err(SolverError::NonPositiveValue {
            i: k % grid.nx,
            j: k / grid.nx,
            value: *v,
        });
    }
    let floor = (1e-8 * init.domain.diameter()).powf(p);
    // Shift toward the new boundary data before iterating.
    let shift = epsilon.powf(p) - init.boundary_value.powf(p);
    u.iter_mut().for_each(|v| *v = (*v + shift).max(floor));
    let out = newton(&grid, &mut u, epsilon.powf(p), floor, tol, epsilon, false)?;
    let mut field = GridField::from_grid(&grid, init.domain.clone(), epsilon, |k| {
        u[grid.unknown_of[k].unwrap()].powf(1.0 / p)
    });
    field.meta = SolverMeta {
        epsilons: vec![epsilon],
        newton_iterations: vec![out.iterations],
        level_residuals: vec![out.residual],
        krylov_iterations: out.krylov_iterations,
        tol,
        extrapolated: false,
        ..Default::default()
    };
    field.meta.interior_residual = interior_residual(&field)?;
    Ok(field)
}

/// Continuation schedule `eps0, eps0/2, ...` down to `h^2`, with
/// `eps0 = 0.05 diam`.
pub fn epsilon_schedule(diameter: f64, spacing: f64) -> Vec<f64> {
    let eps_min = spacing * spacing;
    let mut eps = vec![0.05 * diameter];
    while eps.last().unwrap() / 2.0 >= eps_min {
        let next = eps.last().unwrap() / 2.0;
        eps.push(next);
    }
    if eps.len() == 1 {
        eps.push(eps[0] / 2.0);
    }
    eps
}

/// Initial `u`: `w^(p/2)` where `w` solves `lap(w) = -2n` with `w = eps^2`
/// on the boundary; for disks and `p = 2` this is the exact solution.
fn initial_u(grid: &Grid, eps: f64) -> Vec<f64> {
    let bv = eps * eps;
    let mut rhs = vec![-2.0 * DIMENSION as f64; grid.stencils.len()];
    let rows: Vec<Vec<(usize, f64)>> = grid
        .stencils
        .iter()
        .enumerate()
        .map(|(u, st)| {
            let mut row = Vec::with_capacity(5);
            let mut centre = 0.0;
            for [m, p] in &st.arms[..2] {
                let (_, c2) = weights(m.dist, p.dist);
                centre += c2[1];
                for (arm, c) in [(m, c2[0]), (p, c2[2])] {
                    match arm.unknown {
                        Some(v) => row.push((v, c)),
                        None => rhs[u] -= c * bv,
                    }
                }
            }
            row.push((u, centre));
            row
        })
        .collect();
    let a = Csr::from_rows(rows);
    let mut w = vec![bv; a.n];
    solve_linear(&a, &rhs, &mut w);
    w.iter().map(|v| v.max(bv).powf(0.5 * grid.exponent)).collect()
}

/// Moves the solution at `from` to boundary value `to`: shifts `u` by
/// `to^p - from^p` and runs Newton. On failure the step is split at the
/// geometric mean, up to `MAX_SPLITS` times.
#[allow(clippy::too_many_arguments)]
fn descend(
    grid: &Grid,
    u: &mut Vec<f64>,
    from: f64,
    to: f64,
    floor: f64,
    tol: f64,
    depth: usize,
    record: &mut impl FnMut(f64, NewtonOutcome),
) -> Result<()> {
    let p = grid.exponent;
    let saved = u.clone();
    let shift = from.powf(p) - to.powf(p);
    u.iter_mut().for_each(|v| *v = (*v - shift).max(floor));
    match newton(grid, u, to.powf(p), floor, tol, to, depth < MAX_SPLITS) {
        Ok(out) => {
            record(to, out);
            Ok(())
        }
        Err(err) if depth >= MAX_SPLITS => Err(err),
        Err(_) => {
            *u = saved;
            let mid = (from * to).sqrt();
            descend(grid, u, from, mid, floor, tol.max(COARSE_LEVEL_TOL), depth + 1, record)?;
            descend(grid, u, mid, to, floor, tol, depth + 1, record)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// Nodes across the longer side of the bounding box.
    pub resolution: usize,
    /// Newton tolerance on the normalized residual `max |G / E|`.
    pub tol: f64,
    /// Power `p` of the unknown `u = f^p`: 2 makes `u` Lipschitz at curved
    /// boundary arcs, 3 makes it linear at straight edges and near corners.
    pub exponent: f64,
    /// Lattice box `[lower-left, upper-right]` replacing the bounding box of
    /// the domain, which it must contain. Domains solved with the same frame
    /// and resolution share their nodes.
    pub frame: Option<[[f64; 2]; 2]>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            resolution: 256,
            tol: 1e-9,
            exponent: 2.0,
            frame: None,
        }
    }
}

/// Solves the zero-boundary problem with `u = f^2`.
pub fn solve_domain(spec: &DomainSpec, resolution: usize, tol: f64) -> Result<GridField> {
    solve_domain_with(
        spec,
        &SolveOptions {
            resolution,
            tol,
            ..Default::default()
        },
    )
}

/// Continuation over the [`epsilon_schedule`] and Richardson extrapolation
/// of the last two levels, assuming `u_eps = u_0 + c eps^2 + o(eps^2)`.
pub fn solve_domain_with(spec: &DomainSpec, opts: &SolveOptions) -> Result<GridField> {
    let tol = opts.tol;
    if !(tol > 0.0) {
        return Err(SolverError::InvalidParameter(format!("tol = {tol}")));
    }
    let domain = Arc::new(Domain::new(spec.clone())?);
    let grid = Grid::new(&domain, opts.resolution, opts.exponent, opts.frame)?;
    let p = grid.exponent;
    let schedule = epsilon_schedule(domain.diameter(), grid.h);
    let floor = (1e-8 * domain.diameter()).powf(p);
    let mut meta = SolverMeta {
        tol,
        ..Default::default()
    };
    let mut record = |eps: f64, out: NewtonOutcome| {
        meta.epsilons.push(eps);
        meta.newton_iterations.push(out.iterations);
        meta.level_residuals.push(out.residual);
        meta.krylov_iterations += out.krylov_iterations;
    };
    // Starting level: the Poisson guess is poor next to nearly straight
    // edges at small eps, so eps0 is doubled until Newton converges there.
    let mut start = schedule[0];
    let mut u = loop {
        let mut u = initial_u(&grid, start);
        let last_try = start >= MAX_START_FACTOR * schedule[0];
        match newton(
            &grid,
            &mut u,
            start.powf(p),
            floor,
            COARSE_LEVEL_TOL.max(tol),
            start,
            !last_try,
        ) {
            Ok(out) => {
                record(start, out);
                break u;
            }
            Err(err) if last_try => return Err(err),
            Err(_) => start *= 2.0,
        }
    };
    let mut targets: Vec<f64> = Vec::new();
    let mut eps = start;
    while eps > schedule[0] * 1.5 {
        eps /= 2.0;
        targets.push(eps);
    }
    targets.extend_from_slice(&schedule[1..]);
    let mut current = schedule[0].max(start);
    let mut previous: Option<Vec<f64>> = None;
    for (level, &eps) in targets.iter().enumerate() {
        let last = level + 1 == targets.len();
        let level_tol = if level + 2 >= targets.len() {
            tol
        } else {
            tol.max(COARSE_LEVEL_TOL)
        };
        if last {
            previous = Some(u.clone());
        }
        descend(&grid, &mut u, current, eps, floor, level_tol, 0, &mut record)?;
        current = eps;
    }
    let coarse = previous.unwrap();
    let extrapolated: Vec<f64> = u
        .iter()
        .zip(&coarse)
        .map(|(fine, coarse)| ((4.0 * fine - coarse) / 3.0).max(floor))
        .collect();
    let mut field = GridField::from_grid(&grid, domain, 0.0, |k| {
        extrapolated[grid.unknown_of[k].unwrap()].powf(1.0 / p)
    });
    meta.extrapolated = true;
    meta.extrapolation_change = u
        .iter()
        .zip(&extrapolated)
        .map(|(a, b)| (a.powf(1.0 / p) - b.powf(1.0 / p)).abs())
        .fold(0.0, f64::max);
    field.meta = meta;
    field.meta.interior_residual = interior_residual(&field)?;
    Ok(field)
}

/// Bilinear interpolation of `u = f^p` followed by the inverse power. Cell
/// corners that are not unknowns are replaced by the linear extrapolation
/// through their neighbour in the cell and the boundary crossing between
/// them.
pub fn evaluate(field: &GridField, p: &Point) -> Result<f64> {
    let dom = &field.domain;
    let d = dom.signed_distance(p);
    if d <= 0.0 {
        return Err(SolverError::OutOfDomain(p.x, p.y));
    }
    let h = field.spacing;
    if d < h * (1.0 - 1e-12) {
        return Err(SolverError::TooCloseToBoundary(p.x, p.y));
    }
    let rel = (p - field.origin) / h;
    let (ri, rj) = (rel.x.round(), rel.y.round());
    if (rel.x - ri).abs() < 1e-9 && (rel.y - rj).abs() < 1e-9 {
        let k = field.index(ri as usize, rj as usize);
        if field.is_unknown(k) {
            return Ok(field.values[k]);
        }
    }
    let i0 = (rel.x.floor().max(0.0) as usize).min(field.nx - 2);
    let j0 = (rel.y.floor().max(0.0) as usize).min(field.ny - 2);
    let tx = rel.x - i0 as f64;
    let ty = rel.y - j0 as f64;
    let corners = [(i0, j0), (i0 + 1, j0), (i0, j0 + 1), (i0 + 1, j0 + 1)];
    let pw = field.exponent;
    let bv = field.boundary_value.powf(pw);
    let mut w = [0.0; 4];
    for (c, &(i, j)) in corners.iter().enumerate() {
        let k = field.index(i, j);
        if field.is_unknown(k) {
            w[c] = field.values[k].powf(pw);
            continue;
        }
        // Neighbours of corner c within the cell: along x, then along y.
        let mut found = None;
        for &(ni, nj) in &[(i0 + i0 + 1 - i, j), (i, j0 + j0 + 1 - j)] {
            let nk = field.index(ni, nj);
            if field.is_unknown(nk) {
                let a = field.node_point(ni, nj);
                let b = field.node_point(i, j);
                let t = dom.segment_exit(&a, &b).unwrap_or(1.0).max(ACTIVE_FRACTION);
                let wa = field.values[nk].powf(pw);
                found = Some(wa + (bv - wa) / t);
                break;
            }
        }
        w[c] = found.ok_or(SolverError::TooCloseToBoundary(p.x, p.y))?;
    }
    let v = (1.0 - tx) * (1.0 - ty) * w[0] + tx * (1.0 - ty) * w[1] + (1.0 - tx) * ty * w[2] + tx * ty * w[3];
    Ok(v.max(0.0).powf(1.0 / pw))
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub passed: bool,
    /// Largest `f_inner - f_outer` seen.
    pub worst_excess: f64,
    pub worst_point: [f64; 2],
    pub points_checked: usize,
}

/// Checks `f_inner <= f_outer + tol` at inner unknowns whose distance to
/// the inner boundary is at least twice the coarser of the two spacings.
pub fn comparison_test(inner: &GridField, outer: &GridField, tol: f64) -> Result<ComparisonReport> {
    let scale = outer.domain.diameter();
    for q in inner.domain.boundary_samples(512) {
        if outer.domain.signed_distance(&q) < -1e-9 * scale {
            return Err(SolverError::NotNested(q.x, q.y));
        }
    }
    let margin = 2.0 * inner.spacing.max(outer.spacing);
    let mut report = ComparisonReport {
        passed: true,
        worst_excess: f64::NEG_INFINITY,
        worst_point: [0.0, 0.0],
        points_checked: 0,
    };
    for k in 0..inner.values.len() {
        if !inner.is_unknown(k) || inner.distance[k] < margin {
            continue;
        }
        let p = inner.node_point(k % inner.nx, k / inner.nx);
        let excess = inner.values[k] - evaluate(outer, &p)?;
        report.points_checked += 1;
        if excess > report.worst_excess {
            report.worst_excess = excess;
            report.worst_point = [p.x, p.y];
        }
    }
    report.passed = report.worst_excess <= tol;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcavityReport {
    pub passed: bool,
    /// Largest centred second difference of `f` over interior nodes and the
    /// directions x, y, (1,1), (1,-1).
    pub worst: f64,
    pub worst_point: [f64; 2],
}

pub fn check_concavity(field: &GridField, tol: f64) -> ConcavityReport {
    let mut report = ConcavityReport {
        passed: true,
        worst: f64::NEG_INFINITY,
        worst_point: [0.0, 0.0],
    };
    let h = field.spacing;
    for j in 1..field.ny.saturating_sub(1) {
        for i in 1..field.nx.saturating_sub(1) {
            let k = field.index(i, j);
            if !field.is_unknown(k) {
                continue;
            }
            for (di, dj) in STEPS {
                let a = field.index((i as i64 - di) as usize, (j as i64 - dj) as usize);
                let b = field.index((i as i64 + di) as usize, (j as i64 + dj) as usize);
                if !field.is_unknown(a) || !field.is_unknown(b) {
                    continue;
                }
                let len2 = h * h * (di * di + dj * dj) as f64;
                let d2 = (field.values[a] - 2.0 * field.values[k] + field.values[b]) / len2;
                if d2 > report.worst {
                    report.worst = d2;
                    let p = field.node_point(i, j);
                    report.worst_point = [p.x, p.y];
                }
            }
        }
    }
    report.passed = report.worst <= tol;
    report
}
