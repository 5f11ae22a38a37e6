//! Angular profile of the homogeneous solution `f = r h(theta)` on a planar
//! wedge of opening `mu * pi`, and the explicit supersolutions bounding it.
//!
//! The profile solves `L h = 0` with
//! `L h = h (1 + h^2) (h'' + h) + n (1 + h^2 + h'^2)` and vanishes at both
//! edges like `c theta^(1/(n+1))`. It is found by shooting from the midpoint,
//! where `h' = 0` by symmetry. Close to the edge, where `h'` blows up, the
//! integration switches to `t = ln h` as independent variable and
//! `u = ln(1/h')` as unknown, which keeps the system smooth down to
//! `h = H_CUT` and holds `1/h'` to full relative precision.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ConeSpec, Point};
use crate::ode::{Dopri5, OdeError, Step};

/// Height at which edge integration stops and the power model takes over.
pub const H_CUT: f64 = 1e-5;
/// Number of output samples on `(0, mu * pi)`.
pub const PROFILE_POINTS: usize = 4096;

const EDGE_SAMPLES: usize = 32;
const BISECTION_STEPS: usize = 60;
const MAX_A_DOUBLINGS: i32 = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no sign change of the shooting function on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("integrator failed near the edge: {0}")]
    StiffnessFailure(String),
    #[error("only {0} samples in the fit window (need 10)")]
    InsufficientRange(usize),
    #[error("point ({0}, {1}) is outside the cone")]
    OutsideCone(f64, f64),
    #[error("supersolution check failed at theta = {theta}: L = {value}")]
    CertificationFailed { theta: f64, value: f64 },
    #[error("no multiplier C <= 2^20 certifies the supersolution")]
    SearchExhausted,
}

impl From<OdeError> for ConeError {
    fn from(e: OdeError) -> Self {
        ConeError::StiffnessFailure(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ConeError>;

/// `h (1 + h^2) (h'' + h) + n (1 + h^2 + h'^2)`.
pub fn l_operator(h: f64, h1: f64, h2: f64, n: usize) -> f64 {
    let n = n as f64;
    h * (1.0 + h * h) * (h2 + h) + n * (1.0 + h * h + h1 * h1)
}

/// `h''` from `L h = 0`.
fn second_derivative(h: f64, h1: f64, n: f64) -> f64 {
    -h - n * (1.0 + h * h + h1 * h1) / (h * (1.0 + h * h))
}

/// `n` Chebyshev points of the first kind on `(a, b)`, clustered at both ends.
pub fn chebyshev_points(a: f64, b: f64, n: usize) -> Vec<f64> {
    let half = 0.5 * (b - a);
    (0..n)
        .map(|k| {
            let x = PI * (k as f64 + 0.5) / n as f64;
            // 1 - cos(x) = 2 sin^2(x/2) avoids cancellation near the left end.
            a + half * 2.0 * (0.5 * x).sin().powi(2)
        })
        .collect()
}

/// Constants of the supersolution `A phi + B psi` with
/// `phi = sin(theta/mu)^(1/(1+alpha))`, `psi = sin(theta/mu)^(1/(1+beta))`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct SupersolutionParams {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
}

fn power_jet(mu: f64, exponent: f64, theta: f64) -> (f64, f64, f64) {
    let s = (theta / mu).sin();
    let c = (theta / mu).cos();
    let p = exponent;
    let sp = s.powf(p);
    let d1 = p * s.powf(p - 1.0) * c / mu;
    let d2 = p * (p - 1.0) * s.powf(p - 2.0) * c * c / (mu * mu) - p * sp / (mu * mu);
    (sp, d1, d2)
}

impl SupersolutionParams {
    /// Value and first two derivatives at `theta`.
    pub fn jet(&self, mu: f64, theta: f64) -> (f64, f64, f64) {
        let (p0, p1, p2) = power_jet(mu, 1.0 / (1.0 + self.alpha), theta);
        if self.b == 0.0 {
            return (self.a * p0, self.a * p1, self.a * p2);
        }
        let (q0, q1, q2) = power_jet(mu, 1.0 / (1.0 + self.beta), theta);
        (
            self.a * p0 + self.b * q0,
            self.a * p1 + self.b * q1,
            self.a * p2 + self.b * q2,
        )
    }

    pub fn value(&self, mu: f64, theta: f64) -> f64 {
        self.jet(mu, theta).0
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SupersolutionCertificate {
    pub mu: f64,
    pub n: usize,
    pub params: SupersolutionParams,
    pub grid_size: usize,
    pub max_residual: f64,
    pub worst_theta: f64,
}

fn check_mu_n(mu: f64, n: usize) -> Result<()> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(ConeError::InvalidParameter(format!("mu = {mu} not in (0, 1)")));
    }
    if n < 2 {
        return Err(ConeError::InvalidParameter(format!("n = {n} < 2")));
    }
    Ok(())
}

/// Evaluates `L(A phi + B psi)` at `grid_size` Chebyshev points of
/// `(0, mu * pi)`; valid iff the maximum is `<= 0`.
pub fn certify_supersolution(
    mu: f64,
    n: usize,
    params: SupersolutionParams,
    grid_size: usize,
) -> Result<SupersolutionCertificate> {
    check_mu_n(mu, n)?;
    if grid_size < 1000 {
        return Err(ConeError::InvalidParameter("grid_size must be >= 1000".into()));
    }
    let (mut worst, mut worst_theta) = (f64::NEG_INFINITY, 0.0);
    for theta in chebyshev_points(0.0, mu * PI, grid_size) {
        let (v, v1, v2) = params.jet(mu, theta);
        let l = l_operator(v, v1, v2, n);
        if l > worst || l.is_nan() {
            worst = l;
            worst_theta = theta;
            if l.is_nan() {
                break;
            }
        }
    }
    if !(worst <= 0.0) {
        return Err(ConeError::CertificationFailed {
            theta: worst_theta,
            value: worst,
        });
    }
    Ok(SupersolutionCertificate {
        mu,
        n,
        params,
        grid_size,
        max_residual: worst,
        worst_theta,
    })
}

/// Certified supersolution constants. For `mu <= 1/(1+n)` the closed form
/// `A = sqrt((1+n) mu)`, `alpha = n`, `B = 0`; otherwise `alpha = n + 1`,
/// `beta = min((1/mu - 1)/2, 0.01)`, `B = C A`, and `(A, C)` are the
/// smallest powers of two (A first, then C in `[1, 2^20]`) that certify on
/// 10^4 and then 10^5 points. `A = 1` alone does not certify once `mu`
/// exceeds about 0.35.
pub fn supersolution_params(mu: f64, n: usize) -> Result<SupersolutionCertificate> {
    check_mu_n(mu, n)?;
    let nf = n as f64;
    let beta = ((1.0 / mu - 1.0) / 2.0).min(0.01);
    if mu <= 1.0 / (1.0 + nf) {
        let params = SupersolutionParams {
            a: ((1.0 + nf) * mu).sqrt(),
            b: 0.0,
            alpha: nf,
            beta,
        };
        return certify_supersolution(mu, n, params, 100_000);
    }
    for ka in 0..=MAX_A_DOUBLINGS {
        let a = f64::powi(2.0, ka);
        for kc in 0..=20 {
            let params = SupersolutionParams {
                a,
                b: a * f64::powi(2.0, kc),
                alpha: nf + 1.0,
                beta,
            };
            if certify_supersolution(mu, n, params, 10_000).is_ok() {
                if let Ok(cert) = certify_supersolution(mu, n, params, 100_000) {
                    return Ok(cert);
                }
            }
        }
    }
    Err(ConeError::SearchExhausted)
}

/// Solved profile on `(0, mu * pi)`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConeProfile {
    pub mu: f64,
    pub n: usize,
    /// Strictly increasing Chebyshev samples of `(0, mu * pi)`.
    pub theta: Vec<f64>,
    pub h: Vec<f64>,
    pub dh: Vec<f64>,
    /// `h(mu * pi / 2)`.
    pub midpoint_value: f64,
    /// `c` in `h ~ c theta^(1/(n+1))` at the edges.
    pub endpoint_coeff: f64,
    /// Largest `|L h| / (n (1 + h^2 + h'^2))` on the grid, with `h''` from the
    /// derivative of the integrator's continuous extension.
    pub residual_norm: f64,
    /// Largest `|h(theta) - h(mu pi - theta)|` between a sweep from the left
    /// edge across the midpoint and the shooting half-solution.
    pub symmetry_defect: f64,
    /// Edge distance at which `h = H_CUT`.
    pub theta_cut: f64,
    /// `(theta, h)` pairs with `h` in `[H_CUT, 10 H_CUT]`.
    pub edge_samples: Vec<(f64, f64)>,
    pub supersolution: SupersolutionParams,
    pub tol: f64,
}

struct HalfTrajectory {
    /// Phase 1: independent variable is distance from the midpoint, state
    /// `(h, h')`.
    near: Vec<Step<2>>,
    /// Phase 2, integrated from the cut back up to the switch: independent
    /// variable `ln h` (increasing), state `(ln(1/h'), R)` with
    /// `R = theta / (h / h')` so that `theta = R h / h'` keeps full relative
    /// precision at the edge.
    edge: Vec<Step<2>>,
    tau_switch: f64,
    theta_cut: f64,
    q_cut: f64,
    /// Edge distance and state `(h, h')` where phase 2 hands over.
    theta_switch: f64,
    h_switch: f64,
    g_switch: f64,
    /// Total distance from the midpoint to the edge.
    distance: f64,
}

fn near_rhs(n: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
    move |_, y| [-y[1], -second_derivative(y[0], y[1], n)]
}

/// `d ln q / dt` with `q = 1/h'`, `t = ln h`.
fn log_q_rate(t: f64, u: f64, n: f64) -> f64 {
    let h = t.exp();
    let q = u.exp();
    q * q * (h * h + n) + n / (1.0 + h * h)
}

fn edge_theta(t: f64, y: &[f64; 2]) -> f64 {
    y[1] * (y[0] + t).exp()
}

fn integrate_half(m: f64, n: usize, solver: &Dopri5) -> Result<HalfTrajectory> {
    let nf = n as f64;
    let mut near = Vec::new();
    let (tau_switch, y_switch) = solver.integrate(near_rhs(nf), 0.0, [m, 0.0], f64::INFINITY, 1e-3 * m, |step| {
        near.push(step.clone());
        step.y1[1] >= 1.0
    })?;
    let (h_sw, g_sw) = (y_switch[0], y_switch[1]);
    if !(h_sw > 10.0 * H_CUT) || !(g_sw >= 1.0) {
        return Err(ConeError::StiffnessFailure(format!(
            "switch state h = {h_sw}, h' = {g_sw}"
        )));
    }
    // Down to the cut for 1/h' there ...
    let (_, u_cut) = solver.integrate(
        |t, y: &[f64; 1]| [log_q_rate(t, y[0], nf)],
        h_sw.ln(),
        [-g_sw.ln()],
        H_CUT.ln(),
        -1e-2,
        |_| false,
    )?;
    let q_cut = u_cut[0].exp();
    let theta_cut = q_cut * H_CUT / (nf + 1.0);
    // ... then back up, carrying R with its edge value 1/(n+1). The R
    // equation is attracting in this direction.
    let mut edge = Vec::new();
    let (_, y) = solver.integrate(
        |t, y: &[f64; 2]| {
            let ut = log_q_rate(t, y[0], nf);
            [ut, 1.0 - y[1] * (1.0 + ut)]
        },
        H_CUT.ln(),
        [u_cut[0], 1.0 / (nf + 1.0)],
        h_sw.ln(),
        1e-2,
        |step| {
            edge.push(step.clone());
            false
        },
    )?;
    let theta_switch = edge_theta(h_sw.ln(), &y);
    Ok(HalfTrajectory {
        near,
        edge,
        tau_switch,
        theta_cut,
        q_cut,
        theta_switch,
        h_switch: h_sw,
        g_switch: (-y[0]).exp(),
        distance: tau_switch + theta_switch,
    })
}

impl HalfTrajectory {
    /// `(h, h', h'')` at edge distance `theta`.
    fn sample(&self, theta: f64, mu: f64) -> (f64, f64, f64) {
        if theta <= self.theta_switch {
            let j = self
                .edge
                .partition_point(|st| edge_theta(st.t1(), &st.y1) < theta)
                .min(self.edge.len() - 1);
            let step = &self.edge[j];
            let at = |s: f64| edge_theta(step.t0 + s * step.dt, &step.eval(s));
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if at(mid) < theta {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let s = 0.5 * (lo + hi);
            let q = step.eval(s)[0].exp();
            let ut = step.derivative(s)[0];
            let h = (step.t0 + s * step.dt).exp();
            (h, 1.0 / q, -ut / (q * q * h))
        } else {
            let tau = (0.5 * mu * PI - theta).clamp(0.0, self.tau_switch);
            let j = self.near.partition_point(|st| st.t1() < tau).min(self.near.len() - 1);
            let step = &self.near[j];
            let s = ((tau - step.t0) / step.dt).clamp(0.0, 1.0);
            let y = step.eval(s);
            let d = step.derivative(s);
            (y[0], y[1], -d[1])
        }
    }

    /// `(theta, h)` on the edge arc at height `h`.
    fn edge_point(&self, h: f64) -> (f64, f64) {
        let t = h.ln();
        let j = self.edge.partition_point(|st| st.t1() < t).min(self.edge.len() - 1);
        let step = &self.edge[j];
        let s = ((t - step.t0) / step.dt).clamp(0.0, 1.0);
        (edge_theta(t, &step.eval(s)), h)
    }

    /// Distance-from-midpoint lookup of `h` on the phase-1 arc.
    fn near_h(&self, tau: f64) -> Option<f64> {
        if tau > self.tau_switch {
            return None;
        }
        let j = self.near.partition_point(|st| st.t1() < tau).min(self.near.len() - 1);
        let step = &self.near[j];
        Some(step.eval(((tau - step.t0) / step.dt).clamp(0.0, 1.0))[0])
    }
}

/// Continues the edge arc (integrated outward from the cut) across the
/// midpoint and compares with the shooting half-solution at mirrored
/// points.
fn symmetry_sweep(traj: &HalfTrajectory, mu: f64, n: usize, solver: &Dopri5) -> Result<f64> {
    let nf = n as f64;
    let mid = 0.5 * mu * PI;
    let mut defect: f64 = 0.0;
    solver.integrate(
        |_, y: &[f64; 2]| [y[1], second_derivative(y[0], y[1], nf)],
        traj.theta_switch,
        [traj.h_switch, traj.g_switch],
        mu * PI - traj.theta_switch,
        1e-3 * mid,
        |step| {
            for s in [0.5, 1.0] {
                let theta = step.t0 + s * step.dt;
                if theta > mid {
                    if let Some(h_ref) = traj.near_h(theta - mid) {
                        defect = defect.max((step.eval(s)[0] - h_ref).abs());
                    }
                }
            }
            false
        },
    )?;
    Ok(defect)
}

/// Shooting solve of the wedge profile for opening `mu * pi` in dimension `n`.
/// `tol` (>= 1e-12) bounds the shooting mismatch; the integrator runs at
/// `tol / 100`.
pub fn solve_cone_profile(mu: f64, n: usize, tol: f64) -> Result<ConeProfile> {
    check_mu_n(mu, n)?;
    if !(tol >= 1e-12) {
        return Err(ConeError::InvalidParameter("tol must be >= 1e-12".into()));
    }
    let cert = supersolution_params(mu, n)?;
    let solver = Dopri5 {
        rtol: (0.01 * tol).max(1e-14),
        atol: (0.01 * tol).max(1e-14) * 1e-3,
        max_steps: 2_000_000,
    };
    let target = 0.5 * mu * PI;
    let shoot = |m: f64| integrate_half(m, n, &solver).map(|t| t.distance - target);

    let hi0 = cert.params.a + cert.params.b;
    let lo0 = 1e-3 * hi0;
    let (f_lo, f_hi) = (shoot(lo0)?, shoot(hi0)?);
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(ConeError::NoBracket { lo: lo0, hi: hi0 });
    }
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = shoot(mid)?;
        if f.abs() <= 0.01 * tol * target {
            lo = mid;
            hi = mid;
            break;
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let m = 0.5 * (lo + hi);
    let traj = integrate_half(m, n, &solver)?;
    if (traj.distance - target).abs() > tol.max(1e-12) * target.max(1.0) {
        return Err(ConeError::StiffnessFailure(format!(
            "shooting mismatch {}",
            traj.distance - target
        )));
    }

    let nf = n as f64;
    let theta = chebyshev_points(0.0, mu * PI, PROFILE_POINTS);
    let half = PROFILE_POINTS / 2;
    let mut h = vec![0.0; PROFILE_POINTS];
    let mut dh = vec![0.0; PROFILE_POINTS];
    let mut residual: f64 = 0.0;
    for k in 0..half {
        let (v, v1, v2) = traj.sample(theta[k], mu);
        let scale = nf * (1.0 + v * v + v1 * v1);
        residual = residual.max((l_operator(v, v1, v2, n) / scale).abs());
        h[k] = v;
        dh[k] = v1;
        h[PROFILE_POINTS - 1 - k] = v;
        dh[PROFILE_POINTS - 1 - k] = -v1;
    }

    let edge_samples: Vec<(f64, f64)> = (0..EDGE_SAMPLES)
        .map(|i| traj.edge_point(H_CUT * 10f64.powf(i as f64 / (EDGE_SAMPLES - 1) as f64)))
        .collect();

    let symmetry_defect = symmetry_sweep(&traj, mu, n, &solver)?;
    let endpoint_coeff = ((nf + 1.0) * H_CUT.powf(nf) / traj.q_cut).powf(1.0 / (nf + 1.0));

    Ok(ConeProfile {
        mu,
        n,
        theta,
        h,
        dh,
        midpoint_value: m,
        endpoint_coeff,
        residual_norm: residual,
        symmetry_defect,
        theta_cut: traj.theta_cut,
        edge_samples,
        supersolution: cert.params,
        tol,
    })
}

/// Least-squares slope of `ln h` against `ln theta`.
pub fn endpoint_exponent_from_samples(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 10 {
        return Err(ConeError::InsufficientRange(samples.len()));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|(t, h)| (t.ln(), h.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Fitted edge exponent over the decade `h` in `[H_CUT, 10 H_CUT]`.
pub fn endpoint_exponent(profile: &ConeProfile) -> Result<f64> {
    endpoint_exponent_from_samples(&profile.edge_samples)
}

impl ConeProfile {
    /// `h(theta)` for `theta` in `[0, mu * pi]`, by cubic Hermite
    /// interpolation in `s = theta^(1/(n+1))`, in which `h` is smooth up to
    /// the edge.
    pub fn eval(&self, theta: f64) -> f64 {
        let opening = self.mu * PI;
        if !(theta > 0.0 && theta < opening) {
            return 0.0;
        }
        let th = if theta > 0.5 * opening { opening - theta } else { theta };
        let half = self.theta.len() / 2;
        let gamma = 1.0 / (self.n as f64 + 1.0);
        if th <= self.theta[0] {
            return self.h[0] * (th / self.theta[0]).powf(gamma);
        }
        let last = half - 1;
        if th >= self.theta[last] {
            let (a, b) = (self.theta[last], opening - self.theta[last]);
            return hermite(a, b, self.h[last], self.h[last], self.dh[last], -self.dh[last], th);
        }
        let k = self.theta[..half].partition_point(|&t| t <= th) - 1;
        let (t0, t1) = (self.theta[k], self.theta[k + 1]);
        let ds = |t: f64, d: f64| d * t.powf(1.0 - gamma) / gamma;
        hermite(
            t0.powf(gamma),
            t1.powf(gamma),
            self.h[k],
            self.h[k + 1],
            ds(t0, self.dh[k]),
            ds(t1, self.dh[k + 1]),
            th.powf(gamma),
        )
    }

    pub fn max_value(&self) -> f64 {
        self.midpoint_value
    }
}

fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let w = x1 - x0;
    let t = (x - x0) / w;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * w * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * w * d1
}

/// `r h(theta)` in polar coordinates about the cone vertex.
pub fn eval_cone_solution(profile: &ConeProfile, cone: &ConeSpec, x: &Point) -> Result<f64> {
    if (cone.mu() - profile.mu).abs() > 1e-9 {
        return Err(ConeError::InvalidParameter(format!(
            "profile opening {} does not match cone opening {}",
            profile.mu,
            cone.mu()
        )));
    }
    let (r, theta) = cone.polar(x);
    if r == 0.0 {
        return Ok(0.0);
    }
    if !(theta >= 0.0 && theta <= cone.opening) {
        return Err(ConeError::OutsideCone(x.x, x.y));
    }
    Ok(r * profile.eval(theta))
}
