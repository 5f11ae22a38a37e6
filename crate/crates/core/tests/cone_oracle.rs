//! Cross-checks of the shooting profile against an independent
//! finite-difference boundary value solve.

use std::f64::consts::PI;

use hypmin::cone_profile::{endpoint_exponent, solve_cone_profile, supersolution_params, ConeProfile};

/// Solves the profile equation on the half interval in `s = theta^(1/(n+1))`,
/// where it reads
/// `h(1+h^2)(h_ss - n h_s/s + K h) + n (K (1+h^2) + h_s^2) = 0`,
/// `K = (n+1)^2 s^(2n)`, with `h(0) = 0` and `h_s = 0` at the midpoint.
/// Second-order differences on a uniform `s` mesh (graded in theta), Newton
/// with a tridiagonal Jacobian from a guess of the given height. Returns the
/// midpoint value if Newton converged.
fn fd_solve(mu: f64, n: usize, points: usize, height: f64) -> Option<f64> {
    let nf = n as f64;
    let s_max = (0.5 * mu * PI).powf(1.0 / (nf + 1.0));
    let m = points;
    let ds = s_max / m as f64;
    let s: Vec<f64> = (0..=m).map(|j| j as f64 * ds).collect();
    let k: Vec<f64> = s.iter().map(|x| (nf + 1.0).powi(2) * x.powf(2.0 * nf)).collect();
    // Initial guess shaped like the edge law.
    let mut h: Vec<f64> = s
        .iter()
        .map(|x| height * (x.powf(nf + 1.0) / mu).sin().powf(1.0 / (nf + 1.0)))
        .collect();

    let residual = |h: &[f64]| -> Vec<f64> {
        (1..=m)
            .map(|j| {
                let (hs, hss) = if j == m {
                    (0.0, 2.0 * (h[m - 1] - h[m]) / (ds * ds))
                } else {
                    (
                        (h[j + 1] - h[j - 1]) / (2.0 * ds),
                        (h[j + 1] - 2.0 * h[j] + h[j - 1]) / (ds * ds),
                    )
                };
                let v = h[j];
                v * (1.0 + v * v) * (hss - nf * hs / s[j] + k[j] * v) + nf * (k[j] * (1.0 + v * v) + hs * hs)
            })
            .collect()
    };
    let norm = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>().sqrt();

    for _ in 0..200 {
        let r = residual(&h);
        let r0 = norm(&r);
        if r0 == 0.0 {
            return Some(h[m]);
        }
        // Tridiagonal Jacobian rows j = 1..=m (unknowns h_1..h_m).
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        for j in 1..=m {
            let v = h[j];
            let a = v * (1.0 + v * v);
            let (hs, hss, dl, du, dsl, dsu) = if j == m {
                (0.0, 2.0 * (h[m - 1] - h[m]) / (ds * ds), 2.0 / (ds * ds), 0.0, 0.0, 0.0)
            } else {
                (
                    (h[j + 1] - h[j - 1]) / (2.0 * ds),
                    (h[j + 1] - 2.0 * h[j] + h[j - 1]) / (ds * ds),
                    1.0 / (ds * ds),
                    1.0 / (ds * ds),
                    -1.0 / (2.0 * ds),
                    1.0 / (2.0 * ds),
                )
            };
            let bracket = hss - nf * hs / s[j] + k[j] * v;
            let hss_diag = -2.0 / (ds * ds);
            diag[j - 1] = (1.0 + 3.0 * v * v) * bracket + a * (hss_diag + k[j]) + nf * k[j] * 2.0 * v;
            lower[j - 1] = a * (dl - nf * dsl / s[j]) + nf * 2.0 * hs * dsl;
            upper[j - 1] = a * (du - nf * dsu / s[j]) + nf * 2.0 * hs * dsu;
        }
        // Thomas algorithm; lower[0] couples to the fixed h_0 = 0.
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        for i in 0..m {
            let denom = diag[i] - if i > 0 { lower[i] * c[i - 1] } else { 0.0 };
            c[i] = upper[i] / denom;
            d[i] = (-r[i] - if i > 0 { lower[i] * d[i - 1] } else { 0.0 }) / denom;
        }
        let mut delta = vec![0.0; m];
        for i in (0..m).rev() {
            delta[i] = d[i] - if i + 1 < m { c[i] * delta[i + 1] } else { 0.0 };
        }
        if delta.iter().all(|d| d.abs() < 1e-13) {
            return Some(h[m]);
        }
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = std::iter::once(0.0)
                .chain((1..=m).map(|j| (h[j] + step * delta[j - 1]).max(1e-300)))
                .collect();
            if step < 1e-8 {
                return None;
            }
            if norm(&residual(&trial)) < (1.0 - 1e-4 * step) * r0 {
                h = trial;
                break;
            }
            step *= 0.5;
        }
    }
    None
}

fn fd_midpoint(mu: f64, n: usize, points: usize) -> f64 {
    [1.0, 2.0, 4.0, 8.0]
        .iter()
        .find_map(|&height| fd_solve(mu, n, points, height))
        .expect("finite-difference Newton did not converge")
}

#[test]
fn midpoint_matches_finite_difference_oracle() {
    for (mu, n) in [(0.5, 2), (0.25, 3), (0.75, 2)] {
        let profile = solve_cone_profile(mu, n, 1e-12).unwrap();
        // Second-order scheme: extrapolate 1000/2000 points to remove the
        // leading error term.
        let coarse = fd_midpoint(mu, n, 1000);
        let fine = fd_midpoint(mu, n, 2000);
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        assert!(
            (fine - profile.midpoint_value).abs() < 1e-5,
            "mu={mu} n={n}: fd {fine} vs shooting {}",
            profile.midpoint_value
        );
        assert!(
            (extrapolated - profile.midpoint_value).abs() < 1e-6,
            "mu={mu} n={n}: extrapolated {extrapolated} vs shooting {}",
            profile.midpoint_value
        );
    }
}

fn check_profile(p: &ConeProfile) {
    let n = p.n as f64;
    assert!(p.residual_norm <= 1e-8, "residual {}", p.residual_norm);
    assert!(p.symmetry_defect <= 1e-8, "symmetry {}", p.symmetry_defect);
    let slope = endpoint_exponent(p).unwrap();
    let expected = 1.0 / (n + 1.0);
    assert!((slope - expected).abs() <= 0.05 * expected, "slope {slope}");
    for (t, h) in p.theta.iter().zip(&p.h) {
        assert!(*h > 0.0);
        assert!(*h <= p.supersolution.value(p.mu, *t) * (1.0 + 1e-12));
    }
}

#[test]
fn profiles_over_parameter_grid() {
    for n in [2, 3] {
        for mu in [0.25, 0.5, 0.75] {
            let p = solve_cone_profile(mu, n, 1e-12).unwrap();
            check_profile(&p);
        }
    }
}

#[test]
fn small_opening_height_bound() {
    for mu in [0.1, 0.2, 0.25, 1.0 / 3.0] {
        let p = solve_cone_profile(mu, 2, 1e-12).unwrap();
        let max = p.h.iter().cloned().fold(0.0, f64::max);
        assert!(max <= (3.0 * mu).sqrt() + 1e-6, "mu={mu}: {max}");
    }
}

#[test]
fn profiles_increase_with_opening() {
    let narrow = solve_cone_profile(0.3, 2, 1e-12).unwrap();
    let wide = solve_cone_profile(0.6, 2, 1e-12).unwrap();
    for &t in &narrow.theta {
        assert!(narrow.eval(t) <= wide.eval(t) + 1e-6);
    }
}

#[test]
fn interpolation_reproduces_nodes_and_edge_law() {
    let p = solve_cone_profile(0.5, 2, 1e-12).unwrap();
    for k in (0..p.theta.len()).step_by(97) {
        assert!((p.eval(p.theta[k]) - p.h[k]).abs() < 1e-13);
    }
    // Between nodes the interpolant should agree with the supersolution
    // ordering and stay positive.
    let cert = supersolution_params(0.5, 2).unwrap();
    for i in 1..1000 {
        let t = 0.5 * PI * i as f64 / 1000.0;
        let v = p.eval(t);
        assert!(v > 0.0 && v <= cert.params.value(0.5, t));
    }
    // Close to the edge the profile follows c theta^(1/3).
    let t = 1e-9;
    let rel = p.eval(t) / (p.endpoint_coeff * t.powf(1.0 / 3.0)) - 1.0;
    assert!(rel.abs() < 1e-3, "{rel}");
}
