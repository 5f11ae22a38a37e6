//! Adaptive Dormand–Prince 5(4) integrator with the standard fourth-order
//! continuous extension.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("step budget exhausted at t = {0}")]
    TooManySteps(f64),
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step together with its continuous extension.
#[derive(Clone, Debug)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub dt: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    rc: [[f64; N]; 4],
}

impl<const N: usize> Step<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.dt
    }

    /// Change `y(t0 + s*dt) - y0` for `s` in `[0, 1]`; computed without
    /// forming `y0 + ...` so small increments keep full relative precision.
    pub fn increment(&self, s: f64) -> [f64; N] {
        let [r2, r3, r4, r5] = &self.rc;
        let s1 = 1.0 - s;
        std::array::from_fn(|i| s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i]))))
    }

    pub fn eval(&self, s: f64) -> [f64; N] {
        let inc = self.increment(s);
        std::array::from_fn(|i| self.y0[i] + inc[i])
    }

    /// `dy/dt` of the continuous extension.
    pub fn derivative(&self, s: f64) -> [f64; N] {
        let [r2, r3, r4, r5] = &self.rc;
        std::array::from_fn(|i| {
            // p(s) = s*(r2 + (1-s)*(r3 + s*(r4 + (1-s)*r5)))
            let inner = r4[i] + (1.0 - s) * r5[i];
            let d_inner = -r5[i];
            let mid = r3[i] + s * inner;
            let d_mid = inner + s * d_inner;
            let outer = r2[i] + (1.0 - s) * mid;
            let d_outer = -mid + (1.0 - s) * d_mid;
            (outer + s * d_outer) / self.dt
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

fn axpy<const N: usize>(y: &[f64; N], dt: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + dt * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

impl Dopri5 {
    /// Integrates from `t0` toward `t_end` (which may be infinite) starting
    /// with step `dt0` (its sign sets the direction). After every accepted
    /// step `on_step` is called; returning `true` stops the integration.
    /// Returns the final `(t, y)`.
    pub fn integrate<const N: usize, F, S>(
        &self,
        f: F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        dt0: f64,
        mut on_step: S,
    ) -> Result<(f64, [f64; N]), OdeError>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
        S: FnMut(&Step<N>) -> bool,
    {
        let dir = dt0.signum();
        let mut t = t0;
        let mut y = y0;
        let mut dt = dt0;
        let mut k1 = f(t, &y);
        for _ in 0..self.max_steps {
            let remaining = t_end - t;
            if remaining * dir <= 0.0 {
                return Ok((t, y));
            }
            let last = dt.abs() >= remaining.abs();
            if last {
                dt = remaining;
            }
            let k2 = f(t + C2 * dt, &axpy(&y, dt, &[(A21, &k1)]));
            let k3 = f(t + C3 * dt, &axpy(&y, dt, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * dt, &axpy(&y, dt, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                t + C5 * dt,
                &axpy(&y, dt, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                t + dt,
                &axpy(&y, dt, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y1 = axpy(&y, dt, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = f(t + dt, &y1);
            let mut err = 0.0;
            for i in 0..N {
                let e = dt * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y1[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / N as f64).sqrt();
            let finite = err.is_finite() && y1.iter().all(|v| v.is_finite());
            if finite && err <= 1.0 {
                let rc2: [f64; N] = std::array::from_fn(|i| y1[i] - y[i]);
                let rc3: [f64; N] = std::array::from_fn(|i| dt * k1[i] - rc2[i]);
                let rc4: [f64; N] = std::array::from_fn(|i| rc2[i] - dt * k7[i] - rc3[i]);
                let rc5: [f64; N] = std::array::from_fn(|i| {
                    dt * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                });
                let step = Step {
                    t0: t,
                    dt,
                    y0: y,
                    y1,
                    rc: [rc2, rc3, rc4, rc5],
                };
                t = if last { t_end } else { t + dt };
                y = y1;
                k1 = k7;
                if on_step(&step) || last {
                    return Ok((t, y));
                }
                let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
                dt *= fac;
            } else {
                let fac = if finite {
                    (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
                } else {
                    0.25
                };
                dt *= fac;
            }
            if dt.abs() <= 1e-15 * t.abs().max(1e-300) {
                return Err(OdeError::StepUnderflow(t));
            }
        }
        Err(OdeError::TooManySteps(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_and_dense_output() {
        let solver = Dopri5 {
            rtol: 1e-12,
            atol: 1e-14,
            ..Default::default()
        };
        let mut worst: f64 = 0.0;
        let mut worst_d: f64 = 0.0;
        let (t, y) = solver
            .integrate(
                |_, y: &[f64; 1]| [y[0]],
                0.0,
                [1.0],
                2.0,
                0.1,
                |step| {
                    for s in [0.25, 0.5, 0.75] {
                        let tt = step.t0 + s * step.dt;
                        worst = worst.max((step.eval(s)[0] - tt.exp()).abs() / tt.exp());
                        worst_d = worst_d.max((step.derivative(s)[0] - tt.exp()).abs() / tt.exp());
                    }
                    false
                },
            )
            .unwrap();
        assert_eq!(t, 2.0);
        assert!((y[0] - 2f64.exp()).abs() < 1e-10);
        assert!(worst < 1e-10, "{worst}");
        assert!(worst_d < 1e-8, "{worst_d}");
    }

    #[test]
    fn backward_harmonic_oscillator() {
        let solver = Dopri5::default();
        let (_, y) = solver
            .integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], -1.0, -0.01, |_| false)
            .unwrap();
        assert!((y[0] - (-1f64).sin()).abs() < 1e-10);
        assert!((y[1] - (-1f64).cos()).abs() < 1e-10);
    }
}
