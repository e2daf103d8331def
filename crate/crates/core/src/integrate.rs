//! Explicit Runge-Kutta integrators: classic fixed-step RK4 and the
//! Dormand-Prince 5(4) embedded pair with step-size control.

use nalgebra::SVector;

use crate::error::{Error, Result};

/// One classic RK4 step of size `h`.
pub fn rk4_step<const N: usize, F>(mut f: F, t: f64, y: &SVector<f64, N>, h: f64) -> Result<SVector<f64, N>>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &(y + k1 * (0.5 * h)))?;
    let k3 = f(t + 0.5 * h, &(y + k2 * (0.5 * h)))?;
    let k4 = f(t + h, &(y + k3 * h))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-10,
            h_min: 1e-8,
            h_max: 1e-2,
            max_steps: 50_000_000,
        }
    }
}

// Dormand-Prince 5(4) tableau.
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// difference between the 5th and 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive Dormand-Prince integrator. Keeps its step size between calls so
/// that consecutive `integrate` calls over an output grid stay efficient.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub options: AdaptiveOptions,
    h: Option<f64>,
    pub accepted: usize,
    pub rejected: usize,
}

impl Dopri5 {
    pub fn new(options: AdaptiveOptions) -> Self {
        Self {
            options,
            h: None,
            accepted: 0,
            rejected: 0,
        }
    }

    /// Integrates from `t0` to `t1`, landing exactly on `t1`.
    pub fn integrate<const N: usize, F>(
        &mut self,
        mut f: F,
        t0: f64,
        y0: &SVector<f64, N>,
        t1: f64,
    ) -> Result<SVector<f64, N>>
    where
        F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
    {
        let opts = self.options;
        let mut t = t0;
        let mut y = *y0;
        let mut h = self.h.unwrap_or(opts.h_max.min((t1 - t0).abs()).max(opts.h_min));
        let mut k1 = f(t, &y)?;
        let mut steps = 0usize;
        while t1 - t > 1e-14 * t1.abs().max(1.0) {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::NoConvergence("adaptive integrator step budget exhausted"));
            }
            let remaining = t1 - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };

            let k2 = f(t + C2 * step, &(y + k1 * (A21 * step)))?;
            let k3 = f(t + C3 * step, &(y + (k1 * A31 + k2 * A32) * step))?;
            let k4 = f(t + C4 * step, &(y + (k1 * A41 + k2 * A42 + k3 * A43) * step))?;
            let k5 = f(
                t + C5 * step,
                &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * step),
            )?;
            let k6 = f(
                t + step,
                &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * step),
            )?;
            let y_new = y + (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5 + k6 * B6) * step;
            let k7 = f(t + step, &y_new)?;
            let err_vec = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * step;

            let mut err = 0.0f64;
            for i in 0..N {
                let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((err_vec[i] / scale).abs());
            }
            if !err.is_finite() {
                return Err(Error::NonFinite("adaptive integrator error estimate"));
            }

            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 || step <= opts.h_min {
                t = if last { t1 } else { t + step };
                y = y_new;
                k1 = k7;
                self.accepted += 1;
                if !last {
                    h = (step * factor).clamp(opts.h_min, opts.h_max);
                }
            } else {
                self.rejected += 1;
                h = (step * factor).clamp(opts.h_min, opts.h_max);
            }
        }
        self.h = Some(h);
        Ok(y)
    }
}
