//! Explicit Runge–Kutta integrators for complex matrix ODEs `y' = f(t, y)`.

use super::{IntegrationMethod, IntegratorSettings};
use crate::error::{Error, Result};
use crate::hilbert::CMatrix;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const MIN_STEP: f64 = 1e-14;

// Dormand–Prince 5(4) tableau.
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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn lin(y: &CMatrix, terms: &[(f64, &CMatrix)]) -> CMatrix {
    let mut out = y.clone();
    for (c, k) in terms {
        if *c != 0.0 {
            out.zip_apply(*k, |o, x| *o += x * *c);
        }
    }
    out
}

/// One Dormand–Prince step. Returns the fifth-order solution, the embedded
/// error estimate and `f(t+h, y_new)` (reusable as the next first stage).
pub fn dopri5_step<F>(f: &mut F, t: f64, y: &CMatrix, k1: &CMatrix, h: f64) -> (CMatrix, CMatrix, CMatrix)
where
    F: FnMut(f64, &CMatrix) -> CMatrix,
{
    let k2 = f(t + C2 * h, &lin(y, &[(h * A21, k1)]));
    let k3 = f(t + C3 * h, &lin(y, &[(h * A31, k1), (h * A32, &k2)]));
    let k4 = f(t + C4 * h, &lin(y, &[(h * A41, k1), (h * A42, &k2), (h * A43, &k3)]));
    let k5 = f(
        t + C5 * h,
        &lin(y, &[(h * A51, k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]),
    );
    let k6 = f(
        t + h,
        &lin(y, &[(h * A61, k1), (h * A62, &k2), (h * A63, &k3), (h * A64, &k4), (h * A65, &k5)]),
    );
    let y_new = lin(y, &[(h * B1, k1), (h * B3, &k3), (h * B4, &k4), (h * B5, &k5), (h * B6, &k6)]);
    let k7 = f(t + h, &y_new);
    let zero = CMatrix::zeros(y.nrows(), y.ncols());
    let err = lin(
        &zero,
        &[(h * E1, k1), (h * E3, &k3), (h * E4, &k4), (h * E5, &k5), (h * E6, &k6), (h * E7, &k7)],
    );
    (y_new, err, k7)
}

/// Classical RK4 step.
pub fn rk4_step<F>(f: &mut F, t: f64, y: &CMatrix, h: f64) -> CMatrix
where
    F: FnMut(f64, &CMatrix) -> CMatrix,
{
    let k1 = f(t, y);
    let k2 = f(t + h / 2.0, &lin(y, &[(h / 2.0, &k1)]));
    let k3 = f(t + h / 2.0, &lin(y, &[(h / 2.0, &k2)]));
    let k4 = f(t + h, &lin(y, &[(h, &k3)]));
    lin(y, &[(h / 6.0, &k1), (h / 3.0, &k2), (h / 3.0, &k3), (h / 6.0, &k4)])
}

/// Scaled max-norm of the error estimate.
pub fn error_norm(err: &CMatrix, y0: &CMatrix, y1: &CMatrix, rel: f64, abs: f64) -> f64 {
    err.iter()
        .zip(y0.iter().zip(y1.iter()))
        .map(|(e, (a, b))| e.norm() / (abs + rel * a.norm().max(b.norm())))
        .fold(0.0, f64::max)
}

/// Integrate from `t0` to `t1`; `post_step` runs after every accepted step.
pub fn integrate<F, P>(
    mut f: F,
    y0: CMatrix,
    t0: f64,
    t1: f64,
    settings: &IntegratorSettings,
    mut post_step: P,
) -> Result<CMatrix>
where
    F: FnMut(f64, &CMatrix) -> CMatrix,
    P: FnMut(&mut CMatrix),
{
    settings.validate()?;
    let span = t1 - t0;
    if span < 0.0 {
        return Err(Error::InvalidArgument(format!("negative duration {span}")));
    }
    if span == 0.0 {
        return Ok(y0);
    }
    match settings.method {
        IntegrationMethod::FixedRk4 => {
            let steps = (span / settings.max_step).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            let mut y = y0;
            for s in 0..steps {
                y = rk4_step(&mut f, t0 + s as f64 * h, &y, h);
                post_step(&mut y);
            }
            Ok(y)
        }
        IntegrationMethod::AdaptiveRk | IntegrationMethod::SectorExponential => {
            adaptive(&mut f, y0, t0, t1, settings, &mut post_step)
        }
    }
}

fn adaptive<F, P>(
    f: &mut F,
    y0: CMatrix,
    t0: f64,
    t1: f64,
    s: &IntegratorSettings,
    post_step: &mut P,
) -> Result<CMatrix>
where
    F: FnMut(f64, &CMatrix) -> CMatrix,
    P: FnMut(&mut CMatrix),
{
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    // Initial guess from the size of the derivative.
    let scale = y.iter().map(|z| z.norm()).fold(0.0, f64::max).max(s.abs_tol);
    let slope = k1.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut h = if slope > 0.0 {
        0.01 * scale / slope
    } else {
        s.max_step
    };
    h = h.min(s.max_step).min(t1 - t0);
    loop {
        let remaining = t1 - t;
        if remaining <= 1e-15 * t1.abs().max(1.0) {
            return Ok(y);
        }
        let last = h >= remaining;
        let step = if last { remaining } else { h };
        let (y_new, err, k_next) = dopri5_step(f, t, &y, &k1, step);
        let en = error_norm(&err, &y, &y_new, s.rel_tol, s.abs_tol);
        if en <= 1.0 {
            t = if last { t1 } else { t + step };
            y = y_new;
            post_step(&mut y);
            k1 = k_next;
            let factor = if en == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * en.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            if !last {
                h = (step * factor).min(s.max_step);
            }
        } else {
            h = step * (SAFETY * en.powf(-0.25)).clamp(MIN_FACTOR, 1.0);
            if h < MIN_STEP * t1.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t, h });
            }
        }
    }
}
