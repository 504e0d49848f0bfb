//! Dormand–Prince 5(4) with PI-free step control, sampled on a fixed grid.
//!
//! The integrator never steps past a sample time, so samples are exact
//! solution points rather than interpolants.

use std::ops::ControlFlow;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerances and step limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h0: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, h0: None, h_max: f64::INFINITY, max_steps: 10_000_000 }
    }
}

/// Step counters for one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
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

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], opts: &OdeOptions) -> f64 {
    let mut acc = 0.0;
    for ((e, a), b) in err.iter().zip(y0).zip(y1) {
        let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
        acc += (e / sc).powi(2);
    }
    (acc / err.len().max(1) as f64).sqrt()
}

fn initial_step<F>(f: &mut F, t0: f64, y0: &[f64], f0: &[f64], opts: &OdeOptions, span: f64) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len().max(1) as f64;
    let sc: Vec<f64> = y0.iter().map(|y| opts.atol + opts.rtol * y.abs()).collect();
    let d0 = (y0.iter().zip(&sc).map(|(y, s)| (y / s).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().zip(&sc).map(|(y, s)| (y / s).powi(2)).sum::<f64>() / n).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, d)| y + h0 * d).collect();
    let mut f1 = vec![0.0; y0.len()];
    f(t0 + h0, &y1, &mut f1);
    let d2 = (f1.iter().zip(f0).zip(&sc).map(|((a, b), s)| ((a - b) / s).powi(2)).sum::<f64>() / n).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(span).min(opts.h_max)
}

/// Integrates `dy/dt = f(t, y)` from `times[0]` through every later entry of
/// `times`, calling `observe(i, t_i, y)` at each sample (including the
/// first). `post_step` may project or check the state after each accepted
/// step and reports whether it changed `y`. Either hook can abort with an error; `observe` can also stop the run
/// early by returning `ControlFlow::Break`.
pub fn integrate<F, P, O>(
    mut f: F,
    mut post_step: P,
    y0: &[f64],
    times: &[f64],
    opts: &OdeOptions,
    mut observe: O,
) -> Result<OdeStats>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    P: FnMut(f64, &mut [f64]) -> Result<bool>,
    O: FnMut(usize, f64, &[f64]) -> Result<ControlFlow<()>>,
{
    if times.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::InvalidArgument("tolerances must be positive".into()));
    }
    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    let mut t = times[0];
    if observe(0, t, &y)?.is_break() || times.len() == 1 {
        return Ok(stats);
    }

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];

    f(t, &y, &mut k1);
    stats.rhs_evals += 1;
    let span = times[times.len() - 1] - t;
    let mut h = match opts.h0 {
        Some(h) => h,
        None => {
            stats.rhs_evals += 1;
            initial_step(&mut f, t, &y, &k1, opts, span)
        }
    };

    for (i, &target) in times.iter().enumerate().skip(1) {
        while t < target {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::StepUnderflow { t, h });
            }
            let remaining = target - t;
            let last = h >= remaining * (1.0 - 1e-12);
            let hs = if last { remaining } else { h.min(opts.h_max) };
            if hs < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t, h: hs });
            }

            for q in 0..n {
                tmp[q] = y[q] + hs * A21 * k1[q];
            }
            f(t + C2 * hs, &tmp, &mut k2);
            for q in 0..n {
                tmp[q] = y[q] + hs * (A31 * k1[q] + A32 * k2[q]);
            }
            f(t + C3 * hs, &tmp, &mut k3);
            for q in 0..n {
                tmp[q] = y[q] + hs * (A41 * k1[q] + A42 * k2[q] + A43 * k3[q]);
            }
            f(t + C4 * hs, &tmp, &mut k4);
            for q in 0..n {
                tmp[q] = y[q] + hs * (A51 * k1[q] + A52 * k2[q] + A53 * k3[q] + A54 * k4[q]);
            }
            f(t + C5 * hs, &tmp, &mut k5);
            for q in 0..n {
                tmp[q] = y[q] + hs * (A61 * k1[q] + A62 * k2[q] + A63 * k3[q] + A64 * k4[q] + A65 * k5[q]);
            }
            f(t + hs, &tmp, &mut k6);
            for q in 0..n {
                y_new[q] = y[q] + hs * (B1 * k1[q] + B3 * k3[q] + B4 * k4[q] + B5 * k5[q] + B6 * k6[q]);
            }
            f(t + hs, &y_new, &mut k7);
            stats.rhs_evals += 6;
            for q in 0..n {
                err[q] = hs * (E1 * k1[q] + E3 * k3[q] + E4 * k4[q] + E5 * k5[q] + E6 * k6[q] + E7 * k7[q]);
            }
            let e = error_norm(&err, &y, &y_new, opts);
            if !e.is_finite() {
                stats.rejected += 1;
                h = hs * 0.2;
                continue;
            }
            let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            if e <= 1.0 {
                stats.accepted += 1;
                t = if last { target } else { t + hs };
                std::mem::swap(&mut y, &mut y_new);
                if post_step(t, &mut y)? {
                    f(t, &y, &mut k1);
                    stats.rhs_evals += 1;
                } else {
                    std::mem::swap(&mut k1, &mut k7);
                }
                // a step shortened only to land on a sample keeps the old size
                h = if last { h.max(hs * factor) } else { hs * factor };
            } else {
                stats.rejected += 1;
                h = hs * factor.min(1.0);
            }
        }
        if observe(i, t, &y)?.is_break() {
            break;
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
        let mut out = Vec::new();
        integrate(
            |_, y, dy| dy[0] = -y[0],
            |_, _| Ok(false),
            &[1.0],
            &times,
            &OdeOptions::default(),
            |_, t, y| {
                out.push((t, y[0]));
                Ok(ControlFlow::Continue(()))
            },
        )
        .unwrap();
        assert_eq!(out.len(), times.len());
        for (t, y) in out {
            assert!((y - (-t).exp()).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn harmonic_oscillator_lands_on_samples() {
        let times = [0.0, 0.1, 0.35, 2.0, 7.5];
        let mut seen = Vec::new();
        integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            |_, _| Ok(false),
            &[1.0, 0.0],
            &times,
            &OdeOptions::default(),
            |i, t, y| {
                assert_eq!(t, times[i]);
                seen.push(i);
                assert!((y[0] - t.cos()).abs() < 1e-7);
                Ok(ControlFlow::Continue(()))
            },
        )
        .unwrap();
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn rejects_unordered_grid() {
        let r = integrate(
            |_, _, _| {},
            |_, _| Ok(false),
            &[0.0],
            &[0.0, 1.0, 1.0],
            &OdeOptions::default(),
            |_, _, _| Ok(ControlFlow::Continue(())),
        );
        assert!(r.is_err());
    }

    #[test]
    fn observer_can_stop_early() {
        let mut last = 0;
        integrate(
            |_, _, dy| dy[0] = 1.0,
            |_, _| Ok(false),
            &[0.0],
            &[0.0, 1.0, 2.0, 3.0],
            &OdeOptions::default(),
            |i, _, _| {
                last = i;
                Ok(if i == 1 { ControlFlow::Break(()) } else { ControlFlow::Continue(()) })
            },
        )
        .unwrap();
        assert_eq!(last, 1);
    }

    #[test]
    fn step_cap_reports_underflow() {
        let opts = OdeOptions { max_steps: 3, ..OdeOptions::default() };
        let r = integrate(
            |_, y, dy| dy[0] = -50.0 * y[0],
            |_, _| Ok(false),
            &[1.0],
            &[0.0, 100.0],
            &opts,
            |_, _, _| Ok(ControlFlow::Continue(())),
        );
        assert!(matches!(r, Err(Error::StepUnderflow { .. })));
    }
}
