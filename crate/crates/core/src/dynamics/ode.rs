//! Embedded Dormand–Prince 5(4) with step control.
//!
//! Steps are clipped so that every requested output time is hit exactly; no
//! interpolation is involved in the returned samples.

use nalgebra::DVector;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-10, max_step: f64::INFINITY, max_steps: 50_000_000 }
    }
}

/// Hooks called by [`integrate`] on accepted steps and output times.
pub trait Observer {
    /// Called after every accepted step. Returning `Ok(true)` signals that
    /// `y` was modified in place (the derivative is then re-evaluated).
    fn accepted(&mut self, _t: f64, _y: &mut DVector<f64>) -> Result<bool> {
        Ok(false)
    }

    /// Called at each requested output time, including the initial one.
    fn output(&mut self, k: usize, t: f64, y: &DVector<f64>) -> Result<()>;
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
// b - b̂, 5th minus embedded 4th order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn combo(y: &DVector<f64>, h: f64, coeffs: &[f64], ks: &[DVector<f64>]) -> DVector<f64> {
    let mut out = y.clone();
    for (c, k) in coeffs.iter().zip(ks) {
        if *c != 0.0 {
            out.axpy(h * c, k, 1.0);
        }
    }
    out
}

fn scaled_norm(e: &DVector<f64>, y0: &DVector<f64>, y1: &DVector<f64>, opts: &OdeOptions) -> f64 {
    let n = e.len().max(1) as f64;
    let s: f64 = e
        .iter()
        .zip(y0.iter().zip(y1.iter()))
        .map(|(ei, (a, b))| {
            let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
            (ei / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

fn initial_step<F>(rhs: &mut F, t0: f64, y0: &DVector<f64>, f0: &DVector<f64>, opts: &OdeOptions) -> f64
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let d0 = scaled_norm(y0, y0, y0, opts);
    let d1 = scaled_norm(f0, y0, y0, opts);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(opts.max_step);
    let y1 = y0 + f0 * h0;
    let d2 = match rhs(t0 + h0, &y1) {
        Ok(f1) => scaled_norm(&(f1 - f0), y0, y0, opts) / h0,
        Err(_) => return h0 * 0.01,
    };
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(opts.max_step)
}

/// Integrates `y' = rhs(t, y)` from `times[0]`, reporting the state at every
/// entry of `times` through `observer.output`.
///
/// A failing right-hand side during a trial step rejects the step; the
/// failure is returned only if the step size collapses.
pub fn integrate<F, O>(mut rhs: F, y0: DVector<f64>, times: &[f64], opts: &OdeOptions, observer: &mut O) -> Result<()>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
    O: Observer,
{
    let Some(&t_start) = times.first() else {
        return Ok(());
    };
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::InvalidInput("rtol and atol must be positive".into()));
    }
    let mut t = t_start;
    let mut y = y0;
    observer.output(0, t, &y)?;
    if times.len() == 1 {
        return Ok(());
    }
    let mut k1 = rhs(t, &y)?;
    let mut h_prop = initial_step(&mut rhs, t, &y, &k1, opts);
    let mut steps = 0usize;
    let mut last_reject = false;
    let mut ks: Vec<DVector<f64>> = Vec::with_capacity(7);

    for (idx, &target) in times.iter().enumerate().skip(1) {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::StepFailure { t, reason: format!("exceeded {} steps", opts.max_steps) });
            }
            let h_min = 16.0 * f64::EPSILON * t.abs().max(1.0);
            let remaining = target - t;
            let mut h = h_prop.min(opts.max_step);
            let landing = remaining <= h * (1.0 + 1e-10);
            if landing {
                h = remaining;
            }

            ks.clear();
            ks.push(k1.clone());
            let mut stage_err: Option<Error> = None;
            let rows: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
            for (s, row) in rows.iter().enumerate() {
                let ys = combo(&y, h, row, &ks);
                match rhs(t + C[s + 1] * h, &ys) {
                    Ok(k) => ks.push(k),
                    Err(e) => {
                        stage_err = Some(e);
                        break;
                    }
                }
            }
            let mut y_new = None;
            if stage_err.is_none() {
                let yn = combo(&y, h, &B, &ks);
                match rhs(t + h, &yn) {
                    Ok(k7) => {
                        ks.push(k7);
                        y_new = Some(yn);
                    }
                    Err(e) => stage_err = Some(e),
                }
            }
            let Some(y_new) = y_new else {
                h_prop = h * 0.25;
                last_reject = true;
                if h_prop < h_min {
                    return Err(stage_err.unwrap());
                }
                continue;
            };
            let mut err_vec = DVector::zeros(y.len());
            for (e, k) in E.iter().zip(&ks) {
                if *e != 0.0 {
                    err_vec.axpy(h * e, k, 1.0);
                }
            }
            let err = scaled_norm(&err_vec, &y, &y_new, opts);
            if !err.is_finite() {
                h_prop = h * 0.25;
                last_reject = true;
                if h_prop < h_min {
                    return Err(Error::StepFailure { t, reason: "non-finite error estimate".into() });
                }
                continue;
            }
            if err <= 1.0 {
                steps += 1;
                t = if landing { target } else { t + h };
                y = y_new;
                k1 = ks.pop().unwrap();
                if observer.accepted(t, &mut y)? {
                    k1 = rhs(t, &y)?;
                }
                let mut fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if last_reject {
                    fac = fac.min(1.0);
                }
                last_reject = false;
                let next = h * fac;
                h_prop = if landing && h < h_prop { h_prop.max(next) } else { next };
            } else {
                h_prop = h * (0.9 * err.powf(-0.2)).max(0.2);
                last_reject = true;
                if h_prop < h_min {
                    return Err(Error::StepFailure { t, reason: format!("step size fell below {h_min:.3e}") });
                }
            }
        }
        observer.output(idx, t, &y)?;
    }
    Ok(())
}

/// Collects the state at every output time.
#[derive(Debug, Default)]
pub struct Collect(pub Vec<DVector<f64>>);

impl Observer for Collect {
    fn output(&mut self, _k: usize, _t: f64, y: &DVector<f64>) -> Result<()> {
        self.0.push(y.clone());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.3).collect();
        let mut out = Collect::default();
        let opts = OdeOptions { rtol: 1e-12, atol: 1e-12, ..Default::default() };
        integrate(|_, y| Ok(y.clone()), DVector::from_element(1, 1.0), &times, &opts, &mut out).unwrap();
        for (t, y) in times.iter().zip(&out.0) {
            assert!((y[0] - t.exp()).abs() < 1e-10 * t.exp());
        }
    }

    #[test]
    fn harmonic_oscillator_lands_on_grid() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let mut out = Collect::default();
        let opts = OdeOptions::default();
        integrate(
            |_, y| Ok(DVector::from_vec(vec![y[1], -y[0]])),
            DVector::from_vec(vec![1.0, 0.0]),
            &times,
            &opts,
            &mut out,
        )
        .unwrap();
        assert_eq!(out.0.len(), times.len());
        for (t, y) in times.iter().zip(&out.0) {
            assert!((y[0] - t.cos()).abs() < 1e-8, "t={t} err={}", y[0] - t.cos());
        }
    }

    #[test]
    fn stage_failure_shrinks_step() {
        // rhs refuses y < 0.5; decay towards 0 must eventually fail
        let times = [0.0, 10.0];
        let mut out = Collect::default();
        let res = integrate(
            |t, y: &DVector<f64>| {
                if y[0] < 0.5 {
                    Err(Error::Collision { t })
                } else {
                    Ok(-y.clone())
                }
            },
            DVector::from_element(1, 1.0),
            &times,
            &OdeOptions::default(),
            &mut out,
        );
        assert!(res.is_err());
    }
}
