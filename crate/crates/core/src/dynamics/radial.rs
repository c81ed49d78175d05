//! Radial Kepler motion with a centrifugal barrier.
//!
//! With `μ² = |ξ|²` the radial Hamiltonian is `½ p_r² + V(r)`,
//! `V(r) = -1/r + μ²/(2r²)`, and the polar angle of the cone solution is
//! driven by `u̇ = 1/r²`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::ode::{integrate, Observer, OdeOptions};
use crate::error::{Error, Result};

/// Form of the centrifugal term used by the radial equation.
///
/// `Doubled` (`μ²/r²`) exists only to demonstrate that it breaks
/// agreement with the reduced system; every solver defaults to `Hamiltonian`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Centrifugal {
    #[default]
    Hamiltonian,
    Doubled,
}

impl Centrifugal {
    fn weight(self) -> f64 {
        match self {
            Centrifugal::Hamiltonian => 0.5,
            Centrifugal::Doubled => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Rk54,
    VerletRadial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    pub max_step: Option<f64>,
    /// Radius below which integration halts with a collision.
    pub r_stop: f64,
}

pub const DEFAULT_R_STOP: f64 = 1e-8;

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { method: Method::Rk54, rtol: 1e-10, atol: 1e-10, max_step: None, r_stop: DEFAULT_R_STOP }
    }
}

impl SolverSettings {
    pub(crate) fn ode_options(&self) -> OdeOptions {
        OdeOptions { rtol: self.rtol, atol: self.atol, max_step: self.max_step.unwrap_or(f64::INFINITY), ..Default::default() }
    }
}

/// `-1/r + μ²/(2r²)`.
pub fn effective_potential(r: f64, mu2: f64) -> Result<f64> {
    effective_potential_with(r, mu2, Centrifugal::Hamiltonian)
}

pub fn effective_potential_with(r: f64, mu2: f64, form: Centrifugal) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {r}")));
    }
    Ok(-1.0 / r + form.weight() * mu2 / (r * r))
}

/// `-V'(r)`.
fn radial_force(r: f64, mu2: f64, form: Centrifugal) -> f64 {
    -1.0 / (r * r) + 2.0 * form.weight() * mu2 / (r * r * r)
}

/// `d/dr (-V'(r))`.
fn radial_force_slope(r: f64, mu2: f64, form: Centrifugal) -> f64 {
    2.0 / (r * r * r) - 6.0 * form.weight() * mu2 / (r * r * r * r)
}

pub fn radial_energy(r: f64, pr: f64, mu2: f64) -> f64 {
    0.5 * pr * pr + 0.5 * mu2 / (r * r) - 1.0 / r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoints {
    pub r_min: f64,
    /// `f64::INFINITY` when the orbit is unbounded (`E ≥ 0`).
    pub r_max: f64,
}

impl TurningPoints {
    pub fn bounded(&self) -> bool {
        self.r_max.is_finite()
    }
}

/// Roots of `E = V(r)`, solved as a quadratic in `1/r` in cancellation-free form.
pub fn turning_points(energy: f64, mu2: f64) -> Result<TurningPoints> {
    if !(mu2 > 0.0) {
        return Err(Error::CollisionOrbit);
    }
    let minimum = -0.5 / mu2;
    let disc = 1.0 + 2.0 * energy * mu2;
    if disc < 0.0 {
        return Err(Error::BelowPotentialMinimum { energy, minimum });
    }
    let d = disc.sqrt();
    let r_min = mu2 / (1.0 + d);
    let r_max = if energy < 0.0 { (1.0 + d) / (-2.0 * energy) } else { f64::INFINITY };
    Ok(TurningPoints { r_min, r_max })
}

/// Period of the radial oscillation, `2∫ dr / √(2(E - V))` between the
/// turning points.
///
/// The substitution `r = m + d cos θ` removes the endpoint singularities and
/// leaves a smooth periodic integrand, summed with the trapezoidal rule.
pub fn radial_period(energy: f64, mu2: f64) -> Result<f64> {
    let tp = turning_points(energy, mu2)?;
    if !tp.bounded() {
        return Err(Error::InvalidInput(format!("energy {energy} gives an unbounded orbit")));
    }
    let m = 0.5 * (tp.r_min + tp.r_max);
    let d = 0.5 * (tp.r_max - tp.r_min);
    // E - V(r) = |E| (r - r_min)(r_max - r) / r²
    let k = 64;
    let h = std::f64::consts::PI / k as f64;
    let sum: f64 = (0..=k)
        .map(|i| {
            let w = if i == 0 || i == k { 0.5 } else { 1.0 };
            w * (m + d * (h * i as f64).cos())
        })
        .sum();
    Ok(2.0 * h * sum / (-2.0 * energy).sqrt())
}

/// Radial solution sampled on a grid, with the quintic Hermite dense output
/// built from the equations of motion.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub times: Vec<f64>,
    pub r: Vec<f64>,
    pub pr: Vec<f64>,
    pub u: Vec<f64>,
    pub mu2: f64,
    pub form: Centrifugal,
}

fn quintic_hermite(s: f64, h: f64, f0: f64, d0: f64, s0: f64, f1: f64, d1: f64, s1: f64) -> (f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
    let h3 = 0.5 * s3 - s4 + 0.5 * s5;
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let value = h0 * f0 + h1 * h * d0 + h2 * h * h * s0 + h3 * h * h * s1 + h4 * h * d1 + h5 * f1;
    // derivatives of the basis with respect to s
    let g0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let g1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let g2 = s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4;
    let g3 = 1.5 * s2 - 4.0 * s3 + 2.5 * s4;
    let g4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let g5 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
    let slope = (g0 * f0 + g1 * h * d0 + g2 * h * h * s0 + g3 * h * h * s1 + g4 * h * d1 + g5 * f1) / h;
    (value, slope)
}

impl RadialSolution {
    /// `(r, p_r, u)` at any `t` inside the sampled range.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let n = self.times.len();
        if n == 1 {
            return (self.r[0], self.pr[0], self.u[0]);
        }
        let k = match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            k => (k - 1).min(n - 2),
        };
        let h = self.times[k + 1] - self.times[k];
        let s = (t - self.times[k]) / h;
        let (r0, p0, u0) = (self.r[k], self.pr[k], self.u[k]);
        let (r1, p1, u1) = (self.r[k + 1], self.pr[k + 1], self.u[k + 1]);
        let f = |r: f64| radial_force(r, self.mu2, self.form);
        let df = |r: f64| radial_force_slope(r, self.mu2, self.form);
        let (r, _) = quintic_hermite(s, h, r0, p0, f(r0), r1, p1, f(r1));
        let (p, _) = quintic_hermite(s, h, p0, f(r0), df(r0) * p0, p1, f(r1), df(r1) * p1);
        let (u, _) = quintic_hermite(
            s,
            h,
            u0,
            1.0 / (r0 * r0),
            -2.0 * p0 / (r0 * r0 * r0),
            u1,
            1.0 / (r1 * r1),
            -2.0 * p1 / (r1 * r1 * r1),
        );
        (r, p, u)
    }
}

struct RadialObserver<'a> {
    r_stop: f64,
    out: &'a mut RadialSolution,
}

impl Observer for RadialObserver<'_> {
    fn accepted(&mut self, t: f64, y: &mut DVector<f64>) -> Result<bool> {
        if y[0] < self.r_stop {
            return Err(Error::Collision { t });
        }
        Ok(false)
    }

    fn output(&mut self, _k: usize, t: f64, y: &DVector<f64>) -> Result<()> {
        self.out.times.push(t);
        self.out.r.push(y[0]);
        self.out.pr.push(y[1]);
        self.out.u.push(y[2]);
        Ok(())
    }
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidInput("empty time grid".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("time grid must increase strictly".into()));
    }
    Ok(())
}

/// Integrates `ṙ = p_r`, `ṗ_r = -V'(r)`, `u̇ = 1/r²` with `u(times[0]) = 0`.
pub fn radial_solve(
    r0: f64,
    pr0: f64,
    mu2: f64,
    times: &[f64],
    settings: &SolverSettings,
    form: Centrifugal,
) -> Result<RadialSolution> {
    if !(r0 > 0.0) {
        return Err(Error::InvalidInput(format!("r0 must be positive, got {r0}")));
    }
    if !(mu2 >= 0.0) {
        return Err(Error::InvalidInput(format!("mu2 must be nonnegative, got {mu2}")));
    }
    check_grid(times)?;
    let mut sol = RadialSolution {
        times: Vec::with_capacity(times.len()),
        r: Vec::with_capacity(times.len()),
        pr: Vec::with_capacity(times.len()),
        u: Vec::with_capacity(times.len()),
        mu2,
        form,
    };
    match settings.method {
        Method::Rk54 => {
            let rhs = |t: f64, y: &DVector<f64>| {
                let r = y[0];
                if !(r > 0.0) || !r.is_finite() {
                    return Err(Error::Collision { t });
                }
                Ok(DVector::from_vec(vec![y[1], radial_force(r, mu2, form), 1.0 / (r * r)]))
            };
            let mut obs = RadialObserver { r_stop: settings.r_stop, out: &mut sol };
            integrate(rhs, DVector::from_vec(vec![r0, pr0, 0.0]), times, &settings.ode_options(), &mut obs)?;
        }
        Method::VerletRadial => verlet(r0, pr0, mu2, times, settings, form, &mut sol)?,
    }
    Ok(sol)
}

/// Velocity Verlet for `(r, p_r)` with trapezoidal accumulation of `u`.
fn verlet(
    r0: f64,
    pr0: f64,
    mu2: f64,
    times: &[f64],
    settings: &SolverSettings,
    form: Centrifugal,
    sol: &mut RadialSolution,
) -> Result<()> {
    let (mut r, mut p, mut u) = (r0, pr0, 0.0);
    let mut t = times[0];
    sol.times.push(t);
    sol.r.push(r);
    sol.pr.push(p);
    sol.u.push(u);
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let max_step = settings.max_step.unwrap_or(span / 16.0);
        let m = (span / max_step).ceil().max(1.0) as usize;
        let h = span / m as f64;
        for i in 0..m {
            let a = radial_force(r, mu2, form);
            let p_half = p + 0.5 * h * a;
            let r_new = r + h * p_half;
            t = w[0] + h * (i + 1) as f64;
            if !(r_new >= settings.r_stop) || !r_new.is_finite() {
                return Err(Error::Collision { t });
            }
            p = p_half + 0.5 * h * radial_force(r_new, mu2, form);
            u += 0.5 * h * (1.0 / (r * r) + 1.0 / (r_new * r_new));
            r = r_new;
        }
        sol.times.push(w[1]);
        sol.r.push(r);
        sol.pr.push(p);
        sol.u.push(u);
    }
    Ok(())
}

/// `u(t) = ∫ dt / r²` from samples, `u(times[0]) = 0`.
///
/// Each interval integrates the cubic through the four nearest samples with
/// three-point Gauss quadrature (exact for that cubic), giving a fourth-order
/// rule on non-uniform grids. Two or three samples fall back to lower degree.
pub fn u_solve(times: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    check_grid(times)?;
    if times.len() != r.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: r.len() });
    }
    if r.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidInput("radius samples must be positive".into()));
    }
    let f: Vec<f64> = r.iter().map(|x| 1.0 / (x * x)).collect();
    let n = times.len();
    let mut u = vec![0.0; n];
    let nodes = [(-0.774_596_669_241_483_4, 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.774_596_669_241_483_4, 5.0 / 9.0)];
    for k in 0..n.saturating_sub(1) {
        let width = 4.min(n);
        let lo = k.saturating_sub(1).min(n - width);
        let stencil = lo..lo + width;
        let (a, b) = (times[k], times[k + 1]);
        let mut acc = 0.0;
        for &(x, wgt) in &nodes {
            let tau = 0.5 * (a + b) + 0.5 * (b - a) * x;
            // Lagrange interpolation through the stencil
            let mut val = 0.0;
            for i in stencil.clone() {
                let mut li = 1.0;
                for j in stencil.clone() {
                    if i != j {
                        li *= (tau - times[j]) / (times[i] - times[j]);
                    }
                }
                val += li * f[i];
            }
            acc += wgt * val;
        }
        u[k + 1] = u[k] + 0.5 * (b - a) * acc;
    }
    Ok(u)
}
