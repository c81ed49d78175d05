//! The two solvers and the quantities they share.
//!
//! * [`cone_solve`]: radial Kepler orbit `r(t)`, `u̇ = 1/r²`, and
//!   `q(t) = r(t) exp(u(t) ξ) w`, with the colour transported along `q(t)`.
//! * [`integrate_reduced`]: the second-order system on `ℝⁿ∖{0}`
//!   `q̈ = -q/r³ + |φ|² q/r⁴ + (φ · F(·, q̇))♯`, `φ̇ = -[A(q̇), φ]`.
//!
//! Both start from the same Cauchy data: `q(0) = r₀ w`,
//! `q̇(0) = p_r₀ w + ξ w / r₀` and `φ(0)` from [`crate::monopole::phi_initial`].

mod cone;
mod coupling;
pub mod ode;
pub mod radial;
mod reduced;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use cone::{closed_form_phi, cone_solve};
pub use coupling::{cotangent_lift, hamiltonian_adjoint, minimal_coupling};
pub use radial::{
    effective_potential, effective_potential_with, radial_energy, radial_period, radial_solve, turning_points,
    u_solve, Centrifugal, Method, RadialSolution, SolverSettings, TurningPoints,
};
pub use reduced::{integrate_reduced, integrate_reduced_in, reduced_rhs, ReducedRhs};

use crate::error::{Error, Result};
use crate::liealg::{Rotation, SkewMatrix};
use crate::monopole::{AdjointVector, Gauge, GaugeAtlas, DEFAULT_CAP_ANGLE};

/// Phase point `(r, p_r, g, ξ)` on the cotangent bundle of the cone; `xi` is
/// the left-trivialised (body) momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeState {
    pub r: f64,
    pub pr: f64,
    pub g: Rotation,
    pub xi: SkewMatrix,
}

/// Phase point `(q, q̇, φ)` of the reduced system in a fixed gauge.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    pub q: DVector<f64>,
    pub v: DVector<f64>,
    pub phi: AdjointVector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conserved {
    pub energy: f64,
    pub casimir: f64,
}

impl ConeState {
    /// `H = ½(p_r² + |ξ|²/r²) - 1/r`; the Casimir is the squared vertical part
    /// of the body momentum, which is `|φ|²` after reduction.
    pub fn conserved(&self) -> Result<Conserved> {
        if !(self.r > 0.0) {
            return Err(Error::InvalidInput("r must be positive".into()));
        }
        Ok(Conserved {
            energy: radial_energy(self.r, self.pr, self.xi.norm_sq()),
            casimir: crate::liealg::vertical(&self.xi).norm_sq(),
        })
    }

    /// Bundle projection `r g e_pole`.
    pub fn position(&self) -> DVector<f64> {
        self.g.pole_image() * self.r
    }
}

/// `H = ½(|v|² + |φ|²/r²) - 1/r`.
pub fn reduced_energy(q: &DVector<f64>, v: &DVector<f64>, phi: &AdjointVector) -> f64 {
    let r = q.norm();
    0.5 * (v.norm_squared() + phi.norm_sq() / (r * r)) - 1.0 / r
}

impl ReducedState {
    pub fn conserved(&self) -> Result<Conserved> {
        if self.q.norm() == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(Conserved { energy: reduced_energy(&self.q, &self.v, &self.phi), casimir: self.phi.norm_sq() })
    }
}

/// Fault switches used by the verification harness to prove that its checks
/// can fail. Production runs use the default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelVariant {
    pub centrifugal: Centrifugal,
    /// Multiplies the monopole force; `-1.0` flips the curvature sign.
    pub curvature_sign: f64,
}

impl Default for ModelVariant {
    fn default() -> Self {
        ModelVariant { centrifugal: Centrifugal::Hamiltonian, curvature_sign: 1.0 }
    }
}

/// Full problem description shared by both solvers.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub xi: SkewMatrix,
    /// Unit initial direction `w = g₀ e_pole`.
    pub w: DVector<f64>,
    /// Initial frame; defaults to the gauge section over `w`.
    pub g0: Option<Rotation>,
    pub r0: f64,
    pub pr0: f64,
    pub t_span: (f64, f64),
    /// Sample spacing; defaults to a 256th of the radial period.
    pub output_step: Option<f64>,
    pub solver: SolverSettings,
    pub cap_angle: f64,
    pub variant: ModelVariant,
}

impl Scenario {
    /// Scenario with default solver settings and cap angle.
    pub fn new(xi: SkewMatrix, w: DVector<f64>, r0: f64, pr0: f64, t_span: (f64, f64)) -> Self {
        Scenario {
            xi,
            w,
            g0: None,
            r0,
            pr0,
            t_span,
            output_step: None,
            solver: SolverSettings::default(),
            cap_angle: DEFAULT_CAP_ANGLE,
            variant: ModelVariant::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.xi.dim()
    }

    pub fn mu2(&self) -> f64 {
        self.xi.norm_sq()
    }

    /// Energy of the initial data.
    pub fn energy(&self) -> f64 {
        radial_energy(self.r0, self.pr0, self.mu2())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        if self.w.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: self.w.len() });
        }
        if !((self.w.norm() - 1.0).abs() <= 1e-12) {
            return Err(Error::InvalidInput(format!("w must be a unit vector (|w| = {})", self.w.norm())));
        }
        if let Some(g0) = &self.g0 {
            if g0.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: g0.dim() });
            }
            if (g0.pole_image() - &self.w).amax() > 1e-12 {
                return Err(Error::InvalidInput("g0 must map the pole to w".into()));
            }
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(Error::InvalidInput(format!("r0 must be positive, got {}", self.r0)));
        }
        if !self.pr0.is_finite() {
            return Err(Error::InvalidInput("pr0 must be finite".into()));
        }
        let (a, b) = self.t_span;
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidInput(format!("t_span must satisfy t0 < t1, got [{a}, {b}]")));
        }
        if let Some(dt) = self.output_step {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidInput(format!("output_step must be positive, got {dt}")));
            }
        }
        if !(self.solver.rtol > 0.0 && self.solver.atol > 0.0) {
            return Err(Error::InvalidInput("rtol and atol must be positive".into()));
        }
        if !(self.cap_angle > 0.0 && self.cap_angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidInput(format!("cap_angle must lie in (0, π/2), got {}", self.cap_angle)));
        }
        Ok(())
    }

    pub fn atlas(&self) -> GaugeAtlas {
        GaugeAtlas::standard(self.n(), self.cap_angle)
    }

    /// `g₀`, or the standard section over `w` when none was given.
    pub fn frame0(&self) -> Result<Rotation> {
        match &self.g0 {
            Some(g) => Ok(g.clone()),
            None => {
                let atlas = self.atlas();
                let chart = atlas.preferred_chart(&self.w);
                Ok(atlas.gauge(chart).section(&self.w)?.section)
            }
        }
    }

    /// Radial period of the initial data, if the orbit is bounded.
    pub fn radial_period(&self) -> Option<f64> {
        radial_period(self.energy(), self.mu2()).ok()
    }

    /// Sample times from `t0` to `t1`; the last interval may be shorter.
    pub fn time_grid(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let dt = match self.output_step {
            Some(dt) => dt,
            None => match self.radial_period() {
                Some(p) => p / 256.0,
                None => (self.t_span.1 - self.t_span.0) / 256.0,
            },
        };
        Ok(time_grid(self.t_span.0, self.t_span.1, dt))
    }

    /// Initial reduced state in the preferred chart at `q(0)`.
    pub fn initial_reduced(&self, atlas: &GaugeAtlas) -> Result<ReducedState> {
        let q = &self.w * self.r0;
        let v = &self.w * self.pr0 + self.xi.apply(&self.w) / self.r0;
        let phi = crate::monopole::phi_initial(atlas, &self.xi, &q)?;
        Ok(ReducedState { q, v, phi })
    }

    /// Initial cone state `(r₀, p_r₀, g₀, g₀ᵀ ξ g₀)`.
    pub fn initial_cone(&self) -> Result<ConeState> {
        let g = self.frame0()?;
        let xi = self.xi.conjugate_inv(&g)?;
        Ok(ConeState { r: self.r0, pr: self.pr0, g, xi })
    }

    /// Stable identifier of the physical and numerical inputs.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        let mut put = |x: f64| h.update(x.to_bits().to_le_bytes());
        put(self.n() as f64);
        for (_, _, c) in self.xi.coefficients() {
            put(c);
        }
        self.w.iter().for_each(|&x| put(x));
        if let Some(g) = &self.g0 {
            g.matrix().iter().for_each(|&x| put(x));
        }
        for x in [self.r0, self.pr0, self.t_span.0, self.t_span.1, self.output_step.unwrap_or(-1.0)] {
            put(x);
        }
        put(match self.solver.method {
            Method::Rk54 => 0.0,
            Method::VerletRadial => 1.0,
        });
        for x in [self.solver.rtol, self.solver.atol, self.solver.max_step.unwrap_or(-1.0), self.cap_angle] {
            put(x);
        }
        let digest = h.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Default gauge used to express results.
    pub fn gauge(&self) -> Gauge {
        Gauge::standard(self.n())
    }
}

pub fn time_grid(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let span = t1 - t0;
    let m = (span / dt - 1e-9).ceil().max(1.0) as usize;
    let mut out: Vec<f64> = (0..m).map(|k| t0 + k as f64 * dt).collect();
    out.push(t1);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Cone,
    Reduced,
}

/// One time-stamped sample. `phi` is expressed in the preferred chart at `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub r: f64,
    pub pr: f64,
    pub u: f64,
    pub q: DVector<f64>,
    pub v: DVector<f64>,
    pub phi: AdjointVector,
    pub energy: f64,
    pub casimir: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub solver: SolverKind,
    pub scenario_hash: String,
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub n: usize,
    pub samples: Vec<Sample>,
    /// Upstairs states, only produced by the cone solver.
    pub cone_states: Option<Vec<ConeState>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn positions(&self) -> Vec<DVector<f64>> {
        self.samples.iter().map(|s| s.q.clone()).collect()
    }

    /// `max_t |E(t) - E(0)|`.
    pub fn energy_drift(&self) -> f64 {
        drift(self.samples.iter().map(|s| s.energy))
    }

    /// `max_t | |φ(t)|² - |φ(0)|² |`.
    pub fn casimir_drift(&self) -> f64 {
        drift(self.samples.iter().map(|s| s.casimir))
    }
}

fn drift(mut values: impl Iterator<Item = f64>) -> f64 {
    let Some(first) = values.next() else { return 0.0 };
    values.map(|v| (v - first).abs()).fold(0.0, f64::max)
}
