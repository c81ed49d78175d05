use std::cell::Cell;

use nalgebra::DVector;

use super::ode::{integrate, Observer};
use super::{reduced_energy, ModelVariant, ReducedState, Sample, Scenario, SolverKind, Trajectory, TrajectoryMeta};
use crate::error::{Error, Result};
use crate::liealg::{bracket, inner};
use crate::monopole::{vertical_len, AdjointVector, Chart, Gauge, GaugeAtlas};

/// Time derivative of a reduced state.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedRhs {
    pub dq: DVector<f64>,
    pub dv: DVector<f64>,
    pub dphi: AdjointVector,
}

/// Right-hand side of the reduced system in `gauge`:
///
/// ```text
/// q̇ = v
/// v̇_j = -q_j/r³ + |φ|² q_j/r⁴ + ⟨φ, F(e_j, v)⟩
/// φ̇ = -[A(v), φ]
/// ```
pub fn reduced_rhs(gauge: &Gauge, state: &ReducedState) -> Result<ReducedRhs> {
    rhs_with(gauge, state, &ModelVariant::default())
}

pub(crate) fn rhs_with(gauge: &Gauge, state: &ReducedState, variant: &ModelVariant) -> Result<ReducedRhs> {
    let (q, v, phi) = (&state.q, &state.v, &state.phi);
    let r = q.norm();
    if r == 0.0 {
        return Err(Error::ZeroVector);
    }
    let jet = gauge.jet(q)?;
    let r3 = r * r * r;
    let mut dv = q * (-1.0 / r3 + phi.norm_sq() / (r3 * r));
    if phi.norm_sq() > 0.0 {
        // ⟨φ, F(e_j, v)⟩ = -⟨φ, [H_j, H_v]⟩ = -⟨H_j, [H_v, φ]⟩
        let twist = bracket(&jet.horizontal(v), phi.value())?;
        for (j, mc) in jet.maurer_cartan.iter().enumerate() {
            let hj = crate::liealg::horizontal(mc);
            dv[j] -= variant.curvature_sign * inner(&hj, &twist)?;
        }
    }
    let a = jet.connection(v);
    let dphi = AdjointVector::project(&bracket(a.value(), phi.value())?.scale(-1.0));
    Ok(ReducedRhs { dq: v.clone(), dv, dphi })
}

// state layout: [q (n), v (n), u, φ coefficients]
fn pack(s: &ReducedState, u: f64) -> DVector<f64> {
    let n = s.q.len();
    let coeffs = s.phi.coeffs();
    let mut y = DVector::zeros(2 * n + 1 + coeffs.len());
    y.rows_mut(0, n).copy_from(&s.q);
    y.rows_mut(n, n).copy_from(&s.v);
    y[2 * n] = u;
    for (k, c) in coeffs.iter().enumerate() {
        y[2 * n + 1 + k] = *c;
    }
    y
}

fn unpack(n: usize, y: &DVector<f64>) -> Result<(ReducedState, f64)> {
    let q = y.rows(0, n).into_owned();
    let v = y.rows(n, n).into_owned();
    let phi = AdjointVector::from_coeffs(n, y.rows(2 * n + 1, vertical_len(n)).as_slice())?;
    Ok((ReducedState { q, v, phi }, y[2 * n]))
}

fn write_phi(n: usize, y: &mut DVector<f64>, phi: &AdjointVector) {
    for (k, c) in phi.coeffs().iter().enumerate() {
        y[2 * n + 1 + k] = *c;
    }
}

struct ReducedObserver<'a> {
    n: usize,
    atlas: &'a GaugeAtlas,
    chart: &'a Cell<Chart>,
    r_stop: f64,
    casimir: f64,
    samples: Vec<Sample>,
}

impl Observer for ReducedObserver<'_> {
    fn accepted(&mut self, t: f64, y: &mut DVector<f64>) -> Result<bool> {
        let q = y.rows(0, self.n).into_owned();
        if q.norm() < self.r_stop {
            return Err(Error::Collision { t });
        }
        let (state, _) = unpack(self.n, y)?;
        let mut phi = state.phi;
        let chart = self.chart.get();
        let next = self.atlas.next_chart(chart, &q, t)?;
        if next != chart {
            phi = self.atlas.convert(&phi, chart, next, &q)?;
            self.chart.set(next);
        }
        // project back onto the Casimir level set
        let norm_sq = phi.norm_sq();
        if norm_sq > 0.0 {
            phi = phi.scale((self.casimir / norm_sq).sqrt());
        }
        write_phi(self.n, y, &phi);
        Ok(true)
    }

    fn output(&mut self, _k: usize, t: f64, y: &DVector<f64>) -> Result<()> {
        let (state, u) = unpack(self.n, y)?;
        let report = self.atlas.preferred_chart(&state.q);
        let phi = self.atlas.convert(&state.phi, self.chart.get(), report, &state.q)?;
        let r = state.q.norm();
        self.samples.push(Sample {
            t,
            r,
            pr: state.q.dot(&state.v) / r,
            u,
            energy: reduced_energy(&state.q, &state.v, &phi),
            casimir: phi.norm_sq(),
            q: state.q,
            v: state.v,
            phi,
        });
        Ok(())
    }
}

/// Adaptive Dormand–Prince integration of the reduced system.
///
/// Integration proceeds in one chart of the scenario's atlas and switches to
/// the other whenever the position enters the cap around the current string.
/// After each accepted step `φ` is rescaled to its initial norm, which the
/// exact flow preserves. Samples report `φ` in the preferred chart at each
/// position.
pub fn integrate_reduced(s: &Scenario, times: &[f64]) -> Result<Trajectory> {
    s.validate()?;
    let atlas = s.atlas();
    let init = s.initial_reduced(&atlas)?;
    integrate_reduced_in(s, times, &atlas, init)
}

/// [`integrate_reduced`] in a given atlas from a given initial state, whose
/// colour must be expressed in the atlas' preferred chart at `init.q`.
pub fn integrate_reduced_in(s: &Scenario, times: &[f64], atlas: &GaugeAtlas, init: ReducedState) -> Result<Trajectory> {
    let n = s.n();
    if init.q.len() != n || init.v.len() != n || init.phi.dim() != n || atlas.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: init.q.len() });
    }
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("time grid must be nonempty and strictly increasing".into()));
    }
    let chart = Cell::new(atlas.preferred_chart(&init.q));
    let variant = s.variant;
    let rhs = |_t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        let (state, _) = unpack(n, y)?;
        let d = rhs_with(atlas.gauge(chart.get()), &state, &variant)?;
        let r = state.q.norm();
        let mut dy = DVector::zeros(y.len());
        dy.rows_mut(0, n).copy_from(&d.dq);
        dy.rows_mut(n, n).copy_from(&d.dv);
        dy[2 * n] = 1.0 / (r * r);
        write_phi(n, &mut dy, &d.dphi);
        Ok(dy)
    };
    let mut obs = ReducedObserver { n, atlas, chart: &chart, r_stop: s.solver.r_stop, casimir: init.phi.norm_sq(), samples: Vec::new() };
    integrate(rhs, pack(&init, 0.0), times, &s.solver.ode_options(), &mut obs)?;
    Ok(Trajectory {
        n,
        samples: obs.samples,
        cone_states: None,
        meta: TrajectoryMeta {
            solver: SolverKind::Reduced,
            scenario_hash: s.hash(),
            method: super::Method::Rk54,
            rtol: s.solver.rtol,
            atol: s.solver.atol,
        },
    })
}
