use nalgebra::DVector;

use super::radial::{radial_energy, radial_solve, RadialSolution};
use super::{ConeState, Sample, Scenario, SolverKind, Trajectory, TrajectoryMeta};
use crate::error::Result;
use crate::liealg::{expm, SkewMatrix};
use crate::monopole::{parallel_transport, phi_initial, AdjointVector, GaugeAtlas, Path};

/// Magnus steps per output interval when transporting the colour.
const TRANSPORT_SUBSTEPS: usize = 8;

/// `q(t) = r(t) exp(u(t) ξ) w` evaluated from the radial dense output.
struct ConePath<'a> {
    radial: &'a RadialSolution,
    xi: &'a SkewMatrix,
    w: &'a DVector<f64>,
}

impl ConePath<'_> {
    fn state(&self, t: f64) -> (DVector<f64>, DVector<f64>) {
        let (r, pr, u) = self.radial.eval(t);
        let q = expm(&self.xi.scale(u)).apply(self.w) * r;
        let v = &q * (pr / r) + self.xi.apply(&q) / (r * r);
        (q, v)
    }
}

impl Path for ConePath<'_> {
    fn position(&self, t: f64) -> DVector<f64> {
        self.state(t).0
    }

    fn velocity(&self, t: f64) -> DVector<f64> {
        self.state(t).1
    }
}

/// Closed-form solution on the cone, projected to `ℝⁿ`.
///
/// The colour is parallel transported along the projected curve starting from
/// [`phi_initial`]; the upstairs states are `g(t) = exp(u(t) ξ) g₀` with the
/// constant body momentum `g₀ᵀ ξ g₀`.
pub fn cone_solve(s: &Scenario, times: &[f64]) -> Result<Trajectory> {
    s.validate()?;
    let mu2 = s.mu2();
    let radial = radial_solve(s.r0, s.pr0, mu2, times, &s.solver, s.variant.centrifugal)?;
    let atlas = s.atlas();
    let g0 = s.frame0()?;
    let xi_body = s.xi.conjugate_inv(&g0)?;

    let mut samples = Vec::with_capacity(times.len());
    let mut cone_states = Vec::with_capacity(times.len());
    for (k, &t) in radial.times.iter().enumerate() {
        let (r, pr, u) = (radial.r[k], radial.pr[k], radial.u[k]);
        let rot = expm(&s.xi.scale(u));
        let q = rot.apply(&s.w) * r;
        let v = &q * (pr / r) + s.xi.apply(&q) / (r * r);
        let g = rot.compose(&g0)?;
        cone_states.push(ConeState { r, pr, g, xi: xi_body.clone() });
        samples.push(Sample {
            t,
            r,
            pr,
            u,
            q,
            v,
            phi: AdjointVector::zeros(s.n()),
            energy: radial_energy(r, pr, mu2),
            casimir: 0.0,
        });
    }

    let path = ConePath { radial: &radial, xi: &s.xi, w: &s.w };
    let phi0 = phi_initial(&atlas, &s.xi, &samples[0].q)?;
    let phis = parallel_transport(&atlas, &phi0, &path, &radial.times, TRANSPORT_SUBSTEPS)?;
    for (sample, phi) in samples.iter_mut().zip(phis) {
        sample.casimir = phi.norm_sq();
        sample.phi = phi;
    }

    Ok(Trajectory {
        n: s.n(),
        samples,
        cone_states: Some(cone_states),
        meta: TrajectoryMeta {
            solver: SolverKind::Cone,
            scenario_hash: s.hash(),
            method: s.solver.method,
            rtol: s.solver.rtol,
            atol: s.solver.atol,
        },
    })
}

/// Colour of the cone solution read directly off the upstairs state:
/// `vert(R(q̂)ᵀ ξ R(q̂))` in the preferred chart.
pub fn closed_form_phi(atlas: &GaugeAtlas, state: &ConeState) -> Result<AdjointVector> {
    let q = state.position();
    let xi_space = state.xi.conjugate(&state.g)?;
    phi_initial(atlas, &xi_space, &q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::time_grid;
    use crate::liealg::wedge_basis;

    fn e(n: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    }

    #[test]
    fn great_circle() {
        let s = Scenario::new(wedge_basis(0, 2, 3).unwrap(), e(3, 2), 1.0, 0.0, (0.0, 10.0));
        let times = time_grid(0.0, 10.0, 0.1);
        let traj = cone_solve(&s, &times).unwrap();
        for smp in &traj.samples {
            let exact = e(3, 2) * smp.t.cos() - e(3, 0) * smp.t.sin();
            assert!((&smp.q - exact).amax() < 1e-8, "t={}", smp.t);
            assert!((smp.q.norm() - smp.r).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_generator_is_radial() {
        let w = DVector::from_vec(vec![0.6, 0.0, 0.8]);
        let s = Scenario::new(SkewMatrix::zeros(3), w.clone(), 1.0, 0.5, (0.0, 1.0));
        let traj = cone_solve(&s, &time_grid(0.0, 1.0, 0.05)).unwrap();
        for smp in &traj.samples {
            assert!((&smp.q - &w * smp.r).amax() < 1e-14);
            assert_eq!(smp.casimir, 0.0);
        }
    }

    #[test]
    fn transported_colour_matches_closed_form() {
        let xi = SkewMatrix::from_coefficients(4, &[(0, 1, 0.4), (0, 3, -0.9), (1, 2, 0.8), (2, 3, 0.5)]).unwrap();
        let w = DVector::from_vec(vec![0.5, -0.5, 0.5, 0.5]);
        let mut s = Scenario::new(xi, w, 1.5, 0.1, (0.0, 6.0));
        s.output_step = Some(0.05);
        let traj = cone_solve(&s, &s.time_grid().unwrap()).unwrap();
        let states = traj.cone_states.as_ref().unwrap();
        for (smp, st) in traj.samples.iter().zip(states) {
            let exact = closed_form_phi(&s.atlas(), st).unwrap();
            let err = (smp.phi.value().matrix() - exact.value().matrix()).amax();
            assert!(err < 1e-8, "t={} err={err}", smp.t);
            assert!((st.position() - &smp.q).amax() < 1e-12);
        }
    }

    #[test]
    fn horizontal_generator_has_no_colour() {
        let w = DVector::from_vec(vec![0.0, 0.6, 0.8]);
        // ξ = w ∧ a with a ⟂ w is horizontal over w
        let a = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let xi = SkewMatrix::outer_wedge(&w, &a).unwrap().scale(0.9);
        let s = Scenario::new(xi, w, 1.0, 0.2, (0.0, 8.0));
        let traj = cone_solve(&s, &s.time_grid().unwrap()).unwrap();
        assert!(traj.samples.iter().all(|smp| smp.phi.norm_sq().sqrt() < 1e-10));
    }
}
