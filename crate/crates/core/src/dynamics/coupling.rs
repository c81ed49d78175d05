use nalgebra::DVector;

use super::ConeState;
use crate::error::{Error, Result};
use crate::liealg::inner;
use crate::monopole::{AdjointVector, Gauge};

/// `π_i = p_i - ⟨φ, A_i(x)⟩` with `A_i` the connection along `e_i`.
pub fn minimal_coupling(gauge: &Gauge, x: &DVector<f64>, p: &DVector<f64>, phi: &AdjointVector) -> Result<DVector<f64>> {
    if p.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: p.len() });
    }
    if phi.dim() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: phi.dim() });
    }
    let jet = gauge.jet(x)?;
    let mut pi = p.clone();
    for (i, mc) in jet.maurer_cartan.iter().enumerate() {
        pi[i] -= inner(phi.value(), mc)?;
    }
    Ok(pi)
}

/// `H = ½(|π|² + |φ|²/r²) - 1/r` on the adjoint-bundle phase space.
pub fn hamiltonian_adjoint(x: &DVector<f64>, pi: &DVector<f64>, phi: &AdjointVector) -> Result<f64> {
    let r = x.norm();
    if r == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(0.5 * (pi.norm_squared() + phi.norm_sq() / (r * r)) - 1.0 / r)
}

/// Image of a cone state in `T*ℝⁿ × ad` under the gauge: position
/// `x = r g e_pole`, canonical momentum `p` and colour `φ`.
///
/// With `M = R(x)ᵀ (g ξ gᵀ) R(x)` the momentum is `p_i = p_r x̂_i + ⟨M, Ω_i⟩`
/// and `φ = vert M`, so `p - ⟨φ, A⟩` is the kinetic momentum.
pub fn cotangent_lift(gauge: &Gauge, state: &ConeState) -> Result<(DVector<f64>, DVector<f64>, AdjointVector)> {
    let x = state.position();
    let jet = gauge.jet(&x)?;
    let m = state.xi.conjugate(&state.g)?.conjugate_inv(&jet.point.section)?;
    let xhat = &x / state.r;
    let mut p = xhat * state.pr;
    for (i, mc) in jet.maurer_cartan.iter().enumerate() {
        p[i] += inner(&m, mc)?;
    }
    Ok((x, p, AdjointVector::project(&m)))
}
