//! Cross-validation of the two solvers and the geometric identities they rely
//! on.
//!
//! Every check records its value, threshold and direction, so a serialized
//! report can be re-judged without rerunning anything. Random inputs come
//! from a seeded ChaCha stream; sweeps may fan out over threads but results
//! are merged in a fixed order, so reports are bit-identical across runs.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    cone_solve, integrate_reduced, integrate_reduced_in, radial_period, turning_points, Centrifugal,
    Scenario, SolverKind, Trajectory,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::liealg::{expm, make_magnetic, wedge_basis, SkewMatrix};
use crate::monopole::{
    phi_initial, vertical_len, AdjointVector, Gauge, GaugeAtlas, GaugeTwist, TwistFactor,
};

pub const POSITION_TOL: f64 = 1e-6;
pub const ENERGY_DRIFT_TOL: f64 = 1e-8;
pub const CASIMIR_DRIFT_TOL: f64 = 1e-10;
pub const CURVATURE_TOL: f64 = 1e-6;
pub const CURVATURE_FD_STEP: f64 = 1e-4;
pub const HORIZONTAL_TOL: f64 = 1e-8;
pub const COVARIANCE_TOL: f64 = 1e-6;
pub const CLOSURE_TOL: f64 = 1e-12;
pub const SPEED_TOL: f64 = 1e-8;
pub const PLANARITY_TOL: f64 = 1e-8;
pub const CONIC_TOL: f64 = 1e-6;
pub const COLOUR_ZERO_TOL: f64 = 1e-10;
pub const ANNULUS_SLACK: f64 = 1e-6;
pub const COLLISION_TIME_TOL: f64 = 1e-6;
/// Position error an injected force-law fault must exceed.
pub const FAULT_THRESHOLD: f64 = 1e-2;

/// Deliberate corruptions used to show that each check can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    #[default]
    None,
    /// Flip the sign of the curvature (in the force law and in the FD check).
    CurvatureSign,
    /// Multiply the connection by 1.01.
    ScaledConnection,
    /// Forget to transform the initial colour under a gauge change.
    SkipColourTransform,
    /// Measure speeds with twice the inner product.
    ScaledMetric,
    /// Use `μ²/r²` instead of `μ²/(2r²)` in the radial potential.
    LiteralPotential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Below,
    Above,
}

/// One thresholded quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub passed: bool,
}

// JSON has no NaN or infinity; an unbounded value is recorded as f64::MAX.
fn finite(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::MAX
    }
}

impl Check {
    /// Passes when `value < tolerance`.
    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        let value = finite(value);
        Check { name: name.into(), value, tolerance, relation: Relation::Below, passed: value < tolerance }
    }

    /// Passes when `value > threshold`.
    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        let value = finite(value);
        Check { name: name.into(), value, tolerance: threshold, relation: Relation::Above, passed: value > threshold }
    }

    /// Whether `passed` agrees with `value`, `tolerance` and `relation`.
    pub fn is_consistent(&self) -> bool {
        let ok = match self.relation {
            Relation::Below => self.value < self.tolerance,
            Relation::Above => self.value > self.tolerance,
        };
        ok == self.passed
    }
}

/// Thresholds applied by [`compare_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub position: f64,
    pub energy_drift: f64,
    pub casimir_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { position: POSITION_TOL, energy_drift: ENERGY_DRIFT_TOL, casimir_drift: CASIMIR_DRIFT_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario_hash: String,
    pub n: usize,
    pub solvers: [SolverKind; 2],
    pub samples: usize,
    pub sup_error: f64,
    pub rms_error: f64,
    /// Largest difference of the colour samples (informational).
    pub colour_sup_error: f64,
    pub energy_drift: [f64; 2],
    pub casimir_drift: [f64; 2],
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0))
}

/// Cubic Hermite interpolation of positions from `(q, v)` samples.
fn resample_positions(traj: &Trajectory, times: &[f64]) -> Result<Vec<DVector<f64>>> {
    let ts = traj.times();
    if ts.len() < 2 {
        return Err(Error::InvalidInput("resampling needs at least two samples".into()));
    }
    let (lo, hi) = (ts[0], ts[ts.len() - 1]);
    times
        .iter()
        .map(|&t| {
            if t < lo - 1e-12 || t > hi + 1e-12 {
                return Err(Error::InvalidInput(format!("time {t} outside [{lo}, {hi}]")));
            }
            let k = match ts.partition_point(|&s| s <= t) {
                0 => 0,
                k => (k - 1).min(ts.len() - 2),
            };
            let (a, b) = (&traj.samples[k], &traj.samples[k + 1]);
            let h = b.t - a.t;
            let s = (t - a.t) / h;
            let (s2, s3) = (s * s, s * s * s);
            let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
            let h10 = s3 - 2.0 * s2 + s;
            let h01 = -2.0 * s3 + 3.0 * s2;
            let h11 = s3 - s2;
            Ok(&a.q * h00 + &a.v * (h10 * h) + &b.q * h01 + &b.v * (h11 * h))
        })
        .collect()
}

/// [`compare_with`] at the default tolerances.
pub fn compare_trajectories(a: &Trajectory, b: &Trajectory) -> Result<ComparisonReport> {
    compare_with(a, b, &Tolerances::default())
}

/// Position error of `b` against `a` on `a`'s time grid, plus drift of both.
///
/// Drift checks are applied to every trajectory that carries a colour, since
/// both solvers are expected to conserve energy and Casimir.
pub fn compare_with(a: &Trajectory, b: &Trajectory, tol: &Tolerances) -> Result<ComparisonReport> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch { expected: a.n, found: b.n });
    }
    let ta = a.times();
    let (qb, phib): (Vec<DVector<f64>>, Option<Vec<&AdjointVector>>) = if same_grid(&ta, &b.times()) {
        (b.positions(), Some(b.samples.iter().map(|s| &s.phi).collect()))
    } else {
        (resample_positions(b, &ta)?, None)
    };
    let mut sup = 0.0f64;
    let mut sum_sq = 0.0;
    for (sa, q) in a.samples.iter().zip(&qb) {
        let e = (&sa.q - q).norm();
        sup = sup.max(e);
        sum_sq += e * e;
    }
    let rms = (sum_sq / a.samples.len().max(1) as f64).sqrt();
    let colour = match phib {
        Some(ps) => a
            .samples
            .iter()
            .zip(ps)
            .map(|(sa, p)| (sa.phi.value().matrix() - p.value().matrix()).amax())
            .fold(0.0, f64::max),
        None => 0.0,
    };
    let drift_e = [a.energy_drift(), b.energy_drift()];
    let drift_c = [a.casimir_drift(), b.casimir_drift()];
    let mut checks = vec![Check::below("sup position error", sup, tol.position)];
    for (traj, (de, dc)) in [a, b].iter().zip(drift_e.iter().zip(&drift_c)) {
        let label = match traj.meta.solver {
            SolverKind::Cone => "cone",
            SolverKind::Reduced => "reduced",
        };
        checks.push(Check::below(format!("{label} energy drift"), *de, tol.energy_drift));
        checks.push(Check::below(format!("{label} casimir drift"), *dc, tol.casimir_drift));
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(ComparisonReport {
        scenario_hash: a.meta.scenario_hash.clone(),
        n: a.n,
        solvers: [a.meta.solver, b.meta.solver],
        samples: a.samples.len(),
        sup_error: finite(sup),
        rms_error: finite(rms),
        colour_sup_error: finite(colour),
        energy_drift: drift_e.map(finite),
        casimir_drift: drift_c.map(finite),
        checks,
        passed,
    })
}

/// Cone and reduced trajectories for `s` over `[t0, t0 + periods·T_radial]`,
/// with an optional injected fault.
pub fn solve_pair(s: &Scenario, periods: f64, fault: Fault) -> Result<(Trajectory, Trajectory)> {
    let period = radial_period(s.energy(), s.mu2())?;
    let mut s = s.clone();
    s.t_span = (s.t_span.0, s.t_span.0 + periods * period);
    let times = s.time_grid()?;
    let mut cone = s.clone();
    let mut reduced = s.clone();
    match fault {
        Fault::LiteralPotential => cone.variant.centrifugal = Centrifugal::Doubled,
        Fault::CurvatureSign => reduced.variant.curvature_sign = -1.0,
        _ => {}
    }
    Ok((cone_solve(&cone, &times)?, integrate_reduced(&reduced, &times)?))
}

/// Cone solution as the oracle for the reduced one.
pub fn compare_scenario(s: &Scenario, periods: f64, fault: Fault) -> Result<ComparisonReport> {
    let (cone, reduced) = solve_pair(s, periods, fault)?;
    compare_trajectories(&cone, &reduced)
}

/// Distance of the farthest sample from `span{a, b}`.
pub fn planarity_residual(traj: &Trajectory, a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
    if a.len() != traj.n || b.len() != traj.n {
        return Err(Error::DimensionMismatch { expected: traj.n, found: a.len() });
    }
    let an = a.norm();
    if an == 0.0 {
        return Err(Error::InvalidInput("degenerate plane: first vector is zero".into()));
    }
    let e1 = a / an;
    let b_perp = b - &e1 * e1.dot(b);
    if b_perp.norm() <= 1e-12 * b.norm().max(an) {
        return Err(Error::InvalidInput("degenerate plane: spanning vectors are parallel".into()));
    }
    let e2 = &b_perp / b_perp.norm();
    Ok(traj
        .samples
        .iter()
        .map(|s| (&s.q - &e1 * e1.dot(&s.q) - &e2 * e2.dot(&s.q)).norm())
        .fold(0.0, f64::max))
}

/// Root-mean-square distance of the samples from the best-fitting 2-plane
/// through the origin; a lower bound for [`planarity_residual`] on any plane.
pub fn min_plane_distance(traj: &Trajectory) -> f64 {
    let m = traj.samples.len();
    let mut mat = DMatrix::zeros(m, traj.n);
    for (i, s) in traj.samples.iter().enumerate() {
        mat.row_mut(i).copy_from(&s.q.transpose());
    }
    let mut sv: Vec<f64> = mat.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    (sv.iter().skip(2).map(|x| x * x).sum::<f64>() / m.max(1) as f64).sqrt()
}

/// Least-squares fit `1/r = a + b cos θ + c sin θ` with `θ = u L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConicFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub eccentricity: f64,
    /// Largest `|1/r - fit|` over the samples.
    pub residual: f64,
}

/// Fits the orbit of a colourless, planar trajectory to a Kepler conic.
///
/// The polar angle is `u(t)` times the conserved angular momentum
/// `L = |q ∧ q̇|`, which equals `|ξ|` for a horizontal generator.
pub fn kepler_conic_check(traj: &Trajectory) -> Result<ConicFit> {
    let colour = traj.samples.iter().map(|s| s.phi.norm_sq().sqrt()).fold(0.0, f64::max);
    if !(colour < COLOUR_ZERO_TOL) {
        return Err(Error::InvalidInput(format!("conic fit requires zero colour, found |φ| = {colour:.3e}")));
    }
    let first = traj.samples.first().ok_or_else(|| Error::InvalidInput("empty trajectory".into()))?;
    let (q0, v0) = (&first.q, &first.v);
    let l = (q0.norm_squared() * v0.norm_squared() - q0.dot(v0).powi(2)).max(0.0).sqrt();
    if l <= 1e-12 {
        return Err(Error::InvalidInput("conic fit requires nonzero angular momentum".into()));
    }
    let planar = planarity_residual(traj, q0, v0)?;
    if !(planar < PLANARITY_TOL) {
        return Err(Error::InvalidInput(format!("conic fit requires a planar orbit, residual {planar:.3e}")));
    }
    let m = traj.samples.len();
    let mut design = DMatrix::zeros(m, 3);
    let mut rhs = DVector::zeros(m);
    for (i, s) in traj.samples.iter().enumerate() {
        let theta = s.u * l;
        design[(i, 0)] = 1.0;
        design[(i, 1)] = theta.cos();
        design[(i, 2)] = theta.sin();
        rhs[i] = 1.0 / s.r;
    }
    let coef = design.clone().svd(true, true).solve(&rhs, 1e-14).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let residual = (&design * &coef - &rhs).amax();
    Ok(ConicFit {
        a: coef[0],
        b: coef[1],
        c: coef[2],
        eccentricity: coef[1].hypot(coef[2]) / coef[0],
        residual,
    })
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let v = gaussian_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-3 {
            return v / norm;
        }
    }
}

fn random_skew(rng: &mut ChaCha8Rng, n: usize) -> SkewMatrix {
    let mut coeffs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            coeffs.push((i, j, rng.random_range(-1.0..=1.0)));
        }
    }
    SkewMatrix::from_coefficients(n, &coeffs).expect("indices in range")
}

fn random_vertical(rng: &mut ChaCha8Rng, n: usize) -> SkewMatrix {
    let coeffs: Vec<f64> = (0..vertical_len(n)).map(|_| rng.random_range(-1.0..=1.0)).collect();
    AdjointVector::from_coeffs(n, &coeffs).expect("length matches").value().clone()
}

fn random_horizontal(rng: &mut ChaCha8Rng, n: usize) -> SkewMatrix {
    let coeffs: Vec<_> = (0..n - 1).map(|i| (i, n - 1, rng.random_range(-1.0..=1.0))).collect();
    SkewMatrix::from_coefficients(n, &coeffs).expect("indices in range")
}

/// Radius and radial momentum giving a bounded orbit for `μ² = mu2`.
fn bounded_radial_data(rng: &mut ChaCha8Rng, mu2: f64) -> (f64, f64) {
    let r0 = rng.random_range(0.6 * mu2 + 0.2..=1.6 * mu2 + 0.5);
    let p_max = (2.0 / r0 - mu2 / (r0 * r0)).sqrt();
    (r0, rng.random_range(-0.7..=0.7) * p_max)
}

/// A random bounded scenario over one radial period: `ξ` with i.i.d.
/// uniform entries rescaled to `|ξ| ∈ [0.3, 2]` and `w` uniform on the sphere.
pub fn random_scenario(rng: &mut ChaCha8Rng, n: usize) -> Scenario {
    let raw = random_skew(rng, n);
    let mu = rng.random_range(0.3..=2.0);
    let xi = raw.scale(mu / raw.norm());
    let w = unit_vector(rng, n);
    let (r0, pr0) = bounded_radial_data(rng, mu * mu);
    period_scenario(Scenario::new(xi, w, r0, pr0, (0.0, 1.0)), 1.0)
}

fn period_scenario(mut s: Scenario, periods: f64) -> Scenario {
    let period = radial_period(s.energy(), s.mu2()).expect("bounded orbit");
    s.t_span = (0.0, periods * period);
    s
}

/// `count` random scenarios in dimension `n`; each `(seed, n)` pair has its own stream.
pub fn random_scenarios(seed: u64, n: usize, count: usize) -> Vec<Scenario> {
    let mut rng = rng_for(seed, n as u64);
    (0..count).map(|_| random_scenario(&mut rng, n)).collect()
}

/// Compares cone and reduced solutions over each scenario; reports come back
/// sorted by scenario hash.
pub fn oracle_sweep(scenarios: &[Scenario], periods: f64, fault: Fault, exec: Execution) -> Result<Vec<ComparisonReport>> {
    let mut reports =
        exec.map(scenarios, |s| compare_scenario(s, periods, fault)).into_iter().collect::<Result<Vec<_>>>()?;
    reports.sort_by(|a, b| a.scenario_hash.cmp(&b.scenario_hash));
    Ok(reports)
}

/// Horizontal scenario: `ξ = μ (w ∧ a)` with `a ⟂ w`, so the colour vanishes.
pub fn kepler_scenario(rng: &mut ChaCha8Rng, n: usize) -> Scenario {
    let w = unit_vector(rng, n);
    let g = gaussian_vector(rng, n);
    let a = (&g - &w * w.dot(&g)).normalize();
    let mu = rng.random_range(0.5..=1.5);
    let xi = SkewMatrix::outer_wedge(&w, &a).expect("same length").scale(mu);
    let (r0, pr0) = bounded_radial_data(rng, mu * mu);
    period_scenario(Scenario::new(xi, w, r0, pr0, (0.0, 1.0)), 1.0)
}

/// `ξ = make_magnetic(μ, 4)` with a random direction.
pub fn magnetic_scenario(rng: &mut ChaCha8Rng) -> Scenario {
    let mu = rng.random_range(0.5..=1.5);
    let xi = make_magnetic(mu, 4).expect("even dimension");
    let w = unit_vector(rng, 4);
    let (r0, pr0) = bounded_radial_data(rng, mu * mu);
    period_scenario(Scenario::new(xi, w, r0, pr0, (0.0, 1.0)), 1.0)
}

/// `n = 4`, `ξ = cos 1 · e₁∧e₂ + sin 1 · e₃∧e₄` (incommensurate rotation
/// rates, `|ξ| = 1`), `r₀ = 1`, `p_r₀ = 1/2`: energy `-3/8`, annulus `[2/3, 2]`.
pub fn annulus_scenario(periods: f64) -> Scenario {
    let xi = SkewMatrix::from_coefficients(4, &[(0, 1, 1f64.cos()), (2, 3, 1f64.sin())]).expect("valid indices");
    let w = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]).normalize();
    period_scenario(Scenario::new(xi, w, 1.0, 0.5, (0.0, 1.0)), periods)
}

/// Which parts of the suite to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    All,
    Connection,
    Submersion,
    SpecialCases,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionReport {
    pub n: usize,
    pub trials: usize,
    pub covariance_trials: usize,
    pub fault: Fault,
    pub curvature_residual: f64,
    pub horizontal_residual: f64,
    pub covariance_residual: f64,
    pub checks: Vec<Check>,
}

fn random_twist(rng: &mut ChaCha8Rng, n: usize) -> GaugeTwist {
    let factors = (0..2)
        .map(|_| TwistFactor { gradient: gaussian_vector(rng, n) * 0.5, generator: random_vertical(rng, n) })
        .collect();
    GaugeTwist::new(factors).expect("vertical generators")
}

/// A base point at radius in `[0.8, 2]` on the hemisphere of `gauge`'s
/// anchor, where the section and its derivatives stay moderate.
fn random_base_point(rng: &mut ChaCha8Rng, gauge: &Gauge) -> DVector<f64> {
    loop {
        let x = unit_vector(rng, gauge.dim()) * rng.random_range(0.8..=2.0);
        if gauge.angle_to_string(&x) > std::f64::consts::FRAC_PI_2 {
            return x;
        }
    }
}

fn matrix_norm(m: &DMatrix<f64>) -> f64 {
    (0.5 * m.norm_squared()).sqrt()
}

/// Finite-difference curvature `D_v A[w] - D_w A[v] + [A v, A w]` against the
/// homogeneous formula.
fn curvature_trial(rng: &mut ChaCha8Rng, gauge: &Gauge, fault: Fault) -> Result<f64> {
    let n = gauge.dim();
    let x = random_base_point(rng, gauge);
    let v = unit_vector(rng, n);
    let w = unit_vector(rng, n);
    let h = CURVATURE_FD_STEP;
    let a = |p: &DVector<f64>, d: &DVector<f64>| -> Result<DMatrix<f64>> {
        Ok(gauge.connection_form(p, d)?.value().matrix().clone())
    };
    let dva = (a(&(&x + &v * h), &w)? - a(&(&x - &v * h), &w)?) / (2.0 * h);
    let dwa = (a(&(&x + &w * h), &v)? - a(&(&x - &w * h), &v)?) / (2.0 * h);
    let (av, aw) = (a(&x, &v)?, a(&x, &w)?);
    let fd = dva - dwa + (&av * &aw - &aw * &av);
    let mut exact = gauge.curvature(&x, &v, &w)?.value().matrix().clone();
    if fault == Fault::CurvatureSign {
        exact = -exact;
    }
    Ok(matrix_norm(&(fd - exact)))
}

/// Along the horizontal curve `γ(t) = g exp(tζ)` the gauge-relative frame
/// `h = R(x(t))ᵀ γ(t)` must satisfy `ḣ h⁻¹ = -A(ẋ)`.
fn horizontal_trial(rng: &mut ChaCha8Rng, gauge: &Gauge, fault: Fault) -> Result<f64> {
    let n = gauge.dim();
    let x = random_base_point(rng, gauge);
    let radius = x.norm();
    let g = gauge.section(&x)?.section.compose(&expm(&random_vertical(rng, n)))?;
    let zeta = random_horizontal(rng, n);
    let frame = |t: f64| -> Result<DMatrix<f64>> {
        let gamma = g.compose(&expm(&zeta.scale(t)))?;
        let xt = gamma.pole_image() * radius;
        Ok(gauge.section(&xt)?.section.matrix().transpose() * gamma.matrix())
    };
    let eps = 1e-5;
    let hdot = (frame(eps)? - frame(-eps)?) / (2.0 * eps);
    let h0 = frame(0.0)?;
    let xdot = g.apply(&zeta.apply(&g.apply_inv(&g.pole_image()))) * radius;
    let scale = if fault == Fault::ScaledConnection { 1.01 } else { 1.0 };
    let a = gauge.connection_form(&x, &xdot)?.value().matrix() * scale;
    Ok(matrix_norm(&(hdot * h0.transpose() + a)))
}

/// Reduced trajectories in the standard atlas and in a randomly twisted one
/// must project to the same curve.
fn covariance_trial(rng: &mut ChaCha8Rng, n: usize, fault: Fault) -> Result<f64> {
    let s = random_scenario(rng, n);
    let twist = random_twist(rng, n);
    let times = s.time_grid()?;
    let base = integrate_reduced(&s, &times)?;
    let atlas = GaugeAtlas::standard(n, s.cap_angle).with_twist(twist);
    let mut init = s.initial_reduced(&atlas)?;
    if fault == Fault::SkipColourTransform {
        init.phi = phi_initial(&s.atlas(), &s.xi, &init.q)?;
    }
    let twisted = integrate_reduced_in(&s, &times, &atlas, init)?;
    Ok(base.samples.iter().zip(&twisted.samples).map(|(a, b)| (&a.q - &b.q).norm()).fold(0.0, f64::max))
}

/// Curvature, horizontal-lift and gauge-covariance residuals at random points.
///
/// Even trials use the standard gauge, odd ones a randomly twisted gauge
/// anchored at a random rotation. The covariance part integrates full
/// trajectories and so runs on at most four scenarios.
pub fn connection_consistency(n: usize, trials: usize, seed: u64, fault: Fault) -> Result<ConnectionReport> {
    if n < 3 {
        return Err(Error::InvalidDimension(n));
    }
    let mut rng = rng_for(seed, 1000 + n as u64);
    let mut curvature = 0.0f64;
    let mut horiz = 0.0f64;
    for k in 0..trials {
        let gauge = if k % 2 == 0 {
            Gauge::standard(n)
        } else {
            Gauge::anchored(expm(&random_skew(&mut rng, n))).with_twist(random_twist(&mut rng, n))
        };
        curvature = curvature.max(curvature_trial(&mut rng, &gauge, fault)?);
        horiz = horiz.max(horizontal_trial(&mut rng, &gauge, fault)?);
    }
    let covariance_trials = trials.min(4);
    let mut cov = 0.0f64;
    for _ in 0..covariance_trials {
        cov = cov.max(covariance_trial(&mut rng, n, fault)?);
    }
    let checks = vec![
        Check::below(format!("n={n} curvature FD residual"), curvature, CURVATURE_TOL),
        Check::below(format!("n={n} horizontal lift residual"), horiz, HORIZONTAL_TOL),
        Check::below(format!("n={n} gauge covariance of q(t)"), cov, COVARIANCE_TOL),
    ];
    Ok(ConnectionReport {
        n,
        trials,
        covariance_trials,
        fault,
        curvature_residual: finite(curvature),
        horizontal_residual: finite(horiz),
        covariance_residual: finite(cov),
        checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmersionReport {
    pub n: usize,
    pub metric_scale: f64,
    /// `max_i ‖exp(2π e_i∧e_pole) - I‖`.
    pub closure_residual: f64,
    /// `max |speed - 1|` of the metric-unit-speed projected great circles.
    pub speed_error: f64,
    /// `max |p(2π) - p(0)|` of the same curves.
    pub return_residual: f64,
    pub checks: Vec<Check>,
}

/// Horizontal one-parameter subgroups through `e_i ∧ e_pole`, parametrised
/// by arc length in the bi-invariant metric, project to unit-speed great
/// circles of length `2π`.
pub fn submersion_check(n: usize, fault: Fault) -> Result<SubmersionReport> {
    if n < 3 {
        return Err(Error::InvalidDimension(n));
    }
    let metric_scale = if fault == Fault::ScaledMetric { 2.0 } else { 1.0 };
    let tau = std::f64::consts::TAU;
    let eps = 1e-6;
    let mut closure = 0.0f64;
    let mut speed = 0.0f64;
    let mut ret = 0.0f64;
    for i in 0..n - 1 {
        let x = wedge_basis(i, n - 1, n)?;
        let full = expm(&x.scale(tau)).matrix() - DMatrix::identity(n, n);
        closure = closure.max(full.norm());
        let unit = x.scale(1.0 / (metric_scale * x.norm_sq()).sqrt());
        let curve = |t: f64| expm(&unit.scale(t)).pole_image();
        for t in [0.0, 0.7, 2.1, std::f64::consts::PI, 5.3] {
            let v = (curve(t + eps) - curve(t - eps)) / (2.0 * eps);
            speed = speed.max((v.norm() - 1.0).abs());
        }
        ret = ret.max((curve(tau) - curve(0.0)).norm());
    }
    let checks = vec![
        Check::below(format!("n={n} closure of exp(2π e_i∧e_n)"), closure, CLOSURE_TOL),
        Check::below(format!("n={n} projected unit speed"), speed, SPEED_TOL),
        Check::below(format!("n={n} projected curve closes at 2π"), ret, CLOSURE_TOL),
    ];
    Ok(SubmersionReport {
        n,
        metric_scale,
        closure_residual: finite(closure),
        speed_error: finite(speed),
        return_residual: finite(ret),
        checks,
    })
}

/// Checks for the horizontal, magnetic and generic special cases, and the
/// free-fall collision time.
pub fn special_case_checks(seed: u64, exec: Execution) -> Result<Vec<Check>> {
    let mut rng = rng_for(seed, 2000);
    let kepler: Vec<Scenario> = (3..=5).map(|n| kepler_scenario(&mut rng, n)).collect();
    let magnetic: Vec<Scenario> = (0..3).map(|_| magnetic_scenario(&mut rng)).collect();

    let kepler_checks = exec.map(&kepler, |s| -> Result<Vec<Check>> {
        let times = s.time_grid()?;
        let mut out = Vec::new();
        for traj in [cone_solve(s, &times)?, integrate_reduced(s, &times)?] {
            let label = format!("kepler n={} {:?}", s.n(), traj.meta.solver).to_lowercase();
            let colour = traj.samples.iter().map(|x| x.phi.norm_sq().sqrt()).fold(0.0, f64::max);
            out.push(Check::below(format!("{label} colour norm"), colour, COLOUR_ZERO_TOL));
            let first = &traj.samples[0];
            out.push(Check::below(
                format!("{label} planarity"),
                planarity_residual(&traj, &first.q, &first.v)?,
                PLANARITY_TOL,
            ));
            let fit = kepler_conic_check(&traj).map(|f| f.residual).unwrap_or(f64::INFINITY);
            out.push(Check::below(format!("{label} conic fit residual"), fit, CONIC_TOL));
        }
        Ok(out)
    });
    let magnetic_checks = exec.map(&magnetic, |s| -> Result<Vec<Check>> {
        let times = s.time_grid()?;
        let j = s.xi.scale(1.0 / s.xi.norm());
        let q0 = &s.w * s.r0;
        let jq0 = j.apply(&q0);
        let mut out = Vec::new();
        for traj in [cone_solve(s, &times)?, integrate_reduced(s, &times)?] {
            let label = format!("magnetic |xi|={:.3} {:?}", s.xi.norm(), traj.meta.solver).to_lowercase();
            out.push(Check::below(format!("{label} planarity"), planarity_residual(&traj, &q0, &jq0)?, PLANARITY_TOL));
        }
        Ok(out)
    });

    let mut checks = Vec::new();
    for group in kepler_checks.into_iter().chain(magnetic_checks) {
        checks.extend(group?);
    }
    checks.extend(annulus_checks(20.0)?);
    checks.extend(free_fall_checks()?);
    Ok(checks)
}

/// The generic `n = 4` orbit stays inside its annulus and leaves every plane.
pub fn annulus_checks(periods: f64) -> Result<Vec<Check>> {
    let s = annulus_scenario(periods);
    let tp = turning_points(s.energy(), s.mu2())?;
    let times = s.time_grid()?;
    let mut out = Vec::new();
    for traj in [cone_solve(&s, &times)?, integrate_reduced(&s, &times)?] {
        let label = format!("annulus {:?}", traj.meta.solver).to_lowercase();
        let excursion = traj
            .samples
            .iter()
            .map(|x| (tp.r_min - x.r).max(x.r - tp.r_max).max(0.0))
            .fold(0.0, f64::max);
        out.push(Check::below(format!("{label} excursion outside [r_min, r_max]"), excursion, ANNULUS_SLACK));
        out.push(Check::above(format!("{label} distance from every plane"), min_plane_distance(&traj), 0.1));
    }
    Ok(out)
}

/// `ξ = 0`, `r₀ = 1`, `p_r₀ = 0` must stop with a collision at `π/(2√2)`.
pub fn free_fall_checks() -> Result<Vec<Check>> {
    let expected = std::f64::consts::PI / (2.0 * std::f64::consts::SQRT_2);
    let w = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    let mut s = Scenario::new(SkewMatrix::zeros(3), w, 1.0, 0.0, (0.0, 2.0));
    s.output_step = Some(0.01);
    let times = s.time_grid()?;
    let mut out = Vec::new();
    for (label, result) in [("cone", cone_solve(&s, &times)), ("reduced", integrate_reduced(&s, &times))] {
        let err = match result {
            Err(Error::Collision { t }) => (t - expected).abs(),
            _ => f64::INFINITY,
        };
        out.push(Check::below(format!("free fall {label} collision time error"), err, COLLISION_TIME_TOL));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// The same quantity, now required to exceed its threshold.
fn fault_detected(check: &Check, label: &str) -> Check {
    Check::above(format!("fault {label}: {}", check.name), check.value, check.tolerance)
}

fn connection_suite(seed: u64, exec: Execution) -> Result<Vec<Check>> {
    let jobs = [(3usize, 100usize), (5, 50)];
    let mut checks = Vec::new();
    for report in exec.map(&jobs, |&(n, trials)| connection_consistency(n, trials, seed, Fault::None)) {
        checks.extend(report?.checks);
    }
    let faults = [(Fault::CurvatureSign, 0usize), (Fault::ScaledConnection, 1), (Fault::SkipColourTransform, 2)];
    let faulty = exec.map(&faults, |&(fault, idx)| -> Result<Check> {
        let report = connection_consistency(4, 4, seed, fault)?;
        let label = serde_json::to_value(fault).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        Ok(fault_detected(&report.checks[idx], &label))
    });
    for c in faulty {
        checks.push(c?);
    }
    Ok(checks)
}

fn submersion_suite() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for n in 3..=7 {
        checks.extend(submersion_check(n, Fault::None)?.checks);
    }
    let faulty = submersion_check(3, Fault::ScaledMetric)?;
    checks.push(fault_detected(&faulty.checks[1], "scaled-metric"));
    Ok(checks)
}

/// Runs a verification suite. The report depends only on `seed` and `suite`.
pub fn run_suite(suite: Suite, seed: u64, exec: Execution) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    if matches!(suite, Suite::All | Suite::Connection) {
        checks.extend(connection_suite(seed, exec)?);
    }
    if matches!(suite, Suite::All | Suite::Submersion) {
        checks.extend(submersion_suite()?);
    }
    if matches!(suite, Suite::All | Suite::SpecialCases) {
        checks.extend(special_case_checks(seed, exec)?);
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { seed, suite, checks, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::time_grid;

    #[test]
    fn check_directions() {
        assert!(Check::below("a", 1.0, 2.0).passed);
        assert!(!Check::below("a", f64::NAN, 2.0).passed);
        assert!(Check::above("a", 3.0, 2.0).passed);
        assert!(Check::below("a", f64::INFINITY, 2.0).is_consistent());
    }

    #[test]
    fn self_comparison_is_exact() {
        let s = random_scenarios(7, 4, 1).remove(0);
        let t = cone_solve(&s, &s.time_grid().unwrap()).unwrap();
        let r = compare_trajectories(&t, &t).unwrap();
        assert_eq!(r.sup_error, 0.0);
        assert_eq!(r.rms_error, 0.0);
    }

    #[test]
    fn resampling_reproduces_grid() {
        let s = random_scenarios(3, 3, 1).remove(0);
        let t = cone_solve(&s, &s.time_grid().unwrap()).unwrap();
        let q = resample_positions(&t, &t.times()).unwrap();
        for (a, b) in t.samples.iter().zip(&q) {
            assert!((&a.q - b).amax() < 1e-14);
        }
    }

    #[test]
    fn random_scenarios_are_bounded_and_reproducible() {
        let a = random_scenarios(11, 5, 5);
        let b = random_scenarios(11, 5, 5);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.hash(), y.hash());
            assert!(x.energy() < 0.0);
            let mu = x.xi.norm();
            assert!((0.3 - 1e-12..=2.0 + 1e-12).contains(&mu));
            assert!(x.validate().is_ok());
        }
    }

    #[test]
    fn submersion_passes_and_detects_scaled_metric() {
        let ok = submersion_check(4, Fault::None).unwrap();
        assert!(ok.checks.iter().all(|c| c.passed), "{ok:?}");
        let bad = submersion_check(4, Fault::ScaledMetric).unwrap();
        assert!(!bad.checks[1].passed);
    }

    #[test]
    fn conic_fit_rejects_coloured_orbits() {
        let mut rng = rng_for(5, 0);
        let s = magnetic_scenario(&mut rng);
        let t = cone_solve(&s, &s.time_grid().unwrap()).unwrap();
        assert!(kepler_conic_check(&t).is_err());
    }

    #[test]
    fn circular_conic_has_zero_eccentricity() {
        let xi = wedge_basis(0, 2, 3).unwrap();
        let w = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let s = Scenario::new(xi, w.clone(), 1.0, 0.0, (0.0, 7.0));
        let t = cone_solve(&s, &time_grid(0.0, 7.0, 0.05)).unwrap();
        let fit = kepler_conic_check(&t).unwrap();
        assert!(fit.residual < 1e-10);
        assert!(fit.eccentricity.abs() < 1e-10);
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert!(planarity_residual(&t, &w, &x).unwrap() < 1e-12);
        assert!(planarity_residual(&t, &w, &w).is_err());
    }
}
