//! The Dirac monopole bundle `SO(n-1) → ℝ⁺×SO(n) → ℝⁿ∖{0}` in an explicit gauge.
//!
//! A point `(r, g)` of the frame space projects to `r g e_pole`, where the
//! pole is the last basis vector. A gauge is a section `x ↦ R(x)` with
//! `R(x) e_pole = x/|x|`; relative to it every frame over `x` is `R(x) h`
//! with `h` in the stabiliser `SO(n-1)`.
//!
//! The standard section is the rotation in the plane `span{e_pole, x̂}`
//! taking the pole to `x̂`:
//!
//! ```text
//! R(x) = I + K + K² / (1 + c),   K = x̂ e_poleᵀ - e_pole x̂ᵀ,   c = x̂ · e_pole
//! ```
//!
//! It is singular only on the ray `x̂ = -e_pole` (the Dirac string). An
//! anchored gauge `R_P(x) = P R(Pᵀx)` moves the string to `-P e_pole`, and a
//! twisted gauge right-multiplies by a smooth `SO(n-1)`-valued field.
//!
//! With `Ω(v) = Rᵀ D_v R` (the pulled-back Maurer–Cartan form) the connection
//! is `A(v) = vert Ω(v)` and the curvature follows from the homogeneous
//! structure of `SO(n) → S^{n-1}`:
//!
//! ```text
//! F(v, w) = -[hor Ω(v), hor Ω(w)]
//! ```
//!
//! which agrees with `D_v A(w) - D_w A(v) + [A(v), A(w)]`. The adjoint
//! variable transforms as `φ ↦ Ad_{k⁻¹} φ` under `R ↦ R k`, and parallel
//! transport solves `dφ/dt = -[A(ẋ), φ]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::liealg::{self, bracket, expm, expm_dense, inner, Rotation, SkewMatrix};

/// Default minimum angle to the gauge string below which a section is refused.
pub const DEFAULT_POLE_TOL: f64 = 1e-6;
/// Default half-angle of the cap around the string that triggers re-anchoring.
pub const DEFAULT_CAP_ANGLE: f64 = 0.2;

/// A value of the adjoint bundle in the current gauge: an `so(n)` element
/// supported on the stabiliser `so(n-1)` of the pole.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointVector(SkewMatrix);

impl AdjointVector {
    pub fn new(value: SkewMatrix) -> Result<Self> {
        let n = value.dim();
        let m = value.matrix();
        let residual = (0..n).map(|i| m[(i, n - 1)].abs().max(m[(n - 1, i)].abs())).fold(0.0, f64::max);
        if residual != 0.0 {
            return Err(Error::NotVertical { residual });
        }
        Ok(AdjointVector(value))
    }

    /// Projects onto the vertical subalgebra.
    pub fn project(value: &SkewMatrix) -> Self {
        AdjointVector(liealg::vertical(value))
    }

    pub fn zeros(n: usize) -> Self {
        AdjointVector(SkewMatrix::zeros(n))
    }

    /// Builds from coefficients `φ_ij`, `i < j < n-1`, in lexicographic order.
    pub fn from_coeffs(n: usize, coeffs: &[f64]) -> Result<Self> {
        let m = vertical_len(n);
        if coeffs.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: coeffs.len() });
        }
        let triples: Vec<_> = vertical_pairs(n).zip(coeffs).map(|((i, j), &c)| (i, j, c)).collect();
        Ok(AdjointVector(SkewMatrix::from_coefficients(n, &triples)?))
    }

    /// Coefficients `φ_ij`, `i < j < n-1`, in lexicographic order.
    pub fn coeffs(&self) -> Vec<f64> {
        vertical_pairs(self.dim()).map(|(i, j)| self.0.coeff(i, j)).collect()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn value(&self) -> &SkewMatrix {
        &self.0
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.norm_sq()
    }

    pub fn scale(&self, s: f64) -> Self {
        AdjointVector(self.0.scale(s))
    }

    /// `Ad_k φ` for `k` in the stabiliser of the pole.
    pub fn conjugate(&self, k: &Rotation) -> Result<Self> {
        Ok(AdjointVector::project(&self.0.conjugate(k)?))
    }

    /// `⟨φ, η⟩` with the half-trace inner product.
    pub fn pair(&self, eta: &SkewMatrix) -> f64 {
        inner(&self.0, eta).expect("dimensions checked by caller")
    }
}

/// Number of independent entries of `so(n-1)`.
pub fn vertical_len(n: usize) -> usize {
    (n - 1) * n.saturating_sub(2) / 2
}

/// Index pairs `i < j < n-1` in lexicographic order.
pub fn vertical_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    let m = n.saturating_sub(1);
    (0..m).flat_map(move |i| (i + 1..m).map(move |j| (i, j)))
}

/// A base point together with the section's frame over it.
#[derive(Debug, Clone)]
pub struct GaugePoint {
    pub x: DVector<f64>,
    pub section: Rotation,
}

/// One factor `exp((gradient · x) η)` of a twist field.
#[derive(Debug, Clone)]
pub struct TwistFactor {
    pub gradient: DVector<f64>,
    pub generator: SkewMatrix,
}

/// A smooth `SO(n-1)`-valued field `k(x) = Π_m exp((g_m · x) η_m)`.
#[derive(Debug, Clone)]
pub struct GaugeTwist {
    factors: Vec<TwistFactor>,
}

impl GaugeTwist {
    pub fn new(factors: Vec<TwistFactor>) -> Result<Self> {
        for f in &factors {
            AdjointVector::new(f.generator.clone())?;
            if f.gradient.len() != f.generator.dim() {
                return Err(Error::DimensionMismatch { expected: f.generator.dim(), found: f.gradient.len() });
            }
        }
        Ok(GaugeTwist { factors })
    }

    pub fn value(&self, x: &DVector<f64>) -> Rotation {
        let n = x.len();
        let mut k = DMatrix::identity(n, n);
        for f in &self.factors {
            k *= expm(&f.generator.scale(f.gradient.dot(x))).matrix();
        }
        Rotation::from_matrix_unchecked(k)
    }

    /// `k(x)` and `k⁻¹ ∂_i k` for each coordinate direction.
    fn jet(&self, x: &DVector<f64>) -> (Rotation, Vec<SkewMatrix>) {
        let n = x.len();
        let factors: Vec<DMatrix<f64>> =
            self.factors.iter().map(|f| expm(&f.generator.scale(f.gradient.dot(x))).matrix().clone()).collect();
        // tails[m] = k_{m+1} ... k_M
        let mut tails = vec![DMatrix::identity(n, n); factors.len() + 1];
        for m in (0..factors.len()).rev() {
            tails[m] = &factors[m] * &tails[m + 1];
        }
        let mut dk = vec![SkewMatrix::zeros(n); n];
        for (m, f) in self.factors.iter().enumerate() {
            let ad = f.generator.conjugate_inv(&Rotation::from_matrix_unchecked(tails[m + 1].clone())).unwrap();
            for (i, d) in dk.iter_mut().enumerate() {
                d.axpy(f.gradient[i], &ad);
            }
        }
        (Rotation::from_matrix_unchecked(tails[0].clone()), dk)
    }
}

/// A local trivialisation of the monopole bundle.
#[derive(Debug, Clone)]
pub struct Gauge {
    anchor: Rotation,
    twist: Option<GaugeTwist>,
    pole_tol: f64,
}

/// The section and its first derivatives at one base point.
#[derive(Debug, Clone)]
pub struct GaugeJet {
    pub point: GaugePoint,
    /// `Rᵀ ∂_i R` for each coordinate direction `e_i`.
    pub maurer_cartan: Vec<SkewMatrix>,
}

impl GaugeJet {
    pub fn dim(&self) -> usize {
        self.maurer_cartan.len()
    }

    pub fn maurer_cartan_along(&self, v: &DVector<f64>) -> SkewMatrix {
        let n = self.dim();
        let mut out = SkewMatrix::zeros(n);
        for (i, mc) in self.maurer_cartan.iter().enumerate() {
            if v[i] != 0.0 {
                out.axpy(v[i], mc);
            }
        }
        out
    }

    pub fn connection(&self, v: &DVector<f64>) -> AdjointVector {
        AdjointVector::project(&self.maurer_cartan_along(v))
    }

    pub fn horizontal(&self, v: &DVector<f64>) -> SkewMatrix {
        liealg::horizontal(&self.maurer_cartan_along(v))
    }

    pub fn curvature(&self, v: &DVector<f64>, w: &DVector<f64>) -> AdjointVector {
        let b = bracket(&self.horizontal(v), &self.horizontal(w)).unwrap();
        AdjointVector::project(&b.scale(-1.0))
    }
}

impl Gauge {
    /// The two-plane section anchored at the pole.
    pub fn standard(n: usize) -> Self {
        Gauge { anchor: Rotation::identity(n), twist: None, pole_tol: DEFAULT_POLE_TOL }
    }

    /// `R_P(x) = P R(Pᵀ x)`: regular at `P e_pole`, singular at `-P e_pole`.
    pub fn anchored(anchor: Rotation) -> Self {
        Gauge { anchor, twist: None, pole_tol: DEFAULT_POLE_TOL }
    }

    pub fn with_twist(mut self, twist: GaugeTwist) -> Self {
        self.twist = Some(twist);
        self
    }

    pub fn with_pole_tol(mut self, tol: f64) -> Self {
        self.pole_tol = tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }

    pub fn anchor(&self) -> &Rotation {
        &self.anchor
    }

    pub fn twist(&self) -> Option<&GaugeTwist> {
        self.twist.as_ref()
    }

    /// Unit direction of the gauge string.
    pub fn string_direction(&self) -> DVector<f64> {
        -self.anchor.pole_image()
    }

    /// Angle between `x` and the gauge string.
    pub fn angle_to_string(&self, x: &DVector<f64>) -> f64 {
        let y = self.anchor.apply_inv(x);
        let n = y.len();
        let perp = y.rows(0, n - 1).norm();
        perp.atan2(-y[n - 1])
    }

    fn check(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        if x.norm() == 0.0 || !x.iter().all(|v| v.is_finite()) {
            return Err(Error::ZeroVector);
        }
        let angle = self.angle_to_string(x);
        if angle < self.pole_tol {
            return Err(Error::GaugeSingularity { angle });
        }
        Ok(())
    }

    pub fn section(&self, x: &DVector<f64>) -> Result<GaugePoint> {
        self.check(x)?;
        let y = self.anchor.apply_inv(x);
        let mut r = self.anchor.matrix() * two_plane(&y.normalize());
        if let Some(t) = &self.twist {
            r *= t.value(x).matrix();
        }
        Ok(GaugePoint { x: x.clone(), section: Rotation::from_matrix_unchecked(r) })
    }

    /// Section and Maurer–Cartan components, computed analytically.
    pub fn jet(&self, x: &DVector<f64>) -> Result<GaugeJet> {
        self.check(x)?;
        let n = self.dim();
        let p = self.anchor.matrix();
        let y = self.anchor.apply_inv(x);
        let (r0, mc_y) = two_plane_jet(&y);
        // direction e_i in x maps to Pᵀ e_i = row i of P in y
        let mut mc: Vec<SkewMatrix> = (0..n)
            .map(|i| {
                let mut s = SkewMatrix::zeros(n);
                for (k, m) in mc_y.iter().enumerate() {
                    let c = p[(i, k)];
                    if c != 0.0 {
                        s.axpy(c, m);
                    }
                }
                s
            })
            .collect();
        let mut r = p * r0;
        if let Some(t) = &self.twist {
            let (k, dk) = t.jet(x);
            for (m, d) in mc.iter_mut().zip(dk) {
                *m = m.conjugate_inv(&k).unwrap().add(&d).unwrap();
            }
            r *= k.matrix();
        }
        Ok(GaugeJet { point: GaugePoint { x: x.clone(), section: Rotation::from_matrix_unchecked(r) }, maurer_cartan: mc })
    }

    /// `A(x)[v] = vert(R(x)ᵀ D_v R(x))`.
    pub fn connection_form(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<AdjointVector> {
        check_tangent(x, v)?;
        Ok(self.jet(x)?.connection(v))
    }

    /// `F(x)[v, w]` via the homogeneous-space formula.
    pub fn curvature(&self, x: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> Result<AdjointVector> {
        check_tangent(x, v)?;
        check_tangent(x, w)?;
        Ok(self.jet(x)?.curvature(v, w))
    }
}

fn check_tangent(x: &DVector<f64>, v: &DVector<f64>) -> Result<()> {
    if x.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: v.len() });
    }
    Ok(())
}

/// `K = a e_poleᵀ - e_pole aᵀ`.
fn pole_wedge(a: &DVector<f64>) -> DMatrix<f64> {
    let n = a.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, n - 1)] += a[i];
        k[(n - 1, i)] -= a[i];
    }
    k
}

/// Rotation in `span{e_pole, a}` taking `e_pole` to the unit vector `a`.
fn two_plane(a: &DVector<f64>) -> DMatrix<f64> {
    let n = a.len();
    let c = a[n - 1];
    let k = pole_wedge(a);
    let k2 = &k * &k;
    DMatrix::identity(n, n) + k + k2 / (1.0 + c)
}

/// Two-plane section at `y` and `R₀ᵀ ∂_i R₀` for each direction of `y`.
fn two_plane_jet(y: &DVector<f64>) -> (DMatrix<f64>, Vec<SkewMatrix>) {
    let n = y.len();
    let rho = y.norm();
    let a = y / rho;
    let c = a[n - 1];
    let k = pole_wedge(&a);
    let k2 = &k * &k;
    let inv = 1.0 / (1.0 + c);
    let r0 = DMatrix::identity(n, n) + &k + &k2 * inv;
    let mc = (0..n)
        .map(|i| {
            // ∂_i a = (e_i - a a_i) / |y|
            let mut da = &a * (-a[i] / rho);
            da[i] += 1.0 / rho;
            let dc = da[n - 1];
            let dk = pole_wedge(&da);
            let dr = &dk + (&dk * &k + &k * &dk) * inv - &k2 * (dc * inv * inv);
            SkewMatrix::skew_part(&(r0.transpose() * dr))
        })
        .collect();
    (r0, mc)
}

/// Which of the two standard charts a value is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Chart {
    /// Anchored at the pole, string along `-e_pole`.
    North,
    /// Anchored at `-e_pole`, string along `+e_pole`.
    South,
}

/// Two charts covering `ℝⁿ∖{0}` with the switching rule used for long paths.
#[derive(Debug, Clone)]
pub struct GaugeAtlas {
    north: Gauge,
    south: Gauge,
    cap_angle: f64,
    reanchor: bool,
}

impl GaugeAtlas {
    pub fn standard(n: usize, cap_angle: f64) -> Self {
        GaugeAtlas {
            north: Gauge::standard(n),
            south: Gauge::anchored(Rotation::pole_flip(n)),
            cap_angle,
            reanchor: true,
        }
    }

    /// Both charts right-multiplied by the same twist field.
    pub fn with_twist(mut self, twist: GaugeTwist) -> Self {
        self.north = self.north.with_twist(twist.clone());
        self.south = self.south.with_twist(twist);
        self
    }

    pub fn without_reanchor(mut self) -> Self {
        self.reanchor = false;
        self
    }

    pub fn dim(&self) -> usize {
        self.north.dim()
    }

    pub fn cap_angle(&self) -> f64 {
        self.cap_angle
    }

    pub fn reanchor(&self) -> bool {
        self.reanchor
    }

    pub fn gauge(&self, chart: Chart) -> &Gauge {
        match chart {
            Chart::North => &self.north,
            Chart::South => &self.south,
        }
    }

    /// Reporting chart: north unless `x` lies inside the cap around its string.
    pub fn preferred_chart(&self, x: &DVector<f64>) -> Chart {
        if self.north.angle_to_string(x) >= self.cap_angle {
            Chart::North
        } else {
            Chart::South
        }
    }

    pub fn in_cap(&self, chart: Chart, x: &DVector<f64>) -> bool {
        self.gauge(chart).angle_to_string(x) < self.cap_angle
    }

    /// `k = R_toᵀ R_from ∈ SO(n-1)`; values convert as `φ_to = Ad_k φ_from`.
    pub fn transition(&self, from: Chart, to: Chart, x: &DVector<f64>) -> Result<Rotation> {
        let a = self.gauge(from).section(x)?.section;
        let b = self.gauge(to).section(x)?.section;
        b.inverse().compose(&a)
    }

    pub fn convert(&self, phi: &AdjointVector, from: Chart, to: Chart, x: &DVector<f64>) -> Result<AdjointVector> {
        if from == to {
            return Ok(phi.clone());
        }
        phi.conjugate(&self.transition(from, to, x)?)
    }

    /// The chart to integrate in after reaching `x` in `chart`.
    pub fn next_chart(&self, chart: Chart, x: &DVector<f64>, t: f64) -> Result<Chart> {
        if !self.in_cap(chart, x) {
            return Ok(chart);
        }
        if !self.reanchor {
            return Err(Error::PoleCap { t });
        }
        Ok(match chart {
            Chart::North => Chart::South,
            Chart::South => Chart::North,
        })
    }
}

/// Gauge representative of `[R(q₀), vert(R(q₀)ᵀ ξ R(q₀))]` in the preferred
/// chart at `q0`: the initial colour for a cone solution with generator `ξ`.
pub fn phi_initial(atlas: &GaugeAtlas, xi: &SkewMatrix, q0: &DVector<f64>) -> Result<AdjointVector> {
    let chart = atlas.preferred_chart(q0);
    let frame = atlas.gauge(chart).section(q0)?.section;
    Ok(AdjointVector::project(&xi.conjugate_inv(&frame)?))
}

/// A differentiable curve in `ℝⁿ`.
pub trait Path {
    fn position(&self, t: f64) -> DVector<f64>;
    fn velocity(&self, t: f64) -> DVector<f64>;
}

/// Piecewise-linear interpolation through time-stamped samples.
#[derive(Debug, Clone)]
pub struct Polyline {
    times: Vec<f64>,
    points: Vec<DVector<f64>>,
}

impl Polyline {
    pub fn new(times: Vec<f64>, points: Vec<DVector<f64>>) -> Result<Self> {
        if times.len() != points.len() || times.len() < 2 {
            return Err(Error::InvalidInput("polyline needs at least two samples with matching times".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("polyline times must increase strictly".into()));
        }
        Ok(Polyline { times, points })
    }

    fn segment(&self, t: f64) -> usize {
        match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            k => (k - 1).min(self.times.len() - 2),
        }
    }
}

impl Path for Polyline {
    fn position(&self, t: f64) -> DVector<f64> {
        let k = self.segment(t);
        let s = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        &self.points[k] * (1.0 - s) + &self.points[k + 1] * s
    }

    fn velocity(&self, t: f64) -> DVector<f64> {
        let k = self.segment(t);
        (&self.points[k + 1] - &self.points[k]) / (self.times[k + 1] - self.times[k])
    }
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3 / 6
const MAGNUS_COMMUTATOR: f64 = 0.144_337_567_297_406_43; // √3 / 12

/// Parallel transport of `phi0` (given in the preferred chart at `times[0]`)
/// along `path`, sampled at `times` and reported in each sample's preferred
/// chart.
///
/// Each output interval is split into `substeps` steps of the fourth-order
/// Magnus method, so every step is an exact conjugation and `‖φ‖` is
/// preserved to rounding.
pub fn parallel_transport<P: Path + ?Sized>(
    atlas: &GaugeAtlas,
    phi0: &AdjointVector,
    path: &P,
    times: &[f64],
    substeps: usize,
) -> Result<Vec<AdjointVector>> {
    let Some(&t0) = times.first() else {
        return Ok(Vec::new());
    };
    let x0 = path.position(t0);
    let mut chart = atlas.preferred_chart(&x0);
    atlas.gauge(chart).section(&x0)?;
    let mut phi = phi0.clone();
    let mut out = Vec::with_capacity(times.len());
    out.push(phi.clone());
    let substeps = substeps.max(1);
    for w in times.windows(2) {
        let h = (w[1] - w[0]) / substeps as f64;
        for s in 0..substeps {
            let t = w[0] + h * s as f64;
            let gauge = atlas.gauge(chart);
            let gen = |tau: f64| -> Result<SkewMatrix> {
                let x = path.position(tau);
                Ok(gauge.jet(&x)?.connection(&path.velocity(tau)).value().scale(-1.0))
            };
            let a1 = gen(t + h * (0.5 - GAUSS_OFFSET))?;
            let a2 = gen(t + h * (0.5 + GAUSS_OFFSET))?;
            let mut omega = a1.add(&a2)?.scale(0.5 * h);
            omega.axpy(MAGNUS_COMMUTATOR * h * h, &bracket(&a2, &a1)?);
            let u = Rotation::from_matrix_unchecked(expm_dense(omega.matrix()));
            phi = phi.conjugate(&u)?;

            let t1 = t + h;
            let x1 = path.position(t1);
            let next = atlas.next_chart(chart, &x1, t1)?;
            if next != chart {
                phi = atlas.convert(&phi, chart, next, &x1)?;
                chart = next;
            }
        }
        let x = path.position(w[1]);
        out.push(atlas.convert(&phi, chart, atlas.preferred_chart(&x), &x)?);
    }
    Ok(out)
}

/// Transport along time-stamped positions joined by straight segments.
pub fn transport_along_samples(
    atlas: &GaugeAtlas,
    phi0: &AdjointVector,
    times: &[f64],
    points: &[DVector<f64>],
    substeps: usize,
) -> Result<Vec<AdjointVector>> {
    if points.iter().any(|p| p.norm() == 0.0) {
        return Err(Error::ZeroVector);
    }
    let path = Polyline::new(times.to_vec(), points.to_vec())?;
    parallel_transport(atlas, phi0, &path, times, substeps)
}
