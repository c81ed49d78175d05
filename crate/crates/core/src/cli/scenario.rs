//! JSON scenario files.
//!
//! Indices in files are 1-based; `xi` lists wedge coefficients `{i, j, value}`
//! with `i < j`, and exactly one of `w` (unit vector) or `g0` (row-major
//! rotation matrix) fixes the initial direction.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{Method, Scenario, SolverSettings};
use crate::liealg::{Rotation, SkewMatrix};
use crate::monopole::DEFAULT_CAP_ANGLE;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WedgeEntry {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverSettings::default();
        SolverSection { method: d.method, rtol: d.rtol, atol: d.atol, max_step: d.max_step }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSection {
    pub cap_angle: f64,
}

impl Default for GaugeSection {
    fn default() -> Self {
        GaugeSection { cap_angle: DEFAULT_CAP_ANGLE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub n: usize,
    pub xi: Vec<WedgeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<Vec<f64>>,
    pub r0: f64,
    pub pr0: f64,
    pub t_span: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_step: Option<f64>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub gauge: GaugeSection,
}

fn require(ok: bool, field: &str, constraint: impl std::fmt::Display) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(format!("{field}: {constraint}"))
    }
}

fn finite(x: f64, field: &str) -> Result<(), String> {
    require(x.is_finite(), field, format!("must be finite (got {x})"))
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("malformed scenario: {e}"))
    }

    /// Checks every field and builds the in-memory scenario. Error messages
    /// start with the offending field.
    pub fn to_scenario(&self) -> Result<Scenario, String> {
        require(
            self.schema_version == SCHEMA_VERSION,
            "schema_version",
            format!("must be {SCHEMA_VERSION} (got {})", self.schema_version),
        )?;
        let n = self.n;
        require(n >= 2, "n", format!("must be at least 2 (got {n})"))?;

        let mut coeffs = Vec::with_capacity(self.xi.len());
        for (k, e) in self.xi.iter().enumerate() {
            let field = format!("xi[{k}]");
            require(
                1 <= e.i && e.i < e.j && e.j <= n,
                &field,
                format!("indices must satisfy 1 <= i < j <= n (got i={}, j={}, n={n})", e.i, e.j),
            )?;
            finite(e.value, &format!("{field}.value"))?;
            require(
                !self.xi[..k].iter().any(|p| p.i == e.i && p.j == e.j),
                &field,
                format!("duplicate entry for ({}, {})", e.i, e.j),
            )?;
            coeffs.push((e.i - 1, e.j - 1, e.value));
        }
        let xi = SkewMatrix::from_coefficients(n, &coeffs).map_err(|e| format!("xi: {e}"))?;

        let (w, g0) = match (&self.w, &self.g0) {
            (Some(_), Some(_)) => return Err("w, g0: exactly one must be given (got both)".into()),
            (None, None) => return Err("w, g0: exactly one must be given (got neither)".into()),
            (Some(w), None) => {
                require(w.len() == n, "w", format!("must have n = {n} entries (got {})", w.len()))?;
                for (k, x) in w.iter().enumerate() {
                    finite(*x, &format!("w[{k}]"))?;
                }
                let w = DVector::from_column_slice(w);
                let norm = w.norm();
                require((norm - 1.0).abs() <= 1e-12, "w", format!("must be a unit vector to 1e-12 (|w| = {norm})"))?;
                (w, None)
            }
            (None, Some(g)) => {
                require(g.len() == n * n, "g0", format!("must have n² = {} entries (got {})", n * n, g.len()))?;
                for (k, x) in g.iter().enumerate() {
                    finite(*x, &format!("g0[{k}]"))?;
                }
                let rot = Rotation::from_matrix(DMatrix::from_row_slice(n, n, g)).map_err(|e| format!("g0: {e}"))?;
                (rot.pole_image(), Some(rot))
            }
        };

        finite(self.r0, "r0")?;
        require(self.r0 > 0.0, "r0", format!("must be positive (got {})", self.r0))?;
        finite(self.pr0, "pr0")?;
        let [t0, t1] = self.t_span;
        finite(t0, "t_span[0]")?;
        finite(t1, "t_span[1]")?;
        require(t1 > t0, "t_span", format!("must satisfy t0 < t1 (got [{t0}, {t1}])"))?;
        if let Some(dt) = self.output_step {
            finite(dt, "output_step")?;
            require(dt > 0.0, "output_step", format!("must be positive (got {dt})"))?;
        }
        let sv = &self.solver;
        finite(sv.rtol, "solver.rtol")?;
        require(sv.rtol > 0.0, "solver.rtol", format!("must be positive (got {})", sv.rtol))?;
        finite(sv.atol, "solver.atol")?;
        require(sv.atol > 0.0, "solver.atol", format!("must be positive (got {})", sv.atol))?;
        if let Some(h) = sv.max_step {
            finite(h, "solver.max_step")?;
            require(h > 0.0, "solver.max_step", format!("must be positive (got {h})"))?;
        }
        let cap = self.gauge.cap_angle;
        finite(cap, "gauge.cap_angle")?;
        require(
            cap > 0.0 && cap < std::f64::consts::FRAC_PI_2,
            "gauge.cap_angle",
            format!("must lie in (0, π/2) (got {cap})"),
        )?;

        let mut s = Scenario::new(xi, w, self.r0, self.pr0, (t0, t1));
        s.g0 = g0;
        s.output_step = self.output_step;
        s.solver = SolverSettings { method: sv.method, rtol: sv.rtol, atol: sv.atol, max_step: sv.max_step, ..Default::default() };
        s.cap_angle = cap;
        s.validate().map_err(|e| format!("scenario: {e}"))?;
        Ok(s)
    }
}
