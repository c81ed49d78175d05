//! Linear algebra on `so(n)` and `SO(n)`.
//!
//! Indices are 0-based throughout the Rust API: `wedge(i, j, n)` is the
//! generator sending `e_i` to `e_j` and `e_j` to `-e_i`, so its matrix has
//! `+1` at `(j, i)` and `-1` at `(i, j)`. File formats and CLI flags use the
//! 1-based labels of the mathematics and convert at the boundary.
//!
//! The inner product is half the Frobenius pairing, `<a, b> = tr(aᵀ b) / 2`,
//! under which every wedge generator has unit length and
//! `|ξ|² = Σ_{i<j} ξ_ij²`.
//!
//! The last basis vector `e_{n-1}` plays the role of the pole: elements
//! supported on indices `< n-1` span the vertical `so(n-1)` that fixes it,
//! and `e_i ∧ e_{n-1}` span the horizontal complement.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const SKEW_TOL: f64 = 1e-12;
const ROTATION_TOL: f64 = 1e-10;

/// An element of `so(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    m: DMatrix<f64>,
}

/// An element of `SO(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    m: DMatrix<f64>,
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    Ok(())
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, found: b });
    }
    Ok(())
}

impl SkewMatrix {
    pub fn zeros(n: usize) -> Self {
        SkewMatrix { m: DMatrix::zeros(n, n) }
    }

    /// Accepts a square matrix whose asymmetric residual `max|m + mᵀ|` is at
    /// most `1e-12` and stores its exact skew part.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let residual = (&m + m.transpose()).amax();
        if !(residual <= SKEW_TOL) {
            return Err(Error::NotSkew { residual });
        }
        Ok(Self::skew_part(&m))
    }

    /// Skew part `(m - mᵀ)/2` of any square matrix.
    pub(crate) fn skew_part(m: &DMatrix<f64>) -> Self {
        SkewMatrix { m: (m - m.transpose()) * 0.5 }
    }

    /// Builds `Σ_{i<j} c_ij e_i∧e_j` from `(i, j, c_ij)` triples. Repeated
    /// pairs accumulate.
    pub fn from_coefficients(n: usize, coeffs: &[(usize, usize, f64)]) -> Result<Self> {
        check_dim(n)?;
        let mut m = DMatrix::zeros(n, n);
        for &(i, j, c) in coeffs {
            if i >= j || j >= n {
                return Err(Error::BadWedgeIndex { i, j, n });
            }
            m[(j, i)] += c;
            m[(i, j)] -= c;
        }
        Ok(SkewMatrix { m })
    }

    /// Coefficients `(i, j, ξ_ij)` for all `i < j` in lexicographic order.
    pub fn coefficients(&self) -> Vec<(usize, usize, f64)> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push((i, j, self.m[(j, i)]));
            }
        }
        out
    }

    /// The coefficient `ξ_ij` of `e_i∧e_j`; antisymmetric in `(i, j)`.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.m[(j, i)]
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn scale(&self, s: f64) -> SkewMatrix {
        SkewMatrix { m: &self.m * s }
    }

    pub fn add(&self, other: &SkewMatrix) -> Result<SkewMatrix> {
        same_dim(self.dim(), other.dim())?;
        Ok(SkewMatrix { m: &self.m + &other.m })
    }

    pub fn sub(&self, other: &SkewMatrix) -> Result<SkewMatrix> {
        same_dim(self.dim(), other.dim())?;
        Ok(SkewMatrix { m: &self.m - &other.m })
    }

    /// `self += s * other`; dimensions must agree.
    pub(crate) fn axpy(&mut self, s: f64, other: &SkewMatrix) {
        self.m += &other.m * s;
    }

    pub fn norm_sq(&self) -> f64 {
        0.5 * self.m.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.m * x
    }

    /// `Ad_g ξ = g ξ gᵀ`.
    pub fn conjugate(&self, g: &Rotation) -> Result<SkewMatrix> {
        same_dim(self.dim(), g.dim())?;
        Ok(Self::skew_part(&(&g.m * &self.m * g.m.transpose())))
    }

    /// `Ad_{g⁻¹} ξ = gᵀ ξ g`.
    pub fn conjugate_inv(&self, g: &Rotation) -> Result<SkewMatrix> {
        same_dim(self.dim(), g.dim())?;
        Ok(Self::skew_part(&(g.m.transpose() * &self.m * &g.m)))
    }

    /// Outer wedge `a∧b := b aᵀ - a bᵀ`, the element sending `a ↦ |a|² b - (a·b) a`.
    /// For basis vectors this reproduces `wedge_basis`.
    pub fn outer_wedge(a: &DVector<f64>, b: &DVector<f64>) -> Result<SkewMatrix> {
        same_dim(a.len(), b.len())?;
        Ok(SkewMatrix { m: b * a.transpose() - a * b.transpose() })
    }
}

/// Generator `e_i∧e_j` of `so(n)`, `i < j < n`.
pub fn wedge_basis(i: usize, j: usize, n: usize) -> Result<SkewMatrix> {
    check_dim(n)?;
    if i >= j || j >= n {
        return Err(Error::BadWedgeIndex { i, j, n });
    }
    let mut m = DMatrix::zeros(n, n);
    m[(j, i)] = 1.0;
    m[(i, j)] = -1.0;
    Ok(SkewMatrix { m })
}

/// `<ξ, η> = tr(ξᵀη) / 2`.
pub fn inner(xi: &SkewMatrix, eta: &SkewMatrix) -> Result<f64> {
    same_dim(xi.dim(), eta.dim())?;
    Ok(0.5 * xi.m.dot(&eta.m))
}

pub fn bracket(xi: &SkewMatrix, eta: &SkewMatrix) -> Result<SkewMatrix> {
    same_dim(xi.dim(), eta.dim())?;
    let ab = &xi.m * &eta.m;
    Ok(SkewMatrix { m: &ab - ab.transpose() })
}

/// Splits `ξ` into the part fixing the pole (`so(n-1)`) and the part moving it.
pub fn split_vh(xi: &SkewMatrix) -> (SkewMatrix, SkewMatrix) {
    let n = xi.dim();
    let mut vertical = xi.m.clone();
    let mut horizontal = DMatrix::zeros(n, n);
    for i in 0..n {
        horizontal[(i, n - 1)] = xi.m[(i, n - 1)];
        horizontal[(n - 1, i)] = xi.m[(n - 1, i)];
        vertical[(i, n - 1)] = 0.0;
        vertical[(n - 1, i)] = 0.0;
    }
    (SkewMatrix { m: vertical }, SkewMatrix { m: horizontal })
}

pub fn vertical(xi: &SkewMatrix) -> SkewMatrix {
    split_vh(xi).0
}

pub fn horizontal(xi: &SkewMatrix) -> SkewMatrix {
    split_vh(xi).1
}

// Padé(13) coefficients for scaling and squaring.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential of a general square matrix by scaling and squaring
/// with the degree-13 Padé approximant.
pub(crate) fn expm_dense(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm1 = (0..n).map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    if norm1 == 0.0 {
        return DMatrix::identity(n, n);
    }
    let s = if norm1 > THETA13 { (norm1 / THETA13).log2().ceil().max(0.0) as i32 } else { 0 };
    let a = a * 2f64.powi(-s);
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Padé denominator is nonsingular for scaled input");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// `exp(ξ)`; always a rotation.
pub fn expm(xi: &SkewMatrix) -> Rotation {
    Rotation { m: expm_dense(&xi.m) }
}

/// `exp(ξ)` restricted to the invariant 2-planes, used as an independent
/// route in tests: `exp(ξ) = Rᵀ exp(block form) R`.
pub fn expm_via_normal_form(xi: &SkewMatrix) -> Rotation {
    let nf = normal_form(xi);
    let n = xi.dim();
    let mut b = DMatrix::identity(n, n);
    for (k, &w) in nf.omegas.iter().enumerate() {
        let (i, j) = (2 * k, 2 * k + 1);
        let (s, c) = w.sin_cos();
        b[(i, i)] = c;
        b[(j, j)] = c;
        b[(j, i)] = s;
        b[(i, j)] = -s;
    }
    Rotation { m: nf.rotation.m.transpose() * b * &nf.rotation.m }
}

/// Block-diagonal normal form `R ξ Rᵀ = Σ_k ω_k e_{2k}∧e_{2k+1}`.
#[derive(Debug, Clone)]
pub struct NormalForm {
    /// `⌊n/2⌋` frequencies, ordered by decreasing magnitude. All are `≥ 0`
    /// except possibly the last when `n` is even and the Pfaffian of `ξ` is
    /// negative: its sign is an `SO(n)` invariant.
    pub omegas: Vec<f64>,
    pub rotation: Rotation,
    /// `‖R ξ Rᵀ - block form‖_F`.
    pub residual: f64,
}

impl NormalForm {
    pub fn block_form(&self, n: usize) -> SkewMatrix {
        let coeffs: Vec<_> = self.omegas.iter().enumerate().map(|(k, &w)| (2 * k, 2 * k + 1, w)).collect();
        SkewMatrix::from_coefficients(n, &coeffs).expect("block indices are in range")
    }
}

/// Normal form through the real Schur decomposition `ξ = Q T Qᵀ`.
pub fn normal_form(xi: &SkewMatrix) -> NormalForm {
    let n = xi.dim();
    let scale = xi.m.amax().max(f64::MIN_POSITIVE);
    let (q, t) = xi.m.clone().schur().unpack();

    // Walk the quasi-triangular T: 2x2 blocks carry ±iω pairs, 1x1 blocks are zeros.
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    let mut singles: Vec<usize> = Vec::new();
    let mut k = 0;
    while k < n {
        if k + 1 < n && t[(k + 1, k)].abs() > 1e-13 * scale {
            // block [[a, b], [c, a]] with c = -b = ω
            let w = 0.5 * (t[(k + 1, k)] - t[(k, k + 1)]);
            pairs.push((w, k, k + 1));
            k += 2;
        } else {
            singles.push(k);
            k += 1;
        }
    }
    // Orient every pair so ω ≥ 0 (swapping the two columns flips the sign).
    for p in pairs.iter_mut() {
        if p.0 < 0.0 {
            *p = (-p.0, p.2, p.1);
        }
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));

    let mut cols: Vec<usize> = Vec::with_capacity(n);
    let mut omegas = Vec::with_capacity(n / 2);
    for &(w, a, b) in &pairs {
        cols.push(a);
        cols.push(b);
        omegas.push(w);
    }
    // Zero eigenvalues: pair them up as ω = 0 blocks, odd one out goes last.
    let mut zi = singles.chunks(2);
    for chunk in zi.by_ref() {
        cols.extend_from_slice(chunk);
        if chunk.len() == 2 {
            omegas.push(0.0);
        }
    }

    let mut basis = DMatrix::zeros(n, n);
    for (dst, &src) in cols.iter().enumerate() {
        basis.set_column(dst, &q.column(src));
    }
    if basis.determinant() < 0.0 {
        if n % 2 == 1 {
            let last = n - 1;
            let c = -basis.column(last);
            basis.set_column(last, &c);
        } else {
            // swap the columns of the smallest block: its ω changes sign
            let k = n / 2 - 1;
            basis.swap_columns(2 * k, 2 * k + 1);
            omegas[k] = -omegas[k];
        }
    }
    let rotation = Rotation { m: basis.transpose() };
    let nf = NormalForm { omegas, rotation, residual: 0.0 };
    let block = nf.block_form(n);
    let residual = (&nf.rotation.m * &xi.m * nf.rotation.m.transpose() - &block.m).norm();
    NormalForm { residual, ..nf }
}

/// `μ Σ_k e_{2k}∧e_{2k+1}`, whose square is `-μ² I`.
pub fn make_magnetic(mu: f64, n: usize) -> Result<SkewMatrix> {
    check_dim(n)?;
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidInput(format!("magnetic strength must be positive, got {mu}")));
    }
    let coeffs: Vec<_> = (0..n / 2).map(|k| (2 * k, 2 * k + 1, mu)).collect();
    SkewMatrix::from_coefficients(n, &coeffs)
}

impl Rotation {
    pub fn identity(n: usize) -> Self {
        Rotation { m: DMatrix::identity(n, n) }
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let n = m.nrows();
        let residual = (m.transpose() * &m - DMatrix::<f64>::identity(n, n)).norm();
        let det = m.determinant();
        if !(residual < ROTATION_TOL) || !(det > 0.0) {
            return Err(Error::NotRotation { residual, det });
        }
        Ok(Rotation { m })
    }

    /// Caller guarantees orthogonality up to rounding.
    pub(crate) fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        Rotation { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn inverse(&self) -> Rotation {
        Rotation { m: self.m.transpose() }
    }

    pub fn compose(&self, other: &Rotation) -> Result<Rotation> {
        same_dim(self.dim(), other.dim())?;
        Ok(Rotation { m: &self.m * &other.m })
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.m * x
    }

    pub fn apply_inv(&self, x: &DVector<f64>) -> DVector<f64> {
        self.m.tr_mul(x)
    }

    /// `‖gᵀg - I‖_F`.
    pub fn orthogonality_residual(&self) -> f64 {
        let n = self.dim();
        (self.m.transpose() * &self.m - DMatrix::<f64>::identity(n, n)).norm()
    }

    /// Image of the pole `g e_{n-1}`.
    pub fn pole_image(&self) -> DVector<f64> {
        self.m.column(self.dim() - 1).into_owned()
    }

    /// Rotation by π in the plane of the last two basis vectors; sends the
    /// pole to its antipode.
    pub fn pole_flip(n: usize) -> Rotation {
        let mut m = DMatrix::identity(n, n);
        m[(n - 1, n - 1)] = -1.0;
        m[(n - 2, n - 2)] = -1.0;
        Rotation { m }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn e(n: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    }

    #[test]
    fn wedge_maps_ei_to_ej() {
        let m = wedge_basis(0, 1, 3).unwrap();
        assert_eq!(m.matrix()[(1, 0)], 1.0);
        assert_eq!(m.matrix()[(0, 1)], -1.0);
        assert_eq!(m.apply(&e(3, 0)), e(3, 1));
        assert_eq!(m.apply(&e(3, 1)), -e(3, 0));
        assert_eq!(m.apply(&e(3, 2)), DVector::zeros(3));
        assert_eq!(m.matrix().iter().filter(|x| **x != 0.0).count(), 2);
    }

    #[test]
    fn wedge_smallest_and_bad_order() {
        let m = wedge_basis(0, 1, 2).unwrap();
        assert_eq!(m.norm_sq(), 1.0);
        assert!(matches!(wedge_basis(1, 0, 3), Err(Error::BadWedgeIndex { .. })));
        assert!(wedge_basis(0, 3, 3).is_err());
        assert!(wedge_basis(1, 1, 3).is_err());
    }

    #[test]
    fn outer_wedge_matches_basis() {
        let m = SkewMatrix::outer_wedge(&e(4, 1), &e(4, 3)).unwrap();
        assert_eq!(m, wedge_basis(1, 3, 4).unwrap());
    }

    #[test]
    fn inner_normalization() {
        let a = wedge_basis(0, 1, 3).unwrap();
        let b = wedge_basis(0, 2, 3).unwrap();
        assert_eq!(inner(&a, &a).unwrap(), 1.0);
        assert_eq!(inner(&a, &b).unwrap(), 0.0);
        assert!(inner(&a, &wedge_basis(0, 1, 4).unwrap()).is_err());
    }

    #[test]
    fn from_matrix_rejects_asymmetry() {
        let mut m = wedge_basis(0, 1, 3).unwrap().into_matrix();
        m[(0, 1)] += 1e-9;
        assert!(matches!(SkewMatrix::from_matrix(m.clone()), Err(Error::NotSkew { .. })));
        m[(0, 1)] -= 1e-9 - 1e-14;
        let s = SkewMatrix::from_matrix(m).unwrap();
        assert_eq!(s.matrix() + s.matrix().transpose(), DMatrix::zeros(3, 3));
    }

    #[test]
    fn coefficient_round_trip() {
        let coeffs = vec![(0, 1, 0.5), (0, 3, -1.25), (1, 2, 2.0), (2, 3, 0.125)];
        let x = SkewMatrix::from_coefficients(4, &coeffs).unwrap();
        let back: Vec<_> = x.coefficients().into_iter().filter(|c| c.2 != 0.0).collect();
        assert_eq!(back, coeffs);
        assert_eq!(SkewMatrix::from_coefficients(4, &x.coefficients()).unwrap(), x);
    }

    #[test]
    fn bracket_examples() {
        let e13 = wedge_basis(0, 2, 3).unwrap();
        let e23 = wedge_basis(1, 2, 3).unwrap();
        // direct commutator, computed by hand: [e13, e23] = e12
        assert_eq!(bracket(&e13, &e23).unwrap(), wedge_basis(0, 1, 3).unwrap());
        assert_eq!(bracket(&e13, &e13).unwrap(), SkewMatrix::zeros(3));
        let a = wedge_basis(0, 1, 4).unwrap();
        let b = wedge_basis(2, 3, 4).unwrap();
        assert_eq!(bracket(&a, &b).unwrap(), SkewMatrix::zeros(4));
    }

    #[test]
    fn expm_examples() {
        let id = expm(&SkewMatrix::zeros(3));
        assert_eq!(id.matrix(), &DMatrix::<f64>::identity(3, 3));

        let q = expm(&wedge_basis(0, 1, 3).unwrap().scale(PI / 2.0));
        assert!((q.apply(&e(3, 0)) - e(3, 1)).amax() < 1e-15);
        assert!((q.apply(&e(3, 1)) + e(3, 0)).amax() < 1e-15);
        assert!((q.apply(&e(3, 2)) - e(3, 2)).amax() < 1e-15);

        let full = expm(&wedge_basis(0, 2, 3).unwrap().scale(2.0 * PI));
        assert!((full.matrix() - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn expm_magnetic_closed_form() {
        let mu = 1.7;
        let xi = make_magnetic(mu, 4).unwrap();
        let j = xi.scale(1.0 / mu);
        let g = expm(&xi);
        let expect = DMatrix::<f64>::identity(4, 4) * mu.cos() + j.matrix() * mu.sin();
        assert!((g.matrix() - expect).amax() < 1e-14);
    }

    #[test]
    fn split_examples() {
        let (v, h) = split_vh(&wedge_basis(0, 1, 3).unwrap());
        assert_eq!(v, wedge_basis(0, 1, 3).unwrap());
        assert_eq!(h, SkewMatrix::zeros(3));
        let (v, h) = split_vh(&wedge_basis(0, 2, 3).unwrap());
        assert_eq!(v, SkewMatrix::zeros(3));
        assert_eq!(h, wedge_basis(0, 2, 3).unwrap());
    }

    #[test]
    fn normal_form_examples() {
        let xi = wedge_basis(0, 1, 3).unwrap().scale(5.0);
        let nf = normal_form(&xi);
        assert_eq!(nf.omegas.len(), 1);
        assert!((nf.omegas[0] - 5.0).abs() < 1e-12);
        assert!(nf.residual < 1e-12);

        let mu = 0.75;
        let nf = normal_form(&make_magnetic(mu, 4).unwrap());
        assert!((nf.omegas[0] - mu).abs() < 1e-12 && (nf.omegas[1] - mu).abs() < 1e-12);
        assert!(nf.residual < 1e-12);
    }

    #[test]
    fn normal_form_negative_pfaffian() {
        // Pf(e12 - e34) < 0: the last frequency must carry the sign
        let xi = SkewMatrix::from_coefficients(4, &[(0, 1, 2.0), (2, 3, -1.0)]).unwrap();
        let nf = normal_form(&xi);
        assert!((nf.omegas[0] - 2.0).abs() < 1e-12);
        assert!((nf.omegas[1] + 1.0).abs() < 1e-12);
        assert!(nf.rotation.matrix().determinant() > 0.0);
        assert!(nf.residual < 1e-12);
    }

    #[test]
    fn normal_form_zero_and_odd() {
        let nf = normal_form(&SkewMatrix::zeros(5));
        assert_eq!(nf.omegas, vec![0.0, 0.0]);
        assert!(nf.residual == 0.0);
        assert!(nf.rotation.matrix().determinant() > 0.0);
    }

    #[test]
    fn magnetic_examples() {
        let xi = make_magnetic(1.0, 4).unwrap();
        let sq = xi.matrix() * xi.matrix();
        assert_eq!(sq, -DMatrix::<f64>::identity(4, 4));
        assert_eq!(xi.norm_sq(), 2.0);
        assert_eq!(make_magnetic(2.0, 2).unwrap(), wedge_basis(0, 1, 2).unwrap().scale(2.0));
        assert!(matches!(make_magnetic(1.0, 3), Err(Error::OddDimension(3))));
    }

    #[test]
    fn rotation_validation() {
        assert!(Rotation::from_matrix(DMatrix::identity(3, 3)).is_ok());
        let mut refl = DMatrix::<f64>::identity(3, 3);
        refl[(0, 0)] = -1.0;
        assert!(matches!(Rotation::from_matrix(refl), Err(Error::NotRotation { .. })));
        assert!(Rotation::from_matrix(DMatrix::identity(3, 3) * 1.001).is_err());
        let f = Rotation::pole_flip(3);
        assert_eq!(f.pole_image(), -e(3, 2));
        assert!(f.matrix().determinant() > 0.0);
    }
}
