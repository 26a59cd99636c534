//! Dense complex linear algebra with explicit tolerance contracts.
//!
//! Every matrix function of a normal matrix is evaluated through a Hermitian
//! eigendecomposition, so exponentials of skew-Hermitian matrices come out
//! unitary and logarithms of unitaries come out skew-Hermitian up to the
//! accuracy of the eigensolver.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::NormalizedTrace;

/// Square (or rectangular, where noted) dense complex matrix.
pub type CMatrix = DMatrix<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Tolerances used for structural validation, spectral classification and
/// numerical rank decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceProfile {
    /// Absolute bound on Hermiticity, idempotency and unitarity residuals.
    pub atol_structure: f64,
    /// Width of the window used to classify eigenvalues into clusters.
    pub atol_spectral: f64,
    /// Relative rank cutoff; the absolute cutoff is `atol_rank * n * smax`.
    pub atol_rank: f64,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl ToleranceProfile {
    pub const DEFAULT: Self = Self {
        atol_structure: 1e-8,
        atol_spectral: 1e-6,
        atol_rank: 1e-10,
    };

    pub fn new(atol_structure: f64, atol_spectral: f64, atol_rank: f64) -> Result<Self> {
        let t = Self {
            atol_structure,
            atol_spectral,
            atol_rank,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("atol_structure", self.atol_structure),
            ("atol_spectral", self.atol_spectral),
            ("atol_rank", self.atol_rank),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        if self.atol_rank < f64::EPSILON {
            return Err(Error::InvalidArgument(format!(
                "atol_rank must be at least machine epsilon, got {}",
                self.atol_rank
            )));
        }
        Ok(())
    }

    /// Absolute singular-value cutoff for an `n`-dimensional problem whose
    /// largest singular value is `smax`.
    pub fn rank_cutoff(&self, n: usize, smax: f64) -> f64 {
        self.atol_rank * n.max(1) as f64 * smax
    }
}

/// Ascending eigenvalues with a unitary whose columns are the matching
/// eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// Rebuild `U f(Λ) U*` for a complex-valued spectral function.
    pub fn apply<F: Fn(f64) -> Complex64>(&self, f: F) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(self.values[j]);
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= s;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    /// Orthonormal columns spanning the eigenvectors selected by `keep`.
    pub fn select<F: Fn(f64) -> bool>(&self, keep: F) -> CMatrix {
        let idx: Vec<usize> = (0..self.values.len())
            .filter(|&j| keep(self.values[j]))
            .collect();
        let mut out = CMatrix::zeros(self.vectors.nrows(), idx.len());
        for (k, &j) in idx.iter().enumerate() {
            out.set_column(k, &self.vectors.column(j));
        }
        out
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn ensure_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

pub fn ensure_same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { left: a, right: b });
    }
    Ok(())
}

/// `(a + a*) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// `(a - a*) / 2`.
pub fn skew_part(a: &CMatrix) -> CMatrix {
    (a - a.adjoint()).scale(0.5)
}

/// Eigendecomposition without the Hermiticity precondition; the input is
/// symmetrized first.
pub(crate) fn eig_symmetrized(h: &CMatrix) -> HermitianEigen {
    let hs = hermitian_part(h);
    let n = hs.nrows();
    if n == 0 {
        return HermitianEigen {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        };
    }
    let eig = hs.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vectors = CMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        values.push(eig.eigenvalues[j]);
        let mut col: DVector<Complex64> = eig.eigenvectors.column(j).into_owned();
        fix_phase(&mut col);
        vectors.set_column(k, &col);
    }
    HermitianEigen { values, vectors }
}

/// Rotate a vector so that its first non-negligible component is real and
/// positive.
pub(crate) fn fix_phase(v: &mut DVector<Complex64>) {
    let scale = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|x| x.norm() > 1e-8 * scale).copied() {
        let phase = first.conj() / first.norm();
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

/// Hermitian residual `‖h − h*‖` in operator norm.
pub fn hermiticity_residual(h: &CMatrix) -> f64 {
    operator_norm(&(h - h.adjoint()))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eig(h: &CMatrix, tol: &ToleranceProfile) -> Result<HermitianEigen> {
    ensure_square(h)?;
    let residual = hermiticity_residual(h);
    if residual > tol.atol_structure {
        return Err(Error::NotHermitian { residual });
    }
    Ok(eig_symmetrized(h))
}

/// Singular values, descending.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Largest singular value.
pub fn operator_norm(a: &CMatrix) -> f64 {
    if a.iter().all(|x| *x == Complex64::new(0.0, 0.0)) {
        return 0.0;
    }
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Operator norm of a Hermitian matrix, taken as its spectral radius.
pub(crate) fn hermitian_norm(h: &CMatrix) -> f64 {
    eig_symmetrized(h)
        .values
        .iter()
        .fold(0.0, |m, v| f64::max(m, v.abs()))
}

/// Unitary factor `v` of the polar decomposition `a = v |a|`.
pub fn polar_unitary(a: &CMatrix, tol: &ToleranceProfile) -> Result<CMatrix> {
    let n = ensure_square(a)?;
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    if hermiticity_residual(a) <= tol.atol_structure * operator_norm(a).max(1.0) {
        // Hermitian input: the polar factor is the sign function.
        let eig = eig_symmetrized(a);
        let smax = eig.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let smin = eig
            .values
            .iter()
            .fold(f64::INFINITY, |m: f64, v| m.min(v.abs()));
        let cutoff = tol.rank_cutoff(n, smax);
        if smin <= cutoff {
            return Err(Error::SingularInput {
                smallest: smin,
                cutoff,
            });
        }
        return Ok(eig.apply(|l| re(l.signum())));
    }
    let svd = a.clone().svd(true, true);
    let s = &svd.singular_values;
    let smax = s.iter().fold(0.0, |m: f64, v| m.max(*v));
    let smin = s.iter().fold(f64::INFINITY, |m: f64, v| m.min(*v));
    let cutoff = tol.rank_cutoff(n, smax);
    if smin <= cutoff {
        return Err(Error::SingularInput {
            smallest: smin,
            cutoff,
        });
    }
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    Ok(u * v_t)
}

/// Positive square root `(a* a)^{1/2}`.
pub fn abs(a: &CMatrix) -> CMatrix {
    eig_symmetrized(&(a.adjoint() * a)).apply(|l| re(l.max(0.0).sqrt()))
}

/// Precomputed spectral data of a skew-Hermitian `z`, for evaluating
/// `e^{tz}` at many times.
#[derive(Debug, Clone)]
pub struct SkewExp {
    // iz = U diag(λ) U*
    eig: HermitianEigen,
}

impl SkewExp {
    pub fn new(z: &CMatrix, tol: &ToleranceProfile) -> Result<Self> {
        ensure_square(z)?;
        let residual = operator_norm(&(z + z.adjoint()));
        if residual > tol.atol_structure {
            return Err(Error::NotSkewHermitian { residual });
        }
        Ok(Self::from_skew_unchecked(z))
    }

    pub(crate) fn from_skew_unchecked(z: &CMatrix) -> Self {
        let h = skew_part(z) * I;
        Self {
            eig: eig_symmetrized(&h),
        }
    }

    /// `e^{tz}`.
    pub fn at(&self, t: f64) -> CMatrix {
        // z = -i h, so e^{tz} = U diag(e^{-i t λ}) U*.
        self.eig.apply(|l| Complex64::from_polar(1.0, -t * l))
    }
}

/// Exponential of a skew-Hermitian matrix (a unitary).
pub fn exp_skew(z: &CMatrix, tol: &ToleranceProfile) -> Result<CMatrix> {
    Ok(SkewExp::new(z, tol)?.at(1.0))
}

/// `‖w* w − I‖`.
pub fn unitarity_residual(w: &CMatrix) -> f64 {
    let n = w.ncols();
    hermitian_norm(&(w.adjoint() * w - identity(n)))
}

/// Principal logarithm of a unitary: the skew-Hermitian `z` with spectrum
/// in `i(−π, π)` and `e^z = w`.
///
/// The eigenvectors come from the Hermitian Cayley transform
/// `i(I − w)(I + w)^{-1}`, whose eigenvalues are `tan(θ/2)` for each
/// eigenvalue `e^{iθ}` of `w`.
pub fn log_unitary_principal(w: &CMatrix, tol: &ToleranceProfile) -> Result<CMatrix> {
    let n = ensure_square(w)?;
    let residual = unitarity_residual(w);
    if residual > tol.atol_structure {
        return Err(Error::NotUnitary { residual });
    }
    let id = identity(n);
    let shifted = &id + w;
    // For a normal matrix the singular values of I + w are |1 + λ|.
    let distance = singular_values(&shifted)
        .last()
        .copied()
        .unwrap_or(f64::INFINITY);
    if distance <= tol.atol_spectral {
        return Err(Error::BranchCut { distance });
    }
    let inv = shifted
        .clone()
        .try_inverse()
        .ok_or(Error::BranchCut { distance })?;
    let cayley = (&id - w) * inv * I;
    let eig = eig_symmetrized(&cayley);
    Ok(eig.apply(|h| I * (2.0 * h.atan())))
}

/// Schatten-type ρ-norm `(τ((a* a)^{ρ/2}))^{1/ρ}` for the normalized trace
/// `τ` of a block algebra.
pub fn rho_norm(a: &CMatrix, rho: f64, trace: &NormalizedTrace) -> Result<f64> {
    if rho.is_nan() || rho < 1.0 {
        return Err(Error::BadRho(rho));
    }
    let alg = trace.algebra();
    alg.check_member(a, &ToleranceProfile::default())?;
    let mut acc = 0.0;
    for (b, range) in alg.block_ranges().enumerate() {
        let block = a
            .view((range.start, range.start), (range.len(), range.len()))
            .into_owned();
        let dim = range.len() as f64;
        let weight = alg.weights()[b] / dim;
        acc += weight
            * singular_values(&block)
                .iter()
                .map(|s| s.powf(rho))
                .sum::<f64>();
    }
    Ok(acc.powf(1.0 / rho))
}

/// Frobenius norm, used for quick structural checks.
pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Commutator `ab − ba`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Build a complex matrix from real and imaginary row-major parts.
pub fn from_parts(n: usize, re_part: &[f64], im_part: &[f64]) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| c(re_part[i * n + j], im_part[i * n + j]))
}

/// Real matrix from row-major rows.
pub fn real_matrix(rows: &[&[f64]]) -> CMatrix {
    let r = rows.len();
    let cols = rows.first().map_or(0, |x| x.len());
    CMatrix::from_fn(r, cols, |i, j| re(rows[i][j]))
}

/// Diagonal real matrix.
pub fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { re(values[i]) } else { re(0.0) })
}

/// Matrix unit `E_{ij}` (zero-based indices).
pub fn unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = re(1.0);
    m
}

/// Planar rotation by `theta` in the coordinate plane `(a, b)`.
pub fn plane_rotation(n: usize, a: usize, b: usize, theta: f64) -> CMatrix {
    let mut m = identity(n);
    let (s, co) = theta.sin_cos();
    m[(a, a)] = re(co);
    m[(b, b)] = re(co);
    m[(a, b)] = re(-s);
    m[(b, a)] = re(s);
    m
}
