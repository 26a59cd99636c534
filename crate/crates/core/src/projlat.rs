//! Orthogonal projections, their meets, the five-part Halmos decomposition
//! of a pair, the Davis symmetry of the generic part and principal angles.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numkit::{
    eig_symmetrized, ensure_same_dim, ensure_square, hermitian_norm, hermitian_part,
    hermiticity_residual, identity, polar_unitary, CMatrix, HermitianEigen, ToleranceProfile,
};

/// A validated orthogonal projection (Hermitian idempotent).
#[derive(Debug, Clone)]
pub struct Projection {
    m: CMatrix,
    rank: usize,
    tol: ToleranceProfile,
}

impl Projection {
    /// Wrap a matrix already known to be a projection up to rounding.
    pub(crate) fn from_trusted(m: CMatrix, tol: &ToleranceProfile) -> Self {
        let m = hermitian_part(&m);
        let rank = eig_symmetrized(&m)
            .values
            .iter()
            .filter(|&&l| l > 0.5)
            .count();
        Self { m, rank, tol: *tol }
    }

    pub fn zero(n: usize, tol: &ToleranceProfile) -> Self {
        Self {
            m: CMatrix::zeros(n, n),
            rank: 0,
            tol: *tol,
        }
    }

    pub fn identity(n: usize, tol: &ToleranceProfile) -> Self {
        Self {
            m: identity(n),
            rank: n,
            tol: *tol,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Number of eigenvalues above 1/2.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn tol(&self) -> &ToleranceProfile {
        &self.tol
    }

    pub fn is_zero(&self) -> bool {
        self.rank == 0
    }

    /// `I − p`.
    pub fn complement(&self) -> Projection {
        Projection {
            m: identity(self.dim()) - &self.m,
            rank: self.dim() - self.rank,
            tol: self.tol,
        }
    }

    /// `2p − I`.
    pub fn symmetry(&self) -> CMatrix {
        self.m.scale(2.0) - identity(self.dim())
    }

    /// Orthonormal eigenbasis of the range (eigenvectors for eigenvalues
    /// above 1/2, phase-fixed, in ascending eigenvalue order).
    pub fn range_basis(&self) -> CMatrix {
        eig_symmetrized(&self.m).select(|l| l > 0.5)
    }

    /// Canonical orthonormal basis of the range built from the columns of
    /// the projection itself.
    ///
    /// Pivot columns are chosen greedily by largest residual norm, then
    /// sorted by index and re-orthonormalized in that order. Each basis vector
    /// is a combination of `p e_j` for pivot indices `j` up to its own, so a
    /// block-diagonal projection yields a basis localized block by block, in
    /// block order.
    pub fn canonical_basis(&self) -> CMatrix {
        let n = self.dim();
        let r = self.rank;
        let cols: Vec<DVector<Complex64>> = (0..n).map(|j| self.m.column(j).into_owned()).collect();
        let mut pivots = Vec::with_capacity(r);
        let mut basis: Vec<DVector<Complex64>> = Vec::with_capacity(r);
        for _ in 0..r {
            let mut best = (usize::MAX, -1.0);
            for (j, col) in cols.iter().enumerate() {
                if pivots.contains(&j) {
                    continue;
                }
                let res = orthogonalize(col, &basis).norm();
                if res > best.1 + 1e-12 {
                    best = (j, res);
                }
            }
            pivots.push(best.0);
            let v = orthogonalize(&cols[best.0], &basis);
            let nv = v.norm();
            basis.push(v / Complex64::new(nv, 0.0));
        }
        pivots.sort_unstable();
        let mut out = CMatrix::zeros(n, r);
        let mut sorted: Vec<DVector<Complex64>> = Vec::with_capacity(r);
        for (k, &j) in pivots.iter().enumerate() {
            let v = orthogonalize(&cols[j], &sorted);
            let nv = v.norm();
            let v = v / Complex64::new(nv, 0.0);
            out.set_column(k, &v);
            sorted.push(v);
        }
        out
    }

    /// `‖p − q‖` in operator norm.
    pub fn distance(&self, other: &Projection) -> f64 {
        hermitian_norm(&(&self.m - &other.m))
    }

    /// `p ≤ q`, tested as `‖q p − p‖ ≤ atol_structure`.
    pub fn is_below(&self, other: &Projection) -> bool {
        crate::numkit::operator_norm(&(&other.m * &self.m - &self.m)) <= self.tol.atol_structure
    }
}

/// Gram–Schmidt against an orthonormal list, applied twice.
fn orthogonalize(v: &DVector<Complex64>, basis: &[DVector<Complex64>]) -> DVector<Complex64> {
    let mut w = v.clone();
    for _ in 0..2 {
        for b in basis {
            let coef = b.dotc(&w);
            w -= b * coef;
        }
    }
    w
}

/// Validate a matrix as an orthogonal projection. The result stores the
/// Hermitian part `(m + m*)/2`.
pub fn make_projection(m: &CMatrix, tol: &ToleranceProfile) -> Result<Projection> {
    ensure_square(m)?;
    let hermiticity = hermiticity_residual(m);
    let sym = hermitian_part(m);
    let idempotency = hermitian_norm(&(&sym * &sym - &sym));
    if hermiticity > tol.atol_structure || idempotency > tol.atol_structure {
        return Err(Error::NotProjection {
            hermiticity,
            idempotency,
        });
    }
    let eig = eig_symmetrized(&sym);
    let spectral_ok = eig
        .values
        .iter()
        .all(|&l| l.abs() <= tol.atol_spectral || (l - 1.0).abs() <= tol.atol_spectral);
    if !spectral_ok {
        return Err(Error::NotProjection {
            hermiticity,
            idempotency,
        });
    }
    let rank = eig.values.iter().filter(|&&l| l > 0.5).count();
    Ok(Projection {
        m: sym,
        rank,
        tol: *tol,
    })
}

/// Orthogonal projection onto the span of the columns.
pub fn from_span(columns: &CMatrix, tol: &ToleranceProfile) -> Result<Projection> {
    let n = columns.nrows();
    let k = columns.ncols();
    if k == 0 {
        return Ok(Projection::zero(n, tol));
    }
    if k > n {
        return Err(Error::RankDeficient { smallest: 0.0 });
    }
    let svd = columns.clone().svd(true, false);
    let s = &svd.singular_values;
    let smax = s.iter().fold(0.0, |m: f64, v| m.max(*v));
    let smin = s.iter().fold(f64::INFINITY, |m: f64, v| m.min(*v));
    if smin <= tol.rank_cutoff(n, smax) {
        return Err(Error::RankDeficient { smallest: smin });
    }
    let u = svd.u.expect("left singular vectors requested");
    let q = u.columns(0, k);
    Ok(Projection {
        m: hermitian_part(&(q * q.adjoint())),
        rank: k,
        tol: *tol,
    })
}

/// Spectral projection of a Hermitian matrix onto the eigenvalues selected
/// by `keep`.
pub(crate) fn spectral_projection<F: Fn(f64) -> bool>(
    h: &CMatrix,
    keep: F,
    tol: &ToleranceProfile,
) -> Projection {
    let basis = eig_symmetrized(h).select(keep);
    let rank = basis.ncols();
    Projection {
        m: hermitian_part(&(&basis * basis.adjoint())),
        rank,
        tol: *tol,
    }
}

/// `p ∧ q`: the spectral projection of `p + q` for eigenvalues within
/// `atol_spectral` of 2.
pub fn meet(p: &Projection, q: &Projection) -> Result<Projection> {
    ensure_same_dim(p.dim(), q.dim())?;
    let tol = p.tol;
    let window = 2.0 - tol.atol_spectral;
    Ok(spectral_projection(
        &(p.matrix() + q.matrix()),
        |l| l >= window,
        &tol,
    ))
}

pub fn complement(p: &Projection) -> Projection {
    p.complement()
}

/// The five mutually orthogonal parts of a pair `(p, q)`.
#[derive(Debug, Clone)]
pub struct HalmosParts {
    /// `p ∧ q`
    pub e11: Projection,
    /// `p⊥ ∧ q⊥`
    pub e00: Projection,
    /// `p ∧ q⊥`
    pub e10: Projection,
    /// `p⊥ ∧ q`
    pub e01: Projection,
    /// Generic part, `I − e11 − e00 − e10 − e01`.
    pub e0: Projection,
}

/// Ranks of the Halmos parts in the order `(e11, e00, e10, e01, e0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct HalmosRanks {
    pub e11: usize,
    pub e00: usize,
    pub e10: usize,
    pub e01: usize,
    pub e0: usize,
}

impl HalmosParts {
    pub fn ranks(&self) -> HalmosRanks {
        HalmosRanks {
            e11: self.e11.rank(),
            e00: self.e00.rank(),
            e10: self.e10.rank(),
            e01: self.e01.rank(),
            e0: self.e0.rank(),
        }
    }

    pub fn parts(&self) -> [&Projection; 5] {
        [&self.e11, &self.e00, &self.e10, &self.e01, &self.e0]
    }

    /// Largest of: pairwise products, `‖Σ e − I‖`, and commutators of each
    /// part with `p` and `q`.
    pub fn residual(&self, p: &Projection, q: &Projection) -> f64 {
        let parts = self.parts();
        let n = p.dim();
        let mut worst: f64 = 0.0;
        for i in 0..5 {
            for j in (i + 1)..5 {
                worst = worst.max(crate::numkit::operator_norm(
                    &(parts[i].matrix() * parts[j].matrix()),
                ));
            }
            worst = worst.max(crate::numkit::operator_norm(&crate::numkit::commutator(
                parts[i].matrix(),
                p.matrix(),
            )));
            worst = worst.max(crate::numkit::operator_norm(&crate::numkit::commutator(
                parts[i].matrix(),
                q.matrix(),
            )));
        }
        let sum = parts
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, e| acc + e.matrix());
        worst.max(hermitian_norm(&(sum - identity(n))))
    }
}

/// Five-part decomposition of a pair by spectral meets.
pub fn halmos_decompose(p: &Projection, q: &Projection) -> Result<HalmosParts> {
    ensure_same_dim(p.dim(), q.dim())?;
    let tol = p.tol;
    let pc = p.complement();
    let qc = q.complement();
    let e11 = meet(p, q)?;
    let e00 = meet(&pc, &qc)?;
    let e10 = meet(p, &qc)?;
    let e01 = meet(&pc, q)?;
    let n = p.dim();
    let rest = identity(n) - e11.matrix() - e00.matrix() - e10.matrix() - e01.matrix();
    let e0 = Projection::from_trusted(rest, &tol);
    Ok(HalmosParts {
        e11,
        e00,
        e10,
        e01,
        e0,
    })
}

/// The reductions of `p` and `q` to the generic part, expressed in an
/// orthonormal basis of `range(e0)`.
#[derive(Debug, Clone)]
pub struct GenericPart {
    /// `n × g` orthonormal columns spanning `range(e0)`.
    pub basis: CMatrix,
    /// `p` compressed to the generic part (`g × g`).
    pub p0: CMatrix,
    /// `q` compressed to the generic part (`g × g`).
    pub q0: CMatrix,
}

impl GenericPart {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `B x B*`: lift a compressed operator back to the ambient space.
    pub fn embed(&self, x: &CMatrix) -> CMatrix {
        &self.basis * x * self.basis.adjoint()
    }

    /// `B* x B`.
    pub fn compress(&self, x: &CMatrix) -> CMatrix {
        self.basis.adjoint() * x * &self.basis
    }
}

/// Compress `p` and `q` to `range(e0)`.
pub fn generic_part(p: &Projection, q: &Projection, parts: &HalmosParts) -> GenericPart {
    let basis = parts.e0.range_basis();
    let p0 = hermitian_part(&(basis.adjoint() * p.matrix() * &basis));
    let q0 = hermitian_part(&(basis.adjoint() * q.matrix() * &basis));
    GenericPart { basis, p0, q0 }
}

/// The symmetry `v0` of the generic part with `v0 a0 v0 = −a0`.
#[derive(Debug, Clone)]
pub struct DavisSymmetry {
    pub generic: GenericPart,
    /// Compressed `v0 = polar_unitary(b0 − e0)`.
    pub v0: CMatrix,
    /// Compressed `a0 = p0 − q0`.
    pub a0: CMatrix,
}

impl DavisSymmetry {
    /// `‖v0 a0 v0 + a0‖`.
    pub fn anticommutation_residual(&self) -> f64 {
        hermitian_norm(&(&self.v0 * &self.a0 * &self.v0 + &self.a0))
    }

    /// `max(‖v0 − v0*‖, ‖v0² − e0‖)`.
    pub fn symmetry_residual(&self) -> f64 {
        let g = self.generic.dim();
        let s = crate::numkit::operator_norm(&(&self.v0 - self.v0.adjoint()));
        s.max(crate::numkit::operator_norm(
            &(&self.v0 * &self.v0 - identity(g)),
        ))
    }

    /// `v0` lifted to the ambient space (zero off the generic part).
    pub fn embedded(&self) -> CMatrix {
        self.generic.embed(&self.v0)
    }

    /// Spectrum of `a0`, ascending.
    pub fn a0_spectrum(&self) -> Vec<f64> {
        eig_symmetrized(&self.a0).values
    }
}

/// Davis symmetry of the generic part of `(p, q)`.
pub fn davis_symmetry(p: &Projection, q: &Projection) -> Result<DavisSymmetry> {
    let parts = halmos_decompose(p, q)?;
    davis_symmetry_from(p, q, &parts)
}

pub(crate) fn davis_symmetry_from(
    p: &Projection,
    q: &Projection,
    parts: &HalmosParts,
) -> Result<DavisSymmetry> {
    if parts.e0.is_zero() {
        return Err(Error::NoGenericPart);
    }
    let generic = generic_part(p, q, parts);
    let g = generic.dim();
    let b0_minus = &generic.p0 + &generic.q0 - identity(g);
    let v0 = polar_unitary(&b0_minus, &p.tol)?;
    let v0 = hermitian_part(&v0);
    let a0 = &generic.p0 - &generic.q0;
    Ok(DavisSymmetry { generic, v0, a0 })
}

/// Principal angles of the generic part, ascending with multiplicity.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PrincipalAngles {
    pub angles: Vec<f64>,
}

impl PrincipalAngles {
    pub fn largest(&self) -> Option<f64> {
        self.angles.last().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }
}

/// Angles `arccos(√λ)` for the nonzero eigenvalues `λ` of `(p e0) q (p e0)`.
pub fn principal_angles(p: &Projection, q: &Projection) -> Result<PrincipalAngles> {
    let parts = halmos_decompose(p, q)?;
    Ok(principal_angles_from(p, q, &parts))
}

pub(crate) fn principal_angles_from(
    p: &Projection,
    q: &Projection,
    parts: &HalmosParts,
) -> PrincipalAngles {
    if parts.e0.is_zero() {
        return PrincipalAngles { angles: Vec::new() };
    }
    let generic = generic_part(p, q, parts);
    let k = eig_symmetrized(&generic.p0)
        .values
        .iter()
        .filter(|&&l| l > 0.5)
        .count();
    let pqp = &generic.p0 * &generic.q0 * &generic.p0;
    let eig: HermitianEigen = eig_symmetrized(&pqp);
    let g = eig.values.len();
    let mut angles: Vec<f64> = eig.values[g - k..]
        .iter()
        .map(|&l| l.clamp(0.0, 1.0).sqrt().acos())
        .collect();
    angles.sort_by(f64::total_cmp);
    PrincipalAngles { angles }
}
