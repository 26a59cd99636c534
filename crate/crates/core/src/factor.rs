//! Block direct-sum algebras `M_{n_1} ⊕ … ⊕ M_{n_k}` with weighted
//! normalized traces, the equivalence criterion for joining projections by
//! a geodesic inside such an algebra, and the family of geodesics between
//! orthogonal equivalent projections.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geo::{minimal_exponent, partial_isometry, rho_length, GeodesicExponent};
use crate::numkit::{ensure_same_dim, operator_norm, CMatrix, ToleranceProfile};
use crate::projlat::{halmos_decompose, Projection};
use crate::sample::haar_unitary;

/// Block sizes with positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteAlgebra {
    blocks: Vec<usize>,
    weights: Vec<f64>,
}

impl FiniteAlgebra {
    pub fn new(blocks: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if blocks.is_empty() || blocks.len() != weights.len() {
            return Err(Error::BadAlgebra(
                "need one positive weight per block and at least one block".into(),
            ));
        }
        if blocks.contains(&0) {
            return Err(Error::BadAlgebra(
                "block dimensions must be at least 1".into(),
            ));
        }
        if weights.iter().any(|&w| w <= 0.0 || !w.is_finite()) {
            return Err(Error::BadAlgebra("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::BadAlgebra(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { blocks, weights })
    }

    /// The factor `M_n`.
    pub fn single(n: usize) -> Self {
        Self {
            blocks: vec![n.max(1)],
            weights: vec![1.0],
        }
    }

    /// Blocks weighted by their dimension, so that the normalized trace is
    /// the restriction of the normalized trace of the ambient `M_N`.
    pub fn proportional(blocks: Vec<usize>) -> Result<Self> {
        let n: usize = blocks.iter().sum();
        let weights = blocks.iter().map(|&b| b as f64 / n.max(1) as f64).collect();
        Self::new(blocks, weights)
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_factor(&self) -> bool {
        self.blocks.len() == 1
    }

    /// Ambient dimension `Σ n_i`.
    pub fn dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn block_ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.blocks.iter().scan(0, |start, &b| {
            let r = *start..*start + b;
            *start += b;
            Some(r)
        })
    }

    /// Largest modulus among entries outside the diagonal blocks.
    pub fn off_block_residual(&self, x: &CMatrix) -> f64 {
        let mut owner = Vec::with_capacity(self.dim());
        for (b, r) in self.block_ranges().enumerate() {
            owner.extend(std::iter::repeat_n(b, r.len()));
        }
        let mut worst: f64 = 0.0;
        for i in 0..x.nrows() {
            for j in 0..x.ncols() {
                if owner[i] != owner[j] {
                    worst = worst.max(x[(i, j)].norm());
                }
            }
        }
        worst
    }

    pub fn member_check(&self, x: &CMatrix, tol: &ToleranceProfile) -> Result<bool> {
        ensure_same_dim(x.nrows(), self.dim())?;
        ensure_same_dim(x.ncols(), self.dim())?;
        Ok(self.off_block_residual(x) <= tol.atol_structure)
    }

    pub(crate) fn check_member(&self, x: &CMatrix, tol: &ToleranceProfile) -> Result<()> {
        if !self.member_check(x, tol)? {
            return Err(Error::NotMember {
                residual: self.off_block_residual(x),
            });
        }
        Ok(())
    }

    pub fn block(&self, x: &CMatrix, index: usize) -> CMatrix {
        let r = self
            .block_ranges()
            .nth(index)
            .expect("block index in range");
        x.view((r.start, r.start), (r.len(), r.len())).into_owned()
    }

    /// Block-diagonal matrix from its blocks.
    pub fn assemble(&self, blocks: &[CMatrix]) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for (r, b) in self.block_ranges().zip(blocks) {
            out.view_mut((r.start, r.start), (r.len(), r.len()))
                .copy_from(b);
        }
        out
    }
}

/// `τ(x) = Σ_i λ_i tr(x_i) / n_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTrace {
    algebra: FiniteAlgebra,
}

impl NormalizedTrace {
    pub fn new(algebra: FiniteAlgebra) -> Self {
        Self { algebra }
    }

    pub fn algebra(&self) -> &FiniteAlgebra {
        &self.algebra
    }

    pub fn trace(&self, x: &CMatrix) -> Result<Complex64> {
        self.algebra.check_member(x, &ToleranceProfile::default())?;
        Ok(self.trace_unchecked(x))
    }

    pub(crate) fn trace_unchecked(&self, x: &CMatrix) -> Complex64 {
        self.algebra
            .block_ranges()
            .zip(&self.algebra.weights)
            .map(|(r, &w)| {
                let t: Complex64 = r.clone().map(|i| x[(i, i)]).sum();
                t * (w / r.len() as f64)
            })
            .sum()
    }
}

/// Per-block ranks of `(p∧q⊥, p⊥∧q)` and the resulting verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopfRinowCertificate {
    pub exists: bool,
    pub per_block_ranks: Vec<(usize, usize)>,
}

/// Decide whether `p` and `q` are joined by a geodesic inside the algebra:
/// the wedges must have equal rank in every block. In a single-block
/// algebra, equal traces force equal wedge ranks; a violation is reported
/// as `InvariantViolation`.
pub fn hopf_rinow_certify(
    a: &FiniteAlgebra,
    p: &Projection,
    q: &Projection,
) -> Result<HopfRinowCertificate> {
    let tol = *p.tol();
    a.check_member(p.matrix(), &tol)?;
    a.check_member(q.matrix(), &tol)?;
    let mut per_block_ranks = Vec::with_capacity(a.blocks.len());
    for b in 0..a.blocks.len() {
        let pb = Projection::from_trusted(a.block(p.matrix(), b), &tol);
        let qb = Projection::from_trusted(a.block(q.matrix(), b), &tol);
        let parts = halmos_decompose(&pb, &qb)?;
        per_block_ranks.push((parts.e10.rank(), parts.e01.rank()));
    }
    let exists = per_block_ranks.iter().all(|(x, y)| x == y);
    if a.is_factor() {
        let t = NormalizedTrace::new(a.clone());
        let tp = t.trace_unchecked(p.matrix()).re;
        let tq = t.trace_unchecked(q.matrix()).re;
        if (tp - tq).abs() <= 1e-12 && !exists {
            return Err(Error::InvariantViolation {
                what: "equal traces in a factor must give a geodesic".into(),
                measured: (per_block_ranks[0].0 as f64) - (per_block_ranks[0].1 as f64),
                expected: 0.0,
            });
        }
    }
    Ok(HopfRinowCertificate {
        exists,
        per_block_ranks,
    })
}

/// Minimal exponent assembled block by block, so that it is a member of
/// the algebra.
pub fn block_minimal_exponent(
    a: &FiniteAlgebra,
    p: &Projection,
    q: &Projection,
) -> Result<GeodesicExponent> {
    let tol = *p.tol();
    a.check_member(p.matrix(), &tol)?;
    a.check_member(q.matrix(), &tol)?;
    let mut blocks = Vec::with_capacity(a.blocks.len());
    for b in 0..a.blocks.len() {
        let pb = Projection::from_trusted(a.block(p.matrix(), b), &tol);
        let qb = Projection::from_trusted(a.block(q.matrix(), b), &tol);
        blocks.push(minimal_exponent(&pb, &qb, None)?.z().clone());
    }
    GeodesicExponent::new(a.assemble(&blocks), p.clone(), q.clone())
}

fn trace_rank(a: &FiniteAlgebra, r: Ratio<i64>) -> Result<usize> {
    if !a.is_factor() {
        return Err(Error::BadAlgebra(
            "orthogonal pairs are built in a factor M_n".into(),
        ));
    }
    let n = a.dim() as i64;
    let scaled = r * Ratio::from_integer(n);
    if *r.numer() <= 0 || !scaled.is_integer() || 2 * scaled.to_integer() > n {
        return Err(Error::BadTrace(format!("{r} in M_{n}")));
    }
    Ok(scaled.to_integer() as usize)
}

/// Coordinate projections `p`, `q` with `pq = 0` and `τ(p) = τ(q) = r`.
pub fn orthogonal_pair(
    a: &FiniteAlgebra,
    r: Ratio<i64>,
    tol: &ToleranceProfile,
) -> Result<(Projection, Projection)> {
    let k = trace_rank(a, r)?;
    let n = a.dim();
    let mut p = CMatrix::zeros(n, n);
    let mut q = CMatrix::zeros(n, n);
    for i in 0..k {
        p[(i, i)] = Complex64::new(1.0, 0.0);
        q[(k + i, k + i)] = Complex64::new(1.0, 0.0);
    }
    Ok((
        Projection::from_trusted(p, tol),
        Projection::from_trusted(q, tol),
    ))
}

/// `orthogonal_pair` conjugated by a common Haar-random unitary.
pub fn orthogonal_pair_rotated(
    a: &FiniteAlgebra,
    r: Ratio<i64>,
    seed: u64,
    tol: &ToleranceProfile,
) -> Result<(Projection, Projection)> {
    let (p, q) = orthogonal_pair(a, r, tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = haar_unitary(a.dim(), &mut rng);
    let ua = u.adjoint();
    Ok((
        Projection::from_trusted(&u * p.matrix() * &ua, tol),
        Projection::from_trusted(&u * q.matrix() * &ua, tol),
    ))
}

/// `π 2^{1/ρ − 1} r^{1/ρ}`: ρ-length of every geodesic between orthogonal
/// projections of trace `r`.
pub fn orthogonal_geodesic_length(r: f64, rho: f64) -> f64 {
    PI * 2f64.powf(1.0 / rho - 1.0) * r.powf(1.0 / rho)
}

/// `count` distinct geodesics from `p` to `q` (orthogonal, equal rank),
/// one per seeded partial isometry, with their ρ-lengths.
pub fn multi_geodesics(
    p: &Projection,
    q: &Projection,
    count: usize,
    rho: f64,
    trace: &NormalizedTrace,
) -> Result<Vec<(GeodesicExponent, f64)>> {
    if rho.is_nan() || rho < 1.0 {
        return Err(Error::BadRho(rho));
    }
    if p.rank() != q.rank() {
        return Err(Error::RankMismatch {
            source_rank: p.rank(),
            target_rank: q.rank(),
        });
    }
    let tol = *p.tol();
    let overlap = operator_norm(&(p.matrix() * q.matrix()));
    if overlap > tol.atol_structure {
        return Err(Error::InvalidArgument(format!(
            "projections are not orthogonal (‖pq‖ = {overlap:.3e})"
        )));
    }
    let r = trace.trace(p.matrix())?.re;
    let expected = orthogonal_geodesic_length(r, rho);
    (1..=count as u64)
        .map(|seed| {
            let w = partial_isometry(p, q, Some(seed))?;
            let g = minimal_exponent(p, q, Some(&w))?;
            let len = rho_length(&g, rho, trace)?;
            if (len - expected).abs() > 1e-9 {
                return Err(Error::InvariantViolation {
                    what: "ρ-length of orthogonal geodesic".into(),
                    measured: len,
                    expected,
                });
            }
            Ok((g, len))
        })
        .collect()
}
