//! Geodesics `t ↦ e^{tz} p e^{−tz}` of the projection manifold.
//!
//! A minimal exponent between `p` and `q` is assembled part by part from
//! the Halmos decomposition of the pair:
//!
//! * zero on `p∧q` and `p⊥∧q⊥`, where the projections already agree;
//! * `i(π/2)(w + w*)` on `p∧q⊥ + p⊥∧q`, for a partial isometry `w` from
//!   `p∧q⊥` onto `p⊥∧q`;
//! * on the generic part, the principal logarithm of `v0·(2p0 − 1)`, where
//!   `v0` is the polar factor of `p0 + q0 − 1`.

use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::factor::NormalizedTrace;
use crate::numkit::{
    ensure_same_dim, hermitian_norm, identity, log_unitary_principal, operator_norm, rho_norm,
    skew_part, CMatrix, SkewExp, I,
};
use crate::projlat::{
    davis_symmetry_from, halmos_decompose, principal_angles_from, HalmosParts, Projection,
};
use crate::sample::haar_unitary;

/// Endpoint tolerance of the exponent contract.
pub const ENDPOINT_TOL: f64 = 1e-8;

/// Murray–von Neumann witness: `w* w = source`, `w w* = target`.
#[derive(Debug, Clone)]
pub struct PartialIsometry {
    pub w: CMatrix,
    pub source: Projection,
    pub target: Projection,
}

impl PartialIsometry {
    pub fn residual(&self) -> f64 {
        let a = hermitian_norm(&(self.w.adjoint() * &self.w - self.source.matrix()));
        let b = hermitian_norm(&(&self.w * self.w.adjoint() - self.target.matrix()));
        a.max(b)
    }
}

/// Partial isometry mapping the canonical basis of `range(source)` onto
/// that of `range(target)`. A seed right-multiplies the source basis by a
/// Haar-random unitary drawn from that seed.
pub fn partial_isometry(
    source: &Projection,
    target: &Projection,
    seed: Option<u64>,
) -> Result<PartialIsometry> {
    ensure_same_dim(source.dim(), target.dim())?;
    if source.rank() != target.rank() {
        return Err(Error::RankMismatch {
            source_rank: source.rank(),
            target_rank: target.rank(),
        });
    }
    let mut bs = source.canonical_basis();
    let bt = target.canonical_basis();
    if let Some(seed) = seed.filter(|_| source.rank() > 0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        bs *= haar_unitary(source.rank(), &mut rng);
    }
    Ok(PartialIsometry {
        w: bt * bs.adjoint(),
        source: source.clone(),
        target: target.clone(),
    })
}

/// Skew-Hermitian, `p`-codiagonal `z` with `e^z p e^{−z} = q`.
#[derive(Debug, Clone)]
pub struct GeodesicExponent {
    z: CMatrix,
    p: Projection,
    q: Projection,
}

impl GeodesicExponent {
    /// Validate all exponent invariants.
    pub fn new(z: CMatrix, p: Projection, q: Projection) -> Result<Self> {
        ensure_same_dim(z.nrows(), p.dim())?;
        ensure_same_dim(p.dim(), q.dim())?;
        let g = Self { z, p, q };
        let r = verify_geodesic(&g);
        let tol = *g.p.tol();
        let checks = [
            ("skewness", r.skewness, tol.atol_structure),
            ("codiagonality", r.codiagonality, tol.atol_structure),
            ("norm bound", r.norm_excess, tol.atol_spectral),
            ("endpoint", r.endpoint, ENDPOINT_TOL),
        ];
        for (what, measured, bound) in checks {
            if measured > bound {
                return Err(Error::InvariantViolation {
                    what: format!("geodesic exponent {what}"),
                    measured,
                    expected: bound,
                });
            }
        }
        Ok(g)
    }

    /// Wrap without validation, e.g. to measure residuals of a perturbed
    /// exponent.
    pub fn new_unchecked(z: CMatrix, p: Projection, q: Projection) -> Self {
        Self { z, p, q }
    }

    pub fn z(&self) -> &CMatrix {
        &self.z
    }

    pub fn base(&self) -> &Projection {
        &self.p
    }

    pub fn target(&self) -> &Projection {
        &self.q
    }

    pub fn norm(&self) -> f64 {
        operator_norm(&self.z)
    }

    /// `−z`, the exponent of the reversed geodesic from `q` to `p`.
    pub fn reversed(&self) -> Self {
        Self {
            z: -self.z.clone(),
            p: self.q.clone(),
            q: self.p.clone(),
        }
    }

    /// Spectral data for evaluating many points along the geodesic.
    pub fn path(&self) -> GeodesicPath<'_> {
        GeodesicPath {
            g: self,
            exp: SkewExp::from_skew_unchecked(&self.z),
        }
    }
}

/// A geodesic with its exponent diagonalized once.
#[derive(Debug, Clone)]
pub struct GeodesicPath<'a> {
    g: &'a GeodesicExponent,
    exp: SkewExp,
}

impl GeodesicPath<'_> {
    pub fn unitary(&self, t: f64) -> CMatrix {
        self.exp.at(t)
    }

    pub fn point_matrix(&self, t: f64) -> CMatrix {
        let u = self.exp.at(t);
        &u * self.g.p.matrix() * u.adjoint()
    }

    pub fn point(&self, t: f64) -> Projection {
        Projection::from_trusted(self.point_matrix(t), self.g.p.tol())
    }
}

/// Residuals of the exponent contract.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeodesicResiduals {
    /// `‖z + z*‖`
    pub skewness: f64,
    /// `‖z(2p − 1) + (2p − 1)z‖`
    pub codiagonality: f64,
    /// `max(0, ‖z‖ − π/2)`
    pub norm_excess: f64,
    /// `‖e^z p e^{−z} − q‖` with the exponential of the skew part of `z`
    pub endpoint: f64,
}

impl GeodesicResiduals {
    pub fn max(&self) -> f64 {
        self.skewness
            .max(self.codiagonality)
            .max(self.norm_excess)
            .max(self.endpoint)
    }
}

pub fn verify_geodesic(g: &GeodesicExponent) -> GeodesicResiduals {
    let z = &g.z;
    let s = g.p.symmetry();
    let skewness = operator_norm(&(z + z.adjoint()));
    let codiagonality = operator_norm(&(z * &s + &s * z));
    let norm_excess = (operator_norm(z) - FRAC_PI_2).max(0.0);
    let u = SkewExp::from_skew_unchecked(&skew_part(z)).at(1.0);
    let endpoint = hermitian_norm(&(&u * g.p.matrix() * u.adjoint() - g.q.matrix()));
    GeodesicResiduals {
        skewness,
        codiagonality,
        norm_excess,
        endpoint,
    }
}

/// `‖e^z (p∧q⊥) e^{−z} − p⊥∧q‖`: the exponential carries the wedge of `p`
/// onto the wedge of `q`.
pub fn intertwining_residual(g: &GeodesicExponent) -> Result<f64> {
    let parts = halmos_decompose(&g.p, &g.q)?;
    let u = SkewExp::from_skew_unchecked(&g.z).at(1.0);
    Ok(hermitian_norm(
        &(&u * parts.e10.matrix() * u.adjoint() - parts.e01.matrix()),
    ))
}

fn check_exists(parts: &HalmosParts) -> Result<()> {
    let (r10, r01) = (parts.e10.rank(), parts.e01.rank());
    if r10 != r01 {
        return Err(Error::NoGeodesic {
            rank_10: r10,
            rank_01: r01,
        });
    }
    Ok(())
}

/// `rank(p∧q⊥) = rank(p⊥∧q)`.
pub fn geodesic_exists(p: &Projection, q: &Projection) -> Result<bool> {
    let parts = halmos_decompose(p, q)?;
    Ok(parts.e10.rank() == parts.e01.rank())
}

/// `p∧q⊥ = p⊥∧q = 0`; fails with `NoGeodesic` when no geodesic exists.
pub fn unique_geodesic(p: &Projection, q: &Projection) -> Result<bool> {
    let parts = halmos_decompose(p, q)?;
    check_exists(&parts)?;
    Ok(parts.e10.is_zero())
}

/// Minimal exponent joining `p` to `q`. When `w` is `None` the default
/// partial isometry (`partial_isometry(e10, e01, None)`) is used.
pub fn minimal_exponent(
    p: &Projection,
    q: &Projection,
    w: Option<&PartialIsometry>,
) -> Result<GeodesicExponent> {
    ensure_same_dim(p.dim(), q.dim())?;
    let n = p.dim();
    let tol = *p.tol();
    if p.distance(q) <= tol.atol_structure {
        return Ok(GeodesicExponent::new_unchecked(
            CMatrix::zeros(n, n),
            p.clone(),
            q.clone(),
        ));
    }
    let parts = halmos_decompose(p, q)?;
    check_exists(&parts)?;
    let mut z = CMatrix::zeros(n, n);

    if !parts.e10.is_zero() {
        let default;
        let w = match w {
            Some(w) => {
                if w.source.distance(&parts.e10) > tol.atol_structure
                    || w.target.distance(&parts.e01) > tol.atol_structure
                {
                    return Err(Error::InvalidArgument(
                        "partial isometry must map p∧q⊥ onto p⊥∧q".into(),
                    ));
                }
                w
            }
            None => {
                default = partial_isometry(&parts.e10, &parts.e01, None)?;
                &default
            }
        };
        z += (&w.w + w.w.adjoint()) * (I * FRAC_PI_2);
    }

    if !parts.e0.is_zero() {
        let davis = davis_symmetry_from(p, q, &parts)?;
        let gp = &davis.generic;
        let g = gp.dim();
        let s = gp.p0.scale(2.0) - identity(g);
        // Either order of the product is a candidate; the one carrying p0 to
        // q0 is kept.
        let candidates = [&s * &davis.v0, &davis.v0 * &s];
        let u = candidates
            .into_iter()
            .find(|u| hermitian_norm(&(u * &gp.p0 * u.adjoint() - &gp.q0)) <= ENDPOINT_TOL)
            .ok_or_else(|| Error::Internal("neither S·v0 nor v0·S carries p0 onto q0".into()))?;
        let z0 = log_unitary_principal(&u, &tol)?;
        z += gp.embed(&z0);
    }

    GeodesicExponent::new(skew_part(&z), p.clone(), q.clone())
}

/// `e^{tz} p e^{−tz}`.
pub fn geodesic_point(g: &GeodesicExponent, t: f64) -> Projection {
    g.path().point(t)
}

/// Length of the minimal geodesic in operator norm: `π/2` if the wedge is
/// nonzero, otherwise the largest principal angle.
pub fn geodesic_distance(p: &Projection, q: &Projection) -> Result<f64> {
    let parts = halmos_decompose(p, q)?;
    check_exists(&parts)?;
    let wedge = if parts.e10.is_zero() { 0.0 } else { FRAC_PI_2 };
    let angle = principal_angles_from(p, q, &parts).largest().unwrap_or(0.0);
    Ok(wedge.max(angle))
}

/// `‖z‖_ρ`.
pub fn rho_length(g: &GeodesicExponent, rho: f64, trace: &NormalizedTrace) -> Result<f64> {
    rho_norm(&g.z, rho, trace)
}

/// Norm used to measure tangent vectors.
#[derive(Debug, Clone, Copy)]
pub enum CurveNorm<'a> {
    Operator,
    Rho(f64, &'a NormalizedTrace),
}

impl CurveNorm<'_> {
    pub fn measure(&self, x: &CMatrix) -> Result<f64> {
        match self {
            CurveNorm::Operator => Ok(operator_norm(x)),
            CurveNorm::Rho(rho, trace) => rho_norm(x, *rho, trace),
        }
    }
}

/// Chordal length `Σ ‖x_{k+1} − x_k‖` of a sampled curve.
pub fn curve_length(points: &[Projection], norm: CurveNorm<'_>) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints(points.len()));
    }
    let n = points[0].dim();
    for p in points {
        ensure_same_dim(p.dim(), n)?;
    }
    points.windows(2).try_fold(0.0, |acc, w| {
        Ok(acc + norm.measure(&(w[1].matrix() - w[0].matrix()))?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::FiniteAlgebra;
    use crate::numkit::{diag, frobenius, real_matrix, unit, ToleranceProfile};
    use crate::projlat::{from_span, make_projection};
    use crate::sample::{self, PairLayout};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_6};

    fn tol() -> ToleranceProfile {
        ToleranceProfile::default()
    }

    fn proj(m: &CMatrix) -> Projection {
        make_projection(m, &tol()).unwrap()
    }

    fn line(theta: f64) -> Projection {
        from_span(&real_matrix(&[&[theta.cos()], &[theta.sin()]]), &tol()).unwrap()
    }

    fn rot_generator() -> CMatrix {
        real_matrix(&[&[0.0, -1.0], &[1.0, 0.0]])
    }

    #[test]
    fn existence_examples() {
        let p = proj(&diag(&[1.0, 0.0]));
        let q = proj(&diag(&[0.0, 1.0]));
        assert!(geodesic_exists(&p, &q).unwrap());
        let p3 = proj(&diag(&[1.0, 0.0, 0.0]));
        let zero = Projection::zero(3, &tol());
        assert!(!geodesic_exists(&p3, &zero).unwrap());
        assert!(matches!(
            unique_geodesic(&p3, &zero),
            Err(Error::NoGeodesic {
                rank_10: 1,
                rank_01: 0
            })
        ));
        assert!(!unique_geodesic(&p, &q).unwrap());
        assert!(unique_geodesic(&p, &p).unwrap());
        assert!(unique_geodesic(&p, &line(FRAC_PI_3)).unwrap());
    }

    #[test]
    fn equal_rank_always_joinable() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(17);
        for n in [3, 5, 8] {
            for k in 0..=n {
                let (a, b) = sample::generic_pair(n, k, &mut rng);
                assert!(geodesic_exists(&proj(&a), &proj(&b)).unwrap());
            }
        }
    }

    #[test]
    fn partial_isometry_examples() {
        let p = proj(&diag(&[1.0, 0.0]));
        let q = proj(&diag(&[0.0, 1.0]));
        let w = partial_isometry(&p, &p, None).unwrap();
        assert!(frobenius(&(&w.w - diag(&[1.0, 0.0]))) < 1e-15);
        let w = partial_isometry(&p, &q, None).unwrap();
        assert!(frobenius(&(&w.w - unit(2, 1, 0))) < 1e-15);
        assert!(w.residual() < 1e-15);
        let w1 = partial_isometry(&p, &q, Some(1)).unwrap();
        let w2 = partial_isometry(&p, &q, Some(2)).unwrap();
        assert!(w1.residual() < 1e-13 && w2.residual() < 1e-13);
        assert!(frobenius(&(&w1.w - &w2.w)) > 1e-6);
        let r2 = proj(&diag(&[1.0, 1.0]));
        assert!(matches!(
            partial_isometry(&p, &r2, None),
            Err(Error::RankMismatch { .. })
        ));
    }

    #[test]
    fn exponent_of_rotated_line() {
        let p = proj(&diag(&[1.0, 0.0]));
        let q = line(FRAC_PI_3);
        let g = minimal_exponent(&p, &q, None).unwrap();
        assert!(frobenius(&(g.z() - rot_generator().scale(FRAC_PI_3))) < 1e-12);
        assert!(verify_geodesic(&g).max() < 1e-12);
        let mid = geodesic_point(&g, 0.5);
        assert!(frobenius(&(mid.matrix() - line(FRAC_PI_6).matrix())) < 1e-12);
        assert!(frobenius(&(geodesic_point(&g, 0.0).matrix() - p.matrix())) < 1e-14);
        assert!(frobenius(&(geodesic_point(&g, 1.0).matrix() - q.matrix())) < 1e-12);
    }

    #[test]
    fn exponent_of_equal_pair_is_zero() {
        let p = proj(&diag(&[1.0, 0.0, 1.0]));
        let g = minimal_exponent(&p, &p, None).unwrap();
        assert_eq!(frobenius(g.z()), 0.0);
    }

    #[test]
    fn exponent_of_orthogonal_lines() {
        let p = proj(&diag(&[1.0, 0.0]));
        let q = proj(&diag(&[0.0, 1.0]));
        let g = minimal_exponent(&p, &q, None).unwrap();
        let w = unit(2, 1, 0);
        let sum = &w + w.adjoint();
        assert!(frobenius(&(g.z() - &sum * (I * FRAC_PI_2))) < 1e-14);
        let u = crate::numkit::exp_skew(g.z(), &tol()).unwrap();
        assert!(frobenius(&(&u - &sum * I)) < 1e-14);
        assert_abs_diff_eq!(
            geodesic_distance(&p, &q).unwrap(),
            FRAC_PI_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(g.norm(), FRAC_PI_2, epsilon = 1e-14);
    }

    #[test]
    fn distance_examples() {
        let p = proj(&diag(&[1.0, 0.0]));
        assert_eq!(geodesic_distance(&p, &p).unwrap(), 0.0);
        assert_abs_diff_eq!(
            geodesic_distance(&p, &line(FRAC_PI_3)).unwrap(),
            FRAC_PI_3,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rho_length_examples() {
        let t2 = NormalizedTrace::new(FiniteAlgebra::single(2));
        let p = proj(&diag(&[1.0, 0.0]));
        let g = minimal_exponent(&p, &p, None).unwrap();
        assert_eq!(rho_length(&g, 2.0, &t2).unwrap(), 0.0);
        let q = proj(&diag(&[0.0, 1.0]));
        let g = minimal_exponent(&p, &q, None).unwrap();
        assert_abs_diff_eq!(
            rho_length(&g, 2.0, &t2).unwrap(),
            FRAC_PI_2,
            epsilon = 1e-14
        );
        assert!(matches!(rho_length(&g, 0.9, &t2), Err(Error::BadRho(_))));
    }

    #[test]
    fn rho_length_of_quarter_trace_jones_pair() {
        // M_4, rank-1 p and q at angle π/3. z has singular values π/3 on
        // the two-dimensional generic part, so τ(z*z) = (2/4)(π/3)².
        let jp = crate::jones::jones_pair(4, 1).unwrap();
        let g = minimal_exponent(&jp.p, &jp.q, None).unwrap();
        let t4 = NormalizedTrace::new(FiniteAlgebra::single(4));
        let direct = (0.5f64).sqrt() * FRAC_PI_3;
        assert_abs_diff_eq!(rho_length(&g, 2.0, &t4).unwrap(), direct, epsilon = 1e-12);
    }

    #[test]
    fn chordal_length_of_sampled_geodesic() {
        let p = proj(&diag(&[1.0, 0.0]));
        assert_eq!(
            curve_length(&[p.clone(), p.clone()], CurveNorm::Operator).unwrap(),
            0.0
        );
        assert!(matches!(
            curve_length(std::slice::from_ref(&p), CurveNorm::Operator),
            Err(Error::TooFewPoints(1))
        ));
        let g = minimal_exponent(&p, &line(FRAC_PI_3), None).unwrap();
        let path = g.path();
        let pts: Vec<Projection> = (0..1000).map(|k| path.point(k as f64 / 999.0)).collect();
        let len = curve_length(&pts, CurveNorm::Operator).unwrap();
        assert_abs_diff_eq!(len, FRAC_PI_3, epsilon = 1e-4);
        assert!(len <= FRAC_PI_3 + 1e-12);
    }

    #[test]
    fn verify_detects_perturbations() {
        let p = proj(&diag(&[1.0, 0.0]));
        let g = minimal_exponent(&p, &line(FRAC_PI_3), None).unwrap();
        let h = diag(&[1.0, -1.0]).scale(1e-3);
        let bad = GeodesicExponent::new_unchecked(g.z() + h, p.clone(), line(FRAC_PI_3));
        assert_abs_diff_eq!(verify_geodesic(&bad).skewness, 2e-3, epsilon = 1e-12);
        let scaled = GeodesicExponent::new_unchecked(g.z().scale(1.5), p.clone(), line(FRAC_PI_3));
        let r = verify_geodesic(&scaled);
        assert!(r.endpoint > 0.1);
        assert_abs_diff_eq!(r.endpoint, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn reversal_symmetry() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(31);
        for force in [false, true] {
            for _ in 0..10 {
                let (a, b) = PairLayout::random(6, 3, force, &mut rng).build_rotated(&mut rng);
                let (p, q) = (proj(&a), proj(&b));
                let g = minimal_exponent(&p, &q, None).unwrap();
                let back = minimal_exponent(&q, &p, None).unwrap();
                assert_abs_diff_eq!(g.norm(), back.norm(), epsilon = 1e-10);
                assert!(verify_geodesic(&g.reversed()).max() < 1e-8);
            }
        }
    }

    #[test]
    fn block_diagonal_pairs_give_block_diagonal_exponents() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(41);
        for force in [false, true] {
            for _ in 0..8 {
                let (a1, b1) = PairLayout::random(4, 2, force, &mut rng).build_rotated(&mut rng);
                let (a2, b2) = PairLayout::random(5, 2, force, &mut rng).build_rotated(&mut rng);
                let mut a = CMatrix::zeros(9, 9);
                let mut b = CMatrix::zeros(9, 9);
                a.view_mut((0, 0), (4, 4)).copy_from(&a1);
                a.view_mut((4, 4), (5, 5)).copy_from(&a2);
                b.view_mut((0, 0), (4, 4)).copy_from(&b1);
                b.view_mut((4, 4), (5, 5)).copy_from(&b2);
                let g = minimal_exponent(&proj(&a), &proj(&b), None).unwrap();
                let alg = FiniteAlgebra::new(vec![4, 5], vec![0.5, 0.5]).unwrap();
                assert!(alg.off_block_residual(g.z()) < 1e-9);
            }
        }
    }
}
