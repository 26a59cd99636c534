//! Finite models of index-`τ^{-1}` projection pairs, trace-preserving
//! conditional expectations as orthogonal projections on the
//! Hilbert–Schmidt space of `M_n`, geodesic paths of expectations and the
//! parallel transport equation along them.
//!
//! Vectorization is column-major and scaled by `n^{-1/2}`, so the Euclidean
//! inner product of vectors equals `τ(x* y)` for the normalized trace `τ`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::factor::{FiniteAlgebra, NormalizedTrace};
use crate::geo::{geodesic_distance, minimal_exponent, rho_length, GeodesicExponent};
use crate::numkit::{
    c, eig_symmetrized, hermitian_norm, identity, operator_norm, CMatrix, SkewExp, ToleranceProfile,
};
use crate::projlat::{halmos_decompose, HalmosRanks, Projection};

/// Tolerance for the closed-form distance assertions.
pub const INDEX_TOL: f64 = 1e-9;

/// `p, q ∈ M_{km}` with `pqp = τ p`, `τ = 1/m`, `rank p = rank q = k`.
#[derive(Debug, Clone)]
pub struct JonesPair {
    pub p: Projection,
    pub q: Projection,
    pub tau: f64,
    pub m: usize,
    pub k: usize,
}

impl JonesPair {
    pub fn dim(&self) -> usize {
        self.k * self.m
    }

    pub fn trace(&self) -> NormalizedTrace {
        NormalizedTrace::new(FiniteAlgebra::single(self.dim()))
    }

    /// `‖pqp − τp‖`.
    pub fn relation_residual(&self) -> f64 {
        let p = self.p.matrix();
        hermitian_norm(&(p * self.q.matrix() * p - p.scale(self.tau)))
    }

    pub fn halmos_ranks(&self) -> Result<HalmosRanks> {
        Ok(halmos_decompose(&self.p, &self.q)?.ranks())
    }
}

/// Build the pair: `p` projects onto `f_{2j}`, `q` onto
/// `cos θ f_{2j} + sin θ f_{2j+1}` for `j < k`, with `θ = arccos(τ^{1/2})`.
pub fn jones_pair(m: usize, k: usize) -> Result<JonesPair> {
    jones_pair_with(m, k, &ToleranceProfile::default())
}

pub fn jones_pair_with(m: usize, k: usize, tol: &ToleranceProfile) -> Result<JonesPair> {
    if m < 2 || k < 1 {
        return Err(Error::InvalidArgument(format!(
            "need m >= 2 and k >= 1, got m = {m}, k = {k}"
        )));
    }
    let n = k * m;
    let tau = 1.0 / m as f64;
    let theta = tau.sqrt().acos();
    let (s, co) = theta.sin_cos();
    let mut p = CMatrix::zeros(n, n);
    let mut q = CMatrix::zeros(n, n);
    for j in 0..k {
        let (a, b) = (2 * j, 2 * j + 1);
        p[(a, a)] = c(1.0, 0.0);
        q[(a, a)] = c(co * co, 0.0);
        q[(a, b)] = c(co * s, 0.0);
        q[(b, a)] = c(co * s, 0.0);
        q[(b, b)] = c(s * s, 0.0);
    }
    Ok(JonesPair {
        p: Projection::from_trusted(p, tol),
        q: Projection::from_trusted(q, tol),
        tau,
        m,
        k,
    })
}

/// Distance data of a Jones pair.
#[derive(Debug, Clone)]
pub struct IndexDistance {
    pub tau: f64,
    /// Measured operator-norm distance.
    pub d: f64,
    exponent: GeodesicExponent,
    trace: NormalizedTrace,
}

/// `arccos(τ^{1/2})`.
pub fn expected_distance(tau: f64) -> f64 {
    tau.sqrt().acos()
}

/// `τ^{1/ρ} arccos(τ^{1/2})`.
pub fn expected_rho_distance(tau: f64, rho: f64) -> f64 {
    tau.powf(1.0 / rho) * expected_distance(tau)
}

impl IndexDistance {
    /// ρ-length of the minimal exponent, with no assertion attached.
    pub fn measured_rho(&self, rho: f64) -> Result<f64> {
        rho_length(&self.exponent, rho, &self.trace)
    }

    /// ρ-distance, checked against `τ^{1/ρ} arccos(τ^{1/2})`.
    pub fn d_rho(&self, rho: f64) -> Result<f64> {
        let measured = self.measured_rho(rho)?;
        let expected = expected_rho_distance(self.tau, rho);
        if (measured - expected).abs() > INDEX_TOL {
            return Err(Error::InvariantViolation {
                what: format!("ρ-distance of Jones pair at ρ = {rho}"),
                measured,
                expected,
            });
        }
        Ok(measured)
    }

    pub fn exponent(&self) -> &GeodesicExponent {
        &self.exponent
    }
}

/// Operator-norm distance of a Jones pair, checked against
/// `arccos(τ^{1/2})`.
pub fn index_distance(jp: &JonesPair) -> Result<IndexDistance> {
    let d = geodesic_distance(&jp.p, &jp.q)?;
    let expected = expected_distance(jp.tau);
    if (d - expected).abs() > INDEX_TOL {
        return Err(Error::InvariantViolation {
            what: "distance of Jones pair".into(),
            measured: d,
            expected,
        });
    }
    let exponent = minimal_exponent(&jp.p, &jp.q, None)?;
    let dz = exponent.norm();
    if (dz - expected).abs() > INDEX_TOL {
        return Err(Error::InvariantViolation {
            what: "norm of Jones exponent".into(),
            measured: dz,
            expected,
        });
    }
    Ok(IndexDistance {
        tau: jp.tau,
        d,
        exponent,
        trace: jp.trace(),
    })
}

/// Unital *-subalgebra of `M_n`.
#[derive(Debug, Clone, PartialEq)]
pub enum SubalgebraSpec {
    /// Block-diagonal matrices for a partition of the indices `0..n`.
    BlockPartition(Vec<Vec<usize>>),
    /// `M_k ⊗ I_m` inside `M_{km}`.
    TensorFactor { k: usize, m: usize },
    /// The linear span of the given matrices.
    MatrixSpan(Vec<CMatrix>),
}

impl SubalgebraSpec {
    /// Diagonal subalgebra of `M_n`.
    pub fn diagonal(n: usize) -> Self {
        SubalgebraSpec::BlockPartition((0..n).map(|i| vec![i]).collect())
    }

    /// Consecutive blocks of the given sizes.
    pub fn blocks(sizes: &[usize]) -> Self {
        let mut start = 0;
        let parts = sizes
            .iter()
            .map(|&s| {
                let part = (start..start + s).collect();
                start += s;
                part
            })
            .collect();
        SubalgebraSpec::BlockPartition(parts)
    }

    /// Spanning set of the subalgebra inside `M_n`.
    pub fn spanning_set(&self, n: usize) -> Result<Vec<CMatrix>> {
        match self {
            SubalgebraSpec::BlockPartition(parts) => {
                let mut seen = vec![false; n];
                for &i in parts.iter().flatten() {
                    if i >= n || seen[i] {
                        return Err(Error::NotSubalgebra(format!(
                            "index {i} is out of range or repeated in the partition"
                        )));
                    }
                    seen[i] = true;
                }
                if seen.iter().any(|s| !s) {
                    return Err(Error::NotSubalgebra(
                        "partition does not cover all indices".into(),
                    ));
                }
                let mut out = Vec::new();
                for part in parts {
                    for &i in part {
                        for &j in part {
                            out.push(crate::numkit::unit(n, i, j));
                        }
                    }
                }
                Ok(out)
            }
            SubalgebraSpec::TensorFactor { k, m } => {
                if k * m != n || *k == 0 {
                    return Err(Error::NotSubalgebra(format!(
                        "tensor factor {k}x{m} does not fit M_{n}"
                    )));
                }
                let mut out = Vec::new();
                for a in 0..*k {
                    for a2 in 0..*k {
                        let mut x = CMatrix::zeros(n, n);
                        for b in 0..*m {
                            x[(a * m + b, a2 * m + b)] = c(1.0, 0.0);
                        }
                        out.push(x);
                    }
                }
                Ok(out)
            }
            SubalgebraSpec::MatrixSpan(mats) => {
                if let Some(bad) = mats.iter().find(|x| x.nrows() != n || x.ncols() != n) {
                    return Err(Error::DimensionMismatch {
                        left: bad.nrows(),
                        right: n,
                    });
                }
                Ok(mats.clone())
            }
        }
    }

    /// The conjugate subalgebra `u N u*`, as a matrix span.
    pub fn conjugated(&self, u: &CMatrix) -> Result<Self> {
        let n = u.nrows();
        let span = self.spanning_set(n)?;
        Ok(SubalgebraSpec::MatrixSpan(
            span.iter().map(|x| u * x * u.adjoint()).collect(),
        ))
    }
}

/// Column-major vectorization scaled by `n^{-1/2}`.
pub fn vectorize(x: &CMatrix) -> CMatrix {
    let n = x.nrows();
    let s = 1.0 / (n as f64).sqrt();
    CMatrix::from_iterator(n * n, 1, x.iter().map(|v| v * s))
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &CMatrix, n: usize) -> CMatrix {
    let s = (n as f64).sqrt();
    CMatrix::from_iterator(n, n, v.iter().map(|x| x * s))
}

/// Orthonormal basis (as columns of an `n² × d` matrix) of the span of
/// vectorized matrices.
fn orthonormal_span(mats: &[CMatrix], n: usize, tol: &ToleranceProfile) -> CMatrix {
    let dim = n * n;
    if mats.is_empty() {
        return CMatrix::zeros(dim, 0);
    }
    let mut stacked = CMatrix::zeros(dim, mats.len());
    for (j, x) in mats.iter().enumerate() {
        stacked.set_column(j, &vectorize(x).column(0));
    }
    let svd = stacked.svd(true, false);
    let s = &svd.singular_values;
    let smax = s.iter().fold(0.0, |m: f64, v| m.max(*v));
    let cutoff = tol.rank_cutoff(dim, smax).max(1e-12 * smax);
    let u = svd.u.expect("left singular vectors requested");
    let keep: Vec<usize> = (0..s.len()).filter(|&j| s[j] > cutoff).collect();
    let mut out = CMatrix::zeros(dim, keep.len());
    for (k, &j) in keep.iter().enumerate() {
        out.set_column(k, &u.column(j));
    }
    out
}

/// Trace-preserving conditional expectation, as an orthogonal projection
/// on the `n²`-dimensional Hilbert–Schmidt space.
#[derive(Debug, Clone)]
pub struct ExpectationProjection {
    pub big: Projection,
    pub spec: SubalgebraSpec,
    n: usize,
    /// Orthonormal (for `τ(x* y)`) basis of the subalgebra.
    basis: Vec<CMatrix>,
}

impl ExpectationProjection {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `E(x)`.
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        unvectorize(&(self.big.matrix() * vectorize(x)), self.n)
    }

    pub fn subalgebra_basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn axioms(&self, samples: &[CMatrix]) -> ExpectationAxioms {
        expectation_axioms(self.big.matrix(), self.n, samples)
    }
}

/// Build the expectation onto a unital *-subalgebra.
pub fn expectation_projection(
    spec: &SubalgebraSpec,
    n: usize,
    tol: &ToleranceProfile,
) -> Result<ExpectationProjection> {
    let span = spec.spanning_set(n)?;
    let q = orthonormal_span(&span, n, tol);
    let big = &q * q.adjoint();
    let basis: Vec<CMatrix> = (0..q.ncols())
        .map(|j| unvectorize(&q.columns(j, 1).into_owned(), n))
        .collect();
    let e = ExpectationProjection {
        big: Projection::from_trusted(big, tol),
        spec: spec.clone(),
        n,
        basis,
    };
    let outside = |x: &CMatrix| {
        let v = vectorize(x);
        let r = &v - e.big.matrix() * &v;
        r.norm() / v.norm().max(1.0)
    };
    let bound = tol.atol_structure;
    let r = outside(&identity(n));
    if r > bound {
        return Err(Error::NotSubalgebra(format!(
            "identity is not in the span ({r:.3e})"
        )));
    }
    for (i, a) in e.basis.iter().enumerate() {
        let r = outside(&a.adjoint());
        if r > bound {
            return Err(Error::NotSubalgebra(format!(
                "not closed under adjoint ({r:.3e})"
            )));
        }
        for b in &e.basis[i..] {
            let r = outside(&(a * b)).max(outside(&(b * a)));
            if r > bound {
                return Err(Error::NotSubalgebra(format!(
                    "not closed under products ({r:.3e})"
                )));
            }
        }
    }
    Ok(e)
}

/// Residuals of the conditional-expectation axioms for the map
/// `x ↦ unvec(P vec x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectationAxioms {
    pub idempotency: f64,
    pub unitality: f64,
    pub star: f64,
    pub trace: f64,
    pub bimodule: f64,
}

impl ExpectationAxioms {
    pub fn max(&self) -> f64 {
        self.idempotency
            .max(self.unitality)
            .max(self.star)
            .max(self.trace)
            .max(self.bimodule)
    }
}

/// Check the axioms against `samples`; the bimodule property uses an
/// orthonormal basis of the range of `P` as the algebra elements.
pub fn expectation_axioms(big: &CMatrix, n: usize, samples: &[CMatrix]) -> ExpectationAxioms {
    let apply = |x: &CMatrix| unvectorize(&(big * vectorize(x)), n);
    let tr = NormalizedTrace::new(FiniteAlgebra::single(n));
    let idempotency = hermitian_norm(&(big * big - big));
    let unitality = operator_norm(&(apply(&identity(n)) - identity(n)));
    let mut star: f64 = 0.0;
    let mut trace: f64 = 0.0;
    let mut bimodule: f64 = 0.0;
    let range = eig_symmetrized(big).select(|l| l > 0.5);
    let algebra: Vec<CMatrix> = (0..range.ncols())
        .map(|j| unvectorize(&range.columns(j, 1).into_owned(), n))
        .collect();
    for x in samples {
        let ex = apply(x);
        star = star.max(operator_norm(&(apply(&x.adjoint()) - ex.adjoint())));
        trace = trace.max((tr.trace_unchecked(&ex) - tr.trace_unchecked(x)).norm());
        for a in &algebra {
            for b in &algebra {
                let lhs = apply(&(a * x * b));
                let rhs = a * &ex * b;
                bimodule = bimodule.max(operator_norm(&(lhs - rhs)));
            }
        }
    }
    ExpectationAxioms {
        idempotency,
        unitality,
        star,
        trace,
        bimodule,
    }
}

/// Matrix units `E_ij` of `M_n`.
pub fn matrix_units(n: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            out.push(crate::numkit::unit(n, i, j));
        }
    }
    out
}

/// Geodesic `t ↦ e^{tZ} e_0 e^{−tZ}` between two expectation projections.
#[derive(Debug, Clone)]
pub struct ExpectationPath {
    pub e0: ExpectationProjection,
    pub e1: ExpectationProjection,
    exponent: GeodesicExponent,
    exp: SkewExp,
    n: usize,
    /// `‖e_0 − e_1‖`.
    pub separation: f64,
}

impl ExpectationPath {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn exponent(&self) -> &GeodesicExponent {
        &self.exponent
    }

    /// `Z` on the Hilbert–Schmidt space.
    pub fn z(&self) -> &CMatrix {
        self.exponent.z()
    }

    /// `e^{tZ}`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        self.exp.at(t)
    }

    /// `P(t) = e^{tZ} P(0) e^{−tZ}`.
    pub fn projection_at(&self, t: f64) -> CMatrix {
        let u = self.exp.at(t);
        &u * self.e0.big.matrix() * u.adjoint()
    }

    /// `E(t, x)`.
    pub fn apply(&self, t: f64, x: &CMatrix) -> CMatrix {
        unvectorize(&(self.projection_at(t) * vectorize(x)), self.n)
    }

    /// `Γ_t(x) = unvec(e^{tZ} vec x)`.
    pub fn gamma(&self, t: f64, x: &CMatrix) -> CMatrix {
        unvectorize(&(self.exp.at(t) * vectorize(x)), self.n)
    }

    pub fn axioms_at(&self, t: f64, samples: &[CMatrix]) -> ExpectationAxioms {
        expectation_axioms(&self.projection_at(t), self.n, samples)
    }
}

/// Path of expectations from `spec0` to `spec1`; requires `‖e0 − e1‖ < 1`.
pub fn expectation_path(
    spec0: &SubalgebraSpec,
    spec1: &SubalgebraSpec,
    n: usize,
    tol: &ToleranceProfile,
) -> Result<ExpectationPath> {
    build_path(spec0, spec1, n, tol, true)
}

/// As [`expectation_path`] without the separation guard. Only requires that
/// a geodesic exists between the two expectation projections.
pub fn expectation_path_unguarded(
    spec0: &SubalgebraSpec,
    spec1: &SubalgebraSpec,
    n: usize,
    tol: &ToleranceProfile,
) -> Result<ExpectationPath> {
    build_path(spec0, spec1, n, tol, false)
}

fn build_path(
    spec0: &SubalgebraSpec,
    spec1: &SubalgebraSpec,
    n: usize,
    tol: &ToleranceProfile,
    guarded: bool,
) -> Result<ExpectationPath> {
    let e0 = expectation_projection(spec0, n, tol)?;
    let e1 = expectation_projection(spec1, n, tol)?;
    let separation = e0.big.distance(&e1.big);
    if guarded && separation >= 1.0 - tol.atol_spectral {
        return Err(Error::TooFar {
            distance: separation,
        });
    }
    let exponent = minimal_exponent(&e0.big, &e1.big, None)?;
    if guarded && exponent.norm() >= FRAC_PI_2 {
        return Err(Error::Internal(
            "exponent norm reached π/2 below separation 1".into(),
        ));
    }
    let exp = SkewExp::from_skew_unchecked(exponent.z());
    Ok(ExpectationPath {
        e0,
        e1,
        exponent,
        exp,
        n,
        separation,
    })
}

/// Samples `α(t_j)` of the parallel transport equation at uniform times.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
}

impl TransportSolution {
    pub fn last(&self) -> &CMatrix {
        self.states.last().expect("at least one state")
    }
}

/// Minimum number of RK4 steps accepted by [`transport_ode_solve`].
pub const MIN_STEPS: usize = 100;

/// Classical RK4 for `α' = [dE_t, E_t] α` on the Hilbert–Schmidt space,
/// with `dE_t = Z P(t) − P(t) Z` and the bracket
/// `dE_t P(t) − P(t) dE_t`.
pub fn transport_ode_solve(
    path: &ExpectationPath,
    x0: &CMatrix,
    steps: usize,
) -> Result<TransportSolution> {
    if steps < MIN_STEPS {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_STEPS} steps are required, got {steps}"
        )));
    }
    if x0.nrows() != path.n || x0.ncols() != path.n {
        return Err(Error::DimensionMismatch {
            left: x0.nrows(),
            right: path.n,
        });
    }
    let z = path.z();
    let generator = |t: f64| {
        let p = path.projection_at(t);
        let de = z * &p - &p * z;
        &de * &p - &p * &de
    };
    let h = 1.0 / steps as f64;
    let half = Complex64::new(h / 2.0, 0.0);
    let full = Complex64::new(h, 0.0);
    let sixth = Complex64::new(h / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    let mut y = vectorize(x0);
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x0.clone());
    for s in 0..steps {
        let t = s as f64 * h;
        let a0 = generator(t);
        let am = generator(t + h / 2.0);
        let a1 = generator(t + h);
        let k1 = &a0 * &y;
        let k2 = &am * (&y + &k1 * half);
        let k3 = &am * (&y + &k2 * half);
        let k4 = &a1 * (&y + &k3 * full);
        y += (k1 + &k2 * two + &k3 * two + k4) * sixth;
        times.push((s + 1) as f64 * h);
        states.push(unvectorize(&y, path.n));
    }
    Ok(TransportSolution { times, states })
}

/// `‖α(1) − Γ_1(x0)‖` for an RK4 solve with `steps` steps.
pub fn transport_error(path: &ExpectationPath, x0: &CMatrix, steps: usize) -> Result<f64> {
    let sol = transport_ode_solve(path, x0, steps)?;
    Ok(crate::numkit::frobenius(
        &(sol.last() - path.gamma(1.0, x0)),
    ))
}

/// Observed order `log2(err(N) / err(2N))` against the closed-form
/// propagator.
pub fn convergence_order(path: &ExpectationPath, x0: &CMatrix, steps: usize) -> Result<f64> {
    let coarse = transport_error(path, x0, steps)?;
    let fine = transport_error(path, x0, 2 * steps)?;
    Ok((coarse / fine).log2())
}

/// Residuals of the propagator identities at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagatorResiduals {
    pub t: f64,
    /// `‖Γ_t E_0 Γ_{−t}(x) − E_t(x)‖` over matrix units.
    pub conjugation: f64,
    /// `‖Γ_t(xy) − Γ_t(x) Γ_t(y)‖` over subalgebra elements.
    pub multiplicativity: f64,
    /// `‖Γ_t(x*) − Γ_t(x)*‖` over subalgebra elements.
    pub star: f64,
    /// `‖Z E_0 + E_0 Z − Z‖` on the Hilbert–Schmidt space.
    pub codiagonality: f64,
}

impl PropagatorResiduals {
    pub fn max(&self) -> f64 {
        self.conjugation
            .max(self.multiplicativity)
            .max(self.star)
            .max(self.codiagonality)
    }
}

/// Check the propagator identities at each `t`. Test matrices are first
/// projected into `N_0` by `E_0`.
pub fn propagator_checks(
    path: &ExpectationPath,
    times: &[f64],
    tests: &[CMatrix],
) -> Vec<PropagatorResiduals> {
    let n = path.n;
    let e0 = path.e0.big.matrix();
    let z = path.z();
    let codiagonality = operator_norm(&(z * e0 + e0 * z - z));
    let members: Vec<CMatrix> = tests
        .iter()
        .map(|x| path.e0.apply(x))
        .chain(path.e0.subalgebra_basis().iter().cloned())
        .collect();
    times
        .iter()
        .map(|&t| {
            let g = path.propagator(t);
            let g_inv = path.propagator(-t);
            let conj = &g * e0 * &g_inv;
            let et = path.projection_at(t);
            let conjugation = matrix_units(n)
                .iter()
                .map(|x| {
                    let v = vectorize(x);
                    (&conj * &v - &et * &v).norm()
                })
                .fold(0.0, f64::max);
            let mut multiplicativity: f64 = 0.0;
            let mut star: f64 = 0.0;
            for x in &members {
                let gx = path.gamma(t, x);
                star = star.max(operator_norm(&(path.gamma(t, &x.adjoint()) - gx.adjoint())));
                for y in &members {
                    let lhs = path.gamma(t, &(x * y));
                    multiplicativity =
                        multiplicativity.max(operator_norm(&(lhs - &gx * path.gamma(t, y))));
                }
            }
            PropagatorResiduals {
                t,
                conjugation,
                multiplicativity,
                star,
                codiagonality,
            }
        })
        .collect()
}

/// The model pair: the diagonal subalgebra of `M_2` and its conjugate by
/// the planar rotation through `theta`.
pub fn rotated_diagonal_specs(theta: f64) -> Result<(SubalgebraSpec, SubalgebraSpec)> {
    let d = SubalgebraSpec::diagonal(2);
    let u = crate::numkit::plane_rotation(2, 0, 1, theta);
    let rotated = d.conjugated(&u)?;
    Ok((d, rotated))
}
