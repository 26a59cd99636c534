use std::collections::BTreeMap;
use std::path::Path;

use projgeo::batch::{self, BatchSummary, Execution, PairTrial, PairTrialConfig};
use projgeo::factor::{FiniteAlgebra, NormalizedTrace};
use projgeo::geo::{
    geodesic_distance, intertwining_residual, minimal_exponent, partial_isometry, rho_length,
    verify_geodesic,
};
use projgeo::jones::{
    convergence_order, expectation_path, expectation_path_unguarded, expected_distance,
    expected_rho_distance, index_distance, jones_pair_with, matrix_units, propagator_checks,
    transport_error, ExpectationAxioms, PropagatorResiduals,
};
use projgeo::numkit::frobenius;
use projgeo::projlat::{
    davis_symmetry, halmos_decompose, make_projection, principal_angles, HalmosRanks, Projection,
};
use projgeo::sample;
use projgeo::{Error, ToleranceProfile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::doc::{read_matrix, MatrixDocument};
use crate::report::{InputDigest, Report};
use crate::specs::parse_spec;
use crate::CliError;

pub struct Context {
    pub tol: ToleranceProfile,
    pub command: Vec<String>,
}

impl Context {
    fn report<T: Serialize>(
        &self,
        inputs: Vec<InputDigest>,
        seed: Option<u64>,
        results: T,
        residuals: BTreeMap<String, f64>,
    ) -> Report<T> {
        Report {
            command: self.command.clone(),
            inputs,
            tolerance: self.tol,
            seed,
            results,
            residuals,
        }
    }

    fn projection(&self, path: &Path) -> Result<(InputDigest, Projection), CliError> {
        let (bytes, m) = read_matrix(path)?;
        let p = make_projection(&m, &self.tol)?;
        Ok((InputDigest::of(path.display().to_string(), &bytes), p))
    }
}

fn idempotency(p: &Projection) -> f64 {
    let m = p.matrix();
    frobenius(&(m * m - m))
}

#[derive(Debug, Serialize)]
pub struct DecomposeResults {
    pub n: usize,
    pub rank_p: usize,
    pub rank_q: usize,
    pub ranks: HalmosRanks,
    pub angles: Vec<f64>,
    pub exists: bool,
    pub unique: bool,
    pub distance: Option<f64>,
}

pub fn decompose(ctx: &Context, p: &Path, q: &Path) -> Result<Report<DecomposeResults>, CliError> {
    let (dp, p) = ctx.projection(p)?;
    let (dq, q) = ctx.projection(q)?;
    let parts = halmos_decompose(&p, &q)?;
    let ranks = parts.ranks();
    let exists = ranks.e10 == ranks.e01;
    let mut residuals = BTreeMap::new();
    residuals.insert("halmos".into(), parts.residual(&p, &q));
    residuals.insert("p_idempotency".into(), idempotency(&p));
    residuals.insert("q_idempotency".into(), idempotency(&q));
    if ranks.e0 > 0 {
        residuals.insert(
            "davis".into(),
            davis_symmetry(&p, &q)?.anticommutation_residual(),
        );
    }
    let results = DecomposeResults {
        n: p.dim(),
        rank_p: p.rank(),
        rank_q: q.rank(),
        ranks,
        angles: principal_angles(&p, &q)?.angles,
        exists,
        unique: exists && ranks.e10 == 0,
        distance: if exists {
            Some(geodesic_distance(&p, &q)?)
        } else {
            None
        },
    };
    Ok(ctx.report(vec![dp, dq], None, results, residuals))
}

#[derive(Debug, Serialize)]
pub struct Sample {
    pub t: f64,
    pub point: MatrixDocument,
}

#[derive(Debug, Serialize)]
pub struct RhoLength {
    pub rho: f64,
    pub length: f64,
}

#[derive(Debug, Serialize)]
pub struct GeodesicResults {
    pub n: usize,
    pub unique: bool,
    pub distance: f64,
    pub exponent_norm: f64,
    pub rho_lengths: Vec<RhoLength>,
    pub z: MatrixDocument,
    pub samples: Vec<Sample>,
}

#[derive(Serialize)]
struct GeodesicBundle<'a> {
    z: &'a MatrixDocument,
    samples: &'a [Sample],
}

pub fn geodesic(
    ctx: &Context,
    p: &Path,
    q: &Path,
    times: &[f64],
    rhos: &[f64],
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<Report<GeodesicResults>, CliError> {
    let (dp, p) = ctx.projection(p)?;
    let (dq, q) = ctx.projection(q)?;
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(CliError::Usage(format!("bad time {t}")));
    }
    let parts = halmos_decompose(&p, &q)?;
    let (r10, r01) = (parts.e10.rank(), parts.e01.rank());
    if r10 != r01 {
        return Err(Error::NoGeodesic {
            rank_10: r10,
            rank_01: r01,
        }
        .into());
    }
    let w = match seed {
        Some(s) if r10 > 0 => Some(partial_isometry(&parts.e10, &parts.e01, Some(s))?),
        _ => None,
    };
    let g = minimal_exponent(&p, &q, w.as_ref())?;
    let trace = NormalizedTrace::new(FiniteAlgebra::single(p.dim()));
    let rho_lengths = rhos
        .iter()
        .map(|&rho| {
            Ok(RhoLength {
                rho,
                length: rho_length(&g, rho, &trace)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let path = g.path();
    let mut point_residual: f64 = 0.0;
    let samples: Vec<Sample> = times
        .iter()
        .map(|&t| {
            let m = path.point_matrix(t);
            point_residual = point_residual.max(frobenius(&(&m * &m - &m)));
            Sample {
                t,
                point: MatrixDocument::from_matrix(&m),
            }
        })
        .collect();
    let z = MatrixDocument::from_matrix(g.z());
    if let Some(out) = out {
        let bundle = GeodesicBundle {
            z: &z,
            samples: &samples,
        };
        let text = serde_json::to_string_pretty(&bundle).expect("bundle serializes");
        std::fs::write(out, text + "\n").map_err(|source| CliError::Io {
            path: out.display().to_string(),
            source,
        })?;
    }
    let v = verify_geodesic(&g);
    let mut residuals = BTreeMap::new();
    residuals.insert("skewness".into(), v.skewness);
    residuals.insert("codiagonality".into(), v.codiagonality);
    residuals.insert("norm_excess".into(), v.norm_excess);
    residuals.insert("endpoint".into(), v.endpoint);
    residuals.insert("intertwining".into(), intertwining_residual(&g)?);
    residuals.insert("sample_idempotency".into(), point_residual);
    let results = GeodesicResults {
        n: p.dim(),
        unique: r10 == 0,
        distance: g.norm(),
        exponent_norm: g.norm(),
        rho_lengths,
        z,
        samples,
    };
    Ok(ctx.report(vec![dp, dq], seed, results, residuals))
}

#[derive(Debug, Serialize)]
pub struct Assertion {
    pub measured: f64,
    pub expected: f64,
    pub passed: bool,
}

impl Assertion {
    fn new(measured: f64, expected: f64) -> Self {
        Self {
            measured,
            expected,
            passed: (measured - expected).abs() <= projgeo::jones::INDEX_TOL,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RhoAssertion {
    pub rho: f64,
    #[serde(flatten)]
    pub value: Assertion,
}

#[derive(Debug, Serialize)]
pub struct JonesResults {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub tau: f64,
    pub d: Assertion,
    pub d_rho: Vec<RhoAssertion>,
    pub all_passed: bool,
}

pub fn jones(
    ctx: &Context,
    m: usize,
    k: usize,
    rhos: &[f64],
) -> Result<Report<JonesResults>, CliError> {
    let jp = jones_pair_with(m, k, &ctx.tol)?;
    let dist = index_distance(&jp)?;
    let d = Assertion::new(dist.d, expected_distance(jp.tau));
    let d_rho = rhos
        .iter()
        .map(|&rho| {
            Ok(RhoAssertion {
                rho,
                value: Assertion::new(dist.measured_rho(rho)?, expected_rho_distance(jp.tau, rho)),
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut residuals = BTreeMap::new();
    residuals.insert("relation".into(), jp.relation_residual());
    residuals.insert("d_error".into(), (d.measured - d.expected).abs());
    let rho_err = d_rho
        .iter()
        .map(|r| (r.value.measured - r.value.expected).abs())
        .fold(0.0, f64::max);
    residuals.insert("d_rho_error".into(), rho_err);
    let all_passed = d.passed && d_rho.iter().all(|r| r.value.passed);
    let results = JonesResults {
        m,
        k,
        n: jp.dim(),
        tau: jp.tau,
        d,
        d_rho,
        all_passed,
    };
    Ok(ctx.report(Vec::new(), None, results, residuals))
}

#[derive(Debug, Serialize)]
pub struct TransportSample {
    pub t: f64,
    pub axioms: ExpectationAxioms,
    pub propagator: PropagatorResiduals,
}

#[derive(Debug, Serialize)]
pub struct TransportResults {
    pub n: usize,
    pub spec0: String,
    pub spec1: String,
    pub guarded: bool,
    pub separation: f64,
    pub exponent_norm: f64,
    pub steps: usize,
    pub ode_errors: Vec<f64>,
    /// `log2(err(100) / err(200))` on the first initial condition; absent
    /// when both errors are at roundoff level.
    pub convergence_order: Option<f64>,
    pub samples: Vec<TransportSample>,
}

pub const SAMPLE_TIMES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[allow(clippy::too_many_arguments)]
pub fn transport(
    ctx: &Context,
    spec0: &str,
    spec1: &str,
    steps: usize,
    trials: usize,
    seed: u64,
    unguarded: bool,
) -> Result<Report<TransportResults>, CliError> {
    let s0 = parse_spec(spec0)?;
    let s1 = parse_spec(spec1)?;
    if s0.n != s1.n {
        return Err(CliError::Usage(format!(
            "specs live in M_{} and M_{}",
            s0.n, s1.n
        )));
    }
    let n = s0.n;
    let inputs = [&s0.file, &s1.file]
        .into_iter()
        .flatten()
        .map(|(name, bytes)| InputDigest::of(name.clone(), bytes))
        .collect();
    let path = if unguarded {
        expectation_path_unguarded(&s0.spec, &s1.spec, n, &ctx.tol)?
    } else {
        expectation_path(&s0.spec, &s1.spec, n, &ctx.tol)?
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial: Vec<_> = (0..trials).map(|_| sample::gaussian(n, &mut rng)).collect();
    let ode_errors = initial
        .iter()
        .map(|x0| transport_error(&path, x0, steps))
        .collect::<Result<Vec<_>, Error>>()?;
    let convergence_order = match initial.first() {
        Some(x0) if transport_error(&path, x0, 100)? > 1e-13 => {
            Some(convergence_order(&path, x0, 100)?)
        }
        _ => None,
    };
    let mut tests = matrix_units(n);
    tests.extend((0..2).map(|_| sample::gaussian(n, &mut rng)));
    let prop = propagator_checks(&path, &SAMPLE_TIMES, &tests);
    let samples: Vec<TransportSample> = SAMPLE_TIMES
        .iter()
        .zip(prop)
        .map(|(&t, propagator)| TransportSample {
            t,
            axioms: path.axioms_at(t, &tests),
            propagator,
        })
        .collect();
    let ode = ode_errors.iter().cloned().fold(0.0, f64::max);
    let axioms = samples.iter().map(|s| s.axioms.max()).fold(0.0, f64::max);
    let propagator = samples
        .iter()
        .map(|s| s.propagator.max())
        .fold(0.0, f64::max);
    let mut residuals = BTreeMap::new();
    residuals.insert("ode".into(), ode);
    residuals.insert("axioms".into(), axioms);
    residuals.insert("propagator".into(), propagator);
    residuals.insert("max".into(), ode.max(axioms).max(propagator));
    let results = TransportResults {
        n,
        spec0: spec0.to_string(),
        spec1: spec1.to_string(),
        guarded: !unguarded,
        separation: path.separation,
        exponent_norm: path.exponent().norm(),
        steps,
        ode_errors,
        convergence_order,
        samples,
    };
    Ok(ctx.report(inputs, Some(seed), results, residuals))
}

#[derive(Debug, Serialize)]
pub struct RandomResults {
    pub n: usize,
    pub ranks: Vec<usize>,
    pub force_wedge: bool,
    pub non_unique: usize,
    pub summary: BatchSummary,
    pub trials: Vec<PairTrial>,
}

pub struct RandomArgs<'a> {
    pub n: usize,
    pub ranks: &'a [usize],
    pub trials: usize,
    pub seed: u64,
    pub force_wedge: bool,
    pub max_n: usize,
    pub exec: Execution,
}

pub fn random(ctx: &Context, a: RandomArgs<'_>) -> Result<Report<RandomResults>, CliError> {
    if a.n > a.max_n {
        return Err(CliError::Usage(format!(
            "n = {} exceeds the maximum {} (see --max-n)",
            a.n, a.max_n
        )));
    }
    let cfg = PairTrialConfig {
        n: a.n,
        ranks: a.ranks.to_vec(),
        force_wedge: a.force_wedge,
        seed: a.seed,
        tol: ctx.tol,
    };
    let trials = batch::run_pair_trials(&cfg, a.trials, a.exec)?;
    let summary = BatchSummary::from_trials(&trials);
    let mut residuals = BTreeMap::new();
    residuals.insert("skewness".into(), summary.max_skewness);
    residuals.insert("codiagonality".into(), summary.max_codiagonality);
    residuals.insert("norm_excess".into(), summary.max_norm_excess);
    residuals.insert("endpoint".into(), summary.max_endpoint);
    residuals.insert("intertwining".into(), summary.max_intertwining);
    residuals.insert("spectral_symmetry".into(), summary.max_spectral_symmetry);
    residuals.insert("angle_error".into(), summary.max_angle_error);
    let results = RandomResults {
        n: a.n,
        ranks: a.ranks.to_vec(),
        force_wedge: a.force_wedge,
        non_unique: trials.iter().filter(|t| t.exists && !t.unique).count(),
        summary,
        trials,
    };
    Ok(ctx.report(Vec::new(), Some(a.seed), results, residuals))
}
