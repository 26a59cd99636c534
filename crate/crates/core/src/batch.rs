//! Randomized trial batches: geodesic construction on seeded random pairs
//! and minimality probes against perturbed competitor curves.
//!
//! Each trial owns its RNG (`ChaCha8Rng` seeded with `seed + index`), so
//! results do not depend on the execution strategy.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geo::{
    intertwining_residual, minimal_exponent, verify_geodesic, GeodesicExponent, GeodesicResiduals,
};
use crate::numkit::{
    eig_symmetrized, hermitian_part, operator_norm, CMatrix, SkewExp, ToleranceProfile,
};
use crate::projlat::{
    davis_symmetry_from, halmos_decompose, make_projection, principal_angles_from, HalmosRanks,
    Projection,
};
use crate::sample::{self, PairLayout};

/// Residual bound used to mark a trial as passed.
pub const TRIAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Execution {
    Sequential,
    /// Rayon worker pool; runs sequentially when the `parallel` feature is
    /// disabled.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// `(0..count).map(f)`, preserving order.
pub fn run_indexed<T, F>(exec: Execution, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..count).map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel => (0..count).map(f).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairTrialConfig {
    pub n: usize,
    /// Ranks cycled through by trial index; empty draws a rank per trial.
    pub ranks: Vec<usize>,
    pub force_wedge: bool,
    pub seed: u64,
    pub tol: ToleranceProfile,
}

impl PairTrialConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            ranks: Vec::new(),
            force_wedge: false,
            seed,
            tol: ToleranceProfile::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!(
                "dimension {} is below 2",
                self.n
            )));
        }
        for &r in &self.ranks {
            if r > self.n {
                return Err(Error::InvalidArgument(format!(
                    "rank {r} exceeds n = {}",
                    self.n
                )));
            }
            if self.force_wedge && (r == 0 || r == self.n) {
                return Err(Error::InvalidArgument(format!(
                    "rank {r} leaves no room for a wedge in M_{}",
                    self.n
                )));
            }
        }
        self.tol.validate()
    }

    fn trial_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }
}

/// Outcome of one random-pair trial. The layout is the oracle for ranks
/// and angles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairTrial {
    pub index: usize,
    pub seed: u64,
    pub rank: usize,
    pub ranks: Option<HalmosRanks>,
    /// Whether the measured Halmos ranks equal the layout's.
    pub ranks_match: bool,
    /// Largest deviation of measured principal angles from the layout's.
    pub angle_error: f64,
    pub exists: bool,
    pub unique: bool,
    pub norm: f64,
    pub residuals: Option<GeodesicResiduals>,
    pub intertwining: f64,
    pub halmos_residual: f64,
    /// `‖spec(a0) + reverse(spec(a0))‖_∞` on the generic part.
    pub spectral_symmetry: f64,
    /// `‖v0 a0 v0 + a0‖`.
    pub davis_residual: f64,
    pub passed: bool,
    pub error: Option<String>,
}

/// Random pair for trial `index`, along with its layout.
pub fn trial_pair(
    cfg: &PairTrialConfig,
    index: usize,
) -> Result<(PairLayout, Projection, Projection)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.trial_seed(index));
    let n = cfg.n;
    let rank = if cfg.ranks.is_empty() {
        rng.random_range(1..n)
    } else {
        cfg.ranks[index % cfg.ranks.len()]
    };
    let layout = PairLayout::random(n, rank, cfg.force_wedge, &mut rng);
    let (p, q) = layout.build_rotated(&mut rng);
    let p = make_projection(&hermitian_part(&p), &cfg.tol)?;
    let q = make_projection(&hermitian_part(&q), &cfg.tol)?;
    Ok((layout, p, q))
}

pub fn run_pair_trial(cfg: &PairTrialConfig, index: usize) -> PairTrial {
    let mut out = PairTrial {
        index,
        seed: cfg.trial_seed(index),
        rank: 0,
        ranks: None,
        ranks_match: false,
        angle_error: f64::NAN,
        exists: false,
        unique: false,
        norm: f64::NAN,
        residuals: None,
        intertwining: f64::NAN,
        halmos_residual: f64::NAN,
        spectral_symmetry: 0.0,
        davis_residual: 0.0,
        passed: false,
        error: None,
    };
    if let Err(e) = fill_trial(cfg, index, &mut out) {
        out.error = Some(e.to_string());
        out.passed = false;
    }
    out
}

fn fill_trial(cfg: &PairTrialConfig, index: usize, out: &mut PairTrial) -> Result<()> {
    let (layout, p, q) = trial_pair(cfg, index)?;
    out.rank = p.rank();
    let parts = halmos_decompose(&p, &q)?;
    let ranks = parts.ranks();
    out.ranks_match = ranks.e11 == layout.both
        && ranks.e00 == layout.neither
        && ranks.e10 == layout.wedge
        && ranks.e01 == layout.wedge
        && ranks.e0 == 2 * layout.angles.len();
    out.halmos_residual = parts.residual(&p, &q);
    out.exists = ranks.e10 == ranks.e01;
    out.unique = out.exists && ranks.e10 == 0;
    out.ranks = Some(ranks);

    let measured = principal_angles_from(&p, &q, &parts);
    let mut expected = layout.angles.clone();
    expected.sort_by(f64::total_cmp);
    out.angle_error = if measured.angles.len() == expected.len() {
        measured
            .angles
            .iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };

    if !parts.e0.is_zero() {
        let davis = davis_symmetry_from(&p, &q, &parts)?;
        let spec = davis.a0_spectrum();
        out.spectral_symmetry = spec
            .iter()
            .zip(spec.iter().rev())
            .map(|(a, b)| (a + b).abs())
            .fold(0.0, f64::max);
        out.davis_residual = davis.anticommutation_residual();
    }

    let g = minimal_exponent(&p, &q, None)?;
    out.norm = g.norm();
    let residuals = verify_geodesic(&g);
    out.intertwining = intertwining_residual(&g)?;
    out.passed = out.ranks_match
        && residuals.max() < TRIAL_TOL
        && out.intertwining < TRIAL_TOL
        && out.spectral_symmetry < TRIAL_TOL
        && out.davis_residual < TRIAL_TOL
        && out.halmos_residual < TRIAL_TOL;
    out.residuals = Some(residuals);
    Ok(())
}

/// Aggregate statistics over trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub trials: usize,
    pub passed: usize,
    pub errors: usize,
    pub max_skewness: f64,
    pub max_codiagonality: f64,
    pub max_norm_excess: f64,
    pub max_endpoint: f64,
    pub max_intertwining: f64,
    pub max_spectral_symmetry: f64,
    pub max_angle_error: f64,
}

impl BatchSummary {
    pub fn from_trials(trials: &[PairTrial]) -> Self {
        let fold = |f: &dyn Fn(&PairTrial) -> f64| {
            trials
                .iter()
                .filter(|t| t.error.is_none())
                .map(f)
                .fold(0.0, f64::max)
        };
        let res = |f: fn(&GeodesicResiduals) -> f64| {
            move |t: &PairTrial| t.residuals.as_ref().map_or(0.0, f)
        };
        Self {
            trials: trials.len(),
            passed: trials.iter().filter(|t| t.passed).count(),
            errors: trials.iter().filter(|t| t.error.is_some()).count(),
            max_skewness: fold(&res(|r| r.skewness)),
            max_codiagonality: fold(&res(|r| r.codiagonality)),
            max_norm_excess: fold(&res(|r| r.norm_excess)),
            max_endpoint: fold(&res(|r| r.endpoint)),
            max_intertwining: fold(&|t| t.intertwining),
            max_spectral_symmetry: fold(&|t| t.spectral_symmetry),
            max_angle_error: fold(&|t| t.angle_error),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.passed == self.trials
    }
}

pub fn run_pair_trials(
    cfg: &PairTrialConfig,
    trials: usize,
    exec: Execution,
) -> Result<Vec<PairTrial>> {
    cfg.validate()?;
    Ok(run_indexed(exec, trials, |i| run_pair_trial(cfg, i)))
}

/// Settings for competitor curves `γ(t) = U(t) δ(φ(t)) U(t)*` with
/// `U(t) = exp(ε sin(πt) K)` and `φ(t) = t + a sin(2πt)/(2π)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub competitors: usize,
    /// Quadrature points per curve.
    pub points: usize,
    pub rhos: Vec<f64>,
    /// Upper bound for `ε`; `K` has unit operator norm.
    pub max_amplitude: f64,
    /// Upper bound for `|a|`; must be below 1 for a monotone `φ`.
    pub max_reparam: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            competitors: 8,
            points: 1000,
            rhos: vec![2.0, 4.0],
            max_amplitude: 0.5,
            max_reparam: 0.8,
        }
    }
}

/// Lengths of the geodesic and of its shortest competitor, per norm. Index
/// 0 is the operator norm; the rest follow `ProbeConfig::rhos`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeOutcome {
    pub seed: u64,
    pub geodesic: Vec<f64>,
    pub shortest: Vec<f64>,
    /// `max(geodesic − shortest)` over norms; positive means a competitor
    /// was shorter.
    pub worst_deficit: f64,
}

fn speeds(h: &CMatrix, rhos: &[f64], out: &mut [f64]) {
    let values = eig_symmetrized(&hermitian_part(h)).values;
    let n = values.len() as f64;
    out[0] = values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    for (slot, &rho) in out[1..].iter_mut().zip(rhos) {
        let s: f64 = values.iter().map(|v| v.abs().powf(rho)).sum();
        *slot = (s / n).powf(1.0 / rho);
    }
}

/// Length of `γ` in every norm by the midpoint rule on the analytic
/// velocity `s'[K, γ] + φ' U [Z, δ(φ)] U*`.
fn competitor_lengths(
    g: &GeodesicExponent,
    path: &SkewExp,
    k: Option<(&CMatrix, &SkewExp, f64)>,
    a: f64,
    cfg: &ProbeConfig,
) -> Vec<f64> {
    let z = g.z();
    let p = g.base().matrix();
    let zp = z * p - p * z;
    let h = 1.0 / cfg.points as f64;
    let mut total = vec![0.0; 1 + cfg.rhos.len()];
    let mut speed = vec![0.0; total.len()];
    for i in 0..cfg.points {
        let t = (i as f64 + 0.5) * h;
        let phi = t + a * (2.0 * PI * t).sin() / (2.0 * PI);
        let dphi = 1.0 + a * (2.0 * PI * t).cos();
        let d = path.at(phi);
        let mut v = &d * &zp * d.adjoint();
        let mut pt = &d * p * d.adjoint();
        if let Some((k, kexp, eps)) = k {
            let s = eps * (PI * t).sin();
            let ds = eps * PI * (PI * t).cos();
            let u = kexp.at(s);
            let ua = u.adjoint();
            v = &u * v * &ua;
            pt = &u * pt * &ua;
            v = v.scale(dphi) + (k * &pt - &pt * k).scale(ds);
        } else {
            v = v.scale(dphi);
        }
        speeds(&v, &cfg.rhos, &mut speed);
        for (acc, s) in total.iter_mut().zip(&speed) {
            *acc += s * h;
        }
    }
    total
}

/// Compare a geodesic with seeded competitor curves sharing its endpoints.
pub fn minimality_probe(
    g: &GeodesicExponent,
    cfg: &ProbeConfig,
    seed: u64,
) -> Result<ProbeOutcome> {
    if cfg.points == 0 || cfg.max_reparam >= 1.0 {
        return Err(Error::InvalidArgument(
            "probe needs points > 0 and max_reparam < 1".into(),
        ));
    }
    let n = g.base().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let path = SkewExp::from_skew_unchecked(g.z());
    let mut geodesic = vec![operator_norm(g.z())];
    let trace = crate::factor::NormalizedTrace::new(crate::factor::FiniteAlgebra::single(n));
    for &rho in &cfg.rhos {
        geodesic.push(crate::numkit::rho_norm(g.z(), rho, &trace)?);
    }
    let mut shortest = vec![f64::INFINITY; geodesic.len()];
    for c in 0..cfg.competitors {
        let k = sample::skew(n, &mut rng);
        let k = k.unscale(operator_norm(&k));
        let kexp = SkewExp::from_skew_unchecked(&k);
        // the first competitor only reparametrizes
        let eps = if c == 0 {
            0.0
        } else {
            rng.random_range(0.0..cfg.max_amplitude)
        };
        let a = rng.random_range(-cfg.max_reparam..cfg.max_reparam);
        let lens = competitor_lengths(g, &path, Some((&k, &kexp, eps)), a, cfg);
        for (m, l) in shortest.iter_mut().zip(lens) {
            *m = m.min(l);
        }
    }
    let worst_deficit = geodesic
        .iter()
        .zip(&shortest)
        .map(|(g, s)| g - s)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ProbeOutcome {
        seed,
        geodesic,
        shortest,
        worst_deficit,
    })
}

/// Quadrature length of the geodesic itself, per norm.
pub fn geodesic_quadrature_length(g: &GeodesicExponent, cfg: &ProbeConfig) -> Vec<f64> {
    let path = SkewExp::from_skew_unchecked(g.z());
    competitor_lengths(g, &path, None, 0.0, cfg)
}

/// Minimality probes on random pairs with a unique geodesic.
pub fn run_minimality_probes(
    n: usize,
    pairs: usize,
    seed: u64,
    cfg: &ProbeConfig,
    exec: Execution,
) -> Result<Vec<ProbeOutcome>> {
    let mut pcfg = PairTrialConfig::new(n, seed);
    pcfg.validate()?;
    pcfg.force_wedge = false;
    run_indexed(exec, pairs, |i| {
        let (_, p, q) = trial_pair(&pcfg, i)?;
        let g = minimal_exponent(&p, &q, None)?;
        minimality_probe(&g, cfg, pcfg.trial_seed(i))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sequential_and_parallel_agree() {
        let mut cfg = PairTrialConfig::new(6, 3);
        cfg.force_wedge = true;
        let a = run_pair_trials(&cfg, 12, Execution::Sequential).unwrap();
        let b = run_pair_trials(&cfg, 12, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(BatchSummary::from_trials(&a).all_passed());
        assert!(a.iter().all(|t| t.ranks.as_ref().unwrap().e10 >= 1));
    }

    #[test]
    fn wedge_needs_room() {
        let mut cfg = PairTrialConfig::new(4, 0);
        cfg.force_wedge = true;
        cfg.ranks = vec![4];
        assert!(run_pair_trials(&cfg, 1, Execution::Sequential).is_err());
    }

    #[test]
    fn geodesic_quadrature_is_exact() {
        let cfg = PairTrialConfig::new(4, 11);
        let (_, p, q) = trial_pair(&cfg, 0).unwrap();
        let g = minimal_exponent(&p, &q, None).unwrap();
        let probe = ProbeConfig::default();
        let lens = geodesic_quadrature_length(&g, &probe);
        let outcome = minimality_probe(&g, &probe, 1).unwrap();
        for (a, b) in lens.iter().zip(&outcome.geodesic) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        assert!(outcome.worst_deficit <= 1e-6);
    }
}
