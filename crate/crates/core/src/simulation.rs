//! Monte Carlo PRIAL sweeps over Gaussian data with a block-diagonal
//! population covariance.
//!
//! Every `(p, repetition)` pair owns its own ChaCha8 stream, keyed by the
//! experiment seed and the pair itself, so a sweep gives bit-identical
//! results regardless of thread count. All estimators in one repetition see
//! the same draw.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::SpectrumSpec;
use crate::error::{Error, Result};
use crate::estimators::{identity_target, lw_from_sample, olse, oracle_weights, sample_covariance};
use crate::matrix::{frobenius_norm_sq, spd_sqrt, DataMatrix, SymMatrix};

/// How atom masses are turned into integer block sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockRule {
    /// `round(p·mass)` per atom; the sizes must add up to `p`.
    #[default]
    Exact,
    /// Floors plus largest-remainder apportionment, ties to the earlier
    /// atom. Always tiles `p` as long as `p` is at least the atom count.
    LargestRemainder,
}

pub fn block_sizes(h: &SpectrumSpec, p: usize, rule: BlockRule) -> Result<Vec<usize>> {
    if p == 0 {
        return Err(Error::ConfigError("dimension must be positive".into()));
    }
    let sizes: Vec<usize> = match rule {
        BlockRule::Exact => h.atoms().iter().map(|a| (p as f64 * a.mass).round() as usize).collect(),
        BlockRule::LargestRemainder => {
            let quotas: Vec<f64> = h.atoms().iter().map(|a| p as f64 * a.mass).collect();
            let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
            let assigned: usize = sizes.iter().sum();
            let mut order: Vec<usize> = (0..quotas.len()).collect();
            order.sort_by(|&a, &b| {
                let ra = quotas[a] - quotas[a].floor();
                let rb = quotas[b] - quotas[b].floor();
                rb.total_cmp(&ra).then(a.cmp(&b))
            });
            for &k in order.iter().take(p.saturating_sub(assigned)) {
                sizes[k] += 1;
            }
            sizes
        }
    };
    let total: usize = sizes.iter().sum();
    if total != p || sizes.contains(&0) {
        return Err(Error::ConfigError(format!(
            "p = {p} cannot be split into spectrum blocks {sizes:?}"
        )));
    }
    Ok(sizes)
}

/// Diagonal matrix whose eigenvalue blocks follow `h`, in atom order.
///
/// Block `k` has `round(p·mass_k)` entries; the blocks must tile `p` exactly.
pub fn covariance_from_spectrum(h: &SpectrumSpec, p: usize) -> Result<SymMatrix> {
    covariance_from_spectrum_with(h, p, BlockRule::Exact)
}

pub fn covariance_from_spectrum_with(h: &SpectrumSpec, p: usize, rule: BlockRule) -> Result<SymMatrix> {
    let sizes = block_sizes(h, p, rule)?;
    let diag: Vec<f64> = h
        .atoms()
        .iter()
        .zip(&sizes)
        .flat_map(|(a, &k)| std::iter::repeat_n(a.tau, k))
        .collect();
    Ok(SymMatrix::from_diagonal(&diag))
}

/// Random stream for repetition `rep` at dimension `p`.
pub fn stream_rng(seed: u64, p: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((p as u64) << 32) ^ rep as u64);
    rng
}

/// Draws `Y = Σ^{1/2} X` for a fixed `Σ`; the square root is computed once.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    root: Root,
}

#[derive(Debug, Clone)]
enum Root {
    Diagonal(Vec<f64>),
    Dense(SymMatrix),
}

impl GaussianSampler {
    pub fn new(sigma: &SymMatrix) -> Result<Self> {
        let root = if sigma.is_diagonal() {
            let d = sigma.diagonal();
            if d.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::ArgError("covariance must be positive definite".into()));
            }
            Root::Diagonal(d.iter().map(|v| v.sqrt()).collect())
        } else {
            Root::Dense(spd_sqrt(sigma)?)
        };
        Ok(Self { root })
    }

    pub fn dim(&self) -> usize {
        match &self.root {
            Root::Diagonal(d) => d.len(),
            Root::Dense(m) => m.dim(),
        }
    }

    /// `X` is filled row by row from `rng`, then premultiplied by `Σ^{1/2}`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DataMatrix> {
        let p = self.dim();
        if n == 0 {
            return Err(Error::ArgError("sample size must be positive".into()));
        }
        let x: Vec<f64> = (0..p * n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let values = match &self.root {
            Root::Diagonal(d) => x
                .chunks(n)
                .zip(d)
                .flat_map(|(row, s)| row.iter().map(move |v| s * v))
                .collect(),
            Root::Dense(r) => {
                let mut y = vec![0.0; p * n];
                for i in 0..p {
                    let out = &mut y[i * n..(i + 1) * n];
                    for (k, rik) in r.row(i).iter().enumerate() {
                        for (o, xv) in out.iter_mut().zip(&x[k * n..(k + 1) * n]) {
                            *o += rik * xv;
                        }
                    }
                }
                y
            }
        };
        DataMatrix::new(p, n, values)
    }
}

/// One draw of `n` Gaussian observations with covariance `sigma`.
pub fn gaussian_sample<R: Rng + ?Sized>(sigma: &SymMatrix, n: usize, rng: &mut R) -> Result<DataMatrix> {
    GaussianSampler::new(sigma)?.sample(n, rng)
}

/// Percentage relative improvement in average loss over the sample
/// covariance.
pub fn prial(losses_est: &[f64], losses_sample: &[f64]) -> Result<f64> {
    if losses_est.is_empty() || losses_est.len() != losses_sample.len() {
        return Err(Error::ArgError(format!(
            "PRIAL needs equal, nonempty loss lists (got {} and {})",
            losses_est.len(),
            losses_sample.len()
        )));
    }
    let base = mean(losses_sample);
    if !(base > 0.0) {
        return Err(Error::ArgError("mean sample loss must be positive".into()));
    }
    Ok((1.0 - mean(losses_est) / base) * 100.0)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Estimators a sweep can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// `S` itself; the PRIAL baseline.
    Sample,
    /// Oracle intensities computed with the true covariance.
    Oracle,
    /// Bona fide optimal linear shrinkage.
    Olse,
    Lw,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::Sample,
        EstimatorKind::Oracle,
        EstimatorKind::Olse,
        EstimatorKind::Lw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Sample => "sample",
            EstimatorKind::Oracle => "oracle",
            EstimatorKind::Olse => "olse",
            EstimatorKind::Lw => "lw",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::ConfigError(format!("unknown estimator '{s}' (expected olse, lw, oracle or sample)")))
    }
}

/// Shrinkage target used by the oracle and bona fide estimators.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSpec {
    /// `I/p`.
    Identity,
    /// Diagonal target with the given block spectrum.
    Spectrum(SpectrumSpec),
}

impl TargetSpec {
    pub fn build(&self, p: usize) -> Result<SymMatrix> {
        self.build_with(p, BlockRule::Exact)
    }

    pub fn build_with(&self, p: usize, rule: BlockRule) -> Result<SymMatrix> {
        match self {
            TargetSpec::Identity => Ok(identity_target(p)),
            TargetSpec::Spectrum(h) => covariance_from_spectrum_with(h, p, rule),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub spectrum: SpectrumSpec,
    pub target: TargetSpec,
    /// Concentration `p/n`.
    pub c: f64,
    pub p_grid: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
    /// Remove the sample mean before forming `S`.
    pub center: bool,
    pub blocks: BlockRule,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::ConfigError(format!("c must be positive, got {}", self.c)));
        }
        if self.repetitions == 0 {
            return Err(Error::ConfigError("repetitions must be at least 1".into()));
        }
        if self.p_grid.is_empty() {
            return Err(Error::ConfigError("p_grid is empty".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::ConfigError("no estimators selected".into()));
        }
        for &p in &self.p_grid {
            covariance_from_spectrum_with(&self.spectrum, p, self.blocks)?;
            self.target
                .build_with(p, self.blocks)
                .map_err(|e| Error::ConfigError(format!("target at p = {p}: {e}")))?;
            let n = sample_size(p, self.c);
            if n < 1 || (self.center && n < 2) {
                return Err(Error::ConfigError(format!(
                    "p = {p}, c = {} gives sample size {n}",
                    self.c
                )));
            }
        }
        Ok(())
    }
}

/// `n = round(p/c)`, ties to even.
pub fn sample_size(p: usize, c: f64) -> usize {
    (p as f64 / c).round_ties_even() as usize
}

/// Aggregated losses of one estimator at one dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub p: usize,
    pub n: usize,
    pub estimator: EstimatorKind,
    /// Mean of `||Σ̂ − Σ||²_F` over the repetitions that succeeded.
    pub mean_loss: f64,
    pub prial: f64,
    /// Delta-method standard error of the PRIAL, in percentage points.
    pub stderr: f64,
    /// Repetitions dropped because the estimator was undefined.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn row(&self, p: usize, estimator: EstimatorKind) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.p == p && r.estimator == estimator)
    }
}

/// Per-repetition squared Frobenius losses; `None` when the estimator was
/// undefined for that draw.
#[derive(Debug, Clone)]
pub struct RepetitionLosses {
    pub sample: f64,
    pub by_estimator: Vec<Option<f64>>,
}

/// Draws one repetition at dimension `p` and scores every requested estimator.
pub fn run_repetition(
    cfg: &ExperimentConfig,
    sigma: &SymMatrix,
    sampler: &GaussianSampler,
    target: &SymMatrix,
    p: usize,
    rep: usize,
) -> Result<RepetitionLosses> {
    let n = sample_size(p, cfg.c);
    let mut rng = stream_rng(cfg.seed, p, rep);
    let y = sampler.sample(n, &mut rng)?;
    let s = sample_covariance(&y, cfg.center)?;
    let sample_loss = frobenius_norm_sq(&s.sub(sigma)?);
    let mut by_estimator = Vec::with_capacity(cfg.estimators.len());
    for &kind in &cfg.estimators {
        let estimate = match kind {
            EstimatorKind::Sample => Ok(s.clone()),
            EstimatorKind::Oracle => {
                oracle_weights(&s, sigma, target).and_then(|w| s.linear_combination(w.alpha, target, w.beta))
            }
            EstimatorKind::Olse => olse(&s, target, n).map(|e| e.matrix),
            EstimatorKind::Lw => lw_from_sample(&y, &s, cfg.center).map(|e| e.matrix),
        };
        match estimate {
            Ok(m) => by_estimator.push(Some(frobenius_norm_sq(&m.sub(sigma)?))),
            Err(Error::DegenerateTarget(_)) => by_estimator.push(None),
            Err(e) => return Err(e),
        }
    }
    Ok(RepetitionLosses {
        sample: sample_loss,
        by_estimator,
    })
}

/// Runs the sweep on the current rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &p in &cfg.p_grid {
        let sigma = covariance_from_spectrum_with(&cfg.spectrum, p, cfg.blocks)?;
        let sampler = GaussianSampler::new(&sigma)?;
        let target = cfg.target.build_with(p, cfg.blocks)?;
        let reps: Vec<RepetitionLosses> = (0..cfg.repetitions)
            .into_par_iter()
            .map(|rep| run_repetition(cfg, &sigma, &sampler, &target, p, rep))
            .collect::<Result<_>>()?;
        let n = sample_size(p, cfg.c);
        for (slot, &kind) in cfg.estimators.iter().enumerate() {
            rows.push(aggregate(p, n, kind, slot, &reps));
        }
    }
    Ok(ExperimentReport { rows })
}

fn aggregate(p: usize, n: usize, kind: EstimatorKind, slot: usize, reps: &[RepetitionLosses]) -> ReportRow {
    let (est, base): (Vec<f64>, Vec<f64>) = reps
        .iter()
        .filter_map(|r| r.by_estimator[slot].map(|l| (l, r.sample)))
        .unzip();
    let skipped = reps.len() - est.len();
    if est.is_empty() {
        return ReportRow {
            p,
            n,
            estimator: kind,
            mean_loss: f64::NAN,
            prial: f64::NAN,
            stderr: f64::NAN,
            skipped,
        };
    }
    let mean_est = mean(&est);
    let mean_base = mean(&base);
    let prial = if kind == EstimatorKind::Sample {
        0.0
    } else {
        (1.0 - mean_est / mean_base) * 100.0
    };
    let ratio = mean_est / mean_base;
    let m = est.len() as f64;
    let stderr = if est.len() < 2 || kind == EstimatorKind::Sample {
        0.0
    } else {
        let resid: Vec<f64> = est.iter().zip(&base).map(|(e, b)| e - ratio * b).collect();
        let rm = mean(&resid);
        let var = resid.iter().map(|r| (r - rm) * (r - rm)).sum::<f64>() / (m - 1.0);
        100.0 * (var / m).sqrt() / mean_base
    };
    ReportRow {
        p,
        n,
        estimator: kind,
        mean_loss: mean_est,
        prial,
        stderr,
        skipped,
    }
}
