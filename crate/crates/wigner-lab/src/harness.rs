//! Experiment orchestration: JSON config ingestion, deterministic parallel
//! Monte Carlo execution, aggregation, and report/CSV persistence.
//!
//! Determinism contract: trial t derives its RNG stream from
//! `trial_seed(master_seed, t)` (see the seeding module for the exact mixer),
//! trials are collected in index order, and every reduction is
//! schedule-independent, so a rerun with the same config reproduces identical
//! numbers regardless of thread count. Timing and timestamp data live in a
//! separate `metadata` block so the `science` block alone can be hashed.

use crate::concentration;
use crate::delocalization::{self, xi_lower_tail};
use crate::ensemble::{sample_wigner, DistKind, EntryDistribution, WignerConfig};
use crate::error::{Error, Result};
use crate::report::{fmt_g, json_to_string, write_csv, write_json};
use crate::seeding::{stream_rng, trial_seed};
use crate::selfconsistent::{
    bootstrap_ladder, delta_k, gradient_identity_check, holder_weights, minor_data,
    resolvent_diag_identity, sweep, x_statistic, xi_coefficients,
};
use crate::spectral::{eigh, eigvalsh};
use crate::stats::quantile;
use crate::stieltjes::{counting, grid_rows, grid_sup_deviation, SpectralGrid, SpectralParameter};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SemicircleSweep,
    Counting,
    Delocalization,
    XkConcentration,
    Bootstrap,
    IdentitySuite,
    ProjectionLemma,
    Khintchine,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::SemicircleSweep,
        ExperimentKind::Counting,
        ExperimentKind::Delocalization,
        ExperimentKind::XkConcentration,
        ExperimentKind::Bootstrap,
        ExperimentKind::IdentitySuite,
        ExperimentKind::ProjectionLemma,
        ExperimentKind::Khintchine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SemicircleSweep => "semicircle-sweep",
            ExperimentKind::Counting => "counting",
            ExperimentKind::Delocalization => "delocalization",
            ExperimentKind::XkConcentration => "xk-concentration",
            ExperimentKind::Bootstrap => "bootstrap",
            ExperimentKind::IdentitySuite => "identity-suite",
            ExperimentKind::ProjectionLemma => "projection-lemma",
            ExperimentKind::Khintchine => "khintchine",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::SemicircleSweep => {
                "grid sup of |m_N - m_sc| over the bulk spectral window"
            }
            ExperimentKind::Counting => "window eigenvalue counts against the semicircle density",
            ExperimentKind::Delocalization => "eigenvector sup/l4 norm statistics",
            ExperimentKind::XkConcentration => "X_k fluctuation statistic and gradient identity",
            ExperimentKind::Bootstrap => "dyadic eta ladder and the halving inequality",
            ExperimentKind::IdentitySuite => "exact resolvent/recursion/interlacing identities",
            ExperimentKind::ProjectionLemma => "rank-m projection concentration and xi tails",
            ExperimentKind::Khintchine => "moment ratios of random linear forms",
        }
    }
}

/// Spectral scale specification: either explicit {c, a} meaning
/// eta = c (log n)^a / n, or the "paper" preset (c = 1, a = 8).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSpec {
    Preset(String),
    Params { c: f64, a: f64 },
}

impl EtaSpec {
    pub fn resolve(&self, n: usize) -> Result<(f64, Option<String>)> {
        let (c, a) = match self {
            EtaSpec::Preset(p) if p == "paper" => (1.0, 8.0),
            EtaSpec::Preset(p) => {
                return Err(Error::Config(format!("unknown eta preset '{p}'")));
            }
            EtaSpec::Params { c, a } => (*c, *a),
        };
        if !(c > 0.0) {
            return Err(Error::Config(format!("eta_spec.c must be positive, got {c}")));
        }
        let eta = c * (n as f64).ln().powf(a) / n as f64;
        if !(eta > 0.0) {
            return Err(Error::Config(format!(
                "eta spec yields nonpositive eta {eta} at n = {n}"
            )));
        }
        if eta > 1.0 {
            return Ok((
                1.0,
                Some(format!(
                    "eta spec gives eta = {} > 1 at n = {n}; run degrades to eta = 1",
                    fmt_g(eta)
                )),
            ));
        }
        Ok((eta, None))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub trials: u64,
    pub kappa: f64,
    pub eta_spec: EtaSpec,
    pub dist: DistKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be at least 2, got {}", self.n)));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.kappa > 0.0 && self.kappa < 2.0) {
            return Err(Error::Config(format!(
                "kappa must be in (0,2), got {}",
                self.kappa
            )));
        }
        self.eta_spec.resolve(self.n)?;
        Ok(())
    }

    /// Wigner ensemble draw for trial t: off-diagonal components of variance
    /// 1/2 in the configured law, Gaussian-convention diagonal of variance 1.
    fn wigner(&self, t: u64) -> Result<WignerConfig> {
        Ok(WignerConfig {
            n: self.n,
            off_diag: EntryDistribution::new(self.dist, 0.5)?,
            diag: EntryDistribution::new(self.dist, 1.0)?,
            seed: trial_seed(self.seed, t),
        })
    }

    /// SHA-256 of the canonical (sorted-key, %.12g) JSON encoding.
    pub fn hash(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        let text = json_to_string(&v);
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Merge-able batch of one scalar metric across trials. Aggregation is a
/// commutative monoid: merging keeps the sorted union of values, so any
/// grouping or ordering of partial batches yields the same summary.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialBatch {
    pub experiment: ExperimentKind,
    pub values: Vec<f64>,
}

impl TrialBatch {
    pub fn new(experiment: ExperimentKind, mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Self { experiment, values }
    }

    pub fn summary(&self) -> Value {
        if self.values.is_empty() {
            return json!({ "count": 0 });
        }
        let count = self.values.len();
        let mean = self.values.iter().sum::<f64>() / count as f64;
        json!({
            "count": count,
            "mean": mean,
            "min": self.values[0],
            "max": self.values[count - 1],
            "q50": quantile(&self.values, 0.50),
            "q90": quantile(&self.values, 0.90),
            "q99": quantile(&self.values, 0.99),
        })
    }
}

pub fn aggregate(batches: &[TrialBatch]) -> Result<TrialBatch> {
    let Some(first) = batches.first() else {
        return Err(Error::InvalidParameter("no batches to aggregate".into()));
    };
    let mut values = Vec::new();
    for b in batches {
        if b.experiment != first.experiment {
            return Err(Error::InvalidParameter(format!(
                "cannot aggregate {} with {}",
                b.experiment.name(),
                first.experiment.name()
            )));
        }
        values.extend_from_slice(&b.values);
    }
    Ok(TrialBatch::new(first.experiment, values))
}

/// CSV payload: file name, fixed header, pre-formatted rows.
pub struct CsvOut {
    pub name: &'static str,
    pub header: &'static str,
    pub rows: Vec<Vec<String>>,
}

struct ExpOutput {
    trials: Vec<Value>,
    aggregate: Value,
    violations: Vec<String>,
    csvs: Vec<CsvOut>,
}

pub struct RunOutcome {
    pub report: Value,
    pub science: Value,
    pub violations: Vec<String>,
    pub report_path: PathBuf,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let started = Instant::now();
    let (eta, eta_warning) = config.eta_spec.resolve(config.n)?;
    let mut warnings = Vec::new();
    if let Some(w) = &eta_warning {
        eprintln!("warning: {w}");
        warnings.push(w.clone());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let output = pool.install(|| dispatch(config, eta, &mut warnings))?;

    std::fs::create_dir_all(&config.out_dir)?;
    for csv in &output.csvs {
        write_csv(&config.out_dir.join(csv.name), csv.header, &csv.rows)?;
    }
    let science = json!({
        "config": serde_json::to_value(config).expect("config serializes"),
        "config_hash": config.hash(),
        "experiment": config.experiment.name(),
        "eta": eta,
        "warnings": warnings,
        "trials": output.trials,
        "aggregate": output.aggregate,
        "violations": output.violations,
        "pass": output.violations.is_empty(),
    });
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let report = json!({
        "science": science,
        "metadata": {
            "timestamp_unix": timestamp,
            "wall_seconds": started.elapsed().as_secs_f64(),
            "threads": config.threads.map(|t| t as u64),
        },
    });
    let report_path = config.out_dir.join("report.json");
    write_json(&report_path, &report)?;
    Ok(RunOutcome {
        report,
        science,
        violations: output.violations,
        report_path,
    })
}

fn dispatch(config: &ExperimentConfig, eta: f64, warnings: &mut Vec<String>) -> Result<ExpOutput> {
    match config.experiment {
        ExperimentKind::SemicircleSweep => semicircle_sweep(config, eta),
        ExperimentKind::Counting => counting_experiment(config, eta),
        ExperimentKind::Delocalization => delocalization_experiment(config),
        ExperimentKind::XkConcentration => xk_concentration(config, eta),
        ExperimentKind::Bootstrap => bootstrap_experiment(config, eta, warnings),
        ExperimentKind::IdentitySuite => identity_suite(config),
        ExperimentKind::ProjectionLemma => projection_lemma(config, warnings),
        ExperimentKind::Khintchine => khintchine_experiment(config, warnings),
    }
}

// ---------------------------------------------------------------- thresholds

const SWEEP_SUP_PER_TRIAL: f64 = 0.15;
const SWEEP_SUP_MEAN: f64 = 0.05;
const COUNTING_SUP: f64 = 0.1;
const XK_EXCEED_LEVEL: f64 = 0.5;
const XK_EXCEED_PROB: f64 = 0.01;
const GRAD_REL_ERR: f64 = 1e-5;
const HALVING_TOL: f64 = 1e-12;
const SUP_NORM_RANGE: (f64, f64) = (0.8, 5.0);
const L4_NORM_RANGE: (f64, f64) = (0.5, 3.0);
const MOMENT_RATIO_MAX: f64 = 3.0;

// ------------------------------------------------------------ semicircle

fn semicircle_sweep(config: &ExperimentConfig, eta: f64) -> Result<ExpOutput> {
    // resolution target eta^2/4 for the Lipschitz scale of m at the finest
    // level, floored so a single level never exceeds ~2M evaluation points
    let e_max = 2.0 - config.kappa;
    let spacing = (eta * eta / 4.0).max(2.0 * e_max / 2_000_000.0);
    let grid = SpectralGrid::new(config.kappa, eta, spacing)?;
    let trials: Vec<(Value, f64, Vec<f64>)> = (0..config.trials)
        .into_par_iter()
        .map(|t| -> Result<(Value, f64, Vec<f64>)> {
            let h = sample_wigner(&config.wigner(t)?)?;
            let eigs = eigvalsh(&h)?;
            let dev = grid_sup_deviation(&eigs, &grid)?;
            let record = json!({
                "trial": t,
                "seed": trial_seed(config.seed, t),
                "sup_deviation": dev.sup,
                "argmax_e": dev.argmax.e,
                "argmax_eta": dev.argmax.eta,
                "under_resolved": dev.under_resolved,
            });
            Ok((record, dev.sup, eigs))
        })
        .collect::<Result<_>>()?;

    // plot CSV from trial 0 on a decimated grid
    let plot_spacing = spacing.max(2.0 * e_max / 400.0);
    let plot_grid = SpectralGrid::new(config.kappa, eta, plot_spacing)?;
    let rows: Vec<Vec<String>> = grid_rows(&trials[0].2, &plot_grid)?
        .iter()
        .map(|r| {
            vec![
                fmt_g(r.e),
                fmt_g(r.eta),
                fmt_g(r.m.re),
                fmt_g(r.m.im),
                fmt_g(r.msc.re),
                fmt_g(r.msc.im),
                fmt_g((r.m - r.msc).norm()),
            ]
        })
        .collect();

    let sups: Vec<f64> = trials.iter().map(|t| t.1).collect();
    let batch = TrialBatch::new(config.experiment, sups.clone());
    let mut violations = Vec::new();
    for (t, &sup) in sups.iter().enumerate() {
        if sup > SWEEP_SUP_PER_TRIAL {
            violations.push(format!(
                "semicircle-sweep: trial {t} sup deviation {} exceeds {SWEEP_SUP_PER_TRIAL}",
                fmt_g(sup)
            ));
        }
    }
    let mean = sups.iter().sum::<f64>() / sups.len() as f64;
    if mean > SWEEP_SUP_MEAN {
        violations.push(format!(
            "semicircle-sweep: mean sup deviation {} exceeds {SWEEP_SUP_MEAN}",
            fmt_g(mean)
        ));
    }
    Ok(ExpOutput {
        trials: trials.into_iter().map(|t| t.0).collect(),
        aggregate: json!({ "sup_deviation": batch.summary() }),
        violations,
        csvs: vec![CsvOut {
            name: "grid.csv",
            header: "E,eta,re_m,im_m,re_msc,im_msc,abs_dev",
            rows,
        }],
    })
}

// -------------------------------------------------------------- counting

fn counting_experiment(config: &ExperimentConfig, eta_star: f64) -> Result<ExpOutput> {
    let e_max = 2.0 - config.kappa;
    let step = eta_star / 4.0;
    let steps = (2.0 * e_max / step).ceil() as usize;
    let n = config.n as f64;
    let trials: Vec<(Value, f64, Vec<f64>)> = (0..config.trials)
        .into_par_iter()
        .map(|t| -> Result<(Value, f64, Vec<f64>)> {
            let h = sample_wigner(&config.wigner(t)?)?;
            let eigs = eigvalsh(&h)?;
            let sup = delocalization::counting_law_check(&eigs, config.kappa, eta_star)?;
            let record = json!({
                "trial": t,
                "seed": trial_seed(config.seed, t),
                "sup_deviation": sup,
            });
            Ok((record, sup, eigs))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(steps + 1);
    for s in 0..=steps {
        let e = (-e_max + step * s as f64).min(e_max);
        let cnt = counting(&trials[0].2, e, eta_star)?;
        let density = cnt as f64 / (2.0 * n * eta_star);
        let rho = crate::stieltjes::rho_sc(e);
        rows.push(vec![
            fmt_g(e),
            format!("{cnt}"),
            fmt_g(density),
            fmt_g(rho),
            fmt_g((density - rho).abs()),
        ]);
    }

    let sups: Vec<f64> = trials.iter().map(|t| t.1).collect();
    let batch = TrialBatch::new(config.experiment, sups.clone());
    let mut violations = Vec::new();
    let max = sups.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max > COUNTING_SUP {
        violations.push(format!(
            "counting: max sup deviation {} exceeds {COUNTING_SUP}",
            fmt_g(max)
        ));
    }
    Ok(ExpOutput {
        trials: trials.into_iter().map(|t| t.0).collect(),
        aggregate: json!({ "sup_deviation": batch.summary() }),
        violations,
        csvs: vec![CsvOut {
            name: "counting.csv",
            header: "E,window_count,smoothed_density,rho_sc,abs_dev",
            rows,
        }],
    })
}

// -------------------------------------------------------- delocalization

struct DelocTrial {
    record: Value,
    bulk_sup_normalized: Vec<f64>,
    bulk_l4_normalized: Vec<f64>,
    first_sq: Vec<f64>,
    middle_sq: Vec<f64>,
    csv_rows: Option<Vec<Vec<String>>>,
}

fn delocalization_experiment(config: &ExperimentConfig) -> Result<ExpOutput> {
    let n = config.n;
    let sup_scale = (n as f64 / (n as f64).ln()).sqrt();
    let l4_scale = (n as f64).powf(0.25);
    let trials: Vec<DelocTrial> = (0..config.trials)
        .into_par_iter()
        .map(|t| -> Result<DelocTrial> {
            let h = sample_wigner(&config.wigner(t)?)?;
            let d = eigh(&h)?;
            let stats = delocalization::eigenvector_stats(&d, config.kappa);
            let mut bulk_sup = Vec::new();
            let mut bulk_l4 = Vec::new();
            let mut first_sq = Vec::with_capacity(n);
            let mut middle_sq = Vec::with_capacity(n);
            for (alpha, s) in stats.iter().enumerate() {
                if s.in_bulk {
                    bulk_sup.push(sup_scale * s.sup_norm);
                    bulk_l4.push(l4_scale * s.l4_norm);
                }
                let v = d.eigenvector(alpha);
                first_sq.push(v[0].norm_sqr());
                middle_sq.push(v[n / 2].norm_sqr());
            }
            let csv_rows = (t == 0).then(|| {
                stats
                    .iter()
                    .map(|s| {
                        vec![
                            fmt_g(s.mu),
                            fmt_g(s.sup_norm),
                            fmt_g(s.l4_norm),
                            if s.in_bulk { "1".into() } else { "0".into() },
                        ]
                    })
                    .collect()
            });
            let record = json!({
                "trial": t,
                "seed": trial_seed(config.seed, t),
                "bulk_count": bulk_sup.len(),
                "bulk_sup_normalized": bulk_sup.clone(),
                "bulk_l4_normalized": bulk_l4.clone(),
                "first_component_sq_sum": first_sq.iter().sum::<f64>(),
                "middle_component_sq_sum": middle_sq.iter().sum::<f64>(),
            });
            Ok(DelocTrial {
                record,
                bulk_sup_normalized: bulk_sup,
                bulk_l4_normalized: bulk_l4,
                first_sq,
                middle_sq,
                csv_rows,
            })
        })
        .collect::<Result<_>>()?;

    let all_sup: Vec<f64> = trials
        .iter()
        .flat_map(|t| t.bulk_sup_normalized.iter().copied())
        .collect();
    let all_l4: Vec<f64> = trials
        .iter()
        .flat_map(|t| t.bulk_l4_normalized.iter().copied())
        .collect();
    let first: Vec<f64> = trials.iter().flat_map(|t| t.first_sq.iter().copied()).collect();
    let middle: Vec<f64> = trials
        .iter()
        .flat_map(|t| t.middle_sq.iter().copied())
        .collect();

    let mut violations = Vec::new();
    if all_sup.is_empty() {
        violations.push("delocalization: no bulk eigenvectors found".into());
    } else {
        let max_sup = all_sup.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(SUP_NORM_RANGE.0 <= max_sup && max_sup <= SUP_NORM_RANGE.1) {
            violations.push(format!(
                "delocalization: max normalized sup norm {} outside [{}, {}]",
                fmt_g(max_sup),
                SUP_NORM_RANGE.0,
                SUP_NORM_RANGE.1
            ));
        }
        let l4_min = all_l4.iter().copied().fold(f64::INFINITY, f64::min);
        let l4_max = all_l4.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if l4_min < L4_NORM_RANGE.0 || l4_max > L4_NORM_RANGE.1 {
            violations.push(format!(
                "delocalization: normalized l4 norms span [{}, {}], outside [{}, {}]",
                fmt_g(l4_min),
                fmt_g(l4_max),
                L4_NORM_RANGE.0,
                L4_NORM_RANGE.1
            ));
        }
    }
    let (m1, s1) = crate::stats::mean_se(&first);
    let (m2, s2) = crate::stats::mean_se(&middle);
    let se = (s1 * s1 + s2 * s2).sqrt();
    if (m1 - m2).abs() > 4.0 * se {
        violations.push(format!(
            "delocalization: |v_1|^2 mean {} and |v_mid|^2 mean {} differ by more than 4 SE ({})",
            fmt_g(m1),
            fmt_g(m2),
            fmt_g(se)
        ));
    }
    let summary = delocalization::sup_norm_summary(&all_sup);
    let batch = TrialBatch::new(config.experiment, all_sup);
    let csvs = vec![CsvOut {
        name: "delocalization.csv",
        header: "mu,sup_norm,l4_norm,in_bulk",
        rows: trials
            .iter()
            .find_map(|t| t.csv_rows.clone())
            .unwrap_or_default(),
    }];
    Ok(ExpOutput {
        trials: trials.into_iter().map(|t| t.record).collect(),
        aggregate: json!({
            "normalized_sup_norm": batch.summary(),
            "sup_norm_quantiles": serde_json::to_value(&summary).unwrap(),
            "normalized_l4_norm": TrialBatch::new(config.experiment, all_l4).summary(),
            "first_component_mean": m1,
            "middle_component_mean": m2,
            "component_mean_se": se,
        }),
        violations,
        csvs,
    })
}

// ------------------------------------------------------ xk concentration

const XK_MINORS_PER_TRIAL: usize = 4;
const XK_REDRAWS: usize = 32;
const XK_GRAD_CHECKS_PER_K: usize = 4;
const XK_E: f64 = 1.0;

struct XkTrial {
    record: Value,
    x_re: Vec<f64>,
    x_im: Vec<f64>,
    exceed: u64,
    max_grad_rel_err: f64,
    sweep_rows: Vec<Vec<String>>,
}

fn xk_concentration(config: &ExperimentConfig, eta: f64) -> Result<ExpOutput> {
    let n = config.n;
    if n < 8 {
        return Err(Error::Config("xk-concentration needs n >= 8".into()));
    }
    let z = SpectralParameter::new(XK_E.min(2.0 - config.kappa), eta)?;
    let off_diag = EntryDistribution::new(config.dist, 0.5)?;
    let sqrt_n = (n as f64).sqrt();
    let trials: Vec<XkTrial> = (0..config.trials)
        .into_par_iter()
        .map(|t| -> Result<XkTrial> {
            let tseed = trial_seed(config.seed, t);
            let h = sample_wigner(&config.wigner(t)?)?;
            let full = eigvalsh(&h)?;
            let m_full = crate::stieltjes::m_empirical(&full, z)?;
            let mut x_re = Vec::new();
            let mut x_im = Vec::new();
            let mut exceed = 0u64;
            let mut max_grad = 0.0f64;
            let mut sweep_rows = Vec::new();
            for i in 0..XK_MINORS_PER_TRIAL {
                let k = n * (2 * i + 1) / (2 * XK_MINORS_PER_TRIAL);
                let md = minor_data(&h, k, z)?;
                // true coupling: the removed column itself
                let (delta, drift, _ok) = delta_k(&md, m_full, z, n);
                x_re.push(md.x_k.re);
                x_im.push(md.x_k.im);
                if md.x_k.norm() > XK_EXCEED_LEVEL {
                    exceed += 1;
                }
                sweep_rows.push(vec![
                    format!("{k}"),
                    fmt_g(md.x_k.re),
                    fmt_g(md.x_k.im),
                    fmt_g(delta.norm()),
                    fmt_g(drift),
                    fmt_g(std::f64::consts::PI / (n as f64 * eta)),
                ]);
                // fresh couplings against the same minor spectrum: the joint
                // product space of the coupling law and the minor law
                for r in 0..XK_REDRAWS - 1 {
                    let sub = trial_seed(tseed, (1 + i as u64) << 32 | r as u64);
                    let mut rng = stream_rng(sub);
                    let a: Vec<Complex64> = (0..n - 1)
                        .map(|_| {
                            Complex64::new(off_diag.sample(&mut rng), off_diag.sample(&mut rng))
                                / sqrt_n
                        })
                        .collect();
                    let xi = xi_coefficients(&a, &md.u, n)?;
                    let x = x_statistic(&xi, &md.lambda, z, n);
                    x_re.push(x.re);
                    x_im.push(x.im);
                    if x.norm() > XK_EXCEED_LEVEL {
                        exceed += 1;
                    }
                }
                // gradient identity spot checks on fresh sqrt(N)-scaled
                // couplings
                for g in 0..XK_GRAD_CHECKS_PER_K {
                    let sub = trial_seed(tseed, (101 + i as u64) << 32 | g as u64);
                    let mut rng = stream_rng(sub);
                    let b: Vec<Complex64> = (0..n - 1)
                        .map(|_| {
                            Complex64::new(off_diag.sample(&mut rng), off_diag.sample(&mut rng))
                        })
                        .collect();
                    let (_an, _nu, rel) =
                        gradient_identity_check(&b, &md.lambda, &md.u, z, n)?;
                    max_grad = max_grad.max(rel);
                }
            }
            let record = json!({
                "trial": t,
                "seed": tseed,
                "samples": x_re.len(),
                "x_re_sum": x_re.iter().sum::<f64>(),
                "x_im_sum": x_im.iter().sum::<f64>(),
                "x_re_sq_sum": x_re.iter().map(|v| v * v).sum::<f64>(),
                "x_im_sq_sum": x_im.iter().map(|v| v * v).sum::<f64>(),
                "exceed_count": exceed,
                "max_grad_rel_err": max_grad,
            });
            Ok(XkTrial {
                record,
                x_re,
                x_im,
                exceed,
                max_grad_rel_err: max_grad,
                sweep_rows,
            })
        })
        .collect::<Result<_>>()?;

    let x_re: Vec<f64> = trials.iter().flat_map(|t| t.x_re.iter().copied()).collect();
    let x_im: Vec<f64> = trials.iter().flat_map(|t| t.x_im.iter().copied()).collect();
    let samples = x_re.len() as f64;
    let exceed: u64 = trials.iter().map(|t| t.exceed).sum();
    let max_grad = trials
        .iter()
        .map(|t| t.max_grad_rel_err)
        .fold(0.0f64, f64::max);
    let (mre, sre) = crate::stats::mean_se(&x_re);
    let (mim, sim) = crate::stats::mean_se(&x_im);
    let exceed_prob = exceed as f64 / samples;

    let mut violations = Vec::new();
    if mre.abs() > 4.0 * sre || mim.abs() > 4.0 * sim {
        violations.push(format!(
            "xk-concentration: mean X = {} + {}i not within 4 SE ({}, {}) of 0",
            fmt_g(mre),
            fmt_g(mim),
            fmt_g(sre),
            fmt_g(sim)
        ));
    }
    if exceed_prob > XK_EXCEED_PROB {
        violations.push(format!(
            "xk-concentration: P(|X| > {XK_EXCEED_LEVEL}) = {} exceeds {XK_EXCEED_PROB}",
            fmt_g(exceed_prob)
        ));
    }
    if max_grad > GRAD_REL_ERR {
        violations.push(format!(
            "xk-concentration: gradient identity rel err {} exceeds {GRAD_REL_ERR}",
            fmt_g(max_grad)
        ));
    }
    let abs_x: Vec<f64> = x_re
        .iter()
        .zip(&x_im)
        .map(|(r, i)| (r * r + i * i).sqrt())
        .collect();
    let batch = TrialBatch::new(config.experiment, abs_x);
    Ok(ExpOutput {
        trials: trials.iter().map(|t| t.record.clone()).collect(),
        aggregate: json!({
            "abs_x": batch.summary(),
            "x_re_mean": mre,
            "x_re_se": sre,
            "x_im_mean": mim,
            "x_im_se": sim,
            "exceed_prob": exceed_prob,
            "max_grad_rel_err": max_grad,
        }),
        violations,
        csvs: vec![CsvOut {
            name: "sweep.csv",
            header: "k,re_Xk,im_Xk,abs_delta_k,drift,drift_bound",
            rows: trials.into_iter().flat_map(|t| t.sweep_rows).collect(),
        }],
    })
}

// -------------------------------------------------------------- bootstrap

fn bootstrap_experiment(
    config: &ExperimentConfig,
    eta: f64,
    warnings: &mut Vec<String>,
) -> Result<ExpOutput> {
    let mut eta0 = eta;
    if eta0 >= 1.0 {
        let w = "bootstrap: eta >= 1 leaves no ladder; using eta0 = 0.5".to_string();
        eprintln!("warning: {w}");
        warnings.push(w);
        eta0 = 0.5;
    }
    let e_max = 2.0 - config.kappa;
    let e_list: Vec<f64> = [-1.5, -1.0, 0.0, 1.0, 1.5]
        .into_iter()
        .filter(|e: &f64| e.abs() <= e_max)
        .collect();
    let trials: Vec<(Value, f64, Vec<Vec<String>>)> = (0..config.trials)
        .into_par_iter()
        .map(|t| -> Result<(Value, f64, Vec<Vec<String>>)> {
            let h = sample_wigner(&config.wigner(t)?)?;
            let eigs = eigvalsh(&h)?;
            let mut min_ratio = f64::INFINITY;
            let mut violations = 0u64;
            let mut ladder_rows = Vec::new();
            for (ei, &e) in e_list.iter().enumerate() {
                let report = bootstrap_ladder(&eigs, e, eta0)?;
                for level in &report.levels {
                    if let Some(r) = level.halving_ratio {
                        min_ratio = min_ratio.min(r);
                        if r < 0.5 - HALVING_TOL {
                            violations += 1;
                        }
                    }
                    if t == 0 && ei == e_list.len() / 2 {
                        ladder_rows.push(vec![
                            format!("{}", level.n),
                            fmt_g(level.eta_n),
                            fmt_g(level.m.re),
                            fmt_g(level.m.im),
                            fmt_g(level.fixed_point_residual),
                            level.halving_ratio.map(fmt_g).unwrap_or_default(),
                        ]);
                    }
                }
            }
            let record = json!({
                "trial": t,
                "seed": trial_seed(config.seed, t),
                "min_halving_ratio": min_ratio,
                "halving_violations": violations,
            });
            Ok((record, min_ratio, ladder_rows))
        })
        .collect::<Result<_>>()?;

    let ratios: Vec<f64> = trials.iter().map(|t| t.1).collect();
    let batch = TrialBatch::new(config.experiment, ratios.clone());
    let mut violations = Vec::new();
    for (t, &r) in ratios.iter().enumerate() {
        if r < 0.5 - HALVING_TOL {
            violations.push(format!(
                "bootstrap: trial {t} halving ratio {} below 1/2",
                fmt_g(r)
            ));
        }
    }
    let rows = trials.iter().flat_map(|t| t.2.clone()).collect();
    Ok(ExpOutput {
        trials: trials.into_iter().map(|t| t.0).collect(),
        aggregate: json!({ "min_halving_ratio": batch.summary() }),
        violations,
        csvs: vec![CsvOut {
            name: "ladder.csv",
            header: "n,eta_n,re_m,im_m,residual,halving_ratio",
            rows,
        }],
    })
}

// ---------------------------------------------------------- identity suite

const IDENTITY_SIZES: [usize; 6] = [2, 4, 8, 16, 32, 64];
const IDENTITY_Z: (f64, f64) = (0.3, 0.1);

/// Named maxima across the identity-suite matrices, one per sub-check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityMaxima {
    pub resolvent_diff: f64,
    pub closure_residual: f64,
    pub v1_diff: f64,
    pub interlacing: f64,
    pub cdf_defect: f64,
    pub drift_excess: f64,
    pub holder_defect: f64,
    pub v1_skipped: u64,
}

impl IdentityMaxima {
    /// (label, value, threshold) triples in spec order.
    pub fn checks(&self) -> [(&'static str, f64, f64); 7] {
        [
            ("resolvent identity max diff", self.resolvent_diff, 1e-9),
            ("recursion closure residual", self.closure_residual, 1e-9),
            ("first-component identity max diff", self.v1_diff, 1e-9),
            ("interlacing violation", self.interlacing, 1e-10),
            ("CDF defect", self.cdf_defect, 1.0),
            ("drift excess over pi/(N eta)", self.drift_excess, 0.0),
            ("Hoelder weight sum defect", self.holder_defect, 1e-12),
        ]
    }
}

pub fn identity_suite_maxima(trials: u64, seed: u64) -> Result<(Vec<Value>, IdentityMaxima)> {
    let z = SpectralParameter::new(IDENTITY_Z.0, IDENTITY_Z.1)?;
    let per_trial: Vec<(Value, IdentityMaxima)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(Value, IdentityMaxima)> {
            let n = IDENTITY_SIZES[(t % IDENTITY_SIZES.len() as u64) as usize];
            let tseed = trial_seed(seed, t);
            let h = sample_wigner(&WignerConfig::gue(n, tseed))?;
            let full = eigh(&h)?;
            let sw = sweep(&h, z)?;
            let mut mx = IdentityMaxima {
                resolvent_diff: 0.0,
                closure_residual: sw.closure_residual,
                v1_diff: 0.0,
                interlacing: sw.max_interlacing_violation,
                cdf_defect: sw.max_cdf_defect,
                drift_excess: sw.max_drift_excess.max(0.0),
                holder_defect: 0.0,
                v1_skipped: 0,
            };
            for k in 0..n {
                let (_l, _r, diff) = resolvent_diag_identity(&h, k, z)?;
                mx.resolvent_diff = mx.resolvent_diff.max(diff);
                let md = minor_data(&h, k, z)?;
                let v1 = delocalization::v1_identity_check(&h, &full, &md)?;
                mx.v1_diff = mx.v1_diff.max(v1.max_abs_diff);
                mx.v1_skipped += v1.skipped as u64;
                let (c, _rho) = holder_weights(&md.lambda, z, 1.0, n)?;
                let sum_inv: f64 = c.iter().map(|&ci| 1.0 / ci).sum();
                mx.holder_defect = mx.holder_defect.max((sum_inv - 1.0).abs());
            }
            let record = json!({
                "trial": t,
                "n": n,
                "seed": tseed,
                "resolvent_diff": mx.resolvent_diff,
                "closure_residual": mx.closure_residual,
                "v1_diff": mx.v1_diff,
                "v1_skipped": mx.v1_skipped,
                "interlacing": mx.interlacing,
                "cdf_defect": mx.cdf_defect,
                "drift_excess": mx.drift_excess,
                "holder_defect": mx.holder_defect,
            });
            Ok((record, mx))
        })
        .collect::<Result<_>>()?;

    let mut total = IdentityMaxima {
        resolvent_diff: 0.0,
        closure_residual: 0.0,
        v1_diff: 0.0,
        interlacing: 0.0,
        cdf_defect: 0.0,
        drift_excess: 0.0,
        holder_defect: 0.0,
        v1_skipped: 0,
    };
    for (_, mx) in &per_trial {
        total.resolvent_diff = total.resolvent_diff.max(mx.resolvent_diff);
        total.closure_residual = total.closure_residual.max(mx.closure_residual);
        total.v1_diff = total.v1_diff.max(mx.v1_diff);
        total.interlacing = total.interlacing.max(mx.interlacing);
        total.cdf_defect = total.cdf_defect.max(mx.cdf_defect);
        total.drift_excess = total.drift_excess.max(mx.drift_excess);
        total.holder_defect = total.holder_defect.max(mx.holder_defect);
        total.v1_skipped += mx.v1_skipped;
    }
    Ok((per_trial.into_iter().map(|p| p.0).collect(), total))
}

fn identity_suite(config: &ExperimentConfig) -> Result<ExpOutput> {
    let (records, mx) = identity_suite_maxima(config.trials, config.seed)?;
    let mut violations = Vec::new();
    for (label, value, threshold) in mx.checks() {
        if value > threshold {
            violations.push(format!(
                "identity-suite: {label} {} exceeds {}",
                fmt_g(value),
                fmt_g(threshold)
            ));
        }
    }
    Ok(ExpOutput {
        trials: records,
        aggregate: serde_json::to_value(&mx).unwrap(),
        violations,
        csvs: Vec::new(),
    })
}

// -------------------------------------------------------- projection lemma

const TAIL_M: usize = 10;
const TAIL_DELTA: f64 = 0.1;
const MONO_DELTA: f64 = 0.2;
const MONO_MS: [usize; 5] = [2, 4, 6, 8, 10];

/// P(chi^2_{2m} <= x) for integer m via the closed-form regularized gamma.
pub fn chi_square_cdf_2m(m: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..m {
        term *= half / j as f64;
        sum += term;
    }
    1.0 - (-half).exp() * sum
}

fn projection_lemma(config: &ExperimentConfig, warnings: &mut Vec<String>) -> Result<ExpOutput> {
    let n = config.n;
    let m = (n / 5).max(1);
    let dist = EntryDistribution::new(config.dist, 0.5)?;
    let gauss = EntryDistribution::gaussian(0.5);
    let a_mean = 1.0; // E|z_i|^2 with two components of variance 1/2

    let base_inv = trial_seed(config.seed, 0xA);
    let base_mom = trial_seed(config.seed, 0xB);
    let base_tail = trial_seed(config.seed, 0xC);

    // exact structural invariants of one sampled projection
    let proj = concentration::random_projection(n, m, base_inv)?;
    let mut idem_defect = 0.0f64;
    let mut rng = stream_rng(trial_seed(base_inv, 1));
    for _ in 0..5 {
        let zv: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(gauss.sample(&mut rng), gauss.sample(&mut rng)))
            .collect();
        let pz = proj.apply(&zv)?;
        let ppz = proj.apply(&pz)?;
        let diff: f64 = ppz
            .iter()
            .zip(&pz)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        idem_defect = idem_defect.max(diff);
    }
    let trace: f64 = (0..n).map(|i| proj.entry(i, i).re).sum();
    let trace_defect = (trace - m as f64).abs();
    let mut herm_defect = 0.0f64;
    for s in 0..10 {
        let i = (s * 37) % n;
        let j = (s * 61 + 13) % n;
        herm_defect = herm_defect.max((proj.entry(i, j) - proj.entry(j, i).conj()).norm());
    }

    // moment ratios from a single shared sample of |Pz|^2
    let moment_trials = config.trials.clamp(1_000, 50_000);
    if moment_trials != config.trials {
        let w = format!(
            "projection-lemma: moment ratios use {moment_trials} trials (config asked {})",
            config.trials
        );
        warnings.push(w);
    }
    let sample_norms = |d: EntryDistribution, seed: u64| -> Vec<f64> {
        (0..moment_trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(trial_seed(seed, t));
                let zv: Vec<Complex64> = (0..n)
                    .map(|_| Complex64::new(d.sample(&mut rng), d.sample(&mut rng)))
                    .collect();
                proj.norm_sq(&zv).unwrap()
            })
            .collect()
    };
    let norms = sample_norms(dist, base_mom);
    let norms_gauss = sample_norms(gauss, trial_seed(base_mom, u64::MAX));
    let (norm_mean, norm_se) = crate::stats::mean_se(&norms);

    let ratio_from_samples = |samples: &[f64], q: u32| -> (f64, f64) {
        let center = a_mean * m as f64;
        let powers: Vec<f64> = samples.iter().map(|&s| (s - center).powi(q as i32)).collect();
        let (mean, se) = crate::stats::mean_se(&powers);
        let qf = q as f64;
        let norm_q = mean.max(0.0).powf(1.0 / qf);
        let scale = qf.sqrt() * (m as f64).sqrt();
        let stderr = if mean > 0.0 {
            norm_q * se / (qf * mean) / scale
        } else {
            f64::NAN
        };
        (norm_q / scale, stderr)
    };

    let mut moment_rows = Vec::new();
    let mut ratios = Vec::new();
    for q in [2u32, 4, 6, 8] {
        let (ratio, stderr) = ratio_from_samples(&norms, q);
        ratios.push((q, config.dist.name(), ratio, stderr));
        moment_rows.push(vec![
            format!("{q}"),
            format!("{m}"),
            format!("{n}"),
            config.dist.name().to_string(),
            fmt_g(ratio),
            fmt_g(stderr),
        ]);
    }
    let (g2_ratio, g2_stderr) = ratio_from_samples(&norms_gauss, 2);
    moment_rows.push(vec![
        "2".into(),
        format!("{m}"),
        format!("{n}"),
        "gaussian".into(),
        fmt_g(g2_ratio),
        fmt_g(g2_stderr),
    ]);

    // lower tails: the chi-square oracle point, then the monotonicity sweep
    let tail_trials = config.trials.max(1_000);
    let ambient = n.min(100);
    let oracle = chi_square_cdf_2m(TAIL_M, 2.0 * TAIL_DELTA * TAIL_M as f64);
    let main_tail = xi_lower_tail(
        TAIL_M,
        ambient,
        TAIL_DELTA,
        tail_trials,
        &gauss,
        trial_seed(base_tail, 0),
    )?;
    let mut tail_rows = vec![vec![
        format!("{TAIL_M}"),
        fmt_g(TAIL_DELTA),
        format!("{}", main_tail.trials),
        format!("{}", main_tail.hits),
        fmt_g(main_tail.phat),
        fmt_g(main_tail.ci_lo),
        fmt_g(main_tail.ci_hi),
    ]];
    let mono: Vec<(usize, crate::delocalization::TailEstimate)> = MONO_MS
        .into_iter()
        .enumerate()
        .map(|(i, mm)| -> Result<_> {
            let est = xi_lower_tail(
                mm,
                ambient,
                MONO_DELTA,
                tail_trials,
                &gauss,
                trial_seed(base_tail, 1 + i as u64),
            )?;
            Ok((mm, est))
        })
        .collect::<Result<_>>()?;
    for (mm, est) in &mono {
        tail_rows.push(vec![
            format!("{mm}"),
            fmt_g(MONO_DELTA),
            format!("{}", est.trials),
            format!("{}", est.hits),
            fmt_g(est.phat),
            fmt_g(est.ci_lo),
            fmt_g(est.ci_hi),
        ]);
    }

    let mut violations = Vec::new();
    if idem_defect > 1e-10 {
        violations.push(format!(
            "projection-lemma: idempotence defect {}",
            fmt_g(idem_defect)
        ));
    }
    if trace_defect > 1e-9 {
        violations.push(format!("projection-lemma: trace defect {}", fmt_g(trace_defect)));
    }
    if herm_defect > 1e-12 {
        violations.push(format!(
            "projection-lemma: hermiticity defect {}",
            fmt_g(herm_defect)
        ));
    }
    if (norm_mean - a_mean * m as f64).abs() > 4.0 * norm_se {
        violations.push(format!(
            "projection-lemma: mean |Pz|^2 = {} not within 4 SE ({}) of {}",
            fmt_g(norm_mean),
            fmt_g(norm_se),
            fmt_g(a_mean * m as f64)
        ));
    }
    for &(q, dname, ratio, _se) in &ratios {
        if ratio > MOMENT_RATIO_MAX {
            violations.push(format!(
                "projection-lemma: {dname} q={q} moment ratio {} exceeds {MOMENT_RATIO_MAX}",
                fmt_g(ratio)
            ));
        }
    }
    let g2_want = 1.0 / 2.0f64.sqrt();
    if (g2_ratio - g2_want).abs() > 0.02 * g2_want {
        violations.push(format!(
            "projection-lemma: gaussian q=2 ratio {} off 1/sqrt(2) by more than 2%",
            fmt_g(g2_ratio)
        ));
    }
    if !(main_tail.ci_lo <= oracle && oracle <= main_tail.ci_hi) {
        violations.push(format!(
            "projection-lemma: Wilson CI [{}, {}] misses chi-square oracle {}",
            fmt_g(main_tail.ci_lo),
            fmt_g(main_tail.ci_hi),
            fmt_g(oracle)
        ));
    }
    for w in mono.windows(2) {
        let (m_a, ref ea) = w[0];
        let (m_b, ref eb) = w[1];
        if ea.phat > 0.0 && eb.phat >= ea.phat {
            violations.push(format!(
                "projection-lemma: tail probability not decreasing from m={m_a} ({}) to m={m_b} ({})",
                fmt_g(ea.phat),
                fmt_g(eb.phat)
            ));
        }
    }

    let record = json!({
        "trial": 0,
        "seed": config.seed,
        "projection": { "n": n, "m": m },
        "idempotence_defect": idem_defect,
        "trace_defect": trace_defect,
        "hermiticity_defect": herm_defect,
        "norm_sq_mean": norm_mean,
        "norm_sq_se": norm_se,
        "tail_oracle": oracle,
        "tail": serde_json::to_value(&main_tail).unwrap(),
    });
    let batch = TrialBatch::new(config.experiment, ratios.iter().map(|r| r.2).collect());
    Ok(ExpOutput {
        trials: vec![record],
        aggregate: json!({
            "moment_ratio": batch.summary(),
            "gaussian_q2_ratio": g2_ratio,
            "tail_phat": main_tail.phat,
            "tail_oracle": oracle,
            "monotone_phats": mono.iter().map(|(_, e)| e.phat).collect::<Vec<_>>(),
        }),
        violations,
        csvs: vec![
            CsvOut {
                name: "moments.csv",
                header: "q,m,n,dist,ratio,stderr",
                rows: moment_rows,
            },
            CsvOut {
                name: "tails.csv",
                header: "m,delta,trials,hits,phat,ci_lo,ci_hi",
                rows: tail_rows,
            },
        ],
    })
}

// --------------------------------------------------------------- khintchine

fn khintchine_experiment(
    config: &ExperimentConfig,
    warnings: &mut Vec<String>,
) -> Result<ExpOutput> {
    let n = config.n;
    let coeffs: Vec<f64> = (0..n).map(|j| 1.0 + 0.1 * j as f64).collect();
    let trials = config.trials.max(1_000);
    let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
    let gauss_q4 = 3.0f64.powf(0.25) / 2.0;

    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut records = Vec::new();
    let dists = [
        EntryDistribution::gaussian(1.0),
        EntryDistribution::rademacher(),
        EntryDistribution::smoothed_uniform(1.0),
    ];
    let mut push_row = |q: u32, dname: &str, ratio: f64, stderr: f64, oracle: Option<f64>| {
        rows.push(vec![
            format!("{q}"),
            format!("{n}"),
            dname.to_string(),
            fmt_g(ratio),
            fmt_g(stderr),
            oracle.map(fmt_g).unwrap_or_default(),
        ]);
    };

    // q = 2 for every law: the ratio is exactly 1/sqrt(2) in expectation
    for (i, d) in dists.iter().enumerate() {
        let r = concentration::khintchine_ratio(
            &coeffs,
            d,
            2,
            trials,
            trial_seed(config.seed, i as u64),
        )?;
        push_row(2, d.kind.name(), r.ratio, r.stderr, Some(inv_sqrt2));
        if (r.ratio - inv_sqrt2).abs() > 0.01 * inv_sqrt2 {
            violations.push(format!(
                "khintchine: {} q=2 ratio {} off 1/sqrt(2) by more than 1%",
                d.kind.name(),
                fmt_g(r.ratio)
            ));
        }
        records.push(json!({
            "q": 2, "dist": d.kind.name(), "ratio": r.ratio, "stderr": r.stderr,
        }));
    }

    // gaussian q = 4 against the closed form 3^{1/4}/2
    let g4 = concentration::khintchine_ratio(
        &coeffs,
        &EntryDistribution::gaussian(1.0),
        4,
        trials,
        trial_seed(config.seed, 10),
    )?;
    push_row(4, "gaussian", g4.ratio, g4.stderr, Some(gauss_q4));
    if (g4.ratio - gauss_q4).abs() > 0.01 * gauss_q4 {
        violations.push(format!(
            "khintchine: gaussian q=4 ratio {} off 3^(1/4)/2 by more than 1%",
            fmt_g(g4.ratio)
        ));
    }
    records.push(json!({
        "q": 4, "dist": "gaussian", "ratio": g4.ratio, "stderr": g4.stderr, "oracle": gauss_q4,
    }));

    // rademacher q = 4 against exact sign enumeration when feasible
    let r4 = concentration::khintchine_ratio(
        &coeffs,
        &EntryDistribution::rademacher(),
        4,
        trials,
        trial_seed(config.seed, 11),
    )?;
    let exact = if n <= 24 {
        Some(concentration::khintchine_ratio_exact_rademacher(&coeffs, 4)?)
    } else {
        warnings.push(format!(
            "khintchine: n = {n} too large for exact enumeration; skipping that oracle"
        ));
        None
    };
    push_row(4, "rademacher", r4.ratio, r4.stderr, exact);
    if let Some(ex) = exact {
        if (r4.ratio - ex).abs() > 0.01 * ex {
            violations.push(format!(
                "khintchine: rademacher q=4 ratio {} off exact {} by more than 1%",
                fmt_g(r4.ratio),
                fmt_g(ex)
            ));
        }
    }
    records.push(json!({
        "q": 4, "dist": "rademacher", "ratio": r4.ratio, "stderr": r4.stderr,
        "oracle": exact,
    }));

    let batch = TrialBatch::new(
        config.experiment,
        records
            .iter()
            .map(|r| r["ratio"].as_f64().unwrap())
            .collect(),
    );
    Ok(ExpOutput {
        trials: records,
        aggregate: json!({ "ratio": batch.summary() }),
        violations,
        csvs: vec![CsvOut {
            name: "khintchine.csv",
            header: "q,n,dist,ratio,stderr,oracle",
            rows,
        }],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn tiny_config(experiment: ExperimentKind, dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            experiment,
            n: 24,
            trials: 2,
            kappa: 0.5,
            eta_spec: EtaSpec::Params { c: 2.0, a: 0.0 },
            dist: DistKind::Gaussian,
            seed: 7,
            threads: Some(2),
            out_dir: dir.to_path_buf(),
        }
    }

    #[test]
    fn smallest_sweep_run() {
        let dir = tempdir().unwrap();
        let mut cfg = tiny_config(ExperimentKind::SemicircleSweep, dir.path());
        cfg.n = 2;
        cfg.trials = 1;
        let out = run_experiment(&cfg).unwrap();
        let trials = out.science["trials"].as_array().unwrap();
        assert_eq!(trials.len(), 1);
        assert!(dir.path().join("grid.csv").exists());
        let csv = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
        assert!(csv.starts_with("E,eta,re_m,im_m,re_msc,im_msc,abs_dev\n"));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn determinism_across_thread_counts() {
        let dir1 = tempdir().unwrap();
        let dir2 = tempdir().unwrap();
        let mut a = tiny_config(ExperimentKind::SemicircleSweep, dir1.path());
        a.threads = Some(1);
        let mut b = tiny_config(ExperimentKind::SemicircleSweep, dir2.path());
        b.threads = Some(4);
        let ra = run_experiment(&a).unwrap();
        let rb = run_experiment(&b).unwrap();
        // science blocks agree except for the config echo (threads/out_dir)
        let strip = |mut v: Value| {
            v.as_object_mut().unwrap().remove("config");
            v.as_object_mut().unwrap().remove("config_hash");
            v
        };
        assert_eq!(
            json_to_string(&strip(ra.science.clone())),
            json_to_string(&strip(rb.science.clone()))
        );
    }

    #[test]
    fn rerun_identical_science() {
        let dir = tempdir().unwrap();
        let cfg = tiny_config(ExperimentKind::Bootstrap, dir.path());
        let r1 = run_experiment(&cfg).unwrap();
        let r2 = run_experiment(&cfg).unwrap();
        assert_eq!(json_to_string(&r1.science), json_to_string(&r2.science));
    }

    #[test]
    fn eta_resolution() {
        let (eta, warn) = EtaSpec::Params { c: 20.0, a: 0.0 }.resolve(2000).unwrap();
        assert!((eta - 0.01).abs() < 1e-15);
        assert!(warn.is_none());
        let (eta, warn) = EtaSpec::Preset("paper".into()).resolve(2000).unwrap();
        assert_eq!(eta, 1.0);
        assert!(warn.is_some());
        assert!(EtaSpec::Preset("magic".into()).resolve(100).is_err());
        assert!(EtaSpec::Params { c: -1.0, a: 0.0 }.resolve(100).is_err());
    }

    #[test]
    fn config_validation_and_hash() {
        let dir = tempdir().unwrap();
        let cfg = tiny_config(ExperimentKind::Counting, dir.path());
        assert!(cfg.validate().is_ok());
        let mut bad = cfg.clone();
        bad.kappa = 2.5;
        assert!(bad.validate().is_err());
        let mut other = cfg.clone();
        other.seed = 8;
        assert_ne!(cfg.hash(), other.hash());
        assert_eq!(cfg.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn config_load_rejects_unknown_experiment() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"experiment":"frobnicate","n":10,"trials":1,"kappa":0.5,
               "eta_spec":{"c":1.0,"a":0.0},"dist":"gaussian","seed":1,"out_dir":"x"}"#,
        )
        .unwrap();
        assert!(matches!(ExperimentConfig::load(&path), Err(Error::Config(_))));
    }

    #[test]
    fn aggregate_monoid_laws() {
        let k = ExperimentKind::Counting;
        let a = TrialBatch::new(k, vec![3.0, 1.0]);
        let b = TrialBatch::new(k, vec![2.0]);
        let c = TrialBatch::new(k, vec![5.0, 4.0]);
        // identity
        assert_eq!(aggregate(&[a.clone()]).unwrap(), a);
        // associativity
        let left = aggregate(&[aggregate(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
        let right = aggregate(&[a.clone(), aggregate(&[b.clone(), c.clone()]).unwrap()]).unwrap();
        assert_eq!(left, right);
        // order independence
        let fwd = aggregate(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let rev = aggregate(&[c.clone(), b.clone(), a.clone()]).unwrap();
        assert_eq!(fwd, rev);
        // mixed experiments rejected
        let other = TrialBatch::new(ExperimentKind::Khintchine, vec![1.0]);
        assert!(aggregate(&[a, other]).is_err());
    }

    #[test]
    fn chi_square_oracle_values() {
        // P(chi^2_2 <= 2) = 1 - e^{-1}
        assert!((chi_square_cdf_2m(1, 2.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        // P(chi^2_20 <= 2) ~ 5.0e-5 (the m = 10, delta = 0.1 tail oracle)
        let p = chi_square_cdf_2m(10, 2.0);
        assert!((4.5e-5..5.5e-5).contains(&p), "p = {p}");
    }

    #[test]
    fn identity_suite_tiny() {
        let dir = tempdir().unwrap();
        let mut cfg = tiny_config(ExperimentKind::IdentitySuite, dir.path());
        cfg.trials = 6;
        let out = run_experiment(&cfg).unwrap();
        assert!(out.violations.is_empty(), "{:?}", out.violations);
        assert_eq!(out.science["trials"].as_array().unwrap().len(), 6);
    }

    #[test]
    fn bootstrap_tiny_run_passes() {
        let dir = tempdir().unwrap();
        let cfg = tiny_config(ExperimentKind::Bootstrap, dir.path());
        let out = run_experiment(&cfg).unwrap();
        assert!(out.violations.is_empty(), "{:?}", out.violations);
        let csv = std::fs::read_to_string(dir.path().join("ladder.csv")).unwrap();
        assert!(csv.starts_with("n,eta_n,re_m,im_m,residual,halving_ratio\n"));
    }
}
