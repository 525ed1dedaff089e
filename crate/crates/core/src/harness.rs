//! Seeded experiment sweeps, CSV records and summaries.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{repetitive_dc, RepetitiveConfig, RepetitiveMode, DEFAULT_REPETITION_DELTA};
use crate::dc::{dc, random_problem, BasisKind, DcConfig, DcMode};
use crate::error::{HdcError, Result};
use crate::linalg::estimation_error;
use crate::oracle::{check_rho, NoisyOracle, SignOracle, TruthOracle};
use crate::tree::TreeKind;

pub const RECORD_HEADER: [&str; 10] = [
    "trial",
    "method",
    "d",
    "rho",
    "budget_or_T",
    "queries_used",
    "repetitions_R",
    "error",
    "seed",
    "wall_ms",
];

pub const SUMMARY_HEADER: [&str; 10] = [
    "method",
    "d",
    "rho",
    "budget_or_T",
    "trials",
    "mean_error",
    "median_error",
    "p05_error",
    "p95_error",
    "mean_wall_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dc,
    RepetitiveDc,
}

impl FromStr for Method {
    type Err = HdcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dc" => Ok(Method::Dc),
            "repetitive-dc" => Ok(Method::RepetitiveDc),
            other => Err(HdcError::param("method", format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Dc => "dc",
            Method::RepetitiveDc => "repetitive-dc",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunMode {
    Budget(usize),
    Schedule { eps: f64, delta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub rho: f64,
    pub method: Method,
    pub mode: RunMode,
    pub tree: TreeKind,
    pub trials: usize,
    pub seed: u64,
    pub basis: BasisKind,
    /// Fixed majority-vote count for Repetitive-DC; computed when `None`.
    pub repetitions: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(HdcError::param("d", format!("need at least 2, got {}", self.d)));
        }
        check_rho(self.rho)?;
        if self.trials == 0 {
            return Err(HdcError::param("trials", "need at least one trial"));
        }
        match self.mode {
            RunMode::Budget(b) if b < self.d - 1 => {
                return Err(HdcError::param(
                    "budget",
                    format!("budget {b} is below d - 1 = {}", self.d - 1),
                ))
            }
            RunMode::Schedule { eps, delta } => {
                if !(eps > 0.0 && eps.is_finite()) {
                    return Err(HdcError::param("eps", format!("must be positive, got {eps}")));
                }
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(HdcError::param("delta", format!("must lie in (0, 1), got {delta}")));
                }
            }
            RunMode::Budget(_) => {}
        }
        if self.method == Method::Dc && self.repetitions.is_some() {
            return Err(HdcError::param("repetitions", "only applies to repetitive-dc"));
        }
        // surfaces tree, eps and repetition-plan errors before any trial runs
        match self.method {
            Method::Dc => self.dc_config()?.rounds_per_call().map(drop),
            Method::RepetitiveDc => self.repetitive_config()?.plan().map(drop),
        }
    }

    fn dc_config(&self) -> Result<DcConfig> {
        Ok(DcConfig {
            rho: self.rho,
            mode: match self.mode {
                RunMode::Budget(total_queries) => DcMode::Budget { total_queries },
                RunMode::Schedule { eps, delta } => DcMode::Schedule {
                    eps_total: eps,
                    delta_total: delta,
                },
            },
            tree: self.tree.build(self.d)?,
        })
    }

    fn repetitive_config(&self) -> Result<RepetitiveConfig> {
        Ok(RepetitiveConfig {
            rho: self.rho,
            mode: match self.mode {
                RunMode::Budget(total_queries) => RepetitiveMode::Budget {
                    total_queries,
                    delta: DEFAULT_REPETITION_DELTA,
                },
                RunMode::Schedule { eps, delta } => RepetitiveMode::Schedule {
                    eps_total: eps,
                    delta_total: delta,
                },
            },
            tree: self.tree.build(self.d)?,
            repetitions: self.repetitions,
        })
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub trial: usize,
    pub method: Method,
    pub d: usize,
    pub rho: f64,
    /// Query budget in budget mode, per-call round count in schedule mode.
    #[serde(rename = "budget_or_T")]
    pub budget_or_t: usize,
    pub queries_used: u64,
    #[serde(rename = "repetitions_R")]
    pub repetitions_r: usize,
    pub error: f64,
    pub seed: u64,
    pub wall_ms: f64,
}

/// SplitMix64 finalizer applied to `seed + stream · φ`.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs every trial of `config`. Trials run in parallel; the result is in
/// trial order and, apart from `wall_ms`, a pure function of the config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t))
        .collect()
}

fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<RunRecord> {
    let seed = mix_seed(config.seed, trial as u64);
    let problem = random_problem(config.d, mix_seed(seed, 0), config.basis)?;
    let mut oracle = NoisyOracle::new(TruthOracle::new(&problem.h_star), config.rho, mix_seed(seed, 1))?;

    let start = Instant::now();
    let (estimate, repetitions, per_call) = match config.method {
        Method::Dc => {
            let cfg = config.dc_config()?;
            let rounds = cfg.rounds_per_call()?;
            (dc(&problem.basis, &cfg, &mut oracle)?, 1, rounds[0])
        }
        Method::RepetitiveDc => {
            let out = repetitive_dc(&problem.basis, &config.repetitive_config()?, &mut oracle)?;
            (out.estimate, out.plan.repetitions, out.plan.logical_rounds[0])
        }
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    Ok(RunRecord {
        trial,
        method: config.method,
        d: config.d,
        rho: config.rho,
        budget_or_t: match config.mode {
            RunMode::Budget(b) => b,
            RunMode::Schedule { .. } => per_call,
        },
        queries_used: oracle.queries_used(),
        repetitions_r: repetitions,
        error: estimation_error(&estimate, &problem.h_star)?,
        seed,
        wall_ms,
    })
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Errors are printed with 17 significant digits.
fn fmt_error(e: f64) -> String {
    format!("{e:.16e}")
}

pub fn write_records<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record([
            r.trial.to_string(),
            r.method.to_string(),
            r.d.to_string(),
            r.rho.to_string(),
            r.budget_or_t.to_string(),
            r.queries_used.to_string(),
            r.repetitions_r.to_string(),
            fmt_error(r.error),
            r.seed.to_string(),
            format!("{:.3}", r.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(RECORD_HEADER) {
        return Err(HdcError::param(
            "in",
            format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    reader
        .deserialize()
        .map(|row| row.map_err(HdcError::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub d: usize,
    pub rho: f64,
    pub budget_or_t: usize,
    pub trials: usize,
    pub mean_error: f64,
    pub median_error: f64,
    pub p05_error: f64,
    pub p95_error: f64,
    pub mean_wall_ms: f64,
}

/// Percentile by linear interpolation between order statistics
/// (position `q·(n−1)` in the sorted sample).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Per-group statistics, grouped by `(method, d, rho, budget_or_T)` in order
/// of first appearance.
pub fn summarize(records: &[RunRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(HdcError::param("in", "no records to summarize"));
    }
    let mut order: Vec<(Method, usize, u64, usize)> = Vec::new();
    let mut groups: HashMap<(Method, usize, u64, usize), Vec<&RunRecord>> = HashMap::new();
    for r in records {
        let key = (r.method, r.d, r.rho.to_bits(), r.budget_or_t);
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    Ok(order
        .into_iter()
        .map(|key| {
            let rows = &groups[&key];
            let n = rows.len() as f64;
            let mut errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
            errors.sort_by(f64::total_cmp);
            SummaryRow {
                method: key.0,
                d: key.1,
                rho: f64::from_bits(key.2),
                budget_or_t: key.3,
                trials: rows.len(),
                mean_error: errors.iter().sum::<f64>() / n,
                median_error: percentile(&errors, 0.5),
                p05_error: percentile(&errors, 0.05),
                p95_error: percentile(&errors, 0.95),
                mean_wall_ms: rows.iter().map(|r| r.wall_ms).sum::<f64>() / n,
            }
        })
        .collect())
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for s in rows {
        w.write_record([
            s.method.to_string(),
            s.d.to_string(),
            s.rho.to_string(),
            s.budget_or_t.to_string(),
            s.trials.to_string(),
            fmt_error(s.mean_error),
            fmt_error(s.median_error),
            fmt_error(s.p05_error),
            fmt_error(s.p95_error),
            format!("{:.3}", s.mean_wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn default_methods() -> Vec<Method> {
    vec![Method::Dc, Method::RepetitiveDc]
}

fn default_delta() -> f64 {
    0.05
}

/// Grid of experiments read from JSON, for example
///
/// ```json
/// {"d": [25, 50], "rho": [0.1], "budget": [800, 1800], "trials": 50, "seed": 7}
/// ```
///
/// Either `budget` or `eps` must be non-empty. Every grid point shares
/// `seed`, so the methods see the same problems.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub d: Vec<usize>,
    pub rho: Vec<f64>,
    #[serde(default)]
    pub budget: Vec<usize>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub tree: TreeKind,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub basis: BasisKind,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn expand(&self) -> Result<Vec<ExperimentConfig>> {
        let mut modes: Vec<RunMode> = self.budget.iter().map(|&b| RunMode::Budget(b)).collect();
        modes.extend(self.eps.iter().map(|&eps| RunMode::Schedule {
            eps,
            delta: self.delta,
        }));
        if modes.is_empty() {
            return Err(HdcError::param("budget", "sweep needs `budget` or `eps` values"));
        }
        if self.d.is_empty() || self.rho.is_empty() || self.methods.is_empty() {
            return Err(HdcError::param("d", "sweep grids over d, rho and methods must be non-empty"));
        }
        let mut out = Vec::new();
        for &method in &self.methods {
            for &d in &self.d {
                for &rho in &self.rho {
                    for &mode in &modes {
                        let cfg = ExperimentConfig {
                            d,
                            rho,
                            method,
                            mode,
                            tree: self.tree,
                            trials: self.trials,
                            seed: self.seed,
                            basis: self.basis,
                            repetitions: None,
                        };
                        cfg.validate()?;
                        out.push(cfg);
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(method: Method, mode: RunMode) -> ExperimentConfig {
        ExperimentConfig {
            d: 25,
            rho: 0.1,
            method,
            mode,
            tree: TreeKind::Balanced,
            trials: 5,
            seed: 11,
            basis: BasisKind::Standard,
            repetitions: None,
        }
    }

    fn record(error: f64) -> RunRecord {
        RunRecord {
            trial: 0,
            method: Method::Dc,
            d: 4,
            rho: 0.1,
            budget_or_t: 100,
            queries_used: 100,
            repetitions_r: 1,
            error,
            seed: 0,
            wall_ms: 1.0,
        }
    }

    #[test]
    fn percentiles_of_one_to_hundred() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        let recs: Vec<RunRecord> = xs.iter().map(|&e| record(e)).collect();
        let s = &summarize(&recs).unwrap()[0];
        assert!((s.median_error - 50.5).abs() < 1e-12);
        assert!((s.p05_error - 5.95).abs() < 1e-12);
        assert!((s.p95_error - 95.05).abs() < 1e-12);
        assert!((s.mean_error - 50.5).abs() < 1e-12);
    }

    #[test]
    fn constant_and_single_groups() {
        let recs = vec![record(0.25); 50];
        let s = &summarize(&recs).unwrap()[0];
        assert_eq!((s.mean_error, s.median_error, s.p05_error, s.p95_error), (0.25, 0.25, 0.25, 0.25));
        assert_eq!(s.trials, 50);
        let s = &summarize(&[record(0.7)]).unwrap()[0];
        assert_eq!((s.p05_error, s.p95_error), (0.7, 0.7));
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn groups_keep_first_appearance_order() {
        let mut a = record(1.0);
        a.d = 9;
        let b = record(2.0);
        let mut c = record(3.0);
        c.d = 9;
        let rows = summarize(&[a, b, c]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].d, rows[0].trials), (9, 2));
        assert_eq!((rows[1].d, rows[1].trials), (4, 1));
    }

    #[test]
    fn budget_run_uses_full_budget() {
        let recs = run_experiment(&cfg(Method::Dc, RunMode::Budget(800))).unwrap();
        assert_eq!(recs.len(), 5);
        for (t, r) in recs.iter().enumerate() {
            assert_eq!(r.trial, t);
            assert_eq!(r.queries_used, 800);
            assert_eq!(r.repetitions_r, 1);
            assert!((0.0..=2.0).contains(&r.error));
        }
    }

    #[test]
    fn repetitive_run_stays_within_budget() {
        let recs = run_experiment(&cfg(Method::RepetitiveDc, RunMode::Budget(800))).unwrap();
        for r in &recs {
            assert!(r.queries_used <= 800);
            assert_eq!(r.repetitions_r, 21);
        }
    }

    #[test]
    fn noiseless_schedule_meets_tolerance() {
        let mut c = cfg(Method::Dc, RunMode::Schedule { eps: 1e-3, delta: 0.05 });
        c.rho = 0.0;
        for r in run_experiment(&c).unwrap() {
            assert!(r.error <= 1e-3);
            assert_eq!(r.budget_or_t, 19);
        }
    }

    #[test]
    fn csv_round_trip_and_format() {
        let recs = run_experiment(&cfg(Method::Dc, RunMode::Budget(100))).unwrap();
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "trial,method,d,rho,budget_or_T,queries_used,repetitions_R,error,seed,wall_ms\n"
        ));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 1 + recs.len());
        let err_field = text.lines().nth(1).unwrap().split(',').nth(7).unwrap();
        let mantissa = err_field.split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mantissa.len(), 17, "{err_field}");
        let back = read_records(buf.as_slice()).unwrap();
        assert_eq!(back.len(), recs.len());
        for (a, b) in back.iter().zip(&recs) {
            assert_eq!(a.error, b.error);
            assert_eq!(a.seed, b.seed);
            assert_eq!(a.method, b.method);
        }
    }

    #[test]
    fn validation_names_the_field() {
        let check = |c: ExperimentConfig, field: &str| match c.validate() {
            Err(HdcError::InvalidParameter { name, .. }) => assert_eq!(name, field),
            other => panic!("expected error on {field}, got {other:?}"),
        };
        let mut c = cfg(Method::Dc, RunMode::Budget(800));
        c.d = 1;
        check(c, "d");
        let mut c = cfg(Method::Dc, RunMode::Budget(800));
        c.rho = 0.5;
        check(c, "rho");
        let mut c = cfg(Method::Dc, RunMode::Budget(800));
        c.trials = 0;
        check(c, "trials");
        check(cfg(Method::Dc, RunMode::Budget(3)), "budget");
        check(cfg(Method::Dc, RunMode::Schedule { eps: -1.0, delta: 0.1 }), "eps");
        check(cfg(Method::Dc, RunMode::Schedule { eps: 0.1, delta: 1.5 }), "delta");
        let mut c = cfg(Method::RepetitiveDc, RunMode::Budget(800));
        c.repetitions = Some(4);
        check(c, "repetitions");
    }

    #[test]
    fn sweep_expansion() {
        let s = SweepConfig::from_json(
            r#"{"d": [4, 6], "rho": [0.0, 0.1], "budget": [50], "eps": [0.1], "trials": 2}"#,
        )
        .unwrap();
        let cfgs = s.expand().unwrap();
        assert_eq!(cfgs.len(), 2 * 2 * 2 * 2);
        assert!(SweepConfig::from_json(r#"{"d": [4], "rho": [0.1], "trials": 2}"#)
            .unwrap()
            .expand()
            .is_err());
        assert!(SweepConfig::from_json(r#"{"d": [4], "rho": [0.1], "trials": 2, "bogus": 1}"#).is_err());
    }

    #[test]
    fn seed_mixing_spreads_streams() {
        let a: Vec<u64> = (0..100).map(|t| mix_seed(1, t)).collect();
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 100);
        assert_ne!(mix_seed(1, 0), mix_seed(2, 0));
    }
}
