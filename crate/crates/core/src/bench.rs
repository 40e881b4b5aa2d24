//! Experiment harness: seeded batches of (instance × operator × run)
//! trials, CSV result tables, average ranks, gap summaries and the Nemenyi
//! critical distance.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::ea::{run_opo_ea, RunRecord, StopCondition};
use crate::instance::{FitnessSpec, Instance, SpecError};
use crate::mutation::{MutationError, MutationOperator, OperatorSpec};
use crate::parallel;
use crate::rng::derive_seed;

pub const RESULT_HEADER: [&str; 7] = [
    "instance",
    "operator",
    "run_id",
    "seed",
    "checkpoint",
    "best_fitness",
    "wall_ms",
];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Mutation(#[from] MutationError),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("CSV error: {0}")]
    Csv(String),
    #[error("missing cells at checkpoint {checkpoint}: {cells}")]
    MissingCells { checkpoint: u64, cells: String },
    #[error("no results at checkpoint {0}")]
    NoResults(u64),
    #[error(
        "Nemenyi table covers 2 <= k <= 10 and alpha in {{0.05, 0.10}} with N >= 2 (got k={k}, N={n}, alpha={alpha})"
    )]
    UnsupportedNemenyi { k: usize, n: usize, alpha: f64 },
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        Self::Csv(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub instances: Vec<FitnessSpec>,
    pub operators: Vec<OperatorSpec>,
    pub repetitions: usize,
    pub budget: u64,
    pub master_seed: u64,
    /// Ascending evaluation counts within `[1, budget]`.
    pub checkpoints: Vec<u64>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    /// Wall-clock cap per (instance, operator) pair.
    pub max_wall_seconds: Option<f64>,
}

impl ExperimentConfig {
    /// Parses `key = value` lines. `instance` and `operator` may repeat;
    /// `checkpoints` is a comma-separated list and defaults to the budget.
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let mut instances = Vec::new();
        let mut operators = Vec::new();
        let mut scalars: HashMap<&str, (usize, &str)> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let bad = |reason: String| BenchError::Config { line, reason };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| bad("expected `key = value`".into()))?;
            match key {
                "instance" => instances.push(value.parse::<FitnessSpec>().map_err(|e| bad(e.to_string()))?),
                "operator" => operators.push(value.parse::<OperatorSpec>().map_err(|e| bad(e.to_string()))?),
                "repetitions" | "budget" | "master_seed" | "checkpoints" | "output" | "threads"
                | "max_wall_seconds" => {
                    if scalars.insert(key, (line, value)).is_some() {
                        return Err(bad(format!("`{key}` given twice")));
                    }
                }
                _ => return Err(bad(format!("unknown key `{key}`"))),
            }
        }

        fn num<T: std::str::FromStr>(
            scalars: &HashMap<&str, (usize, &str)>,
            key: &str,
        ) -> Result<Option<T>, BenchError> {
            scalars
                .get(key)
                .map(|&(line, v)| {
                    v.parse().map_err(|_| BenchError::Config {
                        line,
                        reason: format!("invalid value `{v}` for `{key}`"),
                    })
                })
                .transpose()
        }

        let budget: u64 = num(&scalars, "budget")?.ok_or_else(|| BenchError::Invalid("`budget` is required".into()))?;
        let checkpoints = match scalars.get("checkpoints") {
            Some(&(line, v)) => v
                .split(',')
                .map(|c| {
                    c.trim().parse::<u64>().map_err(|_| BenchError::Config {
                        line,
                        reason: format!("invalid checkpoint `{}`", c.trim()),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![budget],
        };
        let config = Self {
            instances,
            operators,
            repetitions: num(&scalars, "repetitions")?.unwrap_or(1),
            budget,
            master_seed: num(&scalars, "master_seed")?.unwrap_or(0),
            checkpoints,
            output: scalars.get("output").map(|&(_, v)| PathBuf::from(v)),
            threads: num(&scalars, "threads")?,
            max_wall_seconds: num(&scalars, "max_wall_seconds")?,
        };
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        let path = path.as_ref();
        let mut config = Self::parse(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for spec in &mut config.instances {
            spec.rebase(base);
        }
        if let Some(out) = &mut config.output {
            *out = base.join(&*out);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let invalid = |m: &str| Err(BenchError::Invalid(m.into()));
        if self.instances.is_empty() {
            return invalid("at least one `instance` is required");
        }
        if self.operators.is_empty() {
            return invalid("at least one `operator` is required");
        }
        if self.repetitions == 0 {
            return invalid("`repetitions` must be at least 1");
        }
        if self.budget == 0 {
            return invalid("`budget` must be at least 1");
        }
        if self.checkpoints.is_empty()
            || self.checkpoints.windows(2).any(|w| w[0] >= w[1])
            || self.checkpoints[0] == 0
            || *self.checkpoints.last().unwrap() > self.budget
        {
            return invalid("`checkpoints` must be strictly increasing within [1, budget]");
        }
        if self.threads == Some(0) {
            return invalid("`threads` must be at least 1");
        }
        if self.max_wall_seconds.is_some_and(|s| s.is_nan() || s <= 0.0) {
            return invalid("`max_wall_seconds` must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub instance: String,
    pub operator: String,
    pub run_id: usize,
    pub seed: u64,
    pub checkpoint: u64,
    pub best_fitness: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

fn write_row<W: Write>(w: &mut csv::Writer<W>, r: &ResultRow) -> csv::Result<()> {
    w.write_record([
        r.instance.as_str(),
        r.operator.as_str(),
        &r.run_id.to_string(),
        &r.seed.to_string(),
        &r.checkpoint.to_string(),
        &r.best_fitness.to_string(),
        &format!("{:.3}", r.wall_ms),
    ])
}

impl ResultTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(RESULT_HEADER)?;
        for r in &self.rows {
            write_row(&mut w, r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, BenchError> {
        let mut reader = csv::Reader::from_reader(input);
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if header != RESULT_HEADER {
            return Err(BenchError::Csv(format!("unexpected header `{}`", header.join(","))));
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let field = |j: usize| record.get(j).unwrap_or("");
            let bad = |j: usize| BenchError::Csv(format!("row {}: invalid {} `{}`", i + 2, RESULT_HEADER[j], field(j)));
            rows.push(ResultRow {
                instance: field(0).to_string(),
                operator: field(1).to_string(),
                run_id: field(2).parse().map_err(|_| bad(2))?,
                seed: field(3).parse().map_err(|_| bad(3))?,
                checkpoint: field(4).parse().map_err(|_| bad(4))?,
                best_fitness: field(5).parse().map_err(|_| bad(5))?,
                wall_ms: field(6).parse().map_err(|_| bad(6))?,
            });
        }
        Ok(Self { rows })
    }

    pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        Self::read_csv(File::open(path)?)
    }

    /// Distinct checkpoints, ascending.
    pub fn checkpoints(&self) -> Vec<u64> {
        let mut c: Vec<u64> = self.rows.iter().map(|r| r.checkpoint).collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Keeps only instances that have results for every operator seen in the table.
    pub fn complete_instances(&self) -> Self {
        let ops = first_seen(self.rows.iter().map(|r| r.operator.as_str()));
        let mut present: HashMap<&str, Vec<&str>> = HashMap::new();
        for r in &self.rows {
            present.entry(&r.instance).or_default().push(&r.operator);
        }
        let complete = |inst: &str| ops.iter().all(|op| present[inst].contains(op));
        Self {
            rows: self.rows.iter().filter(|r| complete(&r.instance)).cloned().collect(),
        }
    }
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for it in items {
        if !out.contains(&it) {
            out.push(it);
        }
    }
    out
}

/// Runs one trial: the (1+1) EA with `budget` evaluations, stopping early
/// at the instance's known optimum.
pub fn run_trial(
    instance: &Instance,
    operator: &MutationOperator,
    budget: u64,
    seed: u64,
    deadline: Option<Instant>,
) -> RunRecord {
    let mut stop = StopCondition::budget(budget);
    if let Some(opt) = instance.optimum {
        stop = stop.with_target(opt);
    }
    if let Some(d) = deadline {
        stop = stop.with_deadline(d);
    }
    run_opo_ea(instance.fitness.as_ref(), operator, &stop, seed, None).expect("operator built for this instance")
}

/// Runs one trial per seed on the worker pool (sequentially without the
/// `parallel` feature). Records come back in seed order.
pub fn run_batch(instance: &Instance, operator: &MutationOperator, budget: u64, seeds: &[u64]) -> Vec<RunRecord> {
    parallel::map_slice(seeds, |&s| run_trial(instance, operator, budget, s, None))
}

/// [`run_batch`] on the calling thread only.
pub fn run_batch_sequential(
    instance: &Instance,
    operator: &MutationOperator,
    budget: u64,
    seeds: &[u64],
) -> Vec<RunRecord> {
    parallel::map_slice_sequential(seeds, |&s| run_trial(instance, operator, budget, s, None))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutcome {
    pub table: ResultTable,
    /// (instance, operator) pairs dropped for exceeding the wall-clock cap.
    pub incomplete: Vec<(String, String)>,
    /// Instances that failed to load, with the reason.
    pub failed: Vec<(String, String)>,
}

/// Runs every trial of the experiment.
///
/// Pairs are processed in (instance, operator) order and the runs of a pair
/// in parallel; rows are appended to the output CSV (if configured) as each
/// pair finishes, always in (instance, operator, run, checkpoint) order.
/// The trial seed is derived from the master seed and the (instance,
/// operator, run) indices.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, BenchError> {
    config.validate()?;
    let mut writer = match &config.output {
        Some(path) => {
            let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
            w.write_record(RESULT_HEADER)?;
            w.flush()?;
            Some(w)
        }
        None => None,
    };
    let cap = config.max_wall_seconds.map(Duration::from_secs_f64);
    let mut outcome = ExperimentOutcome::default();

    parallel::with_threads(config.threads, || -> Result<(), BenchError> {
        for (ii, spec) in config.instances.iter().enumerate() {
            let instance = match spec.load() {
                Ok(inst) => inst,
                Err(e) => {
                    log::error!("skipping instance {spec}: {e}");
                    outcome.failed.push((spec.to_string(), e.to_string()));
                    continue;
                }
            };
            let n = instance.ground_size();
            for (oi, op_spec) in config.operators.iter().enumerate() {
                let operator = match MutationOperator::new(*op_spec, n) {
                    Ok(op) => op,
                    Err(e) => {
                        log::error!("skipping {op_spec} on {spec}: {e}");
                        outcome.incomplete.push((instance.label.clone(), op_spec.to_string()));
                        continue;
                    }
                };
                let deadline = cap.map(|c| Instant::now() + c);
                let trials: Vec<(RunRecord, f64)> = parallel::map_range(0..config.repetitions, |run| {
                    let seed = derive_seed(config.master_seed, &[ii as u64, oi as u64, run as u64]);
                    let start = Instant::now();
                    let rec = run_trial(&instance, &operator, config.budget, seed, deadline);
                    (rec, start.elapsed().as_secs_f64() * 1e3)
                });
                if trials.iter().any(|(r, _)| r.timed_out) {
                    log::warn!(
                        "{} / {op_spec}: wall-clock cap exceeded, pair marked incomplete",
                        instance.label
                    );
                    outcome.incomplete.push((instance.label.clone(), op_spec.to_string()));
                    continue;
                }
                let first = outcome.table.rows.len();
                for (run_id, (rec, wall_ms)) in trials.iter().enumerate() {
                    for &checkpoint in &config.checkpoints {
                        outcome.table.rows.push(ResultRow {
                            instance: instance.label.clone(),
                            operator: op_spec.to_string(),
                            run_id,
                            seed: rec.seed,
                            checkpoint,
                            best_fitness: rec.best_at(checkpoint),
                            wall_ms: *wall_ms,
                        });
                    }
                }
                if let Some(w) = writer.as_mut() {
                    for r in &outcome.table.rows[first..] {
                        write_row(w, r)?;
                    }
                    w.flush()?;
                }
                log::info!("{} / {op_spec}: {} runs done", instance.label, config.repetitions);
            }
        }
        Ok(())
    })?;
    Ok(outcome)
}

/// Mean best fitness per (instance, operator) at one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMeans {
    /// In order of first appearance.
    pub instances: Vec<String>,
    pub operators: Vec<String>,
    /// `means[instance][operator]`.
    pub means: Vec<Vec<f64>>,
}

/// Averages the runs of every (instance, operator) cell. Fails if any cell
/// is empty.
pub fn cell_means(results: &ResultTable, checkpoint: u64) -> Result<CellMeans, BenchError> {
    let rows: Vec<&ResultRow> = results.rows.iter().filter(|r| r.checkpoint == checkpoint).collect();
    if rows.is_empty() {
        return Err(BenchError::NoResults(checkpoint));
    }
    let instances = first_seen(rows.iter().map(|r| r.instance.as_str()));
    let operators = first_seen(rows.iter().map(|r| r.operator.as_str()));
    let mut sums = vec![vec![(0.0, 0usize); operators.len()]; instances.len()];
    for r in &rows {
        let i = instances.iter().position(|&x| x == r.instance).unwrap();
        let o = operators.iter().position(|&x| x == r.operator).unwrap();
        sums[i][o].0 += r.best_fitness;
        sums[i][o].1 += 1;
    }
    let mut missing = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        for (o, op) in operators.iter().enumerate() {
            if sums[i][o].1 == 0 {
                missing.push(format!("({inst}, {op})"));
            }
        }
    }
    if !missing.is_empty() {
        return Err(BenchError::MissingCells {
            checkpoint,
            cells: missing.join(", "),
        });
    }
    let means = sums
        .iter()
        .map(|row| row.iter().map(|&(s, c)| s / c as f64).collect())
        .collect();
    Ok(CellMeans {
        instances: instances.into_iter().map(String::from).collect(),
        operators: operators.into_iter().map(String::from).collect(),
        means,
    })
}

/// Ranks with 1 for the largest value; ties share the mean of their ranks.
pub fn rank_descending(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub checkpoint: u64,
    pub operators: Vec<String>,
    pub average_ranks: Vec<f64>,
    pub instance_count: usize,
}

impl RankTable {
    pub fn operator_count(&self) -> usize {
        self.operators.len()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["operator".to_string(), format!("avg_rank_at_{}", self.checkpoint)])?;
        for (op, r) in self.operators.iter().zip(&self.average_ranks) {
            w.write_record([op.clone(), format!("{r:.4}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per instance, ranks operators by mean best fitness (rank 1 = best) and
/// averages the ranks across instances.
pub fn average_ranks(results: &ResultTable, checkpoint: u64) -> Result<RankTable, BenchError> {
    let CellMeans {
        instances,
        operators,
        means,
    } = cell_means(results, checkpoint)?;
    let mut totals = vec![0.0; operators.len()];
    for row in &means {
        for (t, r) in totals.iter_mut().zip(rank_descending(row)) {
            *t += r;
        }
    }
    let n = instances.len() as f64;
    Ok(RankTable {
        checkpoint,
        operators,
        average_ranks: totals.into_iter().map(|t| t / n).collect(),
        instance_count: instances.len(),
    })
}

/// Studentized-range quantiles divided by √2, for k = 2..=10.
const NEMENYI_Q_05: [f64; 9] = [1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164];
const NEMENYI_Q_10: [f64; 9] = [1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920];

/// Nemenyi critical distance `q_α,k · √(k(k+1) / 6N)`.
pub fn nemenyi_cd(k: usize, n: usize, alpha: f64) -> Result<f64, BenchError> {
    let table = if (alpha - 0.05).abs() < 1e-12 {
        &NEMENYI_Q_05
    } else if (alpha - 0.10).abs() < 1e-12 {
        &NEMENYI_Q_10
    } else {
        return Err(BenchError::UnsupportedNemenyi { k, n, alpha });
    };
    if !(2..=10).contains(&k) || n < 2 {
        return Err(BenchError::UnsupportedNemenyi { k, n, alpha });
    }
    let (k, n) = (k as f64, n as f64);
    Ok(table[k as usize - 2] * (k * (k + 1.0) / (6.0 * n)).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapSummary {
    pub checkpoint: u64,
    /// Percent gap between the best and worst operator mean, per instance.
    pub per_instance: Vec<(String, f64)>,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl GapSummary {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["instance".to_string(), format!("gap_percent_at_{}", self.checkpoint)])?;
        for (inst, g) in &self.per_instance {
            w.write_record([inst.clone(), format!("{g:.4}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Gap `100·(best − worst)/best` between operator means, per instance;
/// zero when the best mean is zero.
pub fn gap_summary(results: &ResultTable, checkpoint: u64) -> Result<GapSummary, BenchError> {
    let CellMeans { instances, means, .. } = cell_means(results, checkpoint)?;
    let per_instance: Vec<(String, f64)> = instances
        .into_iter()
        .zip(&means)
        .map(|(inst, row)| {
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let worst = row.iter().copied().fold(f64::INFINITY, f64::min);
            let gap = if best == 0.0 {
                0.0
            } else {
                100.0 * (best - worst) / best
            };
            (inst, gap)
        })
        .collect();
    let gaps = per_instance.iter().map(|(_, g)| *g);
    Ok(GapSummary {
        checkpoint,
        min: gaps.clone().fold(f64::INFINITY, f64::min),
        mean: gaps.clone().sum::<f64>() / per_instance.len() as f64,
        max: gaps.fold(f64::NEG_INFINITY, f64::max),
        per_instance,
    })
}
