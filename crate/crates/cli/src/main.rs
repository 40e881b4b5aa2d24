use std::error::Error;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use heavytail::bench::{average_ranks, gap_summary, nemenyi_cd, run_experiment, ExperimentConfig, ResultTable};
use heavytail::ea::{run_opo_ea, StopCondition};
use heavytail::instance::{ConstraintSpec, FitnessSpec};
use heavytail::mutation::{FlipBuffer, MutationOperator, OperatorSpec};
use heavytail::rng::trial_rng;
use heavytail::submodular::brute_force_max;
use heavytail::BitString;

type Result<T> = std::result::Result<T, Box<dyn Error>>;

/// Heavy-tailed mutation experiments for the (1+1) EA.
#[derive(Debug, Parser)]
#[command(name = "heavytail", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the (1+1) EA once and print the run summary as CSV.
    Run {
        /// Fitness spec, e.g. `onemax:100` or `dicut:graph.txt`.
        #[arg(long)]
        fitness: FitnessSpec,
        /// Mutation operator spec, e.g. `pmut:1.5` or `unif1`.
        #[arg(long)]
        operator: OperatorSpec,
        /// Maximum number of fitness evaluations.
        #[arg(long)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stop once this fitness is reached (defaults to the known optimum, if any).
        #[arg(long)]
        target: Option<f64>,
        /// Also write the improvement log (`evaluation,fitness`) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full experiment from a config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
    /// Average ranks, best-worst gaps and the Nemenyi critical distance.
    Rank {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        checkpoint: u64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Ignore instances lacking results for some operator.
        #[arg(long)]
        drop_incomplete: bool,
        #[arg(long)]
        ranks_out: Option<PathBuf>,
        #[arg(long)]
        gaps_out: Option<PathBuf>,
    },
    /// Exhaustive optimum of a small instance.
    Oracle {
        #[arg(long)]
        fitness: FitnessSpec,
        /// Matroid constraint, `uniform:<k>` or `partition:<blockfile>`.
        #[arg(long)]
        constraint: Option<ConstraintSpec>,
    },
    /// Histogram of flip counts drawn from an operator.
    Sample {
        #[arg(long)]
        operator: OperatorSpec,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        draws: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("{}: {e}", path.display()).into())
}

fn run(
    fitness: &FitnessSpec,
    operator: OperatorSpec,
    budget: u64,
    seed: u64,
    target: Option<f64>,
    out: Option<&PathBuf>,
) -> Result<()> {
    let instance = fitness.load()?;
    let op = MutationOperator::new(operator, instance.ground_size())?;
    let mut stop = StopCondition::budget(budget);
    if let Some(t) = target.or(instance.optimum) {
        stop = stop.with_target(t);
    }
    let rec = run_opo_ea(instance.fitness.as_ref(), &op, &stop, seed, None)?;
    if let Some(path) = out {
        let mut w = create(path)?;
        writeln!(w, "evaluation,fitness")?;
        for imp in &rec.improvements {
            writeln!(w, "{},{}", imp.evaluation, imp.fitness)?;
        }
        w.flush()?;
    }
    let mut stdout = io::stdout().lock();
    writeln!(
        stdout,
        "fitness,operator,seed,evaluations,final_fitness,reached_target,solution"
    )?;
    writeln!(
        stdout,
        "{},{},{},{},{},{},{}",
        instance.label,
        operator,
        rec.seed,
        rec.evaluations_used,
        rec.final_fitness,
        rec.reached_target,
        rec.final_solution
    )?;
    Ok(())
}

fn bench(config: &PathBuf) -> Result<()> {
    let config = ExperimentConfig::from_file(config)?;
    let outcome = run_experiment(&config)?;
    if config.output.is_none() {
        outcome.table.write_csv(io::stdout().lock())?;
    }
    for (inst, reason) in &outcome.failed {
        eprintln!("failed instance: {inst}: {reason}");
    }
    for (inst, op) in &outcome.incomplete {
        eprintln!("incomplete pair: {inst} / {op}");
    }
    eprintln!("{} result rows", outcome.table.rows.len());
    Ok(())
}

fn rank(
    results: &PathBuf,
    checkpoint: u64,
    alpha: f64,
    drop_incomplete: bool,
    ranks_out: Option<&PathBuf>,
    gaps_out: Option<&PathBuf>,
) -> Result<()> {
    let mut table = ResultTable::read_csv_file(results).map_err(|e| format!("{}: {e}", results.display()))?;
    if drop_incomplete {
        table = table.complete_instances();
    }
    let ranks = average_ranks(&table, checkpoint)?;
    let gaps = gap_summary(&table, checkpoint)?;
    let cd = nemenyi_cd(ranks.operator_count(), ranks.instance_count, alpha)?;
    if let Some(p) = ranks_out {
        ranks.write_csv(create(p)?)?;
    }
    if let Some(p) = gaps_out {
        gaps.write_csv(create(p)?)?;
    }
    let mut stdout = io::stdout().lock();
    ranks.write_csv(&mut stdout)?;
    writeln!(stdout)?;
    gaps.write_csv(&mut stdout)?;
    writeln!(stdout)?;
    writeln!(stdout, "statistic,value")?;
    writeln!(stdout, "instances,{}", ranks.instance_count)?;
    writeln!(stdout, "operators,{}", ranks.operator_count())?;
    writeln!(stdout, "gap_min,{:.4}", gaps.min)?;
    writeln!(stdout, "gap_mean,{:.4}", gaps.mean)?;
    writeln!(stdout, "gap_max,{:.4}", gaps.max)?;
    writeln!(stdout, "critical_distance_{alpha},{cd:.4}")?;
    Ok(())
}

fn oracle(fitness: &FitnessSpec, constraint: Option<&ConstraintSpec>) -> Result<()> {
    let instance = match constraint {
        Some(c) => fitness.load_with_constraint(c)?,
        None => fitness.load()?,
    };
    let feasible = |s: &BitString| instance.is_feasible(s);
    let check: Option<&(dyn Fn(&BitString) -> bool + Sync)> = instance.constraint.as_ref().map(|_| &feasible as _);
    let (best, opt) = brute_force_max(instance.objective.as_ref(), check)?;
    println!("fitness,opt,argmax");
    println!("{},{opt},{best}", instance.label);
    Ok(())
}

fn sample(operator: OperatorSpec, n: usize, draws: u64, seed: u64) -> Result<()> {
    let op = MutationOperator::new(operator, n)?;
    let mut rng = trial_rng(seed);
    let mut buf = FlipBuffer::new(n);
    let mut counts = vec![0u64; n + 1];
    for _ in 0..draws {
        op.sample_flips(&mut buf, &mut rng);
        counts[buf.flips().len()] += 1;
    }
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "flips,count")?;
    for (k, c) in counts.iter().enumerate() {
        writeln!(stdout, "{k},{c}")?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            fitness,
            operator,
            budget,
            seed,
            target,
            out,
        } => run(&fitness, operator, budget, seed, target, out.as_ref()),
        Command::Bench { config } => bench(&config),
        Command::Rank {
            results,
            checkpoint,
            alpha,
            drop_incomplete,
            ranks_out,
            gaps_out,
        } => rank(
            &results,
            checkpoint,
            alpha,
            drop_incomplete,
            ranks_out.as_ref(),
            gaps_out.as_ref(),
        ),
        Command::Oracle { fitness, constraint } => oracle(&fitness, constraint.as_ref()),
        Command::Sample {
            operator,
            n,
            draws,
            seed,
        } => sample(operator, n, draws, seed),
    }
}

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", one_line(first.trim_start_matches("error:")));
            return ExitCode::from(2);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e)
            if e.downcast_ref::<io::Error>()
                .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
