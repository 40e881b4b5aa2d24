//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails the
//! target if any criterion fails.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use heavytail::bench::{
    average_ranks, cell_means, gap_summary, nemenyi_cd, run_experiment, CellMeans, ExperimentConfig, ResultRow,
    ResultTable,
};
use heavytail::ea::{run_opo_ea, run_opo_ea_observed, RunRecord, StopCondition};
use heavytail::graph_io::{generate, write_edge_list, DirectedGraph};
use heavytail::landscapes::{Jump, JumpParams, OneMax};
use heavytail::matroid::{ConstrainedFitness, UniformMatroid};
use heavytail::mutation::{harmonic, FlipBuffer, MutationOperator, OperatorSpec};
use heavytail::mutual_info::{
    mutual_information, random_covariance, CovarianceMatrix, MiFitness, MiVariant, DEFAULT_JITTER,
};
use heavytail::parallel::map_range;
use heavytail::rng::{derive_seed, trial_rng};
use heavytail::set_function::SetFunction;
use heavytail::submodular::{
    brute_force_max, is_local_optimum, is_submodular, random_subset_mean, CoverageFunction, CutFunction,
};
use heavytail::BitString;

const MASTER_SEED: u64 = 0x00c0_ffee;

type Outcome = Result<String, String>;

fn op(spec: &str, n: usize) -> MutationOperator {
    MutationOperator::new(spec.parse().unwrap(), n).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn median(mut xs: Vec<u64>) -> f64 {
    xs.sort_unstable();
    let m = xs.len() / 2;
    if xs.len().is_multiple_of(2) {
        (xs[m - 1] + xs[m]) as f64 / 2.0
    } else {
        xs[m] as f64
    }
}

/// Chi-square statistic and degrees of freedom, merging adjacent bins until
/// each expected count is at least 5.
fn chi_square(observed: &[u64], expected: &[f64]) -> (f64, usize) {
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        acc.0 += o as f64;
        acc.1 += e;
        if acc.1 >= 5.0 {
            groups.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match groups.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => groups.push(acc),
        }
    }
    let stat = groups.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    (stat, groups.len() - 1)
}

fn criterion_1() -> Outcome {
    let n = 64;
    let draws = 1_000_000u64;
    let start = Instant::now();
    let mut details = Vec::new();
    let mut ok = true;
    for (i, beta) in [1.5, 2.5, 3.5].into_iter().enumerate() {
        let pmut = MutationOperator::new(OperatorSpec::Pmut { beta }, n).unwrap();
        let mut rng = trial_rng(derive_seed(MASTER_SEED, &[1, i as u64]));
        let mut buf = FlipBuffer::new(n);
        let mut counts = vec![0u64; n];
        for _ in 0..draws {
            pmut.sample_flips(&mut buf, &mut rng);
            counts[buf.flips().len() - 1] += 1;
        }
        // Expected counts from the closed form, independent of the sampler's table.
        let h = harmonic(n, beta).unwrap();
        let expected: Vec<f64> = (1..=n).map(|k| draws as f64 * (k as f64).powf(-beta) / h).collect();
        let (stat, df) = chi_square(&counts, &expected);
        let p = 1.0 - ChiSquared::new(df as f64).unwrap().cdf(stat);
        ok &= p > 0.001;
        details.push(format!("beta={beta}: chi2={stat:.1} df={df} p={p:.3}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    details.push(format!("{secs:.1}s"));
    check(ok, details.join("; "))
}

fn criterion_2() -> Outcome {
    let sizes = [64usize, 128, 256];
    let mut medians = Vec::new();
    let mut details = Vec::new();
    let mut ok = true;
    for (si, &n) in sizes.iter().enumerate() {
        let budget = (100.0 * n as f64 * (n as f64).ln()) as u64;
        let f = OneMax::new(n);
        let pmut = op("pmut:1.5", n);
        let stop = StopCondition::budget(budget).with_target(n as f64);
        let runs: Vec<RunRecord> = map_range(0..100, |r| {
            run_opo_ea(
                &f,
                &pmut,
                &stop,
                derive_seed(MASTER_SEED, &[2, si as u64, r as u64]),
                None,
            )
            .unwrap()
        });
        let solved: Vec<u64> = runs
            .iter()
            .filter(|r| r.reached_target)
            .map(|r| r.evaluations_used)
            .collect();
        ok &= solved.len() >= 95;
        let med = median(runs.iter().map(|r| r.evaluations_used).collect());
        details.push(format!("n={n}: {}/100 solved, median {med}", solved.len()));
        medians.push(med);
    }
    for i in 1..sizes.len() {
        let (a, b) = (sizes[i - 1] as f64, sizes[i] as f64);
        let allowed = 1.3 * (b * b.ln()) / (a * a.ln());
        let growth = medians[i] / medians[i - 1];
        ok &= growth <= allowed;
        details.push(format!("growth {growth:.2} <= {allowed:.2}"));
    }
    check(ok, details.join("; "))
}

fn jump_success(spec: &str, tag: u64) -> usize {
    let (n, m) = (20, 6);
    let f = Jump::new(JumpParams::new(m, n).unwrap());
    let o = op(spec, n);
    let stop = StopCondition::budget(5_000_000).with_target((n + m) as f64);
    map_range(0..20, |r| {
        run_opo_ea(&f, &o, &stop, derive_seed(MASTER_SEED, &[3, tag, r as u64]), None)
            .unwrap()
            .reached_target
    })
    .into_iter()
    .filter(|&s| s)
    .count()
}

fn criterion_3() -> Outcome {
    let pmut = jump_success("pmut:1.5", 0);
    let unif = jump_success("unif1", 1);
    check(
        pmut * 100 >= 80 * 20 && unif * 100 <= 30 * 20,
        format!("pmut:1.5 {pmut}/20 (need >= 80%), unif1 {unif}/20 (need <= 30%)"),
    )
}

fn criterion_4() -> Outcome {
    let (n, eps) = (12usize, 0.5);
    let ratio = 1.0 / 3.0 - eps / n as f64;
    let results: Vec<(f64, f64)> = map_range(0..50, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER_SEED, &[4, i as u64]));
        let f = CutFunction::new(Arc::new(generate::gnp_directed(n, 0.3, &mut rng)));
        let (_, opt) = brute_force_max(&f, None).unwrap();
        let rec = run_opo_ea(
            &f,
            &op("pmut:1.5", n),
            &StopCondition::budget(100_000),
            rng.next_seed(),
            None,
        )
        .unwrap();
        (rec.final_fitness, opt)
    });
    let good = results.iter().filter(|(v, opt)| *v >= ratio * opt).count();
    let worst = results
        .iter()
        .map(|(v, opt)| if *opt > 0.0 { v / opt } else { 1.0 })
        .fold(f64::INFINITY, f64::min);
    check(
        good == 50,
        format!("{good}/50 runs reach {ratio:.4}*OPT; worst ratio {worst:.3}"),
    )
}

trait NextSeed {
    fn next_seed(&mut self) -> u64;
}

impl NextSeed for ChaCha8Rng {
    fn next_seed(&mut self) -> u64 {
        rand::Rng::random(self)
    }
}

/// Random non-negative submodular functions on n <= 10 elements: directed
/// cuts and weighted coverage functions.
fn submodular_family() -> Vec<Box<dyn SetFunction>> {
    (0..20)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER_SEED, &[5, i as u64]));
            let n = 6 + i % 5;
            let f: Box<dyn SetFunction> = if i % 2 == 0 {
                Box::new(CutFunction::new(Arc::new(generate::gnp_directed(n, 0.3, &mut rng))))
            } else {
                Box::new(CoverageFunction::random(n, 15, 0.25, &mut rng))
            };
            f
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let eps = 0.5;
    let mut optima = 0;
    let mut violations = 0;
    for f in submodular_family() {
        let n = f.ground_size();
        assert!(is_submodular(f.as_ref()).unwrap());
        let (_, opt) = brute_force_max(f.as_ref(), None).unwrap();
        let alpha = eps / (n * n) as f64;
        let bound = (1.0 / 3.0 - eps / n as f64) * opt;
        for mask in 0..1u64 << n {
            let s = BitString::from_mask(mask, n);
            if is_local_optimum(f.as_ref(), &s, alpha) {
                optima += 1;
                if f.value(&s).max(f.value(&s.complement())) < bound - 1e-9 {
                    violations += 1;
                }
            }
        }
    }
    check(
        violations == 0,
        format!("{optima} local optima over 20 instances, {violations} violations"),
    )
}

fn criterion_6() -> Outcome {
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for f in submodular_family() {
        let (_, opt) = brute_force_max(f.as_ref(), None).unwrap();
        let mean = random_subset_mean(f.as_ref()).unwrap();
        if mean < opt / 4.0 - 1e-9 {
            violations += 1;
        }
        if opt > 0.0 {
            tightest = tightest.min(mean / opt);
        }
    }
    check(
        violations == 0,
        format!("{violations} violations; smallest E[f(R)]/OPT = {tightest:.3}"),
    )
}

fn criterion_7() -> Outcome {
    let (n, k, eps) = (12usize, 4usize, 0.5);
    let ratio = 1.0 / 3.0 - eps / n as f64;
    let uniform = UniformMatroid::new(n, k);
    let results: Vec<(bool, bool, bool)> = map_range(0..30, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER_SEED, &[7, i as u64]));
        let cut = CutFunction::new(Arc::new(generate::gnp_undirected(n, 0.3, &mut rng)));
        let independent = |s: &BitString| s.count_ones() <= k;
        let (_, opt) = brute_force_max(&cut, Some(&independent)).unwrap();
        let z = ConstrainedFitness::new(&cut, uniform);
        // z is non-negative exactly on independent sets.
        let mut became_feasible = false;
        let mut relapsed = false;
        let rec = run_opo_ea_observed(
            &z,
            &op("pmut:1.5", n),
            &StopCondition::budget(1_000_000),
            rng.next_seed(),
            None,
            |_, v| {
                if v >= 0.0 {
                    became_feasible = true;
                } else if became_feasible {
                    relapsed = true;
                }
            },
        )
        .unwrap();
        let feasible = independent(&rec.final_solution);
        (
            feasible,
            feasible && cut.value(&rec.final_solution) >= ratio * opt,
            relapsed,
        )
    });
    let feasible = results.iter().filter(|r| r.0).count();
    let good = results.iter().filter(|r| r.1).count();
    let relapses = results.iter().filter(|r| r.2).count();
    check(
        feasible == 30 && good * 100 >= 95 * 30 && relapses == 0,
        format!("feasible {feasible}/30, bound met {good}/30 (need >= 95%), relapses {relapses}"),
    )
}

fn criterion_8() -> Outcome {
    let n = 8;
    let mut worst_asym: f64 = 0.0;
    let mut min_mi = f64::INFINITY;
    let mut submodular = 0;
    for i in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER_SEED, &[8, i]));
        let f = MiFitness::new(random_covariance(n, &mut rng), n, MiVariant::LogForm, 0.0).unwrap();
        for mask in 0..1u64 << n {
            let s = BitString::from_mask(mask, n);
            let v = f.value(&s);
            min_mi = min_mi.min(v);
            worst_asym = worst_asym.max((v - f.value(&s.complement())).abs());
        }
        if is_submodular(&f).unwrap() {
            submodular += 1;
        }
    }
    let pair = CovarianceMatrix::new(vec![vec![1.0, 0.6], vec![0.6, 1.0]]).unwrap();
    let mi = mutual_information(
        &pair,
        &BitString::from_indices(2, [0]),
        MiVariant::LogForm,
        DEFAULT_JITTER,
    )
    .unwrap();
    let analytic = -0.5 * (1.0f64 - 0.36).ln();
    check(
        worst_asym <= 1e-9 && min_mi >= 0.0 && submodular == 20 && (mi - 0.223144).abs() <= 1e-6 && (analytic - 0.223144).abs() <= 1e-6,
        format!("max |MI(S)-MI(V\\S)| = {worst_asym:.2e}, min MI = {min_mi:.2e}, submodular {submodular}/20, r=0.6 gives {mi:.6}"),
    )
}

fn fixture(cells: &[(&str, &str, &[f64])]) -> ResultTable {
    ResultTable {
        rows: cells
            .iter()
            .flat_map(|(inst, op, vals)| {
                vals.iter().enumerate().map(move |(r, &v)| ResultRow {
                    instance: inst.to_string(),
                    operator: op.to_string(),
                    run_id: r,
                    seed: 0,
                    checkpoint: 10,
                    best_fitness: v,
                    wall_ms: 0.0,
                })
            })
            .collect(),
    }
}

fn statistics_fixtures() -> Result<(), String> {
    // Means: I1 = (12, 9, 9, 4), I2 = (5, 6, 7, 5), I3 = (1, 1, 1, 1).
    // Ranks: I1 = (1, 2.5, 2.5, 4), I2 = (3.5, 2, 1, 3.5), I3 = 2.5 each.
    let t = fixture(&[
        ("I1", "a", &[10.0, 14.0]),
        ("I1", "b", &[9.0, 9.0]),
        ("I1", "c", &[8.0, 10.0]),
        ("I1", "d", &[4.0, 4.0]),
        ("I2", "a", &[5.0, 5.0]),
        ("I2", "b", &[6.0, 6.0]),
        ("I2", "c", &[7.0, 7.0]),
        ("I2", "d", &[4.0, 6.0]),
        ("I3", "a", &[1.0, 1.0]),
        ("I3", "b", &[1.0, 1.0]),
        ("I3", "c", &[1.0, 1.0]),
        ("I3", "d", &[1.0, 1.0]),
    ]);
    let r = average_ranks(&t, 10).map_err(|e| e.to_string())?;
    let expected = [7.0 / 3.0, 7.0 / 3.0, 2.0, 10.0 / 3.0];
    if r.average_ranks != expected {
        return Err(format!("ranks {:?} != {expected:?}", r.average_ranks));
    }
    // Gaps: I1 = 100*(12-4)/12, I2 = 100*(7-5)/7, I3 = 0.
    let g = gap_summary(&t, 10).map_err(|e| e.to_string())?;
    let (g1, g2) = (100.0 * 8.0 / 12.0, 100.0 * 2.0 / 7.0);
    let want = (0.0, (g1 + g2) / 3.0, g1);
    if (g.min, g.mean, g.max) != want {
        return Err(format!("gaps {:?} != {want:?}", (g.min, g.mean, g.max)));
    }
    let g = gap_summary(
        &fixture(&[
            ("A", "x", &[100.0]),
            ("A", "y", &[95.0]),
            ("B", "x", &[40.0]),
            ("B", "y", &[34.0]),
        ]),
        10,
    )
    .map_err(|e| e.to_string())?;
    if (g.min, g.mean, g.max) != (5.0, 10.0, 15.0) {
        return Err(format!("gaps {:?} != (5, 10, 15)", (g.min, g.mean, g.max)));
    }
    Ok(())
}

fn write_graph(dir: &Path, name: &str, g: &DirectedGraph) -> String {
    let path = dir.join(name);
    write_edge_list(g, BufWriter::new(File::create(&path).unwrap())).unwrap();
    format!("dicut:{}", path.display())
}

const OPERATORS: [&str; 7] = [
    "pmut:1.5", "pmut:2.5", "pmut:3.5", "fmut:1.5", "fmut:2.5", "fmut:3.5", "unif1",
];

fn graph_experiment(dir: &Path) -> ExperimentConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER_SEED, &[9]));
    let graphs = [
        ("pa_2000.txt", generate::preferential_attachment(2000, 5, &mut rng)),
        ("gnp_1000.txt", generate::gnp_directed(1000, 0.01, &mut rng)),
        ("pa_5000.txt", generate::preferential_attachment(5000, 10, &mut rng)),
    ];
    let mut text = String::new();
    for (name, g) in &graphs {
        assert!(g.arc_count() <= 100_000);
        text += &format!("instance = {}\n", write_graph(dir, name, g));
    }
    for o in OPERATORS {
        text += &format!("operator = {o}\n");
    }
    text += &format!("repetitions = 10\nbudget = 100000\ncheckpoints = 10000, 100000\nmaster_seed = {MASTER_SEED}\n");
    ExperimentConfig::parse(&text).unwrap()
}

fn criterion_9(dir: &Path) -> (Outcome, Option<ResultTable>) {
    if let Err(e) = statistics_fixtures() {
        return (Err(e), None);
    }
    let cd = nemenyi_cd(7, 67, 0.05).unwrap();
    if (cd - 1.1006).abs() > 0.001 {
        return (Err(format!("nemenyi_cd(7, 67, 0.05) = {cd}")), None);
    }
    let outcome = run_experiment(&graph_experiment(dir)).unwrap();
    let table = outcome.table;
    let complete = table.rows.len() == 3 * 7 * 10 * 2 && outcome.incomplete.is_empty() && outcome.failed.is_empty();
    let CellMeans {
        instances,
        operators,
        means,
    } = cell_means(&table, 100_000).unwrap();
    let p35 = operators.iter().position(|o| o == "pmut:3.5").unwrap();
    let mut details = vec![format!("fixtures exact, CD = {cd:.4}, {} rows", table.rows.len())];
    let mut within = true;
    for (inst, row) in instances.iter().zip(&means) {
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shortfall = 100.0 * (best - row[p35]) / best;
        within &= shortfall <= 2.0;
        let name = Path::new(inst).file_name().unwrap().to_string_lossy().into_owned();
        details.push(format!("{name}: pmut:3.5 {shortfall:.2}% below best"));
    }
    (check(complete && within, details.join("; ")), Some(table))
}

fn fitness_column(t: &ResultTable) -> Vec<(u64, u64, f64)> {
    t.rows.iter().map(|r| (r.seed, r.checkpoint, r.best_fitness)).collect()
}

fn criterion_10(dir: &Path, first: Option<&ResultTable>) -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    if let Some(first) = first {
        let again = run_experiment(&graph_experiment(dir)).unwrap().table;
        let same = fitness_column(first) == fitness_column(&again);
        ok &= same;
        details.push(format!("graph experiment rerun identical: {same}"));
    }
    let rerun = |tag: u64| -> Vec<RunRecord> {
        let f = Jump::new(JumpParams::new(4, 30).unwrap());
        map_range(0..8, |r| {
            run_opo_ea(
                &f,
                &op("fmut:1.5", 30),
                &StopCondition::budget(20_000),
                derive_seed(MASTER_SEED, &[10, tag, r as u64]),
                None,
            )
            .unwrap()
        })
    };
    let same = rerun(0) == rerun(0);
    ok &= same;
    details.push(format!("jump trials rerun identical: {same}"));
    let first = criterion_4();
    let second = criterion_4();
    let same = first == second;
    ok &= same;
    details.push(format!("criterion 4 rerun identical: {same}"));
    check(ok, details.join("; "))
}

fn main() {
    // Respect `cargo test -- <filter>` style invocations that target other tests.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }

    let dir = tempfile::tempdir().unwrap();
    let mut failures = 0;
    let mut report = |id: usize, name: &str, started: Instant, outcome: Outcome| {
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS criterion {id} ({name}): {d} [{secs:.1}s]"),
            Err(d) => {
                failures += 1;
                println!("FAIL criterion {id} ({name}): {d} [{secs:.1}s]");
            }
        }
    };

    let t = Instant::now();
    report(1, "distribution fidelity", t, criterion_1());
    let t = Instant::now();
    report(2, "OneMax solvability", t, criterion_2());
    let t = Instant::now();
    report(3, "Jump separation", t, criterion_3());
    let t = Instant::now();
    report(4, "unconstrained approximation", t, criterion_4());
    let t = Instant::now();
    report(5, "local optimum oracle", t, criterion_5());
    let t = Instant::now();
    report(6, "random subset oracle", t, criterion_6());
    let t = Instant::now();
    report(7, "constrained approximation", t, criterion_7());
    let t = Instant::now();
    report(8, "MI properties", t, criterion_8());
    let t = Instant::now();
    let (outcome, table) = criterion_9(dir.path());
    report(9, "statistics reproduction", t, outcome);
    let t = Instant::now();
    report(10, "determinism", t, criterion_10(dir.path(), table.as_ref()));

    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 10 acceptance criteria passed");
}
