use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use heavytail::bench::{run_batch, run_batch_sequential};
use heavytail::graph_io::generate;
use heavytail::instance::Instance;
use heavytail::landscapes::OneMax;
use heavytail::mutation::{MutationOperator, OperatorSpec};
use heavytail::set_function::SetFunction;
use heavytail::submodular::CutFunction;

fn instance(label: &str, f: Arc<dyn SetFunction>, optimum: Option<f64>) -> Instance {
    Instance {
        label: label.into(),
        fitness: f.clone(),
        objective: f,
        constraint: None,
        optimum,
    }
}

fn trial_batches(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let graph = Arc::new(generate::preferential_attachment(2000, 5, &mut rng));
    let cases = [
        (
            instance("onemax:256", Arc::new(OneMax::new(256)), Some(256.0)),
            20_000u64,
        ),
        (instance("pa:2000", Arc::new(CutFunction::new(graph)), None), 20_000u64),
    ];
    let seeds: Vec<u64> = (0..16).collect();
    for (inst, budget) in &cases {
        let op = MutationOperator::new(OperatorSpec::Pmut { beta: 1.5 }, inst.ground_size()).unwrap();
        let mut group = c.benchmark_group(format!("trials/{}", inst.label));
        group.sample_size(10);
        group.bench_with_input(BenchmarkId::new("sequential", seeds.len()), &seeds, |b, s| {
            b.iter(|| black_box(run_batch_sequential(inst, &op, *budget, s)))
        });
        group.bench_with_input(BenchmarkId::new("parallel", seeds.len()), &seeds, |b, s| {
            b.iter(|| black_box(run_batch(inst, &op, *budget, s)))
        });
        group.finish();
    }
}

fn mutation_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_flips");
    for spec in ["pmut:1.5", "fmut:1.5", "unif1", "cmut:0.5"] {
        let op = MutationOperator::new(spec.parse().unwrap(), 1000).unwrap();
        let mut buf = heavytail::mutation::FlipBuffer::new(1000);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        group.bench_function(spec, |b| {
            b.iter(|| {
                op.sample_flips(&mut buf, &mut rng);
                black_box(buf.flips().len())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, trial_batches, mutation_sampling);
criterion_main!(benches);
