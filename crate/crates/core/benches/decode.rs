use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use l2s::batch::decode_sequential;
use l2s::cslearn::LinearCSModel;
use l2s::dataio::{Sentence, TemplateSpec};
use l2s::search::{Algorithm, TrainerConfig};
use l2s::synth::{markov_corpus, MarkovConfig};
use l2s::tasks::{SequenceTask, SequenceTaskConfig};
use l2s::trainer::train;

fn setup(n: usize) -> (SequenceTask, LinearCSModel, Vec<Sentence>) {
    let (corpus, labels) = markov_corpus(&MarkovConfig {
        num_sentences: n,
        ..MarkovConfig::default()
    })
    .unwrap();
    let config = SequenceTaskConfig {
        templates: TemplateSpec::parse("-1:w,0:w,1:w", "-2w,+2w").unwrap(),
        ..SequenceTaskConfig::default()
    };
    let task = SequenceTask::new(config, labels.clone()).unwrap();
    let mut model = LinearCSModel::new(18, labels.len(), 0.5).unwrap();
    let cfg = TrainerConfig::for_algorithm(Algorithm::Dagger);
    train(&task, &corpus[..200.min(n)], &mut model, &cfg, |_, _| {}).unwrap();
    (task, model, corpus)
}

fn bench_decode(c: &mut Criterion) {
    let mut group = c.benchmark_group("decode");
    for n in [200, 2000] {
        let (task, model, corpus) = setup(n);
        let tokens: usize = corpus.iter().map(Sentence::len).sum();
        group.throughput(Throughput::Elements(tokens as u64));
        group.bench_with_input(BenchmarkId::new("sequential", n), &corpus, |b, corpus| {
            b.iter(|| decode_sequential(&task, black_box(corpus), &model).unwrap())
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", n), &corpus, |b, corpus| {
            b.iter(|| l2s::batch::decode_parallel(&task, black_box(corpus), &model).unwrap())
        });
    }
    group.finish();
}

fn bench_learn(c: &mut Criterion) {
    let (task, _, corpus) = setup(50);
    let mut group = c.benchmark_group("learn_pass");
    for (name, cache, collapse) in [("no_opts", false, None), ("memo", true, None), ("collapse2", true, Some(2))] {
        group.bench_function(name, |b| {
            b.iter(|| {
                let mut model = LinearCSModel::new(18, 5, 0.5).unwrap();
                let cfg = TrainerConfig {
                    cache_enabled: cache,
                    collapse_h: collapse,
                    ..TrainerConfig::for_algorithm(Algorithm::Lols)
                };
                train(&task, black_box(&corpus), &mut model, &cfg, |_, _| {}).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_decode, bench_learn);
criterion_main!(benches);
