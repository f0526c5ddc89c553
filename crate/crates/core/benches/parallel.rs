//! Sequential vs data-parallel throughput of the hot paths.
//!
//! With the default `parallel` feature each workload runs inside a 1-thread
//! rayon pool ("sequential") and the global pool ("parallel"). Build with
//! `--no-default-features` to measure the plain sequential code path instead.

use std::hint::black_box;

use chrono::NaiveDate;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use solar_relocate::forecast::{self, ExperimentConfig, ModelSource};
use solar_relocate::mlp::Network;
use solar_relocate::*;

struct Fixture {
    series: IrradiationSeries,
    model: MlpModel,
    measured: Vec<f64>,
    predicted: Vec<f64>,
}

fn fixture() -> Fixture {
    let site = SiteConfig::ajaccio();
    let cloud = CloudParams {
        phi: 0.9,
        sigma: 0.1,
        mean_attenuation: 0.7,
    };
    let series = synth::generate(&site, NaiveDate::from_ymd_opt(2001, 1, 1).unwrap(), 2, cloud, 1).unwrap();
    let model = MlpModel {
        network: Network::init(3),
        hidden_activation: mlp::HiddenActivation::Tanh,
        output_activation: mlp::OutputActivation::Linear,
        norm: NormStats::new(0.0, 1.2).unwrap(),
        training_site: "elsewhere".into(),
        step: Step::Hourly,
        train_config: None,
    };
    let measured: Vec<f64> = series.values().iter().flatten().copied().filter(|v| *v > 0.0).collect();
    let predicted = measured.iter().enumerate().map(|(i, v)| v * (1.0 + 0.1 * ((i % 7) as f64 - 3.0) / 3.0)).collect();
    Fixture {
        series,
        model,
        measured,
        predicted,
    }
}

type Workload = (&'static str, fn(&Fixture));

const WORKLOADS: [Workload; 4] = [
    ("detrend_hourly", |f| {
        black_box(stationarize::detrend(&f.series).unwrap());
    }),
    ("evaluate_windows", |f| {
        let runs = forecast::run_experiment(
            Some(ModelSource::TrainedElsewhere(&f.model)),
            &f.series,
            &ExperimentConfig::default(),
        )
        .unwrap();
        black_box(runs);
    }),
    ("bootstrap_ci95", |f| {
        black_box(metrics::nrmse_ci95(&f.measured, &f.predicted, 0).unwrap());
    }),
    ("synth_year", |f| {
        let cloud = CloudParams {
            phi: 0.9,
            sigma: 0.1,
            mean_attenuation: 0.7,
        };
        black_box(synth::generate(&f.series.site, NaiveDate::from_ymd_opt(2001, 1, 1).unwrap(), 1, cloud, 2).unwrap());
    }),
];

#[cfg(feature = "parallel")]
fn bench(c: &mut Criterion) {
    let f = fixture();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    for (name, work) in WORKLOADS {
        let mut g = c.benchmark_group(name);
        g.sample_size(10);
        g.bench_function(BenchmarkId::new("sequential", 1), |b| b.iter(|| single.install(|| work(&f))));
        g.bench_function(BenchmarkId::new("parallel", rayon::current_num_threads()), |b| {
            b.iter(|| work(&f))
        });
        g.finish();
    }
}

#[cfg(not(feature = "parallel"))]
fn bench(c: &mut Criterion) {
    let f = fixture();
    for (name, work) in WORKLOADS {
        let mut g = c.benchmark_group(name);
        g.sample_size(10);
        g.bench_function(BenchmarkId::new("sequential", "no-rayon"), |b| b.iter(|| work(&f)));
        g.finish();
    }
}

criterion_group!(benches, bench);
criterion_main!(benches);
