//! Declarative experiment runner: run specs in, result bundles out.

pub mod bundle;
pub mod experiments;
pub mod runspec;

use std::path::Path;

use bundle::{write_bundle, ResultBundle};
use runspec::RunSpec;

/// Run one experiment and write its bundle (and series) under `dir`.
pub fn run_and_write(spec: &RunSpec, dir: &Path) -> std::io::Result<ResultBundle> {
    let start = std::time::Instant::now();
    let (output, error) = experiments::run_experiment(spec);
    write_bundle(dir, spec, &output, error, start.elapsed().as_secs_f64())
}

/// Run every experiment's embedded default spec, one output directory per
/// experiment, optionally in parallel.
pub fn run_suite(out_dir: &Path, threads: usize) -> std::io::Result<Vec<ResultBundle>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool");
    let specs: Vec<RunSpec> = runspec::Experiment::all()
        .iter()
        .map(|&e| runspec::default_spec(e))
        .collect();
    pool.install(|| {
        specs
            .par_iter()
            .map(|spec| run_and_write(spec, &out_dir.join(spec.experiment.name())))
            .collect()
    })
}
