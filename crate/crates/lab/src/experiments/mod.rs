//! The experiment drivers. Each one turns a validated RunSpec into metrics,
//! verdicts and plot-ready series; `run_experiment` catches kernel errors
//! into a partial bundle so failure paths still produce output.

use std::sync::Arc;

use hardy_core::grid::{Field, Grid, C64};
use hardy_core::operator::{GeneratorSpec, PotentialSpec};
use hardy_core::propagator::EvolutionParams;
use hardy_core::Error as CoreError;

use crate::bundle::ExperimentOutput;
use crate::runspec::{Experiment, RunSpec};

mod appell_residual;
mod carleman_sweep;
mod free_oracle;
mod hardy_sharp;
mod log_convexity;
mod system_case;
pub mod theorem1_decay;
mod theorem4_heat;
mod theorem51_bound;
mod unitarity;

pub struct Context {
    pub spec: RunSpec,
    pub grid: Arc<Grid>,
    pub fiber_dim: usize,
    pub generator: GeneratorSpec,
    pub generator_projection_distance: f64,
    pub potential: PotentialSpec,
}

#[derive(Debug)]
pub enum RunError {
    Validation(Vec<String>),
    Core(CoreError),
    Other(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Validation(v) => write!(f, "{}", v.join("; ")),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Other(s) => write!(f, "{s}"),
        }
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        RunError::Core(e)
    }
}

pub type RunResult = Result<(), RunError>;

impl Context {
    pub fn new(spec: &RunSpec) -> Result<Context, RunError> {
        crate::runspec::validate(spec).map_err(RunError::Validation)?;
        let g = spec
            .grid
            .as_ref()
            .ok_or_else(|| RunError::Other("missing grid".into()))?;
        let grid = Grid::new(g.dim, g.half_width, g.points)?;
        let (generator, dist) = match &spec.generator {
            Some(block) => block.build(g.fiber_dim).map_err(RunError::Other)?,
            None => (GeneratorSpec::zero(g.fiber_dim), 0.0),
        };
        let potential = match &spec.potential {
            Some(block) => block
                .form()
                .map_err(RunError::Other)?
                .build(g.fiber_dim)
                .map_err(RunError::Core)?,
            None => PotentialSpec::zero(g.fiber_dim),
        };
        Ok(Context {
            spec: spec.clone(),
            grid,
            fiber_dim: g.fiber_dim,
            generator,
            generator_projection_distance: dist,
            potential,
        })
    }

    pub fn evolution_params(&self) -> Result<EvolutionParams, RunError> {
        let e = self
            .spec
            .evolution
            .as_ref()
            .ok_or_else(|| RunError::Other("missing evolution block".into()))?;
        let mut p = EvolutionParams::new(e.a, e.b, e.t_end, e.steps)?;
        if let Some(r) = e.record_every {
            p = p.with_record_every(r)?;
        }
        Ok(p)
    }

    /// Canonical Gaussian data: per-fiber amplitudes over a shared e^{−γ|x|²}
    /// envelope, contained on every grid the defaults use.
    pub fn gaussian_data(&self, gamma: f64) -> Field {
        let m = self.fiber_dim;
        Field::from_fn(self.grid.clone(), m, move |x, fib| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let env = (-gamma * r2).exp();
            for (j, out) in fib.iter_mut().enumerate() {
                let amp = 1.0 / (1.0 + j as f64);
                let phase = 0.3 * j as f64;
                *out = C64::from_polar(amp * env, phase);
            }
        })
    }
}

/// Dispatch a validated spec to its driver, collecting partial output on
/// failure.
pub fn run_experiment(spec: &RunSpec) -> (ExperimentOutput, Option<String>) {
    let mut out = ExperimentOutput::default();
    let result = (|| -> RunResult {
        let ctx = Context::new(spec)?;
        match spec.experiment {
            Experiment::FreeOracle => free_oracle::run(&ctx, &mut out),
            Experiment::Unitarity => unitarity::run(&ctx, &mut out),
            Experiment::LogConvexity => log_convexity::run(&ctx, &mut out),
            Experiment::AppellResidual => appell_residual::run(&ctx, &mut out),
            Experiment::CarlemanSweep => carleman_sweep::run(&ctx, &mut out),
            Experiment::HardySharp => hardy_sharp::run(&ctx, &mut out),
            Experiment::Theorem1Decay => theorem1_decay::run(&ctx, &mut out),
            Experiment::Theorem4Heat => theorem4_heat::run(&ctx, &mut out),
            Experiment::Theorem51Bound => theorem51_bound::run(&ctx, &mut out),
            Experiment::SystemCase => system_case::run(&ctx, &mut out),
        }
    })();
    match result {
        Ok(()) => (out, None),
        Err(e) => {
            out.verdict("completed", false);
            (out, Some(e.to_string()))
        }
    }
}
