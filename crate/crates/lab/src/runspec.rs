//! Declarative run specifications: JSON documents with an exact schema,
//! unknown keys rejected, and per-experiment required blocks. Embedded
//! defaults reproduce every acceptance experiment from a bare checkout.

use serde::{Deserialize, Serialize};

use hardy_core::operator::GeneratorSpec;
use hardy_core::potentials::PotentialForm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    FreeOracle,
    Unitarity,
    LogConvexity,
    AppellResidual,
    CarlemanSweep,
    HardySharp,
    Theorem1Decay,
    Theorem4Heat,
    Theorem51Bound,
    SystemCase,
}

impl Experiment {
    pub fn all() -> &'static [Experiment] {
        use Experiment::*;
        &[
            FreeOracle,
            Unitarity,
            LogConvexity,
            AppellResidual,
            CarlemanSweep,
            HardySharp,
            Theorem1Decay,
            Theorem4Heat,
            Theorem51Bound,
            SystemCase,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::FreeOracle => "free-oracle",
            Experiment::Unitarity => "unitarity",
            Experiment::LogConvexity => "log-convexity",
            Experiment::AppellResidual => "appell-residual",
            Experiment::CarlemanSweep => "carleman-sweep",
            Experiment::HardySharp => "hardy-sharp",
            Experiment::Theorem1Decay => "theorem1-decay",
            Experiment::Theorem4Heat => "theorem4-heat",
            Experiment::Theorem51Bound => "theorem51-bound",
            Experiment::SystemCase => "system-case",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub dim: usize,
    pub half_width: f64,
    pub points: usize,
    pub fiber_dim: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorBlock {
    /// A = 0.
    Zero,
    /// Explicit Hermitian matrix, entries as [re, im] pairs.
    Matrix { entries: Vec<Vec<[f64; 2]>> },
    /// System builder a_mj = g_m 2^{sj}, Hermitized.
    System { g: Vec<f64>, s: f64 },
}

impl GeneratorBlock {
    /// Build the generator; returns the Hermitian projection distance for the
    /// system builder (0 otherwise).
    pub fn build(&self, fiber_dim: usize) -> Result<(GeneratorSpec, f64), String> {
        match self {
            GeneratorBlock::Zero => Ok((GeneratorSpec::zero(fiber_dim), 0.0)),
            GeneratorBlock::Matrix { entries } => {
                if entries.len() != fiber_dim || entries.iter().any(|r| r.len() != fiber_dim) {
                    return Err(format!(
                        "generator.entries must be {fiber_dim}x{fiber_dim} to match grid.fiber_dim"
                    ));
                }
                let m = ndarray::Array2::from_shape_fn((fiber_dim, fiber_dim), |(i, j)| {
                    num_complex::Complex64::new(entries[i][j][0], entries[i][j][1])
                });
                GeneratorSpec::new(m)
                    .map(|g| (g, 0.0))
                    .map_err(|e| format!("generator: {e}"))
            }
            GeneratorBlock::System { g, s } => {
                hardy_core::potentials::build_system_case(g, *s, fiber_dim)
                    .map_err(|e| format!("generator.system: {e}"))
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialBlock {
    pub id: String,
    #[serde(default)]
    pub params: std::collections::BTreeMap<String, f64>,
}

impl PotentialBlock {
    pub fn form(&self) -> Result<PotentialForm, String> {
        let p = |k: &str, d: f64| self.params.get(k).copied().unwrap_or(d);
        let form = match self.id.as_str() {
            "zero" => PotentialForm::Zero,
            "gaussian-well" => PotentialForm::GaussianWell {
                depth: p("depth", 1.0),
                width: p("width", 2.0),
                coupling: p("coupling", 0.3),
            },
            "modulated-gaussian" => PotentialForm::ModulatedGaussian {
                strength: p("strength", 0.3),
                width: p("width", 1.5),
                omega: p("omega", 2.0),
                depth_mod: p("depth_mod", 0.5),
                coupling: p("coupling", 0.2),
            },
            "well-plus-modulated" => PotentialForm::WellPlusModulated {
                depth: p("depth", 0.6),
                well_width: p("well_width", 2.0),
                strength: p("strength", 0.3),
                mod_width: p("mod_width", 1.5),
                omega: p("omega", 2.0),
                depth_mod: p("depth_mod", 0.5),
                coupling: p("coupling", 0.2),
            },
            "integral-kernel" => PotentialForm::IntegralKernel {
                strength: p("strength", 0.4),
                width: p("width", 1.5),
                rate: p("rate", 2.0),
            },
            other => {
                return Err(format!(
                    "potential.id '{other}' not in registry {:?}",
                    PotentialForm::registry_ids()
                ))
            }
        };
        Ok(form)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionBlock {
    pub a: f64,
    pub b: f64,
    pub t_end: f64,
    pub steps: usize,
    #[serde(default)]
    pub record_every: Option<usize>,
    #[serde(default)]
    pub scheme: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsBlock {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarlemanBlock {
    pub mu_c: f64,
    pub epsilon: f64,
    pub r: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub experiment: Experiment,
    #[serde(default)]
    pub grid: Option<GridBlock>,
    #[serde(default)]
    pub generator: Option<GeneratorBlock>,
    #[serde(default)]
    pub potential: Option<PotentialBlock>,
    #[serde(default)]
    pub evolution: Option<EvolutionBlock>,
    #[serde(default)]
    pub weights: Option<WeightsBlock>,
    #[serde(default)]
    pub carleman: Option<CarlemanBlock>,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<String>,
}

/// Parse and validate one document; every violation is reported with its
/// field path.
pub fn parse_runspec(document: &str) -> Result<RunSpec, Vec<String>> {
    let spec: RunSpec =
        serde_json::from_str(document).map_err(|e| vec![format!("parse-error: {e}")])?;
    validate(&spec)?;
    Ok(spec)
}

pub fn validate(spec: &RunSpec) -> Result<(), Vec<String>> {
    let mut errs = Vec::new();
    use Experiment::*;
    let needs: &[&str] = match spec.experiment {
        FreeOracle => &["grid", "generator", "evolution"],
        Unitarity => &["grid", "generator", "potential", "evolution"],
        LogConvexity => &["grid", "generator", "potential", "evolution", "weights"],
        AppellResidual => &["grid", "evolution", "weights"],
        CarlemanSweep => &["grid", "generator", "carleman"],
        HardySharp => &["grid", "weights"],
        Theorem1Decay => &["grid", "generator", "potential", "evolution", "carleman"],
        Theorem4Heat => &["grid", "generator", "evolution"],
        Theorem51Bound => &["grid", "generator", "potential", "evolution", "weights"],
        SystemCase => &["grid", "generator", "evolution"],
    };
    for block in needs {
        let present = match *block {
            "grid" => spec.grid.is_some(),
            "generator" => spec.generator.is_some(),
            "potential" => spec.potential.is_some(),
            "evolution" => spec.evolution.is_some(),
            "weights" => spec.weights.is_some(),
            "carleman" => spec.carleman.is_some(),
            _ => true,
        };
        if !present {
            errs.push(format!(
                "validation-error: experiment '{}' requires block '{}'",
                spec.experiment.name(),
                block
            ));
        }
    }
    if let Some(g) = &spec.grid {
        if !(1..=3).contains(&g.dim) {
            errs.push(format!("grid.dim: {} outside 1..=3", g.dim));
        }
        if g.points < 8 || !g.points.is_power_of_two() {
            errs.push(format!(
                "grid.points: {} is not a power of two >= 8",
                g.points
            ));
        }
        if !(g.half_width > 0.0) {
            errs.push("grid.half_width: must be positive".into());
        }
        if g.fiber_dim == 0 {
            errs.push("grid.fiber_dim: must be >= 1".into());
        }
    }
    if let Some(e) = &spec.evolution {
        if e.a < 0.0 {
            errs.push(
                "evolution.a: negative dissipative coefficient rejected (backward heat flow is ill-posed; the propagator requires a >= 0)"
                    .into(),
            );
        }
        if !(e.t_end > 0.0 && e.t_end <= 1.0) {
            errs.push(format!("evolution.t_end: {} outside (0, 1]", e.t_end));
        }
        if e.steps == 0 {
            errs.push("evolution.steps: must be >= 1".into());
        }
        if let Some(r) = e.record_every {
            if r == 0 || e.steps % r != 0 {
                errs.push(format!(
                    "evolution.record_every: {} must divide steps = {}",
                    r, e.steps
                ));
            }
        }
        if let Some(s) = &e.scheme {
            if !["exact-free", "strang-split", "duhamel"].contains(&s.as_str()) {
                errs.push(format!("evolution.scheme: unknown scheme '{s}'"));
            }
        }
    }
    if let Some(w) = &spec.weights {
        if !(w.alpha > 0.0 && w.beta > 0.0) {
            errs.push("weights: alpha and beta must be positive".into());
        }
        if w.gamma < 0.0 {
            errs.push("weights.gamma: must be >= 0".into());
        }
    }
    if let Some(c) = &spec.carleman {
        if !(c.mu_c > 0.0 && c.epsilon > 0.0 && c.r > 0.0) {
            errs.push("carleman: mu_c, epsilon, r must all be positive".into());
        }
    }
    if let Some(p) = &spec.potential {
        if let Err(e) = p.form() {
            errs.push(e);
        }
    }
    if let Some(g) = &spec.generator {
        if let Some(grid) = &spec.grid {
            if let Err(e) = g.build(grid.fiber_dim) {
                errs.push(e);
            }
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

/// Embedded default spec for each experiment. Grids larger than the desk
/// default are used where potential scattering or weighted measurements need
/// the containment margin; every bundle echoes its spec.
pub fn default_spec(experiment: Experiment) -> RunSpec {
    use Experiment::*;
    let grid = |l: f64, p: usize, m: usize| {
        Some(GridBlock {
            dim: 1,
            half_width: l,
            points: p,
            fiber_dim: m,
        })
    };
    let hermitian2 = Some(GeneratorBlock::Matrix {
        entries: vec![vec![[0.3, 0.0], [0.1, 0.2]], vec![[0.1, -0.2], [-0.4, 0.0]]],
    });
    let negative2 = Some(GeneratorBlock::Matrix {
        entries: vec![vec![[-0.5, 0.0], [0.1, 0.0]], vec![[0.1, 0.0], [-0.4, 0.0]]],
    });
    let schrodinger = |steps: usize, record: usize| {
        Some(EvolutionBlock {
            a: 0.0,
            b: 1.0,
            t_end: 1.0,
            steps,
            record_every: Some(record),
            scheme: Some("strang-split".into()),
        })
    };
    let pot = |id: &str| {
        Some(PotentialBlock {
            id: id.into(),
            params: Default::default(),
        })
    };
    let weights = |alpha: f64, beta: f64, gamma: f64| Some(WeightsBlock { alpha, beta, gamma });

    match experiment {
        FreeOracle => RunSpec {
            experiment,
            grid: grid(16.0, 512, 2),
            generator: hermitian2,
            potential: None,
            evolution: schrodinger(1000, 1000),
            weights: None,
            carleman: None,
            seed: 7,
            output: None,
        },
        Unitarity => RunSpec {
            experiment,
            grid: grid(20.0, 512, 2),
            generator: hermitian2,
            potential: pot("gaussian-well"),
            evolution: schrodinger(1000, 100),
            weights: None,
            carleman: None,
            seed: 7,
            output: None,
        },
        LogConvexity => RunSpec {
            experiment,
            grid: grid(24.0, 1024, 2),
            generator: Some(GeneratorBlock::Zero),
            potential: pot("modulated-gaussian"),
            evolution: schrodinger(1024, 32),
            weights: weights(1.6, 4.0, 0.0),
            carleman: None,
            seed: 7,
            output: None,
        },
        AppellResidual => RunSpec {
            experiment,
            grid: grid(32.0, 1024, 1),
            generator: None,
            potential: None,
            evolution: schrodinger(512, 1),
            weights: weights(1.0, 2.0, 0.0),
            carleman: None,
            seed: 7,
            output: None,
        },
        CarlemanSweep => RunSpec {
            experiment,
            grid: grid(16.0, 512, 2),
            generator: hermitian2,
            potential: None,
            evolution: None,
            weights: None,
            carleman: Some(CarlemanBlock {
                mu_c: 0.85,
                epsilon: 0.1,
                r: 8.0,
            }),
            seed: 42,
            output: None,
        },
        HardySharp => RunSpec {
            experiment,
            grid: grid(32.0, 2048, 1),
            generator: None,
            potential: None,
            evolution: None,
            weights: weights(4.0, 1.0, 0.0),
            carleman: None,
            seed: 7,
            output: None,
        },
        Theorem1Decay => RunSpec {
            experiment,
            grid: grid(20.0, 512, 2),
            generator: hermitian2,
            potential: pot("modulated-gaussian"),
            evolution: schrodinger(1024, 4),
            weights: None,
            carleman: Some(CarlemanBlock {
                mu_c: 0.85,
                epsilon: 0.1,
                r: 8.0,
            }),
            seed: 7,
            output: None,
        },
        Theorem4Heat => RunSpec {
            experiment,
            grid: grid(16.0, 512, 2),
            generator: negative2,
            potential: None,
            evolution: Some(EvolutionBlock {
                a: 1.0,
                b: 0.0,
                t_end: 1.0,
                steps: 1000,
                record_every: Some(250),
                scheme: Some("strang-split".into()),
            }),
            weights: None,
            carleman: None,
            seed: 7,
            output: None,
        },
        Theorem51Bound => RunSpec {
            experiment,
            grid: grid(24.0, 512, 2),
            generator: hermitian2,
            potential: pot("well-plus-modulated"),
            evolution: schrodinger(1024, 32),
            weights: weights(1.6, 4.0, 0.0),
            carleman: None,
            seed: 7,
            output: None,
        },
        SystemCase => RunSpec {
            experiment,
            grid: grid(16.0, 256, 4),
            generator: Some(GeneratorBlock::System {
                g: vec![0.6, -0.3, 0.45, 0.2],
                s: 0.4,
            }),
            potential: None,
            evolution: schrodinger(500, 100),
            weights: None,
            carleman: None,
            seed: 7,
            output: None,
        },
    }
}

/// Published JSON schema for RunSpec documents (draft-07 dialect).
pub const RUNSPEC_SCHEMA: &str = r##"{
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "RunSpec",
  "type": "object",
  "additionalProperties": false,
  "required": ["experiment", "seed"],
  "properties": {
    "experiment": {
      "enum": ["free-oracle", "unitarity", "log-convexity", "appell-residual",
               "carleman-sweep", "hardy-sharp", "theorem1-decay",
               "theorem4-heat", "theorem51-bound", "system-case"]
    },
    "grid": {
      "type": "object",
      "additionalProperties": false,
      "required": ["dim", "half_width", "points", "fiber_dim"],
      "properties": {
        "dim": {"type": "integer", "minimum": 1, "maximum": 3},
        "half_width": {"type": "number", "exclusiveMinimum": 0},
        "points": {"type": "integer", "minimum": 8, "description": "power of two"},
        "fiber_dim": {"type": "integer", "minimum": 1}
      }
    },
    "generator": {
      "type": "object",
      "additionalProperties": false,
      "required": ["kind"],
      "properties": {
        "kind": {"enum": ["zero", "matrix", "system"]},
        "entries": {
          "type": "array",
          "items": {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
          "description": "fiber_dim x fiber_dim complex entries as [re, im]; Hermitian to 1e-12"
        },
        "g": {"type": "array", "items": {"type": "number"}},
        "s": {"type": "number"}
      }
    },
    "potential": {
      "type": "object",
      "additionalProperties": false,
      "required": ["id"],
      "properties": {
        "id": {"enum": ["zero", "gaussian-well", "modulated-gaussian", "well-plus-modulated", "integral-kernel"]},
        "params": {"type": "object", "additionalProperties": {"type": "number"}}
      }
    },
    "evolution": {
      "type": "object",
      "additionalProperties": false,
      "required": ["a", "b", "t_end", "steps"],
      "properties": {
        "a": {"type": "number", "minimum": 0},
        "b": {"type": "number"},
        "t_end": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "steps": {"type": "integer", "minimum": 1},
        "record_every": {"type": "integer", "minimum": 1, "description": "must divide steps"},
        "scheme": {"enum": ["exact-free", "strang-split", "duhamel"]}
      }
    },
    "weights": {
      "type": "object",
      "additionalProperties": false,
      "required": ["alpha", "beta", "gamma"],
      "properties": {
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "beta": {"type": "number", "exclusiveMinimum": 0},
        "gamma": {"type": "number", "minimum": 0}
      }
    },
    "carleman": {
      "type": "object",
      "additionalProperties": false,
      "required": ["mu_c", "epsilon", "r"],
      "properties": {
        "mu_c": {"type": "number", "exclusiveMinimum": 0},
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
        "r": {"type": "number", "exclusiveMinimum": 0}
      }
    },
    "seed": {"type": "integer", "minimum": 0},
    "output": {"type": "string"}
  }
}"##;
