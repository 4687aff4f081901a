//! Self-describing result bundles: metrics, verdicts, named CSV series, and
//! provenance. Every experiment writes a schema-valid bundle even on failure
//! paths (partial bundle with an error record).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::runspec::RunSpec;

pub const BUNDLE_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub seed: u64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultBundle {
    pub schema_version: u32,
    pub experiment: String,
    pub spec_echo: RunSpec,
    pub metrics: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, bool>,
    /// Series name -> relative CSV path under the output directory.
    pub series: BTreeMap<String, String>,
    pub error: Option<String>,
    pub provenance: Provenance,
}

impl ResultBundle {
    pub fn all_pass(&self) -> bool {
        self.error.is_none() && self.verdicts.values().all(|&v| v)
    }
}

/// In-memory experiment output before serialization.
#[derive(Clone, Debug, Default)]
pub struct ExperimentOutput {
    pub metrics: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, bool>,
    /// (name, csv content)
    pub series: Vec<(String, String)>,
}

impl ExperimentOutput {
    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    pub fn verdict(&mut self, name: &str, pass: bool) {
        self.verdicts.insert(name.to_string(), pass);
    }

    pub fn series(&mut self, name: &str, csv: String) {
        self.series.push((name.to_string(), csv));
    }
}

/// Two-column (or wider) gnuplot-ready CSV from named columns.
pub fn csv_table(columns: &[(&str, &[f64])]) -> String {
    let mut s = String::new();
    s.push_str(
        &columns
            .iter()
            .map(|(n, _)| n.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    s.push('\n');
    let rows = columns.iter().map(|(_, c)| c.len()).min().unwrap_or(0);
    for i in 0..rows {
        let row: Vec<String> = columns
            .iter()
            .map(|(_, c)| format!("{:.17e}", c[i]))
            .collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Write bundle.json and series/*.csv under `dir`.
pub fn write_bundle(
    dir: &Path,
    spec: &RunSpec,
    output: &ExperimentOutput,
    error: Option<String>,
    wall_time_s: f64,
) -> std::io::Result<ResultBundle> {
    std::fs::create_dir_all(dir)?;
    let mut series = BTreeMap::new();
    if !output.series.is_empty() {
        let series_dir = dir.join("series");
        std::fs::create_dir_all(&series_dir)?;
        for (name, csv) in &output.series {
            let rel = format!("series/{name}.csv");
            std::fs::write(dir.join(&rel), csv)?;
            series.insert(name.clone(), rel);
        }
    }
    let bundle = ResultBundle {
        schema_version: BUNDLE_SCHEMA_VERSION,
        experiment: spec.experiment.name().to_string(),
        spec_echo: spec.clone(),
        metrics: output.metrics.clone(),
        verdicts: output.verdicts.clone(),
        series,
        error,
        provenance: Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: spec.seed,
            wall_time_s,
        },
    };
    std::fs::write(
        dir.join("bundle.json"),
        serde_json::to_string_pretty(&bundle)?,
    )?;
    Ok(bundle)
}
