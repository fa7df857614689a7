//! Hyperparameter sweeps over (gamma, eta) with one CSV row per cell.

use crate::decoding::mix_seed;
use crate::error::{Error, Result};
use crate::guidance::{GuidanceParams, ModelPair};
use crate::lm::Vocabulary;
use crate::metrics::report::{csv_row, evaluate_pair, EvalConfig, CSV_HEADER};
use crate::pipeline::dataset::Dataset;
use crate::pipeline::generate::{generate_dataset, GenerationJob};

#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub gammas: Vec<f64>,
    pub etas: Vec<f64>,
    pub samples_per_cell: usize,
    pub base_job: GenerationJob,
    /// Upper bound on cells x samples; exceeding it fails before any
    /// generation starts.
    pub generation_budget: usize,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() || self.etas.is_empty() {
            return Err(Error::Config("sweep axes must be non-empty".into()));
        }
        let total = self.gammas.len() * self.etas.len() * self.samples_per_cell;
        if total > self.generation_budget {
            return Err(Error::Config(format!(
                "sweep would generate {total} examples, budget is {}",
                self.generation_budget
            )));
        }
        Ok(())
    }
}

pub struct SweepOutcome {
    pub csv: String,
    /// Synthetic datasets per cell, in row order, None for failed cells.
    pub datasets: Vec<Option<Dataset>>,
    pub succeeded: usize,
    pub failed: usize,
}

/// Run every (gamma, eta) cell: generate with derived seeds, evaluate
/// against the real holdout, emit one CSV row. Failed cells keep their row
/// with an error marker instead of metric columns.
pub fn run_sweep(
    grid: &SweepGrid,
    models: &ModelPair,
    vocab: &Vocabulary,
    real: &Dataset,
    holdout: &[String],
    eval: &EvalConfig,
) -> Result<SweepOutcome> {
    grid.validate()?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut datasets = Vec::new();
    let mut succeeded = 0;
    let mut failed = 0;
    for (cell, (&gamma, &eta)) in grid
        .gammas
        .iter()
        .flat_map(|g| grid.etas.iter().map(move |e| (g, e)))
        .enumerate()
    {
        let job = GenerationJob {
            count: grid.samples_per_cell,
            guidance: GuidanceParams {
                gamma,
                eta,
                allow_extrapolation: grid.base_job.guidance.allow_extrapolation,
            },
            master_seed: mix_seed(grid.base_job.master_seed, cell as u64),
            ..grid.base_job.clone()
        };
        let result = generate_dataset(&job, models, vocab, real, None).and_then(|ds| {
            let eval_cfg = EvalConfig {
                seed: job.master_seed,
                ..eval.clone()
            };
            let report = evaluate_pair(holdout, &ds.texts(), &eval_cfg)?;
            Ok((ds, report))
        });
        match result {
            Ok((ds, report)) => {
                csv.push_str(&csv_row(gamma, eta, &report));
                csv.push('\n');
                datasets.push(Some(ds));
                succeeded += 1;
            }
            Err(err) => {
                csv.push_str(&format!("{gamma:.6},{eta:.6},error={err}\n"));
                datasets.push(None);
                failed += 1;
            }
        }
    }
    Ok(SweepOutcome {
        csv,
        datasets,
        succeeded,
        failed,
    })
}
