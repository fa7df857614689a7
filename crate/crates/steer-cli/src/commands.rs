//! The four subcommands. Each one resolves its configuration with
//! flag > config > default precedence, writes its outputs atomically, and
//! drops a machine-readable run manifest next to them.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use steer_core::decoding::{SampleMethod, SamplerConfig};
use steer_core::embeddings::token_embedding_table;
use steer_core::guidance::{GuidanceParams, ModelPair};
use steer_core::lm::{CacheNGramModel, TokenId, TrainParams, VocabMode, Vocabulary};
use steer_core::metrics::{csv_row, evaluate_pair, EvalConfig, CSV_HEADER};
use steer_core::pipeline::{
    generate_dataset, ingest_dataset, read_synthetic_jsonl, run_sweep, write_jsonl, Dataset,
    DatasetFormat, GenerationJob, SweepGrid,
};

use crate::config::{fingerprint, layer, required, FileConfig};
use crate::CliError;

const DEFAULT_GENERATION_BUDGET: usize = 10_000;

/// Write through a temp file and rename, so readers never observe a
/// partially written artifact and failures leave nothing behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    let result = std::fs::write(&tmp, bytes)
        .and_then(|_| std::fs::rename(&tmp, path));
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    version: String,
    seed: u64,
    config_fingerprint: String,
    outputs: Vec<String>,
}

fn write_manifest(
    out: &Path,
    command: &str,
    seed: u64,
    config_fingerprint: String,
    outputs: &[&Path],
) -> Result<(), CliError> {
    let manifest = RunManifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        config_fingerprint,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    let json = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| CliError::internal(format!("manifest serialization: {e}")))?;
    write_atomic(&out.join(format!("{command}_manifest.json")), &json)
}

/// Ingest with the offending path included in any error message.
fn ingest(path: &Path, format: DatasetFormat) -> Result<Dataset, CliError> {
    ingest_dataset(path, format).map_err(|e| {
        let mut mapped = CliError::from(e);
        mapped.message = format!("{}: {}", path.display(), mapped.message);
        mapped
    })
}

fn ensure_out(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", out.display())))
}

fn parse_vocab_mode(s: &str) -> Result<VocabMode, CliError> {
    match s {
        "char" => Ok(VocabMode::Character),
        "word" => Ok(VocabMode::Word),
        other => Err(CliError::config(format!(
            "vocab_mode must be `char` or `word`, got `{other}`"
        ))),
    }
}

fn parse_format(s: &str) -> Result<DatasetFormat, CliError> {
    match s {
        "lines" => Ok(DatasetFormat::Lines),
        "jsonl" => Ok(DatasetFormat::Jsonl),
        other => Err(CliError::config(format!(
            "format must be `lines` or `jsonl`, got `{other}`"
        ))),
    }
}

fn parse_method(s: &str) -> Result<SampleMethod, CliError> {
    match s {
        "greedy" => Ok(SampleMethod::Greedy),
        "top_k" => Ok(SampleMethod::TopK),
        "nucleus" => Ok(SampleMethod::Nucleus),
        "contrastive_search" => Ok(SampleMethod::ContrastiveSearch),
        other => Err(CliError::config(format!(
            "method must be one of greedy, top_k, nucleus, contrastive_search; got `{other}`"
        ))),
    }
}

// ---- train ----

pub struct TrainFlags {
    pub corpus: Option<PathBuf>,
    pub vocab_corpus: Option<PathBuf>,
    pub role: Option<String>,
    pub vocab_mode: Option<String>,
    pub order: Option<usize>,
}

#[derive(Serialize)]
struct ResolvedTrain {
    corpus: PathBuf,
    vocab_corpus: Option<PathBuf>,
    role: String,
    vocab_mode: String,
    params: TrainParams,
    seed: u64,
}

pub fn cmd_train(
    flags: TrainFlags,
    file: &FileConfig,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let t = &file.train;
    let corpus_path = required(flags.corpus, t.corpus.clone(), "train.corpus")?;
    let role = required(flags.role, t.role.clone(), "train.role")?;
    if role != "base" && role != "domain" {
        return Err(CliError::config(format!(
            "role must be `base` or `domain`, got `{role}`"
        )));
    }
    let mode_str = layer(flags.vocab_mode, t.vocab_mode.clone(), "char".to_string());
    let mode = parse_vocab_mode(&mode_str)?;
    let defaults = TrainParams::default();
    let params = TrainParams {
        order: layer(flags.order, t.order, defaults.order),
        smoothing_alpha: t.smoothing_alpha.unwrap_or(defaults.smoothing_alpha),
        cache_weight: t.cache_weight.unwrap_or(defaults.cache_weight),
        cache_decay: t.cache_decay.unwrap_or(defaults.cache_decay),
    };
    let vocab_corpus = flags.vocab_corpus.or_else(|| t.vocab_corpus.clone());
    let resolved = ResolvedTrain {
        corpus: corpus_path.clone(),
        vocab_corpus: vocab_corpus.clone(),
        role: role.clone(),
        vocab_mode: mode_str,
        params,
        seed,
    };
    ensure_out(out)?;

    let dataset = ingest(&corpus_path, DatasetFormat::Lines)?;
    let lines = dataset.texts();
    let vocab = match &vocab_corpus {
        Some(path) => {
            let vlines = ingest(path, DatasetFormat::Lines)?.texts();
            Vocabulary::build(&vlines, mode)
        }
        None => Vocabulary::build(&lines, mode),
    };

    // Deterministic 5% holdout: every 20th line. Tiny corpora keep their
    // last line as the holdout so perplexity is always defined.
    let mut train_lines = Vec::new();
    let mut holdout = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if i % 20 == 19 {
            holdout.push(line.clone());
        } else {
            train_lines.push(line.clone());
        }
    }
    if holdout.is_empty() {
        holdout.push(train_lines.last().cloned().ok_or_else(|| {
            CliError::config(format!("corpus {} has no lines", corpus_path.display()))
        })?);
    }

    let model = CacheNGramModel::train(&train_lines, vocab.clone(), params)?;
    let token_count: usize = lines.iter().map(|l| vocab.tokenize(l).len()).sum();
    let mut log_sum = 0.0;
    let mut n_scored = 0usize;
    for line in &holdout {
        let mut tokens = vocab.tokenize(line);
        tokens.push(TokenId::EOS);
        log_sum += model.sequence_log_prob(&tokens);
        n_scored += tokens.len();
    }
    let perplexity = (-log_sum / n_scored as f64).exp();

    let model_path = out.join(format!("{role}.model"));
    let tmp = model_path.with_extension("model.tmp");
    if let Err(e) = model.save(&tmp).and_then(|_| {
        std::fs::rename(&tmp, &model_path).map_err(steer_core::Error::from)
    }) {
        let _ = std::fs::remove_file(&tmp);
        return Err(e.into());
    }
    write_manifest(out, "train", seed, fingerprint(&resolved), &[&model_path])?;
    println!(
        "trained {role} model: {token_count} tokens, vocab {}, holdout perplexity {perplexity:.4}",
        vocab.len()
    );
    println!("wrote {}", model_path.display());
    Ok(())
}

// ---- generate ----

pub struct GenerateFlags {
    pub gamma: Option<f64>,
    pub eta: Option<f64>,
    pub count: Option<usize>,
    pub instruction: Option<String>,
    pub domain: Option<PathBuf>,
    pub base: Option<PathBuf>,
    pub real: Option<PathBuf>,
    pub allow_extrapolation: bool,
    pub negative_count: Option<usize>,
    pub max_new_tokens: Option<usize>,
    pub method: Option<String>,
}

#[derive(Serialize)]
struct ResolvedGenerate {
    domain: PathBuf,
    base: PathBuf,
    real: Option<PathBuf>,
    job_fingerprint: String,
    seed: u64,
}

struct LoadedModels {
    domain: CacheNGramModel,
    base: CacheNGramModel,
}

fn load_models(
    domain_path: &Path,
    base_path: &Path,
) -> Result<LoadedModels, CliError> {
    let domain = CacheNGramModel::load(domain_path)?;
    let base = CacheNGramModel::load(base_path)?;
    if domain.vocab().tokens() != base.vocab().tokens() {
        return Err(CliError::config(
            "domain and base models have different vocabularies; retrain them over a shared corpus"
                .to_string(),
        ));
    }
    Ok(LoadedModels { domain, base })
}

fn load_real_pool(
    path: Option<&Path>,
    format: DatasetFormat,
) -> Result<Dataset, CliError> {
    match path {
        Some(p) => ingest(p, format),
        None => Ok(Dataset {
            kind: steer_core::pipeline::DatasetKind::Real,
            records: Vec::new(),
        }),
    }
}

fn build_job(
    flags: &GenerateFlags,
    file: &FileConfig,
    seed: u64,
) -> Result<GenerationJob, CliError> {
    let g = &file.generate;
    let gamma = required(flags.gamma, g.gamma, "generate.gamma")?;
    let eta = required(flags.eta, g.eta, "generate.eta")?;
    let count = required(flags.count, g.count, "generate.count")?;
    let mut guidance = GuidanceParams::new(gamma, eta);
    guidance.allow_extrapolation =
        flags.allow_extrapolation || g.allow_extrapolation.unwrap_or(false);

    let defaults = SamplerConfig::default();
    let method_str = layer(flags.method.clone(), g.method.clone(), "nucleus".to_string());
    let sampler = SamplerConfig {
        method: parse_method(&method_str)?,
        p: g.p.unwrap_or(defaults.p),
        k: g.k.unwrap_or(defaults.k),
        temperature: g.temperature.unwrap_or(defaults.temperature),
        degeneration_alpha: defaults.degeneration_alpha,
        seed,
    };

    let instruction = layer(flags.instruction.clone(), g.instruction.clone(), String::new());
    let mut job = GenerationJob::new(&instruction, count, guidance);
    job.sampler = sampler;
    job.negative_count = layer(flags.negative_count, g.negative_count, job.negative_count);
    job.max_new_tokens = layer(flags.max_new_tokens, g.max_new_tokens, job.max_new_tokens);
    job.context_budget = g.context_budget.unwrap_or(job.context_budget);
    job.master_seed = seed;
    if let Some(quotas) = &g.quotas {
        job.quotas = Some(quotas.iter().map(|q| (q.label.clone(), q.count)).collect());
    }
    job.validate()?;
    Ok(job)
}

pub fn cmd_generate(
    flags: GenerateFlags,
    file: &FileConfig,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let start = Instant::now();
    let g = &file.generate;
    // Job validation (including the no-silent-default rule for gamma, eta
    // and count) runs before any path is touched.
    let job = build_job(&flags, file, seed)?;
    let domain_path = required(flags.domain.clone(), file.models.domain.clone(), "models.domain")?;
    let base_path = required(flags.base.clone(), file.models.base.clone(), "models.base")?;
    let real_path = flags.real.clone().or(g.real.clone());
    let format = parse_format(&layer(None, g.format.clone(), "lines".to_string()))?;

    let models = load_models(&domain_path, &base_path)?;
    let real = load_real_pool(real_path.as_deref(), format)?;
    let pair = ModelPair {
        domain: &models.domain,
        base: &models.base,
    };
    let vocab = models.domain.vocab().clone();

    // Contrastive search needs per-token embeddings; fit them from the
    // real pool.
    let token_table = if matches!(job.sampler.method, SampleMethod::ContrastiveSearch) {
        let texts = real.texts();
        if texts.is_empty() {
            return Err(CliError::config(
                "contrastive_search requires a real dataset to fit token embeddings".to_string(),
            ));
        }
        Some(token_embedding_table(&texts, &vocab, 64)?)
    } else {
        None
    };

    ensure_out(out)?;
    let dataset = generate_dataset(&job, &pair, &vocab, &real, token_table.as_deref())?;

    let out_path = out.join("synthetic.jsonl");
    let tmp = out_path.with_extension("jsonl.tmp");
    if let Err(e) = write_jsonl(&dataset, &tmp).and_then(|_| {
        std::fs::rename(&tmp, &out_path).map_err(steer_core::Error::from)
    }) {
        let _ = std::fs::remove_file(&tmp);
        return Err(e.into());
    }

    let resolved = ResolvedGenerate {
        domain: domain_path,
        base: base_path,
        real: real_path,
        job_fingerprint: format!(
            "gamma={} eta={} count={} sampler={} neg={} max_new={} seed={}",
            job.guidance.gamma,
            job.guidance.eta,
            job.count,
            job.sampler.fingerprint(),
            job.negative_count,
            job.max_new_tokens,
            job.master_seed
        ),
        seed,
    };
    write_manifest(out, "generate", seed, fingerprint(&resolved), &[&out_path])?;

    let mean_len = dataset
        .records
        .iter()
        .map(|r| r.text.chars().count())
        .sum::<usize>() as f64
        / dataset.len().max(1) as f64;
    println!(
        "generated {} examples, mean length {:.1} chars, {:.2}s",
        dataset.len(),
        mean_len,
        start.elapsed().as_secs_f64()
    );
    println!("wrote {}", out_path.display());
    Ok(())
}

// ---- evaluate ----

pub struct EvaluateFlags {
    pub real: Option<PathBuf>,
    pub synth: Option<PathBuf>,
    pub format: Option<String>,
}

pub fn cmd_evaluate(
    flags: EvaluateFlags,
    file: &FileConfig,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let e = &file.evaluate;
    let real_path = required(flags.real, e.real.clone(), "evaluate.real")?;
    let synth_path = required(flags.synth, e.synth.clone(), "evaluate.synth")?;
    let format = parse_format(&layer(flags.format, e.format.clone(), "lines".to_string()))?;

    let real = ingest(&real_path, format)?;
    let synth = read_synthetic_jsonl(&synth_path)?;
    let config = EvalConfig {
        quantize_k: e.quantize_k,
        hull_dim: e.hull_dim.unwrap_or(EvalConfig::default().hull_dim),
        hull_tau: e.hull_tau,
        auroc_folds: e.auroc_folds.unwrap_or(EvalConfig::default().auroc_folds),
        seed,
        ..EvalConfig::default()
    };
    let report = evaluate_pair(&real.texts(), &synth.texts(), &config)?;

    ensure_out(out)?;
    let report_path = out.join("report.json");
    let json = serde_json::to_vec_pretty(&report)
        .map_err(|err| CliError::internal(format!("report serialization: {err}")))?;
    write_atomic(&report_path, &json)?;

    // Run ledger: one CSV row per evaluation, appended. Gamma/eta come from
    // the synthetic records' own provenance when present.
    let (gamma, eta) = synth
        .records
        .first()
        .and_then(|r| r.meta.as_ref())
        .map(|m| (m.gamma, m.eta))
        .unwrap_or((0.0, 0.0));
    let ledger_path = out.join("metrics.csv");
    let mut ledger = if ledger_path.exists() {
        std::fs::read_to_string(&ledger_path)
            .map_err(|err| CliError::io(format!("cannot read {}: {err}", ledger_path.display())))?
    } else {
        format!("{CSV_HEADER}\n")
    };
    ledger.push_str(&csv_row(gamma, eta, &report));
    ledger.push('\n');
    write_atomic(&ledger_path, ledger.as_bytes())?;

    write_manifest(
        out,
        "evaluate",
        seed,
        fingerprint(&(&real_path, &synth_path, seed)),
        &[&report_path, &ledger_path],
    )?;
    println!(
        "evaluated {} real vs {} synthetic: cosine {:.4}, qdiv {:.4}, auroc {:.4}, hull F {:.4}",
        report.n_real,
        report.m_synth,
        report.cosine_similarity,
        report.quantized_divergence,
        report.adversarial_auroc,
        report.hull_f_score
    );
    println!("wrote {}", report_path.display());
    Ok(())
}

// ---- sweep ----

pub struct SweepFlags {
    pub domain: Option<PathBuf>,
    pub base: Option<PathBuf>,
    pub real: Option<PathBuf>,
    pub samples_per_cell: Option<usize>,
    pub generation_budget: Option<usize>,
    pub keep_datasets: bool,
}

pub fn cmd_sweep(
    flags: SweepFlags,
    file: &FileConfig,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let s = &file.sweep;
    let g = &file.generate;
    let gammas = required(None, s.gammas.clone(), "sweep.gammas")?;
    let etas = required(None, s.etas.clone(), "sweep.etas")?;
    let samples_per_cell =
        required(flags.samples_per_cell, s.samples_per_cell, "sweep.samples_per_cell")?;
    let domain_path = required(flags.domain, file.models.domain.clone(), "models.domain")?;
    let base_path = required(flags.base, file.models.base.clone(), "models.base")?;
    let real_path = required(flags.real, g.real.clone(), "generate.real")?;
    let format = parse_format(&layer(None, g.format.clone(), "lines".to_string()))?;
    let keep = flags.keep_datasets || s.keep_datasets.unwrap_or(false);

    // The per-cell job reuses the generate section for everything except
    // gamma/eta, which the grid supplies. Count placeholder is overwritten
    // per cell by run_sweep.
    let mut base_job = {
        let flags = GenerateFlags {
            gamma: Some(0.0),
            eta: Some(0.0),
            count: Some(samples_per_cell),
            instruction: None,
            domain: None,
            base: None,
            real: None,
            allow_extrapolation: false,
            negative_count: None,
            max_new_tokens: None,
            method: None,
        };
        build_job(&flags, file, seed)?
    };
    // Axes beyond [0,1] are legitimate in a sweep (eta > 1 is repulsion).
    base_job.guidance.allow_extrapolation = true;

    let grid = SweepGrid {
        gammas,
        etas,
        samples_per_cell,
        base_job,
        generation_budget: layer(
            flags.generation_budget,
            s.generation_budget,
            DEFAULT_GENERATION_BUDGET,
        ),
    };
    grid.validate()?; // budget check happens before any model loading

    let models = load_models(&domain_path, &base_path)?;
    let real = load_real_pool(Some(&real_path), format)?;
    let pair = ModelPair {
        domain: &models.domain,
        base: &models.base,
    };
    let vocab = models.domain.vocab().clone();
    let holdout = real.texts();

    let eval = EvalConfig {
        quantize_k: file.evaluate.quantize_k,
        seed,
        ..EvalConfig::default()
    };
    ensure_out(out)?;
    let outcome = run_sweep(&grid, &pair, &vocab, &real, &holdout, &eval)?;

    let csv_path = out.join("sweep.csv");
    write_atomic(&csv_path, outcome.csv.as_bytes())?;
    let mut outputs: Vec<PathBuf> = vec![csv_path.clone()];
    if keep {
        for (i, ds) in outcome.datasets.iter().enumerate() {
            if let Some(ds) = ds {
                let cell_path = out.join(format!("cell_{i:03}.jsonl"));
                let tmp = cell_path.with_extension("jsonl.tmp");
                write_jsonl(ds, &tmp)?;
                std::fs::rename(&tmp, &cell_path)
                    .map_err(|e| CliError::io(e.to_string()))?;
                outputs.push(cell_path);
            }
        }
    }
    let output_refs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    write_manifest(
        out,
        "sweep",
        seed,
        fingerprint(&(&grid.gammas, &grid.etas, samples_per_cell, seed)),
        &output_refs,
    )?;

    let cells = grid.gammas.len() * grid.etas.len();
    println!(
        "swept {cells} cells ({} succeeded, {} failed), {} generations",
        outcome.succeeded,
        outcome.failed,
        outcome.succeeded * samples_per_cell
    );
    println!("wrote {}", csv_path.display());
    if outcome.succeeded == 0 {
        return Err(CliError::internal("every sweep cell failed".to_string()));
    }
    Ok(())
}
