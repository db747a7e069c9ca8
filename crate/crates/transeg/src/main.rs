//! Command-line driver: model generation, rewriting, decoding, decode
//! comparison, pruning sweeps, and model audits, all file-in/file-out and
//! byte-reproducible given identical seeds (pass --timing to include wall
//! times in outputs).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use transeg::audit::run_model_audit;
use transeg::harness::{
    compare_decodes, generate_utterance_set, load_results, load_utterance_set, pruning_sweep,
    save_results, save_utterance_set, sweep_to_csv, GridPoint, ReferenceMode, ResultEntry,
    ResultsFile, SuiteParams, SweepConfig,
};
use transeg::lm::{generate_random_lm, load_lm, save_lm, NGramLM};
use transeg::models::{
    generate_random_segmental_biased, generate_random_transducer_biased, load_model, save_model,
    AnyModel, GeneratorParams,
};
use transeg::oracle::SearchLimits;
use transeg::search::{decode, DecodeConfig, PruneConfig, PruneMode, Strategy};
use transeg::topology::{Topology, TopologyKind};
use transeg::transform::{
    materialize_segmental, materialize_transducer, segmental_to_transducer,
    transducer_to_segmental,
};
use transeg::{Result, TransegError};

#[derive(Parser)]
#[command(name = "transeg", version, about = "Transducer/segmental sequence models: rewrites, oracles, and beam decoding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded random models, LMs, or whole utterance sets.
    Generate(GenerateArgs),
    /// Rewrite a model into the other family.
    Transform(TransformArgs),
    /// Decode one model or an utterance set.
    Decode(DecodeArgs),
    /// Compare two decode result files.
    Compare(CompareArgs),
    /// Pruning sweep over a strategy pair.
    Sweep(SweepArgs),
    /// Audit a model file: validation, rewrite equivalence, round trip,
    /// normalization. Exit code 1 on any failed check.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Transducer,
    Segmental,
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Rnnt,
    StrictMonotonic,
}

impl TopologyArg {
    fn build(self, frames: u32) -> Topology {
        match self {
            TopologyArg::Rnnt => Topology {
                kind: TopologyKind::Rnnt,
                frames,
            },
            TopologyArg::StrictMonotonic => Topology {
                kind: TopologyKind::StrictMonotonic,
                frames,
            },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    TimeSync,
    LabelSyncFull,
    LabelSyncTwoStage,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::TimeSync => Strategy::TimeSync,
            StrategyArg::LabelSyncFull => Strategy::LabelSyncFull,
            StrategyArg::LabelSyncTwoStage => Strategy::LabelSyncTwoStage,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReferenceModeArg {
    OracleBest,
    Sampled,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "transducer")]
    kind: KindArg,
    #[arg(long, value_enum, default_value = "strict-monotonic")]
    topology: TopologyArg,
    /// Frame count T.
    #[arg(long, default_value_t = 4)]
    frames: u32,
    #[arg(long, default_value_t = 3)]
    vocab_size: usize,
    /// Label-context order k.
    #[arg(long, default_value_t = 1)]
    context_order: usize,
    /// 1 = near-uniform rows, 0 = near-one-hot rows.
    #[arg(long, default_value_t = 0.8)]
    smoothness: f64,
    /// Rescales blank mass (below one shortens segments).
    #[arg(long)]
    blank_bias: Option<f64>,
    /// Overridden by the TRANSEG_SEED environment variable when set.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also emit a random LM of this order next to the model.
    #[arg(long)]
    lm_order: Option<usize>,
    /// Single-model output path.
    #[arg(long, conflicts_with = "set_dir")]
    out: Option<PathBuf>,
    /// Utterance-set output directory (writes manifest.json + models/).
    #[arg(long, requires = "count")]
    set_dir: Option<PathBuf>,
    /// Utterance count for --set-dir.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, value_enum, default_value = "oracle-best")]
    reference_mode: ReferenceModeArg,
    /// Share one model across all utterances instead of one per utterance.
    #[arg(long)]
    shared_model: bool,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long)]
    model: PathBuf,
    /// t2s (transducer to segmental) or s2t (segmental to transducer).
    #[arg(long)]
    direction: String,
    /// Write the materialized tabular model; without it the command only
    /// audits the rewrite and writes metadata.
    #[arg(long)]
    materialize: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long, conflicts_with = "set")]
    model: Option<PathBuf>,
    /// Utterance-set manifest.
    #[arg(long)]
    set: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "time-sync")]
    strategy: StrategyArg,
    /// Score-threshold pruning (negative-log domain).
    #[arg(long)]
    q_prune: Option<f64>,
    /// Beam size B.
    #[arg(long)]
    beam_b: Option<usize>,
    /// Boundary beam B_t (two-stage label-synchronous search).
    #[arg(long)]
    beam_bt: Option<usize>,
    #[arg(long)]
    lm: Option<PathBuf>,
    /// LM fusion scale.
    #[arg(long, default_value_t = 0.0)]
    lm_scale: f64,
    #[arg(long, default_value_t = 1)]
    nbest: usize,
    #[arg(long)]
    max_labels: Option<usize>,
    #[arg(long)]
    max_labels_per_frame: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Re-rank the n-best list by full-sum posterior instead of the
    /// Viterbi score before writing.
    #[arg(long)]
    rescore_full_sum: bool,
    /// Include measured wall times (breaks byte-reproducibility).
    #[arg(long)]
    timing: bool,
    /// Utterance id for single-model decodes.
    #[arg(long, default_value = "u0000")]
    utt_id: String,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    results_a: PathBuf,
    #[arg(long)]
    results_b: PathBuf,
    /// Same-score tolerance in the negative-log domain.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    set: PathBuf,
    #[arg(long, value_enum, default_value = "time-sync")]
    strategy_a: StrategyArg,
    #[arg(long, value_enum, default_value = "label-sync-full")]
    strategy_b: StrategyArg,
    /// Comma-separated Q_prune grid; defaults to 4,6,8,10,12,14,20.
    #[arg(long)]
    q_grid: Option<String>,
    /// Comma-separated B:Bt pairs, e.g. 1:1,4:4,12:4.
    #[arg(long)]
    beam_grid: Option<String>,
    /// Append an unpruned grid point.
    #[arg(long)]
    exhaustive_point: bool,
    #[arg(long)]
    lm: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    lm_scale: f64,
    /// Same-score tolerance in the negative-log domain.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Override the shared label budget of oracle and decoders.
    #[arg(long)]
    max_labels: Option<usize>,
    /// Override the per-frame vertical cap (RNN-T).
    #[arg(long)]
    max_labels_per_frame: Option<usize>,
    /// Output prefix: writes PREFIX.csv, PREFIX.json, PREFIX.config.json.
    #[arg(long)]
    out_prefix: PathBuf,
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    model: PathBuf,
    /// Label-sequence bound of the equivalence and mass audits.
    #[arg(long, default_value_t = 4)]
    s_max: usize,
    /// Posterior-preservation tolerance (log domain).
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Optional JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Transform(args) => cmd_transform(args),
        Command::Decode(args) => cmd_decode(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn env_seed(cli_seed: u64) -> u64 {
    match std::env::var("TRANSEG_SEED") {
        Ok(v) => v.parse().unwrap_or(cli_seed),
        Err(_) => cli_seed,
    }
}

fn write_config(stem: &Path, config: serde_json::Value) -> Result<()> {
    let path = stem.with_extension("config.json");
    let text = serde_json::to_string_pretty(&config).expect("config serializes");
    std::fs::write(path, text)?;
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode> {
    let seed = env_seed(args.seed);
    let topology = args.topology.build(args.frames);
    let params = GeneratorParams {
        smoothness: args.smoothness,
        blank_bias: args.blank_bias,
    };
    let config = json!({
        "command": "generate",
        "seed": seed,
        "kind": match args.kind { KindArg::Transducer => "transducer", KindArg::Segmental => "segmental" },
        "topology": topology,
        "vocab_size": args.vocab_size,
        "context_order": args.context_order,
        "smoothness": args.smoothness,
        "blank_bias": args.blank_bias,
        "lm_order": args.lm_order,
        "count": args.count,
        "shared_model": args.shared_model,
    });

    if let Some(dir) = &args.set_dir {
        let suite = SuiteParams {
            seed,
            count: args.count.expect("clap enforces --count"),
            topology,
            vocab_size: args.vocab_size,
            context_order: args.context_order,
            smoothness: args.smoothness,
            blank_bias: args.blank_bias,
            reference_mode: match args.reference_mode {
                ReferenceModeArg::OracleBest => ReferenceMode::OracleBest,
                ReferenceModeArg::Sampled => ReferenceMode::Sampled,
            },
            shared_model: args.shared_model,
        };
        let set = generate_utterance_set(&suite)?;
        std::fs::create_dir_all(dir)?;
        save_utterance_set(&set, dir)?;
        if let Some(order) = args.lm_order {
            let lm = generate_random_lm(seed ^ 0x1a, order, set.vocabulary(), args.smoothness);
            save_lm(&lm, &dir.join("lm.json"))?;
        }
        write_config(&dir.join("manifest"), config)?;
        println!("wrote utterance set to {}", dir.display());
        return Ok(ExitCode::SUCCESS);
    }

    let out = args
        .out
        .ok_or_else(|| TransegError::Config("--out or --set-dir required".into()))?;
    let model = match args.kind {
        KindArg::Transducer => AnyModel::Transducer(generate_random_transducer_biased(
            seed,
            topology,
            args.vocab_size,
            args.context_order,
            params,
        )),
        KindArg::Segmental => AnyModel::Segmental(generate_random_segmental_biased(
            seed,
            topology,
            args.vocab_size,
            args.context_order,
            params,
        )),
    };
    save_model(&model, &out)?;
    if let Some(order) = args.lm_order {
        let lm = generate_random_lm(seed ^ 0x1a, order, model.vocabulary(), args.smoothness);
        save_lm(&lm, &out.with_extension("lm.json"))?;
    }
    write_config(&out, config)?;
    println!("wrote {} model to {}", model.kind_name(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_transform(args: TransformArgs) -> Result<ExitCode> {
    let model = load_model(&args.model)?;
    let (rewritten, note) = match (args.direction.as_str(), &model) {
        ("t2s", AnyModel::Transducer(m)) => {
            let view = transducer_to_segmental(m);
            (AnyModel::Segmental(materialize_segmental(&view)), "t2s")
        }
        ("s2t", AnyModel::Segmental(m)) => {
            let view = segmental_to_transducer(m);
            (AnyModel::Transducer(materialize_transducer(&view)), "s2t")
        }
        ("t2s", AnyModel::Segmental(_)) | ("s2t", AnyModel::Transducer(_)) => {
            return Err(TransegError::Config(format!(
                "direction {} does not apply to a {} model",
                args.direction,
                model.kind_name()
            )));
        }
        (other, _) => {
            return Err(TransegError::Config(format!(
                "unknown direction {other:?} (expected t2s or s2t)"
            )));
        }
    };
    let deviation = transeg::audit::equivalence_deviation(&model, 4);
    let config = json!({
        "command": "transform",
        "input": args.model,
        "direction": note,
        "materialize": args.materialize,
        "posterior_deviation_s4": deviation,
    });
    if args.materialize {
        save_model(&rewritten, &args.out)?;
        write_config(&args.out, config)?;
        println!(
            "wrote {} rewrite to {} (posterior deviation {deviation:.3e} for S <= 4)",
            note,
            args.out.display()
        );
    } else {
        write_config(&args.out, config)?;
        println!(
            "rewrite audit only (no --materialize): posterior deviation {deviation:.3e} for S <= 4"
        );
    }
    if deviation > 1e-9 {
        eprintln!("rewrite deviates beyond 1e-9");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn load_optional_lm(path: &Option<PathBuf>) -> Result<Option<NGramLM>> {
    Ok(match path {
        Some(p) => Some(load_lm(p)?),
        None => None,
    })
}

fn build_prune(q: Option<f64>, b: Option<usize>, bt: Option<usize>) -> PruneConfig {
    let mode = match (q, b) {
        (None, None) => PruneMode::None,
        (Some(q), None) => PruneMode::Threshold { q_prune: q },
        (None, Some(b)) => PruneMode::Beam { b },
        (Some(q), Some(b)) => PruneMode::Both { q_prune: q, b },
    };
    PruneConfig {
        mode,
        boundary_beam: bt,
    }
}

fn cmd_decode(args: DecodeArgs) -> Result<ExitCode> {
    let lm = load_optional_lm(&args.lm)?;
    let strategy: Strategy = args.strategy.into();
    let prune = build_prune(args.q_prune, args.beam_b, args.beam_bt);
    let mut entries = Vec::new();
    let mut auto_transformed = false;
    let mut total_expanded = 0u64;
    let mut total_wall = 0u64;

    let decode_model = |model: &AnyModel| -> Result<transeg::search::DecodeResult> {
        let mut limits = SearchLimits::for_topology(model.topology());
        if let Some(ml) = args.max_labels {
            limits.max_labels = ml;
        }
        if let Some(mpf) = args.max_labels_per_frame {
            limits.max_labels_per_frame = mpf;
        }
        let config = DecodeConfig {
            strategy,
            prune,
            lambda: args.lm_scale,
            nbest: args.nbest,
            limits: Some(limits),
        };
        decode(model, lm.as_ref(), &config)
    };

    if let Some(manifest) = &args.set {
        let set = load_utterance_set(manifest)?;
        let vocab = set.vocabulary().clone();
        for utt in &set.utterances {
            let model = &set.models[utt.model_index];
            let mut result = decode_model(model)?;
            if args.rescore_full_sum {
                result.nbest = transeg::harness::full_sum_rescore(model, &result.nbest);
            }
            auto_transformed |= result.auto_transformed;
            total_expanded += result.stats.expanded;
            total_wall += result.stats.wall_ms;
            let best = result.best().cloned();
            entries.push(match best {
                Some(seq) => ResultEntry::from_scored(&utt.id, &vocab, &seq),
                None => ResultEntry {
                    id: utt.id.clone(),
                    labels: Vec::new(),
                    score: transeg::harness::finite_score(f64::INFINITY),
                },
            });
        }
    } else {
        let model_path = args
            .model
            .as_ref()
            .ok_or_else(|| TransegError::Config("--model or --set required".into()))?;
        let model = load_model(model_path)?;
        let mut result = decode_model(&model)?;
        if args.rescore_full_sum {
            result.nbest = transeg::harness::full_sum_rescore(&model, &result.nbest);
        }
        auto_transformed = result.auto_transformed;
        total_expanded = result.stats.expanded;
        total_wall = result.stats.wall_ms;
        let vocab = model.vocabulary();
        for seq in &result.nbest {
            entries.push(ResultEntry::from_scored(&args.utt_id, vocab, seq));
        }
    }

    let results = ResultsFile {
        format_version: 1,
        strategy: format!("{strategy:?}"),
        entries,
    };
    save_results(&results, &args.out)?;
    write_config(
        &args.out,
        json!({
            "command": "decode",
            "strategy": strategy,
            "q_prune": args.q_prune,
            "beam_b": args.beam_b,
            "beam_bt": args.beam_bt,
            "lm_scale": args.lm_scale,
            "nbest": args.nbest,
            "rescore_full_sum": args.rescore_full_sum,
            "auto_transformed": auto_transformed,
            "hypotheses_expanded": total_expanded,
            "wall_ms": if args.timing { total_wall } else { 0 },
        }),
    )?;
    if auto_transformed {
        println!(
            "note: model kind did not match the strategy; the rewrite view was applied automatically"
        );
    }
    println!("wrote decode results to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(args: CompareArgs) -> Result<ExitCode> {
    let a = load_results(&args.results_a)?;
    let b = load_results(&args.results_b)?;
    let report = compare_decodes(&a.entries, &b.entries, args.tolerance)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&args.out, text)?;
    write_config(
        &args.out,
        json!({
            "command": "compare",
            "results_a": args.results_a,
            "results_b": args.results_b,
            "tolerance": args.tolerance,
        }),
    )?;
    println!(
        "same-transcription {:.2}%, same-score {:.2}% (tolerance {})",
        report.same_trans_pct, report.same_score_pct, report.tolerance
    );
    Ok(ExitCode::SUCCESS)
}

fn parse_q_grid(text: &str) -> Result<Vec<GridPoint>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map(|q_prune| GridPoint::Threshold { q_prune })
                .map_err(|_| TransegError::Config(format!("bad Q value {part:?}")))
        })
        .collect()
}

fn parse_beam_grid(text: &str) -> Result<Vec<GridPoint>> {
    text.split(',')
        .map(|part| {
            let (b, bt) = part
                .trim()
                .split_once(':')
                .ok_or_else(|| TransegError::Config(format!("bad B:Bt pair {part:?}")))?;
            Ok(GridPoint::Beam {
                b: b
                    .parse()
                    .map_err(|_| TransegError::Config(format!("bad B in {part:?}")))?,
                b_t: bt
                    .parse()
                    .map_err(|_| TransegError::Config(format!("bad Bt in {part:?}")))?,
            })
        })
        .collect()
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let set = load_utterance_set(&args.set)?;
    let lm = load_optional_lm(&args.lm)?;
    let mut grid = match (&args.q_grid, &args.beam_grid) {
        (Some(q), None) => parse_q_grid(q)?,
        (None, Some(b)) => parse_beam_grid(b)?,
        (None, None) => transeg::harness::default_q_grid(),
        (Some(_), Some(_)) => {
            return Err(TransegError::Config(
                "--q-grid and --beam-grid are mutually exclusive".into(),
            ))
        }
    };
    if args.exhaustive_point {
        grid.push(GridPoint::Exhaustive);
    }
    let mut config = SweepConfig::new(grid.clone(), args.strategy_a.into(), args.strategy_b.into());
    config.lambda = args.lm_scale;
    config.score_tolerance = args.tolerance;
    config.workers = args.workers.max(1);
    if args.max_labels.is_some() || args.max_labels_per_frame.is_some() {
        let mut limits = SearchLimits::for_topology(set.models[0].topology());
        if let Some(ml) = args.max_labels {
            limits.max_labels = ml;
        }
        if let Some(mpf) = args.max_labels_per_frame {
            limits.max_labels_per_frame = mpf;
        }
        config.limits = Some(limits);
    }
    let mut report = pruning_sweep(&set, lm.as_ref(), &config)?;
    if !args.timing {
        report.strip_timing();
    }

    let csv_path = args.out_prefix.with_extension("csv");
    std::fs::write(&csv_path, sweep_to_csv(&report, args.timing))?;
    let json_path = args.out_prefix.with_extension("json");
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    write_config(
        &args.out_prefix,
        json!({
            "command": "sweep",
            "set": args.set,
            "strategy_a": Strategy::from(args.strategy_a),
            "strategy_b": Strategy::from(args.strategy_b),
            "grid": grid,
            "lm_scale": args.lm_scale,
            "tolerance": args.tolerance,
            "workers": args.workers,
            "max_labels": args.max_labels,
            "max_labels_per_frame": args.max_labels_per_frame,
        }),
    )?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let model = load_model(&args.model)?;
    let report = run_model_audit(&model, args.s_max, args.tolerance);
    for check in &report.checks {
        println!(
            "{} {}: {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    if let Some(out) = &args.out {
        std::fs::write(
            out,
            serde_json::to_string_pretty(&report).expect("report serializes"),
        )?;
        write_config(
            out,
            json!({
                "command": "verify",
                "model": args.model,
                "s_max": args.s_max,
                "tolerance": args.tolerance,
            }),
        )?;
    }
    if report.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}
