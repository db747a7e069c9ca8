//! Experiment driver: WER scoring, decode comparisons, synthetic utterance
//! sets, and pruning sweeps over strategy pairs.
//!
//! WER here is unit-level — the synthetic labels stand in for words, since
//! no lexicon exists at desk scale. Every report header says so.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TransegError};
use crate::lm::NGramLM;
use crate::models::AnyModel;
use crate::oracle::{
    exact_best_segmental, full_sum_segmental, full_sum_transducer, viterbi_best_transducer,
    ScoredSequence, SearchLimits,
};
use crate::rng::SplitMix64;
use crate::score::LogScore;
use crate::scorer::TransducerScorer;
use crate::search::{decode, DecodeConfig, PruneConfig, PruneMode, Strategy};
use crate::topology::{Topology, TopologyKind};
use crate::vocab::{LabelId, Vocabulary};

/// Levenshtein alignment counts with unit costs. The backtrace prefers
/// substitution over insertion over deletion on ties.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WerBreakdown {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    /// `(S + I + D) / len(reference)`; an empty reference is scored as
    /// `I / 1` and flagged.
    pub rate: f64,
    pub empty_reference: bool,
}

impl WerBreakdown {
    pub fn edits(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }
}

pub fn wer(reference: &[LabelId], hypothesis: &[LabelId]) -> WerBreakdown {
    let r = reference.len();
    let h = hypothesis.len();
    let mut d = vec![vec![0usize; h + 1]; r + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=h {
        d[0][j] = j;
    }
    for i in 1..=r {
        for j in 1..=h {
            let sub = d[i - 1][j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            let ins = d[i][j - 1] + 1;
            let del = d[i - 1][j] + 1;
            d[i][j] = sub.min(ins).min(del);
        }
    }
    let (mut i, mut j) = (r, h);
    let (mut subs, mut inss, mut dels) = (0usize, 0usize, 0usize);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let cost = usize::from(reference[i - 1] != hypothesis[j - 1]);
            if d[i][j] == d[i - 1][j - 1] + cost {
                subs += cost;
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if j > 0 && d[i][j] == d[i][j - 1] + 1 {
            inss += 1;
            j -= 1;
            continue;
        }
        dels += 1;
        i -= 1;
    }
    let empty_reference = r == 0;
    let rate = if empty_reference {
        inss as f64
    } else {
        (subs + inss + dels) as f64 / r as f64
    };
    WerBreakdown {
        substitutions: subs,
        insertions: inss,
        deletions: dels,
        rate,
        empty_reference,
    }
}

/// One decoded utterance as stored in a results file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ResultEntry {
    pub id: String,
    pub labels: Vec<String>,
    pub score: f64,
}

impl ResultEntry {
    pub fn from_scored(id: &str, vocab: &Vocabulary, seq: &ScoredSequence) -> Self {
        ResultEntry {
            id: id.to_string(),
            labels: vocab.render(&seq.labels),
            score: finite_score(seq.score.value()),
        }
    }
}

/// Replace each hypothesis' Viterbi score with the full-sum posterior of
/// its label sequence and re-sort. The decoders' decisions are Viterbi by
/// definition; this is the separate rescoring pass for n-best analysis.
pub fn full_sum_rescore(model: &AnyModel, nbest: &[ScoredSequence]) -> Vec<ScoredSequence> {
    let mut out: Vec<ScoredSequence> = nbest
        .iter()
        .map(|seq| ScoredSequence {
            labels: seq.labels.clone(),
            score: match model {
                AnyModel::Transducer(m) => full_sum_transducer(m, &seq.labels),
                AnyModel::Segmental(m) => full_sum_segmental(m, &seq.labels),
            },
            alignment: None,
        })
        .collect();
    out.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then_with(|| a.labels.cmp(&b.labels))
    });
    out
}

/// JSON has no infinity literal; an impossible decode is recorded as MAX.
pub fn finite_score(value: f64) -> f64 {
    if value.is_finite() {
        value
    } else {
        f64::MAX
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UtteranceComparison {
    pub id: String,
    pub labels_a: Vec<String>,
    pub labels_b: Vec<String>,
    pub score_a: f64,
    pub score_b: f64,
    pub same_transcription: bool,
    pub same_score: bool,
}

/// Pairwise decode comparison. Same-score is only evaluated on equal
/// transcriptions, so `same_score_pct <= same_trans_pct` by construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub tolerance: f64,
    pub utterances: Vec<UtteranceComparison>,
    pub same_trans_pct: f64,
    pub same_score_pct: f64,
    /// Filled by sweeps, absent for a bare comparison: search-error rates
    /// and corpus WER per system.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search_error_rate_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search_error_rate_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wer_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wer_b: Option<f64>,
}

pub fn compare_decodes(
    results_a: &[ResultEntry],
    results_b: &[ResultEntry],
    tolerance: f64,
) -> Result<ComparisonReport> {
    if results_a.len() != results_b.len() {
        return Err(TransegError::Config(format!(
            "result lists differ in length: {} vs {}",
            results_a.len(),
            results_b.len()
        )));
    }
    let mut utterances = Vec::with_capacity(results_a.len());
    let mut same_trans = 0usize;
    let mut same_score = 0usize;
    for (a, b) in results_a.iter().zip(results_b) {
        if a.id != b.id {
            return Err(TransegError::Config(format!(
                "utterance id mismatch: {:?} vs {:?}",
                a.id, b.id
            )));
        }
        let eq_trans = a.labels == b.labels;
        let eq_score = eq_trans && (a.score - b.score).abs() <= tolerance;
        same_trans += usize::from(eq_trans);
        same_score += usize::from(eq_score);
        utterances.push(UtteranceComparison {
            id: a.id.clone(),
            labels_a: a.labels.clone(),
            labels_b: b.labels.clone(),
            score_a: a.score,
            score_b: b.score,
            same_transcription: eq_trans,
            same_score: eq_score,
        });
    }
    let n = results_a.len().max(1) as f64;
    Ok(ComparisonReport {
        tolerance,
        utterances,
        same_trans_pct: 100.0 * same_trans as f64 / n,
        same_score_pct: 100.0 * same_score as f64 / n,
        search_error_rate_a: None,
        search_error_rate_b: None,
        wer_a: None,
        wer_b: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMode {
    /// References are each model's exact Viterbi best: an unpruned decode
    /// has WER zero by construction.
    OracleBest,
    /// References are ancestrally sampled from the model.
    Sampled,
}

#[derive(Clone, Debug)]
pub struct Utterance {
    pub id: String,
    pub model_index: usize,
    pub reference: Vec<LabelId>,
}

#[derive(Clone, Debug)]
pub struct UtteranceSet {
    pub seed: u64,
    pub reference_mode: ReferenceMode,
    pub models: Vec<AnyModel>,
    pub utterances: Vec<Utterance>,
}

impl UtteranceSet {
    pub fn vocabulary(&self) -> &Vocabulary {
        self.models[0].vocabulary()
    }
}

/// Parameters of a synthetic utterance set.
#[derive(Clone, Debug)]
pub struct SuiteParams {
    pub seed: u64,
    pub count: usize,
    pub topology: Topology,
    pub vocab_size: usize,
    pub context_order: usize,
    pub smoothness: f64,
    pub blank_bias: Option<f64>,
    pub reference_mode: ReferenceMode,
    /// One model shared by all utterances, or one model per utterance.
    pub shared_model: bool,
}

/// Deterministic synthetic utterance set: per-utterance (or shared)
/// seeded transducer models plus reference transcriptions.
pub fn generate_utterance_set(params: &SuiteParams) -> Result<UtteranceSet> {
    let mut models = Vec::new();
    let mut utterances = Vec::new();
    let base = SplitMix64::new(params.seed);
    let limits = SearchLimits::for_topology(params.topology);
    for i in 0..params.count {
        let model_index = if params.shared_model { 0 } else { i };
        if models.len() == model_index {
            let model_seed = base.fork(0x4D0 + model_index as u64).next_u64();
            models.push(AnyModel::Transducer(
                crate::models::generate_random_transducer_biased(
                    model_seed,
                    params.topology,
                    params.vocab_size,
                    params.context_order,
                    crate::models::GeneratorParams {
                        smoothness: params.smoothness,
                        blank_bias: params.blank_bias,
                    },
                ),
            ));
        }
        let model = &models[model_index];
        let reference = match params.reference_mode {
            ReferenceMode::OracleBest => match model {
                AnyModel::Transducer(m) => viterbi_best_transducer(m, None, 0.0, &limits)?.labels,
                AnyModel::Segmental(m) => exact_best_segmental(m, None, 0.0, &limits)?.labels,
            },
            ReferenceMode::Sampled => {
                let mut rng = base.fork(0x5A3 + i as u64);
                match model {
                    AnyModel::Transducer(m) => sample_labels(m, &mut rng, &limits),
                    AnyModel::Segmental(m) => {
                        let view = crate::transform::segmental_to_transducer(m);
                        sample_labels(&view, &mut rng, &limits)
                    }
                }
            }
        };
        utterances.push(Utterance {
            id: format!("u{i:04}"),
            model_index,
            reference,
        });
    }
    Ok(UtteranceSet {
        seed: params.seed,
        reference_mode: params.reference_mode,
        models,
        utterances,
    })
}

/// Ancestral sampling of a label sequence from a transducer scorer. The
/// label budget forces the blank route once spent.
fn sample_labels<S: TransducerScorer>(
    model: &S,
    rng: &mut SplitMix64,
    limits: &SearchLimits,
) -> Vec<LabelId> {
    let topology = model.topology();
    let frames = topology.frames;
    let mut t = 1;
    let mut t_prev = topology.origin();
    let mut labels: Vec<LabelId> = Vec::new();
    let mut at_frame = 0usize;
    while t <= frames {
        let step = model.step_scores(t, t_prev, &labels);
        if !step.reachable {
            break;
        }
        let force_blank =
            labels.len() >= limits.max_labels || at_frame >= limits.max_labels_per_frame;
        let blank_p = step.blank.prob();
        let draw = rng.next_f64();
        if force_blank || draw < blank_p {
            t += 1;
            at_frame = 0;
            continue;
        }
        // renormalize the label mass over the remaining draw
        let mut acc = blank_p;
        let mut chosen = None;
        for (i, &s) in step.labels.iter().enumerate() {
            acc += s.prob();
            if draw < acc {
                chosen = Some(LabelId(i as u32));
                break;
            }
        }
        let label = chosen.unwrap_or(LabelId(step.labels.len() as u32 - 1));
        labels.push(label);
        t_prev = t;
        match topology.kind {
            TopologyKind::Rnnt => at_frame += 1,
            TopologyKind::StrictMonotonic => {
                t += 1;
                at_frame = 0;
            }
        }
    }
    labels
}

/// One grid coordinate of a pruning sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GridPoint {
    Threshold { q_prune: f64 },
    Beam { b: usize, b_t: usize },
    Exhaustive,
}

impl GridPoint {
    pub fn label(&self) -> String {
        match self {
            GridPoint::Threshold { q_prune } => format!("Q={q_prune}"),
            GridPoint::Beam { b, b_t } => format!("B={b};Bt={b_t}"),
            GridPoint::Exhaustive => "exhaustive".to_string(),
        }
    }

    fn prune_for(&self, strategy: Strategy) -> PruneConfig {
        match (self, strategy) {
            (GridPoint::Exhaustive, _) => PruneConfig::none(),
            (GridPoint::Threshold { q_prune }, _) => PruneConfig::threshold(*q_prune),
            (GridPoint::Beam { b, b_t }, Strategy::LabelSyncTwoStage) => PruneConfig {
                mode: PruneMode::Beam { b: *b },
                boundary_beam: Some(*b_t),
            },
            (GridPoint::Beam { b, .. }, _) => PruneConfig::beam(*b),
        }
    }
}

/// The Q grid used throughout: 4, 6, 8, 10, 12, 14, 20.
pub fn default_q_grid() -> Vec<GridPoint> {
    [4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 20.0]
        .iter()
        .map(|&q| GridPoint::Threshold { q_prune: q })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub grid: Vec<GridPoint>,
    pub strategy_a: Strategy,
    pub strategy_b: Strategy,
    pub lambda: f64,
    pub nbest: usize,
    pub score_tolerance: f64,
    pub workers: usize,
    /// Search-space bounds shared by the oracle and every decode;
    /// topology defaults when absent.
    pub limits: Option<SearchLimits>,
}

impl SweepConfig {
    pub fn new(grid: Vec<GridPoint>, strategy_a: Strategy, strategy_b: Strategy) -> Self {
        SweepConfig {
            grid,
            strategy_a,
            strategy_b,
            lambda: 0.0,
            nbest: 1,
            score_tolerance: 1e-4,
            workers: 1,
            limits: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub grid_point: String,
    pub strategy: String,
    pub wer: f64,
    pub search_error_rate: f64,
    pub same_trans_pct: f64,
    pub same_score_pct: f64,
    pub hypotheses_expanded: u64,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepGridDetail {
    pub grid_point: String,
    pub comparison: ComparisonReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub header: String,
    pub rows: Vec<SweepRow>,
    pub details: Vec<SweepGridDetail>,
}

impl SweepReport {
    /// Zero the measured wall times so that serialized reports are
    /// byte-identical across reruns.
    pub fn strip_timing(&mut self) {
        for row in &mut self.rows {
            row.wall_ms = 0;
        }
    }
}

fn strategy_name(s: Strategy) -> &'static str {
    match s {
        Strategy::TimeSync => "time_sync",
        Strategy::LabelSyncFull => "label_sync_full",
        Strategy::LabelSyncTwoStage => "label_sync_two_stage",
    }
}

struct UttOutcome {
    entry: ResultEntry,
    wer: WerBreakdown,
    search_error: bool,
    expanded: u64,
    wall_ms: u64,
}

fn run_strategy(
    set: &UtteranceSet,
    oracle_best: &[ScoredSequence],
    lm: Option<&NGramLM>,
    strategy: Strategy,
    point: &GridPoint,
    config: &SweepConfig,
) -> Result<Vec<UttOutcome>> {
    let vocab = set.vocabulary();
    let decode_one = |utt: &Utterance, best: &ScoredSequence| -> Result<UttOutcome> {
        let model = &set.models[utt.model_index];
        let dc = DecodeConfig {
            strategy,
            prune: point.prune_for(strategy),
            lambda: config.lambda,
            nbest: config.nbest,
            limits: config.limits,
        };
        // a failed utterance is recorded as an empty decode, never fatal
        let (labels, score, expanded, wall_ms) = match decode(model, lm, &dc) {
            Ok(result) => match result.best() {
                Some(seq) => (
                    seq.labels.clone(),
                    seq.score,
                    result.stats.expanded,
                    result.stats.wall_ms,
                ),
                None => (Vec::new(), LogScore::INFINITY, result.stats.expanded, 0),
            },
            Err(_) => (Vec::new(), LogScore::INFINITY, 0, 0),
        };
        Ok(UttOutcome {
            entry: ResultEntry {
                id: utt.id.clone(),
                labels: vocab.render(&labels),
                score: finite_score(score.value()),
            },
            wer: wer(&utt.reference, &labels),
            search_error: labels != best.labels,
            expanded,
            wall_ms,
        })
    };

    if config.workers <= 1 {
        return set
            .utterances
            .iter()
            .zip(oracle_best)
            .map(|(u, b)| decode_one(u, b))
            .collect();
    }
    let n = set.utterances.len();
    let mut slots: Vec<Option<Result<UttOutcome>>> = Vec::with_capacity(n);
    slots.resize_with(n, || None);
    let chunk = n.div_ceil(config.workers);
    std::thread::scope(|scope| {
        let mut remaining: &mut [Option<Result<UttOutcome>>] = &mut slots;
        for w in 0..config.workers {
            let lo = w * chunk;
            if lo >= n {
                break;
            }
            let take = chunk.min(n - lo);
            let (head, tail) = remaining.split_at_mut(take);
            remaining = tail;
            let decode_one = &decode_one;
            scope.spawn(move || {
                for (off, slot) in head.iter_mut().enumerate() {
                    let idx = lo + off;
                    *slot = Some(decode_one(&set.utterances[idx], &oracle_best[idx]));
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("worker filled every slot"))
        .collect()
}

/// Decode the whole set under both strategies at every grid point,
/// scoring WER against the references and search errors against the exact
/// Viterbi oracle.
pub fn pruning_sweep(
    set: &UtteranceSet,
    lm: Option<&NGramLM>,
    config: &SweepConfig,
) -> Result<SweepReport> {
    let limits_note = "unit-level WER (labels stand in for words)";
    let mode = match set.reference_mode {
        ReferenceMode::OracleBest => "oracle-best",
        ReferenceMode::Sampled => "sampled",
    };
    let header = format!(
        "{limits_note}; references={mode}; seed={}; utterances={}",
        set.seed,
        set.utterances.len()
    );

    // Exact Viterbi references for search-error scoring, one per utterance.
    let oracle_best: Vec<ScoredSequence> = set
        .utterances
        .iter()
        .map(|u| {
            let model = &set.models[u.model_index];
            let limits = config
                .limits
                .unwrap_or_else(|| SearchLimits::for_topology(model.topology()));
            match model {
                AnyModel::Transducer(m) => viterbi_best_transducer(m, lm, config.lambda, &limits),
                AnyModel::Segmental(m) => exact_best_segmental(m, lm, config.lambda, &limits),
            }
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut details = Vec::new();
    for point in &config.grid {
        let out_a = run_strategy(set, &oracle_best, lm, config.strategy_a, point, config)?;
        let out_b = run_strategy(set, &oracle_best, lm, config.strategy_b, point, config)?;
        let entries_a: Vec<ResultEntry> = out_a.iter().map(|o| o.entry.clone()).collect();
        let entries_b: Vec<ResultEntry> = out_b.iter().map(|o| o.entry.clone()).collect();
        let mut comparison = compare_decodes(&entries_a, &entries_b, config.score_tolerance)?;

        let aggregate = |outs: &[UttOutcome]| -> (f64, f64, u64, u64) {
            let total_ref: usize = set.utterances.iter().map(|u| u.reference.len().max(1)).sum();
            let edits: usize = outs.iter().map(|o| o.wer.edits()).sum();
            let errors = outs.iter().filter(|o| o.search_error).count();
            (
                edits as f64 / total_ref as f64,
                errors as f64 / outs.len().max(1) as f64,
                outs.iter().map(|o| o.expanded).sum(),
                outs.iter().map(|o| o.wall_ms).sum(),
            )
        };
        let (wer_a, err_a, exp_a, wall_a) = aggregate(&out_a);
        let (wer_b, err_b, exp_b, wall_b) = aggregate(&out_b);
        comparison.search_error_rate_a = Some(err_a);
        comparison.search_error_rate_b = Some(err_b);
        comparison.wer_a = Some(wer_a);
        comparison.wer_b = Some(wer_b);

        rows.push(SweepRow {
            grid_point: point.label(),
            strategy: strategy_name(config.strategy_a).to_string(),
            wer: wer_a,
            search_error_rate: err_a,
            same_trans_pct: comparison.same_trans_pct,
            same_score_pct: comparison.same_score_pct,
            hypotheses_expanded: exp_a,
            wall_ms: wall_a,
        });
        rows.push(SweepRow {
            grid_point: point.label(),
            strategy: strategy_name(config.strategy_b).to_string(),
            wer: wer_b,
            search_error_rate: err_b,
            same_trans_pct: comparison.same_trans_pct,
            same_score_pct: comparison.same_score_pct,
            hypotheses_expanded: exp_b,
            wall_ms: wall_b,
        });
        details.push(SweepGridDetail {
            grid_point: point.label(),
            comparison,
        });
    }
    Ok(SweepReport {
        header,
        rows,
        details,
    })
}

/// Render the sweep as CSV. Wall time is zeroed unless `timing` is set so
/// that reruns with identical seeds are byte-identical.
pub fn sweep_to_csv(report: &SweepReport, timing: bool) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {}\n", report.header));
    out.push_str(
        "grid_point,strategy,wer,search_error_rate,same_trans_pct,same_score_pct,hypotheses_expanded,wall_ms\n",
    );
    for row in &report.rows {
        let wall = if timing { row.wall_ms } else { 0 };
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.4},{:.4},{},{}\n",
            row.grid_point,
            row.strategy,
            row.wer,
            row.search_error_rate,
            row.same_trans_pct,
            row.same_score_pct,
            row.hypotheses_expanded,
            wall
        ));
    }
    out
}

/// Manifest layout of an utterance set on disk.
#[derive(Serialize, Deserialize)]
struct SetManifest {
    format_version: u64,
    seed: u64,
    reference_mode: ReferenceMode,
    models: Vec<String>,
    utterances: Vec<ManifestUtterance>,
}

#[derive(Serialize, Deserialize)]
struct ManifestUtterance {
    id: String,
    model: usize,
    reference: Vec<String>,
}

/// Write a set as `manifest.json` plus canonical model files under
/// `models/`.
pub fn save_utterance_set(set: &UtteranceSet, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir.join("models"))?;
    let mut model_paths = Vec::new();
    for (i, model) in set.models.iter().enumerate() {
        let rel = format!("models/m{i:04}.json");
        crate::models::save_model(model, &dir.join(&rel))?;
        model_paths.push(rel);
    }
    let vocab = set.vocabulary();
    let manifest = SetManifest {
        format_version: 1,
        seed: set.seed,
        reference_mode: set.reference_mode,
        models: model_paths,
        utterances: set
            .utterances
            .iter()
            .map(|u| ManifestUtterance {
                id: u.id.clone(),
                model: u.model_index,
                reference: vocab.render(&u.reference),
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}

pub fn load_utterance_set(manifest_path: &Path) -> Result<UtteranceSet> {
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let text = std::fs::read_to_string(manifest_path)?;
    let manifest: SetManifest = serde_json::from_str(&text).map_err(|e| TransegError::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        detail: e.to_string(),
    })?;
    if manifest.format_version != 1 {
        return Err(TransegError::VersionMismatch {
            found: manifest.format_version,
            expected: 1,
        });
    }
    let mut models = Vec::new();
    for rel in &manifest.models {
        models.push(crate::models::load_model(&dir.join(rel))?);
    }
    if models.is_empty() {
        return Err(TransegError::Config("set has no models".into()));
    }
    let vocab = models[0].vocabulary().clone();
    let utterances = manifest
        .utterances
        .iter()
        .map(|u| {
            Ok(Utterance {
                id: u.id.clone(),
                model_index: u.model,
                reference: vocab.parse_labels(&u.reference)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UtteranceSet {
        seed: manifest.seed,
        reference_mode: manifest.reference_mode,
        models,
        utterances,
    })
}

#[derive(Serialize, Deserialize)]
pub struct ResultsFile {
    pub format_version: u64,
    pub strategy: String,
    pub entries: Vec<ResultEntry>,
}

pub fn save_results(results: &ResultsFile, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(results).expect("results serialize");
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_results(path: &Path) -> Result<ResultsFile> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| TransegError::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        detail: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<LabelId> {
        v.iter().map(|&i| LabelId(i)).collect()
    }

    #[test]
    fn wer_identity() {
        let r = wer(&ids(&[0, 1, 2]), &ids(&[0, 1, 2]));
        assert_eq!(
            (r.substitutions, r.insertions, r.deletions, r.rate),
            (0, 0, 0, 0.0)
        );
    }

    #[test]
    fn wer_single_substitution() {
        let r = wer(&ids(&[0, 1, 2]), &ids(&[0, 9, 2]));
        assert_eq!((r.substitutions, r.insertions, r.deletions), (1, 0, 0));
        assert!((r.rate - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn wer_two_insertions() {
        let r = wer(&ids(&[0, 1]), &ids(&[0, 1, 2, 3]));
        assert_eq!((r.substitutions, r.insertions, r.deletions), (0, 2, 0));
        assert!((r.rate - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wer_empty_reference_flagged() {
        let r = wer(&ids(&[]), &ids(&[1, 2]));
        assert!(r.empty_reference);
        assert_eq!(r.insertions, 2);
        assert!((r.rate - 2.0).abs() < 1e-15);
    }

    /// Independent oracle: plain recursive edit distance, memoized.
    fn edit_distance_reference(a: &[LabelId], b: &[LabelId]) -> usize {
        fn rec(
            a: &[LabelId],
            b: &[LabelId],
            i: usize,
            j: usize,
            memo: &mut Vec<Vec<Option<usize>>>,
        ) -> usize {
            if i == 0 {
                return j;
            }
            if j == 0 {
                return i;
            }
            if let Some(v) = memo[i][j] {
                return v;
            }
            let sub = rec(a, b, i - 1, j - 1, memo)
                + usize::from(a[i - 1] != b[j - 1]);
            let ins = rec(a, b, i, j - 1, memo) + 1;
            let del = rec(a, b, i - 1, j, memo) + 1;
            let v = sub.min(ins).min(del);
            memo[i][j] = Some(v);
            v
        }
        let mut memo = vec![vec![None; b.len() + 1]; a.len() + 1];
        rec(a, b, a.len(), b.len(), &mut memo)
    }

    #[test]
    fn wer_triangle_consistency_spot_checks() {
        let triples = [
            (ids(&[0, 1, 2]), ids(&[0, 2]), ids(&[1, 1, 2, 0])),
            (ids(&[]), ids(&[0]), ids(&[0, 1])),
            (ids(&[2, 2, 2]), ids(&[2]), ids(&[0, 1, 2])),
        ];
        for (x, y, z) in &triples {
            let d = |a: &[LabelId], b: &[LabelId]| wer(a, b).edits();
            assert!(d(x, z) <= d(x, y) + d(y, z));
            assert_eq!(d(x, x), 0);
        }
    }

    #[test]
    fn wer_matches_the_recursive_oracle_on_random_pairs() {
        let mut rng = crate::rng::SplitMix64::new(12);
        for _ in 0..300 {
            let len_a = rng.next_below(9);
            let len_b = rng.next_below(9);
            let a: Vec<LabelId> = (0..len_a).map(|_| LabelId(rng.next_below(3) as u32)).collect();
            let b: Vec<LabelId> = (0..len_b).map(|_| LabelId(rng.next_below(3) as u32)).collect();
            assert_eq!(wer(&a, &b).edits(), edit_distance_reference(&a, &b));
        }
    }

    #[test]
    fn compare_counts_score_agreement_only_on_equal_labels() {
        let a = vec![
            ResultEntry { id: "u0".into(), labels: vec!["a".into()], score: 1.0 },
            ResultEntry { id: "u1".into(), labels: vec!["b".into()], score: 2.0 },
        ];
        let mut b = a.clone();
        b[1].score = 2.5;
        let report = compare_decodes(&a, &b, 1e-4).unwrap();
        assert!((report.same_trans_pct - 100.0).abs() < 1e-12);
        assert!((report.same_score_pct - 50.0).abs() < 1e-12);
        // identical lists: 100 / 100
        let report = compare_decodes(&a, &a, 1e-4).unwrap();
        assert!((report.same_trans_pct - 100.0).abs() < 1e-12);
        assert!((report.same_score_pct - 100.0).abs() < 1e-12);
    }

    #[test]
    fn compare_rejects_id_mismatch() {
        let a = vec![ResultEntry { id: "u0".into(), labels: vec![], score: 0.0 }];
        let b = vec![ResultEntry { id: "u1".into(), labels: vec![], score: 0.0 }];
        assert!(compare_decodes(&a, &b, 1e-4).is_err());
    }

    #[test]
    fn full_sum_rescoring_uses_posteriors() {
        let m = crate::fixtures::const_blank_rnnt();
        let limits = SearchLimits::for_topology(m.topology());
        let decoded = crate::search::decode_time_sync(
            &m,
            None,
            0.0,
            &crate::search::PruneConfig::none(),
            &limits,
            3,
        );
        let any = AnyModel::Transducer(m.clone());
        let rescored = full_sum_rescore(&any, &decoded.nbest);
        // the single-label sequence gains mass from its two alignments:
        // 0.288 > 0.144, while the empty sequence keeps its single path
        let empty = rescored.iter().find(|s| s.labels.is_empty()).unwrap();
        assert!((empty.score.prob() - 0.36).abs() < 1e-12);
        let one = rescored
            .iter()
            .find(|s| s.labels == vec![LabelId(0)])
            .unwrap();
        assert!((one.score.prob() - 0.288).abs() < 1e-12);
        assert!(rescored[0].labels.is_empty());
    }

    #[test]
    fn utterance_sets_are_deterministic() {
        let params = SuiteParams {
            seed: 77,
            count: 4,
            topology: Topology::strict_monotonic(4),
            vocab_size: 2,
            context_order: 1,
            smoothness: 0.8,
            blank_bias: None,
            reference_mode: ReferenceMode::Sampled,
            shared_model: false,
        };
        let a = generate_utterance_set(&params).unwrap();
        let b = generate_utterance_set(&params).unwrap();
        assert_eq!(a.models, b.models);
        let refs_a: Vec<_> = a.utterances.iter().map(|u| u.reference.clone()).collect();
        let refs_b: Vec<_> = b.utterances.iter().map(|u| u.reference.clone()).collect();
        assert_eq!(refs_a, refs_b);
    }

    #[test]
    fn oracle_best_references_give_zero_unpruned_wer() {
        let params = SuiteParams {
            seed: 3,
            count: 3,
            topology: Topology::strict_monotonic(3),
            vocab_size: 2,
            context_order: 0,
            smoothness: 0.6,
            blank_bias: None,
            reference_mode: ReferenceMode::OracleBest,
            shared_model: false,
        };
        let set = generate_utterance_set(&params).unwrap();
        let config = SweepConfig::new(
            vec![GridPoint::Exhaustive],
            Strategy::TimeSync,
            Strategy::LabelSyncFull,
        );
        let report = pruning_sweep(&set, None, &config).unwrap();
        for row in &report.rows {
            assert_eq!(row.wer, 0.0);
            assert_eq!(row.search_error_rate, 0.0);
        }
        assert!((report.rows[0].same_score_pct - 100.0).abs() < 1e-12);
    }
}
