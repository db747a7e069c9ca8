//! Acceptance suite. Each test covers one numbered criterion and prints a
//! PASS line with the measured quantities (run with `-- --nocapture` to
//! see them).

use std::time::Instant;

use transeg::audit::{
    equivalence_deviation, segmental_round_trip_deviation, transducer_round_trip_deviation,
};
use transeg::fixtures;
use transeg::harness::{
    generate_utterance_set, pruning_sweep, sweep_to_csv, GridPoint, ReferenceMode, SuiteParams,
    SweepConfig, SweepReport,
};
use transeg::lm::generate_random_lm;
use transeg::models::{
    generate_random_segmental, generate_random_transducer, AnyModel, SegmentalModel,
    TransducerModel,
};
use transeg::oracle::{
    boundary_tuples, enumerate_paths, exact_best_segmental, exact_best_transducer,
    full_sum_segmental, full_sum_segmental_by_enumeration, full_sum_transducer,
    full_sum_transducer_by_enumeration, label_sequences, total_mass_segmental,
    total_mass_transducer, viterbi_best_transducer, SearchLimits,
};
use transeg::score::LogScore;
use transeg::search::{
    decode_label_sync_full, decode_label_sync_two_stage, decode_time_sync, PruneConfig, Strategy,
};
use transeg::topology::{Topology, TopologyKind};
use transeg::transform::{segmental_to_transducer, transducer_to_segmental};
use transeg::vocab::LabelId;

/// The standard seeded model lattice: both topologies, T in 2..=5,
/// vocabulary sizes 1..=3, context orders 0..=1, three smoothness levels.
/// 144 models per family.
fn suite_params() -> Vec<(u64, Topology, usize, usize, f64)> {
    let mut out = Vec::new();
    let mut seed = 7001u64;
    for kind in [TopologyKind::Rnnt, TopologyKind::StrictMonotonic] {
        for frames in 2..=5u32 {
            for vocab in 1..=3usize {
                for k in 0..=1usize {
                    for smoothness in [0.9, 0.5, 0.15] {
                        out.push((seed, Topology { kind, frames }, vocab, k, smoothness));
                        seed += 1;
                    }
                }
            }
        }
    }
    out
}

fn transducer_suite() -> Vec<TransducerModel> {
    suite_params()
        .into_iter()
        .map(|(seed, topology, vocab, k, smoothness)| {
            generate_random_transducer(seed, topology, vocab, k, smoothness)
        })
        .collect()
}

fn segmental_suite() -> Vec<SegmentalModel> {
    suite_params()
        .into_iter()
        .map(|(seed, topology, vocab, k, smoothness)| {
            generate_random_segmental(seed ^ 0x5e6, topology, vocab, k, smoothness)
        })
        .collect()
}

fn equivalence_bound(topology: Topology) -> usize {
    match topology.kind {
        TopologyKind::Rnnt => 4,
        TopologyKind::StrictMonotonic => topology.frames as usize,
    }
}

/// Criterion 1: rewriting a transducer as a segmental model preserves the
/// label posterior within 1e-9 for every sequence in the audited space.
#[test]
fn criterion_1_equivalence_transducer_to_segmental() {
    let start = Instant::now();
    let suite = transducer_suite();
    assert!(suite.len() >= 100);
    let mut worst: f64 = 0.0;
    for m in &suite {
        let dev = equivalence_deviation(
            &AnyModel::Transducer(m.clone()),
            equivalence_bound(m.topology()),
        );
        worst = worst.max(dev);
        assert!(
            dev <= 1e-9,
            "posterior deviation {dev:.3e} on a {:?} model",
            m.topology()
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 120, "took {elapsed:?}, budget 2 minutes");
    println!(
        "criterion 1 PASS — t2s posterior preserved on {} models, worst deviation {worst:.3e}, {elapsed:.2?}",
        suite.len()
    );
}

/// Criterion 2: the symmetric statement for native segmental models.
#[test]
fn criterion_2_equivalence_segmental_to_transducer() {
    let suite = segmental_suite();
    assert!(suite.len() >= 100);
    let mut worst: f64 = 0.0;
    for m in &suite {
        let dev = equivalence_deviation(
            &AnyModel::Segmental(m.clone()),
            equivalence_bound(m.topology()),
        );
        worst = worst.max(dev);
        assert!(dev <= 1e-9, "posterior deviation {dev:.3e}");
    }
    println!(
        "criterion 2 PASS — s2t posterior preserved on {} models, worst deviation {worst:.3e}",
        suite.len()
    );
}

/// Criterion 3: round trips reproduce the source rows within 1e-12 — the
/// transducer direction verbatim, the segmental direction on the
/// factorization invariants (boundary cells below T, pre-final label
/// rows, the joint final-frame mass, and the end route).
#[test]
fn criterion_3_round_trips() {
    let mut worst_t: f64 = 0.0;
    for m in &transducer_suite() {
        let dev = transducer_round_trip_deviation(m);
        worst_t = worst_t.max(dev);
        assert!(dev <= 1e-12, "transducer round trip deviates by {dev:.3e}");
    }
    let mut worst_s: f64 = 0.0;
    for m in &segmental_suite() {
        let dev = segmental_round_trip_deviation(m);
        worst_s = worst_s.max(dev);
        assert!(dev <= 1e-12, "segmental round trip deviates by {dev:.3e}");
    }
    println!(
        "criterion 3 PASS — round trips reproduce rows (worst {worst_t:.3e} transducer, {worst_s:.3e} segmental)"
    );
}

/// Criterion 4: every strictly monotonic model is exactly normalized, and
/// the hand-computed mass decomposition of the two-label fixture matches
/// term by term.
#[test]
fn criterion_4_normalization() {
    let mut checked = 0usize;
    for m in &transducer_suite() {
        if m.topology().kind != TopologyKind::StrictMonotonic {
            continue;
        }
        let report = total_mass_transducer(m, 0);
        assert!(report.exact);
        assert!(
            (report.mass.prob() - 1.0).abs() <= 1e-9,
            "mass {}",
            report.mass.prob()
        );
        checked += 1;
    }
    for m in &segmental_suite() {
        if m.topology().kind != TopologyKind::StrictMonotonic {
            continue;
        }
        let report = total_mass_segmental(m, 0);
        assert!((report.mass.prob() - 1.0).abs() <= 1e-9);
        checked += 1;
    }

    let fixture = fixtures::two_label_strict();
    let report = total_mass_transducer(&fixture, 0);
    assert!((report.mass.prob() - 1.0).abs() < 1e-12);
    let expected: &[(&[u32], f64)] = &[
        (&[], 0.10),
        (&[0], 0.27),
        (&[1], 0.23),
        (&[0, 1], 0.20),
        (&[1, 0], 0.03),
        (&[0, 0], 0.05),
        (&[1, 1], 0.12),
    ];
    for (labels, p) in expected {
        let key: Vec<LabelId> = labels.iter().map(|&i| LabelId(i)).collect();
        let found = report.per_sequence.iter().find(|(l, _)| *l == key).unwrap();
        assert!((found.1.prob() - p).abs() < 1e-14);
    }
    println!(
        "criterion 4 PASS — {checked} strictly monotonic models have unit mass; fixture decomposition 0.10+0.27+0.23+0.20+0.03+0.05+0.12 = 1.00 exact"
    );
}

/// Criterion 5: with pruning disabled all three strategies return the
/// exact Viterbi decision, with and without LM fusion.
#[test]
fn criterion_5_unpruned_search_agreement() {
    let start = Instant::now();
    let suite = transducer_suite();
    let mut runs = 0usize;
    for m in &suite {
        let limits = SearchLimits::for_topology(m.topology());
        let lm = generate_random_lm(0xf00d ^ m.vocabulary().len() as u64, 2, m.vocabulary(), 0.7);
        for lambda in [0.0, 0.5] {
            let lm_opt = if lambda == 0.0 { None } else { Some(&lm) };
            let best = exact_best_transducer(m, lm_opt, lambda, &limits).unwrap();
            let view = transducer_to_segmental(m);
            let results = [
                decode_time_sync(m, lm_opt, lambda, &PruneConfig::none(), &limits, 1),
                decode_label_sync_full(&view, lm_opt, lambda, &PruneConfig::none(), &limits, 1),
                decode_label_sync_two_stage(
                    &view,
                    lm_opt,
                    lambda,
                    usize::MAX,
                    usize::MAX,
                    &limits,
                    1,
                ),
            ];
            for r in &results {
                let got = r.best().expect("unpruned decode returns a hypothesis");
                assert_eq!(got.labels, best.labels, "{:?} lambda {lambda}", m.topology());
                assert!((got.score.value() - best.score.value()).abs() < 1e-8);
            }
            runs += 1;
        }
    }
    // native segmental side
    for m in segmental_suite().iter().step_by(3) {
        let limits = SearchLimits::for_topology(m.topology());
        let lm = generate_random_lm(0x5eed ^ 0xaaaa, 2, m.vocabulary(), 0.7);
        for lambda in [0.0, 0.5] {
            let lm_opt = if lambda == 0.0 { None } else { Some(&lm) };
            let best = exact_best_segmental(m, lm_opt, lambda, &limits).unwrap();
            let view = segmental_to_transducer(m);
            let results = [
                decode_time_sync(&view, lm_opt, lambda, &PruneConfig::none(), &limits, 1),
                decode_label_sync_full(m, lm_opt, lambda, &PruneConfig::none(), &limits, 1),
                decode_label_sync_two_stage(
                    m,
                    lm_opt,
                    lambda,
                    usize::MAX,
                    usize::MAX,
                    &limits,
                    1,
                ),
            ];
            for r in &results {
                let got = r.best().unwrap();
                assert_eq!(got.labels, best.labels);
                assert!((got.score.value() - best.score.value()).abs() < 1e-8);
            }
            runs += 1;
        }
    }
    println!(
        "criterion 5 PASS — three strategies match the exact Viterbi decision in {runs} unpruned runs ({:.2?})",
        start.elapsed()
    );
}

fn smooth_suite_config() -> (SuiteParams, SweepConfig) {
    let params = SuiteParams {
        seed: 99,
        count: 200,
        topology: Topology::rnnt(7),
        vocab_size: 2,
        context_order: 1,
        smoothness: 0.9,
        blank_bias: None,
        reference_mode: ReferenceMode::OracleBest,
        shared_model: false,
    };
    let mut grid: Vec<GridPoint> = transeg::harness::default_q_grid();
    grid.push(GridPoint::Exhaustive);
    let mut config = SweepConfig::new(grid, Strategy::TimeSync, Strategy::LabelSyncFull);
    config.workers = 2;
    config.limits = Some(SearchLimits {
        max_labels: 5,
        max_labels_per_frame: 3,
    });
    (params, config)
}

fn rate(report: &SweepReport, point: &str, strategy: &str) -> f64 {
    report
        .rows
        .iter()
        .find(|r| r.grid_point == point && r.strategy == strategy)
        .unwrap_or_else(|| panic!("row {point}/{strategy} missing"))
        .search_error_rate
}

/// Criterion 6: on the smooth suite, label-synchronous search errs
/// strictly more than time-synchronous search at small Q, the same-score
/// percentage is non-decreasing over the published grid, and exhaustive
/// settings agree completely.
#[test]
fn criterion_6_threshold_pruning_trend() {
    let start = Instant::now();
    let (params, config) = smooth_suite_config();
    let set = generate_utterance_set(&params).unwrap();
    let report = pruning_sweep(&set, None, &config).unwrap();

    let err_time_q4 = rate(&report, "Q=4", "time_sync");
    let err_label_q4 = rate(&report, "Q=4", "label_sync_full");
    assert!(
        err_label_q4 > err_time_q4,
        "label-sync must err strictly more at Q=4: {err_label_q4} vs {err_time_q4}"
    );

    let grid_points = ["Q=4", "Q=6", "Q=8", "Q=10", "Q=12", "Q=14", "Q=20"];
    let mut prev = -1.0;
    for point in grid_points {
        let row = report
            .rows
            .iter()
            .find(|r| r.grid_point == point && r.strategy == "time_sync")
            .unwrap();
        assert!(
            row.same_score_pct >= prev,
            "same-score percentage decreased at {point}"
        );
        prev = row.same_score_pct;
    }

    for strategy in ["time_sync", "label_sync_full"] {
        assert_eq!(rate(&report, "exhaustive", strategy), 0.0);
        let row = report
            .rows
            .iter()
            .find(|r| r.grid_point == "exhaustive" && r.strategy == strategy)
            .unwrap();
        assert_eq!(row.same_score_pct, 100.0);
    }
    println!(
        "criterion 6 PASS — Q=4 search errors {:.1}% label-sync vs {:.1}% time-sync; same-score {:.1}%..100% non-decreasing over the grid ({:.2?})",
        100.0 * err_label_q4,
        100.0 * err_time_q4,
        report
            .rows
            .iter()
            .find(|r| r.grid_point == "Q=4")
            .unwrap()
            .same_score_pct,
        start.elapsed()
    );
}

/// Criterion 7: on the sharp short-segment suite the beam-matched gap is
/// smaller than criterion 6's threshold gap, and beams beyond saturation
/// leave every 1-best unchanged.
#[test]
fn criterion_7_beam_pruning_trend() {
    let start = Instant::now();
    // criterion 6's gap at Q=4, recomputed on its own suite
    let (smooth_params, mut smooth_config) = smooth_suite_config();
    smooth_config.grid = vec![GridPoint::Threshold { q_prune: 4.0 }];
    let smooth_set = generate_utterance_set(&smooth_params).unwrap();
    let smooth = pruning_sweep(&smooth_set, None, &smooth_config).unwrap();
    let gap_q = rate(&smooth, "Q=4", "label_sync_full") - rate(&smooth, "Q=4", "time_sync");

    let sharp_params = SuiteParams {
        seed: 4242,
        count: 200,
        topology: Topology::strict_monotonic(7),
        vocab_size: 2,
        context_order: 1,
        smoothness: 0.2,
        blank_bias: Some(0.3),
        reference_mode: ReferenceMode::OracleBest,
        shared_model: false,
    };
    let grid = vec![
        GridPoint::Beam { b: 1, b_t: 1 },
        GridPoint::Beam { b: 2, b_t: 2 },
        GridPoint::Beam { b: 4, b_t: 4 },
        GridPoint::Beam { b: 12, b_t: 4 },
        GridPoint::Beam { b: 16, b_t: 16 },
        GridPoint::Beam { b: 32, b_t: 32 },
    ];
    let mut config = SweepConfig::new(grid, Strategy::TimeSync, Strategy::LabelSyncTwoStage);
    config.workers = 2;
    let set = generate_utterance_set(&sharp_params).unwrap();
    let report = pruning_sweep(&set, None, &config).unwrap();

    let gap_beam =
        rate(&report, "B=1;Bt=1", "label_sync_two_stage") - rate(&report, "B=1;Bt=1", "time_sync");
    assert!(
        gap_beam < gap_q,
        "beam-matched gap {gap_beam} must stay below the threshold gap {gap_q}"
    );

    // saturation: the last two beam settings return identical 1-bests
    let detail = |point: &str| {
        report
            .details
            .iter()
            .find(|d| d.grid_point == point)
            .unwrap()
    };
    let saturated = detail("B=16;Bt=16");
    let beyond = detail("B=32;Bt=32");
    for (a, b) in saturated
        .comparison
        .utterances
        .iter()
        .zip(&beyond.comparison.utterances)
    {
        assert_eq!(a.labels_a, b.labels_a, "time-sync 1-best changed past saturation");
        assert_eq!(a.labels_b, b.labels_b, "two-stage 1-best changed past saturation");
        assert_eq!(a.score_a, b.score_a);
        assert_eq!(a.score_b, b.score_b);
    }
    println!(
        "criterion 7 PASS — beam-matched gap {:.3} < threshold gap {:.3}; beams past saturation leave all 400 1-bests unchanged ({:.2?})",
        gap_beam,
        gap_q,
        start.elapsed()
    );
}

/// Criterion 8: identical seeds and grids give byte-identical CSV output.
#[test]
fn criterion_8_sweep_determinism() {
    let params = SuiteParams {
        seed: 31,
        count: 30,
        topology: Topology::rnnt(5),
        vocab_size: 2,
        context_order: 1,
        smoothness: 0.8,
        blank_bias: None,
        reference_mode: ReferenceMode::Sampled,
        shared_model: false,
    };
    let grid = vec![
        GridPoint::Threshold { q_prune: 4.0 },
        GridPoint::Beam { b: 2, b_t: 2 },
        GridPoint::Exhaustive,
    ];
    let mut config = SweepConfig::new(grid, Strategy::TimeSync, Strategy::LabelSyncFull);
    config.workers = 2;
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let set = generate_utterance_set(&params).unwrap();
        let report = pruning_sweep(&set, None, &config).unwrap();
        outputs.push(sweep_to_csv(&report, false));
    }
    assert_eq!(outputs[0], outputs[1], "sweep rerun must be byte-identical");
    println!(
        "criterion 8 PASS — rerun CSV byte-identical ({} bytes)",
        outputs[0].len()
    );
}

/// Criterion 9: enumeration and DP full-sums agree within 1e-10 across the
/// suite; the exhaustive Viterbi decision equals the minimum enumerated
/// path score, and the DP Viterbi twin agrees with it.
#[test]
fn criterion_9_oracle_self_consistency() {
    let suite = transducer_suite();
    let mut checked_sums = 0usize;
    for m in &suite {
        let vocab_size = m.vocabulary().len();
        for labels in label_sequences(vocab_size, 3) {
            let dp = full_sum_transducer(m, &labels);
            let en = full_sum_transducer_by_enumeration(m, &labels).unwrap();
            if dp.is_impossible() && en.is_impossible() {
                continue;
            }
            assert!(
                (dp.value() - en.value()).abs() < 1e-10,
                "full-sum mismatch: {} vs {}",
                dp.value(),
                en.value()
            );
            checked_sums += 1;
        }
    }
    for m in segmental_suite().iter().step_by(2) {
        for labels in label_sequences(m.vocabulary().len(), 3) {
            let dp = full_sum_segmental(m, &labels);
            let en = full_sum_segmental_by_enumeration(m, &labels).unwrap();
            if dp.is_impossible() && en.is_impossible() {
                continue;
            }
            assert!((dp.value() - en.value()).abs() < 1e-10);
            checked_sums += 1;
        }
    }

    // exact_best equals the minimum enumerated path score over the capped
    // space, and the DP Viterbi agrees
    let mut checked_best = 0usize;
    for m in suite.iter().step_by(4) {
        let limits = SearchLimits::for_topology(m.topology());
        let best = exact_best_transducer(m, None, 0.0, &limits).unwrap();
        let mut minimum = LogScore::INFINITY;
        for labels in label_sequences(m.vocabulary().len(), limits.max_labels) {
            if m.topology().kind == TopologyKind::StrictMonotonic
                && labels.len() > m.topology().frames as usize
            {
                continue;
            }
            for (path, score) in enumerate_paths(m, &labels).unwrap() {
                let seg = transeg::topology::path_to_segmentation(&path);
                if !limits.admits_boundaries(seg.boundaries()) {
                    continue;
                }
                if score.value() < minimum.value() {
                    minimum = score;
                }
            }
        }
        assert!(
            (best.score.value() - minimum.value()).abs() < 1e-12,
            "exact_best {} vs enumerated minimum {}",
            best.score.value(),
            minimum.value()
        );
        let dp = viterbi_best_transducer(m, None, 0.0, &limits).unwrap();
        assert_eq!(dp.labels, best.labels);
        assert!((dp.score.value() - best.score.value()).abs() < 1e-10);
        checked_best += 1;
    }
    // boundary_tuples is the shared enumeration backbone; spot its count
    let topo = Topology::rnnt(4);
    assert_eq!(boundary_tuples(topo, 2).len(), 10); // C(5,2)
    println!(
        "criterion 9 PASS — {checked_sums} full-sum agreements at 1e-10, {checked_best} Viterbi minima matched"
    );
}
