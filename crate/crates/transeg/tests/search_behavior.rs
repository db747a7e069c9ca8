//! Decoder behavior against the exact oracle: unpruned agreement across
//! all three strategies, pruning monotonicity, the label-synchronous
//! pruning pathologies, score bookkeeping, and strategy dispatch.

use transeg::fixtures;
use transeg::lm::{generate_random_lm, uniform_lm};
use transeg::models::{
    generate_random_segmental, generate_random_transducer, AnyModel,
};
use transeg::oracle::{
    exact_best_segmental, exact_best_transducer, score_path, score_segmentation, Alignment,
    SearchLimits,
};
use transeg::score::LogScore;
use transeg::search::{
    decode, decode_label_sync_full, decode_label_sync_two_stage, decode_time_sync, DecodeConfig,
    PruneConfig, PruneMode, Strategy,
};
use transeg::topology::Topology;
use transeg::transform::{segmental_to_transducer, transducer_to_segmental};
use transeg::vocab::LabelId;

fn seeded_topologies() -> Vec<(u64, Topology)> {
    let mut out = Vec::new();
    let mut seed = 100;
    for frames in 2..=4u32 {
        for kind in [Topology::rnnt(frames), Topology::strict_monotonic(frames)] {
            out.push((seed, kind));
            seed += 1;
        }
    }
    out
}

#[test]
fn unpruned_strategies_agree_with_the_oracle() {
    for (seed, topology) in seeded_topologies() {
        let m = generate_random_transducer(seed, topology, 2, 1, 0.7);
        let limits = SearchLimits::for_topology(topology);
        let lm = generate_random_lm(seed ^ 0xbeef, 2, m.vocabulary(), 0.8);
        for lambda in [0.0, 0.5] {
            let lm_opt = if lambda == 0.0 { None } else { Some(&lm) };
            let best = exact_best_transducer(&m, lm_opt, lambda, &limits).unwrap();
            let ts = decode_time_sync(&m, lm_opt, lambda, &PruneConfig::none(), &limits, 1);
            let view = transducer_to_segmental(&m);
            let lf =
                decode_label_sync_full(&view, lm_opt, lambda, &PruneConfig::none(), &limits, 1);
            let two = decode_label_sync_two_stage(
                &view,
                lm_opt,
                lambda,
                usize::MAX,
                usize::MAX,
                &limits,
                1,
            );
            for (name, r) in [("time_sync", &ts), ("label_full", &lf), ("two_stage", &two)] {
                let got = r.best().unwrap();
                assert_eq!(
                    got.labels, best.labels,
                    "{name} labels diverge at seed {seed} {topology:?} lambda {lambda}"
                );
                assert!(
                    (got.score.value() - best.score.value()).abs() < 1e-8,
                    "{name} score diverges at seed {seed}: {} vs {}",
                    got.score.value(),
                    best.score.value()
                );
            }
        }
    }
}

#[test]
fn unpruned_agreement_holds_for_native_segmental_models() {
    for (seed, topology) in seeded_topologies() {
        let m = generate_random_segmental(seed, topology, 2, 1, 0.6);
        let limits = SearchLimits::for_topology(topology);
        let best = exact_best_segmental(&m, None, 0.0, &limits).unwrap();
        let view = segmental_to_transducer(&m);
        let ts = decode_time_sync(&view, None, 0.0, &PruneConfig::none(), &limits, 1);
        let lf = decode_label_sync_full(&m, None, 0.0, &PruneConfig::none(), &limits, 1);
        let two =
            decode_label_sync_two_stage(&m, None, 0.0, usize::MAX, usize::MAX, &limits, 1);
        for (name, r) in [("time_sync", &ts), ("label_full", &lf), ("two_stage", &two)] {
            let got = r.best().unwrap();
            assert_eq!(got.labels, best.labels, "{name} diverges at seed {seed}");
            assert!((got.score.value() - best.score.value()).abs() < 1e-8);
        }
    }
}

#[test]
fn loosening_pruning_never_degrades_the_best_score() {
    for (seed, topology) in seeded_topologies().into_iter().take(4) {
        let m = generate_random_transducer(seed, topology, 3, 1, 0.9);
        let limits = SearchLimits::for_topology(topology);
        // loosest first: tighter pruning may only return equal-or-worse bests
        let mut prev: Option<f64> = None;
        for q in [8.0, 4.0, 2.0, 1.0, 0.5, 0.1] {
            let r = decode_time_sync(&m, None, 0.0, &PruneConfig::threshold(q), &limits, 1);
            let score = r.best().map(|s| s.score.value()).unwrap_or(f64::INFINITY);
            if let Some(p) = prev {
                assert!(
                    score >= p - 1e-12,
                    "loosening from Q={q} degraded the best at seed {seed}"
                );
            }
            prev = Some(score);
        }
        let mut prev: Option<f64> = None;
        for b in [32usize, 8, 2, 1] {
            let r = decode_time_sync(&m, None, 0.0, &PruneConfig::beam(b), &limits, 1);
            let score = r.best().map(|s| s.score.value()).unwrap_or(f64::INFINITY);
            if let Some(p) = prev {
                assert!(score >= p - 1e-12, "seed {seed} beam {b}");
            }
            prev = Some(score);
        }
    }
}

/// Score-threshold pruning never drops the step-best hypothesis, so even a
/// vanishing threshold still yields the greedy chain.
#[test]
fn vanishing_threshold_equals_greedy_beam() {
    for (seed, topology) in seeded_topologies().into_iter().take(4) {
        let m = generate_random_transducer(seed, topology, 2, 0, 0.4);
        let limits = SearchLimits::for_topology(topology);
        let tiny = decode_time_sync(&m, None, 0.0, &PruneConfig::threshold(1e-12), &limits, 1);
        let greedy = decode_time_sync(&m, None, 0.0, &PruneConfig::beam(1), &limits, 1);
        assert_eq!(
            tiny.best().unwrap().labels,
            greedy.best().unwrap().labels,
            "seed {seed}"
        );
    }
}

#[test]
fn label_sync_threshold_pruning_reproduces_the_segment_score_pathology() {
    let m = fixtures::segment_score_trap();
    let limits = SearchLimits::for_topology(m.topology());
    let best = exact_best_transducer(&m, None, 0.0, &limits).unwrap();
    assert_eq!(best.labels, vec![LabelId(1)]);
    assert!((best.score.prob() - 0.36).abs() < 1e-12);

    let view = transducer_to_segmental(&m);
    let q = PruneConfig::threshold(0.35);
    let label_sync = decode_label_sync_full(&view, None, 0.0, &q, &limits, 1);
    let time_sync = decode_time_sync(&m, None, 0.0, &q, &limits, 1);
    // the long-first-segment optimum is pruned label-synchronously ...
    assert_eq!(label_sync.best().unwrap().labels, vec![LabelId(0)]);
    assert!((label_sync.best().unwrap().score.prob() - 0.275).abs() < 1e-12);
    // ... but survives the frame-level comparison
    assert_eq!(time_sync.best().unwrap().labels, best.labels);
    assert!((time_sync.best().unwrap().score.value() - best.score.value()).abs() < 1e-10);
}

#[test]
fn narrow_boundary_beam_commits_before_seeing_labels() {
    let m = fixtures::boundary_commit_trap();
    let limits = SearchLimits::for_topology(m.topology());
    let best = exact_best_transducer(&m, None, 0.0, &limits).unwrap();
    assert_eq!(best.labels, vec![LabelId(0)]);
    assert!((best.score.prob() - 0.4085).abs() < 1e-12);

    let view = transducer_to_segmental(&m);
    let narrow = decode_label_sync_two_stage(&view, None, 0.0, 8, 1, &limits, 1);
    assert_eq!(narrow.best().unwrap().labels, vec![LabelId(1)]);
    let wide = decode_label_sync_two_stage(&view, None, 0.0, 8, 2, &limits, 1);
    assert_eq!(wide.best().unwrap().labels, best.labels);
    assert!((wide.best().unwrap().score.value() - best.score.value()).abs() < 1e-10);
}

/// Every returned score must equal the score recomputed from scratch along
/// the returned alignment.
#[test]
fn reported_scores_match_recomputation() {
    for (seed, topology) in seeded_topologies() {
        let m = generate_random_transducer(seed, topology, 2, 1, 0.8);
        let limits = SearchLimits::for_topology(topology);
        let lm = uniform_lm(2, m.vocabulary());
        let lambda = 0.5;
        let ts = decode_time_sync(
            &m,
            Some(&lm),
            lambda,
            &PruneConfig::threshold(6.0),
            &limits,
            4,
        );
        for seq in &ts.nbest {
            let Some(Alignment::Path(path)) = &seq.alignment else {
                panic!("time-sync must return path alignments");
            };
            let base = score_path(&m, path);
            let fused = LogScore::new(lambda * lm.score(&seq.labels).unwrap().value());
            assert!(
                ((base + fused).value() - seq.score.value()).abs() < 1e-10,
                "seed {seed}: recomputed {} vs reported {}",
                (base + fused).value(),
                seq.score.value()
            );
        }
        let view = transducer_to_segmental(&m);
        let lf = decode_label_sync_full(
            &view,
            Some(&lm),
            lambda,
            &PruneConfig::threshold(6.0),
            &limits,
            4,
        );
        for seq in &lf.nbest {
            let Some(Alignment::Segmentation(seg)) = &seq.alignment else {
                panic!("label-sync must return segmentations");
            };
            let base = score_segmentation(&view, seg);
            let fused = LogScore::new(lambda * lm.score(&seq.labels).unwrap().value());
            assert!(((base + fused).value() - seq.score.value()).abs() < 1e-10);
        }
    }
}

#[test]
fn zero_scale_fusion_is_bitwise_neutral() {
    for (seed, topology) in seeded_topologies().into_iter().take(4) {
        let m = generate_random_transducer(seed, topology, 2, 1, 0.6);
        let limits = SearchLimits::for_topology(topology);
        let lm = generate_random_lm(seed, 2, m.vocabulary(), 0.5);
        for strategy in [
            Strategy::TimeSync,
            Strategy::LabelSyncFull,
            Strategy::LabelSyncTwoStage,
        ] {
            let config = DecodeConfig {
                strategy,
                prune: PruneConfig {
                    mode: PruneMode::Both { q_prune: 5.0, b: 4 },
                    boundary_beam: Some(2),
                },
                lambda: 0.0,
                nbest: 3,
                limits: Some(limits),
            };
            let model = AnyModel::Transducer(m.clone());
            let with = decode(&model, Some(&lm), &config).unwrap();
            let without = decode(&model, None, &config).unwrap();
            assert_eq!(with.stats, without.stats);
            assert_eq!(with.nbest.len(), without.nbest.len());
            for (a, b) in with.nbest.iter().zip(&without.nbest) {
                assert_eq!(a.labels, b.labels);
                assert_eq!(a.score, b.score);
            }
        }
    }
}

#[test]
fn dispatch_wraps_models_without_changing_unpruned_results() {
    let m = fixtures::two_label_strict();
    let any = AnyModel::Transducer(m.clone());
    let limits = SearchLimits::for_topology(m.topology());
    let ts = decode(&any, None, &DecodeConfig::unpruned(Strategy::TimeSync)).unwrap();
    let lf = decode(&any, None, &DecodeConfig::unpruned(Strategy::LabelSyncFull)).unwrap();
    assert!(!ts.auto_transformed);
    assert!(lf.auto_transformed);
    assert_eq!(ts.best().unwrap().labels, lf.best().unwrap().labels);
    assert!(
        (ts.best().unwrap().score.value() - lf.best().unwrap().score.value()).abs() < 1e-8
    );

    let seg = generate_random_segmental(5, Topology::rnnt(3), 2, 1, 0.5);
    let best = exact_best_segmental(&seg, None, 0.0, &limits).unwrap();
    let any = AnyModel::Segmental(seg);
    let ts = decode(&any, None, &DecodeConfig::unpruned(Strategy::TimeSync)).unwrap();
    assert!(ts.auto_transformed);
    let lf = decode(&any, None, &DecodeConfig::unpruned(Strategy::LabelSyncFull)).unwrap();
    assert!(!lf.auto_transformed);
    assert_eq!(ts.best().unwrap().labels, best.labels);
    assert_eq!(lf.best().unwrap().labels, best.labels);
}
