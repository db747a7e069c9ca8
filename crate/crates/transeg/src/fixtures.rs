//! Hand-authored reference models with fully worked-out arithmetic, shared
//! by the unit tests, the acceptance suite, and the CLI examples.

use std::collections::BTreeMap;

use crate::models::{TransducerKey, TransducerModel, TransducerRow};
use crate::score::TableProb;
use crate::topology::Topology;
use crate::vocab::Vocabulary;

/// RNN-T, `T = 2`, single label `a`, order 0, every row
/// `{blank: 0.6, a: 0.4}`.
///
/// Worked values: the all-blank path scores 0.36; the label sequence `a`
/// has two paths of 0.144 each (full sum 0.288); `aa` has three paths of
/// 0.0576 (full sum 0.1728).
pub fn const_blank_rnnt() -> TransducerModel {
    let vocab = Vocabulary::new(["a"]).unwrap();
    let topology = Topology::rnnt(2);
    let mut rows = BTreeMap::new();
    for t in 1..=2 {
        rows.insert(
            TransducerKey {
                t,
                t_prev: None,
                context: vec![],
            },
            TransducerRow {
                labels: vec![TableProb::from_linear(0.4)],
                blank: TableProb::from_linear(0.6),
                unreachable: false,
            },
        );
    }
    TransducerModel::from_rows(vocab, topology, 0, rows)
}

use crate::models::ContextSym;
use crate::vocab::LabelId;

/// Strictly monotonic two-frame model over `{a, b}` with order-1 context,
/// built from `(blank, a, b)` rows for frame 1 (BOS) and the three frame-2
/// contexts (BOS, after `a`, after `b`).
fn strict_two_frame(
    f1: (f64, f64, f64),
    f2_bos: (f64, f64, f64),
    f2_a: (f64, f64, f64),
    f2_b: (f64, f64, f64),
) -> TransducerModel {
    let vocab = Vocabulary::new(["a", "b"]).unwrap();
    let topology = Topology::strict_monotonic(2);
    let row = |(blank, a, b): (f64, f64, f64)| TransducerRow {
        labels: vec![TableProb::from_linear(a), TableProb::from_linear(b)],
        blank: TableProb::from_linear(blank),
        unreachable: false,
    };
    let mut rows = BTreeMap::new();
    rows.insert(
        TransducerKey {
            t: 1,
            t_prev: None,
            context: vec![ContextSym::Bos],
        },
        row(f1),
    );
    for (ctx, r) in [
        (ContextSym::Bos, f2_bos),
        (ContextSym::Label(LabelId(0)), f2_a),
        (ContextSym::Label(LabelId(1)), f2_b),
    ] {
        rows.insert(
            TransducerKey {
                t: 2,
                t_prev: None,
                context: vec![ctx],
            },
            row(r),
        );
    }
    TransducerModel::from_rows(vocab, topology, 1, rows)
}

/// The exact Viterbi best (`b` at frame 2, probability 0.36) needs a long
/// first segment whose joint segment score (0.36) trails the short-segment
/// hypothesis `a`-at-1 (0.55) by ln(0.55/0.36) ≈ 0.424. Label-synchronous
/// threshold pruning at Q = 0.35 discards it and returns `a` (0.275);
/// time-synchronous pruning at the same Q compares frame by frame, keeps
/// the blank route (gap ln(0.55/0.40) ≈ 0.319), and still finds `b`.
pub fn segment_score_trap() -> TransducerModel {
    strict_two_frame(
        (0.4, 0.55, 0.05),
        (0.05, 0.05, 0.9),
        (0.5, 0.25, 0.25),
        (0.5, 0.25, 0.25),
    )
}

/// The boundary marginal from the origin prefers frame 2 (0.55 · 0.9 =
/// 0.495 over 0.45), but the joint best runs through frame 1: `a`-at-1
/// then blank scores 0.43 · 0.95 = 0.4085, beating `b`-at-2 (0.33). A
/// boundary beam of one commits to frame 2 before seeing any label and
/// returns `b`; a beam of two recovers the optimum.
pub fn boundary_commit_trap() -> TransducerModel {
    strict_two_frame(
        (0.55, 0.43, 0.02),
        (0.10, 0.30, 0.60),
        (0.95, 0.025, 0.025),
        (0.95, 0.025, 0.025),
    )
}

/// Strictly monotonic, `T = 2`, labels `{a, b}`, order 0. Frame 1 row
/// `{blank: 0.2, a: 0.5, b: 0.3}`, frame 2 row `{blank: 0.5, a: 0.1, b: 0.4}`.
///
/// The seven label sequences exhaust the probability mass exactly:
/// `{}`: 0.10, `a`: 0.27, `b`: 0.23, `ab`: 0.20, `ba`: 0.03, `aa`: 0.05,
/// `bb`: 0.12.
pub fn two_label_strict() -> TransducerModel {
    let vocab = Vocabulary::new(["a", "b"]).unwrap();
    let topology = Topology::strict_monotonic(2);
    let mut rows = BTreeMap::new();
    rows.insert(
        TransducerKey {
            t: 1,
            t_prev: None,
            context: vec![],
        },
        TransducerRow {
            labels: vec![TableProb::from_linear(0.5), TableProb::from_linear(0.3)],
            blank: TableProb::from_linear(0.2),
            unreachable: false,
        },
    );
    rows.insert(
        TransducerKey {
            t: 2,
            t_prev: None,
            context: vec![],
        },
        TransducerRow {
            labels: vec![TableProb::from_linear(0.1), TableProb::from_linear(0.4)],
            blank: TableProb::from_linear(0.5),
            unreachable: false,
        },
    );
    TransducerModel::from_rows(vocab, topology, 0, rows)
}
