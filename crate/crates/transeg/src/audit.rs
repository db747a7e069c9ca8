//! Model audits: validation, posterior-preservation of the rewrite views,
//! round-trip fidelity, and normalization, bundled for the `verify`
//! command and the acceptance suite.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::models::{context_of, AnyModel, SegmentalModel, TransducerModel};
use crate::oracle::{
    full_sum_segmental, full_sum_transducer, label_sequences, total_mass_segmental,
    total_mass_transducer,
};
use crate::scorer::{SegmentalScorer, TransducerScorer};
use crate::topology::{Frame, TopologyKind};
use crate::transform::{segmental_to_transducer, transducer_to_segmental};
use crate::vocab::LabelId;

#[derive(Clone, Debug, Serialize)]
pub struct AuditCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Maximum absolute posterior deviation (log domain) between a model and
/// its rewrite view over all label sequences up to `s_max` labels.
pub fn equivalence_deviation(model: &AnyModel, s_max: usize) -> f64 {
    let mut worst: f64 = 0.0;
    match model {
        AnyModel::Transducer(m) => {
            let view = transducer_to_segmental(m);
            for labels in label_sequences(m.vocabulary().len(), s_max) {
                let a = full_sum_transducer(m, &labels);
                let b = full_sum_segmental(&view, &labels);
                if a.is_impossible() && b.is_impossible() {
                    continue;
                }
                worst = worst.max((a.value() - b.value()).abs());
            }
        }
        AnyModel::Segmental(m) => {
            let view = segmental_to_transducer(m);
            for labels in label_sequences(m.vocabulary().len(), s_max) {
                let a = full_sum_segmental(m, &labels);
                let b = full_sum_transducer(&view, &labels);
                if a.is_impossible() && b.is_impossible() {
                    continue;
                }
                worst = worst.max((a.value() - b.value()).abs());
            }
        }
    }
    worst
}

/// Maximum linear-domain row deviation of `s2t(t2s(m))` against `m` over
/// every reachable grid state.
pub fn transducer_round_trip_deviation(m: &TransducerModel) -> f64 {
    let topology = m.topology();
    let k = m.context_order();
    let seg_view = transducer_to_segmental(m);
    let back = segmental_to_transducer(&seg_view);
    let mut worst: f64 = 0.0;

    let mut queue: VecDeque<(Frame, Frame, Vec<LabelId>)> = VecDeque::new();
    let mut seen: BTreeSet<(Frame, Frame, Vec<crate::models::ContextSym>)> = BTreeSet::new();
    let origin = topology.origin();
    queue.push_back((1, origin, Vec::new()));
    seen.insert((1, origin, context_of(&[], k)));
    while let Some((t, t_prev, history)) = queue.pop_front() {
        let orig = m.step_scores(t, t_prev, &history);
        let rt = back.step_scores(t, t_prev, &history);
        worst = worst.max((orig.blank.prob() - rt.blank.prob()).abs());
        for (a, b) in orig.labels.iter().zip(&rt.labels) {
            worst = worst.max((a.prob() - b.prob()).abs());
        }
        if t < topology.frames && !orig.blank.is_impossible() {
            let key = (t + 1, t_prev, context_of(&history, k));
            if seen.insert(key) {
                queue.push_back((t + 1, t_prev, history.clone()));
            }
        }
        for (i, l) in orig.labels.iter().enumerate() {
            if l.is_impossible() {
                continue;
            }
            let mut h = history.clone();
            h.push(LabelId(i as u32));
            let next_t = match topology.kind {
                TopologyKind::Rnnt => t,
                TopologyKind::StrictMonotonic => t + 1,
            };
            if next_t > topology.frames {
                continue;
            }
            if seen.insert((next_t, t, context_of(&h, k))) {
                queue.push_back((next_t, t, h));
            }
        }
    }
    worst
}

/// Maximum linear-domain deviation of `t2s(s2t(m))` against `m` on the
/// invariant quantities: boundary cells below the final frame, pre-final
/// label rows, the joint boundary-label mass at the final frame, and the
/// sentence-end route.
pub fn segmental_round_trip_deviation(m: &SegmentalModel) -> f64 {
    let topology = m.topology();
    let frames = topology.frames;
    let k = m.context_order();
    let t_view = segmental_to_transducer(m);
    let back = transducer_to_segmental(&t_view);
    let mut worst: f64 = 0.0;

    let mut queue: VecDeque<(Frame, Vec<LabelId>)> = VecDeque::new();
    let mut seen: BTreeSet<(Frame, Vec<crate::models::ContextSym>)> = BTreeSet::new();
    queue.push_back((topology.origin(), Vec::new()));
    seen.insert((topology.origin(), context_of(&[], k)));
    while let Some((t_prev, history)) = queue.pop_front() {
        let orig_b = m.boundary_scores(t_prev, &history);
        let rt_b = back.boundary_scores(t_prev, &history);
        worst = worst.max(
            (m.end_score(t_prev, &history).prob() - back.end_score(t_prev, &history).prob()).abs(),
        );
        for ((ta, a), (_, b)) in orig_b.iter().zip(rt_b.iter()) {
            if ta < frames {
                worst = worst.max((a.prob() - b.prob()).abs());
            }
            if a.is_impossible() {
                continue;
            }
            let orig_l = m.label_scores(t_prev, ta, &history);
            let rt_l = back.label_scores(t_prev, ta, &history);
            for (i, (la, lb)) in orig_l.labels.iter().zip(&rt_l.labels).enumerate() {
                if ta < frames {
                    worst = worst.max((la.prob() - lb.prob()).abs());
                } else {
                    let joint_orig = (a + *la).prob();
                    let joint_rt = (rt_b.get(ta) + *lb).prob();
                    worst = worst.max((joint_orig - joint_rt).abs());
                }
                if !la.is_impossible() {
                    let mut h = history.clone();
                    h.push(LabelId(i as u32));
                    if seen.insert((ta, context_of(&h, k))) {
                        queue.push_back((ta, h));
                    }
                }
            }
        }
    }
    worst
}

/// Full audit: validation, rewrite equivalence, round trip, and
/// normalization, each with a pass flag and a human-readable detail line.
pub fn run_model_audit(model: &AnyModel, s_max: usize, tolerance: f64) -> AuditReport {
    let mut checks = Vec::new();

    let violations = crate::models::validate_model(model);
    checks.push(AuditCheck {
        name: "validation".into(),
        passed: violations.is_empty(),
        detail: if violations.is_empty() {
            "all rows valid".into()
        } else {
            let head: Vec<String> = violations.iter().take(4).map(|v| v.to_string()).collect();
            format!("{} violation(s): {}", violations.len(), head.join("; "))
        },
    });

    let dev = equivalence_deviation(model, s_max);
    checks.push(AuditCheck {
        name: "rewrite_equivalence".into(),
        passed: dev <= tolerance,
        detail: format!("max posterior deviation {dev:.3e} over S <= {s_max} (tolerance {tolerance:.1e})"),
    });

    let rt = match model {
        AnyModel::Transducer(m) => transducer_round_trip_deviation(m),
        AnyModel::Segmental(m) => segmental_round_trip_deviation(m),
    };
    checks.push(AuditCheck {
        name: "round_trip".into(),
        passed: rt <= 1e-12,
        detail: format!("max row deviation {rt:.3e} (tolerance 1.0e-12)"),
    });

    let mass = match model {
        AnyModel::Transducer(m) => total_mass_transducer(m, s_max),
        AnyModel::Segmental(m) => total_mass_segmental(m, s_max),
    };
    let p = mass.mass.prob();
    let (passed, detail) = if mass.exact {
        (
            (p - 1.0).abs() <= 1e-9,
            format!("total mass {p:.12} over the exhaustive sequence space"),
        )
    } else {
        (
            p <= 1.0 + 1e-9,
            format!("partial mass {p:.12} for S <= {s_max} (lower bound, RNN-T space is unbounded)"),
        )
    };
    checks.push(AuditCheck {
        name: "normalization".into(),
        passed,
        detail,
    });

    AuditReport { checks }
}
