//! Model validation. Never fails: returns the list of violations, each
//! naming the offending row.

use std::fmt;

use super::reach;
use super::{AnyModel, Context, Normalization, SegmentalModel, TransducerKey, TransducerModel};
use crate::topology::{Frame, TopologyKind};
use crate::vocab::Vocabulary;

const SUM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub location: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.detail)
    }
}

fn render_context(ctx: &Context, vocab: &Vocabulary) -> String {
    let parts: Vec<String> = ctx.iter().map(|s| s.render(vocab)).collect();
    format!("[{}]", parts.join(" "))
}

pub fn validate_model(model: &AnyModel) -> Vec<Violation> {
    match model {
        AnyModel::Transducer(m) => validate_transducer(m),
        AnyModel::Segmental(m) => validate_segmental(m),
    }
}

pub fn validate_transducer(m: &TransducerModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let vocab = m.vocabulary();
    for (key, row) in m.rows() {
        let loc = match key.t_prev {
            Some(p) => format!(
                "transducer row (t={}, t_prev={p}, context {})",
                key.t,
                render_context(&key.context, vocab)
            ),
            None => format!(
                "transducer row (t={}, context {})",
                key.t,
                render_context(&key.context, vocab)
            ),
        };
        if row.unreachable {
            continue;
        }
        if row.labels.len() != vocab.len() {
            out.push(Violation {
                location: loc.clone(),
                detail: format!("{} label entries, expected {}", row.labels.len(), vocab.len()),
            });
            continue;
        }
        let mut sum = row.blank.linear();
        for (i, s) in row.labels.iter().enumerate() {
            if s.linear() > 1.0 {
                out.push(Violation {
                    location: loc.clone(),
                    detail: format!("probability of {:?} exceeds one", vocab.name(crate::vocab::LabelId(i as u32))),
                });
            }
            sum += s.linear();
        }
        if row.blank.linear() > 1.0 {
            out.push(Violation {
                location: loc.clone(),
                detail: "blank probability exceeds one".into(),
            });
        }
        if (sum - 1.0).abs() > SUM_TOL {
            out.push(Violation {
                location: loc,
                detail: format!("row sums to {sum}"),
            });
        }
    }
    // Missing reachable rows are only checked for natively keyed tables;
    // boundary-keyed tables (materialized views) carry their own walk.
    if !m.has_boundary_keys() {
        for (t, context) in reach::transducer_keys(m.topology(), m.context_order(), vocab.len()) {
            let key = TransducerKey {
                t,
                t_prev: None,
                context: context.clone(),
            };
            if !m.rows().contains_key(&key) {
                out.push(Violation {
                    location: format!(
                        "transducer row (t={t}, context {})",
                        render_context(&context, vocab)
                    ),
                    detail: "reachable row missing".into(),
                });
            }
        }
    }
    out
}

pub fn validate_segmental(m: &SegmentalModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let vocab = m.vocabulary();
    let topology = m.topology();
    let frames = topology.frames;
    let native = m.normalization() == Normalization::Native;

    for ((t_prev, ctx), row) in m.boundary_rows() {
        let loc = format!(
            "boundary row (t_prev={t_prev}, context {})",
            render_context(ctx, vocab)
        );
        if row.unreachable {
            continue;
        }
        let mut sum = 0.0;
        for (&t, s) in &row.entries {
            if !topology.boundary_ok(*t_prev, t) && !s.is_zero() {
                out.push(Violation {
                    location: loc.clone(),
                    detail: format!("mass on boundary {t} outside the topology support"),
                });
            }
            if s.linear() > 1.0 {
                out.push(Violation {
                    location: loc.clone(),
                    detail: format!("probability of boundary {t} exceeds one"),
                });
            }
            sum += s.linear();
        }
        if native {
            if (sum - 1.0).abs() > SUM_TOL {
                out.push(Violation {
                    location: loc,
                    detail: format!("row sums to {sum}"),
                });
            }
        } else if sum > 1.0 + SUM_TOL {
            out.push(Violation {
                location: loc,
                detail: format!("deficient row sums to {sum} > 1"),
            });
        }
    }

    for ((t_prev, t_cur, ctx), row) in m.label_rows() {
        let loc = format!(
            "label row (t_prev={t_prev}, t_cur={t_cur}, context {})",
            render_context(ctx, vocab)
        );
        if row.unreachable {
            continue;
        }
        if !topology.boundary_ok(*t_prev, *t_cur) {
            out.push(Violation {
                location: loc.clone(),
                detail: "segment violates the topology's boundary constraint".into(),
            });
        }
        if *t_cur < frames && !row.eos.is_zero() {
            out.push(Violation {
                location: loc.clone(),
                detail: format!(
                    "sentence end has probability {} before the final frame",
                    row.eos.linear()
                ),
            });
        }
        let label_sum: f64 = row.labels.iter().map(|s| s.linear()).sum();
        let sum = if native {
            label_sum + row.eos.linear()
        } else {
            // Derived rows: the labels are blank-renormalized and the
            // sentence-end entry is an odds factor outside the row mass.
            label_sum
        };
        if (sum - 1.0).abs() > SUM_TOL {
            out.push(Violation {
                location: loc,
                detail: format!("row sums to {sum}"),
            });
        }
    }

    if let Some(ends) = m.end_rows() {
        if native {
            out.push(Violation {
                location: "model".into(),
                detail: "native model carries a derived sentence-end table".into(),
            });
        }
        for ((t_prev, ctx), s) in ends {
            if s.linear() > 1.0 + SUM_TOL {
                out.push(Violation {
                    location: format!(
                        "end row (t_prev={t_prev}, context {})",
                        render_context(ctx, vocab)
                    ),
                    detail: format!("end mass {} exceeds one", s.linear()),
                });
            }
        }
    }

    // Reachable-row presence.
    let k = m.context_order();
    for (t_prev, ctx) in reach::segmental_boundary_keys(topology, k, vocab.len()) {
        if !m.boundary_rows().contains_key(&(t_prev, ctx.clone())) {
            out.push(Violation {
                location: format!(
                    "boundary row (t_prev={t_prev}, context {})",
                    render_context(&ctx, vocab)
                ),
                detail: "reachable row missing".into(),
            });
        }
    }
    for (t_prev, t_cur, ctx) in reach::segmental_label_keys(topology, k, vocab.len()) {
        if !m.label_rows().contains_key(&(t_prev, t_cur, ctx.clone())) {
            out.push(Violation {
                location: format!(
                    "label row (t_prev={t_prev}, t_cur={t_cur}, context {})",
                    render_context(&ctx, vocab)
                ),
                detail: "reachable row missing".into(),
            });
        }
    }
    let _ = frames;
    out
}

/// Strictly-monotonic sanity used by audits: the forced-end convention
/// requires no storage, so nothing to check beyond the above.
#[allow(dead_code)]
fn _kind_note(_k: TopologyKind, _f: Frame) {}
