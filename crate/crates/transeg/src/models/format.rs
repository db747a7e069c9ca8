//! On-disk model format: UTF-8 JSON with probabilities in the linear
//! domain, written canonically (rows sorted, 17 significant digits) so
//! that identical models produce identical bytes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::{
    AnyModel, BoundaryRow, Context, ContextSym, Normalization, SegmentLabelRow, SegmentalModel,
    TransducerKey, TransducerModel, TransducerRow,
};
use crate::error::{Result, TransegError};
use crate::score::TableProb;
use crate::topology::{Frame, Topology, TopologyKind};
use crate::vocab::{Vocabulary, BLANK_NAME, BOS_NAME, EOS_NAME};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Deserialize)]
struct ModelFile {
    format_version: u64,
    kind: String,
    topology: TopologyFile,
    vocabulary: Vec<String>,
    context_order: usize,
    #[serde(default)]
    normalization: Option<String>,
    rows: Vec<RowFile>,
}

#[derive(Deserialize)]
struct TopologyFile {
    kind: String,
    #[serde(rename = "T")]
    frames: Frame,
}

#[derive(Deserialize, Default)]
struct RowFile {
    #[serde(default)]
    t: Option<Frame>,
    #[serde(default)]
    t_prev: Option<Frame>,
    #[serde(default)]
    t_cur: Option<Frame>,
    #[serde(default)]
    end: bool,
    #[serde(default)]
    unreachable: bool,
    context: Vec<String>,
    probs: BTreeMap<String, f64>,
}

fn fmt_prob(p: f64) -> String {
    format!("{p:.16e}")
}

fn parse_context(raw: &[String], vocab: &Vocabulary, loc: &str) -> Result<Context> {
    raw.iter()
        .map(|s| {
            if s == BOS_NAME {
                Ok(ContextSym::Bos)
            } else {
                vocab
                    .id(s)
                    .map(ContextSym::Label)
                    .map_err(|_| TransegError::Parse {
                        location: loc.to_string(),
                        detail: format!("unknown context symbol {s:?}"),
                    })
            }
        })
        .collect()
}

fn parse_topology(t: &TopologyFile) -> Result<Topology> {
    let kind = match t.kind.as_str() {
        "rnnt" => TopologyKind::Rnnt,
        "strict_monotonic" => TopologyKind::StrictMonotonic,
        other => {
            return Err(TransegError::Parse {
                location: "topology.kind".into(),
                detail: format!("unknown topology {other:?}"),
            })
        }
    };
    if t.frames < 1 {
        return Err(TransegError::Parse {
            location: "topology.T".into(),
            detail: "frame count must be positive".into(),
        });
    }
    Ok(Topology {
        kind,
        frames: t.frames,
    })
}

fn check_prob(p: f64, loc: &str) -> Result<()> {
    if !p.is_finite() || p < 0.0 {
        return Err(TransegError::Parse {
            location: loc.to_string(),
            detail: format!("probability {p} is not a nonnegative finite number"),
        });
    }
    Ok(())
}

pub fn model_from_json(text: &str) -> Result<AnyModel> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| TransegError::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        detail: e.to_string(),
    })?;
    if file.format_version != FORMAT_VERSION {
        return Err(TransegError::VersionMismatch {
            found: file.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let topology = parse_topology(&file.topology)?;
    let vocab = Vocabulary::new(file.vocabulary.clone())?;
    let normalization = match file.normalization.as_deref() {
        None | Some("native") => Normalization::Native,
        Some("derived") => Normalization::Derived,
        Some(other) => {
            return Err(TransegError::Parse {
                location: "normalization".into(),
                detail: format!("unknown normalization {other:?}"),
            })
        }
    };
    match file.kind.as_str() {
        "transducer" => {
            let mut rows = BTreeMap::new();
            for (i, row) in file.rows.iter().enumerate() {
                let loc = format!("rows[{i}]");
                let t = row.t.ok_or_else(|| TransegError::Parse {
                    location: loc.clone(),
                    detail: "transducer row missing field t".into(),
                })?;
                let context = parse_context(&row.context, &vocab, &loc)?;
                let mut labels = vec![TableProb::ZERO; vocab.len()];
                let mut blank = TableProb::ZERO;
                for (sym, &p) in &row.probs {
                    check_prob(p, &loc)?;
                    if sym == BLANK_NAME {
                        blank = TableProb::from_linear(p);
                    } else {
                        let id = vocab.id(sym).map_err(|_| TransegError::Parse {
                            location: loc.clone(),
                            detail: format!("unknown symbol {sym:?}"),
                        })?;
                        labels[id.index()] = TableProb::from_linear(p);
                    }
                }
                rows.insert(
                    TransducerKey {
                        t,
                        t_prev: row.t_prev,
                        context,
                    },
                    TransducerRow {
                        labels,
                        blank,
                        unreachable: row.unreachable,
                    },
                );
            }
            Ok(AnyModel::Transducer(TransducerModel::from_rows(
                vocab,
                topology,
                file.context_order,
                rows,
            )))
        }
        "segmental" => {
            let mut boundary = BTreeMap::new();
            let mut label = BTreeMap::new();
            let mut end: BTreeMap<(Frame, Context), TableProb> = BTreeMap::new();
            for (i, row) in file.rows.iter().enumerate() {
                let loc = format!("rows[{i}]");
                let t_prev = row.t_prev.ok_or_else(|| TransegError::Parse {
                    location: loc.clone(),
                    detail: "segmental row missing field t_prev".into(),
                })?;
                let context = parse_context(&row.context, &vocab, &loc)?;
                if row.end {
                    let p = row.probs.get(EOS_NAME).copied().unwrap_or(0.0);
                    check_prob(p, &loc)?;
                    end.insert((t_prev, context), TableProb::from_linear(p));
                } else if let Some(t_cur) = row.t_cur {
                    let mut labels = vec![TableProb::ZERO; vocab.len()];
                    let mut eos = TableProb::ZERO;
                    for (sym, &p) in &row.probs {
                        check_prob(p, &loc)?;
                        if sym == EOS_NAME {
                            eos = TableProb::from_linear(p);
                        } else {
                            let id = vocab.id(sym).map_err(|_| TransegError::Parse {
                                location: loc.clone(),
                                detail: format!("unknown symbol {sym:?}"),
                            })?;
                            labels[id.index()] = TableProb::from_linear(p);
                        }
                    }
                    label.insert(
                        (t_prev, t_cur, context),
                        SegmentLabelRow {
                            labels,
                            eos,
                            unreachable: row.unreachable,
                        },
                    );
                } else {
                    let mut entries = BTreeMap::new();
                    for (sym, &p) in &row.probs {
                        check_prob(p, &loc)?;
                        let frame: Frame = sym.parse().map_err(|_| TransegError::Parse {
                            location: loc.clone(),
                            detail: format!("boundary row key {sym:?} is not a frame number"),
                        })?;
                        entries.insert(frame, TableProb::from_linear(p));
                    }
                    boundary.insert(
                        (t_prev, context),
                        BoundaryRow {
                            entries,
                            unreachable: row.unreachable,
                        },
                    );
                }
            }
            let end = if end.is_empty() { None } else { Some(end) };
            Ok(AnyModel::Segmental(SegmentalModel::from_rows(
                vocab,
                topology,
                file.context_order,
                boundary,
                label,
                end,
                normalization,
            )))
        }
        other => Err(TransegError::Parse {
            location: "kind".into(),
            detail: format!("unknown model kind {other:?}"),
        }),
    }
}

struct JsonRow {
    head: String,
    probs: Vec<(String, f64)>,
    unreachable: bool,
}

fn emit(file_kind: &str, topology: Topology, vocab: &Vocabulary, context_order: usize, normalization: Option<Normalization>, rows: Vec<JsonRow>) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"format_version\": {FORMAT_VERSION},\n"));
    out.push_str(&format!("  \"kind\": \"{file_kind}\",\n"));
    let topo_kind = match topology.kind {
        TopologyKind::Rnnt => "rnnt",
        TopologyKind::StrictMonotonic => "strict_monotonic",
    };
    out.push_str(&format!(
        "  \"topology\": {{\"kind\": \"{topo_kind}\", \"T\": {}}},\n",
        topology.frames
    ));
    let names: Vec<String> = vocab
        .names()
        .iter()
        .map(|n| format!("{n:?}"))
        .collect();
    out.push_str(&format!("  \"vocabulary\": [{}],\n", names.join(", ")));
    out.push_str(&format!("  \"context_order\": {context_order},\n"));
    if let Some(n) = normalization {
        let tag = match n {
            Normalization::Native => "native",
            Normalization::Derived => "derived",
        };
        out.push_str(&format!("  \"normalization\": \"{tag}\",\n"));
    }
    out.push_str("  \"rows\": [\n");
    for (i, row) in rows.iter().enumerate() {
        out.push_str("    {");
        out.push_str(&row.head);
        if row.unreachable {
            out.push_str(", \"unreachable\": true");
        }
        out.push_str(", \"probs\": {");
        let entries: Vec<String> = row
            .probs
            .iter()
            .map(|(sym, p)| format!("{sym:?}: {}", fmt_prob(*p)))
            .collect();
        out.push_str(&entries.join(", "));
        out.push_str("}}");
        if i + 1 < rows.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("  ]\n}\n");
    out
}

fn context_names(ctx: &Context, vocab: &Vocabulary) -> String {
    let parts: Vec<String> = ctx.iter().map(|s| format!("{:?}", s.render(vocab))).collect();
    format!("\"context\": [{}]", parts.join(", "))
}

pub fn model_to_canonical_json(model: &AnyModel) -> String {
    match model {
        AnyModel::Transducer(m) => {
            let vocab = m.vocabulary();
            let mut rows: Vec<(Vec<String>, JsonRow)> = m
                .rows()
                .iter()
                .map(|(key, row)| {
                    let mut head = format!("\"t\": {}", key.t);
                    if let Some(p) = key.t_prev {
                        head.push_str(&format!(", \"t_prev\": {p}"));
                    }
                    head.push_str(", ");
                    head.push_str(&context_names(&key.context, vocab));
                    let mut probs: Vec<(String, f64)> = vec![(BLANK_NAME.into(), row.blank.linear())];
                    for (i, s) in row.labels.iter().enumerate() {
                        probs.push((
                            vocab.name(crate::vocab::LabelId(i as u32)).to_string(),
                            s.linear(),
                        ));
                    }
                    probs.sort_by(|a, b| a.0.cmp(&b.0));
                    let sort_key = vec![
                        format!("{:010}", key.t),
                        format!("{:010}", key.t_prev.map(|p| p + 1).unwrap_or(0)),
                        key.context
                            .iter()
                            .map(|c| c.render(vocab))
                            .collect::<Vec<_>>()
                            .join("\u{1}"),
                    ];
                    (
                        sort_key,
                        JsonRow {
                            head,
                            probs,
                            unreachable: row.unreachable,
                        },
                    )
                })
                .collect();
            rows.sort_by(|a, b| a.0.cmp(&b.0));
            let has_derived_keys = m.has_boundary_keys();
            emit(
                "transducer",
                m.topology(),
                vocab,
                m.context_order(),
                if has_derived_keys { Some(Normalization::Derived) } else { None },
                rows.into_iter().map(|(_, r)| r).collect(),
            )
        }
        AnyModel::Segmental(m) => {
            let vocab = m.vocabulary();
            let mut rows: Vec<(Vec<String>, JsonRow)> = Vec::new();
            for ((t_prev, ctx), row) in m.boundary_rows() {
                let mut head = format!("\"t_prev\": {t_prev}, ");
                head.push_str(&context_names(ctx, vocab));
                let probs: Vec<(String, f64)> = row
                    .entries
                    .iter()
                    .map(|(t, s)| (t.to_string(), s.linear()))
                    .collect();
                rows.push((
                    vec![
                        format!("{t_prev:010}"),
                        "0-boundary".into(),
                        format!("{:010}", 0),
                        ctx.iter().map(|c| c.render(vocab)).collect::<Vec<_>>().join("\u{1}"),
                    ],
                    JsonRow {
                        head,
                        probs,
                        unreachable: row.unreachable,
                    },
                ));
            }
            for ((t_prev, t_cur, ctx), row) in m.label_rows() {
                let mut head = format!("\"t_prev\": {t_prev}, \"t_cur\": {t_cur}, ");
                head.push_str(&context_names(ctx, vocab));
                let mut probs: Vec<(String, f64)> = row
                    .labels
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        (
                            vocab.name(crate::vocab::LabelId(i as u32)).to_string(),
                            s.linear(),
                        )
                    })
                    .collect();
                probs.push((EOS_NAME.into(), row.eos.linear()));
                probs.sort_by(|a, b| a.0.cmp(&b.0));
                rows.push((
                    vec![
                        format!("{t_prev:010}"),
                        "1-label".into(),
                        format!("{t_cur:010}"),
                        ctx.iter().map(|c| c.render(vocab)).collect::<Vec<_>>().join("\u{1}"),
                    ],
                    JsonRow {
                        head,
                        probs,
                        unreachable: row.unreachable,
                    },
                ));
            }
            if let Some(ends) = m.end_rows() {
                for ((t_prev, ctx), s) in ends {
                    let mut head = format!("\"t_prev\": {t_prev}, \"end\": true, ");
                    head.push_str(&context_names(ctx, vocab));
                    rows.push((
                        vec![
                            format!("{t_prev:010}"),
                            "2-end".into(),
                            format!("{:010}", 0),
                            ctx.iter().map(|c| c.render(vocab)).collect::<Vec<_>>().join("\u{1}"),
                        ],
                        JsonRow {
                            head,
                            probs: vec![(EOS_NAME.into(), s.linear())],
                            unreachable: false,
                        },
                    ));
                }
            }
            rows.sort_by(|a, b| a.0.cmp(&b.0));
            emit(
                "segmental",
                m.topology(),
                vocab,
                m.context_order(),
                Some(m.normalization()),
                rows.into_iter().map(|(_, r)| r).collect(),
            )
        }
    }
}

pub fn save_model(model: &AnyModel, destination: &Path) -> Result<()> {
    std::fs::write(destination, model_to_canonical_json(model))?;
    Ok(())
}

pub fn load_model(source: &Path) -> Result<AnyModel> {
    let text = std::fs::read_to_string(source)?;
    model_from_json(&text)
}
