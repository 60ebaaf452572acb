//! Line-oriented instance interchange and JSON reports.
//!
//! ```text
//! vars 2
//! v 0 2 1/2 1/2
//! v 1 2 1/3 2/3
//! e 0 2 0 1
//! f 1 1
//! f 0 0
//! ```

use std::fmt::Write as _;

use serde_json::{json, Value};

use super::{Event, LllError, VarSpec, Verdict};
use crate::ratio;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError {
        line,
        message: message.into(),
    }
}

fn numbers<T: std::str::FromStr>(line: usize, tokens: &[&str]) -> Result<Vec<T>, FormatError> {
    tokens
        .iter()
        .map(|t| {
            t.parse()
                .map_err(|_| err(line, format!("bad number `{t}`")))
        })
        .collect()
}

struct PendingEvent {
    line: usize,
    id: usize,
    vbl: Vec<usize>,
    rows: Vec<Vec<u32>>,
}

impl PendingEvent {
    fn finish(self) -> Result<Event, FormatError> {
        let line = self.line;
        Event::new(self.id, self.vbl, self.rows).map_err(|e| err(line, e.to_string()))
    }
}

pub fn parse_instance(text: &str) -> Result<(Vec<VarSpec>, Vec<Event>), FormatError> {
    let mut declared = None;
    let mut vars = Vec::new();
    let mut events = Vec::new();
    let mut pending: Option<PendingEvent> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens[0] {
            "vars" if declared.is_none() => {
                let [count] = numbers::<usize>(line, &tokens[1..])?[..] else {
                    return Err(err(line, "expected `vars <count>`"));
                };
                declared = Some(count);
            }
            _ if declared.is_none() => return Err(err(line, "missing `vars` header")),
            "v" => {
                let head = numbers::<usize>(
                    line,
                    tokens
                        .get(1..3)
                        .ok_or_else(|| err(line, "short `v` line"))?,
                )?;
                let (index, range) = (head[0], head[1]);
                if tokens.len() != 3 + range {
                    return Err(err(
                        line,
                        format!("variable {index} declares {range} values"),
                    ));
                }
                let weights = tokens[3..]
                    .iter()
                    .map(|t| ratio::parse(t).map_err(|e| err(line, e.to_string())))
                    .collect::<Result<_, _>>()?;
                vars.push(VarSpec::new(index, weights).map_err(|e| err(line, e.to_string()))?);
            }
            "e" => {
                if let Some(p) = pending.take() {
                    events.push(p.finish()?);
                }
                let head = numbers::<usize>(
                    line,
                    tokens
                        .get(1..3)
                        .ok_or_else(|| err(line, "short `e` line"))?,
                )?;
                let (id, k) = (head[0], head[1]);
                if tokens.len() != 3 + k {
                    return Err(err(line, format!("event {id} declares {k} variables")));
                }
                pending = Some(PendingEvent {
                    line,
                    id,
                    vbl: numbers(line, &tokens[3..])?,
                    rows: Vec::new(),
                });
            }
            "f" => {
                let p = pending
                    .as_mut()
                    .ok_or_else(|| err(line, "`f` line before any event"))?;
                let row: Vec<u32> = numbers(line, &tokens[1..])?;
                if row.len() != p.vbl.len() {
                    return Err(err(
                        line,
                        format!("row has {} values, event has {}", row.len(), p.vbl.len()),
                    ));
                }
                p.rows.push(row);
            }
            other => return Err(err(line, format!("unknown directive `{other}`"))),
        }
    }
    if let Some(p) = pending.take() {
        events.push(p.finish()?);
    }
    let declared = declared.ok_or_else(|| err(0, "empty instance"))?;
    if declared != vars.len() {
        return Err(err(
            0,
            format!("header declares {declared} variables, found {}", vars.len()),
        ));
    }
    Ok((vars, events))
}

pub fn write_instance(vars: &[VarSpec], events: &[Event]) -> String {
    let mut out = format!("vars {}\n", vars.len());
    for v in vars {
        let _ = write!(out, "v {} {}", v.index(), v.range_size());
        for w in v.weights() {
            let _ = write!(out, " {}", ratio::format(w));
        }
        out.push('\n');
    }
    for e in events {
        let _ = write!(out, "e {} {}", e.id(), e.vbl().len());
        for v in e.vbl() {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
        for row in e.forbidden() {
            out.push('f');
            for x in row {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn verdict_json(verdict: &Verdict) -> Value {
    match verdict {
        Verdict::Accepted(cert) => json!({
            "accepted": true,
            "q": ratio::format(&cert.q),
            "r": cert.r.iter().map(ratio::format).collect::<Vec<_>>(),
            "margins": cert.margins.iter().map(ratio::format).collect::<Vec<_>>(),
        }),
        Verdict::Refused(r) => json!({
            "accepted": false,
            "event": r.event,
            "probability": ratio::format(&r.probability),
            "bound": ratio::format(&r.bound),
        }),
    }
}

pub fn violations_json(violated: &[usize]) -> Value {
    json!({ "avoiding": violated.is_empty(), "violated": violated })
}

pub fn error_json(error: &LllError) -> Value {
    match error {
        LllError::NonConvergence {
            resamplings,
            recent,
            violated,
        } => json!({
            "error": "non-convergence",
            "resamplings": resamplings,
            "recent": recent,
            "violated": violated,
        }),
        LllError::Unsatisfiable { events, reason } => json!({
            "error": "unsatisfiable",
            "events": events,
            "reason": reason,
        }),
        other => json!({ "error": other.to_string() }),
    }
}
