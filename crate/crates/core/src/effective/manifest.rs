//! Text formats for materialized streams and colorings.
//!
//! Stream manifest:
//!
//! ```text
//! # fingerprint 1a2b3c4d5e6f7a8b
//! stream sets M 16 q 1/2 window 16384
//! # by 3 at 17
//! item 0 16 4 9 ... 120
//! end 1
//! ```
//!
//! Partial-word items append `bits <b1..bk>`. The `end` line carries the item
//! count so a truncated file is rejected. Coloring files hold the committed
//! bits, 64 per line, after a `coloring <length> <seed>` header.

use std::io::{self, Write};

use super::{Coloring, ConstraintStream, Item, ListStream, PartialWord, StreamKind};
use crate::ratio;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ManifestError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ManifestError {
    ManifestError {
        line,
        message: message.into(),
    }
}

/// A stream read back from a manifest, with the window it was written for.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub stream: ListStream,
    pub window: usize,
}

/// Writes every item of `stream` inside `[0, window)`, in id order.
///
/// `annotate` may return a comment placed above an item. Returns the item count.
pub fn write_manifest(
    stream: &dyn ConstraintStream,
    window: usize,
    annotate: &dyn Fn(usize) -> Option<String>,
    out: &mut dyn Write,
) -> io::Result<usize> {
    let mut items = Vec::new();
    stream.for_each_within(window, &mut |item| items.push(item));
    items.sort_by_key(Item::id);
    writeln!(out, "# fingerprint {}", stream.fingerprint())?;
    writeln!(
        out,
        "stream {} M {} q {} window {}",
        stream.kind().as_str(),
        stream.min_size(),
        ratio::format(&stream.q()),
        window
    )?;
    for item in &items {
        if let Some(note) = annotate(item.id()) {
            writeln!(out, "# {note}")?;
        }
        write!(out, "item {} {}", item.id(), item.len())?;
        for n in item.dom() {
            write!(out, " {n}")?;
        }
        if let Item::Word(w) = item {
            let bits: String = w.vals.iter().map(|&v| if v { '1' } else { '0' }).collect();
            write!(out, " bits {bits}")?;
        }
        writeln!(out)?;
    }
    writeln!(out, "end {}", items.len())?;
    Ok(items.len())
}

fn parse_num<T: std::str::FromStr>(
    line: usize,
    token: Option<&str>,
    what: &str,
) -> Result<T, ManifestError> {
    let token = token.ok_or_else(|| err(line, format!("missing {what}")))?;
    token
        .parse()
        .map_err(|_| err(line, format!("bad {what} '{token}'")))
}

fn expect(line: usize, token: Option<&str>, word: &str) -> Result<(), ManifestError> {
    match token {
        Some(t) if t == word => Ok(()),
        other => Err(err(line, format!("expected '{word}', found {other:?}"))),
    }
}

pub fn parse_manifest(text: &str) -> Result<Manifest, ManifestError> {
    let mut fingerprint = None;
    let mut header: Option<(StreamKind, usize, ratio::Rational, usize)> = None;
    let mut items = Vec::new();
    let mut ended = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        if let Some(comment) = raw.strip_prefix('#') {
            if let Some(fp) = comment.trim().strip_prefix("fingerprint ") {
                fingerprint = Some(fp.trim().to_string());
            }
            continue;
        }
        if ended.is_some() {
            return Err(err(line, "content after end line"));
        }
        let mut tokens = raw.split_whitespace();
        match tokens.next() {
            Some("stream") => {
                if header.is_some() {
                    return Err(err(line, "second stream header"));
                }
                let kind = match tokens.next() {
                    Some("sets") => StreamKind::Sets,
                    Some("partials") => StreamKind::Partials,
                    other => return Err(err(line, format!("unknown stream kind {other:?}"))),
                };
                expect(line, tokens.next(), "M")?;
                let m = parse_num(line, tokens.next(), "M")?;
                expect(line, tokens.next(), "q")?;
                let q_text = tokens.next().ok_or_else(|| err(line, "missing q"))?;
                let q = ratio::parse(q_text).map_err(|e| err(line, e.to_string()))?;
                expect(line, tokens.next(), "window")?;
                let window = parse_num(line, tokens.next(), "window")?;
                header = Some((kind, m, q, window));
            }
            Some("item") => {
                let (kind, ..) = header
                    .as_ref()
                    .ok_or_else(|| err(line, "item before stream header"))?;
                let id: usize = parse_num(line, tokens.next(), "item id")?;
                let k: usize = parse_num(line, tokens.next(), "item size")?;
                let dom = (0..k)
                    .map(|_| parse_num(line, tokens.next(), "element"))
                    .collect::<Result<Vec<usize>, _>>()?;
                let item = match kind {
                    StreamKind::Sets => Item::set(id, dom),
                    StreamKind::Partials => {
                        expect(line, tokens.next(), "bits")?;
                        let bits = tokens.next().ok_or_else(|| err(line, "missing bits"))?;
                        if bits.len() != k || bits.chars().any(|c| c != '0' && c != '1') {
                            return Err(err(line, "bits must be one 0/1 per element"));
                        }
                        PartialWord::new(id, dom, bits.chars().map(|c| c == '1').collect())
                            .map(Item::Word)
                    }
                }
                .map_err(|e| err(line, e.to_string()))?;
                items.push(item);
            }
            Some("end") => {
                let count: usize = parse_num(line, tokens.next(), "item count")?;
                if count != items.len() {
                    return Err(err(
                        line,
                        format!("end line announces {count} items, found {}", items.len()),
                    ));
                }
                ended = Some(line);
            }
            Some(other) => return Err(err(line, format!("unknown directive '{other}'"))),
            None => unreachable!(),
        }
        if tokens.next().is_some() {
            return Err(err(line, "trailing tokens"));
        }
    }
    let (kind, m, q, window) = header.ok_or_else(|| err(0, "missing stream header"))?;
    if ended.is_none() {
        return Err(err(text.lines().count(), "truncated manifest: no end line"));
    }
    let stream = ListStream::new(kind, m, q, items).map_err(|e| err(0, e.to_string()))?;
    if let Some(&max) = stream.items().iter().filter_map(|i| i.dom().last()).max() {
        if max >= window {
            return Err(err(0, format!("element {max} outside window {window}")));
        }
    }
    let stream = match fingerprint {
        Some(fp) => stream.with_fingerprint(fp),
        None => stream,
    };
    Ok(Manifest { stream, window })
}

pub fn write_coloring(coloring: &Coloring, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "# fingerprint {}", coloring.fingerprint())?;
    writeln!(
        out,
        "coloring {} {}",
        coloring.committed_len(),
        coloring.seed()
    )?;
    for chunk in coloring.committed().chunks(64) {
        let line: String = chunk
            .iter()
            .map(|&b| if b == 1 { '1' } else { '0' })
            .collect();
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn parse_coloring(text: &str) -> Result<Coloring, ManifestError> {
    let mut fingerprint = String::new();
    let mut header: Option<(usize, u64)> = None;
    let mut bits = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        if let Some(comment) = raw.strip_prefix('#') {
            if let Some(fp) = comment.trim().strip_prefix("fingerprint ") {
                fingerprint = fp.trim().to_string();
            }
            continue;
        }
        if header.is_none() {
            let mut tokens = raw.split_whitespace();
            expect(line, tokens.next(), "coloring")?;
            let len = parse_num(line, tokens.next(), "length")?;
            let seed = parse_num(line, tokens.next(), "seed")?;
            if tokens.next().is_some() {
                return Err(err(line, "trailing tokens"));
            }
            header = Some((len, seed));
            continue;
        }
        for c in raw.chars() {
            match c {
                '0' => bits.push(0),
                '1' => bits.push(1),
                _ => return Err(err(line, format!("unexpected character '{c}'"))),
            }
        }
    }
    let (len, seed) = header.ok_or_else(|| err(0, "missing coloring header"))?;
    if bits.len() != len {
        return Err(err(
            0,
            format!("header announces {len} bits, found {}", bits.len()),
        ));
    }
    Coloring::from_committed(bits, seed, fingerprint).map_err(|e| err(0, e.to_string()))
}
