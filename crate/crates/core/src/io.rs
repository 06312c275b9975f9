//! Line-oriented text format for dynamic graphs.
//!
//! ```text
//! # optional comment lines
//! n T
//! u v k s1 e1 s2 e2 ... sk ek
//! ```
//!
//! Times are printed with Rust's shortest round-trip representation, so
//! reading back a written graph reproduces every bit.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::{DynamicGraph, MarkSeq};

pub fn write_graph<W: Write>(g: &DynamicGraph, comments: &[String], mut out: W) -> Result<()> {
    out.write_all(encode_graph(g, comments).as_bytes())?;
    Ok(())
}

pub fn encode_graph(g: &DynamicGraph, comments: &[String]) -> String {
    let mut s = String::new();
    for c in comments {
        for line in c.lines() {
            let _ = writeln!(s, "# {line}");
        }
    }
    let _ = writeln!(s, "{} {}", g.n(), g.horizon());
    for ((u, v), m) in g.edges() {
        let _ = write!(s, "{u} {v} {}", m.len());
        for &(on, off) in m.intervals() {
            let _ = write!(s, " {on} {off}");
        }
        s.push('\n');
    }
    s
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn read_graph<R: BufRead>(input: R) -> Result<DynamicGraph> {
    let mut graph: Option<DynamicGraph> = None;
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_ascii_whitespace();
        let mut next = |what: &str| fields.next().ok_or_else(|| parse_err(lineno, format!("missing {what}")));
        match graph.as_mut() {
            None => {
                let n: u32 = next("n")?.parse().map_err(|e| parse_err(lineno, format!("bad n: {e}")))?;
                let t: f64 = next("T")?.parse().map_err(|e| parse_err(lineno, format!("bad T: {e}")))?;
                graph = Some(DynamicGraph::new(n, t).map_err(|e| parse_err(lineno, e.to_string()))?);
            }
            Some(g) => {
                let u: u32 = next("u")?.parse().map_err(|e| parse_err(lineno, format!("bad u: {e}")))?;
                let v: u32 = next("v")?.parse().map_err(|e| parse_err(lineno, format!("bad v: {e}")))?;
                let k: usize = next("k")?.parse().map_err(|e| parse_err(lineno, format!("bad k: {e}")))?;
                let mut intervals = Vec::with_capacity(k);
                for i in 0..k {
                    let on: f64 = next("on time")?
                        .parse()
                        .map_err(|e| parse_err(lineno, format!("bad on time {i}: {e}")))?;
                    let off: f64 = next("off time")?
                        .parse()
                        .map_err(|e| parse_err(lineno, format!("bad off time {i}: {e}")))?;
                    intervals.push((on, off));
                }
                if fields.next().is_some() {
                    return Err(parse_err(lineno, "trailing fields"));
                }
                if g.marks(u, v).is_some() {
                    return Err(parse_err(lineno, format!("duplicate pair {{{u}, {v}}}")));
                }
                let m = MarkSeq::new(intervals, g.horizon()).map_err(|e| parse_err(lineno, e.to_string()))?;
                g.insert(u, v, m).map_err(|e| parse_err(lineno, e.to_string()))?;
            }
        }
    }
    graph.ok_or_else(|| parse_err(0, "missing header line"))
}

pub fn decode_graph(text: &str) -> Result<DynamicGraph> {
    read_graph(text.as_bytes())
}
