//! KONECT edge-list text format.
//!
//! One edge per line, `upper lower [extra columns...]`, with `%` or `#`
//! comment lines. Labels are compacted to dense indices in order of first
//! appearance.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{BipartiteGraph, Side};
use crate::error::{Error, Result};

pub fn load_konect(path: impl AsRef<Path>, dedupe: bool) -> Result<BipartiteGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_konect(BufReader::new(file), dedupe).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

#[derive(Default)]
struct Compactor {
    ids: HashMap<u64, u32>,
    labels: Vec<u64>,
}

impl Compactor {
    fn intern(&mut self, label: u64) -> Result<u32> {
        let next = self.labels.len();
        match self.ids.entry(label) {
            Entry::Occupied(o) => Ok(*o.get()),
            Entry::Vacant(v) => {
                let id = u32::try_from(next).map_err(|_| Error::Overflow("too many vertices"))?;
                v.insert(id);
                self.labels.push(label);
                Ok(id)
            }
        }
    }
}

pub fn parse_konect(reader: impl BufRead, dedupe: bool) -> Result<BipartiteGraph> {
    let mut upper = Compactor::default();
    let mut lower = Compactor::default();
    let mut edges = Vec::new();
    let mut seen = HashSet::new();

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io("<input>", e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') || trimmed.starts_with('#') {
            continue;
        }
        let mut cols = trimmed.split_whitespace();
        let mut column = |name: &str| -> Result<u64> {
            let tok = cols.next().ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("missing {name} column"),
            })?;
            tok.parse::<u64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("{name} id {tok:?} is not a non-negative integer"),
            })
        };
        let u_label = column("upper")?;
        let l_label = column("lower")?;
        let u = upper.intern(u_label)?;
        let l = lower.intern(l_label)?;
        if !seen.insert((u, l)) {
            if dedupe {
                continue;
            }
            return Err(Error::DuplicateEdge {
                line: lineno,
                upper: u_label,
                lower: l_label,
            });
        }
        edges.push((u, l));
    }

    if edges.is_empty() {
        return Err(Error::EmptyInput);
    }
    BipartiteGraph::with_labels(upper.labels, lower.labels, edges, true)
}

/// Writes the graph with its original labels, edges in id order.
pub fn write_konect(g: &BipartiteGraph, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "% bip unweighted")?;
    writeln!(
        out,
        "% {} {} {}",
        g.edge_count(),
        g.upper_count(),
        g.lower_count()
    )?;
    let (ul, ll) = (g.labels(Side::Upper), g.labels(Side::Lower));
    for e in g.edges() {
        writeln!(out, "{} {}", ul[e.upper as usize], ll[e.lower as usize])?;
    }
    out.flush()
}
