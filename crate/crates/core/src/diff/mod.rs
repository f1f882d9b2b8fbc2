//! Line-based two-way diff.

pub(crate) mod engine;

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::lines::LineSeq;

/// One step of an edit script.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EditOp {
    Keep(usize),
    Delete(usize),
    Insert(Vec<String>),
}

/// Ordered operations that rewrite a source line sequence into a target.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditScript {
    pub ops: Vec<EditOp>,
}

impl EditScript {
    /// Number of deleted plus inserted lines.
    pub fn cost(&self) -> usize {
        self.ops
            .iter()
            .map(|op| match op {
                EditOp::Keep(_) => 0,
                EditOp::Delete(n) => *n,
                EditOp::Insert(lines) => lines.len(),
            })
            .sum()
    }

    /// Applies the script to `source`. Returns `None` when the script does not
    /// fit the source length.
    pub fn apply<S: AsRef<str>>(&self, source: &[S]) -> Option<Vec<String>> {
        let mut out = Vec::new();
        let mut pos = 0;
        for op in &self.ops {
            match op {
                EditOp::Keep(n) => {
                    let end = pos + n;
                    out.extend(source.get(pos..end)?.iter().map(|s| s.as_ref().to_owned()));
                    pos = end;
                }
                EditOp::Delete(n) => {
                    pos += n;
                    if pos > source.len() {
                        return None;
                    }
                }
                EditOp::Insert(lines) => out.extend(lines.iter().cloned()),
            }
        }
        (pos == source.len()).then_some(out)
    }
}

/// Assigns dense integer ids to values so that equal values share an id.
pub(crate) struct Interner<K> {
    ids: HashMap<K, usize>,
}

impl<K: Hash + Eq> Interner<K> {
    pub fn new() -> Self {
        Interner { ids: HashMap::new() }
    }

    pub fn id(&mut self, key: K) -> usize {
        let next = self.ids.len();
        *self.ids.entry(key).or_insert(next)
    }
}

/// Computes a shortest edit script from `a` to `b`.
///
/// Within a change block deletions are emitted before insertions, and change
/// blocks are slid to the latest equivalent position, so the output is
/// deterministic.
pub fn diff_lines(a: &LineSeq, b: &LineSeq) -> EditScript {
    diff_slices(&a.lines, &b.lines)
}

pub fn diff_slices<S: AsRef<str>>(a: &[S], b: &[S]) -> EditScript {
    let mut interner = Interner::new();
    let ids_a: Vec<usize> = a.iter().map(|l| interner.id(l.as_ref())).collect();
    let ids_b: Vec<usize> = b.iter().map(|l| interner.id(l.as_ref())).collect();
    let changes = engine::diff(&ids_a, &ids_b, engine::Mode::Minimal);

    let mut ops = Vec::new();
    let mut pos = 0;
    for c in changes {
        if c.start_a > pos {
            ops.push(EditOp::Keep(c.start_a - pos));
        }
        if c.len_a > 0 {
            ops.push(EditOp::Delete(c.len_a));
        }
        if c.len_b > 0 {
            ops.push(EditOp::Insert(
                b[c.start_b..c.start_b + c.len_b]
                    .iter()
                    .map(|s| s.as_ref().to_owned())
                    .collect(),
            ));
        }
        pos = c.start_a + c.len_a;
    }
    if a.len() > pos {
        ops.push(EditOp::Keep(a.len() - pos));
    }
    EditScript { ops }
}
