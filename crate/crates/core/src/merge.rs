//! Three-way line merge.
//!
//! The merge follows diff3/`git merge-file` semantics: both sides are diffed
//! against the base, changes are walked in base order, and any two changes
//! that overlap or touch in the base become a conflict unless they are the
//! same edit. Alignment choices come from [`crate::diff::engine`] so that
//! clean-versus-conflicted verdicts agree with git.

use serde::{Deserialize, Serialize};

use crate::diff::engine::{self, Change};
use crate::diff::Interner;
use crate::lines::{Eol, LineSeq};

/// The three versions of a conflicted region, without surrounding context.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Conflict {
    pub left: Vec<String>,
    pub base: Vec<String>,
    pub right: Vec<String>,
}

/// A conflicted region together with the stable lines around it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConflictHunk {
    pub pre_context: Vec<String>,
    pub left: Vec<String>,
    pub base: Vec<String>,
    pub right: Vec<String>,
    pub post_context: Vec<String>,
}

impl ConflictHunk {
    pub fn conflict(&self) -> Conflict {
        Conflict {
            left: self.left.clone(),
            base: self.base.clone(),
            right: self.right.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Stable(Vec<String>),
    Conflicted(Conflict),
}

/// Result of a three-way merge: stable text interleaved with conflicts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MergeOutcome {
    pub regions: Vec<Region>,
    pub eol: Eol,
    pub final_newline: bool,
}

impl MergeOutcome {
    pub fn conflicts(&self) -> impl Iterator<Item = &Conflict> {
        self.regions.iter().filter_map(|r| match r {
            Region::Conflicted(c) => Some(c),
            Region::Stable(_) => None,
        })
    }

    pub fn conflict_count(&self) -> usize {
        self.conflicts().count()
    }

    pub fn is_clean(&self) -> bool {
        self.conflict_count() == 0
    }

    /// Index into `regions` of the `n`th conflicted region.
    pub fn conflict_region_index(&self, n: usize) -> Option<usize> {
        self.regions
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, Region::Conflicted(_)))
            .nth(n)
            .map(|(i, _)| i)
    }

    /// The merged document with each conflict replaced by one of its sides.
    pub fn resolve_with(&self, pick: impl Fn(&Conflict) -> &[String]) -> Vec<String> {
        let mut out = Vec::new();
        for region in &self.regions {
            match region {
                Region::Stable(lines) => out.extend(lines.iter().cloned()),
                Region::Conflicted(c) => out.extend(pick(c).iter().cloned()),
            }
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MergeOptions {
    /// Conflicts separated by fewer than this many stable lines are joined
    /// into one. Zero joins nothing beyond what the merge itself produces.
    pub coalesce_gap: usize,
}

pub fn merge3(base: &LineSeq, left: &LineSeq, right: &LineSeq) -> MergeOutcome {
    merge3_with(base, left, right, &MergeOptions::default())
}

/// A merged range: `mode` 0 is a conflict, 1 takes the left side, 2 the
/// right side. Ranges are (start, len) in base, left and right.
#[derive(Clone, Copy, Debug)]
struct Piece {
    mode: u8,
    i0: i64,
    chg0: i64,
    i1: i64,
    chg1: i64,
    i2: i64,
    chg2: i64,
}

fn append(pieces: &mut Vec<Piece>, p: Piece) {
    if let Some(m) = pieces.last_mut() {
        if p.i1 <= m.i1 + m.chg1 || p.i2 <= m.i2 + m.chg2 {
            if p.mode != m.mode {
                m.mode = 0;
            }
            m.chg0 = p.i0 + p.chg0 - m.i0;
            m.chg1 = p.i1 + p.chg1 - m.i1;
            m.chg2 = p.i2 + p.chg2 - m.i2;
            return;
        }
    }
    pieces.push(p);
}

pub fn merge3_with(base: &LineSeq, left: &LineSeq, right: &LineSeq, opts: &MergeOptions) -> MergeOutcome {
    // A missing final newline makes the last line a different record.
    let mut interner = Interner::new();
    let mut ids = |seq: &LineSeq| -> Vec<usize> {
        let n = seq.len();
        let open_tail = seq.unterminated_tail();
        seq.lines
            .iter()
            .enumerate()
            .map(|(i, l)| interner.id((l.clone(), open_tail && i + 1 == n)))
            .collect()
    };
    let base_ids = ids(base);
    let left_ids = ids(left);
    let right_ids = ids(right);

    let changes1 = engine::diff(&base_ids, &left_ids, engine::Mode::Git);
    let changes2 = engine::diff(&base_ids, &right_ids, engine::Mode::Git);

    if changes1.is_empty() {
        return whole(right);
    }
    if changes2.is_empty() {
        return whole(left);
    }

    let mut pieces = walk(&changes1, &changes2, &left_ids, &right_ids, base.len(), left.len(), right.len());
    if opts.coalesce_gap > 0 {
        pieces = coalesce(pieces, opts.coalesce_gap as i64);
    }
    assemble(&pieces, base, left, right)
}

fn whole(seq: &LineSeq) -> MergeOutcome {
    MergeOutcome {
        regions: if seq.is_empty() {
            Vec::new()
        } else {
            vec![Region::Stable(seq.lines.clone())]
        },
        eol: seq.eol,
        final_newline: seq.final_newline && !seq.is_empty(),
    }
}

fn walk(
    changes1: &[Change],
    changes2: &[Change],
    left_ids: &[usize],
    right_ids: &[usize],
    n_base: usize,
    n_left: usize,
    n_right: usize,
) -> Vec<Piece> {
    let mut pieces = Vec::new();
    let (mut p1, mut p2) = (0, 0);
    // (base start, side start, base len, side len)
    let unpack = |c: &Change| (c.start_a as i64, c.start_b as i64, c.len_a as i64, c.len_b as i64);

    while p1 < changes1.len() && p2 < changes2.len() {
        let (b1, s1, n1, m1) = unpack(&changes1[p1]);
        let (b2, s2, n2, m2) = unpack(&changes2[p2]);

        if b1 + n1 < b2 {
            append(
                &mut pieces,
                Piece {
                    mode: 1,
                    i0: b1,
                    chg0: n1,
                    i1: s1,
                    chg1: m1,
                    i2: s2 - b2 + b1,
                    chg2: n1,
                },
            );
            p1 += 1;
            continue;
        }
        if b2 + n2 < b1 {
            append(
                &mut pieces,
                Piece {
                    mode: 2,
                    i0: b2,
                    chg0: n2,
                    i1: s1 - b1 + b2,
                    chg1: n2,
                    i2: s2,
                    chg2: m2,
                },
            );
            p2 += 1;
            continue;
        }

        let same_edit = b1 == b2
            && n1 == n2
            && m1 == m2
            && left_ids[s1 as usize..(s1 + m1) as usize] == right_ids[s2 as usize..(s2 + m2) as usize];
        if !same_edit {
            let off = b1 - b2;
            let ffo = off + n1 - n2;
            let (mut i0, mut i1, mut i2) = (b1, s1, s2);
            if off > 0 {
                i0 -= off;
                i1 -= off;
            } else {
                i2 += off;
            }
            let mut chg0 = b1 + n1 - i0;
            let mut chg1 = s1 + m1 - i1;
            let mut chg2 = s2 + m2 - i2;
            if ffo < 0 {
                chg0 -= ffo;
                chg1 -= ffo;
            } else {
                chg2 += ffo;
            }
            append(
                &mut pieces,
                Piece {
                    mode: 0,
                    i0,
                    chg0,
                    i1,
                    chg1,
                    i2,
                    chg2,
                },
            );
        }

        let end1 = b1 + n1;
        let end2 = b2 + n2;
        if end1 >= end2 {
            p2 += 1;
        }
        if end2 >= end1 {
            p1 += 1;
        }
    }
    for c in &changes1[p1..] {
        let (b1, s1, n1, m1) = unpack(c);
        append(
            &mut pieces,
            Piece {
                mode: 1,
                i0: b1,
                chg0: n1,
                i1: s1,
                chg1: m1,
                i2: b1 + n_right as i64 - n_base as i64,
                chg2: n1,
            },
        );
    }
    for c in &changes2[p2..] {
        let (b2, s2, n2, m2) = unpack(c);
        append(
            &mut pieces,
            Piece {
                mode: 2,
                i0: b2,
                chg0: n2,
                i1: b2 + n_left as i64 - n_base as i64,
                chg1: n2,
                i2: s2,
                chg2: m2,
            },
        );
    }
    pieces
}

/// Joins conflicts separated by fewer than `gap` merged lines, absorbing the
/// pieces between them.
fn coalesce(pieces: Vec<Piece>, gap: i64) -> Vec<Piece> {
    let mut out: Vec<Piece> = Vec::with_capacity(pieces.len());
    // index in `out` of the latest conflict, and merged lines emitted since
    let mut last_conflict: Option<usize> = None;
    let mut since = 0i64;
    let mut prev_end1 = 0i64;
    for p in pieces {
        since += p.i1 - prev_end1;
        if p.mode == 0 {
            if let Some(ci) = last_conflict.filter(|_| since < gap) {
                out.truncate(ci + 1);
                let m = &mut out[ci];
                m.chg0 = p.i0 + p.chg0 - m.i0;
                m.chg1 = p.i1 + p.chg1 - m.i1;
                m.chg2 = p.i2 + p.chg2 - m.i2;
            } else {
                out.push(p);
                last_conflict = Some(out.len() - 1);
            }
            since = 0;
        } else {
            since += if p.mode == 1 { p.chg1 } else { p.chg2 };
            out.push(p);
        }
        prev_end1 = p.i1 + p.chg1;
    }
    out
}

struct Builder {
    regions: Vec<Region>,
    open_tail: bool,
}

impl Builder {
    fn stable(&mut self, seq: &LineSeq, start: i64, len: i64) {
        if len <= 0 {
            return;
        }
        let (s, e) = (start as usize, (start + len) as usize);
        let lines = &seq.lines[s..e];
        match self.regions.last_mut() {
            Some(Region::Stable(acc)) => acc.extend(lines.iter().cloned()),
            _ => self.regions.push(Region::Stable(lines.to_vec())),
        }
        self.open_tail = e == seq.len() && seq.unterminated_tail();
    }

    fn conflict(&mut self, c: Conflict) {
        self.regions.push(Region::Conflicted(c));
        self.open_tail = false;
    }
}

fn slice(seq: &LineSeq, start: i64, len: i64) -> Vec<String> {
    seq.lines[start as usize..(start + len) as usize].to_vec()
}

fn assemble(pieces: &[Piece], base: &LineSeq, left: &LineSeq, right: &LineSeq) -> MergeOutcome {
    let mut b = Builder {
        regions: Vec::new(),
        open_tail: false,
    };
    let mut i = 0i64;
    for m in pieces {
        b.stable(left, i, m.i1 - i);
        match m.mode {
            0 => b.conflict(Conflict {
                left: slice(left, m.i1, m.chg1),
                base: slice(base, m.i0, m.chg0),
                right: slice(right, m.i2, m.chg2),
            }),
            1 => b.stable(left, m.i1, m.chg1),
            _ => b.stable(right, m.i2, m.chg2),
        }
        i = m.i1 + m.chg1;
    }
    b.stable(left, i, left.len() as i64 - i);
    let final_newline = !b.regions.is_empty() && !b.open_tail;
    MergeOutcome {
        regions: b.regions,
        eol: left.eol,
        final_newline,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(lines: &[&str]) -> LineSeq {
        LineSeq::from_lines(lines)
    }

    fn stable(lines: &[&str]) -> Region {
        Region::Stable(lines.iter().map(|s| s.to_string()).collect())
    }

    fn strings(lines: &[&str]) -> Vec<String> {
        lines.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn one_sided_change_merges_cleanly() {
        let x = doc(&["a", "b", "c"]);
        let y = doc(&["a", "B", "c", "d"]);
        assert_eq!(merge3(&x, &x, &y).regions, vec![stable(&["a", "B", "c", "d"])]);
        assert_eq!(merge3(&x, &y, &x).regions, vec![stable(&["a", "B", "c", "d"])]);
    }

    #[test]
    fn identical_changes_merge_cleanly() {
        let x = doc(&["a", "b", "c"]);
        let y = doc(&["a", "z", "c"]);
        assert_eq!(merge3(&x, &y, &y).regions, vec![stable(&["a", "z", "c"])]);
    }

    #[test]
    fn divergent_single_line_conflicts() {
        let out = merge3(&doc(&["a"]), &doc(&["b"]), &doc(&["c"]));
        assert_eq!(
            out.regions,
            vec![Region::Conflicted(Conflict {
                left: strings(&["b"]),
                base: strings(&["a"]),
                right: strings(&["c"]),
            })]
        );
        assert!(out.final_newline);
    }

    #[test]
    fn non_overlapping_edits_merge() {
        let base = doc(&["1", "2", "3", "4", "5"]);
        let left = doc(&["one", "2", "3", "4", "5"]);
        let right = doc(&["1", "2", "3", "4", "five"]);
        let out = merge3(&base, &left, &right);
        assert_eq!(out.regions, vec![stable(&["one", "2", "3", "4", "five"])]);
    }

    #[test]
    fn touching_edits_conflict() {
        let base = doc(&["1", "2", "3"]);
        let left = doc(&["one", "2", "3"]);
        let right = doc(&["1", "two", "3"]);
        let out = merge3(&base, &left, &right);
        assert_eq!(out.conflict_count(), 1);
        assert_eq!(
            out.regions,
            vec![
                Region::Conflicted(Conflict {
                    left: strings(&["one", "2"]),
                    base: strings(&["1", "2"]),
                    right: strings(&["1", "two"]),
                }),
                stable(&["3"]),
            ]
        );
    }

    #[test]
    fn coalescing_gap_joins_nearby_conflicts() {
        let base = doc(&["a", "x", "b"]);
        let left = doc(&["A1", "x", "B1"]);
        let right = doc(&["A2", "x", "B2"]);
        let apart = merge3(&base, &left, &right);
        assert_eq!(apart.conflict_count(), 2);
        let joined = merge3_with(&base, &left, &right, &MergeOptions { coalesce_gap: 2 });
        assert_eq!(
            joined.regions,
            vec![Region::Conflicted(Conflict {
                left: strings(&["A1", "x", "B1"]),
                base: strings(&["a", "x", "b"]),
                right: strings(&["A2", "x", "B2"]),
            })]
        );
    }

    #[test]
    fn keeps_missing_final_newline() {
        let base = LineSeq::parse("a\nb");
        let left = LineSeq::parse("A\nb");
        let out = merge3(&base, &left, &base);
        assert!(!out.final_newline);
        // Touching edits conflict, and the rendered conflict ends in a newline.
        let out = merge3(&base, &LineSeq::parse("a\nb\nc"), &LineSeq::parse("A\nb"));
        assert_eq!(out.conflict_count(), 1);
        assert!(out.final_newline);
    }

    fn small_doc() -> impl Strategy<Value = Vec<String>> {
        proptest::collection::vec(prop_oneof!["a", "b", "c", "d"].prop_map(String::from), 0..=12)
    }

    proptest! {
        #[test]
        fn sides_swap_symmetrically(base in small_doc(), left in small_doc(), right in small_doc()) {
            let (b, l, r) = (LineSeq::new(base), LineSeq::new(left), LineSeq::new(right));
            let ab = merge3(&b, &l, &r);
            let ba = merge3(&b, &r, &l);
            prop_assert_eq!(ab.conflict_count(), ba.conflict_count());
            let swapped: Vec<Region> = ba.regions.iter().map(|reg| match reg {
                Region::Conflicted(c) => Region::Conflicted(Conflict {
                    left: c.right.clone(), base: c.base.clone(), right: c.left.clone(),
                }),
                other => other.clone(),
            }).collect();
            // Stable text may differ only where the sides made identical edits
            // that are copied from different sources; the partition must agree.
            prop_assert_eq!(ab.regions.len(), swapped.len());
            for (x, y) in ab.regions.iter().zip(&swapped) {
                match (x, y) {
                    (Region::Conflicted(cx), Region::Conflicted(cy)) => prop_assert_eq!(cx, cy),
                    (Region::Stable(_), Region::Stable(_)) => {}
                    _ => prop_assert!(false, "partition differs"),
                }
            }
        }

        #[test]
        fn no_adjacent_conflicts(base in small_doc(), left in small_doc(), right in small_doc()) {
            let out = merge3(&LineSeq::new(base), &LineSeq::new(left), &LineSeq::new(right));
            for w in out.regions.windows(2) {
                prop_assert!(!matches!((&w[0], &w[1]), (Region::Conflicted(_), Region::Conflicted(_))));
            }
        }

        #[test]
        fn taking_left_everywhere_matches_left_when_right_unchanged(base in small_doc(), left in small_doc()) {
            let b = LineSeq::new(base);
            let l = LineSeq::new(left.clone());
            let out = merge3(&b, &l, &b);
            prop_assert!(out.is_clean());
            prop_assert_eq!(out.resolve_with(|c| &c.left), left);
        }
    }
}
