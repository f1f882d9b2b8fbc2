//! Myers divide-and-conquer line diff with the record pruning and change
//! compaction used by git's xdiff, so that merges built on top of it align
//! changes the same way `git merge-file` does.
//!
//! Records are pre-classified into integer ids: two records are equal iff
//! their ids are equal.

const SNAKE_CNT: i64 = 20;
const HEUR_MIN_COST: i64 = 256;
const MAX_COST_MIN: i64 = 256;
const K_HEUR: i64 = 4;
const MAX_EQLIMIT: i64 = 1024;
const SIMSCAN_WINDOW: i64 = 100;
const KPDIS_RUN: i64 = 4;
const LINE_MAX: i64 = i64::MAX;

/// A change block: `len_a` records of `a` starting at `start_a` are replaced
/// by `len_b` records of `b` starting at `start_b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Change {
    pub start_a: usize,
    pub start_b: usize,
    pub len_a: usize,
    pub len_b: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Guaranteed shortest edit script; no pruning or cost heuristics.
    Minimal,
    /// Same choices as git's default (non-minimal) Myers diff.
    Git,
}

/// Per-record "changed" flags with a false sentinel on each side.
struct Flags(Vec<bool>);

impl Flags {
    fn new(n: usize) -> Self {
        Flags(vec![false; n + 2])
    }
    #[inline]
    fn get(&self, i: i64) -> bool {
        self.0[(i + 1) as usize]
    }
    #[inline]
    fn set(&mut self, i: i64, v: bool) {
        self.0[(i + 1) as usize] = v;
    }
}

/// Records that survived pruning, with their original indices.
struct Reduced {
    ha: Vec<usize>,
    rindex: Vec<usize>,
}

struct Split {
    i1: i64,
    i2: i64,
    min_lo: bool,
    min_hi: bool,
}

struct Kv {
    data: Vec<i64>,
    fbase: i64,
    bbase: i64,
}

impl Kv {
    #[inline]
    fn f(&self, d: i64) -> i64 {
        self.data[(self.fbase + d) as usize]
    }
    #[inline]
    fn set_f(&mut self, d: i64, v: i64) {
        self.data[(self.fbase + d) as usize] = v;
    }
    #[inline]
    fn b(&self, d: i64) -> i64 {
        self.data[(self.bbase + d) as usize]
    }
    #[inline]
    fn set_b(&mut self, d: i64, v: i64) {
        self.data[(self.bbase + d) as usize] = v;
    }
}

fn bogosqrt(mut n: i64) -> i64 {
    let mut i = 1;
    while n > 0 {
        i <<= 1;
        n >>= 2;
    }
    i
}

/// Diffs two classified record sequences and returns the change blocks in
/// order.
pub(crate) fn diff(a: &[usize], b: &[usize], mode: Mode) -> Vec<Change> {
    let mut flags_a = Flags::new(a.len());
    let mut flags_b = Flags::new(b.len());

    let (red_a, red_b) = match mode {
        Mode::Minimal => (
            Reduced {
                ha: a.to_vec(),
                rindex: (0..a.len()).collect(),
            },
            Reduced {
                ha: b.to_vec(),
                rindex: (0..b.len()).collect(),
            },
        ),
        Mode::Git => prune(a, b, &mut flags_a, &mut flags_b),
    };

    let n_a = red_a.ha.len() as i64;
    let n_b = red_b.ha.len() as i64;
    let ndiags = n_a + n_b + 3;
    let mut kv = Kv {
        data: vec![0; (2 * ndiags + 2) as usize],
        fbase: n_b + 1,
        bbase: ndiags + n_b + 1,
    };
    let mxcost = bogosqrt(ndiags).max(MAX_COST_MIN);
    let need_min = mode == Mode::Minimal;
    let mut ctx = Ctx {
        a: &red_a,
        b: &red_b,
        flags_a: &mut flags_a,
        flags_b: &mut flags_b,
        kv: &mut kv,
        mxcost,
    };
    ctx.compare(0, n_a, 0, n_b, need_min);

    compact(a, &mut flags_a, &flags_b);
    compact(b, &mut flags_b, &flags_a);
    build_script(a.len(), b.len(), &flags_a, &flags_b)
}

/// Strips the common prefix and suffix from consideration and drops records
/// that cannot take part in a useful match, marking them changed up front.
fn prune(a: &[usize], b: &[usize], flags_a: &mut Flags, flags_b: &mut Flags) -> (Reduced, Reduced) {
    let classes = a.iter().chain(b).copied().max().map_or(0, |m| m + 1);
    let mut count_a = vec![0i64; classes];
    let mut count_b = vec![0i64; classes];
    for &c in a {
        count_a[c] += 1;
    }
    for &c in b {
        count_b[c] += 1;
    }

    let lim = a.len().min(b.len());
    let mut prefix = 0;
    while prefix < lim && a[prefix] == b[prefix] {
        prefix += 1;
    }
    let mut suffix = 0;
    while suffix < lim - prefix && a[a.len() - 1 - suffix] == b[b.len() - 1 - suffix] {
        suffix += 1;
    }
    let dstart = prefix as i64;
    let dend_a = a.len() as i64 - suffix as i64 - 1;
    let dend_b = b.len() as i64 - suffix as i64 - 1;

    let classify = |recs: &[usize], other: &[i64], dend: i64| -> Vec<u8> {
        let mlim = bogosqrt(recs.len() as i64).min(MAX_EQLIMIT);
        let mut dis = vec![0u8; recs.len() + 1];
        let mut i = dstart;
        while i <= dend {
            let nm = other[recs[i as usize]];
            dis[i as usize] = if nm == 0 {
                0
            } else if nm >= mlim {
                2
            } else {
                1
            };
            i += 1;
        }
        dis
    };
    let dis_a = classify(a, &count_b, dend_a);
    let dis_b = classify(b, &count_a, dend_b);

    let keep = |recs: &[usize], dis: &[u8], dend: i64, flags: &mut Flags| -> Reduced {
        let mut red = Reduced {
            ha: Vec::new(),
            rindex: Vec::new(),
        };
        let mut i = dstart;
        while i <= dend {
            let d = dis[i as usize];
            if d == 1 || (d == 2 && !clean_mmatch(dis, i, dstart, dend)) {
                red.rindex.push(i as usize);
                red.ha.push(recs[i as usize]);
            } else {
                flags.set(i, true);
            }
            i += 1;
        }
        red
    };
    let red_a = keep(a, &dis_a, dend_a, flags_a);
    let red_b = keep(b, &dis_b, dend_b, flags_b);
    (red_a, red_b)
}

/// Decides whether a record with many matches sits inside a run of
/// unmatched records and should be discarded with them.
fn clean_mmatch(dis: &[u8], i: i64, mut s: i64, mut e: i64) -> bool {
    if i - s > SIMSCAN_WINDOW {
        s = i - SIMSCAN_WINDOW;
    }
    if e - i > SIMSCAN_WINDOW {
        e = i + SIMSCAN_WINDOW;
    }

    let mut rdis0 = 0;
    let mut rpdis0 = 1;
    let mut r = 1;
    while i - r >= s {
        match dis[(i - r) as usize] {
            0 => rdis0 += 1,
            2 => rpdis0 += 1,
            _ => break,
        }
        r += 1;
    }
    if rdis0 == 0 {
        return false;
    }
    let mut rdis1 = 0;
    let mut rpdis1 = 1;
    let mut r = 1;
    while i + r <= e {
        match dis[(i + r) as usize] {
            0 => rdis1 += 1,
            2 => rpdis1 += 1,
            _ => break,
        }
        r += 1;
    }
    if rdis1 == 0 {
        return false;
    }
    rdis1 += rdis0;
    rpdis1 += rpdis0;
    rpdis1 * KPDIS_RUN < rpdis1 + rdis1
}

struct Ctx<'a> {
    a: &'a Reduced,
    b: &'a Reduced,
    flags_a: &'a mut Flags,
    flags_b: &'a mut Flags,
    kv: &'a mut Kv,
    mxcost: i64,
}

impl Ctx<'_> {
    fn compare(&mut self, mut off1: i64, mut lim1: i64, mut off2: i64, mut lim2: i64, need_min: bool) {
        let ha1 = &self.a.ha;
        let ha2 = &self.b.ha;
        while off1 < lim1 && off2 < lim2 && ha1[off1 as usize] == ha2[off2 as usize] {
            off1 += 1;
            off2 += 1;
        }
        while off1 < lim1 && off2 < lim2 && ha1[(lim1 - 1) as usize] == ha2[(lim2 - 1) as usize] {
            lim1 -= 1;
            lim2 -= 1;
        }

        if off1 == lim1 {
            for i in off2..lim2 {
                self.flags_b.set(self.b.rindex[i as usize] as i64, true);
            }
        } else if off2 == lim2 {
            for i in off1..lim1 {
                self.flags_a.set(self.a.rindex[i as usize] as i64, true);
            }
        } else {
            let spl = self.split(off1, lim1, off2, lim2, need_min);
            self.compare(off1, spl.i1, off2, spl.i2, spl.min_lo);
            self.compare(spl.i1, lim1, spl.i2, lim2, spl.min_hi);
        }
    }

    /// Finds a split point on an optimal (or, past the cost limits, a good
    /// enough) path through the box `[off1, lim1) x [off2, lim2)`.
    fn split(&mut self, off1: i64, lim1: i64, off2: i64, lim2: i64, need_min: bool) -> Split {
        let ha1 = &self.a.ha;
        let ha2 = &self.b.ha;
        let kv = &mut *self.kv;
        let at1 = |i: i64| ha1[i as usize];
        let at2 = |i: i64| ha2[i as usize];

        let dmin = off1 - lim2;
        let dmax = lim1 - off2;
        let fmid = off1 - off2;
        let bmid = lim1 - lim2;
        let odd = (fmid - bmid) & 1 != 0;
        let (mut fmin, mut fmax) = (fmid, fmid);
        let (mut bmin, mut bmax) = (bmid, bmid);

        kv.set_f(fmid, off1);
        kv.set_b(bmid, lim1);

        let mut ec = 1i64;
        loop {
            let mut got_snake = false;

            if fmin > dmin {
                fmin -= 1;
                kv.set_f(fmin - 1, -1);
            } else {
                fmin += 1;
            }
            if fmax < dmax {
                fmax += 1;
                kv.set_f(fmax + 1, -1);
            } else {
                fmax -= 1;
            }

            let mut d = fmax;
            while d >= fmin {
                let mut i1 = if kv.f(d - 1) >= kv.f(d + 1) {
                    kv.f(d - 1) + 1
                } else {
                    kv.f(d + 1)
                };
                let prev1 = i1;
                let mut i2 = i1 - d;
                while i1 < lim1 && i2 < lim2 && at1(i1) == at2(i2) {
                    i1 += 1;
                    i2 += 1;
                }
                if i1 - prev1 > SNAKE_CNT {
                    got_snake = true;
                }
                kv.set_f(d, i1);
                if odd && bmin <= d && d <= bmax && kv.b(d) <= i1 {
                    return Split {
                        i1,
                        i2,
                        min_lo: true,
                        min_hi: true,
                    };
                }
                d -= 2;
            }

            if bmin > dmin {
                bmin -= 1;
                kv.set_b(bmin - 1, LINE_MAX);
            } else {
                bmin += 1;
            }
            if bmax < dmax {
                bmax += 1;
                kv.set_b(bmax + 1, LINE_MAX);
            } else {
                bmax -= 1;
            }

            let mut d = bmax;
            while d >= bmin {
                let mut i1 = if kv.b(d - 1) < kv.b(d + 1) {
                    kv.b(d - 1)
                } else {
                    kv.b(d + 1) - 1
                };
                let prev1 = i1;
                let mut i2 = i1 - d;
                while i1 > off1 && i2 > off2 && at1(i1 - 1) == at2(i2 - 1) {
                    i1 -= 1;
                    i2 -= 1;
                }
                if prev1 - i1 > SNAKE_CNT {
                    got_snake = true;
                }
                kv.set_b(d, i1);
                if !odd && fmin <= d && d <= fmax && i1 <= kv.f(d) {
                    return Split {
                        i1,
                        i2,
                        min_lo: true,
                        min_hi: true,
                    };
                }
                d -= 2;
            }

            if need_min {
                ec += 1;
                continue;
            }

            if got_snake && ec > HEUR_MIN_COST {
                let mut best = 0;
                let mut found = None;
                let mut d = fmax;
                while d >= fmin {
                    let dd = if d > fmid { d - fmid } else { fmid - d };
                    let i1 = kv.f(d);
                    let i2 = i1 - d;
                    let v = (i1 - off1) + (i2 - off2) - dd;
                    if v > K_HEUR * ec
                        && v > best
                        && off1 + SNAKE_CNT <= i1
                        && i1 < lim1
                        && off2 + SNAKE_CNT <= i2
                        && i2 < lim2
                    {
                        let mut k = 1;
                        while at1(i1 - k) == at2(i2 - k) {
                            if k == SNAKE_CNT {
                                best = v;
                                found = Some((i1, i2));
                                break;
                            }
                            k += 1;
                        }
                    }
                    d -= 2;
                }
                if let Some((i1, i2)) = found {
                    return Split {
                        i1,
                        i2,
                        min_lo: true,
                        min_hi: false,
                    };
                }

                let mut best = 0;
                let mut found = None;
                let mut d = bmax;
                while d >= bmin {
                    let dd = if d > bmid { d - bmid } else { bmid - d };
                    let i1 = kv.b(d);
                    let i2 = i1 - d;
                    let v = (lim1 - i1) + (lim2 - i2) - dd;
                    if v > K_HEUR * ec
                        && v > best
                        && off1 < i1
                        && i1 <= lim1 - SNAKE_CNT
                        && off2 < i2
                        && i2 <= lim2 - SNAKE_CNT
                    {
                        let mut k = 0;
                        while at1(i1 + k) == at2(i2 + k) {
                            if k == SNAKE_CNT - 1 {
                                best = v;
                                found = Some((i1, i2));
                                break;
                            }
                            k += 1;
                        }
                    }
                    d -= 2;
                }
                if let Some((i1, i2)) = found {
                    return Split {
                        i1,
                        i2,
                        min_lo: false,
                        min_hi: true,
                    };
                }
            }

            if ec >= self.mxcost {
                let (mut fbest, mut fbest1) = (-1i64, -1i64);
                let mut d = fmax;
                while d >= fmin {
                    let mut i1 = kv.f(d).min(lim1);
                    let mut i2 = i1 - d;
                    if lim2 < i2 {
                        i1 = lim2 + d;
                        i2 = lim2;
                    }
                    if fbest < i1 + i2 {
                        fbest = i1 + i2;
                        fbest1 = i1;
                    }
                    d -= 2;
                }

                let (mut bbest, mut bbest1) = (LINE_MAX, LINE_MAX);
                let mut d = bmax;
                while d >= bmin {
                    let mut i1 = off1.max(kv.b(d));
                    let mut i2 = i1 - d;
                    if i2 < off2 {
                        i1 = off2 + d;
                        i2 = off2;
                    }
                    if i1 + i2 < bbest {
                        bbest = i1 + i2;
                        bbest1 = i1;
                    }
                    d -= 2;
                }

                return if (lim1 + lim2) - bbest < fbest - (off1 + off2) {
                    Split {
                        i1: fbest1,
                        i2: fbest - fbest1,
                        min_lo: true,
                        min_hi: false,
                    }
                } else {
                    Split {
                        i1: bbest1,
                        i2: bbest - bbest1,
                        min_lo: false,
                        min_hi: true,
                    }
                };
            }
            ec += 1;
        }
    }
}

#[derive(Clone, Copy)]
struct Group {
    start: i64,
    end: i64,
}

fn group_init(flags: &Flags) -> Group {
    let mut g = Group { start: 0, end: 0 };
    while flags.get(g.end) {
        g.end += 1;
    }
    g
}

fn group_next(flags: &Flags, n: i64, g: &mut Group) -> bool {
    if g.end == n {
        return false;
    }
    g.start = g.end + 1;
    g.end = g.start;
    while flags.get(g.end) {
        g.end += 1;
    }
    true
}

fn group_previous(flags: &Flags, g: &mut Group) -> bool {
    if g.start == 0 {
        return false;
    }
    g.end = g.start - 1;
    g.start = g.end;
    while flags.get(g.start - 1) {
        g.start -= 1;
    }
    true
}

fn slide_down(recs: &[usize], flags: &mut Flags, g: &mut Group) -> bool {
    let n = recs.len() as i64;
    if g.end < n && recs[g.start as usize] == recs[g.end as usize] {
        flags.set(g.start, false);
        g.start += 1;
        flags.set(g.end, true);
        g.end += 1;
        while flags.get(g.end) {
            g.end += 1;
        }
        true
    } else {
        false
    }
}

fn slide_up(recs: &[usize], flags: &mut Flags, g: &mut Group) -> bool {
    if g.start > 0 && recs[(g.start - 1) as usize] == recs[(g.end - 1) as usize] {
        g.start -= 1;
        flags.set(g.start, true);
        g.end -= 1;
        flags.set(g.end, false);
        while flags.get(g.start - 1) {
            g.start -= 1;
        }
        true
    } else {
        false
    }
}

/// Slides each change group as far down as it can go, then back up until it
/// lines up with a change group in the other file, merging groups it runs
/// into along the way.
fn compact(recs: &[usize], flags: &mut Flags, other: &Flags) {
    let n = recs.len() as i64;
    let n_other = other.0.len() as i64 - 2;
    let mut g = group_init(flags);
    let mut go = group_init(other);

    loop {
        if g.end != g.start {
            let mut earliest_end;
            let mut end_matching_other;
            loop {
                let groupsize = g.end - g.start;
                end_matching_other = -1;

                while slide_up(recs, flags, &mut g) {
                    let moved = group_previous(other, &mut go);
                    debug_assert!(moved, "group sync broken sliding up");
                }
                earliest_end = g.end;
                if go.end > go.start {
                    end_matching_other = g.end;
                }

                loop {
                    if !slide_down(recs, flags, &mut g) {
                        break;
                    }
                    let moved = group_next(other, n_other, &mut go);
                    debug_assert!(moved, "group sync broken sliding down");
                    if go.end > go.start {
                        end_matching_other = g.end;
                    }
                }
                if groupsize == g.end - g.start {
                    break;
                }
            }

            if g.end != earliest_end && end_matching_other != -1 {
                while go.end == go.start {
                    let slid = slide_up(recs, flags, &mut g);
                    debug_assert!(slid, "match disappeared");
                    let moved = group_previous(other, &mut go);
                    debug_assert!(moved, "group sync broken sliding to match");
                }
            }
        }

        if !group_next(flags, n, &mut g) {
            break;
        }
        let moved = group_next(other, n_other, &mut go);
        debug_assert!(moved, "group sync broken moving to next group");
    }
}

fn build_script(n_a: usize, n_b: usize, flags_a: &Flags, flags_b: &Flags) -> Vec<Change> {
    let mut out = Vec::new();
    let mut i1 = n_a as i64;
    let mut i2 = n_b as i64;
    while i1 >= 0 || i2 >= 0 {
        let ca = i1 >= 0 && flags_a.get(i1 - 1);
        let cb = i2 >= 0 && flags_b.get(i2 - 1);
        if ca || cb {
            let l1 = i1;
            while i1 >= 0 && flags_a.get(i1 - 1) {
                i1 -= 1;
            }
            let l2 = i2;
            while i2 >= 0 && flags_b.get(i2 - 1) {
                i2 -= 1;
            }
            out.push(Change {
                start_a: i1 as usize,
                start_b: i2 as usize,
                len_a: (l1 - i1) as usize,
                len_b: (l2 - i2) as usize,
            });
        }
        i1 -= 1;
        i2 -= 1;
    }
    out.reverse();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cost(changes: &[Change]) -> usize {
        changes.iter().map(|c| c.len_a + c.len_b).sum()
    }

    #[test]
    fn identical_inputs_have_no_changes() {
        assert!(diff(&[0, 1, 2], &[0, 1, 2], Mode::Git).is_empty());
        assert!(diff(&[], &[], Mode::Minimal).is_empty());
    }

    #[test]
    fn pure_insertion() {
        let c = diff(&[], &[1, 2], Mode::Minimal);
        assert_eq!(
            c,
            vec![Change {
                start_a: 0,
                start_b: 0,
                len_a: 0,
                len_b: 2
            }]
        );
    }

    #[test]
    fn compaction_slides_insertion_down() {
        // Inserting a second "0" after the first is reported at the end of the
        // run of equal records.
        let c = diff(&[0, 1], &[0, 0, 1], Mode::Git);
        assert_eq!(
            c,
            vec![Change {
                start_a: 1,
                start_b: 1,
                len_a: 0,
                len_b: 1
            }]
        );
    }

    #[test]
    fn large_inputs_finish() {
        let a: Vec<usize> = (0..4000).map(|i| (i * 7919) % 13).collect();
        let b: Vec<usize> = (0..4000).map(|i| (i * 104729) % 11).collect();
        let c = diff(&a, &b, Mode::Git);
        assert!(cost(&c) >= 1);
    }
}
