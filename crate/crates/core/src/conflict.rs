//! Conflict-marker rendering and parsing (diff3 style).

use thiserror::Error;

use crate::lines::LineSeq;
use crate::merge::{Conflict, MergeOutcome, Region};

pub const MARKER_LEN: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Marker {
    Start,
    Base,
    Separator,
    End,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConflictError {
    #[error("line {line}: content already contains a conflict marker ({text:?})")]
    MarkerInContent { line: usize, text: String },
    #[error("malformed conflict markers at line {line}: {reason}")]
    MalformedMarkers { line: usize, reason: &'static str },
}

/// Optional labels written after the start, base and end markers.
#[derive(Clone, Copy, Debug, Default)]
pub struct MarkerLabels<'a> {
    pub left: Option<&'a str>,
    pub base: Option<&'a str>,
    pub right: Option<&'a str>,
}

/// Classifies a line as a conflict marker. Markers are exactly seven marker
/// characters at column 0; start, base and end markers may carry a label
/// after a single space.
pub fn marker_of(line: &str) -> Option<Marker> {
    let labelled = |ch: char| {
        let bytes = line.as_bytes();
        bytes.len() >= MARKER_LEN
            && bytes[..MARKER_LEN].iter().all(|&b| b == ch as u8)
            && (bytes.len() == MARKER_LEN || bytes[MARKER_LEN] == b' ')
    };
    if labelled('<') {
        Some(Marker::Start)
    } else if labelled('|') {
        Some(Marker::Base)
    } else if line == "=======" {
        Some(Marker::Separator)
    } else if labelled('>') {
        Some(Marker::End)
    } else {
        None
    }
}

fn marker_line(ch: char, label: Option<&str>) -> String {
    let mut s: String = std::iter::repeat_n(ch, MARKER_LEN).collect();
    if let Some(label) = label {
        s.push(' ');
        s.push_str(label);
    }
    s
}

pub fn render_conflict(outcome: &MergeOutcome) -> Result<String, ConflictError> {
    render_conflict_labeled(outcome, &MarkerLabels::default())
}

/// Renders the outcome with diff3-style markers. Fails when any content line
/// would itself read as a marker, since such output could not be parsed back.
pub fn render_conflict_labeled(outcome: &MergeOutcome, labels: &MarkerLabels<'_>) -> Result<String, ConflictError> {
    let mut out: Vec<String> = Vec::new();
    let push_content = |out: &mut Vec<String>, lines: &[String]| -> Result<(), ConflictError> {
        for line in lines {
            if marker_of(line).is_some() {
                return Err(ConflictError::MarkerInContent {
                    line: out.len() + 1,
                    text: line.clone(),
                });
            }
            out.push(line.clone());
        }
        Ok(())
    };
    for region in &outcome.regions {
        match region {
            Region::Stable(lines) => push_content(&mut out, lines)?,
            Region::Conflicted(c) => {
                out.push(marker_line('<', labels.left));
                push_content(&mut out, &c.left)?;
                out.push(marker_line('|', labels.base));
                push_content(&mut out, &c.base)?;
                out.push(marker_line('=', None));
                push_content(&mut out, &c.right)?;
                out.push(marker_line('>', labels.right));
            }
        }
    }
    Ok(LineSeq {
        lines: out,
        eol: outcome.eol,
        final_newline: outcome.final_newline,
    }
    .render())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Outside,
    Left,
    Base,
    Right,
}

/// Parses conflict-marker text back into regions. Two-section conflicts
/// (no base marker) are accepted with an empty base. Labels are discarded.
pub fn parse_conflict(text: &str) -> Result<MergeOutcome, ConflictError> {
    let doc = LineSeq::parse(text);
    let mut regions: Vec<Region> = Vec::new();
    let mut stable: Vec<String> = Vec::new();
    let mut current = Conflict::default();
    let mut state = State::Outside;

    let malformed = |i: usize, reason| ConflictError::MalformedMarkers { line: i + 1, reason };

    for (i, line) in doc.lines.iter().enumerate() {
        match (marker_of(line), state) {
            (Some(Marker::Start), State::Outside) => {
                if !stable.is_empty() {
                    regions.push(Region::Stable(std::mem::take(&mut stable)));
                }
                state = State::Left;
            }
            (Some(Marker::Start), _) => return Err(malformed(i, "nested conflict start")),
            (Some(Marker::Base), State::Left) => state = State::Base,
            (Some(Marker::Base), _) => return Err(malformed(i, "base marker out of order")),
            (Some(Marker::Separator), State::Left | State::Base) => state = State::Right,
            (Some(Marker::Separator), _) => return Err(malformed(i, "separator outside a conflict")),
            (Some(Marker::End), State::Right) => {
                regions.push(Region::Conflicted(std::mem::take(&mut current)));
                state = State::Outside;
            }
            (Some(Marker::End), _) => return Err(malformed(i, "conflict end without separator")),
            (None, State::Outside) => stable.push(line.clone()),
            (None, State::Left) => current.left.push(line.clone()),
            (None, State::Base) => current.base.push(line.clone()),
            (None, State::Right) => current.right.push(line.clone()),
        }
    }
    if state != State::Outside {
        return Err(malformed(doc.lines.len().saturating_sub(1), "unterminated conflict"));
    }
    if !stable.is_empty() {
        regions.push(Region::Stable(stable));
    }
    Ok(MergeOutcome {
        regions,
        eol: doc.eol,
        final_newline: doc.final_newline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lines::Eol;
    use proptest::prelude::*;

    fn strings(lines: &[&str]) -> Vec<String> {
        lines.iter().map(|s| s.to_string()).collect()
    }

    fn single() -> MergeOutcome {
        MergeOutcome {
            regions: vec![Region::Conflicted(Conflict {
                left: strings(&["L"]),
                base: strings(&["B"]),
                right: strings(&["R"]),
            })],
            eol: Eol::Lf,
            final_newline: true,
        }
    }

    #[test]
    fn renders_markers_in_order() {
        let text = render_conflict(&single()).unwrap();
        assert_eq!(text, "<<<<<<<\nL\n|||||||\nB\n=======\nR\n>>>>>>>\n");
        let kinds: Vec<Marker> = text.lines().filter_map(marker_of).collect();
        assert_eq!(kinds, vec![Marker::Start, Marker::Base, Marker::Separator, Marker::End]);
    }

    #[test]
    fn renders_labels() {
        let labels = MarkerLabels {
            left: Some("ours"),
            base: Some("base"),
            right: Some("theirs"),
        };
        let text = render_conflict_labeled(&single(), &labels).unwrap();
        assert_eq!(text, "<<<<<<< ours\nL\n||||||| base\nB\n=======\nR\n>>>>>>> theirs\n");
    }

    #[test]
    fn stable_only_renders_plain_document() {
        let outcome = MergeOutcome {
            regions: vec![Region::Stable(strings(&["a", "b"]))],
            eol: Eol::Lf,
            final_newline: true,
        };
        assert_eq!(render_conflict(&outcome).unwrap(), "a\nb\n");
    }

    #[test]
    fn refuses_marker_lines_in_content() {
        let outcome = MergeOutcome {
            regions: vec![Region::Stable(strings(&["a", "======="]))],
            eol: Eol::Lf,
            final_newline: true,
        };
        assert!(matches!(render_conflict(&outcome), Err(ConflictError::MarkerInContent { line: 2, .. })));
    }

    #[test]
    fn marker_recognition_is_exact() {
        assert_eq!(marker_of("<<<<<<<"), Some(Marker::Start));
        assert_eq!(marker_of("<<<<<<< HEAD"), Some(Marker::Start));
        assert_eq!(marker_of("<<<<<<<<"), None);
        assert_eq!(marker_of(" <<<<<<<"), None);
        assert_eq!(marker_of("======= x"), None);
        assert_eq!(marker_of(">>>>>>> feature/x"), Some(Marker::End));
    }

    #[test]
    fn plain_text_is_one_stable_region() {
        let out = parse_conflict("x\ny\n").unwrap();
        assert_eq!(out.regions, vec![Region::Stable(strings(&["x", "y"]))]);
    }

    #[test]
    fn unbalanced_start_is_malformed() {
        let err = parse_conflict("a\n<<<<<<<\nb\n").unwrap_err();
        assert!(matches!(err, ConflictError::MalformedMarkers { .. }));
    }

    #[test]
    fn nested_start_is_malformed() {
        let err = parse_conflict("<<<<<<<\n<<<<<<<\n=======\n>>>>>>>\n").unwrap_err();
        assert!(matches!(err, ConflictError::MalformedMarkers { line: 2, .. }));
    }

    #[test]
    fn stray_end_is_malformed() {
        assert!(parse_conflict("a\n>>>>>>>\n").is_err());
        assert!(parse_conflict("<<<<<<<\na\n>>>>>>>\n").is_err());
    }

    #[test]
    fn labels_are_discarded() {
        let out = parse_conflict("<<<<<<< HEAD\nL\n||||||| merged common ancestors\nB\n=======\nR\n>>>>>>> topic\n").unwrap();
        assert_eq!(out, single());
    }

    #[test]
    fn two_section_conflict_has_empty_base() {
        let out = parse_conflict("<<<<<<<\nL\n=======\nR\n>>>>>>>").unwrap();
        let c = out.conflicts().next().unwrap();
        assert!(c.base.is_empty());
        assert!(!out.final_newline);
    }

    fn line() -> impl Strategy<Value = String> {
        prop_oneof!["a", "b", "", "x y", "=", "<<<"].prop_map(String::from)
    }

    fn lines() -> impl Strategy<Value = Vec<String>> {
        proptest::collection::vec(line(), 0..4)
    }

    fn outcome() -> impl Strategy<Value = MergeOutcome> {
        let region = prop_oneof![
            proptest::collection::vec(line(), 1..4).prop_map(Region::Stable),
            (lines(), lines(), lines()).prop_map(|(left, base, right)| Region::Conflicted(Conflict { left, base, right })),
        ];
        (proptest::collection::vec(region, 0..5), any::<bool>(), any::<bool>()).prop_map(|(raw, crlf, nl)| {
            // Adjacent stable regions are a single region once rendered.
            let mut regions: Vec<Region> = Vec::new();
            for r in raw {
                match (regions.last_mut(), r) {
                    (Some(Region::Stable(acc)), Region::Stable(more)) => acc.extend(more),
                    (_, r) => regions.push(r),
                }
            }
            let final_newline = nl && !regions.is_empty();
            MergeOutcome { regions, eol: if crlf { Eol::CrLf } else { Eol::Lf }, final_newline }
        })
    }

    proptest! {
        #[test]
        fn parse_inverts_render(o in outcome()) {
            // A trailing empty line without a terminator renders as nothing.
            let empty_tail = matches!(o.regions.last(), Some(Region::Stable(l)) if l.last().is_some_and(|s| s.is_empty()));
            prop_assume!(o.final_newline || !empty_tail);
            let text = render_conflict(&o).unwrap();
            let back = parse_conflict(&text).unwrap();
            // Without a terminated line the eol convention is not recoverable.
            if !text.contains('\n') {
                prop_assert_eq!(back.regions, o.regions);
            } else {
                prop_assert_eq!(back, o);
            }
        }
    }
}
