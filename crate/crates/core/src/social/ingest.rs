use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::graph::SocialGraph;
use super::ids::{ActionId, IdMap, SubjectId};
use super::log::{ActionLog, ActionRecord};

/// Errors raised while parsing graph or action streams.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: expected `source<TAB>target`, got {content:?}")]
    MalformedGraphLine { line: usize, content: String },
    #[error("line {line}: expected `subject<TAB>action[<TAB>timestamp]`, got {content:?}")]
    MalformedActionLine { line: usize, content: String },
    #[error("line {line}: invalid timestamp {value:?}")]
    InvalidTimestamp { line: usize, value: String },
    #[error("line {line}: identifier {value:?} contains whitespace")]
    WhitespaceInIdentifier { line: usize, value: String },
    #[error("empty input: no edges found")]
    EmptyGraph,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GraphLoadStats {
    pub self_loops_dropped: usize,
    pub duplicate_edges_collapsed: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ActionLoadStats {
    pub unknown_subject_records: usize,
    pub duplicate_records_merged: usize,
}

fn check_identifier(field: &str, line: usize) -> Result<(), IngestError> {
    if field.is_empty() || field.chars().any(char::is_whitespace) {
        return Err(IngestError::WhitespaceInIdentifier { line, value: field.to_string() });
    }
    Ok(())
}

/// Loads a directed graph from `source<TAB>target` lines.
///
/// Blank lines and `#`-prefixed comment lines are skipped. Duplicate edges
/// are collapsed and self-loops dropped; both are counted in the returned
/// stats. Ids become dense indices in first-seen order.
pub fn load_graph<R: BufRead>(reader: R) -> Result<(SocialGraph, GraphLoadStats), IngestError> {
    let mut subjects = IdMap::new();
    let mut edges: Vec<(SubjectId, SubjectId)> = Vec::new();
    let mut saw_data = false;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let lineno = lineno + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (source, target) = match (fields.next(), fields.next(), fields.next()) {
            (Some(s), Some(t), None) => (s, t),
            _ => {
                return Err(IngestError::MalformedGraphLine {
                    line: lineno,
                    content: line.to_string(),
                })
            }
        };
        check_identifier(source, lineno)?;
        check_identifier(target, lineno)?;
        saw_data = true;
        let s = SubjectId::new(subjects.intern(source));
        let t = SubjectId::new(subjects.intern(target));
        edges.push((s, t));
    }

    if !saw_data {
        return Err(IngestError::EmptyGraph);
    }

    let (graph, build) = SocialGraph::build(subjects, edges);
    Ok((
        graph,
        GraphLoadStats {
            self_loops_dropped: build.self_loops_dropped,
            duplicate_edges_collapsed: build.duplicate_edges_collapsed,
        },
    ))
}

/// Loads an action log from `subject<TAB>action[<TAB>timestamp]` lines.
///
/// Records naming subjects absent from `graph` are skipped (counted).
/// Duplicate (subject, action) records merge onto the earliest timestamp.
/// An empty stream yields an empty log.
pub fn load_actions<R: BufRead>(
    reader: R,
    graph: &SocialGraph,
) -> Result<(ActionLog, ActionLoadStats), IngestError> {
    let mut actions = IdMap::new();
    let mut records: Vec<ActionRecord> = Vec::new();
    let mut stats = ActionLoadStats::default();

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let lineno = lineno + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (subject, action, ts_field) =
            match (fields.next(), fields.next(), fields.next(), fields.next()) {
                (Some(s), Some(a), ts, None) => (s, a, ts),
                _ => {
                    return Err(IngestError::MalformedActionLine {
                        line: lineno,
                        content: line.to_string(),
                    })
                }
            };
        check_identifier(subject, lineno)?;
        check_identifier(action, lineno)?;
        let timestamp = match ts_field {
            None => None,
            Some(raw) => Some(raw.parse::<i64>().map_err(|_| IngestError::InvalidTimestamp {
                line: lineno,
                value: raw.to_string(),
            })?),
        };
        let Some(subject) = graph.subject_id(subject) else {
            stats.unknown_subject_records += 1;
            continue;
        };
        let action = ActionId::new(actions.intern(action));
        records.push(ActionRecord { subject, action, timestamp });
    }

    let raw_count = records.len();
    let log = ActionLog::build(graph.n_subjects(), actions, records);
    stats.duplicate_records_merged = raw_count - log.n_records();
    Ok((log, stats))
}

/// Writes a graph back out in the ingestion format, original ids, canonical
/// edge order.
pub fn write_graph<W: Write>(mut w: W, graph: &SocialGraph) -> io::Result<()> {
    for (source, target) in graph.edges() {
        writeln!(w, "{}\t{}", graph.subject_name(source), graph.subject_name(target))?;
    }
    Ok(())
}

/// Writes an action log in the ingestion format, record order.
pub fn write_actions<W: Write>(mut w: W, graph: &SocialGraph, log: &ActionLog) -> io::Result<()> {
    for rec in log.records() {
        let subject = graph.subject_name(rec.subject);
        let action = log.action_name(rec.action);
        match rec.timestamp {
            Some(ts) => writeln!(w, "{subject}\t{action}\t{ts}")?,
            None => writeln!(w, "{subject}\t{action}")?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::social::log::TimestampMode;

    #[test]
    fn duplicate_edges_collapse_and_loops_drop() {
        let input = "a\tb\nb\ta\na\tb\n";
        let (g, stats) = load_graph(input.as_bytes()).unwrap();
        assert_eq!(g.n_subjects(), 2);
        assert_eq!(g.n_edges(), 2);
        assert_eq!(stats.duplicate_edges_collapsed, 1);

        let (g, stats) = load_graph("a\ta\n".as_bytes()).unwrap();
        assert_eq!(g.n_subjects(), 1);
        assert_eq!(g.n_edges(), 0);
        assert_eq!(stats.self_loops_dropped, 1);
    }

    #[test]
    fn star_graph_loads_in_neighbors() {
        let input = "u1\tu5\nu2\tu5\nu3\tu5\nu4\tu5\n";
        let (g, _) = load_graph(input.as_bytes()).unwrap();
        let u5 = g.subject_id("u5").unwrap();
        let friends: Vec<&str> = g.in_neighbors(u5).iter().map(|&s| g.subject_name(s)).collect();
        assert_eq!(friends, vec!["u1", "u2", "u3", "u4"]);
    }

    #[test]
    fn malformed_graph_line_names_line_number() {
        let err = load_graph("a\tb\nonly-one-field\n".as_bytes()).unwrap_err();
        match err {
            IngestError::MalformedGraphLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_graph_is_an_error() {
        assert!(matches!(load_graph("".as_bytes()), Err(IngestError::EmptyGraph)));
        assert!(matches!(
            load_graph("# just a comment\n".as_bytes()),
            Err(IngestError::EmptyGraph)
        ));
    }

    #[test]
    fn actions_earliest_timestamp_wins() {
        let (g, _) = load_graph("u1\tu2\n".as_bytes()).unwrap();
        let (log, stats) = load_actions("u1\ta\t5\nu1\ta\t3\n".as_bytes(), &g).unwrap();
        assert_eq!(log.n_records(), 1);
        assert_eq!(stats.duplicate_records_merged, 1);
        let u1 = g.subject_id("u1").unwrap();
        let a = log.action_id("a").unwrap();
        assert_eq!(log.timestamp_of(u1, a), Some(Some(3)));
    }

    #[test]
    fn unknown_subjects_are_skipped_with_count() {
        let (g, _) = load_graph("u1\tu2\n".as_bytes()).unwrap();
        let (log, stats) = load_actions("ghost\ta\t1\nu1\ta\t1\n".as_bytes(), &g).unwrap();
        assert_eq!(stats.unknown_subject_records, 1);
        assert_eq!(log.n_records(), 1);
    }

    #[test]
    fn timestamp_free_stream_is_valid() {
        let (g, _) = load_graph("u1\tu2\n".as_bytes()).unwrap();
        let (log, _) = load_actions("u1\ta\nu2\tb\n".as_bytes(), &g).unwrap();
        assert_eq!(log.timestamp_mode(), TimestampMode::Absent);
        assert_eq!(log.n_records(), 2);
    }

    #[test]
    fn bad_timestamp_is_rejected_with_line() {
        let (g, _) = load_graph("u1\tu2\n".as_bytes()).unwrap();
        let err = load_actions("u1\ta\tnot-a-number\n".as_bytes(), &g).unwrap_err();
        match err {
            IngestError::InvalidTimestamp { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn round_trip_preserves_content() {
        let input = "u1\tu5\nu2\tu5\n";
        let (g, _) = load_graph(input.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_graph(&mut out, &g).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), input);

        let (log, _) = load_actions("u1\te1\t10\nu5\te1\t12\n".as_bytes(), &g).unwrap();
        let mut out = Vec::new();
        write_actions(&mut out, &g, &log).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "u1\te1\t10\nu5\te1\t12\n");
    }
}
