use std::fmt::Write as _;

use thiserror::Error;

use super::graph::SocialGraph;
use super::ids::{ActionId, IdMap, SubjectId};
use super::log::{ActionLog, ActionRecord};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FilterError {
    #[error("empty after filtering: no subject satisfies the criteria")]
    EmptyAfterFiltering,
}

/// Counts of what `filter_dataset` removed, per criterion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FilterReport {
    pub rounds: usize,
    pub subjects_removed_no_edges: usize,
    pub subjects_removed_min_actions: usize,
    pub edges_removed: usize,
    pub records_removed: usize,
    pub actions_removed: usize,
    pub subjects_before: usize,
    pub subjects_after: usize,
    pub edges_before: usize,
    pub edges_after: usize,
    pub records_before: usize,
    pub records_after: usize,
}

impl FilterReport {
    /// Structured-text rendering for dataset summaries.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "filter rounds\t{}", self.rounds);
        let _ = writeln!(out, "subjects removed (no edges)\t{}", self.subjects_removed_no_edges);
        let _ = writeln!(
            out,
            "subjects removed (below min actions)\t{}",
            self.subjects_removed_min_actions
        );
        let _ = writeln!(out, "edges removed\t{}", self.edges_removed);
        let _ = writeln!(out, "records removed\t{}", self.records_removed);
        let _ = writeln!(out, "actions removed (no remaining records)\t{}", self.actions_removed);
        let _ = writeln!(out, "subjects\t{} -> {}", self.subjects_before, self.subjects_after);
        let _ = writeln!(out, "edges\t{} -> {}", self.edges_before, self.edges_after);
        let _ = writeln!(out, "records\t{} -> {}", self.records_before, self.records_after);
        out
    }
}

/// Removes subjects with no incident edges or fewer than `min_actions`
/// performed actions, together with their records and edges, iterating until
/// no further subject violates either criterion. Surviving subject and
/// action ids are re-densified; the original identifiers are retained in the
/// returned maps.
pub fn filter_dataset(
    graph: &SocialGraph,
    log: &ActionLog,
    min_actions: usize,
) -> Result<(SocialGraph, ActionLog, FilterReport), FilterError> {
    let n = graph.n_subjects();
    let mut keep = vec![true; n];
    // Per-subject action counts never change here: a record is only removed
    // together with its subject.
    let action_counts: Vec<usize> = (0..n)
        .map(|s| log.actions_of(SubjectId::new(s as u32)).len())
        .collect();
    let mut report = FilterReport {
        subjects_before: n,
        edges_before: graph.n_edges(),
        records_before: log.n_records(),
        ..FilterReport::default()
    };

    loop {
        let mut removed_any = false;
        // Degrees within the kept set, recomputed per round.
        let mut degree = vec![0usize; n];
        for (source, target) in graph.edges() {
            if keep[source.index()] && keep[target.index()] {
                degree[source.index()] += 1;
                degree[target.index()] += 1;
            }
        }
        for s in 0..n {
            if !keep[s] {
                continue;
            }
            if degree[s] == 0 {
                keep[s] = false;
                report.subjects_removed_no_edges += 1;
                removed_any = true;
            } else if action_counts[s] < min_actions {
                keep[s] = false;
                report.subjects_removed_min_actions += 1;
                removed_any = true;
            }
        }
        if !removed_any {
            break;
        }
        report.rounds += 1;
    }

    if keep.iter().all(|&k| !k) {
        return Err(FilterError::EmptyAfterFiltering);
    }

    // Re-densify subjects.
    let mut remap: Vec<Option<SubjectId>> = vec![None; n];
    let mut subjects = IdMap::new();
    for s in 0..n {
        if keep[s] {
            let idx = subjects.intern(graph.subject_name(SubjectId::new(s as u32)));
            remap[s] = Some(SubjectId::new(idx));
        }
    }

    let edges: Vec<(SubjectId, SubjectId)> = graph
        .edges()
        .filter_map(|(s, t)| Some((remap[s.index()]?, remap[t.index()]?)))
        .collect();
    report.edges_after = edges.len();
    report.edges_removed = report.edges_before - report.edges_after;
    let (new_graph, _) = SocialGraph::build(subjects, edges);

    // Re-densify actions, dropping those with no surviving records.
    let mut action_alive = vec![false; log.n_actions()];
    for rec in log.records() {
        if remap[rec.subject.index()].is_some() {
            action_alive[rec.action.index()] = true;
        }
    }
    let mut actions = IdMap::new();
    let mut action_remap: Vec<Option<ActionId>> = vec![None; log.n_actions()];
    for a in 0..log.n_actions() {
        if action_alive[a] {
            let idx = actions.intern(log.action_name(ActionId::new(a as u32)));
            action_remap[a] = Some(ActionId::new(idx));
        }
    }
    report.actions_removed = log.n_actions() - actions.len();

    let records: Vec<ActionRecord> = log
        .records()
        .iter()
        .filter_map(|rec| {
            Some(ActionRecord {
                subject: remap[rec.subject.index()]?,
                action: action_remap[rec.action.index()].expect("kept record has live action"),
                timestamp: rec.timestamp,
            })
        })
        .collect();
    report.records_after = records.len();
    report.records_removed = report.records_before - report.records_after;
    report.subjects_after = new_graph.n_subjects();
    let new_log = ActionLog::build(new_graph.n_subjects(), actions, records);

    Ok((new_graph, new_log, report))
}
