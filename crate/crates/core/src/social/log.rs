use super::ids::{ActionId, IdMap, SubjectId};

/// One activation: `subject` performed `action`, optionally at a time.
///
/// Activation is one-shot — a subject either performed an action or not, so
/// a log holds at most one record per (subject, action) pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ActionRecord {
    pub subject: SubjectId,
    pub action: ActionId,
    pub timestamp: Option<i64>,
}

/// Whether the records of a log carry timestamps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimestampMode {
    /// Every record has a timestamp.
    Full,
    /// No record has a timestamp.
    Absent,
    /// Some records have timestamps and some do not.
    Mixed,
}

/// Deduplicated action log with per-subject and per-action indexes.
#[derive(Clone, Debug)]
pub struct ActionLog {
    n_subjects: usize,
    actions: IdMap,
    records: Vec<ActionRecord>,
    by_subject: Vec<Vec<(ActionId, Option<i64>)>>,
    by_action: Vec<Vec<(SubjectId, Option<i64>)>>,
}

impl ActionLog {
    /// Builds a log from records, collapsing duplicate (subject, action)
    /// pairs onto the earliest timestamp (a timestamped record beats an
    /// untimestamped one; among untimestamped ones the first wins).
    pub fn build(n_subjects: usize, actions: IdMap, records: Vec<ActionRecord>) -> Self {
        let mut sorted = records;
        sorted.sort_by_key(|r| (r.subject, r.action));
        let mut unique: Vec<ActionRecord> = Vec::with_capacity(sorted.len());
        for rec in sorted {
            assert!(rec.subject.index() < n_subjects, "record subject out of range");
            assert!(rec.action.index() < actions.len(), "record action out of range");
            match unique.last_mut() {
                Some(last) if last.subject == rec.subject && last.action == rec.action => {
                    last.timestamp = match (last.timestamp, rec.timestamp) {
                        (Some(a), Some(b)) => Some(a.min(b)),
                        (None, Some(b)) => Some(b),
                        (kept, None) => kept,
                    };
                }
                _ => unique.push(rec),
            }
        }

        let mut by_subject = vec![Vec::new(); n_subjects];
        let mut by_action = vec![Vec::new(); actions.len()];
        for rec in &unique {
            by_subject[rec.subject.index()].push((rec.action, rec.timestamp));
            by_action[rec.action.index()].push((rec.subject, rec.timestamp));
        }

        Self { n_subjects, actions, records: unique, by_subject, by_action }
    }

    pub fn n_subjects(&self) -> usize {
        self.n_subjects
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn n_records(&self) -> usize {
        self.records.len()
    }

    pub fn records(&self) -> &[ActionRecord] {
        &self.records
    }

    /// Actions performed by `subject`, ascending by action id.
    pub fn actions_of(&self, subject: SubjectId) -> &[(ActionId, Option<i64>)] {
        &self.by_subject[subject.index()]
    }

    /// Subjects that performed `action`, ascending by subject id.
    pub fn performers(&self, action: ActionId) -> &[(SubjectId, Option<i64>)] {
        &self.by_action[action.index()]
    }

    pub fn performed(&self, subject: SubjectId, action: ActionId) -> bool {
        self.timestamp_of(subject, action).is_some()
    }

    /// `Some(ts)` if the record exists (`ts` itself may be `None`).
    pub fn timestamp_of(&self, subject: SubjectId, action: ActionId) -> Option<Option<i64>> {
        let list = &self.by_subject[subject.index()];
        list.binary_search_by_key(&action, |&(a, _)| a)
            .ok()
            .map(|pos| list[pos].1)
    }

    pub fn timestamp_mode(&self) -> TimestampMode {
        let with_ts = self.records.iter().filter(|r| r.timestamp.is_some()).count();
        if with_ts == self.records.len() {
            TimestampMode::Full
        } else if with_ts == 0 {
            TimestampMode::Absent
        } else {
            TimestampMode::Mixed
        }
    }

    pub fn actions(&self) -> &IdMap {
        &self.actions
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.actions.get(name).map(ActionId::new)
    }

    pub fn action_name(&self, id: ActionId) -> &str {
        self.actions.name(id.value())
    }

    /// A log over the same subject/action id spaces holding only the records
    /// accepted by `keep`.
    pub fn subset(&self, mut keep: impl FnMut(&ActionRecord) -> bool) -> ActionLog {
        let records: Vec<ActionRecord> =
            self.records.iter().filter(|r| keep(r)).copied().collect();
        ActionLog::build(self.n_subjects, self.actions.clone(), records)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(subject: u32, action: u32, ts: Option<i64>) -> ActionRecord {
        ActionRecord {
            subject: SubjectId::new(subject),
            action: ActionId::new(action),
            timestamp: ts,
        }
    }

    #[test]
    fn duplicates_keep_earliest_timestamp() {
        let mut actions = IdMap::new();
        actions.intern("a");
        let log = ActionLog::build(1, actions, vec![rec(0, 0, Some(5)), rec(0, 0, Some(3))]);
        assert_eq!(log.n_records(), 1);
        assert_eq!(log.timestamp_of(SubjectId::new(0), ActionId::new(0)), Some(Some(3)));
    }

    #[test]
    fn indexes_are_consistent_projections() {
        let mut actions = IdMap::new();
        actions.intern("a");
        actions.intern("b");
        let log = ActionLog::build(
            3,
            actions,
            vec![rec(2, 1, Some(4)), rec(0, 0, Some(1)), rec(2, 0, Some(2))],
        );
        assert_eq!(log.actions_of(SubjectId::new(2)).len(), 2);
        assert_eq!(log.performers(ActionId::new(0)).len(), 2);
        assert_eq!(log.performers(ActionId::new(1)), &[(SubjectId::new(2), Some(4))]);
        assert_eq!(log.timestamp_mode(), TimestampMode::Full);
    }

    #[test]
    fn timestamp_modes() {
        let mut actions = IdMap::new();
        actions.intern("a");
        let full = ActionLog::build(2, actions.clone(), vec![rec(0, 0, Some(1))]);
        assert_eq!(full.timestamp_mode(), TimestampMode::Full);
        let absent = ActionLog::build(2, actions.clone(), vec![rec(0, 0, None)]);
        assert_eq!(absent.timestamp_mode(), TimestampMode::Absent);
        let mixed =
            ActionLog::build(2, actions, vec![rec(0, 0, Some(1)), rec(1, 0, None)]);
        assert_eq!(mixed.timestamp_mode(), TimestampMode::Mixed);
    }
}
