use super::ids::{IdMap, SubjectId};

/// Counters reported by [`SocialGraph::build`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GraphBuildStats {
    pub self_loops_dropped: usize,
    pub duplicate_edges_collapsed: usize,
}

/// Directed social graph over dense subject ids.
///
/// An edge `(source, target)` means `source` can influence `target`;
/// `source` is called a friend of `target`. Adjacency is stored as CSR in
/// both directions so friend lists are retrievable in O(degree).
///
/// Edges are enumerated in a canonical order — by target, then by source —
/// and every edge has a stable index in that order. Per-edge tables
/// (propagation statistics, fitted probabilities) are laid out parallel to
/// this enumeration.
#[derive(Clone, Debug)]
pub struct SocialGraph {
    subjects: IdMap,
    in_offsets: Vec<usize>,
    in_sources: Vec<SubjectId>,
    out_offsets: Vec<usize>,
    out_targets: Vec<SubjectId>,
}

impl SocialGraph {
    /// Builds a graph from raw edges, dropping self-loops and collapsing
    /// duplicates. Subjects interned in `subjects` but absent from `edges`
    /// stay in the graph as isolated nodes.
    pub fn build(
        subjects: IdMap,
        edges: impl IntoIterator<Item = (SubjectId, SubjectId)>,
    ) -> (Self, GraphBuildStats) {
        let n = subjects.len();
        let mut stats = GraphBuildStats::default();

        // Canonical order: target-major.
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for (source, target) in edges {
            assert!(source.index() < n && target.index() < n, "edge endpoint out of range");
            if source == target {
                stats.self_loops_dropped += 1;
                continue;
            }
            pairs.push((target.value(), source.value()));
        }
        pairs.sort_unstable();
        let before = pairs.len();
        pairs.dedup();
        stats.duplicate_edges_collapsed = before - pairs.len();

        let mut in_offsets = vec![0usize; n + 1];
        for &(target, _) in &pairs {
            in_offsets[target as usize + 1] += 1;
        }
        for i in 0..n {
            in_offsets[i + 1] += in_offsets[i];
        }
        let in_sources: Vec<SubjectId> =
            pairs.iter().map(|&(_, source)| SubjectId::new(source)).collect();

        let mut out_degree = vec![0usize; n];
        for &(_, source) in &pairs {
            out_degree[source as usize] += 1;
        }
        let mut out_offsets = vec![0usize; n + 1];
        for i in 0..n {
            out_offsets[i + 1] = out_offsets[i] + out_degree[i];
        }
        let mut cursor = out_offsets.clone();
        let mut out_targets = vec![SubjectId::new(0); pairs.len()];
        for &(target, source) in &pairs {
            out_targets[cursor[source as usize]] = SubjectId::new(target);
            cursor[source as usize] += 1;
        }

        (
            Self { subjects, in_offsets, in_sources, out_offsets, out_targets },
            stats,
        )
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn n_edges(&self) -> usize {
        self.in_sources.len()
    }

    /// Friends of `target`: subjects with an edge into `target`, ascending.
    pub fn in_neighbors(&self, target: SubjectId) -> &[SubjectId] {
        let t = target.index();
        &self.in_sources[self.in_offsets[t]..self.in_offsets[t + 1]]
    }

    /// Subjects that `source` can influence, ascending.
    pub fn out_neighbors(&self, source: SubjectId) -> &[SubjectId] {
        let s = source.index();
        &self.out_targets[self.out_offsets[s]..self.out_offsets[s + 1]]
    }

    pub fn in_degree(&self, subject: SubjectId) -> usize {
        self.in_neighbors(subject).len()
    }

    pub fn out_degree(&self, subject: SubjectId) -> usize {
        self.out_neighbors(subject).len()
    }

    pub fn has_edge(&self, source: SubjectId, target: SubjectId) -> bool {
        self.edge_index(source, target).is_some()
    }

    /// Stable index of edge `(source, target)` in the canonical enumeration.
    pub fn edge_index(&self, source: SubjectId, target: SubjectId) -> Option<usize> {
        let base = self.in_offsets[target.index()];
        let list = self.in_neighbors(target);
        list.binary_search(&source).ok().map(|pos| base + pos)
    }

    /// All edges as `(source, target)`, in canonical (target-major) order.
    pub fn edges(&self) -> impl Iterator<Item = (SubjectId, SubjectId)> + '_ {
        (0..self.n_subjects()).flat_map(move |t| {
            let target = SubjectId::new(t as u32);
            self.in_neighbors(target).iter().map(move |&source| (source, target))
        })
    }

    pub fn subjects(&self) -> &IdMap {
        &self.subjects
    }

    pub fn subject_id(&self, name: &str) -> Option<SubjectId> {
        self.subjects.get(name).map(SubjectId::new)
    }

    pub fn subject_name(&self, id: SubjectId) -> &str {
        self.subjects.name(id.value())
    }
}

#[cfg(test)]
pub(crate) fn graph_from_names(edges: &[(&str, &str)]) -> (SocialGraph, GraphBuildStats) {
    let mut ids = IdMap::new();
    let pairs: Vec<(SubjectId, SubjectId)> = edges
        .iter()
        .map(|&(s, t)| (SubjectId::new(ids.intern(s)), SubjectId::new(ids.intern(t))))
        .collect();
    SocialGraph::build(ids, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapses_duplicates_and_keeps_direction() {
        let (g, stats) = graph_from_names(&[("a", "b"), ("b", "a"), ("a", "b")]);
        assert_eq!(g.n_subjects(), 2);
        assert_eq!(g.n_edges(), 2);
        assert_eq!(stats.duplicate_edges_collapsed, 1);
        assert_eq!(stats.self_loops_dropped, 0);
        let a = g.subject_id("a").unwrap();
        let b = g.subject_id("b").unwrap();
        assert!(g.has_edge(a, b));
        assert!(g.has_edge(b, a));
    }

    #[test]
    fn drops_self_loops_with_count() {
        let (g, stats) = graph_from_names(&[("a", "a")]);
        assert_eq!(g.n_subjects(), 1);
        assert_eq!(g.n_edges(), 0);
        assert_eq!(stats.self_loops_dropped, 1);
    }

    #[test]
    fn star_in_neighbors() {
        let (g, _) =
            graph_from_names(&[("u1", "u5"), ("u2", "u5"), ("u3", "u5"), ("u4", "u5")]);
        let u5 = g.subject_id("u5").unwrap();
        let friends: Vec<&str> =
            g.in_neighbors(u5).iter().map(|&s| g.subject_name(s)).collect();
        assert_eq!(friends, vec!["u1", "u2", "u3", "u4"]);
        assert_eq!(g.out_degree(u5), 0);
        assert_eq!(g.in_degree(u5), 4);
    }

    #[test]
    fn edge_indices_are_canonical_and_dense() {
        let (g, _) = graph_from_names(&[("a", "b"), ("c", "b"), ("b", "c")]);
        let seen: Vec<usize> = g
            .edges()
            .map(|(s, t)| g.edge_index(s, t).unwrap())
            .collect();
        assert_eq!(seen, (0..g.n_edges()).collect::<Vec<_>>());
    }
}
