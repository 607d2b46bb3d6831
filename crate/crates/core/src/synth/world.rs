use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::baselines::{EdgeProbabilities, EstimatorKind};
use crate::social::{IdMap, SocialGraph, SubjectId};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("need at least 2 subjects, got {n}")]
    TooFewSubjects { n: usize },
    #[error("average in-degree {value} outside (0, n)")]
    InvalidInDegree { value: f64 },
    #[error("seed fraction {value} outside [0, 1]")]
    InvalidSeedFraction { value: f64 },
    #[error("probability range [{low}, {high}] invalid")]
    InvalidProbRange { low: f64, high: f64 },
    #[error("pair ({first}, {second} -> {target}) references a missing edge")]
    MissingPairEdge { first: SubjectId, second: SubjectId, target: SubjectId },
    #[error("pair sources must differ")]
    DegeneratePair,
    #[error("only {available} subjects have in-degree >= 2; cannot plant {requested} pairs")]
    NotEnoughPairTargets { available: usize, requested: usize },
    #[error("episode generation needs a world with the {expected:?} tag")]
    WrongWorldKind { expected: WorldKind },
}

/// Which mechanism generated (or should generate) a world's episodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WorldKind {
    /// Every edge fires independently with its planted probability.
    Independent,
    /// Planted pair targets activate only when both pair sources are
    /// already active; all other edges behave independently.
    DependentAnd,
}

/// A planted AND-dependence: `target` activates through `first` and
/// `second` only jointly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AndPair {
    pub first: SubjectId,
    pub second: SubjectId,
    pub target: SubjectId,
}

/// A generated graph together with its ground-truth edge probabilities.
#[derive(Clone, Debug)]
pub struct PlantedWorld {
    pub graph: SocialGraph,
    pub true_probs: EdgeProbabilities,
    pub kind: WorldKind,
    pub pairs: Vec<AndPair>,
    pub seed: u64,
}

/// Random directed graph: each ordered pair (source, target) with source !=
/// target becomes an edge independently with probability
/// `avg_in_degree / (n - 1)`.
pub fn generate_graph(n: usize, avg_in_degree: f64, seed: u64) -> Result<SocialGraph, SynthError> {
    if n < 2 {
        return Err(SynthError::TooFewSubjects { n });
    }
    if !(avg_in_degree > 0.0 && avg_in_degree < n as f64) {
        return Err(SynthError::InvalidInDegree { value: avg_in_degree });
    }
    let p = (avg_in_degree / (n as f64 - 1.0)).min(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for target in 0..n {
        for source in 0..n {
            if source == target {
                continue;
            }
            if rng.random::<f64>() < p {
                edges.push((SubjectId::new(source as u32), SubjectId::new(target as u32)));
            }
        }
    }
    let (graph, _) = SocialGraph::build(IdMap::dense(n), edges);
    Ok(graph)
}

fn uniform_probs(
    graph: &SocialGraph,
    low: f64,
    high: f64,
    seed: u64,
) -> Result<Vec<f64>, SynthError> {
    if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || low > high {
        return Err(SynthError::InvalidProbRange { low, high });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..graph.n_edges())
        .map(|_| if low == high { low } else { rng.random_range(low..high) })
        .collect())
}

fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl PlantedWorld {
    /// World whose edges all behave independently, probabilities uniform in
    /// `[prob_low, prob_high]`.
    pub fn independent(
        n: usize,
        avg_in_degree: f64,
        prob_low: f64,
        prob_high: f64,
        seed: u64,
    ) -> Result<Self, SynthError> {
        let graph = generate_graph(n, avg_in_degree, mix(seed, 1))?;
        let values = uniform_probs(&graph, prob_low, prob_high, mix(seed, 2))?;
        Ok(Self {
            true_probs: EdgeProbabilities::new(EstimatorKind::Bernoulli, values),
            graph,
            kind: WorldKind::Independent,
            pairs: Vec::new(),
            seed,
        })
    }

    /// Like [`Self::independent`], but plants `n_pairs` AND-dependences
    /// whose joint effect dominates the planted targets' behavior.
    ///
    /// Structure of the world:
    ///
    /// * A small pool of *source* subjects is kept highly active by strong
    ///   independent in-edges from ordinary donors; activity levels vary
    ///   widely across sources. Without this, two specific subjects almost
    ///   never co-activate in a sparse cascade world and the planted joint
    ///   effect would barely appear in the data.
    /// * Each pair takes two distinct sources and one target. Pair edges
    ///   carry probability 1 but only fire jointly; the target's remaining
    ///   in-edges (including a few added camouflage edges) carry
    ///   probability 0 — subscriptions without influence. A target thus
    ///   activates only by seeding or when both its sources are already
    ///   active.
    /// * All other edges behave independently with probabilities uniform in
    ///   `[prob_low, prob_high]`.
    ///
    /// Because source activity levels differ across a wide band, the
    /// per-pair score scales are heterogeneous: no single global activation
    /// threshold separates "one source active" from "both sources active"
    /// for every pair at once, while a model that represents the joint
    /// effect per subject is unaffected.
    ///
    /// The planted wiring is budgeted against `avg_in_degree`: the base
    /// random graph is thinned so the overall mean in-degree (base plus
    /// planted edges) stays at the requested value.
    pub fn dependent_and(
        n: usize,
        avg_in_degree: f64,
        prob_low: f64,
        prob_high: f64,
        n_pairs: usize,
        seed: u64,
    ) -> Result<Self, SynthError> {
        const INERT_EDGES_PER_TARGET: usize = 6;
        const DONOR_EDGES_MIN: usize = 3;
        const DONOR_EDGES_MAX: usize = 42;
        const DONOR_PROB_RANGE: (f64, f64) = (0.6, 0.95);

        // Smallest source pool offering n_pairs distinct source pairs.
        let mut n_sources = 2usize;
        while n_sources * (n_sources - 1) / 2 < n_pairs {
            n_sources += 1;
        }
        let n_normals = n.saturating_sub(n_pairs + n_sources);
        if n_normals < DONOR_EDGES_MAX {
            return Err(SynthError::NotEnoughPairTargets {
                available: n_normals,
                requested: n_pairs,
            });
        }

        let donor_counts: Vec<usize> = (0..n_sources)
            .map(|i| {
                DONOR_EDGES_MIN
                    + (DONOR_EDGES_MAX - DONOR_EDGES_MIN) * i / (n_sources - 1).max(1)
            })
            .collect();
        let planted = n_pairs * (2 + INERT_EDGES_PER_TARGET)
            + donor_counts.iter().sum::<usize>();
        let base_degree = avg_in_degree - planted as f64 / n as f64;
        if base_degree <= 1.0 {
            return Err(SynthError::InvalidInDegree { value: base_degree });
        }
        let base = generate_graph(n, base_degree, mix(seed, 1))?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, 3));

        let mut everyone: Vec<SubjectId> = (0..n as u32).map(SubjectId::new).collect();
        everyone.shuffle(&mut rng);
        let sources: Vec<SubjectId> = everyone[..n_sources].to_vec();
        let targets: Vec<SubjectId> = everyone[n_sources..n_sources + n_pairs].to_vec();
        let normals: Vec<SubjectId> = everyone[n_sources + n_pairs..].to_vec();

        // Donor edges keep each source active at its own characteristic
        // rate.
        let mut planted_probs: Vec<((SubjectId, SubjectId), f64)> = Vec::new();
        for (source_index, &source) in sources.iter().enumerate() {
            let mut donors = normals.clone();
            donors.shuffle(&mut rng);
            for &donor in donors.iter().take(donor_counts[source_index]) {
                let p = rng.random_range(DONOR_PROB_RANGE.0..DONOR_PROB_RANGE.1);
                planted_probs.push(((donor, source), p));
            }
        }

        // Pairs: distinct source combinations, one per target. Prefer
        // combinations of similarly active sources: when the two sources'
        // activity levels differ a lot, the whole joint effect can be
        // attributed to the quieter source alone, which an independence
        // model represents just fine.
        let mut combos: Vec<(usize, usize)> = Vec::new();
        for a in 0..n_sources {
            for b in a + 1..n_sources {
                combos.push((a, b));
            }
        }
        combos.shuffle(&mut rng);
        combos.sort_by_key(|&(a, b)| donor_counts[b].abs_diff(donor_counts[a]));
        let combos: Vec<(SubjectId, SubjectId)> =
            combos.into_iter().map(|(a, b)| (sources[a], sources[b])).collect();
        let mut pairs = Vec::with_capacity(n_pairs);
        let mut inert_edges: Vec<(SubjectId, SubjectId)> = Vec::new();
        for (&target, &(first, second)) in targets.iter().zip(&combos) {
            planted_probs.push(((first, target), 1.0));
            planted_probs.push(((second, target), 1.0));
            // Camouflage comes from the other sources: busy friends whose
            // co-performance is pure coincidence.
            let mut camouflage: Vec<SubjectId> =
                sources.iter().copied().filter(|&s| s != first && s != second).collect();
            camouflage.shuffle(&mut rng);
            for &donor in camouflage.iter().take(INERT_EDGES_PER_TARGET) {
                inert_edges.push((donor, target));
            }
            pairs.push(AndPair { first, second, target });
        }
        pairs.sort_by_key(|p| p.target);

        let all_edges: Vec<(SubjectId, SubjectId)> = base
            .edges()
            .chain(planted_probs.iter().map(|&(e, _)| e))
            .chain(inert_edges.iter().copied())
            .collect();
        let (graph, _) = SocialGraph::build(base.subjects().clone(), all_edges);

        let mut values = uniform_probs(&graph, prob_low, prob_high, mix(seed, 2))?;
        let planted_map: std::collections::HashMap<(SubjectId, SubjectId), f64> =
            planted_probs.into_iter().collect();
        let is_target = |s: SubjectId| pairs.binary_search_by_key(&s, |p| p.target).is_ok();
        for (edge_index, (source, target)) in graph.edges().enumerate() {
            if let Some(&p) = planted_map.get(&(source, target)) {
                values[edge_index] = p;
            } else if is_target(target) {
                values[edge_index] = 0.0;
            }
        }

        Ok(Self {
            true_probs: EdgeProbabilities::new(EstimatorKind::Bernoulli, values),
            graph,
            kind: WorldKind::DependentAnd,
            pairs,
            seed,
        })
    }
}

/// Writes the world manifest: generation parameters, planted pairs, and the
/// full ground-truth probability table, as diffable text.
pub fn write_world_manifest<W: Write>(
    mut w: W,
    world: &PlantedWorld,
    params: &[(&str, String)],
) -> io::Result<()> {
    writeln!(w, "soclearn-world v1")?;
    let kind = match world.kind {
        WorldKind::Independent => "independent",
        WorldKind::DependentAnd => "dependent-and",
    };
    writeln!(w, "kind\t{kind}")?;
    writeln!(w, "seed\t{}", world.seed)?;
    for (key, value) in params {
        writeln!(w, "{key}\t{value}")?;
    }
    writeln!(w, "n_subjects\t{}", world.graph.n_subjects())?;
    writeln!(w, "n_edges\t{}", world.graph.n_edges())?;
    writeln!(w, "subjects_digest\t{}", world.graph.subjects().digest())?;
    for pair in &world.pairs {
        writeln!(
            w,
            "pair\t{}\t{}\t{}",
            world.graph.subject_name(pair.first),
            world.graph.subject_name(pair.second),
            world.graph.subject_name(pair.target),
        )?;
    }
    for (edge_index, (source, target)) in world.graph.edges().enumerate() {
        writeln!(
            w,
            "edge\t{}\t{}\t{:.16e}",
            world.graph.subject_name(source),
            world.graph.subject_name(target),
            world.true_probs.value(edge_index),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_subjects_at_the_degree_limit_get_both_edges() {
        let g = generate_graph(2, 0.999_999, 0).unwrap();
        // p = avg/(n-1) ~ 1: both directed edges all but surely; with the
        // exact limit excluded by the precondition, use p extremely close.
        assert_eq!(g.n_subjects(), 2);
        assert_eq!(g.n_edges(), 2);
    }

    #[test]
    fn edge_count_concentrates_around_expectation() {
        let n = 60;
        let d = 7.0;
        let g = generate_graph(n, d, 99).unwrap();
        let trials = (n * (n - 1)) as f64;
        let p = d / (n as f64 - 1.0);
        let sigma = (trials * p * (1.0 - p)).sqrt();
        let expected = n as f64 * d;
        let got = g.n_edges() as f64;
        assert!(
            (got - expected).abs() <= 3.0 * sigma,
            "edges {got} vs expected {expected} (sigma {sigma})"
        );
    }

    #[test]
    fn equal_seeds_generate_identical_graphs() {
        let a = generate_graph(20, 3.0, 5).unwrap();
        let b = generate_graph(20, 3.0, 5).unwrap();
        assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
        let c = generate_graph(20, 3.0, 6).unwrap();
        assert_ne!(a.edges().collect::<Vec<_>>(), c.edges().collect::<Vec<_>>());
    }

    #[test]
    fn parameter_validation() {
        assert!(matches!(generate_graph(1, 0.5, 0), Err(SynthError::TooFewSubjects { .. })));
        assert!(matches!(generate_graph(5, 0.0, 0), Err(SynthError::InvalidInDegree { .. })));
        assert!(matches!(generate_graph(5, 5.0, 0), Err(SynthError::InvalidInDegree { .. })));
        assert!(matches!(
            PlantedWorld::independent(5, 2.0, 0.9, 0.1, 0),
            Err(SynthError::InvalidProbRange { .. })
        ));
    }

    #[test]
    fn independent_world_covers_every_edge() {
        let world = PlantedWorld::independent(30, 4.0, 0.1, 0.6, 7).unwrap();
        assert_eq!(world.true_probs.n_edges(), world.graph.n_edges());
        assert!(world.true_probs.values().iter().all(|&p| (0.1..=0.6).contains(&p)));
        assert_eq!(world.kind, WorldKind::Independent);
    }

    #[test]
    fn dependent_world_plants_distinct_targets() {
        let world = PlantedWorld::dependent_and(40, 5.0, 0.1, 0.5, 6, 11).unwrap();
        assert_eq!(world.pairs.len(), 6);
        let mut targets: Vec<_> = world.pairs.iter().map(|p| p.target).collect();
        targets.dedup();
        assert_eq!(targets.len(), 6);
        for pair in &world.pairs {
            assert_ne!(pair.first, pair.second);
            assert!(world.graph.has_edge(pair.first, pair.target));
            assert!(world.graph.has_edge(pair.second, pair.target));
            let e = world.graph.edge_index(pair.first, pair.target).unwrap();
            assert_eq!(world.true_probs.value(e), 1.0);
        }
    }

    #[test]
    fn manifest_is_deterministic() {
        let world = PlantedWorld::dependent_and(80, 4.0, 0.2, 0.4, 2, 3).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_world_manifest(&mut a, &world, &[("n_actions", "10".into())]).unwrap();
        write_world_manifest(&mut b, &world, &[("n_actions", "10".into())]).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.contains("kind\tdependent-and"));
        assert!(text.lines().filter(|l| l.starts_with("pair\t")).count() == 2);
    }
}
