use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::social::{ActionId, ActionLog, ActionRecord, IdMap, SubjectId};

use super::world::{AndPair, PlantedWorld, SynthError, WorldKind};

/// Independent generator per action, so actions can be generated in any
/// order (or in parallel) with identical results.
fn action_rng(seed: u64, action: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(action as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn validate_seed_fraction(seed_fraction: f64) -> Result<(), SynthError> {
    if !(0.0..=1.0).contains(&seed_fraction) {
        return Err(SynthError::InvalidSeedFraction { value: seed_fraction });
    }
    Ok(())
}

/// Runs one synchronous cascade and appends its records.
///
/// Round 0 seeds each subject independently with probability
/// `seed_fraction`. In round t >= 1, every subject that became active in
/// round t-1 gets one chance per still-inactive out-neighbor, succeeding
/// with the edge's planted probability; `pairs` targets additionally
/// activate with certainty once both their sources are active, and never
/// through those two edges otherwise. Timestamps are round indices; the
/// cascade stops when a round activates nobody.
fn run_cascade(
    world: &PlantedWorld,
    pairs: &[AndPair],
    action: ActionId,
    seed_fraction: f64,
    rng: &mut ChaCha8Rng,
    records: &mut Vec<ActionRecord>,
) {
    let graph = &world.graph;
    let n = graph.n_subjects();
    let is_pair_edge = |source: SubjectId, target: SubjectId| {
        pairs.iter().any(|p| p.target == target && (p.first == source || p.second == source))
    };

    // activation round per subject; None = still inactive
    let mut active_at: Vec<Option<i64>> = vec![None; n];
    let mut frontier: Vec<SubjectId> = Vec::new();
    for s in 0..n {
        if rng.random::<f64>() < seed_fraction {
            active_at[s] = Some(0);
            frontier.push(SubjectId::new(s as u32));
        }
    }

    let mut round: i64 = 0;
    while !frontier.is_empty() {
        round += 1;
        let mut newly: Vec<SubjectId> = Vec::new();
        // Coin-based attempts from the subjects activated last round.
        for &source in &frontier {
            for &target in graph.out_neighbors(source) {
                if active_at[target.index()].is_some_and(|t| t < round) {
                    continue; // active before this round
                }
                if is_pair_edge(source, target) {
                    continue; // pair edges never fire on their own
                }
                let edge = graph.edge_index(source, target).expect("out-neighbor edge");
                let success = rng.random::<f64>() < world.true_probs.value(edge);
                if success && active_at[target.index()].is_none() {
                    active_at[target.index()] = Some(round);
                    newly.push(target);
                }
            }
        }
        // AND rule: both sources active at round start activate the target.
        for pair in pairs {
            if active_at[pair.target.index()].is_some() {
                continue;
            }
            let first_on = active_at[pair.first.index()].is_some_and(|t| t < round);
            let second_on = active_at[pair.second.index()].is_some_and(|t| t < round);
            if first_on && second_on {
                active_at[pair.target.index()] = Some(round);
                newly.push(pair.target);
            }
        }
        newly.sort_unstable();
        newly.dedup();
        frontier = newly;
    }

    for s in 0..n {
        if let Some(t) = active_at[s] {
            records.push(ActionRecord { subject: SubjectId::new(s as u32), action, timestamp: Some(t) });
        }
    }
}

/// Generates `n_actions` independent-cascade episodes over a world with the
/// independent tag. Returns a timestamped action log (timestamps are round
/// indices).
pub fn generate_ic_episodes(
    world: &PlantedWorld,
    n_actions: usize,
    seed_fraction: f64,
    seed: u64,
) -> Result<ActionLog, SynthError> {
    if world.kind != WorldKind::Independent {
        return Err(SynthError::WrongWorldKind { expected: WorldKind::Independent });
    }
    validate_seed_fraction(seed_fraction)?;
    let mut records = Vec::new();
    for a in 0..n_actions {
        let mut rng = action_rng(seed, a);
        run_cascade(world, &[], ActionId::new(a as u32), seed_fraction, &mut rng, &mut records);
    }
    Ok(ActionLog::build(world.graph.n_subjects(), IdMap::dense(n_actions), records))
}

/// Like [`generate_ic_episodes`], but the listed pair targets activate
/// (with probability 1) only in rounds where both pair sources are already
/// active, and never otherwise through those two edges. Non-listed edges
/// behave independently.
pub fn generate_dependent_episodes(
    world: &PlantedWorld,
    pairs: &[AndPair],
    n_actions: usize,
    seed_fraction: f64,
    seed: u64,
) -> Result<ActionLog, SynthError> {
    validate_seed_fraction(seed_fraction)?;
    for pair in pairs {
        if pair.first == pair.second {
            return Err(SynthError::DegeneratePair);
        }
        if !world.graph.has_edge(pair.first, pair.target)
            || !world.graph.has_edge(pair.second, pair.target)
        {
            return Err(SynthError::MissingPairEdge {
                first: pair.first,
                second: pair.second,
                target: pair.target,
            });
        }
    }
    let mut records = Vec::new();
    for a in 0..n_actions {
        let mut rng = action_rng(seed, a);
        run_cascade(world, pairs, ActionId::new(a as u32), seed_fraction, &mut rng, &mut records);
    }
    Ok(ActionLog::build(world.graph.n_subjects(), IdMap::dense(n_actions), records))
}
