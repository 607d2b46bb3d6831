use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::social::{PropagationStats, SocialGraph, SubjectId};

/// Which procedure produced a set of edge probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorKind {
    Bernoulli,
    Jaccard,
    PartialCreditBernoulli,
    PartialCreditJaccard,
    IcEm,
}

impl EstimatorKind {
    pub fn tag(self) -> &'static str {
        match self {
            EstimatorKind::Bernoulli => "BD",
            EstimatorKind::Jaccard => "JI",
            EstimatorKind::PartialCreditBernoulli => "PC-B",
            EstimatorKind::PartialCreditJaccard => "PC-J",
            EstimatorKind::IcEm => "IC",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "BD" => Some(EstimatorKind::Bernoulli),
            "JI" => Some(EstimatorKind::Jaccard),
            "PC-B" => Some(EstimatorKind::PartialCreditBernoulli),
            "PC-J" => Some(EstimatorKind::PartialCreditJaccard),
            "IC" => Some(EstimatorKind::IcEm),
            _ => None,
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Fitted influence probability per directed edge, laid out parallel to the
/// graph's canonical edge enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeProbabilities {
    estimator: EstimatorKind,
    values: Vec<f64>,
}

impl EdgeProbabilities {
    pub fn new(estimator: EstimatorKind, values: Vec<f64>) -> Self {
        for &v in &values {
            assert!((0.0..=1.0).contains(&v), "edge probability {v} outside [0, 1]");
        }
        Self { estimator, values }
    }

    pub fn estimator(&self) -> EstimatorKind {
        self.estimator
    }

    pub fn n_edges(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, edge_index: usize) -> f64 {
        self.values[edge_index]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn for_edge(
        &self,
        graph: &SocialGraph,
        source: SubjectId,
        target: SubjectId,
    ) -> Option<f64> {
        graph.edge_index(source, target).map(|i| self.values[i])
    }

    /// Writes `source<TAB>target<TAB>p` lines in canonical edge order, with
    /// enough digits for an exact 64-bit round trip, preceded by comment
    /// headers identifying the estimator and the graph it belongs to.
    pub fn write_tsv<W: Write>(&self, mut w: W, graph: &SocialGraph) -> io::Result<()> {
        assert_eq!(self.values.len(), graph.n_edges(), "probability table does not match graph");
        writeln!(w, "# soclearn-edge-probabilities v1")?;
        writeln!(w, "# estimator\t{}", self.estimator.tag())?;
        writeln!(w, "# n_subjects\t{}", graph.n_subjects())?;
        writeln!(w, "# subjects_digest\t{}", graph.subjects().digest())?;
        for (edge_index, (source, target)) in graph.edges().enumerate() {
            writeln!(
                w,
                "{}\t{}\t{:.16e}",
                graph.subject_name(source),
                graph.subject_name(target),
                self.values[edge_index],
            )?;
        }
        Ok(())
    }

    /// Reads the format written by [`Self::write_tsv`]. Every edge of
    /// `graph` must be covered.
    pub fn read_tsv<R: BufRead>(
        r: R,
        graph: &SocialGraph,
    ) -> Result<(Self, EdgeProbabilityFileMeta), EdgeProbabilityIoError> {
        let mut estimator = None;
        let mut meta = EdgeProbabilityFileMeta::default();
        let mut values: Vec<Option<f64>> = vec![None; graph.n_edges()];
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = lineno + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut fields = rest.trim_start().split('\t');
                match (fields.next(), fields.next()) {
                    (Some("estimator"), Some(tag)) => {
                        estimator = EstimatorKind::from_tag(tag);
                    }
                    (Some("subjects_digest"), Some(d)) => meta.subjects_digest = Some(d.to_string()),
                    (Some("n_subjects"), Some(n)) => meta.n_subjects = n.parse().ok(),
                    _ => {}
                }
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(s), Some(t), Some(p), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(EdgeProbabilityIoError::Malformed { line: lineno });
            };
            let source = graph
                .subject_id(s)
                .ok_or_else(|| EdgeProbabilityIoError::UnknownSubject { name: s.to_string() })?;
            let target = graph
                .subject_id(t)
                .ok_or_else(|| EdgeProbabilityIoError::UnknownSubject { name: t.to_string() })?;
            let edge = graph.edge_index(source, target).ok_or_else(|| {
                EdgeProbabilityIoError::UnknownEdge { from: s.to_string(), to: t.to_string() }
            })?;
            let p: f64 =
                p.parse().map_err(|_| EdgeProbabilityIoError::Malformed { line: lineno })?;
            if !(0.0..=1.0).contains(&p) {
                return Err(EdgeProbabilityIoError::OutOfRange { value: p });
            }
            values[edge] = Some(p);
        }
        let values: Vec<f64> = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or(EdgeProbabilityIoError::MissingEdge { edge_index: i }))
            .collect::<Result<_, _>>()?;
        Ok((
            Self { estimator: estimator.unwrap_or(EstimatorKind::Bernoulli), values },
            meta,
        ))
    }
}

/// Header fields carried by an edge-probability file.
#[derive(Clone, Debug, Default)]
pub struct EdgeProbabilityFileMeta {
    pub n_subjects: Option<usize>,
    pub subjects_digest: Option<String>,
}

#[derive(Debug, Error)]
pub enum EdgeProbabilityIoError {
    #[error("line {line}: expected `source<TAB>target<TAB>p`")]
    Malformed { line: usize },
    #[error("unknown subject {name:?}")]
    UnknownSubject { name: String },
    #[error("no edge {from:?} -> {to:?} in the graph")]
    UnknownEdge { from: String, to: String },
    #[error("edge probability {value} outside [0, 1]")]
    OutOfRange { value: f64 },
    #[error("file does not cover edge {edge_index} of the graph")]
    MissingEdge { edge_index: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn ratio(numerator: f64, denominator: f64) -> f64 {
    if denominator == 0.0 {
        0.0
    } else {
        numerator / denominator
    }
}

/// Propagation-ratio estimator: share of the source's actions that
/// propagated to the target. Zero when the source performed nothing.
pub fn estimate_bd(stats: &PropagationStats) -> EdgeProbabilities {
    let values = stats
        .edges()
        .iter()
        .map(|e| ratio(f64::from(e.propagated), f64::from(e.source_actions)))
        .collect();
    EdgeProbabilities::new(EstimatorKind::Bernoulli, values)
}

/// Jaccard-normalized estimator: propagated actions over the union of the
/// two subjects' action sets.
pub fn estimate_ji(stats: &PropagationStats) -> EdgeProbabilities {
    let values = stats
        .edges()
        .iter()
        .map(|e| ratio(f64::from(e.propagated), f64::from(e.union_actions)))
        .collect();
    EdgeProbabilities::new(EstimatorKind::Jaccard, values)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartialCreditFlavor {
    Bernoulli,
    Jaccard,
}

/// Partial-credit variant: each propagation is worth `1/|influencers|`
/// instead of 1, so simultaneous influencers share the credit, with the same
/// denominator as the chosen base estimator.
pub fn estimate_pc(stats: &PropagationStats, flavor: PartialCreditFlavor) -> EdgeProbabilities {
    let (kind, denominator): (_, fn(&crate::social::EdgePropagation) -> f64) = match flavor {
        PartialCreditFlavor::Bernoulli => (
            EstimatorKind::PartialCreditBernoulli,
            |e| f64::from(e.source_actions),
        ),
        PartialCreditFlavor::Jaccard => (
            EstimatorKind::PartialCreditJaccard,
            |e| f64::from(e.union_actions),
        ),
    };
    let values = stats.edges().iter().map(|e| ratio(e.credited, denominator(e))).collect();
    EdgeProbabilities::new(kind, values)
}
