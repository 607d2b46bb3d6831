use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::mlp::MlpModel;

const FORMAT_HEADER: &str = "soclearn-mlp v1";

/// Dataset context written alongside the parameters so a model file can be
/// checked against the graph it is applied to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelFileMeta {
    pub n_subjects: usize,
    pub subjects_digest: String,
}

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("not a model file (missing `{FORMAT_HEADER}` header)")]
    BadHeader,
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("model file is truncated")]
    Truncated,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Writes a model as versioned structured text: a header block, then
/// row-major weight and bias blocks with full 64-bit precision. Loading the
/// file reproduces predictions bit-exactly.
pub fn write_model<W: Write>(
    mut w: W,
    model: &MlpModel,
    meta: &ModelFileMeta,
) -> io::Result<()> {
    writeln!(w, "{FORMAT_HEADER}")?;
    let sizes: Vec<String> = model.layer_sizes().iter().map(|s| s.to_string()).collect();
    writeln!(w, "layer_sizes\t{}", sizes.join(" "))?;
    writeln!(w, "hidden_activation\trelu")?;
    writeln!(w, "output_activation\tsigmoid")?;
    writeln!(w, "seed\t{}", model.seed())?;
    writeln!(w, "n_subjects\t{}", meta.n_subjects)?;
    writeln!(w, "subjects_digest\t{}", meta.subjects_digest)?;
    for (layer, (weights, biases)) in model.weights().iter().zip(model.biases()).enumerate() {
        let fan_out = model.layer_sizes()[layer + 1];
        writeln!(w, "weights\t{layer}")?;
        for row in weights.chunks(fan_out) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", cells.join(" "))?;
        }
        writeln!(w, "biases\t{layer}")?;
        let cells: Vec<String> = biases.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", cells.join(" "))?;
    }
    Ok(())
}

fn parse_floats(line: &str, lineno: usize, expected: usize) -> Result<Vec<f64>, ModelIoError> {
    let values: Result<Vec<f64>, _> = line.split(' ').map(str::parse::<f64>).collect();
    let values = values.map_err(|e| ModelIoError::Malformed {
        line: lineno,
        reason: format!("bad float: {e}"),
    })?;
    if values.len() != expected {
        return Err(ModelIoError::Malformed {
            line: lineno,
            reason: format!("expected {expected} values, found {}", values.len()),
        });
    }
    Ok(values)
}

/// Reads the format produced by [`write_model`].
pub fn read_model<R: BufRead>(r: R) -> Result<(MlpModel, ModelFileMeta), ModelIoError> {
    let mut lines = r.lines().enumerate();
    let mut next_line = || -> Result<(usize, String), ModelIoError> {
        match lines.next() {
            Some((i, line)) => Ok((i + 1, line?)),
            None => Err(ModelIoError::Truncated),
        }
    };

    let (_, header) = next_line()?;
    if header != FORMAT_HEADER {
        return Err(ModelIoError::BadHeader);
    }

    let mut layer_sizes: Vec<usize> = Vec::new();
    let mut seed = 0u64;
    let mut n_subjects = 0usize;
    let mut subjects_digest = String::new();
    for key in ["layer_sizes", "hidden_activation", "output_activation", "seed", "n_subjects", "subjects_digest"]
    {
        let (lineno, line) = next_line()?;
        let (found, value) = line.split_once('\t').ok_or_else(|| ModelIoError::Malformed {
            line: lineno,
            reason: "expected `key<TAB>value`".into(),
        })?;
        if found != key {
            return Err(ModelIoError::Malformed {
                line: lineno,
                reason: format!("expected key {key:?}, found {found:?}"),
            });
        }
        match key {
            "layer_sizes" => {
                layer_sizes = value
                    .split(' ')
                    .map(str::parse::<usize>)
                    .collect::<Result<_, _>>()
                    .map_err(|e| ModelIoError::Malformed {
                        line: lineno,
                        reason: format!("bad layer size: {e}"),
                    })?;
            }
            "hidden_activation" if value != "relu" => {
                return Err(ModelIoError::Malformed {
                    line: lineno,
                    reason: format!("unsupported hidden activation {value:?}"),
                });
            }
            "output_activation" if value != "sigmoid" => {
                return Err(ModelIoError::Malformed {
                    line: lineno,
                    reason: format!("unsupported output activation {value:?}"),
                });
            }
            "seed" => {
                seed = value.parse().map_err(|e| ModelIoError::Malformed {
                    line: lineno,
                    reason: format!("bad seed: {e}"),
                })?;
            }
            "n_subjects" => {
                n_subjects = value.parse().map_err(|e| ModelIoError::Malformed {
                    line: lineno,
                    reason: format!("bad subject count: {e}"),
                })?;
            }
            "subjects_digest" => subjects_digest = value.to_string(),
            _ => {}
        }
    }
    if layer_sizes.len() < 2 {
        return Err(ModelIoError::Malformed { line: 2, reason: "too few layers".into() });
    }

    let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
    let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
    for layer in 0..layer_sizes.len() - 1 {
        let (fan_in, fan_out) = (layer_sizes[layer], layer_sizes[layer + 1]);
        let (lineno, line) = next_line()?;
        if line != format!("weights\t{layer}") {
            return Err(ModelIoError::Malformed {
                line: lineno,
                reason: format!("expected weights block for layer {layer}"),
            });
        }
        let mut matrix = Vec::with_capacity(fan_in * fan_out);
        for _ in 0..fan_in {
            let (lineno, line) = next_line()?;
            matrix.extend(parse_floats(&line, lineno, fan_out)?);
        }
        weights.push(matrix);
        let (lineno, line) = next_line()?;
        if line != format!("biases\t{layer}") {
            return Err(ModelIoError::Malformed {
                line: lineno,
                reason: format!("expected biases block for layer {layer}"),
            });
        }
        let (lineno, line) = next_line()?;
        biases.push(parse_floats(&line, lineno, fan_out)?);
    }

    let model = MlpModel::from_parts(layer_sizes, weights, biases, seed)
        .map_err(|e| ModelIoError::Malformed { line: 0, reason: e.to_string() })?;
    Ok((model, ModelFileMeta { n_subjects, subjects_digest }))
}
