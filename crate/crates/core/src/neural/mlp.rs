use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::encode::FeatureVector;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MlpError {
    #[error("layer sizes need at least an input, one hidden layer, and the output")]
    TooFewLayers,
    #[error("layer {layer} has zero width")]
    ZeroWidthLayer { layer: usize },
    #[error("output layer must have exactly one unit")]
    OutputNotScalar,
    #[error("input has {got} entries, the model expects {expected}")]
    InputDimensionMismatch { expected: usize, got: usize },
    #[error("cache does not match this model (stale or from another model)")]
    StaleCache,
    #[error("invalid training config: {reason}")]
    InvalidConfig { reason: &'static str },
    #[error("cannot fit on an empty example list")]
    NoExamples,
}

/// Network input: either an explicit dense vector or the indices of the
/// entries equal to one. The two forms are equivalent; the indicator form
/// lets the first layer skip the zero entries of the wide binary encoding.
#[derive(Clone, Copy, Debug)]
pub enum MlpInput<'a> {
    Dense(&'a [f64]),
    Indicator(&'a [usize]),
}

#[derive(Clone, Debug, PartialEq)]
enum CachedInput {
    Dense(Vec<f64>),
    Indicator(Vec<usize>),
}

/// Activations recorded by a forward pass, consumed by [`MlpModel::backward`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    input: CachedInput,
    /// Post-rectifier (and post-dropout) outputs of each hidden layer.
    pub hidden: Vec<Vec<f64>>,
    /// Per-unit dropout factors (0 for dropped, 1/(1-rate) for kept), when
    /// the pass used dropout.
    masks: Option<Vec<Vec<f64>>>,
    pub y_hat: f64,
}

/// Per-parameter values with the same shape as a model; used for gradients
/// and optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            weights: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        for w in &mut self.weights {
            w.fill(0.0);
        }
        for b in &mut self.biases {
            b.fill(0.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.weights {
            for v in w.iter_mut() {
                *v *= factor;
            }
        }
        for b in &mut self.biases {
            for v in b.iter_mut() {
                *v *= factor;
            }
        }
    }
}

/// Dropout source for a training-mode forward pass.
pub struct Dropout<'a> {
    pub rate: f64,
    pub rng: &'a mut ChaCha8Rng,
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy with the prediction clamped to
/// `[1e-12, 1 - 1e-12]`.
pub fn loss_bce(y_hat: f64, y: bool) -> f64 {
    let p = y_hat.clamp(1e-12, 1.0 - 1e-12);
    if y {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Fully connected rectifier tower with a logistic scalar output.
///
/// `weights[l]` connects layer `l` to layer `l+1`, row-major: the weight
/// from unit `i` of layer `l` to unit `j` of layer `l+1` sits at
/// `i * fan_out + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    seed: u64,
}

/// Initializes a model with uniform weights in
/// `[-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))]` per layer and
/// zero biases, deterministically in `seed`.
pub fn init_model(layer_sizes: &[usize], seed: u64) -> Result<MlpModel, MlpError> {
    validate_sizes(layer_sizes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
    let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
    for pair in layer_sizes.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let layer: Vec<f64> =
            (0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)).collect();
        weights.push(layer);
        biases.push(vec![0.0; fan_out]);
    }
    Ok(MlpModel { layer_sizes: layer_sizes.to_vec(), weights, biases, seed })
}

fn validate_sizes(layer_sizes: &[usize]) -> Result<(), MlpError> {
    if layer_sizes.len() < 3 {
        return Err(MlpError::TooFewLayers);
    }
    if let Some(layer) = layer_sizes.iter().position(|&w| w == 0) {
        return Err(MlpError::ZeroWidthLayer { layer });
    }
    if *layer_sizes.last().expect("non-empty") != 1 {
        return Err(MlpError::OutputNotScalar);
    }
    Ok(())
}

impl MlpModel {
    pub(crate) fn from_parts(
        layer_sizes: Vec<usize>,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
        seed: u64,
    ) -> Result<Self, MlpError> {
        validate_sizes(&layer_sizes)?;
        if weights.len() != layer_sizes.len() - 1 || biases.len() != layer_sizes.len() - 1 {
            return Err(MlpError::StaleCache);
        }
        for (l, pair) in layer_sizes.windows(2).enumerate() {
            if weights[l].len() != pair[0] * pair[1] || biases[l].len() != pair[1] {
                return Err(MlpError::StaleCache);
            }
        }
        Ok(Self { layer_sizes, weights, biases, seed })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    pub(crate) fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    fn n_hidden_layers(&self) -> usize {
        self.layer_sizes.len() - 2
    }

    /// Runs the network. With a dropout source, each hidden unit is zeroed
    /// with probability `rate` and survivors are scaled by `1/(1-rate)`
    /// (inverted dropout), so inference needs no rescaling. A rate of zero
    /// is identical to passing no source at all.
    pub fn forward(
        &self,
        input: MlpInput<'_>,
        mut dropout: Option<Dropout<'_>>,
    ) -> Result<(f64, ForwardCache), MlpError> {
        let cached = match input {
            MlpInput::Dense(x) => {
                if x.len() != self.n_inputs() {
                    return Err(MlpError::InputDimensionMismatch {
                        expected: self.n_inputs(),
                        got: x.len(),
                    });
                }
                CachedInput::Dense(x.to_vec())
            }
            MlpInput::Indicator(ones) => {
                if let Some(&bad) = ones.iter().find(|&&i| i >= self.n_inputs()) {
                    return Err(MlpError::InputDimensionMismatch {
                        expected: self.n_inputs(),
                        got: bad + 1,
                    });
                }
                CachedInput::Indicator(ones.to_vec())
            }
        };
        if let Some(d) = &dropout {
            if !(0.0..1.0).contains(&d.rate) {
                return Err(MlpError::InvalidConfig { reason: "dropout rate must be in [0, 1)" });
            }
            if d.rate == 0.0 {
                dropout = None;
            }
        }

        let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(self.n_hidden_layers());
        let mut masks: Option<Vec<Vec<f64>>> = dropout.is_some().then(Vec::new);

        // First layer straight from the (possibly sparse) input.
        let fan_out = self.layer_sizes[1];
        let mut z = self.biases[0].clone();
        match &cached {
            CachedInput::Dense(x) => {
                for (i, &xi) in x.iter().enumerate() {
                    if xi == 0.0 {
                        continue;
                    }
                    let row = &self.weights[0][i * fan_out..(i + 1) * fan_out];
                    for (zj, &w) in z.iter_mut().zip(row) {
                        *zj += xi * w;
                    }
                }
            }
            CachedInput::Indicator(ones) => {
                for &i in ones {
                    let row = &self.weights[0][i * fan_out..(i + 1) * fan_out];
                    for (zj, &w) in z.iter_mut().zip(row) {
                        *zj += w;
                    }
                }
            }
        }

        for layer in 0..self.n_hidden_layers() {
            // Rectify, then drop.
            for v in z.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            if let Some(d) = dropout.as_mut() {
                let scale = 1.0 / (1.0 - d.rate);
                let mask: Vec<f64> = (0..z.len())
                    .map(|_| if d.rng.random::<f64>() < d.rate { 0.0 } else { scale })
                    .collect();
                for (v, &m) in z.iter_mut().zip(&mask) {
                    *v *= m;
                }
                masks.as_mut().expect("masks allocated with dropout").push(mask);
            }
            hidden.push(z.clone());

            let fan_out = self.layer_sizes[layer + 2];
            let mut next = self.biases[layer + 1].clone();
            for (i, &hi) in z.iter().enumerate() {
                if hi == 0.0 {
                    continue;
                }
                let row = &self.weights[layer + 1][i * fan_out..(i + 1) * fan_out];
                for (nj, &w) in next.iter_mut().zip(row) {
                    *nj += hi * w;
                }
            }
            z = next;
        }

        let y_hat = logistic(z[0]);
        Ok((y_hat, ForwardCache { input: cached, hidden, masks, y_hat }))
    }

    pub fn forward_features(
        &self,
        features: &FeatureVector,
        dropout: Option<Dropout<'_>>,
    ) -> Result<(f64, ForwardCache), MlpError> {
        let ones = features.one_indices();
        self.forward(MlpInput::Indicator(&ones), dropout)
    }

    /// Exact gradients of the clamped binary cross-entropy with respect to
    /// every weight and bias, for the pass recorded in `cache`.
    pub fn backward(&self, cache: &ForwardCache, y: bool) -> Result<Gradients, MlpError> {
        let mut grads = Gradients::zeros_like(self);
        self.accumulate_gradients(cache, y, &mut grads)?;
        Ok(grads)
    }

    /// Adds this example's gradients into `into` (used for mini-batch
    /// averaging without reallocating).
    pub(crate) fn accumulate_gradients(
        &self,
        cache: &ForwardCache,
        y: bool,
        into: &mut Gradients,
    ) -> Result<(), MlpError> {
        if cache.hidden.len() != self.n_hidden_layers()
            || cache
                .hidden
                .iter()
                .enumerate()
                .any(|(l, h)| h.len() != self.layer_sizes[l + 1])
        {
            return Err(MlpError::StaleCache);
        }
        if let CachedInput::Dense(x) = &cache.input {
            if x.len() != self.n_inputs() {
                return Err(MlpError::StaleCache);
            }
        }

        // Logistic + cross-entropy collapse to (y_hat - y) at the output
        // pre-activation. The clamp in loss_bce only binds in saturation,
        // where y_hat is within 1e-12 of the label anyway.
        let target = if y { 1.0 } else { 0.0 };
        let mut delta = vec![cache.y_hat - target];

        for layer in (0..=self.n_hidden_layers()).rev() {
            let below: &[f64] = if layer == 0 {
                &[] // handled separately: the input may be sparse
            } else {
                &cache.hidden[layer - 1]
            };
            let fan_out = delta.len();
            if layer == 0 {
                match &cache.input {
                    CachedInput::Dense(x) => {
                        for (i, &xi) in x.iter().enumerate() {
                            if xi == 0.0 {
                                continue;
                            }
                            let row = &mut into.weights[0][i * fan_out..(i + 1) * fan_out];
                            for (g, &d) in row.iter_mut().zip(&delta) {
                                *g += xi * d;
                            }
                        }
                    }
                    CachedInput::Indicator(ones) => {
                        for &i in ones {
                            let row = &mut into.weights[0][i * fan_out..(i + 1) * fan_out];
                            for (g, &d) in row.iter_mut().zip(&delta) {
                                *g += d;
                            }
                        }
                    }
                }
            } else {
                for (i, &hi) in below.iter().enumerate() {
                    if hi == 0.0 {
                        continue;
                    }
                    let row = &mut into.weights[layer][i * fan_out..(i + 1) * fan_out];
                    for (g, &d) in row.iter_mut().zip(&delta) {
                        *g += hi * d;
                    }
                }
            }
            for (g, &d) in into.biases[layer].iter_mut().zip(&delta) {
                *g += d;
            }

            if layer == 0 {
                break;
            }

            // Propagate to the hidden layer below. A unit contributes iff it
            // survived both the rectifier and dropout, which is exactly when
            // its recorded output is nonzero.
            let h = &cache.hidden[layer - 1];
            let mut next_delta = vec![0.0; h.len()];
            for (i, nd) in next_delta.iter_mut().enumerate() {
                if h[i] == 0.0 {
                    continue;
                }
                let row = &self.weights[layer][i * fan_out..(i + 1) * fan_out];
                let mut sum = 0.0;
                for (&w, &d) in row.iter().zip(&delta) {
                    sum += w * d;
                }
                let factor = match &cache.masks {
                    Some(masks) => masks[layer - 1][i],
                    None => 1.0,
                };
                *nd = sum * factor;
            }
            delta = next_delta;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_model(sizes: &[usize]) -> MlpModel {
        let mut m = init_model(sizes, 0).unwrap();
        for w in &mut m.weights {
            w.fill(0.0);
        }
        m
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_model(&[4, 3, 1], 11).unwrap();
        let b = init_model(&[4, 3, 1], 11).unwrap();
        assert_eq!(a, b);
        let c = init_model(&[4, 3, 1], 12).unwrap();
        assert_ne!(a, c);
        for (l, pair) in [[4usize, 3], [3, 1]].iter().enumerate() {
            let limit = (6.0 / (pair[0] + pair[1]) as f64).sqrt();
            assert!(a.weights()[l].iter().all(|w| w.abs() <= limit));
        }
        assert!(a.biases().iter().all(|b| b.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn invalid_layer_specs_are_rejected() {
        assert_eq!(init_model(&[4, 1], 0).unwrap_err(), MlpError::TooFewLayers);
        assert_eq!(
            init_model(&[4, 0, 1], 0).unwrap_err(),
            MlpError::ZeroWidthLayer { layer: 1 }
        );
        assert_eq!(init_model(&[4, 3, 2], 0).unwrap_err(), MlpError::OutputNotScalar);
    }

    #[test]
    fn all_zero_model_outputs_one_half() {
        let m = zero_model(&[6, 4, 1]);
        let x = vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let (y, _) = m.forward(MlpInput::Dense(&x), None).unwrap();
        assert_eq!(y, 0.5);
    }

    #[test]
    fn dense_and_indicator_inputs_agree() {
        let m = init_model(&[8, 5, 3, 1], 3).unwrap();
        let ones = vec![0usize, 3, 7];
        let mut dense = vec![0.0; 8];
        for &i in &ones {
            dense[i] = 1.0;
        }
        let (yd, cd) = m.forward(MlpInput::Dense(&dense), None).unwrap();
        let (yi, ci) = m.forward(MlpInput::Indicator(&ones), None).unwrap();
        assert_eq!(yd, yi);
        assert_eq!(cd.hidden, ci.hidden);
    }

    #[test]
    fn hand_computed_single_unit_network() {
        // 2 -> 1 -> 1 with hand-set weights:
        //   h = relu(0.3*1 + (-0.2)*1 + 0.05) = 0.15
        //   y = logistic(0.15 * 2.0 + (-0.1)) = logistic(0.2)
        let m = MlpModel::from_parts(
            vec![2, 1, 1],
            vec![vec![0.3, -0.2], vec![2.0]],
            vec![vec![0.05], vec![-0.1]],
            0,
        )
        .unwrap();
        let (y, cache) = m.forward(MlpInput::Dense(&[1.0, 1.0]), None).unwrap();
        let expected = 1.0 / (1.0 + (-0.2f64).exp());
        assert!((y - expected).abs() < 1e-12);
        assert!((cache.hidden[0][0] - 0.15).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = init_model(&[4, 3, 1], 0).unwrap();
        assert!(matches!(
            m.forward(MlpInput::Dense(&[1.0, 2.0]), None),
            Err(MlpError::InputDimensionMismatch { .. })
        ));
        assert!(matches!(
            m.forward(MlpInput::Indicator(&[9]), None),
            Err(MlpError::InputDimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_rate_dropout_equals_no_dropout() {
        let m = init_model(&[6, 4, 1], 5).unwrap();
        let x = vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let (plain, _) = m.forward(MlpInput::Dense(&x), None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (dropped, cache) = m
            .forward(MlpInput::Dense(&x), Some(Dropout { rate: 0.0, rng: &mut rng }))
            .unwrap();
        assert_eq!(plain, dropped);
        assert!(cache.masks.is_none());
        // The untouched rng still matches a fresh one.
        let mut fresh = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(rng.random::<u64>(), fresh.random::<u64>());
    }

    #[test]
    fn output_layer_gradient_is_error_times_hidden() {
        let m = init_model(&[5, 4, 1], 9).unwrap();
        let x = vec![1.0, 1.0, 0.0, 0.0, 1.0];
        let (y_hat, cache) = m.forward(MlpInput::Dense(&x), None).unwrap();
        let grads = m.backward(&cache, true).unwrap();
        let delta = y_hat - 1.0;
        for (i, &h) in cache.hidden[0].iter().enumerate() {
            assert!((grads.weights[1][i] - delta * h).abs() < 1e-15);
        }
        assert!((grads.biases[1][0] - delta).abs() < 1e-15);
    }

    #[test]
    fn zero_input_zeroes_first_layer_weight_gradients() {
        let m = init_model(&[5, 4, 1], 9).unwrap();
        let x = vec![0.0; 5];
        let (_, cache) = m.forward(MlpInput::Dense(&x), None).unwrap();
        let grads = m.backward(&cache, false).unwrap();
        assert!(grads.weights[0].iter().all(|&g| g == 0.0));
        // ... while bias gradients flow as usual.
        assert!(grads.biases[1][0] != 0.0);
    }

    #[test]
    fn stale_cache_is_rejected() {
        let m = init_model(&[5, 4, 1], 9).unwrap();
        let other = init_model(&[5, 3, 1], 9).unwrap();
        let (_, cache) = m.forward(MlpInput::Dense(&[1.0, 0.0, 0.0, 1.0, 0.0]), None).unwrap();
        assert_eq!(other.backward(&cache, true).unwrap_err(), MlpError::StaleCache);
    }

    #[test]
    fn loss_values() {
        assert!((loss_bce(0.5, true) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(loss_bce(1.0 - 1e-12, true) < 2e-12);
        assert!((loss_bce(0.9, false) - 2.302585092994046).abs() < 1e-12);
        // Clamp keeps the loss finite at the boundaries.
        assert!(loss_bce(0.0, true).is_finite());
        assert!(loss_bce(1.0, false).is_finite());
    }

    /// Central finite differences around every parameter.
    fn finite_difference_check(model: &MlpModel, x: &[f64], y: bool) -> f64 {
        let (_, cache) = model.forward(MlpInput::Dense(x), None).unwrap();
        let analytic = model.backward(&cache, y).unwrap();
        let step = 1e-5;
        let mut worst = 0.0f64;
        let mut probe = model.clone();
        for layer in 0..model.weights.len() {
            for idx in 0..model.weights[layer].len() {
                let original = probe.weights[layer][idx];
                probe.weights[layer][idx] = original + step;
                let (yp, _) = probe.forward(MlpInput::Dense(x), None).unwrap();
                probe.weights[layer][idx] = original - step;
                let (ym, _) = probe.forward(MlpInput::Dense(x), None).unwrap();
                probe.weights[layer][idx] = original;
                let numeric = (loss_bce(yp, y) - loss_bce(ym, y)) / (2.0 * step);
                let a = analytic.weights[layer][idx];
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(rel);
            }
            for idx in 0..model.biases[layer].len() {
                let original = probe.biases[layer][idx];
                probe.biases[layer][idx] = original + step;
                let (yp, _) = probe.forward(MlpInput::Dense(x), None).unwrap();
                probe.biases[layer][idx] = original - step;
                let (ym, _) = probe.forward(MlpInput::Dense(x), None).unwrap();
                probe.biases[layer][idx] = original;
                let numeric = (loss_bce(yp, y) - loss_bce(ym, y)) / (2.0 * step);
                let a = analytic.biases[layer][idx];
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for round in 0..5 {
            let sizes = vec![4 + round % 3, 5, 3, 1];
            let model = init_model(&sizes, 100 + round as u64).unwrap();
            let x: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
            let worst = finite_difference_check(&model, &x, round % 2 == 0);
            assert!(worst < 1e-4, "relative error {worst} too large");
        }
    }
}
