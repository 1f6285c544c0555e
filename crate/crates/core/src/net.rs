//! A small fully-connected regressor with analytic input gradients.
//!
//! Four affine layers, rectifier on the three hidden layers, identity output.
//! The input is a configuration followed by flattened obstacle parameters
//! (or just the configuration for the self-collision net). Gradients with
//! respect to the configuration are computed by reverse accumulation through
//! the same stack; at rectifier kinks the zero-subgradient branch is taken,
//! so outputs and gradients are deterministic everywhere.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::Config;

/// Number of affine layers (fixed architecture).
pub const NUM_LAYERS: usize = 4;

const MODEL_MAGIC: &[u8; 4] = b"NSCD";
const MODEL_VERSION: u32 = 1;

/// The network: `layer_sizes = [D+G, H, H, H, 1]` with weights `Wₖ` of shape
/// `(out, in)` and bias vectors `bₖ`.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    config_dim: usize,
    layer_sizes: Vec<usize>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

impl MlpModel {
    /// Fresh seeded model: weights and biases uniform in ±1/√fan_in.
    pub fn new_seeded(layer_sizes: &[usize], config_dim: usize, seed: u64) -> Result<MlpModel> {
        validate_sizes(layer_sizes, config_dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(NUM_LAYERS);
        let mut biases = Vec::with_capacity(NUM_LAYERS);
        for k in 0..NUM_LAYERS {
            let (fan_in, fan_out) = (layer_sizes[k], layer_sizes[k + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            weights.push(Array2::from_shape_fn((fan_out, fan_in), |_| {
                rng.gen_range(-bound..=bound)
            }));
            biases.push(Array1::from_shape_fn(fan_out, |_| rng.gen_range(-bound..=bound)));
        }
        Ok(MlpModel { config_dim, layer_sizes: layer_sizes.to_vec(), weights, biases })
    }

    /// Convenience constructor for the standard shape `[in, h, h, h, 1]`.
    pub fn with_hidden(input_dim: usize, hidden: usize, config_dim: usize, seed: u64) -> Result<MlpModel> {
        MlpModel::new_seeded(&[input_dim, hidden, hidden, hidden, 1], config_dim, seed)
    }

    /// Builds a model from explicit parameters (used by tests and the loader).
    pub fn from_parts(
        layer_sizes: &[usize],
        config_dim: usize,
        weights: Vec<Array2<f64>>,
        biases: Vec<Array1<f64>>,
    ) -> Result<MlpModel> {
        validate_sizes(layer_sizes, config_dim)?;
        if weights.len() != NUM_LAYERS || biases.len() != NUM_LAYERS {
            return Err(Error::InvalidArgument(format!(
                "expected {NUM_LAYERS} weight/bias pairs"
            )));
        }
        for k in 0..NUM_LAYERS {
            let want = (layer_sizes[k + 1], layer_sizes[k]);
            if weights[k].dim() != want || biases[k].len() != layer_sizes[k + 1] {
                return Err(Error::InvalidArgument(format!(
                    "layer {k} parameter shapes do not match layer_sizes"
                )));
            }
        }
        if !weights.iter().all(|w| w.iter().all(|x| x.is_finite()))
            || !biases.iter().all(|b| b.iter().all(|x| x.is_finite()))
        {
            return Err(Error::InvalidArgument("non-finite parameters".into()));
        }
        Ok(MlpModel { config_dim, layer_sizes: layer_sizes.to_vec(), weights, biases })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    /// Configuration dimension D (the gradient is taken over these inputs).
    pub fn config_dim(&self) -> usize {
        self.config_dim
    }

    /// Obstacle-parameter dimension G.
    pub fn geom_dim(&self) -> usize {
        self.input_dim() - self.config_dim
    }

    pub(crate) fn parameters_mut(&mut self) -> (&mut Vec<Array2<f64>>, &mut Vec<Array1<f64>>) {
        (&mut self.weights, &mut self.biases)
    }

    pub(crate) fn parameters(&self) -> (&[Array2<f64>], &[Array1<f64>]) {
        (&self.weights, &self.biases)
    }

    fn check_width(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::InvalidArgument(format!(
                "input width {} does not match {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Scalar output for one input row `[q..., g...]`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_width(x)?;
        let mut a = Array1::from_iter(x.iter().copied());
        for k in 0..NUM_LAYERS {
            let mut z = self.weights[k].dot(&a) + &self.biases[k];
            if k + 1 < NUM_LAYERS {
                z.mapv_inplace(|v| v.max(0.0));
            }
            a = z;
        }
        Ok(a[0])
    }

    /// Batched forward pass over rows of `x` (shape `(B, input_dim)`).
    pub fn batch_forward(&self, x: ArrayView2<f64>) -> Array1<f64> {
        assert_eq!(x.ncols(), self.input_dim(), "batch width mismatch");
        let mut a = x.to_owned();
        for k in 0..NUM_LAYERS {
            let mut z = a.dot(&self.weights[k].t());
            z += &self.biases[k];
            if k + 1 < NUM_LAYERS {
                z.mapv_inplace(|v| v.max(0.0));
            }
            a = z;
        }
        a.index_axis(Axis(1), 0).to_owned()
    }

    /// Hidden-layer preactivations at `x`, innermost layer first. Used to
    /// detect rectifier kinks near a point (finite-difference exclusions).
    pub fn preactivations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_width(x)?;
        let mut out = Vec::with_capacity(NUM_LAYERS - 1);
        let mut a = Array1::from_iter(x.iter().copied());
        for k in 0..NUM_LAYERS - 1 {
            let z = self.weights[k].dot(&a) + &self.biases[k];
            out.push(z.to_vec());
            a = z.mapv(|v| v.max(0.0));
        }
        Ok(out)
    }

    /// Gradient of [`forward`](Self::forward) with respect to the first
    /// `config_dim` inputs, by reverse accumulation.
    pub fn input_gradient(&self, x: &[f64]) -> Result<Config> {
        self.check_width(x)?;
        let mut a = Array1::from_iter(x.iter().copied());
        let mut preacts: Vec<Array1<f64>> = Vec::with_capacity(NUM_LAYERS - 1);
        for k in 0..NUM_LAYERS - 1 {
            let z = self.weights[k].dot(&a) + &self.biases[k];
            a = z.mapv(|v| v.max(0.0));
            preacts.push(z);
        }
        // dy/da₃ is the single output row; walk the stack backwards.
        let mut g = self.weights[NUM_LAYERS - 1].row(0).to_owned();
        for k in (0..NUM_LAYERS - 1).rev() {
            let masked = &g * &preacts[k].mapv(|z| if z > 0.0 { 1.0 } else { 0.0 });
            g = self.weights[k].t().dot(&masked);
        }
        Ok(Config::new(&g.as_slice().unwrap()[..self.config_dim]))
    }

    // -- serialization ------------------------------------------------------

    /// Versioned binary layout: magic, version, D, G, layer_sizes, then per
    /// layer the row-major weights and the biases as little-endian f64.
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(MODEL_MAGIC);
        buf.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.config_dim as u32).to_le_bytes());
        buf.extend_from_slice(&(self.geom_dim() as u32).to_le_bytes());
        for &s in &self.layer_sizes {
            buf.extend_from_slice(&(s as u32).to_le_bytes());
        }
        for k in 0..NUM_LAYERS {
            for &w in self.weights[k].iter() {
                buf.extend_from_slice(&w.to_le_bytes());
            }
            for &b in self.biases[k].iter() {
                buf.extend_from_slice(&b.to_le_bytes());
            }
        }
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<MlpModel> {
        let bytes = std::fs::read(path)?;
        let corrupt = |what: &str| Error::CorruptFile(format!("{}: {what}", path.display()));
        let header = 4 + 4 + 4 + 4 + 4 * (NUM_LAYERS + 1);
        if bytes.len() < header || &bytes[..4] != MODEL_MAGIC {
            return Err(corrupt("missing model header"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        let version = u32_at(4) as u32;
        if version != MODEL_VERSION {
            return Err(Error::VersionMismatch { found: version, expected: MODEL_VERSION });
        }
        let config_dim = u32_at(8);
        let geom_dim = u32_at(12);
        let layer_sizes: Vec<usize> = (0..=NUM_LAYERS).map(|k| u32_at(16 + 4 * k)).collect();
        validate_sizes(&layer_sizes, config_dim)
            .map_err(|e| corrupt(&format!("bad header: {e}")))?;
        if config_dim + geom_dim != layer_sizes[0] {
            return Err(corrupt("D+G does not match the input layer width"));
        }
        let param_count: usize =
            (0..NUM_LAYERS).map(|k| layer_sizes[k + 1] * (layer_sizes[k] + 1)).sum();
        if bytes.len() != header + 8 * param_count {
            return Err(corrupt("payload length does not match layer_sizes"));
        }
        let mut off = header;
        let mut f64_next = || {
            let v = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            off += 8;
            v
        };
        let mut weights = Vec::with_capacity(NUM_LAYERS);
        let mut biases = Vec::with_capacity(NUM_LAYERS);
        for k in 0..NUM_LAYERS {
            let (rows, cols) = (layer_sizes[k + 1], layer_sizes[k]);
            let w: Vec<f64> = (0..rows * cols).map(|_| f64_next()).collect();
            weights.push(Array2::from_shape_vec((rows, cols), w).unwrap());
            biases.push(Array1::from_iter((0..rows).map(|_| f64_next())));
        }
        MlpModel::from_parts(&layer_sizes, config_dim, weights, biases)
            .map_err(|e| corrupt(&format!("{e}")))
    }
}

fn validate_sizes(layer_sizes: &[usize], config_dim: usize) -> Result<()> {
    if layer_sizes.len() != NUM_LAYERS + 1 {
        return Err(Error::InvalidArgument(format!(
            "expected {} layer sizes for {NUM_LAYERS} affine layers, got {}",
            NUM_LAYERS + 1,
            layer_sizes.len()
        )));
    }
    if *layer_sizes.last().unwrap() != 1 {
        return Err(Error::InvalidArgument("output layer must have width 1".into()));
    }
    if layer_sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidArgument("zero-width layer".into()));
    }
    if config_dim == 0 || config_dim > layer_sizes[0] {
        return Err(Error::InvalidArgument(format!(
            "config_dim {config_dim} outside 1..={}",
            layer_sizes[0]
        )));
    }
    Ok(())
}

/// Builds one net-input row from a configuration and obstacle parameters.
pub fn input_row(q: &Config, params: &[f64]) -> arrayvec::ArrayVec<f64, 8> {
    let mut row = arrayvec::ArrayVec::new();
    row.try_extend_from_slice(q.as_slice()).unwrap();
    row.try_extend_from_slice(params).unwrap();
    row
}

#[allow(unused)]
pub(crate) fn relu(x: f64) -> f64 {
    x.max(0.0)
}
