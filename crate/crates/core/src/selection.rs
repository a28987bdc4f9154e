//! Selection policies: the neural selection network and the fixed baselines.

use alloc::format;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::population::{extract_features, novelty, FeatureVector, Individual, NoveltyMode, Population};
use crate::{Error, Result};

/// Hidden layer widths of the reference network.
pub const DEFAULT_HIDDEN: [usize; 2] = [16, 16];
/// Widest layer the allocation-free forward pass supports.
pub const MAX_LAYER_WIDTH: usize = 64;
/// Standard deviation of the initial parameters.
pub const INIT_STD_DEV: f64 = 0.1;
/// Threshold at which the minimal-criterion baseline stops rewarding fitness.
pub const MIN_CRITERION_THRESHOLD: f64 = 16.0;

/// Flat parameter vector of a feedforward network.
///
/// Layers are stored in order. Each layer `(inputs, outputs)` contributes its
/// weight matrix in row-major order over `inputs x outputs` (entry
/// `[i * outputs + o]` connects input `i` to output `o`) followed by its
/// `outputs` biases. Hidden layers use `tanh`; the last layer is linear and
/// has a single output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    layer_shapes: Vec<(usize, usize)>,
    values: Vec<f64>,
}

impl PolicyParams {
    pub fn shapes_for(hidden: &[usize]) -> Vec<(usize, usize)> {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(FeatureVector::LEN);
        widths.extend_from_slice(hidden);
        widths.push(1);
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn param_count(shapes: &[(usize, usize)]) -> usize {
        shapes.iter().map(|&(i, o)| i * o + o).sum()
    }

    fn check_shapes(shapes: &[(usize, usize)]) -> Result<()> {
        let first = shapes.first().ok_or_else(|| Error::Config("network needs at least one layer".into()))?;
        if first.0 != FeatureVector::LEN {
            return Err(Error::Config(format!("first layer must take {} inputs, got {}", FeatureVector::LEN, first.0)));
        }
        if shapes.last().map(|s| s.1) != Some(1) {
            return Err(Error::Config("last layer must have exactly one output".into()));
        }
        for w in shapes.windows(2) {
            if w[0].1 != w[1].0 {
                return Err(Error::Config(format!("layer {:?} does not feed layer {:?}", w[0], w[1])));
            }
        }
        if let Some(s) = shapes.iter().find(|s| s.0 == 0 || s.1 == 0 || s.0 > MAX_LAYER_WIDTH || s.1 > MAX_LAYER_WIDTH) {
            return Err(Error::Config(format!("layer {s:?} has a width outside 1..={MAX_LAYER_WIDTH}")));
        }
        Ok(())
    }

    pub fn new(layer_shapes: Vec<(usize, usize)>, values: Vec<f64>) -> Result<Self> {
        Self::check_shapes(&layer_shapes)?;
        let expected = Self::param_count(&layer_shapes);
        if values.len() != expected {
            return Err(Error::ParamCount { expected, found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("parameters must be finite".into()));
        }
        Ok(PolicyParams { layer_shapes, values })
    }

    pub fn zeros(layer_shapes: Vec<(usize, usize)>) -> Result<Self> {
        let n = Self::param_count(&layer_shapes);
        Self::new(layer_shapes, alloc::vec![0.0; n])
    }

    /// Every parameter drawn from `Normal(0, std_dev)`.
    pub fn random<R: Rng + ?Sized>(layer_shapes: Vec<(usize, usize)>, std_dev: f64, rng: &mut R) -> Result<Self> {
        Self::check_shapes(&layer_shapes)?;
        let normal = Normal::new(0.0, std_dev).map_err(|e| Error::Config(format!("init std dev: {e}")))?;
        let values = (0..Self::param_count(&layer_shapes)).map(|_| normal.sample(rng)).collect();
        Ok(PolicyParams { layer_shapes, values })
    }

    pub fn layer_shapes(&self) -> &[(usize, usize)] {
        &self.layer_shapes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same shapes, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.layer_shapes.clone(), values)
    }

    /// Forward pass: `tanh` on hidden layers, linear output.
    pub fn score(&self, fv: &FeatureVector) -> f64 {
        if self.layer_shapes == REFERENCE_SHAPES {
            return self.score_reference(fv);
        }
        let mut a = [0.0f64; MAX_LAYER_WIDTH];
        let mut b = [0.0f64; MAX_LAYER_WIDTH];
        let (mut current, mut next) = (&mut a, &mut b);
        current[..FeatureVector::LEN].copy_from_slice(&fv.to_array());
        let last = self.layer_shapes.len() - 1;
        let mut rest = &self.values[..];
        for (layer, &(inputs, outputs)) in self.layer_shapes.iter().enumerate() {
            let (weights, tail) = rest.split_at(inputs * outputs);
            let (biases, tail) = tail.split_at(outputs);
            rest = tail;
            let out = &mut next[..outputs];
            out.copy_from_slice(biases);
            for (&x, row) in current[..inputs].iter().zip(weights.chunks_exact(outputs)) {
                for (acc, &w) in out.iter_mut().zip(row) {
                    *acc += x * w;
                }
            }
            if layer != last {
                tanh_in_place(out);
            }
            core::mem::swap(&mut current, &mut next);
        }
        current[0]
    }
}

const H: usize = DEFAULT_HIDDEN[0];
const REFERENCE_SHAPES: [(usize, usize); 3] = [(FeatureVector::LEN, H), (H, H), (H, 1)];
const _: () = assert!(DEFAULT_HIDDEN[0] == DEFAULT_HIDDEN[1]);

impl PolicyParams {
    /// Same computation as the generic path with sizes fixed at compile time.
    fn score_reference(&self, fv: &FeatureVector) -> f64 {
        let v = &self.values[..];
        let (w1, v) = v.split_at(FeatureVector::LEN * H);
        let (b1, v) = v.split_at(H);
        let (w2, v) = v.split_at(H * H);
        let (b2, v) = v.split_at(H);
        let (w3, b3) = v.split_at(H);
        let mut h1 = dense::<{ FeatureVector::LEN }, H>(&fv.to_array(), w1, b1);
        tanh_in_place(&mut h1);
        let mut h2 = dense::<H, H>(&h1, w2, b2);
        tanh_in_place(&mut h2);
        dense::<H, 1>(&h2, w3, b3)[0]
    }
}

#[inline(always)]
fn dense<const I: usize, const O: usize>(x: &[f64; I], weights: &[f64], biases: &[f64]) -> [f64; O] {
    let mut out: [f64; O] = biases.try_into().expect("bias size");
    for (xi, row) in x.iter().zip(weights[..I * O].chunks_exact(O)) {
        let row: &[f64; O] = row.try_into().expect("row size");
        for o in 0..O {
            out[o] += xi * row[o];
        }
    }
    out
}

/// Branch-free `tanh` over a slice, accurate to a few ulps of 1.0.
///
/// Uses `tanh(x) = (e - 1) / (e + 1)` with `e = exp(2x)` computed by
/// base-2 range reduction and a degree-12 Taylor polynomial on
/// `|r| <= ln(2) / 2`. Inputs are clamped to `[-20, 20]`, where `tanh` is
/// already 1 to double precision.
#[inline(always)]
fn tanh_in_place(xs: &mut [f64]) {
    const LOG2E: f64 = core::f64::consts::LOG2_E;
    const LN2: f64 = core::f64::consts::LN_2;
    // adding 1.5 * 2^52 rounds to an integer held in the low mantissa bits
    const ROUND: f64 = 6_755_399_441_055_744.0;
    const C: [f64; 13] = [
        1.0,
        1.0,
        1.0 / 2.0,
        1.0 / 6.0,
        1.0 / 24.0,
        1.0 / 120.0,
        1.0 / 720.0,
        1.0 / 5_040.0,
        1.0 / 40_320.0,
        1.0 / 362_880.0,
        1.0 / 3_628_800.0,
        1.0 / 39_916_800.0,
        1.0 / 479_001_600.0,
    ];
    for v in xs.iter_mut() {
        let x = v.clamp(-20.0, 20.0);
        let y = 2.0 * x * LOG2E;
        let shifted = y + ROUND;
        let k = shifted - ROUND;
        let r = (y - k) * LN2;
        let mut p = C[12];
        p = p * r + C[11];
        p = p * r + C[10];
        p = p * r + C[9];
        p = p * r + C[8];
        p = p * r + C[7];
        p = p * r + C[6];
        p = p * r + C[5];
        p = p * r + C[4];
        p = p * r + C[3];
        p = p * r + C[2];
        p = p * r + C[1];
        p = p * r + C[0];
        // 2^k: the low bits of `shifted` are k in two's complement
        let scale = f64::from_bits(shifted.to_bits().wrapping_add(1023) << 52);
        let e = p * scale;
        *v = (e - 1.0) / (e + 1.0);
    }
}

pub fn network_score(params: &PolicyParams, fv: &FeatureVector) -> f64 {
    params.score(fv)
}

/// Adds independent `Normal(0, 1) * sigma` noise to every parameter.
pub fn perturb<R: Rng + ?Sized>(params: &PolicyParams, sigma: f64, rng: &mut R) -> PolicyParams {
    let values = params
        .values
        .iter()
        .map(|&v| {
            let z: f64 = StandardNormal.sample(rng);
            v + z * sigma
        })
        .collect();
    PolicyParams { layer_shapes: params.layer_shapes.clone(), values }
}

/// A function from an individual in its population to an internal fitness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SelectionPolicy {
    Network(PolicyParams),
    UnderlyingFitness,
    Novelty,
    MinimalCriterion { threshold: f64 },
    RandomDrift,
}

impl SelectionPolicy {
    pub fn minimal_criterion() -> Self {
        SelectionPolicy::MinimalCriterion { threshold: MIN_CRITERION_THRESHOLD }
    }

    /// Short name used on the command line and in output files.
    pub fn label(&self) -> &'static str {
        match self {
            SelectionPolicy::Network(_) => "sel4sel",
            SelectionPolicy::UnderlyingFitness => "fitness",
            SelectionPolicy::Novelty => "novelty",
            SelectionPolicy::MinimalCriterion { .. } => "mincrit",
            SelectionPolicy::RandomDrift => "drift",
        }
    }

    /// Internal fitness of `ind`. `member` says whether `ind` occupies a slot
    /// of `pop` (as opposed to a challenging offspring).
    ///
    /// Only the network and random-drift policies draw from `rng`; each draws
    /// exactly one uniform value per call.
    pub fn internal_fitness<R: Rng + ?Sized>(
        &self,
        ind: &Individual,
        member: bool,
        pop: &Population,
        total_generations: u32,
        mode: NoveltyMode,
        rng: &mut R,
    ) -> Result<f64> {
        match self {
            SelectionPolicy::Network(params) => {
                let fv = extract_features(ind, member, pop, total_generations, mode, rng)?;
                Ok(params.score(&fv))
            }
            SelectionPolicy::UnderlyingFitness => Ok(ind.fitness),
            SelectionPolicy::Novelty => novelty(ind.genome, &pop.members, member, mode),
            SelectionPolicy::MinimalCriterion { threshold } => Ok(ind.fitness.min(*threshold)),
            SelectionPolicy::RandomDrift => Ok(rng.random::<f64>()),
        }
    }
}
