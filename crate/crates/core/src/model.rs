//! Single-hidden-layer ReLU MLP regressor with Adam, built from scratch.
//!
//! Maps (temperature, irradiance, H3 feature) to aggregated PV power.
//! ReLU is applied in all layers including the output neuron, so the
//! target is normalized by min-shift-plus-scale to [0, 1] rather than by
//! z-score: non-negative normalized targets stay representable and the
//! prediction can never fall below the denormalized zero bound, matching
//! power being non-negative.
//!
//! Training is deterministic: shuffles come from the seeded stream, and
//! batch reductions run over fixed-size chunks combined in chunk order,
//! so results are bit-identical across runs and thread counts.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::rng;
use crate::scenario::Dataset;

/// Input feature count: temperature, irradiance, H3 feature.
pub const INPUT_DIM: usize = 3;

/// Fixed chunk size for deterministic batch reductions.
const REDUCE_CHUNK: usize = 8192;

/// Per-feature standardization plus target shift/scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Normalizer {
    pub feat_mean: [f64; INPUT_DIM],
    pub feat_sd: [f64; INPUT_DIM],
    /// Target shift; the fit uses the training minimum.
    pub target_offset: f64,
    /// Target scale; the fit uses the training range.
    pub target_scale: f64,
}

impl Normalizer {
    /// Identity transform, useful for hand-built models in tests.
    pub fn identity() -> Self {
        Self {
            feat_mean: [0.0; INPUT_DIM],
            feat_sd: [1.0; INPUT_DIM],
            target_offset: 0.0,
            target_scale: 1.0,
        }
    }

    /// Fit on (features, target) rows; errors when a feature or the
    /// target is constant.
    pub fn fit(rows: &[([f64; INPUT_DIM], f64)]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("cannot fit normalizer on no rows".into()));
        }
        let n = rows.len() as f64;
        let mut mean = [0.0; INPUT_DIM];
        for (x, _) in rows {
            for k in 0..INPUT_DIM {
                mean[k] += x[k];
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = [0.0; INPUT_DIM];
        let mut y_min = f64::INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for (x, y) in rows {
            for k in 0..INPUT_DIM {
                var[k] += (x[k] - mean[k]).powi(2);
            }
            y_min = y_min.min(*y);
            y_max = y_max.max(*y);
        }
        let mut sd = [0.0; INPUT_DIM];
        for k in 0..INPUT_DIM {
            sd[k] = (var[k] / n).sqrt();
            if !(sd[k] > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "feature {k} is constant; cannot normalize"
                )));
            }
        }
        let scale = y_max - y_min;
        if !(scale > 0.0) {
            return Err(Error::InvalidInput("target is constant; cannot normalize".into()));
        }
        Ok(Self {
            feat_mean: mean,
            feat_sd: sd,
            target_offset: y_min,
            target_scale: scale,
        })
    }

    pub fn normalize(&self, x: &[f64; INPUT_DIM]) -> [f64; INPUT_DIM] {
        let mut z = [0.0; INPUT_DIM];
        for k in 0..INPUT_DIM {
            z[k] = (x[k] - self.feat_mean[k]) / self.feat_sd[k];
        }
        z
    }

    pub fn normalize_target(&self, y: f64) -> f64 {
        (y - self.target_offset) / self.target_scale
    }

    pub fn denormalize_target(&self, v: f64) -> f64 {
        self.target_offset + self.target_scale * v
    }
}

/// The 3 -> hidden -> 1 ReLU network plus its normalizer.
#[derive(Debug, Clone)]
pub struct MlpModel {
    pub hidden: usize,
    /// Hidden weights, row-major `[hidden][INPUT_DIM]`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// Output weights, one per hidden unit.
    pub w2: Vec<f64>,
    pub b2: f64,
    pub normalizer: Normalizer,
}

impl MlpModel {
    /// He-uniform initialization. The output bias starts at 0.5, the
    /// midpoint of the normalized target range, so the output ReLU opens
    /// with live gradients.
    pub fn init(hidden: usize, normalizer: Normalizer, seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        let lim1 = (6.0 / INPUT_DIM as f64).sqrt();
        let lim2 = (6.0 / hidden as f64).sqrt();
        let w1 = (0..hidden * INPUT_DIM)
            .map(|_| rng.gen_range(-lim1..lim1))
            .collect();
        let w2 = (0..hidden).map(|_| rng.gen_range(-lim2..lim2)).collect();
        Self {
            hidden,
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: 0.5,
            normalizer,
        }
    }

    /// Network output in normalized target space for normalized features.
    fn forward_normalized(&self, z: &[f64; INPUT_DIM]) -> f64 {
        let mut out = self.b2;
        for j in 0..self.hidden {
            let mut pre = self.b1[j];
            for k in 0..INPUT_DIM {
                pre += self.w1[j * INPUT_DIM + k] * z[k];
            }
            if pre > 0.0 {
                out += self.w2[j] * pre;
            }
        }
        out.max(0.0)
    }

    /// Nowcast power for raw features (temperature, irradiance, H3), kW.
    pub fn forward(&self, x: &[f64; INPUT_DIM]) -> Result<f64> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature".into()));
        }
        let z = self.normalizer.normalize(x);
        Ok(self.normalizer.denormalize_target(self.forward_normalized(&z)))
    }

    /// Batch prediction, parallel over fixed chunks with ordered merge.
    pub fn predict_batch(&self, xs: &[[f64; INPUT_DIM]]) -> Result<Vec<f64>> {
        if xs.iter().any(|x| x.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidInput("non-finite feature".into()));
        }
        let n_chunks = xs.len().div_ceil(REDUCE_CHUNK);
        let chunks = par::map_indexed(n_chunks, |c| {
            let lo = c * REDUCE_CHUNK;
            let hi = (lo + REDUCE_CHUNK).min(xs.len());
            xs[lo..hi]
                .iter()
                .map(|x| {
                    let z = self.normalizer.normalize(x);
                    self.normalizer.denormalize_target(self.forward_normalized(&z))
                })
                .collect::<Vec<f64>>()
        });
        Ok(chunks.concat())
    }

    fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }
}

/// Parameter-shaped gradient (or moment) container.
#[derive(Debug, Clone)]
pub struct Grads {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl Grads {
    fn zeros(hidden: usize) -> Self {
        Self {
            w1: vec![0.0; hidden * INPUT_DIM],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    fn add(&mut self, other: &Grads) {
        for (a, b) in self.w1.iter_mut().zip(&other.w1) {
            *a += b;
        }
        for (a, b) in self.b1.iter_mut().zip(&other.b1) {
            *a += b;
        }
        for (a, b) in self.w2.iter_mut().zip(&other.w2) {
            *a += b;
        }
        self.b2 += other.b2;
    }

    fn scale(&mut self, f: f64) {
        for v in self.w1.iter_mut().chain(&mut self.b1).chain(&mut self.w2) {
            *v *= f;
        }
        self.b2 *= f;
    }
}

/// Mean squared error in normalized target space and exact gradients for
/// the piecewise-linear network (ReLU subgradient at 0 taken as 0).
///
/// `batch` carries raw features and raw targets; normalization happens
/// inside so the gradients match what training applies.
pub fn loss_and_grads(m: &MlpModel, batch: &[([f64; INPUT_DIM], f64)]) -> Result<(f64, Grads)> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let n = batch.len();
    let n_chunks = n.div_ceil(REDUCE_CHUNK);
    let partials = par::map_indexed(n_chunks, |c| {
        let lo = c * REDUCE_CHUNK;
        let hi = (lo + REDUCE_CHUNK).min(n);
        let mut g = Grads::zeros(m.hidden);
        let mut sse = 0.0;
        let mut hidden_pre = vec![0.0; m.hidden];
        for (x, y) in &batch[lo..hi] {
            let z = m.normalizer.normalize(x);
            let yn = m.normalizer.normalize_target(*y);
            let mut out_pre = m.b2;
            for j in 0..m.hidden {
                let mut pre = m.b1[j];
                for k in 0..INPUT_DIM {
                    pre += m.w1[j * INPUT_DIM + k] * z[k];
                }
                hidden_pre[j] = pre;
                if pre > 0.0 {
                    out_pre += m.w2[j] * pre;
                }
            }
            let yhat = out_pre.max(0.0);
            let err = yhat - yn;
            sse += err * err;
            if out_pre > 0.0 {
                let delta_out = 2.0 * err;
                g.b2 += delta_out;
                for j in 0..m.hidden {
                    let h = hidden_pre[j].max(0.0);
                    g.w2[j] += delta_out * h;
                    if hidden_pre[j] > 0.0 {
                        let delta_h = delta_out * m.w2[j];
                        g.b1[j] += delta_h;
                        for k in 0..INPUT_DIM {
                            g.w1[j * INPUT_DIM + k] += delta_h * z[k];
                        }
                    }
                }
            }
        }
        (sse, g)
    });
    let mut total = Grads::zeros(m.hidden);
    let mut sse = 0.0;
    for (s, g) in &partials {
        sse += s;
        total.add(g);
    }
    total.scale(1.0 / n as f64);
    Ok((sse / n as f64, total))
}

/// Adam optimizer state.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Grads,
    pub v: Grads,
    pub step_count: u64,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(hidden: usize, alpha: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            m: Grads::zeros(hidden),
            v: Grads::zeros(hidden),
            step_count: 0,
            alpha,
            beta1,
            beta2,
            epsilon,
        }
    }
}

/// One in-place Adam update with bias correction.
pub fn adam_step(model: &mut MlpModel, grads: &Grads, state: &mut AdamState) {
    state.step_count += 1;
    let t = state.step_count as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (a, b1c, b2c, eps) = (state.alpha, state.beta1, state.beta2, state.epsilon);

    let mut update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
        *m = b1c * *m + (1.0 - b1c) * g;
        *v = b2c * *v + (1.0 - b2c) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= a * m_hat / (v_hat.sqrt() + eps);
    };
    for i in 0..model.w1.len() {
        update(&mut model.w1[i], grads.w1[i], &mut state.m.w1[i], &mut state.v.w1[i]);
    }
    for i in 0..model.b1.len() {
        update(&mut model.b1[i], grads.b1[i], &mut state.m.b1[i], &mut state.v.b1[i]);
    }
    for i in 0..model.w2.len() {
        update(&mut model.w2[i], grads.w2[i], &mut state.m.w2[i], &mut state.v.w2[i]);
    }
    update(&mut model.b2, grads.b2, &mut state.m.b2, &mut state.v.b2);
}

/// Training hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub validation_fraction: f64,
    pub patience: usize,
    pub hidden: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 33_000,
            max_epochs: 500,
            alpha: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            validation_fraction: 0.2,
            patience: 25,
            hidden: 150,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidInput("batch_size must be at least 1".into()));
        }
        if !(0.0 < self.validation_fraction && self.validation_fraction < 1.0) {
            return Err(Error::InvalidInput(
                "validation_fraction must lie in (0, 1)".into(),
            ));
        }
        if self.hidden == 0 {
            return Err(Error::InvalidInput("hidden width must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

/// Per-epoch record of the run; also serializable as
/// `epoch,train_mse,val_mse` CSV.
#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub epochs: Vec<EpochStats>,
}

impl TrainLog {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("epoch,train_mse,val_mse\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{},{}\n", e.epoch, e.train_mse, e.val_mse));
        }
        out
    }
}

/// Train on a dataset with a scenario-level 80/20 split.
///
/// Splitting by scenario id rather than by row keeps validation instants
/// out of the training days entirely. The normalizer is fitted on the
/// training split only; mini-batches come from a seeded shuffle each
/// epoch; the weights with the best validation MSE are returned along
/// with the per-epoch log.
pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<(MlpModel, TrainLog)> {
    cfg.validate()?;
    if dataset.rows.is_empty() {
        return Err(Error::InvalidInput("empty dataset".into()));
    }

    let mut rng = rng::seeded(cfg.seed);
    let ids = dataset.scenario_ids();
    let (train_rows, val_rows): (Vec<usize>, Vec<usize>) = if ids.len() >= 2 {
        let mut shuffled = ids.clone();
        shuffled.shuffle(&mut rng);
        let n_val = ((shuffled.len() as f64 * cfg.validation_fraction).round() as usize)
            .clamp(1, shuffled.len() - 1);
        let val_ids: std::collections::HashSet<u32> =
            shuffled[..n_val].iter().copied().collect();
        let mut tr = Vec::new();
        let mut va = Vec::new();
        for (i, r) in dataset.rows.iter().enumerate() {
            if val_ids.contains(&r.scenario_id) {
                va.push(i);
            } else {
                tr.push(i);
            }
        }
        (tr, va)
    } else {
        // Single-scenario dataset: fall back to a row-level tail split.
        let n_val = ((dataset.rows.len() as f64 * cfg.validation_fraction).round() as usize)
            .clamp(1, dataset.rows.len() - 1);
        let cut = dataset.rows.len() - n_val;
        ((0..cut).collect(), (cut..dataset.rows.len()).collect())
    };

    let gather = |idx: &[usize]| -> Vec<([f64; INPUT_DIM], f64)> {
        idx.iter()
            .map(|&i| (dataset.rows[i].features, dataset.rows[i].target_kw))
            .collect()
    };
    let train_set = gather(&train_rows);
    let val_set = gather(&val_rows);

    let normalizer = Normalizer::fit(&train_set)?;
    let mut model = MlpModel::init(cfg.hidden, normalizer, rng::derive_seed(cfg.seed, 1));
    let mut log = TrainLog::default();
    if cfg.max_epochs == 0 {
        return Ok((model, log));
    }

    let mut adam = AdamState::new(cfg.hidden, cfg.alpha, cfg.beta1, cfg.beta2, cfg.epsilon);
    let batch_size = cfg.batch_size.min(train_set.len());
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut best: Option<(f64, MlpModel)> = None;
    let mut since_best = 0usize;

    let mut batch_buf: Vec<([f64; INPUT_DIM], f64)> = Vec::with_capacity(batch_size);
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut train_sse_weighted = 0.0;
        for chunk in order.chunks(batch_size) {
            batch_buf.clear();
            batch_buf.extend(chunk.iter().map(|&i| train_set[i]));
            let (mse, grads) = loss_and_grads(&model, &batch_buf)?;
            train_sse_weighted += mse * chunk.len() as f64;
            adam_step(&mut model, &grads, &mut adam);
        }
        let train_mse = train_sse_weighted / train_set.len() as f64;
        let val_mse = mse_over(&model, &val_set);
        log.epochs.push(EpochStats {
            epoch,
            train_mse,
            val_mse,
        });
        let improved = best.as_ref().map(|(b, _)| val_mse < *b).unwrap_or(true);
        if improved {
            best = Some((val_mse, model.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > cfg.patience {
                break;
            }
        }
    }
    let (_, best_model) = best.expect("at least one epoch ran");
    Ok((best_model, log))
}

/// Normalized-space MSE of a model over rows, chunked and order-fixed.
fn mse_over(model: &MlpModel, rows: &[([f64; INPUT_DIM], f64)]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let n_chunks = rows.len().div_ceil(REDUCE_CHUNK);
    let partials = par::map_indexed(n_chunks, |c| {
        let lo = c * REDUCE_CHUNK;
        let hi = (lo + REDUCE_CHUNK).min(rows.len());
        let mut sse = 0.0;
        for (x, y) in &rows[lo..hi] {
            let z = model.normalizer.normalize(x);
            let err = model.forward_normalized(&z) - model.normalizer.normalize_target(*y);
            sse += err * err;
        }
        sse
    });
    partials.iter().sum::<f64>() / rows.len() as f64
}

/// Versioned on-disk model schema.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    dims: [usize; 3],
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
    normalizer: Normalizer,
    /// Training configuration for attribution; absent for hand-built
    /// models.
    train_config: Option<TrainConfig>,
}

const MODEL_FORMAT_VERSION: u32 = 1;

/// Serialize a model (and optionally the training config that produced
/// it) as versioned JSON.
pub fn save_model(model: &MlpModel, train_config: Option<&TrainConfig>, path: &Path) -> Result<()> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        dims: [INPUT_DIM, model.hidden, 1],
        w1: model.w1.clone(),
        b1: model.b1.clone(),
        w2: model.w2.clone(),
        b2: model.b2,
        normalizer: model.normalizer.clone(),
        train_config: train_config.cloned(),
    };
    std::fs::write(path, serde_json::to_string(&file)?)?;
    Ok(())
}

/// Load a model saved by [`save_model`], checking version and shapes.
pub fn load_model(path: &Path) -> Result<MlpModel> {
    let file: ModelFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelSchema(format!(
            "format_version {} unsupported (expected {MODEL_FORMAT_VERSION})",
            file.format_version
        )));
    }
    if file.dims[0] != INPUT_DIM || file.dims[2] != 1 {
        return Err(Error::ModelSchema(format!(
            "dims {:?} unsupported (expected [{INPUT_DIM}, hidden, 1])",
            file.dims
        )));
    }
    let hidden = file.dims[1];
    if file.w1.len() != hidden * INPUT_DIM
        || file.b1.len() != hidden
        || file.w2.len() != hidden
    {
        return Err(Error::ModelSchema("weight shapes do not match dims".into()));
    }
    if !(file.normalizer.target_scale > 0.0)
        || file.normalizer.feat_sd.iter().any(|&s| !(s > 0.0))
    {
        return Err(Error::ModelSchema("normalizer scales must be positive".into()));
    }
    Ok(MlpModel {
        hidden,
        w1: file.w1,
        b1: file.b1,
        w2: file.w2,
        b2: file.b2,
        normalizer: file.normalizer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn random_model(hidden: usize, seed: u64) -> MlpModel {
        let mut norm = Normalizer::identity();
        norm.feat_mean = [0.5, -0.2, 1.0];
        norm.feat_sd = [1.5, 0.8, 2.0];
        norm.target_offset = 2.0;
        norm.target_scale = 5.0;
        MlpModel::init(hidden, norm, seed)
    }

    fn random_batch(n: usize, seed: u64) -> Vec<([f64; INPUT_DIM], f64)> {
        let mut rng = crate::rng::seeded(seed);
        (0..n)
            .map(|_| {
                (
                    [
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                    ],
                    rng.gen_range(0.0..8.0),
                )
            })
            .collect()
    }

    #[test]
    fn zero_network_outputs_offset() {
        let mut m = random_model(4, 1);
        m.w1.iter_mut().for_each(|v| *v = 0.0);
        m.b1.iter_mut().for_each(|v| *v = 0.0);
        m.w2.iter_mut().for_each(|v| *v = 0.0);
        m.b2 = 0.0;
        // denormalize(0) is the target offset ("mean" of the zero network).
        assert_abs_diff_eq!(m.forward(&[1.0, 2.0, 3.0]).unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn unit_bias_network_hand_value() {
        let hidden = 150;
        let mut m = random_model(hidden, 2);
        m.w1.iter_mut().for_each(|v| *v = 0.0);
        m.b1.iter_mut().for_each(|v| *v = 1.0);
        m.w2.iter_mut().for_each(|v| *v = 1.0 / hidden as f64);
        m.b2 = 0.0;
        // Normalized output relu(1) = 1 -> offset + scale.
        let expect = m.normalizer.target_offset + m.normalizer.target_scale;
        assert_abs_diff_eq!(m.forward(&[0.3, 0.0, -1.0]).unwrap(), expect, epsilon = 1e-12);
    }

    #[test]
    fn forward_matches_straight_line_oracle() {
        // Independent re-implementation with explicit loops.
        fn oracle(m: &MlpModel, x: &[f64; INPUT_DIM]) -> f64 {
            let mut z = [0.0; INPUT_DIM];
            for k in 0..INPUT_DIM {
                z[k] = (x[k] - m.normalizer.feat_mean[k]) / m.normalizer.feat_sd[k];
            }
            let mut acc = m.b2;
            for j in 0..m.hidden {
                let mut pre = m.b1[j];
                for k in 0..INPUT_DIM {
                    pre += m.w1[j * INPUT_DIM + k] * z[k];
                }
                let h = if pre > 0.0 { pre } else { 0.0 };
                acc += m.w2[j] * h;
            }
            let o = if acc > 0.0 { acc } else { 0.0 };
            m.normalizer.target_offset + m.normalizer.target_scale * o
        }
        let m = random_model(7, 3);
        let batch = random_batch(5, 4);
        let preds = m.predict_batch(&batch.iter().map(|(x, _)| *x).collect::<Vec<_>>()).unwrap();
        for (i, (x, _)) in batch.iter().enumerate() {
            let o = oracle(&m, x);
            assert!((preds[i] - o).abs() <= 1e-12 * o.abs().max(1.0));
            assert_abs_diff_eq!(m.forward(x).unwrap(), o, epsilon = 1e-12);
        }
    }

    #[test]
    fn perfect_fit_zero_loss_zero_grads() {
        let m = random_model(5, 5);
        // Build targets equal to the model's own predictions.
        let xs = random_batch(20, 6);
        let batch: Vec<([f64; INPUT_DIM], f64)> = xs
            .iter()
            .map(|(x, _)| (*x, m.forward(x).unwrap()))
            .collect();
        let (mse, g) = loss_and_grads(&m, &batch).unwrap();
        assert!(mse <= 1e-24);
        assert!(g.w1.iter().all(|&v| v.abs() <= 1e-12));
        assert!(g.w2.iter().all(|&v| v.abs() <= 1e-12));
        assert!(g.b2.abs() <= 1e-12);
    }

    #[test]
    fn single_unit_gradient_hand_value() {
        // 1 hidden unit, identity normalizer: chain rule by hand.
        let mut m = MlpModel::init(1, Normalizer::identity(), 7);
        m.w1 = vec![0.5, -0.25, 0.1];
        m.b1 = vec![0.2];
        m.w2 = vec![0.8];
        m.b2 = 0.3;
        let x = [1.0, 2.0, -0.5];
        let y = 0.1;
        let pre = 0.5 * 1.0 - 0.25 * 2.0 + 0.1 * -0.5 + 0.2; // = 0.15 > 0
        let h = pre;
        let yhat = 0.8 * h + 0.3;
        let err = yhat - y;
        let (mse, g) = loss_and_grads(&m, &[(x, y)]).unwrap();
        assert_abs_diff_eq!(mse, err * err, epsilon = 1e-15);
        assert_abs_diff_eq!(g.w2[0], 2.0 * err * h, epsilon = 1e-12);
        assert_abs_diff_eq!(g.b2, 2.0 * err, epsilon = 1e-12);
        assert_abs_diff_eq!(g.w1[1], 2.0 * err * 0.8 * 2.0, epsilon = 1e-12);
    }

    /// Central finite differences over every parameter.
    fn finite_diff_check(m: &MlpModel, batch: &[([f64; INPUT_DIM], f64)]) {
        let (_, g) = loss_and_grads(m, batch).unwrap();
        let h = 1e-5;
        let mut probe = m.clone();
        let mut check = |get: &dyn Fn(&MlpModel) -> f64,
                         set: &dyn Fn(&mut MlpModel, f64),
                         analytic: f64| {
            let orig = get(m);
            set(&mut probe, orig + h);
            let up = loss_and_grads(&probe, batch).unwrap().0;
            set(&mut probe, orig - h);
            let down = loss_and_grads(&probe, batch).unwrap().0;
            set(&mut probe, orig);
            let numeric = (up - down) / (2.0 * h);
            let tol = 1e-4 * numeric.abs().max(analytic.abs()) + 1e-6;
            assert!(
                (numeric - analytic).abs() <= tol,
                "grad mismatch: numeric {numeric} vs analytic {analytic}"
            );
        };
        for i in 0..m.w1.len() {
            check(&|m| m.w1[i], &|m, v| m.w1[i] = v, g.w1[i]);
        }
        for i in 0..m.b1.len() {
            check(&|m| m.b1[i], &|m, v| m.b1[i] = v, g.b1[i]);
        }
        for i in 0..m.w2.len() {
            check(&|m| m.w2[i], &|m, v| m.w2[i] = v, g.w2[i]);
        }
        check(&|m| m.b2, &|m, v| m.b2 = v, g.b2);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..10u64 {
            let mut rng = crate::rng::seeded(seed + 100);
            let hidden = rng.gen_range(1..6);
            let m = random_model(hidden, seed);
            let batch = random_batch(rng.gen_range(1..12), seed + 200);
            finite_diff_check(&m, &batch);
        }
    }

    #[test]
    fn adam_zero_grads_no_change() {
        let m0 = random_model(3, 8);
        let mut m = m0.clone();
        let mut st = AdamState::new(3, 1e-3, 0.9, 0.999, 1e-8);
        let g = Grads::zeros(3);
        adam_step(&mut m, &g, &mut st);
        assert_eq!(m.w1, m0.w1);
        assert_eq!(m.b2, m0.b2);
        assert_eq!(st.step_count, 1);
    }

    #[test]
    fn adam_first_step_magnitude() {
        // Scalar parameter with g = 1: bias-corrected first step is
        // alpha * 1 / (1 + eps') ~ alpha.
        let mut m = random_model(1, 9);
        let before = m.b2;
        let mut st = AdamState::new(1, 1e-3, 0.9, 0.999, 1e-8);
        let mut g = Grads::zeros(1);
        g.b2 = 1.0;
        adam_step(&mut m, &g, &mut st);
        let step = before - m.b2;
        assert!((step - 1e-3).abs() < 1e-8, "step = {step}");
    }

    #[test]
    fn adam_deterministic() {
        let mut m1 = random_model(4, 10);
        let mut m2 = m1.clone();
        let mut s1 = AdamState::new(4, 1e-3, 0.9, 0.999, 1e-8);
        let mut s2 = AdamState::new(4, 1e-3, 0.9, 0.999, 1e-8);
        let batch = random_batch(16, 11);
        for _ in 0..5 {
            let (_, g1) = loss_and_grads(&m1, &batch).unwrap();
            let (_, g2) = loss_and_grads(&m2, &batch).unwrap();
            adam_step(&mut m1, &g1, &mut s1);
            adam_step(&mut m2, &g2, &mut s2);
        }
        assert_eq!(m1.w1, m2.w1);
        assert_eq!(m1.b2, m2.b2);
    }

    fn linear_dataset(n: usize, scenarios: u32) -> Dataset {
        let mut rng = crate::rng::seeded(12);
        let rows = (0..n)
            .map(|i| {
                let temp = rng.gen_range(10.0..35.0);
                let irr = rng.gen_range(0.0..1000.0);
                let h3 = rng.gen_range(0.1..1.5);
                crate::scenario::DatasetRow {
                    scenario_id: i as u32 % scenarios + 1,
                    t: i as u32,
                    features: [temp, irr, h3],
                    target_kw: 2.0 * irr,
                }
            })
            .collect();
        Dataset { rows }
    }

    #[test]
    fn train_learns_linear_target() {
        let ds = linear_dataset(10_000, 50);
        let cfg = TrainConfig {
            batch_size: 1024,
            max_epochs: 200,
            hidden: 16,
            patience: 200,
            seed: 3,
            ..TrainConfig::default()
        };
        let (model, log) = train(&ds, &cfg).unwrap();
        assert!(!log.epochs.is_empty());
        // Validation RMSE under 1% of the target sd (sd of 2*U(0,1000)
        // is ~577).
        let val_rmse_kw = log
            .epochs
            .iter()
            .map(|e| e.val_mse)
            .fold(f64::INFINITY, f64::min)
            .sqrt()
            * model.normalizer.target_scale;
        assert!(
            val_rmse_kw < 5.77,
            "validation RMSE {val_rmse_kw} kW too high"
        );
    }

    #[test]
    fn train_zero_epochs_returns_init() {
        let ds = linear_dataset(100, 4);
        let cfg = TrainConfig {
            max_epochs: 0,
            hidden: 8,
            batch_size: 32,
            ..TrainConfig::default()
        };
        let (model, log) = train(&ds, &cfg).unwrap();
        assert!(log.epochs.is_empty());
        assert_eq!(model.hidden, 8);
    }

    #[test]
    fn train_rejects_constant_feature() {
        let mut ds = linear_dataset(100, 4);
        for r in &mut ds.rows {
            r.features[0] = 21.5;
        }
        assert!(train(&ds, &TrainConfig::default()).is_err());
    }

    #[test]
    fn train_deterministic_across_runs() {
        let ds = linear_dataset(2_000, 10);
        let cfg = TrainConfig {
            batch_size: 256,
            max_epochs: 10,
            hidden: 8,
            seed: 5,
            ..TrainConfig::default()
        };
        let (m1, l1) = train(&ds, &cfg).unwrap();
        let (m2, l2) = train(&ds, &cfg).unwrap();
        assert_eq!(m1.w1, m2.w1);
        assert_eq!(m1.b2, m2.b2);
        assert_eq!(l1.to_csv_string(), l2.to_csv_string());
    }

    #[test]
    fn normalization_invariance() {
        // Affine feature rescaling with a refit normalizer yields the
        // same normalized inputs.
        let rows: Vec<([f64; INPUT_DIM], f64)> = random_batch(500, 13);
        let scaled: Vec<([f64; INPUT_DIM], f64)> = rows
            .iter()
            .map(|(x, y)| {
                (
                    [3.0 * x[0] + 1.0, 0.5 * x[1] - 2.0, 10.0 * x[2]],
                    *y,
                )
            })
            .collect();
        let n1 = Normalizer::fit(&rows).unwrap();
        let n2 = Normalizer::fit(&scaled).unwrap();
        for ((x1, _), (x2, _)) in rows.iter().zip(&scaled) {
            let z1 = n1.normalize(x1);
            let z2 = n2.normalize(x2);
            for k in 0..INPUT_DIM {
                assert_abs_diff_eq!(z1[k], z2[k], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn output_never_below_zero_bound() {
        let m = random_model(8, 14);
        let mut rng = crate::rng::seeded(15);
        for _ in 0..200 {
            let x = [
                rng.gen_range(-50.0..50.0),
                rng.gen_range(-50.0..50.0),
                rng.gen_range(-50.0..50.0),
            ];
            let y = m.forward(&x).unwrap();
            assert!(y >= m.normalizer.target_offset - 1e-12);
        }
    }

    #[test]
    fn model_roundtrip_preserves_outputs() {
        let m = random_model(12, 16);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&m, None, &path).unwrap();
        let back = load_model(&path).unwrap();
        let mut rng = crate::rng::seeded(17);
        for _ in 0..100 {
            let x = [
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            ];
            let a = m.forward(&x).unwrap();
            let b = back.forward(&x).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
        assert_eq!(m.param_count(), back.param_count());
    }

    #[test]
    fn model_file_bad_dims_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let m = random_model(3, 18);
        save_model(&m, None, &path).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text = text.replace("\"dims\":[3,3,1]", "\"dims\":[4,3,1]");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(load_model(&path), Err(Error::ModelSchema(_))));
    }

    #[test]
    fn hand_written_zero_model_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let json = r#"{
            "format_version": 1,
            "dims": [3, 2, 1],
            "w1": [0, 0, 0, 0, 0, 0],
            "b1": [0, 0],
            "w2": [0, 0],
            "b2": 0.0,
            "normalizer": {
                "feat_mean": [0, 0, 0],
                "feat_sd": [1, 1, 1],
                "target_offset": 7.25,
                "target_scale": 3.0
            },
            "train_config": null
        }"#;
        std::fs::write(&path, json).unwrap();
        let m = load_model(&path).unwrap();
        assert_abs_diff_eq!(m.forward(&[5.0, -2.0, 0.4]).unwrap(), 7.25, epsilon = 1e-15);
    }
}
