use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::{augmented_loss, draw_interpolators};
use super::metric::avg_relative_error;
use super::norm::NormStats;
use super::optim::{adam_step, AdamConfig, AdamState};
use crate::error::{Error, Result};
use crate::format::{format_shape, parse_shape};
use crate::network::PdIaeModel;
use crate::spectral::ComplexGrid;
use crate::tensor::{backprop, Tape};

pub type Pair = (ComplexGrid, ComplexGrid);

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    /// Epochs without test improvement before the learning rate halves.
    pub plateau_halve: usize,
    /// Epochs without test improvement before training stops.
    pub plateau_stop: usize,
    /// Weight of the resampled term in the loss.
    pub lambda: f64,
    /// Grids the augmentation interpolators draw from.
    pub aug_grids: Vec<Vec<usize>>,
    pub adam: AdamConfig,
    pub max_epochs: usize,
    /// Optimizer step budget; `None` is unlimited.
    pub max_steps: Option<usize>,
    pub seed: u64,
    /// Grids of the per-epoch test metric; empty means the test split's own.
    pub eval_grids: Vec<Vec<usize>>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            batch: 5,
            plateau_halve: 40,
            plateau_stop: 100,
            lambda: 1.0,
            aug_grids: vec![vec![32], vec![48], vec![64], vec![96]],
            adam: AdamConfig::default(),
            max_epochs: 500,
            max_steps: None,
            seed: 1729,
            eval_grids: vec![],
        }
    }
}

pub const TRAIN_KEYS: &[&str] = &[
    "lr",
    "batch",
    "plateau_halve",
    "plateau_stop",
    "lambda",
    "aug_grids",
    "beta1",
    "beta2",
    "adam_eps",
    "max_epochs",
    "max_steps",
    "train_seed",
    "eval_grids",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidConfig(format!("`{key}`: cannot parse `{v}` as a number")))
}

fn parse_grids(v: &str) -> Result<Vec<Vec<usize>>> {
    if v.is_empty() {
        return Ok(vec![]);
    }
    v.split(',')
        .map(|g| {
            let g = parse_shape(g.trim())?;
            if g.is_empty() {
                return Err(Error::InvalidConfig("grid list entries need at least one axis".into()));
            }
            Ok(g)
        })
        .collect()
}

fn join_grids(gs: &[Vec<usize>]) -> String {
    gs.iter().map(|g| format_shape(g)).collect::<Vec<_>>().join(",")
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("`lr` must be positive");
        }
        if self.batch == 0 {
            return bad("`batch` must be at least 1");
        }
        if self.plateau_halve >= self.plateau_stop {
            return bad("`plateau_halve` must be below `plateau_stop`");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("`lambda` must be non-negative");
        }
        if self.lambda > 0.0 && self.aug_grids.is_empty() {
            return bad("`aug_grids` must be non-empty when `lambda` > 0");
        }
        let a = &self.adam;
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || !(a.eps > 0.0) {
            return bad("Adam needs 0 <= beta1, beta2 < 1 and adam_eps > 0");
        }
        if self.max_epochs == 0 {
            return bad("`max_epochs` must be at least 1");
        }
        Ok(())
    }

    pub fn is_key(key: &str) -> bool {
        TRAIN_KEYS.contains(&key)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "lr" => self.lr = num(key, v)?,
            "batch" => self.batch = num(key, v)?,
            "plateau_halve" => self.plateau_halve = num(key, v)?,
            "plateau_stop" => self.plateau_stop = num(key, v)?,
            "lambda" => self.lambda = num(key, v)?,
            "aug_grids" => self.aug_grids = parse_grids(v)?,
            "beta1" => self.adam.beta1 = num(key, v)?,
            "beta2" => self.adam.beta2 = num(key, v)?,
            "adam_eps" => self.adam.eps = num(key, v)?,
            "max_epochs" => self.max_epochs = num(key, v)?,
            "max_steps" => self.max_steps = if v == "none" { None } else { Some(num(key, v)?) },
            "train_seed" => self.seed = num(key, v)?,
            "eval_grids" => self.eval_grids = parse_grids(v)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn to_lines(&self) -> Vec<String> {
        vec![
            format!("lr={}", self.lr),
            format!("batch={}", self.batch),
            format!("plateau_halve={}", self.plateau_halve),
            format!("plateau_stop={}", self.plateau_stop),
            format!("lambda={}", self.lambda),
            format!("aug_grids={}", join_grids(&self.aug_grids)),
            format!("beta1={}", self.adam.beta1),
            format!("beta2={}", self.adam.beta2),
            format!("adam_eps={}", self.adam.eps),
            format!("max_epochs={}", self.max_epochs),
            format!("max_steps={}", self.max_steps.map_or("none".to_string(), |s| s.to_string())),
            format!("train_seed={}", self.seed),
            format!("eval_grids={}", join_grids(&self.eval_grids)),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_rel_err: f64,
    pub lr: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    MaxSteps,
    Plateau,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub log: Vec<EpochRecord>,
    pub stats: NormStats,
    pub best_epoch: usize,
    pub best_test_err: f64,
    pub steps: usize,
    /// Steps dropped because of a non-finite gradient.
    pub aborted_steps: usize,
    pub stop: StopReason,
}

pub fn log_csv(log: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,train_loss,test_rel_err,lr\n");
    for r in log {
        out.push_str(&format!("{},{},{},{}\n", r.epoch, r.train_loss, r.test_rel_err, r.lr));
    }
    out
}

/// Model evaluation in physical units: normalize inputs, run the network,
/// denormalize outputs.
pub fn predict_normalized(
    model: &PdIaeModel,
    stats: &NormStats,
    inputs: &[ComplexGrid],
    out_sizes: &[usize],
) -> Result<Vec<ComplexGrid>> {
    let x: Vec<ComplexGrid> = inputs.iter().map(|g| stats.input.normalize_grid(g)).collect();
    Ok(model
        .predict(&x, out_sizes)?
        .iter()
        .map(|g| stats.output.denormalize_grid(g))
        .collect())
}

pub fn train_loop(model: &mut PdIaeModel, train: &[Pair], test: &[Pair], cfg: &TrainConfig) -> Result<TrainReport> {
    train_loop_with(model, train, test, cfg, |_| {})
}

/// Adam over shuffled mini-batches with one augmentation draw per batch,
/// plateau-driven learning-rate halving and stopping. The model ends with
/// the parameters of the epoch with the lowest test error.
pub fn train_loop_with(
    model: &mut PdIaeModel,
    train: &[Pair],
    test: &[Pair],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainReport> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptySplit("train"));
    }
    if test.is_empty() {
        return Err(Error::EmptySplit("test"));
    }
    let stats = NormStats::fit(train)?;
    let data = stats.normalize_pairs(train);
    let eval_grids = if cfg.eval_grids.is_empty() {
        vec![test[0].0.sizes().to_vec()]
    } else {
        cfg.eval_grids.clone()
    };
    let modes = model.config().modes;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(model.store());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let (mut lr, mut steps, mut aborted) = (cfg.lr, 0usize, 0usize);
    let (mut best_err, mut best_epoch, mut since) = (f64::INFINITY, 0usize, 0usize);
    let mut best_store = model.store().clone();
    let mut log = Vec::new();
    let mut stop = StopReason::MaxEpochs;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut batches) = (0.0, 0usize);
        for idx in order.chunks(cfg.batch) {
            if cfg.max_steps.is_some_and(|m| steps >= m) {
                break;
            }
            let batch: Vec<Pair> = idx.iter().map(|&i| data[i].clone()).collect();
            let interp = if cfg.lambda > 0.0 {
                Some(draw_interpolators(&mut rng, &cfg.aug_grids, modes)?)
            } else {
                None
            };
            let mut tape = Tape::new();
            let loss = augmented_loss(&mut tape, model, model.store(), &batch, interp.as_ref(), cfg.lambda)?;
            let value = tape.value(loss).data()[0];
            let grads = backprop(&tape, loss, model.store())?;
            drop(tape);
            steps += 1;
            match adam_step(model.store_mut(), &grads, &mut adam, lr, &cfg.adam) {
                Ok(()) => {
                    loss_sum += value;
                    batches += 1;
                }
                Err(Error::NonFinite(_)) => aborted += 1,
                Err(e) => return Err(e),
            }
        }
        let test_err = avg_relative_error(|x, g| predict_normalized(model, &stats, x, g), test, &eval_grids)?.mean;
        let rec = EpochRecord {
            epoch,
            train_loss: if batches > 0 { loss_sum / batches as f64 } else { f64::NAN },
            test_rel_err: test_err,
            lr,
        };
        on_epoch(&rec);
        log.push(rec);
        if test_err < best_err - 1e-12 {
            best_err = test_err;
            best_epoch = epoch;
            best_store = model.store().clone();
            since = 0;
        } else {
            since += 1;
            if since >= cfg.plateau_stop {
                stop = StopReason::Plateau;
                break;
            }
            if since % cfg.plateau_halve == 0 {
                lr /= 2.0;
            }
        }
        if cfg.max_steps.is_some_and(|m| steps >= m) {
            stop = StopReason::MaxSteps;
            break;
        }
    }
    *model.store_mut() = best_store;
    Ok(TrainReport {
        log,
        stats,
        best_epoch,
        best_test_err: best_err,
        steps,
        aborted_steps: aborted,
        stop,
    })
}
