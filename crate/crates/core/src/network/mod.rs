//! The full network: a pointwise lift, `L` multi-channel blocks with dense
//! skip connections `a_i = I_i(a_{i-1}) + Σ_{j<i} A_{j,i}(a_j)`, and a
//! pointwise projection to one channel.

mod checkpoint;
mod config;

pub use checkpoint::{
    checkpoint_manifest, load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC,
};
pub use config::{BlockType, PdIaeConfig, CONFIG_KEYS};

use std::f64::consts::TAU;

use crate::baselines::{dense_block_forward, DenseBlock};
use crate::error::{Error, Result};
use crate::init::Initializer;
use crate::pd::{block_forward, check_grid, ChannelMap, PdBlock};
use crate::spectral::{grid_coords, ComplexGrid};
use crate::tensor::{ComplexArray, NodeId, ParamStore, RealArray, Tape};

#[derive(Clone, Debug)]
pub enum Block {
    Pd(PdBlock),
    Dense(DenseBlock),
}

impl Block {
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: NodeId, sizes: &[usize]) -> Result<NodeId> {
        match self {
            Block::Pd(b) => block_forward(tape, store, b, x, sizes),
            Block::Dense(b) => dense_block_forward(tape, store, b, x, sizes),
        }
    }
}

/// Skip map `A_{from,to}` from block output `from` into block input `to`.
#[derive(Clone, Debug)]
pub struct Skip {
    pub from: usize,
    pub to: usize,
    pub map: ChannelMap,
}

#[derive(Clone, Debug)]
pub struct PdIaeModel {
    config: PdIaeConfig,
    store: ParamStore,
    lift: ChannelMap,
    blocks: Vec<Block>,
    skips: Vec<Skip>,
    projection: ChannelMap,
}

/// Parameter counts by module.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamBreakdown {
    pub lift: usize,
    pub blocks: Vec<usize>,
    pub skips: usize,
    pub projection: usize,
}

impl ParamBreakdown {
    pub fn total(&self) -> usize {
        self.lift + self.blocks.iter().sum::<usize>() + self.skips + self.projection
    }

    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![format!("lift {}", self.lift)];
        for (i, b) in self.blocks.iter().enumerate() {
            out.push(format!("block{i} {b}"));
        }
        out.push(format!("skips {}", self.skips));
        out.push(format!("projection {}", self.projection));
        out.push(format!("total {}", self.total()));
        out
    }
}

/// Closed-form parameter count of a configuration.
pub fn param_count(cfg: &PdIaeConfig) -> ParamBreakdown {
    let c = cfg.width;
    let modes = cfg.modes_vec();
    let block = match cfg.block {
        BlockType::Pd => PdBlock::param_count(
            c,
            &modes,
            cfg.rank,
            &cfg.mid_hidden_widths(),
            &cfg.coord_hidden,
            &cfg.channels,
        ),
        BlockType::Dense => DenseBlock::param_count(c, &modes, &cfg.mid_hidden_widths(), &cfg.channels),
    };
    let l = cfg.blocks;
    ParamBreakdown {
        lift: ChannelMap::param_count(cfg.lift_inputs(), c, true),
        blocks: vec![block; l],
        skips: l * (l + 1) / 2 * ChannelMap::param_count(c, c, true),
        projection: ChannelMap::param_count(c, 1, true),
    }
}

impl PdIaeModel {
    /// Fresh model with parameters drawn from `config.seed`.
    pub fn new(config: PdIaeConfig) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let mut init = Initializer::new(config.seed);
        let c = config.width;
        let modes = config.modes_vec();
        let lift = ChannelMap::new(&mut store, &mut init, "lift", config.lift_inputs(), c, true);
        let mut blocks = Vec::with_capacity(config.blocks);
        let mut skips = Vec::new();
        for i in 1..=config.blocks {
            let name = format!("block{}", i - 1);
            blocks.push(match config.block {
                BlockType::Pd => Block::Pd(PdBlock::new(
                    &mut store,
                    &mut init,
                    &name,
                    c,
                    &modes,
                    config.rank,
                    &config.mid_hidden_widths(),
                    &config.coord_hidden,
                    &config.channels,
                )?),
                BlockType::Dense => Block::Dense(DenseBlock::new(
                    &mut store,
                    &mut init,
                    &name,
                    c,
                    &modes,
                    &config.mid_hidden_widths(),
                    &config.channels,
                )?),
            });
            for j in 0..i {
                let map = ChannelMap::new(&mut store, &mut init, &format!("skip{j}_{i}"), c, c, true);
                skips.push(Skip { from: j, to: i, map });
            }
        }
        let projection = ChannelMap::new(&mut store, &mut init, "projection", c, 1, true);
        Ok(Self {
            config,
            store,
            lift,
            blocks,
            skips,
            projection,
        })
    }

    pub fn config(&self) -> &PdIaeConfig {
        &self.config
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn lift(&self) -> &ChannelMap {
        &self.lift
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn skips(&self) -> &[Skip] {
        &self.skips
    }

    pub fn projection(&self) -> &ChannelMap {
        &self.projection
    }

    fn check_sizes(&self, sizes: &[usize]) -> Result<()> {
        if sizes.len() != self.config.d {
            return Err(Error::DimensionMismatch {
                expected: self.config.d,
                actual: sizes.len(),
            });
        }
        check_grid(sizes, &self.config.modes_vec())
    }

    /// Lift on the tape: `x [B, 1, N, 2]` to `[B, c, N, 2]`.
    pub fn lift_node(&self, tape: &mut Tape, store: &ParamStore, x: NodeId, sizes: &[usize]) -> Result<NodeId> {
        let input = if self.config.coord_channels {
            let batch = tape.shape(x)[0];
            let coords = grid_coords(sizes);
            let n = coords.len();
            let d = self.config.d;
            let mut data = vec![0.0; batch * 2 * d * n * 2];
            for b in 0..batch {
                for ax in 0..d {
                    for (j, p) in coords.iter().enumerate() {
                        let (s, c) = (TAU * p[ax]).sin_cos();
                        data[((b * 2 * d + 2 * ax) * n + j) * 2] = c;
                        data[((b * 2 * d + 2 * ax + 1) * n + j) * 2] = s;
                    }
                }
            }
            let extra = tape.constant(RealArray::new(vec![batch, 2 * d, n, 2], data)?);
            tape.concat(&[x, extra], 1)?
        } else {
            x
        };
        self.lift.forward(tape, store, input)
    }

    /// Full forward on the tape: `x [B, 1, N, 2]` over `sizes` to
    /// `[B, 1, N_out, 2]` over `out_sizes`.
    pub fn forward_node(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        x: NodeId,
        sizes: &[usize],
        out_sizes: &[usize],
    ) -> Result<NodeId> {
        self.check_sizes(sizes)?;
        self.check_sizes(out_sizes)?;
        let mut states = vec![self.lift_node(tape, store, x, sizes)?];
        let mut skips = self.skips.iter().peekable();
        for (i, block) in self.blocks.iter().enumerate() {
            let mut terms = vec![block.forward(tape, store, states[i], sizes)?];
            while let Some(skip) = skips.next_if(|s| s.to == i + 1) {
                terms.push(skip.map.forward(tape, store, states[skip.from])?);
            }
            states.push(tape.add_all(&terms)?);
        }
        let y = self.projection.forward(tape, store, *states.last().expect("lift state"))?;
        if out_sizes == sizes {
            return Ok(y);
        }
        let sp = tape.spec_forward(y, sizes)?;
        let sp = tape.band(sp, sizes, out_sizes)?;
        tape.spec_inverse(sp, out_sizes)
    }

    /// Evaluates a batch of equally sized inputs.
    pub fn predict(&self, inputs: &[ComplexGrid], out_sizes: &[usize]) -> Result<Vec<ComplexGrid>> {
        let Some(first) = inputs.first() else {
            return Ok(vec![]);
        };
        let sizes = first.sizes().to_vec();
        if inputs.iter().any(|g| g.sizes() != sizes.as_slice()) {
            return Err(Error::InvalidConfig("batch inputs must share one grid".into()));
        }
        let values = inputs.iter().flat_map(|g| g.values().iter().copied()).collect();
        let mut tape = Tape::new();
        let x = tape.constant(ComplexArray::new(vec![inputs.len(), 1, first.len()], values)?.to_pairs());
        let y = self.forward_node(&mut tape, &self.store, x, &sizes, out_sizes)?;
        let out = ComplexArray::from_pairs(tape.value(y))?.into_values();
        let n: usize = out_sizes.iter().product();
        out.chunks_exact(n)
            .map(|c| ComplexGrid::new(out_sizes.to_vec(), c.to_vec()))
            .collect()
    }
}

/// Output of the network for one input, on the `s_out` grid. The imaginary
/// part is kept; real-valued targets use the real part.
pub fn model_forward(f: &ComplexGrid, model: &PdIaeModel, s_out: &[usize]) -> Result<ComplexGrid> {
    Ok(model.predict(std::slice::from_ref(f), s_out)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pd::ChannelKind;
    use crate::spectral::{fft_inverse, resample, Interp, Spectrum};
    use crate::tensor::{grad_check_graph, GradCheck};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small(seed: u64) -> PdIaeConfig {
        PdIaeConfig {
            blocks: 2,
            width: 2,
            modes: 8,
            mid_hidden: Some(vec![16]),
            coord_hidden: vec![8],
            seed,
            ..PdIaeConfig::default()
        }
    }

    fn band_limited(seed: u64, s: usize) -> ComplexGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sp = Spectrum::zeros(vec![8]).unwrap();
        for k in 0..=3i64 {
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            sp.set_coeff(&[k], c).unwrap();
            sp.set_coeff(&[-k], c.conj()).unwrap();
        }
        fft_inverse(&sp, &[s]).unwrap()
    }

    #[test]
    fn count_matches_store_walk() {
        for block in [BlockType::Pd, BlockType::Dense] {
            for channels in [vec![ChannelKind::Identity], vec![ChannelKind::Identity, ChannelKind::Fourier]] {
                let cfg = PdIaeConfig {
                    block,
                    channels,
                    ..small(1)
                };
                let model = PdIaeModel::new(cfg.clone()).unwrap();
                assert_eq!(param_count(&cfg).total(), model.store().total_len());
            }
        }
    }

    #[test]
    fn hand_count_minimal() {
        // d=1, L=1, K=1, c=1, m=2, one identity channel, mid [4], coord [1].
        let cfg = PdIaeConfig {
            blocks: 1,
            rank: 1,
            modes: 2,
            width: 1,
            mid_hidden: Some(vec![4]),
            coord_hidden: vec![1],
            channels: vec![ChannelKind::Identity],
            ..PdIaeConfig::default()
        };
        // lift: 3 complex inputs -> 1 plus bias: 2*3 + 2 = 8
        // encoder P, Q: 2 * (2 modes * 1 rank * 2) = 8
        // mid 4 -> 4 -> 4: (16 + 4) + (16 + 4) = 40
        // decoder Qt: 4; coordnet 2 -> 1 -> 2: (2 + 1) + (2 + 2) = 7
        // skip 1 -> 1 with bias: 4; projection: 4
        let want = 8 + 8 + 40 + 4 + 7 + 4 + 4;
        assert_eq!(param_count(&cfg).total(), want);
        assert_eq!(PdIaeModel::new(cfg).unwrap().store().total_len(), want);
    }

    #[test]
    fn doubling_rank_adds_rank_terms() {
        let cfg = small(2);
        let doubled = PdIaeConfig { rank: 6, ..cfg.clone() };
        let diff = param_count(&doubled).total() - param_count(&cfg).total();
        // Per channel: P, Q, Qt grow by 3 * 2 * M * ΔK; the coordnet output
        // layer by (h + 1) * 2 * ΔK.
        let per_channel = 3 * 2 * 8 * 3 + (8 + 1) * 2 * 3;
        assert_eq!(diff, 2 * 2 * per_channel);
    }

    #[test]
    fn skip_structure() {
        let model = PdIaeModel::new(PdIaeConfig {
            blocks: 3,
            ..small(3)
        })
        .unwrap();
        let pairs: Vec<(usize, usize)> = model.skips().iter().map(|s| (s.from, s.to)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)]);
    }

    #[test]
    fn zero_blocks_pass_lift_bias() {
        let mut model = PdIaeModel::new(PdIaeConfig {
            blocks: 1,
            width: 1,
            channels: vec![ChannelKind::Identity],
            ..small(4)
        })
        .unwrap();
        let skip = model.skips()[0].map.clone();
        let (lift, proj) = (model.lift().clone(), model.projection().clone());
        let store = model.store_mut();
        store.zero_all();
        store.get_mut(lift.bias().unwrap()).data_mut().copy_from_slice(&[0.7, -0.2]);
        store.get_mut(skip.weight()).data_mut()[0] = 1.0;
        store.get_mut(proj.weight()).data_mut()[0] = 1.0;
        let out = model_forward(&band_limited(5, 16), &model, &[24]).unwrap();
        assert_eq!(out.len(), 24);
        assert!(out.values().iter().all(|v| (v - Complex64::new(0.7, -0.2)).norm() < 1e-12));
    }

    #[test]
    fn output_grid_and_determinism() {
        let model = PdIaeModel::new(small(6)).unwrap();
        let f = band_limited(7, 16);
        for s_out in [8, 16, 20, 33] {
            assert_eq!(model_forward(&f, &model, &[s_out]).unwrap().len(), s_out);
        }
        let a = model_forward(&f, &model, &[16]).unwrap();
        let b = model_forward(&f, &model, &[16]).unwrap();
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.re.to_bits() == y.re.to_bits()));
        assert!(model_forward(&f, &model, &[6]).is_err());
    }

    #[test]
    fn band_limited_input_agrees_across_grids() {
        let model = PdIaeModel::new(small(8)).unwrap();
        let f32 = band_limited(9, 32);
        let f64_ = band_limited(9, 64);
        let y32 = model_forward(&f32, &model, &[32]).unwrap();
        let y64 = model_forward(&f64_, &model, &[64]).unwrap();
        let shared = y64.restrict(&[32]).unwrap();
        let scale = y32.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let err = shared
            .values()
            .iter()
            .zip(y32.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-7 * scale.max(1.0), "{err}");
        // The output is not band-limited, but its tail is far below tolerance.
        let down = resample(&y64, &[32], Interp::Spectral).unwrap();
        let rel = down
            .values()
            .iter()
            .zip(y32.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / scale;
        assert!(rel <= 1e-7, "{rel}");
    }

    #[test]
    fn lift_gradient_and_translation() {
        let cfg = PdIaeConfig {
            coord_channels: false,
            ..small(10)
        };
        let model = PdIaeModel::new(cfg).unwrap();
        let f = band_limited(11, 16);
        let shifted = ComplexGrid::new(
            vec![16],
            (0..16).map(|j| f.values()[(j + 5) % 16]).collect(),
        )
        .unwrap();
        let lift = |g: &ComplexGrid| {
            let mut t = Tape::new();
            let x = t.constant(ComplexArray::new(vec![1, 1, 16], g.values().to_vec()).unwrap().to_pairs());
            let y = model.lift_node(&mut t, model.store(), x, &[16]).unwrap();
            ComplexArray::from_pairs(t.value(y)).unwrap().into_values()
        };
        let (a, b) = (lift(&f), lift(&shifted));
        for ch in 0..2 {
            for j in 0..16 {
                assert_eq!(b[ch * 16 + j], a[ch * 16 + (j + 5) % 16]);
            }
        }
        let x = ComplexArray::new(vec![1, 1, 16], f.values().to_vec()).unwrap().to_pairs();
        let r = grad_check_graph(model.store(), &GradCheck { samples: 200, ..GradCheck::default() }, |t, s| {
            let xn = t.constant(x.clone());
            let y = model.lift_node(t, s, xn, &[16])?;
            let sq = t.mul(y, y)?;
            t.sum(sq)
        })
        .unwrap();
        assert!(r.max_rel_err < 1e-4, "{r:?}");
    }
}
