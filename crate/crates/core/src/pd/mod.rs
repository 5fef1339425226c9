//! Pseudo-differential integral autoencoder blocks.
//!
//! The encoder applies a low-rank symbol to the truncated spectrum of its
//! input, `v = Σ_k q_k ∘ F⁻¹(p_k ∘ trunc_m(F a))`, so its output lives on a
//! fixed `m^d` latent grid whatever the input resolution. The decoder
//! mirrors it: `b(x) = Σ_k p̃_k(x) · F⁻¹(pad_s(q̃_k ∘ F u))(x)`, with the
//! spatial basis `p̃` given by a coordinate network so that any output grid
//! can be served. Both cost `O(K s log s)`.

mod block;
mod codec;
mod coordnet;

pub use block::{block_forward, ChannelKind, PdBlock, PdChannel};
pub(crate) use block::mid_widths;
pub use codec::{decode, encode, pd_decode, pd_encode, DecoderParams, Domain, EncoderParams};
pub use coordnet::{coordnet_eval, CoordEmbedding, CoordNet};

use crate::error::{Error, Result};
use crate::init::Initializer;
use crate::tensor::{NodeId, ParamId, ParamStore, RealArray, Tape};

/// Fully connected layers with tanh between them and a linear last layer.
#[derive(Clone, Debug)]
pub struct Mlp {
    widths: Vec<usize>,
    layers: Vec<(ParamId, ParamId)>,
}

impl Mlp {
    pub fn new(store: &mut ParamStore, init: &mut Initializer, name: &str, widths: &[usize]) -> Self {
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let wt = store.add(format!("{name}.w{i}"), init.fan_in(vec![w[0], w[1]], w[0]), false);
                let b = store.add(format!("{name}.b{i}"), init.fan_in(vec![w[1]], w[0]), false);
                (wt, b)
            })
            .collect();
        Self {
            widths: widths.to_vec(),
            layers,
        }
    }

    pub fn param_count(widths: &[usize]) -> usize {
        widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn layers(&self) -> &[(ParamId, ParamId)] {
        &self.layers
    }

    /// `x` is `[n, widths[0]]`.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: NodeId) -> Result<NodeId> {
        let mut h = x;
        for (i, &(w, b)) in self.layers.iter().enumerate() {
            let wn = tape.param(store, w);
            let bn = tape.param(store, b);
            h = tape.matmul(h, wn)?;
            h = tape.add_suffix(h, bn)?;
            if i + 1 < self.layers.len() {
                h = tape.tanh(h)?;
            }
        }
        Ok(h)
    }

    /// Applies the network to each latent `[B, ...]` flattened as one row.
    pub fn forward_rows(&self, tape: &mut Tape, store: &ParamStore, x: NodeId) -> Result<NodeId> {
        let shape = tape.shape(x).to_vec();
        let rows = shape[0];
        let width: usize = shape[1..].iter().product();
        if width != self.widths[0] || *self.widths.last().unwrap() != width {
            return Err(Error::ShapeMismatch {
                op: "mlp",
                left: shape,
                right: vec![self.widths[0], *self.widths.last().unwrap()],
            });
        }
        let flat = tape.reshape(x, vec![rows, width])?;
        let y = self.forward(tape, store, flat)?;
        tape.reshape(y, shape)
    }
}

/// Pointwise complex linear map across channels, with optional bias.
#[derive(Clone, Debug)]
pub struct ChannelMap {
    pub(crate) weight: ParamId,
    pub(crate) bias: Option<ParamId>,
    c_in: usize,
    c_out: usize,
}

impl ChannelMap {
    pub fn new(
        store: &mut ParamStore,
        init: &mut Initializer,
        name: &str,
        c_in: usize,
        c_out: usize,
        bias: bool,
    ) -> Self {
        let weight = store.add(format!("{name}.w"), init.fan_in(vec![c_out, c_in, 2], c_in), true);
        let bias = bias.then(|| store.add(format!("{name}.b"), RealArray::zeros(vec![c_out, 2]), true));
        Self {
            weight,
            bias,
            c_in,
            c_out,
        }
    }

    /// Identity on the first `c_out` inputs plus `U(-noise, noise)` entries.
    pub fn near_identity(
        store: &mut ParamStore,
        init: &mut Initializer,
        name: &str,
        c_in: usize,
        c_out: usize,
        noise: f64,
    ) -> Self {
        let mut w = init.uniform(vec![c_out, c_in, 2], noise);
        for o in 0..c_out.min(c_in) {
            w.data_mut()[(o * c_in + o) * 2] += 1.0;
        }
        let weight = store.add(format!("{name}.w"), w, true);
        let bias = Some(store.add(format!("{name}.b"), RealArray::zeros(vec![c_out, 2]), true));
        Self {
            weight,
            bias,
            c_in,
            c_out,
        }
    }

    pub fn param_count(c_in: usize, c_out: usize, bias: bool) -> usize {
        2 * c_in * c_out + if bias { 2 * c_out } else { 0 }
    }

    pub fn c_in(&self) -> usize {
        self.c_in
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    pub fn weight(&self) -> ParamId {
        self.weight
    }

    pub fn bias(&self) -> Option<ParamId> {
        self.bias
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: NodeId) -> Result<NodeId> {
        let w = tape.param(store, self.weight);
        let y = tape.channel_mix(x, w)?;
        match self.bias {
            Some(b) => {
                let bn = tape.param(store, b);
                tape.channel_bias(y, bn)
            }
            None => Ok(y),
        }
    }
}

pub(crate) fn check_grid(sizes: &[usize], modes: &[usize]) -> Result<()> {
    if sizes.len() != modes.len() {
        return Err(Error::DimensionMismatch {
            expected: modes.len(),
            actual: sizes.len(),
        });
    }
    if sizes.iter().zip(modes).any(|(s, m)| s < m) {
        return Err(Error::GridTooSmall {
            sizes: sizes.to_vec(),
            required: modes.to_vec(),
        });
    }
    Ok(())
}

/// Column `k` of a `[n, K, 2]` node as `[n, 2]`.
pub(crate) fn rank_column(tape: &mut Tape, x: NodeId, k: usize) -> Result<NodeId> {
    let n = tape.shape(x)[0];
    let col = tape.slice(x, 1, k, 1)?;
    tape.reshape(col, vec![n, 2])
}
