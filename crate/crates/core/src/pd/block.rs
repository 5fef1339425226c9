use super::{check_grid, decode, encode, ChannelMap, DecoderParams, Domain, EncoderParams, Mlp};
use crate::error::{Error, Result};
use crate::init::Initializer;
use crate::tensor::{NodeId, ParamStore, Tape};

/// Transform wrapped around a channel's encode/FNN/decode pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelKind {
    Identity,
    /// The pipeline runs on the centered spectrum of the signal.
    Fourier,
}

impl ChannelKind {
    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Identity => "identity",
            ChannelKind::Fourier => "fourier",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(ChannelKind::Identity),
            "fourier" => Ok(ChannelKind::Fourier),
            _ => Err(Error::InvalidConfig(format!("unknown channel kind `{s}`"))),
        }
    }

    fn domain(self) -> Domain {
        match self {
            ChannelKind::Identity => Domain::Spatial,
            ChannelKind::Fourier => Domain::Spectral,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PdChannel {
    pub(crate) kind: ChannelKind,
    pub(crate) enc: EncoderParams,
    pub(crate) mid: Mlp,
    pub(crate) dec: DecoderParams,
}

impl PdChannel {
    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn encoder(&self) -> &EncoderParams {
        &self.enc
    }

    pub fn mid(&self) -> &Mlp {
        &self.mid
    }

    pub fn decoder(&self) -> &DecoderParams {
        &self.dec
    }
}

/// Multi-channel block: each channel maps `[B, c, N, 2]` to the same shape,
/// and with more than one channel the results are merged pointwise.
#[derive(Clone, Debug)]
pub struct PdBlock {
    pub(crate) width: usize,
    pub(crate) channels: Vec<PdChannel>,
    pub(crate) merge: Option<ChannelMap>,
}

/// Widths of the mid network for `c` channels over `M` latent points.
pub(crate) fn mid_widths(width: usize, latent: usize, hidden: &[usize]) -> Vec<usize> {
    let io = 2 * width * latent;
    let mut w = vec![io];
    w.extend_from_slice(hidden);
    w.push(io);
    w
}

impl PdBlock {
    /// `mid_hidden` gives the hidden widths of the mid network and
    /// `coord_hidden` those of the decoder coordinate networks.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        store: &mut ParamStore,
        init: &mut Initializer,
        name: &str,
        width: usize,
        modes: &[usize],
        rank: usize,
        mid_hidden: &[usize],
        coord_hidden: &[usize],
        kinds: &[ChannelKind],
    ) -> Result<Self> {
        if kinds.is_empty() {
            return Err(Error::InvalidConfig("a block needs at least one channel".into()));
        }
        let latent: usize = modes.iter().product();
        let channels = kinds
            .iter()
            .enumerate()
            .map(|(i, &kind)| {
                let pre = format!("{name}.ch{i}");
                PdChannel {
                    kind,
                    enc: EncoderParams::new(store, init, &format!("{pre}.enc"), modes, rank),
                    mid: Mlp::new(store, init, &format!("{pre}.mid"), &mid_widths(width, latent, mid_hidden)),
                    dec: DecoderParams::new(
                        store,
                        init,
                        &format!("{pre}.dec"),
                        modes,
                        rank,
                        coord_hidden,
                        kind.domain(),
                    ),
                }
            })
            .collect();
        let merge = (kinds.len() > 1).then(|| {
            ChannelMap::near_identity(store, init, &format!("{name}.merge"), kinds.len() * width, width, 0.01)
        });
        Ok(Self {
            width,
            channels,
            merge,
        })
    }

    pub fn param_count(
        width: usize,
        modes: &[usize],
        rank: usize,
        mid_hidden: &[usize],
        coord_hidden: &[usize],
        kinds: &[ChannelKind],
    ) -> usize {
        let latent: usize = modes.iter().product();
        let per: usize = kinds
            .iter()
            .map(|k| {
                EncoderParams::param_count(modes, rank)
                    + Mlp::param_count(&mid_widths(width, latent, mid_hidden))
                    + DecoderParams::param_count(modes, rank, coord_hidden, k.domain())
            })
            .sum();
        let merge = if kinds.len() > 1 {
            ChannelMap::param_count(kinds.len() * width, width, true)
        } else {
            0
        };
        per + merge
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> &[PdChannel] {
        &self.channels
    }

    pub fn merge(&self) -> Option<&ChannelMap> {
        self.merge.as_ref()
    }

    pub fn modes(&self) -> &[usize] {
        self.channels[0].enc.modes()
    }
}

fn channel_forward(
    tape: &mut Tape,
    store: &ParamStore,
    ch: &PdChannel,
    x: NodeId,
    sizes: &[usize],
) -> Result<NodeId> {
    match ch.kind {
        ChannelKind::Identity => {
            let v = encode(tape, store, x, sizes, &ch.enc, Domain::Spatial)?;
            let u = ch.mid.forward_rows(tape, store, v)?;
            decode(tape, store, u, sizes, &ch.dec, Domain::Spatial)
        }
        ChannelKind::Fourier => {
            let spectrum = tape.spec_forward(x, sizes)?;
            let v = encode(tape, store, spectrum, sizes, &ch.enc, Domain::Spectral)?;
            let u = ch.mid.forward_rows(tape, store, v)?;
            let out = decode(tape, store, u, sizes, &ch.dec, Domain::Spectral)?;
            tape.spec_inverse(out, sizes)
        }
    }
}

/// Block on the tape: `x` is `[B, c, N, 2]` over a grid of `sizes`.
pub fn block_forward(
    tape: &mut Tape,
    store: &ParamStore,
    blk: &PdBlock,
    x: NodeId,
    sizes: &[usize],
) -> Result<NodeId> {
    check_grid(sizes, blk.modes())?;
    let outs = blk
        .channels
        .iter()
        .map(|ch| channel_forward(tape, store, ch, x, sizes))
        .collect::<Result<Vec<_>>>()?;
    match &blk.merge {
        None => Ok(outs[0]),
        Some(merge) => {
            let cat = tape.concat(&outs, 1)?;
            merge.forward(tape, store, cat)
        }
    }
}
