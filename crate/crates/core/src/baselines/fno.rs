use crate::error::Result;
use crate::init::Initializer;
use crate::pd::{check_grid, ChannelMap};
use crate::spectral::ComplexGrid;
use crate::tensor::{ComplexArray, NodeId, ParamId, ParamStore, Tape};

/// Spectral convolution: per-mode channel mixing of the retained band plus a
/// pointwise bypass, optionally followed by tanh.
#[derive(Clone, Debug)]
pub struct SpectralConv {
    pub(crate) modes: Vec<usize>,
    pub(crate) width: usize,
    pub(crate) weights: ParamId,
    pub(crate) bypass: ChannelMap,
    pub(crate) activation: bool,
}

impl SpectralConv {
    pub fn new(
        store: &mut ParamStore,
        init: &mut Initializer,
        name: &str,
        width: usize,
        modes: &[usize],
        activation: bool,
    ) -> Self {
        let m: usize = modes.iter().product();
        let weights = store.add(format!("{name}.w"), init.fan_in(vec![m, width, width, 2], width), true);
        Self {
            modes: modes.to_vec(),
            width,
            weights,
            bypass: ChannelMap::new(store, init, &format!("{name}.bypass"), width, width, true),
            activation,
        }
    }

    pub fn param_count(width: usize, modes: &[usize]) -> usize {
        2 * modes.iter().product::<usize>() * width * width + ChannelMap::param_count(width, width, true)
    }

    pub fn weights(&self) -> ParamId {
        self.weights
    }

    pub fn bypass(&self) -> &ChannelMap {
        &self.bypass
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

/// `x` is `[B, c, N, 2]` over a grid of `sizes`.
pub fn spectral_conv_node(
    tape: &mut Tape,
    store: &ParamStore,
    p: &SpectralConv,
    x: NodeId,
    sizes: &[usize],
) -> Result<NodeId> {
    check_grid(sizes, &p.modes)?;
    let sp = tape.spec_forward(x, sizes)?;
    let band = tape.band(sp, sizes, &p.modes)?;
    let w = tape.param(store, p.weights);
    let mixed = tape.mode_mix(band, w)?;
    let padded = tape.band(mixed, &p.modes, sizes)?;
    let y = tape.spec_inverse(padded, sizes)?;
    let skip = p.bypass.forward(tape, store, x)?;
    let y = tape.add(y, skip)?;
    if p.activation {
        tape.tanh(y)
    } else {
        Ok(y)
    }
}

/// Applies the block to `c` grids of equal size.
pub fn spectral_conv_forward(a: &[ComplexGrid], p: &SpectralConv, store: &ParamStore) -> Result<Vec<ComplexGrid>> {
    let sizes = a[0].sizes().to_vec();
    let n = a[0].len();
    let values = a.iter().flat_map(|g| g.values().iter().copied()).collect();
    let mut tape = Tape::new();
    let x = tape.constant(ComplexArray::new(vec![1, a.len(), n], values)?.to_pairs());
    let y = spectral_conv_node(&mut tape, store, p, x, &sizes)?;
    let out = ComplexArray::from_pairs(tape.value(y))?.into_values();
    out.chunks_exact(n)
        .map(|c| ComplexGrid::new(sizes.clone(), c.to_vec()))
        .collect()
}
