use rand::Rng;

use crate::error::{Error, Result};
use crate::network::PdIaeModel;
use crate::spectral::{resample, ComplexGrid, Interp};
use crate::tensor::{ComplexArray, NodeId, ParamStore, RealArray, Tape};

/// Grid pair for one augmentation draw: inputs are resampled to `input`,
/// targets to `output`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interpolators {
    pub input: Vec<usize>,
    pub output: Vec<usize>,
    pub method: Interp,
}

/// Draws input and output grids uniformly from `grids`, redrawing any grid
/// with an axis below `modes`.
pub fn draw_interpolators(rng: &mut impl Rng, grids: &[Vec<usize>], modes: usize) -> Result<Interpolators> {
    if !grids.iter().any(|g| g.iter().all(|&n| n >= modes)) {
        return Err(Error::InvalidConfig(format!(
            "augmentation grids {grids:?} all fall below m={modes}"
        )));
    }
    let mut draw = || loop {
        let g = &grids[rng.random_range(0..grids.len())];
        if g.iter().all(|&n| n >= modes) {
            return g.clone();
        }
    };
    Ok(Interpolators {
        input: draw(),
        output: draw(),
        method: Interp::Spectral,
    })
}

fn shared_sizes<'a>(grids: impl IntoIterator<Item = &'a ComplexGrid>) -> Result<Vec<usize>> {
    let mut it = grids.into_iter();
    let first = it.next().ok_or(Error::EmptySplit("batch"))?.sizes().to_vec();
    if it.any(|g| g.sizes() != first.as_slice()) {
        return Err(Error::InvalidConfig("batch members must share one grid".into()));
    }
    Ok(first)
}

/// Stacks equally sized grids into a `[B, 1, N, 2]` constant.
pub fn batch_constant(tape: &mut Tape, grids: &[&ComplexGrid]) -> Result<NodeId> {
    let n = shared_sizes(grids.iter().copied())?.iter().product::<usize>();
    let values = grids.iter().flat_map(|g| g.values().iter().copied()).collect();
    Ok(tape.constant(ComplexArray::new(vec![grids.len(), 1, n], values)?.to_pairs()))
}

/// Mean squared error between the real part of `out [B, 1, N, 2]` and the
/// real part of the targets.
fn mse_real(tape: &mut Tape, out: NodeId, targets: &[&ComplexGrid]) -> Result<NodeId> {
    let shape = tape.shape(out).to_vec();
    let re = tape.slice(out, 3, 0, 1)?;
    let data: Vec<f64> = targets.iter().flat_map(|g| g.re()).collect();
    let count = data.len();
    let t = tape.constant(RealArray::new(vec![shape[0], shape[1], shape[2], 1], data)?);
    let diff = tape.sub(re, t)?;
    let sq = tape.mul(diff, diff)?;
    let total = tape.sum(sq)?;
    tape.scale(total, 1.0 / count as f64)
}

fn pair_loss(
    tape: &mut Tape,
    model: &PdIaeModel,
    store: &ParamStore,
    inputs: &[&ComplexGrid],
    targets: &[&ComplexGrid],
) -> Result<NodeId> {
    let sizes = shared_sizes(inputs.iter().copied())?;
    let out_sizes = shared_sizes(targets.iter().copied())?;
    let x = batch_constant(tape, inputs)?;
    let y = model.forward_node(tape, store, x, &sizes, &out_sizes)?;
    mse_real(tape, y, targets)
}

/// MSE on the batch plus `lambda` times the MSE on the batch resampled by
/// `interp`. With `lambda == 0` the resampled term is not built.
pub fn augmented_loss(
    tape: &mut Tape,
    model: &PdIaeModel,
    store: &ParamStore,
    batch: &[(ComplexGrid, ComplexGrid)],
    interp: Option<&Interpolators>,
    lambda: f64,
) -> Result<NodeId> {
    if batch.is_empty() {
        return Err(Error::EmptySplit("batch"));
    }
    let inputs: Vec<&ComplexGrid> = batch.iter().map(|p| &p.0).collect();
    let targets: Vec<&ComplexGrid> = batch.iter().map(|p| &p.1).collect();
    let plain = pair_loss(tape, model, store, &inputs, &targets)?;
    let Some(interp) = interp.filter(|_| lambda != 0.0) else {
        return Ok(plain);
    };
    let rin = inputs
        .iter()
        .map(|g| resample(g, &interp.input, interp.method))
        .collect::<Result<Vec<_>>>()?;
    let rout = targets
        .iter()
        .map(|g| resample(g, &interp.output, interp.method))
        .collect::<Result<Vec<_>>>()?;
    let aug = pair_loss(tape, model, store, &rin.iter().collect::<Vec<_>>(), &rout.iter().collect::<Vec<_>>())?;
    let aug = tape.scale(aug, lambda)?;
    tape.add(plain, aug)
}
