use std::f64::consts::TAU;

use num_complex::Complex64;

use super::Mlp;
use crate::error::{Error, Result};
use crate::init::Initializer;
use crate::tensor::{ComplexArray, NodeId, ParamStore, RealArray, Tape};

/// How coordinates enter the first layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordEmbedding {
    /// `(cos 2πx, sin 2πx)` per axis: smooth on the periodic grid, so the
    /// basis functions do not alias differently on different grids.
    Periodic,
    /// Raw coordinates (used for scaled frequencies in `[-1, 1)`).
    Linear,
}

impl CoordEmbedding {
    pub fn width(self, dim: usize) -> usize {
        match self {
            CoordEmbedding::Periodic => 2 * dim,
            CoordEmbedding::Linear => dim,
        }
    }
}

/// Coordinate network producing `K` complex basis values per point.
#[derive(Clone, Debug)]
pub struct CoordNet {
    dim: usize,
    rank: usize,
    embedding: CoordEmbedding,
    mlp: Mlp,
}

impl CoordNet {
    pub fn new(
        store: &mut ParamStore,
        init: &mut Initializer,
        name: &str,
        dim: usize,
        hidden: &[usize],
        rank: usize,
        embedding: CoordEmbedding,
    ) -> Self {
        let widths = Self::widths(dim, hidden, rank, embedding);
        Self {
            dim,
            rank,
            embedding,
            mlp: Mlp::new(store, init, name, &widths),
        }
    }

    fn widths(dim: usize, hidden: &[usize], rank: usize, embedding: CoordEmbedding) -> Vec<usize> {
        let mut w = vec![embedding.width(dim)];
        w.extend_from_slice(hidden);
        w.push(2 * rank);
        w
    }

    pub fn param_count(dim: usize, hidden: &[usize], rank: usize, embedding: CoordEmbedding) -> usize {
        Mlp::param_count(&Self::widths(dim, hidden, rank, embedding))
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embedding(&self) -> CoordEmbedding {
        self.embedding
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn features(&self, coords: &[Vec<f64>]) -> Result<RealArray> {
        let width = self.embedding.width(self.dim);
        let mut data = Vec::with_capacity(coords.len() * width);
        for x in coords {
            if x.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    actual: x.len(),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("coordinate".into()));
            }
            match self.embedding {
                CoordEmbedding::Periodic => {
                    for &v in x {
                        data.push((TAU * v).cos());
                        data.push((TAU * v).sin());
                    }
                }
                CoordEmbedding::Linear => data.extend_from_slice(x),
            }
        }
        Ok(RealArray::from_parts(vec![coords.len(), width], data))
    }

    /// `[n, K, 2]` node of basis values at `coords`.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, coords: &[Vec<f64>]) -> Result<NodeId> {
        let feats = tape.constant(self.features(coords)?);
        let out = self.mlp.forward(tape, store, feats)?;
        tape.reshape(out, vec![coords.len(), self.rank, 2])
    }
}

/// Basis values `[n, K]` at each coordinate.
pub fn coordnet_eval(net: &CoordNet, store: &ParamStore, coords: &[Vec<f64>]) -> Result<ComplexArray> {
    let mut tape = Tape::new();
    let out = net.forward(&mut tape, store, coords)?;
    let data = tape.value(out).data();
    let values = data
        .chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect();
    ComplexArray::new(vec![coords.len(), net.rank], values)
}
