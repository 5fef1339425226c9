use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;

use super::{dense_block_forward, spectral_conv_node, DenseBlock, SpectralConv};
use crate::error::{Error, Result};
use crate::init::Initializer;
use crate::pd::{block_forward, ChannelKind, PdBlock};
use crate::tensor::{ComplexArray, ParamStore, Tape};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Pd,
    Dense,
    Fno,
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockKind::Pd => "pd",
            BlockKind::Dense => "dense",
            BlockKind::Fno => "fno",
        })
    }
}

impl FromStr for BlockKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pd" => Ok(BlockKind::Pd),
            "dense" => Ok(BlockKind::Dense),
            "fno" => Ok(BlockKind::Fno),
            other => Err(Error::InvalidConfig(format!("unknown block kind `{other}` (expected pd|dense|fno)"))),
        }
    }
}

/// Shape of the timed block (1D).
#[derive(Clone, Debug)]
pub struct BenchSetup {
    pub width: usize,
    pub modes: usize,
    pub rank: usize,
    pub channels: Vec<ChannelKind>,
    pub seed: u64,
}

impl Default for BenchSetup {
    fn default() -> Self {
        Self {
            width: 1,
            modes: 12,
            rank: 3,
            channels: vec![ChannelKind::Identity],
            seed: 1729,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub kind: BlockKind,
    pub s: usize,
    pub median_ns: u128,
}

/// Median forward time of one block at every size.
pub fn bench_block(kind: BlockKind, sizes: &[usize], repeats: usize, setup: &BenchSetup) -> Result<Vec<BenchRow>> {
    if sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig("bench sizes must be sorted ascending".into()));
    }
    let mut store = ParamStore::new();
    let mut init = Initializer::new(setup.seed);
    let modes = [setup.modes];
    let io = 2 * setup.width * setup.modes;
    let block: Box<dyn Fn(&mut Tape, &ParamStore, crate::tensor::NodeId, &[usize]) -> Result<crate::tensor::NodeId>> =
        match kind {
            BlockKind::Pd => {
                let b = PdBlock::new(
                    &mut store,
                    &mut init,
                    "pd",
                    setup.width,
                    &modes,
                    setup.rank,
                    &[io, io],
                    &[32, 32],
                    &setup.channels,
                )?;
                Box::new(move |t, s, x, sz| block_forward(t, s, &b, x, sz))
            }
            BlockKind::Dense => {
                let b = DenseBlock::new(&mut store, &mut init, "dense", setup.width, &modes, &[io, io], &setup.channels)?;
                Box::new(move |t, s, x, sz| dense_block_forward(t, s, &b, x, sz))
            }
            BlockKind::Fno => {
                let b = SpectralConv::new(&mut store, &mut init, "fno", setup.width, &modes, true);
                Box::new(move |t, s, x, sz| spectral_conv_node(t, s, &b, x, sz))
            }
        };
    let mut rows = Vec::with_capacity(sizes.len());
    for &s in sizes {
        let values: Vec<Complex64> = (0..setup.width * s)
            .map(|j| {
                let x = (j % s) as f64 / s as f64;
                Complex64::new((std::f64::consts::TAU * x).sin(), 0.0)
            })
            .collect();
        let input = ComplexArray::new(vec![1, setup.width, s], values)?.to_pairs();
        let mut times = Vec::with_capacity(repeats.max(1));
        for _ in 0..repeats.max(1) {
            let mut tape = Tape::new();
            let start = Instant::now();
            let x = tape.constant(input.clone());
            let y = block(&mut tape, &store, x, &[s])?;
            std::hint::black_box(tape.value(y));
            times.push(start.elapsed().as_nanos());
        }
        times.sort_unstable();
        rows.push(BenchRow {
            kind,
            s,
            median_ns: times[times.len() / 2],
        });
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("kind,s,median_ns\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.kind, r.s, r.median_ns));
    }
    out
}
