//! Comparison blocks: a dense integral autoencoder whose kernels are small
//! networks evaluated at every (grid point, latent point) pair, and a
//! Fourier-layer style spectral convolution.

mod bench;
mod dense;
mod fno;

pub use bench::{bench_block, bench_csv, BenchRow, BenchSetup, BlockKind};
pub use dense::{
    dense_block_forward, dense_decode_node, dense_encode_node, dense_iae_decode, dense_iae_encode, DenseBlock,
    DenseChannel, DenseIaeParams, KernelNet,
};
pub use fno::{spectral_conv_forward, spectral_conv_node, SpectralConv};
