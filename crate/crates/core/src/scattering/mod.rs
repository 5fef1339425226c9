//! Linearized (Born) scattering data: the forward operator and its adjoint
//! over a circular source/receiver set, a Tikhonov reconstruction oracle,
//! random point media, spectral symbol tasks, noise and dataset files.

mod born;
mod data;
mod dataset;

pub use born::{
    born_adjoint, born_forward, born_forward_with, tikhonov_reconstruct, BornOperator, Measurement, Medium,
    ScatterGeometry, TikhonovResult, CG_MAX_ITER, CG_TOL,
};
pub use data::{
    add_noise, add_noise_complex, gaussian_medium, gen_point_media, gen_symbol_task_1d, sample_rng, MediaRanges,
    SymbolFunction, SymbolKind,
};
pub use dataset::{
    gen_scatter_dataset, gen_symbol_dataset, load_dataset, measurement_csv, medium_csv, read_dataset, save_dataset,
    write_dataset, Dataset, ScatterSample, SymbolSample, DATASET_MAGIC,
};
