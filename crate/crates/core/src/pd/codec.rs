use super::{check_grid, rank_column, CoordEmbedding, CoordNet};
use crate::error::{Error, Result};
use crate::init::Initializer;
use crate::spectral::{band_wavenumbers, grid_coords, ComplexGrid};
use crate::tensor::{ComplexArray, NodeId, ParamId, ParamStore, Tape};

/// Whether a signal entering or leaving a codec is a grid of samples or an
/// already-transformed centered spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Spatial,
    Spectral,
}

/// Low-rank symbol factors: `p` acts on frequencies, `q` on the latent grid.
/// Both are `[M, K, 2]` with `M = m^d`.
#[derive(Clone, Debug)]
pub struct EncoderParams {
    pub(crate) modes: Vec<usize>,
    pub(crate) rank: usize,
    pub(crate) p: ParamId,
    pub(crate) q: ParamId,
}

impl EncoderParams {
    pub fn new(store: &mut ParamStore, init: &mut Initializer, name: &str, modes: &[usize], rank: usize) -> Self {
        let m: usize = modes.iter().product();
        let p = store.add(format!("{name}.p"), init.fan_in(vec![m, rank, 2], rank), true);
        let q = store.add(format!("{name}.q"), init.fan_in(vec![m, rank, 2], rank), true);
        Self {
            modes: modes.to_vec(),
            rank,
            p,
            q,
        }
    }

    pub fn param_count(modes: &[usize], rank: usize) -> usize {
        2 * 2 * modes.iter().product::<usize>() * rank
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn p(&self) -> ParamId {
        self.p
    }

    pub fn q(&self) -> ParamId {
        self.q
    }
}

/// Decoder factors: `qt` is a fixed `[M, K, 2]` frequency multiplier, `pt`
/// a coordinate network evaluated wherever output is requested.
#[derive(Clone, Debug)]
pub struct DecoderParams {
    pub(crate) modes: Vec<usize>,
    pub(crate) rank: usize,
    pub(crate) qt: ParamId,
    pub(crate) pt: CoordNet,
}

impl DecoderParams {
    pub fn new(
        store: &mut ParamStore,
        init: &mut Initializer,
        name: &str,
        modes: &[usize],
        rank: usize,
        hidden: &[usize],
        domain: Domain,
    ) -> Self {
        let m: usize = modes.iter().product();
        let qt = store.add(format!("{name}.qt"), init.fan_in(vec![m, rank, 2], rank), true);
        let pt = CoordNet::new(
            store,
            init,
            &format!("{name}.pt"),
            modes.len(),
            hidden,
            rank,
            Self::embedding(domain),
        );
        Self {
            modes: modes.to_vec(),
            rank,
            qt,
            pt,
        }
    }

    fn embedding(domain: Domain) -> CoordEmbedding {
        match domain {
            Domain::Spatial => CoordEmbedding::Periodic,
            Domain::Spectral => CoordEmbedding::Linear,
        }
    }

    pub fn param_count(modes: &[usize], rank: usize, hidden: &[usize], domain: Domain) -> usize {
        2 * modes.iter().product::<usize>() * rank
            + CoordNet::param_count(modes.len(), hidden, rank, Self::embedding(domain))
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn qt(&self) -> ParamId {
        self.qt
    }

    pub fn pt(&self) -> &CoordNet {
        &self.pt
    }
}

/// Encoder on the tape. `a` is `[B, c, N, 2]` over a grid (or centered
/// spectrum) of `sizes`; the result is `[B, c, M, 2]` on the latent grid.
pub fn encode(
    tape: &mut Tape,
    store: &ParamStore,
    a: NodeId,
    sizes: &[usize],
    enc: &EncoderParams,
    domain: Domain,
) -> Result<NodeId> {
    check_grid(sizes, &enc.modes)?;
    let spectrum = match domain {
        Domain::Spatial => tape.spec_forward(a, sizes)?,
        Domain::Spectral => a,
    };
    let band = tape.band(spectrum, sizes, &enc.modes)?;
    let p = tape.param(store, enc.p);
    let q = tape.param(store, enc.q);
    let mut terms = Vec::with_capacity(enc.rank);
    for k in 0..enc.rank {
        let pk = rank_column(tape, p, k)?;
        let weighted = tape.cmul_suffix(band, pk)?;
        let w = tape.spec_inverse(weighted, &enc.modes)?;
        let qk = rank_column(tape, q, k)?;
        terms.push(tape.cmul_suffix(w, qk)?);
    }
    tape.add_all(&terms)
}

/// Decoder on the tape. `u` is `[B, c, M, 2]`; the result is `[B, c, N, 2]`,
/// samples on the `sizes` grid for `Domain::Spatial` or a centered spectrum
/// with `sizes` modes for `Domain::Spectral`.
pub fn decode(
    tape: &mut Tape,
    store: &ParamStore,
    u: NodeId,
    sizes: &[usize],
    dec: &DecoderParams,
    domain: Domain,
) -> Result<NodeId> {
    check_grid(sizes, &dec.modes)?;
    let u_hat = tape.spec_forward(u, &dec.modes)?;
    let qt = tape.param(store, dec.qt);
    match domain {
        Domain::Spatial => {
            let basis = dec.pt.forward(tape, store, &grid_coords(sizes))?;
            let mut terms = Vec::with_capacity(dec.rank);
            for k in 0..dec.rank {
                let qk = rank_column(tape, qt, k)?;
                let z = tape.cmul_suffix(u_hat, qk)?;
                let z = tape.band(z, &dec.modes, sizes)?;
                let g = tape.spec_inverse(z, sizes)?;
                let pk = rank_column(tape, basis, k)?;
                terms.push(tape.cmul_suffix(g, pk)?);
            }
            tape.add_all(&terms)
        }
        Domain::Spectral => {
            // Outside the band the padded spectrum is zero, so p̃ only needs
            // values at the retained (scaled) wavenumbers.
            let coords: Vec<Vec<f64>> = band_wavenumbers(&dec.modes)
                .into_iter()
                .map(|k| {
                    k.iter()
                        .zip(&dec.modes)
                        .map(|(&kk, &m)| kk as f64 / (m / 2).max(1) as f64)
                        .collect()
                })
                .collect();
            let basis = dec.pt.forward(tape, store, &coords)?;
            let mut symbol = Vec::with_capacity(dec.rank);
            for k in 0..dec.rank {
                let qk = rank_column(tape, qt, k)?;
                let pk = rank_column(tape, basis, k)?;
                symbol.push(tape.cmul(qk, pk)?);
            }
            let symbol = tape.add_all(&symbol)?;
            let z = tape.cmul_suffix(u_hat, symbol)?;
            tape.band(z, &dec.modes, sizes)
        }
    }
}

fn grid_node(tape: &mut Tape, a: &ComplexGrid) -> NodeId {
    let arr = ComplexArray::new(vec![1, 1, a.len()], a.values().to_vec())
        .expect("grid length is consistent")
        .to_pairs();
    tape.constant(arr)
}

/// Encodes one spatial signal to its latent (shape `m^d`).
pub fn pd_encode(a: &ComplexGrid, enc: &EncoderParams, store: &ParamStore) -> Result<ComplexArray> {
    if a.dim() != enc.modes.len() {
        return Err(Error::DimensionMismatch {
            expected: enc.modes.len(),
            actual: a.dim(),
        });
    }
    let mut tape = Tape::new();
    let x = grid_node(&mut tape, a);
    let v = encode(&mut tape, store, x, a.sizes(), enc, Domain::Spatial)?;
    let out = ComplexArray::from_pairs(tape.value(v))?;
    ComplexArray::new(enc.modes.clone(), out.into_values())
}

/// Decodes a latent onto a spatial grid of `sizes`.
pub fn pd_decode(u: &ComplexArray, dec: &DecoderParams, store: &ParamStore, sizes: &[usize]) -> Result<ComplexGrid> {
    let m: usize = dec.modes.iter().product();
    if u.values().len() != m {
        return Err(Error::BadLength {
            shape: dec.modes.clone(),
            expected: m,
            actual: u.values().len(),
        });
    }
    let mut tape = Tape::new();
    let un = tape.constant(ComplexArray::new(vec![1, 1, m], u.values().to_vec())?.to_pairs());
    let b = decode(&mut tape, store, un, sizes, dec, Domain::Spatial)?;
    ComplexGrid::new(sizes.to_vec(), ComplexArray::from_pairs(tape.value(b))?.into_values())
}
