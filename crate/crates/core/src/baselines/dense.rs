use std::rc::Rc;

use crate::pd::{check_grid, mid_widths, ChannelKind, ChannelMap, Mlp};
use crate::error::{Error, Result};
use crate::init::Initializer;
use crate::spectral::{grid_coords, ComplexGrid};
use crate::tensor::{ComplexArray, CustomOp, NodeId, ParamStore, RealArray, Tape};

const KERNEL_HIDDEN: usize = 32;

/// Kernel network `φ(value, x, z)` with two tanh hidden layers and a complex
/// output, `(2 + 2d) → 32 → 32 → 2`.
#[derive(Clone, Debug)]
pub struct KernelNet {
    mlp: Mlp,
    dim: usize,
}

impl KernelNet {
    pub fn new(store: &mut ParamStore, init: &mut Initializer, name: &str, dim: usize) -> Self {
        Self {
            mlp: Mlp::new(store, init, name, &Self::widths(dim)),
            dim,
        }
    }

    fn widths(dim: usize) -> [usize; 4] {
        [2 + 2 * dim, KERNEL_HIDDEN, KERNEL_HIDDEN, 2]
    }

    pub fn param_count(dim: usize) -> usize {
        Mlp::param_count(&Self::widths(dim))
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }
}

/// Quadrature `out(t) = w Σ_j φ(in_j, x, z) in_j` over source points `j`,
/// with `(x, z)` the (grid, latent) coordinates of the pair.
struct KernelIntegral {
    src: Vec<Vec<f64>>,
    dst: Vec<Vec<f64>>,
    /// The source points are the grid (encoder); otherwise the latent.
    src_is_grid: bool,
    weight: f64,
}

/// Borrowed weights of the three kernel layers.
struct Layers<'a> {
    w0: &'a [f64],
    b0: &'a [f64],
    w1: &'a [f64],
    b1: &'a [f64],
    w2: &'a [f64],
    b2: &'a [f64],
    n_in: usize,
}

const H: usize = KERNEL_HIDDEN;

impl KernelIntegral {
    /// Coordinate part of the first pre-activation, per source and per target.
    fn coord_terms(&self, l: &Layers) -> (Vec<[f64; H]>, Vec<[f64; H]>) {
        let d = self.src.first().map_or(0, |c| c.len());
        let part = |pts: &[Vec<f64>], first_row: usize| -> Vec<[f64; H]> {
            pts.iter()
                .map(|p| {
                    let mut acc = [0.0; H];
                    for (a, &v) in p.iter().enumerate() {
                        let row = &l.w0[(first_row + a) * H..(first_row + a + 1) * H];
                        for h in 0..H {
                            acc[h] += v * row[h];
                        }
                    }
                    acc
                })
                .collect()
        };
        // Feature layout: (re, im, grid coords, latent coords).
        let (src_row, dst_row) = if self.src_is_grid { (2, 2 + d) } else { (2 + d, 2) };
        (part(&self.src, src_row), part(&self.dst, dst_row))
    }

    fn hidden(l: &Layers, a: [f64; 2], cs: &[f64; H], ct: &[f64; H], h1: &mut [f64; H], h2: &mut [f64; H]) {
        for h in 0..H {
            h1[h] = (l.b0[h] + a[0] * l.w0[h] + a[1] * l.w0[H + h] + cs[h] + ct[h]).tanh();
        }
        h2.copy_from_slice(&l.b1[..H]);
        for (i, &x) in h1.iter().enumerate() {
            let row = &l.w1[i * H..(i + 1) * H];
            for h in 0..H {
                h2[h] += x * row[h];
            }
        }
        for v in h2.iter_mut() {
            *v = v.tanh();
        }
    }

    fn output(l: &Layers, h2: &[f64; H]) -> [f64; 2] {
        let mut o = [l.b2[0], l.b2[1]];
        for (i, &x) in h2.iter().enumerate() {
            o[0] += x * l.w2[2 * i];
            o[1] += x * l.w2[2 * i + 1];
        }
        o
    }

    fn layers<'a>(inputs: &[&'a RealArray]) -> Layers<'a> {
        Layers {
            w0: inputs[1].data(),
            b0: inputs[2].data(),
            w1: inputs[3].data(),
            b1: inputs[4].data(),
            w2: inputs[5].data(),
            b2: inputs[6].data(),
            n_in: inputs[1].shape()[0],
        }
    }

    fn check(&self, inputs: &[&RealArray]) -> Result<(usize, usize)> {
        let x = inputs[0];
        let s = x.shape();
        if s.len() != 4 || s[2] != self.src.len() || s[3] != 2 {
            return Err(Error::ShapeMismatch {
                op: "kernel_integral",
                left: s.to_vec(),
                right: vec![self.src.len(), 2],
            });
        }
        if inputs[1].shape() != [2 + 2 * self.src[0].len(), H] {
            return Err(Error::ShapeMismatch {
                op: "kernel_integral",
                left: inputs[1].shape().to_vec(),
                right: vec![2 + 2 * self.src[0].len(), H],
            });
        }
        Ok((s[0] * s[1], s[2]))
    }
}

impl CustomOp for KernelIntegral {
    fn name(&self) -> &'static str {
        "kernel_integral"
    }

    fn forward(&self, inputs: &[&RealArray]) -> Result<RealArray> {
        let (rows, n_src) = self.check(inputs)?;
        let l = Self::layers(inputs);
        let (cs, ct) = self.coord_terms(&l);
        let n_dst = self.dst.len();
        let x = inputs[0].data();
        let mut out = vec![0.0; rows * n_dst * 2];
        let (mut h1, mut h2) = ([0.0; H], [0.0; H]);
        for r in 0..rows {
            for j in 0..n_src {
                let a = [x[(r * n_src + j) * 2], x[(r * n_src + j) * 2 + 1]];
                for t in 0..n_dst {
                    Self::hidden(&l, a, &cs[j], &ct[t], &mut h1, &mut h2);
                    let phi = Self::output(&l, &h2);
                    let o = &mut out[(r * n_dst + t) * 2..(r * n_dst + t) * 2 + 2];
                    o[0] += self.weight * (phi[0] * a[0] - phi[1] * a[1]);
                    o[1] += self.weight * (phi[0] * a[1] + phi[1] * a[0]);
                }
            }
        }
        let mut shape = inputs[0].shape().to_vec();
        shape[2] = n_dst;
        Ok(RealArray::from_parts(shape, out))
    }

    fn backward(&self, inputs: &[&RealArray], _output: &RealArray, grad: &RealArray) -> Vec<Option<RealArray>> {
        let (rows, n_src) = self.check(inputs).expect("checked in forward");
        let l = Self::layers(inputs);
        let (cs, ct) = self.coord_terms(&l);
        let n_dst = self.dst.len();
        let d = self.src[0].len();
        let x = inputs[0].data();
        let g = grad.data();
        let mut gx = vec![0.0; x.len()];
        let mut gw0 = vec![0.0; l.n_in * H];
        let mut gb0 = [0.0; H];
        let mut gw1 = vec![0.0; H * H];
        let mut gb1 = [0.0; H];
        let mut gw2 = vec![0.0; H * 2];
        let mut gb2 = [0.0; 2];
        let (mut h1, mut h2) = ([0.0; H], [0.0; H]);
        let (mut d1, mut d2) = ([0.0; H], [0.0; H]);
        for r in 0..rows {
            for j in 0..n_src {
                let a = [x[(r * n_src + j) * 2], x[(r * n_src + j) * 2 + 1]];
                let mut ga = [0.0; 2];
                for t in 0..n_dst {
                    let gt = [
                        self.weight * g[(r * n_dst + t) * 2],
                        self.weight * g[(r * n_dst + t) * 2 + 1],
                    ];
                    Self::hidden(&l, a, &cs[j], &ct[t], &mut h1, &mut h2);
                    let phi = Self::output(&l, &h2);
                    // out = φ a: ∂/∂a = g conj(φ), ∂/∂φ = g conj(a).
                    ga[0] += gt[0] * phi[0] + gt[1] * phi[1];
                    ga[1] += gt[1] * phi[0] - gt[0] * phi[1];
                    let go = [gt[0] * a[0] + gt[1] * a[1], gt[1] * a[0] - gt[0] * a[1]];
                    gb2[0] += go[0];
                    gb2[1] += go[1];
                    for i in 0..H {
                        gw2[2 * i] += h2[i] * go[0];
                        gw2[2 * i + 1] += h2[i] * go[1];
                        d2[i] = (l.w2[2 * i] * go[0] + l.w2[2 * i + 1] * go[1]) * (1.0 - h2[i] * h2[i]);
                    }
                    for i in 0..H {
                        let row = &l.w1[i * H..(i + 1) * H];
                        let grow = &mut gw1[i * H..(i + 1) * H];
                        let mut acc = 0.0;
                        for h in 0..H {
                            grow[h] += h1[i] * d2[h];
                            acc += row[h] * d2[h];
                        }
                        d1[i] = acc * (1.0 - h1[i] * h1[i]);
                        gb1[i] += d2[i];
                    }
                    let (gs, gd) = if self.src_is_grid {
                        (2, 2 + d)
                    } else {
                        (2 + d, 2)
                    };
                    for h in 0..H {
                        gb0[h] += d1[h];
                        gw0[h] += a[0] * d1[h];
                        gw0[H + h] += a[1] * d1[h];
                        ga[0] += l.w0[h] * d1[h];
                        ga[1] += l.w0[H + h] * d1[h];
                    }
                    for (ax, &v) in self.src[j].iter().enumerate() {
                        let row = &mut gw0[(gs + ax) * H..(gs + ax + 1) * H];
                        for h in 0..H {
                            row[h] += v * d1[h];
                        }
                    }
                    for (ax, &v) in self.dst[t].iter().enumerate() {
                        let row = &mut gw0[(gd + ax) * H..(gd + ax + 1) * H];
                        for h in 0..H {
                            row[h] += v * d1[h];
                        }
                    }
                }
                gx[(r * n_src + j) * 2] = ga[0];
                gx[(r * n_src + j) * 2 + 1] = ga[1];
            }
        }
        vec![
            Some(RealArray::from_parts(inputs[0].shape().to_vec(), gx)),
            Some(RealArray::from_parts(inputs[1].shape().to_vec(), gw0)),
            Some(RealArray::from_parts(vec![H], gb0.to_vec())),
            Some(RealArray::from_parts(vec![H, H], gw1)),
            Some(RealArray::from_parts(vec![H], gb1.to_vec())),
            Some(RealArray::from_parts(vec![H, 2], gw2)),
            Some(RealArray::from_parts(vec![2], gb2.to_vec())),
        ]
    }
}

fn kernel_integral(
    tape: &mut Tape,
    store: &ParamStore,
    net: &KernelNet,
    x: NodeId,
    op: KernelIntegral,
) -> Result<NodeId> {
    let mut ins = vec![x];
    for &(w, b) in net.mlp.layers() {
        ins.push(tape.param(store, w));
        ins.push(tape.param(store, b));
    }
    tape.custom(Rc::new(op), &ins)
}

/// Dense integral encoder: `[B, c, N, 2]` on `sizes` to `[B, c, M, 2]`.
pub fn dense_encode_node(
    tape: &mut Tape,
    store: &ParamStore,
    net: &KernelNet,
    x: NodeId,
    sizes: &[usize],
    modes: &[usize],
) -> Result<NodeId> {
    check_net_dim(net, sizes)?;
    let n: usize = sizes.iter().product();
    let op = KernelIntegral {
        src: grid_coords(sizes),
        dst: grid_coords(modes),
        src_is_grid: true,
        weight: 1.0 / n as f64,
    };
    kernel_integral(tape, store, net, x, op)
}

/// Dense integral decoder: `[B, c, M, 2]` to `[B, c, N, 2]` on `sizes`.
pub fn dense_decode_node(
    tape: &mut Tape,
    store: &ParamStore,
    net: &KernelNet,
    u: NodeId,
    modes: &[usize],
    sizes: &[usize],
) -> Result<NodeId> {
    check_net_dim(net, sizes)?;
    let m: usize = modes.iter().product();
    let op = KernelIntegral {
        src: grid_coords(modes),
        dst: grid_coords(sizes),
        src_is_grid: false,
        weight: 1.0 / m as f64,
    };
    kernel_integral(tape, store, net, u, op)
}

fn check_net_dim(net: &KernelNet, sizes: &[usize]) -> Result<()> {
    if net.dim != sizes.len() {
        return Err(Error::DimensionMismatch {
            expected: net.dim,
            actual: sizes.len(),
        });
    }
    Ok(())
}

/// Encoder and decoder kernel networks with a latent of `modes`.
#[derive(Clone, Debug)]
pub struct DenseIaeParams {
    pub(crate) modes: Vec<usize>,
    pub(crate) phi1: KernelNet,
    pub(crate) phi2: KernelNet,
}

impl DenseIaeParams {
    pub fn new(store: &mut ParamStore, init: &mut Initializer, name: &str, modes: &[usize]) -> Self {
        let d = modes.len();
        Self {
            modes: modes.to_vec(),
            phi1: KernelNet::new(store, init, &format!("{name}.phi1"), d),
            phi2: KernelNet::new(store, init, &format!("{name}.phi2"), d),
        }
    }

    pub fn param_count(dim: usize) -> usize {
        2 * KernelNet::param_count(dim)
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn phi1(&self) -> &KernelNet {
        &self.phi1
    }

    pub fn phi2(&self) -> &KernelNet {
        &self.phi2
    }
}

fn single(tape: &mut Tape, values: &[num_complex::Complex64]) -> Result<NodeId> {
    Ok(tape.constant(ComplexArray::new(vec![1, 1, values.len()], values.to_vec())?.to_pairs()))
}

pub fn dense_iae_encode(a: &ComplexGrid, p: &DenseIaeParams, store: &ParamStore) -> Result<ComplexArray> {
    let mut tape = Tape::new();
    let x = single(&mut tape, a.values())?;
    let v = dense_encode_node(&mut tape, store, &p.phi1, x, a.sizes(), &p.modes)?;
    ComplexArray::new(p.modes.clone(), ComplexArray::from_pairs(tape.value(v))?.into_values())
}

pub fn dense_iae_decode(
    u: &ComplexArray,
    p: &DenseIaeParams,
    store: &ParamStore,
    sizes: &[usize],
) -> Result<ComplexGrid> {
    let m: usize = p.modes.iter().product();
    if u.values().len() != m {
        return Err(Error::BadLength {
            shape: p.modes.clone(),
            expected: m,
            actual: u.values().len(),
        });
    }
    let mut tape = Tape::new();
    let un = single(&mut tape, u.values())?;
    let b = dense_decode_node(&mut tape, store, &p.phi2, un, &p.modes, sizes)?;
    ComplexGrid::new(sizes.to_vec(), ComplexArray::from_pairs(tape.value(b))?.into_values())
}

#[derive(Clone, Debug)]
pub struct DenseChannel {
    pub(crate) kind: ChannelKind,
    pub(crate) iae: DenseIaeParams,
    pub(crate) mid: Mlp,
}

impl DenseChannel {
    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn iae(&self) -> &DenseIaeParams {
        &self.iae
    }

    pub fn mid(&self) -> &Mlp {
        &self.mid
    }
}

/// Multi-channel block with dense integral encoders and decoders in place of
/// the pseudo-differential ones; same channel transforms and merge.
#[derive(Clone, Debug)]
pub struct DenseBlock {
    pub(crate) width: usize,
    pub(crate) channels: Vec<DenseChannel>,
    pub(crate) merge: Option<ChannelMap>,
}

impl DenseBlock {
    pub fn new(
        store: &mut ParamStore,
        init: &mut Initializer,
        name: &str,
        width: usize,
        modes: &[usize],
        mid_hidden: &[usize],
        kinds: &[ChannelKind],
    ) -> Result<Self> {
        if kinds.is_empty() {
            return Err(Error::InvalidConfig("a block needs at least one channel".into()));
        }
        let latent: usize = modes.iter().product();
        let channels = kinds
            .iter()
            .enumerate()
            .map(|(i, &kind)| DenseChannel {
                kind,
                iae: DenseIaeParams::new(store, init, &format!("{name}.ch{i}"), modes),
                mid: Mlp::new(
                    store,
                    init,
                    &format!("{name}.ch{i}.mid"),
                    &mid_widths(width, latent, mid_hidden),
                ),
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

    pub fn param_count(width: usize, modes: &[usize], mid_hidden: &[usize], kinds: &[ChannelKind]) -> usize {
        let latent: usize = modes.iter().product();
        let per = DenseIaeParams::param_count(modes.len())
            + Mlp::param_count(&mid_widths(width, latent, mid_hidden));
        let merge = if kinds.len() > 1 {
            ChannelMap::param_count(kinds.len() * width, width, true)
        } else {
            0
        };
        kinds.len() * per + merge
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> &[DenseChannel] {
        &self.channels
    }

    pub fn merge(&self) -> Option<&ChannelMap> {
        self.merge.as_ref()
    }

    pub fn modes(&self) -> &[usize] {
        self.channels[0].iae.modes()
    }
}

pub fn dense_block_forward(
    tape: &mut Tape,
    store: &ParamStore,
    blk: &DenseBlock,
    x: NodeId,
    sizes: &[usize],
) -> Result<NodeId> {
    check_grid(sizes, blk.modes())?;
    let modes = blk.modes().to_vec();
    let mut outs = Vec::with_capacity(blk.channels.len());
    for ch in &blk.channels {
        let input = match ch.kind {
            ChannelKind::Identity => x,
            ChannelKind::Fourier => tape.spec_forward(x, sizes)?,
        };
        let v = dense_encode_node(tape, store, &ch.iae.phi1, input, sizes, &modes)?;
        let u = ch.mid.forward_rows(tape, store, v)?;
        let b = dense_decode_node(tape, store, &ch.iae.phi2, u, &modes, sizes)?;
        outs.push(match ch.kind {
            ChannelKind::Identity => b,
            ChannelKind::Fourier => tape.spec_inverse(b, sizes)?,
        });
    }
    match &blk.merge {
        None => Ok(outs[0]),
        Some(merge) => {
            let cat = tape.concat(&outs, 1)?;
            merge.forward(tape, store, cat)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{grad_check_graph, GradCheck};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(store: &mut ParamStore, seed: u64) -> DenseIaeParams {
        let mut init = Initializer::new(seed);
        DenseIaeParams::new(store, &mut init, "iae", &[6])
    }

    fn unit_kernel(store: &mut ParamStore, net: &KernelNet) {
        for &(w, b) in net.mlp().layers() {
            store.get_mut(w).data_mut().fill(0.0);
            store.get_mut(b).data_mut().fill(0.0);
        }
        let (_, b) = *net.mlp().layers().last().unwrap();
        store.get_mut(b).data_mut()[0] = 1.0;
    }

    fn smooth(s: usize) -> ComplexGrid {
        ComplexGrid::from_fn(vec![s], |x| {
            let t = std::f64::consts::TAU * x[0];
            Complex64::new(t.sin() + 0.3 * (2.0 * t).cos(), 0.5 * t.cos())
        })
        .unwrap()
    }

    #[test]
    fn zero_input_gives_zero_latent() {
        let mut store = ParamStore::new();
        let p = params(&mut store, 1);
        let v = dense_iae_encode(&ComplexGrid::constant(vec![16], Complex64::new(0.0, 0.0)).unwrap(), &p, &store)
            .unwrap();
        assert!(v.values().iter().all(|x| x.norm() == 0.0));
        let b = dense_iae_decode(&ComplexArray::zeros(vec![6]), &p, &store, &[20]).unwrap();
        assert!(b.values().iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn unit_kernels_average() {
        let mut store = ParamStore::new();
        let p = params(&mut store, 2);
        unit_kernel(&mut store, &p.phi1.clone());
        unit_kernel(&mut store, &p.phi2.clone());
        let a = smooth(16);
        let mean: Complex64 = a.values().iter().sum::<Complex64>() / 16.0;
        let v = dense_iae_encode(&a, &p, &store).unwrap();
        assert!(v.values().iter().all(|x| (x - mean).norm() < 1e-14));
        let u = ComplexArray::new(vec![6], (0..6).map(|i| Complex64::new(i as f64, -1.0)).collect()).unwrap();
        let mu: Complex64 = u.values().iter().sum::<Complex64>() / 6.0;
        let b = dense_iae_decode(&u, &p, &store, &[10]).unwrap();
        assert!(b.values().iter().all(|x| (x - mu).norm() < 1e-14));
    }

    #[test]
    fn riemann_sums_converge() {
        let mut store = ParamStore::new();
        let p = params(&mut store, 3);
        let v64 = dense_iae_encode(&smooth(64), &p, &store).unwrap();
        let v256 = dense_iae_encode(&smooth(256), &p, &store).unwrap();
        let err = v64
            .values()
            .iter()
            .zip(v256.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn encoder_is_not_additive() {
        let mut store = ParamStore::new();
        let p = params(&mut store, 4);
        let a = smooth(32);
        let b = ComplexGrid::from_fn(vec![32], |x| Complex64::new(2.0 * x[0], 1.0)).unwrap();
        let sum = ComplexGrid::new(
            vec![32],
            a.values().iter().zip(b.values()).map(|(x, y)| x + y).collect(),
        )
        .unwrap();
        let va = dense_iae_encode(&a, &p, &store).unwrap();
        let vb = dense_iae_encode(&b, &p, &store).unwrap();
        let vs = dense_iae_encode(&sum, &p, &store).unwrap();
        let gap = (0..6)
            .map(|i| (vs.values()[i] - va.values()[i] - vb.values()[i]).norm())
            .fold(0.0, f64::max);
        assert!(gap > 1e-3, "{gap}");
    }

    #[test]
    fn encode_decode_gradients() {
        let mut store = ParamStore::new();
        let p = params(&mut store, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = RealArray::new(vec![2, 1, 10, 2], (0..40).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let opts = GradCheck {
            samples: 300,
            ..GradCheck::default()
        };
        let r = grad_check_graph(&store, &opts, |t, s| {
            let xn = t.constant(x.clone());
            let v = dense_encode_node(t, s, &p.phi1, xn, &[10], &[6])?;
            let v2 = t.mul(v, v)?;
            let b = dense_decode_node(t, s, &p.phi2, v2, &[6], &[10])?;
            let sq = t.mul(b, b)?;
            t.sum(sq)
        })
        .unwrap();
        assert!(r.max_rel_err < 1e-4, "{r:?}");
    }

    #[test]
    fn input_gradient_matches_differences() {
        // The grad check above only perturbs parameters; probe the input path
        // by lifting the signal into a parameter.
        let mut store = ParamStore::new();
        let p = params(&mut store, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let xid = store.add(
            "x",
            RealArray::new(vec![1, 2, 8, 2], (0..32).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap(),
            true,
        );
        let r = grad_check_graph(&store, &GradCheck::default(), |t, s| {
            let xn = t.param(s, xid);
            let v = dense_encode_node(t, s, &p.phi1, xn, &[8], &[6])?;
            let b = dense_decode_node(t, s, &p.phi2, v, &[6], &[8])?;
            let sq = t.mul(b, b)?;
            t.sum(sq)
        })
        .unwrap();
        assert!(r.max_rel_err < 1e-4, "{r:?}");
    }

    #[test]
    fn dense_block_gradients_and_count() {
        let mut store = ParamStore::new();
        let mut init = Initializer::new(9);
        let kinds = [ChannelKind::Identity, ChannelKind::Fourier];
        let blk = DenseBlock::new(&mut store, &mut init, "d", 1, &[4], &[6], &kinds).unwrap();
        assert_eq!(DenseBlock::param_count(1, &[4], &[6], &kinds), store.total_len());
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = RealArray::new(vec![1, 1, 8, 2], (0..16).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let opts = GradCheck {
            samples: 300,
            ..GradCheck::default()
        };
        let r = grad_check_graph(&store, &opts, |t, s| {
            let xn = t.constant(x.clone());
            let y = dense_block_forward(t, s, &blk, xn, &[8])?;
            let sq = t.mul(y, y)?;
            t.sum(sq)
        })
        .unwrap();
        assert!(r.max_rel_err < 1e-4, "{r:?}");
    }
}
