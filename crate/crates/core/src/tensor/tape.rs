use std::fmt;
use std::rc::Rc;

use super::{complex_from_pairs, pairs_from_complex, ParamId, ParamStore, RealArray};
use crate::error::{Error, Result};
use crate::spectral;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Elementwise kinds. Binary kinds need equal shapes; `CMul` acts on
/// real-pair arrays with the `(a+bi)(c+di)` rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Elementwise {
    Add,
    Sub,
    Mul,
    CMul,
    Scale(f64),
    Tanh,
    Relu,
}

/// An operation with a hand-written vector-Jacobian product.
pub trait CustomOp {
    fn name(&self) -> &'static str;
    fn forward(&self, inputs: &[&RealArray]) -> Result<RealArray>;
    /// Gradient for every input, `None` where the input gets no gradient.
    fn backward(
        &self,
        inputs: &[&RealArray],
        output: &RealArray,
        grad: &RealArray,
    ) -> Vec<Option<RealArray>>;
}

#[derive(Clone)]
enum Op {
    Constant,
    Param(ParamId),
    Unary(Elementwise),
    Binary(Elementwise),
    AddSuffix,
    CMulSuffix,
    MatMul,
    Sum,
    Reshape(Vec<usize>),
    Slice { axis: usize, start: usize, len: usize },
    Concat { axis: usize },
    SpecForward(Vec<usize>),
    SpecInverse(Vec<usize>),
    Band { from: Vec<usize>, to: Vec<usize> },
    ChannelMix,
    ChannelBias,
    ModeMix,
    Custom(Rc<dyn CustomOp>),
}

impl fmt::Debug for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Constant => write!(f, "constant"),
            Op::Param(p) => write!(f, "param#{}", p.0),
            Op::Unary(k) | Op::Binary(k) => write!(f, "{k:?}"),
            Op::AddSuffix => write!(f, "add_suffix"),
            Op::CMulSuffix => write!(f, "cmul_suffix"),
            Op::MatMul => write!(f, "matmul"),
            Op::Sum => write!(f, "sum"),
            Op::Reshape(s) => write!(f, "reshape{s:?}"),
            Op::Slice { axis, start, len } => write!(f, "slice({axis},{start},{len})"),
            Op::Concat { axis } => write!(f, "concat({axis})"),
            Op::SpecForward(s) => write!(f, "spec_forward{s:?}"),
            Op::SpecInverse(s) => write!(f, "spec_inverse{s:?}"),
            Op::Band { from, to } => write!(f, "band{from:?}->{to:?}"),
            Op::ChannelMix => write!(f, "channel_mix"),
            Op::ChannelBias => write!(f, "channel_bias"),
            Op::ModeMix => write!(f, "mode_mix"),
            Op::Custom(c) => write!(f, "custom:{}", c.name()),
        }
    }
}

#[derive(Debug)]
struct Node {
    op: Op,
    inputs: Vec<NodeId>,
    value: RealArray,
}

/// Computation record. Nodes are appended in evaluation order, so every
/// node's inputs precede it.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn mismatch(op: &'static str, a: &RealArray, b: &RealArray) -> Error {
    Error::ShapeMismatch {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

fn is_suffix(short: &[usize], long: &[usize]) -> bool {
    short.len() <= long.len() && long[long.len() - short.len()..] == *short
}

fn require_pairs(op: &'static str, a: &RealArray) -> Result<()> {
    if a.shape().last() != Some(&2) {
        return Err(Error::ShapeMismatch {
            op,
            left: a.shape().to_vec(),
            right: vec![2],
        });
    }
    Ok(())
}

fn grid_len(op: &'static str, a: &RealArray, sizes: &[usize]) -> Result<usize> {
    require_pairs(op, a)?;
    let n: usize = sizes.iter().product();
    let sh = a.shape();
    if sh.len() < 2 || sh[sh.len() - 2] != n {
        return Err(Error::ShapeMismatch {
            op,
            left: sh.to_vec(),
            right: vec![n, 2],
        });
    }
    Ok(n)
}

fn map(a: &RealArray, f: impl Fn(f64) -> f64) -> RealArray {
    RealArray::from_parts(a.shape().to_vec(), a.data().iter().map(|&v| f(v)).collect())
}

fn zip(a: &RealArray, b: &RealArray, f: impl Fn(f64, f64) -> f64) -> RealArray {
    RealArray::from_parts(
        a.shape().to_vec(),
        a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect(),
    )
}

/// `a ∘ b` on real pairs; `b` repeats over the leading axes of `a`.
/// With `conj_b` the second factor is conjugated.
fn cmul_repeat(a: &[f64], b: &[f64], conj_b: bool) -> Vec<f64> {
    let sign = if conj_b { -1.0 } else { 1.0 };
    let mut out = vec![0.0; a.len()];
    for (oc, ac) in out.chunks_exact_mut(b.len()).zip(a.chunks_exact(b.len())) {
        for ((o, x), y) in oc
            .chunks_exact_mut(2)
            .zip(ac.chunks_exact(2))
            .zip(b.chunks_exact(2))
        {
            let (yr, yi) = (y[0], sign * y[1]);
            o[0] = x[0] * yr - x[1] * yi;
            o[1] = x[0] * yi + x[1] * yr;
        }
    }
    out
}

/// `Σ_lead conj(a) ∘ g`-style reduction: accumulates `g ∘ conj(a)` over the
/// leading axes into a suffix-shaped buffer.
fn cmul_conj_reduce(g: &[f64], a: &[f64], suffix_len: usize) -> Vec<f64> {
    let mut out = vec![0.0; suffix_len];
    for (gc, ac) in g.chunks_exact(suffix_len).zip(a.chunks_exact(suffix_len)) {
        for ((o, gg), x) in out
            .chunks_exact_mut(2)
            .zip(gc.chunks_exact(2))
            .zip(ac.chunks_exact(2))
        {
            o[0] += gg[0] * x[0] + gg[1] * x[1];
            o[1] += gg[1] * x[0] - gg[0] * x[1];
        }
    }
    out
}

fn matmul_raw(a: &[f64], b: &[f64], p: usize, q: usize, r: usize) -> Vec<f64> {
    let mut out = vec![0.0; p * r];
    for i in 0..p {
        let row = &mut out[i * r..(i + 1) * r];
        for k in 0..q {
            let aik = a[i * q + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * r..(k + 1) * r];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
    out
}

fn slice_raw(data: &[f64], shape: &[usize], axis: usize, start: usize, len: usize) -> Vec<f64> {
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let full = shape[axis];
    let mut out = Vec::with_capacity(outer * len * inner);
    for o in 0..outer {
        let base = o * full * inner + start * inner;
        out.extend_from_slice(&data[base..base + len * inner]);
    }
    out
}

fn spec_forward_pairs(data: &[f64], sizes: &[usize]) -> Vec<f64> {
    pairs_from_complex(&spectral::spectrum_of(&complex_from_pairs(data), sizes))
}

fn spec_inverse_pairs(data: &[f64], sizes: &[usize]) -> Vec<f64> {
    pairs_from_complex(&spectral::synthesize(&complex_from_pairs(data), sizes))
}

fn band_pairs(data: &[f64], from: &[usize], to: &[usize]) -> Vec<f64> {
    pairs_from_complex(&spectral::resize_band(&complex_from_pairs(data), from, to))
}

fn with_grid_len(shape: &[usize], n: usize) -> Vec<usize> {
    let mut s = shape.to_vec();
    let k = s.len();
    s[k - 2] = n;
    s
}

fn forward(op: &Op, inputs: &[&RealArray]) -> Result<RealArray> {
    use Elementwise::*;
    Ok(match op {
        Op::Constant | Op::Param(_) => unreachable!("leaves are not recomputed"),
        Op::Unary(kind) => {
            let a = inputs[0];
            match kind {
                Scale(c) => map(a, |v| c * v),
                Tanh => map(a, f64::tanh),
                Relu => map(a, |v| v.max(0.0)),
                _ => unreachable!(),
            }
        }
        Op::Binary(kind) => {
            let (a, b) = (inputs[0], inputs[1]);
            if a.shape() != b.shape() {
                return Err(mismatch("elementwise", a, b));
            }
            match kind {
                Add => zip(a, b, |x, y| x + y),
                Sub => zip(a, b, |x, y| x - y),
                Mul => zip(a, b, |x, y| x * y),
                CMul => {
                    require_pairs("cmul", a)?;
                    RealArray::from_parts(a.shape().to_vec(), cmul_repeat(a.data(), b.data(), false))
                }
                _ => unreachable!(),
            }
        }
        Op::AddSuffix => {
            let (a, b) = (inputs[0], inputs[1]);
            if !is_suffix(b.shape(), a.shape()) || b.is_empty() {
                return Err(mismatch("add_suffix", a, b));
            }
            let mut out = a.data().to_vec();
            for chunk in out.chunks_exact_mut(b.len()) {
                chunk.iter_mut().zip(b.data()).for_each(|(o, v)| *o += v);
            }
            RealArray::from_parts(a.shape().to_vec(), out)
        }
        Op::CMulSuffix => {
            let (a, b) = (inputs[0], inputs[1]);
            require_pairs("cmul_suffix", a)?;
            if !is_suffix(b.shape(), a.shape()) || b.shape().last() != Some(&2) {
                return Err(mismatch("cmul_suffix", a, b));
            }
            RealArray::from_parts(a.shape().to_vec(), cmul_repeat(a.data(), b.data(), false))
        }
        Op::MatMul => {
            let (a, b) = (inputs[0], inputs[1]);
            if a.shape().len() != 2 || b.shape().len() != 2 || a.shape()[1] != b.shape()[0] {
                return Err(mismatch("matmul", a, b));
            }
            let (p, q, r) = (a.shape()[0], a.shape()[1], b.shape()[1]);
            RealArray::from_parts(vec![p, r], matmul_raw(a.data(), b.data(), p, q, r))
        }
        Op::Sum => RealArray::scalar(inputs[0].data().iter().sum()),
        Op::Reshape(shape) => {
            let a = inputs[0];
            if shape.iter().product::<usize>() != a.len() {
                return Err(Error::ShapeMismatch {
                    op: "reshape",
                    left: a.shape().to_vec(),
                    right: shape.clone(),
                });
            }
            RealArray::from_parts(shape.clone(), a.data().to_vec())
        }
        Op::Slice { axis, start, len } => {
            let a = inputs[0];
            if *axis >= a.shape().len() || start + len > a.shape()[*axis] {
                return Err(Error::ShapeMismatch {
                    op: "slice",
                    left: a.shape().to_vec(),
                    right: vec![*axis, *start, *len],
                });
            }
            let mut shape = a.shape().to_vec();
            shape[*axis] = *len;
            RealArray::from_parts(shape, slice_raw(a.data(), a.shape(), *axis, *start, *len))
        }
        Op::Concat { axis } => {
            let first = inputs[0];
            let axis = *axis;
            let mut total = 0;
            for x in inputs {
                let ok = x.shape().len() == first.shape().len()
                    && x.shape()
                        .iter()
                        .zip(first.shape())
                        .enumerate()
                        .all(|(i, (a, b))| i == axis || a == b);
                if !ok || axis >= first.shape().len() {
                    return Err(mismatch("concat", first, x));
                }
                total += x.shape()[axis];
            }
            let outer: usize = first.shape()[..axis].iter().product();
            let inner: usize = first.shape()[axis + 1..].iter().product();
            let mut out = Vec::with_capacity(outer * total * inner);
            for o in 0..outer {
                for x in inputs {
                    let w = x.shape()[axis] * inner;
                    out.extend_from_slice(&x.data()[o * w..(o + 1) * w]);
                }
            }
            let mut shape = first.shape().to_vec();
            shape[axis] = total;
            RealArray::from_parts(shape, out)
        }
        Op::SpecForward(sizes) => {
            let a = inputs[0];
            grid_len("spec_forward", a, sizes)?;
            RealArray::from_parts(a.shape().to_vec(), spec_forward_pairs(a.data(), sizes))
        }
        Op::SpecInverse(sizes) => {
            let a = inputs[0];
            grid_len("spec_inverse", a, sizes)?;
            RealArray::from_parts(a.shape().to_vec(), spec_inverse_pairs(a.data(), sizes))
        }
        Op::Band { from, to } => {
            let a = inputs[0];
            grid_len("band", a, from)?;
            let n_to = to.iter().product();
            RealArray::from_parts(with_grid_len(a.shape(), n_to), band_pairs(a.data(), from, to))
        }
        Op::ChannelMix => {
            let (x, w) = (inputs[0], inputs[1]);
            let (xs, ws) = (x.shape(), w.shape());
            if xs.len() != 4 || xs[3] != 2 || ws.len() != 3 || ws[2] != 2 || ws[1] != xs[1] {
                return Err(mismatch("channel_mix", x, w));
            }
            let (b, cin, n, cout) = (xs[0], xs[1], xs[2], ws[0]);
            let mut out = vec![0.0; b * cout * n * 2];
            let xd = x.data();
            let wd = w.data();
            for bi in 0..b {
                for o in 0..cout {
                    let dst = &mut out[((bi * cout + o) * n) * 2..((bi * cout + o + 1) * n) * 2];
                    for i in 0..cin {
                        let (wr, wi) = (wd[(o * cin + i) * 2], wd[(o * cin + i) * 2 + 1]);
                        let src = &xd[((bi * cin + i) * n) * 2..((bi * cin + i + 1) * n) * 2];
                        for (d, s) in dst.chunks_exact_mut(2).zip(src.chunks_exact(2)) {
                            d[0] += wr * s[0] - wi * s[1];
                            d[1] += wr * s[1] + wi * s[0];
                        }
                    }
                }
            }
            RealArray::from_parts(vec![b, cout, n, 2], out)
        }
        Op::ChannelBias => {
            let (x, bias) = (inputs[0], inputs[1]);
            let xs = x.shape();
            if xs.len() != 4 || xs[3] != 2 || bias.shape() != [xs[1], 2] {
                return Err(mismatch("channel_bias", x, bias));
            }
            let (c, n) = (xs[1], xs[2]);
            let mut out = x.data().to_vec();
            for (idx, chunk) in out.chunks_exact_mut(n * 2).enumerate() {
                let ch = idx % c;
                let (br, bi) = (bias.data()[ch * 2], bias.data()[ch * 2 + 1]);
                for p in chunk.chunks_exact_mut(2) {
                    p[0] += br;
                    p[1] += bi;
                }
            }
            RealArray::from_parts(xs.to_vec(), out)
        }
        Op::ModeMix => {
            let (x, w) = (inputs[0], inputs[1]);
            let (xs, ws) = (x.shape(), w.shape());
            if xs.len() != 4 || xs[3] != 2 || ws.len() != 4 || ws[3] != 2 || ws[0] != xs[2] || ws[2] != xs[1] {
                return Err(mismatch("mode_mix", x, w));
            }
            let (b, cin, m, cout) = (xs[0], xs[1], xs[2], ws[1]);
            let (xd, wd) = (x.data(), w.data());
            let mut out = vec![0.0; b * cout * m * 2];
            for bi in 0..b {
                for o in 0..cout {
                    for i in 0..cin {
                        for k in 0..m {
                            let wi = ((k * cout + o) * cin + i) * 2;
                            let xi = ((bi * cin + i) * m + k) * 2;
                            let oi = ((bi * cout + o) * m + k) * 2;
                            out[oi] += wd[wi] * xd[xi] - wd[wi + 1] * xd[xi + 1];
                            out[oi + 1] += wd[wi] * xd[xi + 1] + wd[wi + 1] * xd[xi];
                        }
                    }
                }
            }
            RealArray::from_parts(vec![b, cout, m, 2], out)
        }
        Op::Custom(c) => c.forward(inputs)?,
    })
}

fn backward(op: &Op, inputs: &[&RealArray], out: &RealArray, g: &RealArray) -> Vec<Option<RealArray>> {
    use Elementwise::*;
    let shaped = |like: &RealArray, data: Vec<f64>| Some(RealArray::from_parts(like.shape().to_vec(), data));
    match op {
        Op::Constant | Op::Param(_) => vec![],
        Op::Unary(kind) => {
            let a = inputs[0];
            let ga = match kind {
                Scale(c) => g.data().iter().map(|v| c * v).collect(),
                Tanh => g
                    .data()
                    .iter()
                    .zip(out.data())
                    .map(|(gv, y)| gv * (1.0 - y * y))
                    .collect(),
                Relu => g
                    .data()
                    .iter()
                    .zip(a.data())
                    .map(|(gv, x)| if *x > 0.0 { *gv } else { 0.0 })
                    .collect(),
                _ => unreachable!(),
            };
            vec![shaped(a, ga)]
        }
        Op::Binary(kind) => {
            let (a, b) = (inputs[0], inputs[1]);
            match kind {
                Add => vec![Some(g.clone()), Some(g.clone())],
                Sub => vec![Some(g.clone()), Some(map(g, |v| -v))],
                Mul => vec![Some(zip(g, b, |x, y| x * y)), Some(zip(g, a, |x, y| x * y))],
                CMul => vec![
                    shaped(a, cmul_repeat(g.data(), b.data(), true)),
                    shaped(b, cmul_repeat(g.data(), a.data(), true)),
                ],
                _ => unreachable!(),
            }
        }
        Op::AddSuffix => {
            let b = inputs[1];
            let mut gb = vec![0.0; b.len()];
            for chunk in g.data().chunks_exact(b.len()) {
                gb.iter_mut().zip(chunk).for_each(|(o, v)| *o += v);
            }
            vec![Some(g.clone()), shaped(b, gb)]
        }
        Op::CMulSuffix => {
            let (a, b) = (inputs[0], inputs[1]);
            vec![
                shaped(a, cmul_repeat(g.data(), b.data(), true)),
                shaped(b, cmul_conj_reduce(g.data(), a.data(), b.len())),
            ]
        }
        Op::MatMul => {
            let (a, b) = (inputs[0], inputs[1]);
            let (p, q, r) = (a.shape()[0], a.shape()[1], b.shape()[1]);
            let (ad, bd, gd) = (a.data(), b.data(), g.data());
            let mut ga = vec![0.0; p * q];
            for i in 0..p {
                let grow = &gd[i * r..(i + 1) * r];
                for k in 0..q {
                    let brow = &bd[k * r..(k + 1) * r];
                    ga[i * q + k] = grow.iter().zip(brow).map(|(x, y)| x * y).sum();
                }
            }
            let mut gb = vec![0.0; q * r];
            for i in 0..p {
                let grow = &gd[i * r..(i + 1) * r];
                for k in 0..q {
                    let aik = ad[i * q + k];
                    if aik == 0.0 {
                        continue;
                    }
                    let dst = &mut gb[k * r..(k + 1) * r];
                    dst.iter_mut().zip(grow).for_each(|(o, gv)| *o += aik * gv);
                }
            }
            vec![shaped(a, ga), shaped(b, gb)]
        }
        Op::Sum => {
            let a = inputs[0];
            vec![shaped(a, vec![g.data()[0]; a.len()])]
        }
        Op::Reshape(_) => vec![shaped(inputs[0], g.data().to_vec())],
        Op::Slice { axis, start, len } => {
            let a = inputs[0];
            let outer: usize = a.shape()[..*axis].iter().product();
            let inner: usize = a.shape()[axis + 1..].iter().product();
            let full = a.shape()[*axis];
            let mut ga = vec![0.0; a.len()];
            for o in 0..outer {
                let dst = o * full * inner + start * inner;
                let src = o * len * inner;
                ga[dst..dst + len * inner].copy_from_slice(&g.data()[src..src + len * inner]);
            }
            vec![shaped(a, ga)]
        }
        Op::Concat { axis } => {
            let outer: usize = out.shape()[..*axis].iter().product();
            let inner: usize = out.shape()[axis + 1..].iter().product();
            let total = out.shape()[*axis];
            let mut offset = 0;
            inputs
                .iter()
                .map(|x| {
                    let w = x.shape()[*axis];
                    let mut gx = Vec::with_capacity(x.len());
                    for o in 0..outer {
                        let base = (o * total + offset) * inner;
                        gx.extend_from_slice(&g.data()[base..base + w * inner]);
                    }
                    offset += w;
                    shaped(x, gx)
                })
                .collect()
        }
        Op::SpecForward(sizes) => {
            let n: usize = sizes.iter().product();
            let mut gx = spec_inverse_pairs(g.data(), sizes);
            gx.iter_mut().for_each(|v| *v /= n as f64);
            vec![shaped(inputs[0], gx)]
        }
        Op::SpecInverse(sizes) => {
            let n: usize = sizes.iter().product();
            let mut gx = spec_forward_pairs(g.data(), sizes);
            gx.iter_mut().for_each(|v| *v *= n as f64);
            vec![shaped(inputs[0], gx)]
        }
        Op::Band { from, to } => vec![shaped(inputs[0], band_pairs(g.data(), to, from))],
        Op::ChannelMix => {
            let (x, w) = (inputs[0], inputs[1]);
            let (b, cin, n) = (x.shape()[0], x.shape()[1], x.shape()[2]);
            let cout = w.shape()[0];
            let (xd, wd, gd) = (x.data(), w.data(), g.data());
            let mut gx = vec![0.0; x.len()];
            let mut gw = vec![0.0; w.len()];
            for bi in 0..b {
                for o in 0..cout {
                    let gsl = &gd[((bi * cout + o) * n) * 2..((bi * cout + o + 1) * n) * 2];
                    for i in 0..cin {
                        let widx = (o * cin + i) * 2;
                        let (wr, wi) = (wd[widx], wd[widx + 1]);
                        let xs = ((bi * cin + i) * n) * 2;
                        let xsl = &xd[xs..xs + n * 2];
                        let gxs = &mut gx[xs..xs + n * 2];
                        let (mut acc_r, mut acc_i) = (0.0, 0.0);
                        for ((gxp, gp), xp) in gxs
                            .chunks_exact_mut(2)
                            .zip(gsl.chunks_exact(2))
                            .zip(xsl.chunks_exact(2))
                        {
                            // conj(w) * g
                            gxp[0] += wr * gp[0] + wi * gp[1];
                            gxp[1] += wr * gp[1] - wi * gp[0];
                            // g * conj(x)
                            acc_r += gp[0] * xp[0] + gp[1] * xp[1];
                            acc_i += gp[1] * xp[0] - gp[0] * xp[1];
                        }
                        gw[widx] += acc_r;
                        gw[widx + 1] += acc_i;
                    }
                }
            }
            vec![shaped(x, gx), shaped(w, gw)]
        }
        Op::ChannelBias => {
            let bias = inputs[1];
            let (c, n) = (g.shape()[1], g.shape()[2]);
            let mut gb = vec![0.0; bias.len()];
            for (idx, chunk) in g.data().chunks_exact(n * 2).enumerate() {
                let ch = idx % c;
                for p in chunk.chunks_exact(2) {
                    gb[ch * 2] += p[0];
                    gb[ch * 2 + 1] += p[1];
                }
            }
            vec![Some(g.clone()), shaped(bias, gb)]
        }
        Op::ModeMix => {
            let (x, w) = (inputs[0], inputs[1]);
            let (b, cin, m) = (x.shape()[0], x.shape()[1], x.shape()[2]);
            let cout = w.shape()[1];
            let (xd, wd, gd) = (x.data(), w.data(), g.data());
            let mut gx = vec![0.0; x.len()];
            let mut gw = vec![0.0; w.len()];
            for bi in 0..b {
                for o in 0..cout {
                    for i in 0..cin {
                        for k in 0..m {
                            let wi = ((k * cout + o) * cin + i) * 2;
                            let xi = ((bi * cin + i) * m + k) * 2;
                            let gi = ((bi * cout + o) * m + k) * 2;
                            let (gr, gim) = (gd[gi], gd[gi + 1]);
                            gx[xi] += wd[wi] * gr + wd[wi + 1] * gim;
                            gx[xi + 1] += wd[wi] * gim - wd[wi + 1] * gr;
                            gw[wi] += gr * xd[xi] + gim * xd[xi + 1];
                            gw[wi + 1] += gim * xd[xi] - gr * xd[xi + 1];
                        }
                    }
                }
            }
            vec![shaped(x, gx), shaped(w, gw)]
        }
        Op::Custom(c) => c.backward(inputs, out, g),
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &RealArray {
        &self.nodes[id.0].value
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        self.nodes[id.0].value.shape()
    }

    fn push_leaf(&mut self, op: Op, value: RealArray) -> NodeId {
        self.nodes.push(Node {
            op,
            inputs: vec![],
            value,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn push(&mut self, op: Op, inputs: Vec<NodeId>) -> Result<NodeId> {
        let value = {
            let vals: Vec<&RealArray> = inputs.iter().map(|i| &self.nodes[i.0].value).collect();
            forward(&op, &vals)?
        };
        self.nodes.push(Node { op, inputs, value });
        Ok(NodeId(self.nodes.len() - 1))
    }

    pub fn constant(&mut self, value: RealArray) -> NodeId {
        self.push_leaf(Op::Constant, value)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> NodeId {
        self.push_leaf(Op::Param(id), store.get(id).clone())
    }

    pub fn elementwise(&mut self, kind: Elementwise, a: NodeId, b: Option<NodeId>) -> Result<NodeId> {
        use Elementwise::*;
        match (kind, b) {
            (Scale(_) | Tanh | Relu, None) => self.push(Op::Unary(kind), vec![a]),
            (Add | Sub | Mul | CMul, Some(b)) => self.push(Op::Binary(kind), vec![a, b]),
            _ => Err(Error::InvalidConfig(format!(
                "elementwise {kind:?} called with wrong arity"
            ))),
        }
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.elementwise(Elementwise::Add, a, Some(b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.elementwise(Elementwise::Sub, a, Some(b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.elementwise(Elementwise::Mul, a, Some(b))
    }

    pub fn cmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.elementwise(Elementwise::CMul, a, Some(b))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> Result<NodeId> {
        self.elementwise(Elementwise::Scale(c), a, None)
    }

    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId> {
        self.elementwise(Elementwise::Tanh, a, None)
    }

    pub fn relu(&mut self, a: NodeId) -> Result<NodeId> {
        self.elementwise(Elementwise::Relu, a, None)
    }

    /// `a + b` where `b`'s shape is a trailing part of `a`'s (bias rows).
    pub fn add_suffix(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.push(Op::AddSuffix, vec![a, b])
    }

    /// Complex `a ∘ b` where `b`'s shape is a trailing part of `a`'s.
    pub fn cmul_suffix(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.push(Op::CMulSuffix, vec![a, b])
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.push(Op::MatMul, vec![a, b])
    }

    pub fn sum(&mut self, a: NodeId) -> Result<NodeId> {
        self.push(Op::Sum, vec![a])
    }

    /// Sum of a list of equally shaped nodes.
    pub fn add_all(&mut self, xs: &[NodeId]) -> Result<NodeId> {
        let (first, rest) = xs
            .split_first()
            .ok_or_else(|| Error::InvalidConfig("add_all of nothing".into()))?;
        rest.iter().try_fold(*first, |acc, &x| self.add(acc, x))
    }

    pub fn reshape(&mut self, a: NodeId, shape: Vec<usize>) -> Result<NodeId> {
        self.push(Op::Reshape(shape), vec![a])
    }

    pub fn slice(&mut self, a: NodeId, axis: usize, start: usize, len: usize) -> Result<NodeId> {
        self.push(Op::Slice { axis, start, len }, vec![a])
    }

    pub fn concat(&mut self, xs: &[NodeId], axis: usize) -> Result<NodeId> {
        if xs.is_empty() {
            return Err(Error::InvalidConfig("concat of nothing".into()));
        }
        self.push(Op::Concat { axis }, xs.to_vec())
    }

    /// Centered, `1/N`-normalized transform over the grid axis (second to
    /// last) of a real-pair array `[.., N, 2]`.
    pub fn spec_forward(&mut self, a: NodeId, sizes: &[usize]) -> Result<NodeId> {
        self.push(Op::SpecForward(sizes.to_vec()), vec![a])
    }

    /// Synthesis from a centered spectrum `[.., N, 2]` onto the same-size grid.
    pub fn spec_inverse(&mut self, a: NodeId, sizes: &[usize]) -> Result<NodeId> {
        self.push(Op::SpecInverse(sizes.to_vec()), vec![a])
    }

    /// Truncation and/or zero padding of a centered band.
    pub fn band(&mut self, a: NodeId, from: &[usize], to: &[usize]) -> Result<NodeId> {
        if from.len() != to.len() {
            return Err(Error::DimensionMismatch {
                expected: from.len(),
                actual: to.len(),
            });
        }
        self.push(
            Op::Band {
                from: from.to_vec(),
                to: to.to_vec(),
            },
            vec![a],
        )
    }

    /// Pointwise complex channel map: `x [B,cin,N,2]`, `w [cout,cin,2]`.
    pub fn channel_mix(&mut self, x: NodeId, w: NodeId) -> Result<NodeId> {
        self.push(Op::ChannelMix, vec![x, w])
    }

    /// Adds a complex bias `[c,2]` to every point of `x [B,c,N,2]`.
    pub fn channel_bias(&mut self, x: NodeId, bias: NodeId) -> Result<NodeId> {
        self.push(Op::ChannelBias, vec![x, bias])
    }

    /// Per-mode channel mixing: `x [B,cin,M,2]`, `w [M,cout,cin,2]`.
    pub fn mode_mix(&mut self, x: NodeId, w: NodeId) -> Result<NodeId> {
        self.push(Op::ModeMix, vec![x, w])
    }

    pub fn custom(&mut self, op: Rc<dyn CustomOp>, inputs: &[NodeId]) -> Result<NodeId> {
        self.push(Op::Custom(op), inputs.to_vec())
    }

    /// Recomputes every node from the leaves, reading parameters from `store`.
    pub fn replay(&self, store: &ParamStore) -> Result<Vec<RealArray>> {
        let mut values: Vec<RealArray> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = match &node.op {
                Op::Constant => node.value.clone(),
                Op::Param(id) => store.get(*id).clone(),
                op => {
                    let ins: Vec<&RealArray> = node.inputs.iter().map(|i| &values[i.0]).collect();
                    forward(op, &ins)?
                }
            };
            values.push(v);
        }
        Ok(values)
    }

    /// Every node only consumes strictly earlier nodes.
    pub fn is_topological(&self) -> bool {
        self.nodes
            .iter()
            .enumerate()
            .all(|(i, n)| n.inputs.iter().all(|j| j.0 < i))
    }
}

/// One gradient array per parameter slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    grads: Vec<RealArray>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Self {
            grads: store
                .slots()
                .iter()
                .map(|s| RealArray::zeros(s.value.shape().to_vec()))
                .collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &RealArray {
        &self.grads[id.0]
    }

    pub fn as_slice(&self) -> &[RealArray] {
        &self.grads
    }

    pub fn as_mut_slice(&mut self) -> &mut [RealArray] {
        &mut self.grads
    }

    pub fn is_finite(&self) -> bool {
        self.grads.iter().all(|g| g.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.grads.iter().map(|g| g.sum_sq()).sum::<f64>().sqrt()
    }
}

/// Reverse sweep from a scalar `loss` node. Parameters the loss does not
/// depend on get zero gradients.
pub fn backprop(tape: &Tape, loss: NodeId, store: &ParamStore) -> Result<Gradients> {
    let loss_val = tape.value(loss);
    if loss_val.len() != 1 {
        return Err(Error::NonScalarLoss(loss_val.shape().to_vec()));
    }
    let mut out = Gradients::zeros_like(store);
    let mut grads: Vec<Option<RealArray>> = vec![None; loss.0 + 1];
    grads[loss.0] = Some(RealArray::from_parts(loss_val.shape().to_vec(), vec![1.0]));
    for idx in (0..=loss.0).rev() {
        let Some(g) = grads[idx].take() else { continue };
        let node = &tape.nodes[idx];
        match node.op {
            Op::Constant => {}
            Op::Param(id) => {
                let dst = out.grads[id.0].data_mut();
                dst.iter_mut().zip(g.data()).for_each(|(o, v)| *o += v);
            }
            ref op => {
                let ins: Vec<&RealArray> = node.inputs.iter().map(|i| &tape.nodes[i.0].value).collect();
                let gin = backward(op, &ins, &node.value, &g);
                for (input, gi) in node.inputs.iter().zip(gin) {
                    let Some(gi) = gi else { continue };
                    match &mut grads[input.0] {
                        Some(acc) => acc
                            .data_mut()
                            .iter_mut()
                            .zip(gi.data())
                            .for_each(|(o, v)| *o += v),
                        slot @ None => *slot = Some(gi),
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{grad_check_graph, GradCheck};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn arr(shape: &[usize], data: &[f64]) -> RealArray {
        RealArray::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> RealArray {
        let n = shape.iter().product();
        arr(shape, &(0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>())
    }

    #[test]
    fn cmul_hand_product() {
        let mut t = Tape::new();
        let a = t.constant(arr(&[1, 2], &[1.0, 2.0]));
        let b = t.constant(arr(&[1, 2], &[3.0, 4.0]));
        let c = t.cmul(a, b).unwrap();
        assert_eq!(t.value(c).data(), &[-5.0, 10.0]);
    }

    #[test]
    fn add_zero_is_identity() {
        let mut t = Tape::new();
        let x = t.constant(arr(&[3], &[1.5, -2.0, 0.25]));
        let z = t.constant(RealArray::zeros(vec![3]));
        let y = t.add(x, z).unwrap();
        assert_eq!(t.value(y), t.value(x));
    }

    #[test]
    fn shape_mismatch_reports_both() {
        let mut t = Tape::new();
        let a = t.constant(RealArray::zeros(vec![2, 3]));
        let b = t.constant(RealArray::zeros(vec![3, 2]));
        match t.add(a, b) {
            Err(Error::ShapeMismatch { left, right, .. }) => {
                assert_eq!(left, vec![2, 3]);
                assert_eq!(right, vec![3, 2]);
            }
            other => panic!("{other:?}"),
        }
        assert!(t.matmul(a, a).is_err());
    }

    #[test]
    fn tanh_backward_matches_difference() {
        let mut store = ParamStore::new();
        let x = store.add("x", arr(&[1], &[0.5]), false);
        let mut t = Tape::new();
        let xn = t.param(&store, x);
        let y = t.tanh(xn).unwrap();
        let l = t.sum(y).unwrap();
        let g = backprop(&t, l, &store).unwrap().get(x).data()[0];
        let h = 1e-5;
        let fd = ((0.5f64 + h).tanh() - (0.5f64 - h).tanh()) / (2.0 * h);
        assert!(((g - fd) / g).abs() < 1e-7);
    }

    #[test]
    fn matmul_identity_and_hand() {
        let mut t = Tape::new();
        let i3 = t.constant(arr(&[3, 3], &[1., 0., 0., 0., 1., 0., 0., 0., 1.]));
        let b = t.constant(arr(&[3, 2], &[1., 2., 3., 4., 5., 6.]));
        let y = t.matmul(i3, b).unwrap();
        assert_eq!(t.value(y), t.value(b));
        let a = t.constant(arr(&[2, 2], &[1., 2., 3., 4.]));
        let c = t.constant(arr(&[2, 1], &[5., 6.]));
        let y = t.matmul(a, c).unwrap();
        assert_eq!(t.value(y).data(), &[17., 39.]);
    }

    #[test]
    fn matmul_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut store = ParamStore::new();
        let a = store.add("a", random(&[7, 5], &mut rng), false);
        let b = store.add("b", random(&[5, 3], &mut rng), false);
        let w = random(&[7, 3], &mut rng);
        let report = grad_check_graph(&store, &GradCheck::default(), |t, s| {
            let an = t.param(s, a);
            let bn = t.param(s, b);
            let wn = t.constant(w.clone());
            let y = t.matmul(an, bn)?;
            let y = t.mul(y, wn)?;
            t.sum(y)
        })
        .unwrap();
        assert!(report.max_rel_err < 1e-6, "{report:?}");
    }

    #[test]
    fn linear_and_quadratic_losses() {
        let mut store = ParamStore::new();
        let w = store.add("w", arr(&[3], &[0.5, -1.0, 2.0]), false);
        let x = arr(&[3], &[3.0, 4.0, -5.0]);
        let mut t = Tape::new();
        let wn = t.param(&store, w);
        let xn = t.constant(x.clone());
        let p = t.mul(wn, xn).unwrap();
        let l = t.sum(p).unwrap();
        assert_eq!(backprop(&t, l, &store).unwrap().get(w), &x);

        let mut t = Tape::new();
        let wn = t.param(&store, w);
        let sq = t.mul(wn, wn).unwrap();
        let l = t.sum(sq).unwrap();
        assert_eq!(backprop(&t, l, &store).unwrap().get(w).data(), &[1.0, -2.0, 4.0]);
    }

    #[test]
    fn unused_param_gets_zero_and_nonscalar_rejected() {
        let mut store = ParamStore::new();
        let a = store.add("a", arr(&[2], &[1.0, 2.0]), false);
        let b = store.add("b", arr(&[2], &[1.0, 2.0]), false);
        let mut t = Tape::new();
        let an = t.param(&store, a);
        let l = t.sum(an).unwrap();
        let g = backprop(&t, l, &store).unwrap();
        assert_eq!(g.get(b).data(), &[0.0, 0.0]);
        assert!(matches!(backprop(&t, an, &store), Err(Error::NonScalarLoss(_))));
    }

    #[test]
    fn every_op_passes_grad_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut store = ParamStore::new();
        let x = store.add("x", random(&[2, 3, 8, 2], &mut rng), true);
        let y = store.add("y", random(&[2, 3, 8, 2], &mut rng), true);
        let w = store.add("w", random(&[4, 3, 2], &mut rng), true);
        let bias = store.add("bias", random(&[4, 2], &mut rng), true);
        let suffix = store.add("s", random(&[8, 2], &mut rng), true);
        let modes = store.add("modes", random(&[4, 3, 3, 2], &mut rng), true);
        let probe = random(&[2, 4, 8, 2], &mut rng);
        let probe2 = random(&[2, 3, 12, 2], &mut rng);
        let opts = GradCheck::default();
        let report = grad_check_graph(&store, &opts, |t, s| {
            let xn = t.param(s, x);
            let yn = t.param(s, y);
            let a = t.cmul(xn, yn)?;
            let a = t.sub(a, xn)?;
            let a = t.tanh(a)?;
            let sn = t.param(s, suffix);
            let a = t.cmul_suffix(a, sn)?;
            let a = t.add_suffix(a, sn)?;
            let f = t.spec_forward(a, &[8])?;
            let band = t.band(f, &[8], &[4])?;
            let mn = t.param(s, modes);
            let mixed = t.mode_mix(band, mn)?;
            let padded = t.band(mixed, &[4], &[12])?;
            let back = t.spec_inverse(padded, &[12])?;
            let pr = t.constant(probe2.clone());
            let q = t.mul(back, pr)?;
            let wn = t.param(s, w);
            let m = t.channel_mix(a, wn)?;
            let bn = t.param(s, bias);
            let m = t.channel_bias(m, bn)?;
            let m = t.relu(m)?;
            let m = t.scale(m, 0.7)?;
            let pr = t.constant(probe.clone());
            let m = t.mul(m, pr)?;
            let sl = t.slice(m, 1, 1, 2)?;
            let cat = t.concat(&[sl, m], 1)?;
            let r = t.reshape(cat, vec![2, 6 * 16])?;
            let s1 = t.sum(r)?;
            let s2 = t.sum(q)?;
            let sq = t.mul(s2, s2)?;
            t.add(s1, sq)
        })
        .unwrap();
        assert!(report.max_rel_err < 1e-4, "{report:?}");
    }

    #[test]
    fn replay_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut store = ParamStore::new();
        let x = store.add("x", random(&[1, 2, 16, 2], &mut rng), true);
        let mut t = Tape::new();
        let xn = t.param(&store, x);
        let f = t.spec_forward(xn, &[16]).unwrap();
        let g = t.tanh(f).unwrap();
        let l = t.sum(g).unwrap();
        assert!(t.is_topological());
        let r1 = t.replay(&store).unwrap();
        let r2 = t.replay(&store).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(&r1[l.index()], t.value(l));
    }
}
