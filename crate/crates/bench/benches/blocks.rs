use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use num_complex::Complex64;

use pdiae::baselines::{dense_block_forward, spectral_conv_node, DenseBlock, SpectralConv};
use pdiae::pd::{block_forward, ChannelKind, PdBlock};
use pdiae::spectral::{fft_forward, fft_inverse};
use pdiae::tensor::{ComplexArray, NodeId, ParamStore, RealArray, Tape};
use pdiae::{ComplexGrid, Initializer, Result};

const WIDTH: usize = 1;
const MODES: usize = 12;

type Forward = Box<dyn Fn(&mut Tape, &ParamStore, NodeId, &[usize]) -> Result<NodeId>>;

fn build(kind: &str, store: &mut ParamStore) -> Forward {
    let mut init = Initializer::new(1729);
    let io = 2 * WIDTH * MODES;
    let kinds = [ChannelKind::Identity];
    match kind {
        "pd" => {
            let b = PdBlock::new(store, &mut init, "pd", WIDTH, &[MODES], 3, &[io, io], &[32, 32], &kinds).unwrap();
            Box::new(move |t, s, x, sz| block_forward(t, s, &b, x, sz))
        }
        "dense" => {
            let b = DenseBlock::new(store, &mut init, "dense", WIDTH, &[MODES], &[io, io], &kinds).unwrap();
            Box::new(move |t, s, x, sz| dense_block_forward(t, s, &b, x, sz))
        }
        _ => {
            let b = SpectralConv::new(store, &mut init, "fno", WIDTH, &[MODES], true);
            Box::new(move |t, s, x, sz| spectral_conv_node(t, s, &b, x, sz))
        }
    }
}

fn input(s: usize) -> RealArray {
    let values = (0..WIDTH * s)
        .map(|j| Complex64::new((std::f64::consts::TAU * (j % s) as f64 / s as f64).sin(), 0.0))
        .collect();
    ComplexArray::new(vec![1, WIDTH, s], values).unwrap().to_pairs()
}

fn blocks(c: &mut Criterion) {
    let mut group = c.benchmark_group("block_forward");
    group.sample_size(10);
    for kind in ["pd", "fno", "dense"] {
        let mut store = ParamStore::new();
        let forward = build(kind, &mut store);
        let sizes: &[usize] = if kind == "dense" { &[512, 1024, 2048] } else { &[512, 4096, 32768] };
        for &s in sizes {
            let x0 = input(s);
            group.throughput(Throughput::Elements(s as u64));
            group.bench_with_input(BenchmarkId::new(kind, s), &s, |b, &s| {
                b.iter(|| {
                    let mut tape = Tape::new();
                    let x = tape.constant(x0.clone());
                    let y = forward(&mut tape, &store, x, &[s]).unwrap();
                    tape.value(y).len()
                })
            });
        }
    }
    group.finish();
}

fn fft(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft_roundtrip");
    for s in [256usize, 4096, 65536] {
        let g = ComplexGrid::from_fn(vec![s], |x| Complex64::new((40.0 * x[0]).sin(), x[0])).unwrap();
        group.throughput(Throughput::Elements(s as u64));
        group.bench_with_input(BenchmarkId::from_parameter(s), &g, |b, g| {
            b.iter(|| fft_inverse(&fft_forward(g), g.sizes()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, blocks, fft);
criterion_main!(benches);
