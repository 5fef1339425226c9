use std::fs;
use std::path::{Path, PathBuf};

use pdiae::baselines::{bench_block, bench_csv, BenchSetup, BlockKind};
use pdiae::network::{
    checkpoint_manifest, param_count, read_checkpoint, save_checkpoint, BlockType, PdIaeModel, CHECKPOINT_MAGIC,
};
use pdiae::scattering::{
    gen_scatter_dataset, gen_symbol_dataset, load_dataset, measurement_csv, medium_csv, save_dataset,
    tikhonov_reconstruct, Dataset, MediaRanges, DATASET_MAGIC,
};
use pdiae::training::{avg_relative_error, log_csv, predict_normalized, train_loop_with, NormStats};
use pdiae::{Error, Result};
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, Task};
use crate::svg;
use crate::{Bench, Eval, GenData, Inspect, Oracle, Train};

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn magic_name(m: &[u8; 8]) -> String {
    String::from_utf8_lossy(m).trim_end_matches('\0').to_string()
}

fn manifest_text(command: &str, cfg: &RunConfig, extra: &[String]) -> String {
    let mut lines = vec![
        format!("# pdiae {} {command}", env!("CARGO_PKG_VERSION")),
        format!(
            "# formats checkpoint={} dataset={}",
            magic_name(CHECKPOINT_MAGIC),
            magic_name(DATASET_MAGIC)
        ),
    ];
    lines.extend(extra.iter().map(|l| format!("# {l}")));
    lines.extend(cfg.to_lines());
    lines.join("\n") + "\n"
}

/// Writes `<out>.manifest`: a header plus the full config, which can be fed
/// back through `--config`.
fn write_manifest(out: &Path, command: &str, cfg: &RunConfig, extra: &[String]) -> Result<()> {
    let text = manifest_text(command, cfg, extra);
    eprint!("{text}");
    fs::write(with_suffix(out, ".manifest"), text)?;
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn check_dim(cfg: &RunConfig, ds: &Dataset) -> Result<()> {
    if cfg.model.d != ds.dim() {
        return Err(Error::InvalidConfig(format!(
            "`d`={} but the dataset is {}-dimensional",
            cfg.model.d,
            ds.dim()
        )));
    }
    Ok(())
}

pub fn gen_data(mut cfg: RunConfig, a: GenData) -> Result<()> {
    if let Some(t) = &a.task {
        cfg.set("task", t)?;
    }
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(s) = a.seed {
        cfg.data_seed = s;
    }
    if let Some(p) = a.noise {
        cfg.noise = p;
    }
    cfg.validate()?;
    let ds = match cfg.task {
        Task::Symbol => gen_symbol_dataset(cfg.symbol, cfg.m_gen, cfg.s, cfg.n, cfg.data_seed, cfg.noise)?,
        Task::Scatter => gen_scatter_dataset(cfg.geometry, &MediaRanges::default(), cfg.n, cfg.data_seed, cfg.noise)?,
    };
    save_dataset(&ds, &a.out)?;
    eprintln!("wrote {} samples to {}", ds.len(), a.out.display());
    if a.csv {
        match &ds {
            Dataset::Scatter { samples, .. } => {
                if let Some(x) = samples.first() {
                    write(&with_suffix(&a.out, ".medium0.csv"), &medium_csv(&x.medium))?;
                    write(&with_suffix(&a.out, ".measurement0.csv"), &measurement_csv(&x.measurement))?;
                }
            }
            Dataset::Symbol { s, samples, .. } => {
                if let Some(x) = samples.first() {
                    let mut text = String::from("x,input,target\n");
                    for j in 0..*s {
                        text.push_str(&format!("{},{},{}\n", j as f64 / *s as f64, x.input[j], x.target[j]));
                    }
                    write(&with_suffix(&a.out, ".sample0.csv"), &text)?;
                }
            }
        }
    }
    write_manifest(&a.out, "gen-data", &cfg, &[])
}

pub fn train(mut cfg: RunConfig, a: Train) -> Result<()> {
    if let Some(m) = a.max_steps {
        cfg.train.max_steps = Some(m);
    }
    cfg.validate()?;
    let ds = load_dataset(&a.data)?;
    check_dim(&cfg, &ds)?;
    let pairs = ds.pairs()?;
    let n_test = ((pairs.len() as f64 * cfg.test_fraction).round() as usize).max(1);
    if n_test >= pairs.len() {
        return Err(Error::EmptySplit("train"));
    }
    let (train, test) = pairs.split_at(pairs.len() - n_test);
    let mut model = PdIaeModel::new(cfg.model.clone())?;
    eprintln!("training on {} pairs, testing on {}", train.len(), test.len());
    let report = train_loop_with(&mut model, train, test, &cfg.train, |e| {
        eprintln!(
            "epoch {:4}  loss {:.4e}  test {:.4e}  lr {:.2e}",
            e.epoch, e.train_loss, e.test_rel_err, e.lr
        )
    })?;
    save_checkpoint(&model, Some(&report.stats), &a.out)?;
    eprintln!("wrote {}", a.out.display());
    let log_path = a.log.unwrap_or_else(|| with_suffix(&a.out, ".log.csv"));
    write(&log_path, &log_csv(&report.log))?;
    let pts: Vec<(f64, f64)> = report.log.iter().map(|e| (e.epoch as f64, e.test_rel_err)).collect();
    write(
        &with_suffix(&log_path, ".svg"),
        &svg::line_plot("test relative error", "epoch", "rel err", &pts, true),
    )?;
    println!(
        "best_test_rel_err={} best_epoch={} steps={} stop={:?}",
        report.best_test_err, report.best_epoch, report.steps, report.stop
    );
    let extra = [
        format!("data={}", a.data.display()),
        format!("best_test_rel_err={} best_epoch={}", report.best_test_err, report.best_epoch),
        format!("steps={} aborted_steps={} stop={:?}", report.steps, report.aborted_steps, report.stop),
    ];
    write_manifest(&a.out, "train", &cfg, &extra)
}

pub fn eval(mut cfg: RunConfig, a: Eval) -> Result<()> {
    if let Some(g) = &a.grids {
        cfg.set("eval_grids", g)?;
    }
    let bytes = fs::read(&a.ckpt)?;
    let before = sha256_hex(&bytes);
    let ck = read_checkpoint(&bytes)?;
    drop(bytes);
    // The architecture comes from the checkpoint.
    cfg.model = ck.model.config().clone();
    // Grids of the wrong dimension that nobody asked for fall back to the
    // dataset grid. Augmentation is unused here.
    if a.grids.is_none() && cfg.train.eval_grids.iter().any(|g| g.len() != cfg.model.d) {
        cfg.train.eval_grids.clear();
    }
    cfg.train.lambda = 0.0;
    cfg.train.aug_grids.clear();
    cfg.validate()?;
    let ds = load_dataset(&a.data)?;
    check_dim(&cfg, &ds)?;
    let pairs = ds.pairs()?;
    let grids = if cfg.train.eval_grids.is_empty() {
        vec![pairs[0].1.sizes().to_vec()]
    } else {
        cfg.train.eval_grids.clone()
    };
    let norm = ck.norm.unwrap_or_else(NormStats::identity);
    let report = avg_relative_error(|x, g| predict_normalized(&ck.model, &norm, x, g), &pairs, &grids)?;
    let mut csv = String::from("grid,rel_err\n");
    for (g, e) in &report.per_grid {
        let name: Vec<String> = g.iter().map(|n| n.to_string()).collect();
        csv.push_str(&format!("{},{e}\n", name.join("x")));
    }
    csv.push_str(&format!("average,{}\n", report.mean));
    if report.skipped > 0 {
        eprintln!("skipped {} zero-norm targets", report.skipped);
    }
    let after = sha256_hex(&fs::read(&a.ckpt)?);
    if after != before {
        return Err(Error::Corrupt(format!("checkpoint {} changed during eval", a.ckpt.display())));
    }
    let extra = [
        format!("ckpt={} sha256={before}", a.ckpt.display()),
        format!("data={}", a.data.display()),
    ];
    match &a.out {
        Some(out) => {
            write(out, &csv)?;
            let pts: Vec<(f64, f64)> = report.per_grid.iter().map(|(g, e)| (g[0] as f64, *e)).collect();
            write(
                &with_suffix(out, ".svg"),
                &svg::line_plot("relative error per grid", "grid size", "rel err", &pts, false),
            )?;
            write_manifest(out, "eval", &cfg, &extra)
        }
        None => {
            print!("{csv}");
            eprint!("{}", manifest_text("eval", &cfg, &extra));
            Ok(())
        }
    }
}

fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0
}

pub fn oracle(mut cfg: RunConfig, a: Oracle) -> Result<()> {
    if let Some(e) = a.eps {
        cfg.tikhonov_eps = e;
    }
    cfg.validate()?;
    let Dataset::Scatter { geometry, samples, .. } = load_dataset(&a.data)? else {
        return Err(Error::InvalidConfig("oracle needs a scattering dataset".into()));
    };
    let sample = samples.get(a.index).ok_or_else(|| {
        Error::InvalidConfig(format!("index {} out of range for {} samples", a.index, samples.len()))
    })?;
    let res = tikhonov_reconstruct(&sample.measurement, &geometry, cfg.tikhonov_eps)?;
    let n = geometry.n_y;
    let (t, r) = (argmax(&sample.medium.values), argmax(&res.eta.values));
    let num: f64 = res.eta.values.iter().zip(&sample.medium.values).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = sample.medium.values.iter().map(|b| b * b).sum();
    println!("iterations={} converged={} rel_residual={:e}", res.iterations, res.converged, res.rel_residual);
    println!("true_argmax={},{} recon_argmax={},{}", t / n, t % n, r / n, r % n);
    println!("rel_err={}", (num / den).sqrt());
    if let Some(out) = &a.out {
        write(&with_suffix(out, ".recon.csv"), &medium_csv(&res.eta))?;
        write(&with_suffix(out, ".truth.csv"), &medium_csv(&sample.medium))?;
        write(&with_suffix(out, ".recon.svg"), &svg::heatmap("reconstruction", n, n, &res.eta.values))?;
        write(&with_suffix(out, ".truth.svg"), &svg::heatmap("medium", n, n, &sample.medium.values))?;
        let extra = [format!("data={} index={}", a.data.display(), a.index)];
        write_manifest(out, "oracle", &cfg, &extra)?;
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(what: &str, text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("{what}: cannot parse `{p}`")))
        })
        .collect()
}

pub fn bench(cfg: RunConfig, a: Bench) -> Result<()> {
    let kinds: Vec<BlockKind> = parse_list("--kinds", &a.kinds)?;
    let sizes: Vec<usize> = parse_list("--sizes", &a.sizes)?;
    let setup = BenchSetup {
        seed: cfg.model.seed,
        ..BenchSetup::default()
    };
    let mut rows = Vec::new();
    for kind in kinds {
        let r = bench_block(kind, &sizes, a.repeats, &setup)?;
        if let (Some(first), Some(last)) = (r.first(), r.last()) {
            eprintln!(
                "{kind}: time({})/time({}) = {:.2}",
                last.s,
                first.s,
                last.median_ns as f64 / first.median_ns as f64
            );
        }
        rows.extend(r);
    }
    let csv = bench_csv(&rows);
    let extra = [format!("repeats={} setup={setup:?}", a.repeats)];
    match &a.out {
        Some(out) => {
            write(out, &csv)?;
            write_manifest(out, "bench", &cfg, &extra)
        }
        None => {
            print!("{csv}");
            eprint!("{}", manifest_text("bench", &cfg, &extra));
            Ok(())
        }
    }
}

pub fn inspect(cfg: RunConfig, a: Inspect) -> Result<()> {
    let Some(path) = &a.ckpt else {
        let pd = param_count(&cfg.model);
        println!("pd-IAE parameters");
        pd.lines().iter().for_each(|l| println!("  {l}"));
        let dense = param_count(&pdiae::PdIaeConfig {
            block: BlockType::Dense,
            ..cfg.model.clone()
        });
        println!("dense-IAE parameters at equal m, K, c and widths");
        dense.lines().iter().for_each(|l| println!("  {l}"));
        return Ok(());
    };
    let bytes = fs::read(path)?;
    let ck = read_checkpoint(&bytes)?;
    println!("sha256={}", sha256_hex(&bytes));
    print!("{}", checkpoint_manifest(&bytes)?);
    let breakdown = param_count(ck.model.config());
    breakdown.lines().iter().for_each(|l| println!("{l}"));
    println!("stored values: {}", ck.model.store().total_len());
    Ok(())
}
