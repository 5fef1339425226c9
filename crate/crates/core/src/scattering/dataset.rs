use std::path::Path;

use num_complex::Complex64;

use super::born::{born_forward_with, BornOperator, Measurement, Medium, ScatterGeometry};
use super::data::{add_noise, add_noise_complex, gen_point_media, gen_symbol_task_1d, sample_rng, MediaRanges, SymbolKind};
use crate::error::{Error, Result};
use crate::format::{self, field};
use crate::spectral::ComplexGrid;

pub const DATASET_MAGIC: &[u8; 8] = b"PDSC1\0\0\0";

#[derive(Clone, Debug, PartialEq)]
pub struct ScatterSample {
    pub medium: Medium,
    pub measurement: Measurement,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolSample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Dataset {
    Scatter {
        geometry: ScatterGeometry,
        noise: f64,
        samples: Vec<ScatterSample>,
    },
    Symbol {
        symbol: SymbolKind,
        s: usize,
        noise: f64,
        samples: Vec<SymbolSample>,
    },
}

/// Media from independent per-sample streams; noise is added to the
/// measurement.
pub fn gen_scatter_dataset(
    geometry: ScatterGeometry,
    ranges: &MediaRanges,
    count: usize,
    seed: u64,
    noise: f64,
) -> Result<Dataset> {
    let op = BornOperator::new(geometry)?;
    let samples = (0..count)
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            let medium = gen_point_media(&mut rng, ranges, geometry.n_y);
            let mut measurement = born_forward_with(&op, &medium)?;
            measurement.values = add_noise_complex(&measurement.values, noise, &mut rng)?;
            Ok(ScatterSample { medium, measurement })
        })
        .collect::<Result<_>>()?;
    Ok(Dataset::Scatter {
        geometry,
        noise,
        samples,
    })
}

/// Symbol pairs sampled on `s` points; noise is added to the input.
pub fn gen_symbol_dataset(
    symbol: SymbolKind,
    m_gen: usize,
    s: usize,
    count: usize,
    seed: u64,
    noise: f64,
) -> Result<Dataset> {
    let samples = (0..count)
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            let f = gen_symbol_task_1d(symbol, m_gen, &mut rng)?;
            Ok(SymbolSample {
                input: add_noise(&f.input(s)?.re(), noise, &mut rng)?,
                target: f.target(s)?.re(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(Dataset::Symbol {
        symbol,
        s,
        noise,
        samples,
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Dataset::Scatter { samples, .. } => samples.len(),
            Dataset::Symbol { samples, .. } => samples.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn noise(&self) -> f64 {
        match self {
            Dataset::Scatter { noise, .. } | Dataset::Symbol { noise, .. } => *noise,
        }
    }

    /// Network input/target grids. Scattering pairs map the measurement to
    /// the medium.
    pub fn pairs(&self) -> Result<Vec<(ComplexGrid, ComplexGrid)>> {
        match self {
            Dataset::Scatter {
                geometry, samples, ..
            } => samples
                .iter()
                .map(|x| {
                    Ok((
                        ComplexGrid::new(vec![geometry.n_dir; 2], x.measurement.values.clone())?,
                        ComplexGrid::from_real(vec![geometry.n_y; 2], &x.medium.values)?,
                    ))
                })
                .collect(),
            Dataset::Symbol { s, samples, .. } => samples
                .iter()
                .map(|x| Ok((ComplexGrid::from_real(vec![*s], &x.input)?, ComplexGrid::from_real(vec![*s], &x.target)?)))
                .collect(),
        }
    }

    /// Spatial dimension of the pairs.
    pub fn dim(&self) -> usize {
        match self {
            Dataset::Scatter { .. } => 2,
            Dataset::Symbol { .. } => 1,
        }
    }

    fn manifest(&self) -> String {
        let mut lines = match self {
            Dataset::Scatter { geometry, .. } => vec![
                "kind=scatter".to_string(),
                format!("n_y={}", geometry.n_y),
                format!("n_dir={}", geometry.n_dir),
                format!("omega={}", geometry.omega),
            ],
            Dataset::Symbol { symbol, s, .. } => {
                vec!["kind=symbol".to_string(), format!("symbol={symbol}"), format!("s={s}")]
            }
        };
        lines.push(format!("count={}", self.len()));
        lines.push(format!("noise={}", self.noise()));
        lines.join("\n") + "\n"
    }
}

fn value<'a>(manifest: &'a str, key: &str) -> Result<&'a str> {
    manifest
        .lines()
        .find_map(|l| field(l, key).ok())
        .ok_or_else(|| Error::BadHeader(format!("manifest lacks `{key}`")))
}

fn parsed<T: std::str::FromStr>(manifest: &str, key: &str) -> Result<T> {
    let v = value(manifest, key)?;
    v.parse().map_err(|_| Error::BadHeader(format!("cannot parse `{key}={v}`")))
}

pub fn write_dataset(ds: &Dataset) -> Result<Vec<u8>> {
    let mut payload = Vec::new();
    match ds {
        Dataset::Scatter {
            geometry, samples, ..
        } => {
            for x in samples {
                if x.medium.values.len() != geometry.medium_len()
                    || x.measurement.values.len() != geometry.measurement_len()
                {
                    return Err(Error::InvalidConfig("sample does not match the dataset geometry".into()));
                }
                payload.extend_from_slice(&x.medium.values);
                payload.extend(x.measurement.values.iter().map(|v| v.re));
                payload.extend(x.measurement.values.iter().map(|v| v.im));
            }
        }
        Dataset::Symbol { s, samples, .. } => {
            for x in samples {
                if x.input.len() != *s || x.target.len() != *s {
                    return Err(Error::InvalidConfig("sample does not match the dataset grid".into()));
                }
                payload.extend_from_slice(&x.input);
                payload.extend_from_slice(&x.target);
            }
        }
    }
    Ok(format::encode(DATASET_MAGIC, &ds.manifest(), &payload))
}

pub fn read_dataset(bytes: &[u8]) -> Result<Dataset> {
    let (manifest, mut payload) = format::decode(DATASET_MAGIC, bytes)?;
    let count: usize = parsed(manifest, "count")?;
    let noise: f64 = parsed(manifest, "noise")?;
    let ds = match value(manifest, "kind")? {
        "scatter" => {
            let geometry = ScatterGeometry::new(
                parsed(manifest, "n_y")?,
                parsed(manifest, "n_dir")?,
                parsed(manifest, "omega")?,
            )
            .map_err(|e| Error::BadHeader(e.to_string()))?;
            let samples = (0..count)
                .map(|i| {
                    let what = format!("sample {i}");
                    let eta = payload.take(geometry.medium_len(), &what)?;
                    let re = payload.take(geometry.measurement_len(), &what)?;
                    let im = payload.take(geometry.measurement_len(), &what)?;
                    Ok(ScatterSample {
                        medium: Medium {
                            n_y: geometry.n_y,
                            values: eta,
                        },
                        measurement: Measurement {
                            n_dir: geometry.n_dir,
                            values: re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect(),
                        },
                    })
                })
                .collect::<Result<_>>()?;
            Dataset::Scatter {
                geometry,
                noise,
                samples,
            }
        }
        "symbol" => {
            let s: usize = parsed(manifest, "s")?;
            let symbol: SymbolKind = parsed(manifest, "symbol")?;
            let samples = (0..count)
                .map(|i| {
                    let what = format!("sample {i}");
                    Ok(SymbolSample {
                        input: payload.take(s, &what)?,
                        target: payload.take(s, &what)?,
                    })
                })
                .collect::<Result<_>>()?;
            Dataset::Symbol {
                symbol,
                s,
                noise,
                samples,
            }
        }
        other => return Err(Error::BadHeader(format!("unknown dataset kind `{other}`"))),
    };
    payload.finish()?;
    Ok(ds)
}

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    format::write_file(path, &write_dataset(ds)?)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    read_dataset(&std::fs::read(path)?)
}

pub fn medium_csv(m: &Medium) -> String {
    let geom_h = 1.0 / m.n_y as f64;
    let mut out = String::from("y1,y2,eta\n");
    for i in 0..m.n_y {
        for j in 0..m.n_y {
            let (y1, y2) = (-0.5 + i as f64 * geom_h, -0.5 + j as f64 * geom_h);
            out.push_str(&format!("{y1},{y2},{}\n", m.values[i * m.n_y + j]));
        }
    }
    out
}

pub fn measurement_csv(m: &Measurement) -> String {
    let mut out = String::from("receiver,source,re,im\n");
    for (idx, v) in m.values.iter().enumerate() {
        out.push_str(&format!("{},{},{},{}\n", idx / m.n_dir, idx % m.n_dir, v.re, v.im));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits_equal(a: &Dataset, b: &Dataset) -> bool {
        let flat = |d: &Dataset| -> Vec<u64> {
            match d {
                Dataset::Scatter { samples, .. } => samples
                    .iter()
                    .flat_map(|x| {
                        x.medium
                            .values
                            .iter()
                            .copied()
                            .chain(x.measurement.values.iter().flat_map(|v| [v.re, v.im]))
                            .collect::<Vec<_>>()
                    })
                    .map(f64::to_bits)
                    .collect(),
                Dataset::Symbol { samples, .. } => samples
                    .iter()
                    .flat_map(|x| x.input.iter().chain(&x.target).copied().collect::<Vec<_>>())
                    .map(f64::to_bits)
                    .collect(),
            }
        };
        flat(a) == flat(b)
    }

    #[test]
    fn scatter_roundtrip() {
        let ds = gen_scatter_dataset(ScatterGeometry::default(), &MediaRanges::default(), 10, 7, 1.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.pds");
        save_dataset(&ds, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(ds, back);
        assert!(bits_equal(&ds, &back));
    }

    #[test]
    fn symbol_roundtrip() {
        let ds = gen_symbol_dataset(SymbolKind::SmoothBand { k0: 2.5 }, 12, 48, 10, 3, 0.0).unwrap();
        let back = read_dataset(&write_dataset(&ds).unwrap()).unwrap();
        assert!(bits_equal(&ds, &back));
        assert_eq!(ds, back);
    }

    #[test]
    fn header_and_count_checks() {
        assert!(read_dataset(&[]).unwrap_err().to_string().contains("bad header"));
        let ds = gen_symbol_dataset(SymbolKind::Derivative, 8, 16, 3, 1, 0.0).unwrap();
        let bytes = write_dataset(&ds).unwrap();
        let at = bytes.windows(7).position(|w| w == b"count=3").unwrap() + 6;
        let with_count = |c: u8| {
            let mut b = bytes.clone();
            b[at] = c;
            b
        };
        assert!(matches!(read_dataset(&with_count(b'4')), Err(Error::Truncated(_))));
        assert!(matches!(read_dataset(&with_count(b'2')), Err(Error::Corrupt(_))));
    }

    #[test]
    fn csv_shapes() {
        let ds = gen_scatter_dataset(ScatterGeometry::default(), &MediaRanges::default(), 1, 2, 0.0).unwrap();
        let Dataset::Scatter { samples, .. } = ds else { unreachable!() };
        assert_eq!(medium_csv(&samples[0].medium).lines().count(), 1 + 576);
        assert_eq!(measurement_csv(&samples[0].measurement).lines().count(), 1 + 256);
    }
}
