use std::path::Path;

use super::{PdIaeConfig, PdIaeModel};
use crate::error::{Error, Result};
use crate::format::{self, field, format_shape, parse_shape};
use crate::training::NormStats;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"PDIAE1\0\0";

/// A model with the normalization it was trained under, if any.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub model: PdIaeModel,
    pub norm: Option<NormStats>,
}

/// Serializes a model: config lines, an optional `norm` line, one `param`
/// line per slot, then the payloads in the same order (complex slots as a
/// re-block then an im-block).
pub fn write_checkpoint(model: &PdIaeModel, norm: Option<&NormStats>) -> Vec<u8> {
    let mut manifest = String::new();
    for line in model.config().to_lines() {
        manifest.push_str(&line);
        manifest.push('\n');
    }
    if let Some(n) = norm {
        manifest.push_str(&format!("norm {}\n", n.to_lines().join(" ")));
    }
    let mut payload = Vec::with_capacity(model.store().total_len());
    for slot in model.store().slots() {
        let shape = logical_shape(slot.value.shape(), slot.complex);
        manifest.push_str(&format!(
            "param name={} dtype=f64 shape={} complex={}\n",
            slot.name,
            format_shape(&shape),
            slot.complex
        ));
        let data = slot.value.data();
        if slot.complex {
            payload.extend(data.iter().step_by(2));
            payload.extend(data.iter().skip(1).step_by(2));
        } else {
            payload.extend_from_slice(data);
        }
    }
    format::encode(CHECKPOINT_MAGIC, &manifest, &payload)
}

fn logical_shape(stored: &[usize], complex: bool) -> Vec<usize> {
    if complex {
        stored[..stored.len() - 1].to_vec()
    } else {
        stored.to_vec()
    }
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let (manifest, mut payload) = format::decode(CHECKPOINT_MAGIC, bytes)?;
    let (params, rest): (Vec<&str>, Vec<&str>) = manifest.lines().partition(|l| l.starts_with("param "));
    let (norm, config): (Vec<&str>, Vec<&str>) = rest.into_iter().partition(|l| l.starts_with("norm "));
    let norm = match norm.as_slice() {
        [] => None,
        [line] => Some(
            NormStats::from_lines(line["norm ".len()..].split_whitespace())
                .map_err(|e| Error::Corrupt(format!("normalization line: {e}")))?,
        ),
        _ => return Err(Error::Corrupt("more than one normalization line".into())),
    };
    let config = PdIaeConfig::from_lines(config).map_err(|e| Error::Corrupt(format!("embedded config: {e}")))?;
    let mut model = PdIaeModel::new(config)?;
    if params.len() != model.store().len() {
        return Err(Error::Corrupt(format!(
            "checkpoint lists {} parameters, the embedded config builds {}",
            params.len(),
            model.store().len()
        )));
    }
    for (slot, line) in model.store_mut().slots_mut().iter_mut().zip(params) {
        let name = field(line, "name")?;
        let shape = parse_shape(field(line, "shape")?)?;
        let complex = field(line, "complex")? == "true";
        if field(line, "dtype")? != "f64" {
            return Err(Error::Corrupt(format!("unsupported dtype in `{line}`")));
        }
        let want = logical_shape(slot.value.shape(), slot.complex);
        if name != slot.name || complex != slot.complex || shape != want {
            return Err(Error::ShapeMismatch {
                op: "load_checkpoint",
                left: shape,
                right: want,
            });
        }
        let n = slot.value.len();
        let data = slot.value.data_mut();
        if complex {
            let re = payload.take(n / 2, name)?;
            let im = payload.take(n / 2, name)?;
            for (i, (r, m)) in re.into_iter().zip(im).enumerate() {
                data[2 * i] = r;
                data[2 * i + 1] = m;
            }
        } else {
            data.copy_from_slice(&payload.take(n, name)?);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("checkpoint parameter {name}")));
        }
    }
    payload.finish()?;
    Ok(Checkpoint { model, norm })
}

/// The text manifest of a checkpoint: config, normalization and one line
/// per parameter slot.
pub fn checkpoint_manifest(bytes: &[u8]) -> Result<String> {
    Ok(format::decode(CHECKPOINT_MAGIC, bytes)?.0.to_string())
}

pub fn save_checkpoint(model: &PdIaeModel, norm: Option<&NormStats>, path: &Path) -> Result<()> {
    format::write_file(path, &write_checkpoint(model, norm))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    read_checkpoint(&std::fs::read(path)?)
}
