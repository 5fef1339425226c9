use std::fmt;

use crate::error::{Error, Result};
use crate::pd::ChannelKind;

/// Encoder/decoder family used inside every block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockType {
    Pd,
    Dense,
}

impl fmt::Display for BlockType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockType::Pd => "pd",
            BlockType::Dense => "dense",
        })
    }
}

/// Architecture hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct PdIaeConfig {
    /// Spatial dimension, 1 or 2.
    pub d: usize,
    /// Number of blocks `L`.
    pub blocks: usize,
    /// Symbol rank `K`.
    pub rank: usize,
    /// Retained modes per axis `m` (even).
    pub modes: usize,
    /// Channel width `c`.
    pub width: usize,
    /// Hidden widths of the mid network; `None` means two layers of `2cM`.
    pub mid_hidden: Option<Vec<usize>>,
    /// Hidden widths of the decoder coordinate networks.
    pub coord_hidden: Vec<usize>,
    pub channels: Vec<ChannelKind>,
    pub block: BlockType,
    /// Feed periodic coordinate channels into the lift.
    pub coord_channels: bool,
    pub seed: u64,
}

impl Default for PdIaeConfig {
    fn default() -> Self {
        Self {
            d: 1,
            blocks: 4,
            rank: 3,
            modes: 12,
            width: 8,
            mid_hidden: None,
            coord_hidden: vec![32, 32],
            channels: vec![ChannelKind::Identity, ChannelKind::Fourier],
            block: BlockType::Pd,
            coord_channels: true,
            seed: 1729,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "d",
    "L",
    "K",
    "m",
    "c",
    "mid_hidden",
    "coord_hidden",
    "channels",
    "block",
    "coord_channels",
    "seed",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("`{key}`: cannot parse `{value}` as a number")))
}

pub(crate) fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    let v = value.trim();
    if v.is_empty() {
        return Ok(vec![]);
    }
    v.split(',').map(|p| parse_num(key, p)).collect()
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl PdIaeConfig {
    pub fn latent_len(&self) -> usize {
        self.modes.pow(self.d as u32)
    }

    pub fn modes_vec(&self) -> Vec<usize> {
        vec![self.modes; self.d]
    }

    pub fn mid_hidden_widths(&self) -> Vec<usize> {
        self.mid_hidden.clone().unwrap_or_else(|| {
            let io = 2 * self.width * self.latent_len();
            vec![io, io]
        })
    }

    /// Channels entering the lift: the input value and, optionally,
    /// `(cos, sin)` of every coordinate.
    pub fn lift_inputs(&self) -> usize {
        1 + if self.coord_channels { 2 * self.d } else { 0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(1..=2).contains(&self.d) {
            return bad(format!("`d` must be 1 or 2, got {}", self.d));
        }
        if self.blocks < 1 {
            return bad("`L` must be at least 1".into());
        }
        if self.rank < 1 {
            return bad("`K` must be at least 1".into());
        }
        if self.modes < 2 || self.modes % 2 != 0 {
            return bad(format!(
                "`m` must be even and at least 2 (the retained band is symmetric), got {}",
                self.modes
            ));
        }
        if self.width < 1 {
            return bad("`c` must be at least 1".into());
        }
        if self.channels.is_empty() {
            return bad("`channels` must name at least one channel".into());
        }
        if self.mid_hidden.iter().flatten().chain(&self.coord_hidden).any(|&w| w == 0) {
            return bad("hidden widths must be positive".into());
        }
        Ok(())
    }

    pub fn is_key(key: &str) -> bool {
        CONFIG_KEYS.contains(&key)
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "d" => self.d = parse_num(key, v)?,
            "L" => self.blocks = parse_num(key, v)?,
            "K" => self.rank = parse_num(key, v)?,
            "m" => self.modes = parse_num(key, v)?,
            "c" => self.width = parse_num(key, v)?,
            "mid_hidden" => {
                self.mid_hidden = if v == "auto" { None } else { Some(parse_list(key, v)?) }
            }
            "coord_hidden" => self.coord_hidden = parse_list(key, v)?,
            "channels" => {
                self.channels = v
                    .split(',')
                    .map(|c| ChannelKind::parse(c.trim()))
                    .collect::<Result<_>>()?
            }
            "block" => {
                self.block = match v {
                    "pd" => BlockType::Pd,
                    "dense" => BlockType::Dense,
                    _ => return Err(Error::InvalidConfig(format!("`block`: expected pd|dense, got `{v}`"))),
                }
            }
            "coord_channels" => {
                self.coord_channels = v
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("`coord_channels`: expected true|false, got `{v}`")))?
            }
            "seed" => self.seed = parse_num(key, v)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn to_lines(&self) -> Vec<String> {
        vec![
            format!("d={}", self.d),
            format!("L={}", self.blocks),
            format!("K={}", self.rank),
            format!("m={}", self.modes),
            format!("c={}", self.width),
            format!(
                "mid_hidden={}",
                self.mid_hidden.as_ref().map_or_else(|| "auto".to_string(), |h| join(h))
            ),
            format!("coord_hidden={}", join(&self.coord_hidden)),
            format!(
                "channels={}",
                self.channels.iter().map(|c| c.name()).collect::<Vec<_>>().join(",")
            ),
            format!("block={}", self.block),
            format!("coord_channels={}", self.coord_channels),
            format!("seed={}", self.seed),
        ]
    }

    /// Reads `key=value` lines; blank lines and `#` comments are skipped.
    pub fn from_lines<'a>(lines: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, line) in lines.into_iter().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key=value", i + 1)))?;
            cfg.set(k.trim(), v)
                .map_err(|e| Error::InvalidConfig(format!("line {}: {e}", i + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
