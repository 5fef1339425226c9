use std::path::Path;

use pdiae::scattering::{ScatterGeometry, SymbolKind};
use pdiae::training::TrainConfig;
use pdiae::{Error, PdIaeConfig, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Symbol,
    Scatter,
}

/// Everything a run reads: architecture, training, data and oracle settings.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: PdIaeConfig,
    pub train: TrainConfig,
    pub task: Task,
    pub symbol: SymbolKind,
    /// Band of the generated symbol inputs.
    pub m_gen: usize,
    /// Grid of generated symbol pairs.
    pub s: usize,
    /// Number of generated samples.
    pub n: usize,
    /// Additive noise in percent of the RMS.
    pub noise: f64,
    pub data_seed: u64,
    pub geometry: ScatterGeometry,
    pub tikhonov_eps: f64,
    /// Trailing fraction of a dataset held out for testing.
    pub test_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: PdIaeConfig::default(),
            train: TrainConfig::default(),
            task: Task::Symbol,
            symbol: SymbolKind::Derivative,
            m_gen: 12,
            s: 128,
            n: 250,
            noise: 0.0,
            data_seed: 7,
            geometry: ScatterGeometry::default(),
            tikhonov_eps: 1e-3,
            test_fraction: 0.2,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidConfig(format!("`{key}`: cannot parse `{v}`")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if PdIaeConfig::is_key(key) {
            return self.model.set(key, value);
        }
        if TrainConfig::is_key(key) {
            return self.train.set(key, value);
        }
        let v = value.trim();
        match key {
            "task" => {
                self.task = match v {
                    "symbol" => Task::Symbol,
                    "scatter" => Task::Scatter,
                    _ => return Err(Error::InvalidConfig(format!("`task`: expected symbol|scatter, got `{v}`"))),
                }
            }
            "symbol" => self.symbol = v.parse()?,
            "m_gen" => self.m_gen = num(key, v)?,
            "s" => self.s = num(key, v)?,
            "n" => self.n = num(key, v)?,
            "noise" => self.noise = num(key, v)?,
            "data_seed" => self.data_seed = num(key, v)?,
            "n_y" => self.geometry.n_y = num(key, v)?,
            "n_dir" => self.geometry.n_dir = num(key, v)?,
            "omega" => self.geometry.omega = num(key, v)?,
            "tikhonov_eps" => self.tikhonov_eps = num(key, v)?,
            "test_fraction" => self.test_fraction = num(key, v)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn apply(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("expected key=value, got `{assignment}`")))?;
        self.set(k.trim(), v)
    }

    /// Applies a `key=value` file; `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            self.apply(line)
                .map_err(|e| Error::InvalidConfig(format!("line {}: {}", i + 1, strip(&e))))?;
        }
        Ok(())
    }

    /// Defaults, then the file, then the overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", p.display())))?;
            cfg.apply_text(&text)?;
        }
        for o in overrides {
            cfg.apply(o)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        self.geometry.validate()?;
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.m_gen < 2 || self.m_gen % 2 != 0 {
            return bad("`m_gen` must be even and at least 2");
        }
        if self.s <= self.m_gen {
            return bad("`s` must exceed `m_gen`");
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad("`noise` must be a non-negative percentage");
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad("`test_fraction` must lie strictly between 0 and 1");
        }
        if !(self.tikhonov_eps > 0.0) {
            return bad("`tikhonov_eps` must be positive");
        }
        let d = self.model.d;
        if let Some(g) = self.train.aug_grids.iter().chain(&self.train.eval_grids).find(|g| g.len() != d) {
            return Err(Error::InvalidConfig(format!("grid {g:?} does not have d={d} axes")));
        }
        Ok(())
    }

    /// Every key in schema order, one per line.
    pub fn to_lines(&self) -> Vec<String> {
        let mut lines = self.model.to_lines();
        lines.extend(self.train.to_lines());
        lines.extend([
            format!("task={}", if self.task == Task::Symbol { "symbol" } else { "scatter" }),
            format!("symbol={}", self.symbol),
            format!("m_gen={}", self.m_gen),
            format!("s={}", self.s),
            format!("n={}", self.n),
            format!("noise={}", self.noise),
            format!("data_seed={}", self.data_seed),
            format!("n_y={}", self.geometry.n_y),
            format!("n_dir={}", self.geometry.n_dir),
            format!("omega={}", self.geometry.omega),
            format!("tikhonov_eps={}", self.tikhonov_eps),
            format!("test_fraction={}", self.test_fraction),
        ]);
        lines
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::InvalidConfig(m) => m.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RUN_KEYS: &[&str] = &[
        "task",
        "symbol",
        "m_gen",
        "s",
        "n",
        "noise",
        "data_seed",
        "n_y",
        "n_dir",
        "omega",
        "tikhonov_eps",
        "test_fraction",
    ];

    #[test]
    fn empty_file_gives_defaults() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn flags_beat_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# run\nlr=0.01\nn=9\n").unwrap();
        let cfg = RunConfig::load(Some(&path), &["lr=0.001".into()]).unwrap();
        assert_eq!(cfg.train.lr, 0.001);
        assert_eq!(cfg.n, 9);
    }

    #[test]
    fn errors_name_the_line_and_key() {
        let mut cfg = RunConfig::default();
        let e = cfg.apply_text("n=3\nwidth=4\n").unwrap_err().to_string();
        assert!(e.contains("line 2") && e.contains("width"), "{e}");
        let e = cfg.apply_text("m=x").unwrap_err().to_string();
        assert!(e.contains("line 1") && e.contains("`m`"), "{e}");
        let mut odd = RunConfig::default();
        odd.apply_text("m=13").unwrap();
        assert!(odd.validate().unwrap_err().to_string().contains("even"));
    }

    #[test]
    fn echo_reparses_to_the_same_config() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("task=scatter\nd=2\naug_grids=16x16,24x24\nsymbol=band:3.5\nomega=6.5\n").unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&cfg.to_lines().join("\n")).unwrap();
        assert_eq!(back, cfg);
        let keys = PdIaeConfig::default().to_lines().len() + TrainConfig::default().to_lines().len() + RUN_KEYS.len();
        assert_eq!(cfg.to_lines().len(), keys);
    }
}
