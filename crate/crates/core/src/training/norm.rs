use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::ComplexGrid;

/// Range of one tensor role. Complex values use the range of their real and
/// imaginary components together and map through `z -> (z - min) / (max - min)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut it = values.into_iter().peekable();
        if it.peek().is_none() {
            return Err(Error::EmptySplit("normalization statistics"));
        }
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in it {
            if !v.is_finite() {
                return Err(Error::NonFinite("normalization statistics".into()));
            }
            min = min.min(v);
            max = max.max(v);
        }
        Ok(Self { min, max })
    }

    /// Real-valued grids (every imaginary part zero) use their real parts
    /// only.
    pub fn of_grids<'a>(grids: impl IntoIterator<Item = &'a ComplexGrid> + Clone) -> Result<Self> {
        let real = grids.clone().into_iter().all(|g| g.values().iter().all(|v| v.im == 0.0));
        Self::of(grids.into_iter().flat_map(|g| {
            g.values()
                .iter()
                .flat_map(move |v| std::iter::once(v.re).chain((!real).then_some(v.im)))
        }))
    }

    /// A constant role is passed through unchanged.
    pub fn is_constant(&self) -> bool {
        self.max == self.min
    }

    pub fn normalize(&self, z: Complex64) -> Complex64 {
        if self.is_constant() {
            z
        } else {
            (z - self.min) / (self.max - self.min)
        }
    }

    pub fn denormalize(&self, z: Complex64) -> Complex64 {
        if self.is_constant() {
            z
        } else {
            z * (self.max - self.min) + self.min
        }
    }

    pub fn normalize_grid(&self, g: &ComplexGrid) -> ComplexGrid {
        self.map(g, |z| self.normalize(z))
    }

    pub fn denormalize_grid(&self, g: &ComplexGrid) -> ComplexGrid {
        self.map(g, |z| self.denormalize(z))
    }

    fn map(&self, g: &ComplexGrid, f: impl Fn(Complex64) -> Complex64) -> ComplexGrid {
        let mut out = g.clone();
        out.values_mut().iter_mut().for_each(|z| *z = f(*z));
        out
    }
}

/// Min-max statistics of the training inputs and targets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormStats {
    pub input: MinMax,
    pub output: MinMax,
}

impl NormStats {
    /// Statistics of a training split.
    pub fn fit(pairs: &[(ComplexGrid, ComplexGrid)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptySplit("train"));
        }
        Ok(Self {
            input: MinMax::of_grids(pairs.iter().map(|p| &p.0))?,
            output: MinMax::of_grids(pairs.iter().map(|p| &p.1))?,
        })
    }

    /// Leaves every value unchanged.
    pub fn identity() -> Self {
        let id = MinMax { min: 0.0, max: 0.0 };
        Self { input: id, output: id }
    }

    pub fn normalize_pairs(&self, pairs: &[(ComplexGrid, ComplexGrid)]) -> Vec<(ComplexGrid, ComplexGrid)> {
        pairs
            .iter()
            .map(|(f, g)| (self.input.normalize_grid(f), self.output.normalize_grid(g)))
            .collect()
    }

    pub fn to_lines(&self) -> Vec<String> {
        vec![
            format!("input_min={}", self.input.min),
            format!("input_max={}", self.input.max),
            format!("output_min={}", self.output.min),
            format!("output_max={}", self.output.max),
        ]
    }

    pub fn from_lines<'a>(lines: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut vals = [None; 4];
        const KEYS: [&str; 4] = ["input_min", "input_max", "output_min", "output_max"];
        for line in lines.into_iter().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("normalization: expected key=value, got `{line}`")))?;
            let i = KEYS
                .iter()
                .position(|&key| key == k.trim())
                .ok_or_else(|| Error::InvalidConfig(format!("normalization: unknown key `{k}`")))?;
            vals[i] = Some(
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("normalization: bad value `{v}`")))?,
            );
        }
        let get = |i: usize| vals[i].ok_or_else(|| Error::InvalidConfig(format!("normalization: missing `{}`", KEYS[i])));
        Ok(Self {
            input: MinMax { min: get(0)?, max: get(1)? },
            output: MinMax { min: get(2)?, max: get(3)? },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_point_range() {
        let s = MinMax::of([2.0, 4.0]).unwrap();
        assert_eq!(s.normalize(Complex64::new(2.0, 0.0)), Complex64::new(0.0, 0.0));
        assert_eq!(s.normalize(Complex64::new(4.0, 0.0)), Complex64::new(1.0, 0.0));
        // Outside the training range is not clamped.
        assert_eq!(s.normalize(Complex64::new(6.0, 0.0)).re, 2.0);
    }

    #[test]
    fn constant_passes_through() {
        let g = ComplexGrid::constant(vec![8], Complex64::new(3.0, 0.0)).unwrap();
        let s = MinMax::of_grids([&g]).unwrap();
        assert!(s.is_constant());
        assert_eq!(s.normalize_grid(&g), g);
    }

    #[test]
    fn roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let vals = (0..64).map(|_| Complex64::new(rng.random_range(-3.0..5.0), rng.random_range(-1.0..1.0)));
        let g = ComplexGrid::new(vec![64], vals.collect()).unwrap();
        let s = MinMax::of_grids([&g]).unwrap();
        let back = s.denormalize_grid(&s.normalize_grid(&g));
        let err = g.values().iter().zip(back.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-14, "{err}");
    }

    #[test]
    fn lines_roundtrip() {
        let s = NormStats {
            input: MinMax { min: -0.1, max: 1.0 / 3.0 },
            output: MinMax { min: 2.5, max: 7e-3 },
        };
        let lines = s.to_lines();
        assert_eq!(NormStats::from_lines(lines.iter().map(String::as_str)).unwrap(), s);
    }
}
