use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::born::Medium;
use crate::error::{Error, Result};
use crate::spectral::{fft_inverse, ComplexGrid, Spectrum};

/// Independent generator for sample `index` of a seeded run.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Sampling ranges of Gaussian point media.
#[derive(Clone, Debug, PartialEq)]
pub struct MediaRanges {
    /// Inclusive range of the number of blobs.
    pub points: (usize, usize),
    pub amplitude: (f64, f64),
    pub width: (f64, f64),
    /// Range of each center coordinate.
    pub center: (f64, f64),
}

impl Default for MediaRanges {
    fn default() -> Self {
        Self {
            points: (2, 4),
            amplitude: (0.5, 1.5),
            width: (0.02, 0.08),
            center: (-0.3, 0.3),
        }
    }
}

/// `η(y) = Σ_p A_p exp(-|y - c_p|² / (2σ_p²))` on the `n_y` medium grid;
/// blobs are `(A, σ, c_x, c_y)`.
pub fn gaussian_medium(n_y: usize, blobs: &[(f64, f64, f64, f64)]) -> Medium {
    let h = 1.0 / n_y as f64;
    let mut values = Vec::with_capacity(n_y * n_y);
    for i in 0..n_y {
        for j in 0..n_y {
            let y = [-0.5 + i as f64 * h, -0.5 + j as f64 * h];
            values.push(
                blobs
                    .iter()
                    .map(|&(a, s, cx, cy)| {
                        let r2 = (y[0] - cx).powi(2) + (y[1] - cy).powi(2);
                        a * (-r2 / (2.0 * s * s)).exp()
                    })
                    .sum(),
            );
        }
    }
    Medium { n_y, values }
}

fn draw(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

pub fn gen_point_media(rng: &mut impl Rng, ranges: &MediaRanges, n_y: usize) -> Medium {
    let (lo, hi) = ranges.points;
    let count = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let blobs: Vec<_> = (0..count)
        .map(|_| {
            let a = draw(rng, ranges.amplitude);
            let s = draw(rng, ranges.width);
            let cx = draw(rng, ranges.center);
            let cy = draw(rng, ranges.center);
            (a, s, cx, cy)
        })
        .collect();
    gaussian_medium(n_y, &blobs)
}

/// Symbols applied exactly in the spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SymbolKind {
    /// `2πik`
    Derivative,
    /// `2π|k|`
    AbsXi,
    /// `exp(-(k/k0)²)`
    SmoothBand { k0: f64 },
}

impl SymbolKind {
    pub fn symbol(&self, k: i64) -> Complex64 {
        let kf = k as f64;
        match *self {
            SymbolKind::Derivative => Complex64::new(0.0, TAU * kf),
            SymbolKind::AbsXi => Complex64::new(TAU * kf.abs(), 0.0),
            SymbolKind::SmoothBand { k0 } => Complex64::new((-(kf / k0).powi(2)).exp(), 0.0),
        }
    }
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolKind::Derivative => f.write_str("derivative"),
            SymbolKind::AbsXi => f.write_str("abs_xi"),
            SymbolKind::SmoothBand { k0 } => write!(f, "band:{k0}"),
        }
    }
}

impl FromStr for SymbolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "derivative" => Ok(SymbolKind::Derivative),
            "abs_xi" => Ok(SymbolKind::AbsXi),
            "band" => Ok(SymbolKind::SmoothBand { k0: 3.0 }),
            other => match other.strip_prefix("band:").map(str::parse::<f64>) {
                Some(Ok(k0)) if k0 > 0.0 => Ok(SymbolKind::SmoothBand { k0 }),
                _ => Err(Error::InvalidConfig(format!(
                    "unknown symbol `{other}` (expected derivative|abs_xi|band[:k0])"
                ))),
            },
        }
    }
}

/// A random real trigonometric polynomial and a symbol acting on it; both
/// can be sampled on any grid finer than the band.
#[derive(Clone, Debug)]
pub struct SymbolFunction {
    pub kind: SymbolKind,
    pub coeffs: Spectrum,
}

impl SymbolFunction {
    pub fn m_gen(&self) -> usize {
        self.coeffs.modes()[0]
    }

    fn check(&self, s: usize) -> Result<()> {
        if s <= self.m_gen() {
            return Err(Error::GridTooSmall {
                sizes: vec![s],
                required: vec![self.m_gen() + 1],
            });
        }
        Ok(())
    }

    pub fn input(&self, s: usize) -> Result<ComplexGrid> {
        self.check(s)?;
        fft_inverse(&self.coeffs, &[s])
    }

    pub fn target_spectrum(&self) -> Spectrum {
        let h = (self.m_gen() / 2) as i64;
        let mut out = self.coeffs.clone();
        for k in -h..h {
            out.set_coeff(&[k], self.kind.symbol(k) * self.coeffs.coeff(&[k]))
                .expect("in band");
        }
        out
    }

    pub fn target(&self, s: usize) -> Result<ComplexGrid> {
        self.check(s)?;
        fft_inverse(&self.target_spectrum(), &[s])
    }
}

/// Coefficients `c_k ~ CN(0,1) (1+|k|)^-2` for `|k| < m_gen/2`, Hermitian so
/// the function is real.
pub fn gen_symbol_task_1d(kind: SymbolKind, m_gen: usize, rng: &mut impl Rng) -> Result<SymbolFunction> {
    if m_gen < 2 || m_gen % 2 != 0 {
        return Err(Error::InvalidConfig(format!("m_gen must be even and at least 2, got {m_gen}")));
    }
    let mut coeffs = Spectrum::zeros(vec![m_gen])?;
    let h = (m_gen / 2) as i64;
    coeffs.set_coeff(&[0], Complex64::new(normal(rng), 0.0))?;
    for k in 1..h {
        let decay = (1.0 + k as f64).powi(-2);
        let c = Complex64::new(normal(rng), normal(rng)) * (decay / 2f64.sqrt());
        coeffs.set_coeff(&[k], c)?;
        coeffs.set_coeff(&[-k], c.conj())?;
    }
    Ok(SymbolFunction { kind, coeffs })
}

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Additive Gaussian noise with standard deviation `p%` of the RMS.
pub fn add_noise(values: &[f64], percent: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    check_percent(percent)?;
    if percent == 0.0 {
        return Ok(values.to_vec());
    }
    let sigma = percent / 100.0 * rms(values.iter().copied());
    Ok(values
        .iter()
        .map(|v| {
            v + sigma * normal(rng)
        })
        .collect())
}

/// Complex version: `E|g|² = σ²` with `σ = p% · RMS|z|`.
pub fn add_noise_complex(values: &[Complex64], percent: f64, rng: &mut impl Rng) -> Result<Vec<Complex64>> {
    check_percent(percent)?;
    if percent == 0.0 {
        return Ok(values.to_vec());
    }
    let sigma = percent / 100.0 * rms(values.iter().map(|v| v.norm())) / 2f64.sqrt();
    Ok(values
        .iter()
        .map(|v| {
            let (a, b) = (normal(rng), normal(rng));
            v + Complex64::new(a, b) * sigma
        })
        .collect())
}

fn check_percent(p: f64) -> Result<()> {
    if !(p >= 0.0 && p.is_finite()) {
        return Err(Error::InvalidConfig(format!("noise percent must be non-negative, got {p}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn media_examples() {
        let mut rng = sample_rng(1, 0);
        let none = gen_point_media(
            &mut rng,
            &MediaRanges {
                points: (0, 0),
                ..MediaRanges::default()
            },
            24,
        );
        assert!(none.values.iter().all(|&v| v == 0.0));
        let one = gaussian_medium(24, &[(1.0, 0.05, 0.0, 0.0)]);
        let max = one.values.iter().copied().fold(f64::MIN, f64::max);
        assert_eq!(one.values[12 * 24 + 12], 1.0);
        assert_eq!(max, 1.0);
        let a = gen_point_media(&mut sample_rng(9, 3), &MediaRanges::default(), 24);
        let b = gen_point_media(&mut sample_rng(9, 3), &MediaRanges::default(), 24);
        assert_eq!(a, b);
        let c = gen_point_media(&mut sample_rng(9, 4), &MediaRanges::default(), 24);
        assert_ne!(a, c);
    }

    #[test]
    fn derivative_of_eigenfunction_and_constant() {
        let mut coeffs = Spectrum::zeros(vec![8]).unwrap();
        coeffs.set_coeff(&[1], Complex64::new(1.0, 0.0)).unwrap();
        let f = SymbolFunction {
            kind: SymbolKind::Derivative,
            coeffs,
        };
        let (input, target) = (f.input(32).unwrap(), f.target(32).unwrap());
        for (a, b) in input.values().iter().zip(target.values()) {
            assert!((b - Complex64::new(0.0, TAU) * a).norm() < 1e-12);
        }
        let mut c = Spectrum::zeros(vec![8]).unwrap();
        c.set_coeff(&[0], Complex64::new(2.5, 0.0)).unwrap();
        let f = SymbolFunction {
            kind: SymbolKind::Derivative,
            coeffs: c,
        };
        assert!(f.target(16).unwrap().values().iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let f = gen_symbol_task_1d(SymbolKind::Derivative, 12, &mut sample_rng(2, 0)).unwrap();
        let s = 1024;
        let u = f.input(s).unwrap().re();
        let t = f.target(s).unwrap().re();
        let fd: Vec<f64> = (0..s)
            .map(|j| (u[(j + 1) % s] - u[(j + s - 1) % s]) * s as f64 / 2.0)
            .collect();
        let num: f64 = fd.iter().zip(&t).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = t.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(num / den < 1e-3, "{}", num / den);
        assert!(f.input(s).unwrap().im().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn noise_statistics() {
        let mut rng = sample_rng(3, 0);
        let x: Vec<f64> = (0..10_000).map(|i| (i as f64 * 0.01).sin() + 0.5).collect();
        assert_eq!(add_noise(&x, 0.0, &mut rng).unwrap(), x);
        let y = add_noise(&x, 1.0, &mut sample_rng(4, 0)).unwrap();
        let y2 = add_noise(&x, 1.0, &mut sample_rng(4, 0)).unwrap();
        assert_eq!(y, y2);
        let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64).sqrt();
        let want = 0.01 * rms(x.iter().copied());
        assert!((sd / want - 1.0).abs() < 0.1, "{sd} vs {want}");

        let z: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, -v)).collect();
        let w = add_noise_complex(&z, 1.0, &mut sample_rng(5, 0)).unwrap();
        let e = (w.iter().zip(&z).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / z.len() as f64).sqrt();
        let want = 0.01 * rms(z.iter().map(|v| v.norm()));
        assert!((e / want - 1.0).abs() < 0.1, "{e} vs {want}");
        assert!(add_noise(&x, -1.0, &mut rng).is_err());
    }
}
