//! Grid-size-invariant Fourier machinery.
//!
//! Grids sample a function on the uniform lattice `x_j = j / s` over `[0,1)^d`
//! (row-major, last axis fastest). Spectra hold centered coefficients, i.e.
//! along an axis with `n` modes the entry at index `j` is the coefficient of
//! wavenumber `k = j - floor(n/2)`, so the retained band is
//! `k in [-floor(n/2), ceil(n/2) - 1]`.
//!
//! The forward transform carries the `1/N` factor, which makes a coefficient
//! approximate `∫ a(x) e^{-2πi k·x} dx` independently of the sampling density.
//! The inverse transform is the plain synthesis sum.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Unnormalized DFT along every grid axis, applied to each grid in a batch
/// of consecutive grids with the given `sizes`.
pub(crate) fn dft_in_place(buf: &mut [Complex64], sizes: &[usize], inverse: bool) {
    let n: usize = sizes.iter().product();
    debug_assert!(n > 0 && buf.len() % n == 0);
    for (axis, &len) in sizes.iter().enumerate() {
        if len <= 1 {
            continue;
        }
        let fft = plan(len, inverse);
        let stride: usize = sizes[axis + 1..].iter().product();
        if stride == 1 {
            fft.process(buf);
            continue;
        }
        let outer = buf.len() / (len * stride);
        let mut lanes = vec![Complex64::new(0.0, 0.0); buf.len()];
        let mut lane = 0;
        for o in 0..outer {
            let base = o * len * stride;
            for i in 0..stride {
                for t in 0..len {
                    lanes[lane * len + t] = buf[base + t * stride + i];
                }
                lane += 1;
            }
        }
        fft.process(&mut lanes);
        let mut lane = 0;
        for o in 0..outer {
            let base = o * len * stride;
            for i in 0..stride {
                for t in 0..len {
                    buf[base + t * stride + i] = lanes[lane * len + t];
                }
                lane += 1;
            }
        }
    }
}

/// Standard FFT order -> centered order (`to_centered`) or back.
pub(crate) fn recenter(src: &[Complex64], sizes: &[usize], to_centered: bool) -> Vec<Complex64> {
    let n: usize = sizes.iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    let strides = strides(sizes);
    let shifts: Vec<usize> = sizes
        .iter()
        .map(|&len| if to_centered { len / 2 } else { len - len / 2 })
        .collect();
    for (b, chunk) in src.chunks_exact(n).enumerate() {
        let dst = &mut out[b * n..(b + 1) * n];
        for (flat, v) in chunk.iter().enumerate() {
            let mut target = 0;
            let mut rem = flat;
            for (ax, &len) in sizes.iter().enumerate() {
                let idx = rem / strides[ax];
                rem %= strides[ax];
                target += ((idx + shifts[ax]) % len) * strides[ax];
            }
            dst[target] = *v;
        }
    }
    out
}

pub(crate) fn strides(sizes: &[usize]) -> Vec<usize> {
    let mut s = vec![1; sizes.len()];
    for ax in (0..sizes.len().saturating_sub(1)).rev() {
        s[ax] = s[ax + 1] * sizes[ax + 1];
    }
    s
}

/// Moves centered coefficients between bands of different size, dropping
/// wavenumbers outside the target band and zero-filling new ones. Truncation
/// and zero padding are the two special cases; `resize_band(from, to)` is the
/// exact adjoint of `resize_band(to, from)`.
pub(crate) fn resize_band(src: &[Complex64], from: &[usize], to: &[usize]) -> Vec<Complex64> {
    let n_from: usize = from.iter().product();
    let n_to: usize = to.iter().product();
    let batch = src.len() / n_from;
    // Per-axis source index for every destination index.
    let maps: Vec<Vec<Option<usize>>> = from
        .iter()
        .zip(to)
        .map(|(&f, &t)| {
            (0..t)
                .map(|j| {
                    let k = j as i64 - (t / 2) as i64;
                    let src_j = k + (f / 2) as i64;
                    (src_j >= 0 && src_j < f as i64).then_some(src_j as usize)
                })
                .collect()
        })
        .collect();
    let s_from = strides(from);
    let s_to = strides(to);
    let mut out = vec![Complex64::new(0.0, 0.0); batch * n_to];
    for flat in 0..n_to {
        let mut rem = flat;
        let mut src_flat = Some(0usize);
        for ax in 0..to.len() {
            let idx = rem / s_to[ax];
            rem %= s_to[ax];
            src_flat = match (src_flat, maps[ax][idx]) {
                (Some(acc), Some(j)) => Some(acc + j * s_from[ax]),
                _ => None,
            };
        }
        if let Some(sf) = src_flat {
            for b in 0..batch {
                out[b * n_to + flat] = src[b * n_from + sf];
            }
        }
    }
    out
}

/// Centered, `1/N`-normalized forward transform of a batch of grids.
pub(crate) fn spectrum_of(values: &[Complex64], sizes: &[usize]) -> Vec<Complex64> {
    let n: usize = sizes.iter().product();
    let mut buf = values.to_vec();
    dft_in_place(&mut buf, sizes, false);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    recenter(&buf, sizes, true)
}

/// Synthesis of a batch of centered spectra onto grids of the same size.
pub(crate) fn synthesize(coeffs: &[Complex64], sizes: &[usize]) -> Vec<Complex64> {
    let mut buf = recenter(coeffs, sizes, false);
    dft_in_place(&mut buf, sizes, true);
    buf
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() || sizes.len() > 2 {
        return Err(Error::InvalidConfig(format!(
            "grid dimension must be 1 or 2, got {}",
            sizes.len()
        )));
    }
    if sizes.iter().any(|&s| s < 2) {
        return Err(Error::GridTooSmall {
            sizes: sizes.to_vec(),
            required: vec![2; sizes.len()],
        });
    }
    Ok(())
}

fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Complex samples of a function on the uniform grid over `[0,1)^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexGrid {
    sizes: Vec<usize>,
    values: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn new(sizes: Vec<usize>, values: Vec<Complex64>) -> Result<Self> {
        check_sizes(&sizes)?;
        let n: usize = sizes.iter().product();
        if values.len() != n {
            return Err(Error::BadLength {
                shape: sizes,
                expected: n,
                actual: values.len(),
            });
        }
        Ok(Self { sizes, values })
    }

    pub fn from_real(sizes: Vec<usize>, values: &[f64]) -> Result<Self> {
        Self::new(sizes, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_fn(sizes: Vec<usize>, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        check_sizes(&sizes)?;
        let values = grid_coords(&sizes).iter().map(|x| f(x)).collect();
        Ok(Self { sizes, values })
    }

    pub fn constant(sizes: Vec<usize>, value: Complex64) -> Result<Self> {
        let n = sizes.iter().product();
        Self::new(sizes, vec![value; n])
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.im).collect()
    }

    pub fn coords(&self) -> Vec<Vec<f64>> {
        grid_coords(&self.sizes)
    }

    /// Values at the points shared with a coarser grid whose sizes divide
    /// ours, i.e. every `sizes[ax] / coarse[ax]`-th sample.
    pub fn restrict(&self, coarse: &[usize]) -> Result<ComplexGrid> {
        check_dims(self.dim(), coarse.len())?;
        if self.sizes.iter().zip(coarse).any(|(&f, &c)| c == 0 || f % c != 0) {
            return Err(Error::InvalidConfig(format!(
                "grid {:?} does not nest grid {:?}",
                coarse, self.sizes
            )));
        }
        let st = strides(&self.sizes);
        let cs = strides(coarse);
        let n: usize = coarse.iter().product();
        let values = (0..n)
            .map(|flat| {
                let mut rem = flat;
                let mut idx = 0;
                for ax in 0..coarse.len() {
                    let i = rem / cs[ax];
                    rem %= cs[ax];
                    idx += i * (self.sizes[ax] / coarse[ax]) * st[ax];
                }
                self.values[idx]
            })
            .collect();
        ComplexGrid::new(coarse.to_vec(), values)
    }
}

/// Coordinates `j / s` of every point of a grid, row-major.
pub fn grid_coords(sizes: &[usize]) -> Vec<Vec<f64>> {
    let n: usize = sizes.iter().product();
    let st = strides(sizes);
    (0..n)
        .map(|flat| {
            let mut rem = flat;
            sizes
                .iter()
                .enumerate()
                .map(|(ax, &s)| {
                    let i = rem / st[ax];
                    rem %= st[ax];
                    i as f64 / s as f64
                })
                .collect()
        })
        .collect()
}

/// Wavenumbers of every entry of a centered band, row-major.
pub fn band_wavenumbers(modes: &[usize]) -> Vec<Vec<i64>> {
    let n: usize = modes.iter().product();
    let st = strides(modes);
    (0..n)
        .map(|flat| {
            let mut rem = flat;
            modes
                .iter()
                .enumerate()
                .map(|(ax, &m)| {
                    let i = rem / st[ax];
                    rem %= st[ax];
                    i as i64 - (m / 2) as i64
                })
                .collect()
        })
        .collect()
}

/// Centered, integral-normalized Fourier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    modes: Vec<usize>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(modes: Vec<usize>, coeffs: Vec<Complex64>) -> Result<Self> {
        check_sizes(&modes)?;
        let n: usize = modes.iter().product();
        if coeffs.len() != n {
            return Err(Error::BadLength {
                shape: modes,
                expected: n,
                actual: coeffs.len(),
            });
        }
        Ok(Self { modes, coeffs })
    }

    pub fn zeros(modes: Vec<usize>) -> Result<Self> {
        let n = modes.iter().product();
        Self::new(modes, vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Flat index of wavenumber `k`, if it lies inside the band.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.modes.len() {
            return None;
        }
        let st = strides(&self.modes);
        let mut flat = 0;
        for (ax, (&kk, &m)) in k.iter().zip(&self.modes).enumerate() {
            let j = kk + (m / 2) as i64;
            if j < 0 || j >= m as i64 {
                return None;
            }
            flat += j as usize * st[ax];
        }
        Some(flat)
    }

    /// Coefficient at wavenumber `k`; zero outside the band.
    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        self.index_of(k)
            .map(|i| self.coeffs[i])
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn set_coeff(&mut self, k: &[i64], value: Complex64) -> Result<()> {
        let i = self.index_of(k).ok_or_else(|| {
            Error::InvalidConfig(format!("wavenumber {k:?} outside band {:?}", self.modes))
        })?;
        self.coeffs[i] = value;
        Ok(())
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// `coeff(k) = (1/N) Σ_j g(x_j) e^{-2πi k·x_j}`, all `N` modes, centered.
pub fn fft_forward(g: &ComplexGrid) -> Spectrum {
    Spectrum {
        modes: g.sizes.clone(),
        coeffs: spectrum_of(&g.values, &g.sizes),
    }
}

/// `g(x_j) = Σ_k coeff(k) e^{2πi k·x_j}` on a grid with `sizes` at least the
/// spectrum's band; the band is zero padded first when the grid is larger.
pub fn fft_inverse(sp: &Spectrum, sizes: &[usize]) -> Result<ComplexGrid> {
    check_dims(sp.modes.len(), sizes.len())?;
    if sizes.iter().zip(&sp.modes).any(|(s, m)| s < m) {
        return Err(Error::GridTooSmall {
            sizes: sizes.to_vec(),
            required: sp.modes.clone(),
        });
    }
    let padded = resize_band(&sp.coeffs, &sp.modes, sizes);
    ComplexGrid::new(sizes.to_vec(), synthesize(&padded, sizes))
}

/// Keeps the centered band of `modes` wavenumbers per axis.
pub fn truncate(sp: &Spectrum, modes: &[usize]) -> Result<Spectrum> {
    check_dims(sp.modes.len(), modes.len())?;
    if modes.iter().any(|&m| m < 2) {
        return Err(Error::InvalidConfig(format!(
            "truncation band {modes:?} must keep at least 2 modes per axis"
        )));
    }
    if modes.iter().zip(&sp.modes).any(|(m, have)| m > have) {
        return Err(Error::InvalidConfig(format!(
            "cannot truncate {:?} modes to larger band {modes:?}",
            sp.modes
        )));
    }
    Spectrum::new(modes.to_vec(), resize_band(&sp.coeffs, &sp.modes, modes))
}

/// Zero-fills wavenumbers outside the current band up to `sizes` modes.
pub fn pad(sp: &Spectrum, sizes: &[usize]) -> Result<Spectrum> {
    check_dims(sp.modes.len(), sizes.len())?;
    if sizes.iter().zip(&sp.modes).any(|(s, m)| s < m) {
        return Err(Error::GridTooSmall {
            sizes: sizes.to_vec(),
            required: sp.modes.clone(),
        });
    }
    Spectrum::new(sizes.to_vec(), resize_band(&sp.coeffs, &sp.modes, sizes))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interp {
    Spectral,
    Bilinear,
}

impl std::str::FromStr for Interp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Interp::Spectral),
            "bilinear" => Ok(Interp::Bilinear),
            other => Err(Error::InvalidConfig(format!(
                "unknown interpolation '{other}' (expected spectral|bilinear)"
            ))),
        }
    }
}

/// Changes the resolution of a grid.
pub fn resample(g: &ComplexGrid, sizes: &[usize], method: Interp) -> Result<ComplexGrid> {
    check_dims(g.dim(), sizes.len())?;
    check_sizes(sizes)?;
    if sizes == g.sizes() {
        return Ok(g.clone());
    }
    match method {
        Interp::Spectral => {
            let coeffs = resize_band(&spectrum_of(&g.values, &g.sizes), &g.sizes, sizes);
            ComplexGrid::new(sizes.to_vec(), synthesize(&coeffs, sizes))
        }
        Interp::Bilinear => Ok(bilinear(g, sizes)),
    }
}

fn bilinear(g: &ComplexGrid, sizes: &[usize]) -> ComplexGrid {
    // Per axis: (left index, right index, weight of right).
    let stencils: Vec<Vec<(usize, usize, f64)>> = g
        .sizes
        .iter()
        .zip(sizes)
        .map(|(&src, &dst)| {
            (0..dst)
                .map(|j| {
                    let p = j as f64 * src as f64 / dst as f64;
                    let i0 = p.floor();
                    let t = p - i0;
                    let i0 = i0 as usize % src;
                    (i0, (i0 + 1) % src, t)
                })
                .collect()
        })
        .collect();
    let src_st = strides(&g.sizes);
    let dst_st = strides(sizes);
    let n: usize = sizes.iter().product();
    let d = sizes.len();
    let values = (0..n)
        .map(|flat| {
            let mut rem = flat;
            let picks: Vec<(usize, usize, f64)> = (0..d)
                .map(|ax| {
                    let i = rem / dst_st[ax];
                    rem %= dst_st[ax];
                    stencils[ax][i]
                })
                .collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for corner in 0..(1usize << d) {
                let mut idx = 0;
                let mut w = 1.0;
                for (ax, &(lo, hi, t)) in picks.iter().enumerate() {
                    if corner >> ax & 1 == 1 {
                        idx += hi * src_st[ax];
                        w *= t;
                    } else {
                        idx += lo * src_st[ax];
                        w *= 1.0 - t;
                    }
                }
                if w != 0.0 {
                    acc += g.values[idx] * w;
                }
            }
            acc
        })
        .collect();
    ComplexGrid {
        sizes: sizes.to_vec(),
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_grid(sizes: Vec<usize>, seed: u64) -> ComplexGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = sizes.iter().product();
        let v = (0..n)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        ComplexGrid::new(sizes, v).unwrap()
    }

    fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn constant_is_dc_only() {
        let g = ComplexGrid::constant(vec![8], c(1.0, 0.0)).unwrap();
        let sp = fft_forward(&g);
        for k in -4..4 {
            let want = if k == 0 { 1.0 } else { 0.0 };
            assert!((sp.coeff(&[k]) - c(want, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn pure_mode() {
        let g = ComplexGrid::from_fn(vec![16], |x| Complex64::from_polar(1.0, 2.0 * PI * 3.0 * x[0]))
            .unwrap();
        let sp = fft_forward(&g);
        for k in -8..8 {
            let want = if k == 3 { 1.0 } else { 0.0 };
            assert!((sp.coeff(&[k]) - c(want, 0.0)).norm() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn roundtrip_random() {
        let g = random_grid(vec![64], 1);
        let back = fft_inverse(&fft_forward(&g), &[64]).unwrap();
        assert!(max_err(g.values(), back.values()) < 1e-10);
        let g = random_grid(vec![12, 10], 2);
        let back = fft_inverse(&fft_forward(&g), &[12, 10]).unwrap();
        assert!(max_err(g.values(), back.values()) < 1e-10);
    }

    #[test]
    fn inverse_of_delta_and_unit_mode() {
        let mut sp = Spectrum::zeros(vec![4]).unwrap();
        sp.set_coeff(&[0], c(1.0, 0.0)).unwrap();
        for s in [4, 7, 32] {
            let g = fft_inverse(&sp, &[s]).unwrap();
            assert!(g.values().iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-15));
        }
        let mut sp = Spectrum::zeros(vec![4]).unwrap();
        sp.set_coeff(&[1], c(1.0, 0.0)).unwrap();
        let g = fft_inverse(&sp, &[4]).unwrap();
        let want = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        assert!(max_err(g.values(), &want) < 1e-15);
    }

    #[test]
    fn inverse_rejects_small_grid() {
        let sp = Spectrum::zeros(vec![12]).unwrap();
        assert!(matches!(fft_inverse(&sp, &[8]), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn bandlimited_spectrum_is_grid_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut sp = Spectrum::zeros(vec![12]).unwrap();
        for k in -6..6 {
            sp.set_coeff(&[k], c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .unwrap();
        }
        let a = truncate(&fft_forward(&fft_inverse(&sp, &[32]).unwrap()), &[12]).unwrap();
        let b = truncate(&fft_forward(&fft_inverse(&sp, &[128]).unwrap()), &[12]).unwrap();
        assert!(max_err(a.coeffs(), b.coeffs()) < 1e-11);
        assert!(max_err(a.coeffs(), sp.coeffs()) < 1e-11);
    }

    #[test]
    fn truncate_identity_and_keeps_pm1() {
        let g = random_grid(vec![8], 4);
        let sp = fft_forward(&g);
        assert_eq!(truncate(&sp, &[8]).unwrap(), sp);

        let mut sp = Spectrum::zeros(vec![8]).unwrap();
        sp.set_coeff(&[1], c(2.0, 0.0)).unwrap();
        sp.set_coeff(&[-1], c(0.0, 3.0)).unwrap();
        let t = truncate(&sp, &[4]).unwrap();
        assert_eq!(t.coeff(&[1]), c(2.0, 0.0));
        assert_eq!(t.coeff(&[-1]), c(0.0, 3.0));
        assert!(truncate(&sp, &[10]).is_err());
    }

    #[test]
    fn truncate_energy_bookkeeping() {
        let sp = fft_forward(&random_grid(vec![64], 5));
        let t = truncate(&sp, &[12]).unwrap();
        let central: f64 = (-6..6).map(|k| sp.coeff(&[k]).norm_sqr()).sum();
        assert!((t.energy() - central).abs() < 1e-15);
    }

    #[test]
    fn pad_identity_zeros_and_roundtrip() {
        let sp = fft_forward(&random_grid(vec![4], 6));
        assert_eq!(pad(&sp, &[4]).unwrap(), sp);
        let p = pad(&sp, &[8]).unwrap();
        for k in [-4, -3, 2, 3] {
            assert_eq!(p.coeff(&[k]), c(0.0, 0.0));
        }
        let sp = truncate(&fft_forward(&random_grid(vec![32], 7)), &[12]).unwrap();
        assert_eq!(truncate(&pad(&sp, &[64]).unwrap(), &[12]).unwrap(), sp);
        assert!(pad(&sp, &[10]).is_err());
    }

    #[test]
    fn parseval() {
        let g = random_grid(vec![40], 8);
        let lhs = fft_forward(&g).energy();
        let rhs: f64 = g.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / 40.0;
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn resample_constant_both_methods() {
        let g = ComplexGrid::constant(vec![6], c(2.0, -1.0)).unwrap();
        for m in [Interp::Spectral, Interp::Bilinear] {
            for s in [3, 6, 17, 32] {
                let r = resample(&g, &[s], m).unwrap();
                assert!(r.values().iter().all(|v| (v - c(2.0, -1.0)).norm() < 1e-13));
            }
        }
    }

    #[test]
    fn spectral_resample_up_down() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut sp = Spectrum::zeros(vec![8]).unwrap();
        for k in -4..4 {
            sp.set_coeff(&[k], c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .unwrap();
        }
        let g = fft_inverse(&sp, &[32]).unwrap();
        let up = resample(&g, &[64], Interp::Spectral).unwrap();
        let back = resample(&up, &[32], Interp::Spectral).unwrap();
        assert!(max_err(g.values(), back.values()) < 1e-10);
    }

    #[test]
    fn bilinear_midpoints() {
        let g = ComplexGrid::from_fn(vec![4], |x| c(x[0], 0.0)).unwrap();
        let r = resample(&g, &[8], Interp::Bilinear).unwrap();
        for j in 0..4 {
            assert_eq!(r.values()[2 * j], g.values()[j]);
            let mean = (g.values()[j] + g.values()[(j + 1) % 4]) * 0.5;
            assert!((r.values()[2 * j + 1] - mean).norm() < 1e-15);
        }
    }

    #[test]
    fn restrict_picks_shared_points() {
        let g = ComplexGrid::from_fn(vec![8, 6], |x| c(x[0], x[1])).unwrap();
        let r = g.restrict(&[4, 3]).unwrap();
        let want = ComplexGrid::from_fn(vec![4, 3], |x| c(x[0], x[1])).unwrap();
        assert!(max_err(r.values(), want.values()) < 1e-15);
        assert!(g.restrict(&[5, 3]).is_err());
    }
}
