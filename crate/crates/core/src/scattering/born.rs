use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Medium grid on `[-0.5, 0.5]^2` and the circular source/receiver set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterGeometry {
    pub n_y: usize,
    pub n_dir: usize,
    pub omega: f64,
}

impl Default for ScatterGeometry {
    fn default() -> Self {
        Self {
            n_y: 24,
            n_dir: 16,
            omega: 4.0 * PI,
        }
    }
}

impl ScatterGeometry {
    pub fn new(n_y: usize, n_dir: usize, omega: f64) -> Result<Self> {
        let g = Self { n_y, n_dir, omega };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_y < 8 {
            return Err(Error::InvalidConfig(format!("n_y must be at least 8, got {}", self.n_y)));
        }
        if self.n_dir < 4 {
            return Err(Error::InvalidConfig(format!("n_dir must be at least 4, got {}", self.n_dir)));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::InvalidConfig(format!("omega must be positive, got {}", self.omega)));
        }
        if self.omega * self.spacing() >= PI {
            return Err(Error::InvalidConfig(format!(
                "omega * spacing = {:.4} violates the Nyquist guard (< pi)",
                self.omega * self.spacing()
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n_y as f64
    }

    /// Cell area `Δy`.
    pub fn cell_area(&self) -> f64 {
        self.spacing() * self.spacing()
    }

    /// Angular step `Δθ`.
    pub fn angle_step(&self) -> f64 {
        TAU / self.n_dir as f64
    }

    /// Medium point `(i, j)`, row-major, first coordinate from `i`.
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        let h = self.spacing();
        [-0.5 + i as f64 * h, -0.5 + j as f64 * h]
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.n_y)
            .flat_map(|i| (0..self.n_y).map(move |j| (i, j)))
            .map(|(i, j)| self.point(i, j))
            .collect()
    }

    pub fn direction(&self, i: usize) -> [f64; 2] {
        let (s, c) = (self.angle_step() * i as f64).sin_cos();
        [c, s]
    }

    pub fn medium_len(&self) -> usize {
        self.n_y * self.n_y
    }

    pub fn measurement_len(&self) -> usize {
        self.n_dir * self.n_dir
    }
}

/// Real medium values on the geometry's grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Medium {
    pub n_y: usize,
    pub values: Vec<f64>,
}

/// Entry `(i, j)` (row-major) is the datum at receiver `r_i` for source `s_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub n_dir: usize,
    pub values: Vec<Complex64>,
}

/// Born operator with its phase matrix `e^{-iω(r_i - s_j)·y}` precomputed.
#[derive(Clone, Debug)]
pub struct BornOperator {
    geom: ScatterGeometry,
    phase: Vec<Complex64>,
}

impl BornOperator {
    pub fn new(geom: ScatterGeometry) -> Result<Self> {
        geom.validate()?;
        let pts = geom.points();
        let mut phase = Vec::with_capacity(geom.measurement_len() * pts.len());
        for i in 0..geom.n_dir {
            let r = geom.direction(i);
            for j in 0..geom.n_dir {
                let s = geom.direction(j);
                let k = [geom.omega * (r[0] - s[0]), geom.omega * (r[1] - s[1])];
                phase.extend(pts.iter().map(|y| Complex64::from_polar(1.0, -(k[0] * y[0] + k[1] * y[1]))));
            }
        }
        Ok(Self { geom, phase })
    }

    pub fn geometry(&self) -> &ScatterGeometry {
        &self.geom
    }

    /// `Λ_ij = Σ_y e^{-iω(r_i - s_j)·y} η(y) Δy` for a complex `η`.
    pub fn apply(&self, eta: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.geom.medium_len();
        check_len("medium", n, eta.len())?;
        let dy = self.geom.cell_area();
        Ok(self
            .phase
            .chunks_exact(n)
            .map(|row| row.iter().zip(eta).map(|(p, e)| p * e).sum::<Complex64>() * dy)
            .collect())
    }

    /// `F*Λ(y) = Σ_ij e^{+iω(r_i - s_j)·y} Λ_ij Δθ²`.
    pub fn adjoint(&self, lambda: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.geom.medium_len();
        check_len("measurement", self.geom.measurement_len(), lambda.len())?;
        let dt2 = self.geom.angle_step().powi(2);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (row, l) in self.phase.chunks_exact(n).zip(lambda) {
            for (o, p) in out.iter_mut().zip(row) {
                *o += p.conj() * l;
            }
        }
        out.iter_mut().for_each(|v| *v *= dt2);
        Ok(out)
    }

    /// `η ↦ F*Fη` for real `η`; the result is real because the source and
    /// receiver angle sets coincide.
    pub fn normal(&self, eta: &[f64]) -> Result<Vec<f64>> {
        let c: Vec<Complex64> = eta.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Ok(self.adjoint(&self.apply(&c)?)?.into_iter().map(|v| v.re).collect())
    }
}

fn check_len(what: &str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::InvalidConfig(format!("{what} needs {expected} values, got {actual}")));
    }
    Ok(())
}

pub fn born_forward(eta: &Medium, geom: &ScatterGeometry) -> Result<Measurement> {
    let op = BornOperator::new(*geom)?;
    born_forward_with(&op, eta)
}

pub fn born_forward_with(op: &BornOperator, eta: &Medium) -> Result<Measurement> {
    if eta.n_y != op.geom.n_y {
        return Err(Error::DimensionMismatch {
            expected: op.geom.n_y,
            actual: eta.n_y,
        });
    }
    let c: Vec<Complex64> = eta.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Ok(Measurement {
        n_dir: op.geom.n_dir,
        values: op.apply(&c)?,
    })
}

/// Complex image `F*Λ` on the medium grid.
pub fn born_adjoint(lambda: &Measurement, geom: &ScatterGeometry) -> Result<Vec<Complex64>> {
    if lambda.n_dir != geom.n_dir {
        return Err(Error::DimensionMismatch {
            expected: geom.n_dir,
            actual: lambda.n_dir,
        });
    }
    BornOperator::new(*geom)?.adjoint(&lambda.values)
}

#[derive(Clone, Debug)]
pub struct TikhonovResult {
    pub eta: Medium,
    pub iterations: usize,
    /// `‖(F*F + εI)η - Re F*Λ‖ / ‖Re F*Λ‖` at the returned iterate.
    pub rel_residual: f64,
    pub converged: bool,
}

pub const CG_TOL: f64 = 1e-8;
pub const CG_MAX_ITER: usize = 500;

/// Solves `(F*F + εI)η = Re F*Λ` by conjugate gradients. `F*F` is real, so
/// the real part of the complex normal equations decouples.
pub fn tikhonov_reconstruct(lambda: &Measurement, geom: &ScatterGeometry, eps: f64) -> Result<TikhonovResult> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {eps}")));
    }
    let op = BornOperator::new(*geom)?;
    let b: Vec<f64> = born_adjoint(lambda, geom)?.into_iter().map(|v| v.re).collect();
    let apply = |x: &[f64]| -> Result<Vec<f64>> {
        let mut y = op.normal(x)?;
        y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += eps * xi);
        Ok(y)
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let b_norm = dot(&b, &b).sqrt();
    let mut x = vec![0.0; b.len()];
    if b_norm == 0.0 {
        return Ok(TikhonovResult {
            eta: Medium { n_y: geom.n_y, values: x },
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        });
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    while iterations < CG_MAX_ITER && rr.sqrt() > CG_TOL * b_norm {
        let ap = apply(&p)?;
        let alpha = rr / dot(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = rr_new;
        iterations += 1;
    }
    // Recompute the residual rather than trusting the recursion.
    let ax = apply(&x)?;
    let res: Vec<f64> = ax.iter().zip(&b).map(|(a, bi)| a - bi).collect();
    let rel_residual = dot(&res, &res).sqrt() / b_norm;
    Ok(TikhonovResult {
        eta: Medium { n_y: geom.n_y, values: x },
        iterations,
        rel_residual,
        converged: rel_residual <= CG_TOL,
    })
}
