use crate::error::{Error, Result};
use crate::spectral::{resample, ComplexGrid, Interp};

/// `||a - a_hat|| / ||a||` over real parts; `None` when `a` is zero.
pub fn relative_error(target: &ComplexGrid, pred: &ComplexGrid) -> Option<f64> {
    let den: f64 = target.values().iter().map(|v| v.re * v.re).sum::<f64>().sqrt();
    if den == 0.0 {
        return None;
    }
    let num: f64 = target
        .values()
        .iter()
        .zip(pred.values())
        .map(|(a, b)| (a.re - b.re).powi(2))
        .sum::<f64>()
        .sqrt();
    Some(num / den)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    /// Mean over every scored (sample, grid) pair.
    pub mean: f64,
    pub per_grid: Vec<(Vec<usize>, f64)>,
    /// Pairs skipped because the target is zero.
    pub skipped: usize,
}

const EVAL_CHUNK: usize = 32;

/// Resamples every pair onto each grid, predicts with `predict` (inputs on
/// one grid in, outputs on the same grid out) and averages the relative
/// error.
pub fn avg_relative_error<P>(mut predict: P, samples: &[(ComplexGrid, ComplexGrid)], grids: &[Vec<usize>]) -> Result<ErrorReport>
where
    P: FnMut(&[ComplexGrid], &[usize]) -> Result<Vec<ComplexGrid>>,
{
    if samples.is_empty() {
        return Err(Error::EmptySplit("test"));
    }
    if grids.is_empty() {
        return Err(Error::InvalidConfig("evaluation needs at least one grid".into()));
    }
    let (mut total, mut scored, mut skipped) = (0.0, 0usize, 0usize);
    let mut per_grid = Vec::with_capacity(grids.len());
    for grid in grids {
        let (mut sum, mut n) = (0.0, 0usize);
        for chunk in samples.chunks(EVAL_CHUNK) {
            let inputs = chunk
                .iter()
                .map(|p| resample(&p.0, grid, Interp::Spectral))
                .collect::<Result<Vec<_>>>()?;
            let preds = predict(&inputs, grid)?;
            for ((_, target), pred) in chunk.iter().zip(&preds) {
                let target = resample(target, grid, Interp::Spectral)?;
                match relative_error(&target, pred) {
                    Some(e) => {
                        sum += e;
                        n += 1;
                    }
                    None => skipped += 1,
                }
            }
        }
        per_grid.push((grid.clone(), if n > 0 { sum / n as f64 } else { f64::NAN }));
        total += sum;
        scored += n;
    }
    if scored == 0 {
        return Err(Error::InvalidConfig("every evaluation target is zero".into()));
    }
    Ok(ErrorReport {
        mean: total / scored as f64,
        per_grid,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn grid(v: &[f64]) -> ComplexGrid {
        ComplexGrid::from_real(vec![v.len()], v).unwrap()
    }

    fn samples() -> Vec<(ComplexGrid, ComplexGrid)> {
        vec![
            (grid(&[1.0, 0.0, 0.0, 0.0]), grid(&[3.0, 4.0, 0.0, 0.0])),
            (grid(&[0.0, 1.0, 0.0, 0.0]), grid(&[1.0, 1.0, 1.0, 1.0])),
        ]
    }

    #[test]
    fn perfect_and_zero_models() {
        let s = samples();
        let targets: Vec<ComplexGrid> = s.iter().map(|p| p.1.clone()).collect();
        let mut k = 0;
        let perfect = avg_relative_error(
            |x: &[ComplexGrid], _: &[usize]| {
                let out = targets[k..k + x.len()].to_vec();
                k += x.len();
                Ok(out)
            },
            &s,
            &[vec![4]],
        )
        .unwrap();
        assert_eq!(perfect.mean, 0.0);
        let zero = |x: &[ComplexGrid], g: &[usize]| Ok(vec![ComplexGrid::constant(g.to_vec(), Complex64::new(0.0, 0.0))?; x.len()]);
        assert_eq!(avg_relative_error(zero, &s, &[vec![4]]).unwrap().mean, 1.0);
    }

    #[test]
    fn hand_built_two_samples() {
        // Prediction 1 for every entry: errors sqrt(4+9+1+1)/5 and 0/2.
        let one = |x: &[ComplexGrid], g: &[usize]| Ok(vec![ComplexGrid::constant(g.to_vec(), Complex64::new(1.0, 0.0))?; x.len()]);
        let r = avg_relative_error(one, &samples(), &[vec![4]]).unwrap();
        let want = (15f64.sqrt() / 5.0 + 0.0) / 2.0;
        assert!((r.mean - want).abs() < 1e-15);
        assert_eq!(r.skipped, 0);
    }

    #[test]
    fn zero_targets_are_skipped() {
        let mut s = samples();
        s.push((grid(&[1.0; 4]), grid(&[0.0; 4])));
        let zero = |x: &[ComplexGrid], g: &[usize]| Ok(vec![ComplexGrid::constant(g.to_vec(), Complex64::new(0.0, 0.0))?; x.len()]);
        let r = avg_relative_error(zero, &s, &[vec![4]]).unwrap();
        assert_eq!((r.mean, r.skipped), (1.0, 1));
    }
}
