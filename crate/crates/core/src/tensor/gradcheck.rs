use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{backprop, Gradients, NodeId, ParamId, ParamStore, Tape};
use crate::error::{Error, Result};

/// Central-difference gradient check settings.
#[derive(Clone, Debug)]
pub struct GradCheck {
    pub step: f64,
    /// Coordinates checked; every coordinate when the model is smaller.
    pub samples: usize,
    pub seed: u64,
    /// Lower bound of the relative-error denominator.
    pub floor: f64,
}

impl Default for GradCheck {
    fn default() -> Self {
        Self {
            step: 1e-5,
            samples: 100,
            seed: 0,
            floor: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

fn coordinates(store: &ParamStore, opts: &GradCheck) -> Vec<(ParamId, usize)> {
    let all: Vec<(ParamId, usize)> = store
        .ids()
        .flat_map(|id| (0..store.get(id).len()).map(move |i| (id, i)))
        .collect();
    if all.len() <= opts.samples {
        return all;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    (0..opts.samples)
        .map(|_| all[rng.random_range(0..all.len())])
        .collect()
}

/// Max over sampled coordinates of
/// `|analytic - central difference| / max(|analytic|, |numeric|, floor)`.
pub fn grad_check<F>(
    store: &ParamStore,
    analytic: &Gradients,
    opts: &GradCheck,
    mut f: F,
) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> Result<f64>,
{
    if opts.step <= 0.0 {
        return Err(Error::InvalidConfig("gradient check step must be positive".into()));
    }
    let mut probe = store.clone();
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst: None,
        checked: 0,
    };
    for (id, i) in coordinates(store, opts) {
        let orig = store.get(id).data()[i];
        probe.get_mut(id).data_mut()[i] = orig + opts.step;
        let up = f(&probe)?;
        probe.get_mut(id).data_mut()[i] = orig - opts.step;
        let down = f(&probe)?;
        probe.get_mut(id).data_mut()[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite(format!(
                "objective at {}[{i}]",
                store.slot(id).name
            )));
        }
        let numeric = (up - down) / (2.0 * opts.step);
        let exact = analytic.get(id).data()[i];
        let diff = (exact - numeric).abs();
        let err = if diff == 0.0 {
            0.0
        } else {
            diff / exact.abs().max(numeric.abs()).max(opts.floor)
        };
        report.checked += 1;
        if err > report.max_rel_err {
            report.max_rel_err = err;
            report.worst = Some((store.slot(id).name.clone(), i));
        }
    }
    Ok(report)
}

/// Builds the graph once for the analytic gradient and re-runs it for every
/// finite difference.
pub fn grad_check_graph<B>(store: &ParamStore, opts: &GradCheck, build: B) -> Result<GradCheckReport>
where
    B: Fn(&mut Tape, &ParamStore) -> Result<NodeId>,
{
    let mut tape = Tape::new();
    let loss = build(&mut tape, store)?;
    let grads = backprop(&tape, loss, store)?;
    grad_check(store, &grads, opts, |s| {
        let mut t = Tape::new();
        let l = build(&mut t, s)?;
        Ok(t.value(l).data()[0])
    })
}
