use crate::error::{Error, Result};
use crate::tensor::{Gradients, ParamStore};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments per parameter slot.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(store: &ParamStore) -> Self {
        let zeros: Vec<Vec<f64>> = store.slots().iter().map(|s| vec![0.0; s.value.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update. A non-finite gradient leaves parameters
/// and state untouched and returns `Error::NonFinite`.
pub fn adam_step(
    store: &mut ParamStore,
    grads: &Gradients,
    state: &mut AdamState,
    lr: f64,
    cfg: &AdamConfig,
) -> Result<()> {
    if grads.as_slice().len() != store.len() || state.m.len() != store.len() {
        return Err(Error::InvalidConfig("gradients and optimizer state must match the parameter store".into()));
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("gradient".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (i, slot) in store.slots_mut().iter_mut().enumerate() {
        let g = grads.as_slice()[i].data();
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for (j, p) in slot.value.data_mut().iter_mut().enumerate() {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            *p -= lr * (m[j] / c1) / ((v[j] / c2).sqrt() + cfg.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{backprop, RealArray, Tape};

    fn store(vals: &[f64]) -> ParamStore {
        let mut s = ParamStore::new();
        s.add("theta", RealArray::new(vec![vals.len()], vals.to_vec()).unwrap(), false);
        s
    }

    fn bowl_grads(s: &ParamStore) -> Gradients {
        let mut tape = Tape::new();
        let id = s.ids().next().unwrap();
        let p = tape.param(s, id);
        let sq = tape.mul(p, p).unwrap();
        let loss = tape.sum(sq).unwrap();
        backprop(&tape, loss, s).unwrap()
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut s = store(&[1.0, -2.0]);
        let mut st = AdamState::new(&s);
        let g = Gradients::zeros_like(&s);
        adam_step(&mut s, &g, &mut st, 0.1, &AdamConfig::default()).unwrap();
        assert_eq!(s.slots()[0].value.data(), &[1.0, -2.0]);
    }

    #[test]
    fn first_step_matches_hand_formula() {
        let theta = [0.5, -1.5, 2.0];
        let mut s = store(&theta);
        let g = bowl_grads(&s);
        let mut st = AdamState::new(&s);
        let (lr, eps) = (1e-2, 1e-8);
        adam_step(&mut s, &g, &mut st, lr, &AdamConfig::default()).unwrap();
        for (i, &t) in theta.iter().enumerate() {
            // Bias correction makes m_hat = g and v_hat = g^2 after one step.
            let gi = 2.0 * t;
            let want = t - lr * gi / (gi.abs() + eps);
            assert!((s.slots()[0].value.data()[i] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn quadratic_bowl_converges() {
        let mut s = store(&[1.0, -0.7, 0.3, 0.5]);
        let mut st = AdamState::new(&s);
        for _ in 0..500 {
            let g = bowl_grads(&s);
            adam_step(&mut s, &g, &mut st, 1e-2, &AdamConfig::default()).unwrap();
        }
        let norm = s.slots()[0].value.sum_sq().sqrt();
        assert!(norm < 1e-3, "{norm}");
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut s = store(&[1.0]);
        let mut st = AdamState::new(&s);
        let mut g = Gradients::zeros_like(&s);
        g.as_mut_slice()[0].data_mut()[0] = f64::NAN;
        assert!(matches!(
            adam_step(&mut s, &g, &mut st, 0.1, &AdamConfig::default()),
            Err(Error::NonFinite(_))
        ));
        assert_eq!(s.slots()[0].value.data(), &[1.0]);
        assert_eq!(st.steps(), 0);
    }
}
