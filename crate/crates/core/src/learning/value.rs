//! Action-value estimators over phase-configuration states.
//!
//! A state is the phase-index vector of the current beam; there are `2M`
//! actions (see [`super::agent::apply_action`]). Both estimators are trained
//! by one-step temporal-difference updates on replayed transitions.

use std::collections::HashMap;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One replayed transition `(s, a, r, s')`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<u16>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<u16>,
}

/// Two-hidden-layer ReLU perceptron with one-hot-by-antenna input.
///
/// Input width is `M·2^r` (antenna `m` at level `i` sets unit `m·2^r + i`),
/// both hidden layers have width `2M`, and the output holds one Q-value per
/// action.
#[derive(Debug, Clone)]
pub struct MlpEstimator<T> {
    m: usize,
    levels: usize,
    hidden: usize,
    // row-major [out][in]
    w1: Vec<T>,
    b1: Vec<T>,
    w2: Vec<T>,
    b2: Vec<T>,
    w3: Vec<T>,
    b3: Vec<T>,
}

struct Activations<T> {
    z1: Vec<T>,
    a1: Vec<T>,
    z2: Vec<T>,
    a2: Vec<T>,
    out: Vec<T>,
}

fn xavier<T: Real>(fan_in: usize, fan_out: usize, rng: &mut dyn RngCore) -> Vec<T> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..fan_in * fan_out).map(|_| T::lit(rng.random_range(-bound..bound))).collect()
}

fn relu<T: Real>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

impl<T: Real> MlpEstimator<T> {
    pub fn new(m: usize, levels: usize, rng: &mut dyn RngCore) -> Result<Self> {
        if m == 0 || levels < 2 {
            return Err(Error::InvalidParameter(format!("MLP needs m >= 1 and >= 2 levels, got {m}, {levels}")));
        }
        let input = m * levels;
        let hidden = 2 * m;
        let actions = 2 * m;
        Ok(Self {
            m,
            levels,
            hidden,
            w1: xavier(input, hidden, rng),
            b1: vec![T::zero(); hidden],
            w2: xavier(hidden, hidden, rng),
            b2: vec![T::zero(); hidden],
            w3: xavier(hidden, actions, rng),
            b3: vec![T::zero(); actions],
        })
    }

    pub fn num_actions(&self) -> usize {
        2 * self.m
    }

    fn forward(&self, state: &[u16]) -> Activations<T> {
        let input = self.m * self.levels;
        let h = self.hidden;
        // the one-hot input selects M columns of w1
        let mut z1 = self.b1.clone();
        for (m, &level) in state.iter().enumerate() {
            let col = m * self.levels + level as usize;
            for (j, z) in z1.iter_mut().enumerate() {
                *z += self.w1[j * input + col];
            }
        }
        let a1: Vec<T> = z1.iter().map(|&z| relu(z)).collect();
        let mut z2 = self.b2.clone();
        for (j, z) in z2.iter_mut().enumerate() {
            let row = &self.w2[j * h..(j + 1) * h];
            *z += row.iter().zip(&a1).map(|(&w, &a)| w * a).sum::<T>();
        }
        let a2: Vec<T> = z2.iter().map(|&z| relu(z)).collect();
        let mut out = self.b3.clone();
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.w3[k * h..(k + 1) * h];
            *o += row.iter().zip(&a2).map(|(&w, &a)| w * a).sum::<T>();
        }
        Activations { z1, a1, z2, a2, out }
    }

    pub fn q_values(&self, state: &[u16]) -> Vec<T> {
        self.forward(state).out
    }

    /// One SGD step on `½(Q(s, a) − target)²`.
    pub fn sgd_step(&mut self, state: &[u16], action: usize, target: T, lr: T) {
        let input = self.m * self.levels;
        let h = self.hidden;
        let act = self.forward(state);
        let err = act.out[action] - target;

        // output layer: only `action` carries gradient
        let mut d_a2 = vec![T::zero(); h];
        {
            let row = &mut self.w3[action * h..(action + 1) * h];
            for (j, w) in row.iter_mut().enumerate() {
                d_a2[j] = *w * err;
                *w -= lr * err * act.a2[j];
            }
            self.b3[action] -= lr * err;
        }
        let d_z2: Vec<T> = d_a2.iter().zip(&act.z2).map(|(&d, &z)| if z > T::zero() { d } else { T::zero() }).collect();

        let mut d_a1 = vec![T::zero(); h];
        for (j, &dz) in d_z2.iter().enumerate() {
            if dz == T::zero() {
                continue;
            }
            let row = &mut self.w2[j * h..(j + 1) * h];
            for (i, w) in row.iter_mut().enumerate() {
                d_a1[i] += *w * dz;
                *w -= lr * dz * act.a1[i];
            }
            self.b2[j] -= lr * dz;
        }
        for (j, (&d, &z)) in d_a1.iter().zip(&act.z1).enumerate() {
            if z <= T::zero() {
                continue;
            }
            for (m, &level) in state.iter().enumerate() {
                let col = m * self.levels + level as usize;
                self.w1[j * input + col] -= lr * d;
            }
            self.b1[j] -= lr * d;
        }
    }
}

/// Exact lookup table, only for instances small enough to enumerate.
#[derive(Debug, Clone, Default)]
pub struct TableEstimator<T> {
    actions: usize,
    table: HashMap<Vec<u16>, Vec<T>>,
}

impl<T: Real> TableEstimator<T> {
    pub const MAX_ANTENNAS: usize = 6;
    pub const MAX_BITS: u32 = 2;

    pub fn new(m: usize, bits: u32) -> Result<Self> {
        if m == 0 || m > Self::MAX_ANTENNAS || bits > Self::MAX_BITS {
            return Err(Error::InvalidParameter(format!(
                "table estimator supports m <= {} and r <= {}, got m = {m}, r = {bits}",
                Self::MAX_ANTENNAS,
                Self::MAX_BITS
            )));
        }
        Ok(Self { actions: 2 * m, table: HashMap::new() })
    }

    pub fn q_values(&self, state: &[u16]) -> Vec<T> {
        self.table.get(state).cloned().unwrap_or_else(|| vec![T::zero(); self.actions])
    }

    pub fn set(&mut self, state: &[u16], action: usize, value: T) {
        let actions = self.actions;
        self.table.entry(state.to_vec()).or_insert_with(|| vec![T::zero(); actions])[action] = value;
    }

    fn step_toward(&mut self, state: &[u16], action: usize, target: T, lr: T) {
        let q = self.q_values(state)[action];
        self.set(state, action, q + lr * (target - q));
    }
}

#[derive(Debug, Clone)]
pub enum ValueFunction<T> {
    Mlp(MlpEstimator<T>),
    Table(TableEstimator<T>),
}

impl<T: Real> ValueFunction<T> {
    pub fn q_values(&self, state: &[u16]) -> Vec<T> {
        match self {
            Self::Mlp(net) => net.q_values(state),
            Self::Table(t) => t.q_values(state),
        }
    }

    /// TD(0) update on each transition: target `r + discount · max Q(s')`.
    pub fn td_update(&mut self, batch: &[&Transition], discount: T, lr: T) {
        for t in batch {
            let next_best = self.q_values(&t.next_state).into_iter().fold(T::neg_infinity(), T::max);
            let target = T::lit(t.reward) + discount * next_best;
            match self {
                Self::Mlp(net) => net.sgd_step(&t.state, t.action, target, lr),
                Self::Table(tab) => tab.step_toward(&t.state, t.action, target, lr),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mlp_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = MlpEstimator::<f64>::new(4, 8, &mut rng).unwrap();
        assert_eq!(net.q_values(&[0, 1, 2, 7]).len(), 8);
        assert_eq!(net.num_actions(), 8);
    }

    #[test]
    fn sgd_moves_toward_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = MlpEstimator::<f64>::new(4, 4, &mut rng).unwrap();
        let s = [1, 0, 3, 2];
        for _ in 0..500 {
            net.sgd_step(&s, 5, 1.0, 0.05);
        }
        assert!((net.q_values(&s)[5] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn mlp_gradient_matches_finite_difference() {
        // loss L(θ) = ½(Q(s,a) − y)²; an SGD step with tiny lr changes L by
        // ≈ −lr‖∇L‖², which must agree with a numerically differentiated L
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let net = MlpEstimator::<f64>::new(3, 4, &mut rng).unwrap();
        let s = [2, 0, 3];
        let (a, y) = (4, 0.7);
        let loss = |n: &MlpEstimator<f64>| 0.5 * (n.q_values(&s)[a] - y).powi(2);
        let l0 = loss(&net);
        let lr = 1e-6;
        let mut stepped = net.clone();
        stepped.sgd_step(&s, a, y, lr);
        let predicted_drop = l0 - loss(&stepped);

        // ‖∇L‖² by central differences over every parameter
        let mut grad_sq = 0.0;
        let h = 1e-6;
        type Field = fn(&mut MlpEstimator<f64>) -> &mut Vec<f64>;
        let fields: [Field; 6] = [|n| &mut n.w1, |n| &mut n.b1, |n| &mut n.w2, |n| &mut n.b2, |n| &mut n.w3, |n| &mut n.b3];
        for field in fields {
            let len = field(&mut net.clone()).len();
            for i in 0..len {
                let mut plus = net.clone();
                field(&mut plus)[i] += h;
                let mut minus = net.clone();
                field(&mut minus)[i] -= h;
                let g = (loss(&plus) - loss(&minus)) / (2.0 * h);
                grad_sq += g * g;
            }
        }
        assert!(grad_sq > 0.0);
        let rel = (predicted_drop - lr * grad_sq).abs() / (lr * grad_sq);
        assert!(rel < 1e-3, "rel={rel}");
    }

    #[test]
    fn table_limits() {
        assert!(TableEstimator::<f64>::new(6, 2).is_ok());
        assert!(TableEstimator::<f64>::new(7, 2).is_err());
        assert!(TableEstimator::<f64>::new(4, 3).is_err());
    }

    #[test]
    fn table_td_update() {
        let mut v = ValueFunction::Table(TableEstimator::<f64>::new(2, 1).unwrap());
        let t = Transition { state: vec![0, 0], action: 1, reward: 1.0, next_state: vec![0, 1] };
        v.td_update(&[&t], 0.5, 1.0);
        assert_eq!(v.q_values(&[0, 0])[1], 1.0);
        // next state's best is 0 until it is visited
        let back = Transition { state: vec![0, 1], action: 0, reward: -1.0, next_state: vec![0, 0] };
        v.td_update(&[&back], 0.5, 1.0);
        assert_eq!(v.q_values(&[0, 1])[0], -1.0 + 0.5 * 1.0);
    }
}
