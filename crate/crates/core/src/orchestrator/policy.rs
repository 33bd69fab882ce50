use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::codebook::{Codebook, PhaseSet, QuantizedBeam};
use crate::measurement::BeamSource;
use crate::scalar::Real;

/// How an interfering BS picks its transmit beam in each slot.
#[derive(Debug, Clone)]
pub enum InterfererPolicy<T> {
    /// Every phase drawn i.i.d. uniform from the phase set, so `E[f fᴴ] = I/M`.
    RandomBeam { m: usize, phase_set: PhaseSet },
    /// A fixed codebook, each beam with equal probability.
    FixedCodebookSweep(Arc<Codebook<T>>),
    /// Snapshot of the other BS's live (still learning) beams, each with
    /// equal probability.
    CoLearning(Arc<Codebook<T>>),
}

pub fn draw_interferer_beam<T: Real>(policy: &InterfererPolicy<T>, rng: &mut dyn RngCore) -> QuantizedBeam<T> {
    match policy {
        InterfererPolicy::RandomBeam { m, phase_set } => random_beam(*m, *phase_set, rng),
        InterfererPolicy::FixedCodebookSweep(cb) | InterfererPolicy::CoLearning(cb) => {
            let n = rng.random_range(0..cb.len());
            cb.beams()[n].clone()
        }
    }
}

/// Beam with i.i.d. uniform phase indices.
pub fn random_beam<T: Real>(m: usize, phase_set: PhaseSet, rng: &mut dyn RngCore) -> QuantizedBeam<T> {
    let levels = phase_set.levels() as u16;
    let idx = (0..m).map(|_| rng.random_range(0..levels)).collect();
    QuantizedBeam::from_indices(idx, phase_set).expect("indices drawn in range")
}

impl<T: Real> BeamSource<T> for InterfererPolicy<T> {
    fn draw(&self, rng: &mut dyn RngCore) -> QuantizedBeam<T> {
        draw_interferer_beam(self, rng)
    }
}
