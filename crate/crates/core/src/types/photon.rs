use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transition {
    X,
    XX,
    Xplus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

/// An emitted photon before detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonRecord {
    /// Emission time in picoseconds.
    pub t_emit: f64,
    pub transition: Transition,
    /// Instantaneous angular detuning from the nominal line centre (rad/s).
    pub detuning: f64,
    pub polarization: Polarization,
}

/// Output of the emitter simulator.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhotonStream {
    pub duration_ns: f64,
    pub photons: Vec<PhotonRecord>,
}

impl PhotonStream {
    pub fn count(&self, transition: Transition) -> usize {
        self.photons
            .iter()
            .filter(|p| p.transition == transition)
            .count()
    }
}
