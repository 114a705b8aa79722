//! Monte-Carlo transistor mismatch and the wafer-level mirror study.
//!
//! Every draw is a pure function of `(seed, die, circuit, element)`: the key
//! is hashed into a fresh ChaCha stream, so instances can be evaluated in any
//! order or in parallel and still produce identical numbers.

mod wafer;

pub use wafer::{wafer_run, wafer_sites, WaferCell, WaferMap, WaferPlan, WAFER_GRID};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::netlist::Circuit;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum McError {
    #[error("mismatch coefficient '{name}' must be finite and >= 0, got {value}")]
    Coefficient { name: &'static str, value: f64 },
    #[error("invalid wafer plan: {0}")]
    Plan(String),
    #[error(transparent)]
    Analysis(#[from] crate::analyses::AnalysisError),
}

/// Pelgrom-style mismatch coefficients.
///
/// `sigma(dVth) = avt / sqrt(W*L)` and `sigma(dBeta/Beta) = abeta / sqrt(W*L)`,
/// with W and L in metres, plus one Gaussian threshold offset shared by every
/// transistor on a die.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MismatchSpec {
    /// V·m.
    pub avt: f64,
    /// m.
    pub abeta: f64,
    /// V.
    pub die_sigma_vth: f64,
    pub seed: u64,
}

impl MismatchSpec {
    pub fn zero(seed: u64) -> Self {
        Self { avt: 0.0, abeta: 0.0, die_sigma_vth: 0.0, seed }
    }

    /// Typical 180 nm figures: 5 mV·µm, 1 %·µm and a 2 mV die offset.
    pub fn calibrated(seed: u64) -> Self {
        Self { avt: 5e-9, abeta: 1e-8, die_sigma_vth: 2e-3, seed }
    }

    pub fn validate(&self) -> Result<(), McError> {
        for (name, value) in [("avt", self.avt), ("abeta", self.abeta), ("die_sigma_vth", self.die_sigma_vth)] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(McError::Coefficient { name, value });
            }
        }
        Ok(())
    }

    pub fn sigma_vth(&self, w: f64, l: f64) -> f64 {
        self.avt / (w * l).sqrt()
    }

    pub fn sigma_beta(&self, w: f64, l: f64) -> f64 {
        self.abeta / (w * l).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceDelta {
    pub name: String,
    pub delta_vth: f64,
    pub delta_beta: f64,
}

fn stream(seed: u64, die: u32, circuit: u32, element: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"mirrorsim-mismatch");
    h.update(seed.to_le_bytes());
    h.update(die.to_le_bytes());
    h.update(circuit.to_le_bytes());
    h.update((element.len() as u64).to_le_bytes());
    h.update(element.as_bytes());
    let key: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(key)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Shared threshold offset of one die.
pub fn die_offset(spec: &MismatchSpec, die: u32) -> f64 {
    if spec.die_sigma_vth == 0.0 {
        return 0.0;
    }
    spec.die_sigma_vth * normal(&mut stream(spec.seed, die, u32::MAX, "\0die"))
}

/// Mismatch draws for one transistor; zero coefficients give exact zeros.
pub fn sample_delta(spec: &MismatchSpec, die: u32, circuit: u32, element: &str, w: f64, l: f64) -> (f64, f64) {
    let mut rng = stream(spec.seed, die, circuit, &element.to_ascii_lowercase());
    let (zv, zb) = (normal(&mut rng), normal(&mut rng));
    (spec.sigma_vth(w, l) * zv, spec.sigma_beta(w, l) * zb)
}

/// Per-transistor deltas for circuit instance `(die, circuit_index)`, in
/// netlist order. The die offset shifts every threshold magnitude the same way.
pub fn sample_instance_deltas(
    spec: &MismatchSpec,
    circuit: &Circuit,
    die: u32,
    circuit_index: u32,
) -> Result<Vec<InstanceDelta>, McError> {
    spec.validate()?;
    let offset = die_offset(spec, die);
    Ok(circuit
        .mosfets()
        .map(|(name, m)| {
            let (dv, db) = sample_delta(spec, die, circuit_index, name, m.w, m.l);
            let sign = match circuit.mos_models.get(&m.model).map(|p| p.polarity) {
                Some(crate::devices::Polarity::P) => -1.0,
                _ => 1.0,
            };
            InstanceDelta { name: name.to_string(), delta_vth: dv + sign * offset, delta_beta: db }
        })
        .collect())
}

/// Write the deltas into the matching transistors, replacing earlier values.
pub fn apply_deltas(circuit: &mut Circuit, deltas: &[InstanceDelta]) {
    for (name, m) in circuit.mosfets_mut() {
        if let Some(d) = deltas.iter().find(|d| d.name == name) {
            m.delta_vth = d.delta_vth;
            m.delta_beta = d.delta_beta;
        }
    }
}
