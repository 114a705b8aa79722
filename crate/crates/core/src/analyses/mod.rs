//! Characterization experiments built on the engine: mirror factors, supply
//! ranges, pulse metrics and the buffer read-out.

mod buffer;
mod dc;
mod pulse;
mod tran;

pub use buffer::{buffer_experiment, BufferReport, BufferSetup};
pub use dc::{mirror_factor_dc, supply_range, MirrorReport, MirrorRow, SupplyReport, SupplyRow};
pub use pulse::{pulse_metrics, FlatTop, PulseMetrics};
pub use tran::{rise_time_family, tran_mirror, write_family_csv, ChopPulse, TranMirror};

use std::fmt;
use std::str::FromStr;

use crate::devices::Waveform;
use crate::engine::EngineError;
use crate::netlist::{bundled, load, Circuit, ElementKind, NetlistError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("empty grid")]
    EmptyGrid,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("no pulse detected on '{0}'")]
    NoPulse(String),
    #[error("unknown signal '{0}'")]
    UnknownSignal(String),
    #[error("fixture element '{0}' is missing")]
    MissingElement(String),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Which current-pulse branch to characterize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Set,
    Reset,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Set => "set",
            Branch::Reset => "reset",
        }
    }

    pub fn bundled_netlist(self) -> &'static str {
        match self {
            Branch::Set => bundled::SET_BRANCH,
            Branch::Reset => bundled::RESET_BRANCH,
        }
    }

    /// Fixture on the bundled netlist of this branch.
    pub fn fixture(self) -> MirrorFixture {
        let circuit = load(self.bundled_netlist()).expect("bundled netlist is valid");
        MirrorFixture::new(self, circuit).expect("bundled netlist has the fixture elements")
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Branch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "set" => Ok(Branch::Set),
            "reset" | "res" => Ok(Branch::Reset),
            other => Err(format!("unknown branch '{other}' (expected set or reset)")),
        }
    }
}

/// A branch netlist plus the names of the elements the experiments drive and read.
///
/// Branch netlists use the conventional names `Iref`, `Vdd`, `Vchop` and
/// `Rsense`. The chop gate closes at 0 V on the set branch and at `vdd` on the
/// reset branch.
#[derive(Debug, Clone)]
pub struct MirrorFixture {
    pub branch: Branch,
    pub circuit: Circuit,
    pub iref_source: String,
    pub supply_source: String,
    pub chop_source: String,
    pub sense_element: String,
}

impl MirrorFixture {
    pub fn new(branch: Branch, circuit: Circuit) -> Result<Self, AnalysisError> {
        let fx = Self {
            branch,
            circuit,
            iref_source: "iref".into(),
            supply_source: "vdd".into(),
            chop_source: "vchop".into(),
            sense_element: "rsense".into(),
        };
        for name in [&fx.iref_source, &fx.supply_source, &fx.chop_source] {
            if fx.circuit.source_wave(name).is_none() {
                return Err(AnalysisError::MissingElement(name.clone()));
            }
        }
        if fx.circuit.element(&fx.sense_element).is_none() {
            return Err(AnalysisError::MissingElement(fx.sense_element.clone()));
        }
        Ok(fx)
    }

    /// Chop gate level that closes the chop switch.
    pub fn chop_on(&self, vdd: f64) -> f64 {
        match self.branch {
            Branch::Set => 0.0,
            Branch::Reset => vdd,
        }
    }

    pub fn chop_off(&self, vdd: f64) -> f64 {
        match self.branch {
            Branch::Set => vdd,
            Branch::Reset => 0.0,
        }
    }

    /// Copy of the circuit biased at `iref` and `vdd` with the chop switch closed.
    pub(crate) fn biased(&self, iref: f64, vdd: f64) -> Circuit {
        let mut c = self.circuit.clone();
        self.set(&mut c, &self.iref_source, Waveform::Dc(iref));
        self.set(&mut c, &self.supply_source, Waveform::Dc(vdd));
        self.set(&mut c, &self.chop_source, Waveform::Dc(self.chop_on(vdd)));
        c
    }

    pub(crate) fn set(&self, c: &mut Circuit, name: &str, w: Waveform) {
        c.set_source(name, w).expect("fixture sources checked at construction");
    }

    /// Remove every capacitance (parasitics off).
    pub fn without_capacitors(mut self) -> Self {
        for e in &mut self.circuit.elements {
            if let ElementKind::Capacitor { c, .. } = &mut e.kind {
                *c = 0.0;
            }
        }
        self
    }
}

fn check_grid(grid: &[f64]) -> Result<(), AnalysisError> {
    if grid.is_empty() {
        return Err(AnalysisError::EmptyGrid);
    }
    if let Some(v) = grid.iter().find(|v| !v.is_finite()) {
        return Err(AnalysisError::Invalid(format!("grid value {v} is not finite")));
    }
    Ok(())
}

/// Inclusive arithmetic grid, e.g. `linear_grid(50e-6, 450e-6, 50e-6)`.
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|k| start + k as f64 * step).collect()
}
