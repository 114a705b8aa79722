use super::newton::{solve_op, NewtonConfig, OperatingPoint};
use super::EngineError;
use crate::devices::Waveform;
use crate::netlist::Circuit;

/// Inclusive linear grid `start, start+step, ... , stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    pub fn values(&self) -> Result<Vec<f64>, EngineError> {
        let span = self.stop - self.start;
        if !(self.step != 0.0) || !span.is_finite() || !self.step.is_finite() || span * self.step < 0.0 {
            return Err(EngineError::EmptyGrid);
        }
        let n = (span / self.step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|k| self.start + k as f64 * self.step).collect())
    }
}

/// One sweep point; `op` is `None` when the solver failed there.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub op: Option<OperatingPoint>,
    pub error: Option<EngineError>,
}

/// Sweep the DC value of an independent source over explicit values, warm
/// starting every point from the last converged one.
pub fn dc_sweep_values(
    circuit: &Circuit,
    target: &str,
    values: &[f64],
    config: &NewtonConfig,
) -> Result<Vec<SweepPoint>, EngineError> {
    if values.is_empty() {
        return Err(EngineError::EmptyGrid);
    }
    if circuit.source_wave(target).is_none() {
        return Err(EngineError::UnknownSource(target.to_string()));
    }
    let mut c = circuit.clone();
    let mut warm: Option<OperatingPoint> = None;
    let mut out = Vec::with_capacity(values.len());
    for &value in values {
        c.set_source(target, Waveform::Dc(value)).map_err(EngineError::UnknownSource)?;
        match solve_op(&c, config, warm.as_ref()) {
            Ok(op) => {
                warm = Some(op.clone());
                out.push(SweepPoint { value, op: Some(op), error: None });
            }
            Err(e) => out.push(SweepPoint { value, op: None, error: Some(e) }),
        }
    }
    Ok(out)
}

pub fn dc_sweep(
    circuit: &Circuit,
    target: &str,
    grid: SweepGrid,
    config: &NewtonConfig,
) -> Result<Vec<SweepPoint>, EngineError> {
    dc_sweep_values(circuit, target, &grid.values()?, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::load;

    #[test]
    fn grid_values() {
        assert_eq!(SweepGrid::new(0.0, 1.0, 0.25).values().unwrap().len(), 5);
        assert_eq!(SweepGrid::new(5.0, 0.0, -1.0).values().unwrap(), vec![5.0, 4.0, 3.0, 2.0, 1.0, 0.0]);
        assert!(SweepGrid::new(0.0, 1.0, 0.0).values().is_err());
        assert!(SweepGrid::new(0.0, 1.0, -0.1).values().is_err());
    }

    #[test]
    fn resistive_sweep_is_linear() {
        let c = load("V1 a 0 0\nR1 a b 2k\nR2 b 0 3k").unwrap();
        let pts = dc_sweep(&c, "v1", SweepGrid::new(0.0, 5.0, 0.5), &NewtonConfig::default()).unwrap();
        for p in &pts {
            let i = p.op.as_ref().unwrap().current("r2").unwrap();
            assert!((i - p.value / 5e3).abs() < 1e-10);
        }
    }

    #[test]
    fn unknown_source() {
        let c = load("V1 a 0 0\nR1 a 0 1").unwrap();
        let e = dc_sweep(&c, "v9", SweepGrid::new(0.0, 1.0, 1.0), &NewtonConfig::default());
        assert!(matches!(e, Err(EngineError::UnknownSource(_))));
        let e = dc_sweep(&c, "r1", SweepGrid::new(0.0, 1.0, 1.0), &NewtonConfig::default());
        assert!(matches!(e, Err(EngineError::UnknownSource(_))));
    }
}
