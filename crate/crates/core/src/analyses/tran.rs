use std::io::Write;

use rayon::prelude::*;

use super::{check_grid, pulse_metrics, AnalysisError, FlatTop, MirrorFixture, PulseMetrics};
use crate::devices::Waveform;
use crate::engine::{transient, Method, NewtonConfig, TraceSet};

/// Timing of the chop gate pulse. The gate idles at the "off" level and
/// closes the switch for `width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChopPulse {
    pub delay: f64,
    pub rise: f64,
    pub fall: f64,
    pub width: f64,
    pub period: f64,
}

impl Default for ChopPulse {
    fn default() -> Self {
        Self { delay: 1e-6, rise: 1e-6, fall: 1e-6, width: 10e-6, period: 20e-6 }
    }
}

impl ChopPulse {
    pub fn with_rise(self, rise: f64) -> Self {
        Self { rise, fall: rise, ..self }
    }

    /// Simulation span covering one full period, or the pulse plus a margin.
    pub fn span(&self) -> f64 {
        let edge = self.delay + self.rise + self.width + self.fall;
        self.period.max(edge + self.width.max(1e-6))
    }

    /// Gate waveform moving from `off` to `on`.
    pub fn waveform(&self, off: f64, on: f64) -> Result<Waveform, AnalysisError> {
        Waveform::pulse(off, on, self.delay, self.rise, self.fall, self.width, self.period)
            .map_err(|e| AnalysisError::Invalid(e.to_string()))
    }

    fn validate(&self) -> Result<(), AnalysisError> {
        let ok = [self.delay, self.rise, self.fall, self.width, self.period].iter().all(|v| v.is_finite() && *v >= 0.0);
        if !ok || self.rise <= 0.0 || self.width <= 0.0 {
            return Err(AnalysisError::Invalid(format!("bad chop pulse {self:?}")));
        }
        if self.rise > self.width {
            return Err(AnalysisError::Invalid(format!(
                "chop rise {:e} s exceeds the pulse width {:e} s",
                self.rise, self.width
            )));
        }
        Ok(())
    }
}

/// Result of one chopped transient on a mirror branch.
#[derive(Debug, Clone)]
pub struct TranMirror {
    pub iref: f64,
    pub vdd: f64,
    pub chop: ChopPulse,
    pub trace: TraceSet,
    pub metrics: PulseMetrics,
}

impl TranMirror {
    pub fn factor(&self) -> f64 {
        self.metrics.amplitude / self.iref
    }

    pub fn deviation_pct(&self) -> f64 {
        (self.factor() - 1.0).abs() * 100.0
    }
}

/// Drive the chop gate with one pulse and measure the output current pulse.
///
/// `dt` defaults to a fiftieth of the chop rise time.
pub fn tran_mirror(
    fixture: &MirrorFixture,
    iref: f64,
    vdd: f64,
    chop: ChopPulse,
    dt: Option<f64>,
    config: &NewtonConfig,
) -> Result<TranMirror, AnalysisError> {
    chop.validate()?;
    if !(iref > 0.0) {
        return Err(AnalysisError::Invalid(format!("reference current must be > 0, got {iref}")));
    }
    let mut c = fixture.biased(iref, vdd);
    let gate = chop.waveform(fixture.chop_off(vdd), fixture.chop_on(vdd))?;
    fixture.set(&mut c, &fixture.chop_source, gate);
    let dt = dt.unwrap_or(chop.rise / 50.0);
    let trace = transient(&c, chop.span(), dt, Method::Trapezoidal, config)?;
    let signal = format!("i({})", fixture.sense_element);
    let metrics = pulse_metrics(&trace, &signal, FlatTop::default())?;
    Ok(TranMirror { iref, vdd, chop, trace, metrics })
}

/// One chopped transient per chop rise time, in grid order.
pub fn rise_time_family(
    fixture: &MirrorFixture,
    iref: f64,
    vdd: f64,
    rise_grid: &[f64],
    base: ChopPulse,
    config: &NewtonConfig,
) -> Result<Vec<TranMirror>, AnalysisError> {
    check_grid(rise_grid)?;
    for &r in rise_grid {
        base.with_rise(r).validate()?;
    }
    rise_grid.par_iter().map(|&r| tran_mirror(fixture, iref, vdd, base.with_rise(r), None, config)).collect()
}

/// `rise,amplitude,rise_10_90,overshoot_pct`.
pub fn write_family_csv<W: Write>(runs: &[TranMirror], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rise", "amplitude", "rise_10_90", "overshoot_pct"])?;
    for r in runs {
        w.write_record([
            format!("{:e}", r.chop.rise),
            format!("{:e}", r.metrics.amplitude),
            format!("{:e}", r.metrics.rise_10_90),
            format!("{:e}", r.metrics.overshoot_pct),
        ])?;
    }
    w.flush()?;
    Ok(())
}
