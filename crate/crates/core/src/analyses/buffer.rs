use super::{AnalysisError, ChopPulse};
use crate::devices::Waveform;
use crate::engine::{transient, Method, NewtonConfig, TraceSet};
use crate::netlist::{bundled, load, Circuit, ElementKind};

/// Parameters of the full-circuit read-out run.
#[derive(Debug, Clone, PartialEq)]
pub struct BufferSetup {
    pub iref_set: f64,
    pub iref_res: f64,
    pub vdd: f64,
    pub vtail: f64,
    /// Extra delay of the reset chop relative to the set chop.
    pub chop_delay: f64,
    pub chop: ChopPulse,
    /// Overrides the pad capacitance at the RRAM bottom electrode.
    pub pad_c: Option<f64>,
    /// When false both chop switches stay open for the whole run.
    pub chops_active: bool,
    /// Simulated time after the later chop edge has fallen.
    pub tail: f64,
    pub dt: Option<f64>,
}

impl Default for BufferSetup {
    fn default() -> Self {
        Self {
            iref_set: 100e-6,
            iref_res: 100e-6,
            vdd: 5.0,
            vtail: 1.0,
            chop_delay: 0.0,
            chop: ChopPulse::default(),
            pad_c: None,
            chops_active: true,
            tail: 60e-6,
            dt: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BufferReport {
    pub trace: TraceSet,
    /// Overlap of the two closed chop switches, `(start, end)`.
    pub overlap: (f64, f64),
    /// Mean of `v(out)` over the second half of the overlap.
    pub plateau: f64,
    /// Fraction of the overlap where `v(out)` stays within 5% of the plateau.
    pub flat_fraction: f64,
    /// `v(out)` at the end of the run.
    pub final_value: f64,
    /// Exponential time constant of the post-pulse decay, if one was found.
    pub decay_tau: Option<f64>,
}

/// Run the full generator with both branches chopped and watch the buffer output.
pub fn buffer_experiment(setup: &BufferSetup, config: &NewtonConfig) -> Result<BufferReport, AnalysisError> {
    let mut c = load(bundled::FULL_2M1R1B)?;
    configure(&mut c, setup)?;
    let ch = setup.chop;
    let set_on = ch.delay + ch.rise;
    let res_on = set_on + setup.chop_delay;
    let overlap = (set_on.max(res_on), (set_on + ch.width).min(res_on + ch.width));
    let fall_end = res_on.max(set_on) + ch.width + ch.fall;
    let tstop = fall_end + setup.tail;
    let dt = setup.dt.unwrap_or(ch.rise / 50.0);
    let trace = transient(&c, tstop, dt, Method::Trapezoidal, config)?;

    let t = trace.time().to_vec();
    let v = trace.signal("v(out)").expect("full netlist has node out").to_vec();
    let final_value = *v.last().expect("trace is non-empty");

    let (o0, o1) = overlap;
    let (plateau, flat_fraction) = if o1 > o0 {
        let mid = 0.5 * (o0 + o1);
        let late: Vec<f64> = (0..t.len()).filter(|&k| t[k] >= mid && t[k] <= o1).map(|k| v[k]).collect();
        let plateau = late.iter().sum::<f64>() / late.len().max(1) as f64;
        let all: Vec<f64> = (0..t.len()).filter(|&k| t[k] >= o0 && t[k] <= o1).map(|k| v[k]).collect();
        let flat = all.iter().filter(|x| (**x - plateau).abs() <= 0.05 * plateau.abs()).count();
        (plateau, flat as f64 / all.len().max(1) as f64)
    } else {
        (f64::NAN, 0.0)
    };

    let first_fall = set_on.min(res_on) + ch.width;
    let decay_tau = decay_fit(&t, &v, first_fall, final_value);
    Ok(BufferReport { trace, overlap, plateau, flat_fraction, final_value, decay_tau })
}

fn configure(c: &mut Circuit, s: &BufferSetup) -> Result<(), AnalysisError> {
    let set = |c: &mut Circuit, name: &str, w: Waveform| {
        c.set_source(name, w).map_err(|_| AnalysisError::MissingElement(name.to_string()))
    };
    set(c, "irefs", Waveform::Dc(s.iref_set))?;
    set(c, "irefr", Waveform::Dc(s.iref_res))?;
    set(c, "vdds", Waveform::Dc(s.vdd))?;
    set(c, "vddr", Waveform::Dc(s.vdd))?;
    set(c, "vbias", Waveform::Dc(s.vdd))?;
    set(c, "vtail", Waveform::Dc(s.vtail))?;
    // SET chop is a PMOS switch (closed low); RESET chop is NMOS (closed high).
    if s.chops_active {
        let reset = ChopPulse { delay: s.chop.delay + s.chop_delay, period: 0.0, ..s.chop };
        set(c, "vchops", ChopPulse { period: 0.0, ..s.chop }.waveform(s.vdd, 0.0)?)?;
        set(c, "vchopr", reset.waveform(0.0, s.vdd)?)?;
    } else {
        set(c, "vchops", Waveform::Dc(s.vdd))?;
        set(c, "vchopr", Waveform::Dc(0.0))?;
    }
    if let Some(cpad) = s.pad_c {
        if !(cpad >= 0.0) {
            return Err(AnalysisError::Invalid(format!("pad capacitance must be >= 0, got {cpad}")));
        }
        match c.element_mut("cpad").map(|e| &mut e.kind) {
            Some(ElementKind::Capacitor { c, .. }) => *c = cpad,
            _ => return Err(AnalysisError::MissingElement("cpad".into())),
        }
    }
    Ok(())
}

/// Time constant from a log-linear fit of the decay after `from`, using the
/// samples between 80% and 20% of the largest excursion from `settle`.
fn decay_fit(t: &[f64], v: &[f64], from: f64, settle: f64) -> Option<f64> {
    let start = t.iter().position(|&x| x >= from)?;
    let (peak_k, peak) = (start..v.len()).map(|k| (k, (v[k] - settle).abs())).fold((start, 0.0), |best, cur| {
        if cur.1 > best.1 {
            cur
        } else {
            best
        }
    });
    if peak <= 1e-9 {
        return None;
    }
    let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in peak_k..v.len() {
        let e = (v[k] - settle).abs();
        if e < 0.2 * peak {
            break;
        }
        if e <= 0.8 * peak {
            let (x, y) = (t[k] - t[peak_k], e.ln());
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            n += 1.0;
        }
    }
    if n < 2.0 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope < 0.0).then(|| -1.0 / slope)
}
