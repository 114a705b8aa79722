use super::DeviceError;

/// Trapezoidal pulse in SPICE `PULSE(v1 v2 td tr tf pw per)` form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub v1: f64,
    pub v2: f64,
    pub delay: f64,
    pub rise: f64,
    pub width: f64,
    pub fall: f64,
    /// Repetition period; `None` for a single pulse.
    pub period: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Waveform {
    Dc(f64),
    Pulse(Pulse),
}

impl Waveform {
    pub fn dc(v: f64) -> Self {
        Waveform::Dc(v)
    }

    /// Pulse with SPICE argument order `(v1, v2, delay, rise, fall, width, period)`.
    /// A period of zero means non-repeating.
    pub fn pulse(
        v1: f64,
        v2: f64,
        delay: f64,
        rise: f64,
        fall: f64,
        width: f64,
        period: f64,
    ) -> Result<Self, DeviceError> {
        let p = Pulse { v1, v2, delay, rise, width, fall, period: if period > 0.0 { Some(period) } else { None } };
        let w = Waveform::Pulse(p);
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        match self {
            Waveform::Dc(v) if v.is_finite() => Ok(()),
            Waveform::Dc(_) => Err(DeviceError::InvalidWaveform("non-finite DC value".into())),
            Waveform::Pulse(p) => {
                let all = [p.v1, p.v2, p.delay, p.rise, p.width, p.fall];
                if all.iter().any(|v| !v.is_finite()) {
                    return Err(DeviceError::InvalidWaveform("non-finite pulse field".into()));
                }
                if !(p.rise > 0.0) || !(p.fall > 0.0) {
                    return Err(DeviceError::InvalidWaveform("rise and fall must be > 0".into()));
                }
                if p.width < 0.0 || p.delay < 0.0 {
                    return Err(DeviceError::InvalidWaveform("width and delay must be >= 0".into()));
                }
                if let Some(per) = p.period {
                    if per < p.rise + p.width + p.fall {
                        return Err(DeviceError::InvalidWaveform(format!("period {per} shorter than rise+width+fall")));
                    }
                }
                Ok(())
            }
        }
    }

    /// Value at `t = 0`, used for operating points.
    pub fn initial(&self) -> f64 {
        self.value(0.0)
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Waveform::Dc(v) => v,
            Waveform::Pulse(p) => p.value(t),
        }
    }

    /// Fastest edge, if any.
    pub fn min_edge(&self) -> Option<f64> {
        match self {
            Waveform::Dc(_) => None,
            Waveform::Pulse(p) => Some(p.rise.min(p.fall)),
        }
    }
}

impl Pulse {
    fn value(&self, t: f64) -> f64 {
        if t < self.delay {
            return self.v1;
        }
        let mut tl = t - self.delay;
        if let Some(per) = self.period {
            tl %= per;
        }
        if tl < self.rise {
            self.v1 + (self.v2 - self.v1) * tl / self.rise
        } else if tl < self.rise + self.width {
            self.v2
        } else if tl < self.rise + self.width + self.fall {
            self.v2 + (self.v1 - self.v2) * (tl - self.rise - self.width) / self.fall
        } else {
            self.v1
        }
    }
}

/// Evaluate a waveform at time `t >= 0`.
pub fn waveform_value(w: &Waveform, t: f64) -> f64 {
    w.value(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chop() -> Waveform {
        Waveform::pulse(5.0, 0.0, 0.0, 1e-6, 1e-6, 10e-6, 20e-6).unwrap()
    }

    #[test]
    fn chop_pulse_samples() {
        let w = chop();
        assert_eq!(waveform_value(&w, 0.0), 5.0);
        assert_eq!(waveform_value(&w, 5e-6), 0.0);
        assert!((waveform_value(&w, 0.5e-6) - 2.5).abs() < 1e-12);
        // fall midpoint and the idle tail
        assert!((waveform_value(&w, 11.5e-6) - 2.5).abs() < 1e-9);
        assert_eq!(waveform_value(&w, 15e-6), 5.0);
        // periodic extension
        assert!((waveform_value(&w, 25e-6) - waveform_value(&w, 5e-6)).abs() < 1e-12);
    }

    #[test]
    fn delay_holds_initial_level() {
        let w = Waveform::pulse(0.0, 1.0, 2e-6, 1e-6, 1e-6, 1e-6, 0.0).unwrap();
        assert_eq!(w.value(1.9e-6), 0.0);
        assert_eq!(w.value(100e-6), 0.0);
        assert!((w.value(2.5e-6) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_pulses() {
        assert!(Waveform::pulse(0.0, 1.0, 0.0, 0.0, 1e-6, 1e-6, 0.0).is_err());
        assert!(Waveform::pulse(0.0, 1.0, 0.0, 1e-6, 1e-6, -1.0, 0.0).is_err());
        assert!(Waveform::pulse(0.0, 1.0, 0.0, 1e-6, 1e-6, 10e-6, 5e-6).is_err());
    }
}
