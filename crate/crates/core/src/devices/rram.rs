//! Threshold-and-rate behavioral RRAM model.
//!
//! The cell is a resistor whose conductance interpolates between the HRS
//! (`x = 0`) and LRS (`x = 1`) values. The state moves only when the applied
//! voltage exceeds `v_set` (towards LRS) or falls below `v_reset` (towards
//! HRS), at a rate proportional to the overdrive.

use super::DeviceError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RramModelParams {
    /// LRS resistance (ohm).
    pub r_on: f64,
    /// HRS resistance (ohm).
    pub r_off: f64,
    /// SET threshold (V), positive.
    pub v_set: f64,
    /// RESET threshold (V), negative.
    pub v_reset: f64,
    /// SET time constant (s per volt of overdrive for a full transition).
    pub tau_set: f64,
    /// RESET time constant (s).
    pub tau_reset: f64,
}

impl Default for RramModelParams {
    fn default() -> Self {
        Self { r_on: 5e3, r_off: 100e3, v_set: 1.0, v_reset: -1.0, tau_set: 1e-6, tau_reset: 1e-6 }
    }
}

impl RramModelParams {
    pub fn validate(&self) -> Result<(), DeviceError> {
        let bad = |m: &str| Err(DeviceError::InvalidParameter(m.to_string()));
        if !(self.r_on > 0.0) || !(self.r_on < self.r_off) || !self.r_off.is_finite() {
            return bad("RRAM requires 0 < RON < ROFF");
        }
        if !(self.tau_set > 0.0) || !(self.tau_reset > 0.0) {
            return bad("RRAM time constants must be > 0");
        }
        if !(self.v_reset < self.v_set) || !self.v_set.is_finite() || !self.v_reset.is_finite() {
            return bad("RRAM requires VRESET < VSET");
        }
        Ok(())
    }

    /// Resistance at state `x` (clamped to `[0, 1]`).
    pub fn resistance(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        self.r_on * self.r_off / (x * self.r_off + (1.0 - x) * self.r_on)
    }
}

/// Filament state; `x = 1` is the fully formed filament (LRS).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RramState {
    pub x: f64,
}

impl RramState {
    pub fn new(x: f64) -> Self {
        Self { x: x.clamp(0.0, 1.0) }
    }
}

/// Advance the state by one explicit-Euler step of length `dt` under the
/// voltage `v_applied` (positive terminal minus negative terminal).
pub fn rram_step(params: &RramModelParams, state: RramState, v_applied: f64, dt: f64) -> RramState {
    debug_assert!(dt > 0.0);
    let dx = if v_applied > params.v_set {
        dt / params.tau_set * (v_applied - params.v_set)
    } else if v_applied < params.v_reset {
        -dt / params.tau_reset * (params.v_reset - v_applied)
    } else {
        0.0
    };
    RramState::new(state.x + dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dead_zone_keeps_state() {
        let p = RramModelParams::default();
        let s = RramState::new(0.3);
        assert_eq!(rram_step(&p, s, 0.5, 1e-6), s);
        assert_eq!(rram_step(&p, s, -0.99, 1e-6), s);
    }

    #[test]
    fn saturated_lrs_stays() {
        let p = RramModelParams::default();
        assert_eq!(rram_step(&p, RramState::new(1.0), 10.0, 1e-3).x, 1.0);
    }

    #[test]
    fn one_volt_overdrive_for_tau_completes_set() {
        let p = RramModelParams::default();
        let s = rram_step(&p, RramState::new(0.0), p.v_set + 1.0, p.tau_set);
        assert_eq!(s.x, 1.0);
        let half = rram_step(&p, RramState::new(0.0), p.v_set + 0.5, p.tau_set);
        assert!((half.x - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reset_moves_towards_hrs() {
        let p = RramModelParams::default();
        let s = rram_step(&p, RramState::new(1.0), p.v_reset - 0.25, p.tau_reset);
        assert!((s.x - 0.75).abs() < 1e-12);
    }

    #[test]
    fn end_states_hit_extreme_resistances() {
        let p = RramModelParams::default();
        assert!((p.resistance(0.0) - p.r_off).abs() < 1e-9);
        assert!((p.resistance(1.0) - p.r_on).abs() < 1e-9);
    }

    #[test]
    fn invalid_params() {
        let p = RramModelParams { r_on: 2e3, r_off: 1e3, ..Default::default() };
        assert!(p.validate().is_err());
        let p = RramModelParams { tau_set: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn resistance_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let p = RramModelParams::default();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(p.resistance(lo) >= p.resistance(hi));
        }

        #[test]
        fn state_stays_in_unit_interval(x in 0.0f64..=1.0, v in -50.0f64..50.0, dt in 1e-12f64..1e-3) {
            let p = RramModelParams::default();
            let s = rram_step(&p, RramState::new(x), v, dt);
            prop_assert!((0.0..=1.0).contains(&s.x));
        }
    }
}
