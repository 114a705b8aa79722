//! Level-1 (square-law) MOSFET with channel-length modulation.
//!
//! Drain current for an n-channel device with `vov = vgs - vth_eff`:
//!
//! - cutoff (`vov <= 0`): `id = 0`
//! - triode (`vds < vov`): `id = kp*(w/l)*(vov*vds - vds^2/2)*(1 + lambda*vds)`
//! - saturation (`vds >= vov`): `id = kp/2*(w/l)*vov^2*(1 + lambda*vds)`
//!
//! The `(1 + lambda*vds)` factor is applied in both conducting regions so that
//! the current and both partial derivatives are continuous at `vds = vov`.
//! Drain and source are interchangeable: for `vds < 0` the device is evaluated
//! with the terminals swapped. P-channel devices are evaluated on negated
//! terminal voltages and the resulting current is negated.

use super::DeviceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    N,
    P,
}

/// Model card parameters shared by all instances that reference the card.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MosModelParams {
    pub polarity: Polarity,
    /// Threshold voltage (V). Negative for typical p-channel cards.
    pub vth: f64,
    /// Process transconductance `mu * Cox` (A/V^2).
    pub kp: f64,
    /// Channel-length modulation coefficient (1/V).
    pub lambda: f64,
}

impl MosModelParams {
    pub fn nmos(vth: f64, kp: f64, lambda: f64) -> Self {
        Self { polarity: Polarity::N, vth, kp, lambda }
    }

    pub fn pmos(vth: f64, kp: f64, lambda: f64) -> Self {
        Self { polarity: Polarity::P, vth, kp, lambda }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.kp > 0.0) || !self.kp.is_finite() {
            return Err(DeviceError::InvalidParameter(format!("KP must be > 0, got {}", self.kp)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(DeviceError::InvalidParameter(format!("LAMBDA must be >= 0, got {}", self.lambda)));
        }
        if !self.vth.is_finite() {
            return Err(DeviceError::InvalidParameter("VTH must be finite".into()));
        }
        Ok(())
    }
}

/// Geometry and per-instance mismatch of a single transistor.
#[derive(Debug, Clone, PartialEq)]
pub struct MosInstance {
    pub drain: usize,
    pub gate: usize,
    pub source: usize,
    pub bulk: usize,
    /// Gate width (m).
    pub w: f64,
    /// Gate length (m).
    pub l: f64,
    pub model: String,
    /// Threshold shift (V), added to the card's `vth`.
    pub delta_vth: f64,
    /// Relative current-factor shift; `kp` is scaled by `1 + delta_beta`.
    pub delta_beta: f64,
}

impl MosInstance {
    pub fn new(nodes: [usize; 4], w: f64, l: f64, model: impl Into<String>) -> Self {
        Self {
            drain: nodes[0],
            gate: nodes[1],
            source: nodes[2],
            bulk: nodes[3],
            w,
            l,
            model: model.into(),
            delta_vth: 0.0,
            delta_beta: 0.0,
        }
    }

    pub fn aspect(&self) -> f64 {
        self.w / self.l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Cutoff,
    Triode,
    Saturation,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Cutoff => "cutoff",
            Region::Triode => "triode",
            Region::Saturation => "saturation",
        }
    }
}

/// Drain current (positive into the drain terminal) and its partials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MosEval {
    pub id: f64,
    pub region: Region,
    /// `d id / d vgs` (S).
    pub gm: f64,
    /// `d id / d vds` (S).
    pub gds: f64,
}

/// Forward-mode n-channel evaluation, `vds >= 0`, threshold already folded in.
fn forward(beta: f64, vth: f64, lambda: f64, vgs: f64, vds: f64) -> MosEval {
    let vov = vgs - vth;
    if vov <= 0.0 {
        return MosEval { id: 0.0, region: Region::Cutoff, gm: 0.0, gds: 0.0 };
    }
    let clm = 1.0 + lambda * vds;
    if vds < vov {
        let core = vov * vds - 0.5 * vds * vds;
        MosEval {
            id: beta * core * clm,
            region: Region::Triode,
            gm: beta * vds * clm,
            gds: beta * ((vov - vds) * clm + core * lambda),
        }
    } else {
        let core = 0.5 * vov * vov;
        MosEval { id: beta * core * clm, region: Region::Saturation, gm: beta * vov * clm, gds: beta * core * lambda }
    }
}

/// Evaluate an n-channel-equivalent device, swapping drain/source when `vds < 0`.
fn symmetric(beta: f64, vth: f64, lambda: f64, vgs: f64, vds: f64) -> MosEval {
    if vds >= 0.0 {
        forward(beta, vth, lambda, vgs, vds)
    } else {
        // Source and drain exchange roles: the controlling voltage is vgd.
        let f = forward(beta, vth, lambda, vgs - vds, -vds);
        MosEval { id: -f.id, region: f.region, gm: -f.gm, gds: f.gm + f.gds }
    }
}

/// Drain current and conductances at the given terminal voltages.
pub fn mos_eval(model: &MosModelParams, inst: &MosInstance, vgs: f64, vds: f64) -> Result<MosEval, DeviceError> {
    if !vgs.is_finite() || !vds.is_finite() {
        return Err(DeviceError::NonFiniteInput { vgs, vds });
    }
    let beta = model.kp * (1.0 + inst.delta_beta) * inst.aspect();
    let vth_eff = model.vth + inst.delta_vth;
    Ok(match model.polarity {
        Polarity::N => symmetric(beta, vth_eff, model.lambda, vgs, vds),
        Polarity::P => {
            let f = symmetric(beta, -vth_eff, model.lambda, -vgs, -vds);
            // id_p(vgs, vds) = -f(-vgs, -vds): the chain rule cancels both signs.
            MosEval { id: -f.id, region: f.region, gm: f.gm, gds: f.gds }
        }
    })
}

fn check_geometry(values: &[f64]) -> Result<(), DeviceError> {
    for &v in values {
        if !(v > 0.0) || !v.is_finite() {
            return Err(DeviceError::InvalidGeometry(v));
        }
    }
    Ok(())
}

/// Ideal mirror ratio `I_out / I_ref = (w1/l1) / (w0/l0)` of a saturated pair
/// without channel-length modulation.
pub fn mirror_ratio_ideal(w0: f64, l0: f64, w1: f64, l1: f64) -> Result<f64, DeviceError> {
    check_geometry(&[w0, l0, w1, l1])?;
    Ok((w1 / l1) / (w0 / l0))
}

/// Mirror ratio of a saturated pair including channel-length modulation:
/// `(w1*l0)/(w0*l1) * (1 + lambda*vds1)/(1 + lambda*vds0)`.
///
/// `vds0` is the drain-source voltage of the reference (diode) device and
/// `vds1` that of the output device.
pub fn mirror_ratio_clm(
    w0: f64,
    l0: f64,
    w1: f64,
    l1: f64,
    lambda: f64,
    vds0: f64,
    vds1: f64,
) -> Result<f64, DeviceError> {
    check_geometry(&[w0, l0, w1, l1])?;
    let denom = 1.0 + lambda * vds0;
    if denom == 0.0 || !denom.is_finite() {
        return Err(DeviceError::DivisionByZero);
    }
    Ok((w1 * l0) / (w0 * l1) * (1.0 + lambda * vds1) / denom)
}
