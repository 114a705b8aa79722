//! Damped Newton iteration and the DC operating point with homotopy fallbacks.

use std::collections::BTreeMap;

use super::lu::linear_solve;
use super::mna::{assemble, compliant_current, eval_mosfet, Layout, Reactive, StampContext};
use super::EngineError;
use crate::devices::Region;
use crate::netlist::{Circuit, ElementKind};

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    /// Absolute current tolerance (A).
    pub abstol: f64,
    pub reltol: f64,
    /// Absolute voltage tolerance (V).
    pub vntol: f64,
    pub max_iter: usize,
    /// Node-to-ground shunt conductances tried in order when the direct
    /// solve fails. The last rung is the permanent shunt of every solve.
    pub gmin_ladder: Vec<f64>,
    /// Source multipliers tried in order as the last resort.
    pub source_steps: Vec<f64>,
    /// Largest node-voltage change allowed per iteration (V).
    pub max_step: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            abstol: 1e-9,
            reltol: 1e-6,
            vntol: 1e-6,
            max_iter: 100,
            gmin_ladder: (3..=12).map(|e| 10f64.powi(-e)).collect(),
            source_steps: (1..=10).map(|k| k as f64 / 10.0).collect(),
            max_step: 0.5,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::Config(m.to_string()));
        if !(self.abstol > 0.0 && self.reltol > 0.0 && self.vntol > 0.0 && self.max_step > 0.0) {
            return bad("tolerances and step limit must be > 0");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be > 0");
        }
        if self.gmin_ladder.is_empty() || self.gmin_ladder.iter().any(|g| !(*g > 0.0)) {
            return bad("gmin ladder must be non-empty and positive");
        }
        if self.gmin_ladder.windows(2).any(|w| w[1] >= w[0]) {
            return bad("gmin ladder must be strictly decreasing");
        }
        if self.source_steps.last() != Some(&1.0) {
            return bad("source stepping must end at 1.0");
        }
        Ok(())
    }

    /// Permanent node shunt.
    pub fn gshunt(&self) -> f64 {
        *self.gmin_ladder.last().unwrap_or(&1e-12)
    }
}

/// Which strategy produced the operating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Homotopy {
    Direct,
    GminStepping,
    SourceStepping,
}

/// KCL residual summary of a solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KclCheck {
    /// Node with the largest residual relative to its allowance.
    pub worst_node: usize,
    pub residual: f64,
    /// `residual / (abstol + reltol * scale)`; at most 1 when the bound holds.
    pub ratio: f64,
}

impl KclCheck {
    pub fn holds(&self) -> bool {
        self.ratio <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    /// Voltage of every node by index; entry 0 is ground.
    pub node_voltages: Vec<f64>,
    /// Element current by element name (see [`element_currents`]).
    pub branch_currents: BTreeMap<String, f64>,
    pub regions: BTreeMap<String, Region>,
    pub homotopy: Homotopy,
    pub iterations: usize,
    pub kcl: KclCheck,
    /// Raw unknown vector, reusable as a warm start.
    pub solution: Vec<f64>,
}

impl OperatingPoint {
    pub fn voltage(&self, circuit: &Circuit, node: &str) -> Option<f64> {
        circuit.node(node).map(|i| self.node_voltages[i])
    }

    pub fn current(&self, element: &str) -> Option<f64> {
        self.branch_currents.get(&element.to_ascii_lowercase()).copied()
    }
}

pub(crate) struct Converged {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub kcl: KclCheck,
}

fn kcl_of(layout: &Layout, residual: &[f64], scale: &[f64], cfg: &NewtonConfig) -> KclCheck {
    let mut worst = KclCheck { worst_node: 0, residual: 0.0, ratio: 0.0 };
    for r in 0..layout.nodes {
        let allowance = cfg.abstol + cfg.reltol * scale[r];
        let ratio = residual[r].abs() / allowance;
        if ratio > worst.ratio || !ratio.is_finite() {
            worst = KclCheck { worst_node: r + 1, residual: residual[r].abs(), ratio };
        }
    }
    worst
}

/// Plain damped Newton from `x0`.
pub(crate) fn newton(
    circuit: &Circuit,
    layout: &Layout,
    ctx: &StampContext,
    x0: &[f64],
    cfg: &NewtonConfig,
) -> Result<Converged, EngineError> {
    let mut x = x0.to_vec();
    let mut step_small = false;
    let mut last_kcl = KclCheck { worst_node: 0, residual: f64::INFINITY, ratio: f64::INFINITY };
    for iter in 0..=cfg.max_iter {
        let asm = assemble(circuit, layout, ctx, &x);
        let kcl = kcl_of(layout, &asm.residual, &asm.scale, cfg);
        let branch_ok = asm.residual[layout.nodes..].iter().all(|r| r.abs() <= cfg.vntol);
        if step_small && kcl.holds() && branch_ok {
            return Ok(Converged { x, iterations: iter, kcl });
        }
        last_kcl = kcl;
        if iter == cfg.max_iter {
            break;
        }
        let rhs: Vec<f64> = asm.residual.iter().map(|v| -v).collect();
        let dx = linear_solve(&asm.jacobian, &rhs)?;
        if dx.iter().any(|v| !v.is_finite()) {
            break;
        }
        let max_dv = dx[..layout.nodes].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let alpha = if max_dv > cfg.max_step { cfg.max_step / max_dv } else { 1.0 };
        step_small = alpha == 1.0
            && (0..layout.size).all(|k| {
                let tol = if k < layout.nodes { cfg.vntol } else { cfg.abstol };
                dx[k].abs() <= cfg.reltol * x[k].abs().max((x[k] + dx[k]).abs()) + tol
            });
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += alpha * di;
        }
    }
    Err(EngineError::NonConvergence {
        worst_node: circuit.node_name(last_kcl.worst_node).to_string(),
        residual: last_kcl.residual,
        time: None,
    })
}

/// Run Newton with the direct, gmin-stepping and source-stepping strategies in turn.
pub(crate) fn solve_with_homotopy(
    circuit: &Circuit,
    layout: &Layout,
    base: &StampContext,
    x0: &[f64],
    cfg: &NewtonConfig,
) -> Result<(Converged, Homotopy), EngineError> {
    let direct = newton(circuit, layout, base, x0, cfg);
    let mut last_err = match direct {
        Ok(c) => return Ok((c, Homotopy::Direct)),
        Err(e) => e,
    };

    // The final rung equals the permanent shunt, so its result is the answer.
    let mut x = x0.to_vec();
    let mut rung = None;
    for &g in &cfg.gmin_ladder {
        let ctx = StampContext { gshunt: g.max(base.gshunt), ..*base };
        match newton(circuit, layout, &ctx, &x, cfg) {
            Ok(c) => {
                x = c.x.clone();
                rung = Some(c);
            }
            Err(e) => {
                last_err = e;
                rung = None;
                break;
            }
        }
    }
    if let Some(c) = rung {
        return Ok((c, Homotopy::GminStepping));
    }

    let mut x = vec![0.0; layout.size];
    let mut out = None;
    for &s in &cfg.source_steps {
        let ctx = StampContext { source_scale: s * base.source_scale, ..*base };
        match newton(circuit, layout, &ctx, &x, cfg) {
            Ok(c) => {
                x = c.x.clone();
                out = Some(c);
            }
            Err(e) => {
                last_err = e;
                out = None;
                break;
            }
        }
    }
    match out {
        Some(c) => Ok((c, Homotopy::SourceStepping)),
        None => Err(last_err),
    }
}

/// Element currents at a solution.
///
/// Sign conventions: resistors, RRAM cells and capacitors report the current
/// from their first to their second terminal; voltage sources the current
/// entering the positive terminal; current sources the current pushed from
/// `n+` into `n-`; MOSFETs the current into the drain; buffers the current
/// delivered into the output node.
pub fn element_currents(circuit: &Circuit, layout: &Layout, ctx: &StampContext, x: &[f64]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for (idx, e) in circuit.elements.iter().enumerate() {
        let v = |n: usize| layout.voltage(x, n);
        let i = match &e.kind {
            ElementKind::Resistor { a, b, r } => (v(*a) - v(*b)) / r,
            ElementKind::Rram { a, b, .. } => (v(*a) - v(*b)) / ctx.rram_resistance[idx],
            ElementKind::Capacitor { .. } | ElementKind::VSource { .. } => x[layout.branch[idx].unwrap()],
            ElementKind::Buffer { .. } => -x[layout.branch[idx].unwrap()],
            ElementKind::ISource { pos, neg, wave, compliance } => {
                compliant_current(ctx.source_scale * wave.value(ctx.time), v(*pos) - v(*neg), *compliance).0
            }
            ElementKind::Mosfet(m) => eval_mosfet(circuit, layout, m, x).id,
        };
        out.insert(e.name.clone(), i);
    }
    out
}

pub(crate) fn regions(circuit: &Circuit, layout: &Layout, x: &[f64]) -> BTreeMap<String, Region> {
    circuit.mosfets().map(|(name, m)| (name.to_string(), eval_mosfet(circuit, layout, m, x).region)).collect()
}

pub(crate) fn initial_rram_resistance(circuit: &Circuit) -> Vec<f64> {
    circuit
        .elements
        .iter()
        .map(|e| match &e.kind {
            ElementKind::Rram { model, x0, .. } => circuit.rram_models[model].resistance(*x0),
            _ => 0.0,
        })
        .collect()
}

pub(crate) fn build_op(
    circuit: &Circuit,
    layout: &Layout,
    ctx: &StampContext,
    conv: Converged,
    homotopy: Homotopy,
) -> OperatingPoint {
    let mut node_voltages = vec![0.0; circuit.num_nodes()];
    node_voltages[1..].copy_from_slice(&conv.x[..circuit.num_nodes() - 1]);
    OperatingPoint {
        node_voltages,
        branch_currents: element_currents(circuit, layout, ctx, &conv.x),
        regions: regions(circuit, layout, &conv.x),
        homotopy,
        iterations: conv.iterations,
        kcl: conv.kcl,
        solution: conv.x,
    }
}

/// DC operating point with sources at their `t = 0` values and capacitors open.
pub fn solve_op(
    circuit: &Circuit,
    config: &NewtonConfig,
    warm_start: Option<&OperatingPoint>,
) -> Result<OperatingPoint, EngineError> {
    solve_op_with(circuit, config, warm_start, Reactive::Open)
}

pub(crate) fn solve_op_with(
    circuit: &Circuit,
    config: &NewtonConfig,
    warm_start: Option<&OperatingPoint>,
    reactive: Reactive,
) -> Result<OperatingPoint, EngineError> {
    config.validate()?;
    let layout = Layout::new(circuit);
    let rram = initial_rram_resistance(circuit);
    let ctx = StampContext { time: 0.0, source_scale: 1.0, gshunt: config.gshunt(), reactive, rram_resistance: &rram };
    let x0 = match warm_start {
        Some(op) if op.solution.len() == layout.size => op.solution.clone(),
        _ => vec![0.0; layout.size],
    };
    let (conv, homotopy) = solve_with_homotopy(circuit, &layout, &ctx, &x0, config)?;
    Ok(build_op(circuit, &layout, &ctx, conv, homotopy))
}

/// Recompute the KCL residual of an operating point from the element currents
/// alone. Returns the worst node and its residual relative to the allowance
/// `abstol + reltol * max incident |current|`.
pub fn kcl_residual(circuit: &Circuit, op: &OperatingPoint, config: &NewtonConfig) -> KclCheck {
    let n = circuit.num_nodes();
    let mut sum = vec![0.0; n];
    let mut scale = vec![0.0f64; n];
    let mut leave = |node: usize, i: f64| {
        sum[node] += i;
        scale[node] = scale[node].max(i.abs());
    };
    let gs = config.gshunt();
    for node in 1..n {
        leave(node, gs * op.node_voltages[node]);
    }
    for e in &circuit.elements {
        let i = op.branch_currents[&e.name];
        match &e.kind {
            ElementKind::Resistor { a, b, .. }
            | ElementKind::Rram { a, b, .. }
            | ElementKind::Capacitor { a, b, .. } => {
                leave(*a, i);
                leave(*b, -i);
            }
            ElementKind::VSource { pos, neg, .. } | ElementKind::ISource { pos, neg, .. } => {
                leave(*pos, i);
                leave(*neg, -i);
            }
            ElementKind::Mosfet(m) => {
                leave(m.drain, i);
                leave(m.source, -i);
            }
            ElementKind::Buffer { output, .. } => leave(*output, -i),
        }
    }
    let mut worst = KclCheck { worst_node: 0, residual: 0.0, ratio: 0.0 };
    for node in 1..n {
        let ratio = sum[node].abs() / (config.abstol + config.reltol * scale[node]);
        if ratio > worst.ratio {
            worst = KclCheck { worst_node: node, residual: sum[node].abs(), ratio };
        }
    }
    worst
}
