//! Fixed-step transient analysis.

use super::mna::{Layout, Method, Reactive, StampContext};
use super::newton::{element_currents, initial_rram_resistance, newton, solve_op_with, NewtonConfig};
use super::trace::TraceSet;
use super::EngineError;
use crate::devices::{rram_step, RramState};
use crate::netlist::{Circuit, ElementKind};

/// Upper bound on the number of time steps of one run.
pub const MAX_STEPS: usize = 20_000_000;

/// Default step: 1/50 of the fastest source edge, or `tstop / 1000` without edges.
pub fn default_dt(circuit: &Circuit, tstop: f64) -> f64 {
    circuit
        .elements
        .iter()
        .filter_map(|e| match &e.kind {
            ElementKind::VSource { wave, .. } | ElementKind::ISource { wave, .. } => wave.min_edge(),
            _ => None,
        })
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))))
        .map(|edge| edge / 50.0)
        .unwrap_or(tstop / 1000.0)
}

/// Integrate from the `t = 0` operating point to `tstop` with step `dt`.
///
/// Capacitors with an `IC` are held at it in the initial operating point.
/// RRAM cells keep their resistance fixed within a step and advance their
/// state afterwards from the solved cell voltage.
pub fn transient(
    circuit: &Circuit,
    tstop: f64,
    dt: f64,
    method: Method,
    config: &NewtonConfig,
) -> Result<TraceSet, EngineError> {
    if !(dt > 0.0) || !(tstop > dt) || !tstop.is_finite() {
        return Err(EngineError::Config(format!("need 0 < dt < tstop, got dt={dt}, tstop={tstop}")));
    }
    let steps = (tstop / dt - 1e-9).ceil();
    if steps > MAX_STEPS as f64 {
        return Err(EngineError::TooManySteps { steps: steps as u64, limit: MAX_STEPS });
    }
    let steps = steps as usize;
    config.validate()?;

    let layout = Layout::new(circuit);
    let op = solve_op_with(circuit, config, None, Reactive::InitialCondition)?;
    let mut x = op.solution.clone();

    let rram_cells: Vec<(usize, usize, usize, String)> = circuit
        .elements
        .iter()
        .enumerate()
        .filter_map(|(i, e)| match &e.kind {
            ElementKind::Rram { a, b, model, .. } => Some((i, *a, *b, model.clone())),
            _ => None,
        })
        .collect();
    let mut rram_res = initial_rram_resistance(circuit);
    let mut rram_state: Vec<RramState> = circuit
        .elements
        .iter()
        .map(|e| match &e.kind {
            ElementKind::Rram { x0, .. } => RramState::new(*x0),
            _ => RramState::new(0.0),
        })
        .collect();

    // Capacitive slots: (branch unknown, terminal a, terminal b).
    let mut slots = Vec::new();
    for (idx, e) in circuit.elements.iter().enumerate() {
        match &e.kind {
            ElementKind::Capacitor { a, b, .. } => slots.push((layout.branch[idx].unwrap(), *a, *b)),
            ElementKind::Buffer { input, .. } => {
                if let Some(k) = layout.cin_branch[idx] {
                    slots.push((k, *input, 0));
                }
            }
            _ => {}
        }
    }
    let mut history = vec![(0.0, 0.0); layout.size];
    let capture_history = |x: &[f64], history: &mut Vec<(f64, f64)>| {
        for &(k, a, b) in &slots {
            history[k] = (layout.voltage(x, a) - layout.voltage(x, b), x[k]);
        }
    };
    capture_history(&x, &mut history);

    let mut trace = TraceSet::for_circuit(circuit, steps + 1);
    let record = |trace: &mut TraceSet, t: f64, x: &[f64], ctx: &StampContext, states: &[RramState]| {
        let currents = element_currents(circuit, &layout, ctx, x);
        let mut row = Vec::with_capacity(trace.signal_names().len());
        for n in 1..circuit.num_nodes() {
            row.push(x[n - 1]);
        }
        for e in &circuit.elements {
            row.push(currents[&e.name]);
        }
        for &(idx, ..) in &rram_cells {
            row.push(states[idx].x);
        }
        trace.push(t, row);
    };
    let ctx0 = StampContext {
        time: 0.0,
        source_scale: 1.0,
        gshunt: config.gshunt(),
        reactive: Reactive::InitialCondition,
        rram_resistance: &rram_res,
    };
    record(&mut trace, 0.0, &x, &ctx0, &rram_state);
    trace.note_kcl(op.kcl.ratio);

    let mut t_prev = 0.0;
    for k in 1..=steps {
        let t = (k as f64 * dt).min(tstop);
        let h = t - t_prev;
        let ctx = StampContext {
            time: t,
            source_scale: 1.0,
            gshunt: config.gshunt(),
            reactive: Reactive::Companion { h, method, history: &history },
            rram_resistance: &rram_res,
        };
        let conv = newton(circuit, &layout, &ctx, &x, config).map_err(|e| match e {
            EngineError::NonConvergence { worst_node, residual, .. } => {
                EngineError::NonConvergence { worst_node, residual, time: Some(t) }
            }
            other => EngineError::AtTime { time: t, source: Box::new(other) },
        })?;
        x = conv.x;
        trace.note_kcl(conv.kcl.ratio);
        record(&mut trace, t, &x, &ctx, &rram_state);

        for (idx, a, b, model) in &rram_cells {
            let v = layout.voltage(&x, *a) - layout.voltage(&x, *b);
            let params = &circuit.rram_models[model];
            rram_state[*idx] = rram_step(params, rram_state[*idx], v, h);
            rram_res[*idx] = params.resistance(rram_state[*idx].x);
        }
        capture_history(&x, &mut history);
        t_prev = t;
    }
    Ok(trace)
}
