//! Unknown layout and residual/Jacobian assembly.
//!
//! Unknowns are the non-ground node voltages followed by one branch current
//! per voltage source, per buffer output and per capacitive element. Each
//! element contributes the current it draws out of every node to the residual
//! `F(x)`; branch rows hold the element's constitutive equation. Newton then
//! solves `J * dx = -F`.

use super::lu::DenseMatrix;
use crate::devices::{mos_eval, MosEval, Region};
use crate::netlist::{Circuit, ElementKind};

/// Where each element keeps its extra unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    /// Non-ground node count.
    pub nodes: usize,
    /// Per element: branch-current unknown (sources, buffer outputs, capacitors).
    pub branch: Vec<Option<usize>>,
    /// Per element: capacitor-current unknown of a buffer's input capacitance.
    pub cin_branch: Vec<Option<usize>>,
    pub size: usize,
}

impl Layout {
    pub fn new(circuit: &Circuit) -> Self {
        let nodes = circuit.num_nodes() - 1;
        let mut next = nodes;
        let mut take = || {
            next += 1;
            next - 1
        };
        let mut branch = Vec::with_capacity(circuit.elements.len());
        let mut cin_branch = Vec::with_capacity(circuit.elements.len());
        for e in &circuit.elements {
            match &e.kind {
                ElementKind::VSource { .. } | ElementKind::Capacitor { .. } => {
                    branch.push(Some(take()));
                    cin_branch.push(None);
                }
                ElementKind::Buffer { cin, .. } => {
                    branch.push(Some(take()));
                    cin_branch.push(if *cin > 0.0 { Some(take()) } else { None });
                }
                _ => {
                    branch.push(None);
                    cin_branch.push(None);
                }
            }
        }
        Self { nodes, branch, cin_branch, size: next }
    }

    /// Unknown index of a node, `None` for ground.
    #[inline]
    pub fn node(&self, n: usize) -> Option<usize> {
        n.checked_sub(1)
    }

    pub fn voltage(&self, x: &[f64], n: usize) -> f64 {
        self.node(n).map_or(0.0, |i| x[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    BackwardEuler,
    Trapezoidal,
}

/// How reactive elements are treated during one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reactive<'a> {
    /// Capacitors open.
    Open,
    /// Capacitors with an initial condition are held at it; others open.
    InitialCondition,
    /// Companion model of one time step of length `h`. `history` holds the
    /// previous `(voltage, current)` of each capacitive slot, indexed like
    /// the slot's branch unknown.
    Companion { h: f64, method: Method, history: &'a [(f64, f64)] },
}

/// Everything besides `x` that a residual evaluation depends on.
#[derive(Debug, Clone, Copy)]
pub struct StampContext<'a> {
    pub time: f64,
    /// Multiplier on every independent source (source stepping).
    pub source_scale: f64,
    /// Conductance from every node to ground.
    pub gshunt: f64,
    pub reactive: Reactive<'a>,
    /// Present resistance of every element (only read for RRAM cells).
    pub rram_resistance: &'a [f64],
}

/// Residual, Jacobian and per-row current scale at one point.
pub struct Assembled {
    pub residual: Vec<f64>,
    pub jacobian: DenseMatrix,
    /// Largest absolute current entering or leaving each node row.
    pub scale: Vec<f64>,
}

struct Stamper<'l> {
    layout: &'l Layout,
    f: Vec<f64>,
    j: DenseMatrix,
    scale: Vec<f64>,
}

impl Stamper<'_> {
    /// Current `i` leaving node `n`.
    fn current(&mut self, n: usize, i: f64) {
        if let Some(r) = self.layout.node(n) {
            self.f[r] += i;
            self.scale[r] = self.scale[r].max(i.abs());
        }
    }

    /// `d F[node row] / d x[col]`.
    fn jn(&mut self, row_node: usize, col: Option<usize>, v: f64) {
        if let (Some(r), Some(c)) = (self.layout.node(row_node), col) {
            self.j.add(r, c, v);
        }
    }

    /// Two-terminal conductance `g` between `a` and `b` carrying current `i` a->b.
    fn conductance(&mut self, a: usize, b: usize, g: f64, i: f64) {
        self.current(a, i);
        self.current(b, -i);
        let (ca, cb) = (self.layout.node(a), self.layout.node(b));
        self.jn(a, ca, g);
        self.jn(a, cb, -g);
        self.jn(b, ca, -g);
        self.jn(b, cb, g);
    }

    /// Branch current unknown `k` flowing a->b.
    fn branch_current(&mut self, a: usize, b: usize, k: usize, i: f64) {
        self.current(a, i);
        self.current(b, -i);
        self.jn(a, Some(k), 1.0);
        self.jn(b, Some(k), -1.0);
    }

    fn branch_row_voltage(&mut self, k: usize, a: usize, b: usize, coeff: f64) {
        if let Some(c) = self.layout.node(a) {
            self.j.add(k, c, coeff);
        }
        if let Some(c) = self.layout.node(b) {
            self.j.add(k, c, -coeff);
        }
    }

    /// Capacitive slot `k` between `a` and `b` with capacitance `c`.
    #[allow(clippy::too_many_arguments)]
    fn capacitor(&mut self, ctx: &StampContext, x: &[f64], k: usize, a: usize, b: usize, c: f64, ic: Option<f64>) {
        let i = x[k];
        self.branch_current(a, b, k, i);
        let v = self.layout.voltage(x, a) - self.layout.voltage(x, b);
        match (ctx.reactive, ic) {
            (Reactive::InitialCondition, Some(ic)) => {
                self.f[k] = v - ic;
                self.branch_row_voltage(k, a, b, 1.0);
            }
            (Reactive::Open, _) | (Reactive::InitialCondition, None) => {
                self.f[k] = i;
                self.j.add(k, k, 1.0);
            }
            (Reactive::Companion { h, method, history }, _) => {
                let (v_prev, i_prev) = history[k];
                let (geq, hist) = match method {
                    Method::BackwardEuler => (c / h, 0.0),
                    Method::Trapezoidal => (2.0 * c / h, i_prev),
                };
                self.f[k] = i - geq * (v - v_prev) + hist;
                self.j.add(k, k, 1.0);
                self.branch_row_voltage(k, a, b, -geq);
            }
        }
    }
}

/// Soft-compliance current source: `i = I * tanh(v / vcomp)` and its slope.
pub fn compliant_current(value: f64, v: f64, compliance: Option<f64>) -> (f64, f64) {
    match compliance {
        None => (value, 0.0),
        Some(vc) => {
            let t = (v / vc).tanh();
            (value * t, value * (1.0 - t * t) / vc)
        }
    }
}

/// MOSFET evaluation at the terminal voltages found in `x`.
pub fn eval_mosfet(circuit: &Circuit, layout: &Layout, m: &crate::devices::MosInstance, x: &[f64]) -> MosEval {
    let model = &circuit.mos_models[&m.model];
    let vd = layout.voltage(x, m.drain);
    let vg = layout.voltage(x, m.gate);
    let vs = layout.voltage(x, m.source);
    mos_eval(model, m, vg - vs, vd - vs).unwrap_or(MosEval {
        id: f64::NAN,
        region: Region::Cutoff,
        gm: f64::NAN,
        gds: f64::NAN,
    })
}

pub fn assemble(circuit: &Circuit, layout: &Layout, ctx: &StampContext, x: &[f64]) -> Assembled {
    let n = layout.size;
    let mut s = Stamper { layout, f: vec![0.0; n], j: DenseMatrix::zeros(n), scale: vec![0.0; n] };

    for node in 1..=layout.nodes {
        let v = x[node - 1];
        s.conductance(node, 0, ctx.gshunt, ctx.gshunt * v);
    }

    for (idx, e) in circuit.elements.iter().enumerate() {
        match &e.kind {
            ElementKind::Resistor { a, b, r } => {
                let g = 1.0 / r;
                let v = layout.voltage(x, *a) - layout.voltage(x, *b);
                s.conductance(*a, *b, g, g * v);
            }
            ElementKind::Rram { a, b, .. } => {
                let g = 1.0 / ctx.rram_resistance[idx];
                let v = layout.voltage(x, *a) - layout.voltage(x, *b);
                s.conductance(*a, *b, g, g * v);
            }
            ElementKind::Capacitor { a, b, c, ic } => {
                let k = layout.branch[idx].expect("capacitor branch");
                s.capacitor(ctx, x, k, *a, *b, *c, *ic);
            }
            ElementKind::VSource { pos, neg, wave } => {
                let k = layout.branch[idx].expect("source branch");
                s.branch_current(*pos, *neg, k, x[k]);
                let v = layout.voltage(x, *pos) - layout.voltage(x, *neg);
                s.f[k] = v - ctx.source_scale * wave.value(ctx.time);
                s.branch_row_voltage(k, *pos, *neg, 1.0);
            }
            ElementKind::ISource { pos, neg, wave, compliance } => {
                let value = ctx.source_scale * wave.value(ctx.time);
                let v = layout.voltage(x, *pos) - layout.voltage(x, *neg);
                let (i, g) = compliant_current(value, v, *compliance);
                s.current(*pos, i);
                s.current(*neg, -i);
                if g != 0.0 {
                    let (cp, cn) = (layout.node(*pos), layout.node(*neg));
                    s.jn(*pos, cp, g);
                    s.jn(*pos, cn, -g);
                    s.jn(*neg, cp, -g);
                    s.jn(*neg, cn, g);
                }
            }
            ElementKind::Mosfet(m) => {
                let ev = eval_mosfet(circuit, layout, m, x);
                s.current(m.drain, ev.id);
                s.current(m.source, -ev.id);
                let (cd, cg, cs) = (layout.node(m.drain), layout.node(m.gate), layout.node(m.source));
                for (row, sign) in [(m.drain, 1.0), (m.source, -1.0)] {
                    s.jn(row, cd, sign * ev.gds);
                    s.jn(row, cg, sign * ev.gm);
                    s.jn(row, cs, -sign * (ev.gm + ev.gds));
                }
            }
            ElementKind::Buffer { input, output, cin } => {
                let k = layout.branch[idx].expect("buffer branch");
                s.branch_current(*output, 0, k, x[k]);
                s.f[k] = layout.voltage(x, *output) - layout.voltage(x, *input);
                s.branch_row_voltage(k, *output, 0, 1.0);
                if let Some(c) = layout.node(*input) {
                    s.j.add(k, c, -1.0);
                }
                if let Some(kc) = layout.cin_branch[idx] {
                    s.capacitor(ctx, x, kc, *input, 0, *cin, None);
                }
            }
        }
    }
    Assembled { residual: s.f, jacobian: s.j, scale: s.scale }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::load;

    fn ctx<'a>(rram: &'a [f64]) -> StampContext<'a> {
        StampContext { time: 0.0, source_scale: 1.0, gshunt: 0.0, reactive: Reactive::Open, rram_resistance: rram }
    }

    #[test]
    fn resistive_stamp_is_structurally_symmetric() {
        let c = load("R1 a b 1k\nR2 b 0 2k\nR3 a 0 500\nR4 b c 10\nR5 c 0 1").unwrap();
        let layout = Layout::new(&c);
        let rr = vec![0.0; c.elements.len()];
        let asm = assemble(&c, &layout, &ctx(&rr), &vec![0.0; layout.size]);
        let j = &asm.jacobian;
        for r in 0..layout.size {
            for col in 0..layout.size {
                assert_eq!(j.get(r, col) != 0.0, j.get(col, r) != 0.0);
                assert!((j.get(r, col) - j.get(col, r)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let text = ".model n nmos (LAMBDA=0.05)\n.model p pmos (LAMBDA=0.05)\n\
                    V1 vdd 0 3\nI1 vdd g 50u VCOMP=0.1\nM1 g g 0 0 n W=10u L=1u\nM2 d g 0 0 n W=10u L=1u\n\
                    M3 d pg vdd vdd p W=20u L=1u\nR1 pg 0 10k\nC1 d 0 1p\nXb d out BUF CIN=1p\nR2 out 0 1k";
        let c = load(text).unwrap();
        let layout = Layout::new(&c);
        let rr = vec![0.0; c.elements.len()];
        let hist = vec![(0.1, 1e-6); layout.size];
        let ctx = StampContext {
            time: 0.0,
            source_scale: 1.0,
            gshunt: 1e-9,
            reactive: Reactive::Companion { h: 1e-9, method: Method::Trapezoidal, history: &hist },
            rram_resistance: &rr,
        };
        let x: Vec<f64> = (0..layout.size).map(|i| 0.3 + 0.37 * i as f64 % 2.9).collect();
        let base = assemble(&c, &layout, &ctx, &x);
        let h = 1e-7;
        for col in 0..layout.size {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[col] += h;
            xm[col] -= h;
            let fp = assemble(&c, &layout, &ctx, &xp).residual;
            let fm = assemble(&c, &layout, &ctx, &xm).residual;
            for row in 0..layout.size {
                let fd = (fp[row] - fm[row]) / (2.0 * h);
                let an = base.jacobian.get(row, col);
                // Roundoff of the differenced residuals bounds what the quotient can resolve.
                let noise = 8.0 * f64::EPSILON * fp[row].abs().max(fm[row].abs()) / h;
                assert!((fd - an).abs() <= 1e-6 * an.abs() + noise + 1e-12, "J[{row}][{col}] fd={fd} an={an}");
            }
        }
    }
}
