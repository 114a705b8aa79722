use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::devices::{MosInstance, MosModelParams, Polarity, RramModelParams, Waveform};

/// Index of the reference node `0`.
pub const GROUND: usize = 0;

#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    Resistor {
        a: usize,
        b: usize,
        r: f64,
    },
    Capacitor {
        a: usize,
        b: usize,
        c: f64,
        ic: Option<f64>,
    },
    VSource {
        pos: usize,
        neg: usize,
        wave: Waveform,
    },
    /// Current flows from `pos` through the source into `neg`.
    ISource {
        pos: usize,
        neg: usize,
        wave: Waveform,
        compliance: Option<f64>,
    },
    Mosfet(MosInstance),
    Rram {
        a: usize,
        b: usize,
        model: String,
        x0: f64,
    },
    /// Ideal unity-gain buffer: `v(output) = v(input)`, with an optional
    /// input capacitance to ground.
    Buffer {
        input: usize,
        output: usize,
        cin: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub name: String,
    pub kind: ElementKind,
}

impl Element {
    pub fn terminals(&self) -> Vec<usize> {
        match &self.kind {
            ElementKind::Resistor { a, b, .. }
            | ElementKind::Capacitor { a, b, .. }
            | ElementKind::Rram { a, b, .. } => vec![*a, *b],
            ElementKind::VSource { pos, neg, .. } | ElementKind::ISource { pos, neg, .. } => {
                vec![*pos, *neg]
            }
            ElementKind::Mosfet(m) => vec![m.drain, m.gate, m.source, m.bulk],
            ElementKind::Buffer { input, output, .. } => vec![*input, *output],
        }
    }
}

/// Elaborated, validated circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub title: String,
    nodes: Vec<String>,
    node_index: HashMap<String, usize>,
    pub elements: Vec<Element>,
    pub mos_models: BTreeMap<String, MosModelParams>,
    pub rram_models: BTreeMap<String, RramModelParams>,
    pub warnings: Vec<String>,
}

impl Circuit {
    pub(crate) fn new(title: String) -> Self {
        let mut c = Self {
            title,
            nodes: Vec::new(),
            node_index: HashMap::new(),
            elements: Vec::new(),
            mos_models: BTreeMap::new(),
            rram_models: BTreeMap::new(),
            warnings: Vec::new(),
        };
        c.intern("0");
        c
    }

    pub(crate) fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.node_index.get(name) {
            return i;
        }
        let i = self.nodes.len();
        self.nodes.push(name.to_string());
        self.node_index.insert(name.to_string(), i);
        i
    }

    /// Number of nodes including ground.
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, name: &str) -> Option<usize> {
        self.node_index.get(&name.to_ascii_lowercase()).copied()
    }

    pub fn node_name(&self, idx: usize) -> &str {
        &self.nodes[idx]
    }

    pub fn node_names(&self) -> &[String] {
        &self.nodes
    }

    pub fn element(&self, name: &str) -> Option<&Element> {
        let name = name.to_ascii_lowercase();
        self.elements.iter().find(|e| e.name == name)
    }

    pub fn element_mut(&mut self, name: &str) -> Option<&mut Element> {
        let name = name.to_ascii_lowercase();
        self.elements.iter_mut().find(|e| e.name == name)
    }

    /// Replace the waveform of an independent source.
    pub fn set_source(&mut self, name: &str, wave: Waveform) -> Result<(), String> {
        match self.element_mut(name).map(|e| &mut e.kind) {
            Some(ElementKind::VSource { wave: w, .. }) | Some(ElementKind::ISource { wave: w, .. }) => {
                *w = wave;
                Ok(())
            }
            Some(_) => Err(format!("'{name}' is not an independent source")),
            None => Err(format!("unknown source '{name}'")),
        }
    }

    pub fn source_wave(&self, name: &str) -> Option<Waveform> {
        match self.element(name).map(|e| &e.kind) {
            Some(ElementKind::VSource { wave, .. }) | Some(ElementKind::ISource { wave, .. }) => Some(*wave),
            _ => None,
        }
    }

    pub fn mosfets(&self) -> impl Iterator<Item = (&str, &MosInstance)> {
        self.elements.iter().filter_map(|e| match &e.kind {
            ElementKind::Mosfet(m) => Some((e.name.as_str(), m)),
            _ => None,
        })
    }

    pub fn mosfets_mut(&mut self) -> impl Iterator<Item = (&str, &mut MosInstance)> {
        self.elements.iter_mut().filter_map(|e| match &mut e.kind {
            ElementKind::Mosfet(m) => Some((e.name.as_str(), m)),
            _ => None,
        })
    }

    pub fn count(&self, pred: impl Fn(&ElementKind) -> bool) -> usize {
        self.elements.iter().filter(|e| pred(&e.kind)).count()
    }

    /// Canonical card text; parsing it back yields an equal circuit.
    pub fn to_netlist(&self) -> String {
        let mut out = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(out, ".title {}", self.title);
        }
        for (name, m) in &self.mos_models {
            let kind = match m.polarity {
                Polarity::N => "NMOS",
                Polarity::P => "PMOS",
            };
            let _ = writeln!(out, ".model {name} {kind} (VTH={:e} KP={:e} LAMBDA={:e})", m.vth, m.kp, m.lambda);
        }
        for (name, m) in &self.rram_models {
            let _ = writeln!(
                out,
                ".model {name} RRAM (RON={:e} ROFF={:e} VSET={:e} VRESET={:e} TAUSET={:e} TAURESET={:e})",
                m.r_on, m.r_off, m.v_set, m.v_reset, m.tau_set, m.tau_reset
            );
        }
        let n = |i: usize| self.nodes[i].as_str();
        for e in &self.elements {
            let name = &e.name;
            let _ = match &e.kind {
                ElementKind::Resistor { a, b, r } => writeln!(out, "{name} {} {} {r:e}", n(*a), n(*b)),
                ElementKind::Capacitor { a, b, c, ic } => {
                    let ic = ic.map(|v| format!(" IC={v:e}")).unwrap_or_default();
                    writeln!(out, "{name} {} {} {c:e}{ic}", n(*a), n(*b))
                }
                ElementKind::VSource { pos, neg, wave } => {
                    writeln!(out, "{name} {} {} {}", n(*pos), n(*neg), wave_text(wave))
                }
                ElementKind::ISource { pos, neg, wave, compliance } => {
                    let comp = compliance.map(|v| format!(" VCOMP={v:e}")).unwrap_or_default();
                    writeln!(out, "{name} {} {} {}{comp}", n(*pos), n(*neg), wave_text(wave))
                }
                ElementKind::Mosfet(m) => writeln!(
                    out,
                    "{name} {} {} {} {} {} W={:e} L={:e} DVTH={:e} DBETA={:e}",
                    n(m.drain),
                    n(m.gate),
                    n(m.source),
                    n(m.bulk),
                    m.model,
                    m.w,
                    m.l,
                    m.delta_vth,
                    m.delta_beta
                ),
                ElementKind::Rram { a, b, model, x0 } => {
                    writeln!(out, "{name} {} {} RRAM {model} X0={x0:e}", n(*a), n(*b))
                }
                ElementKind::Buffer { input, output, cin } => {
                    writeln!(out, "{name} {} {} BUF CIN={cin:e}", n(*input), n(*output))
                }
            };
        }
        out.push_str(".end\n");
        out
    }
}

fn wave_text(w: &Waveform) -> String {
    match w {
        Waveform::Dc(v) => format!("DC {v:e}"),
        Waveform::Pulse(p) => format!(
            "PULSE({:e} {:e} {:e} {:e} {:e} {:e} {:e})",
            p.v1,
            p.v2,
            p.delay,
            p.rise,
            p.fall,
            p.width,
            p.period.unwrap_or(0.0)
        ),
    }
}
