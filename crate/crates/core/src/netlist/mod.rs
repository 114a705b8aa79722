//! SPICE-like netlist front end.
//!
//! Grammar (one card per line, `+` continues the previous card, `*` starts a
//! comment line and `;` an inline comment; keywords are case-insensitive and
//! all names are folded to lower case):
//!
//! ```text
//! .title <text>
//! .model <name> NMOS|PMOS|RRAM [(] <KEY>=<value> ... [)]
//! R<name> <n+> <n-> <ohms>
//! C<name> <n+> <n-> <farads> [IC=<volts>]
//! V<name> <n+> <n-> [DC] <volts> | PULSE(v1 v2 td tr tf pw [per])
//! I<name> <n+> <n-> [DC] <amps>  | PULSE(...)  [VCOMP=<volts>]
//! M<name> <d> <g> <s> <b> <model> [W=<m>] [L=<m>] [DVTH=<V>] [DBETA=<rel>]
//! X<name> <n+> <n-> RRAM <model> [X0=<state>]
//! X<name> <in> <out> BUF [CIN=<farads>]
//! .end
//! ```
//!
//! Current sources push current from `n+` through the source into `n-`.
//! `VCOMP` gives a current source a soft compliance: the delivered current is
//! `I * tanh(v(n+, n-) / VCOMP)`, so it collapses when the source runs out of
//! headroom.

mod circuit;
mod elaborate;
mod lexer;
mod parse;

pub use circuit::{Circuit, Element, ElementKind, GROUND};
pub use elaborate::elaborate;
pub use parse::parse;

use crate::devices::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CardKind {
    Mosfet,
    Resistor,
    Capacitor,
    VSource,
    ISource,
    Rram,
    Buffer,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CardValue {
    Number(f64),
    Waveform(Waveform),
}

/// One element card after tokenization and numeric decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementCard {
    pub line: usize,
    pub name: String,
    pub kind: CardKind,
    pub nodes: Vec<String>,
    pub model: Option<String>,
    pub value: Option<CardValue>,
    pub params: Vec<(String, f64)>,
}

impl ElementCard {
    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Nmos,
    Pmos,
    Rram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCard {
    pub line: usize,
    pub name: String,
    pub kind: ModelKind,
    pub params: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetlistDocument {
    pub title: String,
    pub element_cards: Vec<ElementCard>,
    pub model_cards: Vec<ModelCard>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetlistError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown unit suffix in '{token}'")]
    UnknownSuffix { line: usize, token: String },
    #[error("line {line}: duplicate element name '{name}'")]
    DuplicateElement { line: usize, name: String },
    #[error("line {line}: duplicate model name '{name}'")]
    DuplicateModel { line: usize, name: String },
    #[error("no ground node")]
    NoGround,
    #[error("no elements")]
    NoElements,
    #[error("line {line}: element '{element}' references unknown model '{model}'")]
    UnresolvedModel { line: usize, element: String, model: String },
    #[error("line {line}: element '{element}' needs {expected} terminals, got {got}")]
    TerminalCount { line: usize, element: String, expected: usize, got: usize },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

impl NetlistError {
    pub fn line(&self) -> Option<usize> {
        match self {
            NetlistError::NoGround | NetlistError::NoElements => None,
            NetlistError::Syntax { line, .. }
            | NetlistError::UnknownSuffix { line, .. }
            | NetlistError::DuplicateElement { line, .. }
            | NetlistError::DuplicateModel { line, .. }
            | NetlistError::UnresolvedModel { line, .. }
            | NetlistError::TerminalCount { line, .. }
            | NetlistError::Invalid { line, .. } => Some(*line),
        }
    }
}

/// Decode a number with an optional magnitude suffix (`400u`, `1.5meg`, `2e-3`).
pub fn parse_value(token: &str) -> Option<f64> {
    lexer::parse_number(token).ok()
}

/// Parse and elaborate in one step.
pub fn load(text: &str) -> Result<Circuit, NetlistError> {
    elaborate(&parse(text)?)
}

/// Reference netlists shipped with the crate.
pub mod bundled {
    pub const SET_BRANCH: &str = include_str!("../../netlists/set_branch.cir");
    pub const RESET_BRANCH: &str = include_str!("../../netlists/reset_branch.cir");
    pub const FULL_2M1R1B: &str = include_str!("../../netlists/full_2m1r1b.cir");
    pub const CASCODE_MIRROR: &str = include_str!("../../netlists/cascode_mirror.cir");

    /// `(file name, contents)` for every bundled netlist.
    pub const ALL: &[(&str, &str)] = &[
        ("set_branch.cir", SET_BRANCH),
        ("reset_branch.cir", RESET_BRANCH),
        ("full_2m1r1b.cir", FULL_2M1R1B),
        ("cascode_mirror.cir", CASCODE_MIRROR),
    ];

    pub fn by_name(name: &str) -> Option<&'static str> {
        ALL.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
    }
}
