use std::collections::BTreeMap;

use super::circuit::{Circuit, Element, ElementKind};
use super::{CardKind, CardValue, ElementCard, ModelKind, NetlistDocument, NetlistError};
use crate::devices::{MosInstance, MosModelParams, RramModelParams, Waveform};

fn invalid(line: usize, message: impl Into<String>) -> NetlistError {
    NetlistError::Invalid { line, message: message.into() }
}

fn check_params(line: usize, params: &[(String, f64)], allowed: &[&str]) -> Result<(), NetlistError> {
    match params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        Some((k, _)) => Err(invalid(line, format!("unknown parameter '{}'", k.to_uppercase()))),
        None => Ok(()),
    }
}

fn lookup(params: &[(String, f64)], key: &str, default: f64) -> f64 {
    params.iter().rev().find(|(k, _)| k == key).map(|(_, v)| *v).unwrap_or(default)
}

/// Resolve names, intern nodes and validate a parsed document.
pub fn elaborate(doc: &NetlistDocument) -> Result<Circuit, NetlistError> {
    if doc.element_cards.is_empty() {
        return Err(NetlistError::NoElements);
    }
    let mut circuit = Circuit::new(doc.title.clone());
    let mut model_kinds = BTreeMap::new();

    for m in &doc.model_cards {
        if model_kinds.insert(m.name.clone(), m.kind).is_some() {
            return Err(NetlistError::DuplicateModel { line: m.line, name: m.name.clone() });
        }
        match m.kind {
            ModelKind::Nmos | ModelKind::Pmos => {
                check_params(m.line, &m.params, &["vth", "kp", "lambda"])?;
                let n = m.kind == ModelKind::Nmos;
                let vth = lookup(&m.params, "vth", if n { 0.7 } else { -0.7 });
                let kp = lookup(&m.params, "kp", if n { 170e-6 } else { 60e-6 });
                let lambda = lookup(&m.params, "lambda", 0.05);
                let params =
                    if n { MosModelParams::nmos(vth, kp, lambda) } else { MosModelParams::pmos(vth, kp, lambda) };
                params.validate().map_err(|e| invalid(m.line, e.to_string()))?;
                circuit.mos_models.insert(m.name.clone(), params);
            }
            ModelKind::Rram => {
                check_params(m.line, &m.params, &["ron", "roff", "vset", "vreset", "tauset", "taureset"])?;
                let d = RramModelParams::default();
                let params = RramModelParams {
                    r_on: lookup(&m.params, "ron", d.r_on),
                    r_off: lookup(&m.params, "roff", d.r_off),
                    v_set: lookup(&m.params, "vset", d.v_set),
                    v_reset: lookup(&m.params, "vreset", d.v_reset),
                    tau_set: lookup(&m.params, "tauset", d.tau_set),
                    tau_reset: lookup(&m.params, "taureset", d.tau_reset),
                };
                params.validate().map_err(|e| invalid(m.line, e.to_string()))?;
                circuit.rram_models.insert(m.name.clone(), params);
            }
        }
    }

    if !doc.element_cards.iter().any(|c| c.nodes.iter().any(|n| n == "0")) {
        return Err(NetlistError::NoGround);
    }

    for card in &doc.element_cards {
        let kind = elaborate_card(&mut circuit, card)?;
        circuit.elements.push(Element { name: card.name.clone(), kind });
    }

    let mut touches = vec![0usize; circuit.num_nodes()];
    for e in &circuit.elements {
        for t in e.terminals() {
            touches[t] += 1;
        }
    }
    for (i, &count) in touches.iter().enumerate().skip(1) {
        if count < 2 {
            circuit.warnings.push(format!("node '{}' has only one connection", circuit.node_name(i)));
        }
    }
    Ok(circuit)
}

fn expect_nodes(card: &ElementCard, expected: usize) -> Result<(), NetlistError> {
    if card.nodes.len() != expected {
        return Err(NetlistError::TerminalCount {
            line: card.line,
            element: card.name.clone(),
            expected,
            got: card.nodes.len(),
        });
    }
    Ok(())
}

fn number_value(card: &ElementCard) -> Result<f64, NetlistError> {
    match &card.value {
        Some(CardValue::Number(v)) => Ok(*v),
        _ => Err(invalid(card.line, format!("'{}' needs a numeric value", card.name))),
    }
}

fn elaborate_card(c: &mut Circuit, card: &ElementCard) -> Result<ElementKind, NetlistError> {
    let line = card.line;
    let expected = if card.kind == CardKind::Mosfet { 4 } else { 2 };
    expect_nodes(card, expected)?;
    let nodes: Vec<usize> = card.nodes.iter().map(|n| c.intern(n)).collect();
    let p = &card.params;
    Ok(match card.kind {
        CardKind::Resistor => {
            check_params(line, p, &[])?;
            let r = number_value(card)?;
            if !(r > 0.0) {
                return Err(invalid(line, format!("resistance must be > 0, got {r}")));
            }
            ElementKind::Resistor { a: nodes[0], b: nodes[1], r }
        }
        CardKind::Capacitor => {
            check_params(line, p, &["ic"])?;
            let cap = number_value(card)?;
            if !(cap >= 0.0) {
                return Err(invalid(line, format!("capacitance must be >= 0, got {cap}")));
            }
            ElementKind::Capacitor { a: nodes[0], b: nodes[1], c: cap, ic: card.param("ic") }
        }
        CardKind::VSource | CardKind::ISource => {
            let wave = match &card.value {
                Some(CardValue::Number(v)) => Waveform::Dc(*v),
                Some(CardValue::Waveform(w)) => *w,
                None => return Err(invalid(line, "source needs a value")),
            };
            if card.kind == CardKind::VSource {
                check_params(line, p, &[])?;
                ElementKind::VSource { pos: nodes[0], neg: nodes[1], wave }
            } else {
                check_params(line, p, &["vcomp"])?;
                let compliance = card.param("vcomp");
                if let Some(v) = compliance {
                    if !(v > 0.0) {
                        return Err(invalid(line, "VCOMP must be > 0"));
                    }
                }
                ElementKind::ISource { pos: nodes[0], neg: nodes[1], wave, compliance }
            }
        }
        CardKind::Mosfet => {
            check_params(line, p, &["w", "l", "dvth", "dbeta"])?;
            let model = card.model.clone().unwrap_or_default();
            if !c.mos_models.contains_key(&model) {
                return Err(NetlistError::UnresolvedModel { line, element: card.name.clone(), model });
            }
            let w = card.param("w").unwrap_or(1e-6);
            let l = card.param("l").unwrap_or(1e-6);
            if !(w > 0.0) || !(l > 0.0) {
                return Err(invalid(line, "W and L must be > 0"));
            }
            let mut inst = MosInstance::new([nodes[0], nodes[1], nodes[2], nodes[3]], w, l, model);
            inst.delta_vth = card.param("dvth").unwrap_or(0.0);
            inst.delta_beta = card.param("dbeta").unwrap_or(0.0);
            if !(inst.delta_beta > -1.0) {
                return Err(invalid(line, "DBETA must be > -1"));
            }
            ElementKind::Mosfet(inst)
        }
        CardKind::Rram => {
            check_params(line, p, &["x0"])?;
            let model = card.model.clone().unwrap_or_default();
            if !c.rram_models.contains_key(&model) {
                return Err(NetlistError::UnresolvedModel { line, element: card.name.clone(), model });
            }
            let x0 = card.param("x0").unwrap_or(0.0);
            if !(0.0..=1.0).contains(&x0) {
                return Err(invalid(line, "X0 must lie in [0, 1]"));
            }
            ElementKind::Rram { a: nodes[0], b: nodes[1], model, x0 }
        }
        CardKind::Buffer => {
            check_params(line, p, &["cin"])?;
            let cin = card.param("cin").unwrap_or(0.0);
            if !(cin >= 0.0) {
                return Err(invalid(line, "CIN must be >= 0"));
            }
            if nodes[1] == 0 {
                return Err(invalid(line, "buffer output cannot be ground"));
            }
            ElementKind::Buffer { input: nodes[0], output: nodes[1], cin }
        }
    })
}
