use std::collections::HashSet;

use super::lexer::{group, parse_number, tokenize, Item, NumberError};
use super::{CardKind, CardValue, ElementCard, ModelCard, ModelKind, NetlistDocument, NetlistError};
use crate::devices::Waveform;

/// Logical card: continuation lines folded in, comments removed.
struct Logical {
    line: usize,
    text: String,
}

fn logical_lines(text: &str) -> Result<Vec<Logical>, NetlistError> {
    let mut out: Vec<Logical> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split(';').next().unwrap_or("").trim();
        if body.is_empty() || body.starts_with('*') {
            continue;
        }
        if let Some(rest) = body.strip_prefix('+') {
            match out.last_mut() {
                Some(prev) => {
                    prev.text.push(' ');
                    prev.text.push_str(rest);
                }
                None => {
                    return Err(NetlistError::Syntax {
                        line,
                        message: "continuation line without a preceding card".into(),
                    })
                }
            }
            continue;
        }
        out.push(Logical { line, text: body.to_string() });
    }
    Ok(out)
}

fn number(line: usize, token: &str) -> Result<f64, NetlistError> {
    parse_number(token).map_err(|e| match e {
        NumberError::UnknownSuffix(token) => NetlistError::UnknownSuffix { line, token },
        NumberError::NotANumber => {
            NetlistError::Syntax { line, message: format!("expected a number, found '{token}'") }
        }
    })
}

fn syntax(line: usize, message: impl Into<String>) -> NetlistError {
    NetlistError::Syntax { line, message: message.into() }
}

/// Parse netlist text into a document of typed cards.
pub fn parse(text: &str) -> Result<NetlistDocument, NetlistError> {
    let mut doc = NetlistDocument::default();
    let mut seen = HashSet::new();
    for card in logical_lines(text)? {
        let line = card.line;
        if card.text.starts_with('.') {
            let mut words = card.text.splitn(2, char::is_whitespace);
            let directive = words.next().unwrap_or("").to_ascii_lowercase();
            let rest = words.next().unwrap_or("").trim();
            match directive.as_str() {
                ".title" => doc.title = rest.to_string(),
                ".model" => doc.model_cards.push(parse_model(line, rest)?),
                ".end" => break,
                other => return Err(syntax(line, format!("unsupported directive '{other}'"))),
            }
            continue;
        }
        let tokens = tokenize(&card.text);
        let items = group(&tokens).map_err(|m| syntax(line, m))?;
        let parsed = parse_element(line, items)?;
        if !seen.insert(parsed.name.clone()) {
            return Err(NetlistError::DuplicateElement { line, name: parsed.name });
        }
        doc.element_cards.push(parsed);
    }
    Ok(doc)
}

fn params_of(line: usize, items: &[Item]) -> Result<Vec<(String, f64)>, NetlistError> {
    items
        .iter()
        .filter_map(|it| match it {
            Item::Param(k, v) => Some((k, v)),
            _ => None,
        })
        .map(|(k, v)| Ok((k.clone(), number(line, v)?)))
        .collect()
}

fn parse_model(line: usize, rest: &str) -> Result<ModelCard, NetlistError> {
    let items = group(&tokenize(rest)).map_err(|m| syntax(line, m))?;
    let mut it = items.into_iter();
    let name = match it.next() {
        Some(Item::Word(w)) => w.to_ascii_lowercase(),
        _ => return Err(syntax(line, ".model needs a name")),
    };
    let (kind_word, mut params) = match it.next() {
        Some(Item::Word(w)) => (w, Vec::new()),
        Some(Item::Call(w, args)) => (w, args),
        _ => return Err(syntax(line, ".model needs a type")),
    };
    params.extend(it);
    if let Some(stray) = params.iter().find(|p| !matches!(p, Item::Param(..))) {
        return Err(syntax(line, format!("expected KEY=value in .model, found {stray:?}")));
    }
    let kind = match kind_word.to_ascii_lowercase().as_str() {
        "nmos" => ModelKind::Nmos,
        "pmos" => ModelKind::Pmos,
        "rram" => ModelKind::Rram,
        other => return Err(syntax(line, format!("unknown model type '{other}'"))),
    };
    Ok(ModelCard { line, name, kind, params: params_of(line, &params)? })
}

fn words(items: &[Item]) -> Vec<String> {
    items
        .iter()
        .filter_map(|it| match it {
            Item::Word(w) => Some(w.to_ascii_lowercase()),
            _ => None,
        })
        .collect()
}

fn parse_source_value(line: usize, items: &[Item]) -> Result<(Vec<String>, CardValue), NetlistError> {
    let mut positional = words(items);
    let calls: Vec<_> = items
        .iter()
        .filter_map(|it| match it {
            Item::Call(n, a) => Some((n, a)),
            _ => None,
        })
        .collect();
    if calls.len() > 1 {
        return Err(syntax(line, "more than one source function"));
    }
    if let Some((fname, args)) = calls.first() {
        if fname.as_str() != "pulse" {
            return Err(syntax(line, format!("unsupported source function '{fname}'")));
        }
        let args = words(args);
        if !(6..=7).contains(&args.len()) {
            return Err(syntax(line, "PULSE needs 6 or 7 arguments"));
        }
        let v: Vec<f64> = args.iter().map(|a| number(line, a)).collect::<Result<_, _>>()?;
        let period = v.get(6).copied().unwrap_or(0.0);
        let w = Waveform::pulse(v[0], v[1], v[2], v[3], v[4], v[5], period)
            .map_err(|e| NetlistError::Invalid { line, message: e.to_string() })?;
        positional.retain(|w| w != "dc");
        return Ok((positional, CardValue::Waveform(w)));
    }
    let value = if let Some(k) = positional.iter().position(|w| w == "dc") {
        if k + 1 >= positional.len() {
            return Err(syntax(line, "DC needs a value"));
        }
        let v = positional.remove(k + 1);
        positional.remove(k);
        v
    } else {
        positional.pop().ok_or_else(|| syntax(line, "missing source value"))?
    };
    Ok((positional, CardValue::Number(number(line, &value)?)))
}

fn parse_element(line: usize, items: Vec<Item>) -> Result<ElementCard, NetlistError> {
    let name = match items.first() {
        Some(Item::Word(w)) => w.to_ascii_lowercase(),
        _ => return Err(syntax(line, "card must start with an element name")),
    };
    let body = &items[1..];
    let params = params_of(line, body)?;
    let letter = name.chars().next().unwrap_or(' ');
    let mut card = ElementCard {
        line,
        name: name.clone(),
        kind: CardKind::Resistor,
        nodes: Vec::new(),
        model: None,
        value: None,
        params,
    };
    let no_calls = |kind: &str| -> Result<(), NetlistError> {
        if body.iter().any(|i| matches!(i, Item::Call(..))) {
            Err(syntax(line, format!("{kind} cards take no source function")))
        } else {
            Ok(())
        }
    };
    match letter {
        'r' | 'c' => {
            no_calls("R/C")?;
            card.kind = if letter == 'r' { CardKind::Resistor } else { CardKind::Capacitor };
            let mut w = words(body);
            let v = w.pop().ok_or_else(|| syntax(line, "missing value"))?;
            card.value = Some(CardValue::Number(number(line, &v)?));
            card.nodes = w;
        }
        'v' | 'i' => {
            card.kind = if letter == 'v' { CardKind::VSource } else { CardKind::ISource };
            let (nodes, value) = parse_source_value(line, body)?;
            card.nodes = nodes;
            card.value = Some(value);
        }
        'm' => {
            no_calls("M")?;
            card.kind = CardKind::Mosfet;
            let mut w = words(body);
            card.model = Some(w.pop().ok_or_else(|| syntax(line, "missing model name"))?);
            card.nodes = w;
        }
        'x' => {
            no_calls("X")?;
            let w = words(body);
            let k = w
                .iter()
                .position(|t| t == "rram" || t == "buf")
                .ok_or_else(|| syntax(line, "X cards need a RRAM or BUF keyword"))?;
            card.nodes = w[..k].to_vec();
            let tail = &w[k + 1..];
            if w[k] == "rram" {
                card.kind = CardKind::Rram;
                match tail {
                    [m] => card.model = Some(m.clone()),
                    [] => return Err(syntax(line, "RRAM needs a model name")),
                    _ => return Err(syntax(line, "unexpected tokens after RRAM model")),
                }
            } else {
                card.kind = CardKind::Buffer;
                if !tail.is_empty() {
                    return Err(syntax(line, "unexpected tokens after BUF"));
                }
            }
        }
        _ => return Err(syntax(line, format!("unknown element type for '{name}'"))),
    }
    Ok(card)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resistor_card() {
        let doc = parse("R1 n1 0 50").unwrap();
        let c = &doc.element_cards[0];
        assert_eq!(c.kind, CardKind::Resistor);
        assert_eq!(c.name, "r1");
        assert_eq!(c.nodes, vec!["n1", "0"]);
        assert_eq!(c.value, Some(CardValue::Number(50.0)));
    }

    #[test]
    fn mosfet_card() {
        let doc = parse("M5 d g s b PCH W=20u L=0.5u").unwrap();
        let c = &doc.element_cards[0];
        assert_eq!(c.kind, CardKind::Mosfet);
        assert_eq!(c.model.as_deref(), Some("pch"));
        assert_eq!(c.nodes, vec!["d", "g", "s", "b"]);
        assert_eq!(c.param("w"), Some(2e-5));
        assert_eq!(c.param("l"), Some(5e-7));
    }

    #[test]
    fn sources_and_continuations() {
        let text = "* header comment\n.title demo\nV1 a 0 DC 5 ; supply\nI1 a b\n+ 10u\nVc g 0 PULSE(5 0 0 1u 1u 10u 20u)\n.end\nR9 x y 1";
        let doc = parse(text).unwrap();
        assert_eq!(doc.title, "demo");
        assert_eq!(doc.element_cards.len(), 3);
        assert_eq!(doc.element_cards[0].value, Some(CardValue::Number(5.0)));
        assert_eq!(doc.element_cards[1].nodes, vec!["a", "b"]);
        assert_eq!(doc.element_cards[1].line, 4);
        assert!(matches!(doc.element_cards[2].value, Some(CardValue::Waveform(_))));
    }

    #[test]
    fn model_cards() {
        let doc = parse(".model nch NMOS (VTH=0.7 KP=170u LAMBDA=0.05)\n.model rr rram RON=1k").unwrap();
        assert_eq!(doc.model_cards[0].kind, ModelKind::Nmos);
        assert_eq!(doc.model_cards[0].params[1], ("kp".to_string(), 170e-6));
        assert_eq!(doc.model_cards[1].params[0], ("ron".to_string(), 1000.0));
    }

    #[test]
    fn rram_and_buffer_cards() {
        let doc = parse("X1 te be RRAM rr X0=1\nXb be out BUF CIN=1p").unwrap();
        assert_eq!(doc.element_cards[0].kind, CardKind::Rram);
        assert_eq!(doc.element_cards[0].model.as_deref(), Some("rr"));
        assert_eq!(doc.element_cards[1].kind, CardKind::Buffer);
        assert_eq!(doc.element_cards[1].param("cin"), Some(1e-12));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse("R1 a 0 1k\nR2 a 0 5x").unwrap_err();
        assert_eq!(e, NetlistError::UnknownSuffix { line: 2, token: "5x".into() });
        let e = parse("R1 a 0 1\n\nr1 b 0 2").unwrap_err();
        assert!(matches!(e, NetlistError::DuplicateElement { line: 3, .. }));
        let e = parse("Q1 a b c npn").unwrap_err();
        assert_eq!(e.line(), Some(1));
        let e = parse("+ R1 a 0 1").unwrap_err();
        assert_eq!(e.line(), Some(1));
        let e = parse(".tran 1n 1u").unwrap_err();
        assert!(matches!(e, NetlistError::Syntax { line: 1, .. }));
    }
}
