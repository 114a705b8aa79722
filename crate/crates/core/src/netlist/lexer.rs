//! Number decoding and card tokenization.

/// Scale factors for the accepted magnitude suffixes (matched case-insensitively).
/// Each entry is a decimal exponent so `10u` decodes exactly like `10e-6`.
const SUFFIXES: &[(&str, i32)] = &[("meg", 6), ("f", -15), ("p", -12), ("n", -9), ("u", -6), ("m", -3), ("k", 3)];

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum NumberError {
    NotANumber,
    UnknownSuffix(String),
}

/// Decode a SPICE number such as `10u`, `1.5meg` or `2e-3`.
pub(crate) fn parse_number(token: &str) -> Result<f64, NumberError> {
    let lower = token.to_ascii_lowercase();
    // Longest prefix that is a plain float; the remainder must be a known suffix.
    let numeric_len = lower
        .bytes()
        .position(|b| !(b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'+' | b'-')))
        .unwrap_or(lower.len());
    let split = (1..=numeric_len).rev().find(|&i| is_plain_float(&lower[..i]));
    let Some(split) = split else {
        return Err(NumberError::NotANumber);
    };
    let mantissa: f64 = lower[..split].parse().map_err(|_| NumberError::NotANumber)?;
    let suffix = &lower[split..];
    if suffix.is_empty() {
        return Ok(mantissa);
    }
    let (_, exp) =
        SUFFIXES.iter().find(|(s, _)| *s == suffix).ok_or_else(|| NumberError::UnknownSuffix(token.to_string()))?;
    let m = &lower[..split];
    if m.contains('e') {
        return Ok(mantissa * 10f64.powi(*exp));
    }
    format!("{m}e{exp}").parse().map_err(|_| NumberError::NotANumber)
}

// Callers only pass digit/sign/dot/exponent bytes, so "inf" and "nan" never reach parse.
fn is_plain_float(s: &str) -> bool {
    s.bytes().any(|b| b.is_ascii_digit()) && s.parse::<f64>().map(|v| v.is_finite()).unwrap_or(false)
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Token {
    Word(String),
    LParen,
    RParen,
    Eq,
}

pub(crate) fn tokenize(line: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut Vec<Token>| {
        if !word.is_empty() {
            out.push(Token::Word(std::mem::take(word)));
        }
    };
    for c in line.chars() {
        match c {
            '(' | ')' | '=' => {
                flush(&mut word, &mut out);
                out.push(match c {
                    '(' => Token::LParen,
                    ')' => Token::RParen,
                    _ => Token::Eq,
                });
            }
            c if c.is_whitespace() || c == ',' => flush(&mut word, &mut out),
            c => word.push(c),
        }
    }
    flush(&mut word, &mut out);
    out
}

/// A card argument after grouping `key=value` pairs and `name(...)` calls.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Item {
    Word(String),
    Param(String, String),
    Call(String, Vec<Item>),
}

pub(crate) fn group(tokens: &[Token]) -> Result<Vec<Item>, String> {
    let mut pos = 0;
    group_until(tokens, &mut pos, 0)
}

const MAX_NESTING: usize = 4;

fn group_until(tokens: &[Token], pos: &mut usize, depth: usize) -> Result<Vec<Item>, String> {
    let nested = depth > 0;
    let mut items = Vec::new();
    while *pos < tokens.len() {
        match &tokens[*pos] {
            Token::Word(w) => {
                let w = w.clone();
                *pos += 1;
                match tokens.get(*pos) {
                    Some(Token::Eq) => {
                        *pos += 1;
                        match tokens.get(*pos) {
                            Some(Token::Word(v)) => {
                                items.push(Item::Param(w.to_ascii_lowercase(), v.clone()));
                                *pos += 1;
                            }
                            _ => return Err(format!("missing value after '{w}='")),
                        }
                    }
                    Some(Token::LParen) => {
                        *pos += 1;
                        if depth >= MAX_NESTING {
                            return Err("parentheses nested too deeply".into());
                        }
                        let args = group_until(tokens, pos, depth + 1)?;
                        items.push(Item::Call(w.to_ascii_lowercase(), args));
                    }
                    _ => items.push(Item::Word(w)),
                }
            }
            Token::RParen if nested => {
                *pos += 1;
                return Ok(items);
            }
            Token::RParen => return Err("unbalanced ')'".into()),
            Token::LParen => return Err("unexpected '('".into()),
            Token::Eq => return Err("unexpected '='".into()),
        }
    }
    if nested {
        Err("missing ')'".into())
    } else {
        Ok(items)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes() {
        assert_eq!(parse_number("10u").unwrap(), 1.0e-5);
        assert_eq!(parse_number("50").unwrap(), 50.0);
        assert_eq!(parse_number("0.5U").unwrap(), 5e-7);
        assert_eq!(parse_number("1meg").unwrap(), 1e6);
        assert_eq!(parse_number("2.2K").unwrap(), 2200.0);
        assert_eq!(parse_number("3m").unwrap(), 3e-3);
        assert_eq!(parse_number("1e-3").unwrap(), 1e-3);
        assert_eq!(parse_number("-1.5").unwrap(), -1.5);
        assert_eq!(parse_number("4f").unwrap(), 4e-15);
        assert_eq!(parse_number("7p").unwrap(), 7e-12);
        assert_eq!(parse_number("1n").unwrap(), 1e-9);
    }

    #[test]
    fn bad_numbers() {
        assert_eq!(parse_number("5x"), Err(NumberError::UnknownSuffix("5x".into())));
        assert_eq!(parse_number("abc"), Err(NumberError::NotANumber));
        assert_eq!(parse_number("inf"), Err(NumberError::NotANumber));
        assert_eq!(parse_number("nan"), Err(NumberError::NotANumber));
        assert!(parse_number("1e").is_err());
    }

    #[test]
    fn grouping() {
        let items = group(&tokenize("M5 d g s b PCH W = 20u L=0.5u")).unwrap();
        assert_eq!(items.len(), 8);
        assert_eq!(items[6], Item::Param("w".into(), "20u".into()));
        let items = group(&tokenize("V1 a 0 PULSE(5 0 0 1u 1u 10u 20u)")).unwrap();
        assert!(matches!(&items[3], Item::Call(n, a) if n == "pulse" && a.len() == 7));
        assert!(group(&tokenize("V1 a 0 PULSE(5 0")).is_err());
        assert!(group(&tokenize("R1 a ) b")).is_err());
        assert!(group(&tokenize("R1 a b = ")).is_err());
    }
}
