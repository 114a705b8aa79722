use mirrorsim_core::netlist::{bundled, load, parse_value, NetlistError};
use proptest::prelude::*;

#[test]
fn bundled_netlists_round_trip() {
    for (name, text) in bundled::ALL {
        let c = load(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = load(&c.to_netlist()).unwrap();
        assert_eq!(c, again, "{name}");
    }
}

#[test]
fn unknown_suffix_reports_its_line() {
    let e = load("* header\nR1 a 0 1k\nR2 a 0 5x\n").unwrap_err();
    assert!(matches!(e, NetlistError::UnknownSuffix { line: 3, .. }), "{e}");
    assert!(e.to_string().contains("line 3"));
}

const NODES: &[&str] = &["0", "a", "b", "c", "out", "n_1"];

fn value() -> impl Strategy<Value = f64> {
    (1u32..1000, -12i32..7).prop_map(|(m, e)| format!("{m}e{e}").parse().unwrap())
}

fn node() -> impl Strategy<Value = &'static str> {
    prop::sample::select(NODES)
}

fn card() -> impl Strategy<Value = String> {
    prop_oneof![
        (node(), node(), value()).prop_map(|(a, b, v)| format!("R {a} {b} {v:e}")),
        (node(), node(), value(), prop::option::of(-5.0f64..5.0))
            .prop_map(|(a, b, v, ic)| format!("C {a} {b} {v:e}{}", ic.map(|x| format!(" IC={x}")).unwrap_or_default())),
        (node(), node(), -10.0f64..10.0).prop_map(|(a, b, v)| format!("V {a} {b} DC {v}")),
        (node(), node(), 0.0f64..5.0, 1e-9f64..1e-6, 1e-7f64..1e-5)
            .prop_map(|(a, b, v, r, w)| format!("V {a} {b} PULSE(0 {v} 1e-6 {r:e} {r:e} {w:e} 0)")),
        (node(), node(), value(), prop::option::of(0.01f64..1.0)).prop_map(|(a, b, v, c)| format!(
            "I {a} {b} DC {v:e}{}",
            c.map(|x| format!(" VCOMP={x}")).unwrap_or_default()
        )),
        (node(), node(), node(), node(), prop::bool::ANY, 1u32..100, 1u32..10).prop_map(|(d, g, s, b, p, w, l)| {
            format!("M {d} {g} {s} {b} {} W={w}u L={l}u", if p { "pch" } else { "nch" })
        }),
        (node(), node(), 0.0f64..=1.0).prop_map(|(a, b, x)| format!("X {a} {b} RRAM rr X0={x}")),
        (node(), prop::sample::select(&NODES[1..]), 0.0f64..1e-12)
            .prop_map(|(a, b, c)| format!("X {a} {b} BUF CIN={c:e}")),
    ]
}

fn document(cards: &[String]) -> String {
    let mut text = String::from(
        ".title generated\n.model nch NMOS (VTH=0.7 KP=170u LAMBDA=0.02)\n.model pch PMOS (VTH=-0.7 KP=60u)\n\
         .model rr RRAM (RON=5k ROFF=100k)\nRg a 0 1k\n",
    );
    for (k, c) in cards.iter().enumerate() {
        // Prefix letter is the element kind; a counter keeps names unique.
        let (kind, rest) = c.split_at(1);
        text.push_str(&format!("{kind}{k}{rest}\n"));
    }
    text
}

proptest! {
    #[test]
    fn generated_netlists_round_trip(cards in prop::collection::vec(card(), 0..12)) {
        let text = document(&cards);
        // Some random topologies are rejected on purpose (e.g. two buffers driving one node).
        let loaded = load(&text);
        prop_assume!(loaded.is_ok());
        let c = loaded.unwrap();
        prop_assert_eq!(c.elements.len(), cards.len() + 1);
        let again = load(&c.to_netlist()).unwrap();
        prop_assert_eq!(c, again);
    }

    #[test]
    fn arbitrary_text_never_panics(text in "\\PC{0,200}") {
        let _ = load(&text);
    }

    #[test]
    fn card_shaped_noise_never_panics(lines in prop::collection::vec(
        "[RCVIMX.+*]?[a-z0-9]{0,3}( [a-z0-9=().]{0,8}){0,7}", 0..10)) {
        let _ = load(&lines.join("\n"));
    }

    #[test]
    fn suffix_equals_exponent(m in 1u32..100_000, k in 0usize..7) {
        let (s, e) = [("f", -15), ("p", -12), ("n", -9), ("u", -6), ("m", -3), ("k", 3), ("meg", 6)][k];
        let want: f64 = format!("{m}e{e}").parse().unwrap();
        prop_assert_eq!(parse_value(&format!("{m}{s}")), Some(want));
        prop_assert_eq!(parse_value(&format!("{m}{}", s.to_uppercase())), Some(want));
    }

    #[test]
    fn plain_floats_parse_like_std(x in -1e12f64..1e12) {
        let s = format!("{x:e}");
        prop_assert_eq!(parse_value(&s), Some(x));
    }
}
