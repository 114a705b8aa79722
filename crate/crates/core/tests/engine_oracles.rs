use mirrorsim_core::devices::mirror_ratio_clm;
use mirrorsim_core::engine::{dc_sweep_values, solve_op, transient, Method, NewtonConfig};
use mirrorsim_core::netlist::load;
use proptest::prelude::*;

fn mirror(lambda: f64, vds1: f64, iref: f64, w0: f64, w1: f64) -> String {
    format!(
        ".model n NMOS (VTH=0.6 KP=120u LAMBDA={lambda})\n\
         Vdd vdd 0 DC 5\nIref vdd d0 DC {iref:e}\n\
         M0 d0 d0 0 0 n W={w0:e} L=1u\nVout d1 0 DC {vds1}\nM1 d1 d0 0 0 n W={w1:e} L=1u\n"
    )
}

/// Ladder `V - R1 - n1 - R2 - n2 - R3 - 0` with `R4` from n1 to ground.
fn ladder_oracle(v: f64, r: [f64; 4]) -> (f64, f64) {
    let right = r[1] + r[2];
    let par = r[3] * right / (r[3] + right);
    let v1 = v * par / (r[0] + par);
    (v1, v1 * r[2] / right)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mirror_matches_clm_oracle(
        lambda in 0.0f64..0.12, vds1 in 0.8f64..4.0, iref in 20e-6f64..400e-6, ratio in 0.5f64..4.0,
    ) {
        let (w0, w1) = (10e-6, 10e-6 * ratio);
        let c = load(&mirror(lambda, vds1, iref, w0, w1)).unwrap();
        let op = solve_op(&c, &NewtonConfig::default(), None).unwrap();
        prop_assume!(op.regions["m1"].as_str() == "saturation");
        let factor = op.current("m1").unwrap() / iref;
        let vds0 = op.voltage(&c, "d0").unwrap();
        let oracle = mirror_ratio_clm(w0, 1e-6, w1, 1e-6, lambda, vds0, vds1).unwrap();
        prop_assert!((factor / oracle - 1.0).abs() < 1e-6, "factor {} oracle {}", factor, oracle);
        prop_assert!(op.kcl.holds());
    }

    #[test]
    fn resistive_ladder_matches_series_parallel(
        v in -10.0f64..10.0, r in prop::array::uniform4(10.0f64..1e6),
    ) {
        let text = format!("V1 in 0 DC {v}\nR1 in n1 {:e}\nR2 n1 n2 {:e}\nR3 n2 0 {:e}\nR4 n1 0 {:e}\n", r[0], r[1], r[2], r[3]);
        let c = load(&text).unwrap();
        let op = solve_op(&c, &NewtonConfig::default(), None).unwrap();
        let (v1, v2) = ladder_oracle(v, r);
        // The permanent 1e-12 S shunt bounds the achievable agreement.
        let tol = 1e-9 * v.abs().max(1.0) + 1e-12 * r.iter().fold(0.0f64, |a, b| a.max(*b)) * v.abs();
        prop_assert!((op.voltage(&c, "n1").unwrap() - v1).abs() <= tol);
        prop_assert!((op.voltage(&c, "n2").unwrap() - v2).abs() <= tol);
    }

    #[test]
    fn compliant_source_solves_its_fixed_point(i in 1e-6f64..1e-3, r in 100.0f64..1e5, vcomp in 0.05f64..1.0) {
        let c = load(&format!("I1 0 a DC {i:e} VCOMP={vcomp}\nR1 a 0 {r:e}\n")).unwrap();
        let op = solve_op(&c, &NewtonConfig::default(), None).unwrap();
        let v = op.voltage(&c, "a").unwrap();
        // Current pushed from 0 through the source into a: i*tanh(v(0, a)/vcomp) with v(0,a) = -v.
        let delivered = i * ((-v) / vcomp).tanh().abs();
        prop_assert!((v - delivered * r).abs() <= 1e-9 * (1.0 + v.abs()), "v {} expected {}", v, delivered * r);
    }
}

#[test]
fn sweep_direction_does_not_matter() {
    let c = load(mirrorsim_core::netlist::bundled::SET_BRANCH).unwrap();
    let up: Vec<f64> = (0..=25).map(|k| k as f64 * 0.2).collect();
    let down: Vec<f64> = up.iter().rev().copied().collect();
    let cfg = NewtonConfig::default();
    let a = dc_sweep_values(&c, "vdd", &up, &cfg).unwrap();
    let b = dc_sweep_values(&c, "vdd", &down, &cfg).unwrap();
    for (p, q) in a.iter().zip(b.iter().rev()) {
        assert_eq!(p.value, q.value);
        let (x, y) =
            (p.op.as_ref().unwrap().current("rsense").unwrap(), q.op.as_ref().unwrap().current("rsense").unwrap());
        assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-9), "vdd {}: {x} vs {y}", p.value);
    }
}

#[test]
fn buffer_copies_its_input_and_shields_it() {
    let c = load("V1 a 0 DC 1.7\nR1 a b 1k\nR2 b 0 1k\nX1 b out BUF CIN=1p\nRload out 0 10\n").unwrap();
    let op = solve_op(&c, &NewtonConfig::default(), None).unwrap();
    let vb = op.voltage(&c, "b").unwrap();
    assert!((vb - 0.85).abs() < 1e-9);
    assert!((op.voltage(&c, "out").unwrap() - vb).abs() < 1e-12);
}

#[test]
fn methods_agree_to_first_order() {
    let c = load("V1 in 0 PULSE(0 1 0 1n 1n 1 0)\nR1 in a 1k\nC1 a 0 1u\n").unwrap();
    let cfg = NewtonConfig::default();
    let gap = |dt: f64| {
        let be = transient(&c, 3e-3, dt, Method::BackwardEuler, &cfg).unwrap();
        let tr = transient(&c, 3e-3, dt, Method::Trapezoidal, &cfg).unwrap();
        be.signal("v(a)")
            .unwrap()
            .iter()
            .zip(tr.signal("v(a)").unwrap())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let (g1, g2) = (gap(2e-5), gap(1e-5));
    assert!(g1 < 0.02 && g2 < g1 * 0.6, "{g1} {g2}");
}

#[test]
fn transient_kcl_bound_holds_on_the_full_circuit() {
    let c = load(mirrorsim_core::netlist::bundled::FULL_2M1R1B).unwrap();
    let tr = transient(&c, 25e-6, 20e-9, Method::Trapezoidal, &NewtonConfig::default()).unwrap();
    assert!(tr.kcl_ratio() <= 1.0);
    let x = tr.signal("x(x1)").unwrap();
    assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
}
