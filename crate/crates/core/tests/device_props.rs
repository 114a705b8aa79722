use mirrorsim_core::devices::{
    mirror_ratio_clm, mirror_ratio_ideal, mos_eval, rram_step, waveform_value, MosInstance, MosModelParams, Region,
    RramModelParams, RramState, Waveform,
};
use proptest::prelude::*;

fn inst(w: f64, l: f64) -> MosInstance {
    MosInstance::new([1, 2, 0, 0], w, l, "m")
}

/// Independent square-law evaluation for `vds >= 0`.
fn square_law(kp: f64, wl: f64, vth: f64, lambda: f64, vgs: f64, vds: f64) -> f64 {
    let vov = vgs - vth;
    if vov <= 0.0 {
        0.0
    } else if vds < vov {
        kp * wl * (vov * vds - vds * vds / 2.0) * (1.0 + lambda * vds)
    } else {
        0.5 * kp * wl * vov * vov * (1.0 + lambda * vds)
    }
}

#[test]
fn hand_evaluated_saturation_point() {
    let m = MosModelParams::nmos(0.5, 1e-4, 0.0);
    let e = mos_eval(&m, &inst(10e-6, 1e-6), 1.0, 2.0).unwrap();
    assert!((e.id - 1.25e-4).abs() < 1e-18);
    assert_eq!(e.region, Region::Saturation);
}

#[test]
fn fd_grid_50_by_50() {
    let m = MosModelParams::nmos(0.7, 170e-6, 0.05);
    let i = inst(4e-6, 1e-6);
    let h = 1e-6;
    for a in 0..50 {
        for b in 0..50 {
            let vgs = 0.003 + 4.0 * a as f64 / 49.0;
            let vds = -4.0 + 8.0 * b as f64 / 49.0 + 0.0071;
            let vov = vgs - 0.7;
            if vov.abs() < 1e-4 || (vov - vds.abs()).abs() < 1e-4 || (vgs - vds - 0.7).abs() < 1e-4 {
                continue;
            }
            let e = mos_eval(&m, &i, vgs, vds).unwrap();
            let f = |g: f64, d: f64| mos_eval(&m, &i, g, d).unwrap().id;
            let gm = (f(vgs + h, vds) - f(vgs - h, vds)) / (2.0 * h);
            let gds = (f(vgs, vds + h) - f(vgs, vds - h)) / (2.0 * h);
            let scale = e.gm.abs().max(e.gds.abs()).max(1e-9);
            assert!((gm - e.gm).abs() <= 1e-6 * scale, "gm at ({vgs}, {vds})");
            assert!((gds - e.gds).abs() <= 1e-6 * scale, "gds at ({vgs}, {vds})");
        }
    }
}

#[test]
fn mirror_ratio_examples() {
    assert_eq!(mirror_ratio_ideal(1e-6, 1e-6, 2e-6, 1e-6).unwrap(), 2.0);
    let r = mirror_ratio_clm(1e-6, 1e-6, 1e-6, 1e-6, 0.05, 1.0, 3.0).unwrap();
    assert!((r - 1.15 / 1.05).abs() < 1e-15);
    assert!(mirror_ratio_ideal(0.0, 1e-6, 1e-6, 1e-6).is_err());
}

proptest! {
    #[test]
    fn matches_independent_square_law(
        vth in 0.2f64..1.0, kp in 1e-5f64..5e-4, lambda in 0.0f64..0.2,
        w in 1e-6f64..100e-6, l in 0.2e-6f64..5e-6,
        vgs in -1.0f64..5.0, vds in 0.0f64..5.0,
    ) {
        let m = MosModelParams::nmos(vth, kp, lambda);
        let e = mos_eval(&m, &inst(w, l), vgs, vds).unwrap();
        let want = square_law(kp, w / l, vth, lambda, vgs, vds);
        prop_assert!((e.id - want).abs() <= 1e-12 * want.abs().max(1e-12));
    }

    #[test]
    fn continuous_at_saturation_edge(vth in 0.2f64..1.0, lambda in 0.0f64..0.2, vov in 0.05f64..3.0) {
        let m = MosModelParams::nmos(vth, 1e-4, lambda);
        let i = inst(10e-6, 1e-6);
        let eps = 1e-10;
        let lo = mos_eval(&m, &i, vth + vov, vov - eps).unwrap();
        let hi = mos_eval(&m, &i, vth + vov, vov + eps).unwrap();
        prop_assert_eq!(lo.region, Region::Triode);
        prop_assert_eq!(hi.region, Region::Saturation);
        prop_assert!((lo.id - hi.id).abs() <= 1e-8 * hi.id);
        prop_assert!((lo.gm - hi.gm).abs() <= 1e-7 * hi.gm);
    }

    #[test]
    fn p_channel_mirrors_n_channel(vth in 0.2f64..1.0, lambda in 0.0f64..0.2, vgs in -5.0f64..5.0, vds in -5.0f64..5.0) {
        let n = MosModelParams::nmos(vth, 1e-4, lambda);
        let p = MosModelParams::pmos(-vth, 1e-4, lambda);
        let i = inst(5e-6, 1e-6);
        let a = mos_eval(&n, &i, vgs, vds).unwrap();
        let b = mos_eval(&p, &i, -vgs, -vds).unwrap();
        prop_assert_eq!(b.id, -a.id);
        prop_assert_eq!((b.gm, b.gds, b.region), (a.gm, a.gds, a.region));
    }

    #[test]
    fn output_conductance_non_negative(vth in 0.2f64..1.0, lambda in 0.0f64..0.2, vgs in 0.0f64..5.0, vds in 0.0f64..5.0) {
        let e = mos_eval(&MosModelParams::nmos(vth, 1e-4, lambda), &inst(5e-6, 1e-6), vgs, vds).unwrap();
        prop_assert!(e.gds >= 0.0);
        prop_assert!(e.id >= 0.0);
    }

    #[test]
    fn drain_source_swap_is_antisymmetric(vgs in 0.0f64..5.0, vds in 0.01f64..5.0) {
        // Swapping drain and source flips the current: id(vgs, vds) = -id(vgs - vds, -vds).
        let m = MosModelParams::nmos(0.7, 1e-4, 0.05);
        let i = inst(5e-6, 1e-6);
        let a = mos_eval(&m, &i, vgs, vds).unwrap().id;
        let b = mos_eval(&m, &i, vgs - vds, -vds).unwrap().id;
        prop_assert!((a + b).abs() <= 1e-15);
    }

    #[test]
    fn rram_state_stays_in_unit_interval(x0 in 0.0f64..=1.0, v in -5.0f64..5.0, dt in 1e-12f64..1e-3) {
        let p = RramModelParams::default();
        let s = rram_step(&p, RramState::new(x0), v, dt);
        prop_assert!((0.0..=1.0).contains(&s.x));
        let r = p.resistance(s.x);
        prop_assert!(r >= p.r_on.min(p.r_off) * (1.0 - 1e-12) && r <= p.r_on.max(p.r_off) * (1.0 + 1e-12));
    }

    #[test]
    fn pulse_stays_between_levels(v1 in -5.0f64..5.0, v2 in -5.0f64..5.0, t in 0.0f64..1e-4) {
        let w = Waveform::pulse(v1, v2, 1e-6, 1e-6, 2e-6, 10e-6, 20e-6).unwrap();
        let v = waveform_value(&w, t);
        prop_assert!(v >= v1.min(v2) - 1e-12 && v <= v1.max(v2) + 1e-12);
        let period_later = waveform_value(&w, t + 20e-6);
        prop_assert!((v - period_later).abs() <= 1e-9 * (1.0 + v.abs()));
    }
}
