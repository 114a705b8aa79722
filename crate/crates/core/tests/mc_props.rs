use mirrorsim_core::analyses::{mirror_factor_dc, Branch};
use mirrorsim_core::engine::NewtonConfig;
use mirrorsim_core::mcvariation::{sample_delta, wafer_run, MismatchSpec, WaferPlan};

fn stats(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[test]
fn pelgrom_sigma_over_many_draws() {
    let spec = MismatchSpec { avt: 5e-9, abeta: 1e-8, die_sigma_vth: 0.0, seed: 99 };
    let (vth, beta): (Vec<f64>, Vec<f64>) =
        (0..100_000u32).map(|die| sample_delta(&spec, die, 0, "m1", 1e-6, 1e-6)).unzip();
    let (mv, sv) = stats(&vth);
    let (_, sb) = stats(&beta);
    assert!(mv.abs() < 5e-3 * 0.02, "mean {mv}");
    assert!((sv / 5e-3 - 1.0).abs() < 0.02, "sigma {sv}");
    assert!((sb / 1e-2 - 1.0).abs() < 0.02, "beta sigma {sb}");
}

#[test]
fn sigma_scales_with_inverse_root_area() {
    let spec = MismatchSpec { avt: 4e-9, abeta: 0.0, die_sigma_vth: 0.0, seed: 3 };
    for (w, l) in [(1e-6, 1e-6), (10e-6, 1e-6), (100e-6, 2e-6)] {
        let draws: Vec<f64> = (0..10_000u32).map(|k| sample_delta(&spec, k, 1, "mx", w, l).0).collect();
        let (_, s) = stats(&draws);
        let want = 4e-9 / (w * l).sqrt();
        assert!((s / want - 1.0).abs() < 0.05, "{w}x{l}: {s} vs {want}");
    }
}

fn small_plan() -> WaferPlan {
    WaferPlan { dies: 12, ..WaferPlan::default() }
}

#[test]
fn same_seed_same_map_different_seed_different_map() {
    let fx = Branch::Reset.fixture();
    let cfg = NewtonConfig::default();
    let a = wafer_run(&fx, &MismatchSpec::calibrated(5), &small_plan(), &cfg).unwrap();
    let b = wafer_run(&fx, &MismatchSpec::calibrated(5), &small_plan(), &cfg).unwrap();
    let c = wafer_run(&fx, &MismatchSpec::calibrated(6), &small_plan(), &cfg).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn zero_spec_equals_the_nominal_circuit() {
    let fx = Branch::Set.fixture();
    let cfg = NewtonConfig::default();
    let plan = small_plan();
    let map = wafer_run(&fx, &MismatchSpec::zero(1), &plan, &cfg).unwrap();
    let nominal = mirror_factor_dc(&fx, &plan.iref_grid, plan.vdd, &cfg).unwrap();
    let mean = nominal.rows.iter().map(|r| r.deviation_pct).sum::<f64>() / nominal.rows.len() as f64;
    let devs = map.deviations(None);
    let spread = devs.iter().cloned().fold(f64::MIN, f64::max) - devs.iter().cloned().fold(f64::MAX, f64::min);
    assert_eq!(spread, 0.0);
    assert!((devs[0] - mean).abs() <= 1e-12 * mean);
}

#[test]
fn doubling_avt_does_not_lower_the_median() {
    let fx = Branch::Set.fixture();
    let cfg = NewtonConfig::default();
    let plan = WaferPlan { dies: 8, circuits_per_die: 1, ..WaferPlan::default() };
    let pooled = |scale: f64| {
        let mut all = Vec::new();
        for seed in 0..20 {
            let mut spec = MismatchSpec::calibrated(seed);
            spec.avt *= scale;
            all.extend(wafer_run(&fx, &spec, &plan, &cfg).unwrap().deviations(None));
        }
        all.sort_by(f64::total_cmp);
        all[all.len() / 2]
    };
    let (m1, m2) = (pooled(1.0), pooled(2.0));
    assert!(m2 >= m1, "{m1} -> {m2}");
}
