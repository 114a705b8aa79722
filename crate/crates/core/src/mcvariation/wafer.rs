use std::io::Write;

use rayon::prelude::*;

use super::{apply_deltas, sample_instance_deltas, McError, MismatchSpec};
use crate::analyses::{mirror_factor_dc, MirrorFixture};
use crate::engine::NewtonConfig;

/// Side of the square raster the wafer disc is cut from.
pub const WAFER_GRID: usize = 16;

/// The `n` raster cells closest to the wafer centre, in raster order
/// (row by row). Returns `None` when `n` exceeds the raster.
pub fn wafer_sites(n: usize) -> Option<Vec<(usize, usize)>> {
    if n > WAFER_GRID * WAFER_GRID {
        return None;
    }
    let c = (WAFER_GRID as f64 - 1.0) / 2.0;
    let mut cells: Vec<(usize, usize)> = (0..WAFER_GRID).flat_map(|y| (0..WAFER_GRID).map(move |x| (x, y))).collect();
    let r2 = |&(x, y): &(usize, usize)| (x as f64 - c).powi(2) + (y as f64 - c).powi(2);
    // Stable sort keeps raster order among equal radii.
    cells.sort_by(|a, b| r2(a).total_cmp(&r2(b)));
    cells.truncate(n);
    cells.sort_by_key(|&(x, y)| (y, x));
    Some(cells)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaferPlan {
    pub dies: usize,
    pub circuits_per_die: usize,
    pub iref_grid: Vec<f64>,
    pub vdd: f64,
}

impl Default for WaferPlan {
    fn default() -> Self {
        Self { dies: 180, circuits_per_die: 2, iref_grid: vec![100e-6, 200e-6, 300e-6, 400e-6], vdd: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaferCell {
    pub die: usize,
    pub die_x: usize,
    pub die_y: usize,
    pub circuit: usize,
    /// Mean `|factor - 1| * 100` over the current grid; `None` if any point failed.
    pub mean_deviation_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaferMap {
    pub grid: (usize, usize),
    /// One cell per (die, circuit), ordered by die then circuit.
    pub cells: Vec<WaferCell>,
}

impl WaferMap {
    pub fn deviations(&self, circuit: Option<usize>) -> Vec<f64> {
        self.cells
            .iter()
            .filter(|c| circuit.is_none_or(|k| c.circuit == k))
            .filter_map(|c| c.mean_deviation_pct)
            .collect()
    }

    pub fn median(&self, circuit: Option<usize>) -> Option<f64> {
        let mut v = self.deviations(circuit);
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
    }

    pub fn missing(&self) -> usize {
        self.cells.iter().filter(|c| c.mean_deviation_pct.is_none()).count()
    }

    /// `die_x,die_y,circuit,mean_deviation_pct`; failed cells leave the value empty.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["die_x", "die_y", "circuit", "mean_deviation_pct"])?;
        for c in &self.cells {
            w.write_record([
                c.die_x.to_string(),
                c.die_y.to_string(),
                c.circuit.to_string(),
                c.mean_deviation_pct.map(|d| format!("{d:e}")).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mirror deviation of every circuit on every die under sampled mismatch.
///
/// Runs on the current rayon pool; the map does not depend on its size.
pub fn wafer_run(
    fixture: &MirrorFixture,
    spec: &MismatchSpec,
    plan: &WaferPlan,
    config: &NewtonConfig,
) -> Result<WaferMap, McError> {
    spec.validate()?;
    if plan.circuits_per_die == 0 || plan.dies == 0 {
        return Err(McError::Plan("dies and circuits per die must be positive".into()));
    }
    let sites = wafer_sites(plan.dies)
        .ok_or_else(|| McError::Plan(format!("{} dies do not fit a {WAFER_GRID}x{WAFER_GRID} wafer", plan.dies)))?;
    // Fail early on grid problems instead of once per instance.
    if plan.iref_grid.is_empty() {
        return Err(crate::analyses::AnalysisError::EmptyGrid.into());
    }
    let jobs: Vec<(usize, usize)> =
        (0..plan.dies).flat_map(|d| (0..plan.circuits_per_die).map(move |k| (d, k))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(die, circuit)| {
            let mut fx = fixture.clone();
            let deltas = sample_instance_deltas(spec, &fx.circuit, die as u32, circuit as u32)?;
            apply_deltas(&mut fx.circuit, &deltas);
            let report = mirror_factor_dc(&fx, &plan.iref_grid, plan.vdd, config)?;
            let mean = report
                .failures
                .is_empty()
                .then(|| report.rows.iter().map(|r| r.deviation_pct).sum::<f64>() / report.rows.len() as f64);
            let (die_x, die_y) = sites[die];
            Ok(WaferCell { die, die_x, die_y, circuit, mean_deviation_pct: mean })
        })
        .collect::<Result<Vec<_>, McError>>()?;
    Ok(WaferMap { grid: (WAFER_GRID, WAFER_GRID), cells })
}
