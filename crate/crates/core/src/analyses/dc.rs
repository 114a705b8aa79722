use std::io::Write;

use rayon::prelude::*;

use super::{check_grid, AnalysisError, MirrorFixture};
use crate::devices::Waveform;
use crate::engine::{dc_sweep_values, solve_op, EngineError, NewtonConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorRow {
    pub iref: f64,
    pub imirr: f64,
    pub factor: f64,
    /// `|factor - 1| * 100`.
    pub deviation_pct: f64,
    /// Worst KCL ratio of the solution (at most 1).
    pub kcl_ratio: f64,
}

impl MirrorRow {
    fn new(iref: f64, imirr: f64, kcl_ratio: f64) -> Self {
        let factor = imirr / iref;
        Self { iref, imirr, factor, deviation_pct: (factor - 1.0).abs() * 100.0, kcl_ratio }
    }

    pub fn signed_deviation_pct(&self) -> f64 {
        (self.factor - 1.0) * 100.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MirrorReport {
    pub vdd: f64,
    /// Converged points, sorted by `iref`.
    pub rows: Vec<MirrorRow>,
    /// Points where the solver failed.
    pub failures: Vec<(f64, EngineError)>,
}

impl MirrorReport {
    pub fn max_deviation_pct(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.deviation_pct))
    }

    pub fn row(&self, iref: f64) -> Option<&MirrorRow> {
        self.rows.iter().find(|r| (r.iref - iref).abs() <= 1e-12 * iref.abs().max(1e-12))
    }

    /// `iref,imirr,factor,deviation_pct` with the deviation sign kept.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iref", "imirr", "factor", "deviation_pct"])?;
        for r in &self.rows {
            w.write_record([
                format!("{:e}", r.iref),
                format!("{:e}", r.imirr),
                format!("{:e}", r.factor),
                format!("{:e}", r.signed_deviation_pct()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mirror factor of the branch at each reference current, with the chop switch closed.
pub fn mirror_factor_dc(
    fixture: &MirrorFixture,
    iref_grid: &[f64],
    vdd: f64,
    config: &NewtonConfig,
) -> Result<MirrorReport, AnalysisError> {
    check_grid(iref_grid)?;
    if let Some(bad) = iref_grid.iter().find(|i| **i <= 0.0) {
        return Err(AnalysisError::Invalid(format!("reference current must be > 0, got {bad}")));
    }
    let mut grid = iref_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let results: Vec<_> = grid
        .par_iter()
        .map(|&iref| {
            let c = fixture.biased(iref, vdd);
            let op = solve_op(&c, config, None)?;
            let imirr = op.current(&fixture.sense_element).expect("sense element exists");
            Ok::<_, EngineError>(MirrorRow::new(iref, imirr, op.kcl.ratio))
        })
        .collect();
    let mut report = MirrorReport { vdd, rows: Vec::new(), failures: Vec::new() };
    for (iref, r) in grid.into_iter().zip(results) {
        match r {
            Ok(row) => report.rows.push(row),
            Err(e) => report.failures.push((iref, e)),
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupplyRow {
    pub vdd: f64,
    pub imirr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupplyReport {
    pub iref: f64,
    pub rows: Vec<SupplyRow>,
    pub failures: Vec<(f64, EngineError)>,
    /// Smallest supply with `imirr >= 0.98 * iref`.
    pub vmin: Option<f64>,
    pub max_kcl_ratio: f64,
}

impl SupplyReport {
    pub fn imirr_at(&self, vdd: f64) -> Option<f64> {
        self.rows.iter().find(|r| (r.vdd - vdd).abs() < 1e-9).map(|r| r.imirr)
    }

    /// `vdd,imirr`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["vdd", "imirr"])?;
        for r in &self.rows {
            w.write_record([format!("{:e}", r.vdd), format!("{:e}", r.imirr)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Output current versus supply voltage at a fixed reference current.
///
/// The chop gate keeps the level it has in the netlist.
pub fn supply_range(
    fixture: &MirrorFixture,
    iref: f64,
    vdd_grid: &[f64],
    config: &NewtonConfig,
) -> Result<SupplyReport, AnalysisError> {
    check_grid(vdd_grid)?;
    if !(iref >= 0.0) {
        return Err(AnalysisError::Invalid(format!("reference current must be >= 0, got {iref}")));
    }
    let mut c = fixture.circuit.clone();
    fixture.set(&mut c, &fixture.iref_source, Waveform::Dc(iref));
    let points = dc_sweep_values(&c, &fixture.supply_source, vdd_grid, config)?;
    let mut report = SupplyReport { iref, rows: Vec::new(), failures: Vec::new(), vmin: None, max_kcl_ratio: 0.0 };
    for p in points {
        match (p.op, p.error) {
            (Some(op), _) => {
                let imirr = op.current(&fixture.sense_element).expect("sense element exists");
                report.max_kcl_ratio = report.max_kcl_ratio.max(op.kcl.ratio);
                report.rows.push(SupplyRow { vdd: p.value, imirr });
            }
            (None, Some(e)) => report.failures.push((p.value, e)),
            (None, None) => unreachable!("sweep point without result"),
        }
    }
    if iref > 0.0 {
        let mut sorted = report.rows.clone();
        sorted.sort_by(|a, b| a.vdd.total_cmp(&b.vdd));
        report.vmin = sorted.iter().find(|r| r.imirr >= 0.98 * iref).map(|r| r.vdd);
    }
    Ok(report)
}
