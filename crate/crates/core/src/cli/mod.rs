//! `mirrorsim` command-line front end.
//!
//! Every command writes CSV files plus a `manifest.txt` with the resolved
//! parameters into the output directory (`--out`, or `MIRRORSIM_OUT`).
//! Exit codes: 0 ok, 1 solver failure, 2 input error, 3 I/O error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analyses::{
    buffer_experiment, mirror_factor_dc, rise_time_family, supply_range, tran_mirror, write_family_csv, AnalysisError,
    Branch, BufferSetup, ChopPulse, MirrorFixture,
};
use crate::engine::{dc_sweep_values, default_dt, solve_op, transient, EngineError, Method, NewtonConfig, SweepGrid};
use crate::mcvariation::{wafer_run, McError, MismatchSpec, WaferPlan};
use crate::netlist::{load, parse_value, Circuit, NetlistError};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(_) => 1,
            CliError::Input(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::UnknownSource(_) | EngineError::EmptyGrid | EngineError::Config(_) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Engine(e) => e.into(),
            AnalysisError::NoPulse(_) => CliError::Solver(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        match e {
            McError::Analysis(e) => e.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

fn si(s: &str) -> Result<f64, String> {
    parse_value(s).filter(|v| v.is_finite()).ok_or_else(|| format!("'{s}' is not a number"))
}

#[derive(Debug, Parser)]
#[command(name = "mirrorsim", version, about = "Compact analog simulator for current-mirror RRAM pulse generators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output directory for CSV files and manifest.txt.
    #[arg(long, global = true, env = "MIRRORSIM_OUT", default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for grid and wafer points (0: one per core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Trap,
    Be,
}

#[derive(Debug, Args)]
pub struct BranchArgs {
    /// Mirror branch.
    #[arg(long, default_value = "set")]
    pub branch: Branch,
    /// Branch netlist to use instead of the bundled one.
    #[arg(long)]
    pub netlist: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and elaborate a netlist, reporting line-numbered diagnostics.
    ParseCheck {
        #[arg(long)]
        netlist: PathBuf,
    },
    /// DC operating point.
    Op {
        #[arg(long)]
        netlist: PathBuf,
    },
    /// Sweep the DC value of one independent source.
    DcSweep {
        #[arg(long)]
        netlist: PathBuf,
        #[arg(long)]
        source: String,
        #[arg(long, value_parser = si)]
        start: f64,
        #[arg(long, value_parser = si)]
        stop: f64,
        #[arg(long, value_parser = si)]
        step: f64,
    },
    /// Fixed-step transient of a netlist.
    Tran {
        #[arg(long)]
        netlist: PathBuf,
        #[arg(long, value_parser = si)]
        tstop: f64,
        /// Step size (default: a fiftieth of the fastest source edge).
        #[arg(long, value_parser = si)]
        dt: Option<f64>,
        #[arg(long, value_enum, default_value = "trap")]
        method: MethodArg,
    },
    /// Mirror factor versus reference current.
    DcMirror {
        #[command(flatten)]
        branch: BranchArgs,
        #[arg(long, value_parser = si, default_value = "5")]
        vdd: f64,
        #[arg(long, value_parser = si, value_delimiter = ',', default_value = "50u,100u,150u,200u,250u,300u,350u,400u,450u")]
        iref: Vec<f64>,
    },
    /// Output current versus supply voltage, 0 V up to `--vdd`.
    SupplyRange {
        #[command(flatten)]
        branch: BranchArgs,
        #[arg(long, value_parser = si, default_value = "400u")]
        iref: f64,
        #[arg(long, value_parser = si, default_value = "5")]
        vdd: f64,
        #[arg(long, value_parser = si, default_value = "0.1")]
        vstep: f64,
    },
    /// Chopped current pulses for a set of reference currents.
    TranMirror {
        #[command(flatten)]
        branch: BranchArgs,
        #[arg(long, value_parser = si, default_value = "5")]
        vdd: f64,
        #[arg(long, value_parser = si, value_delimiter = ',', default_value = "50u,100u,200u,300u,400u")]
        iref: Vec<f64>,
        /// Chop rise and fall time.
        #[arg(long, value_parser = si, default_value = "1u")]
        rise: f64,
        #[arg(long, value_parser = si)]
        dt: Option<f64>,
    },
    /// Output rise time for a family of chop rise times.
    RiseFamily {
        #[command(flatten)]
        branch: BranchArgs,
        #[arg(long, value_parser = si, default_value = "400u")]
        iref: f64,
        #[arg(long, value_parser = si, default_value = "5")]
        vdd: f64,
        #[arg(long, value_parser = si, value_delimiter = ',', default_value = "100n,300n,1u")]
        rise: Vec<f64>,
    },
    /// Full generator with the buffer read-out.
    Buffer {
        /// Reference current of both branches.
        #[arg(long, value_parser = si, default_value = "100u")]
        iref: f64,
        /// Reset-branch reference current, if different.
        #[arg(long, value_parser = si)]
        iref_reset: Option<f64>,
        #[arg(long, value_parser = si, default_value = "5")]
        vdd: f64,
        #[arg(long, value_parser = si, default_value = "1")]
        vtail: f64,
        /// Delay of the reset chop after the set chop.
        #[arg(long, value_parser = si, default_value = "0")]
        chop_delay: f64,
        #[arg(long, value_parser = si, default_value = "1u")]
        rise: f64,
        /// Pad capacitance override at the RRAM bottom electrode.
        #[arg(long, value_parser = si)]
        pad_c: Option<f64>,
        /// Simulated time after the pulses end.
        #[arg(long, value_parser = si, default_value = "60u")]
        tail: f64,
        #[arg(long, value_parser = si)]
        dt: Option<f64>,
    },
    /// Wafer-level Monte-Carlo of the mirror deviation.
    WaferMc {
        #[command(flatten)]
        branch: BranchArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_parser = si, default_value = "5")]
        vdd: f64,
        #[arg(long, value_parser = si, value_delimiter = ',', default_value = "100u,200u,300u,400u")]
        iref: Vec<f64>,
        #[arg(long, default_value_t = 180)]
        dies: usize,
        #[arg(long, default_value_t = 2)]
        circuits: usize,
        /// Threshold Pelgrom coefficient (V·m).
        #[arg(long, value_parser = si, default_value = "5e-9")]
        avt: f64,
        /// Current-factor Pelgrom coefficient (m).
        #[arg(long, value_parser = si, default_value = "1e-8")]
        abeta: f64,
        /// Per-die threshold offset sigma (V).
        #[arg(long, value_parser = si, default_value = "2m")]
        die_sigma: f64,
    },
}

/// Output directory plus the manifest being assembled.
struct Run {
    out: PathBuf,
    command: &'static str,
    params: Vec<(String, String)>,
    outputs: Vec<String>,
}

impl Run {
    fn param(&mut self, key: &str, value: impl ToString) {
        self.params.push((key.to_string(), value.to_string()));
    }

    fn list(&mut self, key: &str, values: &[f64]) {
        let s: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        self.param(key, s.join(","));
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.out.join(name);
        let f = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.outputs.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(&mut BufWriter<File>) -> csv::Result<()>) -> Result<(), CliError> {
        let mut f = self.create(name)?;
        write(&mut f).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        f.flush().map_err(|e| CliError::Io(format!("{name}: {e}")))
    }

    fn finish(self) -> Result<(), CliError> {
        let mut text = format!("tool = mirrorsim {VERSION}\ncommand = {}\n", self.command);
        for (k, v) in &self.params {
            text.push_str(&format!("{k} = {v}\n"));
        }
        text.push_str(&format!("outputs = {}\n", self.outputs.join(",")));
        let path = self.out.join("manifest.txt");
        fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

fn read_netlist(path: &Path) -> Result<Circuit, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    load(&text).map_err(|e: NetlistError| CliError::Input(format!("{}: {e}", path.display())))
}

fn fixture(args: &BranchArgs, run: &mut Run) -> Result<MirrorFixture, CliError> {
    run.param("branch", args.branch);
    match &args.netlist {
        None => {
            run.param("netlist", format!("bundled:{}_branch.cir", args.branch));
            Ok(args.branch.fixture())
        }
        Some(p) => {
            run.param("netlist", p.display());
            Ok(MirrorFixture::new(args.branch, read_netlist(p)?)?)
        }
    }
}

/// Parse `args` (including the program name), run the command and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    if cli.jobs == 0 {
        return dispatch(cli);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Input(format!("--jobs: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let config = NewtonConfig::default();
    if let Command::ParseCheck { netlist } = &cli.command {
        let c = read_netlist(netlist)?;
        for w in &c.warnings {
            println!("warning: {w}");
        }
        println!("ok: {} nodes, {} elements", c.num_nodes(), c.elements.len());
        return Ok(());
    }
    fs::create_dir_all(&cli.out).map_err(|e| CliError::Io(format!("{}: {e}", cli.out.display())))?;
    let mut run = Run { out: cli.out.clone(), command: "", params: Vec::new(), outputs: Vec::new() };
    let mut failed: Option<String> = None;

    match cli.command {
        Command::ParseCheck { .. } => unreachable!("handled above"),
        Command::Op { netlist } => {
            run.command = "op";
            run.param("netlist", netlist.display());
            let c = read_netlist(&netlist)?;
            let op = solve_op(&c, &config, None)?;
            println!("converged via {:?} in {} iterations, kcl ratio {:.3e}", op.homotopy, op.iterations, op.kcl.ratio);
            run.csv("op.csv", |f| {
                let mut w = csv::Writer::from_writer(f);
                w.write_record(["name", "value"])?;
                for (i, n) in c.node_names().iter().enumerate().skip(1) {
                    w.write_record([format!("v({n})"), format!("{:e}", op.node_voltages[i])])?;
                }
                for e in &c.elements {
                    if let Some(i) = op.current(&e.name) {
                        w.write_record([format!("i({})", e.name), format!("{i:e}")])?;
                    }
                }
                w.flush()?;
                Ok(())
            })?;
        }
        Command::DcSweep { netlist, source, start, stop, step } => {
            run.command = "dc-sweep";
            run.param("netlist", netlist.display());
            run.param("source", &source);
            run.param("start", start);
            run.param("stop", stop);
            run.param("step", step);
            let c = read_netlist(&netlist)?;
            let values = SweepGrid::new(start, stop, step).values()?;
            let points = dc_sweep_values(&c, &source, &values, &config)?;
            let nodes: Vec<(usize, String)> =
                c.node_names().iter().enumerate().skip(1).map(|(i, n)| (i, n.clone())).collect();
            let elems: Vec<String> = c.elements.iter().map(|e| e.name.clone()).collect();
            if let Some(p) = points.iter().find(|p| p.op.is_none()) {
                failed = Some(format!(
                    "{} of {} sweep points failed, first at {}: {}",
                    points.iter().filter(|p| p.op.is_none()).count(),
                    points.len(),
                    p.value,
                    p.error.as_ref().map(|e| e.to_string()).unwrap_or_default()
                ));
            }
            run.csv("dc_sweep.csv", |f| {
                let mut w = csv::Writer::from_writer(f);
                let mut header = vec![source.to_ascii_lowercase()];
                header.extend(nodes.iter().map(|(_, n)| format!("v({n})")));
                header.extend(elems.iter().map(|e| format!("i({e})")));
                w.write_record(&header)?;
                for p in &points {
                    let mut row = vec![format!("{:e}", p.value)];
                    match &p.op {
                        Some(op) => {
                            row.extend(nodes.iter().map(|(i, _)| format!("{:e}", op.node_voltages[*i])));
                            row.extend(
                                elems.iter().map(|e| op.current(e).map(|v| format!("{v:e}")).unwrap_or_default()),
                            );
                        }
                        None => row.extend(std::iter::repeat_n(String::new(), header.len() - 1)),
                    }
                    w.write_record(&row)?;
                }
                w.flush()?;
                Ok(())
            })?;
        }
        Command::Tran { netlist, tstop, dt, method } => {
            run.command = "tran";
            run.param("netlist", netlist.display());
            let c = read_netlist(&netlist)?;
            let dt = dt.unwrap_or_else(|| default_dt(&c, tstop));
            let method = match method {
                MethodArg::Trap => Method::Trapezoidal,
                MethodArg::Be => Method::BackwardEuler,
            };
            run.param("tstop", tstop);
            run.param("dt", dt);
            run.param("method", format!("{method:?}"));
            let trace = transient(&c, tstop, dt, method, &config)?;
            println!("{} steps, worst kcl ratio {:.3e}", trace.len(), trace.kcl_ratio());
            run.csv("tran.csv", |f| trace.write_csv(f))?;
        }
        Command::DcMirror { branch, vdd, iref } => {
            run.command = "dc-mirror";
            let fx = fixture(&branch, &mut run)?;
            run.param("vdd", vdd);
            run.list("iref", &iref);
            let report = mirror_factor_dc(&fx, &iref, vdd, &config)?;
            for r in &report.rows {
                println!("iref {:>9.3e} A  imirr {:>9.3e} A  factor {:.4}", r.iref, r.imirr, r.factor);
            }
            println!("max deviation {:.3} %", report.max_deviation_pct());
            if let Some((i, e)) = report.failures.first() {
                failed = Some(format!("{} points failed, first at iref={i:e}: {e}", report.failures.len()));
            }
            let name = format!("dc_mirror_{}_vdd{vdd}.csv", fx.branch);
            run.csv(&name, |f| report.write_csv(f))?;
        }
        Command::SupplyRange { branch, iref, vdd, vstep } => {
            run.command = "supply-range";
            let fx = fixture(&branch, &mut run)?;
            run.param("iref", iref);
            run.param("vdd_max", vdd);
            run.param("vstep", vstep);
            let grid = SweepGrid::new(0.0, vdd, vstep).values()?;
            let report = supply_range(&fx, iref, &grid, &config)?;
            match report.vmin {
                Some(v) => println!("vmin {v} V"),
                None => println!("vmin not reached"),
            }
            if let Some((v, e)) = report.failures.first() {
                failed = Some(format!("{} points failed, first at vdd={v}: {e}", report.failures.len()));
            }
            let name = format!("supply_range_{}.csv", fx.branch);
            run.csv(&name, |f| report.write_csv(f))?;
        }
        Command::TranMirror { branch, vdd, iref, rise, dt } => {
            run.command = "tran-mirror";
            let fx = fixture(&branch, &mut run)?;
            let chop = ChopPulse::default().with_rise(rise);
            run.param("vdd", vdd);
            run.list("iref", &iref);
            run.param(
                "chop",
                format!(
                    "delay={} rise={} fall={} width={} period={}",
                    chop.delay, chop.rise, chop.fall, chop.width, chop.period
                ),
            );
            run.param("dt", dt.unwrap_or(rise / 50.0));
            if iref.is_empty() {
                return Err(AnalysisError::EmptyGrid.into());
            }
            use rayon::prelude::*;
            let runs =
                iref.par_iter().map(|&i| tran_mirror(&fx, i, vdd, chop, dt, &config)).collect::<Result<Vec<_>, _>>()?;
            let name = format!("tran_mirror_{}_vdd{vdd}.csv", fx.branch);
            run.csv(&name, |f| {
                let mut w = csv::Writer::from_writer(f);
                w.write_record(["iref", "amplitude", "factor", "deviation_pct", "rise_10_90", "overshoot_pct"])?;
                for r in &runs {
                    w.write_record([
                        format!("{:e}", r.iref),
                        format!("{:e}", r.metrics.amplitude),
                        format!("{:e}", r.factor()),
                        format!("{:e}", (r.factor() - 1.0) * 100.0),
                        format!("{:e}", r.metrics.rise_10_90),
                        format!("{:e}", r.metrics.overshoot_pct),
                    ])?;
                }
                w.flush()?;
                Ok(())
            })?;
            let signal = format!("i({})", fx.sense_element);
            let waves = format!("tran_mirror_{}_vdd{vdd}_waves.csv", fx.branch);
            run.csv(&waves, |f| {
                let mut w = csv::Writer::from_writer(f);
                let mut header = vec!["time".to_string()];
                header.extend(runs.iter().map(|r| format!("{signal}@{:e}", r.iref)));
                w.write_record(&header)?;
                let cols: Vec<&[f64]> = runs.iter().map(|r| r.trace.signal(&signal).expect("sense signal")).collect();
                for (k, t) in runs[0].trace.time().iter().enumerate() {
                    let mut row = vec![format!("{t:e}")];
                    row.extend(cols.iter().map(|c| format!("{:e}", c[k])));
                    w.write_record(&row)?;
                }
                w.flush()?;
                Ok(())
            })?;
            for r in &runs {
                println!(
                    "iref {:>9.3e} A  amplitude {:>9.3e} A  deviation {:.3} %",
                    r.iref,
                    r.metrics.amplitude,
                    r.deviation_pct()
                );
            }
        }
        Command::RiseFamily { branch, iref, vdd, rise } => {
            run.command = "rise-family";
            let fx = fixture(&branch, &mut run)?;
            run.param("iref", iref);
            run.param("vdd", vdd);
            run.list("rise", &rise);
            let runs = rise_time_family(&fx, iref, vdd, &rise, ChopPulse::default(), &config)?;
            for r in &runs {
                println!("chop rise {:.3e} s  output rise {:.3e} s", r.chop.rise, r.metrics.rise_10_90);
            }
            let name = format!("rise_family_{}.csv", fx.branch);
            run.csv(&name, |f| write_family_csv(&runs, f))?;
        }
        Command::Buffer { iref, iref_reset, vdd, vtail, chop_delay, rise, pad_c, tail, dt } => {
            run.command = "buffer";
            let setup = BufferSetup {
                iref_set: iref,
                iref_res: iref_reset.unwrap_or(iref),
                vdd,
                vtail,
                chop_delay,
                chop: ChopPulse::default().with_rise(rise),
                pad_c,
                chops_active: true,
                tail,
                dt,
            };
            run.param("netlist", "bundled:full_2m1r1b.cir");
            run.param("iref_set", setup.iref_set);
            run.param("iref_reset", setup.iref_res);
            run.param("vdd", vdd);
            run.param("vtail", vtail);
            run.param("chop_delay", chop_delay);
            run.param("rise", rise);
            run.param("pad_c", pad_c.map(|c| c.to_string()).unwrap_or_else(|| "netlist".into()));
            run.param("tail", tail);
            run.param("dt", dt.unwrap_or(rise / 50.0));
            let report = buffer_experiment(&setup, &config)?;
            println!(
                "plateau {:.4} V (flat {:.0} % of overlap), final {:.4} V",
                report.plateau,
                report.flat_fraction * 100.0,
                report.final_value
            );
            let trace =
                report.trace.select(&["v(be)", "v(te)", "v(out)", "i(x1)", "x(x1)"]).expect("full netlist signals");
            run.csv("buffer_trace.csv", |f| trace.write_csv(f))?;
            run.csv("buffer_summary.csv", |f| {
                let mut w = csv::Writer::from_writer(f);
                w.write_record([
                    "overlap_start",
                    "overlap_end",
                    "plateau",
                    "flat_fraction",
                    "final_value",
                    "decay_tau",
                ])?;
                w.write_record([
                    format!("{:e}", report.overlap.0),
                    format!("{:e}", report.overlap.1),
                    format!("{:e}", report.plateau),
                    format!("{:e}", report.flat_fraction),
                    format!("{:e}", report.final_value),
                    report.decay_tau.map(|t| format!("{t:e}")).unwrap_or_default(),
                ])?;
                w.flush()?;
                Ok(())
            })?;
        }
        Command::WaferMc { branch, seed, vdd, iref, dies, circuits, avt, abeta, die_sigma } => {
            run.command = "wafer-mc";
            let fx = fixture(&branch, &mut run)?;
            let spec = MismatchSpec { avt, abeta, die_sigma_vth: die_sigma, seed };
            let plan = WaferPlan { dies, circuits_per_die: circuits, iref_grid: iref, vdd };
            run.param("seed", seed);
            run.param("avt", avt);
            run.param("abeta", abeta);
            run.param("die_sigma", die_sigma);
            run.param("dies", dies);
            run.param("circuits", circuits);
            run.param("vdd", vdd);
            run.list("iref", &plan.iref_grid);
            let map = wafer_run(&fx, &spec, &plan, &config)?;
            println!(
                "{} cells, median deviation {} %, {} missing",
                map.cells.len(),
                map.median(None).map(|m| format!("{m:.3}")).unwrap_or_else(|| "n/a".into()),
                map.missing()
            );
            if map.missing() > 0 {
                failed = Some(format!("{} wafer cells failed to solve", map.missing()));
            }
            let name = format!("wafer_{}.csv", fx.branch);
            run.csv(&name, |f| map.write_csv(f))?;
        }
    }
    run.finish()?;
    match failed {
        Some(msg) => Err(CliError::Solver(msg)),
        None => Ok(()),
    }
}
