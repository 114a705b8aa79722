//! Compact analog circuit simulator for current-mirror RRAM pulse generators.
//!
//! Netlists are parsed and elaborated by [`netlist`], device equations live in
//! [`devices`], and [`engine`] solves operating points, sweeps and transients.
//! [`analyses`] and [`mcvariation`] build the characterization experiments on
//! top, and [`cli`] wires everything to the `mirrorsim` binary.

// `!(x > 0.0)` is used throughout to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyses;
pub mod cli;
pub mod devices;
pub mod engine;
pub mod mcvariation;
pub mod netlist;
