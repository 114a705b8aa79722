use std::io::Write;

use crate::netlist::{Circuit, ElementKind};

/// Time-indexed signals of one transient run.
///
/// Signals are named `v(<node>)`, `i(<element>)` and `x(<rram>)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    time: Vec<f64>,
    names: Vec<String>,
    /// Column-major: one vector per signal.
    data: Vec<Vec<f64>>,
    kcl_ratio: f64,
}

impl TraceSet {
    pub fn new(names: Vec<String>) -> Self {
        let data = vec![Vec::new(); names.len()];
        Self { time: Vec::new(), names, data, kcl_ratio: 0.0 }
    }

    pub(crate) fn for_circuit(circuit: &Circuit, capacity: usize) -> Self {
        let mut names: Vec<String> = circuit.node_names().iter().skip(1).map(|n| format!("v({n})")).collect();
        names.extend(circuit.elements.iter().map(|e| format!("i({})", e.name)));
        names.extend(circuit.elements.iter().filter_map(|e| match e.kind {
            ElementKind::Rram { .. } => Some(format!("x({})", e.name)),
            _ => None,
        }));
        let mut t = Self::new(names);
        t.time.reserve(capacity);
        for d in &mut t.data {
            d.reserve(capacity);
        }
        t
    }

    /// Append one sample; `t` must exceed the previous time.
    pub fn push(&mut self, t: f64, row: Vec<f64>) {
        assert_eq!(row.len(), self.names.len(), "row width");
        assert!(self.time.last().is_none_or(|&last| t > last), "time must increase");
        self.time.push(t);
        for (col, v) in self.data.iter_mut().zip(row) {
            col.push(v);
        }
    }

    /// Worst KCL residual ratio over all accepted solutions (at most 1 when the bound held).
    pub fn kcl_ratio(&self) -> f64 {
        self.kcl_ratio
    }

    pub(crate) fn note_kcl(&mut self, ratio: f64) {
        self.kcl_ratio = self.kcl_ratio.max(ratio);
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn signal_names(&self) -> &[String] {
        &self.names
    }

    pub fn signal(&self, name: &str) -> Option<&[f64]> {
        let name = name.to_ascii_lowercase();
        self.names.iter().position(|n| *n == name).map(|i| self.data[i].as_slice())
    }

    pub fn value(&self, name: &str, index: usize) -> Option<f64> {
        self.signal(name).and_then(|s| s.get(index).copied())
    }

    /// Linear interpolation of a signal at time `t`.
    pub fn sample_at(&self, name: &str, t: f64) -> Option<f64> {
        let s = self.signal(name)?;
        let k = self.time.partition_point(|&x| x < t);
        if k == 0 {
            return s.first().copied();
        }
        if k >= self.time.len() {
            return s.last().copied();
        }
        let (t0, t1) = (self.time[k - 1], self.time[k]);
        let w = (t - t0) / (t1 - t0);
        Some(s[k - 1] + w * (s[k] - s[k - 1]))
    }

    /// Keep only the named signals (in the given order).
    pub fn select(&self, names: &[&str]) -> Option<TraceSet> {
        let mut out = TraceSet::new(names.iter().map(|n| n.to_ascii_lowercase()).collect());
        out.time = self.time.clone();
        out.kcl_ratio = self.kcl_ratio;
        out.data = names.iter().map(|n| self.signal(n).map(<[f64]>::to_vec)).collect::<Option<_>>()?;
        Some(out)
    }

    /// CSV with header `time,<signal>...`, values at full precision.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["time".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (k, t) in self.time.iter().enumerate() {
            let mut rec = vec![format!("{t:e}")];
            rec.extend(self.data.iter().map(|col| format!("{:e}", col[k])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
