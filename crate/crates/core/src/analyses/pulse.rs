use super::AnalysisError;
use crate::engine::TraceSet;

/// Flat-top window: the central `fraction` of the interval where the pulse
/// stays above `level` times its median on-level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatTop {
    pub level: f64,
    pub fraction: f64,
}

impl Default for FlatTop {
    fn default() -> Self {
        Self { level: 0.9, fraction: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseMetrics {
    /// Mean flat-top value relative to the first sample; signed.
    pub amplitude: f64,
    pub rise_10_90: f64,
    pub overshoot_pct: f64,
    /// From the 10% crossing until the signal stays within 2% of the amplitude.
    pub settle_time: f64,
}

/// Interpolated time at which `y` first reaches `level`, scanning from `from`.
fn first_crossing(t: &[f64], y: &[f64], level: f64, from: usize) -> Option<f64> {
    if y[from] >= level {
        return Some(t[from]);
    }
    (from + 1..y.len()).find(|&k| y[k] >= level).map(|k| {
        let w = (level - y[k - 1]) / (y[k] - y[k - 1]);
        t[k - 1] + w * (t[k] - t[k - 1])
    })
}

/// Measure the first pulse of `signal`.
///
/// The baseline is the first sample; pulses in either direction are handled
/// and the amplitude keeps the sign of the excursion.
pub fn pulse_metrics(trace: &TraceSet, signal: &str, window: FlatTop) -> Result<PulseMetrics, AnalysisError> {
    let raw = trace.signal(signal).ok_or_else(|| AnalysisError::UnknownSignal(signal.to_string()))?;
    let t = trace.time();
    if raw.len() < 3 {
        return Err(AnalysisError::NoPulse(signal.to_string()));
    }
    let base = raw[0];
    let extreme = raw.iter().map(|v| v - base).fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    let scale = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if extreme.abs() <= 1e-9 * scale || extreme == 0.0 {
        return Err(AnalysisError::NoPulse(signal.to_string()));
    }
    let sign = extreme.signum();
    let y: Vec<f64> = raw.iter().map(|v| sign * (v - base)).collect();
    let peak = extreme.abs();

    // Level estimate robust against edge spikes: median of the "on" samples.
    let mut on: Vec<f64> = y.iter().copied().filter(|v| *v >= 0.1 * peak).collect();
    on.sort_by(f64::total_cmp);
    let level = window.level * on[on.len() / 2];
    let first = (0..y.len()).find(|&k| y[k] >= level).expect("median sample is above its own level");
    // End of the first pulse: last sample before the signal falls below the level.
    let mut last = first;
    while last + 1 < y.len() && y[last + 1] >= level {
        last += 1;
    }
    let (t0, t1) = (t[first], t[last]);
    let mid = 0.5 * (t0 + t1);
    let half = 0.5 * window.fraction * (t1 - t0);
    let (w0, w1) = (mid - half, mid + half);
    let in_window: Vec<f64> = (first..=last).filter(|&k| t[k] >= w0 && t[k] <= w1).map(|k| y[k]).collect();
    let amplitude = if in_window.is_empty() {
        trace.sample_at(signal, mid).map(|v| sign * (v - base)).unwrap_or(peak)
    } else {
        in_window.iter().sum::<f64>() / in_window.len() as f64
    };
    if !(amplitude > 0.0) {
        return Err(AnalysisError::NoPulse(signal.to_string()));
    }

    let t10 = first_crossing(t, &y, 0.1 * amplitude, 0).ok_or_else(|| AnalysisError::NoPulse(signal.into()))?;
    let t90 = first_crossing(t, &y, 0.9 * amplitude, 0).ok_or_else(|| AnalysisError::NoPulse(signal.into()))?;
    let peak_top = y[first..=last].iter().fold(0.0f64, |m, v| m.max(*v));
    let overshoot_pct = ((peak_top - amplitude) / amplitude * 100.0).max(0.0);

    let band = 0.02 * amplitude;
    let w_end = (first..=last).rev().find(|&k| t[k] <= w1).unwrap_or(last);
    let mut settled_from = t90;
    for k in (first.saturating_sub(1)..=w_end).rev() {
        if (y[k] - amplitude).abs() > band {
            settled_from = t[(k + 1).min(w_end)];
            break;
        }
    }
    Ok(PulseMetrics {
        amplitude: sign * amplitude,
        rise_10_90: t90 - t10,
        overshoot_pct,
        settle_time: (settled_from.max(t90) - t10).max(0.0),
    })
}
