use std::fmt::Write as _;

/// One macroscopic contact, possibly made of several pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactWindow {
    /// t_S: last sample with zero force before the first pulse.
    pub start: f64,
    /// t_E: first sample with zero force after the last pulse (or the final
    /// sample when the record ends in contact).
    pub end: f64,
    /// False when the record ends before release.
    pub released: bool,
    pub pulses: usize,
    pub peak_force: f64,
    /// Trapezoidal ∫ f_c dt over the window, N s.
    pub impulse: f64,
}

impl ContactWindow {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Contact onsets and releases of a force history.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    pub onsets: Vec<f64>,
    pub releases: Vec<f64>,
    pub windows: Vec<ContactWindow>,
}

impl EventLog {
    /// Pulses that were merged into a preceding window.
    pub fn sub_impacts(&self) -> usize {
        self.windows.iter().map(|w| w.pulses - 1).sum()
    }

    pub fn first_window(&self) -> Option<&ContactWindow> {
        self.windows.first()
    }

    /// Line-oriented text: `onset t=…`, `release t=…`, then a summary.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut events: Vec<(f64, &str)> = self
            .onsets
            .iter()
            .map(|&t| (t, "onset"))
            .chain(self.releases.iter().map(|&t| (t, "release")))
            .collect();
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(a.1)));
        for (t, kind) in events {
            let _ = writeln!(out, "{kind} t={t:.9e}");
        }
        for (k, w) in self.windows.iter().enumerate() {
            let _ = writeln!(
                out,
                "window {} t_S={:.9e} t_E={:.9e} duration={:.9e} pulses={} peak_force={:.9e} impulse={:.9e}{}",
                k + 1,
                w.start,
                w.end,
                w.duration(),
                w.pulses,
                w.peak_force,
                w.impulse,
                if w.released { "" } else { " unreleased" }
            );
        }
        let _ = writeln!(
            out,
            "windows={} sub_impacts={}",
            self.windows.len(),
            self.sub_impacts()
        );
        out
    }
}

/// Onsets and releases from `force > 0` transitions; pulses separated by
/// less than `coalescence` seconds form one window.
pub fn detect_events(time: &[f64], force: &[f64], coalescence: f64) -> EventLog {
    let n = time.len().min(force.len());
    let mut log = EventLog::default();
    let mut pulses: Vec<(usize, usize, bool)> = Vec::new();
    let mut k = 0;
    while k < n {
        if force[k] > 0.0 {
            let start = k.saturating_sub(1);
            let mut end = k;
            while end < n && force[end] > 0.0 {
                end += 1;
            }
            let released = end < n;
            let end = end.min(n - 1);
            log.onsets.push(time[start]);
            if released {
                log.releases.push(time[end]);
            }
            pulses.push((start, end, released));
            k = end + 1;
        } else {
            k += 1;
        }
    }
    let mut merged: Vec<(usize, usize, bool, usize)> = Vec::new();
    for (s, e, r) in pulses {
        match merged.last_mut() {
            Some(last) if time[s] - time[last.1] < coalescence => {
                last.1 = e;
                last.2 = r;
                last.3 += 1;
            }
            _ => merged.push((s, e, r, 1)),
        }
    }
    log.windows = merged
        .into_iter()
        .map(|(s, e, released, count)| {
            let peak_force = force[s..=e].iter().copied().fold(0.0, f64::max);
            let impulse = (s..e)
                .map(|i| 0.5 * (force[i] + force[i + 1]) * (time[i + 1] - time[i]))
                .sum();
            ContactWindow {
                start: time[s],
                end: time[e],
                released,
                pulses: count,
                peak_force,
                impulse,
            }
        })
        .collect();
    log
}
