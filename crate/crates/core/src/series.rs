//! Sampled observables shared by the three solvers.
//!
//! All solvers record on the same uniform grid t_j = j · dt · sample_every,
//! j = 0 .. floor(T / (dt · sample_every)), so their curves can be compared
//! point by point. Cumulative emission probabilities are trapezoid sums of
//! the sampled flux.

/// Instantaneous observables at one boundary or sample time.
#[derive(Clone, Copy, Debug, Default)]
pub struct Snapshot {
    pub t: f64,
    pub p_l: f64,
    pub p_r: f64,
    pub cum_l: f64,
    pub cum_r: f64,
    /// Atomic populations in basis order g_{-1}, g_0, g_{+1}, e_{-1}, e_0, e_{+1}.
    pub pop: [f64; 6],
    pub trace_err: f64,
}

/// Time series of photon flux, cumulative emission, atomic populations, and
/// the solver's conservation diagnostic.
///
/// `trace_err` holds |tr ρ − 1| for the master solver and the surviving
/// squared norm of the (branch-weighted) state for the pure-state solvers.
#[derive(Clone, Debug, Default)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    /// Left-circular photon flux p_L(t) = 2κ⟨a†_L a_L⟩.
    pub p_l: Vec<f64>,
    pub p_r: Vec<f64>,
    /// Cumulative emission P_L(t), trapezoid of `p_l` over the sample grid.
    pub cum_l: Vec<f64>,
    pub cum_r: Vec<f64>,
    pub pop: [Vec<f64>; 6],
    pub trace_err: Vec<f64>,
}

impl TimeSeries {
    pub fn with_capacity(n: usize) -> Self {
        TimeSeries {
            times: Vec::with_capacity(n),
            p_l: Vec::with_capacity(n),
            p_r: Vec::with_capacity(n),
            cum_l: Vec::with_capacity(n),
            cum_r: Vec::with_capacity(n),
            pop: std::array::from_fn(|_| Vec::with_capacity(n)),
            trace_err: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Append one sample, extending the cumulative trapezoid sums.
    pub fn push(&mut self, t: f64, p_l: f64, p_r: f64, pop: [f64; 6], trace_err: f64) {
        let (cum_l, cum_r) = match self.times.last() {
            Some(&t_prev) => {
                let h = t - t_prev;
                (
                    self.cum_l.last().unwrap() + 0.5 * h * (self.p_l.last().unwrap() + p_l),
                    self.cum_r.last().unwrap() + 0.5 * h * (self.p_r.last().unwrap() + p_r),
                )
            }
            None => (0.0, 0.0),
        };
        self.times.push(t);
        self.p_l.push(p_l);
        self.p_r.push(p_r);
        self.cum_l.push(cum_l);
        self.cum_r.push(cum_r);
        for (k, v) in pop.iter().enumerate() {
            self.pop[k].push(*v);
        }
        self.trace_err.push(trace_err);
    }

    /// Snapshot of the sample at index `k`.
    pub fn snapshot(&self, k: usize) -> Snapshot {
        Snapshot {
            t: self.times[k],
            p_l: self.p_l[k],
            p_r: self.p_r[k],
            cum_l: self.cum_l[k],
            cum_r: self.cum_r[k],
            pop: std::array::from_fn(|i| self.pop[i][k]),
            trace_err: self.trace_err[k],
        }
    }

    /// Total cumulative emission P_L + P_R at time t, linearly interpolated
    /// between samples (exact at sample times).
    pub fn cum_total_at(&self, t: f64) -> f64 {
        let total = |k: usize| self.cum_l[k] + self.cum_r[k];
        match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(k) => total(k),
            Err(0) => total(0),
            Err(k) if k == self.len() => total(self.len() - 1),
            Err(k) => {
                let (t0, t1) = (self.times[k - 1], self.times[k]);
                let w = (t - t0) / (t1 - t0);
                total(k - 1) * (1.0 - w) + total(k) * w
            }
        }
    }

    /// First time the total cumulative emission reaches `level`
    /// (linear interpolation), if it ever does.
    pub fn crossing_time(&self, level: f64) -> Option<f64> {
        let total = |k: usize| self.cum_l[k] + self.cum_r[k];
        for k in 0..self.len() {
            if total(k) >= level {
                if k == 0 {
                    return Some(self.times[0]);
                }
                let (y0, y1) = (total(k - 1), total(k));
                let w = (level - y0) / (y1 - y0);
                return Some(self.times[k - 1] + w * (self.times[k] - self.times[k - 1]));
            }
        }
        None
    }

    /// Largest pointwise deviation from another series over the flux curves,
    /// optionally including the populations. Series must share the grid.
    pub fn max_abs_dev(&self, other: &TimeSeries, include_pops: bool) -> f64 {
        assert_eq!(self.len(), other.len(), "series grids differ");
        let mut dev = 0.0f64;
        for k in 0..self.len() {
            dev = dev.max((self.p_l[k] - other.p_l[k]).abs());
            dev = dev.max((self.p_r[k] - other.p_r[k]).abs());
            if include_pops {
                for i in 0..6 {
                    dev = dev.max((self.pop[i][k] - other.pop[i][k]).abs());
                }
            }
        }
        dev
    }
}

/// Interior strict local maxima of `ys` above `threshold`, as (t, y) pairs.
pub fn local_maxima(ts: &[f64], ys: &[f64], threshold: f64) -> Vec<(f64, f64)> {
    let mut peaks = Vec::new();
    for k in 1..ys.len().saturating_sub(1) {
        if ys[k] > threshold && ys[k] > ys[k - 1] && ys[k] > ys[k + 1] {
            peaks.push((ts[k], ys[k]));
        }
    }
    peaks
}

/// The uniform sample grid: floor(T / (dt · sample_every)) + 1 points.
pub fn sample_times(dt: f64, sample_every: usize, t_final: f64) -> Vec<f64> {
    let h = dt * sample_every as f64;
    let count = (t_final / h + 1e-9).floor() as usize + 1;
    (0..count).map(|j| j as f64 * h).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sample_grid_count_matches_schema() {
        let ts = sample_times(1e-3, 10, 25.0);
        assert_eq!(ts.len(), 2501);
        assert_eq!(ts[0], 0.0);
        assert_abs_diff_eq!(ts[2500], 25.0, epsilon = 1e-12);
        // non-divisible horizon rounds down
        assert_eq!(sample_times(1e-3, 10, 24.995).len(), 2500);
    }

    #[test]
    fn cumulative_trapezoid_integrates_linear_flux_exactly() {
        let mut s = TimeSeries::default();
        for k in 0..=10 {
            let t = k as f64 * 0.1;
            s.push(t, 2.0 * t, 3.0, [0.0; 6], 0.0);
        }
        // ∫ 2t dt = t², exact for the trapezoid rule on a linear integrand
        assert_abs_diff_eq!(*s.cum_l.last().unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(*s.cum_r.last().unwrap(), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            s.cum_total_at(0.55),
            0.55f64.powi(2) + 3.0 * 0.55 + 0.0025,
            epsilon = 1e-3
        );
    }

    #[test]
    fn crossing_time_interpolates() {
        let mut s = TimeSeries::default();
        for k in 0..=10 {
            s.push(k as f64, 1.0, 1.0, [0.0; 6], 0.0);
        }
        // total cumulative = 2t, so level 5 is reached at t = 2.5
        assert_abs_diff_eq!(s.crossing_time(5.0).unwrap(), 2.5, epsilon = 1e-12);
        assert!(s.crossing_time(100.0).is_none());
    }

    #[test]
    fn local_maxima_finds_interior_peaks_only() {
        let ts: Vec<f64> = (0..200).map(|k| k as f64 * 0.1).collect();
        let ys: Vec<f64> = ts
            .iter()
            .map(|t| (-0.1 * t).exp() * (0.8 * t).sin().powi(2))
            .collect();
        let peaks = local_maxima(&ts, &ys, 0.05);
        assert!(peaks.len() >= 2);
        for w in peaks.windows(2) {
            assert!(w[1].0 - w[0].0 > 2.0, "peaks separated by about π/0.8");
        }
        // rising boundary is not a peak
        let ramp: Vec<f64> = ts.to_vec();
        assert!(local_maxima(&ts, &ramp, 0.05).is_empty());
    }
}
