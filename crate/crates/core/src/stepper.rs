//! Step planning for the fixed-step integrators.
//!
//! Steps walk the uniform grid k · dt but are split at t1, t2, and T so that
//! no RK4 step straddles a pulse discontinuity; boundaries off the grid get a
//! short step in and a short step back out. Samples land exactly on the grid
//! multiples j · dt · sample_every.

use crate::dynamics::Params;

/// Pulse window of a step, by the midpoint convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    /// 0 ≤ t < t1: cavity coupling only.
    BeforePump,
    /// t1 ≤ t ≤ t2: cavity coupling and pump.
    Pump,
    /// t2 < t ≤ T: cavity coupling only.
    AfterPump,
}

impl Window {
    /// A time strictly inside the window, used to evaluate the window-constant
    /// generators.
    pub fn probe_time(self, p: &Params) -> f64 {
        match self {
            Window::BeforePump => 0.5 * p.t1,
            Window::Pump => 0.5 * (p.t1 + p.t2),
            Window::AfterPump => 0.5 * (p.t2 + p.t_final),
        }
    }
}

/// One planned integration step plus whatever events its endpoint carries.
#[derive(Clone, Copy, Debug)]
pub struct Step {
    pub t: f64,
    pub h: f64,
    pub window: Window,
    /// Sample index reached at t + h, if the endpoint is a sample time.
    pub sample: Option<usize>,
    /// Endpoint is the pump switch-on time t1.
    pub at_t1: bool,
    /// Endpoint is the pump switch-off time t2.
    pub at_t2: bool,
}

/// Plan the full step sequence over [0, T].
pub fn plan(p: &Params) -> Vec<Step> {
    let dt = p.dt;
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * dt.max(b.abs() * 1e-6);
    let mut boundaries = vec![p.t1, p.t2, p.t_final];
    boundaries.dedup_by(|a, b| rel(*a, *b));

    let mut steps = Vec::with_capacity((p.t_final / dt).ceil() as usize + 8);
    let mut t = 0.0f64;
    let mut k: u64 = 0; // completed grid steps: k * dt <= t < (k+1) * dt
    while !rel(t, p.t_final) && t < p.t_final {
        let next_grid = (k + 1) as f64 * dt;
        let next_boundary = boundaries
            .iter()
            .copied()
            .find(|b| *b > t && !rel(*b, t))
            .unwrap_or(p.t_final);
        let (target, on_grid) = if rel(next_boundary, next_grid) {
            (next_grid, true)
        } else if next_boundary < next_grid {
            (next_boundary, false)
        } else {
            (next_grid, true)
        };
        let target = target.min(p.t_final);

        let window = {
            let mid = 0.5 * (t + target);
            if mid < p.t1 {
                Window::BeforePump
            } else if mid <= p.t2 {
                Window::Pump
            } else {
                Window::AfterPump
            }
        };
        let at_t1 = rel(target, p.t1);
        let at_t2 = rel(target, p.t2);
        let sample = if on_grid && (k + 1).is_multiple_of(p.sample_every as u64) {
            Some(((k + 1) / p.sample_every as u64) as usize)
        } else {
            None
        };
        steps.push(Step {
            t,
            h: target - t,
            window,
            sample,
            at_t1,
            at_t2,
        });
        if on_grid {
            k += 1;
        }
        t = target;
    }
    steps
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params() -> Params {
        Params::default()
    }

    #[test]
    fn default_plan_counts() {
        let p = params();
        let steps = plan(&p);
        assert_eq!(steps.len(), 25_000, "all boundaries sit on the grid");
        let samples: Vec<usize> = steps.iter().filter_map(|s| s.sample).collect();
        assert_eq!(samples.len(), 2500); // plus the initial sample recorded by the solver
        assert_eq!(*samples.last().unwrap(), 2500);
        assert_eq!(steps.iter().filter(|s| s.at_t1).count(), 1);
        assert_eq!(steps.iter().filter(|s| s.at_t2).count(), 1);
    }

    #[test]
    fn steps_partition_the_horizon() {
        for t1 in [14.0, 13.99955] {
            let p = Params { t1, ..params() };
            let steps = plan(&p);
            let mut t = 0.0;
            for s in &steps {
                assert_abs_diff_eq!(s.t, t, epsilon = 1e-9);
                assert!(s.h > 0.0 && s.h <= p.dt + 1e-12);
                t += s.h;
            }
            assert_abs_diff_eq!(t, p.t_final, epsilon = 1e-9);
        }
    }

    #[test]
    fn off_grid_boundary_gets_split_steps_and_keeps_samples_on_grid() {
        let p = Params {
            t1: 13.99955, // between grid points
            ..params()
        };
        let steps = plan(&p);
        let hit = steps.iter().find(|s| s.at_t1).expect("boundary step");
        assert_abs_diff_eq!(hit.t + hit.h, 13.99955, epsilon = 1e-12);
        assert!(hit.sample.is_none(), "off-grid endpoint is not a sample");
        for s in &steps {
            if let Some(j) = s.sample {
                assert_abs_diff_eq!(
                    s.t + s.h,
                    j as f64 * p.dt * p.sample_every as f64,
                    epsilon = 1e-9
                );
            }
        }
        let samples = steps.iter().filter(|s| s.sample.is_some()).count();
        assert_eq!(samples, 2500);
    }

    #[test]
    fn no_step_straddles_a_pulse_edge() {
        for t1 in [14.0, 13.99955, 14.00042] {
            let p = Params { t1, ..params() };
            for s in plan(&p) {
                let (a, b) = (s.t, s.t + s.h);
                for edge in [p.t1, p.t2] {
                    assert!(
                        edge <= a + 1e-12 || edge >= b - 1e-12,
                        "step [{a}, {b}] straddles edge {edge}"
                    );
                }
            }
        }
    }

    #[test]
    fn windows_match_midpoints() {
        let p = params();
        for s in plan(&p) {
            let mid = s.t + 0.5 * s.h;
            let expect = if mid < p.t1 {
                Window::BeforePump
            } else if mid <= p.t2 {
                Window::Pump
            } else {
                Window::AfterPump
            };
            assert_eq!(s.window, expect);
        }
    }

    #[test]
    fn degenerate_pump_window_collapses() {
        // t1 = t2 = T: the pump window has zero measure and the plan stays sane
        let p = Params {
            t1: 25.0,
            t2: 25.0,
            ..params()
        };
        let steps = plan(&p);
        assert_eq!(steps.len(), 25_000);
        assert!(steps.iter().all(|s| s.window == Window::BeforePump));
    }
}
