//! Deterministic artifact emission: CSV time series, the sweep table, and
//! the JSON run summary. All floats use `{:.12e}` so identical configurations
//! produce byte-identical files.

use std::fmt::Write as _;

use cavity_epr::series::TimeSeries;
use serde::Serialize;

pub const TIMESERIES_HEADER: &str =
    "t,p_L,p_R,P_L,P_R,pop_gm1,pop_g0,pop_gp1,pop_em1,pop_e0,pop_ep1,trace_err";

pub const SWEEP_HEADER: &str = "param,value,P1,P2,t_p1_90";

/// Dimensionless-to-laboratory mapping quoted for the working point.
pub const PHYSICAL_UNITS_NOTE: &str = "dimensionless units; the working point corresponds to \
gamma = (2 pi) 0.2 MHz, g = (2 pi) 20 MHz, kappa = (2 pi) 24 MHz, and a total duration \
T = 25 of about 200 ns";

fn push_float(out: &mut String, x: f64) {
    let _ = write!(out, "{x:.12e}");
}

/// Render a solver time series as CSV with the stable column schema.
pub fn timeseries_csv(s: &TimeSeries) -> String {
    let mut out = String::with_capacity(32 * 12 * (s.len() + 1));
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for k in 0..s.len() {
        let mut cols = [0.0f64; 12];
        cols[0] = s.times[k];
        cols[1] = s.p_l[k];
        cols[2] = s.p_r[k];
        cols[3] = s.cum_l[k];
        cols[4] = s.cum_r[k];
        for i in 0..6 {
            cols[5 + i] = s.pop[i][k];
        }
        cols[11] = s.trace_err[k];
        for (i, c) in cols.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            push_float(&mut out, *c);
        }
        out.push('\n');
    }
    out
}

/// One sweep point: the swept parameter value and its headline metrics.
/// `t_p1_90` is NaN when the first-photon emission never reaches 0.9.
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub p1: f64,
    pub p2: f64,
    pub t_p1_90: f64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.param);
        for x in [r.value, r.p1, r.p2, r.t_p1_90] {
            out.push(',');
            push_float(&mut out, x);
        }
        out.push('\n');
    }
    out
}

/// Headline metrics of a run. Peak times are None (JSON null) when the flux
/// shows fewer than two pulses above the reporting threshold.
#[derive(Serialize)]
pub struct Summary {
    #[serde(rename = "P1")]
    pub p1: f64,
    #[serde(rename = "P2")]
    pub p2: f64,
    pub fidelity_epr: f64,
    pub peak_t_first: Option<f64>,
    pub peak_t_second: Option<f64>,
    pub max_trace_err: f64,
    pub cross_solver_max_dev: f64,
    pub physical_units_note: String,
}

pub fn summary_json(s: &Summary) -> String {
    let mut out = serde_json::to_string_pretty(s).expect("summary serializes");
    out.push('\n');
    out
}
