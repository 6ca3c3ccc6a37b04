//! Closed-form amplitude evolution for the three piecewise-constant segments
//! of the protocol.
//!
//! Between switching times the no-jump dynamics restricts to a few-amplitude
//! linear system i ẏ = M y with constant M, so each segment is a sum of
//! complex exponentials whose rates are the roots of a small characteristic
//! polynomial:
//!
//! * **Stage 1** (0 ≤ t ≤ t1, pump off): |e₀,0,0⟩ decays through the two
//!   degenerate cavity channels. The antisymmetric combination it couples to
//!   obeys a quadratic characteristic equation; the symmetric photon
//!   combination stays dark. Amplitudes: d₀ on |e₀,0,0⟩ and c∓₁ on
//!   |g∓₁⟩ with one photon in the R/L mode (c₋₁ = −c₊₁ for all t).
//! * **Stage 2** (t1 ≤ t ≤ t2, pump on): each ground branch is re-excited and
//!   emits its second photon. For the branch starting from |g₊₁⟩ the
//!   amplitudes (d₁, c₀, c₁) on |e₊₁,0,0⟩, |g₀,1_R⟩, |g₊₁,0,0⟩ follow a cubic
//!   characteristic equation. The mirror branch from |g₋₁⟩ evolves with the
//!   same c₀ and c₁ and the opposite sign of d₁, so one solve covers both.
//! * **Stage 3** (t2 ≤ t ≤ T, pump off again): leftover excitation rings down
//!   through the cavity; (d₁, c₀) obey a quadratic characteristic equation
//!   while c₁ is frozen.
//!
//! Repeated roots are handled with a t·e^{st} basis. The stage-3 closed form
//! is parametrized by the emission endpoint c₀(t2); when that amplitude is
//! vanishingly small the parametrization is ill-conditioned and the solver
//! falls back to direct numerical propagation of the 2×2 system, flagging the
//! result.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;

use crate::dynamics::Params;
use crate::entanglement::BranchTrace;
use crate::error::{Error, Result};
use crate::hilbert::Mode;
use crate::roots::{solve_polynomial, CharacteristicRoots};
use crate::series::{sample_times, TimeSeries};

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Window tolerance used when classifying sample times against t1/t2.
fn time_tol(p: &Params) -> f64 {
    1e-9 * p.t_final.max(1.0)
}

/// Ascending coefficients of the stage-1 characteristic polynomial
/// 2s² + (2κ + γ − i2Δ)s + (γκ + 2g² − i2κΔ).
///
/// Its roots govern the antisymmetric excitation the initial state couples
/// to; the symmetric photon combination decays at −κ but is never populated.
pub fn stage1_characteristic(p: &Params) -> [C64; 3] {
    [
        c64(
            p.gamma * p.kappa + 2.0 * p.g * p.g,
            -2.0 * p.kappa * p.delta,
        ),
        c64(2.0 * p.kappa + p.gamma, -2.0 * p.delta),
        c64(2.0, 0.0),
    ]
}

/// Ascending coefficients of the stage-2 characteristic polynomial
/// 2s³ + (2κ + γ − i2Δ)s² + (Ω² + κγ + g² − i2Δκ)s + Ω²κ.
pub fn stage2_characteristic(p: &Params) -> [C64; 4] {
    [
        c64(p.omega * p.omega * p.kappa, 0.0),
        c64(
            p.omega * p.omega + p.kappa * p.gamma + p.g * p.g,
            -2.0 * p.delta * p.kappa,
        ),
        c64(2.0 * p.kappa + p.gamma, -2.0 * p.delta),
        c64(2.0, 0.0),
    ]
}

/// Ascending coefficients of the stage-3 characteristic polynomial
/// 2s² + (2κ + γ − i2Δ)s + (g² + κγ − i2κΔ).
pub fn stage3_characteristic(p: &Params) -> [C64; 3] {
    [
        c64(p.g * p.g + p.kappa * p.gamma, -2.0 * p.kappa * p.delta),
        c64(2.0 * p.kappa + p.gamma, -2.0 * p.delta),
        c64(2.0, 0.0),
    ]
}

/// Generator of the stage-2 branch system ẏ = A y on y = (d₁, c₀, c₁).
fn stage2_generator(p: &Params) -> Matrix3<C64> {
    let s = 1.0 / SQRT2;
    let m = Matrix3::new(
        c64(-p.delta, -0.5 * p.gamma),
        c64(-p.g * s, 0.0),
        c64(p.omega * s, 0.0),
        c64(-p.g * s, 0.0),
        c64(0.0, -p.kappa),
        c64(0.0, 0.0),
        c64(p.omega * s, 0.0),
        c64(0.0, 0.0),
        c64(0.0, 0.0),
    );
    m.map(|x| x * c64(0.0, -1.0))
}

/// Stage-3 generator restricted to (d₁, c₀), as a plain 2×2.
fn stage3_generator(p: &Params) -> [[C64; 2]; 2] {
    let s = 1.0 / SQRT2;
    let minus_i = c64(0.0, -1.0);
    [
        [
            minus_i * c64(-p.delta, -0.5 * p.gamma),
            minus_i * c64(-p.g * s, 0.0),
        ],
        [minus_i * c64(-p.g * s, 0.0), minus_i * c64(0.0, -p.kappa)],
    ]
}

/// One exponential basis function τ^pow · e^{sτ}.
#[derive(Clone, Copy, Debug)]
struct ModeFn {
    s: C64,
    pow: u32,
}

impl ModeFn {
    fn value(&self, tau: f64) -> C64 {
        let e = (self.s * tau).exp();
        match self.pow {
            0 => e,
            1 => tau * e,
            _ => tau * tau * e,
        }
    }

    /// k-th derivative at τ = 0: d^k/dτ^k [τ^p e^{sτ}] = C(k,p)·p!·s^{k−p}.
    fn deriv0(&self, k: usize) -> C64 {
        let s = self.s;
        match (self.pow, k) {
            (0, 0) => c64(1.0, 0.0),
            (0, 1) => s,
            (0, 2) => s * s,
            (1, 1) => c64(1.0, 0.0),
            (1, 2) => 2.0 * s,
            (2, 2) => c64(2.0, 0.0),
            _ => c64(0.0, 0.0),
        }
    }
}

/// Group near-coincident roots and emit a confluent exponential basis:
/// a cluster of m roots contributes {e^{st}, t e^{st}, …, t^{m−1} e^{st}}
/// at the cluster mean.
fn cluster_basis(roots: &[C64]) -> Vec<ModeFn> {
    let scale = roots.iter().map(|s| s.norm()).fold(1.0f64, f64::max);
    let tol = 1e-8 * scale;
    let mut sorted = roots.to_vec();
    sorted.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    let mut clusters: Vec<Vec<C64>> = Vec::new();
    for s in sorted {
        match clusters.last_mut() {
            Some(cl) if (s - *cl.last().unwrap()).norm() <= tol => cl.push(s),
            _ => clusters.push(vec![s]),
        }
    }
    let mut basis = Vec::with_capacity(roots.len());
    for cl in clusters {
        let mean = cl.iter().sum::<C64>() / cl.len() as f64;
        for pow in 0..cl.len() {
            basis.push(ModeFn {
                s: mean,
                pow: pow as u32,
            });
        }
    }
    basis
}

/// Closed-form stage-1 amplitudes.
pub struct Stage1 {
    s1: C64,
    s2: C64,
    degenerate: bool,
    g: f64,
    kappa: f64,
}

impl Stage1 {
    pub fn new(p: &Params) -> Result<Self> {
        let roots = solve_polynomial(&stage1_characteristic(p))?;
        let (s1, s2) = (roots.roots[0], roots.roots[1]);
        let scale = s1.norm().max(s2.norm()).max(1.0);
        Ok(Stage1 {
            s1,
            s2,
            degenerate: (s1 - s2).norm() <= 1e-8 * scale,
            g: p.g,
            kappa: p.kappa,
        })
    }

    pub fn roots(&self) -> (C64, C64) {
        (self.s1, self.s2)
    }

    /// Amplitudes (d₀, c₋₁, c₊₁) at time t from the initial state |e₀,0,0⟩.
    ///
    /// d₀ multiplies |e₀,0,0⟩, c₋₁ multiplies |g₋₁,0_L,1_R⟩ and c₊₁
    /// multiplies |g₊₁,1_L,0_R⟩; c₋₁ = −c₊₁ identically.
    pub fn eval(&self, t: f64) -> (C64, C64, C64) {
        let t = t.max(0.0);
        let beta = c64(0.0, -self.g / SQRT2);
        let (d0, c_p1) = if self.degenerate {
            let s = 0.5 * (self.s1 + self.s2);
            let e = (s * t).exp();
            let c = beta * t * e;
            let d = (c64(1.0, 0.0) + (s + c64(self.kappa, 0.0)) * t) * e;
            (d, c)
        } else {
            let e1 = (self.s1 * t).exp();
            let e2 = (self.s2 * t).exp();
            let den = self.s1 - self.s2;
            let c = beta * (e1 - e2) / den;
            let d = ((self.s1 + c64(self.kappa, 0.0)) * e1 - (self.s2 + c64(self.kappa, 0.0)) * e2)
                / den;
            (d, c)
        };
        (d0, -c_p1, c_p1)
    }
}

/// Closed-form stage-2 branch amplitudes, solved as a sum of (possibly
/// confluent) exponentials fitted to the initial value and its first two
/// derivatives.
pub struct Stage2 {
    t1: f64,
    basis: Vec<ModeFn>,
    coef: [[C64; 3]; 3],
    roots: CharacteristicRoots,
}

impl Stage2 {
    /// Branch solution with initial state (d₁, c₀, c₁)(t1) = (0, 0, c1_init).
    pub fn new(p: &Params, c1_init: C64) -> Result<Self> {
        let roots = solve_polynomial(&stage2_characteristic(p))?;
        let basis = cluster_basis(&roots.roots);
        let a = stage2_generator(p);
        let zero = c64(0.0, 0.0);
        let y0 = Vector3::new(zero, zero, c1_init);
        let y1 = a * y0;
        let y2 = a * y1;
        let b = Matrix3::from_fn(|k, j| basis[j].deriv0(k));
        let lu = b.lu();
        let mut coef = [[zero; 3]; 3];
        for i in 0..3 {
            let rhs = Vector3::new(y0[i], y1[i], y2[i]);
            let sol = lu.solve(&rhs).ok_or_else(|| {
                Error::Domain("singular exponential basis in pump-stage solve".into())
            })?;
            coef[i] = [sol[0], sol[1], sol[2]];
        }
        Ok(Stage2 {
            t1: p.t1,
            basis,
            coef,
            roots,
        })
    }

    pub fn roots(&self) -> &CharacteristicRoots {
        &self.roots
    }

    /// Amplitudes [d₁, c₀, c₁] at absolute time t (valid on [t1, t2]).
    pub fn eval(&self, t: f64) -> [C64; 3] {
        let tau = (t - self.t1).max(0.0);
        let vals: Vec<C64> = self.basis.iter().map(|f| f.value(tau)).collect();
        let mut out = [c64(0.0, 0.0); 3];
        for (row, y) in out.iter_mut().enumerate() {
            for (j, v) in vals.iter().enumerate() {
                *y += self.coef[row][j] * v;
            }
        }
        out
    }
}

enum Stage3Kind {
    ClosedForm {
        s1: C64,
        s2: C64,
        c0_coef: (C64, C64),
        d1_coef: (C64, C64),
    },
    Grid {
        h: f64,
        ys: Vec<[C64; 2]>,
        derivs: Vec<[C64; 2]>,
    },
}

/// Ring-down of (d₁, c₀) after the pump switches off; c₁ is frozen.
pub struct Stage3 {
    t2: f64,
    span: f64,
    /// True when the closed form was ill-conditioned and the solution was
    /// obtained by direct numerical propagation instead.
    pub fallback_ode: bool,
    kind: Stage3Kind,
}

impl Stage3 {
    pub fn new(p: &Params, d1_t2: C64, c0_t2: C64) -> Result<Self> {
        let roots = solve_polynomial(&stage3_characteristic(p))?;
        let (s1, s2) = (roots.roots[0], roots.roots[1]);
        let root_scale = s1.norm().max(s2.norm()).max(1.0);
        let degenerate = (s1 - s2).norm() <= 1e-8 * root_scale;
        let amp_scale = (d1_t2.norm() + c0_t2.norm()).max(1e-300);
        let span = (p.t_final - p.t2).max(0.0);

        if degenerate || c0_t2.norm() <= 1e-12 * amp_scale {
            // The closed form divides by c0(t2); propagate directly instead.
            let a = stage3_generator(p);
            let n = (span / p.dt).ceil().max(1.0) as usize;
            let h = span / n as f64;
            let mut ys = Vec::with_capacity(n + 1);
            let mut derivs = Vec::with_capacity(n + 1);
            let mut y = [d1_t2, c0_t2];
            for k in 0..=n {
                derivs.push(apply2(&a, &y));
                ys.push(y);
                if k < n {
                    y = rk4_step2(&a, y, h);
                }
            }
            return Ok(Stage3 {
                t2: p.t2,
                span,
                fallback_ode: true,
                kind: Stage3Kind::Grid { h, ys, derivs },
            });
        }

        // Effective third rate folding the instantaneous d₁/c₀ ratio into the
        // two-exponential ansatz for c₀.
        let s3 = c64(-0.5 * p.gamma, p.delta)
            - c64(0.0, 1.0) * c64(p.g * SQRT2, 0.0) * d1_t2 / (2.0 * c0_t2);
        let den = s1 - s2;
        let c0_coef = (c0_t2 * (s1 - s3) / den, c0_t2 * (s2 - s3) / (-den));
        // d₁ fitted to its value and derivative at t2.
        let d1p0 = c64(-0.5 * p.gamma, p.delta) * d1_t2 + c64(0.0, p.g / SQRT2) * c0_t2;
        let a_coef = (d1p0 - s2 * d1_t2) / den;
        let d1_coef = (a_coef, d1_t2 - a_coef);
        Ok(Stage3 {
            t2: p.t2,
            span,
            fallback_ode: false,
            kind: Stage3Kind::ClosedForm {
                s1,
                s2,
                c0_coef,
                d1_coef,
            },
        })
    }

    /// Amplitudes [d₁, c₀] at absolute time t (valid on [t2, T]).
    pub fn eval(&self, t: f64) -> [C64; 2] {
        let tau = (t - self.t2).clamp(0.0, self.span);
        match &self.kind {
            Stage3Kind::ClosedForm {
                s1,
                s2,
                c0_coef,
                d1_coef,
            } => {
                let e1 = (s1 * tau).exp();
                let e2 = (s2 * tau).exp();
                [
                    d1_coef.0 * e1 + d1_coef.1 * e2,
                    c0_coef.0 * e1 + c0_coef.1 * e2,
                ]
            }
            Stage3Kind::Grid { h, ys, derivs } => {
                if *h == 0.0 || ys.len() < 2 {
                    return ys[0];
                }
                let x = tau / h;
                let k = (x.floor() as usize).min(ys.len() - 2);
                let th = x - k as f64;
                let h00 = (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th);
                let h10 = th * (1.0 - th) * (1.0 - th);
                let h01 = th * th * (3.0 - 2.0 * th);
                let h11 = th * th * (th - 1.0);
                let mut out = [c64(0.0, 0.0); 2];
                for i in 0..2 {
                    out[i] = h00 * ys[k][i]
                        + (h10 * *h) * derivs[k][i]
                        + h01 * ys[k + 1][i]
                        + (h11 * *h) * derivs[k + 1][i];
                }
                out
            }
        }
    }
}

fn apply2(a: &[[C64; 2]; 2], y: &[C64; 2]) -> [C64; 2] {
    [
        a[0][0] * y[0] + a[0][1] * y[1],
        a[1][0] * y[0] + a[1][1] * y[1],
    ]
}

fn rk4_step2(a: &[[C64; 2]; 2], y: [C64; 2], h: f64) -> [C64; 2] {
    let k1 = apply2(a, &y);
    let y2 = [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]];
    let k2 = apply2(a, &y2);
    let y3 = [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]];
    let k3 = apply2(a, &y3);
    let y4 = [y[0] + h * k3[0], y[1] + h * k3[1]];
    let k4 = apply2(a, &y4);
    [
        y[0] + (h / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + (h / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Labeled amplitude vector returned by the stage evaluation entry points.
#[derive(Clone, Debug)]
pub struct StageAmplitudes {
    pub stage: u8,
    pub labels: &'static [&'static str],
    pub amps: Vec<C64>,
    /// Set when the stage-3 closed form was replaced by direct propagation.
    pub fallback_ode: bool,
}

impl StageAmplitudes {
    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Stage-1 amplitudes (d₀, c₋₁, c₊₁) at t ∈ [0, t1].
pub fn stage1_analytic(p: &Params, t: f64) -> Result<StageAmplitudes> {
    let eps = time_tol(p);
    if t < -eps || t > p.t1 + eps {
        return Err(Error::Domain(format!(
            "stage-1 amplitudes requested at t = {t}, outside [0, {}]",
            p.t1
        )));
    }
    let (d0, cm, cp) = Stage1::new(p)?.eval(t);
    Ok(StageAmplitudes {
        stage: 1,
        labels: &["e0", "gm1_r", "gp1_l"],
        amps: vec![d0, cm, cp],
        fallback_ode: false,
    })
}

/// Stage-2 branch amplitudes (d₁, c₀, c₁) at t ∈ [t1, t2] for a branch that
/// enters the pump window with ground amplitude `c1_init`.
pub fn stage2_analytic(p: &Params, t: f64, c1_init: C64) -> Result<StageAmplitudes> {
    let eps = time_tol(p);
    if t < p.t1 - eps || t > p.t2 + eps {
        return Err(Error::Domain(format!(
            "stage-2 amplitudes requested at t = {t}, outside [{}, {}]",
            p.t1, p.t2
        )));
    }
    let amps = Stage2::new(p, c1_init)?.eval(t);
    Ok(StageAmplitudes {
        stage: 2,
        labels: &["ep1", "g0_r", "gp1"],
        amps: amps.to_vec(),
        fallback_ode: false,
    })
}

/// Stage-3 ring-down amplitudes (d₁, c₀) at t ∈ [t2, T], starting from the
/// pump-window endpoint values.
pub fn stage3_analytic(p: &Params, t: f64, d1_t2: C64, c0_t2: C64) -> Result<StageAmplitudes> {
    let eps = time_tol(p);
    if t < p.t2 - eps || t > p.t_final + eps {
        return Err(Error::Domain(format!(
            "stage-3 amplitudes requested at t = {t}, outside [{}, {}]",
            p.t2, p.t_final
        )));
    }
    let stage = Stage3::new(p, d1_t2, c0_t2)?;
    let amps = stage.eval(t);
    Ok(StageAmplitudes {
        stage: 3,
        labels: &["ep1", "g0_r"],
        amps: amps.to_vec(),
        fallback_ode: stage.fallback_ode,
    })
}

/// Full observable record assembled from the closed-form stage solutions on
/// the same sample grid the numerical solvers use.
///
/// Populations fold the already-emitted photon weight back onto the dark
/// level it parks the atom in (g±₁ for the first photon, g₀ for the second),
/// so they track the unconditional level occupations; the `trace_err` column
/// stores the surviving no-jump norm² of the current stage instead of a trace
/// defect. Branch weights after the handoff at t1 are exactly ½ each.
pub fn analytic_timeseries(p: &Params) -> Result<TimeSeries> {
    let eps = time_tol(p);
    let stage1 = Stage1::new(p)?;
    let two_kappa = 2.0 * p.kappa;
    let rate2 = p.second_rate_factor();
    let pump_active = p.t2 > p.t1 + eps && p.t1 < p.t_final - eps;

    let mut stage2 = None;
    let mut stage3 = None;
    let mut c1_t2 = c64(0.0, 0.0);
    if pump_active {
        let s2 = Stage2::new(p, c64(1.0, 0.0))?;
        let [d1_t2, c0_t2, c1] = s2.eval(p.t2);
        c1_t2 = c1;
        if p.t2 < p.t_final - eps {
            stage3 = Some(Stage3::new(p, d1_t2, c0_t2)?);
        }
        stage2 = Some(s2);
    }

    let times = sample_times(p.dt, p.sample_every, p.t_final);
    let mut ts = TimeSeries::with_capacity(times.len());
    let mut cum_l = 0.0f64;
    let mut cum_r = 0.0f64;
    let mut cum_at_handoff: Option<f64> = None;
    let mut prev: Option<(f64, f64, f64)> = None;

    for &t in &times {
        let (p_l, p_r, amp_pops, survival, in_stage1) = if t <= p.t1 + eps || !pump_active {
            let (d0, cm, cp) = stage1.eval(t.min(p.t1));
            if t <= p.t1 + eps {
                let pl = two_kappa * cp.norm_sqr();
                let pr = two_kappa * cm.norm_sqr();
                let pops = [cm.norm_sqr(), 0.0, cp.norm_sqr(), 0.0, d0.norm_sqr(), 0.0];
                let surv = d0.norm_sqr() + cm.norm_sqr() + cp.norm_sqr();
                (pl, pr, pops, surv, true)
            } else {
                // Pump never fires: branches sit frozen in g±1 after t1.
                (0.0, 0.0, [0.5, 0.0, 0.5, 0.0, 0.0, 0.0], 1.0, false)
            }
        } else if t <= p.t2 + eps {
            let [d1, c0, c1] = stage2.as_ref().unwrap().eval(t);
            let flux = rate2 * c0.norm_sqr();
            let pops = [
                0.5 * c1.norm_sqr(),
                c0.norm_sqr(),
                0.5 * c1.norm_sqr(),
                0.5 * d1.norm_sqr(),
                0.0,
                0.5 * d1.norm_sqr(),
            ];
            let surv = d1.norm_sqr() + c0.norm_sqr() + c1.norm_sqr();
            (0.5 * flux, 0.5 * flux, pops, surv, false)
        } else {
            let [d1, c0] = stage3.as_ref().unwrap().eval(t);
            let flux = rate2 * c0.norm_sqr();
            let pops = [
                0.5 * c1_t2.norm_sqr(),
                c0.norm_sqr(),
                0.5 * c1_t2.norm_sqr(),
                0.5 * d1.norm_sqr(),
                0.0,
                0.5 * d1.norm_sqr(),
            ];
            let surv = d1.norm_sqr() + c0.norm_sqr() + c1_t2.norm_sqr();
            (0.5 * flux, 0.5 * flux, pops, surv, false)
        };

        if let Some((tp, plp, prp)) = prev {
            let h = t - tp;
            cum_l += 0.5 * (plp + p_l) * h;
            cum_r += 0.5 * (prp + p_r) * h;
        }
        prev = Some((t, p_l, p_r));

        let mut pops = amp_pops;
        if in_stage1 {
            pops[0] += cum_r;
            pops[2] += cum_l;
        } else {
            let handoff = *cum_at_handoff.get_or_insert(cum_l + cum_r);
            pops[1] += cum_l + cum_r - handoff;
        }
        ts.push(t, p_l, p_r, pops, survival);
    }
    Ok(ts)
}

fn unit_phase(z: C64) -> C64 {
    let n = z.norm();
    if n == 0.0 {
        c64(1.0, 0.0)
    } else {
        z / n
    }
}

/// Per-branch emission records for the pair-state reduction, from the closed
/// forms. The two branches share the identical c₀ envelope (the mirror only
/// flips the sign of d₁) and carry opposite stage-1 lineage phases.
pub fn analytic_branch_traces(p: &Params) -> Result<(BranchTrace, BranchTrace)> {
    let eps = time_tol(p);
    if !(p.t2 > p.t1 + eps && p.t1 < p.t_final - eps) {
        return Err(Error::Domain(
            "pump window is empty; no second photon is emitted".into(),
        ));
    }
    let stage1 = Stage1::new(p)?;

    // Lineage phases are read at the first-photon peak emission time.
    let scan_n = (p.t1 / p.dt).ceil().max(1.0) as usize;
    let mut best = (0.0f64, 0.0f64);
    for k in 0..=scan_n {
        let t = (k as f64 * p.dt).min(p.t1);
        let (_, _, cp) = stage1.eval(t);
        if cp.norm() > best.0 {
            best = (cp.norm(), t);
        }
    }
    if best.0 < 1e-12 {
        return Err(Error::Domain(
            "no first-photon emission; cavity coupling never populates the photon branches".into(),
        ));
    }
    let (_, cm_peak, cp_peak) = stage1.eval(best.1);
    let lineage_r_first = unit_phase(cm_peak);
    let lineage_l_first = unit_phase(cp_peak);

    let s2 = Stage2::new(p, c64(1.0, 0.0))?;
    let [d1_t2, c0_t2, c1_t2] = s2.eval(p.t2);
    let s3 = if p.t2 < p.t_final - eps {
        Some(Stage3::new(p, d1_t2, c0_t2)?)
    } else {
        None
    };

    let times: Vec<f64> = sample_times(p.dt, p.sample_every, p.t_final)
        .into_iter()
        .filter(|&t| t >= p.t1 - eps)
        .collect();
    let rate2 = p.second_rate_factor();
    let mut c0s = Vec::with_capacity(times.len());
    let mut norm_sq = Vec::with_capacity(times.len());
    for &t in &times {
        if t <= p.t2 + eps {
            let [d1, c0, c1] = s2.eval(t);
            c0s.push(c0);
            norm_sq.push(d1.norm_sqr() + c0.norm_sqr() + c1.norm_sqr());
        } else {
            let [d1, c0] = s3.as_ref().unwrap().eval(t);
            c0s.push(c0);
            norm_sq.push(d1.norm_sqr() + c0.norm_sqr() + c1_t2.norm_sqr());
        }
    }
    let mut emission_prob = 0.0;
    for k in 1..times.len() {
        let f0 = rate2 * c0s[k - 1].norm_sqr();
        let f1 = rate2 * c0s[k].norm_sqr();
        emission_prob += 0.5 * (f0 + f1) * (times[k] - times[k - 1]);
    }

    let r_first = BranchTrace {
        first: Mode::R,
        second: Mode::L,
        lineage: lineage_r_first,
        times: times.clone(),
        c0: c0s.clone(),
        norm_sq: norm_sq.clone(),
        emission_prob,
    };
    let l_first = BranchTrace {
        first: Mode::L,
        second: Mode::R,
        lineage: lineage_l_first,
        times,
        c0: c0s,
        norm_sq,
        emission_prob,
    };
    Ok((r_first, l_first))
}
