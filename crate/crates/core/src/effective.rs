//! Pure-state trajectory solver for the no-jump dynamics.
//!
//! The state evolves under the non-Hermitian effective Hamiltonian
//! E = H − iκ(n_L + n_R) − i(γ/2)Σ|e⟩⟨e|, whose norm loss is exactly the
//! probability that a photon has already leaked (or the atom has scattered).
//!
//! The run has two phases:
//!
//! 1. From |e₀,0,0⟩ until t1: the first photon is emitted into the two
//!    cavity channels. The amplitude phases of the |g±₁⟩ ⊗ photon components
//!    are captured at their peak as the branch lineage phases, and the small
//!    weight still undecayed at t1 is recorded as `truncated_weight`.
//! 2. At t1 the emitted photon has left and the atom is, to that accuracy, a
//!    50/50 classical mixture of |g₋₁⟩ and |g₊₁⟩. Each branch restarts as a
//!    fresh basis state with classical weight ½ and is propagated through the
//!    pump window and ring-down. The combined observables are the
//!    ½-weighted sums, with already-emitted photon weight folded back onto
//!    the dark level it parks the atom in (as in the closed-form series).
//!
//! Each branch also yields a [`BranchTrace`] (its second-photon envelope,
//! lineage phase and emission probability) for the pair-state reduction.

use num_complex::Complex64 as C64;

use crate::dynamics::{effective_hamiltonian, Params};
use crate::entanglement::BranchTrace;
use crate::error::{Error, Result};
use crate::hilbert::{AtomicLevel, HilbertSpace, Mode};
use crate::master::{apply_vec_acc, DiagObservables, SparseOp};
use crate::series::TimeSeries;
use crate::stepper::{plan, Window};

/// Tolerated per-step norm increase before the run is declared divergent.
const NORM_GROWTH_TOL: f64 = 1e-9;

pub struct EffectiveRun {
    pub series: TimeSeries,
    /// Undecayed weight ‖ψ(t1)‖² discarded by the branch handoff.
    pub truncated_weight: f64,
    pub branch_r_first: BranchTrace,
    pub branch_l_first: BranchTrace,
}

pub(crate) struct VecRk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    stage: Vec<C64>,
}

impl VecRk4 {
    pub(crate) fn new(d: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); d];
        VecRk4 {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            stage: z,
        }
    }

    /// One step of ψ̇ = −iEψ.
    pub(crate) fn step(&mut self, op: &SparseOp, psi: &mut [C64], h: f64) {
        let minus_i = C64::new(0.0, -1.0);
        self.k1.fill(C64::new(0.0, 0.0));
        apply_vec_acc(op, psi, minus_i, &mut self.k1);
        for (i, s) in self.stage.iter_mut().enumerate() {
            *s = psi[i] + 0.5 * h * self.k1[i];
        }
        self.k2.fill(C64::new(0.0, 0.0));
        apply_vec_acc(op, &self.stage, minus_i, &mut self.k2);
        for (i, s) in self.stage.iter_mut().enumerate() {
            *s = psi[i] + 0.5 * h * self.k2[i];
        }
        self.k3.fill(C64::new(0.0, 0.0));
        apply_vec_acc(op, &self.stage, minus_i, &mut self.k3);
        for (i, s) in self.stage.iter_mut().enumerate() {
            *s = psi[i] + h * self.k3[i];
        }
        self.k4.fill(C64::new(0.0, 0.0));
        apply_vec_acc(op, &self.stage, minus_i, &mut self.k4);
        let w = h / 6.0;
        for (i, x) in psi.iter_mut().enumerate() {
            *x += w * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

fn norm_sq(psi: &[C64]) -> f64 {
    psi.iter().map(|a| a.norm_sqr()).sum()
}

fn unit_phase(z: C64) -> C64 {
    let n = z.norm();
    if n == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        z / n
    }
}

/// Integrate the no-jump trajectory with the ½/½ branch handoff at t1.
pub fn integrate_effective(p: &Params) -> Result<EffectiveRun> {
    let space = HilbertSpace::new(p.n_max);
    let d = space.dim();

    let window_ops: Vec<SparseOp> = [Window::BeforePump, Window::Pump, Window::AfterPump]
        .into_iter()
        .map(|w| SparseOp::from_dense(&effective_hamiltonian(&space, p, w.probe_time(p))))
        .collect();
    let window_index = |w: Window| match w {
        Window::BeforePump => 0usize,
        Window::Pump => 1,
        Window::AfterPump => 2,
    };

    let idx_e0 = space.encode(AtomicLevel::E0, 0, 0)?;
    let idx_gp1_photon = space.encode(AtomicLevel::Gp1, 1, 0)?;
    let idx_gm1_photon = space.encode(AtomicLevel::Gm1, 0, 1)?;
    let idx_gp1 = space.encode(AtomicLevel::Gp1, 0, 0)?;
    let idx_gm1 = space.encode(AtomicLevel::Gm1, 0, 0)?;
    let idx_c0_r = space.encode(AtomicLevel::G0, 0, 1)?;
    let idx_c0_l = space.encode(AtomicLevel::G0, 1, 0)?;

    let zero = C64::new(0.0, 0.0);
    let mut psi = vec![zero; d];
    psi[idx_e0] = C64::new(1.0, 0.0);
    let mut rk4 = VecRk4::new(d);
    let obs = DiagObservables::new(&space);

    let steps = plan(p);
    let samples = steps.iter().filter(|s| s.sample.is_some()).count() + 1;
    let mut series = TimeSeries::with_capacity(samples);
    series.push(
        0.0,
        0.0,
        0.0,
        {
            let mut pops = [0.0; 6];
            pops[AtomicLevel::E0.index()] = 1.0;
            pops
        },
        1.0,
    );

    // branch state, populated at the handoff
    let mut branches: Option<(Vec<C64>, Vec<C64>)> = None; // (from g+1, from g-1)
    let mut truncated_weight = 0.0;
    let mut lineage_l_first = C64::new(1.0, 0.0);
    let mut lineage_r_first = C64::new(-1.0, 0.0);
    let mut peak = 0.0f64;

    let mut cum_l = 0.0f64;
    let mut cum_r = 0.0f64;
    let mut cum_at_handoff = 0.0f64;
    let mut prev_flux = (0.0f64, 0.0f64, 0.0f64);

    let mut trace_times: Vec<f64> = Vec::new();
    let mut trace_c0_plus: Vec<C64> = Vec::new();
    let mut trace_c0_minus: Vec<C64> = Vec::new();
    let mut trace_norm_plus: Vec<f64> = Vec::new();
    let mut trace_norm_minus: Vec<f64> = Vec::new();
    let mut trace_flux_plus: Vec<f64> = Vec::new();
    let mut trace_flux_minus: Vec<f64> = Vec::new();

    let mut prev_norm_a = 1.0f64;
    let mut prev_norm_b = (1.0f64, 1.0f64);

    for step in &steps {
        let op = &window_ops[window_index(step.window)];
        let t_end = step.t + step.h;

        match branches.as_mut() {
            None => {
                rk4.step(op, &mut psi, step.h);
                let n = norm_sq(&psi);
                if n > prev_norm_a + NORM_GROWTH_TOL {
                    return Err(Error::IntegrationDiverged {
                        solver: "effective",
                        t: t_end,
                        detail: format!("norm grew by {:.3e}", n - prev_norm_a),
                    });
                }
                prev_norm_a = n;

                // track the first-photon peak for the lineage phases
                let c_plus = psi[idx_gp1_photon];
                if c_plus.norm() > peak {
                    peak = c_plus.norm();
                    lineage_l_first = unit_phase(c_plus);
                    lineage_r_first = unit_phase(psi[idx_gm1_photon]);
                }

                if step.sample.is_some() {
                    let (pl, pr, mut pops, nsq) = obs.read_vec(&psi, p.kappa);
                    let h = t_end - series.times.last().copied().unwrap_or(0.0);
                    cum_l += 0.5 * (prev_flux.1 + pl) * h;
                    cum_r += 0.5 * (prev_flux.2 + pr) * h;
                    prev_flux = (t_end, pl, pr);
                    pops[AtomicLevel::Gm1.index()] += cum_r;
                    pops[AtomicLevel::Gp1.index()] += cum_l;
                    series.push(t_end, pl, pr, pops, nsq);
                }

                if step.at_t1 {
                    truncated_weight = norm_sq(&psi);
                    let mut plus = vec![zero; d];
                    plus[idx_gp1] = C64::new(1.0, 0.0);
                    let mut minus = vec![zero; d];
                    minus[idx_gm1] = C64::new(1.0, 0.0);
                    branches = Some((plus, minus));
                    cum_at_handoff = cum_l + cum_r;
                    prev_norm_b = (1.0, 1.0);
                    trace_times.push(t_end);
                    trace_c0_plus.push(zero);
                    trace_c0_minus.push(zero);
                    trace_norm_plus.push(1.0);
                    trace_norm_minus.push(1.0);
                    trace_flux_plus.push(0.0);
                    trace_flux_minus.push(0.0);
                }
            }
            Some((plus, minus)) => {
                rk4.step(op, plus, step.h);
                rk4.step(op, minus, step.h);
                let np = norm_sq(plus);
                let nm = norm_sq(minus);
                if np > prev_norm_b.0 + NORM_GROWTH_TOL || nm > prev_norm_b.1 + NORM_GROWTH_TOL {
                    return Err(Error::IntegrationDiverged {
                        solver: "effective",
                        t: t_end,
                        detail: "branch norm grew".into(),
                    });
                }
                prev_norm_b = (np, nm);

                if step.sample.is_some() {
                    let (pl_p, pr_p, pops_p, nsq_p) = obs.read_vec(plus, p.kappa);
                    let (pl_m, pr_m, pops_m, nsq_m) = obs.read_vec(minus, p.kappa);
                    let pl = 0.5 * (pl_p + pl_m);
                    let pr = 0.5 * (pr_p + pr_m);
                    let h = t_end - series.times.last().copied().unwrap_or(0.0);
                    cum_l += 0.5 * (prev_flux.1 + pl) * h;
                    cum_r += 0.5 * (prev_flux.2 + pr) * h;
                    prev_flux = (t_end, pl, pr);
                    let mut pops = [0.0f64; 6];
                    for i in 0..6 {
                        pops[i] = 0.5 * (pops_p[i] + pops_m[i]);
                    }
                    pops[AtomicLevel::G0.index()] += cum_l + cum_r - cum_at_handoff;
                    series.push(t_end, pl, pr, pops, 0.5 * (nsq_p + nsq_m));

                    trace_times.push(t_end);
                    trace_c0_plus.push(plus[idx_c0_r]);
                    trace_c0_minus.push(minus[idx_c0_l]);
                    trace_norm_plus.push(nsq_p);
                    trace_norm_minus.push(nsq_m);
                    trace_flux_plus.push(pl_p + pr_p);
                    trace_flux_minus.push(pl_m + pr_m);
                }
            }
        }
    }

    if branches.is_none() {
        // the pump never fired inside the horizon; park empty branch traces
        trace_times.push(p.t_final);
        trace_c0_plus.push(zero);
        trace_c0_minus.push(zero);
        trace_norm_plus.push(norm_sq(&psi));
        trace_norm_minus.push(norm_sq(&psi));
        trace_flux_plus.push(0.0);
        trace_flux_minus.push(0.0);
    }

    let integrate = |flux: &[f64]| {
        let mut total = 0.0;
        for k in 1..trace_times.len() {
            total += 0.5 * (flux[k - 1] + flux[k]) * (trace_times[k] - trace_times[k - 1]);
        }
        total
    };
    let emission_plus = integrate(&trace_flux_plus);
    let emission_minus = integrate(&trace_flux_minus);
    let branch_l_first = BranchTrace {
        first: Mode::L,
        second: Mode::R,
        lineage: lineage_l_first,
        times: trace_times.clone(),
        c0: trace_c0_plus,
        norm_sq: trace_norm_plus,
        emission_prob: emission_plus,
    };
    let branch_r_first = BranchTrace {
        first: Mode::R,
        second: Mode::L,
        lineage: lineage_r_first,
        times: trace_times,
        c0: trace_c0_minus,
        norm_sq: trace_norm_minus,
        emission_prob: emission_minus,
    };

    Ok(EffectiveRun {
        series,
        truncated_weight,
        branch_r_first,
        branch_l_first,
    })
}
