//! Density-matrix integration of the full dissipative model.
//!
//! The generator is
//!
//! ρ̇ = −i[H(t), ρ] + Σ_J ( J ρ J† − ½{J†J, ρ} )
//!
//! with the five jump operators √(2κ)a_L, √(2κ)a_R and √γ A_{1,q}. For
//! stepping, the anticommutator part is folded into the non-Hermitian
//! effective Hamiltonian E = H − (i/2)ΣJ†J so that
//! ρ̇ = −i(Eρ − ρE†) + ΣJρJ†, and each operator is applied in sparse triplet
//! form to the flat column-major state. H is constant inside each pulse
//! window and the step plan never straddles a window edge, so the three
//! window generators are built once.
//!
//! A dense reference implementation of the same right-hand side is exposed
//! as [`lindblad_rhs`] and the sparse path is tested against it.

use num_complex::Complex64 as C64;

use crate::dynamics::{effective_hamiltonian, hamiltonian, jump_operators, Params};
use crate::error::{Error, Result};
use crate::hilbert::{AtomicLevel, HilbertSpace};
use crate::series::TimeSeries;
use crate::stepper::{plan, Window};
use crate::CMat;

/// Trace defect beyond which the integration is declared divergent.
const TRACE_TOL: f64 = 1e-6;

/// Triplet form of an operator for cache-friendly left/right application.
pub(crate) struct SparseOp {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    pub(crate) fn from_dense(m: &CMat) -> Self {
        let dim = m.nrows();
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..dim {
                let v = m[(i, j)];
                if v.norm_sqr() > 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        SparseOp { dim, entries }
    }
}

/// out += scale · (op · x) on a state vector.
pub(crate) fn apply_vec_acc(op: &SparseOp, x: &[C64], scale: C64, out: &mut [C64]) {
    for &(i, k, v) in &op.entries {
        out[i] += scale * v * x[k];
    }
}

/// out += scale · (op · x) on flat column-major matrices.
fn left_mul_acc(op: &SparseOp, x: &[C64], scale: C64, out: &mut [C64]) {
    let d = op.dim;
    for col in 0..d {
        let base = col * d;
        for &(i, k, v) in &op.entries {
            out[base + i] += scale * v * x[base + k];
        }
    }
}

/// out += scale · (x · op†): for each entry op[j, l], column j of the result
/// accumulates conj(v) times column l of x.
fn right_mul_adj_acc(op: &SparseOp, x: &[C64], scale: C64, out: &mut [C64]) {
    let d = op.dim;
    for &(j, l, v) in &op.entries {
        let w = scale * v.conj();
        let src = l * d;
        let dst = j * d;
        for i in 0..d {
            out[dst + i] += w * x[src + i];
        }
    }
}

/// Dense reference right-hand side of the master equation at time t.
pub fn lindblad_rhs(space: &HilbertSpace, p: &Params, t: f64, rho: &CMat) -> Result<CMat> {
    let d = space.dim();
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rho.nrows().max(rho.ncols()),
        });
    }
    let h = hamiltonian(space, p, t);
    let minus_i = C64::new(0.0, -1.0);
    let mut out = (&h * rho - rho * &h) * minus_i;
    for j in jump_operators(space, p) {
        let jdag = j.adjoint();
        let jj = &jdag * &j;
        out += &j * rho * &jdag;
        out -= (&jj * rho + rho * &jj) * C64::new(0.5, 0.0);
    }
    Ok(out)
}

/// Result of a full density-matrix run.
pub struct MasterRun {
    pub series: TimeSeries,
    /// State exactly at the pump switch-on.
    pub at_t1: Option<(f64, CMat)>,
    /// State exactly at the pump switch-off.
    pub at_t2: Option<(f64, CMat)>,
    /// Coarse checkpoints (roughly eleven across the run) for structural
    /// verification of the state itself.
    pub checkpoints: Vec<(f64, CMat)>,
    pub final_rho: CMat,
}

/// Diagonal observables extracted per sample without densifying anything.
pub(crate) struct DiagObservables {
    n_l: Vec<f64>,
    n_r: Vec<f64>,
    level: Vec<usize>,
}

impl DiagObservables {
    pub(crate) fn new(space: &HilbertSpace) -> Self {
        let d = space.dim();
        let mut n_l = vec![0.0; d];
        let mut n_r = vec![0.0; d];
        let mut level = vec![0usize; d];
        for idx in 0..d {
            let (a, nl, nr) = space.decode(idx).expect("index in range");
            n_l[idx] = nl as f64;
            n_r[idx] = nr as f64;
            level[idx] = a.index();
        }
        DiagObservables { n_l, n_r, level }
    }

    fn read(&self, rho: &[C64], d: usize, kappa: f64) -> (f64, f64, [f64; 6], f64) {
        let mut exp_l = 0.0;
        let mut exp_r = 0.0;
        let mut pops = [0.0f64; 6];
        let mut trace = 0.0;
        for k in 0..d {
            let q = rho[k * d + k].re;
            exp_l += self.n_l[k] * q;
            exp_r += self.n_r[k] * q;
            pops[self.level[k]] += q;
            trace += q;
        }
        (
            2.0 * kappa * exp_l,
            2.0 * kappa * exp_r,
            pops,
            (trace - 1.0).abs(),
        )
    }

    /// Same observables for a pure state: fluxes, level populations and the
    /// surviving norm².
    pub(crate) fn read_vec(&self, psi: &[C64], kappa: f64) -> (f64, f64, [f64; 6], f64) {
        let mut exp_l = 0.0;
        let mut exp_r = 0.0;
        let mut pops = [0.0f64; 6];
        let mut norm_sq = 0.0;
        for (k, amp) in psi.iter().enumerate() {
            let q = amp.norm_sqr();
            exp_l += self.n_l[k] * q;
            exp_r += self.n_r[k] * q;
            pops[self.level[k]] += q;
            norm_sq += q;
        }
        (2.0 * kappa * exp_l, 2.0 * kappa * exp_r, pops, norm_sq)
    }
}

/// Atomic-level populations of a density matrix, in basis order.
pub fn populations(space: &HilbertSpace, rho: &CMat) -> [f64; 6] {
    let mut pops = [0.0f64; 6];
    for idx in 0..space.dim() {
        let (a, _, _) = space.decode(idx).expect("index in range");
        pops[a.index()] += rho[(idx, idx)].re;
    }
    pops
}

fn to_dense(flat: &[C64], d: usize) -> CMat {
    CMat::from_column_slice(d, d, flat)
}

/// Integrate the master equation over [0, T] from the launch state
/// |e₀, 0, 0⟩ and record the sampled observables.
pub fn integrate_master(p: &Params) -> Result<MasterRun> {
    let space = HilbertSpace::new(p.n_max);
    let d = space.dim();
    let n2 = d * d;

    let window_ops: Vec<SparseOp> = [Window::BeforePump, Window::Pump, Window::AfterPump]
        .into_iter()
        .map(|w| SparseOp::from_dense(&effective_hamiltonian(&space, p, w.probe_time(p))))
        .collect();
    let window_index = |w: Window| match w {
        Window::BeforePump => 0usize,
        Window::Pump => 1,
        Window::AfterPump => 2,
    };
    let jumps: Vec<SparseOp> = jump_operators(&space, p)
        .iter()
        .map(SparseOp::from_dense)
        .collect();

    let zero = C64::new(0.0, 0.0);
    let mut rho = vec![zero; n2];
    let launch = space.encode(AtomicLevel::E0, 0, 0)?;
    rho[launch * d + launch] = C64::new(1.0, 0.0);

    let mut k1 = vec![zero; n2];
    let mut k2 = vec![zero; n2];
    let mut k3 = vec![zero; n2];
    let mut k4 = vec![zero; n2];
    let mut stage = vec![zero; n2];
    let mut tmp = vec![zero; n2];

    let rhs = |e: &SparseOp, x: &[C64], tmp: &mut [C64], out: &mut [C64]| {
        out.fill(zero);
        left_mul_acc(e, x, C64::new(0.0, -1.0), out);
        right_mul_adj_acc(e, x, C64::new(0.0, 1.0), out);
        for j in &jumps {
            tmp.fill(zero);
            left_mul_acc(j, x, C64::new(1.0, 0.0), tmp);
            right_mul_adj_acc(j, tmp, C64::new(1.0, 0.0), out);
        }
    };

    let obs = DiagObservables::new(&space);
    let steps = plan(p);
    let samples = steps.iter().filter(|s| s.sample.is_some()).count() + 1;
    let mut series = TimeSeries::with_capacity(samples);
    let (pl0, pr0, pops0, terr0) = obs.read(&rho, d, p.kappa);
    series.push(0.0, pl0, pr0, pops0, terr0);

    let cp_stride = p.t_final / 10.0;
    let mut next_cp = 0.0f64;
    let mut checkpoints: Vec<(f64, CMat)> = Vec::with_capacity(12);
    checkpoints.push((0.0, to_dense(&rho, d)));
    next_cp += cp_stride;

    let mut at_t1 = None;
    let mut at_t2 = None;

    for step in &steps {
        let e = &window_ops[window_index(step.window)];
        let h = step.h;
        rhs(e, &rho, &mut tmp, &mut k1);
        for i in 0..n2 {
            stage[i] = rho[i] + 0.5 * h * k1[i];
        }
        rhs(e, &stage, &mut tmp, &mut k2);
        for i in 0..n2 {
            stage[i] = rho[i] + 0.5 * h * k2[i];
        }
        rhs(e, &stage, &mut tmp, &mut k3);
        for i in 0..n2 {
            stage[i] = rho[i] + h * k3[i];
        }
        rhs(e, &stage, &mut tmp, &mut k4);
        let w = h / 6.0;
        for i in 0..n2 {
            rho[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t_end = step.t + step.h;

        let mut trace = 0.0;
        for k in 0..d {
            trace += rho[k * d + k].re;
        }
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::IntegrationDiverged {
                solver: "master",
                t: t_end,
                detail: format!("trace defect {:.3e}", (trace - 1.0).abs()),
            });
        }

        if step.at_t1 {
            at_t1 = Some((t_end, to_dense(&rho, d)));
        }
        if step.at_t2 {
            at_t2 = Some((t_end, to_dense(&rho, d)));
        }
        if step.sample.is_some() {
            let (pl, pr, pops, terr) = obs.read(&rho, d, p.kappa);
            series.push(t_end, pl, pr, pops, terr);
            if t_end >= next_cp - 1e-9 {
                checkpoints.push((t_end, to_dense(&rho, d)));
                while next_cp <= t_end + 1e-9 {
                    next_cp += cp_stride;
                }
            }
        }
    }

    let final_rho = to_dense(&rho, d);
    if checkpoints
        .last()
        .map(|(t, _)| (p.t_final - t) > 1e-6)
        .unwrap_or(true)
    {
        checkpoints.push((p.t_final, final_rho.clone()));
    }
    Ok(MasterRun {
        series,
        at_t1,
        at_t2,
        checkpoints,
        final_rho,
    })
}
