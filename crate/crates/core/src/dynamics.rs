//! Protocol parameters, pulse windows, and the generators of motion.
//!
//! In the rotating frame at the pump frequency (ħ = 1) the Hamiltonian is
//!
//! ```text
//! H(t) = -Δ Σ_q |e_q⟩⟨e_q|
//!      + [Ω(t) A†_{10} + h.c.]
//!      + g(t) (A†_{11} a_R + A†_{1,-1} a_L + h.c.)
//! ```
//!
//! with the cavity coupling g(t) on for 0 ≤ t ≤ T (atom inside the mode
//! waist) and the π-polarized pump Ω(t) on for t1 ≤ t ≤ t2. Both windows are
//! sharp; step edges count as inside. Dissipation enters either through the
//! Lindblad jump operators {√(2κ)a_L, √(2κ)a_R, √γ A_{1,-1}, √γ A_{1,0},
//! √γ A_{1,+1}} or, for the no-jump trajectory, through the non-Hermitian
//! effective Hamiltonian
//!
//! ```text
//! H_eff(t) = H(t) - iκ (a†_L a_L + a†_R a_R) - i(γ/2) Σ_q |e_q⟩⟨e_q| .
//! ```

use num_complex::Complex64 as C64;

use crate::hilbert::{
    annihilation, atomic_projector, atomic_raising, AtomicLevel, HilbertSpace, Mode,
};
use crate::CMat;

/// All protocol constants and numerical controls, dimensionless
/// (rates in units of the cavity coupling g, times in 1/g).
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    /// Detuning Δ of cavity and pump from the atomic resonance.
    pub delta: f64,
    /// Cavity vacuum Rabi coupling amplitude.
    pub g: f64,
    /// Pump Rabi amplitude.
    pub omega: f64,
    /// Atomic spontaneous-emission rate (full excited-state rate).
    pub gamma: f64,
    /// Cavity field decay rate; photon flux is 2κ⟨a†a⟩.
    pub kappa: f64,
    /// Pump switch-on time.
    pub t1: f64,
    /// Pump switch-off time.
    pub t2: f64,
    /// Atom exits the cavity at T; integration stops here.
    pub t_final: f64,
    /// Fock truncation per mode.
    pub n_max: usize,
    /// RK4 step.
    pub dt: f64,
    /// Observables are recorded every this many steps.
    pub sample_every: usize,
    /// Use κ|c₀|² for the analytic second-photon flux instead of the default
    /// 2κ|c₀|²; the default matches the numerically integrated flux 2κ⟨a†a⟩.
    pub second_photon_kappa_only: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            delta: 0.0,
            g: 1.0,
            omega: 1.2,
            gamma: 0.01,
            kappa: 1.2,
            t1: 14.0,
            t2: 16.0,
            t_final: 25.0,
            n_max: 1,
            dt: 1e-3,
            sample_every: 10,
            second_photon_kappa_only: false,
        }
    }
}

impl Params {
    /// Collect every violated constraint (empty means valid).
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut bad = Vec::new();
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                bad.push(msg.to_string());
            }
        };
        check(self.g >= 0.0, "g: must be >= 0");
        check(self.omega >= 0.0, "omega: must be >= 0");
        check(self.gamma >= 0.0, "gamma: must be >= 0");
        check(self.kappa >= 0.0, "kappa: must be >= 0");
        check(self.t1 > 0.0, "t1: must be > 0");
        check(self.t1 <= self.t2, "t1: must be <= t2");
        check(self.t2 <= self.t_final, "t2: must be <= T");
        check(self.t_final.is_finite(), "T: must be finite");
        check(self.n_max >= 1, "n_max: must be >= 1");
        check(self.dt > 0.0 && self.dt.is_finite(), "dt: must be > 0");
        check(self.sample_every >= 1, "sample_every: must be >= 1");
        if bad.is_empty() {
            Ok(())
        } else {
            Err(bad)
        }
    }

    /// Analytic second-photon flux prefactor, 2κ unless configured otherwise.
    pub fn second_rate_factor(&self) -> f64 {
        if self.second_photon_kappa_only {
            self.kappa
        } else {
            2.0 * self.kappa
        }
    }
}

/// Unit step with h(0) = 1.
fn step(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Cavity coupling profile g(t) = g · h(t) h(T - t).
pub fn coupling_g(p: &Params, t: f64) -> f64 {
    p.g * step(t) * step(p.t_final - t)
}

/// Pump profile Ω(t) = Ω · h(t - t1) h(t2 - t).
pub fn coupling_omega(p: &Params, t: f64) -> f64 {
    p.omega * step(t - p.t1) * step(p.t2 - t)
}

/// Hamiltonian at time t on the given space.
pub fn hamiltonian(space: &HilbertSpace, p: &Params, t: f64) -> CMat {
    let d = space.dim();
    let mut h = CMat::zeros(d, d);

    let excited = [AtomicLevel::Em1, AtomicLevel::E0, AtomicLevel::Ep1];
    if p.delta != 0.0 {
        for level in excited {
            h += atomic_projector(space, level) * C64::new(-p.delta, 0.0);
        }
    }

    let om = coupling_omega(p, t);
    if om != 0.0 {
        let a10 = atomic_raising(space, 0).expect("q = 0 valid");
        h += (&a10 + a10.adjoint()) * C64::new(om, 0.0);
    }

    let gt = coupling_g(p, t);
    if gt != 0.0 {
        let coupling = atomic_raising(space, 1).expect("q = 1 valid")
            * annihilation(space, Mode::R)
            + atomic_raising(space, -1).expect("q = -1 valid") * annihilation(space, Mode::L);
        h += (&coupling + coupling.adjoint()) * C64::new(gt, 0.0);
    }
    h
}

/// The five Lindblad jump operators, in fixed order:
/// √(2κ) a_L, √(2κ) a_R, √γ A_{1,-1}, √γ A_{1,0}, √γ A_{1,+1}.
pub fn jump_operators(space: &HilbertSpace, p: &Params) -> Vec<CMat> {
    let cavity = (2.0 * p.kappa).sqrt();
    let atomic = p.gamma.sqrt();
    let mut jumps = vec![
        annihilation(space, Mode::L) * C64::new(cavity, 0.0),
        annihilation(space, Mode::R) * C64::new(cavity, 0.0),
    ];
    for q in [-1, 0, 1] {
        let lowering = atomic_raising(space, q).expect("q valid").adjoint();
        jumps.push(lowering * C64::new(atomic, 0.0));
    }
    jumps
}

/// Non-Hermitian effective Hamiltonian of the no-jump trajectory.
pub fn effective_hamiltonian(space: &HilbertSpace, p: &Params, t: f64) -> CMat {
    let mut h = hamiltonian(space, p, t);
    let d = space.dim();
    for i in 0..d {
        let n_tot = space.photon_number(i, Mode::L) + space.photon_number(i, Mode::R);
        let mut decay = p.kappa * n_tot as f64;
        let (level, _, _) = space.decode(i).expect("index valid");
        if level.is_excited() {
            decay += 0.5 * p.gamma;
        }
        h[(i, i)] += C64::new(0.0, -decay);
    }
    h
}
