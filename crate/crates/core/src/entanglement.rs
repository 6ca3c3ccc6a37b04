//! Two-photon polarization state assembly and EPR fidelity.
//!
//! Each ground-state branch of the protocol emits its two photons in a fixed
//! polarization order: the branch whose first photon is right-circular emits
//! a left-circular second photon (g_{-1} → e_{-1} → g_0 radiates into a_L)
//! and vice versa. Reducing each branch to a single complex amplitude — the
//! stage-1 lineage phase times the square root of its second-photon emission
//! probability times the phase of its photon wavepacket — leaves a two-photon
//! polarization state α|R⟩₁|L⟩₂ + β|L⟩₁|R⟩₂ whose overlap with the singlet
//! (|L⟩₁|R⟩₂ − |R⟩₁|L⟩₂)/√2 is the figure of merit.
//!
//! The reduction to one amplitude per branch is meaningful only when the two
//! branches' photon wavepackets are indistinguishable in time, so the pair
//! assembly insists on a near-unit temporal overlap.

use num_complex::Complex64 as C64;

use crate::dynamics::{hamiltonian, Params};
use crate::effective::VecRk4;
use crate::error::{Error, Result};
use crate::hilbert::{AtomicLevel, HilbertSpace, Mode};
use crate::master::SparseOp;
use crate::series::sample_times;

/// Per-branch emission record produced by the effective or analytic solvers.
#[derive(Clone, Debug)]
pub struct BranchTrace {
    /// Polarization of the branch's first photon.
    pub first: Mode,
    /// Polarization of its second photon.
    pub second: Mode,
    /// Unit-modulus stage-1 amplitude phase inherited by the branch; the two
    /// branches carry opposite signs (c_{+1} = −c_{-1}).
    pub lineage: C64,
    /// Sample times covering the pump and decay stages.
    pub times: Vec<f64>,
    /// Second-photon mode amplitude c_0(t) along `times`.
    pub c0: Vec<C64>,
    /// Squared norm of the surviving branch state along `times`.
    pub norm_sq: Vec<f64>,
    /// Branch emission probability ∫ flux dt over `times`.
    pub emission_prob: f64,
}

/// Two-photon polarization amplitudes; `amps[i][j]` is the coefficient of
/// |i⟩₁|j⟩₂ with index 0 = L, 1 = R.
#[derive(Clone, Copy, Debug)]
pub struct PairState {
    pub amps: [[C64; 2]; 2],
}

impl PairState {
    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().flatten().map(|a| a.norm_sqr()).sum()
    }

    /// Amplitude of |first⟩₁|second⟩₂.
    pub fn amp(&self, first: Mode, second: Mode) -> C64 {
        self.amps[mode_index(first)][mode_index(second)]
    }
}

fn mode_index(m: Mode) -> usize {
    match m {
        Mode::L => 0,
        Mode::R => 1,
    }
}

/// Build the pair state α|R⟩₁|L⟩₂ + β|L⟩₁|R⟩₂ from the two reduced branch
/// amplitudes. Errors when both amplitudes vanish.
pub fn assemble_pair_state(amp_r_first: C64, amp_l_first: C64) -> Result<PairState> {
    if amp_r_first.norm() == 0.0 && amp_l_first.norm() == 0.0 {
        return Err(Error::UndefinedPairState(
            "both branch amplitudes vanish".into(),
        ));
    }
    let zero = C64::new(0.0, 0.0);
    Ok(PairState {
        amps: [[zero, amp_l_first], [amp_r_first, zero]],
    })
}

/// Fidelity F = |⟨EPR|ψ⟩|² / ⟨ψ|ψ⟩ with |EPR⟩ = (|L⟩₁|R⟩₂ − |R⟩₁|L⟩₂)/√2.
///
/// For a state α|R⟩₁|L⟩₂ + β|L⟩₁|R⟩₂ this reduces to
/// |α − β|² / [2(|α|² + |β|²)]. Errors on a zero-norm state.
pub fn fidelity_epr(state: &PairState) -> Result<f64> {
    let norm_sq = state.norm_sq();
    if norm_sq == 0.0 {
        return Err(Error::UndefinedPairState("zero-norm pair state".into()));
    }
    let overlap = state.amp(Mode::L, Mode::R) - state.amp(Mode::R, Mode::L);
    Ok(overlap.norm_sqr() / (2.0 * norm_sq))
}

/// Normalized temporal overlap |∫ a*(t) b(t) dt|² / (∫|a|² ∫|b|²) of two
/// wavepacket envelopes on a shared grid.
pub fn temporal_overlap(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len(), "envelopes must share the grid");
    let cross: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    cross.norm_sqr() / (na * nb)
}

/// Reduce the two branch traces to the pair state and its EPR fidelity.
///
/// Each branch amplitude is lineage × √(emission probability) × the phase of
/// c_0 at the shared peak-emission sample. Returns the pair state and the
/// branch temporal overlap; errors if the branches' wavepackets are
/// distinguishable (overlap below 0.999), since then a single polarization
/// amplitude per branch does not describe the emitted light.
pub fn pair_from_branches(
    r_first: &BranchTrace,
    l_first: &BranchTrace,
) -> Result<(PairState, f64)> {
    if r_first.first != Mode::R || l_first.first != Mode::L {
        return Err(Error::UndefinedPairState(
            "branch traces are not an R-first / L-first pair".into(),
        ));
    }
    if r_first.times.len() != l_first.times.len() {
        return Err(Error::UndefinedPairState(
            "branch traces use different grids".into(),
        ));
    }
    let overlap = temporal_overlap(&r_first.c0, &l_first.c0);
    if overlap < 0.999 {
        return Err(Error::UndefinedPairState(format!(
            "branch wavepackets are distinguishable (overlap {overlap:.6})"
        )));
    }
    // shared reference sample: peak emission of the R-first branch
    let k = r_first
        .c0
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.norm().partial_cmp(&b.norm()).unwrap())
        .map(|(k, _)| k)
        .unwrap_or(0);
    let alpha = r_first.lineage * r_first.emission_prob.sqrt() * phase_of(r_first.c0[k]);
    let beta = l_first.lineage * l_first.emission_prob.sqrt() * phase_of(l_first.c0[k]);
    let state = assemble_pair_state(alpha, beta)?;
    Ok((state, overlap))
}

fn phase_of(z: C64) -> C64 {
    let n = z.norm();
    if n == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        z / n
    }
}

/// Witness of the two-path cancellation protecting |g₀⟩.
///
/// With dissipation switched off (γ = κ = 0) and the pump held on for the
/// whole run, the two cavity-assisted routes back into |g₀⟩ carry opposite
/// signs from the spin couplings and cancel exactly, so its population stays
/// pinned at zero no matter how hard the system is driven. Returns the sample
/// times and the |g₀⟩ population at each; errors unless the run is configured
/// as a closed system with an always-on pump.
pub fn interference_check(space: &HilbertSpace, p: &Params) -> Result<(Vec<f64>, Vec<f64>)> {
    if p.gamma != 0.0 || p.kappa != 0.0 {
        return Err(Error::Domain(
            "the interference witness requires a closed system (γ = κ = 0)".into(),
        ));
    }
    let eps = 1e-9 * p.t_final.max(1.0);
    if p.t1 > eps || p.t2 < p.t_final - eps {
        return Err(Error::Domain(
            "the interference witness requires the pump on over the whole run".into(),
        ));
    }
    let d = space.dim();
    let op = SparseOp::from_dense(&hamiltonian(space, p, 0.5 * p.t_final));
    let g0_indices: Vec<usize> = (0..d)
        .filter(|&k| space.decode(k).is_ok_and(|(a, _, _)| a == AtomicLevel::G0))
        .collect();

    let mut psi = vec![C64::new(0.0, 0.0); d];
    psi[space.encode(AtomicLevel::E0, 0, 0)?] = C64::new(1.0, 0.0);
    let mut rk4 = VecRk4::new(d);
    let pop_g0 = |psi: &[C64]| -> f64 { g0_indices.iter().map(|&k| psi[k].norm_sqr()).sum() };

    let times = sample_times(p.dt, p.sample_every, p.t_final);
    let mut pops = Vec::with_capacity(times.len());
    pops.push(pop_g0(&psi));
    for _ in 1..times.len() {
        for _ in 0..p.sample_every {
            rk4.step(&op, &mut psi, p.dt);
        }
        pops.push(pop_g0(&psi));
    }
    Ok((times, pops))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn singlet_has_unit_fidelity() {
        let state = assemble_pair_state(c(1.0, 0.0), c(-1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(fidelity_epr(&state).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn single_branch_gives_half() {
        let state = assemble_pair_state(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(fidelity_epr(&state).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn triplet_combination_gives_zero() {
        let state = assemble_pair_state(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(fidelity_epr(&state).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(assemble_pair_state(c(0.0, 0.0), c(0.0, 0.0)).is_err());
        let zero = PairState {
            amps: [[c(0.0, 0.0); 2]; 2],
        };
        assert!(fidelity_epr(&zero).is_err());
    }

    proptest! {
        #[test]
        fn fidelity_bounded_and_phase_invariant(
            ar in -2.0f64..2.0, ai in -2.0f64..2.0,
            br in -2.0f64..2.0, bi in -2.0f64..2.0,
            phi in 0.0f64..std::f64::consts::TAU,
        ) {
            let alpha = c(ar, ai);
            let beta = c(br, bi);
            prop_assume!(alpha.norm() + beta.norm() > 1e-9);
            let f = fidelity_epr(&assemble_pair_state(alpha, beta).unwrap()).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&f));

            // a global phase changes nothing
            let rot = C64::from_polar(1.0, phi);
            let g = fidelity_epr(&assemble_pair_state(alpha * rot, beta * rot).unwrap()).unwrap();
            prop_assert!((f - g).abs() < 1e-12);

            // swapping the branches leaves |α − β| alone
            let h = fidelity_epr(&assemble_pair_state(beta, alpha).unwrap()).unwrap();
            prop_assert!((f - h).abs() < 1e-12);
        }
    }

    #[test]
    fn temporal_overlap_detects_distinguishability() {
        let grid: Vec<f64> = (0..100).map(|k| k as f64 * 0.1).collect();
        let a: Vec<C64> = grid
            .iter()
            .map(|t| c((-0.5 * (t - 3.0).powi(2)).exp(), 0.0))
            .collect();
        let shifted: Vec<C64> = grid
            .iter()
            .map(|t| c((-0.5 * (t - 7.0).powi(2)).exp(), 0.0))
            .collect();
        assert_abs_diff_eq!(temporal_overlap(&a, &a), 1.0, epsilon = 1e-12);
        assert!(temporal_overlap(&a, &shifted) < 1e-3);
        // a pure phase on one envelope changes nothing
        let rotated: Vec<C64> = a.iter().map(|x| x * C64::from_polar(1.0, 1.1)).collect();
        assert_abs_diff_eq!(temporal_overlap(&a, &rotated), 1.0, epsilon = 1e-12);
    }

    fn ideal_branch(first: Mode, sign: f64) -> BranchTrace {
        let times: Vec<f64> = (0..50).map(|k| 14.0 + k as f64 * 0.1).collect();
        let c0: Vec<C64> = times
            .iter()
            .map(|t| c((-0.5 * (t - 16.0).powi(2)).exp(), 0.0))
            .collect();
        BranchTrace {
            first,
            second: if first == Mode::R { Mode::L } else { Mode::R },
            lineage: c(sign, 0.0),
            times,
            c0,
            norm_sq: vec![1.0; 50],
            emission_prob: 0.99,
        }
    }

    #[test]
    fn mirror_branches_assemble_into_singlet() {
        let r_first = ideal_branch(Mode::R, 1.0);
        let l_first = ideal_branch(Mode::L, -1.0);
        let (state, overlap) = pair_from_branches(&r_first, &l_first).unwrap();
        assert!(overlap > 0.999_999);
        assert_abs_diff_eq!(fidelity_epr(&state).unwrap(), 1.0, epsilon = 1e-12);
        // only the cross-polarized amplitudes are populated
        assert_eq!(state.amp(Mode::L, Mode::L).norm(), 0.0);
        assert_eq!(state.amp(Mode::R, Mode::R).norm(), 0.0);
    }

    #[test]
    fn distinguishable_branches_are_rejected() {
        let r_first = ideal_branch(Mode::R, 1.0);
        let mut l_first = ideal_branch(Mode::L, -1.0);
        for (k, amp) in l_first.c0.iter_mut().enumerate() {
            // delay the mirror wavepacket far beyond its width
            *amp = c((-0.5 * (l_first.times[k] - 18.5).powi(2)).exp(), 0.0);
        }
        assert!(pair_from_branches(&r_first, &l_first).is_err());
    }

    #[test]
    fn swapped_roles_are_rejected() {
        let r_first = ideal_branch(Mode::R, 1.0);
        let l_first = ideal_branch(Mode::L, -1.0);
        assert!(pair_from_branches(&l_first, &r_first).is_err());
    }

    fn closed_pump_params() -> Params {
        Params {
            gamma: 0.0,
            kappa: 0.0,
            t1: 0.0,
            t2: 50.0,
            t_final: 50.0,
            ..Params::default()
        }
    }

    #[test]
    fn g0_stays_dark_under_the_full_drive() {
        let p = closed_pump_params();
        let space = HilbertSpace::new(p.n_max);
        let (times, pops) = interference_check(&space, &p).unwrap();
        assert_eq!(times.len(), pops.len());
        assert!((times.last().unwrap() - 50.0).abs() < 1e-9);
        let max = pops.iter().fold(0.0f64, |a, &b| a.max(b));
        assert!(
            max <= 1e-10,
            "two-path cancellation violated: max pop {max:.3e}"
        );
    }

    #[test]
    fn interference_witness_rejects_misconfiguration() {
        let space = HilbertSpace::new(1);
        let dissipative = Params {
            kappa: 1.2,
            ..closed_pump_params()
        };
        assert!(interference_check(&space, &dissipative).is_err());
        let pump_gap = Params {
            t2: 30.0,
            ..closed_pump_params()
        };
        assert!(interference_check(&space, &pump_gap).is_err());
    }

    #[test]
    fn flipping_one_spin_coupling_breaks_the_cancellation() {
        use crate::dynamics::hamiltonian;
        use crate::hilbert::{annihilation, level_transition};

        let p = Params {
            t_final: 20.0,
            t2: 20.0,
            ..closed_pump_params()
        };
        let space = HilbertSpace::new(p.n_max);
        let d = space.dim();
        // flip the sign of the |e+1⟩⟨g0| a_R coupling: its matrix element is
        // −g/√2, so adding twice its magnitude turns it into +g/√2
        let flip = level_transition(&space, AtomicLevel::Ep1, AtomicLevel::G0)
            * annihilation(&space, Mode::R);
        let strength = 2.0 * p.g / std::f64::consts::SQRT_2;
        let h_mut =
            hamiltonian(&space, &p, 10.0) + (&flip + flip.adjoint()) * C64::new(strength, 0.0);

        // dense reference propagation, independent of the production stepper
        let mut psi = crate::hilbert::basis_state(&space, AtomicLevel::E0, 0, 0).unwrap();
        let minus_i = C64::new(0.0, -1.0);
        let f = |v: &crate::CVec| (&h_mut * v) * minus_i;
        let h_step = 1e-3;
        let mut max_g0 = 0.0f64;
        let g0: Vec<usize> = (0..d)
            .filter(|&k| space.decode(k).unwrap().0 == AtomicLevel::G0)
            .collect();
        for step in 0..20_000 {
            let k1 = f(&psi);
            let k2 = f(&(&psi + &k1 * C64::new(0.5 * h_step, 0.0)));
            let k3 = f(&(&psi + &k2 * C64::new(0.5 * h_step, 0.0)));
            let k4 = f(&(&psi + &k3 * C64::new(h_step, 0.0)));
            psi += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4)
                * C64::new(h_step / 6.0, 0.0);
            if step % 100 == 0 {
                let pop: f64 = g0.iter().map(|&k| psi[k].norm_sqr()).sum();
                max_g0 = max_g0.max(pop);
            }
        }
        assert!(
            max_g0 > 0.1,
            "sign-flipped coupling should repopulate g0, got max {max_g0:.3e}"
        );
    }
}
