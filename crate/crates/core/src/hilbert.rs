//! Basis bookkeeping and operator builders for one F = 1 → F' = 1 atom
//! coupled to the two circular-polarization modes of a cavity.
//!
//! A basis state is |atom⟩ ⊗ |n_L⟩ ⊗ |n_R⟩ with the atomic index slowest and
//! n_R fastest:
//!
//! ```text
//! index = atom · (n_max+1)² + n_L · (n_max+1) + n_R
//! ```
//!
//! The six atomic levels are ordered g_{-1}, g_0, g_{+1}, e_{-1}, e_0, e_{+1}.
//! Dipole transition weights use the Condon–Shortley 1 ⊗ 1 → 1 Clebsch–Gordan
//! coefficients, so the q = 0 transition out of m_F = 0 is forbidden — the
//! selection-rule structure the whole protocol rests on.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::{CMat, CVec};

/// The six internal levels, in basis order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AtomicLevel {
    Gm1,
    G0,
    Gp1,
    Em1,
    E0,
    Ep1,
}

impl AtomicLevel {
    pub const ALL: [AtomicLevel; 6] = [
        AtomicLevel::Gm1,
        AtomicLevel::G0,
        AtomicLevel::Gp1,
        AtomicLevel::Em1,
        AtomicLevel::E0,
        AtomicLevel::Ep1,
    ];

    /// Position of the level in the basis ordering.
    pub fn index(self) -> usize {
        match self {
            AtomicLevel::Gm1 => 0,
            AtomicLevel::G0 => 1,
            AtomicLevel::Gp1 => 2,
            AtomicLevel::Em1 => 3,
            AtomicLevel::E0 => 4,
            AtomicLevel::Ep1 => 5,
        }
    }

    /// Magnetic quantum number m_F.
    pub fn m_f(self) -> i32 {
        match self {
            AtomicLevel::Gm1 | AtomicLevel::Em1 => -1,
            AtomicLevel::G0 | AtomicLevel::E0 => 0,
            AtomicLevel::Gp1 | AtomicLevel::Ep1 => 1,
        }
    }

    pub fn is_excited(self) -> bool {
        self.index() >= 3
    }

    /// Ground level with the given m_F.
    pub fn ground(m_f: i32) -> Result<Self> {
        match m_f {
            -1 => Ok(AtomicLevel::Gm1),
            0 => Ok(AtomicLevel::G0),
            1 => Ok(AtomicLevel::Gp1),
            _ => Err(Error::Domain(format!("no ground level with m_F = {m_f}"))),
        }
    }

    /// Excited level with the given m_F.
    pub fn excited(m_f: i32) -> Result<Self> {
        match m_f {
            -1 => Ok(AtomicLevel::Em1),
            0 => Ok(AtomicLevel::E0),
            1 => Ok(AtomicLevel::Ep1),
            _ => Err(Error::Domain(format!("no excited level with m_F = {m_f}"))),
        }
    }

    fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::Domain(format!("atomic level index {i} out of range")))
    }
}

/// Circular polarization label of a cavity mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    L,
    R,
}

/// Truncated atom ⊗ two-mode Fock space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HilbertSpace {
    n_max: usize,
}

impl HilbertSpace {
    pub fn new(n_max: usize) -> Self {
        HilbertSpace { n_max }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Photon-number states per mode, n_max + 1.
    pub fn fock_dim(&self) -> usize {
        self.n_max + 1
    }

    /// Total dimension 6 · (n_max + 1)².
    pub fn dim(&self) -> usize {
        6 * self.fock_dim() * self.fock_dim()
    }

    /// Flat index of |level, n_L, n_R⟩.
    pub fn encode(&self, level: AtomicLevel, n_l: usize, n_r: usize) -> Result<usize> {
        if n_l > self.n_max || n_r > self.n_max {
            return Err(Error::Domain(format!(
                "photon numbers ({n_l}, {n_r}) exceed n_max = {}",
                self.n_max
            )));
        }
        let f = self.fock_dim();
        Ok(level.index() * f * f + n_l * f + n_r)
    }

    /// Inverse of [`encode`](Self::encode).
    pub fn decode(&self, index: usize) -> Result<(AtomicLevel, usize, usize)> {
        if index >= self.dim() {
            return Err(Error::Domain(format!(
                "basis index {index} out of range for dim {}",
                self.dim()
            )));
        }
        let f = self.fock_dim();
        Ok((
            AtomicLevel::from_index(index / (f * f))?,
            (index / f) % f,
            index % f,
        ))
    }

    /// Photon number of basis state `index` in the given mode.
    pub fn photon_number(&self, index: usize, mode: Mode) -> usize {
        let f = self.fock_dim();
        match mode {
            Mode::L => (index / f) % f,
            Mode::R => index % f,
        }
    }
}

/// Clebsch–Gordan coefficient ⟨F'=1, m_F + q | F=1, m_F; 1, q⟩ in the
/// Condon–Shortley convention.
///
/// Returns 0 when the selection rule m_F' = m_F + q fails (including
/// |m_F + q| > 1) and a domain error when any argument is outside {-1, 0, 1}.
pub fn clebsch_gordan(m_f: i32, q: i32, m_f_to: i32) -> Result<f64> {
    if m_f.abs() > 1 || q.abs() > 1 || m_f_to.abs() > 1 {
        return Err(Error::Domain(format!(
            "quantum numbers (m_F = {m_f}, q = {q}, m_F' = {m_f_to}) out of range for F = F' = 1"
        )));
    }
    if m_f_to != m_f + q {
        return Ok(0.0);
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    Ok(match (m_f, q) {
        (0, 0) => 0.0, // the forbidden π transition at the heart of the scheme
        (1, 0) | (1, -1) | (0, -1) => inv_sqrt2,
        (-1, 0) | (-1, 1) | (0, 1) => -inv_sqrt2,
        _ => unreachable!("selection rule already enforced"),
    })
}

/// Annihilation operator of one cavity mode, identity on the rest.
pub fn annihilation(space: &HilbertSpace, mode: Mode) -> CMat {
    let d = space.dim();
    let mut a = CMat::zeros(d, d);
    for col in 0..d {
        let (level, n_l, n_r) = space.decode(col).expect("col < dim");
        let (n, row) = match mode {
            Mode::L if n_l > 0 => (n_l, space.encode(level, n_l - 1, n_r)),
            Mode::R if n_r > 0 => (n_r, space.encode(level, n_l, n_r - 1)),
            _ => continue,
        };
        a[(row.expect("in range"), col)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Photon-number operator a†a of one mode.
pub fn number_operator(space: &HilbertSpace, mode: Mode) -> CMat {
    let d = space.dim();
    let mut n = CMat::zeros(d, d);
    for i in 0..d {
        n[(i, i)] = C64::new(space.photon_number(i, mode) as f64, 0.0);
    }
    n
}

/// Atomic raising operator A†_{1q} = Σ_m CG(m, q, m+q) |e_{m+q}⟩⟨g_m| ⊗ 1.
///
/// The polarization index q must be -1, 0, or +1.
pub fn atomic_raising(space: &HilbertSpace, q: i32) -> Result<CMat> {
    if q.abs() > 1 {
        return Err(Error::Domain(format!("polarization q = {q} out of range")));
    }
    let d = space.dim();
    let mut op = CMat::zeros(d, d);
    for m in -1..=1 {
        if (m + q).abs() > 1 {
            continue;
        }
        let w = clebsch_gordan(m, q, m + q)?;
        if w == 0.0 {
            continue;
        }
        let from = AtomicLevel::ground(m)?;
        let to = AtomicLevel::excited(m + q)?;
        for n_l in 0..space.fock_dim() {
            for n_r in 0..space.fock_dim() {
                let row = space.encode(to, n_l, n_r)?;
                let col = space.encode(from, n_l, n_r)?;
                op[(row, col)] = C64::new(w, 0.0);
            }
        }
    }
    Ok(op)
}

/// |to⟩⟨from| on the atom, identity on the cavity modes.
pub fn level_transition(space: &HilbertSpace, to: AtomicLevel, from: AtomicLevel) -> CMat {
    let d = space.dim();
    let mut op = CMat::zeros(d, d);
    for n_l in 0..space.fock_dim() {
        for n_r in 0..space.fock_dim() {
            let row = space.encode(to, n_l, n_r).expect("in range");
            let col = space.encode(from, n_l, n_r).expect("in range");
            op[(row, col)] = C64::new(1.0, 0.0);
        }
    }
    op
}

/// Projector onto one atomic level (any photon content).
pub fn atomic_projector(space: &HilbertSpace, level: AtomicLevel) -> CMat {
    level_transition(space, level, level)
}

/// Unit basis vector |level, n_L, n_R⟩.
pub fn basis_state(
    space: &HilbertSpace,
    level: AtomicLevel,
    n_l: usize,
    n_r: usize,
) -> Result<CVec> {
    let mut v = CVec::zeros(space.dim());
    v[space.encode(level, n_l, n_r)?] = C64::new(1.0, 0.0);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Independent oracle: the closed-form Racah sum for ⟨j1 m1; j2 m2 | j3 m3⟩
    /// with integer angular momenta. Written from the general formula, not
    /// from the table under test.
    fn racah_cg(j1: i64, m1: i64, j2: i64, m2: i64, j3: i64, m3: i64) -> f64 {
        fn fact(n: i64) -> f64 {
            assert!(n >= 0, "factorial of negative argument");
            (1..=n).map(|k| k as f64).product()
        }
        if m3 != m1 + m2 || m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
            return 0.0;
        }
        if j3 > j1 + j2 || j3 < (j1 - j2).abs() {
            return 0.0;
        }
        let pre =
            ((2 * j3 + 1) as f64 * fact(j1 + j2 - j3) * fact(j1 - j2 + j3) * fact(-j1 + j2 + j3)
                / fact(j1 + j2 + j3 + 1))
            .sqrt();
        let num = (fact(j3 + m3)
            * fact(j3 - m3)
            * fact(j1 - m1)
            * fact(j1 + m1)
            * fact(j2 - m2)
            * fact(j2 + m2))
        .sqrt();
        let k_min = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
        let k_max = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
        let mut sum = 0.0;
        for k in k_min..=k_max {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign
                / (fact(k)
                    * fact(j1 + j2 - j3 - k)
                    * fact(j1 - m1 - k)
                    * fact(j2 + m2 - k)
                    * fact(j3 - j2 + m1 + k)
                    * fact(j3 - j1 - m2 + k));
        }
        pre * num * sum
    }

    #[test]
    fn cg_table_matches_racah_formula_everywhere() {
        for m in -1..=1 {
            for q in -1..=1 {
                for m_to in -1..=1 {
                    let table = clebsch_gordan(m, q, m_to).unwrap();
                    let oracle = racah_cg(1, m as i64, 1, q as i64, 1, m_to as i64);
                    assert_abs_diff_eq!(table, oracle, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn cg_frozen_values() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // the forbidden transition and the three signs the interference relies on
        assert_eq!(clebsch_gordan(0, 0, 0).unwrap(), 0.0);
        assert_abs_diff_eq!(clebsch_gordan(0, 1, 1).unwrap(), -s, epsilon = 1e-15);
        assert_abs_diff_eq!(clebsch_gordan(1, 0, 1).unwrap(), s, epsilon = 1e-15);
        assert_abs_diff_eq!(clebsch_gordan(-1, 1, 0).unwrap(), -s, epsilon = 1e-15);
    }

    #[test]
    fn cg_selection_rules_and_domain() {
        assert_eq!(clebsch_gordan(1, 1, -1).unwrap(), 0.0, "m' != m + q");
        assert_eq!(clebsch_gordan(1, 1, 0).unwrap(), 0.0, "m' != m + q");
        assert!(clebsch_gordan(2, 0, 0).is_err(), "m_F out of range");
        assert!(clebsch_gordan(0, -2, 0).is_err(), "q out of range");
    }

    #[test]
    fn cg_completeness_per_ground_level() {
        // Σ_q |CG(m, q, m+q)|² = 1 for every ground sublevel: each excited
        // level decays at the full rate γ.
        for m in -1i32..=1 {
            let total: f64 = (-1i32..=1)
                .filter(|q| (m + q).abs() <= 1)
                .map(|q| clebsch_gordan(m, q, m + q).unwrap().powi(2))
                .sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn encode_decode_roundtrip() {
        for n_max in 0..=3 {
            let space = HilbertSpace::new(n_max);
            assert_eq!(space.dim(), 6 * (n_max + 1) * (n_max + 1));
            for level in AtomicLevel::ALL {
                for n_l in 0..=n_max {
                    for n_r in 0..=n_max {
                        let idx = space.encode(level, n_l, n_r).unwrap();
                        assert_eq!(space.decode(idx).unwrap(), (level, n_l, n_r));
                        assert_eq!(space.photon_number(idx, Mode::L), n_l);
                        assert_eq!(space.photon_number(idx, Mode::R), n_r);
                    }
                }
            }
        }
    }

    #[test]
    fn encode_rejects_overfull_modes() {
        let space = HilbertSpace::new(1);
        assert!(space.encode(AtomicLevel::G0, 2, 0).is_err());
        assert!(space.decode(space.dim()).is_err());
    }

    #[test]
    fn basis_ordering_is_atom_major_then_nl_then_nr() {
        let space = HilbertSpace::new(1);
        assert_eq!(space.encode(AtomicLevel::Gm1, 0, 0).unwrap(), 0);
        assert_eq!(space.encode(AtomicLevel::Gm1, 0, 1).unwrap(), 1);
        assert_eq!(space.encode(AtomicLevel::Gm1, 1, 0).unwrap(), 2);
        assert_eq!(space.encode(AtomicLevel::G0, 0, 0).unwrap(), 4);
        assert_eq!(space.encode(AtomicLevel::Ep1, 1, 1).unwrap(), 23);
    }

    #[test]
    fn annihilation_matrix_elements() {
        let space = HilbertSpace::new(2);
        let a = annihilation(&space, Mode::L);
        // ⟨n-1|a|n⟩ = √n, all other entries zero
        for col in 0..space.dim() {
            let (level, n_l, n_r) = space.decode(col).unwrap();
            for row in 0..space.dim() {
                let expect = if n_l > 0 && row == space.encode(level, n_l - 1, n_r).unwrap() {
                    (n_l as f64).sqrt()
                } else {
                    0.0
                };
                assert_abs_diff_eq!(a[(row, col)].re, expect, epsilon = 1e-15);
                assert_eq!(a[(row, col)].im, 0.0);
            }
        }
    }

    #[test]
    fn annihilation_commutator_below_truncation() {
        let space = HilbertSpace::new(2);
        for mode in [Mode::L, Mode::R] {
            let a = annihilation(&space, mode);
            let comm = &a * a.adjoint() - a.adjoint() * &a;
            // [a, a†] = 1 on every state that the truncation does not clip
            for i in 0..space.dim() {
                if space.photon_number(i, mode) < space.n_max() {
                    assert_abs_diff_eq!(comm[(i, i)].re, 1.0, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn number_operator_matches_annihilation() {
        let space = HilbertSpace::new(2);
        for mode in [Mode::L, Mode::R] {
            let a = annihilation(&space, mode);
            let n = number_operator(&space, mode);
            assert!((a.adjoint() * &a - n).norm() < 1e-14);
        }
    }

    #[test]
    fn atomic_raising_structure() {
        let space = HilbertSpace::new(1);
        for q in -1..=1 {
            let op = atomic_raising(&space, q).unwrap();
            for row in 0..space.dim() {
                for col in 0..space.dim() {
                    let v = op[(row, col)];
                    if v == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let (to, nl_to, nr_to) = space.decode(row).unwrap();
                    let (from, nl_from, nr_from) = space.decode(col).unwrap();
                    assert!(to.is_excited() && !from.is_excited());
                    assert_eq!(to.m_f(), from.m_f() + q, "Δm_F must equal q");
                    assert_eq!((nl_to, nr_to), (nl_from, nr_from), "photons untouched");
                    let cg = clebsch_gordan(from.m_f(), q, to.m_f()).unwrap();
                    assert_abs_diff_eq!(v.re, cg, epsilon = 1e-15);
                }
            }
        }
        assert!(atomic_raising(&space, 2).is_err());
    }

    #[test]
    fn pi_raising_has_two_elements_per_fock_block() {
        // A†_{10} couples g_{-1}->e_{-1} and g_{+1}->e_{+1}; g_0 -> e_0 is
        // forbidden, so each Fock block carries exactly two nonzeros.
        let space = HilbertSpace::new(1);
        let op = atomic_raising(&space, 0).unwrap();
        let nonzeros = op.iter().filter(|v| v.norm() > 0.0).count();
        assert_eq!(nonzeros, 2 * space.fock_dim() * space.fock_dim());
    }

    #[test]
    fn raising_adjoint_involution() {
        let space = HilbertSpace::new(1);
        let op = atomic_raising(&space, 1).unwrap();
        assert_eq!(op.adjoint().adjoint(), op);
    }

    #[test]
    fn projectors_resolve_identity() {
        let space = HilbertSpace::new(1);
        let mut sum = CMat::zeros(space.dim(), space.dim());
        for level in AtomicLevel::ALL {
            let p = atomic_projector(&space, level);
            assert!((&p * &p - &p).norm() < 1e-15, "projector idempotent");
            sum += p;
        }
        assert!((sum - CMat::identity(space.dim(), space.dim())).norm() < 1e-15);
    }

    #[test]
    fn operator_construction_is_deterministic() {
        let space = HilbertSpace::new(1);
        assert_eq!(
            atomic_raising(&space, 1).unwrap(),
            atomic_raising(&space, 1).unwrap()
        );
        assert_eq!(annihilation(&space, Mode::R), annihilation(&space, Mode::R));
    }

    #[test]
    fn basis_state_is_unit_and_correctly_placed() {
        let space = HilbertSpace::new(1);
        let v = basis_state(&space, AtomicLevel::E0, 0, 0).unwrap();
        assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-15);
        assert_eq!(v[space.encode(AtomicLevel::E0, 0, 0).unwrap()].re, 1.0);
        assert!(basis_state(&space, AtomicLevel::E0, 0, 5).is_err());
    }
}
