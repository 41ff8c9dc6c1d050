//! Five-term Hamiltonian of the association-dissociation model (RWA form).
//!
//! Each term is kept as a list of `(coefficient, monomial)` pairs so that the
//! same description drives both matrix assembly and reachability
//! enumeration.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{Atom, Basis, BasisState, Mode, Orbital, Spin, N_MODES};
use crate::operators::{
    occupied_projector, spin_exchange_monomial, vacant_projector, Elementary, Monomial,
    OperatorError, SparseOperator,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("assembled Hamiltonian is not Hermitian: max |H - H†| = {defect:e} (|H|max = {scale:e})")]
    NotHermitian { defect: f64, scale: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("invalid Hamiltonian parameter: {0}")]
    InvalidParams(String),
}

/// Light-matter coupling strengths, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub g_atom_up: f64,
    pub g_atom_down: f64,
    pub g_mol_up: f64,
    pub g_mol_down: f64,
    pub g_spin: f64,
    pub g_en: f64,
}

/// Tunnelling intensities graded by the Φ-orbital pattern, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tunnelling {
    /// both electrons in Φ₁
    pub zeta2: f64,
    /// one electron in Φ₁, one in Φ₀
    pub zeta1: f64,
    /// both in Φ₀
    pub zeta0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianParams {
    pub hbar: f64,
    /// Angular frequency per mode, photon register order.
    pub frequencies: [f64; N_MODES],
    pub couplings: Couplings,
    pub tunnelling: Tunnelling,
}

impl HamiltonianParams {
    pub fn frequency(&self, mode: Mode) -> f64 {
        self.frequencies[mode.index()]
    }

    pub fn validate(&self) -> Result<(), HamiltonianError> {
        let bad = |s: String| Err(HamiltonianError::InvalidParams(s));
        if !(self.hbar > 0.0) {
            return bad(format!("hbar must be positive, got {}", self.hbar));
        }
        for m in Mode::ALL {
            if !(self.frequency(m) > 0.0) {
                return bad(format!("frequency of {m} must be positive"));
            }
        }
        let c = &self.couplings;
        for (name, v) in [
            ("g_atom_up", c.g_atom_up),
            ("g_atom_down", c.g_atom_down),
            ("g_mol_up", c.g_mol_up),
            ("g_mol_down", c.g_mol_down),
            ("g_spin", c.g_spin),
            ("g_en", c.g_en),
            ("zeta2", self.tunnelling.zeta2),
            ("zeta1", self.tunnelling.zeta1),
            ("zeta0", self.tunnelling.zeta0),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        Ok(())
    }

    /// Same parameters with every coupling and tunnelling intensity zero.
    pub fn uncoupled(&self) -> HamiltonianParams {
        HamiltonianParams {
            couplings: Couplings {
                g_atom_up: 0.0,
                g_atom_down: 0.0,
                g_mol_up: 0.0,
                g_mol_down: 0.0,
                g_spin: 0.0,
                g_en: 0.0,
            },
            tunnelling: Tunnelling { zeta2: 0.0, zeta1: 0.0, zeta0: 0.0 },
            ..*self
        }
    }
}

/// Weighted sum of monomials.
pub type Terms = Vec<(f64, Monomial)>;

use Elementary::*;

fn mol_mode(spin: Spin) -> Mode {
    match spin {
        Spin::Up => Mode::MolUp,
        Spin::Down => Mode::MolDown,
    }
}

fn atom_mode(spin: Spin) -> Mode {
    match spin {
        Spin::Up => Mode::AtomUp,
        Spin::Down => Mode::AtomDown,
    }
}

fn number(mode: Mode) -> Monomial {
    Monomial::new([PhotonRaise(mode), PhotonLower(mode)])
}

/// σ_n σ_n†: nuclei together.
fn together() -> Monomial {
    vacant_projector(TunnelLower)
}

/// σ_n† σ_n: nuclei apart.
fn apart() -> Monomial {
    occupied_projector(TunnelLower)
}

/// Every term right-multiplied by `gate`.
fn gated(terms: Terms, gate: &Monomial) -> Terms {
    terms.into_iter().map(|(c, m)| (c, m.then_after(gate))).collect()
}

/// `g (a† σ + a σ†)`.
fn exchange(g: f64, mode: Mode, lower: Elementary) -> Terms {
    vec![
        (g, Monomial::new([PhotonRaise(mode), lower])),
        (g, Monomial::new([PhotonLower(mode), lower.adjoint()])),
    ]
}

/// Hermitian part of `P · X` for a diagonal projector sum `P`: ½(PX + XP).
fn conditioned(projectors: &[Monomial], x: Terms) -> Terms {
    let mut out = Terms::new();
    for p in projectors {
        for (c, m) in &x {
            out.push((0.5 * c, p.then_after(m)));
            out.push((0.5 * c, m.then_after(p)));
        }
    }
    out
}

/// Diagonal `P · D` for projectors `P` and diagonal terms `D`.
fn conditioned_diagonal(projectors: &[Monomial], d: Terms) -> Terms {
    let mut out = Terms::new();
    for p in projectors {
        for (c, m) in &d {
            out.push((*c, p.then_after(m)));
        }
    }
    out
}

/// Electron of atom i in the excited orbital: Σ_s σ†_Ωs,i σ_Ωs,i.
fn excited_projectors(atom: Atom) -> Vec<Monomial> {
    Spin::BOTH.iter().map(|&s| occupied_projector(AtomicLower(atom, s))).collect()
}

/// Electron of atom i in the ground orbital: Σ_s σ_Ωs,i σ†_Ωs,i.
fn ground_projectors(atom: Atom) -> Vec<Monomial> {
    Spin::BOTH.iter().map(|&s| vacant_projector(AtomicLower(atom, s))).collect()
}

pub fn associative_terms(p: &HamiltonianParams) -> Terms {
    let hb = p.hbar;
    let mut t = Terms::new();
    for s in Spin::BOTH {
        let mode = mol_mode(s);
        let w = p.frequency(mode);
        t.push((hb * w, number(mode)));
        t.push((hb * w, occupied_projector(MolecularLower(s))));
        let g = match s {
            Spin::Up => p.couplings.g_mol_up,
            Spin::Down => p.couplings.g_mol_down,
        };
        t.extend(exchange(g, mode, MolecularLower(s)));
    }
    gated(t, &together())
}

pub fn dissociative_terms(p: &HamiltonianParams) -> Terms {
    let hb = p.hbar;
    let mut t = Terms::new();
    for s in Spin::BOTH {
        let mode = atom_mode(s);
        let w = p.frequency(mode);
        let g = match s {
            Spin::Up => p.couplings.g_atom_up,
            Spin::Down => p.couplings.g_atom_down,
        };
        t.push((hb * w, number(mode)));
        for atom in Atom::BOTH {
            t.push((hb * w, occupied_projector(AtomicLower(atom, s))));
            t.extend(exchange(g, mode, AtomicLower(atom, s)));
        }
    }
    gated(t, &apart())
}

pub fn tunnelling_terms(p: &HamiltonianParams) -> Terms {
    let z = &p.tunnelling;
    let up = MolecularLower(Spin::Up);
    let down = MolecularLower(Spin::Down);
    let patterns = [
        (z.zeta2, occupied_projector(up), occupied_projector(down)),
        (z.zeta1, vacant_projector(up), occupied_projector(down)),
        (z.zeta1, occupied_projector(up), vacant_projector(down)),
        (z.zeta0, vacant_projector(up), vacant_projector(down)),
    ];
    let mut t = Terms::new();
    for (zeta, pu, pd) in patterns {
        let proj = pu.then_after(&pd);
        t.push((zeta, proj.then_after(&Monomial::one(TunnelRaise))));
        t.push((zeta, proj.then_after(&Monomial::one(TunnelLower))));
    }
    t
}

pub fn spin_flip_terms(p: &HamiltonianParams) -> Terms {
    let hb = p.hbar;
    let ws = p.frequency(Mode::ElectronSpin);
    let mut t = Terms::new();
    for atom in Atom::BOTH {
        let flip = ElectronSpinLower(atom, Orbital::Excited);
        let proj = excited_projectors(atom);
        t.extend(conditioned_diagonal(
            &proj,
            vec![(hb * ws, number(Mode::ElectronSpin)), (hb * ws, occupied_projector(flip))],
        ));
        t.extend(conditioned(&proj, exchange(p.couplings.g_spin, Mode::ElectronSpin, flip)));
    }
    gated(t, &apart())
}

pub fn spin_spin_terms(p: &HamiltonianParams) -> Terms {
    let hb = p.hbar;
    let ws = p.frequency(Mode::ElectronSpin);
    let wn = p.frequency(Mode::NuclearSpin);
    let mut t = Terms::new();
    for atom in Atom::BOTH {
        let proj = ground_projectors(atom);
        t.extend(conditioned_diagonal(
            &proj,
            vec![
                (hb * ws, number(Mode::ElectronSpin)),
                (hb * ws, occupied_projector(ElectronSpinLower(atom, Orbital::Ground))),
                (hb * wn, number(Mode::NuclearSpin)),
                (hb * wn, occupied_projector(NuclearSpinLower(atom))),
            ],
        ));
        let sx = spin_exchange_monomial(atom);
        let g = p.couplings.g_en;
        t.extend(conditioned(&proj, vec![(g, sx.adjoint()), (g, sx)]));
    }
    gated(t, &apart())
}

/// All five terms concatenated.
pub fn total_terms(p: &HamiltonianParams) -> Terms {
    let mut t = associative_terms(p);
    t.extend(dissociative_terms(p));
    t.extend(tunnelling_terms(p));
    t.extend(spin_flip_terms(p));
    t.extend(spin_spin_terms(p));
    t
}

fn assemble(basis: &Basis, terms: &Terms) -> SparseOperator {
    SparseOperator::from_terms(basis, terms.iter().map(|(c, m)| (*c, m)))
}

pub fn build_associative(basis: &Basis, p: &HamiltonianParams) -> SparseOperator {
    assemble(basis, &associative_terms(p))
}

pub fn build_dissociative(basis: &Basis, p: &HamiltonianParams) -> SparseOperator {
    assemble(basis, &dissociative_terms(p))
}

pub fn build_tunneling(basis: &Basis, p: &HamiltonianParams) -> SparseOperator {
    assemble(basis, &tunnelling_terms(p))
}

pub fn build_spin_flip(basis: &Basis, p: &HamiltonianParams) -> Result<SparseOperator, HamiltonianError> {
    check_hermitian(assemble(basis, &spin_flip_terms(p)))
}

pub fn build_spin_spin(basis: &Basis, p: &HamiltonianParams) -> Result<SparseOperator, HamiltonianError> {
    check_hermitian(assemble(basis, &spin_spin_terms(p)))
}

/// `H = H_A + H_D + H_tun + H_spin-flip + H_spin-spin`, checked Hermitian to
/// 1e-12 relative.
pub fn build_total(basis: &Basis, p: &HamiltonianParams) -> Result<SparseOperator, HamiltonianError> {
    p.validate()?;
    let parts = [
        build_associative(basis, p),
        build_dissociative(basis, p),
        build_tunneling(basis, p),
        build_spin_flip(basis, p)?,
        build_spin_spin(basis, p)?,
    ];
    let mut h = SparseOperator::zero(basis);
    for part in &parts {
        h = h.sum(part)?;
    }
    check_hermitian(h)
}

fn check_hermitian(h: SparseOperator) -> Result<SparseOperator, HamiltonianError> {
    let scale = h.max_abs();
    let defect = h.hermiticity_defect();
    if defect > 1e-12 * scale {
        return Err(HamiltonianError::NotHermitian { defect, scale });
    }
    Ok(h)
}

/// Monomials whose action can move population: every Hamiltonian monomial
/// with a non-zero coefficient, the leak jump `a` of every mode with γ > 0,
/// and the influx jump `a†` of every mode with μγ > 0.
pub fn transition_generators(p: &HamiltonianParams, modes: &[crate::hilbert::ModeSpec; N_MODES]) -> Vec<Monomial> {
    let mut gens: Vec<Monomial> = total_terms(p)
        .into_iter()
        .filter(|(c, _)| *c != 0.0)
        .map(|(_, m)| m)
        .collect();
    for m in modes {
        if m.gamma_out > 0.0 {
            gens.push(Monomial::one(PhotonLower(m.label)));
        }
        if m.gamma_in() > 0.0 {
            gens.push(Monomial::one(PhotonRaise(m.label)));
        }
    }
    let mut seen = std::collections::HashSet::new();
    gens.retain(|m| seen.insert(m.clone()));
    gens
}

/// Quantities conserved by the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Charge {
    /// Number of electrons.
    Electrons,
    /// n_Ω↑ + n_Ω↓ + occupancy of the four excited (Φ) slots.
    Atomic,
    /// n_Ωˢ + number of spin-↑ electrons.
    ElectronSpin,
    /// n_Ωⁿ + number of spin-↑ nuclei.
    NuclearSpin,
}

impl Charge {
    pub const ALL: [Charge; 4] =
        [Charge::Electrons, Charge::Atomic, Charge::ElectronSpin, Charge::NuclearSpin];

    pub fn value(self, s: &BasisState) -> i64 {
        let count = |slots: &[usize]| slots.iter().filter(|&&i| s.electrons[i]).count() as i64;
        match self {
            Charge::Electrons => s.electron_count() as i64,
            Charge::Atomic => {
                i64::from(s.photons(Mode::AtomUp)) + i64::from(s.photons(Mode::AtomDown)) + count(&[0, 1, 4, 5])
            }
            Charge::ElectronSpin => i64::from(s.photons(Mode::ElectronSpin)) + count(&[0, 2, 4, 6]),
            Charge::NuclearSpin => {
                i64::from(s.photons(Mode::NuclearSpin))
                    + s.nuclear_up.iter().filter(|&&u| u).count() as i64
            }
        }
    }

    pub fn operator(self, basis: &Basis) -> SparseOperator {
        SparseOperator::from_triplets(
            basis.id(),
            basis.len(),
            basis
                .states()
                .iter()
                .enumerate()
                .map(|(i, s)| (i, i, Complex64::new(self.value(s) as f64, 0.0))),
        )
    }
}

/// Conserved-charge signature of a state.
pub fn charges(s: &BasisState) -> [i64; 4] {
    Charge::ALL.map(|c| c.value(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{antibonding_slot, bonding_slot, slot, ModeSpec, N_SLOTS};

    pub(crate) fn formation_params() -> HamiltonianParams {
        let mut f = [0.0; N_MODES];
        f[Mode::AtomUp.index()] = 1e10;
        f[Mode::AtomDown.index()] = 1e10;
        f[Mode::MolUp.index()] = 5e9;
        f[Mode::MolDown.index()] = 5e9;
        f[Mode::ElectronSpin.index()] = 1e9;
        f[Mode::NuclearSpin.index()] = 1e8;
        HamiltonianParams {
            hbar: 1.0,
            frequencies: f,
            couplings: Couplings {
                g_atom_up: 1e8,
                g_atom_down: 1e8,
                g_mol_up: 5e7,
                g_mol_down: 5e7,
                g_spin: 1e7,
                g_en: 1e6,
            },
            tunnelling: Tunnelling { zeta2: 1e9, zeta1: 1e7, zeta0: 0.0 },
        }
    }

    fn modes(c: [u8; N_MODES]) -> [ModeSpec; N_MODES] {
        Mode::ALL.map(|label| ModeSpec {
            label,
            frequency: 1.0,
            gamma_out: 0.0,
            mu: 0.0,
            cutoff: c[label.index()],
        })
    }

    fn state(photons: [u8; N_MODES], slots: &[usize], apart: bool, nuc: [bool; 2]) -> BasisState {
        let mut electrons = [false; N_SLOTS];
        for &i in slots {
            electrons[i] = true;
        }
        BasisState { photons, electrons, apart, nuclear_up: nuc }
    }

    fn element(h: &SparseOperator, b: &Basis, to: &BasisState, from: &BasisState) -> f64 {
        h.get(b.index_of(to).unwrap(), b.index_of(from).unwrap()).re
    }

    #[test]
    fn associative_coupling_element() {
        let p = formation_params();
        let from = state([0; 6], &[antibonding_slot(Spin::Up)], false, [true, true]);
        let to = state([1, 0, 0, 0, 0, 0], &[bonding_slot(Spin::Up)], false, [true, true]);
        let mut far = from;
        far.apart = true;
        let b = Basis::from_states([from, to, far], modes([1, 1, 0, 0, 0, 0])).unwrap();
        let h = build_associative(&b, &p);
        assert_eq!(element(&h, &b, &to, &from), 5e7);
        assert_eq!(element(&h, &b, &from, &to), 5e7);
        let k1 = b.index_of(&far).unwrap();
        assert!(h.entries().iter().all(|&(r, c, _)| r != k1 && c != k1));
        // diagonal: ħω per photon plus ħω per Φ₁ electron
        assert_eq!(element(&h, &b, &from, &from), 5e9);
        assert_eq!(element(&h, &b, &to, &to), 5e9);
    }

    #[test]
    fn associative_uncoupled_is_diagonal() {
        let p = formation_params().uncoupled();
        let s1 = state([1, 1, 0, 0, 0, 0], &[antibonding_slot(Spin::Up), antibonding_slot(Spin::Down)], false, [true, false]);
        let s2 = state([1, 0, 0, 0, 0, 0], &[bonding_slot(Spin::Up), antibonding_slot(Spin::Down)], false, [true, false]);
        let b = Basis::from_states([s1, s2], modes([1, 1, 0, 0, 0, 0])).unwrap();
        let h = build_associative(&b, &p);
        assert!(h.is_diagonal());
        assert_eq!(element(&h, &b, &s1, &s1), 5e9 * 4.0);
        assert_eq!(element(&h, &b, &s2, &s2), 5e9 * 2.0);
    }

    #[test]
    fn dissociative_coupling_element() {
        let p = formation_params();
        let gd = slot(Atom::First, Orbital::Ground, Spin::Down);
        let ed = slot(Atom::First, Orbital::Excited, Spin::Down);
        let from = state([0, 0, 0, 1, 0, 0], &[gd], true, [true, true]);
        let to = state([0; 6], &[ed], true, [true, true]);
        let mut near = from;
        near.apart = false;
        let b = Basis::from_states([from, to, near], modes([0, 0, 0, 1, 0, 0])).unwrap();
        let h = build_dissociative(&b, &p);
        assert_eq!(element(&h, &b, &to, &from), 1e8);
        let k0 = b.index_of(&near).unwrap();
        assert!(h.entries().iter().all(|&(r, c, _)| r != k0 && c != k0));
    }

    #[test]
    fn tunnelling_intensities() {
        let p = formation_params();
        // Φ₁↑ (atom-1 excited ↑) and Φ₀↓ (atom-2 excited ↓)
        let mixed = [antibonding_slot(Spin::Up), bonding_slot(Spin::Down)];
        let a1 = state([0; 6], &mixed, true, [true, false]);
        let a0 = state([0; 6], &mixed, false, [true, false]);
        let both0 = [bonding_slot(Spin::Up), bonding_slot(Spin::Down)];
        let s1 = state([0; 6], &both0, true, [true, false]);
        let s0 = state([0; 6], &both0, false, [true, false]);
        let both1 = [antibonding_slot(Spin::Up), antibonding_slot(Spin::Down)];
        let d1 = state([0; 6], &both1, true, [true, false]);
        let d0 = state([0; 6], &both1, false, [true, false]);
        let b = Basis::from_states([a1, a0, s1, s0, d1, d0], modes([0; 6])).unwrap();
        let h = build_tunneling(&b, &p);
        assert_eq!(element(&h, &b, &a0, &a1), 1e7);
        assert_eq!(element(&h, &b, &a1, &a0), 1e7);
        assert_eq!(element(&h, &b, &s1, &s0), 0.0);
        assert_eq!(element(&h, &b, &d0, &d1), 1e9);
        assert_eq!(h.hermiticity_defect(), 0.0);
    }

    #[test]
    fn spin_flip_elements() {
        let p = formation_params();
        let eu = slot(Atom::First, Orbital::Excited, Spin::Up);
        let ed = slot(Atom::First, Orbital::Excited, Spin::Down);
        let gu = slot(Atom::First, Orbital::Ground, Spin::Up);
        let gd = slot(Atom::First, Orbital::Ground, Spin::Down);
        let from = state([0; 6], &[eu], true, [true, true]);
        let to = state([0, 0, 0, 0, 1, 0], &[ed], true, [true, true]);
        let mut near_from = from;
        near_from.apart = false;
        let mut near_to = to;
        near_to.apart = false;
        let g_from = state([0; 6], &[gu], true, [true, true]);
        let g_to = state([0, 0, 0, 0, 1, 0], &[gd], true, [true, true]);
        let b = Basis::from_states(
            [from, to, near_from, near_to, g_from, g_to],
            modes([0, 0, 0, 0, 1, 0]),
        )
        .unwrap();
        let h = build_spin_flip(&b, &p).unwrap();
        assert_eq!(element(&h, &b, &to, &from), 1e7);
        assert_eq!(element(&h, &b, &near_to, &near_from), 0.0);
        assert_eq!(element(&h, &b, &g_to, &g_from), 0.0);
        for s in [near_from, near_to, g_from, g_to] {
            let i = b.index_of(&s).unwrap();
            assert!(h.entries().iter().all(|&(r, c, _)| r != i && c != i), "{s}");
        }
    }

    #[test]
    fn spin_spin_elements() {
        let p = formation_params();
        let gu = slot(Atom::First, Orbital::Ground, Spin::Up);
        let gd = slot(Atom::First, Orbital::Ground, Spin::Down);
        let eu = slot(Atom::First, Orbital::Excited, Spin::Up);
        let other = slot(Atom::Second, Orbital::Ground, Spin::Down);
        let from = state([0, 0, 0, 0, 1, 0], &[gd, other], true, [true, true]);
        let to = state([0, 0, 0, 0, 0, 1], &[gu, other], true, [false, true]);
        let excited = state([0, 0, 0, 0, 1, 0], &[eu, other], true, [true, true]);
        let b = Basis::from_states([from, to, excited], modes([0, 0, 0, 0, 1, 1])).unwrap();
        let h = build_spin_spin(&b, &p).unwrap();
        assert_eq!(element(&h, &b, &to, &from), 1e6);
        assert_eq!(element(&h, &b, &from, &to), 1e6);
        // both atoms in the ground orbital: field and nuclear terms count once per atom
        assert_eq!(element(&h, &b, &from, &from), 2.0 * 1e9 + 2.0 * 1e8);
        // ħΩⁿ p per ground atom plus ħΩⁿ for the ↑ nucleus 2 (atom 2 is ground)
        // plus ħΩˢ for the ↑ electron of atom 1
        assert_eq!(element(&h, &b, &to, &to), 2.0 * 1e8 + 1e8 + 1e9);
        // atom 1 excited: only atom 2 contributes, and atom 2 cannot exchange
        assert_eq!(element(&h, &b, &excited, &excited), 1e9 + 1e8);
    }

    #[test]
    fn total_uncoupled_is_diagonal() {
        let p = formation_params().uncoupled();
        let gens = transition_generators(&formation_params(), &modes([1, 1, 2, 2, 2, 2]));
        let refs: Vec<&dyn crate::hilbert::StateMap> =
            gens.iter().map(|m| m as &dyn crate::hilbert::StateMap).collect();
        let init = state(
            [0, 0, 1, 1, 1, 0],
            &[slot(Atom::First, Orbital::Ground, Spin::Down), slot(Atom::Second, Orbital::Ground, Spin::Down)],
            true,
            [true, true],
        );
        let b = crate::hilbert::enumerate_reachable(init, &refs, modes([1, 1, 2, 2, 2, 2])).unwrap();
        let h = build_total(&b, &p).unwrap();
        assert!(h.is_diagonal());
    }

    #[test]
    fn invalid_params() {
        let mut p = formation_params();
        p.couplings.g_en = -1.0;
        let b = Basis::from_states([state([0; 6], &[], true, [true, true])], modes([0; 6])).unwrap();
        assert!(matches!(build_total(&b, &p), Err(HamiltonianError::InvalidParams(_))));
    }
}
