//! Composite basis: six photon modes, eight electron spin-orbitals, nucleus
//! position and two nuclear spins.
//!
//! Electron slot order (bit `l1` .. `l8`):
//!
//! | slot | atom | orbital  | spin |
//! |------|------|----------|------|
//! | 0    | 1    | excited  | up   |
//! | 1    | 1    | excited  | down |
//! | 2    | 1    | ground   | up   |
//! | 3    | 1    | ground   | down |
//! | 4    | 2    | excited  | up   |
//! | 5    | 2    | excited  | down |
//! | 6    | 2    | ground   | up   |
//! | 7    | 2    | ground   | down |
//!
//! When the nuclei are together (`k = 0`) the excited slots of atom 1 are read
//! as the antibonding orbital Φ₁ and those of atom 2 as the bonding orbital Φ₀.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of photon modes.
pub const N_MODES: usize = 6;
/// Number of electron spin-orbital slots.
pub const N_SLOTS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HilbertError {
    #[error("mode {mode}: photon count {count} exceeds cutoff {cutoff}")]
    CutoffViolation { mode: Mode, count: u8, cutoff: u8 },
    #[error("invalid mode spec for {mode}: {reason}")]
    InvalidMode { mode: Mode, reason: String },
    #[error("unknown mode label `{0}`")]
    UnknownMode(String),
    #[error("mode table must list each of the six modes exactly once")]
    IncompleteModeTable,
}

/// Photon mode label. Order matches the photon register `p1..p6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    /// ω↑, molecular transition, spin up.
    #[serde(rename = "omega_up")]
    MolUp,
    /// ω↓, molecular transition, spin down.
    #[serde(rename = "omega_down")]
    MolDown,
    /// Ω↑, atomic transition, spin up.
    #[serde(rename = "Omega_up")]
    AtomUp,
    /// Ω↓, atomic transition, spin down.
    #[serde(rename = "Omega_down")]
    AtomDown,
    /// Ωˢ, electron spin flip.
    #[serde(rename = "Omega_s")]
    ElectronSpin,
    /// Ωⁿ, nuclear spin flip.
    #[serde(rename = "Omega_n")]
    NuclearSpin,
}

impl Mode {
    pub const ALL: [Mode; N_MODES] = [
        Mode::MolUp,
        Mode::MolDown,
        Mode::AtomUp,
        Mode::AtomDown,
        Mode::ElectronSpin,
        Mode::NuclearSpin,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::MolUp => "omega_up",
            Mode::MolDown => "omega_down",
            Mode::AtomUp => "Omega_up",
            Mode::AtomDown => "Omega_down",
            Mode::ElectronSpin => "Omega_s",
            Mode::NuclearSpin => "Omega_n",
        }
    }

    pub fn from_label(label: &str) -> Result<Mode, HilbertError> {
        Mode::ALL
            .into_iter()
            .find(|m| m.label() == label)
            .ok_or_else(|| HilbertError::UnknownMode(label.to_string()))
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Atom {
    #[serde(rename = "1")]
    First,
    #[serde(rename = "2")]
    Second,
}

impl Atom {
    pub const BOTH: [Atom; 2] = [Atom::First, Atom::Second];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn other(self) -> Atom {
        match self {
            Atom::First => Atom::Second,
            Atom::Second => Atom::First,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orbital {
    Excited,
    Ground,
}

/// Index of the electron slot for an atomic spin-orbital.
pub fn slot(atom: Atom, orbital: Orbital, spin: Spin) -> usize {
    4 * atom.index()
        + match orbital {
            Orbital::Excited => 0,
            Orbital::Ground => 2,
        }
        + match spin {
            Spin::Up => 0,
            Spin::Down => 1,
        }
}

/// Slot read as the antibonding molecular orbital Φ₁ when `k = 0`.
pub fn antibonding_slot(spin: Spin) -> usize {
    slot(Atom::First, Orbital::Excited, spin)
}

/// Slot read as the bonding molecular orbital Φ₀ when `k = 0`.
pub fn bonding_slot(spin: Spin) -> usize {
    slot(Atom::Second, Orbital::Excited, spin)
}

/// One photon mode of the cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub label: Mode,
    /// Angular frequency, rad/s.
    pub frequency: f64,
    /// Leak rate γ, 1/s.
    pub gamma_out: f64,
    /// Influx ratio γ'/γ.
    pub mu: f64,
    /// Maximum photon number kept.
    pub cutoff: u8,
}

impl ModeSpec {
    pub fn validate(&self) -> Result<(), HilbertError> {
        let bad = |reason: &str| {
            Err(HilbertError::InvalidMode {
                mode: self.label,
                reason: reason.to_string(),
            })
        };
        if !(self.frequency > 0.0) || !self.frequency.is_finite() {
            return bad("frequency must be positive");
        }
        if !(self.gamma_out >= 0.0) || !self.gamma_out.is_finite() {
            return bad("gamma_out must be non-negative");
        }
        if !(0.0..1.0).contains(&self.mu) {
            return bad("mu must lie in [0, 1)");
        }
        Ok(())
    }

    /// Influx rate γ' = μγ.
    pub fn gamma_in(&self) -> f64 {
        self.mu * self.gamma_out
    }
}

/// Per-mode Fock cutoffs in photon register order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cutoffs(pub [u8; N_MODES]);

impl Cutoffs {
    /// 1 for the molecular modes, 2 for the four modes with influx.
    pub const DEFAULT: Cutoffs = Cutoffs([1, 1, 2, 2, 2, 2]);

    pub fn of(&self, mode: Mode) -> u8 {
        self.0[mode.index()]
    }

    pub fn from_modes(modes: &[ModeSpec; N_MODES]) -> Cutoffs {
        let mut c = [0u8; N_MODES];
        for m in modes {
            c[m.label.index()] = m.cutoff;
        }
        Cutoffs(c)
    }
}

impl Default for Cutoffs {
    fn default() -> Self {
        Cutoffs::DEFAULT
    }
}

/// One composite configuration. Field order is the canonical enumeration
/// order, so the derived `Ord` is lexicographic on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "StateRecord", try_from = "StateRecord")]
pub struct BasisState {
    pub photons: [u8; N_MODES],
    pub electrons: [bool; N_SLOTS],
    /// `true` when the nuclei sit in different cavities (`k = 1`).
    pub apart: bool,
    /// Nuclear spins of atoms 1 and 2, `true` = ↑.
    pub nuclear_up: [bool; 2],
}

impl BasisState {
    pub fn photons(&self, mode: Mode) -> u8 {
        self.photons[mode.index()]
    }

    pub fn occupied(&self, slot: usize) -> bool {
        self.electrons[slot]
    }

    pub fn electron_count(&self) -> usize {
        self.electrons.iter().filter(|&&b| b).count()
    }

    pub fn check_cutoffs(&self, cutoffs: &Cutoffs) -> Result<(), HilbertError> {
        for mode in Mode::ALL {
            let count = self.photons(mode);
            let cutoff = cutoffs.of(mode);
            if count > cutoff {
                return Err(HilbertError::CutoffViolation { mode, count, cutoff });
            }
        }
        Ok(())
    }

    /// Same electron, nucleus and nuclear-spin configuration, ignoring photons.
    pub fn same_configuration(&self, other: &BasisState) -> bool {
        self.electrons == other.electrons
            && self.apart == other.apart
            && self.nuclear_up == other.nuclear_up
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for p in self.photons {
            write!(f, "{p}")?;
        }
        write!(f, ";")?;
        for e in self.electrons {
            write!(f, "{}", e as u8)?;
        }
        write!(
            f,
            ";{}{}{}>",
            self.apart as u8, self.nuclear_up[0] as u8, self.nuclear_up[1] as u8
        )
    }
}

/// Flat record used for JSON dumps: `{photons, electrons, k, k1, k2}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateRecord {
    pub photons: [u8; N_MODES],
    pub electrons: [u8; N_SLOTS],
    pub k: u8,
    pub k1: u8,
    pub k2: u8,
}

impl From<BasisState> for StateRecord {
    fn from(s: BasisState) -> Self {
        StateRecord {
            photons: s.photons,
            electrons: s.electrons.map(u8::from),
            k: s.apart.into(),
            k1: s.nuclear_up[0].into(),
            k2: s.nuclear_up[1].into(),
        }
    }
}

impl TryFrom<StateRecord> for BasisState {
    type Error = String;

    fn try_from(r: StateRecord) -> Result<Self, Self::Error> {
        let bit = |v: u8, what: &str| match v {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(format!("{what} must be 0 or 1, got {v}")),
        };
        let mut electrons = [false; N_SLOTS];
        for (i, &v) in r.electrons.iter().enumerate() {
            electrons[i] = bit(v, "electron occupancy")?;
        }
        Ok(BasisState {
            photons: r.photons,
            electrons,
            apart: bit(r.k, "k")?,
            nuclear_up: [bit(r.k1, "k1")?, bit(r.k2, "k2")?],
        })
    }
}

/// A monomial transition rule: maps a basis state to at most one basis state
/// with a real amplitude. `None` means the rule annihilates the state.
pub trait StateMap {
    fn map(&self, state: &BasisState, cutoffs: &Cutoffs) -> Option<(BasisState, f64)>;
}

impl<F> StateMap for F
where
    F: Fn(&BasisState, &Cutoffs) -> Option<(BasisState, f64)>,
{
    fn map(&self, state: &BasisState, cutoffs: &Cutoffs) -> Option<(BasisState, f64)> {
        self(state, cutoffs)
    }
}

/// Ordered, immutable set of basis states with exact index lookup.
#[derive(Debug, Clone)]
pub struct Basis {
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
    modes: [ModeSpec; N_MODES],
    id: u64,
}

impl Basis {
    /// Builds a basis from an arbitrary state set. States are sorted into
    /// canonical order and deduplicated.
    pub fn from_states(
        states: impl IntoIterator<Item = BasisState>,
        modes: [ModeSpec; N_MODES],
    ) -> Result<Basis, HilbertError> {
        validate_mode_table(&modes)?;
        let cutoffs = Cutoffs::from_modes(&modes);
        let set: BTreeSet<BasisState> = states.into_iter().collect();
        for s in &set {
            s.check_cutoffs(&cutoffs)?;
        }
        let states: Vec<BasisState> = set.into_iter().collect();
        let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let id = basis_fingerprint(&states, &modes);
        Ok(Basis { states, index, modes, id })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &BasisState {
        &self.states[i]
    }

    pub fn index_of(&self, s: &BasisState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn modes(&self) -> &[ModeSpec; N_MODES] {
        &self.modes
    }

    pub fn mode(&self, mode: Mode) -> &ModeSpec {
        &self.modes[mode.index()]
    }

    pub fn cutoffs(&self) -> Cutoffs {
        Cutoffs::from_modes(&self.modes)
    }

    /// Identity token. Equal for bases with identical states and mode tables.
    pub fn id(&self) -> u64 {
        self.id
    }

    /// JSON array of `{photons, electrons, k, k1, k2}` records in basis order.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.states
                .iter()
                .map(|s| serde_json::to_value(s).expect("state record serializes"))
                .collect(),
        )
    }
}

fn validate_mode_table(modes: &[ModeSpec; N_MODES]) -> Result<(), HilbertError> {
    for (i, m) in modes.iter().enumerate() {
        if m.label.index() != i {
            return Err(HilbertError::IncompleteModeTable);
        }
        m.validate()?;
    }
    Ok(())
}

fn basis_fingerprint(states: &[BasisState], modes: &[ModeSpec; N_MODES]) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    states.hash(&mut h);
    for m in modes {
        m.label.hash(&mut h);
        m.frequency.to_bits().hash(&mut h);
        m.gamma_out.to_bits().hash(&mut h);
        m.mu.to_bits().hash(&mut h);
        m.cutoff.hash(&mut h);
    }
    h.finish()
}

/// Smallest cutoff-respecting set containing `initial` and closed under every
/// generator. Transitions with zero amplitude or leaving the cutoffs are
/// ignored.
pub fn enumerate_reachable(
    initial: BasisState,
    generators: &[&dyn StateMap],
    modes: [ModeSpec; N_MODES],
) -> Result<Basis, HilbertError> {
    validate_mode_table(&modes)?;
    let cutoffs = Cutoffs::from_modes(&modes);
    initial.check_cutoffs(&cutoffs)?;

    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(initial);
    queue.push_back(initial);
    while let Some(s) = queue.pop_front() {
        for g in generators {
            if let Some((t, amp)) = g.map(&s, &cutoffs) {
                if amp != 0.0 && t.check_cutoffs(&cutoffs).is_ok() && seen.insert(t) {
                    queue.push_back(t);
                }
            }
        }
    }
    Basis::from_states(seen, modes)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn modes_with_cutoffs(c: [u8; N_MODES]) -> [ModeSpec; N_MODES] {
        Mode::ALL.map(|label| ModeSpec {
            label,
            frequency: 1.0,
            gamma_out: 0.0,
            mu: 0.0,
            cutoff: c[label.index()],
        })
    }

    fn ground() -> BasisState {
        BasisState {
            photons: [0; N_MODES],
            electrons: [false; N_SLOTS],
            apart: true,
            nuclear_up: [true, true],
        }
    }

    #[test]
    fn slot_table() {
        assert_eq!(slot(Atom::First, Orbital::Excited, Spin::Up), 0);
        assert_eq!(slot(Atom::First, Orbital::Ground, Spin::Down), 3);
        assert_eq!(slot(Atom::Second, Orbital::Excited, Spin::Down), 5);
        assert_eq!(slot(Atom::Second, Orbital::Ground, Spin::Down), 7);
        assert_eq!(antibonding_slot(Spin::Down), 1);
        assert_eq!(bonding_slot(Spin::Up), 4);
    }

    #[test]
    fn no_generators_gives_singleton() {
        let basis = enumerate_reachable(ground(), &[], modes_with_cutoffs([1; 6])).unwrap();
        assert_eq!(basis.len(), 1);
        assert_eq!(basis.index_of(&ground()), Some(0));
    }

    #[test]
    fn jaynes_cummings_pair() {
        // one atom, Ω↑ mode, excitation exchange with the field
        let exc = slot(Atom::First, Orbital::Excited, Spin::Up);
        let gnd = slot(Atom::First, Orbital::Ground, Spin::Up);
        let mut initial = ground();
        initial.electrons[exc] = true;
        let emit = move |s: &BasisState, c: &Cutoffs| {
            if s.electrons[exc] && !s.electrons[gnd] && s.photons(Mode::AtomUp) < c.of(Mode::AtomUp) {
                let mut t = *s;
                t.electrons[exc] = false;
                t.electrons[gnd] = true;
                t.photons[Mode::AtomUp.index()] += 1;
                Some((t, 1.0))
            } else {
                None
            }
        };
        let absorb = move |s: &BasisState, _: &Cutoffs| {
            if !s.electrons[exc] && s.electrons[gnd] && s.photons(Mode::AtomUp) > 0 {
                let mut t = *s;
                t.electrons[exc] = true;
                t.electrons[gnd] = false;
                t.photons[Mode::AtomUp.index()] -= 1;
                Some((t, 1.0))
            } else {
                None
            }
        };
        let basis = enumerate_reachable(
            initial,
            &[&emit, &absorb],
            modes_with_cutoffs([0, 0, 1, 0, 0, 0]),
        )
        .unwrap();
        assert_eq!(basis.len(), 2);
        // |p=0, excited> sorts before |p=1, ground>
        assert_eq!(basis.state(0), &initial);
        assert_eq!(basis.state(1).photons(Mode::AtomUp), 1);
        for (i, s) in basis.states().iter().enumerate() {
            assert_eq!(basis.index_of(s), Some(i));
        }
    }

    #[test]
    fn cutoff_violating_initial_is_rejected() {
        let mut s = ground();
        s.photons[Mode::AtomUp.index()] = 3;
        let err = enumerate_reachable(s, &[], modes_with_cutoffs([1, 1, 2, 2, 2, 2])).unwrap_err();
        assert!(matches!(err, HilbertError::CutoffViolation { mode: Mode::AtomUp, .. }));
    }

    #[test]
    fn index_of_absent_state() {
        let basis = enumerate_reachable(ground(), &[], modes_with_cutoffs([1; 6])).unwrap();
        let mut outside = ground();
        outside.photons[0] = 5;
        assert_eq!(basis.index_of(&outside), None);
    }

    #[test]
    fn json_record_round_trip() {
        let mut s = ground();
        s.photons = [0, 1, 2, 0, 1, 2];
        s.electrons[3] = true;
        s.electrons[6] = true;
        s.nuclear_up = [false, true];
        let v = serde_json::to_value(s).unwrap();
        assert_eq!(v["k"], 1);
        assert_eq!(v["k1"], 0);
        assert_eq!(v["electrons"][3], 1);
        let back: BasisState = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn bad_mode_specs() {
        let mut m = modes_with_cutoffs([1; 6]);
        m[2].mu = 1.0;
        assert!(matches!(
            Basis::from_states([ground()], m),
            Err(HilbertError::InvalidMode { mode: Mode::AtomUp, .. })
        ));
        let mut m = modes_with_cutoffs([1; 6]);
        m.swap(0, 1);
        assert_eq!(
            Basis::from_states([ground()], m).unwrap_err(),
            HilbertError::IncompleteModeTable
        );
    }

    #[test]
    fn mode_labels_round_trip() {
        for m in Mode::ALL {
            assert_eq!(Mode::from_label(m.label()).unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.label()));
        }
        assert!(Mode::from_label("Omega_x").is_err());
    }
}
