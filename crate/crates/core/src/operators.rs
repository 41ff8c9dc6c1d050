//! Second-quantized transition operators as sparse matrices over a [`Basis`].
//!
//! Every operator of the model is a product of elementary bit-pair or
//! ladder transitions, so it maps each basis state to at most one other
//! state. [`Monomial`] captures such a product symbolically and
//! [`SparseOperator::from_monomial`] evaluates it on a basis. No fermionic
//! sign strings are applied: each transition carries amplitude 1 (or √p for
//! photon ladders).

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::hilbert::{
    antibonding_slot, bonding_slot, slot, Atom, Basis, BasisState, Cutoffs, Mode, Orbital, Spin,
    StateMap,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("operators act on different bases ({0:#x} vs {1:#x})")]
    BasisMismatch(u64, u64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Annihilate,
    Create,
}

/// Elementary transitions. `*Lower` variants are the σ operators, `*Raise`
/// their adjoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Elementary {
    PhotonLower(Mode),
    PhotonRaise(Mode),
    /// σ_ω: Φ₁ → Φ₀ for one spin.
    MolecularLower(Spin),
    MolecularRaise(Spin),
    /// σ_Ω,i: excited → ground orbital of atom i.
    AtomicLower(Atom, Spin),
    AtomicRaise(Atom, Spin),
    /// σ_n: nuclei apart (k=1) → together (k=0).
    TunnelLower,
    TunnelRaise,
    /// σ_Ωˢ,i on one orbital level: spin ↑ → ↓.
    ElectronSpinLower(Atom, Orbital),
    ElectronSpinRaise(Atom, Orbital),
    /// σ_Ωⁿ,i: nuclear spin ↑ → ↓.
    NuclearSpinLower(Atom),
    NuclearSpinRaise(Atom),
}

fn hop(s: &BasisState, from: usize, to: usize) -> Option<(BasisState, f64)> {
    if s.electrons[from] && !s.electrons[to] {
        let mut t = *s;
        t.electrons[from] = false;
        t.electrons[to] = true;
        Some((t, 1.0))
    } else {
        None
    }
}

impl Elementary {
    pub fn adjoint(self) -> Elementary {
        use Elementary::*;
        match self {
            PhotonLower(m) => PhotonRaise(m),
            PhotonRaise(m) => PhotonLower(m),
            MolecularLower(s) => MolecularRaise(s),
            MolecularRaise(s) => MolecularLower(s),
            AtomicLower(a, s) => AtomicRaise(a, s),
            AtomicRaise(a, s) => AtomicLower(a, s),
            TunnelLower => TunnelRaise,
            TunnelRaise => TunnelLower,
            ElectronSpinLower(a, o) => ElectronSpinRaise(a, o),
            ElectronSpinRaise(a, o) => ElectronSpinLower(a, o),
            NuclearSpinLower(a) => NuclearSpinRaise(a),
            NuclearSpinRaise(a) => NuclearSpinLower(a),
        }
    }

    pub fn apply(self, s: &BasisState, cutoffs: &Cutoffs) -> Option<(BasisState, f64)> {
        use Elementary::*;
        match self {
            PhotonLower(m) => {
                let p = s.photons(m);
                (p > 0).then(|| {
                    let mut t = *s;
                    t.photons[m.index()] = p - 1;
                    (t, f64::from(p).sqrt())
                })
            }
            PhotonRaise(m) => {
                let p = s.photons(m);
                (p < cutoffs.of(m)).then(|| {
                    let mut t = *s;
                    t.photons[m.index()] = p + 1;
                    (t, f64::from(p + 1).sqrt())
                })
            }
            MolecularLower(sp) => hop(s, antibonding_slot(sp), bonding_slot(sp)),
            MolecularRaise(sp) => hop(s, bonding_slot(sp), antibonding_slot(sp)),
            AtomicLower(a, sp) => hop(
                s,
                slot(a, Orbital::Excited, sp),
                slot(a, Orbital::Ground, sp),
            ),
            AtomicRaise(a, sp) => hop(
                s,
                slot(a, Orbital::Ground, sp),
                slot(a, Orbital::Excited, sp),
            ),
            TunnelLower => s.apart.then(|| {
                let mut t = *s;
                t.apart = false;
                (t, 1.0)
            }),
            TunnelRaise => (!s.apart).then(|| {
                let mut t = *s;
                t.apart = true;
                (t, 1.0)
            }),
            ElectronSpinLower(a, o) => hop(s, slot(a, o, Spin::Up), slot(a, o, Spin::Down)),
            ElectronSpinRaise(a, o) => hop(s, slot(a, o, Spin::Down), slot(a, o, Spin::Up)),
            NuclearSpinLower(a) => s.nuclear_up[a.index()].then(|| {
                let mut t = *s;
                t.nuclear_up[a.index()] = false;
                (t, 1.0)
            }),
            NuclearSpinRaise(a) => (!s.nuclear_up[a.index()]).then(|| {
                let mut t = *s;
                t.nuclear_up[a.index()] = true;
                (t, 1.0)
            }),
        }
    }
}

/// Ordered product of elementary operators, written left to right as in
/// the algebra: the rightmost factor acts first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(pub Vec<Elementary>);

impl Monomial {
    pub fn new(factors: impl IntoIterator<Item = Elementary>) -> Monomial {
        Monomial(factors.into_iter().collect())
    }

    pub fn one(e: Elementary) -> Monomial {
        Monomial(vec![e])
    }

    /// `self · other` (other acts first).
    pub fn then_after(&self, other: &Monomial) -> Monomial {
        let mut f = self.0.clone();
        f.extend_from_slice(&other.0);
        Monomial(f)
    }

    pub fn adjoint(&self) -> Monomial {
        Monomial(self.0.iter().rev().map(|e| e.adjoint()).collect())
    }

    pub fn apply(&self, s: &BasisState, cutoffs: &Cutoffs) -> Option<(BasisState, f64)> {
        let mut state = *s;
        let mut amp = 1.0;
        for e in self.0.iter().rev() {
            let (t, a) = e.apply(&state, cutoffs)?;
            state = t;
            amp *= a;
        }
        Some((state, amp))
    }
}

impl StateMap for Monomial {
    fn map(&self, state: &BasisState, cutoffs: &Cutoffs) -> Option<(BasisState, f64)> {
        self.apply(state, cutoffs)
    }
}

/// Projector σ†σ for a lowering operator σ.
pub fn occupied_projector(lower: Elementary) -> Monomial {
    Monomial::new([lower.adjoint(), lower])
}

/// Projector σσ† for a lowering operator σ.
pub fn vacant_projector(lower: Elementary) -> Monomial {
    Monomial::new([lower, lower.adjoint()])
}

/// Complex sparse matrix in canonical triplet form (sorted by row then
/// column, no duplicates, no explicit zeros).
#[derive(Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
    basis_id: u64,
}

impl fmt::Debug for SparseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SparseOperator")
            .field("dim", &self.dim)
            .field("nnz", &self.entries.len())
            .field("basis_id", &format_args!("{:#x}", self.basis_id))
            .finish()
    }
}

impl SparseOperator {
    pub fn from_triplets(
        basis_id: u64,
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> SparseOperator {
        let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside dimension {dim}");
            *acc.entry((r, c)).or_default() += v;
        }
        let entries = acc
            .into_iter()
            .filter(|(_, v)| *v != Complex64::new(0.0, 0.0))
            .map(|((r, c), v)| (r, c, v))
            .collect();
        SparseOperator { dim, entries, basis_id }
    }

    pub fn zero(basis: &Basis) -> SparseOperator {
        SparseOperator { dim: basis.len(), entries: Vec::new(), basis_id: basis.id() }
    }

    pub fn identity(basis: &Basis) -> SparseOperator {
        SparseOperator {
            dim: basis.len(),
            entries: (0..basis.len()).map(|i| (i, i, Complex64::new(1.0, 0.0))).collect(),
            basis_id: basis.id(),
        }
    }

    /// `coef · m` restricted to the basis. Images outside the basis are
    /// dropped.
    pub fn from_monomial(basis: &Basis, m: &Monomial, coef: f64) -> SparseOperator {
        Self::from_terms(basis, [(coef, m)])
    }

    /// Sum of `coef · monomial` terms restricted to the basis.
    pub fn from_terms<'a>(
        basis: &Basis,
        terms: impl IntoIterator<Item = (f64, &'a Monomial)>,
    ) -> SparseOperator {
        let cutoffs = basis.cutoffs();
        let terms: Vec<_> = terms.into_iter().filter(|(c, _)| *c != 0.0).collect();
        let mut triplets = Vec::new();
        for (col, s) in basis.states().iter().enumerate() {
            for (coef, m) in &terms {
                if let Some((t, amp)) = m.apply(s, &cutoffs) {
                    if let Some(row) = basis.index_of(&t) {
                        triplets.push((row, col, Complex64::new(coef * amp, 0.0)));
                    }
                }
            }
        }
        Self::from_triplets(basis.id(), basis.len(), triplets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis_id(&self) -> u64 {
        self.basis_id
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries
            .binary_search_by(|&(r, c, _)| (r, c).cmp(&(row, col)))
            .map(|i| self.entries[i].2)
            .unwrap_or_default()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm()).fold(0.0, f64::max)
    }

    fn check_compatible(&self, other: &SparseOperator) -> Result<(), OperatorError> {
        if self.dim != other.dim {
            return Err(OperatorError::DimensionMismatch(self.dim, other.dim));
        }
        if self.basis_id != other.basis_id {
            return Err(OperatorError::BasisMismatch(self.basis_id, other.basis_id));
        }
        Ok(())
    }

    pub fn adjoint(&self) -> SparseOperator {
        Self::from_triplets(
            self.basis_id,
            self.dim,
            self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())),
        )
    }

    pub fn scale(&self, alpha: Complex64) -> SparseOperator {
        Self::from_triplets(
            self.basis_id,
            self.dim,
            self.entries.iter().map(|&(r, c, v)| (r, c, alpha * v)),
        )
    }

    /// `alpha·A + beta·B`.
    pub fn add(
        a: &SparseOperator,
        b: &SparseOperator,
        alpha: Complex64,
        beta: Complex64,
    ) -> Result<SparseOperator, OperatorError> {
        a.check_compatible(b)?;
        Ok(Self::from_triplets(
            a.basis_id,
            a.dim,
            a.entries
                .iter()
                .map(|&(r, c, v)| (r, c, alpha * v))
                .chain(b.entries.iter().map(|&(r, c, v)| (r, c, beta * v))),
        ))
    }

    pub fn sum(&self, other: &SparseOperator) -> Result<SparseOperator, OperatorError> {
        let one = Complex64::new(1.0, 0.0);
        Self::add(self, other, one, one)
    }

    /// Matrix product `A·B`.
    pub fn multiply(a: &SparseOperator, b: &SparseOperator) -> Result<SparseOperator, OperatorError> {
        a.check_compatible(b)?;
        let rows_of_b = b.row_ranges();
        let mut triplets = Vec::new();
        for &(r, k, va) in &a.entries {
            let (lo, hi) = rows_of_b[k];
            for &(_, c, vb) in &b.entries[lo..hi] {
                triplets.push((r, c, va * vb));
            }
        }
        Ok(Self::from_triplets(a.basis_id, a.dim, triplets))
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(a: &SparseOperator, b: &SparseOperator) -> Result<SparseOperator, OperatorError> {
        let one = Complex64::new(1.0, 0.0);
        Self::add(&Self::multiply(a, b)?, &Self::multiply(b, a)?, one, -one)
    }

    /// `max |A − A†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let one = Complex64::new(1.0, 0.0);
        Self::add(self, &self.adjoint(), one, -one)
            .expect("adjoint shares basis")
            .max_abs()
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries.iter().all(|&(r, c, _)| r == c)
    }

    /// `(start, end)` into `entries` for each row.
    fn row_ranges(&self) -> Vec<(usize, usize)> {
        let mut ranges = vec![(0, 0); self.dim];
        let mut i = 0;
        for (row, range) in ranges.iter_mut().enumerate() {
            let start = i;
            while i < self.entries.len() && self.entries[i].0 == row {
                i += 1;
            }
            *range = (start, i);
        }
        ranges
    }

    /// `A·x` for a dense vector.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![Complex64::default(); self.dim];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    /// Real part as a dense matrix. Panics if any entry has an imaginary part.
    pub fn to_dense_real(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            assert!(v.im == 0.0, "entry ({r}, {c}) is not real");
            m[(r, c)] = v.re;
        }
        m
    }

    /// Sparse triplet CSV: `row,col,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,re,im\n");
        for &(r, c, v) in &self.entries {
            out.push_str(&format!("{r},{c},{:e},{:e}\n", v.re, v.im));
        }
        out
    }
}

pub fn photon_ladder(basis: &Basis, mode: Mode, direction: Ladder) -> SparseOperator {
    let e = match direction {
        Ladder::Annihilate => Elementary::PhotonLower(mode),
        Ladder::Create => Elementary::PhotonRaise(mode),
    };
    SparseOperator::from_monomial(basis, &Monomial::one(e), 1.0)
}

/// σ_ω for one spin: Φ₁ → Φ₀.
pub fn molecular_lower(basis: &Basis, spin: Spin) -> SparseOperator {
    SparseOperator::from_monomial(basis, &Monomial::one(Elementary::MolecularLower(spin)), 1.0)
}

pub fn molecular_raise(basis: &Basis, spin: Spin) -> SparseOperator {
    SparseOperator::from_monomial(basis, &Monomial::one(Elementary::MolecularRaise(spin)), 1.0)
}

/// σ_Ω,i for one spin: excited → ground orbital of atom i.
pub fn atomic_lower(basis: &Basis, atom: Atom, spin: Spin) -> SparseOperator {
    SparseOperator::from_monomial(basis, &Monomial::one(Elementary::AtomicLower(atom, spin)), 1.0)
}

/// σ_n: nuclei apart → together.
pub fn nuclear_tunnel(basis: &Basis) -> SparseOperator {
    SparseOperator::from_monomial(basis, &Monomial::one(Elementary::TunnelLower), 1.0)
}

/// σ_Ωˢ,i on the given orbital level: spin ↑ → ↓.
pub fn electron_spinflip(basis: &Basis, atom: Atom, orbital: Orbital) -> SparseOperator {
    SparseOperator::from_monomial(
        basis,
        &Monomial::one(Elementary::ElectronSpinLower(atom, orbital)),
        1.0,
    )
}

/// σ_Ωⁿ,i: nuclear spin ↑ → ↓.
pub fn nuclear_spinflip(basis: &Basis, atom: Atom) -> SparseOperator {
    SparseOperator::from_monomial(basis, &Monomial::one(Elementary::NuclearSpinLower(atom)), 1.0)
}

/// σ_en,i = a_Ωˢ σ†_Ωˢ,i(ground) a†_Ωⁿ σ_Ωⁿ,i as a monomial.
pub fn spin_exchange_monomial(atom: Atom) -> Monomial {
    use Elementary::*;
    Monomial::new([
        PhotonLower(Mode::ElectronSpin),
        ElectronSpinRaise(atom, Orbital::Ground),
        PhotonRaise(Mode::NuclearSpin),
        NuclearSpinLower(atom),
    ])
}

/// σ_en,i restricted to the basis. Agrees with the product of the four
/// factor matrices whenever the basis is closed under each factor.
pub fn spin_exchange(basis: &Basis, atom: Atom) -> SparseOperator {
    SparseOperator::from_monomial(basis, &spin_exchange_monomial(atom), 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{ModeSpec, N_MODES};

    fn modes(c: [u8; N_MODES]) -> [ModeSpec; N_MODES] {
        Mode::ALL.map(|label| ModeSpec {
            label,
            frequency: 1.0,
            gamma_out: 0.0,
            mu: 0.0,
            cutoff: c[label.index()],
        })
    }

    fn empty() -> BasisState {
        BasisState {
            photons: [0; N_MODES],
            electrons: [false; 8],
            apart: true,
            nuclear_up: [true, true],
        }
    }

    fn with_photons(mode: Mode, ps: &[u8]) -> Basis {
        let states = ps.iter().map(|&p| {
            let mut s = empty();
            s.photons[mode.index()] = p;
            s
        });
        let mut c = [0; N_MODES];
        c[mode.index()] = *ps.iter().max().unwrap();
        Basis::from_states(states, modes(c)).unwrap()
    }

    #[test]
    fn ladder_amplitudes() {
        let b = with_photons(Mode::AtomUp, &[0, 1, 2]);
        let a = photon_ladder(&b, Mode::AtomUp, Ladder::Annihilate);
        assert_eq!(a.get(0, 1), Complex64::new(1.0, 0.0));
        assert_eq!(a.get(1, 2), Complex64::new(2f64.sqrt(), 0.0));
        // a|0> = 0: column 0 is empty
        assert!(a.entries().iter().all(|&(_, c, _)| c != 0));
        let ad = photon_ladder(&b, Mode::AtomUp, Ladder::Create);
        assert_eq!(ad.get(2, 1), Complex64::new(2f64.sqrt(), 0.0));
        // creation at the cutoff annihilates
        assert!(ad.entries().iter().all(|&(_, c, _)| c != 2));
        assert_eq!(ad, a.adjoint());
    }

    fn pair_basis(a: usize, b: usize) -> Basis {
        let states = [(false, false), (false, true), (true, false), (true, true)].map(|(x, y)| {
            let mut s = empty();
            s.electrons[a] = x;
            s.electrons[b] = y;
            s
        });
        Basis::from_states(states, modes([0; N_MODES])).unwrap()
    }

    fn state_with(bits: &[(usize, bool)]) -> BasisState {
        let mut s = empty();
        for &(i, v) in bits {
            s.electrons[i] = v;
        }
        s
    }

    #[test]
    fn molecular_lowering() {
        let (p1, p0) = (antibonding_slot(Spin::Up), bonding_slot(Spin::Up));
        let b = pair_basis(p1, p0);
        let sigma = molecular_lower(&b, Spin::Up);
        let from = b.index_of(&state_with(&[(p1, true), (p0, false)])).unwrap();
        let to = b.index_of(&state_with(&[(p1, false), (p0, true)])).unwrap();
        assert_eq!(sigma.nnz(), 1);
        assert_eq!(sigma.get(to, from), Complex64::new(1.0, 0.0));
        assert_eq!(sigma.adjoint(), molecular_raise(&b, Spin::Up));
        // nilpotent
        assert_eq!(SparseOperator::multiply(&sigma, &sigma).unwrap().nnz(), 0);
    }

    #[test]
    fn atomic_lowering_and_projector() {
        let exc = slot(Atom::Second, Orbital::Excited, Spin::Down);
        let gnd = slot(Atom::Second, Orbital::Ground, Spin::Down);
        let b = pair_basis(exc, gnd);
        let sigma = atomic_lower(&b, Atom::Second, Spin::Down);
        let from = b.index_of(&state_with(&[(exc, true)])).unwrap();
        let to = b.index_of(&state_with(&[(gnd, true)])).unwrap();
        assert_eq!(sigma.get(to, from), Complex64::new(1.0, 0.0));
        let vac = b.index_of(&empty()).unwrap();
        assert!(sigma.entries().iter().all(|&(_, c, _)| c != vac));
        let proj = SparseOperator::multiply(&sigma.adjoint(), &sigma).unwrap();
        assert!(proj.is_diagonal());
        assert_eq!(proj.nnz(), 1);
        assert_eq!(proj.get(from, from), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn tunnelling() {
        let mut together = empty();
        together.apart = false;
        let b = Basis::from_states([empty(), together], modes([0; N_MODES])).unwrap();
        let sn = nuclear_tunnel(&b);
        let (i0, i1) = (b.index_of(&together).unwrap(), b.index_of(&empty()).unwrap());
        assert_eq!(sn.get(i0, i1), Complex64::new(1.0, 0.0));
        assert_eq!(sn.nnz(), 1);
        let p = SparseOperator::multiply(&sn.adjoint(), &sn).unwrap();
        assert_eq!(p.entries(), &[(i1, i1, Complex64::new(1.0, 0.0))]);
    }

    #[test]
    fn electron_spin_flip() {
        let up = slot(Atom::First, Orbital::Excited, Spin::Up);
        let down = slot(Atom::First, Orbital::Excited, Spin::Down);
        let b = pair_basis(up, down);
        let s = electron_spinflip(&b, Atom::First, Orbital::Excited);
        let from = b.index_of(&state_with(&[(up, true)])).unwrap();
        let to = b.index_of(&state_with(&[(down, true)])).unwrap();
        assert_eq!(s.entries(), &[(to, from, Complex64::new(1.0, 0.0))]);
        // adjoint raises ↓ → ↑
        assert_eq!(s.adjoint().entries(), &[(from, to, Complex64::new(1.0, 0.0))]);
        // the ground-level variant does not touch these slots
        assert_eq!(electron_spinflip(&b, Atom::First, Orbital::Ground).nnz(), 0);
    }

    #[test]
    fn nuclear_spin_completeness() {
        let mut down = empty();
        down.nuclear_up[0] = false;
        let b = Basis::from_states([empty(), down], modes([0; N_MODES])).unwrap();
        let s = nuclear_spinflip(&b, Atom::First);
        assert_eq!(s.nnz(), 1);
        assert_eq!(
            s.get(b.index_of(&down).unwrap(), b.index_of(&empty()).unwrap()),
            Complex64::new(1.0, 0.0)
        );
        let sum = SparseOperator::multiply(&s.adjoint(), &s)
            .unwrap()
            .sum(&SparseOperator::multiply(&s, &s.adjoint()).unwrap())
            .unwrap();
        assert_eq!(sum, SparseOperator::identity(&b));
    }

    /// Three states: before the exchange, after it, and the intermediate.
    fn exchange_fixture() -> (Basis, BasisState, BasisState) {
        let gu = slot(Atom::First, Orbital::Ground, Spin::Up);
        let gd = slot(Atom::First, Orbital::Ground, Spin::Down);
        let mut before = state_with(&[(gd, true)]);
        before.photons[Mode::ElectronSpin.index()] = 1;
        let mut after = state_with(&[(gu, true)]);
        after.photons[Mode::NuclearSpin.index()] = 1;
        after.nuclear_up[0] = false;
        (Basis::from_states([before, after], modes([0, 0, 0, 0, 1, 1])).unwrap(), before, after)
    }

    #[test]
    fn spin_exchange_element() {
        let (b, before, after) = exchange_fixture();
        let sx = spin_exchange(&b, Atom::First);
        let (i, j) = (b.index_of(&before).unwrap(), b.index_of(&after).unwrap());
        assert_eq!(sx.entries(), &[(j, i, Complex64::new(1.0, 0.0))]);
        assert_eq!(spin_exchange(&b, Atom::Second).nnz(), 0);
        // σ_en† σ_en returns the starting state
        let back = SparseOperator::multiply(&sx.adjoint(), &sx).unwrap();
        assert_eq!(back.entries(), &[(i, i, Complex64::new(1.0, 0.0))]);
    }

    #[test]
    fn spin_exchange_equals_factor_product_on_closed_basis() {
        let (_, before, _) = exchange_fixture();
        // close the basis under every factor and its adjoint
        use Elementary::*;
        let factors = [
            PhotonLower(Mode::ElectronSpin),
            ElectronSpinRaise(Atom::First, Orbital::Ground),
            PhotonRaise(Mode::NuclearSpin),
            NuclearSpinLower(Atom::First),
        ];
        let gens: Vec<Monomial> = factors
            .iter()
            .flat_map(|&e| [Monomial::one(e), Monomial::one(e.adjoint())])
            .collect();
        let refs: Vec<&dyn StateMap> = gens.iter().map(|m| m as &dyn StateMap).collect();
        let b = crate::hilbert::enumerate_reachable(before, &refs, modes([0, 0, 0, 0, 1, 1])).unwrap();
        let mats: Vec<SparseOperator> = factors
            .iter()
            .map(|&e| SparseOperator::from_monomial(&b, &Monomial::one(e), 1.0))
            .collect();
        let product = mats[1..]
            .iter()
            .fold(mats[0].clone(), |acc, m| SparseOperator::multiply(&acc, m).unwrap());
        assert_eq!(product, spin_exchange(&b, Atom::First));
    }

    #[test]
    fn algebra_identities() {
        let b = with_photons(Mode::ElectronSpin, &[0, 1, 2]);
        let a = photon_ladder(&b, Mode::ElectronSpin, Ladder::Annihilate);
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(SparseOperator::add(&a, &a, one, -one).unwrap().nnz(), 0);
        assert_eq!(SparseOperator::multiply(&SparseOperator::identity(&b), &a).unwrap(), a);
        assert_eq!(a.adjoint().adjoint(), a);
        let x = a.sum(&a.adjoint()).unwrap();
        assert_eq!(x.adjoint(), x);
        assert_eq!(x.hermiticity_defect(), 0.0);
    }

    #[test]
    fn basis_mismatch_is_an_error() {
        let b1 = with_photons(Mode::ElectronSpin, &[0, 1]);
        let b2 = with_photons(Mode::NuclearSpin, &[0, 1]);
        let a1 = photon_ladder(&b1, Mode::ElectronSpin, Ladder::Annihilate);
        let a2 = photon_ladder(&b2, Mode::NuclearSpin, Ladder::Annihilate);
        assert!(matches!(
            SparseOperator::multiply(&a1, &a2),
            Err(OperatorError::BasisMismatch(..))
        ));
        let b3 = with_photons(Mode::ElectronSpin, &[0, 1, 2]);
        let a3 = photon_ladder(&b3, Mode::ElectronSpin, Ladder::Annihilate);
        assert!(matches!(
            SparseOperator::sum(&a1, &a3),
            Err(OperatorError::DimensionMismatch(2, 3))
        ));
    }
}
