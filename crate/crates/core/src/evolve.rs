//! Split-step integration: exact unitary conjugation through a spectral
//! propagator, followed by an explicit Euler step of the dissipative
//! generator.
//!
//! The Hamiltonian is real symmetric and block diagonal over its connected
//! components. Every photon jump maps one component into (at most) one other,
//! after the components are merged into a jump-closed [`Partition`], so a
//! density matrix that starts block diagonal stays block diagonal. The
//! integrator stores each diagonal block in the eigenbasis of that block:
//! the unitary step is then an elementwise phase map, and the dissipator is
//! applied in the occupation basis, where the jumps are single-entry gathers.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{Basis, BasisState, N_SLOTS};
use crate::lindblad::{apply_lindblad_total, Channel, DensityMatrix, LindbladError, Matrix};
use crate::operators::SparseOperator;

/// Largest trace change a single step may introduce.
pub const MAX_STEP_TRACE_DRIFT: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("hbar must be positive and finite, got {0}")]
    InvalidHbar(f64),
    #[error("Hamiltonian is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("Hamiltonian has imaginary entries; only real symmetric Hamiltonians are supported")]
    ComplexHamiltonian,
    #[error("eigen-solver did not converge on a block of size {0}")]
    EigenFailure(usize),
    #[error("operator dimension {operator} does not match state dimension {state}")]
    DimensionMismatch { operator: usize, state: usize },
    #[error("propagator was built for dt = {built:e}, step requested dt = {requested:e}")]
    StepMismatch { built: f64, requested: f64 },
    #[error("jump operator of {0} is not a one-to-one real ladder on the basis")]
    UnsupportedJump(String),
    #[error("density matrix couples states in different blocks ({0}, {1})")]
    NotBlockDiagonal(usize, usize),
    #[error(
        "trace drift {drift:e} at step {step} (t = {time:e} s) exceeds {limit:e}; \
         reduce dt (currently {dt:e} s)"
    )]
    TraceDrift { step: usize, time: f64, drift: f64, limit: f64, dt: f64 },
    #[error("non-finite density matrix entry at step {step}; reduce dt (currently {dt:e} s)")]
    NonFinite { step: usize, dt: f64 },
    #[error("configuration `{0}` matches no basis state")]
    UnknownConfiguration(String),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
}

// ---------------------------------------------------------------------------
// Partition

/// Disjoint blocks of basis indices, ordered by their smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
    position: Vec<usize>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.0[hi] = lo;
        true
    }
}

impl Partition {
    fn from_union_find(uf: &mut UnionFind) -> Partition {
        let n = uf.0.len();
        let mut label: HashMap<usize, usize> = HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut block_of = vec![0; n];
        let mut position = vec![0; n];
        for i in 0..n {
            let root = uf.find(i);
            let b = *label.entry(root).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            block_of[i] = b;
            position[i] = blocks[b].len();
            blocks[b].push(i);
        }
        Partition { blocks, block_of, position }
    }

    /// Connected components of the coupling graph of `h`.
    pub fn components(h: &SparseOperator) -> Partition {
        let mut uf = UnionFind::new(h.dim());
        for &(r, c, _) in h.entries() {
            uf.union(r, c);
        }
        Partition::from_union_find(&mut uf)
    }

    /// Coarsest-needed merge of the components of `h` such that each jump
    /// maps every block into a single block.
    pub fn jump_closed(h: &SparseOperator, jumps: &[&SparseOperator]) -> Partition {
        let mut uf = UnionFind::new(h.dim());
        for &(r, c, _) in h.entries() {
            uf.union(r, c);
        }
        loop {
            let mut changed = false;
            for jump in jumps {
                let mut target_of: HashMap<usize, usize> = HashMap::new();
                for &(r, c, _) in jump.entries() {
                    let src = uf.find(c);
                    match target_of.get(&src) {
                        Some(&t) => changed |= uf.union(t, r),
                        None => {
                            target_of.insert(src, r);
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        Partition::from_union_find(&mut uf)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, state: usize) -> usize {
        self.block_of[state]
    }

    pub fn position(&self, state: usize) -> usize {
        self.position[state]
    }

    pub fn largest(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }
}

// ---------------------------------------------------------------------------
// Propagator

/// Eigen-decomposition of one diagonal block of H, with the phase factors
/// of `e^{−iHdt/ħ}` cached for the conjugation ρ_jk ↦ ρ_jk e^{−i(E_j−E_k)dt/ħ}.
#[derive(Debug, Clone)]
pub struct EigenBlock {
    pub states: Vec<usize>,
    pub energies: Vec<f64>,
    /// Row-major; column `c` is the eigenvector of `energies[c]`.
    vectors: Vec<f64>,
    /// Row-major transpose of `vectors`.
    vectors_t: Vec<f64>,
    phase_cos: Vec<f64>,
    phase_sin: Vec<f64>,
}

impl EigenBlock {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn vector(&self, row: usize, col: usize) -> f64 {
        self.vectors[row * self.len() + col]
    }

    fn set_phases(&mut self, dt: f64, hbar: f64) {
        let n = self.len();
        self.phase_cos = vec![0.0; n * n];
        self.phase_sin = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                let theta = (self.energies[r] - self.energies[c]) * dt / hbar;
                self.phase_cos[r * n + c] = theta.cos();
                self.phase_sin[r * n + c] = theta.sin();
            }
        }
    }

    /// `V diag(e^{−iE dt/ħ}) Vᵀ` on the block.
    fn unitary(&self, dt: f64, hbar: f64) -> Matrix {
        let n = self.len();
        let phases: Vec<Complex64> =
            self.energies.iter().map(|e| Complex64::from_polar(1.0, -e * dt / hbar)).collect();
        Matrix::from_fn(n, n, |r, c| {
            (0..n).map(|k| phases[k] * (self.vector(r, k) * self.vector(c, k))).sum()
        })
    }
}

#[derive(Debug, Clone)]
pub struct Propagator {
    dim: usize,
    basis_id: u64,
    dt: f64,
    hbar: f64,
    partition: Partition,
    blocks: Vec<EigenBlock>,
}

/// Propagator over the connected components of `h`.
pub fn spectral_propagator(h: &SparseOperator, dt: f64, hbar: f64) -> Result<Propagator, EvolveError> {
    Propagator::with_partition(h, Partition::components(h), dt, hbar)
}

fn validate_step(dt: f64, hbar: f64) -> Result<(), EvolveError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(EvolveError::InvalidStep(dt));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(EvolveError::InvalidHbar(hbar));
    }
    Ok(())
}

impl Propagator {
    /// Diagonalizes `h` block by block. Every nonzero entry of `h` must lie
    /// inside one block of `partition`.
    pub fn with_partition(
        h: &SparseOperator,
        partition: Partition,
        dt: f64,
        hbar: f64,
    ) -> Result<Propagator, EvolveError> {
        validate_step(dt, hbar)?;
        let scale = h.max_abs().max(f64::MIN_POSITIVE);
        let defect = h.hermiticity_defect();
        if defect > 1e-12 * scale {
            return Err(EvolveError::NotHermitian(defect));
        }
        if h.entries().iter().any(|&(_, _, v)| v.im != 0.0) {
            return Err(EvolveError::ComplexHamiltonian);
        }
        let mut dense: Vec<Vec<f64>> = partition.blocks().iter().map(|b| vec![0.0; b.len() * b.len()]).collect();
        for &(r, c, v) in h.entries() {
            let b = partition.block_of(r);
            if partition.block_of(c) != b {
                return Err(EvolveError::NotBlockDiagonal(r, c));
            }
            let n = partition.blocks()[b].len();
            dense[b][partition.position(r) * n + partition.position(c)] = v.re;
        }
        let blocks = partition
            .blocks()
            .par_iter()
            .zip(dense.into_par_iter())
            .map(|(states, m)| {
                let n = states.len();
                let m = DMatrix::from_row_slice(n, n, &m);
                let sym = (&m + m.transpose()) * 0.5;
                let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(EvolveError::EigenFailure(n))?;
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
                let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
                let mut vectors = vec![0.0; n * n];
                for (col, &k) in order.iter().enumerate() {
                    for row in 0..n {
                        vectors[row * n + col] = eig.eigenvectors[(row, k)];
                    }
                }
                let mut vectors_t = vec![0.0; n * n];
                for r in 0..n {
                    for c in 0..n {
                        vectors_t[c * n + r] = vectors[r * n + c];
                    }
                }
                let mut block = EigenBlock {
                    states: states.clone(),
                    energies,
                    vectors,
                    vectors_t,
                    phase_cos: Vec::new(),
                    phase_sin: Vec::new(),
                };
                block.set_phases(dt, hbar);
                Ok(block)
            })
            .collect::<Result<Vec<_>, EvolveError>>()?;
        Ok(Propagator { dim: h.dim(), basis_id: h.basis_id(), dt, hbar, partition, blocks })
    }

    /// Same decomposition, phases recomputed for a new step.
    pub fn with_dt(&self, dt: f64) -> Result<Propagator, EvolveError> {
        validate_step(dt, self.hbar)?;
        let mut p = self.clone();
        p.dt = dt;
        for b in &mut p.blocks {
            b.set_phases(dt, self.hbar);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn basis_id(&self) -> u64 {
        self.basis_id
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn blocks(&self) -> &[EigenBlock] {
        &self.blocks
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.blocks.iter().flat_map(|b| b.energies.iter().copied()).collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// `‖U†U − I‖_max` of the reconstructed one-step propagator.
    pub fn unitarity_defect(&self) -> f64 {
        self.blocks
            .par_iter()
            .map(|b| {
                let u = b.unitary(self.dt, self.hbar);
                let prod = u.adjoint() * &u;
                (prod - Matrix::identity(b.len(), b.len())).iter().map(|z| z.norm()).fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// `‖VΛVᵀ − H‖_max` over the blocks.
    pub fn reconstruction_defect(&self, h: &SparseOperator) -> f64 {
        self.blocks
            .par_iter()
            .map(|b| {
                let n = b.len();
                let mut worst: f64 = 0.0;
                for r in 0..n {
                    for c in 0..n {
                        let rebuilt: f64 = (0..n).map(|k| b.vector(r, k) * b.energies[k] * b.vector(c, k)).sum();
                        let exact = h.get(b.states[r], b.states[c]).re;
                        worst = worst.max((rebuilt - exact).abs());
                    }
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Dense `e^{−iHdt/ħ}` over the whole basis. Intended for small bases.
    pub fn unitary_dense(&self) -> Matrix {
        let mut u = Matrix::zeros(self.dim, self.dim);
        for b in &self.blocks {
            let ub = b.unitary(self.dt, self.hbar);
            for (r, &gr) in b.states.iter().enumerate() {
                for (c, &gc) in b.states.iter().enumerate() {
                    u[(gr, gc)] = ub[(r, c)];
                }
            }
        }
        u
    }
}

fn hermitize(m: &mut Matrix) {
    let h = (&*m + m.adjoint()).scale(0.5);
    *m = h;
}

/// One split step on a dense density matrix: `ρ̃ = UρU†`, then
/// `ρ′ = ρ̃ + (dt/ħ) L(ρ̃)`, then `ρ′ ← (ρ′ + ρ′†)/2`.
pub fn step(
    rho: &DensityMatrix,
    propagator: &Propagator,
    channels: &[Channel],
    dt: f64,
    hbar: f64,
) -> Result<DensityMatrix, EvolveError> {
    validate_step(dt, hbar)?;
    if dt != propagator.dt() || hbar != propagator.hbar() {
        return Err(EvolveError::StepMismatch { built: propagator.dt(), requested: dt });
    }
    if rho.dim() != propagator.dim() {
        return Err(EvolveError::DimensionMismatch { operator: propagator.dim(), state: rho.dim() });
    }
    let u = propagator.unitary_dense();
    let tilde = &u * &rho.0 * u.adjoint();
    let mut next = &tilde + apply_lindblad_total(channels, &tilde)?.scale(dt / hbar);
    hermitize(&mut next);
    let drift = (next.trace() - rho.trace()).norm();
    if drift > MAX_STEP_TRACE_DRIFT || !drift.is_finite() {
        return Err(EvolveError::TraceDrift { step: 0, time: dt, drift, limit: MAX_STEP_TRACE_DRIFT, dt });
    }
    Ok(DensityMatrix(next))
}

// ---------------------------------------------------------------------------
// Block integrator
//
// A Hermitian block ρ = R + iI (R symmetric, I antisymmetric) is stored as the
// single real matrix X = R + I. Real congruences VXVᵀ map symmetric to
// symmetric and antisymmetric to antisymmetric, and the dissipative generator
// acts on real and imaginary parts alike, so every operation of the step
// except the phase map works on X directly.

/// One jump restricted to one source block: the generator gains
/// `a_i a_j X_src[i, j]` at `(i′, j′)` for every pair of local hops
/// `i → i′`, `j → j′`. Amplitudes carry the square root of the rate.
#[derive(Debug, Clone)]
struct Gather {
    source: usize,
    from: Vec<usize>,
    to: Vec<usize>,
    amp: Vec<f64>,
}

/// Split-step integrator on block-diagonal density matrices.
#[derive(Debug, Clone)]
pub struct SplitStep {
    propagator: Propagator,
    /// Incoming gathers, indexed by target block.
    incoming: Vec<Vec<Gather>>,
    /// Local diagonal of `Σ rate · J†J` per block.
    decay: Vec<Vec<f64>>,
    /// Sum of all rates.
    total_rate: f64,
    renormalize: bool,
}

/// A density matrix stored as its diagonal blocks, each in the eigenbasis of
/// its block of H and packed as `Re ρ + Im ρ` (row-major `n × n`).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDensity {
    blocks: Vec<Vec<f64>>,
    active: Vec<bool>,
}

impl BlockDensity {
    pub fn is_active(&self, block: usize) -> bool {
        self.active[block]
    }
}

/// Scratch buffers for [`SplitStep::step`].
#[derive(Debug, Clone)]
pub struct Workspace {
    occupation: Vec<Vec<f64>>,
    generator: Vec<Vec<f64>>,
    half: Vec<Vec<f64>>,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub trace: f64,
    pub trace_change: f64,
}

/// Below this size a plain loop beats the packed kernel.
const SMALL_BLOCK: usize = 16;

/// `C = α A B + β C` for row-major `n × n` matrices.
fn gemm(n: usize, alpha: f64, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    assert!(a.len() >= n * n && b.len() >= n * n && c.len() >= n * n);
    if n <= SMALL_BLOCK {
        for i in 0..n {
            let mut row = [0.0; SMALL_BLOCK];
            for k in 0..n {
                let aik = a[i * n + k];
                for (r, bkj) in row[..n].iter_mut().zip(&b[k * n..k * n + n]) {
                    *r += aik * bkj;
                }
            }
            for (cij, r) in c[i * n..i * n + n].iter_mut().zip(&row[..n]) {
                *cij = if beta == 0.0 { alpha * r } else { beta * *cij + alpha * r };
            }
        }
        return;
    }
    let s = n as isize;
    // SAFETY: all three slices hold at least n² elements, addressed row-major.
    unsafe {
        matrixmultiply::dgemm(n, n, n, alpha, a.as_ptr(), s, 1, b.as_ptr(), s, 1, beta, c.as_mut_ptr(), s, 1);
    }
}

fn unpack(x: &[f64], n: usize, i: usize, j: usize) -> Complex64 {
    let (a, b) = (x[i * n + j], x[j * n + i]);
    Complex64::new(0.5 * (a + b), 0.5 * (a - b))
}

fn pack(m: &Matrix, rows: &[usize]) -> Vec<f64> {
    let n = rows.len();
    let mut x = vec![0.0; n * n];
    for (i, &gi) in rows.iter().enumerate() {
        for (j, &gj) in rows.iter().enumerate() {
            let z = m[(gi, gj)];
            x[i * n + j] = z.re + z.im;
        }
    }
    x
}

impl SplitStep {
    pub fn new(h: &SparseOperator, channels: &[Channel], dt: f64, hbar: f64) -> Result<SplitStep, EvolveError> {
        validate_step(dt, hbar)?;
        let mut jumps: Vec<(f64, SparseOperator, String)> = Vec::new();
        for ch in channels {
            if ch.jump.dim() != h.dim() {
                return Err(EvolveError::DimensionMismatch { operator: ch.jump.dim(), state: h.dim() });
            }
            if ch.gamma_out > 0.0 {
                jumps.push((ch.gamma_out, ch.jump.clone(), ch.mode.label().to_string()));
            }
            if ch.gamma_in > 0.0 {
                jumps.push((ch.gamma_in, ch.jump.adjoint(), format!("{}†", ch.mode.label())));
            }
        }
        let refs: Vec<&SparseOperator> = jumps.iter().map(|(_, j, _)| j).collect();
        let partition = Partition::jump_closed(h, &refs);
        let propagator = Propagator::with_partition(h, partition, dt, hbar)?;
        SplitStep::from_propagator(propagator, &jumps)
    }

    fn from_propagator(propagator: Propagator, jumps: &[(f64, SparseOperator, String)]) -> Result<SplitStep, EvolveError> {
        let part = propagator.partition().clone();
        let mut incoming: Vec<Vec<Gather>> = vec![Vec::new(); part.len()];
        let mut decay: Vec<Vec<f64>> = part.blocks().iter().map(|b| vec![0.0; b.len()]).collect();
        let mut total_rate = 0.0;
        for (rate, jump, name) in jumps {
            total_rate += rate;
            let root = rate.sqrt();
            let mut seen_rows = vec![false; jump.dim()];
            let mut seen_cols = vec![false; jump.dim()];
            let mut by_source: Vec<Option<(usize, Gather)>> = vec![None; part.len()];
            for &(r, c, v) in jump.entries() {
                if v.im != 0.0 || seen_rows[r] || seen_cols[c] {
                    return Err(EvolveError::UnsupportedJump(name.clone()));
                }
                seen_rows[r] = true;
                seen_cols[c] = true;
                let (src, tgt) = (part.block_of(c), part.block_of(r));
                let (t, g) = by_source[src].get_or_insert_with(|| {
                    (tgt, Gather { source: src, from: Vec::new(), to: Vec::new(), amp: Vec::new() })
                });
                if *t != tgt {
                    return Err(EvolveError::NotBlockDiagonal(r, c));
                }
                g.from.push(part.position(c));
                g.to.push(part.position(r));
                g.amp.push(root * v.re);
                decay[src][part.position(c)] += rate * v.re * v.re;
            }
            for (tgt, g) in by_source.into_iter().flatten() {
                incoming[tgt].push(g);
            }
        }
        Ok(SplitStep { propagator, incoming, decay, total_rate, renormalize: false })
    }

    /// Rescale the trace to its previous value after every step. Off by
    /// default; meant for exploratory runs only.
    pub fn with_renormalization(mut self, on: bool) -> SplitStep {
        self.renormalize = on;
        self
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn dt(&self) -> f64 {
        self.propagator.dt
    }

    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    fn buffers(&self) -> Vec<Vec<f64>> {
        self.propagator.blocks.iter().map(|b| vec![0.0; b.len() * b.len()]).collect()
    }

    pub fn workspace(&self) -> Workspace {
        Workspace { occupation: self.buffers(), generator: self.buffers(), half: self.buffers() }
    }

    pub fn zero_density(&self) -> BlockDensity {
        BlockDensity { blocks: self.buffers(), active: vec![false; self.propagator.blocks.len()] }
    }

    /// `|i⟩⟨i|` for basis index `i`.
    pub fn pure_state(&self, index: usize) -> BlockDensity {
        let mut rho = self.zero_density();
        let part = self.propagator.partition();
        let b = part.block_of(index);
        let r = part.position(index);
        let eb = &self.propagator.blocks[b];
        let n = eb.len();
        for j in 0..n {
            for k in 0..n {
                rho.blocks[b][j * n + k] = eb.vector(r, j) * eb.vector(r, k);
            }
        }
        rho.active[b] = true;
        rho
    }

    /// Imports the Hermitian part of a dense density matrix; fails if it
    /// couples different blocks.
    pub fn from_dense(&self, rho: &DensityMatrix) -> Result<BlockDensity, EvolveError> {
        let dim = self.propagator.dim;
        if rho.dim() != dim {
            return Err(EvolveError::DimensionMismatch { operator: dim, state: rho.dim() });
        }
        let part = self.propagator.partition();
        for r in 0..dim {
            for c in 0..dim {
                if rho.0[(r, c)] != Complex64::new(0.0, 0.0) && part.block_of(r) != part.block_of(c) {
                    return Err(EvolveError::NotBlockDiagonal(r, c));
                }
            }
        }
        let mut out = self.zero_density();
        for (b, eb) in self.propagator.blocks.iter().enumerate() {
            let occ = pack(&rho.0, &eb.states);
            if occ.iter().any(|&x| x != 0.0) {
                let mut half = vec![0.0; occ.len()];
                self.accumulate_eigen(b, 1.0, &occ, &mut half, 0.0, &mut out.blocks[b]);
                out.active[b] = true;
            }
        }
        Ok(out)
    }

    /// Dense density matrix in the occupation basis. Intended for small bases.
    pub fn to_dense(&self, rho: &BlockDensity) -> DensityMatrix {
        let dim = self.propagator.dim;
        let mut m = Matrix::zeros(dim, dim);
        for (b, eb) in self.propagator.blocks.iter().enumerate() {
            if !rho.active[b] {
                continue;
            }
            let n = eb.len();
            let occ = self.block_occupation(b, rho);
            for (i, &gi) in eb.states.iter().enumerate() {
                for (j, &gj) in eb.states.iter().enumerate() {
                    m[(gi, gj)] = unpack(&occ, n, i, j);
                }
            }
        }
        DensityMatrix(m)
    }

    /// `out = V X Vᵀ`.
    fn to_occupation(&self, b: usize, x: &[f64], half: &mut [f64], out: &mut [f64]) {
        let eb = &self.propagator.blocks[b];
        let n = eb.len();
        gemm(n, 1.0, &eb.vectors, x, 0.0, half);
        gemm(n, 1.0, half, &eb.vectors_t, 0.0, out);
    }

    /// `x ← β x + α Vᵀ M V`.
    fn accumulate_eigen(&self, b: usize, alpha: f64, m: &[f64], half: &mut [f64], beta: f64, x: &mut [f64]) {
        let eb = &self.propagator.blocks[b];
        let n = eb.len();
        gemm(n, 1.0, &eb.vectors_t, m, 0.0, half);
        gemm(n, alpha, half, &eb.vectors, beta, x);
    }

    fn block_occupation(&self, b: usize, rho: &BlockDensity) -> Vec<f64> {
        let len = rho.blocks[b].len();
        let mut half = vec![0.0; len];
        let mut out = vec![0.0; len];
        self.to_occupation(b, &rho.blocks[b], &mut half, &mut out);
        out
    }

    pub fn trace(&self, rho: &BlockDensity) -> f64 {
        rho.blocks
            .iter()
            .zip(&self.propagator.blocks)
            .map(|(x, eb)| (0..eb.len()).map(|i| x[i * eb.len() + i]).sum::<f64>())
            .sum()
    }

    /// Diagonal of ρ in the occupation basis, indexed by basis state.
    pub fn populations(&self, rho: &BlockDensity) -> Vec<f64> {
        let mut pops = vec![0.0; self.propagator.dim];
        let per_block: Vec<(usize, Vec<f64>)> = (0..self.propagator.blocks.len())
            .into_par_iter()
            .filter(|&b| rho.active[b])
            .map(|b| {
                let eb = &self.propagator.blocks[b];
                let n = eb.len();
                let mut half = vec![0.0; n * n];
                gemm(n, 1.0, &eb.vectors, &rho.blocks[b], 0.0, &mut half);
                let diag = (0..n)
                    .map(|i| (0..n).map(|k| half[i * n + k] * eb.vectors[i * n + k]).sum())
                    .collect();
                (b, diag)
            })
            .collect();
        for (b, diag) in per_block {
            for (i, p) in diag.into_iter().enumerate() {
                pops[self.propagator.blocks[b].states[i]] = p;
            }
        }
        pops
    }

    /// Smallest eigenvalue of ρ. Inactive blocks are zero and contribute 0.
    pub fn min_eigenvalue(&self, rho: &BlockDensity) -> f64 {
        let min = (0..self.propagator.blocks.len())
            .into_par_iter()
            .filter(|&b| rho.active[b])
            .map(|b| {
                let n = self.propagator.blocks[b].len();
                let x = &rho.blocks[b];
                let embed = DMatrix::<f64>::from_fn(2 * n, 2 * n, |r, c| {
                    let z = unpack(x, n, r % n, c % n);
                    match (r < n, c < n) {
                        (true, true) | (false, false) => z.re,
                        (true, false) => -z.im,
                        (false, true) => z.im,
                    }
                });
                SymmetricEigen::new(embed).eigenvalues.min()
            })
            .reduce(|| f64::INFINITY, f64::min);
        if rho.active.iter().any(|a| !a) {
            min.min(0.0)
        } else {
            min
        }
    }

    /// Advances `rho` by one step. `step_index` and `time` only label errors.
    pub fn step(
        &self,
        rho: &mut BlockDensity,
        work: &mut Workspace,
        step_index: usize,
        time: f64,
    ) -> Result<StepReport, EvolveError> {
        let before = self.trace(rho);
        let blocks = &self.propagator.blocks;

        // unitary conjugation, then move to the occupation basis
        rho.blocks
            .par_iter_mut()
            .zip(work.occupation.par_iter_mut())
            .zip(work.half.par_iter_mut())
            .enumerate()
            .filter(|(b, _)| rho.active[*b])
            .for_each(|(b, ((x, occ), half))| {
                let eb = &blocks[b];
                let n = eb.len();
                for r in 0..n {
                    for c in r + 1..n {
                        let (upper, lower) = (x[r * n + c], x[c * n + r]);
                        let (re, im) = (0.5 * (upper + lower), 0.5 * (upper - lower));
                        let (cs, sn) = (eb.phase_cos[r * n + c], eb.phase_sin[r * n + c]);
                        let (re2, im2) = (re * cs + im * sn, im * cs - re * sn);
                        x[r * n + c] = re2 + im2;
                        x[c * n + r] = re2 - im2;
                    }
                }
                self.to_occupation(b, x, half, occ);
            });

        let was_active = rho.active.clone();
        let next_active: Vec<bool> = (0..blocks.len())
            .map(|b| was_active[b] || self.incoming[b].iter().any(|g| was_active[g.source]))
            .collect();
        let dt_over_hbar = self.propagator.dt / self.propagator.hbar;
        let occupation = &work.occupation;

        // dissipative generator in the occupation basis, rotated back
        rho.blocks
            .par_iter_mut()
            .zip(work.generator.par_iter_mut())
            .zip(work.half.par_iter_mut())
            .enumerate()
            .filter(|(b, _)| next_active[*b])
            .for_each(|(b, ((x, gen), half))| {
                let n = blocks[b].len();
                if was_active[b] {
                    let d = &self.decay[b];
                    let occ = &occupation[b];
                    for i in 0..n {
                        let (grow, orow) = (&mut gen[i * n..(i + 1) * n], &occ[i * n..(i + 1) * n]);
                        for j in 0..n {
                            grow[j] = -0.5 * (d[i] + d[j]) * orow[j];
                        }
                    }
                } else {
                    gen.iter_mut().for_each(|v| *v = 0.0);
                }
                let mut row = Vec::new();
                for g in &self.incoming[b] {
                    if was_active[g.source] {
                        gather(g, &occupation[g.source], blocks[g.source].len(), gen, n, &mut row);
                    }
                }
                self.accumulate_eigen(b, dt_over_hbar, gen, half, 1.0, x);
            });
        rho.active = next_active;

        let mut after = self.trace(rho);
        if !after.is_finite() {
            return Err(EvolveError::NonFinite { step: step_index, dt: self.propagator.dt });
        }
        let change = after - before;
        if change.abs() > MAX_STEP_TRACE_DRIFT {
            return Err(EvolveError::TraceDrift {
                step: step_index,
                time,
                drift: change,
                limit: MAX_STEP_TRACE_DRIFT,
                dt: self.propagator.dt,
            });
        }
        if self.renormalize && after != 0.0 {
            let s = before / after;
            rho.blocks.par_iter_mut().for_each(|x| x.iter_mut().for_each(|v| *v *= s));
            after = before;
        }
        Ok(StepReport { trace: after, trace_change: change })
    }
}

fn gather(g: &Gather, src: &[f64], ns: usize, gen: &mut [f64], n: usize, row: &mut Vec<f64>) {
    let k = g.from.len();
    row.clear();
    row.resize(k, 0.0);
    assert!(src.len() >= ns * ns && gen.len() >= n * n);
    assert!(g.from.iter().all(|&i| i < ns) && g.to.iter().all(|&i| i < n) && g.amp.len() == k);
    for p in 0..k {
        // SAFETY: every index in `from` is < ns and every index in `to` is < n
        // (checked above), so all offsets fall inside `src` and `gen`.
        unsafe {
            let srow = src.as_ptr().add(*g.from.get_unchecked(p) * ns);
            for q in 0..k {
                *row.get_unchecked_mut(q) = *srow.add(*g.from.get_unchecked(q)) * *g.amp.get_unchecked(q);
            }
            let trow = gen.as_mut_ptr().add(*g.to.get_unchecked(p) * n);
            let a = *g.amp.get_unchecked(p);
            for q in 0..k {
                *trow.add(*g.to.get_unchecked(q)) += a * *row.get_unchecked(q);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Observables

/// An electron-nuclear configuration: everything in a basis state except the
/// photon numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "ConfigurationRecord", try_from = "ConfigurationRecord")]
pub struct Configuration {
    /// Occupied electron slots.
    pub occupied: [bool; N_SLOTS],
    /// `true` when the nuclei are in separate cavities (k = 1).
    pub apart: bool,
    /// Nuclear spins of nuclei 1 and 2, `true` = ↑.
    pub nuclear_up: [bool; 2],
}

/// JSON form of a [`Configuration`]: `{electrons, k, k1, k2}` with 0/1 flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigurationRecord {
    pub electrons: [u8; N_SLOTS],
    pub k: u8,
    pub k1: u8,
    pub k2: u8,
}

impl From<Configuration> for ConfigurationRecord {
    fn from(c: Configuration) -> Self {
        ConfigurationRecord {
            electrons: c.occupied.map(u8::from),
            k: c.apart.into(),
            k1: c.nuclear_up[0].into(),
            k2: c.nuclear_up[1].into(),
        }
    }
}

impl TryFrom<ConfigurationRecord> for Configuration {
    type Error = String;

    fn try_from(r: ConfigurationRecord) -> Result<Self, Self::Error> {
        let state = BasisState::try_from(crate::hilbert::StateRecord {
            photons: [0; crate::hilbert::N_MODES],
            electrons: r.electrons,
            k: r.k,
            k1: r.k1,
            k2: r.k2,
        })?;
        Ok(Configuration::of(&state))
    }
}

impl Configuration {
    pub fn of(state: &BasisState) -> Configuration {
        Configuration { occupied: state.electrons, apart: state.apart, nuclear_up: state.nuclear_up }
    }

    pub fn matches(&self, state: &BasisState) -> bool {
        Configuration::of(state) == *self
    }
}

/// Named photon-marginal projector: all basis states whose configuration is
/// one of `configurations`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub name: String,
    pub configurations: Vec<Configuration>,
}

/// Basis indices of every state matching any configuration. Fails if some
/// configuration matches nothing.
pub fn resolve(basis: &Basis, observable: &Observable) -> Result<Vec<usize>, EvolveError> {
    let mut out = Vec::new();
    for (ci, cfg) in observable.configurations.iter().enumerate() {
        let before = out.len();
        out.extend((0..basis.len()).filter(|&i| cfg.matches(basis.state(i))));
        if out.len() == before {
            return Err(EvolveError::UnknownConfiguration(format!("{}[{ci}]", observable.name)));
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Photon-marginal population of `configurations` in a dense ρ.
pub fn population(basis: &Basis, rho: &DensityMatrix, configurations: &[Configuration]) -> f64 {
    (0..basis.len())
        .filter(|&i| configurations.iter().any(|c| c.matches(basis.state(i))))
        .map(|i| rho.0[(i, i)].re)
        .sum()
}

/// The final configurations Ψ_final (nuclear spins ↑↓) and Ψ′_final (↓↑):
/// k = 0, both bonding-orbital slots occupied, nothing else.
pub fn final_configurations() -> [Configuration; 2] {
    use crate::hilbert::{bonding_slot, Spin};
    let mut occupied = [false; N_SLOTS];
    occupied[bonding_slot(Spin::Up)] = true;
    occupied[bonding_slot(Spin::Down)] = true;
    [
        Configuration { occupied, apart: false, nuclear_up: [true, false] },
        Configuration { occupied, apart: false, nuclear_up: [false, true] },
    ]
}

/// Configurations whose total population is P(H2).
pub fn h2_projector() -> Vec<Configuration> {
    final_configurations().to_vec()
}

// ---------------------------------------------------------------------------
// Trajectory

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    /// One series per name, aligned with `times`.
    pub series: Vec<Vec<f64>>,
    pub trace: Vec<f64>,
    /// `(time, min eigenvalue)` probes.
    pub min_eigenvalues: Vec<(f64, f64)>,
    pub steps: usize,
}

impl Trajectory {
    pub fn new(names: Vec<String>) -> Trajectory {
        let series = vec![Vec::new(); names.len()];
        Trajectory { times: Vec::new(), names, series, trace: Vec::new(), min_eigenvalues: Vec::new(), steps: 0 }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, time: f64, values: &[f64], trace: f64) {
        debug_assert_eq!(values.len(), self.names.len());
        self.times.push(time);
        for (s, v) in self.series.iter_mut().zip(values) {
            s.push(*v);
        }
        self.trace.push(trace);
    }

    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.series[i].as_slice())
    }

    pub fn last(&self, name: &str) -> Option<f64> {
        self.series(name).and_then(|s| s.last().copied())
    }

    /// `max |Tr ρ(t) − 1|` over the samples.
    pub fn max_trace_drift(&self) -> f64 {
        self.trace.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn min_probe(&self) -> Option<f64> {
        self.min_eigenvalues.iter().map(|p| p.1).reduce(f64::min)
    }

    /// `t,<names...>,trace` with 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push_str(",trace\n");
        for (k, t) in self.times.iter().enumerate() {
            out.push_str(&format_sig(*t));
            for s in &self.series {
                out.push(',');
                out.push_str(&format_sig(s[k]));
            }
            out.push(',');
            out.push_str(&format_sig(self.trace[k]));
            out.push('\n');
        }
        out
    }
}

/// Scientific notation with 12 significant digits.
pub fn format_sig(x: f64) -> String {
    format!("{x:.11e}")
}

/// Integration schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub steps: usize,
    pub sample_stride: usize,
    /// Probe the minimum eigenvalue every this many samples (and at the end).
    pub probe_stride: usize,
}

impl Schedule {
    pub fn new(dt: f64, horizon: f64, sample_stride: usize) -> Result<Schedule, EvolveError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(EvolveError::InvalidStep(dt));
        }
        let steps = if horizon <= 0.0 { 0 } else { (horizon / dt).round() as usize };
        Ok(Schedule { steps, sample_stride: sample_stride.max(1), probe_stride: 25 })
    }
}

/// Integrates from `rho`, sampling the observables (given as basis index
/// sets) at t = 0, every `sample_stride` steps, and at the end.
pub fn integrate(
    engine: &SplitStep,
    mut rho: BlockDensity,
    observables: &[(String, Vec<usize>)],
    schedule: Schedule,
) -> Result<(Trajectory, BlockDensity), EvolveError> {
    let mut traj = Trajectory::new(observables.iter().map(|o| o.0.clone()).collect());
    let dt = engine.dt();
    let sample = |traj: &mut Trajectory, rho: &BlockDensity, k: usize, probe: bool| {
        let pops = engine.populations(rho);
        let values: Vec<f64> = observables.iter().map(|(_, idx)| idx.iter().map(|&i| pops[i]).sum()).collect();
        let t = k as f64 * dt;
        traj.push(t, &values, engine.trace(rho));
        if probe {
            traj.min_eigenvalues.push((t, engine.min_eigenvalue(rho)));
        }
    };
    sample(&mut traj, &rho, 0, true);
    let mut work = engine.workspace();
    for k in 1..=schedule.steps {
        engine.step(&mut rho, &mut work, k, k as f64 * dt)?;
        let last = k == schedule.steps;
        if k % schedule.sample_stride == 0 || last {
            let probe = last || (traj.len() % schedule.probe_stride == 0);
            sample(&mut traj, &rho, k, probe);
        }
    }
    traj.steps = schedule.steps;
    Ok((traj, rho))
}
