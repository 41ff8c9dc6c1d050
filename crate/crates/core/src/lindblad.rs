//! Dissipation and influx superoperators, and thermal field utilities.
//!
//! `L_k(ρ)  = γ  (A ρ A† − ½{ρ, A†A})` (leak)
//! `L_k'(ρ) = γ' (A† ρ A − ½{ρ, A A†})` (influx), with γ' = μγ.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::hilbert::{Basis, BasisState, HilbertError, Mode, ModeSpec, N_MODES, N_SLOTS};
use crate::operators::{photon_ladder, Ladder, SparseOperator};

/// Reduced Planck constant, J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN_SI: f64 = 1.380_649e-23;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LindbladError {
    #[error("dimension mismatch: operator {operator}, state {state}")]
    DimensionMismatch { operator: usize, state: usize },
    #[error("influx ratio must lie in [0, 1), got {0}")]
    InvalidMu(f64),
    #[error("influx ratio must lie in (0, 1) for a finite temperature, got {0}")]
    MuOutOfRange(f64),
    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),
    #[error("rates must be non-negative and finite (gamma_out {gamma_out}, gamma_in {gamma_in})")]
    InvalidRates { gamma_out: f64, gamma_in: f64 },
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

pub type Matrix = DMatrix<Complex64>;

/// Dense density matrix. Constructors normalise nothing; use
/// [`DensityMatrix::check`] to test the physical invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(pub Matrix);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityReport {
    pub hermiticity_defect: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl DensityReport {
    pub fn is_physical(&self) -> bool {
        self.hermiticity_defect <= 1e-10 && self.trace_error <= 1e-9 && self.min_eigenvalue >= -1e-6
    }
}

impl DensityMatrix {
    /// `|ψ⟩⟨ψ|` for a basis vector.
    pub fn pure(dim: usize, index: usize) -> DensityMatrix {
        let mut m = Matrix::zeros(dim, dim);
        m[(index, index)] = Complex64::new(1.0, 0.0);
        DensityMatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn check(&self) -> DensityReport {
        let h = &self.0;
        let hermiticity_defect = (h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let trace_error = (self.trace() - Complex64::new(1.0, 0.0)).norm();
        DensityReport {
            hermiticity_defect,
            trace_error,
            min_eigenvalue: min_hermitian_eigenvalue(h),
        }
    }
}

/// Smallest eigenvalue of the Hermitian part of `m`, through the real
/// symmetric embedding `[[Re, −Im], [Im, Re]]`.
pub fn min_hermitian_eigenvalue(m: &Matrix) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let herm = (m + m.adjoint()).scale(0.5);
    let embed = DMatrix::<f64>::from_fn(2 * n, 2 * n, |r, c| {
        let z = herm[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    nalgebra::SymmetricEigen::new(embed).eigenvalues.min()
}

/// One photon mode coupled to its bath: leak with `gamma_out`, influx with
/// `gamma_in`.
#[derive(Debug, Clone)]
pub struct Channel {
    pub mode: Mode,
    /// The mode's annihilation operator on the working basis.
    pub jump: SparseOperator,
    pub gamma_out: f64,
    pub gamma_in: f64,
}

impl Channel {
    pub fn new(mode: Mode, jump: SparseOperator, gamma_out: f64, gamma_in: f64) -> Result<Channel, LindbladError> {
        let ok = |r: f64| r >= 0.0 && r.is_finite();
        if !ok(gamma_out) || !ok(gamma_in) || (gamma_out > 0.0 && gamma_in >= gamma_out) || (gamma_out == 0.0 && gamma_in > 0.0) {
            return Err(LindbladError::InvalidRates { gamma_out, gamma_in });
        }
        Ok(Channel { mode, jump, gamma_out, gamma_in })
    }

    /// Leak and influx channel of `spec.label` on `basis`.
    pub fn for_mode(basis: &Basis, spec: &ModeSpec) -> Result<Channel, LindbladError> {
        Channel::new(
            spec.label,
            photon_ladder(basis, spec.label, Ladder::Annihilate),
            spec.gamma_out,
            spec.gamma_in(),
        )
    }

    /// All six channels of the basis' mode table.
    pub fn all(basis: &Basis) -> Result<Vec<Channel>, LindbladError> {
        basis.modes().iter().map(|m| Channel::for_mode(basis, m)).collect()
    }
}

fn check_dim(op: &SparseOperator, rho: &Matrix) -> Result<(), LindbladError> {
    if op.dim() != rho.nrows() || rho.nrows() != rho.ncols() {
        return Err(LindbladError::DimensionMismatch { operator: op.dim(), state: rho.nrows() });
    }
    Ok(())
}

/// `S · M` for sparse `S`.
fn sparse_left(s: &SparseOperator, m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(s.dim(), m.ncols());
    for &(r, c, v) in s.entries() {
        for j in 0..m.ncols() {
            out[(r, j)] += v * m[(c, j)];
        }
    }
    out
}

/// `M · S†` for sparse `S`.
fn sparse_right_adjoint(m: &Matrix, s: &SparseOperator) -> Matrix {
    let mut out = Matrix::zeros(m.nrows(), s.dim());
    for &(r, c, v) in s.entries() {
        let vc = v.conj();
        for i in 0..m.nrows() {
            out[(i, r)] += m[(i, c)] * vc;
        }
    }
    out
}

/// `γ (J ρ J† − ½{ρ, J†J})` for a generic jump `J`.
fn lindblad_term(jump: &SparseOperator, rate: f64, rho: &Matrix) -> Matrix {
    if rate == 0.0 {
        return Matrix::zeros(rho.nrows(), rho.ncols());
    }
    let sandwich = sparse_right_adjoint(&sparse_left(jump, rho), jump);
    let jdj = SparseOperator::multiply(&jump.adjoint(), jump).expect("same basis");
    let left = sparse_left(&jdj, rho);
    // ρ J†J = (J†J ρ)† for Hermitian ρ is not assumed; compute directly
    let right = sparse_right_adjoint(rho, &jdj.adjoint());
    (sandwich - (left + right).scale(0.5)).scale(rate)
}

pub fn apply_dissipator(ch: &Channel, rho: &Matrix) -> Result<Matrix, LindbladError> {
    check_dim(&ch.jump, rho)?;
    Ok(lindblad_term(&ch.jump, ch.gamma_out, rho))
}

pub fn apply_influx(ch: &Channel, rho: &Matrix) -> Result<Matrix, LindbladError> {
    check_dim(&ch.jump, rho)?;
    if ch.gamma_in == 0.0 {
        return Ok(Matrix::zeros(rho.nrows(), rho.ncols()));
    }
    Ok(lindblad_term(&ch.jump.adjoint(), ch.gamma_in, rho))
}

/// Sum of every channel's dissipator and influx term.
pub fn apply_lindblad_total(channels: &[Channel], rho: &Matrix) -> Result<Matrix, LindbladError> {
    let mut out = Matrix::zeros(rho.nrows(), rho.ncols());
    for ch in channels {
        out += apply_dissipator(ch, rho)?;
        out += apply_influx(ch, rho)?;
    }
    Ok(out)
}

/// Basis of a single photon mode, `p = 0..=cutoff`, all other fields empty.
pub fn single_mode_basis(spec: &ModeSpec) -> Result<Basis, LindbladError> {
    let mut modes = [*spec; N_MODES];
    for (i, m) in modes.iter_mut().enumerate() {
        if i != spec.label.index() {
            *m = ModeSpec { label: Mode::ALL[i], frequency: 1.0, gamma_out: 0.0, mu: 0.0, cutoff: 0 };
        }
    }
    let states = (0..=spec.cutoff).map(|p| {
        let mut photons = [0; N_MODES];
        photons[spec.label.index()] = p;
        BasisState { photons, electrons: [false; N_SLOTS], apart: true, nuclear_up: [true, true] }
    });
    Ok(Basis::from_states(states, modes)?)
}

/// Truncated Gibbs state of one mode: populations ∝ μ^p for p = 0..=cutoff,
/// normalised over the truncated ladder. Index p of the result is p photons.
pub fn gibbs_field_state(mode: &ModeSpec, mu: f64) -> Result<DensityMatrix, LindbladError> {
    if !(0.0..1.0).contains(&mu) {
        return Err(LindbladError::InvalidMu(mu));
    }
    let n = usize::from(mode.cutoff) + 1;
    let weights: Vec<f64> = (0..n).map(|p| mu.powi(p as i32)).collect();
    let z: f64 = weights.iter().sum();
    Ok(DensityMatrix(Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        weights.iter().map(|w| Complex64::new(w / z, 0.0)),
    ))))
}

/// Temperature at which the Gibbs weight ratio of adjacent Fock states
/// equals μ: `T = ħω / (K ln(1/μ))`.
pub fn temperature_from_mu(frequency: f64, mu: f64, hbar: f64, boltzmann: f64) -> Result<f64, LindbladError> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(LindbladError::MuOutOfRange(mu));
    }
    Ok(hbar * frequency / (boltzmann * (1.0 / mu).ln()))
}

/// Inverse of [`temperature_from_mu`]: `μ = exp(−ħω / (K T))`.
pub fn mu_from_temperature(frequency: f64, temperature: f64, hbar: f64, boltzmann: f64) -> Result<f64, LindbladError> {
    if !(temperature > 0.0) {
        return Err(LindbladError::InvalidTemperature(temperature));
    }
    Ok((-hbar * frequency / (boltzmann * temperature)).exp())
}

/// Time derivative `−(i/ħ)[H, ρ] + (1/ħ)L(ρ)` of the truncated Gibbs state
/// of a single decoupled mode with free Hamiltonian `ħω a†a`. Returns the
/// max-norm of the derivative.
pub fn gibbs_stationarity_residual(mode: &ModeSpec, hbar: f64) -> Result<f64, LindbladError> {
    let basis = single_mode_basis(mode)?;
    let rho = gibbs_field_state(mode, mode.mu)?;
    let ch = Channel::for_mode(&basis, mode)?;
    let number = {
        let a = &ch.jump;
        SparseOperator::multiply(&a.adjoint(), a).expect("same basis")
    };
    let h = number.to_dense().scale(hbar * mode.frequency);
    let commutator = &h * &rho.0 - &rho.0 * &h;
    let l = apply_lindblad_total(std::slice::from_ref(&ch), &rho.0)?;
    let rhs = commutator * Complex64::new(0.0, -1.0 / hbar) + l.scale(1.0 / hbar);
    Ok(rhs.iter().map(|z| z.norm()).fold(0.0, f64::max))
}
