//! Slow reference evaluators for tests: a fixed-step RK4 integrator of the
//! full master equation and closed-form solutions of tiny systems.
//!
//! Nothing here reuses the engine's matrix code. Operators enter as plain
//! `(row, col, value)` triplets and every product is a naive loop.

use num_complex::Complex64;
use thiserror::Error;

/// Largest dimension the oracle accepts.
pub const MAX_ORACLE_DIM: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("oracle dimension {0} exceeds {MAX_ORACLE_DIM}")]
    TooLarge(usize),
    #[error("triplet ({0}, {1}) outside dimension {2}")]
    OutOfRange(usize, usize, usize),
    #[error("initial state has {0} entries, expected {1}")]
    BadInitialState(usize, usize),
    #[error("invalid step or horizon (dt {dt}, horizon {horizon})")]
    BadSchedule { dt: f64, horizon: f64 },
    #[error("state norm blew up at step {0}")]
    Unstable(usize),
}

type Triplets = Vec<(usize, usize, f64)>;

/// A jump operator `A` with leak rate `gamma_out` and influx rate `gamma_in`
/// (the influx term uses `A†`).
#[derive(Debug, Clone)]
pub struct OracleChannel {
    pub jump: Triplets,
    pub gamma_out: f64,
    pub gamma_in: f64,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub dim: usize,
    /// Row-major end state.
    pub rho: Vec<Complex64>,
    /// `(time, diagonal of ρ)` every `sample_every` steps, including t = 0.
    pub samples: Vec<(f64, Vec<f64>)>,
    pub steps: usize,
}

impl OracleResult {
    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.rho[r * self.dim + c]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.entry(i, i)).sum()
    }
}

fn transpose(t: &Triplets) -> Triplets {
    t.iter().map(|&(r, c, v)| (c, r, v)).collect()
}

/// Triplets of the product `X Y`, through a dense accumulator.
fn product(x: &Triplets, y: &Triplets, dim: usize) -> Triplets {
    let mut dense = vec![0.0; dim * dim];
    for &(r, k, a) in x {
        for &(k2, c, b) in y {
            if k == k2 {
                dense[r * dim + c] += a * b;
            }
        }
    }
    let mut out = Vec::new();
    for r in 0..dim {
        for c in 0..dim {
            if dense[r * dim + c] != 0.0 {
                out.push((r, c, dense[r * dim + c]));
            }
        }
    }
    out
}

struct Term {
    rate: f64,
    jump: Triplets,
    number: Triplets,
}

struct Rhs {
    dim: usize,
    hbar: f64,
    h: Triplets,
    terms: Vec<Term>,
}

impl Rhs {
    /// `−(i/ħ)[H, ρ] + (1/ħ) Σ rate (JρJᵀ − ½{JᵀJ, ρ})`.
    fn eval(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim;
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        let mi = Complex64::new(0.0, -1.0 / self.hbar);
        for &(r, k, v) in &self.h {
            for c in 0..n {
                // H ρ
                out[r * n + c] += mi * v * rho[k * n + c];
                // −ρ H: (ρH)[c][k] gains ρ[c][r] H[r][k]
                out[c * n + k] -= mi * v * rho[c * n + r];
            }
        }
        let inv = 1.0 / self.hbar;
        for t in &self.terms {
            let f = t.rate * inv;
            for &(r1, c1, a) in &t.jump {
                for &(r2, c2, b) in &t.jump {
                    out[r1 * n + r2] += f * a * b * rho[c1 * n + c2];
                }
            }
            for &(r, k, v) in &t.number {
                for c in 0..n {
                    out[r * n + c] -= 0.5 * f * v * rho[k * n + c];
                    out[c * n + k] -= 0.5 * f * v * rho[c * n + r];
                }
            }
        }
    }
}

/// Classical RK4 on the master equation from `rho0` (row-major `dim × dim`).
#[allow(clippy::too_many_arguments)]
pub fn rk4_evolve(
    dim: usize,
    h: &[(usize, usize, f64)],
    channels: &[OracleChannel],
    rho0: &[Complex64],
    dt: f64,
    horizon: f64,
    hbar: f64,
    sample_every: usize,
) -> Result<OracleResult, OracleError> {
    if dim > MAX_ORACLE_DIM {
        return Err(OracleError::TooLarge(dim));
    }
    if rho0.len() != dim * dim {
        return Err(OracleError::BadInitialState(rho0.len(), dim * dim));
    }
    if !(dt > 0.0) || !(horizon >= 0.0) || !dt.is_finite() || !horizon.is_finite() {
        return Err(OracleError::BadSchedule { dt, horizon });
    }
    let check = |t: &[(usize, usize, f64)]| -> Result<(), OracleError> {
        for &(r, c, _) in t {
            if r >= dim || c >= dim {
                return Err(OracleError::OutOfRange(r, c, dim));
            }
        }
        Ok(())
    };
    check(h)?;
    let mut terms = Vec::new();
    for ch in channels {
        check(&ch.jump)?;
        let jt = transpose(&ch.jump);
        if ch.gamma_out != 0.0 {
            terms.push(Term {
                rate: ch.gamma_out,
                number: product(&jt, &ch.jump, dim),
                jump: ch.jump.clone(),
            });
        }
        if ch.gamma_in != 0.0 {
            terms.push(Term {
                rate: ch.gamma_in,
                number: product(&ch.jump, &jt, dim),
                jump: jt.clone(),
            });
        }
    }
    let rhs = Rhs { dim, hbar, h: h.to_vec(), terms };

    let steps = (horizon / dt).round() as usize;
    let every = sample_every.max(1);
    let mut rho = rho0.to_vec();
    let diag = |m: &[Complex64]| (0..dim).map(|i| m[i * dim + i].re).collect::<Vec<f64>>();
    let mut samples = vec![(0.0, diag(&rho))];
    let zero = vec![Complex64::new(0.0, 0.0); dim * dim];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero);
    for step in 1..=steps {
        rhs.eval(&rho, &mut k1);
        for i in 0..rho.len() {
            tmp[i] = rho[i] + k1[i] * (0.5 * dt);
        }
        rhs.eval(&tmp, &mut k2);
        for i in 0..rho.len() {
            tmp[i] = rho[i] + k2[i] * (0.5 * dt);
        }
        rhs.eval(&tmp, &mut k3);
        for i in 0..rho.len() {
            tmp[i] = rho[i] + k3[i] * dt;
        }
        rhs.eval(&tmp, &mut k4);
        let mut norm = 0.0f64;
        for i in 0..rho.len() {
            rho[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
            norm = norm.max(rho[i].norm());
        }
        if !(norm <= 1e3) {
            return Err(OracleError::Unstable(step));
        }
        if step % every == 0 || step == steps {
            samples.push((step as f64 * dt, diag(&rho)));
        }
    }
    Ok(OracleResult { dim, rho, samples, steps })
}

/// Population of the initial state of a resonant single-excitation
/// Jaynes-Cummings pair: `cos²(g t / ħ)`.
pub fn jc_analytic_population(g: f64, t: f64, hbar: f64) -> f64 {
    (g * t / hbar).cos().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pure(dim: usize, i: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); dim * dim];
        v[i * dim + i] = Complex64::new(1.0, 0.0);
        v
    }

    #[test]
    fn analytic_values() {
        assert_eq!(jc_analytic_population(2.0, 0.0, 1.0), 1.0);
        assert!(jc_analytic_population(1.0, std::f64::consts::FRAC_PI_2, 1.0) < 1e-30);
        assert!((jc_analytic_population(1.0, std::f64::consts::FRAC_PI_4, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rabi_oscillation() {
        let g = 3.0;
        let h = vec![(0, 1, g), (1, 0, g)];
        let r = rk4_evolve(2, &h, &[], &pure(2, 0), 1e-4, 1.0, 1.0, 100).unwrap();
        for (t, d) in &r.samples {
            assert!((d[0] - jc_analytic_population(g, *t, 1.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn pure_decay() {
        let gamma = 2.0;
        let ch = OracleChannel { jump: vec![(0, 1, 1.0)], gamma_out: gamma, gamma_in: 0.0 };
        let r = rk4_evolve(2, &[], &[ch], &pure(2, 1), 1e-4, 1.5, 1.0, 1000).unwrap();
        for (t, d) in &r.samples {
            assert!((d[1] - (-gamma * t).exp()).abs() < 1e-10);
        }
        assert!((r.trace() - 1.0).norm() < 1e-10);
    }

    #[test]
    fn static_without_dynamics() {
        let rho0 = pure(3, 2);
        let r = rk4_evolve(3, &[], &[], &rho0, 0.1, 1.0, 1.0, 1).unwrap();
        assert_eq!(r.rho, rho0);
        assert_eq!(r.steps, 10);
    }

    #[test]
    fn guard_rails() {
        assert_eq!(rk4_evolve(65, &[], &[], &[], 0.1, 1.0, 1.0, 1).unwrap_err(), OracleError::TooLarge(65));
        assert!(matches!(rk4_evolve(2, &[(2, 0, 1.0)], &[], &pure(2, 0), 0.1, 1.0, 1.0, 1), Err(OracleError::OutOfRange(..))));
        let h = vec![(0, 1, 1e3), (1, 0, 1e3)];
        assert!(matches!(rk4_evolve(2, &h, &[], &pure(2, 0), 1.0, 100.0, 1.0, 1), Err(OracleError::Unstable(_))));
    }
}
