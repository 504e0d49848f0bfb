//! Two-qubit reductions and Wootters concurrence.

use nalgebra::Matrix4;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qstate::{dim, site_mask, DensityMatrix, PureState, C64, ZERO};

/// Reduced state of atoms `pair = (j, s)` (1-based), with `j` as the first
/// tensor factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PairReduction {
    pub rho: Matrix4<C64>,
    pub pair: (usize, usize),
}

/// States that can be reduced to two qubits.
pub trait Reducible {
    fn n_atoms(&self) -> usize;
    /// Partial trace onto 0-based sites `(a, b)`.
    fn reduce_sites(&self, a: usize, b: usize) -> Matrix4<C64>;
}

fn pair_bits(index: usize, ma: usize, mb: usize) -> usize {
    (usize::from(index & ma != 0) << 1) | usize::from(index & mb != 0)
}

fn with_bits(index: usize, ma: usize, mb: usize, bits: usize) -> usize {
    let cleared = index & !(ma | mb);
    cleared | if bits & 2 != 0 { ma } else { 0 } | if bits & 1 != 0 { mb } else { 0 }
}

impl Reducible for DensityMatrix {
    fn n_atoms(&self) -> usize {
        crate::qstate::QuantumState::n_atoms(self)
    }

    fn reduce_sites(&self, a: usize, b: usize) -> Matrix4<C64> {
        let n = Reducible::n_atoms(self);
        let (ma, mb) = (site_mask(a, n), site_mask(b, n));
        let m = self.matrix();
        let mut out = Matrix4::zeros();
        for col in 0..dim(n) {
            let cb = pair_bits(col, ma, mb);
            for rb in 0..4 {
                let row = with_bits(col, ma, mb, rb);
                out[(rb, cb)] += m[(row, col)];
            }
        }
        out
    }
}

impl Reducible for PureState {
    fn n_atoms(&self) -> usize {
        crate::qstate::QuantumState::n_atoms(self)
    }

    fn reduce_sites(&self, a: usize, b: usize) -> Matrix4<C64> {
        let n = Reducible::n_atoms(self);
        let (ma, mb) = (site_mask(a, n), site_mask(b, n));
        let amps = self.amplitudes();
        let mut out = Matrix4::zeros();
        for col in 0..dim(n) {
            let c = amps[col];
            if c == ZERO {
                continue;
            }
            let cb = pair_bits(col, ma, mb);
            for rb in 0..4 {
                let row = with_bits(col, ma, mb, rb);
                out[(rb, cb)] += amps[row] * c.conj();
            }
        }
        out
    }
}

/// Partial trace onto atoms `j` and `s` (1-based, distinct).
pub fn reduce_pair<S: Reducible + ?Sized>(state: &S, j: usize, s: usize) -> Result<PairReduction> {
    let n = state.n_atoms();
    for idx in [j, s] {
        if idx == 0 || idx > n {
            return Err(Error::IndexOutOfRange { index: idx, n_atoms: n });
        }
    }
    if j == s {
        return Err(Error::InvalidArgument("a pair needs two distinct atoms".into()));
    }
    Ok(PairReduction { rho: state.reduce_sites(j - 1, s - 1), pair: (j, s) })
}

fn spin_flip(rho: &Matrix4<C64>) -> Matrix4<C64> {
    // σʸ⊗σʸ is real with ones on the anti-diagonal, signs (−, +, +, −)
    let yy =
        Matrix4::from_fn(|r, c| if r + c == 3 { C64::from(if r == 0 || r == 3 { -1.0 } else { 1.0 }) } else { ZERO });
    yy * rho.conjugate() * yy
}

/// `λ₁ − λ₂ − λ₃ − λ₄` before clamping, with `λ` the decreasing square roots
/// of the eigenvalues of `ρ ρ̃`.
pub fn wootters_raw(p: &PairReduction) -> f64 {
    let r = p.rho * spin_flip(&p.rho);
    let mut lambdas: Vec<f64> = match r.schur().eigenvalues() {
        Some(ev) => ev.iter().map(|z| z.re.max(0.0).sqrt()).collect(),
        None => {
            // √ρ ρ̃ √ρ has the same spectrum and is Hermitian
            let h = (p.rho + p.rho.adjoint()) * C64::from(0.5);
            let eig = h.symmetric_eigen();
            let sqrt_rho = eig.eigenvectors
                * Matrix4::from_diagonal(&eig.eigenvalues.map(|v| C64::from(v.max(0.0).sqrt())))
                * eig.eigenvectors.adjoint();
            let m = sqrt_rho * spin_flip(&p.rho) * sqrt_rho;
            let m = (m + m.adjoint()) * C64::from(0.5);
            m.symmetric_eigenvalues().iter().map(|v| v.max(0.0).sqrt()).collect()
        }
    };
    lambdas.sort_by(|a, b| b.total_cmp(a));
    lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]
}

/// Wootters concurrence in `[0, 1]`.
pub fn wootters_concurrence(p: &PairReduction) -> f64 {
    wootters_raw(p).clamp(0.0, 1.0)
}

/// `C_glob = Σ_{j≠s} C(ρ_js) / N(N−1)`.
pub fn global_concurrence<S: Reducible + Sync + ?Sized>(state: &S) -> Result<f64> {
    let n = state.n_atoms();
    if n < 2 {
        return Err(Error::InvalidArgument("global concurrence needs at least two atoms".into()));
    }
    let pairs: Vec<(usize, usize)> = (1..=n).flat_map(|j| (j + 1..=n).map(move |s| (j, s))).collect();
    let total: f64 = pairs
        .par_iter()
        .map(|&(j, s)| reduce_pair(state, j, s).map(|p| wootters_concurrence(&p)))
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum();
    Ok(total / pairs.len() as f64)
}
