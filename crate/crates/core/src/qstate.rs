//! Dense N-qubit states and operators.
//!
//! Basis ordering: site 1 is the most significant bit of the basis index and,
//! per site, `|↑⟩` (excited) is bit value 0 and `|↓⟩` (ground) is bit value 1.
//! So for two atoms the basis is `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩` and the ground state
//! `|↓…↓⟩` sits at the last index.
//!
//! Public functions taking an "atom index" use 1-based indices. Everything
//! marked `site` in this crate is 0-based.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest ensemble handled by exact (2^N / 4^N) representations.
pub const MAX_EXACT_ATOMS: usize = 14;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Hilbert-space dimension for `n` atoms.
#[inline]
pub fn dim(n_atoms: usize) -> usize {
    1usize << n_atoms
}

/// Bit mask of 0-based `site` in a basis index.
#[inline]
pub fn site_mask(site: usize, n_atoms: usize) -> usize {
    1usize << (n_atoms - 1 - site)
}

#[inline]
pub(crate) fn is_up(index: usize, mask: usize) -> bool {
    index & mask == 0
}

pub(crate) fn check_cap(n_atoms: usize) -> Result<()> {
    if n_atoms == 0 {
        return Err(Error::InvalidArgument("at least one atom is required".into()));
    }
    if n_atoms > MAX_EXACT_ATOMS {
        return Err(Error::TooManyAtoms(n_atoms));
    }
    Ok(())
}

fn check_index(j: usize, n_atoms: usize) -> Result<usize> {
    if j == 0 || j > n_atoms {
        return Err(Error::IndexOutOfRange { index: j, n_atoms });
    }
    Ok(j - 1)
}

/// Single-qubit operators in the `(|↑⟩, |↓⟩)` basis.
///
/// `Y` is the standard `[[0, -i], [i, 0]]`, so `[X, Y] = 2iZ` and
/// `Plus = (X + iY)/2 = |↑⟩⟨↓|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

impl Axis {
    /// Image of basis column `index` under this operator acting on the site
    /// with bit `mask`: `(row, value)`, or `None` when the column is annihilated.
    #[inline]
    pub fn act(self, index: usize, mask: usize) -> Option<(usize, C64)> {
        let up = is_up(index, mask);
        match self {
            Axis::Z => Some((index, if up { ONE } else { -ONE })),
            Axis::X => Some((index ^ mask, ONE)),
            Axis::Y => Some((index ^ mask, if up { I } else { -I })),
            Axis::Plus => (!up).then_some((index ^ mask, ONE)),
            Axis::Minus => up.then_some((index ^ mask, ONE)),
        }
    }

    pub fn matrix(self) -> nalgebra::Matrix2<C64> {
        let mut m = nalgebra::Matrix2::zeros();
        for col in 0..2 {
            if let Some((row, v)) = self.act(col, 1) {
                m[(row, col)] = v;
            }
        }
        m
    }
}

/// Quadrature axis of the phase-dependent Pauli basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseAxis {
    X,
    Y,
}

/// Dense operator on the 2^N-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    n_atoms: usize,
    mat: DMatrix<C64>,
}

impl Operator {
    pub fn new(n_atoms: usize, mat: DMatrix<C64>) -> Result<Self> {
        check_cap(n_atoms)?;
        let d = dim(n_atoms);
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: mat.nrows().max(mat.ncols()) });
        }
        Ok(Self { n_atoms, mat })
    }

    pub fn zeros(n_atoms: usize) -> Result<Self> {
        check_cap(n_atoms)?;
        let d = dim(n_atoms);
        Ok(Self { n_atoms, mat: DMatrix::zeros(d, d) })
    }

    pub fn identity(n_atoms: usize) -> Result<Self> {
        check_cap(n_atoms)?;
        let d = dim(n_atoms);
        Ok(Self { n_atoms, mat: DMatrix::identity(d, d) })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self { n_atoms: self.n_atoms, mat: self.mat.adjoint() }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { n_atoms: self.n_atoms, mat: &self.mat * z }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n_atoms, other.n_atoms);
        Self { n_atoms: self.n_atoms, mat: &self.mat + &other.mat }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n_atoms, other.n_atoms);
        Self { n_atoms: self.n_atoms, mat: &self.mat - &other.mat }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n_atoms, other.n_atoms);
        Self { n_atoms: self.n_atoms, mat: &self.mat * &other.mat }
    }

    /// `A += z * B` in place.
    pub fn add_scaled(&mut self, z: C64, other: &Self) {
        assert_eq!(self.n_atoms, other.n_atoms);
        self.mat.zip_apply(&other.mat, |a, b| *a += z * b);
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        max_hermiticity_error(&self.mat)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.mat.iter().zip(other.mat.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn max_hermiticity_error(m: &DMatrix<C64>) -> f64 {
    let d = m.nrows();
    let mut err = 0.0f64;
    for c in 0..d {
        for r in 0..=c {
            err = err.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    err
}

fn single_site_operator(site: usize, axis: Axis, n_atoms: usize, scale: C64) -> DMatrix<C64> {
    let d = dim(n_atoms);
    let mask = site_mask(site, n_atoms);
    let mut m = DMatrix::zeros(d, d);
    for col in 0..d {
        if let Some((row, v)) = axis.act(col, mask) {
            m[(row, col)] += v * scale;
        }
    }
    m
}

/// The single-qubit operator `axis` on atom `j` (1-based), identity elsewhere.
pub fn pauli_embed(j: usize, axis: Axis, n_atoms: usize) -> Result<Operator> {
    check_cap(n_atoms)?;
    let site = check_index(j, n_atoms)?;
    Ok(Operator { n_atoms, mat: single_site_operator(site, axis, n_atoms, ONE) })
}

/// Phase-dependent Pauli operator on atom `j` (1-based):
/// `X: e^{-iθ}σ⁻ + e^{iθ}σ⁺`, `Y: i(e^{iθ}σ⁺ − e^{-iθ}σ⁻)`.
///
/// At `θ = 0` the `X` member is the ordinary σˣ while the `Y` member is `−σʸ`.
pub fn phase_pauli(j: usize, axis: PhaseAxis, theta: f64, n_atoms: usize) -> Result<Operator> {
    check_cap(n_atoms)?;
    let site = check_index(j, n_atoms)?;
    if !theta.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite phase {theta}")));
    }
    let e = C64::from_polar(1.0, theta);
    let (plus, minus) = match axis {
        PhaseAxis::X => (e, e.conj()),
        PhaseAxis::Y => (I * e, -I * e.conj()),
    };
    let mut mat = single_site_operator(site, Axis::Plus, n_atoms, plus);
    mat += single_site_operator(site, Axis::Minus, n_atoms, minus);
    Ok(Operator { n_atoms, mat })
}

/// Operations shared by pure and mixed exact states.
pub trait QuantumState: Sync {
    fn n_atoms(&self) -> usize;

    /// `⟨ψ|O|ψ⟩` or `Tr(Oρ)`.
    fn expectation(&self, op: &Operator) -> Result<C64>;

    /// Expectation of a product of single-site operators on distinct
    /// 0-based sites, without forming the 2^N operator.
    fn expect_product(&self, factors: &[(usize, Axis)]) -> C64;

    fn to_density(&self) -> DensityMatrix;
}

/// Walks a basis column through a product of single-site operators.
#[inline]
fn product_image(col: usize, factors: &[(usize, usize, Axis)]) -> Option<(usize, C64)> {
    let mut idx = col;
    let mut val = ONE;
    for &(_, mask, axis) in factors.iter().rev() {
        let (r, v) = axis.act(idx, mask)?;
        idx = r;
        val *= v;
    }
    Some((idx, val))
}

fn masks(factors: &[(usize, Axis)], n_atoms: usize) -> Vec<(usize, usize, Axis)> {
    factors
        .iter()
        .map(|&(site, axis)| {
            assert!(site < n_atoms, "site {site} out of range");
            (site, site_mask(site, n_atoms), axis)
        })
        .collect()
}

/// Normalized state vector of N two-level atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_atoms: usize,
    amps: DVector<C64>,
}

impl PureState {
    /// Wraps `amps`, which must have length 2^N and unit norm (within 1e-12).
    pub fn new(n_atoms: usize, amps: DVector<C64>) -> Result<Self> {
        check_cap(n_atoms)?;
        if amps.len() != dim(n_atoms) {
            return Err(Error::DimensionMismatch { expected: dim(n_atoms), found: amps.len() });
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("state norm {norm} is not 1")));
        }
        Ok(Self { n_atoms, amps })
    }

    /// Normalizes `amps` before wrapping.
    pub fn normalized(n_atoms: usize, amps: DVector<C64>) -> Result<Self> {
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero vector".into()));
        }
        Self::new(n_atoms, amps / C64::from(norm))
    }

    pub fn basis(n_atoms: usize, index: usize) -> Result<Self> {
        check_cap(n_atoms)?;
        let d = dim(n_atoms);
        if index >= d {
            return Err(Error::DimensionMismatch { expected: d, found: index });
        }
        let mut amps = DVector::zeros(d);
        amps[index] = ONE;
        Ok(Self { n_atoms, amps })
    }

    /// `|↓⟩^⊗N`.
    pub fn ground(n_atoms: usize) -> Result<Self> {
        check_cap(n_atoms)?;
        Self::basis(n_atoms, dim(n_atoms) - 1)
    }

    /// `|↑⟩^⊗N`.
    pub fn excited(n_atoms: usize) -> Result<Self> {
        Self::basis(n_atoms, 0)
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn apply(&self, op: &Operator) -> Result<DVector<C64>> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: op.dim() });
        }
        Ok(op.matrix() * &self.amps)
    }
}

impl QuantumState for PureState {
    fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    fn expectation(&self, op: &Operator) -> Result<C64> {
        let v = self.apply(op)?;
        Ok(self.amps.dotc(&v))
    }

    fn expect_product(&self, factors: &[(usize, Axis)]) -> C64 {
        let fm = masks(factors, self.n_atoms);
        let mut acc = ZERO;
        for col in 0..self.dim() {
            let a = self.amps[col];
            if a == ZERO {
                continue;
            }
            if let Some((row, v)) = product_image(col, &fm) {
                acc += self.amps[row].conj() * v * a;
            }
        }
        acc
    }

    fn to_density(&self) -> DensityMatrix {
        DensityMatrix { n_atoms: self.n_atoms, mat: &self.amps * self.amps.adjoint() }
    }
}

/// Tensor product of single-atom states `cos(θ/2)|↑⟩ + e^{iφ} sin(θ/2)|↓⟩`.
pub fn product_state(bloch_angles: &[(f64, f64)]) -> Result<PureState> {
    let n = bloch_angles.len();
    check_cap(n)?;
    let locals: Vec<[C64; 2]> = bloch_angles
        .iter()
        .map(|&(theta, phi)| [C64::from((theta / 2.0).cos()), C64::from_polar((theta / 2.0).sin(), phi)])
        .collect();
    let d = dim(n);
    let amps = DVector::from_fn(d, |idx, _| {
        locals.iter().enumerate().fold(ONE, |acc, (site, local)| {
            let bit = usize::from(!is_up(idx, site_mask(site, n)));
            acc * local[bit]
        })
    });
    PureState::normalized(n, amps)
}

/// Bloch angles of `|+−+−…⟩` with `|±⟩ = (|↑⟩ ± |↓⟩)/√2`.
pub fn antisymmetric_angles(n_atoms: usize) -> Vec<(f64, f64)> {
    (0..n_atoms).map(|j| (std::f64::consts::FRAC_PI_2, if j % 2 == 0 { 0.0 } else { std::f64::consts::PI })).collect()
}

/// The alternating product state `|+−+−…⟩`.
pub fn antisymmetric_state(n_atoms: usize) -> Result<PureState> {
    product_state(&antisymmetric_angles(n_atoms))
}

/// `(|↑↑↓⟩ + e^{iΛ}|↓↑↑⟩ + e^{2iΛ}|↓↓↑⟩)/√3`.
pub fn three_atom_state(lambda: f64) -> Result<PureState> {
    let mut amps = DVector::zeros(8);
    let w = 1.0 / 3f64.sqrt();
    amps[0b001] = C64::from(w);
    amps[0b100] = C64::from_polar(w, lambda);
    amps[0b110] = C64::from_polar(w, 2.0 * lambda);
    PureState::new(3, amps)
}

/// Density matrix on the 2^N-dimensional space.
///
/// Hermiticity, unit trace and positivity are checked by explicit calls,
/// never implicitly by arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_atoms: usize,
    mat: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-10) and trace (1e-10).
    pub fn new(n_atoms: usize, mat: DMatrix<C64>) -> Result<Self> {
        let rho = Self::new_unchecked(n_atoms, mat)?;
        let herm = rho.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::InvalidArgument(format!("density matrix not Hermitian ({herm:e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("density matrix trace {tr} != 1")));
        }
        Ok(rho)
    }

    /// Only checks the shape.
    pub fn new_unchecked(n_atoms: usize, mat: DMatrix<C64>) -> Result<Self> {
        check_cap(n_atoms)?;
        let d = dim(n_atoms);
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: mat.nrows().max(mat.ncols()) });
        }
        Ok(Self { n_atoms, mat })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        psi.to_density()
    }

    /// `𝟙 / 2^N`.
    pub fn maximally_mixed(n_atoms: usize) -> Result<Self> {
        check_cap(n_atoms)?;
        let d = dim(n_atoms);
        Ok(Self { n_atoms, mat: DMatrix::identity(d, d) / C64::from(d as f64) })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_hermiticity_error(&self.mat)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.mat + self.mat.adjoint()) * C64::from(0.5);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// All three invariants, with the positivity floor at −1e-8.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::InvalidArgument(format!("density matrix not Hermitian ({herm:e})")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("density matrix trace {tr} != 1")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-8 {
            return Err(Error::InvalidArgument(format!("density matrix not positive ({min:e})")));
        }
        Ok(())
    }

    /// Convex combination `Σ p_i ρ_i`.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let n = first.1.n_atoms;
        let d = dim(n);
        let mut mat = DMatrix::zeros(d, d);
        for (p, rho) in parts {
            if rho.n_atoms != n {
                return Err(Error::DimensionMismatch { expected: n, found: rho.n_atoms });
            }
            mat.zip_apply(&rho.mat, |a, b| *a += b * *p);
        }
        Ok(Self { n_atoms: n, mat })
    }
}

impl QuantumState for DensityMatrix {
    fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: op.dim() });
        }
        // Tr(Oρ) = Σ_ij O_ij ρ_ji
        let o = op.matrix();
        let d = self.dim();
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += o[(i, j)] * self.mat[(j, i)];
            }
        }
        Ok(acc)
    }

    fn expect_product(&self, factors: &[(usize, Axis)]) -> C64 {
        let fm = masks(factors, self.n_atoms);
        let mut acc = ZERO;
        for col in 0..self.dim() {
            if let Some((row, v)) = product_image(col, &fm) {
                acc += v * self.mat[(col, row)];
            }
        }
        acc
    }

    fn to_density(&self) -> DensityMatrix {
        self.clone()
    }
}
