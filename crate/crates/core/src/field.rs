//! Far-field electric-field operators and the six moments behind every witness.
//!
//! The routines here build the 2^N operators explicitly and are the reference
//! path. [`crate::cumulant::moments_from_phases`] evaluates the same moments
//! in O(N²) from one- and two-point correlators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AtomConfig, Direction};
use crate::qstate::{check_cap, pauli_embed, Axis, Operator, PureState, QuantumState, C64, I};

/// The two frequency parts of the field operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldPart {
    /// `Ê⁺ = Σ_j e^{−ik·r_j} σ_j⁻`
    Positive,
    /// `Ê⁻ = Σ_j e^{+ik·r_j} σ_j⁺`
    Negative,
}

/// One of the three collective observables `X̂_k`, `Ŷ_k`, `Ẑ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quadrature {
    X,
    Y,
    Z,
}

impl Quadrature {
    pub const ALL: [Quadrature; 3] = [Quadrature::X, Quadrature::Y, Quadrature::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Quadrature::X => "X",
            Quadrature::Y => "Y",
            Quadrature::Z => "Z",
        }
    }
}

/// `⟨X⟩, ⟨Y⟩, ⟨Z⟩, ⟨X²⟩, ⟨Y²⟩, ⟨Z²⟩` at one observation direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorMoments {
    pub mean_x: f64,
    pub mean_y: f64,
    pub mean_z: f64,
    pub second_x: f64,
    pub second_y: f64,
    pub second_z: f64,
    pub n_atoms: usize,
    /// `None` when the phases were supplied directly rather than from a direction.
    pub direction: Option<Direction>,
}

impl OperatorMoments {
    pub fn mean(&self, q: Quadrature) -> f64 {
        match q {
            Quadrature::X => self.mean_x,
            Quadrature::Y => self.mean_y,
            Quadrature::Z => self.mean_z,
        }
    }

    pub fn second(&self, q: Quadrature) -> f64 {
        match q {
            Quadrature::X => self.second_x,
            Quadrature::Y => self.second_y,
            Quadrature::Z => self.second_z,
        }
    }

    pub fn variance(&self, q: Quadrature) -> f64 {
        self.second(q) - self.mean(q).powi(2)
    }

    /// Largest absolute difference over the six moments.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            self.mean_x - other.mean_x,
            self.mean_y - other.mean_y,
            self.mean_z - other.mean_z,
            self.second_x - other.second_x,
            self.second_y - other.second_y,
            self.second_z - other.second_z,
        ]
        .iter()
        .map(|d| d.abs())
        .fold(0.0, f64::max)
    }

    /// Range checks: second moments in `[0, N²]`, `|⟨Z⟩| ≤ N`, variances ≥ −1e-9.
    pub fn check(&self) -> Result<()> {
        let n = self.n_atoms as f64;
        let tol = 1e-9 * (1.0 + n * n);
        for q in Quadrature::ALL {
            let s = self.second(q);
            if s < -tol || s > n * n + tol {
                return Err(Error::InvalidArgument(format!("<{}²> = {s} outside [0, N²]", q.label())));
            }
            if self.variance(q) < -1e-9 * (1.0 + n * n) {
                return Err(Error::InvalidArgument(format!("negative variance for {}", q.label())));
            }
        }
        if self.mean_z.abs() > n + tol {
            return Err(Error::InvalidArgument(format!("<Z> = {} outside [-N, N]", self.mean_z)));
        }
        Ok(())
    }
}

fn lowering_sum(phases: &[f64], sign: f64) -> Result<Operator> {
    let n = phases.len();
    check_cap(n)?;
    let mut op = Operator::zeros(n)?;
    for (site, &theta) in phases.iter().enumerate() {
        let axis = if sign < 0.0 { Axis::Minus } else { Axis::Plus };
        op.add_scaled(C64::from_polar(1.0, sign * theta), &pauli_embed(site + 1, axis, n)?);
    }
    Ok(op)
}

/// `Ê⁺ = Σ e^{−iθ_j} σ_j⁻` or `Ê⁻ = Σ e^{iθ_j} σ_j⁺` for explicit per-atom phases.
pub fn field_operator_from_phases(phases: &[f64], part: FieldPart) -> Result<Operator> {
    match part {
        FieldPart::Positive => lowering_sum(phases, -1.0),
        FieldPart::Negative => lowering_sum(phases, 1.0),
    }
}

/// Far-field operator `Ê_k^±` with unit prefactor. A nonzero `dir.chi`
/// multiplies `Ê^±` by `e^{±iχ}`.
pub fn field_operator(config: &AtomConfig, dir: &Direction, part: FieldPart) -> Result<Operator> {
    field_operator_from_phases(&config.phases(dir), part)
}

/// `X̂ = Ê⁺ + Ê⁻`, `Ŷ = i(Ê⁺ − Ê⁻)`, `Ẑ = Σ σᶻ`.
#[derive(Debug, Clone)]
pub struct Quadratures {
    pub x: Operator,
    pub y: Operator,
    pub z: Operator,
}

impl Quadratures {
    pub fn get(&self, q: Quadrature) -> &Operator {
        match q {
            Quadrature::X => &self.x,
            Quadrature::Y => &self.y,
            Quadrature::Z => &self.z,
        }
    }
}

pub fn quadratures_from_phases(phases: &[f64]) -> Result<Quadratures> {
    let n = phases.len();
    let e_plus = field_operator_from_phases(phases, FieldPart::Positive)?;
    let e_minus = field_operator_from_phases(phases, FieldPart::Negative)?;
    let x = e_plus.add(&e_minus);
    let y = e_plus.sub(&e_minus).scale(I);
    let mut z = Operator::zeros(n)?;
    for j in 1..=n {
        z.add_scaled(C64::from(1.0), &pauli_embed(j, Axis::Z, n)?);
    }
    Ok(Quadratures { x, y, z })
}

pub fn quadrature_operators(config: &AtomConfig, dir: &Direction) -> Result<Quadratures> {
    quadratures_from_phases(&config.phases(dir))
}

/// Brute-force moments from explicit 2^N operators.
pub fn moments_with_phases<S: QuantumState + ?Sized>(
    state: &S,
    phases: &[f64],
    direction: Option<Direction>,
) -> Result<OperatorMoments> {
    let n = state.n_atoms();
    if phases.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: phases.len() });
    }
    let quads = quadratures_from_phases(phases)?;
    let mut means = [0.0; 3];
    let mut seconds = [0.0; 3];
    for q in Quadrature::ALL {
        let op = quads.get(q);
        means[q.index()] = state.expectation(op)?.re;
        seconds[q.index()] = state.expectation(&op.mul(op))?.re;
    }
    Ok(OperatorMoments {
        mean_x: means[0],
        mean_y: means[1],
        mean_z: means[2],
        second_x: seconds[0],
        second_y: seconds[1],
        second_z: seconds[2],
        n_atoms: n,
        direction,
    })
}

/// Moments of a pure state using two operator–vector products per quadrature.
pub fn pure_moments_with_phases(
    psi: &PureState,
    phases: &[f64],
    direction: Option<Direction>,
) -> Result<OperatorMoments> {
    let n = psi.n_atoms();
    if phases.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: phases.len() });
    }
    let quads = quadratures_from_phases(phases)?;
    let mut means = [0.0; 3];
    let mut seconds = [0.0; 3];
    for q in Quadrature::ALL {
        let v = psi.apply(quads.get(q))?;
        means[q.index()] = psi.amplitudes().dotc(&v).re;
        seconds[q.index()] = v.norm_squared();
    }
    Ok(OperatorMoments {
        mean_x: means[0],
        mean_y: means[1],
        mean_z: means[2],
        second_x: seconds[0],
        second_y: seconds[1],
        second_z: seconds[2],
        n_atoms: n,
        direction,
    })
}

/// Moments of `state` observed along `dir`.
pub fn moments<S: QuantumState + ?Sized>(state: &S, config: &AtomConfig, dir: &Direction) -> Result<OperatorMoments> {
    if config.n_atoms() != state.n_atoms() {
        return Err(Error::DimensionMismatch { expected: state.n_atoms(), found: config.n_atoms() });
    }
    moments_with_phases(state, &config.phases(dir), Some(*dir))
}
