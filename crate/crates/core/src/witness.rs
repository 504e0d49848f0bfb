//! The eight field-based witnesses and their minimum `W_k`.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cumulant::{moments_from_phases, CumulantState};
use crate::error::{Error, Result};
use crate::field::{moments_with_phases, OperatorMoments, Quadrature};
use crate::geometry::{AtomConfig, Direction};
use crate::qstate::QuantumState;

/// Cyclic assignments `(A, B, C)` of `(X, Y, Z)`.
pub const CYCLIC: [(Quadrature, Quadrature, Quadrature); 3] = [
    (Quadrature::X, Quadrature::Y, Quadrature::Z),
    (Quadrature::Y, Quadrature::Z, Quadrature::X),
    (Quadrature::Z, Quadrature::X, Quadrature::Y),
];

/// Which of the eight witnesses a value belongs to. `W3` is keyed by its
/// `A` label, `W4` by its `C` label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WitnessLabel {
    W1,
    W2,
    W3(Quadrature),
    W4(Quadrature),
}

impl fmt::Display for WitnessLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WitnessLabel::W1 => write!(f, "w1"),
            WitnessLabel::W2 => write!(f, "w2"),
            WitnessLabel::W3(q) => write!(f, "w3_{}", q.label()),
            WitnessLabel::W4(q) => write!(f, "w4_{}", q.label()),
        }
    }
}

/// All eight witness values at one direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub w1: f64,
    pub w2: f64,
    /// Indexed by [`Quadrature::index`] of the `A` label.
    pub w3: [f64; 3],
    /// Indexed by [`Quadrature::index`] of the `C` label.
    pub w4: [f64; 3],
    pub w_min: f64,
    pub argmin: WitnessLabel,
    pub direction: Option<Direction>,
}

impl WitnessReport {
    pub fn w3(&self, a: Quadrature) -> f64 {
        self.w3[a.index()]
    }

    pub fn w4(&self, c: Quadrature) -> f64 {
        self.w4[c.index()]
    }

    /// Values in CSV column order: w1, w2, w3_X, w3_Y, w3_Z, w4_X, w4_Y, w4_Z.
    pub fn values(&self) -> [(WitnessLabel, f64); 8] {
        use Quadrature::*;
        [
            (WitnessLabel::W1, self.w1),
            (WitnessLabel::W2, self.w2),
            (WitnessLabel::W3(X), self.w3[0]),
            (WitnessLabel::W3(Y), self.w3[1]),
            (WitnessLabel::W3(Z), self.w3[2]),
            (WitnessLabel::W4(X), self.w4[0]),
            (WitnessLabel::W4(Y), self.w4[1]),
            (WitnessLabel::W4(Z), self.w4[2]),
        ]
    }

    pub fn is_entangled(&self, epsilon: f64) -> bool {
        self.w_min < -epsilon
    }
}

/// Detection tolerance `ε = 1e-6·N`.
pub fn detection_threshold(n_atoms: usize) -> f64 {
    1e-6 * n_atoms as f64
}

/// Evaluates every witness from the six moments.
pub fn witness_report(m: &OperatorMoments) -> WitnessReport {
    let n = m.n_atoms as f64;
    let second = |q| m.second(q);
    let var = |q| m.variance(q);

    let w1 = n * (2.0 + n) - second(Quadrature::X) - second(Quadrature::Y) - second(Quadrature::Z);
    let w2 = var(Quadrature::X) + var(Quadrature::Y) + var(Quadrature::Z) - 2.0 * n;
    let mut w3 = [0.0; 3];
    let mut w4 = [0.0; 3];
    for (a, b, c) in CYCLIC {
        w3[a.index()] = 2.0 * n + (n - 1.0) * var(a) - second(b) - second(c);
        w4[c.index()] = (n - 1.0) * (var(a) + var(b)) - second(c) - n * (n - 2.0);
    }
    let mut report =
        WitnessReport { w1, w2, w3, w4, w_min: f64::INFINITY, argmin: WitnessLabel::W1, direction: m.direction };
    for (label, v) in report.values() {
        if v < report.w_min {
            report.w_min = v;
            report.argmin = label;
        }
    }
    report
}

/// The `k = 0` report: every optical-path phase is zero, recovering the
/// collective-spin squeezing inequalities.
pub fn spin_squeezing_report<S: QuantumState + ?Sized>(state: &S, config: &AtomConfig) -> Result<WitnessReport> {
    let n = state.n_atoms();
    if config.n_atoms() != n {
        return Err(Error::DimensionMismatch { expected: n, found: config.n_atoms() });
    }
    let m = moments_with_phases(state, &vec![0.0; n], None)?;
    Ok(witness_report(&m))
}

/// Moments where atom `j`'s optical-path phase is replaced by `phases[j]`.
pub fn phase_vector_moments<S: QuantumState + ?Sized>(
    state: &S,
    config: &AtomConfig,
    phases: &[f64],
) -> Result<OperatorMoments> {
    let n = state.n_atoms();
    if config.n_atoms() != n {
        return Err(Error::DimensionMismatch { expected: n, found: config.n_atoms() });
    }
    if phases.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: phases.len() });
    }
    moments_with_phases(state, phases, None)
}

/// One report per direction, in input order.
///
/// Correlators are extracted from the state once; each direction then costs
/// O(N²). The result does not depend on the rayon schedule.
pub fn sweep<S: QuantumState + ?Sized>(
    state: &S,
    config: &AtomConfig,
    directions: &[Direction],
) -> Result<Vec<WitnessReport>> {
    if directions.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one direction".into()));
    }
    let n = state.n_atoms();
    if config.n_atoms() != n {
        return Err(Error::DimensionMismatch { expected: n, found: config.n_atoms() });
    }
    let corr = CumulantState::from_state(state);
    Ok(sweep_correlators(&corr, config, directions))
}

/// [`sweep`] over an already-extracted correlator set.
pub fn sweep_correlators(corr: &CumulantState, config: &AtomConfig, directions: &[Direction]) -> Vec<WitnessReport> {
    directions
        .par_iter()
        .map(|dir| witness_report(&moments_from_phases(corr, &config.phases(dir), Some(*dir))))
        .collect()
}

/// Smallest `w_min` over `chi ∈ {2πi/n_chi}` at a fixed `k̂`, and the `chi`
/// that attains it.
pub fn min_over_chi(corr: &CumulantState, config: &AtomConfig, dir: &Direction, n_chi: usize) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..n_chi.max(1) {
        let chi = 2.0 * std::f64::consts::PI * i as f64 / n_chi.max(1) as f64;
        let d = dir.with_chi(chi);
        let w = witness_report(&moments_from_phases(corr, &config.phases(&d), Some(d))).w_min;
        if w < best.0 {
            best = (w, chi);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicke::{dicke_state, DickeSpec};
    use crate::geometry::{chain, Vec3};
    use crate::qstate::PureState;
    use std::f64::consts::PI;

    fn bell() -> PureState {
        dicke_state(&DickeSpec::new(vec![0.0, 0.0]).unwrap()).unwrap()
    }

    #[test]
    fn ground_state_saturates_everything() {
        for n in 1..=5 {
            let m = OperatorMoments {
                mean_x: 0.0,
                mean_y: 0.0,
                mean_z: -(n as f64),
                second_x: n as f64,
                second_y: n as f64,
                second_z: (n * n) as f64,
                n_atoms: n,
                direction: None,
            };
            let r = witness_report(&m);
            for (_, v) in r.values() {
                assert_eq!(v, 0.0);
            }
            assert_eq!(r.w_min, 0.0);
        }
    }

    #[test]
    fn bell_state_detected_by_w3_z() {
        let cfg = chain(2, 1.0).unwrap();
        let r = spin_squeezing_report(&bell(), &cfg).unwrap();
        assert!(r.w1.abs() < 1e-12);
        assert!((r.w2 - 4.0).abs() < 1e-12);
        assert!((r.w3(Quadrature::Z) + 4.0).abs() < 1e-12);
        assert!((r.w_min + 4.0).abs() < 1e-12);
        assert_eq!(r.argmin, WitnessLabel::W3(Quadrature::Z));
        assert!(r.is_entangled(detection_threshold(2)));
    }

    #[test]
    fn bell_with_opposite_phases() {
        let cfg = chain(2, 1.0).unwrap();
        let m = phase_vector_moments(&bell(), &cfg, &[0.0, PI]).unwrap();
        assert!(m.second_x.abs() < 1e-12 && m.second_y.abs() < 1e-12);
        let r = witness_report(&m);
        assert!((r.w3(Quadrature::Z) - 4.0).abs() < 1e-12);
        // this phase choice flips the detection onto w2
        assert!((r.w2 + 4.0).abs() < 1e-12);
    }

    #[test]
    fn phase_vector_matches_direction() {
        let cfg = chain(3, 0.45).unwrap();
        let psi = crate::qstate::product_state(&[(0.2, 0.0), (1.9, 1.0), (2.5, -0.4)]).unwrap();
        let dir = Direction::from_angles(0.8, 0.3);
        let a = crate::field::moments(&psi, &cfg, &dir).unwrap();
        let b = phase_vector_moments(&psi, &cfg, &cfg.phases(&dir)).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
        let zero = phase_vector_moments(&psi, &cfg, &[0.0; 3]).unwrap();
        let ss = spin_squeezing_report(&psi, &cfg).unwrap();
        assert_eq!(witness_report(&zero).w_min, ss.w_min);
    }

    #[test]
    fn perpendicular_direction_reproduces_spin_squeezing() {
        let cfg = chain(3, 0.3).unwrap();
        let psi = crate::qstate::product_state(&[(0.2, 0.0), (1.9, 1.0), (2.5, -0.4)]).unwrap();
        let dir = Direction::new(Vec3::new(0.0, -0.3, 1.0)).unwrap();
        let a = witness_report(&crate::field::moments(&psi, &cfg, &dir).unwrap());
        let b = spin_squeezing_report(&psi, &cfg).unwrap();
        for ((_, x), (_, y)) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn single_direction_sweep() {
        let cfg = chain(2, 0.8).unwrap();
        let dir = Direction::in_plane(0.3);
        let s = sweep(&bell(), &cfg, &[dir]).unwrap();
        let r = witness_report(&crate::field::moments(&bell(), &cfg, &dir).unwrap());
        assert_eq!(s.len(), 1);
        for ((_, x), (_, y)) in s[0].values().iter().zip(r.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_rejects_empty() {
        let cfg = chain(2, 0.8).unwrap();
        assert!(sweep(&bell(), &cfg, &[]).is_err());
    }

    #[test]
    fn labels_format() {
        assert_eq!(WitnessLabel::W3(Quadrature::Y).to_string(), "w3_Y");
        assert_eq!(WitnessLabel::W1.to_string(), "w1");
    }
}
