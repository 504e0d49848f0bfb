//! Single-excitation Dicke states with per-atom phases, their O(N²) witness
//! moments, and the Chebyshev phase condition that hides them from `W_0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::OperatorMoments;
use crate::geometry::{AtomConfig, Direction};
use crate::qstate::{check_cap, dim, site_mask, PureState, C64};
use nalgebra::DVector;

/// Phases `φ_n` of `(1/√N) Σ_n e^{iφ_n} |↑_n⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DickeSpec {
    phases: Vec<f64>,
}

impl DickeSpec {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::InvalidArgument("a Dicke state needs at least one atom".into()));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("non-finite Dicke phase".into()));
        }
        Ok(Self { phases })
    }

    /// `φ_n = n·arccos δ` for `n = 1..=N`.
    pub fn chebyshev(n_atoms: usize, delta: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&delta) {
            return Err(Error::InvalidArgument(format!("δ = {delta} outside [-1, 1]")));
        }
        let nu = delta.acos();
        Self::new((1..=n_atoms).map(|k| k as f64 * nu).collect())
    }

    pub fn n_atoms(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }
}

pub fn dicke_state(spec: &DickeSpec) -> Result<PureState> {
    let n = spec.n_atoms();
    check_cap(n)?;
    let d = dim(n);
    let all_down = d - 1;
    let norm = 1.0 / (n as f64).sqrt();
    let mut amps = DVector::zeros(d);
    for (site, &phi) in spec.phases.iter().enumerate() {
        amps[all_down ^ site_mask(site, n)] = C64::from_polar(norm, phi);
    }
    PureState::new(n, amps)
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `Σ_{j≠s} cos(φ_s − φ_j + θ_j − θ_s)` with `θ` the optical phases.
fn cosine_double_sum(spec: &DickeSpec, optical: &[f64]) -> f64 {
    let n = spec.n_atoms();
    // combined per-atom angle ψ_j = θ_j − φ_j; each pair counted twice
    let psi: Vec<f64> = (0..n).map(|j| optical[j] - spec.phases[j]).collect();
    let pairs = (0..n).flat_map(|j| {
        let psi = &psi;
        (j + 1..n).map(move |s| (psi[j] - psi[s]).cos())
    });
    2.0 * compensated_sum(pairs)
}

fn check_shape(spec: &DickeSpec, config: &AtomConfig) -> Result<()> {
    if config.n_atoms() != spec.n_atoms() {
        return Err(Error::DimensionMismatch { expected: spec.n_atoms(), found: config.n_atoms() });
    }
    Ok(())
}

/// Analytic moments of the Dicke state for any N.
pub fn dicke_moments(spec: &DickeSpec, config: &AtomConfig, dir: &Direction) -> Result<OperatorMoments> {
    check_shape(spec, config)?;
    let n = spec.n_atoms() as f64;
    let sum = cosine_double_sum(spec, &config.phases(dir));
    let second = n + 2.0 / n * sum;
    Ok(OperatorMoments {
        mean_x: 0.0,
        mean_y: 0.0,
        mean_z: -(n - 2.0),
        second_x: second,
        second_y: second,
        second_z: n + (n - 4.0) * (n - 1.0),
        n_atoms: spec.n_atoms(),
        direction: Some(*dir),
    })
}

/// `S_k = (4/N) Σ_{j≠s} cos(φ_s − φ_j + θ_j − θ_s)`; equals `w2` and `−w3[Z]`.
pub fn s_k(spec: &DickeSpec, config: &AtomConfig, dir: &Direction) -> Result<f64> {
    check_shape(spec, config)?;
    Ok(4.0 / spec.n_atoms() as f64 * cosine_double_sum(spec, &config.phases(dir)))
}

/// `f(ν) = cos Nν − 1 − N(cos ν − 1)`; zero exactly when `δ = cos ν` solves
/// `T_N(δ) − Nδ + N − 1 = 0`.
fn chebyshev_residual(n: usize, nu: f64) -> f64 {
    let nf = n as f64;
    // 1 − cos x = 2 sin²(x/2) keeps precision near ν = 0
    -2.0 * (nf * nu / 2.0).sin().powi(2) + 2.0 * nf * (nu / 2.0).sin().powi(2)
}

/// Every root `δ ∈ (−1, 1)` of `T_N(δ) − Nδ + N − 1`, in decreasing order.
pub fn chebyshev_roots(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidArgument("the Chebyshev condition needs N ≥ 2".into()));
    }
    let steps = 64 * n;
    let h = std::f64::consts::PI / steps as f64;
    let mut roots = Vec::new();
    // ν = 0 is the excluded root δ = 1; start the scan just past it
    let mut a = h * 1e-3;
    let mut fa = chebyshev_residual(n, a);
    for i in 1..=steps {
        let b = if i == steps { std::f64::consts::PI - h * 1e-3 } else { i as f64 * h };
        let fb = chebyshev_residual(n, b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = chebyshev_residual(n, mid);
                if fm == 0.0 || hi - lo < 1e-17 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    let mut deltas: Vec<f64> = roots.into_iter().map(f64::cos).filter(|d| d.abs() < 1.0).collect();
    deltas.sort_by(|x, y| y.total_cmp(x));
    deltas.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    if deltas.is_empty() {
        return Err(Error::NoChebyshevRoot(n));
    }
    Ok(deltas)
}

/// Largest interior root of `T_N(δ) − Nδ + N − 1 = 0`.
pub fn chebyshev_delta(n: usize) -> Result<f64> {
    chebyshev_roots(n).map(|r| r[0])
}

/// `Σ_{j≠s} cos(φ_j − φ_s)` for `φ_n = n·arccos δ`.
pub fn chebyshev_zero_sum(n: usize, delta: f64) -> Result<f64> {
    let spec = DickeSpec::chebyshev(n, delta)?;
    Ok(cosine_double_sum(&spec, &vec![0.0; n]))
}

/// `T_N(δ) − Nδ + N − 1` evaluated by the three-term recurrence.
pub fn chebyshev_polynomial_residual(n: usize, delta: f64) -> f64 {
    let (mut t0, mut t1) = (1.0, delta);
    for _ in 1..n {
        let t2 = 2.0 * delta * t1 - t0;
        t0 = t1;
        t1 = t2;
    }
    let tn = if n == 0 { 1.0 } else { t1 };
    tn - n as f64 * delta + n as f64 - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::moments;
    use crate::geometry::chain;
    use crate::witness::witness_report;
    use std::f64::consts::PI;

    #[test]
    fn two_atom_states() {
        let s = dicke_state(&DickeSpec::new(vec![0.0, 0.0]).unwrap()).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((s.amplitudes()[1].re - r).abs() < 1e-15 && (s.amplitudes()[2].re - r).abs() < 1e-15);
        let t = dicke_state(&DickeSpec::new(vec![0.0, PI]).unwrap()).unwrap();
        assert!((t.amplitudes()[1] + t.amplitudes()[2]).norm() < 1e-15);
    }

    #[test]
    fn three_atom_amplitudes() {
        let spec = DickeSpec::new((1..=3).map(|n| n as f64 * PI / 3.0).collect()).unwrap();
        let s = dicke_state(&spec).unwrap();
        // |↑↓↓⟩ = 0b011, |↓↑↓⟩ = 0b101, |↓↓↑⟩ = 0b110
        for (idx, k) in [(3, 1.0), (5, 2.0), (6, 3.0)] {
            assert!((s.amplitudes()[idx] - C64::from_polar(1.0 / 3f64.sqrt(), k * PI / 3.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn four_atom_collective_moments() {
        let spec = DickeSpec::new(vec![0.0; 4]).unwrap();
        let cfg = chain(4, 0.5).unwrap();
        let dir = Direction::new(crate::geometry::Vec3::z()).unwrap();
        let m = dicke_moments(&spec, &cfg, &dir).unwrap();
        let got = [m.mean_x, m.mean_y, m.mean_z, m.second_x, m.second_y, m.second_z];
        for (a, b) in got.iter().zip([0.0, 0.0, -2.0, 10.0, 10.0, 4.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let brute = moments(&dicke_state(&spec).unwrap(), &cfg, &dir).unwrap();
        assert!(m.max_abs_diff(&brute) < 1e-12);
    }

    #[test]
    fn analytic_matches_brute_force_off_axis() {
        let spec = DickeSpec::new(vec![0.3, -1.0, 2.2, 0.9, 1.4]).unwrap();
        let cfg = crate::geometry::spherical_cloud(5, 1.2, 2, 0.05).unwrap();
        let dir = Direction::from_angles(1.1, 0.4).with_chi(0.6);
        let a = dicke_moments(&spec, &cfg, &dir).unwrap();
        let b = moments(&dicke_state(&spec).unwrap(), &cfg, &dir).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
        let r = witness_report(&a);
        assert!((r.w2 - s_k(&spec, &cfg, &dir).unwrap()).abs() < 1e-12);
        assert!((r.w2 + r.w3[2]).abs() < 1e-12);
    }

    #[test]
    fn s_k_examples() {
        let cfg = chain(2, 1.0).unwrap();
        let perp = Direction::new(crate::geometry::Vec3::z()).unwrap();
        let zero = DickeSpec::new(vec![0.0, PI / 2.0]).unwrap();
        assert!(s_k(&zero, &cfg, &perp).unwrap().abs() < 1e-15);
        let bell = DickeSpec::new(vec![0.0, 0.0]).unwrap();
        assert!((s_k(&bell, &cfg, &perp).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_small_n() {
        assert!(chebyshev_delta(2).unwrap().abs() < 1e-12);
        for n in 2..=12 {
            for d in chebyshev_roots(n).unwrap() {
                assert!(chebyshev_polynomial_residual(n, d).abs() < 1e-10, "n = {n}, δ = {d}");
                assert!(chebyshev_zero_sum(n, d).unwrap().abs() < 1e-9);
            }
        }
        assert!(chebyshev_roots(1).is_err());
    }

    #[test]
    fn chebyshev_hundred() {
        let roots = chebyshev_roots(100).unwrap();
        let d = roots[0];
        assert!((0.996..0.999).contains(&d), "δ = {d}");
        assert!(chebyshev_zero_sum(100, d).unwrap().abs() < 1e-6);
        assert!(roots.windows(2).all(|w| w[0] > w[1]));
    }
}
