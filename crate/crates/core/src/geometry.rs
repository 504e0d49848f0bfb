//! Emitter arrangements and observation directions.
//!
//! Natural units throughout: lengths in 1/k, times in 1/Γ.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Bounded number of full re-draws attempted by [`spherical_cloud`].
pub const CLOUD_MAX_ATTEMPTS: usize = 10_000;

/// Default exclusion radius for random clouds.
pub const DEFAULT_MIN_SEPARATION: f64 = 0.05;

/// Positions and (real, unit) polarizations of N emitters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomConfig {
    positions: Vec<Vec3>,
    polarizations: Vec<Vec3>,
}

impl AtomConfig {
    /// Validates that no two atoms coincide and that every polarization is
    /// a unit vector (within 1e-12).
    pub fn new(positions: Vec<Vec3>, polarizations: Vec<Vec3>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidArgument("at least one atom is required".into()));
        }
        if positions.len() != polarizations.len() {
            return Err(Error::DimensionMismatch { expected: positions.len(), found: polarizations.len() });
        }
        for (j, p) in polarizations.iter().enumerate() {
            if (p.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!("polarization of atom {} is not unit-norm", j + 1)));
            }
        }
        for j in 0..positions.len() {
            for m in j + 1..positions.len() {
                if (positions[j] - positions[m]).norm() == 0.0 {
                    return Err(Error::CoincidentAtoms(j + 1, m + 1));
                }
            }
        }
        Ok(Self { positions, polarizations })
    }

    /// All atoms share polarization `pol` (normalized here).
    pub fn with_uniform_polarization(positions: Vec<Vec3>, pol: Vec3) -> Result<Self> {
        let norm = pol.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidArgument("zero polarization vector".into()));
        }
        let pol = pol / norm;
        let n = positions.len();
        Self::new(positions, vec![pol; n])
    }

    pub fn n_atoms(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn polarizations(&self) -> &[Vec3] {
        &self.polarizations
    }

    /// Rigidly shifted copy.
    pub fn translated(&self, offset: Vec3) -> Self {
        Self {
            positions: self.positions.iter().map(|p| p + offset).collect(),
            polarizations: self.polarizations.clone(),
        }
    }

    /// Copy with atoms reordered so that new atom `i` is old atom `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n_atoms() {
            return Err(Error::DimensionMismatch { expected: self.n_atoms(), found: order.len() });
        }
        Ok(Self {
            positions: order.iter().map(|&i| self.positions[i]).collect(),
            polarizations: order.iter().map(|&i| self.polarizations[i]).collect(),
        })
    }

    pub fn min_pair_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for j in 0..self.positions.len() {
            for m in j + 1..self.positions.len() {
                best = best.min((self.positions[j] - self.positions[m]).norm());
            }
        }
        best
    }

    /// Optical-path phases `k·r_j − χ` seen from `dir` (|k| = 1).
    pub fn phases(&self, dir: &Direction) -> Vec<f64> {
        self.positions.iter().map(|r| dir.khat.dot(r) - dir.chi).collect()
    }
}

/// Regular chain along x̂, centred on the origin, polarized along ẑ.
pub fn chain(n: usize, spacing: f64) -> Result<AtomConfig> {
    if n == 0 {
        return Err(Error::InvalidArgument("chain needs at least one atom".into()));
    }
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::InvalidArgument(format!("chain spacing must be positive, got {spacing}")));
    }
    let centre = (n as f64 + 1.0) / 2.0;
    let positions = (1..=n).map(|j| Vec3::new((j as f64 - centre) * spacing, 0.0, 0.0)).collect();
    AtomConfig::with_uniform_polarization(positions, Vec3::z())
}

/// Uniform random points in a ball of `radius`, re-drawn until every pair is at
/// least `min_separation` apart. Polarized along ẑ. Deterministic for a seed.
pub fn spherical_cloud(n: usize, radius: f64, seed: u64, min_separation: f64) -> Result<AtomConfig> {
    if n == 0 {
        return Err(Error::InvalidArgument("cloud needs at least one atom".into()));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!("cloud radius must be positive, got {radius}")));
    }
    if !(min_separation > 0.0) {
        return Err(Error::InvalidArgument("min_separation must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<Vec3> = Vec::with_capacity(n);
    let mut attempts = 0;
    // sequential rejection; restart from scratch when a point cannot be placed
    while positions.len() < n {
        if attempts >= CLOUD_MAX_ATTEMPTS {
            return Err(Error::PackingInfeasible { n_atoms: n, min_separation, attempts });
        }
        let candidate = sample_ball(&mut rng, radius);
        if positions.iter().all(|p| (p - candidate).norm() >= min_separation) {
            positions.push(candidate);
        } else {
            attempts += 1;
            if attempts % 1000 == 0 {
                positions.clear();
            }
        }
    }
    AtomConfig::with_uniform_polarization(positions, Vec3::z())
}

fn sample_ball(rng: &mut impl Rng, radius: f64) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if v.norm_squared() <= 1.0 {
            return v * radius;
        }
    }
}

/// Observation direction `k̂` plus a global quadrature rotation `χ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub khat: Vec3,
    pub chi: f64,
}

impl Direction {
    /// Normalizes `k`; rejects the zero vector.
    pub fn new(k: Vec3) -> Result<Self> {
        let norm = k.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument("direction must be a nonzero finite vector".into()));
        }
        Ok(Self { khat: k / norm, chi: 0.0 })
    }

    /// Polar angle `θ` from the chain axis x̂ and azimuth `φ` about it,
    /// measured from ŷ: `k̂ = (cos θ, sin θ cos φ, sin θ sin φ)`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self { khat: Vec3::new(theta.cos(), theta.sin() * phi.cos(), theta.sin() * phi.sin()), chi: 0.0 }
    }

    /// `(cos θ, sin θ, 0)`: angle `θ` from the x axis within the xy-plane.
    pub fn in_plane(theta: f64) -> Self {
        Self { khat: Vec3::new(theta.cos(), theta.sin(), 0.0), chi: 0.0 }
    }

    pub fn with_chi(mut self, chi: f64) -> Self {
        self.chi = chi;
        self
    }

    /// `(θ, φ)` as in [`Direction::from_angles`], with `φ ∈ [0, 2π)`.
    pub fn angles(&self) -> (f64, f64) {
        let theta = self.khat.x.clamp(-1.0, 1.0).acos();
        let mut phi = self.khat.z.atan2(self.khat.y);
        if phi < 0.0 {
            phi += 2.0 * PI;
        }
        (theta, phi)
    }
}

/// Direction grid shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum DirectionGrid {
    /// Polar midpoints `(i + ½)π/n_theta` (no pole duplicates) times
    /// azimuths `2πj/n_phi`, with the pole on the chain axis.
    Sphere { n_theta: usize, n_phi: usize },
    /// `θ_i = iπ/(n − 1)` in the xy-plane, `k̂ = (cos θ, sin θ, 0)`.
    PlaneSweep { n_angles: usize },
}

/// Sphere grids run over `(θ, φ)`; sweeps are the `φ = 0` half circle.
pub fn direction_grid(kind: DirectionGrid) -> Vec<Direction> {
    match kind {
        DirectionGrid::Sphere { n_theta, n_phi } => {
            let mut out = Vec::with_capacity(n_theta * n_phi);
            for i in 0..n_theta {
                let polar = (i as f64 + 0.5) * PI / n_theta as f64;
                for j in 0..n_phi {
                    let azimuth = 2.0 * PI * j as f64 / n_phi as f64;
                    out.push(Direction::from_angles(polar, azimuth));
                }
            }
            out
        }
        DirectionGrid::PlaneSweep { n_angles } => {
            plane_sweep_angles(n_angles).into_iter().map(Direction::in_plane).collect()
        }
    }
}

/// The in-plane angles of a `PlaneSweep` grid.
pub fn plane_sweep_angles(n_angles: usize) -> Vec<f64> {
    match n_angles {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_atom_chain_is_centred() {
        let c = chain(3, 0.3).unwrap();
        let xs: Vec<f64> = c.positions().iter().map(|p| p.x).collect();
        assert!((xs[0] + 0.3).abs() < 1e-15 && xs[1].abs() < 1e-15 && (xs[2] - 0.3).abs() < 1e-15);
        assert!(c.polarizations().iter().all(|p| *p == Vec3::z()));
    }

    #[test]
    fn single_atom_chain_at_origin() {
        let c = chain(1, 7.0).unwrap();
        assert_eq!(c.positions()[0], Vec3::zeros());
    }

    #[test]
    fn chain_pair_distances() {
        let d = PI / 2.0;
        let c = chain(6, d).unwrap();
        for j in 0..6 {
            for m in 0..6 {
                let dist = (c.positions()[j] - c.positions()[m]).norm();
                assert!((dist - (j as f64 - m as f64).abs() * d).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn chain_rejects_bad_spacing() {
        assert!(chain(3, 0.0).is_err());
        assert!(chain(3, -1.0).is_err());
        assert!(chain(0, 1.0).is_err());
    }

    #[test]
    fn cloud_respects_bounds_and_is_deterministic() {
        let a = spherical_cloud(8, 2.0, 17, DEFAULT_MIN_SEPARATION).unwrap();
        let b = spherical_cloud(8, 2.0, 17, DEFAULT_MIN_SEPARATION).unwrap();
        assert_eq!(a, b);
        assert!(a.positions().iter().all(|p| p.norm() <= 2.0));
        assert!(a.min_pair_distance() >= DEFAULT_MIN_SEPARATION);
        let one = spherical_cloud(1, 1.0, 3, DEFAULT_MIN_SEPARATION).unwrap();
        assert!(one.positions()[0].norm() <= 1.0);
    }

    #[test]
    fn cloud_packing_infeasible() {
        let err = spherical_cloud(50, 0.1, 1, 0.1).unwrap_err();
        assert!(matches!(err, Error::PackingInfeasible { attempts, .. } if attempts == CLOUD_MAX_ATTEMPTS));
    }

    #[test]
    fn coincident_atoms_rejected() {
        let r = vec![Vec3::zeros(), Vec3::zeros()];
        assert_eq!(AtomConfig::with_uniform_polarization(r, Vec3::z()).unwrap_err(), Error::CoincidentAtoms(1, 2));
    }

    #[test]
    fn plane_sweep_three() {
        let dirs = direction_grid(DirectionGrid::PlaneSweep { n_angles: 3 });
        let want = [Vec3::x(), Vec3::y(), -Vec3::x()];
        for (d, w) in dirs.iter().zip(want) {
            assert!((d.khat - w).norm() < 1e-15);
        }
    }

    #[test]
    fn plane_sweep_hits_045_pi() {
        for n in [21, 41, 101, 201] {
            let angles = plane_sweep_angles(n);
            assert!(angles.iter().any(|&t| t == 0.45 * PI || (t - 0.45 * PI).abs() < 1e-15));
        }
    }

    #[test]
    fn sphere_grid_is_unit_and_distinct() {
        let dirs = direction_grid(DirectionGrid::Sphere { n_theta: 2, n_phi: 4 });
        assert_eq!(dirs.len(), 8);
        for (i, a) in dirs.iter().enumerate() {
            assert!((a.khat.norm() - 1.0).abs() < 1e-12);
            for b in &dirs[i + 1..] {
                assert!((a.khat - b.khat).norm() > 1e-6);
            }
        }
    }

    #[test]
    fn angles_roundtrip() {
        let d = Direction::from_angles(1.1, 4.0);
        let (p, a) = d.angles();
        assert!((p - 1.1).abs() < 1e-12 && (a - 4.0).abs() < 1e-12);
        assert!((Direction::from_angles(0.7, 0.0).khat - Direction::in_plane(0.7).khat).norm() < 1e-15);
    }

    #[test]
    fn sphere_equator_is_perpendicular_to_chain() {
        let d = direction_grid(DirectionGrid::Sphere { n_theta: 1, n_phi: 1 });
        assert!(d[0].khat.x.abs() < 1e-15);
    }
}
