//! Random separable states and a fuzz harness for the separability bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cumulant::{moments_from_phases, CumulantState};
use crate::dicke::{dicke_state, DickeSpec};
use crate::error::{Error, Result};
use crate::geometry::{spherical_cloud, AtomConfig, Direction, Vec3};
use crate::qstate::{check_cap, product_state, DensityMatrix, PureState, QuantumState};
use crate::witness::{witness_report, WitnessLabel};

/// Witness values below this count as a violation of a separability bound.
pub const VIOLATION_TOLERANCE: f64 = 1e-9;

/// `ρ = Σ_l p_l ⊗_j |θ_lj, φ_lj⟩⟨θ_lj, φ_lj|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableSpec {
    pub n_atoms: usize,
    pub weights: Vec<f64>,
    /// `bloch_angles[l][j]`
    pub bloch_angles: Vec<Vec<(f64, f64)>>,
}

impl SeparableSpec {
    pub fn n_terms(&self) -> usize {
        self.weights.len()
    }

    pub fn density(&self) -> Result<DensityMatrix> {
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || self.weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidArgument("weights must lie on the simplex".into()));
        }
        let parts = self
            .bloch_angles
            .iter()
            .zip(&self.weights)
            .map(|(angles, &w)| Ok((w, product_state(angles)?.to_density())))
            .collect::<Result<Vec<_>>>()?;
        DensityMatrix::mixture(&parts)
    }
}

/// Haar-uniform point on the Bloch sphere.
fn bloch_sample<R: Rng>(rng: &mut R) -> (f64, f64) {
    let cos_t: f64 = rng.random_range(-1.0..=1.0);
    (cos_t.acos(), rng.random_range(0.0..std::f64::consts::TAU))
}

fn unit_sample<R: Rng>(rng: &mut R) -> Vec3 {
    let (t, p) = bloch_sample(rng);
    Vec3::new(t.sin() * p.cos(), t.sin() * p.sin(), t.cos())
}

fn draw_separable<R: Rng>(rng: &mut R, n_atoms: usize, n_terms: usize) -> Result<SeparableSpec> {
    check_cap(n_atoms)?;
    if n_terms == 0 {
        return Err(Error::InvalidArgument("a mixture needs at least one term".into()));
    }
    // normalized Exp(1) draws form a symmetric Dirichlet(1) sample
    let raw: Vec<f64> = (0..n_terms).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    let bloch_angles = (0..n_terms).map(|_| (0..n_atoms).map(|_| bloch_sample(rng)).collect()).collect();
    Ok(SeparableSpec { n_atoms, weights, bloch_angles })
}

/// A random separable state: Dirichlet(1) weights and Haar-random pure
/// single-atom factors.
pub fn random_separable(n_atoms: usize, n_terms: usize, seed: u64) -> Result<(SeparableSpec, DensityMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = draw_separable(&mut rng, n_atoms, n_terms)?;
    let rho = spec.density()?;
    Ok((spec, rho))
}

/// Known states evaluated alongside the random ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Control {
    /// `|↓↓⟩`: every witness must vanish.
    Ground,
    /// `(|↑↓⟩ + |↓↑⟩)/√2` at zero optical phase: must be detected.
    Bell,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzOptions {
    pub n_min: usize,
    pub n_max: usize,
    pub trials: usize,
    pub max_terms: usize,
    pub dirs_per_trial: usize,
    pub chi_per_trial: usize,
    /// Radius of the random cloud each trial places its atoms in.
    pub cloud_radius: f64,
    pub seed: u64,
}

impl Default for FuzzOptions {
    fn default() -> Self {
        Self {
            n_min: 2,
            n_max: 6,
            trials: 10_000,
            max_terms: 4,
            dirs_per_trial: 4,
            chi_per_trial: 4,
            cloud_radius: 2.0,
            seed: 0,
        }
    }
}

/// Where the smallest witness value was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzArgmin {
    pub trial: usize,
    pub n_atoms: usize,
    pub n_terms: usize,
    pub witness: String,
    pub value: f64,
    pub theta: f64,
    pub phi: f64,
    pub chi: f64,
    /// The rng stream that reproduces the trial under the report's seed.
    pub stream: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlOutcome {
    pub control: Control,
    pub w_min: f64,
    pub witness: String,
    pub all_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub options: FuzzOptions,
    pub evaluations: usize,
    pub min_value: f64,
    pub argmin: Option<FuzzArgmin>,
    pub violations: usize,
    /// Counts of the per-trial minimum.
    pub histogram: Vec<HistogramBin>,
    pub controls: Vec<ControlOutcome>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

const HISTOGRAM_EDGES: [f64; 8] = [f64::NEG_INFINITY, -VIOLATION_TOLERANCE, 1e-6, 1e-3, 1e-1, 1.0, 10.0, f64::INFINITY];

struct TrialMin {
    value: f64,
    argmin: FuzzArgmin,
    violations: usize,
    evaluations: usize,
}

/// Minimum witness value of `state` over every `(direction, chi)` pair.
fn scan_state<S: QuantumState + ?Sized>(
    state: &S,
    config: &AtomConfig,
    directions: &[Direction],
    chis: &[f64],
) -> (f64, WitnessLabel, Direction, usize, usize) {
    let corr = CumulantState::from_state(state);
    let mut best = (f64::INFINITY, WitnessLabel::W1, directions[0]);
    let mut violations = 0;
    let mut evaluations = 0;
    for dir in directions {
        for &chi in chis {
            let d = dir.with_chi(chi);
            let r = witness_report(&moments_from_phases(&corr, &config.phases(&d), Some(d)));
            evaluations += 8;
            violations += r.values().iter().filter(|(_, v)| *v < -VIOLATION_TOLERANCE).count();
            if r.w_min < best.0 {
                best = (r.w_min, r.argmin, d);
            }
        }
    }
    (best.0, best.1, best.2, violations, evaluations)
}

fn run_trial(opts: &FuzzOptions, trial: usize) -> Result<TrialMin> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(trial as u64);
    let n = rng.random_range(opts.n_min..=opts.n_max);
    let l = rng.random_range(1..=opts.max_terms);
    let spec = draw_separable(&mut rng, n, l)?;
    let rho = spec.density()?;
    let cloud = spherical_cloud(n, opts.cloud_radius, rng.random(), 1e-3)?;
    let pols = (0..n).map(|_| unit_sample(&mut rng)).collect();
    let config = AtomConfig::new(cloud.positions().to_vec(), pols)?;
    let dirs: Vec<Direction> = (0..opts.dirs_per_trial)
        .map(|_| {
            let (t, p) = bloch_sample(&mut rng);
            Direction::from_angles(t, p)
        })
        .collect();
    let chis: Vec<f64> = (0..opts.chi_per_trial).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let (value, label, dir, violations, evaluations) = scan_state(&rho, &config, &dirs, &chis);
    let (theta, phi) = dir.angles();
    Ok(TrialMin {
        value,
        argmin: FuzzArgmin {
            trial,
            n_atoms: n,
            n_terms: l,
            witness: label.to_string(),
            value,
            theta,
            phi,
            chi: dir.chi,
            stream: trial as u64,
        },
        violations,
        evaluations,
    })
}

fn run_control(control: Control) -> Result<ControlOutcome> {
    let state: PureState = match control {
        Control::Ground => PureState::ground(2)?,
        Control::Bell => dicke_state(&DickeSpec::new(vec![0.0, 0.0])?)?,
    };
    let config = crate::geometry::chain(2, 1.0)?;
    let r = crate::witness::spin_squeezing_report(&state, &config)?;
    Ok(ControlOutcome {
        control,
        w_min: r.w_min,
        witness: r.argmin.to_string(),
        all_values: r.values().iter().map(|(_, v)| *v).collect(),
    })
}

/// Evaluates all eight witnesses on `opts.trials` random separable states,
/// each in a random cloud, at random directions and quadrature angles.
///
/// Trial `i` draws from `ChaCha8(seed)` on stream `i`, so reports do not
/// depend on the worker count.
pub fn fuzz_witnesses(opts: &FuzzOptions, controls: &[Control]) -> Result<FuzzReport> {
    if opts.trials == 0 {
        return Err(Error::InvalidArgument("fuzzing needs at least one trial".into()));
    }
    if opts.n_min == 0 || opts.n_min > opts.n_max {
        return Err(Error::InvalidArgument("invalid atom-number range".into()));
    }
    check_cap(opts.n_max)?;
    if opts.max_terms == 0 || opts.dirs_per_trial == 0 || opts.chi_per_trial == 0 {
        return Err(Error::InvalidArgument("terms, directions and chi samples must be positive".into()));
    }
    let results = (0..opts.trials).into_par_iter().map(|i| run_trial(opts, i)).collect::<Result<Vec<_>>>()?;

    let mut histogram: Vec<HistogramBin> =
        HISTOGRAM_EDGES.windows(2).map(|w| HistogramBin { lower: w[0], upper: w[1], count: 0 }).collect();
    let mut report = FuzzReport {
        options: *opts,
        evaluations: 0,
        min_value: f64::INFINITY,
        argmin: None,
        violations: 0,
        histogram: Vec::new(),
        controls: Vec::new(),
    };
    for t in results {
        report.evaluations += t.evaluations;
        report.violations += t.violations;
        if let Some(bin) = histogram.iter_mut().find(|b| t.value >= b.lower && t.value < b.upper) {
            bin.count += 1;
        }
        if t.value < report.min_value {
            report.min_value = t.value;
            report.argmin = Some(t.argmin);
        }
    }
    report.histogram = histogram;
    report.controls = controls.iter().map(|&c| run_control(c)).collect::<Result<_>>()?;
    Ok(report)
}
