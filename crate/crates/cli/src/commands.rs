//! The experiments behind each subcommand, returning typed results.

use std::ops::ControlFlow;

use efw_core::concurrence::global_concurrence;
use efw_core::cumulant::{integrate_cumulant_with, moments_from_cumulant, CumulantModel, CumulantState};
use efw_core::dicke::{chebyshev_delta, dicke_moments, s_k, DickeSpec};
use efw_core::dynamics::{couplings, first_crossing, integrate_with, EvolveOptions, SampleDiagnostics};
use efw_core::geometry::{chain, direction_grid, spherical_cloud, AtomConfig, Direction, Vec3};
use efw_core::ode::{OdeOptions, OdeStats};
use efw_core::oracle::{fuzz_witnesses, FuzzReport};
use efw_core::qstate::{
    antisymmetric_angles, antisymmetric_state, product_state, three_atom_state, DensityMatrix, PureState, QuantumState,
};
use efw_core::witness::{
    detection_threshold, min_over_chi, spin_squeezing_report, sweep_correlators, witness_report, WitnessReport,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DeltaSpec, ExperimentConfig, GeometryConfig, GeometryKind, StateConfig, StateKind, WitnessConfig};
use crate::CliError;

pub fn atom_config(g: &GeometryConfig) -> Result<AtomConfig, CliError> {
    let base = match g.kind {
        GeometryKind::Chain => chain(g.n, g.spacing)?,
        GeometryKind::Cloud => spherical_cloud(g.n, g.radius, g.seed, g.min_separation)?,
    };
    let pol = Vec3::from(g.polarization);
    if !(pol.norm() > 0.0) {
        return Err(CliError::Config("geometry.polarization must be nonzero".into()));
    }
    Ok(AtomConfig::with_uniform_polarization(base.positions().to_vec(), pol.normalize())?)
}

pub fn epsilon(w: &WitnessConfig, n: usize) -> f64 {
    w.epsilon.unwrap_or_else(|| detection_threshold(n))
}

/// A prepared initial state.
pub enum Prepared {
    Pure(PureState),
    Density(DensityMatrix),
}

impl Prepared {
    pub fn as_state(&self) -> &dyn QuantumState {
        match self {
            Prepared::Pure(p) => p,
            Prepared::Density(d) => d,
        }
    }

    pub fn into_density(self) -> DensityMatrix {
        match self {
            Prepared::Pure(p) => p.to_density(),
            Prepared::Density(d) => d,
        }
    }
}

pub fn dicke_spec(s: &StateConfig, n: usize) -> Result<(DickeSpec, Option<f64>), CliError> {
    if let Some(phases) = &s.phases {
        if phases.len() != n {
            return Err(CliError::Config(format!("state.phases has {} entries for {n} atoms", phases.len())));
        }
        return Ok((DickeSpec::new(phases.clone())?, None));
    }
    let delta = match s.delta {
        DeltaSpec::Auto(_) => chebyshev_delta(n)?,
        DeltaSpec::Value(d) => d,
    };
    Ok((DickeSpec::chebyshev(n, delta)?, Some(delta)))
}

/// Bloch angles of the product kinds.
pub fn product_angles(s: &StateConfig, n: usize) -> Result<Vec<(f64, f64)>, CliError> {
    match s.kind {
        StateKind::Excited => Ok(vec![(0.0, 0.0); n]),
        StateKind::Antisym => Ok(antisymmetric_angles(n)),
        StateKind::CustomProduct => {
            let angles = s
                .bloch_angles
                .as_ref()
                .ok_or_else(|| CliError::Config("state.bloch_angles is required for custom_product".into()))?;
            if angles.len() != n {
                return Err(CliError::Config(format!("state.bloch_angles has {} entries for {n} atoms", angles.len())));
            }
            Ok(angles.iter().map(|a| (a[0], a[1])).collect())
        }
        other => Err(CliError::Config(format!("state kind {other:?} is not a product state"))),
    }
}

pub fn prepare_state(s: &StateConfig, n: usize) -> Result<Prepared, CliError> {
    Ok(match s.kind {
        StateKind::Eq5 => {
            if n != 3 {
                return Err(CliError::Config(format!("state kind eq5 needs 3 atoms, geometry has {n}")));
            }
            Prepared::Pure(three_atom_state(s.lambda)?)
        }
        StateKind::Dicke => Prepared::Pure(efw_core::dicke::dicke_state(&dicke_spec(s, n)?.0)?),
        StateKind::Mixed => Prepared::Density(DensityMatrix::maximally_mixed(n)?),
        StateKind::Excited => Prepared::Pure(PureState::excited(n)?),
        StateKind::Antisym => Prepared::Pure(antisymmetric_state(n)?),
        StateKind::CustomProduct => Prepared::Pure(product_state(&product_angles(s, n)?)?),
    })
}

/// Reports at each direction, at the configured quadrature angle or at the
/// angle minimizing `W` when `chi_optimize` is set.
pub fn direction_reports(
    corr: &CumulantState,
    config: &AtomConfig,
    dirs: &[Direction],
    w: &WitnessConfig,
) -> Vec<WitnessReport> {
    if !w.chi_optimize {
        return sweep_correlators(corr, config, dirs);
    }
    let tuned: Vec<Direction> =
        dirs.par_iter().map(|d| d.with_chi(min_over_chi(corr, config, d, w.n_chi.max(1)).1)).collect();
    sweep_correlators(corr, config, &tuned)
}

fn grid(cfg: &ExperimentConfig) -> Result<Vec<Direction>, CliError> {
    let dirs: Vec<Direction> =
        direction_grid(cfg.directions.grid).into_iter().map(|d| d.with_chi(cfg.directions.chi)).collect();
    if dirs.is_empty() {
        return Err(CliError::Config("direction grid is empty".into()));
    }
    Ok(dirs)
}

#[derive(Debug, Clone, Serialize)]
pub struct SphereOutput {
    pub reports: Vec<WitnessReport>,
    pub w0: WitnessReport,
    pub epsilon: f64,
    pub detected_fraction: f64,
}

pub fn fig1_sphere(cfg: &ExperimentConfig) -> Result<SphereOutput, CliError> {
    let config = atom_config(&cfg.geometry)?;
    let n = config.n_atoms();
    let state = prepare_state(&cfg.state, n)?;
    let dirs = grid(cfg)?;
    let corr = CumulantState::from_state(state.as_state());
    let reports = direction_reports(&corr, &config, &dirs, &cfg.witness);
    let eps = epsilon(&cfg.witness, n);
    let detected = reports.iter().filter(|r| r.is_entangled(eps)).count();
    Ok(SphereOutput {
        w0: spin_squeezing_report(state.as_state(), &config)?,
        detected_fraction: detected as f64 / reports.len() as f64,
        reports,
        epsilon: eps,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DickeSweepOutput {
    /// `None` when explicit phases were given.
    pub delta: Option<f64>,
    pub epsilon: f64,
    pub s_k: Vec<f64>,
    pub reports: Vec<WitnessReport>,
}

pub fn dicke_sweep(cfg: &ExperimentConfig) -> Result<DickeSweepOutput, CliError> {
    if cfg.state.kind != StateKind::Dicke {
        return Err(CliError::Config("dicke-sweep needs state.kind = dicke".into()));
    }
    let config = atom_config(&cfg.geometry)?;
    let n = config.n_atoms();
    let (spec, delta) = dicke_spec(&cfg.state, n)?;
    let dirs = grid(cfg)?;
    let rows: Vec<(f64, WitnessReport)> = dirs
        .par_iter()
        .map(|d| -> Result<_, CliError> {
            let m = dicke_moments(&spec, &config, d)?;
            Ok((s_k(&spec, &config, d)?, witness_report(&m)))
        })
        .collect::<Result<_, _>>()?;
    let (s_k, reports) = rows.into_iter().unzip();
    Ok(DickeSweepOutput { delta, epsilon: epsilon(&cfg.witness, n), s_k, reports })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayRow {
    pub t: f64,
    pub w_min: f64,
    /// Angle between the minimizing direction and the chain axis.
    pub theta_argmin: f64,
    pub c_glob: f64,
    pub trace_drift: f64,
    pub min_eig: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayOutput {
    pub rows: Vec<DecayRow>,
    pub epsilon: f64,
    pub t_ent: Option<f64>,
    /// First time `C_glob` exceeds the concurrence threshold.
    pub t_conc: Option<f64>,
    pub stats: Option<OdeStats>,
    /// Set when the integrator stopped early; `rows` holds what was sampled.
    pub error: Option<String>,
}

impl DecayOutput {
    pub fn max_trace_drift(&self) -> f64 {
        self.rows.iter().map(|r| r.trace_drift).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.rows.iter().map(|r| r.min_eig).fold(f64::INFINITY, f64::min)
    }
}

pub fn decay(cfg: &ExperimentConfig) -> Result<DecayOutput, CliError> {
    let config = atom_config(&cfg.geometry)?;
    let n = config.n_atoms();
    let rho0 = prepare_state(&cfg.state, n)?.into_density();
    let c = couplings(&config, cfg.convention)?;
    let times = cfg.integrator.times()?;
    let dirs = grid(cfg)?;
    let opts = EvolveOptions { ode: ode_options(cfg), ..Default::default() };
    let eps = epsilon(&cfg.witness, n);

    let mut rows = Vec::with_capacity(times.len());
    let run = integrate_with(&rho0, &c, &times, &opts, |_, rho, diag: &SampleDiagnostics| {
        let corr = CumulantState::from_state(rho);
        let reports = direction_reports(&corr, &config, &dirs, &cfg.witness);
        let best = reports.iter().min_by(|a, b| a.w_min.total_cmp(&b.w_min)).expect("nonempty grid");
        rows.push(DecayRow {
            t: diag.t,
            w_min: best.w_min,
            theta_argmin: best.direction.map_or(f64::NAN, |d| d.angles().0),
            c_glob: global_concurrence(rho)?,
            trace_drift: diag.trace_drift,
            min_eig: diag.min_eig,
        });
        Ok(ControlFlow::Continue(()))
    });
    let (stats, error) = match run {
        Ok(s) => (Some(s), None),
        Err(e) if is_numerical(&e) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let w: Vec<f64> = rows.iter().map(|r| r.w_min).collect();
    let neg_c: Vec<f64> = rows.iter().map(|r| -r.c_glob).collect();
    Ok(DecayOutput {
        t_ent: first_crossing(&ts, &w, -eps),
        t_conc: first_crossing(&ts, &neg_c, -cfg.witness.concurrence_threshold),
        rows,
        epsilon: eps,
        stats,
        error,
    })
}

fn ode_options(cfg: &ExperimentConfig) -> OdeOptions {
    OdeOptions { rtol: cfg.integrator.rtol, atol: cfg.integrator.atol, ..Default::default() }
}

fn is_numerical(e: &efw_core::Error) -> bool {
    matches!(
        e,
        efw_core::Error::StepUnderflow { .. }
            | efw_core::Error::PositivityBreach { .. }
            | efw_core::Error::CorrelatorBlowUp { .. }
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TentStatus {
    Detected,
    NotDetected,
    BlowUp,
    Failed,
}

impl TentStatus {
    pub fn label(self) -> &'static str {
        match self {
            TentStatus::Detected => "detected",
            TentStatus::NotDetected => "not_detected",
            TentStatus::BlowUp => "blow_up",
            TentStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TentCell {
    pub n: usize,
    pub kd: f64,
    pub t_ent: Option<f64>,
    pub status: TentStatus,
}

/// Detection time of one chain under the cumulant flow, stopping at the
/// first crossing.
pub fn tent_cell(cfg: &ExperimentConfig, n: usize, kd: f64) -> Result<TentCell, CliError> {
    let g = GeometryConfig { kind: GeometryKind::Chain, n, spacing: kd, ..cfg.geometry.clone() };
    let config = atom_config(&g)?;
    let model = CumulantModel::new(&couplings(&config, cfg.convention)?);
    let st0 = CumulantState::from_product(&product_angles(&cfg.state, n)?)?;
    let times = cfg.integrator.times()?;
    let dir = Direction::in_plane(cfg.tent.theta_over_pi * std::f64::consts::PI).with_chi(cfg.directions.chi);
    let eps = epsilon(&cfg.witness, n);
    let mut w = Vec::with_capacity(times.len());
    let run = integrate_cumulant_with(&st0, &model, &times, &ode_options(cfg), |_, _, st| {
        let value = if cfg.witness.chi_optimize {
            min_over_chi(st, &config, &dir, cfg.witness.n_chi.max(1)).0
        } else {
            witness_report(&moments_from_cumulant(st, &config, &dir)?).w_min
        };
        w.push(value);
        Ok(if value < -eps { ControlFlow::Break(()) } else { ControlFlow::Continue(()) })
    });
    let (t_ent, status) = match run {
        Ok(_) => match first_crossing(&times[..w.len()], &w, -eps) {
            Some(t) => (Some(t), TentStatus::Detected),
            None => (None, TentStatus::NotDetected),
        },
        Err(efw_core::Error::CorrelatorBlowUp { .. }) => (None, TentStatus::BlowUp),
        Err(e) if is_numerical(&e) => (None, TentStatus::Failed),
        Err(e) => return Err(e.into()),
    };
    Ok(TentCell { n, kd, t_ent, status })
}

pub fn cumulant_tent(cfg: &ExperimentConfig) -> Result<Vec<TentCell>, CliError> {
    if !matches!(cfg.state.kind, StateKind::Excited | StateKind::Antisym | StateKind::CustomProduct) {
        return Err(CliError::Config("cumulant-tent needs a product initial state".into()));
    }
    let cells: Vec<(usize, f64)> =
        cfg.tent.n.iter().flat_map(|&n| cfg.tent.kd.iter().map(move |&kd| (n, kd))).collect();
    cells.par_iter().map(|&(n, kd)| tent_cell(cfg, n, kd)).collect()
}

pub fn fuzz(cfg: &ExperimentConfig) -> Result<FuzzReport, CliError> {
    Ok(fuzz_witnesses(&cfg.fuzz.options(), &cfg.fuzz.controls)?)
}
