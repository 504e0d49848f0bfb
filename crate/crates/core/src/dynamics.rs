//! Free-space dipole–dipole couplings and exact Lindblad evolution.
//!
//! The master equation is written as `dρ/dt = Aρ + ρA† + J(ρ)` with the
//! excitation-conserving `A = Σ_{j,m} (iΔ_jm[j≠m] − Γ_jm/2) σ⁺_j σ⁻_m` and the
//! jump term `J(ρ) = Σ_{j,m} Γ_jm σ⁻_j ρ σ⁺_m`. Both are applied from sparse
//! transition lists, never as 4^N superoperators.

use std::ops::ControlFlow;

use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AtomConfig, Vec3};
use crate::ode::{self, OdeOptions, OdeStats};
use crate::qstate::{check_cap, dim, is_up, site_mask, DensityMatrix, QuantumState, C64, I, ZERO};

/// `G(r) = (3/4) e^{ir}/r³ [(r² + ir − 1)𝟙 − (r² + 3ir − 3) r̂r̂ᵀ]` with `k = Γ = 1`.
pub fn greens_tensor(r: &Vec3) -> Result<Matrix3<C64>> {
    let x = r.norm();
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument("Green's tensor needs a nonzero finite separation".into()));
    }
    let rhat = r / x;
    let pref = C64::from_polar(0.75 / (x * x * x), x);
    let a = C64::new(x * x - 1.0, x);
    let b = C64::new(x * x - 3.0, 3.0 * x);
    Ok(Matrix3::from_fn(|i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        pref * (a * delta - b * (rhat[i] * rhat[j]))
    }))
}

/// Normalization of the single-atom decay rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayConvention {
    /// `Γ_jj = 1/2` as printed with `G(0) = i/2 𝟙`.
    Literal,
    /// Rates doubled so that `Γ_jj = 1`: a lone atom decays as `e^{−t}`.
    #[default]
    Standard,
}

impl DecayConvention {
    fn rate_scale(self) -> f64 {
        match self {
            DecayConvention::Literal => 1.0,
            DecayConvention::Standard => 2.0,
        }
    }
}

/// Coherent couplings `Δ` (zero diagonal) and collective rates `Γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreensCouplings {
    delta: DMatrix<f64>,
    gamma: DMatrix<f64>,
    convention: DecayConvention,
}

impl GreensCouplings {
    /// Checks symmetry of both matrices (1e-10), a zero `Δ` diagonal and a
    /// positive semidefinite `Γ` (1e-9).
    pub fn new(delta: DMatrix<f64>, gamma: DMatrix<f64>, convention: DecayConvention) -> Result<Self> {
        let n = delta.nrows();
        for m in [&delta, &gamma] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: m.ncols().max(m.nrows()) });
            }
        }
        let asym = |m: &DMatrix<f64>| (m - m.transpose()).amax();
        if asym(&delta) > 1e-10 || asym(&gamma) > 1e-10 {
            return Err(Error::InvalidArgument("coupling matrices must be symmetric".into()));
        }
        if delta.diagonal().amax() != 0.0 {
            return Err(Error::InvalidArgument("coherent couplings must have a zero diagonal".into()));
        }
        let c = Self { delta, gamma, convention };
        let min = c.min_gamma_eigenvalue();
        if min < -1e-9 {
            return Err(Error::InvalidArgument(format!("decay matrix not positive semidefinite ({min:e})")));
        }
        Ok(c)
    }

    pub fn n_atoms(&self) -> usize {
        self.delta.nrows()
    }

    pub fn delta(&self) -> &DMatrix<f64> {
        &self.delta
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn convention(&self) -> DecayConvention {
        self.convention
    }

    pub fn min_gamma_eigenvalue(&self) -> f64 {
        self.gamma.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `Δ_jm = −ε̂_j·Re G(r_jm)·ε̂_m`, `Γ_jm = ε̂_j·Im G(r_jm)·ε̂_m` with
/// `G(0) = i/2 𝟙`; the whole `Γ` is doubled under [`DecayConvention::Standard`].
pub fn couplings(config: &AtomConfig, convention: DecayConvention) -> Result<GreensCouplings> {
    let n = config.n_atoms();
    let pos = config.positions();
    let pol = config.polarizations();
    let scale = convention.rate_scale();
    let mut delta = DMatrix::zeros(n, n);
    let mut gamma = DMatrix::zeros(n, n);
    for j in 0..n {
        gamma[(j, j)] = 0.5 * pol[j].dot(&pol[j]) * scale;
        for m in j + 1..n {
            let r = pos[j] - pos[m];
            if r.norm() == 0.0 {
                return Err(Error::CoincidentAtoms(j + 1, m + 1));
            }
            let g = greens_tensor(&r)?;
            let re = g.map(|z| z.re);
            let im = g.map(|z| z.im);
            let d = -(pol[j].transpose() * re * pol[m])[(0, 0)];
            let gm = (pol[j].transpose() * im * pol[m])[(0, 0)] * scale;
            delta[(j, m)] = d;
            delta[(m, j)] = d;
            gamma[(j, m)] = gm;
            gamma[(m, j)] = gm;
        }
    }
    GreensCouplings::new(delta, gamma, convention)
}

/// Sparse form of the Lindblad generator on the 2^N basis.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    n_atoms: usize,
    /// CSR by source index: `a_src[k]..a_src[k+1]` lists `(row, A[row, k])`.
    a_src: Vec<usize>,
    a_entries: Vec<(usize, C64)>,
    /// CSR by index: the sites that are down there, with the index obtained
    /// by raising that site.
    down_src: Vec<usize>,
    down_entries: Vec<(usize, usize)>,
    /// Number of up sites per index.
    ups: Vec<usize>,
    /// Indices grouped by number of up sites.
    classes: Vec<Vec<usize>>,
    /// Row-major `Γ`.
    gamma: Vec<f64>,
}

impl LindbladGenerator {
    pub fn new(c: &GreensCouplings) -> Result<Self> {
        let n = c.n_atoms();
        check_cap(n)?;
        let d = dim(n);
        let mut a_src = Vec::with_capacity(d + 1);
        let mut a_entries = Vec::new();
        let mut row_acc: Vec<(usize, C64)> = Vec::new();
        for k in 0..d {
            a_src.push(a_entries.len());
            row_acc.clear();
            for m in 0..n {
                let mm = site_mask(m, n);
                if !is_up(k, mm) {
                    continue;
                }
                let lowered = k ^ mm;
                for j in 0..n {
                    let mj = site_mask(j, n);
                    if is_up(lowered, mj) {
                        continue;
                    }
                    let coherent = if j == m { ZERO } else { I * c.delta[(j, m)] };
                    let g = coherent - C64::from(0.5 * c.gamma[(j, m)]);
                    if g == ZERO {
                        continue;
                    }
                    let row = lowered ^ mj;
                    match row_acc.iter_mut().find(|(r, _)| *r == row) {
                        Some(e) => e.1 += g,
                        None => row_acc.push((row, g)),
                    }
                }
            }
            row_acc.sort_by_key(|e| e.0);
            a_entries.extend_from_slice(&row_acc);
        }
        a_src.push(a_entries.len());

        let mut down_src = Vec::with_capacity(d + 1);
        let mut down_entries = Vec::new();
        for k in 0..d {
            down_src.push(down_entries.len());
            for s in 0..n {
                let ms = site_mask(s, n);
                if !is_up(k, ms) {
                    down_entries.push((s, k ^ ms));
                }
            }
        }
        down_src.push(down_entries.len());
        let ups: Vec<usize> = (0..d).map(|k| n - k.count_ones() as usize).collect();
        let mut classes = vec![Vec::new(); n + 1];
        for (k, &u) in ups.iter().enumerate() {
            classes[u].push(k);
        }
        let gamma = (0..n * n).map(|i| c.gamma[(i / n, i % n)]).collect();
        Ok(Self { n_atoms: n, a_src, a_entries, down_src, down_entries, ups, classes, gamma })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// Writes `dρ/dt` for the column-major `rho` into `out`. `scratch` must
    /// have the same length.
    pub fn apply(&self, rho: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        let n = self.n_atoms;
        let d = dim(n);
        assert_eq!(rho.len(), d * d);
        assert_eq!(out.len(), d * d);
        assert_eq!(scratch.len(), d * d);

        // excitation-number blocks that are identically zero stay zero
        let mut live = vec![false; (n + 1) * (n + 1)];
        for (b, col) in rho.chunks_exact(d).enumerate() {
            let row0 = self.ups[b] * (n + 1);
            for (a, v) in col.iter().enumerate() {
                if *v != ZERO {
                    live[row0 + self.ups[a]] = true;
                }
            }
        }

        // scratch = Aρ
        scratch.fill(ZERO);
        for (src_col, dst_col) in rho.chunks_exact(d).zip(scratch.chunks_exact_mut(d)) {
            for (k, &v) in src_col.iter().enumerate() {
                if v == ZERO {
                    continue;
                }
                for &(row, g) in &self.a_entries[self.a_src[k]..self.a_src[k + 1]] {
                    dst_col[row] += g * v;
                }
            }
        }

        // out = Aρ + (Aρ)† + J(ρ)
        for b in 0..d {
            for a in 0..d {
                out[a + b * d] = scratch[a + b * d] + scratch[b + a * d].conj();
            }
        }
        for q in 0..n {
            for p in 0..n {
                if !live[(q + 1) * (n + 1) + p + 1] {
                    continue;
                }
                for &b in &self.classes[q] {
                    for &(m, b_up) in &self.down_entries[self.down_src[b]..self.down_src[b + 1]] {
                        let col = &rho[b_up * d..(b_up + 1) * d];
                        let gm = &self.gamma[m * n..(m + 1) * n];
                        let out_col = &mut out[b * d..(b + 1) * d];
                        for &a in &self.classes[p] {
                            let mut acc = ZERO;
                            for &(j, a_up) in &self.down_entries[self.down_src[a]..self.down_src[a + 1]] {
                                acc += col[a_up] * gm[j];
                            }
                            out_col[a] += acc;
                        }
                    }
                }
            }
        }
    }
}

/// `dρ/dt` of the master equation.
pub fn lindblad_rhs(rho: &DensityMatrix, c: &GreensCouplings) -> Result<DMatrix<C64>> {
    if rho.n_atoms() != c.n_atoms() {
        return Err(Error::DimensionMismatch { expected: c.n_atoms(), found: rho.n_atoms() });
    }
    let gen = LindbladGenerator::new(c)?;
    let d = rho.dim();
    let mut out = DMatrix::zeros(d, d);
    let mut scratch = vec![ZERO; d * d];
    gen.apply(rho.matrix().as_slice(), out.as_mut_slice(), &mut scratch);
    Ok(out)
}

fn as_real(z: &[C64]) -> &[f64] {
    bytemuck::cast_slice(z)
}

fn as_complex(x: &[f64]) -> &[C64] {
    bytemuck::cast_slice(x)
}

fn as_complex_mut(x: &mut [f64]) -> &mut [C64] {
    bytemuck::cast_slice_mut(x)
}

/// Options for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub ode: OdeOptions,
    /// Compute the minimum eigenvalue at each sample and abort below this floor.
    pub positivity_floor: Option<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { ode: OdeOptions::default(), positivity_floor: Some(-1e-6) }
    }
}

/// Per-sample diagnostics of a density-matrix run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleDiagnostics {
    pub t: f64,
    /// `|Tr ρ(t) − Tr ρ(0)|`
    pub trace_drift: f64,
    pub hermiticity_error: f64,
    /// NaN when positivity checks are off.
    pub min_eig: f64,
}

/// Sampled density matrices with their diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub diagnostics: Vec<SampleDiagnostics>,
    pub stats: OdeStats,
}

impl Trajectory {
    pub fn max_trace_drift(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.trace_drift).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.min_eig).fold(f64::INFINITY, f64::min)
    }
}

/// Evolves `rho0` with the adaptive 5(4) pair, Hermitizing after every
/// accepted step, and hands each sampled state to `observe`. The trace is
/// never renormalized.
pub fn integrate_with<O>(
    rho0: &DensityMatrix,
    c: &GreensCouplings,
    times: &[f64],
    opts: &EvolveOptions,
    mut observe: O,
) -> Result<OdeStats>
where
    O: FnMut(usize, &DensityMatrix, &SampleDiagnostics) -> Result<ControlFlow<()>>,
{
    let n = rho0.n_atoms();
    if n != c.n_atoms() {
        return Err(Error::DimensionMismatch { expected: c.n_atoms(), found: n });
    }
    let gen = LindbladGenerator::new(c)?;
    let d = dim(n);
    let mut scratch = vec![ZERO; d * d];
    let tr0 = rho0.trace().re;
    let y0 = as_real(rho0.matrix().as_slice()).to_vec();
    ode::integrate(
        |_, y, dy| gen.apply(as_complex(y), as_complex_mut(dy), &mut scratch),
        |_, y| {
            let z = as_complex_mut(y);
            for b in 0..d {
                z[b + b * d].im = 0.0;
                for a in b + 1..d {
                    let h = (z[a + b * d] + z[b + a * d].conj()) * 0.5;
                    z[a + b * d] = h;
                    z[b + a * d] = h.conj();
                }
            }
            // the correction is at roundoff level, so the last stage stays valid
            Ok(false)
        },
        &y0,
        times,
        &opts.ode,
        |i, t, y| {
            let mat = DMatrix::from_column_slice(d, d, as_complex(y));
            let rho = DensityMatrix::new_unchecked(n, mat)?;
            let min_eig = match opts.positivity_floor {
                Some(floor) => {
                    let m = rho.min_eigenvalue();
                    if m < floor {
                        return Err(Error::PositivityBreach { t, min_eig: m });
                    }
                    m
                }
                None => f64::NAN,
            };
            let diag = SampleDiagnostics {
                t,
                trace_drift: (rho.trace().re - tr0).abs(),
                hermiticity_error: rho.hermiticity_error(),
                min_eig,
            };
            observe(i, &rho, &diag)
        },
    )
}

/// [`integrate_with`] keeping every sampled state.
pub fn integrate(rho0: &DensityMatrix, c: &GreensCouplings, times: &[f64], opts: &EvolveOptions) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(times.len());
    let mut diagnostics = Vec::with_capacity(times.len());
    let stats = integrate_with(rho0, c, times, opts, |_, rho, diag| {
        states.push(rho.clone());
        diagnostics.push(*diag);
        Ok(ControlFlow::Continue(()))
    })?;
    Ok(Trajectory { times: times[..states.len()].to_vec(), states, diagnostics, stats })
}

/// Earliest time at which `values` drops below `level`, linearly interpolated
/// between the bracketing samples. `None` when it never does.
pub fn first_crossing(times: &[f64], values: &[f64], level: f64) -> Option<f64> {
    let i = values.iter().position(|&w| w < level)?;
    if i == 0 {
        return Some(times[0]);
    }
    let (t0, t1) = (times[i - 1], times[i]);
    let (w0, w1) = (values[i - 1], values[i]);
    Some(t0 + (t1 - t0) * (w0 - level) / (w0 - w1))
}

/// First detection time along a stored trajectory: the earliest time at
/// which the minimum over `directions` of `W_k` falls below `−epsilon`.
pub fn detect_t_ent(
    traj: &Trajectory,
    config: &AtomConfig,
    directions: &[crate::geometry::Direction],
    epsilon: f64,
) -> Result<Option<f64>> {
    if traj.states.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let mut w = Vec::with_capacity(traj.states.len());
    for rho in &traj.states {
        let reports = crate::witness::sweep(rho, config, directions)?;
        w.push(reports.iter().map(|r| r.w_min).fold(f64::INFINITY, f64::min));
    }
    Ok(first_crossing(&traj.times, &w, -epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{chain, spherical_cloud};
    use crate::qstate::{pauli_embed, Axis, Operator, PureState, QuantumState};

    #[test]
    fn greens_tensor_small_distance_limit() {
        for axis in [Vec3::x(), Vec3::y(), Vec3::z()] {
            let g = greens_tensor(&(axis * 1e-3)).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j { 0.5 } else { 0.0 };
                    assert!((g[(i, j)].im - want).abs() < 1e-4);
                }
            }
        }
    }

    #[test]
    fn greens_tensor_far_field() {
        let x = 1e3;
        let g = greens_tensor(&Vec3::new(x, 0.0, 0.0)).unwrap();
        // transverse ~ 1/x, longitudinal ~ 1/x²
        assert!((g[(1, 1)].norm() * x - 0.75).abs() < 1e-2);
        assert!((g[(0, 0)].norm() * x * x - 1.5).abs() < 1e-2);
    }

    #[test]
    fn greens_tensor_is_even_and_rejects_zero() {
        let r = Vec3::new(0.3, -1.2, 0.7);
        let a = greens_tensor(&r).unwrap();
        let b = greens_tensor(&-r).unwrap();
        assert!((a - b).norm() < 1e-15);
        assert!(greens_tensor(&Vec3::zeros()).is_err());
    }

    #[test]
    fn single_atom_couplings() {
        let cfg = chain(1, 1.0).unwrap();
        let lit = couplings(&cfg, DecayConvention::Literal).unwrap();
        assert_eq!(lit.gamma()[(0, 0)], 0.5);
        assert_eq!(lit.delta()[(0, 0)], 0.0);
        assert_eq!(couplings(&cfg, DecayConvention::Standard).unwrap().gamma()[(0, 0)], 1.0);
    }

    #[test]
    fn close_pair_modes() {
        let cfg = chain(2, 1e-3).unwrap();
        let c = couplings(&cfg, DecayConvention::Standard).unwrap();
        assert!((c.gamma()[(0, 1)] - 1.0).abs() < 1e-5);
        let ev = c.gamma().symmetric_eigenvalues();
        let (lo, hi) = (ev.min(), ev.max());
        assert!(lo.abs() < 1e-5 && (hi - 2.0).abs() < 1e-5);
    }

    #[test]
    fn random_clouds_have_psd_rates() {
        for seed in 0..20 {
            let cfg = spherical_cloud(8, 2.0, seed, 0.05).unwrap();
            let c = couplings(&cfg, DecayConvention::Literal).unwrap();
            assert!(c.min_gamma_eigenvalue() > -1e-9);
        }
    }

    #[test]
    fn coupling_validation() {
        let d = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(GreensCouplings::new(d, DMatrix::identity(2, 2), DecayConvention::Literal).is_err());
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(GreensCouplings::new(DMatrix::zeros(2, 2), g, DecayConvention::Literal).is_err());
    }

    fn cmax(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Dense reference for the master equation.
    fn dense_rhs(rho: &DMatrix<C64>, c: &GreensCouplings) -> DMatrix<C64> {
        let n = c.n_atoms();
        let sp: Vec<Operator> = (1..=n).map(|j| pauli_embed(j, Axis::Plus, n).unwrap()).collect();
        let sm: Vec<Operator> = (1..=n).map(|j| pauli_embed(j, Axis::Minus, n).unwrap()).collect();
        let mut out = DMatrix::zeros(rho.nrows(), rho.ncols());
        for j in 0..n {
            for m in 0..n {
                if j != m {
                    let h = sp[j].mul(&sm[m]).into_matrix();
                    out += (&h * rho - rho * &h) * (I * c.delta()[(j, m)]);
                }
                let jump = sm[j].matrix() * rho * sp[m].matrix();
                let k = sp[m].mul(&sm[j]).into_matrix();
                out += (jump - (&k * rho + rho * &k) * C64::from(0.5)) * C64::from(c.gamma()[(j, m)]);
            }
        }
        out
    }

    fn random_density(n: usize, seed: u64) -> DensityMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = dim(n);
        let g = DMatrix::from_fn(d, d, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let mut m = &g * g.adjoint();
        let tr = m.trace();
        m /= tr;
        DensityMatrix::new(n, m).unwrap()
    }

    #[test]
    fn sparse_rhs_matches_dense() {
        let cfg = spherical_cloud(3, 1.0, 5, 0.1).unwrap();
        let c = couplings(&cfg, DecayConvention::Standard).unwrap();
        let rho = random_density(3, 1);
        let a = lindblad_rhs(&rho, &c).unwrap();
        let b = dense_rhs(rho.matrix(), &c);
        assert!(cmax(&(a.clone() - b)) < 1e-12);
        assert!(a.trace().norm() < 1e-12);
        assert!(cmax(&(a.clone() - a.adjoint())) < 1e-12);
    }

    #[test]
    fn single_atom_population_rate() {
        for conv in [DecayConvention::Literal, DecayConvention::Standard] {
            let cfg = chain(1, 1.0).unwrap();
            let c = couplings(&cfg, conv).unwrap();
            let rho = PureState::excited(1).unwrap().to_density();
            let d = lindblad_rhs(&rho, &c).unwrap();
            assert!((d[(0, 0)].re + c.gamma()[(0, 0)]).abs() < 1e-15);
        }
    }

    #[test]
    fn single_atom_decay_curve() {
        let cfg = chain(1, 1.0).unwrap();
        let c = couplings(&cfg, DecayConvention::Literal).unwrap();
        let g = c.gamma()[(0, 0)];
        let traj =
            integrate(&PureState::excited(1).unwrap().to_density(), &c, &[0.0, 1.0 / g], &EvolveOptions::default())
                .unwrap();
        let pop = traj.states[1].matrix()[(0, 0)].re;
        assert!((pop - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn symmetric_state_decays_at_collective_rate() {
        let cfg = chain(2, 0.05).unwrap();
        let c = couplings(&cfg, DecayConvention::Standard).unwrap();
        let d = crate::dicke::dicke_state(&crate::dicke::DickeSpec::new(vec![0.0, 0.0]).unwrap()).unwrap();
        let rho = d.to_density();
        let rate = lindblad_rhs(&rho, &c).unwrap();
        // single-excitation population = ρ_11 + ρ_22 at indices 1, 2
        let dp = rate[(1, 1)].re + rate[(2, 2)].re;
        let want = c.gamma()[(0, 0)] + c.gamma()[(0, 1)];
        assert!((-dp - want).abs() < 1e-12);
    }

    #[test]
    fn first_crossing_interpolates() {
        let t = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(first_crossing(&t, &[1.0, 0.5, -0.5, -1.0], 0.0), Some(1.5));
        assert_eq!(first_crossing(&t, &[-1.0, 0.5, -0.5, -1.0], 0.0), Some(0.0));
        assert_eq!(first_crossing(&t, &[1.0, 0.5, 0.5, 1.0], 0.0), None);
    }

    #[test]
    fn ground_state_is_stationary_and_never_detected() {
        let cfg = chain(3, 0.3).unwrap();
        let c = couplings(&cfg, DecayConvention::Standard).unwrap();
        let rho = PureState::ground(3).unwrap().to_density();
        let traj = integrate(&rho, &c, &[0.0, 0.5, 1.0], &EvolveOptions::default()).unwrap();
        assert!(cmax(&(traj.states[2].matrix() - rho.matrix())) < 1e-14);
        let dirs = crate::geometry::direction_grid(crate::geometry::DirectionGrid::PlaneSweep { n_angles: 8 });
        assert_eq!(detect_t_ent(&traj, &cfg, &dirs, 3e-6).unwrap(), None);
    }

    #[test]
    fn trajectory_keeps_trace_and_positivity() {
        let cfg = chain(3, 0.3).unwrap();
        let c = couplings(&cfg, DecayConvention::Standard).unwrap();
        let rho = random_density(3, 7);
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let traj = integrate(&rho, &c, &times, &EvolveOptions::default()).unwrap();
        assert!(traj.max_trace_drift() < 1e-8);
        assert!(traj.min_eigenvalue() > -1e-6);
        for s in &traj.states {
            assert!(s.hermiticity_error() < 1e-10);
            assert!(s.expect_product(&[(0, Axis::Z)]).im.abs() < 1e-12);
        }
    }
}
