//! Second-order cumulant dynamics for large ensembles.
//!
//! Tracks `⟨σ⁺_j⟩`, `⟨σᶻ_j⟩` and the distinct-site correlators
//! `⟨σ⁺σ⁻⟩`, `⟨σ⁺σ⁺⟩`, `⟨σᶻσᶻ⟩`, `⟨σᶻσ⁺⟩`. Three-site moments are closed with
//! `⟨ABC⟩ ≈ ⟨AB⟩⟨C⟩ + ⟨AC⟩⟨B⟩ + ⟨BC⟩⟨A⟩ − 2⟨A⟩⟨B⟩⟨C⟩`.
//!
//! The equation of motion of an observable `O` on sites `S` splits into the
//! exact two-site generator restricted to `S` and, for every `s ∈ S`, `l ∉ S`,
//! `(iΩ_sl + Γ_sl/2)⟨[σ⁺_s, O] σ⁻_l⟩ + (iΩ_sl − Γ_sl/2)⟨[σ⁻_s, O] σ⁺_l⟩`
//! with `Ω = −Δ`. Only the second kind needs the closure.

use std::ops::ControlFlow;

use nalgebra::{DMatrix, Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::dynamics::GreensCouplings;
use crate::error::{Error, Result};
use crate::field::OperatorMoments;
use crate::geometry::{AtomConfig, Direction};
use crate::ode::{self, OdeOptions, OdeStats};
use crate::qstate::{Axis, QuantumState, C64, I, ONE, ZERO};

/// Magnitude above which any correlator counts as a closure blow-up.
pub const BLOW_UP_LIMIT: f64 = 10.0;

/// One- and two-point correlators. Diagonals of the pair blocks are unused
/// and kept at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantState {
    pub s_plus: Vec<C64>,
    pub s_z: Vec<f64>,
    /// `c_pm[(j, m)] = ⟨σ⁺_j σ⁻_m⟩`, Hermitian.
    pub c_pm: DMatrix<C64>,
    /// `c_pp[(j, m)] = ⟨σ⁺_j σ⁺_m⟩`, symmetric.
    pub c_pp: DMatrix<C64>,
    /// `c_zz[(j, m)] = ⟨σᶻ_j σᶻ_m⟩`, symmetric.
    pub c_zz: DMatrix<f64>,
    /// `c_zp[(j, m)] = ⟨σᶻ_j σ⁺_m⟩`.
    pub c_zp: DMatrix<C64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Id,
    P,
    M,
    Z,
}

const OPS: [Op; 4] = [Op::Id, Op::P, Op::M, Op::Z];

impl Op {
    fn matrix(self) -> Matrix2<C64> {
        match self {
            Op::Id => Matrix2::identity(),
            Op::P => Axis::Plus.matrix(),
            Op::M => Axis::Minus.matrix(),
            Op::Z => Axis::Z.matrix(),
        }
    }

    /// Hilbert–Schmidt dual: the coefficient of `self` in `A` is `Tr(dual† A)`.
    fn dual(self) -> Matrix2<C64> {
        match self {
            Op::Id | Op::Z => self.matrix() * C64::from(0.5),
            Op::P | Op::M => self.matrix(),
        }
    }
}

/// `[σ^±, a] = coef · op`, or `None` when they commute.
fn commutator(raise: bool, a: Op) -> Option<(C64, Op)> {
    match (raise, a) {
        (_, Op::Id) => None,
        (true, Op::P) | (false, Op::M) => None,
        (true, Op::M) => Some((ONE, Op::Z)),
        (true, Op::Z) => Some((C64::from(-2.0), Op::P)),
        (false, Op::P) => Some((-ONE, Op::Z)),
        (false, Op::Z) => Some((C64::from(2.0), Op::M)),
    }
}

fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

fn hs_coef<const D: usize>(dual: &nalgebra::SMatrix<C64, D, D>, a: &nalgebra::SMatrix<C64, D, D>) -> C64 {
    dual.iter().zip(a.iter()).map(|(d, x)| d.conj() * x).sum()
}

/// Adjoint generator restricted to one site: `Γ(σ⁺Oσ⁻ − ½{σ⁺σ⁻, O})`.
fn single_local(gamma_aa: f64, o: Op) -> [C64; 4] {
    let p = Op::P.matrix();
    let m = Op::M.matrix();
    let om = o.matrix();
    let pm = p * m;
    let g = C64::from(gamma_aa);
    let l = (p * om * m - (pm * om + om * pm) * C64::from(0.5)) * g;
    OPS.map(|q| hs_coef(&q.dual(), &l))
}

/// Adjoint generator restricted to the pair `(a, b)` acting on `A_a ⊗ B_b`.
fn pair_local(omega_ab: f64, g_aa: f64, g_bb: f64, g_ab: f64, a: Op, b: Op) -> [[C64; 4]; 4] {
    let id = Matrix2::identity();
    let lower = [kron(&Op::M.matrix(), &id), kron(&id, &Op::M.matrix())];
    let raise = [kron(&Op::P.matrix(), &id), kron(&id, &Op::P.matrix())];
    let o = kron(&a.matrix(), &b.matrix());
    let h = (raise[0] * lower[1] + raise[1] * lower[0]) * C64::from(omega_ab);
    let g = [[g_aa, g_ab], [g_ab, g_bb]];
    let mut l = (h * o - o * h) * I;
    for (j, gj) in g.iter().enumerate() {
        for (m, &gjm) in gj.iter().enumerate() {
            let rl = raise[m] * lower[j];
            l += (raise[m] * o * lower[j] - (rl * o + o * rl) * C64::from(0.5)) * C64::from(gjm);
        }
    }
    let mut out = [[ZERO; 4]; 4];
    for (ia, &qa) in OPS.iter().enumerate() {
        for (ib, &qb) in OPS.iter().enumerate() {
            out[ia][ib] = hs_coef(&kron(&qa.dual(), &qb.dual()), &l);
        }
    }
    out
}

impl CumulantState {
    pub fn zeros(n_atoms: usize) -> Self {
        Self {
            s_plus: vec![ZERO; n_atoms],
            s_z: vec![0.0; n_atoms],
            c_pm: DMatrix::zeros(n_atoms, n_atoms),
            c_pp: DMatrix::zeros(n_atoms, n_atoms),
            c_zz: DMatrix::zeros(n_atoms, n_atoms),
            c_zp: DMatrix::zeros(n_atoms, n_atoms),
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.s_z.len()
    }

    /// Product state `⊗(cos(θ/2)|↑⟩ + e^{iφ} sin(θ/2)|↓⟩)`, with every pair
    /// correlator factorized (exact for products).
    pub fn from_product(bloch_angles: &[(f64, f64)]) -> Result<Self> {
        let n = bloch_angles.len();
        if n == 0 {
            return Err(Error::InvalidArgument("at least one atom is required".into()));
        }
        let mut st = Self::zeros(n);
        for (j, &(theta, phi)) in bloch_angles.iter().enumerate() {
            if !theta.is_finite() || !phi.is_finite() {
                return Err(Error::InvalidArgument("non-finite Bloch angle".into()));
            }
            st.s_plus[j] = C64::from_polar(0.5 * theta.sin(), phi);
            st.s_z[j] = theta.cos();
        }
        for j in 0..n {
            for m in 0..n {
                if j == m {
                    continue;
                }
                st.c_pm[(j, m)] = st.s_plus[j] * st.s_plus[m].conj();
                st.c_pp[(j, m)] = st.s_plus[j] * st.s_plus[m];
                st.c_zz[(j, m)] = st.s_z[j] * st.s_z[m];
                st.c_zp[(j, m)] = st.s_plus[m] * st.s_z[j];
            }
        }
        Ok(st)
    }

    /// Reads every tracked correlator off an exact state. Linear in the
    /// state, so it also maps a density-matrix derivative to correlator
    /// derivatives.
    pub fn from_state<S: QuantumState + ?Sized>(state: &S) -> Self {
        let n = state.n_atoms();
        let mut st = Self::zeros(n);
        for j in 0..n {
            st.s_plus[j] = state.expect_product(&[(j, Axis::Plus)]);
            st.s_z[j] = state.expect_product(&[(j, Axis::Z)]).re;
        }
        for j in 0..n {
            for m in 0..n {
                if j == m {
                    continue;
                }
                if j < m {
                    st.c_pm[(j, m)] = state.expect_product(&[(j, Axis::Plus), (m, Axis::Minus)]);
                    st.c_pm[(m, j)] = st.c_pm[(j, m)].conj();
                    st.c_pp[(j, m)] = state.expect_product(&[(j, Axis::Plus), (m, Axis::Plus)]);
                    st.c_pp[(m, j)] = st.c_pp[(j, m)];
                    st.c_zz[(j, m)] = state.expect_product(&[(j, Axis::Z), (m, Axis::Z)]).re;
                    st.c_zz[(m, j)] = st.c_zz[(j, m)];
                }
                st.c_zp[(j, m)] = state.expect_product(&[(j, Axis::Z), (m, Axis::Plus)]);
            }
        }
        st
    }

    fn n_pairs(n: usize) -> usize {
        n * n.saturating_sub(1) / 2
    }

    /// Length of [`Self::flatten`] for `n` atoms.
    pub fn flat_len(n: usize) -> usize {
        3 * n + 9 * Self::n_pairs(n)
    }

    /// Real vector of the independent entries: `s_plus` (re, im), `s_z`, then
    /// per pair `j < m`: `c_pm`, `c_pp`, `c_zz`, `c_zp[(j, m)]`, `c_zp[(m, j)]`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = vec![0.0; Self::flat_len(self.n_atoms())];
        self.flatten_into(&mut out);
        out
    }

    pub fn flatten_into(&self, out: &mut [f64]) {
        let n = self.n_atoms();
        assert_eq!(out.len(), Self::flat_len(n));
        let mut k = 0;
        let mut push = |v: f64| {
            out[k] = v;
            k += 1;
        };
        for z in &self.s_plus {
            push(z.re);
            push(z.im);
        }
        for &z in &self.s_z {
            push(z);
        }
        for j in 0..n {
            for m in j + 1..n {
                for z in [self.c_pm[(j, m)], self.c_pp[(j, m)]] {
                    push(z.re);
                    push(z.im);
                }
                push(self.c_zz[(j, m)]);
                for z in [self.c_zp[(j, m)], self.c_zp[(m, j)]] {
                    push(z.re);
                    push(z.im);
                }
            }
        }
    }

    /// Inverse of [`Self::flatten`]; fills the implied conjugate entries.
    pub fn unflatten(n: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != Self::flat_len(n) {
            return Err(Error::DimensionMismatch { expected: Self::flat_len(n), found: flat.len() });
        }
        let mut st = Self::zeros(n);
        let mut it = flat.iter().copied();
        let mut next = || it.next().unwrap_or(0.0);
        for j in 0..n {
            let re = next();
            st.s_plus[j] = C64::new(re, next());
        }
        for j in 0..n {
            st.s_z[j] = next();
        }
        for j in 0..n {
            for m in j + 1..n {
                let re = next();
                let pm = C64::new(re, next());
                st.c_pm[(j, m)] = pm;
                st.c_pm[(m, j)] = pm.conj();
                let re = next();
                let pp = C64::new(re, next());
                st.c_pp[(j, m)] = pp;
                st.c_pp[(m, j)] = pp;
                let zz = next();
                st.c_zz[(j, m)] = zz;
                st.c_zz[(m, j)] = zz;
                let re = next();
                st.c_zp[(j, m)] = C64::new(re, next());
                let re = next();
                st.c_zp[(m, j)] = C64::new(re, next());
            }
        }
        Ok(st)
    }

    /// Largest difference over every tracked entry.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.flatten().iter().zip(other.flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Largest magnitude of any tracked entry.
    pub fn max_magnitude(&self) -> f64 {
        let pairs = self
            .c_pm
            .iter()
            .chain(self.c_pp.iter())
            .chain(self.c_zp.iter())
            .map(|z| z.norm())
            .chain(self.c_zz.iter().map(|x| x.abs()));
        self.s_plus.iter().map(|z| z.norm()).chain(self.s_z.iter().map(|x| x.abs())).chain(pairs).fold(0.0, f64::max)
    }

    /// `|s_z| ≤ 1 + tol` and `|s_plus| ≤ 1/2 + tol` for every atom.
    pub fn within_bounds(&self, tol: f64) -> bool {
        self.s_z.iter().all(|z| z.abs() <= 1.0 + tol) && self.s_plus.iter().all(|s| s.norm() <= 0.5 + tol)
    }

    #[inline]
    fn single(&self, a: usize, op: Op) -> C64 {
        match op {
            Op::Id => ONE,
            Op::P => self.s_plus[a],
            Op::M => self.s_plus[a].conj(),
            Op::Z => C64::from(self.s_z[a]),
        }
    }

    /// `⟨α_a β_b⟩` for distinct sites.
    #[inline]
    fn pair(&self, a: usize, alpha: Op, b: usize, beta: Op) -> C64 {
        match (alpha, beta) {
            (Op::Id, _) => self.single(b, beta),
            (_, Op::Id) => self.single(a, alpha),
            (Op::P, Op::M) => self.c_pm[(a, b)],
            (Op::M, Op::P) => self.c_pm[(b, a)],
            (Op::P, Op::P) => self.c_pp[(a, b)],
            (Op::M, Op::M) => self.c_pp[(a, b)].conj(),
            (Op::Z, Op::Z) => C64::from(self.c_zz[(a, b)]),
            (Op::Z, Op::P) => self.c_zp[(a, b)],
            (Op::P, Op::Z) => self.c_zp[(b, a)],
            (Op::Z, Op::M) => self.c_zp[(a, b)].conj(),
            (Op::M, Op::Z) => self.c_zp[(b, a)].conj(),
        }
    }

    /// `⟨α_a β_b γ_c⟩` for distinct sites, closed at second order.
    #[inline]
    fn triple(&self, a: usize, alpha: Op, b: usize, beta: Op, c: usize, gamma: Op) -> C64 {
        if alpha == Op::Id {
            return self.pair(b, beta, c, gamma);
        }
        if beta == Op::Id {
            return self.pair(a, alpha, c, gamma);
        }
        if gamma == Op::Id {
            return self.pair(a, alpha, b, beta);
        }
        let (x, y, z) = (self.single(a, alpha), self.single(b, beta), self.single(c, gamma));
        self.pair(a, alpha, b, beta) * z + self.pair(a, alpha, c, gamma) * y + self.pair(b, beta, c, gamma) * x
            - x * y * z * 2.0
    }
}

/// Couplings and precomputed local generators for [`cumulant_rhs`].
#[derive(Debug, Clone)]
pub struct CumulantModel {
    n: usize,
    omega: DMatrix<f64>,
    gamma: DMatrix<f64>,
    /// per atom: generator images of `σ⁺` and `σᶻ`
    single: Vec<[[C64; 4]; 2]>,
    /// per pair `j < m`: images of `P⊗M, P⊗P, Z⊗Z, Z⊗P, P⊗Z`
    pair: Vec<[[[C64; 4]; 4]; 5]>,
}

const PAIR_KINDS: [(Op, Op); 5] = [(Op::P, Op::M), (Op::P, Op::P), (Op::Z, Op::Z), (Op::Z, Op::P), (Op::P, Op::Z)];

impl CumulantModel {
    pub fn new(c: &GreensCouplings) -> Self {
        let n = c.n_atoms();
        let omega = -c.delta().clone();
        let gamma = c.gamma().clone();
        let single = (0..n).map(|a| [single_local(gamma[(a, a)], Op::P), single_local(gamma[(a, a)], Op::Z)]).collect();
        let mut pair = Vec::with_capacity(CumulantState::n_pairs(n));
        for j in 0..n {
            for m in j + 1..n {
                pair.push(
                    PAIR_KINDS
                        .map(|(a, b)| pair_local(omega[(j, m)], gamma[(j, j)], gamma[(m, m)], gamma[(j, m)], a, b)),
                );
            }
        }
        Self { n, omega, gamma, single, pair }
    }

    pub fn n_atoms(&self) -> usize {
        self.n
    }

    #[inline]
    fn rates(&self, s: usize, l: usize) -> (C64, C64) {
        let om = self.omega[(s, l)];
        let g = 0.5 * self.gamma[(s, l)];
        (C64::new(g, om), C64::new(-g, om))
    }

    fn single_rate(&self, st: &CumulantState, a: usize, o: Op, local: &[C64; 4]) -> C64 {
        let mut d = ZERO;
        for (k, &q) in OPS.iter().enumerate() {
            if local[k] != ZERO {
                d += local[k] * st.single(a, q);
            }
        }
        let cp = commutator(true, o);
        let cm = commutator(false, o);
        for l in 0..self.n {
            if l == a {
                continue;
            }
            let (kp, km) = self.rates(a, l);
            if let Some((coef, q)) = cp {
                d += kp * coef * st.pair(a, q, l, Op::M);
            }
            if let Some((coef, q)) = cm {
                d += km * coef * st.pair(a, q, l, Op::P);
            }
        }
        d
    }

    fn pair_rate(&self, st: &CumulantState, a: usize, b: usize, oa: Op, ob: Op, local: &[[C64; 4]; 4]) -> C64 {
        let mut d = ZERO;
        for (ia, &qa) in OPS.iter().enumerate() {
            for (ib, &qb) in OPS.iter().enumerate() {
                let c = local[ia][ib];
                if c != ZERO {
                    d += c * st.pair(a, qa, b, qb);
                }
            }
        }
        let comms =
            [(true, commutator(true, oa), commutator(true, ob)), (false, commutator(false, oa), commutator(false, ob))];
        for l in 0..self.n {
            if l == a || b == l {
                continue;
            }
            let (kpa, kma) = self.rates(a, l);
            let (kpb, kmb) = self.rates(b, l);
            for &(raise, ca, cb) in &comms {
                let (ka, kb, partner) = if raise { (kpa, kpb, Op::M) } else { (kma, kmb, Op::P) };
                if let Some((coef, q)) = ca {
                    d += ka * coef * st.triple(a, q, b, ob, l, partner);
                }
                if let Some((coef, q)) = cb {
                    d += kb * coef * st.triple(a, oa, b, q, l, partner);
                }
            }
        }
        d
    }
}

/// Time derivative of every tracked correlator under the closed hierarchy.
pub fn cumulant_rhs(st: &CumulantState, model: &CumulantModel) -> Result<CumulantState> {
    let n = st.n_atoms();
    if n != model.n {
        return Err(Error::DimensionMismatch { expected: model.n, found: n });
    }
    let mut d = CumulantState::zeros(n);
    for a in 0..n {
        let [lp, lz] = &model.single[a];
        d.s_plus[a] = model.single_rate(st, a, Op::P, lp);
        d.s_z[a] = model.single_rate(st, a, Op::Z, lz).re;
    }
    let mut p = 0;
    for j in 0..n {
        for m in j + 1..n {
            let tables = &model.pair[p];
            let pm = model.pair_rate(st, j, m, Op::P, Op::M, &tables[0]);
            d.c_pm[(j, m)] = pm;
            d.c_pm[(m, j)] = pm.conj();
            let pp = model.pair_rate(st, j, m, Op::P, Op::P, &tables[1]);
            d.c_pp[(j, m)] = pp;
            d.c_pp[(m, j)] = pp;
            let zz = model.pair_rate(st, j, m, Op::Z, Op::Z, &tables[2]).re;
            d.c_zz[(j, m)] = zz;
            d.c_zz[(m, j)] = zz;
            d.c_zp[(j, m)] = model.pair_rate(st, j, m, Op::Z, Op::P, &tables[3]);
            d.c_zp[(m, j)] = model.pair_rate(st, j, m, Op::P, Op::Z, &tables[4]);
            p += 1;
        }
    }
    Ok(d)
}

/// Integrates the closed hierarchy, calling `observe` at each time in
/// `times`. Aborts with [`Error::CorrelatorBlowUp`] once any entry exceeds
/// [`BLOW_UP_LIMIT`] in magnitude.
pub fn integrate_cumulant_with<O>(
    state0: &CumulantState,
    model: &CumulantModel,
    times: &[f64],
    opts: &OdeOptions,
    mut observe: O,
) -> Result<OdeStats>
where
    O: FnMut(usize, f64, &CumulantState) -> Result<ControlFlow<()>>,
{
    let n = state0.n_atoms();
    if n != model.n {
        return Err(Error::DimensionMismatch { expected: model.n, found: n });
    }
    let y0 = state0.flatten();
    ode::integrate(
        |_, y, dy| {
            let st = CumulantState::unflatten(n, y).expect("flat length fixed by the integrator");
            let d = cumulant_rhs(&st, model).expect("sizes checked above");
            d.flatten_into(dy);
        },
        |t, y| {
            let worst = y.iter().fold(0.0f64, |acc, v| if v.is_finite() { acc.max(v.abs()) } else { f64::INFINITY });
            if worst > BLOW_UP_LIMIT {
                return Err(Error::CorrelatorBlowUp { t, magnitude: worst });
            }
            Ok(false)
        },
        &y0,
        times,
        opts,
        |i, t, y| observe(i, t, &CumulantState::unflatten(n, y)?),
    )
}

/// Correlators at every time in `times`.
pub fn integrate_cumulant(
    state0: &CumulantState,
    model: &CumulantModel,
    times: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<CumulantState>> {
    let mut out = Vec::with_capacity(times.len());
    integrate_cumulant_with(state0, model, times, opts, |_, _, st| {
        out.push(st.clone());
        Ok(ControlFlow::Continue(()))
    })?;
    Ok(out)
}

/// Witness moments from correlators for explicit per-atom phases, O(N²).
pub fn moments_from_phases(st: &CumulantState, phases: &[f64], direction: Option<Direction>) -> OperatorMoments {
    let n = st.n_atoms();
    assert_eq!(phases.len(), n, "one phase per atom");
    let e: Vec<C64> = phases.iter().map(|&t| C64::from_polar(1.0, t)).collect();
    let first: C64 = e.iter().zip(&st.s_plus).map(|(a, b)| a * b).sum();
    let mut p = ZERO;
    let mut q = 0.0;
    let mut zz = 0.0;
    for j in 0..n {
        for s in j + 1..n {
            p += e[j] * e[s] * st.c_pp[(j, s)];
            q += (e[j] * e[s].conj() * st.c_pm[(j, s)]).re;
            zz += st.c_zz[(j, s)];
        }
    }
    // each unordered pair appears twice in the j ≠ s sums
    let (p, q, zz) = (p * 2.0, q * 2.0, zz * 2.0);
    let nf = n as f64;
    OperatorMoments {
        mean_x: 2.0 * first.re,
        mean_y: 2.0 * first.im,
        mean_z: st.s_z.iter().sum(),
        second_x: nf + 2.0 * p.re + 2.0 * q,
        second_y: nf - 2.0 * p.re + 2.0 * q,
        second_z: nf + zz,
        n_atoms: n,
        direction,
    }
}

/// Witness moments from correlators along `dir`.
pub fn moments_from_cumulant(st: &CumulantState, config: &AtomConfig, dir: &Direction) -> Result<OperatorMoments> {
    if config.n_atoms() != st.n_atoms() {
        return Err(Error::DimensionMismatch { expected: st.n_atoms(), found: config.n_atoms() });
    }
    Ok(moments_from_phases(st, &config.phases(dir), Some(*dir)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{couplings, lindblad_rhs, DecayConvention};
    use crate::field::moments;
    use crate::geometry::{chain, spherical_cloud};
    use crate::qstate::{product_state, DensityMatrix, PureState};
    use std::f64::consts::PI;

    fn antisym(n: usize) -> Vec<(f64, f64)> {
        (0..n).map(|j| (PI / 2.0, if j % 2 == 0 { 0.0 } else { PI })).collect()
    }

    #[test]
    fn antisymmetric_product() {
        let st = CumulantState::from_product(&antisym(4)).unwrap();
        for j in 0..4 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            assert!((st.s_plus[j] - C64::from(0.5 * sign)).norm() < 1e-15);
            assert!(st.s_z[j].abs() < 1e-15);
        }
        assert!((st.c_pm[(0, 1)] + 0.25).norm() < 1e-15);
        let exact = CumulantState::from_state(&product_state(&antisym(4)).unwrap());
        assert!(st.max_abs_diff(&exact) < 1e-14);
    }

    #[test]
    fn ground_product() {
        let st = CumulantState::from_product(&[(PI, 0.0); 3]).unwrap();
        assert!(st.s_z.iter().all(|&z| (z + 1.0).abs() < 1e-15));
        assert!((st.c_zz[(0, 2)] - 1.0).abs() < 1e-15);
        let cfg = chain(3, 0.4).unwrap();
        let m = moments_from_cumulant(&st, &cfg, &Direction::in_plane(0.3)).unwrap();
        let got = [m.mean_x, m.mean_y, m.mean_z, m.second_x, m.second_y, m.second_z];
        for (a, b) in got.iter().zip([0.0, 0.0, -3.0, 3.0, 3.0, 9.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_atom_has_no_pairs() {
        let st = CumulantState::from_product(&[(0.3, 0.2)]).unwrap();
        assert_eq!(CumulantState::flat_len(1), 3);
        assert_eq!(st.flatten().len(), 3);
    }

    #[test]
    fn flatten_round_trip() {
        let psi = product_state(&[(0.3, 1.0), (2.0, 0.2), (1.4, -0.7)]).unwrap();
        let st = CumulantState::from_state(&psi);
        let back = CumulantState::unflatten(3, &st.flatten()).unwrap();
        assert!(st.max_abs_diff(&back) == 0.0);
        assert!((back.c_pm[(2, 1)] - st.c_pm[(2, 1)]).norm() < 1e-16);
    }

    #[test]
    fn product_moments_match_brute_force() {
        let angles = [(0.3, 1.0), (2.0, 0.2), (1.4, -0.7), (2.9, 2.0)];
        let psi = product_state(&angles).unwrap();
        let st = CumulantState::from_product(&angles).unwrap();
        let cfg = spherical_cloud(4, 1.5, 3, 0.05).unwrap();
        for dir in [Direction::from_angles(0.4, 1.0), Direction::from_angles(2.0, -0.5).with_chi(0.7)] {
            let a = moments_from_cumulant(&st, &cfg, &dir).unwrap();
            let b = moments(&psi, &cfg, &dir).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }

    #[test]
    fn single_atom_bloch_equations() {
        let cfg = chain(1, 1.0).unwrap();
        let c = couplings(&cfg, DecayConvention::Standard).unwrap();
        let model = CumulantModel::new(&c);
        let st = CumulantState::from_product(&[(1.1, 0.4)]).unwrap();
        let d = cumulant_rhs(&st, &model).unwrap();
        let g = c.gamma()[(0, 0)];
        assert!((d.s_z[0] + g * (1.0 + st.s_z[0])).abs() < 1e-14);
        assert!((d.s_plus[0] + st.s_plus[0] * (g / 2.0)).norm() < 1e-14);
    }

    fn exact_rate(rho: &DensityMatrix, c: &GreensCouplings) -> CumulantState {
        let n = rho.n_atoms();
        let d = lindblad_rhs(rho, c).unwrap();
        CumulantState::from_state(&DensityMatrix::new_unchecked(n, d).unwrap())
    }

    #[test]
    fn two_atoms_are_exact() {
        let cfg = chain(2, 0.3).unwrap();
        let c = couplings(&cfg, DecayConvention::Standard).unwrap();
        let model = CumulantModel::new(&c);
        let a = PureState::normalized(
            2,
            nalgebra::DVector::from_vec(vec![
                C64::new(0.3, 0.1),
                C64::new(-0.2, 0.5),
                C64::new(0.7, -0.4),
                C64::new(0.1, 0.2),
            ]),
        )
        .unwrap();
        let rho = DensityMatrix::mixture(&[(0.7, a.to_density()), (0.3, DensityMatrix::maximally_mixed(2).unwrap())])
            .unwrap();
        let st = CumulantState::from_state(&rho);
        let d = cumulant_rhs(&st, &model).unwrap();
        assert!(d.max_abs_diff(&exact_rate(&rho, &c)) < 1e-10);
    }

    #[test]
    fn product_initial_slopes_are_exact() {
        let angles = [(0.3, 1.0), (2.0, 0.2), (1.4, -0.7), (2.9, 2.0)];
        let cfg = spherical_cloud(4, 1.0, 11, 0.1).unwrap();
        let c = couplings(&cfg, DecayConvention::Standard).unwrap();
        let model = CumulantModel::new(&c);
        let rho = product_state(&angles).unwrap().to_density();
        let d = cumulant_rhs(&CumulantState::from_product(&angles).unwrap(), &model).unwrap();
        assert!(d.max_abs_diff(&exact_rate(&rho, &c)) < 1e-8);
    }

    #[test]
    fn excited_atom_relaxes() {
        let cfg = chain(1, 1.0).unwrap();
        let c = couplings(&cfg, DecayConvention::Literal).unwrap();
        let g = c.gamma()[(0, 0)];
        let times: Vec<f64> = (0..=8).map(|i| 0.5 * i as f64).collect();
        let traj = integrate_cumulant(
            &CumulantState::from_product(&[(0.0, 0.0)]).unwrap(),
            &CumulantModel::new(&c),
            &times,
            &OdeOptions::default(),
        )
        .unwrap();
        for (t, st) in times.iter().zip(&traj) {
            assert!((st.s_z[0] - (2.0 * (-g * t).exp() - 1.0)).abs() < 1e-7);
        }
    }
}
