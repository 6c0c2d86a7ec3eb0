//! See-saw search for Bell violations over PPT states.
//!
//! Each round maximizes the Bell value over PPT states for fixed
//! measurements, then over Alice's POVMs, then over Bob's. Every step is an
//! SDP whose feasible set contains the incumbent, so the value never drops
//! beyond solver tolerance.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{behavior, bell_operator, evaluate, BellFunctional, MeasurementSet, Scenario};
use crate::error::{Error, Result};
use crate::linalg::{self, BipartiteDims, Matrix, Party, C64};
use crate::sdp::{self, BlockTerm, SdpOptions, SdpProblem, SparseHermitian};
use crate::state::{DensityMatrix, StateJson};

#[derive(Debug, Clone, PartialEq)]
pub struct SeesawConfig {
    pub dim: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Absolute round-over-round improvement that ends a restart.
    pub convergence_tol: f64,
    pub max_rounds: usize,
    pub sdp: SdpOptions,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        Self {
            dim: 3,
            restarts: 1,
            seed: 0,
            convergence_tol: 1e-11,
            max_rounds: 500,
            sdp: SdpOptions::default(),
        }
    }
}

impl SeesawConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=6).contains(&self.dim) {
            return Err(Error::Invalid(format!("see-saw dimension {} outside 2..=6", self.dim)));
        }
        if self.restarts == 0 {
            return Err(Error::Invalid("at least one restart is required".into()));
        }
        if !(self.convergence_tol >= 0.0) {
            return Err(Error::Invalid("convergence tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SeesawRecord {
    pub best_value: f64,
    pub best_state: DensityMatrix,
    pub best_measurements: (MeasurementSet, MeasurementSet),
    pub rounds_used: usize,
    /// Bell value after each completed round.
    pub value_trace: Vec<f64>,
    pub restart_index: usize,
    /// Worst of `-min eig(rho)`, `-min eig(PT rho)` and `|Tr rho - 1|` over all rounds.
    pub max_state_violation: f64,
    /// Largest shortfall of a raw SDP step below the incumbent value. Such
    /// steps are rejected and the incumbent kept.
    pub max_step_decrease: f64,
}

/// Haar-random projective measurements (rank-1 projectors plus a completion)
/// when `dim` covers every outcome count; random rank-1 POVMs otherwise.
pub fn random_measurements<R: Rng + ?Sized>(
    scenario: &Scenario,
    dim: usize,
    rng: &mut R,
) -> (MeasurementSet, MeasurementSet) {
    let mut party = |counts: &[usize]| MeasurementSet {
        dim,
        povms: counts.iter().map(|&k| random_povm(k, dim, rng)).collect(),
    };
    let a = party(&scenario.alice);
    let b = party(&scenario.bob);
    (a, b)
}

fn gaussian_c<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Haar unitary from the QR decomposition of a complex Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Matrix {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian_c(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Matrix::from_nalgebra(q)
}

fn random_povm<R: Rng + ?Sized>(outcomes: usize, dim: usize, rng: &mut R) -> Vec<Matrix> {
    let id = Matrix::identity(dim);
    if dim >= outcomes {
        let u = haar_unitary(dim, rng);
        let mut ops: Vec<Matrix> = (0..outcomes - 1).map(|a| Matrix::projector(&u.column(a))).collect();
        let mut rest = id;
        for m in &ops {
            rest = &rest - m;
        }
        ops.push(rest.hermitian_part());
        return ops;
    }
    // Rank-1 POVM: M_a = S^{-1/2} v_a v_a† S^{-1/2}, S = sum v_a v_a†.
    let vs: Vec<Vec<C64>> = (0..outcomes).map(|_| (0..dim).map(|_| gaussian_c(rng)).collect()).collect();
    let mut s = Matrix::zeros(dim, dim);
    for v in &vs {
        s += &Matrix::projector(v);
    }
    let e = linalg::eigh(&s).expect("Gram matrix is Hermitian");
    let inv_sqrt = Matrix::from_fn(dim, dim, |i, j| {
        (0..dim)
            .map(|k| e.vectors.get(i, k) * e.vectors.get(j, k).conj() / e.values[k].sqrt())
            .sum()
    });
    vs.iter()
        .map(|v| {
            let w = inv_sqrt.apply(v);
            Matrix::projector(&w)
        })
        .collect()
}

/// Largest primal residual accepted from a solve that stopped short of the
/// gap target.
pub const STEP_FEAS_TOL: f64 = 1e-9;

/// A see-saw step only needs a feasible point, not a certified optimum. Solves
/// that stall near the optimum (common when the optimal face is degenerate)
/// still return a usable primal iterate; the caller rejects it if it does not
/// beat the incumbent.
fn usable(sol: sdp::SdpSolution) -> Result<sdp::SdpSolution> {
    match sol.status {
        sdp::SdpStatus::Optimal => Ok(sol),
        sdp::SdpStatus::MaxIter | sdp::SdpStatus::NumericalFailure
            if sol.primal_infeasibility <= STEP_FEAS_TOL && sol.objective_value.is_finite() =>
        {
            log::debug!("accepting {:?} iterate with gap {:.3e}", sol.status, sol.gap);
            Ok(sol)
        }
        _ => sol.require_optimal(),
    }
}

/// Hermitian basis coefficient matrices: `E` with `<E, X> = 2 Re X_pq`
/// (or `X_pp`), and, unless `real_only`, `<E, X> = 2 Im X_pq`.
fn hermitian_basis(n: usize, real_only: bool) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for p in 0..n {
        for q in p..n {
            out.push((p, q, C64::new(1.0, 0.0)));
            if p != q && !real_only {
                // E_pq = -i, E_qp = +i  =>  <E, X> = 2 Im X_pq
                out.push((p, q, C64::new(0.0, -1.0)));
            }
        }
    }
    out
}

fn single(p: usize, q: usize, v: C64, n: usize) -> SparseHermitian {
    let mut s = SparseHermitian::new(n);
    s.push(p, q, v);
    s
}

/// Maximize `Tr(B rho)` over `rho ⪰ 0`, `PT(rho) ⪰ 0`, `Tr rho = 1`.
///
/// Two PSD blocks `rho` and `sigma` are tied by `sigma = PT(rho)` entrywise.
pub fn state_step(b: &Matrix, dims: BipartiteDims, opts: &SdpOptions) -> Result<(DensityMatrix, f64)> {
    let n = dims.total();
    if b.rows() != n || b.cols() != n {
        return Err(Error::Dimension(format!("Bell operator is {}x{}, expected {n}x{n}", b.rows(), b.cols())));
    }
    if !b.is_hermitian(1e-10 * b.max_abs().max(1.0)) {
        return Err(Error::NotHermitian(b.hermiticity_deviation()));
    }
    let mut problem = SdpProblem::new(vec![n, n]);
    problem.add_objective(0, SparseHermitian::from_matrix(&b.hermitian_part()));
    problem.add_constraint(vec![BlockTerm { block: 0, mat: SparseHermitian::identity(n) }], 1.0);
    let (da, db) = (dims.da, dims.db);
    let pt_index = |p: usize, q: usize| {
        let (i, k) = (p / db, p % db);
        let (j, l) = (q / db, q % db);
        (i * db + l, j * db + k)
    };
    debug_assert!(da * db == n);
    for (p, q, v) in hermitian_basis(n, b.is_real()) {
        let (pp, qq) = pt_index(p, q);
        let mut rho_coeff = single(pp, qq, v, n);
        rho_coeff.scale(-1.0);
        problem.add_constraint(
            vec![
                BlockTerm { block: 1, mat: single(p, q, v, n) },
                BlockTerm { block: 0, mat: rho_coeff },
            ],
            0.0,
        );
    }
    let sol = usable(sdp::solve(&problem, opts)?)?;
    let rho = DensityMatrix::new(sol.primal_blocks[0].hermitian_part(), dims)?;
    Ok((rho, sol.objective_value))
}

/// Linear coefficients `F_{a|x}` of the Bell value in one party's POVM
/// elements, with the other party's operators and the state fixed. Marginal
/// terms of the fixed party are attached to the optimized party's first
/// setting, so `sum <M, F>` reproduces [`evaluate`] exactly.
pub fn measurement_coefficients(
    rho: &DensityMatrix,
    other: &MeasurementSet,
    f: &BellFunctional,
    party: Party,
) -> Result<Vec<Vec<Matrix>>> {
    let dims = rho.dims();
    let (own_counts, other_counts, own_dim) = match party {
        Party::A => (&f.scenario.alice, &f.scenario.bob, dims.da),
        Party::B => (&f.scenario.bob, &f.scenario.alice, dims.db),
    };
    if &other.outcome_counts() != other_counts {
        return Err(Error::Scenario("measurement outcomes do not match the functional".into()));
    }
    let traced = match party {
        Party::A => Party::B,
        Party::B => Party::A,
    };
    let reduced_other: Vec<Vec<Matrix>> = other
        .povms
        .iter()
        .map(|p| p.iter().map(|m| linalg::contract_with(rho.matrix(), dims, traced, m)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let reduced = linalg::partial_trace(rho.matrix(), dims, traced)?;

    let mut coeff: Vec<Vec<Matrix>> = own_counts
        .iter()
        .map(|&k| (0..k).map(|_| Matrix::zeros(own_dim, own_dim)).collect())
        .collect();
    for t in &f.joint {
        match party {
            Party::A => coeff[t.x][t.a].add_scaled(t.c, &reduced_other[t.y][t.b]),
            Party::B => coeff[t.y][t.b].add_scaled(t.c, &reduced_other[t.x][t.a]),
        }
    }
    match party {
        Party::A => {
            for t in &f.alice_marginal {
                coeff[t.x][t.a].add_scaled(t.c, &reduced);
            }
            for t in &f.bob_marginal {
                for a in 0..own_counts[0] {
                    coeff[0][a].add_scaled(t.c, &reduced_other[t.y][t.b]);
                }
            }
        }
        Party::B => {
            for t in &f.bob_marginal {
                coeff[t.y][t.b].add_scaled(t.c, &reduced);
            }
            for t in &f.alice_marginal {
                for b in 0..own_counts[0] {
                    coeff[0][b].add_scaled(t.c, &reduced_other[t.x][t.a]);
                }
            }
        }
    }
    Ok(coeff.into_iter().map(|v| v.into_iter().map(|m| m.hermitian_part()).collect()).collect())
}

/// Optimal POVMs for `party` given the state and the other party's POVMs.
pub fn measurement_step(
    rho: &DensityMatrix,
    other: &MeasurementSet,
    f: &BellFunctional,
    party: Party,
    opts: &SdpOptions,
) -> Result<(MeasurementSet, f64)> {
    let coeff = measurement_coefficients(rho, other, f, party)?;
    let dim = match party {
        Party::A => rho.dims().da,
        Party::B => rho.dims().db,
    };
    let real = coeff.iter().flatten().all(Matrix::is_real);
    let mut sizes = Vec::new();
    let mut offsets = Vec::new();
    for povm in &coeff {
        offsets.push(sizes.len());
        sizes.extend(std::iter::repeat_n(dim, povm.len()));
    }
    let mut problem = SdpProblem::new(sizes);
    for (x, povm) in coeff.iter().enumerate() {
        for (a, fm) in povm.iter().enumerate() {
            problem.add_objective(offsets[x] + a, SparseHermitian::from_matrix(fm));
        }
    }
    let basis = hermitian_basis(dim, real);
    for (x, povm) in coeff.iter().enumerate() {
        for &(p, q, v) in &basis {
            let terms = (0..povm.len())
                .map(|a| BlockTerm { block: offsets[x] + a, mat: single(p, q, v, dim) })
                .collect();
            let rhs = if p == q { 1.0 } else { 0.0 };
            problem.add_constraint(terms, rhs);
        }
    }
    let sol = usable(sdp::solve(&problem, opts)?)?;
    let povms = coeff
        .iter()
        .enumerate()
        .map(|(x, povm)| (0..povm.len()).map(|a| sol.primal_blocks[offsets[x] + a].hermitian_part()).collect())
        .collect();
    Ok((MeasurementSet::new(dim, povms)?, sol.objective_value))
}

pub fn alice_step(
    rho: &DensityMatrix,
    mb: &MeasurementSet,
    f: &BellFunctional,
    opts: &SdpOptions,
) -> Result<(MeasurementSet, f64)> {
    measurement_step(rho, mb, f, Party::A, opts)
}

pub fn bob_step(
    rho: &DensityMatrix,
    ma: &MeasurementSet,
    f: &BellFunctional,
    opts: &SdpOptions,
) -> Result<(MeasurementSet, f64)> {
    measurement_step(rho, ma, f, Party::B, opts)
}

fn state_violation(rho: &DensityMatrix) -> f64 {
    let r = crate::state::verify_state(rho);
    (-r.min_eig).max(-r.pt_min_eig).max(r.trace_dev).max(0.0)
}

/// One see-saw descent from the given measurements.
pub fn run_from(
    f: &BellFunctional,
    start: (MeasurementSet, MeasurementSet),
    cfg: &SeesawConfig,
    restart_index: usize,
) -> Result<SeesawRecord> {
    let (mut ma, mut mb) = start;
    if ma.dim != mb.dim {
        return Err(Error::Dimension("both parties must share the local dimension".into()));
    }
    let dims = BipartiteDims::new(ma.dim, mb.dim)?;
    let mut trace = Vec::new();
    let mut max_state_violation: f64 = 0.0;
    let mut max_step_decrease: f64 = 0.0;
    let mut previous: Option<f64> = None;
    let mut rho = DensityMatrix::maximally_mixed(dims);
    let mut rounds = 0;

    while rounds < cfg.max_rounds {
        rounds += 1;
        let op = bell_operator(f, &ma, &mb)?;
        let (new_rho, raw) = state_step(&op, dims, &cfg.sdp)?;
        let state_value = match previous {
            Some(prev) if raw < prev => {
                max_step_decrease = max_step_decrease.max(prev - raw);
                prev
            }
            _ => {
                rho = new_rho;
                raw
            }
        };
        max_state_violation = max_state_violation.max(state_violation(&rho));
        let before = previous.unwrap_or(state_value);

        let (new_ma, raw) = alice_step(&rho, &mb, f, &cfg.sdp)?;
        let va = if raw < state_value {
            max_step_decrease = max_step_decrease.max(state_value - raw);
            state_value
        } else {
            ma = new_ma;
            raw
        };
        let (new_mb, raw) = bob_step(&rho, &ma, f, &cfg.sdp)?;
        if raw < va {
            max_step_decrease = max_step_decrease.max(va - raw);
        } else {
            mb = new_mb;
        }

        let value = evaluate(f, &behavior(&rho, &ma, &mb)?)?;
        log::info!("restart={restart_index} round={rounds} value={value:.16e}");
        trace.push(value);
        let improvement = value - before;
        previous = Some(value);
        if improvement < cfg.convergence_tol {
            break;
        }
    }

    Ok(SeesawRecord {
        best_value: *trace.last().expect("at least one round"),
        best_state: rho,
        best_measurements: (ma, mb),
        rounds_used: rounds,
        value_trace: trace,
        restart_index,
        max_state_violation,
        max_step_decrease,
    })
}

/// Random generator for one restart: the configured seed with the restart
/// index as stream, independent of scheduling order.
pub fn restart_rng(seed: u64, restart: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Best record over `cfg.restarts` random starts. Restarts whose solves fail
/// are logged and skipped.
pub fn run(f: &BellFunctional, cfg: &SeesawConfig) -> Result<SeesawRecord> {
    cfg.validate()?;
    f.validate()?;
    let records: Vec<Result<SeesawRecord>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(cfg.seed, r);
            let start = random_measurements(&f.scenario, cfg.dim, &mut rng);
            run_from(f, start, cfg, r)
        })
        .collect();
    let mut best: Option<SeesawRecord> = None;
    let mut failures = 0;
    for (r, rec) in records.into_iter().enumerate() {
        match rec {
            Ok(rec) => {
                if best.as_ref().is_none_or(|b| rec.best_value > b.best_value) {
                    best = Some(rec);
                }
            }
            Err(e) => {
                failures += 1;
                log::warn!("restart {r} failed: {e}");
            }
        }
    }
    best.ok_or_else(|| Error::Solver {
        status: sdp::SdpStatus::NumericalFailure,
        detail: format!("all {failures} restarts failed"),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&Matrix> for MatrixJson {
    fn from(m: &Matrix) -> Self {
        Self {
            re: (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j).re).collect()).collect(),
            im: (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j).im).collect()).collect(),
        }
    }
}

/// Serializable form of a [`SeesawRecord`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeesawRecordJson {
    pub best_value: f64,
    pub restart_index: usize,
    pub rounds_used: usize,
    pub value_trace: Vec<f64>,
    pub max_state_violation: f64,
    pub max_step_decrease: f64,
    pub state: StateJson,
    pub alice: Vec<Vec<MatrixJson>>,
    pub bob: Vec<Vec<MatrixJson>>,
}

impl SeesawRecord {
    pub fn to_json(&self) -> SeesawRecordJson {
        let ms = |m: &MeasurementSet| m.povms.iter().map(|p| p.iter().map(MatrixJson::from).collect()).collect();
        SeesawRecordJson {
            best_value: self.best_value,
            restart_index: self.restart_index,
            rounds_used: self.rounds_used,
            value_trace: self.value_trace.clone(),
            max_state_violation: self.max_state_violation,
            max_step_decrease: self.max_step_decrease,
            state: self.best_state.to_json(),
            alice: ms(&self.best_measurements.0),
            bob: ms(&self.best_measurements.1),
        }
    }

    /// Largest drop between consecutive trace entries.
    pub fn max_trace_decrease(&self) -> f64 {
        self.value_trace.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }
}
