//! Infeasible-start primal-dual interior-point method with Nesterov–Todd
//! scaling and a Mehrotra predictor-corrector.
//!
//! Everything runs on real symmetric blocks. A complex Hermitian block of
//! size `n` becomes the real block `[[Re, -Im], [Im, Re]]` of size `2n`, with
//! coefficients halved so inner products are preserved.
//!
//! Conventions (maximization form):
//!
//! ```text
//! primal   max <C, X>   s.t. A(X) = b, X ⪰ 0
//! dual     min b·y      s.t. Z = Aᵀ(y) - C ⪰ 0
//! ```

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};

use super::problem::{SdpProblem, SparseHermitian};
use super::{SdpOptions, SdpSolution, SdpStatus};
use crate::linalg::{Matrix, C64};

/// Upper-triangle sparse real symmetric matrix.
#[derive(Debug, Clone, Default)]
struct RealSym {
    entries: Vec<(usize, usize, f64)>,
}

impl RealSym {
    fn dot(&self, p: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * p[(i, i)] } else { 2.0 * v * p[(i, j)] })
            .sum()
    }

    fn add_to(&self, dense: &mut DMatrix<f64>, s: f64) {
        for &(i, j, v) in &self.entries {
            dense[(i, j)] += s * v;
            if i != j {
                dense[(j, i)] += s * v;
            }
        }
    }

    fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|&(i, j, v)| if i == j { v * v } else { 2.0 * v * v }).sum()
    }

    /// `W A W` for symmetric `W`.
    fn sandwich(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let n = w.nrows();
        // U = W A, touching only the columns A occupies.
        let mut cols: Vec<usize> = Vec::new();
        let mut slot = vec![usize::MAX; n];
        let mut touch = |c: usize, cols: &mut Vec<usize>| {
            if slot[c] == usize::MAX {
                slot[c] = cols.len();
                cols.push(c);
            }
            slot[c]
        };
        let mut pairs = Vec::with_capacity(self.entries.len() * 2);
        for &(i, j, v) in &self.entries {
            pairs.push((i, touch(j, &mut cols), v));
            if i != j {
                pairs.push((j, touch(i, &mut cols), v));
            }
        }
        let t = cols.len();
        let mut u = DMatrix::<f64>::zeros(n, t);
        for (p, q, v) in pairs {
            // U[:, q] += v W[:, p]
            let wp = w.column(p);
            let mut uq = u.column_mut(q);
            uq.axpy(v, &wp, 1.0);
        }
        let mut wrows = DMatrix::<f64>::zeros(t, n);
        for (k, &c) in cols.iter().enumerate() {
            wrows.row_mut(k).copy_from(&w.row(c));
        }
        u * wrows
    }
}

struct Block {
    /// Hermitian (complex) size.
    n: usize,
    /// Real working size: `n` or `2n`.
    size: usize,
    complex: bool,
}

/// Projects a `2n x 2n` real matrix onto the image of the complex embedding
/// `[[Re, -Im], [Im, Re]]`. The embedded program is invariant under this
/// projection, and keeping iterates on it avoids drifting into the spurious
/// directions the embedding adds.
fn restructure(m: &mut DMatrix<f64>) {
    let n = m.nrows() / 2;
    for i in 0..n {
        for j in 0..n {
            let re = 0.5 * (m[(i, j)] + m[(n + i, n + j)]);
            let im = 0.5 * (m[(n + i, j)] - m[(i, n + j)]);
            m[(i, j)] = re;
            m[(n + i, n + j)] = re;
            m[(n + i, j)] = im;
            m[(i, n + j)] = -im;
        }
    }
}

fn embed(h: &SparseHermitian, block: &Block) -> RealSym {
    let mut out = RealSym::default();
    if !block.complex {
        out.entries = h.entries.iter().map(|&(i, j, v)| (i, j, v.re)).collect();
        return out;
    }
    let n = block.n;
    for &(i, j, v) in &h.entries {
        let (r, im) = (0.5 * v.re, 0.5 * v.im);
        if r != 0.0 {
            out.entries.push((i, j, r));
            out.entries.push((i + n, j + n, r));
        }
        if im != 0.0 && i != j {
            // lower-left block holds Im(H): E[n + r, s] = Im H[r, s]
            out.entries.push((j, n + i, im));
            out.entries.push((i, n + j, -im));
        }
    }
    out
}

fn unembed(x: &DMatrix<f64>, block: &Block, dual_scale: f64) -> Matrix {
    let n = block.n;
    if !block.complex {
        return Matrix::from_real_fn(n, n, |i, j| 0.5 * (x[(i, j)] + x[(j, i)]));
    }
    // Primal: X = (X11 + X22)/2 + i (X21 - X12)/2. Dual slack carries an extra 2.
    let s = 0.5 * dual_scale;
    Matrix::from_fn(n, n, |i, j| {
        C64::new(
            s * (x[(i, j)] + x[(i + n, j + n)]),
            s * (x[(i + n, j)] - x[(i, j + n)]),
        )
    })
}

struct Model {
    blocks: Vec<Block>,
    c: Vec<DMatrix<f64>>,
    /// Per block: `(active constraint index, coefficient)`.
    a: Vec<Vec<(usize, RealSym)>>,
    b: Vec<f64>,
    /// Original index of each active constraint.
    active: Vec<usize>,
    dropped: Vec<usize>,
    /// Cholesky factor of `A Aᵀ` over the active rows.
    gram: Option<Cholesky<f64, nalgebra::Dyn>>,
}

impl Model {
    fn m(&self) -> usize {
        self.b.len()
    }

    fn a_op(&self, x: &[DMatrix<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.m()];
        for (k, list) in self.a.iter().enumerate() {
            for (m, a) in list {
                out[*m] += a.dot(&x[k]);
            }
        }
        out
    }

    fn at_op(&self, y: &[f64]) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.blocks.iter().map(|b| DMatrix::zeros(b.size, b.size)).collect();
        for (k, list) in self.a.iter().enumerate() {
            for (m, a) in list {
                if y[*m] != 0.0 {
                    a.add_to(&mut out[k], y[*m]);
                }
            }
        }
        out
    }
}

fn build_model(problem: &SdpProblem, force_complex: bool) -> Model {
    let nb = problem.blocks.len();
    let mut complex = vec![force_complex; nb];
    for t in problem
        .objective
        .iter()
        .chain(problem.constraints.iter().flat_map(|c| c.terms.iter()))
    {
        if !t.mat.is_real() {
            complex[t.block] = true;
        }
    }
    let blocks: Vec<Block> = problem
        .blocks
        .iter()
        .zip(&complex)
        .map(|(&n, &cx)| Block {
            n,
            size: if cx { 2 * n } else { n },
            complex: cx,
        })
        .collect();
    let mut c: Vec<DMatrix<f64>> = blocks.iter().map(|b| DMatrix::zeros(b.size, b.size)).collect();
    for t in &problem.objective {
        embed(&t.mat, &blocks[t.block]).add_to(&mut c[t.block], 1.0);
    }

    // Constraint coefficients per original index, merged per block.
    let per_constraint: Vec<Vec<(usize, RealSym)>> = problem
        .constraints
        .iter()
        .map(|con| {
            let mut by_block: Vec<(usize, RealSym)> = Vec::new();
            for t in &con.terms {
                let e = embed(&t.mat, &blocks[t.block]);
                match by_block.iter_mut().find(|(k, _)| *k == t.block) {
                    Some((_, acc)) => acc.entries.extend(e.entries),
                    None => by_block.push((t.block, e)),
                }
            }
            by_block.retain(|(_, s)| s.entries.iter().any(|e| e.2 != 0.0));
            by_block
        })
        .collect();

    let (active, dropped, gram) = independent_rows(&blocks, &per_constraint);
    let gram = Cholesky::new(gram);
    if !dropped.is_empty() {
        log::warn!("dropping {} linearly dependent constraint(s): {:?}", dropped.len(), dropped);
    }
    let mut a: Vec<Vec<(usize, RealSym)>> = (0..nb).map(|_| Vec::new()).collect();
    for (new_m, &orig) in active.iter().enumerate() {
        for (k, s) in &per_constraint[orig] {
            a[*k].push((new_m, s.clone()));
        }
    }
    let b = active.iter().map(|&m| problem.constraints[m].rhs).collect();
    Model {
        blocks,
        c,
        a,
        b,
        active,
        dropped,
        gram,
    }
}

/// Greedy pivoted Cholesky on the constraint Gram matrix.
fn independent_rows(
    blocks: &[Block],
    rows: &[Vec<(usize, RealSym)>],
) -> (Vec<usize>, Vec<usize>, DMatrix<f64>) {
    let m = rows.len();
    if m == 0 {
        return (Vec::new(), Vec::new(), DMatrix::zeros(0, 0));
    }
    // Gram matrix via dense scatter per constraint.
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut per_block: Vec<Vec<(usize, &RealSym)>> = (0..blocks.len()).map(|_| Vec::new()).collect();
    for (i, r) in rows.iter().enumerate() {
        for (k, s) in r {
            per_block[*k].push((i, s));
        }
    }
    for (k, list) in per_block.iter().enumerate() {
        let n = blocks[k].size;
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for (pos, (i, s)) in list.iter().enumerate() {
            s.add_to(&mut dense, 1.0);
            for (j, t) in &list[pos..] {
                let v = t.dot(&dense);
                gram[(*i, *j)] += v;
                if i != j {
                    gram[(*j, *i)] += v;
                }
            }
            s.add_to(&mut dense, -1.0);
        }
    }
    let scale = (0..m).map(|i| gram[(i, i)]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let mut active = Vec::new();
    let mut dropped = Vec::new();
    // Incremental Cholesky in the given order.
    let mut l: Vec<Vec<f64>> = Vec::new();
    for i in 0..m {
        let mut row = Vec::with_capacity(l.len());
        for (jj, &j) in active.iter().enumerate() {
            let lj: &Vec<f64> = &l[jj];
            let dot: f64 = row.iter().zip(lj.iter()).map(|(a, b)| a * b).sum();
            row.push((gram[(i, j)] - dot) / lj[jj]);
        }
        let d = gram[(i, i)] - row.iter().map(|v| v * v).sum::<f64>();
        if d > tol {
            row.push(d.sqrt());
            l.push(row);
            active.push(i);
        } else {
            dropped.push(i);
        }
    }
    let gram = DMatrix::from_fn(active.len(), active.len(), |i, j| gram[(active[i], active[j])]);
    (active, dropped, gram)
}

struct Scaling {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    w: DMatrix<f64>,
    lambda: DVector<f64>,
}

fn nt_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Scaling> {
    let lx = Cholesky::new(x.clone())?.unpack();
    let lx = &lx;
    let lz = Cholesky::new(z.clone())?.unpack();
    let svd = SVD::new(lz.transpose() * lx, false, true);
    let v_t = svd.v_t?;
    let d = svd.singular_values;
    if d.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return None;
    }
    let n = x.nrows();
    // G = Lx V D^{-1/2}
    let mut g = lx * v_t.transpose();
    for j in 0..n {
        let s = 1.0 / d[j].sqrt();
        g.column_mut(j).scale_mut(s);
    }
    let w = &g * g.transpose();
    // G⁻¹ = D^{1/2} Vᵀ Lx⁻¹
    let lx_inv = lx.solve_lower_triangular(&DMatrix::identity(n, n))?;
    let mut g_inv = &v_t * lx_inv;
    for i in 0..n {
        let s = d[i].sqrt();
        g_inv.row_mut(i).scale_mut(s);
    }
    Some(Scaling { g, g_inv, w, lambda: d })
}

/// Largest `alpha <= 1` with `Λ + alpha * D ⪰ 0`, shrunk by `gamma`.
fn step_length(lambda: &DVector<f64>, d: &DMatrix<f64>, gamma: f64) -> f64 {
    let n = lambda.len();
    let inv_sqrt: Vec<f64> = lambda.iter().map(|l| 1.0 / l.sqrt()).collect();
    let s = DMatrix::from_fn(n, n, |i, j| 0.5 * (d[(i, j)] + d[(j, i)]) * inv_sqrt[i] * inv_sqrt[j]);
    let min = SymmetricEigen::new(s).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min >= 0.0 {
        1.0
    } else {
        (gamma / -min).min(1.0)
    }
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

struct Iterate {
    x: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
    y: Vec<f64>,
}

struct Metrics {
    pobj: f64,
    dobj: f64,
    gap: f64,
    pinf: f64,
    dinf: f64,
}

/// Iterations without a 10% improvement of the merit before giving up.
const NO_PROGRESS_LIMIT: usize = 15;

pub(super) fn solve(problem: &SdpProblem, opts: &SdpOptions) -> SdpSolution {
    let model = build_model(problem, opts.force_complex);
    let m = model.m();
    let nb = model.blocks.len();
    let total_size: usize = model.blocks.iter().map(|b| b.size).sum();

    let b_norm = model.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let c_norm = model.c.iter().map(max_abs).fold(0.0, f64::max);

    // Identity-scaled starting point.
    let mut it = Iterate {
        x: Vec::with_capacity(nb),
        z: Vec::with_capacity(nb),
        y: vec![0.0; m],
    };
    for (k, blk) in model.blocks.iter().enumerate() {
        let nsz = blk.size as f64;
        let mut xi: f64 = 1.0;
        let mut a_max: f64 = 0.0;
        for (mm, a) in &model.a[k] {
            let af = a.frobenius_sq().sqrt();
            a_max = a_max.max(af);
            xi = xi.max(nsz.sqrt() * (1.0 + model.b[*mm].abs()) / (1.0 + af));
        }
        let cf = model.c[k].norm();
        let eta = (1.0 + a_max.max(cf)) / nsz.sqrt();
        let eta = eta.max(1.0);
        it.x.push(DMatrix::identity(blk.size, blk.size) * xi);
        it.z.push(DMatrix::identity(blk.size, blk.size) * eta);
    }

    let metrics = |it: &Iterate| -> Metrics {
        let ax = model.a_op(&it.x);
        let pinf = ax.iter().zip(&model.b).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs())) / (1.0 + b_norm);
        let aty = model.at_op(&it.y);
        let mut dinf: f64 = 0.0;
        let mut pobj = 0.0;
        let mut xz = 0.0;
        for k in 0..nb {
            let rd = &model.c[k] + &it.z[k] - &aty[k];
            dinf = dinf.max(max_abs(&rd));
            pobj += inner(&model.c[k], &it.x[k]);
            xz += inner(&it.x[k], &it.z[k]);
        }
        let dobj: f64 = model.b.iter().zip(&it.y).map(|(b, y)| b * y).sum();
        Metrics {
            pobj,
            dobj,
            gap: (dobj - pobj).abs().max(xz),
            pinf,
            dinf: dinf / (1.0 + c_norm),
        }
    };

    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;
    let mut stalls = 0;
    let mut best_iter = 0;
    let mut best: Option<(f64, Iterate)> = None;
    let merit = |mt: &Metrics| mt.gap.max(mt.pinf).max(mt.dinf);

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let mt = metrics(&it);
        if !mt.pobj.is_finite() || !mt.dobj.is_finite() {
            status = SdpStatus::NumericalFailure;
            break;
        }
        if best.as_ref().is_none_or(|(v, _)| merit(&mt) < *v) {
            // Count only real progress so that round-off wobble still ends
            // the run.
            if best.as_ref().is_none_or(|(v, _)| merit(&mt) < 0.9 * *v) {
                best_iter = iter;
            }
            best = Some((
                merit(&mt),
                Iterate {
                    x: it.x.clone(),
                    z: it.z.clone(),
                    y: it.y.clone(),
                },
            ));
        }
        log::trace!(
            "sdp iter {iter}: pobj={:.12e} dobj={:.12e} gap={:.3e} pinf={:.3e} dinf={:.3e}",
            mt.pobj,
            mt.dobj,
            mt.gap,
            mt.pinf,
            mt.dinf
        );
        if mt.gap <= opts.gap_tol && mt.pinf <= opts.feas_tol && mt.dinf <= opts.feas_tol {
            status = SdpStatus::Optimal;
            break;
        }
        // Diverging objectives with shrinking residual ratio signal an
        // improving ray on one side.
        if iter > 5
            && ((mt.pobj > 1e8 * (1.0 + b_norm) && mt.pinf * (1.0 + b_norm) < 1e-6 * mt.pobj)
                || (-mt.dobj > 1e8 * (1.0 + c_norm) && mt.dinf * (1.0 + c_norm) < 1e-6 * -mt.dobj))
        {
            status = SdpStatus::Infeasible;
            break;
        }
        if iter == opts.max_iter {
            break;
        }
        if iter >= best_iter + NO_PROGRESS_LIMIT {
            status = SdpStatus::NumericalFailure;
            break;
        }

        // Residuals.
        let ax = model.a_op(&it.x);
        let rp: Vec<f64> = model.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = model.at_op(&it.y);
        let rd: Vec<DMatrix<f64>> = (0..nb).map(|k| &model.c[k] + &it.z[k] - &aty[k]).collect();
        let mu: f64 = (0..nb).map(|k| inner(&it.x[k], &it.z[k])).sum::<f64>() / total_size as f64;

        let Some(scalings) = (0..nb).map(|k| nt_scaling(&it.x[k], &it.z[k])).collect::<Option<Vec<_>>>() else {
            status = SdpStatus::NumericalFailure;
            break;
        };

        // Schur complement M_ij = <A_i, W A_j W>.
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for (k, list) in model.a.iter().enumerate() {
            let w = &scalings[k].w;
            for (pos, (i, ai)) in list.iter().enumerate() {
                let p = ai.sandwich(w);
                for (j, aj) in &list[pos..] {
                    let v = aj.dot(&p);
                    schur[(*i, *j)] += v;
                    if i != j {
                        schur[(*j, *i)] += v;
                    }
                }
            }
        }
        let chol = match Cholesky::new(schur.clone()) {
            Some(ch) => ch,
            None => {
                let diag_max = (0..m).map(|i| schur[(i, i)]).fold(0.0, f64::max).max(1e-300);
                let mut reg = schur.clone();
                for i in 0..m {
                    reg[(i, i)] += 1e-13 * diag_max;
                }
                match Cholesky::new(reg) {
                    Some(ch) => ch,
                    None => {
                        status = SdpStatus::NumericalFailure;
                        break;
                    }
                }
            }
        };

        // Solve for a direction given scaled complementarity targets R̃_k.
        let direction = |rt: &[DMatrix<f64>]| {
            let mut rhs_mats: Vec<DMatrix<f64>> = Vec::with_capacity(nb);
            for k in 0..nb {
                let s = &scalings[k];
                rhs_mats.push(&s.g * &rt[k] * s.g.transpose() + &s.w * &rd[k] * &s.w);
            }
            let mut rhs = model.a_op(&rhs_mats);
            for (r, p) in rhs.iter_mut().zip(&rp) {
                *r -= p;
            }
            let rhs = DVector::from_vec(rhs);
            let mut dy = chol.solve(&rhs);
            // Iterative refinement; the Schur matrix is badly conditioned near
            // rank-deficient optima.
            for _ in 0..2 {
                let r = &rhs - &schur * &dy;
                dy += chol.solve(&r);
            }
            let dy: Vec<f64> = dy.iter().copied().collect();
            let atdy = model.at_op(&dy);
            let mut dzt = Vec::with_capacity(nb);
            let mut dxt = Vec::with_capacity(nb);
            let mut dz = Vec::with_capacity(nb);
            let mut dx = Vec::with_capacity(nb);
            for k in 0..nb {
                let s = &scalings[k];
                let dzk = &atdy[k] - &rd[k];
                let dzt_k = s.g.transpose() * &dzk * &s.g;
                let dxt_k = &rt[k] - &dzt_k;
                dx.push(&s.g * &dxt_k * s.g.transpose());
                dz.push(dzk);
                dzt.push(dzt_k);
                dxt.push(dxt_k);
            }
            // Restore A(ΔX) = rp, which the Schur solve loses when W is
            // badly scaled, by a least-squares correction in the range of Aᵀ.
            if let Some(gram) = &model.gram {
                let adx = model.a_op(&dx);
                let e: Vec<f64> = rp.iter().zip(&adx).map(|(r, a)| r - a).collect();
                let t = gram.solve(&DVector::from_vec(e));
                let t: Vec<f64> = t.iter().copied().collect();
                let corr = model.at_op(&t);
                for k in 0..nb {
                    dx[k] += &corr[k];
                }
            }
            for k in 0..nb {
                if model.blocks[k].complex {
                    restructure(&mut dx[k]);
                }
                let gi = &scalings[k].g_inv;
                dxt[k] = gi * &dx[k] * gi.transpose();
            }
            (dy, dx, dz, dxt, dzt)
        };

        let steps = |dxt: &[DMatrix<f64>], dzt: &[DMatrix<f64>], gamma: f64| {
            let mut ap: f64 = 1.0;
            let mut ad: f64 = 1.0;
            for k in 0..nb {
                ap = ap.min(step_length(&scalings[k].lambda, &dxt[k], gamma));
                ad = ad.min(step_length(&scalings[k].lambda, &dzt[k], gamma));
            }
            (ap, ad)
        };

        // Predictor: R̃ = -Λ.
        let rt_pred: Vec<DMatrix<f64>> = scalings
            .iter()
            .map(|s| DMatrix::from_diagonal(&(-&s.lambda)))
            .collect();
        let (_, _, _, dxt_p, dzt_p) = direction(&rt_pred);
        let (ap, ad) = steps(&dxt_p, &dzt_p, 1.0);
        let mut mu_aff = 0.0;
        for k in 0..nb {
            let lam = DMatrix::from_diagonal(&scalings[k].lambda);
            mu_aff += inner(&(&lam + &dxt_p[k] * ap), &(&lam + &dzt_p[k] * ad));
        }
        mu_aff /= total_size as f64;
        let expon = (3.0 * ap.min(ad).powi(2)).max(1.0);
        let sigma = if mu > 0.0 { (mu_aff / mu).max(0.0).powf(expon).min(1.0) } else { 0.0 };

        // Corrector: Rc = σμI - Λ² - sym(ΔX̃p ΔZ̃p), R̃_ij = 2 Rc_ij / (λ_i + λ_j).
        let rt_corr: Vec<DMatrix<f64>> = (0..nb)
            .map(|k| {
                let lam = &scalings[k].lambda;
                let n = lam.len();
                let cross = &dxt_p[k] * &dzt_p[k];
                DMatrix::from_fn(n, n, |i, j| {
                    let mut rc = -0.5 * (cross[(i, j)] + cross[(j, i)]);
                    if i == j {
                        rc += sigma * mu - lam[i] * lam[i];
                    }
                    2.0 * rc / (lam[i] + lam[j])
                })
            })
            .collect();
        let (dy, dx, dz, dxt, dzt) = direction(&rt_corr);
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let (mut ap, mut ad) = steps(&dxt, &dzt, gamma);

        // Guard against round-off pushing an iterate out of the cone.
        let mut accepted = false;
        for _ in 0..8 {
            let xs: Vec<DMatrix<f64>> = (0..nb).map(|k| &it.x[k] + &dx[k] * ap).collect();
            let zs: Vec<DMatrix<f64>> = (0..nb).map(|k| &it.z[k] + &dz[k] * ad).collect();
            let ok = xs.iter().chain(zs.iter()).all(|mm| Cholesky::new(mm.clone()).is_some());
            if ok {
                it.x = xs;
                it.z = zs;
                for (yv, d) in it.y.iter_mut().zip(&dy) {
                    *yv += ad * d;
                }
                accepted = true;
                break;
            }
            ap *= 0.5;
            ad *= 0.5;
        }
        if !accepted {
            status = SdpStatus::NumericalFailure;
            break;
        }
        if ap.max(ad) < 1e-13 {
            stalls += 1;
            if stalls >= 3 {
                status = SdpStatus::NumericalFailure;
                break;
            }
        } else {
            stalls = 0;
        }
    }

    if status != SdpStatus::Optimal && status != SdpStatus::Infeasible {
        if let Some((_, b)) = best {
            it = b;
        }
    }
    let mt = metrics(&it);

    let primal_blocks = model.blocks.iter().zip(&it.x).map(|(b, x)| unembed(x, b, 1.0)).collect();
    let dual_slack = model.blocks.iter().zip(&it.z).map(|(b, z)| unembed(z, b, 2.0)).collect();
    let mut dual_y = vec![0.0; problem.constraints.len()];
    for (new_m, &orig) in model.active.iter().enumerate() {
        dual_y[orig] = it.y[new_m];
    }

    let mut solution = SdpSolution {
        status,
        primal_blocks,
        dual_slack,
        dual_y,
        objective_value: mt.pobj,
        dual_value: mt.dobj,
        gap: mt.dobj - mt.pobj,
        primal_infeasibility: mt.pinf,
        dual_infeasibility: mt.dinf,
        iterations,
        dropped_constraints: model.dropped.clone(),
    };
    // Dropped rows must still hold at the returned point.
    if solution.status == SdpStatus::Optimal && !model.dropped.is_empty() {
        let worst = model
            .dropped
            .iter()
            .map(|&mm| {
                let c = &problem.constraints[mm];
                (c.terms.iter().map(|t| t.mat.inner(&solution.primal_blocks[t.block])).sum::<f64>() - c.rhs).abs()
            })
            .fold(0.0, f64::max);
        if worst > 1e3 * opts.feas_tol * (1.0 + b_norm) {
            solution.status = SdpStatus::Infeasible;
        }
    }
    solution
}
