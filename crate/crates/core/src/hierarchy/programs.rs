//! Bell-value upper bounds and guessing-probability programs.
//!
//! Both are written with the moment variables as the SDP dual vector: the
//! blocks `F0 + sum_t v_t F_t ⪰ 0` are the dual slack of a primal with one
//! equality row per variable. The primal objective then bounds the
//! relaxation optimum from above at any primal-feasible point.

use serde::{Deserialize, Serialize};

use super::{build_structure_with, Entry, MomentStructure};
use crate::bell::{BellFunctional, Behavior, Scenario};
use crate::error::{Error, Result};
use crate::linalg::{Party, C64};
use crate::sdp::{self, BlockTerm, SdpOptions, SdpProblem, SdpSolution, SdpStatus, SparseHermitian};

/// Where the guessing program places its partial-transpose block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PptPlacement {
    /// One PT block per branch.
    #[default]
    PerBranch,
    /// A single PT block on the branch sum.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyOptions {
    /// Require the Bob-index partial transpose of each moment block to be PSD.
    pub ppt: bool,
    /// Only read by the guessing program.
    pub ppt_placement: PptPlacement,
    /// Drop imaginary parts of moments (see [`MomentStructure::real_moments`]).
    pub real_moments: bool,
    pub sdp: SdpOptions,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        Self {
            ppt: true,
            ppt_placement: PptPlacement::PerBranch,
            real_moments: false,
            sdp: SdpOptions::default(),
        }
    }
}

impl HierarchyOptions {
    /// Defaults used by [`guessing_probability`]: plain quantum moment blocks,
    /// real moments.
    pub fn guessing() -> Self {
        Self {
            ppt: false,
            real_moments: true,
            ..Self::default()
        }
    }
}

/// Real affine form `constant + sum coeff * var`.
#[derive(Debug, Clone, Default, PartialEq)]
struct Affine {
    constant: f64,
    terms: Vec<(usize, f64)>,
}

impl Affine {
    fn var(v: usize) -> Self {
        Self { constant: 0.0, terms: vec![(v, 1.0)] }
    }

    fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    fn add_scaled(&mut self, s: f64, other: &Affine) {
        self.constant += s * other.constant;
        self.terms.extend(other.terms.iter().map(|&(v, c)| (v, s * c)));
    }
}

/// A moment block whose structure variables are affine in the program
/// variables.
struct BlockSpec<'a> {
    structure: &'a MomentStructure,
    pt: bool,
    vars: &'a [Affine],
    unit: &'a Affine,
}

fn push(target: &mut Option<SparseHermitian>, n: usize, r: usize, c: usize, v: C64) {
    target.get_or_insert_with(|| SparseHermitian::new(n)).push(r, c, v);
}

/// `maximize objective(v)` s.t. every block PSD, as an [`SdpProblem`] whose
/// primal optimum is `objective.constant - bound`.
fn assemble(blocks: &[BlockSpec], num_free: usize, objective: &Affine) -> SdpProblem {
    let sizes: Vec<usize> = blocks.iter().map(|b| b.structure.matrix_size()).collect();
    let mut problem = SdpProblem::new(sizes);
    let mut per_var: Vec<Vec<(usize, SparseHermitian)>> = (0..num_free).map(|_| Vec::new()).collect();
    for (k, spec) in blocks.iter().enumerate() {
        let n = spec.structure.matrix_size();
        let mut f0: Option<SparseHermitian> = None;
        let mut fs: Vec<Option<SparseHermitian>> = vec![None; num_free];
        let mut add = |aff: &Affine, r: usize, c: usize, scale: C64, f0: &mut Option<SparseHermitian>| {
            if aff.constant != 0.0 {
                push(f0, n, r, c, scale * aff.constant);
            }
            for &(v, coeff) in &aff.terms {
                push(&mut fs[v], n, r, c, scale * coeff);
            }
        };
        for r in 0..n {
            for c in r..n {
                match spec.structure.entry(r, c, spec.pt) {
                    Entry::Zero => {}
                    Entry::One => add(spec.unit, r, c, C64::new(1.0, 0.0), &mut f0),
                    Entry::Var { re, im, conj } => {
                        add(&spec.vars[re], r, c, C64::new(1.0, 0.0), &mut f0);
                        if let Some(im) = im {
                            if r != c {
                                let s = if conj { -1.0 } else { 1.0 };
                                add(&spec.vars[im], r, c, C64::new(0.0, s), &mut f0);
                            }
                        }
                    }
                }
            }
        }
        if let Some(mut f0) = f0 {
            f0.scale(-1.0);
            problem.add_objective(k, f0);
        }
        for (v, f) in fs.into_iter().enumerate() {
            if let Some(f) = f {
                per_var[v].push((k, f));
            }
        }
    }
    let mut obj = vec![0.0; num_free];
    for &(v, c) in &objective.terms {
        obj[v] += c;
    }
    for (v, terms) in per_var.into_iter().enumerate() {
        problem.add_constraint(
            terms.into_iter().map(|(block, mat)| BlockTerm { block, mat }).collect(),
            -obj[v],
        );
    }
    problem
}

/// Operator `M_{o|s}` of one party in Collins-Gisin terms: the letter itself,
/// or `1 - sum` of the letters for the last outcome.
fn expand(outcome: usize, count: usize) -> Vec<(Option<usize>, f64)> {
    if outcome + 1 < count {
        vec![(Some(outcome), 1.0)]
    } else {
        std::iter::once((None, 1.0)).chain((0..count - 1).map(|o| (Some(o), -1.0))).collect()
    }
}

/// `<op_A ⊗ op_B>` as an affine form over the structure variables; the
/// constant is the coefficient of the normalization.
fn moment_form(
    st: &MomentStructure,
    alice: Option<(usize, usize)>,
    bob: Option<(usize, usize)>,
) -> Affine {
    let mut out = Affine::default();
    let a_ops = match alice {
        Some((a, x)) => expand(a, st.scenario.alice[x]).into_iter().map(|(o, c)| (o.map(|o| (o, x)), c)).collect(),
        None => vec![(None, 1.0)],
    };
    let b_ops: Vec<(Option<(usize, usize)>, f64)> = match bob {
        Some((b, y)) => expand(b, st.scenario.bob[y]).into_iter().map(|(o, c)| (o.map(|o| (o, y)), c)).collect(),
        None => vec![(None, 1.0)],
    };
    for &(ao, ac) in &a_ops {
        for &(bo, bc) in &b_ops {
            let c = ac * bc;
            match (ao, bo) {
                (None, None) => out.constant += c,
                (Some(k), None) => out.terms.push((st.alice_slots[&k], c)),
                (None, Some(k)) => out.terms.push((st.bob_slots[&k], c)),
                (Some((a, x)), Some((b, y))) => out.terms.push((st.behavior_slots[&(a, b, x, y)], c)),
            }
        }
    }
    out
}

/// The functional as an affine form over structure variables.
fn functional_form(f: &BellFunctional, st: &MomentStructure) -> Affine {
    let mut out = Affine::default();
    for t in &f.joint {
        out.add_scaled(t.c, &moment_form(st, Some((t.a, t.x)), Some((t.b, t.y))));
    }
    for t in &f.alice_marginal {
        out.add_scaled(t.c, &moment_form(st, Some((t.a, t.x)), None));
    }
    for t in &f.bob_marginal {
        out.add_scaled(t.c, &moment_form(st, None, Some((t.b, t.y))));
    }
    out
}

/// Accepts optimal solves, and stalled ones whose primal point is feasible;
/// the latter still give a valid (slightly looser) bound.
fn accept(sol: SdpSolution, feas_tol: f64) -> Result<SdpSolution> {
    match sol.status {
        SdpStatus::Optimal => Ok(sol),
        SdpStatus::MaxIter | SdpStatus::NumericalFailure
            if sol.primal_infeasibility <= 10.0 * feas_tol && sol.objective_value.is_finite() =>
        {
            log::warn!(
                "hierarchy solve stopped with {:?}: gap {:.3e}, primal residual {:.3e}; bound kept",
                sol.status,
                sol.gap,
                sol.primal_infeasibility
            );
            Ok(sol)
        }
        _ => sol.require_optimal(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub level: usize,
    /// Upper bound from the primal point.
    pub bound: f64,
    /// Value of the returned moment assignment (within the duality gap of
    /// `bound`).
    pub attained: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    pub matrix_size: usize,
    pub num_variables: usize,
    /// Optimal moment variables.
    pub moments: Vec<f64>,
}

/// SDP whose primal optimum `p*` gives the bound `offset - p*`.
pub fn bound_program(f: &BellFunctional, level: usize, opts: &HierarchyOptions) -> Result<(SdpProblem, f64, MomentStructure)> {
    f.validate()?;
    let st = build_structure_with(&f.scenario, level, opts.real_moments)?;
    let vars: Vec<Affine> = (0..st.num_variables()).map(Affine::var).collect();
    let unit = Affine::constant(1.0);
    let mut blocks = vec![BlockSpec { structure: &st, pt: false, vars: &vars, unit: &unit }];
    if opts.ppt {
        blocks.push(BlockSpec { structure: &st, pt: true, vars: &vars, unit: &unit });
    }
    let objective = functional_form(f, &st);
    let problem = assemble(&blocks, st.num_variables(), &objective);
    let offset = objective.constant;
    Ok((problem, offset, st))
}

pub fn upper_bound(f: &BellFunctional, level: usize, opts: &HierarchyOptions) -> Result<BoundResult> {
    let (problem, offset, st) = bound_program(f, level, opts)?;
    log::info!(
        "hierarchy level {level}: moment matrix {}x{}, {} variables",
        st.matrix_size(),
        st.matrix_size(),
        st.num_variables()
    );
    let sol = accept(sdp::solve(&problem, &opts.sdp)?, opts.sdp.feas_tol)?;
    Ok(BoundResult {
        level,
        bound: offset - sol.objective_value,
        attained: offset - sol.dual_value,
        status: sol.status,
        iterations: sol.iterations,
        matrix_size: st.matrix_size(),
        num_variables: st.num_variables(),
        moments: sol.dual_y,
    })
}

/// Upper bound on the functional over PPT states of any dimension.
pub fn upper_bound_ppt(f: &BellFunctional, level: usize) -> Result<f64> {
    Ok(upper_bound(f, level, &HierarchyOptions::default())?.bound)
}

/// CHSH at level 1 without the PPT block; should return `2√2`.
pub fn tsirelson_check() -> Result<f64> {
    let opts = HierarchyOptions { ppt: false, ..Default::default() };
    Ok(upper_bound(&BellFunctional::chsh(), 1, &opts)?.bound)
}

/// Branch decomposition of a behavior against an adversary guessing one
/// outcome.
#[derive(Debug, Clone)]
pub struct GuessingProgram {
    pub target: Party,
    pub target_setting: usize,
    /// One subnormalized moment block (and its partial transpose) per outcome.
    pub branches: usize,
    pub structure: MomentStructure,
    pub problem: SdpProblem,
    /// `p_g = offset - primal optimum`.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuessingResult {
    pub target: Party,
    pub target_setting: usize,
    pub level: usize,
    pub p_guess: f64,
    /// `-log2 p_guess`
    pub h_min: f64,
    pub status: SdpStatus,
    pub iterations: usize,
}

/// Builds the guessing program. The observed behavior fixes every
/// Collins-Gisin coordinate of the branch sum; the last branch's copies of
/// those coordinates are eliminated through that linkage.
pub fn guessing_program(
    beh: &Behavior,
    target: Party,
    setting: usize,
    level: usize,
    opts: &HierarchyOptions,
) -> Result<GuessingProgram> {
    let scenario: &Scenario = beh.scenario();
    let counts = scenario.settings(target);
    if setting >= counts.len() {
        return Err(Error::OutOfRange {
            name: "target setting",
            value: setting as f64,
            min: 0.0,
            max: (counts.len() - 1) as f64,
        });
    }
    let dev = beh.signaling_deviation().max(beh.normalization_deviation());
    if dev > 1e-8 {
        return Err(Error::Invalid(format!("behavior is not normalized and no-signaling (deviation {dev:.3e})")));
    }
    let st = build_structure_with(scenario, level, opts.real_moments)?;
    let nv = st.num_variables();
    let branches = counts[setting];

    let mut observed: Vec<Option<f64>> = vec![None; nv];
    for (&(a, x), &v) in &st.alice_slots {
        observed[v] = Some(beh.alice_marginal(a, x));
    }
    for (&(b, y), &v) in &st.bob_slots {
        observed[v] = Some(beh.bob_marginal(b, y));
    }
    for (&(a, b, x, y), &v) in &st.behavior_slots {
        observed[v] = Some(beh.p(a, b, x, y));
    }

    // Free branches: structure variables then the normalization.
    let stride = nv + 1;
    let mut num_free = (branches - 1) * stride;
    let mut branch_vars: Vec<Vec<Affine>> = Vec::with_capacity(branches);
    let mut units: Vec<Affine> = Vec::with_capacity(branches);
    for e in 0..branches - 1 {
        branch_vars.push((0..nv).map(|t| Affine::var(e * stride + t)).collect());
        units.push(Affine::var(e * stride + nv));
    }
    let mut last = Vec::with_capacity(nv);
    for (t, obs) in observed.iter().enumerate() {
        last.push(match obs {
            Some(p) => Affine {
                constant: *p,
                terms: (0..branches - 1).map(|e| (e * stride + t, -1.0)).collect(),
            },
            None => {
                num_free += 1;
                Affine::var(num_free - 1)
            }
        });
    }
    branch_vars.push(last);
    units.push(Affine {
        constant: 1.0,
        terms: (0..branches - 1).map(|e| (e * stride + nv, -1.0)).collect(),
    });

    // sum_e <P_{e|s}> evaluated in branch e.
    let mut objective = Affine::default();
    for e in 0..branches {
        let form = match target {
            Party::A => moment_form(&st, Some((e, setting)), None),
            Party::B => moment_form(&st, None, Some((e, setting))),
        };
        objective.add_scaled(form.constant, &units[e]);
        for &(t, c) in &form.terms {
            objective.add_scaled(c, &branch_vars[e][t]);
        }
    }

    let mut specs = Vec::new();
    for e in 0..branches {
        specs.push(BlockSpec { structure: &st, pt: false, vars: &branch_vars[e], unit: &units[e] });
        if opts.ppt && opts.ppt_placement == PptPlacement::PerBranch {
            specs.push(BlockSpec { structure: &st, pt: true, vars: &branch_vars[e], unit: &units[e] });
        }
    }
    let mut total_vars: Vec<Affine> = vec![Affine::default(); nv];
    for bv in &branch_vars {
        for (t, a) in bv.iter().enumerate() {
            total_vars[t].add_scaled(1.0, a);
        }
    }
    let total_unit = Affine::constant(1.0);
    if opts.ppt && opts.ppt_placement == PptPlacement::Sum {
        specs.push(BlockSpec { structure: &st, pt: true, vars: &total_vars, unit: &total_unit });
    }
    let problem = assemble(&specs, num_free, &objective);
    Ok(GuessingProgram {
        target,
        target_setting: setting,
        branches,
        offset: objective.constant,
        structure: st,
        problem,
    })
}

pub fn guessing_probability_with(
    beh: &Behavior,
    target: Party,
    setting: usize,
    level: usize,
    opts: &HierarchyOptions,
) -> Result<GuessingResult> {
    let prog = guessing_program(beh, target, setting, level, opts)?;
    let sol = sdp::solve(&prog.problem, &opts.sdp)?;
    if sol.status == SdpStatus::Infeasible {
        return Err(Error::Inconsistent(format!(
            "behavior is not reproducible by moment blocks at level {level}"
        )));
    }
    let sol = accept(sol, opts.sdp.feas_tol)?;
    let p_guess = prog.offset - sol.objective_value;
    Ok(GuessingResult {
        target,
        target_setting: setting,
        level,
        p_guess,
        h_min: -p_guess.log2(),
        status: sol.status,
        iterations: sol.iterations,
    })
}

/// `(p_g, H_min)` for Bob's outcome at setting `y_star`, with
/// [`HierarchyOptions::guessing`].
pub fn guessing_probability(beh: &Behavior, y_star: usize, level: usize) -> Result<(f64, f64)> {
    let r = guessing_probability_with(beh, Party::B, y_star, level, &HierarchyOptions::guessing())?;
    Ok((r.p_guess, r.h_min))
}
