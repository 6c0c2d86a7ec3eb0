//! Moment-matrix relaxations with a partial-transpose constraint.
//!
//! Rows and columns of the moment matrix are indexed by pairs of words
//! `(S_i, T_k)`, one per party, so `Γ[(i,k),(j,l)] = <S_i† S_j ⊗ T_k† T_l>`.
//! Level `ℓ` takes all words of length at most `ℓ` on each side. Projector
//! relations are imposed by giving canonically equal moments the same
//! variable.

mod programs;

pub use programs::{
    bound_program, guessing_probability, guessing_probability_with, guessing_program, tsirelson_check, upper_bound,
    upper_bound_ppt, BoundResult, GuessingProgram, GuessingResult, HierarchyOptions, PptPlacement,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bell::{MeasurementSet, Scenario};
use crate::error::{Error, Result};
use crate::linalg::{kron, trace_product, Matrix, Party, C64};
use crate::state::DensityMatrix;

/// Highest level accepted by [`build_structure`].
pub const MAX_LEVEL: usize = 3;

/// Projector `M_{outcome|setting}` of one party. Only outcomes below the last
/// are letters; the last operator is `1 - sum of the others`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub party: Party,
    pub setting: usize,
    pub outcome: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word {
    pub party: Party,
    pub letters: Vec<Letter>,
}

impl Word {
    pub fn identity(party: Party) -> Self {
        Self { party, letters: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Projectors are Hermitian, so the adjoint is the reversed word.
    pub fn adjoint(&self) -> Self {
        Self {
            party: self.party,
            letters: self.letters.iter().rev().copied().collect(),
        }
    }

    /// Raw concatenation, not canonicalized.
    pub fn concat(&self, other: &Word) -> Self {
        Self {
            party: self.party,
            letters: self.letters.iter().chain(&other.letters).copied().collect(),
        }
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        let p = match self.party {
            Party::A => 'A',
            Party::B => 'B',
        };
        for (n, l) in self.letters.iter().enumerate() {
            if n > 0 {
                write!(f, "·")?;
            }
            write!(f, "{p}{}|{}", l.outcome, l.setting)?;
        }
        Ok(())
    }
}

fn reduce(letters: impl IntoIterator<Item = Letter>) -> Option<Vec<Letter>> {
    let mut out: Vec<Letter> = Vec::new();
    for l in letters {
        match out.last() {
            Some(top) if *top == l => {}
            Some(top) if top.setting == l.setting => return None,
            _ => out.push(l),
        }
    }
    Some(out)
}

/// Applies `P² = P` and `P_a P_b = 0` (same setting, `a ≠ b`). `None` is the
/// zero operator.
pub fn canonicalize(word: &Word) -> Option<Word> {
    reduce(word.letters.iter().copied()).map(|letters| Word { party: word.party, letters })
}

/// Letters of one party in `(setting, outcome)` order.
pub fn letters(settings: &[usize], party: Party) -> Vec<Letter> {
    settings
        .iter()
        .enumerate()
        .flat_map(|(setting, &k)| (0..k.saturating_sub(1)).map(move |outcome| Letter { party, setting, outcome }))
        .collect()
}

/// Canonical words of length `<= level`, by length and then letter order.
pub fn generate_words(settings: &[usize], party: Party, level: usize) -> Vec<Word> {
    let alphabet = letters(settings, party);
    let mut words = vec![Word::identity(party)];
    let mut frontier = vec![Word::identity(party)];
    for _ in 0..level {
        let mut next = Vec::new();
        for w in &frontier {
            for l in &alphabet {
                // A canonical word stays canonical and grows iff the new letter
                // changes setting.
                if w.letters.last().is_none_or(|last| last.setting != l.setting) {
                    let mut letters = w.letters.clone();
                    letters.push(*l);
                    next.push(Word { party, letters });
                }
            }
        }
        words.extend(next.iter().cloned());
        frontier = next;
    }
    words
}

/// Canonical moment `<α ⊗ β>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MomentKey {
    pub alice: Word,
    pub bob: Word,
}

impl MomentKey {
    pub fn adjoint(&self) -> Self {
        Self {
            alice: self.alice.adjoint(),
            bob: self.bob.adjoint(),
        }
    }

    pub fn is_self_adjoint(&self) -> bool {
        *self == self.adjoint()
    }
}

/// Real variables of one representative moment: `re + i im`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarRef {
    pub re: usize,
    pub im: Option<usize>,
}

/// Content of one moment-matrix cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entry {
    Zero,
    /// `<1 ⊗ 1>`, the normalization.
    One,
    /// `re ± i im`; `conj` selects the minus sign (the cell holds the adjoint
    /// of the representative key).
    Var { re: usize, im: Option<usize>, conj: bool },
}

#[derive(Debug, Clone)]
pub struct MomentStructure {
    pub level: usize,
    pub scenario: Scenario,
    pub alice_words: Vec<Word>,
    pub bob_words: Vec<Word>,
    /// Imaginary parts are dropped. Exact for the programs here because
    /// their data are real, so the real part of any feasible point is
    /// feasible with the same value.
    pub real_moments: bool,
    pub variable_map: BTreeMap<MomentKey, VarRef>,
    /// Key and part (`false` real, `true` imaginary) of every variable.
    pub variables: Vec<(MomentKey, bool)>,
    /// `(a, b, x, y)` → variable of `<A_{a|x} ⊗ B_{b|y}>`, non-last outcomes.
    pub behavior_slots: BTreeMap<(usize, usize, usize, usize), usize>,
    /// `(a, x)` → variable of `<A_{a|x} ⊗ 1>`.
    pub alice_slots: BTreeMap<(usize, usize), usize>,
    /// `(b, y)` → variable of `<1 ⊗ B_{b|y}>`.
    pub bob_slots: BTreeMap<(usize, usize), usize>,
    entries: Vec<Entry>,
    pt_entries: Vec<Entry>,
}

fn product_key(si: &Word, sj: &Word, tk: &Word, tl: &Word) -> Option<MomentKey> {
    let alice = canonicalize(&si.adjoint().concat(sj))?;
    let bob = canonicalize(&tk.adjoint().concat(tl))?;
    Some(MomentKey { alice, bob })
}

impl MomentStructure {
    pub fn matrix_size(&self) -> usize {
        self.alice_words.len() * self.bob_words.len()
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    fn entry_for(&mut self, key: Option<MomentKey>) -> Entry {
        let Some(key) = key else { return Entry::Zero };
        if key.alice.is_empty() && key.bob.is_empty() {
            return Entry::One;
        }
        let adj = key.adjoint();
        let (rep, conj) = if adj < key { (adj, true) } else { (key, false) };
        let self_adjoint = !conj && rep.is_self_adjoint();
        let r = match self.variable_map.get(&rep) {
            Some(r) => *r,
            None => {
                let re = self.variables.len();
                self.variables.push((rep.clone(), false));
                let im = if self_adjoint || self.real_moments {
                    None
                } else {
                    self.variables.push((rep.clone(), true));
                    Some(re + 1)
                };
                let r = VarRef { re, im };
                self.variable_map.insert(rep, r);
                r
            }
        };
        Entry::Var { re: r.re, im: r.im, conj }
    }

    /// Cell `(r, c)` of the moment matrix, or of its partial transpose over
    /// the Bob index when `pt` is set.
    pub fn entry(&self, r: usize, c: usize, pt: bool) -> Entry {
        let n = self.matrix_size();
        if pt {
            self.pt_entries[r * n + c]
        } else {
            self.entries[r * n + c]
        }
    }

    fn key_of(&self, a: Option<(usize, usize)>, b: Option<(usize, usize)>) -> MomentKey {
        let word = |party, l: Option<(usize, usize)>| Word {
            party,
            letters: l.map(|(setting, outcome)| Letter { party, setting, outcome }).into_iter().collect(),
        };
        MomentKey {
            alice: word(Party::A, a),
            bob: word(Party::B, b),
        }
    }

    fn slot(&self, key: &MomentKey) -> usize {
        self.variable_map[key].re
    }

    /// Matrix with cell values from `values` and `unit` for `<1 ⊗ 1>`.
    pub fn moment_matrix(&self, values: &[f64], unit: f64, pt: bool) -> Matrix {
        let n = self.matrix_size();
        Matrix::from_fn(n, n, |r, c| match self.entry(r, c, pt) {
            Entry::Zero => C64::new(0.0, 0.0),
            Entry::One => C64::new(unit, 0.0),
            Entry::Var { re, im, conj } => {
                let i = im.map_or(0.0, |k| values[k]);
                C64::new(values[re], if conj { -i } else { i })
            }
        })
    }

    /// Variable values `Tr(ρ α ⊗ β)` for projective measurements.
    pub fn assignment(&self, rho: &DensityMatrix, ma: &MeasurementSet, mb: &MeasurementSet) -> Result<Vec<f64>> {
        let dims = rho.dims();
        if ma.dim != dims.da || mb.dim != dims.db {
            return Err(Error::Dimension("measurements do not match the state".into()));
        }
        if ma.outcome_counts() != self.scenario.alice || mb.outcome_counts() != self.scenario.bob {
            return Err(Error::Scenario("measurements do not match the structure's scenario".into()));
        }
        for m in ma.povms.iter().chain(&mb.povms).flatten() {
            let sq = m * m;
            if sq.max_abs_diff(m) > 1e-9 {
                return Err(Error::Invalid("moment assignment needs projective measurements".into()));
            }
        }
        let op = |w: &Word, ms: &MeasurementSet| {
            let mut acc = Matrix::identity(ms.dim);
            for l in &w.letters {
                acc = &acc * &ms.povms[l.setting][l.outcome];
            }
            acc
        };
        let mut values = vec![0.0; self.variables.len()];
        for (key, r) in &self.variable_map {
            let o = kron(&op(&key.alice, ma), &op(&key.bob, mb));
            let v = trace_product(rho.matrix(), &o);
            values[r.re] = v.re;
            if let Some(im) = r.im {
                values[im] = v.im;
            }
        }
        Ok(values)
    }
}

/// Builds words, variables and cell tables for `scenario` at `level`.
pub fn build_structure(scenario: &Scenario, level: usize) -> Result<MomentStructure> {
    build_structure_with(scenario, level, false)
}

pub fn build_structure_with(scenario: &Scenario, level: usize, real_moments: bool) -> Result<MomentStructure> {
    scenario.validate()?;
    if level == 0 || level > MAX_LEVEL {
        return Err(Error::OutOfRange {
            name: "level",
            value: level as f64,
            min: 1.0,
            max: MAX_LEVEL as f64,
        });
    }
    let alice_words = generate_words(&scenario.alice, Party::A, level);
    let bob_words = generate_words(&scenario.bob, Party::B, level);
    let (na, nb) = (alice_words.len(), bob_words.len());
    let n = na * nb;
    let mut s = MomentStructure {
        level,
        scenario: scenario.clone(),
        alice_words,
        bob_words,
        real_moments,
        variable_map: BTreeMap::new(),
        variables: Vec::new(),
        behavior_slots: BTreeMap::new(),
        alice_slots: BTreeMap::new(),
        bob_slots: BTreeMap::new(),
        entries: vec![Entry::Zero; n * n],
        pt_entries: vec![Entry::Zero; n * n],
    };
    for r in 0..n {
        let (i, k) = (r / nb, r % nb);
        for c in 0..n {
            let (j, l) = (c / nb, c % nb);
            let (si, sj) = (&s.alice_words[i], &s.alice_words[j]);
            let key = product_key(si, sj, &s.bob_words[k], &s.bob_words[l]);
            let key_pt = product_key(si, sj, &s.bob_words[l], &s.bob_words[k]);
            let e = s.entry_for(key);
            let e_pt = s.entry_for(key_pt);
            s.entries[r * n + c] = e;
            s.pt_entries[r * n + c] = e_pt;
        }
    }
    for (x, &ka) in scenario.alice.iter().enumerate() {
        for a in 0..ka - 1 {
            let v = s.slot(&s.key_of(Some((x, a)), None));
            s.alice_slots.insert((a, x), v);
        }
    }
    for (y, &kb) in scenario.bob.iter().enumerate() {
        for b in 0..kb - 1 {
            let v = s.slot(&s.key_of(None, Some((y, b))));
            s.bob_slots.insert((b, y), v);
        }
    }
    for (x, &ka) in scenario.alice.iter().enumerate() {
        for (y, &kb) in scenario.bob.iter().enumerate() {
            for a in 0..ka - 1 {
                for b in 0..kb - 1 {
                    let v = s.slot(&s.key_of(Some((x, a)), Some((y, b))));
                    s.behavior_slots.insert((a, b, x, y), v);
                }
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{behavior, build_analytic_measurements};
    use crate::linalg;
    use crate::state::build_counterexample_state;

    fn letter(party: Party, setting: usize, outcome: usize) -> Letter {
        Letter { party, setting, outcome }
    }

    #[test]
    fn canonicalization_rules() {
        let a00 = letter(Party::A, 0, 0);
        let w = Word { party: Party::A, letters: vec![a00, a00] };
        assert_eq!(canonicalize(&w).unwrap().letters, vec![a00]);
        let w = Word {
            party: Party::B,
            letters: vec![letter(Party::B, 0, 0), letter(Party::B, 0, 1)],
        };
        assert!(canonicalize(&w).is_none());
        // A B B A → A B A
        let b = letter(Party::A, 1, 0);
        let w = Word { party: Party::A, letters: vec![a00, b, b, a00] };
        assert_eq!(canonicalize(&w).unwrap().letters, vec![a00, b, a00]);
    }

    #[test]
    fn word_counts() {
        let s = Scenario::counterexample();
        let l1 = build_structure(&s, 1).unwrap();
        assert_eq!((l1.alice_words.len(), l1.bob_words.len(), l1.matrix_size()), (4, 4, 16));
        assert_eq!(generate_words(&s.alice, Party::A, 2).len(), 10);
        assert_eq!(generate_words(&s.bob, Party::B, 2).len(), 8);
        assert_eq!(generate_words(&s.alice, Party::A, 3).len(), 22);
        assert_eq!(generate_words(&s.bob, Party::B, 3).len(), 14);
    }

    #[test]
    fn generated_words_are_canonical_and_distinct() {
        let s = Scenario::counterexample();
        let words = generate_words(&s.bob, Party::B, 3);
        for w in &words {
            assert_eq!(canonicalize(w).as_ref(), Some(w));
        }
        let mut sorted = words.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), words.len());
    }

    #[test]
    fn normalization_and_slots() {
        let st = build_structure(&Scenario::counterexample(), 1).unwrap();
        assert_eq!(st.entry(0, 0, false), Entry::One);
        assert_eq!(st.alice_slots.len(), 3);
        assert_eq!(st.bob_slots.len(), 3);
        assert_eq!(st.behavior_slots.len(), 3 * 3);
    }

    #[test]
    fn assignment_matrix_is_hermitian_and_psd() {
        let rho = build_counterexample_state();
        let (ma, mb) = build_analytic_measurements();
        for level in 1..=2 {
            let st = build_structure(&Scenario::counterexample(), level).unwrap();
            let v = st.assignment(&rho, &ma, &mb).unwrap();
            for pt in [false, true] {
                let g = st.moment_matrix(&v, 1.0, pt);
                assert!(g.hermiticity_deviation() <= 1e-12);
                assert!(linalg::min_eigenvalue(&g).unwrap() >= -1e-10, "level {level} pt {pt}");
            }
        }
    }

    #[test]
    fn slots_reproduce_behavior() {
        let rho = build_counterexample_state();
        let (ma, mb) = build_analytic_measurements();
        let beh = behavior(&rho, &ma, &mb).unwrap();
        let st = build_structure(&Scenario::counterexample(), 1).unwrap();
        let v = st.assignment(&rho, &ma, &mb).unwrap();
        for (&(a, b, x, y), &id) in &st.behavior_slots {
            assert!((v[id] - beh.p(a, b, x, y)).abs() <= 1e-10);
        }
        for (&(a, x), &id) in &st.alice_slots {
            assert!((v[id] - beh.alice_marginal(a, x)).abs() <= 1e-10);
        }
        for (&(b, y), &id) in &st.bob_slots {
            assert!((v[id] - beh.bob_marginal(b, y)).abs() <= 1e-10);
        }
    }

    #[test]
    fn real_restriction_drops_imaginary_parts() {
        let s = Scenario::counterexample();
        let full = build_structure(&s, 2).unwrap();
        let real = build_structure_with(&s, 2, true).unwrap();
        assert_eq!(full.variable_map.len(), real.variable_map.len());
        assert!(real.num_variables() < full.num_variables());
        assert!(real.variables.iter().all(|(_, im)| !im));
    }

    #[test]
    fn level_bounds_checked() {
        assert!(build_structure(&Scenario::counterexample(), 0).is_err());
        assert!(build_structure(&Scenario::counterexample(), MAX_LEVEL + 1).is_err());
    }
}
