//! Exact local bound by enumerating deterministic strategies.
//!
//! For a fixed Alice assignment the functional splits into independent
//! per-setting terms for Bob, so the search costs
//! `|Alice strategies| * sum_y |outcomes_y|` instead of the full product.

use serde::{Deserialize, Serialize};

use super::BellFunctional;
use crate::error::{Error, Result};

/// Outcome assigned to every setting, per party.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalBound {
    pub value: f64,
    /// Integer arithmetic was used (all coefficients integral).
    pub exact: bool,
    /// Total number of maximizing strategies.
    pub maximizer_count: u128,
    /// Maximizers in lexicographic `(alice, bob)` order, truncated to the
    /// listing limit.
    pub maximizers: Vec<DeterministicStrategy>,
}

/// Per-party strategy-count ceiling.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;
/// Longest maximizer list returned.
pub const MAXIMIZER_LIST_LIMIT: usize = 100_000;

trait Score: Copy + PartialOrd + std::ops::Add<Output = Self> + std::ops::AddAssign {
    const ZERO: Self;
    fn ties(a: Self, b: Self) -> bool;
    fn to_f64(self) -> f64;
}

impl Score for i64 {
    const ZERO: Self = 0;
    fn ties(a: Self, b: Self) -> bool {
        a == b
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Score for f64 {
    const ZERO: Self = 0.0;
    fn ties(a: Self, b: Self) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
    }
    fn to_f64(self) -> f64 {
        self
    }
}

fn strategy_count(outcomes: &[usize]) -> u128 {
    outcomes.iter().try_fold(1u128, |acc, &k| acc.checked_mul(k as u128)).unwrap_or(u128::MAX)
}

/// Lexicographic odometer; the first setting is most significant.
fn advance(assign: &mut [usize], outcomes: &[usize]) -> bool {
    for i in (0..assign.len()).rev() {
        assign[i] += 1;
        if assign[i] < outcomes[i] {
            return true;
        }
        assign[i] = 0;
    }
    false
}

pub fn local_bound(f: &BellFunctional) -> Result<LocalBound> {
    f.validate()?;
    for outcomes in [&f.scenario.alice, &f.scenario.bob] {
        let count = strategy_count(outcomes);
        if count > ENUMERATION_LIMIT {
            return Err(Error::Budget {
                count,
                limit: ENUMERATION_LIMIT,
            });
        }
    }
    match f.integer_coefficients() {
        Some((j, a, b)) => Ok(search(f, &j, &a, &b, true)),
        None => {
            let j: Vec<f64> = f.joint.iter().map(|t| t.c).collect();
            let a: Vec<f64> = f.alice_marginal.iter().map(|t| t.c).collect();
            let b: Vec<f64> = f.bob_marginal.iter().map(|t| t.c).collect();
            Ok(search(f, &j, &a, &b, false))
        }
    }
}

fn search<T: Score>(f: &BellFunctional, joint: &[T], am: &[T], bm: &[T], exact: bool) -> LocalBound {
    let s = &f.scenario;
    let mut alice = vec![0usize; s.alice.len()];
    let mut best: Option<T> = None;
    // (alice assignment, per-y argmax outcome lists)
    let mut winners: Vec<(Vec<usize>, Vec<Vec<usize>>)> = Vec::new();
    let mut bob_scores: Vec<Vec<T>> = s.bob.iter().map(|&k| vec![T::ZERO; k]).collect();

    loop {
        let mut total = T::ZERO;
        for (t, &c) in f.alice_marginal.iter().zip(am) {
            if alice[t.x] == t.a {
                total += c;
            }
        }
        for scores in bob_scores.iter_mut() {
            scores.iter_mut().for_each(|v| *v = T::ZERO);
        }
        for (t, &c) in f.bob_marginal.iter().zip(bm) {
            bob_scores[t.y][t.b] += c;
        }
        for (t, &c) in f.joint.iter().zip(joint) {
            if alice[t.x] == t.a {
                bob_scores[t.y][t.b] += c;
            }
        }
        let mut argmax = Vec::with_capacity(s.bob.len());
        for scores in &bob_scores {
            let mut m = scores[0];
            for &v in &scores[1..] {
                if v > m {
                    m = v;
                }
            }
            total += m;
            argmax.push((0..scores.len()).filter(|&b| T::ties(scores[b], m)).collect::<Vec<_>>());
        }

        match best {
            Some(b) if T::ties(total, b) => winners.push((alice.clone(), argmax)),
            Some(b) if total < b => {}
            _ => {
                best = Some(total);
                winners.clear();
                winners.push((alice.clone(), argmax));
            }
        }

        if !advance(&mut alice, &s.alice) {
            break;
        }
    }

    let mut maximizer_count: u128 = 0;
    let mut maximizers = Vec::new();
    for (alice, argmax) in &winners {
        let n: u128 = argmax.iter().map(|v| v.len() as u128).product();
        maximizer_count = maximizer_count.saturating_add(n);
        if maximizers.len() >= MAXIMIZER_LIST_LIMIT {
            continue;
        }
        let lens: Vec<usize> = argmax.iter().map(Vec::len).collect();
        let mut pick = vec![0usize; argmax.len()];
        loop {
            maximizers.push(DeterministicStrategy {
                alice: alice.clone(),
                bob: pick.iter().zip(argmax).map(|(&i, opts)| opts[i]).collect(),
            });
            if maximizers.len() >= MAXIMIZER_LIST_LIMIT || !advance(&mut pick, &lens) {
                break;
            }
        }
    }

    LocalBound {
        value: best.map_or(0.0, Score::to_f64),
        exact,
        maximizer_count,
        maximizers,
    }
}
