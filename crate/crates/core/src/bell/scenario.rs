use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome counts per measurement setting for each party.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
}

impl Scenario {
    pub fn new(alice: Vec<usize>, bob: Vec<usize>) -> Result<Self> {
        let s = Self { alice, bob };
        s.validate()?;
        Ok(s)
    }

    /// Three binary settings for Alice; Bob has one ternary and one binary setting.
    pub fn counterexample() -> Self {
        Self {
            alice: vec![2, 2, 2],
            bob: vec![3, 2],
        }
    }

    pub fn chsh() -> Self {
        Self {
            alice: vec![2, 2],
            bob: vec![2, 2],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alice.is_empty() || self.bob.is_empty() {
            return Err(Error::Scenario("each party needs at least one setting".into()));
        }
        if let Some(k) = self.alice.iter().chain(&self.bob).find(|&&k| k < 2) {
            return Err(Error::Scenario(format!("outcome count {k} < 2")));
        }
        // Keeps behavior tables addressable; far above anything the tools run.
        let cells: usize = self
            .alice
            .iter()
            .flat_map(|ka| self.bob.iter().map(move |kb| ka.saturating_mul(*kb)))
            .fold(0usize, |acc, v| acc.saturating_add(v));
        if cells > 1 << 24 {
            return Err(Error::Scenario(format!("scenario too large ({cells} probabilities)")));
        }
        Ok(())
    }

    pub fn settings(&self, party: crate::Party) -> &[usize] {
        match party {
            crate::Party::A => &self.alice,
            crate::Party::B => &self.bob,
        }
    }
}

/// Table of conditional probabilities `p(ab|xy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Behavior {
    scenario: Scenario,
    offsets: Vec<Vec<usize>>,
    p: Vec<f64>,
}

impl Behavior {
    pub fn from_fn(scenario: &Scenario, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut offsets = Vec::with_capacity(scenario.alice.len());
        let mut p = Vec::new();
        for (x, &ka) in scenario.alice.iter().enumerate() {
            let mut row = Vec::with_capacity(scenario.bob.len());
            for (y, &kb) in scenario.bob.iter().enumerate() {
                row.push(p.len());
                for a in 0..ka {
                    for b in 0..kb {
                        p.push(f(a, b, x, y));
                    }
                }
            }
            offsets.push(row);
        }
        Self {
            scenario: scenario.clone(),
            offsets,
            p,
        }
    }

    /// `p(ab|xy) = 1 / (N_a N_b)`
    pub fn uniform(scenario: &Scenario) -> Self {
        Self::from_fn(scenario, |_, _, x, y| 1.0 / (scenario.alice[x] * scenario.bob[y]) as f64)
    }

    pub fn deterministic(scenario: &Scenario, strategy: &super::DeterministicStrategy) -> Self {
        Self::from_fn(scenario, |a, b, x, y| {
            if strategy.alice[x] == a && strategy.bob[y] == b {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    #[inline]
    fn index(&self, a: usize, b: usize, x: usize, y: usize) -> usize {
        self.offsets[x][y] + a * self.scenario.bob[y] + b
    }

    #[inline]
    pub fn p(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.p[self.index(a, b, x, y)]
    }

    pub fn set(&mut self, a: usize, b: usize, x: usize, y: usize, value: f64) {
        let i = self.index(a, b, x, y);
        self.p[i] = value;
    }

    /// `p_A(a|x)`, completed from Bob's setting `y = 0`.
    pub fn alice_marginal(&self, a: usize, x: usize) -> f64 {
        (0..self.scenario.bob[0]).map(|b| self.p(a, b, x, 0)).sum()
    }

    /// `p_B(b|y)`, completed from Alice's setting `x = 0`.
    pub fn bob_marginal(&self, b: usize, y: usize) -> f64 {
        (0..self.scenario.alice[0]).map(|a| self.p(a, b, 0, y)).sum()
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    /// `t * self + (1 - t) * other`
    pub fn mix(&self, t: f64, other: &Behavior) -> Result<Behavior> {
        if self.scenario != other.scenario {
            return Err(Error::Scenario("cannot mix behaviors of different scenarios".into()));
        }
        let mut out = self.clone();
        for (v, w) in out.p.iter_mut().zip(&other.p) {
            *v = t * *v + (1.0 - t) * w;
        }
        Ok(out)
    }

    /// Largest violation of normalization (per setting pair).
    pub fn normalization_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for (x, &ka) in self.scenario.alice.iter().enumerate() {
            for (y, &kb) in self.scenario.bob.iter().enumerate() {
                let s: f64 = (0..ka).flat_map(|a| (0..kb).map(move |b| (a, b))).map(|(a, b)| self.p(a, b, x, y)).sum();
                dev = dev.max((s - 1.0).abs());
            }
        }
        dev
    }

    pub fn min_probability(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest dependence of a party's marginal on the other party's setting.
    pub fn signaling_deviation(&self) -> f64 {
        let s = &self.scenario;
        let mut dev: f64 = 0.0;
        for (x, &ka) in s.alice.iter().enumerate() {
            for a in 0..ka {
                let reference: f64 = (0..s.bob[0]).map(|b| self.p(a, b, x, 0)).sum();
                for (y, &kb) in s.bob.iter().enumerate().skip(1) {
                    let m: f64 = (0..kb).map(|b| self.p(a, b, x, y)).sum();
                    dev = dev.max((m - reference).abs());
                }
            }
        }
        for (y, &kb) in s.bob.iter().enumerate() {
            for b in 0..kb {
                let reference: f64 = (0..s.alice[0]).map(|a| self.p(a, b, 0, y)).sum();
                for (x, &ka) in s.alice.iter().enumerate().skip(1) {
                    let m: f64 = (0..ka).map(|a| self.p(a, b, x, y)).sum();
                    dev = dev.max((m - reference).abs());
                }
            }
        }
        dev
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_scenarios() {
        assert!(Scenario::new(vec![2, 1], vec![2]).is_err());
        assert!(Scenario::new(vec![], vec![2]).is_err());
        assert!(Scenario::new(vec![2, 2, 2], vec![3, 2]).is_ok());
    }

    #[test]
    fn uniform_is_normalized_and_nonsignaling() {
        let b = Behavior::uniform(&Scenario::counterexample());
        assert!(b.normalization_deviation() <= 1e-15);
        assert!(b.signaling_deviation() <= 1e-15);
        assert!((b.alice_marginal(0, 2) - 0.5).abs() <= 1e-15);
        assert!((b.bob_marginal(2, 0) - 1.0 / 3.0).abs() <= 1e-15);
    }

    #[test]
    fn indexing_is_consistent() {
        let s = Scenario::counterexample();
        let b = Behavior::from_fn(&s, |a, b, x, y| (1000 * a + 100 * b + 10 * x + y) as f64);
        for x in 0..3 {
            for y in 0..2 {
                for a in 0..2 {
                    for bb in 0..s.bob[y] {
                        assert_eq!(b.p(a, bb, x, y), (1000 * a + 100 * bb + 10 * x + y) as f64);
                    }
                }
            }
        }
        assert_eq!(b.values().len(), 3 * (2 * 3 + 2 * 2));
    }
}
