use serde::{Deserialize, Serialize};

use super::{Behavior, Scenario};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointTerm {
    pub a: usize,
    pub b: usize,
    pub x: usize,
    pub y: usize,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AliceTerm {
    pub a: usize,
    pub x: usize,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BobTerm {
    pub b: usize,
    pub y: usize,
    pub c: f64,
}

/// Affine functional of a behavior with a claimed local bound.
///
/// Marginal coefficients are kept apart from joint ones so that Bell
/// operators carry explicit identity factors. Repeated index tuples add up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellFunctional {
    pub scenario: Scenario,
    #[serde(default)]
    pub joint: Vec<JointTerm>,
    #[serde(default)]
    pub alice_marginal: Vec<AliceTerm>,
    #[serde(default)]
    pub bob_marginal: Vec<BobTerm>,
    pub local_bound: f64,
}

impl BellFunctional {
    /// Validates indices and coefficients.
    pub fn new(
        scenario: Scenario,
        joint: Vec<JointTerm>,
        alice_marginal: Vec<AliceTerm>,
        bob_marginal: Vec<BobTerm>,
        local_bound: f64,
    ) -> Result<Self> {
        let f = Self {
            scenario,
            joint,
            alice_marginal,
            bob_marginal,
            local_bound,
        };
        f.validate()?;
        Ok(f)
    }

    /// The three-setting / two-setting inequality with local bound 0:
    ///
    /// `I = -pA(0|2) - 2 pB(0|1) - p(01|00) - p(00|10) + p(00|20) + p(01|20)
    ///      + p(00|01) + p(00|11) + p(00|21) <= 0`
    pub fn builtin_i() -> Self {
        let j = |a, b, x, y, c| JointTerm { a, b, x, y, c };
        Self {
            scenario: Scenario::counterexample(),
            joint: vec![
                j(0, 1, 0, 0, -1.0),
                j(0, 0, 1, 0, -1.0),
                j(0, 0, 2, 0, 1.0),
                j(0, 1, 2, 0, 1.0),
                j(0, 0, 0, 1, 1.0),
                j(0, 0, 1, 1, 1.0),
                j(0, 0, 2, 1, 1.0),
            ],
            alice_marginal: vec![AliceTerm { a: 0, x: 2, c: -1.0 }],
            bob_marginal: vec![BobTerm { b: 0, y: 1, c: -2.0 }],
            local_bound: 0.0,
        }
    }

    /// CHSH in probability form: `sum_xy (-1)^{xy} E_xy <= 2`.
    pub fn chsh() -> Self {
        let mut joint = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        let sign = if (x * y + a + b) % 2 == 0 { 1.0 } else { -1.0 };
                        joint.push(JointTerm { a, b, x, y, c: sign });
                    }
                }
            }
        }
        Self {
            scenario: Scenario::chsh(),
            joint,
            alice_marginal: Vec::new(),
            bob_marginal: Vec::new(),
            local_bound: 2.0,
        }
    }

    /// The functional with no terms.
    pub fn zero(scenario: Scenario) -> Self {
        Self {
            scenario,
            joint: Vec::new(),
            alice_marginal: Vec::new(),
            bob_marginal: Vec::new(),
            local_bound: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        let s = &self.scenario;
        let bad = |what: String| Err(Error::Invalid(format!("functional term out of range: {what}")));
        for t in &self.joint {
            if t.x >= s.alice.len() || t.y >= s.bob.len() || t.a >= s.alice[t.x] || t.b >= s.bob[t.y] {
                return bad(format!("joint (a={}, b={}, x={}, y={})", t.a, t.b, t.x, t.y));
            }
        }
        for t in &self.alice_marginal {
            if t.x >= s.alice.len() || t.a >= s.alice[t.x] {
                return bad(format!("alice marginal (a={}, x={})", t.a, t.x));
            }
        }
        for t in &self.bob_marginal {
            if t.y >= s.bob.len() || t.b >= s.bob[t.y] {
                return bad(format!("bob marginal (b={}, y={})", t.b, t.y));
            }
        }
        let coeffs = self
            .joint
            .iter()
            .map(|t| t.c)
            .chain(self.alice_marginal.iter().map(|t| t.c))
            .chain(self.bob_marginal.iter().map(|t| t.c))
            .chain(std::iter::once(self.local_bound));
        for c in coeffs {
            if !c.is_finite() {
                return Err(Error::Invalid("non-finite coefficient".into()));
            }
        }
        Ok(())
    }

    /// Count of nonzero coefficients (after merging repeated indices).
    pub fn nonzero_terms(&self) -> usize {
        use std::collections::BTreeMap;
        let mut joint: BTreeMap<(usize, usize, usize, usize), f64> = BTreeMap::new();
        for t in &self.joint {
            *joint.entry((t.a, t.b, t.x, t.y)).or_default() += t.c;
        }
        let mut am: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for t in &self.alice_marginal {
            *am.entry((t.a, t.x)).or_default() += t.c;
        }
        let mut bm: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for t in &self.bob_marginal {
            *bm.entry((t.b, t.y)).or_default() += t.c;
        }
        joint.values().chain(am.values()).chain(bm.values()).filter(|c| **c != 0.0).count()
    }

    pub fn is_zero(&self) -> bool {
        self.nonzero_terms() == 0
    }

    /// All coefficients as integers, when they are all integral.
    pub(crate) fn integer_coefficients(&self) -> Option<(Vec<i64>, Vec<i64>, Vec<i64>)> {
        const LIMIT: f64 = (1u64 << 40) as f64;
        let conv = |c: f64| (c.fract() == 0.0 && c.abs() < LIMIT).then_some(c as i64);
        Some((
            self.joint.iter().map(|t| conv(t.c)).collect::<Option<_>>()?,
            self.alice_marginal.iter().map(|t| conv(t.c)).collect::<Option<_>>()?,
            self.bob_marginal.iter().map(|t| conv(t.c)).collect::<Option<_>>()?,
        ))
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text)?;
        f.validate()?;
        Ok(f)
    }

    /// Shortest round-trip float form, so coefficients survive bit-exactly.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("functional serializes")
    }
}

/// Affine value of `f` on `beh`; marginals follow the `y = 0` / `x = 0`
/// completion convention of [`Behavior`].
pub fn evaluate(f: &BellFunctional, beh: &Behavior) -> Result<f64> {
    if &f.scenario != beh.scenario() {
        return Err(Error::Scenario(format!(
            "functional scenario {:?} vs behavior scenario {:?}",
            f.scenario,
            beh.scenario()
        )));
    }
    let joint: f64 = f.joint.iter().map(|t| t.c * beh.p(t.a, t.b, t.x, t.y)).sum();
    let am: f64 = f.alice_marginal.iter().map(|t| t.c * beh.alice_marginal(t.a, t.x)).sum();
    let bm: f64 = f.bob_marginal.iter().map(|t| t.c * beh.bob_marginal(t.b, t.y)).sum();
    Ok(joint + am + bm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::DeterministicStrategy;

    #[test]
    fn builtin_shape() {
        let f = BellFunctional::builtin_i();
        assert_eq!(f.nonzero_terms(), 9);
        assert_eq!(f.local_bound, 0.0);
        f.validate().unwrap();
    }

    #[test]
    fn uniform_value() {
        // Hand evaluation: -1/2 - 2/2 - 1/6 - 1/6 + 1/6 + 1/6 + 1/4 + 1/4 + 1/4
        let f = BellFunctional::builtin_i();
        let v = evaluate(&f, &Behavior::uniform(&f.scenario)).unwrap();
        assert!((v - (-0.75)).abs() <= 1e-15, "{v}");
    }

    #[test]
    fn single_deterministic_point() {
        let f = BellFunctional::builtin_i();
        let s = DeterministicStrategy {
            alice: vec![0, 0, 0],
            bob: vec![2, 1],
        };
        let v = evaluate(&f, &Behavior::deterministic(&f.scenario, &s)).unwrap();
        assert_eq!(v, -1.0);
    }

    #[test]
    fn scenario_mismatch() {
        let f = BellFunctional::builtin_i();
        let beh = Behavior::uniform(&Scenario::chsh());
        assert!(matches!(evaluate(&f, &beh), Err(Error::Scenario(_))));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let f = BellFunctional::builtin_i();
        let text = f.to_json();
        assert!(text.starts_with(r#"{"scenario":{"alice":[2,2,2],"bob":[3,2]},"joint":[{"a":0,"b":1,"x":0,"y":0,"c":-1.0}"#), "{text}");
        assert_eq!(BellFunctional::parse_json(&text).unwrap(), f);
        let g = BellFunctional::chsh();
        assert_eq!(BellFunctional::parse_json(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn json_rejects_bad_terms() {
        let bad = r#"{"scenario":{"alice":[2],"bob":[2]},"joint":[{"a":2,"b":0,"x":0,"y":0,"c":1.0}],"local_bound":0.0}"#;
        assert!(BellFunctional::parse_json(bad).is_err());
        let missing = r#"{"scenario":{"alice":[2],"bob":[2]}}"#;
        assert!(BellFunctional::parse_json(missing).is_err());
        let unknown = r#"{"scenario":{"alice":[2],"bob":[2]},"local_bound":0.0,"extra":1}"#;
        assert!(BellFunctional::parse_json(unknown).is_err());
    }
}
