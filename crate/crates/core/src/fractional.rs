//! Linear stability conditions on random matchings: fractional stability
//! (one inequality per pair) and fractional strong stability (two per pair).

use crate::error::Result;
use crate::instance::Instance;
use crate::randmatch::{self, RandomMatching};
use crate::rational::{self, Rat};

/// Which inequality failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    /// `Σ_{o'≿_i o} p(i,o') + Σ_{j≿_o i} p(j,o) − p(i,o) ≥ 1`.
    Weak,
    /// Strictly better items, strictly better agents, and items tied with `o`.
    StrongAgentTie,
    /// Strictly better items, strictly better agents, and agents tied with `i`.
    StrongItemTie,
}

impl Condition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Weak => "weak",
            Condition::StrongAgentTie => "strong-1",
            Condition::StrongItemTie => "strong-2",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractionalViolation {
    pub agent: String,
    pub item: String,
    pub lhs: Rat,
    pub condition: Condition,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractionalReport {
    pub satisfied: bool,
    /// Sorted by (agent, item, condition).
    pub violations: Vec<FractionalViolation>,
}

impl FractionalReport {
    fn from_violations(mut violations: Vec<FractionalViolation>) -> Self {
        violations.sort_by(|a, b| (&a.agent, &a.item, a.condition).cmp(&(&b.agent, &b.item, b.condition)));
        FractionalReport { satisfied: violations.is_empty(), violations }
    }

    pub fn violated_at(&self, agent: &str, item: &str) -> Option<&FractionalViolation> {
        self.violations.iter().find(|v| v.agent == agent && v.item == item)
    }
}

/// Tier-cumulative sums: `agent_cum[i][t]` is agent `i`'s mass on items of
/// tier `t` or better, `item_cum[o][s]` the mass item `o` gives to agents of
/// priority tier `s` or better.
struct Prefix {
    agent_cum: Vec<Vec<Rat>>,
    item_cum: Vec<Vec<Rat>>,
}

impl Prefix {
    fn new(inst: &Instance, p: &RandomMatching) -> Self {
        let n = p.n();
        let cumulate = |tiers: usize, rank: &dyn Fn(usize) -> u32, val: &dyn Fn(usize) -> Rat| {
            let mut by_tier = vec![rational::zero(); tiers];
            for k in 0..n {
                by_tier[rank(k) as usize] += val(k);
            }
            let mut acc = rational::zero();
            by_tier
                .into_iter()
                .map(|v| {
                    acc += v;
                    acc.clone()
                })
                .collect::<Vec<Rat>>()
        };
        let agent_cum =
            (0..n).map(|i| cumulate(inst.pref_tiers(i), &|o| inst.pref_rank(i, o), &|o| p.get(i, o).clone())).collect();
        let item_cum =
            (0..n).map(|o| cumulate(inst.prio_tiers(o), &|i| inst.prio_rank(o, i), &|i| p.get(i, o).clone())).collect();
        Prefix { agent_cum, item_cum }
    }

    /// Mass strictly above tier `t` (0 for the top tier).
    fn strictly(cum: &[Rat], t: usize) -> Rat {
        if t == 0 {
            rational::zero()
        } else {
            cum[t - 1].clone()
        }
    }
}

fn violation(inst: &Instance, i: usize, o: usize, lhs: Rat, condition: Condition) -> FractionalViolation {
    FractionalViolation { agent: inst.agents()[i].clone(), item: inst.items()[o].clone(), lhs, condition }
}

/// Evaluates the weak-stability inequality at all `n²` pairs in `O(n²)`.
pub fn check_fractional_stability(inst: &Instance, p: &RandomMatching) -> Result<FractionalReport> {
    randmatch::require_valid(inst, p)?;
    let pre = Prefix::new(inst, p);
    let one = rational::one();
    let n = p.n();
    let mut out = Vec::new();
    for i in 0..n {
        for o in 0..n {
            let t = inst.pref_rank(i, o) as usize;
            let s = inst.prio_rank(o, i) as usize;
            let lhs = &pre.agent_cum[i][t] + &pre.item_cum[o][s] - p.get(i, o);
            if lhs < one {
                out.push(violation(inst, i, o, lhs, Condition::Weak));
            }
        }
    }
    Ok(FractionalReport::from_violations(out))
}

/// Evaluates both strong-stability inequalities at all pairs.
pub fn check_fractional_strong_stability(inst: &Instance, p: &RandomMatching) -> Result<FractionalReport> {
    randmatch::require_valid(inst, p)?;
    let pre = Prefix::new(inst, p);
    let one = rational::one();
    let n = p.n();
    let mut out = Vec::new();
    for i in 0..n {
        for o in 0..n {
            let t = inst.pref_rank(i, o) as usize;
            let s = inst.prio_rank(o, i) as usize;
            let first = &pre.agent_cum[i][t] + Prefix::strictly(&pre.item_cum[o], s);
            if first < one {
                out.push(violation(inst, i, o, first, Condition::StrongAgentTie));
            }
            let second = Prefix::strictly(&pre.agent_cum[i], t) + &pre.item_cum[o][s];
            if second < one {
                out.push(violation(inst, i, o, second, Condition::StrongItemTie));
            }
        }
    }
    Ok(FractionalReport::from_violations(out))
}

/// Direct double-loop evaluation of the same inequalities; reference
/// implementation for cross-checks.
pub fn check_fractional_naive(inst: &Instance, p: &RandomMatching, strong: bool) -> Result<FractionalReport> {
    randmatch::require_valid(inst, p)?;
    let n = p.n();
    let one = rational::one();
    let mut out = Vec::new();
    for i in 0..n {
        for o in 0..n {
            let mut better_items = rational::zero();
            let mut tied_items = rational::zero();
            for q in 0..n {
                if inst.prefers(i, q, o) {
                    better_items += p.get(i, q);
                } else if !inst.prefers(i, o, q) {
                    tied_items += p.get(i, q);
                }
            }
            let mut better_agents = rational::zero();
            let mut tied_agents = rational::zero();
            for j in 0..n {
                if inst.prioritizes(o, j, i) {
                    better_agents += p.get(j, o);
                } else if !inst.prioritizes(o, i, j) {
                    tied_agents += p.get(j, o);
                }
            }
            if strong {
                let first = &better_items + &better_agents + &tied_items;
                if first < one {
                    out.push(violation(inst, i, o, first, Condition::StrongAgentTie));
                }
                let second = &better_items + &better_agents + &tied_agents;
                if second < one {
                    out.push(violation(inst, i, o, second, Condition::StrongItemTie));
                }
            } else {
                let lhs = better_items + tied_items + better_agents + tied_agents - p.get(i, o);
                if lhs < one {
                    out.push(violation(inst, i, o, lhs, Condition::Weak));
                }
            }
        }
    }
    Ok(FractionalReport::from_violations(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{fixtures, gen_example1, gen_random_bistochastic, gen_random_instance, TieModel};
    use crate::rational::rat;

    #[test]
    fn example1_improved_is_fractionally_stable() {
        let ex = gen_example1();
        assert!(check_fractional_stability(&ex.instance, &ex.p_improved).unwrap().satisfied);
    }

    #[test]
    fn agree2_half_half_fails_at_a_x() {
        let inst = fixtures::agree2();
        let r = check_fractional_stability(&inst, &fixtures::half_half(&inst)).unwrap();
        let v = r.violated_at("a", "x").unwrap();
        assert_eq!(v.lhs, rat(1, 2));
        assert_eq!(r.violations.len(), 1);
    }

    #[test]
    fn stable_deterministic_matchings_satisfy_the_inequality() {
        let ex = gen_example1();
        for m in [&ex.m1, &ex.m2] {
            let p = m.to_matrix(ex.instance.agents(), ex.instance.items());
            assert!(check_fractional_stability(&ex.instance, &p).unwrap().satisfied);
        }
    }

    #[test]
    fn opp2_mix_is_fractionally_strongly_stable() {
        let inst = fixtures::opp2();
        let r = check_fractional_strong_stability(&inst, &fixtures::half_half(&inst)).unwrap();
        assert!(r.satisfied);
    }

    #[test]
    fn example1_improved_fails_strong_at_b_o1() {
        let ex = gen_example1();
        let r = check_fractional_strong_stability(&ex.instance, &ex.p_improved).unwrap();
        assert!(!r.satisfied);
        // b ranks o1 first and o1 ties a with b, so only the agent-tie sum
        // p(b,o1) counts for the first condition; the second sees p(a,o1) too
        let at_b_o1: Vec<_> = r.violations.iter().filter(|v| v.agent == "b" && v.item == "o1").collect();
        assert_eq!(at_b_o1.len(), 1);
        assert_eq!(at_b_o1[0].condition, Condition::StrongAgentTie);
        assert_eq!(at_b_o1[0].lhs, rat(1, 2));
    }

    #[test]
    fn prefix_sums_match_naive_loops() {
        for s in 0..40 {
            let model = TieModel::ALL[(s % 3) as usize];
            let inst = gen_random_instance(4, model, 1.0, s);
            let p = gen_random_bistochastic(&inst, 3, s + 100).unwrap();
            assert_eq!(
                check_fractional_stability(&inst, &p).unwrap(),
                check_fractional_naive(&inst, &p, false).unwrap()
            );
            assert_eq!(
                check_fractional_strong_stability(&inst, &p).unwrap(),
                check_fractional_naive(&inst, &p, true).unwrap()
            );
        }
    }
}
