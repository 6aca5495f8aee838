//! Ex-post strong stability: the interval decomposition of a fractionally
//! strongly stable matrix into strongly stable matchings, with an exact LP
//! fallback over enumerated strongly stable matchings.

use crate::bipartite;
use crate::error::Result;
use crate::expost::{self, DEFAULT_CAP};
use crate::fractional::check_fractional_strong_stability;
use crate::instance::Instance;
use crate::lp;
use crate::matching::{self, DeterministicMatching};
use crate::randmatch::{self, Decomposition, RandomMatching};
use crate::rational::{self, Rat};

/// A half-open subinterval `(start, end]` of `(0, 1]` owned by a counterpart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub counterpart: usize,
    pub start: Rat,
    pub end: Rat,
}

impl Segment {
    fn contains(&self, u: &Rat) -> bool {
        self.start < *u && *u <= self.end
    }
}

/// Every agent's unit interval cut into its support items by decreasing
/// preference, every item's unit interval cut into its support agents by
/// increasing priority. Ties are laid out by name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalLayout {
    pub agent_side: Vec<Vec<Segment>>,
    pub item_side: Vec<Vec<Segment>>,
    /// `0 = x_0 < x_1 < … < x_s = 1`.
    pub breakpoints: Vec<Rat>,
}

fn lay_out(order: Vec<usize>, mass: impl Fn(usize) -> Rat) -> Vec<Segment> {
    let mut at = rational::zero();
    order
        .into_iter()
        .map(|k| {
            let start = at.clone();
            at += mass(k);
            Segment { counterpart: k, start, end: at.clone() }
        })
        .collect()
}

impl IntervalLayout {
    pub fn new(inst: &Instance, p: &RandomMatching) -> Self {
        let n = p.n();
        let by_name = |a: &String, b: &String| a.cmp(b);
        let agent_side: Vec<Vec<Segment>> = (0..n)
            .map(|i| {
                let mut order: Vec<usize> = (0..n).filter(|&o| p.in_support(i, o)).collect();
                order.sort_by(|&x, &y| {
                    inst.pref_rank(i, x)
                        .cmp(&inst.pref_rank(i, y))
                        .then_with(|| by_name(&inst.items()[x], &inst.items()[y]))
                });
                lay_out(order, |o| p.get(i, o).clone())
            })
            .collect();
        let item_side: Vec<Vec<Segment>> = (0..n)
            .map(|o| {
                let mut order: Vec<usize> = (0..n).filter(|&i| p.in_support(i, o)).collect();
                order.sort_by(|&x, &y| {
                    inst.prio_rank(o, y)
                        .cmp(&inst.prio_rank(o, x))
                        .then_with(|| by_name(&inst.agents()[x], &inst.agents()[y]))
                });
                lay_out(order, |i| p.get(i, o).clone())
            })
            .collect();
        let mut breakpoints: Vec<Rat> = vec![rational::zero()];
        for seg in agent_side.iter().chain(item_side.iter()).flatten() {
            breakpoints.push(seg.end.clone());
        }
        breakpoints.sort();
        breakpoints.dedup();
        IntervalLayout { agent_side, item_side, breakpoints }
    }

    /// Number of breakpoint intervals `s`.
    pub fn intervals(&self) -> usize {
        self.breakpoints.len() - 1
    }

    fn agent_at(&self, i: usize, u: &Rat) -> Option<usize> {
        self.agent_side[i].iter().find(|s| s.contains(u)).map(|s| s.counterpart)
    }

    fn item_at(&self, o: usize, u: &Rat) -> Option<usize> {
        self.item_side[o].iter().find(|s| s.contains(u)).map(|s| s.counterpart)
    }

    /// The agent-side selection at `u` if it is a perfect matching,
    /// otherwise a perfect matching of `H_u`: support pairs whose agent-side
    /// or item-side subinterval contains `u`, agent-side edges tried first.
    pub fn matching_at(&self, u: &Rat) -> Option<DeterministicMatching> {
        let n = self.agent_side.len();
        let pick: Option<Vec<usize>> = (0..n).map(|i| self.agent_at(i, u)).collect();
        if let Some(m) = pick.and_then(|v| DeterministicMatching::from_assignment(v).ok()) {
            return Some(m);
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, row) in adj.iter_mut().enumerate() {
            if let Some(o) = self.agent_at(i, u) {
                row.push(o);
            }
        }
        for o in 0..n {
            if let Some(i) = self.item_at(o, u) {
                if !adj[i].contains(&o) {
                    adj[i].push(o);
                }
            }
        }
        let perm = bipartite::perfect_matching(n, &adj, |_, _| true)?;
        DeterministicMatching::from_assignment(perm).ok()
    }
}

/// How a strong decomposition was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrongMethod {
    Intervals,
    LinearProgram,
}

impl StrongMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            StrongMethod::Intervals => "intervals",
            StrongMethod::LinearProgram => "lp",
        }
    }
}

fn by_intervals(inst: &Instance, p: &RandomMatching) -> Option<Vec<(Rat, DeterministicMatching)>> {
    let layout = IntervalLayout::new(inst, p);
    let two = Rat::from_integer(2.into());
    let mut terms: Vec<(Rat, DeterministicMatching)> = Vec::new();
    for w in layout.breakpoints.windows(2) {
        let u = (&w[0] + &w[1]) / &two;
        let m = layout.matching_at(&u)?;
        if !matching::is_strongly_stable_fast(inst, &m) {
            return None;
        }
        let len = &w[1] - &w[0];
        match terms.iter_mut().find(|(_, t)| *t == m) {
            Some((weight, _)) => *weight += len,
            None => terms.push((len, m)),
        }
    }
    let weighted: Vec<(Rat, &DeterministicMatching)> = terms.iter().map(|(w, m)| (w.clone(), m)).collect();
    let back = RandomMatching::from_mixture(p.agents(), p.items(), &weighted).ok()?;
    (back == *p).then_some(terms)
}

fn by_lp(inst: &Instance, p: &RandomMatching, cap: usize) -> Result<Option<Vec<(Rat, DeterministicMatching)>>> {
    let columns: Vec<DeterministicMatching> = expost::enumerate_stable_support_matchings(inst, p, cap)?
        .into_iter()
        .filter(|m| matching::is_strongly_stable_fast(inst, m))
        .collect();
    let n = p.n();
    let rhs: Vec<Rat> = (0..n * n).map(|k| p.get(k / n, k % n).clone()).collect();
    let cols: Vec<Vec<usize>> = columns.iter().map(|m| m.pairs().map(|(i, o)| i * n + o).collect()).collect();
    let sol = lp::solve_packing(&rhs, &cols);
    if sol.value != rational::one() {
        return Ok(None);
    }
    Ok(Some(sol.positive().into_iter().map(|j| (sol.weights[j].clone(), columns[j].clone())).collect()))
}

/// A decomposition of `p` into strongly stable matchings, or `None` when
/// `p` violates fractional strong stability. Uses [`DEFAULT_CAP`] for the
/// fallback enumeration.
pub fn expost_strong_decompose(inst: &Instance, p: &RandomMatching) -> Result<Option<Decomposition>> {
    Ok(expost_strong_decompose_with_cap(inst, p, DEFAULT_CAP)?.map(|(d, _)| d))
}

pub fn expost_strong_decompose_with_cap(
    inst: &Instance,
    p: &RandomMatching,
    cap: usize,
) -> Result<Option<(Decomposition, StrongMethod)>> {
    randmatch::require_valid(inst, p)?;
    if !check_fractional_strong_stability(inst, p)?.satisfied {
        return Ok(None);
    }
    let (terms, method) = match by_intervals(inst, p) {
        Some(t) => (t, StrongMethod::Intervals),
        None => match by_lp(inst, p, cap)? {
            Some(t) => (t, StrongMethod::LinearProgram),
            None => return Ok(None),
        },
    };
    let d = Decomposition::new(p.agents().to_vec(), p.items().to_vec(), terms, Some(inst));
    Ok(Some((d, method)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{fixtures, gen_example1};
    use crate::randmatch::recombine;
    use crate::rational::{int, rat};

    #[test]
    fn opp2_half_half_splits_at_one_half() {
        let inst = fixtures::opp2();
        let p = fixtures::half_half(&inst);
        let layout = IntervalLayout::new(&inst, &p);
        assert_eq!(layout.breakpoints, vec![int(0), rat(1, 2), int(1)]);
        let (d, method) = expost_strong_decompose_with_cap(&inst, &p, DEFAULT_CAP).unwrap().unwrap();
        assert_eq!(method, StrongMethod::Intervals);
        assert_eq!(d.len(), 2);
        assert!(d.terms.iter().all(|t| t.weight == rat(1, 2) && t.strongly_stable));
        assert_eq!(recombine(&d, 2).unwrap(), p);
    }

    #[test]
    fn example1_improved_has_no_strong_decomposition() {
        let ex = gen_example1();
        assert_eq!(expost_strong_decompose(&ex.instance, &ex.p_improved).unwrap(), None);
    }

    #[test]
    fn deterministic_strongly_stable_matrix_is_one_term() {
        let inst = fixtures::opp2();
        let (id, _) = fixtures::both_matchings_2();
        let p = id.to_matrix(inst.agents(), inst.items());
        let d = expost_strong_decompose(&inst, &p).unwrap().unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.terms[0].weight, int(1));
        assert_eq!(d.terms[0].matching, id);
    }

    #[test]
    fn item_side_is_ordered_by_increasing_priority() {
        let inst = fixtures::agree2();
        let p = fixtures::half_half(&inst);
        let layout = IntervalLayout::new(&inst, &p);
        let x = inst.item_index("x").unwrap();
        let b = inst.agent_index("b").unwrap();
        assert_eq!(layout.item_side[x][0].counterpart, b);
    }
}
