//! Robust ex-post stability: every decomposition of `p` uses only weakly
//! stable matchings. One perfect-matching test per agent-item pair.

use crate::bipartite::{self, Matcher};
use crate::error::Result;
use crate::instance::Instance;
use crate::matching::DeterministicMatching;
use crate::randmatch::{self, RandomMatching};

/// A matching consistent with `p` that `(agent, item)` blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RobustWitness {
    pub agent: String,
    pub item: String,
    pub matching: DeterministicMatching,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RobustResult {
    pub robust: bool,
    pub witness: Option<RobustWitness>,
}

/// A consistent matching blocked by `(i, o)`: agent `i` gets a support item
/// it likes strictly less than `o`, and `o` goes to a support agent it ranks
/// strictly below `i`.
pub fn blocked_consistent_matching(
    inst: &Instance,
    p: &RandomMatching,
    i: usize,
    o: usize,
) -> Option<DeterministicMatching> {
    let adj = p.support_adjacency();
    let base = bipartite::maximum_matching(p.n(), &adj, |_, _| true);
    repair(inst, p, &adj, &base, i, o)
}

/// Starts from a perfect matching of the support, drops the at most two
/// edges the pair forbids and re-augments.
fn repair(
    inst: &Instance,
    p: &RandomMatching,
    adj: &[Vec<usize>],
    base: &Matcher,
    i: usize,
    o: usize,
) -> Option<DeterministicMatching> {
    let n = p.n();
    let allowed = |a: usize, q: usize| {
        if a == i && !inst.prefers(i, o, q) {
            return false;
        }
        q != o || inst.prioritizes(o, i, a)
    };
    if !adj[i].iter().any(|&q| allowed(i, q)) || !(0..n).any(|a| p.in_support(a, o) && allowed(a, o)) {
        return None;
    }
    let mut m = base.clone();
    if m.mate_left[i].is_some_and(|q| !allowed(i, q)) {
        m.unmatch_left(i);
    }
    if m.mate_right[o].is_some_and(|a| !allowed(a, o)) {
        m.unmatch_right(o);
    }
    for a in 0..n {
        if m.mate_left[a].is_none() && !m.augment(a, adj, &allowed) {
            return None;
        }
    }
    let perm: Option<Vec<usize>> = m.mate_left.into_iter().collect();
    DeterministicMatching::from_assignment(perm?).ok()
}

fn witnesses<'a>(inst: &'a Instance, p: &'a RandomMatching) -> impl Iterator<Item = RobustWitness> + 'a {
    let adj = p.support_adjacency();
    let base = bipartite::maximum_matching(p.n(), &adj, |_, _| true);
    pairs_by_name(inst)
        .into_iter()
        .filter_map(move |(i, o)| repair(inst, p, &adj, &base, i, o).map(|m| witness(inst, i, o, m)))
}

fn pairs_by_name(inst: &Instance) -> Vec<(usize, usize)> {
    let mut agents: Vec<usize> = (0..inst.n_agents()).collect();
    agents.sort_by(|&a, &b| inst.agents()[a].cmp(&inst.agents()[b]));
    let mut items: Vec<usize> = (0..inst.n_items()).collect();
    items.sort_by(|&a, &b| inst.items()[a].cmp(&inst.items()[b]));
    agents.iter().flat_map(|&i| items.iter().map(move |&o| (i, o))).collect()
}

fn witness(inst: &Instance, i: usize, o: usize, matching: DeterministicMatching) -> RobustWitness {
    RobustWitness { agent: inst.agents()[i].clone(), item: inst.items()[o].clone(), matching }
}

/// Tests pairs in lexicographic name order and stops at the first witness.
pub fn is_robust_expost_stable(inst: &Instance, p: &RandomMatching) -> Result<RobustResult> {
    randmatch::require_valid(inst, p)?;
    let witness = witnesses(inst, p).next();
    Ok(RobustResult { robust: witness.is_none(), witness })
}

/// One witness for every pair that has one, in lexicographic name order.
pub fn robust_witnesses(inst: &Instance, p: &RandomMatching) -> Result<Vec<RobustWitness>> {
    randmatch::require_valid(inst, p)?;
    Ok(witnesses(inst, p).collect())
}
