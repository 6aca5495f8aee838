//! Brute-force reference implementations. Nothing here shares enumeration,
//! pruning or LP code with the production modules; only rationals and the
//! stability checkers are common.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::instance::{is_dummy_agent, is_dummy_item, Instance};
use crate::matching::{self, DeterministicMatching};
use crate::randmatch::RandomMatching;
use crate::rational::{self, Rat};

pub use crate::gen::X3CInstance;

/// Hard limit on oracle enumerations.
pub const ORACLE_CAP: usize = 1_000_000;

/// All perfect matchings inside the support of `p`, by plain backtracking
/// over agents in index order. Output is sorted by assignment vector.
pub fn enumerate_consistent_matchings(inst: &Instance, p: &RandomMatching) -> Result<Vec<DeterministicMatching>> {
    let n = p.n();
    if inst.n_agents() != n || inst.n_items() != n || !p.is_square() {
        return Err(Error::DimensionMismatch { expected: inst.n_agents(), found: n });
    }
    let mut out = Vec::new();
    let mut item_of = vec![0; n];
    let mut used = vec![false; n];
    fn go(
        p: &RandomMatching,
        i: usize,
        item_of: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut Vec<DeterministicMatching>,
    ) -> Result<()> {
        let n = used.len();
        if i == n {
            if out.len() >= ORACLE_CAP {
                return Err(Error::CapExceeded { cap: ORACLE_CAP });
            }
            out.push(DeterministicMatching::from_assignment(item_of.clone())?);
            return Ok(());
        }
        for o in 0..n {
            if !used[o] && p.in_support(i, o) {
                used[o] = true;
                item_of[i] = o;
                go(p, i + 1, item_of, used, out)?;
                used[o] = false;
            }
        }
        Ok(())
    }
    go(p, 0, &mut item_of, &mut used, &mut out)?;
    Ok(out)
}

/// Consistent matchings that are weakly stable.
pub fn weakly_stable_consistent(inst: &Instance, p: &RandomMatching) -> Result<Vec<DeterministicMatching>> {
    Ok(enumerate_consistent_matchings(inst, p)?
        .into_iter()
        .filter(|m| matching::is_weakly_stable_fast(inst, m))
        .collect())
}

/// Consistent matchings that are strongly stable.
pub fn strongly_stable_consistent(inst: &Instance, p: &RandomMatching) -> Result<Vec<DeterministicMatching>> {
    Ok(enumerate_consistent_matchings(inst, p)?
        .into_iter()
        .filter(|m| matching::is_strongly_stable_fast(inst, m))
        .collect())
}

/// Every weakly stable perfect matching of a complete instance.
pub fn enumerate_weakly_stable(inst: &Instance) -> Result<Vec<DeterministicMatching>> {
    inst.require_complete()?;
    let n = inst.n_agents();
    let full = RandomMatching::new(inst.agents().to_vec(), inst.items().to_vec(), vec![vec![rational::one(); n]; n])?;
    weakly_stable_consistent(inst, &full)
}

/// Exact convex-hull membership: weights `λ ≥ 0`, `Σ λ = 1`, `Σ λ_j M_j = p`,
/// or `None` when infeasible. Dense phase-one simplex, smallest-index pivoting.
pub fn lp_membership(p: &RandomMatching, columns: &[DeterministicMatching]) -> Option<Vec<Rat>> {
    let n = p.n();
    if columns.iter().any(|m| m.n() != n) {
        return None;
    }
    let k = columns.len();
    let m = n * n + 1;
    let width = k + m + 1;
    let rhs = width - 1;
    let mut t: Vec<Vec<Rat>> = vec![vec![rational::zero(); width]; m];
    for i in 0..n {
        for o in 0..n {
            let r = i * n + o;
            for (j, col) in columns.iter().enumerate() {
                if col.contains(i, o) {
                    t[r][j] = rational::one();
                }
            }
            t[r][k + r] = rational::one();
            t[r][rhs] = p.get(i, o).clone();
        }
    }
    for j in 0..k {
        t[m - 1][j] = rational::one();
    }
    t[m - 1][k + m - 1] = rational::one();
    t[m - 1][rhs] = rational::one();
    let mut basis: Vec<usize> = (0..m).map(|r| k + r).collect();
    // reduced costs of min Σ artificials
    let mut cost: Vec<Rat> = vec![rational::zero(); width];
    for row in &t {
        for j in 0..k {
            cost[j] -= &row[j];
        }
        cost[rhs] -= &row[rhs];
    }
    while let Some(q) = (0..k).find(|&j| cost[j].is_negative()) {
        let mut leave: Option<usize> = None;
        for r in 0..m {
            if !t[r][q].is_positive() {
                continue;
            }
            leave = match leave {
                None => Some(r),
                Some(l) => {
                    let a = &t[r][rhs] / &t[r][q];
                    let b = &t[l][rhs] / &t[l][q];
                    if a < b || (a == b && basis[r] < basis[l]) {
                        Some(r)
                    } else {
                        Some(l)
                    }
                }
            };
        }
        let r = leave?;
        let piv = t[r][q].clone();
        for v in t[r].iter_mut() {
            *v /= &piv;
        }
        let prow = t[r].clone();
        for (s, row) in t.iter_mut().enumerate() {
            if s != r && !row[q].is_zero() {
                let f = row[q].clone();
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= &f * pv;
                }
            }
        }
        let f = cost[q].clone();
        for (v, pv) in cost.iter_mut().zip(&prow) {
            *v -= &f * pv;
        }
        basis[r] = q;
    }
    if !cost[rhs].is_zero() {
        return None;
    }
    let mut weights = vec![rational::zero(); k];
    for (r, &b) in basis.iter().enumerate() {
        if b < k {
            weights[b] = t[r][rhs].clone();
        }
    }
    Some(weights)
}

/// Robustness by definition: every consistent matching is weakly stable.
pub fn robust_oracle(inst: &Instance, p: &RandomMatching) -> Result<bool> {
    Ok(enumerate_consistent_matchings(inst, p)?.iter().all(|m| matching::is_weakly_stable_fast(inst, m)))
}

/// Lexicographically first exact cover, as ascending set indices.
pub fn solve_x3c(x: &X3CInstance) -> Option<Vec<usize>> {
    let n = x.n();
    let k = x.sets.len();
    let mut chosen = Vec::with_capacity(n);
    fn go(x: &X3CInstance, start: usize, n: usize, k: usize, chosen: &mut Vec<usize>) -> bool {
        if chosen.len() == n {
            return x.is_cover(chosen);
        }
        for j in start..k {
            chosen.push(j);
            if go(x, j + 1, n, k, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    go(x, 0, n, k, &mut chosen).then_some(chosen)
}

/// Permanent of a 0/1 matrix by inclusion–exclusion over column subsets.
pub fn permanent(a: &[Vec<bool>]) -> u128 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    let mut total: i128 = 0;
    for mask in 1u32..(1 << n) {
        let mut prod: i128 = 1;
        for row in a {
            let s = (0..n).filter(|&j| mask & (1 << j) != 0 && row[j]).count() as i128;
            prod *= s;
            if prod == 0 {
                break;
            }
        }
        let sign = if (n as u32 - mask.count_ones()).is_multiple_of(2) { 1 } else { -1 };
        total += sign * prod;
    }
    total as u128
}

/// A matching on a possibly incomplete instance as a set of name pairs.
pub type NamedMatching = BTreeSet<(String, String)>;

/// Every weakly stable matching of an arbitrary instance: only mutually
/// acceptable pairs are used, being unmatched is worse than any acceptable
/// partner on both sides.
pub fn enumerate_stable_incomplete(inst: &Instance) -> Vec<NamedMatching> {
    let na = inst.n_agents();
    let ni = inst.n_items();
    let mut out = Vec::new();
    let mut item_of: Vec<Option<usize>> = vec![None; na];
    let mut agent_of: Vec<Option<usize>> = vec![None; ni];
    fn stable(inst: &Instance, item_of: &[Option<usize>], agent_of: &[Option<usize>]) -> bool {
        for (i, own) in item_of.iter().enumerate() {
            for (o, holder) in agent_of.iter().enumerate() {
                if *own == Some(o) || !inst.mutually_acceptable(i, o) {
                    continue;
                }
                let agent_wants = own.is_none_or(|c| inst.prefers(i, o, c));
                let item_wants = holder.is_none_or(|h| inst.prioritizes(o, i, h));
                if agent_wants && item_wants {
                    return false;
                }
            }
        }
        true
    }
    fn go(
        inst: &Instance,
        i: usize,
        item_of: &mut Vec<Option<usize>>,
        agent_of: &mut Vec<Option<usize>>,
        out: &mut Vec<NamedMatching>,
    ) {
        if i == item_of.len() {
            if stable(inst, item_of, agent_of) {
                out.push(
                    item_of
                        .iter()
                        .enumerate()
                        .filter_map(|(a, o)| o.map(|o| (inst.agents()[a].clone(), inst.items()[o].clone())))
                        .collect(),
                );
            }
            return;
        }
        go(inst, i + 1, item_of, agent_of, out);
        for o in 0..agent_of.len() {
            if agent_of[o].is_none() && inst.mutually_acceptable(i, o) {
                agent_of[o] = Some(i);
                item_of[i] = Some(o);
                go(inst, i + 1, item_of, agent_of, out);
                item_of[i] = None;
                agent_of[o] = None;
            }
        }
    }
    go(inst, 0, &mut item_of, &mut agent_of, &mut out);
    out.sort();
    out
}

/// The pairs of a matching of the completed instance that are original and
/// mutually acceptable in `original`.
pub fn restrict_to_original(original: &Instance, completed: &Instance, m: &DeterministicMatching) -> NamedMatching {
    m.pairs()
        .map(|(i, o)| (&completed.agents()[i], &completed.items()[o]))
        .filter(|(a, o)| !is_dummy_agent(a) && !is_dummy_item(o))
        .filter(|(a, o)| {
            let i = original.agent_index(a).expect("original agent");
            let o = original.item_index(o).expect("original item");
            original.mutually_acceptable(i, o)
        })
        .map(|(a, o)| (a.clone(), o.clone()))
        .collect()
}
