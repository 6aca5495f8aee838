//! Deterministic matchings, weak and strong stability, and deferred
//! acceptance with seeded tie-breaking.

use std::cmp::Ordering;
use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::randmatch::RandomMatching;
use crate::rational;

/// A perfect agent-item bijection over a complete instance, stored by index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeterministicMatching {
    item_of: Vec<usize>,
    agent_of: Vec<usize>,
}

impl DeterministicMatching {
    /// `item_of[i]` is the item matched to agent `i`; must be a permutation.
    pub fn from_assignment(item_of: Vec<usize>) -> Result<Self> {
        let n = item_of.len();
        let mut agent_of = vec![usize::MAX; n];
        for (i, &o) in item_of.iter().enumerate() {
            if o >= n {
                return Err(Error::NotPerfect(format!("agent {i} assigned to item index {o} >= {n}")));
            }
            if agent_of[o] != usize::MAX {
                return Err(Error::NotPerfect(format!("item {o} matched twice")));
            }
            agent_of[o] = i;
        }
        Ok(DeterministicMatching { item_of, agent_of })
    }

    /// Builds a matching from `(agent, item)` name pairs of `inst`.
    pub fn from_pairs<A: AsRef<str>, B: AsRef<str>>(inst: &Instance, pairs: &[(A, B)]) -> Result<Self> {
        let n = inst.n_agents();
        if inst.n_items() != n {
            return Err(Error::NotPerfect("instance is unbalanced".into()));
        }
        let mut item_of = vec![usize::MAX; n];
        for (a, o) in pairs {
            let (a, o) = (a.as_ref(), o.as_ref());
            let i = inst.agent_index(a).ok_or_else(|| Error::NotPerfect(format!("unknown agent {a:?}")))?;
            let oi = inst.item_index(o).ok_or_else(|| Error::NotPerfect(format!("unknown item {o:?}")))?;
            if item_of[i] != usize::MAX {
                return Err(Error::NotPerfect(format!("agent {a:?} matched twice")));
            }
            item_of[i] = oi;
        }
        if let Some(i) = item_of.iter().position(|&o| o == usize::MAX) {
            return Err(Error::NotPerfect(format!("agent {:?} unmatched", inst.agents()[i])));
        }
        Self::from_assignment(item_of)
    }

    pub fn n(&self) -> usize {
        self.item_of.len()
    }

    #[inline]
    pub fn item_of(&self, agent: usize) -> usize {
        self.item_of[agent]
    }

    #[inline]
    pub fn agent_of(&self, item: usize) -> usize {
        self.agent_of[item]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.item_of
    }

    pub fn contains(&self, agent: usize, item: usize) -> bool {
        self.item_of[agent] == item
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.item_of.iter().copied().enumerate()
    }

    /// `(agent name, item name)` pairs in agent order.
    pub fn named_pairs<'a>(&'a self, agents: &'a [String], items: &'a [String]) -> Vec<(&'a str, &'a str)> {
        self.pairs().map(|(i, o)| (agents[i].as_str(), items[o].as_str())).collect()
    }

    /// The 0/1 matrix of this matching.
    pub fn to_matrix(&self, agents: &[String], items: &[String]) -> RandomMatching {
        let n = self.n();
        let mut entries = vec![vec![rational::zero(); n]; n];
        for (i, o) in self.pairs() {
            entries[i][o] = rational::one();
        }
        RandomMatching::new(agents.to_vec(), items.to_vec(), entries).expect("square")
    }

    /// Every pair of the matching has positive probability in `p`.
    pub fn consistent_with(&self, p: &RandomMatching) -> bool {
        self.pairs().all(|(i, o)| rational::is_positive(p.get(i, o)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BlockKind {
    /// Both sides strictly prefer each other.
    Weak,
    /// Both weakly prefer each other, at least one strictly; not a weak block.
    Strong,
}

impl BlockKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BlockKind::Weak => "weak-block",
            BlockKind::Strong => "strong-block",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockingPair {
    pub agent: usize,
    pub item: usize,
    pub agent_name: String,
    pub item_name: String,
    pub kind: BlockKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilityReport {
    pub stable: bool,
    /// Sorted by (agent name, item name).
    pub blocking_pairs: Vec<BlockingPair>,
}

impl StabilityReport {
    fn from_pairs(inst: &Instance, mut raw: Vec<(usize, usize, BlockKind)>) -> Self {
        raw.sort_by(|a, b| {
            inst.agents()[a.0].cmp(&inst.agents()[b.0]).then_with(|| inst.items()[a.1].cmp(&inst.items()[b.1]))
        });
        let blocking_pairs: Vec<BlockingPair> = raw
            .into_iter()
            .map(|(agent, item, kind)| BlockingPair {
                agent,
                item,
                agent_name: inst.agents()[agent].clone(),
                item_name: inst.items()[item].clone(),
                kind,
            })
            .collect();
        StabilityReport { stable: blocking_pairs.is_empty(), blocking_pairs }
    }

    pub fn blocks(&self, agent: &str, item: &str) -> bool {
        self.blocking_pairs.iter().any(|b| b.agent_name == agent && b.item_name == item)
    }
}

fn check_dims(inst: &Instance, m: &DeterministicMatching) -> Result<()> {
    if m.n() != inst.n_agents() || m.n() != inst.n_items() {
        return Err(Error::NotPerfect(format!(
            "matching has {} pairs, instance has {} agents and {} items",
            m.n(),
            inst.n_agents(),
            inst.n_items()
        )));
    }
    Ok(())
}

/// True iff `(i, o)` is a weak block of `m`: `o ≻_i m(i)` and `i ≻_o m⁻¹(o)`.
#[inline]
pub fn is_weak_block(inst: &Instance, m: &DeterministicMatching, i: usize, o: usize) -> bool {
    inst.prefers(i, o, m.item_of(i)) && inst.prioritizes(o, i, m.agent_of(o))
}

/// First weak block in (agent index, item index) order, without building a
/// report. Hot paths use this.
pub fn first_weak_block(inst: &Instance, m: &DeterministicMatching) -> Option<(usize, usize)> {
    let n = m.n();
    for i in 0..n {
        let own = m.item_of(i);
        for o in 0..n {
            if inst.prefers(i, o, own) && inst.prioritizes(o, i, m.agent_of(o)) {
                return Some((i, o));
            }
        }
    }
    None
}

pub fn is_weakly_stable_fast(inst: &Instance, m: &DeterministicMatching) -> bool {
    first_weak_block(inst, m).is_none()
}

/// Weak stability (no justified envy): no agent strictly prefers an item
/// that strictly prioritises it over its current holder.
pub fn is_weakly_stable(inst: &Instance, m: &DeterministicMatching) -> Result<StabilityReport> {
    inst.require_complete()?;
    check_dims(inst, m)?;
    let n = m.n();
    let mut raw = Vec::new();
    for i in 0..n {
        for o in 0..n {
            if is_weak_block(inst, m, i, o) {
                raw.push((i, o, BlockKind::Weak));
            }
        }
    }
    Ok(StabilityReport::from_pairs(inst, raw))
}

fn side_cmp(rank_new: u32, rank_current: u32) -> Ordering {
    // Less = strictly better
    rank_new.cmp(&rank_current)
}

/// Classifies the pair `(i, o)` against `m` under strong stability.
#[inline]
pub fn strong_block_kind(inst: &Instance, m: &DeterministicMatching, i: usize, o: usize) -> Option<BlockKind> {
    if m.contains(i, o) {
        return None;
    }
    let agent_side = side_cmp(inst.pref_rank(i, o), inst.pref_rank(i, m.item_of(i)));
    let item_side = side_cmp(inst.prio_rank(o, i), inst.prio_rank(o, m.agent_of(o)));
    match (agent_side, item_side) {
        (Ordering::Less, Ordering::Less) => Some(BlockKind::Weak),
        (Ordering::Less, Ordering::Equal) | (Ordering::Equal, Ordering::Less) => Some(BlockKind::Strong),
        _ => None,
    }
}

pub fn is_strongly_stable_fast(inst: &Instance, m: &DeterministicMatching) -> bool {
    let n = m.n();
    (0..n).all(|i| (0..n).all(|o| strong_block_kind(inst, m, i, o).is_none()))
}

/// Strong stability: no unmatched pair where both sides weakly prefer each
/// other and at least one strictly. Pairs that are also weak blocks are
/// reported with [`BlockKind::Weak`].
pub fn is_strongly_stable(inst: &Instance, m: &DeterministicMatching) -> Result<StabilityReport> {
    inst.require_complete()?;
    check_dims(inst, m)?;
    let n = m.n();
    let mut raw = Vec::new();
    for i in 0..n {
        for o in 0..n {
            if let Some(kind) = strong_block_kind(inst, m, i, o) {
                raw.push((i, o, kind));
            }
        }
    }
    Ok(StabilityReport::from_pairs(inst, raw))
}

/// Seed for the lottery that breaks ties before deferred acceptance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TieBreak {
    pub seed: u64,
}

impl TieBreak {
    pub fn new(seed: u64) -> Self {
        TieBreak { seed }
    }

    /// Strict positions after shuffling inside every tier: `pref[i]` lists
    /// items best-first, `prio[o]` lists agents best-first. One generator
    /// stream, agents first then items, each in index order.
    pub fn strict_orders(&self, inst: &Instance) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut flatten = |tiers: &[Vec<String>], lookup: &dyn Fn(&str) -> Option<usize>| {
            let mut out = Vec::new();
            for tier in tiers {
                let mut idx: Vec<usize> = tier.iter().filter_map(|n| lookup(n)).collect();
                idx.shuffle(&mut rng);
                out.extend(idx);
            }
            out
        };
        let item_lookup = |n: &str| inst.item_index(n);
        let agent_lookup = |n: &str| inst.agent_index(n);
        let pref = inst
            .agents()
            .iter()
            .map(|a| flatten(inst.preference(a).map_or(&[][..], |w| w.tiers()), &item_lookup))
            .collect();
        let prio = inst
            .items()
            .iter()
            .map(|o| flatten(inst.priority(o).map_or(&[][..], |w| w.tiers()), &agent_lookup))
            .collect();
        (pref, prio)
    }
}

/// Agent-proposing deferred acceptance on the tie-broken instance. The
/// result is weakly stable on the original instance.
pub fn deferred_acceptance(inst: &Instance, tb: TieBreak) -> Result<DeterministicMatching> {
    inst.require_complete()?;
    let n = inst.n_agents();
    let (pref, prio) = tb.strict_orders(inst);
    let mut prio_pos = vec![vec![usize::MAX; n]; n];
    for (o, order) in prio.iter().enumerate() {
        for (pos, &i) in order.iter().enumerate() {
            prio_pos[o][i] = pos;
        }
    }
    let mut next = vec![0usize; n];
    let mut holder: Vec<Option<usize>> = vec![None; n];
    let mut free: VecDeque<usize> = (0..n).collect();
    while let Some(i) = free.pop_front() {
        let o = pref[i][next[i]];
        next[i] += 1;
        match holder[o] {
            None => holder[o] = Some(i),
            Some(j) if prio_pos[o][i] < prio_pos[o][j] => {
                holder[o] = Some(i);
                free.push_back(j);
            }
            Some(_) => free.push_back(i),
        }
    }
    let mut item_of = vec![0; n];
    for (o, h) in holder.iter().enumerate() {
        item_of[h.expect("complete instance matches everyone")] = o;
    }
    DeterministicMatching::from_assignment(item_of)
}
