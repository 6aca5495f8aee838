//! Agents, items and their weak orders, plus the reduction of incomplete or
//! unbalanced instances to complete balanced ones.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::randmatch::RandomMatching;
use crate::rational::{self, Rat};

/// Rank value for a counterpart that an order does not mention.
pub const UNRANKED: u32 = u32::MAX;

/// Prefix of the dummy item created for each original agent.
pub const DUMMY_ITEM_PREFIX: &str = "__dummy_item__";
/// Prefix of the fully indifferent dummy agents that balance the market.
pub const DUMMY_AGENT_PREFIX: &str = "__dummy_agent__";

/// A weak order: indifference classes listed from most to least preferred.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct WeakOrder {
    tiers: Vec<Vec<String>>,
}

impl WeakOrder {
    pub fn new(tiers: Vec<Vec<String>>) -> Self {
        WeakOrder { tiers }
    }

    /// One singleton tier per name, in the given order.
    pub fn strict<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> Self {
        WeakOrder { tiers: names.into_iter().map(|n| vec![n.as_ref().to_string()]).collect() }
    }

    /// Builds tiers from string slices; handy for fixtures.
    pub fn from_tiers<S: AsRef<str>>(tiers: &[&[S]]) -> Self {
        WeakOrder { tiers: tiers.iter().map(|t| t.iter().map(|n| n.as_ref().to_string()).collect()).collect() }
    }

    pub fn tiers(&self) -> &[Vec<String>] {
        &self.tiers
    }

    pub fn is_strict(&self) -> bool {
        self.tiers.iter().all(|t| t.len() == 1)
    }

    pub fn is_dichotomous(&self) -> bool {
        self.tiers.len() <= 2
    }

    /// Number of ranked names.
    pub fn len(&self) -> usize {
        self.tiers.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tiers.iter().flatten().map(String::as_str)
    }

    pub fn tier_of(&self, name: &str) -> Option<usize> {
        self.tiers.iter().position(|t| t.iter().any(|n| n == name))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub code: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn from_violations(violations: Vec<Violation>) -> Self {
        ValidationReport { ok: violations.is_empty(), violations }
    }

    pub fn has_code(&self, code: &str) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    pub(crate) fn into_result(self, wrap: fn(String) -> Error) -> Result<()> {
        if self.ok {
            return Ok(());
        }
        let msg = self.violations.iter().map(|v| format!("{}: {}", v.code, v.detail)).collect::<Vec<_>>().join("; ");
        Err(wrap(msg))
    }
}

/// A two-sided market. Agents rank items (preferences), items rank agents
/// (priorities). Orders may be partial; an unmentioned counterpart is
/// unacceptable.
#[derive(Clone, Debug)]
pub struct Instance {
    agents: Vec<String>,
    items: Vec<String>,
    prefs: BTreeMap<String, WeakOrder>,
    prios: BTreeMap<String, WeakOrder>,
    complete: bool,
    agent_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
    // pref_rank[i][o] = tier of item o in agent i's order
    pref_rank: Vec<Vec<u32>>,
    // prio_rank[o][i] = tier of agent i in item o's order
    prio_rank: Vec<Vec<u32>>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.agents == other.agents
            && self.items == other.items
            && self.prefs == other.prefs
            && self.prios == other.prios
            && self.complete == other.complete
    }
}

impl Eq for Instance {}

impl Instance {
    /// Builds an instance. No validation happens here; see
    /// [`validate_instance`]. Names that do not resolve are ignored by the
    /// rank tables.
    pub fn new(
        agents: Vec<String>,
        items: Vec<String>,
        prefs: BTreeMap<String, WeakOrder>,
        prios: BTreeMap<String, WeakOrder>,
        complete: bool,
    ) -> Self {
        let agent_index: HashMap<String, usize> = agents.iter().enumerate().map(|(k, a)| (a.clone(), k)).collect();
        let item_index: HashMap<String, usize> = items.iter().enumerate().map(|(k, o)| (o.clone(), k)).collect();
        let mut pref_rank = vec![vec![UNRANKED; items.len()]; agents.len()];
        for (a, order) in &prefs {
            let Some(&i) = agent_index.get(a) else { continue };
            for (t, tier) in order.tiers().iter().enumerate() {
                for o in tier {
                    if let Some(&oi) = item_index.get(o) {
                        if pref_rank[i][oi] == UNRANKED {
                            pref_rank[i][oi] = t as u32;
                        }
                    }
                }
            }
        }
        let mut prio_rank = vec![vec![UNRANKED; agents.len()]; items.len()];
        for (o, order) in &prios {
            let Some(&oi) = item_index.get(o) else { continue };
            for (t, tier) in order.tiers().iter().enumerate() {
                for a in tier {
                    if let Some(&i) = agent_index.get(a) {
                        if prio_rank[oi][i] == UNRANKED {
                            prio_rank[oi][i] = t as u32;
                        }
                    }
                }
            }
        }
        Instance { agents, items, prefs, prios, complete, agent_index, item_index, pref_rank, prio_rank }
    }

    /// Convenience constructor from `(name, order)` lists.
    pub fn from_orders(
        agents: &[&str],
        items: &[&str],
        prefs: Vec<(&str, WeakOrder)>,
        prios: Vec<(&str, WeakOrder)>,
        complete: bool,
    ) -> Self {
        Instance::new(
            agents.iter().map(|s| s.to_string()).collect(),
            items.iter().map(|s| s.to_string()).collect(),
            prefs.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            prios.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            complete,
        )
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn prefs(&self) -> &BTreeMap<String, WeakOrder> {
        &self.prefs
    }

    pub fn prios(&self) -> &BTreeMap<String, WeakOrder> {
        &self.prios
    }

    /// The declared completeness flag (as read from the file).
    pub fn complete_flag(&self) -> bool {
        self.complete
    }

    pub fn agent_index(&self, name: &str) -> Option<usize> {
        self.agent_index.get(name).copied()
    }

    pub fn item_index(&self, name: &str) -> Option<usize> {
        self.item_index.get(name).copied()
    }

    pub fn preference(&self, agent: &str) -> Option<&WeakOrder> {
        self.prefs.get(agent)
    }

    pub fn priority(&self, item: &str) -> Option<&WeakOrder> {
        self.prios.get(item)
    }

    /// Tier of item `o` in agent `i`'s order (0 = best), or [`UNRANKED`].
    #[inline]
    pub fn pref_rank(&self, i: usize, o: usize) -> u32 {
        self.pref_rank[i][o]
    }

    /// Tier of agent `i` in item `o`'s order (0 = best), or [`UNRANKED`].
    #[inline]
    pub fn prio_rank(&self, o: usize, i: usize) -> u32 {
        self.prio_rank[o][i]
    }

    /// `o1 ≻_i o2`.
    #[inline]
    pub fn prefers(&self, i: usize, o1: usize, o2: usize) -> bool {
        self.pref_rank[i][o1] < self.pref_rank[i][o2]
    }

    /// `i1 ≻_o i2`.
    #[inline]
    pub fn prioritizes(&self, o: usize, i1: usize, i2: usize) -> bool {
        self.prio_rank[o][i1] < self.prio_rank[o][i2]
    }

    /// Both sides list each other.
    pub fn mutually_acceptable(&self, i: usize, o: usize) -> bool {
        self.pref_rank[i][o] != UNRANKED && self.prio_rank[o][i] != UNRANKED
    }

    /// Number of tiers in agent `i`'s order.
    pub fn pref_tiers(&self, i: usize) -> usize {
        self.prefs.get(&self.agents[i]).map_or(0, |w| w.tiers().len())
    }

    /// Number of tiers in item `o`'s order.
    pub fn prio_tiers(&self, o: usize) -> usize {
        self.prios.get(&self.items[o]).map_or(0, |w| w.tiers().len())
    }

    /// Balanced, and every order ranks every counterpart.
    pub fn is_complete(&self) -> bool {
        self.agents.len() == self.items.len()
            && self.pref_rank.iter().all(|r| r.iter().all(|&t| t != UNRANKED))
            && self.prio_rank.iter().all(|r| r.iter().all(|&t| t != UNRANKED))
    }

    /// Every order on both sides is strict.
    pub fn is_strict(&self) -> bool {
        self.prefs.values().chain(self.prios.values()).all(WeakOrder::is_strict)
    }

    /// Every order on both sides has at most two tiers.
    pub fn is_dichotomous(&self) -> bool {
        self.prefs.values().chain(self.prios.values()).all(WeakOrder::is_dichotomous)
    }

    /// Agent `i` lists `o` exactly when `o` lists `i`.
    pub fn has_symmetric_acceptability(&self) -> bool {
        (0..self.agents.len()).all(|i| {
            (0..self.items.len()).all(|o| (self.pref_rank[i][o] == UNRANKED) == (self.prio_rank[o][i] == UNRANKED))
        })
    }

    /// Errors unless the instance validates and is complete. Every algorithm
    /// that works on bistochastic matrices starts here.
    pub fn require_complete(&self) -> Result<()> {
        validate_instance(self).into_result(Error::InvalidInstance)?;
        if !self.is_complete() {
            return Err(Error::NotComplete(format!(
                "{} agents, {} items; run the completion transform first",
                self.agents.len(),
                self.items.len()
            )));
        }
        Ok(())
    }
}

fn violation(code: &str, detail: String) -> Violation {
    Violation { code: code.to_string(), detail }
}

fn check_order(
    owner_kind: &str,
    owner: &str,
    order: &WeakOrder,
    known: &HashMap<String, usize>,
    out: &mut Vec<Violation>,
) {
    let mut seen = BTreeSet::new();
    for (t, tier) in order.tiers().iter().enumerate() {
        if tier.is_empty() {
            out.push(violation("empty-tier", format!("{owner_kind} {owner:?} has empty tier {t}")));
        }
        for name in tier {
            if !known.contains_key(name) {
                out.push(violation(
                    "dangling-reference",
                    format!("{owner_kind} {owner:?} ranks unknown name {name:?}"),
                ));
            }
            if !seen.insert(name.as_str()) {
                out.push(violation("repeated-entry", format!("{owner_kind} {owner:?} ranks {name:?} more than once")));
            }
        }
    }
}

/// Reports structural problems. Never fails; everything lands in the report.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut out = Vec::new();

    let mut seen = BTreeSet::new();
    for a in &inst.agents {
        if !seen.insert(a) {
            out.push(violation("duplicate-name", format!("agent {a:?} listed twice")));
        }
    }
    let mut seen = BTreeSet::new();
    for o in &inst.items {
        if !seen.insert(o) {
            out.push(violation("duplicate-name", format!("item {o:?} listed twice")));
        }
        if inst.agent_index.contains_key(o) {
            out.push(violation("duplicate-name", format!("{o:?} is both an agent and an item")));
        }
    }

    for (a, order) in &inst.prefs {
        if !inst.agent_index.contains_key(a) {
            out.push(violation("dangling-reference", format!("preferences given for unknown agent {a:?}")));
        }
        check_order("agent", a, order, &inst.item_index, &mut out);
    }
    for (o, order) in &inst.prios {
        if !inst.item_index.contains_key(o) {
            out.push(violation("dangling-reference", format!("priorities given for unknown item {o:?}")));
        }
        check_order("item", o, order, &inst.agent_index, &mut out);
    }

    if inst.complete {
        if inst.agents.len() != inst.items.len() {
            out.push(violation("unbalanced", format!("{} agents but {} items", inst.agents.len(), inst.items.len())));
        }
        for (i, a) in inst.agents.iter().enumerate() {
            let missing = inst.pref_rank[i].iter().filter(|&&t| t == UNRANKED).count();
            if missing > 0 {
                out.push(violation("incomplete-order", format!("agent {a:?} leaves {missing} item(s) unranked")));
            }
        }
        for (o, name) in inst.items.iter().enumerate() {
            let missing = inst.prio_rank[o].iter().filter(|&&t| t == UNRANKED).count();
            if missing > 0 {
                out.push(violation("incomplete-order", format!("item {name:?} leaves {missing} agent(s) unranked")));
            }
        }
    }

    ValidationReport::from_violations(out)
}

pub fn dummy_item_name(agent: &str) -> String {
    format!("{DUMMY_ITEM_PREFIX}{agent}")
}

pub fn dummy_agent_name(k: usize) -> String {
    format!("{DUMMY_AGENT_PREFIX}{k}")
}

pub fn is_dummy_item(name: &str) -> bool {
    name.starts_with(DUMMY_ITEM_PREFIX)
}

pub fn is_dummy_agent(name: &str) -> bool {
    name.starts_with(DUMMY_AGENT_PREFIX)
}

/// Reduces an arbitrary instance to a complete balanced one.
///
/// Each agent `i` gets a dummy item `o_i`, ranked directly below the items
/// `i` found acceptable and above everything else (one trailing tie). Then
/// `|O'| - |N|` dummy agents, indifferent between all items, balance the
/// market. `o_i` ranks `i` first and everybody else in one tie; original
/// items append all agents they did not rank as a trailing tie.
///
/// When `p` is given it must be sub-stochastic on mutually acceptable pairs.
/// The returned matrix keeps `p` on original pairs, sends each agent's
/// missing mass to its dummy item and fills the dummy-agent rows with the
/// northwest-corner rule over the remaining column deficits, so it is exactly
/// bistochastic.
///
/// Complete instances are returned unchanged, as is a bistochastic `p` on a
/// complete instance.
pub fn complete_instance(inst: &Instance, p: Option<&RandomMatching>) -> Result<(Instance, Option<RandomMatching>)> {
    validate_instance(inst).into_result(Error::InvalidInstance)?;
    if let Some(p) = p {
        check_sub_stochastic(inst, p)?;
    }
    if inst.is_complete() {
        let bistochastic = p.is_none_or(|p| crate::randmatch::validate_random_matching(inst, p).ok);
        if bistochastic {
            let mut same = inst.clone();
            same.complete = true;
            return Ok((same, p.cloned()));
        }
    }

    let n_orig_agents = inst.agents.len();
    let mut items: Vec<String> = inst.items.clone();
    items.extend(inst.agents.iter().map(|a| dummy_item_name(a)));
    let n_dummy_agents = items.len() - n_orig_agents;
    let mut agents: Vec<String> = inst.agents.clone();
    agents.extend((1..=n_dummy_agents).map(dummy_agent_name));

    let mut prefs = BTreeMap::new();
    for (i, a) in inst.agents.iter().enumerate() {
        let mut tiers: Vec<Vec<String>> = inst
            .prefs
            .get(a)
            .map(|w| w.tiers().to_vec())
            .unwrap_or_default()
            .into_iter()
            .filter(|t| !t.is_empty())
            .collect();
        let own = dummy_item_name(a);
        tiers.push(vec![own.clone()]);
        let rest: Vec<String> = items
            .iter()
            .enumerate()
            .filter(|&(o, name)| *name != own && (o >= inst.items.len() || inst.pref_rank[i][o] == UNRANKED))
            .map(|(_, name)| name.clone())
            .collect();
        if !rest.is_empty() {
            tiers.push(rest);
        }
        prefs.insert(a.clone(), WeakOrder::new(tiers));
    }
    for a in &agents[n_orig_agents..] {
        prefs.insert(a.clone(), WeakOrder::new(vec![items.clone()]));
    }

    let mut prios = BTreeMap::new();
    for (o, name) in inst.items.iter().enumerate() {
        let mut tiers: Vec<Vec<String>> = inst
            .prios
            .get(name)
            .map(|w| w.tiers().to_vec())
            .unwrap_or_default()
            .into_iter()
            .filter(|t| !t.is_empty())
            .collect();
        let rest: Vec<String> = agents
            .iter()
            .enumerate()
            .filter(|&(i, _)| i >= n_orig_agents || inst.prio_rank[o][i] == UNRANKED)
            .map(|(_, a)| a.clone())
            .collect();
        if !rest.is_empty() {
            tiers.push(rest);
        }
        prios.insert(name.clone(), WeakOrder::new(tiers));
    }
    for a in &inst.agents {
        let others: Vec<String> = agents.iter().filter(|x| *x != a).cloned().collect();
        let mut tiers = vec![vec![a.clone()]];
        if !others.is_empty() {
            tiers.push(others);
        }
        prios.insert(dummy_item_name(a), WeakOrder::new(tiers));
    }

    let completed = Instance::new(agents, items, prefs, prios, true);
    let matrix = p.map(|p| extend_matrix(inst, p, &completed));
    Ok((completed, matrix))
}

fn check_sub_stochastic(inst: &Instance, p: &RandomMatching) -> Result<()> {
    if p.agents() != inst.agents() || p.items() != inst.items() {
        return Err(Error::InvalidMatrix("matrix names do not match the instance".into()));
    }
    let one = rational::one();
    for (i, a) in inst.agents.iter().enumerate() {
        let mut row = rational::zero();
        for (o, name) in inst.items.iter().enumerate() {
            let v = p.get(i, o);
            if rational::is_negative(v) {
                return Err(Error::NotSubStochastic(format!("negative entry at ({a}, {name})")));
            }
            if rational::is_positive(v) && !inst.mutually_acceptable(i, o) {
                return Err(Error::NotSubStochastic(format!("positive entry at unacceptable pair ({a}, {name})")));
            }
            row += v;
        }
        if row > one {
            return Err(Error::NotSubStochastic(format!("row {a} sums to {}", rational::format_rat(&row))));
        }
    }
    for (o, name) in inst.items.iter().enumerate() {
        let col = rational::sum((0..inst.agents.len()).map(|i| p.get(i, o)));
        if col > one {
            return Err(Error::NotSubStochastic(format!("column {name} sums to {}", rational::format_rat(&col))));
        }
    }
    Ok(())
}

fn extend_matrix(inst: &Instance, p: &RandomMatching, completed: &Instance) -> RandomMatching {
    let n = completed.n_agents();
    let n_orig_agents = inst.n_agents();
    let n_orig_items = inst.n_items();
    let mut entries = vec![vec![rational::zero(); n]; n];
    for i in 0..n_orig_agents {
        let mut row = rational::zero();
        for o in 0..n_orig_items {
            entries[i][o] = p.get(i, o).clone();
            row += p.get(i, o);
        }
        entries[i][n_orig_items + i] = rational::one() - row;
    }
    let mut deficit: Vec<Rat> =
        (0..n).map(|o| rational::one() - rational::sum(entries[..n_orig_agents].iter().map(|r| &r[o]))).collect();
    // northwest corner over the dummy rows
    let mut col = 0;
    for row in entries.iter_mut().skip(n_orig_agents) {
        let mut supply = rational::one();
        while rational::is_positive(&supply) && col < n {
            if !rational::is_positive(&deficit[col]) {
                col += 1;
                continue;
            }
            let take = if deficit[col] < supply { deficit[col].clone() } else { supply.clone() };
            row[col] += &take;
            deficit[col] -= &take;
            supply -= &take;
        }
    }
    RandomMatching::new(completed.agents().to_vec(), completed.items().to_vec(), entries)
        .expect("square by construction")
}
