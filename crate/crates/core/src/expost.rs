//! Ex-post stability: enumeration of weakly stable matchings inside the
//! support of a random matching, the column LP that maximises the stable
//! probability mass, and the residual Birkhoff step.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp;
use crate::matching::{self, DeterministicMatching};
use crate::randmatch::{self, birkhoff_decompose, Decomposition, RandomMatching};
use crate::rational::{self, rat, Rat};

/// Default limit on the number of enumerated matchings.
pub const DEFAULT_CAP: usize = 100_000;

/// Above this many stable representatives the LP switches from full
/// enumeration to column generation.
pub const ENUMERATION_LIMIT: usize = 10_000;

/// Search nodes a pricing search may visit per unit of `cap`.
const NODES_PER_CAP: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpostResult {
    pub max_stable_probability: Rat,
    pub decomposition: Decomposition,
    pub is_expost_stable: bool,
    /// Stable matchings offered to the LP: every one up to interchangeable
    /// agents when enumerated, the generated ones otherwise.
    pub columns: usize,
}

const NONE: usize = usize::MAX;

/// Preference ranks, priority tiers and the row of `p`.
type Profile = (Vec<u32>, Vec<u32>, Vec<Rat>);

/// Groups of agents that no instance data can tell apart: identical
/// preferences, the same tier in every item's priority order and identical
/// rows of `p`. Only groups of two or more are returned, members ascending.
pub fn interchangeable_classes(inst: &Instance, p: &RandomMatching) -> Vec<Vec<usize>> {
    let n = inst.n_agents();
    let mut groups: BTreeMap<Profile, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let pref: Vec<u32> = (0..inst.n_items()).map(|o| inst.pref_rank(i, o)).collect();
        let prio: Vec<u32> = (0..inst.n_items()).map(|o| inst.prio_rank(o, i)).collect();
        let row: Vec<Rat> = p.entries()[i].clone();
        groups.entry((pref, prio, row)).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().filter(|g| g.len() > 1).collect();
    out.sort();
    out
}

/// Floating-point bounds closer than this to the incumbent are re-checked
/// exactly.
const SLACK: f64 = 1e-7;

/// Branch-and-bound state for the pricing search: the cheapest weakly
/// stable support matching under the given row weights.
#[derive(Clone, Debug)]
struct Pricing {
    exact: Vec<Vec<Rat>>,
    weight: Vec<Vec<f64>>,
    best: Rat,
    best_f: f64,
    leaves: usize,
    nodes: usize,
}

#[derive(Clone, Debug)]
struct SearchConfig {
    cap: usize,
    first_only: bool,
    classes: Vec<Vec<usize>>,
}

/// Backtracking over agents, most constrained first. Each agent's domain is
/// its support row. Assigning `(i, o)` removes, for every later agent, the
/// items that would create a weak block with the pair just fixed; a residual
/// perfect matching over the remaining domains is maintained incrementally
/// and its absence prunes the node.
struct Search<'a> {
    inst: &'a Instance,
    n: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
    // agents of each item grouped by priority tier, best first
    prio_groups: Vec<Vec<Vec<usize>>>,
    // items of each agent grouped by preference tier, best first
    pref_groups: Vec<Vec<Vec<usize>>>,
    alive: Vec<Vec<bool>>,
    dom: Vec<usize>,
    trail: Vec<(usize, usize)>,
    item_of: Vec<usize>,
    holder: Vec<usize>,
    // (class, position) for agents in an interchangeable class
    class_pos: Vec<Option<(usize, usize)>>,
    cfg: SearchConfig,
    found: Vec<Vec<usize>>,
    pricing: Option<Pricing>,
    wiped: bool,
    seen: Vec<u32>,
    stamp: u32,
}

fn group_by_rank(n: usize, rank: impl Fn(usize) -> u32) -> Vec<Vec<usize>> {
    let mut by: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for k in 0..n {
        by.entry(rank(k)).or_default().push(k);
    }
    by.into_values().collect()
}

impl<'a> Search<'a> {
    fn new(inst: &'a Instance, p: &RandomMatching, cfg: SearchConfig) -> Self {
        let n = inst.n_agents();
        let rows = p.support_adjacency();
        let mut cols = vec![Vec::new(); n];
        for (i, row) in rows.iter().enumerate() {
            for &o in row {
                cols[o].push(i);
            }
        }
        let mut alive = vec![vec![false; n]; n];
        for (i, row) in rows.iter().enumerate() {
            for &o in row {
                alive[i][o] = true;
            }
        }
        let dom = rows.iter().map(Vec::len).collect();
        let prio_groups = (0..n).map(|o| group_by_rank(n, |i| inst.prio_rank(o, i))).collect();
        let pref_groups = (0..n).map(|i| group_by_rank(n, |o| inst.pref_rank(i, o))).collect();
        let mut class_pos = vec![None; n];
        for (c, members) in cfg.classes.iter().enumerate() {
            for (r, &i) in members.iter().enumerate() {
                class_pos[i] = Some((c, r));
            }
        }
        Search {
            inst,
            n,
            rows,
            cols,
            prio_groups,
            pref_groups,
            alive,
            dom,
            trail: Vec::new(),
            item_of: vec![NONE; n],
            holder: vec![NONE; n],
            class_pos,
            cfg,
            found: Vec::new(),
            pricing: None,
            wiped: false,
            seen: vec![0; n],
            stamp: 0,
        }
    }

    fn run(&mut self) -> Result<()> {
        let mut mate_a = vec![NONE; self.n];
        let mut mate_o = vec![NONE; self.n];
        for i in 0..self.n {
            if !self.augment(i, &mut mate_a, &mut mate_o) {
                return Ok(());
            }
        }
        self.descend(0, &mate_a, &mate_o, 0.0)?;
        Ok(())
    }

    fn exact_cost(&self, pr: &Pricing) -> Rat {
        let mut c = rational::zero();
        for (i, &o) in self.item_of.iter().enumerate() {
            if o != NONE {
                c += &pr.exact[i][o];
            }
        }
        c
    }

    /// True when no completion of the current node can beat the best cost.
    fn bounded_out(&self, cost: f64) -> bool {
        let Some(pr) = &self.pricing else { return false };
        let mut bound = cost;
        for j in 0..self.n {
            if self.item_of[j] == NONE {
                bound += self.rows[j]
                    .iter()
                    .filter(|&&o| self.alive[j][o])
                    .map(|&o| pr.weight[j][o])
                    .fold(f64::INFINITY, f64::min);
            }
        }
        if bound < pr.best_f - SLACK {
            return false;
        }
        if bound > pr.best_f + SLACK {
            return true;
        }
        let mut exact = self.exact_cost(pr);
        for j in 0..self.n {
            if self.item_of[j] == NONE {
                let low = self.rows[j].iter().filter(|&&o| self.alive[j][o]).map(|&o| &pr.exact[j][o]).min();
                exact += low.expect("open agents keep an item");
            }
        }
        exact >= pr.best
    }

    fn remove(&mut self, j: usize, q: usize) {
        if self.alive[j][q] {
            self.alive[j][q] = false;
            self.dom[j] -= 1;
            self.trail.push((j, q));
            if self.dom[j] == 0 && self.item_of[j] == NONE {
                self.wiped = true;
            }
        }
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (j, q) = self.trail.pop().expect("len > mark");
            self.alive[j][q] = true;
            self.dom[j] += 1;
        }
        self.wiped = false;
    }

    fn canonical_ok(&self, i: usize, o: usize) -> bool {
        let Some((c, r)) = self.class_pos[i] else { return true };
        self.cfg.classes[c].iter().enumerate().all(|(s, &k)| {
            let q = self.item_of[k];
            q == NONE || (s < r && q < o) || (s > r && q > o) || s == r
        })
    }

    /// Fixes `(i, o)` and propagates; false when some pair already blocks or
    /// an open agent is left without items.
    fn assign(&mut self, i: usize, o: usize) -> bool {
        let inst = self.inst;
        self.item_of[i] = o;
        self.holder[o] = i;
        for idx in 0..self.cols[o].len() {
            let j = self.cols[o][idx];
            if j != i {
                self.remove(j, o);
            }
        }
        // agents ranked above i at o may not end below o
        let tier_i = inst.prio_rank(o, i);
        for g in 0..self.prio_groups[o].len() {
            let group_rank = inst.prio_rank(o, self.prio_groups[o][g][0]);
            if group_rank >= tier_i {
                break;
            }
            for gi in 0..self.prio_groups[o][g].len() {
                let k = self.prio_groups[o][g][gi];
                if self.item_of[k] != NONE {
                    if inst.prefers(k, o, self.item_of[k]) {
                        return false;
                    }
                    continue;
                }
                for idx in 0..self.rows[k].len() {
                    let q = self.rows[k][idx];
                    if inst.prefers(k, o, q) {
                        self.remove(k, q);
                    }
                }
            }
        }
        // items i prefers to o may not go to agents below i
        let tier_o = inst.pref_rank(i, o);
        for g in 0..self.pref_groups[i].len() {
            let group_rank = inst.pref_rank(i, self.pref_groups[i][g][0]);
            if group_rank >= tier_o {
                break;
            }
            for gi in 0..self.pref_groups[i][g].len() {
                let q = self.pref_groups[i][g][gi];
                let h = self.holder[q];
                if h != NONE {
                    if inst.prioritizes(q, i, h) {
                        return false;
                    }
                    continue;
                }
                for idx in 0..self.cols[q].len() {
                    let j = self.cols[q][idx];
                    if self.item_of[j] == NONE && inst.prioritizes(q, i, j) {
                        self.remove(j, q);
                    }
                }
            }
        }
        !self.wiped
    }

    fn unassign(&mut self, i: usize, o: usize) {
        self.item_of[i] = NONE;
        self.holder[o] = NONE;
    }

    fn augment(&mut self, u: usize, mate_a: &mut [usize], mate_o: &mut [usize]) -> bool {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.stamp = 1;
        }
        self.kuhn(u, mate_a, mate_o)
    }

    fn kuhn(&mut self, u: usize, mate_a: &mut [usize], mate_o: &mut [usize]) -> bool {
        for idx in 0..self.rows[u].len() {
            let q = self.rows[u][idx];
            if !self.alive[u][q] || self.seen[q] == self.stamp {
                continue;
            }
            self.seen[q] = self.stamp;
            let w = mate_o[q];
            if w == NONE || self.kuhn(w, mate_a, mate_o) {
                mate_a[u] = q;
                mate_o[q] = u;
                return true;
            }
        }
        false
    }

    /// Residual perfect matching of the open agents after fixing `(i, o)`.
    fn repair(&mut self, i: usize, o: usize, mate_a: &mut [usize], mate_o: &mut [usize]) -> bool {
        let prev = mate_a[i];
        if prev != NONE {
            mate_o[prev] = NONE;
            mate_a[i] = NONE;
        }
        let k = mate_o[o];
        if k != NONE {
            mate_a[k] = NONE;
            mate_o[o] = NONE;
        }
        let mut free = Vec::new();
        for j in 0..self.n {
            if self.item_of[j] != NONE {
                continue;
            }
            let q = mate_a[j];
            if q == NONE {
                free.push(j);
            } else if !self.alive[j][q] {
                mate_a[j] = NONE;
                mate_o[q] = NONE;
                free.push(j);
            }
        }
        free.into_iter().all(|j| self.augment(j, mate_a, mate_o))
    }

    fn pick_agent(&self) -> Option<usize> {
        (0..self.n).filter(|&j| self.item_of[j] == NONE).min_by_key(|&j| (self.dom[j], j))
    }

    /// Returns true when the search should stop.
    fn descend(&mut self, depth: usize, mate_a: &[usize], mate_o: &[usize], cost: f64) -> Result<bool> {
        if let Some(pr) = &mut self.pricing {
            pr.nodes += 1;
            if pr.nodes > self.cfg.cap.saturating_mul(NODES_PER_CAP) {
                return Err(Error::CapExceeded { cap: self.cfg.cap });
            }
        }
        if self.bounded_out(cost) {
            return Ok(false);
        }
        if depth == self.n {
            let m = DeterministicMatching::from_assignment(self.item_of.clone())?;
            if let Some(mut pr) = self.pricing.take() {
                if matching::is_weakly_stable_fast(self.inst, &m) {
                    pr.leaves += 1;
                    let c = self.exact_cost(&pr);
                    if c < pr.best {
                        pr.best_f = rational::to_f64(&c);
                        pr.best = c;
                        self.found.push(self.item_of.clone());
                    }
                }
                let over = pr.leaves > self.cfg.cap;
                self.pricing = Some(pr);
                return if over { Err(Error::CapExceeded { cap: self.cfg.cap }) } else { Ok(false) };
            }
            if matching::is_weakly_stable_fast(self.inst, &m) {
                self.found.push(self.item_of.clone());
                if self.found.len() > self.cfg.cap {
                    return Err(Error::CapExceeded { cap: self.cfg.cap });
                }
                return Ok(self.cfg.first_only);
            }
            return Ok(false);
        }
        let Some(i) = self.pick_agent() else { return Ok(false) };
        let mut candidates: Vec<usize> = self.rows[i].iter().copied().filter(|&o| self.alive[i][o]).collect();
        if let Some(pr) = &self.pricing {
            candidates.sort_by(|&x, &y| pr.weight[i][x].total_cmp(&pr.weight[i][y]).then(x.cmp(&y)));
        }
        for o in candidates {
            let step = self.pricing.as_ref().map_or(0.0, |pr| pr.weight[i][o]);
            if !self.canonical_ok(i, o) {
                continue;
            }
            let mark = self.trail.len();
            let mut stop = false;
            if self.assign(i, o) {
                let mut a = mate_a.to_vec();
                let mut b = mate_o.to_vec();
                if self.repair(i, o, &mut a, &mut b) {
                    stop = self.descend(depth + 1, &a, &b, cost + step)?;
                }
            }
            self.undo(mark);
            self.unassign(i, o);
            if stop {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

fn search(inst: &Instance, p: &RandomMatching, cfg: SearchConfig) -> Result<Vec<DeterministicMatching>> {
    let mut s = Search::new(inst, p, cfg);
    s.run()?;
    let mut raw = s.found;
    raw.sort();
    raw.into_iter().map(DeterministicMatching::from_assignment).collect()
}

/// Every weakly stable perfect matching whose pairs all have positive
/// probability in `p`, sorted by assignment vector. Fails with
/// [`Error::CapExceeded`] once more than `cap` are found.
pub fn enumerate_stable_support_matchings(
    inst: &Instance,
    p: &RandomMatching,
    cap: usize,
) -> Result<Vec<DeterministicMatching>> {
    randmatch::require_valid(inst, p)?;
    search(inst, p, SearchConfig { cap, first_only: false, classes: Vec::new() })
}

/// One representative per orbit under permutations of interchangeable agents.
pub fn enumerate_stable_support_representatives(
    inst: &Instance,
    p: &RandomMatching,
    cap: usize,
) -> Result<(Vec<DeterministicMatching>, Vec<Vec<usize>>)> {
    randmatch::require_valid(inst, p)?;
    let classes = interchangeable_classes(inst, p);
    let reps = search(inst, p, SearchConfig { cap, first_only: false, classes: classes.clone() })?;
    Ok((reps, classes))
}

/// A weakly stable matching consistent with `p`, if any.
pub fn find_consistent_stable(inst: &Instance, p: &RandomMatching) -> Result<Option<DeterministicMatching>> {
    randmatch::require_valid(inst, p)?;
    let classes = interchangeable_classes(inst, p);
    let found = search(inst, p, SearchConfig { cap: DEFAULT_CAP, first_only: true, classes })?;
    Ok(found.into_iter().next())
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Cyclic shifts of every class's assignment; shift `t` moves member `r`
/// to the item of member `r + t`. Every member meets every class item
/// equally often over the `lcm` of the class sizes.
fn orbit_shifts(m: &DeterministicMatching, classes: &[Vec<usize>]) -> Vec<DeterministicMatching> {
    let period = classes.iter().fold(1, |acc, c| acc / gcd(acc, c.len()) * c.len());
    (0..period)
        .map(|t| {
            let mut item_of = m.assignment().to_vec();
            for c in classes {
                let k = c.len();
                for (r, &agent) in c.iter().enumerate() {
                    item_of[agent] = m.item_of(c[(r + t) % k]);
                }
            }
            DeterministicMatching::from_assignment(item_of).expect("permutation of a permutation")
        })
        .collect()
}

/// Maximum total weight `Σ λ_S` of stable columns packed below `p`.
fn pack(p: &RandomMatching, columns: &[DeterministicMatching]) -> lp::PackingSolution {
    let n = p.n();
    let mut row_id: HashMap<(usize, usize), usize> = HashMap::new();
    let mut rhs = Vec::new();
    for (i, o) in p.support() {
        row_id.insert((i, o), rhs.len());
        rhs.push(p.get(i, o).clone());
    }
    let cols: Vec<Vec<usize>> = columns.iter().map(|m| (0..n).map(|i| row_id[&(i, m.item_of(i))]).collect()).collect();
    lp::solve_packing(&rhs, &cols)
}

/// The packing LP with one shared row per (class, item): the right-hand side
/// is the class's total mass on the item.
fn pack_aggregated(p: &RandomMatching, reps: &[DeterministicMatching], classes: &[Vec<usize>]) -> lp::PackingSolution {
    let n = p.n();
    let mut class_of = vec![NONE; n];
    for (c, members) in classes.iter().enumerate() {
        for &i in members {
            class_of[i] = c;
        }
    }
    let key = |i: usize, o: usize| if class_of[i] == NONE { (0, i, o) } else { (1, class_of[i], o) };
    let mut row_id: HashMap<(u8, usize, usize), usize> = HashMap::new();
    let mut rhs: Vec<Rat> = Vec::new();
    for (i, o) in p.support() {
        let k = key(i, o);
        match row_id.get(&k) {
            Some(&r) => rhs[r] += p.get(i, o),
            None => {
                row_id.insert(k, rhs.len());
                rhs.push(p.get(i, o).clone());
            }
        }
    }
    let cols: Vec<Vec<usize>> = reps.iter().map(|m| (0..n).map(|i| row_id[&key(i, m.item_of(i))]).collect()).collect();
    lp::solve_packing(&rhs, &cols)
}

type StablePart = (Rat, Vec<(Rat, DeterministicMatching)>, usize);

/// Optimal stable part over all enumerated representatives. With
/// interchangeable agents the aggregated LP is solved first, then its
/// positive representatives are expanded into their cyclic shifts and the
/// plain LP is re-solved over those for a basic solution.
fn enumerated_part(p: &RandomMatching, reps: Vec<DeterministicMatching>, classes: &[Vec<usize>]) -> StablePart {
    let n_cols = reps.len();
    if classes.is_empty() {
        let sol = pack(p, &reps);
        let terms = sol.positive().into_iter().map(|j| (sol.weights[j].clone(), reps[j].clone())).collect();
        return (sol.value, terms, n_cols);
    }
    let agg = pack_aggregated(p, &reps, classes);
    let mut expanded: BTreeMap<DeterministicMatching, ()> = BTreeMap::new();
    for j in agg.positive() {
        for m in orbit_shifts(&reps[j], classes) {
            expanded.insert(m, ());
        }
    }
    let columns: Vec<DeterministicMatching> = expanded.into_keys().collect();
    let sol = pack(p, &columns);
    debug_assert_eq!(sol.value, agg.value);
    let terms = sol.positive().into_iter().map(|j| (sol.weights[j].clone(), columns[j].clone())).collect();
    (sol.value, terms, n_cols)
}

/// Enumerates when there are at most [`ENUMERATION_LIMIT`] representatives
/// (and at most `cap`), otherwise generates columns.
fn stable_part(inst: &Instance, p: &RandomMatching, cap: usize) -> Result<StablePart> {
    let classes = interchangeable_classes(inst, p);
    let limit = cap.min(ENUMERATION_LIMIT);
    match search(inst, p, SearchConfig { cap: limit, first_only: false, classes: classes.clone() }) {
        Ok(reps) => Ok(enumerated_part(p, reps, &classes)),
        Err(Error::CapExceeded { .. }) => generated_part(inst, p, cap),
        Err(e) => Err(e),
    }
}

/// Cheapest-first pricing: weakly stable support matchings whose total
/// weight under `duals` is below `below`, and the number of stable leaves
/// seen.
fn price(
    inst: &Instance,
    p: &RandomMatching,
    duals: Vec<Vec<Rat>>,
    below: Rat,
    budget: usize,
) -> Result<(Vec<DeterministicMatching>, usize)> {
    let weight = duals.iter().map(|row| row.iter().map(rational::to_f64).collect()).collect();
    let best_f = rational::to_f64(&below);
    let mut s = Search::new(inst, p, SearchConfig { cap: budget, first_only: false, classes: Vec::new() });
    s.pricing = Some(Pricing { exact: duals, weight, best: below, best_f, leaves: 0, nodes: 0 });
    s.run()?;
    let leaves = s.pricing.as_ref().map_or(0, |pr| pr.leaves);
    let found = s.found.into_iter().map(DeterministicMatching::from_assignment).collect::<Result<_>>()?;
    Ok((found, leaves))
}

fn dual_matrix<T>(n: usize, support: &[(usize, usize)], duals: &[T], conv: impl Fn(&T) -> Rat) -> Vec<Vec<Rat>> {
    let mut out = vec![vec![rational::zero(); n]; n];
    for (r, &(i, o)) in support.iter().enumerate() {
        out[i][o] = conv(&duals[r]);
    }
    out
}

/// Optimal stable part by column generation. A floating-point master LP
/// and pricing search collect columns cheaply; the exact LP over them is
/// then re-priced with exact duals until no weakly stable support matching
/// has dual weight below one. `cap` bounds the stable matchings visited by
/// all pricing searches together.
fn generated_part(inst: &Instance, p: &RandomMatching, cap: usize) -> Result<StablePart> {
    let price = |duals, below, budget| {
        price(inst, p, duals, below, budget).map_err(|e| match e {
            Error::CapExceeded { .. } => Error::CapExceeded { cap },
            e => e,
        })
    };
    let n = p.n();
    let support = p.support();
    let mut row_id = vec![vec![NONE; n]; n];
    for (r, &(i, o)) in support.iter().enumerate() {
        row_id[i][o] = r;
    }
    let rows_of = |m: &DeterministicMatching| -> Vec<usize> { m.pairs().map(|(i, o)| row_id[i][o]).collect() };
    let mut columns = search(inst, p, SearchConfig { cap, first_only: true, classes: Vec::new() })?;
    if columns.is_empty() {
        return Ok((rational::zero(), Vec::new(), 0));
    }
    let mut visited = 0;

    let mut master = lp::PackingLp::<f64>::new(
        support.iter().map(|&(i, o)| rational::to_f64(p.get(i, o))).collect(),
        lp::PivotRule::LargestGain,
    );
    master.add_column(rows_of(&columns[0]));
    let below = rational::one() - rat(1, 1_000_000_000);
    loop {
        let sol = master.solve();
        if sol.value >= 1.0 - 1e-9 {
            break;
        }
        let duals = dual_matrix(n, &support, &sol.duals, |y| Rat::from_float(*y).unwrap_or_else(rational::zero));
        let (fresh, seen) = price(duals, below.clone(), cap.saturating_sub(visited))?;
        visited += seen;
        if fresh.is_empty() {
            break;
        }
        for m in fresh {
            master.add_column(rows_of(&m));
            columns.push(m);
        }
    }

    let rhs: Vec<Rat> = support.iter().map(|&(i, o)| p.get(i, o).clone()).collect();
    loop {
        let sol = lp::solve_packing(&rhs, &columns.iter().map(rows_of).collect::<Vec<_>>());
        let fresh = if sol.value == rational::one() {
            Vec::new()
        } else {
            let duals = dual_matrix(n, &support, &sol.duals, Rat::clone);
            let (fresh, seen) = price(duals, rational::one(), cap.saturating_sub(visited))?;
            visited += seen;
            fresh
        };
        if fresh.is_empty() {
            let terms = sol.positive().into_iter().map(|j| (sol.weights[j].clone(), columns[j].clone())).collect();
            return Ok((sol.value, terms, columns.len()));
        }
        columns.extend(fresh);
    }
}

/// The decomposition of `p` with the largest possible probability of
/// drawing a weakly stable matching, using [`DEFAULT_CAP`].
pub fn max_stable_decomposition(inst: &Instance, p: &RandomMatching) -> Result<ExpostResult> {
    max_stable_decomposition_with_cap(inst, p, DEFAULT_CAP)
}

pub fn max_stable_decomposition_with_cap(inst: &Instance, p: &RandomMatching, cap: usize) -> Result<ExpostResult> {
    randmatch::require_valid(inst, p)?;
    let (value, mut terms, columns) = stable_part(inst, p, cap)?;
    let one = rational::one();
    if value < one {
        let n = p.n();
        let mut rest: Vec<Vec<Rat>> = p.entries().to_vec();
        for (w, m) in &terms {
            for (i, o) in m.pairs() {
                rest[i][o] -= w;
            }
        }
        let scale = &one - &value;
        for row in rest.iter_mut() {
            for v in row.iter_mut() {
                *v /= &scale;
            }
        }
        let p_rest = RandomMatching::new(p.agents().to_vec(), p.items().to_vec(), rest)?;
        let d = birkhoff_decompose(&p_rest)?;
        debug_assert_eq!(d.agents.len(), n);
        terms.extend(d.terms.into_iter().map(|t| (t.weight * &scale, t.matching)));
    }
    let decomposition = Decomposition::new(p.agents().to_vec(), p.items().to_vec(), terms, Some(inst));
    debug_assert_eq!(decomposition.stable_probability, value);
    Ok(ExpostResult { is_expost_stable: value == one, max_stable_probability: value, decomposition, columns })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{fixtures, gen_example1};
    use crate::randmatch::recombine;
    use crate::rational::{int, rat};

    #[test]
    fn example1_improved_has_exactly_m1_m2() {
        let ex = gen_example1();
        let all = enumerate_stable_support_matchings(&ex.instance, &ex.p_improved, DEFAULT_CAP).unwrap();
        let mut want = vec![ex.m1.clone(), ex.m2.clone()];
        want.sort();
        assert_eq!(all, want);
    }

    #[test]
    fn example1_improved_decomposes_into_halves() {
        let ex = gen_example1();
        let r = max_stable_decomposition(&ex.instance, &ex.p_improved).unwrap();
        assert!(r.is_expost_stable);
        assert_eq!(r.max_stable_probability, int(1));
        assert_eq!(r.decomposition.len(), 2);
        assert!(r.decomposition.terms.iter().all(|t| t.weight == rat(1, 2) && t.weakly_stable));
        assert_eq!(recombine(&r.decomposition, 4).unwrap(), ex.p_improved);
    }

    #[test]
    fn example1_uniform_is_expost_stable() {
        let ex = gen_example1();
        let r = max_stable_decomposition(&ex.instance, &ex.p_uniform).unwrap();
        assert_eq!(r.max_stable_probability, int(1));
        assert_eq!(recombine(&r.decomposition, 4).unwrap(), ex.p_uniform);
    }

    #[test]
    fn agree2_half_half_is_half_stable() {
        let inst = fixtures::agree2();
        let p = fixtures::half_half(&inst);
        let (id, swap) = fixtures::both_matchings_2();
        assert_eq!(enumerate_stable_support_matchings(&inst, &p, 10).unwrap(), vec![id.clone()]);
        let r = max_stable_decomposition(&inst, &p).unwrap();
        assert_eq!(r.max_stable_probability, rat(1, 2));
        assert!(!r.is_expost_stable);
        assert_eq!(r.decomposition.len(), 2);
        let stable = r.decomposition.terms.iter().find(|t| t.weakly_stable).unwrap();
        assert_eq!((stable.weight.clone(), &stable.matching), (rat(1, 2), &id));
        let unstable = r.decomposition.terms.iter().find(|t| !t.weakly_stable).unwrap();
        assert_eq!((unstable.weight.clone(), &unstable.matching), (rat(1, 2), &swap));
    }

    #[test]
    fn consistent_stable_lookup() {
        let ex = gen_example1();
        let m = find_consistent_stable(&ex.instance, &ex.p_improved).unwrap().unwrap();
        assert!(m == ex.m1 || m == ex.m2);
        let inst = fixtures::agree2();
        let (id, swap) = fixtures::both_matchings_2();
        let p_swap = swap.to_matrix(inst.agents(), inst.items());
        assert_eq!(find_consistent_stable(&inst, &p_swap).unwrap(), None);
        let p_id = id.to_matrix(inst.agents(), inst.items());
        assert_eq!(find_consistent_stable(&inst, &p_id).unwrap(), Some(id.clone()));
        let r = max_stable_decomposition(&inst, &p_id).unwrap();
        assert_eq!(r.decomposition.len(), 1);
        assert_eq!(r.max_stable_probability, int(1));
    }

    #[test]
    fn column_generation_agrees_with_enumeration() {
        let ex = gen_example1();
        for p in [&ex.p_improved, &ex.p_uniform] {
            let (value, terms, _) = generated_part(&ex.instance, p, DEFAULT_CAP).unwrap();
            assert_eq!(value, int(1));
            let weighted: Vec<(Rat, &DeterministicMatching)> = terms.iter().map(|(w, m)| (w.clone(), m)).collect();
            assert_eq!(RandomMatching::from_mixture(p.agents(), p.items(), &weighted).unwrap(), *p);
            assert!(terms.iter().all(|(_, m)| matching::is_weakly_stable_fast(&ex.instance, m)));
        }
        let inst = fixtures::agree2();
        let (value, _, _) = generated_part(&inst, &fixtures::half_half(&inst), DEFAULT_CAP).unwrap();
        assert_eq!(value, rat(1, 2));
    }

    #[test]
    fn cap_is_enforced() {
        let ex = gen_example1();
        let err = enumerate_stable_support_matchings(&ex.instance, &ex.p_uniform, 3).unwrap_err();
        assert_eq!(err, Error::CapExceeded { cap: 3 });
    }

    #[test]
    fn orbit_shifts_cover_each_item_equally() {
        let m = DeterministicMatching::from_assignment(vec![2, 0, 1, 3]).unwrap();
        let shifts = orbit_shifts(&m, &[vec![0, 1, 2]]);
        assert_eq!(shifts.len(), 3);
        for agent in 0..3 {
            let mut got: Vec<usize> = shifts.iter().map(|s| s.item_of(agent)).collect();
            got.sort();
            assert_eq!(got, vec![0, 1, 2]);
        }
        assert!(shifts.iter().all(|s| s.item_of(3) == 3));
    }
}
