//! Exact cover by 3-sets and the hardness reductions built on it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, WeakOrder};
use crate::randmatch::RandomMatching;
use crate::rational::{rat, Rat};

/// `3n` elements and `3n` triples, every element in exactly three triples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct X3CInstance {
    pub elements: Vec<String>,
    pub sets: Vec<[String; 3]>,
}

impl X3CInstance {
    pub fn new(elements: Vec<String>, sets: Vec<[String; 3]>) -> Self {
        X3CInstance { elements, sets }
    }

    /// `n`, the size of a cover.
    pub fn n(&self) -> usize {
        self.elements.len() / 3
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidX3C(m));
        if !self.elements.len().is_multiple_of(3) {
            return bad(format!("{} elements is not a multiple of 3", self.elements.len()));
        }
        if self.sets.len() != self.elements.len() {
            return bad(format!("{} sets for {} elements", self.sets.len(), self.elements.len()));
        }
        let index = self.element_index();
        if index.len() != self.elements.len() {
            return bad("duplicate element name".into());
        }
        let mut count = vec![0usize; self.elements.len()];
        for (j, set) in self.sets.iter().enumerate() {
            let distinct: BTreeSet<&String> = set.iter().collect();
            if distinct.len() != 3 {
                return bad(format!("set {} repeats an element", j + 1));
            }
            for e in set {
                match index.get(e.as_str()) {
                    Some(&i) => count[i] += 1,
                    None => return bad(format!("set {} names unknown element {e:?}", j + 1)),
                }
            }
        }
        if let Some(i) = count.iter().position(|&c| c != 3) {
            return bad(format!("element {:?} occurs in {} sets", self.elements[i], count[i]));
        }
        Ok(())
    }

    fn element_index(&self) -> HashMap<&str, usize> {
        self.elements.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect()
    }

    /// Element indices of each set, ascending (first, second, third element).
    pub fn sorted_sets(&self) -> Vec<[usize; 3]> {
        let index = self.element_index();
        self.sets
            .iter()
            .map(|s| {
                let mut t = [index[s[0].as_str()], index[s[1].as_str()], index[s[2].as_str()]];
                t.sort_unstable();
                t
            })
            .collect()
    }

    /// For each element, its three `(set, position)` occurrences in scan order.
    pub fn occurrences(&self) -> Vec<Vec<(usize, usize)>> {
        let mut occ = vec![Vec::new(); self.elements.len()];
        for (j, t) in self.sorted_sets().iter().enumerate() {
            for (l, &e) in t.iter().enumerate() {
                occ[e].push((j, l));
            }
        }
        occ
    }

    /// Whether the given set indices form an exact cover.
    pub fn is_cover(&self, chosen: &[usize]) -> bool {
        let mut hit = vec![false; self.elements.len()];
        for &j in chosen {
            for e in self.sorted_sets()[j] {
                if hit[e] {
                    return false;
                }
                hit[e] = true;
            }
        }
        hit.iter().all(|&h| h)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReductionVariant {
    /// Strict preferences, dichotomous priorities.
    StrictDich,
    /// Dichotomous on both sides.
    DichDich,
    /// Incomplete dichotomous lists of length at most 3.
    Deg3,
    /// The strict-dich construction with a deterministic `s` block, for the
    /// consistent-stable-matching question.
    Consistent,
}

impl ReductionVariant {
    pub const ALL: [ReductionVariant; 4] = [
        ReductionVariant::StrictDich,
        ReductionVariant::DichDich,
        ReductionVariant::Deg3,
        ReductionVariant::Consistent,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ReductionVariant::StrictDich => "strict-dich",
            ReductionVariant::DichDich => "dich-dich",
            ReductionVariant::Deg3 => "deg3",
            ReductionVariant::Consistent => "consistent",
        }
    }
}

impl fmt::Display for ReductionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReductionVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReductionVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown reduction variant {s:?}")))
    }
}

#[derive(Default)]
struct Builder {
    agents: Vec<String>,
    items: Vec<String>,
    prefs: BTreeMap<String, WeakOrder>,
    prios: BTreeMap<String, WeakOrder>,
    p: Vec<(String, String, Rat)>,
}

impl Builder {
    fn pref(&mut self, agent: &str, tiers: Vec<Vec<String>>) {
        self.prefs.insert(agent.to_string(), WeakOrder::new(tiers));
    }

    fn prio(&mut self, item: &str, tiers: Vec<Vec<String>>) {
        self.prios.insert(item.to_string(), WeakOrder::new(tiers));
    }

    fn set_p(&mut self, agent: &str, item: &str, v: Rat) {
        self.p.push((agent.to_string(), item.to_string(), v));
    }

    fn finish(self, complete: bool) -> Result<(Instance, RandomMatching)> {
        let mut seen = BTreeSet::new();
        for name in self.agents.iter().chain(&self.items) {
            if !seen.insert(name) {
                return Err(Error::InvalidX3C(format!("element name {name:?} collides with a generated name")));
            }
        }
        let inst = Instance::new(self.agents, self.items, self.prefs, self.prios, complete);
        let p = RandomMatching::from_named(&inst, &self.p)?;
        Ok((inst, p))
    }
}

/// Strict order: the listed names first, then everything else in `universe`
/// lexicographically.
fn strict_then_rest(listed: &[String], universe: &[String]) -> Vec<Vec<String>> {
    let listed_set: BTreeSet<&String> = listed.iter().collect();
    let mut rest: Vec<&String> = universe.iter().filter(|u| !listed_set.contains(u)).collect();
    rest.sort();
    listed.iter().cloned().chain(rest.into_iter().cloned()).map(|s| vec![s]).collect()
}

/// One tie of `top`, then everything else in `universe` as one tie.
fn tie_then_rest(top: &[String], universe: &[String]) -> Vec<Vec<String>> {
    let top_set: BTreeSet<&String> = top.iter().collect();
    let rest: Vec<String> = universe.iter().filter(|u| !top_set.contains(u)).cloned().collect();
    let mut tiers = vec![top.to_vec()];
    if !rest.is_empty() {
        tiers.push(rest);
    }
    tiers.retain(|t| !t.is_empty());
    tiers
}

fn prev(l: usize) -> usize {
    (l + 2) % 3
}

fn next(l: usize) -> usize {
    (l + 1) % 3
}

/// Builds the reduction instance and random matching for `x`.
///
/// Set-gadget names carry 1-based `_j_l` suffixes (set `j`, position `l`);
/// element items keep the element names. The deg3 variant yields an
/// incomplete instance that still has to go through the completion
/// transform.
pub fn gen_x3c_reduction(x: &X3CInstance, v: ReductionVariant) -> Result<(Instance, RandomMatching)> {
    x.validate()?;
    match v {
        ReductionVariant::Deg3 => deg3(x),
        _ => two_sided(x, v),
    }
}

fn two_sided(x: &X3CInstance, v: ReductionVariant) -> Result<(Instance, RandomMatching)> {
    let m = x.sets.len();
    let sets = x.sorted_sets();
    let occ = x.occurrences();
    let n3 = x.elements.len();
    let name = |kind: &str, j: usize, l: usize| format!("{kind}_{}_{}", j + 1, l + 1);
    let elem = |j: usize, l: usize| x.elements[sets[j][l]].clone();

    let mut b = Builder::default();
    b.items.extend(x.elements.iter().cloned());
    for j in 0..m {
        for l in 0..3 {
            b.items.push(name("x", j, l));
        }
        for l in 0..3 {
            b.items.push(name("y", j, l));
        }
    }
    b.items.push("o1".into());
    b.items.push("o2".into());
    for j in 0..m {
        for l in 0..3 {
            b.agents.push(name("c", j, l));
        }
        for l in 0..3 {
            b.agents.push(name("d", j, l));
        }
    }
    for k in 0..n3 {
        b.agents.push(format!("z_{}", k + 1));
    }
    b.agents.push("s1".into());
    b.agents.push("s2".into());

    let items = b.items.clone();
    let agents = b.agents.clone();
    let xs: Vec<String> = (0..m).flat_map(|j| (0..3).map(move |l| (j, l))).map(|(j, l)| name("x", j, l)).collect();
    let ys: Vec<String> = (0..m).flat_map(|j| (0..3).map(move |l| (j, l))).map(|(j, l)| name("y", j, l)).collect();
    let mut xs_lex = xs.clone();
    xs_lex.sort();
    let mut ys_lex = ys.clone();
    ys_lex.sort();

    let strict = v != ReductionVariant::DichDich;
    for j in 0..m {
        for l in 0..3 {
            let c = name("c", j, l);
            let d = name("d", j, l);
            if strict {
                let listed = [elem(j, l), name("y", j, l), name("x", j, prev(l)), name("x", j, l)];
                b.pref(&c, strict_then_rest(&listed, &items));
                b.pref(&d, strict_then_rest(&[name("x", j, l), name("y", j, l)], &items));
            } else {
                let top = [elem(j, l), name("y", j, l), name("x", j, prev(l))];
                b.pref(&c, tie_then_rest(&top, &items));
                b.pref(&d, vec![items.clone()]);
            }
        }
    }
    for k in 0..n3 {
        let z = format!("z_{}", k + 1);
        if strict {
            b.pref(&z, strict_then_rest(&xs_lex, &items));
        } else {
            b.pref(&z, vec![items.clone()]);
        }
    }
    if strict {
        let mut s1: Vec<String> = vec!["o2".into()];
        s1.extend(ys_lex.iter().cloned());
        s1.push("o1".into());
        b.pref("s1", strict_then_rest(&s1, &items));
        b.pref("s2", strict_then_rest(&["o1".into(), "o2".into()], &items));
    } else {
        let mut top: Vec<String> = vec!["o2".into()];
        top.extend(ys.iter().cloned());
        b.pref("s1", tie_then_rest(&top, &items));
        b.pref("s2", vec![items.clone()]);
    }

    for (i, e) in x.elements.iter().enumerate() {
        let top: Vec<String> = occ[i].iter().map(|&(j, l)| name("c", j, l)).collect();
        b.prio(e, tie_then_rest(&top, &agents));
    }
    for j in 0..m {
        for l in 0..3 {
            b.prio(&name("x", j, l), tie_then_rest(&[name("c", j, l), name("c", j, next(l))], &agents));
            b.prio(&name("y", j, l), tie_then_rest(&[name("d", j, l), "s1".into()], &agents));
        }
    }
    b.prio("o1", vec![agents.clone()]);
    b.prio("o2", vec![agents.clone()]);

    let third = rat(1, 3);
    let two_thirds = rat(2, 3);
    for (i, e) in x.elements.iter().enumerate() {
        for &(j, l) in &occ[i] {
            b.set_p(&name("c", j, l), e, third.clone());
        }
    }
    for j in 0..m {
        for l in 0..3 {
            b.set_p(&name("c", j, l), &name("x", j, l), third.clone());
            b.set_p(&name("c", j, l), &name("y", j, l), third.clone());
            b.set_p(&name("d", j, l), &name("x", j, l), third.clone());
            b.set_p(&name("d", j, l), &name("y", j, l), two_thirds.clone());
        }
    }
    if v == ReductionVariant::Consistent {
        b.set_p("s1", "o1", rat(1, 1));
        b.set_p("s2", "o2", rat(1, 1));
    } else {
        b.set_p("s1", "o1", third.clone());
        b.set_p("s2", "o2", third);
        b.set_p("s2", "o1", two_thirds.clone());
        b.set_p("s1", "o2", two_thirds);
    }
    if n3 > 0 {
        let w = rat(1, 3 * n3 as i64);
        for k in 0..n3 {
            for xn in &xs {
                b.set_p(&format!("z_{}", k + 1), xn, w.clone());
            }
        }
    }
    b.finish(true)
}

fn deg3(x: &X3CInstance) -> Result<(Instance, RandomMatching)> {
    let m = x.sets.len();
    let sets = x.sorted_sets();
    let occ = x.occurrences();
    let n3 = x.elements.len();
    let nm = |kind: &str, j: usize, l: usize| format!("{kind}_{}_{}", j + 1, l + 1);
    let z = |i: usize| format!("z_{}", i + 1);
    let elem = |j: usize, l: usize| x.elements[sets[j][l]].clone();
    // o and s of the next / previous position around the cycle of all (j, l)
    let o_next = |j: usize, l: usize| if l < 2 { nm("o", j, l + 1) } else { nm("o", (j + 1) % m, 0) };
    let s_prev = |j: usize, l: usize| if l > 0 { nm("s", j, l - 1) } else { nm("s", (j + m - 1) % m, 2) };

    let mut b = Builder::default();
    b.items.extend(x.elements.iter().cloned());
    for j in 0..m {
        for l in 0..3 {
            for kind in ["g1", "g2", "g3", "x1", "x2", "x3", "x4", "y", "o"] {
                b.items.push(nm(kind, j, l));
            }
            for kind in ["c1", "c2", "c3", "c4", "h1", "h2", "h3", "d", "s"] {
                b.agents.push(nm(kind, j, l));
            }
        }
    }
    b.agents.extend((0..n3).map(z));

    let t = |names: &[String]| names.to_vec();
    for j in 0..m {
        for l in 0..3 {
            let s = |k: &str| nm(k, j, l);
            b.pref(&s("c1"), vec![t(&[s("g2"), nm("x1", j, next(l))]), t(&[s("g1")])]);
            b.pref(&s("c2"), vec![t(&[s("x3"), s("g1")])]);
            b.pref(&s("c3"), vec![t(&[elem(j, l), s("g2"), s("g3")])]);
            b.pref(&s("c4"), vec![t(&[s("y"), s("g3")])]);
            b.pref(&s("h1"), vec![t(&[s("x1"), s("x2")])]);
            b.pref(&s("h2"), vec![t(&[s("x1"), s("x3")])]);
            b.pref(&s("h3"), vec![t(&[s("x3"), s("x4")])]);
            b.pref(&s("d"), vec![t(&[s("x4"), s("y")])]);
            b.pref(&s("s"), vec![t(&[s("o"), s("y")]), t(&[o_next(j, l)])]);

            b.prio(&s("x1"), vec![t(&[s("h2"), nm("c1", j, prev(l))]), t(&[s("h1")])]);
            b.prio(&s("x2"), vec![t(&[s("h1"), z(sets[j][l])])]);
            b.prio(&s("x3"), vec![t(&[s("h2"), s("h3"), s("c2")])]);
            b.prio(&s("x4"), vec![t(&[s("d"), s("h3")])]);
            b.prio(&s("g1"), vec![t(&[s("c1"), s("c2")])]);
            b.prio(&s("g2"), vec![t(&[s("c1"), s("c3")])]);
            b.prio(&s("g3"), vec![t(&[s("c3"), s("c4")])]);
            b.prio(&s("y"), vec![t(&[s("d"), s("s")]), t(&[s("c4")])]);
            b.prio(&s("o"), vec![t(&[s_prev(j, l), s("s")])]);
        }
    }
    for i in 0..n3 {
        let x2s: Vec<String> = occ[i].iter().map(|&(j, l)| nm("x2", j, l)).collect();
        b.pref(&z(i), vec![x2s]);
        let c3s: Vec<String> = occ[i].iter().map(|&(j, l)| nm("c3", j, l)).collect();
        b.prio(&x.elements[i], vec![c3s]);
    }

    let third = rat(1, 3);
    let two = rat(2, 3);
    for (i, e) in x.elements.iter().enumerate() {
        for &(j, l) in &occ[i] {
            b.set_p(&nm("c3", j, l), e, third.clone());
            b.set_p(&z(i), &nm("x2", j, l), third.clone());
        }
    }
    for j in 0..m {
        for l in 0..3 {
            let s = |k: &str| nm(k, j, l);
            for (a, o) in [("c1", "g1"), ("c3", "g2"), ("c3", "g3"), ("c2", "x3"), ("c4", "y")] {
                b.set_p(&s(a), &s(o), third.clone());
            }
            for (a, o) in [("c1", "g2"), ("c2", "g1"), ("c4", "g3")] {
                b.set_p(&s(a), &s(o), two.clone());
            }
            for (a, o) in [("h1", "x1"), ("h2", "x3"), ("h3", "x3"), ("d", "x4")] {
                b.set_p(&s(a), &s(o), third.clone());
            }
            for (a, o) in [("h2", "x1"), ("h1", "x2"), ("h3", "x4"), ("d", "y")] {
                b.set_p(&s(a), &s(o), two.clone());
            }
            b.set_p(&s("s"), &s("o"), two.clone());
            b.set_p(&s("s"), &o_next(j, l), third.clone());
        }
    }
    b.finish(false)
}
