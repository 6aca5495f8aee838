//! Random matchings (exact bistochastic matrices), Birkhoff–von Neumann
//! decomposition and recombination.

use crate::bipartite;
use crate::error::{Error, Result};
use crate::instance::{Instance, ValidationReport, Violation};
use crate::matching::{self, DeterministicMatching};
use crate::rational::{self, Rat};

/// Dense agents × items matrix of exact probabilities. Sub-stochastic
/// rectangular matrices are representable so that incomplete instances can be
/// completed; every algorithm past completion expects a square bistochastic one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomMatching {
    agents: Vec<String>,
    items: Vec<String>,
    entries: Vec<Vec<Rat>>,
}

impl RandomMatching {
    pub fn new(agents: Vec<String>, items: Vec<String>, entries: Vec<Vec<Rat>>) -> Result<Self> {
        if entries.len() != agents.len() {
            return Err(Error::DimensionMismatch { expected: agents.len(), found: entries.len() });
        }
        if let Some(row) = entries.iter().find(|r| r.len() != items.len()) {
            return Err(Error::DimensionMismatch { expected: items.len(), found: row.len() });
        }
        Ok(RandomMatching { agents, items, entries })
    }

    /// All-zero matrix over the instance's agents and items.
    pub fn zeros(inst: &Instance) -> Self {
        RandomMatching {
            agents: inst.agents().to_vec(),
            items: inst.items().to_vec(),
            entries: vec![vec![rational::zero(); inst.n_items()]; inst.n_agents()],
        }
    }

    /// Builds a matrix over the instance's names from sparse `(agent, item, p)`
    /// triples; unknown names are an error, absent pairs are 0.
    pub fn from_named<A: AsRef<str>, B: AsRef<str>>(inst: &Instance, triples: &[(A, B, Rat)]) -> Result<Self> {
        let mut p = Self::zeros(inst);
        for (a, o, v) in triples {
            let (a, o) = (a.as_ref(), o.as_ref());
            let i = inst.agent_index(a).ok_or_else(|| Error::InvalidMatrix(format!("unknown agent {a:?}")))?;
            let oi = inst.item_index(o).ok_or_else(|| Error::InvalidMatrix(format!("unknown item {o:?}")))?;
            if rational::is_positive(&p.entries[i][oi]) {
                return Err(Error::InvalidMatrix(format!("duplicate entry ({a}, {o})")));
            }
            p.entries[i][oi] = v.clone();
        }
        Ok(p)
    }

    /// Uniform mixture `Σ w_k M_k` over the given names.
    pub fn from_mixture(agents: &[String], items: &[String], terms: &[(Rat, &DeterministicMatching)]) -> Result<Self> {
        let mut entries = vec![vec![rational::zero(); items.len()]; agents.len()];
        for (w, m) in terms {
            if m.n() != agents.len() || m.n() != items.len() {
                return Err(Error::DimensionMismatch { expected: agents.len(), found: m.n() });
            }
            for (i, o) in m.pairs() {
                entries[i][o] += w;
            }
        }
        Self::new(agents.to_vec(), items.to_vec(), entries)
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    /// Number of rows.
    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn is_square(&self) -> bool {
        self.agents.len() == self.items.len()
    }

    #[inline]
    pub fn get(&self, i: usize, o: usize) -> &Rat {
        &self.entries[i][o]
    }

    pub fn get_named(&self, agent: &str, item: &str) -> Option<&Rat> {
        let i = self.agents.iter().position(|a| a == agent)?;
        let o = self.items.iter().position(|x| x == item)?;
        Some(&self.entries[i][o])
    }

    pub fn entries(&self) -> &[Vec<Rat>] {
        &self.entries
    }

    #[inline]
    pub fn in_support(&self, i: usize, o: usize) -> bool {
        rational::is_positive(&self.entries[i][o])
    }

    /// Positive pairs in row-major order.
    pub fn support(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.entries.iter().enumerate() {
            for (o, v) in row.iter().enumerate() {
                if rational::is_positive(v) {
                    out.push((i, o));
                }
            }
        }
        out
    }

    /// `adj[i]` = items in agent `i`'s support row, ascending.
    pub fn support_adjacency(&self) -> Vec<Vec<usize>> {
        self.entries.iter().map(|row| (0..row.len()).filter(|&o| rational::is_positive(&row[o])).collect()).collect()
    }

    /// The matrix with rows and columns relabelled to the instance's order.
    pub fn aligned_to(&self, inst: &Instance) -> Result<Self> {
        if self.agents == inst.agents() && self.items == inst.items() {
            return Ok(self.clone());
        }
        let mut sorted_a = self.agents.clone();
        let mut sorted_b = inst.agents().to_vec();
        sorted_a.sort();
        sorted_b.sort();
        let mut sorted_c = self.items.clone();
        let mut sorted_d = inst.items().to_vec();
        sorted_c.sort();
        sorted_d.sort();
        if sorted_a != sorted_b || sorted_c != sorted_d {
            return Err(Error::InvalidMatrix("matrix names do not match the instance".into()));
        }
        let mut out = Self::zeros(inst);
        for (r, a) in self.agents.iter().enumerate() {
            let i = inst.agent_index(a).expect("checked");
            for (c, o) in self.items.iter().enumerate() {
                let oi = inst.item_index(o).expect("checked");
                out.entries[i][oi] = self.entries[r][c].clone();
            }
        }
        Ok(out)
    }

    /// Eqs. (1)–(3) without reference to an instance.
    pub fn check_bistochastic(&self) -> ValidationReport {
        let mut v = Vec::new();
        if !self.is_square() {
            v.push(Violation {
                code: "not-square".into(),
                detail: format!("{} agents, {} items", self.agents.len(), self.items.len()),
            });
        }
        let one = rational::one();
        for (i, row) in self.entries.iter().enumerate() {
            for (o, x) in row.iter().enumerate() {
                if rational::is_negative(x) {
                    v.push(Violation {
                        code: "negative-entry".into(),
                        detail: format!("({}, {}) = {}", self.agents[i], self.items[o], rational::format_rat(x)),
                    });
                }
            }
            let s = rational::sum(row.iter());
            if s != one {
                v.push(Violation {
                    code: "row-sum".into(),
                    detail: format!("row {} sums to {}", self.agents[i], rational::format_rat(&s)),
                });
            }
        }
        for (o, name) in self.items.iter().enumerate() {
            let s = rational::sum(self.entries.iter().map(|r| &r[o]));
            if s != one {
                v.push(Violation {
                    code: "column-sum".into(),
                    detail: format!("column {name} sums to {}", rational::format_rat(&s)),
                });
            }
        }
        ValidationReport::from_violations(v)
    }

    pub fn require_bistochastic(&self) -> Result<()> {
        let r = self.check_bistochastic();
        if r.ok {
            Ok(())
        } else {
            Err(Error::InvalidMatrix(r.violations.iter().map(|v| v.detail.clone()).collect::<Vec<_>>().join("; ")))
        }
    }
}

/// Eqs. (1)–(3) exactly, plus name agreement with `inst`.
pub fn validate_random_matching(inst: &Instance, p: &RandomMatching) -> ValidationReport {
    let mut v = Vec::new();
    if p.agents() != inst.agents() || p.items() != inst.items() {
        v.push(Violation {
            code: "name-mismatch".into(),
            detail: "matrix agents/items differ from the instance".into(),
        });
        return ValidationReport::from_violations(v);
    }
    v.extend(p.check_bistochastic().violations);
    ValidationReport::from_violations(v)
}

/// Complete instance plus a bistochastic matrix over it; the common
/// precondition of all decision procedures.
pub(crate) fn require_valid(inst: &Instance, p: &RandomMatching) -> Result<()> {
    inst.require_complete()?;
    let r = validate_random_matching(inst, p);
    if r.ok {
        Ok(())
    } else {
        Err(Error::InvalidMatrix(r.violations.iter().map(|v| v.detail.clone()).collect::<Vec<_>>().join("; ")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub weight: Rat,
    pub matching: DeterministicMatching,
    pub weakly_stable: bool,
    pub strongly_stable: bool,
}

/// A lottery over deterministic matchings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub agents: Vec<String>,
    pub items: Vec<String>,
    pub terms: Vec<Term>,
    /// Total weight of the weakly stable terms.
    pub stable_probability: Rat,
}

impl Decomposition {
    /// Builds a decomposition; stability flags are computed when an instance
    /// is supplied and left false otherwise.
    pub fn new(
        agents: Vec<String>,
        items: Vec<String>,
        weighted: Vec<(Rat, DeterministicMatching)>,
        inst: Option<&Instance>,
    ) -> Self {
        let terms = weighted
            .into_iter()
            .map(|(weight, matching)| Term { weight, matching, weakly_stable: false, strongly_stable: false })
            .collect();
        let mut d = Decomposition { agents, items, terms, stable_probability: rational::zero() };
        if let Some(inst) = inst {
            d.annotate(inst);
        }
        d
    }

    /// Fills the stability flags and `stable_probability` from `inst`.
    pub fn annotate(&mut self, inst: &Instance) {
        for t in &mut self.terms {
            t.weakly_stable = matching::is_weakly_stable_fast(inst, &t.matching);
            t.strongly_stable = matching::is_strongly_stable_fast(inst, &t.matching);
        }
        self.stable_probability = rational::sum(self.terms.iter().filter(|t| t.weakly_stable).map(|t| &t.weight));
    }

    pub fn total_weight(&self) -> Rat {
        rational::sum(self.terms.iter().map(|t| &t.weight))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Positive weights summing to one.
    pub fn weights_ok(&self) -> bool {
        self.terms.iter().all(|t| rational::is_positive(&t.weight)) && self.total_weight() == rational::one()
    }
}

/// Greedy Birkhoff–von Neumann: repeatedly take a perfect matching inside
/// the current support and subtract its minimum entry. Every step zeroes at
/// least one entry and leaves a scaled bistochastic matrix in a proper face,
/// so at most `(n-1)² + 1` terms are produced.
pub fn birkhoff_decompose(p: &RandomMatching) -> Result<Decomposition> {
    p.require_bistochastic()?;
    let weighted = birkhoff_terms(p.entries())?;
    Ok(Decomposition::new(p.agents().to_vec(), p.items().to_vec(), weighted, None))
}

/// Birkhoff on a nonnegative square matrix with equal row and column sums
/// (not necessarily 1). Weights sum to that common value.
pub(crate) fn birkhoff_terms(entries: &[Vec<Rat>]) -> Result<Vec<(Rat, DeterministicMatching)>> {
    let n = entries.len();
    let mut rem: Vec<Vec<Rat>> = entries.to_vec();
    let mut out = Vec::new();
    loop {
        let adj: Vec<Vec<usize>> =
            rem.iter().map(|row| (0..n).filter(|&o| rational::is_positive(&row[o])).collect()).collect();
        if adj.iter().all(Vec::is_empty) {
            break;
        }
        let perm = bipartite::perfect_matching(n, &adj, |_, _| true).ok_or_else(|| {
            Error::InvalidMatrix("support admits no perfect matching; matrix is not bistochastic".into())
        })?;
        let w = perm.iter().enumerate().map(|(i, &o)| &rem[i][o]).min().expect("n >= 1").clone();
        for (i, &o) in perm.iter().enumerate() {
            rem[i][o] -= &w;
        }
        out.push((w, DeterministicMatching::from_assignment(perm)?));
    }
    Ok(out)
}

/// `Σ λ_j M_j` entrywise.
pub fn recombine(d: &Decomposition, n: usize) -> Result<RandomMatching> {
    if d.agents.len() != n || d.items.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: d.agents.len().max(d.items.len()) });
    }
    let weighted: Vec<(Rat, &DeterministicMatching)> =
        d.terms.iter().map(|t| (t.weight.clone(), &t.matching)).collect();
    RandomMatching::from_mixture(&d.agents, &d.items, &weighted)
}
