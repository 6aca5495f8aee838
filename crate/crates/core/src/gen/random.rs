use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{Instance, WeakOrder};
use crate::matching::{deferred_acceptance, DeterministicMatching, TieBreak};
use crate::randmatch::RandomMatching;
use crate::rational::Rat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TieModel {
    Strict,
    /// At most two tiers per order.
    Dichotomous,
    /// Random tier partition.
    Weak,
}

impl TieModel {
    pub const ALL: [TieModel; 3] = [TieModel::Strict, TieModel::Dichotomous, TieModel::Weak];

    pub fn as_str(&self) -> &'static str {
        match self {
            TieModel::Strict => "strict",
            TieModel::Dichotomous => "dichotomous",
            TieModel::Weak => "weak",
        }
    }
}

impl fmt::Display for TieModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TieModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TieModel::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown tie model {s:?}")))
    }
}

fn random_order(names: &[String], model: TieModel, rng: &mut ChaCha8Rng) -> WeakOrder {
    let mut v = names.to_vec();
    v.shuffle(rng);
    if v.is_empty() {
        return WeakOrder::new(vec![]);
    }
    let tiers = match model {
        TieModel::Strict => v.into_iter().map(|s| vec![s]).collect(),
        TieModel::Dichotomous => {
            let cut = rng.gen_range(0..=v.len());
            let tail = v.split_off(cut);
            [v, tail].into_iter().filter(|t| !t.is_empty()).collect()
        }
        TieModel::Weak => {
            let mut tiers = vec![vec![v[0].clone()]];
            for s in v.into_iter().skip(1) {
                if rng.gen_bool(0.5) {
                    tiers.push(vec![s]);
                } else {
                    tiers.last_mut().expect("non-empty").push(s);
                }
            }
            tiers
        }
    };
    WeakOrder::new(tiers)
}

fn build(n_agents: usize, n_items: usize, model: TieModel, density: f64, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agents: Vec<String> = (1..=n_agents).map(|k| format!("a{k}")).collect();
    let items: Vec<String> = (1..=n_items).map(|k| format!("o{k}")).collect();
    let full = density >= 1.0 && n_agents == n_items;
    let acceptable: Vec<Vec<bool>> =
        (0..n_agents).map(|_| (0..n_items).map(|_| full || rng.gen_bool(density.clamp(0.0, 1.0))).collect()).collect();
    let mut prefs = BTreeMap::new();
    for (i, a) in agents.iter().enumerate() {
        let listed: Vec<String> = (0..n_items).filter(|&o| acceptable[i][o]).map(|o| items[o].clone()).collect();
        prefs.insert(a.clone(), random_order(&listed, model, &mut rng));
    }
    let mut prios = BTreeMap::new();
    for (o, name) in items.iter().enumerate() {
        let listed: Vec<String> = (0..n_agents).filter(|&i| acceptable[i][o]).map(|i| agents[i].clone()).collect();
        prios.insert(name.clone(), random_order(&listed, model, &mut rng));
    }
    Instance::new(agents, items, prefs, prios, full)
}

/// Seeded random instance with agents `a1..an` and items `o1..on`. With
/// `density < 1` each agent–item pair is mutually acceptable with that
/// probability and the instance is incomplete.
pub fn gen_random_instance(n: usize, model: TieModel, density: f64, seed: u64) -> Instance {
    build(n, n, model, density, seed)
}

/// Seeded incomplete (possibly unbalanced) instance; acceptability is
/// symmetric.
pub fn gen_random_incomplete_instance(
    n_agents: usize,
    n_items: usize,
    model: TieModel,
    density: f64,
    seed: u64,
) -> Instance {
    build(n_agents, n_items, model, density.min(0.999_999), seed)
}

fn random_weights(k: usize, rng: &mut ChaCha8Rng) -> Vec<Rat> {
    let raw: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=10)).collect();
    let total: i64 = raw.iter().sum();
    raw.into_iter().map(|w| Rat::new(w.into(), total.into())).collect()
}

/// `Σ λ_t · DA(inst, seed_t)` over `k` tie-break seeds drawn from `seed`,
/// with random positive rational weights. Ex-post stable by construction.
pub fn gen_random_mixture(inst: &Instance, k: usize, seed: u64) -> Result<RandomMatching> {
    inst.require_complete()?;
    let k = k.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..k).map(|_| rng.gen()).collect();
    let weights = random_weights(k, &mut rng);
    let matchings: Vec<DeterministicMatching> =
        seeds.iter().map(|&s| deferred_acceptance(inst, TieBreak::new(s))).collect::<Result<_>>()?;
    let terms: Vec<(Rat, &DeterministicMatching)> = weights.into_iter().zip(matchings.iter()).collect();
    RandomMatching::from_mixture(inst.agents(), inst.items(), &terms)
}

/// A random bistochastic matrix over the instance's names: a mixture of `k`
/// uniformly random permutations with random weights.
pub fn gen_random_bistochastic(inst: &Instance, k: usize, seed: u64) -> Result<RandomMatching> {
    let n = inst.n_agents();
    if inst.n_items() != n {
        return Err(Error::NotComplete("random bistochastic matrices need a balanced instance".into()));
    }
    let k = k.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perms = Vec::with_capacity(k);
    for _ in 0..k {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        perms.push(DeterministicMatching::from_assignment(perm)?);
    }
    let weights = random_weights(k, &mut rng);
    let terms: Vec<(Rat, &DeterministicMatching)> = weights.into_iter().zip(perms.iter()).collect();
    RandomMatching::from_mixture(inst.agents(), inst.items(), &terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expost::max_stable_decomposition;
    use crate::gen::fixtures;
    use crate::instance::validate_instance;
    use crate::randmatch::validate_random_matching;
    use crate::rational::int;

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(gen_random_instance(3, TieModel::Strict, 1.0, 7), gen_random_instance(3, TieModel::Strict, 1.0, 7));
        assert_ne!(gen_random_instance(4, TieModel::Weak, 1.0, 1), gen_random_instance(4, TieModel::Weak, 1.0, 2));
    }

    #[test]
    fn tie_models_hold() {
        for s in 0..20 {
            let d = gen_random_instance(4, TieModel::Dichotomous, 1.0, s);
            assert!(d.is_dichotomous() && d.is_complete());
            let w = gen_random_instance(5, TieModel::Weak, 1.0, s);
            assert!(validate_instance(&w).ok && w.is_complete());
            let st = gen_random_instance(4, TieModel::Strict, 1.0, s);
            assert!(st.is_strict());
        }
    }

    #[test]
    fn incomplete_instances_are_symmetric() {
        for s in 0..20 {
            let inst = gen_random_incomplete_instance(3, 4, TieModel::Weak, 0.6, s);
            assert!(validate_instance(&inst).ok);
            assert!(!inst.complete_flag());
            assert!(inst.has_symmetric_acceptability());
        }
    }

    #[test]
    fn mixtures_are_bistochastic_and_stable() {
        let agree = fixtures::agree2();
        let p = gen_random_mixture(&agree, 5, 11).unwrap();
        let (x, _) = fixtures::both_matchings_2();
        assert_eq!(p, x.to_matrix(agree.agents(), agree.items()));
        for s in 0..10 {
            let inst = gen_random_instance(4, TieModel::Weak, 1.0, s);
            let p = gen_random_mixture(&inst, 3, s).unwrap();
            assert!(validate_random_matching(&inst, &p).ok);
            assert_eq!(max_stable_decomposition(&inst, &p).unwrap().max_stable_probability, int(1));
            let q = gen_random_bistochastic(&inst, 4, s).unwrap();
            assert!(validate_random_matching(&inst, &q).ok);
        }
    }

    #[test]
    fn single_draw_mixture_is_a_da_outcome() {
        let inst = gen_random_instance(4, TieModel::Weak, 1.0, 5);
        let p = gen_random_mixture(&inst, 1, 9).unwrap();
        assert!(p.entries().iter().flatten().all(|v| *v == int(0) || *v == int(1)));
    }
}
