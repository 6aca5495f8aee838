//! Fixtures and instance generators.

pub mod fixtures;
mod ps;
mod random;
pub mod x3c;

pub use ps::probabilistic_serial;
pub use random::{
    gen_random_bistochastic, gen_random_incomplete_instance, gen_random_instance, gen_random_mixture, TieModel,
};
pub use x3c::{gen_x3c_reduction, ReductionVariant, X3CInstance};

use crate::instance::{Instance, WeakOrder};
use crate::matching::DeterministicMatching;
use crate::randmatch::RandomMatching;
use crate::rational::rat;

/// The four-agent school-choice example. `p_uniform` is deferred acceptance
/// under uniformly random tie-breaking; `p_improved` is the eating-mechanism
/// lottery that every agent prefers.
#[derive(Clone, Debug)]
pub struct Example1 {
    pub instance: Instance,
    pub p_uniform: RandomMatching,
    pub p_improved: RandomMatching,
    pub m1: DeterministicMatching,
    pub m2: DeterministicMatching,
}

pub fn gen_example1() -> Example1 {
    let instance = Instance::from_orders(
        &["a", "b", "c", "d"],
        &["o1", "o2", "o3", "o4"],
        vec![
            ("a", WeakOrder::strict(["o1", "o3", "o4", "o2"])),
            ("b", WeakOrder::strict(["o1", "o4", "o3", "o2"])),
            ("c", WeakOrder::strict(["o2", "o3", "o4", "o1"])),
            ("d", WeakOrder::strict(["o2", "o4", "o3", "o1"])),
        ],
        vec![
            ("o1", WeakOrder::from_tiers(&[&["a", "b"][..], &["c"], &["d"]])),
            ("o2", WeakOrder::from_tiers(&[&["c", "d"][..], &["a"], &["b"]])),
            ("o3", WeakOrder::from_tiers(&[&["b"][..], &["d"], &["a", "c"]])),
            ("o4", WeakOrder::from_tiers(&[&["a"][..], &["c"], &["b", "d"]])),
        ],
        true,
    );
    let half = rat(1, 2);
    let p_uniform = RandomMatching::from_named(
        &instance,
        &[
            ("a", "o1", half.clone()),
            ("b", "o1", half.clone()),
            ("c", "o2", half.clone()),
            ("d", "o2", half.clone()),
            ("a", "o3", rat(3, 8)),
            ("b", "o4", rat(3, 8)),
            ("c", "o3", rat(3, 8)),
            ("d", "o4", rat(3, 8)),
            ("a", "o4", rat(1, 8)),
            ("b", "o3", rat(1, 8)),
            ("c", "o4", rat(1, 8)),
            ("d", "o3", rat(1, 8)),
        ],
    )
    .expect("fixture names");
    let p_improved = RandomMatching::from_named(
        &instance,
        &[
            ("a", "o1", half.clone()),
            ("a", "o3", half.clone()),
            ("b", "o1", half.clone()),
            ("b", "o4", half.clone()),
            ("c", "o2", half.clone()),
            ("c", "o3", half.clone()),
            ("d", "o2", half.clone()),
            ("d", "o4", half),
        ],
    )
    .expect("fixture names");
    let m1 = DeterministicMatching::from_pairs(&instance, &[("a", "o1"), ("b", "o4"), ("c", "o3"), ("d", "o2")])
        .expect("perfect");
    let m2 = DeterministicMatching::from_pairs(&instance, &[("a", "o3"), ("b", "o1"), ("c", "o2"), ("d", "o4")])
        .expect("perfect");
    Example1 { instance, p_uniform, p_improved, m1, m2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{deferred_acceptance, is_weakly_stable, TieBreak};
    use crate::randmatch::validate_random_matching;
    use crate::rational;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for k in 0..n {
                let mut q = p.clone();
                q.insert(k, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn example1_transcription() {
        let ex = gen_example1();
        assert_eq!(ex.p_improved.get_named("a", "o1"), Some(&rat(1, 2)));
        assert_eq!(ex.p_uniform.get_named("a", "o3"), Some(&rat(3, 8)));
        assert_eq!(ex.p_uniform.get_named("b", "o3"), Some(&rat(1, 8)));
        assert!(validate_random_matching(&ex.instance, &ex.p_uniform).ok);
        assert_eq!(
            ex.m1.named_pairs(ex.instance.agents(), ex.instance.items()),
            vec![("a", "o1"), ("b", "o4"), ("c", "o3"), ("d", "o2")]
        );
    }

    fn average(ex: &Example1, ms: &[DeterministicMatching]) -> RandomMatching {
        let w = rat(1, ms.len() as i64);
        let terms: Vec<(rational::Rat, &DeterministicMatching)> = ms.iter().map(|m| (w.clone(), m)).collect();
        RandomMatching::from_mixture(ex.instance.agents(), ex.instance.items(), &terms).unwrap()
    }

    /// Every strict refinement of a weak order, tiers permuted independently.
    fn refinements(w: &WeakOrder) -> Vec<WeakOrder> {
        let mut out: Vec<Vec<String>> = vec![vec![]];
        for tier in w.tiers() {
            let perms = permutations(tier.len());
            out = out
                .iter()
                .flat_map(|head| {
                    perms.iter().map(move |p| {
                        let mut h = head.clone();
                        h.extend(p.iter().map(|&k| tier[k].clone()));
                        h
                    })
                })
                .collect();
        }
        out.into_iter().map(WeakOrder::strict).collect()
    }

    #[test]
    fn example1_has_eight_stable_matchings_with_quarter_average() {
        let ex = gen_example1();
        let stable: Vec<DeterministicMatching> = permutations(4)
            .into_iter()
            .map(|p| DeterministicMatching::from_assignment(p).unwrap())
            .filter(|m| is_weakly_stable(&ex.instance, m).unwrap().stable)
            .collect();
        assert_eq!(stable.len(), 8);
        let avg = average(&ex, &stable);
        assert_eq!(avg.get_named("a", "o3"), Some(&rat(1, 4)));
        assert_eq!(avg.get_named("a", "o4"), Some(&rat(1, 4)));
        assert_ne!(avg, ex.p_uniform);
    }

    #[test]
    fn uniform_matrix_is_the_da_lottery() {
        // average of agent-proposing DA over all 16 equally likely tie-breaks
        let ex = gen_example1();
        let items = ["o1", "o2", "o3", "o4"];
        let per_item: Vec<Vec<WeakOrder>> =
            items.iter().map(|o| refinements(ex.instance.priority(o).unwrap())).collect();
        let mut outcomes = Vec::new();
        for combo in 0..per_item.iter().map(Vec::len).product::<usize>() {
            let mut rest = combo;
            let mut prios = Vec::new();
            for (o, options) in items.iter().zip(&per_item) {
                prios.push((*o, options[rest % options.len()].clone()));
                rest /= options.len();
            }
            let prefs: Vec<(&str, WeakOrder)> =
                ["a", "b", "c", "d"].iter().map(|a| (*a, ex.instance.preference(a).unwrap().clone())).collect();
            let strict = Instance::from_orders(&["a", "b", "c", "d"], &items, prefs, prios, true);
            outcomes.push(deferred_acceptance(&strict, TieBreak::new(0)).unwrap());
        }
        assert_eq!(outcomes.len(), 16);
        assert!(outcomes.iter().all(|m| is_weakly_stable(&ex.instance, m).unwrap().stable));
        assert_eq!(average(&ex, &outcomes), ex.p_uniform);
    }
}
