//! Acceptance run: one PASS/FAIL line per criterion. All comparisons are
//! exact rational equality; the only tolerances are wall-clock budgets.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use expost_core::gen::{
    fixtures, gen_example1, gen_random_bistochastic, gen_random_incomplete_instance, gen_random_instance,
    gen_random_mixture, gen_x3c_reduction, ReductionVariant, TieModel,
};
use expost_core::oracle::{self, NamedMatching};
use expost_core::rational::{self, rat};
use expost_core::{
    birkhoff_decompose, check_fractional_stability, check_fractional_strong_stability, complete_instance,
    expost_strong_decompose, find_consistent_stable, is_robust_expost_stable, is_strongly_stable, is_weakly_stable,
    max_stable_decomposition, recombine, Decomposition, Instance, RandomMatching,
};

const MODELS: [TieModel; 3] = [TieModel::Strict, TieModel::Dichotomous, TieModel::Weak];

/// Verdicts gathered for one generated matrix; criterion 8 fills the gaps.
struct Case {
    label: String,
    inst: Instance,
    p: RandomMatching,
    robust: Option<bool>,
    expost: Option<bool>,
    fractional: Option<bool>,
    strong: Option<bool>,
}

impl Case {
    fn new(label: String, inst: Instance, p: RandomMatching) -> Self {
        Case { label, inst, p, robust: None, expost: None, fractional: None, strong: None }
    }
}

#[derive(Default)]
struct Outcome {
    failures: Vec<String>,
    checked: usize,
}

impl Outcome {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

fn mixed_case(seed: u64, n: usize, model: TieModel, mixture: bool) -> (Instance, RandomMatching) {
    let inst = gen_random_instance(n, model, 1.0, seed);
    let k = 1 + (seed as usize) % 4;
    let p = if mixture {
        gen_random_mixture(&inst, k, seed.wrapping_mul(31)).unwrap()
    } else {
        gen_random_bistochastic(&inst, k, seed.wrapping_mul(37)).unwrap()
    };
    (inst, p)
}

fn stable_terms(inst: &Instance, d: &Decomposition) -> bool {
    d.terms.iter().all(|t| is_weakly_stable(inst, &t.matching).unwrap().stable)
}

fn example1_improved(_: &mut Vec<Case>) -> Outcome {
    let mut out = Outcome::default();
    let ex = gen_example1();
    let r = max_stable_decomposition(&ex.instance, &ex.p_improved).unwrap();
    out.check(r.max_stable_probability == rational::one(), || {
        format!("probability {}", rational::format_rat(&r.max_stable_probability))
    });
    out.check(recombine(&r.decomposition, 4).unwrap() == ex.p_improved, || "decomposition does not recombine".into());
    out.check(stable_terms(&ex.instance, &r.decomposition), || "unstable term".into());
    out
}

fn example1_uniform(_: &mut Vec<Case>) -> Outcome {
    let mut out = Outcome::default();
    let ex = gen_example1();
    let p = &ex.p_uniform;
    let entries = [("a", "o1", rat(1, 2)), ("a", "o3", rat(3, 8)), ("a", "o4", rat(1, 8))];
    for (a, o, v) in entries {
        out.check(p.get_named(a, o) == Some(&v), || format!("p({a},{o}) is not {v}"));
    }
    let r = max_stable_decomposition(&ex.instance, p).unwrap();
    out.check(r.max_stable_probability == rational::one(), || {
        format!("probability {}", rational::format_rat(&r.max_stable_probability))
    });
    out.check(recombine(&r.decomposition, 4).unwrap() == *p, || "decomposition does not recombine".into());
    out
}

fn strict_equivalence(cases: &mut Vec<Case>) -> Outcome {
    let mut out = Outcome::default();
    for seed in 0..200u64 {
        let n = 2 + (seed as usize) % 4;
        let mixture = seed < 100;
        let (inst, p) = mixed_case(seed, n, TieModel::Strict, mixture);
        let expost = max_stable_decomposition(&inst, &p).unwrap().is_expost_stable;
        let fractional = check_fractional_stability(&inst, &p).unwrap().satisfied;
        out.check(expost == fractional, || format!("seed {seed}: expost {expost}, fractional {fractional}"));
        let mut case = Case::new(format!("strict seed {seed}"), inst, p);
        case.expost = Some(expost);
        case.fractional = Some(fractional);
        cases.push(case);
    }
    out
}

fn birkhoff_exactness(cases: &mut Vec<Case>) -> Outcome {
    let mut out = Outcome::default();
    for seed in 0..100u64 {
        let n = 1 + (seed as usize) % 8;
        let k = 1 + (seed as usize * 7) % 12;
        let inst = gen_random_instance(n, MODELS[seed as usize % 3], 1.0, seed + 1000);
        let p = gen_random_bistochastic(&inst, k, seed).unwrap();
        let d = birkhoff_decompose(&p).unwrap();
        out.check(recombine(&d, n).unwrap() == p, || format!("seed {seed}: recombination differs"));
        out.check(d.len() <= n * n + 2 - 2 * n, || format!("seed {seed}: {} terms for n={n}", d.len()));
        cases.push(Case::new(format!("birkhoff seed {seed}"), inst, p));
    }
    out
}

fn x3c_faithfulness(cases: &mut Vec<Case>) -> Outcome {
    let mut out = Outcome::default();
    let family = [("x3c1", fixtures::x3c1()), ("x3c2-yes", fixtures::x3c2_yes()), ("x3c2-no", fixtures::x3c2_no())];
    out.check(family.iter().any(|(_, x)| oracle::solve_x3c(x).is_none()), || "no no-instance in the set".into());
    for (name, x) in &family {
        let cover = oracle::solve_x3c(x).is_some();
        for v in [ReductionVariant::StrictDich, ReductionVariant::DichDich, ReductionVariant::Deg3] {
            let (inst, p) = gen_x3c_reduction(x, v).unwrap();
            let (inst, p) = if v == ReductionVariant::Deg3 {
                let (done, q) = complete_instance(&inst, Some(&p)).unwrap();
                (done, q.unwrap())
            } else {
                (inst, p)
            };
            let r = max_stable_decomposition(&inst, &p).unwrap();
            out.check(r.is_expost_stable == cover, || {
                format!("{name} {v}: probability {}, cover {cover}", rational::format_rat(&r.max_stable_probability))
            });
            let mut case = Case::new(format!("{name} {v}"), inst, p);
            case.expost = Some(r.is_expost_stable);
            cases.push(case);
        }
        let (inst, p) = gen_x3c_reduction(x, ReductionVariant::Consistent).unwrap();
        let found = find_consistent_stable(&inst, &p).unwrap();
        if let Some(m) = &found {
            out.check(m.consistent_with(&p) && is_weakly_stable(&inst, m).unwrap().stable, || {
                format!("{name} consistent: returned matching is not a consistent stable matching")
            });
        }
        out.check(found.is_some() == cover, || format!("{name} consistent: found {}, cover {cover}", found.is_some()));
    }
    out
}

fn robust_equivalence(cases: &mut Vec<Case>) -> Outcome {
    let mut out = Outcome::default();
    for seed in 0..200u64 {
        let n = 1 + (seed as usize) % 4;
        let (inst, p) = mixed_case(seed + 5000, n, MODELS[seed as usize % 3], seed % 2 == 0);
        let r = is_robust_expost_stable(&inst, &p).unwrap();
        let want = oracle::robust_oracle(&inst, &p).unwrap();
        out.check(r.robust == want, || format!("seed {seed}: robust {}, oracle {want}", r.robust));
        out.check(r.robust == r.witness.is_none(), || format!("seed {seed}: witness presence disagrees"));
        if let Some(w) = &r.witness {
            let report = is_weakly_stable(&inst, &w.matching).unwrap();
            out.check(w.matching.consistent_with(&p) && report.blocks(&w.agent, &w.item), || {
                format!("seed {seed}: witness pair ({}, {}) does not block", w.agent, w.item)
            });
        }
        let mut case = Case::new(format!("robust seed {seed}"), inst, p);
        case.robust = Some(r.robust);
        cases.push(case);
    }
    out
}

fn strong_equivalence(cases: &mut Vec<Case>) -> Outcome {
    let mut out = Outcome::default();
    for seed in 0..200u64 {
        let n = 1 + (seed as usize) % 4;
        let (inst, p) = mixed_case(seed + 9000, n, MODELS[seed as usize % 3], seed % 2 == 0);
        let d = expost_strong_decompose(&inst, &p).unwrap();
        let fractional = check_fractional_strong_stability(&inst, &p).unwrap().satisfied;
        let columns = oracle::strongly_stable_consistent(&inst, &p).unwrap();
        let member = oracle::lp_membership(&p, &columns).is_some();
        out.check(d.is_some() == fractional && fractional == member, || {
            format!("seed {seed}: decomposed {}, fractional {fractional}, oracle {member}", d.is_some())
        });
        if let Some(d) = &d {
            out.check(recombine(d, n).unwrap() == p, || format!("seed {seed}: recombination differs"));
            out.check(d.terms.iter().all(|t| is_strongly_stable(&inst, &t.matching).unwrap().stable), || {
                format!("seed {seed}: term not strongly stable")
            });
            out.check(d.len() <= 2 * n * (n + 1), || format!("seed {seed}: {} terms for n={n}", d.len()));
        }
        let mut case = Case::new(format!("strong seed {seed}"), inst, p);
        case.strong = Some(d.is_some());
        cases.push(case);
    }
    out
}

#[allow(clippy::ptr_arg)]
fn implication_chain(cases: &mut Vec<Case>) -> Outcome {
    let mut out = Outcome::default();
    for c in cases.iter_mut() {
        let robust = *c.robust.get_or_insert_with(|| is_robust_expost_stable(&c.inst, &c.p).unwrap().robust);
        let expost = *c.expost.get_or_insert_with(|| max_stable_decomposition(&c.inst, &c.p).unwrap().is_expost_stable);
        let fractional =
            *c.fractional.get_or_insert_with(|| check_fractional_stability(&c.inst, &c.p).unwrap().satisfied);
        let strong = *c.strong.get_or_insert_with(|| expost_strong_decompose(&c.inst, &c.p).unwrap().is_some());
        out.check(!robust || expost, || format!("{}: robust but not ex-post stable", c.label));
        out.check(!expost || fractional, || format!("{}: ex-post stable but not fractional", c.label));
        out.check(!strong || expost, || format!("{}: strong but not ex-post stable", c.label));
    }
    out
}

fn completion_correspondence(_: &mut Vec<Case>) -> Outcome {
    let mut out = Outcome::default();
    for seed in 0..100u64 {
        let na = 1 + (seed as usize) % 4;
        let ni = 1 + (seed as usize / 4) % 4;
        let density = 0.3 + 0.1 * (seed % 6) as f64;
        let inst = gen_random_incomplete_instance(na, ni, MODELS[seed as usize % 3], density, seed);
        let (done, _) = complete_instance(&inst, None).unwrap();
        let image: BTreeSet<NamedMatching> = oracle::enumerate_weakly_stable(&done)
            .unwrap()
            .iter()
            .map(|m| oracle::restrict_to_original(&inst, &done, m))
            .collect();
        let direct: BTreeSet<NamedMatching> = oracle::enumerate_stable_incomplete(&inst).into_iter().collect();
        out.check(image == direct, || {
            format!("seed {seed}: {} stable in the completion, {} in the original", image.len(), direct.len())
        });
    }
    out
}

type Criterion = (u32, &'static str, Option<u64>, fn(&mut Vec<Case>) -> Outcome);

const CRITERIA: [Criterion; 9] = [
    (1, "example 1 improved matrix has stable probability 1", Some(1), example1_improved),
    (2, "example 1 uniform matrix has stable probability 1", Some(1), example1_uniform),
    (3, "strict instances: ex-post verdict equals fractional verdict", Some(60), strict_equivalence),
    (4, "birkhoff decomposition is exact and short", Some(10), birkhoff_exactness),
    (5, "x3c reductions are faithful", Some(120), x3c_faithfulness),
    (6, "robust test equals oracle, witnesses block", Some(60), robust_equivalence),
    (7, "ex-post strong verdict equals fractional and oracle", Some(120), strong_equivalence),
    (8, "implication chain over all generated matrices", None, implication_chain),
    (9, "completion preserves stable matchings", Some(30), completion_correspondence),
];

fn main() -> ExitCode {
    let mut cases = Vec::new();
    let mut all_ok = true;
    for (id, name, budget, run) in CRITERIA {
        let start = Instant::now();
        let out = run(&mut cases);
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed < Duration::from_secs(b));
        let ok = out.failures.is_empty() && in_time;
        all_ok &= ok;
        let limit = budget.map_or("no budget".to_string(), |b| format!("budget {b} s"));
        println!(
            "{} criterion {id}: {name} ({} checks, {:.2} s, {limit})",
            if ok { "PASS" } else { "FAIL" },
            out.checked,
            elapsed.as_secs_f64()
        );
        for f in out.failures.iter().take(10) {
            println!("    {f}");
        }
        if !in_time {
            println!("    over budget");
        }
    }
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
