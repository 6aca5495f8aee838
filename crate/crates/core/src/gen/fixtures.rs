//! Small named instances used across the test-suite.

use crate::instance::{Instance, WeakOrder};
use crate::matching::DeterministicMatching;
use crate::randmatch::RandomMatching;
use crate::rational::rat;

use super::x3c::X3CInstance;

/// Two agents and two items that all agree: `a`, `x` are everybody's favourites.
pub fn agree2() -> Instance {
    Instance::from_orders(
        &["a", "b"],
        &["x", "y"],
        vec![("a", WeakOrder::strict(["x", "y"])), ("b", WeakOrder::strict(["x", "y"]))],
        vec![("x", WeakOrder::strict(["a", "b"])), ("y", WeakOrder::strict(["a", "b"]))],
        true,
    )
}

/// Opposed preferences: both perfect matchings are stable.
pub fn opp2() -> Instance {
    Instance::from_orders(
        &["a", "b"],
        &["x", "y"],
        vec![("a", WeakOrder::strict(["x", "y"])), ("b", WeakOrder::strict(["y", "x"]))],
        vec![("x", WeakOrder::strict(["b", "a"])), ("y", WeakOrder::strict(["a", "b"]))],
        true,
    )
}

/// One element triple repeated three times.
pub fn x3c1() -> X3CInstance {
    let set = || ["a1", "a2", "a3"].map(String::from);
    X3CInstance::new(vec!["a1".into(), "a2".into(), "a3".into()], vec![set(), set(), set()])
}

fn family(sets: [[&str; 3]; 6]) -> X3CInstance {
    X3CInstance::new((1..=6).map(|e| format!("e{e}")).collect(), sets.iter().map(|s| s.map(String::from)).collect())
}

/// Six elements, each in three sets; `{e3,e6,e1}` and `{e4,e5,e2}` cover.
pub fn x3c2_yes() -> X3CInstance {
    family([
        ["e4", "e5", "e2"],
        ["e3", "e6", "e1"],
        ["e5", "e6", "e2"],
        ["e4", "e1", "e2"],
        ["e5", "e3", "e6"],
        ["e1", "e3", "e4"],
    ])
}

/// Six elements, each in three sets, and no exact cover.
pub fn x3c2_no() -> X3CInstance {
    family([
        ["e5", "e4", "e1"],
        ["e2", "e5", "e6"],
        ["e1", "e3", "e5"],
        ["e2", "e6", "e1"],
        ["e3", "e4", "e6"],
        ["e2", "e4", "e3"],
    ])
}

/// The 2×2 matrix with every entry 1/2.
pub fn half_half(inst: &Instance) -> RandomMatching {
    let n = inst.n_agents();
    RandomMatching::new(inst.agents().to_vec(), inst.items().to_vec(), vec![vec![rat(1, n as i64); n]; n])
        .expect("square")
}

/// The two perfect matchings of a 2×2 market: identity, then swap.
pub fn both_matchings_2() -> (DeterministicMatching, DeterministicMatching) {
    (
        DeterministicMatching::from_assignment(vec![0, 1]).expect("perm"),
        DeterministicMatching::from_assignment(vec![1, 0]).expect("perm"),
    )
}
