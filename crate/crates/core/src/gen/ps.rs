use crate::error::Result;
use crate::instance::Instance;
use crate::randmatch::RandomMatching;
use crate::rational::{self, Rat};

/// Simultaneous eating with unit speed. An agent whose best remaining tier
/// holds several items eats all of them at equal speed. Only agent
/// preferences matter; priorities are ignored.
pub fn probabilistic_serial(inst: &Instance) -> Result<RandomMatching> {
    inst.require_complete()?;
    let n = inst.n_agents();
    let mut p = vec![vec![rational::zero(); n]; n];
    let mut left: Vec<Rat> = vec![rational::one(); n];
    let mut gone = vec![false; n];
    loop {
        // each agent eats its best remaining tier
        let mut eating: Vec<Vec<usize>> = Vec::with_capacity(n);
        for i in 0..n {
            let best = (0..n).filter(|&o| !gone[o]).map(|o| inst.pref_rank(i, o)).min();
            eating.push(match best {
                Some(t) => (0..n).filter(|&o| !gone[o] && inst.pref_rank(i, o) == t).collect(),
                None => Vec::new(),
            });
        }
        let mut rate = vec![rational::zero(); n];
        for set in eating.iter().filter(|s| !s.is_empty()) {
            let share = Rat::new(1.into(), (set.len() as i64).into());
            for &o in set {
                rate[o] += &share;
            }
        }
        let dt = (0..n).filter(|&o| rational::is_positive(&rate[o])).map(|o| &left[o] / &rate[o]).min();
        let Some(dt) = dt else { break };
        for (i, set) in eating.iter().enumerate().filter(|(_, s)| !s.is_empty()) {
            let bite = &dt / Rat::from_integer((set.len() as i64).into());
            for &o in set {
                p[i][o] += &bite;
            }
        }
        for o in 0..n {
            if rational::is_positive(&rate[o]) {
                left[o] -= &rate[o] * &dt;
                if !rational::is_positive(&left[o]) {
                    gone[o] = true;
                }
            }
        }
    }
    RandomMatching::new(inst.agents().to_vec(), inst.items().to_vec(), p)
}
