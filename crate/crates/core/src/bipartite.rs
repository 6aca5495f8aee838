//! Augmenting-path bipartite matching. Birkhoff
//! extraction, the robustness test, the interval decomposition and the
//! stable-matching enumerator all go through this one implementation.

/// Matching state between `n_left` left vertices and `n_right` right vertices.
#[derive(Clone, Debug)]
pub struct Matcher {
    pub mate_left: Vec<Option<usize>>,
    pub mate_right: Vec<Option<usize>>,
    seen: Vec<u32>,
    stamp: u32,
}

impl Matcher {
    pub fn new(n_left: usize, n_right: usize) -> Self {
        Matcher { mate_left: vec![None; n_left], mate_right: vec![None; n_right], seen: vec![0; n_right], stamp: 0 }
    }

    pub fn size(&self) -> usize {
        self.mate_left.iter().filter(|m| m.is_some()).count()
    }

    pub fn unmatch_left(&mut self, u: usize) {
        if let Some(v) = self.mate_left[u].take() {
            self.mate_right[v] = None;
        }
    }

    pub fn unmatch_right(&mut self, v: usize) {
        if let Some(u) = self.mate_right[v].take() {
            self.mate_left[u] = None;
        }
    }

    /// Tries to match the free left vertex `u` along an augmenting path using
    /// edges `u -> adj[u]` that pass `allowed`.
    pub fn augment<F>(&mut self, u: usize, adj: &[Vec<usize>], allowed: &F) -> bool
    where
        F: Fn(usize, usize) -> bool,
    {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.stamp = 1;
        }
        self.dfs(u, adj, allowed)
    }

    fn dfs<F>(&mut self, u: usize, adj: &[Vec<usize>], allowed: &F) -> bool
    where
        F: Fn(usize, usize) -> bool,
    {
        for &v in &adj[u] {
            if self.seen[v] == self.stamp || !allowed(u, v) {
                continue;
            }
            self.seen[v] = self.stamp;
            let free = match self.mate_right[v] {
                None => true,
                Some(w) => self.dfs(w, adj, allowed),
            };
            if free {
                self.mate_left[u] = Some(v);
                self.mate_right[v] = Some(u);
                return true;
            }
        }
        false
    }
}

/// Maximum matching restricted to `allowed` edges, left vertices tried in
/// index order (deterministic).
pub fn maximum_matching<F>(n_right: usize, adj: &[Vec<usize>], allowed: F) -> Matcher
where
    F: Fn(usize, usize) -> bool,
{
    let mut m = Matcher::new(adj.len(), n_right);
    for u in 0..adj.len() {
        m.augment(u, adj, &allowed);
    }
    m
}

/// A perfect matching (left vertex -> right vertex) if one exists.
pub fn perfect_matching<F>(n_right: usize, adj: &[Vec<usize>], allowed: F) -> Option<Vec<usize>>
where
    F: Fn(usize, usize) -> bool,
{
    if adj.len() != n_right {
        return None;
    }
    let mut m = Matcher::new(adj.len(), n_right);
    for u in 0..adj.len() {
        if !m.augment(u, adj, &allowed) {
            return None;
        }
    }
    m.mate_left.into_iter().collect()
}
