//! Packing LP: `max Σ λ_j` subject to `Σ_j λ_j · a_j ≤ b`, `λ ≥ 0`, where
//! every column `a_j` is a 0/1 vector and `b ≥ 0`.
//!
//! Revised simplex with an explicit basis inverse, generic over exact
//! rationals and `f64`. The slack basis is feasible because `b ≥ 0`, so no
//! phase one is needed. Pivoting uses the smallest-index rule, which rules
//! out cycling, or [`PivotRule::LargestGain`], which falls back to it after
//! a run of degenerate pivots until the objective moves again.

use std::cmp::Ordering;
use std::collections::HashMap;

use num_traits::{Signed, Zero};

use crate::rational::{self, Rat};

/// Consecutive degenerate pivots before switching to the smallest-index rule.
const STALL_LIMIT: usize = 20;

/// Tolerance of the floating-point simplex.
const EPS: f64 = 1e-9;

/// Arithmetic the simplex needs. Rationals are exact; `f64` compares with a
/// tolerance.
pub trait Scalar: Clone + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn sign(&self) -> Ordering;
    fn compare(&self, o: &Self) -> Ordering;
}

impl Scalar for Rat {
    fn zero() -> Self {
        rational::zero()
    }
    fn one() -> Self {
        rational::one()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn sign(&self) -> Ordering {
        if self.is_zero() {
            Ordering::Equal
        } else if self.is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }
    fn compare(&self, o: &Self) -> Ordering {
        self.cmp(o)
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn sign(&self) -> Ordering {
        if *self > EPS {
            Ordering::Greater
        } else if *self < -EPS {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
    fn compare(&self, o: &Self) -> Ordering {
        (self - o).sign()
    }
}

fn is_pos<T: Scalar>(x: &T) -> bool {
    x.sign() == Ordering::Greater
}

fn is_zero<T: Scalar>(x: &T) -> bool {
    x.sign() == Ordering::Equal
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotRule {
    SmallestIndex,
    LargestGain,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PackingSolution<T = Rat> {
    pub value: T,
    /// One weight per input column.
    pub weights: Vec<T>,
    /// An optimal dual solution, one value per input row.
    pub duals: Vec<T>,
    pub pivots: usize,
}

impl<T: Scalar> PackingSolution<T> {
    /// Indices of columns with positive weight.
    pub fn positive(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&j| is_pos(&self.weights[j])).collect()
    }
}

/// Solves the packing LP exactly. `columns[j]` lists the row indices where
/// column `j` has a 1; rows absent from every column are ignored, and rows
/// with the same incidence pattern are merged keeping the smallest
/// right-hand side. The merged row's dual goes to the row that set it.
pub fn solve_packing(rhs: &[Rat], columns: &[Vec<usize>]) -> PackingSolution {
    if columns.is_empty() {
        return PackingSolution {
            value: rational::zero(),
            weights: vec![],
            duals: vec![rational::zero(); rhs.len()],
            pivots: 0,
        };
    }
    let mut pattern: Vec<Vec<usize>> = vec![Vec::new(); rhs.len()];
    for (j, col) in columns.iter().enumerate() {
        for &r in col {
            pattern[r].push(j);
        }
    }
    let mut merged: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut b: Vec<Rat> = Vec::new();
    let mut row_of = vec![usize::MAX; rhs.len()];
    let mut owner: Vec<usize> = Vec::new();
    for (r, pat) in pattern.into_iter().enumerate() {
        if pat.is_empty() {
            continue;
        }
        match merged.get(&pat) {
            Some(&k) => {
                if rhs[r] < b[k] {
                    b[k] = rhs[r].clone();
                    owner[k] = r;
                }
                row_of[r] = k;
            }
            None => {
                let k = b.len();
                merged.insert(pat, k);
                b.push(rhs[r].clone());
                owner.push(r);
                row_of[r] = k;
            }
        }
    }
    let mut lp = PackingLp::new(b, PivotRule::SmallestIndex);
    for c in columns {
        lp.add_column(c.iter().map(|&r| row_of[r]).collect());
    }
    let sol = lp.solve();
    let mut duals = vec![rational::zero(); rhs.len()];
    for (k, v) in sol.duals.into_iter().enumerate() {
        duals[owner[k]] = v;
    }
    PackingSolution { duals, ..sol }
}

/// A packing LP that grows by columns and re-optimises from its last basis.
/// Rows are never merged.
pub struct PackingLp<T = Rat> {
    rule: PivotRule,
    m: usize,
    cols: Vec<Vec<usize>>,
    // variables are slacks `0..m`, then structural columns `m + j`
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<Vec<T>>,
    xb: Vec<T>,
}

impl<T: Scalar> PackingLp<T> {
    pub fn new(rhs: Vec<T>, rule: PivotRule) -> Self {
        let m = rhs.len();
        let mut binv = vec![vec![T::zero(); m]; m];
        for (r, row) in binv.iter_mut().enumerate() {
            row[r] = T::one();
        }
        PackingLp { rule, m, cols: Vec::new(), basis: (0..m).collect(), is_basic: vec![true; m], binv, xb: rhs }
    }

    pub fn n_columns(&self) -> usize {
        self.cols.len()
    }

    /// Appends a column given by the rows where it has a 1.
    pub fn add_column(&mut self, mut rows: Vec<usize>) {
        rows.sort_unstable();
        rows.dedup();
        self.cols.push(rows);
        self.is_basic.push(false);
    }

    /// Duals `y = c_B B⁻¹`.
    fn duals(&self) -> Vec<T> {
        let mut y = vec![T::zero(); self.m];
        for (r, &var) in self.basis.iter().enumerate() {
            if var >= self.m {
                for (k, v) in self.binv[r].iter().enumerate() {
                    if !is_zero(v) {
                        y[k] = y[k].add(v);
                    }
                }
            }
        }
        y
    }

    /// Objective gain per unit of a nonbasic variable.
    fn gain(&self, var: usize, y: &[T]) -> T {
        if var < self.m {
            T::zero().sub(&y[var])
        } else {
            self.cols[var - self.m].iter().fold(T::one(), |acc, &r| acc.sub(&y[r]))
        }
    }

    /// The first improving variable, or with `steepest` the one with the
    /// largest gain (first among equals).
    fn entering(&self, y: &[T], steepest: bool) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for var in 0..self.m + self.cols.len() {
            if self.is_basic[var] {
                continue;
            }
            let g = self.gain(var, y);
            if !is_pos(&g) {
                continue;
            }
            if !steepest {
                return Some(var);
            }
            if best.as_ref().is_none_or(|(_, b)| g.compare(b) == Ordering::Greater) {
                best = Some((var, g));
            }
        }
        best.map(|(var, _)| var)
    }

    fn direction(&self, var: usize) -> Vec<T> {
        (0..self.m)
            .map(|r| {
                if var < self.m {
                    self.binv[r][var].clone()
                } else {
                    self.cols[var - self.m].iter().fold(T::zero(), |acc, &k| acc.add(&self.binv[r][k]))
                }
            })
            .collect()
    }

    pub fn solve(&mut self) -> PackingSolution<T> {
        let mut pivots = 0;
        let mut stalled = 0;
        let y = loop {
            let y = self.duals();
            let steepest = self.rule == PivotRule::LargestGain && stalled < STALL_LIMIT;
            let Some(q) = self.entering(&y, steepest) else { break y };
            let d = self.direction(q);
            let mut leave: Option<(usize, T)> = None;
            for r in 0..self.m {
                if !is_pos(&d[r]) {
                    continue;
                }
                let ratio = self.xb[r].div(&d[r]);
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => match ratio.compare(best) {
                        Ordering::Less => true,
                        Ordering::Equal => self.basis[r] < self.basis[*lr],
                        Ordering::Greater => false,
                    },
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            let (r, theta) = leave.expect("packing LP is bounded");
            stalled = if is_zero(&theta) { stalled + 1 } else { 0 };
            self.pivot(r, q, &d, &theta);
            pivots += 1;
        };
        let mut weights = vec![T::zero(); self.cols.len()];
        for (r, &var) in self.basis.iter().enumerate() {
            if var >= self.m {
                weights[var - self.m] = self.xb[r].clone();
            }
        }
        let value = weights.iter().fold(T::zero(), |acc, w| acc.add(w));
        PackingSolution { value, weights, duals: y, pivots }
    }

    fn pivot(&mut self, r: usize, q: usize, d: &[T], theta: &T) {
        let dr = d[r].clone();
        for (k, x) in self.xb.iter_mut().enumerate() {
            if k != r && !is_zero(&d[k]) {
                *x = x.sub(&d[k].mul(theta));
            }
        }
        self.xb[r] = theta.clone();
        let pivot_row: Vec<(usize, T)> =
            self.binv[r].iter().enumerate().filter(|(_, v)| !is_zero(*v)).map(|(k, v)| (k, v.div(&dr))).collect();
        for (k, row) in self.binv.iter_mut().enumerate() {
            if k == r || is_zero(&d[k]) {
                continue;
            }
            for (c, v) in &pivot_row {
                row[*c] = row[*c].sub(&d[k].mul(v));
            }
        }
        let new_row = &mut self.binv[r];
        new_row.iter_mut().for_each(|v| *v = T::zero());
        for (c, v) in pivot_row {
            new_row[c] = v;
        }
        self.is_basic[self.basis[r]] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
    }
}
