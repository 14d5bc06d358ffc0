//! Per-city candidate lists ranked by a learnable value Q(i,j).
//!
//! The initial value is `w(π) / (α(i,j) + d(i,j))`: edges that are both short
//! and close to the minimum 1-tree rank first. The policy then rewrites the
//! values of stored pairs; lists are re-sorted lazily before the next read.

use std::fmt::Write as _;

use crate::onetree::{AlphaTable, Penalties};
use crate::tsplib::Instance;

pub const DEFAULT_CANDIDATES: usize = 5;
pub const DEFAULT_DENOMINATOR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub city: usize,
    pub q: f64,
}

/// Descending q, then ascending city index.
fn rank_order(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    b.q.total_cmp(&a.q).then(a.city.cmp(&b.city))
}

#[derive(Debug, Clone)]
pub struct QTable {
    lists: Vec<Vec<Candidate>>,
    dirty: Vec<bool>,
    missed_writes: u64,
}

impl QTable {
    /// Builds a table from explicit lists; each list is sorted on construction.
    pub fn from_lists(lists: Vec<Vec<Candidate>>) -> Self {
        let n = lists.len();
        for (i, l) in lists.iter().enumerate() {
            for (k, c) in l.iter().enumerate() {
                assert!(c.city != i && c.city < n, "candidate {} of city {i} out of range", c.city);
                assert!(l[..k].iter().all(|o| o.city != c.city), "duplicate candidate {} of city {i}", c.city);
            }
        }
        let mut t = QTable { dirty: vec![true; n], lists, missed_writes: 0 };
        for i in 0..n {
            t.ensure_sorted(i);
        }
        t
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    fn ensure_sorted(&mut self, i: usize) {
        if self.dirty[i] {
            self.lists[i].sort_by(rank_order);
            self.dirty[i] = false;
        }
    }

    /// Candidates of `i` in rank order.
    pub fn candidates(&mut self, i: usize) -> &[Candidate] {
        self.ensure_sorted(i);
        &self.lists[i]
    }

    /// Candidates of `i` in storage order, which is rank order unless a write is pending.
    pub fn candidates_unsorted(&self, i: usize) -> &[Candidate] {
        &self.lists[i]
    }

    pub fn lookup(&self, i: usize, j: usize) -> Option<f64> {
        self.lists[i].iter().find(|c| c.city == j).map(|c| c.q)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.lists[i].iter().any(|c| c.city == j)
    }

    /// Overwrites Q(i,j). Writing a pair that is not stored is ignored and counted.
    pub fn set_q(&mut self, i: usize, j: usize, q: f64) {
        match self.lists[i].iter_mut().find(|c| c.city == j) {
            Some(c) => {
                c.q = q;
                self.dirty[i] = true;
            }
            None => self.record_miss(),
        }
    }

    pub(crate) fn record_miss(&mut self) {
        self.missed_writes += 1;
    }

    /// Largest stored value in `i`'s list, or 0 for an empty list.
    pub fn max_q(&self, i: usize) -> f64 {
        self.lists[i].iter().map(|c| c.q).max_by(f64::total_cmp).unwrap_or(0.0)
    }

    /// Number of writes that targeted a pair outside the candidate lists.
    pub fn missed_writes(&self) -> u64 {
        self.missed_writes
    }

    /// CSV of `city,neighbor,alpha,distance,q` rows in rank order (1-based ids).
    pub fn to_csv(&mut self, inst: &Instance, alpha: &AlphaTable) -> String {
        let mut s = String::from("city,neighbor,alpha,distance,q\n");
        for i in 0..self.len() {
            self.ensure_sorted(i);
            for c in &self.lists[i] {
                let a = alpha.get(i, c.city).map(|a| a.to_string()).unwrap_or_default();
                let _ = writeln!(s, "{},{},{},{},{}", i + 1, c.city + 1, a, inst.distance(i, c.city), c.q);
            }
        }
        s
    }
}

/// Initial value w / (α + d), with the denominator floored at `floor`.
pub fn initial_q(w: f64, alpha: f64, d: f64, floor: f64) -> f64 {
    w / (alpha + d).max(floor)
}

/// Keeps the `k` entries of each α-neighbourhood with the largest initial value.
pub fn init_q(inst: &Instance, alpha: &AlphaTable, pen: &Penalties, k: usize, floor: f64) -> QTable {
    let w = pen.w();
    let lists = (0..inst.dimension())
        .map(|i| {
            let mut row: Vec<Candidate> = alpha
                .row(i)
                .iter()
                .map(|e| Candidate { city: e.city, q: initial_q(w, e.alpha(), inst.distance(i, e.city) as f64, floor) })
                .collect();
            row.sort_by(rank_order);
            row.truncate(k);
            row
        })
        .collect();
    QTable::from_lists(lists)
}

/// Plain α-ordering: the `k` smallest α per city (ties by the neighbourhood's
/// cost order), valued −rank so the greedy choice walks the list in order.
pub fn alpha_ranked(alpha: &AlphaTable, k: usize) -> QTable {
    let lists = (0..alpha.len())
        .map(|i| {
            let mut row = alpha.row(i).to_vec();
            // rows are stored by ascending penalized cost, so a stable sort keeps that as the tie-break
            row.sort_by_key(|e| e.alpha);
            row.truncate(k);
            row.iter()
                .enumerate()
                .map(|(rank, e)| Candidate { city: e.city, q: -(rank as f64) })
                .collect()
        })
        .collect();
    QTable::from_lists(lists)
}
