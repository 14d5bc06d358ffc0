//! Tours and sequential k-opt moves.
//!
//! A move is a chain p1 p2 ... p2k of distinct cities: the tour edges
//! (p1,p2), (p3,p4), ... are removed, the edges (p2,p3), (p4,p5), ... are added,
//! and the move is closed by adding (p2k, p1). Gains are kept in penalized
//! fixed-point units; on a closed move the penalty terms cancel, so the gain is
//! exactly `PI_SCALE` times the drop in plain tour length.

use crate::onetree::PenalizedCost;
use crate::tsplib::Instance;

/// Deepest move the search may build.
pub const MAX_DEPTH: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tour {
    order: Vec<usize>,
    pos: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a permutation of 0..{n}")]
pub struct InvalidTour {
    pub n: usize,
}

impl Tour {
    pub fn new(order: Vec<usize>) -> Result<Self, InvalidTour> {
        let n = order.len();
        let mut pos = vec![usize::MAX; n];
        for (idx, &c) in order.iter().enumerate() {
            if c >= n || pos[c] != usize::MAX {
                return Err(InvalidTour { n });
            }
            pos[c] = idx;
        }
        Ok(Tour { order, pos })
    }

    /// The tour 0, 1, ..., n-1.
    pub fn identity(n: usize) -> Self {
        Tour { order: (0..n).collect(), pos: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn into_order(self) -> Vec<usize> {
        self.order
    }

    pub fn position(&self, c: usize) -> usize {
        self.pos[c]
    }

    #[inline]
    pub fn next(&self, c: usize) -> usize {
        let i = self.pos[c] + 1;
        self.order[if i == self.order.len() { 0 } else { i }]
    }

    #[inline]
    pub fn prev(&self, c: usize) -> usize {
        let i = self.pos[c];
        self.order[if i == 0 { self.order.len() - 1 } else { i - 1 }]
    }

    /// (predecessor, successor) of `c`.
    pub fn neighbors(&self, c: usize) -> (usize, usize) {
        (self.prev(c), self.next(c))
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.next(a) == b || self.prev(a) == b
    }

    pub fn length(&self, inst: &Instance) -> i64 {
        inst.tour_length(&self.order)
    }

    /// Checks the permutation and the order/position consistency.
    pub fn is_valid(&self) -> bool {
        let n = self.order.len();
        self.pos.len() == n
            && self.order.iter().enumerate().all(|(i, &c)| c < n && self.pos[c] == i)
    }
}

/// A sequential move under construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveState {
    p: [usize; 2 * MAX_DEPTH],
    len: usize,
    /// Σ C(x_j) − C(y_j) over the removed/added pairs already linked (scaled).
    gain: i64,
}

impl MoveState {
    /// Starts a move by removing tour edge (p1, p2).
    pub fn start(p1: usize, p2: usize) -> Self {
        let mut p = [0; 2 * MAX_DEPTH];
        p[0] = p1;
        p[1] = p2;
        MoveState { p, len: 2, gain: 0 }
    }

    /// Number of removed edges so far.
    pub fn depth(&self) -> usize {
        self.len / 2
    }

    pub fn points(&self) -> &[usize] {
        &self.p[..self.len]
    }

    pub fn first(&self) -> usize {
        self.p[0]
    }

    /// The free end p2k from which the next edge is added.
    pub fn last(&self) -> usize {
        self.p[self.len - 1]
    }

    pub fn touches(&self, c: usize) -> bool {
        self.points().contains(&c)
    }

    /// Running gain Σ_{j<k} C(x_j) − C(y_j), scaled.
    pub fn gain_sum(&self) -> i64 {
        self.gain
    }

    /// Gain before choosing y_k: gain_sum + C(x_k).
    pub fn open_gain(&self, cost: &PenalizedCost<'_>) -> i64 {
        self.gain + cost.scaled(self.p[self.len - 2], self.p[self.len - 1])
    }

    /// Gain if the move is closed now with (p2k, p1).
    pub fn close_gain(&self, cost: &PenalizedCost<'_>) -> i64 {
        self.open_gain(cost) - cost.scaled(self.last(), self.first())
    }

    /// Adds y = (p2k, a) and removes x = (a, b).
    pub fn extend(&mut self, a: usize, b: usize, cost: &PenalizedCost<'_>) {
        assert!(self.len < 2 * MAX_DEPTH, "move deeper than {MAX_DEPTH}");
        self.gain = self.open_gain(cost) - cost.scaled(self.last(), a);
        self.p[self.len] = a;
        self.p[self.len + 1] = b;
        self.len += 2;
    }

    pub fn removed_edges(&self) -> Vec<(usize, usize)> {
        self.points().chunks(2).map(|e| (e[0], e[1])).collect()
    }

    /// Added edges including the closing edge.
    pub fn added_edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = (1..self.len - 1).step_by(2).map(|i| (self.p[i], self.p[i + 1])).collect();
        e.push((self.last(), self.first()));
        e
    }

    /// True when closing now yields a single Hamiltonian cycle.
    pub fn is_feasible_close(&self, tour: &Tour) -> bool {
        self.depth() >= 2 && trace(tour, self.points()).is_some()
    }

    /// Would the move still close feasibly after extending with (a, b)?
    pub fn is_feasible_with(&self, tour: &Tour, a: usize, b: usize) -> bool {
        let mut p = self.p;
        p[self.len] = a;
        p[self.len + 1] = b;
        trace(tour, &p[..self.len + 2]).is_some()
    }
}

/// One stretch of the old tour in the new one, walked from `from` to `to`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    from: usize,
    to: usize,
    forward: bool,
}

/// Walks the new tour over the segments left after removing the move's edges.
/// Returns the pieces in new-tour order, or `None` when the result is not a
/// single cycle.
fn trace(tour: &Tour, p: &[usize]) -> Option<Vec<Piece>> {
    let k = p.len() / 2;
    if k < 2 {
        return None;
    }
    // removed edges oriented along the tour: (tail of one segment, head of the next)
    let mut cuts: Vec<(usize, usize)> = Vec::with_capacity(k);
    for e in p.chunks(2) {
        let (a, b) = (e[0], e[1]);
        if tour.next(a) == b {
            cuts.push((a, b));
        } else if tour.prev(a) == b {
            cuts.push((b, a));
        } else {
            return None;
        }
    }
    cuts.sort_by_key(|&(l, _)| tour.position(l));
    // segment s runs forward from heads[s] to tails[s]
    let heads: Vec<usize> = cuts.iter().map(|&(_, r)| r).collect();
    let tails: Vec<usize> = (0..k).map(|s| cuts[(s + 1) % k].0).collect();
    let locate = |c: usize| -> Option<(usize, bool)> {
        (0..k).find_map(|s| {
            if heads[s] == c {
                Some((s, true))
            } else if tails[s] == c {
                Some((s, false))
            } else {
                None
            }
        })
    };
    let partner = |c: usize| -> usize {
        let j = p.iter().position(|&x| x == c).unwrap();
        let m = p.len();
        if j % 2 == 1 {
            p[(j + 1) % m]
        } else {
            p[(j + m - 1) % m]
        }
    };
    let mut seen = [false; MAX_DEPTH];
    let mut pieces = Vec::with_capacity(k);
    seen[0] = true;
    pieces.push(Piece { from: heads[0], to: tails[0], forward: true });
    let mut exit = tails[0];
    loop {
        let c = partner(exit);
        let (s, at_head) = locate(c)?;
        if s == 0 {
            return (at_head && pieces.len() == k).then_some(pieces);
        }
        if seen[s] {
            return None;
        }
        seen[s] = true;
        let piece = if at_head {
            Piece { from: heads[s], to: tails[s], forward: true }
        } else {
            Piece { from: tails[s], to: heads[s], forward: false }
        };
        exit = piece.to;
        pieces.push(piece);
    }
}

/// Replaces the move's removed edges by its added edges. Panics if the move
/// does not close into a single cycle.
pub fn apply_move(tour: &mut Tour, ms: &MoveState) {
    let pieces = trace(tour, ms.points()).expect("apply_move on an infeasible move");
    let n = tour.len();
    let mut order = Vec::with_capacity(n);
    for pc in pieces {
        let mut i = tour.pos[pc.from];
        let end = tour.pos[pc.to];
        loop {
            order.push(tour.order[i]);
            if i == end {
                break;
            }
            i = if pc.forward {
                if i + 1 == n { 0 } else { i + 1 }
            } else if i == 0 {
                n - 1
            } else {
                i - 1
            };
        }
    }
    debug_assert_eq!(order.len(), n);
    for (idx, &c) in order.iter().enumerate() {
        tour.pos[c] = idx;
    }
    tour.order = order;
}
