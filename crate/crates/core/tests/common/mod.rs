//! Independent oracles shared by the integration tests. Nothing here calls the
//! library's tree, α or search code.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use rlkopt::{Instance, Metric, PI_SCALE};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join("tsplib")
}

pub fn random_instance<R: Rng>(rng: &mut R, n: usize, span: i32) -> Instance {
    let coords = (0..n).map(|_| (rng.gen_range(0..span) as f64, rng.gen_range(0..span) as f64)).collect();
    Instance::from_coords(format!("rand{n}"), Metric::Euc2d, coords).unwrap()
}

/// Length of the shortest tour by trying every permutation that starts at city 0.
pub fn brute_force_optimum(inst: &Instance) -> i64 {
    let n = inst.dimension();
    if n <= 3 {
        return inst.tour_length(&(0..n).collect::<Vec<_>>());
    }
    fn go(inst: &Instance, path: &mut Vec<usize>, used: &mut [bool], len: i64, best: &mut i64) {
        let n = used.len();
        let last = *path.last().unwrap();
        if path.len() == n {
            *best = (*best).min(len + inst.distance(last, 0));
            return;
        }
        for c in 1..n {
            if !used[c] {
                let l = len + inst.distance(last, c);
                if l >= *best {
                    continue;
                }
                used[c] = true;
                path.push(c);
                go(inst, path, used, l, best);
                path.pop();
                used[c] = false;
            }
        }
    }
    let mut used = vec![false; n];
    used[0] = true;
    let mut best = i64::MAX;
    go(inst, &mut vec![0], &mut used, 0, &mut best);
    best
}

/// Scaled penalized cost recomputed from first principles.
pub fn scaled_cost(inst: &Instance, pi: &[i64], i: usize, j: usize) -> i64 {
    PI_SCALE * inst.distance(i, j) + pi[i] + pi[j]
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Kruskal spanning tree over every city except `skip`, optionally with one
/// edge forced in first. Returns the total scaled cost.
pub fn kruskal(inst: &Instance, pi: &[i64], skip: usize, forced: Option<(usize, usize)>) -> i64 {
    let n = inst.dimension();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if i != skip && j != skip {
                edges.push((scaled_cost(inst, pi, i, j), i, j));
            }
        }
    }
    edges.sort();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut total = 0;
    if let Some((i, j)) = forced {
        parent[i] = j;
        total += scaled_cost(inst, pi, i, j);
    }
    for (c, i, j) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a] = b;
            total += c;
        }
    }
    total
}

/// Length of the cheapest 1-tree with special node `v` that contains `forced`.
pub fn forced_one_tree(inst: &Instance, pi: &[i64], v: usize, forced: Option<(usize, usize)>) -> i64 {
    let n = inst.dimension();
    let mut v_costs: Vec<(i64, usize)> = (0..n).filter(|&c| c != v).map(|c| (scaled_cost(inst, pi, v, c), c)).collect();
    v_costs.sort();
    match forced {
        Some((i, j)) if i == v || j == v => {
            let other = if i == v { j } else { i };
            let second = v_costs.iter().find(|&&(_, c)| c != other).unwrap().0;
            kruskal(inst, pi, v, None) + scaled_cost(inst, pi, v, other) + second
        }
        _ => kruskal(inst, pi, v, forced) + v_costs[0].0 + v_costs[1].0,
    }
}

/// α(i,j) by definition: the growth of the minimum 1-tree when (i,j) is forced in.
pub fn forced_alpha(inst: &Instance, pi: &[i64], v: usize, i: usize, j: usize) -> i64 {
    forced_one_tree(inst, pi, v, Some((i, j))) - forced_one_tree(inst, pi, v, None)
}
