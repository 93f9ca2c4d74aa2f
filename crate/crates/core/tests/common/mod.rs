//! Reference computations shared by the integration tests. They share no
//! code with the library: graph queries walk every simple path, and logistic
//! fits use plain gradient ascent.

#![allow(dead_code)]

use std::collections::BTreeSet;

use causalreg::data::Dataset;
use causalreg::graph::{Dag, NodeSet};
use causalreg::scm::plogis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const NAMES: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

/// Random DAG on 2..=6 nodes. Edges only go from lower to higher position in
/// a shuffled order, so the result is acyclic by construction.
pub fn random_dag(rng: &mut ChaCha8Rng) -> Dag {
    let k = rng.random_range(2..=6);
    let mut order: Vec<&str> = NAMES[..k].to_vec();
    for i in (1..k).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let density: f64 = rng.random_range(0.15..0.75);
    let mut d = Dag::new();
    for n in &NAMES[..k] {
        d.add_node(n).unwrap();
    }
    for i in 0..k {
        for j in i + 1..k {
            if rng.random_bool(density) {
                d.add_edge(order[i], order[j]).unwrap();
            }
        }
    }
    d
}

pub fn children(d: &Dag, v: &str) -> Vec<String> {
    d.edges().into_iter().filter(|(a, _)| a == v).map(|(_, b)| b).collect()
}

pub fn reach(d: &Dag, v: &str) -> BTreeSet<String> {
    let mut seen = BTreeSet::new();
    let mut stack = children(d, v);
    while let Some(c) = stack.pop() {
        if seen.insert(c.clone()) {
            stack.extend(children(d, &c));
        }
    }
    seen
}

/// Simple undirected paths from `x` to `y` as node sequences.
pub fn paths(d: &Dag, x: &str, y: &str) -> Vec<Vec<String>> {
    fn go(d: &Dag, y: &str, cur: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
        let last = cur.last().unwrap().clone();
        if last == y {
            out.push(cur.clone());
            return;
        }
        for (a, b) in d.edges() {
            let next = if a == last {
                b
            } else if b == last {
                a
            } else {
                continue;
            };
            if !cur.contains(&next) {
                cur.push(next);
                go(d, y, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(d, y, &mut vec![x.to_string()], &mut out);
    out
}

pub fn open(d: &Dag, p: &[String], z: &NodeSet) -> bool {
    (1..p.len() - 1).all(|i| {
        let v = &p[i];
        let collider = d.has_edge(&p[i - 1], v) && d.has_edge(&p[i + 1], v);
        if collider {
            z.contains(v) || reach(d, v).iter().any(|w| z.contains(w))
        } else {
            !z.contains(v)
        }
    })
}

pub fn oracle_separated(d: &Dag, xs: &NodeSet, ys: &NodeSet, z: &NodeSet) -> bool {
    xs.iter()
        .all(|x| ys.iter().all(|y| paths(d, x, y).iter().all(|p| !open(d, p, z))))
}

pub fn subsets(pool: &[String]) -> Vec<NodeSet> {
    (0..1u32 << pool.len())
        .map(|m| {
            pool.iter()
                .enumerate()
                .filter(|(i, _)| m >> i & 1 == 1)
                .map(|(_, n)| n.clone())
                .collect()
        })
        .collect()
}

pub fn set(names: &[&str]) -> NodeSet {
    names.iter().map(|s| s.to_string()).collect()
}

/// 100 rows with a confounded binary exposure and a binary outcome.
pub fn hundred_rows() -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut l, mut a, mut y) = (vec![], vec![], vec![]);
    for _ in 0..100 {
        let li: f64 = rng.sample(StandardNormal);
        let ai = f64::from(rng.random_bool(plogis(0.3 * li)));
        let yi = f64::from(rng.random_bool(plogis(-0.4 + 0.8 * ai + 0.6 * li)));
        l.push(li);
        a.push(ai);
        y.push(yi);
    }
    Dataset::new([("L", l), ("A", a), ("Y", y)]).unwrap()
}

pub fn rows(d: &Dataset, cols: &[&str]) -> Vec<Vec<f64>> {
    (0..d.n_rows())
        .map(|i| {
            std::iter::once(1.0)
                .chain(cols.iter().map(|c| d.column(c).unwrap()[i]))
                .collect()
        })
        .collect()
}

pub fn score(x: &[Vec<f64>], y: &[f64], beta: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; beta.len()];
    for (xi, yi) in x.iter().zip(y) {
        let eta: f64 = xi.iter().zip(beta).map(|(a, b)| a * b).sum();
        let r = yi - plogis(eta);
        for (gj, xj) in g.iter_mut().zip(xi) {
            *gj += r * xj;
        }
    }
    g
}

/// Plain gradient ascent on the mean log-likelihood. The curvature is at most
/// a quarter of the largest eigenvalue of X'X/n, so a step of 1 is safe for
/// this well-scaled design.
pub fn gradient_ascent(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mut beta = vec![0.0; x[0].len()];
    for _ in 0..200_000 {
        let g = score(x, y, &beta);
        if g.iter().all(|v| (v / n).abs() < 1e-13) {
            break;
        }
        for (b, gj) in beta.iter_mut().zip(&g) {
            *b += gj / n;
        }
    }
    beta
}
