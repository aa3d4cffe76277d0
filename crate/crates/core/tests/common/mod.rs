#![allow(dead_code)]

use std::collections::BTreeSet;

use subpower::closure::subpower_closure;
use subpower::group::AbelianGroup;
use subpower::{Algebra, Elem};

/// Sig by definition: every ordered pair agreeing strictly before `i`.
pub fn brute_signature(set: &[Vec<Elem>]) -> BTreeSet<(usize, Elem, Elem)> {
    let mut sig = BTreeSet::new();
    for s in set {
        for t in set {
            for i in 0..s.len() {
                sig.insert((i, s[i], t[i]));
                if s[i] != t[i] {
                    break;
                }
            }
        }
    }
    sig
}

/// Every element of the subgroup of `L^len` generated by `gens`, by
/// breadth-first search over sums.
pub fn brute_span(g: &AbelianGroup, len: usize, gens: &[Vec<Elem>]) -> BTreeSet<Vec<Elem>> {
    let zero = vec![g.zero(); len];
    let mut seen = BTreeSet::from([zero.clone()]);
    let mut stack = vec![zero];
    while let Some(x) = stack.pop() {
        for h in gens {
            let y: Vec<Elem> = x.iter().zip(h).map(|(&a, &b)| g.add(a, b)).collect();
            if seen.insert(y.clone()) {
                stack.push(y);
            }
        }
    }
    seen
}

pub fn closure_set(alg: &Algebra, gens: &[Vec<Elem>]) -> BTreeSet<Vec<Elem>> {
    subpower_closure(alg, gens, 1_000_000)
        .expect("small closure")
        .to_vecs()
        .into_iter()
        .collect()
}

/// All of `A^k` in lexicographic order.
pub fn all_tuples(size: usize, k: usize) -> Vec<Vec<Elem>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t: Vec<Elem>| {
                (0..size).map(move |a| {
                    let mut u = t.clone();
                    u.push(a as Elem);
                    u
                })
            })
            .collect();
    }
    out
}

/// `Σ_{a ∈ Z_p^n, a·1 = 1} f(a·w)` computed literally.
pub fn literal_collapse(g: &AbelianGroup, p: u32, f: &[Elem], w: &[u32]) -> Elem {
    let n = w.len();
    let mut acc = g.zero();
    for a in all_tuples(p as usize, n) {
        let s: u32 = a.iter().map(|&x| x as u32).sum::<u32>() % p;
        if s != 1 % p {
            continue;
        }
        let v: u32 = a.iter().zip(w).map(|(&x, &y)| x as u32 * y).sum::<u32>() % p;
        acc = g.add(acc, f[v as usize]);
    }
    acc
}

/// The oracle closure of `gens` together with an enumerated compact
/// representation thinned from it.
pub fn closure_rep(alg: &Algebra, gens: &[Vec<Elem>]) -> (BTreeSet<Vec<Elem>>, subpower::rep::CompactRep) {
    let cl = subpower_closure(alg, gens, 1_000_000).expect("small closure");
    let all: Vec<usize> = (0..cl.len()).collect();
    let entries = cl
        .to_vecs()
        .into_iter()
        .zip(cl.circuits(&all))
        .map(|(t, c)| (t, Some(c.into_term())))
        .collect();
    let rep = subpower::rep::thin_to_compact(gens[0].len(), gens.len(), entries).expect("thin");
    (cl.to_vecs().into_iter().collect(), rep)
}
