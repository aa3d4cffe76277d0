//! Fixing coordinates of a subpower given by an enumerated compact representation.
//!
//! For a coordinate `i` whose predecessors are constant on the relation,
//! the pair sets `T_j = Sg_m(proj_{i,j} R)` decide which forks at `j > i`
//! survive the restriction `x(i) ∈ P`. Survivors are realised by
//! materialising m-derivations of pairs as full tuples with circuits.

use rustc_hash::FxHashMap;

use crate::algebra::Algebra;
use crate::circuit::Term;
use crate::echelon::Echelon;
use crate::error::{Error, Result};
use crate::group::AbelianGroup;
use crate::rep::{thin_to_compact, CompactRep, ForkTable};
use crate::Elem;

#[derive(Clone, Copy, Debug)]
enum PairDeriv {
    Leaf(u32),
    M(u32, u32, u32),
}

/// The m-closure of a set of pairs, in discovery order.
struct PairSet {
    pairs: Vec<(Elem, Elem)>,
    derivs: Vec<PairDeriv>,
}

fn close_pairs_generic(alg: &Algebra, leaves: &[((Elem, Elem), u32)]) -> PairSet {
    let s = alg.size();
    let mut seen = vec![false; s * s];
    let mut set = PairSet {
        pairs: Vec::new(),
        derivs: Vec::new(),
    };
    for &((x, y), t) in leaves {
        let c = x as usize * s + y as usize;
        if !seen[c] {
            seen[c] = true;
            set.pairs.push((x, y));
            set.derivs.push(PairDeriv::Leaf(t));
        }
    }
    let mut z = 0;
    while z < set.pairs.len() {
        for first in 0..3 {
            if first > 0 && z == 0 {
                break;
            }
            let mut idx = [0usize; 3];
            idx[first] = z;
            'combo: loop {
                let (a, b, c) = (set.pairs[idx[0]], set.pairs[idx[1]], set.pairs[idx[2]]);
                let p = (alg.m(a.0, b.0, c.0), alg.m(a.1, b.1, c.1));
                let code = p.0 as usize * s + p.1 as usize;
                if !seen[code] {
                    seen[code] = true;
                    set.pairs.push(p);
                    set.derivs.push(PairDeriv::M(idx[0] as u32, idx[1] as u32, idx[2] as u32));
                }
                let mut j = 3;
                loop {
                    if j == 0 {
                        break 'combo;
                    }
                    j -= 1;
                    if j == first {
                        continue;
                    }
                    let limit = if j < first { z } else { z + 1 };
                    idx[j] += 1;
                    if idx[j] < limit {
                        continue 'combo;
                    }
                    idx[j] = 0;
                }
            }
        }
        z += 1;
    }
    set
}

// In an affine algebra the m-closure is p0 + <p - p0>, reached by single
// m-steps m(q, p0, p) from p0.
fn close_pairs_affine(group: &AbelianGroup, size: usize, leaves: &[((Elem, Elem), u32)]) -> PairSet {
    let mut seen = vec![false; size * size];
    let mut set = PairSet {
        pairs: Vec::new(),
        derivs: Vec::new(),
    };
    let mut distinct: Vec<((Elem, Elem), u32)> = Vec::new();
    for &((x, y), t) in leaves {
        let c = x as usize * size + y as usize;
        if !seen[c] {
            seen[c] = true;
            distinct.push(((x, y), t));
        }
    }
    seen.iter_mut().for_each(|b| *b = false);
    let Some(&(p0, _)) = distinct.first() else { return set };
    let r = group.rank();
    let moduli = group.moduli(2);
    let res = |p: (Elem, Elem)| -> Vec<u32> {
        let mut v = group.residues(p.0).to_vec();
        v.extend_from_slice(group.residues(p.1));
        v
    };
    let r0 = res(p0);
    let diff = |p: (Elem, Elem)| -> Vec<u32> {
        res(p).iter().zip(&r0).zip(&moduli).map(|((&a, &b), &m)| (a + m - b) % m).collect()
    };
    // leaves that enlarge the difference group, in order
    let mut ech = Echelon::new(moduli.clone());
    let mut gens: Vec<(Vec<u32>, u32)> = Vec::new();
    for (i, &(p, _)) in distinct.iter().enumerate().skip(1) {
        let d = diff(p);
        if ech.insert(&d) {
            gens.push((d, i as u32));
        }
    }
    // leaves keep their own derivations
    for &(p, t) in &distinct {
        seen[p.0 as usize * size + p.1 as usize] = true;
        set.pairs.push(p);
        set.derivs.push(PairDeriv::Leaf(t));
    }
    let mut z = 0;
    while z < set.pairs.len() {
        let cur = res(set.pairs[z]);
        for (d, leaf) in &gens {
            let v: Vec<u32> = cur.iter().zip(d).zip(&moduli).map(|((&a, &b), &m)| (a + b) % m).collect();
            let p = (group.element(&v[..r]), group.element(&v[r..]));
            let code = p.0 as usize * size + p.1 as usize;
            if !seen[code] {
                seen[code] = true;
                set.pairs.push(p);
                set.derivs.push(PairDeriv::M(z as u32, 0, *leaf));
            }
        }
        z += 1;
    }
    set
}

struct Materializer<'a> {
    alg: &'a Algebra,
    rep: &'a CompactRep,
    set: &'a PairSet,
    memo: FxHashMap<u32, (Vec<Elem>, Option<Term>)>,
}

impl Materializer<'_> {
    fn get(&mut self, root: u32) -> (Vec<Elem>, Option<Term>) {
        let mut stack = vec![(root, false)];
        while let Some((p, expanded)) = stack.pop() {
            if self.memo.contains_key(&p) {
                continue;
            }
            match self.set.derivs[p as usize] {
                PairDeriv::Leaf(t) => {
                    let t = t as usize;
                    self.memo
                        .insert(p, (self.rep.tuples()[t].clone(), self.rep.terms()[t].clone()));
                }
                PairDeriv::M(a, b, c) => {
                    if expanded {
                        let (ta, ca) = &self.memo[&a];
                        let (tb, cb) = &self.memo[&b];
                        let (tc, cc) = &self.memo[&c];
                        let tuple = (0..ta.len()).map(|h| self.alg.m(ta[h], tb[h], tc[h])).collect();
                        let term = match (ca, cb, cc) {
                            (Some(x), Some(y), Some(z)) => Some(
                                self.alg
                                    .maltsev()
                                    .compose(&[x.clone(), y.clone(), z.clone()])
                                    .expect("ternary"),
                            ),
                            _ => None,
                        };
                        self.memo.insert(p, (tuple, term));
                    } else {
                        stack.push((p, true));
                        for q in [a, b, c] {
                            if !self.memo.contains_key(&q) {
                                stack.push((q, false));
                            }
                        }
                    }
                }
            }
        }
        self.memo[&root].clone()
    }
}

fn apply_m(alg: &Algebra, a: &(Vec<Elem>, Option<Term>), b: &(Vec<Elem>, Option<Term>), c: &(Vec<Elem>, Option<Term>)) -> (Vec<Elem>, Option<Term>) {
    let tuple = (0..a.0.len()).map(|h| alg.m(a.0[h], b.0[h], c.0[h])).collect();
    let term = match (&a.1, &b.1, &c.1) {
        (Some(x), Some(y), Some(z)) => Some(
            alg.maltsev()
                .compose(&[x.clone(), y.clone(), z.clone()])
                .expect("ternary"),
        ),
        _ => None,
    };
    (tuple, term)
}

/// Restricts coordinate `coord` to values with `allowed[x]`. Coordinates
/// before `coord` must be constant on the relation. With `affine` set,
/// the algebra's Mal'tsev term must be x - y + z for that group.
pub fn fix_coordinate(
    alg: &Algebra,
    rep: &CompactRep,
    coord: usize,
    allowed: &[bool],
    affine: Option<&AbelianGroup>,
) -> Result<CompactRep> {
    let k = rep.k();
    if coord >= k {
        return Err(Error::Precondition(format!("coordinate {} out of range for width {}", coord + 1, k)));
    }
    if allowed.len() != alg.size() {
        return Err(Error::Precondition("value predicate must cover the domain".into()));
    }
    if rep.is_empty() {
        return Ok(CompactRep::empty(k, rep.arity()));
    }
    let first = &rep.tuples()[0];
    if rep.tuples().iter().any(|t| t[..coord] != first[..coord]) {
        return Err(Error::Precondition(format!(
            "coordinates before {} are not constant",
            coord + 1
        )));
    }
    let table = ForkTable::build(rep.tuples())?;
    let present: Vec<Elem> = (0..alg.size() as Elem)
        .filter(|&x| allowed[x as usize] && table.get(coord, x, x).is_some())
        .collect();
    if present.is_empty() {
        return Ok(CompactRep::empty(k, rep.arity()));
    }
    let entry = |i: usize| (rep.tuples()[i].clone(), rep.terms()[i].clone());
    let mut out: Vec<(Vec<Elem>, Option<Term>)> = Vec::new();
    for &x in &present {
        for &y in &present {
            if let Some((a, b)) = table.get(coord, x, y) {
                out.push(entry(a));
                if b != a {
                    out.push(entry(b));
                }
            }
        }
    }
    let s = alg.size();
    for j in coord + 1..k {
        let forks = table.forks_at(j);
        let mut leaves = Vec::new();
        let mut seen = vec![false; s * s];
        for (t, tuple) in rep.tuples().iter().enumerate() {
            let p = (tuple[coord], tuple[j]);
            let c = p.0 as usize * s + p.1 as usize;
            if !seen[c] {
                seen[c] = true;
                leaves.push((p, t as u32));
            }
        }
        let set = match affine {
            Some(g) => close_pairs_affine(g, s, &leaves),
            None => close_pairs_generic(alg, &leaves),
        };
        let mut via = vec![u32::MAX; s];
        for (idx, &(x, y)) in set.pairs.iter().enumerate() {
            if allowed[x as usize] && via[y as usize] == u32::MAX {
                via[y as usize] = idx as u32;
            }
        }
        let mut mat = Materializer {
            alg,
            rep,
            set: &set,
            memo: FxHashMap::default(),
        };
        for (b, c, wb, wc) in forks {
            let p = via[b as usize];
            if p == u32::MAX {
                continue;
            }
            let t = mat.get(p);
            if b != c {
                let sfork = apply_m(alg, &t, &entry(wb), &entry(wc));
                out.push(sfork);
            }
            out.push(t);
        }
    }
    thin_to_compact(k, rep.arity(), out)
}

/// Sig of `{x ∈ R : x(1) = a}`.
pub fn fix_value(alg: &Algebra, rep: &CompactRep, a: Elem) -> Result<CompactRep> {
    alg.check_elem(a as usize)?;
    let mut allowed = vec![false; alg.size()];
    allowed[a as usize] = true;
    fix_coordinate(alg, rep, 0, &allowed, None)
}

/// Fixes coordinates `1..=m` to `values` in order.
pub fn fix_values(alg: &Algebra, rep: &CompactRep, values: &[Elem]) -> Result<CompactRep> {
    if values.len() > rep.k() {
        return Err(Error::LengthMismatch);
    }
    let mut cur = rep.clone();
    for (i, &a) in values.iter().enumerate() {
        alg.check_elem(a as usize)?;
        let mut allowed = vec![false; alg.size()];
        allowed[a as usize] = true;
        cur = fix_coordinate(alg, &cur, i, &allowed, None)?;
        if cur.is_empty() {
            break;
        }
    }
    Ok(cur)
}

/// Sig of `{x ∈ R : x(1) ∈ block}`.
pub fn fix_block(alg: &Algebra, rep: &CompactRep, block: &[Elem]) -> Result<CompactRep> {
    if block.is_empty() {
        return Err(Error::Empty("block".into()));
    }
    let mut allowed = vec![false; alg.size()];
    for &b in block {
        alg.check_elem(b as usize)?;
        allowed[b as usize] = true;
    }
    fix_coordinate(alg, rep, 0, &allowed, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closure::{subpower_closure, Closure, DEFAULT_CAP};
    use crate::rep::signature;
    use crate::zoo;

    fn enumerated(cl: &Closure, k: usize, n: usize) -> CompactRep {
        let all: Vec<usize> = (0..cl.len()).collect();
        let entries = cl
            .to_vecs()
            .into_iter()
            .zip(cl.circuits(&all))
            .map(|(t, c)| (t, Some(c.into_term())))
            .collect();
        thin_to_compact(k, n, entries).unwrap()
    }

    #[test]
    fn fix_in_z3_square() {
        let z3 = zoo::cyclic_affine(3);
        let gens = vec![vec![0, 0], vec![1, 0], vec![0, 1]];
        let cl = subpower_closure(&z3, &gens, DEFAULT_CAP).unwrap();
        assert_eq!(cl.len(), 9);
        let rep = enumerated(&cl, 2, 3);
        let fixed = fix_value(&z3, &rep, 1).unwrap();
        let mut want = std::collections::BTreeSet::new();
        want.insert((0usize, 1u8, 1u8));
        for x in 0..3 {
            for y in 0..3 {
                want.insert((1, x, y));
            }
        }
        assert_eq!(fixed.signature(), want);
        assert!(fixed.verify_circuits(&z3, &gens).unwrap());
    }

    #[test]
    fn singleton_and_missing_value() {
        let z5 = zoo::cyclic_affine(5);
        let gens = vec![vec![2, 4, 1]];
        let cl = subpower_closure(&z5, &gens, DEFAULT_CAP).unwrap();
        let rep = enumerated(&cl, 3, 1);
        assert_eq!(fix_value(&z5, &rep, 2).unwrap().tuples(), &[vec![2, 4, 1]]);
        assert!(fix_value(&z5, &rep, 3).unwrap().is_empty());
        assert!(fix_values(&z5, &rep, &[]).unwrap().tuples() == rep.tuples());
    }

    #[test]
    fn affine_pairs_match_generic() {
        let z6 = zoo::cyclic_affine(6);
        let g = zoo::cyclic_group(6);
        let gens = vec![vec![0, 0, 0, 1], vec![2, 3, 1, 1], vec![1, 0, 4, 5]];
        let cl = subpower_closure(&z6, &gens, DEFAULT_CAP).unwrap();
        let rep = enumerated(&cl, 4, 3);
        for a in 0..6u8 {
            let mut allowed = vec![false; 6];
            allowed[a as usize] = true;
            let x = fix_coordinate(&z6, &rep, 0, &allowed, None).unwrap();
            let y = fix_coordinate(&z6, &rep, 0, &allowed, Some(&g)).unwrap();
            let brute: Vec<Vec<Elem>> = cl.iter().filter(|t| t[0] == a).map(|t| t.to_vec()).collect();
            assert_eq!(x.signature(), signature(&brute).unwrap());
            assert_eq!(y.signature(), x.signature());
            assert!(y.verify_circuits(&z6, &gens).unwrap());
        }
    }
}
