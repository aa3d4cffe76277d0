//! Signatures, compact representations and Mal'tsev chain membership.

use std::collections::BTreeSet;

use crate::algebra::Algebra;
use crate::circuit::{Circuit, Term};
use crate::error::{Error, Result};
use crate::Elem;

/// A signature triple `(i, a, b)` with a 0-based coordinate.
pub type Fork = (usize, Elem, Elem);

const NONE: u32 = u32::MAX;

/// For every fork of a tuple list, the first pair of indices witnessing it.
#[derive(Clone, Debug)]
pub struct ForkTable {
    k: usize,
    s: usize,
    w: Vec<(u32, u32)>,
}

impl ForkTable {
    /// Builds the table by refining prefix classes coordinate by coordinate.
    pub fn build<T: AsRef<[Elem]>>(tuples: &[T]) -> Result<ForkTable> {
        let k = tuples.first().map_or(0, |t| t.as_ref().len());
        if tuples.iter().any(|t| t.as_ref().len() != k) {
            return Err(Error::LengthMismatch);
        }
        let s = tuples
            .iter()
            .flat_map(|t| t.as_ref().iter())
            .map(|&e| e as usize + 1)
            .max()
            .unwrap_or(1);
        let mut w = vec![(NONE, NONE); k * s * s];
        let mut classes: Vec<Vec<u32>> = if tuples.is_empty() {
            Vec::new()
        } else {
            vec![(0..tuples.len() as u32).collect()]
        };
        let mut groups: Vec<(Elem, Vec<u32>)> = Vec::new();
        let mut slot = vec![usize::MAX; s];
        for i in 0..k {
            let mut next = Vec::with_capacity(classes.len());
            for class in classes {
                groups.clear();
                for &t in &class {
                    let v = tuples[t as usize].as_ref()[i];
                    let g = slot[v as usize];
                    if g == usize::MAX {
                        slot[v as usize] = groups.len();
                        groups.push((v, vec![t]));
                    } else {
                        groups[g].1.push(t);
                    }
                }
                for (a, ga) in &groups {
                    for (b, gb) in &groups {
                        let cell = &mut w[(i * s + *a as usize) * s + *b as usize];
                        if cell.0 == NONE {
                            *cell = (ga[0], gb[0]);
                        }
                    }
                }
                for (v, g) in groups.drain(..) {
                    slot[v as usize] = usize::MAX;
                    next.push(g);
                }
            }
            classes = next;
        }
        Ok(ForkTable { k, s, w })
    }

    pub fn width(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, a: Elem, b: Elem) -> Option<(usize, usize)> {
        if i >= self.k || a as usize >= self.s || b as usize >= self.s {
            return None;
        }
        let (x, y) = self.w[(i * self.s + a as usize) * self.s + b as usize];
        (x != NONE).then_some((x as usize, y as usize))
    }

    /// Forks at coordinate `i` with their witnesses, in (a, b) order.
    pub fn forks_at(&self, i: usize) -> Vec<(Elem, Elem, usize, usize)> {
        let mut out = Vec::new();
        if i >= self.k {
            return out;
        }
        for a in 0..self.s {
            for b in 0..self.s {
                let (x, y) = self.w[(i * self.s + a) * self.s + b];
                if x != NONE {
                    out.push((a as Elem, b as Elem, x as usize, y as usize));
                }
            }
        }
        out
    }

    pub fn signature(&self) -> BTreeSet<Fork> {
        (0..self.k)
            .flat_map(|i| self.forks_at(i).into_iter().map(move |(a, b, _, _)| (i, a, b)))
            .collect()
    }
}

/// Sig(S): all (i, a, b) such that two members agree before `i` and take `a`, `b` at `i`.
pub fn signature<T: AsRef<[Elem]>>(tuples: &[T]) -> Result<BTreeSet<Fork>> {
    Ok(ForkTable::build(tuples)?.signature())
}

/// Tuples with optional defining circuits over `arity` generators.
#[derive(Clone, Debug, Default)]
pub struct CompactRep {
    k: usize,
    arity: usize,
    tuples: Vec<Vec<Elem>>,
    circuits: Vec<Option<Term>>,
}

impl CompactRep {
    pub fn empty(k: usize, arity: usize) -> CompactRep {
        CompactRep {
            k,
            arity,
            tuples: Vec::new(),
            circuits: Vec::new(),
        }
    }

    /// Wraps entries without thinning.
    pub fn from_entries(k: usize, arity: usize, entries: Vec<(Vec<Elem>, Option<Term>)>) -> Result<CompactRep> {
        let mut rep = CompactRep::empty(k, arity);
        for (t, c) in entries {
            if t.len() != k {
                return Err(Error::LengthMismatch);
            }
            rep.tuples.push(t);
            rep.circuits.push(c);
        }
        Ok(rep)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuples(&self) -> &[Vec<Elem>] {
        &self.tuples
    }

    pub fn terms(&self) -> &[Option<Term>] {
        &self.circuits
    }

    pub fn has_circuits(&self) -> bool {
        self.circuits.iter().all(|c| c.is_some())
    }

    pub fn circuit(&self, i: usize) -> Option<Circuit> {
        self.circuits[i]
            .clone()
            .map(|t| Circuit::new(self.arity, t).expect("circuit variables within arity"))
    }

    pub fn signature(&self) -> BTreeSet<Fork> {
        ForkTable::build(&self.tuples).expect("equal lengths").signature()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<Elem>, &Option<Term>)> {
        self.tuples.iter().zip(&self.circuits)
    }

    pub fn into_entries(self) -> Vec<(Vec<Elem>, Option<Term>)> {
        self.tuples.into_iter().zip(self.circuits).collect()
    }

    /// Checks that every stored circuit evaluates to its tuple on `gens`.
    pub fn verify_circuits(&self, alg: &Algebra, gens: &[Vec<Elem>]) -> Result<bool> {
        let refs: Vec<&Term> = self.circuits.iter().flatten().collect();
        if refs.is_empty() {
            return Ok(true);
        }
        let args: Vec<&[Elem]> = gens.iter().map(|g| g.as_slice()).collect();
        let values = crate::circuit::Gates::flatten(self.arity, &refs).eval(alg, &args)?;
        let stored = self.tuples.iter().zip(&self.circuits).filter(|(_, c)| c.is_some());
        Ok(stored.zip(values).all(|((t, _), v)| *t == v))
    }
}

/// Keeps a sub-list with the same signature and at most two entries per fork.
/// Entries are sorted lexicographically and the first witnesses are kept.
pub fn thin_to_compact(k: usize, arity: usize, mut entries: Vec<(Vec<Elem>, Option<Term>)>) -> Result<CompactRep> {
    if entries.iter().any(|(t, _)| t.len() != k) {
        return Err(Error::LengthMismatch);
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    entries.dedup_by(|later, earlier| later.0 == earlier.0);
    let tuples: Vec<&[Elem]> = entries.iter().map(|(t, _)| t.as_slice()).collect();
    let table = ForkTable::build(&tuples)?;
    let mut keep = vec![false; entries.len()];
    for i in 0..k {
        for (_, _, x, y) in table.forks_at(i) {
            keep[x] = true;
            keep[y] = true;
        }
    }
    let kept = entries
        .into_iter()
        .zip(keep)
        .filter_map(|(e, keep)| keep.then_some(e))
        .collect();
    CompactRep::from_entries(k, arity, kept)
}

/// A Mal'tsev chain: start at `start`, then fold `v = m(v, b_i, a_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    pub start: usize,
    pub steps: Vec<(usize, usize)>,
}

impl Chain {
    pub fn len(&self) -> usize {
        1 + self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn evaluate(&self, alg: &Algebra, rep: &CompactRep) -> Vec<Elem> {
        let mut v = rep.tuples[self.start].clone();
        for &(b, a) in &self.steps {
            for (h, x) in v.iter_mut().enumerate() {
                *x = alg.m(*x, rep.tuples[b][h], rep.tuples[a][h]);
            }
        }
        v
    }

    /// The folded circuit, if every used entry carries one.
    pub fn circuit(&self, alg: &Algebra, rep: &CompactRep) -> Option<Circuit> {
        let mut t = rep.circuits[self.start].clone()?;
        for &(b, a) in &self.steps {
            let cb = rep.circuits[b].clone()?;
            let ca = rep.circuits[a].clone()?;
            t = alg.maltsev().compose(&[t, cb, ca]).expect("ternary");
        }
        Some(Circuit::new(rep.arity, t).expect("variables within arity"))
    }
}

/// Chain membership against a precomputed fork table of `rep`.
pub fn chain_with_table(alg: &Algebra, rep: &CompactRep, table: &ForkTable, b: &[Elem]) -> Option<Chain> {
    if rep.is_empty() || b.len() != rep.k {
        return None;
    }
    if let Some(pos) = rep.tuples.iter().position(|t| t == b) {
        return Some(Chain {
            start: pos,
            steps: Vec::new(),
        });
    }
    if rep.k == 0 {
        return Some(Chain {
            start: 0,
            steps: Vec::new(),
        });
    }
    let (start, _) = table.get(0, b[0], b[0])?;
    let mut v = rep.tuples[start].clone();
    let mut steps = Vec::new();
    for i in 1..rep.k {
        if v[i] == b[i] {
            continue;
        }
        let (x, y) = table.get(i, v[i], b[i])?;
        for (h, e) in v.iter_mut().enumerate() {
            *e = alg.m(*e, rep.tuples[x][h], rep.tuples[y][h]);
        }
        steps.push((x, y));
    }
    debug_assert_eq!(v, b);
    Some(Chain { start, steps })
}

/// Decides `b` against the subpower represented by `rep`.
pub fn maltsev_chain_member(alg: &Algebra, rep: &CompactRep, b: &[Elem]) -> Result<Option<Chain>> {
    if b.len() != rep.k {
        return Err(Error::LengthMismatch);
    }
    let table = ForkTable::build(&rep.tuples)?;
    Ok(chain_with_table(alg, rep, &table, b))
}
