//! Brute-force closure of tuples under the basic operations.
//!
//! This is the exponential reference: subpower closure, the membership
//! oracle, term-clone enumeration and the matrix test for centrality all
//! reduce to it.

use rustc_hash::FxHashSet;

use crate::algebra::{decode_index, table_len, Algebra};
use crate::circuit::{Circuit, Term};
use crate::error::{Error, Result};
use crate::Elem;

pub const DEFAULT_CAP: usize = 10_000_000;

const DENSE_LIMIT: u64 = 1 << 27;

enum Index {
    Dense(Vec<u64>),
    Packed(FxHashSet<u64>),
    Wide(FxHashSet<Vec<Elem>>),
}

impl Index {
    fn new(size: usize, k: usize) -> Index {
        match (size as u64).checked_pow(k as u32) {
            Some(n) if n <= DENSE_LIMIT => Index::Dense(vec![0; (n as usize).div_ceil(64)]),
            Some(_) => Index::Packed(FxHashSet::default()),
            None => Index::Wide(FxHashSet::default()),
        }
    }

    /// Inserts `t`; returns true if it was new.
    fn insert(&mut self, size: u64, t: &[Elem]) -> bool {
        match self {
            Index::Dense(bits) => {
                let c = code(size, t) as usize;
                let (w, b) = (c / 64, c % 64);
                let fresh = bits[w] >> b & 1 == 0;
                bits[w] |= 1 << b;
                fresh
            }
            Index::Packed(set) => set.insert(code(size, t)),
            Index::Wide(set) => {
                if set.contains(t) {
                    false
                } else {
                    set.insert(t.to_vec());
                    true
                }
            }
        }
    }

    fn contains(&self, size: u64, t: &[Elem]) -> bool {
        match self {
            Index::Dense(bits) => {
                let c = code(size, t) as usize;
                bits[c / 64] >> (c % 64) & 1 == 1
            }
            Index::Packed(set) => set.contains(&code(size, t)),
            Index::Wide(set) => set.contains(t),
        }
    }
}

fn code(size: u64, t: &[Elem]) -> u64 {
    t.iter().rev().fold(0u64, |acc, &e| acc * size + e as u64)
}

#[derive(Clone, Copy, Debug)]
enum Deriv {
    Gen(u32),
    Op { op: u32, start: u32 },
}

/// A closed set of tuples, in discovery order, with derivations.
pub struct Closure {
    k: usize,
    size: u64,
    data: Vec<Elem>,
    derivs: Vec<Deriv>,
    args: Vec<u32>,
    arities: Vec<usize>,
    symbols: Vec<std::sync::Arc<str>>,
    ngens: usize,
    index: Index,
}

impl Closure {
    pub fn len(&self) -> usize {
        self.derivs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.derivs.is_empty()
    }

    pub fn width(&self) -> usize {
        self.k
    }

    pub fn tuple(&self, i: usize) -> &[Elem] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Elem]> {
        (0..self.len()).map(move |i| self.tuple(i))
    }

    pub fn contains(&self, t: &[Elem]) -> bool {
        t.len() == self.k && self.index.contains(self.size, t)
    }

    pub fn position(&self, t: &[Elem]) -> Option<usize> {
        if !self.contains(t) {
            return None;
        }
        (0..self.len()).find(|&i| self.tuple(i) == t)
    }

    pub fn to_vecs(&self) -> Vec<Vec<Elem>> {
        self.iter().map(|t| t.to_vec()).collect()
    }

    /// Circuits over the generators for the given members, sharing common derivations.
    pub fn circuits(&self, which: &[usize]) -> Vec<Circuit> {
        let mut need = vec![false; self.len()];
        for &w in which {
            need[w] = true;
        }
        for i in (0..self.len()).rev() {
            if let (true, Deriv::Op { op, start }) = (need[i], self.derivs[i]) {
                let r = self.arities[op as usize];
                for &a in &self.args[start as usize..start as usize + r] {
                    need[a as usize] = true;
                }
            }
        }
        let mut terms: Vec<Option<Term>> = vec![None; self.len()];
        for i in 0..self.len() {
            if !need[i] {
                continue;
            }
            terms[i] = Some(match self.derivs[i] {
                Deriv::Gen(g) => Term::var(g as usize),
                Deriv::Op { op, start } => {
                    let r = self.arities[op as usize];
                    let kids = self.args[start as usize..start as usize + r]
                        .iter()
                        .map(|&a| terms[a as usize].clone().expect("derived earlier"))
                        .collect();
                    Term::app(self.symbols[op as usize].clone(), kids)
                }
            });
        }
        which
            .iter()
            .map(|&w| Circuit::new(self.ngens, terms[w].clone().expect("needed")).expect("vars in range"))
            .collect()
    }

    pub fn circuit(&self, i: usize) -> Circuit {
        self.circuits(&[i]).pop().expect("one circuit")
    }
}

fn check_gens(alg: &Algebra, gens: &[Vec<Elem>]) -> Result<usize> {
    let k = gens.first().ok_or_else(|| Error::Empty("generator list".into()))?.len();
    for g in gens {
        if g.len() != k {
            return Err(Error::LengthMismatch);
        }
        alg.check_tuple(g)?;
    }
    Ok(k)
}

/// Closes `gens` under all basic operations. `stop` is called on every new
/// member; returning true ends the search early and reports that member.
pub fn closure_until(
    alg: &Algebra,
    gens: &[Vec<Elem>],
    cap: usize,
    mut stop: impl FnMut(&[Elem]) -> bool,
) -> Result<(Closure, Option<usize>)> {
    let k = check_gens(alg, gens)?;
    let size = alg.size() as u64;
    let mut cl = Closure {
        k,
        size,
        data: Vec::new(),
        derivs: Vec::new(),
        args: Vec::new(),
        arities: alg.ops().iter().map(|o| o.arity()).collect(),
        symbols: alg.ops().iter().map(|o| o.symbol_arc()).collect(),
        ngens: gens.len(),
        index: Index::new(alg.size(), k),
    };
    let mut push = |cl: &mut Closure, t: &[Elem], d: Deriv, args: &[u32]| -> Result<Option<usize>> {
        if !cl.index.insert(size, t) {
            return Ok(None);
        }
        if cl.derivs.len() >= cap {
            return Err(Error::CapExceeded { cap });
        }
        cl.data.extend_from_slice(t);
        let d = match d {
            Deriv::Op { op, .. } => {
                let start = cl.args.len() as u32;
                cl.args.extend_from_slice(args);
                Deriv::Op { op, start }
            }
            g => g,
        };
        cl.derivs.push(d);
        let id = cl.derivs.len() - 1;
        Ok(stop(t).then_some(id))
    };
    for (g, t) in gens.iter().enumerate() {
        if let Some(hit) = push(&mut cl, t, Deriv::Gen(g as u32), &[])? {
            return Ok((cl, Some(hit)));
        }
    }
    for (oi, op) in alg.ops().iter().enumerate() {
        if op.arity() == 0 {
            let t = vec![op.table()[0]; k];
            let d = Deriv::Op { op: oi as u32, start: 0 };
            if let Some(hit) = push(&mut cl, &t, d, &[])? {
                return Ok((cl, Some(hit)));
            }
        }
    }
    let s = alg.size();
    let mut out = vec![0 as Elem; k];
    let mut idx = Vec::new();
    let mut z = 0usize;
    while z < cl.len() {
        for (oi, op) in alg.ops().iter().enumerate() {
            let r = op.arity();
            if r == 0 {
                continue;
            }
            let table = op.table();
            if r == 3 {
                if let Some(hit) = ternary_round(&mut cl, z, oi, table, &mut push)? {
                    return Ok((cl, Some(hit)));
                }
                continue;
            }
            for first in 0..r {
                // positions before `first` range over [0, z), `first` is z,
                // later ones over [0, z]
                if first > 0 && z == 0 {
                    break;
                }
                idx.clear();
                idx.resize(r, 0u32);
                idx[first] = z as u32;
                'combo: loop {
                    for h in 0..k {
                        let mut ti = 0usize;
                        for &a in idx.iter() {
                            ti = ti * s + cl.data[a as usize * k + h] as usize;
                        }
                        out[h] = table[ti];
                    }
                    let d = Deriv::Op { op: oi as u32, start: 0 };
                    if let Some(hit) = push(&mut cl, &out, d, &idx)? {
                        return Ok((cl, Some(hit)));
                    }
                    let mut j = r;
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
                        if (idx[j] as usize) < limit {
                            continue 'combo;
                        }
                        idx[j] = 0;
                    }
                }
            }
        }
        z += 1;
    }
    Ok((cl, None))
}

type Push<'a> = dyn FnMut(&mut Closure, &[Elem], Deriv, &[u32]) -> Result<Option<usize>> + 'a;

// All triples whose first occurrence of `z` is at some position, with the
// first two arguments fixed in the outer loops.
fn ternary_round(cl: &mut Closure, z: usize, oi: usize, table: &[Elem], push: &mut Push<'_>) -> Result<Option<usize>> {
    let k = cl.k;
    let s = cl.size as usize;
    let mut base = vec![0usize; k];
    let mut out = vec![0 as Elem; k];
    let d = Deriv::Op { op: oi as u32, start: 0 };
    for first in 0..3 {
        if first > 0 && z == 0 {
            break;
        }
        let range = |pos: usize| -> (usize, usize) {
            match pos.cmp(&first) {
                std::cmp::Ordering::Less => (0, z),
                std::cmp::Ordering::Equal => (z, z + 1),
                std::cmp::Ordering::Greater => (0, z + 1),
            }
        };
        let (r0, r1, r2) = (range(0), range(1), range(2));
        for a in r0.0..r0.1 {
            for b in r1.0..r1.1 {
                for h in 0..k {
                    base[h] = (cl.data[a * k + h] as usize * s + cl.data[b * k + h] as usize) * s;
                }
                for c in r2.0..r2.1 {
                    let row = &cl.data[c * k..c * k + k];
                    for h in 0..k {
                        out[h] = table[base[h] + row[h] as usize];
                    }
                    if cl.index.contains(cl.size, &out) {
                        continue;
                    }
                    if let Some(hit) = push(cl, &out, d, &[a as u32, b as u32, c as u32])? {
                        return Ok(Some(hit));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// The subpower of A^k generated by `gens`.
pub fn subpower_closure(alg: &Algebra, gens: &[Vec<Elem>], cap: usize) -> Result<Closure> {
    Ok(closure_until(alg, gens, cap, |_| false)?.0)
}

/// Decides `b ∈ Sg(gens)` by closure, stopping as soon as `b` appears.
pub fn smp_oracle(alg: &Algebra, gens: &[Vec<Elem>], b: &[Elem], cap: usize) -> Result<bool> {
    Ok(smp_oracle_witness(alg, gens, b, cap)?.is_some())
}

/// As [`smp_oracle`], returning a defining circuit for members.
pub fn smp_oracle_witness(
    alg: &Algebra,
    gens: &[Vec<Elem>],
    b: &[Elem],
    cap: usize,
) -> Result<Option<Circuit>> {
    let k = check_gens(alg, gens)?;
    if b.len() != k {
        return Err(Error::LengthMismatch);
    }
    alg.check_tuple(b)?;
    let (cl, hit) = closure_until(alg, gens, cap, |t| t == b)?;
    Ok(hit.map(|i| cl.circuit(i)))
}

/// All term operations of the given arity with one circuit each, as
/// row-major tables over A^arity.
pub fn clone_enumerate(alg: &Algebra, arity: usize, cap: usize) -> Result<Vec<(Vec<Elem>, Circuit)>> {
    if arity == 0 {
        return Err(Error::Precondition("clone enumeration needs arity at least 1".into()));
    }
    let len = table_len(alg.size(), arity)
        .filter(|&l| l <= 1 << 20)
        .ok_or_else(|| Error::Precondition("arity too large for table enumeration".into()))?;
    let mut projections = vec![vec![0 as Elem; len]; arity];
    let mut buf = vec![0 as Elem; arity];
    for idx in 0..len {
        decode_index(alg.size(), idx, &mut buf);
        for j in 0..arity {
            projections[j][idx] = buf[j];
        }
    }
    let cl = subpower_closure(alg, &projections, cap)?;
    let all: Vec<usize> = (0..cl.len()).collect();
    let circuits = cl.circuits(&all);
    Ok(cl.to_vecs().into_iter().zip(circuits).collect())
}

/// A partition of the domain, stored as a normalized block label per element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Congruence {
    blocks: Vec<usize>,
}

impl Congruence {
    /// Validates that `labels` define an invariant equivalence relation.
    pub fn new(alg: &Algebra, labels: &[usize]) -> Result<Congruence> {
        if labels.len() != alg.size() {
            return Err(Error::NotCongruence(format!(
                "expected {} block labels, got {}",
                alg.size(),
                labels.len()
            )));
        }
        let mut seen: Vec<(usize, usize)> = Vec::new();
        let blocks = labels
            .iter()
            .map(|&l| match seen.iter().find(|(old, _)| *old == l) {
                Some(&(_, id)) => id,
                None => {
                    seen.push((l, seen.len()));
                    seen.len() - 1
                }
            })
            .collect();
        let c = Congruence { blocks };
        c.check_invariant(alg)?;
        Ok(c)
    }

    pub fn identity(alg: &Algebra) -> Congruence {
        Congruence {
            blocks: (0..alg.size()).collect(),
        }
    }

    pub fn total(alg: &Algebra) -> Congruence {
        Congruence {
            blocks: vec![0; alg.size()],
        }
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn related(&self, a: Elem, b: Elem) -> bool {
        self.blocks[a as usize] == self.blocks[b as usize]
    }

    pub fn pairs(&self) -> Vec<(Elem, Elem)> {
        let n = self.blocks.len();
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if self.blocks[a] == self.blocks[b] {
                    out.push((a as Elem, b as Elem));
                }
            }
        }
        out
    }

    fn check_invariant(&self, alg: &Algebra) -> Result<()> {
        let s = alg.size();
        for op in alg.ops() {
            let r = op.arity();
            let len = op.table().len();
            let mut buf = vec![0 as Elem; r];
            for idx in 0..len {
                decode_index(s, idx, &mut buf);
                let base = op.apply(&buf);
                for i in 0..r {
                    let orig = buf[i];
                    for b in 0..s as Elem {
                        if b != orig && self.related(orig, b) {
                            buf[i] = b;
                            let v = op.apply(&buf);
                            if !self.related(base, v) {
                                let msg = format!(
                                    "`{}` maps related arguments to unrelated results at position {} ({} vs {})",
                                    op.symbol(),
                                    i + 1,
                                    orig,
                                    b
                                );
                                return Err(Error::NotCongruence(msg));
                            }
                        }
                    }
                    buf[i] = orig;
                }
            }
        }
        Ok(())
    }
}

/// Decides C(rho, 1; 0) with the matrix subalgebra of A^4 generated by
/// (a,a,b,b) for a rho b and (c,d,c,d) for all c, d.
pub fn verify_central(alg: &Algebra, rho: &Congruence, cap: usize) -> Result<bool> {
    let mut gens = Vec::new();
    for (a, b) in rho.pairs() {
        gens.push(vec![a, a, b, b]);
    }
    let s = alg.size() as Elem;
    for c in 0..s {
        for d in 0..s {
            gens.push(vec![c, d, c, d]);
        }
    }
    gens.sort();
    gens.dedup();
    let (_, bad) = closure_until(alg, &gens, cap, |t| t[0] == t[1] && t[2] != t[3])?;
    Ok(bad.is_none())
}
