//! The difference clonoid of a wreath product: all `ŝ - t̂ : U^n → L` for
//! terms `s ~ t`, that is, terms agreeing on `L × U`.
//!
//! Functions `Z_p^n → L` are tables indexed row-major by residues, first
//! argument most significant.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::algebra::{decode_index, table_len};
use crate::closure::clone_enumerate;
use crate::echelon::Echelon;
use crate::error::{Error, Result};
use crate::group::AbelianGroup;
use crate::wreath::WreathSpec;
use crate::Elem;

/// Unary generators `A` and diagonal-zero binary generators `B`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClonoidGenSet {
    pub p: u32,
    pub l_orders: Vec<u32>,
    pub l_zero: Elem,
    pub unary: Vec<Vec<Elem>>,
    pub binary: Vec<Vec<Elem>>,
}

impl ClonoidGenSet {
    pub fn empty(p: u32, l_group: &AbelianGroup) -> ClonoidGenSet {
        ClonoidGenSet {
            p,
            l_orders: l_group.orders().to_vec(),
            l_zero: l_group.zero(),
            unary: Vec::new(),
            binary: Vec::new(),
        }
    }

    pub fn l_group(&self) -> Result<AbelianGroup> {
        AbelianGroup::new(self.l_orders.clone(), self.l_zero as usize)
    }

    pub fn len(&self) -> usize {
        self.unary.len() + self.binary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.l_group()?;
        let p = self.p as usize;
        let check = |t: &Vec<Elem>, len: usize| -> Result<()> {
            if t.len() != len {
                return Err(Error::LengthMismatch);
            }
            match t.iter().find(|&&e| e as usize >= g.size()) {
                Some(&e) => Err(Error::OutOfRange {
                    elem: e as usize,
                    size: g.size(),
                }),
                None => Ok(()),
            }
        };
        for t in &self.unary {
            check(t, p)?;
        }
        for t in &self.binary {
            check(t, p * p)?;
            if (0..p).any(|x| t[x * p + x] != g.zero()) {
                return Err(Error::Wreath("binary generator does not vanish on the diagonal".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DiffMethod {
    /// Class-by-class fixpoint over `~`-classes and a difference subgroup.
    #[default]
    Fixpoint,
    /// Literal clone enumeration of the wreath algebra.
    Enumerate,
}

// Maps element-indexed tables over U^n to residue-indexed ones.
fn residue_permutation(spec: &WreathSpec, n: usize) -> Vec<usize> {
    let p = spec.p();
    let ug = spec.u_group();
    let len = p.pow(n as u32);
    let mut out = vec![0; len];
    let mut digits = vec![0 as Elem; n];
    for (ridx, slot) in out.iter_mut().enumerate() {
        decode_index(p, ridx, &mut digits);
        *slot = digits
            .iter()
            .fold(0usize, |acc, &r| acc * p + ug.element(&[r as u32]) as usize);
    }
    out
}

fn subgroup_tables(spec: &WreathSpec, n: usize, diffs: Echelon) -> Vec<Vec<Elem>> {
    let lg = spec.l_group();
    let perm = residue_permutation(spec, n);
    diffs
        .rows()
        .iter()
        .map(|r| {
            let t = lg.tuple_from_residues(&r.v);
            perm.iter().map(|&e| t[e]).collect()
        })
        .collect()
}

/// Generators of the arity-`n` part of the difference clonoid.
pub fn diff_clonoid_tables(spec: &WreathSpec, n: usize, method: DiffMethod, cap: usize) -> Result<Vec<Vec<Elem>>> {
    if n == 0 {
        return Err(Error::Precondition("difference tables need arity at least 1".into()));
    }
    let diffs = match method {
        DiffMethod::Fixpoint => fixpoint(spec, n, cap)?,
        DiffMethod::Enumerate => enumerated(spec, n, cap)?,
    };
    Ok(subgroup_tables(spec, n, diffs))
}

fn fixpoint(spec: &WreathSpec, n: usize, cap: usize) -> Result<Echelon> {
    let (ls, p) = (spec.l().size(), spec.p());
    let lg = spec.l_group();
    let a = spec.algebra();
    let llen = table_len(ls, n).ok_or(Error::DomainSize(ls))?;
    let ulen = table_len(p, n).ok_or(Error::DomainSize(p))?;
    let zero = spec.zero();
    let mut diffs = Echelon::new(lg.moduli(ulen));
    let mut pending: Vec<Vec<Elem>> = Vec::new();

    // classes: (L-table, U-table) key and hat representative
    let mut keys: Vec<Vec<Elem>> = Vec::new();
    let mut hats: Vec<Vec<Elem>> = Vec::new();
    let mut index: FxHashMap<Vec<Elem>, usize> = FxHashMap::default();
    let mut digits = vec![0 as Elem; n];
    for j in 0..n {
        let mut key = Vec::with_capacity(llen + ulen);
        for idx in 0..llen {
            decode_index(ls, idx, &mut digits);
            key.push(digits[j]);
        }
        for idx in 0..ulen {
            decode_index(p, idx, &mut digits);
            key.push(digits[j]);
        }
        if !index.contains_key(&key) {
            index.insert(key.clone(), keys.len());
            keys.push(key);
            hats.push(vec![zero; ulen]);
        }
    }

    let insert = |diffs: &mut Echelon, pending: &mut Vec<Vec<Elem>>, d: Vec<Elem>| {
        if d.iter().any(|&x| x != zero) && diffs.insert(&lg.tuple_residues(&d)) {
            pending.push(d);
        }
    };

    let mut lo = 0;
    let mut first = true;
    loop {
        let hi = keys.len();
        for op in a.ops() {
            let r = op.arity();
            let lop = spec.l().op(spec.l().op_index(op.symbol()).expect("shared signature"));
            let uop = spec.u().op(spec.u().op_index(op.symbol()).expect("shared signature"));
            if r == 0 {
                if first {
                    let lc = lop.apply(&[]);
                    let uc = uop.apply(&[]);
                    let mut key = vec![lc; llen];
                    key.extend(std::iter::repeat_n(uc, ulen));
                    let v = vec![spec.split(op.apply(&[])).0; ulen];
                    classify(&mut keys, &mut hats, &mut index, key, v, lg, &mut |d| {
                        insert(&mut diffs, &mut pending, d)
                    });
                }
                continue;
            }
            let mut combo = vec![0usize; r];
            let mut args = vec![0 as Elem; r];
            'combo: loop {
                if combo.iter().any(|&c| c >= lo) {
                    let mut key = Vec::with_capacity(llen + ulen);
                    for idx in 0..llen {
                        for (x, &c) in args.iter_mut().zip(&combo) {
                            *x = keys[c][idx];
                        }
                        key.push(lop.apply(&args));
                    }
                    let mut v = Vec::with_capacity(ulen);
                    for idx in 0..ulen {
                        for (x, &c) in args.iter_mut().zip(&combo) {
                            *x = keys[c][llen + idx];
                        }
                        key.push(uop.apply(&args));
                        for (x, &c) in args.iter_mut().zip(&combo) {
                            *x = spec.join(hats[c][idx], keys[c][llen + idx]);
                        }
                        v.push(spec.split(op.apply(&args)).0);
                    }
                    classify(&mut keys, &mut hats, &mut index, key, v, lg, &mut |d| {
                        insert(&mut diffs, &mut pending, d)
                    });
                    if keys.len() > cap {
                        return Err(Error::CapExceeded { cap });
                    }
                }
                for pos in (0..r).rev() {
                    combo[pos] += 1;
                    if combo[pos] < hi {
                        continue 'combo;
                    }
                    combo[pos] = 0;
                }
                break;
            }
        }
        first = false;
        if keys.len() == hi {
            break;
        }
        lo = hi;
    }

    // close the differences under the linear parts of the operations
    let mut args = Vec::new();
    while let Some(d) = pending.pop() {
        for op in spec.l().ops() {
            for i in 0..op.arity() {
                args.clear();
                args.resize(op.arity(), zero);
                let img: Vec<Elem> = d
                    .iter()
                    .map(|&x| {
                        args[i] = x;
                        op.apply(&args)
                    })
                    .collect();
                insert(&mut diffs, &mut pending, img);
            }
        }
    }
    Ok(diffs)
}

fn classify(
    keys: &mut Vec<Vec<Elem>>,
    hats: &mut Vec<Vec<Elem>>,
    index: &mut FxHashMap<Vec<Elem>, usize>,
    key: Vec<Elem>,
    v: Vec<Elem>,
    lg: &AbelianGroup,
    on_diff: &mut impl FnMut(Vec<Elem>),
) {
    match index.get(&key) {
        Some(&c) => on_diff(v.iter().zip(&hats[c]).map(|(&a, &b)| lg.sub(a, b)).collect()),
        None => {
            index.insert(key.clone(), keys.len());
            keys.push(key);
            hats.push(v);
        }
    }
}

fn enumerated(spec: &WreathSpec, n: usize, cap: usize) -> Result<Echelon> {
    let p = spec.p();
    let size = spec.algebra().size();
    let lg = spec.l_group();
    let ulen = table_len(p, n).ok_or(Error::DomainSize(p))?;
    // table positions of the arguments (0, u_1), …, (0, u_n)
    let mut digits = vec![0 as Elem; n];
    let at_zero: Vec<usize> = (0..ulen)
        .map(|idx| {
            decode_index(p, idx, &mut digits);
            digits
                .iter()
                .fold(0usize, |acc, &u| acc * size + spec.join(spec.zero(), u) as usize)
        })
        .collect();
    let mut diffs = Echelon::new(lg.moduli(ulen));
    let mut reps: FxHashMap<Vec<Elem>, Vec<Elem>> = FxHashMap::default();
    for (table, circuit) in clone_enumerate(spec.algebra(), n, cap)? {
        let key = spec.companion().term_table(&circuit, n)?;
        let hat: Vec<Elem> = at_zero.iter().map(|&i| spec.split(table[i]).0).collect();
        match reps.get(&key) {
            Some(rep) => {
                let d: Vec<Elem> = hat.iter().zip(rep).map(|(&a, &b)| lg.sub(a, b)).collect();
                diffs.insert(&lg.tuple_residues(&d));
            }
            None => {
                reps.insert(key, hat);
            }
        }
    }
    Ok(diffs)
}

/// `A` from the unary differences and `B` from the binary differences
/// vanishing on the diagonal.
pub fn diff_clonoid_gens(spec: &WreathSpec, method: DiffMethod, cap: usize) -> Result<ClonoidGenSet> {
    let lg = spec.l_group();
    let p = spec.p();
    let mut out = ClonoidGenSet::empty(p as u32, lg);
    out.unary = diff_clonoid_tables(spec, 1, method, cap)?;
    out.binary = diagonal_kernel(lg, p, &diff_clonoid_tables(spec, 2, method, cap)?);
    Ok(out)
}

/// Generators of `{g ∈ ⟨gens⟩ : g(x,x) = 0}` for binary tables over `Z_p`.
pub fn diagonal_kernel(lg: &AbelianGroup, p: usize, gens: &[Vec<Elem>]) -> Vec<Vec<Elem>> {
    let rank = lg.rank();
    let mut ech = Echelon::new(lg.moduli(p + p * p));
    for g in gens {
        let mut row: Vec<Elem> = (0..p).map(|x| g[x * p + x]).collect();
        row.extend_from_slice(g);
        ech.insert(&lg.tuple_residues(&row));
    }
    ech.rows()
        .iter()
        .filter(|r| r.lead >= p * rank)
        .map(|r| lg.tuple_from_residues(&r.v)[p..].to_vec())
        .collect()
}
