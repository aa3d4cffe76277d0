//! Affine algebras: operation decomposition, subgroup and affine membership,
//! and enumerated compact representations of affine subpowers.

use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use crate::algebra::{decode_index, Algebra};
use crate::circuit::Term;
use crate::echelon::Echelon;
use crate::error::{Error, Result};
use crate::group::AbelianGroup;
use crate::rep::{thin_to_compact, CompactRep};
use crate::Elem;

/// A group endomorphism given by the images of the basis vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Endo {
    pub images: Vec<Vec<u32>>,
}

impl Endo {
    pub fn apply(&self, orders: &[u32], x: &[u32], out: &mut [u32]) {
        out.iter_mut().for_each(|o| *o = 0);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0 {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o = ((*o as u64 + xj as u64 * self.images[j][i] as u64) % orders[i] as u64) as u32;
            }
        }
    }

    /// The scalar of a cyclic endomorphism.
    pub fn scalar(&self) -> Option<u32> {
        (self.images.len() == 1).then(|| self.images[0][0])
    }

    pub fn is_zero(&self) -> bool {
        self.images.iter().all(|v| v.iter().all(|&x| x == 0))
    }
}

/// `f(x_1..x_n) = Σ φ_i(x_i) + c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineOpSpec {
    pub symbol: String,
    pub endos: Vec<Endo>,
    pub constant: Elem,
}

/// Decomposes every operation as an affine map over `g`, or reports the
/// first operation and input where that fails.
pub fn verify_affine(alg: &Algebra, g: &AbelianGroup) -> Result<Vec<AffineOpSpec>> {
    if alg.size() != g.size() {
        return Err(Error::NotAffine(format!(
            "group of order {} on a domain of size {}",
            g.size(),
            alg.size()
        )));
    }
    let s = alg.size();
    if let Some(plus) = alg.op_index("+") {
        let op = alg.op(plus);
        if op.arity() == 2 {
            for x in 0..s as Elem {
                for y in 0..s as Elem {
                    if op.apply(&[x, y]) != g.add(x, y) {
                        return Err(Error::NotAffine(format!(
                            "`+` disagrees with the group addition at ({x}, {y})"
                        )));
                    }
                }
            }
        }
    }
    let orders = g.orders();
    let rank = g.rank();
    let zero = g.zero();
    let mut specs = Vec::with_capacity(alg.ops().len());
    for op in alg.ops() {
        let r = op.arity();
        let mut args = vec![zero; r];
        let c = op.apply(&args);
        let cres = g.residues(c).to_vec();
        // phi[i][x] as residues
        let mut phi: Vec<Vec<Vec<u32>>> = Vec::with_capacity(r);
        for i in 0..r {
            let mut col = Vec::with_capacity(s);
            for x in 0..s as Elem {
                args[i] = x;
                let v = g.residues(op.apply(&args));
                col.push(v.iter().zip(&cres).zip(orders).map(|((&a, &b), &m)| (a + m - b) % m).collect::<Vec<u32>>());
            }
            args[i] = zero;
            phi.push(col);
        }
        for (i, col) in phi.iter().enumerate() {
            for x in 0..s as Elem {
                for y in 0..s as Elem {
                    let sum = g.add(x, y);
                    let lhs = &col[sum as usize];
                    let rhs: Vec<u32> = col[x as usize]
                        .iter()
                        .zip(&col[y as usize])
                        .zip(orders)
                        .map(|((&a, &b), &m)| (a + b) % m)
                        .collect();
                    if *lhs != rhs {
                        return Err(Error::NotAffine(format!(
                            "`{}` is not additive in argument {} at ({x}, {y})",
                            op.symbol(),
                            i + 1
                        )));
                    }
                }
            }
        }
        let mut buf = vec![0 as Elem; r];
        for idx in 0..op.table().len() {
            decode_index(s, idx, &mut buf);
            let mut acc = cres.clone();
            for (i, &x) in buf.iter().enumerate() {
                for (j, a) in acc.iter_mut().enumerate() {
                    *a = (*a + phi[i][x as usize][j]) % orders[j];
                }
            }
            if g.element(&acc) != op.table()[idx] {
                return Err(Error::NotAffine(format!(
                    "`{}` differs from its affine decomposition at {:?}",
                    op.symbol(),
                    buf
                )));
            }
        }
        let endos = phi
            .iter()
            .map(|col| Endo {
                images: (0..rank)
                    .map(|j| {
                        let mut e = vec![0u32; rank];
                        e[j] = 1;
                        col[g.element(&e) as usize].clone()
                    })
                    .collect(),
            })
            .collect();
        specs.push(AffineOpSpec {
            symbol: op.symbol().to_string(),
            endos,
            constant: c,
        });
    }
    Ok(specs)
}

fn residue_tuples(g: &AbelianGroup, ts: &[Vec<Elem>]) -> Vec<Vec<u32>> {
    ts.iter().map(|t| g.tuple_residues(t)).collect()
}

/// Membership in the subgroup of L^k generated by `gens`, with coefficients.
pub fn subgroup_member(g: &AbelianGroup, gens: &[Vec<Elem>], target: &[Elem]) -> Result<Option<Vec<u32>>> {
    let k = target.len();
    if gens.iter().any(|t| t.len() != k) {
        return Err(Error::LengthMismatch);
    }
    let ech = Echelon::from_generators(g.moduli(k), &residue_tuples(g, gens));
    Ok(ech.solve(&g.tuple_residues(target)))
}

/// Membership in the affine hull of `points`: coefficients `λ` (mod the
/// exponent) summing to 1 with `Σ λ_i p_i = target`.
pub fn affine_member(g: &AbelianGroup, points: &[Vec<Elem>], target: &[Elem]) -> Result<Option<Vec<u32>>> {
    let p0 = points.first().ok_or_else(|| Error::Empty("point list".into()))?;
    let k = p0.len();
    if target.len() != k || points.iter().any(|p| p.len() != k) {
        return Err(Error::LengthMismatch);
    }
    let moduli = g.moduli(k);
    let r0 = g.tuple_residues(p0);
    let sub = |a: &[u32], b: &[u32]| -> Vec<u32> {
        a.iter().zip(b).zip(&moduli).map(|((&x, &y), &m)| (x + m - y) % m).collect()
    };
    let diffs: Vec<Vec<u32>> = points[1..].iter().map(|p| sub(&g.tuple_residues(p), &r0)).collect();
    let ech = Echelon::from_generators(moduli.clone(), &diffs);
    let Some(n) = ech.solve(&sub(&g.tuple_residues(target), &r0)) else {
        return Ok(None);
    };
    let e = g.exponent() as u64;
    let total: u64 = n.iter().map(|&x| x as u64).sum::<u64>() % e;
    let mut lambda = vec![((1 + e - total) % e) as u32];
    lambda.extend(n);
    Ok(Some(lambda))
}

/// A difference vector with member circuits `plus`, `minus` such that
/// `plus - minus` equals it.
#[derive(Clone, Debug)]
pub struct Delta {
    pub v: Vec<u32>,
    pub plus: Term,
    pub minus: Term,
}

/// `base + <deltas>` with circuits over `arity` generators.
#[derive(Clone, Debug)]
pub struct AffineSubpowerRep {
    pub group: AbelianGroup,
    pub k: usize,
    pub arity: usize,
    pub base: Vec<Elem>,
    pub base_term: Term,
    pub deltas: Vec<Delta>,
    pub echelon: Echelon,
}

impl AffineSubpowerRep {
    fn moduli(&self) -> &[u32] {
        self.echelon.moduli()
    }

    fn offset(&self, t: &[Elem]) -> Vec<u32> {
        let b = self.group.tuple_residues(&self.base);
        self.group
            .tuple_residues(t)
            .iter()
            .zip(&b)
            .zip(self.moduli())
            .map(|((&x, &y), &m)| (x + m - y) % m)
            .collect()
    }

    pub fn contains(&self, t: &[Elem]) -> bool {
        t.len() == self.k && self.echelon.contains(&self.offset(t))
    }

    pub fn size(&self) -> u128 {
        self.echelon.order()
    }

    /// Every member, if there are at most `cap`.
    pub fn expand(&self, cap: usize) -> Option<Vec<Vec<Elem>>> {
        let b = self.group.tuple_residues(&self.base);
        let elems = self.echelon.enumerate(cap)?;
        Some(
            elems
                .into_iter()
                .map(|v| {
                    let r: Vec<u32> = v.iter().zip(&b).zip(self.moduli()).map(|((&x, &y), &m)| (x + y) % m).collect();
                    self.group.tuple_from_residues(&r)
                })
                .collect(),
        )
    }

    /// A circuit for a member, built by chaining m over the deltas.
    pub fn circuit_for(&self, alg: &Algebra, t: &[Elem]) -> Option<Term> {
        let coef = self.echelon.solve(&self.offset(t))?;
        let mut memo = FxHashMap::default();
        Some(self.chain(alg, &coef, &mut memo))
    }

    fn chain(&self, alg: &Algebra, coef: &[u32], memo: &mut FxHashMap<(usize, u32), Term>) -> Term {
        let m = alg.maltsev();
        let mut x = self.base_term.clone();
        for (j, &n) in coef.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let d = &self.deltas[j];
            let pn = multiple(m, d, n, j, memo);
            x = m.compose(&[x, d.minus.clone(), pn]).expect("ternary");
        }
        x
    }
}

// P^(n) = M + n·δ, via P^(n) = m(P^(n-1), M, P).
fn multiple(m: &crate::circuit::Circuit, d: &Delta, n: u32, j: usize, memo: &mut FxHashMap<(usize, u32), Term>) -> Term {
    if n == 1 {
        return d.plus.clone();
    }
    if let Some(t) = memo.get(&(j, n)) {
        return t.clone();
    }
    let mut start = 1;
    let mut cur = d.plus.clone();
    for c in (2..n).rev() {
        if let Some(t) = memo.get(&(j, c)) {
            start = c;
            cur = t.clone();
            break;
        }
    }
    for c in start + 1..=n {
        cur = m.compose(&[cur, d.minus.clone(), d.plus.clone()]).expect("ternary");
        memo.insert((j, c), cur.clone());
    }
    cur
}

/// Computes `Sg(gens)` as `base + <deltas>` and emits an enumerated compact
/// representation realising every fork.
pub fn affine_closure_comprep(
    alg: &Algebra,
    g: &AbelianGroup,
    specs: &[AffineOpSpec],
    gens: &[Vec<Elem>],
) -> Result<(CompactRep, AffineSubpowerRep)> {
    let affine = affine_subpower(alg, g, specs, gens)?;
    let rep = emit_compact(alg, &affine)?;
    Ok((rep, affine))
}

/// The fixpoint computing `base + <deltas>` for `Sg(gens)`.
pub fn affine_subpower(
    alg: &Algebra,
    g: &AbelianGroup,
    specs: &[AffineOpSpec],
    gens: &[Vec<Elem>],
) -> Result<AffineSubpowerRep> {
    let first = gens.first().ok_or_else(|| Error::Empty("generator list".into()))?;
    let k = first.len();
    for t in gens {
        if t.len() != k {
            return Err(Error::LengthMismatch);
        }
        alg.check_tuple(t)?;
    }
    if specs.len() != alg.ops().len() {
        return Err(Error::Precondition("one affine decomposition per operation is required".into()));
    }
    let n = gens.len();
    let rank = g.rank();
    let orders = g.orders().to_vec();
    let moduli = g.moduli(k);
    let base = first.clone();
    let base_term = Term::var(0);
    let base_res = g.tuple_residues(&base);
    let sub = |a: &[u32], b: &[u32]| -> Vec<u32> {
        a.iter().zip(b).zip(&moduli).map(|((&x, &y), &m)| (x + m - y) % m).collect()
    };
    let mut queue: VecDeque<Delta> = VecDeque::new();
    for j in 1..n {
        queue.push_back(Delta {
            v: sub(&g.tuple_residues(&gens[j]), &base_res),
            plus: Term::var(j),
            minus: base_term.clone(),
        });
    }
    for op in alg.ops() {
        let fb: Vec<Elem> = (0..k).map(|h| op.apply(&vec![base[h]; op.arity()])).collect();
        queue.push_back(Delta {
            v: sub(&g.tuple_residues(&fb), &base_res),
            plus: Term::app(op.symbol_arc(), vec![base_term.clone(); op.arity()]),
            minus: base_term.clone(),
        });
    }
    let mut echelon = Echelon::new(moduli.clone());
    let mut deltas: Vec<Delta> = Vec::new();
    let mut buf = vec![0u32; rank];
    while let Some(d) = queue.pop_front() {
        if d.v.iter().all(|&x| x == 0) || echelon.contains(&d.v) {
            continue;
        }
        echelon.insert(&d.v);
        for (op, spec) in alg.ops().iter().zip(specs) {
            for (i, endo) in spec.endos.iter().enumerate() {
                if endo.is_zero() {
                    continue;
                }
                let mut v = vec![0u32; k * rank];
                for h in 0..k {
                    endo.apply(&orders, &d.v[h * rank..(h + 1) * rank], &mut buf);
                    v[h * rank..(h + 1) * rank].copy_from_slice(&buf);
                }
                let with = |t: &Term| {
                    let mut args = vec![base_term.clone(); op.arity()];
                    args[i] = t.clone();
                    Term::app(op.symbol_arc(), args)
                };
                queue.push_back(Delta {
                    v,
                    plus: with(&d.plus),
                    minus: with(&d.minus),
                });
            }
        }
        deltas.push(d);
    }
    Ok(AffineSubpowerRep {
        group: g.clone(),
        k,
        arity: n,
        base,
        base_term,
        deltas,
        echelon,
    })
}

// Elements of the subgroup of Z_{orders} spanned by `gens`, each with
// coefficients over the generators, in BFS order from 0.
fn span_with_coefs(orders: &[u32], gens: &[Vec<u32>], e: u32) -> Vec<(Vec<u32>, Vec<u32>)> {
    let mut out: Vec<(Vec<u32>, Vec<u32>)> = vec![(vec![0; orders.len()], vec![0; gens.len()])];
    let mut seen: FxHashMap<Vec<u32>, ()> = FxHashMap::default();
    seen.insert(out[0].0.clone(), ());
    let mut z = 0;
    while z < out.len() {
        for (gi, gv) in gens.iter().enumerate() {
            let v: Vec<u32> = out[z].0.iter().zip(gv).zip(orders).map(|((&a, &b), &m)| (a + b) % m).collect();
            if seen.insert(v.clone(), ()).is_none() {
                let mut c = out[z].1.clone();
                c[gi] = (c[gi] + 1) % e;
                out.push((v, c));
            }
        }
        z += 1;
    }
    out
}

fn emit_compact(alg: &Algebra, a: &AffineSubpowerRep) -> Result<CompactRep> {
    let g = &a.group;
    let rank = g.rank();
    let orders = g.orders();
    let ech = &a.echelon;
    let rows = ech.rows();
    let e = ech.exponent();
    let base_res = g.tuple_residues(&a.base);
    let moduli = ech.moduli();
    let mut memo = FxHashMap::default();
    let mut entries: Vec<(Vec<Elem>, Option<Term>)> = Vec::new();
    let zero_rows = vec![0u32; rows.len()];
    let (_, zero_coef) = ech.combine_rows(&zero_rows);
    let realise = |z: &[u32]| -> (Vec<u32>, Vec<u32>) {
        if z.iter().all(|&x| x == 0) {
            (vec![0; moduli.len()], zero_coef.clone())
        } else {
            ech.combine_rows(z)
        }
    };
    let add_rows = |a: &[u32], b: &[u32]| -> Vec<u32> {
        a.iter().zip(b).map(|(&x, &y)| x.wrapping_add(y)).collect()
    };
    for i in 0..a.k {
        let cols = i * rank..(i + 1) * rank;
        let all: Vec<Vec<u32>> = rows.iter().map(|r| r.v[cols.clone()].to_vec()).collect();
        let p_span = span_with_coefs(orders, &all, e);
        let sub_idx: Vec<usize> = (0..rows.len()).filter(|&r| rows[r].lead >= cols.start).collect();
        let sub_gens: Vec<Vec<u32>> = sub_idx.iter().map(|&r| rows[r].v[cols.clone()].to_vec()).collect();
        let d_span = span_with_coefs(orders, &sub_gens, e);
        let kappas: Vec<Vec<u32>> = d_span
            .iter()
            .skip(1)
            .map(|(_, c)| {
                let mut z = vec![0u32; rows.len()];
                for (j, &r) in sub_idx.iter().enumerate() {
                    z[r] = c[j];
                }
                z
            })
            .collect();
        for (_, zc) in &p_span {
            let mut variants = vec![zc.clone()];
            for kz in &kappas {
                variants.push(add_rows(zc, kz));
            }
            for z in variants {
                let (v, coef) = realise(&z);
                let r: Vec<u32> = v.iter().zip(&base_res).zip(moduli).map(|((&x, &y), &m)| (x + y) % m).collect();
                let tuple = g.tuple_from_residues(&r);
                let term = a.chain(alg, &coef, &mut memo);
                entries.push((tuple, Some(term)));
            }
        }
    }
    if a.k == 0 {
        entries.push((Vec::new(), Some(a.base_term.clone())));
    }
    thin_to_compact(a.k, a.arity, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closure::{subpower_closure, DEFAULT_CAP};
    use crate::zoo;
    use std::collections::BTreeSet;

    #[test]
    fn z3_maltsev_decomposition() {
        let z3 = zoo::cyclic_affine(3);
        let specs = verify_affine(&z3, &zoo::cyclic_group(3)).unwrap();
        let scalars: Vec<u32> = specs[0].endos.iter().map(|e| e.scalar().unwrap()).collect();
        assert_eq!(scalars, vec![1, 2, 1]);
        assert_eq!(specs[0].constant, 0);
        let z2 = zoo::cyclic_affine(2);
        let specs = verify_affine(&z2, &zoo::cyclic_group(2)).unwrap();
        let scalars: Vec<u32> = specs[0].endos.iter().map(|e| e.scalar().unwrap()).collect();
        assert_eq!(scalars, vec![1, 1, 1]);
    }

    #[test]
    fn multiplication_is_not_affine() {
        let m = crate::Circuit::parse("(m x1 x2 x3)", None).unwrap();
        let z3 = zoo::cyclic_affine(3);
        let times: Vec<Elem> = (0..9).map(|i| ((i / 3) * (i % 3) % 3) as Elem).collect();
        let alg = Algebra::new(3, vec![("m".into(), 3, z3.op(0).table().to_vec()), ("*".into(), 2, times)], m).unwrap();
        assert!(matches!(verify_affine(&alg, &zoo::cyclic_group(3)), Err(Error::NotAffine(_))));
    }

    #[test]
    fn membership_examples() {
        let z4 = AbelianGroup::cyclic(4);
        let gens = vec![vec![2, 0], vec![0, 2]];
        let w = subgroup_member(&z4, &gens, &[2, 2]).unwrap().unwrap();
        assert_eq!(w.len(), 2);
        assert!(subgroup_member(&z4, &gens, &[1, 0]).unwrap().is_none());
        assert!(subgroup_member(&z4, &[], &[0, 0]).unwrap().is_some());
        let z3 = AbelianGroup::cyclic(3);
        let pts = vec![vec![0, 0], vec![1, 1]];
        let l = affine_member(&z3, &pts, &[2, 2]).unwrap().unwrap();
        assert_eq!((l[0] + l[1]) % 3, 1);
        assert!(affine_member(&z3, &pts, &[1, 0]).unwrap().is_none());
        assert!(affine_member(&z3, &pts, &[0, 0]).unwrap().is_some());
    }

    #[test]
    fn comprep_matches_closure() {
        for n in [3usize, 4, 6] {
            let alg = zoo::cyclic_affine(n);
            let g = zoo::cyclic_group(n);
            let specs = verify_affine(&alg, &g).unwrap();
            let gens = vec![vec![0, 1, 2], vec![1, 1, 0], vec![2, 0, 1 % n as u8]];
            let (rep, aff) = affine_closure_comprep(&alg, &g, &specs, &gens).unwrap();
            let cl = subpower_closure(&alg, &gens, DEFAULT_CAP).unwrap();
            let want: BTreeSet<Vec<Elem>> = cl.iter().map(|t| t.to_vec()).collect();
            let got: BTreeSet<Vec<Elem>> = aff.expand(1 << 20).unwrap().into_iter().collect();
            assert_eq!(got, want);
            assert_eq!(rep.signature(), crate::rep::signature(&cl.to_vecs()).unwrap());
            assert!(rep.verify_circuits(&alg, &gens).unwrap());
        }
    }

    #[test]
    fn single_generator_is_fixed() {
        let alg = zoo::cyclic_affine(3);
        let g = zoo::cyclic_group(3);
        let specs = verify_affine(&alg, &g).unwrap();
        let (rep, aff) = affine_closure_comprep(&alg, &g, &specs, &[vec![2, 1]]).unwrap();
        assert_eq!(rep.tuples(), &[vec![2, 1]]);
        assert_eq!(aff.size(), 1);
    }
}
