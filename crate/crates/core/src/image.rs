//! Images `C(u_1, …, u_n) ≤ L^k` of the difference clonoid, generated from
//! the families `A_n` and `B_n`.

use crate::diffclonoid::ClonoidGenSet;
use crate::echelon::Echelon;
use crate::error::{Error, Result};
use crate::group::AbelianGroup;
use crate::plane::{classify_row, PlaneId};
use crate::Elem;

/// A subgroup of `L^k` held as reduced generators.
#[derive(Clone, Debug)]
pub struct ClonoidImage {
    pub group: AbelianGroup,
    pub k: usize,
    /// Every tuple emitted by the generator families, before reduction.
    pub emitted: usize,
    pub echelon: Echelon,
}

impl ClonoidImage {
    pub fn generators(&self) -> Vec<Vec<Elem>> {
        self.echelon
            .rows()
            .iter()
            .map(|r| self.group.tuple_from_residues(&r.v))
            .collect()
    }

    pub fn contains(&self, t: &[Elem]) -> bool {
        t.len() == self.k && self.echelon.contains(&self.group.tuple_residues(t))
    }

    pub fn size(&self) -> u128 {
        self.echelon.order()
    }

    /// Tuples realizing every fork of the subgroup: for each coordinate a
    /// member with each value there, and that member shifted by each element
    /// vanishing before the coordinate.
    pub fn compact_tuples(&self) -> Vec<Vec<Elem>> {
        let rank = self.group.rank();
        let moduli = self.echelon.moduli().to_vec();
        let rows: Vec<&Vec<u32>> = self.echelon.rows().iter().map(|r| &r.v).collect();
        let add = |x: &[u32], y: &[u32]| -> Vec<u32> {
            x.iter().zip(y).zip(&moduli).map(|((&a, &b), &m)| (a + b) % m).collect()
        };
        // One vector per value at coordinate i, reachable from sums of `gens`.
        let values_at = |i: usize, gens: &[&Vec<u32>]| -> Vec<Vec<u32>> {
            let zero = self.echelon.zero();
            let key = |v: &[u32]| v[i * rank..(i + 1) * rank].to_vec();
            let mut seen = std::collections::BTreeMap::from([(key(&zero), zero.clone())]);
            let mut stack = vec![zero];
            while let Some(x) = stack.pop() {
                for g in gens {
                    let y = add(&x, g);
                    if let std::collections::btree_map::Entry::Vacant(e) = seen.entry(key(&y)) {
                        e.insert(y.clone());
                        stack.push(y);
                    }
                }
            }
            seen.into_values().collect()
        };
        let mut out = vec![self.echelon.zero()];
        for i in 0..self.k {
            let tail: Vec<&Vec<u32>> = self
                .echelon
                .rows()
                .iter()
                .filter(|r| r.lead >= i * rank)
                .map(|r| &r.v)
                .collect();
            let shifts = values_at(i, &tail);
            for x in values_at(i, &rows) {
                for h in &shifts {
                    out.push(add(&x, h));
                }
            }
        }
        out.sort();
        out.dedup();
        out.into_iter().map(|v| self.group.tuple_from_residues(&v)).collect()
    }
}

/// The value of the `A_n` image of the unary `f` at a row, i.e.
/// `Σ_{a·1 = 1} f(a·w)` in closed form.
pub fn collapse(lg: &AbelianGroup, p: u32, f: &[Elem], row: &PlaneId, n: usize) -> Elem {
    match row {
        PlaneId::Diagonal(x) => lg.scale(f[*x as usize], (p as u64).pow(n as u32 - 1)),
        PlaneId::Plane { .. } => {
            let s = f.iter().fold(lg.zero(), |acc, &v| lg.add(acc, v));
            lg.scale(s, (p as u64).pow(n as u32 - 2))
        }
    }
}

/// `us[j]` is the `j`-th generator's U-part as residues mod `p`.
pub fn clonoid_image_comprep(gens: &ClonoidGenSet, us: &[Vec<u32>]) -> Result<ClonoidImage> {
    let lg = gens.l_group()?;
    let p = gens.p;
    let n = us.len();
    if n == 0 {
        return Err(Error::Empty("clonoid image needs at least one generator".into()));
    }
    let k = us[0].len();
    if us.iter().any(|u| u.len() != k) {
        return Err(Error::LengthMismatch);
    }
    let zero = lg.zero();
    let mut ech = Echelon::new(lg.moduli(k));
    let mut emitted = 0;
    let mut emit = |t: &[Elem]| {
        emitted += 1;
        ech.insert(&lg.tuple_residues(t));
    };
    if n == 1 {
        for f in &gens.unary {
            let t: Vec<Elem> = us[0].iter().map(|&x| f[(x % p) as usize]).collect();
            emit(&t);
        }
    } else {
        let rows: Vec<PlaneId> = (0..k)
            .map(|i| classify_row(p, &us.iter().map(|u| u[i]).collect::<Vec<_>>()))
            .collect::<Result<_>>()?;
        let mut planes: Vec<&[u32]> = rows
            .iter()
            .filter_map(|r| match r {
                PlaneId::Plane { c, .. } => Some(c.as_slice()),
                PlaneId::Diagonal(_) => None,
            })
            .collect();
        planes.sort();
        planes.dedup();
        for f in &gens.binary {
            for &plane in &planes {
                let t: Vec<Elem> = rows
                    .iter()
                    .map(|r| match r {
                        PlaneId::Plane { c, x, y } if c.as_slice() == plane => f[(x * p + y) as usize],
                        _ => zero,
                    })
                    .collect();
                emit(&t);
            }
        }
        for f in &gens.unary {
            let t: Vec<Elem> = rows.iter().map(|r| collapse(&lg, p, f, r, n)).collect();
            emit(&t);
        }
    }
    Ok(ClonoidImage {
        group: lg,
        k,
        emitted,
        echelon: ech,
    })
}
