//! Echelon forms for subgroups of products of cyclic groups.
//!
//! Vectors are residue vectors with per-column moduli. Rows keep their
//! coefficients over the inserted generators modulo the exponent, so every
//! membership answer comes with a witness.

use crate::group::{gcd, lcm};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub v: Vec<u32>,
    pub lead: usize,
    pub coef: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct Echelon {
    moduli: Vec<u32>,
    exponent: u32,
    ngens: usize,
    rows: Vec<Row>,
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

fn md(x: i64, m: u32) -> u32 {
    x.rem_euclid(m as i64) as u32
}

/// Inverse of `a` modulo `m` for coprime `a`, `m`.
fn inv_mod(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let (_, x, _) = ext_gcd(a as i64, m as i64);
    x.rem_euclid(m as i64) as u64
}

/// Smallest z with d*z = t (mod q), where d divides q.
fn divide(d: u32, t: u32, q: u32) -> Option<u32> {
    let g = gcd(d as u64, q as u64) as u32;
    if !t.is_multiple_of(g) {
        return None;
    }
    let (d, t, q2) = (d / g, t / g, q / g);
    Some(((t as u64 * inv_mod(d as u64, q2 as u64)) % q2.max(1) as u64) as u32)
}

struct Vector {
    v: Vec<u32>,
    coef: Vec<u32>,
}

impl Echelon {
    pub fn new(moduli: Vec<u32>) -> Echelon {
        let exponent = moduli.iter().fold(1u64, |acc, &m| lcm(acc, m as u64)) as u32;
        Echelon {
            moduli,
            exponent,
            ngens: 0,
            rows: Vec::new(),
        }
    }

    pub fn from_generators(moduli: Vec<u32>, gens: &[Vec<u32>]) -> Echelon {
        let mut e = Echelon::new(moduli);
        e.extend(gens);
        e
    }

    pub fn moduli(&self) -> &[u32] {
        &self.moduli
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn generator_count(&self) -> usize {
        self.ngens
    }

    pub fn zero(&self) -> Vec<u32> {
        vec![0; self.moduli.len()]
    }

    /// Adds several generators and rebuilds once.
    pub fn extend(&mut self, gens: &[Vec<u32>]) {
        let start = self.ngens;
        self.ngens += gens.len();
        let mut pool = self.take_pool();
        for (j, g) in gens.iter().enumerate() {
            let mut coef = vec![0; self.ngens];
            coef[start + j] = 1 % self.exponent;
            pool.push(Vector {
                v: g.iter().zip(&self.moduli).map(|(&x, &m)| x % m).collect(),
                coef,
            });
        }
        self.sweep(pool);
    }

    /// Adds one generator. Returns true iff the subgroup grew.
    pub fn insert(&mut self, g: &[u32]) -> bool {
        let idx = self.ngens;
        self.ngens += 1;
        for r in &mut self.rows {
            r.coef.resize(self.ngens, 0);
        }
        let mut residual: Vec<u32> = g.iter().zip(&self.moduli).map(|(&x, &m)| x % m).collect();
        let mut coef = vec![0u32; self.ngens];
        coef[idx] = 1 % self.exponent;
        for r in &self.rows {
            let c = r.lead;
            let d = r.v[c];
            if residual[c].is_multiple_of(d) && residual[c] != 0 {
                let z = (residual[c] / d) as i64;
                self.sub_row(&mut residual, &mut coef, z, r);
            }
        }
        if residual.iter().all(|&x| x == 0) {
            return false;
        }
        let mut pool = self.take_pool();
        pool.push(Vector { v: residual, coef });
        self.sweep(pool);
        true
    }

    fn sub_row(&self, v: &mut [u32], coef: &mut [u32], z: i64, r: &Row) {
        for ((x, &y), &m) in v.iter_mut().zip(&r.v).zip(&self.moduli) {
            *x = md(*x as i64 - z * y as i64, m);
        }
        for (x, &y) in coef.iter_mut().zip(&r.coef) {
            *x = md(*x as i64 - z * y as i64, self.exponent);
        }
    }

    fn take_pool(&mut self) -> Vec<Vector> {
        let n = self.ngens;
        std::mem::take(&mut self.rows)
            .into_iter()
            .map(|mut r| {
                r.coef.resize(n, 0);
                Vector { v: r.v, coef: r.coef }
            })
            .collect()
    }

    fn combine(&self, a: &Vector, sa: i64, b: &Vector, sb: i64) -> Vector {
        let e = self.exponent;
        Vector {
            v: a.v
                .iter()
                .zip(&b.v)
                .zip(&self.moduli)
                .map(|((&x, &y), &m)| md(sa * x as i64 + sb * y as i64, m))
                .collect(),
            coef: a
                .coef
                .iter()
                .zip(&b.coef)
                .map(|(&x, &y)| md(sa * x as i64 + sb * y as i64, e))
                .collect(),
        }
    }

    fn scaled(&self, a: &Vector, s: u64) -> Vector {
        let e = self.exponent as u64;
        Vector {
            v: a.v
                .iter()
                .zip(&self.moduli)
                .map(|(&x, &m)| ((x as u64 * s) % m as u64) as u32)
                .collect(),
            coef: a.coef.iter().map(|&x| ((x as u64 * s) % e) as u32).collect(),
        }
    }

    fn sweep(&mut self, mut pool: Vec<Vector>) {
        let mut rows = Vec::new();
        for c in 0..self.moduli.len() {
            let q = self.moduli[c];
            let cands: Vec<usize> = (0..pool.len()).filter(|&i| pool[i].v[c] != 0).collect();
            let Some(&first) = cands.first() else { continue };
            let order = |x: u32| q / gcd(x as u64, q as u64) as u32;
            let mut piv = first;
            for &i in &cands {
                if order(pool[i].v[c]) > order(pool[piv].v[c]) {
                    piv = i;
                }
            }
            for &i in &cands {
                if i == piv {
                    continue;
                }
                let x = pool[piv].v[c];
                let y = pool[i].v[c];
                if let Some(z) = divide(x, y, q) {
                    pool[i] = self.combine(&pool[i], 1, &pool[piv], -(z as i64));
                } else {
                    let (g, s, t) = ext_gcd(x as i64, y as i64);
                    let new_p = self.combine(&pool[piv], s, &pool[i], t);
                    let new_o = self.combine(&pool[piv], y as i64 / g, &pool[i], -(x as i64 / g));
                    pool[piv] = new_p;
                    pool[i] = new_o;
                }
            }
            let e = pool[piv].v[c];
            let d = gcd(e as u64, q as u64) as u32;
            if e != d {
                let u = self.unit_for(e, d, q);
                pool[piv] = self.scaled(&pool[piv], u);
            }
            let p = pool.remove(piv);
            let ann = self.scaled(&p, (q / d) as u64);
            rows.push(Row {
                lead: c,
                v: p.v,
                coef: p.coef,
            });
            if ann.v.iter().any(|&x| x != 0) {
                pool.push(ann);
            }
            pool.retain(|x| x.v.iter().any(|&y| y != 0));
        }
        self.rows = rows;
    }

    // A multiplier u, invertible modulo the exponent, with u*e = d (mod q).
    fn unit_for(&self, e: u32, d: u32, q: u32) -> u64 {
        let q2 = (q / d) as u64;
        let base = inv_mod((e / d) as u64 % q2.max(1), q2);
        let ex = self.exponent as u64;
        let mut u = base;
        loop {
            if gcd(u, ex) == 1 && gcd(u, q as u64) == 1 {
                return u;
            }
            u += q2;
        }
    }

    /// Coefficients over the inserted generators expressing `t`, if it lies in the span.
    pub fn solve(&self, t: &[u32]) -> Option<Vec<u32>> {
        let mut residual: Vec<u32> = t.iter().zip(&self.moduli).map(|(&x, &m)| x % m).collect();
        let mut coef = vec![0u32; self.ngens];
        for r in &self.rows {
            let c = r.lead;
            let d = r.v[c];
            if !residual[c].is_multiple_of(d) {
                return None;
            }
            let z = residual[c] / d;
            if z != 0 {
                // subtract z*row from residual, add z*coef to the answer
                for ((x, &y), &m) in residual.iter_mut().zip(&r.v).zip(&self.moduli) {
                    *x = md(*x as i64 - z as i64 * y as i64, m);
                }
                let e = self.exponent as u64;
                for (x, &y) in coef.iter_mut().zip(&r.coef) {
                    *x = ((*x as u64 + z as u64 * y as u64) % e) as u32;
                }
            }
        }
        if residual.iter().all(|&x| x == 0) {
            Some(coef)
        } else {
            None
        }
    }

    pub fn contains(&self, t: &[u32]) -> bool {
        self.solve(t).is_some()
    }

    /// Coefficients over the rows (not the generators) expressing `t`.
    pub fn solve_rows(&self, t: &[u32]) -> Option<Vec<u32>> {
        let mut residual: Vec<u32> = t.iter().zip(&self.moduli).map(|(&x, &m)| x % m).collect();
        let mut out = vec![0u32; self.rows.len()];
        for (ri, r) in self.rows.iter().enumerate() {
            let c = r.lead;
            let d = r.v[c];
            if !residual[c].is_multiple_of(d) {
                return None;
            }
            let z = residual[c] / d;
            if z != 0 {
                for ((x, &y), &m) in residual.iter_mut().zip(&r.v).zip(&self.moduli) {
                    *x = md(*x as i64 - z as i64 * y as i64, m);
                }
                out[ri] = z;
            }
        }
        residual.iter().all(|&x| x == 0).then_some(out)
    }

    /// Combination of rows with the given coefficients, and the matching
    /// generator coefficients.
    pub fn combine_rows(&self, z: &[u32]) -> (Vec<u32>, Vec<u32>) {
        let mut v = self.zero();
        let mut coef = vec![0u32; self.ngens];
        let e = self.exponent as u64;
        for (r, &zi) in self.rows.iter().zip(z) {
            if zi == 0 {
                continue;
            }
            for ((x, &y), &m) in v.iter_mut().zip(&r.v).zip(&self.moduli) {
                *x = ((*x as u64 + zi as u64 * y as u64) % m as u64) as u32;
            }
            for (x, &y) in coef.iter_mut().zip(&r.coef) {
                *x = ((*x as u64 + zi as u64 * y as u64) % e) as u32;
            }
        }
        (v, coef)
    }

    /// Order of the subgroup, as a product of the pivot orders.
    pub fn order(&self) -> u128 {
        self.rows
            .iter()
            .map(|r| {
                let q = self.moduli[r.lead];
                (q / gcd(r.v[r.lead] as u64, q as u64) as u32) as u128
            })
            .product()
    }

    /// All elements of the subgroup, or None if there are more than `cap`.
    pub fn enumerate(&self, cap: usize) -> Option<Vec<Vec<u32>>> {
        if self.order() > cap as u128 {
            return None;
        }
        let mut out = vec![self.zero()];
        for r in &self.rows {
            let q = self.moduli[r.lead];
            let ord = q / gcd(r.v[r.lead] as u64, q as u64) as u32;
            let mut next = Vec::with_capacity(out.len() * ord as usize);
            for base in &out {
                let mut cur = base.clone();
                for _ in 0..ord {
                    next.push(cur.clone());
                    for ((x, &y), &m) in cur.iter_mut().zip(&r.v).zip(&self.moduli) {
                        *x = (*x + y) % m;
                    }
                }
            }
            out = next;
        }
        Some(out)
    }

    /// Applies generator coefficients to the generators, for witness checks.
    pub fn evaluate(moduli: &[u32], gens: &[Vec<u32>], coef: &[u32]) -> Vec<u32> {
        let mut v = vec![0u32; moduli.len()];
        for (g, &c) in gens.iter().zip(coef) {
            for ((x, &y), &m) in v.iter_mut().zip(g).zip(moduli) {
                *x = ((*x as u64 + c as u64 * y as u64) % m as u64) as u32;
            }
        }
        v
    }
}

/// Membership of `target` in the subgroup generated by `gens`, with coefficients.
pub fn subgroup_member_residues(moduli: &[u32], gens: &[Vec<u32>], target: &[u32]) -> Option<Vec<u32>> {
    Echelon::from_generators(moduli.to_vec(), gens).solve(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn brute_span(moduli: &[u32], gens: &[Vec<u32>]) -> BTreeSet<Vec<u32>> {
        let mut set = BTreeSet::new();
        let zero = vec![0u32; moduli.len()];
        set.insert(zero.clone());
        let mut frontier = vec![zero];
        while let Some(x) = frontier.pop() {
            for g in gens {
                let y: Vec<u32> = x.iter().zip(g).zip(moduli).map(|((&a, &b), &m)| (a + b) % m).collect();
                if set.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
        set
    }

    #[test]
    fn z4_squared() {
        let gens = vec![vec![2, 0], vec![0, 2]];
        let e = Echelon::from_generators(vec![4, 4], &gens);
        let w = e.solve(&[2, 2]).unwrap();
        assert_eq!(Echelon::evaluate(&[4, 4], &gens, &w), vec![2, 2]);
        assert!(!e.contains(&[1, 0]));
        assert_eq!(e.order(), 4);
    }

    #[test]
    fn z6() {
        let e = Echelon::from_generators(vec![6], &[vec![2]]);
        assert!(e.contains(&[4]));
        assert!(!e.contains(&[3]));
    }

    #[test]
    fn empty_generators() {
        let e = Echelon::new(vec![5, 5]);
        assert!(e.contains(&[0, 0]));
        assert!(!e.contains(&[0, 1]));
    }

    #[test]
    fn annihilator_rows() {
        // (2, 1) in Z4 x Z2: 2*(2,1) = (0,0)... and (1,1) generates (2,0)
        let e = Echelon::from_generators(vec![4, 2], &[vec![1, 1]]);
        assert!(e.contains(&[2, 0]));
        assert!(!e.contains(&[0, 1]));
        assert_eq!(e.order(), 4);
    }

    fn arb_case() -> impl Strategy<Value = (Vec<u32>, Vec<Vec<u32>>, Vec<u32>)> {
        prop::collection::vec(prop::sample::select(vec![2u32, 3, 4, 5, 6, 8, 9, 12]), 1..4).prop_flat_map(|moduli| {
            let vec_s = moduli.iter().map(|&m| 0..m).collect::<Vec<_>>();
            let gens = prop::collection::vec(vec_s.clone(), 0..4);
            (Just(moduli), gens, vec_s)
        })
    }

    proptest! {
        #[test]
        fn membership_matches_brute_force((moduli, gens, target) in arb_case()) {
            let span = brute_span(&moduli, &gens);
            let e = Echelon::from_generators(moduli.clone(), &gens);
            prop_assert_eq!(e.order(), span.len() as u128);
            match e.solve(&target) {
                Some(w) => prop_assert_eq!(Echelon::evaluate(&moduli, &gens, &w), target),
                None => prop_assert!(!span.contains(&target)),
            }
            let listed: BTreeSet<Vec<u32>> = e.enumerate(1 << 20).unwrap().into_iter().collect();
            prop_assert_eq!(listed, span);
        }

        #[test]
        fn incremental_matches_batch((moduli, gens, target) in arb_case()) {
            let batch = Echelon::from_generators(moduli.clone(), &gens);
            let mut inc = Echelon::new(moduli.clone());
            for g in &gens {
                inc.insert(g);
            }
            prop_assert_eq!(batch.contains(&target), inc.contains(&target));
            if let Some(w) = inc.solve(&target) {
                prop_assert_eq!(Echelon::evaluate(&moduli, &gens, &w), target);
            }
        }

        #[test]
        fn reduction_is_idempotent((moduli, gens, _t) in arb_case()) {
            let e = Echelon::from_generators(moduli.clone(), &gens);
            let rows: Vec<Vec<u32>> = e.rows().iter().map(|r| r.v.clone()).collect();
            let again = Echelon::from_generators(moduli.clone(), &rows);
            let rows2: Vec<Vec<u32>> = again.rows().iter().map(|r| r.v.clone()).collect();
            prop_assert_eq!(rows, rows2);
        }
    }
}
