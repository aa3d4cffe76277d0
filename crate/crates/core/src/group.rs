//! Finite abelian groups as products of cyclic groups over a labelled domain.

use crate::error::{Error, Result};
use crate::Elem;

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

/// Domain element `e` corresponds to the mixed-radix digits of `e` (first
/// order least significant) shifted so that `zero` has residue 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbelianGroup {
    orders: Vec<u32>,
    zero: Elem,
    size: usize,
    exponent: u32,
    residues: Vec<u32>,
    zero_digits: Vec<u32>,
}

impl AbelianGroup {
    pub fn new(orders: Vec<u32>, zero: usize) -> Result<AbelianGroup> {
        if orders.is_empty() || orders.contains(&0) {
            return Err(Error::Group("cyclic orders must be a non-empty list of positive integers".into()));
        }
        let size = orders
            .iter()
            .try_fold(1usize, |acc, &m| acc.checked_mul(m as usize))
            .filter(|&s| s <= 256)
            .ok_or_else(|| Error::Group("group order exceeds 256".into()))?;
        if zero >= size {
            return Err(Error::OutOfRange { elem: zero, size });
        }
        let s = orders.len();
        let digits = |mut e: usize| -> Vec<u32> {
            orders
                .iter()
                .map(|&m| {
                    let d = (e % m as usize) as u32;
                    e /= m as usize;
                    d
                })
                .collect()
        };
        let zero_digits = digits(zero);
        let mut residues = Vec::with_capacity(size * s);
        for e in 0..size {
            let d = digits(e);
            for j in 0..s {
                residues.push((d[j] + orders[j] - zero_digits[j]) % orders[j]);
            }
        }
        let exponent = orders.iter().fold(1u64, |acc, &m| lcm(acc, m as u64)) as u32;
        Ok(AbelianGroup {
            orders,
            zero: zero as Elem,
            size,
            exponent,
            residues,
            zero_digits,
        })
    }

    pub fn cyclic(n: u32) -> AbelianGroup {
        AbelianGroup::new(vec![n], 0).expect("valid cyclic group")
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    /// Number of cyclic factors.
    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn zero(&self) -> Elem {
        self.zero
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn residues(&self, e: Elem) -> &[u32] {
        let s = self.orders.len();
        &self.residues[e as usize * s..(e as usize + 1) * s]
    }

    pub fn element(&self, r: &[u32]) -> Elem {
        let mut e = 0usize;
        for j in (0..self.orders.len()).rev() {
            let m = self.orders[j];
            let d = (r[j] % m + self.zero_digits[j]) % m;
            e = e * m as usize + d as usize;
        }
        e as Elem
    }

    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        let r: Vec<u32> = self
            .residues(a)
            .iter()
            .zip(self.residues(b))
            .zip(&self.orders)
            .map(|((x, y), m)| (x + y) % m)
            .collect();
        self.element(&r)
    }

    pub fn neg(&self, a: Elem) -> Elem {
        let r: Vec<u32> = self
            .residues(a)
            .iter()
            .zip(&self.orders)
            .map(|(x, m)| (m - x) % m)
            .collect();
        self.element(&r)
    }

    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    pub fn scale(&self, a: Elem, n: u64) -> Elem {
        let r: Vec<u32> = self
            .residues(a)
            .iter()
            .zip(&self.orders)
            .map(|(&x, &m)| ((x as u64 * (n % m as u64)) % m as u64) as u32)
            .collect();
        self.element(&r)
    }

    /// Flattened residues of a tuple: coordinate `h` occupies columns `h*rank..(h+1)*rank`.
    pub fn tuple_residues(&self, t: &[Elem]) -> Vec<u32> {
        t.iter().flat_map(|&e| self.residues(e).iter().copied()).collect()
    }

    pub fn tuple_from_residues(&self, r: &[u32]) -> Vec<Elem> {
        r.chunks(self.rank()).map(|c| self.element(c)).collect()
    }

    /// Column moduli for tuples of length `k`.
    pub fn moduli(&self, k: usize) -> Vec<u32> {
        (0..k).flat_map(|_| self.orders.iter().copied()).collect()
    }
}
