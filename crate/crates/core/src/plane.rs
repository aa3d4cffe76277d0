//! Two-dimensional subspaces of `Z_p^n` through the diagonal.
//!
//! Every non-constant `w ∈ Z_p^n` is `e_c(x, y) = x(1 - c) + y c` for exactly
//! one `c` in `C_n = {c : c(0) = 0, first nonzero entry 1}` and `x ≠ y`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlaneId {
    Diagonal(u32),
    Plane { c: Vec<u32>, x: u32, y: u32 },
}

/// Multiplicative inverse modulo a prime.
pub fn inv_mod(a: u32, p: u32) -> u32 {
    let (mut r, mut b, mut e) = (1u64, a as u64 % p as u64, p as u64 - 2);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p as u64;
        }
        b = b * b % p as u64;
        e >>= 1;
    }
    r as u32
}

pub fn classify_row(p: u32, w: &[u32]) -> Result<PlaneId> {
    if w.len() < 2 {
        return Err(Error::Precondition(format!(
            "rows need length at least 2, got {}",
            w.len()
        )));
    }
    let x = w[0] % p;
    let Some(i) = w.iter().position(|&v| v % p != x) else {
        return Ok(PlaneId::Diagonal(x));
    };
    let y = w[i] % p;
    let dinv = inv_mod((y + p - x) % p, p);
    let c = w
        .iter()
        .map(|&v| ((v % p + p - x) % p) * dinv % p)
        .collect();
    Ok(PlaneId::Plane { c, x, y })
}

pub fn e_c(p: u32, c: &[u32], x: u32, y: u32) -> Vec<u32> {
    let d = (y + p - x) % p;
    c.iter().map(|&ci| (x + d * ci) % p).collect()
}

/// All of `C_n`, in lexicographic order.
pub fn canonical_vectors(p: u32, n: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    for lead in 1..n {
        let tail = n - lead - 1;
        let count = (p as usize).pow(tail as u32);
        for mut t in 0..count {
            let mut c = vec![0u32; n];
            c[lead] = 1;
            for j in (lead + 1..n).rev() {
                c[j] = (t % p as usize) as u32;
                t /= p as usize;
            }
            out.push(c);
        }
    }
    out.sort();
    out
}
