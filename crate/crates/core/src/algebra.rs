//! Finite algebras given by operation tables.

use std::sync::Arc;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::Elem;

/// A basic operation with its flat row-major table (first argument most significant).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operation {
    symbol: Arc<str>,
    arity: usize,
    size: usize,
    table: Vec<Elem>,
}

impl Operation {
    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn symbol_arc(&self) -> Arc<str> {
        self.symbol.clone()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn table(&self) -> &[Elem] {
        &self.table
    }

    #[inline]
    pub fn apply(&self, args: &[Elem]) -> Elem {
        let mut idx = 0usize;
        for &a in args {
            idx = idx * self.size + a as usize;
        }
        self.table[idx]
    }
}

#[derive(Clone, Debug)]
pub struct Algebra {
    size: usize,
    ops: Vec<Operation>,
    maltsev: Circuit,
    mtab: Vec<Elem>,
}

/// Row-major index of `args` in a table over a domain of `size` elements.
pub fn table_index(size: usize, args: &[Elem]) -> usize {
    args.iter().fold(0, |acc, &a| acc * size + a as usize)
}

/// Writes the row-major decoding of `idx` into `out`.
pub fn decode_index(size: usize, mut idx: usize, out: &mut [Elem]) {
    for slot in out.iter_mut().rev() {
        *slot = (idx % size) as Elem;
        idx /= size;
    }
}

pub fn table_len(size: usize, arity: usize) -> Option<usize> {
    size.checked_pow(arity as u32)
}

impl Algebra {
    /// Validates tables and checks that `maltsev` is a Mal'tsev term.
    pub fn new(
        size: usize,
        ops: Vec<(String, usize, Vec<Elem>)>,
        maltsev: Circuit,
    ) -> Result<Algebra> {
        if size == 0 || size > 256 {
            return Err(Error::DomainSize(size));
        }
        let mut built: Vec<Operation> = Vec::with_capacity(ops.len());
        for (symbol, arity, table) in ops {
            if symbol.is_empty() || symbol == "let" || symbol.contains(['(', ')', ' ']) {
                return Err(Error::Parse(format!("invalid operation symbol `{symbol}`")));
            }
            if built.iter().any(|o| *o.symbol == *symbol) {
                return Err(Error::DuplicateSymbol(symbol));
            }
            let expected = table_len(size, arity).ok_or_else(|| Error::TableLength {
                symbol: symbol.clone(),
                expected: usize::MAX,
                got: table.len(),
            })?;
            if table.len() != expected {
                return Err(Error::TableLength {
                    symbol,
                    expected,
                    got: table.len(),
                });
            }
            if let Some(&bad) = table.iter().find(|&&e| e as usize >= size) {
                return Err(Error::OutOfRange {
                    elem: bad as usize,
                    size,
                });
            }
            built.push(Operation {
                symbol: symbol.into(),
                arity,
                size,
                table,
            });
        }
        if maltsev.arity() != 3 {
            return Err(Error::CircuitArity {
                circuit: maltsev.arity(),
                supplied: 3,
            });
        }
        let mut alg = Algebra {
            size,
            ops: built,
            maltsev,
            mtab: Vec::new(),
        };
        alg.mtab = alg.term_table(&alg.maltsev, 3)?;
        if let Some((x, y)) = alg.maltsev_failure_from(&alg.mtab) {
            return Err(Error::NotMaltsev {
                x: x as usize,
                y: y as usize,
            });
        }
        Ok(alg)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn ops(&self) -> &[Operation] {
        &self.ops
    }

    pub fn op(&self, i: usize) -> &Operation {
        &self.ops[i]
    }

    pub fn op_index(&self, symbol: &str) -> Option<usize> {
        self.ops.iter().position(|o| *o.symbol == *symbol)
    }

    pub fn maltsev(&self) -> &Circuit {
        &self.maltsev
    }

    /// The Mal'tsev term as a table on A³.
    pub fn maltsev_table(&self) -> &[Elem] {
        &self.mtab
    }

    #[inline]
    pub fn m(&self, x: Elem, y: Elem, z: Elem) -> Elem {
        let s = self.size;
        self.mtab[(x as usize * s + y as usize) * s + z as usize]
    }

    pub fn check_elem(&self, e: usize) -> Result<()> {
        if e >= self.size {
            return Err(Error::OutOfRange {
                elem: e,
                size: self.size,
            });
        }
        Ok(())
    }

    pub fn check_tuple(&self, t: &[Elem]) -> Result<()> {
        t.iter().try_for_each(|&e| self.check_elem(e as usize))
    }

    /// Table of the term operation of `c` on A^arity.
    pub fn term_table(&self, c: &Circuit, arity: usize) -> Result<Vec<Elem>> {
        let len = table_len(self.size, arity).ok_or(Error::DomainSize(self.size))?;
        let mut cols = vec![vec![0 as Elem; len]; arity];
        let mut buf = vec![0 as Elem; arity];
        for idx in 0..len {
            decode_index(self.size, idx, &mut buf);
            for (j, col) in cols.iter_mut().enumerate() {
                col[idx] = buf[j];
            }
        }
        let refs: Vec<&[Elem]> = cols.iter().map(|c| c.as_slice()).collect();
        c.eval(self, &refs)
    }

    fn maltsev_failure_from(&self, tab: &[Elem]) -> Option<(Elem, Elem)> {
        let s = self.size;
        for x in 0..s {
            for y in 0..s {
                let yxx = tab[(y * s + x) * s + x] as usize;
                let xxy = tab[(x * s + x) * s + y] as usize;
                if yxx != y || xxy != y {
                    return Some((x as Elem, y as Elem));
                }
            }
        }
        None
    }

    /// First pair (x, y) where m(y,x,x) = m(x,x,y) = y fails for `c`.
    pub fn maltsev_failure(&self, c: &Circuit) -> Result<Option<(Elem, Elem)>> {
        if c.arity() != 3 {
            return Ok(Some((0, 0)));
        }
        let tab = self.term_table(c, 3)?;
        Ok(self.maltsev_failure_from(&tab))
    }
}

/// True iff `c` satisfies both Mal'tsev identities on `alg`.
pub fn verify_maltsev(alg: &Algebra, c: &Circuit) -> Result<bool> {
    Ok(alg.maltsev_failure(c)?.is_none())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    #[test]
    fn z3_maltsev() {
        let z3 = zoo::cyclic_affine(3);
        assert_eq!(z3.m(1, 2, 0), 2);
        assert!(verify_maltsev(&z3, z3.maltsev()).unwrap());
        let proj = Circuit::parse("x1", Some(3)).unwrap();
        assert!(!verify_maltsev(&z3, &proj).unwrap());
    }

    #[test]
    fn rejects_bad_tables() {
        let m = Circuit::parse("(m x1 x2 x3)", None).unwrap();
        let short = Algebra::new(2, vec![("m".into(), 3, vec![0; 7])], m.clone());
        assert!(matches!(short, Err(Error::TableLength { .. })));
        let range = Algebra::new(2, vec![("m".into(), 3, vec![2; 8])], m.clone());
        assert!(matches!(range, Err(Error::OutOfRange { .. })));
        let first = Algebra::new(2, vec![("m".into(), 3, (0..8).map(|i| (i >> 2) as u8).collect())], m);
        assert!(matches!(first, Err(Error::NotMaltsev { x: 0, y: 1 })));
    }

    #[test]
    fn index_round_trip() {
        let mut buf = [0u8; 3];
        for idx in 0..125 {
            decode_index(5, idx, &mut buf);
            assert_eq!(table_index(5, &buf), idx);
        }
    }
}
