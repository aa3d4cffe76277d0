//! Wreath products `L ⊗ U` and their direct-product companions `L × U`.
//!
//! The pair `(l, u)` is encoded as `l * |U| + u`, and operations act by
//! `f((l_1,u_1),…) = (f^L(l⃗) + f̂(u⃗), f^U(u⃗))`.

use crate::affine::{verify_affine, AffineOpSpec};
use crate::algebra::{decode_index, table_len, Algebra};
use crate::circuit::{eval_circuit, Circuit};
use crate::error::{Error, Result};
use crate::group::{gcd, AbelianGroup};
use crate::Elem;

pub fn is_prime(p: u32) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// The defining data of a wreath product, validated, with both the wreath
/// algebra and its companion built.
#[derive(Clone, Debug)]
pub struct WreathSpec {
    l: Algebra,
    l_group: AbelianGroup,
    u: Algebra,
    u_group: AbelianGroup,
    hat: Vec<Vec<Elem>>,
    algebra: Algebra,
    companion: Algebra,
}

impl WreathSpec {
    /// `hat[i]` is the table `U^arity → L` of the `i`-th operation of `l`.
    /// The zero of `l_group` is the constant preserved by `L`.
    pub fn new(
        l: Algebra,
        l_group: AbelianGroup,
        u: Algebra,
        u_group: AbelianGroup,
        hat: Vec<Vec<Elem>>,
    ) -> Result<WreathSpec> {
        if l_group.size() != l.size() {
            return Err(Error::Wreath(format!(
                "L has {} elements but its group has order {}",
                l.size(),
                l_group.size()
            )));
        }
        if u_group.size() != u.size() {
            return Err(Error::Wreath(format!(
                "U has {} elements but its group has order {}",
                u.size(),
                u_group.size()
            )));
        }
        let (ls, us) = (l.size(), u.size());
        if ls * us > 256 {
            return Err(Error::DomainSize(ls * us));
        }
        if l.ops().len() != u.ops().len() || hat.len() != l.ops().len() {
            return Err(Error::Wreath("L, U and the hat tables must share one signature".into()));
        }
        let zero = l_group.zero();
        for (i, op) in l.ops().iter().enumerate() {
            let uop = u
                .op_index(op.symbol())
                .map(|j| u.op(j))
                .ok_or_else(|| Error::Wreath(format!("U lacks the symbol `{}`", op.symbol())))?;
            if uop.arity() != op.arity() {
                return Err(Error::ArityMismatch {
                    symbol: op.symbol().to_string(),
                    expected: op.arity(),
                    got: uop.arity(),
                });
            }
            let want = table_len(us, op.arity()).ok_or(Error::DomainSize(us))?;
            if hat[i].len() != want {
                return Err(Error::TableLength {
                    symbol: format!("hat {}", op.symbol()),
                    expected: want,
                    got: hat[i].len(),
                });
            }
            if let Some(&bad) = hat[i].iter().find(|&&e| e as usize >= ls) {
                return Err(Error::OutOfRange {
                    elem: bad as usize,
                    size: ls,
                });
            }
            if op.apply(&vec![zero; op.arity()]) != zero {
                return Err(Error::Wreath(format!(
                    "`{}` does not preserve the zero {} of L",
                    op.symbol(),
                    zero
                )));
            }
        }
        if let Some(mi) = maltsev_symbol(&l) {
            let s = us as Elem;
            for a in 0..s {
                for b in 0..s {
                    let uub = hat[mi][(a as usize * us + a as usize) * us + b as usize];
                    let baa = hat[mi][(b as usize * us + a as usize) * us + a as usize];
                    if uub != zero || baa != zero {
                        return Err(Error::Wreath(format!(
                            "hat of `{}` must vanish at (u,u,v) and (v,u,u); fails for u={a}, v={b}",
                            l.op(mi).symbol()
                        )));
                    }
                }
            }
        }
        let algebra = product(&l, &l_group, &u, Some(&hat))?;
        let companion = product(&l, &l_group, &u, None)?;
        Ok(WreathSpec {
            l,
            l_group,
            u,
            u_group,
            hat,
            algebra,
            companion,
        })
    }

    pub fn l(&self) -> &Algebra {
        &self.l
    }

    pub fn l_group(&self) -> &AbelianGroup {
        &self.l_group
    }

    pub fn u(&self) -> &Algebra {
        &self.u
    }

    pub fn u_group(&self) -> &AbelianGroup {
        &self.u_group
    }

    pub fn hat(&self) -> &[Vec<Elem>] {
        &self.hat
    }

    pub fn zero(&self) -> Elem {
        self.l_group.zero()
    }

    pub fn p(&self) -> usize {
        self.u.size()
    }

    /// The wreath algebra itself.
    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    /// `L × U`, i.e. the wreath product with a vanishing hat.
    pub fn companion(&self) -> &Algebra {
        &self.companion
    }

    /// The group of the companion: U's factors first, then L's.
    pub fn companion_group(&self) -> AbelianGroup {
        let mut orders = self.u_group.orders().to_vec();
        orders.extend_from_slice(self.l_group.orders());
        let zero = self.join(self.zero(), self.u_group.zero());
        AbelianGroup::new(orders, zero as usize).expect("product of valid groups")
    }

    pub fn join(&self, l: Elem, u: Elem) -> Elem {
        (l as usize * self.p() + u as usize) as Elem
    }

    pub fn split(&self, e: Elem) -> (Elem, Elem) {
        let p = self.p();
        ((e as usize / p) as Elem, (e as usize % p) as Elem)
    }

    /// The designated pair `(0_L, 0_U)`.
    pub fn zero_pair(&self) -> Elem {
        self.join(self.zero(), self.u_group.zero())
    }

    /// Checks the hypotheses of the polynomial pipeline and returns the
    /// affine decompositions of the companion's operations.
    pub fn check_solvable(&self) -> Result<Vec<AffineOpSpec>> {
        let p = self.p() as u32;
        if !is_prime(p) {
            return Err(Error::Precondition(format!("|U| = {p} is not prime")));
        }
        if gcd(self.l.size() as u64, p as u64) != 1 {
            return Err(Error::Precondition(format!(
                "|L| = {} is not coprime to |U| = {p}",
                self.l.size()
            )));
        }
        verify_affine(&self.l, &self.l_group)?;
        verify_affine(&self.u, &self.u_group)?;
        verify_affine(&self.companion, &self.companion_group())
    }
}

// The index of the symbol used by the Mal'tsev circuit when that circuit is
// a single application to x1 x2 x3.
fn maltsev_symbol(alg: &Algebra) -> Option<usize> {
    let gates = alg.maltsev().gates();
    let out = gates.outputs[0];
    match &gates.gates[out] {
        crate::circuit::Gate::Op(sym, kids) if kids.len() == 3 => {
            let ins: Vec<_> = kids.iter().map(|&c| gates.gates[c].clone()).collect();
            let expect = [0, 1, 2].map(crate::circuit::Gate::Input);
            (ins == expect).then(|| alg.op_index(sym)).flatten()
        }
        _ => None,
    }
}

fn product(l: &Algebra, lg: &AbelianGroup, u: &Algebra, hat: Option<&[Vec<Elem>]>) -> Result<Algebra> {
    let (ls, us) = (l.size(), u.size());
    let size = ls * us;
    let mut ops = Vec::with_capacity(l.ops().len());
    for (i, op) in l.ops().iter().enumerate() {
        let r = op.arity();
        let uop = u.op(u.op_index(op.symbol()).expect("validated signature"));
        let len = table_len(size, r).ok_or(Error::DomainSize(size))?;
        let mut digits = vec![0 as Elem; r];
        let mut lv = vec![0 as Elem; r];
        let mut uv = vec![0 as Elem; r];
        let mut table = Vec::with_capacity(len);
        for idx in 0..len {
            decode_index(size, idx, &mut digits);
            for j in 0..r {
                lv[j] = (digits[j] as usize / us) as Elem;
                uv[j] = (digits[j] as usize % us) as Elem;
            }
            let mut lpart = op.apply(&lv);
            if let Some(h) = hat {
                let hi = uv.iter().fold(0usize, |acc, &x| acc * us + x as usize);
                lpart = lg.add(lpart, h[i][hi]);
            }
            table.push((lpart as usize * us + uop.apply(&uv) as usize) as Elem);
        }
        ops.push((op.symbol().to_string(), r, table));
    }
    Algebra::new(size, ops, l.maltsev().clone())
}

/// Builds the wreath algebra of a spec.
pub fn build_wreath(spec: &WreathSpec) -> Algebra {
    spec.algebra().clone()
}

/// Evaluates `c` in `L × U`.
pub fn companion_eval(spec: &WreathSpec, c: &Circuit, args: &[Vec<Elem>]) -> Result<Vec<Elem>> {
    eval_circuit(spec.companion(), c, args)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    #[test]
    fn a6_is_maltsev() {
        let spec = zoo::a6();
        let a = spec.algebra();
        assert_eq!(a.size(), 6);
        assert!(crate::verify_maltsev(a, a.maltsev()).unwrap());
        // m((0,0),(1,0),(1,1)) = (0,1)
        let m = Circuit::parse("(m x1 x2 x3)", None).unwrap();
        let args = vec![vec![spec.join(0, 0)], vec![spec.join(1, 0)], vec![spec.join(1, 1)]];
        assert_eq!(eval_circuit(a, &m, &args).unwrap(), vec![spec.join(0, 1)]);
        assert_eq!(companion_eval(&spec, &m, &args).unwrap(), vec![spec.join(0, 1)]);
        spec.check_solvable().unwrap();
    }

    #[test]
    fn hat_contribution_is_visible() {
        let spec = zoo::a6();
        let m = Circuit::parse("(m x1 x2 x3)", None).unwrap();
        // m̂(0,1,0) = 1
        let args = vec![vec![spec.join(0, 0)], vec![spec.join(0, 1)], vec![spec.join(0, 0)]];
        let w = eval_circuit(spec.algebra(), &m, &args).unwrap();
        let c = companion_eval(&spec, &m, &args).unwrap();
        assert_eq!(spec.split(w[0]).0, spec.l_group().add(spec.split(c[0]).0, 1));
    }

    #[test]
    fn rejects_zero_violation() {
        let m = Circuit::parse("(m x1 x2 x3)", None).unwrap();
        let with_shift = |n: usize, shift: Vec<Elem>| {
            let base = zoo::cyclic_affine(n);
            Algebra::new(
                n,
                vec![("m".into(), 3, base.op(0).table().to_vec()), ("s".into(), 1, shift)],
                m.clone(),
            )
            .unwrap()
        };
        let l = with_shift(3, vec![1, 2, 0]);
        let u = with_shift(2, vec![0, 1]);
        let hat = vec![vec![0; 8], vec![0; 2]];
        let err = WreathSpec::new(l, zoo::cyclic_group(3), u, zoo::cyclic_group(2), hat).unwrap_err();
        assert!(matches!(err, Error::Wreath(_)));
    }

    #[test]
    fn rejects_bad_maltsev_hat() {
        let l = zoo::cyclic_affine(3);
        let u = zoo::cyclic_affine(2);
        let mut hat = vec![0; 8];
        hat[1] = 1; // m̂(0,0,1)
        let err = WreathSpec::new(l, zoo::cyclic_group(3), u, zoo::cyclic_group(2), vec![hat]).unwrap_err();
        assert!(matches!(err, Error::Wreath(_)));
    }

    #[test]
    fn zero_hat_is_direct_product() {
        let l = zoo::cyclic_affine(3);
        let u = zoo::cyclic_affine(2);
        let spec = WreathSpec::new(l, zoo::cyclic_group(3), u, zoo::cyclic_group(2), vec![vec![0; 8]]).unwrap();
        assert_eq!(spec.algebra().op(0).table(), spec.companion().op(0).table());
    }
}
