//! Small algebras used in tests, benchmarks and examples.

use crate::algebra::{decode_index, Algebra};
use crate::circuit::Circuit;
use crate::group::AbelianGroup;
use crate::wreath::WreathSpec;
use crate::Elem;

fn m_circuit() -> Circuit {
    Circuit::parse("(m x1 x2 x3)", Some(3)).expect("static circuit")
}

fn ternary_table(n: usize, f: impl Fn(usize, usize, usize) -> usize) -> Vec<Elem> {
    let mut buf = [0u8; 3];
    (0..n * n * n)
        .map(|i| {
            decode_index(n, i, &mut buf);
            f(buf[0] as usize, buf[1] as usize, buf[2] as usize) as Elem
        })
        .collect()
}

/// Z_n with the single operation m(x,y,z) = x - y + z.
pub fn cyclic_affine(n: usize) -> Algebra {
    let tab = ternary_table(n, |x, y, z| (x + n - y + z) % n);
    Algebra::new(n, vec![("m".into(), 3, tab)], m_circuit()).expect("affine algebra")
}

/// Z_3 as a group: binary `+`, unary `-` and the constant `0`.
pub fn z3_group() -> Algebra {
    let plus: Vec<Elem> = (0..9).map(|i| ((i / 3 + i % 3) % 3) as Elem).collect();
    let neg: Vec<Elem> = (0..3).map(|i| ((3 - i) % 3) as Elem).collect();
    let m = Circuit::parse("(+ (+ x1 (- x2)) x3)", Some(3)).expect("static circuit");
    Algebra::new(
        3,
        vec![("+".into(), 2, plus), ("-".into(), 1, neg), ("0".into(), 0, vec![0])],
        m,
    )
    .expect("group algebra")
}

/// The cyclic group structure matching [`cyclic_affine`].
pub fn cyclic_group(n: usize) -> AbelianGroup {
    AbelianGroup::cyclic(n as u32)
}

fn maltsev_hat(p: usize, free: impl Fn(usize, usize, usize) -> usize) -> Vec<Elem> {
    ternary_table(p, |a, b, c| if a == b || b == c { 0 } else { free(a, b, c) })
}

/// `Z_l ⊗ Z_p` over the signature `{m}`, with `m` acting as `x - y + z` on
/// both factors and the given free hat values.
pub fn cyclic_wreath(l: usize, p: usize, free: impl Fn(usize, usize, usize) -> usize) -> WreathSpec {
    let hat = maltsev_hat(p, |a, b, c| free(a, b, c) % l);
    WreathSpec::new(
        cyclic_affine(l),
        cyclic_group(l),
        cyclic_affine(p),
        cyclic_group(p),
        vec![hat],
    )
    .expect("valid wreath product")
}

/// The six-element reference algebra `Z_3 ⊗ Z_2` with `m̂(0,1,0) = 1`.
pub fn a6() -> WreathSpec {
    cyclic_wreath(3, 2, |a, b, c| usize::from((a, b, c) == (0, 1, 0)))
}

/// A fifteen-element `Z_5 ⊗ Z_3`.
pub fn w15() -> WreathSpec {
    cyclic_wreath(5, 3, |a, _, c| a + 2 * c + a * c)
}

/// `Z_l ⊗ Z_p` with uniformly random free hat values.
pub fn random_wreath(l: usize, p: usize, rng: &mut impl rand::Rng) -> WreathSpec {
    let free: Vec<usize> = (0..p * p * p).map(|_| rng.random_range(0..l)).collect();
    cyclic_wreath(l, p, |a, b, c| free[(a * p + b) * p + c])
}
