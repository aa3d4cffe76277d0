//! Seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::Algebra;
use crate::circuit::{eval_circuit, Circuit, Term};
use crate::solver::SmpInstance;
use crate::Elem;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random term over `n` inputs with at most `depth` levels of operations.
pub fn random_circuit(alg: &Algebra, n: usize, depth: usize, rng: &mut impl Rng) -> Circuit {
    fn go(alg: &Algebra, n: usize, depth: usize, rng: &mut impl Rng) -> Term {
        if depth == 0 || rng.random_bool(0.25) {
            return Term::var(rng.random_range(0..n));
        }
        let op = &alg.ops()[rng.random_range(0..alg.ops().len())];
        let args = (0..op.arity()).map(|_| go(alg, n, depth - 1, rng)).collect();
        Term::app(op.symbol_arc(), args)
    }
    let root = if alg.ops().is_empty() {
        Term::var(rng.random_range(0..n))
    } else {
        go(alg, n, depth, rng)
    };
    Circuit::new(n, root).expect("variables below n")
}

pub fn random_tuple(size: usize, k: usize, rng: &mut impl Rng) -> Vec<Elem> {
    (0..k).map(|_| rng.random_range(0..size) as Elem).collect()
}

/// Uniform generators; with probability `member_bias` the target is a
/// random term of them, otherwise it is uniform.
pub fn random_instance(alg: &Algebra, k: usize, n: usize, member_bias: f64, rng: &mut impl Rng) -> SmpInstance {
    assert!(k >= 1 && n >= 1, "k and n must be positive");
    let generators: Vec<Vec<Elem>> = (0..n).map(|_| random_tuple(alg.size(), k, rng)).collect();
    let target = if rng.random_bool(member_bias.clamp(0.0, 1.0)) {
        let c = random_circuit(alg, n, 4, rng);
        eval_circuit(alg, &c, &generators).expect("valid circuit")
    } else {
        random_tuple(alg.size(), k, rng)
    };
    SmpInstance { generators, target }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    #[test]
    fn seeded_instances_repeat() {
        let a = zoo::a6();
        let x = random_instance(a.algebra(), 4, 3, 0.5, &mut rng_from_seed(7));
        let y = random_instance(a.algebra(), 4, 3, 0.5, &mut rng_from_seed(7));
        assert_eq!(x, y);
    }
}
