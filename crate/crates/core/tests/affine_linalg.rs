mod common;

use common::{all_tuples, brute_span, closure_set};
use proptest::prelude::*;
use subpower::affine::{affine_closure_comprep, affine_member, subgroup_member, verify_affine};
use subpower::algebra::decode_index;
use subpower::echelon::Echelon;
use subpower::random::{random_tuple, rng_from_seed};
use subpower::{zoo, AbelianGroup, Elem};

fn groups() -> Vec<AbelianGroup> {
    vec![
        AbelianGroup::cyclic(4),
        AbelianGroup::cyclic(6),
        AbelianGroup::new(vec![2, 4], 0).unwrap(),
        AbelianGroup::new(vec![3, 3], 0).unwrap(),
    ]
}

#[test]
fn affine_member_examples() {
    let g = AbelianGroup::new(vec![3], 0).unwrap();
    let pts = vec![vec![0u8, 0], vec![1, 1]];
    assert!(affine_member(&g, &pts, &[2, 2]).unwrap().is_some());
    assert!(affine_member(&g, &pts, &[1, 0]).unwrap().is_none());
    assert!(affine_member(&g, &pts, &[0, 0]).unwrap().is_some());
}

#[test]
fn z2_decomposition() {
    let alg = zoo::cyclic_affine(2);
    let specs = verify_affine(&alg, &AbelianGroup::cyclic(2)).unwrap();
    let scalars: Vec<u32> = specs[0].endos.iter().map(|e| e.scalar().unwrap()).collect();
    assert_eq!(scalars, vec![1, 1, 1]);
    assert_eq!(specs[0].constant, 0);
}

#[test]
fn decompositions_reproduce_tables() {
    let a6 = zoo::a6();
    let cases = vec![
        (zoo::cyclic_affine(3), zoo::cyclic_group(3)),
        (zoo::cyclic_affine(6), zoo::cyclic_group(6)),
        (zoo::z3_group(), zoo::cyclic_group(3)),
        (a6.companion().clone(), a6.companion_group()),
        (zoo::w15().companion().clone(), zoo::w15().companion_group()),
    ];
    for (alg, g) in cases {
        let specs = verify_affine(&alg, &g).unwrap();
        let mut out = vec![0u32; g.rank()];
        for (op, spec) in alg.ops().iter().zip(&specs) {
            let mut args = vec![0 as Elem; op.arity()];
            for idx in 0..op.table().len() {
                decode_index(alg.size(), idx, &mut args);
                let mut acc = spec.constant;
                for (e, &x) in spec.endos.iter().zip(&args) {
                    e.apply(g.orders(), g.residues(x), &mut out);
                    acc = g.add(acc, g.element(&out));
                }
                assert_eq!(acc, op.table()[idx], "{} at {args:?}", op.symbol());
            }
        }
    }
}

#[test]
fn wreath_itself_is_not_affine() {
    let a = zoo::a6();
    assert!(verify_affine(a.algebra(), &a.companion_group()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subgroup_membership_matches_span(
        which in 0usize..4,
        k in 1usize..4,
        raw in prop::collection::vec(prop::collection::vec(0u8..255, 3), 0..4),
        t in prop::collection::vec(0u8..255, 3),
    ) {
        let g = &groups()[which];
        let s = g.size() as u8;
        let gens: Vec<Vec<Elem>> = raw.iter().map(|r| r[..k].iter().map(|x| x % s).collect()).collect();
        let target: Vec<Elem> = t[..k].iter().map(|x| x % s).collect();
        let span = brute_span(g, k, &gens);
        let got = subgroup_member(g, &gens, &target).unwrap();
        prop_assert_eq!(got.is_some(), span.contains(&target));
        if let Some(coef) = got {
            let mut acc = vec![g.zero(); k];
            for (h, &c) in gens.iter().zip(&coef) {
                for (a, &x) in acc.iter_mut().zip(h) {
                    *a = g.add(*a, g.scale(x, c as u64));
                }
            }
            prop_assert_eq!(acc, target);
        }
    }

    #[test]
    fn echelon_is_idempotent(rows in prop::collection::vec(prop::collection::vec(0u32..12, 3), 0..6)) {
        let moduli = vec![12, 6, 4];
        let rows: Vec<Vec<u32>> = rows
            .into_iter()
            .map(|r| r.iter().zip(&moduli).map(|(x, m)| x % m).collect())
            .collect();
        let e = Echelon::from_generators(moduli.clone(), &rows);
        let reduced: Vec<Vec<u32>> = e.rows().iter().map(|r| r.v.clone()).collect();
        let again = Echelon::from_generators(moduli, &reduced);
        let twice: Vec<Vec<u32>> = again.rows().iter().map(|r| r.v.clone()).collect();
        prop_assert_eq!(reduced, twice);
        prop_assert_eq!(e.order(), again.order());
    }

    #[test]
    fn comprep_expands_to_closure(seed in any::<u64>(), which in 0usize..3, k in 1usize..4, n in 1usize..4) {
        let (alg, g) = match which {
            0 => (zoo::cyclic_affine(4), zoo::cyclic_group(4)),
            1 => (zoo::cyclic_affine(6), zoo::cyclic_group(6)),
            _ => (zoo::a6().companion().clone(), zoo::a6().companion_group()),
        };
        let mut rng = rng_from_seed(seed);
        let gens: Vec<Vec<Elem>> = (0..n).map(|_| random_tuple(alg.size(), k, &mut rng)).collect();
        let specs = verify_affine(&alg, &g).unwrap();
        let (rep, aff) = affine_closure_comprep(&alg, &g, &specs, &gens).unwrap();
        let oracle = closure_set(&alg, &gens);
        let expanded: std::collections::BTreeSet<Vec<Elem>> = aff.expand(1 << 20).unwrap().into_iter().collect();
        prop_assert_eq!(&expanded, &oracle);
        prop_assert_eq!(aff.size() as usize, oracle.len());
        for t in all_tuples(alg.size(), k) {
            prop_assert_eq!(aff.contains(&t), oracle.contains(&t));
        }
        prop_assert!(rep.verify_circuits(&alg, &gens).unwrap());
        prop_assert_eq!(rep.signature(), subpower::rep::signature(&oracle.iter().collect::<Vec<_>>()).unwrap());
    }
}
