//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use common::{all_tuples, brute_signature, closure_rep, closure_set, literal_collapse};
use subpower::affine::{affine_closure_comprep, verify_affine};
use subpower::closure::smp_oracle;
use subpower::diffclonoid::{diff_clonoid_gens, diff_clonoid_tables, DiffMethod};
use subpower::echelon::Echelon;
use subpower::fix::fix_value;
use subpower::image::{clonoid_image_comprep, collapse};
use subpower::plane::{canonical_vectors, classify_row, e_c, PlaneId};
use subpower::random::{random_instance, random_tuple, rng_from_seed};
use subpower::solver::{SmpInstance, Verdict, WreathSolver};
use subpower::wreath::WreathSpec;
use subpower::{zoo, AbelianGroup, Algebra, Elem, Error};

const CAP: usize = 1_000_000;

#[derive(Default)]
struct Witnesses {
    checked: usize,
    failed: usize,
    missing: usize,
}

impl Witnesses {
    fn record(&mut self, solver: &WreathSolver, inst: &SmpInstance, v: &Verdict) {
        if !v.member {
            return;
        }
        match &v.witness {
            Some(w) => {
                self.checked += 1;
                if !solver.check_witness(inst, w).unwrap_or(false) {
                    self.failed += 1;
                }
            }
            None => self.missing += 1,
        }
    }
}

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, ok: bool, detail: String) {
        println!("criterion {id} {name}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures += 1;
        }
    }
}

fn sig(set: &BTreeSet<Vec<Elem>>) -> BTreeSet<(usize, Elem, Elem)> {
    brute_signature(&set.iter().cloned().collect::<Vec<_>>())
}

/// Oracle cap for criterion 1; instances whose closure outgrows it are
/// undecided by the oracle and skipped.
const ORACLE_CAP: usize = 500;
const DECIDED: usize = 500;

fn oracle_equivalence(report: &mut Report, wit: &mut Witnesses) {
    let start = Instant::now();
    let mut solver_secs = 0.0;
    let mut details = Vec::new();
    let mut ok = true;
    for (name, spec) in [("A6", zoo::a6()), ("W15", zoo::w15())] {
        let solver = WreathSolver::new(spec.clone(), CAP).expect("solvable");
        let (mut decided, mut skipped, mut wrong, mut members) = (0, 0, 0, 0);
        let mut seed = 0u64;
        while decided < DECIDED && seed < 4 * DECIDED as u64 {
            let i = seed as usize;
            let (k, n) = (1 + i % 5, 1 + (i / 5) % 4);
            let bias = [0.0, 0.5, 1.0][(i / 20) % 3];
            let inst = random_instance(spec.algebra(), k, n, bias, &mut rng_from_seed(seed));
            seed += 1;
            let t = Instant::now();
            let v = solver.solve(&inst).expect("solver");
            solver_secs += t.elapsed().as_secs_f64();
            wit.record(&solver, &inst, &v);
            match smp_oracle(spec.algebra(), &inst.generators, &inst.target, ORACLE_CAP) {
                Ok(o) => {
                    decided += 1;
                    members += usize::from(o);
                    if o != v.member {
                        wrong += 1;
                    }
                }
                Err(Error::CapExceeded { .. }) => skipped += 1,
                Err(e) => panic!("{e}"),
            }
        }
        ok &= wrong == 0 && decided >= DECIDED;
        details.push(format!(
            "{name}: {decided} decided, {members} members, {wrong} disagreements, {skipped} over oracle cap {ORACLE_CAP}"
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 60.0;
    details.push(format!("solver {solver_secs:.2} s, {secs:.1} s including the oracle"));
    report.line(1, "oracle equivalence", ok, details.join("; "));
}

fn check_fix_on(alg: &Algebra, gens: &[Vec<Elem>]) -> (bool, usize) {
    let (set, rep) = closure_rep(alg, gens);
    let k = gens[0].len();
    let mut ok = true;
    let mut largest = 0;
    for a in 0..alg.size() as Elem {
        let out = fix_value(alg, &rep, a).expect("fix");
        let want: BTreeSet<Vec<Elem>> = set.iter().filter(|t| t[0] == a).cloned().collect();
        largest = largest.max(out.len());
        ok &= out.signature() == sig(&want);
        ok &= out.verify_circuits(alg, gens).expect("eval");
        ok &= out.len() <= 2 * k * alg.size() * alg.size();
    }
    (ok, largest)
}

fn fix_value_correctness(report: &mut Report) {
    let mut ok = true;
    let mut runs = 0;
    let mut largest = 0;
    let a6 = zoo::a6();
    for (alg, size) in [(a6.algebra().clone(), 6), (zoo::cyclic_affine(3), 3)] {
        for k in 1..=4 {
            for n in 1..=3 {
                for seed in 0..8 {
                    let mut rng = rng_from_seed(1000 * k as u64 + 100 * n as u64 + seed);
                    let gens: Vec<Vec<Elem>> = (0..n).map(|_| random_tuple(size, k, &mut rng)).collect();
                    let (good, big) = check_fix_on(&alg, &gens);
                    ok &= good;
                    largest = largest.max(big);
                    runs += 1;
                }
            }
        }
    }
    report.line(
        2,
        "fix-value correctness",
        ok,
        format!("{runs} subpowers over A6 and Z3, all values fixed, largest output {largest}"),
    );
}

fn affine_comprep(report: &mut Report) {
    let a6 = zoo::a6();
    let cases = [
        ("Z3", zoo::cyclic_affine(3), zoo::cyclic_group(3)),
        ("Z4", zoo::cyclic_affine(4), zoo::cyclic_group(4)),
        ("Z6", zoo::cyclic_affine(6), zoo::cyclic_group(6)),
        ("A6 companion", a6.companion().clone(), a6.companion_group()),
    ];
    let mut ok = true;
    let mut total = 0;
    for (name, alg, g) in &cases {
        let specs = verify_affine(alg, g).expect("affine");
        for i in 0..100u64 {
            let (k, n) = (1 + i as usize % 4, 1 + (i as usize / 4) % 4);
            let mut rng = rng_from_seed(i + name.len() as u64 * 7919);
            let gens: Vec<Vec<Elem>> = (0..n).map(|_| random_tuple(alg.size(), k, &mut rng)).collect();
            let (rep, aff) = affine_closure_comprep(alg, g, &specs, &gens).expect("comprep");
            let expanded: BTreeSet<Vec<Elem>> = aff.expand(1 << 20).expect("small").into_iter().collect();
            let oracle = closure_set(alg, &gens);
            ok &= expanded == oracle;
            ok &= rep.verify_circuits(alg, &gens).expect("eval");
            ok &= rep.signature() == sig(&oracle);
            total += 1;
        }
    }
    report.line(3, "affine compact representations", ok, format!("{total} generator sets over Z3, Z4, Z6 and the A6 companion"));
}

fn plane_geometry(report: &mut Report) {
    let mut ok = true;
    let mut rows = 0;
    for p in [2u32, 3, 5] {
        for n in 2..=4 {
            let cs = canonical_vectors(p, n);
            ok &= cs.len() as u32 == (p.pow(n as u32 - 1) - 1) / (p - 1);
            let mut hits = std::collections::BTreeMap::new();
            for w in all_tuples(p as usize, n) {
                let w: Vec<u32> = w.into_iter().map(u32::from).collect();
                rows += 1;
                match classify_row(p, &w).expect("n >= 2") {
                    PlaneId::Diagonal(x) => ok &= w.iter().all(|&v| v == x),
                    PlaneId::Plane { c, x, y } => {
                        ok &= x != y && cs.contains(&c) && e_c(p, &c, x, y) == w;
                        // every other parameterization must miss w
                        let others = cs
                            .iter()
                            .flat_map(|c2| (0..p).flat_map(move |x2| (0..p).map(move |y2| (c2, x2, y2))))
                            .filter(|&(c2, x2, y2)| x2 != y2 && e_c(p, c2, x2, y2) == w)
                            .count();
                        ok &= others == 1;
                        *hits.entry(c).or_insert(0usize) += 1;
                    }
                }
            }
            ok &= hits.len() == cs.len();
        }
    }
    report.line(4, "plane geometry", ok, format!("{rows} vectors for p in {{2,3,5}}, n <= 4"));
}

fn collapse_rule(report: &mut Report) {
    let mut ok = true;
    let mut checks = 0;
    for (p, l) in [(2u32, 3u32), (2, 5), (3, 2), (3, 5)] {
        let lg = AbelianGroup::cyclic(l);
        for f in all_tuples(l as usize, p as usize) {
            for n in 1..=4 {
                for w in all_tuples(p as usize, n) {
                    let w: Vec<u32> = w.into_iter().map(u32::from).collect();
                    let row = if n == 1 {
                        PlaneId::Diagonal(w[0])
                    } else {
                        classify_row(p, &w).expect("n >= 2")
                    };
                    let got = collapse(&lg, p, &f, &row, n);
                    ok &= got == literal_collapse(&lg, p, &f, &w);
                    if n == 1 {
                        ok &= got == f[w[0] as usize];
                    }
                    checks += 1;
                }
            }
        }
    }
    report.line(5, "collapse rule", ok, format!("{checks} (f, w) pairs for p in {{2,3}}, n <= 4"));
}

fn image_vs_brute_force(report: &mut Report) {
    let a = zoo::a6();
    let lg = a.l_group().clone();
    let gens = diff_clonoid_gens(&a, DiffMethod::Fixpoint, CAP).expect("gens");
    let mut ok = gens.binary.iter().all(|g| (0..2).all(|x| g[x * 2 + x] == lg.zero()));
    let mut matrices = 0;
    for n in 1..=3 {
        let method = if n <= 2 { DiffMethod::Enumerate } else { DiffMethod::Fixpoint };
        let tables = diff_clonoid_tables(&a, n, method, CAP).expect("tables");
        for k in 1..=4 {
            for bits in 0..1u32 << (k * n) {
                let us: Vec<Vec<u32>> = (0..n).map(|j| (0..k).map(|i| (bits >> (j * k + i)) & 1).collect()).collect();
                let img = clonoid_image_comprep(&gens, &us).expect("image");
                let evaluated: Vec<Vec<u32>> = tables
                    .iter()
                    .map(|t| {
                        let row: Vec<Elem> = (0..k)
                            .map(|i| t[(0..n).fold(0, |acc, j| acc * 2 + us[j][i] as usize)])
                            .collect();
                        lg.tuple_residues(&row)
                    })
                    .collect();
                let brute = Echelon::from_generators(lg.moduli(k), &evaluated);
                ok &= img.size() == brute.order();
                ok &= evaluated.iter().all(|v| img.echelon.contains(v));
                matrices += 1;
            }
        }
    }
    report.line(
        6,
        "difference-clonoid image",
        ok,
        format!("{matrices} u-matrices on A6 with k <= 4, n <= 3; diagonal-zero checked on {} binary generator(s)", gens.binary.len()),
    );
}

fn scaling(report: &mut Report, wit: &mut Witnesses) {
    let a = zoo::a6();
    let solver = WreathSolver::new(a.clone(), CAP).expect("solvable");
    let mut ok = true;
    let mut details = Vec::new();
    for bias in [1.0, 0.0] {
        // skip draws whose target is one of the generators
        let inst = (200u64..)
            .map(|seed| random_instance(a.algebra(), 200, 40, bias, &mut rng_from_seed(seed)))
            .find(|i| !i.generators.contains(&i.target))
            .expect("a non-trivial draw");
        let start = Instant::now();
        let v = solver.solve(&inst).expect("solver");
        let secs = start.elapsed().as_secs_f64();
        wit.record(&solver, &inst, &v);
        ok &= secs < 5.0 && v.stats.tuples_materialized <= v.stats.tuples_bound;
        let oracle = smp_oracle(a.algebra(), &inst.generators, &inst.target, CAP);
        let infeasible = matches!(oracle, Err(Error::CapExceeded { .. }));
        ok &= infeasible;
        details.push(format!(
            "member={} in {secs:.2} s, {} tuples against bound {}, oracle cap {CAP} exceeded: {infeasible}",
            v.member, v.stats.tuples_materialized, v.stats.tuples_bound
        ));
    }
    report.line(7, "scaling k=200 n=40", ok, details.join("; "));
}

fn wreath_check(spec: &WreathSpec) -> WreathSolver {
    WreathSolver::new(spec.clone(), CAP).expect("solvable")
}

fn main() {
    let mut report = Report { failures: 0 };
    let mut wit = Witnesses::default();
    oracle_equivalence(&mut report, &mut wit);
    fix_value_correctness(&mut report);
    affine_comprep(&mut report);
    plane_geometry(&mut report);
    collapse_rule(&mut report);
    image_vs_brute_force(&mut report);
    scaling(&mut report, &mut wit);
    // members built from random circuits, on a third wreath product
    let extra = zoo::random_wreath(5, 2, &mut rng_from_seed(9));
    let solver = wreath_check(&extra);
    for seed in 0..100 {
        let inst = random_instance(extra.algebra(), 6, 4, 1.0, &mut rng_from_seed(seed));
        let v = solver.solve(&inst).expect("solver");
        wit.record(&solver, &inst, &v);
    }
    report.line(
        8,
        "witness soundness",
        wit.failed == 0 && wit.missing == 0 && wit.checked > 0,
        format!("{} member verdicts re-evaluated, {} failed, {} without witness", wit.checked, wit.failed, wit.missing),
    );
    if report.failures > 0 {
        std::process::exit(1);
    }
}
