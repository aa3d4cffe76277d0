//! Polynomial-time subpower membership for wreath products `L ⊗ U` with
//! `U` affine of prime order, plus the direct-product variant and dispatch.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::affine::{affine_closure_comprep, verify_affine, AffineOpSpec};
use crate::algebra::Algebra;
use crate::circuit::{eval_circuit, Circuit, Gates, Term};
use crate::closure::{clone_enumerate, smp_oracle_witness};
use crate::diffclonoid::{diff_clonoid_gens, ClonoidGenSet, DiffMethod};
use crate::echelon::Echelon;
use crate::error::{Error, Result};
use crate::fix::fix_coordinate;
use crate::group::AbelianGroup;
use crate::image::clonoid_image_comprep;
use crate::rep::{maltsev_chain_member, thin_to_compact};
use crate::wreath::WreathSpec;
use crate::Elem;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmpInstance {
    pub generators: Vec<Vec<Elem>>,
    pub target: Vec<Elem>,
}

impl SmpInstance {
    pub fn new(generators: Vec<Vec<Elem>>, target: Vec<Elem>) -> SmpInstance {
        SmpInstance { generators, target }
    }

    pub fn k(&self) -> usize {
        self.target.len()
    }

    pub fn n(&self) -> usize {
        self.generators.len()
    }

    pub fn validate(&self, alg: &Algebra) -> Result<()> {
        if self.generators.is_empty() {
            return Err(Error::Empty("generator list".into()));
        }
        for g in &self.generators {
            if g.len() != self.k() {
                return Err(Error::LengthMismatch);
            }
            alg.check_tuple(g)?;
        }
        alg.check_tuple(&self.target)
    }

    /// The index of a generator equal to the target.
    fn trivial(&self) -> Option<usize> {
        self.generators.iter().position(|g| *g == self.target)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// A term over the generators evaluating to the target.
    Circuit { circuit: Circuit },
    /// `target = Σ λ_j p_j(a⃗) + r` on L-parts, where the `p_j` share the
    /// target's U-part, `Σ λ_j = 1` and `r` lies in the clonoid image.
    Wreath {
        circuits: Vec<Circuit>,
        coefficients: Vec<u32>,
        clonoid_part: Vec<Elem>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub tuples_materialized: usize,
    pub tuples_bound: usize,
    pub elapsed_ms: f64,
    pub path: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Verdict {
    pub member: bool,
    pub witness: Option<Witness>,
    pub stats: Stats,
}

impl Verdict {
    fn new(member: bool, witness: Option<Witness>, path: &str, start: Instant) -> Verdict {
        Verdict {
            member,
            witness,
            stats: Stats {
                path: path.to_string(),
                elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
                ..Stats::default()
            },
        }
    }
}

/// `(k + n|A|)|A|²` and `k(|A| + |gens|)` with the constants of the
/// wreath pipeline made explicit.
pub fn footprint_bound(k: usize, n: usize, size: usize, gens: usize) -> usize {
    let rows = 2 * k + n * size + 1;
    4 * rows * size * size + k * (size + gens) + gens
}

/// Everything about a wreath product that does not depend on the instance.
#[derive(Clone, Debug)]
pub struct WreathSolver {
    spec: WreathSpec,
    specs: Vec<AffineOpSpec>,
    group: AbelianGroup,
    gens: ClonoidGenSet,
}

impl WreathSolver {
    /// Checks the hypotheses and computes the clonoid generators.
    pub fn new(spec: WreathSpec, cap: usize) -> Result<WreathSolver> {
        spec.check_solvable()?;
        let gens = diff_clonoid_gens(&spec, DiffMethod::Fixpoint, cap)?;
        WreathSolver::with_gens(spec, gens)
    }

    pub fn with_gens(spec: WreathSpec, gens: ClonoidGenSet) -> Result<WreathSolver> {
        let specs = spec.check_solvable()?;
        gens.validate()?;
        if gens.p as usize != spec.p() || gens.l_orders != spec.l_group().orders() {
            return Err(Error::Precondition("clonoid generators belong to a different wreath product".into()));
        }
        let group = spec.companion_group();
        Ok(WreathSolver {
            spec,
            specs,
            group,
            gens,
        })
    }

    pub fn spec(&self) -> &WreathSpec {
        &self.spec
    }

    pub fn clonoid_gens(&self) -> &ClonoidGenSet {
        &self.gens
    }

    fn u_residues(&self, inst: &SmpInstance) -> Vec<Vec<u32>> {
        let ug = self.spec.u_group();
        inst.generators
            .iter()
            .map(|g| g.iter().map(|&e| ug.residues(self.spec.split(e).1)[0]).collect())
            .collect()
    }

    /// Generators extended by shadow rows carrying `(0, u)`, then the original
    /// rows, then rows enumerating `{a e_i} ∪ {0̄}`.
    fn extended_generators(&self, inst: &SmpInstance) -> Vec<Vec<Elem>> {
        let (n, k) = (inst.n(), inst.k());
        let zl = self.spec.zero();
        let zp = self.spec.zero_pair();
        let size = self.spec.algebra().size() as Elem;
        let others: Vec<Elem> = (0..size).filter(|&a| a != zp).collect();
        inst.generators
            .iter()
            .enumerate()
            .map(|(j, g)| {
                let mut row = Vec::with_capacity(2 * k + n * others.len() + 1);
                row.extend(g.iter().map(|&e| self.spec.join(zl, self.spec.split(e).1)));
                row.extend_from_slice(g);
                for i in 0..n {
                    row.extend(others.iter().map(|&a| if i == j { a } else { zp }));
                }
                row.push(zp);
                row
            })
            .collect()
    }

    pub fn solve(&self, inst: &SmpInstance) -> Result<Verdict> {
        let start = Instant::now();
        let alg = self.spec.algebra();
        inst.validate(alg)?;
        let (n, k) = (inst.n(), inst.k());
        let bound = footprint_bound(k, n, alg.size(), self.gens.len());
        if let Some(i) = inst.trivial() {
            let mut v = Verdict::new(
                true,
                Some(Witness::Circuit {
                    circuit: Circuit::projection(n, i),
                }),
                "wreath",
                start,
            );
            v.stats.tuples_bound = bound;
            return Ok(v);
        }
        let finish = |member, witness, materialized| {
            let mut v = Verdict::new(member, witness, "wreath", start);
            v.stats.tuples_materialized = materialized;
            v.stats.tuples_bound = bound;
            v
        };
        let companion = self.spec.companion();
        let ext = self.extended_generators(inst);
        let (mut rep, _) = affine_closure_comprep(companion, &self.group, &self.specs, &ext)?;
        let mut peak = rep.len();
        let zl = self.spec.zero();
        for i in 0..k {
            let want = self.spec.join(zl, self.spec.split(inst.target[i]).1);
            let first = rep.tuples()[0][i];
            if rep.tuples().iter().all(|t| t[i] == first) {
                if first == want {
                    continue;
                }
                return Ok(finish(false, None, peak));
            }
            let mut allowed = vec![false; companion.size()];
            allowed[want as usize] = true;
            rep = fix_coordinate(companion, &rep, i, &allowed, Some(&self.group))?;
            peak = peak.max(rep.len());
            if rep.is_empty() {
                return Ok(finish(false, None, peak));
            }
        }

        let terms: Vec<&Term> = rep.terms().iter().map(|t| t.as_ref().expect("enumerated")).collect();
        let gates = Gates::flatten(n, &terms);
        let args: Vec<&[Elem]> = inst.generators.iter().map(|g| g.as_slice()).collect();
        let values = gates.eval(alg, &args)?;

        let image = clonoid_image_comprep(&self.gens, &self.u_residues(inst))?;
        let lg = self.spec.l_group();
        let lpart = |t: &[Elem]| -> Vec<u32> {
            let ls: Vec<Elem> = t.iter().map(|&e| self.spec.split(e).0).collect();
            lg.tuple_residues(&ls)
        };
        let moduli = lg.moduli(k);
        let c0 = lpart(&values[0]);
        let diff = |x: &[u32]| -> Vec<u32> {
            x.iter()
                .zip(&c0)
                .zip(&moduli)
                .map(|((&a, &b), &m)| (a + m - b) % m)
                .collect()
        };
        let mut dgens: Vec<Vec<u32>> = values[1..].iter().map(|c| diff(&lpart(c))).collect();
        let nc = dgens.len();
        dgens.extend(image.echelon.rows().iter().map(|r| r.v.clone()));
        let materialized = peak + values.len() + image.emitted;
        let target = diff(&lpart(&inst.target));
        let Some(coef) = Echelon::from_generators(moduli.clone(), &dgens).solve(&target) else {
            return Ok(finish(false, None, materialized));
        };

        let e = lg.exponent() as u64;
        let mut circuits = vec![Circuit::new(n, terms[0].clone())?];
        let mut coefficients = vec![0u32];
        let mut sum = 0u64;
        for (j, &c) in coef[..nc].iter().enumerate() {
            if c != 0 {
                circuits.push(Circuit::new(n, terms[j + 1].clone())?);
                coefficients.push(c);
                sum += c as u64;
            }
        }
        coefficients[0] = ((1 + e - sum % e) % e) as u32;
        let r = Echelon::evaluate(&moduli, &dgens[nc..], &coef[nc..]);
        let clonoid_part = lg.tuple_from_residues(&r);
        let witness = if circuits.len() == 1 && clonoid_part.iter().all(|&x| x == zl) {
            Witness::Circuit {
                circuit: circuits.pop().expect("one circuit"),
            }
        } else {
            Witness::Wreath {
                circuits,
                coefficients,
                clonoid_part,
            }
        };
        Ok(finish(true, Some(witness), materialized))
    }

    /// Recomputes a witness numerically.
    pub fn check_witness(&self, inst: &SmpInstance, w: &Witness) -> Result<bool> {
        let alg = self.spec.algebra();
        match w {
            Witness::Circuit { circuit } => Ok(eval_circuit(alg, circuit, &inst.generators)? == inst.target),
            Witness::Wreath {
                circuits,
                coefficients,
                clonoid_part,
            } => {
                let lg = self.spec.l_group();
                let e = lg.exponent() as u64;
                if circuits.is_empty()
                    || circuits.len() != coefficients.len()
                    || clonoid_part.len() != inst.k()
                    || coefficients.iter().map(|&c| c as u64).sum::<u64>() % e != 1 % e
                {
                    return Ok(false);
                }
                let image = clonoid_image_comprep(&self.gens, &self.u_residues(inst))?;
                if !image.contains(clonoid_part) {
                    return Ok(false);
                }
                let mut acc = clonoid_part.clone();
                for (c, &lambda) in circuits.iter().zip(coefficients) {
                    let v = eval_circuit(alg, c, &inst.generators)?;
                    for ((a, &x), &t) in acc.iter_mut().zip(&v).zip(&inst.target) {
                        let (xl, xu) = self.spec.split(x);
                        if xu != self.spec.split(t).1 {
                            return Ok(false);
                        }
                        *a = lg.add(*a, lg.scale(xl, lambda as u64));
                    }
                }
                Ok(acc.iter().zip(&inst.target).all(|(&a, &t)| a == self.spec.split(t).0))
            }
        }
    }
}

pub fn solve_smp_wreath(spec: &WreathSpec, inst: &SmpInstance, gens: &ClonoidGenSet) -> Result<Verdict> {
    WreathSolver::with_gens(spec.clone(), gens.clone())?.solve(inst)
}

/// Compares the term operations of `L × U` and `L ⊗ U` up to arity 2.
pub fn companion_clone_included(spec: &WreathSpec, cap: usize) -> Result<bool> {
    for arity in 1..=2 {
        let ours: rustc_hash::FxHashSet<Vec<Elem>> = clone_enumerate(spec.algebra(), arity, cap)?
            .into_iter()
            .map(|(t, _)| t)
            .collect();
        for (t, _) in clone_enumerate(spec.companion(), arity, cap)? {
            if !ours.contains(&t) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Decides membership through `Sig(Sg(a⃗)) = Sig({c + r̂})`, assuming every
/// term operation of `L × U` is one of `L ⊗ U`. `c` ranges over a compact
/// representation of `Sg_{(L×U)^k}(a⃗)` and `r̂` over fork witnesses of the
/// clonoid image.
pub fn solve_smp_directproduct(
    spec: &WreathSpec,
    inst: &SmpInstance,
    gens: &ClonoidGenSet,
    verify_hypothesis: bool,
    cap: usize,
) -> Result<Verdict> {
    let start = Instant::now();
    let alg = spec.algebra();
    inst.validate(alg)?;
    if verify_hypothesis && !companion_clone_included(spec, cap)? {
        return Err(Error::Precondition("a binary term operation of L × U is not one of the wreath product".into()));
    }
    let group = spec.companion_group();
    let specs = verify_affine(spec.companion(), &group)?;
    let (cplus, _) = affine_closure_comprep(spec.companion(), &group, &specs, &inst.generators)?;
    let ug = spec.u_group();
    let us: Vec<Vec<u32>> = inst
        .generators
        .iter()
        .map(|g| g.iter().map(|&e| ug.residues(spec.split(e).1)[0]).collect())
        .collect();
    let image = clonoid_image_comprep(gens, &us)?;
    let lg = spec.l_group();
    let shifts = image.compact_tuples();
    let mut entries = Vec::with_capacity(cplus.len() * shifts.len());
    for c in cplus.tuples() {
        for r in &shifts {
            let t: Vec<Elem> = c
                .iter()
                .zip(r)
                .map(|(&x, &ri)| {
                    let (xl, xu) = spec.split(x);
                    spec.join(lg.add(xl, ri), xu)
                })
                .collect();
            entries.push((t, None));
        }
    }
    let materialized = entries.len();
    let rep = thin_to_compact(inst.k(), inst.n(), entries)?;
    // The hypothesis puts the companion's x - y + z into Clo(A), so chaining
    // with it stays inside Sg(a⃗).
    let member = maltsev_chain_member(spec.companion(), &rep, &inst.target)?.is_some();
    let mut v = Verdict::new(member, None, "direct-product", start);
    v.stats.tuples_materialized = materialized;
    Ok(v)
}

/// Membership in an affine algebra with a full circuit witness.
pub fn solve_smp_affine(alg: &Algebra, group: &AbelianGroup, inst: &SmpInstance) -> Result<Verdict> {
    let start = Instant::now();
    inst.validate(alg)?;
    let specs = verify_affine(alg, group)?;
    let (rep, _) = affine_closure_comprep(alg, group, &specs, &inst.generators)?;
    let chain = maltsev_chain_member(alg, &rep, &inst.target)?;
    let witness = match &chain {
        Some(ch) => ch.circuit(alg, &rep).map(|circuit| Witness::Circuit { circuit }),
        None => None,
    };
    let mut v = Verdict::new(chain.is_some(), witness, "affine", start);
    v.stats.tuples_materialized = rep.len();
    Ok(v)
}

/// Exhaustive closure; exponential in general.
pub fn solve_smp_oracle(alg: &Algebra, inst: &SmpInstance, cap: usize) -> Result<Verdict> {
    let start = Instant::now();
    inst.validate(alg)?;
    let w = smp_oracle_witness(alg, &inst.generators, &inst.target, cap)?;
    let member = w.is_some();
    Ok(Verdict::new(member, w.map(|circuit| Witness::Circuit { circuit }), "oracle", start))
}

#[derive(Clone, Debug)]
pub enum AlgebraInput {
    Plain {
        algebra: Algebra,
        group: Option<AbelianGroup>,
    },
    Wreath(WreathSpec),
}

impl AlgebraInput {
    pub fn algebra(&self) -> &Algebra {
        match self {
            AlgebraInput::Plain { algebra, .. } => algebra,
            AlgebraInput::Wreath(spec) => spec.algebra(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DispatchOptions {
    pub allow_oracle: bool,
    pub cap: usize,
}

/// Affine algebras go through Gaussian elimination, wreath products through
/// the wreath pipeline and anything else to the oracle, if allowed.
pub fn dispatch(input: &AlgebraInput, inst: &SmpInstance, opts: DispatchOptions) -> Result<Verdict> {
    let refusal = |why: String| {
        if opts.allow_oracle {
            log::warn!("{why}; falling back to the exponential oracle");
            solve_smp_oracle(input.algebra(), inst, opts.cap)
        } else {
            Err(Error::Precondition(format!("{why} and the oracle fallback is disabled")))
        }
    };
    match input {
        AlgebraInput::Plain { algebra, group } => {
            let g = group
                .clone()
                .unwrap_or_else(|| AbelianGroup::cyclic(algebra.size() as u32));
            match verify_affine(algebra, &g) {
                Ok(_) => solve_smp_affine(algebra, &g, inst),
                Err(e) => refusal(format!("algebra is not affine ({e})")),
            }
        }
        AlgebraInput::Wreath(spec) => match WreathSolver::new(spec.clone(), opts.cap) {
            Ok(s) => s.solve(inst),
            Err(e @ (Error::Precondition(_) | Error::NotAffine(_) | Error::CapExceeded { .. })) => {
                refusal(format!("wreath pipeline unavailable ({e})"))
            }
            Err(e) => Err(e),
        },
    }
}
