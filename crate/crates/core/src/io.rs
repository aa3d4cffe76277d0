//! JSON file formats for algebras, wreath specs, instances and
//! representations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::Algebra;
use crate::circuit::{Circuit, Term};
use crate::error::{Error, Result};
use crate::group::AbelianGroup;
use crate::rep::CompactRep;
use crate::solver::{AlgebraInput, SmpInstance};
use crate::wreath::WreathSpec;
use crate::Elem;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpFile {
    pub symbol: String,
    pub arity: usize,
    pub table: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupFile {
    #[serde(rename = "cyclic_orders", alias = "orders")]
    pub orders: Vec<u32>,
    #[serde(default)]
    pub zero: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraFile {
    pub domain_size: usize,
    pub ops: Vec<OpFile>,
    pub maltsev: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupFile>,
}

impl AlgebraFile {
    pub fn from_algebra(alg: &Algebra, group: Option<&AbelianGroup>) -> AlgebraFile {
        AlgebraFile {
            domain_size: alg.size(),
            ops: alg
                .ops()
                .iter()
                .map(|o| OpFile {
                    symbol: o.symbol().to_string(),
                    arity: o.arity(),
                    table: o.table().iter().map(|&e| e as usize).collect(),
                })
                .collect(),
            maltsev: alg.maltsev().to_sexpr(),
            group: group.map(|g| GroupFile {
                orders: g.orders().to_vec(),
                zero: g.zero() as usize,
            }),
        }
    }

    pub fn to_algebra(&self) -> Result<Algebra> {
        let mut ops = Vec::with_capacity(self.ops.len());
        for o in &self.ops {
            let table = o
                .table
                .iter()
                .map(|&e| to_elem(e, self.domain_size))
                .collect::<Result<Vec<_>>>()?;
            ops.push((o.symbol.clone(), o.arity, table));
        }
        let m = Circuit::parse(&self.maltsev, Some(3))?;
        Algebra::new(self.domain_size, ops, m)
    }

    pub fn to_group(&self) -> Result<Option<AbelianGroup>> {
        self.group
            .as_ref()
            .map(|g| AbelianGroup::new(g.orders.clone(), g.zero))
            .transpose()
    }
}

fn to_elem(e: usize, size: usize) -> Result<Elem> {
    if e >= size || e > Elem::MAX as usize {
        return Err(Error::OutOfRange { elem: e, size });
    }
    Ok(e as Elem)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WreathFile {
    #[serde(rename = "L")]
    pub l: AlgebraFile,
    #[serde(rename = "U")]
    pub u: AlgebraFile,
    pub zero: usize,
    pub hat: BTreeMap<String, Vec<usize>>,
}

impl WreathFile {
    pub fn from_spec(spec: &WreathSpec) -> WreathFile {
        let hat = spec
            .l()
            .ops()
            .iter()
            .zip(spec.hat())
            .map(|(o, t)| (o.symbol().to_string(), t.iter().map(|&e| e as usize).collect()))
            .collect();
        WreathFile {
            l: AlgebraFile::from_algebra(spec.l(), Some(spec.l_group())),
            u: AlgebraFile::from_algebra(spec.u(), Some(spec.u_group())),
            zero: spec.zero() as usize,
            hat,
        }
    }

    /// Without a group, `L` is taken cyclic with the given zero and `U`
    /// cyclic with zero 0.
    pub fn to_spec(&self) -> Result<WreathSpec> {
        let l = self.l.to_algebra()?;
        let u = self.u.to_algebra()?;
        let lg = match self.l.to_group()? {
            Some(g) if g.zero() as usize != self.zero => {
                return Err(Error::Wreath(format!(
                    "the group zero {} of L differs from the declared zero {}",
                    g.zero(),
                    self.zero
                )))
            }
            Some(g) => g,
            None => AbelianGroup::new(vec![l.size() as u32], self.zero)?,
        };
        let ug = self.u.to_group()?.unwrap_or_else(|| AbelianGroup::cyclic(u.size() as u32));
        let mut hat = Vec::with_capacity(l.ops().len());
        for o in l.ops() {
            let t = self
                .hat
                .get(o.symbol())
                .ok_or_else(|| Error::Wreath(format!("no hat table for `{}`", o.symbol())))?;
            hat.push(t.iter().map(|&e| to_elem(e, l.size())).collect::<Result<Vec<_>>>()?);
        }
        if let Some(extra) = self.hat.keys().find(|s| l.op_index(s).is_none()) {
            return Err(Error::UnknownSymbol(extra.clone()));
        }
        WreathSpec::new(l, lg, u, ug, hat)
    }
}

/// An element given as an index or as an `[l, u]` pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElemRepr {
    Index(usize),
    Pair([usize; 2]),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub k: usize,
    pub generators: Vec<Vec<ElemRepr>>,
    pub target: Vec<ElemRepr>,
}

impl InstanceFile {
    pub fn from_instance(inst: &SmpInstance) -> InstanceFile {
        let conv = |t: &Vec<Elem>| t.iter().map(|&e| ElemRepr::Index(e as usize)).collect();
        InstanceFile {
            k: inst.k(),
            generators: inst.generators.iter().map(conv).collect(),
            target: conv(&inst.target),
        }
    }

    /// Pairs are only meaningful for wreath products.
    pub fn to_instance(&self, input: &AlgebraInput) -> Result<SmpInstance> {
        let size = input.algebra().size();
        let conv = |t: &Vec<ElemRepr>| -> Result<Vec<Elem>> {
            if t.len() != self.k {
                return Err(Error::LengthMismatch);
            }
            t.iter()
                .map(|e| match (e, input) {
                    (ElemRepr::Index(i), _) => to_elem(*i, size),
                    (ElemRepr::Pair([l, u]), AlgebraInput::Wreath(spec)) => {
                        if *l >= spec.l().size() || *u >= spec.p() {
                            return Err(Error::OutOfRange { elem: l * spec.p() + u, size });
                        }
                        Ok(spec.join(*l as Elem, *u as Elem))
                    }
                    (ElemRepr::Pair(_), AlgebraInput::Plain { .. }) => {
                        Err(Error::Parse("pair elements need a wreath product".into()))
                    }
                })
                .collect()
        };
        let inst = SmpInstance {
            generators: self.generators.iter().map(conv).collect::<Result<_>>()?,
            target: conv(&self.target)?,
        };
        inst.validate(input.algebra())?;
        Ok(inst)
    }
}

/// Circuits are s-expressions over `x1..x{arity}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompRepFile {
    pub arity: usize,
    pub tuples: Vec<Vec<Elem>>,
    pub circuits: Vec<Option<String>>,
}

impl CompRepFile {
    pub fn from_rep(rep: &CompactRep) -> CompRepFile {
        CompRepFile {
            arity: rep.arity(),
            tuples: rep.tuples().to_vec(),
            circuits: (0..rep.len()).map(|i| rep.circuit(i).map(|c| c.to_sexpr())).collect(),
        }
    }

    pub fn to_rep(&self, k: usize) -> Result<CompactRep> {
        if self.circuits.len() != self.tuples.len() {
            return Err(Error::LengthMismatch);
        }
        let mut entries: Vec<(Vec<Elem>, Option<Term>)> = Vec::with_capacity(self.tuples.len());
        for (t, c) in self.tuples.iter().zip(&self.circuits) {
            let term = match c {
                Some(src) => Some(Circuit::parse(src, Some(self.arity))?.into_term()),
                None => None,
            };
            entries.push((t.clone(), term));
        }
        CompactRep::from_entries(k, self.arity, entries)
    }
}

/// Reads either a plain algebra or a wreath spec, told apart by the `L` key.
pub fn parse_algebra_input(json: &str) -> Result<AlgebraInput> {
    let v: serde_json::Value = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    if v.get("L").is_some() {
        let f: WreathFile = serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(AlgebraInput::Wreath(f.to_spec()?))
    } else {
        let f: AlgebraFile = serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(AlgebraInput::Plain {
            algebra: f.to_algebra()?,
            group: f.to_group()?,
        })
    }
}

pub fn algebra_input_to_json(input: &AlgebraInput) -> String {
    match input {
        AlgebraInput::Plain { algebra, group } => to_json(&AlgebraFile::from_algebra(algebra, group.as_ref())),
        AlgebraInput::Wreath(spec) => to_json(&WreathFile::from_spec(spec)),
    }
}

pub fn to_json<T: Serialize>(x: &T) -> String {
    serde_json::to_string_pretty(x).expect("serializable")
}

pub fn from_json<'a, T: Deserialize<'a>>(s: &'a str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{Stats, Verdict, Witness};
    use crate::zoo;

    #[test]
    fn algebra_round_trip() {
        let f = AlgebraFile::from_algebra(&zoo::z3_group(), None);
        let back: AlgebraFile = from_json(&to_json(&f)).unwrap();
        assert_eq!(back, f);
        let again = AlgebraFile::from_algebra(&back.to_algebra().unwrap(), None);
        assert_eq!(again, f);
    }

    #[test]
    fn wreath_round_trip() {
        let f = WreathFile::from_spec(&zoo::a6());
        let json = to_json(&f);
        let AlgebraInput::Wreath(spec) = parse_algebra_input(&json).unwrap() else {
            panic!("expected a wreath product");
        };
        assert_eq!(WreathFile::from_spec(&spec), f);
        assert_eq!(spec.algebra().op(0).table(), zoo::a6().algebra().op(0).table());
    }

    #[test]
    fn wreath_defaults_to_cyclic_groups() {
        let mut f = WreathFile::from_spec(&zoo::a6());
        f.l.group = None;
        f.u.group = None;
        let spec = f.to_spec().unwrap();
        assert_eq!(spec.l_group().orders(), &[3]);
        f.l.group = Some(GroupFile { orders: vec![3], zero: 1 });
        assert!(f.to_spec().is_err());
    }

    #[test]
    fn instance_pairs() {
        let input = AlgebraInput::Wreath(zoo::a6());
        let f: InstanceFile = from_json(r#"{"k": 2, "generators": [[[1, 0], 3]], "target": [2, [0, 1]]}"#).unwrap();
        let inst = f.to_instance(&input).unwrap();
        assert_eq!(inst.generators, vec![vec![2, 3]]);
        assert_eq!(inst.target, vec![2, 1]);
        let back = InstanceFile::from_instance(&inst);
        assert_eq!(back.to_instance(&input).unwrap(), inst);
    }

    #[test]
    fn comprep_round_trip() {
        let m = Circuit::parse("(m x1 x2 x1)", Some(2)).unwrap();
        let rep = CompactRep::from_entries(
            2,
            2,
            vec![
                (vec![0, 1], Some(Term::var(0))),
                (vec![1, 1], Some(m.into_term())),
            ],
        )
        .unwrap();
        let f = CompRepFile::from_rep(&rep);
        let json = to_json(&f);
        assert!(json.contains("\"tuples\""));
        let back: CompRepFile = from_json(&json).unwrap();
        assert_eq!(CompRepFile::from_rep(&back.to_rep(2).unwrap()), f);
    }

    #[test]
    fn group_key_is_cyclic_orders() {
        let f = AlgebraFile::from_algebra(&zoo::cyclic_affine(3), Some(&zoo::cyclic_group(3)));
        assert!(to_json(&f).contains("cyclic_orders"));
    }

    #[test]
    fn verdict_round_trip() {
        let v = Verdict {
            member: true,
            witness: Some(Witness::Wreath {
                circuits: vec![Circuit::parse("(m x1 x2 x1)", Some(2)).unwrap()],
                coefficients: vec![1],
                clonoid_part: vec![0, 2],
            }),
            stats: Stats {
                tuples_materialized: 4,
                tuples_bound: 9,
                elapsed_ms: 1.5,
                path: "wreath".into(),
            },
        };
        let back: Verdict = from_json(&to_json(&v)).unwrap();
        assert_eq!(to_json(&back), to_json(&v));
    }
}
