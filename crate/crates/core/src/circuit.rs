//! Term DAGs over operation symbols, gate lists and the s-expression syntax.
//!
//! A [`Term`] is a reference-counted node, so substituting terms into a
//! circuit shares subterms instead of copying them. Structural duplicates
//! are merged when a term is flattened into a [`Gates`] list.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rustc_hash::FxHashMap;

use crate::algebra::Algebra;
use crate::error::{Error, Result};
use crate::Elem;

#[derive(Debug)]
enum Node {
    Var(usize),
    App(Arc<str>, Vec<Term>),
}

// Long m-chains would otherwise be dropped recursively.
impl Drop for Node {
    fn drop(&mut self) {
        let mut stack = match self {
            Node::App(_, args) => std::mem::take(args),
            Node::Var(_) => return,
        };
        while let Some(t) = stack.pop() {
            if let Ok(mut node) = Arc::try_unwrap(t.0) {
                if let Node::App(_, args) = &mut node {
                    stack.append(args);
                }
            }
        }
    }
}

/// A shared term over variables `0..n` (printed as `x1..xn`).
#[derive(Clone, Debug)]
pub struct Term(Arc<Node>);

impl Term {
    pub fn var(i: usize) -> Term {
        Term(Arc::new(Node::Var(i)))
    }

    pub fn app(symbol: impl Into<Arc<str>>, args: Vec<Term>) -> Term {
        Term(Arc::new(Node::App(symbol.into(), args)))
    }

    pub fn as_var(&self) -> Option<usize> {
        match *self.0 {
            Node::Var(i) => Some(i),
            Node::App(..) => None,
        }
    }

    pub fn ptr_eq(&self, other: &Term) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    fn key(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    fn children(&self) -> &[Term] {
        match &*self.0 {
            Node::Var(_) => &[],
            Node::App(_, args) => args,
        }
    }

    /// Visits every distinct node (by identity) in post-order.
    fn post_order(&self, mut visit: impl FnMut(&Term)) {
        let mut seen: FxHashMap<*const Node, ()> = FxHashMap::default();
        let mut stack: Vec<(Term, usize)> = vec![(self.clone(), 0)];
        seen.insert(self.key(), ());
        while let Some((t, next)) = stack.pop() {
            let kids = t.children();
            if next < kids.len() {
                let child = kids[next].clone();
                stack.push((t, next + 1));
                if seen.insert(child.key(), ()).is_none() {
                    stack.push((child, 0));
                }
            } else {
                visit(&t);
            }
        }
    }

    /// Number of distinct nodes reachable from this term.
    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.post_order(|_| n += 1);
        n
    }

    /// Largest variable index occurring, if any.
    pub fn max_var(&self) -> Option<usize> {
        let mut best = None;
        self.post_order(|t| {
            if let Some(i) = t.as_var() {
                best = best.max(Some(i));
            }
        });
        best
    }

    /// Replaces variable `i` by `subst[i]`. Shared nodes stay shared.
    pub fn substitute(&self, subst: &[Term]) -> Term {
        let mut memo: FxHashMap<*const Node, Term> = FxHashMap::default();
        self.post_order(|t| {
            let out = match &*t.0 {
                Node::Var(i) => subst[*i].clone(),
                Node::App(sym, args) => Term::app(
                    sym.clone(),
                    args.iter().map(|a| memo[&a.key()].clone()).collect(),
                ),
            };
            memo.insert(t.key(), out);
        });
        memo.remove(&self.key()).expect("root visited")
    }
}

/// One gate of a flattened circuit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    Input(usize),
    Op(Arc<str>, Vec<usize>),
}

/// Topologically ordered gates with designated outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gates {
    pub arity: usize,
    pub gates: Vec<Gate>,
    pub outputs: Vec<usize>,
}

impl Gates {
    /// Flattens several roots into one list, merging structurally equal gates.
    pub fn flatten(arity: usize, roots: &[&Term]) -> Gates {
        let mut by_ptr: FxHashMap<*const Node, usize> = FxHashMap::default();
        let mut by_shape: HashMap<Gate, usize> = HashMap::new();
        let mut gates = Vec::new();
        let mut outputs = Vec::with_capacity(roots.len());
        for root in roots {
            let mut stack: Vec<(&Term, usize)> = Vec::new();
            if !by_ptr.contains_key(&root.key()) {
                stack.push((root, 0));
            }
            while let Some((t, next)) = stack.pop() {
                let kids = t.children();
                if next < kids.len() {
                    stack.push((t, next + 1));
                    let child = &kids[next];
                    if !by_ptr.contains_key(&child.key()) {
                        stack.push((child, 0));
                    }
                    continue;
                }
                if by_ptr.contains_key(&t.key()) {
                    continue;
                }
                let gate = match &*t.0 {
                    Node::Var(i) => Gate::Input(*i),
                    Node::App(sym, args) => {
                        Gate::Op(sym.clone(), args.iter().map(|a| by_ptr[&a.key()]).collect())
                    }
                };
                let id = *by_shape.entry(gate.clone()).or_insert_with(|| {
                    gates.push(gate);
                    gates.len() - 1
                });
                by_ptr.insert(t.key(), id);
            }
            outputs.push(by_ptr[&root.key()]);
        }
        Gates {
            arity,
            gates,
            outputs,
        }
    }

    /// Rebuilds shared terms, one per output.
    pub fn to_terms(&self) -> Vec<Term> {
        let mut built: Vec<Term> = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            built.push(match g {
                Gate::Input(i) => Term::var(*i),
                Gate::Op(sym, kids) => {
                    Term::app(sym.clone(), kids.iter().map(|&c| built[c].clone()).collect())
                }
            });
        }
        self.outputs.iter().map(|&o| built[o].clone()).collect()
    }

    fn resolve(&self, alg: &Algebra) -> Result<Vec<Option<usize>>> {
        self.gates
            .iter()
            .map(|g| match g {
                Gate::Input(i) => {
                    if *i >= self.arity {
                        return Err(Error::CircuitArity {
                            circuit: self.arity,
                            supplied: i + 1,
                        });
                    }
                    Ok(None)
                }
                Gate::Op(sym, kids) => {
                    let idx = alg
                        .op_index(sym)
                        .ok_or_else(|| Error::UnknownSymbol(sym.to_string()))?;
                    let ar = alg.op(idx).arity();
                    if ar != kids.len() {
                        return Err(Error::ArityMismatch {
                            symbol: sym.to_string(),
                            expected: ar,
                            got: kids.len(),
                        });
                    }
                    Ok(Some(idx))
                }
            })
            .collect()
    }

    /// Coordinate-wise evaluation; returns one tuple per output.
    pub fn eval(&self, alg: &Algebra, args: &[&[Elem]]) -> Result<Vec<Vec<Elem>>> {
        if args.len() != self.arity {
            return Err(Error::CircuitArity {
                circuit: self.arity,
                supplied: args.len(),
            });
        }
        let k = args.first().map_or(0, |a| a.len());
        if args.iter().any(|a| a.len() != k) {
            return Err(Error::LengthMismatch);
        }
        for a in args {
            alg.check_tuple(a)?;
        }
        let ops = self.resolve(alg)?;
        let mut vals: Vec<Vec<Elem>> = Vec::with_capacity(self.gates.len());
        let mut argbuf = Vec::new();
        for (g, op) in self.gates.iter().zip(&ops) {
            let v = match (g, op) {
                (Gate::Input(i), _) => args[*i].to_vec(),
                (Gate::Op(_, kids), Some(op)) => {
                    let op = alg.op(*op);
                    (0..k)
                        .map(|h| {
                            argbuf.clear();
                            argbuf.extend(kids.iter().map(|&c| vals[c][h]));
                            op.apply(&argbuf)
                        })
                        .collect()
                }
                _ => unreachable!(),
            };
            vals.push(v);
        }
        Ok(self.outputs.iter().map(|&o| vals[o].clone()).collect())
    }

    /// Prints output `which` as an s-expression, binding shared or deeply
    /// nested gates with `let`.
    pub fn to_sexpr(&self, which: usize) -> String {
        const MAX_INLINE: usize = 32;
        let root = self.outputs[which];
        let mut reach = vec![false; self.gates.len()];
        reach[root] = true;
        for g in (0..=root).rev() {
            if reach[g] {
                if let Gate::Op(_, kids) = &self.gates[g] {
                    for &c in kids {
                        reach[c] = true;
                    }
                }
            }
        }
        let mut uses = vec![0usize; self.gates.len()];
        for g in 0..=root {
            if let (true, Gate::Op(_, kids)) = (reach[g], &self.gates[g]) {
                for &c in kids {
                    uses[c] += 1;
                }
            }
        }
        let mut bound = vec![false; self.gates.len()];
        let mut depth = vec![0usize; self.gates.len()];
        for g in 0..=root {
            if !reach[g] {
                continue;
            }
            if let Gate::Op(_, kids) = &self.gates[g] {
                let d = 1 + kids
                    .iter()
                    .map(|&c| if bound[c] { 0 } else { depth[c] })
                    .max()
                    .unwrap_or(0);
                depth[g] = d;
                bound[g] = g != root && (uses[g] > 1 || d >= MAX_INLINE);
            }
        }
        let mut names = vec![0usize; self.gates.len()];
        let mut next = 0;
        for g in 0..=root {
            if reach[g] && bound[g] {
                next += 1;
                names[g] = next;
            }
        }
        let mut out = String::new();
        let mut bindings = Vec::new();
        for g in 0..=root {
            if reach[g] && bound[g] {
                let mut s = String::new();
                self.write_inline(g, &bound, &names, &mut s);
                bindings.push(format!("(g{} {})", names[g], s));
            }
        }
        let mut body = String::new();
        self.write_inline(root, &bound, &names, &mut body);
        if bindings.is_empty() {
            out.push_str(&body);
        } else {
            out.push_str("(let (");
            out.push_str(&bindings.join(" "));
            out.push_str(") ");
            out.push_str(&body);
            out.push(')');
        }
        out
    }

    fn write_inline(&self, g: usize, bound: &[bool], names: &[usize], out: &mut String) {
        match &self.gates[g] {
            Gate::Input(i) => out.push_str(&format!("x{}", i + 1)),
            Gate::Op(sym, kids) => {
                if kids.is_empty() {
                    out.push_str(sym);
                    return;
                }
                out.push('(');
                out.push_str(sym);
                for &c in kids {
                    out.push(' ');
                    if bound[c] {
                        out.push_str(&format!("g{}", names[c]));
                    } else {
                        self.write_inline(c, bound, names, out);
                    }
                }
                out.push(')');
            }
        }
    }
}

/// A term together with its number of inputs.
#[derive(Clone, Debug)]
pub struct Circuit {
    arity: usize,
    root: Term,
}

impl Circuit {
    pub fn new(arity: usize, root: Term) -> Result<Circuit> {
        if let Some(m) = root.max_var() {
            if m >= arity {
                return Err(Error::CircuitArity {
                    circuit: arity,
                    supplied: m + 1,
                });
            }
        }
        Ok(Circuit { arity, root })
    }

    /// The projection onto input `i` (0-based).
    pub fn projection(arity: usize, i: usize) -> Circuit {
        assert!(i < arity);
        Circuit {
            arity,
            root: Term::var(i),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn term(&self) -> &Term {
        &self.root
    }

    pub fn into_term(self) -> Term {
        self.root
    }

    /// Number of distinct gates after structural merging.
    pub fn size(&self) -> usize {
        self.gates().gates.len()
    }

    pub fn gates(&self) -> Gates {
        Gates::flatten(self.arity, &[&self.root])
    }

    /// Substitutes `args[i]` for input `i`.
    pub fn compose(&self, args: &[Term]) -> Result<Term> {
        if args.len() != self.arity {
            return Err(Error::CircuitArity {
                circuit: self.arity,
                supplied: args.len(),
            });
        }
        Ok(self.root.substitute(args))
    }

    pub fn eval(&self, alg: &Algebra, args: &[&[Elem]]) -> Result<Vec<Elem>> {
        Ok(self.gates().eval(alg, args)?.pop().expect("one output"))
    }

    pub fn to_sexpr(&self) -> String {
        self.gates().to_sexpr(0)
    }

    /// Parses an s-expression. Without an explicit arity, the largest
    /// variable index is used.
    pub fn parse(src: &str, arity: Option<usize>) -> Result<Circuit> {
        let tokens = tokenize(src);
        let mut p = Parser {
            tokens,
            pos: 0,
            scopes: Vec::new(),
        };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!("trailing input after position {}", p.pos)));
        }
        let arity = match arity {
            Some(a) => a,
            None => root.max_var().map_or(0, |m| m + 1),
        };
        Circuit::new(arity, root)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sexpr())
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
struct CircuitRepr {
    arity: usize,
    sexpr: String,
}

impl serde::Serialize for Circuit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CircuitRepr {
            arity: self.arity,
            sexpr: self.to_sexpr(),
        }
        .serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for Circuit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Circuit, D::Error> {
        let r = CircuitRepr::deserialize(d)?;
        Circuit::parse(&r.sexpr, Some(r.arity)).map_err(serde::de::Error::custom)
    }
}

impl PartialEq for Circuit {
    fn eq(&self, other: &Circuit) -> bool {
        self.arity() == other.arity() && self.to_sexpr() == other.to_sexpr()
    }
}

impl Eq for Circuit {}

/// Evaluates `c` on `args` coordinate-wise.
pub fn eval_circuit(alg: &Algebra, c: &Circuit, args: &[Vec<Elem>]) -> Result<Vec<Elem>> {
    let refs: Vec<&[Elem]> = args.iter().map(|a| a.as_slice()).collect();
    c.eval(alg, &refs)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

fn tokenize(src: &str) -> Vec<Tok> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut Vec<Tok>| {
        if !cur.is_empty() {
            out.push(Tok::Atom(std::mem::take(cur)));
        }
    };
    for ch in src.chars() {
        match ch {
            '(' => {
                flush(&mut cur, &mut out);
                out.push(Tok::Open);
            }
            ')' => {
                flush(&mut cur, &mut out);
                out.push(Tok::Close);
            }
            c if c.is_whitespace() => flush(&mut cur, &mut out),
            c => cur.push(c),
        }
    }
    flush(&mut cur, &mut out);
    out
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
    scopes: Vec<HashMap<String, Term>>,
}

impl Parser {
    fn next(&mut self) -> Result<Tok> {
        let t = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::Parse("unexpected end of input".into()))?;
        self.pos += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn expect_close(&mut self) -> Result<()> {
        match self.next()? {
            Tok::Close => Ok(()),
            t => Err(Error::Parse(format!("expected `)`, found {t:?}"))),
        }
    }

    fn atom(&self, name: &str) -> Term {
        for scope in self.scopes.iter().rev() {
            if let Some(t) = scope.get(name) {
                return t.clone();
            }
        }
        if let Some(i) = parse_var(name) {
            return Term::var(i);
        }
        Term::app(name, Vec::new())
    }

    fn expr(&mut self) -> Result<Term> {
        match self.next()? {
            Tok::Atom(a) => Ok(self.atom(&a)),
            Tok::Close => Err(Error::Parse("unexpected `)`".into())),
            Tok::Open => {
                let head = match self.next()? {
                    Tok::Atom(a) => a,
                    t => return Err(Error::Parse(format!("expected a symbol, found {t:?}"))),
                };
                if head == "let" {
                    return self.let_form();
                }
                let mut args = Vec::new();
                while self.peek() != Some(&Tok::Close) {
                    if self.peek().is_none() {
                        return Err(Error::Parse("unbalanced parentheses".into()));
                    }
                    args.push(self.expr()?);
                }
                self.expect_close()?;
                Ok(Term::app(head, args))
            }
        }
    }

    fn let_form(&mut self) -> Result<Term> {
        if self.next()? != Tok::Open {
            return Err(Error::Parse("`let` expects a binding list".into()));
        }
        self.scopes.push(HashMap::new());
        loop {
            match self.next()? {
                Tok::Close => break,
                Tok::Open => {
                    let name = match self.next()? {
                        Tok::Atom(a) => a,
                        t => return Err(Error::Parse(format!("bad binding name {t:?}"))),
                    };
                    let value = self.expr()?;
                    self.expect_close()?;
                    self.scopes.last_mut().expect("scope").insert(name, value);
                }
                t => return Err(Error::Parse(format!("bad binding {t:?}"))),
            }
        }
        let body = self.expr()?;
        self.expect_close()?;
        self.scopes.pop();
        Ok(body)
    }
}

fn parse_var(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let i: usize = digits.parse().ok()?;
    i.checked_sub(1)
}
