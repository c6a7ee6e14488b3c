//! Compilation to machine expressions: definition linking, binder
//! freshening, the ψ-translation, indirection-chain removal and static
//! garbage collection.

use rustc_hash::FxHashSet;

use thiserror::Error;

use crate::parser::Program;
use crate::prelude::load_prelude;
use crate::syntax::{
    free_vars, free_vars_ordered, visit_binders, Alt, Binding, Expr, Name, NameMap as HashMap, NameSet as HashSet,
    NameSupply,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("unbound variable(s): {}", .0.iter().map(|n| n.as_str()).collect::<Vec<_>>().join(", "))]
    Unbound(Vec<Name>),
}

/// Links `main` with the definitions it transitively uses. User definitions
/// shadow library definitions of the same name. The result is a single
/// `letrec` around `main` (or `main` itself if nothing is used).
pub fn link(program: &Program, library: &[Binding]) -> Result<Expr, CompileError> {
    let mut table: HashMap<&Name, (usize, &Expr)> = HashMap::default();
    for (i, (n, e)) in library.iter().enumerate() {
        table.insert(n, (program.defs.len() + i, e));
    }
    for (i, (n, e)) in program.defs.iter().enumerate() {
        table.insert(n, (i, e));
    }
    let mut used: Vec<(usize, Name)> = Vec::new();
    let mut seen: HashSet<Name> = HashSet::default();
    let mut unbound: Vec<Name> = Vec::new();
    let mut work: Vec<Name> = free_vars_ordered(&program.main);
    while let Some(v) = work.pop() {
        if !seen.insert(v.clone()) {
            continue;
        }
        match table.get(&v) {
            Some(&(idx, rhs)) => {
                used.push((idx, v.clone()));
                work.extend(free_vars_ordered(rhs));
            }
            None => unbound.push(v),
        }
    }
    if !unbound.is_empty() {
        unbound.sort();
        return Err(CompileError::Unbound(unbound));
    }
    if used.is_empty() {
        return Ok(program.main.clone());
    }
    used.sort();
    let binds = used
        .into_iter()
        .map(|(_, n)| {
            let rhs = table[&n].1.clone();
            (n, rhs)
        })
        .collect();
    Ok(Expr::LetRec(binds, Box::new(program.main.clone())))
}

/// Renames binders so that every binder in `e` is distinct and differs from
/// every free variable. Binders that are already unique keep their names.
pub fn freshen(e: &Expr) -> Expr {
    let mut supply = LazySupply { source: e, supply: None };
    let mut seen: HashSet<Name> = free_vars_ordered(e).into_iter().collect();
    let mut scope: HashMap<Name, Name> = HashMap::default();
    freshen_rec(e, &mut supply, &mut seen, &mut scope)
}

/// Name supply built on first use; most inputs never need one.
struct LazySupply<'a> {
    source: &'a Expr,
    supply: Option<NameSupply>,
}

impl LazySupply<'_> {
    fn fresh(&mut self, hint: &str) -> Name {
        let source = self.source;
        self.supply.get_or_insert_with(|| NameSupply::for_expr(source)).fresh(hint)
    }
}

fn bind(
    b: &Name,
    supply: &mut LazySupply,
    seen: &mut HashSet<Name>,
    scope: &mut HashMap<Name, Name>,
    saved: &mut Vec<(Name, Option<Name>)>,
) -> Name {
    let nb = if seen.contains(b) {
        supply.fresh(b.as_str())
    } else {
        b.clone()
    };
    seen.insert(nb.clone());
    saved.push((b.clone(), scope.insert(b.clone(), nb.clone())));
    nb
}

fn restore(scope: &mut HashMap<Name, Name>, saved: Vec<(Name, Option<Name>)>) {
    for (b, old) in saved.into_iter().rev() {
        match old {
            Some(o) => scope.insert(b, o),
            None => scope.remove(&b),
        };
    }
}

fn freshen_rec(
    e: &Expr,
    supply: &mut LazySupply,
    seen: &mut HashSet<Name>,
    scope: &mut HashMap<Name, Name>,
) -> Expr {
    match e {
        Expr::Var(x) => Expr::Var(scope.get(x).cloned().unwrap_or_else(|| x.clone())),
        Expr::Lam(x, body) => {
            let mut saved = Vec::new();
            let nx = bind(x, supply, seen, scope, &mut saved);
            let body = freshen_rec(body, supply, seen, scope);
            restore(scope, saved);
            Expr::Lam(nx, Box::new(body))
        }
        Expr::App(a, b) => Expr::app(
            freshen_rec(a, supply, seen, scope),
            freshen_rec(b, supply, seen, scope),
        ),
        Expr::Seq(a, b) => Expr::seq(
            freshen_rec(a, supply, seen, scope),
            freshen_rec(b, supply, seen, scope),
        ),
        Expr::LetRec(binds, body) => {
            let mut saved = Vec::new();
            let names: Vec<Name> = binds
                .iter()
                .map(|(n, _)| bind(n, supply, seen, scope, &mut saved))
                .collect();
            let rhss: Vec<Expr> = binds
                .iter()
                .map(|(_, r)| freshen_rec(r, supply, seen, scope))
                .collect();
            let body = freshen_rec(body, supply, seen, scope);
            restore(scope, saved);
            Expr::LetRec(names.into_iter().zip(rhss).collect(), Box::new(body))
        }
        Expr::Con(c, args) => Expr::Con(
            c.clone(),
            args.iter().map(|a| freshen_rec(a, supply, seen, scope)).collect(),
        ),
        Expr::Case(k, scrut, alts) => {
            let scrut = freshen_rec(scrut, supply, seen, scope);
            let alts = alts
                .iter()
                .map(|alt| {
                    let mut saved = Vec::new();
                    let binders = alt
                        .binders
                        .iter()
                        .map(|b| bind(b, supply, seen, scope, &mut saved))
                        .collect();
                    let rhs = freshen_rec(&alt.rhs, supply, seen, scope);
                    restore(scope, saved);
                    Alt {
                        con: alt.con.clone(),
                        binders,
                        rhs,
                    }
                })
                .collect();
            Expr::Case(k.clone(), Box::new(scrut), alts)
        }
    }
}

// ---------------------------------------------------------------------------
// ψ-translation

/// Translates `e` into a machine expression, naming arguments with fresh
/// variables that avoid every name in `e`.
pub fn translate_psi(e: &Expr) -> Expr {
    let mut supply = NameSupply::for_expr(e);
    translate_psi_with(e, &mut supply)
}

pub fn translate_psi_with(e: &Expr, supply: &mut NameSupply) -> Expr {
    match e {
        Expr::Var(_) => e.clone(),
        Expr::Lam(x, body) => Expr::Lam(x.clone(), Box::new(translate_psi_with(body, supply))),
        Expr::App(s, t) => {
            let y = supply.fresh("y");
            let arg = translate_psi_with(t, supply);
            let fun = translate_psi_with(s, supply);
            Expr::LetRec(
                vec![(y.clone(), arg)],
                Box::new(Expr::App(Box::new(fun), Box::new(Expr::Var(y)))),
            )
        }
        Expr::Seq(s, t) => {
            let y = supply.fresh("y");
            let second = translate_psi_with(t, supply);
            let first = translate_psi_with(s, supply);
            Expr::LetRec(
                vec![(y.clone(), second)],
                Box::new(Expr::Seq(Box::new(first), Box::new(Expr::Var(y)))),
            )
        }
        Expr::Con(c, args) if args.is_empty() => Expr::Con(c.clone(), Vec::new()),
        Expr::Con(c, args) => {
            let ys: Vec<Name> = args.iter().map(|_| supply.fresh("y")).collect();
            let binds = ys
                .iter()
                .zip(args)
                .map(|(y, a)| (y.clone(), translate_psi_with(a, supply)))
                .collect();
            let con = Expr::Con(c.clone(), ys.into_iter().map(Expr::Var).collect());
            Expr::LetRec(binds, Box::new(con))
        }
        Expr::LetRec(binds, body) => Expr::LetRec(
            binds
                .iter()
                .map(|(n, r)| (n.clone(), translate_psi_with(r, supply)))
                .collect(),
            Box::new(translate_psi_with(body, supply)),
        ),
        Expr::Case(k, scrut, alts) => Expr::Case(
            k.clone(),
            Box::new(translate_psi_with(scrut, supply)),
            alts.iter()
                .map(|a| Alt {
                    con: a.con.clone(),
                    binders: a.binders.clone(),
                    rhs: translate_psi_with(&a.rhs, supply),
                })
                .collect(),
        ),
    }
}

// ---------------------------------------------------------------------------
// Indirection-chain removal

/// Removes variable-to-variable bindings from every `letrec` in `e`.
/// Occurrences of a chain member are replaced by the chain's terminal
/// variable; a cyclic chain collapses to one self-bound representative.
/// Binders are made distinct first (a no-op for compiled expressions).
pub fn remove_indirections(e: &Expr) -> Expr {
    if needs_freshening(e) {
        remove_to_fixpoint(&freshen(e))
    } else {
        remove_to_fixpoint(e)
    }
}

/// Dropping an inner `letrec` can leave a binding whose right-hand side is
/// a variable, which is a new indirection; another pass removes it. Each
/// repeated pass removes at least one binding.
fn remove_to_fixpoint(e: &Expr) -> Expr {
    let pass = |e: &Expr| {
        let mut st = Removal { subst: HashMap::default(), collapsed: false };
        let out = remove_rec(e, &mut st);
        (out, st.collapsed)
    };
    let (mut cur, mut again) = pass(e);
    while again {
        (cur, again) = pass(&cur);
    }
    cur
}

/// True unless every binder is distinct and differs from every free
/// variable.
fn needs_freshening(e: &Expr) -> bool {
    let mut binders: HashSet<&Name> = HashSet::default();
    let mut clash = false;
    visit_binders(e, &mut |n| clash |= !binders.insert(n));
    clash || free_vars_ordered(e).iter().any(|x| binders.contains(x))
}

/// State of one removal pass. Substitution keys and targets borrow from
/// the input.
struct Removal<'a> {
    subst: HashMap<&'a Name, &'a Name>,
    /// Set when a kept binding ended up bound to a variable.
    collapsed: bool,
}

fn resolve<'a>(x: &'a Name, subst: &HashMap<&'a Name, &'a Name>) -> &'a Name {
    subst.get(x).copied().unwrap_or(x)
}

/// Target of one variable binding inside its letrec.
#[derive(Clone, Copy)]
enum Link {
    /// Another variable binding of the same letrec, by position.
    Local(usize),
    /// A name bound elsewhere (or a non-variable binding here).
    Outside,
    /// The binding refers to itself.
    Itself,
}

/// Resolves the variable bindings `vars` (in declaration order) to their
/// chain terminals. Returns, per binding, `None` if it stays bound to
/// itself (a self loop or a cycle representative) and otherwise the name
/// it is replaced by.
fn chain_terminals<'a>(vars: &[(&'a Name, &'a Name)]) -> Vec<Option<&'a Name>> {
    let position: HashMap<&Name, usize> = vars.iter().enumerate().map(|(i, (n, _))| (*n, i)).collect();
    let links: Vec<Link> = vars
        .iter()
        .enumerate()
        .map(|(i, (_, y))| match position.get(*y) {
            Some(&j) if j == i => Link::Itself,
            Some(&j) => Link::Local(j),
            None => Link::Outside,
        })
        .collect();
    drop(position);
    const NEW: u8 = 0;
    const ON_PATH: u8 = 1;
    const DONE: u8 = 2;
    let mut state = vec![NEW; vars.len()];
    let mut result: Vec<Option<&Name>> = vec![None; vars.len()];
    let mut path: Vec<usize> = Vec::new();
    for start in 0..vars.len() {
        let mut cur = start;
        let end: Option<&Name> = loop {
            match state[cur] {
                DONE => break Some(result[cur].unwrap_or(vars[cur].0)),
                ON_PATH => {
                    // cycle from cur: its earliest-declared member represents it
                    let from = path.iter().position(|&i| i == cur).expect("cycle member on path");
                    let rep = *path[from..].iter().min().expect("non-empty cycle");
                    for &m in &path[from..] {
                        state[m] = DONE;
                        result[m] = (m != rep).then_some(vars[rep].0);
                    }
                    path.truncate(from);
                    break Some(vars[rep].0);
                }
                _ => {}
            }
            match links[cur] {
                Link::Local(j) => {
                    state[cur] = ON_PATH;
                    path.push(cur);
                    cur = j;
                }
                Link::Outside => break Some(vars[cur].1),
                Link::Itself => {
                    state[cur] = DONE;
                    break Some(vars[cur].0);
                }
            }
        };
        if state[cur] != DONE {
            state[cur] = DONE;
            result[cur] = end;
        }
        for m in path.drain(..) {
            state[m] = DONE;
            result[m] = end;
        }
    }
    result
}

fn remove_rec<'a>(e: &'a Expr, st: &mut Removal<'a>) -> Expr {
    match e {
        Expr::Var(x) => Expr::Var(*resolve(x, &st.subst)),
        Expr::Lam(x, body) => Expr::Lam(x.clone(), Box::new(remove_rec(body, st))),
        Expr::App(a, b) => Expr::app(remove_rec(a, st), remove_rec(b, st)),
        Expr::Seq(a, b) => Expr::seq(remove_rec(a, st), remove_rec(b, st)),
        Expr::Con(c, args) => Expr::Con(c.clone(), args.iter().map(|a| remove_rec(a, st)).collect()),
        Expr::Case(k, scrut, alts) => {
            let scrut = remove_rec(scrut, st);
            let alts = alts
                .iter()
                .map(|a| Alt {
                    con: a.con.clone(),
                    binders: a.binders.clone(),
                    rhs: remove_rec(&a.rhs, st),
                })
                .collect();
            Expr::Case(k.clone(), Box::new(scrut), alts)
        }
        Expr::LetRec(binds, body) => {
            let vars: Vec<(&Name, &Name)> = binds
                .iter()
                .filter_map(|(n, rhs)| rhs.as_var().map(|y| (n, resolve(y, &st.subst))))
                .collect();
            let terminals = chain_terminals(&vars);
            // bindings left bound to themselves: self loops and cycle representatives
            let mut selfs: HashSet<&Name> = HashSet::default();
            for ((n, _), t) in vars.iter().zip(terminals) {
                match t {
                    Some(t) => {
                        st.subst.insert(n, t);
                    }
                    None => {
                        selfs.insert(n);
                    }
                }
            }
            drop(vars);
            let mut kept: Vec<Binding> = Vec::new();
            for (n, rhs) in binds {
                if selfs.contains(n) {
                    kept.push((n.clone(), Expr::Var(n.clone())));
                } else if !matches!(rhs, Expr::Var(_)) {
                    let rhs = remove_rec(rhs, st);
                    st.collapsed |= matches!(rhs, Expr::Var(_));
                    kept.push((n.clone(), rhs));
                }
            }
            let body = remove_rec(body, st);
            // self-bound names survive only if something refers to them
            if !selfs.is_empty() {
                let mut referenced: HashSet<Name> = free_vars(&body).into_iter().collect();
                for (n, rhs) in &kept {
                    if !selfs.contains(n) {
                        referenced.extend(free_vars(rhs));
                    }
                }
                kept.retain(|(n, _)| !selfs.contains(n) || referenced.contains(n));
            }
            if kept.is_empty() {
                body
            } else {
                Expr::LetRec(kept, Box::new(body))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Static garbage collection

/// Drops top-level `letrec` bindings unreachable from the body, collapsing
/// a fully dead `letrec` to its body, until nothing more can be removed.
pub fn static_gc(e: &Expr) -> Expr {
    let mut cur = e.clone();
    loop {
        match gc_top_letrec(&cur) {
            Some(next) => cur = next,
            None => return cur,
        }
    }
}

/// One maximal-set collection on the top `letrec`; `None` if nothing is dead.
pub(crate) fn gc_top_letrec(e: &Expr) -> Option<Expr> {
    let Expr::LetRec(binds, body) = e else {
        return None;
    };
    let live = reachable_bindings(binds, body);
    if live.len() == binds.len() {
        return None;
    }
    if live.is_empty() {
        return Some((**body).clone());
    }
    let kept = binds
        .iter()
        .enumerate()
        .filter(|(i, _)| live.contains(i))
        .map(|(_, b)| b.clone())
        .collect();
    Some(Expr::LetRec(kept, body.clone()))
}

/// Indices of bindings reachable from the free variables of `body`.
pub(crate) fn reachable_bindings(binds: &[Binding], body: &Expr) -> FxHashSet<usize> {
    let index: HashMap<&Name, usize> = binds.iter().enumerate().map(|(i, (n, _))| (n, i)).collect();
    let mut live = FxHashSet::default();
    let mut work: Vec<Name> = free_vars(body).into_iter().collect();
    while let Some(v) = work.pop() {
        if let Some(&i) = index.get(&v) {
            if live.insert(i) {
                work.extend(free_vars(&binds[i].1));
            }
        }
    }
    live
}

// ---------------------------------------------------------------------------
// Pipeline

/// Links, freshens and translates a program, then removes indirections and
/// static garbage. The result is a closed machine expression.
pub fn compile_program(program: &Program) -> Result<Expr, CompileError> {
    compile_with_library(program, load_prelude())
}

pub fn compile_with_library(program: &Program, library: &[Binding]) -> Result<Expr, CompileError> {
    let linked = link(program, library)?;
    Ok(compile_expr(&linked))
}

/// Pipeline for an already closed expression.
pub fn compile_expr(e: &Expr) -> Expr {
    let fresh = freshen(e);
    let psi = translate_psi(&fresh);
    let direct = remove_to_fixpoint(&psi);
    static_gc(&direct)
}
