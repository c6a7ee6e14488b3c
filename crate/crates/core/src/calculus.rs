//! Small-step normal-order reducer for LRP and its eager-gc variant. It is
//! the reference semantics against which the machine measures are checked.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::compile::reachable_bindings;
use crate::syntax::{
    alts_free_vars, alts_size, free_vars, rename_var, rename_vars, size, Binding, Expr, Name, NameSupply,
};

/// Reduction strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Plain normal-order reduction.
    Lrp,
    /// Normal order with top-level garbage collection taking priority.
    Lrpgc,
}

/// Calculus rule names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CalcRule {
    Lbeta,
    CpIn,
    CpE,
    LletIn,
    LletE,
    Lapp,
    Lcase,
    Lseq,
    SeqC,
    SeqIn,
    SeqE,
    CaseC,
    CaseIn,
    CaseE,
    Gc1,
    Gc2,
}

impl CalcRule {
    pub fn as_str(self) -> &'static str {
        match self {
            CalcRule::Lbeta => "lbeta",
            CalcRule::CpIn => "cp-in",
            CalcRule::CpE => "cp-e",
            CalcRule::LletIn => "llet-in",
            CalcRule::LletE => "llet-e",
            CalcRule::Lapp => "lapp",
            CalcRule::Lcase => "lcase",
            CalcRule::Lseq => "lseq",
            CalcRule::SeqC => "seq-c",
            CalcRule::SeqIn => "seq-in",
            CalcRule::SeqE => "seq-e",
            CalcRule::CaseC => "case-c",
            CalcRule::CaseIn => "case-in",
            CalcRule::CaseE => "case-e",
            CalcRule::Gc1 => "gc1",
            CalcRule::Gc2 => "gc2",
        }
    }

    /// Counted by `rln`: lbeta, case and seq steps.
    pub fn is_essential(self) -> bool {
        matches!(
            self,
            CalcRule::Lbeta
                | CalcRule::SeqC
                | CalcRule::SeqIn
                | CalcRule::SeqE
                | CalcRule::CaseC
                | CalcRule::CaseIn
                | CalcRule::CaseE
        )
    }

    pub fn is_gc(self) -> bool {
        matches!(self, CalcRule::Gc1 | CalcRule::Gc2)
    }
}

impl fmt::Display for CalcRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a search segment starts: the whole expression when it is not a
/// `letrec`, otherwise the body or one binding of the top `letrec`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Location {
    Root,
    Body,
    Binding(usize),
}

/// A position reached from a location by descending `depth` times into the
/// function of an application, the first argument of `seq` or the
/// scrutinee of `case`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Focus {
    pub loc: Location,
    pub depth: usize,
}

impl Focus {
    fn new(loc: Location, depth: usize) -> Self {
        Focus { loc, depth }
    }

    fn parent(self) -> Focus {
        Focus::new(self.loc, self.depth - 1)
    }
}

/// A normal-order redex. For the chain rules (cp, seq-in/e, case-in/e) the
/// focus is the demanded variable occurrence and `chain` lists the visited
/// binders from that variable back to the value binding. For every other
/// rule the focus is the redex node itself and `chain` is empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RedexInfo {
    pub rule: CalcRule,
    pub focus: Focus,
    pub chain: Vec<Name>,
}

/// Result of the redex search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Search {
    Redex(RedexInfo),
    Whnf,
    /// The search revisited a binding: the expression is a black hole.
    Cycle(Name),
    /// Open or ill-formed term.
    Stuck(String),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Demand {
    None,
    App,
    Seq,
    Case,
}

fn top_parts(e: &Expr) -> (&[Binding], &Expr, Location) {
    match e {
        Expr::LetRec(binds, body) => (binds, body, Location::Body),
        _ => (&[], e, Location::Root),
    }
}

fn at_location(e: &Expr, loc: Location) -> &Expr {
    match (e, loc) {
        (Expr::LetRec(_, body), Location::Body) => body,
        (Expr::LetRec(binds, _), Location::Binding(i)) => &binds[i].1,
        _ => e,
    }
}

fn head(e: &Expr) -> Option<&Expr> {
    match e {
        Expr::App(f, _) | Expr::Seq(f, _) | Expr::Case(_, f, _) => Some(f),
        _ => None,
    }
}

fn head_mut(e: &mut Expr) -> Option<&mut Expr> {
    match e {
        Expr::App(f, _) | Expr::Seq(f, _) | Expr::Case(_, f, _) => Some(f),
        _ => None,
    }
}

fn demand_of(e: &Expr) -> Demand {
    match e {
        Expr::App(..) => Demand::App,
        Expr::Seq(..) => Demand::Seq,
        Expr::Case(..) => Demand::Case,
        _ => Demand::None,
    }
}

fn node_mut(e: &mut Expr, focus: Focus) -> &mut Expr {
    let mut cur = match (e, focus.loc) {
        (Expr::LetRec(_, body), Location::Body) => &mut **body,
        (Expr::LetRec(binds, _), Location::Binding(i)) => &mut binds[i].1,
        (e, _) => e,
    };
    for _ in 0..focus.depth {
        cur = head_mut(cur).expect("focus follows the head path");
    }
    cur
}

fn redex(rule: CalcRule, focus: Focus) -> Search {
    Search::Redex(RedexInfo { rule, focus, chain: Vec::new() })
}

fn alt_matches(tycon_alts: &[crate::syntax::Alt], con: &Name) -> bool {
    tycon_alts.iter().any(|a| &a.con == con)
}

type Index = HashMap<Name, usize>;

fn build_index(e: &Expr) -> Index {
    let (binds, _, _) = top_parts(e);
    binds.iter().enumerate().map(|(i, (n, _))| (n.clone(), i)).collect()
}

/// Locates the unique normal-order redex of a closed expression.
pub fn find_redex(e: &Expr) -> Search {
    search(e, &build_index(e))
}

fn search(e: &Expr, index: &Index) -> Search {
    let (binds, _, top) = top_parts(e);
    let mut visited: HashSet<usize> = HashSet::new();
    let mut loc = top;
    loop {
        let mut cur = at_location(e, loc);
        let mut depth = 0;
        let mut demand = Demand::None;
        // descend along the head path
        loop {
            match head(cur) {
                Some(h) => match h {
                    Expr::LetRec(..) => {
                        let rule = match cur {
                            Expr::App(..) => CalcRule::Lapp,
                            Expr::Seq(..) => CalcRule::Lseq,
                            _ => CalcRule::Lcase,
                        };
                        return redex(rule, Focus::new(loc, depth));
                    }
                    Expr::Lam(..) => {
                        return match cur {
                            Expr::App(..) => redex(CalcRule::Lbeta, Focus::new(loc, depth)),
                            Expr::Seq(..) => redex(CalcRule::SeqC, Focus::new(loc, depth)),
                            _ => Search::Stuck(format!("case of an abstraction: {cur}")),
                        };
                    }
                    Expr::Con(c, _) => {
                        return match cur {
                            Expr::Seq(..) => redex(CalcRule::SeqC, Focus::new(loc, depth)),
                            Expr::Case(_, _, alts) if alt_matches(alts, c) => {
                                redex(CalcRule::CaseC, Focus::new(loc, depth))
                            }
                            _ => Search::Stuck(format!("constructor in head position: {cur}")),
                        };
                    }
                    _ => {
                        demand = demand_of(cur);
                        cur = h;
                        depth += 1;
                    }
                },
                None => break,
            }
        }
        let focus = Focus::new(loc, depth);
        let x = match cur {
            Expr::Var(x) => x,
            Expr::Lam(..) | Expr::Con(..) => {
                return match loc {
                    Location::Root | Location::Body => Search::Whnf,
                    Location::Binding(_) => Search::Stuck("value reached in a binding".into()),
                };
            }
            Expr::LetRec(..) => {
                return match loc {
                    Location::Body => redex(CalcRule::LletIn, focus),
                    _ => Search::Stuck("nested letrec outside reduction position".into()),
                };
            }
            _ => unreachable!("head path ends at a non-head node"),
        };
        // follow the variable chain
        let mut chain = vec![x.clone()];
        let mut name = x;
        let target = loop {
            let Some(&i) = index.get(name) else {
                return Search::Stuck(format!("free variable {name}"));
            };
            if !visited.insert(i) {
                return Search::Cycle(name.clone());
            }
            match &binds[i].1 {
                Expr::Var(y) => {
                    chain.push(y.clone());
                    name = y;
                }
                _ => break i,
            }
        };
        let in_body = !matches!(loc, Location::Binding(_));
        let pick = |inner, outer| if in_body { inner } else { outer };
        let chained = |rule| Search::Redex(RedexInfo { rule, focus, chain: chain.clone() });
        match &binds[target].1 {
            Expr::Lam(..) => {
                return match demand {
                    Demand::None | Demand::App => chained(pick(CalcRule::CpIn, CalcRule::CpE)),
                    Demand::Seq => chained(pick(CalcRule::SeqIn, CalcRule::SeqE)),
                    Demand::Case => Search::Stuck(format!("case of an abstraction bound to {name}")),
                };
            }
            Expr::Con(c, _) => {
                return match demand {
                    Demand::None => Search::Whnf,
                    Demand::Seq => chained(pick(CalcRule::SeqIn, CalcRule::SeqE)),
                    Demand::Case => {
                        let parent = node_ref(e, focus.parent());
                        match parent {
                            Expr::Case(_, _, alts) if alt_matches(alts, c) => {
                                chained(pick(CalcRule::CaseIn, CalcRule::CaseE))
                            }
                            _ => Search::Stuck(format!("constructor {c} does not match {parent}")),
                        }
                    }
                    Demand::App => Search::Stuck(format!("constructor {c} applied")),
                };
            }
            Expr::LetRec(..) => {
                return redex(CalcRule::LletE, Focus::new(Location::Binding(target), 0));
            }
            _ => loc = Location::Binding(target),
        }
    }
}

fn node_ref(e: &Expr, focus: Focus) -> &Expr {
    let mut cur = at_location(e, focus.loc);
    for _ in 0..focus.depth {
        cur = head(cur).expect("focus follows the head path");
    }
    cur
}

/// Renames the binders of a `letrec` node for which `clash` holds.
fn rename_letrec_binders(e: &mut Expr, clash: &dyn Fn(&Name) -> bool, supply: &mut NameSupply) {
    let Expr::LetRec(binds, body) = e else { return };
    let map: HashMap<Name, Name> = binds
        .iter()
        .filter(|(n, _)| clash(n))
        .map(|(n, _)| (n.clone(), supply.fresh(n.as_str())))
        .collect();
    if map.is_empty() {
        return;
    }
    for (n, rhs) in binds.iter_mut() {
        if let Some(m) = map.get(n) {
            *n = m.clone();
        }
        rename_vars(rhs, &map, supply);
    }
    rename_vars(body, &map, supply);
}

fn take(e: &mut Expr) -> Expr {
    std::mem::replace(e, Expr::Con(Name::new("<hole>"), Vec::new()))
}

/// Applies a redex found by [`find_redex`] and returns the change in
/// expression size. Fresh names come from `supply`, which must already avoid
/// every name of `e`.
pub fn apply_rule(e: &mut Expr, r: &RedexInfo, supply: &mut NameSupply) -> isize {
    let index = build_index(e);
    apply_indexed(e, r, supply, &index)
}

fn apply_indexed(e: &mut Expr, r: &RedexInfo, supply: &mut NameSupply, index: &Index) -> isize {
    let top = |n: &Name| index.contains_key(n);
    match r.rule {
        CalcRule::Lbeta => {
            let node = node_mut(e, r.focus);
            let Expr::App(f, arg) = take(node) else { panic!("lbeta on a non-application") };
            let Expr::Lam(mut x, mut s) = *f else { panic!("lbeta without an abstraction") };
            if free_vars(&arg).contains(&x) {
                let y = supply.fresh(x.as_str());
                rename_var(&mut s, &x, &y, supply);
                x = y;
            }
            *node = Expr::LetRec(vec![(x, *arg)], s);
            -2
        }
        CalcRule::Lapp | CalcRule::Lseq | CalcRule::Lcase => {
            let node = node_mut(e, r.focus);
            let outside: HashSet<Name> = match &*node {
                Expr::App(_, a) | Expr::Seq(_, a) => free_vars(a).into_iter().collect(),
                Expr::Case(_, _, alts) => alts_free_vars(alts).into_iter().collect(),
                _ => panic!("{} on a wrong node", r.rule),
            };
            let mut whole = take(node);
            let slot = head_mut(&mut whole).expect("head");
            rename_letrec_binders(slot, &|n| outside.contains(n), supply);
            let Expr::LetRec(env, t) = take(slot) else { panic!("{} without a letrec", r.rule) };
            *slot = *t;
            *node = Expr::LetRec(env, Box::new(whole));
            0
        }
        CalcRule::LletIn => {
            let Expr::LetRec(binds, body) = e else { panic!("llet-in without a top letrec") };
            rename_letrec_binders(body, &top, supply);
            let Expr::LetRec(inner, r2) = take(body) else { panic!("llet-in without an inner letrec") };
            binds.extend(inner);
            **body = *r2;
            0
        }
        CalcRule::LletE => {
            let Location::Binding(i) = r.focus.loc else { panic!("llet-e outside a binding") };
            let Expr::LetRec(binds, _) = e else { panic!("llet-e without a top letrec") };
            rename_letrec_binders(&mut binds[i].1, &top, supply);
            let Expr::LetRec(inner, t) = take(&mut binds[i].1) else { panic!("llet-e without an inner letrec") };
            binds[i].1 = *t;
            binds.extend(inner);
            0
        }
        CalcRule::CpIn | CalcRule::CpE => {
            let v = chain_value(e, &r.chain, index).clone();
            let grow = size(&v) as isize;
            *node_mut(e, r.focus) = v;
            grow
        }
        CalcRule::SeqC => {
            let node = node_mut(e, r.focus);
            let Expr::Seq(v, t) = take(node) else { panic!("seq-c on a non-seq") };
            *node = *t;
            -1 - size(&v) as isize
        }
        CalcRule::SeqIn | CalcRule::SeqE => {
            let node = node_mut(e, r.focus.parent());
            let Expr::Seq(_, t) = take(node) else { panic!("seq-in on a non-seq") };
            *node = *t;
            -1
        }
        CalcRule::CaseC => {
            let node = node_mut(e, r.focus);
            let Expr::Case(_, scrut, alts) = take(node) else { panic!("case-c on a non-case") };
            let Expr::Con(c, args) = *scrut else { panic!("case-c without a constructor") };
            let dropped = 2 + alts_size(&alts) as isize;
            let alt = alts.into_iter().find(|a| a.con == c).expect("matching alternative");
            let kept = size(&alt.rhs) as isize;
            if args.is_empty() {
                *node = alt.rhs;
            } else {
                let arg_fv: HashSet<Name> = args.iter().flat_map(free_vars).collect();
                let mut bound = Expr::LetRec(alt.binders.into_iter().zip(args).collect(), Box::new(alt.rhs));
                rename_letrec_binders(&mut bound, &|n| arg_fv.contains(n), supply);
                *node = bound;
            }
            kept - dropped
        }
        CalcRule::CaseIn | CalcRule::CaseE => {
            let x1 = r.chain.last().expect("non-empty chain").clone();
            let Expr::LetRec(binds, _) = &mut *e else { panic!("case-in without a top letrec") };
            let i = index[&x1];
            let (c, fields) = match &mut binds[i].1 {
                Expr::Con(c, args) => {
                    let c = c.clone();
                    let mut fresh = Vec::with_capacity(args.len());
                    for a in args.iter_mut() {
                        let y = supply.fresh("y");
                        fresh.push((y.clone(), std::mem::replace(a, Expr::Var(y))));
                    }
                    (c, fresh)
                }
                _ => panic!("case-in without a constructor binding"),
            };
            let ys: Vec<Name> = fields.iter().map(|(y, _)| y.clone()).collect();
            binds.extend(fields);
            let node = node_mut(e, r.focus.parent());
            let Expr::Case(_, _, alts) = take(node) else { panic!("case-in on a non-case") };
            let dropped = 1 + alts_size(&alts) as isize;
            let alt = alts.into_iter().find(|a| a.con == c).expect("matching alternative");
            let kept = size(&alt.rhs) as isize;
            *node = if ys.is_empty() {
                alt.rhs
            } else {
                let env = alt.binders.into_iter().zip(ys.into_iter().map(Expr::Var)).collect();
                Expr::LetRec(env, Box::new(alt.rhs))
            };
            kept - dropped
        }
        CalcRule::Gc1 | CalcRule::Gc2 => gc_top_sized(e).map_or(0, |(_, removed)| -(removed as isize)),
    }
}

fn chain_value<'a>(e: &'a Expr, chain: &[Name], index: &Index) -> &'a Expr {
    let x1 = chain.last().expect("non-empty chain");
    match e {
        Expr::LetRec(binds, _) => &binds[index[x1]].1,
        _ => panic!("chain rule without a top letrec"),
    }
}

/// Removes the maximal set of dead bindings of the top `letrec`. Returns the
/// rule applied, or `None` when nothing is garbage.
pub fn gc_top(e: &mut Expr) -> Option<CalcRule> {
    gc_top_sized(e).map(|(rule, _)| rule)
}

fn gc_top_sized(e: &mut Expr) -> Option<(CalcRule, usize)> {
    let Expr::LetRec(binds, body) = e else { return None };
    let live = reachable_bindings(binds, body);
    if live.is_empty() {
        let removed = binds.iter().map(|(_, r)| size(r)).sum();
        *e = take(body);
        Some((CalcRule::Gc2, removed))
    } else if live.len() < binds.len() {
        let mut removed = 0;
        let mut i = 0;
        binds.retain(|(_, r)| {
            let keep = live.contains(&i);
            if !keep {
                removed += size(r);
            }
            i += 1;
            keep
        });
        Some((CalcRule::Gc1, removed))
    } else {
        None
    }
}

/// Reference source standing for the body of the top `letrec`.
const BODY: usize = usize::MAX;

/// Incremental liveness of the top bindings for eager collection.
///
/// After a collection finds nothing, every binding is reachable. A later
/// step can only make something unreachable by dropping a reference or by
/// adding a binding, so only the targets of dropped references and the new
/// bindings need to be checked, by searching backwards for the body.
struct GcTracker {
    fvs: Vec<Vec<Name>>,
    body_fvs: Vec<Name>,
    /// Sources (binding positions or `BODY`) referring to each binding.
    refs: Vec<HashSet<usize>>,
    candidates: Vec<usize>,
    /// Set when nothing is known and the next check must be complete.
    full: bool,
}

fn sorted_fvs(e: &Expr) -> Vec<Name> {
    free_vars(e).into_iter().collect()
}

impl GcTracker {
    fn new(e: &Expr, index: &Index) -> Self {
        let (binds, body, _) = top_parts(e);
        let mut t = GcTracker {
            fvs: binds.iter().map(|(_, r)| sorted_fvs(r)).collect(),
            body_fvs: if binds.is_empty() { Vec::new() } else { sorted_fvs(body) },
            refs: vec![HashSet::new(); binds.len()],
            candidates: Vec::new(),
            full: true,
        };
        for (src, fvs) in t.fvs.iter().enumerate().chain(std::iter::once((BODY, &t.body_fvs))) {
            for v in fvs {
                if let Some(&j) = index.get(v) {
                    t.refs[j].insert(src);
                }
            }
        }
        t
    }

    /// Records a step that rewrote the bindings in `touched` (and the body
    /// when `body_touched`) and possibly appended new bindings.
    fn update(&mut self, e: &Expr, index: &Index, touched: &[usize], body_touched: bool) {
        let (binds, body, _) = top_parts(e);
        let old_len = self.fvs.len();
        self.refs.resize_with(binds.len(), HashSet::new);
        for (j, (_, r)) in binds.iter().enumerate().skip(old_len) {
            self.fvs.push(Vec::new());
            self.candidates.push(j);
            self.replace(j, sorted_fvs(r), index);
        }
        for &i in touched {
            self.replace(i, sorted_fvs(&binds[i].1), index);
        }
        if body_touched {
            self.replace(BODY, sorted_fvs(body), index);
        }
    }

    fn replace(&mut self, src: usize, new: Vec<Name>, index: &Index) {
        let old = if src == BODY { &mut self.body_fvs } else { &mut self.fvs[src] };
        let old = std::mem::replace(old, new);
        let new = if src == BODY { &self.body_fvs } else { &self.fvs[src] };
        let (mut a, mut b) = (old.iter().peekable(), new.iter().peekable());
        loop {
            let ord = match (a.peek(), b.peek()) {
                (None, None) => break,
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (Some(x), Some(y)) => x.cmp(y),
            };
            match ord {
                Ordering::Less => {
                    let v = a.next().expect("peeked");
                    if let Some(&j) = index.get(v) {
                        self.refs[j].remove(&src);
                        self.candidates.push(j);
                    }
                }
                Ordering::Greater => {
                    let v = b.next().expect("peeked");
                    if let Some(&j) = index.get(v) {
                        self.refs[j].insert(src);
                    }
                }
                Ordering::Equal => {
                    a.next();
                    b.next();
                }
            }
        }
    }

    /// Backward search from binding `t` for the body.
    fn reaches_body(&self, t: usize) -> bool {
        let mut seen = HashSet::new();
        let mut work = vec![t];
        seen.insert(t);
        while let Some(j) = work.pop() {
            for &src in &self.refs[j] {
                if src == BODY {
                    return true;
                }
                if seen.insert(src) {
                    work.push(src);
                }
            }
        }
        false
    }

    /// Collects the maximal dead set of the top `letrec`, if any. After a
    /// collection the caller rebuilds the index and the tracker.
    fn collect(&mut self, e: &mut Expr, index: &Index) -> Option<(CalcRule, usize)> {
        #[cfg(test)]
        {
            let fresh = GcTracker::new(e, index);
            assert_eq!(self.fvs, fresh.fvs, "stale free-variable cache");
            assert_eq!(self.refs, fresh.refs, "stale reference sets");
            assert_eq!(index, &build_index(e), "stale binder index");
        }
        if !self.full {
            let candidates = std::mem::take(&mut self.candidates);
            if candidates.iter().all(|&t| self.reaches_body(t)) {
                #[cfg(test)]
                assert!(gc_top_sized(&mut e.clone()).is_none(), "missed garbage");
                return None;
            }
        }
        let result = self.collect_all(e, index);
        self.full = false;
        self.candidates.clear();
        result
    }

    fn collect_all(&self, e: &mut Expr, index: &Index) -> Option<(CalcRule, usize)> {
        let Expr::LetRec(binds, _) = e else { return None };
        let mut live = vec![false; binds.len()];
        let mut count = 0;
        let mut work: Vec<usize> = self.body_fvs.iter().filter_map(|v| index.get(v).copied()).collect();
        while let Some(i) = work.pop() {
            if !live[i] {
                live[i] = true;
                count += 1;
                work.extend(self.fvs[i].iter().filter_map(|v| index.get(v).copied()));
            }
        }
        if count == binds.len() {
            return None;
        }
        let removed = binds.iter().zip(&live).filter(|(_, l)| !**l).map(|((_, r), _)| size(r)).sum();
        if count == 0 {
            let Expr::LetRec(_, body) = e else { unreachable!() };
            *e = take(body);
            return Some((CalcRule::Gc2, removed));
        }
        let Expr::LetRec(binds, _) = e else { unreachable!() };
        let mut i = 0;
        binds.retain(|_| {
            i += 1;
            live[i - 1]
        });
        Some((CalcRule::Gc1, removed))
    }
}

/// Final classification of an evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleOutcome {
    Whnf(Expr),
    StepLimit,
    /// Detected divergence: the redex search ran into a binding cycle.
    Blackhole(Name),
    Stuck(String),
}

impl OracleOutcome {
    pub fn converged(&self) -> bool {
        matches!(self, OracleOutcome::Whnf(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            OracleOutcome::Whnf(_) => "whnf",
            OracleOutcome::StepLimit => "step-limit",
            OracleOutcome::Blackhole(_) => "blackhole",
            OracleOutcome::Stuck(_) => "stuck",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub outcome: OracleOutcome,
    pub rln: u64,
    pub rlnall: u64,
    pub spmax: usize,
    pub gc_steps: u64,
    pub trace: Option<Vec<(CalcRule, usize)>>,
}

/// Evaluates a closed expression to WHNF, measuring reduction lengths and
/// the maximal expression size along the way. `max_steps` bounds all steps,
/// gc steps included.
pub fn evaluate(e: &Expr, strat: Strategy, max_steps: u64) -> OracleResult {
    evaluate_with(e, strat, max_steps, false)
}

pub fn evaluate_traced(e: &Expr, strat: Strategy, max_steps: u64) -> OracleResult {
    evaluate_with(e, strat, max_steps, true)
}

fn evaluate_with(e: &Expr, strat: Strategy, max_steps: u64, record: bool) -> OracleResult {
    let mut cur = e.clone();
    let mut supply = NameSupply::for_expr(&cur);
    let mut index = build_index(&cur);
    let mut cache = (strat == Strategy::Lrpgc).then(|| GcTracker::new(&cur, &index));
    let mut cur_size = size(&cur) as isize;
    let mut res = OracleResult {
        outcome: OracleOutcome::StepLimit,
        rln: 0,
        rlnall: 0,
        spmax: cur_size as usize,
        gc_steps: 0,
        trace: record.then(Vec::new),
    };
    let mut steps = 0u64;
    let note = |res: &mut OracleResult, rule: CalcRule, cur: &Expr, s: isize| {
        #[cfg(test)]
        assert_eq!(size(cur) as isize, s, "size bookkeeping after {rule}");
        let _ = cur;
        res.spmax = res.spmax.max(s as usize);
        if let Some(t) = &mut res.trace {
            t.push((rule, s as usize));
        }
    };
    loop {
        if steps >= max_steps {
            res.outcome = OracleOutcome::StepLimit;
            return res;
        }
        if let Some(cache) = &mut cache {
            if let Some((rule, removed)) = cache.collect(&mut cur, &index) {
                steps += 1;
                res.gc_steps += 1;
                cur_size -= removed as isize;
                index = build_index(&cur);
                *cache = GcTracker::new(&cur, &index);
                note(&mut res, rule, &cur, cur_size);
                continue;
            }
        }
        match search(&cur, &index) {
            Search::Whnf => {
                res.outcome = OracleOutcome::Whnf(cur);
                return res;
            }
            Search::Cycle(x) => {
                res.outcome = OracleOutcome::Blackhole(x);
                return res;
            }
            Search::Stuck(msg) => {
                res.outcome = OracleOutcome::Stuck(msg);
                return res;
            }
            Search::Redex(r) => {
                let before = top_parts(&cur).0.len();
                let x1 = match r.rule {
                    CalcRule::CaseIn | CalcRule::CaseE => Some(index[r.chain.last().expect("chain")]),
                    _ => None,
                };
                cur_size += apply_indexed(&mut cur, &r, &mut supply, &index);
                if r.focus.loc == Location::Root {
                    index = build_index(&cur);
                    if let Some(cache) = &mut cache {
                        *cache = GcTracker::new(&cur, &index);
                    }
                } else {
                    if let Expr::LetRec(binds, _) = &cur {
                        for (i, (n, _)) in binds.iter().enumerate().skip(before) {
                            index.insert(n.clone(), i);
                        }
                    }
                    if let Some(cache) = &mut cache {
                        let mut touched: Vec<usize> = x1.into_iter().collect();
                        if let Location::Binding(i) = r.focus.loc {
                            touched.push(i);
                        }
                        cache.update(&cur, &index, &touched, r.focus.loc == Location::Body);
                    }
                }
                steps += 1;
                res.rlnall += 1;
                if r.rule.is_essential() {
                    res.rln += 1;
                }
                note(&mut res, r.rule, &cur, cur_size);
            }
        }
    }
}

/// Measures of one side of a comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SideMeasures {
    pub converged: bool,
    pub rln: u64,
    pub rlnall: u64,
    pub spmax: usize,
}

/// Empty-context comparison of two closed expressions under the eager-gc
/// strategy. Orderings compare the left against the right expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComparisonReport {
    pub left: SideMeasures,
    pub right: SideMeasures,
    pub rln: Ordering,
    pub rlnall: Ordering,
    pub spmax: Ordering,
    /// Either side hit the step limit.
    pub inconclusive: bool,
}

impl ComparisonReport {
    pub fn all_equal(&self) -> bool {
        self.left == self.right
    }
}

pub fn compare_empty_context(e1: &Expr, e2: &Expr, max_steps: u64) -> ComparisonReport {
    let side = |e: &Expr| {
        let r = evaluate(e, Strategy::Lrpgc, max_steps);
        let m = SideMeasures {
            converged: r.outcome.converged(),
            rln: r.rln,
            rlnall: r.rlnall,
            spmax: r.spmax,
        };
        (m, r.outcome == OracleOutcome::StepLimit)
    };
    let (left, lim1) = side(e1);
    let (right, lim2) = side(e2);
    ComparisonReport {
        rln: left.rln.cmp(&right.rln),
        rlnall: left.rlnall.cmp(&right.rlnall),
        spmax: left.spmax.cmp(&right.spmax),
        left,
        right,
        inconclusive: lim1 || lim2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::translate_psi;
    use crate::parser::parse_expr;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    fn rule_of(s: &str) -> CalcRule {
        match find_redex(&p(s)) {
            Search::Redex(r) => r.rule,
            other => panic!("no redex in {s}: {other:?}"),
        }
    }

    #[test]
    fn lbeta_at_root() {
        match find_redex(&p("(\\x.x) True")) {
            Search::Redex(r) => {
                assert_eq!(r.rule, CalcRule::Lbeta);
                assert_eq!(r.focus, Focus::new(Location::Root, 0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn copy_through_chain() {
        match find_redex(&p("letrec x1 = \\y.y; x2 = x1 in x2")) {
            Search::Redex(r) => {
                assert_eq!(r.rule, CalcRule::CpIn);
                assert_eq!(r.chain, vec![Name::new("x2"), Name::new("x1")]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn values_are_whnf() {
        assert_eq!(find_redex(&p("\\x.x")), Search::Whnf);
        assert_eq!(find_redex(&p("letrec x = True; y = x in y")), Search::Whnf);
        assert_eq!(find_redex(&p("letrec x = True in \\z.z")), Search::Whnf);
    }

    #[test]
    fn rule_selection() {
        assert_eq!(rule_of("seq True (\\x.x)"), CalcRule::SeqC);
        assert_eq!(rule_of("case True of { True -> False; False -> True }"), CalcRule::CaseC);
        assert_eq!(rule_of("(letrec x = True in \\y.y) False"), CalcRule::Lapp);
        assert_eq!(rule_of("seq (letrec x = True in x) False"), CalcRule::Lseq);
        assert_eq!(
            rule_of("case (letrec x = True in x) of { True -> False; False -> True }"),
            CalcRule::Lcase
        );
        assert_eq!(rule_of("letrec x = True in letrec y = x in y"), CalcRule::LletIn);
        assert_eq!(rule_of("letrec x = (letrec z = True in z) in x"), CalcRule::LletE);
        assert_eq!(rule_of("letrec x = True in seq x x"), CalcRule::SeqIn);
        assert_eq!(rule_of("letrec x = True; y = seq x x in y"), CalcRule::SeqE);
        assert_eq!(
            rule_of("letrec x = True in case x of { True -> False; False -> True }"),
            CalcRule::CaseIn
        );
        assert_eq!(
            rule_of("letrec x = True; y = case x of { True -> False; False -> True } in y"),
            CalcRule::CaseE
        );
        assert_eq!(rule_of("letrec f = \\z.z; y = f True in y"), CalcRule::CpE);
    }

    #[test]
    fn lbeta_builds_letrec() {
        let mut e = p("(\\x.x) True");
        let Search::Redex(r) = find_redex(&e) else { panic!() };
        let mut supply = NameSupply::for_expr(&e);
        apply_rule(&mut e, &r, &mut supply);
        assert_eq!(e, p("letrec x = True in x"));
    }

    #[test]
    fn case_in_introduces_fresh_fields() {
        let mut e = p("letrec x = Cons True Nil in case x of { [] -> False; (a:as) -> a }");
        let Search::Redex(r) = find_redex(&e) else { panic!() };
        assert_eq!(r.rule, CalcRule::CaseIn);
        let mut supply = NameSupply::for_expr(&e);
        apply_rule(&mut e, &r, &mut supply);
        let expected = p("letrec x = Cons y y1; y = True; y1 = Nil in letrec a = y; as = y1 in a");
        assert_eq!(e, expected);
    }

    #[test]
    fn gc_examples() {
        let mut e = p("letrec x = True; z = False in x");
        assert_eq!(gc_top(&mut e), Some(CalcRule::Gc1));
        assert_eq!(e, p("letrec x = True in x"));
        let mut e = p("letrec x = True in False");
        assert_eq!(gc_top(&mut e), Some(CalcRule::Gc2));
        assert_eq!(e, p("False"));
        assert_eq!(gc_top(&mut p("\\x.x")), None);
    }

    #[test]
    fn space_counterexample_pair() {
        // a = \y.\z.y has size 2
        let a = p("\\y.\\z.y");
        let mut e = p("(seq True (\\x.hole)) True");
        substitute_placeholder(&mut e, &a);
        assert_eq!(evaluate(&e, Strategy::Lrpgc, 100).spmax, 7);
        let psi = translate_psi(&e);
        assert_eq!(evaluate(&psi, Strategy::Lrpgc, 100).spmax, 8);
    }

    fn substitute_placeholder(e: &mut Expr, by: &Expr) {
        match e {
            Expr::Var(x) if x.as_str() == "hole" => *e = by.clone(),
            Expr::Lam(_, b) => substitute_placeholder(b, by),
            Expr::App(f, a) | Expr::Seq(f, a) => {
                substitute_placeholder(f, by);
                substitute_placeholder(a, by);
            }
            _ => {}
        }
    }

    #[test]
    fn identity_program_counts() {
        let e = p("letrec x = \\y.y in x x");
        let r = evaluate(&e, Strategy::Lrpgc, 100);
        assert!(r.outcome.converged());
        assert_eq!(r.rln, 1);
    }

    #[test]
    fn black_hole_diverges() {
        let r = evaluate(&p("letrec x = x in x"), Strategy::Lrpgc, 100);
        assert!(!r.outcome.converged());
        assert_eq!(r.outcome.label(), "blackhole");
    }

    #[test]
    fn comparison_of_equal_expressions() {
        let e = p("(\\x.x) True");
        assert!(compare_empty_context(&e, &e, 100).all_equal());
        let rep = compare_empty_context(&p("(\\x.True) (letrec b = b in b)"), &p("True"), 100);
        assert!(rep.left.converged && rep.right.converged);
        assert_eq!(rep.rln, Ordering::Greater);
    }

    #[test]
    fn size_bookkeeping_matches_recount() {
        for e in crate::corpus::random_corpus(3, 400, 8) {
            evaluate(&e, Strategy::Lrp, 2_000);
            evaluate(&e, Strategy::Lrpgc, 2_000);
        }
        for e in crate::corpus::prelude_family().iter().step_by(3) {
            evaluate(e, Strategy::Lrpgc, 5_000);
        }
    }
}
