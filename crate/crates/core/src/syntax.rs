//! Abstract syntax of LRP expressions with types erased, the size measure,
//! variable bookkeeping and the structural predicates shared by the compiler,
//! the abstract machine and the calculus.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::{BuildHasher, BuildHasherDefault, Hash, Hasher};
use std::sync::{LazyLock, Mutex};

use rustc_hash::{FxHashMap, FxHashSet};

/// A variable, constructor or type constructor name.
///
/// Names are interned: equal strings share one allocation, so equality and
/// hashing work on the address and never read the text.
#[derive(Clone, Copy)]
pub struct Name(&'static str);

static INTERNED: LazyLock<Mutex<FxHashSet<&'static str>>> = LazyLock::new(Default::default);

impl Name {
    pub fn new(s: &str) -> Self {
        let mut table = INTERNED.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(&t) = table.get(s) {
            return Name(t);
        }
        let t: &'static str = Box::leak(s.into());
        table.insert(t);
        Name(t)
    }

    pub fn as_str(&self) -> &str {
        self.0
    }

    /// True for names written with symbol characters, like `++`.
    pub fn is_operator(&self) -> bool {
        self.0
            .chars()
            .next()
            .is_some_and(|c| !(c.is_alphanumeric() || c == '_'))
    }
}

impl PartialEq for Name {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.0, other.0)
    }
}

impl Eq for Name {}

impl Hash for Name {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_usize(self.0.as_ptr() as usize);
    }
}

impl PartialOrd for Name {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Name {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            Ordering::Equal
        } else {
            self.0.cmp(other.0)
        }
    }
}

/// Hasher for tables keyed by names. Interned names are allocated in
/// creation order, and this hasher keeps that order in the low bits, so a
/// table over names created together is filled and probed sequentially.
/// Only the top bits, which pick the probe tag, are mixed.
#[derive(Clone, Copy, Default)]
pub struct NameHasher(u64);

impl Hasher for NameHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0.rotate_left(8) ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn write_usize(&mut self, n: usize) {
        let a = (n as u64) >> 4;
        let tag = a.wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 57;
        self.0 = (a & ((1 << 57) - 1)) | (tag << 57);
    }
}

pub type NameBuildHasher = BuildHasherDefault<NameHasher>;
pub type NameMap<K, V> = HashMap<K, V, NameBuildHasher>;
pub type NameSet<K> = HashSet<K, NameBuildHasher>;

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl From<String> for Name {
    fn from(s: String) -> Self {
        Name::new(&s)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

pub type Binding = (Name, Expr);

/// LRP expression. Type abstractions, type applications and annotations
/// never reach this tree.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Expr {
    Var(Name),
    Lam(Name, Box<Expr>),
    App(Box<Expr>, Box<Expr>),
    Seq(Box<Expr>, Box<Expr>),
    /// Recursive let; at least one binding, binders pairwise distinct.
    LetRec(Vec<Binding>, Box<Expr>),
    Con(Name, Vec<Expr>),
    /// `case_K scrutinee of alts`, one alternative per constructor of `K`
    /// in declaration order.
    Case(Name, Box<Expr>, Vec<Alt>),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Alt {
    pub con: Name,
    pub binders: Vec<Name>,
    pub rhs: Expr,
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(Name::new(name))
    }

    pub fn lam(param: &str, body: Expr) -> Expr {
        Expr::Lam(Name::new(param), Box::new(body))
    }

    pub fn app(fun: Expr, arg: Expr) -> Expr {
        Expr::App(Box::new(fun), Box::new(arg))
    }

    pub fn seq(first: Expr, second: Expr) -> Expr {
        Expr::Seq(Box::new(first), Box::new(second))
    }

    pub fn con(name: &str, args: Vec<Expr>) -> Expr {
        Expr::Con(Name::new(name), args)
    }

    pub fn letrec(bindings: Vec<(&str, Expr)>, body: Expr) -> Expr {
        Expr::LetRec(
            bindings
                .into_iter()
                .map(|(n, e)| (Name::new(n), e))
                .collect(),
            Box::new(body),
        )
    }

    /// Peano numeral `Succ^n Zero`.
    pub fn peano(n: usize) -> Expr {
        let mut e = Expr::con("Zero", vec![]);
        for _ in 0..n {
            e = Expr::Con(Name::new("Succ"), vec![e]);
        }
        e
    }

    pub fn as_var(&self) -> Option<&Name> {
        match self {
            Expr::Var(x) => Some(x),
            _ => None,
        }
    }

    /// Placeholder used while a node is moved out during in-place rewriting.
    pub(crate) fn hole() -> Expr {
        Expr::Con(Name::new("<hole>"), Vec::new())
    }
}

impl Alt {
    pub fn new(con: &str, binders: &[&str], rhs: Expr) -> Alt {
        Alt {
            con: Name::new(con),
            binders: binders.iter().map(|b| Name::new(b)).collect(),
            rhs,
        }
    }
}

// ---------------------------------------------------------------------------
// Data declarations

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ConSig {
    pub name: Name,
    pub arity: usize,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DataDecl {
    pub tycon: Name,
    pub cons: Vec<ConSig>,
}

/// Registry of declared type constructors and their data constructors.
#[derive(Clone, Debug)]
pub struct DataEnv {
    decls: Vec<DataDecl>,
    by_con: HashMap<Name, (usize, usize)>,
    by_tycon: HashMap<Name, usize>,
}

impl DataEnv {
    pub fn empty() -> Self {
        DataEnv {
            decls: Vec::new(),
            by_con: HashMap::new(),
            by_tycon: HashMap::new(),
        }
    }

    /// Bool, List, Nat and the tuple types `T2` .. `T10`.
    pub fn builtin() -> Self {
        let mut env = DataEnv::empty();
        let decl = |ty: &str, cons: &[(&str, usize)]| DataDecl {
            tycon: Name::new(ty),
            cons: cons
                .iter()
                .map(|(c, a)| ConSig {
                    name: Name::new(c),
                    arity: *a,
                })
                .collect(),
        };
        env.declare(decl("Bool", &[("True", 0), ("False", 0)])).unwrap();
        env.declare(decl("List", &[("Nil", 0), ("Cons", 2)])).unwrap();
        env.declare(decl("Nat", &[("Zero", 0), ("Succ", 1)])).unwrap();
        for n in 2..=10 {
            let con = format!("T{n}");
            env.declare(decl(&format!("Tuple{n}"), &[(&con, n)])).unwrap();
        }
        env
    }

    /// Adds a declaration; constructor and type names must be new.
    pub fn declare(&mut self, decl: DataDecl) -> Result<(), String> {
        if self.by_tycon.contains_key(&decl.tycon) {
            return Err(format!("type constructor {} declared twice", decl.tycon));
        }
        let mut seen = HashSet::new();
        for c in &decl.cons {
            if self.by_con.contains_key(&c.name) || !seen.insert(c.name.clone()) {
                return Err(format!("data constructor {} declared twice", c.name));
            }
        }
        let idx = self.decls.len();
        for (i, c) in decl.cons.iter().enumerate() {
            self.by_con.insert(c.name.clone(), (idx, i));
        }
        self.by_tycon.insert(decl.tycon.clone(), idx);
        self.decls.push(decl);
        Ok(())
    }

    pub fn arity(&self, con: &Name) -> Option<usize> {
        self.by_con
            .get(con)
            .map(|&(d, i)| self.decls[d].cons[i].arity)
    }

    pub fn tycon_of(&self, con: &Name) -> Option<&Name> {
        self.by_con.get(con).map(|&(d, _)| &self.decls[d].tycon)
    }

    pub fn constructors(&self, tycon: &Name) -> Option<&[ConSig]> {
        self.by_tycon.get(tycon).map(|&d| &self.decls[d].cons[..])
    }

    pub fn decls(&self) -> &[DataDecl] {
        &self.decls
    }
}

impl Default for DataEnv {
    fn default() -> Self {
        DataEnv::builtin()
    }
}

// ---------------------------------------------------------------------------
// Size

/// Syntax-node count: variables cost nothing, `letrec` adds no node of its
/// own, every abstraction, application, `seq`, constructor application,
/// `case` and case alternative adds one.
pub fn size(e: &Expr) -> usize {
    match e {
        Expr::Var(_) => 0,
        Expr::Lam(_, body) => 1 + size(body),
        Expr::App(f, a) | Expr::Seq(f, a) => 1 + size(f) + size(a),
        Expr::LetRec(binds, body) => size(body) + binds.iter().map(|(_, r)| size(r)).sum::<usize>(),
        Expr::Con(_, args) => 1 + args.iter().map(size).sum::<usize>(),
        Expr::Case(_, scrut, alts) => 1 + size(scrut) + alts_size(alts),
    }
}

/// Sum of the alternative sizes, each `1 + size(rhs)`.
pub fn alts_size(alts: &[Alt]) -> usize {
    alts.iter().map(|a| 1 + size(&a.rhs)).sum()
}

// ---------------------------------------------------------------------------
// Free and bound variables

pub fn free_vars(e: &Expr) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    let mut bound = Bound::default();
    collect_free(e, &mut bound, &mut |n| {
        out.insert(n.clone());
    });
    out
}

/// Free variables in first-occurrence order, without duplicates.
pub fn free_vars_ordered(e: &Expr) -> Vec<Name> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut bound = Bound::default();
    collect_free(e, &mut bound, &mut |n| {
        if seen.insert(n.clone()) {
            out.push(n.clone());
        }
    });
    out
}

pub fn alts_free_vars(alts: &[Alt]) -> Vec<Name> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut bound = Bound::default();
    for alt in alts {
        let mark = bound.len();
        bound.extend(&alt.binders);
        collect_free(&alt.rhs, &mut bound, &mut |n| {
            if seen.insert(n.clone()) {
                out.push(n.clone());
            }
        });
        bound.truncate(mark);
    }
    out
}

pub fn is_free_in(x: &Name, e: &Expr) -> bool {
    let mut found = false;
    let mut bound = Bound::default();
    collect_free(e, &mut bound, &mut |n| found |= n == x);
    found
}

/// Names in scope during a traversal, with multiplicity for shadowing.
#[derive(Default)]
struct Bound<'a> {
    counts: NameMap<&'a Name, u32>,
    stack: Vec<&'a Name>,
}

impl<'a> Bound<'a> {
    fn push(&mut self, x: &'a Name) {
        *self.counts.entry(x).or_default() += 1;
        self.stack.push(x);
    }

    fn extend(&mut self, xs: impl IntoIterator<Item = &'a Name>) {
        xs.into_iter().for_each(|x| self.push(x));
    }

    fn len(&self) -> usize {
        self.stack.len()
    }

    fn truncate(&mut self, mark: usize) {
        while self.stack.len() > mark {
            let x = self.stack.pop().expect("non-empty scope");
            match self.counts.get_mut(x) {
                Some(c) if *c > 1 => *c -= 1,
                _ => {
                    self.counts.remove(x);
                }
            }
        }
    }

    fn contains(&self, x: &Name) -> bool {
        self.counts.contains_key(x)
    }
}

fn collect_free<'a>(e: &'a Expr, bound: &mut Bound<'a>, emit: &mut dyn FnMut(&'a Name)) {
    match e {
        Expr::Var(x) => {
            if !bound.contains(x) {
                emit(x);
            }
        }
        Expr::Lam(x, body) => {
            let mark = bound.len();
            bound.push(x);
            collect_free(body, bound, emit);
            bound.truncate(mark);
        }
        Expr::App(f, a) | Expr::Seq(f, a) => {
            collect_free(f, bound, emit);
            collect_free(a, bound, emit);
        }
        Expr::LetRec(binds, body) => {
            let mark = bound.len();
            bound.extend(binds.iter().map(|(n, _)| n));
            for (_, rhs) in binds {
                collect_free(rhs, bound, emit);
            }
            collect_free(body, bound, emit);
            bound.truncate(mark);
        }
        Expr::Con(_, args) => {
            for a in args {
                collect_free(a, bound, emit);
            }
        }
        Expr::Case(_, scrut, alts) => {
            collect_free(scrut, bound, emit);
            for alt in alts {
                let mark = bound.len();
                bound.extend(&alt.binders);
                collect_free(&alt.rhs, bound, emit);
                bound.truncate(mark);
            }
        }
    }
}

pub fn bound_vars(e: &Expr) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    visit_binders(e, &mut |n| {
        out.insert(n.clone());
    });
    out
}

pub(crate) fn visit_binders<'a>(e: &'a Expr, f: &mut dyn FnMut(&'a Name)) {
    match e {
        Expr::Var(_) => {}
        Expr::Lam(x, body) => {
            f(x);
            visit_binders(body, f);
        }
        Expr::App(a, b) | Expr::Seq(a, b) => {
            visit_binders(a, f);
            visit_binders(b, f);
        }
        Expr::LetRec(binds, body) => {
            for (n, rhs) in binds {
                f(n);
                visit_binders(rhs, f);
            }
            visit_binders(body, f);
        }
        Expr::Con(_, args) => args.iter().for_each(|a| visit_binders(a, f)),
        Expr::Case(_, scrut, alts) => {
            visit_binders(scrut, f);
            for alt in alts {
                alt.binders.iter().for_each(&mut *f);
                visit_binders(&alt.rhs, f);
            }
        }
    }
}

/// Every variable name occurring in `e`, bound or free.
pub fn all_names<S: BuildHasher>(e: &Expr, out: &mut HashSet<Name, S>) {
    match e {
        Expr::Var(x) => {
            out.insert(x.clone());
        }
        Expr::Lam(x, body) => {
            out.insert(x.clone());
            all_names(body, out);
        }
        Expr::App(a, b) | Expr::Seq(a, b) => {
            all_names(a, out);
            all_names(b, out);
        }
        Expr::LetRec(binds, body) => {
            for (n, rhs) in binds {
                out.insert(n.clone());
                all_names(rhs, out);
            }
            all_names(body, out);
        }
        Expr::Con(_, args) => args.iter().for_each(|a| all_names(a, out)),
        Expr::Case(_, scrut, alts) => {
            all_names(scrut, out);
            for alt in alts {
                out.extend(alt.binders.iter().cloned());
                all_names(&alt.rhs, out);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Structural predicates

/// Abstraction or constructor application.
pub fn is_value(e: &Expr) -> bool {
    matches!(e, Expr::Lam(..) | Expr::Con(..))
}

/// Weak head normal form: a value, `letrec Env in v`, or a `letrec` whose
/// body is the end of a variable chain leading to a constructor binding.
pub fn is_whnf(e: &Expr) -> bool {
    match e {
        Expr::Lam(..) | Expr::Con(..) => true,
        Expr::LetRec(binds, body) => match &**body {
            b if is_value(b) => true,
            Expr::Var(x) => {
                let env: HashMap<&Name, &Expr> = binds.iter().map(|(n, r)| (n, r)).collect();
                let mut seen = HashSet::new();
                let mut cur = x;
                loop {
                    if !seen.insert(cur) {
                        return false;
                    }
                    match env.get(cur) {
                        Some(Expr::Con(..)) => return true,
                        Some(Expr::Var(next)) => cur = next,
                        _ => return false,
                    }
                }
            }
            _ => false,
        },
        _ => false,
    }
}

/// Arguments of applications and constructor applications, and the second
/// argument of `seq`, are all variables.
pub fn is_machine_expr(e: &Expr) -> bool {
    match e {
        Expr::Var(_) => true,
        Expr::Lam(_, body) => is_machine_expr(body),
        Expr::App(f, a) | Expr::Seq(f, a) => a.as_var().is_some() && is_machine_expr(f),
        Expr::LetRec(binds, body) => {
            binds.iter().all(|(_, r)| is_machine_expr(r)) && is_machine_expr(body)
        }
        Expr::Con(_, args) => args.iter().all(|a| a.as_var().is_some()),
        Expr::Case(_, scrut, alts) => {
            is_machine_expr(scrut) && alts.iter().all(|a| is_machine_expr(&a.rhs))
        }
    }
}

// ---------------------------------------------------------------------------
// Fresh names

fn base_of(hint: &str) -> &str {
    let trimmed = hint.trim_end_matches(|c: char| c.is_ascii_digit());
    if trimmed.is_empty() {
        hint
    } else {
        trimmed
    }
}

/// A name not in `used`: the hint itself if free, otherwise the hint's
/// non-numeric stem followed by the smallest free numeric suffix.
pub fn fresh_name(hint: &str, used: &HashSet<Name>) -> Name {
    if !used.contains(&Name::new(hint)) {
        return Name::new(hint);
    }
    let base = base_of(hint);
    (1..)
        .map(|i| Name::from(format!("{base}{i}")))
        .find(|n| !used.contains(n))
        .unwrap()
}

/// Deterministic fresh-name source that remembers every name it has seen
/// or produced.
#[derive(Clone, Debug, Default)]
pub struct NameSupply {
    used: NameSet<Name>,
    next: FxHashMap<String, usize>,
}

impl NameSupply {
    pub fn new() -> Self {
        NameSupply::default()
    }

    /// Supply that avoids every name occurring in `e`.
    pub fn for_expr(e: &Expr) -> Self {
        let mut s = NameSupply::new();
        all_names(e, &mut s.used);
        s
    }

    pub fn reserve(&mut self, n: &Name) {
        self.used.insert(n.clone());
    }

    pub fn reserve_expr(&mut self, e: &Expr) {
        all_names(e, &mut self.used);
    }

    pub fn is_used(&self, n: &Name) -> bool {
        self.used.contains(n)
    }

    pub fn fresh(&mut self, hint: &str) -> Name {
        let candidate = Name::new(hint);
        if !self.used.contains(&candidate) {
            self.used.insert(candidate.clone());
            return candidate;
        }
        let base = if candidate.is_operator() {
            "op".to_string()
        } else {
            base_of(hint).to_string()
        };
        let mut i = self.next.get(&base).copied().unwrap_or(1);
        loop {
            let n = Name::from(format!("{base}{i}"));
            i += 1;
            if !self.used.contains(&n) {
                self.next.insert(base, i);
                self.used.insert(n.clone());
                return n;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Capture-avoiding variable renaming

/// Simultaneous variable-for-variable substitution `e[to/from]`, performed
/// in place. Binders that would capture a substituted name are renamed with
/// names drawn from `supply`.
pub fn rename_vars(e: &mut Expr, map: &HashMap<Name, Name>, supply: &mut NameSupply) {
    if map.is_empty() {
        return;
    }
    let targets: HashSet<Name> = map.values().cloned().collect();
    rename_rec(e, map, &targets, supply);
}

pub fn rename_var(e: &mut Expr, from: &Name, to: &Name, supply: &mut NameSupply) {
    if from == to {
        return;
    }
    let mut map = HashMap::with_capacity(1);
    map.insert(from.clone(), to.clone());
    rename_vars(e, &map, supply);
}

/// Adjusts `map` for a scope introducing `binders`. Returns the new map
/// (if it changed) and the renamings applied to the binders themselves.
fn enter_scope(
    binders: &[Name],
    map: &HashMap<Name, Name>,
    targets: &HashSet<Name>,
    supply: &mut NameSupply,
) -> Option<(HashMap<Name, Name>, Vec<Option<Name>>)> {
    let touches = binders
        .iter()
        .any(|b| map.contains_key(b) || targets.contains(b));
    if !touches {
        return None;
    }
    let mut inner = map.clone();
    let mut renamed = Vec::with_capacity(binders.len());
    for b in binders {
        inner.remove(b);
    }
    for b in binders {
        if targets.contains(b) {
            let nb = supply.fresh(b.as_str());
            inner.insert(b.clone(), nb.clone());
            renamed.push(Some(nb));
        } else {
            renamed.push(None);
        }
    }
    Some((inner, renamed))
}

fn rename_rec(
    e: &mut Expr,
    map: &HashMap<Name, Name>,
    targets: &HashSet<Name>,
    supply: &mut NameSupply,
) {
    match e {
        Expr::Var(x) => {
            if let Some(y) = map.get(x) {
                *x = y.clone();
            }
        }
        Expr::Lam(x, body) => match enter_scope(std::slice::from_ref(x), map, targets, supply) {
            None => rename_rec(body, map, targets, supply),
            Some((inner, renamed)) => {
                if let Some(nx) = &renamed[0] {
                    *x = nx.clone();
                }
                if !inner.is_empty() {
                    let t: HashSet<Name> = inner.values().cloned().collect();
                    rename_rec(body, &inner, &t, supply);
                }
            }
        },
        Expr::App(a, b) | Expr::Seq(a, b) => {
            rename_rec(a, map, targets, supply);
            rename_rec(b, map, targets, supply);
        }
        Expr::LetRec(binds, body) => {
            let names: Vec<Name> = binds.iter().map(|(n, _)| n.clone()).collect();
            match enter_scope(&names, map, targets, supply) {
                None => {
                    for (_, rhs) in binds.iter_mut() {
                        rename_rec(rhs, map, targets, supply);
                    }
                    rename_rec(body, map, targets, supply);
                }
                Some((inner, renamed)) => {
                    for ((n, _), r) in binds.iter_mut().zip(&renamed) {
                        if let Some(nn) = r {
                            *n = nn.clone();
                        }
                    }
                    if !inner.is_empty() {
                        let t: HashSet<Name> = inner.values().cloned().collect();
                        for (_, rhs) in binds.iter_mut() {
                            rename_rec(rhs, &inner, &t, supply);
                        }
                        rename_rec(body, &inner, &t, supply);
                    }
                }
            }
        }
        Expr::Con(_, args) => {
            for a in args {
                rename_rec(a, map, targets, supply);
            }
        }
        Expr::Case(_, scrut, alts) => {
            rename_rec(scrut, map, targets, supply);
            rename_alts_rec(alts, map, targets, supply);
        }
    }
}

fn rename_alts_rec(
    alts: &mut [Alt],
    map: &HashMap<Name, Name>,
    targets: &HashSet<Name>,
    supply: &mut NameSupply,
) {
    for alt in alts {
        match enter_scope(&alt.binders, map, targets, supply) {
            None => rename_rec(&mut alt.rhs, map, targets, supply),
            Some((inner, renamed)) => {
                for (b, r) in alt.binders.iter_mut().zip(&renamed) {
                    if let Some(nb) = r {
                        *b = nb.clone();
                    }
                }
                if !inner.is_empty() {
                    let t: HashSet<Name> = inner.values().cloned().collect();
                    rename_rec(&mut alt.rhs, &inner, &t, supply);
                }
            }
        }
    }
}

/// Renaming applied to case alternatives (used for stack entries).
pub fn rename_alts(alts: &mut [Alt], map: &HashMap<Name, Name>, supply: &mut NameSupply) {
    if map.is_empty() {
        return;
    }
    let targets: HashSet<Name> = map.values().cloned().collect();
    rename_alts_rec(alts, map, &targets, supply);
}

/// Alpha-equivalence up to consistent renaming of bound variables.
pub fn alpha_eq(a: &Expr, b: &Expr) -> bool {
    fn go(a: &Expr, b: &Expr, env: &mut Vec<(Name, Name)>) -> bool {
        match (a, b) {
            (Expr::Var(x), Expr::Var(y)) => {
                for (l, r) in env.iter().rev() {
                    if l == x || r == y {
                        return l == x && r == y;
                    }
                }
                x == y
            }
            (Expr::Lam(x, s), Expr::Lam(y, t)) => {
                env.push((x.clone(), y.clone()));
                let ok = go(s, t, env);
                env.pop();
                ok
            }
            (Expr::App(f, x), Expr::App(g, y)) | (Expr::Seq(f, x), Expr::Seq(g, y)) => {
                go(f, g, env) && go(x, y, env)
            }
            (Expr::LetRec(b1, s), Expr::LetRec(b2, t)) => {
                if b1.len() != b2.len() {
                    return false;
                }
                let mark = env.len();
                env.extend(b1.iter().zip(b2).map(|((x, _), (y, _))| (x.clone(), y.clone())));
                let ok = b1.iter().zip(b2).all(|((_, r1), (_, r2))| go(r1, r2, env)) && go(s, t, env);
                env.truncate(mark);
                ok
            }
            (Expr::Con(c, xs), Expr::Con(d, ys)) => {
                c == d && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| go(x, y, env))
            }
            (Expr::Case(k1, s, a1), Expr::Case(k2, t, a2)) => {
                k1 == k2
                    && a1.len() == a2.len()
                    && go(s, t, env)
                    && a1.iter().zip(a2).all(|(x, y)| {
                        if x.con != y.con || x.binders.len() != y.binders.len() {
                            return false;
                        }
                        let mark = env.len();
                        env.extend(x.binders.iter().cloned().zip(y.binders.iter().cloned()));
                        let ok = go(&x.rhs, &y.rhs, env);
                        env.truncate(mark);
                        ok
                    })
            }
            _ => false,
        }
    }
    go(a, b, &mut Vec::new())
}

// ---------------------------------------------------------------------------
// Pretty printing in surface syntax

const PREC_EXPR: u8 = 0;
const PREC_OP: u8 = 1;
const PREC_APP: u8 = 2;
const PREC_ATOM: u8 = 3;

fn peano_value(e: &Expr) -> Option<usize> {
    let mut n = 0;
    let mut cur = e;
    loop {
        match cur {
            Expr::Con(c, args) if c.as_str() == "Zero" && args.is_empty() => return Some(n),
            Expr::Con(c, args) if c.as_str() == "Succ" && args.len() == 1 => {
                n += 1;
                cur = &args[0];
            }
            _ => return None,
        }
    }
}

fn write_name(out: &mut String, n: &Name) {
    if n.is_operator() {
        out.push('(');
        out.push_str(n.as_str());
        out.push(')');
    } else {
        out.push_str(n.as_str());
    }
}

fn write_expr(out: &mut String, e: &Expr, prec: u8) {
    let paren = |out: &mut String, needed: bool, f: &dyn Fn(&mut String)| {
        if needed {
            out.push('(');
        }
        f(out);
        if needed {
            out.push(')');
        }
    };
    match e {
        Expr::Var(x) => write_name(out, x),
        Expr::Lam(..) => paren(out, prec > PREC_EXPR, &|out| {
            out.push('\\');
            let mut cur = e;
            let mut first = true;
            while let Expr::Lam(x, body) = cur {
                if !first {
                    out.push(',');
                }
                first = false;
                out.push_str(x.as_str());
                cur = body;
            }
            out.push_str(". ");
            write_expr(out, cur, PREC_EXPR);
        }),
        Expr::App(f, a) => paren(out, prec > PREC_APP, &|out| {
            write_expr(out, f, PREC_APP);
            out.push(' ');
            write_expr(out, a, PREC_ATOM);
        }),
        Expr::Seq(a, b) => paren(out, prec > PREC_APP, &|out| {
            out.push_str("seq ");
            write_expr(out, a, PREC_ATOM);
            out.push(' ');
            write_expr(out, b, PREC_ATOM);
        }),
        Expr::LetRec(binds, body) => paren(out, prec > PREC_EXPR, &|out| {
            out.push_str("letrec ");
            for (i, (n, rhs)) in binds.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                write_name(out, n);
                out.push_str(" = ");
                write_expr(out, rhs, PREC_EXPR);
            }
            out.push_str(" in ");
            write_expr(out, body, PREC_EXPR);
        }),
        Expr::Con(c, args) => {
            if let Some(n) = peano_value(e).filter(|&n| n > 0) {
                out.push_str(&n.to_string());
            } else if c.as_str() == "Nil" && args.is_empty() {
                out.push_str("[]");
            } else if c.as_str() == "Cons" && args.len() == 2 {
                paren(out, prec > PREC_OP, &|out| {
                    write_expr(out, &args[0], PREC_APP);
                    out.push_str(" : ");
                    write_expr(out, &args[1], PREC_OP);
                });
            } else if args.is_empty() {
                out.push_str(c.as_str());
            } else {
                paren(out, prec > PREC_APP, &|out| {
                    out.push_str(c.as_str());
                    for a in args {
                        out.push(' ');
                        write_expr(out, a, PREC_ATOM);
                    }
                });
            }
        }
        Expr::Case(_, scrut, alts) => paren(out, prec > PREC_EXPR, &|out| {
            out.push_str("case ");
            write_expr(out, scrut, PREC_EXPR);
            out.push_str(" of { ");
            for (i, alt) in alts.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                out.push_str(alt.con.as_str());
                for b in &alt.binders {
                    out.push(' ');
                    out.push_str(b.as_str());
                }
                out.push_str(" -> ");
                write_expr(out, &alt.rhs, PREC_EXPR);
            }
            out.push_str(" }");
        }),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self, PREC_EXPR);
        f.write_str(&s)
    }
}

impl fmt::Display for Alt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.con)?;
        for b in &self.binders {
            write!(f, " {b}")?;
        }
        write!(f, " -> {}", self.rhs)
    }
}
